//! Critical exponent of a finite word set per scale, fitted against log(1/eps).

use bowen_mdim::caratheodory::{self, Structure};
use bowen_mdim::systems::{PotentialSpec, SystemFamily};
use bowen_mdim::{Sidedness, SystemModel};

fn main() -> bowen_mdim::Result<()> {
    let family = SystemFamily::grid_per_scale(Sidedness::OneSided);
    let words = |sys: &SystemModel, _eps: f64| sys.enumerate_points(2);
    for s in [Structure::Cover, Structure::Bs] {
        let e = caratheodory::subset_mdim(&family, &words, &PotentialSpec::constant(1.0), s, &[0.5, 1.0 / 3.0, 0.25], 1, 2, 1e-6)?;
        let lambdas: Vec<String> = e.critical.iter().map(|c| format!("{:.4}", c.lambda)).collect();
        println!("{s:?}: lambda* = [{}], |Z| = {:?}, slope {:.4}", lambdas.join(", "), e.z_sizes, e.estimate.slope);
    }
    Ok(())
}
