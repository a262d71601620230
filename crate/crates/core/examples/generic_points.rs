//! All measure-theoretic dimension estimates of the uniform product measure side by side.

use bowen_mdim::entropy::{self, GmuOptions};
use bowen_mdim::measure::MeasureModel;
use bowen_mdim::systems::SystemFamily;
use bowen_mdim::{Sidedness, SystemModel};

fn main() -> bowen_mdim::Result<()> {
    let family = SystemFamily::grid_per_scale(Sidedness::OneSided);
    let measure_at = |s: &SystemModel| Ok(MeasureModel::product_uniform(s, 5));
    let g = entropy::gmu_mdim_estimate(&family, &measure_at, &[0.5, 1.0 / 3.0, 0.25], &GmuOptions::default())?;
    for (name, d) in [("ps", &g.ps), ("katok", &g.katok), ("bk-lower", &g.bk_lower), ("bk-upper", &g.bk_upper), ("bowen-subset", &g.bowen_subset)] {
        println!("{name:>12}: slope {:.3}, max ratio {:.3}", d.slope, d.max_ratio);
    }
    println!("generic word counts {:?}", g.generic_counts);
    Ok(())
}
