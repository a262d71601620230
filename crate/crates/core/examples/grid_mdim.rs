//! Mean dimension of the grid surrogate: k = 1/eps symbols per scale.

use bowen_mdim::pressure::{self, PressureOptions};
use bowen_mdim::systems::{PotentialSpec, SystemFamily};
use bowen_mdim::Sidedness;

fn main() -> bowen_mdim::Result<()> {
    let family = SystemFamily::grid_per_scale(Sidedness::OneSided);
    let eps: Vec<f64> = (3..=8).map(|j| 2f64.powi(-j)).collect();
    let phi = PotentialSpec::Affine { offset: 0.0, slope: 1.0 };
    for (name, spec) in [("zero", PotentialSpec::constant(0.0)), ("affine", phi)] {
        let d = pressure::mdim_estimate(&family, &spec, &eps, &[2, 4, 6, 8], &PressureOptions::default())?;
        println!("phi = {name}");
        for s in &d.per_eps {
            println!("  eps={:<10} P={:.5}  P/log(1/eps)={:.4}", s.eps, s.pressure, s.max_ratio);
        }
        println!("  slope {:.4}, max ratio {:.4}", d.slope, d.max_ratio);
    }
    Ok(())
}
