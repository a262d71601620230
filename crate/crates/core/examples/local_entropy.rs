//! Brin-Katok, Katok and near-generic entropies of a Bernoulli measure.

use bowen_mdim::entropy::{self, KatokOptions, LocalOptions, PsOptions};
use bowen_mdim::measure::MeasureModel;
use bowen_mdim::SystemModel;

fn main() -> bowen_mdim::Result<()> {
    let sys = SystemModel::full_shift(2).window(24).build()?;
    let mu = MeasureModel::bernoulli(&sys, vec![0.4, 0.6], 3)?;
    let h = -(0.4f64 * 0.4f64.ln() + 0.6 * 0.6f64.ln());
    println!("measure entropy {h:.4}");
    let local = LocalOptions { x_samples: 12, mass_samples: 4000, ..LocalOptions::default() };
    let (lo, hi) = entropy::brin_katok_bounds(&mu, 0.3, &[2, 4, 6, 8], &local)?;
    println!("BK eps=0.3: lower {:.4} CI {:.4?}, upper {:.4} CI {:.4?}", lo.extrapolated, lo.ci, hi.extrapolated, hi.ci);
    let katok = entropy::katok_entropy(&mu, 0.6, 0.5, &[6, 8, 10], &KatokOptions { pool_size: 6000, ..KatokOptions::default() })?;
    println!("Katok eps=0.6 delta=0.5: {:.4}", katok.extrapolated);
    let ps = entropy::ps_entropy(&mu, 0.6, &[6, 8, 10], &PsOptions::new(&sys, vec![0.1], 6))?;
    println!("PS eps=0.6: {:.4}", ps.extrapolated);
    Ok(())
}
