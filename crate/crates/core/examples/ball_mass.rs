//! Monte-Carlo Bowen-ball masses under the uniform product measure, against the exact bracket.

use bowen_mdim::measure::{self, MassSampler, MeasureModel};
use bowen_mdim::SystemModel;

fn main() -> bowen_mdim::Result<()> {
    let eps = 1.0 / 16.0;
    let sys = SystemModel::grid_shift(128).two_sided().eps_min(eps).window(14).build()?;
    let mu = MeasureModel::product_uniform(&sys, 1);
    let x = mu.sample(1, measure::stream_id(1, 0))?.remove(0);
    for n in 1..=4 {
        let (lo, hi) = measure::ball_mass_bracket(&mu, n, eps)?;
        let m = measure::estimate_ball_mass(&mu, &x, n, eps, 20_000, MassSampler::Sequential, n as u64)?;
        println!("n={n}: mass {:.3e}, 99% CI ({:.3e}, {:.3e}), bracket [{lo:.1e}, {hi:.1e}]", m.value, m.ci.0, m.ci.1);
    }
    let one = SystemModel::grid_shift(32).eps_min(eps).build()?;
    let mu = MeasureModel::product_uniform(&one, 1);
    let x = mu.sample(1, 0)?.remove(0);
    for s in [MassSampler::Plain, MassSampler::Conditioned, MassSampler::Sequential] {
        let m = measure::estimate_ball_mass(&mu, &x, 1, 0.25, 20_000, s, 9)?;
        println!("one-sided {s:?}: {:.4e} ({} hits)", m.value, m.hits);
    }
    Ok(())
}
