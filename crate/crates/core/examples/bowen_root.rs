//! Root of beta -> mdim(phi - beta psi) by bisection.

use bowen_mdim::pressure::{self, PressureOptions};
use bowen_mdim::systems::{PotentialSpec, SystemFamily};
use bowen_mdim::Sidedness;

fn main() -> bowen_mdim::Result<()> {
    let family = SystemFamily::grid_per_scale(Sidedness::OneSided);
    let eps: Vec<f64> = (3..=6).map(|j| 2f64.powi(-j)).collect();
    let opts = PressureOptions::default();
    for (phi, psi) in [(0.0, 1.0), (0.5, 1.0), (0.0, 2.0)] {
        let (p, q) = (PotentialSpec::constant(phi), PotentialSpec::constant(psi));
        let f = |beta: f64| Ok(pressure::mdim_estimate(&family, &p.combine(1.0, &q, -beta), &eps, &[2, 4, 6, 8], &opts)?.slope);
        let r = pressure::solve_bowen_root(&f, psi, psi, 1e-4)?;
        println!("phi={phi} psi={psi}: beta = {:.5} after {} bisections", r.beta, r.iterations);
    }
    Ok(())
}
