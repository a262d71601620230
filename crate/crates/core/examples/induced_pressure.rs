//! Induced pressure over return-time levels: separated (P) and spanning (Q) forms.

use bowen_mdim::pressure::{self, InducedWitness, PressureOptions, Witness};
use bowen_mdim::systems::PotentialSpec;
use bowen_mdim::SystemModel;

fn main() -> bowen_mdim::Result<()> {
    let sys = SystemModel::grid_shift(3).build()?;
    let opts = PressureOptions::with_witness(Witness::Greedy);
    let phi = PotentialSpec::Affine { offset: 0.0, slope: 1.0 }.at(&sys)?;
    let psi = PotentialSpec::Affine { offset: 1.0, slope: 1.0 }.at(&sys)?;
    let eps = 1.0 / 3.0;
    for t in [1.0, 2.0, 3.0, 4.0] {
        let p = pressure::induced_record(&sys, &phi, &psi, t, eps, InducedWitness::Separated, &opts)?;
        let q = pressure::induced_record(&sys, &phi, &psi, t, eps, InducedWitness::Spanning, &opts)?;
        println!("T={t}: log P = {:.4}, log Q = {:.4}", p.log_value, q.log_value);
    }
    Ok(())
}
