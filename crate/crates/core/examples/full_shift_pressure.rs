//! Pressure of the two-symbol full shift at zero potential, oracle vs enumerated witnesses.

use bowen_mdim::pressure::{self, PressureOptions, Witness};
use bowen_mdim::{Potential, SystemModel};

fn main() -> bowen_mdim::Result<()> {
    let sys = SystemModel::full_shift(2).build()?;
    let zero = Potential::constant(0.0);
    for (label, witness) in [("oracle", Witness::Oracle), ("greedy", Witness::Greedy)] {
        let opts = PressureOptions::with_witness(witness);
        for eps in [0.6, 0.3] {
            let est = pressure::pressure_estimate(&sys, &zero, eps, &[2, 4, 6], &opts)?;
            println!("{label:>6} eps={eps}: P = {:.6} (log 2 = {:.6})", est.pressure, 2f64.ln());
        }
    }
    let bracket = pressure::analytic_oracle_pressure(&sys, &zero, 0.3)?;
    for n in 1..=4 {
        let (lo, hi) = bracket.log_sum_bounds(n);
        println!("log s_{n}(0.3) in [{lo:.4}, {hi:.4}]");
    }
    Ok(())
}
