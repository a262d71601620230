//! Cover, packing and BS valuations on a small word set, with critical exponents.

use bowen_mdim::caratheodory::{self, Instance, InstanceOptions, Structure};
use bowen_mdim::{Potential, SystemModel};

fn main() -> bowen_mdim::Result<()> {
    let sys = SystemModel::full_shift(2).build()?;
    let z: Vec<_> = sys.enumerate_points(3)?.into_iter().step_by(2).collect();
    let phi = Potential::coordinate(vec![0.5, 1.5]);
    let inst = Instance::new(&sys, &z, &phi, InstanceOptions::new(1, 3, 0.4))?;
    for s in [Structure::Cover, Structure::Packing, Structure::Bs, Structure::PackingBs, Structure::Weighted] {
        let v = inst.value(s, 1.0)?;
        let c = inst.critical(s, 1e-8)?;
        println!("{s:?}: log value at lambda=1 {:.5}, critical lambda {:.6}", v.log_value, c.lambda);
    }
    let id = caratheodory::substitution_identity(&inst, 0.8)?;
    println!("substitution residuals: cover {:.1e}, packing {:.1e}", id.cover_residual, id.packing_residual);
    Ok(())
}
