//! Separated and spanning counts on word sets, and the 5r disjointification.

use bowen_mdim::bowen::{self, BallSpec, Caps, SetFamily};
use bowen_mdim::SystemModel;

fn main() -> bowen_mdim::Result<()> {
    let sys = SystemModel::full_shift(2).build()?;
    let z = sys.enumerate_points(4)?;
    for n in 1..=3 {
        for eps in [0.7, 0.3] {
            let c = bowen::count_separated_spanning(&sys, &z, n, eps, Caps::default())?;
            println!("n={n} eps={eps}: r = {:?}, s = {:?} (greedy s >= {}, r <= {})", c.r_exact, c.s_exact, c.s_lower, c.r_upper);
        }
    }
    let balls = ["0110", "0111", "1000", "0100"]
        .iter()
        .zip([0.9, 0.4, 0.6, 0.2])
        .map(|(w, r)| {
            let word: Vec<u16> = w.bytes().map(|b| (b - b'0') as u16).collect();
            BallSpec::new(sys.point_from_word(&word)?, 2, r, true)
        })
        .collect::<bowen_mdim::Result<Vec<_>>>()?;
    let family = SetFamily::unweighted(balls);
    let universe = sys.enumerate_points(5)?;
    let d = bowen::five_r_disjointify(&sys, &family, &universe)?;
    let chk = bowen::verify_five_r(&sys, &family, &d, &universe);
    println!("5r: kept balls {:?}, disjoint {}, covered {}", d.kept, chk.disjoint, chk.covered);
    Ok(())
}
