//! Runs a verification suite and tallies its assertions by name.

use bowen_mdim::verify::{self, Suite};
use std::collections::BTreeMap;

fn main() -> bowen_mdim::Result<()> {
    let suite: Suite = std::env::args().nth(1).unwrap_or_else(|| "counting".into()).parse()?;
    let results = verify::run_suite(suite, 7)?;
    let mut tally: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for a in &results {
        let t = tally.entry(a.name.as_str()).or_default();
        t.0 += a.passed as usize;
        t.1 += 1;
    }
    for (name, (ok, all)) in tally {
        println!("{name:<36} {ok}/{all}");
    }
    Ok(())
}
