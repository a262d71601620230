//! Drives the command runner from an inline config and prints the JSON records.

use bowen_mdim::config::ExperimentConfig;
use bowen_mdim::report;
use bowen_mdim::runner::{self, Command};

const CONFIG: &str = "seed = 1
[system]
kind = grid
k = auto
[schedule]
eps = 2^-3, 2^-4, 2^-5
n = 2, 4
";

fn main() -> bowen_mdim::Result<()> {
    let cfg = ExperimentConfig::parse(CONFIG, None)?;
    let out = runner::run(&Command::EstimateMdim, Some(&cfg), None)?;
    report::write_records(std::io::stdout(), &out.records, false)?;
    report::write_summary(std::io::stderr(), &out.summary)?;
    std::process::exit(out.exit_code());
}
