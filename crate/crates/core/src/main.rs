use bowen_mdim::config::ExperimentConfig;
use bowen_mdim::report::{self, SummaryRow};
use bowen_mdim::runner::{self, Command, EntropyQuantity, RunOutput};
use bowen_mdim::verify::Suite;
use clap::{Parser, Subcommand};
use std::fs::File;
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "bowen-mdim", version, about = "Finite-scale mean dimension estimators on shift systems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Records as JSON lines; the CSV summary goes to PATH.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Leave the timestamp out of every record.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Pressure per scale and the mean dimension fit
    EstimateMdim(Common),
    /// Induced pressure over return-time levels
    InducedMdim(Common),
    /// Root of beta -> mdim(phi - beta psi)
    SolveRoot {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        phi: String,
        #[arg(long)]
        psi: String,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
    /// Critical exponents of a finite word set per scale
    SubsetDim {
        #[command(flatten)]
        common: Common,
        /// bowen | packing | bs | packing-bs | weighted
        #[arg(long)]
        structure: String,
    },
    /// Local and covering entropies of the configured measure
    Entropy {
        #[command(flatten)]
        common: Common,
        /// bk | bs | katok | ps
        #[arg(long)]
        quantity: String,
    },
    /// Run an invariant suite; exits 2 if any assertion fails
    Verify {
        #[command(flatten)]
        common: Common,
        /// counting | pressure | caratheodory | entropy | finite-scale | all
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

fn write(out: &RunOutput, path: Option<&Path>, timestamp: bool) -> bowen_mdim::Result<()> {
    let rows: &[SummaryRow] = &out.summary;
    match path {
        Some(p) => {
            report::write_records(BufWriter::new(File::create(p)?), &out.records, timestamp)?;
            let mut csv = p.as_os_str().to_owned();
            csv.push(".csv");
            report::write_summary(File::create(PathBuf::from(csv))?, rows)
        }
        None => {
            report::write_records(io::stdout().lock(), &out.records, timestamp)?;
            report::write_summary(io::stderr().lock(), rows)
        }
    }
}

fn execute(cli: Cli) -> bowen_mdim::Result<i32> {
    runner::configure_workers()?;
    let (common, cmd) = match cli.cmd {
        Cmd::EstimateMdim(c) => (c, Command::EstimateMdim),
        Cmd::InducedMdim(c) => (c, Command::InducedMdim),
        Cmd::SolveRoot { common, phi, psi, tol } => (common, Command::SolveRoot { phi, psi, tol }),
        Cmd::SubsetDim { common, structure } => {
            let structure = runner::parse_structure(&structure)?;
            (common, Command::SubsetDim { structure })
        }
        Cmd::Entropy { common, quantity } => {
            let quantity: EntropyQuantity = quantity.parse()?;
            (common, Command::Entropy { quantity })
        }
        Cmd::Verify { common, suite } => {
            let suite: Suite = suite.parse()?;
            (common, Command::Verify { suite })
        }
    };
    let cfg = common
        .config
        .as_deref()
        .map(|p| ExperimentConfig::load(p, common.seed))
        .transpose()?;
    let out = runner::run(&cmd, cfg.as_ref(), common.seed)?;
    write(&out, common.out.as_deref(), !common.no_timestamp)?;
    Ok(out.exit_code())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(runner::ERROR_EXIT_CODE as u8)
        }
    }
}
