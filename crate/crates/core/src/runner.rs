//! Command pipelines behind the CLI. Each command turns a config into an
//! ordered list of records plus summary rows; nothing here touches stdout.

use crate::caratheodory::{self, Structure};
use crate::config::ExperimentConfig;
use crate::entropy::{self, Bound, KatokOptions, LocalOptions, PsOptions, Quantity};
use crate::error::{Error, Result};
use crate::measure::MeasureModel;
use crate::pressure::{self, DimensionEstimate, PressureOptions, Witness};
use crate::report::{ResultRecord, SummaryRow};
use crate::systems::{PointWindow, PotentialSpec, SystemModel};
use crate::verify::{self, Suite};
use std::time::{SystemTime, UNIX_EPOCH};

pub const WORKERS_ENV: &str = "BOWEN_MDIM_WORKERS";

/// Seed used by `verify` when neither a config nor `--seed` provides one.
pub const DEFAULT_VERIFY_SEED: u64 = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntropyQuantity {
    Bk,
    Bs,
    Katok,
    Ps,
}

impl std::str::FromStr for EntropyQuantity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "bk" => EntropyQuantity::Bk,
            "bs" => EntropyQuantity::Bs,
            "katok" => EntropyQuantity::Katok,
            "ps" => EntropyQuantity::Ps,
            other => return Err(Error::Config(format!("unknown quantity {other:?}, expected bk, bs, katok or ps"))),
        })
    }
}

/// Parses the CLI names `bowen`, `packing`, `bs`, `packing-bs`, `weighted`.
pub fn parse_structure(s: &str) -> Result<Structure> {
    Ok(match s {
        "bowen" => Structure::Cover,
        "packing" => Structure::Packing,
        "bs" => Structure::Bs,
        "packing-bs" => Structure::PackingBs,
        "weighted" => Structure::Weighted,
        other => {
            return Err(Error::Config(format!(
                "unknown structure {other:?}, expected bowen, packing, bs, packing-bs or weighted"
            )))
        }
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    EstimateMdim,
    InducedMdim,
    SolveRoot { phi: String, psi: String, tol: f64 },
    SubsetDim { structure: Structure },
    Entropy { quantity: EntropyQuantity },
    Verify { suite: Suite },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::EstimateMdim => "estimate-mdim",
            Command::InducedMdim => "induced-mdim",
            Command::SolveRoot { .. } => "solve-root",
            Command::SubsetDim { .. } => "subset-dim",
            Command::Entropy { .. } => "entropy",
            Command::Verify { .. } => "verify",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub records: Vec<ResultRecord>,
    pub summary: Vec<SummaryRow>,
    /// Failed verification assertions.
    pub failures: usize,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        if self.failures > 0 {
            2
        } else {
            0
        }
    }
}

/// Exit code of a command that did not produce output: configuration and
/// precondition errors alike map to 1.
pub const ERROR_EXIT_CODE: i32 = 1;

/// Builds the global thread pool from `BOWEN_MDIM_WORKERS` if it is set.
pub fn configure_workers() -> Result<Option<usize>> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{WORKERS_ENV} must be a positive integer, got {raw:?}")))?;
    // A second call in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(Some(n))
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

struct Emitter<'a> {
    command: &'a str,
    hash: &'a str,
    timestamp: u64,
    out: RunOutput,
}

impl<'a> Emitter<'a> {
    fn record(&self, quantity: &str, value: f64) -> ResultRecord {
        ResultRecord::new(self.command, self.hash, quantity, value, self.timestamp)
    }

    fn push(&mut self, r: ResultRecord) {
        self.out.records.push(r);
    }

    fn summarize(&mut self, r: ResultRecord) {
        self.out.summary.push(SummaryRow::from_record(&r));
        self.out.records.push(r);
    }

    fn dimension(&mut self, prefix: &str, d: &DimensionEstimate, exact: bool) {
        let slope = self.record(&format!("{prefix}-slope"), d.slope).exact(exact);
        self.summarize(slope);
        let max = self.record(&format!("{prefix}-max-ratio"), d.max_ratio).exact(exact);
        self.summarize(max);
    }
}

/// Runs `cmd`. `verify` accepts a missing config; every other command needs one.
pub fn run(cmd: &Command, cfg: Option<&ExperimentConfig>, seed: Option<u64>) -> Result<RunOutput> {
    let need = || cfg.ok_or_else(|| Error::Config(format!("{} requires --config", cmd.name())));
    let hash = cfg.map(|c| c.hash.clone()).unwrap_or_else(|| "none".into());
    let mut em = Emitter {
        command: cmd.name(),
        hash: &hash,
        timestamp: now(),
        out: RunOutput::default(),
    };
    match cmd {
        Command::EstimateMdim => estimate_mdim(&mut em, need()?)?,
        Command::InducedMdim => induced_mdim(&mut em, need()?)?,
        Command::SolveRoot { phi, psi, tol } => solve_root(&mut em, need()?, phi, psi, *tol)?,
        Command::SubsetDim { structure } => subset_dim(&mut em, need()?, *structure)?,
        Command::Entropy { quantity } => entropy_cmd(&mut em, need()?, *quantity)?,
        Command::Verify { suite } => {
            let s = seed.or(cfg.map(|c| c.seed)).unwrap_or(DEFAULT_VERIFY_SEED);
            verify_cmd(&mut em, *suite, s)?
        }
    }
    Ok(em.out)
}

fn witness_option(cfg: &ExperimentConfig, section: &str) -> Result<PressureOptions> {
    let witness = cfg.section(section).choice(
        "witness",
        Witness::Auto,
        &[
            ("auto", Witness::Auto),
            ("exact", Witness::Exact),
            ("greedy", Witness::Greedy),
            ("oracle", Witness::Oracle),
        ],
    )?;
    let depth_extra = cfg.section(section).usize("depth_extra")?;
    Ok(PressureOptions {
        witness,
        depth_extra,
        caps: cfg.caps,
    })
}

/// The potential named by `key` in `section`, defaulting to `fallback`. An
/// unnamed, undefined `phi` is the zero potential.
fn named_potential(cfg: &ExperimentConfig, section: &str, key: &str, fallback: &str) -> Result<PotentialSpec> {
    match cfg.section(section).raw(key) {
        Some(name) => cfg.potential(name).cloned(),
        None => match cfg.potentials.get(fallback) {
            Some(p) => Ok(p.clone()),
            None if fallback == "phi" => Ok(PotentialSpec::constant(0.0)),
            None => cfg.potential(fallback).cloned(),
        },
    }
}

fn estimate_mdim(em: &mut Emitter<'_>, cfg: &ExperimentConfig) -> Result<()> {
    let phi = named_potential(cfg, "estimate-mdim", "phi", "phi")?;
    let opts = witness_option(cfg, "estimate-mdim")?;
    let d = pressure::mdim_estimate(&cfg.family, &phi, cfg.require_eps()?, cfg.require_n()?, &opts)?;
    let mut all_exact = true;
    for s in &d.per_eps {
        let mut exact = true;
        for r in &s.records {
            exact &= r.witness_kind.is_exact();
            let rec = em
                .record("log-sum", r.log_sum)
                .key("eps", r.eps)
                .key("n", r.n as f64)
                .key("witness_size", r.witness_size as f64)
                .exact(r.witness_kind.is_exact())
                .detail(format!("{:?}", r.witness_kind));
            em.push(rec);
        }
        all_exact &= exact;
        let rec = em.record("pressure", s.pressure).key("eps", s.eps).exact(exact);
        em.summarize(rec);
    }
    em.dimension("mdim", &d, all_exact);
    Ok(())
}

fn induced_mdim(em: &mut Emitter<'_>, cfg: &ExperimentConfig) -> Result<()> {
    let phi = named_potential(cfg, "induced-mdim", "phi", "phi")?;
    let psi = named_potential(cfg, "induced-mdim", "psi", "psi")?;
    let opts = witness_option(cfg, "induced-mdim")?;
    let est = pressure::induced_mdim_estimate(&cfg.family, &phi, &psi, cfg.require_eps()?, cfg.require_t()?, &opts)?;
    let mut all_exact = true;
    for r in &est.records {
        let exact = r.levels.iter().all(|l| l.witness_kind.is_exact());
        all_exact &= exact;
        let rec = em
            .record("induced-log-value", r.log_value)
            .key("eps", r.eps)
            .key("T", r.t)
            .key("levels", r.levels.len() as f64)
            .exact(exact);
        em.push(rec);
    }
    for s in &est.estimate.per_eps {
        let rec = em.record("induced-pressure", s.pressure).key("eps", s.eps).exact(all_exact);
        em.summarize(rec);
    }
    em.dimension("induced-mdim", &est.estimate, all_exact);
    Ok(())
}

fn solve_root(em: &mut Emitter<'_>, cfg: &ExperimentConfig, phi: &str, psi: &str, tol: f64) -> Result<()> {
    let phi = cfg.potential(phi)?.clone();
    let psi = cfg.potential(psi)?.clone();
    let eps = cfg.require_eps()?;
    let n = cfg.require_n()?;
    let opts = witness_option(cfg, "solve-root")?;
    let (mut psi_min, mut psi_norm) = (f64::INFINITY, 0.0f64);
    for &e in eps {
        let p = psi.at(&cfg.family.at_scale(e)?)?;
        psi_min = psi_min.min(p.min());
        psi_norm = psi_norm.max(p.sup_norm());
    }
    let f = |beta: f64| -> Result<f64> {
        let pot = phi.combine(1.0, &psi, -beta);
        Ok(pressure::mdim_estimate(&cfg.family, &pot, eps, n, &opts)?.slope)
    };
    let root = pressure::solve_bowen_root(&f, psi_min, psi_norm, tol)?;
    let rec = em
        .record("bowen-root", root.beta)
        .key("tol", tol)
        .key("iterations", root.iterations as f64)
        .key("residual", root.value)
        .key("bracket_lo", root.bracket.0)
        .key("bracket_hi", root.bracket.1)
        .exact(true)
        .detail(if root.widened { "bracket widened" } else { "initial bracket" });
    em.summarize(rec);
    Ok(())
}

fn subset_dim(em: &mut Emitter<'_>, cfg: &ExperimentConfig, structure: Structure) -> Result<()> {
    let sec = cfg.section("subset-dim");
    let phi = named_potential(cfg, "subset-dim", "phi", "phi")?;
    let depth = sec.usize_or("depth", 3)?;
    let n = cfg.require_n()?;
    let n_min = sec.usize_or("n_min", n[0])?;
    let n_max = sec.usize_or("n_max", *n.last().unwrap_or(&n_min))?;
    let tol = sec.f64_or("tol", 1e-6)?;
    let z_at = |sys: &SystemModel, _eps: f64| -> Result<Vec<PointWindow>> { sys.enumerate_points(depth) };
    let est = caratheodory::subset_mdim(&cfg.family, &z_at, &phi, structure, cfg.require_eps()?, n_min, n_max, tol)?;
    let mut all_exact = true;
    for ((s, c), m) in est.estimate.per_eps.iter().zip(&est.critical).zip(&est.z_sizes) {
        all_exact &= c.exact;
        let rec = em
            .record("critical-lambda", c.lambda)
            .key("eps", s.eps)
            .key("z_size", *m as f64)
            .key("evaluations", c.evaluations as f64)
            .exact(c.exact);
        em.summarize(rec);
    }
    em.dimension("subset-mdim", &est.estimate, all_exact);
    Ok(())
}

fn measure_for(cfg: &ExperimentConfig, sys: &SystemModel) -> Result<MeasureModel> {
    let sec = cfg.section("measure");
    match sec.string_or("kind", "uniform").as_str() {
        "uniform" | "product-uniform" => Ok(MeasureModel::product_uniform(sys, cfg.seed)),
        "bernoulli" => {
            let p = sec
                .f64_list("p")?
                .ok_or_else(|| Error::Config("[measure] p: required for kind = bernoulli".into()))?;
            MeasureModel::bernoulli(sys, p, cfg.seed).map_err(|e| Error::Config(format!("[measure] p: {e}")))
        }
        other => Err(Error::Config(format!("[measure] kind: expected uniform or bernoulli, got {other:?}"))),
    }
}

fn entropy_cmd(em: &mut Emitter<'_>, cfg: &ExperimentConfig, q: EntropyQuantity) -> Result<()> {
    let sec = cfg.section("entropy");
    let eps_schedule = cfg.require_eps()?;
    let n = cfg.require_n()?;
    let local = LocalOptions {
        x_samples: sec.usize_or("x_samples", LocalOptions::default().x_samples)?,
        mass_samples: sec.usize_or("mass_samples", LocalOptions::default().mass_samples)?,
        ..LocalOptions::default()
    };
    let bound = sec.choice("bound", Bound::Upper, &[("upper", Bound::Upper), ("lower", Bound::Lower)])?;
    let deltas = if cfg.schedules.delta.is_empty() { vec![0.5] } else { cfg.schedules.delta.clone() };
    let etas = if cfg.schedules.eta.is_empty() { vec![0.3] } else { cfg.schedules.eta.clone() };
    let kopts = KatokOptions {
        pool_size: sec.usize_or("pool", KatokOptions::default().pool_size)?,
        caps: cfg.caps,
        ..KatokOptions::default()
    };
    let phi = named_potential(cfg, "entropy", "phi", "phi")?;
    let mut scales = Vec::new();
    let mut all_exact = true;
    for &eps in eps_schedule {
        let sys = cfg.family.at_scale(eps)?;
        let mu = measure_for(cfg, &sys)?;
        let ests: Vec<(Option<f64>, entropy::EntropyEstimate)> = match q {
            EntropyQuantity::Bk => vec![(None, entropy::brin_katok(&mu, eps, n, &local, bound)?)],
            EntropyQuantity::Bs => vec![(None, entropy::bs_entropy(&mu, &phi.at(&sys)?, eps, n, &local, bound)?)],
            EntropyQuantity::Katok => deltas
                .iter()
                .map(|&d| Ok((Some(d), entropy::katok_entropy(&mu, eps, d, n, &kopts)?)))
                .collect::<Result<_>>()?,
            EntropyQuantity::Ps => {
                let opts = PsOptions::new(&sys, etas.clone(), sec.usize_or("dictionary", 16)?);
                vec![(None, entropy::ps_entropy(&mu, eps, n, &opts)?)]
            }
        };
        for (delta, e) in &ests {
            let name = quantity_name(e.quantity);
            for v in &e.per_scale {
                let mut rec = em.record(&format!("{name}-term"), v.value).key("eps", eps).key("n", v.n as f64);
                if let Some(d) = v.delta.or(*delta) {
                    rec = rec.key("delta", d);
                }
                if let Some(h) = v.eta {
                    rec = rec.key("eta", h);
                }
                em.push(rec.exact(e.exact));
            }
            for (p, v) in &e.by_parameter {
                let rec = em.record(&format!("{name}-by-eta"), *v).key("eps", eps).key("eta", *p).exact(e.exact);
                em.push(rec);
            }
            let mut rec = em.record(name, e.extrapolated).key("eps", eps).ci(e.ci.0, e.ci.1).exact(e.exact);
            if let Some(d) = delta {
                rec = rec.key("delta", *d);
            }
            if !e.flags.is_empty() {
                rec = rec.detail(e.flags.join("; "));
            }
            all_exact &= e.exact;
            em.summarize(rec);
        }
        scales.push(pressure::ScaleEstimate {
            eps,
            pressure: ests[0].1.extrapolated,
            intercept: 0.0,
            residual: 0.0,
            max_ratio: ests[0].1.extrapolated / (1.0 / eps).ln(),
            records: Vec::new(),
            oracle: None,
        });
    }
    if eps_schedule.len() >= 2 {
        let d = DimensionEstimate::from_scales(scales, eps_schedule.to_vec(), n.iter().map(|&v| v as f64).collect())?;
        em.dimension("entropy-ratio", &d, all_exact);
    }
    Ok(())
}

fn quantity_name(q: Quantity) -> &'static str {
    match q {
        Quantity::BkLower => "bk-lower",
        Quantity::BkUpper => "bk-upper",
        Quantity::BsLower => "bs-lower",
        Quantity::BsUpper => "bs-upper",
        Quantity::Katok => "katok",
        Quantity::Ps => "ps",
    }
}

fn verify_cmd(em: &mut Emitter<'_>, suite: Suite, seed: u64) -> Result<()> {
    let asserts = verify::run_suite(suite, seed)?;
    for a in &asserts {
        let rec = em
            .record(&format!("{}/{}", a.suite, a.name), a.slack)
            .key("seed", seed as f64)
            .passed(a.passed)
            .detail(a.detail.clone());
        em.push(rec);
    }
    let failed = asserts.iter().filter(|a| !a.passed).count();
    em.out.failures = failed;
    let rec = em
        .record("assertions-failed", failed as f64)
        .key("total", asserts.len() as f64)
        .passed(failed == 0);
    em.summarize(rec);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const GRID: &str = "seed = 3\n[system]\nkind = grid\nk = auto\n[schedule]\neps = 2^-3, 2^-4, 2^-5\nn = 1, 2, 3, 4\n";

    #[test]
    fn estimate_on_grid_has_unit_slope() {
        let cfg = ExperimentConfig::parse(GRID, None).unwrap();
        let out = run(&Command::EstimateMdim, Some(&cfg), None).unwrap();
        let slope = out.records.iter().find(|r| r.quantity == "mdim-slope").unwrap();
        assert!((slope.value - 1.0).abs() < 0.15, "{}", slope.value);
        assert_eq!(out.exit_code(), 0);
    }

    #[test]
    fn commands_other_than_verify_need_a_config() {
        assert!(matches!(run(&Command::EstimateMdim, None, None), Err(Error::Config(_))));
    }

    #[test]
    fn structure_names() {
        assert_eq!(parse_structure("bowen").unwrap(), Structure::Cover);
        assert_eq!(parse_structure("packing-bs").unwrap(), Structure::PackingBs);
        assert!(parse_structure("cover").is_err());
    }
}
