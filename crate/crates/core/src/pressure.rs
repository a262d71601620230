//! Pressure sums, dimension regression, induced pressure over time-level
//! sets, and the Bowen-equation root solver.

use crate::bowen::{self, Caps, Mode};
use crate::error::{Error, Result};
use crate::stats::{self, LineFit};
use crate::systems::{PointWindow, Potential, PotentialSpec, SymbolMetric, SystemFamily, SystemModel};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessKind {
    SeparatedExact,
    SeparatedGreedy,
    SpanningExact,
    SpanningGreedy,
    AnalyticOracle,
}

impl WitnessKind {
    pub fn is_exact(self) -> bool {
        !matches!(self, WitnessKind::SeparatedGreedy | WitnessKind::SpanningGreedy)
    }
}

/// How witness sets are produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Witness {
    /// Exact search when the caps allow, greedy otherwise; falls back to the
    /// oracle when enumeration is impossible and the potential allows it.
    Auto,
    Exact,
    Greedy,
    Oracle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PressureRecord {
    pub n: usize,
    pub eps: f64,
    pub log_sum: f64,
    pub witness_kind: WitnessKind,
    pub witness_size: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PressureOptions {
    pub witness: Witness,
    /// Extra enumerated coordinates beyond the orbit segment; `None` uses the
    /// system's agreement margin at the current scale.
    pub depth_extra: Option<usize>,
    pub caps: Caps,
}

impl Default for PressureOptions {
    fn default() -> Self {
        PressureOptions {
            witness: Witness::Auto,
            depth_extra: None,
            caps: Caps::default(),
        }
    }
}

impl PressureOptions {
    pub fn with_witness(witness: Witness) -> Self {
        PressureOptions {
            witness,
            ..Default::default()
        }
    }
}

/// `log sum_{x in F} (1/eps)^{S_n phi(x)}`, or `-inf` for empty `F`.
pub fn pressure_sum(sys: &SystemModel, f: &[PointWindow], phi: &Potential, n: usize, eps: f64) -> Result<f64> {
    let l = (1.0 / eps).ln();
    let terms = f
        .iter()
        .map(|x| Ok(sys.birkhoff_sum(phi, x, n)? * l))
        .collect::<Result<Vec<f64>>>()?;
    Ok(stats::log_sum_exp(terms))
}

fn normalized_weights(logs: &[f64]) -> Vec<f64> {
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    logs.iter().map(|&v| (v - m).exp().max(f64::MIN_POSITIVE)).collect()
}

fn mode_of(w: Witness) -> Mode {
    match w {
        Witness::Exact => Mode::Exact,
        Witness::Greedy => Mode::Greedy,
        _ => Mode::Auto,
    }
}

/// Points used as the candidate universe at order `n`.
pub fn witness_universe(sys: &SystemModel, n: usize, eps: f64, opts: &PressureOptions) -> Result<Vec<PointWindow>> {
    let extra = opts.depth_extra.unwrap_or_else(|| sys.agreement_margin(eps));
    sys.enumerate_points((n + extra).min(sys.window))
}

/// Separated-set witness at order `n` chosen to maximize the pressure sum.
pub fn separated_witness(
    sys: &SystemModel,
    z: &[PointWindow],
    phi: &Potential,
    n: usize,
    eps: f64,
    mode: Mode,
    caps: Caps,
) -> Result<(Vec<PointWindow>, bool)> {
    let l = (1.0 / eps).ln();
    let logs = z
        .iter()
        .map(|x| Ok(sys.birkhoff_sum(phi, x, n)? * l))
        .collect::<Result<Vec<f64>>>()?;
    let weights = (!phi.is_constant()).then(|| normalized_weights(&logs));
    let sel = bowen::max_separated_weighted(sys, z, n, eps, weights.as_deref(), mode, caps)?;
    Ok((sel.points(z), sel.exact))
}

fn enumerable(sys: &SystemModel, depth: usize) -> bool {
    (sys.k() as u128)
        .checked_pow(depth as u32)
        .is_some_and(|c| c <= sys.enumeration_cap as u128)
}

/// In auto mode one witness kind serves every order of a scale: the oracle as
/// soon as the largest order cannot be enumerated, since enumerated witnesses
/// also separate on the margin and would bend the fit.
fn scale_options(sys: &SystemModel, phi: &Potential, eps: f64, n_schedule: &[usize], opts: &PressureOptions) -> PressureOptions {
    let mut o = *opts;
    if o.witness == Witness::Auto && oracle_supported(phi) {
        if let Some(&n) = n_schedule.last() {
            let extra = o.depth_extra.unwrap_or_else(|| sys.agreement_margin(eps));
            if !enumerable(sys, (n + extra).min(sys.window)) {
                o.witness = Witness::Oracle;
            }
        }
    }
    o
}

/// One pressure record at order `n`.
pub fn pressure_record(sys: &SystemModel, phi: &Potential, n: usize, eps: f64, opts: &PressureOptions) -> Result<PressureRecord> {
    if opts.witness == Witness::Oracle {
        return oracle_record(sys, phi, n, eps);
    }
    let z = match witness_universe(sys, n, eps, opts) {
        Ok(z) => z,
        Err(Error::EnumerationCap { .. }) if opts.witness == Witness::Auto && oracle_supported(phi) => {
            return oracle_record(sys, phi, n, eps);
        }
        Err(e) => return Err(e),
    };
    let (f, exact) = separated_witness(sys, &z, phi, n, eps, mode_of(opts.witness), opts.caps)?;
    Ok(PressureRecord {
        n,
        eps,
        log_sum: pressure_sum(sys, &f, phi, n, eps)?,
        witness_kind: if exact {
            WitnessKind::SeparatedExact
        } else {
            WitnessKind::SeparatedGreedy
        },
        witness_size: f.len(),
    })
}

fn oracle_record(sys: &SystemModel, phi: &Potential, n: usize, eps: f64) -> Result<PressureRecord> {
    let o = analytic_oracle_pressure(sys, phi, eps)?;
    Ok(PressureRecord {
        n,
        eps,
        log_sum: o.witness_log_sum(n),
        witness_kind: WitnessKind::AnalyticOracle,
        witness_size: o.witness_size(n),
    })
}

fn oracle_supported(phi: &Potential) -> bool {
    phi.range() <= 1
}

/// Pressure at one scale: least-squares slope of `log_sum` against `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleEstimate {
    pub eps: f64,
    pub pressure: f64,
    pub intercept: f64,
    pub residual: f64,
    /// `max_n log_sum / n`, the finite-grid limsup diagnostic.
    pub max_ratio: f64,
    pub records: Vec<PressureRecord>,
    pub oracle: Option<OracleBracket>,
}

fn check_increasing(xs: &[usize], what: &str) -> Result<()> {
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!("{what} must be strictly increasing")));
    }
    Ok(())
}

fn check_decreasing(xs: &[f64], what: &str) -> Result<()> {
    if xs.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Config(format!("{what} must be strictly decreasing")));
    }
    Ok(())
}

pub fn pressure_estimate(
    sys: &SystemModel,
    phi: &Potential,
    eps: f64,
    n_schedule: &[usize],
    opts: &PressureOptions,
) -> Result<ScaleEstimate> {
    check_increasing(n_schedule, "n schedule")?;
    let opts = &scale_options(sys, phi, eps, n_schedule, opts);
    let records = n_schedule
        .par_iter()
        .map(|&n| pressure_record(sys, phi, n, eps, opts))
        .collect::<Result<Vec<_>>>()?;
    scale_from_records(sys, phi, eps, records)
}

fn scale_from_records(sys: &SystemModel, phi: &Potential, eps: f64, records: Vec<PressureRecord>) -> Result<ScaleEstimate> {
    let usable: Vec<&PressureRecord> = records.iter().filter(|r| r.log_sum.is_finite()).collect();
    if usable.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "pressure at eps={eps} has {} usable orders, need 2",
            usable.len()
        )));
    }
    let xs: Vec<f64> = usable.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = usable.iter().map(|r| r.log_sum).collect();
    let fit = stats::fit_line(&xs, &ys)?;
    let max_ratio = usable
        .iter()
        .map(|r| r.log_sum / r.n as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    let oracle = if records.iter().any(|r| r.witness_kind == WitnessKind::AnalyticOracle) {
        Some(analytic_oracle_pressure(sys, phi, eps)?)
    } else {
        None
    };
    Ok(ScaleEstimate {
        eps,
        pressure: fit.slope,
        intercept: fit.intercept,
        residual: fit.residual,
        max_ratio,
        records,
        oracle,
    })
}

/// Exact per-step pressure bounds for product systems with a potential that
/// reads coordinate 0 only.
///
/// The lower bound is the pressure sum of an explicit witness: all words over
/// a maximum-weight set `A'` of pairwise eps-separated symbols on the orbit
/// segment, padded with 0. Its log-sum is exactly `n * lower`.
/// The upper bound counts classes of agreement on the orbit segment widened
/// by the agreement margin: any separated set injects into them, giving
/// `log_sum <= n * upper + margin_log`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleBracket {
    pub eps: f64,
    pub lower: f64,
    pub upper: f64,
    pub margin_log: f64,
    pub separated_symbols: Vec<u16>,
}

impl OracleBracket {
    pub fn witness_log_sum(&self, n: usize) -> f64 {
        self.lower * n as f64
    }

    pub fn witness_size(&self, n: usize) -> usize {
        (self.separated_symbols.len() as f64).powi(n as i32).min(usize::MAX as f64) as usize
    }

    /// Bounds on `log #_sep` at order `n`.
    pub fn log_sum_bounds(&self, n: usize) -> (f64, f64) {
        (self.lower * n as f64, self.upper * n as f64 + self.margin_log)
    }

    /// Bounds on `log #_sep / n` at order `n`.
    pub fn rate_bounds(&self, n: usize) -> (f64, f64) {
        (self.lower, self.upper + self.margin_log / n as f64)
    }

    /// The witness set itself at order `n` (for validation on small cases).
    pub fn witness_points(&self, sys: &SystemModel, n: usize) -> Result<Vec<PointWindow>> {
        let words = crate::systems::all_words(self.separated_symbols.len(), n);
        words
            .iter()
            .map(|w| {
                let word: Vec<u16> = w.iter().map(|&i| self.separated_symbols[i as usize]).collect();
                sys.point_from_word(&word)
            })
            .collect()
    }
}

pub fn analytic_oracle_pressure(sys: &SystemModel, phi: &Potential, eps: f64) -> Result<OracleBracket> {
    if !oracle_supported(phi) {
        return Err(Error::Precondition(
            "the analytic oracle needs a potential reading coordinate 0 only".into(),
        ));
    }
    if !(eps > 0.0) {
        return Err(Error::Precondition("eps must be positive".into()));
    }
    let k = sys.k();
    let l = (1.0 / eps).ln();
    let logs: Vec<f64> = (0..k as u16).map(|a| phi.value_on_word(&[a]) * l).collect();
    let upper = stats::log_sum_exp(logs.iter().cloned());
    let chosen = max_weight_separated_symbols(sys, &logs, eps);
    let lower = stats::log_sum_exp(chosen.iter().map(|&a| logs[a as usize]));
    let margin = if sys.is_two_sided() {
        2 * sys.agreement_margin(eps)
    } else {
        sys.agreement_margin(eps)
    };
    Ok(OracleBracket {
        eps,
        lower,
        upper,
        margin_log: margin as f64 * (k as f64).ln(),
        separated_symbols: chosen,
    })
}

fn max_weight_separated_symbols(sys: &SystemModel, logs: &[f64], eps: f64) -> Vec<u16> {
    let k = logs.len();
    match sys.symbol_metric {
        SymbolMetric::Discrete => {
            if eps <= 1.0 {
                (0..k as u16).collect()
            } else {
                let best = (0..k).max_by(|&a, &b| logs[a].total_cmp(&logs[b]).then(b.cmp(&a))).unwrap_or(0);
                vec![best as u16]
            }
        }
        SymbolMetric::AbsDiff => {
            // Weighted interval scheduling on the line: best[i] is the best
            // total weight of a separated set whose largest symbol is i.
            let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let w: Vec<f64> = logs.iter().map(|&v| (v - m).exp()).collect();
            let mut best = vec![0.0f64; k];
            let mut prev = vec![usize::MAX; k];
            for i in 0..k {
                best[i] = w[i];
                for j in 0..i {
                    if sys.rho(i as u16, j as u16) >= eps && best[j] + w[i] > best[i] {
                        best[i] = best[j] + w[i];
                        prev[i] = j;
                    }
                }
            }
            let mut end = 0;
            for i in 0..k {
                if best[i] > best[end] {
                    end = i;
                }
            }
            let mut out = Vec::new();
            let mut cur = end;
            loop {
                out.push(cur as u16);
                if prev[cur] == usize::MAX {
                    break;
                }
                cur = prev[cur];
            }
            out.reverse();
            out
        }
    }
}

/// Mean-dimension estimate: per-scale pressures regressed on `log(1/eps)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub per_eps: Vec<ScaleEstimate>,
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    /// `max_eps P(eps) / log(1/eps)`.
    pub max_ratio: f64,
    pub eps_schedule: Vec<f64>,
    /// Orders (or times, for induced estimates) used at every scale.
    pub schedule: Vec<f64>,
}

impl DimensionEstimate {
    pub fn from_scales(per_eps: Vec<ScaleEstimate>, eps_schedule: Vec<f64>, schedule: Vec<f64>) -> Result<Self> {
        let xs: Vec<f64> = per_eps.iter().map(|s| (1.0 / s.eps).ln()).collect();
        let ys: Vec<f64> = per_eps.iter().map(|s| s.pressure).collect();
        let LineFit {
            slope,
            intercept,
            residual,
        } = stats::fit_line(&xs, &ys)?;
        let max_ratio = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| y / x)
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(DimensionEstimate {
            per_eps,
            slope,
            intercept,
            residual,
            max_ratio,
            eps_schedule,
            schedule,
        })
    }
}

fn check_eps(eps_schedule: &[f64]) -> Result<()> {
    if eps_schedule.len() < 3 {
        return Err(Error::Config(format!(
            "eps schedule needs at least 3 values, got {}",
            eps_schedule.len()
        )));
    }
    check_decreasing(eps_schedule, "eps schedule")
}

pub fn mdim_estimate(
    family: &SystemFamily,
    phi: &PotentialSpec,
    eps_schedule: &[f64],
    n_schedule: &[usize],
    opts: &PressureOptions,
) -> Result<DimensionEstimate> {
    check_eps(eps_schedule)?;
    check_increasing(n_schedule, "n schedule")?;
    let per_eps = eps_schedule
        .par_iter()
        .map(|&eps| {
            let sys = family.at_scale(eps)?;
            let p = phi.at(&sys)?;
            pressure_estimate(&sys, &p, eps, n_schedule, opts)
        })
        .collect::<Result<Vec<_>>>()?;
    DimensionEstimate::from_scales(
        per_eps,
        eps_schedule.to_vec(),
        n_schedule.iter().map(|&n| n as f64).collect(),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LevelVariant {
    /// `S_n psi <= T < S_{n+1} psi`.
    Level,
    /// `S_n psi > T`.
    Tail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeLevelPartition {
    pub t: f64,
    pub variant: LevelVariant,
    /// Level `n` to indices of the points in it; only nonempty levels.
    pub levels: BTreeMap<usize, Vec<usize>>,
}

impl TimeLevelPartition {
    pub fn s_t(&self) -> Vec<usize> {
        self.levels.keys().cloned().collect()
    }
}

/// Assigns points to time levels. The tail variant scans `n = 1..=tail_max`.
pub fn time_level_partition(
    sys: &SystemModel,
    z: &[PointWindow],
    psi: &Potential,
    t: f64,
    variant: LevelVariant,
    tail_max: usize,
) -> Result<TimeLevelPartition> {
    if !(psi.min() > 0.0) {
        return Err(Error::Precondition(format!(
            "psi must be positive, min is {}",
            psi.min()
        )));
    }
    let m = psi.min();
    let mut levels: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, x) in z.iter().enumerate() {
        match variant {
            LevelVariant::Level => {
                let bound = (t / m).floor() as usize + 1;
                for n in 1..=bound {
                    if sys.birkhoff_sum(psi, x, n)? > t {
                        break;
                    }
                    if sys.birkhoff_sum(psi, x, n + 1)? > t {
                        levels.entry(n).or_default().push(i);
                        break;
                    }
                }
            }
            LevelVariant::Tail => {
                for n in 1..=tail_max {
                    if sys.birkhoff_sum(psi, x, n)? > t {
                        levels.entry(n).or_default().push(i);
                    }
                }
            }
        }
    }
    Ok(TimeLevelPartition { t, variant, levels })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InducedWitness {
    Separated,
    Spanning,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelContribution {
    pub n: usize,
    pub log_sum: f64,
    pub witness_size: usize,
    pub witness_kind: WitnessKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InducedRecord {
    pub t: f64,
    pub eps: f64,
    pub witness: InducedWitness,
    pub log_value: f64,
    pub levels: Vec<LevelContribution>,
}

/// `log sum_{n in S_T} sum_{x in F_n} (1/eps)^{S_n phi(x)}` with per-level
/// separated witnesses, or with per-level spanning witnesses for the
/// spanning form. The spanning value of a level is the smaller of the
/// weighted spanning cover and the separated witness (a maximal separated
/// set spans), so it never exceeds the separated value.
#[allow(clippy::too_many_arguments)]
pub fn induced_pressure(
    sys: &SystemModel,
    z: &[PointWindow],
    phi: &Potential,
    partition: &TimeLevelPartition,
    eps: f64,
    witness: InducedWitness,
    mode: Mode,
    caps: Caps,
) -> Result<InducedRecord> {
    let l = (1.0 / eps).ln();
    let mut levels = Vec::new();
    for (&n, idx) in &partition.levels {
        let xn: Vec<PointWindow> = idx.iter().map(|&i| z[i].clone()).collect();
        let (sep, sep_exact) = separated_witness(sys, &xn, phi, n, eps, mode, caps)?;
        let sep_sum = pressure_sum(sys, &sep, phi, n, eps)?;
        let contrib = match witness {
            InducedWitness::Separated => LevelContribution {
                n,
                log_sum: sep_sum,
                witness_size: sep.len(),
                witness_kind: if sep_exact {
                    WitnessKind::SeparatedExact
                } else {
                    WitnessKind::SeparatedGreedy
                },
            },
            InducedWitness::Spanning => {
                let logs = xn
                    .iter()
                    .map(|x| Ok(sys.birkhoff_sum(phi, x, n)? * l))
                    .collect::<Result<Vec<f64>>>()?;
                let w = normalized_weights(&logs);
                let sel = bowen::min_spanning_weighted(sys, &xn, n, eps, Some(&w), mode, caps)?;
                let span = sel.points(&xn);
                let span_sum = pressure_sum(sys, &span, phi, n, eps)?;
                let kind = if sel.exact {
                    WitnessKind::SpanningExact
                } else {
                    WitnessKind::SpanningGreedy
                };
                if span_sum <= sep_sum {
                    LevelContribution {
                        n,
                        log_sum: span_sum,
                        witness_size: span.len(),
                        witness_kind: kind,
                    }
                } else {
                    LevelContribution {
                        n,
                        log_sum: sep_sum,
                        witness_size: sep.len(),
                        witness_kind: if sel.exact && sep_exact {
                            WitnessKind::SpanningExact
                        } else {
                            WitnessKind::SpanningGreedy
                        },
                    }
                }
            }
        };
        levels.push(contrib);
    }
    Ok(InducedRecord {
        t: partition.t,
        eps,
        witness,
        log_value: stats::log_sum_exp(levels.iter().map(|c| c.log_sum)),
        levels,
    })
}

/// Induced pressure at one `(T, eps)` cell over the enumerated universe.
pub fn induced_record(
    sys: &SystemModel,
    phi: &Potential,
    psi: &Potential,
    t: f64,
    eps: f64,
    witness: InducedWitness,
    opts: &PressureOptions,
) -> Result<InducedRecord> {
    if !(psi.min() > 0.0) {
        return Err(Error::Precondition("psi must be positive".into()));
    }
    if opts.witness == Witness::Oracle {
        return induced_oracle_record(sys, phi, psi, t, eps, witness);
    }
    let top = (t / psi.min()).floor() as usize;
    if top == 0 {
        return Ok(InducedRecord {
            t,
            eps,
            witness,
            log_value: f64::NEG_INFINITY,
            levels: Vec::new(),
        });
    }
    let z = match witness_universe(sys, top, eps, opts) {
        Ok(z) => z,
        Err(Error::EnumerationCap { .. }) if opts.witness == Witness::Auto && psi.is_constant() && oracle_supported(phi) => {
            return induced_oracle_record(sys, phi, psi, t, eps, witness);
        }
        Err(e) => return Err(e),
    };
    let part = time_level_partition(sys, &z, psi, t, LevelVariant::Level, 0)?;
    induced_pressure(sys, &z, phi, &part, eps, witness, mode_of(opts.witness), opts.caps)
}

fn induced_oracle_record(
    sys: &SystemModel,
    phi: &Potential,
    psi: &Potential,
    t: f64,
    eps: f64,
    witness: InducedWitness,
) -> Result<InducedRecord> {
    let c = match psi {
        Potential::Constant(c) if *c > 0.0 => *c,
        _ => {
            return Err(Error::Precondition(
                "the oracle induced pressure needs a positive constant psi".into(),
            ))
        }
    };
    let n = (t / c).floor() as usize;
    if n == 0 {
        return Ok(InducedRecord {
            t,
            eps,
            witness,
            log_value: f64::NEG_INFINITY,
            levels: Vec::new(),
        });
    }
    let r = oracle_record(sys, phi, n, eps)?;
    Ok(InducedRecord {
        t,
        eps,
        witness,
        log_value: r.log_sum,
        levels: vec![LevelContribution {
            n,
            log_sum: r.log_sum,
            witness_size: r.witness_size,
            witness_kind: WitnessKind::AnalyticOracle,
        }],
    })
}

/// Induced estimate at one scale: slope of `log P_{psi,T}` against `T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InducedScale {
    pub scale: ScaleEstimate,
    pub records: Vec<InducedRecord>,
}

pub fn induced_scale_estimate(
    sys: &SystemModel,
    phi: &Potential,
    psi: &Potential,
    eps: f64,
    t_schedule: &[f64],
    witness: InducedWitness,
    opts: &PressureOptions,
) -> Result<InducedScale> {
    let records = t_schedule
        .par_iter()
        .map(|&t| induced_record(sys, phi, psi, t, eps, witness, opts))
        .collect::<Result<Vec<_>>>()?;
    let usable: Vec<&InducedRecord> = records.iter().filter(|r| r.log_value.is_finite()).collect();
    if usable.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "induced pressure at eps={eps} has {} usable times",
            usable.len()
        )));
    }
    let xs: Vec<f64> = usable.iter().map(|r| r.t).collect();
    let ys: Vec<f64> = usable.iter().map(|r| r.log_value).collect();
    let fit = stats::fit_line(&xs, &ys)?;
    let max_ratio = usable
        .iter()
        .map(|r| r.log_value / r.t)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(InducedScale {
        scale: ScaleEstimate {
            eps,
            pressure: fit.slope,
            intercept: fit.intercept,
            residual: fit.residual,
            max_ratio,
            records: Vec::new(),
            oracle: None,
        },
        records,
    })
}

/// Induced mean-dimension estimate and the per-cell records behind it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InducedEstimate {
    pub estimate: DimensionEstimate,
    pub records: Vec<InducedRecord>,
}

pub fn induced_mdim_estimate(
    family: &SystemFamily,
    phi: &PotentialSpec,
    psi: &PotentialSpec,
    eps_schedule: &[f64],
    t_schedule: &[f64],
    opts: &PressureOptions,
) -> Result<InducedEstimate> {
    check_eps(eps_schedule)?;
    if t_schedule.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("T schedule must be strictly increasing".into()));
    }
    let per = eps_schedule
        .par_iter()
        .map(|&eps| {
            let sys = family.at_scale(eps)?;
            let p = phi.at(&sys)?;
            let q = psi.at(&sys)?;
            induced_scale_estimate(&sys, &p, &q, eps, t_schedule, InducedWitness::Separated, opts)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut records = Vec::new();
    let mut scales = Vec::new();
    for s in per {
        records.extend(s.records);
        scales.push(s.scale);
    }
    Ok(InducedEstimate {
        estimate: DimensionEstimate::from_scales(scales, eps_schedule.to_vec(), t_schedule.to_vec())?,
        records,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootResult {
    pub beta: f64,
    pub value: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
    pub widened: bool,
}

pub const MAX_BISECTIONS: usize = 60;

/// Root of the decreasing function `mdim_fn(beta)` on the bracket
/// `[min(0, D/m) - tol, max(0, D/m) + tol]`, `D = mdim_fn(0)`, widened once
/// to twice its width if it does not straddle zero. Stops once
/// `|mdim_fn(beta)| <= tol * psi_norm`.
pub fn solve_bowen_root(
    mdim_fn: &(dyn Fn(f64) -> Result<f64> + Sync),
    psi_min: f64,
    psi_norm: f64,
    tol: f64,
) -> Result<RootResult> {
    if !(psi_min > 0.0) {
        return Err(Error::Precondition("psi must be positive".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }
    let d = mdim_fn(0.0)?;
    let mut lo = (d / psi_min).min(0.0) - tol;
    let mut hi = (d / psi_min).max(0.0) + tol;
    let mut f_lo = mdim_fn(lo)?;
    let mut f_hi = mdim_fn(hi)?;
    let mut widened = false;
    if !(f_lo >= 0.0 && f_hi <= 0.0) {
        let half = (hi - lo) / 2.0;
        lo -= half;
        hi += half;
        f_lo = mdim_fn(lo)?;
        f_hi = mdim_fn(hi)?;
        widened = true;
        if !(f_lo >= 0.0 && f_hi <= 0.0) {
            return Err(Error::Bracket { lo, hi, f_lo, f_hi });
        }
    }
    let bracket = (lo, hi);
    let target = tol * psi_norm.max(f64::MIN_POSITIVE);
    if f_lo.abs() <= target {
        return Ok(RootResult { beta: lo, value: f_lo, iterations: 0, bracket, widened });
    }
    if f_hi.abs() <= target {
        return Ok(RootResult { beta: hi, value: f_hi, iterations: 0, bracket, widened });
    }
    let mut best = (lo, f_lo);
    for it in 1..=MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let fm = mdim_fn(mid)?;
        if fm.abs() < best.1.abs() {
            best = (mid, fm);
        }
        if fm.abs() <= target {
            return Ok(RootResult { beta: mid, value: fm, iterations: it, bracket, widened });
        }
        if fm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Precondition(format!(
        "root not resolved after {MAX_BISECTIONS} bisections: best beta {} with value {}",
        best.0, best.1
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{ShiftKind, Sidedness};
    use proptest::prelude::*;

    fn bin() -> SystemModel {
        SystemModel::full_shift(2).build().unwrap()
    }

    #[test]
    fn pressure_sum_examples() {
        let s = bin();
        let f = s.enumerate_points(1).unwrap();
        let v = pressure_sum(&s, &f, &Potential::constant(1.0), 2, 0.5).unwrap();
        assert!((v - 8f64.ln()).abs() < 1e-12);
        let v0 = pressure_sum(&s, &f, &Potential::constant(0.0), 3, 0.5).unwrap();
        assert!((v0 - 2f64.ln()).abs() < 1e-12);
        assert_eq!(pressure_sum(&s, &[], &Potential::constant(0.0), 3, 0.5).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn full_shift_pressure_is_log2() {
        let s = bin();
        for w in [Witness::Auto, Witness::Oracle] {
            let e = pressure_estimate(&s, &Potential::constant(0.0), 0.6, &[1, 2, 3], &PressureOptions::with_witness(w)).unwrap();
            assert!((e.pressure - 2f64.ln()).abs() < 1e-9, "{w:?} {}", e.pressure);
        }
        let c = pressure_estimate(&s, &Potential::constant(0.7), 0.6, &[1, 2, 3], &PressureOptions::default()).unwrap();
        assert!((c.pressure - 2f64.ln() - 0.7 * (1.0f64 / 0.6).ln()).abs() < 1e-9);
    }

    #[test]
    fn single_point_system_has_zero_pressure() {
        let s = SystemModel::full_shift(1).build().unwrap();
        let e = pressure_estimate(&s, &Potential::constant(0.0), 0.5, &[1, 2, 3], &PressureOptions::default()).unwrap();
        assert!(e.pressure.abs() < 1e-12);
    }

    #[test]
    fn oracle_brackets_brute_force() {
        for k in 2..=4usize {
            for kind in [ShiftKind::FullShift, ShiftKind::GridShift] {
                let s = SystemModel::builder(kind, k).build().unwrap();
                let phi = Potential::coordinate((0..k).map(|a| 0.3 * a as f64 - 0.2).collect());
                for eps in [0.2, 0.3, 0.6] {
                    let o = analytic_oracle_pressure(&s, &phi, eps).unwrap();
                    for n in 1..=3 {
                        let r = pressure_record(&s, &phi, n, eps, &PressureOptions::default()).unwrap();
                        let (lo, hi) = o.log_sum_bounds(n);
                        assert!(r.log_sum >= lo - 1e-9 && r.log_sum <= hi + 1e-9, "k={k} {kind:?} eps={eps} n={n}: {} not in [{lo},{hi}]", r.log_sum);
                        let w = o.witness_points(&s, n).unwrap();
                        assert!(bowen::is_separated(&s, &w, n, eps));
                        assert!((pressure_sum(&s, &w, &phi, n, eps).unwrap() - lo).abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn oracle_grid_collapses_to_log_k() {
        let fam = SystemFamily::grid_per_scale(Sidedness::OneSided);
        for j in 3..=8 {
            let eps = 2f64.powi(-j);
            let s = fam.at_scale(eps).unwrap();
            let o = analytic_oracle_pressure(&s, &Potential::constant(0.0), eps).unwrap();
            assert!((o.lower - (1.0 / eps).ln()).abs() < 1e-12);
            assert!((o.upper - (1.0 / eps).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn oracle_rejects_long_range() {
        let s = bin();
        let phi = Potential::finite_range(2, 2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert!(analytic_oracle_pressure(&s, &phi, 0.5).is_err());
    }

    #[test]
    fn level_partition_examples() {
        let s = bin();
        let z = s.enumerate_points(3).unwrap();
        let p = time_level_partition(&s, &z, &Potential::constant(1.0), 3.5, LevelVariant::Level, 0).unwrap();
        assert_eq!(p.s_t(), vec![3]);
        assert_eq!(p.levels[&3].len(), z.len());
        let p2 = time_level_partition(&s, &z, &Potential::constant(2.0), 5.0, LevelVariant::Level, 0).unwrap();
        assert_eq!(p2.s_t(), vec![2]);
        let psi = Potential::coordinate(vec![1.0, 2.0]);
        let p3 = time_level_partition(&s, &z, &psi, 3.0, LevelVariant::Level, 0).unwrap();
        for (n, idx) in &p3.levels {
            for &i in idx {
                let sn = s.birkhoff_sum(&psi, &z[i], *n).unwrap();
                let sn1 = s.birkhoff_sum(&psi, &z[i], n + 1).unwrap();
                assert!(sn <= 3.0 && sn1 > 3.0);
            }
        }
        // 000 -> level 3, 100 -> 2 (2+1 = 3), 110 -> 1 (2, then 4)
        assert!(p3.levels[&3].contains(&0));
        assert!(p3.levels[&2].contains(&4));
        assert!(p3.levels[&1].contains(&6));
        assert!(time_level_partition(&s, &z, &Potential::constant(0.0), 3.0, LevelVariant::Level, 0).is_err());
        let tail = time_level_partition(&s, &z, &psi, 3.0, LevelVariant::Tail, 3).unwrap();
        for (n, idx) in &tail.levels {
            for &i in idx {
                assert!(s.birkhoff_sum(&psi, &z[i], *n).unwrap() > 3.0);
            }
        }
    }

    #[test]
    fn induced_with_unit_psi_matches_plain() {
        let s = bin();
        let phi = Potential::coordinate(vec![0.1, 0.4]);
        let opts = PressureOptions::default();
        for n in 1..=4 {
            let plain = pressure_record(&s, &phi, n, 0.6, &opts).unwrap();
            let ind = induced_record(&s, &phi, &Potential::constant(1.0), n as f64 + 0.5, 0.6, InducedWitness::Separated, &opts).unwrap();
            assert_eq!(ind.levels.len(), 1);
            assert_eq!(ind.levels[0].n, n);
            assert_eq!(ind.log_value.to_bits(), plain.log_sum.to_bits());
        }
    }

    #[test]
    fn induced_example_psi_two() {
        let s = bin();
        let opts = PressureOptions::default();
        let r = induced_record(&s, &Potential::constant(0.0), &Potential::constant(2.0), 5.0, 0.6, InducedWitness::Separated, &opts).unwrap();
        let z = s.enumerate_points(2 + s.agreement_margin(0.6)).unwrap();
        let s2 = bowen::max_separated(&s, &z, 2, 0.6, Mode::Exact, Caps { exact: 64 }).unwrap().len();
        assert!((r.log_value - (s2 as f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn root_examples() {
        let d = 0.8;
        let f = move |b: f64| Ok(d - b);
        let r = solve_bowen_root(&f, 1.0, 1.0, 1e-6).unwrap();
        assert!((r.beta - d).abs() <= 2e-6);
        let g = move |b: f64| Ok(d - 2.0 * b);
        let r2 = solve_bowen_root(&g, 2.0, 2.0, 1e-6).unwrap();
        assert!((r2.beta - d / 2.0).abs() < 1e-5);
        assert!(r2.iterations <= MAX_BISECTIONS);
    }

    #[test]
    fn root_bracket_failure_is_reported() {
        let f = |_b: f64| Ok(1.0);
        assert!(matches!(solve_bowen_root(&f, 1.0, 1.0, 1e-3), Err(Error::Bracket { .. })));
    }

    proptest! {
        #[test]
        fn lipschitz_and_strict_decrease(
            seed_words in proptest::collection::vec(proptest::collection::vec(0u16..3, 4), 1..6),
            tab_phi in proptest::collection::vec(-1.0f64..1.0, 3),
            tab_psi in proptest::collection::vec(0.1f64..2.0, 3),
            b1 in -2.0f64..2.0, db in 0.0f64..2.0, n in 1usize..4, eps in 0.05f64..0.9,
        ) {
            let s = SystemModel::full_shift(3).build().unwrap();
            let f: Vec<PointWindow> = seed_words.iter().map(|w| s.point_from_word(w).unwrap()).collect();
            let phi = Potential::coordinate(tab_phi);
            let psi = Potential::coordinate(tab_psi);
            let b2 = b1 + db;
            let p1 = phi.combine(1.0, &psi, -b1).unwrap();
            let p2 = phi.combine(1.0, &psi, -b2).unwrap();
            let v1 = pressure_sum(&s, &f, &p1, n, eps).unwrap();
            let v2 = pressure_sum(&s, &f, &p2, n, eps).unwrap();
            let l = (1.0 / eps).ln();
            let slack = 1e-9 * (1.0 + v1.abs() + v2.abs());
            prop_assert!((v1 - v2).abs() <= db * psi.sup_norm() * n as f64 * l + slack);
            prop_assert!(v2 <= v1 - db * psi.min() * n as f64 * l + slack);
        }

        #[test]
        fn constant_shift_identity(c in -2.0f64..2.0, n in 1usize..5, eps in 0.05f64..0.9) {
            let s = bin();
            let f = s.enumerate_points(2).unwrap();
            let a = pressure_sum(&s, &f, &Potential::constant(c), n, eps).unwrap();
            let b = pressure_sum(&s, &f, &Potential::constant(0.0), n, eps).unwrap();
            prop_assert!((a - b - c * n as f64 * (1.0 / eps).ln()).abs() < 1e-9);
        }
    }
}
