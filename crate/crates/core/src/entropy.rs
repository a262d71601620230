//! Local and global entropy estimators for measures on shifts: Brin-Katok
//! and BS local entropies, Katok covering entropy, Pfister-Sullivan entropy,
//! and the dimension estimates built from them on generic points.

use crate::bowen::{self, Caps, Mode};
use crate::caratheodory::{Instance, InstanceOptions, Structure};
use crate::error::{Error, Result};
use crate::measure::{self, DictFn, MassSampler, MeasureKind, MeasureModel};
use crate::optimize;
use crate::pressure::{DimensionEstimate, ScaleEstimate};
use crate::stats;
use crate::systems::{PointWindow, Potential, SystemFamily, SystemModel};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

const TAG_X: u16 = 1;
const TAG_MASS: u16 = 2;
const TAG_BOOT: u16 = 3;
const TAG_POOL: u16 = 4;

pub const BOOTSTRAP_RESAMPLES: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    BkLower,
    BkUpper,
    BsLower,
    BsUpper,
    Katok,
    Ps,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bound {
    Lower,
    Upper,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleValue {
    pub n: usize,
    pub delta: Option<f64>,
    pub eta: Option<f64>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub quantity: Quantity,
    pub eps: f64,
    pub per_scale: Vec<ScaleValue>,
    pub extrapolated: f64,
    /// 99% bootstrap interval; degenerate for exact computations.
    pub ci: (f64, f64),
    pub exact: bool,
    /// Per-parameter estimates (PS: one per neighborhood radius).
    pub by_parameter: Vec<(f64, f64)>,
    pub flags: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalOptions {
    pub x_samples: usize,
    pub mass_samples: usize,
    pub sampler: MassSampler,
    pub bootstrap: usize,
}

impl Default for LocalOptions {
    fn default() -> Self {
        LocalOptions {
            x_samples: 16,
            mass_samples: 10_000,
            sampler: MassSampler::Conditioned,
            bootstrap: BOOTSTRAP_RESAMPLES,
        }
    }
}

fn check_schedule(schedule: &[usize], min_len: usize) -> Result<()> {
    if schedule.len() < min_len {
        return Err(Error::Config(format!(
            "n schedule needs at least {min_len} values, got {}",
            schedule.len()
        )));
    }
    if schedule[0] == 0 || schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("n schedule must be positive and strictly increasing".into()));
    }
    Ok(())
}

/// 99% percentile bootstrap of the mean.
fn bootstrap_mean(values: &[f64], resamples: usize, rng: &mut impl Rng) -> (f64, f64) {
    if values.len() < 2 || resamples == 0 {
        let m = values.iter().sum::<f64>() / values.len().max(1) as f64;
        return (m, m);
    }
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..values.len()).map(|_| values[rng.random_range(0..values.len())]).sum::<f64>() / values.len() as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    (stats::quantile(&means, 0.005), stats::quantile(&means, 0.995))
}

/// Decay rate of Bowen-ball masses against `S_n phi`, in secant form
/// `(L(n) - L(n0)) / (S_n phi(x) - S_n0 phi(x))` with `L = -log mu(B_n(x, eps))`
/// and `n0` the first schedule entry. The secant cancels the constant
/// contribution of the coordinates beyond the orbit segment. The lower
/// (upper) surrogate is the min (max) over the top half of the schedule,
/// averaged over sampled `x`.
#[allow(clippy::too_many_arguments)]
/// `(-log mass, S_n phi)` per sampled x and order.
type LocalRows = Vec<Vec<(f64, f64)>>;

fn local_entropy(
    measure: &MeasureModel,
    phi: &Potential,
    eps: f64,
    schedule: &[usize],
    opts: &LocalOptions,
    bound: Bound,
    quantity: Quantity,
) -> Result<EntropyEstimate> {
    let rows = local_rows(measure, phi, eps, schedule, opts)?;
    local_from_rows(measure, &rows, eps, schedule, opts, bound, quantity)
}

fn local_rows(measure: &MeasureModel, phi: &Potential, eps: f64, schedule: &[usize], opts: &LocalOptions) -> Result<LocalRows> {
    check_schedule(schedule, 2)?;
    if opts.x_samples == 0 {
        return Err(Error::Config("x_samples must be positive".into()));
    }
    let sys = &measure.system;
    let xs = measure.sample(opts.x_samples, measure::stream_id(TAG_X, 0))?;
    // Same mass stream for every n at a given x.
    let rows: Vec<Vec<(f64, f64)>> = xs
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            schedule
                .iter()
                .map(|&n| {
                    let m = measure::estimate_ball_mass(
                        measure,
                        x,
                        n,
                        eps,
                        opts.mass_samples,
                        opts.sampler,
                        measure::stream_id(TAG_MASS, i as u64),
                    )?;
                    Ok((-m.value.ln(), sys.birkhoff_sum(phi, x, n)?))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(rows)
}

fn local_from_rows(
    measure: &MeasureModel,
    rows: &LocalRows,
    eps: f64,
    schedule: &[usize],
    opts: &LocalOptions,
    bound: Bound,
    quantity: Quantity,
) -> Result<EntropyEstimate> {
    let exact = matches!(measure.kind, MeasureKind::Empirical { .. });
    let mut flags = Vec::new();
    let usable: Vec<usize> = (0..schedule.len())
        .filter(|&j| rows.iter().all(|r| r[j].0.is_finite()))
        .collect();
    if usable.len() < schedule.len() {
        flags.push(format!(
            "zero mass at n in {:?}; schedule shrunk",
            (0..schedule.len()).filter(|j| !usable.contains(j)).map(|j| schedule[j]).collect::<Vec<_>>()
        ));
    }
    if usable.len() < 2 || usable[0] != 0 {
        return Err(Error::EmptyScale(format!(
            "ball masses vanish on the schedule {schedule:?}; shrink it"
        )));
    }
    let start = (usable.len() / 2).max(1);
    let top = &usable[start..];
    let secant = |r: &[(f64, f64)], j: usize| (r[j].0 - r[0].0) / (r[j].1 - r[0].1);
    let per_x: Vec<f64> = rows
        .iter()
        .map(|r| {
            let vals = top.iter().map(|&j| secant(r, j));
            match bound {
                Bound::Lower => vals.fold(f64::INFINITY, f64::min),
                Bound::Upper => vals.fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect();
    let per_scale = top
        .iter()
        .map(|&j| ScaleValue {
            n: schedule[j],
            delta: None,
            eta: None,
            value: rows.iter().map(|r| secant(r, j)).sum::<f64>() / rows.len() as f64,
        })
        .collect();
    let mean = per_x.iter().sum::<f64>() / per_x.len() as f64;
    let mut rng = measure.rng(measure::stream_id(TAG_BOOT, 0));
    let ci = if exact && opts.x_samples == 1 {
        (mean, mean)
    } else {
        bootstrap_mean(&per_x, opts.bootstrap, &mut rng)
    };
    Ok(EntropyEstimate {
        quantity,
        eps,
        per_scale,
        extrapolated: mean,
        ci,
        exact: false,
        by_parameter: Vec::new(),
        flags,
    })
}

pub fn brin_katok(measure: &MeasureModel, eps: f64, schedule: &[usize], opts: &LocalOptions, bound: Bound) -> Result<EntropyEstimate> {
    let q = match bound {
        Bound::Lower => Quantity::BkLower,
        Bound::Upper => Quantity::BkUpper,
    };
    local_entropy(measure, &Potential::constant(1.0), eps, schedule, opts, bound, q)
}

/// Lower and upper estimates from one pass of ball masses.
pub fn brin_katok_bounds(
    measure: &MeasureModel,
    eps: f64,
    schedule: &[usize],
    opts: &LocalOptions,
) -> Result<(EntropyEstimate, EntropyEstimate)> {
    let rows = local_rows(measure, &Potential::constant(1.0), eps, schedule, opts)?;
    Ok((
        local_from_rows(measure, &rows, eps, schedule, opts, Bound::Lower, Quantity::BkLower)?,
        local_from_rows(measure, &rows, eps, schedule, opts, Bound::Upper, Quantity::BkUpper)?,
    ))
}

pub fn bs_entropy(
    measure: &MeasureModel,
    phi: &Potential,
    eps: f64,
    schedule: &[usize],
    opts: &LocalOptions,
    bound: Bound,
) -> Result<EntropyEstimate> {
    if !(phi.min() > 0.0) {
        return Err(Error::Precondition(format!("BS entropy needs phi > 0, min is {}", phi.min())));
    }
    let q = match bound {
        Bound::Lower => Quantity::BsLower,
        Bound::Upper => Quantity::BsUpper,
    };
    local_entropy(measure, phi, eps, schedule, opts, bound, q)
}

/// Points carrying the mass used by covering counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassPool {
    pub points: Vec<PointWindow>,
    pub weights: Vec<f64>,
    /// Weights are the measure itself rather than a sample of it.
    pub exact: bool,
}

pub fn mass_pool(measure: &MeasureModel, size: usize, stream: u64) -> Result<MassPool> {
    match &measure.kind {
        MeasureKind::Empirical { points, weights } => Ok(MassPool {
            points: points.clone(),
            weights: weights.clone(),
            exact: true,
        }),
        _ => {
            if size == 0 {
                return Err(Error::Config("pool size must be positive".into()));
            }
            Ok(MassPool {
                points: measure.sample(size, stream)?,
                weights: vec![1.0 / size as f64; size],
                exact: false,
            })
        }
    }
}

/// Pool members of each open ball `B_n(c, eps)`. When distinct symbols are
/// at least `eps` apart, only points sharing the first `n` symbols can meet.
pub fn ball_memberships(sys: &SystemModel, centers: &[PointWindow], pool: &[PointWindow], n: usize, eps: f64) -> Vec<Vec<usize>> {
    if sys.symbol_separation() >= eps {
        let mut groups: HashMap<&[u16], Vec<usize>> = HashMap::new();
        for (i, p) in pool.iter().enumerate() {
            groups.entry(p.forward(n)).or_default().push(i);
        }
        centers
            .par_iter()
            .map(|c| {
                groups
                    .get(c.forward(n))
                    .map(|g| g.iter().copied().filter(|&i| bowen::within(sys, c, &pool[i], n, eps, false)).collect())
                    .unwrap_or_default()
            })
            .collect()
    } else {
        centers
            .par_iter()
            .map(|c| (0..pool.len()).filter(|&i| bowen::within(sys, c, &pool[i], n, eps, false)).collect())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KatokCount {
    pub count: usize,
    pub exact: bool,
    pub covered: f64,
}

fn partial_cover(sets: &[Vec<usize>], weights: &[f64], delta: f64, exact: bool) -> Result<KatokCount> {
    let target = 1.0 - delta;
    let chosen = if exact {
        optimize::exact_partial_cover(sets, weights, target)?
    } else {
        optimize::greedy_partial_cover(sets, weights, target)
    };
    let total = |c: &[usize]| -> f64 {
        let mut hit = vec![false; weights.len()];
        for &s in c {
            for &e in &sets[s] {
                hit[e] = true;
            }
        }
        hit.iter().zip(weights).filter(|(h, _)| **h).map(|(_, w)| w).sum()
    };
    match chosen {
        Some(c) => Ok(KatokCount {
            count: c.len(),
            exact,
            covered: total(&c),
        }),
        None => {
            let all: Vec<usize> = (0..sets.len()).collect();
            Err(Error::PoolInsufficient {
                covered: total(&all),
                target,
            })
        }
    }
}

/// Fewest open Bowen balls around `centers` whose union carries pool mass
/// strictly above `1 - delta`.
pub fn katok_rn(sys: &SystemModel, pool: &MassPool, centers: &[PointWindow], n: usize, eps: f64, delta: f64, caps: Caps) -> Result<KatokCount> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Precondition(format!("delta must lie in (0, 1), got {delta}")));
    }
    if eps > sys.diameter() {
        return Ok(KatokCount {
            count: 1,
            exact: pool.exact,
            covered: 1.0,
        });
    }
    let sets = ball_memberships(sys, centers, &pool.points, n, eps);
    partial_cover(&sets, &pool.weights, delta, pool.points.len() <= caps.exact.min(optimize::COVER_LIMIT))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KatokOptions {
    pub pool_size: usize,
    pub caps: Caps,
    pub bootstrap: usize,
}

impl Default for KatokOptions {
    fn default() -> Self {
        KatokOptions {
            pool_size: 4000,
            caps: Caps::default(),
            bootstrap: BOOTSTRAP_RESAMPLES,
        }
    }
}

/// Slope of `log r_n` against `n`. For sampled pools the interval comes from
/// multinomial reweighting of the pool with the ball memberships held fixed.
pub fn katok_entropy(measure: &MeasureModel, eps: f64, delta: f64, schedule: &[usize], opts: &KatokOptions) -> Result<EntropyEstimate> {
    check_schedule(schedule, 2)?;
    let sys = &measure.system;
    let pool = mass_pool(measure, opts.pool_size, measure::stream_id(TAG_POOL, 0))?;
    let mut centers = pool.points.clone();
    centers.sort();
    centers.dedup();
    let sets: Vec<Vec<Vec<usize>>> = schedule
        .iter()
        .map(|&n| {
            if eps > sys.diameter() {
                vec![(0..pool.points.len()).collect()]
            } else {
                ball_memberships(sys, &centers, &pool.points, n, eps)
            }
        })
        .collect();
    let exact = pool.exact && pool.points.len() <= opts.caps.exact.min(optimize::COVER_LIMIT);
    let counts: Vec<KatokCount> = sets
        .iter()
        .map(|s| partial_cover(s, &pool.weights, delta, exact))
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = schedule.iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = counts.iter().map(|c| (c.count as f64).ln()).collect();
    let slope = stats::fit_line(&xs, &ys)?.slope;
    let ci = if pool.exact || opts.bootstrap == 0 {
        (slope, slope)
    } else {
        let m = pool.points.len();
        let slopes: Vec<f64> = (0..opts.bootstrap)
            .into_par_iter()
            .map(|b| -> Result<f64> {
                let mut rng = measure.rng(measure::stream_id(TAG_BOOT, 1 + b as u64));
                let mut w = vec![0.0; m];
                for _ in 0..m {
                    w[rng.random_range(0..m)] += 1.0 / m as f64;
                }
                let ys: Vec<f64> = sets
                    .iter()
                    .map(|s| Ok((partial_cover(s, &w, delta, false)?.count as f64).ln()))
                    .collect::<Result<_>>()?;
                Ok(stats::fit_line(&xs, &ys)?.slope)
            })
            .collect::<Result<_>>()?;
        let mut slopes = slopes;
        slopes.sort_by(f64::total_cmp);
        (stats::quantile(&slopes, 0.005), stats::quantile(&slopes, 0.995))
    };
    Ok(EntropyEstimate {
        quantity: Quantity::Katok,
        eps,
        per_scale: schedule
            .iter()
            .zip(&ys)
            .map(|(&n, &v)| ScaleValue {
                n,
                delta: Some(delta),
                eta: None,
                value: v,
            })
            .collect(),
        extrapolated: slope,
        ci,
        exact: counts.iter().all(|c| c.exact),
        by_parameter: Vec::new(),
        flags: Vec::new(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsOptions {
    /// Neighborhood radii; the smallest feasible one gives the estimate.
    pub etas: Vec<f64>,
    pub dictionary: Vec<DictFn>,
    /// Enumerate words this much longer than the orbit segment.
    pub depth_extra: usize,
    pub mode: Mode,
    pub caps: Caps,
}

impl PsOptions {
    pub fn new(sys: &SystemModel, etas: Vec<f64>, dictionary_size: usize) -> Self {
        PsOptions {
            etas,
            dictionary: measure::default_dictionary(sys, dictionary_size),
            depth_extra: 0,
            mode: Mode::Auto,
            caps: Caps::default(),
        }
    }
}

/// Points of the enumerated universe whose depth-`n` empirical measure lies
/// within `eta` of the measure on every dictionary function.
pub fn near_measure_points(measure: &MeasureModel, n: usize, eta: f64, opts: &PsOptions) -> Result<Vec<PointWindow>> {
    let universe = measure.system.enumerate_points(n + opts.depth_extra)?;
    let keep: Vec<bool> = universe
        .par_iter()
        .map(|x| measure::generic_point_test(measure, x, n, eta, &opts.dictionary))
        .collect::<Result<_>>()?;
    Ok(universe.into_iter().zip(keep).filter(|(_, k)| *k).map(|(x, _)| x).collect())
}

/// Separated-set growth restricted to points with empirical measures near
/// the measure, one slope per radius.
pub fn ps_entropy(measure: &MeasureModel, eps: f64, schedule: &[usize], opts: &PsOptions) -> Result<EntropyEstimate> {
    check_schedule(schedule, 2)?;
    if opts.etas.is_empty() {
        return Err(Error::Config("PS entropy needs at least one radius".into()));
    }
    let sys = &measure.system;
    let mut etas = opts.etas.clone();
    etas.sort_by(|a, b| b.total_cmp(a));
    let mut per_scale = Vec::new();
    let mut by_parameter = Vec::new();
    let mut flags = Vec::new();
    let mut exact = true;
    for &eta in &etas {
        let mut ys = Vec::with_capacity(schedule.len());
        let mut empty = false;
        for &n in schedule {
            let pts = near_measure_points(measure, n, eta, opts)?;
            if pts.is_empty() {
                flags.push(format!("no points within {eta} of the measure at n = {n}"));
                empty = true;
                break;
            }
            let sel = bowen::max_separated(sys, &pts, n, eps, opts.mode, opts.caps)?;
            exact &= sel.exact;
            let v = (sel.len() as f64).ln();
            per_scale.push(ScaleValue {
                n,
                delta: None,
                eta: Some(eta),
                value: v,
            });
            ys.push(v);
        }
        if empty {
            continue;
        }
        let xs: Vec<f64> = schedule.iter().map(|&n| n as f64).collect();
        by_parameter.push((eta, stats::fit_line(&xs, &ys)?.slope));
    }
    let Some(&(_, value)) = by_parameter.last() else {
        return Err(Error::EmptyScale(format!("every radius in {etas:?} is too small")));
    };
    Ok(EntropyEstimate {
        quantity: Quantity::Ps,
        eps,
        per_scale,
        extrapolated: value,
        ci: (value, value),
        exact,
        by_parameter,
        flags,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmuOptions {
    pub dictionary_size: usize,
    pub eta: f64,
    /// Tolerance of the generic-point filter for the subset estimate.
    pub tol: f64,
    pub ps_schedule: Vec<usize>,
    pub katok_schedule: Vec<usize>,
    pub bk_schedule: Vec<usize>,
    pub delta: f64,
    pub katok: KatokOptions,
    pub local: LocalOptions,
    /// Word length of the generic set used for the subset estimate.
    pub subset_depth: usize,
    pub lambda_tol: f64,
}

impl Default for GmuOptions {
    fn default() -> Self {
        GmuOptions {
            dictionary_size: 2,
            eta: 0.3,
            tol: 0.3,
            ps_schedule: vec![4, 5, 6],
            katok_schedule: vec![3, 4, 5],
            bk_schedule: vec![2, 4, 6, 8],
            delta: 0.5,
            katok: KatokOptions {
                pool_size: 20_000,
                ..KatokOptions::default()
            },
            local: LocalOptions::default(),
            subset_depth: 3,
            lambda_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmuEstimate {
    pub ps: DimensionEstimate,
    pub katok: DimensionEstimate,
    pub bk_lower: DimensionEstimate,
    pub bk_upper: DimensionEstimate,
    pub bowen_subset: DimensionEstimate,
    /// Size of the generic word set per scale.
    pub generic_counts: Vec<(f64, usize)>,
}

fn scale(eps: f64, value: f64) -> ScaleEstimate {
    ScaleEstimate {
        eps,
        pressure: value,
        intercept: 0.0,
        residual: 0.0,
        max_ratio: value / (1.0 / eps).ln(),
        records: Vec::new(),
        oracle: None,
    }
}

/// Entropy-based dimension estimates over a scale schedule, next to the
/// Bowen subset estimate of the generic word set.
pub fn gmu_mdim_estimate(
    family: &SystemFamily,
    measure_at: &(dyn Fn(&SystemModel) -> Result<MeasureModel> + Sync),
    eps_schedule: &[f64],
    opts: &GmuOptions,
) -> Result<GmuEstimate> {
    if eps_schedule.len() < 3 {
        return Err(Error::Config("eps schedule needs at least 3 values".into()));
    }
    type Row = (f64, f64, f64, f64, f64, usize);
    let rows: Vec<Row> = eps_schedule
        .par_iter()
        .map(|&eps| -> Result<Row> {
            let sys = family.at_scale(eps)?;
            let mu = measure_at(&sys)?;
            let ps_opts = PsOptions::new(&sys, vec![opts.eta], opts.dictionary_size);
            let ps = ps_entropy(&mu, eps, &opts.ps_schedule, &ps_opts)?.extrapolated;
            let kat = katok_entropy(&mu, eps, opts.delta, &opts.katok_schedule, &opts.katok)?.extrapolated;
            let (lo, hi) = brin_katok_bounds(&mu, eps, &opts.bk_schedule, &opts.local)?;
            let (lo, hi) = (lo.extrapolated, hi.extrapolated);
            let d = opts.subset_depth;
            let z = near_measure_points(&mu, d, opts.tol, &ps_opts)?;
            if z.is_empty() {
                return Err(Error::EmptyScale(format!("no generic words of length {d} at tolerance {}", opts.tol)));
            }
            let inst = Instance::new(&sys, &z, &Potential::constant(0.0), InstanceOptions::new(d, d, eps))?;
            let sub = inst.critical(Structure::Cover, opts.lambda_tol)?.lambda;
            Ok((ps, kat, lo, hi, sub, z.len()))
        })
        .collect::<Result<_>>()?;
    let est = |f: &dyn Fn(&Row) -> f64| {
        DimensionEstimate::from_scales(
            eps_schedule.iter().zip(&rows).map(|(&e, r)| scale(e, f(r))).collect(),
            eps_schedule.to_vec(),
            Vec::new(),
        )
    };
    Ok(GmuEstimate {
        ps: est(&|r| r.0)?,
        katok: est(&|r| r.1)?,
        bk_lower: est(&|r| r.2)?,
        bk_upper: est(&|r| r.3)?,
        bowen_subset: est(&|r| r.4)?,
        generic_counts: eps_schedule.iter().zip(&rows).map(|(&e, r)| (e, r.5)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bin() -> SystemModel {
        SystemModel::full_shift(2).build().unwrap()
    }

    fn quick() -> LocalOptions {
        LocalOptions {
            x_samples: 6,
            mass_samples: 2000,
            ..LocalOptions::default()
        }
    }

    #[test]
    fn bk_on_uniform_bernoulli() {
        let m = MeasureModel::product_uniform(&bin(), 11);
        for b in [Bound::Lower, Bound::Upper] {
            let e = brin_katok(&m, 0.5, &[2, 4, 6, 8], &quick(), b).unwrap();
            assert!((e.extrapolated - 2f64.ln()).abs() < 0.1, "{e:?}");
        }
    }

    #[test]
    fn bs_collapses_to_bk() {
        let m = MeasureModel::product_uniform(&bin(), 3);
        let bk = brin_katok(&m, 0.5, &[2, 4, 6], &quick(), Bound::Upper).unwrap();
        let bs = bs_entropy(&m, &Potential::constant(1.0), 0.5, &[2, 4, 6], &quick(), Bound::Upper).unwrap();
        assert_eq!(bk.extrapolated.to_bits(), bs.extrapolated.to_bits());
        assert_eq!(bk.per_scale, bs.per_scale);
        let half = bs_entropy(&m, &Potential::constant(2.0), 0.5, &[2, 4, 6], &quick(), Bound::Upper).unwrap();
        assert!((half.extrapolated - bk.extrapolated / 2.0).abs() < 1e-12);
        assert!(bs_entropy(&m, &Potential::constant(0.0), 0.5, &[2, 4], &quick(), Bound::Upper).is_err());
    }

    #[test]
    fn shared_bounds_match_separate_calls() {
        let s = SystemModel::full_shift(2).window(16).build().unwrap();
        let m = MeasureModel::product_uniform(&s, 2);
        let (lo, hi) = brin_katok_bounds(&m, 0.5, &[2, 4, 6], &quick()).unwrap();
        assert_eq!(lo, brin_katok(&m, 0.5, &[2, 4, 6], &quick(), Bound::Lower).unwrap());
        assert_eq!(hi, brin_katok(&m, 0.5, &[2, 4, 6], &quick(), Bound::Upper).unwrap());
    }

    #[test]
    fn point_mass_has_zero_entropy() {
        let s = bin();
        let m = MeasureModel::point_mass(&s, s.point_from_word(&[]).unwrap(), 0).unwrap();
        let e = brin_katok(&m, 0.5, &[1, 2, 3], &quick(), Bound::Upper).unwrap();
        assert_eq!(e.extrapolated, 0.0);
        let k = katok_entropy(&m, 0.5, 0.5, &[1, 2, 3], &KatokOptions::default()).unwrap();
        assert_eq!(k.extrapolated, 0.0);
        let ps = ps_entropy(&m, 0.5, &[2, 3, 4], &PsOptions::new(&s, vec![0.1], 4)).unwrap();
        assert_eq!(ps.extrapolated, 0.0);
    }

    fn depth3_words() -> (SystemModel, MeasureModel) {
        let s = bin();
        let pts = s.enumerate_points(3).unwrap();
        let w = vec![1.0; pts.len()];
        let m = MeasureModel::empirical(&s, pts, w, 0).unwrap();
        (s, m)
    }

    #[test]
    fn katok_counts_on_cylinders() {
        let (s, m) = depth3_words();
        let pool = mass_pool(&m, 0, 0).unwrap();
        let c = |d: f64| katok_rn(&s, &pool, &pool.points, 3, 0.5, d, Caps::default()).unwrap();
        // Strictly more than half the mass needs five of the eight words.
        assert_eq!(c(0.5).count, 5);
        assert_eq!(c(0.55).count, 4);
        assert_eq!(c(0.999).count, 1);
        assert!(c(0.5).exact);
        let big = katok_rn(&s, &pool, &pool.points, 3, 2.5, 0.5, Caps::default()).unwrap();
        assert_eq!(big.count, 1);
        assert!(katok_rn(&s, &pool, &pool.points, 3, 0.5, 1.0, Caps::default()).is_err());
    }

    #[test]
    fn katok_monotone_on_small_instances() {
        let (s, m) = depth3_words();
        let pool = mass_pool(&m, 0, 0).unwrap();
        let r = |n: usize, eps: f64, d: f64| katok_rn(&s, &pool, &pool.points, n, eps, d, Caps::default()).unwrap().count;
        for n in 1..3 {
            for &eps in &[0.3, 0.6, 1.2] {
                for &d in &[0.2, 0.5, 0.8] {
                    assert!(r(n, eps, d) <= r(n + 1, eps, d));
                    assert!(r(n, 2.0 * eps, d) <= r(n, eps, d));
                    assert!(r(n, eps, d + 0.1) <= r(n, eps, d));
                }
            }
        }
    }

    #[test]
    fn katok_rate_on_bernoulli() {
        let m = MeasureModel::product_uniform(&bin(), 5);
        let opts = KatokOptions {
            pool_size: 3000,
            bootstrap: 20,
            ..KatokOptions::default()
        };
        let e = katok_entropy(&m, 0.5, 0.5, &[2, 3, 4, 5, 6], &opts).unwrap();
        assert!((e.extrapolated - 2f64.ln()).abs() < 0.1, "{e:?}");
        assert!(e.ci.0 <= e.ci.1 && e.ci.1 - e.ci.0 < 0.3, "{e:?}");
    }

    #[test]
    fn ps_radius_monotone_and_vacuous() {
        let s = bin();
        let m = MeasureModel::product_uniform(&s, 0);
        let opts = PsOptions::new(&s, vec![10.0, 0.3, 0.2], 6);
        let e = ps_entropy(&m, 0.5, &[4, 6, 8], &opts).unwrap();
        // Huge radius: every word, slope log 2.
        assert!((e.by_parameter[0].1 - 2f64.ln()).abs() < 1e-12);
        for &n in &[4, 6, 8] {
            let v: Vec<f64> = e.per_scale.iter().filter(|s| s.n == n).map(|s| s.value).collect();
            assert!(v.windows(2).all(|w| w[1] <= w[0]));
        }
    }
}
