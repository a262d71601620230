//! Cover, packing, BS and weighted structures on finite point sets, and
//! critical-exponent extraction by threshold crossing.
//!
//! Values are handled in log space. Countable covers and packings are
//! truncated to orders `N..=n_max` and to the candidate centers, so cover
//! values are upper bounds of the untruncated infimum and packing values are
//! lower bounds of the untruncated supremum.

use crate::bowen::{self, Caps};
use crate::error::{Error, Result};
use crate::optimize::{self, CoverInstance};
use crate::pressure::DimensionEstimate;
use crate::pressure::ScaleEstimate;
use crate::stats;
use crate::systems::{PointWindow, Potential, PotentialSpec, SystemFamily, SystemModel};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Structure {
    /// Bowen cover structure `M`.
    Cover,
    /// Covers of fixed order `N`.
    FixedLength,
    /// Disjoint closed families `P`.
    Packing,
    /// Packing refined by decompositions of `Z`.
    RefinedPacking,
    /// BS covers `R`.
    Bs,
    /// BS packings.
    PackingBs,
    RefinedPackingBs,
    /// Fractional BS covers `W`.
    Weighted,
}

impl Structure {
    pub fn is_bs(self) -> bool {
        matches!(
            self,
            Structure::Bs | Structure::PackingBs | Structure::RefinedPackingBs | Structure::Weighted
        )
    }
}

/// A candidate Bowen ball and what it contains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateBall {
    /// Index into the instance's center list.
    pub center: usize,
    pub order: usize,
    /// Indices into `Z` of the members.
    pub members: Vec<usize>,
    /// Upper bound for `sup_{y in ball} S_n phi(y)`.
    pub sup_sum: f64,
    /// Lower bound for `inf_{y in ball} S_n phi(y)`.
    pub inf_sum: f64,
    /// Whether `S_n phi` is constant on the ball, so both bounds are exact.
    pub resolved: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceOptions {
    pub n_min: usize,
    pub n_max: usize,
    pub eps: f64,
    /// Extra cover centers beyond `Z`.
    pub extra_centers: Vec<PointWindow>,
    /// Extra points used to judge whether closed balls intersect.
    pub universe: Vec<PointWindow>,
    pub caps: Caps,
    /// Largest packing candidate family searched exactly.
    pub packing_cap: usize,
    /// Largest decomposition block count for refined packings.
    pub partition_cap: usize,
}

impl InstanceOptions {
    pub fn new(n_min: usize, n_max: usize, eps: f64) -> Self {
        InstanceOptions {
            n_min,
            n_max,
            eps,
            extra_centers: Vec::new(),
            universe: Vec::new(),
            caps: Caps::default(),
            packing_cap: 64,
            partition_cap: 8,
        }
    }
}

/// A precomputed outer-measure problem on a finite set `Z`.
#[derive(Clone, Debug)]
pub struct Instance {
    pub sys: SystemModel,
    pub z: Vec<PointWindow>,
    pub phi: Potential,
    pub opts: InstanceOptions,
    pub centers: Vec<PointWindow>,
    /// Open balls for covers, centered anywhere in `centers`.
    pub open_balls: Vec<CandidateBall>,
    /// Closed balls for packings, centered in `Z`.
    pub closed_balls: Vec<CandidateBall>,
    /// `conflict[i]` lists closed balls meeting closed ball `i` on the universe.
    pub conflict: Vec<Vec<usize>>,
}

/// A structure value with provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Valuation {
    pub log_value: f64,
    pub exact: bool,
    /// Chosen candidate balls (indices into the relevant ball list).
    pub chosen: Vec<usize>,
    /// Fractional weights for the weighted structure.
    pub weights: Option<Vec<f64>>,
}

impl Valuation {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }
}

const BOX_WORD_LIMIT: usize = 100_000;

/// Bounds of `S_n phi` over the coordinate box containing the ball.
fn box_bounds(sys: &SystemModel, phi: &Potential, c: &PointWindow, n: usize, eps: f64, closed: bool) -> Option<(f64, f64)> {
    match phi {
        Potential::Constant(v) => Some((v * n as f64, v * n as f64)),
        Potential::Table(t) => {
            let allowed: Vec<Vec<u16>> = (0..(n + t.len - 1) as i64)
                .map(|i| bowen::box_symbols(sys, c, i, n, eps, closed))
                .collect();
            let mut hi = 0.0;
            let mut lo = 0.0;
            for i in 0..n {
                let slots = &allowed[i..i + t.len];
                let count: usize = slots.iter().map(|s| s.len()).product();
                if count > BOX_WORD_LIMIT {
                    return None;
                }
                let mut mx = f64::NEG_INFINITY;
                let mut mn = f64::INFINITY;
                let mut digits = vec![0usize; t.len];
                loop {
                    let word: Vec<u16> = digits.iter().zip(slots).map(|(&d, s)| s[d]).collect();
                    let v = t.value_at(&word);
                    mx = mx.max(v);
                    mn = mn.min(v);
                    let mut p = t.len;
                    loop {
                        if p == 0 {
                            break;
                        }
                        p -= 1;
                        digits[p] += 1;
                        if digits[p] < slots[p].len() {
                            break;
                        }
                        digits[p] = 0;
                        if p == 0 {
                            p = usize::MAX;
                            break;
                        }
                    }
                    if p == usize::MAX {
                        break;
                    }
                }
                hi += mx;
                lo += mn;
            }
            Some((lo, hi))
        }
    }
}

fn ball_sums(sys: &SystemModel, phi: &Potential, c: &PointWindow, n: usize, eps: f64, closed: bool) -> Result<(f64, f64, bool)> {
    let at_center = sys.birkhoff_sum(phi, c, n)?;
    let gamma = phi.modulus(sys, eps);
    let mod_hi = at_center + n as f64 * gamma;
    let mod_lo = at_center - n as f64 * gamma;
    match box_bounds(sys, phi, c, n, eps, closed) {
        Some((lo, hi)) => {
            let resolved = lo == hi;
            Ok((hi.min(mod_hi), lo.max(mod_lo), resolved))
        }
        None => Ok((mod_hi, mod_lo, gamma == 0.0)),
    }
}

impl Instance {
    pub fn new(sys: &SystemModel, z: &[PointWindow], phi: &Potential, opts: InstanceOptions) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::Precondition("Z must be nonempty".into()));
        }
        if opts.n_min == 0 || opts.n_min > opts.n_max {
            return Err(Error::Precondition(format!(
                "orders must satisfy 1 <= N <= n_max, got N={} n_max={}",
                opts.n_min, opts.n_max
            )));
        }
        if !(opts.eps > 0.0) {
            return Err(Error::Precondition("eps must be positive".into()));
        }
        if opts.n_max > sys.window {
            return Err(Error::WindowExhausted {
                needed: opts.n_max,
                available: sys.window,
            });
        }
        for x in z.iter().chain(&opts.extra_centers).chain(&opts.universe) {
            sys.check_point(x)?;
        }
        let mut centers: Vec<PointWindow> = z.to_vec();
        for c in &opts.extra_centers {
            if !centers.contains(c) {
                centers.push(c.clone());
            }
        }
        let eps = opts.eps;
        let orders: Vec<usize> = (opts.n_min..=opts.n_max).collect();
        let cells: Vec<(usize, usize)> = (0..centers.len())
            .flat_map(|c| orders.iter().map(move |&n| (c, n)))
            .collect();
        let open_balls = cells
            .par_iter()
            .map(|&(c, n)| -> Result<Option<CandidateBall>> {
                let members: Vec<usize> = (0..z.len())
                    .filter(|&i| bowen::within(sys, &centers[c], &z[i], n, eps, false))
                    .collect();
                if members.is_empty() {
                    return Ok(None);
                }
                let (sup_sum, inf_sum, resolved) = ball_sums(sys, phi, &centers[c], n, eps, false)?;
                Ok(Some(CandidateBall {
                    center: c,
                    order: n,
                    members,
                    sup_sum,
                    inf_sum,
                    resolved,
                }))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect::<Vec<_>>();
        let closed_balls = cells
            .par_iter()
            .filter(|&&(c, _)| c < z.len())
            .map(|&(c, n)| -> Result<CandidateBall> {
                let members: Vec<usize> = (0..z.len())
                    .filter(|&i| bowen::within(sys, &centers[c], &z[i], n, eps, true))
                    .collect();
                let (sup_sum, inf_sum, resolved) = ball_sums(sys, phi, &centers[c], n, eps, true)?;
                Ok(CandidateBall {
                    center: c,
                    order: n,
                    members,
                    sup_sum,
                    inf_sum,
                    resolved,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        // Intersections of closed balls are judged on Z, the extra centers and
        // the universe.
        let mut pts: Vec<PointWindow> = centers.clone();
        pts.extend(opts.universe.iter().cloned());
        pts.sort();
        pts.dedup();
        let member_pts: Vec<Vec<bool>> = closed_balls
            .par_iter()
            .map(|b| {
                pts.iter()
                    .map(|p| bowen::within(sys, &centers[b.center], p, b.order, eps, true))
                    .collect()
            })
            .collect();
        let m = closed_balls.len();
        let conflict: Vec<Vec<usize>> = (0..m)
            .map(|a| {
                (0..m)
                    .filter(|&b| b != a && (0..pts.len()).any(|p| member_pts[a][p] && member_pts[b][p]))
                    .collect()
            })
            .collect();
        Ok(Instance {
            sys: sys.clone(),
            z: z.to_vec(),
            phi: phi.clone(),
            opts,
            centers,
            open_balls,
            closed_balls,
            conflict,
        })
    }

    /// The same candidate families with a different potential.
    pub fn with_potential(&self, phi: &Potential) -> Result<Instance> {
        let eps = self.opts.eps;
        let redo = |balls: &[CandidateBall], closed: bool| -> Result<Vec<CandidateBall>> {
            balls
                .iter()
                .map(|b| {
                    let (sup_sum, inf_sum, resolved) = ball_sums(&self.sys, phi, &self.centers[b.center], b.order, eps, closed)?;
                    Ok(CandidateBall {
                        sup_sum,
                        inf_sum,
                        resolved,
                        ..b.clone()
                    })
                })
                .collect()
        };
        Ok(Instance {
            phi: phi.clone(),
            open_balls: redo(&self.open_balls, false)?,
            closed_balls: redo(&self.closed_balls, true)?,
            ..self.clone()
        })
    }

    /// Whether every candidate ball resolves the potential exactly.
    pub fn resolved(&self) -> bool {
        self.open_balls.iter().chain(&self.closed_balls).all(|b| b.resolved)
    }

    fn log_l(&self) -> f64 {
        (1.0 / self.opts.eps).ln()
    }

    fn check_bs(&self) -> Result<()> {
        if !(self.phi.min() > 0.0) {
            return Err(Error::Precondition(format!(
                "BS structures need phi > 0, min is {}",
                self.phi.min()
            )));
        }
        Ok(())
    }

    /// Log weight of a ball: `-n lambda + log(1/eps) sup S_n phi` for the
    /// Bowen structures, `-lambda sup S_n phi` for the BS ones.
    fn log_weight(&self, b: &CandidateBall, lambda: f64, bs: bool) -> f64 {
        if bs {
            -lambda * b.sup_sum
        } else {
            -(b.order as f64) * lambda + self.log_l() * b.sup_sum
        }
    }

    fn cover(&self, lambda: f64, bs: bool, only_order: Option<usize>) -> Result<Valuation> {
        let balls: Vec<usize> = (0..self.open_balls.len())
            .filter(|&i| only_order.is_none_or(|n| self.open_balls[i].order == n))
            .collect();
        let logs: Vec<f64> = balls
            .iter()
            .map(|&i| self.log_weight(&self.open_balls[i], lambda, bs))
            .collect();
        let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let inst = CoverInstance {
            elements: self.z.len(),
            sets: balls.iter().map(|&i| self.open_balls[i].members.clone()).collect(),
            costs: logs.iter().map(|&v| (v - m).exp()).collect(),
        };
        let exact = self.z.len() <= self.opts.caps.exact.min(optimize::COVER_LIMIT);
        let chosen = if exact {
            optimize::exact_set_cover(&inst)?
        } else {
            optimize::greedy_set_cover(&inst)?
        };
        let log_value = stats::log_sum_exp(chosen.iter().map(|&c| logs[c]));
        Ok(Valuation {
            log_value,
            exact,
            chosen: chosen.iter().map(|&c| balls[c]).collect(),
            weights: None,
        })
    }

    fn packing_on(&self, lambda: f64, bs: bool, subset: Option<&[usize]>) -> Result<Valuation> {
        let balls: Vec<usize> = (0..self.closed_balls.len())
            .filter(|&i| subset.is_none_or(|s| s.contains(&self.closed_balls[i].center)))
            .collect();
        if balls.is_empty() {
            return Ok(Valuation {
                log_value: f64::NEG_INFINITY,
                exact: true,
                chosen: Vec::new(),
                weights: None,
            });
        }
        let logs: Vec<f64> = balls
            .iter()
            .map(|&i| self.log_weight(&self.closed_balls[i], lambda, bs))
            .collect();
        let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logs.iter().map(|&v| (v - m).exp().max(f64::MIN_POSITIVE)).collect();
        let pos: Vec<usize> = {
            let mut p = vec![usize::MAX; self.closed_balls.len()];
            for (k, &i) in balls.iter().enumerate() {
                p[i] = k;
            }
            p
        };
        let exact = balls.len() <= self.opts.packing_cap.min(optimize::CLIQUE_LIMIT);
        let chosen = if exact {
            let conflict: Vec<u128> = balls
                .iter()
                .map(|&i| {
                    self.conflict[i]
                        .iter()
                        .filter(|&&j| pos[j] != usize::MAX)
                        .fold(0u128, |acc, &j| acc | (1u128 << pos[j]))
                })
                .collect();
            optimize::max_weight_independent_set(&conflict, &w)?
        } else {
            let conflicts = |a: usize, b: usize| self.conflict[balls[a]].contains(&balls[b]);
            optimize::greedy_independent_set(&conflicts, &w)
        };
        Ok(Valuation {
            log_value: stats::log_sum_exp(chosen.iter().map(|&c| logs[c])),
            exact,
            chosen: chosen.iter().map(|&c| balls[c]).collect(),
            weights: None,
        })
    }

    fn refined(&self, lambda: f64, bs: bool) -> Result<Valuation> {
        let n = self.z.len();
        let k = self.opts.partition_cap.max(1);
        let block_value = |block: &[usize]| -> Result<f64> { Ok(self.packing_on(lambda, bs, Some(block))?.log_value) };
        if n <= 8 {
            let mut best = f64::INFINITY;
            let mut exact = true;
            for partition in set_partitions(n, k) {
                let mut vals = Vec::with_capacity(partition.len());
                for b in &partition {
                    let v = self.packing_on(lambda, bs, Some(b))?;
                    exact &= v.exact;
                    vals.push(v.log_value);
                }
                best = best.min(stats::log_sum_exp(vals));
            }
            return Ok(Valuation {
                log_value: best,
                exact,
                chosen: Vec::new(),
                weights: None,
            });
        }
        // Agglomerative: start from singletons, merge the pair that lowers the
        // total most, and keep merging while it helps or there are too many blocks.
        let mut blocks: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        let mut vals: Vec<f64> = blocks.iter().map(|b| block_value(b)).collect::<Result<_>>()?;
        loop {
            let total = stats::log_sum_exp(vals.iter().cloned());
            let mut best: Option<(usize, usize, f64, f64)> = None;
            for a in 0..blocks.len() {
                for b in a + 1..blocks.len() {
                    let mut merged = blocks[a].clone();
                    merged.extend(&blocks[b]);
                    let mv = block_value(&merged)?;
                    let new_total = stats::log_sum_exp(
                        vals.iter()
                            .enumerate()
                            .filter(|&(i, _)| i != a && i != b)
                            .map(|(_, &v)| v)
                            .chain(std::iter::once(mv)),
                    );
                    if best.is_none_or(|(_, _, t, _)| new_total < t) {
                        best = Some((a, b, new_total, mv));
                    }
                }
            }
            match best {
                Some((a, b, t, mv)) if t <= total || blocks.len() > k => {
                    let moved = blocks.remove(b);
                    vals.remove(b);
                    blocks[a].extend(moved);
                    vals[a] = mv;
                }
                _ => break,
            }
        }
        Ok(Valuation {
            log_value: stats::log_sum_exp(vals),
            exact: false,
            chosen: Vec::new(),
            weights: None,
        })
    }

    fn weighted(&self, lambda: f64) -> Result<Valuation> {
        let logs: Vec<f64> = self
            .open_balls
            .iter()
            .map(|b| self.log_weight(b, lambda, true))
            .collect();
        let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let inst = CoverInstance {
            elements: self.z.len(),
            sets: self.open_balls.iter().map(|b| b.members.clone()).collect(),
            costs: logs.iter().map(|&v| (v - m).exp()).collect(),
        };
        let (v, c) = optimize::fractional_cover(&inst)?;
        let chosen = (0..c.len()).filter(|&i| c[i] > 1e-12).collect();
        Ok(Valuation {
            log_value: m + v.max(0.0).ln(),
            exact: true,
            chosen,
            weights: Some(c),
        })
    }

    /// Value of a structure at exponent `lambda`.
    pub fn value(&self, structure: Structure, lambda: f64) -> Result<Valuation> {
        if structure.is_bs() {
            self.check_bs()?;
        }
        match structure {
            Structure::Cover => self.cover(lambda, false, None),
            Structure::FixedLength => self.cover(lambda, false, Some(self.opts.n_min)),
            Structure::Packing => self.packing_on(lambda, false, None),
            Structure::RefinedPacking => self.refined(lambda, false),
            Structure::Bs => self.cover(lambda, true, None),
            Structure::PackingBs => self.packing_on(lambda, true, None),
            Structure::RefinedPackingBs => self.refined(lambda, true),
            Structure::Weighted => self.weighted(lambda),
        }
    }

    /// Critical exponent of a structure on this instance.
    pub fn critical(&self, structure: Structure, tol: f64) -> Result<CriticalValue> {
        let mut c = critical_lambda(&|l| Ok(self.value(structure, l)?.log_value), tol)?;
        c.exact = self.value(structure, c.lambda)?.exact;
        Ok(c)
    }
}

/// All partitions of `0..n` into at most `k` blocks (restricted growth strings).
pub fn set_partitions(n: usize, k: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut labels = vec![0usize; n];
    fn rec(i: usize, n: usize, k: usize, used: usize, labels: &mut Vec<usize>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == n {
            let mut blocks = vec![Vec::new(); used];
            for (p, &l) in labels.iter().enumerate() {
                blocks[l].push(p);
            }
            out.push(blocks);
            return;
        }
        for l in 0..=used.min(k.saturating_sub(1)) {
            if l == used && used >= k {
                continue;
            }
            labels[i] = l;
            rec(i + 1, n, k, used.max(l + 1), labels, out);
        }
    }
    if n == 0 {
        return vec![Vec::new()];
    }
    rec(0, n, k, 0, &mut labels, &mut out);
    out
}

/// `|a - b| / max(1, |a|, |b|)` on values given as logs.
pub fn relative_residual(log_a: f64, log_b: f64) -> f64 {
    if log_a == log_b {
        return 0.0;
    }
    let (a, b) = (log_a.exp(), log_b.exp());
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

/// Residual of the substitution identity between BS covers (packings) and
/// Bowen covers (packings) at potential `-lambda phi / log(1/eps)`, exponent 0.
/// Exact when every candidate ball resolves `phi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub lambda: f64,
    pub bs_log: f64,
    pub cover_log: f64,
    pub cover_residual: f64,
    pub packing_bs_log: f64,
    pub packing_log: f64,
    pub packing_residual: f64,
    pub resolved: bool,
}

pub fn substitution_identity(inst: &Instance, lambda: f64) -> Result<IdentityCheck> {
    let l = (1.0 / inst.opts.eps).ln();
    let sub = inst.phi.scale(-lambda / l);
    let other = inst.with_potential(&sub)?;
    let bs = inst.value(Structure::Bs, lambda)?.log_value;
    let cov = other.value(Structure::Cover, 0.0)?.log_value;
    let pbs = inst.value(Structure::PackingBs, lambda)?.log_value;
    let pk = other.value(Structure::Packing, 0.0)?.log_value;
    Ok(IdentityCheck {
        lambda,
        bs_log: bs,
        cover_log: cov,
        cover_residual: relative_residual(bs, cov),
        packing_bs_log: pbs,
        packing_log: pk,
        packing_residual: relative_residual(pbs, pk),
        resolved: inst.resolved() && other.resolved(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalValue {
    pub lambda: f64,
    pub bracket: (f64, f64),
    pub threshold: f64,
    pub evaluations: usize,
    /// Whether the valuations behind the crossing were solved exactly.
    pub exact: bool,
}

const MAX_DOUBLINGS: usize = 64;

/// Threshold-1 crossing of a nonincreasing valuation given in log space:
/// the bracket grows geometrically from `[-1, 1]` until
/// `value(lo) >= 1 >= value(hi)`, then bisection to width `tol`.
pub fn critical_lambda(log_valuation: &dyn Fn(f64) -> Result<f64>, tol: f64) -> Result<CriticalValue> {
    if !(tol > 0.0) {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }
    let mut evals = 0;
    let mut eval = |l: f64| -> Result<f64> {
        evals += 1;
        log_valuation(l)
    };
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    let mut v_lo = eval(lo)?;
    let mut v_hi = eval(hi)?;
    let mut steps = 0;
    while v_lo < 0.0 || v_hi > 0.0 {
        steps += 1;
        if steps > MAX_DOUBLINGS {
            if v_lo == v_hi {
                return Err(Error::DegenerateValuation(v_lo.exp()));
            }
            return Err(Error::Precondition(format!(
                "no threshold crossing in [{lo}, {hi}] (log values {v_lo}, {v_hi})"
            )));
        }
        if v_lo < 0.0 {
            lo *= 2.0;
            v_lo = eval(lo)?;
        }
        if v_hi > 0.0 {
            hi *= 2.0;
            v_hi = eval(hi)?;
        }
        if v_lo == v_hi && v_lo != 0.0 && steps > 8 {
            return Err(Error::DegenerateValuation(v_lo.exp()));
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if eval(mid)? >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CriticalValue {
        lambda: 0.5 * (lo + hi),
        bracket: (lo, hi),
        threshold: 1.0,
        evaluations: evals,
        exact: true,
    })
}

/// Per-scale critical exponents and their regression on `log(1/eps)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetEstimate {
    /// `pressure` holds `lambda*(eps)` and `max_ratio` the largest
    /// `lambda*/log(1/eps)`.
    pub estimate: DimensionEstimate,
    pub critical: Vec<CriticalValue>,
    pub z_sizes: Vec<usize>,
}

#[allow(clippy::too_many_arguments)]
pub fn subset_mdim(
    family: &SystemFamily,
    z_at: &(dyn Fn(&SystemModel, f64) -> Result<Vec<PointWindow>> + Sync),
    phi: &PotentialSpec,
    structure: Structure,
    eps_schedule: &[f64],
    n_min: usize,
    n_max: usize,
    tol: f64,
) -> Result<SubsetEstimate> {
    if eps_schedule.len() < 3 {
        return Err(Error::Config("eps schedule needs at least 3 values".into()));
    }
    let per = eps_schedule
        .par_iter()
        .map(|&eps| {
            let sys = family.at_scale(eps)?;
            let p = phi.at(&sys)?;
            let z = z_at(&sys, eps)?;
            let inst = Instance::new(&sys, &z, &p, InstanceOptions::new(n_min, n_max, eps))?;
            let c = inst.critical(structure, tol)?;
            let l = (1.0 / eps).ln();
            let s = ScaleEstimate {
                eps,
                pressure: c.lambda,
                intercept: 0.0,
                residual: c.bracket.1 - c.bracket.0,
                max_ratio: c.lambda / l,
                records: Vec::new(),
                oracle: None,
            };
            Ok((s, c, z.len()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut scales = Vec::new();
    let mut critical = Vec::new();
    let mut z_sizes = Vec::new();
    for (s, c, m) in per {
        scales.push(s);
        critical.push(c);
        z_sizes.push(m);
    }
    Ok(SubsetEstimate {
        estimate: DimensionEstimate::from_scales(scales, eps_schedule.to_vec(), (n_min..=n_max).map(|n| n as f64).collect())?,
        critical,
        z_sizes,
    })
}

/// The finite-scale chain comparison: covers by open balls of radius
/// `3 eps` cost at most the best disjoint closed `eps`-packing, at potential 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainCheck {
    pub cover_3eps_log: f64,
    pub packing_eps_log: f64,
    pub holds: bool,
    pub exact: bool,
}

pub fn chain_comparison(sys: &SystemModel, z: &[PointWindow], lambda: f64, n_min: usize, n_max: usize, eps: f64) -> Result<ChainCheck> {
    let zero = Potential::constant(0.0);
    let pack = Instance::new(sys, z, &zero, InstanceOptions::new(n_min, n_max, eps))?.value(Structure::Packing, lambda)?;
    let cov = Instance::new(sys, z, &zero, InstanceOptions::new(n_min, n_max, 3.0 * eps))?.value(Structure::Cover, lambda)?;
    Ok(ChainCheck {
        cover_3eps_log: cov.log_value,
        packing_eps_log: pack.log_value,
        holds: cov.log_value <= pack.log_value + 1e-12,
        exact: cov.exact && pack.exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bin() -> SystemModel {
        SystemModel::full_shift(2).build().unwrap()
    }

    fn inst(z: &[PointWindow], phi: &Potential, n0: usize, n1: usize, eps: f64) -> Instance {
        Instance::new(&bin(), z, phi, InstanceOptions::new(n0, n1, eps)).unwrap()
    }

    #[test]
    fn single_point_cover() {
        let s = bin();
        let z = vec![s.point_from_word(&[1, 0]).unwrap()];
        let i = inst(&z, &Potential::constant(0.0), 1, 3, 0.4);
        assert!(i.value(Structure::Cover, 0.0).unwrap().log_value.abs() < 1e-12);
        let v = i.value(Structure::Cover, 0.7).unwrap().log_value;
        assert!((v + 3.0 * 0.7).abs() < 1e-12);
        let c = i.critical(Structure::Cover, 1e-6).unwrap();
        assert!(c.lambda.abs() < 1e-5);
    }

    #[test]
    fn four_words_cover_and_packing() {
        let s = bin();
        let z = s.enumerate_points(2).unwrap();
        let i = inst(&z, &Potential::constant(0.0), 1, 1, 0.6);
        assert!((i.value(Structure::Cover, 0.0).unwrap().value() - 2.0).abs() < 1e-12);
        assert!((i.value(Structure::FixedLength, 0.0).unwrap().value() - 2.0).abs() < 1e-12);
        let p = inst(&z, &Potential::constant(0.0), 2, 2, 0.6);
        assert!((p.value(Structure::Packing, 0.0).unwrap().value() - 4.0).abs() < 1e-12);
        let single = inst(&z[..1], &Potential::constant(0.0), 2, 2, 0.6);
        assert!((single.value(Structure::Packing, 0.0).unwrap().value() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn refined_packing_equals_packing_at_finite_order() {
        let s = bin();
        let z = s.enumerate_points(2).unwrap();
        let i = inst(&z, &Potential::constant(0.0), 1, 2, 0.6);
        for lam in [-0.5, 0.0, 0.4, 1.3] {
            let p = i.value(Structure::Packing, lam).unwrap().log_value;
            let r = i.value(Structure::RefinedPacking, lam).unwrap().log_value;
            assert!(r <= p + 1e-12);
            assert!((r - p).abs() < 1e-12);
        }
    }

    #[test]
    fn bs_with_unit_potential_is_cover() {
        let s = bin();
        let z = s.enumerate_points(3).unwrap();
        let one = inst(&z, &Potential::constant(1.0), 1, 3, 0.6);
        let zero = inst(&z, &Potential::constant(0.0), 1, 3, 0.6);
        for lam in [0.1, 0.5, 1.0] {
            let a = one.value(Structure::Bs, lam).unwrap().log_value;
            let b = zero.value(Structure::Cover, lam).unwrap().log_value;
            assert!((a - b).abs() < 1e-12);
        }
        let c1 = one.critical(Structure::Bs, 1e-8).unwrap();
        let c0 = zero.critical(Structure::Cover, 1e-8).unwrap();
        assert_eq!(c1.lambda, c0.lambda);
        assert!(zero.value(Structure::Bs, 1.0).is_err());
    }

    #[test]
    fn weighted_below_bs() {
        let s = bin();
        let z = s.enumerate_points(3).unwrap();
        let phi = Potential::coordinate(vec![0.5, 1.5]);
        let i = inst(&z, &phi, 1, 2, 0.6);
        for lam in [0.0, 0.3, 1.0] {
            let w = i.value(Structure::Weighted, lam).unwrap().log_value;
            let r = i.value(Structure::Bs, lam).unwrap().log_value;
            assert!(w <= r + 1e-9);
        }
    }

    #[test]
    fn identity_on_resolving_instance() {
        let s = bin();
        let z = s.enumerate_points(3).unwrap();
        let phi = Potential::coordinate(vec![0.3, 1.1]);
        let i = inst(&z, &phi, 1, 3, 0.6);
        assert!(i.resolved());
        for lam in [0.2, 0.9, 2.5] {
            let c = substitution_identity(&i, lam).unwrap();
            assert!(c.cover_residual < 1e-10 && c.packing_residual < 1e-10, "{c:?}");
        }
    }

    #[test]
    fn partitions_count() {
        // Bell numbers.
        assert_eq!(set_partitions(4, 4).len(), 15);
        assert_eq!(set_partitions(5, 5).len(), 52);
        assert_eq!(set_partitions(4, 1).len(), 1);
        assert_eq!(set_partitions(4, 2).len(), 8);
    }

    #[test]
    fn chain_holds_on_small_instance() {
        let s = bin();
        let z = s.enumerate_points(3).unwrap();
        for lam in [0.0, 0.5] {
            let c = chain_comparison(&s, &z, lam, 1, 2, 0.3).unwrap();
            assert!(c.holds, "{c:?}");
        }
    }

    #[test]
    fn degenerate_valuation_reported() {
        let r = critical_lambda(&|_l| Ok(2.0), 1e-3);
        assert!(r.is_err());
    }
}
