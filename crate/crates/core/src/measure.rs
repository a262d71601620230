//! Probability measures on shift windows: product measures and weighted
//! samples, Bowen-ball masses, and Birkhoff-average tests against a finite
//! dictionary of functions.

use crate::bowen;
use crate::error::{Error, Result};
use crate::systems::{PointWindow, SymbolMetric, SystemModel};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.575_829_303_548_901;

/// Smallest sample count accepted for a Monte-Carlo ball mass.
pub const MIN_MASS_SAMPLES: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureKind {
    /// Every coordinate uniform on the alphabet.
    ProductUniform,
    /// Every coordinate independent with the given symbol law.
    Bernoulli(Vec<f64>),
    /// A finite weighted sample; weights are normalized on construction.
    Empirical {
        points: Vec<PointWindow>,
        weights: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureModel {
    pub kind: MeasureKind,
    pub system: SystemModel,
    pub seed: u64,
}

/// Derive an independent stream id from a tag and an index.
pub fn stream_id(tag: u16, index: u64) -> u64 {
    ((tag as u64) << 48) ^ index
}

impl MeasureModel {
    pub fn product_uniform(system: &SystemModel, seed: u64) -> Self {
        MeasureModel {
            kind: MeasureKind::ProductUniform,
            system: system.clone(),
            seed,
        }
    }

    pub fn bernoulli(system: &SystemModel, p: Vec<f64>, seed: u64) -> Result<Self> {
        if p.len() != system.k() {
            return Err(Error::Config(format!(
                "symbol law has {} entries for alphabet {}",
                p.len(),
                system.k()
            )));
        }
        if p.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::Config("symbol probabilities must be nonnegative".into()));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("symbol probabilities sum to {s}, not 1")));
        }
        Ok(MeasureModel {
            kind: MeasureKind::Bernoulli(p),
            system: system.clone(),
            seed,
        })
    }

    pub fn empirical(system: &SystemModel, points: Vec<PointWindow>, weights: Vec<f64>, seed: u64) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::Config(format!(
                "empirical measure needs matching nonempty points and weights ({} vs {})",
                points.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::Config("empirical weights must be positive".into()));
        }
        for x in &points {
            system.check_point(x)?;
        }
        let s: f64 = weights.iter().sum();
        Ok(MeasureModel {
            kind: MeasureKind::Empirical {
                points,
                weights: weights.iter().map(|w| w / s).collect(),
            },
            system: system.clone(),
            seed,
        })
    }

    pub fn point_mass(system: &SystemModel, x: PointWindow, seed: u64) -> Result<Self> {
        Self::empirical(system, vec![x], vec![1.0], seed)
    }

    /// Per-symbol law for product measures.
    pub fn symbol_law(&self) -> Option<Vec<f64>> {
        match &self.kind {
            MeasureKind::ProductUniform => Some(vec![1.0 / self.system.k() as f64; self.system.k()]),
            MeasureKind::Bernoulli(p) => Some(p.clone()),
            MeasureKind::Empirical { .. } => None,
        }
    }

    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stream);
        r
    }

    fn draw(&self, rng: &mut ChaCha8Rng, sampler: &Option<Vec<WeightedIndex<f64>>>, empirical: &Option<WeightedIndex<f64>>) -> PointWindow {
        match &self.kind {
            MeasureKind::Empirical { points, .. } => points[empirical.as_ref().expect("built").sample(rng)].clone(),
            _ => {
                let d = &sampler.as_ref().expect("built")[0];
                let symbols = (0..self.system.window_len()).map(|_| d.sample(rng) as u16).collect();
                PointWindow {
                    symbols,
                    origin: self.system.origin(),
                    genuine: self.system.window,
                    right_exact: false,
                    left_exact: false,
                }
            }
        }
    }

    /// `count` independent points from stream `stream`.
    pub fn sample(&self, count: usize, stream: u64) -> Result<Vec<PointWindow>> {
        let mut rng = self.rng(stream);
        let (sampler, empirical) = match &self.kind {
            MeasureKind::Empirical { weights, .. } => (None, Some(weighted(weights)?)),
            _ => (Some(vec![weighted(&self.symbol_law().expect("product"))?]), None),
        };
        Ok((0..count).map(|_| self.draw(&mut rng, &sampler, &empirical)).collect())
    }

    /// Integral of a dictionary function.
    pub fn integral(&self, g: &DictFn) -> f64 {
        match (&self.kind, g) {
            (_, DictFn::Constant(c)) => *c,
            (MeasureKind::Empirical { points, weights }, _) => points
                .iter()
                .zip(weights)
                .map(|(x, w)| w * g.eval(&self.system, x, 0))
                .sum(),
            (_, DictFn::Cylinder(word)) => {
                let p = self.symbol_law().expect("product");
                word.iter().map(|&a| p[a as usize]).product()
            }
            (_, DictFn::Interval { lo, hi }) => {
                let p = self.symbol_law().expect("product");
                let k = self.system.k() as f64;
                (0..self.system.k())
                    .filter(|&a| {
                        let v = a as f64 / k;
                        v >= *lo && v < *hi
                    })
                    .map(|a| p[a])
                    .sum()
            }
        }
    }
}

fn weighted(w: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(w.iter().copied()).map_err(|e| Error::Config(format!("bad weights: {e}")))
}

/// Wilson score interval for `hits` successes in `n` trials.
pub fn wilson_interval(hits: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MassSampler {
    /// Draw from the measure and count hits.
    Plain,
    /// Draw from the measure conditioned on the coordinate box containing
    /// the ball and rescale by the box mass. Product measures only.
    Conditioned,
    /// Draw coordinates one at a time from the symbols that keep every shift
    /// of the ball constraint satisfiable, weighting by the mass of those
    /// symbols. Every draw lands in the ball; the mean weight is unbiased.
    Sequential,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassEstimate {
    pub value: f64,
    /// 99% interval.
    pub ci: (f64, f64),
    pub hits: usize,
    pub samples: usize,
    /// No hits: only `ci.1` is informative.
    pub zero_hits: bool,
    /// Computed by exact summation.
    pub exact: bool,
}

/// Symbols allowed at one coordinate and the law restricted to them.
type SymbolDraw = (Vec<u16>, WeightedIndex<f64>);

/// Estimate of `mu(B_n(x, eps))` for the open Bowen ball.
pub fn estimate_ball_mass(
    measure: &MeasureModel,
    x: &PointWindow,
    n: usize,
    eps: f64,
    samples: usize,
    sampler: MassSampler,
    stream: u64,
) -> Result<MassEstimate> {
    let sys = &measure.system;
    sys.check_point(x)?;
    if n == 0 || n > sys.window {
        return Err(Error::Precondition(format!("ball order {n} outside 1..={}", sys.window)));
    }
    let exact = |value: f64| MassEstimate {
        value,
        ci: (value, value),
        hits: 0,
        samples: 0,
        zero_hits: value == 0.0,
        exact: true,
    };
    if eps > sys.diameter() {
        return Ok(exact(1.0));
    }
    if let MeasureKind::Empirical { points, weights } = &measure.kind {
        let m: f64 = points
            .iter()
            .zip(weights)
            .filter(|(y, _)| bowen::within(sys, x, y, n, eps, false))
            .map(|(_, w)| w)
            .sum();
        return Ok(exact(m.min(1.0)));
    }
    if samples < MIN_MASS_SAMPLES {
        return Err(Error::Precondition(format!(
            "need at least {MIN_MASS_SAMPLES} samples, got {samples}"
        )));
    }
    let law = measure.symbol_law().expect("product");
    let mut rng = measure.rng(stream);
    if sampler == MassSampler::Sequential {
        return sequential_mass(sys, &law, x, n, eps, samples, &mut rng);
    }
    let (scale, dists): (f64, Vec<SymbolDraw>) = match sampler {
        MassSampler::Plain => {
            let all: Vec<u16> = (0..sys.k() as u16).collect();
            let d = weighted(&law)?;
            (1.0, (0..sys.window_len()).map(|_| (all.clone(), d.clone())).collect())
        }
        MassSampler::Conditioned | MassSampler::Sequential => {
            let mut scale = 1.0;
            let mut dists = Vec::with_capacity(sys.window_len());
            for t in sys.left_index()..=sys.right_index() {
                let allowed = bowen::box_symbols(sys, x, t, n, eps, false);
                let w: Vec<f64> = allowed.iter().map(|&b| law[b as usize]).collect();
                let m: f64 = w.iter().sum();
                if m <= 0.0 {
                    return Ok(exact(0.0));
                }
                scale *= m;
                dists.push((allowed, weighted(&w)?));
            }
            (scale, dists)
        }
    };
    let mut hits = 0usize;
    let mut y = sample_template(sys);
    for _ in 0..samples {
        for (slot, (allowed, d)) in y.symbols.iter_mut().zip(&dists) {
            *slot = allowed[d.sample(&mut rng)];
        }
        if bowen::within(sys, x, &y, n, eps, false) {
            hits += 1;
        }
    }
    let (lo, hi) = wilson_interval(hits, samples, Z99);
    Ok(MassEstimate {
        value: scale * hits as f64 / samples as f64,
        ci: (scale * lo, scale * hi),
        hits,
        samples,
        zero_hits: hits == 0,
        exact: false,
    })
}

fn sample_template(sys: &SystemModel) -> PointWindow {
    PointWindow {
        symbols: vec![0; sys.window_len()],
        origin: sys.origin(),
        genuine: sys.window,
        right_exact: false,
        left_exact: false,
    }
}

/// Largest `m` with `rho(a, a +- m) < radius`, capped at the alphabet.
fn reach(sys: &SystemModel, radius: f64) -> usize {
    let k = sys.k();
    if radius <= 0.0 {
        return 0;
    }
    match sys.symbol_metric {
        SymbolMetric::Discrete => {
            if radius > 1.0 {
                k
            } else {
                0
            }
        }
        SymbolMetric::AbsDiff => {
            let mut m = ((radius * k as f64).ceil() as usize).min(k);
            while m > 0 && sys.rho(0, m as u16) >= radius {
                m -= 1;
            }
            m
        }
    }
}

/// `P(S <= s)` for `S ~ Beta(1, m + 1)`.
fn beta_cdf(s: f64, m: usize) -> f64 {
    -((m + 1) as f64 * (-s.min(1.0)).ln_1p()).exp_m1()
}

/// Sequential importance sampler. On grid alphabets the distance to the
/// centre at each coordinate is proposed from the budget share a uniform
/// coordinate takes when `m` further coordinates compete for the rest,
/// `Beta(1, m + 1)`, discretized to the grid; weights carry the exact ratio
/// of the measure to that proposal.
fn sequential_mass(
    sys: &SystemModel,
    law: &[f64],
    x: &PointWindow,
    n: usize,
    eps: f64,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<MassEstimate> {
    let mut y = sample_template(sys);
    let budget: Vec<f64> = (0..n).map(|j| eps - sys.step_gap(x, &y, j).slack).collect();
    if budget.iter().any(|&b| b <= 0.0) {
        return Ok(MassEstimate {
            value: 0.0,
            ci: (0.0, 0.0),
            hits: 0,
            samples,
            zero_hits: true,
            exact: true,
        });
    }
    let mut cdf = vec![0.0; law.len() + 1];
    for (i, p) in law.iter().enumerate() {
        cdf[i + 1] = cdf[i] + p;
    }
    let o = sys.origin() as i64;
    let k = sys.k();
    let two = sys.is_two_sided();
    let shifts = |t: i64| (0..n as i64).filter(move |&j| two || t >= j);
    // Heaviest coordinates first: distance to the orbit segment [0, n-1].
    let mut order: Vec<i64> = (sys.left_index()..=sys.right_index()).collect();
    order.sort_by_key(|&t| if t < 0 { -t } else { (t - n as i64 + 1).max(0) });
    let reach_weight: Vec<f64> = order
        .iter()
        .map(|&t| shifts(t).map(|j| sys.weight(t - j)).fold(0.0, f64::max) * sys.symbol_diameter())
        .collect();
    let constrained = |from: usize, rem_min: f64| reach_weight[from..].iter().take_while(|&&w| w >= rem_min).count();
    // Product box inside the ball: each coordinate takes an equal share of
    // what every shift has left. Its exact mass is a certified lower bound.
    let box_mass = {
        let mut used = vec![0.0; n];
        let mut corner = y.clone();
        let mut mass = 1.0;
        for (idx, &t) in order.iter().enumerate() {
            let c = x.symbols[(t + o) as usize];
            let rem_min = shifts(t).map(|j| budget[j as usize] - used[j as usize]).fold(f64::INFINITY, f64::min);
            let share = (constrained(idx + 1, rem_min) + 2) as f64;
            let radius = shifts(t)
                .map(|j| (budget[j as usize] - used[j as usize]) / (share * sys.weight(t - j)))
                .fold(f64::INFINITY, f64::min);
            let mut far = c;
            let mut m = 0.0;
            for a in 0..k as u16 {
                let r = sys.rho(c, a);
                if r <= radius {
                    m += law[a as usize];
                    if r > sys.rho(c, far) {
                        far = a;
                    }
                }
            }
            mass *= m;
            corner.symbols[(t + o) as usize] = far;
            for j in shifts(t) {
                used[j as usize] += sys.weight(t - j) * sys.rho(c, far);
            }
        }
        if bowen::within(sys, x, &corner, n, eps, false) { mass } else { 0.0 }
    };
    let mut used = vec![0.0; n];
    let (mut sum, mut sum_sq, mut hits) = (0.0, 0.0, 0usize);
    for _ in 0..samples {
        used.iter_mut().for_each(|u| *u = 0.0);
        let mut weight = 1.0;
        for (idx, &t) in order.iter().enumerate() {
            let c = x.symbols[(t + o) as usize];
            let a = match sys.symbol_metric {
                SymbolMetric::AbsDiff => {
                    let mut unit = 0.0f64;
                    let mut rem_min = f64::INFINITY;
                    for j in shifts(t) {
                        let rem = budget[j as usize] - used[j as usize];
                        rem_min = rem_min.min(rem);
                        unit = unit.max(sys.weight(t - j) / (k as f64 * rem));
                    }
                    let cu = c as usize;
                    let span = cu.max(k - 1 - cu);
                    let mut reach = ((1.0 / unit).ceil() as usize).saturating_sub(1).min(span);
                    while reach > 0 && reach as f64 * unit >= 1.0 {
                        reach -= 1;
                    }
                    let m = constrained(idx + 1, rem_min);
                    let s_max = ((reach + 1) as f64 * unit).min(1.0);
                    let total = beta_cdf(s_max, m);
                    let u = rng.random::<f64>() * total;
                    let s = 1.0 - (1.0 - u).powf(1.0 / (m + 1) as f64);
                    let v = ((s / unit).floor() as usize).min(reach);
                    let q = (beta_cdf(((v + 1) as f64 * unit).min(s_max), m) - beta_cdf(v as f64 * unit, m)) / total;
                    let down = v > 0 && cu >= v;
                    let up = cu + v < k;
                    let sides = if v == 0 { 1 } else { down as usize + up as usize };
                    let a = if v == 0 {
                        cu
                    } else if down && (!up || rng.random::<bool>()) {
                        cu - v
                    } else {
                        cu + v
                    };
                    weight *= law[a] * sides as f64 / q;
                    a as u16
                }
                SymbolMetric::Discrete => {
                    let mut radius = f64::INFINITY;
                    for j in shifts(t) {
                        radius = radius.min((budget[j as usize] - used[j as usize]) / sys.weight(t - j));
                    }
                    let (lo, hi) = if reach(sys, radius) >= k { (0, k - 1) } else { (c as usize, c as usize) };
                    let mass = cdf[hi + 1] - cdf[lo];
                    weight *= mass;
                    let u = cdf[lo] + rng.random::<f64>() * mass;
                    (cdf[lo + 1..=hi + 1].partition_point(|&v| v <= u) + lo).min(hi) as u16
                }
            };
            y.symbols[(t + o) as usize] = a;
            if a != c {
                for j in shifts(t) {
                    used[j as usize] += sys.weight(t - j) * sys.rho(c, a);
                }
            }
        }
        // Rounding can put a boundary draw outside; such draws count as misses.
        if weight > 0.0 && bowen::within(sys, x, &y, n, eps, false) {
            hits += 1;
            sum += weight;
            sum_sq += weight * weight;
        }
    }
    let nf = samples as f64;
    let mean = sum / nf;
    let sd = ((sum_sq / nf - mean * mean).max(0.0) * nf / (nf - 1.0)).sqrt();
    let half = Z99 * sd / nf.sqrt();
    Ok(MassEstimate {
        value: mean.max(box_mass),
        ci: ((mean - half).max(box_mass), (mean + half).max(box_mass)),
        hits,
        samples,
        zero_hits: hits == 0,
        exact: false,
    })
}

/// `r = ceil(log2(4/eps)) + 1`.
pub fn bracket_margin(eps: f64) -> usize {
    ((4.0 / eps).log2() - 1e-12).ceil() as usize + 1
}

/// Analytic bounds `((eps/6)^(n+2r), (4 eps)^n)` for Bowen-ball masses of the
/// uniform product measure on the grid shift, with per-coordinate factors
/// widened where the grid resolution is coarser than the interval widths.
pub fn ball_mass_bracket(measure: &MeasureModel, n: usize, eps: f64) -> Result<(f64, f64)> {
    let sys = &measure.system;
    let uniform = match &measure.kind {
        MeasureKind::ProductUniform => true,
        MeasureKind::Bernoulli(p) => p.iter().all(|&v| (v - p[0]).abs() < 1e-15),
        MeasureKind::Empirical { .. } => false,
    };
    if !uniform || sys.symbol_metric != SymbolMetric::AbsDiff {
        return Err(Error::Precondition(
            "mass bracket needs the uniform product measure on a grid alphabet".into(),
        ));
    }
    if !(eps > 0.0 && eps < 0.25) {
        return Err(Error::Precondition(format!("mass bracket needs 0 < eps < 1/4, got {eps}")));
    }
    let k = sys.k() as f64;
    let r = bracket_margin(eps);
    let lower_factor = (eps / 6.0).min(1.0 / k);
    let reach = (eps * k - 1e-12).ceil();
    let grid_upper = ((2.0 * reach - 1.0) / k).min(1.0);
    let upper_factor = (4.0 * eps).max(grid_upper).min(1.0);
    Ok((lower_factor.powi((n + 2 * r) as i32), upper_factor.powi(n as i32)))
}

/// Bounded test functions for weak* neighborhoods, read at coordinate 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DictFn {
    Constant(f64),
    /// Indicator of the cylinder `[word]` starting at coordinate 0.
    Cylinder(Vec<u16>),
    /// Indicator of `x_0 / k` in `[lo, hi)`.
    Interval { lo: f64, hi: f64 },
}

impl DictFn {
    pub fn len(&self) -> usize {
        match self {
            DictFn::Cylinder(w) => w.len(),
            _ => 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Value at `sigma^j x`.
    pub fn eval(&self, sys: &SystemModel, x: &PointWindow, j: usize) -> f64 {
        let o = x.origin + j;
        match self {
            DictFn::Constant(c) => *c,
            DictFn::Cylinder(w) => {
                if x.symbols[o..o + w.len()] == w[..] {
                    1.0
                } else {
                    0.0
                }
            }
            DictFn::Interval { lo, hi } => {
                let v = x.symbols[o] as f64 / sys.k() as f64;
                if v >= *lo && v < *hi {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `(1/n) sum_{j<n} g(sigma^j x)`.
    pub fn birkhoff_average(&self, sys: &SystemModel, x: &PointWindow, n: usize) -> Result<f64> {
        let needed = n + self.len() - 1;
        if needed > x.genuine {
            return Err(Error::WindowExhausted {
                needed,
                available: x.genuine,
            });
        }
        Ok((0..n).map(|j| self.eval(sys, x, j)).sum::<f64>() / n as f64)
    }
}

/// Default dictionary: cylinder indicators of increasing length when the
/// alphabet is small, equal subintervals of `[0, 1)` otherwise.
pub fn default_dictionary(sys: &SystemModel, size: usize) -> Vec<DictFn> {
    let k = sys.k();
    if k > size {
        return (0..size)
            .map(|i| DictFn::Interval {
                lo: i as f64 / size as f64,
                hi: (i + 1) as f64 / size as f64,
            })
            .collect();
    }
    let mut out = Vec::with_capacity(size);
    let mut len = 1;
    while out.len() < size {
        for w in crate::systems::all_words(k, len) {
            if out.len() == size {
                break;
            }
            out.push(DictFn::Cylinder(w));
        }
        len += 1;
    }
    out
}

/// Largest gap between a Birkhoff average and the integral over the dictionary.
pub fn generic_deviation(measure: &MeasureModel, x: &PointWindow, n: usize, dictionary: &[DictFn]) -> Result<f64> {
    let mut worst = 0.0f64;
    for g in dictionary {
        let avg = g.birkhoff_average(&measure.system, x, n)?;
        worst = worst.max((avg - measure.integral(g)).abs());
    }
    Ok(worst)
}

/// Whether every dictionary average at depth `n` is within `tol` of its integral.
pub fn generic_point_test(measure: &MeasureModel, x: &PointWindow, n: usize, tol: f64, dictionary: &[DictFn]) -> Result<bool> {
    Ok(generic_deviation(measure, x, n, dictionary)? <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(k: usize) -> SystemModel {
        SystemModel::grid_shift(k).build().unwrap()
    }

    #[test]
    fn bracket_example() {
        let m = MeasureModel::product_uniform(&grid(8), 1);
        let (lo, hi) = ball_mass_bracket(&m, 2, 0.125).unwrap();
        assert_eq!(bracket_margin(0.125), 6);
        assert!((lo / (1.0f64 / 48.0).powi(14) - 1.0).abs() < 1e-12);
        assert!((hi - 0.25).abs() < 1e-15);
        let (lo0, hi0) = ball_mass_bracket(&m, 0, 0.125).unwrap();
        assert!(lo0 <= 1.0 && hi0 == 1.0);
        assert!(ball_mass_bracket(&m, 2, 0.25).is_err());
    }

    #[test]
    fn bernoulli_validation() {
        let s = SystemModel::full_shift(2).build().unwrap();
        assert!(MeasureModel::bernoulli(&s, vec![0.5, 0.5 + 1e-9], 0).is_err());
        assert!(MeasureModel::bernoulli(&s, vec![0.25, 0.75], 0).is_ok());
        assert!(MeasureModel::empirical(&s, vec![s.point_from_word(&[1]).unwrap()], vec![0.0], 0).is_err());
    }

    #[test]
    fn mass_of_large_ball_is_one() {
        let s = grid(4);
        let m = MeasureModel::product_uniform(&s, 3);
        let x = m.sample(1, 0).unwrap().remove(0);
        let e = estimate_ball_mass(&m, &x, 2, s.diameter() + 0.1, 1000, MassSampler::Plain, 1).unwrap();
        assert_eq!(e.value, 1.0);
    }

    #[test]
    fn tiny_ball_has_no_hits() {
        let s = SystemModel::grid_shift(64).build().unwrap();
        let m = MeasureModel::product_uniform(&s, 3);
        let x = m.sample(1, 0).unwrap().remove(0);
        let e = estimate_ball_mass(&m, &x, 4, 1e-3, 2000, MassSampler::Plain, 1).unwrap();
        assert!(e.zero_hits && e.ci.0 == 0.0 && e.ci.1 > 0.0);
    }

    #[test]
    fn conditioned_matches_plain() {
        let s = grid(4);
        let m = MeasureModel::product_uniform(&s, 5);
        let x = m.sample(1, 0).unwrap().remove(0);
        let a = estimate_ball_mass(&m, &x, 1, 0.3, 200_000, MassSampler::Plain, 1).unwrap();
        let b = estimate_ball_mass(&m, &x, 1, 0.3, 20_000, MassSampler::Conditioned, 2).unwrap();
        assert!(a.ci.0 <= b.ci.1 && b.ci.0 <= a.ci.1, "{a:?} {b:?}");
    }

    #[test]
    fn cylinder_masses_on_full_shift() {
        // Discrete metric, eps = 1/2: up to a null set the ball of order n is
        // the cylinder of length n + 1.
        let s = SystemModel::full_shift(2).build().unwrap();
        let m = MeasureModel::product_uniform(&s, 9);
        let x = m.sample(1, 0).unwrap().remove(0);
        for n in 1..4 {
            let e = estimate_ball_mass(&m, &x, n, 0.5, 1000, MassSampler::Conditioned, 1).unwrap();
            // Conservative membership can reject points whose unknown tail
            // might push them to the boundary.
            let m = 0.5f64.powi(n as i32 + 1);
            assert!(e.value <= m && e.value > 0.99 * m, "{e:?}");
        }
    }

    #[test]
    fn generic_points() {
        let s = SystemModel::full_shift(2).window(40).build().unwrap();
        let m = MeasureModel::product_uniform(&s, 0);
        let zero = s.point_from_word(&[]).unwrap();
        let ind1 = vec![DictFn::Cylinder(vec![1])];
        assert!(!generic_point_test(&m, &zero, 20, 0.1, &ind1).unwrap());
        assert!(generic_point_test(&m, &zero, 20, 0.1, &[DictFn::Constant(2.0)]).unwrap());
        // de Bruijn word of order 3, repeated.
        let db: Vec<u16> = [0, 0, 0, 1, 0, 1, 1, 1].iter().cycle().take(34).cloned().collect();
        let x = s.point_from_word(&db).unwrap();
        let dict = default_dictionary(&s, 6);
        assert!(generic_point_test(&m, &x, 32, 0.1, &dict).unwrap());
    }

    #[test]
    fn dictionary_shapes() {
        let s = SystemModel::full_shift(2).build().unwrap();
        let d = default_dictionary(&s, 16);
        assert_eq!(d.len(), 16);
        assert_eq!(d[0], DictFn::Cylinder(vec![0]));
        assert_eq!(d[2], DictFn::Cylinder(vec![0, 0]));
        let g = grid(32);
        assert!(matches!(default_dictionary(&g, 16)[0], DictFn::Interval { .. }));
        let m = MeasureModel::product_uniform(&g, 0);
        let total: f64 = default_dictionary(&g, 16).iter().map(|f| m.integral(f)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sequential_agrees_with_plain() {
        let cases = [
            (SystemModel::grid_shift(8).build().unwrap(), 1, 0.3),
            (SystemModel::full_shift(3).two_sided().build().unwrap(), 2, 0.3),
            (SystemModel::grid_shift(6).two_sided().build().unwrap(), 1, 0.5),
        ];
        for (s, n, eps) in cases {
            let m = MeasureModel::product_uniform(&s, 11);
            let x = m.sample(1, 4).unwrap().remove(0);
            let plain = estimate_ball_mass(&m, &x, n, eps, 200_000, MassSampler::Plain, 2).unwrap();
            let seq = estimate_ball_mass(&m, &x, n, eps, 50_000, MassSampler::Sequential, 3).unwrap();
            assert!(plain.hits > 100, "{plain:?}");
            assert!(seq.ci.0 <= plain.ci.1 && plain.ci.0 <= seq.ci.1, "{plain:?} vs {seq:?}");
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(12))]
        #[test]
        fn sequential_interval_is_positive(seed in 0u64..1000, n in 1usize..4, j in 2i32..4) {
            let eps = 2f64.powi(-j);
            let s = SystemModel::grid_shift(8 << j).two_sided().eps_min(eps).build().unwrap();
            let m = MeasureModel::product_uniform(&s, seed);
            let x = m.sample(1, 0).unwrap().remove(0);
            let e = estimate_ball_mass(&m, &x, n, eps, 2_000, MassSampler::Sequential, 1).unwrap();
            proptest::prop_assert!(0.0 < e.ci.0 && e.ci.0 <= e.value && e.value <= e.ci.1);
            proptest::prop_assert!(e.ci.1 <= (4.0 * eps).powi(n as i32));
        }
    }
}
