//! Finite-resolution shift systems, their metrics and potentials.
//!
//! A point is stored as a window of symbols around coordinate 0. Coordinates
//! outside the window are either known to be the pad symbol 0 (points built
//! from finite words) or unknown (sampled points). Metric evaluations carry a
//! `slack` equal to the largest possible contribution of unknown coordinates,
//! so callers can make conservative ball-membership decisions.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const DEFAULT_ENUMERATION_CAP: usize = 2_000_000;
pub const DEFAULT_EPS_MIN: f64 = 1.0 / 256.0;
/// Smallest window chosen automatically, so short orbit segments always fit.
pub const MIN_AUTO_WINDOW: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftKind {
    FullShift,
    GridShift,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sidedness {
    OneSided,
    TwoSided,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymbolMetric {
    /// 0 on equal symbols, 1 otherwise.
    Discrete,
    /// |a - b| / k for symbols read as points of {0, 1/k, ..., (k-1)/k}.
    AbsDiff,
}

/// A shift on k symbols with metric `d(x,y) = sum_i w^|i| rho(x_i, y_i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemModel {
    pub kind: ShiftKind,
    pub alphabet_size: usize,
    pub sidedness: Sidedness,
    pub window: usize,
    pub symbol_metric: SymbolMetric,
    pub weight_base: f64,
    pub eps_min: f64,
    pub enumeration_cap: usize,
}

#[derive(Clone, Debug)]
pub struct SystemBuilder {
    kind: ShiftKind,
    k: usize,
    sidedness: Sidedness,
    window: Option<usize>,
    symbol_metric: Option<SymbolMetric>,
    weight_base: f64,
    eps_min: f64,
    enumeration_cap: usize,
}

impl SystemBuilder {
    pub fn sidedness(mut self, s: Sidedness) -> Self {
        self.sidedness = s;
        self
    }
    pub fn two_sided(self) -> Self {
        self.sidedness(Sidedness::TwoSided)
    }
    pub fn window(mut self, w: usize) -> Self {
        self.window = Some(w);
        self
    }
    pub fn symbol_metric(mut self, m: SymbolMetric) -> Self {
        self.symbol_metric = Some(m);
        self
    }
    pub fn weight_base(mut self, w: f64) -> Self {
        self.weight_base = w;
        self
    }
    pub fn eps_min(mut self, e: f64) -> Self {
        self.eps_min = e;
        self
    }
    pub fn enumeration_cap(mut self, cap: usize) -> Self {
        self.enumeration_cap = cap;
        self
    }

    pub fn build(self) -> Result<SystemModel> {
        if self.k == 0 || self.k > u16::MAX as usize {
            return Err(Error::Config(format!("alphabet size {} out of range", self.k)));
        }
        if !(self.weight_base > 0.0 && self.weight_base < 1.0) {
            return Err(Error::Config(format!(
                "weight_base must lie in (0,1), got {}",
                self.weight_base
            )));
        }
        if !(self.eps_min > 0.0) {
            return Err(Error::Config("eps_min must be positive".into()));
        }
        let symbol_metric = self.symbol_metric.unwrap_or(match self.kind {
            ShiftKind::FullShift => SymbolMetric::Discrete,
            ShiftKind::GridShift => SymbolMetric::AbsDiff,
        });
        let mut sys = SystemModel {
            kind: self.kind,
            alphabet_size: self.k,
            sidedness: self.sidedness,
            window: 1,
            symbol_metric,
            weight_base: self.weight_base,
            eps_min: self.eps_min,
            enumeration_cap: self.enumeration_cap,
        };
        match self.window {
            Some(w) => {
                if w == 0 {
                    return Err(Error::Config("window must be positive".into()));
                }
                sys.window = w;
                let tail = sys.truncation_tail();
                if tail >= sys.eps_min / 10.0 {
                    return Err(Error::Config(format!(
                        "window {w} too small: metric tail {tail:.3e} must be below eps_min/10 = {:.3e}",
                        sys.eps_min / 10.0
                    )));
                }
            }
            None => {
                sys.window = MIN_AUTO_WINDOW;
                while sys.truncation_tail() >= sys.eps_min / 10.0 {
                    sys.window += 1;
                }
            }
        }
        Ok(sys)
    }
}

impl SystemModel {
    pub fn full_shift(k: usize) -> SystemBuilder {
        Self::builder(ShiftKind::FullShift, k)
    }

    pub fn grid_shift(k: usize) -> SystemBuilder {
        Self::builder(ShiftKind::GridShift, k)
    }

    pub fn builder(kind: ShiftKind, k: usize) -> SystemBuilder {
        SystemBuilder {
            kind,
            k,
            sidedness: Sidedness::OneSided,
            window: None,
            symbol_metric: None,
            weight_base: 0.5,
            eps_min: DEFAULT_EPS_MIN,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }

    pub fn k(&self) -> usize {
        self.alphabet_size
    }

    pub fn is_two_sided(&self) -> bool {
        self.sidedness == Sidedness::TwoSided
    }

    /// Lowest retained coordinate.
    pub fn left_index(&self) -> i64 {
        if self.is_two_sided() {
            -(self.window as i64)
        } else {
            0
        }
    }

    /// Highest retained coordinate.
    pub fn right_index(&self) -> i64 {
        if self.is_two_sided() {
            self.window as i64
        } else {
            self.window as i64 - 1
        }
    }

    pub fn window_len(&self) -> usize {
        (self.right_index() - self.left_index() + 1) as usize
    }

    pub fn origin(&self) -> usize {
        (-self.left_index()) as usize
    }

    pub fn rho(&self, a: u16, b: u16) -> f64 {
        match self.symbol_metric {
            SymbolMetric::Discrete => {
                if a == b {
                    0.0
                } else {
                    1.0
                }
            }
            SymbolMetric::AbsDiff => (a as f64 - b as f64).abs() / self.alphabet_size as f64,
        }
    }

    /// Largest symbol distance.
    pub fn symbol_diameter(&self) -> f64 {
        if self.alphabet_size <= 1 {
            return 0.0;
        }
        match self.symbol_metric {
            SymbolMetric::Discrete => 1.0,
            SymbolMetric::AbsDiff => (self.alphabet_size - 1) as f64 / self.alphabet_size as f64,
        }
    }

    /// Smallest distance between distinct symbols.
    pub fn symbol_separation(&self) -> f64 {
        match self.symbol_metric {
            SymbolMetric::Discrete => 1.0,
            SymbolMetric::AbsDiff => 1.0 / self.alphabet_size as f64,
        }
    }

    pub fn weight(&self, i: i64) -> f64 {
        self.weight_base.powi(i.unsigned_abs() as i32)
    }

    fn geometric_tail(&self, from: u64) -> f64 {
        let w = self.weight_base;
        w.powi(from as i32) / (1.0 - w)
    }

    /// Largest metric contribution of coordinates outside the window.
    pub fn truncation_tail(&self) -> f64 {
        let d = self.symbol_diameter();
        let right = self.geometric_tail(self.right_index() as u64 + 1);
        if self.is_two_sided() {
            d * (right + self.geometric_tail(self.window as u64 + 1))
        } else {
            d * right
        }
    }

    /// Diameter of the space under `d`.
    pub fn diameter(&self) -> f64 {
        let one_side = 1.0 / (1.0 - self.weight_base);
        let total = if self.is_two_sided() {
            2.0 * one_side - 1.0
        } else {
            one_side
        };
        self.symbol_diameter() * total
    }

    /// Smallest R such that points agreeing on R extra coordinates beyond an
    /// orbit segment (on each side, for two-sided systems) are within `eps`.
    pub fn agreement_margin(&self, eps: f64) -> usize {
        let d = self.symbol_diameter();
        let sides = if self.is_two_sided() { 2.0 } else { 1.0 };
        let mut r = 0u64;
        while sides * d * self.geometric_tail(r + 1) >= eps {
            r += 1;
        }
        r as usize
    }

    pub fn check_point(&self, x: &PointWindow) -> Result<()> {
        if x.symbols.len() != self.window_len() || x.origin != self.origin() {
            return Err(Error::Config(format!(
                "point window of length {} (origin {}) does not match system window {} (origin {})",
                x.symbols.len(),
                x.origin,
                self.window_len(),
                self.origin()
            )));
        }
        if let Some(&s) = x.symbols.iter().find(|&&s| s as usize >= self.alphabet_size) {
            return Err(Error::Config(format!(
                "symbol {s} outside alphabet of size {}",
                self.alphabet_size
            )));
        }
        Ok(())
    }

    /// The point `word` followed (and, two-sided, preceded) by the pad symbol 0.
    pub fn point_from_word(&self, word: &[u16]) -> Result<PointWindow> {
        if word.len() > self.window {
            return Err(Error::Config(format!(
                "word of length {} exceeds window {}",
                word.len(),
                self.window
            )));
        }
        let mut symbols = vec![0u16; self.window_len()];
        let o = self.origin();
        symbols[o..o + word.len()].copy_from_slice(word);
        let x = PointWindow {
            symbols,
            origin: o,
            genuine: self.window,
            right_exact: true,
            left_exact: true,
        };
        self.check_point(&x)?;
        Ok(x)
    }

    /// A window read off an unknown point: coordinates outside are unknown.
    pub fn point_from_window(&self, symbols: Vec<u16>) -> Result<PointWindow> {
        let x = PointWindow {
            symbols,
            origin: self.origin(),
            genuine: self.window,
            right_exact: false,
            left_exact: false,
        };
        self.check_point(&x)?;
        Ok(x)
    }

    /// Truncated metric `sum over retained coordinates of w^|i| rho(x_i, y_i)`.
    pub fn metric(&self, x: &PointWindow, y: &PointWindow) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.step_gap(x, y, 0).value)
    }

    /// `d(sigma^j x, sigma^j y)` computed from the stored windows, with the
    /// largest possible contribution of unknown coordinates as `slack`.
    pub fn step_gap(&self, x: &PointWindow, y: &PointWindow, j: usize) -> Gap {
        let l = self.left_index();
        let r = self.right_index();
        let j = j as i64;
        let o = x.origin as i64;
        // Coordinates i of the shifted points read x_{i+j}; one-sided systems
        // only have i >= 0.
        let t_lo = if self.is_two_sided() { l } else { j.max(l) };
        let mut value = 0.0;
        for t in t_lo..=r {
            let a = x.symbols[(t + o) as usize];
            let b = y.symbols[(t + o) as usize];
            if a != b {
                value += self.weight(t - j) * self.rho(a, b);
            }
        }
        let d = self.symbol_diameter();
        let w = self.weight_base;
        let mut slack = 0.0;
        if !(x.right_exact && y.right_exact) {
            if j <= r {
                slack += d * self.geometric_tail((r + 1 - j) as u64);
            } else {
                let mut s = 1.0 / (1.0 - w);
                for m in 1..(j - r) {
                    s += w.powi(m as i32);
                }
                slack += d * s;
            }
        }
        if self.is_two_sided() && !(x.left_exact && y.left_exact) {
            slack += d * self.geometric_tail((j - l + 1) as u64);
        }
        Gap { value, slack }
    }

    /// The left shift. Pads with 0 on the right; the pad is marked non-genuine.
    pub fn apply_map(&self, x: &PointWindow) -> PointWindow {
        let mut symbols = Vec::with_capacity(x.symbols.len());
        symbols.extend_from_slice(&x.symbols[1..]);
        symbols.push(0);
        let dropped = x.symbols[0];
        PointWindow {
            symbols,
            origin: x.origin,
            genuine: x.genuine.saturating_sub(1),
            right_exact: x.right_exact,
            left_exact: !self.is_two_sided() || (x.left_exact && dropped == 0),
        }
    }

    pub fn iterate_map(&self, x: &PointWindow, n: usize) -> PointWindow {
        let mut y = x.clone();
        for _ in 0..n {
            y = self.apply_map(&y);
        }
        y
    }

    /// `S_n phi(x) = sum_{i<n} phi(sigma^i x)`.
    pub fn birkhoff_sum(&self, phi: &Potential, x: &PointWindow, n: usize) -> Result<f64> {
        match phi {
            Potential::Constant(c) => Ok(*c * n as f64),
            Potential::Table(t) => {
                if t.alphabet != self.alphabet_size {
                    return Err(Error::Config(format!(
                        "potential alphabet {} does not match system alphabet {}",
                        t.alphabet, self.alphabet_size
                    )));
                }
                if n == 0 {
                    return Ok(0.0);
                }
                let needed = n + t.len - 1;
                if needed > x.genuine {
                    return Err(Error::WindowExhausted {
                        needed,
                        available: x.genuine,
                    });
                }
                let o = x.origin;
                let mut s = 0.0;
                for i in 0..n {
                    s += t.value_at(&x.symbols[o + i..o + i + t.len]);
                }
                Ok(s)
            }
        }
    }

    /// Every word of length `depth`, lexicographically, as padded points.
    pub fn enumerate_points(&self, depth: usize) -> Result<Vec<PointWindow>> {
        let count = (self.alphabet_size as u128).checked_pow(depth as u32);
        match count {
            Some(c) if c <= self.enumeration_cap as u128 => {}
            _ => {
                return Err(Error::EnumerationCap {
                    count: count.unwrap_or(u128::MAX),
                    cap: self.enumeration_cap,
                })
            }
        }
        if depth > self.window {
            return Err(Error::Config(format!(
                "depth {depth} exceeds window {}",
                self.window
            )));
        }
        let words = all_words(self.alphabet_size, depth);
        words.iter().map(|w| self.point_from_word(w)).collect()
    }
}

/// All words of a given length over `0..k`, lexicographic.
pub fn all_words(k: usize, len: usize) -> Vec<Vec<u16>> {
    let mut out = vec![Vec::with_capacity(len)];
    for _ in 0..len {
        let mut next = Vec::with_capacity(out.len() * k);
        for w in &out {
            for a in 0..k as u16 {
                let mut v = w.clone();
                v.push(a);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Truncated distance plus the largest possible unseen contribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gap {
    pub value: f64,
    pub slack: f64,
}

impl Gap {
    pub fn upper(&self) -> f64 {
        self.value + self.slack
    }
}

/// A point at finite resolution.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PointWindow {
    pub symbols: Vec<u16>,
    pub origin: usize,
    /// Coordinates `0..genuine` are real data rather than shift padding.
    pub genuine: usize,
    /// Coordinates right of the window are known to be 0.
    pub right_exact: bool,
    /// Coordinates left of the window are known to be 0 (two-sided only).
    pub left_exact: bool,
}

impl PointWindow {
    pub fn coord(&self, i: i64) -> u16 {
        self.symbols[(i + self.origin as i64) as usize]
    }

    /// Coordinates `0..len`.
    pub fn forward(&self, len: usize) -> &[u16] {
        &self.symbols[self.origin..self.origin + len]
    }
}

/// A potential on the shift depending on finitely many forward coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Potential {
    Constant(f64),
    Table(TablePotential),
}

/// `phi(x) = values[index(x_0 .. x_{len-1})]` with the word read in base k,
/// most significant symbol first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TablePotential {
    pub len: usize,
    pub alphabet: usize,
    pub values: Vec<f64>,
}

impl TablePotential {
    pub fn index(&self, word: &[u16]) -> usize {
        word[..self.len]
            .iter()
            .fold(0usize, |acc, &a| acc * self.alphabet + a as usize)
    }

    pub fn value_at(&self, word: &[u16]) -> f64 {
        self.values[self.index(word)]
    }
}

impl Potential {
    pub fn constant(c: f64) -> Self {
        Potential::Constant(c)
    }

    /// Potential reading coordinate 0 only.
    pub fn coordinate(values: Vec<f64>) -> Self {
        let k = values.len();
        Potential::Table(TablePotential {
            len: 1,
            alphabet: k,
            values,
        })
    }

    pub fn finite_range(len: usize, alphabet: usize, values: Vec<f64>) -> Result<Self> {
        let expected = alphabet
            .checked_pow(len as u32)
            .ok_or_else(|| Error::Config("potential table too large".into()))?;
        if len == 0 || values.len() != expected {
            return Err(Error::Config(format!(
                "finite-range potential over {len} coordinates needs {expected} values, got {}",
                values.len()
            )));
        }
        Ok(Potential::Table(TablePotential {
            len,
            alphabet,
            values,
        }))
    }

    /// Number of forward coordinates read (0 for constants).
    pub fn range(&self) -> usize {
        match self {
            Potential::Constant(_) => 0,
            Potential::Table(t) => t.len,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Potential::Constant(_))
    }

    pub fn min(&self) -> f64 {
        match self {
            Potential::Constant(c) => *c,
            Potential::Table(t) => t.values.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }

    pub fn max(&self) -> f64 {
        match self {
            Potential::Constant(c) => *c,
            Potential::Table(t) => t.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.min().abs().max(self.max().abs())
    }

    /// Value on a point whose forward coordinates start with `word`.
    pub fn value_on_word(&self, word: &[u16]) -> f64 {
        match self {
            Potential::Constant(c) => *c,
            Potential::Table(t) => t.value_at(word),
        }
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &Potential, b: f64) -> Result<Potential> {
        match (self, other) {
            (Potential::Constant(x), Potential::Constant(y)) => Ok(Potential::Constant(a * x + b * y)),
            _ => {
                let k = match (self, other) {
                    (Potential::Table(t), Potential::Table(u)) => {
                        if t.alphabet != u.alphabet {
                            return Err(Error::Config("potentials over different alphabets".into()));
                        }
                        t.alphabet
                    }
                    (Potential::Table(t), _) | (_, Potential::Table(t)) => t.alphabet,
                    _ => unreachable!("both constant handled above"),
                };
                let len = self.range().max(other.range());
                let values = all_words(k, len)
                    .iter()
                    .map(|w| a * self.value_on_word(w) + b * other.value_on_word(w))
                    .collect();
                Potential::finite_range(len, k, values)
            }
        }
    }

    pub fn scale(&self, a: f64) -> Potential {
        match self {
            Potential::Constant(c) => Potential::Constant(a * c),
            Potential::Table(t) => Potential::Table(TablePotential {
                len: t.len,
                alphabet: t.alphabet,
                values: t.values.iter().map(|v| a * v).collect(),
            }),
        }
    }

    /// Modulus of continuity `sup{|phi(x)-phi(y)| : d(x,y) <= eps}`, taken over
    /// pairs of prefixes whose forced distance is at most `eps`.
    pub fn modulus(&self, system: &SystemModel, eps: f64) -> f64 {
        match self {
            Potential::Constant(_) => 0.0,
            Potential::Table(t) => {
                let words = all_words(t.alphabet, t.len);
                let mut best = 0.0f64;
                for u in &words {
                    for v in &words {
                        let forced: f64 = (0..t.len)
                            .map(|i| system.weight(i as i64) * system.rho(u[i], v[i]))
                            .sum();
                        if forced <= eps {
                            best = best.max((t.value_at(u) - t.value_at(v)).abs());
                        }
                    }
                }
                best
            }
        }
    }
}

/// A potential described independently of the alphabet, so that it can be
/// instantiated on every system of a scale-dependent family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PotentialSpec {
    /// A concrete potential; its alphabet must match the system.
    Fixed(Potential),
    /// `offset + slope * v(x_0)` where `v(a) = a/k` on grid shifts and `v(a) = a`
    /// on full shifts.
    Affine { offset: f64, slope: f64 },
    /// Linear combination of other specs.
    Linear(Vec<(f64, PotentialSpec)>),
}

impl PotentialSpec {
    pub fn constant(c: f64) -> Self {
        PotentialSpec::Fixed(Potential::Constant(c))
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &PotentialSpec, b: f64) -> PotentialSpec {
        if let (PotentialSpec::Fixed(Potential::Constant(x)), PotentialSpec::Fixed(Potential::Constant(y))) = (self, other) {
            return PotentialSpec::constant(a * x + b * y);
        }
        PotentialSpec::Linear(vec![(a, self.clone()), (b, other.clone())])
    }

    pub fn at(&self, sys: &SystemModel) -> Result<Potential> {
        match self {
            PotentialSpec::Fixed(p) => {
                if let Potential::Table(t) = p {
                    if t.alphabet != sys.alphabet_size {
                        return Err(Error::Config(format!(
                            "potential alphabet {} does not match system alphabet {}",
                            t.alphabet, sys.alphabet_size
                        )));
                    }
                }
                Ok(p.clone())
            }
            PotentialSpec::Affine { offset, slope } => {
                if *slope == 0.0 {
                    return Ok(Potential::Constant(*offset));
                }
                let k = sys.alphabet_size;
                let scale = match sys.kind {
                    ShiftKind::GridShift => 1.0 / k as f64,
                    ShiftKind::FullShift => 1.0,
                };
                Ok(Potential::coordinate(
                    (0..k).map(|a| offset + slope * a as f64 * scale).collect(),
                ))
            }
            PotentialSpec::Linear(terms) => {
                let mut acc = Potential::Constant(0.0);
                for (c, spec) in terms {
                    acc = acc.combine(1.0, &spec.at(sys)?, *c)?;
                }
                Ok(acc)
            }
        }
    }
}

/// How the system depends on the scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SystemFamily {
    Fixed(SystemModel),
    /// Grid shift with `k = ceil(1/eps)` symbols at scale `eps`.
    GridPerScale {
        sidedness: Sidedness,
        weight_base: f64,
        eps_min: f64,
        enumeration_cap: usize,
    },
}

impl SystemFamily {
    pub fn grid_per_scale(sidedness: Sidedness) -> Self {
        SystemFamily::GridPerScale {
            sidedness,
            weight_base: 0.5,
            eps_min: DEFAULT_EPS_MIN,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }

    pub fn at_scale(&self, eps: f64) -> Result<SystemModel> {
        match self {
            SystemFamily::Fixed(s) => Ok(s.clone()),
            SystemFamily::GridPerScale {
                sidedness,
                weight_base,
                eps_min,
                enumeration_cap,
            } => SystemModel::grid_shift(grid_size_for(eps))
                .sidedness(*sidedness)
                .weight_base(*weight_base)
                .eps_min(eps_min.min(eps))
                .enumeration_cap(*enumeration_cap)
                .build(),
        }
    }
}

/// `ceil(1/eps)`, robust to rounding of exact reciprocals.
pub fn grid_size_for(eps: f64) -> usize {
    ((1.0 / eps) - 1e-9).ceil().max(1.0) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bin() -> SystemModel {
        SystemModel::full_shift(2).build().unwrap()
    }

    #[test]
    fn metric_examples() {
        let s = bin();
        let x = s.point_from_word(&[0, 0, 0]).unwrap();
        let y = s.point_from_word(&[1, 0, 0]).unwrap();
        let z = s.point_from_word(&[0, 1, 0]).unwrap();
        assert_eq!(s.metric(&x, &x).unwrap(), 0.0);
        assert_eq!(s.metric(&x, &y).unwrap(), 1.0);
        assert_eq!(s.metric(&z, &x).unwrap(), 0.5);
    }

    #[test]
    fn mismatched_windows_rejected() {
        let s = bin();
        let t = SystemModel::full_shift(2).window(20).build().unwrap();
        let x = s.point_from_word(&[0]).unwrap();
        let y = t.point_from_word(&[0]).unwrap();
        assert!(matches!(s.metric(&x, &y), Err(Error::Config(_))));
    }

    #[test]
    fn window_check() {
        assert!(SystemModel::full_shift(2).window(4).build().is_err());
        let s = bin();
        assert!(s.truncation_tail() < s.eps_min / 10.0);
    }

    #[test]
    fn shift_examples() {
        let s = bin();
        let x = s.point_from_word(&[0, 1, 1, 0]).unwrap();
        let y = s.apply_map(&x);
        assert_eq!(y.forward(4), &[1, 1, 0, 0]);
        let ones = s.point_from_window(vec![1; s.window_len()]).unwrap();
        let sh = s.apply_map(&ones);
        assert_eq!(*sh.symbols.last().unwrap(), 0);
        assert!(sh.symbols[..s.window_len() - 1].iter().all(|&a| a == 1));
        assert_eq!(sh.genuine, s.window - 1);

        let t = SystemModel::full_shift(2).two_sided().build().unwrap();
        let p = t.point_from_word(&[1, 0, 1]).unwrap();
        let q = t.apply_map(&p);
        assert_eq!(q.origin, p.origin);
        assert_eq!(q.coord(-1), 1);
        assert_eq!(q.coord(0), 0);
        assert_eq!(q.coord(1), 1);
    }

    #[test]
    fn birkhoff_examples() {
        let s = bin();
        let x = s.point_from_word(&[1, 0, 1, 1]).unwrap();
        assert_eq!(s.birkhoff_sum(&Potential::constant(0.3), &x, 5).unwrap(), 0.3 * 5.0);
        let id = Potential::coordinate(vec![0.0, 1.0]);
        assert_eq!(s.birkhoff_sum(&id, &x, 3).unwrap(), 2.0);
        let t = Potential::coordinate(vec![0.2, 0.7]);
        let y = s.point_from_word(&[1, 1, 0]).unwrap();
        assert!((s.birkhoff_sum(&t, &y, 2).unwrap() - 1.4).abs() < 1e-12);
        assert!(matches!(
            s.birkhoff_sum(&t, &y, s.window + 1),
            Err(Error::WindowExhausted { .. })
        ));
        // Constants never exhaust the window.
        assert!(s.birkhoff_sum(&Potential::constant(1.0), &y, 1000).is_ok());
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(bin().enumerate_points(2).unwrap().len(), 4);
        let s3 = SystemModel::full_shift(3).build().unwrap();
        assert_eq!(s3.enumerate_points(3).unwrap().len(), 27);
        let s16 = SystemModel::full_shift(16).build().unwrap();
        assert!(matches!(
            s16.enumerate_points(6),
            Err(Error::EnumerationCap { .. })
        ));
    }

    #[test]
    fn exact_points_have_no_slack() {
        let s = SystemModel::grid_shift(4).two_sided().build().unwrap();
        let x = s.point_from_word(&[1, 2]).unwrap();
        let y = s.point_from_word(&[3, 0]).unwrap();
        assert_eq!(s.step_gap(&x, &y, 1).slack, 0.0);
        let z = s.point_from_window(vec![1; s.window_len()]).unwrap();
        let g = s.step_gap(&x, &z, 0);
        assert!(g.slack > 0.0 && g.slack <= s.truncation_tail() + 1e-15);
    }

    #[test]
    fn modulus_of_tables() {
        let s = bin();
        let t = Potential::coordinate(vec![0.2, 0.7]);
        assert_eq!(t.modulus(&s, 0.5), 0.0);
        assert!((t.modulus(&s, 1.0) - 0.5).abs() < 1e-12);
        assert_eq!(Potential::constant(3.0).modulus(&s, 10.0), 0.0);
    }

    #[test]
    fn combine_potentials() {
        let phi = Potential::coordinate(vec![0.2, 0.7]);
        let psi = Potential::constant(1.0);
        let c = phi.combine(1.0, &psi, -2.0).unwrap();
        assert!((c.value_on_word(&[1]) - (0.7 - 2.0)).abs() < 1e-12);
        let cc = Potential::constant(0.5).combine(1.0, &psi, -1.5).unwrap();
        assert_eq!(cc, Potential::Constant(-1.0));
    }

    #[test]
    fn grid_family() {
        let f = SystemFamily::grid_per_scale(Sidedness::OneSided);
        assert_eq!(f.at_scale(0.125).unwrap().k(), 8);
        assert_eq!(f.at_scale(0.3).unwrap().k(), 4);
        assert_eq!(grid_size_for(1.0 / 256.0), 256);
    }
}
