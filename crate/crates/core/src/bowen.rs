//! Bowen metrics, Bowen balls, separated and spanning sets, and the greedy
//! 5r disjointification.

use crate::error::{Error, Result};
use crate::optimize::{self, CoverInstance};
use crate::systems::{Gap, PointWindow, SystemModel};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const DEFAULT_EXACT_CAP: usize = 24;

/// Exact or greedy optimization; `Auto` is exact whenever the caps allow.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Exact,
    Greedy,
    Auto,
}

/// `d_n(x,y)` as a truncated value with slack for unseen coordinates.
pub fn bowen_gap(sys: &SystemModel, x: &PointWindow, y: &PointWindow, n: usize) -> Result<Gap> {
    check_order(sys, x, y, n)?;
    let mut value: f64 = 0.0;
    let mut upper: f64 = 0.0;
    for j in 0..n {
        let g = sys.step_gap(x, y, j);
        value = value.max(g.value);
        upper = upper.max(g.upper());
    }
    Ok(Gap {
        value,
        slack: upper - value,
    })
}

fn check_order(sys: &SystemModel, x: &PointWindow, y: &PointWindow, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Precondition("Bowen order must be at least 1".into()));
    }
    sys.check_point(x)?;
    sys.check_point(y)?;
    if n > sys.window {
        return Err(Error::WindowExhausted {
            needed: n,
            available: sys.window,
        });
    }
    Ok(())
}

/// `d_n(x,y) = max_{j<n} d(sigma^j x, sigma^j y)` on the retained coordinates.
pub fn bowen_distance(sys: &SystemModel, x: &PointWindow, y: &PointWindow, n: usize) -> Result<f64> {
    Ok(bowen_gap(sys, x, y, n)?.value)
}

/// Conservative ball membership: `y` counts as inside `B_n(x, eps)` only if
/// the truncated distance plus slack is `< eps` (or `<= eps` when closed).
/// Assumes windows already validated.
pub fn within(sys: &SystemModel, x: &PointWindow, y: &PointWindow, n: usize, eps: f64, closed: bool) -> bool {
    for j in 0..n {
        let u = sys.step_gap(x, y, j).upper();
        if (closed && u > eps) || (!closed && u >= eps) {
            return false;
        }
    }
    true
}

/// `d_n(x,y) >= eps`, i.e. not conservatively inside the open ball.
pub fn separated(sys: &SystemModel, x: &PointWindow, y: &PointWindow, n: usize, eps: f64) -> bool {
    !within(sys, x, y, n, eps, false)
}

/// Symbols `b` allowed at coordinate `t` for members of the Bowen ball of
/// order `n` around `c`: those with `w^dist(t, [0, n-1]) rho(c_t, b) < eps`.
/// The product of these sets over the window contains the ball.
pub fn box_symbols(sys: &SystemModel, c: &PointWindow, t: i64, n: usize, eps: f64, closed: bool) -> Vec<u16> {
    let dist = if t < 0 {
        -t
    } else if t >= n as i64 {
        t - n as i64 + 1
    } else {
        0
    };
    let w = sys.weight(dist);
    let ct = c.coord(t);
    (0..sys.k() as u16)
        .filter(|&b| {
            let d = w * sys.rho(ct, b);
            if closed {
                d <= eps
            } else {
                d < eps
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub center: PointWindow,
    pub order: usize,
    pub radius: f64,
    pub closed: bool,
}

impl BallSpec {
    pub fn new(center: PointWindow, order: usize, radius: f64, closed: bool) -> Result<Self> {
        if order == 0 {
            return Err(Error::Precondition("ball order must be at least 1".into()));
        }
        if !(radius > 0.0) {
            return Err(Error::Precondition("ball radius must be positive".into()));
        }
        Ok(BallSpec {
            center,
            order,
            radius,
            closed,
        })
    }

    pub fn contains(&self, sys: &SystemModel, y: &PointWindow) -> bool {
        within(sys, &self.center, y, self.order, self.radius, self.closed)
    }

    pub fn inflated(&self, factor: f64) -> BallSpec {
        BallSpec {
            radius: self.radius * factor,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetFamily {
    pub balls: Vec<BallSpec>,
    pub weights: Option<Vec<f64>>,
}

impl SetFamily {
    pub fn new(balls: Vec<BallSpec>, weights: Option<Vec<f64>>) -> Result<Self> {
        if let Some(w) = &weights {
            if w.len() != balls.len() {
                return Err(Error::Precondition(format!(
                    "{} weights for {} balls",
                    w.len(),
                    balls.len()
                )));
            }
            if w.iter().any(|&c| !(c > 0.0)) {
                return Err(Error::Precondition("family weights must be positive".into()));
            }
        }
        Ok(SetFamily { balls, weights })
    }

    pub fn unweighted(balls: Vec<BallSpec>) -> Self {
        SetFamily { balls, weights: None }
    }
}

/// A subset of the input points, by index, and whether it is optimal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub indices: Vec<usize>,
    pub exact: bool,
}

impl Selection {
    pub fn len(&self) -> usize {
        self.indices.len()
    }
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
    pub fn points(&self, z: &[PointWindow]) -> Vec<PointWindow> {
        self.indices.iter().map(|&i| z[i].clone()).collect()
    }
}

/// Search caps shared by the exact routines.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Caps {
    /// Largest component searched exactly.
    pub exact: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            exact: DEFAULT_EXACT_CAP,
        }
    }
}

/// Points that can only be within `eps` of each other under `d_n` if they
/// agree on coordinates `0..n`, grouped by that prefix. Lexicographic point
/// order is kept inside each group. When the metric does not force such
/// agreement everything lands in one group.
pub fn prefix_groups(sys: &SystemModel, z: &[PointWindow], n: usize, eps: f64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..z.len()).collect();
    order.sort_by(|&a, &b| z[a].symbols.cmp(&z[b].symbols).then(a.cmp(&b)));
    if sys.symbol_separation() < eps || z.is_empty() {
        return vec![order];
    }
    let mut groups: BTreeMap<&[u16], Vec<usize>> = BTreeMap::new();
    for i in order {
        let key = z[i].forward(n.min(z[i].symbols.len() - z[i].origin));
        groups.entry(key).or_default().push(i);
    }
    groups.into_values().collect()
}

fn validate(sys: &SystemModel, z: &[PointWindow], n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Precondition("Bowen order must be at least 1".into()));
    }
    if n > sys.window {
        return Err(Error::WindowExhausted {
            needed: n,
            available: sys.window,
        });
    }
    for x in z {
        sys.check_point(x)?;
    }
    Ok(())
}

fn use_exact(mode: Mode, largest: usize, cap: usize) -> Result<bool> {
    match mode {
        Mode::Greedy => Ok(false),
        Mode::Auto => Ok(largest <= cap),
        Mode::Exact => {
            if largest > cap {
                Err(Error::ExactCap { size: largest, cap })
            } else {
                Ok(true)
            }
        }
    }
}

/// Largest (n, eps)-separated subset of `z`.
pub fn max_separated(sys: &SystemModel, z: &[PointWindow], n: usize, eps: f64, mode: Mode, caps: Caps) -> Result<Selection> {
    max_separated_weighted(sys, z, n, eps, None, mode, caps)
}

/// Separated subset of `z` maximizing the total weight (cardinality when
/// `weights` is `None`). Greedy visits points lexicographically, or by
/// decreasing weight when weights are given.
pub fn max_separated_weighted(
    sys: &SystemModel,
    z: &[PointWindow],
    n: usize,
    eps: f64,
    weights: Option<&[f64]>,
    mode: Mode,
    caps: Caps,
) -> Result<Selection> {
    validate(sys, z, n)?;
    let groups = prefix_groups(sys, z, n, eps);
    let largest = groups.iter().map(|g| g.len()).max().unwrap_or(0);
    let exact = use_exact(mode, largest, caps.exact.min(optimize::CLIQUE_LIMIT))?;
    let mut picked = Vec::new();
    for g in &groups {
        if exact {
            let m = g.len();
            let mut adj = vec![0u128; m];
            for a in 0..m {
                for b in a + 1..m {
                    if separated(sys, &z[g[a]], &z[g[b]], n, eps) {
                        adj[a] |= 1 << b;
                        adj[b] |= 1 << a;
                    }
                }
            }
            let w: Vec<f64> = match weights {
                Some(w) => g.iter().map(|&i| w[i]).collect(),
                None => vec![1.0; m],
            };
            let best = optimize::max_weight_clique(&adj, &w)?;
            picked.extend(best.into_iter().map(|a| g[a]));
        } else {
            let mut order = g.clone();
            if let Some(w) = weights {
                order.sort_by(|&a, &b| w[b].total_cmp(&w[a]));
            }
            let mut kept: Vec<usize> = Vec::new();
            for i in order {
                if kept.iter().all(|&k| separated(sys, &z[k], &z[i], n, eps)) {
                    kept.push(i);
                }
            }
            picked.extend(kept);
        }
    }
    picked.sort_unstable();
    Ok(Selection {
        indices: picked,
        exact,
    })
}

/// Smallest (n, eps)-spanning subset of `z` with centers drawn from `z`.
pub fn min_spanning(sys: &SystemModel, z: &[PointWindow], n: usize, eps: f64, mode: Mode, caps: Caps) -> Result<Selection> {
    min_spanning_weighted(sys, z, n, eps, None, mode, caps)
}

/// Spanning subset of `z` minimizing the total weight of its centers.
pub fn min_spanning_weighted(
    sys: &SystemModel,
    z: &[PointWindow],
    n: usize,
    eps: f64,
    weights: Option<&[f64]>,
    mode: Mode,
    caps: Caps,
) -> Result<Selection> {
    validate(sys, z, n)?;
    let groups = prefix_groups(sys, z, n, eps);
    let largest = groups.iter().map(|g| g.len()).max().unwrap_or(0);
    let exact = use_exact(mode, largest, caps.exact.min(optimize::COVER_LIMIT))?;
    let mut picked = Vec::new();
    for g in &groups {
        let m = g.len();
        let mut sets = vec![Vec::new(); m];
        for a in 0..m {
            sets[a].push(a);
            for b in a + 1..m {
                if within(sys, &z[g[a]], &z[g[b]], n, eps, false) {
                    sets[a].push(b);
                    sets[b].push(a);
                }
            }
        }
        for s in &mut sets {
            s.sort_unstable();
        }
        let costs = match weights {
            Some(w) => g.iter().map(|&i| w[i]).collect(),
            None => vec![1.0; m],
        };
        let inst = CoverInstance {
            elements: m,
            sets,
            costs,
        };
        let chosen = if exact {
            optimize::exact_set_cover(&inst)?
        } else {
            optimize::greedy_set_cover(&inst)?
        };
        picked.extend(chosen.into_iter().map(|a| g[a]));
    }
    picked.sort_unstable();
    Ok(Selection {
        indices: picked,
        exact,
    })
}

/// Every point of `z` lies within `< eps` of some center.
pub fn is_spanning(sys: &SystemModel, z: &[PointWindow], centers: &[PointWindow], n: usize, eps: f64) -> bool {
    z.iter()
        .all(|p| centers.iter().any(|c| within(sys, c, p, n, eps, false)))
}

/// Pairwise (n, eps)-separated.
pub fn is_separated(sys: &SystemModel, pts: &[PointWindow], n: usize, eps: f64) -> bool {
    (0..pts.len()).all(|a| (a + 1..pts.len()).all(|b| separated(sys, &pts[a], &pts[b], n, eps)))
}

/// Result of the greedy 5r disjointification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disjointified {
    pub kept: Vec<usize>,
    pub family: SetFamily,
}

/// Greedy by decreasing radius (ties by input order): keep a ball iff no
/// point of the test universe lies in it and in an already kept ball. The
/// universe is `universe` together with all ball centers.
pub fn five_r_disjointify(sys: &SystemModel, family: &SetFamily, universe: &[PointWindow]) -> Result<Disjointified> {
    let balls = &family.balls;
    if let Some(b) = balls.iter().find(|b| !b.closed) {
        return Err(Error::Precondition(format!(
            "5r disjointification needs closed balls (order {}, radius {})",
            b.order, b.radius
        )));
    }
    if let Some(first) = balls.first() {
        if balls.iter().any(|b| b.order != first.order) {
            return Err(Error::Precondition("5r disjointification needs a common order".into()));
        }
    }
    let pts = test_universe(family, universe);
    let member: Vec<Vec<bool>> = balls
        .iter()
        .map(|b| pts.iter().map(|p| b.contains(sys, p)).collect())
        .collect();
    let mut order: Vec<usize> = (0..balls.len()).collect();
    order.sort_by(|&a, &b| balls[b].radius.total_cmp(&balls[a].radius).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        let clash = kept
            .iter()
            .any(|&k| (0..pts.len()).any(|p| member[i][p] && member[k][p]));
        if !clash {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    let weights = family
        .weights
        .as_ref()
        .map(|w| kept.iter().map(|&i| w[i]).collect());
    Ok(Disjointified {
        family: SetFamily {
            balls: kept.iter().map(|&i| balls[i].clone()).collect(),
            weights,
        },
        kept,
    })
}

fn test_universe(family: &SetFamily, universe: &[PointWindow]) -> Vec<PointWindow> {
    let mut pts: Vec<PointWindow> = universe.to_vec();
    pts.extend(family.balls.iter().map(|b| b.center.clone()));
    pts.sort();
    pts.dedup();
    pts
}

/// Postcondition report for a disjointified family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiveRCheck {
    pub disjoint: bool,
    pub covered: bool,
    pub overlapping_pairs: usize,
    pub uncovered_points: usize,
    pub universe_size: usize,
}

impl FiveRCheck {
    pub fn passed(&self) -> bool {
        self.disjoint && self.covered
    }
}

/// Checks pairwise disjointness of the kept balls and that their 5-fold
/// inflations cover every universe point lying in an input ball.
pub fn verify_five_r(sys: &SystemModel, family: &SetFamily, out: &Disjointified, universe: &[PointWindow]) -> FiveRCheck {
    let pts = test_universe(family, universe);
    let kept = &out.family.balls;
    let mut overlapping = 0;
    for a in 0..kept.len() {
        for b in a + 1..kept.len() {
            if pts.iter().any(|p| kept[a].contains(sys, p) && kept[b].contains(sys, p)) {
                overlapping += 1;
            }
        }
    }
    let inflated: Vec<BallSpec> = kept.iter().map(|b| b.inflated(5.0)).collect();
    let uncovered = pts
        .iter()
        .filter(|p| family.balls.iter().any(|b| b.contains(sys, p)))
        .filter(|p| !inflated.iter().any(|b| b.contains(sys, p)))
        .count();
    FiveRCheck {
        disjoint: overlapping == 0,
        covered: uncovered == 0,
        overlapping_pairs: overlapping,
        uncovered_points: uncovered,
        universe_size: pts.len(),
    }
}

/// Separated and spanning counts in both modes where permitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    /// Greedy maximal separated count, a lower bound on `s_n`.
    pub s_lower: usize,
    pub s_exact: Option<usize>,
    /// Greedy spanning count, an upper bound on `r_n`.
    pub r_upper: usize,
    pub r_exact: Option<usize>,
}

pub fn count_separated_spanning(sys: &SystemModel, z: &[PointWindow], n: usize, eps: f64, caps: Caps) -> Result<Counts> {
    if z.is_empty() {
        return Ok(Counts {
            s_lower: 0,
            s_exact: Some(0),
            r_upper: 0,
            r_exact: Some(0),
        });
    }
    let s_greedy = max_separated(sys, z, n, eps, Mode::Greedy, caps)?;
    let s_auto = max_separated(sys, z, n, eps, Mode::Auto, caps)?;
    let r_greedy = min_spanning(sys, z, n, eps, Mode::Greedy, caps)?;
    let r_auto = min_spanning(sys, z, n, eps, Mode::Auto, caps)?;
    Ok(Counts {
        s_lower: s_greedy.len(),
        s_exact: s_auto.exact.then_some(s_auto.len()),
        r_upper: r_greedy.len(),
        r_exact: r_auto.exact.then_some(r_auto.len()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bin() -> SystemModel {
        SystemModel::full_shift(2).build().unwrap()
    }

    #[test]
    fn distance_examples() {
        let s = bin();
        let x = s.point_from_word(&[0, 0]).unwrap();
        let y = s.point_from_word(&[0, 1]).unwrap();
        assert_eq!(bowen_distance(&s, &x, &y, 1).unwrap(), s.metric(&x, &y).unwrap());
        assert_eq!(bowen_distance(&s, &x, &y, 2).unwrap(), 1.0);
        assert_eq!(bowen_distance(&s, &x, &x, 5).unwrap(), 0.0);
        assert!(bowen_distance(&s, &x, &y, 0).is_err());
    }

    #[test]
    fn separated_examples() {
        let s = bin();
        let z = s.enumerate_points(2).unwrap();
        let caps = Caps::default();
        assert_eq!(max_separated(&s, &z[..1], 2, 0.6, Mode::Exact, caps).unwrap().len(), 1);
        assert_eq!(max_separated(&s, &z, 2, 0.6, Mode::Exact, caps).unwrap().len(), 4);
        assert_eq!(max_separated(&s, &z, 1, 0.6, Mode::Exact, caps).unwrap().len(), 2);
    }

    #[test]
    fn spanning_examples() {
        let s = bin();
        let z = s.enumerate_points(2).unwrap();
        let caps = Caps::default();
        assert_eq!(min_spanning(&s, &z[..1], 2, 0.6, Mode::Exact, caps).unwrap().len(), 1);
        assert_eq!(min_spanning(&s, &z, 2, 1.2, Mode::Exact, caps).unwrap().len(), 2);
        assert_eq!(min_spanning(&s, &z, 2, 10.0, Mode::Exact, caps).unwrap().len(), 1);
    }

    #[test]
    fn exact_cap_enforced() {
        let s = bin();
        let z = s.enumerate_points(5).unwrap();
        let caps = Caps { exact: 24 };
        // With eps above the symbol separation there is a single group of 32.
        assert!(matches!(
            max_separated(&s, &z, 1, 1.5, Mode::Exact, caps),
            Err(Error::ExactCap { .. })
        ));
        let c = count_separated_spanning(&s, &z, 1, 1.5, caps).unwrap();
        assert!(c.s_exact.is_none() && c.r_exact.is_none());
        assert!(c.r_upper <= c.s_lower.max(c.r_upper));
    }

    #[test]
    fn empty_counts() {
        let c = count_separated_spanning(&bin(), &[], 1, 0.5, Caps::default()).unwrap();
        assert_eq!((c.s_lower, c.r_upper), (0, 0));
    }

    #[test]
    fn five_r_small_families() {
        let s = bin();
        let z = s.enumerate_points(3).unwrap();
        let b = BallSpec::new(z[0].clone(), 1, 0.3, true).unwrap();
        let fam = SetFamily::unweighted(vec![b.clone()]);
        let out = five_r_disjointify(&s, &fam, &z).unwrap();
        assert_eq!(out.kept, vec![0]);
        let fam2 = SetFamily::unweighted(vec![b.clone(), b]);
        let out2 = five_r_disjointify(&s, &fam2, &z).unwrap();
        assert_eq!(out2.kept.len(), 1);
        assert!(verify_five_r(&s, &fam2, &out2, &z).passed());
    }

    #[test]
    fn five_r_on_a_line() {
        // Grid points 0, 1/8, 2/8 at coordinate 0 with overlapping radii.
        let s = SystemModel::grid_shift(8).build().unwrap();
        let p = |a: u16| s.point_from_word(&[a]).unwrap();
        let balls = vec![
            BallSpec::new(p(0), 1, 0.13, true).unwrap(),
            BallSpec::new(p(1), 1, 0.13, true).unwrap(),
            BallSpec::new(p(2), 1, 0.13, true).unwrap(),
        ];
        let fam = SetFamily::unweighted(balls);
        let uni = s.enumerate_points(2).unwrap();
        let out = five_r_disjointify(&s, &fam, &uni).unwrap();
        // Ball 1 meets ball 0 at p(1); ball 2 meets ball 0 at p(1) too.
        assert_eq!(out.kept, vec![0]);
        assert!(verify_five_r(&s, &fam, &out, &uni).passed());
    }

    #[test]
    fn open_balls_rejected_by_five_r() {
        let s = bin();
        let z = s.enumerate_points(1).unwrap();
        let fam = SetFamily::unweighted(vec![BallSpec::new(z[0].clone(), 1, 0.5, false).unwrap()]);
        assert!(five_r_disjointify(&s, &fam, &z).is_err());
    }
}
