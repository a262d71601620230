//! Executable invariants, grouped into suites. Every assertion reports the
//! measured slack of its inequality (negative when it fails).

use crate::bowen::{self, BallSpec, Caps, SetFamily};
use crate::caratheodory::{self, Instance, InstanceOptions, Structure};
use crate::entropy::{self, Bound, KatokOptions, LocalOptions, PsOptions};
use crate::error::{Error, Result};
use crate::measure::{self, MassSampler, MeasureModel};
use crate::pressure::{self, InducedWitness, PressureOptions};
use crate::systems::{PointWindow, Potential, SystemModel};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Counting,
    Pressure,
    Caratheodory,
    Entropy,
    /// The inequality directions that hold literally at finite scale.
    FiniteScale,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "counting" => Suite::Counting,
            "pressure" => Suite::Pressure,
            "caratheodory" => Suite::Caratheodory,
            "entropy" => Suite::Entropy,
            "finite-scale" => Suite::FiniteScale,
            "all" => Suite::All,
            other => {
                return Err(Error::Config(format!(
                    "unknown suite {other:?}, expected counting, pressure, caratheodory, entropy, finite-scale or all"
                )))
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub suite: String,
    pub name: String,
    pub passed: bool,
    /// Margin by which the assertion holds; negative on failure.
    pub slack: f64,
    pub detail: String,
}

/// `lhs <= rhs + tol`, with slack `rhs + tol - lhs`.
fn leq(suite: &str, name: &str, lhs: f64, rhs: f64, tol: f64, detail: String) -> Assertion {
    let slack = rhs + tol - lhs;
    Assertion {
        suite: suite.into(),
        name: name.into(),
        passed: slack >= 0.0,
        slack,
        detail,
    }
}

fn holds(suite: &str, name: &str, ok: bool, detail: String) -> Assertion {
    Assertion {
        suite: suite.into(),
        name: name.into(),
        passed: ok,
        slack: if ok { 0.0 } else { -1.0 },
        detail,
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<Assertion>> {
    match suite {
        Suite::Counting => counting_suite(seed),
        Suite::Pressure => pressure_suite(seed),
        Suite::Caratheodory => caratheodory_suite(seed),
        Suite::Entropy => entropy_suite(seed),
        Suite::FiniteScale => {
            let mut out = counting_suite(seed)?;
            out.extend(pressure_suite(seed)?);
            out.extend(caratheodory_inequalities(seed)?);
            out.extend(entropy_inequalities(seed)?);
            Ok(out)
        }
        Suite::All => {
            let mut out = counting_suite(seed)?;
            out.extend(pressure_suite(seed)?);
            out.extend(caratheodory_suite(seed)?);
            out.extend(entropy_suite(seed)?);
            Ok(out)
        }
    }
}

/// Scales used by the exhaustive counting check.
pub const COUNTING_EPS: [f64; 8] = [0.1, 0.2, 0.3, 0.45, 0.6, 0.8, 1.1, 1.5];

/// `r_n(eps) <= s_n(eps) <= r_n(eps/2)` on every word set of depth 1..=4 over
/// two symbols, `n <= 3`, and the 5r-lemma postconditions on random families.
pub fn counting_suite(seed: u64) -> Result<Vec<Assertion>> {
    let mut out = counting_chain()?;
    out.extend(five_r_families(seed, 100)?);
    Ok(out)
}

pub fn counting_chain() -> Result<Vec<Assertion>> {
    let sys = SystemModel::full_shift(2).build()?;
    let caps = Caps::default();
    let mut out = Vec::new();
    for depth in 1..=4 {
        let z = sys.enumerate_points(depth)?;
        for n in 1..=3 {
            for &eps in &COUNTING_EPS {
                let c = bowen::count_separated_spanning(&sys, &z, n, eps, caps)?;
                let half = bowen::count_separated_spanning(&sys, &z, n, eps / 2.0, caps)?;
                let (Some(s), Some(r), Some(r2)) = (c.s_exact, c.r_exact, half.r_exact) else {
                    return Err(Error::ExactCap { size: z.len(), cap: caps.exact });
                };
                let slack = (s as f64 - r as f64).min(r2 as f64 - s as f64);
                out.push(Assertion {
                    suite: "counting".into(),
                    name: "spanning-separated-chain".into(),
                    passed: slack >= 0.0,
                    slack,
                    detail: format!("depth={depth} n={n} eps={eps} r={r} s={s} r_half={r2}"),
                });
            }
        }
    }
    Ok(out)
}

/// Random word point of the given depth.
fn random_word(sys: &SystemModel, depth: usize, rng: &mut ChaCha8Rng) -> Result<PointWindow> {
    let w: Vec<u16> = (0..depth).map(|_| rng.random_range(0..sys.k() as u16)).collect();
    sys.point_from_word(&w)
}

pub fn five_r_families(seed: u64, count: usize) -> Result<Vec<Assertion>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(11);
    let mut out = Vec::new();
    for trial in 0..count {
        let k = rng.random_range(2..=3);
        let sys = SystemModel::full_shift(k).build()?;
        let order = rng.random_range(1..=3);
        let size = rng.random_range(1..=8);
        let balls = (0..size)
            .map(|_| {
                let c = random_word(&sys, 4, &mut rng)?;
                BallSpec::new(c, order, rng.random_range(0.05..1.5), true)
            })
            .collect::<Result<Vec<_>>>()?;
        let family = SetFamily::unweighted(balls);
        let universe = sys.enumerate_points(if k == 2 { 5 } else { 3 })?;
        let d = bowen::five_r_disjointify(&sys, &family, &universe)?;
        let chk = bowen::verify_five_r(&sys, &family, &d, &universe);
        out.push(holds(
            "counting",
            "five-r-lemma",
            chk.passed(),
            format!(
                "trial={trial} k={k} order={order} balls={size} kept={} overlaps={} uncovered={}",
                d.kept.len(),
                chk.overlapping_pairs,
                chk.uncovered_points
            ),
        ));
    }
    Ok(out)
}

fn random_table(k: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Potential {
    Potential::coordinate((0..k).map(|_| rng.random_range(lo..hi)).collect())
}

/// Per-term pressure inequalities on enumerated witnesses, and the induced
/// pressure identities.
pub fn pressure_suite(seed: u64) -> Result<Vec<Assertion>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(12);
    let mut out = Vec::new();
    for trial in 0..40 {
        let k = rng.random_range(2..=3);
        let sys = SystemModel::full_shift(k).build()?;
        let f = sys.enumerate_points(3)?;
        let phi = random_table(k, -1.0, 1.0, &mut rng);
        let psi = random_table(k, 0.2, 2.0, &mut rng);
        let n = rng.random_range(1..=3);
        let eps: f64 = [0.3, 0.6, 0.9][rng.random_range(0..3)];
        let l = (1.0 / eps).ln();
        let p_phi = pressure::pressure_sum(&sys, &f, &phi, n, eps)?;
        let p_psi = pressure::pressure_sum(&sys, &f, &psi, n, eps)?;
        let norm = phi.combine(1.0, &psi, -1.0)?.sup_norm();
        let tol = 1e-12 * (1.0 + p_phi.abs().max(p_psi.abs()));
        out.push(leq(
            "pressure",
            "lipschitz",
            (p_phi - p_psi).abs(),
            n as f64 * l * norm,
            tol,
            format!("trial={trial} k={k} n={n} eps={eps}"),
        ));
        let (b1, b2) = {
            let a = rng.random_range(-2.0..2.0);
            (a, a + rng.random_range(0.01..1.0))
        };
        let q1 = pressure::pressure_sum(&sys, &f, &phi.combine(1.0, &psi, -b1)?, n, eps)?;
        let q2 = pressure::pressure_sum(&sys, &f, &phi.combine(1.0, &psi, -b2)?, n, eps)?;
        out.push(leq(
            "pressure",
            "strict-decrease",
            q2,
            q1 - n as f64 * l * psi.min() * (b2 - b1),
            1e-12 * (1.0 + q1.abs()),
            format!("trial={trial} k={k} n={n} eps={eps} beta=({b1:.3},{b2:.3})"),
        ));
    }
    out.extend(induced_checks()?);
    Ok(out)
}

/// With `psi = 1` the induced record at time `T` is the plain record at
/// `n = T`; the spanning form never exceeds the separated one.
pub fn induced_checks() -> Result<Vec<Assertion>> {
    let mut out = Vec::new();
    let opts = PressureOptions::default();
    for (k, phi) in [
        (2, Potential::coordinate(vec![0.0, 0.5])),
        (3, Potential::coordinate(vec![0.2, -0.3, 0.7])),
    ] {
        let sys = SystemModel::full_shift(k).build()?;
        for &eps in &[0.3, 0.6] {
            for t in 1..=3usize {
                let plain = pressure::pressure_record(&sys, &phi, t, eps, &opts)?;
                let ind = pressure::induced_record(&sys, &phi, &Potential::constant(1.0), t as f64, eps, InducedWitness::Separated, &opts)?;
                out.push(holds(
                    "pressure",
                    "induced-unit-psi-matches-plain",
                    ind.log_value.to_bits() == plain.log_sum.to_bits(),
                    format!("k={k} eps={eps} T={t} induced={} plain={}", ind.log_value, plain.log_sum),
                ));
            }
            let psi = Potential::coordinate((0..k).map(|a| 1.0 + 0.5 * a as f64).collect());
            for t in [1.5, 2.5, 3.0] {
                let p = pressure::induced_record(&sys, &phi, &psi, t, eps, InducedWitness::Separated, &opts)?;
                let q = pressure::induced_record(&sys, &phi, &psi, t, eps, InducedWitness::Spanning, &opts)?;
                out.push(leq(
                    "pressure",
                    "spanning-below-separated",
                    q.log_value,
                    p.log_value,
                    0.0,
                    format!("k={k} eps={eps} T={t}"),
                ));
            }
        }
    }
    Ok(out)
}

/// A random instance whose candidate balls resolve the coordinate potential.
fn random_resolving_instance(rng: &mut ChaCha8Rng) -> Result<Instance> {
    let grid = rng.random_bool(0.5);
    let k = rng.random_range(2..=3);
    let sys = if grid {
        SystemModel::grid_shift(k).build()?
    } else {
        SystemModel::full_shift(k).build()?
    };
    let eps = if grid {
        rng.random_range(0.3..1.0) / k as f64
    } else {
        rng.random_range(0.2..1.0)
    };
    let mut words = sys.enumerate_points(3)?;
    words.shuffle(rng);
    let size = rng.random_range(2..=8);
    let z: Vec<PointWindow> = words.into_iter().take(size).collect();
    let phi = random_table(k, 0.2, 2.0, rng);
    let n_min = rng.random_range(1..=2);
    let n_max = rng.random_range(n_min..=3);
    Instance::new(&sys, &z, &phi, InstanceOptions::new(n_min, n_max, eps))
}

pub fn caratheodory_suite(seed: u64) -> Result<Vec<Assertion>> {
    let mut out = identity_checks(seed, 50)?;
    out.extend(caratheodory_inequalities(seed)?);
    Ok(out)
}

/// BS values against cover values at the substituted potential, and the
/// unit-potential critical exponents.
pub fn identity_checks(seed: u64, count: usize) -> Result<Vec<Assertion>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(13);
    let mut out = Vec::new();
    for trial in 0..count {
        let inst = random_resolving_instance(&mut rng)?;
        let lambda = rng.random_range(0.05..3.0);
        let c = caratheodory::substitution_identity(&inst, lambda)?;
        out.push(leq(
            "caratheodory",
            "bs-cover-identity",
            c.cover_residual,
            1e-10,
            0.0,
            format!("trial={trial} lambda={lambda:.4} bs={} cover={}", c.bs_log, c.cover_log),
        ));
        out.push(leq(
            "caratheodory",
            "packing-bs-identity",
            c.packing_residual,
            1e-10,
            0.0,
            format!("trial={trial} lambda={lambda:.4} bs={} packing={}", c.packing_bs_log, c.packing_log),
        ));
    }
    for trial in 0..10 {
        let inst = random_resolving_instance(&mut rng)?;
        let tol = 1e-9;
        let one = inst.with_potential(&Potential::constant(1.0))?.critical(Structure::Bs, tol)?;
        let zero = inst.with_potential(&Potential::constant(0.0))?.critical(Structure::Cover, tol)?;
        out.push(leq(
            "caratheodory",
            "unit-bs-critical-equals-cover",
            (one.lambda - zero.lambda).abs(),
            tol,
            0.0,
            format!("trial={trial} bs={} cover={}", one.lambda, zero.lambda),
        ));
    }
    Ok(out)
}

/// `W <= R`, `R(lambda + delta, 6 eps) <= W(lambda, eps)` on exact instances,
/// covers at `3 eps` below packings at `eps`, refined packing equal to packing.
pub fn caratheodory_inequalities(seed: u64) -> Result<Vec<Assertion>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(14);
    let mut out = Vec::new();
    for trial in 0..30 {
        let inst = random_resolving_instance(&mut rng)?;
        let lambda = rng.random_range(0.05..2.0);
        let delta = rng.random_range(0.05..1.0);
        let w = inst.value(Structure::Weighted, lambda)?;
        let r = inst.value(Structure::Bs, lambda)?;
        out.push(leq("caratheodory", "weighted-below-bs", w.log_value, r.log_value, 1e-9, format!("trial={trial} lambda={lambda:.4}")));
        if r.exact {
            let wide = Instance::new(
                &inst.sys,
                &inst.z,
                &inst.phi,
                InstanceOptions::new(inst.opts.n_min, inst.opts.n_max, 6.0 * inst.opts.eps),
            )?;
            let r6 = wide.value(Structure::Bs, lambda + delta)?;
            if r6.exact {
                out.push(leq(
                    "caratheodory",
                    "bs-six-eps-below-weighted",
                    r6.log_value,
                    w.log_value,
                    1e-9,
                    format!("trial={trial} lambda={lambda:.4} delta={delta:.4} eps={}", inst.opts.eps),
                ));
            }
        }
        let chain = caratheodory::chain_comparison(&inst.sys, &inst.z, lambda, inst.opts.n_min, inst.opts.n_max, inst.opts.eps)?;
        if chain.exact {
            out.push(leq(
                "caratheodory",
                "cover-three-eps-below-packing",
                chain.cover_3eps_log,
                chain.packing_eps_log,
                1e-12,
                format!("trial={trial} lambda={lambda:.4} eps={}", inst.opts.eps),
            ));
        }
        let p = inst.value(Structure::Packing, lambda)?;
        let rp = inst.value(Structure::RefinedPacking, lambda)?;
        out.push(leq(
            "caratheodory",
            "refined-packing-equals-packing",
            (p.log_value - rp.log_value).abs(),
            1e-12,
            0.0,
            format!("trial={trial} lambda={lambda:.4}"),
        ));
    }
    Ok(out)
}

pub fn entropy_suite(seed: u64) -> Result<Vec<Assertion>> {
    let mut out = entropy_identities(seed)?;
    out.extend(entropy_inequalities(seed)?);
    Ok(out)
}

/// BS with unit potential against Brin-Katok, Katok monotonicity on exact
/// instances, and Monte-Carlo masses inside the analytic bracket.
pub fn entropy_identities(seed: u64) -> Result<Vec<Assertion>> {
    let mut out = Vec::new();
    let bin = SystemModel::full_shift(2).build()?;
    let mu = MeasureModel::bernoulli(&bin, vec![0.3, 0.7], seed)?;
    let opts = LocalOptions {
        x_samples: 8,
        mass_samples: 4000,
        ..LocalOptions::default()
    };
    let bk = entropy::brin_katok(&mu, 0.5, &[2, 4, 6], &opts, Bound::Upper)?;
    let bs = entropy::bs_entropy(&mu, &Potential::constant(1.0), 0.5, &[2, 4, 6], &opts, Bound::Upper)?;
    out.push(holds(
        "entropy",
        "unit-bs-equals-bk",
        bk.extrapolated.to_bits() == bs.extrapolated.to_bits() && bk.per_scale == bs.per_scale,
        format!("bk={} bs={}", bk.extrapolated, bs.extrapolated),
    ));

    let words = bin.enumerate_points(3)?;
    let m = words.len();
    let emp = MeasureModel::empirical(&bin, words, vec![1.0; m], seed)?;
    let pool = entropy::mass_pool(&emp, 0, 0)?;
    let caps = Caps::default();
    let r = |n: usize, eps: f64, d: f64| -> Result<usize> { Ok(entropy::katok_rn(&bin, &pool, &pool.points, n, eps, d, caps)?.count) };
    for n in 1..=2 {
        for &eps in &[0.3, 0.6, 1.2] {
            for &d in &[0.2, 0.5, 0.8] {
                let base = r(n, eps, d)?;
                out.push(leq("entropy", "katok-nondecreasing-in-n", base as f64, r(n + 1, eps, d)? as f64, 0.0, format!("n={n} eps={eps} delta={d}")));
                out.push(leq("entropy", "katok-nonincreasing-in-eps", r(n, 2.0 * eps, d)? as f64, base as f64, 0.0, format!("n={n} eps={eps} delta={d}")));
                out.push(leq("entropy", "katok-nonincreasing-in-delta", r(n, eps, d + 0.1)? as f64, base as f64, 0.0, format!("n={n} eps={eps} delta={d}")));
            }
        }
    }

    let grid = SystemModel::grid_shift(16).build()?;
    let uni = MeasureModel::product_uniform(&grid, seed);
    let eps = 1.0 / 16.0;
    let xs = uni.sample(3, measure::stream_id(7, 0))?;
    for (i, x) in xs.iter().enumerate() {
        for n in 1..=3 {
            let (lo, hi) = measure::ball_mass_bracket(&uni, n, eps)?;
            let e = measure::estimate_ball_mass(&uni, x, n, eps, 10_000, MassSampler::Conditioned, measure::stream_id(8, (i * 8 + n) as u64))?;
            let inside = e.ci.1 <= hi && (e.zero_hits || e.ci.0 >= lo);
            out.push(holds("entropy", "mass-inside-bracket", inside, format!("x={i} n={n} ci=({:.3e},{:.3e}) bracket=({lo:.3e},{hi:.3e})", e.ci.0, e.ci.1)));
        }
    }
    Ok(out)
}

/// Parameters of the Bernoulli inequality checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalitySetup {
    pub bk_eps: f64,
    pub bk_schedule: Vec<usize>,
    pub katok_wide_schedule: Vec<usize>,
    pub ps_eps: f64,
    pub ps_schedule: Vec<usize>,
    pub ps_eta: f64,
    pub ps_dictionary: usize,
    pub delta: f64,
    pub pool: usize,
}

impl Default for InequalitySetup {
    fn default() -> Self {
        InequalitySetup {
            bk_eps: 0.3,
            bk_schedule: vec![2, 4, 6, 8],
            katok_wide_schedule: vec![6, 8, 10],
            ps_eps: 0.6,
            ps_schedule: vec![6, 8, 10],
            ps_eta: 0.1,
            ps_dictionary: 6,
            delta: 0.5,
            pool: 6000,
        }
    }
}

/// Measured sides of the entropy inequalities on one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalitySides {
    pub bk_lower: f64,
    pub bk_upper: f64,
    pub katok_wide: f64,
    pub katok: f64,
    pub ps: f64,
}

pub fn inequality_sides(mu: &MeasureModel, s: &InequalitySetup) -> Result<InequalitySides> {
    let local = LocalOptions {
        x_samples: 12,
        mass_samples: 4000,
        ..LocalOptions::default()
    };
    let kopts = KatokOptions {
        pool_size: s.pool,
        bootstrap: 0,
        ..KatokOptions::default()
    };
    let (bk_lower, bk_upper) = entropy::brin_katok_bounds(mu, s.bk_eps, &s.bk_schedule, &local)?;
    let (bk_lower, bk_upper) = (bk_lower.extrapolated, bk_upper.extrapolated);
    let katok = entropy::katok_entropy(mu, s.ps_eps, s.delta, &s.ps_schedule, &kopts)?.extrapolated;
    let katok_wide = if 2.0 * s.bk_eps == s.ps_eps && s.katok_wide_schedule == s.ps_schedule {
        katok
    } else {
        entropy::katok_entropy(mu, 2.0 * s.bk_eps, s.delta, &s.katok_wide_schedule, &kopts)?.extrapolated
    };
    let ps_opts = PsOptions::new(&mu.system, vec![s.ps_eta], s.ps_dictionary);
    let ps = entropy::ps_entropy(mu, s.ps_eps, &s.ps_schedule, &ps_opts)?.extrapolated;
    Ok(InequalitySides {
        bk_lower,
        bk_upper,
        katok_wide,
        katok,
        ps,
    })
}

/// `katok(2 eps) <= BK-upper(eps) + 0.05`, `katok(eps) <= PS(eps) + 0.1` and
/// `BK-lower <= BK-upper` on Bernoulli models.
pub fn entropy_inequalities(seed: u64) -> Result<Vec<Assertion>> {
    let bin = SystemModel::full_shift(2).window(24).build()?;
    let setup = InequalitySetup::default();
    let mut out = Vec::new();
    for p in [vec![0.5, 0.5], vec![0.4, 0.6]] {
        let mu = MeasureModel::bernoulli(&bin, p.clone(), seed)?;
        let s = inequality_sides(&mu, &setup)?;
        let tag = format!("p={p:?}");
        out.push(leq("entropy", "bk-lower-below-upper", s.bk_lower, s.bk_upper, 0.0, tag.clone()));
        out.push(leq(
            "entropy",
            "katok-two-eps-below-bk-upper",
            s.katok_wide,
            s.bk_upper,
            0.05,
            format!("{tag} katok={:.4} bk_upper={:.4}", s.katok_wide, s.bk_upper),
        ));
        out.push(leq(
            "entropy",
            "katok-below-ps",
            s.katok,
            s.ps,
            0.1,
            format!("{tag} katok={:.4} ps={:.4}", s.katok, s.ps),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counting_chain_has_96_cases() {
        let a = counting_chain().unwrap();
        assert_eq!(a.len(), 96);
        assert!(a.iter().all(|x| x.passed), "{:?}", a.iter().find(|x| !x.passed));
    }

    #[test]
    fn suite_names() {
        assert_eq!("finite-scale".parse::<Suite>().unwrap(), Suite::FiniteScale);
        assert!("bogus".parse::<Suite>().is_err());
    }
}
