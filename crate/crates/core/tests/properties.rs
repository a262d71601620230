//! Cross-module invariants as property tests.

use bowen_mdim::bowen::{self, Caps, Mode};
use bowen_mdim::caratheodory::{Instance, InstanceOptions, Structure};
use bowen_mdim::config::ExperimentConfig;
use bowen_mdim::entropy::{self, MassPool, PsOptions};
use bowen_mdim::measure::MeasureModel;
use bowen_mdim::pressure::{self, InducedWitness, PressureOptions, Witness};
use bowen_mdim::runner::{self, Command, EntropyQuantity};
use bowen_mdim::systems::PotentialSpec;
use bowen_mdim::{PointWindow, Potential, SystemModel};
use proptest::prelude::*;

fn word(sys: &SystemModel, w: &[u16]) -> PointWindow {
    sys.point_from_word(w).unwrap()
}

fn binary() -> SystemModel {
    SystemModel::full_shift(2).build().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_triangle(a in prop::collection::vec(0u16..2, 4), b in prop::collection::vec(0u16..2, 4), c in prop::collection::vec(0u16..2, 4)) {
        let s = binary();
        let (x, y, z) = (word(&s, &a), word(&s, &b), word(&s, &c));
        let d = |p: &PointWindow, q: &PointWindow| s.metric(p, q).unwrap();
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-12);
        prop_assert_eq!(d(&x, &y), d(&y, &x));
    }

    #[test]
    fn metric_ignores_shared_tails(head in prop::collection::vec(0u16..3, 3), other in prop::collection::vec(0u16..3, 3), tail in prop::collection::vec(0u16..3, 4)) {
        let s = SystemModel::grid_shift(3).build().unwrap();
        let x = word(&s, &[head.clone(), tail.clone()].concat());
        let y = word(&s, &[other.clone(), tail.clone()].concat());
        let mut rev = tail.clone();
        rev.reverse();
        let x2 = word(&s, &[head, rev.clone()].concat());
        let y2 = word(&s, &[other, rev].concat());
        prop_assert_eq!(s.metric(&x, &y).unwrap(), s.metric(&x2, &y2).unwrap());
    }

    #[test]
    fn birkhoff_additive(w in prop::collection::vec(0u16..3, 8), vals in prop::collection::vec(-2.0f64..2.0, 3), n in 1usize..4, m in 1usize..4) {
        let s = SystemModel::grid_shift(3).build().unwrap();
        let phi = Potential::coordinate(vals);
        let x = word(&s, &w);
        let whole = s.birkhoff_sum(&phi, &x, n + m).unwrap();
        let split = s.birkhoff_sum(&phi, &x, n).unwrap() + s.birkhoff_sum(&phi, &s.iterate_map(&x, n), m).unwrap();
        prop_assert!((whole - split).abs() < 1e-12);
    }

    #[test]
    fn separated_counts_monotone(mask in 1u32..(1 << 16), n in 1usize..4, e1 in 0.05f64..1.5, e2 in 0.05f64..1.5) {
        let s = binary();
        let all = s.enumerate_points(4).unwrap();
        let z: Vec<_> = all.into_iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, p)| p).collect();
        let (lo, hi) = (e1.min(e2), e1.max(e2));
        let count = |n, eps| bowen::max_separated(&s, &z, n, eps, Mode::Exact, Caps::default()).unwrap().indices.len();
        prop_assert!(count(n, hi) <= count(n, lo));
        prop_assert!(count(n, lo) <= count(n + 1, lo));
        let greedy = bowen::max_separated(&s, &z, n, lo, Mode::Greedy, Caps::default()).unwrap();
        let centers: Vec<_> = greedy.indices.iter().map(|&i| z[i].clone()).collect();
        prop_assert!(bowen::is_spanning(&s, &z, &centers, n, lo));
        prop_assert!(bowen::is_separated(&s, &centers, n, lo));
    }

    #[test]
    fn cover_monotone_in_subsets(mask in 1u32..256, extra in 1u32..256, lambda in 0.1f64..3.0, eps in 0.2f64..1.0) {
        let s = binary();
        let all = s.enumerate_points(3).unwrap();
        let pick = |m: u32| -> Vec<PointWindow> { all.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, p)| p.clone()).collect() };
        let (small, big) = (pick(mask), pick(mask | extra));
        let zero = Potential::constant(0.0);
        // Both sets choose from the same candidate balls.
        let value = |z: &[PointWindow]| {
            let opts = InstanceOptions { extra_centers: big.clone(), ..InstanceOptions::new(1, 2, eps) };
            Instance::new(&s, z, &zero, opts).unwrap().value(Structure::Cover, lambda).unwrap().log_value
        };
        prop_assert!(value(&small) <= value(&big) + 1e-12);
    }

    #[test]
    fn union_critical_sandwich(m1 in 1u32..256, m2 in 1u32..256, eps in 0.2f64..1.0) {
        let s = binary();
        let all = s.enumerate_points(3).unwrap();
        let pick = |m: u32| -> Vec<PointWindow> { all.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, p)| p.clone()).collect() };
        let union = pick(m1 | m2);
        let inst = |z: &[PointWindow]| {
            let opts = InstanceOptions { extra_centers: union.clone(), ..InstanceOptions::new(1, 2, eps) };
            Instance::new(&s, z, &Potential::constant(0.0), opts).unwrap()
        };
        let (a, b, u) = (inst(&pick(m1)), inst(&pick(m2)), inst(&union));
        let tol = 1e-7;
        let cu = u.critical(Structure::Cover, tol).unwrap();
        for part in [&a, &b] {
            prop_assert!(part.critical(Structure::Cover, tol).unwrap().lambda <= cu.lambda + tol);
        }
        let at = |i: &Instance| i.value(Structure::Cover, cu.bracket.0).unwrap().log_value.exp();
        prop_assert!(at(&a) + at(&b) >= cu.threshold * (1.0 - 1e-9) || cu.bracket.0 <= 0.0);
    }

    #[test]
    fn induced_pressure_is_finite(t in 1.0f64..4.0, offset in 0.6f64..2.0) {
        let s = SystemModel::grid_shift(3).build().unwrap();
        let opts = PressureOptions::with_witness(Witness::Greedy);
        let phi = Potential::coordinate(vec![-1.0, 0.0, 2.0]);
        let psi = PotentialSpec::Affine { offset, slope: 1.0 }.at(&s).unwrap();
        for w in [InducedWitness::Separated, InducedWitness::Spanning] {
            let r = pressure::induced_record(&s, &phi, &psi, t, 1.0 / 3.0, w, &opts).unwrap();
            // S_T is empty only when one step already overshoots T.
            prop_assert!(t < psi.max() || !r.levels.is_empty());
            if !r.levels.is_empty() {
                prop_assert!(r.log_value.is_finite());
                prop_assert!(r.levels.iter().all(|c| c.log_sum <= r.log_value + 1e-12));
            }
        }
    }

    #[test]
    fn critical_brackets_threshold(mask in 1u32..256, eps in 0.2f64..1.0) {
        let s = binary();
        let z: Vec<_> = s.enumerate_points(3).unwrap().into_iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, p)| p).collect();
        let inst = Instance::new(&s, &z, &Potential::constant(1.0), InstanceOptions::new(1, 2, eps)).unwrap();
        for st in [Structure::Cover, Structure::Bs] {
            let c = inst.critical(st, 1e-7).unwrap();
            prop_assert!(c.bracket.1 - c.bracket.0 <= 1e-7);
            let at = |l: f64| inst.value(st, l).unwrap().log_value;
            prop_assert!(at(c.bracket.0) >= c.threshold.ln() - 1e-9 || c.bracket.0 <= 0.0);
            prop_assert!(at(c.bracket.1) <= c.threshold.ln() + 1e-9);
        }
    }

    #[test]
    fn katok_counts_monotone(seed in 0u64..500, n in 1usize..4, e1 in 0.1f64..1.0, e2 in 0.1f64..1.0, d1 in 0.05f64..0.95, d2 in 0.05f64..0.95) {
        let s = SystemModel::full_shift(2).window(16).build().unwrap();
        let mu = MeasureModel::bernoulli(&s, vec![0.3, 0.7], seed).unwrap();
        let points = mu.sample(30, 1).unwrap();
        let pool = MassPool { weights: vec![1.0 / 30.0; 30], points: points.clone(), exact: true };
        let (elo, ehi) = (e1.min(e2), e1.max(e2));
        let (dlo, dhi) = (d1.min(d2), d1.max(d2));
        let r = |n, eps, delta| entropy::katok_rn(&s, &pool, &points, n, eps, delta, Caps::default()).unwrap().count;
        prop_assert!(r(n, ehi, dlo) <= r(n, elo, dlo));
        prop_assert!(r(n, elo, dhi) <= r(n, elo, dlo));
        prop_assert!(r(n, elo, dlo) <= r(n + 1, elo, dlo));
    }

    #[test]
    fn near_points_shrink_with_radius(seed in 0u64..100, n in 2usize..6, a in 0.05f64..0.6, b in 0.05f64..0.6) {
        let s = SystemModel::full_shift(2).window(16).build().unwrap();
        let mu = MeasureModel::bernoulli(&s, vec![0.4, 0.6], seed).unwrap();
        let opts = PsOptions::new(&s, vec![a, b], 2);
        let (lo, hi) = (a.min(b), a.max(b));
        let narrow = entropy::near_measure_points(&mu, n, lo, &opts).unwrap();
        let wide = entropy::near_measure_points(&mu, n, hi, &opts).unwrap();
        prop_assert!(narrow.iter().all(|p| wide.contains(p)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn runs_are_reproducible_and_annotated(seed in 0u64..1000, p in 0.2f64..0.8) {
        let text = format!(
            "seed = {seed}\n[system]\nkind = full\nk = 2\nwindow = 16\n[measure]\nkind = bernoulli\np = {p}, {}\n[schedule]\neps = 0.6\nn = 2, 4, 6\ndelta = 0.5\n[entropy]\nx_samples = 4\nmass_samples = 1000\npool = 300\n",
            1.0 - p
        );
        let cfg = ExperimentConfig::parse(&text, None).unwrap();
        prop_assert_eq!(&cfg.hash, &ExperimentConfig::parse(&text, None).unwrap().hash);
        for q in [EntropyQuantity::Bk, EntropyQuantity::Katok] {
            let cmd = Command::Entropy { quantity: q };
            let a = runner::run(&cmd, Some(&cfg), None).unwrap();
            let b = runner::run(&cmd, Some(&cfg), None).unwrap();
            let lines = |o: &runner::RunOutput| o.records.iter().map(|r| r.to_line(false)).collect::<Vec<_>>();
            prop_assert_eq!(lines(&a), lines(&b));
            for r in &a.records {
                prop_assert_eq!(&r.config_hash, &cfg.hash);
                prop_assert!(r.ci.is_some() || r.exact.is_some(), "{} carries neither CI nor exactness", r.quantity);
            }
        }
    }
}
