use cwm::copulas::{sample_copula_with, CopulaModel, Margins};
use cwm::permtest::p_value;
use cwm::quad::integrate;
use cwm::ranks::PseudoObservations;
use cwm::{
    compute_statistic, mu1, mu2, permutation_test, pseudo_observations, weight_value, RankScale,
    Sample, WeightFamily,
};
use proptest::prelude::*;

const FAMILIES: [&str; 6] = [
    "uniform",
    "median",
    "tails",
    "upper",
    "lower",
    "deheuvels:0.3,1.7",
];

fn family(spec: &str, d: usize) -> WeightFamily {
    let spec = if spec.starts_with("deheuvels") && d == 3 {
        "deheuvels:0.3,1.7,0.8"
    } else {
        spec
    };
    WeightFamily::parse(spec, d).unwrap()
}

fn rows(d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-50.0f64..50.0, d), 1..25)
}

fn stat(p: &PseudoObservations, f: &WeightFamily) -> f64 {
    compute_statistic(p, f).unwrap().value
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300) + 1e-300
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn invariant_under_monotone_marginal_maps(data in rows(2), which in 0usize..6) {
        let s = Sample::from_rows(&data).unwrap();
        let t = s.map_column(0, |x| x.exp()).unwrap()
            .map_column(1, |x| x * x * x + 3.0 * x).unwrap();
        let (p, q) = (pseudo_observations(&s), pseudo_observations(&t));
        prop_assert_eq!(p.ranks(), q.ranks());
        let f = family(FAMILIES[which], 2);
        prop_assert_eq!(stat(&p, &f), stat(&q, &f));
    }

    #[test]
    fn equivariant_under_row_order(data in rows(3), shift in 0usize..25, which in 0usize..6) {
        let mut rotated = data.clone();
        let k = shift % rotated.len();
        rotated.rotate_left(k);
        rotated.reverse();
        let f = family(FAMILIES[which], 3);
        let a = stat(&pseudo_observations(&Sample::from_rows(&data).unwrap()), &f);
        let b = stat(&pseudo_observations(&Sample::from_rows(&rotated).unwrap()), &f);
        prop_assert!(close(a, b), "{} vs {}", a, b);
    }

    #[test]
    fn statistic_is_nonnegative(data in rows(2), which in 0usize..6, plus_one in any::<bool>()) {
        let scale = if plus_one { RankScale::ByNPlusOne } else { RankScale::ByN };
        let p = pseudo_observations(&Sample::from_rows(&data).unwrap()).with_scale(scale);
        prop_assert!(stat(&p, &family(FAMILIES[which], 2)) >= 0.0);
    }

    #[test]
    fn ties_do_not_break_nonnegativity(data in prop::collection::vec(prop::collection::vec(0u8..4, 2), 1..30)) {
        let rows: Vec<Vec<f64>> = data.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect();
        let p = pseudo_observations(&Sample::from_rows(&rows).unwrap());
        for spec in FAMILIES {
            prop_assert!(stat(&p, &family(spec, 2)) >= 0.0);
        }
    }

    #[test]
    fn permuted_ranks_match_recomputed_ranks(data in rows(2), shift in 1usize..25) {
        let s = Sample::from_rows(&data).unwrap();
        let n = s.n();
        let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
        let permuted: Vec<Vec<f64>> = (0..n).map(|i| vec![s.get(i, 0), s.get(perm[i], 1)]).collect();
        let p = pseudo_observations(&s);
        let q = pseudo_observations(&Sample::from_rows(&permuted).unwrap());
        for (i, &k) in perm.iter().enumerate() {
            prop_assert_eq!(q.rank(i, 0), p.rank(i, 0));
            prop_assert_eq!(q.rank(i, 1), p.rank(k, 1));
        }
    }

    #[test]
    fn deheuvels_reduces_to_uniform_and_upper(data in rows(2)) {
        let p = pseudo_observations(&Sample::from_rows(&data).unwrap());
        let u = stat(&p, &family("uniform", 2));
        let up = stat(&p, &family("upper", 2));
        let d0 = stat(&p, &WeightFamily::deheuvels(vec![0.0, 0.0]).unwrap());
        let d1 = stat(&p, &WeightFamily::deheuvels(vec![1.0, 1.0]).unwrap());
        prop_assert!((u - d0).abs() <= 1e-12);
        prop_assert!((up - d1).abs() <= 1e-12);
    }

    #[test]
    fn moments_are_monotone_in_the_corner(a in 0.0f64..1.0, b in 0.0f64..1.0, h in 0.0f64..0.2, which in 0usize..6) {
        let f = family(FAMILIES[which], 2);
        let a2 = (a + h).min(1.0);
        prop_assert!(mu1(&f, &[a2, b]).unwrap() <= mu1(&f, &[a, b]).unwrap() + 1e-15);
        prop_assert!(mu2(&f, &[a2, b]).unwrap() <= mu2(&f, &[a, b]).unwrap() + 1e-15);
        prop_assert!(mu1(&f, &[a, b]).unwrap() <= mu1(&f, &[0.0, 0.0]).unwrap() + 1e-15);
        prop_assert!(weight_value(&f, &[a, b]).unwrap() >= 0.0);
    }

    #[test]
    fn p_values_stay_in_range(seed in 0u64..1000, dep in 0.0f64..0.9) {
        let model = CopulaModel::gaussian(dep).unwrap();
        let s = sample_copula_with(&model, 20, 2, Margins::Uniform, seed).unwrap();
        let r = permutation_test(&s, &family("median", 2), 49, seed).unwrap();
        prop_assert!(r.p_value >= p_value(0, 49) && r.p_value <= p_value(49, 49));
        prop_assert!(r.p_value > 0.0 && r.p_value < 1.0);
    }

    #[test]
    fn first_moment_matches_quadrature(a in 0.0f64..1.0, b in 0.0f64..1.0, which in 0usize..6) {
        let f = family(FAMILIES[which], 2);
        let inner = |x: f64| integrate(|y| weight_value(&f, &[x, y]).unwrap(), b, 1.0, 1e-13, 1e-11);
        let q = integrate(inner, a, 1.0, 1e-13, 1e-11);
        let m = mu1(&f, &[a, b]).unwrap();
        prop_assert!((q - m).abs() <= 1e-9 * m.abs().max(1e-6), "{} vs {}", q, m);
    }
}
