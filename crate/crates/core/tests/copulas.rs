use cwm::copulas::{
    copula_cdf, sample_copula, sample_copula_with, tail_dependence, CopulaModel, Margins,
};
use cwm::{pseudo_observations, Sample};

/// Kolmogorov-Smirnov distance of a sample to Uniform(0, 1).
fn ks_uniform(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
        .fold(0.0, f64::max)
}

fn models() -> Vec<CopulaModel> {
    vec![
        CopulaModel::Independence,
        CopulaModel::gaussian(0.6).unwrap(),
        CopulaModel::student_t(0.4, 0.5).unwrap(),
        CopulaModel::gumbel(2.0).unwrap(),
        CopulaModel::clayton(3.0).unwrap(),
        CopulaModel::frank(-5.0).unwrap(),
    ]
}

fn spearman(s: &Sample) -> f64 {
    let p = pseudo_observations(s);
    let n = p.n() as f64;
    let mean = (n + 1.0) / 2.0;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for i in 0..p.n() {
        let (a, b) = (p.rank(i, 0) as f64 - mean, p.rank(i, 1) as f64 - mean);
        sxy += a * b;
        sxx += a * a;
    }
    sxy / sxx
}

#[test]
fn margins_are_uniform() {
    let crit = 1.63 / (20_000f64).sqrt();
    for m in models() {
        let s = sample_copula(&m, 20_000, 3).unwrap();
        for j in 0..2 {
            let ks = ks_uniform(s.column(j));
            assert!(ks < crit, "{m:?} margin {j}: KS {ks}");
        }
    }
}

#[test]
fn gaussian_spearman_rho() {
    let s = sample_copula(&CopulaModel::gaussian(0.8).unwrap(), 40_000, 5).unwrap();
    let rho = spearman(&s);
    assert!((rho - 0.7859).abs() < 0.01, "{rho}");
}

#[test]
fn clayton_lower_tail_concentration() {
    let m = CopulaModel::clayton(2.0).unwrap();
    let (lower, upper) = tail_dependence(&m).unwrap();
    assert!((lower - 2f64.powf(-0.5)).abs() < 1e-12 && upper == 0.0);
    let s = sample_copula(&m, 200_000, 8).unwrap();
    let q = 0.01;
    let joint = (0..s.n())
        .filter(|&i| s.get(i, 0) <= q && s.get(i, 1) <= q)
        .count() as f64;
    let cond = joint / (q * s.n() as f64);
    assert!(
        (cond - copula_cdf(&m, [q, q]).unwrap() / q).abs() < 0.05,
        "{cond}"
    );
    assert!(cond > 0.6, "{cond}");
}

#[test]
fn frechet_bounds_and_two_increasing() {
    let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    for m in models() {
        let c = |u: f64, v: f64| copula_cdf(&m, [u, v]).unwrap();
        for &u in &grid {
            for &v in &grid {
                let x = c(u, v);
                assert!(
                    x >= (u + v - 1.0).max(0.0) - 1e-9 && x <= u.min(v) + 1e-9,
                    "{m:?} {u} {v}"
                );
            }
        }
        for w in grid.windows(2) {
            for z in grid.windows(2) {
                let vol = c(w[1], z[1]) - c(w[0], z[1]) - c(w[1], z[0]) + c(w[0], z[0]);
                assert!(vol >= -1e-8, "{m:?} rectangle {w:?}x{z:?}: {vol}");
            }
        }
        assert!((c(0.37, 1.0) - 0.37).abs() < 1e-9 && (c(1.0, 0.61) - 0.61).abs() < 1e-9);
    }
}

#[test]
fn sampler_agrees_with_cdf() {
    let pts = [[0.2, 0.3], [0.5, 0.5], [0.9, 0.4], [0.7, 0.8]];
    for m in models() {
        let s = sample_copula(&m, 50_000, 21).unwrap();
        for pt in pts {
            let emp = (0..s.n())
                .filter(|&i| s.get(i, 0) <= pt[0] && s.get(i, 1) <= pt[1])
                .count() as f64
                / s.n() as f64;
            let c = copula_cdf(&m, pt).unwrap();
            let se = (c * (1.0 - c) / s.n() as f64).sqrt();
            assert!(
                (emp - c).abs() < 4.5 * se + 1e-4,
                "{m:?} {pt:?}: {emp} vs {c}"
            );
        }
    }
}

#[test]
fn latent_margins_keep_ranks() {
    for m in models() {
        let a = sample_copula_with(&m, 500, 2, Margins::Uniform, 13).unwrap();
        let b = sample_copula_with(&m, 500, 2, Margins::Latent, 13).unwrap();
        let c = sample_copula_with(&m, 500, 2, Margins::StandardNormal, 13).unwrap();
        let pa = pseudo_observations(&a);
        assert_eq!(pa.ranks(), pseudo_observations(&b).ranks(), "{m:?}");
        assert_eq!(pa.ranks(), pseudo_observations(&c).ranks(), "{m:?}");
    }
}

#[test]
fn higher_dimensional_draws_have_uniform_margins() {
    let m = CopulaModel::gaussian(0.5).unwrap();
    let s = sample_copula_with(&m, 20_000, 3, Margins::Uniform, 2).unwrap();
    for j in 0..3 {
        assert!(ks_uniform(s.column(j)) < 1.63 / (20_000f64).sqrt());
    }
}
