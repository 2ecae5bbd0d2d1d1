//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria that check the implementation itself (1, 2, 3, 8) make the
//! target fail. Criteria that compare Monte-Carlo output with fixed
//! reference values (4 to 7) only report.

use std::time::Instant;

use cwm::cli::{validate, validation_tolerance, ValidateArgs};
use cwm::copulas::{copula_cdf, sample_copula, CopulaModel, GridParam};
use cwm::nulldist::tabulate_many;
use cwm::permtest::p_value;
use cwm::power::{named_families, reference_panels, PowerSummary};
use cwm::rng::stream_rng;
use cwm::{
    compute_statistic, mu3, permutation_test, power_summary, pseudo_observations, run_power_study,
    PowerCurve, PowerStudyConfig, RankScale, Sample, WeightFamily, WeightKind,
};
use rand::Rng;

struct Report {
    failed_hard: Vec<usize>,
    failed_soft: Vec<usize>,
}

impl Report {
    fn line(&mut self, id: usize, pass: bool, hard: bool, msg: &str) {
        println!(
            "{} criterion {id}: {msg}",
            if pass { "PASS" } else { "FAIL" }
        );
        if !pass {
            if hard {
                self.failed_hard.push(id);
            } else {
                self.failed_soft.push(id);
            }
        }
    }
}

fn info(msg: &str) {
    println!("     {msg}");
}

fn family(kind: WeightKind) -> WeightFamily {
    WeightFamily::new(kind, 2).unwrap()
}

fn oracle_equivalence(r: &mut Report) {
    let start = Instant::now();
    let mut ok = true;
    for d in [2, 3] {
        let args = ValidateArgs {
            cases: 100,
            seed: 2024,
            n: None,
            d,
            grid: 256,
            scale: RankScale::ByN,
            inject_mu2_error: None,
        };
        let tol = validation_tolerance(d);
        let report = validate(&args).unwrap();
        let worst = report.iter().map(|x| x.1).fold(0.0, f64::max);
        ok &= worst <= tol;
        info(&format!(
            "d={d}: max rel. error {worst:.2e} over 100 samples x 6 families (tol {tol:.0e})"
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    r.line(
        1,
        ok && secs < 120.0,
        true,
        &format!("closed form vs integration oracle, {secs:.0} s"),
    );
}

fn fixed_points(r: &mut Report) {
    let printed = [
        (WeightKind::Uniform, 1.0 / 9.0),
        (WeightKind::Median, 1.0 / 400.0),
        (WeightKind::SymmetricTail, 1.0 / 900.0),
        (WeightKind::UpperTail, 1.0 / 25.0),
        (WeightKind::LowerTail, 1.0 / 900.0),
    ];
    let one = pseudo_observations(&Sample::from_rows(&[vec![0.3, 0.8]]).unwrap());
    let mut worst: f64 = 0.0;
    for (kind, value) in printed {
        let f = family(kind);
        let w = compute_statistic(&one, &f).unwrap().value;
        worst = worst.max((w - value).abs()).max((mu3(&f) - value).abs());
    }
    let two = pseudo_observations(&Sample::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap());
    let w2 = compute_statistic(&two, &family(WeightKind::Uniform))
        .unwrap()
        .value;
    let err2 = (w2 - 19.0 / 288.0).abs();
    r.line(
        2,
        worst <= 1e-12 && err2 <= 1e-12,
        true,
        &format!("n=1 equals mu3 (max err {worst:.1e}); n=2 comonotone {w2:.15} vs 19/288 (err {err2:.1e})"),
    );
}

fn reductions(r: &mut Report) {
    let mut rng = stream_rng(77, &[]);
    let (u, up) = (family(WeightKind::Uniform), family(WeightKind::UpperTail));
    let (d0, d1) = (
        WeightFamily::deheuvels(vec![0.0, 0.0]).unwrap(),
        WeightFamily::deheuvels(vec![1.0, 1.0]).unwrap(),
    );
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(1..=60);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random(), rng.random()]).collect();
        let p = pseudo_observations(&Sample::from_rows(&rows).unwrap());
        let w = |f: &WeightFamily| compute_statistic(&p, f).unwrap().value;
        worst = worst
            .max((w(&u) - w(&d0)).abs())
            .max((w(&up) - w(&d1)).abs());
    }
    r.line(
        3,
        worst <= 1e-12,
        true,
        &format!("deheuvels beta=0 / beta=1 reductions, max abs diff {worst:.1e}"),
    );
}

const TABLE: [(&str, [f64; 4]); 5] = [
    ("uniform", [4.4256e-2, 5.1237e-2, 6.3702e-2, 9.3922e-2]),
    ("median", [1.8012e-3, 2.1243e-3, 2.7126e-3, 4.1381e-3]),
    ("tails", [1.2065e-4, 1.3402e-4, 1.5649e-4, 2.0912e-4]),
    ("upper", [4.6109e-3, 5.3775e-3, 6.6872e-3, 9.8749e-3]),
    ("lower", [3.8026e-3, 4.4638e-3, 5.6291e-3, 8.4140e-3]),
];
const ALPHAS: [f64; 4] = [0.15, 0.10, 0.05, 0.01];

fn table_errors(n_approx: usize) -> (f64, usize, Vec<String>) {
    let t = tabulate_many(
        &named_families(2),
        2,
        &ALPHAS,
        20_000,
        n_approx,
        1,
        RankScale::ByN,
    )
    .unwrap();
    let mut worst: f64 = 0.0;
    let mut within = 0;
    let mut rows = Vec::new();
    for (fam, printed) in TABLE {
        let mut row = format!("{fam:<8}");
        for (k, &a) in ALPHAS.iter().enumerate() {
            let v = t.lookup(fam, 2, a).unwrap();
            let rel = (v - printed[k]) / printed[k];
            worst = worst.max(rel.abs());
            within += usize::from(rel.abs() <= 0.07);
            row += &format!(" {v:.4e} ({:+.1}%)", 100.0 * rel);
        }
        rows.push(row);
    }
    (worst, within, rows)
}

fn critical_values(r: &mut Report) {
    let start = Instant::now();
    let (worst, within, rows) = table_errors(500);
    for row in rows {
        info(&row);
    }
    r.line(
        4,
        worst <= 0.07,
        false,
        &format!(
            "critical values at n_approx=500, 20000 draws: {within}/20 within 7%, worst {:.1}% ({:.0} s)",
            100.0 * worst,
            start.elapsed().as_secs_f64()
        ),
    );
    let (worst, within, _) = table_errors(150);
    info(&format!(
        "(n_approx=150: {within}/20 within 7%, worst {:.1}%)",
        100.0 * worst
    ));
}

fn size(r: &mut Report) {
    let mut cfg = PowerStudyConfig::new(
        "size",
        CopulaModel::gaussian(0.0).unwrap(),
        GridParam::Primary,
        vec![0.0],
    );
    cfg.replicates = 1000;
    cfg.seed = 5;
    let curve = run_power_study(&cfg).unwrap();
    let rates = &curve.points[0].rates;
    let ok = rates.iter().all(|f| (0.08..=0.12).contains(&f.rate));
    let list: Vec<String> = rates
        .iter()
        .map(|f| format!("{} {:.3}", f.family, f.rate))
        .collect();
    r.line(
        5,
        ok,
        false,
        &format!("size at alpha=0.10, n=50, S=1000: {}", list.join(", ")),
    );
}

struct Spot {
    panel: &'static str,
    param: f64,
    family: &'static str,
    target: f64,
    at_least: bool,
}

const SPOTS: [Spot; 11] = [
    Spot {
        panel: "gaussian",
        param: 0.4,
        family: "uniform",
        target: 0.91,
        at_least: false,
    },
    Spot {
        panel: "clayton",
        param: 1.0,
        family: "lower",
        target: 0.99,
        at_least: false,
    },
    Spot {
        panel: "clayton",
        param: 1.0,
        family: "upper",
        target: 0.85,
        at_least: false,
    },
    Spot {
        panel: "gumbel",
        param: 1.6,
        family: "uniform",
        target: 0.95,
        at_least: true,
    },
    Spot {
        panel: "gumbel",
        param: 1.6,
        family: "median",
        target: 0.95,
        at_least: true,
    },
    Spot {
        panel: "gumbel",
        param: 1.6,
        family: "tails",
        target: 0.95,
        at_least: true,
    },
    Spot {
        panel: "gumbel",
        param: 1.6,
        family: "upper",
        target: 0.95,
        at_least: true,
    },
    Spot {
        panel: "gumbel",
        param: 1.6,
        family: "lower",
        target: 0.95,
        at_least: true,
    },
    Spot {
        panel: "t_rho0",
        param: 0.1,
        family: "tails",
        target: 1.00,
        at_least: false,
    },
    Spot {
        panel: "t_rho0",
        param: 0.1,
        family: "median",
        target: 0.37,
        at_least: false,
    },
    Spot {
        panel: "frank",
        param: 3.0,
        family: "uniform",
        target: 0.97,
        at_least: false,
    },
];

fn panel(name: &str, scale: RankScale) -> PowerStudyConfig {
    let mut cfg = reference_panels()
        .into_iter()
        .find(|p| p.panel == name)
        .unwrap();
    cfg.scale = scale;
    cfg
}

fn spot_curves(scale: RankScale, cache: &[PowerCurve]) -> Vec<(String, PowerCurve)> {
    let mut out = Vec::new();
    for s in &SPOTS {
        let key = format!("{}@{}", s.panel, s.param);
        if out.iter().any(|(k, _)| *k == key) {
            continue;
        }
        if let Some(c) = cache
            .iter()
            .find(|c| c.panel == s.panel && c.rate(s.family, s.param).is_some())
        {
            out.push((key, c.clone()));
            continue;
        }
        let mut cfg = panel(s.panel, scale);
        cfg.grid = vec![s.param];
        out.push((key, run_power_study(&cfg).unwrap()));
    }
    out
}

fn spot_powers(scale: RankScale, cache: &[PowerCurve]) -> (bool, Vec<String>) {
    let curves = spot_curves(scale, cache);
    let mut ok = true;
    let mut lines = Vec::new();
    for s in &SPOTS {
        let key = format!("{}@{}", s.panel, s.param);
        let curve = &curves.iter().find(|(k, _)| *k == key).unwrap().1;
        let fr = curve.rate(s.family, s.param).unwrap();
        let tol = 2.0 * fr.se + 0.02;
        let pass = if s.at_least {
            fr.rate >= s.target - tol
        } else {
            (fr.rate - s.target).abs() <= tol
        };
        ok &= pass;
        lines.push(format!(
            "{} {:<8} {:<4} {:<7} {:.3} vs {}{:.2} (tol {:.3}) {}",
            if pass { "ok  " } else { "miss" },
            s.panel,
            s.param,
            s.family,
            fr.rate,
            if s.at_least { ">=" } else { "" },
            s.target,
            tol,
            scale.label()
        ));
    }
    (ok, lines)
}

fn orderings(r: &mut Report, curves: &[PowerCurve]) {
    let expected = [
        ("gumbel", "upper", "lower", 0.21),
        ("clayton", "lower", "upper", 0.33),
        ("t_rho0", "tails", "median", 0.72),
        ("t_k1", "tails", "median", 0.41),
    ];
    let mut ok = true;
    for (name, best, worst, gap) in expected {
        let curve = curves.iter().find(|c| c.panel == name).unwrap();
        let s = power_summary(curve);
        let got_best = PowerSummary::label(&s.best, s.applicable);
        let got_worst = PowerSummary::label(&s.worst, s.applicable);
        let pass = got_best == best && got_worst == worst && (s.max_gap - gap).abs() <= 0.12;
        ok &= pass;
        info(&format!(
            "{} {name:<8} best {got_best} (want {best}), worst {got_worst} (want {worst}), gap {:.2} (want {gap:.2} +- 0.12)",
            if pass { "ok  " } else { "miss" },
            s.max_gap
        ));
    }
    r.line(
        7,
        ok,
        false,
        "best/worst family and max gap per panel (S=300, N=250, ranks/(n+1))",
    );
}

fn properties(r: &mut Report) {
    let mut failures = Vec::new();
    let mut rng = stream_rng(8, &[]);

    for _ in 0..50 {
        let n = rng.random_range(2..40);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        let s = Sample::from_rows(&rows).unwrap();
        let t = s
            .map_column(0, |x| (3.0 * x).exp())
            .unwrap()
            .map_column(1, |x| x.powi(3) - 9.0)
            .unwrap();
        let (p, q) = (pseudo_observations(&s), pseudo_observations(&t));
        for kind in WeightKind::NAMED {
            let f = family(kind);
            let (a, b) = (
                compute_statistic(&p, &f).unwrap().value,
                compute_statistic(&q, &f).unwrap().value,
            );
            if a != b {
                failures.push("rank invariance");
            }
            if a < 0.0 {
                failures.push("non-negativity");
            }
        }
    }

    for seed in 0..20 {
        let s = sample_copula(&CopulaModel::gumbel(1.2).unwrap(), 25, seed).unwrap();
        let res = permutation_test(&s, &family(WeightKind::Median), 99, seed).unwrap();
        if res.p_value < p_value(0, 99) || res.p_value > p_value(99, 99) {
            failures.push("p-value range");
        }
    }

    let models = [
        CopulaModel::gaussian(0.7).unwrap(),
        CopulaModel::student_t(0.2, 1.0).unwrap(),
        CopulaModel::gumbel(2.5).unwrap(),
        CopulaModel::clayton(1.5).unwrap(),
        CopulaModel::frank(-4.0).unwrap(),
    ];
    for m in &models {
        for i in 0..=8 {
            for j in 0..=8 {
                let (u, v) = (i as f64 / 8.0, j as f64 / 8.0);
                let c = copula_cdf(m, [u, v]).unwrap();
                if c < (u + v - 1.0).max(0.0) - 1e-9 || c > u.min(v) + 1e-9 {
                    failures.push("Frechet-Hoeffding bounds");
                }
            }
        }
        let s = sample_copula(m, 10_000, 4).unwrap();
        for j in 0..2 {
            let mut xs = s.column(j);
            xs.sort_by(f64::total_cmp);
            let n = xs.len() as f64;
            let ks = xs
                .iter()
                .enumerate()
                .map(|(i, &x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
                .fold(0.0, f64::max);
            if ks > 1.63 / n.sqrt() {
                failures.push("marginal uniformity");
            }
        }
    }

    let run = || {
        tabulate_many(&named_families(2), 2, &ALPHAS, 1000, 100, 3, RankScale::ByN)
            .unwrap()
            .to_csv_string()
            .unwrap()
    };
    let pool = |t: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .unwrap()
    };
    if pool(1).install(run) != pool(4).install(run) {
        failures.push("thread-count determinism");
    }

    failures.dedup();
    let msg = if failures.is_empty() {
        "rank invariance, non-negativity, p-value range, Frechet bounds, margins, determinism"
            .to_string()
    } else {
        format!("violated: {}", failures.join(", "))
    };
    r.line(8, failures.is_empty(), true, &msg);
}

fn main() {
    let start = Instant::now();
    let mut r = Report {
        failed_hard: vec![],
        failed_soft: vec![],
    };
    oracle_equivalence(&mut r);
    fixed_points(&mut r);
    reductions(&mut r);
    critical_values(&mut r);
    size(&mut r);

    let curves: Vec<PowerCurve> = ["gumbel", "clayton", "t_rho0", "t_k1"]
        .iter()
        .map(|p| run_power_study(&panel(p, RankScale::ByNPlusOne)).unwrap())
        .collect();
    let (ok, lines) = spot_powers(RankScale::ByNPlusOne, &curves);
    for l in lines {
        info(&l);
    }
    r.line(
        6,
        ok,
        false,
        "spot powers at n=50, S=300, N=250, alpha=0.10, ranks/(n+1)",
    );
    let (ok_n, lines) = spot_powers(RankScale::ByN, &[]);
    for l in lines {
        info(&l);
    }
    info(&format!(
        "(ranks/n: spot powers {})",
        if ok_n {
            "all within tolerance"
        } else {
            "outside tolerance"
        }
    ));
    orderings(&mut r, &curves);
    properties(&mut r);

    println!(
        "acceptance finished in {:.0} s; failing criteria: {:?} (implementation), {:?} (reference reproduction)",
        start.elapsed().as_secs_f64(),
        r.failed_hard,
        r.failed_soft
    );
    if !r.failed_hard.is_empty() {
        std::process::exit(1);
    }
}
