use cwm::copulas::{sample_copula, CopulaModel, GridParam};
use cwm::nulldist::tabulate_many;
use cwm::power::named_families;
use cwm::{permutation_test, run_power_study, PowerStudyConfig, RankScale, WeightFamily};

fn with_threads<T: Send>(t: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(t)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn critical_values_do_not_depend_on_threads() {
    let run = || {
        tabulate_many(
            &named_families(2),
            2,
            &[0.1, 0.05],
            1000,
            100,
            9,
            RankScale::ByN,
        )
        .unwrap()
    };
    let a = with_threads(1, run);
    let b = with_threads(3, run);
    assert_eq!(a.to_csv_string().unwrap(), b.to_csv_string().unwrap());
}

#[test]
fn permutation_test_does_not_depend_on_threads() {
    let s = sample_copula(&CopulaModel::gumbel(1.3).unwrap(), 40, 1).unwrap();
    let f = WeightFamily::parse("tails", 2).unwrap();
    let a = with_threads(1, || permutation_test(&s, &f, 299, 4).unwrap());
    let b = with_threads(4, || permutation_test(&s, &f, 299, 4).unwrap());
    assert_eq!(a, b);
}

#[test]
fn power_study_does_not_depend_on_threads() {
    let mut cfg = PowerStudyConfig::new(
        "frank",
        CopulaModel::frank(0.0).unwrap(),
        GridParam::Primary,
        vec![0.0, 2.0],
    );
    cfg.n = 20;
    cfg.replicates = 50;
    cfg.permutations = 99;
    let a = with_threads(1, || run_power_study(&cfg).unwrap());
    let b = with_threads(3, || run_power_study(&cfg).unwrap());
    assert_eq!(a, b);
}

#[test]
fn grid_points_reproduce_on_their_own() {
    let mut cfg = PowerStudyConfig::new(
        "clayton",
        CopulaModel::clayton(0.0).unwrap(),
        GridParam::Primary,
        vec![0.0, 0.5, 1.0],
    );
    cfg.n = 20;
    cfg.replicates = 50;
    cfg.permutations = 99;
    let full = run_power_study(&cfg).unwrap();
    cfg.grid = vec![0.5];
    let single = run_power_study(&cfg).unwrap();
    assert_eq!(full.points[1], single.points[0]);
}
