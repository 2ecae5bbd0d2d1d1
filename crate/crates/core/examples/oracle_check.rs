//! Closed form against brute-force integration of the definition, d = 2 and 3.

use cwm::copulas::{sample_copula_with, CopulaModel, Margins};
use cwm::{compute_statistic, oracle_statistic, pseudo_observations, OracleConfig, WeightFamily};

fn main() -> cwm::Result<()> {
    let model = CopulaModel::gaussian(0.5)?;
    for (d, cfg) in [(2, OracleConfig::exact()), (3, OracleConfig::grid(128)?)] {
        let sample = sample_copula_with(&model, 12, d, Margins::Uniform, 3)?;
        let pseudo = pseudo_observations(&sample);
        for spec in ["uniform", "median", "tails", "upper", "lower"] {
            let fam = WeightFamily::parse(spec, d)?;
            let closed = compute_statistic(&pseudo, &fam)?.value;
            let brute = oracle_statistic(&pseudo, &fam, &cfg)?;
            println!(
                "d={d} {spec:<7} closed {closed:.12e} oracle {brute:.12e} rel {:.1e}",
                ((closed - brute) / brute).abs()
            );
        }
    }
    Ok(())
}
