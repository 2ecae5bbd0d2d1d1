//! A small power study over the Clayton parameter and its summary.

use cwm::copulas::{CopulaModel, GridParam};
use cwm::power::PowerSummary;
use cwm::{power_summary, run_power_study, PowerStudyConfig, RankScale};

fn main() -> cwm::Result<()> {
    let mut cfg = PowerStudyConfig::new(
        "clayton",
        CopulaModel::clayton(0.0)?,
        GridParam::Primary,
        vec![0.0, 0.5, 1.0],
    );
    cfg.replicates = 100;
    cfg.permutations = 199;
    cfg.scale = RankScale::ByNPlusOne;
    let curve = run_power_study(&cfg)?;
    print!("{}", curve.to_csv_string()?);
    let s = power_summary(&curve);
    println!(
        "best {}  worst {}  max gap {:.2}",
        PowerSummary::label(&s.best, s.applicable),
        PowerSummary::label(&s.worst, s.applicable),
        s.max_gap
    );
    Ok(())
}
