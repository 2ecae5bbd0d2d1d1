//! The weighted statistic for all named families on a dependent sample.

use cwm::copulas::{sample_copula, CopulaModel};
use cwm::{compute_statistic, pseudo_observations, WeightFamily, WeightKind};

fn main() -> cwm::Result<()> {
    let model = CopulaModel::clayton(2.0)?;
    let sample = sample_copula(&model, 200, 7)?;
    let pseudo = pseudo_observations(&sample);
    for &kind in &WeightKind::NAMED {
        let fam = WeightFamily::new(kind, 2)?;
        let w = compute_statistic(&pseudo, &fam)?;
        println!("{:<4} {:.6e}", kind.symbol(), w.value);
    }
    Ok(())
}
