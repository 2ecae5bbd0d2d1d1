//! Moment maps of each weight family, checked against numerical integration.

use cwm::quad::integrate;
use cwm::{mu1, mu2, mu3, weight_value, WeightFamily, WeightKind};

fn main() -> cwm::Result<()> {
    let a = [0.3, 0.6];
    let mut families: Vec<WeightFamily> = WeightKind::NAMED
        .iter()
        .map(|&k| WeightFamily::new(k, 2))
        .collect::<cwm::Result<_>>()?;
    families.push(WeightFamily::deheuvels(vec![0.5, 1.5])?);

    println!(
        "{:<22} {:>12} {:>12} {:>12}",
        "family", "mu1(a)", "mu2(a)", "mu3"
    );
    for fam in &families {
        println!(
            "{:<22} {:>12.6e} {:>12.6e} {:>12.6e}",
            fam.label(),
            mu1(fam, &a)?,
            mu2(fam, &a)?,
            mu3(fam)
        );
    }

    // mu1 along the diagonal by brute-force double integration
    let fam = WeightFamily::new(WeightKind::SymmetricTail, 2)?;
    let inner = |x: f64| {
        integrate(
            |y| weight_value(&fam, &[x, y]).unwrap(),
            a[1],
            1.0,
            1e-12,
            1e-12,
        )
    };
    let brute = integrate(inner, a[0], 1.0, 1e-12, 1e-12);
    println!(
        "tails mu1 closed form {:.12e}, quadrature {:.12e}",
        mu1(&fam, &a)?,
        brute
    );
    Ok(())
}
