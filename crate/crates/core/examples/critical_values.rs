//! Simulated critical values under independence for the named families.
//!
//! Small run; the CLI `tabulate` command defaults to 20 000 draws at n = 500.

use cwm::nulldist::tabulate_many;
use cwm::power::named_families;
use cwm::RankScale;

fn main() -> cwm::Result<()> {
    let alphas = [0.15, 0.10, 0.05, 0.01];
    let table = tabulate_many(&named_families(2), 2, &alphas, 2000, 150, 1, RankScale::ByN)?;
    print!("{}", table.to_csv_string()?);
    if let Some(c) = table.lookup("uniform", 2, 0.05) {
        println!("U_n at 5%: {c:.5}");
    }
    Ok(())
}
