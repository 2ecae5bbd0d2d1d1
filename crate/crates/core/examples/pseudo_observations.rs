//! Ranks and pseudo-observations of a small sample, including a tie.

use cwm::{pseudo_observations, RankScale, Sample};

fn main() -> cwm::Result<()> {
    let sample = Sample::from_rows(&[
        vec![2.3, -1.0],
        vec![0.7, 4.2],
        vec![5.1, 0.0],
        vec![0.7, 3.3],
    ])?;
    let pseudo = pseudo_observations(&sample);
    println!(
        "n = {}, d = {}, ties = {}",
        pseudo.n(),
        pseudo.d(),
        pseudo.has_ties()
    );
    for i in 0..pseudo.n() {
        println!(
            "row {i}: ranks {:?}  u {:?}",
            [pseudo.rank(i, 0), pseudo.rank(i, 1)],
            pseudo.row_u(i)
        );
    }
    let shifted = pseudo.with_scale(RankScale::ByNPlusOne);
    println!("R/(n+1) first row: {:?}", shifted.row_u(0));
    Ok(())
}
