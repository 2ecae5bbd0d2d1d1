//! Simulated critical values of the statistic under independence.
//!
//! The limit law of `W_n` has no usable closed form. It is approximated by
//! the exact null distribution of `W_n` at a large sample size `n_approx`:
//! each draw is a fresh i.i.d. Uniform(0,1)^d sample of that size, and the
//! critical value at level `alpha` is the `ceil((1 - alpha) * draws)`-th
//! order statistic of the simulated values.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copulas::{CopulaModel, Margins};
use crate::error::{Error, Result};
use crate::ranks::{pseudo_observations, RankScale, Sample};
use crate::rng::stream_rng;
use crate::statistic::MultiKernel;
use crate::weights::WeightFamily;

pub const DEFAULT_ALPHAS: [f64; 4] = [0.15, 0.10, 0.05, 0.01];
pub const DEFAULT_DRAWS: usize = 20_000;
pub const DEFAULT_N_APPROX: usize = 500;
pub const MIN_DRAWS: usize = 1000;
pub const MIN_N_APPROX: usize = 100;

pub const CSV_HEADER: [&str; 7] = [
    "family",
    "d",
    "alpha",
    "critical_value",
    "n_approx",
    "draws",
    "seed",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalValueEntry {
    /// Weight family label, as accepted by [`WeightFamily::parse`].
    pub family: String,
    pub d: usize,
    pub alpha: f64,
    pub critical_value: f64,
    pub n_approx: usize,
    pub draws: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CriticalValueTable {
    pub entries: Vec<CriticalValueEntry>,
}

impl CriticalValueTable {
    pub fn alphas(&self) -> Vec<f64> {
        let mut a: Vec<f64> = Vec::new();
        for e in &self.entries {
            if !a.contains(&e.alpha) {
                a.push(e.alpha);
            }
        }
        a
    }

    pub fn lookup(&self, family: &str, d: usize, alpha: f64) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.family == family && e.d == d && e.alpha == alpha)
            .map(|e| e.critical_value)
    }

    pub fn extend(&mut self, other: CriticalValueTable) {
        self.entries.extend(other.entries);
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(CSV_HEADER)?;
        for e in &self.entries {
            wr.write_record([
                e.family.clone(),
                e.d.to_string(),
                e.alpha.to_string(),
                e.critical_value.to_string(),
                e.n_approx.to_string(),
                e.draws.to_string(),
                e.seed.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
        if header != CSV_HEADER {
            return Err(Error::Parse(format!("unexpected header {header:?}")));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number '{s}'")))
        };
        let parse_u = |s: &str| -> Result<u64> {
            s.parse::<u64>()
                .map_err(|_| Error::Parse(format!("bad integer '{s}'")))
        };
        let mut entries = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            if rec.len() != CSV_HEADER.len() {
                return Err(Error::Parse(format!("row with {} fields", rec.len())));
            }
            entries.push(CriticalValueEntry {
                family: rec[0].to_string(),
                d: parse_u(&rec[1])? as usize,
                alpha: parse(&rec[2])?,
                critical_value: parse(&rec[3])?,
                n_approx: parse_u(&rec[4])? as usize,
                draws: parse_u(&rec[5])? as usize,
                seed: parse_u(&rec[6])?,
            });
        }
        Ok(Self { entries })
    }
}

/// 1-based order statistic used for the `(1 - alpha)` quantile.
pub fn quantile_rank(alpha: f64, draws: usize) -> usize {
    let k = ((1.0 - alpha) * draws as f64 - 1e-9).ceil() as usize;
    k.clamp(1, draws)
}

/// Upper `alpha` critical value from simulated statistics sorted ascending.
pub fn upper_quantile(sorted: &[f64], alpha: f64) -> f64 {
    sorted[quantile_rank(alpha, sorted.len()) - 1]
}

fn validate(alphas: &[f64], draws: usize, n_approx: usize) -> Result<()> {
    if alphas.is_empty() {
        return Err(Error::InvalidParameter("no alpha levels".into()));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(Error::InvalidParameter(format!("alpha {a} not in (0, 1)")));
    }
    if draws < MIN_DRAWS {
        return Err(Error::InvalidParameter(format!(
            "draws {draws} < {MIN_DRAWS}"
        )));
    }
    if n_approx < MIN_N_APPROX {
        return Err(Error::InvalidParameter(format!(
            "n_approx {n_approx} < {MIN_N_APPROX}"
        )));
    }
    Ok(())
}

/// Simulated null statistics, one vector per family, in draw order.
///
/// Draw `i` uses the random stream `(seed, i)` and the same uniform sample
/// is shared by all families.
pub fn simulate_null(
    families: &[WeightFamily],
    n: usize,
    draws: usize,
    seed: u64,
    scale: RankScale,
) -> Result<Vec<Vec<f64>>> {
    let kernel = MultiKernel::with_scale(families, n, scale)?;
    let d = kernel.d();
    let per_draw: Vec<Vec<f64>> = (0..draws)
        .into_par_iter()
        .map_init(Vec::new, |buf, i| -> Result<Vec<f64>> {
            let mut rng = stream_rng(seed, &[i as u64]);
            CopulaModel::Independence.sample_dim_into(n, d, Margins::Uniform, &mut rng, buf)?;
            let sample = Sample::from_row_major(std::mem::take(buf), n, d)?;
            let pseudo = pseudo_observations(&sample);
            kernel.evaluate(pseudo.ranks())
        })
        .collect::<Result<_>>()?;
    Ok((0..families.len())
        .map(|f| per_draw.iter().map(|v| v[f]).collect())
        .collect())
}

/// Critical values for several families from one set of simulated samples.
#[allow(clippy::too_many_arguments)]
pub fn tabulate_many(
    families: &[WeightFamily],
    d: usize,
    alphas: &[f64],
    draws: usize,
    n_approx: usize,
    seed: u64,
    scale: RankScale,
) -> Result<CriticalValueTable> {
    validate(alphas, draws, n_approx)?;
    let families = families
        .iter()
        .map(|f| f.with_dim(d))
        .collect::<Result<Vec<_>>>()?;
    let sims = simulate_null(&families, n_approx, draws, seed, scale)?;
    let mut entries = Vec::new();
    for (fam, mut values) in families.iter().zip(sims) {
        values.sort_by(f64::total_cmp);
        for &alpha in alphas {
            entries.push(CriticalValueEntry {
                family: fam.label(),
                d,
                alpha,
                critical_value: upper_quantile(&values, alpha),
                n_approx,
                draws,
                seed,
            });
        }
    }
    Ok(CriticalValueTable { entries })
}

pub fn tabulate_critical_values(
    family: &WeightFamily,
    d: usize,
    alphas: &[f64],
    draws: usize,
    n_approx: usize,
    seed: u64,
) -> Result<CriticalValueTable> {
    tabulate_many(
        std::slice::from_ref(family),
        d,
        alphas,
        draws,
        n_approx,
        seed,
        RankScale::ByN,
    )
}
