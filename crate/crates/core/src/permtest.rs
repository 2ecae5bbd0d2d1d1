//! Permutation test of independence.
//!
//! Each replicate permutes every column of the pseudo-observations
//! independently and recomputes the statistic. Ranks are equivariant under
//! row permutations, so permuting the rank columns is the same as ranking
//! the permuted raw data. The p-value is
//!
//! ```text
//! p = (1/2 + #{k : W_k >= W_0}) / (N + 1)
//! ```

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranks::{pseudo_observations, PseudoObservations, Sample};
use crate::rng::stream_rng;
use crate::statistic::MultiKernel;
use crate::weights::{WeightFamily, WeightKind};

/// Smallest number of permutations accepted.
pub const MIN_PERMUTATIONS: usize = 19;

/// Relative slack under which a permuted statistic counts as a tie with the
/// observed one. Equal statistics computed from rows in a different order
/// can differ in the last bits.
pub const TIE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub alpha: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_permutations: usize,
    pub seed: u64,
    pub kind: WeightKind,
    pub weight: String,
    pub n: usize,
    pub d: usize,
    pub decision_at: Option<Decision>,
}

impl TestResult {
    /// Attaches the decision at level `alpha`.
    pub fn with_decision(mut self, alpha: f64) -> Result<Self> {
        let reject = reject(&self, alpha)?;
        self.decision_at = Some(Decision { alpha, reject });
        Ok(self)
    }
}

/// `(1/2 + exceedances) / (N + 1)`.
pub fn p_value(exceedances: usize, n_permutations: usize) -> f64 {
    (0.5 + exceedances as f64) / (n_permutations as f64 + 1.0)
}

#[inline]
pub(crate) fn exceeds(permuted: f64, observed: f64) -> bool {
    permuted >= observed - TIE_TOLERANCE * observed.abs()
}

/// Writes into `out` the ranks with every column permuted independently.
pub(crate) fn permute_columns<R: rand::Rng + ?Sized>(
    pseudo: &PseudoObservations,
    rng: &mut R,
    idx: &mut Vec<usize>,
    out: &mut [u32],
) {
    let (n, d) = (pseudo.n(), pseudo.d());
    let ranks = pseudo.ranks();
    for j in 0..d {
        idx.clear();
        idx.extend(0..n);
        idx.shuffle(rng);
        for (i, &src) in idx.iter().enumerate() {
            out[i * d + j] = ranks[src * d + j];
        }
    }
}

/// Exceedance counts per family of the kernel, for `n_permutations`
/// replicates whose random streams are `(seed, stream_prefix.., k)`.
///
/// The same permutations serve every family. With `parallel` the
/// replicates run on the rayon pool; counts do not depend on scheduling.
pub fn exceedance_counts(
    pseudo: &PseudoObservations,
    kernel: &MultiKernel,
    observed: &[f64],
    n_permutations: usize,
    seed: u64,
    stream_prefix: &[u64],
    parallel: bool,
) -> Result<Vec<usize>> {
    let m = kernel.len();
    let one = |k: usize, scratch: &mut (Vec<usize>, Vec<u32>, Vec<f64>)| -> Result<Vec<bool>> {
        let mut path = stream_prefix.to_vec();
        path.push(k as u64);
        let mut rng = stream_rng(seed, &path);
        let (idx, buf, stats) = scratch;
        permute_columns(pseudo, &mut rng, idx, buf);
        kernel.evaluate_into(buf, stats)?;
        Ok(stats
            .iter()
            .zip(observed)
            .map(|(&w, &w0)| exceeds(w, w0))
            .collect())
    };
    let new_scratch = || {
        (
            Vec::with_capacity(pseudo.n()),
            vec![0u32; pseudo.n() * pseudo.d()],
            vec![0.0; m],
        )
    };
    let add = |mut a: Vec<usize>, b: Vec<bool>| {
        for (x, y) in a.iter_mut().zip(b) {
            *x += y as usize;
        }
        a
    };
    if parallel {
        (0..n_permutations)
            .into_par_iter()
            .map_init(new_scratch, |s, k| one(k, s))
            .try_fold(|| vec![0usize; m], |acc, r| r.map(|b| add(acc, b)))
            .try_reduce(
                || vec![0usize; m],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    Ok(a)
                },
            )
    } else {
        let mut s = new_scratch();
        let mut acc = vec![0usize; m];
        for k in 0..n_permutations {
            acc = add(acc, one(k, &mut s)?);
        }
        Ok(acc)
    }
}

/// Permutation test of independence for one weight family.
pub fn permutation_test(
    sample: &Sample,
    family: &WeightFamily,
    n_permutations: usize,
    seed: u64,
) -> Result<TestResult> {
    let pseudo = pseudo_observations(sample);
    permutation_test_ranks(&pseudo, family, n_permutations, seed)
}

/// Same as [`permutation_test`], starting from pseudo-observations.
pub fn permutation_test_ranks(
    pseudo: &PseudoObservations,
    family: &WeightFamily,
    n_permutations: usize,
    seed: u64,
) -> Result<TestResult> {
    if n_permutations < MIN_PERMUTATIONS {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_PERMUTATIONS} permutations, got {n_permutations}"
        )));
    }
    if family.d() != pseudo.d() {
        return Err(Error::DimensionMismatch {
            expected: pseudo.d(),
            found: family.d(),
        });
    }
    let kernel = MultiKernel::with_scale(std::slice::from_ref(family), pseudo.n(), pseudo.scale())?;
    let observed = kernel.evaluate(pseudo.ranks())?;
    let counts = exceedance_counts(pseudo, &kernel, &observed, n_permutations, seed, &[], true)?;
    Ok(TestResult {
        statistic: observed[0],
        p_value: p_value(counts[0], n_permutations),
        n_permutations,
        seed,
        kind: family.kind(),
        weight: family.label(),
        n: pseudo.n(),
        d: pseudo.d(),
        decision_at: None,
    })
}

/// Rejects independence when `p <= alpha`.
pub fn reject(result: &TestResult, alpha: f64) -> Result<bool> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha {alpha} not in (0, 1)"
        )));
    }
    Ok(result.p_value <= alpha)
}
