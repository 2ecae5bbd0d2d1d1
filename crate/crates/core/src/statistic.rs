//! The weighted Cramér-von Mises statistic in closed form.
//!
//! ```text
//! W_n = sum_i [ (1/n) sum_l mu1(U_i v U_l) - 2 mu2(U_i) ] + n mu3
//! ```
//!
//! where `v` is the coordinate-wise maximum. Pseudo-observations only take
//! the values `k/n` (or `k/(n+1)`), so each univariate factor of `mu1` and `mu2` is looked up
//! in a table indexed by rank; the coordinate-wise maximum of two
//! pseudo-observations is the maximum of their ranks.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ranks::{PseudoObservations, RankScale};
use crate::weights::{self, WeightFamily};

/// Values in `[-NEGATIVE_TOLERANCE, 0)` are rounding noise and clamp to zero.
pub const NEGATIVE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatisticValue {
    pub value: f64,
    pub n: usize,
    pub d: usize,
    pub family: WeightFamily,
}

/// Kahan accumulator. All `mu1` products are non-negative, which is the
/// regime where plain Kahan compensation is sufficient.
#[derive(Debug, Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    #[inline(always)]
    fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Neumaier summation for mixed-sign terms.
fn neumaier(terms: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Per-rank tables of the univariate `mu1`/`mu2` factors for one family.
#[derive(Debug, Clone)]
pub struct RankTables {
    n: usize,
    d: usize,
    /// `mu1[j][k]` is the factor for coordinate `j` at rank `k`, `k = 0..=n`.
    mu1: Vec<Vec<f64>>,
    mu2: Vec<Vec<f64>>,
    mu3: f64,
}

impl RankTables {
    pub fn new(family: &WeightFamily, n: usize) -> Self {
        Self::with_scale(family, n, RankScale::ByN)
    }

    pub fn with_scale(family: &WeightFamily, n: usize, scale: RankScale) -> Self {
        let d = family.d();
        let den = scale.denominator(n) as f64;
        let grid =
            |f: &dyn Fn(f64) -> f64| -> Vec<f64> { (0..=n).map(|k| f(k as f64 / den)).collect() };
        let mu1 = (0..d)
            .map(|j| {
                let fac = family.factor(j);
                grid(&|a| fac.mu1(a))
            })
            .collect();
        let mu2 = (0..d)
            .map(|j| {
                let fac = family.factor(j);
                grid(&|a| fac.mu2(a))
            })
            .collect();
        Self {
            n,
            d,
            mu1,
            mu2,
            mu3: weights::mu3(family),
        }
    }

    /// Raw closed-form value (before the negative clamp) for row-major
    /// ranks, using the symmetry of the double sum.
    pub fn evaluate(&self, ranks: &[u32]) -> f64 {
        let (n, d) = (self.n, self.d);
        debug_assert_eq!(ranks.len(), n * d);
        let mut rows = Vec::with_capacity(2 * n + 1);
        for i in 0..n {
            let ri = &ranks[i * d..(i + 1) * d];
            let mut acc = Kahan::default();
            for l in (i + 1)..n {
                let rl = &ranks[l * d..(l + 1) * d];
                let mut p = 1.0;
                for j in 0..d {
                    p *= self.mu1[j][ri[j].max(rl[j]) as usize];
                }
                acc.add(p);
            }
            let diag: f64 = (0..d).map(|j| self.mu1[j][ri[j] as usize]).product();
            let m2: f64 = (0..d).map(|j| self.mu2[j][ri[j] as usize]).product();
            rows.push((2.0 * (acc.sum - acc.c) + diag) / n as f64);
            rows.push(-2.0 * m2);
        }
        rows.push(n as f64 * self.mu3);
        neumaier(rows)
    }
}

/// Clamps rounding noise below zero; larger negatives are an error.
pub fn clamp_nonnegative(value: f64) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -NEGATIVE_TOLERANCE {
        Ok(0.0)
    } else {
        Err(Error::NegativeStatistic { value })
    }
}

fn check_family(pseudo: &PseudoObservations, family: &WeightFamily) -> Result<()> {
    if family.d() != pseudo.d() {
        return Err(Error::DimensionMismatch {
            expected: pseudo.d(),
            found: family.d(),
        });
    }
    Ok(())
}

/// Weighted Cramér-von Mises statistic of the pseudo-observations.
pub fn compute_statistic(
    pseudo: &PseudoObservations,
    family: &WeightFamily,
) -> Result<StatisticValue> {
    check_family(pseudo, family)?;
    let tables = RankTables::with_scale(family, pseudo.n(), pseudo.scale());
    let value = clamp_nonnegative(tables.evaluate(pseudo.ranks()))?;
    Ok(StatisticValue {
        value,
        n: pseudo.n(),
        d: pseudo.d(),
        family: family.clone(),
    })
}

/// Unclamped statistic from a plain double loop over all `(i, l)` pairs,
/// calling the moment maps on the pseudo-observations directly.
pub fn compute_statistic_naive(pseudo: &PseudoObservations, family: &WeightFamily) -> Result<f64> {
    check_family(pseudo, family)?;
    let (n, d) = (pseudo.n(), pseudo.d());
    let mut total = 0.0;
    let mut point = vec![0.0; d];
    for i in 0..n {
        let mut row = 0.0;
        for l in 0..n {
            for (j, p) in point.iter_mut().enumerate() {
                *p = pseudo.u(i, j).max(pseudo.u(l, j));
            }
            row += weights::mu1(family, &point)?;
        }
        total += row / n as f64 - 2.0 * weights::mu2(family, &pseudo.row_u(i))?;
    }
    Ok(total + n as f64 * weights::mu3(family))
}

/// Evaluates several families on the same ranks in one pass over pairs.
///
/// Used where many statistics are computed on resampled ranks: the
/// permutation test, null-distribution tabulation and power studies.
#[derive(Debug, Clone)]
pub struct MultiKernel {
    n: usize,
    d: usize,
    tables: Vec<RankTables>,
}

impl MultiKernel {
    pub fn new(families: &[WeightFamily], n: usize) -> Result<Self> {
        Self::with_scale(families, n, RankScale::ByN)
    }

    pub fn with_scale(families: &[WeightFamily], n: usize, scale: RankScale) -> Result<Self> {
        let d = families
            .first()
            .ok_or_else(|| Error::InvalidParameter("no weight families".into()))?
            .d();
        if let Some(f) = families.iter().find(|f| f.d() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: f.d(),
            });
        }
        if n == 0 {
            return Err(Error::Empty);
        }
        Ok(Self {
            n,
            d,
            tables: families
                .iter()
                .map(|f| RankTables::with_scale(f, n, scale))
                .collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    /// Writes one clamped statistic per family into `out`.
    pub fn evaluate_into(&self, ranks: &[u32], out: &mut [f64]) -> Result<()> {
        debug_assert_eq!(out.len(), self.tables.len());
        if self.d == 2 && self.tables.len() <= MAX_FUSED {
            self.evaluate_bivariate(ranks, out);
        } else {
            for (t, o) in self.tables.iter().zip(out.iter_mut()) {
                *o = t.evaluate(ranks);
            }
        }
        for o in out.iter_mut() {
            *o = clamp_nonnegative(*o)?;
        }
        Ok(())
    }

    pub fn evaluate(&self, ranks: &[u32]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.tables.len()];
        self.evaluate_into(ranks, &mut out)?;
        Ok(out)
    }

    /// Fused bivariate loop: the pair maxima are computed once and shared by
    /// all families. Same summation scheme as [`RankTables::evaluate`].
    fn evaluate_bivariate(&self, ranks: &[u32], out: &mut [f64]) {
        let n = self.n;
        let m = self.tables.len();
        let mut rows: Vec<Vec<f64>> = vec![Vec::with_capacity(2 * n + 1); m];
        let mut acc = [Kahan::default(); MAX_FUSED];
        for i in 0..n {
            let (a0, a1) = (ranks[2 * i], ranks[2 * i + 1]);
            acc[..m].fill(Kahan::default());
            for l in (i + 1)..n {
                let k0 = a0.max(ranks[2 * l]) as usize;
                let k1 = a1.max(ranks[2 * l + 1]) as usize;
                for (t, a) in self.tables.iter().zip(acc.iter_mut()) {
                    a.add(t.mu1[0][k0] * t.mu1[1][k1]);
                }
            }
            for (f, t) in self.tables.iter().enumerate() {
                let diag = t.mu1[0][a0 as usize] * t.mu1[1][a1 as usize];
                let m2 = t.mu2[0][a0 as usize] * t.mu2[1][a1 as usize];
                rows[f].push((2.0 * (acc[f].sum - acc[f].c) + diag) / n as f64);
                rows[f].push(-2.0 * m2);
            }
        }
        for (f, t) in self.tables.iter().enumerate() {
            rows[f].push(n as f64 * t.mu3);
            out[f] = neumaier(rows[f].iter().copied());
        }
    }
}

const MAX_FUSED: usize = 8;
