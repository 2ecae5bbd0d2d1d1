//! Samples and their pseudo-observations (normalized ranks).
//!
//! Every statistic in this crate is a function of the pseudo-observations
//! only. The rank of an observation within its column is the number of
//! observations in that column that are less than or equal to it, so tied
//! values share the largest rank of their group.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `n x d` matrix of finite observations, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    data: Vec<f64>,
    n: usize,
    d: usize,
}

impl Sample {
    /// Builds a sample from a row-major buffer.
    pub fn from_row_major(data: Vec<f64>, n: usize, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::TooFewColumns(d));
        }
        if n == 0 {
            return Err(Error::Empty);
        }
        if data.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / d,
                col: pos % d,
            });
        }
        Ok(Self { data, n, d })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Empty);
        }
        let d = rows[0].len();
        let mut data = Vec::with_capacity(n * d);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::RaggedRow {
                    row: i,
                    expected: d,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(data, n, d)
    }

    pub fn from_columns(cols: &[Vec<f64>]) -> Result<Self> {
        let d = cols.len();
        if d < 2 {
            return Err(Error::TooFewColumns(d));
        }
        let n = cols[0].len();
        if let Some((j, c)) = cols.iter().enumerate().find(|(_, c)| c.len() != n) {
            return Err(Error::RaggedRow {
                row: j,
                expected: n,
                found: c.len(),
            });
        }
        let mut data = Vec::with_capacity(n * d);
        for i in 0..n {
            data.extend(cols.iter().map(|c| c[i]));
        }
        Self::from_row_major(data, n, d)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.d + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.data
    }

    /// Applies `f` to every entry of column `j`.
    pub fn map_column(&self, j: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut data = self.data.clone();
        for i in 0..self.n {
            data[i * self.d + j] = f(data[i * self.d + j]);
        }
        Self::from_row_major(data, self.n, self.d)
    }
}

/// Denominator used to turn ranks into pseudo-observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
pub enum RankScale {
    /// `k / n`, so the largest observation maps to 1.
    #[default]
    #[serde(rename = "n")]
    ByN,
    /// `k / (n + 1)`, keeping every pseudo-observation inside `(0, 1)`.
    #[serde(rename = "n+1")]
    ByNPlusOne,
}

impl RankScale {
    pub fn denominator(self, n: usize) -> usize {
        match self {
            RankScale::ByN => n,
            RankScale::ByNPlusOne => n + 1,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "n" => Ok(RankScale::ByN),
            "n+1" => Ok(RankScale::ByNPlusOne),
            other => Err(Error::Parse(format!(
                "rank scale '{other}', expected n or n+1"
            ))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RankScale::ByN => "n",
            RankScale::ByNPlusOne => "n+1",
        }
    }
}

/// Normalized ranks `k/n` (or `k/(n+1)`), stored as the integer ranks `k`
/// in `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudoObservations {
    ranks: Vec<u32>,
    n: usize,
    d: usize,
    ties: Vec<bool>,
    scale: RankScale,
}

impl PseudoObservations {
    /// Builds pseudo-observations from integer ranks given row-major.
    ///
    /// Tie flags are recomputed from the ranks.
    pub fn from_ranks(ranks: Vec<u32>, n: usize, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::TooFewColumns(d));
        }
        if n == 0 {
            return Err(Error::Empty);
        }
        if ranks.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                found: ranks.len(),
            });
        }
        if let Some(&bad) = ranks.iter().find(|&&r| r == 0 || r as usize > n) {
            return Err(Error::InvalidParameter(format!(
                "rank {bad} outside 1..={n}"
            )));
        }
        let ties = (0..d)
            .map(|j| {
                let mut seen = vec![false; n + 1];
                (0..n).any(|i| {
                    let r = ranks[i * d + j] as usize;
                    std::mem::replace(&mut seen[r], true)
                })
            })
            .collect();
        Ok(Self {
            ranks,
            n,
            d,
            ties,
            scale: RankScale::ByN,
        })
    }

    pub fn with_scale(mut self, scale: RankScale) -> Self {
        self.scale = scale;
        self
    }

    pub fn scale(&self) -> RankScale {
        self.scale
    }

    /// `n` or `n + 1`, depending on the scale.
    pub fn denominator(&self) -> usize {
        self.scale.denominator(self.n)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Integer rank of observation `i` in column `j`.
    #[inline]
    pub fn rank(&self, i: usize, j: usize) -> u32 {
        self.ranks[i * self.d + j]
    }

    /// The pseudo-observation `rank / n` (or `rank / (n + 1)`).
    #[inline]
    pub fn u(&self, i: usize, j: usize) -> f64 {
        self.rank(i, j) as f64 / self.denominator() as f64
    }

    pub fn row_u(&self, i: usize) -> Vec<f64> {
        (0..self.d).map(|j| self.u(i, j)).collect()
    }

    pub fn ranks(&self) -> &[u32] {
        &self.ranks
    }

    pub fn tie_flags(&self) -> &[bool] {
        &self.ties
    }

    pub fn has_ties(&self) -> bool {
        self.ties.iter().any(|&t| t)
    }
}

/// Converts a sample into pseudo-observations.
///
/// `u[i][j] = #{l : x[l][j] <= x[i][j]} / n`.
pub fn pseudo_observations(sample: &Sample) -> PseudoObservations {
    let (n, d) = (sample.n(), sample.d());
    let mut ranks = vec![0u32; n * d];
    let mut ties = vec![false; d];
    let mut idx: Vec<usize> = Vec::with_capacity(n);
    for j in 0..d {
        idx.clear();
        idx.extend(0..n);
        idx.sort_unstable_by(|&a, &b| sample.get(a, j).total_cmp(&sample.get(b, j)));
        let mut start = 0;
        while start < n {
            let v = sample.get(idx[start], j);
            let mut end = start + 1;
            while end < n && sample.get(idx[end], j) == v {
                end += 1;
            }
            if end - start > 1 {
                ties[j] = true;
            }
            for &i in &idx[start..end] {
                ranks[i * d + j] = end as u32;
            }
            start = end;
        }
    }
    PseudoObservations {
        ranks,
        n,
        d,
        ties,
        scale: RankScale::ByN,
    }
}
