//! Brute-force evaluation of the statistic from its integral definition,
//! `n * integral of (C_n(u) - prod u_j)^2 w(u) du`, without the moment maps.
//!
//! Used to validate the closed form. Two modes:
//!
//! * `ExactPiecewise` (d = 2): the empirical copula is constant on the cells
//!   of the grid spanned by the distinct pseudo-observation values, and on
//!   each cell the integral reduces to univariate polynomial (or power)
//!   integrals evaluated from antiderivatives.
//! * `GridQuadrature` (d = 2 or 3): product grid of about `m` cells per
//!   axis, `C_n` evaluated at each cell center and the weight terms
//!   integrated per cell by Gauss-Legendre. By default the rank breakpoints
//!   are added to the uniform grid `k/m`, so `C_n` is constant on every
//!   cell; without them the jumps of `C_n` inside cells leave an `O(1/m)`
//!   error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranks::PseudoObservations;
use crate::weights::{Factor, WeightFamily, WeightKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleMode {
    ExactPiecewise,
    GridQuadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub mode: OracleMode,
    /// Cells per axis, GridQuadrature only.
    pub grid_points_per_axis: usize,
    /// Add the rank breakpoints to the uniform grid (GridQuadrature only).
    pub align_to_ranks: bool,
}

impl OracleConfig {
    pub const MIN_GRID: usize = 16;

    pub fn exact() -> Self {
        Self {
            mode: OracleMode::ExactPiecewise,
            grid_points_per_axis: Self::MIN_GRID,
            align_to_ranks: true,
        }
    }

    pub fn grid(m: usize) -> Result<Self> {
        if m < Self::MIN_GRID {
            return Err(Error::InvalidParameter(format!(
                "grid_points_per_axis {m} < {}",
                Self::MIN_GRID
            )));
        }
        Ok(Self {
            mode: OracleMode::GridQuadrature,
            grid_points_per_axis: m,
            align_to_ranks: true,
        })
    }

    /// Midpoint rule on the plain `m^d` uniform grid.
    pub fn uniform_grid(m: usize) -> Result<Self> {
        Ok(Self {
            align_to_ranks: false,
            ..Self::grid(m)?
        })
    }
}

/// Weight factor as polynomial coefficients in `u`, or `None` for power
/// weights with a non-polynomial exponent.
fn polynomial(kind: WeightKind) -> Option<&'static [f64]> {
    match kind {
        WeightKind::Uniform => Some(&[1.0]),
        WeightKind::Median => Some(&[0.0, 1.0, -1.0]),
        WeightKind::SymmetricTail => Some(&[0.25, -1.0, 1.0]),
        WeightKind::UpperTail => Some(&[0.0, 0.0, 1.0]),
        WeightKind::LowerTail => Some(&[1.0, -2.0, 1.0]),
        WeightKind::Deheuvels => None,
    }
}

/// `integral_lo^hi u^k w_j(u) du` for one coordinate's weight factor.
struct Moments {
    poly: Option<Vec<f64>>,
    exponent: f64,
}

impl Moments {
    fn new(family: &WeightFamily, j: usize) -> Self {
        match (polynomial(family.kind()), family.factor(j)) {
            (Some(p), _) => Self {
                poly: Some(p.to_vec()),
                exponent: 0.0,
            },
            (None, Factor::Power(b)) => Self {
                poly: None,
                exponent: 2.0 * b,
            },
            (None, _) => unreachable!("only power weights lack a polynomial form"),
        }
    }

    fn antiderivative(&self, k: usize, x: f64) -> f64 {
        match &self.poly {
            // sum_i c_i x^(i+k+1) / (i+k+1)
            Some(p) => {
                p.iter()
                    .enumerate()
                    .rev()
                    .fold(0.0, |acc, (i, &c)| acc * x + c / (i + k + 1) as f64)
                    * x.powi(k as i32 + 1)
            }
            None => {
                let e = self.exponent + k as f64 + 1.0;
                x.powf(e) / e
            }
        }
    }

    fn integral(&self, k: usize, lo: f64, hi: f64) -> f64 {
        self.antiderivative(k, hi) - self.antiderivative(k, lo)
    }
}

pub fn oracle_statistic(
    pseudo: &PseudoObservations,
    family: &WeightFamily,
    cfg: &OracleConfig,
) -> Result<f64> {
    if family.d() != pseudo.d() {
        return Err(Error::DimensionMismatch {
            expected: pseudo.d(),
            found: family.d(),
        });
    }
    match cfg.mode {
        OracleMode::ExactPiecewise => {
            if pseudo.d() != 2 {
                return Err(Error::Unsupported(format!(
                    "exact piecewise oracle needs d = 2, got {}",
                    pseudo.d()
                )));
            }
            Ok(exact_piecewise(pseudo, family))
        }
        OracleMode::GridQuadrature => {
            if cfg.grid_points_per_axis < OracleConfig::MIN_GRID {
                return Err(Error::InvalidParameter("grid too coarse".into()));
            }
            match pseudo.d() {
                2 | 3 => Ok(grid_quadrature(
                    pseudo,
                    family,
                    cfg.grid_points_per_axis,
                    cfg.align_to_ranks,
                )),
                d => Err(Error::Unsupported(format!(
                    "grid oracle supports d in {{2, 3}}, got {d}"
                ))),
            }
        }
    }
}

fn exact_piecewise(pseudo: &PseudoObservations, family: &WeightFamily) -> f64 {
    let n = pseudo.n();
    let den = pseudo.denominator();
    // Breakpoints in rank units: 0, the distinct ranks, and the denominator.
    let breaks = |j: usize| -> Vec<u32> {
        let mut b: Vec<u32> = (0..n).map(|i| pseudo.rank(i, j)).collect();
        b.push(0);
        b.push(den as u32);
        b.sort_unstable();
        b.dedup();
        b
    };
    let bx = breaks(0);
    let by = breaks(1);
    let pos = |b: &[u32], r: u32| b.binary_search(&r).unwrap();

    // counts[a][b] = #{i : rank_i0 <= bx[a], rank_i1 <= by[b]}
    let (nx, ny) = (bx.len(), by.len());
    let mut counts = vec![vec![0u32; ny]; nx];
    for i in 0..n {
        counts[pos(&bx, pseudo.rank(i, 0))][pos(&by, pseudo.rank(i, 1))] += 1;
    }
    for row in counts.iter_mut() {
        for b in 1..ny {
            row[b] += row[b - 1];
        }
    }
    for a in 1..nx {
        let (done, rest) = counts.split_at_mut(a);
        for (c, p) in rest[0].iter_mut().zip(&done[a - 1]) {
            *c += p;
        }
    }

    let mx = Moments::new(family, 0);
    let my = Moments::new(family, 1);
    let nf = n as f64;
    let cell_moments = |m: &Moments, b: &[u32]| -> Vec<[f64; 3]> {
        b.windows(2)
            .map(|w| {
                let (lo, hi) = (w[0] as f64 / den as f64, w[1] as f64 / den as f64);
                [
                    m.integral(0, lo, hi),
                    m.integral(1, lo, hi),
                    m.integral(2, lo, hi),
                ]
            })
            .collect()
    };
    let ix = cell_moments(&mx, &bx);
    let iy = cell_moments(&my, &by);

    let mut total = 0.0;
    let mut comp = 0.0;
    for (a, xa) in ix.iter().enumerate() {
        for (b, yb) in iy.iter().enumerate() {
            let c = counts[a][b] as f64 / nf;
            let term = c * c * xa[0] * yb[0] - 2.0 * c * xa[1] * yb[1] + xa[2] * yb[2];
            let t = total + term;
            if total.abs() >= term.abs() {
                comp += (total - t) + term;
            } else {
                comp += (term - t) + total;
            }
            total = t;
        }
    }
    nf * (total + comp)
}

/// Cell edges on one axis: the uniform grid `k/m`, plus the rank
/// breakpoints when `align` is set.
fn axis_edges(pseudo: &PseudoObservations, j: usize, m: usize, align: bool) -> Vec<f64> {
    let mut e: Vec<f64> = (0..=m).map(|k| k as f64 / m as f64).collect();
    if align {
        e.extend((0..pseudo.n()).map(|i| pseudo.u(i, j)));
        e.sort_by(f64::total_cmp);
        e.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    }
    e
}

/// Cell integrals of `w`, `u w` and `u^2 w` on one axis, by three-point
/// Gauss-Legendre within each cell; `C_n` is read at the cell centers.
struct Axis {
    centers: Vec<f64>,
    moments: Vec<[f64; 3]>,
}

impl Axis {
    fn new(edges: &[f64], f: Factor) -> Self {
        const X: f64 = 0.774_596_669_241_483_4; // sqrt(3/5)
        const W: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
        let mut centers = Vec::with_capacity(edges.len() - 1);
        let mut moments = Vec::with_capacity(edges.len() - 1);
        for e in edges.windows(2) {
            let (c, h) = (0.5 * (e[0] + e[1]), e[1] - e[0]);
            let mut m = [0.0; 3];
            for (t, wt) in [-X, 0.0, X].into_iter().zip(W) {
                let u = c + 0.5 * h * t;
                let wh = f.weight(u) * h * wt;
                m[0] += wh;
                m[1] += u * wh;
                m[2] += u * u * wh;
            }
            centers.push(c);
            moments.push(m);
        }
        Self { centers, moments }
    }

    /// A single cell of unit mass, used to run d = 2 through the d = 3 loop.
    fn unit() -> Self {
        Self {
            centers: vec![1.0],
            moments: vec![[1.0; 3]],
        }
    }

    fn len(&self) -> usize {
        self.centers.len()
    }

    /// Index of the first cell whose center is at or above `u`.
    fn first_center(&self, u: f64) -> usize {
        self.centers.partition_point(|&c| c < u)
    }
}

fn grid_quadrature(
    pseudo: &PseudoObservations,
    family: &WeightFamily,
    m: usize,
    align: bool,
) -> f64 {
    let (n, d) = (pseudo.n(), pseudo.d());
    let factors = family.factors();
    let axes: Vec<Axis> = (0..3)
        .map(|j| {
            if j < d {
                Axis::new(&axis_edges(pseudo, j, m, align), factors[j])
            } else {
                Axis::unit()
            }
        })
        .collect();
    let (la, lb, lc) = (axes[0].len(), axes[1].len(), axes[2].len());

    // Points by first-axis cell, with their cell indices on the other axes.
    let mut by_a: Vec<Vec<(usize, usize)>> = vec![Vec::new(); la];
    for i in 0..n {
        let a = axes[0].first_center(pseudo.u(i, 0));
        let b = axes[1].first_center(pseudo.u(i, 1));
        let c = if d == 3 {
            axes[2].first_center(pseudo.u(i, 2))
        } else {
            0
        };
        if a < la && b < lb && c < lc {
            by_a[a].push((b, c));
        }
    }

    // cum[b * lc + c] = n * C_n at the center of cell (a, b, c), updated as a grows.
    let mut cum = vec![0u32; lb * lc];
    let nf = n as f64;
    let mut total = 0.0;
    for (a, ma) in axes[0].moments.iter().enumerate() {
        for &(b0, c0) in &by_a[a] {
            for b in b0..lb {
                for v in &mut cum[b * lc + c0..(b + 1) * lc] {
                    *v += 1;
                }
            }
        }
        let mut slice = 0.0;
        for (b, mb) in axes[1].moments.iter().enumerate() {
            let (p0, p1, p2) = (ma[0] * mb[0], ma[1] * mb[1], ma[2] * mb[2]);
            let mut row = 0.0;
            for (&cnt, mc) in cum[b * lc..(b + 1) * lc].iter().zip(&axes[2].moments) {
                let cn = cnt as f64 / nf;
                row += cn * cn * p0 * mc[0] - 2.0 * cn * p1 * mc[1] + p2 * mc[2];
            }
            slice += row;
        }
        total += slice;
    }
    nf * total
}
