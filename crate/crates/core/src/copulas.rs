//! Copula models used as alternatives in power studies: samplers, CDFs and
//! tail-dependence coefficients.
//!
//! Samplers:
//!
//! * Gaussian: correlated normals via Cholesky, mapped through `Phi`.
//! * Student t: Gaussian vector divided by `sqrt(chi2_k / k)`.
//! * Gumbel: Marshall-Olkin with a positive stable frailty of index `1/alpha`.
//! * Clayton: Marshall-Olkin with a `Gamma(1/theta)` frailty.
//! * Frank: conditional inversion (closed form in two dimensions).
//!
//! Because the statistics only see ranks, the samplers can also emit
//! [`Margins::Latent`] values: a strictly increasing transform of each
//! uniform margin computed in log space. Latent draws never collapse to the
//! same floating-point value in the far tails, which matters for the
//! t copula with `k` well below 1.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::ranks::Sample;
use crate::rng::stream_rng;
use crate::special::{
    ln_gamma_variate, ln_positive_stable, norm_cdf, norm_quantile, open01, std_exp, std_normal,
    t_cdf, t_lower_tail_log, t_quantile,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum CopulaModel {
    Independence,
    Gaussian {
        rho: f64,
    },
    #[serde(rename = "t")]
    StudentT {
        rho: f64,
        dof: f64,
    },
    Gumbel {
        alpha: f64,
    },
    Clayton {
        theta: f64,
    },
    Frank {
        gamma: f64,
    },
}

/// Which parameter a power-study grid varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridParam {
    /// rho, alpha, theta or gamma
    Primary,
    /// degrees of freedom of the t copula
    Dof,
}

/// Output scale of the margins of a sampled copula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Margins {
    /// Uniform(0, 1) margins, clamped to the open interval.
    #[default]
    Uniform,
    /// Standard normal margins.
    StandardNormal,
    /// An unspecified strictly increasing transform of the uniform margins.
    Latent,
}

const U_MIN: f64 = f64::MIN_POSITIVE;
const U_MAX: f64 = 1.0 - f64::EPSILON / 2.0;

fn clamp_open(u: f64) -> f64 {
    u.clamp(U_MIN, U_MAX)
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}

impl CopulaModel {
    pub fn gaussian(rho: f64) -> Result<Self> {
        let m = CopulaModel::Gaussian { rho };
        m.validate()?;
        Ok(m)
    }

    pub fn student_t(rho: f64, dof: f64) -> Result<Self> {
        let m = CopulaModel::StudentT { rho, dof };
        m.validate()?;
        Ok(m)
    }

    pub fn gumbel(alpha: f64) -> Result<Self> {
        let m = CopulaModel::Gumbel { alpha };
        m.validate()?;
        Ok(m)
    }

    pub fn clayton(theta: f64) -> Result<Self> {
        let m = CopulaModel::Clayton { theta };
        m.validate()?;
        Ok(m)
    }

    pub fn frank(gamma: f64) -> Result<Self> {
        let m = CopulaModel::Frank { gamma };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            CopulaModel::Independence => Ok(()),
            CopulaModel::Gaussian { rho } => check((0.0..1.0).contains(&rho), || {
                format!("gaussian rho {rho} not in [0, 1)")
            }),
            CopulaModel::StudentT { rho, dof } => {
                check((0.0..1.0).contains(&rho), || {
                    format!("t rho {rho} not in [0, 1)")
                })?;
                check(dof > 0.0 && dof.is_finite(), || {
                    format!("t dof {dof} must be > 0")
                })
            }
            CopulaModel::Gumbel { alpha } => check(alpha >= 1.0 && alpha.is_finite(), || {
                format!("gumbel alpha {alpha} must be >= 1")
            }),
            CopulaModel::Clayton { theta } => check(theta >= 0.0 && theta.is_finite(), || {
                format!("clayton theta {theta} must be >= 0")
            }),
            CopulaModel::Frank { gamma } => check(gamma.is_finite(), || {
                format!("frank gamma {gamma} must be finite")
            }),
        }
    }

    /// Parses `independence`, `gaussian:0.4`, `t:0.0,1.0` (rho, dof),
    /// `gumbel:1.3`, `clayton:0.6`, `frank:2.0`. A bare family name uses the
    /// independence value of its parameter (`t` defaults to rho = 0, k = 1).
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (head, tail) = match spec.split_once(':') {
            Some((h, t)) => (h.trim(), Some(t)),
            None => (spec, None),
        };
        let nums: Vec<f64> = match tail {
            Some(t) => t
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad copula parameter '{s}'")))
                })
                .collect::<Result<_>>()?,
            None => Vec::new(),
        };
        let arity = |k: usize| -> Result<()> {
            if nums.len() > k {
                Err(Error::Parse(format!(
                    "'{head}' takes at most {k} parameter(s)"
                )))
            } else {
                Ok(())
            }
        };
        let get = |i: usize, default: f64| nums.get(i).copied().unwrap_or(default);
        match head.to_ascii_lowercase().as_str() {
            "independence" | "indep" | "product" => {
                arity(0)?;
                Ok(CopulaModel::Independence)
            }
            "gaussian" | "normal" => {
                arity(1)?;
                Self::gaussian(get(0, 0.0))
            }
            "t" | "student" | "studentt" => {
                arity(2)?;
                Self::student_t(get(0, 0.0), get(1, 1.0))
            }
            "gumbel" => {
                arity(1)?;
                Self::gumbel(get(0, 1.0))
            }
            "clayton" => {
                arity(1)?;
                Self::clayton(get(0, 0.0))
            }
            "frank" => {
                arity(1)?;
                Self::frank(get(0, 0.0))
            }
            other => Err(Error::Parse(format!("unknown copula '{other}'"))),
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            CopulaModel::Independence => "independence",
            CopulaModel::Gaussian { .. } => "gaussian",
            CopulaModel::StudentT { .. } => "t",
            CopulaModel::Gumbel { .. } => "gumbel",
            CopulaModel::Clayton { .. } => "clayton",
            CopulaModel::Frank { .. } => "frank",
        }
    }

    /// Copy with one parameter replaced.
    pub fn with_param(&self, which: GridParam, value: f64) -> Result<Self> {
        let m = match (*self, which) {
            (CopulaModel::Gaussian { .. }, GridParam::Primary) => {
                CopulaModel::Gaussian { rho: value }
            }
            (CopulaModel::StudentT { dof, .. }, GridParam::Primary) => {
                CopulaModel::StudentT { rho: value, dof }
            }
            (CopulaModel::StudentT { rho, .. }, GridParam::Dof) => {
                CopulaModel::StudentT { rho, dof: value }
            }
            (CopulaModel::Gumbel { .. }, GridParam::Primary) => {
                CopulaModel::Gumbel { alpha: value }
            }
            (CopulaModel::Clayton { .. }, GridParam::Primary) => {
                CopulaModel::Clayton { theta: value }
            }
            (CopulaModel::Frank { .. }, GridParam::Primary) => CopulaModel::Frank { gamma: value },
            (m, w) => {
                return Err(Error::InvalidParameter(format!(
                    "{} has no {:?} parameter",
                    m.family_name(),
                    w
                )))
            }
        };
        m.validate()?;
        Ok(m)
    }

    /// True when the parameters make the copula the independence copula.
    pub fn is_independence(&self) -> bool {
        match *self {
            CopulaModel::Independence => true,
            CopulaModel::Gaussian { rho } => rho == 0.0,
            CopulaModel::StudentT { .. } => false,
            CopulaModel::Gumbel { alpha } => alpha == 1.0,
            CopulaModel::Clayton { theta } => theta == 0.0,
            CopulaModel::Frank { gamma } => gamma == 0.0,
        }
    }

    /// Draws `n` bivariate rows into `out` (row-major, length `2n`).
    pub fn sample_into<R: Rng + ?Sized>(
        &self,
        n: usize,
        margins: Margins,
        rng: &mut R,
        out: &mut Vec<f64>,
    ) -> Result<()> {
        self.sample_dim_into(n, 2, margins, rng, out)
    }

    /// Draws `n` rows of dimension `d`. Only the independence, Gaussian and
    /// t copulas (with exchangeable correlation `rho`) support `d > 2`.
    pub fn sample_dim_into<R: Rng + ?Sized>(
        &self,
        n: usize,
        d: usize,
        margins: Margins,
        rng: &mut R,
        out: &mut Vec<f64>,
    ) -> Result<()> {
        self.validate()?;
        if d < 2 {
            return Err(Error::TooFewColumns(d));
        }
        out.clear();
        out.reserve(n * d);
        match *self {
            CopulaModel::Independence => sample_independence(n, d, margins, rng, out),
            CopulaModel::Gaussian { rho: 0.0 } => sample_independence(n, d, margins, rng, out),
            CopulaModel::Gaussian { rho } => {
                let chol = exchangeable_cholesky(d, rho);
                let mut z = vec![0.0; d];
                for _ in 0..n {
                    correlated_normals(&chol, rng, &mut z);
                    for &x in &z {
                        out.push(match margins {
                            Margins::Uniform => clamp_open(norm_cdf(x)),
                            Margins::StandardNormal | Margins::Latent => x,
                        });
                    }
                }
            }
            CopulaModel::StudentT { rho, dof } => {
                let chol = exchangeable_cholesky(d, rho);
                let mut z = vec![0.0; d];
                for _ in 0..n {
                    correlated_normals(&chol, rng, &mut z);
                    // chi2_k = 2 Gamma(k/2); ln sqrt(k / chi2) = (ln k - ln chi2) / 2
                    let ln_chi2 = std::f64::consts::LN_2 + ln_gamma_variate(0.5 * dof, rng);
                    let ln_scale = 0.5 * (dof.ln() - ln_chi2);
                    for &x in &z {
                        let ln_abs_t = x.abs().ln() + ln_scale;
                        let sign = if x < 0.0 { -1.0 } else { 1.0 };
                        out.push(match margins {
                            Margins::Latent => sign * signed_log_magnitude(ln_abs_t),
                            Margins::Uniform | Margins::StandardNormal => {
                                let tail = t_lower_tail_log(ln_abs_t, dof);
                                let u = clamp_open(if sign < 0.0 { tail } else { 1.0 - tail });
                                to_margin(u, margins)
                            }
                        });
                    }
                }
            }
            CopulaModel::Gumbel { alpha } => {
                bivariate_only(self, d)?;
                for _ in 0..n {
                    let ln_v = ln_positive_stable(1.0 / alpha, rng);
                    for _ in 0..2 {
                        // U = exp(-(E / V)^(1/alpha))
                        let s = std_exp(rng).ln() - ln_v;
                        out.push(match margins {
                            Margins::Latent => -s,
                            _ => to_margin(clamp_open((-(s / alpha).exp()).exp()), margins),
                        });
                    }
                }
            }
            CopulaModel::Clayton { theta: 0.0 } => {
                bivariate_only(self, d)?;
                sample_independence(n, d, margins, rng, out)
            }
            CopulaModel::Clayton { theta } => {
                bivariate_only(self, d)?;
                for _ in 0..n {
                    let ln_v = ln_gamma_variate(1.0 / theta, rng);
                    for _ in 0..2 {
                        // U = (1 + E / V)^(-1/theta)
                        let s = std_exp(rng).ln() - ln_v;
                        out.push(match margins {
                            Margins::Latent => -s,
                            _ => to_margin(clamp_open((-(s.exp().ln_1p()) / theta).exp()), margins),
                        });
                    }
                }
            }
            CopulaModel::Frank { gamma: 0.0 } => {
                bivariate_only(self, d)?;
                sample_independence(n, d, margins, rng, out)
            }
            CopulaModel::Frank { gamma } => {
                bivariate_only(self, d)?;
                let em1 = (-gamma).exp_m1();
                for _ in 0..n {
                    let u = open01(rng);
                    let p = open01(rng);
                    let y = p * em1 / (p + (1.0 - p) * (-gamma * u).exp());
                    let v = -y.ln_1p() / gamma;
                    out.push(to_margin(clamp_open(u), margins));
                    out.push(to_margin(clamp_open(v), margins));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for CopulaModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            CopulaModel::Independence => write!(f, "independence"),
            CopulaModel::Gaussian { rho } => write!(f, "gaussian:{rho}"),
            CopulaModel::StudentT { rho, dof } => write!(f, "t:{rho},{dof}"),
            CopulaModel::Gumbel { alpha } => write!(f, "gumbel:{alpha}"),
            CopulaModel::Clayton { theta } => write!(f, "clayton:{theta}"),
            CopulaModel::Frank { gamma } => write!(f, "frank:{gamma}"),
        }
    }
}

fn bivariate_only(m: &CopulaModel, d: usize) -> Result<()> {
    if d != 2 {
        return Err(Error::Unsupported(format!(
            "{} sampler is bivariate, asked for d = {d}",
            m.family_name()
        )));
    }
    Ok(())
}

fn to_margin(u: f64, margins: Margins) -> f64 {
    match margins {
        Margins::StandardNormal => norm_quantile(u),
        Margins::Uniform | Margins::Latent => u,
    }
}

/// `asinh(|t|)` from `ln|t|`; strictly increasing in `|t|`.
fn signed_log_magnitude(ln_abs: f64) -> f64 {
    if ln_abs > 20.0 {
        ln_abs + std::f64::consts::LN_2
    } else {
        ln_abs.exp().asinh()
    }
}

fn sample_independence<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    margins: Margins,
    rng: &mut R,
    out: &mut Vec<f64>,
) {
    for _ in 0..n * d {
        out.push(to_margin(open01(rng), margins));
    }
}

/// Lower Cholesky factor of the `d x d` matrix with unit diagonal and
/// constant off-diagonal `rho`.
fn exchangeable_cholesky(d: usize, rho: f64) -> Vec<Vec<f64>> {
    let mut l = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..=i {
            let target = if i == j { 1.0 } else { rho };
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                l[i][j] = (target - s).max(0.0).sqrt();
            } else {
                l[i][j] = (target - s) / l[j][j];
            }
        }
    }
    l
}

fn correlated_normals<R: Rng + ?Sized>(chol: &[Vec<f64>], rng: &mut R, z: &mut [f64]) {
    let d = chol.len();
    let e: Vec<f64> = (0..d).map(|_| std_normal(rng)).collect();
    for i in 0..d {
        z[i] = (0..=i).map(|k| chol[i][k] * e[k]).sum();
    }
}

/// `n` i.i.d. bivariate draws with uniform margins.
pub fn sample_copula(model: &CopulaModel, n: usize, seed: u64) -> Result<Sample> {
    sample_copula_with(model, n, 2, Margins::Uniform, seed)
}

pub fn sample_copula_with(
    model: &CopulaModel,
    n: usize,
    d: usize,
    margins: Margins,
    seed: u64,
) -> Result<Sample> {
    if n == 0 {
        return Err(Error::Empty);
    }
    let mut rng = stream_rng(seed, &[]);
    let mut buf = Vec::new();
    model.sample_dim_into(n, d, margins, &mut rng, &mut buf)?;
    Sample::from_row_major(buf, n, d)
}

/// Integrates the conditional distribution of `U_2` given `U_1 = s` over
/// `s in [0, u1]`.
fn conditional_integral(u1: f64, cond: impl Fn(f64) -> f64) -> f64 {
    quad::integrate_with_limit(cond, 0.0, u1, 1e-11, 1e-11, 400).clamp(0.0, u1)
}

/// `C(u1, u2)` for a bivariate model.
///
/// Gaussian and t copulas are evaluated by integrating the closed-form
/// conditional distribution, accurate to about `1e-9`.
pub fn copula_cdf(model: &CopulaModel, u: [f64; 2]) -> Result<f64> {
    model.validate()?;
    let [u1, u2] = u;
    if !(0.0..=1.0).contains(&u1) || !(0.0..=1.0).contains(&u2) {
        return Err(Error::InvalidParameter(format!(
            "({u1}, {u2}) outside [0, 1]^2"
        )));
    }
    if u1 == 0.0 || u2 == 0.0 {
        return Ok(0.0);
    }
    if u1 == 1.0 {
        return Ok(u2);
    }
    if u2 == 1.0 {
        return Ok(u1);
    }
    let value = match *model {
        CopulaModel::Independence => u1 * u2,
        CopulaModel::Gaussian { rho: 0.0 } => u1 * u2,
        CopulaModel::Gaussian { rho } => {
            let y = norm_quantile(u2);
            let s = (1.0 - rho * rho).sqrt();
            conditional_integral(u1, |p| norm_cdf((y - rho * norm_quantile(p)) / s))
        }
        CopulaModel::StudentT { rho, dof } => {
            let y = t_quantile(u2, dof);
            let r = 1.0 - rho * rho;
            conditional_integral(u1, |p| {
                let x = t_quantile(p, dof);
                let scale = ((dof + x * x) * r / (dof + 1.0)).sqrt();
                t_cdf((y - rho * x) / scale, dof + 1.0)
            })
        }
        CopulaModel::Gumbel { alpha } => {
            let s = (-u1.ln()).powf(alpha) + (-u2.ln()).powf(alpha);
            (-s.powf(1.0 / alpha)).exp()
        }
        CopulaModel::Clayton { theta: 0.0 } => u1 * u2,
        CopulaModel::Clayton { theta } => {
            let s = u1.powf(-theta) + u2.powf(-theta) - 1.0;
            s.max(0.0).powf(-1.0 / theta)
        }
        CopulaModel::Frank { gamma: 0.0 } => u1 * u2,
        CopulaModel::Frank { gamma } => {
            let num = (-gamma * u1).exp_m1() * (-gamma * u2).exp_m1();
            -(num / (-gamma).exp_m1()).ln_1p() / gamma
        }
    };
    Ok(value)
}

/// Lower and upper tail-dependence coefficients `(lambda_L, lambda_U)`.
pub fn tail_dependence(model: &CopulaModel) -> Result<(f64, f64)> {
    model.validate()?;
    match *model {
        CopulaModel::Independence | CopulaModel::Gaussian { .. } | CopulaModel::Frank { .. } => {
            Ok((0.0, 0.0))
        }
        CopulaModel::Gumbel { alpha } => Ok((0.0, 2.0 - 2f64.powf(1.0 / alpha))),
        CopulaModel::Clayton { theta: 0.0 } => Ok((0.0, 0.0)),
        CopulaModel::Clayton { theta } => Ok((2f64.powf(-1.0 / theta), 0.0)),
        CopulaModel::StudentT { .. } => Err(Error::Unsupported(
            "tail dependence of the t copula is not provided".into(),
        )),
    }
}
