//! Weight functions and their moment maps.
//!
//! A weight `w(u)` enters the statistic through three integrals:
//!
//! * `mu1(a)`: integral of `w` over the box `[a, 1]`,
//! * `mu2(a)`: integral of `(u_1 ... u_d) w(u)` over `[a, 1]`,
//! * `mu3`: integral of `(u_1 ... u_d)^2 w(u)` over the unit cube.
//!
//! Every family here is a product of one univariate factor per coordinate,
//! so each map is a product of univariate closed forms.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WeightKind {
    /// `w = 1`
    Uniform,
    /// `w = prod u_j (1 - u_j)`
    Median,
    /// `w = prod (u_j - 1/2)^2`
    SymmetricTail,
    /// `w = prod u_j^2`
    UpperTail,
    /// `w = prod (1 - u_j)^2`
    LowerTail,
    /// `w = prod u_j^(2 beta_j)`
    Deheuvels,
}

impl WeightKind {
    /// The five fixed families, in table order.
    pub const NAMED: [WeightKind; 5] = [
        WeightKind::Uniform,
        WeightKind::Median,
        WeightKind::SymmetricTail,
        WeightKind::UpperTail,
        WeightKind::LowerTail,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WeightKind::Uniform => "uniform",
            WeightKind::Median => "median",
            WeightKind::SymmetricTail => "tails",
            WeightKind::UpperTail => "upper",
            WeightKind::LowerTail => "lower",
            WeightKind::Deheuvels => "deheuvels",
        }
    }

    /// Conventional statistic symbol (`U_n`, `M_n`, ...).
    pub fn symbol(self) -> &'static str {
        match self {
            WeightKind::Uniform => "U_n",
            WeightKind::Median => "M_n",
            WeightKind::SymmetricTail => "T_n",
            WeightKind::UpperTail => "P_n",
            WeightKind::LowerTail => "L_n",
            WeightKind::Deheuvels => "D_n",
        }
    }
}

impl fmt::Display for WeightKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A product weight function in dimension `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightFamily {
    kind: WeightKind,
    beta: Option<Vec<f64>>,
    d: usize,
}

impl WeightFamily {
    /// A fixed family (anything but Deheuvels).
    pub fn new(kind: WeightKind, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::TooFewColumns(d));
        }
        if kind == WeightKind::Deheuvels {
            return Err(Error::InvalidParameter(
                "deheuvels weights need exponents; use WeightFamily::deheuvels".into(),
            ));
        }
        Ok(Self {
            kind,
            beta: None,
            d,
        })
    }

    /// `w(u) = prod u_j^(2 beta_j)`, each `beta_j > -1/2`.
    pub fn deheuvels(beta: Vec<f64>) -> Result<Self> {
        let d = beta.len();
        if d < 2 {
            return Err(Error::TooFewColumns(d));
        }
        if let Some(b) = beta.iter().find(|b| !b.is_finite() || **b <= -0.5) {
            return Err(Error::InvalidParameter(format!(
                "deheuvels exponent {b} must be finite and > -1/2"
            )));
        }
        Ok(Self {
            kind: WeightKind::Deheuvels,
            beta: Some(beta),
            d,
        })
    }

    /// Parses `uniform`, `median`, `tails`, `upper`, `lower` or
    /// `deheuvels:b1,b2,...`. A single Deheuvels exponent is broadcast to
    /// all `d` coordinates.
    pub fn parse(spec: &str, d: usize) -> Result<Self> {
        let spec = spec.trim();
        let (head, tail) = match spec.split_once(':') {
            Some((h, t)) => (h, Some(t)),
            None => (spec, None),
        };
        let kind = match head.to_ascii_lowercase().as_str() {
            "uniform" | "u" => WeightKind::Uniform,
            "median" | "m" => WeightKind::Median,
            "tails" | "t" => WeightKind::SymmetricTail,
            "upper" | "p" => WeightKind::UpperTail,
            "lower" | "l" => WeightKind::LowerTail,
            "deheuvels" | "d" => WeightKind::Deheuvels,
            other => return Err(Error::Parse(format!("unknown weight family '{other}'"))),
        };
        match (kind, tail) {
            (WeightKind::Deheuvels, Some(t)) => {
                let beta = t
                    .split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::Parse(format!("bad exponent '{s}'")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let beta = match beta.len() {
                    1 => vec![beta[0]; d],
                    k if k == d => beta,
                    k => {
                        return Err(Error::DimensionMismatch {
                            expected: d,
                            found: k,
                        })
                    }
                };
                Self::deheuvels(beta)
            }
            (WeightKind::Deheuvels, None) => Err(Error::Parse(
                "deheuvels needs exponents, e.g. deheuvels:1,1".into(),
            )),
            (_, Some(_)) => Err(Error::Parse(format!("'{head}' takes no parameters"))),
            (k, None) => Self::new(k, d),
        }
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn beta(&self) -> Option<&[f64]> {
        self.beta.as_deref()
    }

    /// Same family in another dimension. Deheuvels exponents must all agree.
    pub fn with_dim(&self, d: usize) -> Result<Self> {
        match &self.beta {
            None => Self::new(self.kind, d),
            Some(b) if b.iter().all(|x| *x == b[0]) => Self::deheuvels(vec![b[0]; d]),
            Some(_) => Err(Error::InvalidParameter(
                "cannot change dimension of non-exchangeable deheuvels weights".into(),
            )),
        }
    }

    /// Spec string accepted by [`WeightFamily::parse`].
    pub fn label(&self) -> String {
        match &self.beta {
            None => self.kind.name().to_string(),
            Some(b) => {
                let parts: Vec<String> = b.iter().map(|x| x.to_string()).collect();
                format!("deheuvels:{}", parts.join(","))
            }
        }
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: len,
            });
        }
        Ok(())
    }

    /// Univariate factor for coordinate `j`.
    pub fn factor(&self, j: usize) -> Factor {
        match self.kind {
            WeightKind::Uniform => Factor::Uniform,
            WeightKind::Median => Factor::Median,
            WeightKind::SymmetricTail => Factor::SymmetricTail,
            WeightKind::UpperTail => Factor::UpperTail,
            WeightKind::LowerTail => Factor::LowerTail,
            WeightKind::Deheuvels => Factor::Power(self.beta.as_ref().unwrap()[j]),
        }
    }

    pub fn factors(&self) -> Vec<Factor> {
        (0..self.d).map(|j| self.factor(j)).collect()
    }
}

impl fmt::Display for WeightFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// One coordinate of a product weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Factor {
    Uniform,
    Median,
    SymmetricTail,
    UpperTail,
    LowerTail,
    /// `u^(2 beta)`
    Power(f64),
}

/// `x^e`, through `powi` when the exponent is a small integer so that
/// integer Deheuvels exponents reproduce the fixed families bit for bit.
#[inline]
fn pow(x: f64, e: f64) -> f64 {
    if e.fract() == 0.0 && e.abs() <= 64.0 {
        x.powi(e as i32)
    } else {
        x.powf(e)
    }
}

impl Factor {
    #[inline]
    pub fn weight(self, u: f64) -> f64 {
        match self {
            Factor::Uniform => 1.0,
            Factor::Median => u * (1.0 - u),
            Factor::SymmetricTail => (u - 0.5) * (u - 0.5),
            Factor::UpperTail => u.powi(2),
            Factor::LowerTail => (1.0 - u) * (1.0 - u),
            Factor::Power(b) => pow(u, 2.0 * b),
        }
    }

    /// Integral of the factor over `[a, 1]`.
    #[inline]
    pub fn mu1(self, a: f64) -> f64 {
        match self {
            Factor::Uniform => 1.0 - a,
            Factor::Median => (2.0 * a + 1.0) * (1.0 - a) * (1.0 - a) / 6.0,
            Factor::SymmetricTail => {
                let c = a - 0.5;
                1.0 / 24.0 - c * c * c / 3.0
            }
            Factor::UpperTail => (1.0 - a.powi(3)) / 3.0,
            Factor::LowerTail => {
                let c = 1.0 - a;
                c * c * c / 3.0
            }
            Factor::Power(b) => {
                let e = 2.0 * b + 1.0;
                (1.0 - pow(a, e)) / e
            }
        }
    }

    /// Integral of `u` times the factor over `[a, 1]`.
    #[inline]
    pub fn mu2(self, a: f64) -> f64 {
        match self {
            Factor::Uniform => (1.0 - a.powi(2)) / 2.0,
            Factor::Median => (a.powi(4) - 1.0) / 4.0 + (1.0 - a.powi(3)) / 3.0,
            Factor::SymmetricTail => {
                1.0 / 24.0 - a.powi(4) / 4.0 + a.powi(3) / 3.0 - a.powi(2) / 8.0
            }
            Factor::UpperTail => (1.0 - a.powi(4)) / 4.0,
            Factor::LowerTail => {
                1.0 / 12.0 - a.powi(2) / 2.0 + 2.0 * a.powi(3) / 3.0 - a.powi(4) / 4.0
            }
            Factor::Power(b) => {
                let e = 2.0 * b + 2.0;
                (1.0 - pow(a, e)) / e
            }
        }
    }

    /// Integral of `u^2` times the factor over `[0, 1]`.
    #[inline]
    pub fn mu3(self) -> f64 {
        match self {
            Factor::Uniform => 1.0 / 3.0,
            Factor::Median => 1.0 / 20.0,
            Factor::SymmetricTail => 1.0 / 30.0,
            Factor::UpperTail => 1.0 / 5.0,
            Factor::LowerTail => 1.0 / 30.0,
            Factor::Power(b) => 1.0 / (2.0 * b + 3.0),
        }
    }
}

fn check_unit(p: &[f64]) -> Result<()> {
    if let Some(x) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::InvalidParameter(format!("{x} outside [0, 1]")));
    }
    Ok(())
}

/// `w(u)`.
pub fn weight_value(family: &WeightFamily, u: &[f64]) -> Result<f64> {
    family.check_dim(u.len())?;
    check_unit(u)?;
    Ok(u.iter()
        .enumerate()
        .map(|(j, &x)| family.factor(j).weight(x))
        .product())
}

pub fn mu1(family: &WeightFamily, a: &[f64]) -> Result<f64> {
    family.check_dim(a.len())?;
    check_unit(a)?;
    Ok(a.iter()
        .enumerate()
        .map(|(j, &x)| family.factor(j).mu1(x))
        .product())
}

pub fn mu2(family: &WeightFamily, a: &[f64]) -> Result<f64> {
    family.check_dim(a.len())?;
    check_unit(a)?;
    Ok(a.iter()
        .enumerate()
        .map(|(j, &x)| family.factor(j).mu2(x))
        .product())
}

pub fn mu3(family: &WeightFamily) -> f64 {
    (0..family.d()).map(|j| family.factor(j).mu3()).product()
}

/// Numerical `mu1` of the bivariate Anderson-Darling weight
/// `1 / (u1 u2 (1-u1)(1-u2))` over `[eps, 1-eps]^2`.
///
/// The untruncated integral diverges, so no weighted statistic exists for
/// this weight; the value grows without bound as `eps -> 0`.
pub fn anderson_darling_truncated_mu1(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "eps {eps} not in (0, 1/2)"
        )));
    }
    let inner = quad::integrate(|u| 1.0 / (u * (1.0 - u)), eps, 1.0 - eps, 1e-12, 1e-12);
    Ok(inner * inner)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(k: WeightKind) -> WeightFamily {
        WeightFamily::new(k, 2).unwrap()
    }

    #[test]
    fn weight_values() {
        assert_eq!(
            weight_value(&fam(WeightKind::Uniform), &[0.3, 0.9]).unwrap(),
            1.0
        );
        assert_eq!(
            weight_value(&fam(WeightKind::Median), &[0.5, 0.5]).unwrap(),
            0.0625
        );
        assert_eq!(
            weight_value(&fam(WeightKind::UpperTail), &[1.0, 1.0]).unwrap(),
            1.0
        );
        assert_eq!(
            weight_value(&fam(WeightKind::LowerTail), &[1.0, 1.0]).unwrap(),
            0.0
        );
        assert!(weight_value(&fam(WeightKind::Uniform), &[0.3]).is_err());
    }

    #[test]
    fn mu_fixed_points() {
        assert_eq!(mu1(&fam(WeightKind::Uniform), &[0.0, 0.0]).unwrap(), 1.0);
        assert!((mu1(&fam(WeightKind::UpperTail), &[0.0, 0.0]).unwrap() - 1.0 / 9.0).abs() < 1e-16);
        let m = mu1(&fam(WeightKind::Median), &[0.5, 0.5]).unwrap();
        assert!((m - 1.0 / 144.0).abs() < 1e-17);
        assert_eq!(mu2(&fam(WeightKind::Uniform), &[0.0, 0.0]).unwrap(), 0.25);
        assert!((Factor::LowerTail.mu2(0.0) - 1.0 / 12.0).abs() < 1e-17);
        assert!(
            mu2(&fam(WeightKind::SymmetricTail), &[1.0, 1.0])
                .unwrap()
                .abs()
                < 1e-30
        );
    }

    #[test]
    fn mu3_constants() {
        assert!((mu3(&fam(WeightKind::Uniform)) - 1.0 / 9.0).abs() < 1e-17);
        assert!((mu3(&fam(WeightKind::Median)) - 1.0 / 400.0).abs() < 1e-18);
        assert!((mu3(&fam(WeightKind::SymmetricTail)) - 1.0 / 900.0).abs() < 1e-18);
        assert!((mu3(&fam(WeightKind::UpperTail)) - 1.0 / 25.0).abs() < 1e-17);
        assert!((mu3(&fam(WeightKind::LowerTail)) - 1.0 / 900.0).abs() < 1e-18);
        let d0 = WeightFamily::deheuvels(vec![0.0, 0.0]).unwrap();
        assert_eq!(mu3(&d0), mu3(&fam(WeightKind::Uniform)));
    }

    #[test]
    fn parse_specs() {
        assert_eq!(
            WeightFamily::parse("tails", 2).unwrap().kind(),
            WeightKind::SymmetricTail
        );
        let d = WeightFamily::parse("deheuvels:0.5,1", 2).unwrap();
        assert_eq!(d.beta().unwrap(), &[0.5, 1.0]);
        assert_eq!(WeightFamily::parse(&d.label(), 2).unwrap(), d);
        assert_eq!(
            WeightFamily::parse("deheuvels:2", 3)
                .unwrap()
                .beta()
                .unwrap(),
            &[2.0; 3]
        );
        assert!(WeightFamily::parse("deheuvels:-0.5,0", 2).is_err());
        assert!(WeightFamily::parse("deheuvels:1,1,1", 2).is_err());
        assert!(WeightFamily::parse("deheuvels", 2).is_err());
        assert!(WeightFamily::parse("upper:3", 2).is_err());
        assert!(WeightFamily::parse("gauss", 2).is_err());
        assert!(WeightFamily::new(WeightKind::Uniform, 1).is_err());
    }

    #[test]
    fn out_of_range_points() {
        assert!(mu1(&fam(WeightKind::Uniform), &[1.2, 0.0]).is_err());
        assert!(mu2(&fam(WeightKind::Uniform), &[0.0, -0.1]).is_err());
    }

    #[test]
    fn anderson_darling_diverges() {
        let vals: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&e| anderson_darling_truncated_mu1(e).unwrap())
            .collect();
        assert!(vals[0] < vals[1] && vals[1] < vals[2], "{vals:?}");
        // analytic: (2 ln((1-eps)/eps))^2
        let exact = (2.0 * ((1.0 - 1e-4) / 1e-4_f64).ln()).powi(2);
        assert!((vals[2] - exact).abs() / exact < 1e-8);
    }
}
