//! Distribution helpers that the copula code needs beyond what `statrs` and
//! `rand_distr` offer directly: a Student-t quantile that works for very
//! small degrees of freedom, and variates generated in log space so that
//! heavy-tailed frailties do not underflow.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

fn standard_normal() -> Normal {
    Normal::standard()
}

pub(crate) fn norm_cdf(x: f64) -> f64 {
    standard_normal().cdf(x)
}

pub(crate) fn norm_quantile(p: f64) -> f64 {
    standard_normal().inverse_cdf(p)
}

/// `P(T <= -|t|)` for `T ~ t_k`, accurate far into the tail.
pub(crate) fn t_lower_tail(t: f64, k: f64) -> f64 {
    let t2 = t * t;
    if t2 >= k {
        let x = k / (k + t2);
        0.5 * beta_reg(0.5 * k, 0.5, x)
    } else {
        let y = t2 / (k + t2);
        0.5 * (1.0 - beta_reg(0.5, 0.5 * k, y))
    }
}

/// Same as [`t_lower_tail`] but with `|t|` given through `ln|t|`, so that
/// magnitudes beyond the `f64` range are handled.
pub(crate) fn t_lower_tail_log(ln_abs_t: f64, k: f64) -> f64 {
    if ln_abs_t < 300.0 {
        return t_lower_tail(ln_abs_t.exp(), k);
    }
    // x = k / (k + t^2) = 1 / (1 + exp(2 ln|t| - ln k))
    let x = (-(2.0 * ln_abs_t - k.ln())).exp();
    0.5 * beta_reg(0.5 * k, 0.5, x.min(1.0))
}

pub(crate) fn t_cdf(t: f64, k: f64) -> f64 {
    if t <= 0.0 {
        t_lower_tail(t, k)
    } else {
        1.0 - t_lower_tail(t, k)
    }
}

fn t_pdf(t: f64, k: f64) -> f64 {
    let ln_c =
        ln_gamma(0.5 * (k + 1.0)) - ln_gamma(0.5 * k) - 0.5 * (k * std::f64::consts::PI).ln();
    (ln_c - 0.5 * (k + 1.0) * (t * t / k).ln_1p()).exp()
}

/// Quantile of Student's t with `k > 0` degrees of freedom.
///
/// Solves `ln F(-e^s) = ln p` for `s` by safeguarded Newton iteration; in
/// the tail `ln F` is close to linear in `s`, which keeps this stable even
/// for `k` well below 1.
pub(crate) fn t_quantile(p: f64, k: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    if p == 0.5 {
        return 0.0;
    }
    let (q, sign) = if p < 0.5 { (p, -1.0) } else { (1.0 - p, 1.0) };
    let target = q.ln();
    let g = |s: f64| t_lower_tail(s.exp(), k).ln() - target;
    // g is decreasing in s.
    let (mut lo, mut hi) = (-40.0f64, 1.0f64);
    while g(hi) > 0.0 && hi < 700.0 {
        lo = hi;
        hi = (hi * 2.0).min(700.0);
    }
    while g(lo) < 0.0 && lo > -700.0 {
        hi = lo;
        lo *= 2.0;
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..200 {
        let gs = g(s);
        if gs == 0.0 {
            break;
        }
        if gs > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let t = s.exp();
        let f = t_lower_tail(t, k);
        // d/ds ln F(-e^s) = -pdf(e^s) e^s / F
        let deriv = -t_pdf(t, k) * t / f;
        let mut next = s - gs / deriv;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - s).abs() <= 1e-15 * s.abs().max(1.0) || hi - lo <= 1e-15 * s.abs().max(1.0) {
            s = next;
            break;
        }
        s = next;
    }
    sign * s.exp()
}

/// `ln G` for `G ~ Gamma(shape, 1)`; valid for any `shape > 0`.
pub(crate) fn ln_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        let g: f64 = Gamma::new(shape, 1.0).unwrap().sample(rng);
        g.ln()
    } else {
        // G(a) = G(a + 1) * U^(1/a)
        let g: f64 = Gamma::new(shape + 1.0, 1.0).unwrap().sample(rng);
        let u: f64 = open01(rng);
        g.ln() + u.ln() / shape
    }
}

/// `ln V` for a positive stable `V` with Laplace transform `exp(-t^a)`,
/// `0 < a <= 1` (Kanter's representation).
pub(crate) fn ln_positive_stable<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    if a >= 1.0 {
        return 0.0;
    }
    let theta = std::f64::consts::PI * open01(rng);
    let e: f64 = Exp1.sample(rng);
    (a * theta).sin().ln() - (theta.sin().ln()) / a
        + (1.0 - a) / a * (((1.0 - a) * theta).sin().ln() - e.ln())
}

pub(crate) fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

pub(crate) fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

pub(crate) fn std_exp<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}
