//! Power studies: rejection rates of the permutation test over a grid of
//! copula parameters, for several weight families at once.
//!
//! Within a replicate all families see the same sample and the same
//! permutations, so differences in power between families are estimated
//! with common random numbers. Each grid point gets its own seed, derived
//! from the master seed and the parameter value, so a single point can be
//! re-run on its own and reproduce the same numbers.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copulas::{CopulaModel, GridParam, Margins};
use crate::error::{Error, Result};
use crate::permtest::{exceedance_counts, p_value};
use crate::ranks::{pseudo_observations, RankScale, Sample};
use crate::rng::{derive_seed, stream_rng};
use crate::statistic::MultiKernel;
use crate::weights::{WeightFamily, WeightKind};

pub const MIN_REPLICATES: usize = 50;
pub const MIN_PERMUTATIONS: usize = 99;

pub const CSV_HEADER: [&str; 7] = ["panel", "family", "param", "rejections", "S", "rate", "se"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerStudyConfig {
    pub panel: String,
    pub model: CopulaModel,
    pub grid_param: GridParam,
    pub grid: Vec<f64>,
    pub n: usize,
    /// Samples per grid point.
    pub replicates: usize,
    /// Permutations per test.
    pub permutations: usize,
    pub alpha: f64,
    pub families: Vec<WeightFamily>,
    pub seed: u64,
    /// Rank normalization of the pseudo-observations.
    #[serde(default)]
    pub scale: RankScale,
}

impl PowerStudyConfig {
    /// Desk-scale defaults: n = 50, S = 300, N = 250, alpha = 0.10, the five
    /// named weight families.
    pub fn new(panel: &str, model: CopulaModel, grid_param: GridParam, grid: Vec<f64>) -> Self {
        Self {
            panel: panel.to_string(),
            model,
            grid_param,
            grid,
            n: 50,
            replicates: 300,
            permutations: 250,
            alpha: 0.10,
            families: named_families(2),
            seed: 0,
            scale: RankScale::ByN,
        }
    }

    /// S = 1000 samples and N = 500 permutations per test.
    pub fn full_scale(mut self) -> Self {
        self.replicates = 1000;
        self.permutations = 500;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates < MIN_REPLICATES {
            return Err(Error::InvalidParameter(format!(
                "S = {} < {MIN_REPLICATES}",
                self.replicates
            )));
        }
        if self.permutations < MIN_PERMUTATIONS {
            return Err(Error::InvalidParameter(format!(
                "N = {} < {MIN_PERMUTATIONS}",
                self.permutations
            )));
        }
        if self.grid.is_empty() {
            return Err(Error::InvalidParameter("empty parameter grid".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha {} not in (0, 1)",
                self.alpha
            )));
        }
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!("n = {} < 2", self.n)));
        }
        if self.families.is_empty() {
            return Err(Error::InvalidParameter("no weight families".into()));
        }
        for &v in &self.grid {
            self.model.with_param(self.grid_param, v)?;
        }
        Ok(())
    }

    /// Seed of the grid point with parameter value `param`.
    pub fn point_seed(&self, param: f64) -> u64 {
        derive_seed(self.seed, &[param.to_bits()])
    }
}

pub fn named_families(d: usize) -> Vec<WeightFamily> {
    WeightKind::NAMED
        .iter()
        .map(|&k| WeightFamily::new(k, d).expect("d >= 2"))
        .collect()
}

/// The six standard panels (Gaussian, Gumbel, Clayton, Frank,
/// t with rho = 0 over k, t with k = 1 over rho).
pub fn reference_panels() -> Vec<PowerStudyConfig> {
    let steps = |start: f64, step: f64, count: usize| -> Vec<f64> {
        (0..count)
            .map(|i| round12(start + step * i as f64))
            .collect()
    };
    vec![
        PowerStudyConfig::new(
            "gaussian",
            CopulaModel::Gaussian { rho: 0.0 },
            GridParam::Primary,
            steps(0.0, 0.2, 5),
        ),
        PowerStudyConfig::new(
            "gumbel",
            CopulaModel::Gumbel { alpha: 1.0 },
            GridParam::Primary,
            steps(1.0, 0.1, 7),
        ),
        PowerStudyConfig::new(
            "clayton",
            CopulaModel::Clayton { theta: 0.0 },
            GridParam::Primary,
            steps(0.0, 0.2, 6),
        ),
        PowerStudyConfig::new(
            "frank",
            CopulaModel::Frank { gamma: 0.0 },
            GridParam::Primary,
            steps(0.0, 0.5, 7),
        ),
        PowerStudyConfig::new(
            "t_rho0",
            CopulaModel::StudentT { rho: 0.0, dof: 1.0 },
            GridParam::Dof,
            steps(0.1, 0.2, 10),
        ),
        PowerStudyConfig::new(
            "t_k1",
            CopulaModel::StudentT { rho: 0.0, dof: 1.0 },
            GridParam::Primary,
            steps(0.0, 0.1, 8),
        ),
    ]
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// Parses `start:end:step` (inclusive of `end` up to rounding) or a comma
/// separated list of values.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let num = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("bad grid value '{s}'")))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.len() {
        1 => {
            let v = spec.split(',').map(num).collect::<Result<Vec<_>>>()?;
            if v.is_empty() {
                return Err(Error::Parse("empty grid".into()));
            }
            Ok(v)
        }
        3 => {
            let (start, end, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
            if step.is_nan() || step <= 0.0 || end < start || !start.is_finite() || !end.is_finite()
            {
                return Err(Error::Parse(format!("bad grid '{spec}'")));
            }
            let count = ((end - start) / step + 1e-9).floor() as usize + 1;
            if count > 10_000 {
                return Err(Error::Parse(format!("grid '{spec}' too long")));
            }
            Ok((0..count)
                .map(|i| round12(start + step * i as f64))
                .collect())
        }
        _ => Err(Error::Parse(format!(
            "bad grid '{spec}', expected start:end:step"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyRate {
    pub family: String,
    pub rejections: usize,
    pub replicates: usize,
    pub rate: f64,
    pub se: f64,
}

impl FamilyRate {
    fn new(family: String, rejections: usize, replicates: usize) -> Self {
        let rate = rejections as f64 / replicates as f64;
        Self {
            family,
            rejections,
            replicates,
            rate,
            se: (rate * (1.0 - rate) / replicates as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerPoint {
    pub param: f64,
    pub model: String,
    pub seed: u64,
    pub rates: Vec<FamilyRate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve {
    pub panel: String,
    pub config: PowerStudyConfig,
    pub points: Vec<PowerPoint>,
}

impl PowerCurve {
    pub fn families(&self) -> Vec<String> {
        self.config.families.iter().map(|f| f.label()).collect()
    }

    pub fn rate(&self, family: &str, param: f64) -> Option<&FamilyRate> {
        self.points
            .iter()
            .find(|p| (p.param - param).abs() < 1e-9)?
            .rates
            .iter()
            .find(|r| r.family == family)
    }

    pub fn write_csv<W: Write>(&self, w: W, header: bool) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        if header {
            wr.write_record(CSV_HEADER)?;
        }
        for p in &self.points {
            for r in &p.rates {
                wr.write_record([
                    self.panel.clone(),
                    r.family.clone(),
                    p.param.to_string(),
                    r.rejections.to_string(),
                    r.replicates.to_string(),
                    r.rate.to_string(),
                    r.se.to_string(),
                ])?;
            }
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, true)?;
        String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Rejections per family for one replicate at one grid point.
fn replicate(
    model: &CopulaModel,
    cfg: &PowerStudyConfig,
    kernel: &MultiKernel,
    point_seed: u64,
    r: u64,
    buf: &mut Vec<f64>,
) -> Result<Vec<bool>> {
    let mut rng = stream_rng(point_seed, &[r, 0]);
    model.sample_into(cfg.n, Margins::Latent, &mut rng, buf)?;
    let sample = Sample::from_row_major(std::mem::take(buf), cfg.n, 2)?;
    let pseudo = pseudo_observations(&sample).with_scale(cfg.scale);
    let observed = kernel.evaluate(pseudo.ranks())?;
    let counts = exceedance_counts(
        &pseudo,
        kernel,
        &observed,
        cfg.permutations,
        point_seed,
        &[r, 1],
        false,
    )?;
    Ok(counts
        .into_iter()
        .map(|c| p_value(c, cfg.permutations) <= cfg.alpha)
        .collect())
}

/// Runs the study; deterministic given the config (including its seed).
pub fn run_power_study(cfg: &PowerStudyConfig) -> Result<PowerCurve> {
    cfg.validate()?;
    let families: Vec<WeightFamily> = cfg
        .families
        .iter()
        .map(|f| f.with_dim(2))
        .collect::<Result<_>>()?;
    let kernel = MultiKernel::with_scale(&families, cfg.n, cfg.scale)?;
    let m = families.len();
    let s = cfg.replicates;

    let jobs: Vec<(usize, usize)> = (0..cfg.grid.len())
        .flat_map(|g| (0..s).map(move |r| (g, r)))
        .collect();
    let models: Vec<CopulaModel> = cfg
        .grid
        .iter()
        .map(|&v| cfg.model.with_param(cfg.grid_param, v))
        .collect::<Result<_>>()?;
    let seeds: Vec<u64> = cfg.grid.iter().map(|&v| cfg.point_seed(v)).collect();

    let outcomes: Vec<Vec<bool>> = jobs
        .par_iter()
        .map_init(Vec::new, |buf, &(g, r)| {
            replicate(&models[g], cfg, &kernel, seeds[g], r as u64, buf)
        })
        .collect::<Result<_>>()?;

    let points = cfg
        .grid
        .iter()
        .enumerate()
        .map(|(g, &param)| {
            let mut rej = vec![0usize; m];
            for o in &outcomes[g * s..(g + 1) * s] {
                for (c, &b) in rej.iter_mut().zip(o) {
                    *c += b as usize;
                }
            }
            PowerPoint {
                param,
                model: models[g].to_string(),
                seed: seeds[g],
                rates: families
                    .iter()
                    .zip(rej)
                    .map(|(f, c)| FamilyRate::new(f.label(), c, s))
                    .collect(),
            }
        })
        .collect();
    Ok(PowerCurve {
        panel: cfg.panel.clone(),
        config: cfg.clone(),
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSummary {
    pub panel: String,
    /// Most powerful family, `None` when no family dominates.
    pub best: Option<String>,
    /// Least powerful family, `None` when no family is dominated.
    pub worst: Option<String>,
    /// Largest power difference between the best and worst family over the
    /// grid (between the highest and lowest family when either is missing).
    pub max_gap: f64,
    /// False for curves with fewer than two families.
    pub applicable: bool,
}

impl PowerSummary {
    pub fn label(v: &Option<String>, applicable: bool) -> String {
        match (applicable, v) {
            (false, _) => "n/a".into(),
            (true, Some(s)) => s.clone(),
            (true, None) => "none".into(),
        }
    }
}

/// Monte-Carlo slack for comparing two rates: two standard errors of the
/// difference of independent binomial proportions.
fn slack(a: &FamilyRate, b: &FamilyRate) -> f64 {
    2.0 * (a.se * a.se + b.se * b.se).sqrt()
}

/// Best and worst family per panel.
///
/// A family is a candidate for best when no other family beats it by more
/// than the Monte-Carlo slack at any grid point (and symmetrically for
/// worst). Among several candidates the one with the highest (lowest) mean
/// rate over the grid is reported.
pub fn power_summary(curve: &PowerCurve) -> PowerSummary {
    let fams = curve.families();
    let m = fams.len();
    if m < 2 || curve.points.is_empty() {
        return PowerSummary {
            panel: curve.panel.clone(),
            best: None,
            worst: None,
            max_gap: 0.0,
            applicable: false,
        };
    }
    let never_beaten = |f: usize, worse: bool| -> bool {
        curve.points.iter().all(|p| {
            let a = &p.rates[f];
            p.rates.iter().all(|b| {
                let diff = if worse {
                    a.rate - b.rate
                } else {
                    b.rate - a.rate
                };
                diff <= slack(a, b)
            })
        })
    };
    let mean = |f: usize| -> f64 {
        curve.points.iter().map(|p| p.rates[f].rate).sum::<f64>() / curve.points.len() as f64
    };
    let pick = |worse: bool| -> Option<usize> {
        (0..m).filter(|&f| never_beaten(f, worse)).max_by(|&a, &b| {
            let (x, y) = (mean(a), mean(b));
            if worse {
                y.total_cmp(&x)
            } else {
                x.total_cmp(&y)
            }
        })
    };
    let best = pick(false);
    let mut worst = pick(true);
    if worst == best {
        worst = None;
    }
    let max_gap = curve
        .points
        .iter()
        .map(|p| match (best, worst) {
            (Some(b), Some(w)) => p.rates[b].rate - p.rates[w].rate,
            _ => {
                let hi = p.rates.iter().map(|r| r.rate).fold(f64::MIN, f64::max);
                let lo = p.rates.iter().map(|r| r.rate).fold(f64::MAX, f64::min);
                hi - lo
            }
        })
        .fold(0.0, f64::max);
    PowerSummary {
        panel: curve.panel.clone(),
        best: best.map(|i| fams[i].clone()),
        worst: worst.map(|i| fams[i].clone()),
        max_gap,
        applicable: true,
    }
}
