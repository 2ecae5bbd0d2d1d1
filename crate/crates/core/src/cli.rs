//! Command-line front end: `test`, `tabulate`, `power` and `validate`.
//!
//! Exit codes: 0 on success, 1 on an internal failure or a failed
//! validation, 2 on a usage or input error.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::copulas::{CopulaModel, GridParam};
use crate::error::{Error, Result};
use crate::nulldist::{tabulate_many, DEFAULT_DRAWS, DEFAULT_N_APPROX};
use crate::oracle::{oracle_statistic, OracleConfig};
use crate::permtest::permutation_test_ranks;
use crate::power::{
    named_families, parse_grid, power_summary, run_power_study, PowerStudyConfig, PowerSummary,
};
use crate::ranks::{pseudo_observations, PseudoObservations, RankScale, Sample};
use crate::rng::stream_rng;
use crate::statistic::compute_statistic;
use crate::weights::{self, WeightFamily};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "cwm",
    version,
    about = "Weighted Cramér-von Mises tests of independence"
)]
pub struct Cli {
    /// Worker threads (defaults to all cores). Results do not depend on it.
    #[arg(long, global = true, env = "CWM_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Permutation test of independence on a CSV file.
    Test(TestArgs),
    /// Simulate critical values under independence.
    Tabulate(TabulateArgs),
    /// Power study over a copula parameter grid.
    Power(PowerArgs),
    /// Compare the closed-form statistic with brute-force integration.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// CSV file, one observation per row.
    pub input: PathBuf,
    /// uniform, median, tails, upper, lower or deheuvels:b1,b2,...
    #[arg(long, short, default_value = "uniform")]
    pub weight: String,
    #[arg(long = "permutations", short = 'N', default_value_t = 500)]
    pub permutations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.10)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Rank normalization, `n` or `n+1`.
    #[arg(long, default_value = "n", value_parser = parse_scale)]
    pub scale: RankScale,
}

#[derive(Debug, Args)]
pub struct TabulateArgs {
    /// Weight family spec, or `all` for the five named families.
    #[arg(long, short, default_value = "all")]
    pub weight: String,
    #[arg(long, short, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = DEFAULT_DRAWS)]
    pub draws: usize,
    #[arg(long, default_value_t = DEFAULT_N_APPROX)]
    pub n_approx: usize,
    /// Comma-separated levels.
    #[arg(long, default_value = "0.15,0.10,0.05,0.01")]
    pub alphas: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Rank normalization, `n` or `n+1`.
    #[arg(long, default_value = "n", value_parser = parse_scale)]
    pub scale: RankScale,
    /// Output CSV; stdout when absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    /// Copula, e.g. `clayton`, `gumbel:1.3`, `t:0,1`.
    #[arg(long)]
    pub copula: String,
    /// Grid over the main parameter, `start:end:step` or a list.
    #[arg(long, conflicts_with = "grid_k", required_unless_present = "grid_k")]
    pub grid: Option<String>,
    /// Grid over the degrees of freedom of the t copula.
    #[arg(long)]
    pub grid_k: Option<String>,
    #[arg(long, short, default_value_t = 50)]
    pub n: usize,
    /// Samples per grid point.
    #[arg(long = "replicates", short = 'S', default_value_t = 300)]
    pub replicates: usize,
    #[arg(long = "permutations", short = 'N', default_value_t = 250)]
    pub permutations: usize,
    #[arg(long, default_value_t = 0.10)]
    pub alpha: f64,
    /// `all` or a weight family spec; repeat for several.
    #[arg(long, default_value = "all")]
    pub families: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// S = 1000 and N = 500.
    #[arg(long)]
    pub full_scale: bool,
    /// Rank normalization, `n` or `n+1`.
    #[arg(long, default_value = "n", value_parser = parse_scale)]
    pub scale: RankScale,
    /// Panel name written to the CSV; defaults to the copula family.
    #[arg(long)]
    pub panel: Option<String>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, default_value_t = 100)]
    pub cases: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fixed sample size; random in [2, 30] when absent.
    #[arg(long)]
    pub n: Option<usize>,
    /// 2 (exact oracle) or 3 (grid quadrature).
    #[arg(long, short, default_value_t = 2)]
    pub d: usize,
    /// Cells per axis of the grid oracle.
    #[arg(long, default_value_t = 256)]
    pub grid: usize,
    /// Rank normalization, `n` or `n+1`.
    #[arg(long, default_value = "n", value_parser = parse_scale)]
    pub scale: RankScale,
    /// Scales the closed-form mu2 term by (1 + eps); a negative control.
    #[arg(long, hide = true)]
    pub inject_mu2_error: Option<f64>,
}

fn parse_scale(s: &str) -> std::result::Result<RankScale, String> {
    RankScale::parse(s).map_err(|e| e.to_string())
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.threads {
        Some(0) => Err(Error::InvalidParameter(
            "--threads must be at least 1".into(),
        )),
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command)),
            Err(e) => Err(Error::InvalidParameter(e.to_string())),
        },
        None => dispatch(&cli.command),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NegativeStatistic { .. } => EXIT_FAILURE,
        _ => EXIT_USAGE,
    }
}

fn dispatch(cmd: &Command) -> Result<i32> {
    match cmd {
        Command::Test(a) => cmd_test(a),
        Command::Tabulate(a) => cmd_tabulate(a),
        Command::Power(a) => cmd_power(a),
        Command::Validate(a) => cmd_validate(a),
    }
}

/// Reads a numeric CSV. A first row with any non-numeric cell is taken as
/// a header and skipped.
pub fn read_sample<R: Read>(reader: R) -> Result<Sample> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (line, rec) in rd.records().enumerate() {
        let rec = rec?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let row = match parsed {
            Ok(r) => r,
            Err(_) if line == 0 => {
                width = Some(rec.len());
                continue;
            }
            Err(_) => {
                return Err(Error::Parse(format!(
                    "non-numeric cell on line {}",
                    line + 1
                )));
            }
        };
        let w = *width.get_or_insert(row.len());
        if row.len() != w {
            return Err(Error::RaggedRow {
                row: line,
                expected: w,
                found: row.len(),
            });
        }
        rows.push(row);
    }
    if let Some(w) = width {
        if w < 2 {
            return Err(Error::TooFewColumns(w));
        }
    }
    Sample::from_rows(&rows)
}

pub fn read_sample_file(path: &Path) -> Result<Sample> {
    let f = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_sample(io::BufReader::new(f))
}

#[derive(Debug, Serialize)]
struct TestOutput {
    statistic: f64,
    p_value: f64,
    n: usize,
    d: usize,
    weight: String,
    permutations: usize,
    seed: u64,
    alpha: f64,
    reject: bool,
    scale: RankScale,
    version: &'static str,
}

fn cmd_test(a: &TestArgs) -> Result<i32> {
    check_alpha(a.alpha)?;
    let sample = read_sample_file(&a.input)?;
    let family = WeightFamily::parse(&a.weight, sample.d())?;
    let pseudo = pseudo_observations(&sample).with_scale(a.scale);
    let r =
        permutation_test_ranks(&pseudo, &family, a.permutations, a.seed)?.with_decision(a.alpha)?;
    let out = TestOutput {
        statistic: r.statistic,
        p_value: r.p_value,
        n: r.n,
        d: r.d,
        weight: r.weight.clone(),
        permutations: r.n_permutations,
        seed: r.seed,
        alpha: a.alpha,
        reject: r.decision_at.is_some_and(|d| d.reject),
        scale: a.scale,
        version: VERSION,
    };
    let text =
        match a.format {
            Format::Json => serde_json::to_string(&out).map_err(io_err)? + "\n",
            Format::Text => {
                format!(
            "statistic    {}\np-value      {}\ndecision     {} independence at alpha = {}\n\
             n, d         {}, {}\nweight       {}\npermutations {}\nseed         {}\n",
            out.statistic,
            out.p_value,
            if out.reject { "reject" } else { "do not reject" },
            out.alpha,
            out.n,
            out.d,
            out.weight,
            out.permutations,
            out.seed
        )
            }
        };
    emit(&text)?;
    Ok(EXIT_OK)
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> Result<()> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "alpha {alpha} not in (0, 1)"
        )))
    }
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

fn parse_families(specs: &[String], d: usize) -> Result<Vec<WeightFamily>> {
    let mut out = Vec::new();
    for s in specs {
        if s.eq_ignore_ascii_case("all") {
            out.extend(named_families(d));
        } else {
            out.push(WeightFamily::parse(s, d)?);
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidParameter("no weight families".into()));
    }
    Ok(out)
}

fn parse_alphas(s: &str) -> Result<Vec<f64>> {
    let v = s
        .split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad alpha '{x}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    for &a in &v {
        check_alpha(a)?;
    }
    Ok(v)
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn write_meta(path: &Path, meta: serde_json::Value) -> Result<()> {
    let f = File::create(sidecar(path))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, &meta).map_err(io_err)?;
    writeln!(w)?;
    Ok(())
}

fn cmd_tabulate(a: &TabulateArgs) -> Result<i32> {
    let alphas = parse_alphas(&a.alphas)?;
    let families = parse_families(std::slice::from_ref(&a.weight), a.d)?;
    let table = tabulate_many(
        &families, a.d, &alphas, a.draws, a.n_approx, a.seed, a.scale,
    )?;
    match &a.out {
        Some(p) => {
            table.write_csv(BufWriter::new(File::create(p)?))?;
            write_meta(
                p,
                json!({
                    "command": "tabulate",
                    "version": VERSION,
                    "seed": a.seed,
                    "weight": a.weight,
                    "d": a.d,
                    "draws": a.draws,
                    "n_approx": a.n_approx,
                    "alphas": alphas,
                    "scale": a.scale,
                }),
            )?;
        }
        None => table.write_csv(io::stdout().lock())?,
    }
    Ok(EXIT_OK)
}

fn cmd_power(a: &PowerArgs) -> Result<i32> {
    let model = CopulaModel::parse(&a.copula)?;
    let (grid_param, grid) = match (&a.grid, &a.grid_k) {
        (Some(g), None) => (GridParam::Primary, parse_grid(g)?),
        (None, Some(g)) => {
            if !matches!(model, CopulaModel::StudentT { .. }) {
                return Err(Error::InvalidParameter("--grid-k needs a t copula".into()));
            }
            (GridParam::Dof, parse_grid(g)?)
        }
        _ => {
            return Err(Error::InvalidParameter(
                "give exactly one of --grid, --grid-k".into(),
            ))
        }
    };
    let panel = a
        .panel
        .clone()
        .unwrap_or_else(|| model.family_name().to_string());
    let mut cfg = PowerStudyConfig::new(&panel, model, grid_param, grid);
    cfg.n = a.n;
    cfg.replicates = a.replicates;
    cfg.permutations = a.permutations;
    cfg.alpha = a.alpha;
    cfg.seed = a.seed;
    cfg.scale = a.scale;
    cfg.families = parse_families(&a.families, 2)?;
    if a.full_scale {
        cfg = cfg.full_scale();
    }
    let curve = run_power_study(&cfg)?;
    let summary = power_summary(&curve);
    let summary_json = json!({
        "panel": summary.panel,
        "best": PowerSummary::label(&summary.best, summary.applicable),
        "worst": PowerSummary::label(&summary.worst, summary.applicable),
        "max_gap": summary.max_gap,
    });
    match &a.out {
        Some(p) => {
            curve.write_csv(BufWriter::new(File::create(p)?), true)?;
            write_meta(
                p,
                json!({
                    "command": "power",
                    "version": VERSION,
                    "seed": cfg.seed,
                    "config": cfg,
                    "point_seeds": curve.points.iter().map(|p| json!({"param": p.param, "seed": p.seed})).collect::<Vec<_>>(),
                    "summary": summary_json,
                }),
            )?;
            emit(&format!("{summary_json}\n"))?;
        }
        None => curve.write_csv(io::stdout().lock(), true)?,
    }
    Ok(EXIT_OK)
}

/// Closed form with the mu2 term scaled by `1 + eps`, for the negative
/// control of `validate`.
fn perturbed_statistic(p: &PseudoObservations, family: &WeightFamily, eps: f64) -> Result<f64> {
    let n = p.n();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| p.row_u(i)).collect();
    let mut total = n as f64 * weights::mu3(family);
    let mut a = vec![0.0; p.d()];
    for x in &rows {
        let mut s = 0.0;
        for y in &rows {
            for (k, v) in a.iter_mut().enumerate() {
                *v = x[k].max(y[k]);
            }
            s += weights::mu1(family, &a)?;
        }
        total += s / n as f64 - 2.0 * (1.0 + eps) * weights::mu2(family, x)?;
    }
    Ok(total)
}

fn validation_families(d: usize) -> Vec<WeightFamily> {
    let mut f = named_families(d);
    f.push(WeightFamily::deheuvels(vec![0.5; d]).expect("valid beta"));
    f
}

/// Largest relative error per family label, in family order.
pub fn validate(args: &ValidateArgs) -> Result<Vec<(String, f64)>> {
    if args.cases == 0 {
        return Err(Error::InvalidParameter("cases must be at least 1".into()));
    }
    let d = args.d;
    let cfg = match d {
        2 => OracleConfig::exact(),
        3 => OracleConfig::grid(args.grid)?,
        _ => {
            return Err(Error::Unsupported(format!(
                "validate supports d = 2 or 3, got {d}"
            )))
        }
    };
    let families = validation_families(d);
    let mut worst = vec![0.0f64; families.len()];
    for case in 0..args.cases {
        let mut rng = stream_rng(args.seed, &[case as u64]);
        let n = match args.n {
            Some(n) => n,
            None => rand::Rng::random_range(&mut rng, 2..=30),
        };
        let data: Vec<f64> = (0..n * d)
            .map(|_| rand::Rng::random::<f64>(&mut rng))
            .collect();
        let p = pseudo_observations(&Sample::from_row_major(data, n, d)?).with_scale(args.scale);
        for (f, w) in families.iter().zip(worst.iter_mut()) {
            let closed = match args.inject_mu2_error {
                Some(eps) => perturbed_statistic(&p, f, eps)?,
                None => compute_statistic(&p, f)?.value,
            };
            let reference = if n == 1 && args.scale == RankScale::ByN {
                weights::mu3(f)
            } else {
                oracle_statistic(&p, f, &cfg)?
            };
            let err = (closed - reference).abs() / reference.abs().max(f64::MIN_POSITIVE);
            *w = w.max(err);
        }
    }
    Ok(families.iter().map(|f| f.label()).zip(worst).collect())
}

pub fn validation_tolerance(d: usize) -> f64 {
    if d == 2 {
        1e-9
    } else {
        1e-3
    }
}

fn cmd_validate(a: &ValidateArgs) -> Result<i32> {
    let report = validate(a)?;
    let tol = validation_tolerance(a.d);
    let mut ok = true;
    let mut text = String::new();
    for (label, err) in &report {
        let pass = *err <= tol;
        ok &= pass;
        text += &format!(
            "{} {:<16} max rel. error {:.3e} (tolerance {:.0e})\n",
            if pass { "PASS" } else { "FAIL" },
            label,
            err,
            tol
        );
    }
    emit(&text)?;
    Ok(if ok { EXIT_OK } else { EXIT_FAILURE })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_header_detection() {
        let s = read_sample("x,y\n1,2\n3,4\n".as_bytes()).unwrap();
        assert_eq!((s.n(), s.d()), (2, 2));
        let s = read_sample("1,2\n3,4\n5,6\n".as_bytes()).unwrap();
        assert_eq!(s.n(), 3);
        assert!(read_sample("1,2\n3,x\n".as_bytes()).is_err());
        assert!(read_sample("1,2\n3\n".as_bytes()).is_err());
    }

    #[test]
    fn single_column_is_rejected() {
        let e = read_sample("x\n1\n2\n".as_bytes()).unwrap_err();
        assert!(e.to_string().contains("need at least 2 columns"));
        let e = read_sample("1\n2\n".as_bytes()).unwrap_err();
        assert!(e.to_string().contains("need at least 2 columns"));
        assert_eq!(exit_code(&e), EXIT_USAGE);
    }

    #[test]
    fn alphas_are_checked() {
        assert_eq!(parse_alphas("0.1, 0.05").unwrap(), vec![0.1, 0.05]);
        assert!(parse_alphas("0.1,1.5").is_err());
        assert!(parse_alphas("0").is_err());
    }

    #[test]
    fn validation_and_negative_control() {
        let mut a = ValidateArgs {
            cases: 5,
            seed: 1,
            n: None,
            d: 2,
            grid: 256,
            scale: RankScale::ByN,
            inject_mu2_error: None,
        };
        assert!(validate(&a).unwrap().iter().all(|(_, e)| *e <= 1e-9));
        a.inject_mu2_error = Some(1e-3);
        assert!(validate(&a).unwrap().iter().any(|(_, e)| *e > 1e-9));
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["cwm", "frobnicate"]), EXIT_USAGE);
        assert_eq!(
            run(["cwm", "power", "--copula", "clayton", "--grid", "0:1"]),
            EXIT_USAGE
        );
        assert_eq!(run(["cwm", "tabulate", "--alphas", "1.2"]), EXIT_USAGE);
    }
}
