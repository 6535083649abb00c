//! Command-line runs that write JSON and CSV artifacts.
//!
//! Every run computes all of its outputs in memory first, so an input error
//! leaves the output directory untouched. Exit codes: 0 pass, 1 verification
//! failure, 2 input or validation error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::{json, Value};

use crate::dbspace::{kernel_closed, kernel_e_form, kernel_series, sampling_eval, KernelContext};
use crate::error::Error;
use crate::freqalg::{ExpSum, Freq};
use crate::hermite::{ks_from_q, HermiteBiehler};
use crate::measures::{pair_from_hb, FsPair};
use crate::qmodular::{eta_product, family_l, fminus, fplus, hecke_report, EtaProductSpec, Exponent, SelfDualSeries};
use crate::selfdual::{functional_equation_residual, selfdual_measure};
use crate::spectra::{exact_spectrum, herglotz_function, mean_values, Taper};
use crate::verifier::{check_pair, check_selfdual, gaussian_suite, heights_suite, VerificationReport};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Lib(#[from] Error),
    #[error("writing {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Write { .. } => 1,
            _ => 2,
        }
    }
}

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

#[derive(Debug, Parser, Serialize)]
#[command(name = "crystalline", version, about = "Fourier summation pairs: construction and verification runs")]
pub struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    #[serde(skip)]
    pub out: PathBuf,
    /// Seed for randomized test suites.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Residual tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Frequency cutoff as comma-separated integer coordinates.
    #[arg(long, global = true)]
    pub cutoff: Option<String>,
    /// Atom window `A B`.
    #[arg(long, global = true, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true)]
    pub window: Option<Vec<f64>>,
    /// Truncation order `p/q`.
    #[arg(long, global = true)]
    pub order: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "name")]
pub enum Command {
    /// Lift a real exponential sum Q to E = Q' - iQ and build its pair.
    Ks {
        /// Q as exponential-sum JSON.
        q: PathBuf,
        /// Number of gaussians in the check suite.
        #[arg(long, default_value_t = 10)]
        suite: usize,
    },
    /// Exact eta-product coefficients and the measure they define.
    Eta(SeriesSource),
    /// Exact against numerical mean values of iA/B.
    Spectrum {
        /// Pair, Hermite-Biehler or Q JSON.
        input: PathBuf,
        /// Frequencies, comma-separated.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        lambdas: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        y: f64,
        /// Averaging half-length.
        #[arg(long = "T", default_value_t = 1e4)]
        t: f64,
    },
    /// Reproducing-kernel identities at a list of points.
    Kernel {
        /// Pair, Hermite-Biehler or Q JSON.
        input: PathBuf,
        /// Points `re,im` separated by `;`.
        #[arg(long, default_value = "1,2;0.3,0.7;-1.2,0.4;2.5,1.5;0,0.5")]
        points: String,
        /// First kernel argument `re,im`.
        #[arg(long, default_value = "0,1")]
        w: String,
        /// Radius of the zero set used by the series.
        #[arg(long, default_value_t = 1e3)]
        radius: f64,
    },
    /// Self-duality checks of an eta-product measure.
    Selfdual {
        #[command(flatten)]
        source: SeriesSource,
        /// Use the anti-self-dual series `F_-`.
        #[arg(long)]
        minus: bool,
        /// Extra random gaussians beyond the heights 0.5, 1, 2.
        #[arg(long, default_value_t = 0)]
        gaussians: usize,
    },
    /// Gaussian-suite check of a stored pair.
    PairCheck {
        /// Pair JSON.
        pair: PathBuf,
        #[arg(long, default_value_t = 10)]
        suite: usize,
    },
}

#[derive(Debug, Args, Serialize)]
pub struct SeriesSource {
    /// Eta-product JSON `{"N": .., "r": {"d": "p/q"}}`.
    #[arg(conflicts_with = "family", required_unless_present = "family")]
    pub spec: Option<PathBuf>,
    /// Member `l` of the level-4 family `r = (l, 1 - 2l, l)`.
    #[arg(long, allow_negative_numbers = true)]
    pub family: Option<String>,
}

/// Files produced by a run and whether its checks passed.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<(String, String)>,
    pub passed: bool,
}

impl Outcome {
    /// Writes every file under `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let wrap = |source, path: &Path| CliError::Write { path: path.to_path_buf(), source };
        std::fs::create_dir_all(dir).map_err(|e| wrap(e, dir))?;
        for (name, body) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| wrap(e, &path))?;
        }
        Ok(())
    }
}

/// Parses arguments, runs, writes outputs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = execute(&cli).and_then(|o| o.write(&cli.out).map(|_| o));
    match result {
        Ok(o) => {
            for (name, _) in &o.files {
                println!("wrote {}", cli.out.join(name).display());
            }
            if o.passed {
                0
            } else {
                eprintln!("verification failed");
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn provenance(cli: &Cli) -> Value {
    json!({
        "tool": "crystalline",
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cli.seed,
        "config": serde_json::to_value(cli).unwrap_or(Value::Null),
    })
}

fn json_file(name: &str, prov: &Value, key: &str, body: impl Serialize) -> Result<(String, String), CliError> {
    let mut v = json!({ "provenance": prov });
    v[key] = serde_json::to_value(body).map_err(Error::from)?;
    let mut s = serde_json::to_string_pretty(&v).map_err(Error::from)?;
    s.push('\n');
    Ok((name.to_string(), s))
}

fn csv_file(name: &str, prov: &Value, header: &str, rows: &[String]) -> (String, String) {
    let mut s = format!("# {}\n{header}\n", serde_json::to_string(prov).unwrap_or_default());
    for r in rows {
        s.push_str(r);
        s.push('\n');
    }
    (name.to_string(), s)
}

/// Computes a run's outputs without touching the filesystem beyond reading inputs.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(input(format!("--tol must be positive, got {t}")));
        }
    }
    let prov = provenance(cli);
    match &cli.command {
        Command::Ks { q, suite } => cmd_ks(cli, &prov, q, *suite),
        Command::Eta(src) => cmd_eta(cli, &prov, src),
        Command::Spectrum { input, lambdas, y, t } => cmd_spectrum(cli, &prov, input, lambdas, *y, *t),
        Command::Kernel { input, points, w, radius } => cmd_kernel(cli, &prov, input, points, w, *radius),
        Command::Selfdual { source, minus, gaussians } => cmd_selfdual(cli, &prov, source, *minus, *gaussians),
        Command::PairCheck { pair, suite } => cmd_pair_check(cli, &prov, pair, *suite),
    }
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| input(format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn parse<T: serde::de::DeserializeOwned>(v: Value, what: &str) -> Result<T, CliError> {
    serde_json::from_value(v).map_err(|e| input(format!("invalid {what}: {e}")))
}

// Pair files written by `ks` wrap the pair next to a provenance block.
fn unwrap_key(v: Value, key: &str) -> Value {
    match v {
        Value::Object(mut m) if m.contains_key(key) => m.remove(key).unwrap_or(Value::Null),
        other => other,
    }
}

/// Hermite-Biehler data from a pair (its recorded `E`), an `{E, A, B}` record,
/// or an exponential sum `Q` lifted by `ks_from_q`.
fn load_hb(path: &Path) -> Result<HermiteBiehler, CliError> {
    let v = unwrap_key(read_json(path)?, "pair");
    if v.get("E").is_some() {
        return parse(v, "Hermite-Biehler record");
    }
    if v.get("mu").is_some() {
        let p: FsPair = parse(v, "pair")?;
        let e = p.meta.source.ok_or_else(|| input("pair has no recorded E"))?;
        return Ok(HermiteBiehler::new(e)?);
    }
    let q: ExpSum = parse(v, "exponential sum")?;
    Ok(ks_from_q(&q)?)
}

fn parse_cutoff(cli: &Cli, rank: usize, denominator: i64) -> Result<Freq, CliError> {
    let Some(s) = &cli.cutoff else { return Ok(Freq(vec![10 * denominator; rank])) };
    let k: Vec<i64> = s
        .split(',')
        .map(|t| t.trim().parse().map_err(|_| input(format!("bad cutoff coordinate {t:?}"))))
        .collect::<Result<_, _>>()?;
    if k.len() != rank {
        return Err(input(format!("cutoff has {} coordinates, basis rank is {rank}", k.len())));
    }
    Ok(Freq(k))
}

fn window(cli: &Cli, default: (f64, f64)) -> Result<(f64, f64), CliError> {
    match cli.window.as_deref() {
        None => Ok(default),
        Some([a, b]) if a.is_finite() && b.is_finite() && a < b => Ok((*a, *b)),
        Some(w) => Err(input(format!("bad window {w:?}"))),
    }
}

fn order(cli: &Cli, default: i64) -> Result<Exponent, CliError> {
    match &cli.order {
        None => Ok(Exponent::from_integer(default)),
        Some(s) => {
            let o: Exponent = s.trim().parse().map_err(|_| input(format!("bad order {s:?}")))?;
            if o <= Exponent::from_integer(0) {
                return Err(input(format!("order must be positive, got {o}")));
            }
            Ok(o)
        }
    }
}

fn parse_point(s: &str) -> Result<Complex64, CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [re, im] = parts[..] else { return Err(input(format!("point {s:?} is not re,im"))) };
    let f = |t: &str| t.parse::<f64>().map_err(|_| input(format!("bad number {t:?} in point {s:?}")));
    Ok(Complex64::new(f(re)?, f(im)?))
}

fn suite_summary(reports: &[VerificationReport]) -> Value {
    let worst = reports.iter().map(|r| r.residual).fold(0.0, f64::max);
    json!({
        "count": reports.len(),
        "passed": reports.iter().filter(|r| r.passed()).count(),
        "maxResidual": worst,
        "note": "a finite suite of test functions is evidence for the identity, not a proof",
    })
}

fn cmd_ks(cli: &Cli, prov: &Value, q: &Path, suite: usize) -> Result<Outcome, CliError> {
    let q: ExpSum = parse(read_json(q)?, "exponential sum")?;
    let h = ks_from_q(&q)?;
    let cutoff = parse_cutoff(cli, q.basis().rank(), q.basis().denominator())?;
    let win = window(cli, (-40.0, 40.0))?;
    let pair = pair_from_hb(&h, &cutoff, win)?;
    let tol = cli.tol.unwrap_or(1e-6);
    let reports: Vec<_> =
        gaussian_suite(cli.seed, suite).iter().map(|tf| check_pair(&pair, tf, tol)).collect::<Result<_, _>>()?;
    let passed = reports.iter().all(|r| r.passed());
    let report = json!({ "summary": suite_summary(&reports), "reports": reports });
    Ok(Outcome {
        files: vec![json_file("pair.json", prov, "pair", &pair)?, json_file("report.json", prov, "report", report)?],
        passed,
    })
}

fn load_spec(src: &SeriesSource) -> Result<(EtaProductSpec, Option<Exponent>), CliError> {
    match (&src.spec, &src.family) {
        (Some(p), None) => Ok((parse(read_json(p)?, "eta-product spec")?, None)),
        (None, Some(l)) => {
            let l: Exponent = l.trim().parse().map_err(|_| input(format!("bad family member {l:?}")))?;
            if l < Exponent::from_integer(-2) {
                return Err(input(format!("family member l = {l} is below -2")));
            }
            let spec = EtaProductSpec::from_divisor_list(4, &[l, Exponent::from_integer(1) - l * 2, l])?;
            Ok((spec, Some(l)))
        }
        _ => Err(input("give either a spec file or --family")),
    }
}

// Widest symmetric window the truncated series fully supplies.
fn series_window(s: &SelfDualSeries) -> (f64, f64) {
    let order = s.series().order().to_f64().unwrap_or(0.0);
    let r = 0.999 * (2.0 * order / (s.radical() as f64).sqrt()).sqrt();
    (-r, r)
}

fn fe_report(s: &SelfDualSeries, tol: f64) -> (Value, bool) {
    let mut ok = true;
    let rows: Vec<Value> = [0.8, 1.0, 1.25]
        .iter()
        .map(|y| {
            let z = Complex64::new(0.0, *y);
            match functional_equation_residual(s, z, tol) {
                Ok(r) => {
                    ok &= r <= tol;
                    json!({ "y": y, "residual": r, "verdict": if r <= tol { "pass" } else { "fail" } })
                }
                Err(e) => {
                    ok = false;
                    json!({ "y": y, "error": e.to_string(), "verdict": "inconclusive" })
                }
            }
        })
        .collect();
    (Value::Array(rows), ok)
}

fn cmd_eta(cli: &Cli, prov: &Value, src: &SeriesSource) -> Result<Outcome, CliError> {
    let (spec, _) = load_spec(src)?;
    let ord = order(cli, 50)?;
    let series = eta_product(&spec, ord)?;
    let lead = spec.leading_exponent();
    let rows: Vec<String> =
        series.terms().iter().map(|(e, c)| format!("{},{},{}", *e - lead, c.numer(), c.denom())).collect();
    let plus = fplus(&spec, ord)?;
    let mu = selfdual_measure(&plus, window(cli, series_window(&plus))?)?;
    let tol = cli.tol.unwrap_or(1e-8);
    let (fe, passed) = fe_report(&plus, tol);
    let hecke = hecke_report(&plus, (ord.to_integer() / 2).max(2));
    let report = json!({
        "spec": spec,
        "leadingExponent": lead.to_string(),
        "functionalEquation": fe,
        "hecke": {
            "nMax": hecke.n_max,
            "constant": hecke.constant,
            "firstHalfConstant": hecke.first_half_constant,
            "secondHalfConstant": hecke.second_half_constant,
            "fittedExponent": hecke.fitted_exponent,
            "degraded": hecke.degraded,
        },
        "tol": tol,
    });
    Ok(Outcome {
        files: vec![
            csv_file("series.csv", prov, "n,numerator,denominator", &rows),
            json_file("measure.json", prov, "measure", &mu)?,
            json_file("selfdual_report.json", prov, "report", report)?,
        ],
        passed,
    })
}

fn cmd_selfdual(
    cli: &Cli,
    prov: &Value,
    src: &SeriesSource,
    minus: bool,
    gaussians: usize,
) -> Result<Outcome, CliError> {
    let (spec, l) = load_spec(src)?;
    let ord = order(cli, 300)?;
    let s = match (minus, l) {
        (false, _) => fplus(&spec, ord)?,
        (true, Some(l)) => family_l(l, ord)?.2,
        (true, None) => fminus(&spec, ord)?,
    };
    let mu = selfdual_measure(&s, window(cli, series_window(&s))?)?;
    let tol = cli.tol.unwrap_or(1e-6);
    let mut suite = heights_suite(&[0.5, 1.0, 2.0])?;
    suite.extend(gaussian_suite(cli.seed, gaussians));
    let reports = check_selfdual(&mu, &suite, tol)?;
    let (fe, fe_ok) = fe_report(&s, 1e-8);
    let passed = fe_ok && reports.iter().all(|r| r.passed());
    let report = json!({
        "spec": spec,
        "sign": s.sign(),
        "atoms": mu.len(),
        "window": [mu.window().0, mu.window().1],
        "summary": suite_summary(&reports),
        "reports": reports,
        "functionalEquation": fe,
    });
    Ok(Outcome {
        files: vec![
            json_file("measure.json", prov, "measure", &mu)?,
            json_file("selfdual_report.json", prov, "report", report)?,
        ],
        passed,
    })
}

fn cmd_pair_check(cli: &Cli, prov: &Value, path: &Path, suite: usize) -> Result<Outcome, CliError> {
    let pair: FsPair = parse(unwrap_key(read_json(path)?, "pair"), "pair")?;
    let tol = cli.tol.unwrap_or(1e-6);
    let reports: Vec<_> =
        gaussian_suite(cli.seed, suite).iter().map(|tf| check_pair(&pair, tf, tol)).collect::<Result<_, _>>()?;
    let passed = reports.iter().all(|r| r.passed());
    let report = json!({ "summary": suite_summary(&reports), "reports": reports });
    Ok(Outcome { files: vec![json_file("report.json", prov, "report", report)?], passed })
}

fn cmd_spectrum(cli: &Cli, prov: &Value, path: &Path, lambdas: &[f64], y: f64, t: f64) -> Result<Outcome, CliError> {
    let h = load_hb(path)?;
    if lambdas.iter().any(|l| !l.is_finite()) || !(y > 0.0) || !(t > 0.0) {
        return Err(input("frequencies must be finite, y and T positive"));
    }
    let header = "lambda,exact_re,exact_im,numeric_re,numeric_im,abs_diff";
    let mut rows = Vec::new();
    let mut passed = true;
    if !lambdas.is_empty() {
        let basis = h.b().basis();
        let cutoff = parse_cutoff(cli, basis.rank(), basis.denominator())?;
        let exact = exact_spectrum(&h, &cutoff)?;
        let top = lambdas.iter().fold(0.0f64, |m, l| m.max(*l));
        if top > exact.cutoff_value() {
            return Err(input(format!("frequency {top} lies above the cutoff {}", exact.cutoff_value())));
        }
        let numeric = mean_values(|z| herglotz_function(&h, z), lambdas, y, t, Taper::Fejer)?;
        let tol = cli.tol.unwrap_or(1e-3);
        for (l, n) in lambdas.iter().zip(numeric) {
            let e = exact.at_value(*l);
            let d = (e - n).norm();
            passed &= d <= tol;
            let mut row = String::new();
            let _ = write!(row, "{l},{},{},{},{},{d}", e.re, e.im, n.re, n.im);
            rows.push(row);
        }
    }
    Ok(Outcome { files: vec![csv_file("spectrum.csv", prov, header, &rows)], passed })
}

fn cmd_kernel(cli: &Cli, prov: &Value, path: &Path, points: &str, w: &str, radius: f64) -> Result<Outcome, CliError> {
    let pts: Vec<Complex64> =
        points.split(';').filter(|s| !s.trim().is_empty()).map(parse_point).collect::<Result<_, _>>()?;
    let w = parse_point(w)?;
    if let Some(p) = pts.iter().chain([&w]).find(|p| p.im.abs() < 1e-9) {
        return Err(input(format!("point {p} lies on the real axis; kernel checks need Im z != 0")));
    }
    let h = load_hb(path)?;
    let ctx = KernelContext::new(h, radius)?;
    let samples: Vec<(f64, Complex64)> = ctx
        .roots()
        .iter()
        .map(|p| Ok((p.gamma, kernel_closed(&ctx, w, Complex64::new(p.gamma, 0.0))?)))
        .collect::<Result<_, Error>>()?;
    let tol = cli.tol.unwrap_or(1e-4);
    let mut passed = true;
    let mut rows = Vec::new();
    for z in &pts {
        let k = kernel_closed(&ctx, w, *z)?;
        let e_form = (kernel_e_form(&ctx, w, *z)? - k).norm() / k.norm().max(f64::MIN_POSITIVE);
        let series = kernel_series(&ctx, w, *z)?;
        let sampled = sampling_eval(&ctx, &samples, *z)?;
        let series_res = (series.corrected - k).norm();
        let sampling_res = (sampled.corrected - k).norm();
        passed &= series_res <= tol && sampling_res <= tol && e_form <= 1e-10;
        rows.push(json!({
            "z": [z.re, z.im],
            "closed": [k.re, k.im],
            "eFormRelative": e_form,
            "series": series,
            "seriesResidual": series_res,
            "seriesRawResidual": (series.raw - k).norm(),
            "sampling": sampled,
            "samplingResidual": sampling_res,
        }));
    }
    let report = json!({
        "w": [w.re, w.im],
        "radius": radius,
        "roots": ctx.roots().len(),
        "tol": tol,
        "points": rows,
    });
    Ok(Outcome { files: vec![json_file("kernel_report.json", prov, "report", report)?], passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("crystalline").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn global_flags_parse_anywhere() {
        let c = cli(&["eta", "--family", "1", "--order", "7/2", "--window", "-3", "3", "--tol", "1e-9"]);
        assert_eq!(order(&c, 1).unwrap(), Exponent::new(7, 2));
        assert_eq!(window(&c, (0.0, 1.0)).unwrap(), (-3.0, 3.0));
        assert_eq!(c.tol, Some(1e-9));
        let c = cli(&["--cutoff", "3,4", "ks", "q.json"]);
        assert_eq!(parse_cutoff(&c, 2, 1).unwrap(), Freq(vec![3, 4]));
        assert!(parse_cutoff(&c, 1, 1).is_err());
    }

    #[test]
    fn bad_flags_are_input_errors() {
        let c = cli(&["--window", "3", "1", "eta", "--family", "1"]);
        assert!(matches!(execute(&c), Err(CliError::Input(_))));
        let c = cli(&["--order", "x", "eta", "--family", "1"]);
        assert_eq!(execute(&c).unwrap_err().exit_code(), 2);
        assert!(parse_point("1;2").is_err());
        assert_eq!(parse_point(" -1, 2.5").unwrap(), Complex64::new(-1.0, 2.5));
    }

    #[test]
    fn family_eta_rows() {
        let c = cli(&["eta", "--family", "2/3", "--order", "6"]);
        let out = execute(&c).unwrap();
        let csv = &out.files[0].1;
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# {"));
        assert_eq!(lines[1], "n,numerator,denominator");
        assert_eq!(&lines[2..6], ["0,1,1", "1,-2,3", "2,-4,9", "3,-40,81"]);
        // order 6 cannot certify the functional equation to 1e-8
        assert!(!out.passed);
        assert!(execute(&cli(&["eta", "--family", "2/3"])).unwrap().passed);
    }

    #[test]
    fn provenance_omits_output_dir() {
        let a = provenance(&cli(&["--out", "x", "eta", "--family", "1"]));
        let b = provenance(&cli(&["--out", "y", "eta", "--family", "1"]));
        assert_eq!(a, b);
        assert_eq!(a["config"]["command"]["name"], "eta");
    }
}
