use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use finsler_iso::decomposition::{
    extract_phi_psi, extract_theta, tabulate_phi_psi, tabulate_theta, MetricOracle, SesquiOracle,
};
use finsler_iso::geometry::{geodesic_distance, GeodesicOptions};
use finsler_iso::invariance::{
    dim2_exception_check, is_symmetry, random_unimodular, theorem_main_probe, SymmetryVerdict,
};
use finsler_iso::linalg::{derive_seed, random_unitary, rng_from_seed};
use finsler_iso::metric::{
    check_homothety_invariance, check_kaehler, check_positive_definite, eval_finsler,
    eval_sesquilinear, PdVerdict, PD_DEFAULT_TOL,
};
use finsler_iso::{Complex64, Error, Field, LinearMap, MetricKind, MetricSpec, Vector};

mod output;

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(
    name = "finsler-iso",
    version,
    about = "Isometry-invariant Finsler and Hermitean metrics"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Metric: euclidean, fubini-study, fubini-study-riemann, area,
    /// norm-quotient, lambda:EXPR, theta:EXPR, riemann:PHI;PSI,
    /// nonsym-lambda:EXPR, congruence-invariant:EXPR, inline JSON or @FILE
    #[arg(long, global = true)]
    metric: Option<String>,
    /// JSON file holding the metric object (same as --metric @FILE)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    dim: Option<usize>,
    #[arg(long, global = true, value_enum)]
    field: Option<FieldArg>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the result here instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FieldArg {
    Real,
    Complex,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Form {
    Theta,
    PhiPsi,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckKind {
    Invariance,
    Pd,
    Kaehler,
    Homothety,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate rho_g(h), and sigma_g(f, h) with --f
    Eval {
        #[arg(long, allow_hyphen_values = true)]
        g: String,
        #[arg(long, allow_hyphen_values = true)]
        h: String,
        #[arg(long, allow_hyphen_values = true)]
        f: Option<String>,
    },
    /// Tabulate the recovered theta or (phi, psi) profile
    Decompose {
        /// Number of radii
        #[arg(long, default_value_t = 8)]
        grid: usize,
        /// Number of angles in [0, pi/2]
        #[arg(long, default_value_t = 7)]
        tau_steps: usize,
        #[arg(long, value_enum)]
        form: Option<Form>,
    },
    /// Run a property check; exit 1 when it fails
    Check {
        #[arg(value_enum)]
        which: CheckKind,
        /// Homothety coefficient
        #[arg(long)]
        alpha: Option<f64>,
        /// Number of random unitaries for the invariance check
        #[arg(long, default_value_t = 20)]
        maps: usize,
        /// Number of radii for pd and kaehler
        #[arg(long, default_value_t = 32)]
        grid: usize,
    },
    /// Random non-congruences must all fail to be symmetries
    ProbeMain {
        #[arg(long, default_value_t = 100)]
        maps: usize,
        /// Check the area metric against this many random unimodular maps
        #[arg(long)]
        sl2: Option<usize>,
        #[arg(long, default_value_t = 1.1)]
        min_sv_ratio: f64,
    },
    /// Numerical geodesic distance between two points
    Distance {
        #[arg(long, allow_hyphen_values = true)]
        g: String,
        #[arg(long, allow_hyphen_values = true)]
        h: String,
        #[arg(long, default_value_t = 65)]
        vertices: usize,
        #[arg(long, default_value_t = 400)]
        iterations: usize,
        #[arg(long, default_value_t = 1)]
        restarts: usize,
        /// Write the optimized path as CSV
        #[arg(long)]
        path_out: Option<PathBuf>,
    },
}

#[derive(Debug)]
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn numeric(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_NUMERIC,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::DimensionMismatch { .. }
            | Error::FieldMismatch(..)
            | Error::NonFinite(_)
            | Error::ImaginaryInReal(_)
            | Error::InvalidDomain(_)
            | Error::InvalidSpec(_)
            | Error::InvalidArgument(_)
            | Error::Parse(_)
            | Error::Json(_) => EXIT_USAGE,
            _ => EXIT_NUMERIC,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::usage(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::usage(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Ok(n) = std::env::var("FINSLER_ISO_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                {
                    log::warn!("could not cap worker threads: {e}");
                }
            }
            _ => {
                eprintln!("error: FINSLER_ISO_THREADS must be a positive integer, got {n:?}");
                return ExitCode::from(EXIT_USAGE);
            }
        }
    }
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: &Cli) -> CliResult<u8> {
    let c = &cli.common;
    let spec = load_spec(c)?;
    match &cli.command {
        Command::Eval { g, h, f } => cmd_eval(c, &spec, g, h, f.as_deref()),
        Command::Decompose {
            grid,
            tau_steps,
            form,
        } => cmd_decompose(c, &spec, *grid, *tau_steps, *form),
        Command::Check {
            which,
            alpha,
            maps,
            grid,
        } => cmd_check(c, &spec, *which, *alpha, *maps, *grid),
        Command::ProbeMain {
            maps,
            sl2,
            min_sv_ratio,
        } => cmd_probe(c, &spec, *maps, *sl2, *min_sv_ratio),
        Command::Distance {
            g,
            h,
            vertices,
            iterations,
            restarts,
            path_out,
        } => {
            let opts = GeodesicOptions {
                n_vertices: *vertices,
                n_iterations: *iterations,
                seed: c.seed,
                restarts: *restarts,
            };
            cmd_distance(c, &spec, g, h, &opts, path_out.as_deref())
        }
    }
}

fn named_metric(text: &str) -> CliResult<Value> {
    let (family, arg) = match text.split_once(':') {
        Some((f, a)) => (f, Some(a)),
        None => (text, None),
    };
    let need = |what: &str| {
        arg.ok_or_else(|| CliError::usage(format!("metric '{family}' needs {what} after ':'")))
    };
    Ok(match family {
        "euclidean" | "fubini-study" | "fubini-study-riemann" | "norm-quotient"
            if arg.is_none() =>
        {
            json!({ "family": family })
        }
        "area" => {
            let b = match arg {
                Some(a) => a
                    .parse::<f64>()
                    .map_err(|_| CliError::usage(format!("bad area constant '{a}'")))?,
                None => 1.0,
            };
            json!({ "family": "area", "params": { "b": b } })
        }
        "lambda" => json!({ "family": "lambda", "params": { "expr": need("an expression")? } }),
        "theta" => json!({ "family": "theta", "params": { "expr": need("an expression")? } }),
        "nonsym-lambda" => {
            json!({ "family": "nonsym-lambda", "params": { "expr": need("an expression")? } })
        }
        "congruence-invariant" => {
            json!({ "family": "congruence-invariant", "params": { "vartheta": need("an expression")? } })
        }
        "riemann" => {
            let (phi, psi) = need("PHI;PSI")?
                .split_once(';')
                .ok_or_else(|| CliError::usage("riemann metric is written riemann:PHI;PSI"))?;
            json!({ "family": "riemann", "params": { "phi": phi, "psi": psi } })
        }
        _ => return Err(CliError::usage(format!("unknown metric '{text}'"))),
    })
}

fn load_spec(c: &Common) -> CliResult<MetricSpec> {
    let text = match (&c.metric, &c.config) {
        (Some(_), Some(_)) => {
            return Err(CliError::usage(
                "give either --metric or --config, not both",
            ))
        }
        (Some(m), None) => m.clone(),
        (None, Some(p)) => format!("@{}", p.display()),
        (None, None) => return Err(CliError::usage("missing --metric")),
    };
    let mut doc: Value = if let Some(path) = text.strip_prefix('@') {
        let body = fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read {path}: {e}")))?;
        serde_json::from_str(&body).map_err(|e| CliError::usage(format!("{path}: {e}")))?
    } else if text.trim_start().starts_with('{') {
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("metric JSON: {e}")))?
    } else {
        named_metric(&text)?
    };
    let obj = doc
        .as_object_mut()
        .ok_or_else(|| CliError::usage("metric JSON must be an object"))?;
    let default_dim = if obj.get("family").and_then(Value::as_str) == Some("area") {
        2
    } else {
        3
    };
    if let Some(d) = c.dim {
        obj.insert("dim".into(), json!(d));
    } else {
        obj.entry("dim").or_insert(json!(default_dim));
    }
    if let Some(f) = c.field {
        obj.insert("field".into(), json!(field_of(f)));
    }
    Ok(MetricSpec::from_json(&doc.to_string())?)
}

fn field_of(f: FieldArg) -> Field {
    match f {
        FieldArg::Real => Field::Real,
        FieldArg::Complex => Field::Complex,
    }
}

/// `1,0,2` or, for complex entries, `re:im` per entry.
fn parse_vector(text: &str, field: Field) -> CliResult<Vector> {
    let entries = text
        .split(',')
        .map(|part| {
            let part = part.trim();
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::usage(format!("bad vector entry '{part}'")))
            };
            Ok(match part.split_once(':') {
                Some((re, im)) => Complex64::new(num(re)?, num(im)?),
                None => Complex64::new(num(part)?, 0.0),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(Vector::new(field, entries)?)
}

struct Sink<'a> {
    path: Option<&'a Path>,
}

impl Sink<'_> {
    fn write(&self, body: &[u8]) -> CliResult<()> {
        match self.path {
            Some(p) => fs::write(p, body)?,
            None => io::stdout().write_all(body)?,
        }
        Ok(())
    }

    fn report(&self, format: Format, v: &Value) -> CliResult<()> {
        match format {
            Format::Json => {
                let mut s = output::to_json_string(v);
                s.push('\n');
                self.write(s.as_bytes())
            }
            Format::Csv => {
                let mut buf = Vec::new();
                output::write_csv_report(v, &mut buf)?;
                self.write(&buf)
            }
        }
    }

    fn rows<T: Serialize>(&self, format: Format, rows: &[T]) -> CliResult<()> {
        match format {
            Format::Json => {
                let v = serde_json::to_value(rows).map_err(|e| CliError::numeric(e.to_string()))?;
                self.report(Format::Json, &v)
            }
            Format::Csv => {
                let mut buf = Vec::new();
                output::write_csv_rows(rows, &mut buf)?;
                self.write(&buf)
            }
        }
    }
}

fn sink(c: &Common) -> Sink<'_> {
    Sink {
        path: c.output.as_deref(),
    }
}

fn exit_for(passed: bool) -> u8 {
    if passed {
        0
    } else {
        EXIT_FAIL
    }
}

fn cmd_eval(c: &Common, spec: &MetricSpec, g: &str, h: &str, f: Option<&str>) -> CliResult<u8> {
    let g = parse_vector(g, spec.field())?;
    let h = parse_vector(h, spec.field())?;
    let mut report = json!({ "value": eval_finsler(spec, &g, &h)? });
    if let Some(f) = f {
        let profile = spec.riemann_profile().ok_or_else(|| {
            CliError::usage(
                "--f needs a Hermitean metric (riemann family, euclidean or fubini-study)",
            )
        })?;
        let f = parse_vector(f, spec.field())?;
        let s = eval_sesquilinear(&profile, &g, &f, &h)?;
        report["sigma"] = json!([s.re, s.im]);
    }
    sink(c).report(c.format.unwrap_or(Format::Json), &report)?;
    Ok(0)
}

fn cmd_decompose(
    c: &Common,
    spec: &MetricSpec,
    grid: usize,
    tau_steps: usize,
    form: Option<Form>,
) -> CliResult<u8> {
    if spec.dim() < 2 {
        return Err(CliError::numeric("decomposition requires dim ≥ 2"));
    }
    let form = form.unwrap_or(match spec.kind() {
        MetricKind::FromRiemann(_) => Form::PhiPsi,
        _ => Form::Theta,
    });
    let format = c.format.unwrap_or(Format::Csv);
    match form {
        Form::Theta => {
            let theta = extract_theta(&MetricOracle::from_spec(spec))?;
            let rows = tabulate_theta(&theta, &spec.domain().grid(grid), tau_steps)?;
            sink(c).rows(format, &rows)?;
        }
        Form::PhiPsi => {
            let profile = spec
                .riemann_profile()
                .ok_or_else(|| CliError::usage("phi-psi form needs a Hermitean metric"))?;
            let extracted = extract_phi_psi(&SesquiOracle::from_profile(
                &profile,
                spec.dim(),
                spec.field(),
            ))?;
            let rows = tabulate_phi_psi(&extracted, &extracted.domain.grid(grid))?;
            sink(c).rows(format, &rows)?;
        }
    }
    Ok(0)
}

fn cmd_check(
    c: &Common,
    spec: &MetricSpec,
    which: CheckKind,
    alpha: Option<f64>,
    maps: usize,
    grid: usize,
) -> CliResult<u8> {
    let format = c.format.unwrap_or(Format::Json);
    let hermitean = || {
        spec.riemann_profile().ok_or_else(|| {
            CliError::usage(
                "this check needs a Hermitean metric (riemann family, euclidean or fubini-study)",
            )
        })
    };
    let (passed, report) = match which {
        CheckKind::Invariance => {
            let tol = c.tol.unwrap_or(1e-9);
            let samples = c.samples.unwrap_or(100);
            let verdicts: Vec<(LinearMap, SymmetryVerdict)> = (0..maps)
                .into_par_iter()
                .map(|k| {
                    let u =
                        random_unitary(spec.dim(), spec.field(), derive_seed(c.seed, k as u64))?;
                    let v = is_symmetry(&u, spec, samples, c.seed, tol)?;
                    Ok((u, v))
                })
                .collect::<Result<_, Error>>()?;
            let worst = verdicts
                .iter()
                .max_by(|a, b| a.1.max_deviation.total_cmp(&b.1.max_deviation));
            let passed = verdicts.iter().all(|(_, v)| v.is_symmetry);
            let max_dev = worst.map_or(0.0, |w| w.1.max_deviation);
            let mut r = json!({
                "check": "invariance",
                "passed": passed,
                "maps": maps,
                "samples": samples,
                "max_deviation": max_dev,
            });
            if let (false, Some((u, v))) = (passed, worst) {
                r["witness"] = v.to_json(spec, u);
            }
            (passed, r)
        }
        CheckKind::Pd => {
            let profile = hermitean()?;
            let rs = profile.domain.grid(grid);
            let verdicts = check_positive_definite(&profile, &rs, c.tol.unwrap_or(PD_DEFAULT_TOL))?;
            let passed = verdicts.iter().all(|v| *v == PdVerdict::PositiveDefinite);
            let rows: Vec<Value> = rs
                .iter()
                .zip(&verdicts)
                .map(|(r, v)| json!({ "r": r, "verdict": v }))
                .collect();
            (
                passed,
                json!({ "check": "pd", "passed": passed, "samples": rows }),
            )
        }
        CheckKind::Kaehler => {
            let profile = hermitean()?;
            let rs = profile.domain.grid(grid);
            let ok = check_kaehler(&profile, &rs, None, c.tol)?;
            let failures: Vec<f64> = rs
                .iter()
                .zip(&ok)
                .filter(|(_, ok)| !**ok)
                .map(|(r, _)| *r)
                .collect();
            let passed = failures.is_empty();
            (
                passed,
                json!({ "check": "kaehler", "passed": passed, "radii": rs.len(), "failures": failures }),
            )
        }
        CheckKind::Homothety => {
            let alpha = alpha.ok_or_else(|| CliError::usage("check homothety needs --alpha"))?;
            let v = check_homothety_invariance(
                spec,
                alpha,
                c.samples.unwrap_or(100),
                c.seed,
                c.tol.unwrap_or(1e-9),
            )?;
            let witness = v
                .witness
                .as_ref()
                .map(|(g, h)| json!({ "g": g.to_json_value(), "h": h.to_json_value() }));
            (
                v.invariant,
                json!({
                    "check": "homothety",
                    "alpha": alpha,
                    "passed": v.invariant,
                    "max_deviation": v.max_deviation,
                    "samples_used": v.samples_used,
                    "skipped": v.skipped,
                    "witness": witness,
                }),
            )
        }
    };
    sink(c).report(format, &report)?;
    Ok(exit_for(passed))
}

fn cmd_probe(
    c: &Common,
    spec: &MetricSpec,
    maps: usize,
    sl2: Option<usize>,
    min_sv_ratio: f64,
) -> CliResult<u8> {
    let format = c.format.unwrap_or(Format::Json);
    let tol = c.tol.unwrap_or(1e-9);
    let samples = c.samples.unwrap_or(64);
    if let Some(n) = sl2 {
        let MetricKind::AreaDim2 { b } = spec.kind() else {
            return Err(CliError::usage("--sl2 applies to the area metric only"));
        };
        if spec.field() != Field::Real {
            return Err(CliError::usage(
                "--sl2 uses real unimodular maps; pass --field real",
            ));
        }
        let mut rng = rng_from_seed(c.seed);
        let unimodular: Vec<LinearMap> = (0..n).map(|_| random_unimodular(&mut rng)).collect();
        let rep = dim2_exception_check(*b, &unimodular, samples, c.seed, tol)?;
        let two = LinearMap::identity(2, Field::Real).scale(Complex64::new(2.0, 0.0))?;
        let doubling = is_symmetry(&two, spec, samples, c.seed, tol)?;
        let report = json!({
            "probe": "dim2",
            "maps_checked": rep.maps_checked,
            "all_symmetric": rep.all_symmetric,
            "max_deviation": rep.max_deviation,
            "doubling": doubling.to_json(spec, &two),
        });
        sink(c).report(format, &report)?;
        return Ok(exit_for(rep.all_symmetric && !doubling.is_symmetry));
    }
    if spec.dim() < 3 {
        return Err(CliError::usage(
            "the probe needs dim ≥ 3; use --sl2 with the area metric for dim 2",
        ));
    }
    let rep = theorem_main_probe(spec, maps, samples, c.seed, min_sv_ratio, tol)?;
    sink(c).report(format, &rep.to_json(spec))?;
    if rep.vacuous {
        eprintln!("error: the metric vanishes on every sample; the probe is vacuous");
        return Ok(EXIT_NUMERIC);
    }
    Ok(exit_for(rep.all_failed && rep.controls_passed))
}

fn path_csv(path: &finsler_iso::geometry::Curve, complex: bool) -> CliResult<Vec<u8>> {
    let finsler_iso::geometry::Curve::Polyline { params, vertices } = path else {
        return Err(CliError::numeric("optimizer returned a non-polyline path"));
    };
    let dim = vertices[0].dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=dim).map(|i| format!("x{i}")));
    if complex {
        header.extend((1..=dim).map(|i| format!("y{i}")));
    }
    let mut buf = Vec::new();
    {
        let mut wr = csv::Writer::from_writer(&mut buf);
        wr.write_record(&header)?;
        for (t, v) in params.iter().zip(vertices) {
            let mut rec = vec![format!("{t:.16e}")];
            rec.extend(v.to_flat_reals().iter().map(|x| format!("{x:.16e}")));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
    }
    Ok(buf)
}

fn cmd_distance(
    c: &Common,
    spec: &MetricSpec,
    g: &str,
    h: &str,
    opts: &GeodesicOptions,
    path_out: Option<&Path>,
) -> CliResult<u8> {
    let g = parse_vector(g, spec.field())?;
    let h = parse_vector(h, spec.field())?;
    let geo = geodesic_distance(spec, &g, &h, opts)?;
    let csv = path_csv(&geo.path, spec.field() == Field::Complex)?;
    let format = c.format.unwrap_or(Format::Json);
    if format == Format::Csv {
        sink(c).write(&csv)?;
        return Ok(0);
    }
    let mut report = geo.to_json();
    if let Some(p) = path_out {
        fs::write(p, &csv)?;
        report["path_file"] = json!(p.display().to_string());
    }
    sink(c).report(format, &report)?;
    Ok(0)
}
