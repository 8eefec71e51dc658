//! Command-line front end: one JSON envelope per command on stdout,
//! diagnostics on stderr, JSON-lines for fuzz reports.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use su2_mathieu::expand::{FiniteFunction, PowerExpander};
use su2_mathieu::format::{
    function_from_json, function_to_json, index_to_json, membership_to_json, parse_index_triple, product_from_json,
    product_to_json, SCHEMA_VERSION,
};
use su2_mathieu::haar::integrate_product;
use su2_mathieu::hull::{origin_certificate, vanishing_threshold, SupportHull};
use su2_mathieu::lab::{
    classify_instance, fuzz, gauss_to_string, legendre_moment_scan, render_suite, value_json, verify_suite,
    FuzzConfig,
};
use su2_mathieu::numeric::{mc_integral, McIntegrand};
use su2_mathieu::scalar::{parse_rational, GaussRational, HalfInt, Rational};
use su2_mathieu::wigner::MatrixElementIndex;
use su2_mathieu::Error;

const EXIT_INPUT: u8 = 2;
const EXIT_NO_THRESHOLD: u8 = 3;
const EXIT_VIOLATION: u8 = 4;
const EXIT_VERIFY_FAILED: u8 = 5;

#[derive(Parser)]
#[command(name = "su2-mathieu", version, about = "Exact Haar integrals on SU(2) and convex-hull vanishing checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact integral of a product of matrix elements.
    Integrate {
        /// Product file (`-` for stdin).
        file: PathBuf,
        /// Also estimate by Monte Carlo with this many samples.
        #[arg(long)]
        mc: Option<u64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Exact integrals of f^P (or f^P·h) for P = 1..=pmax.
    PowerScan {
        /// Function file (`-` for stdin).
        file: PathBuf,
        #[arg(long)]
        pmax: u32,
        /// Extra factor `l,a,b`, e.g. `1,-1,-1`.
        #[arg(long, allow_hyphen_values = true)]
        with_h: Option<String>,
        #[arg(long)]
        mc: Option<u64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Whether the origin lies in the convex hull of the weights, with a certificate.
    Hull { file: PathBuf },
    /// Least P₀ with ∫ f^P·h dg = 0 guaranteed for all P ≥ P₀.
    Threshold {
        file: PathBuf,
        /// The factor `l,a,b`.
        #[arg(long, allow_hyphen_values = true)]
        h: String,
    },
    /// Seeded random instances checked against the proven direction.
    Fuzz {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        first_trial: u64,
        #[arg(long, default_value = "2")]
        lmax: String,
        #[arg(long, default_value_t = 4)]
        kmax: usize,
        #[arg(long, default_value_t = 12)]
        pmax: u32,
        /// Probability that a trial draws a three-term rank-2 support.
        #[arg(long, default_value_t = 0.0)]
        rank2_bias: f64,
        /// JSON-lines report path; without it the report goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Moments ½∫₋₁¹ (Σ A_ℓ P_ℓ)^P dx; coefficients as `l=A`, e.g. `2=1/2`.
    LegendreScan {
        #[arg(long = "coeff", required = true)]
        coeffs: Vec<String>,
        #[arg(long)]
        pmax: u32,
    },
    /// Runs the built-in verification suite.
    Verify,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::PreconditionViolation(_) => EXIT_NO_THRESHOLD,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn input_failure(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

fn read_json(path: &Path) -> Result<Value, Failure> {
    let mut text = String::new();
    if path == Path::new("-") {
        io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| input_failure(format!("stdin: {e}")))?;
    } else {
        text = std::fs::read_to_string(path).map_err(|e| input_failure(format!("{}: {e}", path.display())))?;
    }
    serde_json::from_str(&text).map_err(|e| input_failure(format!("{}: invalid JSON: {e}", path.display())))
}

fn read_function(path: &Path) -> Result<FiniteFunction, Failure> {
    let f = function_from_json(&read_json(path)?)?;
    if f.is_empty() {
        return Err(input_failure("terms: at least one term is required"));
    }
    Ok(f)
}

fn envelope(command: &str, input: Value, result: Value, started: Instant) -> Value {
    json!({
        "schema": SCHEMA_VERSION,
        "command": command,
        "input": input,
        "result": result,
        "elapsed_ms": started.elapsed().as_millis() as u64,
    })
}

fn print_json(v: &Value) {
    // A reader that closed the pipe early (`| head`) is not an error.
    let _ = writeln!(io::stdout().lock(), "{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn cmd_integrate(file: &Path, mc: Option<u64>, seed: u64) -> Result<Value, Failure> {
    let started = Instant::now();
    let (spec, h) = product_from_json(&read_json(file)?)?;
    let value = integrate_product(&spec, h.as_ref());
    let mut result = value_json(&value);
    if let Some(samples) = mc {
        eprintln!("seed: {seed}");
        result["numeric"] = mc_integral(&McIntegrand::Product(spec.clone(), h.clone()), samples, seed)?.to_json();
    }
    let mut doc = envelope("integrate", product_to_json(&spec, h.as_ref()), result, started);
    if mc.is_some() {
        doc["seed"] = json!(seed);
    }
    Ok(doc)
}

fn cmd_power_scan(file: &Path, pmax: u32, with_h: Option<&str>, mc: Option<u64>, seed: u64) -> Result<Value, Failure> {
    let started = Instant::now();
    if pmax == 0 {
        return Err(input_failure("--pmax must be at least 1"));
    }
    let f = read_function(file)?;
    let h = with_h.map(parse_index_triple).transpose()?;
    let expander = PowerExpander::global();
    let mut rows = Vec::with_capacity(pmax as usize);
    for p in 1..=pmax {
        let value = match &h {
            Some(h) => expander.power_integral_with_witness(&f, p, h),
            None => expander.power_integral(&f, p),
        };
        let mut row = json!({ "p": p, "value": value_json(&value) });
        if let Some(samples) = mc {
            let est = mc_integral(&McIntegrand::Power(f.clone(), p, h.clone()), samples, seed)?;
            row["numeric"] = est.to_json();
        }
        rows.push(row);
    }
    let mut input = json!({ "function": function_to_json(&f), "pmax": pmax });
    if let Some(h) = &h {
        input["h"] = index_to_json(h);
    }
    let mut doc = envelope("power-scan", input, json!({ "scan": rows }), started);
    if mc.is_some() {
        doc["seed"] = json!(seed);
        eprintln!("seed: {seed}");
    }
    Ok(doc)
}

fn cmd_hull(file: &Path) -> Result<Value, Failure> {
    let started = Instant::now();
    let f = read_function(file)?;
    let hull = SupportHull::of_function(&f)?;
    let membership = origin_certificate(&hull);
    let mut result = membership_to_json(hull.points(), &membership);
    result["case"] = json!(classify_instance(&f).to_string());
    Ok(envelope("hull", function_to_json(&f), result, started))
}

fn cmd_threshold(file: &Path, h: &str) -> Result<Value, Failure> {
    let started = Instant::now();
    let f = read_function(file)?;
    let h: MatrixElementIndex = parse_index_triple(h)?;
    let hull = SupportHull::of_function(&f)?;
    let threshold = vanishing_threshold(&hull, &h.weight()).map_err(|e| match e {
        Error::PreconditionViolation(_) => Failure {
            code: EXIT_NO_THRESHOLD,
            message: "origin lies in the support hull: no finite threshold guaranteed".into(),
        },
        other => other.into(),
    })?;
    let membership = origin_certificate(&hull);
    let input = json!({ "function": function_to_json(&f), "h": index_to_json(&h) });
    let result = json!({
        "threshold": threshold,
        "hull": membership_to_json(hull.points(), &membership),
    });
    Ok(envelope("threshold", input, result, started))
}

struct FuzzArgs {
    seed: u64,
    trials: u64,
    first_trial: u64,
    lmax: String,
    kmax: usize,
    pmax: u32,
    rank2_bias: f64,
    out: Option<PathBuf>,
}

fn cmd_fuzz(args: FuzzArgs) -> Result<(Option<Value>, u8), Failure> {
    let started = Instant::now();
    let l_max: HalfInt = args
        .lmax
        .parse()
        .map_err(|e: Error| input_failure(format!("--lmax: {e}")))?;
    let cfg = FuzzConfig {
        seed: args.seed,
        trials: args.trials,
        first_trial: args.first_trial,
        l_max,
        k_max: args.kmax,
        p_max: args.pmax,
        rank2_bias: args.rank2_bias,
        ..Default::default()
    };
    cfg.validate()?;
    eprintln!("seed: {}", cfg.seed);
    // Open the report file before the run so an unwritable path fails fast.
    let sink = match &args.out {
        Some(path) => Some(
            File::create(path).map_err(|e| input_failure(format!("--out {}: {e}", path.display())))?,
        ),
        None => None,
    };
    let run = fuzz(&cfg)?;
    let write_err = |e: io::Error| input_failure(format!("writing report: {e}"));
    let code = if run.summary.violations > 0 {
        if let Some(bad) = run.reports.last() {
            eprintln!("violation: {}", bad.to_json());
        }
        EXIT_VIOLATION
    } else {
        0
    };
    match sink {
        Some(file) => {
            run.write_jsonl(BufWriter::new(file)).map_err(write_err)?;
            let input = json!({
                "seed": cfg.seed,
                "trials": cfg.trials,
                "first_trial": cfg.first_trial,
                "lmax": cfg.l_max.to_string(),
                "kmax": cfg.k_max,
                "pmax": cfg.p_max,
                "rank2_bias": cfg.rank2_bias,
                "out": args.out.as_ref().map(|p| p.display().to_string()),
            });
            let mut doc = envelope("fuzz", input, run.summary.to_json(), started);
            doc["seed"] = json!(cfg.seed);
            Ok((Some(doc), code))
        }
        None => {
            run.write_jsonl(io::stdout().lock()).map_err(write_err)?;
            Ok((None, code))
        }
    }
}

fn parse_legendre_coeff(s: &str) -> Result<(u32, GaussRational), Failure> {
    let (l, a) = s
        .split_once('=')
        .ok_or_else(|| input_failure(format!("--coeff {s:?}: expected l=A")))?;
    let l: u32 = l
        .trim()
        .parse()
        .map_err(|_| input_failure(format!("--coeff {s:?}: degree must be a nonnegative integer")))?;
    let a = a.trim();
    let z = if let Some(im) = a.strip_suffix('i') {
        let im = if im.is_empty() { "1" } else if im == "-" { "-1" } else { im };
        GaussRational::new(Rational::from_integer(0.into()), parse_rational(im)?)
    } else {
        GaussRational::new(parse_rational(a)?, Rational::from_integer(0.into()))
    };
    Ok((l, z))
}

fn cmd_legendre_scan(coeffs: &[String], pmax: u32) -> Result<Value, Failure> {
    let started = Instant::now();
    let mut map = BTreeMap::new();
    for c in coeffs {
        let (l, a) = parse_legendre_coeff(c)?;
        if map.insert(l, a).is_some() {
            return Err(input_failure(format!("--coeff: degree {l} given twice")));
        }
    }
    let scan = legendre_moment_scan(&map, pmax)?;
    let input = json!({
        "coeffs": map.iter().map(|(l, a)| json!({ "l": l, "coeff": gauss_to_string(a) })).collect::<Vec<_>>(),
        "pmax": pmax,
    });
    let moments: Vec<Value> = scan
        .moments
        .iter()
        .enumerate()
        .map(|(i, m)| json!({ "p": i + 1, "moment": gauss_to_string(m) }))
        .collect();
    Ok(envelope(
        "legendre-scan",
        input,
        json!({ "moments": moments, "first_nonzero": scan.first_nonzero }),
        started,
    ))
}

fn cmd_verify() -> (Value, u8) {
    let started = Instant::now();
    let report = verify_suite();
    eprint!("{}", render_suite(&report));
    let code = if report.passed() {
        0
    } else {
        eprintln!("failed items: {}", report.failed_items().join(", "));
        EXIT_VERIFY_FAILED
    };
    (envelope("verify", Value::Null, report.to_json(), started), code)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Integrate { file, mc, seed } => print_json(&cmd_integrate(&file, mc, seed)?),
        Command::PowerScan {
            file,
            pmax,
            with_h,
            mc,
            seed,
        } => print_json(&cmd_power_scan(&file, pmax, with_h.as_deref(), mc, seed)?),
        Command::Hull { file } => print_json(&cmd_hull(&file)?),
        Command::Threshold { file, h } => print_json(&cmd_threshold(&file, &h)?),
        Command::Fuzz {
            seed,
            trials,
            first_trial,
            lmax,
            kmax,
            pmax,
            rank2_bias,
            out,
        } => {
            let (doc, code) = cmd_fuzz(FuzzArgs {
                seed,
                trials,
                first_trial,
                lmax,
                kmax,
                pmax,
                rank2_bias,
                out,
            })?;
            if let Some(doc) = doc {
                print_json(&doc);
            }
            return Ok(code);
        }
        Command::LegendreScan { coeffs, pmax } => print_json(&cmd_legendre_scan(&coeffs, pmax)?),
        Command::Verify => {
            let (doc, code) = cmd_verify();
            print_json(&doc);
            return Ok(code);
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
