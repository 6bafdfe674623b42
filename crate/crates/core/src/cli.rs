//! Command-line driver. Exit codes: 0 pass, 1 verification failure,
//! 2 usage or input error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::correlations::{all_questions, probability_table, tables_to_csv, tables_to_json, QuestionTuple};
use crate::error::{Error, Result};
use crate::pipeline::{verify, VerifyOptions};
use crate::states::{Graph, SchmidtCoefficients};
use crate::strategies::{adversarial_embed, ideal_strategy, noise_mix, AdversarialTransform, Family, Strategy};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable holding the worker-thread count.
pub const THREADS_VAR: &str = "SELFTEST_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "selftest",
    version,
    about = "Self-testing verification for multipartite states"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Family name and parameters.
#[derive(Debug, Clone, Default, Args)]
pub struct FamilyArgs {
    /// chsh, ghz, schmidt, w, dicke or graph.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Local dimension for schmidt; coefficients are drawn from --seed when
    /// --coeffs is absent.
    #[arg(long)]
    pub d: Option<usize>,
    /// Comma-separated Schmidt weights, normalized on load.
    #[arg(long)]
    pub coeffs: Option<String>,
    /// Graph file: {"n": int, "edges": [[a, b], ...]}.
    #[arg(long)]
    pub graph: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the ideal strategy of a family.
    GenIdeal {
        #[arg(value_name = "FAMILY")]
        name: Option<String>,
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        seed: Option<u64>,
        /// White-noise weight recorded in the file.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a strategy file against a family.
    Verify {
        strategy: PathBuf,
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 1e-9)]
        fidelity_tol: f64,
        #[arg(long, default_value_t = 1e-8)]
        operator_tol: f64,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write probability tables of a strategy.
    EmitCorrelations {
        strategy: PathBuf,
        /// Comma-separated questions such as `0-0,0-1`; all by default.
        #[arg(long)]
        questions: Option<String>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-embed a strategy with junk factors and random local unitaries.
    Adversarial {
        strategy: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// One dimension for every party, or a comma-separated list.
        #[arg(long, default_value = "2")]
        junk_dims: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn require<T: Copy>(v: Option<T>, flag: &str, family: &str) -> Result<T> {
    v.ok_or_else(|| Error::parse(flag, format!("required for family {family}")))
}

fn parse_list<T: std::str::FromStr>(text: &str, field: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|e| Error::parse(field, format!("{s:?}: {e}")))
        })
        .collect()
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))
}

/// Build a family from flags. `name` overrides `args.family`.
pub fn family_from_args(name: Option<&str>, args: &FamilyArgs, seed: Option<u64>) -> Result<Family> {
    let name = name
        .or(args.family.as_deref())
        .ok_or_else(|| Error::parse("--family", "no family given"))?
        .to_ascii_lowercase();
    let family = match name.as_str() {
        "chsh" => Family::Chsh {
            theta: require(args.theta, "--theta", &name)?,
        },
        "ghz" => Family::Ghz {
            n: require(args.n, "--n", &name)?,
            theta: require(args.theta, "--theta", &name)?,
        },
        "w" => Family::W {
            n: require(args.n, "--n", &name)?,
        },
        "dicke" => Family::Dicke {
            n: require(args.n, "--n", &name)?,
            k: require(args.k, "--k", &name)?,
        },
        "schmidt" => {
            let n = require(args.n, "--n", &name)?;
            let coeffs = match (&args.coeffs, args.d) {
                (Some(text), d) => {
                    let c = SchmidtCoefficients::from_weights(&parse_list::<f64>(text, "--coeffs")?)?;
                    if d.is_some_and(|d| d != c.dim()) {
                        return Err(Error::parse("--d", format!("{} coefficients given", c.dim())));
                    }
                    c
                }
                (None, Some(d)) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(0));
                    SchmidtCoefficients::random(d, &mut rng)?
                }
                (None, None) => return Err(Error::parse("--coeffs", "schmidt needs --coeffs or --d")),
            };
            Family::Schmidt { n, coeffs }
        }
        "graph" => {
            let path = args
                .graph
                .as_ref()
                .ok_or_else(|| Error::parse("--graph", "required for family graph"))?;
            let graph = Graph::from_json(&read(path)?)?;
            if args.n.is_some_and(|n| n != graph.vertex_count()) {
                return Err(Error::parse(
                    "--n",
                    format!("graph has {} vertices", graph.vertex_count()),
                ));
            }
            Family::Graph { graph }
        }
        other => return Err(Error::parse("--family", format!("unknown family {other:?}"))),
    };
    family.validate()?;
    Ok(family)
}

fn emit(out: &Option<PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn load(path: &Path) -> Result<Strategy> {
    Strategy::from_json(&read(path)?)
}

fn gen_ideal(
    name: Option<&str>,
    args: &FamilyArgs,
    seed: Option<u64>,
    noise: f64,
    out: &Option<PathBuf>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32> {
    let mut family = match family_from_args(name, args, seed) {
        Err(Error::Graph(_)) if args.graph.is_some() => {
            let graph = Graph::from_json(&read(args.graph.as_ref().expect("checked"))?)?;
            let (relabelled, map) = graph.relabel_for_selftest()?;
            writeln!(stderr, "relabelled vertices (old -> new): {map:?}")?;
            Family::Graph { graph: relabelled }
        }
        other => other?,
    };
    family.validate()?;
    let mut s = ideal_strategy(&family)?;
    if noise != 0.0 {
        s = noise_mix(&s, noise)?;
    }
    family = s.family().cloned().unwrap_or(family);
    emit(out, &s.with_family(family).to_json(), stdout)?;
    Ok(EXIT_PASS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    path: &Path,
    args: &FamilyArgs,
    seed: Option<u64>,
    opts: VerifyOptions,
    format: Format,
    out: &Option<PathBuf>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32> {
    for (flag, v) in [
        ("--tol", opts.tol),
        ("--fidelity-tol", opts.fidelity_tol),
        ("--operator-tol", opts.operator_tol),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::parse(flag, "tolerance must be positive"));
        }
    }
    let s = load(path)?;
    let family = if args.family.is_some() {
        family_from_args(None, args, seed)?
    } else {
        s.family()
            .cloned()
            .ok_or_else(|| Error::parse("family", "file has no family header; pass --family"))?
    };
    let report = verify(&s, &family, &opts)?;
    let text = match format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    emit(out, &text, stdout)?;
    if report.passed {
        writeln!(stderr, "PASS {} (fidelity {:.12})", family.name(), report.fidelity)?;
        Ok(EXIT_PASS)
    } else {
        let failing = report.failing_labels();
        writeln!(
            stderr,
            "FAIL {}: {} failing checks, fidelity {:.12}",
            family.name(),
            failing.len(),
            report.fidelity
        )?;
        for label in failing.iter().take(20) {
            writeln!(stderr, "  {label}")?;
        }
        Ok(EXIT_FAIL)
    }
}

fn cmd_emit(
    path: &Path,
    questions: &Option<String>,
    format: Format,
    out: &Option<PathBuf>,
    stdout: &mut dyn Write,
) -> Result<i32> {
    let s = load(path)?;
    let qs = match questions {
        None => all_questions(&s.setting_counts()),
        Some(text) => text
            .split(',')
            .map(|q| parse_list::<usize>(&q.replace('-', ","), "--questions").map(QuestionTuple::new))
            .collect::<Result<_>>()?,
    };
    let tables = qs
        .iter()
        .map(|q| probability_table(&s, q))
        .collect::<Result<Vec<_>>>()?;
    let text = match format {
        Format::Json => tables_to_json(&tables),
        Format::Csv => tables_to_csv(&tables)?,
    };
    emit(out, &text, stdout)?;
    Ok(EXIT_PASS)
}

fn cmd_adversarial(path: &Path, seed: u64, junk: &str, out: &Option<PathBuf>, stdout: &mut dyn Write) -> Result<i32> {
    let s = load(path)?;
    let mut dims = parse_list::<usize>(junk, "--junk-dims")?;
    if dims.len() == 1 {
        dims = vec![dims[0]; s.party_count()];
    }
    let embedded = adversarial_embed(&s, &AdversarialTransform::new(dims, seed))?;
    emit(out, &embedded.to_json(), stdout)?;
    Ok(EXIT_PASS)
}

fn dispatch(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::GenIdeal {
            name,
            family,
            seed,
            noise,
            out,
        } => gen_ideal(name.as_deref(), &family, seed, noise, &out, stdout, stderr),
        Command::Verify {
            strategy,
            family,
            seed,
            tol,
            fidelity_tol,
            operator_tol,
            format,
            out,
        } => {
            let opts = VerifyOptions {
                tol,
                fidelity_tol,
                operator_tol,
            };
            cmd_verify(&strategy, &family, seed, opts, format, &out, stdout, stderr)
        }
        Command::EmitCorrelations {
            strategy,
            questions,
            format,
            out,
        } => cmd_emit(&strategy, &questions, format, &out, stdout),
        Command::Adversarial {
            strategy,
            seed,
            junk_dims,
            out,
        } => cmd_adversarial(&strategy, seed, &junk_dims, &out, stdout),
    }
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::parse(THREADS_VAR, format!("expected a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::parse(THREADS_VAR, e.to_string()))
}

/// Parse `args` (including the program name) and run. Returns the exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = if e.use_stderr() {
                write!(stderr, "{}", e.render())
            } else {
                write!(stdout, "{}", e.render())
            };
            return code;
        }
    };
    // Output is buffered so the command can run inside the pool.
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let result = thread_pool().and_then(|pool| pool.install(|| dispatch(cli, &mut out, &mut err)));
    let _ = stdout.write_all(&out);
    let _ = stderr.write_all(&err);
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_USAGE
        }
    }
}

pub fn run() -> i32 {
    run_with(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr())
}
