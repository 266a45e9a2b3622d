mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cxhyp::asymptotics::sweep_row;
use cxhyp::geodesic::{decompose, normal_form};
use cxhyp::group::{octagon_group, octagon_relation_residual, word_ball, WordBallConfig};
use cxhyp::io::{element_document, generators_document, read_element, read_generators};
use cxhyp::linalg::{random_element, random_real_element, MEMBERSHIP_TOL};
use cxhyp::series::{inner_product_geodesic, theta_geodesic, theta_point};
use cxhyp::{BallPoint, ElementSet, Error, GroupElement, HyperbolicDecomposition, SeriesParams};
use num_complex::Complex64;
use serde::Serialize;

use output::{csv_preamble, num, Envelope, Sink};

#[derive(Parser)]
#[command(name = "cxhyp", version, about = "Complex hyperbolic ball experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose a hyperbolic element read from a matrix file.
    NormalForm(NormalFormArgs),
    /// J2 integral against its asymptotes over a range of k.
    Sweep(SweepArgs),
    /// Evaluate a truncated Poincare series.
    Series(SeriesArgs),
    /// Enumerate a word ball of a generator set.
    Enum(EnumArgs),
    /// Write a pseudorandom group element as a matrix file.
    RandomElement(RandomArgs),
    /// Write the genus-2 octagon generators as a generator file.
    Octagon(OctagonArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct OutArgs {
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NormalFormArgs {
    matrix: PathBuf,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Serialize)]
struct SweepArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    lambda: f64,
    #[arg(long = "k-min")]
    k_min: u32,
    #[arg(long = "k-max")]
    k_max: u32,
    #[arg(long = "k-step", default_value_t = 1, conflicts_with = "geometric")]
    k_step: u32,
    /// Multiply k by this factor between rows instead of stepping.
    #[arg(long)]
    geometric: Option<f64>,
    /// Gauss-Legendre order per panel.
    #[arg(long = "quad-order", default_value_t = 32)]
    quad_order: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[serde(skip)]
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SeriesKind {
    /// Theta_w(z).
    Point,
    /// Theta_C(z) over the axis of the element.
    Geodesic,
    /// (Theta_C, Theta_C).
    Inner,
}

#[derive(Args, Serialize)]
struct SeriesArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: u32,
    #[arg(long, value_enum, default_value_t = SeriesKind::Point)]
    kind: SeriesKind,
    /// Cyclic group of the normal form with this lambda (unless --gens).
    #[arg(long, default_value_t = 2.0)]
    lambda: f64,
    /// Generator file; the first generator supplies the axis.
    #[arg(long)]
    gens: Option<PathBuf>,
    /// Power range |m| <= trunc, or word length with --gens.
    #[arg(long, visible_alias = "L", default_value_t = 6)]
    trunc: u32,
    /// Point z as re,im pairs: `--z 0.1,0.2` for n=1.
    #[arg(long, allow_hyphen_values = true)]
    z: Option<String>,
    /// Centre w for `--kind point`, same syntax as --z.
    #[arg(long, allow_hyphen_values = true)]
    w: Option<String>,
    /// Axis nodes (raised to the sqrt((n+1)k) floor if smaller).
    #[arg(long = "quad-order", default_value_t = 0)]
    quad_order: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[serde(skip)]
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Serialize)]
struct EnumArgs {
    #[arg(long)]
    gens: PathBuf,
    #[arg(long, visible_alias = "L", default_value_t = 3)]
    trunc: usize,
    #[serde(skip)]
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Serialize)]
struct RandomArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    scale: f64,
    /// Conjugate the normal form with this lambda by a random real element,
    /// giving a hyperbolic element with real endpoints.
    #[arg(long)]
    lambda: Option<f64>,
    #[serde(skip)]
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct OctagonArgs {
    #[command(flatten)]
    out: OutArgs,
}

/// Failure with its exit code: 1 usage/parse, 2 precondition, 3 convergence.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Json(_) | Error::Io(_) | Error::NotSquare { .. } | Error::DimensionMismatch { .. } => 1,
            Error::EigenNoConvergence { .. } | Error::EigenResidual { .. } | Error::QuadratureCap { .. } => 3,
            Error::NotHyperbolic(_) => {
                return Self { code: 2, message: format!("not hyperbolic: {e}") };
            }
            _ => 2,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::usage(e.to_string())
    }
}

type Run = Result<(), Failure>;

fn parse_point(s: &str, n: usize) -> Result<BallPoint, Failure> {
    let xs: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::usage(format!("bad point {s:?}: {e}")))?;
    if xs.len() != 2 * n {
        return Err(Failure::usage(format!("point needs {} numbers (re,im per coordinate), got {}", 2 * n, xs.len())));
    }
    Ok(BallPoint::new(xs.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect())?)
}

fn normal_form_cmd(args: &NormalFormArgs) -> Run {
    let g = read_element(&args.matrix, MEMBERSHIP_TOL)?;
    let dec = decompose(&g)?;
    #[derive(Serialize)]
    struct Config<'a> {
        matrix: &'a std::path::Path,
    }
    let config = Config { matrix: &args.matrix };
    Sink::open(args.out.out.as_deref())?.json(&Envelope {
        version: cxhyp::VERSION,
        command: "normal-form",
        config: &config,
        result: &dec,
    })?;
    Ok(())
}

fn sweep_ks(args: &SweepArgs) -> Result<Vec<u32>, Failure> {
    if args.k_min > args.k_max {
        return Err(Failure::usage(format!("empty k range {}..{}", args.k_min, args.k_max)));
    }
    let mut ks = vec![args.k_min];
    match args.geometric {
        Some(r) if r.is_nan() || r <= 1.0 => return Err(Failure::usage("--geometric needs a factor > 1")),
        Some(r) => loop {
            let last = *ks.last().unwrap();
            let next = ((last as f64 * r).round() as u32).max(last + 1);
            if next > args.k_max {
                break;
            }
            ks.push(next);
        },
        None => {
            if args.k_step == 0 {
                return Err(Failure::usage("--k-step must be positive"));
            }
            while let Some(next) = ks.last().unwrap().checked_add(args.k_step).filter(|&k| k <= args.k_max) {
                ks.push(next);
            }
        }
    }
    Ok(ks)
}

fn sweep_cmd(args: &SweepArgs) -> Run {
    let ks = sweep_ks(args)?;
    let mut sink = Sink::open(args.out.out.as_deref())?;
    match args.format {
        Format::Csv => {
            csv_preamble(&mut sink, "sweep", args)?;
            sink.line("n,k,lambda,j2,asymptote,theorem_value,ratio,residual")?;
            for k in ks {
                let r = sweep_row(args.n, k, args.lambda, args.quad_order)?;
                sink.line(&format!(
                    "{},{},{},{},{},{},{},{}",
                    r.n,
                    r.k,
                    num(r.lambda),
                    num(r.j2),
                    num(r.asymptote),
                    num(r.theorem_value),
                    num(r.ratio),
                    num(r.residual)
                ))?;
            }
        }
        Format::Json => {
            // JSON is a single document, so rows are collected first
            let mut rows = Vec::with_capacity(ks.len());
            let mut failure = None;
            for k in ks {
                match sweep_row(args.n, k, args.lambda, args.quad_order) {
                    Ok(r) => rows.push(r),
                    Err(e) => {
                        failure = Some(Failure::from(e));
                        break;
                    }
                }
            }
            sink.json(&Envelope {
                version: cxhyp::VERSION,
                command: "sweep",
                config: args,
                result: &rows,
            })?;
            if let Some(f) = failure {
                return Err(f);
            }
        }
    }
    Ok(())
}

/// Axis data and element set for `series`.
fn series_group(args: &SeriesArgs) -> Result<(HyperbolicDecomposition, ElementSet), Failure> {
    match &args.gens {
        Some(path) => {
            let gens = read_generators(path, MEMBERSHIP_TOL)?;
            if gens[0].n() != args.n {
                return Err(Failure::usage(format!("generators have n = {}, --n is {}", gens[0].n(), args.n)));
            }
            let dec = decompose(&gens[0])?;
            let ball = word_ball(&gens, WordBallConfig::new(args.trunc as usize))?;
            Ok((dec, ElementSet::from_ball(&ball)))
        }
        None => {
            let g = normal_form(args.lambda, &vec![1.0; args.n.saturating_sub(1)])?;
            let dec = decompose(&g)?;
            let set = ElementSet::cyclic(&g, args.trunc);
            Ok((dec, set))
        }
    }
}

fn series_cmd(args: &SeriesArgs) -> Run {
    if args.format != Format::Json {
        return Err(Failure::usage("series writes JSON only"));
    }
    if args.n == 0 {
        return Err(Failure::usage("--n must be positive"));
    }
    let params = SeriesParams::new(args.n, args.k)?.with_quad_points(args.quad_order);
    let z = match &args.z {
        Some(s) => parse_point(s, args.n)?,
        None => BallPoint::origin(args.n),
    };
    let (dec, set) = series_group(args)?;
    let result = match args.kind {
        SeriesKind::Point => {
            let w = match &args.w {
                Some(s) => parse_point(s, args.n)?,
                None => BallPoint::origin(args.n),
            };
            theta_point(&w, &z, &params, &set)?
        }
        SeriesKind::Geodesic => theta_geodesic(&z, &dec, &params, &set)?,
        // the inner product sums over the group in model coordinates
        SeriesKind::Inner => inner_product_geodesic(&dec, &params, &set.conjugated(&dec.a_gamma))?.total,
    };
    Sink::open(args.out.out.as_deref())?.json(&Envelope {
        version: cxhyp::VERSION,
        command: "series",
        config: args,
        result: &result,
    })?;
    if result.converged == Some(false) {
        return Err(Failure {
            code: 3,
            message: format!(
                "series not converged: tail estimate {:.3e} against |value| {:.3e}",
                result.abs_tail_estimate,
                result.value.norm()
            ),
        });
    }
    Ok(())
}

fn enum_cmd(args: &EnumArgs) -> Run {
    let gens = read_generators(&args.gens, MEMBERSHIP_TOL)?;
    let ball = word_ball(&gens, WordBallConfig::new(args.trunc))?;
    Sink::open(args.out.out.as_deref())?.json(&Envelope {
        version: cxhyp::VERSION,
        command: "enum",
        config: args,
        result: &ball,
    })?;
    Ok(())
}

fn random_cmd(args: &RandomArgs) -> Run {
    if args.n == 0 {
        return Err(Failure::usage("--n must be positive"));
    }
    let g: GroupElement = match args.lambda {
        Some(lambda) => {
            let a = random_real_element(args.seed, args.scale, args.n);
            let g0 = normal_form(lambda, &vec![1.0; args.n - 1])?;
            &(&a * &g0) * &a.inverse()
        }
        None => random_element(args.seed, args.scale, args.n),
    };
    Sink::open(args.out.out.as_deref())?.json(&element_document(&g))?;
    Ok(())
}

fn octagon_cmd(args: &OctagonArgs) -> Run {
    let gens = octagon_group();
    // only the four side pairings; inverses are added by enumeration
    let doc = generators_document(&gens[..4]);
    let residual = octagon_relation_residual(&gens);
    if residual > 1e-10 {
        return Err(Failure { code: 2, message: format!("relation residual {residual:.3e}") });
    }
    Sink::open(args.out.out.as_deref())?.json(&doc)?;
    Ok(())
}

fn configure_threads() -> Run {
    let Ok(v) = std::env::var("CXHYP_THREADS") else {
        return Ok(());
    };
    let threads: usize = v
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Failure::usage(format!("CXHYP_THREADS must be a positive integer (got {v:?})")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::usage(e.to_string()))
}

fn run(cli: Cli) -> Run {
    configure_threads()?;
    match &cli.command {
        Command::NormalForm(a) => normal_form_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Series(a) => series_cmd(a),
        Command::Enum(a) => enum_cmd(a),
        Command::RandomElement(a) => random_cmd(a),
        Command::Octagon(a) => octagon_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
