use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use reilly_verify::mesh::{boundary_complex, generate_shape, write_mesh, ShapeSpec};
use reilly_verify::scenario::config::{Entries, DEFAULT_REFINEMENT, MAX_REFINEMENT};
use reilly_verify::scenario::{
    paper_suite, prepare, run_batch, shape_from_params, solve, write_matrices, write_report, Prepared, RunOptions,
    ScenarioConfig,
};
use reilly_verify::Error;

const SEED_VAR: &str = "REILLY_VERIFY_SEED";
const DEFAULT_OUT: &str = "reports";

#[derive(Parser)]
#[command(name = "reilly-verify", version, about = "Verify Reilly-type eigenvalue bounds on triangle meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a builtin shape and optionally write it as a WMESH file.
    Generate(GenerateArgs),
    /// Solve the eigenvalue problems of a scenario.
    Spectrum(SpectrumArgs),
    /// Run bounds and identity checks and write reports.
    Check(CheckArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// round_sphere, ellipsoid, flat_disk, hemisphere, annulus,
    /// geodesic_sphere_in_S3, geodesic_sphere_in_H3 or spherical_cap_in_S3
    shape: String,
    #[arg(long, allow_hyphen_values = true)]
    radius: Option<String>,
    /// Comma-separated coordinates.
    #[arg(long, allow_hyphen_values = true)]
    center: Option<String>,
    #[arg(long)]
    a: Option<String>,
    #[arg(long)]
    b: Option<String>,
    #[arg(long)]
    c: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    rho: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<String>,
    #[arg(long)]
    r0: Option<String>,
    #[arg(long)]
    r1: Option<String>,
    #[arg(long, default_value_t = DEFAULT_REFINEMENT)]
    refine: u32,
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    refine: Option<u32>,
    /// Write the assembled matrices as `row col value` text.
    #[arg(long)]
    dump_matrices: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Paper,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, conflicts_with = "suite", required_unless_present = "suite")]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    suite: Option<Suite>,
    #[arg(long)]
    refine: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    dump_matrices: bool,
}

/// Exit 2: the input was rejected before any solve.
struct Usage(String);

impl From<Error> for Usage {
    fn from(e: Error) -> Self {
        Usage(e.to_string())
    }
}

fn seed() -> Result<Option<u64>, Usage> {
    match std::env::var(SEED_VAR) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Ok(s) => s.trim().parse().map(Some).map_err(|_| Usage(format!("{SEED_VAR} must be an unsigned integer, got `{s}`"))),
        Err(e) => Err(Usage(format!("{SEED_VAR}: {e}"))),
    }
}

fn options(refine: Option<u32>) -> Result<RunOptions, Usage> {
    if let Some(r) = refine.filter(|&r| r > MAX_REFINEMENT) {
        return Err(Usage(format!("--refine must be in [0, {MAX_REFINEMENT}], got {r}")));
    }
    Ok(RunOptions { refine, jitter_seed: seed()? })
}

fn out_dir(flag: &Option<PathBuf>, config: Option<&ScenarioConfig>) -> PathBuf {
    flag.clone().or_else(|| config.and_then(|c| c.output_dir.clone())).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn generate(args: &GenerateArgs) -> Result<ExitCode, Usage> {
    let mut params = BTreeMap::new();
    let given = [
        ("radius", &args.radius),
        ("center", &args.center),
        ("a", &args.a),
        ("b", &args.b),
        ("c", &args.c),
        ("rho", &args.rho),
        ("delta", &args.delta),
        ("r0", &args.r0),
        ("r1", &args.r1),
    ];
    for (key, value) in given {
        if let Some(v) = value {
            params.insert(key.to_string(), (0, v.clone()));
        }
    }
    let kind = shape_from_params(&args.shape, &Entries::from_map("arguments", &params))?;
    let mut spec = ShapeSpec::new(kind, args.refine);
    if let Some(seed) = seed()? {
        spec = spec.with_jitter(seed);
    }
    let mesh = generate_shape(&spec)?;
    let loops = if mesh.is_closed() { 0 } else { boundary_complex(&mesh)?.loops.len() };
    if let Some(path) = &args.output {
        if let Err(e) = std::fs::write(path, write_mesh(&mesh)) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return Ok(ExitCode::from(1));
        }
    }
    println!("vertices: {}", mesh.num_vertices());
    println!("triangles: {}", mesh.triangles().len());
    println!("area: {:.12}", mesh.total_area());
    println!("boundary_length: {:.12}", mesh.boundary_length());
    println!("boundary_loops: {loops}");
    Ok(ExitCode::SUCCESS)
}

fn spectrum(args: &SpectrumArgs) -> Result<ExitCode, Usage> {
    let config = ScenarioConfig::load(&args.config)?;
    let prep = prepare(&config, &options(args.refine)?)?;
    let solved = match solve(&prep) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(1));
        }
    };
    println!("scenario: {}", config.id);
    for e in &solved.spectra {
        let r = &e.result;
        let label = match r.b {
            Some(b) => format!("{:?}[b={b}]", r.problem_kind),
            None => format!("{:?}", r.problem_kind),
        };
        println!(
            "{} {}: eigenvalue_1 = {:.12} residual = {:.3e} solver = {}",
            label.to_lowercase(),
            e.operator,
            r.eigenvalue_1,
            r.residual,
            r.solver
        );
        if !r.next_eigenvalues.is_empty() {
            let next: Vec<String> = r.next_eigenvalues.iter().map(|v| format!("{v:.12}")).collect();
            println!("  next: {}", next.join(" "));
        }
        if let Some(note) = &e.note {
            println!("  note: {note}");
        }
    }
    if args.dump_matrices {
        let dir = out_dir(&args.out, Some(&config));
        match write_matrices(&dir, &config.id, &solved.system) {
            Ok(paths) => paths.iter().for_each(|p| println!("wrote {}", p.display())),
            Err(e) => {
                eprintln!("error: {e}");
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn check(args: &CheckArgs) -> Result<ExitCode, Usage> {
    let opts = options(args.refine)?;
    let configs = match (&args.config, args.suite) {
        (Some(path), _) => vec![ScenarioConfig::load(path)?],
        (None, Some(Suite::Paper)) => paper_suite(),
        (None, None) => return Err(Usage("give --config or --suite".into())),
    };
    if args.workers == Some(0) {
        return Err(Usage("--workers must be at least 1".into()));
    }
    let prepared = configs
        .iter()
        .map(|c| prepare(c, &opts).map_err(|e| Usage(format!("scenario {}: {e}", c.id))))
        .collect::<Result<Vec<Prepared>, Usage>>()?;
    let single = (configs.len() == 1).then(|| &configs[0]);
    let dir = out_dir(&args.out, single);
    let workers = args.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));

    let mut failed = false;
    for (prep, outcome) in prepared.iter().zip(run_batch(&prepared, workers)) {
        let id = &prep.config.id;
        let (report, solved) = match outcome.result {
            Ok(r) => r,
            Err(e) => {
                eprintln!("{id}: error: {e}");
                failed = true;
                continue;
            }
        };
        let written = write_report(&dir, &report, outcome.started, outcome.elapsed_seconds).and_then(|mut w| {
            if args.dump_matrices {
                w.extend(write_matrices(&dir, id, &solved.system)?);
            }
            Ok(w)
        });
        if let Err(e) = written {
            eprintln!("{id}: cannot write reports to {}: {e}", dir.display());
            failed = true;
            continue;
        }
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for s in report.bounds.iter().map(|b| b.status).chain(report.identities.iter().map(|r| r.status)) {
            *counts.entry(s.as_str()).or_default() += 1;
        }
        let summary: Vec<String> = counts.iter().map(|(k, v)| format!("{k}={v}")).collect();
        println!(
            "{id}: {} findings={} failures={} ({:.1}s)",
            summary.join(" "),
            report.findings.len(),
            report.failures.len(),
            outcome.elapsed_seconds
        );
        for f in &report.failures {
            println!("  FAILURE {} on {:?}: lhs={} rhs={}", f.id, f.domain, f.lhs, f.rhs);
        }
        failed |= !report.passed();
    }
    println!("reports written to {}", dir.display());
    Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
}


fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Spectrum(a) => spectrum(a),
        Command::Check(a) => check(a),
    };
    result.unwrap_or_else(|Usage(msg)| {
        eprintln!("error: {msg}");
        ExitCode::from(2)
    })
}
