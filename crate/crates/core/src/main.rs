use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lattice_ot::functionals::{build_catalog, CatalogEntry, EntropyFunction, ScalarConcave, ScalarConvex};
use lattice_ot::io::{load_scenario, run_suite, write_trajectory_csv, RunOptions, SuiteReport, Verdict};

#[derive(Parser)]
#[command(name = "lattice-ot", version, about = "Comparison principles for discrete optimal transport")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Overrides the seed of the scenario file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides every tolerance of the scenario file.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads (LATTICE_OT_JOBS takes precedence).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// JSON report path; a CSV summary is written next to it.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the transport problems of a scenario file.
    Solve { file: PathBuf },
    /// Run the functional property checks of a scenario file.
    Check { file: PathBuf },
    /// Run the potential comparison scenarios of a scenario file.
    VerifyPotentials { file: PathBuf },
    /// Run the proximal-step scenarios of a scenario file.
    VerifyJko {
        file: PathBuf,
        /// CSV of (scenario, step, atom, mass) for every flow scenario.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Run every scenario of a file.
    Suite { file: PathBuf },
    /// List the catalog functionals with their flags.
    Catalog,
}

fn catalog_examples() -> Vec<CatalogEntry> {
    use CatalogEntry::*;
    vec![
        Quadratic { a: vec![vec![2.0, -1.0], vec![-1.0, 2.0]], b: None },
        ConvexDiff { f: ScalarConvex::Square, i: 0, j: 1, dim: 2 },
        ConcaveOfSum { g: ScalarConcave::NegSquare, weights: vec![1.0, 1.0] },
        ConvexOfSum { g: ScalarConvex::Square, weights: vec![1.0, 1.0] },
        SupCoord { dim: 2, indices: None },
        MinCoord { dim: 2 },
        Dirichlet { dim: 3, edges: vec![(0, 1, 1.0), (1, 2, 1.0)] },
        Gagliardo { points: vec![vec![0.0], vec![0.5], vec![1.0]], s: 0.5, p: 2.0 },
        InternalEnergy { f: EntropyFunction::Boltzmann, m: vec![1.0, 1.0] },
        Kl { m: vec![1.0, 1.0] },
        Linear { mu: vec![1.0, -1.0] },
        SquaredNorm { dim: 2, weight: 1.0 },
        IndicatorBox { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] },
        IndicatorSimplex { dim: 2, mass: 1.0, tol: 1e-9 },
    ]
}

fn print_catalog() -> ExitCode {
    for entry in catalog_examples() {
        let f = build_catalog::<f64>(&entry).expect("catalog examples are valid");
        let descriptor = serde_json::to_string(&entry).expect("descriptor serializes");
        let flags = serde_json::to_string(&f.flags).expect("flags serialize");
        println!("{:<28} dim={} {flags}\n    {descriptor}", f.name, f.dim);
    }
    ExitCode::SUCCESS
}

fn write_outputs(report: &SuiteReport, path: &Path) -> std::io::Result<()> {
    report.write_json(path)?;
    report.write_csv(&path.with_extension("csv"))
}

fn write_trajectories(report: &SuiteReport, path: &Path) -> std::io::Result<()> {
    let mut out = Vec::new();
    let mut first = true;
    for r in &report.results {
        let Some(traj) = &r.trajectory else { continue };
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, traj).map_err(std::io::Error::other)?;
        let text = String::from_utf8(buf).expect("csv writes UTF-8");
        for (k, line) in text.lines().enumerate() {
            if k == 0 {
                if first {
                    out.push(format!("scenario,{line}"));
                    first = false;
                }
            } else {
                out.push(format!("{},{line}", r.index));
            }
        }
    }
    std::fs::write(path, out.join("\n") + "\n")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (file, only, trajectory): (PathBuf, Vec<&'static str>, Option<PathBuf>) = match cli.command {
        Command::Catalog => return print_catalog(),
        Command::Solve { file } => (file, vec!["ot_solve"], None),
        Command::Check { file } => (file, vec!["functional_check"], None),
        Command::VerifyPotentials { file } => (file, vec!["potential_comparison"], None),
        Command::VerifyJko { file, trajectory } => (file, vec!["jko_check"], trajectory),
        Command::Suite { file } => (file, Vec::new(), None),
    };
    let loaded = match load_scenario(&file) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let opts = RunOptions { seed: cli.global.seed, tol: cli.global.tol, jobs: cli.global.jobs, only };
    let report = run_suite(&loaded, &opts);
    for r in &report.results {
        let label = r.name.clone().unwrap_or_else(|| format!("#{}", r.index));
        let verdict = serde_json::to_value(r.verdict).expect("verdict serializes");
        let mut line = format!("{:<14} {:<24} {label}", verdict.as_str().unwrap_or("?"), r.type_tag);
        if let Some(e) = &r.error {
            line.push_str(&format!("  ({e})"));
        }
        println!("{line}");
    }
    let c = &report.counts;
    println!(
        "{} scenarios: {} pass, {} fail, {} inconclusive, {} not applicable, {} error",
        c.total, c.pass, c.fail, c.inconclusive, c.not_applicable, c.error
    );
    if let Some(path) = &cli.global.report {
        if let Err(e) = write_outputs(&report, path) {
            eprintln!("error: cannot write report: {e}");
            return ExitCode::from(2);
        }
    }
    if let Some(path) = &trajectory {
        if let Err(e) = write_trajectories(&report, path) {
            eprintln!("error: cannot write trajectory: {e}");
            return ExitCode::from(2);
        }
    }
    debug_assert!(report.results.iter().all(|r| r.verdict != Verdict::Error || r.error.is_some()));
    ExitCode::from(report.exit_code() as u8)
}
