//! Thin command-line front end over the library: plan a scenario, run a
//! benchmark suite, export a distance field, or generate a suite.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use msplan::bench::{export_result, run_benchmark, PlannerKind};
use msplan::env::SignedDistanceField;
use msplan::error::{Error, Result};
use msplan::scenario::{generate_suite, Scenario, SuiteSpec};

#[derive(Parser)]
#[command(name = "msplan", about = "Trajectory planning on Gaussian-process factor graphs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a single scenario and print the outcome.
    Plan {
        /// Scenario file (TOML).
        scenario: PathBuf,
        /// Planner to run.
        #[arg(long, default_value = "ms2mp")]
        planner: PlannerKind_,
        /// Directory for the trajectory and summary files.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Additionally export an interpolated trajectory at this factor.
        #[arg(long)]
        upsample: Option<usize>,
    },
    /// Run planners over a suite (a directory of scenario files, or a
    /// scenario file with a [suite] table) and print the report table.
    Bench {
        /// Suite directory or scenario file.
        suite: PathBuf,
        /// Comma-separated planner list.
        #[arg(long, value_delimiter = ',', default_values_t = vec![
            PlannerKind_(PlannerKind::Ms2mp),
            PlannerKind_(PlannerKind::Ms2mpNoComp),
            PlannerKind_(PlannerKind::Batch),
            PlannerKind_(PlannerKind::BatchNoIntp),
        ])]
        planners: Vec<PlannerKind_>,
        /// Overrides the suite seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for report.json / report.txt.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the scenario's signed distance field and write it as text.
    Sdf {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a seeded random scenario suite.
    GenSuite {
        #[arg(long, default_value_t = 24)]
        count: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Clap-friendly wrapper so planner names parse with library errors.
#[derive(Clone, Copy, Debug, PartialEq)]
struct PlannerKind_(PlannerKind);

impl std::str::FromStr for PlannerKind_ {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.parse().map(PlannerKind_)
    }
}

impl std::fmt::Display for PlannerKind_ {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.0.name())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Plan { scenario, planner, out, upsample } => {
            let scenario = Scenario::load(&scenario)?;
            let problem = scenario.problem()?;
            let result = planner.0.run(&problem, &scenario.config)?;
            println!(
                "{}: converged={} collision_free={} iterations={} wall_time={:.4}s objective={:.6}",
                scenario.name,
                result.converged,
                result.collision_free,
                result.iterations,
                result.wall_time,
                result.objective_history.last().copied().unwrap_or(f64::NAN),
            );
            if let Some(dir) = out {
                let name = format!("{}_{}", scenario.name, planner.0.name());
                export_result(&result, &dir, &name, upsample)?;
                println!("wrote {}/{}.traj.csv", dir.display(), name);
            }
            Ok(())
        }
        Command::Bench { suite, planners, seed, out } => {
            let scenarios = load_suite(&suite, seed)?;
            let planners: Vec<PlannerKind> = planners.iter().map(|p| p.0).collect();
            let report = run_benchmark(&scenarios, &planners)?;
            print!("{}", report.table());
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                let json_path = dir.join("report.json");
                std::fs::write(&json_path, report.to_json()?).map_err(|e| Error::io(&json_path, e))?;
                let txt_path = dir.join("report.txt");
                std::fs::write(&txt_path, report.table()).map_err(|e| Error::io(&txt_path, e))?;
                println!("wrote {}", json_path.display());
            }
            Ok(())
        }
        Command::Sdf { scenario, out } => {
            let scenario = Scenario::load(&scenario)?;
            let sdf = SignedDistanceField::build(&scenario.workspace, scenario.cell_size)?;
            let mut file = std::fs::File::create(&out).map_err(|e| Error::io(&out, e))?;
            sdf.write_text(&mut file).map_err(|e| Error::io(&out, e))?;
            println!("wrote {} ({}x{} cells)", out.display(), sdf.rows(), sdf.cols());
            Ok(())
        }
        Command::GenSuite { count, seed, out } => {
            let spec = SuiteSpec { count, seed, ..Default::default() };
            let scenarios = generate_suite(&spec)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            for s in &scenarios {
                let path = out.join(format!("{}.toml", s.name));
                std::fs::write(&path, s.to_toml_string()?).map_err(|e| Error::io(&path, e))?;
            }
            println!("wrote {count} scenarios to {}", out.display());
            Ok(())
        }
    }
}

/// A suite is a directory of scenario files, a scenario file with a
/// `[suite]` table (generated on the fly), or a single plain scenario.
fn load_suite(path: &std::path::Path, seed_override: Option<u64>) -> Result<Vec<Scenario>> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "toml"))
            .collect();
        entries.sort();
        if entries.is_empty() {
            return Err(Error::scenario(format!("no scenario files in {}", path.display())));
        }
        return entries.iter().map(|p| Scenario::load(p)).collect();
    }
    let scenario = Scenario::load(path)?;
    match &scenario.suite {
        Some(spec) => {
            let mut spec = spec.clone();
            if let Some(seed) = seed_override {
                spec.seed = seed;
            }
            generate_suite(&spec)
        }
        None => Ok(vec![scenario]),
    }
}
