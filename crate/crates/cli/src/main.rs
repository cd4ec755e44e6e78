use std::collections::hash_map::RandomState;
use std::fs;
use std::hash::BuildHasher;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vnfplace::availsim::{simulate_availability, write_availability_csv};
use vnfplace::config::ConfigFile;
use vnfplace::experiments::{run_experiment, run_scheme, PipelineOptions, Scheme};
use vnfplace::gen::{generate, UpfCatalog};
use vnfplace::lp::SolverOptions;
use vnfplace::model::{evaluate_solution, IntegralSolution, ProblemInstance, Resource};
use vnfplace::oracle::SearchMode;
use vnfplace::Error;

mod exit {
    pub const PARSE: u8 = 3;
    pub const SOLVE: u8 = 4;
    pub const LIMIT: u8 = 5;
    pub const IO: u8 = 6;
}

#[derive(Parser)]
#[command(name = "vnfplace", version, about = "Availability-aware UPF placement on MEC nodes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance file.
    Generate {
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Overrides the generator seed from the config.
        #[arg(short, long)]
        seed: Option<u64>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Solve an instance with one scheme.
    Solve {
        #[arg(short, long)]
        instance: PathBuf,
        #[arg(long, default_value = "greedy")]
        scheme: String,
        /// Rounding seed for rr, greedy and wo-avl.
        #[arg(short, long)]
        seed: Option<u64>,
        /// Writes the solution JSON here.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        max_nodes: Option<u64>,
        /// Plain exhaustive search for `exact` instead of branch and bound.
        #[arg(long)]
        exhaustive: bool,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Run the scheme comparison sweeps and write CSV reports.
    Experiment {
        #[arg(short, long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        output_dir: PathBuf,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        base_seed: Option<u64>,
        #[arg(short, long)]
        jobs: Option<usize>,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Monte Carlo availability of a placed solution.
    Availsim {
        #[arg(short, long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[arg(short, long, default_value_t = 100_000)]
        trials: u64,
        #[arg(short, long)]
        seed: Option<u64>,
        /// CSV destination; standard output when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(short, long)]
        jobs: Option<usize>,
    },
    /// Print the default configuration file.
    Config,
}

#[derive(Args)]
struct SolverFlags {
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    pivot_floor: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
}

impl SolverFlags {
    fn apply(&self, mut opts: SolverOptions) -> SolverOptions {
        if let Some(t) = self.tol {
            opts.tol = t;
        }
        if let Some(p) = self.pivot_floor {
            opts.pivot_floor = p;
        }
        if self.max_iterations.is_some() {
            opts.max_iterations = self.max_iterations;
        }
        opts
    }
}

#[derive(Debug)]
struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_) => exit::IO,
            Error::LimitExceeded { .. } => exit::LIMIT,
            Error::InvalidModel(_)
            | Error::Domain(_)
            | Error::DimensionMismatch { .. }
            | Error::Config(_)
            | Error::Json(_)
            | Error::Csv(_) => exit::PARSE,
            Error::IterationLimit(_)
            | Error::NumericalInstability(_)
            | Error::Infeasible
            | Error::Unbounded
            | Error::UndefinedBound(_)
            | Error::DegenerateSample(_) => exit::SOLVE,
        };
        Failure { code, msg: e.to_string() }
    }
}

fn io_fail(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: exit::IO,
        msg: format!("{}: {e}", path.display()),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| io_fail(path, e))
}

fn write(path: &Path, data: &[u8]) -> Result<(), Failure> {
    fs::write(path, data).map_err(|e| io_fail(path, e))
}

fn entropy_seed() -> u64 {
    RandomState::new().hash_one(std::time::SystemTime::now())
}

fn pick_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = entropy_seed();
        eprintln!("no seed given, using {s}");
        s
    })
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile, Failure> {
    match path {
        None => Ok(ConfigFile::default()),
        Some(p) => ConfigFile::parse(&read(p)?).map_err(|e| Failure {
            code: exit::PARSE,
            msg: format!("{}: {e}", p.display()),
        }),
    }
}

fn set_jobs(jobs: Option<usize>) -> Result<(), Failure> {
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure {
                code: exit::SOLVE,
                msg: e.to_string(),
            })?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Generate { config, seed, output } => {
            let cfg = load_config(config.as_deref())?;
            let mut gen = cfg.generator;
            gen.seed = match (seed, &config) {
                (Some(s), _) => s,
                (None, Some(_)) => gen.seed,
                (None, None) => pick_seed(None),
            };
            let inst = generate(&gen, &UpfCatalog::default())?;
            write(&output, inst.to_json()?.as_bytes())?;
            println!("seed: {}", gen.seed);
            println!("mecs: {}", inst.mec_count());
            println!("requests: {}", inst.request_count());
            let max = inst.replicas.iter().copied().max().unwrap_or(0);
            for psi in 1..=max {
                let n = inst.replicas.iter().filter(|&&p| p == psi).count();
                println!("replicas {psi}: {n}");
            }
            Ok(())
        }
        Command::Solve {
            instance,
            scheme,
            seed,
            output,
            max_nodes,
            exhaustive,
            solver,
        } => {
            let inst = ProblemInstance::from_json(&read(&instance)?)?;
            let scheme: Scheme = scheme.parse()?;
            let mut opts = PipelineOptions {
                solver: solver.apply(SolverOptions::default()),
                ..PipelineOptions::default()
            };
            if let Some(n) = max_nodes {
                opts.oracle.max_nodes = n;
            }
            if exhaustive {
                opts.oracle.mode = SearchMode::Exhaustive;
            }
            let seed = match scheme {
                Scheme::Rr | Scheme::Greedy | Scheme::WoAvl => {
                    let s = pick_seed(seed);
                    println!("seed: {s}");
                    s
                }
                _ => 0,
            };
            let res = run_scheme(&inst, scheme, seed, &opts)?;
            println!("scheme: {scheme}");
            println!("objective: {:.6}", res.reward);
            println!("served: {} of {}", fmt_num(res.served), inst.request_count());
            for res_kind in Resource::ALL {
                println!("{} utilization: {:.2}%", res_kind, 100.0 * res.utilization[res_kind.index()]);
            }
            println!("feasible: {}", res.feasible);
            if let Some(sol) = &res.integral {
                let metrics = evaluate_solution(&inst, sol)?;
                for v in metrics.violations.iter() {
                    println!("violation: {:?} by {:.4}", v.constraint, v.overshoot);
                }
            }
            if let Some(b) = &res.bounds {
                println!("bound report:");
                if let Some(o) = &b.objective {
                    println!(
                        "  objective: mu_opt={:.4} delta={:.4} factor={:.4}{}",
                        o.mu,
                        o.delta,
                        o.factor,
                        if o.vacuous { " (vacuous)" } else { "" }
                    );
                }
                for r in &b.resources {
                    if let Some(f) = r.factor {
                        println!(
                            "  {} mec {}: lp_load={:.3} capacity={:.3} mu={:.4} factor={:.4}",
                            r.resource, r.mec, r.lp_load, r.capacity, r.mu, f
                        );
                    }
                }
            }
            if let Some(path) = output {
                let text = match (&res.integral, &res.fractional) {
                    (Some(sol), _) => sol.to_json()?,
                    (None, Some(frac)) => serde_json::to_string_pretty(frac).map_err(Error::from)?,
                    (None, None) => unreachable!("every scheme yields a solution"),
                };
                write(&path, text.as_bytes())?;
            }
            Ok(())
        }
        Command::Experiment {
            config,
            output_dir,
            runs,
            base_seed,
            jobs,
            solver,
        } => {
            set_jobs(jobs)?;
            let cfg = load_config(config.as_deref())?;
            let mut exp = cfg.experiment.clone();
            if let Some(r) = runs {
                exp.runs = r;
            }
            if let Some(s) = base_seed {
                exp.base_seed = s;
            }
            println!("base seed: {}", exp.base_seed);
            let solver = solver.apply(cfg.solver.options());
            fs::create_dir_all(&output_dir).map_err(|e| io_fail(&output_dir, e))?;
            let report = run_experiment(&exp, &cfg.generator, &solver)?;
            let mut buf = Vec::new();
            report.write_summary_csv(&mut buf)?;
            write(&output_dir.join("summary.csv"), &buf)?;
            buf.clear();
            report.write_runs_csv(&mut buf)?;
            write(&output_dir.join("runs.csv"), &buf)?;
            buf.clear();
            report.write_timing_csv(&mut buf)?;
            write(&output_dir.join("timing.csv"), &buf)?;
            println!(
                "{} summary rows, {} run rows written to {}",
                report.summary.len(),
                report.runs.len(),
                output_dir.display()
            );
            let failed = |exact: bool| -> usize {
                report
                    .summary
                    .iter()
                    .filter(|r| r.metric == "reward" && (r.scheme == Scheme::Exact) == exact)
                    .map(|r| r.failed)
                    .sum()
            };
            if failed(false) > 0 {
                return Err(Failure {
                    code: exit::SOLVE,
                    msg: format!("{} scheme runs failed and were excluded", failed(false)),
                });
            }
            if failed(true) > 0 {
                return Err(Failure {
                    code: exit::LIMIT,
                    msg: format!("{} exact runs hit the node limit and were excluded", failed(true)),
                });
            }
            Ok(())
        }
        Command::Availsim {
            instance,
            solution,
            trials,
            seed,
            output,
            jobs,
        } => {
            set_jobs(jobs)?;
            let inst = ProblemInstance::from_json(&read(&instance)?)?;
            let sol = IntegralSolution::from_json(&read(&solution)?)?;
            let seed = pick_seed(seed);
            let report = simulate_availability(&inst, &sol, trials, seed)?;
            let mut buf = Vec::new();
            write_availability_csv(&report, &mut buf)?;
            match output {
                Some(path) => {
                    write(&path, &buf)?;
                    println!("seed: {seed}");
                    println!("packet delivery ratio: {:.6}", report.packet_delivery_ratio);
                    println!("served fraction: {:.4}", report.served_fraction);
                    let failing = report.requests.iter().filter(|r| r.served && !r.pass).count();
                    println!("served requests failing their threshold: {failing}");
                }
                None => {
                    eprintln!("seed: {seed}");
                    print!("{}", String::from_utf8_lossy(&buf));
                }
            }
            Ok(())
        }
        Command::Config => {
            print!("{}", ConfigFile::default().to_toml());
            Ok(())
        }
    }
}

fn fmt_num(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{}", v as i64)
    } else {
        format!("{v:.4}")
    }
}
