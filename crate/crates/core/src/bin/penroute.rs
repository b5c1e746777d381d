use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use penroute::batch::{read_jobs, run_batch, BatchConfig, BatchJob, MergePolicy};
use penroute::extract::{build_model, driver_order_constraints, read_route_dir, select_hierarchy, write_route, ExtractConfig, Variant};
use penroute::oracle::brute_force_optimum;
use penroute::search::{solve_prepared, MoveType, Prepared, SearchConfig};
use penroute::synth::{generate_synthetic, SynthConfig, WindowConfig};
use penroute::tour::{read_tour, write_tour};
use penroute::tsplib::{parse_instance, write_instance};
use penroute::{Error, Result};

#[derive(Parser)]
#[command(name = "penroute", version, about = "Constrained ATSP route solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Moves {
    #[value(name = "3")]
    Three,
    #[value(name = "34")]
    ThreeFour,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Full,
    Alternate,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance.
    Solve {
        instance: PathBuf,
        /// Seconds; new runs start only before this elapses.
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        max_candidates: usize,
        #[arg(long, default_value_t = 1500)]
        penalty_multiplier: u64,
        #[arg(long, value_enum, default_value = "34")]
        move_type: Moves,
        #[arg(long, default_value_t = 8)]
        max_trials_factor: usize,
        #[arg(long)]
        runs: Option<usize>,
        /// Write the candidate lists here.
        #[arg(long)]
        dump_candidates: Option<PathBuf>,
        /// Tour file; stdout if absent.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Mine constraints for a target instance from training routes and
    /// write the constrained instance.
    Extract {
        training_dir: PathBuf,
        target: PathBuf,
        #[arg(long, value_enum, default_value = "full")]
        variant: VariantArg,
        #[arg(long)]
        transitive: bool,
        #[arg(long)]
        zones_only: bool,
        /// Constrain to the zone order of this driver tour file instead.
        #[arg(long, value_name = "TOUR")]
        driver_order_oracle: Option<PathBuf>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Run a jobs file.
    Batch {
        jobs_file: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value_t = 1.01)]
        merge_factor: f64,
        /// Overrides every job's full-model time limit.
        #[arg(long)]
        full_time: Option<f64>,
        /// Overrides every job's alternate-model time limit.
        #[arg(long)]
        alt_time: Option<f64>,
        #[arg(long)]
        transitive: bool,
        /// JSON report; stdout if absent.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Write a synthetic corpus: instances, driver routes and a jobs file.
    Synth {
        #[arg(long, default_value_t = 20)]
        routes: usize,
        #[arg(long, default_value_t = 4)]
        stations: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0.05)]
        split_rate: f64,
        /// Share of stops that get a time window.
        #[arg(long)]
        time_windows: Option<f64>,
        #[arg(long, default_value = "synth")]
        out: PathBuf,
    },
    /// Exhaustive optimum (n ≤ 10).
    Oracle { instance: PathBuf },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => Ok(std::fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve {
            instance,
            time_limit,
            seed,
            max_candidates,
            penalty_multiplier,
            move_type,
            max_trials_factor,
            runs,
            dump_candidates,
            output,
        } => {
            let (inst, cs) = parse_instance(&read(&instance)?)?;
            let cfg = SearchConfig {
                max_candidates,
                max_trials_factor,
                penalty_multiplier,
                time_limit: time_limit.map(Duration::from_secs_f64),
                runs,
                seed,
                move_type: match move_type {
                    Moves::Three => MoveType::ThreeOpt,
                    Moves::ThreeFour => MoveType::ThreeFourOpt,
                },
                ..Default::default()
            };
            let started = Instant::now();
            let prep = Prepared::new(&inst, &cs, &cfg)?;
            if let Some(p) = dump_candidates {
                std::fs::write(p, prep.cand.dump())?;
            }
            let sol = solve_prepared(&prep, &cfg, started);
            eprintln!(
                "length {} penalty {} ({:?}) lower bound {} runs {} trials {} {} ms",
                sol.length,
                sol.penalty.total(),
                sol.penalty,
                sol.lower_bound,
                sol.runs,
                sol.trials,
                sol.elapsed_ms
            );
            let comments = [
                format!("NAME : {}", inst.name),
                format!("LENGTH : {}", sol.length),
                format!("PENALTY : {}", sol.penalty.total()),
            ];
            emit(output.as_deref(), &write_tour(&sol.stops, &comments))
        }
        Command::Extract {
            training_dir,
            target,
            variant,
            transitive,
            zones_only,
            driver_order_oracle,
            output,
        } => {
            let (inst, base) = parse_instance(&read(&target)?)?;
            let cs = if let Some(t) = driver_order_oracle {
                let seq = read_tour(&read(&t)?)?;
                driver_order_constraints(&inst, &seq)?
            } else {
                let training = read_route_dir(&training_dir)?;
                let h = select_hierarchy(&training, [1, 1, 1]);
                info!("hierarchy {h}");
                let cfg = ExtractConfig {
                    variant: match variant {
                        VariantArg::Full => Variant::Full,
                        VariantArg::Alternate => Variant::Alternate,
                    },
                    transitive,
                    zones_only,
                };
                let m = build_model(&inst, &training, &h, &cfg)?;
                for w in &m.warnings {
                    eprintln!("warning: {w}");
                }
                eprintln!(
                    "zone reference {} super reference {}",
                    m.zone_reference.as_deref().unwrap_or("-"),
                    m.super_reference.as_deref().unwrap_or("-")
                );
                m.constraints
            };
            let cs = penroute::penalty::ConstraintSet {
                time_windows: base.time_windows || cs.time_windows,
                ..cs
            };
            emit(output.as_deref(), &write_instance(&inst, &cs))
        }
        Command::Batch {
            jobs_file,
            workers,
            merge_factor,
            full_time,
            alt_time,
            transitive,
            report,
        } => {
            let jobs: Vec<BatchJob> = read_jobs(&jobs_file)?
                .into_iter()
                .map(|mut j| {
                    j.full_seconds = full_time.unwrap_or(j.full_seconds);
                    j.alternate_seconds = alt_time.unwrap_or(j.alternate_seconds);
                    j
                })
                .collect();
            let cfg = BatchConfig {
                workers,
                policy: MergePolicy::new(merge_factor)?,
                transitive,
                ..Default::default()
            };
            let r = run_batch(&jobs, &cfg);
            eprintln!(
                "{} jobs, {} ok, {} failed, total length {}, total penalty {}, {} ms",
                r.totals.jobs, r.totals.ok, r.totals.failed, r.totals.length, r.totals.penalty, r.wall_ms
            );
            emit(report.as_deref(), &(serde_json::to_string_pretty(&r)? + "\n"))
        }
        Command::Synth {
            routes,
            stations,
            seed,
            split_rate,
            time_windows,
            out,
        } => {
            let cfg = SynthConfig {
                routes,
                stations,
                seed,
                split_rate,
                windows: time_windows.map(|fraction| WindowConfig {
                    fraction,
                    ..Default::default()
                }),
                ..Default::default()
            };
            let corpus = generate_synthetic(&cfg);
            for sub in ["instances", "routes", "tours"] {
                std::fs::create_dir_all(out.join(sub))?;
            }
            let mut jobs = Vec::new();
            for r in &corpus.routes {
                let name = &r.route.name;
                let cs = penroute::penalty::ConstraintSet {
                    time_windows: r.instance.has_time_windows(),
                    ..Default::default()
                };
                std::fs::write(out.join(format!("instances/{name}.atsp")), write_instance(&r.instance, &cs))?;
                std::fs::write(out.join(format!("routes/{name}.route")), write_route(&r.route))?;
                jobs.push(serde_json::json!({
                    "instance": format!("instances/{name}.atsp"),
                    "full_seconds": 1.0,
                    "alternate_seconds": 1.0,
                    "seed": seed,
                    "output": format!("tours/{name}.tour"),
                }));
            }
            let file = serde_json::json!({ "training": "routes", "jobs": jobs });
            std::fs::write(out.join("jobs.json"), serde_json::to_string_pretty(&file)? + "\n")?;
            eprintln!("{} routes written to {}", corpus.routes.len(), out.display());
            Ok(())
        }
        Command::Oracle { instance } => {
            let (inst, cs) = parse_instance(&read(&instance)?)?;
            let opt = brute_force_optimum(&inst, &cs)?;
            eprintln!("length {} penalty {} ({} tours)", opt.length, opt.penalty, opt.evaluated);
            let comments = [
                format!("NAME : {}", inst.name),
                format!("LENGTH : {}", opt.length),
                format!("PENALTY : {}", opt.penalty),
            ];
            emit(None, &write_tour(&opt.stops, &comments))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
