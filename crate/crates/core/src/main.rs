use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use gibbs_aas::analytics::CalibrationRecord;
use gibbs_aas::evaluation::{InstanceContext, OptimizedAnsatz};
use gibbs_aas::harness::{
    emit_report, eta_sweep, optimizer_seed, run_comparison, ComparisonReport, ExperimentConfig, ScoringChoice,
};
use gibbs_aas::objectives::ObjectiveSpec;
use gibbs_aas::search::{final_evaluation, run_search, top_k_curve, FinalEvaluation, Reference, SearchConfig, SearchTrace, TopKResult};
use gibbs_aas::{seed, Error, GraphKind, ProblemInstance, Result};

#[derive(Parser)]
#[command(name = "gibbs-aas", version, about = "Gibbs-objective QAOA and ansatz architecture search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone, Default)]
struct Batch {
    /// grid, complete, grid:RxC or complete:N
    #[arg(long)]
    kind: Option<GraphKind>,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
}

#[derive(Args, Clone, Default)]
struct Single {
    /// Instance JSON written by `gen`; sampled from the config otherwise.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Batch index of the sampled instance.
    #[arg(long, default_value_t = 0)]
    index: usize,
}

#[derive(Args, Clone, Default)]
struct SearchFlags {
    #[arg(long)]
    scoring: Option<ScoringChoice>,
    #[arg(long)]
    beam_width: Option<usize>,
    #[arg(long)]
    max_remove: Option<usize>,
    /// Fixed-scoring gamma; calibrated when absent.
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    /// Comma-separated re-ranking depths.
    #[arg(long, value_delimiter = ',')]
    top_k: Option<Vec<usize>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Gibbs,
    Energy,
    Prob,
}

#[derive(Subcommand)]
enum Command {
    /// Sample instances and write them as JSON.
    Gen {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        batch: Batch,
    },
    /// Optimise one instance and print f, <E> and P(E < E0).
    Solve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        batch: Batch,
        #[command(flatten)]
        single: Single,
        #[arg(long, value_enum, default_value = "gibbs")]
        objective: ObjectiveArg,
        /// Circuit depth.
        #[arg(long, default_value_t = 1)]
        layers: usize,
    },
    /// Ansatz architecture search on one instance.
    Search {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        batch: Batch,
        #[command(flatten)]
        single: Single,
        #[command(flatten)]
        search: SearchFlags,
    },
    /// Probability ratio of Gibbs to energy optimisation over a list of eta.
    SweepEta {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        batch: Batch,
        #[arg(long, value_delimiter = ',')]
        etas: Option<Vec<f64>>,
    },
    /// Median estimated gamma over random full-graph couplings.
    CalibrateGamma {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        batch: Batch,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// QAOA+energy against QAOA+Gibbs and sparse+Gibbs over a batch.
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        batch: Batch,
        #[command(flatten)]
        search: SearchFlags,
        /// Skip the sparse ansatz search.
        #[arg(long)]
        no_sparse: bool,
    },
    /// Re-emit report files from a saved comparison.
    Report {
        #[command(flatten)]
        common: Common,
        /// `comparison.json` written by `compare`.
        #[arg(long)]
        input: PathBuf,
    },
}

fn load_config(common: &Common, batch: &Batch) -> Result<ExperimentConfig> {
    let mut cfg: ExperimentConfig = match &common.config {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(k) = batch.kind {
        cfg.kind = k;
    }
    if let Some(n) = batch.instances {
        cfg.instances = n;
    }
    if let Some(eta) = batch.eta {
        cfg.eta = eta;
    }
    Ok(cfg)
}

fn apply_search(cfg: &mut ExperimentConfig, flags: &SearchFlags) {
    if let Some(s) = flags.scoring {
        cfg.search.scoring = s;
    }
    if let Some(g) = flags.gamma {
        if let ScoringChoice::Fixed { gamma } = &mut cfg.search.scoring {
            *gamma = Some(g);
        }
    }
    if let Some(w) = flags.beam_width {
        cfg.search.beam_width = w;
    }
    if let Some(n) = flags.max_remove {
        cfg.search.max_removals = n;
    }
    if let Some(k) = &flags.top_k {
        cfg.search.top_k = k.clone();
    }
}

fn load_instance(cfg: &ExperimentConfig, single: &Single) -> Result<ProblemInstance> {
    match &single.instance {
        Some(path) => ProblemInstance::from_json(&fs::read_to_string(path)?),
        None => Ok(cfg.instance(single.index)),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, text)?;
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

#[derive(Serialize, Deserialize)]
struct SolveOutput {
    instance_seed: u64,
    objective: ObjectiveSpec,
    e_gs: f64,
    e0: f64,
    result: OptimizedAnsatz,
}

#[derive(Serialize, Deserialize)]
struct SearchOutput {
    instance_seed: u64,
    fixed_gamma: Option<f64>,
    trace: SearchTrace,
    evaluation: FinalEvaluation,
    top_k: Vec<TopKResult>,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { common, batch } => {
            let cfg = load_config(&common, &batch)?;
            cfg.validate()?;
            let dir = common.out.unwrap_or_else(|| PathBuf::from("instances"));
            fs::create_dir_all(&dir)?;
            for k in 0..cfg.instances {
                let inst = cfg.instance(k);
                write(&dir.join(format!("instance_{k:04}.json")), &(inst.to_json()? + "\n"))?;
            }
            println!("wrote {} {} instances to {}", cfg.instances, cfg.kind, dir.display());
        }
        Command::Solve {
            common,
            batch,
            single,
            objective,
            layers,
        } => {
            let cfg = load_config(&common, &batch)?;
            let inst = load_instance(&cfg, &single)?;
            if layers == 0 {
                return Err(Error::InvalidParameter("circuit depth must be at least 1".into()));
            }
            let instance_seed = inst.seed();
            let ctx = InstanceContext::new(inst, cfg.eta)?.with_layers(layers);
            let objective = match objective {
                ObjectiveArg::Gibbs => ObjectiveSpec::Gibbs { eta: cfg.eta },
                ObjectiveArg::Energy => ObjectiveSpec::Energy,
                ObjectiveArg::Prob => ObjectiveSpec::ProbLowEnergy { e0: ctx.e0() },
            };
            let full = ctx.instance().full_mask();
            let result = ctx.optimize(
                full,
                objective,
                &cfg.simplex,
                seed::derive_wide(optimizer_seed(instance_seed), full.0),
            )?;
            let ev = result.evaluation;
            println!("f = {}\n<E> = {}\nP(E < E0) = {}", ev.gibbs, ev.energy, ev.p_low);
            if let Some(out) = common.out {
                let doc = SolveOutput {
                    instance_seed,
                    objective,
                    e_gs: ctx.ground().e_gs,
                    e0: ctx.e0(),
                    result,
                };
                write(&out, &to_json(&doc)?)?;
            }
        }
        Command::Search {
            common,
            batch,
            single,
            search,
        } => {
            let mut cfg = load_config(&common, &batch)?;
            apply_search(&mut cfg, &search);
            cfg.validate()?;
            let inst = load_instance(&cfg, &single)?;
            let instance_seed = inst.seed();
            let ctx = InstanceContext::new(inst, cfg.eta)?;
            let fixed_gamma = match cfg.search.scoring {
                ScoringChoice::Fixed { gamma: None } => Some(cfg.calibration()?.gamma_median),
                _ => None,
            };
            let config = SearchConfig {
                beam_width: cfg.search.beam_width,
                max_removals: cfg.search.max_removals,
                scoring: cfg.prescription(instance_seed, fixed_gamma)?,
                seed: seed::derive_label(instance_seed, "search"),
            };
            let trace = run_search(&ctx, &config)?;
            let reference = Reference::compute(&ctx, cfg.eta, &cfg.simplex, optimizer_seed(instance_seed))?;
            let evaluation = final_evaluation(&ctx, &trace, &reference)?;
            let top_k = if cfg.search.top_k.is_empty() {
                Vec::new()
            } else {
                top_k_curve(&ctx, &trace, &cfg.search.top_k, &reference)?
            };
            println!("level  edges  scaled_p  scoring_scaled_p");
            for l in &evaluation.levels {
                let light = l
                    .scoring_scaled_probability
                    .map(|p| format!("{p:.4}"))
                    .unwrap_or_else(|| "-".into());
                println!("{:>5}  {:>5}  {:>8.4}  {:>16}", l.level, l.optimized.mask.count(), l.scaled_probability, light);
            }
            let best = evaluation.best_by_gibbs();
            println!(
                "lowest Gibbs at level {} ({} of {} edges), visited {}",
                best.level,
                best.optimized.mask.count(),
                trace.n_edges,
                trace.visited
            );
            let out = common.out.unwrap_or_else(|| PathBuf::from("search.json"));
            let doc = SearchOutput {
                instance_seed,
                fixed_gamma,
                trace,
                evaluation,
                top_k,
            };
            write(&out, &to_json(&doc)?)?;
        }
        Command::SweepEta { common, batch, etas } => {
            let mut cfg = load_config(&common, &batch)?;
            if let Some(etas) = etas {
                cfg.etas = etas;
            }
            let sweep = eta_sweep(&cfg)?;
            println!("eta  ratio_p5  ratio_p50  ratio_p95  failure_rate");
            for s in &sweep.summaries {
                match s.ratio {
                    Some(p) => println!("{}  {:.4}  {:.4}  {:.4}  {:.3}", s.eta, p.p5, p.p50, p.p95, s.failure_rate),
                    None => println!("{}  -  -  -  {:.3}", s.eta, s.failure_rate),
                }
            }
            let dir = common.out.unwrap_or_else(|| PathBuf::from("sweep"));
            sweep.emit(&dir)?;
            write(&dir.join("eta_sweep.json"), &sweep.to_json()?)?;
        }
        Command::CalibrateGamma { common, batch, samples } => {
            let mut cfg = load_config(&common, &batch)?;
            if let Some(n) = samples {
                cfg.calibration_samples = n;
            }
            let record = CalibrationRecord::compute(cfg.kind, cfg.calibration_samples, cfg.seed)?;
            println!("median gamma* for {} over {} samples: {}", record.kind, record.n_samples, record.gamma_median);
            let out = common.out.unwrap_or_else(|| PathBuf::from("gamma.json"));
            write(&out, &to_json(&record)?)?;
        }
        Command::Compare {
            common,
            batch,
            search,
            no_sparse,
        } => {
            let mut cfg = load_config(&common, &batch)?;
            apply_search(&mut cfg, &search);
            if no_sparse {
                cfg.sparse = false;
            }
            let report = run_comparison(&cfg)?;
            print_summaries(&report);
            let dir = common.out.unwrap_or_else(|| PathBuf::from("comparison"));
            fs::create_dir_all(&dir)?;
            write(&dir.join("comparison.json"), &report.to_json()?)?;
            emit_report(&report, &dir)?;
        }
        Command::Report { common, input } => {
            let report = ComparisonReport::from_json(&fs::read_to_string(&input)?)?;
            print_summaries(&report);
            let dir = common.out.unwrap_or_else(|| PathBuf::from("report"));
            emit_report(&report, &dir)?;
        }
    }
    Ok(())
}

fn print_summaries(report: &ComparisonReport) {
    println!("variant        improvement% (p5 / p50 / p95)    gates% (p5 / p50 / p95)    failures");
    for s in &report.summaries {
        let fmt = |p: Option<gibbs_aas::harness::Percentiles>| match p {
            Some(p) => format!("{:+.1} / {:+.1} / {:+.1}", p.p5, p.p50, p.p95),
            None => "-".into(),
        };
        println!(
            "{:<14} {:<32} {:<26} {}",
            s.variant,
            fmt(s.improvement),
            fmt(s.gate_reduction),
            s.failures
        );
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
