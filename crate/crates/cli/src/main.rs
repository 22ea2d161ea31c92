use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dialogue_rl::chat::run_chat;
use dialogue_rl::corpus::{write_corpus, Corpus};
use dialogue_rl::domain::{ActivityDatabase, Measure};
use dialogue_rl::harness::files::{read_policy, read_snapshot, write_policy, write_snapshot};
use dialogue_rl::harness::{
    baseline_comparison, baseline_table, calibrated_machine, collect, default_mixed, estimate,
    goodness_check, goodness_table, mc_evaluate, optimize, run_pipeline, write_artifacts, CollectMode,
    PipelineConfig, PreferenceRule, StageSeeds, DEFAULT_TIE_EPSILON,
};
use dialogue_rl::mdp::EmpiricalMdp;
use dialogue_rl::sim::{SimConfig, Simulator};
use dialogue_rl::space::StateSpace;

#[derive(Parser)]
#[command(name = "dialogue-rl", version, about = "Learn dialogue policies from exploratory dialogues")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SimArgs {
    /// Simulator config (key = value lines); defaults when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Activity database (tab-separated); the bundled one when omitted
    #[arg(long)]
    database: Option<PathBuf>,
    /// Samples used to calibrate the confidence bins
    #[arg(long, default_value_t = 9999)]
    calibration_samples: usize,
}

impl SimArgs {
    fn load(&self) -> Result<(SimConfig, ActivityDatabase)> {
        let cfg = match &self.config {
            Some(p) => SimConfig::load(p)?,
            None => SimConfig::default(),
        };
        let db = match &self.database {
            Some(p) => ActivityDatabase::load(p)?,
            None => ActivityDatabase::bundled(),
        };
        Ok((cfg, db))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate dialogues and write them as a corpus
    Collect {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        n: usize,
        /// Follow this policy file instead of exploring
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Output corpus file
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the empirical model from a corpus
    Estimate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "binary", value_parser = parse_measure)]
        measure: Measure,
        /// Output snapshot file
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the greedy policy of a model snapshot
    Optimize {
        #[arg(long)]
        mdp: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TIE_EPSILON)]
        tie_epsilon: f64,
        /// Output policy file
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate a policy's performance from a corpus, or by fresh simulation
    Evaluate {
        #[arg(long)]
        policy: PathBuf,
        /// Monte Carlo estimate over the consistent dialogues of this corpus
        #[arg(long, conflicts_with_all = ["seed", "n"])]
        corpus: Option<PathBuf>,
        /// Accept a corpus that was not collected exploratorily
        #[arg(long)]
        allow_biased: bool,
        #[arg(long, default_value = "binary", value_parser = parse_measure)]
        measure: Measure,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Compare the standard fixed policies (and optionally a learned one)
    Baselines {
        #[arg(long)]
        corpus: PathBuf,
        /// Model snapshot; estimated from the corpus when omitted
        #[arg(long)]
        mdp: Option<PathBuf>,
        /// Learned policy to include
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Preferred actions defining the Mixed policy
        #[arg(long)]
        mixed: Option<String>,
        #[arg(long, default_value = "binary", value_parser = parse_measure)]
        measure: Measure,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check model values against Monte Carlo estimates of random policies
    Goodness {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        mdp: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        policies: usize,
        #[arg(long, default_value = "0,5,10", value_delimiter = ',')]
        thresholds: Vec<usize>,
        #[arg(long, default_value = "binary", value_parser = parse_measure)]
        measure: Measure,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full run: explore, estimate, optimize, redeploy, compare
    Pipeline {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        seed: u64,
        /// Training dialogues
        #[arg(long, default_value_t = 2000)]
        n: usize,
        /// Test dialogues
        #[arg(long, default_value_t = 2000)]
        n_test: usize,
        #[arg(long, default_value_t = 1000)]
        policies: usize,
        #[arg(long, default_value = "0,5,10", value_delimiter = ',')]
        thresholds: Vec<usize>,
        #[arg(long, default_value = "binary", value_parser = parse_measure)]
        measure: Measure,
        #[arg(long)]
        mixed: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Talk to the system yourself
    Chat {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        seed: u64,
        /// Policy file; random exploration when omitted
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Task number (1-6); drawn at random when omitted
        #[arg(long)]
        task: Option<usize>,
        /// Skip the simulated recognizer
        #[arg(long)]
        verbatim: bool,
    },
}

fn parse_measure(s: &str) -> Result<Measure, String> {
    Measure::parse(s).ok_or_else(|| format!("unknown measure '{s}' (binary, weak, asr, web_feedback)"))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_policy(path: &Path, space: &StateSpace) -> Result<dialogue_rl::mdp::Policy> {
    read_policy(&read(path)?, space).with_context(|| format!("policy {}", path.display()))
}

fn policy_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| "policy".into(), |s| s.to_string_lossy().into_owned())
}

fn model(corpus: &Corpus, mdp: Option<&Path>, space: &StateSpace, measure: Measure) -> Result<EmpiricalMdp> {
    match mdp {
        Some(p) => {
            let (m, snap_measure) = read_snapshot(&read(p)?, space)?;
            if snap_measure != measure {
                eprintln!("warning: snapshot was estimated for {}, not {}", snap_measure.name(), measure.name());
            }
            Ok(m)
        }
        None => Ok(estimate(corpus, space, measure)?),
    }
}

fn mixed_rule(spec: Option<&str>) -> Result<Option<PreferenceRule>> {
    Ok(match spec {
        Some(s) => Some(PreferenceRule::parse(&default_mixed().name, s)?),
        None => None,
    })
}

fn run(cli: Cli) -> Result<()> {
    let space = StateSpace::bundled();
    match cli.command {
        Command::Collect { sim, seed, n, policy, out } => {
            let (cfg, db) = sim.load()?;
            let simulator = Simulator::new(cfg, &db);
            let machine = calibrated_machine(&simulator, seed, sim.calibration_samples);
            let loaded = policy.as_deref().map(|p| load_policy(p, &space)).transpose()?;
            let mode = match (&loaded, &policy) {
                (Some(pol), Some(path)) => CollectMode::Fixed { name: policy_name(path), policy: pol, space: &space },
                _ => CollectMode::Exploratory,
            };
            let records = collect(n, &mode, &machine, &simulator, StageSeeds::new(seed).train, 0);
            write_corpus(&out, &records)?;
            let c = Corpus::new(records);
            println!("wrote {} dialogues to {}", c.len(), out.display());
            for m in Measure::ALL {
                println!("mean {}: {:.3}", m.name(), c.mean(m).unwrap_or(f64::NAN));
            }
        }
        Command::Estimate { corpus, measure, out } => {
            let c = Corpus::load(&corpus)?;
            if c.is_empty() {
                eprintln!("warning: {} holds no dialogues; every state-action pair is unobserved", corpus.display());
            }
            let mdp = estimate(&c, &space, measure)?;
            write(&out, &write_snapshot(&mdp, &space, measure))?;
            println!("estimated {} observed state-action pairs from {} dialogues", mdp.observed_pairs().count(), c.len());
        }
        Command::Optimize { mdp, tie_epsilon, out } => {
            let (m, _) = read_snapshot(&read(&mdp)?, &space)?;
            let (q, policy) = optimize(&m, &space, tie_epsilon)?;
            let text = write_policy(&policy, &space, "learned");
            write(&out, &text)?;
            print!("{text}");
            println!("start value {:.4} after {} sweeps", q.state_value(space.start()), q.sweeps());
        }
        Command::Evaluate { policy, corpus, allow_biased, measure, sim, seed, n } => {
            let p = load_policy(&policy, &space)?;
            if let Some(corpus) = corpus {
                let c = Corpus::load(&corpus)?;
                if allow_biased && !c.is_exploratory() {
                    eprintln!("warning: corpus is not exploratory; the estimate is biased");
                }
                let est = mc_evaluate(&c, &space, &p, measure, allow_biased)?;
                match est.mean {
                    Some(m) => println!("consistent dialogues: {}\nmean {}: {m:.4}", est.n_consistent, measure.name()),
                    None => println!("consistent dialogues: 0\nno estimate"),
                }
            } else {
                let (Some(seed), Some(n)) = (seed, n) else {
                    bail!("evaluate needs either --corpus, or --seed and --n for fresh simulation");
                };
                let (cfg, db) = sim.load()?;
                let simulator = Simulator::new(cfg, &db);
                let machine = calibrated_machine(&simulator, seed, sim.calibration_samples);
                let mode = CollectMode::Fixed { name: policy_name(&policy), policy: &p, space: &space };
                let c = Corpus::new(collect(n, &mode, &machine, &simulator, StageSeeds::new(seed).test, 0));
                println!("simulated dialogues: {n}");
                for m in Measure::ALL {
                    println!("mean {}: {:.4}", m.name(), c.mean(m).unwrap_or(f64::NAN));
                }
            }
        }
        Command::Baselines { corpus, mdp, policy, mixed, measure, out } => {
            let c = Corpus::load(&corpus)?;
            let m = model(&c, mdp.as_deref(), &space, measure)?;
            let learned = match policy {
                Some(p) => load_policy(&p, &space)?,
                None => optimize(&m, &space, DEFAULT_TIE_EPSILON)?.1,
            };
            let rows = baseline_comparison(&c, &space, &m, measure, &learned, mixed_rule(mixed.as_deref())?)?;
            let mut text = format!("standard policies ({} dialogues, measure {})\n", c.len(), measure.name());
            baseline_table(&mut text, &rows);
            emit(&text, out.as_deref())?;
        }
        Command::Goodness { corpus, mdp, seed, policies, thresholds, measure, out } => {
            let c = Corpus::load(&corpus)?;
            if !c.is_exploratory() {
                eprintln!("warning: corpus is not exploratory; Monte Carlo estimates are biased");
            }
            let m = model(&c, mdp.as_deref(), &space, measure)?;
            let mut rng = ChaCha8Rng::seed_from_u64(StageSeeds::new(seed).goodness);
            let rows = goodness_check(
                &c.episodes(&space, measure),
                &space.allowed_ids(),
                &m,
                space.start(),
                policies,
                &thresholds,
                &mut rng,
            )?;
            let mut text = format!("model accuracy ({policies} random policies, measure {})\n", measure.name());
            goodness_table(&mut text, &rows);
            emit(&text, out.as_deref())?;
        }
        Command::Pipeline { sim, seed, n, n_test, policies, thresholds, measure, mixed, out } => {
            let (cfg, db) = sim.load()?;
            let mut pc = PipelineConfig::new(cfg, seed);
            pc.n_train = n;
            pc.n_test = n_test;
            pc.n_policies = policies;
            pc.thresholds = thresholds;
            pc.measure = measure;
            pc.calibration_samples = sim.calibration_samples;
            pc.mixed = mixed_rule(mixed.as_deref())?;
            let result = run_pipeline(&pc, &db)?;
            write_artifacts(&result, &out)?;
            print!("{}", result.report);
        }
        Command::Chat { sim, seed, policy, task, verbatim } => {
            let (cfg, db) = sim.load()?;
            let simulator = Simulator::new(cfg, &db);
            let machine = calibrated_machine(&simulator, seed, sim.calibration_samples);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let task = match task {
                Some(k) if (1..=simulator.tasks().len()).contains(&k) => simulator.tasks()[k - 1].clone(),
                Some(k) => bail!("task must be between 1 and {}, got {k}", simulator.tasks().len()),
                None => simulator.sample_task(&mut rng).1,
            };
            let loaded = policy.as_deref().map(|p| load_policy(p, &space)).transpose()?;
            let mode = match (&loaded, &policy) {
                (Some(pol), Some(path)) => CollectMode::Fixed { name: policy_name(path), policy: pol, space: &space },
                _ => CollectMode::Exploratory,
            };
            let stdin = io::stdin();
            let mut stdout = io::stdout();
            run_chat(stdin.lock(), &mut stdout, &machine, &simulator, &db, &task, &mode, verbatim, &mut rng)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    print!("{text}");
    if let Some(p) = out {
        write(p, text)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
