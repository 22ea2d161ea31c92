use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{write_corpus, Corpus};
use crate::domain::{ActivityDatabase, ChoiceTable, ConfidenceBins, DialogueMachine, Measure};
use crate::mdp::{estimate_mdp, greedy_policy, policy_value, value_iterate, EmpiricalMdp, Policy, QTable};
use crate::sim::{SimConfig, Simulator};
use crate::space::StateSpace;
use crate::stats::{mean, welch_t_test};

use super::evaluate::{baseline_policies, mc_evaluate, McEstimate, PreferenceRule};
use super::files::{write_policy, write_snapshot};
use super::goodness::{goodness_check, GoodnessRow};
use super::report::render_report;
use super::rollout::{collect, derive_seed, CollectMode};
use super::HarnessError;

/// Dialogues per synthetic subject.
pub const SUBJECT_SIZE: usize = 6;
pub const CONVERGENCE_THRESHOLD: f64 = 1e-9;
pub const DEFAULT_TIE_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub sim: SimConfig,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    /// Reward optimized by the learner.
    pub measure: Measure,
    pub tie_epsilon: f64,
    pub calibration_samples: usize,
    pub n_policies: usize,
    pub thresholds: Vec<usize>,
    pub mixed: Option<PreferenceRule>,
}

impl PipelineConfig {
    pub fn new(sim: SimConfig, seed: u64) -> Self {
        Self {
            sim,
            seed,
            n_train: 2000,
            n_test: 2000,
            measure: Measure::Binary,
            tie_epsilon: DEFAULT_TIE_EPSILON,
            calibration_samples: 9999,
            n_policies: 1000,
            thresholds: vec![0, 5, 10],
            mixed: None,
        }
    }
}

/// Named rng streams derived from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageSeeds {
    pub calibration: u64,
    pub train: u64,
    pub test: u64,
    pub goodness: u64,
}

impl StageSeeds {
    pub fn new(master: u64) -> Self {
        let stage = |k: u64| derive_seed(master, u64::MAX - k);
        Self { calibration: stage(0), train: stage(1), test: stage(2), goodness: stage(3) }
    }
}

/// Train-versus-test comparison of one measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub measure: Measure,
    pub train_mean: f64,
    pub test_mean: f64,
    pub delta: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub rows: Vec<Comparison>,
    /// Tasks 1-2 and tasks 3-6, compared dialogue by dialogue.
    pub groups: Option<[Vec<Comparison>; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRow {
    pub name: String,
    pub mc: McEstimate,
    pub model_value: f64,
}

/// Dialogue machine with confidence bins calibrated on `sim`'s own scores,
/// drawn from the calibration stream of `master_seed`.
pub fn calibrated_machine(sim: &Simulator, master_seed: u64, samples: usize) -> DialogueMachine {
    let mut rng = ChaCha8Rng::seed_from_u64(StageSeeds::new(master_seed).calibration);
    DialogueMachine::new(ChoiceTable::bundled(), sim.calibrate(samples, &mut rng))
}

/// Per-subject means: consecutive blocks of six dialogues, the last block
/// possibly shorter.
pub fn subject_means(corpus: &Corpus, measure: Measure) -> Vec<f64> {
    corpus
        .records
        .chunks(SUBJECT_SIZE)
        .map(|c| c.iter().map(|r| r.rewards.measure(measure)).sum::<f64>() / c.len() as f64)
        .collect()
}

fn compare(measure: Measure, train: &[f64], test: &[f64]) -> Result<Comparison, HarnessError> {
    let t = welch_t_test(test, train)?;
    let (train_mean, test_mean) = (mean(train), mean(test));
    Ok(Comparison { measure, train_mean, test_mean, delta: test_mean - train_mean, p: t.p })
}

/// Welch test over subject means for every measure.
pub fn compare_arms(train: &Corpus, test: &Corpus) -> Result<Vec<Comparison>, HarnessError> {
    Measure::ALL.into_iter().map(|m| compare(m, &subject_means(train, m), &subject_means(test, m))).collect()
}

/// Same comparison restricted to task ids in `tasks`, per dialogue.
pub fn compare_task_group(train: &Corpus, test: &Corpus, tasks: &[u32]) -> Result<Vec<Comparison>, HarnessError> {
    let pick = |c: &Corpus, m: Measure| -> Vec<f64> {
        c.records.iter().filter(|r| tasks.contains(&r.task_id)).map(|r| r.rewards.measure(m)).collect()
    };
    Measure::ALL.into_iter().map(|m| compare(m, &pick(train, m), &pick(test, m))).collect()
}

pub fn estimate(corpus: &Corpus, space: &StateSpace, measure: Measure) -> Result<EmpiricalMdp, HarnessError> {
    Ok(estimate_mdp(&corpus.episodes(space, measure), space.n_states(), space.n_actions(), space.terminal())?)
}

pub fn optimize(mdp: &EmpiricalMdp, space: &StateSpace, tie_epsilon: f64) -> Result<(QTable, Policy), HarnessError> {
    let q = value_iterate(mdp, 1.0, CONVERGENCE_THRESHOLD)?;
    let policy = greedy_policy(&q, &space.allowed_ids(), tie_epsilon);
    Ok((q, policy))
}

/// Monte Carlo and model values of the standard policies and the learned one.
pub fn baseline_comparison(
    corpus: &Corpus,
    space: &StateSpace,
    mdp: &EmpiricalMdp,
    measure: Measure,
    learned: &Policy,
    mixed: Option<PreferenceRule>,
) -> Result<Vec<BaselineRow>, HarnessError> {
    let mut policies = baseline_policies(space, mixed);
    policies.push(("Learned".into(), learned.clone()));
    policies
        .into_iter()
        .map(|(name, p)| {
            let mc = mc_evaluate(corpus, space, &p, measure, true)?;
            let model_value = policy_value(mdp, &p, 1.0)?.value(space.start());
            Ok(BaselineRow { name, mc, model_value })
        })
        .collect()
}

/// Everything one run produces.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub config: PipelineConfig,
    pub seeds: StageSeeds,
    pub bins: ConfidenceBins,
    pub train: Corpus,
    pub test: Corpus,
    pub mdp: EmpiricalMdp,
    pub qtable: QTable,
    pub policy: Policy,
    pub evaluation: EvaluationReport,
    pub baselines: Vec<BaselineRow>,
    pub goodness: Vec<GoodnessRow>,
    pub report: String,
}

/// Collect exploratory dialogues, estimate the model, optimize, redeploy the
/// learned policy and compare.
pub fn run_pipeline(config: &PipelineConfig, db: &ActivityDatabase) -> Result<PipelineOutput, HarnessError> {
    config.sim.validate()?;
    let seeds = StageSeeds::new(config.seed);
    let sim = Simulator::new(config.sim.clone(), db);
    let machine = calibrated_machine(&sim, config.seed, config.calibration_samples);
    let bins = machine.bins();
    let space = StateSpace::new(machine.table());

    let train = Corpus::new(collect(config.n_train, &CollectMode::Exploratory, &machine, &sim, seeds.train, 0));
    let mdp = estimate(&train, &space, config.measure)?;
    let (qtable, policy) = optimize(&mdp, &space, config.tie_epsilon)?;
    let mode = CollectMode::Fixed { name: "learned".into(), policy: &policy, space: &space };
    let test = Corpus::new(collect(config.n_test, &mode, &machine, &sim, seeds.test, config.n_train as u64));

    let evaluation = EvaluationReport {
        rows: compare_arms(&train, &test)?,
        groups: match sim.config.task_mode {
            crate::sim::TaskMode::Fixed => Some([
                compare_task_group(&train, &test, &[1, 2])?,
                compare_task_group(&train, &test, &[3, 4, 5, 6])?,
            ]),
            crate::sim::TaskMode::Grid => None,
        },
    };
    let baselines = baseline_comparison(&train, &space, &mdp, config.measure, &policy, config.mixed.clone())?;
    let goodness = goodness_check(
        &train.episodes(&space, config.measure),
        &space.allowed_ids(),
        &mdp,
        space.start(),
        config.n_policies,
        &config.thresholds,
        &mut ChaCha8Rng::seed_from_u64(seeds.goodness),
    )?;
    let mut out = PipelineOutput {
        config: config.clone(),
        seeds,
        bins,
        train,
        test,
        mdp,
        qtable,
        policy,
        evaluation,
        baselines,
        goodness,
        report: String::new(),
    };
    out.report = render_report(&out, &space);
    Ok(out)
}

/// Writes the corpora, model snapshot, learned policy, effective simulator
/// config and report into `dir`.
pub fn write_artifacts(out: &PipelineOutput, dir: &Path) -> Result<(), HarnessError> {
    let io = |p: &Path, e| HarnessError::Io(p.display().to_string(), e);
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let space = StateSpace::bundled();
    write_corpus(&dir.join("train.jsonl"), &out.train.records)?;
    write_corpus(&dir.join("test.jsonl"), &out.test.records)?;
    let files = [
        ("mdp.txt", write_snapshot(&out.mdp, &space, out.config.measure)),
        ("policy.txt", write_policy(&out.policy, &space, "learned")),
        ("sim.conf", out.config.sim.to_text()),
        ("report.txt", out.report.clone()),
    ];
    for (name, text) in files {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| io(&p, e))?;
    }
    Ok(())
}
