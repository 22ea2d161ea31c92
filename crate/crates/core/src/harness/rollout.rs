use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::{LoggedStep, PolicyMode, TrajectoryRecord};
use crate::domain::{
    estimate_state, evaluate_rewards, ActionKind, DialogueAction, DialogueMachine, DialogueState, OperationsVector,
    TaskSpec,
};
use crate::mdp::Policy;
use crate::sim::{Simulator, TaskMode};
use crate::space::StateSpace;

/// How actions are picked at choice-states during collection.
#[derive(Debug, Clone)]
pub enum CollectMode<'a> {
    /// Fair coin over the allowed actions.
    Exploratory,
    /// Uniform over the policy's (possibly tied) choice set.
    Fixed { name: String, policy: &'a Policy, space: &'a StateSpace },
}

impl CollectMode<'_> {
    pub fn tag(&self) -> PolicyMode {
        match self {
            CollectMode::Exploratory => PolicyMode::Exploratory,
            CollectMode::Fixed { name, .. } => PolicyMode::Fixed(name.clone()),
        }
    }

    pub fn choose<R: Rng + ?Sized>(&self, state: &DialogueState, allowed: &[DialogueAction], rng: &mut R) -> DialogueAction {
        if allowed.len() == 1 {
            return allowed[0];
        }
        if let CollectMode::Fixed { policy, space, .. } = self {
            let choice = space.state_id(state).and_then(|id| policy.choice(id));
            if let Some(c) = choice {
                let acts: Vec<DialogueAction> =
                    c.actions.iter().map(|&a| space.action(a)).filter(|a| allowed.contains(a)).collect();
                if let Some(&a) = acts.choose(rng) {
                    return a;
                }
            }
        }
        *allowed.choose(rng).expect("every dialogue state allows an action")
    }
}

/// Mixes a master seed and an index into an independent 64-bit seed
/// (SplitMix64 finalizer).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs one simulated dialogue to completion. Every random draw comes from
/// `rng`.
pub fn run_dialogue<R: Rng + ?Sized>(
    machine: &DialogueMachine,
    sim: &Simulator,
    task: &TaskSpec,
    mut choose: impl FnMut(&DialogueState, &[DialogueAction], &mut R) -> DialogueAction,
    rng: &mut R,
) -> (Vec<LoggedStep>, crate::domain::RewardBundle) {
    let mut ops = OperationsVector::new();
    let mut steps = Vec::new();
    loop {
        let state = estimate_state(&ops);
        let allowed = machine.table().allowed(&state).expect("machine stays in legal states");
        let action = choose(&state, &allowed, rng);
        if action == DialogueAction::Tell {
            let mut rewards = evaluate_rewards(&ops.query_binding(), task);
            rewards.web_feedback = sim.web_feedback(rewards.binary_completion, rng);
            steps.push(LoggedStep { state, action, reward: f64::from(rewards.binary_completion) });
            return (steps, rewards);
        }
        let perceived = match action.kind() {
            ActionKind::Confirm => action.attribute().and_then(|a| ops.slot(a).value.clone()),
            _ => None,
        };
        let asr = sim.respond(task, action, perceived.as_deref(), rng);
        ops = machine.advance(&ops, action, asr.as_ref()).expect("chosen actions are legal");
        steps.push(LoggedStep { state, action, reward: 0.0 });
    }
}

/// Collects `n` dialogues. Dialogue `i` gets id `first_id + i` and its own
/// rng seeded by `derive_seed(master_seed, first_id + i)`, so results do not
/// depend on thread scheduling. With the fixed task set, dialogue `i` runs
/// task `i mod 6`, giving every block of six (one synthetic subject) each
/// task once.
pub fn collect(
    n: usize,
    mode: &CollectMode<'_>,
    machine: &DialogueMachine,
    sim: &Simulator,
    master_seed: u64,
    first_id: u64,
) -> Vec<TrajectoryRecord> {
    let tag = mode.tag();
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let id = first_id + i;
            let seed = derive_seed(master_seed, id);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (task_index, task) = match sim.config.task_mode {
                TaskMode::Fixed => {
                    let k = (id % sim.tasks().len() as u64) as usize;
                    (k, sim.tasks()[k].clone())
                }
                TaskMode::Grid => sim.sample_task(&mut rng),
            };
            let (steps, rewards) = run_dialogue(machine, sim, &task, |s, a, r| mode.choose(s, a, r), &mut rng);
            TrajectoryRecord {
                dialogue_id: id,
                task_id: task_index as u32 + 1,
                seed,
                policy_mode: tag.clone(),
                steps,
                rewards,
            }
        })
        .collect()
}
