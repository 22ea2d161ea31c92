use rand::seq::IndexedRandom;
use rand::Rng;

use crate::mdp::{policy_value, ActionId, EmpiricalMdp, Episode, Policy, StateId};
use crate::stats::{linear_fit, pearson};

use super::evaluate::{choice_decisions, is_consistent};
use super::HarnessError;

/// Correlation and fit of Monte Carlo estimates on model values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoodnessFit {
    pub r: f64,
    pub p: f64,
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoodnessRow {
    /// Policies need more than this many consistent dialogues to count.
    pub min_consistent: usize,
    pub n_policies: usize,
    /// `None` when fewer than three policies qualify or the correlation is
    /// undefined.
    pub fit: Option<GoodnessFit>,
}

/// One action per multi-action state, uniformly at random; single-action
/// states keep their action.
pub fn random_deterministic_policy<R: Rng + ?Sized>(allowed: &[Vec<ActionId>], rng: &mut R) -> Policy {
    let picks: Vec<(StateId, ActionId)> = allowed
        .iter()
        .enumerate()
        .filter_map(|(s, acts)| acts.choose(rng).map(|&a| (StateId(s), a)))
        .collect();
    Policy::deterministic(allowed.len(), picks)
}

/// The (Monte Carlo, model) value pair of one policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicySample {
    pub n_consistent: usize,
    pub mc_mean: Option<f64>,
    pub model_value: f64,
}

/// Scores `n_policies` random deterministic policies both ways.
pub fn sample_policies<R: Rng + ?Sized>(
    episodes: &[Episode],
    allowed: &[Vec<ActionId>],
    mdp: &EmpiricalMdp,
    start: StateId,
    n_policies: usize,
    rng: &mut R,
) -> Result<Vec<PolicySample>, HarnessError> {
    let logged: Vec<(Vec<(StateId, ActionId)>, f64)> = episodes
        .iter()
        .map(|e| (choice_decisions(e, allowed), e.steps.iter().map(|s| s.reward).sum()))
        .collect();
    let mut out = Vec::with_capacity(n_policies);
    for _ in 0..n_policies {
        let policy = random_deterministic_policy(allowed, rng);
        let mut n = 0;
        let mut total = 0.0;
        for (decisions, ret) in &logged {
            if is_consistent(decisions, &policy) {
                n += 1;
                total += ret;
            }
        }
        let model_value = policy_value(mdp, &policy, 1.0)?.value(start);
        out.push(PolicySample { n_consistent: n, mc_mean: (n > 0).then(|| total / n as f64), model_value });
    }
    Ok(out)
}

/// One row per threshold over the given policy samples.
pub fn goodness_rows(samples: &[PolicySample], thresholds: &[usize]) -> Vec<GoodnessRow> {
    thresholds
        .iter()
        .map(|&k| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = samples
                .iter()
                .filter(|s| s.n_consistent > k)
                .filter_map(|s| s.mc_mean.map(|mc| (s.model_value, mc)))
                .unzip();
            let fit = if xs.len() < 3 {
                None
            } else {
                match (pearson(&xs, &ys), linear_fit(&xs, &ys)) {
                    (Ok(c), Ok(f)) => Some(GoodnessFit { r: c.r, p: c.p, slope: f.slope, intercept: f.intercept }),
                    _ => None,
                }
            };
            GoodnessRow { min_consistent: k, n_policies: xs.len(), fit }
        })
        .collect()
}

/// Compares Monte Carlo estimates from `episodes` with the model's start
/// values over random deterministic policies, per consistency threshold.
pub fn goodness_check<R: Rng + ?Sized>(
    episodes: &[Episode],
    allowed: &[Vec<ActionId>],
    mdp: &EmpiricalMdp,
    start: StateId,
    n_policies: usize,
    thresholds: &[usize],
    rng: &mut R,
) -> Result<Vec<GoodnessRow>, HarnessError> {
    if n_policies < 2 {
        return Err(HarnessError::Format(format!("need at least 2 policies, got {n_policies}")));
    }
    let samples = sample_policies(episodes, allowed, mdp, start, n_policies, rng)?;
    Ok(goodness_rows(&samples, thresholds))
}
