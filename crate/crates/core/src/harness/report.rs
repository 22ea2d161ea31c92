use std::fmt::Write as _;

use crate::space::StateSpace;

use super::goodness::GoodnessRow;
use super::pipeline::{BaselineRow, Comparison, PipelineOutput, SUBJECT_SIZE};

/// Four decimals, or scientific notation below 1e-4.
pub fn format_p(p: f64) -> String {
    if p == 0.0 || p >= 1e-4 {
        format!("{p:.4}")
    } else {
        format!("{p:.2e}")
    }
}

fn comparison_table(out: &mut String, rows: &[Comparison]) {
    writeln!(out, "{:<14}{:>10}{:>10}{:>10}{:>10}", "measure", "train", "test", "delta", "p").unwrap();
    for r in rows {
        writeln!(
            out,
            "{:<14}{:>10.3}{:>10.3}{:>10.3}{:>10}",
            r.measure.name(),
            r.train_mean,
            r.test_mean,
            r.delta,
            format_p(r.p)
        )
        .unwrap();
    }
}

pub fn baseline_table(out: &mut String, rows: &[BaselineRow]) {
    writeln!(out, "{:<16}{:>12}{:>10}{:>12}", "policy", "consistent", "mc_mean", "mdp_value").unwrap();
    for r in rows {
        let mc = r.mc.mean.map_or_else(|| "n/a".to_string(), |m| format!("{m:.3}"));
        writeln!(out, "{:<16}{:>12}{:>10}{:>12.3}", r.name, r.mc.n_consistent, mc, r.model_value).unwrap();
    }
}

pub fn goodness_table(out: &mut String, rows: &[GoodnessRow]) {
    writeln!(
        out,
        "{:<16}{:>10}{:>10}{:>12}{:>10}{:>12}",
        "min_consistent", "policies", "corr", "p", "slope", "intercept"
    )
    .unwrap();
    for r in rows {
        match r.fit {
            Some(f) => writeln!(
                out,
                "{:<16}{:>10}{:>10.3}{:>12}{:>10.3}{:>12.3}",
                r.min_consistent,
                r.n_policies,
                f.r,
                format_p(f.p),
                f.slope,
                f.intercept
            ),
            None => writeln!(out, "{:<16}{:>10}  insufficient", r.min_consistent, r.n_policies),
        }
        .unwrap();
    }
}

/// Plain-text report; identical inputs give identical bytes.
pub fn render_report(o: &PipelineOutput, space: &StateSpace) -> String {
    let c = &o.config;
    let mut out = String::new();
    writeln!(out, "dialogue policy experiment").unwrap();
    writeln!(out, "master seed: {}", c.seed).unwrap();
    writeln!(
        out,
        "stage seeds: calibration={} train={} test={} goodness={}",
        o.seeds.calibration, o.seeds.train, o.seeds.test, o.seeds.goodness
    )
    .unwrap();
    writeln!(out, "train dialogues: {} (exploratory)", o.train.len()).unwrap();
    writeln!(out, "test dialogues: {} (fixed:learned)", o.test.len()).unwrap();
    writeln!(out, "optimized measure: {}", c.measure.name()).unwrap();
    writeln!(out, "confidence thresholds: low={:.4} high={:.4}", o.bins.low, o.bins.high).unwrap();
    writeln!(out, "value iteration sweeps: {}", o.qtable.sweeps()).unwrap();
    writeln!(
        out,
        "significance: Welch unequal-variance t-test, two-sided, over subject means ({SUBJECT_SIZE} dialogues per subject)"
    )
    .unwrap();

    writeln!(out, "\n== train versus test ==").unwrap();
    comparison_table(&mut out, &o.evaluation.rows);
    if let Some([early, late]) = &o.evaluation.groups {
        writeln!(out, "\n== tasks 1-2 (per dialogue) ==").unwrap();
        comparison_table(&mut out, early);
        writeln!(out, "\n== tasks 3-6 (per dialogue) ==").unwrap();
        comparison_table(&mut out, late);
    }

    writeln!(out, "\n== learned policy ==").unwrap();
    for s in space.choice_states() {
        let Some(choice) = o.policy.choice(s) else { continue };
        let names: Vec<String> = choice.actions.iter().map(|&a| space.action(a).to_string()).collect();
        let q: Vec<String> = space
            .allowed(s)
            .iter()
            .map(|&a| {
                o.qtable.q(s, space.action_id(a)).map_or_else(|| format!("{a}=unobserved"), |v| format!("{a}={v:.3}"))
            })
            .collect();
        let flag = if choice.unlearned { " (unlearned)" } else { "" };
        writeln!(out, "{}  {:<20} {}{flag}", space.label(s), names.join(","), q.join(" ")).unwrap();
    }

    writeln!(out, "\n== standard policies (training corpus) ==").unwrap();
    baseline_table(&mut out, &o.baselines);

    writeln!(out, "\n== model accuracy ({} random policies) ==", c.n_policies).unwrap();
    goodness_table(&mut out, &o.goodness);
    out
}
