//! The experiment drivers behind each CLI subcommand.

use serde::Serialize;

use super::config::{ExperimentConfig, ThresholdGrid};
use super::engine::{simulate_agent, simulate_team};
use super::roc::{roc_from_scores, RocCurve};
use crate::analytics::{
    belief_variance, belief_variance_literal, deflection_pair, expected_belief, DeflectionPair,
};
use crate::belief::{HumanAgent, TrialRecord};
use crate::error::{Error, Result};
use crate::fusion::{FusionCenter, FusionInput, Rule};
use crate::observation::Hypothesis;
use crate::stopping::{StoppingTime, ZeroHandling};

fn agent_at(config: &ExperimentConfig, index: usize) -> Result<&HumanAgent> {
    config.agents.get(index).ok_or_else(|| {
        Error::Config(format!(
            "agent index {index} out of range for {} agents",
            config.agents.len()
        ))
    })
}

fn beliefs(records: &[TrialRecord]) -> Vec<f64> {
    records.iter().map(|r| r.belief).collect()
}

fn simulate_beliefs(
    config: &ExperimentConfig,
    agent: &HumanAgent,
    stream_index: usize,
    h: Hypothesis,
) -> Result<Vec<f64>> {
    simulate_agent(
        agent,
        stream_index,
        &config.model,
        h,
        config.seed,
        config.trials,
        config.workers,
    )
    .map(|r| beliefs(&r))
}

/// ROC of one agent's local test, sweeping its threshold over the beliefs
/// recorded in a single simulation pass per hypothesis.
pub fn run_roc_single(config: &ExperimentConfig, agent_index: usize) -> Result<RocCurve> {
    config.validate()?;
    let agent = agent_at(config, agent_index)?;
    let h1 = simulate_beliefs(config, agent, agent_index, Hypothesis::H1)?;
    let h0 = simulate_beliefs(config, agent, agent_index, Hypothesis::H0)?;
    Ok(roc_from_scores(&h1, &h0, &config.threshold_grid))
}

#[derive(Debug, Clone, Serialize)]
pub struct FusionRoc {
    pub rule: &'static str,
    pub curve: RocCurve,
}

/// Simulates the whole team under both hypotheses and sweeps the global
/// threshold over the recorded fused statistics of each selected rule.
pub fn run_roc_fusion(config: &ExperimentConfig) -> Result<Vec<FusionRoc>> {
    config.validate()?;
    let mut center = FusionCenter::new(
        config.agents.clone(),
        config.model,
        config.tail_eps,
        config.clamp_eps,
    )?;
    let mut trials = Vec::with_capacity(2);
    for h in [Hypothesis::H1, Hypothesis::H0] {
        let team = simulate_team(
            &config.agents,
            &config.model,
            h,
            config.seed,
            config.trials,
            config.workers,
        )?;
        let inputs = team
            .iter()
            .map(|row| {
                FusionInput::conditioned(
                    row.iter().map(|r| r.decision).collect(),
                    row.iter().map(|r| r.tau).collect(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        trials.push(inputs);
    }
    let rules = config.fusion_rule.rules();
    if rules.contains(&Rule::Conditioned) {
        let max_tau = trials
            .iter()
            .flatten()
            .flat_map(|input| input.taus().unwrap_or(&[]).iter().copied())
            .max()
            .unwrap_or(1);
        center.prepare_conditioned(max_tau)?;
    }
    rules
        .iter()
        .map(|&rule| {
            let stats = |inputs: &[FusionInput]| {
                inputs
                    .iter()
                    .map(|i| center.evaluate(rule, i, 0.0).map(|g| g.statistic))
                    .collect::<Result<Vec<f64>>>()
            };
            let h1 = stats(&trials[0])?;
            let h0 = stats(&trials[1])?;
            Ok(FusionRoc {
                rule: rule.name(),
                curve: roc_from_scores(&h1, &h0, &ThresholdGrid::Empirical),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DeflectionOutcome {
    Value(DeflectionPair),
    Diverged,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeflectionRow {
    pub w: f64,
    pub gamma: f64,
    pub outcome: DeflectionOutcome,
}

/// Closed-form deflection coefficients for Poisson stopping times over a
/// `(w, γ)` grid. Rows that diverge or degenerate are marked, not fatal.
pub fn run_deflection_sweep(
    config: &ExperimentConfig,
    w_grid: &[f64],
    gamma_grid: &[f64],
    zero_handling: ZeroHandling,
) -> Result<Vec<DeflectionRow>> {
    let mut rows = Vec::with_capacity(w_grid.len() * gamma_grid.len());
    for &gamma in gamma_grid {
        let stopping = StoppingTime::poisson(gamma, zero_handling)?;
        for &w in w_grid {
            let agent = HumanAgent::new(w, 0.0, stopping)?;
            let outcome = match deflection_pair(&agent, &config.model) {
                Ok(d) => DeflectionOutcome::Value(d),
                Err(e) if e.is_divergence() => DeflectionOutcome::Diverged,
                Err(e) if e.is_degenerate() => DeflectionOutcome::Degenerate,
                Err(e) => return Err(e),
            };
            rows.push(DeflectionRow { w, gamma, outcome });
        }
    }
    Ok(rows)
}

/// `count` evenly spaced points from `min` to `max` inclusive.
pub fn linspace(min: f64, max: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![min],
        _ => {
            let step = (max - min) / (count - 1) as f64;
            (0..count).map(|i| min + step * i as f64).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationRow {
    pub agent: usize,
    pub quantity: &'static str,
    /// `None` when the closed form diverges.
    pub closed_form: Option<f64>,
    pub mc_estimate: f64,
    pub se: f64,
    pub pass: bool,
}

/// Tolerances used by [`validate_moments`].
pub const MEAN_TOLERANCE_SE: f64 = 4.0;
pub const VARIANCE_REL_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleMoments {
    pub mean: f64,
    pub variance: f64,
    pub se_mean: f64,
    pub se_variance: f64,
}

pub fn sample_moments(xs: &[f64]) -> SampleMoments {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let (m2, m4) = xs.iter().fold((0.0, 0.0), |(m2, m4), x| {
        let d = x - mean;
        let d2 = d * d;
        (m2 + d2, m4 + d2 * d2)
    });
    let variance = m2 / (n - 1.0).max(1.0);
    let m4 = m4 / n;
    SampleMoments {
        mean,
        variance,
        se_mean: (variance / n).sqrt(),
        se_variance: ((m4 - variance * variance).max(0.0) / n).sqrt(),
    }
}

fn within_se(cf: f64, mc: f64, se: f64) -> bool {
    (mc - cf).abs() <= MEAN_TOLERANCE_SE * se + 1e-12 * cf.abs().max(1e-300)
}

fn within_rel(cf: f64, mc: f64) -> bool {
    (mc - cf).abs() <= VARIANCE_REL_TOLERANCE * cf.abs() + 1e-12
}

/// Monte Carlo belief moments for every agent against the closed forms,
/// including the unsquared-mean variance expression for comparison.
pub fn validate_moments(config: &ExperimentConfig) -> Result<Vec<ValidationRow>> {
    config.validate()?;
    let model = &config.model;
    let mut rows = Vec::new();
    for (i, agent) in config.agents.iter().enumerate() {
        for h in [Hypothesis::H1, Hypothesis::H0] {
            let mc = sample_moments(&simulate_beliefs(config, agent, i, h)?);
            let (mean_q, var_q, lit_q) = match h {
                Hypothesis::H1 => ("mean_h1", "var_h1", "var_h1_literal"),
                Hypothesis::H0 => ("mean_h0", "var_h0", "var_h0_literal"),
            };
            let mean_cf = expected_belief(agent, model, h).ok();
            rows.push(ValidationRow {
                agent: i,
                quantity: mean_q,
                closed_form: mean_cf,
                mc_estimate: mc.mean,
                se: mc.se_mean,
                pass: mean_cf.is_some_and(|cf| within_se(cf, mc.mean, mc.se_mean)),
            });
            for (q, cf) in [
                (var_q, belief_variance(agent, model, h).ok()),
                (lit_q, belief_variance_literal(agent, model, h).ok()),
            ] {
                rows.push(ValidationRow {
                    agent: i,
                    quantity: q,
                    closed_form: cf,
                    mc_estimate: mc.variance,
                    se: mc.se_variance,
                    pass: cf.is_some_and(|cf| within_rel(cf, mc.variance)),
                });
            }
        }
    }
    Ok(rows)
}

/// Parameters for a two-way stopping-time comparison at a fixed `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonSpec {
    pub w: f64,
    pub first: StoppingTime,
    pub second: StoppingTime,
}

impl Default for ComparisonSpec {
    fn default() -> Self {
        Self {
            w: 0.5,
            first: StoppingTime::geometric(0.1).expect("valid rho"),
            second: StoppingTime::poisson(2.0, ZeroHandling::Truncate).expect("valid gamma"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonArm {
    pub label: String,
    pub mean_tau: f64,
    pub curve: RocCurve,
}

#[derive(Debug, Clone, Serialize)]
pub struct StoppingComparison {
    pub first: ComparisonArm,
    pub second: ComparisonArm,
    /// Whether the two stopping times have the same mean to 1e-9 relative.
    pub equal_means: bool,
    pub note: String,
}

pub fn stopping_label(st: &StoppingTime) -> String {
    use crate::stopping::StoppingKind::*;
    match st.kind() {
        Geometric { rho } => format!("geometric(rho={rho})"),
        Poisson {
            gamma,
            zero_handling,
        } => format!(
            "poisson(gamma={gamma},{})",
            match zero_handling {
                ZeroHandling::Truncate => "truncate",
                ZeroHandling::Shift => "shift",
            }
        ),
        Deterministic { n } => format!("deterministic(n={n})"),
    }
}

/// ROCs of one agent shape under two stopping times, plus a check of
/// whether the two stopping times really share an expected value.
pub fn run_stopping_comparison(
    config: &ExperimentConfig,
    spec: &ComparisonSpec,
) -> Result<StoppingComparison> {
    config.validate()?;
    let arm = |index: usize, st: StoppingTime| -> Result<ComparisonArm> {
        let agent = HumanAgent::new(spec.w, 0.0, st)?;
        let h1 = simulate_beliefs(config, &agent, index, Hypothesis::H1)?;
        let h0 = simulate_beliefs(config, &agent, index, Hypothesis::H0)?;
        Ok(ComparisonArm {
            label: stopping_label(&st),
            mean_tau: st.mean(),
            curve: roc_from_scores(&h1, &h0, &config.threshold_grid),
        })
    };
    let first = arm(0, spec.first)?;
    let second = arm(1, spec.second)?;
    let equal_means =
        (first.mean_tau - second.mean_tau).abs() <= 1e-9 * first.mean_tau.max(second.mean_tau);
    let note = if equal_means {
        format!("both stopping times have mean {}", first.mean_tau)
    } else {
        format!(
            "stopping-time means differ ({} has mean {}, {} has mean {}); they are not equal-mean alternatives",
            first.label, first.mean_tau, second.label, second.mean_tau
        )
    };
    Ok(StoppingComparison {
        first,
        second,
        equal_means,
        note,
    })
}
