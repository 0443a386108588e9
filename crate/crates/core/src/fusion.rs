//! Chair-Varshney fusion of binary local decisions.
//!
//! Each agent contributes `a = ln(P_D/P_FA)` when it declares `H1` and
//! `b = ln((1−P_D)/(1−P_FA))` when it declares `H0`. The marginal rule uses
//! the agents' overall rates; the conditioned rule recomputes the rates on
//! every trial from each agent's realized number of observations.

use serde::{Deserialize, Serialize};

use crate::analytics::{conditional_rates, overall_rates, RatePair};
use crate::belief::{Decision, HumanAgent};
use crate::error::{Error, Result};
use crate::observation::GaussianShiftModel;

pub const DEFAULT_CLAMP_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FusionWeights {
    /// Added when the agent declares `H1`.
    pub a: f64,
    /// Added when the agent declares `H0`.
    pub b: f64,
}

impl FusionWeights {
    pub fn weight(&self, u: Decision) -> f64 {
        match u {
            Decision::H1 => self.a,
            Decision::H0 => self.b,
        }
    }
}

/// Weights from rates clamped to `[clamp_eps, 1 − clamp_eps]`.
pub fn marginal_weights(rates: RatePair, clamp_eps: f64) -> FusionWeights {
    let pd = rates.pd.clamp(clamp_eps, 1.0 - clamp_eps);
    let pfa = rates.pfa.clamp(clamp_eps, 1.0 - clamp_eps);
    FusionWeights {
        a: pd.ln() - pfa.ln(),
        b: (-pd).ln_1p() - (-pfa).ln_1p(),
    }
}

pub fn conditional_weights(
    agent: &HumanAgent,
    model: &GaussianShiftModel,
    n: u64,
    clamp_eps: f64,
) -> Result<FusionWeights> {
    Ok(marginal_weights(
        conditional_rates(agent, model, n)?,
        clamp_eps,
    ))
}

/// Decisions from N agents, with their stopping-time realizations when the
/// conditioned rule is in use.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionInput {
    decisions: Vec<Decision>,
    taus: Option<Vec<u64>>,
}

impl FusionInput {
    pub fn marginal(decisions: Vec<Decision>) -> Self {
        Self {
            decisions,
            taus: None,
        }
    }

    pub fn conditioned(decisions: Vec<Decision>, taus: Vec<u64>) -> Result<Self> {
        if taus.len() != decisions.len() {
            return Err(Error::InvalidParameter(format!(
                "{} decisions but {} stopping times",
                decisions.len(),
                taus.len()
            )));
        }
        if taus.contains(&0) {
            return Err(Error::InvalidParameter("stopping times must be ≥ 1".into()));
        }
        Ok(Self {
            decisions,
            taus: Some(taus),
        })
    }

    pub fn decisions(&self) -> &[Decision] {
        &self.decisions
    }

    pub fn taus(&self) -> Option<&[u64]> {
        self.taus.as_deref()
    }

    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GlobalResult {
    pub statistic: f64,
    pub decision: Decision,
}

/// Sums each agent's weight for its decision and compares against `t_g`.
/// A statistic equal to `t_g` declares `H0`.
pub fn fuse(input: &FusionInput, weights: &[FusionWeights], t_g: f64) -> Result<GlobalResult> {
    if weights.len() != input.len() {
        return Err(Error::LengthMismatch {
            decisions: input.len(),
            weights: weights.len(),
        });
    }
    let statistic = input
        .decisions
        .iter()
        .zip(weights)
        .map(|(&u, wt)| wt.weight(u))
        .sum();
    let decision = if statistic > t_g {
        Decision::H1
    } else {
        Decision::H0
    };
    Ok(GlobalResult {
        statistic,
        decision,
    })
}

/// Which fusion statistic(s) an experiment evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionRule {
    Marginal,
    Conditioned,
    #[default]
    Both,
}

impl FusionRule {
    pub fn rules(self) -> &'static [Rule] {
        match self {
            FusionRule::Marginal => &[Rule::Marginal],
            FusionRule::Conditioned => &[Rule::Conditioned],
            FusionRule::Both => &[Rule::Marginal, Rule::Conditioned],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    Marginal,
    Conditioned,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Marginal => "marginal",
            Rule::Conditioned => "conditioned",
        }
    }
}

/// Per-agent weight tables for a fixed team and observation model.
#[derive(Debug, Clone)]
pub struct FusionCenter {
    agents: Vec<HumanAgent>,
    model: GaussianShiftModel,
    clamp_eps: f64,
    marginal: Vec<FusionWeights>,
    // conditioned[i][n - 1]
    conditioned: Vec<Vec<FusionWeights>>,
}

impl FusionCenter {
    /// Computes marginal weights from each agent's overall rates. Errors
    /// carry the index of the offending agent.
    pub fn new(
        agents: Vec<HumanAgent>,
        model: GaussianShiftModel,
        tail_eps: f64,
        clamp_eps: f64,
    ) -> Result<Self> {
        if !(clamp_eps > 0.0 && clamp_eps < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "clamp_eps must lie in (0, 0.5), got {clamp_eps}"
            )));
        }
        let marginal = agents
            .iter()
            .enumerate()
            .map(|(i, a)| {
                overall_rates(a, &model, tail_eps)
                    .map(|r| marginal_weights(r, clamp_eps))
                    .map_err(|e| e.for_agent(i))
            })
            .collect::<Result<Vec<_>>>()?;
        let conditioned = vec![Vec::new(); agents.len()];
        Ok(Self {
            agents,
            model,
            clamp_eps,
            marginal,
            conditioned,
        })
    }

    pub fn agents(&self) -> &[HumanAgent] {
        &self.agents
    }

    pub fn marginal_weights(&self) -> &[FusionWeights] {
        &self.marginal
    }

    /// Extends the conditioned tables so every agent covers `1..=max_tau`.
    pub fn prepare_conditioned(&mut self, max_tau: u64) -> Result<()> {
        for (i, (agent, table)) in self.agents.iter().zip(&mut self.conditioned).enumerate() {
            for n in (table.len() as u64 + 1)..=max_tau {
                let wt = conditional_weights(agent, &self.model, n, self.clamp_eps)
                    .map_err(|e| e.for_agent(i))?;
                table.push(wt);
            }
        }
        Ok(())
    }

    fn conditioned_weight(&self, agent: usize, n: u64) -> Result<FusionWeights> {
        match self.conditioned[agent].get((n - 1) as usize) {
            Some(w) => Ok(*w),
            None => conditional_weights(&self.agents[agent], &self.model, n, self.clamp_eps)
                .map_err(|e| e.for_agent(agent)),
        }
    }

    pub fn evaluate(&self, rule: Rule, input: &FusionInput, t_g: f64) -> Result<GlobalResult> {
        match rule {
            Rule::Marginal => fuse(input, &self.marginal, t_g),
            Rule::Conditioned => {
                let taus = input.taus().ok_or_else(|| {
                    Error::InvalidParameter("conditioned rule needs stopping times".into())
                })?;
                if taus.len() != self.agents.len() {
                    return Err(Error::LengthMismatch {
                        decisions: taus.len(),
                        weights: self.agents.len(),
                    });
                }
                let weights = taus
                    .iter()
                    .enumerate()
                    .map(|(i, &n)| self.conditioned_weight(i, n))
                    .collect::<Result<Vec<_>>>()?;
                fuse(input, &weights, t_g)
            }
        }
    }
}
