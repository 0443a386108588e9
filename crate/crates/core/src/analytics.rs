//! Closed-form characterization of an agent's belief and decisions.
//!
//! Belief moments follow from the laws of total expectation and total
//! variance over the stopping time:
//!
//! ```text
//! E[Λ | H_k]   = E[λ | H_k] · (E[w^τ] − 1)/(w − 1)
//! var[Λ | H_k] = var[λ | H_k] · (E[w^{2τ}] − 1)/(w² − 1)
//!              + E[λ | H_k]² · var[w^τ]/(w − 1)²
//! ```
//!
//! with the `w = 1` limits `E[τ]` and `var[τ]`. Given a realized τ = n the
//! Gaussian model's belief is exactly normal, which yields the conditional
//! detection and false-alarm rates used by the conditioned fusion rule.

use serde::Serialize;
use statrs::function::erf::erfc;

use crate::belief::HumanAgent;
use crate::error::{Error, Result};
use crate::observation::{GaussianShiftModel, Hypothesis, ObservationModel};
use crate::stopping::StoppingTime;

/// Largest residual PMF mass accepted by [`overall_rates`].
pub const MAX_TAIL_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeliefMoments {
    pub mean_h1: f64,
    pub mean_h0: f64,
    pub var_h1: f64,
    pub var_h0: f64,
}

/// Detection and false-alarm probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePair {
    pub pd: f64,
    pub pfa: f64,
}

impl RatePair {
    pub fn new(pd: f64, pfa: f64) -> Result<Self> {
        if !((0.0..=1.0).contains(&pd) && (0.0..=1.0).contains(&pfa)) {
            return Err(Error::InvalidParameter(format!(
                "rates must lie in [0, 1], got pd={pd}, pfa={pfa}"
            )));
        }
        Ok(Self { pd, pfa })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeflectionPair {
    pub delta_h0: f64,
    pub delta_h1: f64,
}

/// Standard normal tail probability `P(Z > z)`.
pub fn q_function(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// `Σ_{j=1}^{n} w^{n-j} = (w^n − 1)/(w − 1)`, or `n` when `w = 1`.
pub fn geometric_sum(w: f64, n: u64) -> f64 {
    if w == 1.0 {
        return n as f64;
    }
    (n as f64 * w.ln()).exp_m1() / (w - 1.0)
}

/// `(E[w^τ] − 1)/(w − 1)`, which is `E[τ]` at `w = 1`.
fn mgf_ratio(stopping: &StoppingTime, w: f64) -> Result<f64> {
    if w == 1.0 {
        return Ok(stopping.mean());
    }
    Ok((stopping.expected_pow(w)? - 1.0) / (w - 1.0))
}

/// `var[w^τ]/(w − 1)²`, which is `var[τ]` at `w = 1`.
fn scaled_var_pow(stopping: &StoppingTime, w: f64) -> Result<f64> {
    if w == 1.0 {
        return Ok(stopping.variance());
    }
    Ok(stopping.var_pow(w)? / ((w - 1.0) * (w - 1.0)))
}

pub fn expected_belief<M: ObservationModel>(
    agent: &HumanAgent,
    model: &M,
    h: Hypothesis,
) -> Result<f64> {
    let llr = model.llr_moments(h);
    Ok(llr.mean * mgf_ratio(agent.stopping(), agent.w())?)
}

pub fn belief_variance<M: ObservationModel>(
    agent: &HumanAgent,
    model: &M,
    h: Hypothesis,
) -> Result<f64> {
    let llr = model.llr_moments(h);
    let w = agent.w();
    let within = llr.variance * mgf_ratio(agent.stopping(), w * w)?;
    let between = llr.mean * llr.mean * scaled_var_pow(agent.stopping(), w)?;
    Ok(within + between)
}

/// The variance expression with the per-observation mean left unsquared in
/// the between-τ term. Kept only for comparison reports; it does not match
/// simulated beliefs unless `E[λ] ∈ {0, 1}`.
pub fn belief_variance_literal<M: ObservationModel>(
    agent: &HumanAgent,
    model: &M,
    h: Hypothesis,
) -> Result<f64> {
    let llr = model.llr_moments(h);
    let w = agent.w();
    let within = llr.variance * mgf_ratio(agent.stopping(), w * w)?;
    let between = llr.mean * scaled_var_pow(agent.stopping(), w)?;
    Ok(within + between)
}

pub fn belief_moments<M: ObservationModel>(agent: &HumanAgent, model: &M) -> Result<BeliefMoments> {
    Ok(BeliefMoments {
        mean_h1: expected_belief(agent, model, Hypothesis::H1)?,
        mean_h0: expected_belief(agent, model, Hypothesis::H0)?,
        var_h1: belief_variance(agent, model, Hypothesis::H1)?,
        var_h0: belief_variance(agent, model, Hypothesis::H0)?,
    })
}

/// `(E[Λ|H1] − E[Λ|H0])² / var[Λ|H_k]`.
pub fn deflection<M: ObservationModel>(
    agent: &HumanAgent,
    model: &M,
    k: Hypothesis,
) -> Result<f64> {
    let sep = expected_belief(agent, model, Hypothesis::H1)?
        - expected_belief(agent, model, Hypothesis::H0)?;
    let var = belief_variance(agent, model, k)?;
    if var <= 0.0 {
        return Err(Error::Degenerate("belief variance is zero".into()));
    }
    Ok(sep * sep / var)
}

pub fn deflection_pair<M: ObservationModel>(
    agent: &HumanAgent,
    model: &M,
) -> Result<DeflectionPair> {
    Ok(DeflectionPair {
        delta_h0: deflection(agent, model, Hypothesis::H0)?,
        delta_h1: deflection(agent, model, Hypothesis::H1)?,
    })
}

/// Mean and variance of the (exactly Gaussian) belief given τ = n.
pub fn conditional_belief_dist(
    agent: &HumanAgent,
    model: &GaussianShiftModel,
    h: Hypothesis,
    n: u64,
) -> (f64, f64) {
    let w = agent.w();
    let llr = model.llr_moments(h);
    (
        llr.mean * geometric_sum(w, n),
        llr.variance * geometric_sum(w * w, n),
    )
}

/// Detection and false-alarm probabilities of the agent's test given that
/// exactly `n` observations were used.
pub fn conditional_rates(
    agent: &HumanAgent,
    model: &GaussianShiftModel,
    n: u64,
) -> Result<RatePair> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "stopping time realization must be ≥ 1".into(),
        ));
    }
    let snr = model.snr();
    if snr == 0.0 {
        return Err(Error::Degenerate(
            "conditional belief variance is zero".into(),
        ));
    }
    let w = agent.w();
    let half = 0.5 * snr;
    // Standardize by the conditional standard deviation. For w > 1 the sums
    // are rewritten as w^{n-1} Σ w^{-k}, and the common factor cancels from
    // mean/sd, so nothing overflows when w^n does.
    let (mean_over_sd, theta_over_sd) = if w <= 1.0 {
        let sd = (snr * geometric_sum(w * w, n)).sqrt();
        (half * geometric_sum(w, n) / sd, agent.theta() / sd)
    } else {
        let r = w.recip();
        let sd_scaled = (snr * geometric_sum(r * r, n)).sqrt();
        let scale = w.powf((n - 1) as f64);
        (
            half * geometric_sum(r, n) / sd_scaled,
            agent.theta() / (scale * sd_scaled),
        )
    };
    RatePair::new(
        q_function(theta_over_sd - mean_over_sd),
        q_function(theta_over_sd + mean_over_sd),
    )
}

/// Marginal detection and false-alarm probabilities, summed over τ until
/// the remaining PMF mass drops below `tail_eps`. The absolute error of
/// each rate is bounded by `tail_eps`.
pub fn overall_rates(
    agent: &HumanAgent,
    model: &GaussianShiftModel,
    tail_eps: f64,
) -> Result<RatePair> {
    if !(tail_eps > 0.0 && tail_eps <= MAX_TAIL_EPS) {
        return Err(Error::InvalidParameter(format!(
            "tail_eps must lie in (0, {MAX_TAIL_EPS}], got {tail_eps}"
        )));
    }
    let mut pd = 0.0;
    let mut pfa = 0.0;
    for (n, p) in agent.stopping().truncated_support(tail_eps)? {
        let r = conditional_rates(agent, model, n)?;
        pd += p * r.pd;
        pfa += p * r.pfa;
    }
    RatePair::new(pd.clamp(0.0, 1.0), pfa.clamp(0.0, 1.0))
}
