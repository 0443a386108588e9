//! A single human decision-maker: weighted belief accumulation over a
//! random number of observations followed by a threshold test.

use rand::Rng;
use rand_distr::Distribution;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::observation::{Hypothesis, ObservationModel};
use crate::stopping::StoppingTime;

/// Local decision `u ∈ {-1, +1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(i8)]
pub enum Decision {
    H0 = -1,
    H1 = 1,
}

impl Decision {
    pub fn value(self) -> i8 {
        self as i8
    }

    pub fn declares_h1(self) -> bool {
        self == Decision::H1
    }
}

impl Serialize for Decision {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.value())
    }
}

/// Memory weight `w`, log-domain threshold `θ` and stopping time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HumanAgent {
    w: f64,
    theta: f64,
    stopping: StoppingTime,
}

impl HumanAgent {
    pub fn new(w: f64, theta: f64, stopping: StoppingTime) -> Result<Self> {
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "memory weight w must be positive, got {w}"
            )));
        }
        if !theta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "threshold must be finite, got {theta}"
            )));
        }
        Ok(Self { w, theta, stopping })
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn stopping(&self) -> &StoppingTime {
        &self.stopping
    }

    pub fn with_theta(mut self, theta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "threshold must be finite, got {theta}"
            )));
        }
        self.theta = theta;
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    pub tau: u64,
    pub belief: f64,
    pub decision: Decision,
}

/// `Λ_t = λ_t + w · Λ_{t-1}`.
#[inline]
pub fn update(belief_prev: f64, llr_new: f64, w: f64) -> f64 {
    llr_new + w * belief_prev
}

/// Declares `H1` only when the belief strictly exceeds the threshold.
#[inline]
pub fn decide(belief: f64, theta: f64) -> Decision {
    if belief > theta {
        Decision::H1
    } else {
        Decision::H0
    }
}

/// Draws τ, accumulates τ fresh LLRs starting from a zero belief and
/// applies the agent's threshold.
pub fn run_trial<M, R>(agent: &HumanAgent, model: &M, h: Hypothesis, rng: &mut R) -> TrialRecord
where
    M: ObservationModel,
    R: Rng + ?Sized,
{
    let tau = agent.stopping.sample(rng);
    let mut belief = 0.0;
    for _ in 0..tau {
        let llr = model.llr(model.sample(h, rng));
        belief = update(belief, llr, agent.w);
    }
    TrialRecord {
        tau,
        belief,
        decision: decide(belief, agent.theta),
    }
}

/// Same as [`run_trial`] but also returns the per-step LLRs in time order.
pub fn run_trial_traced<M, R>(
    agent: &HumanAgent,
    model: &M,
    h: Hypothesis,
    rng: &mut R,
) -> (TrialRecord, Vec<f64>)
where
    M: ObservationModel,
    R: Rng + ?Sized,
{
    let tau = agent.stopping.sample(rng);
    let mut llrs = Vec::with_capacity(tau as usize);
    let mut belief = 0.0;
    for _ in 0..tau {
        let llr = model.llr(model.sample(h, rng));
        llrs.push(llr);
        belief = update(belief, llr, agent.w);
    }
    let rec = TrialRecord {
        tau,
        belief,
        decision: decide(belief, agent.theta),
    };
    (rec, llrs)
}
