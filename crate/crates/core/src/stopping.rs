//! Random stopping times: how many observations an agent processes before
//! deciding. The stopping time is independent of the observations.

use rand::Rng;
use rand_distr::{Distribution, Geometric, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};

/// Hard cap on the number of terms used when summing over the support.
pub const MAX_SUPPORT_TERMS: u64 = 1_000_000;

/// Default residual mass at which infinite PMF sums are cut off.
pub const DEFAULT_TAIL_EPS: f64 = 1e-12;

/// How a Poisson stopping time avoids the value zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroHandling {
    /// Condition on `Z ≥ 1` and renormalize.
    #[default]
    Truncate,
    /// `τ = 1 + Z`.
    Shift,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StoppingKind {
    /// Trials up to and including the first success, support `{1, 2, ...}`.
    Geometric {
        rho: f64,
    },
    Poisson {
        gamma: f64,
        zero_handling: ZeroHandling,
    },
    Deterministic {
        n: u64,
    },
}

/// A validated stopping-time distribution on `{1, 2, ...}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingTime(StoppingKind);

impl StoppingTime {
    pub fn new(kind: StoppingKind) -> Result<Self> {
        match kind {
            StoppingKind::Geometric { rho } if !(rho > 0.0 && rho <= 1.0) => Err(
                Error::InvalidParameter(format!("geometric rho must lie in (0, 1], got {rho}")),
            ),
            StoppingKind::Poisson { gamma, .. } if !(gamma.is_finite() && gamma > 0.0) => Err(
                Error::InvalidParameter(format!("poisson gamma must be positive, got {gamma}")),
            ),
            StoppingKind::Deterministic { n: 0 } => Err(Error::InvalidParameter(
                "deterministic stopping time must be at least 1".into(),
            )),
            _ => Ok(Self(kind)),
        }
    }

    pub fn geometric(rho: f64) -> Result<Self> {
        Self::new(StoppingKind::Geometric { rho })
    }

    pub fn poisson(gamma: f64, zero_handling: ZeroHandling) -> Result<Self> {
        Self::new(StoppingKind::Poisson {
            gamma,
            zero_handling,
        })
    }

    pub fn deterministic(n: u64) -> Result<Self> {
        Self::new(StoppingKind::Deterministic { n })
    }

    pub fn kind(&self) -> StoppingKind {
        self.0
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self.0, StoppingKind::Deterministic { .. })
    }

    pub fn pmf(&self, n: u64) -> f64 {
        if n == 0 {
            return 0.0;
        }
        match self.0 {
            StoppingKind::Geometric { rho } => rho * (1.0 - rho).powf((n - 1) as f64),
            StoppingKind::Poisson {
                gamma,
                zero_handling: ZeroHandling::Truncate,
            } => poisson_pmf(gamma, n) / -(-gamma).exp_m1(),
            StoppingKind::Poisson {
                gamma,
                zero_handling: ZeroHandling::Shift,
            } => poisson_pmf(gamma, n - 1),
            StoppingKind::Deterministic { n: k } => {
                if n == k {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self.0 {
            StoppingKind::Geometric { rho } => 1.0 / rho,
            StoppingKind::Poisson {
                gamma,
                zero_handling: ZeroHandling::Truncate,
            } => gamma / -(-gamma).exp_m1(),
            StoppingKind::Poisson {
                gamma,
                zero_handling: ZeroHandling::Shift,
            } => 1.0 + gamma,
            StoppingKind::Deterministic { n } => n as f64,
        }
    }

    pub fn variance(&self) -> f64 {
        match self.0 {
            StoppingKind::Geometric { rho } => (1.0 - rho) / (rho * rho),
            StoppingKind::Poisson {
                gamma,
                zero_handling: ZeroHandling::Truncate,
            } => {
                // E[Z²; Z ≥ 1] = γ + γ², renormalized
                let keep = -(-gamma).exp_m1();
                let mean = gamma / keep;
                ((gamma + gamma * gamma) / keep - mean * mean).max(0.0)
            }
            StoppingKind::Poisson {
                gamma,
                zero_handling: ZeroHandling::Shift,
            } => gamma,
            StoppingKind::Deterministic { .. } => 0.0,
        }
    }

    /// `E[w^τ]`, the MGF of τ evaluated at `ln w`.
    pub fn expected_pow(&self, w: f64) -> Result<f64> {
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "w must be positive, got {w}"
            )));
        }
        if w == 1.0 {
            return Ok(1.0);
        }
        Ok(match self.0 {
            StoppingKind::Geometric { rho } => {
                let q = (1.0 - rho) * w;
                if q >= 1.0 {
                    return Err(Error::Divergence(format!(
                        "geometric(rho={rho}) needs (1-rho)*w < 1, got {q} at w={w}"
                    )));
                }
                rho * w / (1.0 - q)
            }
            StoppingKind::Poisson {
                gamma,
                zero_handling: ZeroHandling::Truncate,
            } => (gamma * (w - 1.0)).exp() * (-gamma * w).exp_m1() / (-gamma).exp_m1(),
            StoppingKind::Poisson {
                gamma,
                zero_handling: ZeroHandling::Shift,
            } => w * (gamma * (w - 1.0)).exp(),
            StoppingKind::Deterministic { n } => w.powf(n as f64),
        })
    }

    /// `var[w^τ] = E[w^{2τ}] - E[w^τ]²`.
    pub fn var_pow(&self, w: f64) -> Result<f64> {
        let second = self.expected_pow(w * w)?;
        let first = self.expected_pow(w)?;
        Ok((second - first * first).max(0.0))
    }

    /// `(n, pmf(n))` pairs in increasing `n`, stopping once the accumulated
    /// mass exceeds `1 - tail_eps`. Zero-probability points are skipped.
    pub fn truncated_support(&self, tail_eps: f64) -> Result<Vec<(u64, f64)>> {
        if !(tail_eps > 0.0 && tail_eps < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "tail_eps must lie in (0, 1), got {tail_eps}"
            )));
        }
        if let StoppingKind::Deterministic { n } = self.0 {
            return Ok(vec![(n, 1.0)]);
        }
        let mut out = Vec::new();
        let mut mass = 0.0;
        for n in 1..=MAX_SUPPORT_TERMS {
            let p = self.pmf(n);
            if p > 0.0 {
                out.push((n, p));
                mass += p;
            }
            if mass >= 1.0 - tail_eps {
                return Ok(out);
            }
        }
        Err(Error::CapExceeded {
            cap: MAX_SUPPORT_TERMS,
        })
    }
}

fn poisson_pmf(gamma: f64, k: u64) -> f64 {
    (-gamma + k as f64 * gamma.ln() - ln_factorial(k)).exp()
}

impl Distribution<u64> for StoppingTime {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self.0 {
            StoppingKind::Geometric { rho } => {
                let failures = Geometric::new(rho).expect("validated rho").sample(rng);
                failures.saturating_add(1)
            }
            StoppingKind::Poisson {
                gamma,
                zero_handling,
            } => {
                let dist = Poisson::new(gamma).expect("validated gamma");
                match zero_handling {
                    ZeroHandling::Shift => 1 + dist.sample(rng) as u64,
                    ZeroHandling::Truncate => loop {
                        let z = dist.sample(rng) as u64;
                        if z > 0 {
                            break z;
                        }
                    },
                }
            }
            StoppingKind::Deterministic { n } => n,
        }
    }
}
