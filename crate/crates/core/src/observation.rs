//! Hypothesis-conditional observation densities and per-observation
//! log-likelihood ratios.
//!
//! Under `H1` an agent observes i.i.d. draws from `f1`, under `H0` from `f0`.
//! The Gaussian mean-shift pair `N(s, σ²)` vs `N(0, σ²)` is the only model
//! with closed-form belief analytics.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Binary hypothesis label. Serializes as `0` (null) or `1` (alternative).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Hypothesis {
    H0,
    H1,
}

impl Hypothesis {
    pub const BOTH: [Hypothesis; 2] = [Hypothesis::H0, Hypothesis::H1];

    pub fn index(self) -> u8 {
        match self {
            Hypothesis::H0 => 0,
            Hypothesis::H1 => 1,
        }
    }

    /// `+1.0` under `H1`, `-1.0` under `H0`.
    pub fn sign(self) -> f64 {
        match self {
            Hypothesis::H0 => -1.0,
            Hypothesis::H1 => 1.0,
        }
    }
}

impl TryFrom<u8> for Hypothesis {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Hypothesis::H0),
            1 => Ok(Hypothesis::H1),
            other => Err(Error::InvalidParameter(format!(
                "hypothesis index must be 0 or 1, got {other}"
            ))),
        }
    }
}

impl Serialize for Hypothesis {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.index())
    }
}

impl<'de> Deserialize<'de> for Hypothesis {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = u8::deserialize(d)?;
        Hypothesis::try_from(v).map_err(serde::de::Error::custom)
    }
}

/// Mean and variance of a single observation's LLR under one hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LlrMoments {
    pub mean: f64,
    pub variance: f64,
}

/// Contract every observation pair must satisfy to drive the belief engine.
pub trait ObservationModel {
    fn sample<R: Rng + ?Sized>(&self, h: Hypothesis, rng: &mut R) -> f64;

    /// `ln(f1(x) / f0(x))`.
    fn llr(&self, x: f64) -> f64;

    fn llr_moments(&self, h: Hypothesis) -> LlrMoments;
}

/// `N(s, σ²)` under `H1` against `N(0, σ²)` under `H0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianShiftModel {
    s: f64,
    sigma_sq: f64,
}

impl GaussianShiftModel {
    pub fn new(s: f64, sigma_sq: f64) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mean shift s must be finite, got {s}"
            )));
        }
        if !(sigma_sq.is_finite() && sigma_sq > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma_sq must be positive and finite, got {sigma_sq}"
            )));
        }
        Ok(Self { s, sigma_sq })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }

    /// `s² / σ²`, the per-observation LLR variance and twice its mean.
    pub fn snr(&self) -> f64 {
        self.s * self.s / self.sigma_sq
    }

    pub fn is_degenerate(&self) -> bool {
        self.s == 0.0
    }
}

impl ObservationModel for GaussianShiftModel {
    fn sample<R: Rng + ?Sized>(&self, h: Hypothesis, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        let mean = match h {
            Hypothesis::H0 => 0.0,
            Hypothesis::H1 => self.s,
        };
        mean + self.sigma_sq.sqrt() * z
    }

    // Closed form, so extreme x never underflows a density.
    fn llr(&self, x: f64) -> f64 {
        (self.s * x - 0.5 * self.s * self.s) / self.sigma_sq
    }

    fn llr_moments(&self, h: Hypothesis) -> LlrMoments {
        let snr = self.snr();
        LlrMoments {
            mean: h.sign() * 0.5 * snr,
            variance: snr,
        }
    }
}
