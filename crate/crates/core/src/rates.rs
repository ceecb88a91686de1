//! Closed-form hardware model: physical generation success over a waiting
//! time, cost of logical-level post-distillation, and end-to-end bandwidth.

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};

/// How the fiber attenuation `α` (dB/km) over `l` km becomes a transmittance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum FiberLoss {
    /// `10^(−αl/10)`, the usual decibel conversion.
    #[default]
    Decibel,
    /// `e^(−αl/10)`.
    NaturalExp,
}

/// Whether `γτ` is used as a real exponent or floored to whole attempts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttemptCount {
    #[default]
    Continuous,
    Floor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardwareParams {
    /// Photon collection efficiency.
    pub eta_ph: f64,
    /// Detection efficiency.
    pub eta_det: f64,
    /// Frequency-conversion efficiency.
    pub eta_cov: f64,
    /// Fiber attenuation in dB/km.
    pub alpha: f64,
    /// Fiber length in km.
    pub length_km: f64,
    /// Attempt repetition rate in Hz.
    pub gamma: f64,
    /// Rearrangement time in seconds.
    pub tau_arr: f64,
    /// Stabilizer measurement time in seconds.
    pub tau_meas: f64,
    pub fiber_loss: FiberLoss,
    pub attempts: AttemptCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HardwarePreset {
    /// Neighbouring nodes, free-space collection.
    FreeSpace,
    /// Neighbouring nodes, cavity-enhanced collection and readout.
    Cavity,
    /// 33 km of fiber with frequency conversion.
    LongDistance,
}

impl HardwarePreset {
    pub const ALL: [HardwarePreset; 3] = [HardwarePreset::FreeSpace, HardwarePreset::Cavity, HardwarePreset::LongDistance];

    pub fn name(self) -> &'static str {
        match self {
            HardwarePreset::FreeSpace => "free-space",
            HardwarePreset::Cavity => "cavity",
            HardwarePreset::LongDistance => "long-distance",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn params(self) -> HardwareParams {
        let free_space = HardwareParams {
            eta_ph: 0.1,
            eta_det: 0.9,
            eta_cov: 1.0,
            alpha: 0.21,
            length_km: 0.0,
            gamma: 85e3,
            tau_arr: 1e-3,
            tau_meas: 1e-3,
            fiber_loss: FiberLoss::Decibel,
            attempts: AttemptCount::Continuous,
        };
        match self {
            HardwarePreset::FreeSpace => free_space,
            HardwarePreset::Cavity => HardwareParams {
                eta_ph: 0.48,
                tau_meas: 1e-4,
                ..free_space
            },
            HardwarePreset::LongDistance => HardwareParams {
                eta_cov: 0.57,
                length_km: 33.0,
                gamma: 6.3e3,
                ..free_space
            },
        }
    }
}

impl HardwareParams {
    pub fn validate(&self) -> Result<()> {
        check_probability("eta_ph", self.eta_ph)?;
        check_probability("eta_det", self.eta_det)?;
        check_probability("eta_cov", self.eta_cov)?;
        for (name, v) in [
            ("alpha", self.alpha),
            ("length_km", self.length_km),
            ("gamma", self.gamma),
            ("tau_arr", self.tau_arr),
            ("tau_meas", self.tau_meas),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("{v} must be finite and non-negative"),
                });
            }
        }
        Ok(())
    }

    pub fn transmittance(&self) -> f64 {
        let x = -self.alpha * self.length_km / 10.0;
        match self.fiber_loss {
            FiberLoss::Decibel => 10f64.powf(x),
            FiberLoss::NaturalExp => x.exp(),
        }
    }

    /// Heralded success probability of a single attempt.
    pub fn attempt_success(&self) -> f64 {
        0.5 * (self.eta_ph * self.eta_det * self.eta_cov).powi(2) * self.transmittance()
    }

    fn attempts_in(&self, tau: f64) -> f64 {
        let n = self.gamma * tau;
        match self.attempts {
            AttemptCount::Continuous => n,
            // tolerate round-off from tau = k / gamma
            AttemptCount::Floor => (n + 1e-9).floor(),
        }
    }
}

/// Probability that a site pair is entangled after waiting `tau` seconds.
pub fn generation_success(hw: &HardwareParams, tau: f64) -> f64 {
    let s = hw.attempt_success();
    let n = hw.attempts_in(tau.max(0.0));
    // 1 − (1 − s)^n without cancellation for small s
    -(n * (-s).ln_1p()).exp_m1()
}

/// Waiting time after which [`generation_success`] reaches `target`.
/// In floor mode the time is rounded up to a whole number of attempts.
pub fn required_duration(hw: &HardwareParams, target: f64) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidParameter {
            name: "target_p_gen",
            reason: format!("{target} must lie strictly between 0 and 1"),
        });
    }
    let s = hw.attempt_success();
    if s <= 0.0 || hw.gamma <= 0.0 {
        return Err(Error::Unattainable("per-attempt success probability or repetition rate is zero".into()));
    }
    let attempts = (-target).ln_1p() / (-s).ln_1p();
    Ok(match hw.attempts {
        AttemptCount::Continuous => attempts / hw.gamma,
        AttemptCount::Floor => attempts.ceil() / hw.gamma,
    })
}

/// An `[[n, 1, d]]` error-detection code used for logical-level distillation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistillationSpec {
    pub n: u32,
    pub d: u32,
}

impl DistillationSpec {
    /// Smallest known block lengths for distances 3, 5 and 7.
    pub const PRESETS: [DistillationSpec; 3] = [
        DistillationSpec { n: 5, d: 3 },
        DistillationSpec { n: 11, d: 5 },
        DistillationSpec { n: 17, d: 7 },
    ];

    pub fn new(n: u32, d: u32) -> Result<Self> {
        if d == 0 || n < d {
            return Err(Error::InvalidParameter {
                name: "distillation",
                reason: format!("need n >= d >= 1, got n = {n}, d = {d}"),
            });
        }
        Ok(DistillationSpec { n, d })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PostDistillation {
    pub e_post: f64,
    pub p_post: f64,
    /// Expected pre-distillation runs per distilled pair.
    pub n_trial: f64,
}

pub fn post_distillation(spec: DistillationSpec, e_log: f64, p_log: f64) -> Result<PostDistillation> {
    if !(p_log > 0.0 && p_log <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "p_log",
            reason: format!("{p_log} must lie in (0, 1]"),
        });
    }
    if !(0.0..1.0).contains(&e_log) {
        return Err(Error::InvalidParameter {
            name: "e_log",
            reason: format!("{e_log} must lie in [0, 1)"),
        });
    }
    let p_post = (1.0 - e_log).powi(spec.n as i32);
    Ok(PostDistillation {
        e_post: e_log.powi(spec.d as i32),
        p_post,
        n_trial: spec.n as f64 / p_log / p_post,
    })
}

/// Distilled pairs per second when each pre-distillation run takes
/// `tau + tau_arr + tau_meas`.
pub fn bandwidth(n_trial: f64, tau: f64, tau_arr: f64, tau_meas: f64) -> f64 {
    1.0 / (n_trial * (tau + tau_arr + tau_meas))
}
