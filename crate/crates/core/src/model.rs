//! Network parameters, per-slot fading draws and the link predicates shared
//! by the simulator and the analytic engine.
//!
//! Powers are carried as power-to-noise ratios throughout (`N0 = 1`).

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Mean of every SU-side fading gain.
pub const SIGMA_SQ: f64 = 1.0;

/// Relative slack used when comparing an achieved rate to the target rate.
/// Adaptive powers meet the target with equality, so the comparison must
/// absorb the rounding of `log2(1 + p h)`.
pub const RATE_TOLERANCE: f64 = 1e-12;

/// Physical and traffic constants of one network instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Number of secondary users.
    pub n_su: usize,
    /// Bernoulli arrival probability at the primary queue.
    pub lambda_p: f64,
    /// Target rate in bits per channel use.
    pub rate_r0: f64,
    /// Primary transmit SNR, linear.
    pub p0_over_n0: f64,
    /// Secondary power budget, linear.
    pub pmax_over_n0: f64,
    /// Mean gain of the primary direct link.
    pub sigma_p_sq: f64,
}

impl Default for SystemParams {
    /// Two SUs, `R0 = 2`, `P0/N0 = 10 dB`, `Pmax/N0 = 7 dB`, `σp² = 0.25`, `λp = 0.1`.
    fn default() -> Self {
        Self {
            n_su: 2,
            lambda_p: 0.1,
            rate_r0: 2.0,
            p0_over_n0: 10.0,
            pmax_over_n0: 10f64.powf(0.7),
            sigma_p_sq: 0.25,
        }
    }
}

impl SystemParams {
    pub fn new(
        n_su: usize,
        lambda_p: f64,
        rate_r0: f64,
        p0_over_n0: f64,
        pmax_over_n0: f64,
        sigma_p_sq: f64,
    ) -> Result<Self> {
        let params = Self {
            n_su,
            lambda_p,
            rate_r0,
            p0_over_n0,
            pmax_over_n0,
            sigma_p_sq,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_su < 2 {
            return Err(Error::TooFewUsers(self.n_su));
        }
        if !(0.0..1.0).contains(&self.lambda_p) {
            return Err(invalid(
                "lambda_p",
                format!("{} is not in [0, 1)", self.lambda_p),
            ));
        }
        if !(self.rate_r0 > 0.0 && self.rate_r0.is_finite()) {
            return Err(invalid(
                "rate_r0",
                format!("{} is not positive", self.rate_r0),
            ));
        }
        if !(self.p0_over_n0 > 0.0) {
            return Err(invalid(
                "p0_over_n0",
                format!("{} is not positive", self.p0_over_n0),
            ));
        }
        if !(self.pmax_over_n0 >= 0.0) {
            return Err(invalid(
                "pmax_over_n0",
                format!("{} is negative", self.pmax_over_n0),
            ));
        }
        if !(self.sigma_p_sq > 0.0 && self.sigma_p_sq <= SIGMA_SQ) {
            return Err(invalid(
                "sigma_p_sq",
                format!("{} is not in (0, 1]", self.sigma_p_sq),
            ));
        }
        Ok(())
    }

    pub fn with_lambda(self, lambda_p: f64) -> Self {
        Self { lambda_p, ..self }
    }

    pub fn with_pmax(self, pmax_over_n0: f64) -> Self {
        Self {
            pmax_over_n0,
            ..self
        }
    }

    pub fn with_n(self, n_su: usize) -> Self {
        Self { n_su, ..self }
    }
}

/// Thresholds derived from [`SystemParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    /// `2^R0 - 1`, the SNR a link must reach to carry `R0`.
    pub snr_target: f64,
    /// `(2^R0 - 1) / (P0/N0)`.
    pub alpha: f64,
    /// `(2^R0 - 1) / (Pmax/N0)`; infinite when the power budget is zero.
    pub a: f64,
    /// `1 / (2^R0 - 1)`.
    pub b: f64,
    /// `1 - e^{-a}`: probability that a unit-mean gain is below `a`.
    pub beta: f64,
}

impl DerivedConstants {
    /// Build from `(a, b)` directly; `alpha` is left at zero. Used by
    /// grids that sweep the analytic constants rather than physical ones.
    pub fn from_ab(a: f64, b: f64) -> Self {
        Self {
            snr_target: 1.0 / b,
            alpha: 0.0,
            a,
            b,
            beta: -(-a).exp_m1(),
        }
    }
}

pub fn derive_constants(params: &SystemParams) -> DerivedConstants {
    let snr_target = params.rate_r0.exp2() - 1.0;
    let a = if params.pmax_over_n0 > 0.0 {
        snr_target / params.pmax_over_n0
    } else {
        f64::INFINITY
    };
    DerivedConstants {
        snr_target,
        alpha: snr_target / params.p0_over_n0,
        a,
        b: 1.0 / snr_target,
        beta: -(-a).exp_m1(),
    }
}

/// Fading gains of every link for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSample {
    /// PU → primary destination.
    pub h_p: f64,
    /// PU → each SU.
    pub h_ps: Vec<f64>,
    /// Each SU → primary destination.
    pub h_r: Vec<f64>,
    /// Each SU → secondary destination.
    pub h_s: Vec<f64>,
}

impl ChannelSample {
    pub fn zeros(n_su: usize) -> Self {
        Self {
            h_p: 0.0,
            h_ps: vec![0.0; n_su],
            h_r: vec![0.0; n_su],
            h_s: vec![0.0; n_su],
        }
    }

    pub fn n_su(&self) -> usize {
        self.h_s.len()
    }

    /// Redraw every gain in place, in the order `h_p, h_ps, h_r, h_s`.
    pub fn resample<R: Rng + ?Sized>(&mut self, rng: &mut R, sigma_p_sq: f64) {
        self.h_p = sigma_p_sq * rng.sample::<f64, _>(Exp1);
        for v in self
            .h_ps
            .iter_mut()
            .chain(&mut self.h_r)
            .chain(&mut self.h_s)
        {
            *v = SIGMA_SQ * rng.sample::<f64, _>(Exp1);
        }
    }
}

pub fn sample_channels<R: Rng + ?Sized>(rng: &mut R, params: &SystemParams) -> ChannelSample {
    let mut sample = ChannelSample::zeros(params.n_su);
    sample.resample(rng, params.sigma_p_sq);
    sample
}

/// The primary destination decodes the PU directly.
pub fn direct_success(sample: &ChannelSample, consts: &DerivedConstants) -> bool {
    sample.h_p > consts.alpha
}

/// At least one SU decodes the PU packet.
pub fn su_decode_success(sample: &ChannelSample, consts: &DerivedConstants) -> bool {
    sample.h_ps.iter().any(|&h| h > consts.alpha)
}

/// Rate of the interference-free secondary link.
pub fn rate_secondary(p_s: f64, h_s: f64) -> f64 {
    (p_s * h_s).ln_1p() / std::f64::consts::LN_2
}

/// Rate of the relay link with the own-data transmission as interference.
pub fn rate_relay(p_r: f64, h_r: f64, p_s: f64, h_i: f64) -> f64 {
    (p_r * h_r / (1.0 + p_s * h_i)).ln_1p() / std::f64::consts::LN_2
}

/// Whether `rate` carries a packet at target rate `r0`.
pub fn meets_target(rate: f64, r0: f64) -> bool {
    rate >= r0 * (1.0 - RATE_TOLERANCE)
}

/// One application of the departure-first queue recursion.
/// Returns `None` when a departure is requested from an empty queue.
pub fn queue_step(length: usize, departed: bool, arrived: bool) -> Option<usize> {
    let after = if departed {
        length.checked_sub(1)?
    } else {
        length
    };
    Some(after + usize::from(arrived))
}

/// A primary packet in flight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketRecord {
    pub arrival_slot: u64,
    pub relayed: bool,
}

/// Primary queue and the shared relay queue.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueueState {
    pub q_p: VecDeque<PacketRecord>,
    pub q_r: VecDeque<PacketRecord>,
}
