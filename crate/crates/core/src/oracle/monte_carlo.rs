//! Direct estimation of the relay-service success probabilities by running
//! the exact selection, allocation and decoding rules on independent draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    derive_constants, meets_target, rate_relay, rate_secondary, ChannelSample, SystemParams,
};
use crate::policy::{schedule, PolicyConfig};

pub const MIN_DRAWS: u64 = 100_000;
const BATCH: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    /// Relay-link success rate.
    pub f_rstar_hat: f64,
    /// Own-link success rate in the same relay-service slots.
    pub f_sstar_hat: f64,
    /// Three-sigma binomial half-width of `f_rstar_hat`.
    pub ci_halfwidth: f64,
    /// Three-sigma binomial half-width of `f_sstar_hat`.
    pub ci_halfwidth_own: f64,
    pub draws: u64,
}

/// Three-sigma half-width of a binomial proportion.
pub fn three_sigma(p: f64, draws: u64) -> f64 {
    3.0 * (p * (1.0 - p) / draws as f64).sqrt()
}

/// Estimate relay and own-link success in slots where the relay queue is
/// served. Draws are split into fixed batches, each with its own ChaCha
/// stream, so the result does not depend on the thread count.
pub fn monte_carlo_success(
    policy: &PolicyConfig,
    params: &SystemParams,
    draws: u64,
    seed: u64,
) -> Result<McEstimate> {
    params.validate()?;
    if draws < MIN_DRAWS {
        return Err(Error::TooFewSamples {
            got: draws as usize,
            min: MIN_DRAWS as usize,
        });
    }
    let consts = derive_constants(params);
    let batches = draws.div_ceil(BATCH);
    let (relay_ok, own_ok) = (0..batches)
        .into_par_iter()
        .map(|batch| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(batch);
            let count = BATCH.min(draws - batch * BATCH);
            let mut sample = ChannelSample::zeros(params.n_su);
            let (mut relay_ok, mut own_ok) = (0u64, 0u64);
            for _ in 0..count {
                sample.resample(&mut rng, params.sigma_p_sq);
                let asg = schedule(&sample, true, &consts, params.pmax_over_n0, policy);
                let h_i = asg.active_own().map_or(0.0, |i| sample.h_r[i]);
                if let Some(r) = asg.active_relay() {
                    let rate = rate_relay(asg.p_r, sample.h_r[r], asg.p_s, h_i);
                    relay_ok += u64::from(meets_target(rate, params.rate_r0));
                }
                if let Some(o) = asg.active_own() {
                    let rate = rate_secondary(asg.p_s, sample.h_s[o]);
                    own_ok += u64::from(meets_target(rate, params.rate_r0));
                }
            }
            (relay_ok, own_ok)
        })
        .reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1));
    let f_r = relay_ok as f64 / draws as f64;
    let f_s = own_ok as f64 / draws as f64;
    Ok(McEstimate {
        f_rstar_hat: f_r,
        f_sstar_hat: f_s,
        ci_halfwidth: three_sigma(f_r, draws),
        ci_halfwidth_own: three_sigma(f_s, draws),
        draws,
    })
}
