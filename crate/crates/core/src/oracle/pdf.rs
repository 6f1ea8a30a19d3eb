//! Laws of the selected gains. Every SU-side gain is a unit-mean
//! exponential; selection turns them into maxima or mixtures of order
//! statistics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::closed_form::binomial;
use crate::error::{Error, Result};
use crate::model::ChannelSample;
use crate::policy::{select_pair, SelectionPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Link {
    /// Selected relay towards the primary destination.
    Relay,
    /// Selected own-data SU towards the secondary destination.
    Own,
    /// Own-data SU towards the primary destination.
    Interference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PdfSpec {
    pub policy: SelectionPolicy,
    pub link: Link,
    pub n_su: usize,
}

/// The shape of a law in terms of unit exponentials.
enum Law {
    Exponential,
    /// Maximum of `m` i.i.d. unit exponentials.
    MaxOf(usize),
    /// Uniform mixture of the 1st..(N-1)-th smallest of `N`.
    LowerOrderMixture(usize),
}

impl PdfSpec {
    pub fn new(policy: SelectionPolicy, link: Link, n_su: usize) -> Result<Self> {
        if n_su < 2 {
            return Err(Error::TooFewUsers(n_su));
        }
        Ok(Self { policy, link, n_su })
    }

    fn law(&self) -> Law {
        let n = self.n_su;
        match (self.policy, self.link) {
            (SelectionPolicy::Bsl, Link::Own) => Law::MaxOf(n),
            (SelectionPolicy::Bsl, Link::Relay) => Law::MaxOf(n - 1),
            (SelectionPolicy::Bsl, Link::Interference) => Law::Exponential,
            (SelectionPolicy::Bpl, Link::Relay) => Law::MaxOf(n),
            (SelectionPolicy::Bpl, Link::Own) => Law::MaxOf(n - 1),
            (SelectionPolicy::Bpl, Link::Interference) => Law::LowerOrderMixture(n),
        }
    }

    /// The gain this spec describes, read off one slot's draws.
    pub fn gain(&self, sample: &ChannelSample) -> f64 {
        let roles = select_pair(sample, self.policy);
        match self.link {
            Link::Relay => sample.h_r[roles.relay],
            Link::Own => sample.h_s[roles.own],
            Link::Interference => sample.h_r[roles.own],
        }
    }

    /// `count` independent draws of [`PdfSpec::gain`].
    pub fn draw(&self, count: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sample = ChannelSample::zeros(self.n_su);
        (0..count)
            .map(|_| {
                sample.resample(&mut rng, 1.0);
                self.gain(&sample)
            })
            .collect()
    }
}

pub fn pdf(spec: &PdfSpec, h: f64) -> Result<f64> {
    if h < 0.0 || h.is_nan() {
        return Err(Error::NegativeGain(h));
    }
    let e = (-h).exp();
    Ok(match spec.law() {
        Law::Exponential => e,
        Law::MaxOf(m) => m as f64 * e * (-(-h).exp_m1()).powi(m as i32 - 1),
        Law::LowerOrderMixture(n) => {
            let nf = n as f64;
            let f = -(-h).exp_m1();
            let s: f64 = (1..n)
                .map(|k| {
                    binomial(n - 1, k - 1) * (-h * (n - k + 1) as f64).exp() * f.powi(k as i32 - 1)
                })
                .sum();
            nf / (nf - 1.0) * s
        }
    })
}

pub fn cdf(spec: &PdfSpec, h: f64) -> Result<f64> {
    if h < 0.0 || h.is_nan() {
        return Err(Error::NegativeGain(h));
    }
    let f = -(-h).exp_m1();
    Ok(match spec.law() {
        Law::Exponential => f,
        Law::MaxOf(m) => f.powi(m as i32),
        Law::LowerOrderMixture(n) => {
            // P[k-th smallest <= h] = P[at least k of N below h]; summing
            // over k = 1..N-1 weights each binomial cell j by min(j, N-1).
            let g = (-h).exp();
            (1..=n)
                .map(|j| {
                    binomial(n, j) * f.powi(j as i32) * g.powi((n - j) as i32) * j.min(n - 1) as f64
                })
                .sum::<f64>()
                / (n - 1) as f64
        }
    })
}

/// `P[X > h]` for the maximum of `m` unit exponentials, without cancellation.
pub(crate) fn max_survival(m: usize, h: f64) -> f64 {
    if h <= 0.0 {
        return 1.0;
    }
    -(m as f64 * (-(-h).exp()).ln_1p()).exp_m1()
}
