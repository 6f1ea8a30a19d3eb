//! Closed-form link success probabilities, the stability bound, SU
//! throughput and the mean primary delay.
//!
//! The relay-link probabilities are alternating binomial sums. Every sum is
//! accumulated with Neumaier compensation while also tracking the total
//! absolute mass of its terms; when the rounding that mass implies exceeds
//! [`CONDITION_BUDGET`] the evaluation reports [`Error::IllConditioned`]
//! and [`f_rstar`] falls back to quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{derive_constants, DerivedConstants, SystemParams};
use crate::oracle::quadrature;
use crate::policy::{PolicyConfig, PowerPolicy, SelectionPolicy};
use crate::special::e1_scaled;

/// Largest SU count accepted by the closed forms.
pub const MAX_USERS: usize = 25;

/// Largest tolerated rounding error of an alternating sum.
pub const CONDITION_BUDGET: f64 = 1e-9;

/// Per-term rounding in ulps assumed by the conditioning estimate.
const TERM_ULPS: f64 = 8.0;

/// Success probabilities feeding the queueing results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkStats {
    /// Direct PU → primary destination link.
    pub f_p: f64,
    /// At least one SU decodes the PU.
    pub f_ps: f64,
    /// Relay → primary destination.
    pub f_rstar: f64,
    /// Own-data SU → secondary destination.
    pub f_sstar: f64,
}

impl LinkStats {
    /// Evaluate all four probabilities at `params.lambda_p`. Under BPL the
    /// own-link probability depends on the arrival rate and is undefined
    /// at or beyond the stability bound.
    pub fn evaluate(params: &SystemParams, policy: &PolicyConfig) -> Result<Self> {
        params.validate()?;
        let consts = derive_constants(params);
        let n = params.n_su;
        let f_p = f_p(params);
        let f_ps = f_ps(params);
        let f_rstar = f_rstar(policy, &consts, n)?;
        let f_sstar = match policy.selection {
            SelectionPolicy::Bsl => f_sstar_bsl(&consts, n),
            SelectionPolicy::Bpl => {
                let g = gamma(params.lambda_p, f_p, f_ps, f_rstar)?;
                f_sstar_bpl(&consts, n, g)
            }
        };
        Ok(Self {
            f_p,
            f_ps,
            f_rstar,
            f_sstar,
        })
    }

    pub fn mu_p(&self) -> f64 {
        mu_p(self.f_p, self.f_ps)
    }

    pub fn epsilon(&self) -> f64 {
        epsilon(self.f_p, self.f_ps)
    }
}

/// Mean queue lengths and delay with the coefficients of the relay-queue
/// rational function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayBreakdown {
    pub n_p: f64,
    pub n_r: f64,
    pub tau: f64,
    pub epsilon: f64,
    pub r: f64,
    pub s: f64,
    pub delta: f64,
    pub zeta: f64,
    pub eta: f64,
}

pub fn f_p(params: &SystemParams) -> f64 {
    (-derive_constants(params).alpha / params.sigma_p_sq).exp()
}

pub fn f_ps(params: &SystemParams) -> f64 {
    let miss = -(-derive_constants(params).alpha).exp_m1();
    1.0 - miss.powi(params.n_su as i32)
}

/// Service probability of the primary queue.
pub fn mu_p(f_p: f64, f_ps: f64) -> f64 {
    f_p + (1.0 - f_p) * f_ps
}

/// Fraction of primary packets that pass through the relay queue.
pub fn epsilon(f_p: f64, f_ps: f64) -> f64 {
    let mu = mu_p(f_p, f_ps);
    if mu == 0.0 {
        0.0
    } else {
        (1.0 - f_p) * f_ps / mu
    }
}

/// Largest arrival rate keeping both queues stable.
pub fn stability_bound(f_p: f64, f_ps: f64, f_rstar: f64) -> f64 {
    let den = f_rstar + (1.0 - f_p) * f_ps;
    if den == 0.0 {
        mu_p(f_p, f_ps)
    } else {
        f_rstar * mu_p(f_p, f_ps) / den
    }
}

pub fn max_stable_arrival(stats: &LinkStats) -> f64 {
    stability_bound(stats.f_p, stats.f_ps, stats.f_rstar)
}

/// Probability that the relay queue is non-empty in a PU-idle slot.
pub fn gamma(lambda_p: f64, f_p: f64, f_ps: f64, f_rstar: f64) -> Result<f64> {
    if lambda_p == 0.0 {
        return Ok(0.0);
    }
    let bound = stability_bound(f_p, f_ps, f_rstar);
    if lambda_p >= bound {
        return Err(Error::Unstable { lambda_p, bound });
    }
    let g = lambda_p * (1.0 - f_p) * f_ps / ((mu_p(f_p, f_ps) - lambda_p) * f_rstar);
    if g >= 1.0 {
        return Err(Error::Unstable { lambda_p, bound });
    }
    Ok(g)
}

/// Own-link success with the full N-user maximum.
pub fn f_sstar_bsl(consts: &DerivedConstants, n: usize) -> f64 {
    1.0 - consts.beta.powi(n as i32)
}

/// Own-link success under BPL: the best of N−1 while the relay queue is
/// busy, the best of N otherwise.
pub fn f_sstar_bpl(consts: &DerivedConstants, n: usize, gamma: f64) -> f64 {
    let busy = 1.0 - consts.beta.powi(n as i32 - 1);
    let idle = 1.0 - consts.beta.powi(n as i32);
    gamma * busy + (1.0 - gamma) * idle
}

/// Per-SU own-packet throughput.
pub fn su_throughput(lambda_p: f64, stats: &LinkStats, n: usize) -> Result<f64> {
    let bound = max_stable_arrival(stats);
    if lambda_p >= bound {
        return Err(Error::Unstable { lambda_p, bound });
    }
    Ok((1.0 - lambda_p / stats.mu_p()) * stats.f_sstar / n as f64)
}

/// Mean queue lengths and primary delay at arrival rate `lambda_p`.
pub fn avg_delay(lambda_p: f64, stats: &LinkStats) -> Result<DelayBreakdown> {
    if !(lambda_p > 0.0) {
        return Err(invalid("lambda_p", "delay needs a positive arrival rate"));
    }
    let bound = max_stable_arrival(stats);
    if lambda_p >= bound {
        return Err(Error::Unstable { lambda_p, bound });
    }
    let LinkStats {
        f_p,
        f_ps,
        f_rstar: f_r,
        ..
    } = *stats;
    let mu = mu_p(f_p, f_ps);
    let relay_in = f_ps * (1.0 - f_p);
    let l = lambda_p;

    let n_p = (l - l * l) / (mu - l);
    let r = relay_in * ((f_r - f_p) / mu - f_r - relay_in);
    let s = relay_in * mu;
    let delta = f_r + relay_in;
    let zeta = mu * (-2.0 * f_r - relay_in);
    let eta = mu * mu * f_r;
    let n_r = (r * l * l + s * l) / (delta * l * l + zeta * l + eta);
    Ok(DelayBreakdown {
        n_p,
        n_r,
        tau: (n_p + n_r) / l,
        epsilon: epsilon(f_p, f_ps),
        r,
        s,
        delta,
        zeta,
        eta,
    })
}

/// Relay-link success for any policy: the closed form where it is well
/// conditioned, adaptive quadrature otherwise.
pub fn f_rstar(policy: &PolicyConfig, consts: &DerivedConstants, n: usize) -> Result<f64> {
    match f_rstar_closed(policy, consts, n) {
        Err(Error::IllConditioned { .. }) => quadrature::quadrature_f_rstar(policy, consts, n),
        other => other,
    }
}

/// The closed form only; may report [`Error::IllConditioned`].
pub fn f_rstar_closed(policy: &PolicyConfig, consts: &DerivedConstants, n: usize) -> Result<f64> {
    match (policy.power, policy.selection) {
        (PowerPolicy::Ep, SelectionPolicy::Bsl) => f_rstar_ep_bsl(consts, n),
        (PowerPolicy::Ep, SelectionPolicy::Bpl) => f_rstar_ep_bpl(consts, n),
        (PowerPolicy::Ap, SelectionPolicy::Bsl) => f_rstar_ap_bsl(consts, n),
        (PowerPolicy::Ap, SelectionPolicy::Bpl) => f_rstar_ap_bpl(consts, n),
    }
}

pub fn f_rstar_ep_bsl(consts: &DerivedConstants, n: usize) -> Result<f64> {
    check_users(n)?;
    let (a, b) = (consts.a, consts.b);
    if a.is_infinite() {
        return Ok(0.0);
    }
    let mut acc = Accumulator::default();
    for k in 1..n {
        let kf = k as f64;
        let mag = binomial(n - 1, k) * (-kf * a).exp() / (1.0 + kf / b);
        acc.add(-sign(k) * mag, mag);
    }
    acc.finish(n)
}

pub fn f_rstar_ep_bpl(consts: &DerivedConstants, n: usize) -> Result<f64> {
    check_users(n)?;
    let (a, b) = (consts.a, consts.b);
    if a.is_infinite() {
        return Ok(0.0);
    }
    let nf = n as f64;
    let scale = nf / (nf - 1.0);
    let mut acc = Accumulator::default();
    for k in 1..n {
        let ck = scale * binomial(n - 1, k - 1);
        for m in 0..k {
            let cm = ck * binomial(k - 1, m);
            for l in 1..=n {
                let lf = l as f64;
                let den = (n - k + m + 1) as f64 + lf / b;
                let mag = cm * binomial(n, l) * (-a * lf).exp() / den;
                acc.add(-sign(m + l) * mag, mag);
            }
        }
    }
    acc.finish(n)
}

pub fn f_rstar_ap_bsl(consts: &DerivedConstants, n: usize) -> Result<f64> {
    check_users(n)?;
    let (a, b, beta) = (consts.a, consts.b, consts.beta);
    if a.is_infinite() {
        return Ok(0.0);
    }
    let nf = n as f64;
    let bn = beta.powi(n as i32);
    let mut acc = Accumulator::default();
    acc.add(bn * (1.0 - bn), bn * (1.0 - bn));

    // I3 without its (N-1)/(k+1) prefactor does not depend on k.
    let mut i3_core = Accumulator::default();
    for l in 0..n - 1 {
        let mag = binomial(n - 2, l) * (-a * (l + 1) as f64).exp() / (l + 1) as f64;
        i3_core.add(sign(l) * mag, mag);
    }

    for k in 0..n {
        let kf = (k + 1) as f64;
        let outer = nf * binomial(n - 1, k) * (-a * kf).exp();
        let i3_scale = (nf - 1.0) / kf;
        let (i3, i3_mass) = (i3_scale * i3_core.value(), i3_scale * i3_core.mass);

        let mut i4 = Accumulator::default();
        if a > 0.0 {
            for l in 0..n - 1 {
                let lf = l as f64;
                let x = a * (1.0 + b + lf) * kf / b;
                let mag = (a / b)
                    * (nf - 1.0)
                    * binomial(n - 2, l)
                    * (-a * (lf + 1.0)).exp()
                    * e1_scaled(x)?;
                i4.add(sign(l) * mag, mag);
            }
        }
        let s = sign(k);
        acc.add(s * outer * (i3 - i4.value()), outer * (i3_mass + i4.mass));
    }
    acc.finish(n)
}

pub fn f_rstar_ap_bpl(consts: &DerivedConstants, n: usize) -> Result<f64> {
    check_users(n)?;
    let (a, b, beta) = (consts.a, consts.b, consts.beta);
    if a.is_infinite() {
        return Ok(0.0);
    }
    let nf = n as f64;
    let tail = beta.powi(n as i32 - 1) * (1.0 - beta.powi(n as i32));
    let mut acc = Accumulator::default();
    acc.add(tail, tail);

    // Inner sum of I5 is independent of every outer index.
    let mut i5_inner = Accumulator::default();
    for j in 0..n {
        let mag = binomial(n - 1, j) * (-a * (j + 1) as f64).exp() / (j + 1) as f64;
        i5_inner.add(sign(j) * mag, mag);
    }

    for k in 1..n {
        for l in 0..k {
            let big_m = (n - k + l + 1) as f64;
            for m in 0..n - 1 {
                let mf = (m + 1) as f64;
                let coef =
                    binomial(n - 1, k - 1) * binomial(k - 1, l) * binomial(n - 2, m) * nf * nf
                        / big_m;
                let em = (-a * mf).exp();
                let (i5, i5_mass) = (em / mf * i5_inner.value(), em / mf * i5_inner.mass);

                let mut i6 = Accumulator::default();
                if a > 0.0 {
                    for j in 0..n {
                        let t = b * big_m + (j + 1) as f64;
                        let x = t * a * mf / (b * big_m);
                        let mag = binomial(n - 1, j) * a / (b * big_m)
                            * em
                            * (-a * (j + 1) as f64).exp()
                            * e1_scaled(x)?;
                        i6.add(sign(j) * mag, mag);
                    }
                }
                acc.add(
                    sign(m + l) * coef * (i5 - i6.value()),
                    coef * (i5_mass + i6.mass),
                );
            }
        }
    }
    acc.finish(n)
}

fn check_users(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::TooFewUsers(n))
    } else if n > MAX_USERS {
        Err(Error::TooManyUsers { n, max: MAX_USERS })
    } else {
        Ok(())
    }
}

fn sign(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c.round()
}

/// Neumaier-compensated sum that also records `Σ|term|`.
#[derive(Debug, Default, Clone, Copy)]
struct Accumulator {
    sum: f64,
    comp: f64,
    mass: f64,
}

impl Accumulator {
    fn add(&mut self, term: f64, mass: f64) {
        let t = self.sum + term;
        if self.sum.abs() >= term.abs() {
            self.comp += (self.sum - t) + term;
        } else {
            self.comp += (term - t) + self.sum;
        }
        self.sum = t;
        self.mass += mass;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }

    fn error_estimate(&self) -> f64 {
        TERM_ULPS * f64::EPSILON * self.mass
    }

    fn finish(&self, n: usize) -> Result<f64> {
        let error_estimate = self.error_estimate();
        if error_estimate > CONDITION_BUDGET {
            return Err(Error::IllConditioned { n, error_estimate });
        }
        Ok(self.value().clamp(0.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SystemParams;

    fn operating_point() -> (SystemParams, DerivedConstants) {
        let p = SystemParams::default();
        (p, derive_constants(&p))
    }

    fn ab(a: f64) -> DerivedConstants {
        DerivedConstants::from_ab(a, 1.0 / 3.0)
    }

    #[test]
    fn primary_link_quantities() {
        let (p, _) = operating_point();
        assert!((f_p(&p) - 0.301_194_211_912_202_1).abs() < 1e-15);
        assert!((f_ps(&p) - 0.932_824_805_269_409_3).abs() < 1e-15);
        assert!((mu_p(f_p(&p), f_ps(&p)) - 0.953_057_585_106_338_1).abs() < 1e-15);
        assert!((epsilon(f_p(&p), f_ps(&p)) - 0.683_970_605_114_489_4).abs() < 1e-15);
        let free = SystemParams {
            rate_r0: 1e-300,
            ..p
        };
        assert_eq!(f_p(&free), 1.0);
        assert_eq!(f_ps(&free), 1.0);
        assert_eq!(epsilon(1.0, 1.0), 0.0);
    }

    #[test]
    fn ep_bsl_two_users_reduces_to_quarter_exponential() {
        let (_, c) = operating_point();
        let v = f_rstar_ep_bsl(&c, 2).unwrap();
        assert!((v - 0.137_398_054_922_117_71).abs() < 1e-15);
        assert!((v - (-c.a).exp() / 4.0).abs() < 1e-15);
        assert!((f_rstar_ep_bsl(&ab(0.0), 2).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn infinite_threshold_gives_zero() {
        let c = ab(f64::INFINITY);
        for p in PolicyConfig::ALL {
            assert_eq!(f_rstar(&p, &c, 3).unwrap(), 0.0);
        }
        assert_eq!(f_sstar_bsl(&c, 3), 0.0);
    }

    #[test]
    fn ap_with_unbounded_power_always_succeeds() {
        let c = ab(0.0);
        for n in 2..=6 {
            assert!((f_rstar_ap_bsl(&c, n).unwrap() - 1.0).abs() < 1e-12);
            assert!((f_rstar_ap_bpl(&c, n).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    // Values from a 40-digit evaluation of the same sums.
    #[test]
    fn frozen_closed_form_values() {
        let (_, c) = operating_point();
        type ClosedForm = fn(&DerivedConstants, usize) -> Result<f64>;
        let cases: [(ClosedForm, usize, f64); 7] = [
            (f_rstar_ep_bpl, 2, 0.364_160_873_765_251_6),
            (f_rstar_ap_bsl, 2, 0.364_560_356_543_273_99),
            (f_rstar_ap_bpl, 2, 0.647_205_084_114_787_7),
            (f_rstar_ep_bsl, 4, 0.299_343_997_015_247_2),
            (f_rstar_ap_bsl, 8, 0.830_446_520_156_085_1),
            (f_rstar_ap_bpl, 8, 0.890_961_059_130_314_5),
            (f_rstar_ep_bpl, 8, 0.533_006_343_386_383_5),
        ];
        for (f, n, want) in cases {
            let got = f(&c, n).unwrap();
            assert!((got - want).abs() < 1e-10, "n = {n}: {got} vs {want}");
        }
    }

    #[test]
    fn throughput_bound_at_operating_point() {
        let (p, _) = operating_point();
        let s = LinkStats::evaluate(&p, &PolicyConfig::EP_BSL).unwrap();
        assert!((max_stable_arrival(&s) - 0.165_912_400_831_392_91).abs() < 1e-12);
        assert!(max_stable_arrival(&s) < s.mu_p());
    }

    #[test]
    fn delay_worked_point() {
        let (p, _) = operating_point();
        let s = LinkStats::evaluate(&p, &PolicyConfig::EP_BSL).unwrap();
        let d = avg_delay(0.1, &s).unwrap();
        assert!((d.n_p - 0.105_502_842_447_360_72).abs() < 1e-12);
        assert!((d.n_r - 1.258_760_767_109_013).abs() < 1e-11);
        assert!((d.tau - 13.642_636_095_563_738).abs() < 1e-10);
        let lim = 1.0 / s.mu_p() + s.epsilon() / s.f_rstar;
        assert!((lim - 6.027_277_014_791_929).abs() < 1e-11);
        assert!((avg_delay(1e-4, &s).unwrap().tau - lim).abs() < 0.01);
        let b = max_stable_arrival(&s);
        assert!(avg_delay(b * (1.0 - 1e-9), &s).unwrap().tau > 1e6);
        assert!(matches!(avg_delay(b, &s), Err(Error::Unstable { .. })));
        assert!(avg_delay(0.0, &s).is_err());
    }

    #[test]
    fn delay_increases_with_load() {
        let (p, _) = operating_point();
        for pol in PolicyConfig::ALL {
            let s = LinkStats::evaluate(&p.with_lambda(0.0), &pol).unwrap();
            let b = max_stable_arrival(&s);
            let mut prev = 0.0;
            for i in 1..100 {
                let tau = avg_delay(b * i as f64 / 100.0, &s).unwrap().tau;
                assert!(tau > prev, "{pol} at step {i}");
                prev = tau;
            }
        }
    }

    #[test]
    fn su_throughput_worked_point() {
        let (p, _) = operating_point();
        let s = LinkStats::evaluate(&p, &PolicyConfig::EP_BSL).unwrap();
        let v = su_throughput(0.1, &s, 2).unwrap();
        assert!((v - 0.356_746_653_517_747_26).abs() < 1e-12);
        assert!((su_throughput(0.0, &s, 2).unwrap() - s.f_sstar / 2.0).abs() < 1e-15);
        assert!(su_throughput(0.2, &s, 2).is_err());
    }

    #[test]
    fn gamma_and_bpl_own_link() {
        let (p, c) = operating_point();
        assert_eq!(gamma(0.0, 0.3, 0.9, 0.2).unwrap(), 0.0);
        assert_eq!(f_sstar_bpl(&c, 2, 0.0), f_sstar_bsl(&c, 2));
        for i in 0..=10 {
            let g = i as f64 / 10.0;
            let v = f_sstar_bpl(&c, 3, g);
            assert!(v <= 1.0 - c.beta.powi(3) + 1e-15 && v >= 1.0 - c.beta.powi(2) - 1e-15);
        }
        let s = LinkStats::evaluate(&p.with_lambda(0.0), &PolicyConfig::EP_BPL).unwrap();
        let b = max_stable_arrival(&s);
        assert!(gamma(0.999 * b, s.f_p, s.f_ps, s.f_rstar).unwrap() < 1.0);
        assert!(matches!(
            LinkStats::evaluate(&p.with_lambda(b), &PolicyConfig::EP_BPL),
            Err(Error::Unstable { .. })
        ));
    }

    #[test]
    fn user_count_limits() {
        let c = ab(0.6);
        assert_eq!(f_rstar_ep_bsl(&c, 1), Err(Error::TooFewUsers(1)));
        assert_eq!(
            f_rstar_ap_bpl(&c, 26),
            Err(Error::TooManyUsers { n: 26, max: 25 })
        );
    }

    #[test]
    fn conditioning_guard_trips_for_large_populations() {
        let c = ab(0.1);
        assert!(matches!(
            f_rstar_ap_bpl(&c, 20),
            Err(Error::IllConditioned { n: 20, .. })
        ));
        let v = f_rstar(&PolicyConfig::AP_BPL, &c, 20).unwrap();
        assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn binomials_are_exact() {
        assert_eq!(binomial(25, 12), 5_200_300.0);
        assert_eq!(binomial(6, 0), 1.0);
        assert_eq!(binomial(3, 4), 0.0);
    }
}
