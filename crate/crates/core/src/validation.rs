//! Theory-versus-simulation checks. Each criterion produces a list of
//! [`CheckResult`] rows; a criterion passes when every row passes.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closed_form::{
    avg_delay, f_rstar, f_rstar_closed, max_stable_arrival, su_throughput, LinkStats,
};
use crate::error::Result;
use crate::model::{derive_constants, DerivedConstants, SystemParams};
use crate::oracle::{ks_distance, monte_carlo_success, quadrature_f_rstar, Link, PdfSpec};
use crate::policy::{PolicyConfig, PowerPolicy, SelectionPolicy};
use crate::sim::{run, SimConfig, SimMetrics, Stability};

/// Criteria evaluated by [`run_criterion`]. Run-to-run determinism and
/// total runtime are checked by running the whole suite twice.
pub const CRITERIA: [u8; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

pub fn criterion_title(id: u8) -> &'static str {
    match id {
        1 => "closed form vs quadrature",
        2 => "closed form vs exact Monte Carlo",
        3 => "stability bracket around the throughput bound",
        4 => "SU throughput and symmetry",
        5 => "mean primary delay and its trend in Pmax",
        6 => "primary queue length and relayed fraction",
        7 => "adaptive power never outages",
        8 => "selected-gain laws (KS)",
        9 => "power consumption",
        10 => "monotonicity of relay success",
        11 => "determinism and total runtime",
        _ => "unknown",
    }
}

/// Wall-clock budget of each criterion.
pub fn criterion_budget(id: u8) -> Duration {
    Duration::from_secs(match id {
        1 => 10,
        2 => 120,
        3 => 8 * 60,
        11 => 5 * 60,
        _ => 120,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationConfig {
    pub seed: u64,
    /// Simulated slots per run.
    pub slots: u64,
    pub warmup_slots: u64,
    /// Channel draws per Monte Carlo point.
    pub mc_draws: u64,
    /// Samples per KS test.
    pub ks_samples: usize,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            slots: 1_000_000,
            warmup_slots: 10_000,
            mc_draws: 10_000_000,
            ks_samples: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub criterion: u8,
    pub name: String,
    pub observed: f64,
    pub reference: f64,
    pub delta: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    /// Passes when `|observed - reference| <= tolerance`.
    fn close(criterion: u8, name: String, observed: f64, reference: f64, tolerance: f64) -> Self {
        let delta = (observed - reference).abs();
        Self {
            criterion,
            name,
            observed,
            reference,
            delta,
            tolerance,
            passed: delta <= tolerance,
        }
    }

    /// Passes when `observed` lies strictly on the required side of `limit`.
    fn below(criterion: u8, name: String, observed: f64, limit: f64) -> Self {
        Self {
            criterion,
            name,
            observed,
            reference: limit,
            delta: observed - limit,
            tolerance: 0.0,
            passed: observed < limit,
        }
    }

    fn flag(criterion: u8, name: String, observed: f64, passed: bool) -> Self {
        Self {
            criterion,
            name,
            observed,
            reference: f64::NAN,
            delta: f64::NAN,
            tolerance: f64::NAN,
            passed,
        }
    }

    fn error(criterion: u8, name: String, err: &crate::Error) -> Self {
        Self::flag(criterion, format!("{name}: {err}"), f64::NAN, false)
    }
}

#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: u8,
    pub checks: Vec<CheckResult>,
    pub elapsed: Duration,
}

impl CriterionOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Shared state of one validation session: simulation runs are memoised
/// so criteria that look at the same operating point reuse one run.
pub struct Validator {
    pub config: ValidationConfig,
    cache: Mutex<HashMap<String, SimMetrics>>,
}

impl Validator {
    pub fn new(config: ValidationConfig) -> Self {
        Self {
            config,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn run_all(&self) -> Vec<CriterionOutcome> {
        CRITERIA.iter().map(|&id| self.run_criterion(id)).collect()
    }

    pub fn run_criterion(&self, id: u8) -> CriterionOutcome {
        let start = Instant::now();
        let checks = match id {
            1 => self.closed_vs_quadrature(),
            2 => self.closed_vs_monte_carlo(),
            3 => self.stability_bracket(),
            4 => self.su_throughput_checks(),
            5 => self.delay_checks(),
            6 => self.queue_checks(),
            7 => self.ap_no_outage(),
            8 => self.distribution_checks(),
            9 => self.power_checks(),
            10 => self.monotonicity_checks(),
            _ => Vec::new(),
        };
        CriterionOutcome {
            id,
            checks,
            elapsed: start.elapsed(),
        }
    }

    fn simulate(
        &self,
        tag: &str,
        params: SystemParams,
        policy: PolicyConfig,
        slots: u64,
    ) -> Result<SimMetrics> {
        let key = format!("{tag}|{policy}|{params:?}|{slots}");
        if let Some(m) = self.cache.lock().map_err(|_| poisoned())?.get(&key) {
            return Ok(m.clone());
        }
        let cfg = SimConfig {
            params,
            policy,
            slots,
            warmup_slots: self.config.warmup_slots,
            seed: derive_seed(self.config.seed, &key),
        };
        let m = run(&cfg)?;
        self.cache
            .lock()
            .map_err(|_| poisoned())?
            .insert(key, m.clone());
        Ok(m)
    }

    fn closed_vs_quadrature(&self) -> Vec<CheckResult> {
        let mut points = Vec::new();
        for policy in PolicyConfig::ALL {
            for n in 2..=6 {
                for a in [0.1, 0.6, 2.0] {
                    points.push((policy, n, a));
                }
            }
        }
        points
            .into_par_iter()
            .map(|(policy, n, a)| {
                let c = DerivedConstants::from_ab(a, 1.0 / 3.0);
                let name = format!("{policy} N={n} a={a}");
                match (
                    f_rstar_closed(&policy, &c, n),
                    quadrature_f_rstar(&policy, &c, n),
                ) {
                    (Ok(cf), Ok(q)) => CheckResult::close(1, name, cf, q, 1e-6),
                    (Err(e), _) | (_, Err(e)) => CheckResult::error(1, name, &e),
                }
            })
            .collect()
    }

    fn closed_vs_monte_carlo(&self) -> Vec<CheckResult> {
        let base = SystemParams::default();
        let mut checks = Vec::new();
        let mut bpl_gap_significant = false;
        for policy in PolicyConfig::ALL {
            for n in [2, 4, 8] {
                let params = base.with_n(n);
                let name = format!("{policy} N={n}");
                let c = derive_constants(&params);
                let seed = derive_seed(self.config.seed, &format!("mc|{name}"));
                let (cf, mc) = match (
                    f_rstar(&policy, &c, n),
                    monte_carlo_success(&policy, &params, self.config.mc_draws, seed),
                ) {
                    (Ok(cf), Ok(mc)) => (cf, mc),
                    (Err(e), _) | (_, Err(e)) => {
                        checks.push(CheckResult::error(2, name, &e));
                        continue;
                    }
                };
                let tol = match policy.selection {
                    SelectionPolicy::Bsl => mc.ci_halfwidth,
                    SelectionPolicy::Bpl => {
                        bpl_gap_significant |= (cf - mc.f_rstar_hat).abs() > mc.ci_halfwidth;
                        0.03
                    }
                };
                checks.push(CheckResult::close(2, name, mc.f_rstar_hat, cf, tol));
            }
        }
        checks.push(CheckResult::flag(
            2,
            "BPL relaxation gap exceeds 3 sigma somewhere".into(),
            f64::from(u8::from(bpl_gap_significant)),
            bpl_gap_significant,
        ));
        checks
    }

    fn stability_bracket(&self) -> Vec<CheckResult> {
        let base = SystemParams::default();
        let mut checks = Vec::new();
        for policy in PolicyConfig::ALL {
            let bound = match LinkStats::evaluate(&base.with_lambda(0.0), &policy) {
                Ok(s) => max_stable_arrival(&s),
                Err(e) => {
                    checks.push(CheckResult::error(3, policy.to_string(), &e));
                    continue;
                }
            };
            for (factor, want_stable) in [(0.95, true), (1.05, false)] {
                let lambda = factor * bound;
                let name = format!("{policy} lambda={factor}x{bound:.6}");
                match self.simulate(
                    "bracket",
                    base.with_lambda(lambda),
                    policy,
                    self.config.slots,
                ) {
                    Ok(m) => {
                        let stable = m.stability.verdict.is_stable();
                        let verdict = if want_stable { "stable" } else { "growing" };
                        checks.push(CheckResult::flag(
                            3,
                            format!("{name} {verdict} (qr slope)"),
                            m.stability.slope,
                            stable == want_stable,
                        ));
                        if want_stable {
                            checks.push(CheckResult::close(
                                3,
                                format!("{name} PU throughput"),
                                m.pu_throughput,
                                lambda,
                                0.002,
                            ));
                        } else if let Stability::Growing { slope } = m.stability.verdict {
                            checks.push(CheckResult::flag(
                                3,
                                format!("{name} slope positive"),
                                slope,
                                slope > 0.0,
                            ));
                        }
                    }
                    Err(e) => checks.push(CheckResult::error(3, name, &e)),
                }
            }
        }
        checks
    }

    fn su_throughput_checks(&self) -> Vec<CheckResult> {
        let base = SystemParams::default();
        let mut checks = Vec::new();
        for policy in PolicyConfig::ALL {
            for lambda in [0.05, 0.1] {
                let params = base.with_lambda(lambda);
                let name = format!("{policy} lambda={lambda}");
                let analytic = LinkStats::evaluate(&params, &policy)
                    .and_then(|s| su_throughput(lambda, &s, params.n_su));
                match (
                    analytic,
                    self.simulate("load", params, policy, self.config.slots),
                ) {
                    (Ok(want), Ok(m)) => {
                        let worst = m
                            .su_throughput
                            .iter()
                            .copied()
                            .max_by(|x, y| (x - want).abs().total_cmp(&(y - want).abs()))
                            .unwrap_or(f64::NAN);
                        checks.push(CheckResult::close(
                            4,
                            format!("{name} per-SU throughput"),
                            worst,
                            want,
                            0.01,
                        ));
                        let hi = m.su_throughput.iter().copied().fold(f64::MIN, f64::max);
                        let lo = m.su_throughput.iter().copied().fold(f64::MAX, f64::min);
                        checks.push(CheckResult::close(
                            4,
                            format!("{name} symmetry spread"),
                            hi - lo,
                            0.0,
                            0.005,
                        ));
                    }
                    (Err(e), _) | (_, Err(e)) => checks.push(CheckResult::error(4, name, &e)),
                }
            }
        }
        checks
    }

    /// Arrival rates at which delay and queue lengths are compared.
    fn load_points(
        &self,
        policy: &PolicyConfig,
        base: &SystemParams,
    ) -> Result<Vec<(String, f64)>> {
        let bound = max_stable_arrival(&LinkStats::evaluate(&base.with_lambda(0.0), policy)?);
        Ok(vec![
            ("0.1".to_string(), 0.1),
            ("0.5x bound".to_string(), 0.5 * bound),
            ("0.8x bound".to_string(), 0.8 * bound),
        ])
    }

    fn delay_checks(&self) -> Vec<CheckResult> {
        let base = SystemParams::default();
        let mut checks = Vec::new();
        for policy in PolicyConfig::ALL {
            let tol = match policy.selection {
                SelectionPolicy::Bsl => 0.05,
                SelectionPolicy::Bpl => 0.10,
            };
            let points = match self.load_points(&policy, &base) {
                Ok(p) => p,
                Err(e) => {
                    checks.push(CheckResult::error(5, policy.to_string(), &e));
                    continue;
                }
            };
            for (label, lambda) in points {
                let params = base.with_lambda(lambda);
                let name = format!("{policy} lambda={label} relative delay error");
                let tau = LinkStats::evaluate(&params, &policy).and_then(|s| avg_delay(lambda, &s));
                match (
                    tau,
                    self.simulate("load", params, policy, self.config.slots),
                ) {
                    (Ok(d), Ok(m)) => {
                        let sim = m.avg_delay.unwrap_or(f64::NAN);
                        checks.push(CheckResult::close(5, name, sim / d.tau - 1.0, 0.0, tol));
                    }
                    (Err(e), _) | (_, Err(e)) => checks.push(CheckResult::error(5, name, &e)),
                }
            }

            let mut prev_sim = f64::INFINITY;
            let mut prev_tau = f64::INFINITY;
            let (mut sim_ok, mut tau_ok) = (true, true);
            for db in [7.0, 10.0, 13.0, 16.0, 20.0] {
                let params = base.with_pmax(db_to_linear(db));
                let tau = LinkStats::evaluate(&params, &policy)
                    .and_then(|s| avg_delay(params.lambda_p, &s))
                    .map(|d| d.tau)
                    .unwrap_or(f64::NAN);
                let sim = self
                    .simulate("pmax", params, policy, self.config.slots)
                    .ok()
                    .and_then(|m| m.avg_delay)
                    .unwrap_or(f64::NAN);
                sim_ok &= sim < prev_sim;
                tau_ok &= tau < prev_tau;
                prev_sim = sim;
                prev_tau = tau;
            }
            checks.push(CheckResult::flag(
                5,
                format!("{policy} simulated delay decreasing in Pmax"),
                prev_sim,
                sim_ok,
            ));
            checks.push(CheckResult::flag(
                5,
                format!("{policy} analytic delay decreasing in Pmax"),
                prev_tau,
                tau_ok,
            ));
        }
        checks
    }

    fn queue_checks(&self) -> Vec<CheckResult> {
        let base = SystemParams::default();
        let mut checks = Vec::new();
        for policy in PolicyConfig::ALL {
            let points = match self.load_points(&policy, &base) {
                Ok(p) => p,
                Err(e) => {
                    checks.push(CheckResult::error(6, policy.to_string(), &e));
                    continue;
                }
            };
            for (label, lambda) in points {
                let params = base.with_lambda(lambda);
                let name = format!("{policy} lambda={label}");
                let stats = LinkStats {
                    f_p: crate::closed_form::f_p(&params),
                    f_ps: crate::closed_form::f_ps(&params),
                    f_rstar: 1.0,
                    f_sstar: 0.0,
                };
                let n_p = (lambda - lambda * lambda) / (stats.mu_p() - lambda);
                match self.simulate("load", params, policy, self.config.slots) {
                    Ok(m) => {
                        checks.push(CheckResult::close(
                            6,
                            format!("{name} relative Qp length error"),
                            m.mean_qp / n_p - 1.0,
                            0.0,
                            0.05,
                        ));
                        checks.push(CheckResult::close(
                            6,
                            format!("{name} relayed fraction"),
                            m.relayed_fraction.unwrap_or(f64::NAN),
                            stats.epsilon(),
                            0.01,
                        ));
                    }
                    Err(e) => checks.push(CheckResult::error(6, name, &e)),
                }
            }
        }
        checks
    }

    fn ap_no_outage(&self) -> Vec<CheckResult> {
        let base = SystemParams::default();
        let mut checks = Vec::new();
        for policy in [PolicyConfig::AP_BSL, PolicyConfig::AP_BPL] {
            for lambda in [0.05, 0.1] {
                let name = format!("{policy} lambda={lambda} failed active transmissions");
                match self.simulate("load", base.with_lambda(lambda), policy, self.config.slots) {
                    Ok(m) => {
                        let failures = (m.relay_active_failures + m.own_active_failures) as f64;
                        checks.push(CheckResult::close(7, name, failures, 0.0, 0.0));
                    }
                    Err(e) => checks.push(CheckResult::error(7, name, &e)),
                }
            }
        }
        checks
    }

    fn distribution_checks(&self) -> Vec<CheckResult> {
        let specs = [
            (SelectionPolicy::Bsl, Link::Own),
            (SelectionPolicy::Bsl, Link::Relay),
            (SelectionPolicy::Bpl, Link::Relay),
            (SelectionPolicy::Bpl, Link::Own),
            (SelectionPolicy::Bpl, Link::Interference),
        ];
        let mut points = Vec::new();
        for n in [2, 4] {
            for (sel, link) in specs {
                points.push((sel, link, n));
            }
        }
        points
            .into_par_iter()
            .map(|(sel, link, n)| {
                let name = format!("{sel:?} {link:?} N={n} KS distance");
                let spec = match PdfSpec::new(sel, link, n) {
                    Ok(s) => s,
                    Err(e) => return CheckResult::error(8, name, &e),
                };
                let seed = derive_seed(self.config.seed, &format!("ks|{name}"));
                match ks_distance(&spec.draw(self.config.ks_samples, seed), &spec) {
                    Ok(d) => CheckResult::below(8, name, d, 0.005),
                    Err(e) => CheckResult::error(8, name, &e),
                }
            })
            .collect()
    }

    fn power_checks(&self) -> Vec<CheckResult> {
        let base = SystemParams::default();
        let slots = (self.config.slots / 10).max(self.config.warmup_slots + 1_000);
        let mut checks = Vec::new();
        for policy in PolicyConfig::ALL {
            let mut worst = f64::NEG_INFINITY;
            let mut ok = true;
            let mut first_bad = None;
            for db in 0..=20 {
                let pmax = db_to_linear(f64::from(db));
                let m = match self.simulate("power", base.with_pmax(pmax), policy, slots) {
                    Ok(m) => m,
                    Err(e) => {
                        checks.push(CheckResult::error(9, format!("{policy} {db} dB"), &e));
                        ok = false;
                        continue;
                    }
                };
                let point_ok = match policy.power {
                    PowerPolicy::Ap => {
                        let s = m.avg_power_s.unwrap_or(f64::INFINITY);
                        let r = m.avg_power_r.unwrap_or(f64::INFINITY);
                        let cs = m.cond_power_s.unwrap_or(0.0);
                        worst = worst.max(s.max(r) / pmax);
                        s < pmax && r < pmax && s <= cs && cs <= pmax
                    }
                    PowerPolicy::Ep => {
                        let exact = m.cond_power_s == Some(pmax)
                            && m.cond_power_r.map_or(true, |r| r == pmax);
                        worst = worst.max(if exact { 1.0 } else { f64::NAN });
                        exact
                    }
                };
                if !point_ok && first_bad.is_none() {
                    first_bad = Some(db);
                }
                ok &= point_ok;
            }
            let what = match policy.power {
                PowerPolicy::Ap => "scheduled-average power / Pmax below 1 on 0..20 dB",
                PowerPolicy::Ep => "conditional power equals Pmax on 0..20 dB",
            };
            let name = match first_bad {
                Some(db) => format!("{policy} {what} (first violation at {db} dB)"),
                None => format!("{policy} {what}"),
            };
            checks.push(CheckResult::flag(9, name, worst, ok));
        }
        checks
    }

    fn monotonicity_checks(&self) -> Vec<CheckResult> {
        const SLACK: f64 = 1e-9;
        let mut checks = Vec::new();
        for policy in PolicyConfig::ALL {
            for r0 in [1.5, 2.0] {
                let base = SystemParams {
                    rate_r0: r0,
                    ..SystemParams::default()
                };
                let mut table = vec![vec![f64::NAN; 21]; 9];
                let mut error = None;
                for (n, row) in table.iter_mut().enumerate().skip(2) {
                    for (db, cell) in row.iter_mut().enumerate() {
                        let params = base.with_n(n).with_pmax(db_to_linear(db as f64));
                        match f_rstar(&policy, &derive_constants(&params), n) {
                            Ok(v) => *cell = v,
                            Err(e) => error = Some(e),
                        }
                    }
                }
                if let Some(e) = error {
                    checks.push(CheckResult::error(10, format!("{policy} R0={r0}"), &e));
                    continue;
                }
                let mut drop_n: f64 = 0.0;
                let mut drop_p: f64 = 0.0;
                for n in 2..=8 {
                    for db in 0..=20 {
                        if n < 8 {
                            drop_n = drop_n.max(table[n][db] - table[n + 1][db]);
                        }
                        if db < 20 {
                            drop_p = drop_p.max(table[n][db] - table[n][db + 1]);
                        }
                    }
                }
                checks.push(CheckResult::below(
                    10,
                    format!("{policy} R0={r0} largest decrease in N"),
                    drop_n,
                    SLACK,
                ));
                checks.push(CheckResult::below(
                    10,
                    format!("{policy} R0={r0} largest decrease in Pmax"),
                    drop_p,
                    SLACK,
                ));
            }
        }
        checks
    }
}

fn poisoned() -> crate::Error {
    crate::Error::Config("simulation cache lock poisoned".into())
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Seed for a named sub-experiment: FNV-1a of the key mixed into the base
/// seed with one SplitMix64 round.
pub fn derive_seed(base: u64, key: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = base.wrapping_add(h).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
