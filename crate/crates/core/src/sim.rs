//! Slot-by-slot simulation of the cooperative protocol.
//!
//! Each slot: the PU transmits if its queue is non-empty; otherwise the SUs
//! serve the relay queue (relay plus a simultaneous own-data transmission)
//! or, with nothing to relay, a single SU sends its own packet. A new PU
//! packet may arrive after all departures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{
    derive_constants, direct_success, meets_target, queue_step, rate_relay, rate_secondary,
    su_decode_success, ChannelSample, DerivedConstants, PacketRecord, QueueState, SystemParams,
};
use crate::policy::{schedule, Assignment, PolicyConfig};

pub const DEFAULT_SLOTS: u64 = 1_000_000;
pub const DEFAULT_WARMUP: u64 = 10_000;

/// Number of windows the relay-queue trace is split into.
pub const STABILITY_WINDOWS: usize = 10;
/// Least-squares slope of the window means above which a queue may be growing.
pub const GROWTH_SLOPE: f64 = 1e-4;
/// Required ratio between the last and first window means.
pub const GROWTH_RATIO: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: SystemParams,
    pub policy: PolicyConfig,
    pub slots: u64,
    pub warmup_slots: u64,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(params: SystemParams, policy: PolicyConfig) -> Self {
        Self {
            params,
            policy,
            slots: DEFAULT_SLOTS,
            warmup_slots: DEFAULT_WARMUP,
            seed: 1,
        }
    }

    pub fn with_slots(self, slots: u64) -> Self {
        Self { slots, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn with_warmup(self, warmup_slots: u64) -> Self {
        Self {
            warmup_slots,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.slots <= self.warmup_slots {
            return Err(invalid(
                "slots",
                format!(
                    "{} must exceed warmup_slots = {}",
                    self.slots, self.warmup_slots
                ),
            ));
        }
        if self.slots - self.warmup_slots < STABILITY_WINDOWS as u64 {
            return Err(Error::TraceTooShort {
                len: (self.slots - self.warmup_slots) as usize,
                min: STABILITY_WINDOWS,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Stability {
    Stable,
    Growing { slope: f64 },
}

impl Stability {
    pub fn is_stable(&self) -> bool {
        matches!(self, Stability::Stable)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub verdict: Stability,
    /// Least-squares slope of the window means, packets per slot.
    pub slope: f64,
    pub window_means: Vec<f64>,
}

/// Packet totals over the whole run, warmup included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Conservation {
    pub arrivals: u64,
    pub direct: u64,
    pub relayed: u64,
    pub residual_qp: u64,
    pub residual_qr: u64,
}

impl Conservation {
    pub fn balanced(&self) -> bool {
        self.arrivals == self.direct + self.relayed + self.residual_qp + self.residual_qr
    }
}

/// Statistics over the post-warmup slots. Ratios with an empty denominator
/// are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub measured_slots: u64,
    pub pu_throughput: f64,
    pub su_throughput: Vec<f64>,
    pub avg_delay: Option<f64>,
    pub mean_qp: f64,
    pub mean_qr: f64,
    pub avg_power_s: Option<f64>,
    pub avg_power_r: Option<f64>,
    pub cond_power_s: Option<f64>,
    pub cond_power_r: Option<f64>,
    pub relay_success_rate: Option<f64>,
    pub own_success_rate: Option<f64>,
    pub relayed_fraction: Option<f64>,
    /// Relay transmissions that were not silenced yet failed.
    pub relay_active_failures: u64,
    /// Own-data transmissions that were not silenced yet failed.
    pub own_active_failures: u64,
    pub conservation: Conservation,
    pub stability: StabilityReport,
}

impl SimMetrics {
    pub fn su_throughput_total(&self) -> f64 {
        self.su_throughput.iter().sum()
    }

    pub fn su_throughput_mean(&self) -> f64 {
        self.su_throughput_total() / self.su_throughput.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SlotKind {
    /// The PU owned the slot.
    Primary,
    /// The SUs served the relay queue.
    RelayService,
    /// Both queues empty; one SU sent its own packet.
    OwnOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotOutcome {
    pub kind: SlotKind,
    /// Primary packet that left the system this slot.
    pub delivered: Option<PacketRecord>,
    /// A packet moved from the primary queue to the relay queue.
    pub relayed_in: bool,
    pub assignment: Option<Assignment>,
    pub relay_success: bool,
    pub own_success: bool,
    pub arrival: bool,
}

/// Advance `state` by one slot. `slot` stamps arrivals and departures.
pub fn step<R: Rng + ?Sized>(
    state: &mut QueueState,
    sample: &ChannelSample,
    rng: &mut R,
    config: &SimConfig,
    consts: &DerivedConstants,
    slot: u64,
) -> Result<SlotOutcome> {
    let params = &config.params;
    let (qp0, qr0) = (state.q_p.len(), state.q_r.len());
    let mut out = SlotOutcome {
        kind: SlotKind::Primary,
        delivered: None,
        relayed_in: false,
        assignment: None,
        relay_success: false,
        own_success: false,
        arrival: false,
    };
    let protocol = |what| Error::Protocol { slot, what };

    if qp0 > 0 {
        if direct_success(sample, consts) {
            out.delivered = Some(
                state
                    .q_p
                    .pop_front()
                    .ok_or(protocol("empty primary queue"))?,
            );
        } else if su_decode_success(sample, consts) {
            let mut pkt = state
                .q_p
                .pop_front()
                .ok_or(protocol("empty primary queue"))?;
            pkt.relayed = true;
            state.q_r.push_back(pkt);
            out.relayed_in = true;
        }
    } else {
        let relay_pending = qr0 > 0;
        out.kind = if relay_pending {
            SlotKind::RelayService
        } else {
            SlotKind::OwnOnly
        };
        let asg = schedule(
            sample,
            relay_pending,
            consts,
            params.pmax_over_n0,
            &config.policy,
        );
        let h_i = asg.active_own().map_or(0.0, |i| sample.h_r[i]);
        if let Some(r) = asg.active_relay() {
            let rate = rate_relay(asg.p_r, sample.h_r[r], asg.p_s, h_i);
            out.relay_success = meets_target(rate, params.rate_r0);
        }
        if let Some(o) = asg.active_own() {
            out.own_success = meets_target(rate_secondary(asg.p_s, sample.h_s[o]), params.rate_r0);
        }
        if out.relay_success {
            out.delivered = Some(state.q_r.pop_front().ok_or(protocol("empty relay queue"))?);
        }
        out.assignment = Some(asg);
    }

    out.arrival = rng.random::<f64>() < params.lambda_p;
    if out.arrival {
        state.q_p.push_back(PacketRecord {
            arrival_slot: slot,
            relayed: false,
        });
    }

    let direct_dep = out.delivered.is_some() && out.kind == SlotKind::Primary;
    let qp_dep = direct_dep || out.relayed_in;
    let qr_dep = out.delivered.is_some() && out.kind == SlotKind::RelayService;
    let qp1 = queue_step(qp0, qp_dep, out.arrival).ok_or(protocol("primary queue underflow"))?;
    let qr1 = queue_step(qr0, qr_dep, out.relayed_in).ok_or(protocol("relay queue underflow"))?;
    if qp1 != state.q_p.len() || qr1 != state.q_r.len() {
        return Err(protocol("queue length bookkeeping mismatch"));
    }
    Ok(out)
}

/// Running mean; exact when every pushed value is identical.
#[derive(Default)]
struct Ratio {
    mean: f64,
    count: u64,
}

impl Ratio {
    fn push(&mut self, x: f64) {
        self.count += 1;
        self.mean += (x - self.mean) / self.count as f64;
    }

    fn get(&self) -> Option<f64> {
        (self.count > 0).then_some(self.mean)
    }
}

/// Run the protocol for `config.slots` slots. Deterministic in `config.seed`.
pub fn run(config: &SimConfig) -> Result<SimMetrics> {
    config.validate()?;
    let params = &config.params;
    let consts = derive_constants(params);
    let n = params.n_su;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = QueueState::default();
    let mut sample = ChannelSample::zeros(n);

    let measured = config.slots - config.warmup_slots;
    let window_len = measured / STABILITY_WINDOWS as u64;
    let mut window_sums = [0.0f64; STABILITY_WINDOWS];
    let mut window_counts = [0u64; STABILITY_WINDOWS];

    let mut cons = Conservation::default();
    let mut pu_delivered = 0u64;
    let mut su_delivered = vec![0u64; n];
    let mut delay = Ratio::default();
    let mut relayed_share = Ratio::default();
    let (mut qp_sum, mut qr_sum) = (0u64, 0u64);
    let (mut pow_s, mut pow_r) = (Ratio::default(), Ratio::default());
    let (mut cpow_s, mut cpow_r) = (Ratio::default(), Ratio::default());
    let (mut relay_rate, mut own_rate) = (Ratio::default(), Ratio::default());
    let (mut relay_fail, mut own_fail) = (0u64, 0u64);

    for slot in 0..config.slots {
        let (qp, qr) = (state.q_p.len() as u64, state.q_r.len() as u64);
        sample.resample(&mut rng, params.sigma_p_sq);
        let out = step(&mut state, &sample, &mut rng, config, &consts, slot)?;

        cons.arrivals += u64::from(out.arrival);
        if let Some(pkt) = out.delivered {
            if pkt.relayed {
                cons.relayed += 1;
            } else {
                cons.direct += 1;
            }
        }
        if slot < config.warmup_slots {
            continue;
        }

        let w = (((slot - config.warmup_slots) / window_len.max(1)) as usize)
            .min(STABILITY_WINDOWS - 1);
        window_sums[w] += qr as f64;
        window_counts[w] += 1;
        qp_sum += qp;
        qr_sum += qr;

        if let Some(pkt) = out.delivered {
            pu_delivered += 1;
            relayed_share.push(if pkt.relayed { 1.0 } else { 0.0 });
            if pkt.arrival_slot >= config.warmup_slots {
                delay.push((slot - pkt.arrival_slot) as f64);
            }
        }
        if let Some(asg) = out.assignment {
            if let Some(o) = asg.own_su {
                pow_s.push(asg.p_s);
                own_rate.push(if out.own_success { 1.0 } else { 0.0 });
                if out.own_success {
                    su_delivered[o] += 1;
                }
            }
            if asg.active_own().is_some() {
                cpow_s.push(asg.p_s);
                own_fail += u64::from(!out.own_success);
            }
            if out.kind == SlotKind::RelayService {
                relay_rate.push(if out.relay_success { 1.0 } else { 0.0 });
                pow_r.push(asg.p_r);
            }
            if asg.active_relay().is_some() {
                cpow_r.push(asg.p_r);
                relay_fail += u64::from(!out.relay_success);
            }
        }
    }
    cons.residual_qp = state.q_p.len() as u64;
    cons.residual_qr = state.q_r.len() as u64;

    let window_means: Vec<f64> = window_sums
        .iter()
        .zip(&window_counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let slope = window_slope(&window_means, window_len.max(1) as f64);
    let mf = measured as f64;
    Ok(SimMetrics {
        measured_slots: measured,
        pu_throughput: pu_delivered as f64 / mf,
        su_throughput: su_delivered.iter().map(|&d| d as f64 / mf).collect(),
        avg_delay: delay.get(),
        mean_qp: qp_sum as f64 / mf,
        mean_qr: qr_sum as f64 / mf,
        avg_power_s: pow_s.get(),
        avg_power_r: pow_r.get(),
        cond_power_s: cpow_s.get(),
        cond_power_r: cpow_r.get(),
        relay_success_rate: relay_rate.get(),
        own_success_rate: own_rate.get(),
        relayed_fraction: relayed_share.get(),
        relay_active_failures: relay_fail,
        own_active_failures: own_fail,
        conservation: cons,
        stability: StabilityReport {
            verdict: verdict(&window_means, slope),
            slope,
            window_means,
        },
    })
}

/// Least-squares slope of window means against window centres, per slot.
fn window_slope(means: &[f64], window_len: f64) -> f64 {
    let k = means.len() as f64;
    let xbar = (k - 1.0) / 2.0;
    let ybar = means.iter().sum::<f64>() / k;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, &y) in means.iter().enumerate() {
        let dx = i as f64 - xbar;
        sxy += dx * (y - ybar);
        sxx += dx * dx;
    }
    sxy / sxx / window_len
}

fn verdict(means: &[f64], slope: f64) -> Stability {
    let first = means[0];
    let last = means[means.len() - 1];
    if slope > GROWTH_SLOPE && last > GROWTH_RATIO * first {
        Stability::Growing { slope }
    } else {
        Stability::Stable
    }
}

/// Classify a relay-queue length trace as stable or growing.
pub fn stability_diagnostic(qr_length_trace: &[f64]) -> Result<Stability> {
    let len = qr_length_trace.len();
    if len < STABILITY_WINDOWS {
        return Err(Error::TraceTooShort {
            len,
            min: STABILITY_WINDOWS,
        });
    }
    let w = len / STABILITY_WINDOWS;
    let mut sums = [0.0f64; STABILITY_WINDOWS];
    let mut counts = [0usize; STABILITY_WINDOWS];
    for (i, &x) in qr_length_trace.iter().enumerate() {
        let k = (i / w).min(STABILITY_WINDOWS - 1);
        sums[k] += x;
        counts[k] += 1;
    }
    let means: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect();
    Ok(verdict(&means, window_slope(&means, w as f64)))
}
