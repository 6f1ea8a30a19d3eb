//! Node selection (best secondary link / best primary link) and power
//! allocation (equal / adaptive) for the slots in which the SUs own the
//! channel.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChannelSample, DerivedConstants};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PowerPolicy {
    /// Every transmitter uses the full budget.
    Ep,
    /// Minimum power meeting the target rate; silence when it exceeds the budget.
    Ap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SelectionPolicy {
    /// Own-data SU first (best link to the secondary destination).
    Bsl,
    /// Relay SU first (best link to the primary destination).
    Bpl,
}

/// What happens to the surviving transmitter when its partner is silenced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Reselection {
    /// Matches the analysis: under BSL a silenced own-data SU hands the
    /// relay role to the best of all N links; under BPL nothing changes.
    #[default]
    AnalysisFaithful,
    /// A lone survivor is always re-drawn as the best of all N links.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub power: PowerPolicy,
    pub selection: SelectionPolicy,
    #[serde(default)]
    pub reselect_on_silence: Reselection,
}

impl PolicyConfig {
    pub const EP_BSL: Self = Self::new(PowerPolicy::Ep, SelectionPolicy::Bsl);
    pub const EP_BPL: Self = Self::new(PowerPolicy::Ep, SelectionPolicy::Bpl);
    pub const AP_BSL: Self = Self::new(PowerPolicy::Ap, SelectionPolicy::Bsl);
    pub const AP_BPL: Self = Self::new(PowerPolicy::Ap, SelectionPolicy::Bpl);
    pub const ALL: [Self; 4] = [Self::EP_BSL, Self::EP_BPL, Self::AP_BSL, Self::AP_BPL];

    pub const fn new(power: PowerPolicy, selection: SelectionPolicy) -> Self {
        Self {
            power,
            selection,
            reselect_on_silence: Reselection::AnalysisFaithful,
        }
    }

    pub fn label(&self) -> &'static str {
        match (self.power, self.selection) {
            (PowerPolicy::Ep, SelectionPolicy::Bsl) => "EP-BSL",
            (PowerPolicy::Ep, SelectionPolicy::Bpl) => "EP-BPL",
            (PowerPolicy::Ap, SelectionPolicy::Bsl) => "AP-BSL",
            (PowerPolicy::Ap, SelectionPolicy::Bpl) => "AP-BPL",
        }
    }
}

impl fmt::Display for PolicyConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())?;
        if self.reselect_on_silence == Reselection::Literal {
            f.write_str("/literal")?;
        }
        Ok(())
    }
}

impl FromStr for PolicyConfig {
    type Err = Error;

    /// Accepts `EP-BSL`, `ap_bpl`, `AP-BSL/literal` and similar spellings.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (body, reselect) = match lower.split_once('/') {
            Some((body, "literal")) => (body.to_string(), Reselection::Literal),
            Some((body, "faithful")) => (body.to_string(), Reselection::AnalysisFaithful),
            Some(_) => return Err(Error::Config(format!("unknown policy `{s}`"))),
            None => (lower, Reselection::AnalysisFaithful),
        };
        let base = match body.replace('_', "-").as_str() {
            "ep-bsl" => Self::EP_BSL,
            "ep-bpl" => Self::EP_BPL,
            "ap-bsl" => Self::AP_BSL,
            "ap-bpl" => Self::AP_BPL,
            _ => return Err(Error::Config(format!("unknown policy `{s}`"))),
        };
        Ok(Self {
            reselect_on_silence: reselect,
            ..base
        })
    }
}

/// The two roles chosen for a relay-service slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Roles {
    pub relay: usize,
    pub own: usize,
}

/// Transmitters and powers for one SU-owned slot.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Assignment {
    pub relay_su: Option<usize>,
    pub own_su: Option<usize>,
    pub p_r: f64,
    pub p_s: f64,
    pub silenced_relay: bool,
    pub silenced_own: bool,
}

impl Assignment {
    /// SU whose own transmission interferes with the relay, if it transmits.
    pub fn active_own(&self) -> Option<usize> {
        self.own_su.filter(|_| !self.silenced_own)
    }

    pub fn active_relay(&self) -> Option<usize> {
        self.relay_su.filter(|_| !self.silenced_relay)
    }
}

/// Index of the largest entry; lowest index wins ties.
pub fn argmax(v: &[f64]) -> usize {
    argmax_excluding(v, usize::MAX)
}

/// Index of the largest entry other than `skip`; lowest index wins ties.
pub fn argmax_excluding(v: &[f64], skip: usize) -> usize {
    let mut best = usize::MAX;
    for (i, &x) in v.iter().enumerate() {
        if i != skip && (best == usize::MAX || x > v[best]) {
            best = i;
        }
    }
    best
}

/// Own-data SU is the best link to the secondary destination; the relay is
/// the best of the rest towards the primary destination.
pub fn select_pair_bsl(sample: &ChannelSample) -> Roles {
    let own = argmax(&sample.h_s);
    Roles {
        relay: argmax_excluding(&sample.h_r, own),
        own,
    }
}

/// Relay SU is the best link to the primary destination; the own-data SU
/// is the best of the rest towards the secondary destination.
pub fn select_pair_bpl(sample: &ChannelSample) -> Roles {
    let relay = argmax(&sample.h_r);
    Roles {
        relay,
        own: argmax_excluding(&sample.h_s, relay),
    }
}

/// Lone own-data transmitter when there is nothing to relay.
pub fn select_single(sample: &ChannelSample) -> usize {
    argmax(&sample.h_s)
}

pub fn select_pair(sample: &ChannelSample, selection: SelectionPolicy) -> Roles {
    match selection {
        SelectionPolicy::Bsl => select_pair_bsl(sample),
        SelectionPolicy::Bpl => select_pair_bpl(sample),
    }
}

/// Full budget to every selected transmitter.
pub fn allocate_ep(relay: Option<usize>, own: Option<usize>, pmax: f64) -> Assignment {
    Assignment {
        relay_su: relay,
        own_su: own,
        p_r: if relay.is_some() { pmax } else { 0.0 },
        p_s: if own.is_some() { pmax } else { 0.0 },
        silenced_relay: false,
        silenced_own: false,
    }
}

/// Adaptive powers for a relay-service slot. The own-data power is fixed
/// first; the relay power then covers the interference it causes.
pub fn allocate_ap(
    sample: &ChannelSample,
    roles: Roles,
    consts: &DerivedConstants,
    pmax: f64,
    config: &PolicyConfig,
) -> Assignment {
    let k = consts.snr_target;
    let literal = config.reselect_on_silence == Reselection::Literal;
    let mut out = Assignment {
        relay_su: Some(roles.relay),
        own_su: Some(roles.own),
        ..Assignment::default()
    };

    let p_s = k / sample.h_s[roles.own];
    if p_s <= pmax {
        out.p_s = p_s;
    } else {
        out.silenced_own = true;
    }

    let mut relay = roles.relay;
    if out.silenced_own && (literal || config.selection == SelectionPolicy::Bsl) {
        relay = argmax(&sample.h_r);
        out.relay_su = Some(relay);
        if relay == roles.own {
            out.own_su = None;
        }
    }

    let h_i = if out.silenced_own {
        0.0
    } else {
        sample.h_r[roles.own]
    };
    let p_r = k * (1.0 + out.p_s * h_i) / sample.h_r[relay];
    if p_r <= pmax {
        out.p_r = p_r;
    } else {
        out.silenced_relay = true;
    }

    if literal && out.silenced_relay && !out.silenced_own {
        let own = argmax(&sample.h_s);
        out.own_su = Some(own);
        out.p_s = k / sample.h_s[own];
        if own == relay {
            out.relay_su = None;
        }
    }
    out
}

/// Assignment for a slot in which the primary queue is empty.
/// `relay_pending` tells whether the relay queue holds a packet.
pub fn schedule(
    sample: &ChannelSample,
    relay_pending: bool,
    consts: &DerivedConstants,
    pmax: f64,
    config: &PolicyConfig,
) -> Assignment {
    if relay_pending {
        let roles = select_pair(sample, config.selection);
        match config.power {
            PowerPolicy::Ep => allocate_ep(Some(roles.relay), Some(roles.own), pmax),
            PowerPolicy::Ap => allocate_ap(sample, roles, consts, pmax, config),
        }
    } else {
        let own = select_single(sample);
        match config.power {
            PowerPolicy::Ep => allocate_ep(None, Some(own), pmax),
            PowerPolicy::Ap => {
                let p_s = consts.snr_target / sample.h_s[own];
                let silenced = p_s > pmax;
                Assignment {
                    own_su: Some(own),
                    p_s: if silenced { 0.0 } else { p_s },
                    silenced_own: silenced,
                    ..Assignment::default()
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        derive_constants, meets_target, rate_relay, rate_secondary, sample_channels, SystemParams,
    };
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample(h_r: &[f64], h_s: &[f64]) -> ChannelSample {
        ChannelSample {
            h_p: 0.0,
            h_ps: vec![0.0; h_r.len()],
            h_r: h_r.to_vec(),
            h_s: h_s.to_vec(),
        }
    }

    #[test]
    fn labels_round_trip() {
        for p in PolicyConfig::ALL {
            assert_eq!(p.label().parse::<PolicyConfig>().unwrap(), p);
        }
        let lit: PolicyConfig = "ap_bsl/literal".parse().unwrap();
        assert_eq!(lit.reselect_on_silence, Reselection::Literal);
        assert_eq!(lit.to_string(), "AP-BSL/literal");
        assert!("XP-BSL".parse::<PolicyConfig>().is_err());
    }

    #[test]
    fn pair_selection_examples() {
        assert_eq!(
            select_pair_bsl(&sample(&[0.7, 0.8], &[0.2, 0.9])),
            Roles { own: 1, relay: 0 }
        );
        assert_eq!(
            select_pair_bsl(&sample(&[0.1, 0.3], &[0.9, 0.2])),
            Roles { own: 0, relay: 1 }
        );
        assert_eq!(
            select_pair_bpl(&sample(&[0.7, 0.8], &[0.2, 0.9])),
            Roles { relay: 1, own: 0 }
        );
        assert_eq!(
            select_pair_bpl(&sample(&[0.9, 0.1], &[0.5, 0.6])),
            Roles { relay: 0, own: 1 }
        );
        assert_eq!(select_single(&sample(&[0.0; 3], &[0.1, 0.5, 0.3])), 1);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax_excluding(&[2.0, 2.0, 2.0], 0), 1);
    }

    #[test]
    fn bsl_own_selection_is_uniform() {
        let params = SystemParams::default().with_n(3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts = [0u32; 3];
        let n = 1_000_000;
        for _ in 0..n {
            counts[select_pair_bsl(&sample_channels(&mut rng, &params)).own] += 1;
        }
        for c in counts {
            assert!((f64::from(c) / n as f64 - 1.0 / 3.0).abs() < 0.002);
        }
    }

    #[test]
    fn single_transmitter_success_under_ep() {
        let params = SystemParams::default();
        let c = derive_constants(&params);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 1_000_000;
        let mut ok = 0u32;
        for _ in 0..n {
            let s = sample_channels(&mut rng, &params);
            let a = schedule(&s, false, &c, params.pmax_over_n0, &PolicyConfig::EP_BSL);
            let own = a.own_su.unwrap();
            ok += u32::from(meets_target(rate_secondary(a.p_s, s.h_s[own]), 2.0));
        }
        let expected = 1.0 - c.beta.powi(2);
        assert!((expected - 0.797_132_831_434_841_3).abs() < 1e-12);
        assert!((f64::from(ok) / n as f64 - expected).abs() < 0.002);
    }

    #[test]
    fn ep_uses_full_budget() {
        let a = allocate_ep(Some(0), Some(1), 5.0);
        assert_eq!((a.p_r, a.p_s), (5.0, 5.0));
        let a = allocate_ep(None, Some(1), 5.0);
        assert_eq!((a.p_r, a.p_s), (0.0, 5.0));
        assert!(!a.silenced_own && !a.silenced_relay);
    }

    #[test]
    fn ap_examples() {
        let c = derive_constants(&SystemParams::default());
        let pmax = 10f64.powf(0.7);
        let s = sample(&[2.0, 0.5], &[1.0, 0.4]);
        let a = allocate_ap(
            &s,
            Roles { own: 0, relay: 1 },
            &c,
            pmax,
            &PolicyConfig::AP_BSL,
        );
        assert!((a.p_s - 3.0).abs() < 1e-12 && !a.silenced_own);
        // relay needs 3 * (1 + 3 * 2) / 0.5 = 42 > pmax
        assert!(a.silenced_relay && a.p_r == 0.0);

        let s = sample(&[0.2, 0.9], &[0.1, 0.05]);
        let a = allocate_ap(
            &s,
            Roles { own: 0, relay: 1 },
            &c,
            pmax,
            &PolicyConfig::AP_BPL,
        );
        assert!(a.silenced_own && a.p_s == 0.0);
        assert!((a.p_r - 3.0 / 0.9).abs() < 1e-12);
    }

    #[test]
    fn bsl_silenced_own_hands_relay_to_best_link() {
        let c = derive_constants(&SystemParams::default());
        // own = 1 (best h_s, still infeasible); best h_r is SU 1 as well.
        let s = sample(&[0.8, 3.0, 0.1], &[0.1, 0.2, 0.05]);
        let roles = select_pair_bsl(&s);
        assert_eq!(roles, Roles { own: 1, relay: 0 });
        let a = allocate_ap(&s, roles, &c, 5.0, &PolicyConfig::AP_BSL);
        assert_eq!(a.relay_su, Some(1));
        assert_eq!(a.own_su, None);
        assert!(a.silenced_own && !a.silenced_relay);
        assert!((a.p_r - 1.0).abs() < 1e-12);

        // BPL keeps its relay (already the best of all N).
        let a = allocate_ap(&s, select_pair_bpl(&s), &c, 5.0, &PolicyConfig::AP_BPL);
        assert_eq!(a.relay_su, Some(1));
    }

    #[test]
    fn literal_mode_redraws_lone_own_transmitter() {
        let c = derive_constants(&SystemParams::default());
        // BPL: relay = 0, own = best of the rest = 1; relay infeasible
        // because of the interference, so SU 0 (best h_s overall) takes over.
        let s = sample(&[1.0, 0.9], &[5.0, 1.0]);
        let mut cfg = PolicyConfig::AP_BPL;
        let faithful = allocate_ap(&s, select_pair_bpl(&s), &c, 5.0, &cfg);
        assert!(faithful.silenced_relay);
        assert_eq!(faithful.own_su, Some(1));
        cfg.reselect_on_silence = Reselection::Literal;
        let lit = allocate_ap(&s, select_pair_bpl(&s), &c, 5.0, &cfg);
        assert_eq!(lit.own_su, Some(0));
        assert_eq!(lit.relay_su, None);
        assert!((lit.p_s - 0.6).abs() < 1e-12);
    }

    fn check_invariants(a: &Assignment, pmax: f64) -> std::result::Result<(), TestCaseError> {
        if let (Some(r), Some(s)) = (a.relay_su, a.own_su) {
            prop_assert_ne!(r, s);
        }
        prop_assert!(a.p_r >= 0.0 && a.p_r <= pmax);
        prop_assert!(a.p_s >= 0.0 && a.p_s <= pmax);
        prop_assert_eq!(a.p_r == 0.0, a.relay_su.is_none() || a.silenced_relay);
        prop_assert_eq!(a.p_s == 0.0, a.own_su.is_none() || a.silenced_own);
        Ok(())
    }

    proptest! {
        #[test]
        fn ap_never_outages_and_respects_invariants(
            seed in any::<u64>(), n in 2usize..7, pmax_db in -5.0f64..20.0, lit in any::<bool>(), bsl in any::<bool>(),
        ) {
            let params = SystemParams::default().with_n(n).with_pmax(10f64.powf(pmax_db / 10.0));
            let c = derive_constants(&params);
            let mut cfg = if bsl { PolicyConfig::AP_BSL } else { PolicyConfig::AP_BPL };
            if lit { cfg.reselect_on_silence = Reselection::Literal; }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..200 {
                let s = sample_channels(&mut rng, &params);
                let a = schedule(&s, true, &c, params.pmax_over_n0, &cfg);
                check_invariants(&a, params.pmax_over_n0)?;
                let h_i = a.active_own().map_or(0.0, |i| s.h_r[i]);
                if let Some(r) = a.active_relay() {
                    prop_assert!(meets_target(rate_relay(a.p_r, s.h_r[r], a.p_s, h_i), params.rate_r0));
                }
                if let Some(o) = a.active_own() {
                    prop_assert!(meets_target(rate_secondary(a.p_s, s.h_s[o]), params.rate_r0));
                }
            }
        }

        #[test]
        fn selection_is_invariant_to_monotone_maps(h_r in proptest::collection::vec(0.0f64..10.0, 2..8),
                                                   seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h_s: Vec<f64> = h_r.iter().map(|_| rand::Rng::random::<f64>(&mut rng) * 5.0).collect();
            let s = sample(&h_r, &h_s);
            let t = sample(
                &h_r.iter().map(|x| (3.0 * x).exp() + 1.0).collect::<Vec<_>>(),
                &h_s.iter().map(|x| x.sqrt()).collect::<Vec<_>>(),
            );
            prop_assert_eq!(select_pair_bsl(&s), select_pair_bsl(&t));
            prop_assert_eq!(select_pair_bpl(&s), select_pair_bpl(&t));
            let a = allocate_ep(Some(select_pair_bsl(&s).relay), Some(select_pair_bsl(&s).own), 4.0);
            check_invariants(&a, 4.0)?;
        }
    }
}
