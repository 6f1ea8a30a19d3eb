//! TOML-driven experiments and their CSV output.
//!
//! ```toml
//! mode = "sweep"
//! seed = 7
//! slots = 200000
//!
//! [params]
//! n_su = 2
//! pmax_db = 7.0
//!
//! [policy]
//! names = ["EP-BSL", "AP-BSL"]
//!
//! [sweep]
//! axis = "lambda_p"
//! start = 0.02
//! stop = 0.2
//! step = 0.02
//! ```

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Deserialize;

use crate::closed_form::{avg_delay, max_stable_arrival, su_throughput, LinkStats};
use crate::error::{Error, Result};
use crate::model::{derive_constants, SystemParams};
use crate::oracle::monte_carlo_success;
use crate::policy::{PolicyConfig, PowerPolicy, Reselection, SelectionPolicy};
use crate::sim::{run, SimConfig, SimMetrics, DEFAULT_SLOTS, DEFAULT_WARMUP};
use crate::validation::{
    db_to_linear, derive_seed, CheckResult, CriterionOutcome, ValidationConfig, Validator,
};
use crate::VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Analytic,
    Simulate,
    Sweep,
    Validate,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Analytic => "analytic",
            Mode::Simulate => "simulate",
            Mode::Sweep => "sweep",
            Mode::Validate => "validate",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "analytic" => Ok(Mode::Analytic),
            "simulate" => Ok(Mode::Simulate),
            "sweep" => Ok(Mode::Sweep),
            "validate" => Ok(Mode::Validate),
            other => Err(Error::Config(format!("unknown mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    PmaxDb,
    LambdaP,
    NSu,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: Axis,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Sweep {
    /// Grid points from `start` to `stop` inclusive.
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0)
            || !self.start.is_finite()
            || !self.stop.is_finite()
            || self.stop < self.start
        {
            return Err(Error::Config(format!(
                "sweep needs finite start <= stop and step > 0, got {}..{} step {}",
                self.start, self.stop, self.step
            )));
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        if count > 100_000 {
            return Err(Error::Config(format!("sweep has {count} points")));
        }
        // Rounded so that e.g. 0.1 + 2 * 0.01 prints as 0.12.
        Ok((0..count)
            .map(|i| ((self.start + i as f64 * self.step) * 1e12).round() / 1e12)
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawParams {
    n_su: usize,
    lambda_p: f64,
    rate_r0: f64,
    p0_db: f64,
    pmax_db: f64,
    sigma_p_sq: f64,
}

impl Default for RawParams {
    fn default() -> Self {
        Self {
            n_su: 2,
            lambda_p: 0.1,
            rate_r0: 2.0,
            p0_db: 10.0,
            pmax_db: 7.0,
            sigma_p_sq: 0.25,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawPolicy {
    power: Option<String>,
    selection: Option<String>,
    names: Option<Vec<String>>,
    reselect_on_silence: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    mode: Mode,
    seed: Option<u64>,
    slots: Option<u64>,
    warmup_slots: Option<u64>,
    mc_draws: Option<u64>,
    ks_samples: Option<usize>,
    output: Option<PathBuf>,
    #[serde(default)]
    params: RawParams,
    #[serde(default)]
    policy: RawPolicy,
    sweep: Option<Sweep>,
}

/// A fully resolved experiment. Decibel inputs are kept for reporting and
/// converted to linear ratios once, in [`ExperimentSpec::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub mode: Mode,
    pub seed: u64,
    pub slots: u64,
    pub warmup_slots: u64,
    /// Monte Carlo draws per sweep point (zero disables the columns) or
    /// per validation point. Defaults depend on the mode.
    pub mc_draws: Option<u64>,
    pub ks_samples: usize,
    pub output: Option<PathBuf>,
    pub p0_db: f64,
    pub pmax_db: f64,
    pub params: SystemParams,
    pub policies: Vec<PolicyConfig>,
    pub sweep: Option<Sweep>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self::from_raw(RawSpec {
            mode: Mode::Analytic,
            seed: None,
            slots: None,
            warmup_slots: None,
            mc_draws: None,
            ks_samples: None,
            output: None,
            params: RawParams::default(),
            policy: RawPolicy::default(),
            sweep: None,
        })
        .expect("default experiment is valid")
    }
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_raw(raw)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    fn from_raw(raw: RawSpec) -> Result<Self> {
        let reselect = match raw.policy.reselect_on_silence.as_deref() {
            None => Reselection::default(),
            Some(s) => parse_reselection(s)?,
        };
        let mut policies = match (&raw.policy.names, &raw.policy.power, &raw.policy.selection) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(Error::Config(
                    "policy: give either `names` or `power`/`selection`, not both".into(),
                ))
            }
            (Some(names), None, None) => names
                .iter()
                .map(|n| n.parse::<PolicyConfig>())
                .collect::<Result<Vec<_>>>()?,
            (None, None, None) => PolicyConfig::ALL.to_vec(),
            (None, power, selection) => {
                let power = match power.as_deref().map(str::to_ascii_uppercase).as_deref() {
                    None | Some("EP") => PowerPolicy::Ep,
                    Some("AP") => PowerPolicy::Ap,
                    Some(other) => {
                        return Err(Error::Config(format!("unknown power policy '{other}'")))
                    }
                };
                let selection = match selection.as_deref().map(str::to_ascii_uppercase).as_deref() {
                    None | Some("BSL") => SelectionPolicy::Bsl,
                    Some("BPL") => SelectionPolicy::Bpl,
                    Some(other) => {
                        return Err(Error::Config(format!("unknown selection policy '{other}'")))
                    }
                };
                vec![PolicyConfig::new(power, selection)]
            }
        };
        if policies.is_empty() {
            return Err(Error::Config("policy.names is empty".into()));
        }
        if raw.policy.reselect_on_silence.is_some() {
            for p in &mut policies {
                p.reselect_on_silence = reselect;
            }
        }

        let p = raw.params;
        let params = SystemParams::new(
            p.n_su,
            p.lambda_p,
            p.rate_r0,
            db_to_linear(p.p0_db),
            db_to_linear(p.pmax_db),
            p.sigma_p_sq,
        )?;
        let spec = Self {
            mode: raw.mode,
            seed: raw.seed.unwrap_or(1),
            slots: raw.slots.unwrap_or(DEFAULT_SLOTS),
            warmup_slots: raw.warmup_slots.unwrap_or(DEFAULT_WARMUP),
            mc_draws: raw.mc_draws,
            ks_samples: raw.ks_samples.unwrap_or(1_000_000),
            output: raw.output,
            p0_db: p.p0_db,
            pmax_db: p.pmax_db,
            params,
            policies,
            sweep: raw.sweep,
        };
        if let Some(s) = &spec.sweep {
            s.values()?;
        }
        Ok(spec)
    }

    pub fn validation_config(&self) -> ValidationConfig {
        let defaults = ValidationConfig::default();
        ValidationConfig {
            seed: self.seed,
            slots: self.slots,
            warmup_slots: self.warmup_slots,
            mc_draws: self
                .mc_draws
                .unwrap_or(defaults.mc_draws)
                .max(crate::oracle::monte_carlo::MIN_DRAWS),
            ks_samples: self.ks_samples,
        }
    }

    fn sweep_mc_draws(&self) -> u64 {
        self.mc_draws.unwrap_or(1_000_000)
    }

    /// Points of the experiment in output order: policy-major, then axis.
    fn points(&self) -> Result<Vec<Point>> {
        let axis_values = match &self.sweep {
            Some(s) => s.values()?.into_iter().map(|v| (Some(s.axis), v)).collect(),
            None => vec![(None, f64::NAN)],
        };
        let mut points = Vec::new();
        for &policy in &self.policies {
            for &(axis, value) in &axis_values {
                let mut params = self.params;
                let mut pmax_db = self.pmax_db;
                match axis {
                    Some(Axis::PmaxDb) => {
                        pmax_db = value;
                        params.pmax_over_n0 = db_to_linear(value);
                    }
                    Some(Axis::LambdaP) => params.lambda_p = value,
                    Some(Axis::NSu) => {
                        if value.fract() != 0.0 || value < 0.0 {
                            return Err(Error::Config(format!(
                                "n_su sweep value {value} is not an integer"
                            )));
                        }
                        params.n_su = value as usize;
                    }
                    None => {}
                }
                let index = points.len();
                points.push(Point {
                    index,
                    policy,
                    params,
                    pmax_db,
                    seed: derive_seed(self.seed, &format!("point{index}")),
                });
            }
        }
        Ok(points)
    }
}

fn parse_reselection(s: &str) -> Result<Reselection> {
    match s.to_ascii_lowercase().replace('_', "-").as_str() {
        "analysis-faithful" | "faithful" => Ok(Reselection::AnalysisFaithful),
        "literal" => Ok(Reselection::Literal),
        other => Err(Error::Config(format!(
            "unknown reselect_on_silence '{other}'"
        ))),
    }
}

#[derive(Debug, Clone, Copy)]
struct Point {
    index: usize,
    policy: PolicyConfig,
    params: SystemParams,
    pmax_db: f64,
    seed: u64,
}

/// Output table. `failures` counts rows whose status is not `ok` (or, in
/// validate mode, failed checks).
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub failures: usize,
}

pub const PARAM_COLUMNS: [&str; 11] = [
    "point",
    "policy",
    "reselect_on_silence",
    "n_su",
    "lambda_p",
    "rate_r0",
    "p0_db",
    "pmax_db",
    "p0_over_n0",
    "pmax_over_n0",
    "sigma_p_sq",
];

pub const ANALYTIC_COLUMNS: [&str; 15] = [
    "alpha",
    "a",
    "b",
    "beta",
    "f_p",
    "f_ps",
    "f_rstar",
    "f_sstar",
    "max_stable_lambda",
    "su_throughput",
    "n_p",
    "n_r",
    "tau",
    "unstable",
    "status",
];

pub const MC_COLUMNS: [&str; 4] = ["mc_draws", "mc_f_rstar", "mc_f_sstar", "mc_ci_halfwidth"];

pub const SIM_COLUMNS: [&str; 22] = [
    "seed",
    "slots",
    "warmup_slots",
    "sim_pu_throughput",
    "sim_su_throughput",
    "sim_su_spread",
    "sim_avg_delay",
    "sim_mean_qp",
    "sim_mean_qr",
    "sim_relayed_fraction",
    "sim_relay_success",
    "sim_own_success",
    "sim_avg_power_s",
    "sim_avg_power_r",
    "sim_cond_power_s",
    "sim_cond_power_r",
    "sim_active_failures",
    "sim_conserved",
    "sim_stability",
    "sim_qr_slope",
    "sim_unstable",
    "sim_status",
];

pub const VALIDATE_COLUMNS: [&str; 9] = [
    "criterion",
    "check",
    "observed",
    "reference",
    "delta",
    "tolerance",
    "result",
    "seed",
    "slots",
];

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn param_cells(p: &Point, p0_db: f64) -> Vec<String> {
    let reselect = match p.policy.reselect_on_silence {
        Reselection::AnalysisFaithful => "analysis-faithful",
        Reselection::Literal => "literal",
    };
    vec![
        p.index.to_string(),
        p.policy.label().to_string(),
        reselect.to_string(),
        p.params.n_su.to_string(),
        num(p.params.lambda_p),
        num(p.params.rate_r0),
        num(p0_db),
        num(p.pmax_db),
        num(p.params.p0_over_n0),
        num(p.params.pmax_over_n0),
        num(p.params.sigma_p_sq),
    ]
}

fn analytic_cells(p: &Point) -> (Vec<String>, bool) {
    let c = derive_constants(&p.params);
    let mut cells = vec![num(c.alpha), num(c.a), num(c.b), num(c.beta)];
    let lambda = p.params.lambda_p;
    let fp = crate::closed_form::f_p(&p.params);
    let fps = crate::closed_form::f_ps(&p.params);
    cells.extend([num(fp), num(fps)]);

    // The BPL own-data success depends on the load, so the relay success
    // and the bound are computed at zero load first.
    let base = LinkStats::evaluate(&p.params.with_lambda(0.0), &p.policy);
    let full = LinkStats::evaluate(&p.params, &p.policy);
    let f_r = base.as_ref().ok().map(|s| s.f_rstar);
    let bound = base.as_ref().ok().map(max_stable_arrival);
    let unstable =
        matches!(full, Err(Error::Unstable { .. })) || bound.is_some_and(|b| lambda >= b);
    let f_s = full.as_ref().ok().map(|s| s.f_sstar);
    let thr = full
        .as_ref()
        .ok()
        .and_then(|s| su_throughput(lambda, s, p.params.n_su).ok());
    let delay = full.as_ref().ok().and_then(|s| avg_delay(lambda, s).ok());
    let status = match (&base, &full) {
        (Err(e), _) => e.to_string(),
        (_, Err(e)) if !unstable => e.to_string(),
        _ if unstable => "unstable".to_string(),
        _ => "ok".to_string(),
    };
    cells.extend([
        opt(f_r),
        opt(f_s),
        opt(bound),
        opt(thr),
        opt(delay.map(|d| d.n_p)),
        opt(delay.map(|d| d.n_r)),
        opt(delay.map(|d| d.tau)),
        unstable.to_string(),
        status.clone(),
    ]);
    (cells, status == "ok" || unstable)
}

fn mc_cells(p: &Point, draws: u64) -> Vec<String> {
    if draws == 0 {
        return vec![String::new(); MC_COLUMNS.len()];
    }
    match monte_carlo_success(&p.policy, &p.params, draws, p.seed) {
        Ok(m) => vec![
            draws.to_string(),
            num(m.f_rstar_hat),
            num(m.f_sstar_hat),
            num(m.ci_halfwidth),
        ],
        Err(_) => vec![
            draws.to_string(),
            String::new(),
            String::new(),
            String::new(),
        ],
    }
}

fn sim_cells(p: &Point, spec: &ExperimentSpec) -> (Vec<String>, bool) {
    let cfg = SimConfig {
        params: p.params,
        policy: p.policy,
        slots: spec.slots,
        warmup_slots: spec.warmup_slots,
        seed: p.seed,
    };
    let head = vec![
        p.seed.to_string(),
        spec.slots.to_string(),
        spec.warmup_slots.to_string(),
    ];
    let mut cells = head;
    match run(&cfg) {
        Ok(m) => {
            cells.extend(metric_cells(&m));
            (cells, true)
        }
        Err(e) => {
            cells.extend(vec![String::new(); SIM_COLUMNS.len() - 4]);
            cells.push(e.to_string());
            (cells, false)
        }
    }
}

fn metric_cells(m: &SimMetrics) -> Vec<String> {
    let hi = m.su_throughput.iter().copied().fold(f64::MIN, f64::max);
    let lo = m.su_throughput.iter().copied().fold(f64::MAX, f64::min);
    let stable = m.stability.verdict.is_stable();
    vec![
        num(m.pu_throughput),
        num(m.su_throughput_mean()),
        num(hi - lo),
        opt(m.avg_delay),
        num(m.mean_qp),
        num(m.mean_qr),
        opt(m.relayed_fraction),
        opt(m.relay_success_rate),
        opt(m.own_success_rate),
        opt(m.avg_power_s),
        opt(m.avg_power_r),
        opt(m.cond_power_s),
        opt(m.cond_power_r),
        (m.relay_active_failures + m.own_active_failures).to_string(),
        m.conservation.balanced().to_string(),
        if stable { "stable" } else { "growing" }.to_string(),
        num(m.stability.slope),
        (!stable).to_string(),
        "ok".to_string(),
    ]
}

fn validate_cells(c: &CheckResult, spec: &ExperimentSpec) -> Vec<String> {
    vec![
        c.criterion.to_string(),
        c.name.clone(),
        num(c.observed),
        num(c.reference),
        num(c.delta),
        num(c.tolerance),
        if c.passed { "PASS" } else { "FAIL" }.to_string(),
        spec.seed.to_string(),
        spec.slots.to_string(),
    ]
}

/// One row per check, in criterion order.
pub fn validation_table(outcomes: &[CriterionOutcome], spec: &ExperimentSpec) -> Table {
    Table {
        header: VALIDATE_COLUMNS.iter().map(|s| s.to_string()).collect(),
        rows: outcomes
            .iter()
            .flat_map(|o| o.checks.iter())
            .map(|c| validate_cells(c, spec))
            .collect(),
        failures: outcomes.iter().map(|o| o.failures().count()).sum(),
    }
}

/// Runs the experiment. Per-point failures are reported in the status
/// columns instead of aborting the run.
pub fn execute(spec: &ExperimentSpec) -> Result<Table> {
    let mut header: Vec<&str> = Vec::new();
    if spec.mode == Mode::Validate {
        let outcomes = Validator::new(spec.validation_config()).run_all();
        return Ok(validation_table(&outcomes, spec));
    }

    header.extend(PARAM_COLUMNS);
    let (analytic, monte_carlo, simulate) = match spec.mode {
        Mode::Analytic => (true, false, false),
        Mode::Simulate => (false, false, true),
        Mode::Sweep => (true, spec.sweep_mc_draws() > 0, true),
        Mode::Validate => unreachable!(),
    };
    if analytic {
        header.extend(ANALYTIC_COLUMNS);
    }
    if monte_carlo {
        header.extend(MC_COLUMNS);
    }
    if simulate {
        header.extend(SIM_COLUMNS);
    }

    let points = spec.points()?;
    let results: Vec<(Vec<String>, bool)> = points
        .par_iter()
        .map(|p| {
            let mut row = param_cells(p, spec.p0_db);
            let mut ok = true;
            if analytic {
                let (cells, good) = analytic_cells(p);
                row.extend(cells);
                ok &= good;
            }
            if monte_carlo {
                row.extend(mc_cells(p, spec.sweep_mc_draws()));
            }
            if simulate {
                let (cells, good) = sim_cells(p, spec);
                row.extend(cells);
                ok &= good;
            }
            (row, ok)
        })
        .collect();
    let failures = results.iter().filter(|(_, ok)| !ok).count();
    Ok(Table {
        header: header.into_iter().map(String::from).collect(),
        rows: results.into_iter().map(|(r, _)| r).collect(),
        failures,
    })
}

/// Writes `table` as CSV after a `#` comment line naming the version, mode
/// and seed.
pub fn write_csv<W: Write>(table: &Table, spec: &ExperimentSpec, mut out: W) -> Result<()> {
    writeln!(
        out,
        "# cogrelay {VERSION} mode={} seed={} slots={}",
        spec.mode, spec.seed, spec.slots
    )?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_grid_is_inclusive() {
        let s = Sweep {
            axis: Axis::PmaxDb,
            start: 0.0,
            stop: 20.0,
            step: 2.5,
        };
        let v = s.values().unwrap();
        assert_eq!(v.len(), 9);
        assert_eq!(v[8], 20.0);
        let fine = Sweep {
            axis: Axis::LambdaP,
            start: 0.02,
            stop: 0.3,
            step: 0.02,
        };
        assert_eq!(fine.values().unwrap()[5], 0.12);
        assert_eq!(fine.values().unwrap().len(), 15);
        assert!(Sweep { step: 0.0, ..s }.values().is_err());
        assert!(Sweep { stop: -1.0, ..s }.values().is_err());
    }

    #[test]
    fn parses_decibels_once() {
        let spec = ExperimentSpec::from_toml(
            "mode = \"analytic\"\n[params]\npmax_db = 10.0\np0_db = 20.0\n[policy]\npower = \"ap\"\nselection = \"bpl\"\n",
        )
        .unwrap();
        assert_eq!(spec.params.pmax_over_n0, 10.0);
        assert_eq!(spec.params.p0_over_n0, 100.0);
        assert_eq!(spec.policies, vec![PolicyConfig::AP_BPL]);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentSpec::from_toml("mode = \"fly\"").is_err());
        assert!(ExperimentSpec::from_toml("mode = \"analytic\"\nbogus = 1").is_err());
        assert!(ExperimentSpec::from_toml("mode = \"analytic\"\n[params]\nn_su = 1").is_err());
        assert!(ExperimentSpec::from_toml(
            "mode = \"analytic\"\n[policy]\nnames = [\"EP-BSL\"]\npower = \"AP\""
        )
        .is_err());
        assert!(ExperimentSpec::from_toml(
            "mode = \"sweep\"\n[sweep]\naxis = \"n_su\"\nstart = 2\nstop = 4\nstep = 0.5"
        )
        .and_then(|s| execute(&s))
        .is_err());
    }

    #[test]
    fn default_covers_all_policies() {
        let spec = ExperimentSpec::default();
        assert_eq!(spec.policies.len(), 4);
        assert_eq!(spec.params, SystemParams::default());
    }

    #[test]
    fn literal_mode_is_propagated() {
        let spec = ExperimentSpec::from_toml(
            "mode = \"analytic\"\n[policy]\nnames = [\"AP-BSL\"]\nreselect_on_silence = \"literal\"\n",
        )
        .unwrap();
        assert_eq!(spec.policies[0].reselect_on_silence, Reselection::Literal);
    }

    #[test]
    fn analytic_sweep_marks_unstable_rows() {
        let spec = ExperimentSpec::from_toml(
            "mode = \"analytic\"\n[policy]\nnames = [\"EP-BSL\"]\n[sweep]\naxis = \"lambda_p\"\nstart = 0.1\nstop = 0.3\nstep = 0.1\n",
        )
        .unwrap();
        let t = execute(&spec).unwrap();
        assert_eq!(t.rows.len(), 3);
        let col = t.header.iter().position(|h| h == "unstable").unwrap();
        let flags: Vec<&str> = t.rows.iter().map(|r| r[col].as_str()).collect();
        assert_eq!(flags, ["false", "true", "true"]);
        assert_eq!(t.failures, 0);
        for row in &t.rows {
            assert_eq!(row.len(), t.header.len());
        }
    }

    #[test]
    fn sweep_rows_follow_axis_order_and_are_reproducible() {
        let text = "mode = \"sweep\"\nseed = 9\nslots = 20000\nwarmup_slots = 1000\nmc_draws = 0\n[policy]\nnames = [\"AP-BSL\"]\n[sweep]\naxis = \"pmax_db\"\nstart = 4\nstop = 12\nstep = 4\n";
        let spec = ExperimentSpec::from_toml(text).unwrap();
        let a = execute(&spec).unwrap();
        let b = execute(&spec).unwrap();
        assert_eq!(a, b);
        let col = a.header.iter().position(|h| h == "pmax_db").unwrap();
        let v: Vec<&str> = a.rows.iter().map(|r| r[col].as_str()).collect();
        assert_eq!(v, ["4", "8", "12"]);

        let mut bytes = Vec::new();
        write_csv(&a, &spec, &mut bytes).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.starts_with("# cogrelay "));
        assert!(text.contains("seed=9"));
    }
}
