//! Adaptive Gauss–Kronrod (7–15) integration and the relay-link success
//! probabilities written directly as total-probability integrals over the
//! selected-gain laws.

use crate::closed_form::MAX_USERS;
use crate::error::{Error, Result};
use crate::model::DerivedConstants;
use crate::oracle::pdf::{cdf, max_survival, pdf, Link, PdfSpec};
use crate::policy::{PolicyConfig, PowerPolicy, SelectionPolicy};

/// Every integrand decays at least like `e^{-h}`; beyond this span the
/// remaining mass is below `1e-19`.
pub const TAIL_SPAN: f64 = 45.0;

/// Absolute tolerance of the outer integral in [`quadrature_f_rstar`].
pub const ORACLE_TOLERANCE: f64 = 1e-9;

const INNER_TOLERANCE: f64 = 1e-11;
const MAX_SEGMENTS: usize = 4_000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
/// Gauss weights for the odd-indexed Kronrod nodes and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Segment {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    Segment {
        lo,
        hi,
        value: kronrod * h,
        error: ((kronrod - gauss) * h).abs(),
    }
}

/// Integrate `f` over `[points[0], points[last]]`, splitting first at every
/// interior point, then bisecting the worst segment until the summed error
/// estimate is below `abs_tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, points: &[f64], abs_tol: f64) -> Result<Estimate> {
    let mut segments: Vec<Segment> = points
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gk15(&f, w[0], w[1]))
        .collect();
    let mut evaluations = 15 * segments.len();
    loop {
        let error: f64 = segments.iter().map(|s| s.error).sum();
        if error <= abs_tol || segments.is_empty() {
            return Ok(Estimate {
                value: segments.iter().map(|s| s.value).sum(),
                error,
                evaluations,
            });
        }
        if segments.len() >= MAX_SEGMENTS {
            return Err(Error::NonConvergent {
                error_estimate: error,
                evaluations,
            });
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let s = segments.swap_remove(worst);
        let mid = 0.5 * (s.lo + s.hi);
        if mid <= s.lo || mid >= s.hi {
            return Err(Error::NonConvergent {
                error_estimate: error,
                evaluations,
            });
        }
        segments.push(gk15(&f, s.lo, mid));
        segments.push(gk15(&f, mid, s.hi));
        evaluations += 30;
    }
}

fn breakpoints(lo: f64, knees: &[f64]) -> Vec<f64> {
    let mut pts: Vec<f64> = knees
        .iter()
        .map(|k| lo + k)
        .filter(|&p| p > lo && p < lo + TAIL_SPAN)
        .collect();
    pts.push(lo);
    pts.push(lo + TAIL_SPAN);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Relay-link success probability by numerical integration. The BPL laws
/// treat the interference gain as independent of the relay gain, exactly
/// as the closed forms do.
pub fn quadrature_f_rstar(
    policy: &PolicyConfig,
    consts: &DerivedConstants,
    n: usize,
) -> Result<f64> {
    if n < 2 {
        return Err(Error::TooFewUsers(n));
    }
    if n > MAX_USERS {
        return Err(Error::TooManyUsers { n, max: MAX_USERS });
    }
    let (a, b) = (consts.a, consts.b);
    if a.is_infinite() {
        return Ok(0.0);
    }
    let sel = policy.selection;
    let (relay_order, own_order) = match sel {
        SelectionPolicy::Bsl => (n - 1, n),
        SelectionPolicy::Bpl => (n, n - 1),
    };
    let interference = PdfSpec::new(sel, Link::Interference, n)?;
    let value = match policy.power {
        PowerPolicy::Ep => {
            // P[h_r* > a + h_I / b]
            let f = |h: f64| {
                max_survival(relay_order, a + h / b) * pdf(&interference, h).unwrap_or(0.0)
            };
            integrate(
                f,
                &breakpoints(0.0, &[0.25 * b, b, 4.0 * b, 1.0, 4.0]),
                ORACLE_TOLERANCE,
            )?
            .value
        }
        PowerPolicy::Ap if a == 0.0 => 1.0,
        PowerPolicy::Ap => {
            let beta = consts.beta;
            let silent = beta.powi(own_order as i32) * (1.0 - beta.powi(n as i32));
            let relay = PdfSpec::new(sel, Link::Relay, n)?;
            let own = PdfSpec::new(sel, Link::Own, n)?;
            let own_pts = breakpoints(a, &[0.5, 1.0, 3.0, 8.0]);
            let mut inner_failure = None;
            // P[h_s* >= a, h_r* >= a, h_I <= b (h_r*/a - 1) h_s*]
            let outer = |w: f64| {
                let z = b * (w / a - 1.0);
                let g =
                    |y: f64| cdf(&interference, z * y).unwrap_or(0.0) * pdf(&own, y).unwrap_or(0.0);
                let inner = match integrate(g, &own_pts, INNER_TOLERANCE) {
                    Ok(e) => e.value,
                    Err(e) => {
                        inner_failure.get_or_insert(e);
                        f64::NAN
                    }
                };
                pdf(&relay, w).unwrap_or(0.0) * inner
            };
            let knees = [0.01 * a, 0.1 * a, a, 0.5, 1.0, 3.0, 8.0];
            let joint = integrate_fallible(outer, &breakpoints(a, &knees))?;
            if let Some(e) = inner_failure {
                return Err(e);
            }
            silent + joint
        }
    };
    Ok(value.clamp(0.0, 1.0))
}

fn integrate_fallible<F: FnMut(f64) -> f64>(f: F, points: &[f64]) -> Result<f64> {
    let cell = std::cell::RefCell::new(f);
    Ok(integrate(|x| (cell.borrow_mut())(x), points, ORACLE_TOLERANCE)?.value)
}
