//! Embedded Runge–Kutta 5(4) (Dormand–Prince) with PI step-size control for
//! complex-valued systems along a real path parameter `s ∈ [0, 1]`.
//!
//! Checkpoints are hit exactly by clipping the step; after every accepted
//! step the system may inspect and modify the state (conservation monitors,
//! chart switches).

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub trait OdeSystem {
    /// `dy/ds` at `(s, y)`.
    fn rhs(&self, s: f64, y: &[C64]) -> Result<Vec<C64>>;

    /// Called after every accepted step, with `checkpoint = Some(m)` when the
    /// step landed on `checkpoints[m]`.
    fn accepted(&mut self, s: f64, y: &mut [C64], checkpoint: Option<usize>) -> Result<()>;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step as a fraction of the unit interval.
    pub h_init: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-10, h_init: 1e-2, h_min: 1e-14, max_steps: 1_000_000 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    pub last_h: f64,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b*, the embedded error weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;
const BETA: f64 = 0.04;
const ALPHA: f64 = 0.2 - 0.75 * BETA;

fn combine(y: &[C64], h: f64, terms: &[(f64, &[C64])]) -> Vec<C64> {
    let mut out = y.to_vec();
    for (c, k) in terms {
        let w = h * c;
        for (o, v) in out.iter_mut().zip(k.iter()) {
            *o += v * w;
        }
    }
    out
}

/// One trial step; returns the fifth-order solution and the scaled error.
fn trial<S: OdeSystem>(sys: &S, s: f64, y: &[C64], h: f64, ctl: &StepControl) -> Result<(Vec<C64>, f64)> {
    let k1 = sys.rhs(s, y)?;
    let k2 = sys.rhs(s + C2 * h, &combine(y, h, &[(A21, &k1)]))?;
    let k3 = sys.rhs(s + C3 * h, &combine(y, h, &[(A31, &k1), (A32, &k2)]))?;
    let k4 = sys.rhs(s + C4 * h, &combine(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = sys.rhs(s + C5 * h, &combine(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
    let k6 = sys.rhs(s + h, &combine(y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
    let y_new = combine(y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = sys.rhs(s + h, &y_new)?;

    let mut sum = 0.0;
    for m in 0..y.len() {
        let e = h * (E1 * k1[m] + E3 * k3[m] + E4 * k4[m] + E5 * k5[m] + E6 * k6[m] + E7 * k7[m]);
        let sc = ctl.atol + ctl.rtol * y[m].norm().max(y_new[m].norm());
        sum += (e.norm() / sc).powi(2);
    }
    let err = if y.is_empty() { 0.0 } else { (sum / y.len() as f64).sqrt() };
    Ok((y_new, err))
}

/// Integrates from `s = 0` to `s = 1`, stopping exactly at every checkpoint
/// (sorted, in `(0, 1]`). Non-finite states count as rejected steps.
pub fn integrate_unit<S: OdeSystem>(
    sys: &mut S,
    y: &mut Vec<C64>,
    checkpoints: &[f64],
    ctl: &StepControl,
) -> Result<StepStats> {
    let mut stats = StepStats::default();
    let mut s = 0.0;
    let mut h = ctl.h_init.clamp(ctl.h_min, 1.0);
    let mut err_old: f64 = 1e-4;
    let mut next_cp = 0;
    while next_cp < checkpoints.len() {
        if stats.accepted + stats.rejected >= ctl.max_steps {
            return Err(Error::StepUnderflow { at: s });
        }
        let target = checkpoints[next_cp];
        let landing = s + h >= target - 1e-14;
        let h_try = if landing { target - s } else { h };
        let (y_new, err) = trial(sys, s, y, h_try, ctl)?;
        stats.evaluations += 7;
        let finite = err.is_finite() && y_new.iter().all(|v| v.re.is_finite() && v.im.is_finite());
        if finite && err <= 1.0 {
            s = if landing { target } else { s + h_try };
            *y = y_new;
            stats.accepted += 1;
            stats.last_h = h_try;
            let cp = if landing {
                next_cp += 1;
                Some(next_cp - 1)
            } else {
                None
            };
            sys.accepted(s, y, cp)?;
            let err = err.max(1e-10);
            let fac = (SAFETY * err.powf(-ALPHA) * err_old.powf(BETA)).clamp(FAC_MIN, FAC_MAX);
            err_old = err;
            // a clipped landing step says little about the natural step size
            h = if landing { h.max(h_try * fac) } else { h_try * fac };
        } else {
            stats.rejected += 1;
            let fac = if finite { (SAFETY * err.powf(-ALPHA)).clamp(FAC_MIN, 1.0) } else { FAC_MIN };
            h = h_try * fac;
        }
        if h < ctl.h_min {
            return Err(Error::StepUnderflow { at: s });
        }
        h = h.min(1.0);
    }
    Ok(stats)
}
