//! Dormand–Prince 5(4) embedded Runge–Kutta integrator for complex vector ODEs.

use crate::error::{Error, Result};
use crate::linalg::{cr, DVec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: Option<f64>,
    pub max_steps: usize,
}

impl AdaptiveOptions {
    pub fn with_rtol(rtol: f64) -> Self {
        Self { rtol, atol: rtol * 1e-3, initial_step: None, max_steps: 2_000_000 }
    }
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
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy(y: &DVec, terms: &[(f64, &DVec)], h: f64) -> DVec {
    let mut out = y.clone();
    for (a, k) in terms {
        if *a != 0.0 {
            out.axpy(cr(h * a), k, cr(1.0));
        }
    }
    out
}

/// Integrates `y' = f(t, y)` from `t0` and returns the state at each of the
/// increasing times `t_out` (all ≥ `t0`). `observe` runs after every accepted step
/// and may abort the integration.
pub fn dopri5<F, O>(mut f: F, t0: f64, y0: &DVec, t_out: &[f64], opts: &AdaptiveOptions, mut observe: O) -> Result<Vec<DVec>>
where
    F: FnMut(f64, &DVec) -> DVec,
    O: FnMut(f64, &DVec) -> Result<()>,
{
    if t_out.windows(2).any(|w| w[1] < w[0]) || t_out.first().is_some_and(|&t| t < t0) {
        return Err(Error::InvalidInput("output times must be sorted and not precede t0".into()));
    }
    let mut out = Vec::with_capacity(t_out.len());
    let mut t = t0;
    let mut y = y0.clone();
    let mut k1 = f(t, &y);
    let span = t_out.last().map_or(0.0, |&te| te - t0);
    let mut h = opts.initial_step.unwrap_or_else(|| {
        let scale = k1.norm().max(1e-12) / y.norm().max(1e-12);
        (0.01 / scale).min(span.max(1e-12))
    });
    let mut steps = 0usize;
    for &target in t_out {
        while t < target {
            if steps >= opts.max_steps {
                return Err(Error::StepRejected { t, reason: "maximum number of steps exceeded" });
            }
            let remaining = target - t;
            let last = h >= remaining;
            let hs = if last { remaining } else { h };
            let k2 = f(t + C2 * hs, &axpy(&y, &[(A21, &k1)], hs));
            let k3 = f(t + C3 * hs, &axpy(&y, &[(A31, &k1), (A32, &k2)], hs));
            let k4 = f(t + C4 * hs, &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], hs));
            let k5 = f(t + C5 * hs, &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], hs));
            let k6 = f(t + hs, &axpy(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], hs));
            let y_new = axpy(&y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], hs);
            let k7 = f(t + hs, &y_new);
            let err_vec = axpy(
                &DVec::zeros(y.len()),
                &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
                hs,
            );
            let mut acc = 0.0;
            for i in 0..y.len() {
                let sc = opts.atol + opts.rtol * y[i].norm().max(y_new[i].norm());
                acc += (err_vec[i].norm() / sc).powi(2);
            }
            let err = (acc / y.len().max(1) as f64).sqrt();
            steps += 1;
            if err <= 1.0 {
                t = if last { target } else { t + hs };
                y = y_new;
                k1 = k7;
                observe(t, &y)?;
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last || factor < 1.0 {
                    h = hs * factor;
                }
            } else {
                if !err.is_finite() {
                    return Err(Error::StepRejected { t, reason: "non-finite error estimate" });
                }
                h = hs * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            }
            if h < 1e-14 * span.max(1.0) {
                return Err(Error::StepRejected { t, reason: "step size underflow" });
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}
