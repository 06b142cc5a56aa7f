//! Adaptive Dormand–Prince 5(4) integration of two-component systems with cubic Hermite
//! dense output between accepted steps.

use crate::error::{BisolveError, Result};

pub type State = [f64; 2];

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Accepted steps of an integration: abscissae, states and derivatives.
#[derive(Debug, Clone, Default)]
pub struct Solution {
    pub t: Vec<f64>,
    pub y: Vec<State>,
    pub dy: Vec<State>,
}

impl Solution {
    /// Cubic Hermite interpolation inside the step containing `t` (clamped to the range).
    pub fn eval(&self, t: f64) -> State {
        let n = self.t.len();
        if t <= self.t[0] {
            return self.y[0];
        }
        if t >= self.t[n - 1] {
            return self.y[n - 1];
        }
        let i = self.t.partition_point(|v| *v <= t) - 1;
        hermite(self.t[i], self.t[i + 1], &self.y[i], &self.y[i + 1], &self.dy[i], &self.dy[i + 1], t)
    }
}

pub fn hermite(t0: f64, t1: f64, y0: &State, y1: &State, d0: &State, d1: &State, t: f64) -> State {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    let mut out = [0.0; 2];
    for k in 0..2 {
        out[k] = h00 * y0[k] + h * h10 * d0[k] + h01 * y1[k] + h * h11 * d1[k];
    }
    out
}

/// What the step callback wants the integrator to do next.
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rtol: 1e-10, atol: 1e-12, max_steps: 2_000_000 }
    }
}

/// Integrates `y′ = f(t, y)` from `t0` to `t_end`. After every accepted step `on_step` sees
/// the solution so far and may stop the integration.
pub fn integrate<F, S>(f: F, t0: f64, y0: State, t_end: f64, h0: f64, tol: Tolerances, mut on_step: S) -> Result<Solution>
where
    F: Fn(f64, &State) -> State,
    S: FnMut(&Solution) -> Control,
{
    let mut sol = Solution { t: vec![t0], y: vec![y0], dy: vec![f(t0, &y0)] };
    let mut t = t0;
    let mut y = y0;
    let mut k0 = sol.dy[0];
    let mut h = h0.min(t_end - t0);
    let mut steps = 0;
    while t < t_end {
        steps += 1;
        if steps > tol.max_steps {
            return Err(BisolveError::IntegrationFailure { radius: t, reason: "step budget exhausted".into() });
        }
        if h < 1e-14 * t.abs().max(1e-300) {
            return Err(BisolveError::IntegrationFailure { radius: t, reason: "step size underflow".into() });
        }
        let h_try = h.min(t_end - t);
        let mut k = [[0.0; 2]; 7];
        k[0] = k0;
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                for c in 0..2 {
                    ys[c] += h_try * A[s][j] * kj[c];
                }
            }
            k[s] = f(t + C[s] * h_try, &ys);
        }
        let mut y5 = y;
        let mut err = 0.0f64;
        for c in 0..2 {
            let mut s5 = 0.0;
            let mut s4 = 0.0;
            for s in 0..7 {
                s5 += B5[s] * k[s][c];
                s4 += B4[s] * k[s][c];
            }
            y5[c] += h_try * s5;
            let scale = tol.atol + tol.rtol * y[c].abs().max(y5[c].abs());
            err = err.max((h_try * (s5 - s4) / scale).abs());
        }
        if !err.is_finite() || y5.iter().any(|v| !v.is_finite()) {
            h *= 0.25;
            continue;
        }
        if err <= 1.0 {
            t += h_try;
            y = y5;
            k0 = k[6];
            sol.t.push(t);
            sol.y.push(y);
            sol.dy.push(k0);
            let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = h_try * grow;
            if let Control::Stop = on_step(&sol) {
                break;
            }
        } else {
            h = h_try * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
        }
    }
    Ok(sol)
}
