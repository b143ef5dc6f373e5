//! Adaptive Dormand–Prince 5(4) stepping for smooth real systems.

use crate::error::{Error, Result};

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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// difference between the 5th and embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-14,
            max_steps: 1_000_000,
        }
    }
}

impl Dopri5 {
    /// Advance `y` from `t0` to `t1` (either direction) in place.
    pub fn integrate<F>(&self, mut rhs: F, t0: f64, y: &mut [f64], t1: f64) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len();
        if t1 == t0 {
            return Ok(());
        }
        let dir = (t1 - t0).signum();
        let span = (t1 - t0).abs();
        let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
        let mut tmp = vec![0.0; n];
        let mut y5 = vec![0.0; n];
        let mut t = t0;
        rhs(t, y, &mut k[0]);

        // initial step from the derivative scale
        let d0 = rms_scaled(y, y, self);
        let d1 = rms_scaled(&k[0], y, self);
        let mut h = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h = h.min(span);

        for _ in 0..self.max_steps {
            let remaining = (t1 - t).abs();
            if remaining <= 1e-15 * span.max(t.abs()) {
                return Ok(());
            }
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            let hs = dir * h;

            for i in 0..n {
                tmp[i] = y[i] + hs * A21 * k[0][i];
            }
            rhs(t + C2 * hs, &tmp, &mut k[1]);
            for i in 0..n {
                tmp[i] = y[i] + hs * (A31 * k[0][i] + A32 * k[1][i]);
            }
            rhs(t + C3 * hs, &tmp, &mut k[2]);
            for i in 0..n {
                tmp[i] = y[i] + hs * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
            }
            rhs(t + C4 * hs, &tmp, &mut k[3]);
            for i in 0..n {
                tmp[i] = y[i]
                    + hs * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
            }
            rhs(t + C5 * hs, &tmp, &mut k[4]);
            for i in 0..n {
                tmp[i] = y[i]
                    + hs * (A61 * k[0][i]
                        + A62 * k[1][i]
                        + A63 * k[2][i]
                        + A64 * k[3][i]
                        + A65 * k[4][i]);
            }
            rhs(t + hs, &tmp, &mut k[5]);
            for i in 0..n {
                y5[i] = y[i]
                    + hs * (A71 * k[0][i]
                        + A73 * k[2][i]
                        + A74 * k[3][i]
                        + A75 * k[4][i]
                        + A76 * k[5][i]);
            }
            rhs(t + hs, &y5, &mut k[6]);

            let mut err = 0.0;
            for i in 0..n {
                let e = hs
                    * (E1 * k[0][i]
                        + E3 * k[2][i]
                        + E4 * k[3][i]
                        + E5 * k[4][i]
                        + E6 * k[5][i]
                        + E7 * k[6][i]);
                let sc = self.atol + self.rtol * y[i].abs().max(y5[i].abs());
                err += (e / sc).powi(2);
            }
            let err = (err / n as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::Accuracy(format!("non-finite error estimate at t = {t}")));
            }

            if err <= 1.0 {
                t = if last { t1 } else { t + hs };
                y.copy_from_slice(&y5);
                k.swap(0, 6);
                if last {
                    return Ok(());
                }
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= factor;
            if h < 1e-14 * span.max(t.abs()) {
                return Err(Error::Accuracy(format!("step size underflow at t = {t}")));
            }
        }
        Err(Error::Accuracy(format!(
            "exceeded {} steps before reaching t = {t1}",
            self.max_steps
        )))
    }
}

fn rms_scaled(v: &[f64], y: &[f64], opts: &Dopri5) -> f64 {
    let s: f64 = v
        .iter()
        .zip(y)
        .map(|(a, b)| (a / (opts.atol + opts.rtol * b.abs())).powi(2))
        .sum();
    (s / v.len() as f64).sqrt()
}
