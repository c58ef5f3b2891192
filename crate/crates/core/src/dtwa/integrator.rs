//! Dormand-Prince 5(4) with the standard 4th-order continuous extension.

/// How the integrator chooses its steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepControl {
    Adaptive { rtol: f64, atol: f64 },
    Fixed { dt: f64 },
}

#[derive(Clone, Copy, Debug, Default)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepUnderflow {
    pub t: f64,
    pub h: f64,
}

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
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Reusable stage storage for one system size.
pub struct Dopri5 {
    k: [Vec<f64>; 7],
    y_stage: Vec<f64>,
    y_new: Vec<f64>,
    y_out: Vec<f64>,
    cont: [Vec<f64>; 5],
}

impl Dopri5 {
    pub fn new(dim: usize) -> Self {
        let v = || vec![0.0; dim];
        Dopri5 {
            k: [v(), v(), v(), v(), v(), v(), v()],
            y_stage: v(),
            y_new: v(),
            y_out: v(),
            cont: [v(), v(), v(), v(), v()],
        }
    }

    /// Integrate `dy/dt = f(y)` from `t0` through every time in `t_out` (ascending, `>= t0`),
    /// calling `observe(index, t, y)` at each output time with the dense-output state.
    /// On return `y` holds the state at the last accepted step (`t_out.last()`).
    pub fn integrate<F, O>(
        &mut self,
        mut f: F,
        t0: f64,
        y: &mut [f64],
        t_out: &[f64],
        control: StepControl,
        mut observe: O,
    ) -> Result<IntegrationStats, StepUnderflow>
    where
        F: FnMut(&[f64], &mut [f64]),
        O: FnMut(usize, f64, &[f64]),
    {
        let dim = y.len();
        assert_eq!(dim, self.y_new.len(), "integrator sized for a different system");
        let mut stats = IntegrationStats::default();
        let Some(&t_end) = t_out.last() else {
            return Ok(stats);
        };
        let mut next_out = 0;
        while next_out < t_out.len() && t_out[next_out] <= t0 {
            observe(next_out, t_out[next_out], y);
            next_out += 1;
        }
        if next_out == t_out.len() {
            return Ok(stats);
        }

        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        f(y, k1);
        stats.evaluations += 1;

        let span = t_end - t0;
        let mut h = match control {
            StepControl::Fixed { dt } => dt,
            StepControl::Adaptive { rtol, atol } => initial_step(y, k1, rtol, atol, span),
        };
        let h_min = 1e-13 * span.abs().max(1.0);
        let mut t = t0;

        while t < t_end {
            if t + h > t_end {
                h = t_end - t;
            }
            for i in 0..dim {
                self.y_stage[i] = y[i] + h * A21 * k1[i];
            }
            f(&self.y_stage, k2);
            for i in 0..dim {
                self.y_stage[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            f(&self.y_stage, k3);
            for i in 0..dim {
                self.y_stage[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            f(&self.y_stage, k4);
            for i in 0..dim {
                self.y_stage[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            f(&self.y_stage, k5);
            for i in 0..dim {
                self.y_stage[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            f(&self.y_stage, k6);
            for i in 0..dim {
                self.y_new[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            f(&self.y_new, k7);
            stats.evaluations += 6;

            let (accept, factor) = match control {
                StepControl::Fixed { .. } => (true, 1.0),
                StepControl::Adaptive { rtol, atol } => {
                    let mut err: f64 = 0.0;
                    for i in 0..dim {
                        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                        let sc = atol + rtol * y[i].abs().max(self.y_new[i].abs());
                        let r = (e / sc).abs();
                        // NaN must not slip through f64::max
                        err = if r.is_nan() || !self.y_new[i].is_finite() {
                            f64::INFINITY
                        } else {
                            err.max(r)
                        };
                    }
                    let factor = if !err.is_finite() {
                        0.2
                    } else if err == 0.0 {
                        5.0
                    } else {
                        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    (err <= 1.0, factor)
                }
            };

            if !accept {
                stats.rejected += 1;
                h *= factor.min(1.0);
                if h < h_min {
                    return Err(StepUnderflow { t, h });
                }
                continue;
            }
            stats.accepted += 1;
            let t_new = t + h;

            if next_out < t_out.len() && t_out[next_out] <= t_new {
                for i in 0..dim {
                    let ydiff = self.y_new[i] - y[i];
                    let bspl = h * k1[i] - ydiff;
                    self.cont[0][i] = y[i];
                    self.cont[1][i] = ydiff;
                    self.cont[2][i] = bspl;
                    self.cont[3][i] = ydiff - h * k7[i] - bspl;
                    self.cont[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                }
                while next_out < t_out.len() && t_out[next_out] <= t_new {
                    let to = t_out[next_out];
                    if to == t_new {
                        observe(next_out, to, &self.y_new);
                    } else {
                        let theta = (to - t) / h;
                        let theta1 = 1.0 - theta;
                        for i in 0..dim {
                            self.y_out[i] = self.cont[0][i]
                                + theta
                                    * (self.cont[1][i]
                                        + theta1
                                            * (self.cont[2][i] + theta * (self.cont[3][i] + theta1 * self.cont[4][i])));
                        }
                        observe(next_out, to, &self.y_out);
                    }
                    next_out += 1;
                }
            }

            y.copy_from_slice(&self.y_new);
            std::mem::swap(k1, k7);
            t = t_new;
            if let StepControl::Adaptive { .. } = control {
                h *= factor;
            }
            if next_out == t_out.len() {
                break;
            }
        }
        Ok(stats)
    }
}

fn initial_step(y: &[f64], dy: &[f64], rtol: f64, atol: f64, span: f64) -> f64 {
    let mut d0: f64 = 0.0;
    let mut d1: f64 = 0.0;
    for (a, b) in y.iter().zip(dy) {
        let sc = atol + rtol * a.abs();
        d0 = d0.max((a / sc).abs());
        d1 = d1.max((b / sc).abs());
    }
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(span.abs()).max(1e-12)
}
