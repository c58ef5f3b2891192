//! Streaming moment accumulators. Samples are pushed in a fixed order, so results are
//! reproducible regardless of how the samples were produced.

use serde::{Deserialize, Serialize};

/// A value with its standard error.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub err: f64,
}

impl Estimate {
    pub fn new(value: f64, err: f64) -> Self {
        Estimate { value, err }
    }
}

/// Mean and variance of a scalar, with shifted sums for numerical stability.
#[derive(Clone, Debug, Default)]
pub struct ScalarMoments {
    shift: Option<f64>,
    n: usize,
    s: [f64; 5],
}

impl ScalarMoments {
    pub fn push(&mut self, x: f64) {
        let c = *self.shift.get_or_insert(x);
        let d = x - c;
        let mut p = 1.0;
        for k in 0..5 {
            self.s[k] += p;
            p *= d;
        }
        self.n += 1;
    }

    pub fn count(&self) -> usize {
        self.n
    }

    fn central(&self) -> (f64, [f64; 5]) {
        let n = self.n as f64;
        let raw: Vec<f64> = self.s.iter().map(|v| v / n).collect();
        let m = raw[1];
        let mut mu = [0.0; 5];
        for (k, slot) in mu.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in 0..=k {
                acc += binom(k, i) * raw[i] * (-m).powi((k - i) as i32);
            }
            *slot = acc;
        }
        (self.shift.unwrap_or(0.0) + m, mu)
    }

    /// Mean with its standard error.
    pub fn mean(&self) -> Estimate {
        if self.n < 2 {
            return Estimate::new(self.central().0, f64::NAN);
        }
        let (mean, mu) = self.central();
        let n = self.n as f64;
        let var = mu[2] * n / (n - 1.0);
        Estimate::new(mean, (var / n).sqrt())
    }

    /// Unbiased sample variance with its (large-sample) standard error.
    pub fn variance(&self) -> Estimate {
        let (_, mu) = self.central();
        let n = self.n as f64;
        let var = mu[2] * n / (n - 1.0);
        let se = ((mu[4] - mu[2] * mu[2]).max(0.0) / n).sqrt();
        Estimate::new(var, se)
    }
}

/// Joint moments of a pair `(u, v)` up to total order four. Used for the average of two
/// variances that are estimated from the same samples and hence correlated.
#[derive(Clone, Debug, Default)]
pub struct PairMoments {
    shift: Option<(f64, f64)>,
    n: usize,
    s: [[f64; 5]; 5],
}

impl PairMoments {
    pub fn push(&mut self, u: f64, v: f64) {
        let (cu, cv) = *self.shift.get_or_insert((u, v));
        let (du, dv) = (u - cu, v - cv);
        let mut pu = 1.0;
        for a in 0..5 {
            let mut pv = 1.0;
            for b in 0..(5 - a) {
                self.s[a][b] += pu * pv;
                pv *= dv;
            }
            pu *= du;
        }
        self.n += 1;
    }

    pub fn count(&self) -> usize {
        self.n
    }

    /// Central moments `mu[a][b] = E[(u - <u>)^a (v - <v>)^b]`, `a + b <= 4`.
    fn central(&self) -> [[f64; 5]; 5] {
        let n = self.n as f64;
        let mu_u = self.s[1][0] / n;
        let mu_v = self.s[0][1] / n;
        let mut out = [[0.0; 5]; 5];
        for a in 0..5 {
            for b in 0..(5 - a) {
                let mut acc = 0.0;
                for i in 0..=a {
                    for j in 0..=b {
                        acc += binom(a, i)
                            * binom(b, j)
                            * (self.s[i][j] / n)
                            * (-mu_u).powi((a - i) as i32)
                            * (-mu_v).powi((b - j) as i32);
                    }
                }
                out[a][b] = acc;
            }
        }
        out
    }

    fn var_se(mu2: f64, mu4: f64, n: f64) -> Estimate {
        Estimate::new(mu2 * n / (n - 1.0), ((mu4 - mu2 * mu2).max(0.0) / n).sqrt())
    }

    pub fn variance_u(&self) -> Estimate {
        let mu = self.central();
        Self::var_se(mu[2][0], mu[4][0], self.n as f64)
    }

    pub fn variance_v(&self) -> Estimate {
        let mu = self.central();
        Self::var_se(mu[0][2], mu[0][4], self.n as f64)
    }

    /// `(Var u + Var v) / 2` with an error that accounts for their covariance.
    pub fn mean_variance(&self) -> Estimate {
        let mu = self.central();
        let n = self.n as f64;
        let value = 0.5 * (mu[2][0] + mu[0][2]) * n / (n - 1.0);
        let s = mu[2][0] + mu[0][2];
        let var = (mu[4][0] + mu[0][4] + 2.0 * mu[2][2] - s * s).max(0.0) / (4.0 * n);
        Estimate::new(value, var.sqrt())
    }
}

fn binom(n: usize, k: usize) -> f64 {
    const T: [[f64; 5]; 5] = [
        [1.0, 0.0, 0.0, 0.0, 0.0],
        [1.0, 1.0, 0.0, 0.0, 0.0],
        [1.0, 2.0, 1.0, 0.0, 0.0],
        [1.0, 3.0, 3.0, 1.0, 0.0],
        [1.0, 4.0, 6.0, 4.0, 1.0],
    ];
    T[n][k]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn scalar_matches_two_pass() {
        let xs = [3.0, 1.5, -2.0, 7.25, 0.5, 4.0, 4.0, -1.0];
        let mut m = ScalarMoments::default();
        xs.iter().for_each(|&x| m.push(x + 1e8));
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert_relative_eq!(m.mean().value, mean + 1e8, max_relative = 1e-15);
        assert_relative_eq!(m.variance().value, var, max_relative = 1e-9);
        assert_relative_eq!(m.mean().err, (var / n).sqrt(), max_relative = 1e-9);
    }

    #[test]
    fn pair_matches_two_pass() {
        let us = [1.0, -0.5, 2.0, 0.0, 1.5, -1.0];
        let vs = [0.5, 0.5, -1.5, 2.0, 1.0, 0.0];
        let mut p = PairMoments::default();
        for (u, v) in us.iter().zip(&vs) {
            p.push(*u, *v);
        }
        let n = us.len() as f64;
        let mean = |x: &[f64]| x.iter().sum::<f64>() / n;
        let (mu, mv) = (mean(&us), mean(&vs));
        let c = |a: i32, b: i32| {
            us.iter()
                .zip(&vs)
                .map(|(u, v)| (u - mu).powi(a) * (v - mv).powi(b))
                .sum::<f64>()
                / n
        };
        assert_relative_eq!(p.variance_u().value, c(2, 0) * n / (n - 1.0), max_relative = 1e-12);
        assert_relative_eq!(p.variance_v().value, c(0, 2) * n / (n - 1.0), max_relative = 1e-12);
        let s = c(2, 0) + c(0, 2);
        let want = ((c(4, 0) + c(0, 4) + 2.0 * c(2, 2) - s * s) / (4.0 * n)).sqrt();
        assert_relative_eq!(p.mean_variance().err, want, max_relative = 1e-10);
    }
}
