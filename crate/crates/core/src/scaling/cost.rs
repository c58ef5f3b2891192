//! Interpolation cost of a rescaled family of curves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points of the shared interpolation grid.
pub const GRID_POINTS: usize = 512;

/// One data curve: samples `(x, y)` with errors `err`, tagged by system size and a
/// control parameter (usually `a_Z`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub size: f64,
    pub param: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub err: Vec<f64>,
}

impl Curve {
    /// Curve with the default relative error `0.04 y`.
    pub fn new(size: f64, param: f64, x: Vec<f64>, y: Vec<f64>) -> Self {
        let err = y.iter().map(|v| 0.04 * v.abs()).collect();
        Curve { size, param, x, y, err }
    }

    pub fn with_errors(size: f64, param: f64, x: Vec<f64>, y: Vec<f64>, err: Vec<f64>) -> Self {
        Curve { size, param, x, y, err }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.len() != self.y.len() || self.x.len() != self.err.len() {
            return Err(Error::InvalidDataset("x, y and errors differ in length".into()));
        }
        if self.x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidDataset(format!(
                "x must be strictly increasing within a curve (size {}, param {})",
                self.size, self.param
            )));
        }
        if self.err.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::InvalidDataset("errors must be positive".into()));
        }
        if self.y.iter().chain(&self.x).any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite sample".into()));
        }
        Ok(())
    }

    /// Linear interpolation of `(y, err)` at `x`, `None` outside the support.
    fn at(&self, x: f64, mx: f64, my: f64) -> Option<(f64, f64)> {
        let lo = self.x[0] * mx;
        let hi = self.x[self.len() - 1] * mx;
        if x < lo || x > hi {
            return None;
        }
        let xs = x / mx;
        let j = match self.x.partition_point(|&v| v <= xs) {
            0 => 0,
            j if j >= self.len() => self.len() - 2,
            j => j - 1,
        };
        let j = j.min(self.len() - 2);
        let w = ((xs - self.x[j]) / (self.x[j + 1] - self.x[j])).clamp(0.0, 1.0);
        let y = self.y[j] + w * (self.y[j + 1] - self.y[j]);
        let e = self.err[j] + w * (self.err[j + 1] - self.err[j]);
        Some((y * my, e * my))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairTerm {
    pub i: usize,
    pub k: usize,
    pub sum: f64,
    pub terms: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostEvaluation {
    pub lambda: f64,
    /// Total number of summed terms.
    pub terms: usize,
    pub pairs: Vec<PairTerm>,
    /// `(start, end)` of the shared grid.
    pub grid: (f64, f64),
}

/// `lambda = (1/N) sum_{i<k} sum_x (f_i - f_k)^2 / (d_i^2 + d_k^2)` after scaling curve `i`
/// by `x -> mx[i] x`, `(y, err) -> my[i] (y, err)`. Curves need at least two points.
pub fn cost_with_multipliers(curves: &[Curve], mx: &[f64], my: &[f64]) -> Result<CostEvaluation> {
    cost_on_grid(curves, mx, my, GRID_POINTS)
}

/// [`cost_with_multipliers`] on an interpolation grid of `points` samples.
pub fn cost_on_grid(curves: &[Curve], mx: &[f64], my: &[f64], points: usize) -> Result<CostEvaluation> {
    if points < 2 {
        return Err(Error::InvalidConfig(format!("interpolation grid of {points} points")));
    }
    if curves.len() < 2 {
        return Err(Error::InvalidDataset("a collapse needs at least two curves".into()));
    }
    if curves.iter().any(|c| c.len() < 2) {
        return Err(Error::InvalidDataset("every curve needs at least two points".into()));
    }
    let support: Vec<(f64, f64)> = curves
        .iter()
        .zip(mx)
        .map(|(c, &m)| (c.x[0] * m, c.x[c.len() - 1] * m))
        .collect();
    let start = support.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let end = support.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let step = (end - start) / (points - 1) as f64;
    let grid: Vec<f64> = (0..points).map(|g| start + step * g as f64).collect();
    let samples: Vec<Vec<Option<(f64, f64)>>> = curves
        .iter()
        .enumerate()
        .map(|(i, c)| grid.iter().map(|&x| c.at(x, mx[i], my[i])).collect())
        .collect();

    let mut pairs = Vec::new();
    let mut total = 0.0;
    let mut terms = 0;
    for i in 0..curves.len() {
        for k in (i + 1)..curves.len() {
            let mut sum = 0.0;
            let mut n = 0;
            for g in 0..points {
                if let (Some((fi, di)), Some((fk, dk))) = (samples[i][g], samples[k][g]) {
                    sum += (fi - fk).powi(2) / (di * di + dk * dk);
                    n += 1;
                }
            }
            total += sum;
            terms += n;
            pairs.push(PairTerm { i, k, sum, terms: n });
        }
    }
    if terms == 0 {
        return Err(Error::NoCollapseDomain);
    }
    Ok(CostEvaluation {
        lambda: total / terms as f64,
        terms,
        pairs,
        grid: (start, end),
    })
}

/// Standard two-exponent rescaling `x N^{d_x}`, `y N^{d_y}` with `N` the curve size.
pub fn cost(curves: &[Curve], d_x: f64, d_y: f64) -> Result<CostEvaluation> {
    let mx: Vec<f64> = curves.iter().map(|c| c.size.powf(d_x)).collect();
    let my: Vec<f64> = curves.iter().map(|c| c.size.powf(d_y)).collect();
    cost_with_multipliers(curves, &mx, &my)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn curve(size: f64, f: impl Fn(f64) -> f64) -> Curve {
        let x: Vec<f64> = (0..20).map(|i| 0.1 + 0.1 * i as f64).collect();
        let y = x.iter().map(|&x| f(x)).collect();
        Curve::new(size, 0.0, x, y)
    }

    #[test]
    fn identical_curves_cost_nothing() {
        let a = curve(10.0, |x| 1.0 + x * x);
        let mut b = a.clone();
        b.size = 10.0;
        for dx in [-1.0, 0.0, 0.7] {
            assert_eq!(cost(&[a.clone(), b.clone()], dx, 0.3).unwrap().lambda, 0.0);
        }
    }

    #[test]
    fn order_and_common_scale_do_not_matter() {
        let cs = vec![
            curve(10.0, |x| x.exp()),
            curve(20.0, |x| 1.1 * x.exp()),
            curve(40.0, |x| 0.9 * (1.1 * x).exp()),
        ];
        let l = cost(&cs, 0.1, -0.2).unwrap().lambda;
        let rev: Vec<Curve> = cs.iter().rev().cloned().collect();
        assert_relative_eq!(cost(&rev, 0.1, -0.2).unwrap().lambda, l, max_relative = 1e-12);
        let scaled: Vec<Curve> = cs
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.y.iter_mut().for_each(|v| *v *= 7.0);
                c.err.iter_mut().for_each(|v| *v *= 7.0);
                c
            })
            .collect();
        assert_relative_eq!(cost(&scaled, 0.1, -0.2).unwrap().lambda, l, max_relative = 1e-12);
        let inflated: Vec<Curve> = cs
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.err.iter_mut().for_each(|v| *v *= 2.0);
                c
            })
            .collect();
        assert_relative_eq!(
            cost(&inflated, 0.1, -0.2).unwrap().lambda,
            l / 4.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn disjoint_supports_have_no_domain() {
        let a = Curve::new(1.0, 0.0, vec![0.0, 1.0], vec![1.0, 1.0]);
        let b = Curve::new(2.0, 0.0, vec![2.0, 3.0], vec![1.0, 1.0]);
        assert!(matches!(cost(&[a, b], 0.0, 0.0), Err(Error::NoCollapseDomain)));
    }

    #[test]
    fn validation() {
        assert!(Curve::new(1.0, 0.0, vec![0.0, 0.0], vec![1.0, 1.0]).validate().is_err());
        assert!(Curve::new(1.0, 0.0, vec![0.0, 1.0], vec![0.0, 1.0]).validate().is_err());
        assert!(Curve::new(1.0, 0.0, vec![0.0, 1.0], vec![1.0, 1.0]).validate().is_ok());
    }
}
