//! Finite-size scaling collapse and exponent extraction.
//!
//! A family of curves `y_i(x)` collapses when, after rescaling by powers of the size
//! label (and of `a_Z` for time curves), the curves lie on top of each other. The
//! quality of a collapse is the interpolation cost `lambda` from [`cost`]; exponents
//! minimize it and their uncertainty is the extent of `lambda <= lambda_min + 1` along
//! each axis.

mod cost;
mod data;
mod optimize;

pub use cost::{cost, cost_on_grid, cost_with_multipliers, CostEvaluation, Curve, PairTerm, GRID_POINTS};
pub use data::{load_manifest, min_variance_points, ManifestEntry, MinVariancePoint};
pub use optimize::{minimize, minimize_on_grids, Axis, ExponentEstimate, Minimum, COARSE_POINTS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::ColumnTable;

/// Curves sharing one observable, with the physical context they came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingDataset {
    pub observable: String,
    pub alpha: f64,
    pub d: usize,
    pub curves: Vec<Curve>,
}

impl ScalingDataset {
    pub fn new(observable: &str, alpha: f64, d: usize, curves: Vec<Curve>) -> Self {
        ScalingDataset {
            observable: observable.to_string(),
            alpha,
            d,
            curves,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.curves.len() < 2 {
            return Err(Error::InvalidDataset(format!(
                "a collapse needs at least two curves, got {}",
                self.curves.len()
            )));
        }
        for c in &self.curves {
            c.validate()?;
            if c.len() < 2 {
                return Err(Error::InvalidDataset(format!(
                    "curve of size {} has fewer than two points",
                    c.size
                )));
            }
            if !(c.size > 0.0) {
                return Err(Error::InvalidDataset("sizes must be positive".into()));
            }
        }
        Ok(())
    }

    /// Drops curves whose size label is below `min_size`.
    pub fn without_small(mut self, min_size: f64) -> Self {
        self.curves.retain(|c| c.size >= min_size);
        self
    }
}

/// Smallest linear size kept in a collapse by default: 200 in 1d, 30 in 2d.
pub fn default_min_linear_size(d: usize) -> usize {
    if d == 1 {
        200
    } else {
        30
    }
}

/// Two-exponent collapse `x N^{d_x}`, `y N^{d_y}`.
pub fn optimize_exponents(dataset: &ScalingDataset, d_x: Axis, d_y: Axis) -> Result<Minimum> {
    dataset.validate()?;
    minimize_on_grids(
        |p, g| {
            let mx: Vec<f64> = dataset.curves.iter().map(|c| c.size.powf(p[0])).collect();
            let my: Vec<f64> = dataset.curves.iter().map(|c| c.size.powf(p[1])).collect();
            cost_on_grid(&dataset.curves, &mx, &my, g).map(|c| c.lambda)
        },
        &[d_x, d_y],
    )
}

/// Default search interval for `p`.
pub fn default_p_axis() -> Axis {
    Axis::new("p", -0.5, 1.5)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PExtraction {
    pub p: ExponentEstimate,
    /// Curves that survived the collectiveness filter, unscaled.
    pub kept: Vec<Curve>,
    /// Per-curve collective baseline (value at the largest `x`).
    pub baselines: Vec<(f64, f64)>,
}

/// Size exponent of the minimal variance in the partially collective regime.
///
/// Curves hold `Var_min` against `a_Z / L`, one per `N`. The collective baseline of each
/// curve is its value at the largest aspect ratio; only points at least `c` times above
/// it are kept. Curves left with fewer than three points are dropped and at least two
/// must survive. The collapse rescales `Var_min N^{-p}` at fixed `a_Z / L`.
pub fn extract_p(dataset: &ScalingDataset, c: f64, axis: Axis) -> Result<PExtraction> {
    if !(4.0..=10.0).contains(&c) {
        return Err(Error::InvalidConfig(format!(
            "collectiveness threshold {c} outside [4, 10]"
        )));
    }
    dataset.validate()?;
    let mut kept = Vec::new();
    let mut baselines = Vec::new();
    for curve in &dataset.curves {
        let base = curve.y[curve.len() - 1];
        baselines.push((curve.size, base));
        let idx: Vec<usize> = (0..curve.len()).filter(|&j| curve.y[j] >= c * base).collect();
        if idx.len() >= 3 {
            kept.push(Curve::with_errors(
                curve.size,
                curve.param,
                idx.iter().map(|&j| curve.x[j]).collect(),
                idx.iter().map(|&j| curve.y[j]).collect(),
                idx.iter().map(|&j| curve.err[j]).collect(),
            ));
        }
    }
    if kept.len() < 2 {
        return Err(Error::InvalidDataset(format!(
            "fewer than 3 points above {c} x the collective baseline in all but {} curve(s)",
            kept.len()
        )));
    }
    let ones = vec![1.0; kept.len()];
    let m = minimize_on_grids(
        |p, g| {
            let my: Vec<f64> = kept.iter().map(|c| c.size.powf(-p[0])).collect();
            cost_on_grid(&kept, &ones, &my, g).map(|e| e.lambda)
        },
        &[axis],
    )?;
    Ok(PExtraction {
        p: m.exponents[0].clone(),
        kept,
        baselines,
    })
}

/// Convention attached to [`extract_dx`] results.
pub const DX_CONVENTION: &str = "x = a_Z * L^(-d_x); d_x > 0 means the critical a_Z grows with L";

/// Scaling of the critical layer spacing with `L`. Curves hold `Var_min` against
/// `a_Z`, one per linear size `L`; points above `var_max` are ignored.
pub fn extract_dx(dataset: &ScalingDataset, var_max: Option<f64>, axis: Axis) -> Result<ExponentEstimate> {
    dataset.validate()?;
    let curves: Vec<Curve> = dataset
        .curves
        .iter()
        .filter_map(|c| {
            let idx: Vec<usize> = (0..c.len()).filter(|&j| var_max.is_none_or(|m| c.y[j] <= m)).collect();
            (idx.len() >= 2).then(|| {
                Curve::with_errors(
                    c.size,
                    c.param,
                    idx.iter().map(|&j| c.x[j]).collect(),
                    idx.iter().map(|&j| c.y[j]).collect(),
                    idx.iter().map(|&j| c.err[j]).collect(),
                )
            })
        })
        .collect();
    if curves.len() < 2 {
        return Err(Error::InvalidDataset(
            "fewer than two curves in the variance window".into(),
        ));
    }
    let ones = vec![1.0; curves.len()];
    let m = minimize_on_grids(
        |p, g| {
            let mx: Vec<f64> = curves.iter().map(|c| c.size.powf(-p[0])).collect();
            cost_on_grid(&curves, &mx, &ones, g).map(|e| e.lambda)
        },
        &[axis],
    )?;
    Ok(m.exponents[0].clone())
}

/// Collapsed master curve: the mean of all rescaled curves on the shared grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFunction {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Number of curves contributing at each grid point.
    pub count: Vec<usize>,
}

impl ScalingFunction {
    pub fn from_rescaled(curves: &[Curve], mx: &[f64], my: &[f64]) -> Self {
        let lo = curves
            .iter()
            .zip(mx)
            .map(|(c, m)| c.x[0] * m)
            .fold(f64::INFINITY, f64::min);
        let hi = curves
            .iter()
            .zip(mx)
            .map(|(c, m)| c.x[c.len() - 1] * m)
            .fold(f64::NEG_INFINITY, f64::max);
        let step = (hi - lo) / (GRID_POINTS - 1) as f64;
        let mut out = ScalingFunction {
            x: Vec::new(),
            y: Vec::new(),
            count: Vec::new(),
        };
        for g in 0..GRID_POINTS {
            let x = lo + step * g as f64;
            let vals: Vec<f64> = curves
                .iter()
                .enumerate()
                .filter_map(|(i, c)| interp(&c.x, &c.y, x / mx[i]).map(|v| v * my[i]))
                .collect();
            if !vals.is_empty() {
                out.x.push(x);
                out.y.push(vals.iter().sum::<f64>() / vals.len() as f64);
                out.count.push(vals.len());
            }
        }
        out
    }

    pub fn eval(&self, x: f64) -> Option<f64> {
        interp(&self.x, &self.y, x)
    }

    /// Least-squares slope of `ln |y|` against `ln |x|` over `lo <= |x| <= hi`.
    pub fn power_law_exponent(&self, lo: f64, hi: f64) -> Result<f64> {
        let pts: Vec<(f64, f64)> = self
            .x
            .iter()
            .zip(&self.y)
            .filter(|(x, y)| x.abs() >= lo && x.abs() <= hi && **y != 0.0 && **x != 0.0)
            .map(|(x, y)| (x.abs().ln(), y.abs().ln()))
            .collect();
        if pts.len() < 2 {
            return Err(Error::InvalidDataset(
                "power-law window holds fewer than two points".into(),
            ));
        }
        Ok(linear_fit(&pts, &vec![1.0; pts.len()]).0)
    }

    pub fn to_table(&self) -> ColumnTable {
        let mut t = ColumnTable::with_columns(&["x", "f", "curves"]);
        for i in 0..self.x.len() {
            t.push_row(vec![self.x[i], self.y[i], self.count[i] as f64]);
        }
        t
    }
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    let n = xs.len();
    if n < 2 || x < xs[0] || x > xs[n - 1] {
        return None;
    }
    let j = xs.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
    let w = (x - xs[j]) / (xs[j + 1] - xs[j]);
    Some(ys[j] + w * (ys[j + 1] - ys[j]))
}

/// Weighted least squares `v = a u + b`; returns `(a, sigma_a, b, chi2)`.
fn linear_fit(pts: &[(f64, f64)], w: &[f64]) -> (f64, f64, f64, f64) {
    let sw: f64 = w.iter().sum();
    let mu = pts.iter().zip(w).map(|(p, w)| w * p.0).sum::<f64>() / sw;
    let mv = pts.iter().zip(w).map(|(p, w)| w * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().zip(w).map(|(p, w)| w * (p.0 - mu).powi(2)).sum();
    let sxy: f64 = pts.iter().zip(w).map(|(p, w)| w * (p.0 - mu) * (p.1 - mv)).sum();
    let a = sxy / sxx;
    let b = mv - a * mu;
    let chi2: f64 = pts.iter().zip(w).map(|(p, w)| w * (p.1 - a * p.0 - b).powi(2)).sum();
    (a, (1.0 / sxx).sqrt(), b, chi2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeCollapse {
    pub d_v: ExponentEstimate,
    pub d_tau: ExponentEstimate,
    pub master: ScalingFunction,
}

/// Keeps `x <= 0` (times up to the squeezing minimum) and requires two points.
fn up_to_minimum(curves: &[Curve]) -> Result<Vec<Curve>> {
    let out: Vec<Curve> = curves
        .iter()
        .map(|c| {
            let n = c.x.partition_point(|&x| x <= 0.0);
            Curve::with_errors(
                c.size,
                c.param,
                c.x[..n].to_vec(),
                c.y[..n].to_vec(),
                c.err[..n].to_vec(),
            )
        })
        .collect();
    if out.iter().any(|c| c.len() < 2) {
        return Err(Error::InvalidDataset(
            "a curve has fewer than two points before its minimum".into(),
        ));
    }
    Ok(out)
}

/// `Var a_Z^{-d_V} = f_N[(t - t_min) a_Z^{-d_tau}]` at fixed `N`.
///
/// Curves carry `x = t - t_min` and `param = a_Z`; only `t <= t_min` is used.
pub fn collapse_time_curves(dataset: &ScalingDataset, d_v: Axis, d_tau: Axis) -> Result<TimeCollapse> {
    dataset.validate()?;
    let curves = up_to_minimum(&dataset.curves)?;
    let scale = |p: &[f64]| -> (Vec<f64>, Vec<f64>) {
        (
            curves.iter().map(|c| c.param.powf(-p[1])).collect(),
            curves.iter().map(|c| c.param.powf(-p[0])).collect(),
        )
    };
    let m = minimize_on_grids(
        |p, g| {
            let (mx, my) = scale(p);
            cost_on_grid(&curves, &mx, &my, g).map(|e| e.lambda)
        },
        &[d_v, d_tau],
    )?;
    let (mx, my) = scale(&[m.exponents[0].value, m.exponents[1].value]);
    Ok(TimeCollapse {
        d_v: m.exponents[0].clone(),
        d_tau: m.exponents[1].clone(),
        master: ScalingFunction::from_rescaled(&curves, &mx, &my),
    })
}

/// Exponents fixed before the `delta` search, with their uncertainties.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedExponents {
    pub d: usize,
    pub p: f64,
    pub p_err: f64,
    pub d_v: f64,
    pub d_v_err: f64,
    pub d_tau: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FullCollapse {
    pub delta: ExponentEstimate,
    pub nu: ExponentEstimate,
    pub master: ScalingFunction,
}

/// `nu = p - d_V (1 - delta) / d`.
pub fn nu_from(p: f64, d_v: f64, delta: f64, d: usize) -> f64 {
    p - d_v * (1.0 - delta) / d as f64
}

/// Collapse over `t`, `a_Z` and `N` with only `delta` free.
///
/// `x = (t - t_min) a_Z^{-d_tau} N^{delta d_tau / d}` and
/// `y = Var a_Z^{-d_V} N^{d_V delta / d - nu}` with `nu` tied to `delta` through
/// [`nu_from`]. The uncertainty of `nu` combines those of `p`, `d_V` and `delta` in
/// quadrature at first order.
pub fn collapse_full(dataset: &ScalingDataset, fixed: FixedExponents, delta: Axis) -> Result<FullCollapse> {
    dataset.validate()?;
    let curves = up_to_minimum(&dataset.curves)?;
    let d = fixed.d as f64;
    let scale = |delta: f64| -> (Vec<f64>, Vec<f64>) {
        let nu = nu_from(fixed.p, fixed.d_v, delta, fixed.d);
        (
            curves
                .iter()
                .map(|c| c.param.powf(-fixed.d_tau) * c.size.powf(delta * fixed.d_tau / d))
                .collect(),
            curves
                .iter()
                .map(|c| c.param.powf(-fixed.d_v) * c.size.powf(fixed.d_v * delta / d - nu))
                .collect(),
        )
    };
    let m = minimize_on_grids(
        |p, g| {
            let (mx, my) = scale(p[0]);
            cost_on_grid(&curves, &mx, &my, g).map(|e| e.lambda)
        },
        &[delta],
    )?;
    let est = m.exponents[0].clone();
    let nu = nu_from(fixed.p, fixed.d_v, est.value, fixed.d);
    let nu_err = (fixed.p_err.powi(2)
        + ((1.0 - est.value) * fixed.d_v_err / d).powi(2)
        + (fixed.d_v * est.uncertainty / d).powi(2))
    .sqrt();
    let (mx, my) = scale(est.value);
    Ok(FullCollapse {
        nu: ExponentEstimate {
            name: "nu".into(),
            value: nu,
            uncertainty: nu_err,
            open_interval: est.open_interval,
            lambda_min: est.lambda_min,
            grid_step: 0.0,
            grid_sensitivity: est.grid_sensitivity.map(|s| (fixed.d_v * s / d).abs()),
        },
        delta: est,
        master: ScalingFunction::from_rescaled(&curves, &mx, &my),
    })
}

/// One point of a `p` sweep over the aspect ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub aspect_ratio: f64,
    pub p: f64,
    pub uncertainty: f64,
}

impl SweepPoint {
    pub fn consistent_with_zero(&self) -> bool {
        self.p.abs() <= self.uncertainty.max(0.02)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub aspect_ratio: f64,
    /// Spacing to the next lower grid point.
    pub resolution: f64,
}

/// Walks down from the largest aspect ratio while `p` is consistent with zero and
/// returns the last such point.
pub fn detect_transition(sweep: &[SweepPoint]) -> Result<Transition> {
    let mut pts = sweep.to_vec();
    pts.sort_by(|a, b| b.aspect_ratio.total_cmp(&a.aspect_ratio));
    let zero: Vec<bool> = pts.iter().map(|p| p.consistent_with_zero()).collect();
    if zero.iter().all(|&z| z) {
        return Err(Error::NoTransition(
            "p is consistent with zero over the whole window".into(),
        ));
    }
    if zero.iter().all(|&z| !z) {
        return Err(Error::NoTransition("p is nonzero over the whole window".into()));
    }
    if !zero[0] {
        return Err(Error::NoTransition("p is nonzero at the largest aspect ratio".into()));
    }
    let last = zero.iter().position(|&z| !z).unwrap() - 1;
    Ok(Transition {
        aspect_ratio: pts[last].aspect_ratio,
        resolution: pts[last].aspect_ratio - pts[last + 1].aspect_ratio,
    })
}

/// Slope `mu` of `ln Var_min` against `ln N` from `(N, Var_min, err)`; weights
/// `(Var/err)^2`. The standard error is inflated by `sqrt(chi2 / dof)` when the scatter
/// exceeds the error bars.
pub fn fixed_spacing_exponent(points: &[(f64, f64, f64)]) -> Result<ExponentEstimate> {
    power_law_fit("mu", points, 4)
}

/// Weighted log-log fit behind [`fixed_spacing_exponent`] with a configurable minimum
/// number of sizes.
pub fn power_law_fit(name: &str, points: &[(f64, f64, f64)], min_points: usize) -> Result<ExponentEstimate> {
    if points.len() < min_points {
        return Err(Error::InvalidDataset(format!(
            "a power-law fit needs at least {min_points} sizes, got {}",
            points.len()
        )));
    }
    if points.iter().any(|p| !(p.1 > 0.0) || !(p.0 > 0.0)) {
        return Err(Error::InvalidDataset("nonpositive variance or size".into()));
    }
    let pts: Vec<(f64, f64)> = points.iter().map(|p| (p.0.ln(), p.1.ln())).collect();
    let w: Vec<f64> = points
        .iter()
        .map(|p| {
            let rel = if p.2 > 0.0 { p.2 / p.1 } else { 0.04 };
            rel.powi(-2)
        })
        .collect();
    let (a, sa, _, chi2) = linear_fit(&pts, &w);
    let dof = (pts.len() - 2) as f64;
    let inflate = (chi2 / dof).sqrt().max(1.0);
    Ok(ExponentEstimate {
        name: name.to_string(),
        value: a,
        uncertainty: sa * inflate,
        open_interval: false,
        lambda_min: chi2 / dof,
        grid_step: 0.0,
        grid_sensitivity: None,
    })
}

/// Key-value lines `name = value +- uncertainty (lambda_min = ..)`.
pub fn report_lines(estimates: &[&ExponentEstimate]) -> String {
    estimates
        .iter()
        .map(|e| {
            format!(
                "{} = {:.4} +- {:.4} (lambda_min = {:.3}{}{})\n",
                e.name,
                e.value,
                e.uncertainty,
                e.lambda_min,
                e.grid_sensitivity
                    .map(|g| format!(", grid shift {g:.4}"))
                    .unwrap_or_default(),
                if e.open_interval { ", interval open" } else { "" }
            )
        })
        .collect()
}
