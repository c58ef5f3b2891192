//! Two large spins `S_A`, `S_B` (infinite-range limit) coupled by
//! `sqrt(r) S_A^x S_B^x + S_A^y S_B^y / sqrt(r)`.
//!
//! Basis `|m_A, m_B>` with index `(S - m_A) (2S + 1) + (S - m_B)`.

use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::krylov::{dot, norm, Krylov, KrylovOptions, SparseSymmetric};
use crate::error::{Error, Result};

/// Largest layer spin accepted by default.
pub const DEFAULT_MAX_SPIN: f64 = 150.0;

/// Layer spin as the integer `2S`.
fn two_s(s: f64) -> Result<usize> {
    let t = 2.0 * s;
    if !(s > 0.0) || (t - t.round()).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "layer spin S = {s} must be a positive multiple of 1/2"
        )));
    }
    Ok(t.round() as usize)
}

fn ladder(two_s: usize, k: usize, raise: bool) -> Option<(usize, f64)> {
    // index k corresponds to m = S - k
    let s = two_s as f64 / 2.0;
    let m = s - k as f64;
    if raise {
        (k > 0).then(|| (k - 1, (s * (s + 1.0) - m * (m + 1.0)).sqrt()))
    } else {
        (k < two_s).then(|| (k + 1, (s * (s + 1.0) - m * (m - 1.0)).sqrt()))
    }
}

/// Sparse interlayer Hamiltonian of two collective spins.
#[derive(Clone, Debug)]
pub struct AnisotropicHamiltonian {
    pub s: f64,
    pub r: f64,
    matrix: SparseSymmetric,
}

impl AnisotropicHamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &SparseSymmetric {
        &self.matrix
    }
}

pub fn build_hamiltonian(s: f64, r: f64) -> Result<AnisotropicHamiltonian> {
    build_hamiltonian_capped(s, r, DEFAULT_MAX_SPIN)
}

pub fn build_hamiltonian_capped(s: f64, r: f64, max_spin: f64) -> Result<AnisotropicHamiltonian> {
    let ts = two_s(s)?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidConfig(format!("anisotropy r = {r} must be positive")));
    }
    let side = ts + 1;
    let dim = side * side;
    let cap_side = (2.0 * max_spin).round() as usize + 1;
    if side > cap_side {
        let cap = cap_side * cap_side;
        return Err(Error::DimensionCap {
            dim,
            cap,
            // amplitudes plus a 30-vector Krylov basis and the sparse matrix
            bytes: dim * (16 * 33 + 5 * 16),
        });
    }
    let same = 0.25 * (r.sqrt() - 1.0 / r.sqrt());
    let cross = 0.25 * (r.sqrt() + 1.0 / r.sqrt());
    let mut rows = vec![Vec::with_capacity(4); dim];
    for ka in 0..side {
        for kb in 0..side {
            let col = ka * side + kb;
            for (ra, rb, coef) in [
                (true, true, same),
                (false, false, same),
                (true, false, cross),
                (false, true, cross),
            ] {
                if coef == 0.0 {
                    continue;
                }
                if let (Some((ja, ca)), Some((jb, cb))) = (ladder(ts, ka, ra), ladder(ts, kb, rb)) {
                    rows[ja * side + jb].push((col, coef * ca * cb));
                }
            }
        }
    }
    Ok(AnisotropicHamiltonian {
        s,
        r,
        matrix: SparseSymmetric::from_rows(rows),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CollectiveState {
    pub s: f64,
    pub t: f64,
    pub psi: Vec<Complex64>,
}

impl CollectiveState {
    /// `|m_A = S, m_B = -S>`.
    pub fn polarized(s: f64) -> Result<Self> {
        let side = two_s(s)? + 1;
        let mut psi = vec![Complex64::default(); side * side];
        psi[side - 1] = Complex64::new(1.0, 0.0);
        Ok(CollectiveState { s, t: 0.0, psi })
    }

    pub fn norm(&self) -> f64 {
        norm(&self.psi)
    }
}

/// One Krylov step `psi <- exp(-i H dt) psi` with default options.
pub fn evolve(state: &CollectiveState, hamiltonian: &AnisotropicHamiltonian, dt: f64) -> CollectiveState {
    let mut out = state.clone();
    let mut k = Krylov::new(hamiltonian.dim(), KrylovOptions::default());
    k.propagate(&hamiltonian.matrix, &mut out.psi, dt);
    out.t += dt;
    out
}

/// Which collective operator to apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Op {
    X,
    Y,
    Z,
}

/// `phi = S_layer^op psi` for layer 0 (A) or 1 (B).
fn apply_collective(side: usize, layer: usize, op: Op, psi: &[Complex64], phi: &mut [Complex64]) {
    let ts = side - 1;
    phi.iter_mut().for_each(|p| *p = Complex64::default());
    let i = Complex64::new(0.0, 1.0);
    for ka in 0..side {
        for kb in 0..side {
            let idx = ka * side + kb;
            let amp = psi[idx];
            if amp == Complex64::default() {
                continue;
            }
            let k = if layer == 0 { ka } else { kb };
            let target = |j: usize| if layer == 0 { j * side + kb } else { ka * side + j };
            match op {
                Op::Z => phi[idx] += amp * (ts as f64 / 2.0 - k as f64),
                Op::X | Op::Y => {
                    // S^x = (S+ + S-)/2, S^y = (S+ - S-)/(2i)
                    if let Some((j, c)) = ladder(ts, k, true) {
                        let f = if op == Op::X {
                            Complex64::new(0.5, 0.0)
                        } else {
                            -0.5 * i
                        };
                        phi[target(j)] += amp * c * f;
                    }
                    if let Some((j, c)) = ladder(ts, k, false) {
                        let f = if op == Op::X { Complex64::new(0.5, 0.0) } else { 0.5 * i };
                        phi[target(j)] += amp * c * f;
                    }
                }
            }
        }
    }
}

/// Symmetrized covariance of `(S_A^x, S_A^y, S_B^x, S_B^y)` and its softest direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub t: f64,
    pub covariance: [[f64; 4]; 4],
    /// Minimal eigenvalue: variance of the best unit-norm quadrature.
    pub min_variance: f64,
    /// Coefficients of that quadrature on `(S_A^x, S_A^y, S_B^x, S_B^y)`.
    pub direction: [f64; 4],
    /// `Var[(S_A^x - S_B^y)/sqrt 2]`, same normalization as `min_variance`.
    pub var_minus: f64,
    pub polarization: f64,
}

pub fn covariance(state: &CollectiveState) -> CovarianceReport {
    let side = (2.0 * state.s).round() as usize + 1;
    let psi = &state.psi;
    let ops = [(0, Op::X), (0, Op::Y), (1, Op::X), (1, Op::Y)];
    let mut phis = vec![vec![Complex64::default(); psi.len()]; 4];
    for (phi, &(layer, op)) in phis.iter_mut().zip(&ops) {
        apply_collective(side, layer, op, psi, phi);
    }
    let mean: Vec<f64> = phis.iter().map(|p| dot(psi, p).re).collect();
    let mut c = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in a..4 {
            let v = dot(&phis[a], &phis[b]).re - mean[a] * mean[b];
            c[a][b] = v;
            c[b][a] = v;
        }
    }
    let m = Matrix4::from_fn(|i, j| c[i][j]);
    let eig = SymmetricEigen::new(m);
    let (k, &lam) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let v: Vector4<f64> = eig.eigenvectors.column(k).into();
    let mut za = vec![Complex64::default(); psi.len()];
    let mut zb = vec![Complex64::default(); psi.len()];
    apply_collective(side, 0, Op::Z, psi, &mut za);
    apply_collective(side, 1, Op::Z, psi, &mut zb);
    let polarization = dot(psi, &za).re - dot(psi, &zb).re;
    CovarianceReport {
        t: state.t,
        covariance: c,
        min_variance: lam,
        direction: [v[0], v[1], v[2], v[3]],
        var_minus: 0.5 * (c[0][0] + c[3][3] - 2.0 * c[0][3]),
        polarization,
    }
}

/// Covariance along a time grid (ascending, starting at or after `initial.t`).
pub fn covariance_scan(
    initial: &CollectiveState,
    hamiltonian: &AnisotropicHamiltonian,
    t_grid: &[f64],
) -> Vec<CovarianceReport> {
    let mut state = initial.clone();
    let mut k = Krylov::new(hamiltonian.dim(), KrylovOptions::default());
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let dt = t - state.t;
        if dt != 0.0 {
            k.propagate(&hamiltonian.matrix, &mut state.psi, dt);
            state.t = t;
        }
        out.push(covariance(&state));
    }
    out
}

/// Smallest optimal variance over time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimalVariance {
    pub s: f64,
    pub r: f64,
    pub min_variance: f64,
    pub t_min: f64,
    /// False when the minimum was still at the end of the longest window tried.
    pub converged: bool,
}

/// Two-stage scan for the minimum over time of the optimal variance: a coarse grid
/// (extended until the minimum is interior), then repeated local refinement.
pub fn minimal_variance(s: f64, r: f64) -> Result<MinimalVariance> {
    let h = build_hamiltonian(s, r)?;
    let initial = CollectiveState::polarized(s)?;
    // isotropic squeezing rate is 2S, so this spans a few squeezing times
    let mut t_max = 2.0 * (2.0 * s).max(2.0).ln() / s;
    let coarse = 60;
    let mut converged = false;
    let mut best = (0, Vec::new());
    for _ in 0..6 {
        let grid: Vec<f64> = (0..=coarse).map(|i| t_max * i as f64 / coarse as f64).collect();
        let scan = covariance_scan(&initial, &h, &grid);
        let idx = argmin(&scan);
        best = (idx, scan);
        if idx < coarse {
            converged = true;
            break;
        }
        t_max *= 2.0;
    }
    let (idx, scan) = best;
    let mut lo = scan[idx.saturating_sub(1)].t;
    let mut hi = scan[(idx + 1).min(scan.len() - 1)].t;
    let mut min = (scan[idx].min_variance, scan[idx].t);
    for _ in 0..3 {
        let n = 20;
        let grid: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
        let fine = covariance_scan(&initial, &h, &grid);
        let k = argmin(&fine);
        if fine[k].min_variance < min.0 {
            min = (fine[k].min_variance, fine[k].t);
        }
        lo = fine[k.saturating_sub(1)].t;
        hi = fine[(k + 1).min(n)].t;
    }
    Ok(MinimalVariance {
        s,
        r,
        min_variance: min.0,
        t_min: min.1,
        converged,
    })
}

fn argmin(scan: &[CovarianceReport]) -> usize {
    let mut k = 0;
    for (i, c) in scan.iter().enumerate() {
        if c.min_variance < scan[k].min_variance {
            k = i;
        }
    }
    k
}

/// `(N/2) e^{-N V_avg t}` and `(N/2) e^{+N V_avg t}`.
pub fn tms_reference(n: f64, v_avg: f64, t: f64) -> (f64, f64) {
    let x = n * v_avg * t;
    (0.5 * n * (-x).exp(), 0.5 * n * x.exp())
}
