//! Quadratic (Holstein-Primakoff) theory around the polarized state on a periodic lattice.
//!
//! Fourier amplitudes are stored with a `1/L^d` normalization:
//! `eps_k = (1/L^d) sum_j V^intra_{0j} e^{-i k.r_j} - (same at k = 0)` and
//! `Omega_k = (1/L^d) sum_j V^inter_{0j} e^{-i k.r_j}`.
//! With that normalization the physical quasi-energy is `(N/2) sqrt(eps_k^2 - |Omega_k|^2)`
//! (N sites per layer), so at `alpha = 0` the squeezed variance decays as
//! `(N/2) exp(-N V_avg t)`. Growth rates [`BogoliubovSpectrum::gamma`] and all times are
//! in these physical units.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{build_lattice, Boundary, CouplingSet, DisplacementKernel, Geometry, LatticeSpec};

/// Above this many cells the Fourier sums go through an FFT instead of direct summation.
const DIRECT_MAX_CELLS: usize = 1024;

/// Allowed momenta `k = (n1 b1 + n2 b2) / L`, with `b` the reciprocal vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentumGrid {
    pub geometry: Geometry,
    pub l: usize,
    pub d: usize,
    /// Integer labels `(n1, n2)`, `n` in `0..L`; entry 0 is `k = 0`.
    pub labels: Vec<[usize; 2]>,
    /// Shortest Cartesian representative of each `k` (first Brillouin zone).
    pub k: Vec<[f64; 2]>,
}

impl MomentumGrid {
    pub fn new(geometry: Geometry, l: usize) -> Self {
        let d = geometry.dimension();
        let [a1, a2] = geometry.cell_vectors();
        let det = a1[0] * a2[1] - a1[1] * a2[0];
        // b_i . a_j = 2 pi delta_ij (1d: b1 along a1)
        let (b1, b2) = if d == 1 {
            ([2.0 * PI, 0.0], [0.0, 0.0])
        } else {
            (
                [2.0 * PI * a2[1] / det, -2.0 * PI * a2[0] / det],
                [-2.0 * PI * a1[1] / det, 2.0 * PI * a1[0] / det],
            )
        };
        let l2 = if d == 1 { 1 } else { l };
        let lf = l as f64;
        let mut labels = Vec::with_capacity(l * l2);
        let mut k = Vec::with_capacity(l * l2);
        for n1 in 0..l {
            for n2 in 0..l2 {
                labels.push([n1, n2]);
                let mut best = [0.0, 0.0];
                let mut best_norm = f64::INFINITY;
                for s1 in -1..=1 {
                    for s2 in if d == 1 { 0..=0 } else { -1..=1 } {
                        let m1 = n1 as f64 / lf + s1 as f64 - if n1 * 2 > l { 1.0 } else { 0.0 };
                        let m2 = n2 as f64 / lf + s2 as f64 - if n2 * 2 > l { 1.0 } else { 0.0 };
                        let v = [m1 * b1[0] + m2 * b2[0], m1 * b1[1] + m2 * b2[1]];
                        let nn = v[0] * v[0] + v[1] * v[1];
                        if nn < best_norm - 1e-12 {
                            best = v;
                            best_norm = nn;
                        }
                    }
                }
                k.push(best);
            }
        }
        MomentumGrid {
            geometry,
            l,
            d,
            labels,
            k,
        }
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    pub fn magnitude(&self, i: usize) -> f64 {
        let k = self.k[i];
        (k[0] * k[0] + k[1] * k[1]).sqrt()
    }
}

/// Fourier amplitudes and quasi-energies on the momentum grid.
#[derive(Clone, Debug)]
pub struct BogoliubovSpectrum {
    pub grid: MomentumGrid,
    /// Sites per layer.
    pub n_sites: usize,
    pub epsilon: Vec<f64>,
    pub omega: Vec<Complex64>,
    /// `eps_k^2 - |Omega_k|^2` in the stored normalization.
    pub xi2: Vec<f64>,
    /// Physical growth rate `2 |xi_k|` of unstable modes, zero for stable ones.
    pub gamma: Vec<f64>,
}

impl BogoliubovSpectrum {
    /// Factor converting stored amplitudes to physical energies.
    pub fn rate_scale(&self) -> f64 {
        self.n_sites as f64 / 2.0
    }

    /// Physical `|xi_k|`.
    pub fn xi_abs(&self, k: usize) -> f64 {
        self.rate_scale() * self.xi2[k].abs().sqrt()
    }

    fn unstable_threshold(&self) -> f64 {
        1e-12 * self.omega[0].norm_sqr()
    }

    pub fn is_unstable(&self, k: usize) -> bool {
        self.xi2[k] < -self.unstable_threshold()
    }

    fn from_amplitudes(grid: MomentumGrid, n_sites: usize, epsilon: Vec<f64>, omega: Vec<Complex64>) -> Self {
        let xi2: Vec<f64> = epsilon.iter().zip(&omega).map(|(e, o)| e * e - o.norm_sqr()).collect();
        let mut s = BogoliubovSpectrum {
            grid,
            n_sites,
            epsilon,
            omega,
            xi2,
            gamma: Vec::new(),
        };
        let thr = s.unstable_threshold();
        s.gamma = s
            .xi2
            .iter()
            .map(|&x| {
                if x < -thr {
                    2.0 * s.n_sites as f64 / 2.0 * (-x).sqrt()
                } else {
                    0.0
                }
            })
            .collect();
        s
    }
}

fn check_bravais(geometry: Geometry) -> Result<()> {
    if geometry.basis().len() != 1 {
        return Err(Error::UnsupportedGeometry(format!(
            "{} has a multi-site basis; the single-band quadratic theory needs a Bravais lattice",
            geometry.name()
        )));
    }
    Ok(())
}

/// Sum `(1/L^d) sum_dn K(dn) e^{-2 pi i n.dn / L}` for every momentum label.
fn transform(kernel: &DisplacementKernel, grid: &MomentumGrid, inter: bool) -> Vec<Complex64> {
    let l = kernel.l;
    let d = kernel.d;
    let l2 = if d == 1 { 1 } else { l };
    let cells = l * l2;
    let value = |dn: [isize; 2]| {
        if inter {
            kernel.inter(0, 0, dn)
        } else {
            kernel.intra(0, 0, dn)
        }
    };
    let norm = 1.0 / cells as f64;
    if cells <= DIRECT_MAX_CELLS {
        let mut out = Vec::with_capacity(grid.len());
        for lab in &grid.labels {
            let mut acc = Complex64::default();
            for m2 in 0..l2 {
                for m1 in 0..l {
                    let phase = -2.0 * PI * ((lab[0] * m1) % l + (lab[1] * m2) % l) as f64 / l as f64;
                    acc += Complex64::from_polar(value([m1 as isize, m2 as isize]), phase);
                }
            }
            out.push(acc * norm);
        }
        return out;
    }
    // grid layout [m2][m1]
    let mut buf: Vec<Complex64> = (0..cells)
        .map(|i| Complex64::new(value([(i % l) as isize, (i / l) as isize]), 0.0))
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(l);
    fft.process(&mut buf);
    if d == 2 {
        let mut t = vec![Complex64::default(); cells];
        for r in 0..l {
            for c in 0..l {
                t[c * l + r] = buf[r * l + c];
            }
        }
        fft.process(&mut t);
        // now [n1][n2]
        buf = t;
    }
    grid.labels.iter().map(|lab| buf[lab[0] * l2 + lab[1]] * norm).collect()
}

/// `eps_k`, `Omega_k` and derived quantities from a periodic coupling set.
pub fn fourier_couplings(couplings: &CouplingSet) -> Result<BogoliubovSpectrum> {
    if couplings.boundary != Boundary::Periodic {
        return Err(Error::NotPeriodic);
    }
    let spec = couplings.spec();
    check_bravais(spec.geometry)?;
    let grid = MomentumGrid::new(spec.geometry, spec.l);
    let kernel = couplings.kernel();
    let intra = transform(kernel, &grid, false);
    let omega = transform(kernel, &grid, true);
    let e0 = intra[0].re;
    let epsilon = intra.iter().map(|c| c.re - e0).collect();
    Ok(BogoliubovSpectrum::from_amplitudes(
        grid,
        couplings.per_layer(),
        epsilon,
        omega,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeClassification {
    /// Indices into the momentum grid.
    pub unstable: Vec<usize>,
    /// Largest unstable `|k|` (first-zone representative).
    pub k_c: f64,
}

pub fn classify_modes(spectrum: &BogoliubovSpectrum) -> ModeClassification {
    let unstable: Vec<usize> = (0..spectrum.grid.len()).filter(|&k| spectrum.is_unstable(k)).collect();
    let k_c = unstable.iter().map(|&k| spectrum.grid.magnitude(k)).fold(0.0, f64::max);
    ModeClassification { unstable, k_c }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionPoint {
    pub aspect_ratio: f64,
    pub a_z: f64,
    pub alpha: f64,
    pub d: usize,
    pub l: usize,
}

fn geometry_for(d: usize) -> Result<Geometry> {
    match d {
        1 => Ok(Geometry::ChainLadder),
        2 => Ok(Geometry::SquareBilayer),
        _ => Err(Error::InvalidLattice(format!("dimension {d} must be 1 or 2"))),
    }
}

/// Aspect ratio `a_Z/L` above which only `k = 0` is unstable (chain for d = 1, square for d = 2).
pub fn critical_aspect_ratio(alpha: f64, d: usize, l: usize) -> Result<TransitionPoint> {
    critical_aspect_ratio_for(geometry_for(d)?, alpha, l)
}

pub fn critical_aspect_ratio_for(geometry: Geometry, alpha: f64, l: usize) -> Result<TransitionPoint> {
    check_bravais(geometry)?;
    let d = geometry.dimension();
    let lf = l as f64;
    let count = |a_z: f64| -> Result<usize> {
        let spec = LatticeSpec::new(geometry, l, a_z).with_boundary(Boundary::Periodic);
        let pos = build_lattice(&spec)?;
        let c = crate::lattice::coupling_matrix_with_limit(&pos, alpha, Boundary::Periodic, 0)?;
        Ok(classify_modes(&fourier_couplings(&c)?).unstable.len())
    };
    let (mut lo, mut hi) = (1e-3 * lf, lf);
    if count(lo)? <= 1 {
        return Err(Error::NoTransition(format!(
            "only k = 0 is unstable already at a_Z/L = 1e-3 (alpha = {alpha}, d = {d}, L = {l}): fully collective"
        )));
    }
    if count(hi)? > 1 {
        return Err(Error::NoTransition(format!(
            "finite-k modes remain unstable up to a_Z/L = 1 (alpha = {alpha}, d = {d}, L = {l})"
        )));
    }
    while (hi - lo) / lf > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if count(mid)? > 1 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a_z = 0.5 * (lo + hi);
    Ok(TransitionPoint {
        aspect_ratio: a_z / lf,
        a_z,
        alpha,
        d,
        l,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticVarianceSeries {
    pub t: Vec<f64>,
    pub a0: Vec<f64>,
    pub b0: Vec<f64>,
    pub var_minus: Vec<f64>,
    pub var_plus: Vec<f64>,
    /// `(grid index, population on t)` for every unstable mode.
    pub populations: Vec<(usize, Vec<f64>)>,
}

/// Closed-form `k = 0` variances `(N/2)(A_0 + B_0)^{-+2}` and unstable-mode populations.
pub fn analytic_variance(spectrum: &BogoliubovSpectrum, n: usize, t_grid: &[f64]) -> Result<AnalyticVarianceSeries> {
    if spectrum.xi2[0] >= 0.0 {
        return Err(Error::Internal(format!(
            "k = 0 mode is stable (xi^2 = {})",
            spectrum.xi2[0]
        )));
    }
    let xi = spectrum.xi_abs(0);
    let s = spectrum.rate_scale();
    let eps = s * spectrum.epsilon[0];
    let om = s * spectrum.omega[0].norm();
    let half_n = n as f64 / 2.0;
    let mut out = AnalyticVarianceSeries {
        t: t_grid.to_vec(),
        a0: Vec::new(),
        b0: Vec::new(),
        var_minus: Vec::new(),
        var_plus: Vec::new(),
        populations: Vec::new(),
    };
    for &t in t_grid {
        let (sh, ch) = ((xi * t).sinh(), (xi * t).cosh());
        let a = (sh * sh * eps * eps / (xi * xi) + ch * ch).sqrt();
        let b = sh * om / xi;
        out.a0.push(a);
        out.b0.push(b);
        out.var_minus.push(half_n * (a + b).powi(-2));
        out.var_plus.push(half_n * (a + b).powi(2));
    }
    for k in classify_modes(spectrum).unstable {
        out.populations
            .push((k, t_grid.iter().map(|&t| mode_population(spectrum, k, t)).collect()));
    }
    Ok(out)
}

/// `<a_k^+ a_k>(t)`: `sinh^2(|xi| t) |Omega|^2/|xi|^2` for unstable modes, with `sin^2` for stable ones.
pub fn mode_population(spectrum: &BogoliubovSpectrum, k: usize, t: f64) -> f64 {
    let xi2 = spectrum.xi2[k];
    let om2 = spectrum.omega[k].norm_sqr();
    if om2 == 0.0 {
        return 0.0;
    }
    if xi2 == 0.0 {
        // marginal mode: limit of both branches
        let w = spectrum.rate_scale() * om2.sqrt() * t;
        return w * w;
    }
    let x = spectrum.xi_abs(k) * t;
    let f = if xi2 < 0.0 { x.sinh() } else { x.sin() };
    f * f * om2 / xi2.abs()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteModeEstimate {
    /// `N^{p (1 - alpha a_Z / L)}`.
    pub n1: f64,
    pub exponent: f64,
    /// `p ln N / Gamma_0`.
    pub t_min: f64,
}

/// Occupation of the first finite-momentum mode at the squeezing time, using a growth
/// rate linear in `|k|`: `Gamma_1 = Gamma_0 (1 - alpha a_Z / L)`.
pub fn finite_mode_estimate(p: f64, alpha: f64, a_z: f64, l: f64, n: f64, gamma0: f64) -> FiniteModeEstimate {
    let exponent = p * (1.0 - alpha * a_z / l);
    FiniteModeEstimate {
        n1: n.powf(exponent),
        exponent,
        t_min: p * n.ln() / gamma0,
    }
}
