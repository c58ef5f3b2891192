//! Local-field evaluation for the classical spin equations of motion.
//!
//! States are stored component-major: component `c` of global site `g` lives at
//! `c * 2N + g`, with layer A occupying `0..N` and layer B `N..2N`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Boundary, CouplingSet};

/// Which local-field algorithm to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelChoice {
    /// Dense matrix for small systems, FFT convolution above [`AUTO_CONVOLUTION_MIN_SITES`].
    #[default]
    Auto,
    Dense,
    /// Pairwise sums with couplings looked up from the displacement table.
    Lookup,
    Convolution,
}

/// Per-layer site count from which `Auto` switches to FFT convolution.
pub const AUTO_CONVOLUTION_MIN_SITES: usize = 64;

enum Mode {
    Dense,
    Lookup,
    Convolution(Box<Convolution>),
}

/// Local-field evaluator bound to one coupling set.
pub struct ForceKernel<'a> {
    couplings: &'a CouplingSet,
    n: usize,
    mode: Mode,
}

/// Scratch space for one thread's field evaluations.
pub struct FieldWorkspace {
    bufs: Vec<Vec<Complex64>>,
    tmp: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl<'a> ForceKernel<'a> {
    pub fn new(couplings: &'a CouplingSet, choice: KernelChoice) -> Result<Self> {
        let n = couplings.per_layer();
        let mode = match choice {
            KernelChoice::Dense if couplings.is_dense() => Mode::Dense,
            KernelChoice::Dense => {
                return Err(Error::InvalidConfig(format!(
                    "dense force kernel requested but {} sites exceed the dense storage limit",
                    2 * n
                )))
            }
            KernelChoice::Lookup => Mode::Lookup,
            KernelChoice::Convolution => Mode::Convolution(Box::new(Convolution::new(couplings))),
            KernelChoice::Auto => {
                if n >= AUTO_CONVOLUTION_MIN_SITES {
                    Mode::Convolution(Box::new(Convolution::new(couplings)))
                } else if couplings.is_dense() {
                    Mode::Dense
                } else {
                    Mode::Lookup
                }
            }
        };
        Ok(ForceKernel { couplings, n, mode })
    }

    pub fn name(&self) -> &'static str {
        match self.mode {
            Mode::Dense => "dense",
            Mode::Lookup => "lookup",
            Mode::Convolution(_) => "convolution",
        }
    }

    pub fn per_layer(&self) -> usize {
        self.n
    }

    pub fn workspace(&self) -> FieldWorkspace {
        match &self.mode {
            Mode::Convolution(c) => {
                let len = c.p[0] * c.p[1];
                FieldWorkspace {
                    bufs: vec![vec![Complex64::default(); len]; 6 * c.nb],
                    tmp: vec![Complex64::default(); len],
                    scratch: vec![Complex64::default(); c.scratch_len],
                }
            }
            _ => FieldWorkspace {
                bufs: Vec::new(),
                tmp: Vec::new(),
                scratch: Vec::new(),
            },
        }
    }

    /// Local fields `B_i` for every site, same layout as the state.
    pub fn fields(&self, y: &[f64], b: &mut [f64], ws: &mut FieldWorkspace) {
        debug_assert_eq!(y.len(), 6 * self.n);
        match &self.mode {
            Mode::Dense => self.dense_fields(y, b),
            Mode::Lookup => self.lookup_fields(y, b),
            Mode::Convolution(c) => c.fields(y, b, ws),
        }
    }

    /// Right-hand side `ds_i/dt = B_i x s_i`. `b` receives the fields as a by-product.
    pub fn rhs(&self, y: &[f64], dy: &mut [f64], b: &mut [f64], ws: &mut FieldWorkspace) {
        self.fields(y, b, ws);
        let m = 2 * self.n;
        let (sx, rest) = y.split_at(m);
        let (sy, sz) = rest.split_at(m);
        let (bx, rest) = b.split_at(m);
        let (by, bz) = rest.split_at(m);
        let (dx, rest) = dy.split_at_mut(m);
        let (dyy, dz) = rest.split_at_mut(m);
        for i in 0..m {
            dx[i] = by[i] * sz[i] - bz[i] * sy[i];
            dyy[i] = bz[i] * sx[i] - bx[i] * sz[i];
            dz[i] = bx[i] * sy[i] - by[i] * sx[i];
        }
    }

    /// Classical energy `1/2 sum_i s_i . B_i` given precomputed fields.
    pub fn energy_from_fields(&self, y: &[f64], b: &[f64]) -> f64 {
        0.5 * y.iter().zip(b).map(|(s, f)| s * f).sum::<f64>()
    }

    fn dense_fields(&self, y: &[f64], b: &mut [f64]) {
        let n = self.n;
        let m = 2 * n;
        let intra = self.couplings.dense_intra().expect("dense storage");
        let inter = self.couplings.dense_inter().expect("dense storage");
        let xa = &y[0..n];
        let xb = &y[n..m];
        let ya = &y[m..m + n];
        let yb = &y[m + n..2 * m];
        let za = &y[2 * m..2 * m + n];
        let zb = &y[2 * m + n..3 * m];
        for i in 0..n {
            let r = &intra[i * n..(i + 1) * n];
            let q = &inter[i * n..(i + 1) * n];
            let mut acc = [0.0f64; 10];
            for j in 0..n {
                let (v, w) = (r[j], q[j]);
                acc[0] += v * xa[j];
                acc[1] += v * ya[j];
                acc[2] += v * za[j];
                acc[3] += v * xb[j];
                acc[4] += v * yb[j];
                acc[5] += v * zb[j];
                acc[6] += w * xb[j];
                acc[7] += w * yb[j];
                acc[8] += w * xa[j];
                acc[9] += w * ya[j];
            }
            b[i] = acc[0] + acc[6];
            b[m + i] = acc[1] + acc[7];
            b[2 * m + i] = acc[2];
            b[n + i] = acc[3] + acc[8];
            b[m + n + i] = acc[4] + acc[9];
            b[2 * m + n + i] = acc[5];
        }
    }

    fn lookup_fields(&self, y: &[f64], b: &mut [f64]) {
        let m = 2 * self.n;
        b.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..m {
            for j in (i + 1)..m {
                let v = self.couplings.get(i, j);
                if v == 0.0 {
                    continue;
                }
                b[i] += v * y[j];
                b[j] += v * y[i];
                b[m + i] += v * y[m + j];
                b[m + j] += v * y[m + i];
                let same_layer = (i < self.n) == (j < self.n);
                if same_layer {
                    b[2 * m + i] += v * y[2 * m + j];
                    b[2 * m + j] += v * y[2 * m + i];
                }
            }
        }
    }
}

/// FFT convolution of spin components against the displacement kernel.
///
/// Each sublattice lives on a `p[0] x p[1]` grid (zero-padded to avoid wrap-around for
/// open boundaries). `x + i y` of each layer and `z_A + i z_B` are packed into complex
/// signals so that one transform carries two real fields.
struct Convolution {
    l: usize,
    d: usize,
    nb: usize,
    n: usize,
    p: [usize; 2],
    fwd: [Arc<dyn Fft<f64>>; 2],
    inv: [Arc<dyn Fft<f64>>; 2],
    scratch_len: usize,
    /// Transformed kernels, indexed `[s * nb + t]`, in transposed frequency layout.
    intra_hat: Vec<Vec<Complex64>>,
    inter_hat: Vec<Vec<Complex64>>,
}

impl Convolution {
    fn new(couplings: &CouplingSet) -> Self {
        let kernel = couplings.kernel();
        let l = kernel.l;
        let d = kernel.d;
        let nb = kernel.basis;
        let span = match kernel.boundary {
            Boundary::Open => 2 * l,
            Boundary::Periodic => l,
        };
        let p = if d == 1 { [span, 1] } else { [span, span] };
        let mut planner = FftPlanner::<f64>::new();
        let fwd = [planner.plan_fft_forward(p[0]), planner.plan_fft_forward(p[1])];
        let inv = [planner.plan_fft_inverse(p[0]), planner.plan_fft_inverse(p[1])];
        let scratch_len = fwd
            .iter()
            .chain(inv.iter())
            .map(|f| f.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);

        let mut conv = Convolution {
            l,
            d,
            nb,
            n: couplings.per_layer(),
            p,
            fwd,
            inv,
            scratch_len,
            intra_hat: Vec::new(),
            inter_hat: Vec::new(),
        };
        let len = p[0] * p[1];
        let mut tmp = vec![Complex64::default(); len];
        let mut scratch = vec![Complex64::default(); scratch_len];
        let range = |axis: usize| -> Vec<isize> {
            if axis == 1 && d == 1 {
                return vec![0];
            }
            match kernel.boundary {
                Boundary::Open => (-(l as isize - 1)..=(l as isize - 1)).collect(),
                Boundary::Periodic => (0..l as isize).collect(),
            }
        };
        let (r1, r2) = (range(0), range(1));
        for s in 0..nb {
            for t in 0..nb {
                let mut a = vec![Complex64::default(); len];
                let mut e = vec![Complex64::default(); len];
                for &d2 in &r2 {
                    for &d1 in &r1 {
                        let k1 = d1.rem_euclid(p[0] as isize) as usize;
                        let k2 = d2.rem_euclid(p[1] as isize) as usize;
                        a[k2 * p[0] + k1].re = kernel.intra(s, t, [d1, d2]);
                        e[k2 * p[0] + k1].re = kernel.inter(s, t, [d1, d2]);
                    }
                }
                conv.forward(&mut a, &mut tmp, &mut scratch);
                conv.forward(&mut e, &mut tmp, &mut scratch);
                let norm = 1.0 / len as f64;
                a.iter_mut().for_each(|c| *c *= norm);
                e.iter_mut().for_each(|c| *c *= norm);
                conv.intra_hat.push(a);
                conv.inter_hat.push(e);
            }
        }
        conv
    }

    fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
        for r in 0..rows {
            for c in 0..cols {
                dst[c * rows + r] = src[r * cols + c];
            }
        }
    }

    /// Grid layout `[k2][k1]` in, frequency layout `[k1][k2]` out.
    fn forward(&self, buf: &mut [Complex64], tmp: &mut [Complex64], scratch: &mut [Complex64]) {
        self.fwd[0].process_with_scratch(buf, scratch);
        if self.p[1] > 1 {
            Self::transpose(buf, tmp, self.p[1], self.p[0]);
            self.fwd[1].process_with_scratch(tmp, scratch);
            buf.copy_from_slice(tmp);
        }
    }

    fn inverse(&self, buf: &mut [Complex64], tmp: &mut [Complex64], scratch: &mut [Complex64]) {
        if self.p[1] > 1 {
            self.inv[1].process_with_scratch(buf, scratch);
            Self::transpose(buf, tmp, self.p[0], self.p[1]);
            buf.copy_from_slice(tmp);
        }
        self.inv[0].process_with_scratch(buf, scratch);
    }

    fn site(&self, n1: usize, n2: usize, s: usize) -> usize {
        (n2 * self.l + n1) * self.nb + s
    }

    fn fields(&self, y: &[f64], b: &mut [f64], ws: &mut FieldWorkspace) {
        let nb = self.nb;
        let n = self.n;
        let m = 2 * n;
        let p = self.p;
        let l2 = if self.d == 1 { 1 } else { self.l };
        let FieldWorkspace { bufs, tmp, scratch } = ws;
        let (inputs, outputs) = bufs.split_at_mut(3 * nb);

        // inputs: [A(x+iy) per s][B(x+iy) per s][zA + i zB per s]
        for buf in inputs.iter_mut() {
            buf.iter_mut().for_each(|c| *c = Complex64::default());
        }
        for s in 0..nb {
            for n2 in 0..l2 {
                for n1 in 0..self.l {
                    let g = self.site(n1, n2, s);
                    let k = n2 * p[0] + n1;
                    inputs[s][k] = Complex64::new(y[g], y[m + g]);
                    inputs[nb + s][k] = Complex64::new(y[n + g], y[m + n + g]);
                    inputs[2 * nb + s][k] = Complex64::new(y[2 * m + g], y[2 * m + n + g]);
                }
            }
        }
        for buf in inputs.iter_mut() {
            self.forward(buf, tmp, scratch);
        }

        let len = p[0] * p[1];
        for s in 0..nb {
            let (ga, rest) = outputs.split_at_mut(nb);
            let (gb, gz) = rest.split_at_mut(nb);
            let (ga, gb, gz) = (&mut ga[s], &mut gb[s], &mut gz[s]);
            for k in 0..len {
                let mut a = Complex64::default();
                let mut bb = Complex64::default();
                let mut z = Complex64::default();
                for t in 0..nb {
                    let ki = self.intra_hat[s * nb + t][k];
                    let ke = self.inter_hat[s * nb + t][k];
                    let fa = inputs[t][k];
                    let fb = inputs[nb + t][k];
                    a += ki * fa + ke * fb;
                    bb += ki * fb + ke * fa;
                    z += ki * inputs[2 * nb + t][k];
                }
                ga[k] = a;
                gb[k] = bb;
                gz[k] = z;
            }
        }
        for buf in outputs.iter_mut() {
            self.inverse(buf, tmp, scratch);
        }
        for s in 0..nb {
            for n2 in 0..l2 {
                for n1 in 0..self.l {
                    let g = self.site(n1, n2, s);
                    let k = n2 * p[0] + n1;
                    let a = outputs[s][k];
                    let bb = outputs[nb + s][k];
                    let z = outputs[2 * nb + s][k];
                    b[g] = a.re;
                    b[m + g] = a.im;
                    b[n + g] = bb.re;
                    b[m + n + g] = bb.im;
                    b[2 * m + g] = z.re;
                    b[2 * m + n + g] = z.im;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, coupling_matrix, Geometry, LatticeSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..6 * n).map(|_| rng.random_range(-0.5..0.5)).collect()
    }

    fn brute_fields(c: &CouplingSet, y: &[f64]) -> Vec<f64> {
        let n = c.per_layer();
        let m = 2 * n;
        let mut b = vec![0.0; 3 * m];
        for i in 0..m {
            for j in 0..m {
                if i == j {
                    continue;
                }
                let v = c.get(i, j);
                b[i] += v * y[j];
                b[m + i] += v * y[m + j];
                if (i < n) == (j < n) {
                    b[2 * m + i] += v * y[2 * m + j];
                }
            }
        }
        b
    }

    #[test]
    fn all_kernels_agree_with_brute_force() {
        let cases = [
            LatticeSpec::new(Geometry::ChainLadder, 7, 0.8),
            LatticeSpec::new(Geometry::ChainLadder, 6, 1.3).with_boundary(Boundary::Periodic),
            LatticeSpec::new(Geometry::SquareBilayer, 4, 0.5),
            LatticeSpec::new(Geometry::SquareBilayer, 5, 2.0).with_boundary(Boundary::Periodic),
            LatticeSpec::new(Geometry::TriangularBilayer, 4, 1.0),
            LatticeSpec::new(Geometry::TriangularBilayer, 4, 1.0).with_boundary(Boundary::Periodic),
            LatticeSpec::new(Geometry::HexagonalBilayer, 3, 0.7),
            LatticeSpec::new(Geometry::HexagonalBilayer, 4, 0.7).with_boundary(Boundary::Periodic),
        ];
        for (ci, spec) in cases.iter().enumerate() {
            let pos = build_lattice(spec).unwrap();
            let c = coupling_matrix(&pos, 2.5, spec.boundary).unwrap();
            let y = random_state(c.per_layer(), ci as u64);
            let want = brute_fields(&c, &y);
            for choice in [KernelChoice::Dense, KernelChoice::Lookup, KernelChoice::Convolution] {
                let k = ForceKernel::new(&c, choice).unwrap();
                let mut ws = k.workspace();
                let mut b = vec![0.0; y.len()];
                k.fields(&y, &mut b, &mut ws);
                for (g, w) in b.iter().zip(&want) {
                    assert!((g - w).abs() < 1e-12, "{:?} {:?}: {g} vs {w}", spec, choice);
                }
            }
        }
    }

    #[test]
    fn rhs_conserves_spin_length_pointwise() {
        let pos = build_lattice(&LatticeSpec::new(Geometry::ChainLadder, 5, 1.0)).unwrap();
        let c = coupling_matrix(&pos, 3.0, Boundary::Open).unwrap();
        let k = ForceKernel::new(&c, KernelChoice::Dense).unwrap();
        let y = random_state(5, 9);
        let mut dy = vec![0.0; y.len()];
        let mut b = vec![0.0; y.len()];
        k.rhs(&y, &mut dy, &mut b, &mut k.workspace());
        let m = 10;
        for i in 0..m {
            let dot = y[i] * dy[i] + y[m + i] * dy[m + i] + y[2 * m + i] * dy[2 * m + i];
            assert!(dot.abs() < 1e-14);
        }
    }
}
