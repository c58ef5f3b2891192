//! Bilayer and ladder geometries with power-law couplings.
//!
//! Every supported geometry is a Bravais lattice (with a one- or two-site
//! basis) tiled `L` cells along each in-plane axis. Layer A sits at `z = 0`,
//! layer B is an identical copy at `z = a_z`. Couplings are `|r_i - r_j|^-alpha`
//! with no cutoff; under periodic boundaries the minimum-image distance is used.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Above this many total sites the coupling set does not keep dense matrices.
pub const DEFAULT_DENSE_MAX_SITES: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Geometry {
    ChainLadder,
    SquareBilayer,
    TriangularBilayer,
    HexagonalBilayer,
}

impl Geometry {
    pub fn dimension(self) -> usize {
        match self {
            Geometry::ChainLadder => 1,
            _ => 2,
        }
    }

    /// Primitive cell vectors (in-plane). The second vector is unused in 1d.
    pub fn cell_vectors(self) -> [[f64; 2]; 2] {
        let s3 = 3f64.sqrt();
        match self {
            Geometry::ChainLadder | Geometry::SquareBilayer => [[1.0, 0.0], [0.0, 1.0]],
            Geometry::TriangularBilayer => [[1.0, 0.0], [0.5, 0.5 * s3]],
            Geometry::HexagonalBilayer => [[s3, 0.0], [0.5 * s3, 1.5]],
        }
    }

    /// Basis offsets within one cell; nearest-neighbour spacing is 1 for all geometries.
    pub fn basis(self) -> &'static [[f64; 2]] {
        match self {
            Geometry::HexagonalBilayer => &[[0.0, 0.0], [0.0, 1.0]],
            _ => &[[0.0, 0.0]],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Geometry::ChainLadder => "chain-ladder",
            Geometry::SquareBilayer => "square-bilayer",
            Geometry::TriangularBilayer => "triangular-bilayer",
            Geometry::HexagonalBilayer => "hexagonal-bilayer",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Layer {
    A,
    B,
}

/// Geometry, linear size and layer separation of a bilayer lattice.
///
/// `l` counts unit cells along each in-plane axis; the in-layer spacing is 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub geometry: Geometry,
    pub l: usize,
    pub d: usize,
    pub a_z: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

impl LatticeSpec {
    pub fn new(geometry: Geometry, l: usize, a_z: f64) -> Self {
        LatticeSpec {
            geometry,
            l,
            d: geometry.dimension(),
            a_z,
            boundary: Boundary::Open,
        }
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.l < 2 {
            return Err(Error::InvalidLattice(format!("L = {} < 2", self.l)));
        }
        if !(self.a_z > 0.0) || !self.a_z.is_finite() {
            return Err(Error::InvalidLattice(format!("a_z = {} must be > 0", self.a_z)));
        }
        if self.d != self.geometry.dimension() {
            return Err(Error::InvalidLattice(format!(
                "{} is {}-dimensional, spec says d = {}",
                self.geometry.name(),
                self.geometry.dimension(),
                self.d
            )));
        }
        Ok(())
    }

    /// Number of unit cells per layer, `L^d`.
    pub fn cells(&self) -> usize {
        self.l.pow(self.d as u32)
    }

    /// Spins per layer `N`.
    pub fn sites_per_layer(&self) -> usize {
        self.cells() * self.geometry.basis().len()
    }

    pub fn aspect_ratio(&self) -> f64 {
        self.a_z / self.l as f64
    }
}

/// Site coordinates of both layers. Layer A occupies indices `0..N`, layer B `N..2N`,
/// with site `i + N` directly above site `i`.
#[derive(Clone, Debug)]
pub struct SitePositions {
    pub spec: LatticeSpec,
    pub coords: Vec<[f64; 3]>,
    cell: Vec<[usize; 2]>,
    sublattice: Vec<usize>,
}

impl SitePositions {
    pub fn per_layer(&self) -> usize {
        self.cell.len()
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn layer(&self, i: usize) -> Layer {
        if i < self.per_layer() {
            Layer::A
        } else {
            Layer::B
        }
    }

    /// Cell index and sublattice of the in-layer site `i % N`.
    pub fn cell_of(&self, i: usize) -> ([usize; 2], usize) {
        let k = i % self.per_layer();
        (self.cell[k], self.sublattice[k])
    }

    /// Separation vector `r_j - r_i`, using the minimum image in-plane when periodic.
    pub fn displacement(&self, i: usize, j: usize, boundary: Boundary) -> [f64; 3] {
        let (a, b) = (self.coords[i], self.coords[j]);
        let planar = [b[0] - a[0], b[1] - a[1]];
        let planar = match boundary {
            Boundary::Open => planar,
            Boundary::Periodic => minimum_image(&self.spec, planar),
        };
        [planar[0], planar[1], b[2] - a[2]]
    }

    pub fn distance(&self, i: usize, j: usize, boundary: Boundary) -> f64 {
        let r = self.displacement(i, j, boundary);
        (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt()
    }
}

fn minimum_image(spec: &LatticeSpec, v: [f64; 2]) -> [f64; 2] {
    let [a1, a2] = spec.geometry.cell_vectors();
    let l = spec.l as f64;
    let range: &[f64] = &[-2.0, -1.0, 0.0, 1.0, 2.0];
    let second: &[f64] = if spec.d == 1 { &[0.0] } else { range };
    let mut best = v;
    let mut best_norm = v[0] * v[0] + v[1] * v[1];
    for &m1 in range {
        for &m2 in second {
            let w = [
                v[0] + l * (m1 * a1[0] + m2 * a2[0]),
                v[1] + l * (m1 * a1[1] + m2 * a2[1]),
            ];
            let n = w[0] * w[0] + w[1] * w[1];
            if n < best_norm - 1e-12 {
                best = w;
                best_norm = n;
            }
        }
    }
    best
}

/// Build the site coordinates of a bilayer lattice.
pub fn build_lattice(spec: &LatticeSpec) -> Result<SitePositions> {
    spec.validate()?;
    let [a1, a2] = spec.geometry.cell_vectors();
    let basis = spec.geometry.basis();
    let l = spec.l;
    let (n1_max, n2_max) = if spec.d == 1 { (l, 1) } else { (l, l) };

    let n = spec.sites_per_layer();
    let mut cell = Vec::with_capacity(n);
    let mut sublattice = Vec::with_capacity(n);
    let mut planar = Vec::with_capacity(n);
    for n2 in 0..n2_max {
        for n1 in 0..n1_max {
            for (s, b) in basis.iter().enumerate() {
                let x = n1 as f64 * a1[0] + n2 as f64 * a2[0] + b[0];
                let y = n1 as f64 * a1[1] + n2 as f64 * a2[1] + b[1];
                planar.push([x, y]);
                cell.push([n1, n2]);
                sublattice.push(s);
            }
        }
    }
    let mut coords = Vec::with_capacity(2 * n);
    coords.extend(planar.iter().map(|p| [p[0], p[1], 0.0]));
    coords.extend(planar.iter().map(|p| [p[0], p[1], spec.a_z]));
    Ok(SitePositions {
        spec: spec.clone(),
        coords,
        cell,
        sublattice,
    })
}

/// Couplings as a function of cell displacement, in convolution form:
/// `K[s][t](dn)` couples site `(n, s)` to site `(n - dn, t)`.
///
/// Open boundaries store `dn` per axis in `-(L-1)..=L-1`; periodic boundaries store
/// `dn` wrapped into `0..L` and use minimum-image distances.
#[derive(Clone, Debug)]
pub struct DisplacementKernel {
    pub boundary: Boundary,
    pub l: usize,
    pub d: usize,
    pub basis: usize,
    /// Extent of the stored displacement grid per axis (second axis is 1 in 1d).
    pub extent: [usize; 2],
    intra: Vec<f64>,
    inter: Vec<f64>,
}

impl DisplacementKernel {
    pub fn build(positions: &SitePositions, alpha: f64, boundary: Boundary) -> Result<Self> {
        let spec = &positions.spec;
        let l = spec.l;
        let d = spec.d;
        let nb = spec.geometry.basis().len();
        let [a1, a2] = spec.geometry.cell_vectors();
        let basis = spec.geometry.basis();
        let span = match boundary {
            Boundary::Open => 2 * l - 1,
            Boundary::Periodic => l,
        };
        let extent = if d == 1 { [span, 1] } else { [span, span] };
        let cells = extent[0] * extent[1];
        let mut intra = vec![0.0; nb * nb * cells];
        let mut inter = vec![0.0; nb * nb * cells];
        let az2 = spec.a_z * spec.a_z;

        for s in 0..nb {
            for t in 0..nb {
                for k2 in 0..extent[1] {
                    for k1 in 0..extent[0] {
                        let (d1, d2) = match boundary {
                            Boundary::Open => (
                                k1 as f64 - (l as f64 - 1.0),
                                if d == 1 { 0.0 } else { k2 as f64 - (l as f64 - 1.0) },
                            ),
                            Boundary::Periodic => (k1 as f64, k2 as f64),
                        };
                        let mut v = [
                            d1 * a1[0] + d2 * a2[0] + basis[s][0] - basis[t][0],
                            d1 * a1[1] + d2 * a2[1] + basis[s][1] - basis[t][1],
                        ];
                        if boundary == Boundary::Periodic {
                            v = minimum_image(spec, v);
                        }
                        let rho2 = v[0] * v[0] + v[1] * v[1];
                        let idx = (s * nb + t) * cells + k2 * extent[0] + k1;
                        let is_self = s == t && rho2 < 1e-18;
                        if rho2 < 1e-18 && !is_self {
                            return Err(Error::CoincidentSites(s, t));
                        }
                        if !is_self {
                            intra[idx] = power_law(rho2, alpha);
                        }
                        inter[idx] = power_law(rho2 + az2, alpha);
                    }
                }
            }
        }
        Ok(DisplacementKernel {
            boundary,
            l,
            d,
            basis: nb,
            extent,
            intra,
            inter,
        })
    }

    fn index(&self, s: usize, t: usize, dn: [isize; 2]) -> usize {
        let cells = self.extent[0] * self.extent[1];
        let l = self.l as isize;
        let k = |x: isize| -> usize {
            match self.boundary {
                Boundary::Open => (x + l - 1) as usize,
                Boundary::Periodic => x.rem_euclid(l) as usize,
            }
        };
        let k1 = k(dn[0]);
        let k2 = if self.d == 1 { 0 } else { k(dn[1]) };
        (s * self.basis + t) * cells + k2 * self.extent[0] + k1
    }

    /// Intra-layer coupling between `(n, s)` and `(n - dn, t)`.
    pub fn intra(&self, s: usize, t: usize, dn: [isize; 2]) -> f64 {
        self.intra[self.index(s, t, dn)]
    }

    pub fn inter(&self, s: usize, t: usize, dn: [isize; 2]) -> f64 {
        self.inter[self.index(s, t, dn)]
    }

    /// Iterate stored displacements as `(dn, multiplicity)` where multiplicity counts
    /// the ordered cell pairs `(n, m)` with `n - m = dn` (periodic: wrapped).
    fn displacements(&self) -> Vec<([isize; 2], f64)> {
        let l = self.l as isize;
        let mut out = Vec::with_capacity(self.extent[0] * self.extent[1]);
        for k2 in 0..self.extent[1] as isize {
            for k1 in 0..self.extent[0] as isize {
                let (dn, mult) = match self.boundary {
                    Boundary::Open => {
                        let d1 = k1 - (l - 1);
                        let d2 = if self.d == 1 { 0 } else { k2 - (l - 1) };
                        let m2 = if self.d == 1 { 1 } else { l - d2.abs() };
                        ([d1, d2], ((l - d1.abs()) * m2) as f64)
                    }
                    Boundary::Periodic => ([k1, k2], (l as f64).powi(self.d as i32)),
                };
                out.push((dn, mult));
            }
        }
        out
    }

    fn scale(&mut self, factor: f64) {
        self.intra.iter_mut().for_each(|v| *v *= factor);
        self.inter.iter_mut().for_each(|v| *v *= factor);
    }

    /// `(1/N^2) sum_{i in A, j in B} V_ij`.
    pub fn average_interlayer(&self) -> f64 {
        let mut total = 0.0;
        for (dn, mult) in self.displacements() {
            for s in 0..self.basis {
                for t in 0..self.basis {
                    total += mult * self.inter(s, t, dn);
                }
            }
        }
        let n = (self.basis * self.l.pow(self.d as u32)) as f64;
        total / (n * n)
    }
}

fn power_law(r2: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        1.0
    } else {
        r2.powf(-0.5 * alpha)
    }
}

#[derive(Clone, Debug)]
enum Storage {
    Dense { intra: Vec<f64>, inter: Vec<f64> },
    Kernel,
}

/// Power-law couplings of a bilayer. Layers are congruent, so one intra-layer
/// matrix serves both layers and the interlayer matrix is symmetric.
#[derive(Clone, Debug)]
pub struct CouplingSet {
    pub alpha: f64,
    pub boundary: Boundary,
    pub v_avg: f64,
    positions: SitePositions,
    kernel: DisplacementKernel,
    storage: Storage,
}

impl CouplingSet {
    /// Copy with every coupling multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> CouplingSet {
        let mut out = self.clone();
        out.kernel.scale(factor);
        out.v_avg *= factor;
        if let Storage::Dense { intra, inter } = &mut out.storage {
            intra.iter_mut().for_each(|v| *v *= factor);
            inter.iter_mut().for_each(|v| *v *= factor);
        }
        out
    }

    pub fn per_layer(&self) -> usize {
        self.positions.per_layer()
    }

    pub fn total_sites(&self) -> usize {
        2 * self.per_layer()
    }

    pub fn positions(&self) -> &SitePositions {
        &self.positions
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.positions.spec
    }

    pub fn kernel(&self) -> &DisplacementKernel {
        &self.kernel
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense { .. })
    }

    fn from_kernel(&self, i: usize, j: usize, inter: bool) -> f64 {
        let (ci, si) = self.positions.cell_of(i);
        let (cj, sj) = self.positions.cell_of(j);
        let dn = [ci[0] as isize - cj[0] as isize, ci[1] as isize - cj[1] as isize];
        if inter {
            self.kernel.inter(si, sj, dn)
        } else {
            self.kernel.intra(si, sj, dn)
        }
    }

    /// Intra-layer coupling between in-layer sites `i`, `j` (`0..N`); zero on the diagonal.
    pub fn intra(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense { intra, .. } => intra[i * self.per_layer() + j],
            Storage::Kernel => self.from_kernel(i, j, false),
        }
    }

    /// Coupling between site `i` of layer A and site `j` of layer B (in-layer indices).
    pub fn inter(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense { inter, .. } => inter[i * self.per_layer() + j],
            Storage::Kernel => self.from_kernel(i, j, true),
        }
    }

    /// Coupling between global sites `i`, `j` in `0..2N`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let n = self.per_layer();
        match (i < n, j < n) {
            (true, true) => self.intra(i, j),
            (false, false) => self.intra(i - n, j - n),
            (true, false) => self.inter(i, j - n),
            (false, true) => self.inter(j, i - n),
        }
    }

    pub(crate) fn dense_intra(&self) -> Option<&[f64]> {
        match &self.storage {
            Storage::Dense { intra, .. } => Some(intra),
            Storage::Kernel => None,
        }
    }

    pub(crate) fn dense_inter(&self) -> Option<&[f64]> {
        match &self.storage {
            Storage::Dense { inter, .. } => Some(inter),
            Storage::Kernel => None,
        }
    }
}

/// Power-law coupling set with the default dense-storage limit.
pub fn coupling_matrix(positions: &SitePositions, alpha: f64, boundary: Boundary) -> Result<CouplingSet> {
    coupling_matrix_with_limit(positions, alpha, boundary, DEFAULT_DENSE_MAX_SITES)
}

pub fn coupling_matrix_with_limit(
    positions: &SitePositions,
    alpha: f64,
    boundary: Boundary,
    dense_max_sites: usize,
) -> Result<CouplingSet> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidLattice(format!("alpha = {alpha} must be >= 0")));
    }
    let kernel = DisplacementKernel::build(positions, alpha, boundary)?;
    let v_avg = kernel.average_interlayer();
    let mut set = CouplingSet {
        alpha,
        boundary,
        v_avg,
        positions: positions.clone(),
        kernel,
        storage: Storage::Kernel,
    };
    let n = positions.per_layer();
    if 2 * n <= dense_max_sites {
        let mut intra = vec![0.0; n * n];
        let mut inter = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                intra[i * n + j] = set.from_kernel(i, j, false);
                inter[i * n + j] = set.from_kernel(i, j, true);
            }
        }
        set.storage = Storage::Dense { intra, inter };
    }
    Ok(set)
}

pub fn average_interlayer_coupling(couplings: &CouplingSet) -> f64 {
    couplings.v_avg
}

/// Plain-text dump of site positions with the average interlayer coupling in a comment.
pub fn positions_table(positions: &SitePositions, couplings: Option<&CouplingSet>) -> String {
    let mut out = String::new();
    if let Some(c) = couplings {
        let _ = writeln!(
            out,
            "# alpha={} boundary={:?} v_avg={:.17e}",
            c.alpha, c.boundary, c.v_avg
        );
    }
    out.push_str("index layer x y z\n");
    for (i, r) in positions.coords.iter().enumerate() {
        let layer = match positions.layer(i) {
            Layer::A => "A",
            Layer::B => "B",
        };
        let _ = writeln!(out, "{i} {layer} {:.12} {:.12} {:.12}", r[0], r[1], r[2]);
    }
    out
}
