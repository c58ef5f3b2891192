//! Full Schrodinger evolution of the bilayer Hamiltonian for a handful of spins.
//!
//! Basis states are bit strings over the global site index (layer A then B); a set bit
//! means spin up.

use num_complex::Complex64;

use super::krylov::{dot, Krylov, KrylovOptions, SparseSymmetric};
use crate::dtwa::ObservableSeries;
use crate::error::{Error, Result};
use crate::lattice::{CouplingSet, SitePositions};

pub const MAX_SPINS: usize = 12;

/// `H = sum_{i<j same layer} V s_i . s_j + sum_{i in A, j in B} V (s^x s^x + s^y s^y)`.
pub fn small_system_hamiltonian(couplings: &CouplingSet) -> Result<SparseSymmetric> {
    let m = couplings.total_sites();
    if m > MAX_SPINS {
        return Err(Error::TooManySpins(m));
    }
    let n = couplings.per_layer();
    let dim = 1usize << m;
    let mut rows = vec![Vec::new(); dim];
    for (state, row) in rows.iter_mut().enumerate() {
        let mut diag = 0.0;
        for i in 0..m {
            for j in (i + 1)..m {
                let v = couplings.get(i, j);
                if v == 0.0 {
                    continue;
                }
                let bi = (state >> i) & 1;
                let bj = (state >> j) & 1;
                if (i < n) == (j < n) {
                    diag += v * if bi == bj { 0.25 } else { -0.25 };
                }
                if bi != bj {
                    row.push((state ^ (1 << i) ^ (1 << j), 0.5 * v));
                }
            }
        }
        if diag != 0.0 {
            row.push((state, diag));
        }
    }
    Ok(SparseSymmetric::from_rows(rows))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Component {
    X,
    Y,
    Z,
}

/// `phi = sum_{i in sites} s_i^c psi`.
fn apply_sum(sites: std::ops::Range<usize>, c: Component, psi: &[Complex64], phi: &mut [Complex64]) {
    phi.iter_mut().for_each(|p| *p = Complex64::default());
    for (state, &amp) in psi.iter().enumerate() {
        if amp == Complex64::default() {
            continue;
        }
        for i in sites.clone() {
            let up = (state >> i) & 1 == 1;
            match c {
                Component::Z => phi[state] += amp * if up { 0.5 } else { -0.5 },
                Component::X => phi[state ^ (1 << i)] += amp * 0.5,
                // s^y|up> = (i/2)|down>, s^y|down> = (-i/2)|up>
                Component::Y => phi[state ^ (1 << i)] += amp * Complex64::new(0.0, if up { 0.5 } else { -0.5 }),
            }
        }
    }
}

/// `psi` for the polarized product state: A up, B down.
fn polarized_state(n: usize) -> Vec<Complex64> {
    let mut psi = vec![Complex64::default(); 1 << (2 * n)];
    psi[(1 << n) - 1] = Complex64::new(1.0, 0.0);
    psi
}

struct Moments {
    var_minus: [f64; 2],
    var_plus: [f64; 2],
    polarization: f64,
    spin_length: f64,
}

fn moments(n: usize, psi: &[Complex64]) -> Moments {
    let dim = psi.len();
    let a = 0..n;
    let b = n..2 * n;
    let mut ops = Vec::with_capacity(6);
    for (range, c) in [
        (a.clone(), Component::X),
        (a.clone(), Component::Y),
        (a, Component::Z),
        (b.clone(), Component::X),
        (b.clone(), Component::Y),
        (b, Component::Z),
    ] {
        let mut phi = vec![Complex64::default(); dim];
        apply_sum(range, c, psi, &mut phi);
        ops.push(phi);
    }
    let [ax, ay, az, bx, by, bz] = [0, 1, 2, 3, 4, 5];
    // variance of u_a O_a + u_b O_b for Hermitian O
    let var = |p: usize, q: usize, sign: f64| {
        let phi: Vec<Complex64> = ops[p].iter().zip(&ops[q]).map(|(x, y)| x + y * sign).collect();
        let mean = dot(psi, &phi).re;
        dot(&phi, &phi).re - mean * mean
    };
    let sq = |p: usize| dot(&ops[p], &ops[p]).re;
    Moments {
        var_minus: [var(ax, by, -1.0), var(ay, bx, 1.0)],
        var_plus: [var(ax, by, 1.0), var(ay, bx, -1.0)],
        polarization: dot(psi, &ops[az]).re - dot(psi, &ops[bz]).re,
        spin_length: sq(ax) + sq(ay) + sq(az) + sq(bx) + sq(by) + sq(bz),
    }
}

/// Exact expectation values of the ensemble observables on `t_grid` (ascending, >= 0).
pub fn exact_small_system(
    lattice: &SitePositions,
    couplings: &CouplingSet,
    t_grid: &[f64],
) -> Result<ObservableSeries> {
    if lattice.len() != couplings.total_sites() {
        return Err(Error::InvalidConfig(
            "lattice and couplings describe different systems".into(),
        ));
    }
    let h = small_system_hamiltonian(couplings)?;
    let n = couplings.per_layer();
    let mut psi = polarized_state(n);
    let mut krylov = Krylov::new(
        h.dim(),
        KrylovOptions {
            subspace: 30,
            tol: 1e-11,
        },
    );
    let mut t = 0.0;
    let mut vm = [Vec::new(), Vec::new()];
    let mut vp = [Vec::new(), Vec::new()];
    let mut pol = Vec::new();
    let mut len = Vec::new();
    for &tk in t_grid {
        if tk != t {
            krylov.propagate(&h, &mut psi, tk - t);
            t = tk;
        }
        let m = moments(n, &psi);
        for k in 0..2 {
            vm[k].push(m.var_minus[k]);
            vp[k].push(m.var_plus[k]);
        }
        pol.push(m.polarization);
        len.push(m.spin_length);
    }
    Ok(ObservableSeries::from_exact(n, t_grid.to_vec(), vm, vp, pol, len))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::collective::{build_hamiltonian, covariance_scan, CollectiveState};
    use crate::lattice::{build_lattice, coupling_matrix, Boundary, Geometry, LatticeSpec};
    use approx::assert_relative_eq;

    fn ladder(l: usize, alpha: f64) -> (SitePositions, CouplingSet) {
        let pos = build_lattice(&LatticeSpec::new(Geometry::ChainLadder, l, 1.0)).unwrap();
        let c = coupling_matrix(&pos, alpha, Boundary::Open).unwrap();
        (pos, c)
    }

    #[test]
    fn initial_variance_is_half_n() {
        let (pos, c) = ladder(2, 3.0);
        let s = exact_small_system(&pos, &c, &[0.0]).unwrap();
        assert_relative_eq!(s.var_minus[0].value, 1.0, epsilon = 1e-14);
        assert_relative_eq!(s.var_plus[0].value, 1.0, epsilon = 1e-14);
        assert_relative_eq!(s.polarization[0].value, 2.0, epsilon = 1e-14);
        // 2 S(S+1) with S = 1
        assert_relative_eq!(s.spin_length[0].value, 4.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_couplings_keep_observables() {
        let (pos, c) = ladder(3, 2.0);
        let z = c.scaled(0.0);
        let s = exact_small_system(&pos, &z, &[0.0, 0.5, 1.0]).unwrap();
        for i in 0..3 {
            assert_relative_eq!(s.var_minus[i].value, 1.5, epsilon = 1e-14);
            assert_relative_eq!(s.polarization[i].value, 3.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn infinite_range_agrees_with_collective_solver() {
        let (pos, c) = ladder(3, 0.0);
        let grid: Vec<f64> = (0..8).map(|i| i as f64 * 0.15).collect();
        let s = exact_small_system(&pos, &c, &grid).unwrap();
        let h = build_hamiltonian(1.5, 1.0).unwrap();
        let coll = covariance_scan(&CollectiveState::polarized(1.5).unwrap(), &h, &grid);
        for (i, r) in coll.iter().enumerate() {
            // collective report uses unit-norm quadratures
            assert_relative_eq!(s.var_minus_pair[0][i].value, 2.0 * r.var_minus, epsilon = 1e-9);
            assert_relative_eq!(s.polarization[i].value, r.polarization, epsilon = 1e-9);
        }
    }

    #[test]
    fn too_many_spins() {
        let (_, c) = ladder(7, 3.0);
        assert!(matches!(small_system_hamiltonian(&c), Err(Error::TooManySpins(14))));
    }
}
