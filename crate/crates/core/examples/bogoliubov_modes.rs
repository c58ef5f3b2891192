//! Unstable momentum modes of the quadratic theory and the collective boundary.

use bilayer_squeeze::bogoliubov::{classify_modes, critical_aspect_ratio, fourier_couplings};
use bilayer_squeeze::lattice::coupling_matrix_with_limit;
use bilayer_squeeze::{build_lattice, Boundary, Geometry, LatticeSpec};

fn main() -> bilayer_squeeze::Result<()> {
    let (alpha, l) = (1.5, 200);
    for ratio in [0.02, 0.05, 0.1, 0.2] {
        let spec = LatticeSpec::new(Geometry::ChainLadder, l, ratio * l as f64).with_boundary(Boundary::Periodic);
        let pos = build_lattice(&spec)?;
        let c = coupling_matrix_with_limit(&pos, alpha, Boundary::Periodic, 0)?;
        let spectrum = fourier_couplings(&c)?;
        let modes = classify_modes(&spectrum);
        println!(
            "a_Z/L={ratio:.2}: {} unstable modes, k_c L = {:.3}, Gamma_0 = {:.5}",
            modes.unstable.len(),
            modes.k_c * l as f64,
            spectrum.gamma[0]
        );
    }
    for alpha in [0.5, 1.0, 1.5, 2.0, 3.0] {
        match critical_aspect_ratio(alpha, 1, l) {
            Ok(t) => println!("alpha={alpha}: (a_Z/L)* = {:.4}", t.aspect_ratio),
            Err(e) => println!("alpha={alpha}: {e}"),
        }
    }
    Ok(())
}
