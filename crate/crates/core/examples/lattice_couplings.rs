//! Builds a ladder and a square bilayer and prints the coupling scales.

use bilayer_squeeze::lattice::positions_table;
use bilayer_squeeze::{build_lattice, coupling_matrix, Boundary, Geometry, LatticeSpec};

fn main() -> bilayer_squeeze::Result<()> {
    for (geometry, l, a_z) in [(Geometry::ChainLadder, 64, 4.0), (Geometry::SquareBilayer, 8, 2.0)] {
        for boundary in [Boundary::Open, Boundary::Periodic] {
            let spec = LatticeSpec::new(geometry, l, a_z).with_boundary(boundary);
            let pos = build_lattice(&spec)?;
            let c = coupling_matrix(&pos, 1.5, boundary)?;
            println!(
                "{} L={l} a_Z={a_z} {boundary:?}: N={} per layer, V_avg={:.6e}, N V_avg={:.4}, V(0,1) intra={:.4}",
                geometry.name(),
                c.per_layer(),
                c.v_avg,
                c.per_layer() as f64 * c.v_avg,
                c.intra(0, 1),
            );
        }
    }

    let spec = LatticeSpec::new(Geometry::ChainLadder, 4, 1.0);
    let pos = build_lattice(&spec)?;
    let c = coupling_matrix(&pos, 3.0, Boundary::Open)?;
    print!("{}", positions_table(&pos, Some(&c)));
    Ok(())
}
