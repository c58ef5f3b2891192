use bilayer_squeeze::bogoliubov::{classify_modes, fourier_couplings};
use bilayer_squeeze::dtwa::{
    classical_energy, integrate_trajectory, mean_field_rhs, trajectory_initial_state, SimulationConfig,
};
use bilayer_squeeze::io::ColumnTable;
use bilayer_squeeze::lattice::coupling_matrix_with_limit;
use bilayer_squeeze::scaling::{cost, Curve};
use bilayer_squeeze::{build_lattice, coupling_matrix, Boundary, Geometry, LatticeSpec};
use proptest::prelude::*;

fn geometry() -> impl Strategy<Value = Geometry> {
    prop_oneof![
        Just(Geometry::ChainLadder),
        Just(Geometry::SquareBilayer),
        Just(Geometry::TriangularBilayer),
        Just(Geometry::HexagonalBilayer),
    ]
}

fn boundary() -> impl Strategy<Value = Boundary> {
    prop_oneof![Just(Boundary::Open), Just(Boundary::Periodic)]
}

fn small_l(g: Geometry) -> std::ops::RangeInclusive<usize> {
    if g == Geometry::ChainLadder {
        2..=24
    } else {
        2..=5
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn couplings_are_symmetric_power_laws(
        (g, l) in geometry().prop_flat_map(|g| (Just(g), small_l(g))),
        a_z in 0.5f64..6.0,
        alpha in 0.0f64..4.0,
        b in boundary(),
    ) {
        let pos = build_lattice(&LatticeSpec::new(g, l, a_z).with_boundary(b)).unwrap();
        let c = coupling_matrix(&pos, alpha, b).unwrap();
        let m = pos.len();
        for i in 0..m {
            prop_assert_eq!(c.get(i, i), 0.0);
            for j in (i + 1)..m {
                let v = c.get(i, j);
                prop_assert!((v - c.get(j, i)).abs() <= 1e-12 * v.abs().max(1.0));
                let r = pos.distance(i, j, b);
                prop_assert!((v - r.powf(-alpha)).abs() <= 1e-9 * v.max(1.0), "V={v} r={r}");
            }
        }
        prop_assert!(c.v_avg > 0.0);
    }

    #[test]
    fn periodic_displacements_are_minimal(l in 2usize..40, a_z in 0.5f64..4.0) {
        let pos = build_lattice(&LatticeSpec::new(Geometry::ChainLadder, l, a_z).with_boundary(Boundary::Periodic)).unwrap();
        for j in 0..pos.len() {
            let r = pos.displacement(0, j, Boundary::Periodic);
            prop_assert!(r[0].abs() <= l as f64 / 2.0 + 1e-12);
        }
    }

    #[test]
    fn mean_field_force_is_tangent(
        (g, l) in geometry().prop_flat_map(|g| (Just(g), small_l(g))),
        alpha in 0.0f64..4.0,
        seed in any::<u64>(),
    ) {
        let pos = build_lattice(&LatticeSpec::new(g, l, 1.5)).unwrap();
        let c = coupling_matrix(&pos, alpha, Boundary::Open).unwrap();
        let s = trajectory_initial_state(seed, 0, &pos);
        let ds = mean_field_rhs(&s, &c).unwrap();
        for (si, di) in s.spins.iter().zip(&ds) {
            let dot = si[0] * di[0] + si[1] * di[1] + si[2] * di[2];
            prop_assert!(dot.abs() < 1e-10);
        }
        let dz: f64 = ds.iter().map(|d| d[2]).sum();
        prop_assert!(dz.abs() < 1e-9);
    }

    #[test]
    fn zero_momentum_grows_and_rates_are_nonnegative(
        alpha in 0.0f64..4.0,
        l in 8usize..64,
        ratio in 0.01f64..0.5,
    ) {
        let spec = LatticeSpec::new(Geometry::ChainLadder, l, ratio * l as f64).with_boundary(Boundary::Periodic);
        let pos = build_lattice(&spec).unwrap();
        let c = coupling_matrix_with_limit(&pos, alpha, Boundary::Periodic, 0).unwrap();
        let s = fourier_couplings(&c).unwrap();
        let modes = classify_modes(&s);
        prop_assert!(s.xi2[0] < 0.0);
        prop_assert!(modes.unstable.contains(&0));
        for k in 0..s.gamma.len() {
            prop_assert!(s.gamma[k] >= 0.0);
            prop_assert_eq!(s.gamma[k] > 0.0, s.is_unstable(k));
        }
    }

    #[test]
    fn cost_is_symmetric_and_scale_free(
        slope in -2.0f64..0.0,
        shift in 0.5f64..2.0,
        factor in 0.1f64..10.0,
    ) {
        let x: Vec<f64> = (1..30).map(|j| 0.03 * j as f64).collect();
        let make = |n: f64, amp: f64| Curve::new(n, 0.0, x.clone(), x.iter().map(|v| amp * v.powf(slope)).collect());
        let a = make(100.0, 1.0);
        let b = make(200.0, shift);
        let scaled = |c: &Curve| Curve::new(c.size, 0.0, c.x.clone(), c.y.iter().map(|v| v * factor).collect());
        let l1 = cost(&[a.clone(), b.clone()], 0.0, 0.0).unwrap().lambda;
        let l2 = cost(&[b.clone(), a.clone()], 0.0, 0.0).unwrap().lambda;
        let l3 = cost(&[scaled(&a), scaled(&b)], 0.0, 0.0).unwrap().lambda;
        prop_assert!(l1 >= 0.0);
        prop_assert!((l1 - l2).abs() <= 1e-12 * l1.max(1.0));
        prop_assert!((l1 - l3).abs() <= 1e-9 * l1.max(1.0));
    }

    #[test]
    fn column_tables_round_trip(rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 3), 0..20)) {
        let mut t = ColumnTable::with_columns(&["t", "VarMinus", "Pol"]);
        t.comments.push("seed=3".into());
        for r in &rows {
            t.push_row(r.clone());
        }
        let back = ColumnTable::parse(&t.render()).unwrap();
        prop_assert_eq!(&back.columns, &t.columns);
        prop_assert_eq!(back.rows.len(), rows.len());
        for (a, b) in back.rows.iter().zip(&rows) {
            for (x, y) in a.iter().zip(b) {
                prop_assert!((x - y).abs() <= 1e-11 * y.abs().max(1e-300));
            }
        }
    }
}

#[test]
fn single_trajectory_conserves_energy_and_magnetization() {
    for (g, l, alpha) in [
        (Geometry::ChainLadder, 12, 1.0),
        (Geometry::SquareBilayer, 3, 3.0),
        (Geometry::TriangularBilayer, 3, 2.0),
    ] {
        let pos = build_lattice(&LatticeSpec::new(g, l, 1.0)).unwrap();
        let c = coupling_matrix(&pos, alpha, Boundary::Open).unwrap();
        let s0 = trajectory_initial_state(4, 0, &pos);
        let config = SimulationConfig {
            n_out: 20,
            ..Default::default()
        };
        let states = integrate_trajectory(&s0, &c, &config).unwrap();
        let e0 = classical_energy(&s0, &c).unwrap();
        let mz0: f64 = s0.spins.iter().map(|s| s[2]).sum();
        let scale: f64 = s0.spins.len() as f64;
        for s in &states {
            let e = classical_energy(s, &c).unwrap();
            assert!((e - e0).abs() < 1e-5 * scale, "{g:?}: {e} vs {e0}");
            let mz: f64 = s.spins.iter().map(|s| s[2]).sum();
            assert!((mz - mz0).abs() < 1e-7 * scale);
            for v in &s.spins {
                assert!((v[0] * v[0] + v[1] * v[1] + v[2] * v[2] - 0.75).abs() < 1e-6);
            }
        }
    }
}
