//! Acceptance criteria A1 to A11. Every test writes one `A<k> PASS|FAIL|NOT RUN` line
//! straight to stdout so it shows without `--nocapture`.
//!
//! A5 (trajectory part), A6, A7 and A11 need hours of trajectories. They run when
//! `BILAYER_ACCEPTANCE=full` is set, or when every ensemble they need is already in the
//! result cache under the cargo target directory; otherwise they report NOT RUN.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use bilayer_squeeze::bogoliubov::{critical_aspect_ratio, fourier_couplings};
use bilayer_squeeze::dtwa::{self, run_ensemble, squeezing_minimum, SimulationConfig};
use bilayer_squeeze::exact::{exact_small_system, minimal_variance, tms_reference};
use bilayer_squeeze::harness::{self, estimate_core_hours, ExperimentKind, RunConfig, RunOptions, RunStore};
use bilayer_squeeze::io::ColumnTable;
use bilayer_squeeze::lattice::{average_interlayer_coupling, coupling_matrix_with_limit};
use bilayer_squeeze::scaling::{
    collapse_full, collapse_time_curves, cost, extract_p, fixed_spacing_exponent, power_law_fit, Axis, Curve,
    FixedExponents, ScalingDataset,
};
use bilayer_squeeze::{build_lattice, coupling_matrix, Boundary, Error, Geometry, LatticeSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn verdict(id: &str, pass: bool, detail: String) {
    let line = format!("{id} {}: {detail}", if pass { "PASS" } else { "FAIL" });
    writeln!(std::io::stdout(), "{line}").unwrap();
    assert!(pass, "{line}");
}

fn not_run(id: &str, why: &str) {
    writeln!(std::io::stdout(), "{id} NOT RUN: {why}").unwrap();
}

#[test]
fn a01_two_mode_squeezing_law() {
    let start = Instant::now();
    let spec = LatticeSpec::new(Geometry::ChainLadder, 20, 1.0);
    let pos = build_lattice(&spec).unwrap();
    let c = coupling_matrix(&pos, 0.0, Boundary::Open).unwrap();
    let n: f64 = 20.0;
    let v_avg = average_interlayer_coupling(&c);
    // reference reaches 1 at ln(N/2)/(N V_avg)
    let t_one = (n / 2.0).ln() / (n * v_avg);
    let config = SimulationConfig {
        n_traj: 4000,
        t_max: Some(t_one),
        n_out: 41,
        seed: 11,
        ..Default::default()
    };
    let s = run_ensemble(&pos, &c, &config).unwrap();
    let mut worst: (f64, f64) = (0.0, 0.0);
    for (t, v) in s.t.iter().zip(&s.var_minus) {
        let (r, _) = tms_reference(n, v_avg, *t);
        if r >= 1.0 - 1e-12 {
            let dev = (v.value / r - 1.0).abs();
            if dev > worst.0 {
                worst = (dev, *t);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "A1",
        worst.0 <= 0.10 && secs < 60.0,
        format!(
            "max |Var-/TMS - 1| = {:.4} at t = {:.4} over Var_TMS >= 1 (limit 0.10); {secs:.1} s (limit 60 s)",
            worst.0, worst.1
        ),
    );
}

#[test]
fn a02_exact_oracle_equivalence() {
    let start = Instant::now();
    let spec = LatticeSpec::new(Geometry::ChainLadder, 3, 1.0);
    let pos = build_lattice(&spec).unwrap();
    let c = coupling_matrix(&pos, 3.0, Boundary::Open).unwrap();
    let t_max = dtwa::default_t_max(&c).unwrap();
    let config = SimulationConfig {
        n_traj: 100_000,
        t_max: Some(t_max),
        n_out: 60,
        seed: 12,
        ..Default::default()
    };
    let exact = exact_small_system(&pos, &c, &config_grid(&config, t_max)).unwrap();
    let t_min = squeezing_minimum(&exact).t_min;
    let s = run_ensemble(&pos, &c, &config).unwrap();
    let mut worst = (0.0f64, String::new());
    let mut agree_until = None;
    for i in 0..s.len() {
        if s.t[i] > t_min + 1e-12 {
            break;
        }
        let mut check = |name: &str, d: &dtwa::Estimate, e: f64| {
            let z = if d.err > 0.0 {
                (d.value - e).abs() / d.err
            } else if (d.value - e).abs() < 1e-12 {
                0.0
            } else {
                f64::INFINITY
            };
            if z > worst.0 {
                worst = (
                    z,
                    format!(
                        "{name} at t = {:.4}: dTWA {:.5} +- {:.5}, exact {:.5}",
                        s.t[i], d.value, d.err, e
                    ),
                );
            }
        };
        for k in 0..2 {
            check("Var-", &s.var_minus_pair[k][i], exact.var_minus_pair[k][i].value);
            check("Var+", &s.var_plus_pair[k][i], exact.var_plus_pair[k][i].value);
        }
        check("Pol", &s.polarization[i], exact.polarization[i].value);
        check("SpinLen", &s.spin_length[i], exact.spin_length[i].value);
        if worst.0 <= 3.0 {
            agree_until = Some(s.t[i]);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "A2",
        worst.0 <= 3.0 && secs < 600.0,
        format!(
            "largest deviation {:.2} sigma up to t_min = {t_min:.4} ({}); within 3 sigma through t = {:.4}; {secs:.1} s (limit 600 s)",
            worst.0,
            worst.1,
            agree_until.unwrap_or(0.0)
        ),
    );
}

fn config_grid(c: &SimulationConfig, t_max: f64) -> Vec<f64> {
    (0..c.n_out).map(|i| t_max * i as f64 / (c.n_out - 1) as f64).collect()
}

#[test]
fn a03_zero_momentum_always_unstable() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut ok = 0;
    let mut failures = Vec::new();
    for _ in 0..200 {
        let alpha = rng.random_range(0.0..=4.0);
        let l = rng.random_range(16..=256usize);
        let a_z = rng.random_range(0.5..=l as f64);
        let g = if rng.random_bool(0.5) {
            Geometry::ChainLadder
        } else {
            Geometry::SquareBilayer
        };
        let spec = LatticeSpec::new(g, l, a_z).with_boundary(Boundary::Periodic);
        let pos = build_lattice(&spec).unwrap();
        let c = coupling_matrix_with_limit(&pos, alpha, Boundary::Periodic, 0).unwrap();
        let sp = fourier_couplings(&c).unwrap();
        if sp.xi2[0] < 0.0 {
            ok += 1;
        } else {
            failures.push(format!("{} L={l} a_Z={a_z:.3} alpha={alpha:.3}", g.name()));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "A3",
        ok == 200 && secs < 60.0,
        format!("xi_0^2 < 0 in {ok}/200 random cases {failures:?}; {secs:.1} s (limit 60 s)"),
    );
}

#[test]
fn a04_zero_mode_rate_scales_inversely_with_spacing() {
    let start = Instant::now();
    let vals: Vec<f64> = [1.0, 2.0, 4.0, 8.0]
        .iter()
        .map(|&a_z| {
            let spec = LatticeSpec::new(Geometry::SquareBilayer, 256, a_z).with_boundary(Boundary::Periodic);
            let pos = build_lattice(&spec).unwrap();
            let c = coupling_matrix_with_limit(&pos, 3.0, Boundary::Periodic, 0).unwrap();
            fourier_couplings(&c).unwrap().gamma[0] * a_z
        })
        .collect();
    let mean = vals.iter().sum::<f64>() / 4.0;
    let spread = vals.iter().map(|v| (v / mean - 1.0).abs()).fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "A4",
        spread <= 0.02 && secs < 60.0,
        format!(
            "Gamma_0 a_Z = {:?} for a_Z = 1, 2, 4, 8; max deviation from mean {:.4} (limit 0.02); {secs:.1} s",
            vals.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>(),
            spread
        ),
    );
}

// ---- heavy criteria -------------------------------------------------------------------

fn cache_root() -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-cache")
}

fn full_mode() -> bool {
    std::env::var("BILAYER_ACCEPTANCE").is_ok_and(|v| v == "full")
}

struct Minimum {
    n: f64,
    var_min: f64,
    err: f64,
    converged: bool,
}

fn options() -> RunOptions {
    let mut o = RunOptions::new(cache_root());
    o.allow_long = true;
    o.quiet = !full_mode();
    o
}

fn point_config(spec: &LatticeSpec, alpha: f64, n_traj: usize, t_max: Option<f64>, seed: u64) -> RunConfig {
    let mut c = RunConfig::new(ExperimentKind::Simulate);
    c.seed = seed;
    c.alpha = vec![alpha];
    c.lattice.geometry = vec![spec.geometry];
    c.lattice.boundary = spec.boundary;
    c.lattice.l = vec![spec.l];
    c.lattice.a_z = vec![spec.a_z];
    c.simulation.n_traj = n_traj;
    c.simulation.t_max = t_max;
    c
}

/// Runs `config` if allowed, or reads it from the cache; `None` when neither applies.
fn cached_or_run(config: &RunConfig) -> Option<Minimum> {
    let store = RunStore::open(&cache_root()).unwrap();
    let pending = estimate_core_hours(&store, config, &config.lattice_points(), false).unwrap();
    if pending > 0.0 && !full_mode() {
        return None;
    }
    let report = harness::run(config, &options()).unwrap();
    let t = ColumnTable::read(&report.dir.join("minima.dat")).unwrap();
    let col = |k: &str| t.column(k).unwrap()[0];
    Some(Minimum {
        n: col("N"),
        var_min: col("VarMin"),
        err: col("VarMinErr"),
        converged: col("converged") == 1.0,
    })
}

/// Pilot of 64 trajectories locates the minimum; the main ensemble (2000 trajectories)
/// then runs to 1.6 times that time.
fn dtwa_minimum(spec: &LatticeSpec, alpha: f64) -> Option<Minimum> {
    let pilot = point_config(spec, alpha, 64, None, 101);
    let store = RunStore::open(&cache_root()).unwrap();
    let pending = estimate_core_hours(&store, &pilot, &pilot.lattice_points(), false).unwrap();
    if pending > 0.0 && !full_mode() {
        return None;
    }
    let report = harness::run(&pilot, &options()).unwrap();
    let t = ColumnTable::read(&report.dir.join("minima.dat")).unwrap();
    let t_min = t.column("t_min").unwrap()[0];
    let converged = t.column("converged").unwrap()[0] == 1.0;
    let t_max = converged.then(|| {
        let v = 1.6 * t_min;
        let scale = 10f64.powi(v.log10().floor() as i32 - 2);
        (v / scale).round() * scale
    });
    cached_or_run(&point_config(spec, alpha, 2000, t_max, 7))
}

fn chain(l: usize, a_z: f64, boundary: Boundary) -> LatticeSpec {
    LatticeSpec::new(Geometry::ChainLadder, l, a_z).with_boundary(boundary)
}

/// `p` from a weighted log-log fit of the minima against `N`.
fn fitted_p(minima: &[Minimum]) -> (f64, f64) {
    let pts: Vec<(f64, f64, f64)> = minima.iter().map(|m| (m.n, m.var_min, m.err)).collect();
    let e = power_law_fit("p", &pts, 3).unwrap();
    (e.value, e.uncertainty)
}

#[test]
fn a05_bogoliubov_transition_is_sharp() {
    let start = Instant::now();
    let small = critical_aspect_ratio(1.5, 1, 200).unwrap().aspect_ratio;
    let large = critical_aspect_ratio(1.5, 1, 800).unwrap().aspect_ratio;
    let rel = (small - large).abs() / large;
    let bog_secs = start.elapsed().as_secs_f64();
    let bog_ok = rel < 0.05;
    let mut detail =
        format!("(a_Z/L)_* = {small:.5} (L=200), {large:.5} (L=800), relative difference {rel:.4} (limit 0.05)");

    let start = Instant::now();
    let ratios = [0.06, 0.12];
    let mut diffs = Vec::new();
    for r in ratios {
        let open = dtwa_minimum(&chain(400, r * 400.0, Boundary::Open), 1.5);
        let periodic = dtwa_minimum(&chain(400, r * 400.0, Boundary::Periodic), 1.5);
        match (open, periodic) {
            (Some(o), Some(p)) => diffs.push((r, o, p)),
            _ => {
                writeln!(
                    std::io::stdout(),
                    "A5 (Bogoliubov part) {}: {detail}",
                    if bog_ok { "PASS" } else { "FAIL" }
                )
                .unwrap();
                not_run(
                    "A5",
                    "open/periodic dTWA comparison at L=400 needs BILAYER_ACCEPTANCE=full (about 1.5 core-hours)",
                );
                assert!(bog_ok, "{detail}");
                return;
            }
        }
    }
    let mut dtwa_ok = true;
    for (r, o, p) in &diffs {
        let d = (o.var_min - p.var_min).abs() / o.var_min.min(p.var_min);
        dtwa_ok &= d < 0.15 && o.converged && p.converged;
        detail.push_str(&format!(
            "; a_Z/L = {r}: open {:.4} +- {:.4}, periodic {:.4} +- {:.4}, difference {d:.3} (limit 0.15)",
            o.var_min, o.err, p.var_min, p.err
        ));
    }
    let secs = start.elapsed().as_secs_f64() + bog_secs;
    detail.push_str(&format!("; {secs:.0} s"));
    verdict("A5", bog_ok && dtwa_ok, detail);
}

fn size_sweep(id: &str, ratio: f64) -> Option<(f64, f64, Vec<Minimum>)> {
    let mut minima = Vec::new();
    for l in [200, 400, 800] {
        match dtwa_minimum(&chain(l, ratio * l as f64, Boundary::Open), 1.5) {
            Some(m) => minima.push(m),
            None => {
                not_run(
                    id,
                    "three ensembles up to L=800 need BILAYER_ACCEPTANCE=full (about 1.5 core-hours)",
                );
                return None;
            }
        }
    }
    let (p, sp) = fitted_p(&minima);
    Some((p, sp, minima))
}

fn describe(minima: &[Minimum]) -> String {
    minima
        .iter()
        .map(|m| {
            format!(
                "N={} {:.4}+-{:.4}{}",
                m.n,
                m.var_min,
                m.err,
                if m.converged { "" } else { " (edge)" }
            )
        })
        .collect::<Vec<_>>()
        .join(", ")
}

#[test]
fn a06_collective_phase_is_flat() {
    let start = Instant::now();
    if let Some((p, sp, minima)) = size_sweep("A6", 0.3) {
        verdict(
            "A6",
            p.abs() <= 0.03 && minima.iter().all(|m| m.converged),
            format!(
                "p = {p:.4} +- {sp:.4} (limit |p| <= 0.03); minima {}; {:.0} s",
                describe(&minima),
                start.elapsed().as_secs_f64()
            ),
        );
    }
}

#[test]
fn a07_partially_collective_scaling() {
    let start = Instant::now();
    if let Some((p, sp, minima)) = size_sweep("A7", 0.05) {
        verdict(
            "A7",
            (0.17..=0.41).contains(&p) && minima.iter().all(|m| m.converged),
            format!(
                "p = {p:.4} +- {sp:.4} (window [0.17, 0.41]); minima {}; {:.0} s",
                describe(&minima),
                start.elapsed().as_secs_f64()
            ),
        );
    }
}

#[test]
fn a08_anisotropy_scaling_classes() {
    let start = Instant::now();
    let mut slopes = Vec::new();
    for r in [1.0, 2.0] {
        let pts: Vec<(f64, f64)> = [10.0, 20.0, 40.0, 80.0]
            .iter()
            .map(|&s: &f64| {
                let m = minimal_variance(s, r).unwrap();
                (s.ln(), (m.min_variance / (s / 2.0)).ln())
            })
            .collect();
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / 4.0;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / 4.0;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        slopes.push(sxy / sxx);
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "A8",
        (slopes[0] + 1.0).abs() <= 0.1 && (slopes[1] + 0.5).abs() <= 0.1 && secs < 1200.0,
        format!(
            "slope of min variance / (S/2) against S: r=1 {:.4} (target -1 +- 0.1), r=2 {:.4} (target -0.5 +- 0.1); {secs:.1} s",
            slopes[0], slopes[1]
        ),
    );
}

#[test]
fn a09_collapse_recovers_synthetic_exponents() {
    let start = Instant::now();
    let (d, d_v, d_tau, delta, p) = (1usize, -0.69, 0.63, 0.25, 0.29);
    let nu = p - d_v * (1.0 - delta) / d as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let noise = Normal::new(0.0, 0.02).unwrap();
    let f = |x: f64| (-2.0 * x).exp() * (1.0 + 0.3 * x * x);
    let sizes = [200.0f64, 400.0, 800.0];
    let spacings = [4.0f64, 8.0, 16.0, 32.0];

    // time curves: x = (t - t_min) a^{-d_tau} N^{delta d_tau / d} spans [-1.5, 0.4]
    let mut curves = Vec::new();
    for &n in &sizes {
        for &a in &spacings {
            let xs = a.powf(d_tau) * n.powf(-delta * d_tau / d as f64);
            let ys = a.powf(d_v) * n.powf(nu - d_v * delta / d as f64);
            let t_min = 1.5 * xs;
            let t: Vec<f64> = (0..80).map(|j| 1.3 * t_min * j as f64 / 79.0).collect();
            let x: Vec<f64> = t.iter().map(|t| t - t_min).collect();
            let y: Vec<f64> = x
                .iter()
                .map(|&x| ys * f(x / xs) * (1.0 + noise.sample(&mut rng)))
                .collect();
            curves.push(Curve::new(n, a, x, y));
        }
    }
    let largest: Vec<Curve> = curves.iter().filter(|c| c.size == 800.0).cloned().collect();
    let time = collapse_time_curves(
        &ScalingDataset::new("VarMinus", 1.5, d, largest),
        Axis::new("d_V", -2.0, 1.0),
        Axis::new("d_tau", -0.5, 1.5),
    )
    .unwrap();

    // minima against a_Z / L, saturating at a collective floor of 1 for wide separations
    let ratios: Vec<f64> = (0..=108).map(|j| 0.002 * 1.05f64.powi(j)).collect();
    let min_curves: Vec<Curve> = sizes
        .iter()
        .map(|&n| {
            let y: Vec<f64> = ratios
                .iter()
                .map(|&r| (0.05 * r.powf(d_v) * n.powf(p)).max(1.0) * (1.0 + noise.sample(&mut rng)))
                .collect();
            Curve::new(n, 0.0, ratios.clone(), y)
        })
        .collect();
    let pe = extract_p(
        &ScalingDataset::new("VarMin", 1.5, d, min_curves),
        6.0,
        Axis::new("p", -0.5, 1.5),
    )
    .unwrap();

    let fixed = FixedExponents {
        d,
        p: pe.p.value,
        p_err: pe.p.uncertainty,
        d_v: time.d_v.value,
        d_v_err: time.d_v.uncertainty,
        d_tau: time.d_tau.value,
    };
    let full = collapse_full(
        &ScalingDataset::new("VarMinus", 1.5, d, curves.clone()),
        fixed,
        Axis::new("delta", -1.0, 1.5),
    )
    .unwrap();

    let identical = cost(&[curves[0].clone(), curves[0].clone()], 0.37, -0.81)
        .unwrap()
        .lambda;
    let checks = [
        ("d_V", time.d_v.value, d_v, time.d_v.lambda_min),
        ("d_tau", time.d_tau.value, d_tau, time.d_tau.lambda_min),
        ("p", pe.p.value, p, pe.p.lambda_min),
        ("delta", full.delta.value, delta, full.delta.lambda_min),
        ("nu", full.nu.value, nu, full.nu.lambda_min),
    ];
    let ok = checks.iter().all(|c| (c.1 - c.2).abs() <= 0.03 && c.3 <= 2.0) && identical == 0.0;
    let secs = start.elapsed().as_secs_f64();
    let detail = checks
        .iter()
        .map(|c| format!("{} {:.4} (true {:.4}, lambda_min {:.3})", c.0, c.1, c.2, c.3))
        .collect::<Vec<_>>()
        .join(", ");
    verdict(
        "A9",
        ok && secs < 300.0,
        format!("{detail}; identical curves lambda = {identical}; {secs:.1} s"),
    );
}

#[test]
fn a10_conservation_is_enforced() {
    let mut lines = Vec::new();
    let mut ok = true;
    for (g, l, alpha, boundary) in [
        (Geometry::ChainLadder, 32, 1.5, Boundary::Open),
        (Geometry::ChainLadder, 32, 3.0, Boundary::Periodic),
        (Geometry::SquareBilayer, 4, 3.0, Boundary::Open),
        (Geometry::HexagonalBilayer, 3, 2.0, Boundary::Open),
    ] {
        let spec = LatticeSpec::new(g, l, 2.0).with_boundary(boundary);
        let pos = build_lattice(&spec).unwrap();
        let c = coupling_matrix(&pos, alpha, boundary).unwrap();
        let config = SimulationConfig {
            n_traj: 64,
            seed: 10,
            ..Default::default()
        };
        let r = run_ensemble(&pos, &c, &config);
        ok &= r.is_ok();
        lines.push(format!(
            "{} L={l}: {}",
            g.name(),
            if r.is_ok() {
                "drift below 1e-5".to_string()
            } else {
                format!("{:?}", r.err())
            }
        ));
    }
    // a coarse fixed step must be rejected rather than reported
    let pos = build_lattice(&LatticeSpec::new(Geometry::ChainLadder, 16, 1.0)).unwrap();
    let c = coupling_matrix(&pos, 1.0, Boundary::Open).unwrap();
    let coarse = SimulationConfig {
        n_traj: 8,
        dt: Some(0.5),
        t_max: Some(20.0),
        ..Default::default()
    };
    let loud = matches!(run_ensemble(&pos, &c, &coarse), Err(Error::ConservationViolated { .. }));
    lines.push(format!("coarse fixed step rejected: {loud}"));
    verdict("A10", ok && loud, lines.join("; "));
}

#[test]
fn a11_fixed_spacing_exponent_grows_with_range() {
    let start = Instant::now();
    let mut mus = Vec::new();
    for alpha in [0.5, 1.5, 3.0] {
        let mut pts = Vec::new();
        for l in [25, 50, 100, 200] {
            match dtwa_minimum(&chain(l, 2.5, Boundary::Open), alpha) {
                Some(m) => pts.push((m.n, m.var_min, m.err)),
                None => {
                    not_run("A11", "1d fixed-spacing sweep needs BILAYER_ACCEPTANCE=full (about 1 core-hour); the 2d extended variant is not run");
                    return;
                }
            }
        }
        let mu = fixed_spacing_exponent(&pts).unwrap();
        mus.push((alpha, mu.value, mu.uncertainty));
    }
    let monotone = mus.windows(2).all(|w| w[1].1 > w[0].1);
    verdict(
        "A11",
        monotone,
        format!(
            "desk substitute (1d, a_Z = 2.5): mu = {}; monotone increase required; {:.0} s",
            mus.iter()
                .map(|m| format!("{:.3} +- {:.3} (alpha {})", m.1, m.2, m.0))
                .collect::<Vec<_>>()
                .join(", "),
            start.elapsed().as_secs_f64()
        ),
    );
}
