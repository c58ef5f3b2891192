//! Reproducible experiment runs.
//!
//! [`run`] executes one [`RunConfig`] under an output root:
//!
//! ```text
//! <out>/manifest.jsonl          one JSON line per computed or reused unit
//! <out>/points/<hash>/          cached ensemble for one lattice point (series.dat)
//! <out>/<kind>-<hash>/          summary tables, config.toml, plot/
//! ```
//!
//! Every ensemble is keyed by the SHA-256 of its physics parameters, seed and crate
//! version, so identical requests reuse results and any parameter change misses the
//! cache.

mod config;
mod plot;
mod recipes;
mod store;

pub use config::{CollapseSettings, ExactSweep, ExperimentKind, LatticeSweep, RunConfig};
pub use plot::emit_plotdata;
pub use recipes::{recipe, run_recipe, Scale, RECIPES};
pub use store::{ManifestRecord, RunStore, Slot, VERSION};

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::bogoliubov::{classify_modes, critical_aspect_ratio_for, fourier_couplings};
use crate::dtwa::{run_ensemble, squeezing_minimum, Estimate, ObservableSeries, SimulationConfig, SqueezingMinimum};
use crate::error::{Error, Result};
use crate::exact::minimal_variance;
use crate::io::ColumnTable;
use crate::lattice::{build_lattice, coupling_matrix, coupling_matrix_with_limit, Boundary, Geometry, LatticeSpec};
use crate::scaling::{
    self, collapse_full, collapse_time_curves, default_min_linear_size, detect_transition, extract_p,
    fixed_spacing_exponent, Axis, Curve, ExponentEstimate, FixedExponents, ManifestEntry, MinVariancePoint,
    ScalingDataset, SweepPoint,
};

/// Launch guard: runs estimated above this many core-hours need `allow_long`.
pub const DEFAULT_BUDGET_CORE_HOURS: f64 = 4.0;

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out: PathBuf,
    pub force: bool,
    pub allow_long: bool,
    pub budget_core_hours: f64,
    pub quiet: bool,
}

impl RunOptions {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        RunOptions {
            out: out.into(),
            force: false,
            allow_long: false,
            budget_core_hours: DEFAULT_BUDGET_CORE_HOURS,
            quiet: false,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunReport {
    pub kind: String,
    pub config_hash: String,
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub computed: usize,
    pub cached: usize,
    pub notes: Vec<String>,
    /// Key-value summary, also written to `report.txt`.
    pub summary: String,
    pub estimates: Vec<ExponentEstimate>,
}

/// Rough wall time of one trajectory, fitted to 1d ladders with the convolution kernel.
pub fn trajectory_seconds(n_per_layer: usize) -> f64 {
    let n = n_per_layer.max(2) as f64;
    4.7e-4 * n * n.log2()
}

/// Core-hours for the ensembles of `points` that are not cached yet.
pub fn estimate_core_hours(
    store: &RunStore,
    config: &RunConfig,
    points: &[(LatticeSpec, f64)],
    force: bool,
) -> Result<f64> {
    let sim = point_simulation(config);
    let mut secs = 0.0;
    for (spec, alpha) in points {
        let slot = store.slot("points", &point_key(spec, *alpha, &sim), false)?;
        if force || !slot.is_complete() {
            secs += sim.n_traj as f64 * trajectory_seconds(spec.sites_per_layer());
        }
    }
    Ok(secs / 3600.0)
}

#[derive(Serialize)]
struct PointKey<'a> {
    version: &'a str,
    lattice: &'a LatticeSpec,
    alpha: f64,
    simulation: &'a SimulationConfig,
}

fn point_key<'a>(spec: &'a LatticeSpec, alpha: f64, sim: &'a SimulationConfig) -> PointKey<'a> {
    PointKey {
        version: VERSION,
        lattice: spec,
        alpha,
        simulation: sim,
    }
}

fn point_simulation(config: &RunConfig) -> SimulationConfig {
    let mut sim = config.simulation.clone();
    sim.seed = config.seed;
    sim
}

/// One finished lattice point.
#[derive(Clone, Debug)]
pub struct PointResult {
    pub spec: LatticeSpec,
    pub alpha: f64,
    pub series_path: PathBuf,
    pub series: ObservableSeries,
    pub minimum: SqueezingMinimum,
    pub cached: bool,
}

impl PointResult {
    fn manifest_entry(&self) -> ManifestEntry {
        ManifestEntry {
            file: self.series_path.clone(),
            n: self.series.n_per_layer,
            l: self.spec.l,
            a_z: self.spec.a_z,
            alpha: self.alpha,
            d: self.spec.d,
        }
    }

    fn min_point(&self) -> MinVariancePoint {
        MinVariancePoint {
            entry: self.manifest_entry(),
            var_min: self.minimum.var_min,
            t_min: self.minimum.t_min,
            converged: self.minimum.converged,
        }
    }
}

struct Context<'a> {
    store: RunStore,
    config: &'a RunConfig,
    opts: &'a RunOptions,
    report: RunReport,
}

impl Context<'_> {
    fn say(&self, msg: &str) {
        if !self.opts.quiet {
            eprintln!("{msg}");
        }
    }

    fn note(&mut self, msg: String) {
        self.say(&format!("note: {msg}"));
        self.report.notes.push(msg);
    }

    fn write(&mut self, name: &str, table: &ColumnTable) -> Result<()> {
        let p = self.report.dir.join(name);
        table.write(&p)?;
        self.report.files.push(p);
        Ok(())
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let p = self.report.dir.join(name);
        fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        self.report.files.push(p);
        Ok(())
    }

    fn check_budget(&self, points: &[(LatticeSpec, f64)]) -> Result<()> {
        let est = estimate_core_hours(&self.store, self.config, points, self.opts.force)?;
        self.say(&format!(
            "estimated cost: {est:.2} core-hours for {} lattice points",
            points.len()
        ));
        if est > self.opts.budget_core_hours && !self.opts.allow_long {
            return Err(Error::BudgetExceeded {
                estimated: est,
                limit: self.opts.budget_core_hours,
            });
        }
        Ok(())
    }

    fn simulate(&mut self, points: &[(LatticeSpec, f64)]) -> Result<Vec<PointResult>> {
        self.check_budget(points)?;
        let sim = point_simulation(self.config);
        let mut out = Vec::with_capacity(points.len());
        for (i, (spec, alpha)) in points.iter().enumerate() {
            let slot = self
                .store
                .slot("points", &point_key(spec, *alpha, &sim), self.opts.force)?;
            let path = slot.path("series.dat");
            let label = format!(
                "[{}/{}] {} L={} a_Z={} alpha={}",
                i + 1,
                points.len(),
                spec.geometry.name(),
                spec.l,
                spec.a_z,
                alpha
            );
            let start = Instant::now();
            let cached = slot.is_complete() && path.exists();
            let series = if cached {
                self.report.cached += 1;
                ObservableSeries::from_table(&ColumnTable::read(&path)?, spec.sites_per_layer())?
            } else {
                self.say(&format!("{label}: running {} trajectories", sim.n_traj));
                let pos = build_lattice(spec)?;
                let couplings = coupling_matrix(&pos, *alpha, spec.boundary)?;
                let series = run_ensemble(&pos, &couplings, &sim)?;
                series.to_table(&slot.hash, sim.seed).write(&path)?;
                slot.mark_complete()?;
                self.report.computed += 1;
                series
            };
            let wall = start.elapsed().as_secs_f64();
            if !cached {
                self.say(&format!("{label}: done in {wall:.1} s"));
            }
            let note = (series.n_failed > 0).then(|| format!("{} trajectories dropped", series.n_failed));
            self.store.record(&ManifestRecord {
                config_hash: slot.hash.clone(),
                kind: "point".into(),
                seed: sim.seed,
                output: path.clone(),
                wall_seconds: wall,
                version: VERSION.into(),
                cached,
                note,
            })?;
            let minimum = squeezing_minimum(&series);
            out.push(PointResult {
                spec: spec.clone(),
                alpha: *alpha,
                series_path: path,
                series,
                minimum,
                cached,
            });
        }
        Ok(out)
    }

    fn write_minima(&mut self, results: &[PointResult]) -> Result<()> {
        let mut minima = ColumnTable::with_columns(&[
            "N",
            "L",
            "a_Z",
            "aspect_ratio",
            "alpha",
            "d",
            "VarMin",
            "VarMinErr",
            "t_min",
            "converged",
        ]);
        let mut manifest = String::from("file N L a_Z alpha d\n");
        for r in results {
            let m = &r.minimum;
            minima.push_row(vec![
                r.series.n_per_layer as f64,
                r.spec.l as f64,
                r.spec.a_z,
                r.spec.aspect_ratio(),
                r.alpha,
                r.spec.d as f64,
                m.var_min.value,
                m.var_min.err,
                m.t_min,
                if m.converged { 1.0 } else { 0.0 },
            ]);
            let rel = relative_to(&r.series_path, &self.report.dir);
            manifest.push_str(&format!(
                "{} {} {} {} {} {}\n",
                rel.display(),
                r.series.n_per_layer,
                r.spec.l,
                r.spec.a_z,
                r.alpha,
                r.spec.d
            ));
            if !m.converged {
                let msg = format!(
                    "no interior minimum for L={} a_Z={} alpha={}",
                    r.spec.l, r.spec.a_z, r.alpha
                );
                self.note(msg);
            }
        }
        self.write("minima.dat", &minima)?;
        self.write_text("series.manifest", &manifest)
    }
}

fn relative_to(path: &Path, base: &Path) -> PathBuf {
    // both live under the same output root, one level below it
    match (path.strip_prefix(base.parent().unwrap_or(base)), base.parent()) {
        (Ok(rest), Some(_)) => Path::new("..").join(rest),
        _ => path.to_path_buf(),
    }
}

/// Runs one experiment, writes its tables and plot data and returns a summary.
pub fn run(config: &RunConfig, opts: &RunOptions) -> Result<RunReport> {
    config.validate()?;
    let store = RunStore::open(&opts.out)?;
    let hash = config.hash();
    let dir = opts.out.join(format!("{}-{}", config.kind.name(), &hash[..16]));
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let cfg_path = dir.join("config.toml");
    fs::write(&cfg_path, config.to_toml()).map_err(|e| Error::io(&cfg_path, e))?;
    let mut ctx = Context {
        store,
        config,
        opts,
        report: RunReport {
            kind: config.kind.name().into(),
            config_hash: hash.clone(),
            dir: dir.clone(),
            files: vec![cfg_path],
            ..Default::default()
        },
    };
    let start = Instant::now();
    let summary = match config.kind {
        ExperimentKind::Simulate => run_simulate(&mut ctx)?,
        ExperimentKind::Bogoliubov => run_bogoliubov(&mut ctx)?,
        ExperimentKind::Exact => run_exact(&mut ctx)?,
        ExperimentKind::Collapse => run_collapse(&mut ctx)?,
        ExperimentKind::PhaseDiagram => run_phase_diagram(&mut ctx)?,
        ExperimentKind::FixedSpacing => run_fixed_spacing(&mut ctx)?,
    };
    let mut text = format!(
        "kind = {}\nconfig_hash = {}\nseed = {}\n",
        config.kind.name(),
        hash,
        config.seed
    );
    text.push_str(&summary);
    for n in &ctx.report.notes {
        text.push_str(&format!("note = {n}\n"));
    }
    ctx.write_text("report.txt", &text)?;
    ctx.report.summary = text;
    if let Ok(files) = emit_plotdata(&dir) {
        ctx.report.files.extend(files);
    }
    ctx.store.record(&ManifestRecord {
        config_hash: hash,
        kind: config.kind.name().into(),
        seed: config.seed,
        output: dir,
        wall_seconds: start.elapsed().as_secs_f64(),
        version: VERSION.into(),
        cached: ctx.report.computed == 0,
        note: None,
    })?;
    Ok(ctx.report)
}

fn run_simulate(ctx: &mut Context) -> Result<String> {
    let points = ctx.config.lattice_points();
    let results = ctx.simulate(&points)?;
    ctx.write_minima(&results)?;
    Ok(format!(
        "points = {}\ncomputed = {}\ncached = {}\n",
        results.len(),
        ctx.report.computed,
        ctx.report.cached
    ))
}

fn separations(sweep: &LatticeSweep, l: usize) -> Vec<f64> {
    let mut v = sweep.a_z.clone();
    v.extend(sweep.aspect_ratio.iter().map(|r| r * l as f64));
    v
}

fn run_bogoliubov(ctx: &mut Context) -> Result<String> {
    let cfg = ctx.config;
    let mut transition = ColumnTable::with_columns(&["alpha", "L", "d", "aspect_ratio_star"]);
    let mut modes = ColumnTable::with_columns(&["alpha", "L", "d", "aspect_ratio", "n_unstable", "kcL", "Gamma0"]);
    let mut summary = String::new();
    for &g in &cfg.lattice.geometry {
        for &alpha in &cfg.alpha {
            for &l in &cfg.lattice.l {
                let d = g.dimension() as f64;
                match critical_aspect_ratio_for(g, alpha, l) {
                    Ok(tp) => {
                        transition.push_row(vec![alpha, l as f64, d, tp.aspect_ratio]);
                        summary.push_str(&format!(
                            "aspect_ratio_star[{} alpha={alpha} L={l}] = {:.6}\n",
                            g.name(),
                            tp.aspect_ratio
                        ));
                    }
                    Err(e @ (Error::NoTransition(_) | Error::UnsupportedGeometry(_))) => {
                        transition.push_row(vec![alpha, l as f64, d, f64::NAN]);
                        ctx.note(format!("{} alpha={alpha} L={l}: {e}", g.name()));
                    }
                    Err(e) => return Err(e),
                }
                for a_z in separations(&cfg.lattice, l) {
                    let spec = LatticeSpec::new(g, l, a_z).with_boundary(Boundary::Periodic);
                    let pos = build_lattice(&spec)?;
                    let c = coupling_matrix_with_limit(&pos, alpha, Boundary::Periodic, 0)?;
                    let spectrum = match fourier_couplings(&c) {
                        Ok(s) => s,
                        Err(e @ Error::UnsupportedGeometry(_)) => {
                            ctx.note(e.to_string());
                            break;
                        }
                        Err(e) => return Err(e),
                    };
                    let m = classify_modes(&spectrum);
                    modes.push_row(vec![
                        alpha,
                        l as f64,
                        d,
                        spec.aspect_ratio(),
                        m.unstable.len() as f64,
                        m.k_c * l as f64,
                        spectrum.gamma[0],
                    ]);
                }
            }
        }
    }
    ctx.write("transition.dat", &transition)?;
    if !modes.rows.is_empty() {
        ctx.write("modes.dat", &modes)?;
    }
    Ok(summary)
}

fn run_exact(ctx: &mut Context) -> Result<String> {
    let cfg = ctx.config;
    let mut table = ColumnTable::with_columns(&["S", "r", "min_variance", "normalized", "t_min", "converged"]);
    let mut summary = String::new();
    for &r in &cfg.exact.r {
        let mut pts = Vec::new();
        for &s in &cfg.exact.spins {
            let start = Instant::now();
            let m = minimal_variance(s, r)?;
            ctx.say(&format!(
                "S={s} r={r}: min variance {:.6e} at t={:.4} ({:.1} s)",
                m.min_variance,
                m.t_min,
                start.elapsed().as_secs_f64()
            ));
            if !m.converged {
                ctx.note(format!("S={s} r={r}: minimum not bracketed"));
            }
            let normalized = m.min_variance / (s / 2.0);
            table.push_row(vec![
                s,
                r,
                m.min_variance,
                normalized,
                m.t_min,
                if m.converged { 1.0 } else { 0.0 },
            ]);
            pts.push((s, normalized, 0.0));
        }
        if pts.len() >= 2 {
            let e = scaling::power_law_fit("slope", &pts, 2)?;
            summary.push_str(&format!("slope[r={r}] = {:.4}\n", e.value));
            ctx.report.estimates.push(ExponentEstimate {
                name: format!("slope_r{r}"),
                ..e
            });
        }
    }
    ctx.write("minima.dat", &table)?;
    Ok(summary)
}

fn group_by_alpha(points: Vec<MinVariancePoint>) -> Vec<(f64, Vec<MinVariancePoint>)> {
    let mut groups: Vec<(f64, Vec<MinVariancePoint>)> = Vec::new();
    for p in points {
        match groups.iter_mut().find(|g| g.0 == p.entry.alpha) {
            Some(g) => g.1.push(p),
            None => groups.push((p.entry.alpha, vec![p])),
        }
    }
    groups
}

fn estimate_err(e: Estimate) -> f64 {
    if e.err > 0.0 {
        e.err
    } else {
        0.04 * e.value.abs()
    }
}

/// `Var_min` against `a_Z / L`, one curve per size.
fn aspect_ratio_dataset(points: &[MinVariancePoint], alpha: f64, d: usize) -> ScalingDataset {
    let mut sizes: Vec<usize> = points.iter().map(|p| p.entry.n).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let curves = sizes
        .iter()
        .filter_map(|&n| {
            let mut pts: Vec<&MinVariancePoint> = points.iter().filter(|p| p.entry.n == n && p.converged).collect();
            pts.sort_by(|a, b| a.aspect_ratio().total_cmp(&b.aspect_ratio()));
            pts.dedup_by(|a, b| a.aspect_ratio() == b.aspect_ratio());
            (pts.len() >= 2).then(|| {
                Curve::with_errors(
                    n as f64,
                    0.0,
                    pts.iter().map(|p| p.aspect_ratio()).collect(),
                    pts.iter().map(|p| p.var_min.value).collect(),
                    pts.iter().map(|p| estimate_err(p.var_min)).collect(),
                )
            })
        })
        .collect();
    ScalingDataset::new("VarMin", alpha, d, curves)
}

fn time_curve(p: &MinVariancePoint) -> Result<Curve> {
    let series = ObservableSeries::from_table(&ColumnTable::read(&p.entry.file)?, p.entry.n)?;
    let x = series.t.iter().map(|t| t - p.t_min).collect();
    let y = series.var_minus.iter().map(|v| v.value).collect();
    let err = series.var_minus.iter().map(|v| estimate_err(*v)).collect();
    Ok(Curve::with_errors(p.entry.n as f64, p.entry.a_z, x, y, err))
}

fn axis(name: &str, r: [f64; 2]) -> Axis {
    Axis::new(name, r[0], r[1])
}

fn collapse_header(table: &mut ColumnTable, estimates: &[&ExponentEstimate]) {
    for e in estimates {
        table
            .comments
            .push(format!("{} = {} +- {}", e.name, e.value, e.uncertainty));
    }
}

fn run_collapse(ctx: &mut Context) -> Result<String> {
    let cfg = ctx.config;
    let points = match &cfg.collapse.manifest {
        Some(path) => scaling::min_variance_points(&scaling::load_manifest(path)?)?,
        None => {
            let results = ctx.simulate(&cfg.lattice_points())?;
            ctx.write_minima(&results)?;
            results.iter().map(|r| r.min_point()).collect()
        }
    };
    let mut summary = String::new();
    for (alpha, group) in group_by_alpha(points) {
        let d = group[0].entry.d;
        let min_l = cfg.collapse.min_l.unwrap_or(default_min_linear_size(d));
        let group: Vec<MinVariancePoint> = group.into_iter().filter(|p| p.entry.l >= min_l).collect();
        let ds = aspect_ratio_dataset(&group, alpha, d);
        let tag = format!("alpha={alpha}");
        let pe = match extract_p(&ds, cfg.collapse.threshold, axis("p", cfg.collapse.p_range)) {
            Ok(pe) => pe,
            Err(e) => {
                ctx.note(format!("{tag}: size exponent not extracted: {e}"));
                continue;
            }
        };
        summary.push_str(&scaling::report_lines(&[&pe.p]).replace("p =", &format!("p[{tag}] =")));
        let mut pt = ColumnTable::with_columns(&["N", "aspect_ratio", "VarMin_scaled", "err_scaled"]);
        collapse_header(&mut pt, &[&pe.p]);
        for c in &pe.kept {
            let s = c.size.powf(-pe.p.value);
            for j in 0..c.len() {
                pt.push_row(vec![c.size, c.x[j], c.y[j] * s, c.err[j] * s]);
            }
        }
        ctx.write(&format!("collapse_p_alpha{alpha}.dat"), &pt)?;
        ctx.report.estimates.push(pe.p.clone());

        // time collapse at the largest size over the partially collective separations
        let n_max = pe.kept.iter().map(|c| c.size).fold(0.0, f64::max);
        let in_kept = |p: &MinVariancePoint| {
            pe.kept
                .iter()
                .any(|c| c.size == p.entry.n as f64 && c.x.iter().any(|&x| x == p.aspect_ratio()))
        };
        let partial: Vec<&MinVariancePoint> = group.iter().filter(|p| in_kept(p)).collect();
        let mut largest = Vec::new();
        for p in partial.iter().filter(|p| p.entry.n as f64 == n_max) {
            largest.push(time_curve(p)?);
        }
        let tc = ScalingDataset::new("VarMinus", alpha, d, largest);
        let time = match collapse_time_curves(
            &tc,
            axis("d_V", cfg.collapse.d_v_range),
            axis("d_tau", cfg.collapse.d_tau_range),
        ) {
            Ok(t) => t,
            Err(e) => {
                ctx.note(format!("{tag}: time collapse skipped: {e}"));
                continue;
            }
        };
        summary.push_str(&scaling::report_lines(&[&time.d_v, &time.d_tau]).replace(" =", &format!("[{tag}] =")));
        let mut tt = time.master.to_table();
        collapse_header(&mut tt, &[&time.d_v, &time.d_tau]);
        ctx.write(&format!("collapse_time_alpha{alpha}.dat"), &tt)?;
        ctx.report.estimates.push(time.d_v.clone());
        ctx.report.estimates.push(time.d_tau.clone());

        let mut all = Vec::new();
        for p in &partial {
            all.push(time_curve(p)?);
        }
        let full_ds = ScalingDataset::new("VarMinus", alpha, d, all);
        let fixed = FixedExponents {
            d,
            p: pe.p.value,
            p_err: pe.p.uncertainty,
            d_v: time.d_v.value,
            d_v_err: time.d_v.uncertainty,
            d_tau: time.d_tau.value,
        };
        match collapse_full(&full_ds, fixed, axis("delta", cfg.collapse.delta_range)) {
            Ok(full) => {
                summary.push_str(&scaling::report_lines(&[&full.delta, &full.nu]).replace(" =", &format!("[{tag}] =")));
                let mut ft = full.master.to_table();
                collapse_header(&mut ft, &[&full.delta, &full.nu]);
                ctx.write(&format!("collapse_full_alpha{alpha}.dat"), &ft)?;
                ctx.report.estimates.push(full.delta);
                ctx.report.estimates.push(full.nu);
            }
            Err(e) => ctx.note(format!("{tag}: full collapse skipped: {e}")),
        }
    }
    Ok(summary)
}

/// `p` at fixed aspect ratio from a log-log fit of `Var_min` against `N`.
fn p_at_fixed_ratio(results: &[&PointResult]) -> Result<ExponentEstimate> {
    let pts: Vec<(f64, f64, f64)> = results
        .iter()
        .filter(|r| r.minimum.converged)
        .map(|r| {
            (
                r.series.n_per_layer as f64,
                r.minimum.var_min.value,
                r.minimum.var_min.err,
            )
        })
        .collect();
    scaling::power_law_fit("p", &pts, 3)
}

fn run_phase_diagram(ctx: &mut Context) -> Result<String> {
    let cfg = ctx.config;
    let points = cfg.lattice_points();
    let results = ctx.simulate(&points)?;
    ctx.write_minima(&results)?;
    let mut sweep_table = ColumnTable::with_columns(&["alpha", "aspect_ratio", "p", "p_err"]);
    let mut diagram = ColumnTable::with_columns(&["alpha", "dtwa_star", "dtwa_resolution", "bogoliubov_star"]);
    let mut summary = String::new();
    for &g in &cfg.lattice.geometry {
        for &alpha in &cfg.alpha {
            let mut sweep = Vec::new();
            for &ratio in &cfg.lattice.aspect_ratio {
                let at: Vec<&PointResult> = results
                    .iter()
                    .filter(|r| {
                        r.spec.geometry == g && r.alpha == alpha && (r.spec.aspect_ratio() - ratio).abs() < 1e-12
                    })
                    .collect();
                match p_at_fixed_ratio(&at) {
                    Ok(p) => {
                        sweep_table.push_row(vec![alpha, ratio, p.value, p.uncertainty]);
                        sweep.push(SweepPoint {
                            aspect_ratio: ratio,
                            p: p.value,
                            uncertainty: p.uncertainty,
                        });
                    }
                    Err(e) => ctx.note(format!("{} alpha={alpha} a_Z/L={ratio}: {e}", g.name())),
                }
            }
            let (star, res) = match detect_transition(&sweep) {
                Ok(t) => (t.aspect_ratio, t.resolution),
                Err(e) => {
                    ctx.note(format!("{} alpha={alpha}: dTWA {e}", g.name()));
                    (f64::NAN, f64::NAN)
                }
            };
            let l_max = *cfg.lattice.l.iter().max().expect("validated");
            let bog = match critical_aspect_ratio_for(g, alpha, l_max) {
                Ok(t) => t.aspect_ratio,
                Err(e @ (Error::NoTransition(_) | Error::UnsupportedGeometry(_))) => {
                    ctx.note(format!("{} alpha={alpha}: Bogoliubov {e}", g.name()));
                    f64::NAN
                }
                Err(e) => return Err(e),
            };
            diagram.push_row(vec![alpha, star, res, bog]);
            summary.push_str(&format!(
                "aspect_ratio_star[{} alpha={alpha}] = dtwa {star:.4} (+- {res:.4}), bogoliubov {bog:.4}\n",
                g.name()
            ));
        }
    }
    ctx.write("p_sweep.dat", &sweep_table)?;
    ctx.write("phase_diagram.dat", &diagram)?;
    Ok(summary)
}

fn run_fixed_spacing(ctx: &mut Context) -> Result<String> {
    let cfg = ctx.config;
    let results = ctx.simulate(&cfg.lattice_points())?;
    ctx.write_minima(&results)?;
    let mut table = ColumnTable::with_columns(&["alpha", "a_Z", "mu", "mu_err"]);
    let mut summary = String::new();
    let geometries: Vec<Geometry> = cfg.lattice.geometry.clone();
    for g in geometries {
        for &alpha in &cfg.alpha {
            for &a_z in &cfg.lattice.a_z {
                let pts: Vec<(f64, f64, f64)> = results
                    .iter()
                    .filter(|r| r.spec.geometry == g && r.alpha == alpha && r.spec.a_z == a_z && r.minimum.converged)
                    .map(|r| {
                        (
                            r.series.n_per_layer as f64,
                            r.minimum.var_min.value,
                            r.minimum.var_min.err,
                        )
                    })
                    .collect();
                match fixed_spacing_exponent(&pts) {
                    Ok(mu) => {
                        table.push_row(vec![alpha, a_z, mu.value, mu.uncertainty]);
                        summary.push_str(&format!(
                            "mu[{} alpha={alpha} a_Z={a_z}] = {:.4} +- {:.4}\n",
                            g.name(),
                            mu.value,
                            mu.uncertainty
                        ));
                        ctx.report.estimates.push(ExponentEstimate {
                            name: format!("mu_alpha{alpha}"),
                            ..mu
                        });
                    }
                    Err(e) => ctx.note(format!("{} alpha={alpha} a_Z={a_z}: {e}", g.name())),
                }
            }
        }
    }
    ctx.write("fixed_spacing.dat", &table)?;
    Ok(summary)
}
