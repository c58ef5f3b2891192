//! Discrete truncated Wigner sampling of the two-layer spin dynamics.
//!
//! Each trajectory starts from a random corner of the discrete phase space of the
//! polarized product state (layer A up, layer B down) and follows the classical
//! precession `ds_i/dt = B_i x s_i`. Quantum fluctuations are read off as ensemble
//! variances of the collective quadratures
//!
//! * squeezed: `S_A^x - S_B^y` and `S_A^y + S_B^x`
//! * anti-squeezed: `S_A^x + S_B^y` and `S_A^y - S_B^x`
//!
//! (labels follow the sign of the precession equation above; reversing time swaps them).

pub mod integrator;
pub mod kernel;
pub mod stats;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::ColumnTable;
use crate::lattice::{CouplingSet, SitePositions};
pub use integrator::{Dopri5, IntegrationStats, StepControl};
pub use kernel::{FieldWorkspace, ForceKernel, KernelChoice};
pub use stats::{Estimate, PairMoments, ScalarMoments};

/// Trajectories evaluated per parallel batch; rows are merged in index order after each batch.
const CHUNK: usize = 64;

/// Classical spins at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryState {
    pub t: f64,
    /// Layer A sites first, then layer B.
    pub spins: Vec<[f64; 3]>,
}

impl TrajectoryState {
    pub fn per_layer(&self) -> usize {
        self.spins.len() / 2
    }

    fn to_flat(&self) -> Vec<f64> {
        let m = self.spins.len();
        let mut y = vec![0.0; 3 * m];
        for (i, s) in self.spins.iter().enumerate() {
            y[i] = s[0];
            y[m + i] = s[1];
            y[2 * m + i] = s[2];
        }
        y
    }

    fn from_flat(t: f64, y: &[f64]) -> Self {
        let m = y.len() / 3;
        TrajectoryState {
            t,
            spins: (0..m).map(|i| [y[i], y[m + i], y[2 * m + i]]).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub n_traj: usize,
    pub rtol: f64,
    pub atol: f64,
    /// Fixed step size; overrides the adaptive tolerances when set.
    pub dt: Option<f64>,
    /// Final time. When unset, `3 ln N / (N V_avg)` is used and extended up to three
    /// times by 1.5x until the squeezing minimum is bracketed.
    pub t_max: Option<f64>,
    pub n_out: usize,
    pub seed: u64,
    pub kernel: KernelChoice,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            n_traj: 2000,
            rtol: 1e-6,
            atol: 1e-9,
            dt: None,
            t_max: None,
            n_out: 200,
            seed: 0,
            kernel: KernelChoice::Auto,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_traj < 2 {
            return Err(Error::InvalidConfig(format!(
                "n_traj = {} must be at least 2",
                self.n_traj
            )));
        }
        if self.n_out < 2 {
            return Err(Error::InvalidConfig(format!(
                "n_out = {} must be at least 2",
                self.n_out
            )));
        }
        if let Some(t) = self.t_max {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidConfig(format!("t_max = {t} must be positive")));
            }
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidConfig(format!("dt = {dt} must be positive")));
            }
        }
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::InvalidConfig("integrator tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn step_control(&self) -> StepControl {
        match self.dt {
            Some(dt) => StepControl::Fixed { dt },
            None => StepControl::Adaptive {
                rtol: self.rtol,
                atol: self.atol,
            },
        }
    }

    /// Allowed drift of conserved quantities: ten times the relative tolerance.
    pub fn conservation_limit(&self) -> f64 {
        10.0 * self.rtol
    }

    fn grid(&self, t_max: f64) -> Vec<f64> {
        let n = self.n_out;
        (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect()
    }
}

/// `3 ln N / (N V_avg)`: a few e-foldings past the collective squeezing time.
pub fn default_t_max(couplings: &CouplingSet) -> Result<f64> {
    let n = couplings.per_layer() as f64;
    let rate = n * couplings.v_avg;
    if !(rate > 0.0) {
        return Err(Error::InvalidConfig(
            "t_max must be given explicitly when the interlayer coupling vanishes".into(),
        ));
    }
    Ok(3.0 * n.max(2.0).ln() / rate)
}

fn trajectory_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

fn sample_flat(rng: &mut ChaCha8Rng, n: usize, y: &mut [f64]) {
    let m = 2 * n;
    let mut bits = 0u64;
    let mut left = 0;
    let mut coin = || {
        if left == 0 {
            bits = rng.random();
            left = 64;
        }
        left -= 1;
        let b = bits & 1;
        bits >>= 1;
        if b == 1 {
            0.5
        } else {
            -0.5
        }
    };
    for i in 0..m {
        y[i] = coin();
        y[m + i] = coin();
        y[2 * m + i] = if i < n { 0.5 } else { -0.5 };
    }
}

/// Discrete Wigner sample of the initial state (trajectory 0 of the stream for `seed`).
pub fn sample_initial_state(seed: u64, lattice: &SitePositions) -> TrajectoryState {
    trajectory_initial_state(seed, 0, lattice)
}

/// Initial state of trajectory `index` of an ensemble with master seed `seed`.
pub fn trajectory_initial_state(seed: u64, index: u64, lattice: &SitePositions) -> TrajectoryState {
    let n = lattice.per_layer();
    let mut y = vec![0.0; 6 * n];
    sample_flat(&mut trajectory_rng(seed, index), n, &mut y);
    TrajectoryState::from_flat(0.0, &y)
}

/// `ds_i/dt` for every site.
pub fn mean_field_rhs(state: &TrajectoryState, couplings: &CouplingSet) -> Result<Vec<[f64; 3]>> {
    check_size(state, couplings)?;
    let kernel = ForceKernel::new(couplings, KernelChoice::Auto)?;
    let y = state.to_flat();
    let mut dy = vec![0.0; y.len()];
    let mut b = vec![0.0; y.len()];
    kernel.rhs(&y, &mut dy, &mut b, &mut kernel.workspace());
    Ok(TrajectoryState::from_flat(state.t, &dy).spins)
}

/// Classical energy `1/2 sum_i s_i . B_i`.
pub fn classical_energy(state: &TrajectoryState, couplings: &CouplingSet) -> Result<f64> {
    check_size(state, couplings)?;
    let kernel = ForceKernel::new(couplings, KernelChoice::Auto)?;
    let y = state.to_flat();
    let mut b = vec![0.0; y.len()];
    kernel.fields(&y, &mut b, &mut kernel.workspace());
    Ok(kernel.energy_from_fields(&y, &b))
}

fn check_size(state: &TrajectoryState, couplings: &CouplingSet) -> Result<()> {
    if state.spins.len() != couplings.total_sites() {
        return Err(Error::InvalidConfig(format!(
            "state has {} spins but the couplings describe {}",
            state.spins.len(),
            couplings.total_sites()
        )));
    }
    Ok(())
}

/// Largest drifts of the conserved quantities seen along one trajectory.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Drift {
    /// `max |(|s_i|^2 - 3/4)|`.
    pub norm: f64,
    /// `|H(t) - H(0)|` relative to `1/2 sum_i |s_i| |B_i|` at `t = 0`.
    pub energy: f64,
    /// `|M_z(t) - M_z(0)| / N` with `M_z = sum_i s_i^z`.
    pub magnetization: f64,
}

impl Drift {
    fn check(&self, trajectory: u64, limit: f64) -> Result<()> {
        for (quantity, drift) in [
            ("spin length", self.norm),
            ("energy", self.energy),
            ("z-magnetization", self.magnetization),
        ] {
            if !(drift < limit) {
                return Err(Error::ConservationViolated {
                    trajectory,
                    quantity,
                    drift,
                    limit,
                });
            }
        }
        Ok(())
    }
}

struct Scratch {
    solver: Dopri5,
    ws_rhs: FieldWorkspace,
    ws_obs: FieldWorkspace,
    b_rhs: Vec<f64>,
    b_obs: Vec<f64>,
    y: Vec<f64>,
}

impl Scratch {
    fn new(kernel: &ForceKernel) -> Self {
        let dim = 6 * kernel.per_layer();
        Scratch {
            solver: Dopri5::new(dim),
            ws_rhs: kernel.workspace(),
            ws_obs: kernel.workspace(),
            b_rhs: vec![0.0; dim],
            b_obs: vec![0.0; dim],
            y: vec![0.0; dim],
        }
    }
}

/// Integrate the state in `scratch.y` over `grid`, calling `sink(index, y)` at each output.
fn evolve(
    kernel: &ForceKernel,
    scratch: &mut Scratch,
    grid: &[f64],
    control: StepControl,
    trajectory: u64,
    mut sink: impl FnMut(usize, &[f64]),
) -> Result<Drift> {
    let n = kernel.per_layer();
    let m = 2 * n;
    let Scratch {
        solver,
        ws_rhs,
        ws_obs,
        b_rhs,
        b_obs,
        y,
    } = scratch;

    kernel.fields(y, b_obs, ws_obs);
    let h0 = kernel.energy_from_fields(y, b_obs);
    let scale: f64 = (0..m)
        .map(|i| {
            let s = (y[i].powi(2) + y[m + i].powi(2) + y[2 * m + i].powi(2)).sqrt();
            let b = (b_obs[i].powi(2) + b_obs[m + i].powi(2) + b_obs[2 * m + i].powi(2)).sqrt();
            s * b
        })
        .sum::<f64>()
        * 0.5;
    // H is a sum of terms that partly cancel, so H(0) can be arbitrarily small; measure
    // drift against the summed term magnitudes, which bound |H| from above.
    let e_denom = scale;
    let mz0: f64 = y[2 * m..].iter().sum();
    let mut drift = Drift::default();

    let result = solver.integrate(
        |y, dy| kernel.rhs(y, dy, b_rhs, ws_rhs),
        0.0,
        y,
        grid,
        control,
        |i, _, y| {
            for k in 0..m {
                let r2 = y[k] * y[k] + y[m + k] * y[m + k] + y[2 * m + k] * y[2 * m + k];
                drift.norm = drift.norm.max((r2 - 0.75).abs());
            }
            kernel.fields(y, b_obs, ws_obs);
            let h = kernel.energy_from_fields(y, b_obs);
            let de = (h - h0).abs();
            drift.energy = drift.energy.max(if e_denom > 0.0 { de / e_denom } else { de });
            let mz: f64 = y[2 * m..].iter().sum();
            drift.magnetization = drift.magnetization.max((mz - mz0).abs() / n as f64);
            sink(i, y);
        },
    );
    match result {
        Ok(_) => Ok(drift),
        Err(u) => Err(Error::StepUnderflow {
            trajectory,
            t: u.t,
            h: u.h,
        }),
    }
}

/// Integrate a single trajectory and return the states on the output grid.
///
/// Uses `config.t_max`, or the default heuristic window when unset (without extension).
pub fn integrate_trajectory(
    initial: &TrajectoryState,
    couplings: &CouplingSet,
    config: &SimulationConfig,
) -> Result<Vec<TrajectoryState>> {
    config.validate()?;
    check_size(initial, couplings)?;
    let t_max = match config.t_max {
        Some(t) => t,
        None => default_t_max(couplings)?,
    };
    let grid = config.grid(t_max);
    let kernel = ForceKernel::new(couplings, config.kernel)?;
    let mut scratch = Scratch::new(&kernel);
    scratch.y = initial.to_flat();
    let mut out = Vec::with_capacity(grid.len());
    let drift = evolve(&kernel, &mut scratch, &grid, config.step_control(), 0, |i, y| {
        out.push(TrajectoryState::from_flat(grid[i], y))
    })?;
    drift.check(0, config.conservation_limit())?;
    Ok(out)
}

/// Collective quantities recorded per output time: squeezed pair, anti-squeezed pair,
/// polarization `S_A^z - S_B^z` and spin length `|S_A|^2 + |S_B|^2`.
fn collective_row(y: &[f64], n: usize) -> [f64; 6] {
    let m = 2 * n;
    let sum = |r: std::ops::Range<usize>| y[r].iter().sum::<f64>();
    let (ax, bx) = (sum(0..n), sum(n..m));
    let (ay, by) = (sum(m..m + n), sum(m + n..2 * m));
    let (az, bz) = (sum(2 * m..2 * m + n), sum(2 * m + n..3 * m));
    [
        ax - by,
        ay + bx,
        ax + by,
        ay - bx,
        az - bz,
        ax * ax + ay * ay + az * az + bx * bx + by * by + bz * bz,
    ]
}

/// Ensemble estimates on a time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub n_per_layer: usize,
    /// Trajectories that contributed (0 for exact evolution).
    pub n_traj: usize,
    /// Trajectories dropped after a step-size underflow.
    pub n_failed: usize,
    pub t: Vec<f64>,
    /// Average of the two squeezed quadrature variances.
    pub var_minus: Vec<Estimate>,
    pub var_plus: Vec<Estimate>,
    /// `S_A^x - S_B^y` and `S_A^y + S_B^x` separately.
    pub var_minus_pair: [Vec<Estimate>; 2],
    /// `S_A^x + S_B^y` and `S_A^y - S_B^x` separately.
    pub var_plus_pair: [Vec<Estimate>; 2],
    /// `<S_A^z - S_B^z>`, equal to `N` at t = 0.
    pub polarization: Vec<Estimate>,
    /// `<|S_A|^2 + |S_B|^2>`.
    pub spin_length: Vec<Estimate>,
    /// `2N (Delta phi)^2`; `None` where the polarization is compatible with zero.
    pub sensitivity: Vec<Option<Estimate>>,
}

pub const SERIES_COLUMNS: [&str; 11] = [
    "t",
    "VarMinus",
    "VarMinusErr",
    "VarPlus",
    "VarPlusErr",
    "Pol",
    "PolErr",
    "SpinLen",
    "SpinLenErr",
    "Sens",
    "SensErr",
];

impl ObservableSeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Largest `|Var_1 - Var_2| / sqrt(err_1^2 + err_2^2)` over both quadrature pairs.
    pub fn quadrature_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for pair in [&self.var_minus_pair, &self.var_plus_pair] {
            for (a, b) in pair[0].iter().zip(&pair[1]) {
                let e = (a.err * a.err + b.err * b.err).sqrt();
                if e > 0.0 {
                    worst = worst.max((a.value - b.value).abs() / e);
                }
            }
        }
        worst
    }

    pub fn to_table(&self, config_hash: &str, seed: u64) -> ColumnTable {
        let mut table = ColumnTable::new(SERIES_COLUMNS.iter().map(|s| s.to_string()).collect());
        table.comments.push(format!("config_hash={config_hash} seed={seed}"));
        for i in 0..self.len() {
            let sens = self.sensitivity[i].unwrap_or(Estimate::new(f64::NAN, f64::NAN));
            table.rows.push(vec![
                self.t[i],
                self.var_minus[i].value,
                self.var_minus[i].err,
                self.var_plus[i].value,
                self.var_plus[i].err,
                self.polarization[i].value,
                self.polarization[i].err,
                self.spin_length[i].value,
                self.spin_length[i].err,
                sens.value,
                sens.err,
            ]);
        }
        table
    }

    /// Rebuild a series from its column file. Per-quadrature variances are not stored
    /// there, so both members of each pair are set to the reported average.
    pub fn from_table(table: &ColumnTable, n_per_layer: usize) -> Result<Self> {
        let col = |name: &str| table.column(name);
        let (t, vm, vme, vp, vpe, pol, pole, sl, sle, se, see) = (
            col("t")?,
            col("VarMinus")?,
            col("VarMinusErr")?,
            col("VarPlus")?,
            col("VarPlusErr")?,
            col("Pol")?,
            col("PolErr")?,
            col("SpinLen")?,
            col("SpinLenErr")?,
            col("Sens")?,
            col("SensErr")?,
        );
        let zip =
            |v: &[f64], e: &[f64]| -> Vec<Estimate> { v.iter().zip(e).map(|(&a, &b)| Estimate::new(a, b)).collect() };
        let var_minus = zip(&vm, &vme);
        let var_plus = zip(&vp, &vpe);
        Ok(ObservableSeries {
            n_per_layer,
            n_traj: 0,
            n_failed: 0,
            t,
            var_minus_pair: [var_minus.clone(), var_minus.clone()],
            var_plus_pair: [var_plus.clone(), var_plus.clone()],
            var_minus,
            var_plus,
            polarization: zip(&pol, &pole),
            spin_length: zip(&sl, &sle),
            sensitivity: se
                .iter()
                .zip(&see)
                .map(|(&a, &b)| if a.is_nan() { None } else { Some(Estimate::new(a, b)) })
                .collect(),
        })
    }

    /// Assemble a series from exact expectation values (zero error bars).
    pub fn from_exact(
        n_per_layer: usize,
        t: Vec<f64>,
        var_minus_pair: [Vec<f64>; 2],
        var_plus_pair: [Vec<f64>; 2],
        polarization: Vec<f64>,
        spin_length: Vec<f64>,
    ) -> Self {
        let exact = |v: &[f64]| v.iter().map(|&x| Estimate::new(x, 0.0)).collect::<Vec<_>>();
        let avg = |p: &[Vec<f64>; 2]| {
            p[0].iter()
                .zip(&p[1])
                .map(|(a, b)| Estimate::new(0.5 * (a + b), 0.0))
                .collect::<Vec<_>>()
        };
        let mut s = ObservableSeries {
            n_per_layer,
            n_traj: 0,
            n_failed: 0,
            t,
            var_minus: avg(&var_minus_pair),
            var_plus: avg(&var_plus_pair),
            var_minus_pair: [exact(&var_minus_pair[0]), exact(&var_minus_pair[1])],
            var_plus_pair: [exact(&var_plus_pair[0]), exact(&var_plus_pair[1])],
            polarization: exact(&polarization),
            spin_length: exact(&spin_length),
            sensitivity: Vec::new(),
        };
        s.sensitivity = sensitivity_series(&s);
        s
    }
}

/// Run the trajectory ensemble and reduce it to observables.
pub fn run_ensemble(
    lattice: &SitePositions,
    couplings: &CouplingSet,
    config: &SimulationConfig,
) -> Result<ObservableSeries> {
    config.validate()?;
    if lattice.len() != couplings.total_sites() {
        return Err(Error::InvalidConfig(
            "lattice and couplings describe different systems".into(),
        ));
    }
    match config.t_max {
        Some(t_max) => run_window(couplings, config, t_max),
        None => {
            let mut t_max = default_t_max(couplings)?;
            let mut series = run_window(couplings, config, t_max)?;
            for _ in 0..3 {
                if squeezing_minimum(&series).converged {
                    break;
                }
                t_max *= 1.5;
                series = run_window(couplings, config, t_max)?;
            }
            Ok(series)
        }
    }
}

fn run_window(couplings: &CouplingSet, config: &SimulationConfig, t_max: f64) -> Result<ObservableSeries> {
    let n = couplings.per_layer();
    let kernel = ForceKernel::new(couplings, config.kernel)?;
    let grid = config.grid(t_max);
    let control = config.step_control();
    let limit = config.conservation_limit();
    let n_out = grid.len();

    let mut minus: Vec<PairMoments> = vec![PairMoments::default(); n_out];
    let mut plus: Vec<PairMoments> = vec![PairMoments::default(); n_out];
    let mut pol: Vec<ScalarMoments> = vec![ScalarMoments::default(); n_out];
    let mut len: Vec<ScalarMoments> = vec![ScalarMoments::default(); n_out];
    let mut completed = 0;
    let mut failed = 0;

    let mut start = 0;
    while start < config.n_traj {
        let end = (start + CHUNK).min(config.n_traj);
        let rows: Vec<Result<Option<Vec<[f64; 6]>>>> = (start..end)
            .into_par_iter()
            .map_init(
                || Scratch::new(&kernel),
                |scratch, k| {
                    let k = k as u64;
                    sample_flat(&mut trajectory_rng(config.seed, k), n, &mut scratch.y);
                    let mut rows = vec![[0.0; 6]; n_out];
                    match evolve(&kernel, scratch, &grid, control, k, |i, y| {
                        rows[i] = collective_row(y, n)
                    }) {
                        Ok(drift) => {
                            drift.check(k, limit)?;
                            Ok(Some(rows))
                        }
                        Err(Error::StepUnderflow { trajectory, t, h }) => {
                            eprintln!("trajectory {trajectory} dropped: step size {h:e} underflowed at t = {t}");
                            Ok(None)
                        }
                        Err(e) => Err(e),
                    }
                },
            )
            .collect();
        for r in rows {
            match r? {
                Some(rows) => {
                    for (i, row) in rows.iter().enumerate() {
                        minus[i].push(row[0], row[1]);
                        plus[i].push(row[2], row[3]);
                        pol[i].push(row[4]);
                        len[i].push(row[5]);
                    }
                    completed += 1;
                }
                None => failed += 1,
            }
        }
        start = end;
    }
    if completed < 2 {
        return Err(Error::TooFewTrajectories(completed));
    }

    let mut series = ObservableSeries {
        n_per_layer: n,
        n_traj: completed,
        n_failed: failed,
        t: grid,
        var_minus: minus.iter().map(|m| m.mean_variance()).collect(),
        var_plus: plus.iter().map(|m| m.mean_variance()).collect(),
        var_minus_pair: [
            minus.iter().map(|m| m.variance_u()).collect(),
            minus.iter().map(|m| m.variance_v()).collect(),
        ],
        var_plus_pair: [
            plus.iter().map(|m| m.variance_u()).collect(),
            plus.iter().map(|m| m.variance_v()).collect(),
        ],
        polarization: pol.iter().map(|m| m.mean()).collect(),
        spin_length: len.iter().map(|m| m.mean()).collect(),
        sensitivity: Vec::new(),
    };
    series.sensitivity = sensitivity_series(&series);
    Ok(series)
}

/// Location and depth of the squeezed-variance minimum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezingMinimum {
    pub var_min: Estimate,
    pub t_min: f64,
    /// Grid index of the smallest sample.
    pub index: usize,
    /// False when the smallest sample is the last grid point; the values then describe
    /// that point and are not a minimum.
    pub converged: bool,
}

impl SqueezingMinimum {
    pub fn found(&self) -> Option<(Estimate, f64)> {
        self.converged.then_some((self.var_min, self.t_min))
    }
}

/// Grid minimum of `Var[O^-]`, refined by a parabola through the bracketing points.
pub fn squeezing_minimum(series: &ObservableSeries) -> SqueezingMinimum {
    minimum_of(&series.t, &series.var_minus)
}

pub(crate) fn minimum_of(t: &[f64], v: &[Estimate]) -> SqueezingMinimum {
    let mut idx = 0;
    for i in 1..v.len() {
        if v[i].value < v[idx].value {
            idx = i;
        }
    }
    let last = v.len().saturating_sub(1);
    let mut out = SqueezingMinimum {
        var_min: v[idx],
        t_min: t[idx],
        index: idx,
        converged: idx != last,
    };
    if idx > 0 && idx < last {
        let (t0, t1, t2) = (t[idx - 1], t[idx], t[idx + 1]);
        let (y0, y1, y2) = (v[idx - 1].value, v[idx].value, v[idx + 1].value);
        let denom = (t0 - t1) * (t0 - t2) * (t1 - t2);
        let a = (t2 * (y1 - y0) + t1 * (y0 - y2) + t0 * (y2 - y1)) / denom;
        let b = (t2 * t2 * (y0 - y1) + t1 * t1 * (y2 - y0) + t0 * t0 * (y1 - y2)) / denom;
        let c = (t1 * t2 * (t1 - t2) * y0 + t2 * t0 * (t2 - t0) * y1 + t0 * t1 * (t0 - t1) * y2) / denom;
        if a > 0.0 {
            let tv = -b / (2.0 * a);
            if tv > t0 && tv < t2 {
                out.t_min = tv;
                out.var_min.value = (a * tv * tv + b * tv + c).min(y1);
            }
        }
    }
    out
}

/// `2N Var[O^-] / <S_A^z - S_B^z>^2` with first-order error propagation.
pub fn sensitivity_series(series: &ObservableSeries) -> Vec<Option<Estimate>> {
    let n2 = 2.0 * series.n_per_layer as f64;
    series
        .var_minus
        .iter()
        .zip(&series.polarization)
        .map(|(v, p)| {
            if p.value.abs() <= p.err || p.value == 0.0 {
                return None;
            }
            let value = n2 * v.value / (p.value * p.value);
            let rel = ((v.err / v.value).powi(2) + (2.0 * p.err / p.value).powi(2)).sqrt();
            let err = if v.value == 0.0 {
                n2 * v.err / (p.value * p.value)
            } else {
                value.abs() * rel
            };
            Some(Estimate::new(value, err))
        })
        .collect()
}
