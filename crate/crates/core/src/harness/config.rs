//! Run configuration files.
//!
//! A config is a TOML document; unknown keys are rejected. Minimal example:
//!
//! ```toml
//! kind = "simulate"
//! seed = 7
//! alpha = [1.5]
//!
//! [lattice]
//! geometry = ["chain-ladder"]
//! l = [400]
//! a_z = [1.0, 2.0, 3.0]
//!
//! [simulation]
//! n_traj = 2000
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dtwa::SimulationConfig;
use crate::error::{Error, Result};
use crate::lattice::{Boundary, Geometry, LatticeSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Simulate,
    Bogoliubov,
    Exact,
    Collapse,
    PhaseDiagram,
    FixedSpacing,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Bogoliubov => "bogoliubov",
            ExperimentKind::Exact => "exact",
            ExperimentKind::Collapse => "collapse",
            ExperimentKind::PhaseDiagram => "phase-diagram",
            ExperimentKind::FixedSpacing => "fixed-spacing",
        }
    }
}

/// Lattice sweep. Layer separations are the union of `a_z` and `aspect_ratio * l`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeSweep {
    pub geometry: Vec<Geometry>,
    pub boundary: Boundary,
    pub l: Vec<usize>,
    pub a_z: Vec<f64>,
    pub aspect_ratio: Vec<f64>,
}

impl Default for LatticeSweep {
    fn default() -> Self {
        LatticeSweep {
            geometry: vec![Geometry::ChainLadder],
            boundary: Boundary::Open,
            l: Vec::new(),
            a_z: Vec::new(),
            aspect_ratio: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExactSweep {
    /// Collective spin lengths `S` per layer.
    pub spins: Vec<f64>,
    /// XY anisotropy ratios.
    pub r: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollapseSettings {
    /// Manifest of existing series (`file N L a_Z alpha d`). Without it the lattice
    /// sweep is simulated first.
    pub manifest: Option<PathBuf>,
    /// Collectiveness threshold `c` for the size-exponent collapse.
    pub threshold: f64,
    pub p_range: [f64; 2],
    pub d_v_range: [f64; 2],
    pub d_tau_range: [f64; 2],
    pub delta_range: [f64; 2],
    /// Smallest linear size kept; defaults to 200 in 1d and 30 in 2d.
    pub min_l: Option<usize>,
}

impl Default for CollapseSettings {
    fn default() -> Self {
        CollapseSettings {
            manifest: None,
            threshold: 6.0,
            p_range: [-0.5, 1.5],
            d_v_range: [-3.0, 1.0],
            d_tau_range: [-1.0, 2.0],
            delta_range: [-1.0, 5.0],
            min_l: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub lattice: LatticeSweep,
    /// Ensemble settings; its `seed` is replaced by the run seed.
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub exact: ExactSweep,
    #[serde(default)]
    pub collapse: CollapseSettings,
    /// Output directory; not part of the config hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_alpha() -> Vec<f64> {
    vec![1.5]
}

impl RunConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        RunConfig {
            kind,
            seed: 0,
            alpha: default_alpha(),
            lattice: LatticeSweep::default(),
            simulation: SimulationConfig::default(),
            exact: ExactSweep::default(),
            collapse: CollapseSettings::default(),
            output: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let c: RunConfig = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::ConfigParse(m) => Error::ConfigParse(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let empty = |what: &str| Error::InvalidConfig(format!("empty sweep: {what}"));
        let needs_lattice = match self.kind {
            ExperimentKind::Exact => false,
            ExperimentKind::Collapse => self.collapse.manifest.is_none(),
            _ => true,
        };
        if needs_lattice {
            if self.lattice.geometry.is_empty() {
                return Err(empty("lattice.geometry"));
            }
            if self.lattice.l.is_empty() {
                return Err(empty("lattice.l"));
            }
            if self.alpha.is_empty() {
                return Err(empty("alpha"));
            }
            let separations = match self.kind {
                ExperimentKind::PhaseDiagram => self.lattice.aspect_ratio.len(),
                ExperimentKind::Bogoliubov => usize::MAX,
                _ => self.lattice.a_z.len() + self.lattice.aspect_ratio.len(),
            };
            if separations == 0 {
                return Err(empty(if self.kind == ExperimentKind::PhaseDiagram {
                    "lattice.aspect_ratio"
                } else {
                    "lattice.a_z / lattice.aspect_ratio"
                }));
            }
            self.simulation.validate()?;
        }
        if self.kind == ExperimentKind::Exact {
            if self.exact.spins.is_empty() {
                return Err(empty("exact.spins"));
            }
            if self.exact.r.is_empty() {
                return Err(empty("exact.r"));
            }
        }
        if self.kind == ExperimentKind::Collapse && !(4.0..=10.0).contains(&self.collapse.threshold) {
            return Err(Error::InvalidConfig(format!(
                "collapse.threshold = {} outside [4, 10]",
                self.collapse.threshold
            )));
        }
        Ok(())
    }

    /// Every lattice point of the sweep, in a fixed order.
    pub fn lattice_points(&self) -> Vec<(LatticeSpec, f64)> {
        let mut out = Vec::new();
        for &g in &self.lattice.geometry {
            for &alpha in &self.alpha {
                for &l in &self.lattice.l {
                    let mut seps: Vec<f64> = self.lattice.a_z.clone();
                    seps.extend(self.lattice.aspect_ratio.iter().map(|r| r * l as f64));
                    for a_z in seps {
                        out.push((LatticeSpec::new(g, l, a_z).with_boundary(self.lattice.boundary), alpha));
                    }
                }
            }
        }
        out
    }

    /// SHA-256 of the canonical JSON form (output directory excluded).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        content_hash(&canonical_json(&c))
    }
}

pub(crate) fn canonical_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("config serializes")
}

pub(crate) fn content_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}
