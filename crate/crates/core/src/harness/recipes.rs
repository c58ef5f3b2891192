//! Named experiments as ready-made configs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentKind, RunConfig};
use super::{run, RunOptions, RunReport};
use crate::error::{Error, Result};
use crate::lattice::{Boundary, Geometry};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    #[default]
    Desk,
    Extended,
}

impl FromStr for Scale {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "desk" => Ok(Scale::Desk),
            "extended" => Ok(Scale::Extended),
            _ => Err(format!("unknown scale {s:?} (desk or extended)")),
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Desk => "desk",
            Scale::Extended => "extended",
        })
    }
}

pub const RECIPES: [&str; 5] = ["fig1", "universality", "anisotropy", "fixed-spacing", "bogoliubov"];

fn ratios() -> Vec<f64> {
    vec![0.02, 0.05, 0.08, 0.11, 0.14, 0.17, 0.2, 0.25, 0.3, 0.4]
}

/// Configs making up a named recipe.
pub fn recipe(name: &str, scale: Scale) -> Result<Vec<RunConfig>> {
    let desk = scale == Scale::Desk;
    match name {
        "fig1" => {
            let mut c = RunConfig::new(ExperimentKind::PhaseDiagram);
            if desk {
                c.alpha = vec![1.5];
                c.lattice.l = vec![200, 400, 800];
            } else {
                c.alpha = vec![1.5, 2.0, 2.5, 3.0];
                c.lattice.geometry = vec![Geometry::SquareBilayer];
                c.lattice.l = vec![30, 50, 70, 100];
            }
            c.lattice.aspect_ratio = ratios();
            Ok(vec![c])
        }
        "universality" => Ok([
            Geometry::SquareBilayer,
            Geometry::TriangularBilayer,
            Geometry::HexagonalBilayer,
        ]
        .into_iter()
        .map(|g| {
            let mut c = RunConfig::new(ExperimentKind::Collapse);
            c.alpha = vec![2.0];
            c.lattice.geometry = vec![g];
            c.lattice.l = if desk { vec![8, 12, 16] } else { vec![30, 50, 70, 100] };
            c.lattice.aspect_ratio = ratios();
            if desk {
                c.collapse.min_l = Some(8);
            }
            c
        })
        .collect()),
        "anisotropy" => {
            let mut c = RunConfig::new(ExperimentKind::Exact);
            c.exact.spins = vec![10.0, 20.0, 40.0, 80.0];
            c.exact.r = vec![1.0, 2.0];
            Ok(vec![c])
        }
        "fixed-spacing" => {
            let mut c = RunConfig::new(ExperimentKind::FixedSpacing);
            c.lattice.a_z = vec![2.5];
            if desk {
                c.alpha = vec![0.5, 1.5, 3.0];
                c.lattice.l = vec![25, 50, 100, 200];
            } else {
                c.alpha = vec![1.0, 3.0];
                c.lattice.geometry = vec![Geometry::SquareBilayer];
                c.lattice.l = vec![10, 20, 30, 40, 50];
            }
            Ok(vec![c])
        }
        "bogoliubov" => {
            let mut c = RunConfig::new(ExperimentKind::Bogoliubov);
            c.lattice.boundary = Boundary::Periodic;
            if desk {
                c.alpha = vec![0.4, 1.0, 1.5, 2.0, 3.0];
                c.lattice.l = vec![200, 400, 800];
            } else {
                c.alpha = vec![1.5, 2.0, 2.5, 3.0];
                c.lattice.geometry = vec![Geometry::SquareBilayer, Geometry::TriangularBilayer];
                c.lattice.l = vec![30, 50, 100];
            }
            c.lattice.aspect_ratio = (1..=40).map(|i| 0.01 * i as f64).collect();
            Ok(vec![c])
        }
        _ => Err(Error::InvalidConfig(format!(
            "unknown recipe {name:?}; available: {}",
            RECIPES.join(", ")
        ))),
    }
}

/// Runs every config of a recipe. For `universality` a pairwise consistency report is
/// appended to the last run's summary.
pub fn run_recipe(name: &str, scale: Scale, seed: u64, opts: &RunOptions) -> Result<Vec<RunReport>> {
    let mut reports = Vec::new();
    for mut c in recipe(name, scale)? {
        c.seed = seed;
        reports.push(run(&c, opts)?);
    }
    if name == "universality" {
        let text = consistency_report(&reports);
        let path = opts.out.join(format!("universality-{scale}.txt"));
        std::fs::write(&path, &text).map_err(|e| Error::io(&path, e))?;
        if let Some(last) = reports.last_mut() {
            last.summary.push_str(&text);
            last.files.push(path);
        }
    }
    Ok(reports)
}

/// Pairwise overlap of uncertainty intervals for every exponent two runs share.
pub fn consistency_report(reports: &[RunReport]) -> String {
    let mut out = String::new();
    for i in 0..reports.len() {
        for k in (i + 1)..reports.len() {
            for a in &reports[i].estimates {
                if let Some(b) = reports[k].estimates.iter().find(|b| b.name == a.name) {
                    let overlap = (a.value - b.value).abs() <= a.uncertainty + b.uncertainty;
                    out.push_str(&format!(
                        "{} run {} vs run {}: {:.4} +- {:.4} vs {:.4} +- {:.4} -> {}\n",
                        a.name,
                        &reports[i].config_hash[..8],
                        &reports[k].config_hash[..8],
                        a.value,
                        a.uncertainty,
                        b.value,
                        b.uncertainty,
                        if overlap { "consistent" } else { "inconsistent" }
                    ));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaling::ExponentEstimate;

    #[test]
    fn every_recipe_is_valid() {
        for name in RECIPES {
            for scale in [Scale::Desk, Scale::Extended] {
                for c in recipe(name, scale).unwrap() {
                    c.validate().unwrap();
                }
            }
        }
        assert!(recipe("nope", Scale::Desk).is_err());
    }

    #[test]
    fn single_run_has_empty_consistency_report() {
        let r = RunReport {
            config_hash: "0123456789abcdef".into(),
            estimates: vec![ExponentEstimate {
                name: "p".into(),
                value: 0.2,
                uncertainty: 0.05,
                open_interval: false,
                lambda_min: 1.0,
                grid_step: 0.05,
                grid_sensitivity: None,
            }],
            ..Default::default()
        };
        assert!(consistency_report(&[r.clone()]).is_empty());
        let mut s = r.clone();
        s.config_hash = "fedcba9876543210".into();
        s.estimates[0].value = 0.24;
        assert!(consistency_report(&[r, s]).contains("consistent"));
    }
}
