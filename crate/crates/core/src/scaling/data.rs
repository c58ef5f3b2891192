//! Reading ensemble outputs listed in a manifest.
//!
//! A manifest is a whitespace-separated text file with the header
//! `file N L a_Z alpha d`; `#` starts a comment. Relative file names resolve against
//! the manifest's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dtwa::{squeezing_minimum, Estimate, ObservableSeries};
use crate::error::{Error, Result};
use crate::io::ColumnTable;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: PathBuf,
    pub n: usize,
    pub l: usize,
    pub a_z: f64,
    pub alpha: f64,
    pub d: usize,
}

const HEADER: [&str; 6] = ["file", "N", "L", "a_Z", "alpha", "d"];

pub fn load_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let bad = |line: usize, msg: &str| Error::InvalidDataset(format!("{}:{line}: {msg}", path.display()));
    let mut header_seen = false;
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if !header_seen {
            if fields != HEADER {
                return Err(bad(k + 1, "expected header `file N L a_Z alpha d`"));
            }
            header_seen = true;
            continue;
        }
        if fields.len() != 6 {
            return Err(bad(k + 1, "expected 6 fields"));
        }
        let num = |i: usize| fields[i].parse::<f64>().map_err(|_| bad(k + 1, "unparsable number"));
        let int = |i: usize| fields[i].parse::<usize>().map_err(|_| bad(k + 1, "unparsable integer"));
        let file = Path::new(fields[0]);
        out.push(ManifestEntry {
            file: if file.is_absolute() {
                file.to_path_buf()
            } else {
                base.join(file)
            },
            n: int(1)?,
            l: int(2)?,
            a_z: num(3)?,
            alpha: num(4)?,
            d: int(5)?,
        });
    }
    Ok(out)
}

/// Squeezing minimum of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinVariancePoint {
    pub entry: ManifestEntry,
    pub var_min: Estimate,
    pub t_min: f64,
    pub converged: bool,
}

impl MinVariancePoint {
    pub fn aspect_ratio(&self) -> f64 {
        self.entry.a_z / self.entry.l as f64
    }
}

/// Reads every listed series and locates its squeezing minimum.
pub fn min_variance_points(entries: &[ManifestEntry]) -> Result<Vec<MinVariancePoint>> {
    entries
        .iter()
        .map(|e| {
            let table = ColumnTable::read(&e.file)?;
            let series = ObservableSeries::from_table(&table, e.n)?;
            let m = squeezing_minimum(&series);
            Ok(MinVariancePoint {
                entry: e.clone(),
                var_min: m.var_min,
                t_min: m.t_min,
                converged: m.converged,
            })
        })
        .collect()
}
