//! Plain column files per figure panel, derived from the tables of a run directory.

use std::fs;
use std::path::{Path, PathBuf};

use crate::dtwa::ObservableSeries;
use crate::error::{Error, Result};
use crate::io::ColumnTable;
use crate::scaling::load_manifest;

/// Writes `<run_dir>/plot/*.dat` from whatever the run produced:
///
/// * `series.manifest` -> `fig1a.dat`: `N aspect_ratio t VarMinus VarMinusErr`
/// * `minima.dat` with `aspect_ratio` -> `fig1b.dat`: `N aspect_ratio VarMin VarMinErr`
/// * `modes.dat` -> `figS3.dat`: `L aspect_ratio kcL`
/// * `collapse_*.dat` -> `fig2_*.dat` (rescaled columns, exponents in the header)
/// * `phase_diagram.dat` -> `fig2_phase.dat`
pub fn emit_plotdata(run_dir: &Path) -> Result<Vec<PathBuf>> {
    let plot = run_dir.join("plot");
    let mut written = Vec::new();
    let mut emit = |name: &str, table: ColumnTable| -> Result<()> {
        let p = plot.join(name);
        table.write(&p)?;
        written.push(p);
        Ok(())
    };

    let manifest = run_dir.join("series.manifest");
    if manifest.exists() {
        let mut t = ColumnTable::with_columns(&["N", "aspect_ratio", "t", "VarMinus", "VarMinusErr"]);
        t.comments
            .push("squeezed variance against time, one block per (N, a_Z/L)".into());
        for e in load_manifest(&manifest)? {
            let s = ObservableSeries::from_table(&ColumnTable::read(&e.file)?, e.n)?;
            let ratio = e.a_z / e.l as f64;
            for (t_k, v) in s.t.iter().zip(&s.var_minus) {
                t.push_row(vec![e.n as f64, ratio, *t_k, v.value, v.err]);
            }
        }
        emit("fig1a.dat", t)?;
    }

    let minima = run_dir.join("minima.dat");
    if minima.exists() {
        let m = ColumnTable::read(&minima)?;
        if let (Ok(n), Ok(r), Ok(v), Ok(e)) = (
            m.column("N"),
            m.column("aspect_ratio"),
            m.column("VarMin"),
            m.column("VarMinErr"),
        ) {
            let mut t = ColumnTable::with_columns(&["N", "aspect_ratio", "VarMin", "VarMinErr"]);
            t.comments.push("minimal squeezed variance against N and a_Z/L".into());
            for i in 0..n.len() {
                t.push_row(vec![n[i], r[i], v[i], e[i]]);
            }
            emit("fig1b.dat", t)?;
        }
    }

    let modes = run_dir.join("modes.dat");
    if modes.exists() {
        let m = ColumnTable::read(&modes)?;
        let mut t = ColumnTable::with_columns(&["L", "aspect_ratio", "kcL"]);
        t.comments.push("largest unstable momentum times L".into());
        let (l, r, k) = (m.column("L")?, m.column("aspect_ratio")?, m.column("kcL")?);
        for i in 0..l.len() {
            t.push_row(vec![l[i], r[i], k[i]]);
        }
        emit("figS3.dat", t)?;
    }

    let mut entries: Vec<PathBuf> = fs::read_dir(run_dir)
        .map_err(|e| Error::io(run_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for p in entries {
        let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        if let Some(rest) = name.strip_prefix("collapse_") {
            emit(&format!("fig2_{rest}"), ColumnTable::read(&p)?)?;
        } else if name == "phase_diagram.dat" {
            emit("fig2_phase.dat", ColumnTable::read(&p)?)?;
        }
    }

    if written.is_empty() {
        return Err(Error::MissingInput(format!(
            "{} holds none of series.manifest, minima.dat, modes.dat, collapse_*.dat, phase_diagram.dat",
            run_dir.display()
        )));
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_directory_lists_missing_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let e = emit_plotdata(dir.path()).unwrap_err().to_string();
        assert!(e.contains("series.manifest") && e.contains("modes.dat"), "{e}");
    }

    #[test]
    fn collapse_tables_keep_their_header() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = ColumnTable::with_columns(&["x", "f", "curves"]);
        t.comments.push("d_V = -0.7 +- 0.1".into());
        t.push_row(vec![0.0, 1.0, 2.0]);
        t.write(&dir.path().join("collapse_time_alpha1.5.dat")).unwrap();
        let files = emit_plotdata(dir.path()).unwrap();
        assert_eq!(files.len(), 1);
        let back = ColumnTable::read(&files[0]).unwrap();
        assert_eq!(back.comments, vec!["d_V = -0.7 +- 0.1".to_string()]);
    }
}
