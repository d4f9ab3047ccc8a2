//! Column-wise comparison of run artifacts.

use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use synclab_core::phase::wrap_pi;

use crate::{CliError, Manifest, MANIFEST};

#[derive(Debug, Clone, Serialize)]
pub struct ColumnDiff {
    pub name: String,
    pub max_abs_diff: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FileDiff {
    pub path: String,
    pub rows: usize,
    pub columns: Vec<ColumnDiff>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub tol: f64,
    pub pass: bool,
    pub files: Vec<FileDiff>,
}

/// Angle-valued columns are compared modulo 2π.
fn is_angle(name: &str) -> bool {
    name.starts_with("theta_") || name == "chi" || name == "psi"
}

fn cell_diff(a: &str, b: &str, angle: bool) -> f64 {
    if a == b {
        return 0.0;
    }
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) if x.is_finite() && y.is_finite() => {
            if angle {
                wrap_pi(x - y).abs()
            } else {
                (x - y).abs()
            }
        }
        (Ok(x), Ok(y)) if x == y || (x.is_nan() && y.is_nan()) => 0.0,
        _ => f64::INFINITY,
    }
}

/// Compares two CSV documents; `label` names them in errors.
pub fn compare_csv(label: &str, a: &str, b: &str, tol: f64) -> Result<FileDiff, CliError> {
    let (mut la, mut lb) = (a.lines(), b.lines());
    let (ha, hb) = (la.next().unwrap_or_default(), lb.next().unwrap_or_default());
    if ha != hb {
        return Err(CliError::Incomparable(format!("{label}: headers differ ({ha:?} vs {hb:?})")));
    }
    let names: Vec<&str> = ha.split(',').collect();
    let (ra, rb): (Vec<&str>, Vec<&str>) = (la.collect(), lb.collect());
    if ra.len() != rb.len() {
        return Err(CliError::Incomparable(format!("{label}: {} vs {} rows", ra.len(), rb.len())));
    }
    let angle: Vec<bool> = names.iter().map(|n| is_angle(n)).collect();
    let mut worst = vec![0.0f64; names.len()];
    for (i, (x, y)) in ra.iter().zip(&rb).enumerate() {
        let (cx, cy): (Vec<&str>, Vec<&str>) = (x.split(',').collect(), y.split(',').collect());
        if cx.len() != names.len() || cy.len() != names.len() {
            return Err(CliError::Incomparable(format!(
                "{label}: row {} has the wrong number of cells",
                i + 2
            )));
        }
        for c in 0..names.len() {
            let d = cell_diff(cx[c], cy[c], angle[c]);
            worst[c] = worst[c].max(if d.is_nan() { f64::INFINITY } else { d });
        }
    }
    let pass = worst.iter().all(|&d| d <= tol);
    Ok(FileDiff {
        path: label.to_string(),
        rows: ra.len(),
        columns: names
            .iter()
            .zip(worst)
            .map(|(n, d)| ColumnDiff {
                name: n.to_string(),
                max_abs_diff: d,
            })
            .collect(),
        pass,
    })
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Resolves a run argument to its manifest path, or `None` for a CSV file.
fn manifest_path(p: &Path) -> Option<PathBuf> {
    if p.is_dir() {
        Some(p.join(MANIFEST))
    } else if p.extension().is_some_and(|e| e == "csv") {
        None
    } else {
        Some(p.to_path_buf())
    }
}

/// Compares two CSV files, or every CSV artifact of two runs. Runs must
/// list the same CSV files; missing files, differing headers or row counts
/// are incomparable.
pub fn compare(a: &Path, b: &Path, tol: f64) -> Result<CompareReport, CliError> {
    if tol.is_nan() || tol < 0.0 {
        return Err(CliError::Usage(format!("--tol must be nonnegative, got {tol}")));
    }
    let files = match (manifest_path(a), manifest_path(b)) {
        (None, None) => vec![compare_csv(&a.display().to_string(), &read(a)?, &read(b)?, tol)?],
        (Some(ma), Some(mb)) => {
            let (fa, fb) = (Manifest::load(&ma)?, Manifest::load(&mb)?);
            let (da, db) = (ma.parent().unwrap_or(Path::new(".")), mb.parent().unwrap_or(Path::new(".")));
            let csv_a: Vec<&str> = fa.files.iter().filter(|f| f.format == "csv").map(|f| f.path.as_str()).collect();
            let csv_b: Vec<&str> = fb.files.iter().filter(|f| f.format == "csv").map(|f| f.path.as_str()).collect();
            let (mut sa, mut sb) = (csv_a.clone(), csv_b);
            sa.sort_unstable();
            sb.sort_unstable();
            if sa != sb {
                return Err(CliError::Incomparable(format!("runs list different CSV files ({sa:?} vs {sb:?})")));
            }
            csv_a
                .iter()
                .map(|f| compare_csv(f, &read(&da.join(f))?, &read(&db.join(f))?, tol))
                .collect::<Result<_, _>>()?
        }
        _ => return Err(CliError::Usage("compare two CSV files or two runs, not one of each".into())),
    };
    Ok(CompareReport {
        tol,
        pass: files.iter().all(|f| f.pass),
        files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles_wrap() {
        let d = compare_csv("x", "t,chi\n0,3.14\n", "t,chi\n0,-3.14\n", 0.01).unwrap();
        assert!(d.pass);
        let d = compare_csv("x", "t,y\n0,3.14\n", "t,y\n0,-3.14\n", 0.01).unwrap();
        assert!(!d.pass);
    }

    #[test]
    fn shape_mismatch_is_incomparable() {
        assert!(matches!(compare_csv("x", "a\n1\n", "b\n1\n", 0.0), Err(CliError::Incomparable(_))));
        assert!(matches!(
            compare_csv("x", "a\n1\n", "a\n1\n2\n", 0.0),
            Err(CliError::Incomparable(_))
        ));
    }

    #[test]
    fn text_cells_must_match() {
        assert!(compare_csv("x", "m\n0;1\n", "m\n0;1\n", 0.0).unwrap().pass);
        assert!(!compare_csv("x", "m\n0;1\n", "m\n0\n", 1e9).unwrap().pass);
    }
}
