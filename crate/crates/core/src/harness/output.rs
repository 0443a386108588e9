//! CSV emission. Every file starts with a header row; floats use the
//! shortest representation that round-trips, so identical runs produce
//! identical bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::experiments::{DeflectionOutcome, DeflectionRow, StoppingComparison, ValidationRow};
use super::roc::RocCurve;
use crate::error::Result;

pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_roc<W: Write + ?Sized>(out: &mut W, curve: &RocCurve) -> Result<()> {
    writeln!(out, "threshold,pfa,pd")?;
    for p in &curve.points {
        writeln!(
            out,
            "{},{},{}",
            fmt_f64(p.threshold),
            fmt_f64(p.pfa),
            fmt_f64(p.pd)
        )?;
    }
    Ok(())
}

pub fn write_roc_file(path: &Path, curve: &RocCurve) -> Result<()> {
    let mut f = create(path)?;
    write_roc(&mut f, curve)?;
    f.flush()?;
    Ok(())
}

pub fn write_deflection<W: Write + ?Sized>(out: &mut W, rows: &[DeflectionRow]) -> Result<()> {
    writeln!(out, "w,gamma,delta_h0,delta_h1")?;
    for r in rows {
        let (d0, d1) = match r.outcome {
            DeflectionOutcome::Value(d) => (fmt_f64(d.delta_h0), fmt_f64(d.delta_h1)),
            DeflectionOutcome::Diverged => ("diverged".into(), "diverged".into()),
            DeflectionOutcome::Degenerate => ("degenerate".into(), "degenerate".into()),
        };
        writeln!(out, "{},{},{d0},{d1}", fmt_f64(r.w), fmt_f64(r.gamma))?;
    }
    Ok(())
}

pub fn write_deflection_file(path: &Path, rows: &[DeflectionRow]) -> Result<()> {
    let mut f = create(path)?;
    write_deflection(&mut f, rows)?;
    f.flush()?;
    Ok(())
}

pub fn write_validation<W: Write + ?Sized>(out: &mut W, rows: &[ValidationRow]) -> Result<()> {
    writeln!(out, "agent,quantity,closed_form,mc_estimate,se,pass")?;
    for r in rows {
        let cf = r
            .closed_form
            .map_or_else(|| "diverged".to_string(), fmt_f64);
        writeln!(
            out,
            "{},{},{cf},{},{},{}",
            r.agent,
            r.quantity,
            fmt_f64(r.mc_estimate),
            fmt_f64(r.se),
            r.pass
        )?;
    }
    Ok(())
}

pub fn write_validation_file(path: &Path, rows: &[ValidationRow]) -> Result<()> {
    let mut f = create(path)?;
    write_validation(&mut f, rows)?;
    f.flush()?;
    Ok(())
}

pub fn write_comparison_summary<W: Write + ?Sized>(
    out: &mut W,
    cmp: &StoppingComparison,
) -> Result<()> {
    writeln!(out, "stopping,mean_tau,auc,auc_se")?;
    for arm in [&cmp.first, &cmp.second] {
        writeln!(
            out,
            "\"{}\",{},{},{}",
            arm.label,
            fmt_f64(arm.mean_tau),
            fmt_f64(arm.curve.auc),
            fmt_f64(arm.curve.auc_se())
        )?;
    }
    Ok(())
}

/// `dir/stem_suffix.ext` next to `path`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = path
        .extension()
        .map(|e| e.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    path.with_file_name(format!("{stem}_{suffix}.{ext}"))
}

/// Writes both ROC curves and a summary next to `path`.
pub fn write_comparison_files(path: &Path, cmp: &StoppingComparison) -> Result<Vec<PathBuf>> {
    let first = sibling(path, "geometric");
    let second = sibling(path, "poisson");
    let summary = sibling(path, "summary");
    write_roc_file(&first, &cmp.first.curve)?;
    write_roc_file(&second, &cmp.second.curve)?;
    let mut f = create(&summary)?;
    write_comparison_summary(&mut f, cmp)?;
    f.flush()?;
    Ok(vec![first, second, summary])
}
