use anyhow::{bail, Context, Result};
use pspline::io::{read_json, IoError, MeshFile, PsFile, SplineFile};
use pspline::{Point2, PsRefinement, RefineOptions, SplitStrategy};
use serde::Deserialize;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Reads a ps.json as is, or refines a plain mesh.json with `split`.
pub fn load_refinement(path: &Path, split: SplitStrategy) -> Result<PsRefinement> {
    let value: serde_json::Value = read_json(path)?;
    let ps = if value.get("split_points").is_some() {
        let file: PsFile = serde_json::from_value(value).map_err(IoError::from)?;
        file.to_refinement()?
    } else {
        let file: MeshFile = serde_json::from_value(value).map_err(IoError::from)?;
        PsRefinement::new(file.to_mesh()?, &RefineOptions::with_strategy(split))?
    };
    Ok(ps)
}

pub fn load_spline(path: &Path) -> Result<(SplineFile, PsRefinement)> {
    let file: SplineFile = read_json(path)?;
    let ps = file
        .mesh
        .to_refinement()
        .with_context(|| format!("{}: embedded mesh", path.display()))?;
    Ok((file, ps))
}

#[derive(Debug, Deserialize)]
struct Sample {
    x: f64,
    y: f64,
    value: f64,
}

#[derive(Debug, Deserialize)]
struct Location {
    x: f64,
    y: f64,
}

pub fn read_samples(path: &Path) -> Result<(Vec<Point2>, Vec<f64>)> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("{}", path.display()))?;
    let (mut points, mut values) = (Vec::new(), Vec::new());
    for (n, row) in reader.deserialize::<Sample>().enumerate() {
        let s = row.with_context(|| format!("{}: row {}", path.display(), n + 1))?;
        if !(s.x.is_finite() && s.y.is_finite() && s.value.is_finite()) {
            bail!("{}: row {} has a non-finite entry", path.display(), n + 1);
        }
        points.push(Point2::new(s.x, s.y));
        values.push(s.value);
    }
    Ok((points, values))
}

pub fn read_points(path: &Path) -> Result<Vec<Point2>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("{}", path.display()))?;
    reader
        .deserialize::<Location>()
        .enumerate()
        .map(|(n, row)| {
            let l = row.with_context(|| format!("{}: row {}", path.display(), n + 1))?;
            Ok(Point2::new(l.x, l.y))
        })
        .collect()
}

/// A file, or stdout when no path is given.
pub fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

pub fn write_json_to<T: serde::Serialize>(path: &Option<PathBuf>, value: &T) -> Result<()> {
    let mut out = output(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}
