use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Deserialize;

use topolayer_core::filtrations::{degree_filtration, directions, height_filtration};
use topolayer_core::io::{self, Manifest, SampleKind};
use topolayer_core::nn::Sample;
use topolayer_core::persistence::{compute_persistence_dim0, diagrams};
use topolayer_core::{Error, PersistenceDiagram};

/// Bad user input that is not a core library error.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

pub fn input_error(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

/// Errors caused by the invocation or its input files (exit code 2).
pub fn is_input_error(err: &anyhow::Error) -> bool {
    err.chain().any(|cause| {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return !matches!(e, Error::OracleInconsistency(_));
        }
        cause.is::<InputError>() || cause.is::<csv::Error>() || cause.is::<std::io::Error>()
    })
}

pub const DEFAULT_DIRECTIONS: usize = 32;

/// `[dim 0, dim 1]` degree-filtration diagrams of an edge-list file.
pub fn graph_diagrams(path: &Path) -> Result<Vec<PersistenceDiagram>> {
    let graph = io::read_graph(path)?;
    let complex = degree_filtration(graph.vertex_count, &graph.edges)
        .with_context(|| format!("{}", path.display()))?;
    Ok(diagrams(&complex).to_vec())
}

/// One dimension-0 height-filtration diagram per direction.
pub fn image_diagrams(path: &Path, count: usize) -> Result<Vec<PersistenceDiagram>> {
    let image = io::read_image(path)?;
    directions(count)?
        .into_iter()
        .map(|d| {
            let complex =
                height_filtration(&image, d).with_context(|| format!("{}", path.display()))?;
            Ok(compute_persistence_dim0(&complex))
        })
        .collect()
}

pub fn load_samples(manifest: &Manifest) -> Result<Vec<Sample>> {
    let count = manifest.directions.unwrap_or(DEFAULT_DIRECTIONS);
    manifest
        .samples
        .par_iter()
        .map(|entry| {
            let diagrams = if !entry.diagrams.is_empty() {
                entry
                    .diagrams
                    .iter()
                    .map(|p| Ok(io::read_diagram(p)?))
                    .collect::<Result<Vec<_>>>()?
            } else {
                match entry.kind {
                    SampleKind::Graph => graph_diagrams(&entry.path)?,
                    SampleKind::Image => image_diagrams(&entry.path, count)?,
                }
            };
            Ok(Sample {
                diagrams,
                label: entry.label,
            })
        })
        .collect()
}

#[derive(Deserialize)]
struct LabelRow {
    sample: String,
    label: usize,
}

/// Reads `sample,label` rows and, for each sample, its `<sample>_*.json`
/// diagrams from `dir` in file-name order.
pub fn load_labeled_diagrams(
    dir: &Path,
    labels: &Path,
) -> Result<Vec<(Vec<PersistenceDiagram>, usize)>> {
    let mut reader =
        csv::Reader::from_path(labels).with_context(|| format!("reading {}", labels.display()))?;
    let rows: Vec<LabelRow> = reader
        .deserialize()
        .collect::<Result<_, _>>()
        .with_context(|| format!("parsing {}", labels.display()))?;
    if rows.is_empty() {
        return Err(input_error(format!(
            "{} lists no samples",
            labels.display()
        )));
    }

    let mut files: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
    let listing = std::fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))?;
    for entry in listing {
        let path = entry
            .with_context(|| format!("listing {}", dir.display()))?
            .path();
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        if path.extension().is_some_and(|e| e == "json") {
            if let Some((sample, _)) = stem.rsplit_once('_') {
                files
                    .entry(sample.to_string())
                    .or_default()
                    .push(path.clone());
            }
        }
    }

    rows.into_iter()
        .map(|row| {
            let mut paths = files.get(&row.sample).cloned().ok_or_else(|| {
                input_error(format!(
                    "no diagrams for sample `{}` in {}",
                    row.sample,
                    dir.display()
                ))
            })?;
            paths.sort();
            let diagrams = paths
                .iter()
                .map(|p| Ok(io::read_diagram(p)?))
                .collect::<Result<Vec<_>>>()?;
            Ok((diagrams, row.label))
        })
        .collect()
}

pub fn sample_stem(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_string)
        .ok_or_else(|| {
            input_error(format!(
                "cannot derive a sample name from {}",
                path.display()
            ))
        })
}
