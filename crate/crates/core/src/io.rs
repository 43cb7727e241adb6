//! File formats: edge lists, PBM images, canonical JSON and dataset manifests.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::filtrations::{BinaryImage, Graph};
use crate::nn::ModelConfig;
use crate::persistence::PersistenceDiagram;
use crate::{Error, Result};

fn parse_error(path: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Meaningful lines with their 1-based numbers; `#` starts a comment.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_numbers<const K: usize>(
    line: &str,
    origin: &str,
    n: usize,
    what: &str,
) -> Result<[usize; K]> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != K {
        return Err(parse_error(
            origin,
            n,
            format!(
                "expected {K} integers ({what}), found {} fields",
                fields.len()
            ),
        ));
    }
    let mut out = [0; K];
    for (slot, f) in out.iter_mut().zip(fields) {
        *slot = f
            .parse()
            .map_err(|_| parse_error(origin, n, format!("`{f}` is not a non-negative integer")))?;
    }
    Ok(out)
}

/// Parses `V E` followed by `E` lines `u v` (0-based ids).
pub fn parse_edge_list(text: &str, origin: &str) -> Result<Graph> {
    let mut lines = content_lines(text);
    let (n, header) = lines
        .next()
        .ok_or_else(|| parse_error(origin, 1, "missing `V E` header"))?;
    let [vertex_count, edge_count] = parse_numbers::<2>(header, origin, n, "V E")?;
    let mut edges = Vec::with_capacity(edge_count);
    let mut last = n;
    for (n, line) in lines {
        let [u, v] = parse_numbers::<2>(line, origin, n, "u v")?;
        if edges.len() == edge_count {
            return Err(parse_error(
                origin,
                n,
                format!("more than the declared {edge_count} edges"),
            ));
        }
        for w in [u, v] {
            if w >= vertex_count {
                return Err(parse_error(
                    origin,
                    n,
                    format!("vertex {w} out of range for {vertex_count} vertices"),
                ));
            }
        }
        if u == v {
            return Err(parse_error(origin, n, format!("self-loop on vertex {u}")));
        }
        edges.push((u, v));
        last = n;
    }
    if edges.len() != edge_count {
        return Err(parse_error(
            origin,
            last,
            format!("declared {edge_count} edges, found {}", edges.len()),
        ));
    }
    Ok(Graph {
        vertex_count,
        edges,
    })
}

pub fn format_edge_list(graph: &Graph) -> String {
    let mut out = format!("{} {}\n", graph.vertex_count, graph.edges.len());
    for (u, v) in &graph.edges {
        out.push_str(&format!("{u} {v}\n"));
    }
    out
}

pub fn read_graph(path: &Path) -> Result<Graph> {
    parse_edge_list(&read_text(path)?, &path.display().to_string())
}

/// Parses a plain PBM (`P1`) image or a bare grid of `0`/`1` rows.
pub fn parse_image(text: &str, origin: &str) -> Result<BinaryImage> {
    let mut lines = content_lines(text).peekable();
    let is_pbm = lines.peek().is_some_and(|(_, l)| l.starts_with("P1"));
    if is_pbm {
        parse_pbm(lines, origin)
    } else {
        parse_grid(lines, origin)
    }
}

fn bits<'a>(line: &'a str, origin: &'a str, n: usize) -> impl Iterator<Item = Result<bool>> + 'a {
    line.chars()
        .filter(|c| !c.is_whitespace())
        .map(move |c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(parse_error(
                origin,
                n,
                format!("unexpected pixel `{other}`"),
            )),
        })
}

fn parse_pbm<'a>(
    lines: impl Iterator<Item = (usize, &'a str)>,
    origin: &str,
) -> Result<BinaryImage> {
    // header tokens may share lines with each other and with pixel data
    let mut header: Vec<usize> = Vec::new();
    let mut pixels = Vec::new();
    let mut last = 1;
    for (n, line) in lines {
        last = n;
        let mut rest = line;
        if header.is_empty() {
            rest = rest.strip_prefix("P1").unwrap_or(rest);
            header.push(0);
        }
        while header.len() < 3 {
            let trimmed = rest.trim_start();
            if trimmed.is_empty() {
                break;
            }
            let end = trimmed.find(char::is_whitespace).unwrap_or(trimmed.len());
            let token = &trimmed[..end];
            let value = token
                .parse()
                .map_err(|_| parse_error(origin, n, format!("bad PBM dimension `{token}`")))?;
            header.push(value);
            rest = &trimmed[end..];
        }
        if header.len() == 3 {
            for b in bits(rest, origin, n) {
                pixels.push(b?);
            }
        }
    }
    if header.len() < 3 {
        return Err(parse_error(origin, last, "incomplete PBM header"));
    }
    let (width, height) = (header[1], header[2]);
    if pixels.len() != width * height {
        return Err(parse_error(
            origin,
            last,
            format!(
                "expected {} pixels for {width}x{height}, found {}",
                width * height,
                pixels.len()
            ),
        ));
    }
    let rows: Vec<Vec<bool>> = pixels.chunks(width.max(1)).map(<[bool]>::to_vec).collect();
    if width == 0 || height == 0 {
        return Err(parse_error(origin, last, "image has no pixels"));
    }
    BinaryImage::from_rows(&rows)
}

fn parse_grid<'a>(
    lines: impl Iterator<Item = (usize, &'a str)>,
    origin: &str,
) -> Result<BinaryImage> {
    let mut rows: Vec<Vec<bool>> = Vec::new();
    let mut last = 1;
    for (n, line) in lines {
        last = n;
        let row = bits(line, origin, n).collect::<Result<Vec<bool>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_error(
                    origin,
                    n,
                    format!("row has {} pixels, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_error(origin, last, "image has no pixels"));
    }
    BinaryImage::from_rows(&rows)
}

pub fn format_pbm(image: &BinaryImage) -> String {
    let mut out = format!("P1\n{} {}\n", image.width(), image.height());
    for r in 0..image.height() {
        let row: Vec<&str> = (0..image.width())
            .map(|c| if image.get(r, c) { "1" } else { "0" })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_image(path: &Path) -> Result<BinaryImage> {
    parse_image(&read_text(path)?, &path.display().to_string())
}

/// Pretty JSON with object keys in sorted order and shortest round-trip
/// floats.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    // `Value` objects are ordered maps, which sorts every key.
    let tree = serde_json::to_value(value)?;
    let mut text = serde_json::to_string_pretty(&tree)?;
    text.push('\n');
    Ok(text)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_canonical_json(value)?)
}

/// Deserializes JSON text; type errors carry the JSON pointer of the
/// offending value.
pub fn from_json_str<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(de).map_err(|e| {
        let pointer = json_pointer(e.path());
        let inner = e.into_inner();
        if inner.is_syntax() || inner.is_eof() {
            Error::Json(inner)
        } else {
            Error::Schema {
                pointer,
                message: inner.to_string(),
            }
        }
    })?;
    Ok(value)
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

fn in_file(path: &Path, err: Error) -> Error {
    match err {
        Error::Schema { pointer, message } => Error::Schema {
            pointer: format!("{}#{pointer}", path.display()),
            message,
        },
        other => other,
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    from_json_str(&text).map_err(|e| in_file(path, e))
}

/// Reads and validates a model config; errors point into the file.
pub fn read_config(path: &Path) -> Result<ModelConfig> {
    let config: ModelConfig = read_json(path)?;
    config.validate().map_err(|e| in_file(path, e))?;
    Ok(config)
}

pub fn read_diagram(path: &Path) -> Result<PersistenceDiagram> {
    read_json(path)
}

pub fn write_diagram(path: &Path, diagram: &PersistenceDiagram) -> Result<()> {
    write_json(path, diagram)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleKind {
    Graph,
    Image,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub kind: SampleKind,
    pub label: usize,
    /// Precomputed diagrams, in branch input order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagrams: Vec<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

/// A labeled dataset on disk. Relative paths resolve against the
/// manifest's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub samples: Vec<ManifestEntry>,
    pub split: SplitSpec,
    /// Directions per image sample.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directions: Option<usize>,
}

impl Manifest {
    /// Checks that labels are exactly `0..k` for some `k >= 2`.
    pub fn validate_labels(&self) -> Result<usize> {
        let labels: BTreeSet<usize> = self.samples.iter().map(|s| s.label).collect();
        let k = labels.len();
        if k < 2 {
            return Err(Error::validation("manifest needs at least two labels"));
        }
        if labels.iter().next_back() != Some(&(k - 1)) {
            let missing = (0..k).find(|l| !labels.contains(l)).unwrap_or(k);
            return Err(Error::Schema {
                pointer: "/samples".into(),
                message: format!("labels must be contiguous from 0; label {missing} is missing"),
            });
        }
        Ok(k)
    }

    pub fn resolve(&self, base: &Path) -> Self {
        let join = |p: &PathBuf| {
            if p.is_absolute() {
                p.clone()
            } else {
                base.join(p)
            }
        };
        let mut out = self.clone();
        for s in &mut out.samples {
            s.path = join(&s.path);
            s.diagrams = s.diagrams.iter().map(join).collect();
        }
        out
    }
}

/// Loads a manifest, resolves its paths and checks labels and file existence.
pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let raw: Manifest = read_json(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let manifest = raw.resolve(base);
    manifest.validate_labels()?;
    for (i, s) in manifest.samples.iter().enumerate() {
        let cached = !s.diagrams.is_empty();
        let required: Vec<&PathBuf> = if cached {
            s.diagrams.iter().collect()
        } else {
            vec![&s.path]
        };
        if let Some(missing) = required.into_iter().find(|p| !p.exists()) {
            return Err(Error::Schema {
                pointer: format!("/samples/{i}"),
                message: format!("{} does not exist", missing.display()),
            });
        }
    }
    Ok(manifest)
}

/// Formats `x` with `sig` significant digits in the shortest of fixed or
/// exponent notation, without trailing zeros.
pub fn fmt_sig(x: f64, sig: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sig = sig.max(1);
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if exp < -5 || exp >= sig as i32 {
        format!("{}e{exp}", trim(mantissa))
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim(&format!("{x:.decimals$}"))
    }
}
