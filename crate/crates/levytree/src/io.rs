//! File formats: path CSV, tree files, spanned-tree and measure JSON.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use levytree_core::spine::{Atom, DriftSegment};
use levytree_core::{FiniteMeasure, FinitePath, PlaneTree, SpannedTree};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Relative tolerance for the constant spacing of CSV times.
const SPACING_SLACK: f64 = 1e-9;

#[derive(Debug, Deserialize)]
struct PathRow {
    t: f64,
    value: f64,
}

/// Writes `t,value` rows. Values use Rust's shortest round-trip formatting,
/// so reading them back gives the same binary64 numbers.
pub fn write_path_csv<W: Write>(path: &FinitePath, out: W) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "value"])?;
    for (i, &v) in path.samples().iter().enumerate() {
        // `Debug` on f64 is the shortest representation that parses back
        // to the same value.
        w.write_record([format!("{:?}", path.time_of(i)), format!("{v:?}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a path CSV. Times must start at 0 and be evenly spaced; the step is
/// the second time. A single row gives a one-sample path with unit step.
pub fn read_path_csv<R: Read>(input: R) -> CliResult<FinitePath> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().map(str::trim).collect::<Vec<_>>() != ["t", "value"] {
        return Err(CliError::Input(format!("expected header `t,value`, found `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for row in r.deserialize() {
        let row: PathRow = row?;
        times.push(row.t);
        values.push(row.value);
    }
    if times.is_empty() {
        return Err(CliError::Input("path file has no rows".into()));
    }
    if times[0] != 0.0 {
        return Err(CliError::Input(format!("path must start at t = 0, found {}", times[0])));
    }
    let step = if times.len() > 1 { times[1] } else { 1.0 };
    for (i, &t) in times.iter().enumerate() {
        let expected = i as f64 * step;
        if !((t - expected).abs() <= SPACING_SLACK * expected.abs().max(step)) {
            return Err(CliError::Input(format!("row {i}: time {t} breaks the constant spacing {step}")));
        }
    }
    Ok(FinitePath::new(values, step)?)
}

pub fn write_path_file(path: &FinitePath, file: &Path) -> CliResult<()> {
    write_path_csv(path, BufWriter::new(File::create(file)?))
}

pub fn read_path_file(file: &Path) -> CliResult<FinitePath> {
    read_path_csv(BufReader::new(File::open(file)?))
}

/// One balanced-parentheses string per tree and line.
pub fn write_trees<W: Write>(trees: &[PlaneTree], mut out: W) -> CliResult<()> {
    for t in trees {
        writeln!(out, "{}", t.to_parens())?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a tree file. Every line is one tree; an empty line is the
/// single-vertex tree.
pub fn read_trees<R: Read>(input: R) -> CliResult<Vec<PlaneTree>> {
    let mut trees = Vec::new();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        trees.push(PlaneTree::from_parens(line.trim()).map_err(|e| CliError::Input(format!("line {}: {e}", i + 1)))?);
    }
    Ok(trees)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexJson {
    pub id: usize,
    pub label: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeJson {
    pub parent: usize,
    pub child: usize,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpannedTreeJson {
    pub vertices: Vec<VertexJson>,
    pub edges: Vec<EdgeJson>,
}

impl From<&SpannedTree> for SpannedTreeJson {
    fn from(t: &SpannedTree) -> Self {
        SpannedTreeJson {
            vertices: (0..t.vertex_count()).map(|id| VertexJson { id, label: t.label(id) }).collect(),
            edges: t.edges().map(|e| EdgeJson { parent: e.parent, child: e.child, length: e.length }).collect(),
        }
    }
}

impl TryFrom<&SpannedTreeJson> for SpannedTree {
    type Error = CliError;

    /// Vertex ids must be `0..V` with the root at id 0.
    fn try_from(j: &SpannedTreeJson) -> CliResult<SpannedTree> {
        let n = j.vertices.len();
        let mut labels = vec![None; n];
        let mut seen = vec![false; n];
        for v in &j.vertices {
            if v.id >= n || seen[v.id] {
                return Err(CliError::Input(format!("vertex ids must be 0..{n} without repeats")));
            }
            seen[v.id] = true;
            labels[v.id] = v.label;
        }
        let mut parents = vec![None; n];
        let mut lengths = vec![0.0; n];
        for e in &j.edges {
            if e.child >= n || e.parent >= n || parents[e.child].is_some() {
                return Err(CliError::Input(format!("bad edge {} -> {}", e.parent, e.child)));
            }
            if !(e.length >= 0.0) {
                return Err(CliError::Input(format!("edge {} -> {} has negative length", e.parent, e.child)));
            }
            parents[e.child] = Some(e.parent);
            lengths[e.child] = e.length;
        }
        // Heights by walking up to the root; cycles are caught by the step bound.
        let mut heights = vec![0.0; n];
        for v in 0..n {
            let (mut u, mut h, mut steps) = (v, 0.0, 0);
            while let Some(p) = parents[u] {
                h += lengths[u];
                u = p;
                steps += 1;
                if steps > n {
                    return Err(CliError::Input("cycle in tree edges".into()));
                }
            }
            if u != 0 {
                return Err(CliError::Input(format!("vertex {v} is not connected to the root")));
            }
            heights[v] = h;
        }
        Ok(SpannedTree::from_parts(labels, parents, heights)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftJson {
    pub from: f64,
    pub to: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomJson {
    pub at: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureJson {
    #[serde(rename = "S")]
    pub s: f64,
    pub drift: Vec<DriftJson>,
    pub atoms: Vec<AtomJson>,
}

impl From<&FiniteMeasure> for MeasureJson {
    fn from(m: &FiniteMeasure) -> Self {
        MeasureJson {
            s: m.sup_support(),
            drift: m.drift().iter().map(|d| DriftJson { from: d.from, to: d.to, rate: d.rate }).collect(),
            atoms: m.atoms().iter().map(|a| AtomJson { at: a.at, mass: a.mass }).collect(),
        }
    }
}

impl TryFrom<&MeasureJson> for FiniteMeasure {
    type Error = CliError;

    fn try_from(j: &MeasureJson) -> CliResult<FiniteMeasure> {
        let m = FiniteMeasure::new(
            j.drift.iter().map(|d| DriftSegment { from: d.from, to: d.to, rate: d.rate }).collect(),
            j.atoms.iter().map(|a| Atom { at: a.at, mass: a.mass }).collect(),
        )?;
        if m.sup_support() != j.s {
            return Err(CliError::Input(format!("S = {} does not match the drift support [0, {}]", j.s, m.sup_support())));
        }
        Ok(m)
    }
}

pub fn read_measure_file(file: &Path) -> CliResult<FiniteMeasure> {
    let j: MeasureJson = serde_json::from_reader(BufReader::new(File::open(file)?))?;
    FiniteMeasure::try_from(&j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use levytree_core::coding::spanned_subtree;
    use levytree_core::ContourExcursion;

    #[test]
    fn path_round_trip_is_bit_exact() {
        let values = vec![0.0, 0.1, 1.0 / 3.0, std::f64::consts::PI, 1e-300, 2.5e17, -0.0];
        let p = FinitePath::new(values, 0.1).unwrap();
        let mut buf = Vec::new();
        write_path_csv(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,value\n0.0,0.0\n0.1,0.1\n"));
        let back = read_path_csv(buf.as_slice()).unwrap();
        assert_eq!(back.step(), p.step());
        for (a, b) in back.samples().iter().zip(p.samples()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn path_reader_rejects_bad_input() {
        assert!(read_path_csv("x,y\n0,1\n".as_bytes()).is_err());
        assert!(read_path_csv("t,value\n".as_bytes()).is_err());
        assert!(read_path_csv("t,value\n0,0\n1,1\n3,0\n".as_bytes()).is_err());
        assert!(read_path_csv("t,value\n1,0\n2,0\n".as_bytes()).is_err());
        assert!(read_path_csv("t,value\n0,zero\n".as_bytes()).is_err());
        let single = read_path_csv("t,value\n0,0\n".as_bytes()).unwrap();
        assert_eq!(single.samples(), &[0.0]);
    }

    #[test]
    fn tree_file_round_trip() {
        let trees = vec![PlaneTree::from_parens("()(()())()").unwrap(), PlaneTree::single_vertex()];
        let mut buf = Vec::new();
        write_trees(&trees, &mut buf).unwrap();
        let back = read_trees(buf.as_slice()).unwrap();
        assert_eq!(back, trees);
        assert!(read_trees("(()\n".as_bytes()).is_err());
    }

    #[test]
    fn spanned_tree_json_round_trip() {
        let h = ContourExcursion::from_samples(vec![0.0, 1.0, 2.0, 3.0, 2.0, 1.0, 2.0, 1.0, 0.0], 1.0).unwrap();
        let t = spanned_subtree(&h, &[3.0, 6.0]).unwrap();
        let j = SpannedTreeJson::from(&t);
        let text = serde_json::to_string(&j).unwrap();
        assert!(text.contains("\"label\":null"));
        let parsed: SpannedTreeJson = serde_json::from_str(&text).unwrap();
        let back = SpannedTree::try_from(&parsed).unwrap();
        assert_eq!(back.label_distances(), t.label_distances());
    }

    #[test]
    fn measure_json_round_trip() {
        let m = FiniteMeasure::new(vec![DriftSegment { from: 0.0, to: 2.0, rate: 1.0 }], vec![Atom { at: 0.5, mass: 3.0 }]).unwrap();
        let text = serde_json::to_string(&MeasureJson::from(&m)).unwrap();
        assert_eq!(text, r#"{"S":2.0,"drift":[{"from":0.0,"to":2.0,"rate":1.0}],"atoms":[{"at":0.5,"mass":3.0}]}"#);
        let parsed: MeasureJson = serde_json::from_str(&text).unwrap();
        assert_eq!(FiniteMeasure::try_from(&parsed).unwrap(), m);
        let wrong: MeasureJson = serde_json::from_str(r#"{"S":3,"drift":[{"from":0,"to":2,"rate":1}],"atoms":[]}"#).unwrap();
        assert!(FiniteMeasure::try_from(&wrong).is_err());
    }
}
