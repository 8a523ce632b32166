//! File formats: tree descriptions (JSON), spectra and Weyl samples (CSV).
//!
//! Floating-point values are written with 17 significant digits so that a
//! write/read cycle is exact.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::charfn::{Bc, BoundarySpec, ProblemSpec, SpectrumSet, WeylSample};
use crate::graph::{EdgeDescription, EdgeId, MetricTree, TreeDescription, VertexId};
use crate::potential::{Potential, PotentialSet};
use crate::{Error, Result, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexEntry {
    pub id: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeEntry {
    pub id: usize,
    pub from: usize,
    pub to: usize,
    pub length: f64,
    #[serde(default)]
    pub potential: Potential,
}

/// The tree file as written on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeFile {
    pub vertices: Vec<VertexEntry>,
    pub edges: Vec<EdgeEntry>,
    pub root: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub boundary_conditions: BTreeMap<String, String>,
    /// Label of the edge whose potential is known (inverse problems).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_edge: Option<usize>,
}

/// A parsed tree file: the problem (edges oriented canonically, potentials
/// reflected where an edge was turned around) and the known edge if given.
#[derive(Clone, Debug)]
pub struct LoadedTree {
    pub spec: ProblemSpec,
    pub known_edge: Option<EdgeId>,
}

impl TreeFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn description(&self) -> TreeDescription {
        TreeDescription {
            vertices: self.vertices.iter().map(|v| v.id).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeDescription {
                    id: e.id,
                    from: e.from,
                    to: e.to,
                    length: e.length,
                })
                .collect(),
            root: self.root,
        }
    }

    pub fn load(&self) -> Result<LoadedTree> {
        let (tree, flipped) = MetricTree::build(&self.description())?;
        let potentials = PotentialSet(
            self.edges
                .iter()
                .zip(&flipped)
                .map(|(e, &f)| {
                    if f {
                        e.potential.reflect(e.length)
                    } else {
                        e.potential.clone()
                    }
                })
                .collect(),
        );
        let mut bc = BoundarySpec::dirichlet(&tree);
        for (key, value) in &self.boundary_conditions {
            let label: usize = key
                .parse()
                .map_err(|_| Error::Invalid(format!("boundary condition key {key:?} is not a vertex id")))?;
            let v = tree
                .vertex_by_label(label)
                .ok_or_else(|| Error::Invalid(format!("boundary condition for unknown vertex {label}")))?;
            if !tree.is_boundary(v) {
                return Err(Error::Invalid(format!("vertex {label} is not a boundary vertex")));
            }
            let cond = match value.as_str() {
                "D" => Bc::Dirichlet,
                "N" => Bc::Neumann,
                other => return Err(Error::Invalid(format!("boundary condition {other:?} is not D or N"))),
            };
            bc = bc.with(v, cond);
        }
        let known_edge = match self.known_edge {
            None => None,
            Some(label) => Some(
                tree.edge_by_label(label)
                    .ok_or_else(|| Error::Invalid(format!("known edge {label} is not in the tree")))?,
            ),
        };
        Ok(LoadedTree {
            spec: ProblemSpec::new(tree, potentials, bc)?,
            known_edge,
        })
    }

    /// File for `spec` with edges in their canonical orientation.
    pub fn from_spec(spec: &ProblemSpec, known_edge: Option<EdgeId>) -> Self {
        let tree = &spec.tree;
        let boundary_conditions = tree
            .boundary_vertices()
            .into_iter()
            .filter(|&v| spec.bc.get(v) == Some(Bc::Neumann))
            .map(|v| (tree.vertex_label(v).to_string(), "N".to_string()))
            .collect();
        TreeFile {
            vertices: tree
                .vertices()
                .map(|v| VertexEntry {
                    id: tree.vertex_label(v),
                })
                .collect(),
            edges: tree
                .edges()
                .iter()
                .enumerate()
                .map(|(j, e)| EdgeEntry {
                    id: tree.edge_label(EdgeId(j)),
                    from: tree.vertex_label(e.from),
                    to: tree.vertex_label(e.to),
                    length: e.length,
                    potential: spec.potentials.get(j).clone(),
                })
                .collect(),
            root: tree.vertex_label(tree.root()),
            boundary_conditions,
            known_edge: known_edge.map(|e| tree.edge_label(e)),
        }
    }
}

pub fn read_tree(path: &Path) -> Result<LoadedTree> {
    TreeFile::from_json(&std::fs::read_to_string(path)?)?.load()
}

pub fn write_tree(path: &Path, spec: &ProblemSpec, known_edge: Option<EdgeId>) -> Result<()> {
    std::fs::write(path, TreeFile::from_spec(spec, known_edge).to_json()? + "\n")?;
    Ok(())
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Invalid(format!("{what}: {s:?} is not a number")))
}

#[derive(Debug, Deserialize)]
struct SpectrumRecord {
    problem: String,
    lambda: String,
    multiplicity: String,
}

/// Write `problem,lambda,multiplicity` rows for every set.
pub fn write_spectra<W: std::io::Write>(w: W, sets: &[SpectrumSet]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["problem", "lambda", "multiplicity"])?;
    for s in sets {
        for e in &s.eigenvalues {
            out.write_record([s.tag.clone(), fmt_f64(e.lambda), e.multiplicity.to_string()])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Read spectra grouped by problem tag, in order of first appearance. The
/// window of each set runs from below its lowest to above its highest
/// eigenvalue by one mean gap.
pub fn read_spectra<R: std::io::Read>(r: R) -> Result<Vec<SpectrumSet>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut groups: Vec<(String, Vec<(f64, usize)>)> = Vec::new();
    for rec in rdr.deserialize() {
        let rec: SpectrumRecord = rec?;
        let lambda = parse_f64(&rec.lambda, "lambda")?;
        let mult: usize =
            rec.multiplicity.trim().parse().map_err(|_| {
                Error::Invalid(format!("multiplicity {:?} is not a positive integer", rec.multiplicity))
            })?;
        if mult == 0 || !lambda.is_finite() {
            return Err(Error::Invalid(format!(
                "bad row for {}: lambda {lambda}, multiplicity {mult}",
                rec.problem
            )));
        }
        let tag = rec.problem.trim().to_string();
        match groups.iter_mut().find(|g| g.0 == tag) {
            Some(g) => g.1.push((lambda, mult)),
            None => groups.push((tag, vec![(lambda, mult)])),
        }
    }
    Ok(groups
        .into_iter()
        .map(|(tag, values)| {
            let lo = values.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
            let hi = values.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
            let gap = if values.len() > 1 {
                (hi - lo) / (values.len() - 1) as f64
            } else {
                1.0
            };
            let pad = 0.5 * gap.max(1e-3);
            SpectrumSet::from_values(tag, (lo - pad.max(1.0), hi + pad), &values)
        })
        .collect())
}

pub fn read_spectra_file(path: &Path) -> Result<Vec<SpectrumSet>> {
    read_spectra(std::fs::File::open(path)?)
}

/// `vertex,re_lambda,im_lambda,re_M,im_M` rows; the vertex column holds
/// labels of `tree`.
pub fn write_weyl<W: std::io::Write>(w: W, tree: &MetricTree, samples: &[WeylSample]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["vertex", "re_lambda", "im_lambda", "re_M", "im_M"])?;
    for s in samples {
        let label = tree.vertex_label(s.vertex).to_string();
        for &(l, m) in &s.points {
            out.write_record([
                label.clone(),
                fmt_f64(l.re),
                fmt_f64(l.im),
                fmt_f64(m.re),
                fmt_f64(m.im),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct WeylRecord {
    vertex: usize,
    re_lambda: String,
    im_lambda: String,
    #[serde(rename = "re_M")]
    re_m: String,
    #[serde(rename = "im_M")]
    im_m: String,
}

pub fn read_weyl<R: std::io::Read>(r: R, tree: &MetricTree) -> Result<Vec<WeylSample>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out: Vec<WeylSample> = Vec::new();
    for rec in rdr.deserialize() {
        let rec: WeylRecord = rec?;
        let v: VertexId = tree
            .vertex_by_label(rec.vertex)
            .ok_or_else(|| Error::Invalid(format!("unknown vertex {}", rec.vertex)))?;
        let l = C64::new(
            parse_f64(&rec.re_lambda, "re_lambda")?,
            parse_f64(&rec.im_lambda, "im_lambda")?,
        );
        let m = C64::new(parse_f64(&rec.re_m, "re_M")?, parse_f64(&rec.im_m, "im_M")?);
        match out.iter_mut().find(|s| s.vertex == v) {
            Some(s) => s.points.push((l, m)),
            None => out.push(WeylSample {
                vertex: v,
                points: vec![(l, m)],
            }),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIVE_EDGE: &str = r#"{
        "vertices": [{"id": 1}, {"id": 2}, {"id": 3}, {"id": 4}, {"id": 5}, {"id": 6}],
        "edges": [
            {"id": 1, "from": 1, "to": 3, "length": 1.0, "potential": {"kind": "const", "value": 0.5}},
            {"id": 2, "from": 2, "to": 3, "length": 1.0},
            {"id": 3, "from": 6, "to": 3, "length": 1.0, "potential": {"kind": "pwc", "values": [1.0, 2.0]}},
            {"id": 4, "from": 4, "to": 6, "length": 1.0, "potential": {"kind": "poly", "coefficients": [0.0, 1.0]}},
            {"id": 5, "from": 5, "to": 6, "length": 1.0, "potential": {"kind": "grid", "samples": [0.0, 1.0, 4.0]}}
        ],
        "root": 2,
        "boundary_conditions": {"4": "N"},
        "known_edge": 3
    }"#;

    #[test]
    fn tree_file_loads_and_reflects_turned_edges() {
        let t = TreeFile::from_json(FIVE_EDGE).unwrap().load().unwrap();
        let tree = &t.spec.tree;
        // edge 3 was written 6 → 3 and is turned to start at v3
        let e3 = tree.edge_by_label(3).unwrap();
        assert_eq!(tree.vertex_label(tree.edge(e3).from), 3);
        assert_eq!(t.spec.potentials.get(e3.0), &Potential::pwc(vec![2.0, 1.0]));
        assert_eq!(t.known_edge, Some(e3));
        assert_eq!(t.spec.bc.get(tree.vertex_by_label(4).unwrap()), Some(Bc::Neumann));
    }

    #[test]
    fn tree_file_round_trip() {
        let t = TreeFile::from_json(FIVE_EDGE).unwrap().load().unwrap();
        let text = TreeFile::from_spec(&t.spec, t.known_edge).to_json().unwrap();
        let back = TreeFile::from_json(&text).unwrap().load().unwrap();
        assert_eq!(*back.spec.tree, *t.spec.tree);
        assert_eq!(*back.spec.potentials, *t.spec.potentials);
        assert_eq!(back.spec.bc, t.spec.bc);
        assert_eq!(back.known_edge, t.known_edge);
    }

    #[test]
    fn invalid_tree_is_rejected() {
        let bad = r#"{"vertices":[{"id":1},{"id":2},{"id":3}],
            "edges":[{"id":1,"from":1,"to":2,"length":1.0},{"id":2,"from":2,"to":3,"length":-1.0}],"root":1}"#;
        assert!(matches!(
            TreeFile::from_json(bad).unwrap().load(),
            Err(Error::InvalidTree(_))
        ));
        assert!(TreeFile::from_json("{").is_err());
    }

    #[test]
    fn spectra_round_trip_is_exact() {
        let a = SpectrumSet::from_values("L0", (0.0, 10.0), &[(std::f64::consts::PI, 1), (1.0 / 3.0, 2)]);
        let b = SpectrumSet::from_values("L4", (0.0, 10.0), &[(-0.1, 1)]);
        let mut buf = Vec::new();
        write_spectra(&mut buf, &[a.clone(), b.clone()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("problem,lambda,multiplicity\n"));
        let back = read_spectra(&buf[..]).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].expanded(), a.expanded());
        assert_eq!(back[1].expanded(), b.expanded());
        assert!(back[0].window.0 < 1.0 / 3.0 && back[0].window.1 > std::f64::consts::PI);
    }

    #[test]
    fn weyl_round_trip_is_exact() {
        let tree = MetricTree::star(&[1.0, 1.0, 1.0]).unwrap();
        let s = WeylSample {
            vertex: VertexId(1),
            points: vec![
                (C64::new(2.0, 0.1), C64::new(-1.0 / 7.0, 0.3)),
                (C64::new(5.0, 0.0), C64::new(0.2, 0.0)),
            ],
        };
        let mut buf = Vec::new();
        write_weyl(&mut buf, &tree, std::slice::from_ref(&s)).unwrap();
        assert!(String::from_utf8(buf.clone())
            .unwrap()
            .starts_with("vertex,re_lambda,im_lambda,re_M,im_M\n"));
        assert_eq!(read_weyl(&buf[..], &tree).unwrap(), vec![s]);
    }

    #[test]
    fn bad_rows_are_rejected() {
        let csv = "problem,lambda,multiplicity\nL0,abc,1\n";
        assert!(read_spectra(csv.as_bytes()).is_err());
        let csv = "problem,lambda,multiplicity\nL0,1.0,0\n";
        assert!(read_spectra(csv.as_bytes()).is_err());
    }
}
