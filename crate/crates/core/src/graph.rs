//! Compact metric trees, their validation and the splitting operations.
//!
//! Vertices and edges are addressed by dense indices; the labels from the
//! input description are kept for I/O. Edges store the vertex at x = 0
//! (`from`) and at x = T (`to`).

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    /// Endpoint at x = 0.
    pub from: VertexId,
    /// Endpoint at x = T.
    pub to: VertexId,
    pub length: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeEnd {
    Start,
    End,
}

impl Edge {
    pub fn end_at(&self, v: VertexId) -> Option<EdgeEnd> {
        if self.from == v {
            Some(EdgeEnd::Start)
        } else if self.to == v {
            Some(EdgeEnd::End)
        } else {
            None
        }
    }

    pub fn other(&self, v: VertexId) -> VertexId {
        if self.from == v {
            self.to
        } else {
            self.from
        }
    }
}

/// Edge as written in a tree description, endpoints by label.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeDescription {
    pub id: usize,
    pub from: usize,
    pub to: usize,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct TreeDescription {
    pub vertices: Vec<usize>,
    pub edges: Vec<EdgeDescription>,
    pub root: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Issue {
    Empty,
    DuplicateVertex(usize),
    DuplicateEdge(usize),
    UnknownEndpoint { edge: usize, vertex: usize },
    SelfLoop { edge: usize },
    NonPositiveLength { edge: usize, length: f64 },
    EdgeCount { vertices: usize, edges: usize },
    Disconnected,
    Cycle,
    DegreeTwo { vertex: usize },
    UnknownRoot { root: usize },
    RootNotBoundary { root: usize },
    BoundaryOrientation { edge: usize, vertex: usize },
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::Empty => write!(f, "tree has no vertices"),
            Issue::DuplicateVertex(v) => write!(f, "duplicate vertex id {v}"),
            Issue::DuplicateEdge(e) => write!(f, "duplicate edge id {e}"),
            Issue::UnknownEndpoint { edge, vertex } => {
                write!(f, "edge {edge} refers to unknown vertex {vertex}")
            }
            Issue::SelfLoop { edge } => write!(f, "edge {edge} has equal endpoints"),
            Issue::NonPositiveLength { edge, length } => {
                write!(f, "edge {edge} has non-positive length {length}")
            }
            Issue::EdgeCount { vertices, edges } => {
                write!(f, "{edges} edges for {vertices} vertices (a tree needs |V| - 1)")
            }
            Issue::Disconnected => write!(f, "graph is disconnected"),
            Issue::Cycle => write!(f, "graph contains a cycle"),
            Issue::DegreeTwo { vertex } => write!(f, "vertex {vertex} has degree 2"),
            Issue::UnknownRoot { root } => write!(f, "root {root} is not a vertex"),
            Issue::RootNotBoundary { root } => write!(f, "root {root} is not a boundary vertex"),
            Issue::BoundaryOrientation { edge, vertex } => {
                write!(f, "boundary edge {edge} does not start at boundary vertex {vertex}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return write!(f, "valid");
        }
        let parts: Vec<String> = self.issues.iter().map(|i| i.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Structural checks shared by descriptions and built trees.
fn structural_issues(
    n: usize,
    edges: &[(usize, usize, f64)],
    labels: &dyn Fn(usize) -> usize,
    edge_label: &dyn Fn(usize) -> usize,
    root: Option<usize>,
) -> Vec<Issue> {
    let mut issues = Vec::new();
    if n == 0 {
        issues.push(Issue::Empty);
        return issues;
    }
    let mut deg = vec![0usize; n];
    let mut adj = vec![Vec::new(); n];
    for (j, &(a, b, t)) in edges.iter().enumerate() {
        if !(t > 0.0) || !t.is_finite() {
            issues.push(Issue::NonPositiveLength {
                edge: edge_label(j),
                length: t,
            });
        }
        if a == b {
            issues.push(Issue::SelfLoop { edge: edge_label(j) });
            continue;
        }
        deg[a] += 1;
        deg[b] += 1;
        adj[a].push(b);
        adj[b].push(a);
    }
    if edges.len() + 1 != n {
        issues.push(Issue::EdgeCount {
            vertices: n,
            edges: edges.len(),
        });
    }
    // connectivity and cycles by union-find
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let nx = p[y];
            p[y] = r;
            y = nx;
        }
        r
    }
    let mut cycle = false;
    for &(a, b, _) in edges {
        if a == b {
            continue;
        }
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            cycle = true;
        } else {
            parent[ra] = rb;
        }
    }
    if cycle {
        issues.push(Issue::Cycle);
    }
    let r0 = find(&mut parent, 0);
    if (0..n).any(|v| find(&mut parent, v) != r0) {
        issues.push(Issue::Disconnected);
    }
    for v in 0..n {
        if deg[v] == 2 {
            issues.push(Issue::DegreeTwo { vertex: labels(v) });
        }
    }
    if let Some(r) = root {
        if deg[r] != 1 {
            issues.push(Issue::RootNotBoundary { root: labels(r) });
        }
    }
    issues
}

/// Check a description against every tree invariant. Orientation is not
/// checked here because building a tree canonicalizes it.
pub fn validate_description(desc: &TreeDescription) -> ValidationReport {
    let mut issues = Vec::new();
    let mut index = BTreeMap::new();
    for (i, &v) in desc.vertices.iter().enumerate() {
        if index.insert(v, i).is_some() {
            issues.push(Issue::DuplicateVertex(v));
        }
    }
    let mut seen = BTreeSet::new();
    let mut edges = Vec::new();
    let mut labels = Vec::new();
    for e in &desc.edges {
        if !seen.insert(e.id) {
            issues.push(Issue::DuplicateEdge(e.id));
        }
        match (index.get(&e.from), index.get(&e.to)) {
            (Some(&a), Some(&b)) => {
                edges.push((a, b, e.length));
                labels.push(e.id);
            }
            (a, _) => issues.push(Issue::UnknownEndpoint {
                edge: e.id,
                vertex: if a.is_none() { e.from } else { e.to },
            }),
        }
    }
    let root = index.get(&desc.root).copied();
    if root.is_none() && !desc.vertices.is_empty() {
        issues.push(Issue::UnknownRoot { root: desc.root });
    }
    if issues.iter().any(|i| matches!(i, Issue::UnknownEndpoint { .. })) {
        return ValidationReport { issues };
    }
    let vl = |v: usize| desc.vertices[v];
    let el = |j: usize| labels[j];
    issues.extend(structural_issues(desc.vertices.len(), &edges, &vl, &el, root));
    ValidationReport { issues }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricTree {
    vertex_labels: Vec<usize>,
    edge_labels: Vec<usize>,
    edges: Vec<Edge>,
    root: VertexId,
    /// Boundary vertices created by splitting or cutting; exempt from the
    /// boundary-edge orientation rule because they keep the parent's
    /// parametrization.
    copies: Vec<VertexId>,
    incidence: Vec<Vec<(EdgeId, EdgeEnd)>>,
}

impl MetricTree {
    fn assemble(
        vertex_labels: Vec<usize>,
        edge_labels: Vec<usize>,
        edges: Vec<Edge>,
        root: VertexId,
        copies: Vec<VertexId>,
    ) -> Self {
        let mut incidence = vec![Vec::new(); vertex_labels.len()];
        for (j, e) in edges.iter().enumerate() {
            incidence[e.from.0].push((EdgeId(j), EdgeEnd::Start));
            incidence[e.to.0].push((EdgeId(j), EdgeEnd::End));
        }
        MetricTree {
            vertex_labels,
            edge_labels,
            edges,
            root,
            copies,
            incidence,
        }
    }

    /// Build from a description, orienting every edge canonically:
    /// boundary edges start at their boundary vertex, internal edges start at
    /// the endpoint closer to the root. Returns which edges were reversed
    /// relative to the description.
    pub fn build(desc: &TreeDescription) -> Result<(MetricTree, Vec<bool>)> {
        let report = validate_description(desc);
        if !report.is_valid() {
            return Err(Error::InvalidTree(report));
        }
        let index: BTreeMap<usize, usize> = desc.vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let n = desc.vertices.len();
        let raw: Vec<(usize, usize)> = desc.edges.iter().map(|e| (index[&e.from], index[&e.to])).collect();
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &raw {
            adj[a].push(b);
            adj[b].push(a);
        }
        let root = index[&desc.root];
        let mut depth = vec![usize::MAX; n];
        depth[root] = 0;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &u in &adj[v] {
                if depth[u] == usize::MAX {
                    depth[u] = depth[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        let mut edges = Vec::with_capacity(raw.len());
        let mut flipped = Vec::with_capacity(raw.len());
        for (e, &(a, b)) in desc.edges.iter().zip(&raw) {
            let (ba, bb) = (adj[a].len() == 1, adj[b].len() == 1);
            let keep = if ba != bb { ba } else { (depth[a], a) < (depth[b], b) };
            let (f, t) = if keep { (a, b) } else { (b, a) };
            flipped.push(!keep);
            edges.push(Edge {
                from: VertexId(f),
                to: VertexId(t),
                length: e.length,
            });
        }
        let tree = MetricTree::assemble(
            desc.vertices.clone(),
            desc.edges.iter().map(|e| e.id).collect(),
            edges,
            VertexId(root),
            Vec::new(),
        );
        Ok((tree, flipped))
    }

    /// Build from oriented edges given by dense indices; labels are 1-based
    /// positions. Orientation is canonicalized as in [`MetricTree::build`].
    pub fn from_edges(vertex_count: usize, edges: &[(usize, usize, f64)], root: usize) -> Result<MetricTree> {
        let desc = TreeDescription {
            vertices: (1..=vertex_count).collect(),
            edges: edges
                .iter()
                .enumerate()
                .map(|(j, &(a, b, t))| EdgeDescription {
                    id: j + 1,
                    from: a + 1,
                    to: b + 1,
                    length: t,
                })
                .collect(),
            root: root + 1,
        };
        Ok(MetricTree::build(&desc)?.0)
    }

    pub fn single_edge(length: f64) -> MetricTree {
        MetricTree::from_edges(2, &[(0, 1, length)], 0).expect("single edge is a tree")
    }

    /// Star with the center last; edge j joins boundary vertex j to it.
    pub fn star(lengths: &[f64]) -> Result<MetricTree> {
        let c = lengths.len();
        let edges: Vec<_> = lengths.iter().enumerate().map(|(j, &t)| (j, c, t)).collect();
        MetricTree::from_edges(c + 1, &edges, 0)
    }

    /// Two degree-3 vertices joined by one edge, each carrying two boundary
    /// edges: v1, v2 → v3, v3 → v6, v4, v5 → v6, rooted at v2.
    pub fn five_edge(lengths: [f64; 5]) -> MetricTree {
        let t = lengths;
        MetricTree::from_edges(
            6,
            &[(0, 2, t[0]), (1, 2, t[1]), (2, 5, t[2]), (3, 5, t[3]), (4, 5, t[4])],
            1,
        )
        .expect("five-edge tree is valid")
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e.0]
    }

    pub fn root(&self) -> VertexId {
        self.root
    }

    pub fn copies(&self) -> &[VertexId] {
        &self.copies
    }

    pub fn is_copy(&self, v: VertexId) -> bool {
        self.copies.contains(&v)
    }

    pub fn vertex_label(&self, v: VertexId) -> usize {
        self.vertex_labels[v.0]
    }

    pub fn edge_label(&self, e: EdgeId) -> usize {
        self.edge_labels[e.0]
    }

    pub fn vertex_by_label(&self, label: usize) -> Option<VertexId> {
        self.vertex_labels.iter().position(|&l| l == label).map(VertexId)
    }

    pub fn edge_by_label(&self, label: usize) -> Option<EdgeId> {
        self.edge_labels.iter().position(|&l| l == label).map(EdgeId)
    }

    /// Incident edges sorted by edge index.
    pub fn incident(&self, v: VertexId) -> &[(EdgeId, EdgeEnd)] {
        &self.incidence[v.0]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.incidence[v.0].len()
    }

    pub fn is_boundary(&self, v: VertexId) -> bool {
        self.degree(v) == 1
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        (0..self.vertex_count()).map(VertexId)
    }

    pub fn boundary_vertices(&self) -> Vec<VertexId> {
        self.vertices().filter(|&v| self.is_boundary(v)).collect()
    }

    pub fn internal_vertices(&self) -> Vec<VertexId> {
        self.vertices().filter(|&v| self.degree(v) > 1).collect()
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    /// The single edge at a boundary vertex.
    pub fn boundary_edge(&self, v: VertexId) -> Option<(EdgeId, EdgeEnd)> {
        match self.incident(v) {
            [one] => Some(*one),
            _ => None,
        }
    }

    pub fn neighbors(&self, v: VertexId) -> Vec<VertexId> {
        self.incident(v).iter().map(|&(e, _)| self.edge(e).other(v)).collect()
    }

    /// Every invariant of an admissible tree. Registered copies are exempt
    /// from the orientation rule.
    pub fn validate(&self) -> ValidationReport {
        let edges: Vec<_> = self.edges.iter().map(|e| (e.from.0, e.to.0, e.length)).collect();
        let vl = |v: usize| self.vertex_labels[v];
        let el = |j: usize| self.edge_labels[j];
        let mut issues = structural_issues(self.vertex_count(), &edges, &vl, &el, Some(self.root.0));
        for v in self.boundary_vertices() {
            if self.is_copy(v) {
                continue;
            }
            let (e, end) = self.incident(v)[0];
            let other_boundary = self.is_boundary(self.edge(e).other(v));
            // a single edge has two boundary ends; only one can be at x = 0
            if end == EdgeEnd::End && !other_boundary {
                issues.push(Issue::BoundaryOrientation {
                    edge: self.edge_label(e),
                    vertex: self.vertex_label(v),
                });
            }
        }
        ValidationReport { issues }
    }

    /// Subgraph on `edges` (parent order kept), with the listed parent
    /// vertices registered as copies. Degree-2 vertices are allowed here;
    /// callers that need an admissible tree validate the result.
    pub fn subgraph(&self, edges: &[EdgeId], copies: &[VertexId]) -> Result<Subtree> {
        let mut es: Vec<EdgeId> = edges.to_vec();
        es.sort();
        es.dedup();
        if es.is_empty() {
            return Err(Error::Invalid("empty subgraph".into()));
        }
        let mut verts = BTreeSet::new();
        for &e in &es {
            verts.insert(self.edge(e).from);
            verts.insert(self.edge(e).to);
        }
        let vertex_origin: Vec<VertexId> = verts.into_iter().collect();
        let local = |v: VertexId| VertexId(vertex_origin.binary_search(&v).unwrap());
        let new_edges: Vec<Edge> = es
            .iter()
            .map(|&e| {
                let ed = self.edge(e);
                Edge {
                    from: local(ed.from),
                    to: local(ed.to),
                    length: ed.length,
                }
            })
            .collect();
        let local_copies: Vec<VertexId> = copies
            .iter()
            .filter(|v| vertex_origin.binary_search(v).is_ok())
            .map(|&v| local(v))
            .collect();
        let mut deg = vec![0usize; vertex_origin.len()];
        for e in &new_edges {
            deg[e.from.0] += 1;
            deg[e.to.0] += 1;
        }
        let root = if let Some(&c) = local_copies.first() {
            c
        } else if let Ok(r) = vertex_origin.binary_search(&self.root) {
            if deg[r] == 1 {
                VertexId(r)
            } else {
                VertexId(deg.iter().position(|&d| d == 1).unwrap_or(0))
            }
        } else {
            VertexId(deg.iter().position(|&d| d == 1).unwrap_or(0))
        };
        let tree = MetricTree::assemble(
            vertex_origin.iter().map(|&v| self.vertex_label(v)).collect(),
            es.iter().map(|&e| self.edge_label(e)).collect(),
            new_edges,
            root,
            local_copies,
        );
        // connectivity
        let n = tree.vertex_count();
        if tree.edge_count() + 1 != n {
            return Err(Error::Invalid("subgraph is not a tree".into()));
        }
        Ok(Subtree {
            tree,
            edge_origin: es,
            vertex_origin,
        })
    }

    /// Edges reachable from `start` without crossing `blocked`.
    pub fn component_edges(&self, start: EdgeId, blocked: VertexId) -> Vec<EdgeId> {
        let mut seen_e = BTreeSet::from([start]);
        let mut stack = vec![];
        let e = self.edge(start);
        for v in [e.from, e.to] {
            if v != blocked {
                stack.push(v);
            }
        }
        let mut seen_v = BTreeSet::new();
        while let Some(v) = stack.pop() {
            if !seen_v.insert(v) {
                continue;
            }
            for &(f, _) in self.incident(v) {
                if seen_e.insert(f) {
                    let u = self.edge(f).other(v);
                    if u != blocked {
                        stack.push(u);
                    }
                }
            }
        }
        seen_e.into_iter().collect()
    }
}

/// A subgraph together with the maps back to its parent.
#[derive(Clone, Debug, PartialEq)]
pub struct Subtree {
    pub tree: MetricTree,
    /// Local edge index → parent edge.
    pub edge_origin: Vec<EdgeId>,
    /// Local vertex index → parent vertex.
    pub vertex_origin: Vec<VertexId>,
}

impl Subtree {
    pub fn local_vertex(&self, parent: VertexId) -> Option<VertexId> {
        self.vertex_origin.binary_search(&parent).ok().map(VertexId)
    }

    pub fn local_edge(&self, parent: EdgeId) -> Option<EdgeId> {
        self.edge_origin.binary_search(&parent).ok().map(EdgeId)
    }

    /// Local id of the copy of parent vertex `w`.
    pub fn copy_of(&self, w: VertexId) -> Option<VertexId> {
        self.local_vertex(w).filter(|&v| self.tree.is_copy(v))
    }

    /// Lift potentials of the parent to this subgraph.
    pub fn restrict_potentials(&self, parent: &crate::PotentialSet) -> crate::PotentialSet {
        crate::PotentialSet(self.edge_origin.iter().map(|e| parent.get(e.0).clone()).collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VertexSplit {
    pub vertex: VertexId,
    /// One part per incident edge of the split vertex, in edge-index order.
    pub parts: Vec<Subtree>,
}

/// Split at internal vertex `w` into deg(w) subtrees, each holding a copy of
/// `w` as a boundary vertex.
pub fn split_at_vertex(tree: &MetricTree, w: VertexId) -> Result<VertexSplit> {
    if w.0 >= tree.vertex_count() {
        return Err(Error::Invalid(format!("vertex index {} out of range", w.0)));
    }
    if tree.degree(w) < 2 {
        return Err(Error::SplitBoundaryVertex(tree.vertex_label(w)));
    }
    let parts = tree
        .incident(w)
        .iter()
        .map(|&(e, _)| tree.subgraph(&tree.component_edges(e, w), &[w]))
        .collect::<Result<Vec<_>>>()?;
    Ok(VertexSplit { vertex: w, parts })
}

impl VertexSplit {
    /// Merge the copies of the split vertex back: returns (from, to, length)
    /// in parent indices for every edge, ordered by parent edge index.
    pub fn reassemble(&self) -> Vec<(EdgeId, VertexId, VertexId, f64)> {
        let mut out = Vec::new();
        for p in &self.parts {
            for (j, e) in p.tree.edges().iter().enumerate() {
                out.push((
                    p.edge_origin[j],
                    p.vertex_origin[e.from.0],
                    p.vertex_origin[e.to.0],
                    e.length,
                ));
            }
        }
        out.sort_by_key(|x| x.0);
        out
    }
}

/// The five subtrees around an internal edge e_f = [u, w] (u at x = 0).
#[derive(Clone, Debug, PartialEq)]
pub struct FivePartDecomposition {
    pub edge: EdgeId,
    pub u: VertexId,
    pub w: VertexId,
    /// G_1 … G_5 at indices 0 … 4; G_3 = {e_f}.
    pub parts: [Subtree; 5],
}

impl FivePartDecomposition {
    pub fn part(&self, i: usize) -> &Subtree {
        &self.parts[i - 1]
    }
}

/// Five-part decomposition with the default labelling: G_2 is the part at u
/// containing the root, G_4 the part at w with the lower attaching edge.
pub fn split_edge_environment(tree: &MetricTree, f: EdgeId) -> Result<FivePartDecomposition> {
    split_edge_environment_with(tree, f, None)
}

/// As [`split_edge_environment`], with G_5 chosen as the part at w that
/// contains `far` when given.
pub fn split_edge_environment_with(
    tree: &MetricTree,
    f: EdgeId,
    far: Option<VertexId>,
) -> Result<FivePartDecomposition> {
    if f.0 >= tree.edge_count() {
        return Err(Error::Invalid(format!("edge index {} out of range", f.0)));
    }
    let e = *tree.edge(f);
    if tree.is_boundary(e.from) || tree.is_boundary(e.to) {
        return Err(Error::BoundaryEdge(tree.edge_label(f)));
    }
    for v in [e.from, e.to] {
        if tree.degree(v) != 3 {
            return Err(Error::UnsupportedDegree {
                vertex: tree.vertex_label(v),
                degree: tree.degree(v),
            });
        }
    }
    let (u, w) = (e.from, e.to);
    let side = |v: VertexId| -> Vec<Vec<EdgeId>> {
        tree.incident(v)
            .iter()
            .filter(|&&(g, _)| g != f)
            .map(|&(g, _)| tree.component_edges(g, v))
            .collect()
    };
    let mut at_u = side(u);
    let mut at_w = side(w);
    let root = tree.root();
    let contains =
        |edges: &[EdgeId], v: VertexId| edges.iter().any(|&g| tree.edge(g).from == v || tree.edge(g).to == v);
    if contains(&at_u[0], root) {
        at_u.swap(0, 1);
    }
    if let Some(v) = far {
        if contains(&at_w[0], v) {
            at_w.swap(0, 1);
        } else if !contains(&at_w[1], v) {
            return Err(Error::Invalid(format!(
                "vertex {} is not beyond edge {}",
                tree.vertex_label(v),
                tree.edge_label(f)
            )));
        }
    }
    let g1 = tree.subgraph(&at_u[0], &[u])?;
    let g2 = tree.subgraph(&at_u[1], &[u])?;
    let g3 = tree.subgraph(&[f], &[u, w])?;
    let g4 = tree.subgraph(&at_w[0], &[w])?;
    let g5 = tree.subgraph(&at_w[1], &[w])?;
    Ok(FivePartDecomposition {
        edge: f,
        u,
        w,
        parts: [g1, g2, g3, g4, g5],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn five_edge() -> MetricTree {
        MetricTree::five_edge([1.0; 5])
    }

    #[test]
    fn five_edge_is_valid_and_oriented() {
        let t = five_edge();
        assert!(t.validate().is_valid());
        assert_eq!(t.edge(EdgeId(2)).from, VertexId(2));
        assert_eq!(t.edge(EdgeId(2)).to, VertexId(5));
        for v in t.boundary_vertices() {
            let (e, end) = t.boundary_edge(v).unwrap();
            assert_eq!(end, EdgeEnd::Start, "edge {e:?}");
        }
    }

    #[test]
    fn single_edge_valid() {
        let t = MetricTree::single_edge(1.0);
        assert!(t.validate().is_valid());
        assert_eq!(t.boundary_vertices().len(), 2);
    }

    #[test]
    fn degree_two_path_invalid() {
        let desc = TreeDescription {
            vertices: vec![1, 2, 3],
            edges: vec![
                EdgeDescription {
                    id: 1,
                    from: 1,
                    to: 2,
                    length: 1.0,
                },
                EdgeDescription {
                    id: 2,
                    from: 2,
                    to: 3,
                    length: 1.0,
                },
            ],
            root: 1,
        };
        let r = validate_description(&desc);
        assert_eq!(r.issues, vec![Issue::DegreeTwo { vertex: 2 }]);
        assert!(matches!(MetricTree::build(&desc), Err(Error::InvalidTree(_))));
    }

    #[test]
    fn report_lists_every_issue() {
        let desc = TreeDescription {
            vertices: vec![1, 2, 3, 4],
            edges: vec![
                EdgeDescription {
                    id: 1,
                    from: 1,
                    to: 2,
                    length: -1.0,
                },
                EdgeDescription {
                    id: 2,
                    from: 2,
                    to: 1,
                    length: 1.0,
                },
                EdgeDescription {
                    id: 3,
                    from: 3,
                    to: 3,
                    length: 1.0,
                },
            ],
            root: 2,
        };
        let r = validate_description(&desc);
        assert!(r.issues.contains(&Issue::NonPositiveLength { edge: 1, length: -1.0 }));
        assert!(r.issues.contains(&Issue::SelfLoop { edge: 3 }));
        assert!(r.issues.contains(&Issue::Cycle));
        assert!(r.issues.contains(&Issue::Disconnected));
        assert!(r.issues.contains(&Issue::DegreeTwo { vertex: 1 }));
    }

    #[test]
    fn canonical_orientation_flips() {
        // described with the boundary vertex at x = T
        let desc = TreeDescription {
            vertices: vec![10, 20, 30, 40],
            edges: vec![
                EdgeDescription {
                    id: 1,
                    from: 40,
                    to: 10,
                    length: 1.0,
                },
                EdgeDescription {
                    id: 2,
                    from: 20,
                    to: 40,
                    length: 2.0,
                },
                EdgeDescription {
                    id: 3,
                    from: 30,
                    to: 40,
                    length: 3.0,
                },
            ],
            root: 20,
        };
        let (t, flipped) = MetricTree::build(&desc).unwrap();
        assert_eq!(flipped, vec![true, false, false]);
        assert!(t.validate().is_valid());
    }

    #[test]
    fn split_five_edge_at_v3() {
        let t = five_edge();
        let s = split_at_vertex(&t, VertexId(2)).unwrap();
        let sets: Vec<Vec<usize>> = s
            .parts
            .iter()
            .map(|p| p.edge_origin.iter().map(|e| e.0 + 1).collect())
            .collect();
        assert_eq!(sets, vec![vec![1], vec![2], vec![3, 4, 5]]);
        for p in &s.parts {
            assert!(p.tree.validate().is_valid(), "{}", p.tree.validate());
            assert!(p.copy_of(VertexId(2)).is_some());
        }
    }

    #[test]
    fn split_star_and_errors() {
        let t = MetricTree::star(&[1.0, 1.0, 1.0]).unwrap();
        let s = split_at_vertex(&t, VertexId(3)).unwrap();
        assert_eq!(s.parts.len(), 3);
        assert!(s.parts.iter().all(|p| p.tree.edge_count() == 1));
        let e = MetricTree::single_edge(1.0);
        assert!(matches!(
            split_at_vertex(&e, VertexId(0)),
            Err(Error::SplitBoundaryVertex(_))
        ));
        assert!(matches!(
            split_at_vertex(&e, VertexId(1)),
            Err(Error::SplitBoundaryVertex(_))
        ));
    }

    #[test]
    fn reassembly_reproduces_adjacency() {
        let t = five_edge();
        for w in t.internal_vertices() {
            let s = split_at_vertex(&t, w).unwrap();
            let back = s.reassemble();
            for (j, e) in t.edges().iter().enumerate() {
                assert_eq!(back[j], (EdgeId(j), e.from, e.to, e.length));
            }
        }
    }

    #[test]
    fn five_parts_of_five_edge() {
        let t = five_edge();
        let d = split_edge_environment(&t, EdgeId(2)).unwrap();
        for i in 1..=5 {
            assert_eq!(d.part(i).edge_origin, vec![EdgeId(i - 1)]);
            assert!(d.part(i).tree.validate().is_valid());
        }
        assert!(matches!(
            split_edge_environment(&t, EdgeId(0)),
            Err(Error::BoundaryEdge(1))
        ));
        let swapped = split_edge_environment_with(&t, EdgeId(2), Some(VertexId(3))).unwrap();
        assert_eq!(swapped.part(5).edge_origin, vec![EdgeId(3)]);
    }

    #[test]
    fn unsupported_degree() {
        // internal edge between a degree-4 and a degree-3 vertex
        let t = MetricTree::from_edges(
            7,
            &[
                (0, 5, 1.0),
                (1, 5, 1.0),
                (2, 5, 1.0),
                (5, 6, 1.0),
                (3, 6, 1.0),
                (4, 6, 1.0),
            ],
            0,
        )
        .unwrap();
        let f = EdgeId(3);
        assert!(matches!(
            split_edge_environment(&t, f),
            Err(Error::UnsupportedDegree { degree: 4, .. })
        ));
    }

    #[test]
    fn seven_edge_environment() {
        // e_f = [a, b]; a carries a boundary edge and a 3-edge star, b two boundary edges
        let t = MetricTree::from_edges(
            8,
            &[
                (0, 6, 1.0),
                (1, 5, 0.7),
                (2, 5, 0.9),
                (5, 6, 1.1),
                (6, 7, 1.3),
                (3, 7, 0.8),
                (4, 7, 1.2),
            ],
            0,
        )
        .unwrap();
        let f = t
            .edges()
            .iter()
            .position(|e| {
                let ends = [e.from, e.to];
                ends.contains(&VertexId(6)) && ends.contains(&VertexId(7))
            })
            .map(EdgeId)
            .unwrap();
        let d = split_edge_environment(&t, f).unwrap();
        let mut all: Vec<EdgeId> = d.parts.iter().flat_map(|p| p.edge_origin.clone()).collect();
        all.sort();
        assert_eq!(all, (0..7).map(EdgeId).collect::<Vec<_>>());
        for p in &d.parts {
            assert!(p.tree.validate().is_valid());
        }
        // the root side carries v1
        assert!(d.part(2).local_vertex(VertexId(0)).is_some());
    }
}
