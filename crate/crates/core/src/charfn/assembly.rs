//! The matching system in the coefficients of y_j = a_j C_j + b_j S_j.
//!
//! Columns are (a_j, b_j) in edge order. A boundary vertex sitting at x = 0
//! removes a column (a_j for Dirichlet, b_j for Neumann); one sitting at
//! x = T contributes a row. Internal vertices, in index order, contribute
//! chained continuity rows over their incident edges followed by the
//! Kirchhoff row, where the derivative at a T-end enters as +y'(T) and at a
//! 0-end as −y'(0).

use nalgebra::{DMatrix, DVector};

use crate::charfn::Bc;
use crate::graph::{EdgeEnd, MetricTree, VertexId};
use crate::ode::FundamentalPair;
use crate::{Error, Result, C64};

const ONE: C64 = C64::new(1.0, 0.0);

type Row = Vec<(usize, C64)>;

/// Sparse rows over the full 2m unknowns plus the kept columns.
pub(crate) struct System {
    pub rows: Vec<Row>,
    pub row_vertex: Vec<VertexId>,
    pub cols: Vec<usize>,
    width: usize,
}

fn col(edge: usize, b: bool) -> usize {
    2 * edge + b as usize
}

fn value(vals: &[FundamentalPair], edge: usize, end: EdgeEnd) -> Row {
    match end {
        EdgeEnd::Start => vec![(col(edge, false), ONE)],
        EdgeEnd::End => vec![(col(edge, false), vals[edge].c), (col(edge, true), vals[edge].s)],
    }
}

fn derivative(vals: &[FundamentalPair], edge: usize, end: EdgeEnd) -> Row {
    match end {
        EdgeEnd::Start => vec![(col(edge, true), ONE)],
        EdgeEnd::End => vec![(col(edge, false), vals[edge].cp), (col(edge, true), vals[edge].sp)],
    }
}

pub(crate) fn build(
    tree: &MetricTree,
    vals: &[FundamentalPair],
    bc: &dyn Fn(VertexId) -> Bc,
    corrupt: Option<VertexId>,
) -> System {
    let mut rows = Vec::new();
    let mut row_vertex = Vec::new();
    let mut removed = vec![false; 2 * tree.edge_count()];
    for v in tree.vertices() {
        let inc = tree.incident(v);
        if inc.len() == 1 {
            let (e, end) = inc[0];
            match (end, bc(v)) {
                (EdgeEnd::Start, Bc::Dirichlet) => removed[col(e.0, false)] = true,
                (EdgeEnd::Start, Bc::Neumann) => removed[col(e.0, true)] = true,
                (EdgeEnd::End, Bc::Dirichlet) => {
                    rows.push(value(vals, e.0, end));
                    row_vertex.push(v);
                }
                (EdgeEnd::End, Bc::Neumann) => {
                    rows.push(derivative(vals, e.0, end));
                    row_vertex.push(v);
                }
            }
        } else {
            for pair in inc.windows(2) {
                let mut r = value(vals, pair[0].0 .0, pair[0].1);
                r.extend(value(vals, pair[1].0 .0, pair[1].1).into_iter().map(|(c, x)| (c, -x)));
                rows.push(r);
                row_vertex.push(v);
            }
            let mut k = Vec::new();
            for (i, &(e, end)) in inc.iter().enumerate() {
                let sign = if end == EdgeEnd::Start { -1.0 } else { 1.0 };
                let flip = if corrupt == Some(v) && i == 0 { -1.0 } else { 1.0 };
                k.extend(
                    derivative(vals, e.0, end)
                        .into_iter()
                        .map(|(c, x)| (c, x * sign * flip)),
                );
            }
            rows.push(k);
            row_vertex.push(v);
        }
    }
    let cols = (0..removed.len()).filter(|&c| !removed[c]).collect();
    System {
        rows,
        row_vertex,
        cols,
        width: removed.len(),
    }
}

impl System {
    fn position(&self) -> Vec<Option<usize>> {
        let mut pos = vec![None; self.width];
        for (i, &c) in self.cols.iter().enumerate() {
            pos[c] = Some(i);
        }
        pos
    }

    pub fn dense(&self) -> DMatrix<C64> {
        let n = self.cols.len();
        let pos = self.position();
        let mut m = DMatrix::zeros(self.rows.len(), n);
        for (i, r) in self.rows.iter().enumerate() {
            for &(c, x) in r {
                if let Some(j) = pos[c] {
                    m[(i, j)] += x;
                }
            }
        }
        m
    }

    pub fn determinant(&self) -> C64 {
        let m = self.dense();
        if m.nrows() != m.ncols() {
            return C64::new(f64::NAN, f64::NAN);
        }
        if m.nrows() == 0 {
            return ONE;
        }
        m.lu().determinant()
    }

    /// Coefficients of full column `c` in every row.
    fn column(&self, c: usize) -> DVector<C64> {
        DVector::from_iterator(
            self.rows.len(),
            self.rows
                .iter()
                .map(|r| r.iter().filter(|(k, _)| *k == c).map(|(_, x)| *x).sum()),
        )
    }

    /// Solve for the full coefficient vector with an extra right-hand side.
    fn solve(&self, rhs: DVector<C64>, fixed: Option<(usize, C64)>, lambda: C64) -> Result<Vec<C64>> {
        let m = self.dense();
        let lu = m.lu();
        let sol = lu.solve(&rhs).ok_or(Error::PoleProximity {
            lambda,
            value: 0.0,
            floor: 0.0,
        })?;
        let mut full = vec![C64::new(0.0, 0.0); self.width];
        for (i, &c) in self.cols.iter().enumerate() {
            full[c] = sol[i];
        }
        if let Some((c, x)) = fixed {
            full[c] = x;
        }
        Ok(full)
    }
}

/// ψ'(v) pointing into the tree, for the solution with ψ(v) = 1 and the
/// other boundary conditions of `bc`. `sys` must be assembled with
/// Dirichlet at `v`.
pub(crate) fn weyl_by_solve(
    tree: &MetricTree,
    vals: &[FundamentalPair],
    sys: &System,
    v: VertexId,
    lambda: C64,
) -> Result<C64> {
    let (e, end) = tree
        .boundary_edge(v)
        .ok_or_else(|| Error::Invalid(format!("vertex {} is not a boundary vertex", tree.vertex_label(v))))?;
    let j = e.0;
    match end {
        EdgeEnd::Start => {
            let rhs = -sys.column(col(j, false));
            let full = sys.solve(rhs, Some((col(j, false), ONE)), lambda)?;
            Ok(full[col(j, true)])
        }
        EdgeEnd::End => {
            let mut rhs = DVector::zeros(sys.rows.len());
            let row = sys
                .row_vertex
                .iter()
                .position(|&w| w == v)
                .expect("boundary row present");
            rhs[row] = ONE;
            let full = sys.solve(rhs, None, lambda)?;
            let f = &vals[j];
            Ok(-(full[col(j, false)] * f.cp + full[col(j, true)] * f.sp))
        }
    }
}
