//! Forward and partial-inverse spectral computations for Sturm–Liouville
//! operators −y'' + q y = λ y on compact metric trees with standard matching
//! conditions.
//!
//! The forward side assembles characteristic determinants, finds spectra and
//! evaluates Weyl functions. The inverse side reconstructs the potential on
//! a tree from characteristic-function data when the potential on one edge
//! is known.

// `!(x <= tol)` is used on purpose so that NaN fails a check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod charfn;
pub mod closed_forms;
pub mod error;
pub mod graph;
pub mod inverse;
pub mod io;
pub mod ode;
pub mod par;
pub mod potential;
pub mod rootfind;
pub mod spectral;
pub mod verify;

pub use num_complex::Complex64 as C64;

pub use charfn::{
    assemble_char_fn, bordered_determinant, char_fn_by_split, find_eigenvalues, subtree_weyl_ratio, weyl_function, Bc,
    BoundarySpec, CharFn, ProblemSpec, SpectrumSet, WeylSample,
};
pub use error::{Error, Result};
pub use graph::{
    split_at_vertex, split_edge_environment, EdgeId, MetricTree, TreeDescription, ValidationReport, VertexId,
};
pub use ode::{fundamental_pair, fundamental_pair_grid, FundamentalPair, SpectralParameter};
pub use potential::{Potential, PotentialSet};
pub use spectral::{reconstruct_char_fn, TruncatedProduct};
