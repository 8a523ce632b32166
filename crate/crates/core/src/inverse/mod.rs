//! Partial inverse problem: recover the potential on a tree from spectra
//! when the potential on one edge is known.

pub mod coefficients;
pub mod cut;
pub mod fit;
pub mod pipeline;
pub mod tracking;

pub use coefficients::{
    build_coefficient_table, reference_table, CoefRow, CoefficientSource, CoefficientTable, Environment, PartFunctions,
    PartValues, ReferenceTable,
};
pub use cut::{cut_boundary_edges, CutResult};
pub use fit::{recover_edge_potential, FitOptions, FitProblem, FitTarget, Observable, RecoveredPotential};
pub use pipeline::{
    forward_spectra, run_partial_inverse, spectrum_tag, Certificate, InverseOptions, InverseOutcome, InverseProblem,
    SpectrumInput, StageReport, Variant,
};
pub use tracking::{solve_quadratic_track, RootTrack, StartPoint, TrackOptions};
