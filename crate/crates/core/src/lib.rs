//! P1 finite-element solver for antiplane frictional contact with adhesion.
//!
//! The pieces, roughly in dependency order:
//!
//! * [`mesh`]: triangulations with a tagged boundary partition,
//! * [`sparse`]: symmetric sparse storage and the linear solvers,
//! * [`fem`]: degrees of freedom, assembly, norms, the trace constant,
//! * [`laws`]: friction bound, bonding evolution laws and their constants,
//! * [`vi`]: the frozen-coefficient variational inequality,
//! * [`bonding`]: the bonding-field integral equation,
//! * [`scheme`]: the outer fixed-point iteration,
//! * [`bounds`]: a priori estimates evaluated as diagnostics,
//! * [`oracle`]: brute-force references for testing,
//! * [`export`]: CSV and VTK writers.

pub mod bonding;
pub mod bounds;
pub mod export;
pub mod fem;
pub mod laws;
pub mod mesh;
pub mod oracle;
pub mod scheme;
pub mod sparse;
pub mod vi;
