//! Standard-form conic programs over zero, nonnegative and positive
//! semidefinite cones, plus a native primal-dual interior-point backend.
//!
//! A program is stated as
//!
//! ```text
//! minimize    cᵀx
//! subject to  A x + s = b,   s ∈ K = K₁ × K₂ × … × K_p
//! ```
//!
//! where every `Kᵢ` is a zero cone, a nonnegative orthant or a PSD cone
//! stored in scaled-vectorized form (see [`svec`]). Programs are usually
//! built with [`ProgramBuilder`], which maps named matrix-valued decision
//! blocks onto `x` and turns block LMIs into PSD cone rows.

mod cone;
mod error;
mod expr;
mod ipm;
mod lmi;
mod program;
mod sparse;
mod svec;

pub use cone::Cone;
pub use error::SdpError;
pub use expr::{AffineExpr, Term};
pub use ipm::{solve, IpmSolver};
pub use lmi::{BlockLmi, Sense};
pub use program::{
    ConicProgram, ConicSolution, ProgramBuilder, SolveStatus, SolverSettings, VarBlock, VarId,
    VarShape,
};
pub use sparse::SparseMatrix;
pub use svec::{smat, svec, svec_index, svec_len, tri_side};

/// Anything that can solve a [`ConicProgram`].
///
/// Implementations must be reentrant: `solve` takes `&self` and keeps no
/// state between calls.
pub trait ConicSolver: Send + Sync {
    fn id(&self) -> &str;
    fn solve(&self, program: &ConicProgram, settings: &SolverSettings) -> ConicSolution;
}
