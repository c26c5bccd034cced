//! Principal Dirichlet eigenvalues of `-1/2 d²/dx² - V` on intervals.
//!
//! The operator is discretised by the standard second-order stencil on a
//! uniform interior grid with Dirichlet ends, giving a symmetric
//! tridiagonal matrix with diagonal `1/s² - V_i` and off-diagonal
//! `-1/(2s²)`. The smallest eigenvalue comes from bisection on the Sturm
//! sequence, the ground state from inverse iteration. The ground state is
//! simple and nodeless, so the eigenvector is sign-fixed positive.

mod solver;
mod subbox;
mod tail;

pub use solver::{principal_eigenvalue, EigenResult, Potential};
pub use subbox::{min_subbox_eigenvalue, BoxEigen, SubBoxScan};
pub use tail::{eigenvalue_tail_mc, TailMcResult, TailPoint};

#[derive(Clone, Debug, PartialEq)]
pub enum SchrodingerError {
    BadPotential { detail: String },
    GridTooCoarse { n_grid: usize },
    /// Sub-box scan needs `R > r`.
    NoAdmissibleBoxes { r: f64, big_r: f64 },
    BadParams { detail: String },
    Field(crate::field_synth::FieldError),
}

impl std::fmt::Display for SchrodingerError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SchrodingerError::BadPotential { detail } => write!(f, "bad potential: {detail}"),
            SchrodingerError::GridTooCoarse { n_grid } => {
                write!(f, "eigen grid needs at least 16 interior points, got {n_grid}")
            }
            SchrodingerError::NoAdmissibleBoxes { r, big_r } => {
                write!(f, "no admissible sub-boxes: window {big_r} must exceed box size {r}")
            }
            SchrodingerError::BadParams { detail } => write!(f, "bad parameters: {detail}"),
            SchrodingerError::Field(e) => write!(f, "field synthesis: {e}"),
        }
    }
}

impl std::error::Error for SchrodingerError {}

impl From<crate::field_synth::FieldError> for SchrodingerError {
    fn from(e: crate::field_synth::FieldError) -> Self {
        SchrodingerError::Field(e)
    }
}
