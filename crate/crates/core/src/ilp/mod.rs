//! Small deterministic integer linear programming toolkit.

mod bnb;
mod export;
pub mod lp;
mod model;

pub use bnb::{solve, solve_relaxation, solve_with, IlpSolution, Limits, SolveStatus};
pub use export::export_lp;
pub use model::{Constraint, Direction, IlpModel, Sense, VarId, VarKind, Variable};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IlpError {
    #[error("malformed model: {0}")]
    ModelMalformed(String),
    #[error("search budget exhausted after {nodes} nodes without a feasible assignment")]
    BudgetExhaustedNoIncumbent { nodes: u64 },
}
