use thiserror::Error;

/// Errors shared across the solver modules.
#[derive(Debug, Error)]
pub enum Error {
    /// Fewer than `expected` linearly independent rows were found.
    #[error("matrix does not contain {expected} linearly independent rows")]
    RankDeficient { expected: usize },

    /// The information matrix at a starting design is singular; the caller
    /// must reseed before running an engine or a local search.
    #[error("information matrix is singular at the starting design")]
    SingularStart,

    /// A seed construction ran out of indices.
    #[error("budget needs {needed} indices but only {available} are available")]
    BudgetExceedsN { needed: i64, available: i64 },

    /// Variable-bound tightening crossed the bounds of a variable; the
    /// node contains no solution better than the incumbent.
    #[error("tightened bounds cross at variable {index}: [{lo}, {hi}]")]
    EmptyBox { index: usize, lo: i64, hi: i64 },

    /// Every feasible point of the subproblem has a singular information
    /// matrix; the node can be pruned.
    #[error("no feasible point of the subproblem has a nonsingular information matrix")]
    NoInteriorStart,

    /// Dual recovery was requested at a point with singular information
    /// matrix.
    #[error("information matrix is singular at the given point")]
    SingularPoint,

    /// No feasible design has a finite objective.
    #[error("no feasible design with finite objective exists")]
    Infeasible,

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    /// Random generation kept drawing rank-deficient matrices.
    #[error("no full-rank draw in {attempts} attempts; parameters are degenerate")]
    GenerationFailed { attempts: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
