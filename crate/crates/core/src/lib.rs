//! Solvers for the integer D-optimality problem: choose integer repetition
//! counts `x` with `eᵀx = s` and `l ≤ x ≤ u` maximizing
//! `ldet Σ xℓ vℓvℓᵀ`.
//!
//! The crate is organized around the pipeline of an exact solve:
//!
//! - [`instance`]: problem data, random generation, file I/O, and the
//!   reduction to zero lower bounds.
//! - [`detengine`]: five interchangeable engines that maintain `ldet B`
//!   across `x ← x + eᵢ − eⱼ` swap moves (full refactorization, Cholesky
//!   up/downdate, Sherman–Morrison, SVD update, QR update).
//! - [`heuristics`]: SVD-based seed designs and the FI/FI⁺/BI swap local
//!   searches.
//! - [`relaxation`]: Frank–Wolfe solver for the continuous relaxation and
//!   recovery of a feasible Lagrangian dual point whose value is a
//!   certified upper bound.
//! - [`bounds`]: Hadamard and spectral bounds on the 0/1 row expansion,
//!   and duality-based variable-bound tightening.
//! - [`bnb`]: the branch-and-bound driver with its configurable
//!   enhancements (VBT, LSI, LSC, HS).
//!
//! With the default `parallel` feature the seed×mode heuristic sweep and
//! the branch-and-bound node loop can fan out across threads; without it
//! everything runs on the calling thread.

pub mod bnb;
pub mod bounds;
pub mod detengine;
pub mod error;
pub mod heuristics;
pub mod instance;
pub mod linalg;
pub mod relaxation;

pub use bnb::{OptResult, SolverConfig, SolveStatus};
pub use detengine::{EngineState, Strategy, SwapEval};
pub use error::{Error, Result};
pub use heuristics::{Mode, SeedKind};
pub use instance::{Design, Instance, Normalized};
