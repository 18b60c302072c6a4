//! Ultrametric-preserving functions as endomorphisms of the monoid
//! `(R+, max, 0)`, made executable.
//!
//! * [`rational`]: exact nonnegative rationals.
//! * [`metric`]: finite (pseudo)ultrametric spaces, `d⁺`, truncation, `f ∘ d`.
//! * [`piecewise`]: piecewise affine functions, the increasing/amenable
//!   classifier and a brute-force preservation oracle.
//! * [`chain`]: the chain monoid `Cₙ`, its endomorphisms, kernels, generated
//!   subsemigroups and right ideals.
//! * [`px`]: `P_X` for finite classes of spaces and the conjecture harness.
//! * [`verify`]: the invariant suites behind `upx verify`.

pub mod chain;
pub mod corpus;
pub mod metric;
pub mod piecewise;
pub mod px;
pub mod rational;
pub mod verify;

pub use chain::{ChainEndo, EndoSet, MonoidError};
pub use metric::{FiniteSpace, MetricError};
pub use piecewise::{Category, PiecewiseFn, PreservationVerdict};
pub use px::{CandidateMap, PxError, SpaceClass};
pub use rational::NonNegRational;
