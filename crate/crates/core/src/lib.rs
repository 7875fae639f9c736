//! An instrumented laboratory for randomized incremental construction (RIC).
//!
//! Four classic RIC processes are implemented with per-step structural-change
//! traces: quicksort viewed as interval refinement, the dart-throwing minimum
//! game, trapezoidal maps of line segments (conflict-graph and list-free
//! modes), and incremental Delaunay triangulation with edge flips. Alongside
//! them live analytic martingale tail-bound evaluators (Freedman, Azuma, and
//! the MSW `(n,r)`-tree bound), an exact Doob-martingale oracle for tiny
//! inputs, a reproducible Monte Carlo harness, and an adversarial two-pile
//! segment input whose conflict-graph work has a heavy tail.
//!
//! Everything is deterministic given a master seed: trial `i` draws from an
//! independent stream derived from `(seed, i)`, so experiments reproduce
//! byte-identically at any parallelism degree.

pub mod adversary;
pub mod bounds;
pub mod darts;
pub mod delaunay;
pub mod doob;
pub mod experiment;
pub mod geom;
pub mod quicksort;
pub mod rng;
pub mod stats;
pub mod trace;
pub mod trapmap;

pub use bounds::{MswParams, TailBoundParams};
pub use rng::{InsertionOrder, Seed};
pub use stats::TrialStats;
pub use trace::WorkTrace;
