//! revc: a compiler from a small typed functional language to reversible
//! boolean circuits.
//!
//! The pipeline has three independently usable stages:
//!
//! * [`syntax`] and [`typecheck`]: parse and type programs over bits, pairs,
//!   sums, lists, and general recursion.
//! * [`machine`]: run a circuit-generating abstract machine that evaluates a
//!   first-order program symbolically, emitting one reversible gate per
//!   boolean step.
//! * [`lifting`]: translate the same program into an internal state-passing
//!   form whose ordinary evaluation produces the identical gate list.
//!
//! [`circuit`] holds the gate representation together with simulation,
//! inversion, composition, and the uncomputation construction; [`optimizer`]
//! rewrites gate lists without changing their semantics.

pub mod syntax;
pub mod typecheck;
pub mod eval;
pub mod circuit;
pub mod machine;
pub mod lifting;
pub mod optimizer;
pub mod guide;
