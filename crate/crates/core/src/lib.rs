//! Simulation and resource estimation for continuous-variable cluster states.
//!
//! Modes are labelled `1..=n` everywhere in the public API. Quadrature
//! vectors are ordered `(q_1, .., q_n, p_1, .., p_n)` with `ħ = 1`, so the
//! vacuum has variance `1/2` in each quadrature.

pub mod cli;
pub mod fock;
pub mod gaussian;
pub mod graph;
pub mod mbqc;
pub mod nullifier;
pub mod resources;

pub use graph::{Graph, GraphError};
pub use nullifier::{NullifierSet, QuadratureForm};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/nullifiers.md")]
    mod nullifiers {}
    #[doc = include_str!("../../../book/src/gaussian.md")]
    mod gaussian {}
    #[doc = include_str!("../../../book/src/programs.md")]
    mod programs {}
    #[doc = include_str!("../../../book/src/resources.md")]
    mod resources {}
    #[doc = include_str!("../../../book/src/cubic.md")]
    mod cubic {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
