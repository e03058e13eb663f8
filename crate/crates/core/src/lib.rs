//! Certified existence checks for mutually unbiased (MU) constellations.
//!
//! A constellation `{d-1, λ, μ, ν, ...}_d` is turned into an exact polynomial
//! system ([`constellation`]), which three independent engines try to refute:
//! exhaustive grid exclusion with rigorous error bounds ([`gridsearch`]),
//! Gröbner-basis triviality with Nullstellensatz certificates ([`groebner`]),
//! and Lasserre moment relaxations solved by an interior-point SDP solver
//! ([`lasserre`], [`sdpsolve`]).

pub mod constellation;
pub mod error;
pub mod gridsearch;
pub mod groebner;
pub mod lasserre;
pub mod linalg;
pub mod poly;
pub mod sdpsolve;

pub use error::{Error, Result};
