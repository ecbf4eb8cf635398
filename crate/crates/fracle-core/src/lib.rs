//! Discrete fractional Dirichlet operators, their spectral calculus, and
//! critical-point solvers for Hamiltonian elliptic systems
//! `(-Delta)^s u = H_v(x, u, v)`, `(-Delta)^s v = H_u(x, u, v)` on intervals and
//! rectangles.
#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod error;
pub mod exponents;
pub mod grid;
pub mod hamiltonian;
pub mod operators;
pub mod quadrature;
pub mod solver;
pub mod spectral;
pub mod variational;

pub use error::{Error, Result};
pub use grid::{integrate, lp_norm, make_grid, DomainGrid, GridFunction, Point, Quadrature};
