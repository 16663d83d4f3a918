//! Solvers and structural analysis for parameter-dependent linear ODEs
//!
//! The objects of study are equations `g^p(t,x) u_p + ... + g^1(t,x) u_1 + g^0(t,x) u = f(t,x)`
//! on an open region of the `(t,x)`-plane, where `t` is a parameter and derivatives
//! are taken in `x`.  Whether such an equation admits a fundamental set of solutions
//! (or any solution at all, in the inhomogeneous case) that depends continuously on
//! `t` is a property of the region's vertical-slice topology, not of the coefficients.
//! This crate provides:
//!
//! - region geometry: slices, bounds, x-simplicity classification, witness search
//!   for non-simplicity, and smooth sections ([`domain`]);
//! - a small expression language for coefficients and right-hand sides ([`expr`]);
//! - operator validation and companion-system construction ([`operators`]);
//! - adaptive Runge-Kutta slice integration with dense output ([`integrate`]);
//! - fundamental sets, Wronskian fields, and expansions ([`fundamental`]);
//! - particular and general solutions of inhomogeneous problems ([`inhomog`]);
//! - first-order systems with fundamental matrices ([`systems`]);
//! - generators for the pathological instances that show where solvability
//!   fails on non-x-simple regions ([`pathology`]).

pub mod config;
pub mod domain;
pub mod expr;
pub mod fundamental;
pub mod inhomog;
pub mod integrate;
pub mod io;
pub mod operators;
pub mod pathology;
pub mod presets;
pub mod systems;

pub use config::{GridSpec, SolverConfig};
pub use domain::{Classification, Region, Slice, Witness};
pub use expr::Expr;
pub use integrate::{ParamSolution, SliceSolution, SliceStatus};
pub use operators::{LinearSystem, ScalarOperator};
pub use pathology::{PathologyKind, PathologyReport, PuncturedSquare};
pub use presets::{classifier_fixtures, ClassifierFixture};


