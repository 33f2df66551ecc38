//! Weighted Dirichlet energy `∫‖Df‖²/|f|²` of maps between concentric
//! annuli in R³, its radial minimizers, and the classical energy of radial
//! harmonic maps.
//!
//! Numerical code is generic over [`scalar::Real`]; rational arithmetic is
//! supported where formulas are rational ([`nitsche`]). The aliases below fix
//! the scalar for everyday use.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod energy;
pub mod error;
pub mod fd;
pub mod geometry;
pub mod maps;
pub mod nitsche;
pub mod scalar;
pub mod sphere_maps;
pub mod variational;
pub mod verify;

pub use error::{Error, Result};

use num_rational::BigRational;

pub type Vec3F64 = geometry::Vec3<f64>;
pub type AnnulusF64 = geometry::Annulus<f64>;
pub type AnnulusPairF64 = geometry::AnnulusPair<f64>;
pub type RadialGridF64 = geometry::RadialGrid<f64>;
pub type MobiusF64 = sphere_maps::MobiusTransform<f64>;
pub type RadialProfileF64 = maps::RadialProfile<f64>;
pub type GeneralizedRadialMapF64 = maps::GeneralizedRadialMap<f64>;
pub type ModulatedRadialMapF64 = maps::ModulatedRadialMap<f64>;
pub type EnergyReportF64 = energy::EnergyReport<f64>;
pub type DiscreteSolutionF64 = variational::DiscreteSolution<f64>;
pub type NitscheVerdictF64 = nitsche::NitscheVerdict<f64>;

pub type AnnulusPairF32 = geometry::AnnulusPair<f32>;

/// Exact pairs, for deciding the Nitsche condition without rounding.
pub type AnnulusPairExact = geometry::AnnulusPair<BigRational>;
pub type NitscheVerdictExact = nitsche::NitscheVerdict<BigRational>;
