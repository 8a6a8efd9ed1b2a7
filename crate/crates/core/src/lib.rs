//! Numerical toolkit for the four-level non-Hermitian Yang monopole model.
//!
//! The model Hamiltonian is `H = q·Γ + iκΓ₄` on a five-dimensional parameter
//! space. Its doubly degenerate bands coalesce on the exceptional hypersphere
//! `{q₄ = 0, q₁² + q₂² + q₃² + q₅² = κ²}`.
//!
//! Modules, bottom up:
//! - [`clifford`]: Dirac basis, parameter points, Hamiltonians.
//! - [`spectral`]: eigen-decomposition, exceptional-point detection, branch tracking.
//! - [`geometry`]: non-Abelian connection and curvature, gauge fixing, second Chern number.
//! - [`wilson`]: Wilczek–Zee holonomy and Wilson loops.
//! - [`cqed`]: circuit-QED realization, Lindblad and no-jump dynamics, eigenstate fitting.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod clifford;
pub mod cqed;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod ode;
pub mod spectral;
pub mod wilson;

pub use clifford::{
    build_hamiltonian, build_moebius_hamiltonian, dirac_basis, spherical_to_cartesian, DiracBasis,
    ParameterPoint, Spherical,
};
pub use cqed::{
    build_full_hamiltonian, effective_hamiltonian, fit_eigenstates, lindblad_evolve, nh_hamiltonian,
    no_jump_evolve, postselect, protocol_chern, validate_mapping, CqedConfig, FitResult, Hardware,
    MappingReport, ProtocolConfig, SystemState, TrajectorySample,
};
pub use error::{Error, Result};
pub use geometry::{
    berry_connection, berry_curvature, chern_integrand, gauge_fix, second_chern, ChernOptions,
    ChernResult, ConnectionKind, Direction, Frame, Gauge, QuadratureGrid,
};
pub use linalg::{Mat2, Mat4, Mat4x2, Vec4, C64};
pub use spectral::{
    detect_ep, eigensystem, eigenvalues_closed_form, right_eigenvectors_closed_form,
    spectrum_scan, track_branches, Band, BranchTrack, EigenPair, EigenSystem, EpReport,
    Permutation,
};
pub use wilson::{holonomy, moebius_wilson, HolonomyResult, LoopSpec, TransportSeries};
