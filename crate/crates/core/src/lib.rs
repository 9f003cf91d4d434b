//! Mapping tori of linear torus automorphisms and the rank of their products.
//!
//! A mapping torus `M(A)` of `A` in `GL(k, Z)` always carries `k` commuting,
//! everywhere independent vector fields, and exactly `k` unless `A = I`.
//! When `A` and `B` have coprime finite orders, `M(A) x M(B)` is itself the
//! mapping torus of a nontrivial `H` in `GL(k + r + 1, Z)`, so its rank is
//! `k + r + 1`, one more than the sum of the ranks of the factors.
//!
//! - [`intmat`]: exact integer matrices (orders, Smith normal form).
//! - [`torus_bundle`]: `pi_1`, `H_1`, orientability and rank of `M(A)`.
//! - [`product_theorem`]: the decomposition `M(A) x M(B) = M(H)`.
//! - [`frame`]: numerical construction and verification of commuting frames.
//! - [`search`]: enumeration of finite-order elements and certificates.

pub mod error;
pub mod frame;
pub mod intmat;
pub mod product_theorem;
pub mod search;
pub mod torus_bundle;

pub use error::{Error, Result};
pub use frame::{
    bracket_coefficients, build_frame, build_frame_with, verify_frame, verify_frame_with,
    CoefficientFrame, Concatenated, Derivative, FlipProfile, FrameCoefficients, FrameConfig,
    GlPlusPath, PerturbedFrame, SmoothStep, VerificationReport,
};
pub use intmat::{IntMatrix, MatrixOrder, SmithNormalForm, DEFAULT_ORDER_CAP};
pub use product_theorem::{
    bezout, decompose, rank_gap, rebase_action, BasisChange, BezoutPair, Certificate,
    DecompositionChecks, ProductDecomposition, RankGap,
};
pub use search::{
    enumerate_finite_order, find_counterexamples, CounterexampleCertificate, FiniteOrderElement,
    SearchConfig,
};
pub use torus_bundle::{Abelianization, MappingTorus, Pi1Data, Rank, TorusAutomorphism};
