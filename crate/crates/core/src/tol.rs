//! Every numeric threshold used by the library and its test suites.

/// Cross-check between the resultant and root-product discriminants.
pub const DISC_CROSS_CHECK: f64 = 1e-8;
/// Roots closer than this make the root-product discriminant a warning, not an error.
pub const DISC_CLUSTER: f64 = 1e-4;
/// Leading coefficient below this (relative to the largest) makes a line degenerate.
pub const LEADING_COEFF_REL: f64 = 1e-14;
/// Minimum root spacing accepted by partial fractions.
pub const PF_MIN_SPACING: f64 = 1e-8;
/// Minimum |p'(tau_j)| accepted by partial fractions.
pub const PF_MIN_DERIV: f64 = 1e-12;
/// Internal partial-fraction identity check.
pub const PF_SELF_CHECK: f64 = 1e-6;
/// Maximum Newton polishing steps per root.
pub const NEWTON_STEPS: usize = 5;
/// Tie window for lexicographic root ordering.
pub const ROOT_TIE: f64 = 1e-12;
/// Theta orthogonality check for line restrictions.
pub const ORTHO: f64 = 1e-12;
/// Symmetric eigensolve tolerance in the second-order normal form.
pub const SYM_EIGEN: f64 = 1e-12;
/// |Im q| <= this * (1 + |q|) is treated as a real root by the branch rule.
pub const REAL_ROOT: f64 = 1e-12;
/// Directions with |P_N(theta)| at or below this are rejected.
pub const PRINCIPAL_MIN: f64 = 1e-8;
/// Candidate directions from the sphere sampler must clear this.
pub const CANDIDATE_PRINCIPAL_MIN: f64 = 1e-3;
/// Normality of Dirac M(xi).
pub const NORMALITY: f64 = 1e-10;
/// Projection identities.
pub const PROJECTION: f64 = 1e-10;
/// Energy fraction allowed outside the inner half before rotation refuses.
pub const GUARD_BAND: f64 = 1e-12;
/// Margin (in cells) excluded from the interior finite-difference residual.
pub const FD_MARGIN: usize = 8;
/// Order of the central finite-difference stencils.
pub const FD_ORDER: usize = 8;
/// Default number of Lagrange points for the high-order line integrator.
pub const LAGRANGE_POINTS: usize = 12;

// acceptance thresholds

pub const PF_IDENTITY: f64 = 1e-8;
pub const DISC_LAWS: f64 = 1e-8;
pub const MIXED_NORM_QUAD: f64 = 1e-8;
pub const MIXED_EXACT: f64 = 1e-12;
pub const ROUNDOFF_BOUND: f64 = 1e-12;
pub const MULTIPLIER_QUAD: f64 = 0.02;
pub const PARTITION: f64 = 1e-12;
pub const RESIDUAL_256: f64 = 1e-3;
pub const REFINEMENT_ORDER: f64 = 4.0;
pub const TWO_ROUTE: f64 = 1e-8;
pub const TRANSLATION_VARIATION: f64 = 1e-9;
pub const SLOPE_HELMHOLTZ: f64 = 0.15;
pub const SLOPE_BILAPLACIAN: f64 = 0.2;
pub const SLOPE_FADDEEV: f64 = 0.15;
pub const ANISO_FADDEEV: f64 = 1e-6;
pub const DIRAC_RESIDUAL: f64 = 1e-10;
pub const DIRAC_STABILITY: f64 = 0.2;
pub const LAPLACIAN_SLOPE: f64 = 0.05;
pub const ESTIMATE_SLACK: f64 = 1e-6;
