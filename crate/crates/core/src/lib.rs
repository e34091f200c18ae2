pub mod ambient;
pub mod error;
pub mod expr;
pub mod funcs;
pub mod groups;
pub mod matrix;
pub mod ops;
pub mod scalar;

pub use error::{Error, Result};
pub use expr::{partial, planar_to_real, Expr, Var};
pub use matrix::Mat;
pub use scalar::{ExactComplex, Jet2, Scalar};
pub use groups::{build_basis, curve_point, haar_sample, membership_residual, BasisVector, GroupKind, GroupSpec, Metric};
pub use ops::{bitension_coeff_backend, conformality, connection_term, frame_derivs, iterated_tension, tension, tension_coeff_backend, CoeffBackend, ExprField, ScalarField};
pub use ambient::{flat_laplacian, lift_check_su2, planar_iterated, weighted_iterate, BilinearForm, FlatSignature, PlanarIterate, RadialExample};
pub use funcs::{dual_first_column_quotient, linear_quotient, make_pair, matrix_coefficient, minor_quotient, principal_minor, MinorSpec, PairConstraints, PqRelation, QForm, QuotientSpec};
pub mod verify;
pub use verify::{
    all_passed, explore_minors, find_claim, registry, render_text, run_claim, run_suite, Assertion, Claim, ClaimReport,
    Domain, Family, Overrides, Verdict,
};
