//! The claim catalog.

use super::{
    Assertion, Claim, Domain, Family, MinorBranch, TestFamily, DEFAULT_GUARD, DEFAULT_SAMPLES, DEFAULT_TOL,
};
use crate::funcs::{PairConstraints, PqRelation, QForm};
use crate::groups::GroupKind;

const EXACT_GUARD: f64 = 0.1;
const MINOR_GUARD: f64 = 0.1;
const THEOREM_DRAWS: usize = 30;

fn claim(id: &str, domain: Domain, n: usize, family: Family, assertion: Assertion, citation: &str) -> Claim {
    Claim {
        id: id.to_string(),
        domain,
        n,
        family,
        assertion,
        samples: DEFAULT_SAMPLES,
        tol: DEFAULT_TOL,
        exact: false,
        guard: DEFAULT_GUARD,
        draws: 1,
        seed: 0,
        citation: citation.to_string(),
        advisory: false,
    }
}

impl Claim {
    fn tol(mut self, t: f64) -> Self {
        self.tol = t;
        self
    }

    fn samples(mut self, s: usize) -> Self {
        self.samples = s;
        self
    }

    fn draws(mut self, d: usize) -> Self {
        self.draws = d;
        self
    }

    fn advisory(mut self) -> Self {
        self.advisory = true;
        self
    }

    fn guard(mut self, g: f64) -> Self {
        self.guard = g;
        self
    }

    fn exact(mut self) -> Self {
        self.exact = true;
        self
    }
}

fn quotient(same_column: bool, q: QForm, pq: PqRelation) -> Family {
    Family::LinearQuotient {
        same_column,
        constraints: PairConstraints { q, pq },
        mixed: false,
    }
}

fn sp_quotient(same_column: bool, mixed: bool) -> Family {
    Family::LinearQuotient {
        same_column,
        constraints: PairConstraints::FREE,
        mixed,
    }
}

pub(crate) fn explore_claim(k: usize, n: usize) -> Claim {
    claim(
        &format!("u-minor-explore-{k}x{k}"),
        Domain::Group(GroupKind::U),
        n,
        Family::ExploreMinors { k, disjoint: true },
        Assertion::PROPER_BIHARMONIC,
        "open: quotients of kxk minors with disjoint index sets may also be proper biharmonic on U(n)",
    )
    .samples(20)
    .draws(10)
    .guard(0.05)
    .advisory()
}

/// Every registered claim, in report order.
pub fn registry() -> Vec<Claim> {
    use Assertion::*;
    use GroupKind::*;
    let g = Domain::Group;
    let bi = Assertion::PROPER_BIHARMONIC;
    let mut v = vec![
        // Matrix coefficients.
        claim("su-lemma-eigen", g(U), 3, Family::Lemma { eigen: true, kappa: false }, Eigenfunction,
            "matrix coefficients on U(n) satisfy tau(z_ja) = -n z_ja").tol(1e-9),
        claim("su-lemma-kappa", g(U), 3, Family::Lemma { eigen: false, kappa: true }, ClosedFormAgree,
            "on U(n), kappa(z_ja, z_kb) = -z_ka z_jb").tol(1e-9),
        claim("so-lemma-eigen", g(SO), 4, Family::Lemma { eigen: true, kappa: false }, Eigenfunction,
            "matrix coefficients on SO(n) satisfy tau(x_ja) = -(n-1)/2 x_ja").tol(1e-9),
        claim("so-lemma-kappa", g(SO), 4, Family::Lemma { eigen: false, kappa: true }, ClosedFormAgree,
            "on SO(n), kappa(x_ja, x_kb) = -(x_ka x_jb - d_kj d_ab)/2").tol(1e-9),
        claim("sp-lemma-n1", g(Sp), 1, Family::Lemma { eigen: true, kappa: true }, Eigenfunction,
            "on Sp(n), z_ja and w_ja have eigenvalue -(2n+1)/2 and kappa(z_ja, w_kb) = -z_ka w_jb / 2").tol(1e-9),
        claim("sp-lemma-n2", g(Sp), 2, Family::Lemma { eigen: true, kappa: true }, Eigenfunction,
            "on Sp(n), z_ja and w_ja have eigenvalue -(2n+1)/2 and kappa(z_ja, w_kb) = -z_ka w_jb / 2").tol(1e-9),
        // Linear quotients on U(n) and SU(n).
        claim("su-theorem-harmonic", g(U), 3, quotient(true, QForm::Free, PqRelation::Free), Harmonic,
            "on U(n), P/Q with alpha = beta is harmonic").tol(1e-9).draws(THEOREM_DRAWS),
        claim("su-theorem-biharmonic", g(U), 3, quotient(false, QForm::Free, PqRelation::Free), bi,
            "on U(n), P/Q with alpha != beta is proper biharmonic").draws(THEOREM_DRAWS),
        claim("su-theorem-harmonic-su", g(SU), 3, quotient(true, QForm::Free, PqRelation::Free), Harmonic,
            "on SU(n), P/Q with alpha = beta is harmonic").tol(1e-9).draws(THEOREM_DRAWS),
        claim("su-theorem-biharmonic-su", g(SU), 3, quotient(false, QForm::Free, PqRelation::Free), bi,
            "on SU(n), P/Q with alpha != beta is proper biharmonic").draws(THEOREM_DRAWS),
        claim("su-theorem-s1-invariance", g(SU), 3, Family::CircleInvariance, BackendAgree,
            "P/Q is invariant under the circle action, so its tension on SU(n) equals that on U(n)")
            .tol(1e-9).draws(10),
        claim("su-example-quotient", g(U), 2, Family::QuotientExample, bi,
            "z11/z22 is proper biharmonic on U(2)"),
        // Linear quotients on SO(n).
        claim("so-theorem-harmonic", g(SO), 4, quotient(true, QForm::Isotropic, PqRelation::Zero), Harmonic,
            "on SO(n), P/Q is harmonic when alpha = beta, (q,q) = 0 and (p,q) = 0").tol(1e-9).draws(THEOREM_DRAWS),
        claim("so-theorem-n4", g(SO), 4, quotient(true, QForm::Isotropic, PqRelation::Nonzero), bi,
            "on SO(4), P/Q is proper biharmonic when alpha = beta, (q,q) = 0 and (p,q) != 0").draws(THEOREM_DRAWS),
        claim("so-theorem-n5-counterexample", g(SO), 5, quotient(true, QForm::Isotropic, PqRelation::Nonzero), Nonzero(2),
            "the alpha = beta, (q,q) = 0, (p,q) != 0 branch is biharmonic only for n = 4").draws(THEOREM_DRAWS),
        claim("so-theorem-offdiag", g(SO), 4, quotient(false, QForm::Isotropic, PqRelation::Zero), bi,
            "on SO(n), P/Q is proper biharmonic when alpha != beta, (q,q) = 0 and (p,q) = 0").draws(THEOREM_DRAWS),
        claim("so-theorem-offdiag-pq-nonzero", g(SO), 4, quotient(false, QForm::Isotropic, PqRelation::Nonzero), Nonzero(2),
            "on SO(n), P/Q with alpha != beta and (p,q) != 0 is not biharmonic").draws(THEOREM_DRAWS),
        claim("so-theorem-nonisotropic", g(SO), 4, quotient(true, QForm::NonIsotropic, PqRelation::Free), Nonzero(2),
            "on SO(n), P/Q with (q,q) != 0 is not biharmonic").draws(THEOREM_DRAWS),
        claim("so-theorem-nonisotropic-offdiag", g(SO), 4, quotient(false, QForm::NonIsotropic, PqRelation::Free), Nonzero(2),
            "on SO(n), P/Q with (q,q) != 0 and alpha != beta is not biharmonic").draws(THEOREM_DRAWS),
        // Linear quotients on Sp(n).
        claim("sp-theorem-harmonic-n1", g(Sp), 1, sp_quotient(true, true), Harmonic,
            "on Sp(n), P/Q with alpha = beta is harmonic").tol(1e-9).draws(THEOREM_DRAWS),
        claim("sp-theorem-harmonic-n2", g(Sp), 2, sp_quotient(true, true), Harmonic,
            "on Sp(n), P/Q with alpha = beta is harmonic").tol(1e-9).draws(THEOREM_DRAWS),
        claim("sp-theorem-biharmonic-n2", g(Sp), 2, sp_quotient(false, false), bi,
            "on Sp(n), P/Q in the z block with alpha != beta is proper biharmonic").draws(THEOREM_DRAWS),
        claim("sp-theorem-mixed-n2", g(Sp), 2, sp_quotient(false, true), bi,
            "on Sp(n), P/Q mixing z and w coefficients with alpha != beta is proper biharmonic").draws(THEOREM_DRAWS),
        // Minors.
        claim("u-minor-eigen", g(U), 4, Family::PrincipalMinorEigen, Eigenfunction,
            "the leading minors of U(n) satisfy tau(d_k) = -k(n-k+1) d_k").tol(1e-9).samples(50),
        claim("u-minor-harmonic-rows", g(U), 4, Family::MinorQuotient(MinorBranch::SameRows), Harmonic,
            "a quotient of 2x2 minors sharing their rows is harmonic").tol(1e-9).draws(THEOREM_DRAWS).guard(MINOR_GUARD),
        claim("u-minor-harmonic-cols", g(U), 4, Family::MinorQuotient(MinorBranch::SameCols), Harmonic,
            "a quotient of 2x2 minors sharing their columns is harmonic").tol(1e-9).draws(THEOREM_DRAWS).guard(MINOR_GUARD),
        claim("u-minor-biharmonic", g(U), 4, Family::MinorQuotient(MinorBranch::Distinct), bi,
            "a quotient of 2x2 minors with different rows and different columns is proper biharmonic")
            .draws(THEOREM_DRAWS).guard(MINOR_GUARD),
        claim("u-minor-example", g(U), 5, Family::MinorExample, bi,
            "(z11 z22 - z12 z21)/(z33 z44 - z34 z43) is proper biharmonic").guard(MINOR_GUARD),
        explore_claim(3, 6),
        claim("u-minor-explore-3x3-overlap", g(U), 6, Family::ExploreMinors { k: 3, disjoint: false }, Harmonic,
            "open: tension of quotients of 3x3 minors with overlapping index sets").samples(20).draws(10).guard(0.05)
            .advisory(),
        // Flat models.
        claim("planar-closed-form", Domain::Plane, 2, Family::PlanarClosedForm { r_max: 5 }, ClosedFormAgree,
            "Laplacian iterates of (z/zbar)^n: (-4/|z|^2)^r prod_{k=1..r}(n^2-(k-1)^2) (z/zbar)^n")
            .tol(0.0).exact().samples(20),
        claim("planar-proper-harmonic", Domain::Plane, 2, Family::PlanarProper, ProperHarmonic(3),
            "(z/zbar)^n is proper r-harmonic exactly for r = n+1").tol(0.0).exact().samples(20),
        claim("sphere-example-biharmonic", Domain::Sphere, 3, Family::Radial { pq_zero: false }, bi,
            "on S^3, (p.x)/(q.x) with (q,q) = 0 has tau = -2|x|^2 (p,q)/(q.x)^2 and is proper biharmonic")
            .tol(1e-10).exact().draws(10).guard(EXACT_GUARD),
        claim("sphere-example-harmonic", Domain::Sphere, 3, Family::Radial { pq_zero: true }, Harmonic,
            "on S^3, (p.x)/(q.x) with (q,q) = 0 and (p,q) = 0 is harmonic")
            .tol(1e-10).exact().draws(10).guard(EXACT_GUARD),
        claim("hyperbolic-example-biharmonic", Domain::Hyperbolic, 3, Family::Radial { pq_zero: false }, bi,
            "on H^3, (p.x)/(q.x) with (q,q)_L = 0 has tau = 2|x|_L^2 (p,q)_L/(q.x)^2 and is proper biharmonic")
            .tol(1e-10).exact().draws(10).guard(EXACT_GUARD),
        claim("hyperbolic-example-harmonic", Domain::Hyperbolic, 3, Family::Radial { pq_zero: true }, Harmonic,
            "on H^3, (p.x)/(q.x) with (q,q)_L = 0 and (p,q)_L = 0 is harmonic")
            .tol(1e-10).exact().draws(10).guard(EXACT_GUARD),
        claim("su2-sphere-identification", g(SU), 2, Family::Su2Identification, ClosedFormAgree,
            "under SU(2) = S^3, z11/z22 corresponds to (x1 + i x2)/(x1 - i x2)").tol(1e-12),
        // Duality.
        claim("lorentz-duality", g(Lorentz), 4, Family::Duality, bi,
            "the first-column quotient on SO(4) and its dual on SO0(1,3) are both proper biharmonic")
            .draws(THEOREM_DRAWS),
        claim("lorentz-duality-identity", g(Lorentz), 4, Family::DualityIdentity, BackendAgree,
            "tau(f*) = -(tau f)* for the first-column quotient").tol(1e-9).draws(10),
        // Operator identities.
        claim("identity-product-rule", g(U), 3, Family::ProductRule, ClosedFormAgree,
            "tau(fh) = tau(f) h + 2 kappa(f,h) + f tau(h)").tol(1e-9).draws(10),
        claim("identity-quotient-rule", g(U), 3, Family::QuotientRule, ClosedFormAgree,
            "Q^3 tau(P/Q) = Q^2 tau(P) - 2Q kappa(P,Q) + 2P kappa(Q,Q) - PQ tau(Q)").tol(1e-9).draws(10),
        claim("identity-basis-independence", g(U), 3, Family::BasisIndependence, BackendAgree,
            "the tension field does not depend on the choice of orthonormal frame").tol(1e-9).draws(10),
    ];
    let backends = [
        (1, U, 3, TestFamily::Coefficient),
        (1, U, 3, TestFamily::Quotient),
        (1, U, 4, TestFamily::MinorQuotient),
        (1, U, 4, TestFamily::PrincipalMinor),
        (1, SO, 4, TestFamily::Coefficient),
        (1, SO, 4, TestFamily::Quotient),
        (2, U, 3, TestFamily::Coefficient),
        (2, U, 3, TestFamily::Quotient),
        (2, U, 4, TestFamily::MinorQuotient),
        (2, U, 4, TestFamily::PrincipalMinor),
    ];
    for (order, kind, n, family) in backends {
        let what = if order == 1 { "tension" } else { "bitension" };
        let id = format!("backend-{what}-{}-{}", kind.slug(), family.slug());
        let cite = format!(
            "the coefficient formula for tau{} on {} agrees with the frame operator",
            if order == 1 { "" } else { "^2" },
            kind.label(n).split('(').next().unwrap_or_default()
        );
        let guard = if family == TestFamily::MinorQuotient { MINOR_GUARD } else { DEFAULT_GUARD };
        v.push(
            claim(&id, g(kind), n, Family::Backend { order, family }, BackendAgree, &cite)
                .samples(50)
                .draws(5)
                .guard(guard),
        );
    }
    v
}

/// Looks up a claim by exact id.
pub fn find_claim(id: &str) -> Option<Claim> {
    registry().into_iter().find(|c| c.id == id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn ids_are_unique_and_cited() {
        let all = registry();
        let ids: HashSet<&str> = all.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids.len(), all.len());
        for c in &all {
            assert!(!c.citation.is_empty(), "{}", c.id);
            assert!(c.tol >= 0.0 && c.samples > 0 && c.draws > 0, "{}", c.id);
            assert!(c.exact || c.tol > 0.0, "{}", c.id);
        }
    }

    #[test]
    fn six_sp_claims() {
        assert_eq!(registry().iter().filter(|c| c.id.starts_with("sp-")).count(), 6);
    }
}
