//! Tension field, conformality operator and their iterates on a group,
//! evaluated with jets along the frame curves `p·exp(sZ)`.
//!
//! A [`ScalarField`] can be evaluated at a matrix of any [`Scalar`]. Since a
//! tension field evaluated at a jet-valued matrix is again jet-valued, the
//! operators nest: `τ²(f)(p)` evaluates `f` on `Jet2<Jet2<Complex64>>`
//! matrices built from two frame curves.

use std::collections::HashMap;

use itertools::Itertools;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expr::{partial, Expr, Tape, Var};
use crate::groups::{frame_curve, BasisVector, GroupKind, GroupSpec};
use crate::matrix::Mat;
use crate::scalar::Scalar;

type C = Complex64;

/// A function on (an open subset of) a matrix group.
pub trait ScalarField: Send + Sync {
    fn eval<S: Scalar>(&self, m: &Mat<S>) -> Result<S>;

    /// Short description of how the field was built.
    fn provenance(&self) -> String;
}

impl<T: ScalarField> ScalarField for &T {
    fn eval<S: Scalar>(&self, m: &Mat<S>) -> Result<S> {
        (**self).eval(m)
    }

    fn provenance(&self) -> String {
        (**self).provenance()
    }
}

/// An expression in matrix entries, read as a function on the group.
#[derive(Debug, Clone)]
pub struct ExprField {
    expr: Expr,
    tape: Tape,
    slots: Vec<(usize, usize)>,
}

impl ExprField {
    pub fn new(expr: Expr) -> Result<Self> {
        let tape = expr.compile();
        let slots = tape
            .vars()
            .iter()
            .map(|v| match v {
                Var::Entry { row, col } if *row >= 1 && *col >= 1 => Ok((row - 1, col - 1)),
                Var::Entry { .. } => Err(Error::IndexOutOfRange(format!("{v} uses a zero index"))),
                other => Err(Error::MixedVariableKinds(format!(
                    "group functions take matrix entries only, found {other}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ExprField { expr, tape, slots })
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }
}

impl ScalarField for ExprField {
    fn eval<S: Scalar>(&self, m: &Mat<S>) -> Result<S> {
        let d = m.dim();
        let mut inputs = Vec::with_capacity(self.slots.len());
        for &(r, c) in &self.slots {
            if r >= d || c >= d {
                return Err(Error::IndexOutOfRange(format!(
                    "entry ({}, {}) of a {d}x{d} matrix",
                    r + 1,
                    c + 1
                )));
            }
            inputs.push(m[(r, c)].clone());
        }
        self.tape.run(&inputs).map_err(|e| match e {
            Error::DivisionBySingularJet { denominator } => Error::SingularPoint {
                denominator: denominator.unwrap_or_else(|| "<unknown>".into()),
            },
            other => other,
        })
    }

    fn provenance(&self) -> String {
        format!("expr {}", self.expr)
    }
}

/// `(Z(f), Z²(f))` at `p`: the first coefficient and twice the second
/// coefficient of `f` along `p·exp(sZ)`.
pub fn frame_derivs<F: ScalarField, S: Scalar>(f: &F, p: &Mat<S>, z: &BasisVector) -> Result<(S, S)> {
    let jet = f.eval(&frame_curve(p, z)?)?;
    let second = jet.a2.clone() + jet.a2;
    Ok((jet.a1, second))
}

/// Orthogonal projection of `[Z, Z*]` onto the span of the frame:
/// `Σ_W sign_W · g([Z, Z*], W) · W`.
pub fn connection_term(z: &BasisVector, spec: &GroupSpec) -> Result<Mat<C>> {
    let bracket = z.matrix.bracket(&z.matrix.adjoint())?;
    let mut out = Mat::zeros(z.matrix.dim());
    for w in &spec.basis {
        let coeff = w.sign * spec.metric.eval(&bracket, &w.matrix);
        if coeff != 0.0 {
            out = out.add(&w.matrix.scale(C::new(coeff, 0.0)))?;
        }
    }
    Ok(out)
}

/// `Σ_Z sign_Z ∇_Z Z` as a single frame vector, or `None` when it vanishes
/// (bi-invariant metrics).
fn total_connection(spec: &GroupSpec) -> Result<Option<BasisVector>> {
    let mut total = Mat::zeros(spec.ambient);
    for z in &spec.basis {
        total = total.add(&connection_term(z, spec)?.scale(C::new(z.sign, 0.0)))?;
    }
    Ok(if total.is_zero_within(1e-13) {
        None
    } else {
        Some(BasisVector::new(total, 1.0))
    })
}

/// The tension field `τ(f) = Σ_Z sign_Z (Z²(f) − (∇_Z Z)(f))`.
#[derive(Debug, Clone)]
pub struct Tension<'g, F> {
    f: F,
    spec: &'g GroupSpec,
    connection: Option<BasisVector>,
}

pub fn tension<F: ScalarField>(f: F, spec: &GroupSpec) -> Result<Tension<'_, F>> {
    Ok(Tension {
        f,
        spec,
        connection: total_connection(spec)?,
    })
}

impl<F: ScalarField> ScalarField for Tension<'_, F> {
    fn eval<S: Scalar>(&self, m: &Mat<S>) -> Result<S> {
        let mut acc = S::zero();
        for z in &self.spec.basis {
            let jet = self.f.eval(&frame_curve(m, z)?)?;
            acc = acc + jet.a2.scale(C::new(2.0 * z.sign, 0.0));
        }
        if let Some(conn) = &self.connection {
            acc = acc - self.f.eval(&frame_curve(m, conn)?)?.a1;
        }
        Ok(acc)
    }

    fn provenance(&self) -> String {
        format!("tension[{}]({})", self.spec.label(), self.f.provenance())
    }
}

/// The conformality operator `κ(f, h) = Σ_Z sign_Z Z(f) Z(h)`.
#[derive(Debug, Clone)]
pub struct Conformality<'g, F, H> {
    f: F,
    h: H,
    spec: &'g GroupSpec,
}

pub fn conformality<F: ScalarField, H: ScalarField>(f: F, h: H, spec: &GroupSpec) -> Conformality<'_, F, H> {
    Conformality { f, h, spec }
}

impl<F: ScalarField, H: ScalarField> ScalarField for Conformality<'_, F, H> {
    fn eval<S: Scalar>(&self, m: &Mat<S>) -> Result<S> {
        let mut acc = S::zero();
        for z in &self.spec.basis {
            let curve = frame_curve(m, z)?;
            let df = self.f.eval(&curve)?.a1;
            let dh = self.h.eval(&curve)?.a1;
            acc = acc + (df * dh).scale(C::new(z.sign, 0.0));
        }
        Ok(acc)
    }

    fn provenance(&self) -> String {
        format!(
            "conformality[{}]({}, {})",
            self.spec.label(),
            self.f.provenance(),
            self.h.provenance()
        )
    }
}

/// Largest supported iteration depth of [`IteratedTension`].
pub const MAX_ITERATION: usize = 3;

/// `τ^r(f)` with `τ^0(f) = f`.
#[derive(Debug, Clone)]
pub struct IteratedTension<'g, F> {
    f: F,
    r: usize,
    spec: &'g GroupSpec,
    connection: Option<BasisVector>,
}

pub fn iterated_tension<F: ScalarField>(f: F, r: usize, spec: &GroupSpec) -> Result<IteratedTension<'_, F>> {
    if r > MAX_ITERATION {
        return Err(Error::DepthLimit(r));
    }
    Ok(IteratedTension {
        f,
        r,
        spec,
        connection: total_connection(spec)?,
    })
}

impl<F: ScalarField> IteratedTension<'_, F> {
    fn once<G: ScalarField>(&self, g: G) -> Tension<'_, G> {
        Tension {
            f: g,
            spec: self.spec,
            connection: self.connection.clone(),
        }
    }
}

impl<F: ScalarField> ScalarField for IteratedTension<'_, F> {
    fn eval<S: Scalar>(&self, m: &Mat<S>) -> Result<S> {
        let f = &self.f;
        match self.r {
            0 => f.eval(m),
            1 => self.once(f).eval(m),
            2 => self.once(self.once(f)).eval(m),
            3 => self.once(self.once(self.once(f))).eval(m),
            r => Err(Error::DepthLimit(r)),
        }
    }

    fn provenance(&self) -> String {
        format!("tension^{}[{}]({})", self.r, self.spec.label(), self.f.provenance())
    }
}

// ---------------------------------------------------------------------------
// Coefficient backend
// ---------------------------------------------------------------------------

fn entry_vars(e: &Expr) -> Result<Vec<(usize, usize)>> {
    e.variables()
        .into_iter()
        .map(|v| match v {
            Var::Entry { row, col } if row >= 1 && col >= 1 => Ok((row, col)),
            other => Err(Error::MixedVariableKinds(format!(
                "coefficient formulas need matrix entries, found {other}"
            ))),
        })
        .collect()
}

type Slots = Vec<(usize, usize)>;

/// Symbolic partials of one expression, compiled for repeated evaluation.
/// Keys are sorted index tuples into the variable list.
struct PartialTable {
    vars: Slots,
    tapes: HashMap<Vec<usize>, (Tape, Slots)>,
}

impl PartialTable {
    fn new(e: &Expr, max_order: usize) -> Result<Self> {
        let vars = entry_vars(e)?;
        let mut tapes = HashMap::new();
        let mut frontier: Vec<(Vec<usize>, Expr)> = vec![(vec![], e.clone())];
        for _ in 0..max_order {
            let mut next = Vec::new();
            for (key, expr) in &frontier {
                let start = key.last().copied().unwrap_or(0);
                for (idx, &(r, c)) in vars.iter().enumerate().skip(start) {
                    let d = partial(expr, &Var::entry(r, c));
                    if d.is_zero() {
                        continue;
                    }
                    let mut k = key.clone();
                    k.push(idx);
                    next.push((k, d));
                }
            }
            for (k, d) in &next {
                let tape = d.compile();
                let slots = tape
                    .vars()
                    .iter()
                    .map(|v| match v {
                        Var::Entry { row, col } => (row - 1, col - 1),
                        _ => unreachable!("checked by entry_vars"),
                    })
                    .collect();
                tapes.insert(k.clone(), (tape, slots));
            }
            frontier = next;
        }
        Ok(PartialTable { vars, tapes })
    }

    /// Values of every nonzero partial at `p`, keyed like `tapes`.
    fn values(&self, p: &Mat<C>) -> Result<HashMap<Vec<usize>, C>> {
        let d = p.dim();
        let mut out = HashMap::with_capacity(self.tapes.len());
        for (k, (tape, slots)) in &self.tapes {
            let mut inputs = Vec::with_capacity(slots.len());
            for &(r, c) in slots {
                if r >= d || c >= d {
                    return Err(Error::IndexOutOfRange(format!("entry ({}, {})", r + 1, c + 1)));
                }
                inputs.push(p[(r, c)]);
            }
            let v = tape.run(&inputs).map_err(|e| match e {
                Error::DivisionBySingularJet { denominator } => Error::SingularPoint {
                    denominator: denominator.unwrap_or_else(|| "<unknown>".into()),
                },
                other => other,
            })?;
            out.insert(k.clone(), v);
        }
        Ok(out)
    }
}

fn lookup(values: &HashMap<Vec<usize>, C>, idx: &[usize]) -> C {
    let mut k = idx.to_vec();
    k.sort_unstable();
    values.get(&k).copied().unwrap_or_default()
}

/// Evaluator for the closed coefficient formulas of `τ` (on U(n), SO(n))
/// and `τ²` (on U(n)) in terms of ordinary partial derivatives.
pub struct CoeffBackend {
    kind: GroupKind,
    order: usize,
    table: PartialTable,
}

impl CoeffBackend {
    /// `order` is 1 for `τ` and 2 for `τ²`.
    pub fn new(e: &Expr, kind: GroupKind, order: usize) -> Result<Self> {
        match (kind, order) {
            (GroupKind::U, 1 | 2) | (GroupKind::SO, 1) => {}
            (GroupKind::U | GroupKind::SO, _) => {
                return Err(Error::UnsupportedGroup(format!(
                    "no coefficient formula for tension^{order} on {}",
                    kind.slug()
                )))
            }
            _ => {
                return Err(Error::UnsupportedGroup(format!(
                    "no coefficient formula for {}",
                    kind.slug()
                )))
            }
        }
        Ok(CoeffBackend {
            kind,
            order,
            table: PartialTable::new(e, 2 * order)?,
        })
    }

    #[allow(clippy::needless_range_loop)]
    pub fn eval(&self, p: &Mat<C>) -> Result<C> {
        let vals = self.table.values(p)?;
        let n = p.dim() as f64;
        let vars = &self.table.vars;
        let z = |r: usize, c: usize| p[(r - 1, c - 1)];
        let m = vars.len();
        let mut acc = C::new(0.0, 0.0);
        match (self.kind, self.order) {
            (GroupKind::U, 1) => {
                for a in 0..m {
                    let (i, j) = vars[a];
                    acc -= n * lookup(&vals, &[a]) * z(i, j);
                    for b in 0..m {
                        let (k, l) = vars[b];
                        acc -= lookup(&vals, &[a, b]) * z(k, j) * z(i, l);
                    }
                }
            }
            (GroupKind::SO, 1) => {
                for a in 0..m {
                    let (i, j) = vars[a];
                    acc -= 0.5 * (n - 1.0) * lookup(&vals, &[a]) * z(i, j);
                    acc += 0.5 * lookup(&vals, &[a, a]);
                    for b in 0..m {
                        let (k, l) = vars[b];
                        acc -= 0.5 * lookup(&vals, &[a, b]) * z(k, j) * z(i, l);
                    }
                }
            }
            (GroupKind::U, 2) => {
                for a in 0..m {
                    let (i, j) = vars[a];
                    acc += n * n * lookup(&vals, &[a]) * z(i, j);
                    for b in 0..m {
                        let (k, l) = vars[b];
                        let f2 = lookup(&vals, &[a, b]);
                        if f2 != C::default() {
                            acc += f2 * ((n * n + 2.0) * z(i, j) * z(k, l) + 4.0 * n * z(i, l) * z(k, j));
                        }
                    }
                }
                for (a, b, c) in (0..m).cartesian_product(0..m).cartesian_product(0..m).map(|((a, b), c)| (a, b, c)) {
                    let f3 = lookup(&vals, &[a, b, c]);
                    if f3 == C::default() {
                        continue;
                    }
                    let ((i, j), (k, l), (al, be)) = (vars[a], vars[b], vars[c]);
                    let w = 2.0 * z(k, j) * z(al, l) * z(i, be)
                        + 2.0 * z(i, l) * z(al, j) * z(k, be)
                        + n * z(i, j) * z(al, l) * z(k, be)
                        + n * z(i, l) * z(k, j) * z(al, be);
                    acc += f3 * w;
                }
                for key in (0..4).map(|_| 0..m).multi_cartesian_product() {
                    let f4 = lookup(&vals, &key);
                    if f4 == C::default() {
                        continue;
                    }
                    let ((i, j), (k, l), (al, be), (ga, de)) = (vars[key[0]], vars[key[1]], vars[key[2]], vars[key[3]]);
                    acc += f4 * z(i, l) * z(k, j) * z(al, de) * z(ga, be);
                }
            }
            _ => unreachable!("validated in new"),
        }
        Ok(acc)
    }
}

/// `τ(f)(p)` from second-order partials (U(n) and SO(n) only).
pub fn tension_coeff_backend(e: &Expr, p: &Mat<C>, kind: GroupKind) -> Result<C> {
    CoeffBackend::new(e, kind, 1)?.eval(p)
}

/// `τ²(f)(p)` on U(n) from partials up to fourth order.
pub fn bitension_coeff_backend(e: &Expr, p: &Mat<C>) -> Result<C> {
    CoeffBackend::new(e, GroupKind::U, 2)?.eval(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{haar_sample, Metric};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn field(e: Expr) -> ExprField {
        ExprField::new(e).unwrap()
    }

    fn close(a: C, b: C, tol: f64) -> bool {
        (a - b).norm() <= tol * a.norm().max(b.norm()).max(1.0)
    }

    #[test]
    fn frame_derivs_examples() {
        let u = GroupSpec::new(GroupKind::U, 3).unwrap();
        // iD_1 is the first diagonal frame vector
        let id1 = u.basis.iter().find(|b| b.matrix[(0, 0)] == c(0.0, 1.0)).unwrap();
        let p: Mat<C> = Mat::identity(3);
        let (d1, d2) = frame_derivs(&field(Expr::entry(1, 1)), &p, id1).unwrap();
        assert_eq!((d1, d2), (c(0.0, 1.0), c(-1.0, 0.0)));
        let (d1, d2) = frame_derivs(&field(Expr::entry(1, 2)), &p, id1).unwrap();
        assert_eq!((d1, d2), (c(0.0, 0.0), c(0.0, 0.0)));
        let (d1, d2) = frame_derivs(&field(Expr::constant(c(2.0, 1.0))), &p, id1).unwrap();
        assert_eq!((d1, d2), (c(0.0, 0.0), c(0.0, 0.0)));
    }

    #[test]
    fn connection_vanishes_on_standard_frames() {
        for (kind, n) in [
            (GroupKind::U, 2),
            (GroupKind::U, 4),
            (GroupKind::SU, 3),
            (GroupKind::SO, 4),
            (GroupKind::Sp, 2),
            (GroupKind::Lorentz, 4),
        ] {
            let spec = GroupSpec::new(kind, n).unwrap();
            for z in &spec.basis {
                assert!(connection_term(z, &spec).unwrap().max_abs() < 1e-12);
            }
        }
    }

    #[test]
    fn connection_on_upper_triangular_algebra() {
        let e = |r, s| {
            let mut m = Mat::zeros(2);
            m[(r, s)] = c(1.0, 0.0);
            m
        };
        let basis = vec![
            BasisVector::new(e(0, 0), 1.0),
            BasisVector::new(e(0, 1), 1.0),
            BasisVector::new(e(1, 1), 1.0),
        ];
        let spec = GroupSpec::with_basis(GroupKind::U, 2, basis, Metric::Hermitian);
        // [E12, E21] = E11 - E22, which lies in the algebra.
        let got = connection_term(&spec.basis[1], &spec).unwrap();
        let want = e(0, 0).sub(&e(1, 1)).unwrap();
        assert!(got.sub(&want).unwrap().max_abs() < 1e-15);
        assert!(connection_term(&spec.basis[0], &spec).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn lemma_eigenvalues_spot_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (kind, n, lambda) in [
            (GroupKind::U, 3, -3.0),
            (GroupKind::SO, 4, -1.5),
            (GroupKind::Sp, 2, -2.5),
        ] {
            let spec = GroupSpec::new(kind, n).unwrap();
            let f = field(Expr::entry(2, 1));
            let t = tension(&f, &spec).unwrap();
            for _ in 0..5 {
                let p = haar_sample(kind, n, &mut rng);
                let got: C = t.eval(&p).unwrap();
                assert!(close(got, lambda * p[(1, 0)], 1e-12), "{kind:?}");
            }
        }
    }

    #[test]
    fn iterated_tension_depths() {
        let spec = GroupSpec::new(GroupKind::U, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = haar_sample(GroupKind::U, 2, &mut rng);
        let f = field(Expr::entry(1, 2));
        let want = [1.0, -2.0, 4.0, -8.0];
        for (r, w) in want.iter().enumerate() {
            let v: C = iterated_tension(&f, r, &spec).unwrap().eval(&p).unwrap();
            assert!(close(v, w * p[(0, 1)], 1e-11), "r={r}");
        }
        assert_eq!(iterated_tension(&f, 4, &spec).unwrap_err(), Error::DepthLimit(4));
    }

    #[test]
    fn example_quotient_is_biharmonic_on_u2() {
        let spec = GroupSpec::new(GroupKind::U, 2).unwrap();
        let f = field(Expr::entry(1, 1) / Expr::entry(2, 2));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t2 = iterated_tension(&f, 2, &spec).unwrap();
        let mut checked = 0;
        while checked < 20 {
            let p = haar_sample(GroupKind::U, 2, &mut rng);
            if p[(1, 1)].norm() < 0.3 {
                continue;
            }
            let v: C = t2.eval(&p).unwrap();
            let t1: C = tension(&f, &spec).unwrap().eval(&p).unwrap();
            let f0: C = f.eval(&p).unwrap();
            assert!(v.norm() <= 1e-9 * (1.0 + t1.norm() + f0.norm()));
            checked += 1;
        }
    }

    #[test]
    fn singular_point_is_reported() {
        let spec = GroupSpec::new(GroupKind::U, 2).unwrap();
        let f = field(Expr::entry(1, 1) / Expr::entry(1, 2));
        let err = tension(&f, &spec).unwrap().eval(&Mat::<C>::identity(2)).unwrap_err();
        assert_eq!(
            err,
            Error::SingularPoint {
                denominator: "(var z 1 2)".into()
            }
        );
    }

    #[test]
    fn expr_field_rejects_other_variables() {
        assert!(matches!(
            ExprField::new(Expr::coord(1)),
            Err(Error::MixedVariableKinds(_))
        ));
        let f = field(Expr::entry(3, 3));
        assert!(matches!(f.eval(&Mat::<C>::identity(2)), Err(Error::IndexOutOfRange(_))));
    }

    #[test]
    fn coefficient_backend_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let p = haar_sample(GroupKind::U, 2, &mut rng);
        let v = tension_coeff_backend(&Expr::entry(1, 1), &p, GroupKind::U).unwrap();
        assert!(close(v, -2.0 * p[(0, 0)], 1e-13));

        let p = haar_sample(GroupKind::U, 3, &mut rng);
        let d2 = &(&Expr::entry(1, 1) * &Expr::entry(2, 2)) - &(&Expr::entry(1, 2) * &Expr::entry(2, 1));
        let d2p = p[(0, 0)] * p[(1, 1)] - p[(0, 1)] * p[(1, 0)];
        let v = tension_coeff_backend(&d2, &p, GroupKind::U).unwrap();
        assert!(close(v, -4.0 * d2p, 1e-12));
        let v = bitension_coeff_backend(&d2, &p).unwrap();
        assert!(close(v, 16.0 * d2p, 1e-12));
        let v = bitension_coeff_backend(&Expr::entry(1, 1), &p).unwrap();
        assert!(close(v, 9.0 * p[(0, 0)], 1e-12));

        let x = haar_sample(GroupKind::SO, 4, &mut rng);
        let v = tension_coeff_backend(&Expr::entry(1, 1), &x, GroupKind::SO).unwrap();
        assert!(close(v, -1.5 * x[(0, 0)], 1e-13));

        for kind in [GroupKind::Sp, GroupKind::Lorentz, GroupKind::SU] {
            assert!(matches!(
                tension_coeff_backend(&Expr::entry(1, 1), &x, kind),
                Err(Error::UnsupportedGroup(_))
            ));
        }
    }

    #[test]
    fn bitension_backend_matches_frame_on_quotient() {
        let spec = GroupSpec::new(GroupKind::U, 3).unwrap();
        let e = (Expr::entry(1, 1) + Expr::entry(2, 1).scale(c(0.5, -1.0)))
            / (Expr::entry(3, 2) - Expr::entry(1, 2).scale(c(0.0, 2.0)));
        let f = field(e.clone());
        let backend = CoeffBackend::new(&e, GroupKind::U, 2).unwrap();
        let backend1 = CoeffBackend::new(&e, GroupKind::U, 1).unwrap();
        let t1 = iterated_tension(&f, 1, &spec).unwrap();
        let t2 = iterated_tension(&f, 2, &spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let p = haar_sample(GroupKind::U, 3, &mut rng);
            let a: C = t1.eval(&p).unwrap();
            assert!(close(a, backend1.eval(&p).unwrap(), 1e-9));
            let a: C = t2.eval(&p).unwrap();
            let b = backend.eval(&p).unwrap();
            assert!(close(a, b, 1e-7), "{a} vs {b}");
        }
    }
}
