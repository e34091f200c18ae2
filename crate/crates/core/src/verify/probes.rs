//! Per-family preparation and point probes.

use num_complex::Complex64;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::{json, Value};

use super::{Assertion, Claim, Domain, Family, MinorBranch, Outcome, Sample, TestFamily};
use crate::ambient::{lift_check_su2, planar_iterated, RadialExample};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::funcs::{
    bilinear, dual_first_column_quotient, independence, linear_quotient, make_pair, principal_minor,
    so4_first_column_quotient, MinorSpec, PairConstraints, PqRelation, QForm, QuotientSpec,
};
use crate::groups::{GroupKind, GroupSpec};
use crate::matrix::Mat;
use crate::ops::{conformality, iterated_tension, tension, CoeffBackend, ExprField, ScalarField};
use crate::scalar::ExactComplex;

type C = Complex64;
type Probe<'a> = Box<dyn FnMut(usize, &mut ChaCha8Rng) -> Result<Outcome> + 'a>;

pub(crate) struct Prepared<'a> {
    pub params: Value,
    probe: Probe<'a>,
}

impl Prepared<'_> {
    pub fn probe(&mut self, index: usize, rng: &mut ChaCha8Rng) -> Result<Outcome> {
        (self.probe)(index, rng)
    }
}

fn prepared<'a>(params: Value, probe: impl FnMut(usize, &mut ChaCha8Rng) -> Result<Outcome> + 'a) -> Prepared<'a> {
    Prepared {
        params,
        probe: Box::new(probe),
    }
}

fn invalid(claim: &Claim, msg: impl std::fmt::Display) -> Error {
    Error::InvalidClaim(format!("{}: {msg}", claim.id))
}

fn group_spec(claim: &Claim) -> Result<GroupSpec> {
    match claim.domain {
        Domain::Group(kind) => GroupSpec::new(kind, claim.n).map_err(|e| invalid(claim, e)),
        _ => Err(invalid(claim, "not a group claim")),
    }
}

/// Relative difference `|a - b| / max(1, |a|, |b|)`.
fn rel(a: C, b: C) -> f64 {
    (a - b).norm() / 1f64.max(a.norm()).max(b.norm())
}

/// `|A - B| / max(1, |terms|...)` for identities with several terms.
fn rel_terms(lhs: C, rhs_terms: &[C]) -> f64 {
    let rhs: C = rhs_terms.iter().sum();
    let scale = rhs_terms
        .iter()
        .map(|t| t.norm())
        .fold(1f64.max(lhs.norm()), f64::max);
    (lhs - rhs).norm() / scale
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> C {
    C::new(gaussian(rng), gaussian(rng))
}

/// Two distinct sorted indices from `1..=n`.
fn index_pair(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut v: Vec<usize> = (1..=n).collect::<Vec<_>>().choose_multiple(rng, 2).copied().collect();
    v.sort_unstable();
    v
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

/// A polynomial in the defining entries with 3–4 random monomials of
/// degree 1–3 and complex Gaussian coefficients.
fn random_polynomial(ambient: usize, rng: &mut ChaCha8Rng) -> Expr {
    let terms = rng.random_range(3..=4);
    Expr::sum((0..terms).map(|_| {
        let degree = rng.random_range(1..=3);
        let factors: Vec<Expr> = (0..degree)
            .map(|_| Expr::entry(rng.random_range(1..=ambient), rng.random_range(1..=ambient)))
            .collect();
        Expr::product(factors).scale(complex_gaussian(rng))
    }))
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("parameters serialize")
}

/// Lower bound on the moduli of a function's denominators.
struct Guard {
    denoms: Vec<ExprField>,
    floor: f64,
}

impl Guard {
    fn of(e: &Expr, floor: f64) -> Result<Self> {
        Ok(Guard {
            denoms: e.denominators().into_iter().map(ExprField::new).collect::<Result<_>>()?,
            floor,
        })
    }

    fn check(&self, p: &Mat<C>) -> Result<Option<String>> {
        for d in &self.denoms {
            let v: C = d.eval(p)?;
            if v.norm() < self.floor {
                return Ok(Some(format!(
                    "|{}| = {:.3e} below guard {}",
                    d.expr(),
                    v.norm(),
                    self.floor
                )));
            }
        }
        Ok(None)
    }
}

/// A function on the group together with its guard.
struct Draw {
    f: ExprField,
    guard: Guard,
}

impl Draw {
    fn new(e: Expr, floor: f64) -> Result<Self> {
        Ok(Draw {
            guard: Guard::of(&e, floor)?,
            f: ExprField::new(e)?,
        })
    }
}

/// `[f, τf, ..., τ^r f]` at `p`.
fn tension_values<F: ScalarField>(f: &F, spec: &GroupSpec, p: &Mat<C>, r: usize) -> Result<Vec<C>> {
    (0..=r).map(|j| iterated_tension(f, j, spec)?.eval(p)).collect()
}

/// Residual (and nonvanishing witness) of an iterate assertion:
/// `|τ^r f| / (1 + Σ_{j<r} |τ^j f|)`.
fn iterate_sample(assertion: Assertion, vals: &[C]) -> Sample {
    let r = assertion.depth();
    let scale = 1.0 + vals[..r].iter().map(|v| v.norm()).sum::<f64>();
    let residual = vals[r].norm() / scale;
    let witness = match assertion {
        Assertion::ProperHarmonic(r) => Some(vals[r - 1].norm()),
        Assertion::Nonzero(r) => Some(vals[r].norm()),
        _ => None,
    };
    Sample {
        residual,
        witness,
        exact_ok: None,
    }
}

fn check_iterate_assertion(claim: &Claim) -> Result<()> {
    match claim.assertion {
        Assertion::Harmonic | Assertion::ProperHarmonic(1..=3) | Assertion::Nonzero(0..=3) => Ok(()),
        a => Err(invalid(claim, format!("assertion {a} does not apply to this family"))),
    }
}

fn iterate_probe<'a>(spec: GroupSpec, draws: Vec<Draw>, assertion: Assertion) -> impl FnMut(usize, &mut ChaCha8Rng) -> Result<Outcome> + 'a {
    move |i, rng| {
        let d = &draws[i % draws.len()];
        let p = spec.sample(rng);
        if let Some(reason) = d.guard.check(&p)? {
            return Ok(Outcome::Reject(reason));
        }
        let vals = tension_values(&d.f, &spec, &p, assertion.depth())?;
        Ok(Outcome::Accept(iterate_sample(assertion, &vals)))
    }
}

pub(crate) fn prepare<'a>(claim: &'a Claim, rng: &mut ChaCha8Rng) -> Result<Prepared<'a>> {
    if claim.draws == 0 {
        return Err(invalid(claim, "needs at least one parameter draw"));
    }
    match claim.family {
        Family::Lemma { eigen, kappa } => lemma(claim, eigen, kappa),
        Family::LinearQuotient {
            same_column,
            constraints,
            mixed,
        } => linear_quotients(claim, same_column, constraints, mixed, rng),
        Family::QuotientExample => {
            check_iterate_assertion(claim)?;
            let spec = group_spec(claim)?;
            if spec.n < 2 {
                return Err(invalid(claim, "needs n >= 2"));
            }
            let e = Expr::entry(1, 1) / Expr::entry(2, 2);
            let params = json!({ "function": e.to_string() });
            let draws = vec![Draw::new(e, claim.guard)?];
            Ok(prepared(params, iterate_probe(spec, draws, claim.assertion)))
        }
        Family::CircleInvariance => circle_invariance(claim, rng),
        Family::PrincipalMinorEigen => principal_minors(claim),
        Family::MinorQuotient(branch) => minor_quotients(claim, branch, rng),
        Family::MinorExample => {
            check_iterate_assertion(claim)?;
            let spec = group_spec(claim)?;
            if spec.n < 4 {
                return Err(invalid(claim, "needs n >= 4"));
            }
            let p = MinorSpec::new(vec![1, 2], vec![1, 2])?;
            let q = MinorSpec::new(vec![3, 4], vec![3, 4])?;
            let e = crate::funcs::minor_quotient(&p, &q)?;
            let params = json!({ "function": e.to_string() });
            let draws = vec![Draw::new(e, claim.guard)?];
            Ok(prepared(params, iterate_probe(spec, draws, claim.assertion)))
        }
        Family::ExploreMinors { k, disjoint } => explore(claim, k, disjoint, rng),
        Family::PlanarClosedForm { r_max } => planar_closed_form(claim, r_max),
        Family::PlanarProper => planar_proper(claim),
        Family::Radial { pq_zero } => radial(claim, pq_zero, rng),
        Family::Duality => duality(claim, rng),
        Family::DualityIdentity => duality_identity(claim, rng),
        Family::Backend { order, family } => backend(claim, order, family, rng),
        Family::ProductRule => product_rule(claim, rng),
        Family::QuotientRule => quotient_rule(claim, rng),
        Family::BasisIndependence => basis_independence(claim, rng),
        Family::Su2Identification => su2_identification(claim),
    }
}

/// An entry function `(j, α)` of the block starting at column `offset`.
#[derive(Clone, Copy)]
struct Coef {
    j: usize,
    a: usize,
    offset: usize,
}

impl Coef {
    fn at(&self, p: &Mat<C>) -> C {
        p[(self.j - 1, self.a + self.offset - 1)]
    }
}

fn lemma<'a>(claim: &'a Claim, eigen: bool, kappa: bool) -> Result<Prepared<'a>> {
    let spec = group_spec(claim)?;
    let (kind, n) = (spec.kind, spec.n);
    let nf = n as f64;
    let lambda = match kind {
        GroupKind::U => -nf,
        GroupKind::SU => -(nf * nf - 1.0) / nf,
        GroupKind::SO => -(nf - 1.0) / 2.0,
        GroupKind::Sp => -(2.0 * nf + 1.0) / 2.0,
        GroupKind::Lorentz => return Err(invalid(claim, "no coefficient lemma on the Lorentz group")),
    };
    let offsets: &[usize] = if kind == GroupKind::Sp { &[0, n] } else { &[0] };
    let mut coefs = Vec::new();
    for &offset in offsets {
        for j in 1..=n {
            for a in 1..=n {
                coefs.push(Coef { j, a, offset });
            }
        }
    }
    let fields: Vec<ExprField> = coefs
        .iter()
        .map(|c| ExprField::new(Expr::entry(c.j, c.a + c.offset)))
        .collect::<Result<_>>()?;

    // κ(a, b) for a = (j, α) in block A and b = (k, β) in block B.
    let expected_kappa = move |x: &Coef, y: &Coef, p: &Mat<C>| -> C {
        let kx = Coef { j: y.j, a: x.a, offset: x.offset }.at(p);
        let jy = Coef { j: x.j, a: y.a, offset: y.offset }.at(p);
        match kind {
            GroupKind::U => -kx * jy,
            GroupKind::SU => -kx * jy + x.at(p) * y.at(p) / nf,
            GroupKind::SO => {
                let delta = if x.j == y.j && x.a == y.a { 1.0 } else { 0.0 };
                -0.5 * (kx * jy - delta)
            }
            _ => -0.5 * kx * jy,
        }
    };
    let relation = match kind {
        GroupKind::U => "kappa(z_ja, z_kb) = -z_ka z_jb",
        GroupKind::SU => "kappa(z_ja, z_kb) = -z_ka z_jb + z_ja z_kb / n",
        GroupKind::SO => "kappa(x_ja, x_kb) = -(x_ka x_jb - d_kj d_ab)/2",
        _ => "kappa(u_ja, v_kb) = -u_ka v_jb / 2 for u, v in {z, w}",
    };
    let params = json!({
        "functions": fields.len(),
        "eigenvalue": eigen.then_some(lambda),
        "relation": kappa.then_some(relation),
    });
    Ok(prepared(params, move |_, rng| {
        let p = spec.sample(rng);
        let mut worst = 0f64;
        let values: Vec<C> = coefs.iter().map(|c| c.at(&p)).collect();
        if eigen {
            for (f, v) in fields.iter().zip(&values) {
                let t: C = tension(f, &spec)?.eval(&p)?;
                worst = worst.max((t - lambda * v).norm() / 1f64.max(v.norm()));
            }
        }
        if kappa {
            for (i, (fx, cx)) in fields.iter().zip(&coefs).enumerate() {
                for (fy, cy) in fields.iter().zip(&coefs).skip(i) {
                    let k: C = conformality(fx, fy, &spec).eval(&p)?;
                    worst = worst.max(rel(k, expected_kappa(cx, cy, &p)));
                }
            }
        }
        Ok(Outcome::Accept(Sample::plain(worst)))
    }))
}

fn quotient_draw(
    claim: &Claim,
    spec: &GroupSpec,
    same_column: bool,
    constraints: PairConstraints,
    mixed: bool,
    rng: &mut ChaCha8Rng,
) -> Result<QuotientSpec> {
    let n = spec.n;
    if !same_column && n < 2 {
        return Err(invalid(claim, "distinct columns need n >= 2"));
    }
    let len = if spec.kind == GroupKind::Sp && mixed { 2 * n } else { n };
    let (mut p, mut q) = make_pair(len, constraints, rng)?;
    if spec.kind == GroupKind::Sp && !mixed {
        p.resize(2 * n, C::default());
        q.resize(2 * n, C::default());
    }
    let (alpha, beta) = if same_column {
        let a = rng.random_range(1..=n);
        (a, a)
    } else {
        let v = index_pair(n, rng);
        if rng.random_bool(0.5) {
            (v[0], v[1])
        } else {
            (v[1], v[0])
        }
    };
    Ok(QuotientSpec {
        kind: spec.kind,
        n,
        p,
        q,
        alpha,
        beta,
    })
}

fn quotient_params(specs: &[QuotientSpec]) -> Value {
    Value::Array(
        specs
            .iter()
            .map(|s| {
                json!({
                    "p": to_json(&s.p),
                    "q": to_json(&s.q),
                    "alpha": s.alpha,
                    "beta": s.beta,
                    "qq": to_json(&s.qq()),
                    "pq": to_json(&s.pq()),
                })
            })
            .collect(),
    )
}

fn linear_quotients<'a>(
    claim: &'a Claim,
    same_column: bool,
    constraints: PairConstraints,
    mixed: bool,
    rng: &mut ChaCha8Rng,
) -> Result<Prepared<'a>> {
    check_iterate_assertion(claim)?;
    let spec = group_spec(claim)?;
    if spec.kind == GroupKind::Lorentz {
        return Err(invalid(claim, "linear quotients are not defined on the Lorentz group"));
    }
    let mut specs = Vec::with_capacity(claim.draws);
    let mut draws = Vec::with_capacity(claim.draws);
    for _ in 0..claim.draws {
        let qs = quotient_draw(claim, &spec, same_column, constraints, mixed, rng)?;
        draws.push(Draw::new(linear_quotient(&qs)?, claim.guard)?);
        specs.push(qs);
    }
    let params = json!({
        "same_column": same_column,
        "constraints": to_json(&constraints),
        "mixed": mixed,
        "draws": quotient_params(&specs),
    });
    Ok(prepared(params, iterate_probe(spec, draws, claim.assertion)))
}

fn circle_invariance<'a>(claim: &'a Claim, rng: &mut ChaCha8Rng) -> Result<Prepared<'a>> {
    let su = group_spec(claim)?;
    if su.kind != GroupKind::SU {
        return Err(invalid(claim, "compares the su(n) and u(n) frames on SU(n)"));
    }
    let u = GroupSpec::new(GroupKind::U, su.n)?;
    let mut specs = Vec::new();
    let mut draws = Vec::new();
    for _ in 0..claim.draws {
        let qs = quotient_draw(claim, &su, false, PairConstraints::FREE, false, rng)?;
        draws.push(Draw::new(linear_quotient(&qs)?, claim.guard)?);
        specs.push(qs);
    }
    let params = json!({ "orders": [1, 2], "draws": quotient_params(&specs) });
    Ok(prepared(params, move |i, rng| {
        let d = &draws[i % draws.len()];
        let p = su.sample(rng);
        if let Some(reason) = d.guard.check(&p)? {
            return Ok(Outcome::Reject(reason));
        }
        let a = tension_values(&d.f, &su, &p, 2)?;
        let b = tension_values(&d.f, &u, &p, 2)?;
        Ok(Outcome::Accept(Sample::plain(rel(a[1], b[1]).max(rel(a[2], b[2])))))
    }))
}

fn principal_minors<'a>(claim: &'a Claim) -> Result<Prepared<'a>> {
    let spec = group_spec(claim)?;
    if spec.kind != GroupKind::U {
        return Err(invalid(claim, "principal minors are checked on U(n)"));
    }
    let n = spec.n;
    let minors: Vec<(f64, ExprField)> = (1..=n)
        .map(|k| {
            let lambda = -((k * (n - k + 1)) as f64);
            Ok((lambda, ExprField::new(principal_minor(k, n)?)?))
        })
        .collect::<Result<_>>()?;
    let params = json!({
        "orders": (1..=n).collect::<Vec<_>>(),
        "eigenvalues": minors.iter().map(|m| m.0).collect::<Vec<_>>(),
    });
    Ok(prepared(params, move |_, rng| {
        let p = spec.sample(rng);
        let mut worst = 0f64;
        for (lambda, d) in &minors {
            let v: C = d.eval(&p)?;
            let t: C = tension(d, &spec)?.eval(&p)?;
            worst = worst.max((t - *lambda * v).norm() / 1f64.max(v.norm()));
        }
        Ok(Outcome::Accept(Sample::plain(worst)))
    }))
}

fn minor_json(p: &MinorSpec, q: &MinorSpec) -> Value {
    json!({ "p": { "rows": p.rows, "cols": p.cols }, "q": { "rows": q.rows, "cols": q.cols } })
}

fn minor_quotients<'a>(claim: &'a Claim, branch: MinorBranch, rng: &mut ChaCha8Rng) -> Result<Prepared<'a>> {
    check_iterate_assertion(claim)?;
    let spec = group_spec(claim)?;
    if spec.kind != GroupKind::U || spec.n < 3 {
        return Err(invalid(claim, "2x2 minor quotients need U(n) with n >= 3"));
    }
    let n = spec.n;
    let mut params = Vec::new();
    let mut draws = Vec::new();
    for _ in 0..claim.draws {
        let (pr, pc) = (index_pair(n, rng), index_pair(n, rng));
        let other = |base: &Vec<usize>, rng: &mut ChaCha8Rng| loop {
            let v = index_pair(n, rng);
            if v != *base {
                break v;
            }
        };
        let (qr, qc) = match branch {
            MinorBranch::SameRows => (pr.clone(), other(&pc, rng)),
            MinorBranch::SameCols => (other(&pr, rng), pc.clone()),
            MinorBranch::Distinct => (other(&pr, rng), other(&pc, rng)),
        };
        let p = MinorSpec::new(pr, pc)?;
        let q = MinorSpec::new(qr, qc)?;
        params.push(minor_json(&p, &q));
        draws.push(Draw::new(crate::funcs::minor_quotient(&p, &q)?, claim.guard)?);
    }
    let params = json!({ "branch": format!("{branch:?}"), "draws": params });
    Ok(prepared(params, iterate_probe(spec, draws, claim.assertion)))
}

fn explore<'a>(claim: &'a Claim, k: usize, disjoint: bool, rng: &mut ChaCha8Rng) -> Result<Prepared<'a>> {
    check_iterate_assertion(claim)?;
    let spec = group_spec(claim)?;
    let n = spec.n;
    if spec.kind != GroupKind::U || k < 2 || n < 2 * k {
        return Err(Error::UnsatisfiableConstraints(format!(
            "{k}x{k} minor quotients with disjoint index sets need U(n), n >= {}",
            2 * k
        )));
    }
    let mut params = Vec::new();
    let mut draws = Vec::new();
    for _ in 0..claim.draws {
        let split = |rng: &mut ChaCha8Rng| -> (Vec<usize>, Vec<usize>) {
            if disjoint {
                let mut all: Vec<usize> = (1..=n).collect();
                all.shuffle(rng);
                (sorted(all[..k].to_vec()), sorted(all[k..2 * k].to_vec()))
            } else {
                let all: Vec<usize> = (1..=n).collect();
                loop {
                    let a = sorted(all.choose_multiple(rng, k).copied().collect());
                    let b = sorted(all.choose_multiple(rng, k).copied().collect());
                    if a != b && a.iter().any(|i| b.contains(i)) {
                        break (a, b);
                    }
                }
            }
        };
        let (pr, qr) = split(rng);
        let (pc, qc) = split(rng);
        let p = MinorSpec::new(pr, pc)?;
        let q = MinorSpec::new(qr, qc)?;
        params.push(minor_json(&p, &q));
        draws.push(Draw::new(crate::funcs::minor_quotient(&p, &q)?, claim.guard)?);
    }
    let params = json!({ "order": k, "disjoint": disjoint, "draws": params });
    Ok(prepared(params, iterate_probe(spec, draws, claim.assertion)))
}

fn planar_n(claim: &Claim) -> Result<u32> {
    if claim.domain != Domain::Plane || claim.n == 0 {
        return Err(invalid(claim, "planar claims need n >= 1"));
    }
    u32::try_from(claim.n).map_err(|_| invalid(claim, "n too large"))
}

/// A nonzero point `(x1, x2)` with small rational coordinates.
fn rational_plane_point(rng: &mut ChaCha8Rng) -> (ExactComplex, ExactComplex) {
    loop {
        let a = rng.random_range(-9i64..=9);
        let c = rng.random_range(-9i64..=9);
        if a == 0 && c == 0 {
            continue;
        }
        let b = rng.random_range(1i64..=6);
        let d = rng.random_range(1i64..=6);
        return (ExactComplex::from_ratios(a, b, 0, 1), ExactComplex::from_ratios(c, d, 0, 1));
    }
}

fn planar_closed_form<'a>(claim: &'a Claim, r_max: u32) -> Result<Prepared<'a>> {
    let n = planar_n(claim)?;
    let iterates = (0..=r_max).map(|r| planar_iterated(n, r)).collect::<Result<Vec<_>>>()?;
    let params = json!({
        "function": format!("(z/zbar)^{n}"),
        "orders": (0..=r_max).collect::<Vec<_>>(),
        "factors": iterates.iter().map(|it| it.product_factor()).collect::<Vec<_>>(),
    });
    Ok(prepared(params, move |_, rng| {
        let (x1, x2) = rational_plane_point(rng);
        let mut exact_ok = true;
        let mut worst = 0f64;
        for it in &iterates {
            let d = it.eval_computed(x1.clone(), x2.clone())? - it.closed_form(x1.clone(), x2.clone())?;
            if !d.is_zero() {
                exact_ok = false;
                worst = worst.max(d.to_complex().norm());
            }
        }
        Ok(Outcome::Accept(Sample {
            residual: worst,
            witness: None,
            exact_ok: Some(exact_ok),
        }))
    }))
}

fn planar_proper<'a>(claim: &'a Claim) -> Result<Prepared<'a>> {
    let n = planar_n(claim)?;
    let top = planar_iterated(n, n + 1)?;
    let below = planar_iterated(n, n)?;
    let params = json!({ "function": format!("(z/zbar)^{n}"), "vanishing_order": n + 1 });
    Ok(prepared(params, move |_, rng| {
        let (x1, x2) = rational_plane_point(rng);
        let t = top.eval_computed(x1.clone(), x2.clone())?;
        let b = below.eval_computed(x1, x2)?;
        Ok(Outcome::Accept(Sample {
            residual: t.to_complex().norm(),
            witness: Some(b.to_complex().norm()),
            exact_ok: Some(t.is_zero()),
        }))
    }))
}

/// Integer `(a, b, c, d)` with `a² + b² + c² = d² > 0`.
fn pythagorean_quadruple(rng: &mut ChaCha8Rng) -> [i64; 4] {
    loop {
        let [m, n, p, q]: [i64; 4] = std::array::from_fn(|_| rng.random_range(-3i64..=3));
        let d = m * m + n * n + p * p + q * q;
        if d == 0 {
            continue;
        }
        return [m * m + n * n - p * p - q * q, 2 * (m * q + n * p), 2 * (n * q - m * p), d];
    }
}

fn int_c(re: i64, im: i64) -> C {
    C::new(re as f64, im as f64)
}

/// Integer vectors `(p, q)` with `(q, q) = 0` under the form of `sig`, and
/// `(p, q) = 0` or `(p, q) ≠ 0` as requested.
fn radial_pair(hyperbolic: bool, pq_zero: bool, rng: &mut ChaCha8Rng) -> (Vec<C>, Vec<C>) {
    loop {
        let [a, b, c, d] = pythagorean_quadruple(rng);
        let q: Vec<C> = if hyperbolic {
            let mut spatial = [a, b, c];
            spatial.shuffle(rng);
            let sign = if rng.random_bool(0.5) { 1 } else { -1 };
            std::iter::once(int_c(sign * d, 0))
                .chain(spatial.iter().map(|&x| int_c(x, 0)))
                .collect()
        } else {
            let mut v = vec![int_c(a, 0), int_c(b, 0), int_c(c, 0), int_c(0, d)];
            v.shuffle(rng);
            v
        };
        let form = |x: &[C], y: &[C]| -> C {
            if hyperbolic {
                bilinear(&x[1..], &y[1..]) - x[0] * y[0]
            } else {
                bilinear(x, y)
            }
        };
        let p: Vec<C> = if pq_zero {
            // v_i = q_j, v_j = -q_i pairs to zero with q; spatial axes only on H³.
            let lo = usize::from(hyperbolic);
            let i = rng.random_range(lo..4);
            let j = loop {
                let j = rng.random_range(lo..4);
                if j != i {
                    break j;
                }
            };
            let t = rng.random_range(-2i64..=2) as f64;
            (0..4)
                .map(|k| {
                    let v = if k == i {
                        q[j]
                    } else if k == j {
                        -q[i]
                    } else {
                        C::default()
                    };
                    v + t * q[k]
                })
                .collect()
        } else {
            (0..4)
                .map(|_| int_c(rng.random_range(-3..=3), rng.random_range(-3..=3)))
                .collect()
        };
        let pq = form(&p, &q);
        let ok = if pq_zero { pq.norm() == 0.0 } else { pq.norm() >= 1.0 };
        if ok && independence(&p, &q) > 1e-3 {
            return (p, q);
        }
    }
}

fn radial<'a>(claim: &'a Claim, pq_zero: bool, rng: &mut ChaCha8Rng) -> Result<Prepared<'a>> {
    let hyperbolic = match claim.domain {
        Domain::Sphere => false,
        Domain::Hyperbolic => true,
        _ => return Err(invalid(claim, "radial examples live on S^3 or H^3")),
    };
    let target = match claim.assertion {
        Assertion::Harmonic => 1,
        Assertion::ProperHarmonic(2) => 2,
        a => return Err(invalid(claim, format!("assertion {a} does not apply to this family"))),
    };
    struct RadialDraw {
        ex: RadialExample,
        tau: Expr,
        exact_target: Expr,
    }
    let mut draws = Vec::new();
    let mut params = Vec::new();
    for _ in 0..claim.draws {
        let (p, q) = radial_pair(hyperbolic, pq_zero, rng);
        let ex = if hyperbolic {
            RadialExample::hyperbolic(p, q)?
        } else {
            RadialExample::sphere(p, q)?
        };
        let tau = ex.iterated_tension(1)?;
        let exact_target = if target == 1 { tau.clone() } else { ex.iterated_tension(2)? };
        params.push(json!({
            "p": to_json(&ex.p),
            "q": to_json(&ex.q),
            "qq": to_json(&ex.qq()),
            "pq": to_json(&ex.pq()),
        }));
        draws.push(RadialDraw { ex, tau, exact_target });
    }
    let guard = claim.guard;
    let assertion = claim.assertion;
    let params = json!({ "exact_check": format!("tau^{target} = 0"), "draws": params });
    Ok(prepared(params, move |i, rng| {
        let d = &draws[i % draws.len()];
        let qnorm = d.ex.q.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let far_from_pole = |x: &[f64]| {
            let qx: C = x.iter().zip(&d.ex.q).map(|(a, b)| *a * b).sum();
            let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            qx.norm() >= guard * qnorm * xn
        };
        let x: Vec<f64> = if hyperbolic {
            let s: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..=2.0)).collect();
            let x0 = (1.0 + s.iter().map(|v| v * v).sum::<f64>()).sqrt();
            std::iter::once(x0).chain(s).collect()
        } else {
            let g: Vec<f64> = (0..4).map(|_| gaussian(rng)).collect();
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            g.into_iter().map(|v| v / norm).collect()
        };
        if !far_from_pole(&x) {
            return Ok(Outcome::Reject("float point too close to q.x = 0".into()));
        }
        let xc: Vec<C> = x.iter().map(|v| C::new(*v, 0.0)).collect();
        let tau = d.ex.eval(&d.tau, &xc)?;
        let closed = d.ex.tension_closed_form(&xc)?;

        let (num, den): (Vec<i64>, Vec<i64>) = (0..4)
            .map(|_| (rng.random_range(-8i64..=8), rng.random_range(1i64..=4)))
            .unzip();
        let mut xr: Vec<f64> = num.iter().zip(&den).map(|(a, b)| *a as f64 / *b as f64).collect();
        let mut xe: Vec<ExactComplex> = num
            .iter()
            .zip(&den)
            .map(|(a, b)| ExactComplex::from_ratios(*a, *b, 0, 1))
            .collect();
        if hyperbolic {
            // Push x0 inside the future cone: x0 = 1 + Σ|x_i| + a/b.
            let shift: i64 = num[1..].iter().zip(&den[1..]).map(|(a, b)| a.abs() * 12 / b).sum::<i64>();
            let x0 = ExactComplex::from_ratios(12 + shift + num[0].abs() * 12 / den[0], 12, 0, 1);
            xr[0] = x0.to_complex().re;
            xe[0] = x0;
        }
        if !far_from_pole(&xr) {
            return Ok(Outcome::Reject("rational point too close to q.x = 0".into()));
        }
        let exact = d.ex.eval(&d.exact_target, &xe)?;
        let witness = matches!(assertion, Assertion::ProperHarmonic(_)).then(|| tau.norm());
        Ok(Outcome::Accept(Sample {
            residual: rel(tau, closed),
            witness,
            exact_ok: Some(exact.is_zero()),
        }))
    }))
}

fn lorentz_specs(claim: &Claim) -> Result<(GroupSpec, GroupSpec)> {
    let l = group_spec(claim)?;
    if l.kind != GroupKind::Lorentz {
        return Err(invalid(claim, "duality claims run on the Lorentz group"));
    }
    Ok((GroupSpec::new(GroupKind::SO, 4)?, l))
}

fn duality_pairs(claim: &Claim, rng: &mut ChaCha8Rng) -> Result<Vec<(Vec<C>, Vec<C>)>> {
    let constraints = PairConstraints {
        q: QForm::Isotropic,
        pq: PqRelation::Nonzero,
    };
    (0..claim.draws).map(|_| make_pair(4, constraints, rng)).collect()
}

fn pair_params(pairs: &[(Vec<C>, Vec<C>)]) -> Value {
    Value::Array(
        pairs
            .iter()
            .map(|(p, q)| {
                json!({
                    "p": to_json(p),
                    "q": to_json(q),
                    "qq": to_json(&bilinear(q, q)),
                    "pq": to_json(&bilinear(p, q)),
                })
            })
            .collect(),
    )
}

fn duality<'a>(claim: &'a Claim, rng: &mut ChaCha8Rng) -> Result<Prepared<'a>> {
    if claim.assertion != Assertion::PROPER_BIHARMONIC {
        return Err(invalid(claim, "duality claims assert proper biharmonicity"));
    }
    let (so4, lorentz) = lorentz_specs(claim)?;
    let pairs = duality_pairs(claim, rng)?;
    let draws: Vec<(Draw, Draw)> = pairs
        .iter()
        .map(|(p, q)| {
            Ok((
                Draw::new(so4_first_column_quotient(p, q)?, claim.guard)?,
                Draw::new(dual_first_column_quotient(p, q)?, claim.guard)?,
            ))
        })
        .collect::<Result<_>>()?;
    let params = json!({ "draws": pair_params(&pairs) });
    let assertion = claim.assertion;
    Ok(prepared(params, move |i, rng| {
        let (src, dual) = &draws[i % draws.len()];
        let x = so4.sample(rng);
        let l = lorentz.sample(rng);
        for (d, m, side) in [(src, &x, "SO(4)"), (dual, &l, "SO0(1,3)")] {
            if let Some(reason) = d.guard.check(m)? {
                return Ok(Outcome::Reject(format!("{side}: {reason}")));
            }
        }
        let a = iterate_sample(assertion, &tension_values(&src.f, &so4, &x, 2)?);
        let b = iterate_sample(assertion, &tension_values(&dual.f, &lorentz, &l, 2)?);
        Ok(Outcome::Accept(Sample {
            residual: a.residual.max(b.residual),
            witness: a.witness.zip(b.witness).map(|(u, v)| u.min(v)),
            exact_ok: None,
        }))
    }))
}

/// `D L D⁻¹` with `D = diag(1, -i, -i, -i)`, mapping SO₀(1,3) into SO(4, ℂ).
fn complexify(l: &Mat<C>) -> Mat<C> {
    let d = [C::new(1.0, 0.0), C::new(0.0, -1.0), C::new(0.0, -1.0), C::new(0.0, -1.0)];
    Mat::from_fn(4, |i, j| d[i] * l[(i, j)] / d[j])
}

fn duality_identity<'a>(claim: &'a Claim, rng: &mut ChaCha8Rng) -> Result<Prepared<'a>> {
    let (_, lorentz) = lorentz_specs(claim)?;
    let pairs = duality_pairs(claim, rng)?;
    let draws: Vec<(Draw, CoeffBackend)> = pairs
        .iter()
        .map(|(p, q)| {
            let src = so4_first_column_quotient(p, q)?;
            Ok((
                Draw::new(dual_first_column_quotient(p, q)?, claim.guard)?,
                CoeffBackend::new(&src, GroupKind::SO, 1)?,
            ))
        })
        .collect::<Result<_>>()?;
    let params = json!({ "identity": "tau(f*)(L) = -(tau f)(D L D^-1)", "draws": pair_params(&pairs) });
    Ok(prepared(params, move |i, rng| {
        let (dual, coeff) = &draws[i % draws.len()];
        let l = lorentz.sample(rng);
        if let Some(reason) = dual.guard.check(&l)? {
            return Ok(Outcome::Reject(reason));
        }
        let lhs: C = tension(&dual.f, &lorentz)?.eval(&l)?;
        let rhs = -coeff.eval(&complexify(&l))?;
        Ok(Outcome::Accept(Sample::plain(rel(lhs, rhs))))
    }))
}

fn backend<'a>(claim: &'a Claim, order: usize, family: TestFamily, rng: &mut ChaCha8Rng) -> Result<Prepared<'a>> {
    let spec = group_spec(claim)?;
    let n = spec.n;
    let mut draws = Vec::new();
    let mut functions = Vec::new();
    for _ in 0..claim.draws {
        let e = match family {
            TestFamily::Coefficient => Expr::entry(rng.random_range(1..=n), rng.random_range(1..=n)),
            TestFamily::Quotient => {
                let same = n < 2 || rng.random_bool(0.5);
                linear_quotient(&quotient_draw(claim, &spec, same, PairConstraints::FREE, false, rng)?)?
            }
            TestFamily::MinorQuotient => {
                if n < 3 {
                    return Err(invalid(claim, "2x2 minor quotients need n >= 3"));
                }
                let p = MinorSpec::new(index_pair(n, rng), index_pair(n, rng))?;
                let q = loop {
                    let q = MinorSpec::new(index_pair(n, rng), index_pair(n, rng))?;
                    if q != p {
                        break q;
                    }
                };
                crate::funcs::minor_quotient(&p, &q)?
            }
            TestFamily::PrincipalMinor => principal_minor(rng.random_range(1..=n), n)?,
        };
        functions.push(e.to_string());
        let coeff = CoeffBackend::new(&e, spec.kind, order)?;
        draws.push((Draw::new(e, claim.guard)?, coeff));
    }
    let params = json!({ "order": order, "family": family.slug(), "functions": functions });
    Ok(prepared(params, move |i, rng| {
        let (d, coeff) = &draws[i % draws.len()];
        let p = spec.sample(rng);
        if let Some(reason) = d.guard.check(&p)? {
            return Ok(Outcome::Reject(reason));
        }
        let frame: C = iterated_tension(&d.f, order, &spec)?.eval(&p)?;
        let formula = coeff.eval(&p)?;
        Ok(Outcome::Accept(Sample::plain(rel(frame, formula))))
    }))
}

fn poly_pairs(claim: &Claim, spec: &GroupSpec, rng: &mut ChaCha8Rng) -> Vec<(Expr, Expr)> {
    (0..claim.draws)
        .map(|_| (random_polynomial(spec.ambient, rng), random_polynomial(spec.ambient, rng)))
        .collect()
}

fn poly_params(pairs: &[(Expr, Expr)]) -> Value {
    Value::Array(
        pairs
            .iter()
            .map(|(a, b)| json!([a.to_string(), b.to_string()]))
            .collect(),
    )
}

fn product_rule<'a>(claim: &'a Claim, rng: &mut ChaCha8Rng) -> Result<Prepared<'a>> {
    let spec = group_spec(claim)?;
    let pairs = poly_pairs(claim, &spec, rng);
    let fields: Vec<(ExprField, ExprField, ExprField)> = pairs
        .iter()
        .map(|(f, h)| Ok((ExprField::new(f.clone())?, ExprField::new(h.clone())?, ExprField::new(f * h)?)))
        .collect::<Result<_>>()?;
    let params = json!({ "identity": "tau(fh) = tau(f) h + 2 kappa(f,h) + f tau(h)", "draws": poly_params(&pairs) });
    Ok(prepared(params, move |i, rng| {
        let (f, h, fh) = &fields[i % fields.len()];
        let p = spec.sample(rng);
        let lhs: C = tension(fh, &spec)?.eval(&p)?;
        let tf: C = tension(f, &spec)?.eval(&p)?;
        let th: C = tension(h, &spec)?.eval(&p)?;
        let k: C = conformality(f, h, &spec).eval(&p)?;
        let (fv, hv): (C, C) = (f.eval(&p)?, h.eval(&p)?);
        Ok(Outcome::Accept(Sample::plain(rel_terms(lhs, &[tf * hv, 2.0 * k, fv * th]))))
    }))
}

fn quotient_rule<'a>(claim: &'a Claim, rng: &mut ChaCha8Rng) -> Result<Prepared<'a>> {
    let spec = group_spec(claim)?;
    let pairs = poly_pairs(claim, &spec, rng);
    let fields: Vec<(ExprField, ExprField, Draw)> = pairs
        .iter()
        .map(|(p, q)| {
            Ok((
                ExprField::new(p.clone())?,
                ExprField::new(q.clone())?,
                Draw::new(p / q, claim.guard)?,
            ))
        })
        .collect::<Result<_>>()?;
    let params = json!({
        "identity": "Q^3 tau(P/Q) = Q^2 tau(P) - 2Q kappa(P,Q) + 2P kappa(Q,Q) - PQ tau(Q)",
        "draws": poly_params(&pairs),
    });
    Ok(prepared(params, move |i, rng| {
        let (pf, qf, quot) = &fields[i % fields.len()];
        let m = spec.sample(rng);
        if let Some(reason) = quot.guard.check(&m)? {
            return Ok(Outcome::Reject(reason));
        }
        let (p, q): (C, C) = (pf.eval(&m)?, qf.eval(&m)?);
        let tf: C = tension(&quot.f, &spec)?.eval(&m)?;
        let tp: C = tension(pf, &spec)?.eval(&m)?;
        let tq: C = tension(qf, &spec)?.eval(&m)?;
        let kpq: C = conformality(pf, qf, &spec).eval(&m)?;
        let kqq: C = conformality(qf, qf, &spec).eval(&m)?;
        let lhs = q * q * q * tf;
        let terms = [q * q * tp, -2.0 * q * kpq, 2.0 * p * kqq, -p * q * tq];
        Ok(Outcome::Accept(Sample::plain(rel_terms(lhs, &terms))))
    }))
}

fn basis_independence<'a>(claim: &'a Claim, rng: &mut ChaCha8Rng) -> Result<Prepared<'a>> {
    let spec = group_spec(claim)?;
    let pairs = poly_pairs(claim, &spec, rng);
    let draws: Vec<(Draw, GroupSpec)> = pairs
        .iter()
        .map(|(p, q)| Ok((Draw::new(p / q, claim.guard)?, spec.remixed(rng))))
        .collect::<Result<_>>()?;
    let params = json!({ "function": "P/Q with random polynomials", "draws": poly_params(&pairs) });
    Ok(prepared(params, move |i, rng| {
        let (d, mixed) = &draws[i % draws.len()];
        let p = spec.sample(rng);
        if let Some(reason) = d.guard.check(&p)? {
            return Ok(Outcome::Reject(reason));
        }
        let a: C = tension(&d.f, &spec)?.eval(&p)?;
        let b: C = tension(&d.f, mixed)?.eval(&p)?;
        Ok(Outcome::Accept(Sample::plain(rel(a, b))))
    }))
}

fn su2_identification<'a>(claim: &'a Claim) -> Result<Prepared<'a>> {
    let spec = group_spec(claim)?;
    if spec.kind != GroupKind::SU || spec.n != 2 {
        return Err(invalid(claim, "the identification is with SU(2)"));
    }
    let i = C::new(0.0, 1.0);
    let one = C::new(1.0, 0.0);
    let p = vec![one, i, C::default(), C::default()];
    let q = vec![one, -i, C::default(), C::default()];
    let group_side = ExprField::new(Expr::entry(1, 1) / Expr::entry(2, 2))?;
    let guard = claim.guard;
    let params = json!({ "sphere": "(x1 + i x2)/(x1 - i x2)", "group": "z11/z22", "p": to_json(&p), "q": to_json(&q) });
    Ok(prepared(params, move |_, rng| {
        let g: Vec<f64> = (0..4).map(|_| gaussian(rng)).collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        let z = C::new(g[0], g[1]) / norm;
        let w = C::new(g[2], g[3]) / norm;
        if z.norm() < guard {
            return Ok(Outcome::Reject(format!("|z| = {:.3e} below guard {guard}", z.norm())));
        }
        let (sphere, lifted) = lift_check_su2(&p, &q, (z, w))?;
        let m = Mat::from_rows(vec![vec![z, w], vec![-w.conj(), z.conj()]])?;
        let direct: C = group_side.eval(&m)?;
        Ok(Outcome::Accept(Sample::plain(
            (sphere - lifted).norm().max((sphere - direct).norm()),
        )))
    }))
}
