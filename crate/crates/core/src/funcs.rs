//! Builders for the function families studied on the groups, and random
//! parameter vectors satisfying bilinear-form constraints.

use itertools::Itertools;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::groups::GroupKind;

type C = Complex64;

/// Smallest singular value of the normalized 2-row stack below which two
/// vectors count as dependent.
pub const INDEPENDENCE_THRESHOLD: f64 = 1e-6;

fn check_index(what: &str, i: usize, max: usize) -> Result<()> {
    if i >= 1 && i <= max {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange(format!("{what} index {i} not in 1..={max}")))
    }
}

/// `z_{jα}` (or `x_{jα}`): the `(j, α)` entry of the defining matrix.
/// For Sp(n) this is an entry of the `z` block.
pub fn matrix_coefficient(kind: GroupKind, n: usize, j: usize, alpha: usize) -> Result<Expr> {
    let max = match kind {
        GroupKind::Lorentz => 4,
        _ => n,
    };
    check_index("row", j, max)?;
    check_index("column", alpha, max)?;
    Ok(Expr::entry(j, alpha))
}

/// `w_{kβ}` on Sp(n): entry `(k, n + β)` of the `2n × 2n` block matrix.
pub fn sp_w_coefficient(n: usize, k: usize, beta: usize) -> Result<Expr> {
    check_index("row", k, n)?;
    check_index("column", beta, n)?;
    Ok(Expr::entry(k, n + beta))
}

/// Symmetric bilinear pairing `Σ x_i y_i` (no conjugation).
pub fn bilinear(x: &[C], y: &[C]) -> C {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn norm(x: &[C]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Smallest singular value of the stack `[p/|p|; q/|q|]`.
pub fn independence(p: &[C], q: &[C]) -> f64 {
    let (np, nq) = (norm(p), norm(q));
    if np == 0.0 || nq == 0.0 {
        return 0.0;
    }
    let overlap: C = p.iter().zip(q).map(|(a, b)| a.conj() * b).sum::<C>() / (np * nq);
    (1.0 - overlap.norm()).max(0.0).sqrt()
}

/// Parameters of a linear quotient `P/Q`, `P = Σ p_j z_{jα}`,
/// `Q = Σ q_k z_{kβ}`. For Sp(n) the vectors have length `2n` and the second
/// half multiplies the `w` block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotientSpec {
    pub kind: GroupKind,
    pub n: usize,
    pub p: Vec<C>,
    pub q: Vec<C>,
    pub alpha: usize,
    pub beta: usize,
}

impl QuotientSpec {
    fn vector_len(&self) -> usize {
        match self.kind {
            GroupKind::Sp => 2 * self.n,
            GroupKind::Lorentz => 4,
            _ => self.n,
        }
    }

    fn column(&self, c: &[C], col: usize) -> Result<Expr> {
        let mut terms = Vec::new();
        let n = if self.kind == GroupKind::Lorentz { 4 } else { self.n };
        for (j, coeff) in c.iter().enumerate() {
            if *coeff == C::default() {
                continue;
            }
            let v = if self.kind == GroupKind::Sp && j >= n {
                sp_w_coefficient(n, j - n + 1, col)?
            } else {
                matrix_coefficient(self.kind, n, j + 1, col)?
            };
            terms.push(v.scale(*coeff));
        }
        Ok(Expr::sum(terms))
    }

    pub fn numerator(&self) -> Result<Expr> {
        self.column(&self.p, self.alpha)
    }

    pub fn denominator(&self) -> Result<Expr> {
        self.column(&self.q, self.beta)
    }

    /// `(q, q)` under the symmetric form.
    pub fn qq(&self) -> C {
        bilinear(&self.q, &self.q)
    }

    /// `(p, q)` under the symmetric form.
    pub fn pq(&self) -> C {
        bilinear(&self.p, &self.q)
    }
}

/// `P/Q` for the given parameters.
pub fn linear_quotient(spec: &QuotientSpec) -> Result<Expr> {
    let len = spec.vector_len();
    for v in [&spec.p, &spec.q] {
        if v.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                found: v.len(),
            });
        }
    }
    if independence(&spec.p, &spec.q) <= INDEPENDENCE_THRESHOLD {
        return Err(Error::DegenerateParameters("p and q are linearly dependent".into()));
    }
    Ok(spec.numerator()? / spec.denominator()?)
}

/// Row and column index sets (1-based, increasing) of a square minor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MinorSpec {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl MinorSpec {
    pub fn new(rows: Vec<usize>, cols: Vec<usize>) -> Result<Self> {
        if rows.len() != cols.len() || rows.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                found: cols.len(),
            });
        }
        for set in [&rows, &cols] {
            if set.contains(&0) {
                return Err(Error::IndexOutOfRange("minor indices start at 1".into()));
            }
            if !set.iter().tuple_windows().all(|(a, b)| a < b) {
                return Err(Error::IndexOutOfRange(format!(
                    "minor indices must be distinct and increasing, got {set:?}"
                )));
            }
        }
        Ok(MinorSpec { rows, cols })
    }

    pub fn order(&self) -> usize {
        self.rows.len()
    }

    /// Largest index used, i.e. the smallest admissible matrix size.
    pub fn max_index(&self) -> usize {
        self.rows.iter().chain(&self.cols).copied().max().unwrap_or(0)
    }

    /// Leibniz expansion of the determinant of the selected submatrix.
    pub fn expr(&self) -> Expr {
        let k = self.order();
        (0..k).permutations(k).fold(Expr::zero(), |acc, perm| {
            let prod = Expr::product(
                perm.iter()
                    .enumerate()
                    .map(|(i, &s)| Expr::entry(self.rows[i], self.cols[s])),
            );
            if permutation_sign(&perm) > 0 {
                acc + prod
            } else {
                acc - prod
            }
        })
    }
}

fn permutation_sign(perm: &[usize]) -> i32 {
    let mut inversions = 0;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Quotient of two minors; identical minors give the constant 1.
pub fn minor_quotient(p: &MinorSpec, q: &MinorSpec) -> Result<Expr> {
    if p.order() != q.order() {
        return Err(Error::DimensionMismatch {
            expected: p.order(),
            found: q.order(),
        });
    }
    if p == q {
        return Ok(Expr::one());
    }
    Ok(p.expr() / q.expr())
}

/// The leading `k × k` minor `d_k` of an `n × n` matrix.
pub fn principal_minor(k: usize, n: usize) -> Result<Expr> {
    if k == 0 || k > n {
        return Err(Error::IndexOutOfRange(format!("minor order {k} not in 1..={n}")));
    }
    Ok(MinorSpec::new((1..=k).collect(), (1..=k).collect())?.expr())
}

/// Constraint on `(q, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QForm {
    Free,
    Isotropic,
    NonIsotropic,
}

/// Constraint on `(p, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PqRelation {
    Free,
    Zero,
    Nonzero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairConstraints {
    pub q: QForm,
    pub pq: PqRelation,
}

impl PairConstraints {
    pub const FREE: PairConstraints = PairConstraints {
        q: QForm::Free,
        pq: PqRelation::Free,
    };
}

/// Values of `|(q,q)|` and `|(p,q)|` below this count as zero and above
/// `GENERIC_FLOOR` as safely nonzero; draws in between are rejected.
const GENERIC_FLOOR: f64 = 0.1;

fn gaussian_vec<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<C> {
    (0..len)
        .map(|_| {
            let (a, b): (f64, f64) = (StandardNormal.sample(rng), StandardNormal.sample(rng));
            C::new(a, b)
        })
        .collect()
}

fn real_gaussian<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

fn isotropic<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<C> {
    let a = real_gaussian(len, rng);
    let mut b = real_gaussian(len, rng);
    let aa: f64 = a.iter().map(|x| x * x).sum();
    let ab: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    for (bi, ai) in b.iter_mut().zip(&a) {
        *bi -= ab / aa * ai;
    }
    let bb: f64 = b.iter().map(|x| x * x).sum();
    let s = (aa / bb).sqrt();
    a.iter().zip(&b).map(|(x, y)| C::new(*x, y * s)).collect()
}

/// Random `(p, q)` of length `len`, both of unit norm, linearly independent
/// and satisfying `constraints`.
pub fn make_pair<R: Rng + ?Sized>(
    len: usize,
    constraints: PairConstraints,
    rng: &mut R,
) -> Result<(Vec<C>, Vec<C>)> {
    if len < 2 && (constraints.q == QForm::Isotropic || constraints.pq != PqRelation::Free) {
        return Err(Error::UnsatisfiableConstraints(format!(
            "{constraints:?} needs at least two coordinates"
        )));
    }
    if len < 2 {
        return Err(Error::UnsatisfiableConstraints(
            "two independent vectors need at least two coordinates".into(),
        ));
    }
    for _ in 0..200 {
        let q = match constraints.q {
            QForm::Isotropic => isotropic(len, rng),
            _ => gaussian_vec(len, rng),
        };
        if constraints.q == QForm::NonIsotropic && bilinear(&q, &q).norm() < GENERIC_FLOOR * norm(&q).powi(2) {
            continue;
        }
        let mut p = gaussian_vec(len, rng);
        if constraints.pq == PqRelation::Zero {
            // Subtract the component along conj(q): (conj(q), q) = |q|².
            let t = bilinear(&p, &q) / norm(&q).powi(2);
            for (pi, qi) in p.iter_mut().zip(&q) {
                *pi -= t * qi.conj();
            }
        }
        let (np, nq) = (norm(&p), norm(&q));
        if np < 1e-8 {
            continue;
        }
        let p: Vec<C> = p.into_iter().map(|x| x / np).collect();
        let q: Vec<C> = q.into_iter().map(|x| x / nq).collect();
        if constraints.pq == PqRelation::Nonzero && bilinear(&p, &q).norm() < GENERIC_FLOOR {
            continue;
        }
        if independence(&p, &q) <= 1e-3 {
            continue;
        }
        return Ok((p, q));
    }
    Err(Error::UnsatisfiableConstraints(format!(
        "no independent pair of length {len} satisfies {constraints:?}"
    )))
}

/// `(Σ p_k x_{k1}) / (Σ q_k x_{k1})` on SO(4).
pub fn so4_first_column_quotient(p: &[C], q: &[C]) -> Result<Expr> {
    linear_quotient(&QuotientSpec {
        kind: GroupKind::SO,
        n: 4,
        p: p.to_vec(),
        q: q.to_vec(),
        alpha: 1,
        beta: 1,
    })
}

/// The SO₀(1,3) function dual to [`so4_first_column_quotient`]: the same
/// quotient with `x_{k1}` replaced by `-i·x_{k1}` for `k = 2, 3, 4`.
pub fn dual_first_column_quotient(p: &[C], q: &[C]) -> Result<Expr> {
    let qq = bilinear(q, q);
    let pq = bilinear(p, q);
    if qq.norm() > 1e-12 * norm(q).powi(2) {
        return Err(Error::DegenerateParameters(format!("(q, q) = {qq} is not zero")));
    }
    if pq.norm() <= 1e-12 * norm(p) * norm(q) {
        return Err(Error::DegenerateParameters("(p, q) vanishes".into()));
    }
    let source = so4_first_column_quotient(p, q)?;
    let minus_i = C::new(0.0, -1.0);
    Ok(source.substitute(&|v| match *v {
        Var::Entry { row, col: 1 } if (2..=4).contains(&row) => {
            Some(Expr::entry(row, 1).scale(minus_i))
        }
        _ => None,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn e(i: usize, len: usize) -> Vec<C> {
        (0..len).map(|k| if k == i { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect()
    }

    #[test]
    fn coefficient_examples() {
        assert_eq!(matrix_coefficient(GroupKind::U, 2, 1, 1).unwrap().to_string(), "(var z 1 1)");
        assert_eq!(sp_w_coefficient(2, 1, 2).unwrap().to_string(), "(var z 1 4)");
        assert_eq!(matrix_coefficient(GroupKind::SO, 3, 3, 1).unwrap().to_string(), "(var z 3 1)");
        assert!(matches!(
            matrix_coefficient(GroupKind::U, 2, 3, 1),
            Err(Error::IndexOutOfRange(_))
        ));
        assert!(matches!(sp_w_coefficient(2, 1, 3), Err(Error::IndexOutOfRange(_))));
    }

    #[test]
    fn linear_quotient_examples() {
        let spec = QuotientSpec {
            kind: GroupKind::U,
            n: 2,
            p: e(0, 2),
            q: e(1, 2),
            alpha: 1,
            beta: 2,
        };
        assert_eq!(
            linear_quotient(&spec).unwrap().to_string(),
            "(div (var z 1 1) (var z 2 2))"
        );

        let sp = QuotientSpec {
            kind: GroupKind::Sp,
            n: 1,
            p: vec![c(1.0, 0.0), c(0.0, 0.0)],
            q: vec![c(0.0, 0.0), c(1.0, 0.0)],
            alpha: 1,
            beta: 1,
        };
        assert_eq!(linear_quotient(&sp).unwrap().to_string(), "(div (var z 1 1) (var z 1 2))");

        let so = QuotientSpec {
            kind: GroupKind::SO,
            n: 4,
            p: e(2, 4),
            q: vec![c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0)],
            alpha: 1,
            beta: 1,
        };
        assert_eq!(so.qq(), c(0.0, 0.0));
        assert_eq!(
            so.denominator().unwrap().to_string(),
            "(add (var z 1 1) (mul (const 0.0 1.0) (var z 2 1)))"
        );

        let dep = QuotientSpec {
            q: spec.p.iter().map(|x| x * c(0.0, 2.0)).collect(),
            ..spec
        };
        assert!(matches!(linear_quotient(&dep), Err(Error::DegenerateParameters(_))));
    }

    #[test]
    fn minor_examples() {
        let p = MinorSpec::new(vec![1, 2], vec![1, 2]).unwrap();
        let q = MinorSpec::new(vec![3, 4], vec![3, 4]).unwrap();
        let f = minor_quotient(&p, &q).unwrap();
        assert_eq!(
            f.to_string(),
            "(div (sub (mul (var z 1 1) (var z 2 2)) (mul (var z 1 2) (var z 2 1))) \
             (sub (mul (var z 3 3) (var z 4 4)) (mul (var z 3 4) (var z 4 3))))"
        );
        assert!(minor_quotient(&p, &p).unwrap().is_one());
        assert!(MinorSpec::new(vec![2, 1], vec![1, 2]).is_err());
        assert!(MinorSpec::new(vec![1, 1], vec![1, 2]).is_err());
    }

    #[test]
    fn principal_minor_examples() {
        assert_eq!(principal_minor(1, 3).unwrap().to_string(), "(var z 1 1)");
        assert_eq!(
            principal_minor(2, 3).unwrap().to_string(),
            "(sub (mul (var z 1 1) (var z 2 2)) (mul (var z 1 2) (var z 2 1)))"
        );
        let d3 = principal_minor(3, 3).unwrap();
        let id = |v: &Var| match v {
            Var::Entry { row, col } => Some(if row == col { c(1.0, 0.0) } else { c(0.0, 0.0) }),
            _ => None,
        };
        assert_eq!(d3.evaluate(&id).unwrap(), c(1.0, 0.0));
        assert!(matches!(principal_minor(4, 3), Err(Error::IndexOutOfRange(_))));
        assert!(matches!(principal_minor(0, 3), Err(Error::IndexOutOfRange(_))));
    }

    #[test]
    fn make_pair_constraints_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for len in [3, 4, 6] {
            let (p, q) = make_pair(
                len,
                PairConstraints {
                    q: QForm::Isotropic,
                    pq: PqRelation::Zero,
                },
                &mut rng,
            )
            .unwrap();
            assert!(bilinear(&q, &q).norm() < 1e-12);
            assert!(bilinear(&p, &q).norm() < 1e-12);
            assert!((norm(&p) - 1.0).abs() < 1e-12 && (norm(&q) - 1.0).abs() < 1e-12);
            assert!(independence(&p, &q) > INDEPENDENCE_THRESHOLD);

            let (p, q) = make_pair(
                len,
                PairConstraints {
                    q: QForm::Isotropic,
                    pq: PqRelation::Nonzero,
                },
                &mut rng,
            )
            .unwrap();
            assert!(bilinear(&q, &q).norm() < 1e-12);
            assert!(bilinear(&p, &q).norm() >= 0.1);

            let (_, q) = make_pair(
                len,
                PairConstraints {
                    q: QForm::NonIsotropic,
                    pq: PqRelation::Free,
                },
                &mut rng,
            )
            .unwrap();
            assert!(bilinear(&q, &q).norm() >= 0.1);
        }
    }

    #[test]
    fn make_pair_rejects_impossible_requests() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let iso_zero = PairConstraints {
            q: QForm::Isotropic,
            pq: PqRelation::Zero,
        };
        // In C² the isotropic lines are (1, ±i); orthogonality forces p ∥ q.
        assert!(matches!(
            make_pair(2, iso_zero, &mut rng),
            Err(Error::UnsatisfiableConstraints(_))
        ));
        assert!(matches!(
            make_pair(1, PairConstraints::FREE, &mut rng),
            Err(Error::UnsatisfiableConstraints(_))
        ));
    }

    #[test]
    fn hand_built_pairs() {
        let q = [c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0)];
        assert_eq!(bilinear(&q, &q), c(0.0, 0.0));
        let p = [c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)];
        assert_eq!(bilinear(&p, &q), c(0.0, 0.0));
        let p = [c(1.0, 0.0), c(0.0, -1.0), c(0.0, 0.0), c(0.0, 0.0)];
        assert_eq!(bilinear(&p, &q), c(2.0, 0.0));
    }

    #[test]
    fn duality_substitution() {
        let q = vec![c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0)];
        let f = dual_first_column_quotient(&e(0, 4), &q).unwrap();
        assert_eq!(f.to_string(), "(div (var z 1 1) (add (var z 1 1) (var z 2 1)))");
        let f = dual_first_column_quotient(&e(1, 4), &q).unwrap();
        assert_eq!(
            f.to_string(),
            "(div (mul (const 0.0 -1.0) (var z 2 1)) (add (var z 1 1) (var z 2 1)))"
        );
        // (q, q) != 0 and (p, q) = 0 are rejected
        assert!(dual_first_column_quotient(&e(0, 4), &e(1, 4)).is_err());
        let p = vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)];
        assert!(dual_first_column_quotient(&p, &q).is_err());
    }

    #[test]
    fn double_substitution_flips_rows_two_to_four() {
        let p = vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)];
        let num = QuotientSpec {
            kind: GroupKind::SO,
            n: 4,
            p: p.clone(),
            q: p,
            alpha: 1,
            beta: 1,
        }
        .numerator()
        .unwrap();
        let sub = |e: &Expr| {
            e.substitute(&|v| match *v {
                Var::Entry { row, col: 1 } if row >= 2 => Some(Expr::entry(row, 1).scale(c(0.0, -1.0))),
                _ => None,
            })
        };
        let twice = sub(&sub(&num));
        let vals: Vec<(Var, C)> = (1..=4).map(|r| (Var::entry(r, 1), c(r as f64 * 0.5, 0.0))).collect();
        let got = twice.evaluate_with(&vals).unwrap();
        // 1·0.5 - (2·1 + 3·1.5 + 4·2)
        assert!((got - c(0.5 - 14.5, 0.0)).norm() < 1e-14);
    }
}
