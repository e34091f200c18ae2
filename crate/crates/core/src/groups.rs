//! Classical matrix groups: orthonormal Lie-algebra bases, random sampling,
//! membership checks and the second-order frame curve.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::scalar::{Jet2, Scalar};

type C = Complex64;

const ONE: C = C::new(1.0, 0.0);
const I: C = C::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKind {
    U,
    SU,
    SO,
    Sp,
    /// The identity component SO₀(1,3) of the Lorentz group.
    Lorentz,
}

impl GroupKind {
    pub const ALL: [GroupKind; 5] = [
        GroupKind::U,
        GroupKind::SU,
        GroupKind::SO,
        GroupKind::Sp,
        GroupKind::Lorentz,
    ];

    /// Short lowercase name used on the command line.
    pub fn slug(&self) -> &'static str {
        match self {
            GroupKind::U => "u",
            GroupKind::SU => "su",
            GroupKind::SO => "so",
            GroupKind::Sp => "sp",
            GroupKind::Lorentz => "lorentz",
        }
    }

    pub fn from_slug(s: &str) -> Option<GroupKind> {
        GroupKind::ALL
            .into_iter()
            .find(|k| k.slug().eq_ignore_ascii_case(s))
    }

    /// Display name such as `U(3)` or `SO0(1,3)`.
    pub fn label(&self, n: usize) -> String {
        match self {
            GroupKind::U => format!("U({n})"),
            GroupKind::SU => format!("SU({n})"),
            GroupKind::SO => format!("SO({n})"),
            GroupKind::Sp => format!("Sp({n})"),
            GroupKind::Lorentz => "SO0(1,3)".to_string(),
        }
    }

    /// Side length of the defining matrices.
    pub fn ambient_dim(&self, n: usize) -> usize {
        match self {
            GroupKind::Sp => 2 * n,
            GroupKind::Lorentz => 4,
            _ => n,
        }
    }

    /// Dimension of the group as a manifold.
    pub fn dimension(&self, n: usize) -> usize {
        match self {
            GroupKind::U => n * n,
            GroupKind::SU => n * n - 1,
            GroupKind::SO => n * (n - 1) / 2,
            GroupKind::Sp => n * (2 * n + 1),
            GroupKind::Lorentz => 6,
        }
    }

    pub fn metric(&self) -> Metric {
        match self {
            GroupKind::Lorentz => Metric::TraceForm,
            _ => Metric::Hermitian,
        }
    }

    /// Checks that `n` is a valid size for this family.
    pub fn validate(&self, n: usize) -> Result<()> {
        let ok = match self {
            GroupKind::U | GroupKind::Sp => n >= 1,
            GroupKind::SU | GroupKind::SO => n >= 2,
            GroupKind::Lorentz => n == 4,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::UnsupportedGroup(format!(
                "{} is not available for n = {n}",
                self.slug()
            )))
        }
    }
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

/// Inner product on the Lie algebra.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// `g(Z, W) = Re tr(Z W*)`, positive definite.
    Hermitian,
    /// `g(Z, W) = Re tr(Z W)`; on so(1,3) this is indefinite with the
    /// rotations negative and the boosts positive.
    TraceForm,
}

impl Metric {
    pub fn eval(&self, z: &Mat<C>, w: &Mat<C>) -> f64 {
        match self {
            Metric::Hermitian => z.inner(w),
            Metric::TraceForm => z.trace_form(w),
        }
    }
}

/// One element of an orthonormal frame with its metric sign `g(Z, Z)`.
#[derive(Debug, Clone)]
pub struct BasisVector {
    pub matrix: Mat<C>,
    pub sign: f64,
    half_square: Mat<C>,
}

impl BasisVector {
    pub fn new(matrix: Mat<C>, sign: f64) -> Self {
        let half_square = matrix
            .matmul(&matrix)
            .expect("square matrix")
            .scale(C::new(0.5, 0.0));
        BasisVector {
            matrix,
            sign,
            half_square,
        }
    }

    /// `Z²/2`, cached for the frame curve.
    pub fn half_square(&self) -> &Mat<C> {
        &self.half_square
    }
}

/// A group together with an orthonormal frame of its Lie algebra.
#[derive(Debug, Clone)]
pub struct GroupSpec {
    pub kind: GroupKind,
    pub n: usize,
    pub basis: Vec<BasisVector>,
    pub ambient: usize,
    pub metric: Metric,
}

impl GroupSpec {
    pub fn new(kind: GroupKind, n: usize) -> Result<Self> {
        let basis = build_basis(kind, n)?;
        Ok(GroupSpec {
            kind,
            n,
            basis,
            ambient: kind.ambient_dim(n),
            metric: kind.metric(),
        })
    }

    /// A spec with a caller-supplied frame (used for re-mixed bases and for
    /// testing the connection term on non-unitary algebras).
    pub fn with_basis(kind: GroupKind, n: usize, basis: Vec<BasisVector>, metric: Metric) -> Self {
        let ambient = basis.first().map_or(kind.ambient_dim(n), |b| b.matrix.dim());
        GroupSpec {
            kind,
            n,
            basis,
            ambient,
            metric,
        }
    }

    pub fn label(&self) -> String {
        self.kind.label(self.n)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Mat<C> {
        haar_sample(self.kind, self.n, rng)
    }

    pub fn membership_residual(&self, m: &Mat<C>) -> Result<f64> {
        membership_residual(self.kind, m)
    }

    /// Gram matrix of the frame under the group metric.
    pub fn gram(&self) -> Vec<Vec<f64>> {
        self.basis
            .iter()
            .map(|a| {
                self.basis
                    .iter()
                    .map(|b| self.metric.eval(&a.matrix, &b.matrix))
                    .collect()
            })
            .collect()
    }

    /// The same group with its frame mixed by a random orthogonal matrix
    /// inside each block of equal metric sign. The result is again an
    /// orthonormal frame.
    pub fn remixed<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupSpec {
        let mut basis = Vec::with_capacity(self.basis.len());
        for sign in [-1.0, 1.0] {
            let block: Vec<&BasisVector> = self.basis.iter().filter(|b| b.sign == sign).collect();
            if block.is_empty() {
                continue;
            }
            let o = random_orthogonal(block.len(), rng);
            for row in 0..block.len() {
                let mut m = Mat::zeros(self.ambient);
                for (col, b) in block.iter().enumerate() {
                    m = m
                        .add(&b.matrix.scale(C::new(o[(row, col)], 0.0)))
                        .expect("same ambient size");
                }
                basis.push(BasisVector::new(m, sign));
            }
        }
        GroupSpec {
            basis,
            ..self.clone()
        }
    }
}

fn unit(n: usize, r: usize, s: usize) -> Mat<C> {
    let mut m = Mat::zeros(n);
    m[(r, s)] = ONE;
    m
}

/// `X_rs = (E_rs + E_sr)/√2` with 0-based `r < s`.
fn x_rs(n: usize, r: usize, s: usize) -> Mat<C> {
    unit(n, r, s)
        .add(&unit(n, s, r))
        .expect("same size")
        .scale(C::new(FRAC_1_SQRT_2, 0.0))
}

/// `Y_rs = (E_rs - E_sr)/√2` with 0-based `r < s`.
fn y_rs(n: usize, r: usize, s: usize) -> Mat<C> {
    unit(n, r, s)
        .sub(&unit(n, s, r))
        .expect("same size")
        .scale(C::new(FRAC_1_SQRT_2, 0.0))
}

fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |r| (r + 1..n).map(move |s| (r, s)))
}

/// `[[a, b], [c, d]] / √2` for n×n blocks.
fn sp_block(a: &Mat<C>, b: &Mat<C>, c: &Mat<C>, d: &Mat<C>) -> Mat<C> {
    let n = a.dim();
    Mat::from_fn(2 * n, |i, j| {
        let v = match (i < n, j < n) {
            (true, true) => a[(i, j)],
            (true, false) => b[(i, j - n)],
            (false, true) => c[(i - n, j)],
            (false, false) => d[(i - n, j - n)],
        };
        v * FRAC_1_SQRT_2
    })
}

/// Orthonormal frame of the Lie algebra of `kind`.
pub fn build_basis(kind: GroupKind, n: usize) -> Result<Vec<BasisVector>> {
    kind.validate(n)?;
    let compact = |m: Mat<C>| BasisVector::new(m, 1.0);
    let mut out = Vec::with_capacity(kind.dimension(n));
    match kind {
        GroupKind::U | GroupKind::SU => {
            for (r, s) in pairs(n) {
                out.push(compact(y_rs(n, r, s)));
                out.push(compact(x_rs(n, r, s).scale(I)));
            }
            if kind == GroupKind::U {
                for t in 0..n {
                    out.push(compact(unit(n, t, t).scale(I)));
                }
            } else {
                // Gram-Schmidt on i(D_t - D_{t+1}).
                let mut diag: Vec<Mat<C>> = Vec::new();
                for t in 0..n - 1 {
                    let mut v = unit(n, t, t).sub(&unit(n, t + 1, t + 1))?.scale(I);
                    for u in &diag {
                        let c = v.inner(u);
                        v = v.sub(&u.scale(C::new(c, 0.0)))?;
                    }
                    let norm = v.inner(&v).sqrt();
                    diag.push(v.scale(C::new(1.0 / norm, 0.0)));
                }
                out.extend(diag.into_iter().map(compact));
            }
        }
        GroupKind::SO => {
            for (r, s) in pairs(n) {
                out.push(compact(y_rs(n, r, s)));
            }
        }
        GroupKind::Sp => {
            let zero = Mat::zeros(n);
            for (r, s) in pairs(n) {
                let y = y_rs(n, r, s);
                let x = x_rs(n, r, s);
                let ix = x.scale(I);
                let mix = ix.scale(C::new(-1.0, 0.0));
                out.push(compact(sp_block(&y, &zero, &zero, &y)));
                out.push(compact(sp_block(&ix, &zero, &zero, &mix)));
                out.push(compact(sp_block(&zero, &ix, &ix, &zero)));
                out.push(compact(sp_block(&zero, &x, &x.scale(C::new(-1.0, 0.0)), &zero)));
            }
            for t in 0..n {
                let d = unit(n, t, t);
                let id = d.scale(I);
                let mid = id.scale(C::new(-1.0, 0.0));
                out.push(compact(sp_block(&id, &zero, &zero, &mid)));
                out.push(compact(sp_block(&zero, &id, &id, &zero)));
                out.push(compact(sp_block(&zero, &d, &d.scale(C::new(-1.0, 0.0)), &zero)));
            }
        }
        GroupKind::Lorentz => {
            for (r, s) in pairs(3) {
                out.push(BasisVector::new(y_rs(4, r + 1, s + 1), -1.0));
            }
            for k in 1..4 {
                out.push(BasisVector::new(x_rs(4, 0, k), 1.0));
            }
        }
    }
    Ok(out)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C {
    C::new(gaussian(rng), gaussian(rng)) * FRAC_1_SQRT_2
}

/// Real orthogonal matrix drawn from the Haar measure on O(m).
fn random_orthogonal<R: Rng + ?Sized>(m: usize, rng: &mut R) -> DMatrix<f64> {
    loop {
        let g = DMatrix::from_fn(m, m, |_, _| gaussian(rng));
        let qr = g.qr();
        let r = qr.r();
        if (0..m).any(|i| r[(i, i)].abs() < 1e-10) {
            continue;
        }
        let mut q = qr.q();
        for j in 0..m {
            if r[(j, j)] < 0.0 {
                q.column_mut(j).neg_mut();
            }
        }
        return q;
    }
}

fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Mat<C> {
    loop {
        let g = DMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
        let qr = g.qr();
        let r = qr.r();
        if (0..n).any(|i| r[(i, i)].norm() < 1e-10) {
            continue;
        }
        let mut q = qr.q();
        for j in 0..n {
            let phase = r[(j, j)] / r[(j, j)].norm();
            for i in 0..n {
                q[(i, j)] *= phase;
            }
        }
        return Mat::from_nalgebra(&q);
    }
}

/// Quaternionic Gram-Schmidt. A column `[a; b]` of the block form pairs
/// with `j[a; b] = [-b̄; ā]`, which is automatically orthogonal to it.
fn haar_symplectic<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Mat<C> {
    let m = 2 * n;
    let mut frame: Vec<Vec<C>> = Vec::with_capacity(m);
    let mut q = Mat::zeros(m);
    for beta in 0..n {
        let v = loop {
            let mut v: Vec<C> = (0..m).map(|_| complex_gaussian(rng)).collect();
            // Two passes keep the result orthogonal to rounding level.
            for _ in 0..2 {
                for u in &frame {
                    let proj: C = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                    for (vi, ui) in v.iter_mut().zip(u) {
                        *vi -= proj * ui;
                    }
                }
            }
            let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-8 {
                break v.into_iter().map(|x| x / norm).collect::<Vec<C>>();
            }
        };
        let jv: Vec<C> = (0..m)
            .map(|i| if i < n { -v[i + n].conj() } else { v[i - n].conj() })
            .collect();
        for i in 0..m {
            q[(i, beta)] = v[i];
            q[(i, n + beta)] = jv[i];
        }
        frame.push(v);
        frame.push(jv);
    }
    q
}

/// Random element of the group.
///
/// Haar distributed for the compact groups. For SO₀(1,3) the sample is
/// `exp(Σ c_k Z_k)` with `c_k` uniform in `[-1, 1]`.
pub fn haar_sample<R: Rng + ?Sized>(kind: GroupKind, n: usize, rng: &mut R) -> Mat<C> {
    match kind {
        GroupKind::U => haar_unitary(n, rng),
        GroupKind::SU => {
            let z = haar_unitary(n, rng);
            let d = z.determinant();
            let fix = C::from_polar(1.0, -d.arg() / n as f64);
            z.scale(fix)
        }
        GroupKind::SO => {
            let q = random_orthogonal(n, rng);
            let mut x = Mat::from_real_fn(n, |i, j| q[(i, j)]);
            if q.determinant() < 0.0 {
                for i in 0..n {
                    x[(i, n - 1)] = -x[(i, n - 1)];
                }
            }
            x
        }
        GroupKind::Sp => haar_symplectic(n, rng),
        GroupKind::Lorentz => {
            let basis = build_basis(GroupKind::Lorentz, 4).expect("fixed size");
            let unif = Uniform::new_inclusive(-1.0, 1.0).expect("valid range");
            let mut z = Mat::zeros(4);
            for b in &basis {
                let c: f64 = unif.sample(rng);
                z = z.add(&b.matrix.scale(C::new(c, 0.0))).expect("4x4");
            }
            z.exp()
        }
    }
}

fn max_abs_minus_identity(m: &Mat<C>, target: &Mat<C>) -> f64 {
    m.sub(target).map(|d| d.max_abs()).unwrap_or(f64::INFINITY)
}

/// Max-norm residual of the defining equations of `kind` at `m`.
pub fn membership_residual(kind: GroupKind, m: &Mat<C>) -> Result<f64> {
    let d = m.dim();
    let id = Mat::identity(d);
    let unitary = || max_abs_minus_identity(&m.matmul(&m.adjoint()).expect("square"), &id);
    let det_one = || (m.determinant() - ONE).norm();
    let res = match kind {
        GroupKind::U => unitary(),
        GroupKind::SU => unitary().max(det_one()),
        GroupKind::SO => {
            let orth = max_abs_minus_identity(&m.matmul(&m.transpose())?, &id);
            orth.max(det_one()).max(m.max_imag())
        }
        GroupKind::Sp => {
            if !d.is_multiple_of(2) {
                return Err(Error::DimensionMismatch {
                    expected: d + 1,
                    found: d,
                });
            }
            let n = d / 2;
            let mut block = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    block = block
                        .max((m[(i + n, j + n)] - m[(i, j)].conj()).norm())
                        .max((m[(i + n, j)] + m[(i, j + n)].conj()).norm());
                }
            }
            unitary().max(block)
        }
        GroupKind::Lorentz => {
            if d != 4 {
                return Err(Error::DimensionMismatch { expected: 4, found: d });
            }
            let eta = Mat::from_real_fn(4, |i, j| match (i, j) {
                (0, 0) => -1.0,
                (i, j) if i == j => 1.0,
                _ => 0.0,
            });
            let form = m.matmul(&eta)?.matmul(&m.transpose())?;
            let time_orientation = (1.0 - m[(0, 0)].re).max(0.0);
            max_abs_minus_identity(&form, &eta)
                .max(det_one())
                .max(m.max_imag())
                .max(time_orientation)
        }
    };
    Ok(res)
}

/// `p·(I + sZ + s²Z²/2)` as a matrix of jets in `s`.
pub fn curve_point<S: Scalar>(p: &Mat<S>, z: &Mat<C>) -> Result<Mat<Jet2<S>>> {
    let half_sq = z.matmul(z)?.scale(C::new(0.5, 0.0));
    curve_point_cached(p, z, &half_sq)
}

pub(crate) fn curve_point_cached<S: Scalar>(
    p: &Mat<S>,
    z: &Mat<C>,
    half_sq: &Mat<C>,
) -> Result<Mat<Jet2<S>>> {
    let a1 = p.mul_complex(z)?;
    let a2 = p.mul_complex(half_sq)?;
    Ok(Mat::from_fn(p.dim(), |i, j| {
        Jet2::new(p[(i, j)].clone(), a1[(i, j)].clone(), a2[(i, j)].clone())
    }))
}

/// Frame curve through `p` in the direction of a basis vector.
pub fn frame_curve<S: Scalar>(p: &Mat<S>, b: &BasisVector) -> Result<Mat<Jet2<S>>> {
    curve_point_cached(p, &b.matrix, &b.half_square)
}
