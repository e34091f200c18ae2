//! Flat-space operators and the radial-projection examples on the sphere,
//! hyperbolic space and the plane.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expr::{partial, planar_to_real, Expr, Var};
use crate::scalar::Scalar;

type C = Complex64;

/// Signs of a flat metric, one per coordinate axis. Axes are numbered from
/// `first_axis`: 1 for Euclidean space, 0 for Minkowski space.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatSignature {
    pub first_axis: usize,
    pub signs: Vec<f64>,
}

impl FlatSignature {
    pub fn euclidean(dim: usize) -> Self {
        FlatSignature {
            first_axis: 1,
            signs: vec![1.0; dim],
        }
    }

    /// ℝ⁴₁ with coordinates `x_0..x_3` and signs `(-1, +1, +1, +1)`.
    pub fn minkowski() -> Self {
        FlatSignature {
            first_axis: 0,
            signs: vec![-1.0, 1.0, 1.0, 1.0],
        }
    }

    pub fn dim(&self) -> usize {
        self.signs.len()
    }

    pub fn axes(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.signs.iter().enumerate().map(|(i, s)| (self.first_axis + i, *s))
    }

    pub fn form(&self) -> BilinearForm {
        BilinearForm { sig: self.clone() }
    }

    /// `(x, x)` as an expression in the coordinates.
    pub fn squared_norm(&self) -> Expr {
        Expr::sum(self.axes().map(|(a, s)| Expr::pow(&Expr::coord(a), 2).scale(C::new(s, 0.0))))
    }

    fn check(&self, e: &Expr) -> Result<()> {
        for v in e.variables() {
            match v {
                Var::Coord(a) if a >= self.first_axis && a < self.first_axis + self.dim() => {}
                Var::Coord(a) => {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim(),
                        found: a + 1 - self.first_axis,
                    })
                }
                other => {
                    return Err(Error::MixedVariableKinds(format!(
                        "flat operators act on real coordinates, found {other}"
                    )))
                }
            }
        }
        Ok(())
    }
}

/// Symmetric (not Hermitian) bilinear pairing of complex vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearForm {
    pub sig: FlatSignature,
}

impl BilinearForm {
    pub fn pair(&self, x: &[C], y: &[C]) -> Result<C> {
        let d = self.sig.dim();
        if x.len() != d || y.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: if x.len() != d { x.len() } else { y.len() },
            });
        }
        Ok(x.iter()
            .zip(y)
            .zip(&self.sig.signs)
            .map(|((a, b), s)| a * b * s)
            .sum())
    }
}

/// `Σ_i sign_i ∂²e/∂x_i²`.
pub fn flat_laplacian(e: &Expr, sig: &FlatSignature) -> Result<Expr> {
    sig.check(e)?;
    let terms = sig.axes().map(|(a, s)| {
        let v = Var::Coord(a);
        partial(&partial(e, &v), &v).scale(C::new(s, 0.0))
    });
    Ok(Expr::sum(terms).hash_cons())
}

/// `(weight · Δ_sig)^r e`, with `r = 0` returning `e`.
pub fn weighted_iterate(e: &Expr, weight: &Expr, sig: &FlatSignature, r: usize) -> Result<Expr> {
    sig.check(weight)?;
    let mut cur = e.clone();
    for _ in 0..r {
        cur = Expr::mul(weight, &flat_laplacian(&cur, sig)?);
    }
    Ok(cur)
}

/// `f_n = (z / z̄)^n` in the planar variables.
pub fn planar_power(n: u32) -> Expr {
    Expr::pow(&(Expr::var(Var::PlanarZ) / Expr::var(Var::PlanarZbar)), n)
}

/// `Δ^r f_n` computed in real coordinates, next to the closed form
/// `(-4/|z|²)^r · Π_{k=1..r} (n² - (k-1)²) · f_n`.
#[derive(Debug, Clone)]
pub struct PlanarIterate {
    pub n: u32,
    pub r: u32,
    pub computed: Expr,
}

impl PlanarIterate {
    /// The integer factor `Π_{k=1..r} (n² - (k-1)²)`.
    pub fn product_factor(&self) -> i64 {
        let n = self.n as i64;
        (1..=self.r as i64).map(|k| n * n - (k - 1) * (k - 1)).product()
    }

    pub fn eval_computed<S: Scalar>(&self, x1: S, x2: S) -> Result<S> {
        self.computed
            .evaluate_with(&[(Var::Coord(1), x1), (Var::Coord(2), x2)])
    }

    pub fn closed_form<S: Scalar>(&self, x1: S, x2: S) -> Result<S> {
        let i = S::from_complex(C::new(0.0, 1.0));
        let z = x1.clone() + i.clone() * x2.clone();
        let zbar = x1 - i * x2;
        let modulus = z.clone() * zbar.clone();
        let lead = S::from_complex(C::new(-4.0, 0.0)).try_div(&modulus)?.powu(self.r);
        let fnz = z.try_div(&zbar)?.powu(self.n);
        Ok(lead * S::from_complex(C::new(self.product_factor() as f64, 0.0)) * fnz)
    }
}

pub fn planar_iterated(n: u32, r: u32) -> Result<PlanarIterate> {
    let sig = FlatSignature::euclidean(2);
    let mut e = planar_to_real(&planar_power(n))?;
    for _ in 0..r {
        e = flat_laplacian(&e, &sig)?;
    }
    Ok(PlanarIterate { n, r, computed: e })
}

/// `f(x) = (p·x)/(q·x)` on a flat space, pulled back from the sphere or from
/// hyperbolic space along the radial projection.
#[derive(Debug, Clone)]
pub struct RadialExample {
    pub sig: FlatSignature,
    pub p: Vec<C>,
    pub q: Vec<C>,
}

impl RadialExample {
    /// Sphere S³ ⊂ ℝ⁴, coordinates `x_1..x_4`.
    pub fn sphere(p: Vec<C>, q: Vec<C>) -> Result<Self> {
        RadialExample::new(FlatSignature::euclidean(4), p, q)
    }

    /// Hyperbolic space H³ ⊂ ℝ⁴₁, coordinates `x_0..x_3`.
    pub fn hyperbolic(p: Vec<C>, q: Vec<C>) -> Result<Self> {
        RadialExample::new(FlatSignature::minkowski(), p, q)
    }

    fn new(sig: FlatSignature, p: Vec<C>, q: Vec<C>) -> Result<Self> {
        for v in [&p, &q] {
            if v.len() != sig.dim() {
                return Err(Error::DimensionMismatch {
                    expected: sig.dim(),
                    found: v.len(),
                });
            }
        }
        Ok(RadialExample { sig, p, q })
    }

    fn linear(&self, c: &[C]) -> Expr {
        Expr::sum(
            self.sig
                .axes()
                .zip(c)
                .filter(|(_, k)| **k != C::default())
                .map(|((a, _), k)| Expr::coord(a).scale(*k)),
        )
    }

    /// The quotient `(p·x)/(q·x)` with the plain (unsigned) dot products.
    pub fn quotient(&self) -> Expr {
        self.linear(&self.p) / self.linear(&self.q)
    }

    /// `λ^{-2}`: `|x|²` on ℝ⁴ and `-(x, x)_L` on ℝ⁴₁.
    pub fn weight(&self) -> Expr {
        let norm = self.sig.squared_norm();
        if self.sig.first_axis == 0 {
            -norm
        } else {
            norm
        }
    }

    /// `τ^r` of the quotient, as a symbolic expression on the flat space.
    pub fn iterated_tension(&self, r: usize) -> Result<Expr> {
        weighted_iterate(&self.quotient(), &self.weight(), &self.sig, r)
    }

    pub fn pq(&self) -> C {
        self.sig.form().pair(&self.p, &self.q).expect("lengths checked")
    }

    pub fn qq(&self) -> C {
        self.sig.form().pair(&self.q, &self.q).expect("lengths checked")
    }

    /// Closed form of `τ(f)` valid when `(q, q) = 0`:
    /// `-2|x|²(p,q)/(q·x)²` on the sphere, `2|x|_L²(p,q)_L/(q·x)²` on H³.
    pub fn tension_closed_form<S: Scalar>(&self, x: &[S]) -> Result<S> {
        if x.len() != self.sig.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.sig.dim(),
                found: x.len(),
            });
        }
        let mut norm = S::zero();
        let mut qx = S::zero();
        for ((xi, s), qi) in x.iter().zip(&self.sig.signs).zip(&self.q) {
            norm = norm + (xi.clone() * xi.clone()).scale(C::new(*s, 0.0));
            qx = qx + xi.scale(*qi);
        }
        let lead = if self.sig.first_axis == 0 { 2.0 } else { -2.0 };
        (norm.scale(self.pq() * lead)).try_div(&(qx.clone() * qx))
    }

    pub fn eval<S: Scalar>(&self, e: &Expr, x: &[S]) -> Result<S> {
        let bindings: Vec<(Var, S)> = self
            .sig
            .axes()
            .zip(x)
            .map(|((a, _), v)| (Var::Coord(a), v.clone()))
            .collect();
        e.evaluate_with(&bindings)
    }
}

/// The U(2)-side expression corresponding to `(p·x)/(q·x)` on S³ under
/// `(z, w) ↦ [[z, w], [-w̄, z̄]]`, using `x_1 = (z11 + z22)/2`,
/// `x_2 = (z11 - z22)/2i`, `x_3 = (z12 - z21)/2`, `x_4 = (z12 + z21)/2i`.
pub fn su2_group_quotient(p: &[C], q: &[C]) -> Result<Expr> {
    for v in [p, q] {
        if v.len() != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                found: v.len(),
            });
        }
    }
    let z = Expr::entry;
    let half = C::new(0.5, 0.0);
    let half_over_i = C::new(0.0, -0.5);
    let coords = [
        (z(1, 1) + z(2, 2)).scale(half),
        (z(1, 1) - z(2, 2)).scale(half_over_i),
        (z(1, 2) - z(2, 1)).scale(half),
        (z(1, 2) + z(2, 1)).scale(half_over_i),
    ];
    let lin = |c: &[C]| Expr::sum(coords.iter().zip(c).map(|(x, k)| x.scale(*k)));
    Ok(lin(p) / lin(q))
}

/// Evaluates `(p·x)/(q·x)` at `x = (Re z, Im z, Re w, Im w)` on S³ and the
/// U(2) quotient of [`su2_group_quotient`] at `[[z, w], [-w̄, z̄]]`.
pub fn lift_check_su2(p: &[C], q: &[C], point: (C, C)) -> Result<(C, C)> {
    let (z, w) = point;
    let sphere = RadialExample::sphere(p.to_vec(), q.to_vec())?;
    let x = [C::new(z.re, 0.0), C::new(z.im, 0.0), C::new(w.re, 0.0), C::new(w.im, 0.0)];
    let on_sphere = sphere.eval(&sphere.quotient(), &x)?;
    let group = su2_group_quotient(p, q)?;
    let m = [
        (Var::entry(1, 1), z),
        (Var::entry(1, 2), w),
        (Var::entry(2, 1), -w.conj()),
        (Var::entry(2, 2), z.conj()),
    ];
    let on_group = group.evaluate_with(&m)?;
    Ok((on_sphere, on_group))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ExactComplex;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn ex(re: i64) -> ExactComplex {
        ExactComplex::from_integers(re, 0)
    }

    #[test]
    fn laplacian_examples() {
        let e4 = FlatSignature::euclidean(4);
        let r = flat_laplacian(&e4.squared_norm(), &e4).unwrap();
        assert_eq!(r.as_const(), Some(c(8.0, 0.0)));

        let m = FlatSignature::minkowski();
        let r = flat_laplacian(&Expr::pow(&Expr::coord(0), 2), &m).unwrap();
        assert_eq!(r.as_const(), Some(c(-2.0, 0.0)));

        assert!(matches!(
            flat_laplacian(&Expr::coord(5), &e4),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            flat_laplacian(&Expr::coord(0), &e4),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn laplacian_of_inverse_square_matches_finite_differences() {
        let e2 = FlatSignature::euclidean(2);
        let f = Expr::one() / FlatSignature::euclidean(2).squared_norm();
        let lap = flat_laplacian(&f, &e2).unwrap();
        let eval = |e: &Expr, x: f64, y: f64| {
            e.evaluate_with(&[(Var::Coord(1), c(x, 0.0)), (Var::Coord(2), c(y, 0.0))])
                .unwrap()
                .re
        };
        for (x, y) in [(0.7, -0.4), (1.3, 0.2), (-0.5, -0.9)] {
            let h = 1e-3;
            let fd = (eval(&f, x + h, y) + eval(&f, x - h, y) + eval(&f, x, y + h) + eval(&f, x, y - h)
                - 4.0 * eval(&f, x, y))
                / (h * h);
            let got = eval(&lap, x, y);
            // closed form 4/|x|^4
            let r2: f64 = x * x + y * y;
            assert!((got - 4.0 / (r2 * r2)).abs() < 1e-10 * got.abs());
            assert!((got - fd).abs() < 1e-4 * got.abs());
        }
    }

    #[test]
    fn planar_spot_values() {
        let p = planar_iterated(1, 1).unwrap();
        assert_eq!(p.eval_computed(ex(1), ex(0)).unwrap(), ex(-4));
        assert_eq!(p.closed_form(ex(1), ex(0)).unwrap(), ex(-4));

        let p = planar_iterated(2, 2).unwrap();
        assert_eq!(p.eval_computed(ex(1), ex(0)).unwrap(), ex(192));
        assert_eq!(p.closed_form(ex(1), ex(0)).unwrap(), ex(192));

        let p = planar_iterated(1, 2).unwrap();
        let pt = (ExactComplex::from_ratios(3, 4, 0, 1), ExactComplex::from_ratios(-5, 2, 0, 1));
        assert!(p.eval_computed(pt.0.clone(), pt.1.clone()).unwrap().is_zero());
        assert!(p.closed_form(pt.0, pt.1).unwrap().is_zero());
    }

    #[test]
    fn planar_zero_iterate_is_the_function() {
        let p = planar_iterated(3, 0).unwrap();
        let v = p.eval_computed(ex(0), ex(1)).unwrap();
        // (i / -i)^3 = -1
        assert_eq!(v, ex(-1));
        assert_eq!(p.product_factor(), 1);
    }

    #[test]
    fn weighted_iterate_sphere_examples() {
        let q = vec![c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0)];
        let p = vec![c(0.0, 0.0), c(2.0, 0.0), c(1.0, 0.0), c(0.0, -1.0)];
        let sph = RadialExample::sphere(p, q).unwrap();
        assert_eq!(sph.qq(), c(0.0, 0.0));
        assert_ne!(sph.pq(), c(0.0, 0.0));
        let t1 = sph.iterated_tension(1).unwrap();
        let t2 = sph.iterated_tension(2).unwrap();
        let x: Vec<ExactComplex> = [3, -1, 2, 5]
            .iter()
            .map(|&k| ExactComplex::from_ratios(k, 4, 0, 1))
            .collect();
        assert_eq!(sph.eval(&t1, &x).unwrap(), sph.tension_closed_form(&x).unwrap());
        assert!(sph.eval(&t2, &x).unwrap().is_zero());
        assert_eq!(weighted_iterate(&sph.quotient(), &sph.weight(), &sph.sig, 0).unwrap().to_string(), sph.quotient().to_string());
    }

    #[test]
    fn weighted_iterate_hyperbolic_examples() {
        // (q, q)_L = -9 + 1 + 4 + 4 = 0
        let q: Vec<C> = [3.0, 1.0, 2.0, 2.0].iter().map(|&x| c(x, 0.0)).collect();
        let p = vec![c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0), c(1.0, 0.0)];
        let hyp = RadialExample::hyperbolic(p, q).unwrap();
        assert_eq!(hyp.qq(), c(0.0, 0.0));
        let x: Vec<ExactComplex> = [9, 1, -2, 3]
            .iter()
            .map(|&k| ExactComplex::from_ratios(k, 2, 0, 1))
            .collect();
        let t1 = hyp.iterated_tension(1).unwrap();
        assert_eq!(hyp.eval(&t1, &x).unwrap(), hyp.tension_closed_form(&x).unwrap());
        assert!(hyp.eval(&hyp.iterated_tension(2).unwrap(), &x).unwrap().is_zero());
    }

    #[test]
    fn su2_identification_examples() {
        let p = [c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0)];
        let q = [c(1.0, 0.0), c(0.0, -1.0), c(0.0, 0.0), c(0.0, 0.0)];
        let (a, b) = lift_check_su2(&p, &q, (c(1.0, 0.0), c(0.0, 0.0))).unwrap();
        assert_eq!((a, b), (c(1.0, 0.0), c(1.0, 0.0)));
        let (a, b) = lift_check_su2(&p, &q, (c(0.0, 1.0), c(0.0, 0.0))).unwrap();
        assert!((a - c(-1.0, 0.0)).norm() < 1e-15 && (b - c(-1.0, 0.0)).norm() < 1e-15);
        // with these p, q the group side is z11/z22
        let g = su2_group_quotient(&p, &q).unwrap();
        let m = [(Var::entry(1, 1), c(0.3, 0.4)), (Var::entry(2, 2), c(0.3, -0.4)),
                 (Var::entry(1, 2), c(0.1, 0.2)), (Var::entry(2, 1), c(-0.1, 0.2))];
        let v = g.evaluate_with(&m).unwrap();
        assert!((v - c(0.3, 0.4) / c(0.3, -0.4)).norm() < 1e-14);
    }

    #[test]
    fn bilinear_form_is_not_hermitian() {
        let e = FlatSignature::euclidean(4).form();
        let q = [c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0)];
        assert_eq!(e.pair(&q, &q).unwrap(), c(0.0, 0.0));
        assert!(e.pair(&q, &q[..2]).is_err());
        let m = FlatSignature::minkowski().form();
        assert_eq!(m.pair(&[c(1.0, 0.0); 4], &[c(1.0, 0.0); 4]).unwrap(), c(2.0, 0.0));
    }
}
