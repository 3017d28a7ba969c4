//! Metric data of one embedded simplex: L² products, Hodge star, codifferential,
//! normal traces and the integration-by-parts identity.

use nalgebra::DMatrix;

use super::form::{merge_sign, subsets, BarycentricForm, Frame, Term, Terms};
use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |a, k| a * k as f64)
}

fn multi_factorial(alpha: &[u32]) -> f64 {
    alpha.iter().map(|&a| factorial(a)).product()
}

/// Determinant of the `σ × τ` submatrix of `g`.
fn minor<T: Scalar>(g: &DMatrix<T>, sigma: &[usize], tau: &[usize]) -> T {
    let k = sigma.len();
    if k == 0 {
        return T::one();
    }
    DMatrix::from_fn(k, k, |i, j| g[(sigma[i], tau[j])]).determinant()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexGeometry<T: Scalar> {
    coords: Vec<Vec<T>>,
    dim: usize,
    volume: T,
    /// `⟨∇λ_i, ∇λ_j⟩`, `i, j = 0..=m`.
    grad_gram: DMatrix<T>,
    /// Orientation relative to the ascending vertex order.
    sign: i8,
}

impl<T: Scalar> SimplexGeometry<T> {
    pub fn new(coords: Vec<Vec<T>>, sign: i8) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::DegenerateSimplex(Vec::new()));
        }
        let m = coords.len() - 1;
        let n = coords[0].len();
        if m == 0 {
            return Ok(Self {
                coords,
                dim: 0,
                volume: T::one(),
                grad_gram: DMatrix::zeros(1, 1),
                sign,
            });
        }
        let e = DMatrix::from_fn(n, m, |i, j| coords[j + 1][i] - coords[0][i]);
        let g = e.transpose() * &e;
        let det = g.determinant();
        let scale = e.iter().fold(T::zero(), |a, x| a.max(x.abs()));
        if det <= lit::<T>(1e-24) * scale.powi(2 * m as i32) {
            return Err(Error::DegenerateSimplex((0..=m).collect()));
        }
        let volume = det.sqrt() / lit::<T>(factorial(m as u32));
        let inv = g.try_inverse().ok_or_else(|| Error::DegenerateSimplex((0..=m).collect()))?;
        let mut gg = DMatrix::zeros(m + 1, m + 1);
        for i in 0..m {
            for j in 0..m {
                gg[(i + 1, j + 1)] = inv[(i, j)];
            }
        }
        for i in 1..=m {
            let s = (1..=m).fold(T::zero(), |a, j| a + gg[(i, j)]);
            gg[(0, i)] = -s;
            gg[(i, 0)] = -s;
        }
        gg[(0, 0)] = (1..=m).fold(T::zero(), |a, i| a - gg[(0, i)]);
        Ok(Self { coords, dim: m, volume, grad_gram: gg, sign })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn volume(&self) -> T {
        self.volume
    }

    pub fn grad_gram(&self) -> &DMatrix<T> {
        &self.grad_gram
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn coords(&self) -> &[Vec<T>] {
        &self.coords
    }

    /// Geometry of the face with the given ascending vertex positions, positively oriented.
    pub fn face(&self, positions: &[usize]) -> Result<Self> {
        Self::new(positions.iter().map(|&p| self.coords[p].clone()).collect(), 1)
    }

    /// `∫_C λ^α`.
    pub fn integrate_monomial(&self, alpha: &[u32]) -> T {
        let a: u32 = alpha.iter().sum();
        let m = self.dim as u32;
        lit::<T>(multi_factorial(alpha) * factorial(m) / factorial(a + m)) * self.volume
    }

    /// Integral of a top-degree form over the oriented simplex.
    pub fn integrate(&self, form: &BarycentricForm<T>) -> Result<T> {
        if form.degree() != self.dim || form.dim() != self.dim {
            return Err(Error::DegreeMismatch(format!(
                "integrating a {}-form over a {}-simplex",
                form.degree(),
                self.dim
            )));
        }
        // ∫ λ^α dλ_1 ∧ … ∧ dλ_m = s α! / (|α| + m)!
        let m = self.dim as u32;
        let s = lit::<T>(self.sign as f64);
        Ok(form.terms().iter().fold(T::zero(), |acc, (t, &c)| {
            let a: u32 = t.alpha.iter().sum();
            acc + c * s * lit::<T>(multi_factorial(&t.alpha) / factorial(a + m))
        }))
    }

    fn term_product(&self, a: &Term, b: &Term) -> T {
        let alpha: Vec<u32> = a.alpha.iter().zip(&b.alpha).map(|(x, y)| x + y).collect();
        minor(&self.grad_gram, &a.sigma, &b.sigma) * self.integrate_monomial(&alpha)
    }

    /// L² inner product of two forms of equal degree.
    pub fn inner(&self, a: &BarycentricForm<T>, b: &BarycentricForm<T>) -> Result<T> {
        if a.degree() != b.degree() {
            return Err(Error::DegreeMismatch(format!("⟨{}-form, {}-form⟩", a.degree(), b.degree())));
        }
        if a.dim() != self.dim || b.dim() != self.dim {
            return Err(Error::Form("form does not live on this simplex".into()));
        }
        let mut s = T::zero();
        for (ta, &ca) in a.terms() {
            for (tb, &cb) in b.terms() {
                s += ca * cb * self.term_product(ta, tb);
            }
        }
        Ok(s)
    }

    /// L² Gram matrix of a frame (canonical or formal).
    pub fn frame_gram(&self, frame: &Frame) -> DMatrix<T> {
        let n = frame.len();
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.term_product(&frame.terms[i], &frame.terms[j]);
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    /// Hodge star, from `ω ∧ ⋆η = g(ω, η) vol`.
    pub fn star(&self, form: &BarycentricForm<T>) -> Result<BarycentricForm<T>> {
        if form.dim() != self.dim {
            return Err(Error::Form("form does not live on this simplex".into()));
        }
        let m = self.dim;
        let k = form.degree();
        let vol = lit::<T>(self.sign as f64 * factorial(m as u32)) * self.volume;
        let rhos = subsets(1, m, k);
        let mut out = Terms::new();
        for (t, &c) in form.terms() {
            for rho in &rhos {
                let comp: Vec<usize> = (1..=m).filter(|i| !rho.contains(i)).collect();
                let (_, sgn) = merge_sign(rho, &comp).expect("disjoint");
                let coef = c * minor(&self.grad_gram, rho, &t.sigma) * vol * lit::<T>(sgn as f64);
                if coef != T::zero() {
                    *out.entry(Term { alpha: t.alpha.clone(), sigma: comp }).or_insert(T::zero()) += coef;
                }
            }
        }
        BarycentricForm::from_terms(m, m - k, out)
    }

    /// Inverse Hodge star: `⋆⁻¹ = (-1)^{q(m-q)} ⋆` on `q`-forms.
    pub fn star_inv(&self, form: &BarycentricForm<T>) -> Result<BarycentricForm<T>> {
        let q = form.degree();
        let s = if (q * (self.dim - q)).is_multiple_of(2) { T::one() } else { -T::one() };
        Ok(self.star(form)?.scale(s))
    }

    /// `δ = (-1)^{m(k+1)+1} ⋆ d ⋆` on `k`-forms; zero for `k = 0`.
    pub fn codifferential(&self, form: &BarycentricForm<T>) -> Result<BarycentricForm<T>> {
        let k = form.degree();
        if k == 0 {
            return Ok(BarycentricForm::zero(self.dim, 0));
        }
        let m = self.dim;
        let s = if (m * (k + 1) + 1).is_multiple_of(2) { T::one() } else { -T::one() };
        Ok(self.star(&self.star(form)?.d())?.scale(s))
    }

    /// Normal trace `⋆_F⁻¹ tr_{C,F} ⋆_C` onto the face with ascending vertex positions `face`.
    pub fn normal_trace(&self, form: &BarycentricForm<T>, face: &[usize]) -> Result<BarycentricForm<T>> {
        let f = face.len() - 1;
        let k = form.degree();
        if f + k < self.dim {
            return Err(Error::DegreeMismatch(format!(
                "normal trace of a {k}-form onto a {f}-face of a {}-simplex",
                self.dim
            )));
        }
        let fg = self.face(face)?;
        let tr = self.star(form)?.trace(face)?;
        fg.star_inv(&tr)
    }

    /// Both sides of `∫ dω ∧ ⋆η − ∫ ω ∧ ⋆δη = Σ_F o(F,C) ∫_F tr ω ∧ ⋆_F nm η`.
    pub fn stokes_sides(&self, omega: &BarycentricForm<T>, eta: &BarycentricForm<T>) -> Result<(T, T)> {
        let k = omega.degree();
        if eta.degree() != k + 1 || k + 1 > self.dim {
            return Err(Error::DegreeMismatch("stokes needs a k-form and a (k+1)-form".into()));
        }
        let lhs = self.integrate(&omega.d().wedge(&self.star(eta)?)?)?
            - self.integrate(&omega.wedge(&self.star(&self.codifferential(eta)?)?)?)?;
        let m = self.dim;
        let mut rhs = T::zero();
        for j in 0..=m {
            let face: Vec<usize> = (0..=m).filter(|&p| p != j).collect();
            let fg = self.face(&face)?;
            let o = if j % 2 == 0 { 1.0 } else { -1.0 } * self.sign as f64;
            let integrand = omega.trace(&face)?.wedge(&fg.star(&self.normal_trace(eta, &face)?)?)?;
            rhs += lit::<T>(o) * fg.integrate(&integrand)?;
        }
        Ok((lhs, rhs))
    }

    /// `|LHS − RHS|` of the integration-by-parts identity.
    pub fn stokes_residual(&self, omega: &BarycentricForm<T>, eta: &BarycentricForm<T>) -> Result<T> {
        let (l, r) = self.stokes_sides(omega, eta)?;
        Ok((l - r).abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type F = BarycentricForm<f64>;

    fn unit_triangle() -> SimplexGeometry<f64> {
        SimplexGeometry::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]], 1).unwrap()
    }

    #[test]
    fn integrals_on_unit_triangle() {
        let g = unit_triangle();
        assert!((g.volume() - 0.5).abs() < 1e-15);
        assert!((g.integrate_monomial(&[1, 0, 0]) - 0.5 / 3.0).abs() < 1e-15);
        let l0 = F::lambda(2, 0);
        assert!((g.inner(&l0, &l0).unwrap() - 1.0 / 12.0).abs() < 1e-15);
        let d1 = F::dlambda(2, 1);
        let d2 = F::dlambda(2, 2);
        assert!(g.inner(&d1, &d2).unwrap().abs() < 1e-15);
        assert!((g.inner(&d1, &d1).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn star_of_one_and_volume() {
        let g = unit_triangle();
        let vol = g.star(&F::constant(2, 1.0)).unwrap();
        assert!((g.integrate(&vol).unwrap() - 0.5).abs() < 1e-15);
        let one = g.star(&vol).unwrap();
        assert!(one.distance(&F::constant(2, 1.0)).unwrap() < 1e-14);
    }

    #[test]
    fn degenerate_is_rejected() {
        assert!(SimplexGeometry::new(vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]], 1).is_err());
    }

    #[test]
    fn gradient_gram_has_constant_kernel() {
        let g = SimplexGeometry::new(
            vec![vec![0.1, 0.0, 0.3], vec![1.0, 0.2, 0.0], vec![0.0, 1.3, 0.5]],
            1,
        )
        .unwrap();
        let ones = nalgebra::DVector::from_element(3, 1.0);
        assert!((g.grad_gram() * ones).norm() < 1e-12);
    }

    #[test]
    fn stokes_simple_pair() {
        let g = unit_triangle();
        let (l, r) = g.stokes_sides(&F::lambda(2, 0), &F::dlambda(2, 1)).unwrap();
        assert!((l - r).abs() < 1e-14, "{l} {r}");
    }

    #[test]
    fn normal_trace_of_volume_form() {
        let g = unit_triangle();
        let vol = g.star(&F::constant(2, 1.0)).unwrap();
        // ⋆vol = 1, its trace is 1, and ⋆_F⁻¹ 1 is the volume form of the face
        let nm = g.normal_trace(&vol, &[1, 2]).unwrap();
        let fg = g.face(&[1, 2]).unwrap();
        assert!((fg.integrate(&nm).unwrap() - fg.volume()).abs() < 1e-14);
    }
}
