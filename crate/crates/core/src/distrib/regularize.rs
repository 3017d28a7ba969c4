//! Right-inverses of `D` and `T`, the regularizers `R_{k,b}` and `S_{m,b}`, the
//! transfer maps between consecutive harmonic spaces and the preimage witness.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Context, FamilySpec};
use crate::assembly::{Component, FormSpace, LinearOp};
use crate::error::{Error, Result};
use crate::linalg::{null_space, projection_residual, singular_values, spectral_norm, RANK_RTOL};
use crate::scalar::Scalar;

/// A transfer map counts as bijective when `σ_min / σ_max` exceeds this.
pub const BIJECTIVITY_RTOL: f64 = 1e-6;

/// Bound on the relative residuals of a regularizer check.
pub const REGULARIZER_TOL: f64 = 1e-10;

/// Residual bound for the pairing and image checks of a transfer map.
const TRANSFER_TOL: f64 = 1e-8;

/// `Trace`: right-inverse `E^m_k` of `T^m_k`; `Derivative`: right-inverse `P^m_k` of `D^m_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InverseKind {
    Trace,
    Derivative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Steps between `𝔥^k_{-b+1}(𝒯^n)` and `𝔥^k_{-b}(𝒯^n)`.
    Lambda,
    /// Steps between `ℭ^0_{-b+1}(𝒯^m)` and `ℭ^0_{-b}(𝒯^m)`.
    Gamma,
    /// Projection of `𝔥^k_{-2}(𝒯^n)` onto the conforming forms on the `(n-1)`-stratum.
    Skeleton,
}

/// Numbers behind one transfer map between harmonic spaces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsoReport {
    pub label: String,
    pub side: Side,
    pub index: usize,
    pub b: usize,
    pub source_dim: usize,
    pub target_dim: usize,
    /// `σ_min / σ_max` of the basis-to-basis matrix (1 for empty spaces, 0 if not square).
    pub sigma_min_rel: f64,
    /// `max |⟨p_i, X p_j⟩ - δ_ij|` over the source basis, where applicable.
    pub pairing_residual: Option<f64>,
    /// Relative distance of the image from the target harmonic space.
    pub image_residual: f64,
    pub projected: bool,
    pub bijective: bool,
    pub pass: bool,
}

/// A transfer map together with its report.
#[derive(Debug, Clone)]
pub struct IsoStep<T: Scalar> {
    pub map: LinearOp<T>,
    pub report: IsoReport,
}

/// Outcome of the explicit preimage construction for closed forms of `Λ^k_{-b+1}(𝒯^n)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport {
    pub k: usize,
    pub b: usize,
    pub forms: usize,
    /// `max |⟨dξ, ω⟩ - ‖ω‖²| / ‖ω‖²` over the tested forms.
    pub residual: f64,
    pub pass: bool,
}

/// Residuals of a regularizer on a batch of admissible forms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularizerCheck {
    pub side: Side,
    pub index: usize,
    pub b: usize,
    pub forms: usize,
    /// `max ‖(Rω)^{b-1}‖ / ‖ω‖`: what is left on the deepest stratum.
    pub deepest: f64,
    /// `max ‖d(Rω - ω)‖ / (‖d‖ ‖ω‖)`; normwise, since `dω` itself may vanish.
    pub derivative: f64,
    pub pass: bool,
}

fn alt<T: Scalar>(e: usize) -> T {
    if e.is_multiple_of(2) {
        T::one()
    } else {
        -T::one()
    }
}

fn relative_sigma<T: Scalar>(m: &DMatrix<T>) -> f64 {
    if m.nrows() != m.ncols() {
        return 0.0;
    }
    if m.nrows() == 0 {
        return 1.0;
    }
    let sv = singular_values(m);
    let max = sv.iter().copied().fold(T::zero(), |a, b| a.max(b));
    let min = sv.iter().copied().fold(max, |a, b| a.min(b));
    if max == T::zero() {
        0.0
    } else {
        (min / max).as_f64()
    }
}

/// Rows of component `c` as a selection matrix `len × dim`.
fn selector<T: Scalar>(space: &FormSpace<T>, c: Component) -> Result<DMatrix<T>> {
    let amb = space.ambient();
    let r = amb
        .range(c)
        .ok_or_else(|| Error::DegreeMismatch(format!("component ({},{}) not in {}", c.stratum, c.degree, space.label())))?;
    let mut s = DMatrix::zeros(r.len(), amb.dim());
    for (i, j) in r.enumerate() {
        s[(i, j)] = T::one();
    }
    Ok(s)
}

impl<T: Scalar> Context<T> {
    /// The operator a right-inverse of `kind` inverts.
    pub fn invertee(&self, kind: InverseKind, m: usize, k: usize) -> Result<LinearOp<T>> {
        match kind {
            InverseKind::Trace => self.assembler().op_t(m, k),
            InverseKind::Derivative => self.assembler().op_d(m, k),
        }
    }

    /// Right-inverse `E^m_k` or `P^m_k` (cached), as a matrix between component coordinates.
    pub fn right_inverse(&self, kind: InverseKind, m: usize, k: usize) -> Result<Arc<DMatrix<T>>> {
        if let Some(x) = self.inverses.lock().expect("cache").get(&(kind, m, k)) {
            return Ok(x.clone());
        }
        let op = self.invertee(kind, m, k)?;
        let x = (self.right_inverse)(&op);
        if x.shape() != (op.matrix().ncols(), op.matrix().nrows()) {
            return Err(Error::DegreeMismatch(format!("right-inverse of shape {:?}", x.shape())));
        }
        let x = Arc::new(x);
        self.inverses.lock().expect("cache").insert((kind, m, k), x.clone());
        Ok(x)
    }

    /// `‖A X A - A‖ / ‖A‖` in orthonormal frames, for `X` the right-inverse of `A`.
    pub fn inverse_contract_residual(&self, kind: InverseKind, m: usize, k: usize) -> Result<f64> {
        let a = self.invertee(kind, m, k)?;
        let x = self.right_inverse(kind, m, k)?;
        let axa = a.matrix() * &*x * a.matrix() - a.matrix();
        let r = LinearOp::new(a.domain().clone(), a.codomain().clone(), axa)?;
        let an = a.fro_norm();
        Ok(if an == T::zero() { r.fro_norm().as_f64() } else { (r.fro_norm() / an).as_f64() })
    }

    /// `R_{k,b} ω = ω - (-1)^{b+1} d E ω^{b-1}` on `Λ^k_{-b}(𝒯^n)`, `2 ≤ b ≤ k+1`,
    /// where `ω^{b-1}` is the component on stratum `n-b+1`.
    pub fn regularizer_r(&self, k: usize, b: usize) -> Result<LinearOp<T>> {
        let n = self.top_dim();
        if b < 2 || b > k + 1 || k > n {
            return Err(Error::OutOfRange(format!("regularizer R at k={k}, b={b}")));
        }
        let dom = self.lambda(k, b)?;
        let src = self.lambda(k - 1, b - 1)?;
        let d = self.assembler().d_between(&src, &dom)?;
        let deep = Component::new(n + 1 - b, k + 1 - b);
        let lift = Component::new(n + 2 - b, k + 1 - b);
        let e = self.right_inverse(InverseKind::Trace, lift.stratum, lift.degree)?;
        let correction = d.matrix() * selector(&src, lift)?.transpose() * &*e * selector(&dom, deep)?;
        let id = DMatrix::identity(dom.dim(), dom.dim());
        LinearOp::new(dom.clone(), dom, id - correction * alt::<T>(b + 1))
    }

    /// `S_{m,b} ω = ω + (-1)^{b+n-m} d P ω^{b-1}` on `Γ^0_{-b}(𝒯^m)`, `2 ≤ b ≤ n-m+1`,
    /// where `ω^{b-1}` is the component on stratum `m+b-1` and `P` inverts `D^{m+b-1}_{b-2}`.
    pub fn regularizer_s(&self, m: usize, b: usize) -> Result<LinearOp<T>> {
        let n = self.top_dim();
        if b < 2 || m > n || b > n - m + 1 {
            return Err(Error::OutOfRange(format!("regularizer S at m={m}, b={b}")));
        }
        let dom = self.gamma(m, 0, b)?;
        let src = self.gamma(m + 1, 0, b - 1)?;
        let d = self.assembler().d_between(&src, &dom)?;
        let deep = Component::new(m + b - 1, b - 1);
        let lift = Component::new(m + b - 1, b - 2);
        let p = self.right_inverse(InverseKind::Derivative, lift.stratum, lift.degree)?;
        let correction = d.matrix() * selector(&src, lift)?.transpose() * &*p * selector(&dom, deep)?;
        let id = DMatrix::identity(dom.dim(), dom.dim());
        LinearOp::new(dom.clone(), dom, id + correction * alt::<T>(b + n - m))
    }

    fn harmonic_spec(&self, side: Side, index: usize, b: usize) -> Result<(FamilySpec, usize)> {
        let n = self.top_dim();
        Ok(match side {
            Side::Lambda if b == 0 => (FamilySpec::Conforming { m: n }, index),
            Side::Lambda => (FamilySpec::RedirectedLambda { k0: (index + 1).checked_sub(b).ok_or_else(|| Error::OutOfRange(format!("b={b} at k={index}")))? }, index),
            Side::Gamma if b == 0 => (FamilySpec::Chainlike { k: 0 }, n - index),
            Side::Gamma => (FamilySpec::RedirectedGamma { m0: index + b - 1 }, n - index),
            Side::Skeleton => return Err(Error::InvalidParams("no graded family on the skeleton side".into())),
        })
    }

    /// `R_{k,b}` or `S_{m,b}`.
    pub fn regularizer(&self, side: Side, index: usize, b: usize) -> Result<LinearOp<T>> {
        match side {
            Side::Lambda => self.regularizer_r(index, b),
            Side::Gamma => self.regularizer_s(index, b),
            Side::Skeleton => Err(Error::InvalidParams("no regularizer on the skeleton side".into())),
        }
    }

    /// `d` from `dom` into the broken space holding all of its graded parts.
    fn full_derivative(&self, dom: &FormSpace<T>) -> Result<LinearOp<T>> {
        let mut comps = Vec::new();
        for c in dom.ambient().components() {
            if c.degree < c.stratum {
                comps.push(Component::new(c.stratum, c.degree + 1));
            }
            if c.stratum >= 1 && c.degree < c.stratum {
                comps.push(Component::new(c.stratum - 1, c.degree));
            }
        }
        if comps.is_empty() {
            // top-degree forms everywhere: nothing to differentiate into
            let cod = FormSpace::Broken(self.assembler().space(dom.ambient().components())?);
            return Ok(LinearOp::zero(dom.clone(), cod));
        }
        let cod = FormSpace::Broken(self.assembler().space(&comps)?);
        self.assembler().d_between(dom, &cod)
    }

    /// Deepest stratum of the regularizer's domain, and the component of `dω` that
    /// must vanish for the regularizer to preserve `d` (none below the vertices).
    fn regularizer_strata(&self, side: Side, index: usize, b: usize) -> (Component, Option<Component>) {
        let n = self.top_dim();
        match side {
            Side::Gamma => (Component::new(index + b - 1, b - 1), Some(Component::new(index + b - 1, b))),
            _ => (
                Component::new(n + 1 - b, index + 1 - b),
                (n - 1).checked_sub(b - 1).map(|s| Component::new(s, index + 1 - b)),
            ),
        }
    }

    /// Basis (columns) of the forms on which the regularizer preserves `d`: those whose
    /// derivative has no part on the stratum below the deepest one (for `R`), or no
    /// `D`-part on the deepest stratum (for `S`). With `closed`, only cocycles (`dω = 0`).
    pub fn admissible_forms(&self, side: Side, index: usize, b: usize, closed: bool) -> Result<DMatrix<T>> {
        let reg = self.regularizer(side, index, b)?;
        let dom = reg.domain().clone();
        let d = self.full_derivative(&dom)?;
        if closed {
            return Ok(if d.matrix().nrows() == 0 { DMatrix::identity(dom.dim(), dom.dim()) } else { null_space(d.matrix(), RANK_RTOL) });
        }
        let (_, forbidden) = self.regularizer_strata(side, index, b);
        match forbidden.and_then(|c| d.codomain().ambient().range(c)) {
            Some(r) if !r.is_empty() => Ok(null_space(&d.matrix().rows(r.start, r.len()).into_owned(), RANK_RTOL)),
            _ => Ok(DMatrix::identity(dom.dim(), dom.dim())),
        }
    }

    /// Apply the regularizer to admissible `omega` (columns) and measure the deepest
    /// component left over and the change in `d`.
    pub fn check_regularizer(&self, side: Side, index: usize, b: usize, omega: &DMatrix<T>) -> Result<RegularizerCheck> {
        let reg = self.regularizer(side, index, b)?;
        let dom = reg.domain();
        let d = self.full_derivative(dom)?;
        let (deep, _) = self.regularizer_strata(side, index, b);
        let amb = dom.ambient();
        let y = reg.apply(omega);
        let diff = d.apply(&(&y - omega));
        let dnorm = spectral_norm(&d.whitened()).as_f64();
        let (mut deepest, mut derivative) = (0.0f64, 0.0f64);
        for j in 0..omega.ncols() {
            let w = omega.column(j).into_owned();
            let wn = dom.norm(&DMatrix::from_column_slice(w.len(), 1, w.as_slice())).as_f64();
            if wn == 0.0 {
                continue;
            }
            let yj = DMatrix::from_column_slice(y.nrows(), 1, y.column(j).as_slice());
            let left = amb.embed(&amb.extract(&yj, deep), deep)?;
            deepest = deepest.max(amb.norm(&left).as_f64() / wn);
            let cod = d.codomain();
            let col = |m: &DMatrix<T>| DMatrix::from_column_slice(m.nrows(), 1, m.column(j).as_slice());
            let rn = cod.norm(&col(&diff)).as_f64();
            if dnorm > 0.0 {
                derivative = derivative.max(rn / (dnorm * wn));
            }
        }
        let pass = deepest < T::tol(REGULARIZER_TOL) && derivative < T::tol(REGULARIZER_TOL);
        Ok(RegularizerCheck { side, index, b, forms: omega.ncols(), deepest, derivative, pass })
    }

    /// Transfer map `Q R*` (or `Q S*`) from the harmonic space at grading `b-1` to
    /// the one at grading `b`. Without projection, `Q` is omitted and only the
    /// surjectivity of the induced map onto the target harmonic space is meaningful.
    pub fn iso_step(&self, side: Side, index: usize, b: usize, project: bool) -> Result<IsoStep<T>> {
        let n = self.top_dim();
        let (reg, label) = match side {
            Side::Lambda => (self.regularizer_r(index, b)?, format!("h^{index}_-{} -> h^{index}_-{b}", b - 1)),
            Side::Gamma => (self.regularizer_s(index, b)?, format!("C^0_-{}(T^{index}) -> C^0_-{b}(T^{index})", b - 1)),
            Side::Skeleton => return Err(Error::InvalidParams("use skeleton_projection".into())),
        };
        let (src_spec, src_pos) = self.harmonic_spec(side, index, b - 1)?;
        let (tgt_spec, tgt_pos) = self.harmonic_spec(side, index, b)?;
        let src_cx = self.build(src_spec)?;
        let tgt_cx = self.build(tgt_spec)?;
        let (src, hs) = (src_cx.space(src_pos).clone(), src_cx.harmonic_space(src_pos));
        let (tgt, ht) = (tgt_cx.space(tgt_pos).clone(), tgt_cx.harmonic_space(tgt_pos));
        debug_assert!(n >= index);

        let iota = LinearOp::inclusion(&src, &tgt)?;
        let p = iota.matrix() * &hs;
        let y = reg.adjoint().matrix() * &p;
        let x = match (project, tgt_cx.diff(tgt_pos)) {
            (true, Some(next)) => {
                let nb = null_space(&next.whitened(), RANK_RTOL);
                tgt.unwhiten(&(&nb * (nb.transpose() * tgt.whiten(&y))))
            }
            _ => y,
        };
        let m = tgt.inner(&ht, &x);
        let pairing = tgt.inner(&p, &x) - DMatrix::identity(hs.ncols(), hs.ncols());
        let pairing = pairing.iter().fold(0.0f64, |a, v| a.max(v.as_f64().abs()));
        let image = projection_residual(&x, &ht, &tgt.gram()).as_f64();
        let map = LinearOp::new(
            FormSpace::Sub(self.harmonic_subspace(src_spec, src_pos)?),
            FormSpace::Sub(self.harmonic_subspace(tgt_spec, tgt_pos)?),
            m,
        )?;
        let report = transfer_report(label, side, index, b, map.matrix(), Some(pairing), image, project);
        Ok(IsoStep { map, report })
    }

    /// Orthogonal projection of `𝔥^k_{-2}(𝒯^n)` onto the closed conforming `(k-1)`-forms
    /// on the `(n-1)`-stratum, compared with `𝔥^{k-1}(𝒯^{n-1})`. Uses this context's metric
    /// on the `(n-1)`-stratum for both the projection and the target harmonic space.
    pub fn skeleton_projection(&self, k: usize) -> Result<IsoStep<T>> {
        let n = self.top_dim();
        if k < 2 || k > n {
            return Err(Error::OutOfRange(format!("skeleton projection at k={k} on a {n}-dimensional pair")));
        }
        let (src_spec, src_pos) = self.harmonic_spec(Side::Lambda, k, 2)?;
        let src_cx = self.build(src_spec)?;
        let (src, hs) = (src_cx.space(src_pos).clone(), src_cx.harmonic_space(src_pos));
        let tgt_spec = FamilySpec::Conforming { m: n - 1 };
        let tgt_cx = self.build(tgt_spec)?;
        let tgt = tgt_cx.space(k - 1).clone();
        let ht = tgt_cx.harmonic_space(k - 1);
        let c = Component::new(n - 1, k - 1);
        let y = selector(&src, c)? * src.to_ambient() * &hs;
        let basis = tgt.to_ambient();
        let coords = basis.transpose() * tgt.ambient().gram() * &y;
        let x = match tgt_cx.diff(k - 1) {
            Some(d) => {
                let nb = null_space(&d.whitened(), RANK_RTOL);
                &nb * (nb.transpose() * &coords)
            }
            None => coords,
        };
        let m = tgt.inner(&ht, &x);
        let image = projection_residual(&x, &ht, &tgt.gram()).as_f64();
        let map = LinearOp::new(
            FormSpace::Sub(self.harmonic_subspace(src_spec, src_pos)?),
            FormSpace::Sub(self.harmonic_subspace(tgt_spec, k - 1)?),
            m,
        )?;
        let label = format!("h^{k}_-2(T^{n}) -> h^{}(T^{})", k - 1, n - 1);
        let report = transfer_report(label, Side::Skeleton, k, 2, map.matrix(), None, image, true);
        Ok(IsoStep { map, report })
    }

    /// Construct `ξ ∈ Λ^{k-1}_{-b+1}(𝒯^n)` with `⟨dξ, ω⟩ = ‖ω‖²` for a closed
    /// `ω ∈ Λ^k_{-b+1}(𝒯^n)` (columns of `omega`), `2 ≤ b ≤ k+1`.
    pub fn preimage_witness(&self, k: usize, b: usize, omega: &DMatrix<T>) -> Result<(DMatrix<T>, Vec<f64>)> {
        let n = self.top_dim();
        if b < 2 || b > k + 1 || k > n {
            return Err(Error::OutOfRange(format!("witness at k={k}, b={b}")));
        }
        let w_space = self.lambda(k, b - 1)?;
        let xi_space = self.lambda(k - 1, b - 1)?;
        let big = self.lambda(k, b)?;
        let w_amb = w_space.ambient();
        let xi_amb = xi_space.ambient();
        let mut xi = DMatrix::zeros(xi_amb.dim(), omega.ncols());
        let mut prev: Option<DMatrix<T>> = None;
        for j in 0..b - 1 {
            let wj = w_amb.extract(omega, Component::new(n - j, k - j));
            let rhs = match &prev {
                None => wj,
                Some(p) => {
                    let t = self.assembler().t_matrix(n - j + 1, k - j)?;
                    wj - &*t * p * alt::<T>(j)
                }
            };
            let pj = self.right_inverse(InverseKind::Derivative, n - j, k - j - 1)?;
            let xj = &*pj * rhs * alt::<T>(j);
            let c = Component::new(n - j, k - j - 1);
            let r = xi_amb.range(c).expect("component of the preimage space");
            xi.rows_mut(r.start, r.len()).copy_from(&xj);
            prev = Some(xj);
        }
        let dxi = self.assembler().d_between(&xi_space, &big)?.apply(&xi);
        let iw = LinearOp::inclusion(&w_space, &big)?.apply(omega);
        let pair = big.inner(&dxi, &iw);
        let norms = w_space.inner(omega, omega);
        let res = (0..omega.ncols())
            .map(|j| {
                let nn = norms[(j, j)];
                let diff = (pair[(j, j)] - nn).abs();
                if nn == T::zero() {
                    diff.as_f64()
                } else {
                    (diff / nn).as_f64()
                }
            })
            .collect();
        Ok((xi, res))
    }

    /// Run [`Context::preimage_witness`] on a basis of `𝔥^k_{-b+1}(𝒯^n)`.
    pub fn witness_check(&self, k: usize, b: usize) -> Result<WitnessReport> {
        let (_, h) = self.lambda_harmonic(k, b - 1)?;
        let (_, res) = self.preimage_witness(k, b, &h)?;
        let residual = res.iter().copied().fold(0.0, f64::max);
        Ok(WitnessReport { k, b, forms: h.ncols(), residual, pass: residual < T::tol(TRANSFER_TOL) })
    }
}

#[allow(clippy::too_many_arguments)]
fn transfer_report<T: Scalar>(
    label: String,
    side: Side,
    index: usize,
    b: usize,
    m: &DMatrix<T>,
    pairing: Option<f64>,
    image: f64,
    projected: bool,
) -> IsoReport {
    let sigma = relative_sigma(m);
    let bijective = m.nrows() == m.ncols() && sigma > BIJECTIVITY_RTOL;
    let pass = bijective
        && pairing.is_none_or(|p| p < T::tol(TRANSFER_TOL))
        && (!projected || image < T::tol(TRANSFER_TOL))
        && m.iter().all(|v| v.is_finite());
    IsoReport {
        label,
        side,
        index,
        b,
        source_dim: m.ncols(),
        target_dim: m.nrows(),
        sigma_min_rel: sigma,
        pairing_residual: pairing,
        image_residual: image,
        projected,
        bijective,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::Metric;
    use crate::mesh::catalog::{generate, MarkMode};
    use crate::polyforms::Family;

    fn ctx(key: &str, mode: MarkMode) -> Context<f64> {
        Context::new(generate(key, mode).unwrap(), &Family::whitney(), Metric::Weighted).unwrap()
    }

    #[test]
    fn regularizer_fixes_forms_without_deepest_part() {
        let c = ctx("square_grid(2)", MarkMode::Half);
        let r = c.regularizer_r(2, 2).unwrap();
        let dom = c.lambda(2, 2).unwrap();
        let amb = dom.ambient();
        let top = Component::new(2, 2);
        let y = DMatrix::from_fn(amb.range(top).unwrap().len(), 1, |i, _| 1.0 + i as f64);
        let x = amb.embed(&y, top).unwrap();
        assert!((r.apply(&x) - &x).norm() < 1e-12);
    }

    #[test]
    fn square_top_degree_step_is_bijective() {
        let c = ctx("square_grid(2)", MarkMode::None);
        let step = c.iso_step(Side::Lambda, 2, 2, true).unwrap();
        assert_eq!((step.report.source_dim, step.report.target_dim), (1, 1));
        assert!(step.report.pass, "{:?}", step.report);
        // relative to the whole boundary, b_0 = 0
        let full = ctx("square_grid(2)", MarkMode::Full).iso_step(Side::Lambda, 2, 2, true).unwrap();
        assert_eq!((full.report.source_dim, full.report.target_dim), (0, 0));
    }

    #[test]
    fn regularizers_remove_deepest_part_and_keep_d() {
        let c = ctx("square_grid(2)", MarkMode::Half);
        for (side, index, b) in [(Side::Lambda, 1, 2), (Side::Lambda, 2, 2), (Side::Lambda, 2, 3), (Side::Gamma, 0, 2), (Side::Gamma, 0, 3), (Side::Gamma, 1, 2)] {
            for closed in [false, true] {
                let basis = c.admissible_forms(side, index, b, closed).unwrap();
                let w = DMatrix::from_fn(basis.ncols(), 2, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
                let r = c.check_regularizer(side, index, b, &(&basis * w)).unwrap();
                assert!(r.pass, "{r:?}");
            }
        }
    }

    #[test]
    fn ring_skeleton_projection_is_bijective() {
        let c = ctx("solid_ring(1)", MarkMode::None);
        let step = c.skeleton_projection(2).unwrap();
        assert_eq!((step.report.source_dim, step.report.target_dim), (1, 1));
        assert!(step.report.pass, "{:?}", step.report);
    }

    #[test]
    fn preimage_witness_pairs_to_norm() {
        let c = ctx("annulus(1)", MarkMode::Full);
        for (k, b) in [(1, 2), (2, 2), (2, 3)] {
            let w = c.witness_check(k, b).unwrap();
            assert!(w.pass, "{w:?}");
        }
        assert_eq!(c.witness_check(1, 2).unwrap().forms, 1);
    }

    #[test]
    fn empty_harmonic_spaces_give_trivial_steps() {
        let c = ctx("triangle", MarkMode::Half);
        let step = c.iso_step(Side::Lambda, 1, 2, true).unwrap();
        assert_eq!(step.report.source_dim, 0);
        assert!(step.report.bijective && step.report.pass);
    }

    #[test]
    fn out_of_range_gradings_are_rejected() {
        let c = ctx("square_grid(1)", MarkMode::None);
        assert!(c.regularizer_r(1, 3).is_err());
        assert!(c.regularizer_s(2, 2).is_err());
        assert!(c.skeleton_projection(1).is_err());
    }
}
