//! End-to-end checks: the chain of harmonic-space isomorphisms from the chain-like
//! complexes to the conforming complex, exactness of the rows and columns of the
//! double complex, the skeleton relations and metric independence of dimensions.

use nalgebra::DMatrix;
use serde::Serialize;

use super::{Context, FamilySpec, IsoReport, Side};
use crate::assembly::{FormSpace, LinearOp, Metric, Which};
use crate::error::{Error, Result};
use crate::linalg::{rank, subspace_distance, RANK_RTOL};
use crate::scalar::Scalar;

/// Bound on the sine of the largest principal angle for subspace equalities.
pub const SUBSPACE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainSpace {
    pub label: String,
    pub dim: usize,
}

/// Every space in the chain `ℭ^0(𝒯^{n-k}) … 𝔥^k(𝒯^n)` and every step between them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainReport {
    pub k: usize,
    /// `b_{n-k}(𝒯, 𝒰)`.
    pub betti: usize,
    pub spaces: Vec<ChainSpace>,
    pub steps: Vec<IsoReport>,
    /// `ℭ^0_{-k-1}(𝒯^{n-k})` and `𝔥^k_{-k-1}(𝒯^n)` are the same space with the same basis.
    pub middle_identical: bool,
    /// Principal-angle gap between `𝔥^k(𝒯^n)` and `𝔥^k_{-1}(𝒯^n)`.
    pub conforming_gap: f64,
    /// Principal-angle gap between `ℭ^0(𝒯^{n-k})` and `ℭ^0_{-1}(𝒯^{n-k})`.
    pub chain_gap: f64,
    pub dims_match: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExactnessLine {
    /// `row` (fixed stratum, `D`) or `column` (fixed degree, `T`).
    pub sequence: String,
    pub fixed: usize,
    pub position: usize,
    pub kernel: usize,
    pub image: usize,
    pub exact: bool,
}

/// `dim ker D^m_0` against the number of active `m`-simplices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndicatorLine {
    pub m: usize,
    pub kernel: usize,
    pub simplices: usize,
    pub pass: bool,
}

/// `dim 𝔥^k(𝒯^n)`, `dim ℭ^0(𝒯^{n-k})` and `b_{n-k}(𝒯, 𝒰)`; `None` when the
/// complex could not be assembled (e.g. `d` leaks out of a kernel space).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TopologyLine {
    pub k: usize,
    pub conforming: Option<usize>,
    pub chainlike: Option<usize>,
    pub betti: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DoubleComplexReport {
    pub rows: Vec<ExactnessLine>,
    pub columns: Vec<ExactnessLine>,
    pub indicators: Vec<IndicatorLine>,
    pub topology: Vec<TopologyLine>,
    pub pass: bool,
}

impl DoubleComplexReport {
    pub fn failures(&self) -> impl Iterator<Item = &ExactnessLine> {
        self.rows.iter().chain(&self.columns).filter(|l| !l.exact)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComplexHarmonics {
    pub family: String,
    pub space_dims: Vec<usize>,
    pub harmonic_dims: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicReport {
    pub complexes: Vec<ComplexHarmonics>,
    /// `(k, b, dim 𝔥^k_{-b}(𝒯^n))` for `0 ≤ b ≤ k+1`.
    pub lambda: Vec<(usize, usize, usize)>,
    /// `(m, b, dim ℭ^0_{-b}(𝒯^m))` for `0 ≤ b ≤ n-m+1`.
    pub gamma: Vec<(usize, usize, usize)>,
    /// Largest `‖HᵀGH - I‖` over all harmonic bases.
    pub orthonormality_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MetricReport {
    pub entries: Vec<(String, Vec<usize>, Vec<usize>)>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NestingReport {
    pub k0: usize,
    pub residual: f64,
    pub pass: bool,
}

/// Degree-0 harmonic space on the `m`-skeleton against `ℭ^0(𝒯^m) ⊕ T Γ^0(𝒯^{m+1})`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkeletonZeroLine {
    pub m: usize,
    pub skeleton: usize,
    pub chainlike: usize,
    pub trace_rank: usize,
    pub pass: bool,
}

fn whitened_rank<T: Scalar>(op: &LinearOp<T>) -> usize {
    let w = op.whitened();
    if w.is_empty() {
        0
    } else {
        rank(&w, RANK_RTOL)
    }
}

/// Harmonic dimension, or `None` if assembly failed verification.
fn assembled<T: Scalar>(r: Result<(FormSpace<T>, DMatrix<T>)>) -> Result<Option<usize>> {
    match r {
        Ok((_, h)) => Ok(Some(h.ncols())),
        Err(Error::Verification(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

impl<T: Scalar> Context<T> {
    /// All spaces and steps of the isomorphism chain at degree `k`.
    pub fn verify_chain(&self, k: usize) -> Result<ChainReport> {
        let n = self.top_dim();
        let m = n - k;
        let betti = self.pair().betti_numbers()[m];
        let mut spaces = Vec::new();
        let mut steps = Vec::new();

        let (c0_space, c0) = self.gamma_harmonic(m, 0)?;
        spaces.push(ChainSpace { label: format!("C^0(T^{m})"), dim: c0.ncols() });
        for b in 1..=k + 1 {
            let (_, h) = self.gamma_harmonic(m, b)?;
            spaces.push(ChainSpace { label: format!("C^0_-{b}(T^{m})"), dim: h.ncols() });
            if b >= 2 {
                steps.push(self.iso_step(Side::Gamma, m, b, true)?.report);
            }
        }
        for b in (1..=k + 1).rev() {
            let (_, h) = self.lambda_harmonic(k, b)?;
            spaces.push(ChainSpace { label: format!("h^{k}_-{b}(T^{n})"), dim: h.ncols() });
        }
        for b in (2..=k + 1).rev() {
            steps.push(self.iso_step(Side::Lambda, k, b, true)?.report);
        }
        let (hk_space, hk) = self.lambda_harmonic(k, 0)?;
        spaces.push(ChainSpace { label: format!("h^{k}(T^{n})"), dim: hk.ncols() });

        let (gs, gh) = self.gamma_harmonic(m, k + 1)?;
        let (ls, lh) = self.lambda_harmonic(k, k + 1)?;
        let middle_identical = gs.same_as(&ls) && gh == lh;

        let conforming_gap = self.gap(&hk_space, &hk, k, 1, Side::Lambda)?;
        let chain_gap = self.gap(&c0_space, &c0, m, 1, Side::Gamma)?;

        let dims_match = spaces.iter().all(|s| s.dim == betti);
        let pass = dims_match
            && middle_identical
            && conforming_gap < T::tol(SUBSPACE_TOL)
            && chain_gap < T::tol(SUBSPACE_TOL)
            && steps.iter().all(|s| s.pass);
        Ok(ChainReport { k, betti, spaces, steps, middle_identical, conforming_gap, chain_gap, dims_match, pass })
    }

    /// Gap between a harmonic space on a kernel subspace and the one at grading `b`,
    /// measured in the common ambient component.
    fn gap(&self, sub: &FormSpace<T>, h: &DMatrix<T>, index: usize, b: usize, side: Side) -> Result<f64> {
        let (space, g) = match side {
            Side::Gamma => self.gamma_harmonic(index, b)?,
            _ => self.lambda_harmonic(index, b)?,
        };
        let a = sub.to_ambient() * h;
        let c = space.to_ambient() * g;
        if !std::sync::Arc::ptr_eq(sub.ambient(), space.ambient()) && !sub.ambient().same_layout(space.ambient()) {
            return Ok(1.0);
        }
        Ok(subspace_distance(&a, &c, space.ambient().gram()).as_f64())
    }

    /// Chains for every degree.
    pub fn verify_all_chains(&self) -> Result<Vec<ChainReport>> {
        (0..=self.top_dim()).map(|k| self.verify_chain(k)).collect()
    }

    /// Exactness of every row (`D`, augmented by `Γ^0`) and column (`T`, augmented by
    /// the conforming space) of the double complex, the indicator count and the
    /// comparison of conforming and chain-like harmonic dimensions with Betti numbers.
    pub fn verify_double_complex(&self) -> Result<DoubleComplexReport> {
        let n = self.top_dim();
        let asm = self.assembler();
        let dim = |s: usize, q: usize| asm.component_space(s, q).map(|x| x.dim());
        let rank_d = |s: usize, q: usize| -> Result<usize> {
            if q < s {
                Ok(whitened_rank(&asm.op_d(s, q)?))
            } else {
                Ok(0)
            }
        };
        let rank_t = |s: usize, q: usize| -> Result<usize> {
            if s >= 1 && q < s {
                Ok(whitened_rank(&asm.op_t(s, q)?))
            } else {
                Ok(0)
            }
        };
        let mut rows = Vec::new();
        for m in 0..=n {
            // position 0: the kernel of D must be the piecewise constants
            let kernel = dim(m, 0)? - rank_d(m, 0)?;
            let image = self.pair().active(m).len();
            rows.push(ExactnessLine { sequence: "row".into(), fixed: m, position: 0, kernel, image, exact: kernel == image });
            for q in 1..=m {
                let kernel = dim(m, q)? - rank_d(m, q)?;
                let image = rank_d(m, q - 1)?;
                rows.push(ExactnessLine { sequence: "row".into(), fixed: m, position: q, kernel, image, exact: kernel == image });
            }
        }
        let mut columns = Vec::new();
        for k in 0..=n {
            for s in k..n {
                let kernel = dim(s, k)? - rank_t(s, k)?;
                let image = rank_t(s + 1, k)?;
                columns.push(ExactnessLine { sequence: "column".into(), fixed: k, position: s, kernel, image, exact: kernel == image });
            }
        }
        let mut indicators = Vec::new();
        for m in 0..=n {
            let kernel = asm.kernel_space(m, 0, Which::Horizontal)?.dim();
            let simplices = self.pair().active(m).len();
            indicators.push(IndicatorLine { m, kernel, simplices, pass: kernel == simplices });
        }
        let betti = self.pair().betti_numbers();
        let mut topology = Vec::new();
        for k in 0..=n {
            let conforming = assembled(self.lambda_harmonic(k, 0))?;
            let chainlike = assembled(self.gamma_harmonic(n - k, 0))?;
            let b = betti[n - k];
            let pass = conforming == Some(b) && chainlike == Some(b);
            topology.push(TopologyLine { k, conforming, chainlike, betti: b, pass });
        }
        let pass = rows.iter().chain(&columns).all(|l| l.exact)
            && indicators.iter().all(|l| l.pass)
            && topology.iter().all(|l| l.pass);
        Ok(DoubleComplexReport { rows, columns, indicators, topology, pass })
    }

    /// Harmonic dimensions of every family, and of the graded spaces along both chains.
    pub fn harmonic_family(&self) -> Result<HarmonicReport> {
        let n = self.top_dim();
        let mut complexes = Vec::new();
        let mut defect: f64 = 0.0;
        for spec in self.families() {
            let cx = self.build(spec)?;
            let mut harmonic_dims = Vec::new();
            for i in 0..cx.len() {
                let h = cx.harmonic_space(i);
                let sp = cx.space(i);
                let g = sp.inner(&h, &h) - DMatrix::identity(h.ncols(), h.ncols());
                defect = defect.max(g.iter().fold(0.0f64, |a, v| a.max(v.as_f64().abs())));
                harmonic_dims.push(h.ncols());
            }
            complexes.push(ComplexHarmonics { family: spec.to_string(), space_dims: cx.dims(), harmonic_dims });
        }
        let mut lambda = Vec::new();
        for k in 0..=n {
            for b in 0..=k + 1 {
                lambda.push((k, b, self.lambda_harmonic(k, b)?.1.ncols()));
            }
        }
        let mut gamma = Vec::new();
        for m in 0..=n {
            for b in 0..=n - m + 1 {
                gamma.push((m, b, self.gamma_harmonic(m, b)?.1.ncols()));
            }
        }
        Ok(HarmonicReport { complexes, lambda, gamma, orthonormality_defect: defect })
    }

    /// Harmonic dimensions under the weighted and the unweighted inner product.
    pub fn metric_independence(&self, specs: &[FamilySpec]) -> Result<MetricReport> {
        let (weighted, unweighted) = match self.metric() {
            Metric::Weighted => (None, self.with_metric(Metric::Unweighted)?),
            Metric::Unweighted => (Some(self.with_metric(Metric::Weighted)?), self.with_metric(Metric::Unweighted)?),
        };
        let weighted = weighted.as_ref().unwrap_or(self);
        let mut entries = Vec::new();
        for &spec in specs {
            let a = weighted.build(spec)?;
            let b = unweighted.build(spec)?;
            let da: Vec<usize> = (0..a.len()).map(|i| a.harmonic_dim(i)).collect();
            let db: Vec<usize> = (0..b.len()).map(|i| b.harmonic_dim(i)).collect();
            entries.push((spec.to_string(), da, db));
        }
        let pass = entries.iter().all(|(_, a, b)| a == b);
        Ok(MetricReport { entries, pass })
    }

    /// The complex redirected at `k0` sits inside the one redirected at `k0 - 1`:
    /// inclusions commute with the differentials.
    pub fn nesting(&self, k0: usize) -> Result<NestingReport> {
        let n = self.top_dim();
        if k0 == 0 || k0 > n + 1 {
            return Err(Error::OutOfRange(format!("nesting at k0={k0}")));
        }
        let inner = self.build(FamilySpec::RedirectedLambda { k0 })?;
        let outer = self.build(FamilySpec::RedirectedLambda { k0: k0 - 1 })?;
        let incl = (0..inner.len())
            .map(|i| LinearOp::inclusion(inner.space(i), outer.space(i)))
            .collect::<Result<Vec<_>>>()?;
        let mut residual: f64 = 0.0;
        for i in 0..inner.len().saturating_sub(1) {
            let (d, dd) = (inner.diff(i).expect("diff"), outer.diff(i).expect("diff"));
            let lhs = dd.matrix() * incl[i].matrix();
            let rhs = incl[i + 1].matrix() * d.matrix();
            let r = LinearOp::new(inner.space(i).clone(), outer.space(i + 1).clone(), lhs - rhs)?;
            let scale = dd.fro_norm().as_f64().max(f64::MIN_POSITIVE);
            residual = residual.max(r.fro_norm().as_f64() / scale);
        }
        Ok(NestingReport { k0, residual, pass: residual < T::tol(1e-10) })
    }

    /// Degree-0 harmonic forms on each skeleton against the chain-like harmonic space
    /// plus the trace image from one stratum up.
    pub fn skeleton_zero_forms(&self) -> Result<Vec<SkeletonZeroLine>> {
        let n = self.top_dim();
        let asm = self.assembler();
        let mut out = Vec::new();
        for m in 0..=n {
            let skeleton = if self.has_skeleton(m) {
                self.skeleton(m)?.harmonic(FamilySpec::TotalLambda, 0)?.1.ncols()
            } else {
                0
            };
            let chainlike = self.gamma_harmonic(m, 0)?.1.ncols();
            let trace_rank = if m < n {
                let g = FormSpace::Sub(asm.kernel_space(m + 1, 0, Which::Horizontal)?);
                let t = asm.t_matrix(m + 1, 0)?;
                let cod = FormSpace::Broken(asm.component_space(m, 0)?);
                whitened_rank(&LinearOp::new(g.clone(), cod, &*t * g.to_ambient())?)
            } else {
                0
            };
            out.push(SkeletonZeroLine { m, skeleton, chainlike, trace_rank, pass: skeleton == chainlike + trace_rank });
        }
        Ok(out)
    }
}
