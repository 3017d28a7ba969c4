//! The complex families built from broken spaces (horizontal, vertical, conforming,
//! chain-like, redirected and total complexes, and their skeleton variants), the
//! regularizers `R` and `S`, and the isomorphisms between harmonic spaces.
//!
//! A [`Context`] bundles a relative pair, a family of local spaces and an inner
//! product, and caches every assembled complex and right-inverse.

mod regularize;
mod verify;

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::assembly::{Assembler, FormSpace, LinearOp, Metric, Subspace, Which};
use crate::error::{Error, Result};
use crate::hilbert::{pseudoinverse, ComplexInstance};
use crate::mesh::RelativePair;
use crate::polyforms::{check_local_conditions, ExtensionRule, Family, LocalConditions, LocalTables};
use crate::scalar::Scalar;

pub use regularize::{InverseKind, IsoReport, IsoStep, RegularizerCheck, Side, WitnessReport, BIJECTIVITY_RTOL, REGULARIZER_TOL};
pub use verify::{
    ChainReport, ChainSpace, ComplexHarmonics, DoubleComplexReport, ExactnessLine, HarmonicReport, IndicatorLine,
    MetricReport, NestingReport, SkeletonZeroLine, TopologyLine, SUBSPACE_TOL,
};

/// Which complex to build. Positions in the resulting [`ComplexInstance`] are
/// the form degree for Λ-type families and `n - stratum` for Γ-type families
/// (`top stratum - stratum` for [`FamilySpec::SkeletonGamma`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FamilySpec {
    /// `Λ^0_{-1}(𝒯^m) → … → Λ^m_{-1}(𝒯^m)` with `D`.
    Horizontal { m: usize },
    /// `Λ^k_{-1}(𝒯^n) → … → Λ^k_{-1}(𝒯^k)` with `T`.
    Vertical { k: usize },
    /// `Λ^0(𝒯^m) → … → Λ^m(𝒯^m)` on the kernels of `T`.
    Conforming { m: usize },
    /// `Γ^k(𝒯^n) → … → Γ^k(𝒯^k)` on the kernels of `D`.
    Chainlike { k: usize },
    /// Conforming below degree `k0`, then `Λ^k_{-(k-k0+1)}(𝒯^n)`.
    RedirectedLambda { k0: usize },
    /// `Γ^0(𝒯^s)` above stratum `m0`, then `Γ^0_{-(m0-s+1)}(𝒯^s)`.
    RedirectedGamma { m0: usize },
    /// Fully graded: `Λ^k_{-k-1}(𝒯^n)`.
    TotalLambda,
    /// [`FamilySpec::RedirectedLambda`] on the `m`-skeleton.
    SkeletonLambda { m: usize, k0: usize },
    /// `Γ^k(𝒯^s)` above stratum `m0`, then `Γ^k_{-(m0-s+1)}(𝒯^s)`, for `s = n … k`.
    SkeletonGamma { k: usize, m0: usize },
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilySpec::Horizontal { m } => write!(f, "horizontal(m={m})"),
            FamilySpec::Vertical { k } => write!(f, "vertical(k={k})"),
            FamilySpec::Conforming { m } => write!(f, "conforming(m={m})"),
            FamilySpec::Chainlike { k } => write!(f, "chainlike(k={k})"),
            FamilySpec::RedirectedLambda { k0 } => write!(f, "redirected_lambda(k0={k0})"),
            FamilySpec::RedirectedGamma { m0 } => write!(f, "redirected_gamma(m0={m0})"),
            FamilySpec::TotalLambda => write!(f, "total"),
            FamilySpec::SkeletonLambda { m, k0 } => write!(f, "skeleton_lambda(m={m},k0={k0})"),
            FamilySpec::SkeletonGamma { k, m0 } => write!(f, "skeleton_gamma(k={k},m0={m0})"),
        }
    }
}

impl FamilySpec {
    /// Every family on an `n`-dimensional pair (skeleton variants for `m < n`).
    pub fn catalog(n: usize) -> Vec<FamilySpec> {
        let mut out = Vec::new();
        for m in 0..=n {
            out.push(FamilySpec::Horizontal { m });
            out.push(FamilySpec::Conforming { m });
        }
        for k in 0..=n {
            out.push(FamilySpec::Vertical { k });
            out.push(FamilySpec::Chainlike { k });
        }
        for k0 in 0..=n {
            out.push(FamilySpec::RedirectedLambda { k0 });
        }
        for m0 in 0..=n {
            out.push(FamilySpec::RedirectedGamma { m0 });
        }
        out.push(FamilySpec::TotalLambda);
        for m in 0..n {
            for k0 in 0..=m {
                out.push(FamilySpec::SkeletonLambda { m, k0 });
            }
        }
        for k in 1..=n {
            for m0 in k..=n {
                out.push(FamilySpec::SkeletonGamma { k, m0 });
            }
        }
        out
    }

    fn validate(&self, n: usize) -> Result<()> {
        let ok = match *self {
            FamilySpec::Horizontal { m } | FamilySpec::Conforming { m } => m <= n,
            FamilySpec::Vertical { k } | FamilySpec::Chainlike { k } => k <= n,
            FamilySpec::RedirectedLambda { k0 } => k0 <= n + 1,
            FamilySpec::RedirectedGamma { m0 } => m0 <= n,
            FamilySpec::TotalLambda => true,
            FamilySpec::SkeletonLambda { m, k0 } => m <= n && k0 <= m + 1,
            FamilySpec::SkeletonGamma { k, m0 } => k <= n && m0 <= n,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("{self} on a {n}-dimensional pair")))
        }
    }
}

/// Right-inverse used by the regularizers, given the operator to invert.
pub type RightInverseFn<T> = Arc<dyn Fn(&LinearOp<T>) -> DMatrix<T> + Send + Sync>;

/// Relative pair, local spaces and inner product, with caches.
pub struct Context<T: Scalar> {
    asm: Assembler<T>,
    complexes: Mutex<HashMap<FamilySpec, Arc<ComplexInstance<T>>>>,
    inverses: Mutex<HashMap<(InverseKind, usize, usize), Arc<DMatrix<T>>>>,
    skeletons: Mutex<HashMap<usize, Arc<Context<T>>>>,
    right_inverse: RightInverseFn<T>,
}

impl<T: Scalar> fmt::Debug for Context<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Context")
            .field("top_dim", &self.top_dim())
            .field("family", self.tables().family())
            .field("metric", &self.metric())
            .finish()
    }
}

impl<T: Scalar> Context<T> {
    pub fn new(pair: RelativePair<T>, family: &Family, metric: Metric) -> Result<Self> {
        let tables = LocalTables::new(family, pair.top_dim())?;
        Self::from_parts(Arc::new(pair), Arc::new(tables), metric)
    }

    pub fn from_parts(pair: Arc<RelativePair<T>>, tables: Arc<LocalTables<T>>, metric: Metric) -> Result<Self> {
        Ok(Self {
            asm: Assembler::new(pair, tables, metric)?,
            complexes: Mutex::new(HashMap::new()),
            inverses: Mutex::new(HashMap::new()),
            skeletons: Mutex::new(HashMap::new()),
            right_inverse: Arc::new(|op: &LinearOp<T>| pseudoinverse(op).into_matrix()),
        })
    }

    /// Replace the metric Moore–Penrose inverse by another right-inverse.
    pub fn with_right_inverse(mut self, f: RightInverseFn<T>) -> Self {
        self.right_inverse = f;
        self.inverses.lock().expect("cache").clear();
        self
    }

    /// Same pair and local spaces under a different inner product.
    pub fn with_metric(&self, metric: Metric) -> Result<Self> {
        Self::from_parts(self.pair().clone(), self.tables().clone(), metric)
    }

    pub fn assembler(&self) -> &Assembler<T> {
        &self.asm
    }

    pub fn pair(&self) -> &Arc<RelativePair<T>> {
        self.asm.pair()
    }

    pub fn tables(&self) -> &Arc<LocalTables<T>> {
        self.asm.tables()
    }

    pub fn metric(&self) -> Metric {
        self.asm.metric()
    }

    pub fn top_dim(&self) -> usize {
        self.asm.top_dim()
    }

    /// Local exactness, geometric decomposition and trace checks up to the top dimension.
    pub fn local_conditions(&self) -> Result<LocalConditions> {
        check_local_conditions(self.tables(), self.top_dim(), ExtensionRule::SupportComplete)
    }

    /// Error unless the local conditions and the patch condition hold.
    pub fn ensure_conditions(&self) -> Result<()> {
        let local = self.local_conditions()?;
        if !local.pass {
            return Err(Error::Condition(format!("local conditions fail for {}", self.tables().family())));
        }
        let patch = self.pair().check_local_patch_condition();
        if let Some(f) = patch.failures().next() {
            return Err(Error::Condition(format!("patch condition fails at {:?}", f.simplex)));
        }
        Ok(())
    }

    /// Whether the relative `m`-skeleton has any unmarked simplex (otherwise every
    /// space on it is zero).
    pub fn has_skeleton(&self, m: usize) -> bool {
        m == self.top_dim() || !self.pair().active(m).is_empty()
    }

    /// [`FamilySpec::catalog`] without skeleton families on empty skeleta.
    pub fn families(&self) -> Vec<FamilySpec> {
        FamilySpec::catalog(self.top_dim())
            .into_iter()
            .filter(|s| match *s {
                FamilySpec::SkeletonLambda { m, .. } => self.has_skeleton(m),
                _ => true,
            })
            .collect()
    }

    /// Context on the `m`-skeleton, sharing the local tables and the metric kind.
    pub fn skeleton(&self, m: usize) -> Result<Arc<Context<T>>> {
        if let Some(c) = self.skeletons.lock().expect("cache").get(&m) {
            return Ok(c.clone());
        }
        let pair = Arc::new(self.pair().skeleton_pair(m)?);
        let ctx = Context::from_parts(pair, self.tables().clone(), self.metric())?;
        let ctx = Arc::new(Context { right_inverse: self.right_inverse.clone(), ..ctx });
        self.skeletons.lock().expect("cache").insert(m, ctx.clone());
        Ok(ctx)
    }

    fn conforming(&self, s: usize, q: usize) -> Result<FormSpace<T>> {
        Ok(FormSpace::Sub(self.asm.kernel_space(s, q, Which::Vertical)?))
    }

    fn chain(&self, s: usize, q: usize) -> Result<FormSpace<T>> {
        Ok(FormSpace::Sub(self.asm.kernel_space(s, q, Which::Horizontal)?))
    }

    /// `Λ^k_{-b}(𝒯^n)`; `b = 0` gives the conforming space.
    pub fn lambda(&self, k: usize, b: usize) -> Result<FormSpace<T>> {
        let n = self.top_dim();
        if b == 0 {
            self.conforming(n, k)
        } else {
            Ok(FormSpace::Broken(self.asm.lambda_space(n, k, b)?))
        }
    }

    /// `Γ^k_{-b}(𝒯^m)`; `b = 0` gives the kernel of `D`.
    pub fn gamma(&self, m: usize, k: usize, b: usize) -> Result<FormSpace<T>> {
        if b == 0 {
            self.chain(m, k)
        } else {
            Ok(FormSpace::Broken(self.asm.gamma_space(m, k, b)?))
        }
    }

    /// Build (or fetch) a complex. `d ∘ d = 0` is verified at construction.
    pub fn build(&self, spec: FamilySpec) -> Result<Arc<ComplexInstance<T>>> {
        let n = self.top_dim();
        spec.validate(n)?;
        if let FamilySpec::SkeletonLambda { m, k0 } = spec {
            return self.skeleton(m)?.build(FamilySpec::RedirectedLambda { k0 });
        }
        if let Some(c) = self.complexes.lock().expect("cache").get(&spec) {
            return Ok(c.clone());
        }
        let label = spec.to_string();
        let cx = match spec {
            FamilySpec::Horizontal { m } => {
                let ops = (0..m).map(|q| self.asm.op_d(m, q)).collect::<Result<Vec<_>>>()?;
                if ops.is_empty() {
                    ComplexInstance::single(FormSpace::Broken(self.asm.component_space(m, 0)?), label)
                } else {
                    ComplexInstance::new(ops, label)?
                }
            }
            FamilySpec::Vertical { k } => {
                let ops = (k + 1..=n).rev().map(|s| self.asm.op_t(s, k)).collect::<Result<Vec<_>>>()?;
                if ops.is_empty() {
                    ComplexInstance::single(FormSpace::Broken(self.asm.component_space(k, k)?), label)
                } else {
                    ComplexInstance::new(ops, label)?
                }
            }
            _ => {
                let spaces = self.graded_spaces(spec)?;
                self.chain_of(spaces, label)?
            }
        };
        let cx = Arc::new(cx);
        self.complexes.lock().expect("cache").insert(spec, cx.clone());
        Ok(cx)
    }

    fn graded_spaces(&self, spec: FamilySpec) -> Result<Vec<FormSpace<T>>> {
        let n = self.top_dim();
        match spec {
            FamilySpec::Conforming { m } => (0..=m).map(|q| self.conforming(m, q)).collect(),
            FamilySpec::Chainlike { k } => (k..=n).rev().map(|s| self.chain(s, k)).collect(),
            FamilySpec::RedirectedLambda { k0 } => (0..=n)
                .map(|i| if i < k0 { self.lambda(i, 0) } else { self.lambda(i, i - k0 + 1) })
                .collect(),
            FamilySpec::TotalLambda => self.graded_spaces(FamilySpec::RedirectedLambda { k0: 0 }),
            FamilySpec::RedirectedGamma { m0 } => {
                self.graded_spaces(FamilySpec::SkeletonGamma { k: 0, m0 })
            }
            FamilySpec::SkeletonGamma { k, m0 } => (k..=n)
                .rev()
                .map(|s| if s > m0 { self.gamma(s, k, 0) } else { self.gamma(s, k, m0 - s + 1) })
                .collect(),
            FamilySpec::Horizontal { .. } | FamilySpec::Vertical { .. } | FamilySpec::SkeletonLambda { .. } => {
                unreachable!("built directly")
            }
        }
    }

    fn chain_of(&self, spaces: Vec<FormSpace<T>>, label: String) -> Result<ComplexInstance<T>> {
        if spaces.len() == 1 {
            return Ok(ComplexInstance::single(spaces[0].clone(), label));
        }
        let ops = spaces
            .windows(2)
            .map(|w| self.asm.d_between(&w[0], &w[1]))
            .collect::<Result<Vec<_>>>()?;
        ComplexInstance::new(ops, label)
    }

    /// Harmonic basis at position `i` of a family, in the coordinates of that space.
    pub fn harmonic(&self, spec: FamilySpec, i: usize) -> Result<(FormSpace<T>, DMatrix<T>)> {
        let cx = self.build(spec)?;
        if i >= cx.len() {
            return Err(Error::OutOfRange(format!("position {i} of {spec}")));
        }
        Ok((cx.space(i).clone(), cx.harmonic_space(i)))
    }

    /// Harmonic space as a subspace of its ambient broken space.
    pub fn harmonic_subspace(&self, spec: FamilySpec, i: usize) -> Result<Arc<Subspace<T>>> {
        let (space, h) = self.harmonic(spec, i)?;
        let basis = space.to_ambient() * h;
        Ok(Arc::new(Subspace::new(space.ambient().clone(), basis, format!("harmonic {i} of {spec}"))))
    }

    /// `𝔥^k_{-b}(𝒯^n)`; `b = 0` is the conforming harmonic space.
    pub fn lambda_harmonic(&self, k: usize, b: usize) -> Result<(FormSpace<T>, DMatrix<T>)> {
        let n = self.top_dim();
        if b == 0 {
            return self.harmonic(FamilySpec::Conforming { m: n }, k);
        }
        if b > k + 1 {
            return Err(Error::OutOfRange(format!("grading {b} at degree {k}")));
        }
        self.harmonic(FamilySpec::RedirectedLambda { k0: k + 1 - b }, k)
    }

    /// `ℭ^0_{-b}(𝒯^m)`; `b = 0` is the chain-like harmonic space.
    pub fn gamma_harmonic(&self, m: usize, b: usize) -> Result<(FormSpace<T>, DMatrix<T>)> {
        let n = self.top_dim();
        if m > n {
            return Err(Error::OutOfRange(format!("stratum {m}")));
        }
        if b == 0 {
            return self.harmonic(FamilySpec::Chainlike { k: 0 }, n - m);
        }
        if b > n - m + 1 {
            return Err(Error::OutOfRange(format!("grading {b} at stratum {m}")));
        }
        self.harmonic(FamilySpec::RedirectedGamma { m0: m + b - 1 }, n - m)
    }
}
