//! Polynomial differential forms in barycentric coordinates.
//!
//! A term `λ^α dλ_σ` is a monomial in the `m + 1` barycentric coordinates of an
//! `m`-simplex times a wedge of their differentials. The *canonical* representation
//! eliminates `dλ_0 = -Σ_{i≥1} dλ_i` and homogenises all monomials to one degree
//! using `Σ λ_i = 1`; it is unique, so coefficient vectors can be compared.
//! *Formal* term maps allow `0 ∈ σ` and mixed degrees.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term {
    pub alpha: Vec<u32>,
    pub sigma: Vec<usize>,
}

impl Term {
    pub fn poly_degree(&self) -> u32 {
        self.alpha.iter().sum()
    }
}

pub type Terms<T> = BTreeMap<Term, T>;

fn add_to<T: Scalar>(map: &mut Terms<T>, key: Term, c: T) {
    if c == T::zero() {
        return;
    }
    let e = map.entry(key).or_insert(T::zero());
    *e += c;
}

fn prune<T: Scalar>(map: &mut Terms<T>) {
    map.retain(|_, c| *c != T::zero());
}

/// Insert `a` into ascending `rest`; returns the merged list and `(-1)^position`.
fn insert_sorted(a: usize, rest: &[usize]) -> Option<(Vec<usize>, i32)> {
    match rest.binary_search(&a) {
        Ok(_) => None,
        Err(p) => {
            let mut v = rest.to_vec();
            v.insert(p, a);
            Some((v, if p % 2 == 0 { 1 } else { -1 }))
        }
    }
}

/// Sign and union of `dλ_σ ∧ dλ_τ` for ascending, disjoint `σ`, `τ`.
pub fn merge_sign(sigma: &[usize], tau: &[usize]) -> Option<(Vec<usize>, i32)> {
    let mut inversions = 0usize;
    for &s in sigma {
        for &t in tau {
            if s == t {
                return None;
            }
            if s > t {
                inversions += 1;
            }
        }
    }
    let mut v: Vec<usize> = sigma.iter().chain(tau.iter()).copied().collect();
    v.sort_unstable();
    Some((v, if inversions.is_multiple_of(2) { 1 } else { -1 }))
}

/// Replace `dλ_0` by `-Σ_{i≥1} dλ_i`.
pub fn eliminate_zero<T: Scalar>(dim: usize, terms: &Terms<T>) -> Terms<T> {
    let mut out = Terms::new();
    for (t, &c) in terms {
        if t.sigma.first() != Some(&0) {
            add_to(&mut out, t.clone(), c);
            continue;
        }
        let rest = &t.sigma[1..];
        for i in 1..=dim {
            if let Some((sigma, s)) = insert_sorted(i, rest) {
                add_to(
                    &mut out,
                    Term { alpha: t.alpha.clone(), sigma },
                    -c * lit::<T>(s as f64),
                );
            }
        }
    }
    prune(&mut out);
    out
}

/// Multiply every monomial by `(Σ λ)^(r - |α|)`.
pub fn homogenize<T: Scalar>(terms: &Terms<T>, r: u32) -> Result<Terms<T>> {
    let mut out = Terms::new();
    for (t, &c) in terms {
        let d = t.poly_degree();
        if d > r {
            return Err(Error::Form(format!("monomial degree {d} exceeds frame degree {r}")));
        }
        let mut cur: Terms<T> = Terms::new();
        cur.insert(t.clone(), c);
        for _ in d..r {
            let mut next = Terms::new();
            for (u, &cu) in &cur {
                for i in 0..u.alpha.len() {
                    let mut a = u.alpha.clone();
                    a[i] += 1;
                    add_to(&mut next, Term { alpha: a, sigma: u.sigma.clone() }, cu);
                }
            }
            cur = next;
        }
        for (u, cu) in cur {
            add_to(&mut out, u, cu);
        }
    }
    prune(&mut out);
    Ok(out)
}

fn max_degree<T>(terms: &Terms<T>) -> u32 {
    terms.keys().map(|t| t.poly_degree()).max().unwrap_or(0)
}

/// Canonical representation: no `dλ_0`, homogeneous of the maximal degree present.
pub fn canonicalize<T: Scalar>(dim: usize, terms: &Terms<T>) -> Terms<T> {
    let e = eliminate_zero(dim, terms);
    let r = max_degree(&e);
    homogenize(&e, r).expect("degree is maximal")
}

pub fn formal_d<T: Scalar>(terms: &Terms<T>) -> Terms<T> {
    let mut out = Terms::new();
    for (t, &c) in terms {
        for (i, &a) in t.alpha.iter().enumerate() {
            if a == 0 {
                continue;
            }
            if let Some((sigma, s)) = insert_sorted(i, &t.sigma) {
                let mut alpha = t.alpha.clone();
                alpha[i] -= 1;
                add_to(&mut out, Term { alpha, sigma }, c * lit::<T>(a as f64 * s as f64));
            }
        }
    }
    prune(&mut out);
    out
}

pub fn formal_wedge<T: Scalar>(a: &Terms<T>, b: &Terms<T>) -> Terms<T> {
    let mut out = Terms::new();
    for (ta, &ca) in a {
        for (tb, &cb) in b {
            if let Some((sigma, s)) = merge_sign(&ta.sigma, &tb.sigma) {
                let alpha = ta.alpha.iter().zip(&tb.alpha).map(|(x, y)| x + y).collect();
                add_to(&mut out, Term { alpha, sigma }, ca * cb * lit::<T>(s as f64));
            }
        }
    }
    prune(&mut out);
    out
}

/// Pull back along the face spanned by the (ascending) vertex positions `face`.
/// The result is formal in the face's own barycentric variables.
pub fn formal_trace<T: Scalar>(terms: &Terms<T>, face: &[usize]) -> Terms<T> {
    let mut pos = HashMap::new();
    for (i, &p) in face.iter().enumerate() {
        pos.insert(p, i);
    }
    let mut out = Terms::new();
    'terms: for (t, &c) in terms {
        for (j, &a) in t.alpha.iter().enumerate() {
            if a > 0 && !pos.contains_key(&j) {
                continue 'terms;
            }
        }
        let mut sigma = Vec::with_capacity(t.sigma.len());
        for s in &t.sigma {
            match pos.get(s) {
                Some(&i) => sigma.push(i),
                None => continue 'terms,
            }
        }
        let alpha = face.iter().map(|&p| t.alpha[p]).collect();
        add_to(&mut out, Term { alpha, sigma }, c);
    }
    prune(&mut out);
    out
}

/// Relabel a formal form on a face as a formal form on the cell (variables of the
/// missing vertices enter with exponent zero).
pub fn formal_relabel<T: Scalar>(terms: &Terms<T>, face: &[usize], cell_dim: usize) -> Terms<T> {
    let mut out = Terms::new();
    for (t, &c) in terms {
        let mut alpha = vec![0; cell_dim + 1];
        for (i, &p) in face.iter().enumerate() {
            alpha[p] = t.alpha[i];
        }
        let sigma = t.sigma.iter().map(|&i| face[i]).collect();
        add_to(&mut out, Term { alpha, sigma }, c);
    }
    out
}

/// A polynomial `k`-form on an `m`-simplex in canonical representation.
#[derive(Debug, Clone, PartialEq)]
pub struct BarycentricForm<T: Scalar> {
    dim: usize,
    degree: usize,
    terms: Terms<T>,
}

impl<T: Scalar> BarycentricForm<T> {
    pub fn zero(dim: usize, degree: usize) -> Self {
        Self { dim, degree, terms: Terms::new() }
    }

    /// Build from a formal term map; `0 ∈ σ` and mixed degrees are allowed.
    pub fn from_terms(dim: usize, degree: usize, terms: Terms<T>) -> Result<Self> {
        for t in terms.keys() {
            if t.alpha.len() != dim + 1 || t.sigma.len() != degree {
                return Err(Error::Form(format!("term {t:?} does not fit a {degree}-form on a {dim}-simplex")));
            }
            if t.sigma.windows(2).any(|w| w[0] >= w[1]) || t.sigma.iter().any(|&s| s > dim) {
                return Err(Error::Form(format!("bad wedge index set {:?}", t.sigma)));
            }
        }
        Ok(Self { dim, degree, terms: canonicalize(dim, &terms) })
    }

    /// `c λ^α dλ_σ` with `σ` given in any order (sign adjusted).
    pub fn monomial(dim: usize, alpha: &[u32], sigma: &[usize], c: T) -> Result<Self> {
        let mut s = sigma.to_vec();
        let mut sign = 1;
        for i in 0..s.len() {
            for j in 0..s.len() - 1 - i {
                if s[j] > s[j + 1] {
                    s.swap(j, j + 1);
                    sign = -sign;
                } else if s[j] == s[j + 1] {
                    return Ok(Self::zero(dim, sigma.len()));
                }
            }
        }
        let mut m = Terms::new();
        m.insert(Term { alpha: alpha.to_vec(), sigma: s }, c * lit::<T>(sign as f64));
        Self::from_terms(dim, sigma.len(), m)
    }

    /// Constant 0-form.
    pub fn constant(dim: usize, c: T) -> Self {
        Self::monomial(dim, &vec![0; dim + 1], &[], c).expect("valid")
    }

    /// Barycentric coordinate `λ_i` as a 0-form.
    pub fn lambda(dim: usize, i: usize) -> Self {
        let mut a = vec![0; dim + 1];
        a[i] = 1;
        Self::monomial(dim, &a, &[], T::one()).expect("valid")
    }

    /// `dλ_i`.
    pub fn dlambda(dim: usize, i: usize) -> Self {
        Self::monomial(dim, &vec![0; dim + 1], &[i], T::one()).expect("valid")
    }

    /// Whitney form `φ_σ = Σ_i (-1)^i λ_{σ_i} dλ_{σ \ σ_i}` for ascending `σ`.
    pub fn whitney(dim: usize, sigma: &[usize]) -> Self {
        Self::from_terms(dim, sigma.len() - 1, whitney_terms(dim, sigma)).expect("valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> &Terms<T> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn poly_degree(&self) -> u32 {
        max_degree(&self.terms)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::Form(format!(
                "forms live on simplices of dimension {} and {}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch(format!("{} + {}", self.degree, other.degree)));
        }
        let mut t = self.terms.clone();
        for (k, &c) in &other.terms {
            add_to(&mut t, k.clone(), c);
        }
        prune(&mut t);
        Ok(Self { dim: self.dim, degree: self.degree, terms: canonicalize(self.dim, &t) })
    }

    pub fn scale(&self, c: T) -> Self {
        let mut t = self.terms.clone();
        for v in t.values_mut() {
            *v *= c;
        }
        prune(&mut t);
        Self { dim: self.dim, degree: self.degree, terms: t }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-T::one()))
    }

    /// Exterior derivative.
    pub fn d(&self) -> Self {
        if self.degree >= self.dim {
            return Self::zero(self.dim, self.degree + 1);
        }
        Self {
            dim: self.dim,
            degree: self.degree + 1,
            terms: canonicalize(self.dim, &formal_d(&self.terms)),
        }
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let degree = self.degree + other.degree;
        if degree > self.dim {
            return Ok(Self::zero(self.dim, degree));
        }
        Ok(Self {
            dim: self.dim,
            degree,
            terms: canonicalize(self.dim, &formal_wedge(&self.terms, &other.terms)),
        })
    }

    /// Trace onto the face given by ascending vertex positions.
    pub fn trace(&self, face: &[usize]) -> Result<Self> {
        if face.is_empty() || face.windows(2).any(|w| w[0] >= w[1]) || face.iter().any(|&p| p > self.dim) {
            return Err(Error::NotAFace {
                face: face.to_vec(),
                cell: (0..=self.dim).collect(),
            });
        }
        let f = face.len() - 1;
        if self.degree > f {
            return Ok(Self::zero(f, self.degree));
        }
        Ok(Self {
            dim: f,
            degree: self.degree,
            terms: canonicalize(f, &formal_trace(&self.terms, face)),
        })
    }

    /// Reinterpret the expression in the variables of a cell containing this face
    /// (`face` = vertex positions of this simplex inside the cell).
    pub fn relabel_into(&self, face: &[usize], cell_dim: usize) -> Self {
        Self {
            dim: cell_dim,
            degree: self.degree,
            terms: canonicalize(cell_dim, &formal_relabel(&self.terms, face, cell_dim)),
        }
    }

    /// Coefficients in a canonical frame.
    pub fn to_vector(&self, frame: &Frame) -> Result<DVector<T>> {
        if frame.formal || frame.dim != self.dim || frame.degree != self.degree {
            return Err(Error::Form("frame does not match form".into()));
        }
        frame.coords(&self.terms)
    }

    pub fn from_vector(frame: &Frame, v: &DVector<T>) -> Result<Self> {
        let terms = frame.terms_of(v.as_slice())?;
        Self::from_terms(frame.dim, frame.degree, terms)
    }

    /// Largest coefficient difference after bringing both to a common degree.
    pub fn distance(&self, other: &Self) -> Result<T> {
        let diff = self.sub(other)?;
        Ok(diff.terms.values().fold(T::zero(), |a, c| a.max(c.abs())))
    }

    pub fn max_abs(&self) -> T {
        self.terms.values().fold(T::zero(), |a, c| a.max(c.abs()))
    }
}

/// Formal Whitney form terms (no `dλ_0` elimination).
pub fn whitney_terms<T: Scalar>(dim: usize, sigma: &[usize]) -> Terms<T> {
    let mut out = Terms::new();
    for i in 0..sigma.len() {
        let mut alpha = vec![0; dim + 1];
        alpha[sigma[i]] = 1;
        let mut rest = sigma.to_vec();
        rest.remove(i);
        let s = if i % 2 == 0 { 1.0 } else { -1.0 };
        add_to(&mut out, Term { alpha, sigma: rest }, lit::<T>(s));
    }
    out
}

impl<T: Scalar> fmt::Display for BarycentricForm<T> {
    /// Deterministic rendering, terms in lexicographic order of `(α, σ)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (t, c) in &self.terms {
            let v = c.as_f64();
            let sign = if v < 0.0 { "-" } else { "+" };
            if first {
                if v < 0.0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let mut parts = Vec::new();
            let a = v.abs();
            if (a - 1.0).abs() > 1e-15 || (t.poly_degree() == 0 && t.sigma.is_empty()) {
                parts.push(format!("{a}"));
            }
            for (i, &e) in t.alpha.iter().enumerate() {
                match e {
                    0 => {}
                    1 => parts.push(format!("l{i}")),
                    _ => parts.push(format!("l{i}^{e}")),
                }
            }
            if !t.sigma.is_empty() {
                let ds: Vec<String> = t.sigma.iter().map(|s| format!("dl{s}")).collect();
                parts.push(ds.join("^"));
            }
            if parts.is_empty() {
                parts.push("1".into());
            }
            write!(f, "{}", parts.join(" "))?;
        }
        Ok(())
    }
}

/// Homogeneous multi-indices of total degree `r` in `n` variables, lexicographically descending.
pub fn multi_indices(n: usize, r: u32) -> Vec<Vec<u32>> {
    fn rec(n: usize, r: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == n {
            prefix.push(r);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for a in (0..=r).rev() {
            prefix.push(a);
            rec(n, r - a, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    rec(n, r, &mut Vec::new(), &mut out);
    out
}

/// Ascending `k`-subsets of `lo..=hi`, lexicographic.
pub fn subsets(lo: usize, hi: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, hi: usize, k: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == k {
            out.push(prefix.clone());
            return;
        }
        for i in start..=hi {
            if hi + 1 - i < k - prefix.len() {
                break;
            }
            prefix.push(i);
            rec(i + 1, hi, k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if k == 0 {
        out.push(Vec::new());
        return out;
    }
    if hi + 1 < lo + k || lo > hi {
        return out;
    }
    rec(lo, hi, k, &mut Vec::new(), &mut out);
    out
}

/// Ordered basis of `λ^α dλ_σ` terms with `|α| = r`: canonical (`σ ⊆ {1..m}`) or formal (`σ ⊆ {0..m}`).
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub dim: usize,
    pub degree: usize,
    pub poly: u32,
    pub formal: bool,
    pub terms: Vec<Term>,
    index: HashMap<Term, usize>,
}

impl Frame {
    pub fn new(dim: usize, degree: usize, poly: u32, formal: bool) -> Self {
        let lo = if formal { 0 } else { 1 };
        let sigmas = if degree > dim { Vec::new() } else { subsets(lo, dim, degree) };
        let mut terms = Vec::new();
        for alpha in multi_indices(dim + 1, poly) {
            for s in &sigmas {
                terms.push(Term { alpha: alpha.clone(), sigma: s.clone() });
            }
        }
        let index = terms.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        Self { dim, degree, poly, formal, terms, index }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn position(&self, t: &Term) -> Option<usize> {
        self.index.get(t).copied()
    }

    /// Coordinates of a term map; canonical frames canonicalise first.
    pub fn coords<T: Scalar>(&self, terms: &Terms<T>) -> Result<DVector<T>> {
        let t = if self.formal {
            terms.clone()
        } else {
            eliminate_zero(self.dim, terms)
        };
        let h = homogenize(&t, self.poly)?;
        let mut v = DVector::zeros(self.len());
        for (k, c) in h {
            let i = self
                .position(&k)
                .ok_or_else(|| Error::Form(format!("term {k:?} not in frame")))?;
            v[i] += c;
        }
        Ok(v)
    }

    pub fn terms_of<T: Scalar>(&self, v: &[T]) -> Result<Terms<T>> {
        if v.len() != self.len() {
            return Err(Error::Form("coefficient vector length mismatch".into()));
        }
        let mut out = Terms::new();
        for (t, &c) in self.terms.iter().zip(v) {
            add_to(&mut out, t.clone(), c);
        }
        Ok(out)
    }

    /// Matrix of a linear map on term maps, from this frame into `target`.
    pub fn matrix_of<T: Scalar, F>(&self, target: &Frame, f: F) -> Result<DMatrix<T>>
    where
        F: Fn(&Terms<T>) -> Terms<T>,
    {
        let mut m = DMatrix::zeros(target.len(), self.len());
        for (j, t) in self.terms.iter().enumerate() {
            let mut unit = Terms::new();
            unit.insert(t.clone(), T::one());
            let img = f(&unit);
            m.set_column(j, &target.coords(&img)?);
        }
        Ok(m)
    }
}
