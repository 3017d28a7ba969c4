use std::fmt::Write;

use ddforms::distrib::{ChainReport, HarmonicReport};
use ddforms::mesh::PatchReport;
use ddforms::polyforms::LocalConditions;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Serialize)]
pub struct MeshSummary {
    pub source: String,
    pub ambient_dim: usize,
    pub top_dim: usize,
    /// Number of simplices per dimension.
    pub simplices: Vec<usize>,
    /// Number of marked simplices per dimension.
    pub marked: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Conditions {
    pub local_exactness: bool,
    pub geometric_decomposition: bool,
    pub patch: bool,
    /// Present for `check`; the other commands only keep the verdicts.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub local: Option<LocalConditions>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub patch_entries: Option<PatchReport>,
}

impl Conditions {
    pub fn pass(&self) -> bool {
        self.local_exactness && self.geometric_decomposition && self.patch
    }
}

/// One `k` of the chain. `detail` is absent when the chain could not be assembled.
#[derive(Debug, Clone, Serialize)]
pub struct ChainVerdict {
    pub k: usize,
    pub betti: usize,
    pub dims: Vec<usize>,
    /// Smallest `σ_min / σ_max` over the transfer steps.
    pub margin: Option<f64>,
    pub error: Option<String>,
    pub detail: Option<ChainReport>,
    pub pass: bool,
}

/// `dim 𝔥^k` of the conforming complex against `b_{n-k}`.
#[derive(Debug, Clone, Serialize)]
pub struct DimCheck {
    pub k: usize,
    pub harmonic: usize,
    pub betti: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HarmonicSection {
    pub table: HarmonicReport,
    pub conforming: Vec<DimCheck>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveLine {
    pub index: usize,
    pub dim: usize,
    pub harmonic_dim: usize,
    /// `‖Δu - (f - p)‖ / ‖f‖`.
    pub residual: f64,
    /// `max |⟨h_j, u⟩| / ‖u‖` over the harmonic basis.
    pub orthogonality: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub mesh: MeshSummary,
    pub family: String,
    pub metric: String,
    pub tolerance: f64,
    pub betti: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conditions: Option<Conditions>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub harmonic: Option<HarmonicSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain: Option<Vec<ChainVerdict>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve: Option<Vec<SolveLine>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operators: Option<Vec<String>>,
    pub warnings: Vec<String>,
    pub pass: bool,
}

/// Floats rounded to four significant digits, so reports do not depend on the last bits of roundoff.
fn canonical(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(0.0);
            let r: f64 = format!("{x:.3e}").parse().unwrap_or(x);
            serde_json::Number::from_f64(r).map(Value::Number).unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(canonical).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, canonical(v))).collect()),
        other => other,
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "FAIL"
    }
}

fn tuple(v: &[usize]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(","))
}

impl Report {
    pub fn structured(&self) -> String {
        let v = serde_json::to_value(self).expect("report serializes");
        serde_json::to_string_pretty(&canonical(v)).expect("report serializes")
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let m = &self.mesh;
        let _ = writeln!(s, "mesh      {} (n={}, ambient {})", m.source, m.top_dim, m.ambient_dim);
        let _ = writeln!(s, "simplices {}  marked {}", tuple(&m.simplices), tuple(&m.marked));
        let _ = writeln!(s, "family    {}  metric {}  tol {:.1e}", self.family, self.metric, self.tolerance);
        let _ = writeln!(s, "betti     {}", tuple(&self.betti));

        if let Some(c) = &self.conditions {
            let _ = writeln!(s, "\nconditions");
            let _ = writeln!(s, "  local exactness          {}", verdict(c.local_exactness));
            let _ = writeln!(s, "  geometric decomposition  {}", verdict(c.geometric_decomposition));
            let _ = writeln!(s, "  local patch condition    {}", verdict(c.patch));
            if let Some(local) = &c.local {
                for e in local.exactness.iter().filter(|e| !e.pass) {
                    let _ = writeln!(s, "    exactness fails on {}-simplices", e.simplex_dim);
                }
                for d in local.decomposition.iter().filter(|d| !d.pass) {
                    let _ = writeln!(
                        s,
                        "    decomposition fails for {}-forms on {}-simplices: bubbles {} vs dim {}",
                        d.degree, d.simplex_dim, d.bubble_sum, d.space_dim
                    );
                }
                for t in local.traces.iter().filter(|t| !t.pass) {
                    let _ = writeln!(s, "    traces of {}-forms on {}-simplices not onto", t.degree, t.simplex_dim);
                }
            }
            if let Some(p) = &c.patch_entries {
                for e in p.failures() {
                    let _ = writeln!(s, "    patch of {:?} has relative homology {}", e.simplex, tuple(&e.betti));
                }
            }
        }

        if let Some(h) = &self.harmonic {
            let _ = writeln!(s, "\nharmonic dimensions");
            for c in &h.table.complexes {
                let _ = writeln!(s, "  {:<32} {}", c.family, tuple(&c.harmonic_dims));
            }
            let _ = writeln!(s, "  graded lambda (k, b, dim)");
            for (k, b, d) in &h.table.lambda {
                let _ = writeln!(s, "    {k} {b} {d}");
            }
            let _ = writeln!(s, "  graded gamma (m, b, dim)");
            for (m, b, d) in &h.table.gamma {
                let _ = writeln!(s, "    {m} {b} {d}");
            }
            let _ = writeln!(s, "  orthonormality defect {:.2e}", h.table.orthonormality_defect);
            for c in &h.conforming {
                let _ = writeln!(s, "  k={}  dim h^k = {}  b_(n-k) = {}  {}", c.k, c.harmonic, c.betti, verdict(c.pass));
            }
        }

        if let Some(chain) = &self.chain {
            let _ = writeln!(s, "\nchain");
            for c in chain {
                let margin = c.margin.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into());
                let _ = writeln!(
                    s,
                    "  k={}  b_(n-k)={}  dims {}  min sigma {}  {}",
                    c.k,
                    c.betti,
                    tuple(&c.dims),
                    margin,
                    verdict(c.pass)
                );
                if let Some(e) = &c.error {
                    let _ = writeln!(s, "    {e}");
                }
                if let Some(d) = &c.detail {
                    for st in d.steps.iter().filter(|st| !st.pass) {
                        let _ = writeln!(
                            s,
                            "    step {} {}->{} sigma {:.2e} fails",
                            st.label, st.source_dim, st.target_dim, st.sigma_min_rel
                        );
                    }
                }
            }
        }

        if let Some(solve) = &self.solve {
            let _ = writeln!(s, "\nhodge-laplace solve (conforming complex)");
            for l in solve {
                let _ = writeln!(
                    s,
                    "  i={}  dim {}  harmonic {}  residual {:.2e}  orthogonality {:.2e}  {}",
                    l.index,
                    l.dim,
                    l.harmonic_dim,
                    l.residual,
                    l.orthogonality,
                    verdict(l.pass)
                );
            }
        }

        if let Some(ops) = &self.operators {
            let _ = writeln!(s, "\nwrote {} operator files", ops.len());
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        let _ = writeln!(s, "\nresult    {}", verdict(self.pass));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_are_rounded_integers_kept() {
        let v = serde_json::json!({"a": 1.234567e-15, "b": [3, 0.1 + 0.2], "c": 7});
        let c = canonical(v);
        assert_eq!(c["a"].as_f64(), Some(1.235e-15));
        assert_eq!(c["b"][1].as_f64(), Some(0.3));
        assert_eq!(c["b"][0].as_u64(), Some(3));
        assert_eq!(c["c"].as_u64(), Some(7));
    }
}
