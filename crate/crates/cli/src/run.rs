use std::fs;

use ddforms::assembly::{write_sparse, Metric};
use ddforms::distrib::{Context, FamilySpec};
use ddforms::mesh::RelativePair;
use ddforms::Error;
use nalgebra::DMatrix;

use crate::config::{ConfigError, RunConfig};
use crate::report::{ChainVerdict, Conditions, DimCheck, HarmonicSection, MeshSummary, Report, SolveLine};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Library { context: &'static str, source: Error },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

trait WithContext<T> {
    fn ctx(self, context: &'static str) -> Result<T, RunError>;
}

impl<T> WithContext<T> for ddforms::Result<T> {
    fn ctx(self, context: &'static str) -> Result<T, RunError> {
        self.map_err(|source| RunError::Library { context, source })
    }
}

fn summary(cfg: &RunConfig, pair: &RelativePair<f64>) -> MeshSummary {
    let n = pair.top_dim();
    MeshSummary {
        source: cfg.mesh.describe(),
        ambient_dim: pair.ambient_dim(),
        top_dim: n,
        simplices: (0..=n).map(|m| pair.num_simplices(m)).collect(),
        marked: pair.marked_counts(),
    }
}

fn conditions(ctx: &Context<f64>, full: bool) -> Result<Conditions, RunError> {
    let local = ctx.local_conditions().ctx("local conditions")?;
    let patch = ctx.pair().check_local_patch_condition();
    Ok(Conditions {
        local_exactness: local.exactness.iter().all(|e| e.pass),
        geometric_decomposition: local.decomposition.iter().all(|d| d.pass) && local.traces.iter().all(|t| t.pass),
        patch: patch.pass,
        local: full.then_some(local),
        patch_entries: full.then_some(patch),
    })
}

fn warnings(c: &Conditions, pair: &RelativePair<f64>) -> Vec<String> {
    let mut w = Vec::new();
    if !c.local_exactness {
        w.push("local exactness fails for this family".to_string());
    }
    if !c.geometric_decomposition {
        w.push("geometric decomposition fails for this family".to_string());
    }
    if !c.patch {
        for e in pair.check_local_patch_condition().failures() {
            w.push(format!("local patch condition fails at {:?}", e.simplex));
        }
    }
    w
}

/// Verification failures inside the library become failed verdicts; anything else is an error.
fn verdict_or_error<T>(r: ddforms::Result<T>, context: &'static str) -> Result<Result<T, String>, RunError> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(e @ (Error::Verification(_) | Error::Condition(_))) => Ok(Err(e.to_string())),
        Err(source) => Err(RunError::Library { context, source }),
    }
}

fn chain(ctx: &Context<f64>, tol: f64) -> Result<Vec<ChainVerdict>, RunError> {
    let n = ctx.top_dim();
    let betti = ctx.pair().betti_numbers();
    let mut out = Vec::new();
    for k in 0..=n {
        let v = match verdict_or_error(ctx.verify_chain(k), "chain")? {
            Ok(r) => {
                let margin = r.steps.iter().map(|s| s.sigma_min_rel).reduce(f64::min);
                let pass = r.pass && r.conforming_gap <= tol && r.chain_gap <= tol;
                ChainVerdict {
                    k,
                    betti: r.betti,
                    dims: r.spaces.iter().map(|s| s.dim).collect(),
                    margin,
                    error: None,
                    detail: Some(r),
                    pass,
                }
            }
            Err(e) => ChainVerdict { k, betti: betti[n - k], dims: Vec::new(), margin: None, error: Some(e), detail: None, pass: false },
        };
        out.push(v);
    }
    Ok(out)
}

fn harmonic(ctx: &Context<f64>) -> Result<HarmonicSection, RunError> {
    let table = ctx.harmonic_family().ctx("harmonic spaces")?;
    let n = ctx.top_dim();
    let betti = ctx.pair().betti_numbers();
    let cx = ctx.build(FamilySpec::Conforming { m: n }).ctx("conforming complex")?;
    let conforming = (0..=n)
        .map(|k| {
            let h = cx.harmonic_dim(k);
            DimCheck { k, harmonic: h, betti: betti[n - k], pass: h == betti[n - k] }
        })
        .collect();
    Ok(HarmonicSection { table, conforming })
}

/// Deterministic smooth-looking source vector.
fn source(dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(dim, 1, |r, _| (0.7 * (r as f64 + 1.0)).sin())
}

fn solve(ctx: &Context<f64>, tol: f64) -> Result<Vec<SolveLine>, RunError> {
    let n = ctx.top_dim();
    let cx = ctx.build(FamilySpec::Conforming { m: n }).ctx("conforming complex")?;
    let mut out = Vec::new();
    for i in 0..cx.len() {
        let sp = cx.space(i);
        let f = source(sp.dim());
        let (u, p) = cx.laplace_solve(i, &f);
        let lap = cx.hodge_laplacian(i).ctx("hodge laplacian")?;
        let fnorm = sp.norm(&f);
        let res = sp.norm(&(lap.apply(&u) - (&f - &p)));
        let residual = if fnorm > 0.0 { res / fnorm } else { res };
        let h = cx.harmonic_space(i);
        let unorm = sp.norm(&u);
        let orthogonality = if h.ncols() == 0 || unorm == 0.0 { 0.0 } else { sp.inner(&h, &u).amax() / unorm };
        out.push(SolveLine {
            index: i,
            dim: sp.dim(),
            harmonic_dim: h.ncols(),
            residual,
            orthogonality,
            pass: residual <= tol && orthogonality <= tol,
        });
    }
    Ok(out)
}

/// `D_s{s}_q{q}.txt`, `T_s{s}_q{q}.txt` and `G_s{s}_q{q}.txt` in the assembly sparse format.
fn dump(ctx: &Context<f64>, dir: &std::path::Path) -> Result<Vec<String>, RunError> {
    let io = |source| RunError::Io { path: dir.display().to_string(), source };
    fs::create_dir_all(dir).map_err(io)?;
    let a = ctx.assembler();
    let n = ctx.top_dim();
    let mut written = Vec::new();
    let mut put = |name: String, m: &DMatrix<f64>| -> Result<(), RunError> {
        write_sparse(&dir.join(&name), m).ctx("operator export")?;
        written.push(name);
        Ok(())
    };
    for s in 0..=n {
        for q in 0..=s {
            put(format!("G_s{s}_q{q}.txt"), a.component_space(s, q).ctx("operator export")?.gram())?;
            if q < s {
                put(format!("D_s{s}_q{q}.txt"), &*a.d_matrix(s, q).ctx("operator export")?)?;
                put(format!("T_s{s}_q{q}.txt"), &*a.t_matrix(s, q).ctx("operator export")?)?;
            }
        }
    }
    Ok(written)
}

pub fn run(cfg: &RunConfig) -> Result<Report, RunError> {
    let pair = cfg.load_pair()?;
    let mesh = summary(cfg, &pair);
    let betti = pair.betti_numbers();
    let ctx = Context::new(pair, &cfg.family, cfg.metric).ctx("context")?;

    let cond = conditions(&ctx, cfg.command == "check")?;
    let mut report = Report {
        command: cfg.command.to_string(),
        mesh,
        family: cfg.family.to_string(),
        metric: match cfg.metric {
            Metric::Weighted => "weighted".into(),
            Metric::Unweighted => "unweighted".into(),
        },
        tolerance: cfg.tol,
        betti,
        conditions: None,
        harmonic: None,
        chain: None,
        solve: None,
        operators: None,
        warnings: Vec::new(),
        pass: true,
    };

    let mut pass = match cfg.command {
        "betti" => true,
        "check" => cond.pass(),
        "harmonic" => {
            let h = harmonic(&ctx)?;
            let ok = h.conforming.iter().all(|c| c.pass) && h.table.orthonormality_defect <= cfg.tol;
            report.harmonic = Some(h);
            ok
        }
        "chain" => {
            let c = chain(&ctx, cfg.tol)?;
            let ok = c.iter().all(|v| v.pass);
            report.chain = Some(c);
            ok
        }
        "solve" => {
            let s = solve(&ctx, cfg.tol)?;
            let ok = s.iter().all(|l| l.pass);
            report.solve = Some(s);
            ok
        }
        other => unreachable!("unknown command {other}"),
    };
    if cfg.command != "check" {
        report.warnings = warnings(&cond, ctx.pair());
        if cfg.strict && !report.warnings.is_empty() {
            pass = false;
        }
    }
    report.conditions = Some(cond);
    if let Some(dir) = &cfg.dump_operators {
        report.operators = Some(dump(&ctx, dir)?);
    }
    report.pass = pass;
    Ok(report)
}
