use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use ddforms::assembly::Metric;
use ddforms::mesh::catalog::{self, MarkMode};
use ddforms::mesh::{MeshFile, RelativePair};
use ddforms::polyforms::Family;

use crate::Format;

/// Residual / gap tolerance of the verdicts when `--tol` is not given.
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: line {line}, column {column}: {msg}")]
    Syntax {
        path: String,
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("{context}: {source}")]
    Mesh {
        context: String,
        source: ddforms::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MarkArg {
    None,
    Full,
    Half,
    File,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MeshSource {
    Catalog(String),
    File(PathBuf),
}

impl MeshSource {
    pub fn parse(s: &str) -> Self {
        match s.strip_prefix("catalog:") {
            Some(key) => MeshSource::Catalog(key.trim().to_string()),
            None => MeshSource::File(PathBuf::from(s)),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            MeshSource::Catalog(k) => format!("catalog:{k}"),
            MeshSource::File(p) => p.display().to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: &'static str,
    pub mesh: MeshSource,
    pub family: Family,
    pub mark: MarkArg,
    pub tol: f64,
    pub format: Format,
    pub strict: bool,
    pub dump_operators: Option<PathBuf>,
    pub metric: Metric,
}

impl RunConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        command: &'static str,
        mesh: MeshSource,
        family: &str,
        degree: Option<u32>,
        mark: Option<MarkArg>,
        tol: Option<f64>,
        format: Format,
        strict: bool,
        dump_operators: Option<PathBuf>,
        metric: Metric,
    ) -> Result<Self, ConfigError> {
        let family = match degree {
            Some(r) => Family::parse(family, r),
            None => family.parse(),
        }
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let tol = tol.unwrap_or(DEFAULT_TOL);
        if !(tol.is_finite() && tol > 0.0) {
            return Err(ConfigError::Invalid(format!("tolerance must be positive, got {tol}")));
        }
        let mark = match (mark, &mesh) {
            (Some(MarkArg::File), MeshSource::Catalog(_)) => {
                return Err(ConfigError::Invalid("`--mark file` needs a mesh file".into()))
            }
            (Some(m), _) => m,
            (None, MeshSource::Catalog(_)) => MarkArg::None,
            (None, MeshSource::File(_)) => MarkArg::File,
        };
        Ok(Self { command, mesh, family, mark, tol, format, strict, dump_operators, metric })
    }

    pub fn load_pair(&self) -> Result<RelativePair<f64>, ConfigError> {
        let mode = match self.mark {
            MarkArg::None => Some(MarkMode::None),
            MarkArg::Full => Some(MarkMode::Full),
            MarkArg::Half => Some(MarkMode::Half),
            MarkArg::File => None,
        };
        match &self.mesh {
            MeshSource::Catalog(key) => catalog::generate(key, mode.unwrap_or(MarkMode::None))
                .map_err(|source| ConfigError::Mesh { context: format!("catalog:{key}"), source }),
            MeshSource::File(path) => {
                let pair = parse_mesh_file(path)?;
                match mode {
                    None => Ok(pair),
                    Some(m) => catalog::remark(&pair, m)
                        .map_err(|source| ConfigError::Mesh { context: path.display().to_string(), source }),
                }
            }
        }
    }
}

/// Read a mesh file: `ambient_dim`, `vertices`, `cells` and optionally `marked`.
pub fn parse_mesh_file(path: &Path) -> Result<RelativePair<f64>, ConfigError> {
    let name = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: name.clone(), source })?;
    parse_mesh_text(&text, &name)
}

pub fn parse_mesh_text(text: &str, name: &str) -> Result<RelativePair<f64>, ConfigError> {
    let file: MeshFile = serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
        path: name.to_string(),
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    file.into_pair().map_err(|source| ConfigError::Mesh { context: name.to_string(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE: &str = r#"{"ambient_dim": 2, "vertices": [[0,0],[1,0],[0,1]], "cells": [[0,1,2]]}"#;

    fn cfg(mesh: &str, family: &str, degree: Option<u32>, mark: Option<MarkArg>, tol: Option<f64>) -> Result<RunConfig, ConfigError> {
        RunConfig::new("betti", MeshSource::parse(mesh), family, degree, mark, tol, Format::Table, false, None, Metric::Weighted)
    }

    #[test]
    fn minimal_triangle_file() {
        let pair = parse_mesh_text(TRIANGLE, "t.json").unwrap();
        assert_eq!((pair.num_simplices(0), pair.num_simplices(1), pair.num_simplices(2)), (3, 3, 1));
        assert_eq!(pair.betti_numbers(), vec![1, 0, 0]);
    }

    #[test]
    fn marked_full_boundary_is_kept() {
        let text = r#"{"ambient_dim": 2, "vertices": [[0,0],[1,0],[0,1]], "cells": [[0,1,2]],
                       "marked": [[0,1],[1,2],[0,2]]}"#;
        let pair = parse_mesh_text(text, "t.json").unwrap();
        assert_eq!(pair.marked_counts(), vec![3, 3, 0]);
        assert_eq!(pair.betti_numbers(), vec![0, 0, 1]);
    }

    #[test]
    fn bad_index_names_the_cell() {
        let text = r#"{"ambient_dim": 2, "vertices": [[0,0],[1,0],[0,1]], "cells": [[0,1,7]]}"#;
        let err = parse_mesh_text(text, "bad.json").unwrap_err().to_string();
        assert!(err.contains("bad.json") && err.contains("[0, 1, 7]"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_a_position() {
        let err = parse_mesh_text("{\n  \"ambient_dim\": 2,\n  \"vertices\": [[0,0],,]\n}", "x.json").unwrap_err();
        match err {
            ConfigError::Syntax { line, .. } => assert_eq!(line, 3),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn config_validation() {
        assert!(cfg("catalog:triangle", "whitney", None, None, Some(0.0)).is_err());
        assert!(cfg("catalog:triangle", "whitney", None, None, Some(f64::NAN)).is_err());
        assert!(cfg("catalog:triangle", "trimmed", Some(0), None, None).is_err());
        assert!(cfg("catalog:triangle", "whitney", Some(2), None, None).is_err());
        assert!(cfg("catalog:triangle", "whitney", None, Some(MarkArg::File), None).is_err());
        let c = cfg("catalog:triangle", "trimmed_p_minus", Some(2), None, None).unwrap();
        assert_eq!(c.family, Family::TrimmedP(2));
        assert_eq!(c.mark, MarkArg::None);
        assert_eq!(c.tol, DEFAULT_TOL);
        assert_eq!(cfg("m.json", "full(2)", None, None, None).unwrap().mark, MarkArg::File);
    }
}
