//! Offline squeezing needed to build graph states.
//!
//! The generation matrix `M(s)` of a graph is symplectic, so by the
//! Bloch–Messiah decomposition it can be realised as passive optics acting on
//! `n` independently squeezed modes whose squeezing factors are the top `n`
//! singular values of `M(s)`. For large `s` these approach
//! `s_i = s √(1 + k_i²)` with `k_i` the singular values of the adjacency
//! matrix, and every `k_i` is bounded by the maximum degree, giving the
//! overhead `K = √(1 + maxdeg²)`.
//!
//! Squeezing is quoted in decibels as `10 log₁₀(s²)`.

use std::fmt;
use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gaussian::{generation_matrix, GaussianError};
use crate::graph::Graph;

/// Online squeezing per squeezer used to implement one CZ gate.
pub const CZ_SQUEEZER_DB: f64 = 4.18;
/// Online squeezers needed per CZ gate.
pub const SQUEEZERS_PER_CZ: usize = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResourceError {
    #[error("accuracy must be positive, got {0}")]
    NonPositiveAccuracy(f64),
    #[error("singular value decomposition did not converge")]
    SvdFailed,
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
}

pub fn db(s: f64) -> f64 {
    10.0 * (s * s).log10()
}

fn check_accuracy(s: f64) -> Result<(), ResourceError> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(ResourceError::NonPositiveAccuracy(s))
    }
}

fn singular_values_desc(m: DMatrix<f64>) -> Result<Vec<f64>, ResourceError> {
    let svd = m
        .try_svd(false, false, 1e-12, 0)
        .ok_or(ResourceError::SvdFailed)?;
    let mut v: Vec<f64> = svd.singular_values.iter().cloned().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(v)
}

/// Singular values of the adjacency matrix, descending.
pub fn adjacency_singular_values(g: &Graph) -> Result<Vec<f64>, ResourceError> {
    singular_values_desc(g.adjacency_matrix())
}

/// `s √(1 + k_i²)` for each adjacency singular value, descending.
pub fn theorem2_squeezing(g: &Graph, s: f64) -> Result<Vec<f64>, ResourceError> {
    check_accuracy(s)?;
    Ok(adjacency_singular_values(g)?
        .into_iter()
        .map(|k| s * (1.0 + k * k).sqrt())
        .collect())
}

/// `√(1 + maxdeg²)`.
pub fn overhead_bound(g: &Graph) -> f64 {
    let d = g.max_degree() as f64;
    (1.0 + d * d).sqrt()
}

/// `√(1 + m²)` for an `m`-rail encoding.
pub fn rail_overhead(m: usize) -> f64 {
    let m = m as f64;
    (1.0 + m * m).sqrt()
}

/// Closed-form singular values `(λ₊, λ₋)` of the two-mode generation matrix.
pub fn two_mode_lambda(s: f64) -> Result<(f64, f64), ResourceError> {
    check_accuracy(s)?;
    let s4 = s.powi(4);
    let root = (1.0 + 4.0 * s4 * s4).sqrt();
    let denom = std::f64::consts::SQRT_2 * s;
    let plus = (1.0 + 2.0 * s4 + root).sqrt() / denom;
    // 1 + 2s⁴ − √(1 + 4s⁸) cancels badly for large s; use λ₋ = 1/λ₊
    Ok((plus, 1.0 / plus))
}

/// All `2n` singular values of `M(s)`, descending.
pub fn exact_singular_values(g: &Graph, s: f64) -> Result<Vec<f64>, ResourceError> {
    check_accuracy(s)?;
    singular_values_desc(generation_matrix(g, s)?.l)
}

/// How the decompositional cost is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostMode {
    /// `s √(1 + k_i²)` per mode.
    Theorem2,
    /// `K s` on every mode.
    Bound,
    /// Top `n` singular values of `M(s)`.
    ExactSvd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostConfig {
    pub cz_squeezer_db: f64,
    pub squeezers_per_cz: usize,
}

impl Default for CostConfig {
    fn default() -> Self {
        CostConfig {
            cz_squeezer_db: CZ_SQUEEZER_DB,
            squeezers_per_cz: SQUEEZERS_PER_CZ,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub n: usize,
    pub edges: usize,
    pub max_degree: usize,
    pub accuracy: f64,
    pub mode: CostMode,
    pub adjacency_singulars: Vec<f64>,
    /// Offline squeezing per mode under `mode`, descending.
    pub per_mode_squeeze: Vec<f64>,
    /// Singular values of `M(s)`; only computed in exact mode.
    pub exact_singulars: Option<Vec<f64>>,
    pub overhead_bound: f64,
    pub db_per_mode: Vec<f64>,
    pub canonical_cost_db: f64,
    pub decompositional_cost_db: f64,
    pub savings_db: f64,
}

/// Canonical (offline `s` per mode plus online CZ squeezers) against
/// decompositional (offline squeezing then passive optics) cost.
pub fn cost_comparison(
    g: &Graph,
    s: f64,
    mode: CostMode,
    config: &CostConfig,
) -> Result<ResourceReport, ResourceError> {
    check_accuracy(s)?;
    let n = g.n();
    let k = adjacency_singular_values(g)?;
    let bound = overhead_bound(g);
    let mut exact = None;
    let per_mode: Vec<f64> = match mode {
        CostMode::Theorem2 => theorem2_squeezing(g, s)?,
        CostMode::Bound => vec![bound * s; n],
        CostMode::ExactSvd => {
            let sv = exact_singular_values(g, s)?;
            let top = sv[..n].to_vec();
            exact = Some(sv);
            top
        }
    };
    let db_per_mode: Vec<f64> = per_mode.iter().map(|&x| db(x)).collect();
    let canonical = n as f64 * db(s)
        + (g.edge_count() * config.squeezers_per_cz) as f64 * config.cz_squeezer_db;
    let decompositional: f64 = db_per_mode.iter().sum();
    Ok(ResourceReport {
        n,
        edges: g.edge_count(),
        max_degree: g.max_degree(),
        accuracy: s,
        mode,
        adjacency_singulars: k,
        per_mode_squeeze: per_mode,
        exact_singulars: exact,
        overhead_bound: bound,
        db_per_mode,
        canonical_cost_db: canonical,
        decompositional_cost_db: decompositional,
        savings_db: canonical - decompositional,
    })
}

/// Two-mode savings: exact `2 (4.18 − 10 log₁₀ 2)` and the value obtained
/// with `10 log₁₀ 2` rounded to 3 dB.
pub fn two_mode_savings(config: &CostConfig) -> (f64, f64) {
    let per = config.squeezers_per_cz as f64;
    let exact = per * (config.cz_squeezer_db - db(std::f64::consts::SQRT_2));
    let rounded = per * (config.cz_squeezer_db - 3.0);
    (exact, rounded)
}

impl ResourceReport {
    pub fn csv_row(&self, graph_id: &str) -> CsvRow {
        CsvRow {
            graph_id: graph_id.to_string(),
            n: self.n,
            edges: self.edges,
            max_degree: self.max_degree,
            overhead_bound: self.overhead_bound,
            canonical_db: self.canonical_cost_db,
            decompositional_db: self.decompositional_cost_db,
            savings_db: self.savings_db,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub graph_id: String,
    pub n: usize,
    pub edges: usize,
    pub max_degree: usize,
    pub overhead_bound: f64,
    pub canonical_db: f64,
    pub decompositional_db: f64,
    pub savings_db: f64,
}

pub fn write_csv<W: Write>(rows: &[CsvRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

impl fmt::Display for ResourceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.mode {
            CostMode::Theorem2 => "theorem2",
            CostMode::Bound => "bound",
            CostMode::ExactSvd => "exact-svd",
        };
        writeln!(
            f,
            "graph: n={} |E|={} maxdeg={}  accuracy s={} ({:.4} dB)  mode={mode}",
            self.n,
            self.edges,
            self.max_degree,
            self.accuracy,
            db(self.accuracy)
        )?;
        writeln!(
            f,
            "overhead bound K = {:.6} (+{:.4} dB)",
            self.overhead_bound,
            db(self.overhead_bound)
        )?;
        writeln!(
            f,
            "{:>5} {:>12} {:>14} {:>10}",
            "mode", "k_i", "squeeze s_i", "dB"
        )?;
        for (i, (s_i, d)) in self
            .per_mode_squeeze
            .iter()
            .zip(&self.db_per_mode)
            .enumerate()
        {
            let k = self.adjacency_singulars.get(i).copied().unwrap_or(f64::NAN);
            writeln!(f, "{:>5} {:>12.6} {:>14.6} {:>10.4}", i + 1, k, s_i, d)?;
        }
        if let Some(sv) = &self.exact_singulars {
            let list: Vec<String> = sv.iter().map(|x| format!("{x:.6}")).collect();
            writeln!(f, "singular values of M(s): {}", list.join(" "))?;
        }
        writeln!(
            f,
            "canonical cost       {:>12.4} dB",
            self.canonical_cost_db
        )?;
        writeln!(
            f,
            "decompositional cost {:>12.4} dB",
            self.decompositional_cost_db
        )?;
        write!(f, "savings              {:>12.4} dB", self.savings_db)
    }
}
