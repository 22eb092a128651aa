//! Machine-readable detection reports.
//!
//! A report carries one row per analyzed wire plus enough run metadata to
//! reproduce the analysis byte for byte. Serialization order is the struct
//! order below and is part of the reproducibility contract; the published
//! schema lives in `schemas/report.schema.json`.

use serde::{Deserialize, Serialize};

use htdet_core::cluster::{ClusterSpace, PointRole, SuspectWarning};
use htdet_core::eval::EvalMetrics;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl Default for ToolInfo {
    fn default() -> Self {
        ToolInfo {
            name: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Everything needed to re-run the identical analysis.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunInfo {
    pub waves: String,
    pub netlist_name: String,
    /// FNV-1a of the netlist file, when `--netlist` was supplied.
    pub netlist_digest: Option<String>,
    pub seed: u64,
    pub cycles: u64,
    pub stimulus_digest: String,
    pub space: ClusterSpace,
    pub radius: f64,
    pub min_pts: usize,
    pub include_low_noise: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WireRow {
    pub wire: String,
    pub entropy: f64,
    pub p_transition: f64,
    /// Cluster id, or null for noise points.
    pub cluster: Option<usize>,
    pub role: PointRole,
    pub suspect: bool,
    pub symmetry_excluded: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TestgenSection {
    pub mi_digest: String,
    pub chosen_scpis: Vec<String>,
    pub cover_size: usize,
    pub optimal: bool,
    pub uncoverable: Vec<String>,
    pub hold_value: String,
    pub spec_path: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DetectionReport {
    pub tool: ToolInfo,
    pub run: RunInfo,
    /// One row per wire in the analysis universe, in canonical clustering
    /// order (ascending clustered value, ties by wire name).
    pub rows: Vec<WireRow>,
    /// Suspect wire names, ascending entropy.
    pub suspects: Vec<String>,
    pub warnings: Vec<SuspectWarning>,
    pub eval: Option<EvalMetrics<f64>>,
    pub testgen: Option<TestgenSection>,
}

impl DetectionReport {
    pub fn to_json_bytes(&self) -> anyhow::Result<Vec<u8>> {
        let mut out = serde_json::to_vec_pretty(self)?;
        out.push(b'\n');
        Ok(out)
    }

    pub fn universe(&self) -> Vec<String> {
        self.rows.iter().map(|r| r.wire.clone()).collect()
    }
}
