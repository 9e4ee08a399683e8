use std::fmt;
use std::path::Path;

use quasispec::{GraphDescriptor, InfiniteGraph, RuleSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Census,
    Frequencies,
    Moments,
    Ids,
    GroundState,
    Eigenspace,
    Logdet,
    Converge,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Census => "census",
            Task::Frequencies => "frequencies",
            Task::Moments => "moments",
            Task::Ids => "ids",
            Task::GroundState => "ground-state",
            Task::Eigenspace => "eigenspace",
            Task::Logdet => "logdet",
            Task::Converge => "converge",
        }
    }

    pub fn needs_operator(self) -> bool {
        !matches!(self, Task::Census | Task::Frequencies)
    }
}

/// Task parameters and check tolerances. Absent checks are skipped.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskParams {
    /// Pattern radius for census and frequencies.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<u32>,
    /// Moment order.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    /// Spectral parameter for eigenspace runs, as a rational string.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<String>,
    /// Named analytic reference curve (`z_laplacian`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    /// Expected moment limit, as a rational string.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expect: Option<String>,
    /// Expected sorted top-level census frequencies.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expect_frequencies: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_density: Option<String>,
    /// Final reference distance must be at most this over `|Q_top|`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_final_distance_per_size: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identity_tol: Option<f64>,
    /// Frequencies may move by at most this over `|Q_prev|` between levels.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequency_slack: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check_cauchy: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub merge_tol_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariance_samples: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub task: Task,
    pub graph: GraphDescriptor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<RuleSpec>,
    pub levels: Vec<u32>,
    #[serde(default)]
    pub params: TaskParams,
    /// Overrides the graph seed when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            let suffix = format!(" at line {} column {}", e.line(), e.column());
            let msg = msg.strip_suffix(&suffix).unwrap_or(&msg);
            ConfigError(format!("{origin}:{}:{}: {msg}", e.line(), e.column()))
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn descriptor(&self) -> GraphDescriptor {
        let mut d = self.graph.clone();
        if let Some(s) = self.seed {
            d.seed = s;
        }
        d
    }

    /// Checks everything that can fail before any computation starts.
    pub fn validate(&self) -> Result<InfiniteGraph, ConfigError> {
        let fail = |m: String| Err(ConfigError(format!("{}: {m}", self.name)));
        if self.levels.is_empty() {
            return fail("levels must not be empty".into());
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return fail(format!("levels must be strictly increasing, got {:?}", self.levels));
        }
        let g = match InfiniteGraph::from_descriptor(&self.descriptor()) {
            Ok(g) => g,
            Err(e) => return fail(e.to_string()),
        };
        if self.task.needs_operator() && self.operator.is_none() {
            return fail(format!("task {} needs an operator", self.task.name()));
        }
        if self.task == Task::Converge && self.levels.len() < 3 {
            return fail("converge needs at least three levels".into());
        }
        if let Some(l) = &self.params.lambda {
            if let Err(e) = quasispec::rational::parse(l) {
                return fail(format!("lambda: {e}"));
            }
        }
        for s in [&self.params.expect, &self.params.min_density].into_iter().flatten() {
            if let Err(e) = quasispec::rational::parse(s) {
                return fail(e.to_string());
            }
        }
        if let Some(r) = &self.params.reference {
            if r != "z_laplacian" {
                return fail(format!("unknown reference curve {r:?}"));
            }
        }
        Ok(g)
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Configs shipped with the binary and run by `verify`.
pub const BUNDLED: &[(&str, &str)] = &[
    ("decorated_census", include_str!("../configs/decorated_census.json")),
    ("decorated_logdet", include_str!("../configs/decorated_logdet.json")),
    ("fibonacci_frequencies", include_str!("../configs/fibonacci_frequencies.json")),
    ("fibonacci_ids", include_str!("../configs/fibonacci_ids.json")),
    ("pendant_census", include_str!("../configs/pendant_census.json")),
    ("pendant_eigenspace", include_str!("../configs/pendant_eigenspace.json")),
    ("pendant_ground_state", include_str!("../configs/pendant_ground_state.json")),
    ("z2_adjacency_moments", include_str!("../configs/z2_adjacency_moments.json")),
    ("z_adjacency_moments", include_str!("../configs/z_adjacency_moments.json")),
    ("z_laplacian_converge", include_str!("../configs/z_laplacian_converge.json")),
    ("z_laplacian_ids", include_str!("../configs/z_laplacian_ids.json")),
    ("z_laplacian_logdet", include_str!("../configs/z_laplacian_logdet.json")),
];

pub fn bundled() -> Vec<ExperimentConfig> {
    BUNDLED.iter().map(|(name, text)| ExperimentConfig::parse(text, name).expect("bundled config parses")).collect()
}
