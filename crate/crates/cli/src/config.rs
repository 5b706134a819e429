use std::path::Path;

use serde::{Deserialize, Serialize};
use wtoda_core::algebra::{build_root_system, RootSystem, Variant};
use wtoda_core::quadrature::QuadratureSpec;
use wtoda_core::transform::{Gallery, TransformSpec};
use wtoda_core::whittaker::Method;

use crate::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Group {
    SL2,
    SL3,
    GL2,
    GL3,
}

impl Group {
    pub fn n(self) -> usize {
        match self {
            Group::SL2 | Group::GL2 => 2,
            Group::SL3 | Group::GL3 => 3,
        }
    }

    pub fn variant(self) -> Variant {
        match self {
            Group::SL2 | Group::SL3 => Variant::SL,
            Group::GL2 | Group::GL3 => Variant::GL,
        }
    }

    pub fn rank(self) -> usize {
        self.n() - 1
    }

    pub fn root_system(self) -> RootSystem {
        build_root_system(self.n(), self.variant()).expect("n >= 2")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Inequalities,
    GkRatio,
    Density,
    Eigen,
    Identities,
    Commutation,
    Connection,
    Roundtrip,
    Parseval,
    Probe,
}

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::Inequalities,
        Suite::GkRatio,
        Suite::Density,
        Suite::Eigen,
        Suite::Identities,
        Suite::Commutation,
        Suite::Connection,
        Suite::Roundtrip,
        Suite::Parseval,
        Suite::Probe,
    ];

    pub fn randomized(self) -> bool {
        matches!(self, Suite::Inequalities | Suite::Identities | Suite::Commutation)
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::Inequalities => "inequalities",
            Suite::GkRatio => "gk_ratio",
            Suite::Density => "density",
            Suite::Eigen => "eigen",
            Suite::Identities => "identities",
            Suite::Commutation => "commutation",
            Suite::Connection => "connection",
            Suite::Roundtrip => "roundtrip",
            Suite::Parseval => "parseval",
            Suite::Probe => "probe",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<String>,
    /// Adds wall-clock seconds to reports, which makes them run-dependent.
    #[serde(default)]
    pub record_runtime: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    /// Explicit ν list (ambient coordinates); overrides the grid.
    pub nu: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_density_radius")]
    pub radius: f64,
    #[serde(default = "default_density_points")]
    pub points_per_dim: usize,
}

fn default_density_radius() -> f64 {
    20.0
}

fn default_density_points() -> usize {
    201
}

impl Default for DensityConfig {
    fn default() -> Self {
        DensityConfig { nu: None, radius: default_density_radius(), points_per_dim: default_density_points() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhittakerConfig {
    /// Spectral parameter in ambient coordinates.
    pub nu: Vec<f64>,
    #[serde(default = "default_h_radius")]
    pub h_radius: f64,
    #[serde(default = "default_h_points")]
    pub h_points_per_dim: usize,
    pub order: Option<usize>,
    pub method: Option<Method>,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
}

fn default_h_radius() -> f64 {
    2.0
}

fn default_h_points() -> usize {
    21
}

fn default_spacing() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformConfig {
    #[serde(default = "default_gallery")]
    pub u: Gallery,
    pub spec: Option<TransformSpec>,
    /// Transform constant; defaults to (2π)^{−dim 𝔞}/|W|.
    pub calibration: Option<f64>,
    #[serde(default = "default_eval_radius")]
    pub eval_radius: f64,
    #[serde(default = "default_eval_points")]
    pub eval_points_per_dim: usize,
}

fn default_gallery() -> Gallery {
    Gallery::Gaussian
}

fn default_eval_radius() -> f64 {
    2.0
}

fn default_eval_points() -> usize {
    21
}

impl Default for TransformConfig {
    fn default() -> Self {
        TransformConfig {
            u: default_gallery(),
            spec: None,
            calibration: None,
            eval_radius: default_eval_radius(),
            eval_points_per_dim: default_eval_points(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TodaConfig {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_steps() -> usize {
    10_000
}

fn default_record_every() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_lemma_samples")]
    pub lemma_samples: usize,
    #[serde(default = "default_random_functions")]
    pub random_functions: usize,
    #[serde(default = "default_probe_epsilon")]
    pub probe_epsilon: f64,
    #[serde(default = "default_probe_radii")]
    pub probe_radii: Vec<f64>,
}

fn default_lemma_samples() -> usize {
    10_000
}

fn default_random_functions() -> usize {
    10
}

fn default_probe_epsilon() -> f64 {
    0.1
}

fn default_probe_radii() -> Vec<f64> {
    vec![4.0, 8.0, 16.0, 32.0, 64.0]
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            lemma_samples: default_lemma_samples(),
            random_functions: default_random_functions(),
            probe_epsilon: default_probe_epsilon(),
            probe_radii: default_probe_radii(),
        }
    }
}

/// Top-level run configuration (JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub group: Group,
    /// Character values ξ_α on the simple roots; the Toda couplings are ξ_α².
    pub xi: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub quadrature: Option<QuadratureSpec>,
    pub suites: Option<Vec<Suite>>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub density: DensityConfig,
    pub whittaker: Option<WhittakerConfig>,
    #[serde(default)]
    pub transform: TransformConfig,
    pub toda: Option<TodaConfig>,
    #[serde(default)]
    pub verify: VerifyConfig,
}

/// ξ used by the transform when the config gives none: small couplings keep
/// the spectral support needed on |h| ≤ 2 inside the default ν-box.
pub const DEFAULT_TRANSFORM_XI: f64 = 0.1;

impl RunConfig {
    pub fn from_str(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_str(&text)
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        let rank = self.group.rank();
        if let Some(xi) = &self.xi {
            if xi.len() != rank {
                return bad(format!("xi needs {rank} entries for {:?}, got {}", self.group, xi.len()));
            }
            if xi.iter().any(|x| !x.is_finite()) {
                return bad("xi entries must be finite".into());
            }
        }
        if let Some(q) = &self.quadrature {
            q.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        let d = &self.density;
        if !(d.radius > 0.0) || d.points_per_dim < 2 {
            return bad("density grid needs a positive radius and at least 2 points".into());
        }
        if let Some(list) = &d.nu {
            if list.iter().any(|nu| nu.len() != self.group.n()) {
                return bad(format!("density ν entries need {} coordinates", self.group.n()));
            }
        }
        if let Some(w) = &self.whittaker {
            if w.nu.len() != self.group.n() {
                return bad(format!("whittaker.nu needs {} coordinates", self.group.n()));
            }
            if !(w.h_radius > 0.0) || w.h_points_per_dim < 1 || !(w.spacing > 0.0) {
                return bad("whittaker grid needs a positive radius, spacing and at least one point".into());
            }
        }
        if let Some(spec) = &self.transform.spec {
            spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        if self.transform.calibration.is_some_and(|c| !(c > 0.0)) {
            return bad("transform.calibration must be positive".into());
        }
        if let Some(t) = &self.toda {
            if t.q.len() != self.group.n() || t.p.len() != self.group.n() {
                return bad(format!("toda.q and toda.p need {} entries", self.group.n()));
            }
            if !(t.dt > 0.0) || t.steps == 0 || t.record_every == 0 {
                return bad("toda needs dt > 0, steps > 0 and record_every > 0".into());
            }
        }
        let v = &self.verify;
        if v.lemma_samples == 0 || v.random_functions == 0 || v.probe_radii.len() < 2 {
            return bad("verify needs lemma_samples > 0, random_functions > 0 and two probe radii".into());
        }
        Ok(())
    }

    pub fn xi_or(&self, default: f64) -> Vec<f64> {
        self.xi.clone().unwrap_or_else(|| vec![default; self.group.rank()])
    }

    pub fn couplings_or(&self, default: f64) -> Vec<f64> {
        self.xi_or(default).iter().map(|x| x * x).collect()
    }

    pub fn selected_suites(&self) -> Vec<Suite> {
        let mut s = self.suites.clone().unwrap_or_else(|| Suite::ALL.to_vec());
        s.sort();
        s.dedup();
        s
    }
}
