//! Ensemble orchestration: named experiments, replica execution with
//! derived seeds, estimator summaries with explicit tolerances, and
//! JSON-lines persistence.

pub mod experiments;
pub mod persist;
pub mod stats;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::point::replica_seed;
use crate::{Error, Result};

/// Fraction of excluded replicas above which verdicts are not trusted.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    CdfScp,
    LlnStationary,
    InterfaceSlope,
    ShapeCheck,
    FluctChi,
    FluctXi,
    BetaPoisson,
    DensityProfile,
    AngleBounds,
    TailCheck,
    DeltaStraightness,
}

pub const ALL_EXPERIMENTS: [ExperimentId; 11] = [
    ExperimentId::CdfScp,
    ExperimentId::LlnStationary,
    ExperimentId::InterfaceSlope,
    ExperimentId::ShapeCheck,
    ExperimentId::FluctChi,
    ExperimentId::FluctXi,
    ExperimentId::BetaPoisson,
    ExperimentId::DensityProfile,
    ExperimentId::AngleBounds,
    ExperimentId::TailCheck,
    ExperimentId::DeltaStraightness,
];

impl ExperimentId {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentId::CdfScp => "cdf_scp",
            ExperimentId::LlnStationary => "lln_stationary",
            ExperimentId::InterfaceSlope => "interface_slope",
            ExperimentId::ShapeCheck => "shape_check",
            ExperimentId::FluctChi => "fluct_chi",
            ExperimentId::FluctXi => "fluct_xi",
            ExperimentId::BetaPoisson => "beta_poisson",
            ExperimentId::DensityProfile => "density_profile",
            ExperimentId::AngleBounds => "angle_bounds",
            ExperimentId::TailCheck => "tail_check",
            ExperimentId::DeltaStraightness => "delta_straightness",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ALL_EXPERIMENTS
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown experiment `{s}`")))
    }
}

/// Full description of one ensemble run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub experiment: ExperimentId,
    pub lambda: f64,
    pub rho: f64,
    pub horizon: f64,
    pub replicas: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.replicas < 1 {
            return Err(Error::invalid("replicas must be ≥ 1"));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::invalid("horizon must be > 0"));
        }
        if !(self.lambda >= 0.0) || !(self.rho >= 0.0) {
            return Err(Error::invalid("intensities must be ≥ 0"));
        }
        Ok(())
    }

    /// Default parameters for an experiment, matching the acceptance
    /// tolerances the verdicts are judged against.
    pub fn defaults(experiment: ExperimentId) -> ExperimentSpec {
        let (lambda, rho, horizon, replicas) = match experiment {
            ExperimentId::CdfScp => (0.5, 1.0, 500.0, 1000),
            ExperimentId::LlnStationary => (1.0, 1.0, 500.0, 200),
            ExperimentId::InterfaceSlope => (1.0, 1.0, 500.0, 200),
            ExperimentId::ShapeCheck => (0.0, 0.0, 200.0, 100),
            ExperimentId::FluctChi => (0.0, 0.0, 400.0, 300),
            ExperimentId::FluctXi => (1.0, 1.0, 400.0, 300),
            ExperimentId::BetaPoisson => (1.0, 1.0, 200.0, 100),
            ExperimentId::DensityProfile => (0.5, 1.0, 500.0, 36),
            ExperimentId::AngleBounds => (0.5, 1.0, 100.0, 100),
            ExperimentId::TailCheck => (0.0, 0.0, 200.0, 1000),
            ExperimentId::DeltaStraightness => (0.0, 0.0, 200.0, 20),
        };
        ExperimentSpec {
            experiment,
            lambda,
            rho,
            horizon,
            replicas,
            seed: 0,
            out_dir: None,
        }
    }
}

/// One replica's persisted observables, or the reason it was excluded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaRecord {
    pub index: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excluded: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub observables: BTreeMap<String, Value>,
}

/// A named point estimate, optionally with uncertainty and a theoretical
/// reference value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
}

/// A pass/fail judgement that always carries its tolerance and sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub observed: f64,
    pub tolerance: String,
    pub pass: bool,
    pub replicas: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub estimates: Vec<Estimate>,
    pub verdicts: Vec<Verdict>,
    pub excluded: usize,
    pub excluded_fraction: f64,
    /// False when too many replicas were excluded for the verdicts to mean
    /// anything.
    pub valid: bool,
    pub wall_clock_secs: f64,
}

impl Summary {
    pub fn all_pass(&self) -> bool {
        self.valid && self.verdicts.iter().all(|v| v.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub spec: ExperimentSpec,
    pub replicas: Vec<ReplicaRecord>,
    pub summary: Summary,
}

/// Runs every replica of the spec, persists the raw records if an output
/// directory is set, then evaluates the estimators and verdicts.
pub fn run_ensemble(spec: &ExperimentSpec) -> Result<ExperimentRecord> {
    spec.validate()?;
    experiments::validate_params(spec)?;
    let started = Instant::now();
    let mut replicas = Vec::with_capacity(spec.replicas);
    for index in 0..spec.replicas {
        let seed = replica_seed(spec.seed, index as u64);
        let record = match experiments::run_replica(spec, seed) {
            Ok(observables) => ReplicaRecord {
                index,
                seed,
                excluded: None,
                observables,
            },
            Err(e @ (Error::Truncated(_) | Error::NoSinkExit)) => ReplicaRecord {
                index,
                seed,
                excluded: Some(e.to_string()),
                observables: BTreeMap::new(),
            },
            Err(e) => return Err(e),
        };
        replicas.push(record);
    }
    if let Some(dir) = &spec.out_dir {
        persist::write_replicas(dir, spec, &replicas)?;
    }
    let summary = summarize(spec, &replicas, started.elapsed().as_secs_f64())?;
    let record = ExperimentRecord {
        spec: spec.clone(),
        replicas,
        summary,
    };
    if let Some(dir) = &spec.out_dir {
        persist::write_summary(dir, &record)?;
    }
    Ok(record)
}

/// Recomputes estimates and verdicts from persisted replicas; pure in the
/// observables, so a reloaded record summarizes identically.
pub fn summarize(
    spec: &ExperimentSpec,
    replicas: &[ReplicaRecord],
    wall_clock_secs: f64,
) -> Result<Summary> {
    let excluded = replicas.iter().filter(|r| r.excluded.is_some()).count();
    let excluded_fraction = excluded as f64 / replicas.len().max(1) as f64;
    let (estimates, verdicts) = experiments::evaluate(spec, replicas)?;
    Ok(Summary {
        estimates,
        verdicts,
        excluded,
        excluded_fraction,
        valid: excluded_fraction <= MAX_EXCLUDED_FRACTION,
        wall_clock_secs,
    })
}
