use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dist::{Classifier, ConstantClassifier, LabeledSample, Trainer};
use crate::error::{Error, Result};
use crate::induced::{DEFAULT_ALPHA, DEFAULT_TRIALS};
use crate::learners::{
    finite_erm, fit_spline_first_occurrence, hinge_erm_balls, k_nn, limited_memory_1nn, one_nn,
    spline_classifier, MemoryBudget, TableClassifier,
};
use crate::synth::{DistributionSpec, Generated};

/// A learning algorithm by name, with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algo", rename_all = "kebab-case")]
pub enum AlgoSpec {
    OneNn,
    /// `neighbors` is the k of k-NN; `k` in a teacher section counts teachers.
    KNn { neighbors: usize },
    /// ERM over all labelings of the distribution's support.
    FiniteErm,
    /// Hinge ERM over the ball family of a clustered-balls distribution.
    HingeErmBalls,
    /// Interpolating 1D spline; repeated x-values keep their first label.
    Spline,
    #[serde(rename = "limited-memory-1nn")]
    LimitedMemory1nn { bits: u64, bits_per_coord: u64 },
    Constant { label: usize },
    /// Ignores the sample and returns f*_D.
    BayesOracle,
    /// Ignores the sample and returns a label different from f*_D everywhere.
    AntiBayes,
    /// The constant classifier predicting the first sample label.
    FirstLabel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TeacherConfig {
    #[serde(flatten)]
    pub algo: AlgoSpec,
    pub m: usize,
    #[serde(default = "one")]
    pub k: usize,
    #[serde(default)]
    pub overlapping: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudentConfig {
    #[serde(flatten)]
    pub algo: AlgoSpec,
    pub m_prime: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    CertifySampler,
    CertifyTeacher,
    CertifyLearner,
    EnsembleInfer,
    Epl,
    Rpl,
    SweepTeachers,
    LowerBound,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { epsilon: default_epsilon(), tau: default_tau(), alpha: DEFAULT_ALPHA }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub k_values: Vec<usize>,
    /// The pipeline run at every k: ensemble-infer, epl or rpl.
    pub inner: Pipeline,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowerBoundConfig {
    pub big_m: usize,
    pub m_values: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<DistributionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub teacher: Option<TeacherConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub student: Option<StudentConfig>,
    pub pipeline: Pipeline,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_bound: Option<LowerBoundConfig>,
}

fn one() -> usize {
    1
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

fn default_epsilon() -> f64 {
    0.05
}

fn default_tau() -> f64 {
    0.1
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Structural checks that do not need the distribution.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(config_err("trials must be positive"));
        }
        let t = &self.tolerances;
        if !(t.epsilon > 0.0 && t.epsilon < 1.0) {
            return Err(config_err(format!("epsilon must lie in (0,1), got {}", t.epsilon)));
        }
        if !(0.0..1.0).contains(&t.tau) {
            return Err(config_err(format!("tau must lie in [0,1), got {}", t.tau)));
        }
        if !(t.alpha > 0.0 && t.alpha < 1.0) {
            return Err(config_err(format!("alpha must lie in (0,1), got {}", t.alpha)));
        }
        if self.pipeline == Pipeline::LowerBound {
            let lb = self.lower_bound.as_ref().ok_or_else(|| config_err("lower-bound pipeline needs a lower_bound section"))?;
            if lb.big_m == 0 {
                return Err(config_err("big_m must be positive"));
            }
            return Ok(());
        }
        if self.distribution.is_none() {
            return Err(config_err("missing distribution"));
        }
        let teacher = self.teacher.as_ref().ok_or_else(|| config_err("missing teacher"))?;
        if teacher.m == 0 || teacher.k == 0 {
            return Err(config_err("teacher m and k must be positive"));
        }
        let inner = match self.pipeline {
            Pipeline::SweepTeachers => {
                let sweep = self.sweep.as_ref().ok_or_else(|| config_err("sweep-teachers needs a sweep section"))?;
                if sweep.k_values.is_empty() {
                    return Err(config_err("sweep k_values is empty"));
                }
                let mut seen = sweep.k_values.clone();
                seen.sort_unstable();
                if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
                    return Err(config_err(format!("duplicate k value {}", w[0])));
                }
                if seen[0] == 0 {
                    return Err(config_err("k values must be positive"));
                }
                if !matches!(sweep.inner, Pipeline::EnsembleInfer | Pipeline::Epl | Pipeline::Rpl) {
                    return Err(config_err("sweep inner pipeline must be ensemble-infer, epl or rpl"));
                }
                sweep.inner
            }
            p => p,
        };
        if matches!(inner, Pipeline::Epl | Pipeline::Rpl) {
            let student = self.student.as_ref().ok_or_else(|| config_err("epl/rpl need a student"))?;
            if student.m_prime == 0 {
                return Err(config_err("student m_prime must be positive"));
            }
        }
        Ok(())
    }
}

type BoxedClassifier = Result<Box<dyn Classifier>>;

/// Resolve an algorithm against the generated distribution it will run on.
pub fn build_trainer(algo: &AlgoSpec, g: &Generated) -> Result<Box<dyn Trainer>> {
    let d = Arc::new(g.distribution.clone());
    let metric = d.metric();
    let binary = || {
        if d.num_labels() == 2 {
            Ok(())
        } else {
            Err(config_err(format!("{algo:?} needs binary labels")))
        }
    };
    Ok(match algo.clone() {
        AlgoSpec::OneNn => Box::new(move |s: &LabeledSample| -> BoxedClassifier { Ok(Box::new(one_nn(s, metric)?)) }),
        AlgoSpec::KNn { neighbors: k } => {
            if k == 0 || k % 2 == 0 {
                return Err(config_err(format!("k-nn needs an odd neighbor count, got {k}")));
            }
            Box::new(move |s: &LabeledSample| -> BoxedClassifier { Ok(Box::new(k_nn(s, k, metric)?)) })
        }
        AlgoSpec::FiniteErm => {
            let support = d.points();
            Box::new(move |s: &LabeledSample| -> BoxedClassifier { Ok(Box::new(finite_erm(s, &support)?)) })
        }
        AlgoSpec::HingeErmBalls => {
            binary()?;
            let spec = g
                .balls
                .clone()
                .ok_or_else(|| config_err("hinge-erm-balls needs a clustered-balls distribution"))?;
            Box::new(move |s: &LabeledSample| -> BoxedClassifier { Ok(Box::new(hinge_erm_balls(s, &spec)?)) })
        }
        AlgoSpec::Spline => {
            binary()?;
            if metric.dim != 1 {
                return Err(config_err("spline needs a one-dimensional distribution"));
            }
            Box::new(|s: &LabeledSample| -> BoxedClassifier {
                Ok(Box::new(spline_classifier(fit_spline_first_occurrence(s)?)))
            })
        }
        AlgoSpec::LimitedMemory1nn { bits, bits_per_coord } => {
            let budget = MemoryBudget { bits, bits_per_coord };
            if budget.capacity(metric.dim, d.num_labels()) == 0 {
                return Err(config_err(format!("memory budget of {bits} bits holds no item")));
            }
            Box::new(move |s: &LabeledSample| -> BoxedClassifier {
                Ok(Box::new(limited_memory_1nn(s, budget, metric)?))
            })
        }
        AlgoSpec::Constant { label } => {
            if label >= d.num_labels() {
                return Err(config_err(format!("label {label} out of range")));
            }
            Box::new(move |_: &LabeledSample| -> BoxedClassifier { Ok(Box::new(ConstantClassifier { label })) })
        }
        AlgoSpec::BayesOracle => {
            let d = d.clone();
            Box::new(move |_: &LabeledSample| -> BoxedClassifier { Ok(Box::new(d.bayes_optimal())) })
        }
        AlgoSpec::AntiBayes => {
            let c = d.num_labels();
            let labels = d.bayes_labels().into_iter().map(|y| (y + 1) % c).collect();
            let table = TableClassifier::new(d.points(), labels)?;
            Box::new(move |_: &LabeledSample| -> BoxedClassifier { Ok(Box::new(table.clone())) })
        }
        AlgoSpec::FirstLabel => Box::new(|s: &LabeledSample| -> BoxedClassifier {
            let (_, label) = s.items.first().ok_or(Error::EmptySample)?;
            Ok(Box::new(ConstantClassifier { label: *label }))
        }),
    })
}

/// The distribution of a config, generated.
pub fn generate(config: &ExperimentConfig) -> Result<Generated> {
    config
        .distribution
        .as_ref()
        .ok_or_else(|| config_err("missing distribution"))?
        .generate(config.seed)
        .map_err(|e| match e {
            Error::InvalidParameter(msg) | Error::InvalidDistribution(msg) => config_err(msg),
            other => other,
        })
}
