use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::dist::{Classifier, Label, LabeledSample, NoisyDistribution, Trainer};
use crate::distill::{distill_with_table, train_pool, train_pool_overlapping, LabelingMode};
use crate::error::{Error, Result};
use crate::expcli::config::{build_trainer, generate, ExperimentConfig, Pipeline};
use crate::induced::{
    certify_learner_from_losses, certify_sampler, certify_teacher, estimate_induced, exact_induced,
    hoeffding_halfwidth, lower_bound_demo, lower_bound_gamma, Certificate, MonteCarlo, Verdict,
};
use crate::dist::ConstantClassifier;
use crate::parallel::map_indexed;
use crate::seed::{derive_seed, stream};
use crate::synth::{gen_single_atom, Generated};

/// Row-normalized (Bayes label → predicted label) mass matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Confusion {
    pub matrix: Vec<Vec<f64>>,
    /// Bayes labels that no atom carries; their rows are all zero.
    pub empty_rows: Vec<Label>,
}

impl Confusion {
    /// Total off-diagonal mass, weighting each row by its class mass in `d`.
    pub fn off_diagonal_mass(&self, d: &NoisyDistribution) -> f64 {
        let mut class_mass = vec![0.0; d.num_labels()];
        for (i, a) in d.atoms().iter().enumerate() {
            class_mass[d.bayes_label(i)] += a.mass;
        }
        self.matrix
            .iter()
            .enumerate()
            .map(|(a, row)| class_mass[a] * row.iter().enumerate().filter(|&(b, _)| b != a).fold(0.0, |acc, (_, v)| acc + v))
            .sum()
    }
}

/// Confusion of a per-atom prediction distribution: entry (a, b) is the
/// mass predicted b among atoms whose Bayes label is a, over the mass of
/// Bayes label a.
pub fn confusion_from_conditionals(d: &NoisyDistribution, q: &[Vec<f64>]) -> Confusion {
    let c = d.num_labels();
    let mut matrix = vec![vec![0.0; c]; c];
    let mut row_mass = vec![0.0; c];
    for (i, atom) in d.atoms().iter().enumerate() {
        let a = d.bayes_label(i);
        row_mass[a] += atom.mass;
        for (b, &p) in q[i].iter().enumerate() {
            matrix[a][b] += atom.mass * p;
        }
    }
    let mut empty_rows = Vec::new();
    for (a, row) in matrix.iter_mut().enumerate() {
        if row_mass[a] > 0.0 {
            row.iter_mut().for_each(|v| *v /= row_mass[a]);
        } else {
            empty_rows.push(a);
        }
    }
    Confusion { matrix, empty_rows }
}

/// Confusion of a single classifier on the atoms of `d`.
pub fn confusion_matrix(d: &NoisyDistribution, h: &dyn Classifier) -> Result<Confusion> {
    let c = d.num_labels();
    let q: Vec<Vec<f64>> = d
        .predict_atoms(h)?
        .into_iter()
        .map(|y| {
            let mut row = vec![0.0; c];
            row[y] = 1.0;
            row
        })
        .collect();
    Ok(confusion_from_conditionals(d, &q))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub k: usize,
    pub mean_clean_loss: f64,
    pub ci_halfwidth: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBoundRow {
    pub m: usize,
    pub expected_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistributionSummary {
    pub atoms: usize,
    pub num_labels: usize,
    pub noise_rate: f64,
    pub margin: f64,
}

impl DistributionSummary {
    fn of(d: &NoisyDistribution) -> Self {
        DistributionSummary { atoms: d.len(), num_labels: d.num_labels(), noise_rate: d.noise_rate(), margin: d.margin(0.0) }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub certificates: Vec<Certificate>,
    pub losses: BTreeMap<String, f64>,
    pub confusion: Option<Confusion>,
    pub sweep_rows: Vec<SweepRow>,
    pub lower_bound_rows: Vec<LowerBoundRow>,
    pub distribution: Option<DistributionSummary>,
    /// Not serialized: outputs must depend on the config alone.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl ExperimentResult {
    fn new(config: &ExperimentConfig) -> Self {
        ExperimentResult {
            config: config.clone(),
            certificates: Vec::new(),
            losses: BTreeMap::new(),
            confusion: None,
            sweep_rows: Vec::new(),
            lower_bound_rows: Vec::new(),
            distribution: None,
            wall_time: Duration::ZERO,
        }
    }

    /// 1 if any certificate failed, else 0.
    pub fn exit_code(&self) -> i32 {
        if self.certificates.iter().any(|c| c.verdict == Verdict::Fail) {
            1
        } else {
            0
        }
    }

    fn loss(&mut self, name: &str, value: f64) {
        self.losses.insert(name.to_string(), value);
    }
}

/// Execute the configured pipeline. Pure: nothing is written.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let start = Instant::now();
    let mut result = ExperimentResult::new(config);
    match config.pipeline {
        Pipeline::LowerBound => lower_bound(config, &mut result)?,
        pipeline => {
            let g = generate(config)?;
            result.distribution = Some(DistributionSummary::of(&g.distribution));
            result.loss("noise_rate", g.distribution.noise_rate());
            match pipeline {
                Pipeline::CertifySampler | Pipeline::CertifyTeacher | Pipeline::CertifyLearner => {
                    certify(config, &g, &mut result)?
                }
                Pipeline::EnsembleInfer | Pipeline::Epl | Pipeline::Rpl => {
                    let teacher_k = config.teacher.as_ref().map_or(1, |t| t.k);
                    let summary = distill_trials(config, &g, pipeline, teacher_k, config.seed)?;
                    for (name, v) in &summary.losses {
                        result.loss(name, *v);
                    }
                    result.confusion = Some(summary.confusion);
                    result.certificates.push(summary.certificate);
                }
                Pipeline::SweepTeachers => sweep(config, &g, &mut result)?,
                Pipeline::LowerBound => unreachable!(),
            }
        }
    }
    result.wall_time = start.elapsed();
    Ok(result)
}

fn teacher_trainer(config: &ExperimentConfig, g: &Generated) -> Result<Box<dyn Trainer>> {
    let teacher = config.teacher.as_ref().ok_or_else(|| Error::Config("missing teacher".into()))?;
    build_trainer(&teacher.algo, g)
}

fn certify(config: &ExperimentConfig, g: &Generated, result: &mut ExperimentResult) -> Result<()> {
    let teacher = config.teacher.as_ref().expect("validated");
    let algo = teacher_trainer(config, g)?;
    let d = Arc::new(g.distribution.clone());
    let tol = config.tolerances;
    let mc = MonteCarlo::new(config.trials, tol.alpha, config.seed);
    let e = estimate_induced(algo.as_ref(), &d, teacher.m, &mc)?;
    let cert = match config.pipeline {
        Pipeline::CertifySampler => certify_sampler(&e, tol.epsilon)?,
        Pipeline::CertifyTeacher => certify_teacher(&e, tol.epsilon, tol.tau)?,
        _ => certify_learner_from_losses(&e.clean_losses, tol.epsilon, teacher.m, &mc)?,
    };
    result.loss("mean_clean_loss", e.mean_clean_loss);
    result.loss("tv_estimate", e.tv_estimate()?);
    result.loss("ci_halfwidth", e.ci_halfwidth);
    result.confusion = Some(confusion_from_conditionals(&d, &e.q_hat));
    result.certificates.push(cert);
    Ok(())
}

/// Averages over the trials of an ensemble / EPL / RPL run.
pub struct DistillSummary {
    pub losses: BTreeMap<String, f64>,
    /// Per-trial clean loss of the pipeline's output (ensemble or student).
    pub primary_losses: Vec<f64>,
    pub confusion: Confusion,
    pub certificate: Certificate,
}

struct TrialOut {
    ensemble_loss: f64,
    teacher_loss: f64,
    predictions: Vec<Label>,
    primary_loss: f64,
    disagreement: Option<f64>,
}

/// Run `pipeline` (ensemble-infer, epl or rpl) with `k` teachers for
/// `config.trials` independent trials rooted at `seed`.
pub fn distill_trials(
    config: &ExperimentConfig,
    g: &Generated,
    pipeline: Pipeline,
    k: usize,
    seed: u64,
) -> Result<DistillSummary> {
    let teacher = config.teacher.as_ref().ok_or_else(|| Error::Config("missing teacher".into()))?;
    let algo = teacher_trainer(config, g)?;
    let student = match pipeline {
        Pipeline::Epl | Pipeline::Rpl => {
            let s = config.student.as_ref().ok_or_else(|| Error::Config("epl/rpl need a student".into()))?;
            Some((build_trainer(&s.algo, g)?, s.m_prime))
        }
        _ => None,
    };
    let d = &g.distribution;
    let mc = MonteCarlo::new(config.trials, config.tolerances.alpha, seed);

    let trial = |t: usize| -> Result<TrialOut> {
        let ts = mc.trial_seed(t);
        let pool = if teacher.overlapping {
            train_pool_overlapping(algo.as_ref(), d, k, teacher.m, ts)?
        } else {
            train_pool(algo.as_ref(), d, k, teacher.m, ts)?
        };
        let table = pool.atom_table(d)?;
        let ensemble = table.ensemble_labels();
        let ensemble_loss = d.clean_loss_of(&ensemble);
        let teacher_loss = table.labels.iter().map(|row| d.clean_loss_of(row)).sum::<f64>() / k as f64;
        match &student {
            None => Ok(TrialOut { ensemble_loss, teacher_loss, primary_loss: ensemble_loss, predictions: ensemble, disagreement: None }),
            Some((trainer, m_prime)) => {
                let mode = if pipeline == Pipeline::Epl { LabelingMode::Ensemble } else { LabelingMode::RandomTeacher };
                let out = distill_with_table(&table, d, *m_prime, trainer.as_ref(), derive_seed(ts, stream::DISTILL, 0), mode)?;
                let predictions = d.predict_atoms(out.student.as_ref())?;
                Ok(TrialOut {
                    ensemble_loss,
                    teacher_loss,
                    primary_loss: d.clean_loss_of(&predictions),
                    predictions,
                    disagreement: Some(out.pseudo.disagreement(d)),
                })
            }
        }
    };
    let outs = map_indexed(config.trials, trial)
        .into_iter()
        .enumerate()
        .map(|(trial, r)| r.map_err(|e| Error::Trial { trial, source: Box::new(e) }))
        .collect::<Result<Vec<_>>>()?;

    let r = outs.len() as f64;
    let mean = |f: &dyn Fn(&TrialOut) -> f64| outs.iter().map(f).sum::<f64>() / r;
    let mut losses = BTreeMap::new();
    losses.insert("mean_ensemble_clean_loss".to_string(), mean(&|o| o.ensemble_loss));
    losses.insert("mean_teacher_clean_loss".to_string(), mean(&|o| o.teacher_loss));
    let m_for_cert = match &student {
        Some((_, m_prime)) => {
            losses.insert("mean_student_clean_loss".to_string(), mean(&|o| o.primary_loss));
            losses.insert("mean_pseudo_disagreement".to_string(), mean(&|o| o.disagreement.unwrap_or(0.0)));
            *m_prime
        }
        None => teacher.m,
    };
    losses.insert("ci_halfwidth".to_string(), hoeffding_halfwidth(outs.len(), mc.alpha));

    let mut q = vec![vec![0.0; d.num_labels()]; d.len()];
    for o in &outs {
        for (i, &y) in o.predictions.iter().enumerate() {
            q[i][y] += 1.0 / r;
        }
    }
    let primary_losses: Vec<f64> = outs.iter().map(|o| o.primary_loss).collect();
    let certificate = certify_learner_from_losses(&primary_losses, config.tolerances.epsilon, m_for_cert, &mc)?;
    Ok(DistillSummary { losses, primary_losses, confusion: confusion_from_conditionals(d, &q), certificate })
}

fn sweep(config: &ExperimentConfig, g: &Generated, result: &mut ExperimentResult) -> Result<()> {
    let sweep = config.sweep.as_ref().expect("validated");
    for (j, &k) in sweep.k_values.iter().enumerate() {
        let seed = derive_seed(config.seed, stream::SWEEP, j as u64);
        let summary = distill_trials(config, g, sweep.inner, k, seed)?;
        let n = summary.primary_losses.len();
        result.sweep_rows.push(SweepRow {
            k,
            mean_clean_loss: summary.primary_losses.iter().sum::<f64>() / n as f64,
            ci_halfwidth: hoeffding_halfwidth(n, config.tolerances.alpha),
            trials: n,
            seed,
        });
    }
    Ok(())
}

fn lower_bound(config: &ExperimentConfig, result: &mut ExperimentResult) -> Result<()> {
    let lb = config.lower_bound.as_ref().expect("validated");
    let gamma = lower_bound_gamma(lb.big_m);
    result.loss("gamma", gamma);
    for &m in &lb.m_values {
        result.lower_bound_rows.push(LowerBoundRow { m, expected_error: lower_bound_demo(lb.big_m, m)? });
    }
    // The one-sample algorithm returning the constant function y(x1) is an
    // exact sampler on a single atom.
    let first_label = |s: &LabeledSample| -> Result<Box<dyn Classifier>> {
        let (_, label) = s.items.first().ok_or(Error::EmptySample)?;
        Ok(Box::new(ConstantClassifier { label: *label }))
    };
    let single = Arc::new(gen_single_atom(gamma, 1)?);
    let e = exact_induced(&first_label, &single, 1, 16)?;
    result.loss("single_draw_sampler_tv", e.tv_estimate()?);
    Ok(())
}
