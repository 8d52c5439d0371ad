//! The distribution A(D^m) induced by relabeling D with the output of a
//! learning algorithm, estimated by Monte Carlo (or computed exactly for
//! tiny problems), and three-valued certificates for the sampler, teacher
//! and learner properties.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dist::{margin_of, top_and_gap, Label, LabeledSample, NoisyDistribution, Trainer};
use crate::error::{Error, Result};
use crate::parallel::map_indexed;
use crate::seed::{derive_seed, stream};

pub const DEFAULT_TRIALS: usize = 2000;
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Trial count, confidence level and master seed of a Monte-Carlo run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub trials: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for MonteCarlo {
    fn default() -> Self {
        MonteCarlo {
            trials: DEFAULT_TRIALS,
            alpha: DEFAULT_ALPHA,
            seed: 0,
        }
    }
}

impl MonteCarlo {
    pub fn new(trials: usize, alpha: f64, seed: u64) -> Self {
        MonteCarlo { trials, alpha, seed }
    }

    pub fn halfwidth(&self) -> f64 {
        hoeffding_halfwidth(self.trials, self.alpha)
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("need at least one trial".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0,1), got {}", self.alpha)));
        }
        Ok(())
    }

    /// Seed of trial `t`.
    pub fn trial_seed(&self, t: usize) -> u64 {
        derive_seed(self.seed, stream::TRIAL, t as u64)
    }
}

/// Two-sided Hoeffding half-width for the mean of `trials` values in [0,1]:
/// sqrt(ln(2/α) / (2R)).
pub fn hoeffding_halfwidth(trials: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * trials as f64)).sqrt()
}

/// Per-atom label frequencies of A(S) over fresh draws of S.
#[derive(Clone, Debug)]
pub struct EmpiricalInduced {
    pub base: Arc<NoisyDistribution>,
    pub m: usize,
    /// 0 when the conditionals were computed exactly.
    pub trials: usize,
    pub alpha: f64,
    pub seed: u64,
    pub q_hat: Vec<Vec<f64>>,
    pub ci_halfwidth: f64,
    /// Clean loss of each trial's hypothesis, in trial order (empty when exact).
    pub clean_losses: Vec<f64>,
    /// Mean clean loss over trials, or its exact expectation.
    pub mean_clean_loss: f64,
}

impl EmpiricalInduced {
    /// Wrap exactly known induced conditionals; the half-width is zero.
    pub fn exact(base: Arc<NoisyDistribution>, m: usize, q: Vec<Vec<f64>>) -> Result<Self> {
        base.tv_distance(&q)?;
        let mean_clean_loss = base
            .atoms()
            .iter()
            .zip(&q)
            .enumerate()
            .map(|(i, (a, qi))| a.mass * (1.0 - qi[base.bayes_label(i)]))
            .sum();
        Ok(EmpiricalInduced {
            base,
            m,
            trials: 0,
            alpha: DEFAULT_ALPHA,
            seed: 0,
            q_hat: q,
            ci_halfwidth: 0.0,
            clean_losses: Vec::new(),
            mean_clean_loss,
        })
    }

    /// The induced distribution: base marginal, estimated conditionals.
    pub fn induced(&self) -> Result<NoisyDistribution> {
        self.base.with_conditionals(&self.q_hat)
    }

    pub fn tv_estimate(&self) -> Result<f64> {
        self.base.tv_distance(&self.q_hat)
    }

    /// Half-width of the TV estimate: the mass-weighted per-atom bound
    /// (C/2)·ci, which is ci for binary labels.
    pub fn tv_halfwidth(&self) -> f64 {
        self.ci_halfwidth * self.base.num_labels() as f64 / 2.0
    }
}

fn collect_trials<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results
        .into_iter()
        .enumerate()
        .map(|(trial, r)| r.map_err(|e| Error::Trial { trial, source: Box::new(e) }))
        .collect()
}

/// Per-atom predictions of `algo` trained on one seeded draw of `m` items.
pub(crate) fn trial_predictions(algo: &dyn Trainer, d: &NoisyDistribution, m: usize, seed: u64) -> Result<Vec<Label>> {
    let sample = d.draw_sample(m, seed);
    let h = algo.train(&sample)?;
    d.predict_atoms(h.as_ref())
}

/// Monte-Carlo estimate of A(D^m): each trial draws S with its own derived
/// seed, trains, and records the prediction at every atom.
pub fn estimate_induced(
    algo: &dyn Trainer,
    d: &Arc<NoisyDistribution>,
    m: usize,
    mc: &MonteCarlo,
) -> Result<EmpiricalInduced> {
    mc.validate()?;
    let runs = map_indexed(mc.trials, |t| trial_predictions(algo, d, m, mc.trial_seed(t)));
    let runs = collect_trials(runs)?;

    let n = d.len();
    let c = d.num_labels();
    let mut counts = vec![vec![0usize; c]; n];
    let mut clean_losses = Vec::with_capacity(runs.len());
    for preds in &runs {
        for (i, &y) in preds.iter().enumerate() {
            counts[i][y] += 1;
        }
        clean_losses.push(d.clean_loss_of(preds));
    }
    let r = mc.trials as f64;
    let q_hat = counts
        .iter()
        .map(|row| row.iter().map(|&k| k as f64 / r).collect())
        .collect();
    let mean_clean_loss = clean_losses.iter().sum::<f64>() / r;
    Ok(EmpiricalInduced {
        base: d.clone(),
        m,
        trials: mc.trials,
        alpha: mc.alpha,
        seed: mc.seed,
        q_hat,
        ci_halfwidth: mc.halfwidth(),
        clean_losses,
        mean_clean_loss,
    })
}

/// Exact A(D^m) by enumerating every sequence of m (atom, label) draws.
/// Refuses when there are more than `max_outcomes` sequences.
pub fn exact_induced(
    algo: &dyn Trainer,
    d: &Arc<NoisyDistribution>,
    m: usize,
    max_outcomes: usize,
) -> Result<EmpiricalInduced> {
    let n = d.len();
    let c = d.num_labels();
    let cells = n * c;
    let outcomes = (0..m).try_fold(1usize, |acc, _| acc.checked_mul(cells));
    match outcomes {
        Some(k) if k <= max_outcomes => {}
        _ => {
            return Err(Error::InvalidParameter(format!(
                "{cells}^{m} outcomes exceed the enumeration limit {max_outcomes}"
            )))
        }
    }
    let mut q = vec![vec![0.0; c]; n];
    let mut digits = vec![0usize; m];
    loop {
        let mut prob = 1.0;
        let mut items = Vec::with_capacity(m);
        for &cell in &digits {
            let (i, y) = (cell / c, cell % c);
            let atom = &d.atoms()[i];
            prob *= atom.mass * atom.cond[y];
            items.push((atom.point.clone(), y));
        }
        if prob > 0.0 {
            let sample = LabeledSample { num_labels: c, items };
            let h = algo.train(&sample)?;
            for (i, y) in d.predict_atoms(h.as_ref())?.into_iter().enumerate() {
                q[i][y] += prob;
            }
        }
        // advance the odometer
        let mut pos = 0;
        loop {
            if pos == m {
                return EmpiricalInduced::exact(d.clone(), m, q);
            }
            digits[pos] += 1;
            if digits[pos] < cells {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    Sampler,
    Teacher,
    Learner,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    /// Verdict for the claim `value <= threshold` given a confidence band.
    pub fn at_most(lower: f64, upper: f64, threshold: f64) -> Self {
        if upper <= threshold {
            Verdict::Pass
        } else if lower > threshold {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        }
    }

    /// Verdict for the claim `value >= threshold` given a confidence band.
    pub fn at_least(lower: f64, upper: f64, threshold: f64) -> Self {
        if lower >= threshold {
            Verdict::Pass
        } else if upper < threshold {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        }
    }

    /// Conjunction: any failure fails, all passes pass.
    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::Pass, Verdict::Pass) => Verdict::Pass,
            _ => Verdict::Inconclusive,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateInputs {
    pub epsilon: f64,
    pub tau: Option<f64>,
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub verdict: Verdict,
    pub statistics: BTreeMap<String, f64>,
    pub inputs: CertificateInputs,
}

impl Certificate {
    pub fn stat(&self, name: &str) -> f64 {
        self.statistics[name]
    }
}

fn inputs_of(e: &EmpiricalInduced, epsilon: f64, tau: Option<f64>) -> CertificateInputs {
    CertificateInputs {
        epsilon,
        tau,
        m: e.m,
        trials: e.trials,
        seed: e.seed,
        alpha: e.alpha,
    }
}

/// TV(A(D^m), D) <= ε, judged as pass when `tv + tv_halfwidth <= ε` and
/// fail when `tv - tv_halfwidth > ε`.
pub fn certify_sampler(e: &EmpiricalInduced, epsilon: f64) -> Result<Certificate> {
    let tv = e.tv_estimate()?;
    let half = e.tv_halfwidth();
    let (lower, upper) = ((tv - half).max(0.0), tv + half);
    let statistics = BTreeMap::from([
        ("tv_estimate".to_string(), tv),
        ("tv_halfwidth".to_string(), half),
        ("tv_lower".to_string(), lower),
        ("tv_upper".to_string(), upper),
        ("mean_clean_loss".to_string(), e.mean_clean_loss),
        ("noise_rate".to_string(), e.base.noise_rate()),
    ]);
    Ok(Certificate {
        kind: CertificateKind::Sampler,
        verdict: Verdict::at_most(lower, upper, epsilon),
        statistics,
        inputs: inputs_of(e, epsilon, None),
    })
}

/// Both teacher conditions on the estimated induced distribution:
///
/// 1. the mass where its Bayes label differs from f*_D is at most ε;
/// 2. its margin γ_ε is at least γ(D) − τ.
///
/// An atom's induced Bayes label is uncertain when the estimated gap
/// between f*_D's label and the best rival is under 2·ci; uncertain atoms
/// widen the band of condition 1. Condition 2 moves every per-atom gap by
/// ±2·ci to get its band.
pub fn certify_teacher(e: &EmpiricalInduced, epsilon: f64, tau: f64) -> Result<Certificate> {
    if !(epsilon > 0.0 && epsilon < 1.0) || !(0.0..1.0).contains(&tau) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < ε < 1 and 0 <= τ < 1, got ε = {epsilon}, τ = {tau}"
        )));
    }
    let base = &e.base;
    let band = 2.0 * e.ci_halfwidth;

    let mut point = 0.0;
    let mut upper = 0.0;
    let mut lower = 0.0;
    let mut gaps = Vec::with_capacity(base.len());
    let mut gaps_lo = Vec::with_capacity(base.len());
    let mut gaps_hi = Vec::with_capacity(base.len());
    for (i, q) in e.q_hat.iter().enumerate() {
        let mass = base.atoms()[i].mass;
        let clean = base.bayes_label(i);
        let (induced_label, gap) = top_and_gap(q);
        let rival = q
            .iter()
            .enumerate()
            .filter(|&(y, _)| y != clean)
            .map(|(_, &p)| p)
            .fold(f64::NEG_INFINITY, f64::max);
        let lead = q[clean] - rival;
        let disagrees = induced_label != clean;
        let ambiguous = lead.abs() < band;
        if disagrees {
            point += mass;
            upper += mass;
            if !ambiguous {
                lower += mass;
            }
        } else if ambiguous {
            upper += mass;
        }
        gaps.push((gap, mass));
        gaps_lo.push(((gap - band).max(0.0), mass));
        gaps_hi.push(((gap + band).min(1.0), mass));
    }
    let cond1 = Verdict::at_most(lower, upper, epsilon);

    let base_margin = base.margin(0.0);
    let threshold = base_margin - tau;
    let induced_margin = margin_of(gaps, epsilon);
    let margin_lo = margin_of(gaps_lo, epsilon);
    let margin_hi = margin_of(gaps_hi, epsilon);
    let cond2 = Verdict::at_least(margin_lo, margin_hi, threshold);

    let statistics = BTreeMap::from([
        ("clean_loss_estimate".to_string(), point),
        ("clean_loss_lower".to_string(), lower),
        ("clean_loss_upper".to_string(), upper),
        ("induced_margin".to_string(), induced_margin),
        ("induced_margin_lower".to_string(), margin_lo),
        ("induced_margin_upper".to_string(), margin_hi),
        ("base_margin".to_string(), base_margin),
        ("margin_threshold".to_string(), threshold),
        ("tv_estimate".to_string(), e.tv_estimate()?),
        ("ci_halfwidth".to_string(), e.ci_halfwidth),
    ]);
    Ok(Certificate {
        kind: CertificateKind::Teacher,
        verdict: cond1.and(cond2),
        statistics,
        inputs: inputs_of(e, epsilon, Some(tau)),
    })
}

/// Learner certificate from per-trial clean losses already in hand.
pub fn certify_learner_from_losses(
    losses: &[f64],
    epsilon: f64,
    m: usize,
    mc: &MonteCarlo,
) -> Result<Certificate> {
    if losses.is_empty() {
        return Err(Error::InvalidParameter("no trials".into()));
    }
    let mean = losses.iter().sum::<f64>() / losses.len() as f64;
    let half = hoeffding_halfwidth(losses.len(), mc.alpha);
    let (lower, upper) = ((mean - half).max(0.0), mean + half);
    let statistics = BTreeMap::from([
        ("mean_clean_loss".to_string(), mean),
        ("ci_halfwidth".to_string(), half),
        ("clean_loss_lower".to_string(), lower),
        ("clean_loss_upper".to_string(), upper),
    ]);
    Ok(Certificate {
        kind: CertificateKind::Learner,
        verdict: Verdict::at_most(lower, upper, epsilon),
        statistics,
        inputs: CertificateInputs {
            epsilon,
            tau: None,
            m,
            trials: losses.len(),
            seed: mc.seed,
            alpha: mc.alpha,
        },
    })
}

/// E_S L_{D*}(A(S)) <= ε, estimated over `mc.trials` draws.
pub fn certify_learner(
    algo: &dyn Trainer,
    d: &Arc<NoisyDistribution>,
    m: usize,
    mc: &MonteCarlo,
    epsilon: f64,
) -> Result<Certificate> {
    let e = estimate_induced(algo, d, m, mc)?;
    certify_learner_from_losses(&e.clean_losses, epsilon, m, mc)
}

/// Label bias γ = sqrt(ln(4/3) / 2M) of the two single-atom distributions
/// used for the learner lower bound.
pub fn lower_bound_gamma(big_m: usize) -> f64 {
    ((4.0f64 / 3.0).ln() / (2.0 * big_m as f64)).sqrt()
}

fn ln_binomial_pmf(n: usize, ln_choose: &[f64], k: usize, ln_p: f64, ln_q: f64) -> f64 {
    ln_choose[k] + k as f64 * ln_p + (n - k) as f64 * ln_q
}

/// Exact expected clean error, averaged over b ∈ {±1}, of the majority rule
/// (ties answer +1) after m draws from the single atom with
/// P(y = +1) = (1 + bγ)/2, γ = [`lower_bound_gamma`]`(M)`.
pub fn lower_bound_demo(big_m: usize, m: usize) -> Result<f64> {
    if big_m == 0 {
        return Err(Error::InvalidParameter("M must be at least 1".into()));
    }
    let gamma = lower_bound_gamma(big_m);
    let p = (1.0 + gamma) / 2.0;
    let (ln_p, ln_q) = (p.ln(), (1.0 - p).ln());
    let mut ln_choose = vec![0.0; m + 1];
    for k in 1..=m {
        ln_choose[k] = ln_choose[k - 1] + ((m - k + 1) as f64).ln() - (k as f64).ln();
    }
    // b = +1: positives ~ Bin(m, p), error when 2·pos < m.
    // b = −1: positives ~ Bin(m, 1 − p), error when 2·pos >= m.
    let mut err_plus = 0.0;
    let mut err_minus = 0.0;
    for pos in 0..=m {
        if 2 * pos < m {
            err_plus += ln_binomial_pmf(m, &ln_choose, pos, ln_p, ln_q).exp();
        } else {
            err_minus += ln_binomial_pmf(m, &ln_choose, pos, ln_q, ln_p).exp();
        }
    }
    Ok(0.5 * (err_plus + err_minus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{Atom, Classifier, ConstantClassifier, MetricSpace, Point};
    use crate::learners::one_nn;
    use approx::assert_abs_diff_eq;

    fn line(xs: &[f64], masses: &[f64], conds: &[[f64; 2]]) -> Arc<NoisyDistribution> {
        let atoms = xs
            .iter()
            .zip(masses)
            .zip(conds)
            .map(|((&x, &m), c)| Atom { point: Point::scalar(x).unwrap(), mass: m, cond: c.to_vec() })
            .collect();
        Arc::new(NoisyDistribution::new(2, MetricSpace::euclidean(1), atoms).unwrap())
    }

    fn constant(label: Label) -> impl Trainer {
        move |_: &LabeledSample| -> Result<Box<dyn Classifier>> { Ok(Box::new(ConstantClassifier { label })) }
    }

    fn nn() -> impl Trainer {
        |s: &LabeledSample| -> Result<Box<dyn Classifier>> { Ok(Box::new(one_nn(s, MetricSpace::euclidean(1))?)) }
    }

    #[test]
    fn constant_trainer_gives_one_hot_conditionals() {
        let d = line(&[0.0, 1.0], &[0.5, 0.5], &[[0.8, 0.2], [0.3, 0.7]]);
        let e = estimate_induced(&constant(1), &d, 3, &MonteCarlo::new(50, 0.05, 1)).unwrap();
        assert!(e.q_hat.iter().all(|q| q == &vec![0.0, 1.0]));
        assert_eq!(e.clean_losses.len(), 50);
    }

    #[test]
    fn single_draw_one_nn_reproduces_the_conditional() {
        let d = line(&[0.0], &[1.0], &[[0.3, 0.7]]);
        let mc = MonteCarlo::new(2000, 0.05, 3);
        let e = estimate_induced(&nn(), &d, 1, &mc).unwrap();
        assert!((e.q_hat[0][1] - 0.7).abs() <= e.ci_halfwidth);
        let exact = exact_induced(&nn(), &d, 1, 100).unwrap();
        assert_eq!(exact.q_hat, vec![vec![0.3, 0.7]]);
        assert_eq!(exact.tv_estimate().unwrap(), 0.0);
    }

    #[test]
    fn two_atom_single_draw_matches_enumeration() {
        // Oracle by hand: the single draw lands on either atom with prob 1/2
        // and 1-NN copies its label to both atoms, so each atom sees label 1
        // with prob 0.5·0.9 + 0.5·0.1 = 0.5. TV = 0.5·0.4 + 0.5·0.4 = 0.4.
        let d = line(&[0.0, 1.0], &[0.5, 0.5], &[[0.1, 0.9], [0.9, 0.1]]);
        let exact = exact_induced(&nn(), &d, 1, 100).unwrap();
        for q in &exact.q_hat {
            assert_abs_diff_eq!(q[1], 0.5, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(exact.tv_estimate().unwrap(), 0.4, epsilon = 1e-15);

        let mc = MonteCarlo::new(4000, 0.05, 9);
        let e = estimate_induced(&nn(), &d, 1, &mc).unwrap();
        for q in &e.q_hat {
            assert!((q[1] - 0.5).abs() <= e.ci_halfwidth);
        }
        assert!((e.tv_estimate().unwrap() - 0.4).abs() <= e.tv_halfwidth());
    }

    #[test]
    fn estimates_replay_bit_for_bit() {
        let d = line(&[0.0, 0.5, 1.0], &[0.2, 0.5, 0.3], &[[0.8, 0.2], [0.4, 0.6], [0.1, 0.9]]);
        let mc = MonteCarlo::new(300, 0.05, 77);
        let a = estimate_induced(&nn(), &d, 7, &mc).unwrap();
        let b = estimate_induced(&nn(), &d, 7, &mc).unwrap();
        assert_eq!(a.q_hat, b.q_hat);
        assert_eq!(a.clean_losses, b.clean_losses);
        let c = estimate_induced(&nn(), &d, 7, &MonteCarlo { seed: 78, ..mc }).unwrap();
        assert_ne!(a.clean_losses, c.clean_losses);
    }

    #[test]
    fn trial_failures_report_the_trial() {
        let d = line(&[0.0], &[1.0], &[[0.3, 0.7]]);
        let err = estimate_induced(&nn(), &d, 0, &MonteCarlo::new(5, 0.05, 0)).unwrap_err();
        assert!(matches!(err, Error::Trial { trial: 0, .. }));
    }

    #[test]
    fn sampler_certificate_examples() {
        let d = line(&[0.0, 1.0], &[0.5, 0.5], &[[0.8, 0.2], [0.3, 0.7]]);
        let exact_copy: Vec<Vec<f64>> = d.atoms().iter().map(|a| a.cond.clone()).collect();
        let mut e = EmpiricalInduced::exact(d.clone(), 1, exact_copy).unwrap();
        e.ci_halfwidth = 0.01;
        assert_eq!(certify_sampler(&e, 0.02).unwrap().verdict, Verdict::Pass);

        let eta3 = line(&[0.0], &[1.0], &[[0.3, 0.7]]);
        let e = estimate_induced(&constant(1), &eta3, 1, &MonteCarlo::new(2000, 0.05, 0)).unwrap();
        let cert = certify_sampler(&e, 0.05).unwrap();
        assert_abs_diff_eq!(cert.stat("tv_estimate"), 0.3, epsilon = 1e-12);
        assert_eq!(cert.verdict, Verdict::Fail);

        // threshold inside the band
        let mut e = EmpiricalInduced::exact(eta3.clone(), 1, vec![vec![0.25, 0.75]]).unwrap();
        e.ci_halfwidth = 0.05;
        assert_eq!(certify_sampler(&e, 0.06).unwrap().verdict, Verdict::Inconclusive);
    }

    #[test]
    fn teacher_certificate_examples() {
        let d = line(&[0.0, 1.0], &[0.5, 0.5], &[[0.8, 0.2], [0.3, 0.7]]);
        let same: Vec<Vec<f64>> = d.atoms().iter().map(|a| a.cond.clone()).collect();
        let cert = certify_teacher(&EmpiricalInduced::exact(d.clone(), 1, same).unwrap(), 0.05, 0.1).unwrap();
        assert_eq!(cert.verdict, Verdict::Pass);
        assert_eq!(cert.stat("clean_loss_estimate"), 0.0);

        // anti-Bayes on every atom
        let flipped = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let cert = certify_teacher(&EmpiricalInduced::exact(d.clone(), 1, flipped).unwrap(), 0.05, 0.1).unwrap();
        assert_eq!(cert.stat("clean_loss_estimate"), 1.0);
        assert_eq!(cert.verdict, Verdict::Fail);

        assert!(certify_teacher(&EmpiricalInduced::exact(d, 1, vec![vec![0.5, 0.5]; 2]).unwrap(), 0.0, 0.1).is_err());
    }

    #[test]
    fn teacher_band_widens_with_ci() {
        let d = line(&[0.0], &[1.0], &[[0.3, 0.7]]);
        let mut e = EmpiricalInduced::exact(d, 1, vec![vec![0.47, 0.53]]).unwrap();
        assert_eq!(certify_teacher(&e, 0.05, 0.9).unwrap().verdict, Verdict::Pass);
        e.ci_halfwidth = 0.04;
        let cert = certify_teacher(&e, 0.05, 0.9).unwrap();
        assert_eq!(cert.stat("clean_loss_upper"), 1.0);
        assert_eq!(cert.stat("clean_loss_lower"), 0.0);
        assert_eq!(cert.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn sampler_budget_needs_half_of_min_tau_gamma() {
        // γ = 0.4, τ = 0.9, ε = 0.3. Flipping one atom costs TV 0.105, within
        // ε·min(τ/2, γ) = 0.12 but above ε·min(τ, γ)/2 = 0.06.
        let d = line(&[0.0, 1.0], &[0.5, 0.5], &[[0.3, 0.7], [0.3, 0.7]]);
        let e = EmpiricalInduced::exact(d, 1, vec![vec![0.51, 0.49], vec![0.3, 0.7]]).unwrap();
        let tv = e.tv_estimate().unwrap();
        assert_abs_diff_eq!(tv, 0.105, epsilon = 1e-12);
        assert_eq!(certify_sampler(&e, 0.12).unwrap().verdict, Verdict::Pass);
        assert_eq!(certify_sampler(&e, 0.06).unwrap().verdict, Verdict::Fail);
        let cert = certify_teacher(&e, 0.3, 0.9).unwrap();
        assert_eq!(cert.stat("clean_loss_estimate"), 0.5);
        assert_eq!(cert.verdict, Verdict::Fail);
    }

    #[test]
    fn learner_certificate_examples() {
        let d = line(&[0.0, 1.0], &[0.5, 0.5], &[[0.8, 0.2], [0.3, 0.7]]);
        let bayes = {
            let d = d.clone();
            move |_: &LabeledSample| -> Result<Box<dyn Classifier>> { Ok(Box::new(d.bayes_optimal())) }
        };
        let cert = certify_learner(&bayes, &d, 5, &MonteCarlo::new(500, 0.05, 1), 0.1).unwrap();
        assert_eq!(cert.stat("mean_clean_loss"), 0.0);
        assert_eq!(cert.verdict, Verdict::Pass);
    }

    #[test]
    fn lower_bound_examples() {
        assert_abs_diff_eq!(lower_bound_gamma(50), (4.0f64 / 3.0).ln().sqrt() / 10.0, epsilon = 1e-15);
        assert_abs_diff_eq!(lower_bound_gamma(50), 0.05364, epsilon = 5e-6);
        assert_eq!(lower_bound_demo(50, 0).unwrap(), 0.5);
        assert!(lower_bound_demo(50, 49).unwrap() > 0.125);
        assert!(lower_bound_demo(0, 3).is_err());
    }

    #[test]
    fn lower_bound_matches_brute_force_enumeration() {
        for big_m in [1, 5, 50] {
            let g = lower_bound_gamma(big_m);
            for m in 0..=14usize {
                let mut total = 0.0;
                for b in [1.0f64, -1.0] {
                    let p_plus = (1.0 + b * g) / 2.0;
                    for bits in 0u32..(1 << m) {
                        let pos = bits.count_ones() as usize;
                        let prob = p_plus.powi(pos as i32) * (1.0 - p_plus).powi((m - pos) as i32);
                        let sum = 2 * pos as i64 - m as i64;
                        let guess = if sum >= 0 { 1.0 } else { -1.0 };
                        if guess != b {
                            total += prob;
                        }
                    }
                }
                assert_abs_diff_eq!(lower_bound_demo(big_m, m).unwrap(), total / 2.0, epsilon = 1e-13);
            }
        }
    }
}
