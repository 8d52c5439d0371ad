//! Distillation pipelines: majority-vote ensembles of independently trained
//! teachers, Ensemble-Pseudo-Labeling (EPL), Random-Pseudo-Labeling (RPL),
//! and the teacher-count / student-sample bounds that go with them.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dist::{
    plurality, Classifier, ClassifierDump, Label, LabeledSample, NoisyDistribution, Point,
    SharedClassifier, Trainer,
};
use crate::error::{Error, Result};
use crate::parallel::map_indexed;
use crate::seed::{derive_seed, rng_from_seed, stream};

/// Where a teacher's training data came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub m: usize,
    pub seed: u64,
}

/// k trained teachers for the same distribution.
#[derive(Clone)]
pub struct TeacherPool {
    pub num_labels: usize,
    pub teachers: Vec<SharedClassifier>,
    pub provenance: Vec<Provenance>,
    /// Teachers resampled one shared draw instead of drawing independently.
    pub overlapping: bool,
}

impl TeacherPool {
    pub fn len(&self) -> usize {
        self.teachers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.teachers.is_empty()
    }

    /// Every teacher's prediction at every atom of `d`.
    pub fn atom_table(&self, d: &NoisyDistribution) -> Result<PoolTable> {
        let labels = map_indexed(self.len(), |i| d.predict_atoms(self.teachers[i].as_ref()));
        let labels = labels
            .into_iter()
            .enumerate()
            .map(|(teacher, r)| r.map_err(|e| Error::Teacher { teacher, source: Box::new(e) }))
            .collect::<Result<Vec<_>>>()?;
        Ok(PoolTable { num_labels: self.num_labels, labels })
    }
}

/// Teacher predictions on the atoms of one distribution: `labels[i][a]` is
/// teacher i's label at atom a.
#[derive(Clone, Debug, PartialEq)]
pub struct PoolTable {
    pub num_labels: usize,
    pub labels: Vec<Vec<Label>>,
}

impl PoolTable {
    pub fn votes(&self, atom: usize) -> Vec<usize> {
        let mut counts = vec![0; self.num_labels];
        for row in &self.labels {
            counts[row[atom]] += 1;
        }
        counts
    }

    /// Fraction of teachers voting for each label at `atom`; the conditional
    /// that random-teacher labeling induces there.
    pub fn vote_distribution(&self, atom: usize) -> Vec<f64> {
        let k = self.labels.len() as f64;
        self.votes(atom).into_iter().map(|c| c as f64 / k).collect()
    }

    /// Majority vote at every atom.
    pub fn ensemble_labels(&self) -> Vec<Label> {
        let atoms = self.labels.first().map_or(0, Vec::len);
        (0..atoms).map(|a| plurality(&self.votes(a))).collect()
    }
}

fn wrap_teacher<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results
        .into_iter()
        .enumerate()
        .map(|(teacher, r)| r.map_err(|e| Error::Teacher { teacher, source: Box::new(e) }))
        .collect()
}

fn check_counts(k: usize, m: usize) -> Result<()> {
    if k == 0 || m == 0 {
        return Err(Error::InvalidParameter(format!("need k, m >= 1, got k = {k}, m = {m}")));
    }
    Ok(())
}

/// Train `k` teachers, teacher i on its own draw of `m` items seeded by
/// `derive(seed, teacher, i)`.
pub fn train_pool(algo: &dyn Trainer, d: &NoisyDistribution, k: usize, m: usize, seed: u64) -> Result<TeacherPool> {
    check_counts(k, m)?;
    let runs = map_indexed(k, |i| {
        let s = derive_seed(seed, stream::TEACHER, i as u64);
        algo.train(&d.draw_sample(m, s)).map(|h| (SharedClassifier::from(h), Provenance { m, seed: s }))
    });
    let (teachers, provenance) = wrap_teacher(runs)?.into_iter().unzip();
    Ok(TeacherPool { num_labels: d.num_labels(), teachers, provenance, overlapping: false })
}

/// Like [`train_pool`], but all teachers see bootstrap resamples (size `m`)
/// of one shared draw of `m` items, so their training sets overlap.
pub fn train_pool_overlapping(
    algo: &dyn Trainer,
    d: &NoisyDistribution,
    k: usize,
    m: usize,
    seed: u64,
) -> Result<TeacherPool> {
    check_counts(k, m)?;
    let shared = d.draw_sample(m, derive_seed(seed, stream::OVERLAP, 0));
    let runs = map_indexed(k, |i| {
        let s = derive_seed(seed, stream::TEACHER, i as u64);
        let mut rng = rng_from_seed(s);
        let items = (0..m).map(|_| shared.items[rng.gen_range(0..m)].clone()).collect();
        let sample = LabeledSample { num_labels: shared.num_labels, items };
        algo.train(&sample).map(|h| (SharedClassifier::from(h), Provenance { m, seed: s }))
    });
    let (teachers, provenance) = wrap_teacher(runs)?.into_iter().unzip();
    Ok(TeacherPool { num_labels: d.num_labels(), teachers, provenance, overlapping: true })
}

/// Plurality vote of the pool; ties go to the lowest label.
pub struct EnsembleClassifier {
    num_labels: usize,
    teachers: Vec<SharedClassifier>,
}

pub fn ensemble_classifier(pool: &TeacherPool) -> Result<EnsembleClassifier> {
    if pool.is_empty() {
        return Err(Error::InvalidParameter("empty teacher pool".into()));
    }
    Ok(EnsembleClassifier { num_labels: pool.num_labels, teachers: pool.teachers.clone() })
}

impl Classifier for EnsembleClassifier {
    fn predict(&self, x: &Point) -> Result<Label> {
        let mut counts = vec![0; self.num_labels];
        for h in &self.teachers {
            counts[h.predict(x)?] += 1;
        }
        Ok(plurality(&counts))
    }

    fn dump(&self) -> ClassifierDump {
        ClassifierDump {
            kind: "ensemble".into(),
            parameters: serde_json::json!({
                "k": self.teachers.len(),
                "members": self.teachers.iter().map(|h| h.dump().kind).collect::<Vec<_>>(),
            }),
            memory: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelingMode {
    Ensemble,
    RandomTeacher,
}

/// The student's training set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PseudoLabeledSet {
    #[serde(flatten)]
    pub items: LabeledSample,
    pub labeling_mode: LabelingMode,
    pub unlabeled_seed: u64,
    pub labeling_seed: u64,
    /// Atom index of each item in the source distribution.
    #[serde(skip)]
    pub atoms: Vec<usize>,
}

impl PseudoLabeledSet {
    /// Fraction of pseudo-labels that differ from f*_D.
    pub fn disagreement(&self, d: &NoisyDistribution) -> f64 {
        let wrong = self
            .atoms
            .iter()
            .zip(self.items.labels())
            .filter(|&(&a, y)| d.bayes_label(a) != y)
            .count();
        wrong as f64 / self.atoms.len() as f64
    }
}

pub struct DistillOutcome {
    pub student: Box<dyn Classifier>,
    pub pseudo: PseudoLabeledSet,
}

fn pseudo_label(
    table: &PoolTable,
    d: &NoisyDistribution,
    m_prime: usize,
    seed: u64,
    mode: LabelingMode,
) -> Result<PseudoLabeledSet> {
    if m_prime == 0 {
        return Err(Error::EmptySample);
    }
    if table.labels.is_empty() {
        return Err(Error::InvalidParameter("empty teacher pool".into()));
    }
    let unlabeled_seed = derive_seed(seed, stream::UNLABELED, 0);
    let labeling_seed = derive_seed(seed, stream::LABELING, 0);
    let atoms = d.draw_marginal_indices(m_prime, &mut rng_from_seed(unlabeled_seed));
    let labels: Vec<Label> = match mode {
        LabelingMode::Ensemble => {
            let ens = table.ensemble_labels();
            atoms.iter().map(|&a| ens[a]).collect()
        }
        LabelingMode::RandomTeacher => {
            let mut rng = rng_from_seed(labeling_seed);
            let k = table.labels.len();
            atoms.iter().map(|&a| table.labels[rng.gen_range(0..k)][a]).collect()
        }
    };
    let items = atoms
        .iter()
        .zip(labels)
        .map(|(&a, y)| (d.atoms()[a].point.clone(), y))
        .collect();
    Ok(PseudoLabeledSet {
        items: LabeledSample { num_labels: d.num_labels(), items },
        labeling_mode: mode,
        unlabeled_seed,
        labeling_seed,
        atoms,
    })
}

fn distill(
    pool: &TeacherPool,
    d: &NoisyDistribution,
    m_prime: usize,
    student: &dyn Trainer,
    seed: u64,
    mode: LabelingMode,
) -> Result<DistillOutcome> {
    let table = pool.atom_table(d)?;
    distill_with_table(&table, d, m_prime, student, seed, mode)
}

/// EPL or RPL from a precomputed [`PoolTable`].
pub fn distill_with_table(
    table: &PoolTable,
    d: &NoisyDistribution,
    m_prime: usize,
    student: &dyn Trainer,
    seed: u64,
    mode: LabelingMode,
) -> Result<DistillOutcome> {
    let pseudo = pseudo_label(table, d, m_prime, seed, mode)?;
    let student = student.train(&pseudo.items)?;
    Ok(DistillOutcome { student, pseudo })
}

/// Draw `m_prime` unlabeled points from D's marginal, label them by the
/// ensemble's majority vote, and train the student on the result.
pub fn epl(
    pool: &TeacherPool,
    d: &NoisyDistribution,
    m_prime: usize,
    student: &dyn Trainer,
    seed: u64,
) -> Result<DistillOutcome> {
    distill(pool, d, m_prime, student, seed, LabelingMode::Ensemble)
}

/// As [`epl`], but every point is labeled by a teacher picked uniformly at
/// random, independently per point.
pub fn rpl(
    pool: &TeacherPool,
    d: &NoisyDistribution,
    m_prime: usize,
    student: &dyn Trainer,
    seed: u64,
) -> Result<DistillOutcome> {
    distill(pool, d, m_prime, student, seed, LabelingMode::RandomTeacher)
}

/// Exact probability that a strict majority of independent voters is
/// correct, voter i being correct with probability `p[i]`. Enumerates all
/// 2^k outcomes; a tie (even k) counts as half correct.
pub fn majority_accuracy(p: &[f64]) -> Result<f64> {
    let k = p.len();
    if k == 0 || k > 24 {
        return Err(Error::InvalidParameter(format!("need 1 to 24 voters, got {k}")));
    }
    let mut total = 0.0;
    for mask in 0u32..(1 << k) {
        let right = mask.count_ones() as usize;
        let weight = if 2 * right > k {
            1.0
        } else if 2 * right == k {
            0.5
        } else {
            continue;
        };
        let prob: f64 = p
            .iter()
            .enumerate()
            .map(|(i, &pi)| if mask >> i & 1 == 1 { pi } else { 1.0 - pi })
            .product();
        total += weight * prob;
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Theorem {
    Ensemble,
    Epl,
    Rpl,
}

/// Teacher count and (for the pseudo-labeling theorems) student sample size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremParameters {
    pub k: u64,
    pub m_prime: Option<u64>,
}

/// Ceilings of the sufficient k and m′, with the unspecified VC constant
/// replaced by `c_multiplier`:
///
/// - ensemble: k = 16 ln(3/ε) / γ²
/// - epl: k = 16 ln(12/ε) / γ², m′ = C (vc + ln(1/ε)) / ε²
/// - rpl: k = 128 ln(36/(εγ)) / γ², m′ = C (vc + ln(1/(εγ))) / (εγ)²
pub fn theorem_parameters(theorem: Theorem, epsilon: f64, gamma: f64, vc: u32, c_multiplier: f64) -> Result<TheoremParameters> {
    if !(epsilon > 0.0 && epsilon < 1.0) || !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < ε < 1 and 0 < γ <= 1, got ε = {epsilon}, γ = {gamma}"
        )));
    }
    let g2 = gamma * gamma;
    let vc = vc as f64;
    let (k, m_prime) = match theorem {
        Theorem::Ensemble => (16.0 * (3.0 / epsilon).ln() / g2, None),
        Theorem::Epl => (
            16.0 * (12.0 / epsilon).ln() / g2,
            Some(c_multiplier * (vc + (1.0 / epsilon).ln()) / (epsilon * epsilon)),
        ),
        Theorem::Rpl => {
            let eg = epsilon * gamma;
            (
                128.0 * (36.0 / eg).ln() / g2,
                Some(c_multiplier * (vc + (1.0 / eg).ln()) / (eg * eg)),
            )
        }
    };
    Ok(TheoremParameters { k: k.ceil() as u64, m_prime: m_prime.map(|m| m.ceil().max(1.0) as u64) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{ConstantClassifier, MetricSpace};
    use crate::learners::{finite_erm, one_nn};
    use crate::synth::{gen_clustered_balls, gen_single_atom, ClusteredBalls};

    fn nn_trainer(metric: MetricSpace) -> impl Trainer {
        move |s: &LabeledSample| -> Result<Box<dyn Classifier>> { Ok(Box::new(one_nn(s, metric)?)) }
    }

    fn erm_trainer(d: &NoisyDistribution) -> impl Trainer {
        let support = d.points();
        move |s: &LabeledSample| -> Result<Box<dyn Classifier>> { Ok(Box::new(finite_erm(s, &support)?)) }
    }

    fn benchmark() -> NoisyDistribution {
        let p = ClusteredBalls { k: 4, gamma: 0.4, lambda: 1.0, lipschitz_l: 1.0, atoms_per_ball: 12, noise: 0.2 };
        gen_clustered_balls(&p, 1).unwrap().0
    }

    #[test]
    fn pools_are_seed_deterministic() {
        let d = benchmark();
        let algo = nn_trainer(d.metric());
        let a = train_pool(&algo, &d, 5, 30, 8).unwrap().atom_table(&d).unwrap();
        let b = train_pool(&algo, &d, 5, 30, 8).unwrap().atom_table(&d).unwrap();
        assert_eq!(a, b);
        let single = train_pool(&algo, &d, 1, 30, 8).unwrap();
        let direct = one_nn(&d.draw_sample(30, derive_seed(8, stream::TEACHER, 0)), d.metric()).unwrap();
        assert_eq!(single.atom_table(&d).unwrap().labels[0], d.predict_atoms(&direct).unwrap());
        assert!(train_pool(&algo, &d, 0, 30, 8).is_err());
    }

    #[test]
    fn overlapping_pool_trains_on_the_shared_draw() {
        let d = benchmark();
        let algo = nn_trainer(d.metric());
        let pool = train_pool_overlapping(&algo, &d, 4, 20, 2).unwrap();
        assert!(pool.overlapping);
        assert_eq!(pool.len(), 4);
        let shared = d.draw_sample(20, derive_seed(2, stream::OVERLAP, 0));
        let nn = pool.teachers[0].dump().memory.unwrap();
        assert!(nn.items.iter().all(|it| shared.items.contains(it)));
    }

    #[test]
    fn teacher_errors_carry_the_index() {
        let d = benchmark();
        let bad = |_: &LabeledSample| -> Result<Box<dyn Classifier>> { Err(Error::EmptySample) };
        let err = train_pool(&bad, &d, 3, 5, 0).err().unwrap();
        assert!(matches!(err, Error::Teacher { teacher: 0, .. }));
    }

    #[test]
    fn ensemble_votes() {
        let pool = |labels: &[Label]| TeacherPool {
            num_labels: 2,
            teachers: labels.iter().map(|&l| SharedClassifier::from(Box::new(ConstantClassifier { label: l }) as Box<dyn Classifier>)).collect(),
            provenance: vec![Provenance { m: 1, seed: 0 }; labels.len()],
            overlapping: false,
        };
        let x = Point::scalar(0.0).unwrap();
        assert_eq!(ensemble_classifier(&pool(&[1, 1, 0])).unwrap().predict(&x).unwrap(), 1);
        assert_eq!(ensemble_classifier(&pool(&[0])).unwrap().predict(&x).unwrap(), 0);
        assert_eq!(ensemble_classifier(&pool(&[1, 0])).unwrap().predict(&x).unwrap(), 0);
        assert!(ensemble_classifier(&pool(&[])).is_err());
    }

    #[test]
    fn perfect_pool_gives_clean_pseudo_labels() {
        let d = benchmark();
        let bayes = SharedClassifier::from(Box::new(d.bayes_optimal()) as Box<dyn Classifier>);
        let pool = TeacherPool {
            num_labels: 2,
            teachers: vec![bayes.clone(), bayes.clone(), bayes],
            provenance: vec![Provenance { m: 0, seed: 0 }; 3],
            overlapping: false,
        };
        let out = epl(&pool, &d, 2000, &erm_trainer(&d), 3).unwrap();
        assert_eq!(out.pseudo.disagreement(&d), 0.0);
        assert_eq!(d.clean_loss(out.student.as_ref()).unwrap(), 0.0);
        assert!(matches!(epl(&pool, &d, 0, &erm_trainer(&d), 3), Err(Error::EmptySample)));
    }

    #[test]
    fn epl_disagreement_is_ensemble_clean_loss_on_the_draw() {
        let d = benchmark();
        let pool = train_pool(&nn_trainer(d.metric()), &d, 7, 60, 4).unwrap();
        let out = epl(&pool, &d, 500, &erm_trainer(&d), 5).unwrap();
        let ens = ensemble_classifier(&pool).unwrap();
        let wrong = out
            .pseudo
            .items
            .items
            .iter()
            .zip(&out.pseudo.atoms)
            .filter(|((x, _), &a)| ens.predict(x).unwrap() != d.bayes_label(a))
            .count();
        assert_eq!(out.pseudo.disagreement(&d), wrong as f64 / 500.0);
    }

    #[test]
    fn rpl_and_epl_agree_with_one_teacher() {
        let d = benchmark();
        let pool = train_pool(&nn_trainer(d.metric()), &d, 1, 40, 6).unwrap();
        let a = epl(&pool, &d, 300, &erm_trainer(&d), 9).unwrap();
        let b = rpl(&pool, &d, 300, &erm_trainer(&d), 9).unwrap();
        assert_eq!(a.pseudo.items, b.pseudo.items);
        assert_eq!(d.predict_atoms(a.student.as_ref()).unwrap(), d.predict_atoms(b.student.as_ref()).unwrap());
    }

    #[test]
    fn rpl_frequencies_track_pool_votes() {
        let d = benchmark();
        let pool = train_pool(&nn_trainer(d.metric()), &d, 11, 40, 6).unwrap();
        let table = pool.atom_table(&d).unwrap();
        let m_prime = 200_000;
        let out = rpl(&pool, &d, m_prime, &erm_trainer(&d), 1).unwrap();
        let mut hits = vec![[0usize; 2]; d.len()];
        for (&a, y) in out.pseudo.atoms.iter().zip(out.pseudo.items.labels()) {
            hits[a][y] += 1;
        }
        for (a, h) in hits.iter().enumerate() {
            let n = (h[0] + h[1]) as f64;
            let freq = h[1] as f64 / n;
            // generous 5-sigma band around the pool vote share
            let p = table.vote_distribution(a)[1];
            assert!((freq - p).abs() <= 5.0 * (0.25 / n).sqrt(), "atom {a}: {freq} vs {p}");
        }
    }

    #[test]
    fn majority_accuracy_examples() {
        assert!((majority_accuracy(&[0.6, 0.7, 0.8]).unwrap() - 0.788).abs() < 1e-15);
        assert_eq!(majority_accuracy(&[0.7]).unwrap(), 0.7);
        assert_eq!(majority_accuracy(&[1.0, 0.0]).unwrap(), 0.5);
        assert!(majority_accuracy(&[]).is_err());
    }

    #[test]
    fn theorem_parameter_examples() {
        let t = theorem_parameters(Theorem::Ensemble, 0.1, 0.4, 0, 1.0).unwrap();
        assert_eq!(t, TheoremParameters { k: 341, m_prime: None });
        assert_eq!(theorem_parameters(Theorem::Ensemble, 0.1, 1.0, 0, 1.0).unwrap().k, 55);
        // 128·ln(36/(0.1·0.4))/0.16 = 800·ln 900
        let rpl = theorem_parameters(Theorem::Rpl, 0.1, 0.4, 3, 1.0).unwrap();
        assert_eq!(rpl.k, (800.0 * 900f64.ln()).ceil() as u64);
        assert_eq!(rpl.k, 5442);
        assert_eq!(rpl.m_prime, Some(((3.0 + 25f64.ln()) / 0.0016).ceil() as u64));
        let epl = theorem_parameters(Theorem::Epl, 0.1, 0.4, 3, 2.0).unwrap();
        assert_eq!(epl.k, (100.0 * 120f64.ln()).ceil() as u64);
        assert_eq!(epl.m_prime, Some((2.0 * (3.0 + 10f64.ln()) / 0.01).ceil() as u64));
        assert!(theorem_parameters(Theorem::Epl, 0.0, 0.4, 3, 1.0).is_err());
    }

    #[test]
    fn single_atom_pool_predicts_its_first_label() {
        let d = gen_single_atom(0.4, 1).unwrap();
        let pool = train_pool(&nn_trainer(d.metric()), &d, 3, 1, 0).unwrap();
        let table = pool.atom_table(&d).unwrap();
        for (i, row) in table.labels.iter().enumerate() {
            let s = d.draw_sample(1, pool.provenance[i].seed);
            assert_eq!(row[0], s.items[0].1);
        }
    }
}
