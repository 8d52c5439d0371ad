//! Finite-support noisy distributions and the exact quantities defined on
//! them: Bayes classifier, noise rate, margin, clean/noisy loss and total
//! variation against a set of per-atom conditionals.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rand::distributions::{Distribution, WeightedIndex};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{rng_from_seed, Rng};

/// Tolerance for "sums to one" checks on masses and conditionals.
pub const PROB_TOL: f64 = 1e-12;

/// Label index in `0..num_labels`. For binary problems label 0 stands for
/// -1 and label 1 for +1.
pub type Label = usize;

/// Map a binary label index to its sign.
pub fn label_sign(label: Label) -> f64 {
    if label == 0 {
        -1.0
    } else {
        1.0
    }
}

/// Map a sign back to a binary label; zero counts as +1.
pub fn sign_label(value: f64) -> Label {
    if value >= 0.0 {
        1
    } else {
        0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter("point with no coordinates".into()));
        }
        if let Some(c) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite coordinate {c}")));
        }
        Ok(Point { coords })
    }

    pub fn scalar(x: f64) -> Result<Self> {
        Point::new(vec![x])
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Hashable identity of the point. `-0.0` and `0.0` share a key.
    pub(crate) fn key(&self) -> PointKey {
        PointKey(
            self.coords
                .iter()
                .map(|&c| if c == 0.0 { 0u64 } else { c.to_bits() })
                .collect(),
        )
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Point::new(coords)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.coords
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct PointKey(Vec<u64>);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    Euclidean,
    HammingOnBinaryCube,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricSpace {
    pub kind: MetricKind,
    pub dim: usize,
}

impl MetricSpace {
    pub fn euclidean(dim: usize) -> Self {
        MetricSpace {
            kind: MetricKind::Euclidean,
            dim,
        }
    }

    pub fn hamming(dim: usize) -> Self {
        MetricSpace {
            kind: MetricKind::HammingOnBinaryCube,
            dim,
        }
    }

    pub fn check(&self, p: &Point) -> Result<()> {
        if p.dim() != self.dim {
            return Err(Error::InvalidParameter(format!(
                "point of dimension {} in a {}-dimensional space",
                p.dim(),
                self.dim
            )));
        }
        if self.kind == MetricKind::HammingOnBinaryCube
            && p.coords.iter().any(|&c| c != 0.0 && c != 1.0)
        {
            return Err(Error::InvalidParameter(format!(
                "point {:?} is not a binary-cube vertex",
                p.coords
            )));
        }
        Ok(())
    }

    pub fn distance(&self, a: &Point, b: &Point) -> f64 {
        match self.kind {
            MetricKind::Euclidean => a
                .coords
                .iter()
                .zip(&b.coords)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            MetricKind::HammingOnBinaryCube => a
                .coords
                .iter()
                .zip(&b.coords)
                .filter(|(x, y)| x != y)
                .count() as f64,
        }
    }
}

/// One support point with its probability mass and label conditional.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub point: Point,
    pub mass: f64,
    pub cond: Vec<f64>,
}

/// Top label (lowest index on ties) and top-minus-second gap of a
/// probability vector.
pub fn top_and_gap(cond: &[f64]) -> (Label, f64) {
    let mut best = 0;
    for (y, &p) in cond.iter().enumerate() {
        if p > cond[best] {
            best = y;
        }
    }
    let second = cond
        .iter()
        .enumerate()
        .filter(|&(y, _)| y != best)
        .map(|(_, &p)| p)
        .fold(f64::NEG_INFINITY, f64::max);
    (best, cond[best] - second)
}

/// Plurality winner of a vote count; ties go to the lowest label.
pub fn plurality(counts: &[usize]) -> Label {
    let mut best = 0;
    for (y, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = y;
        }
    }
    best
}

/// Largest γ such that the total mass of entries with gap < γ is at most
/// `delta`. Entries are `(gap, mass)`.
pub(crate) fn margin_of(mut gaps: Vec<(f64, f64)>, delta: f64) -> f64 {
    gaps.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut below = 0.0;
    let mut i = 0;
    while i < gaps.len() {
        let value = gaps[i].0;
        // All entries tied at `value` leave the admissible set together.
        let mut j = i;
        let mut tied = 0.0;
        while j < gaps.len() && gaps[j].0 == value {
            tied += gaps[j].1;
            j += 1;
        }
        if below + tied > delta {
            return value;
        }
        below += tied;
        i = j;
    }
    // Every atom fits in the δ budget; no gap exceeds 1.
    1.0
}

#[derive(Clone, Debug)]
pub struct NoisyDistribution {
    num_labels: usize,
    metric: MetricSpace,
    atoms: Vec<Atom>,
    index: HashMap<PointKey, usize>,
    marginal: WeightedIndex<f64>,
    conditionals: Vec<WeightedIndex<f64>>,
}

impl PartialEq for NoisyDistribution {
    fn eq(&self, other: &Self) -> bool {
        self.num_labels == other.num_labels
            && self.metric == other.metric
            && self.atoms == other.atoms
    }
}

fn check_probability_vector(v: &[f64], what: &str) -> Result<()> {
    if let Some(p) = v.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidDistribution(format!("{what} has entry {p}")));
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidDistribution(format!("{what} sums to {total}")));
    }
    Ok(())
}

impl NoisyDistribution {
    pub fn new(num_labels: usize, metric: MetricSpace, atoms: Vec<Atom>) -> Result<Self> {
        if num_labels < 2 {
            return Err(Error::InvalidDistribution(format!(
                "need at least 2 labels, got {num_labels}"
            )));
        }
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("no atoms".into()));
        }
        let masses: Vec<f64> = atoms.iter().map(|a| a.mass).collect();
        check_probability_vector(&masses, "mass vector")?;
        let mut index = HashMap::with_capacity(atoms.len());
        for (i, atom) in atoms.iter().enumerate() {
            metric.check(&atom.point)?;
            if atom.cond.len() != num_labels {
                return Err(Error::InvalidDistribution(format!(
                    "atom {i} has {} conditional entries, expected {num_labels}",
                    atom.cond.len()
                )));
            }
            check_probability_vector(&atom.cond, &format!("conditional of atom {i}"))?;
            if index.insert(atom.point.key(), i).is_some() {
                return Err(Error::InvalidDistribution(format!(
                    "atom {i} repeats point {:?}",
                    atom.point.coords()
                )));
            }
        }
        let marginal = WeightedIndex::new(&masses)
            .map_err(|e| Error::InvalidDistribution(format!("mass vector: {e}")))?;
        let conditionals = atoms
            .iter()
            .map(|a| {
                WeightedIndex::new(&a.cond)
                    .map_err(|e| Error::InvalidDistribution(format!("conditional: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(NoisyDistribution {
            num_labels,
            metric,
            atoms,
            index,
            marginal,
            conditionals,
        })
    }

    /// Rescale masses and every conditional to sum to one, then validate.
    pub fn renormalized(num_labels: usize, metric: MetricSpace, mut atoms: Vec<Atom>) -> Result<Self> {
        let total: f64 = atoms.iter().map(|a| a.mass).sum();
        if !(total > 0.0) {
            return Err(Error::InvalidDistribution("total mass is not positive".into()));
        }
        for atom in &mut atoms {
            atom.mass /= total;
            let s: f64 = atom.cond.iter().sum();
            if !(s > 0.0) {
                return Err(Error::InvalidDistribution("conditional with no mass".into()));
            }
            atom.cond.iter_mut().for_each(|p| *p /= s);
        }
        NoisyDistribution::new(num_labels, metric, atoms)
    }

    /// Same marginal, conditionals replaced by `cond` (one vector per atom).
    pub fn with_conditionals(&self, cond: &[Vec<f64>]) -> Result<Self> {
        if cond.len() != self.atoms.len() {
            return Err(Error::InvalidParameter(format!(
                "{} conditionals for {} atoms",
                cond.len(),
                self.atoms.len()
            )));
        }
        let atoms = self
            .atoms
            .iter()
            .zip(cond)
            .map(|(a, c)| Atom {
                point: a.point.clone(),
                mass: a.mass,
                cond: c.clone(),
            })
            .collect();
        NoisyDistribution::new(self.num_labels, self.metric, atoms)
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn metric(&self) -> MetricSpace {
        self.metric
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn points(&self) -> Vec<Point> {
        self.atoms.iter().map(|a| a.point.clone()).collect()
    }

    pub fn atom_index(&self, p: &Point) -> Option<usize> {
        self.index.get(&p.key()).copied()
    }

    pub fn bayes_label(&self, atom: usize) -> Label {
        top_and_gap(&self.atoms[atom].cond).0
    }

    pub fn bayes_labels(&self) -> Vec<Label> {
        (0..self.atoms.len()).map(|i| self.bayes_label(i)).collect()
    }

    /// Top-minus-second conditional gap at one atom.
    pub fn atom_margin(&self, atom: usize) -> f64 {
        top_and_gap(&self.atoms[atom].cond).1
    }

    pub fn bayes_optimal(&self) -> BayesClassifier {
        BayesClassifier {
            index: self.index.clone(),
            labels: self.bayes_labels(),
        }
    }

    /// η(D): probability that a draw's label differs from the Bayes label.
    pub fn noise_rate(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| {
                let top = a.cond.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                a.mass * (1.0 - top)
            })
            .sum()
    }

    /// γ_δ(D). `margin(0.0)` is the plain margin γ(D).
    pub fn margin(&self, delta: f64) -> f64 {
        let gaps = (0..self.atoms.len())
            .map(|i| (self.atom_margin(i), self.atoms[i].mass))
            .collect();
        margin_of(gaps, delta)
    }

    /// Labels `h` assigns to every atom, in atom order.
    pub fn predict_atoms(&self, h: &dyn Classifier) -> Result<Vec<Label>> {
        self.atoms.iter().map(|a| h.predict(&a.point)).collect()
    }

    /// Clean loss of a vector of per-atom predictions.
    pub fn clean_loss_of(&self, predictions: &[Label]) -> f64 {
        self.atoms
            .iter()
            .zip(predictions)
            .enumerate()
            .filter(|&(i, (_, &y))| y != self.bayes_label(i))
            .fold(0.0, |acc, (_, (a, _))| acc + a.mass)
    }

    /// L_{D*}(h): mass on which `h` disagrees with the Bayes classifier.
    pub fn clean_loss(&self, h: &dyn Classifier) -> Result<f64> {
        Ok(self.clean_loss_of(&self.predict_atoms(h)?))
    }

    /// L_D(h): probability that `h` mislabels a noisy draw.
    pub fn noisy_loss(&self, h: &dyn Classifier) -> Result<f64> {
        let preds = self.predict_atoms(h)?;
        Ok(self
            .atoms
            .iter()
            .zip(&preds)
            .map(|(a, &y)| a.mass * (1.0 - a.cond[y]))
            .sum())
    }

    /// Total variation between this distribution and the one with the same
    /// marginal and per-atom conditionals `q_hat`.
    pub fn tv_distance(&self, q_hat: &[Vec<f64>]) -> Result<f64> {
        if q_hat.len() != self.atoms.len() {
            return Err(Error::InvalidParameter(format!(
                "{} conditionals for {} atoms",
                q_hat.len(),
                self.atoms.len()
            )));
        }
        let mut total = 0.0;
        for (i, (a, q)) in self.atoms.iter().zip(q_hat).enumerate() {
            if q.len() != self.num_labels {
                return Err(Error::InvalidParameter(format!(
                    "conditional {i} has {} entries, expected {}",
                    q.len(),
                    self.num_labels
                )));
            }
            check_probability_vector(q, &format!("conditional {i}"))
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
            let l1: f64 = a.cond.iter().zip(q).map(|(p, r)| (p - r).abs()).sum();
            total += a.mass * l1;
        }
        Ok(0.5 * total)
    }

    pub fn draw_atom_index(&self, rng: &mut Rng) -> usize {
        self.marginal.sample(rng)
    }

    pub fn draw_label(&self, atom: usize, rng: &mut Rng) -> Label {
        self.conditionals[atom].sample(rng)
    }

    /// `m` i.i.d. draws from the joint distribution.
    pub fn draw_sample_with(&self, m: usize, rng: &mut Rng) -> LabeledSample {
        let items = (0..m)
            .map(|_| {
                let i = self.draw_atom_index(rng);
                let y = self.draw_label(i, rng);
                (self.atoms[i].point.clone(), y)
            })
            .collect();
        LabeledSample {
            num_labels: self.num_labels,
            items,
        }
    }

    pub fn draw_sample(&self, m: usize, seed: u64) -> LabeledSample {
        self.draw_sample_with(m, &mut rng_from_seed(seed))
    }

    /// `m` i.i.d. atom indices from the marginal.
    pub fn draw_marginal_indices(&self, m: usize, rng: &mut Rng) -> Vec<usize> {
        (0..m).map(|_| self.draw_atom_index(rng)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        crate::json::to_string(&DistributionDoc::from(self))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: DistributionDoc = serde_json::from_str(text)?;
        doc.try_into()
    }
}

impl fmt::Display for NoisyDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} atoms, {} labels, η = {:.4}, γ = {:.4}",
            self.atoms.len(),
            self.num_labels,
            self.noise_rate(),
            self.margin(0.0)
        )
    }
}

#[derive(Serialize, Deserialize)]
struct MetricDoc {
    kind: MetricKind,
    dim: usize,
}

#[derive(Serialize, Deserialize)]
struct AtomDoc {
    coords: Vec<f64>,
    mass: f64,
    cond: Vec<f64>,
}

/// On-disk layout: `{num_labels, metric:{kind,dim}, atoms:[{coords, mass, cond}]}`.
#[derive(Serialize, Deserialize)]
pub struct DistributionDoc {
    num_labels: usize,
    metric: MetricDoc,
    atoms: Vec<AtomDoc>,
}

impl From<&NoisyDistribution> for DistributionDoc {
    fn from(d: &NoisyDistribution) -> Self {
        DistributionDoc {
            num_labels: d.num_labels,
            metric: MetricDoc {
                kind: d.metric.kind,
                dim: d.metric.dim,
            },
            atoms: d
                .atoms
                .iter()
                .map(|a| AtomDoc {
                    coords: a.point.coords.clone(),
                    mass: a.mass,
                    cond: a.cond.clone(),
                })
                .collect(),
        }
    }
}

impl TryFrom<DistributionDoc> for NoisyDistribution {
    type Error = Error;

    fn try_from(doc: DistributionDoc) -> Result<Self> {
        let atoms = doc
            .atoms
            .into_iter()
            .map(|a| {
                Ok(Atom {
                    point: Point::new(a.coords)?,
                    mass: a.mass,
                    cond: a.cond,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        NoisyDistribution::new(
            doc.num_labels,
            MetricSpace {
                kind: doc.metric.kind,
                dim: doc.metric.dim,
            },
            atoms,
        )
    }
}

impl Serialize for NoisyDistribution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DistributionDoc::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for NoisyDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = DistributionDoc::deserialize(d)?;
        doc.try_into().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledItem {
    pub coords: Point,
    pub label: Label,
}

/// Ordered sequence of labeled points.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample {
    pub num_labels: usize,
    pub items: Vec<(Point, Label)>,
}

impl LabeledSample {
    pub fn new(num_labels: usize, items: Vec<(Point, Label)>) -> Result<Self> {
        if let Some((_, y)) = items.iter().find(|(_, y)| *y >= num_labels) {
            return Err(Error::InvalidParameter(format!(
                "label {y} out of range for {num_labels} labels"
            )));
        }
        Ok(LabeledSample { num_labels, items })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        self.items.iter().map(|(_, y)| *y)
    }

    pub fn label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_labels];
        for y in self.labels() {
            counts[y] += 1;
        }
        counts
    }
}

#[derive(Serialize, Deserialize)]
struct SampleDoc {
    num_labels: usize,
    items: Vec<LabeledItem>,
}

impl Serialize for LabeledSample {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SampleDoc {
            num_labels: self.num_labels,
            items: self
                .items
                .iter()
                .map(|(p, y)| LabeledItem {
                    coords: p.clone(),
                    label: *y,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LabeledSample {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = SampleDoc::deserialize(d)?;
        LabeledSample::new(
            doc.num_labels,
            doc.items.into_iter().map(|i| (i.coords, i.label)).collect(),
        )
        .map_err(serde::de::Error::custom)
    }
}

/// JSON description of a trained classifier: `{kind, parameters, memory}`.
#[derive(Clone, Debug, Serialize)]
pub struct ClassifierDump {
    pub kind: String,
    pub parameters: serde_json::Value,
    pub memory: Option<LabeledSample>,
}

/// A deterministic map from points to labels.
pub trait Classifier: Send + Sync {
    fn predict(&self, x: &Point) -> Result<Label>;

    /// Real-valued output for binary classifiers whose label is its sign.
    fn score(&self, _x: &Point) -> Option<f64> {
        None
    }

    fn dump(&self) -> ClassifierDump;
}

pub type SharedClassifier = Arc<dyn Classifier>;

/// A training procedure: sample in, classifier out.
pub trait Trainer: Send + Sync {
    fn train(&self, sample: &LabeledSample) -> Result<Box<dyn Classifier>>;
}

impl<F> Trainer for F
where
    F: Fn(&LabeledSample) -> Result<Box<dyn Classifier>> + Send + Sync,
{
    fn train(&self, sample: &LabeledSample) -> Result<Box<dyn Classifier>> {
        self(sample)
    }
}

/// f*_D, defined on the atoms only.
#[derive(Clone, Debug)]
pub struct BayesClassifier {
    index: HashMap<PointKey, usize>,
    labels: Vec<Label>,
}

impl Classifier for BayesClassifier {
    fn predict(&self, x: &Point) -> Result<Label> {
        self.index
            .get(&x.key())
            .map(|&i| self.labels[i])
            .ok_or_else(|| Error::OffSupport(x.coords().to_vec()))
    }

    fn dump(&self) -> ClassifierDump {
        ClassifierDump {
            kind: "bayes-optimal".into(),
            parameters: serde_json::json!({ "labels": self.labels }),
            memory: None,
        }
    }
}

/// Always the same label.
#[derive(Clone, Debug)]
pub struct ConstantClassifier {
    pub label: Label,
}

impl Classifier for ConstantClassifier {
    fn predict(&self, _x: &Point) -> Result<Label> {
        Ok(self.label)
    }

    fn dump(&self) -> ClassifierDump {
        ClassifierDump {
            kind: "constant".into(),
            parameters: serde_json::json!({ "label": self.label }),
            memory: None,
        }
    }
}

/// Finite hypothesis class searched by 0-1 empirical risk minimization.
pub struct HypothesisFamily {
    members: Vec<SharedClassifier>,
    vc_dim: Option<u32>,
}

impl HypothesisFamily {
    pub fn new(members: Vec<SharedClassifier>, vc_dim: Option<u32>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidParameter("empty hypothesis family".into()));
        }
        Ok(HypothesisFamily { members, vc_dim })
    }

    pub fn members(&self) -> &[SharedClassifier] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// The declared VC dimension, or floor(log2 |H|) when none was given.
    pub fn vc_dim(&self) -> u32 {
        self.vc_dim
            .unwrap_or_else(|| usize::BITS - 1 - self.members.len().leading_zeros())
    }

    /// First member with minimal empirical 0-1 loss on `sample`.
    pub fn erm(&self, sample: &LabeledSample) -> Result<SharedClassifier> {
        let mut best: Option<(usize, usize)> = None;
        for (i, h) in self.members.iter().enumerate() {
            let mut errors = 0;
            for (x, y) in &sample.items {
                if h.predict(x)? != *y {
                    errors += 1;
                }
            }
            if best.map_or(true, |(_, e)| errors < e) {
                best = Some((i, errors));
            }
        }
        Ok(self.members[best.expect("family is non-empty").0].clone())
    }
}
