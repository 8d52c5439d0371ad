use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dist::{
    label_sign, plurality, Classifier, ClassifierDump, Label, LabeledSample, MetricSpace, Point, PointKey,
};
use crate::error::{Error, Result};

/// Lookup-table classifier on a finite support. Off-support queries fail.
#[derive(Clone, Debug)]
pub struct TableClassifier {
    support: Vec<Point>,
    index: HashMap<PointKey, usize>,
    labels: Vec<Label>,
}

impl TableClassifier {
    pub fn new(support: Vec<Point>, labels: Vec<Label>) -> Result<Self> {
        if support.len() != labels.len() {
            return Err(Error::InvalidParameter("support and label table differ in length".into()));
        }
        let mut index = HashMap::with_capacity(support.len());
        for (i, p) in support.iter().enumerate() {
            if index.insert(p.key(), i).is_some() {
                return Err(Error::InvalidParameter(format!("repeated support point {:?}", p.coords())));
            }
        }
        Ok(TableClassifier { support, index, labels })
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }
}

impl Classifier for TableClassifier {
    fn predict(&self, x: &Point) -> Result<Label> {
        self.index
            .get(&x.key())
            .map(|&i| self.labels[i])
            .ok_or_else(|| Error::OffSupport(x.coords().to_vec()))
    }

    fn dump(&self) -> ClassifierDump {
        let support: Vec<&[f64]> = self.support.iter().map(|p| p.coords()).collect();
        ClassifierDump {
            kind: "finite-erm".into(),
            parameters: json!({ "support": support, "labels": self.labels }),
            memory: None,
        }
    }
}

/// 0-1 ERM over the class of all labelings of a finite support: the
/// per-atom plurality of observed labels. Atoms the sample never hits get
/// the sample's global plurality label.
pub fn finite_erm(sample: &LabeledSample, support: &[Point]) -> Result<TableClassifier> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let c = sample.num_labels;
    let index: HashMap<PointKey, usize> = support.iter().enumerate().map(|(i, p)| (p.key(), i)).collect();
    let mut votes = vec![vec![0usize; c]; support.len()];
    for (x, y) in &sample.items {
        let i = *index.get(&x.key()).ok_or_else(|| Error::OffSupport(x.coords().to_vec()))?;
        votes[i][*y] += 1;
    }
    let fallback = plurality(&sample.label_counts());
    let labels = votes
        .iter()
        .map(|v| if v.iter().all(|&n| n == 0) { fallback } else { plurality(v) })
        .collect();
    TableClassifier::new(support.to_vec(), labels)
}

/// k disjoint balls of a common radius, the support of a clustered
/// distribution, plus the Lipschitz constant of the hypothesis family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallFamilySpec {
    pub centers: Vec<Point>,
    pub radius: f64,
    pub lipschitz_l: f64,
    pub metric: MetricSpace,
}

impl BallFamilySpec {
    pub fn new(centers: Vec<Point>, radius: f64, lipschitz_l: f64, metric: MetricSpace) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::InvalidParameter("ball family with no balls".into()));
        }
        if !(radius > 0.0) || !(lipschitz_l > 0.0) {
            return Err(Error::InvalidParameter("radius and L must be positive".into()));
        }
        for (i, a) in centers.iter().enumerate() {
            metric.check(a)?;
            for b in &centers[..i] {
                if metric.distance(a, b) <= 2.0 * radius {
                    return Err(Error::InvalidParameter(format!(
                        "balls at {:?} and {:?} overlap",
                        a.coords(),
                        b.coords()
                    )));
                }
            }
        }
        Ok(BallFamilySpec {
            centers,
            radius,
            lipschitz_l,
            metric,
        })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Index of the (unique) ball containing `x`.
    pub fn ball_of(&self, x: &Point) -> Result<usize> {
        self.centers
            .iter()
            .position(|c| self.metric.distance(c, x) <= self.radius)
            .ok_or_else(|| Error::OutsideBalls {
                point: x.coords().to_vec(),
            })
    }
}

/// Hinge loss of the constant ±1 prediction `sign` on ±1 labels: each
/// disagreeing label costs 2, each agreeing one 0.
pub fn hinge_loss_constant(signs: &[f64], sign: f64) -> f64 {
    signs.iter().map(|&y| (1.0 - y * sign).max(0.0)).sum()
}

/// One constant sign per ball.
#[derive(Clone, Debug)]
pub struct BallSignClassifier {
    spec: BallFamilySpec,
    signs: Vec<f64>,
}

impl BallSignClassifier {
    pub fn new(spec: BallFamilySpec, signs: Vec<f64>) -> Result<Self> {
        if signs.len() != spec.len() || signs.iter().any(|s| s.abs() != 1.0) {
            return Err(Error::InvalidParameter("need one ±1 sign per ball".into()));
        }
        Ok(BallSignClassifier { spec, signs })
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn spec(&self) -> &BallFamilySpec {
        &self.spec
    }
}

impl Classifier for BallSignClassifier {
    fn predict(&self, x: &Point) -> Result<Label> {
        let b = self.spec.ball_of(x)?;
        Ok(if self.signs[b] > 0.0 { 1 } else { 0 })
    }

    fn score(&self, x: &Point) -> Option<f64> {
        self.spec.ball_of(x).ok().map(|b| self.signs[b])
    }

    fn dump(&self) -> ClassifierDump {
        ClassifierDump {
            kind: "hinge-erm-balls".into(),
            parameters: json!({ "balls": self.spec, "signs": self.signs }),
            memory: None,
        }
    }
}

/// Hinge-loss ERM over the ball-sign family. With unit-magnitude constants
/// the minimizer is the per-ball majority sign (+ on ties); balls the
/// sample misses take the global majority sign.
pub fn hinge_erm_balls(sample: &LabeledSample, spec: &BallFamilySpec) -> Result<BallSignClassifier> {
    if sample.num_labels != 2 {
        return Err(Error::NotBinary(sample.num_labels));
    }
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut per_ball = vec![Vec::new(); spec.len()];
    for (x, y) in &sample.items {
        per_ball[spec.ball_of(x)?].push(label_sign(*y));
    }
    let total: f64 = sample.labels().map(label_sign).sum();
    let global = if total >= 0.0 { 1.0 } else { -1.0 };
    let signs = per_ball
        .iter()
        .map(|ys| {
            if ys.is_empty() {
                global
            } else if hinge_loss_constant(ys, 1.0) <= hinge_loss_constant(ys, -1.0) {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    BallSignClassifier::new(spec.clone(), signs)
}

/// Whether the majority-constant hinge loss `n - |Σ y|` beats the lower
/// bound `n(1 - 2Lr)` that every non-constant L-Lipschitz hypothesis pays on
/// a ball of radius r.
pub fn hinge_separation_check(signs: &[f64], lipschitz_l: f64, radius: f64) -> Result<bool> {
    let spread = 2.0 * lipschitz_l * radius;
    if !(spread < 1.0) || spread < 0.0 {
        return Err(Error::InvalidParameter(format!("need 0 <= 2Lr < 1, got {spread}")));
    }
    let n = signs.len() as f64;
    let majority_loss = n - signs.iter().sum::<f64>().abs();
    Ok(majority_loss < n * (1.0 - spread))
}
