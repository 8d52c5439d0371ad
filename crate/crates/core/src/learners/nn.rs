use serde_json::json;

use crate::dist::{plurality, Classifier, ClassifierDump, Label, LabeledSample, MetricSpace, Point};
use crate::error::{Error, Result};

/// k-nearest-neighbour classifier over a stored sample.
///
/// Neighbours are ranked by `(distance, sample index)`, so distance ties go
/// to the earliest stored item; vote ties go to the lowest label.
#[derive(Clone, Debug)]
pub struct NNModel {
    memory: LabeledSample,
    k: usize,
    metric: MetricSpace,
}

impl NNModel {
    pub fn new(memory: LabeledSample, k: usize, metric: MetricSpace) -> Result<Self> {
        if memory.is_empty() {
            return Err(Error::EmptySample);
        }
        if k == 0 || k % 2 == 0 {
            return Err(Error::InvalidParameter(format!("k must be odd and positive, got {k}")));
        }
        if k > memory.len() {
            return Err(Error::InvalidParameter(format!(
                "k = {k} exceeds the sample size {}",
                memory.len()
            )));
        }
        for (p, _) in &memory.items {
            metric.check(p)?;
        }
        Ok(NNModel { memory, k, metric })
    }

    pub fn memory(&self) -> &LabeledSample {
        &self.memory
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn nearest(&self, x: &Point) -> Label {
        let mut best = (f64::INFINITY, 0usize);
        for (i, (p, _)) in self.memory.items.iter().enumerate() {
            let d = self.metric.distance(x, p);
            if d < best.0 {
                best = (d, i);
            }
        }
        self.memory.items[best.1].1
    }
}

impl Classifier for NNModel {
    fn predict(&self, x: &Point) -> Result<Label> {
        self.metric.check(x)?;
        if self.k == 1 {
            return Ok(self.nearest(x));
        }
        let mut ranked: Vec<(f64, usize)> = self
            .memory
            .items
            .iter()
            .enumerate()
            .map(|(i, (p, _))| (self.metric.distance(x, p), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < ranked.len() {
            ranked.select_nth_unstable_by(self.k - 1, cmp);
        }
        let mut votes = vec![0; self.memory.num_labels];
        for &(_, i) in &ranked[..self.k] {
            votes[self.memory.items[i].1] += 1;
        }
        Ok(plurality(&votes))
    }

    fn dump(&self) -> ClassifierDump {
        ClassifierDump {
            kind: if self.k == 1 { "one-nn".into() } else { "k-nn".into() },
            parameters: json!({ "k": self.k, "metric": self.metric }),
            memory: Some(self.memory.clone()),
        }
    }
}

pub fn one_nn(sample: &LabeledSample, metric: MetricSpace) -> Result<NNModel> {
    NNModel::new(sample.clone(), 1, metric)
}

pub fn k_nn(sample: &LabeledSample, k: usize, metric: MetricSpace) -> Result<NNModel> {
    NNModel::new(sample.clone(), k, metric)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use rand::Rng;

    fn sample(items: &[(f64, Label)]) -> LabeledSample {
        LabeledSample::new(2, items.iter().map(|&(x, y)| (Point::scalar(x).unwrap(), y)).collect()).unwrap()
    }

    fn q(x: f64) -> Point {
        Point::scalar(x).unwrap()
    }

    #[test]
    fn one_nn_examples() {
        let s = sample(&[(0.0, 1), (1.0, 0)]);
        let h = one_nn(&s, MetricSpace::euclidean(1)).unwrap();
        assert_eq!(h.predict(&q(0.2)).unwrap(), 1);
        assert_eq!(h.predict(&q(0.5)).unwrap(), 1);
        assert_eq!(h.predict(&q(0.9)).unwrap(), 0);
        let single = one_nn(&sample(&[(3.0, 0)]), MetricSpace::euclidean(1)).unwrap();
        for x in [-10.0, 0.0, 3.0, 99.0] {
            assert_eq!(single.predict(&q(x)).unwrap(), 0);
        }
    }

    #[test]
    fn one_nn_rejects_empty_sample() {
        assert!(matches!(
            one_nn(&sample(&[]), MetricSpace::euclidean(1)),
            Err(Error::EmptySample)
        ));
    }

    #[test]
    fn k_nn_examples() {
        let s = sample(&[(0.0, 1), (0.1, 1), (0.2, 0), (5.0, 0), (6.0, 0)]);
        let h = k_nn(&s, 3, MetricSpace::euclidean(1)).unwrap();
        assert_eq!(h.predict(&q(0.05)).unwrap(), 1);
        let all = k_nn(&s, 5, MetricSpace::euclidean(1)).unwrap();
        assert_eq!(all.predict(&q(0.0)).unwrap(), 0);
        assert!(k_nn(&s, 2, MetricSpace::euclidean(1)).is_err());
        assert!(k_nn(&s, 7, MetricSpace::euclidean(1)).is_err());
    }

    #[test]
    fn k_nn_neighbour_ties_go_to_lowest_index() {
        // Query at 1.0: items 1, 2, 3 are all at distance 1; the set must be
        // {0, 1, 2} → labels (1, 1, 0) → 1.
        let s = sample(&[(1.0, 1), (0.0, 1), (2.0, 0), (2.0, 0), (0.0, 0)]);
        let h = k_nn(&s, 3, MetricSpace::euclidean(1)).unwrap();
        assert_eq!(h.predict(&q(1.0)).unwrap(), 1);
    }

    #[test]
    fn k_equal_one_matches_one_nn() {
        let mut rng = rng_from_seed(5);
        let items: Vec<(f64, Label)> = (0..40).map(|_| (rng.gen_range(0.0..1.0), rng.gen_range(0..2))).collect();
        let s = sample(&items);
        let a = one_nn(&s, MetricSpace::euclidean(1)).unwrap();
        let b = k_nn(&s, 1, MetricSpace::euclidean(1)).unwrap();
        for _ in 0..100 {
            let x = q(rng.gen_range(-0.5..1.5));
            assert_eq!(a.predict(&x).unwrap(), b.predict(&x).unwrap());
        }
    }

    #[test]
    fn k_nn_matches_full_sort_oracle() {
        let mut rng = rng_from_seed(11);
        for _ in 0..50 {
            // Coarse grid so distance ties are common.
            let items: Vec<(f64, Label)> = (0..25)
                .map(|_| (rng.gen_range(0..10) as f64 / 10.0, rng.gen_range(0..2)))
                .collect();
            let s = sample(&items);
            for k in [1, 3, 5, 7] {
                let h = k_nn(&s, k, MetricSpace::euclidean(1)).unwrap();
                for _ in 0..20 {
                    let x = rng.gen_range(0..20) as f64 / 20.0;
                    let mut order: Vec<(f64, usize)> =
                        items.iter().enumerate().map(|(i, &(p, _))| ((p - x).abs(), i)).collect();
                    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                    let ones = order[..k].iter().filter(|&&(_, i)| items[i].1 == 1).count();
                    let expected = if 2 * ones > k { 1 } else { 0 };
                    assert_eq!(h.predict(&q(x)).unwrap(), expected);
                }
            }
        }
    }

    #[test]
    fn multiclass_vote_tie_goes_to_lowest_label() {
        let items = vec![(q(0.0), 2), (q(0.1), 1), (q(0.2), 0)];
        let s = LabeledSample::new(3, items).unwrap();
        let h = k_nn(&s, 3, MetricSpace::euclidean(1)).unwrap();
        assert_eq!(h.predict(&q(0.0)).unwrap(), 0);
    }
}
