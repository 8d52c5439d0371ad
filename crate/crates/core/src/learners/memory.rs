use crate::dist::{Classifier, LabeledSample, MetricSpace};
use crate::error::{Error, Result};
use crate::learners::{one_nn, NNModel};

/// A memory budget of `bits`, where each stored item costs
/// `dim * bits_per_coord + ceil(log2 C)` bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MemoryBudget {
    pub bits: u64,
    pub bits_per_coord: u64,
}

impl MemoryBudget {
    pub fn bits_per_item(&self, dim: usize, num_labels: usize) -> u64 {
        let label_bits = (num_labels.max(1) as u64).next_power_of_two().trailing_zeros() as u64;
        dim as u64 * self.bits_per_coord + label_bits
    }

    /// Number of items that fit.
    pub fn capacity(&self, dim: usize, num_labels: usize) -> usize {
        match self.bits_per_item(dim, num_labels) {
            0 => usize::MAX,
            per => (self.bits / per) as usize,
        }
    }
}

/// 1-NN restricted to what fits in `budget`.
///
/// If the whole sample fits this is plain 1-NN. Otherwise the sample is
/// condensed greedily in order: an item is stored only when the items
/// stored so far misclassify it, until the budget is full.
pub fn limited_memory_1nn(sample: &LabeledSample, budget: MemoryBudget, metric: MetricSpace) -> Result<NNModel> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let capacity = budget.capacity(metric.dim, sample.num_labels);
    if capacity == 0 {
        return Err(Error::InvalidParameter(format!(
            "budget of {} bits stores no item of {} bits",
            budget.bits,
            budget.bits_per_item(metric.dim, sample.num_labels)
        )));
    }
    if sample.len() <= capacity {
        return one_nn(sample, metric);
    }
    let mut stored = LabeledSample {
        num_labels: sample.num_labels,
        items: vec![sample.items[0].clone()],
    };
    for item in &sample.items[1..] {
        if stored.len() == capacity {
            break;
        }
        let current = one_nn(&stored, metric)?;
        if current.predict(&item.0)? != item.1 {
            stored.items.push(item.clone());
        }
    }
    one_nn(&stored, metric)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{Label, Point};

    fn sample(items: &[(f64, Label)]) -> LabeledSample {
        LabeledSample::new(2, items.iter().map(|&(x, y)| (Point::scalar(x).unwrap(), y)).collect()).unwrap()
    }

    fn budget_for(items: u64) -> MemoryBudget {
        // 1D, 2 labels, 8 bits per coordinate: 9 bits per item
        MemoryBudget { bits: 9 * items, bits_per_coord: 8 }
    }

    #[test]
    fn bit_accounting() {
        let b = MemoryBudget { bits: 100, bits_per_coord: 8 };
        assert_eq!(b.bits_per_item(1, 2), 9);
        assert_eq!(b.bits_per_item(3, 10), 28);
        assert_eq!(b.capacity(1, 2), 11);
    }

    #[test]
    fn full_sample_fits() {
        let s = sample(&[(0.0, 0), (0.4, 1), (0.9, 0), (1.3, 1)]);
        let metric = MetricSpace::euclidean(1);
        let h = limited_memory_1nn(&s, budget_for(10), metric).unwrap();
        let nn = one_nn(&s, metric).unwrap();
        for i in 0..30 {
            let x = Point::scalar(i as f64 * 0.05).unwrap();
            assert_eq!(h.predict(&x).unwrap(), nn.predict(&x).unwrap());
        }
    }

    #[test]
    fn capacity_one_is_first_label() {
        let s = sample(&[(0.0, 1), (0.4, 0), (0.9, 0)]);
        let h = limited_memory_1nn(&s, budget_for(1), MetricSpace::euclidean(1)).unwrap();
        assert_eq!(h.memory().len(), 1);
        for x in [0.0, 0.4, 5.0] {
            assert_eq!(h.predict(&Point::scalar(x).unwrap()).unwrap(), 1);
        }
    }

    #[test]
    fn constant_labels_store_one_item() {
        let s = sample(&[(0.0, 0), (0.4, 0), (0.9, 0), (1.5, 0)]);
        let h = limited_memory_1nn(&s, budget_for(2), MetricSpace::euclidean(1)).unwrap();
        assert_eq!(h.memory().len(), 1);
        assert_eq!(h.predict(&Point::scalar(3.0).unwrap()).unwrap(), 0);
    }

    #[test]
    fn condensation_stores_first_errors() {
        let s = sample(&[(0.0, 0), (0.1, 0), (1.0, 1), (1.1, 1), (2.0, 0), (3.0, 1)]);
        let h = limited_memory_1nn(&s, budget_for(3), MetricSpace::euclidean(1)).unwrap();
        let xs: Vec<f64> = h.memory().items.iter().map(|(p, _)| p.coords()[0]).collect();
        assert_eq!(xs, vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn zero_capacity_is_rejected() {
        let s = sample(&[(0.0, 0)]);
        assert!(limited_memory_1nn(&s, MemoryBudget { bits: 8, bits_per_coord: 8 }, MetricSpace::euclidean(1)).is_err());
    }
}
