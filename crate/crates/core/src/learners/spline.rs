use serde_json::json;

use crate::dist::{label_sign, sign_label, Classifier, ClassifierDump, Label, LabeledSample, Point};
use crate::error::{Error, Result};

/// Piecewise-linear interpolant through sorted knots `(x_i, y_i)` with
/// `y_i = ±1`, constant beyond the outermost knots.
///
/// This is the function a depth-2 ReLU network of unbounded width computes
/// when it interpolates a 1D sample with minimal weight norm.
#[derive(Clone, Debug, PartialEq)]
pub struct Spline1D {
    knots: Vec<(f64, f64)>,
}

impl Spline1D {
    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        let k = &self.knots;
        let (first, last) = (k[0], k[k.len() - 1]);
        if x <= first.0 {
            return first.1;
        }
        if x >= last.0 {
            return last.1;
        }
        // First knot strictly right of x; x lies in [k[i-1], k[i]).
        let i = k.partition_point(|&(kx, _)| kx <= x);
        let (x0, y0) = k[i - 1];
        let (x1, y1) = k[i];
        if x == x0 {
            return y0;
        }
        y0 + (y1 - y0) / (x1 - x0) * (x - x0)
    }
}

fn knots_from(sample: &LabeledSample, keep_first: bool) -> Result<Spline1D> {
    if sample.num_labels != 2 {
        return Err(Error::NotBinary(sample.num_labels));
    }
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut knots = Vec::with_capacity(sample.len());
    for (p, y) in &sample.items {
        if p.dim() != 1 {
            return Err(Error::InvalidParameter(format!("spline needs 1D points, got dimension {}", p.dim())));
        }
        knots.push((p.coords()[0], label_sign(*y)));
    }
    // Stable sort keeps sample order among equal x.
    knots.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(knots.len());
    for knot in knots {
        match out.last() {
            Some(prev) if prev.0 == knot.0 => {
                if !keep_first {
                    return Err(Error::DuplicateKnot(knot.0));
                }
            }
            _ => out.push(knot),
        }
    }
    Ok(Spline1D { knots: out })
}

/// Linear spline interpolation of a ±1-labelled 1D sample. Repeated
/// x-values are an error.
pub fn fit_spline(sample: &LabeledSample) -> Result<Spline1D> {
    knots_from(sample, false)
}

/// As [`fit_spline`], but a repeated x keeps the label of its first
/// occurrence, the same point 1-NN would answer with.
pub fn fit_spline_first_occurrence(sample: &LabeledSample) -> Result<Spline1D> {
    knots_from(sample, true)
}

#[derive(Clone, Debug)]
pub struct SplineClassifier {
    spline: Spline1D,
}

impl SplineClassifier {
    pub fn spline(&self) -> &Spline1D {
        &self.spline
    }
}

/// sign of the spline, with sign(0) = +1.
pub fn spline_classifier(spline: Spline1D) -> SplineClassifier {
    SplineClassifier { spline }
}

impl Classifier for SplineClassifier {
    fn predict(&self, x: &Point) -> Result<Label> {
        if x.dim() != 1 {
            return Err(Error::InvalidParameter("spline classifier takes 1D points".into()));
        }
        Ok(sign_label(self.spline.evaluate(x.coords()[0])))
    }

    fn score(&self, x: &Point) -> Option<f64> {
        (x.dim() == 1).then(|| self.spline.evaluate(x.coords()[0]))
    }

    fn dump(&self) -> ClassifierDump {
        ClassifierDump {
            kind: "spline".into(),
            parameters: json!({ "knots": self.spline.knots }),
            memory: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::MetricSpace;
    use crate::learners::one_nn;
    use approx::assert_abs_diff_eq;

    fn sample(items: &[(f64, Label)]) -> LabeledSample {
        LabeledSample::new(2, items.iter().map(|&(x, y)| (Point::scalar(x).unwrap(), y)).collect()).unwrap()
    }

    #[test]
    fn interpolation_examples() {
        let s = fit_spline(&sample(&[(1.0, 1), (0.0, 0)])).unwrap();
        assert_abs_diff_eq!(s.evaluate(0.3), -0.4, epsilon = 1e-15);
        assert_eq!(s.evaluate(0.0), -1.0);
        assert_eq!(s.evaluate(1.0), 1.0);
        assert_eq!(s.evaluate(-5.0), -1.0);
        assert_eq!(s.evaluate(7.0), 1.0);
    }

    #[test]
    fn knots_are_reproduced_exactly() {
        let s = fit_spline(&sample(&[(0.3, 1), (0.1, 0), (0.7, 0), (0.45, 1), (0.9, 1)])).unwrap();
        for &(x, y) in s.knots() {
            assert_eq!(s.evaluate(x), y);
        }
        assert!(s.knots().windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn duplicates_are_rejected_unless_asked() {
        let dup = sample(&[(0.5, 1), (0.2, 0), (0.5, 0)]);
        assert!(matches!(fit_spline(&dup), Err(Error::DuplicateKnot(x)) if x == 0.5));
        let s = fit_spline_first_occurrence(&dup).unwrap();
        assert_eq!(s.knots(), &[(0.2, -1.0), (0.5, 1.0)]);
    }

    #[test]
    fn sign_examples() {
        let s = sample(&[(0.0, 0), (0.5, 1), (1.0, 0)]);
        let h = spline_classifier(fit_spline(&s).unwrap());
        let nn = one_nn(&s, MetricSpace::euclidean(1)).unwrap();
        let x = Point::scalar(0.2).unwrap();
        assert_abs_diff_eq!(h.score(&x).unwrap(), -0.2, epsilon = 1e-15);
        assert_eq!(h.predict(&x).unwrap(), 0);
        assert_eq!(nn.predict(&x).unwrap(), 0);
        let zero = Point::scalar(0.25).unwrap();
        assert_eq!(h.score(&zero).unwrap(), 0.0);
        assert_eq!(h.predict(&zero).unwrap(), 1);
    }
}
