//! Browser bindings for three small interactive views: spline vs 1-NN on a
//! random sample, the majority-vote lower bound curve, and majority-vote
//! accuracy of a teacher ensemble.

use distill_lab::dist::{Classifier, LabeledSample, MetricSpace, Point};
use distill_lab::distill::majority_accuracy;
use distill_lab::induced::{lower_bound_demo, lower_bound_gamma};
use distill_lab::learners::{fit_spline, one_nn, spline_classifier};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn sample(xs: &[f64], labels: &[u8]) -> Result<LabeledSample, JsError> {
    if xs.len() != labels.len() {
        return Err(js("xs and labels differ in length"));
    }
    let mut items: Vec<(Point, usize)> =
        xs.iter().zip(labels).map(|(&x, &y)| Ok((Point::scalar(x).map_err(js)?, y as usize))).collect::<Result<_, JsError>>()?;
    items.sort_by(|a, b| a.0.coords()[0].total_cmp(&b.0.coords()[0]));
    items.dedup_by(|a, b| a.0 == b.0);
    LabeledSample::new(2, items).map_err(js)
}

/// Spline values, spline signs and 1-NN labels on `points` evenly spaced
/// grid points over [lo, hi], as JSON `{x, spline, sign, nn}`.
#[wasm_bindgen]
pub fn spline_vs_nn(xs: &[f64], labels: &[u8], lo: f64, hi: f64, points: usize) -> Result<String, JsError> {
    let s = sample(xs, labels)?;
    let spline = fit_spline(&s).map_err(js)?;
    let classifier = spline_classifier(spline.clone());
    let nn = one_nn(&s, MetricSpace::euclidean(1)).map_err(js)?;
    let n = points.max(2);
    let mut out = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for j in 0..n {
        let x = lo + (hi - lo) * j as f64 / (n - 1) as f64;
        let p = Point::scalar(x).map_err(js)?;
        out.0.push(x);
        out.1.push(spline.evaluate(x));
        out.2.push(classifier.predict(&p).map_err(js)?);
        out.3.push(nn.predict(&p).map_err(js)?);
    }
    Ok(json!({ "x": out.0, "spline": out.1, "sign": out.2, "nn": out.3 }).to_string())
}

/// Expected clean error of the majority rule for m = 0..=max_m at
/// γ = sqrt(ln(4/3)/(2M)), as JSON `{gamma, m, error}`.
#[wasm_bindgen]
pub fn lower_bound_curve(big_m: usize, max_m: usize) -> Result<String, JsError> {
    let errors = (0..=max_m).map(|m| lower_bound_demo(big_m, m)).collect::<Result<Vec<_>, _>>().map_err(js)?;
    Ok(json!({ "gamma": lower_bound_gamma(big_m), "m": (0..=max_m).collect::<Vec<_>>(), "error": errors }).to_string())
}

/// Majority-vote accuracy of k = 1, 3, ..., max_k independent teachers that
/// are each right with probability `p`, as JSON `{k, accuracy}`.
#[wasm_bindgen]
pub fn ensemble_curve(p: f64, max_k: usize) -> Result<String, JsError> {
    let ks: Vec<usize> = (1..=max_k.min(23)).step_by(2).collect();
    let acc = ks.iter().map(|&k| majority_accuracy(&vec![p; k])).collect::<Result<Vec<_>, _>>().map_err(js)?;
    Ok(json!({ "k": ks, "accuracy": acc }).to_string())
}
