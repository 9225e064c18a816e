use super::{CalibrationError, LabeledSample};
use crate::intent::{classify, validate_boundary, BoundaryParams, FeatureVector, Intent};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const MIN_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    /// Soft-margin penalty.
    pub c: f64,
    pub epochs: usize,
    /// Step size in epoch `e` (1-based) is `learning_rate / sqrt(e)`.
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self { c: 1.0, epochs: 200, learning_rate: 0.1, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when a ratio had a zero denominator and was reported as 0.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub params: BoundaryParams,
    pub metrics: ClassifierMetrics,
    pub n_samples: usize,
    pub regularization: f64,
}

/// Confusion-matrix metrics with `SelfFirst` as the positive class.
pub fn evaluate_classifier(params: &BoundaryParams, samples: &[LabeledSample]) -> ClassifierMetrics {
    let (mut tp, mut fp, mut fn_, mut tn) = (0usize, 0usize, 0usize, 0usize);
    for s in samples {
        let predicted = classify(params, FeatureVector { x1: s.x1, x2: s.x2 }).value;
        match (predicted, s.label) {
            (Intent::SelfFirst, Intent::SelfFirst) => tp += 1,
            (Intent::SelfFirst, Intent::SelfYields) => fp += 1,
            (Intent::SelfYields, Intent::SelfFirst) => fn_ += 1,
            (Intent::SelfYields, Intent::SelfYields) => tn += 1,
        }
    }
    let mut degenerate = false;
    let mut ratio = |num: usize, den: usize| {
        if den == 0 {
            degenerate = true;
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let accuracy = ratio(tp + tn, samples.len());
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        degenerate = true;
        0.0
    };
    ClassifierMetrics { accuracy, precision, recall, f1, degenerate }
}

fn mean_sd(v: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = v.clone().count() as f64;
    let m = v.clone().sum::<f64>() / n;
    let sd = (v.map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
    (m, if sd > 0.0 { sd } else { 1.0 })
}

/// Soft-margin linear SVM by hinge-loss subgradient descent on
/// standardized features; the result is expressed in raw feature units.
pub fn train_linear_svm(samples: &[LabeledSample], cfg: &SvmConfig) -> Result<TrainedModel, CalibrationError> {
    if samples.len() < MIN_SAMPLES {
        return Err(CalibrationError::TooFewSamples { n: samples.len(), min: MIN_SAMPLES });
    }
    let first = samples[0].label;
    if samples.iter().all(|s| s.label == first) {
        return Err(CalibrationError::SingleClass(first));
    }
    let perspective = samples[0].perspective;
    let (m1, s1) = mean_sd(samples.iter().map(|s| s.x1));
    let (m2, s2) = mean_sd(samples.iter().map(|s| s.x2));
    let data: Vec<([f64; 2], f64, f64)> = samples
        .iter()
        .map(|s| {
            let y = if s.label == Intent::SelfFirst { 1.0 } else { -1.0 };
            ([(s.x1 - m1) / s1, (s.x2 - m2) / s2], y, s.weight)
        })
        .collect();

    let n = data.len() as f64;
    let lambda = 1.0 / (n * cfg.c);
    let mut w = [0.0f64; 2];
    let mut b = 0.0f64;
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for epoch in 1..=cfg.epochs {
        let eta = cfg.learning_rate / (epoch as f64).sqrt();
        order.shuffle(&mut rng);
        for &i in &order {
            let (z, y, weight) = data[i];
            let margin = y * (w[0] * z[0] + w[1] * z[1] + b);
            for k in 0..2 {
                let hinge = if margin < 1.0 { -weight * y * z[k] } else { 0.0 };
                w[k] -= eta * (lambda * w[k] + hinge);
            }
            if margin < 1.0 {
                b += eta * weight * y;
            }
        }
    }

    let w1 = w[0] / s1;
    let w2 = w[1] / s2;
    let b = b - w[0] * m1 / s1 - w[1] * m2 / s2;
    let mut params = BoundaryParams::new(w1, w2, b, perspective);
    let mut metrics = evaluate_classifier(&params, samples);
    if metrics.accuracy < 0.5 {
        params = params.flipped();
        metrics = evaluate_classifier(&params, samples);
    }
    let report = validate_boundary(&params);
    if !report.passed() {
        return Err(CalibrationError::Rejected {
            params,
            failures: report.failures().iter().map(|s| s.to_string()).collect(),
        });
    }
    Ok(TrainedModel { params, metrics, n_samples: samples.len(), regularization: cfg.c })
}
