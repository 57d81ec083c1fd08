//! Batch-level mix planning (pairing permutation, probability gate) and the
//! per-sample weighted cross-entropy loss.

use clap::ValueEnum;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clip::Label;
use crate::error::{Error, Result};

/// Predicted probabilities are clamped below at this value before `log`.
pub const LOG_EPS: f64 = 1e-12;

/// Which mix augmentation a batch (or run) uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MixStrategy {
    None,
    Objectmix,
    ObjectmixOr,
    Videomix,
    Combined,
}

/// One batch's mixing decisions.
///
/// `pairing` is stored 0-based in memory and serialized 1-based, matching the
/// usual presentation of a permutation of `1..B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchMixPlan {
    pub batch_size: usize,
    /// Outcome of the per-batch probability gate.
    pub applied: bool,
    #[serde(with = "pairing_one_based")]
    pub pairing: Vec<usize>,
    pub per_sample_lambda: Vec<f64>,
    pub strategy: MixStrategy,
}

mod pairing_one_based {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(pairing: &[usize], ser: S) -> Result<S::Ok, S::Error> {
        let shifted: Vec<u64> = pairing.iter().map(|&j| j as u64 + 1).collect();
        shifted.serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<usize>, D::Error> {
        let raw = Vec::<u64>::deserialize(de)?;
        raw.iter()
            .map(|&j| {
                if j == 0 {
                    Err(serde::de::Error::custom(
                        "pairing entries are 1-based; found 0",
                    ))
                } else {
                    Ok(j as usize - 1)
                }
            })
            .collect()
    }
}

impl BatchMixPlan {
    /// A plan that leaves the batch untouched.
    pub fn identity(batch_size: usize) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::InvalidArgument(
                "batch size must be at least 1".to_string(),
            ));
        }
        Ok(BatchMixPlan {
            batch_size,
            applied: false,
            pairing: (0..batch_size).collect(),
            per_sample_lambda: vec![1.0; batch_size],
            strategy: MixStrategy::None,
        })
    }

    /// Checks the structural invariants: pairing is a bijection, lambdas lie
    /// in [0,1], and an un-applied plan degenerates to the identity.
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "batch size must be at least 1".to_string(),
            ));
        }
        if self.pairing.len() != self.batch_size {
            return Err(Error::InvalidArgument(format!(
                "pairing lists {} entries for a batch of {}",
                self.pairing.len(),
                self.batch_size
            )));
        }
        let mut seen = vec![false; self.batch_size];
        for &j in &self.pairing {
            if j >= self.batch_size || seen[j] {
                return Err(Error::InvalidArgument(format!(
                    "pairing is not a bijection on a batch of {}",
                    self.batch_size
                )));
            }
            seen[j] = true;
        }
        if self.per_sample_lambda.len() != self.batch_size {
            return Err(Error::InvalidArgument(format!(
                "plan lists {} lambdas for a batch of {}",
                self.per_sample_lambda.len(),
                self.batch_size
            )));
        }
        for &lam in &self.per_sample_lambda {
            if !lam.is_finite() || !(0.0..=1.0).contains(&lam) {
                return Err(Error::InvalidArgument(format!(
                    "per-sample lambda {lam} outside [0,1]"
                )));
            }
        }
        if !self.applied {
            if self.per_sample_lambda.iter().any(|&l| l != 1.0) {
                return Err(Error::InvalidArgument(
                    "un-applied plan must carry all-1 lambdas".to_string(),
                ));
            }
            if self.strategy != MixStrategy::None {
                return Err(Error::InvalidArgument(
                    "un-applied plan must carry strategy none".to_string(),
                ));
            }
        }
        Ok(())
    }
}

/// Draws one batch plan: a single Bernoulli(p) gate, then (when the gate
/// fires and the strategy mixes) a uniform pairing permutation. Fixed points
/// are allowed. Per-sample lambdas start at 1 for the compositor to fill.
pub fn plan_batch<R: Rng + ?Sized>(
    rng: &mut R,
    b: usize,
    p: f64,
    strategy: MixStrategy,
) -> Result<BatchMixPlan> {
    if b == 0 {
        return Err(Error::InvalidArgument(
            "batch size must be at least 1".to_string(),
        ));
    }
    if !p.is_finite() || !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "application probability {p} outside [0,1]"
        )));
    }
    // The gate is always drawn, keeping the stream aligned across strategies.
    let gate = rng.random_bool(p);
    let applied = gate && strategy != MixStrategy::None;
    let mut plan = BatchMixPlan::identity(b)?;
    if applied {
        plan.applied = true;
        plan.strategy = strategy;
        plan.pairing.shuffle(rng);
    }
    Ok(plan)
}

/// A predicted probability distribution over classes.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    probs: Vec<f64>,
}

impl Prediction {
    /// Probabilities must be non-negative, finite, and sum to 1 within 1e-9.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidArgument(
                "prediction needs at least one class".to_string(),
            ));
        }
        if let Some(bad) = probs.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "prediction probabilities must be finite and non-negative, found {bad}"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "prediction probabilities sum to {sum}, expected 1 within 1e-9"
            )));
        }
        Ok(Prediction { probs })
    }

    pub fn num_classes(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// `-sum_c target_c * ln(max(pred_c, LOG_EPS))`.
pub fn cross_entropy(pred: &Prediction, target: &Label) -> Result<f64> {
    if pred.num_classes() != target.num_classes() {
        return Err(Error::DimensionMismatch(format!(
            "prediction has {} classes, target has {}",
            pred.num_classes(),
            target.num_classes()
        )));
    }
    Ok(pred
        .probs()
        .iter()
        .zip(target.weights())
        .map(|(&p, &y)| -y * p.max(LOG_EPS).ln())
        .sum())
}

fn check_batch_inputs(preds: &[Prediction], labels: &[Label], b: usize) -> Result<()> {
    if preds.len() != b || labels.len() != b {
        return Err(Error::DimensionMismatch(format!(
            "batch of {b} got {} predictions and {} labels",
            preds.len(),
            labels.len()
        )));
    }
    Ok(())
}

/// The per-sample weighted loss:
/// `sum_i lambda_i * CE(pred_i, y_i) + (1 - lambda_i) * CE(pred_i, y_{j_i})`.
pub fn mixed_batch_loss(
    preds: &[Prediction],
    labels: &[Label],
    plan: &BatchMixPlan,
) -> Result<f64> {
    plan.validate()?;
    check_batch_inputs(preds, labels, plan.batch_size)?;
    let mut total = 0.0;
    for i in 0..plan.batch_size {
        let lam = plan.per_sample_lambda[i];
        let own = cross_entropy(&preds[i], &labels[i])?;
        let partner = cross_entropy(&preds[i], &labels[plan.pairing[i]])?;
        total += lam * own + (1.0 - lam) * partner;
    }
    Ok(total)
}

/// The shared-lambda variant used by rectangle-mix losses:
/// `lam * sum_i CE(pred_i, y_i) + (1 - lam) * sum_i CE(pred_i, y_{j_i})`.
pub fn fixed_lambda_batch_loss(
    preds: &[Prediction],
    labels: &[Label],
    pairing: &[usize],
    lam: f64,
) -> Result<f64> {
    if !lam.is_finite() || !(0.0..=1.0).contains(&lam) {
        return Err(Error::InvalidArgument(format!(
            "shared lambda {lam} outside [0,1]"
        )));
    }
    let b = pairing.len();
    check_batch_inputs(preds, labels, b)?;
    let mut seen = vec![false; b];
    for &j in pairing {
        if j >= b || seen[j] {
            return Err(Error::InvalidArgument(format!(
                "pairing is not a bijection on a batch of {b}"
            )));
        }
        seen[j] = true;
    }
    let mut own_sum = 0.0;
    let mut partner_sum = 0.0;
    for i in 0..b {
        own_sum += cross_entropy(&preds[i], &labels[i])?;
        partner_sum += cross_entropy(&preds[i], &labels[pairing[i]])?;
    }
    Ok(lam * own_sum + (1.0 - lam) * partner_sum)
}

/// One line of the loss-simulation harness: predictions, labels (class index
/// or explicit weights), and the batch plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HarnessBatch {
    pub preds: Vec<Vec<f64>>,
    pub labels: Vec<HarnessLabel>,
    pub plan: BatchMixPlan,
}

/// A label given either as a bare class index or a full weight vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HarnessLabel {
    Class(usize),
    Weights(Vec<f64>),
}

impl HarnessBatch {
    /// Evaluates the batch loss for this line.
    pub fn loss(&self) -> Result<f64> {
        let num_classes = self
            .preds
            .first()
            .map(|p| p.len())
            .ok_or_else(|| Error::InvalidArgument("batch lists no predictions".to_string()))?;
        let preds = self
            .preds
            .iter()
            .map(|p| Prediction::new(p.clone()))
            .collect::<Result<Vec<_>>>()?;
        let labels = self
            .labels
            .iter()
            .map(|l| match l {
                HarnessLabel::Class(c) => Label::one_hot(num_classes, *c),
                HarnessLabel::Weights(w) => Label::new(w.clone()),
            })
            .collect::<Result<Vec<_>>>()?;
        mixed_batch_loss(&preds, &labels, &self.plan)
    }
}
