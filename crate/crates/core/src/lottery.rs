//! HF/HE functionals on discrete lotteries.
//!
//! A lottery `Y` is split into its gain part `Y₊ = max(Y, 0)` and loss part
//! `Y₋ = min(Y, 0)`. The functional corrects the mean by weighted mean
//! absolute deviations of each part:
//!
//! ```text
//! H(Y) = μ + (2λ₊ − 1)·E|Y₊ − μ₊| + (2λ₋ − 1)·E|Y₋ − μ₋|
//! ```
//!
//! which is also the certainty equivalent of `Y` for a decision maker with
//! parameters `(λ₊, λ₋)`. Probability distortion replaces every expectation
//! with one taken under power-normalized weights `p_iᵠ / Σ p_jᵠ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PROB_SUM_TOL: f64 = 1e-12;

/// Band on `|λ₊ − threshold|` inside which a decision maker is neutral.
pub const CLASSIFICATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lottery {
    outcomes: Vec<f64>,
    probs: Vec<f64>,
}

impl Lottery {
    pub fn new(outcomes: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::InvalidLottery(
                "at least one outcome required".into(),
            ));
        }
        if outcomes.len() != probs.len() {
            return Err(Error::InvalidLottery(format!(
                "{} outcomes but {} probabilities",
                outcomes.len(),
                probs.len()
            )));
        }
        if let Some(y) = outcomes.iter().find(|y| !y.is_finite()) {
            return Err(Error::InvalidLottery(format!("non-finite outcome {y}")));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidLottery(format!("invalid probability {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidLottery(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { outcomes, probs })
    }

    /// Builds a lottery from `(outcome, probability)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let (outcomes, probs) = pairs.iter().copied().unzip();
        Self::new(outcomes, probs)
    }

    /// Equally likely outcomes.
    pub fn uniform(outcomes: Vec<f64>) -> Result<Self> {
        let p = 1.0 / outcomes.len().max(1) as f64;
        let probs = vec![p; outcomes.len()];
        // Summation error on long uniform vectors can exceed the strict
        // tolerance, so validate everything except the sum.
        if outcomes.is_empty() {
            return Err(Error::InvalidLottery(
                "at least one outcome required".into(),
            ));
        }
        if let Some(y) = outcomes.iter().find(|y| !y.is_finite()) {
            return Err(Error::InvalidLottery(format!("non-finite outcome {y}")));
        }
        Ok(Self { outcomes, probs })
    }

    /// Parses a JSON array of `[outcome, probability]` pairs.
    pub fn from_json(text: &str) -> Result<Self> {
        let pairs: Vec<(f64, f64)> = serde_json::from_str(text)?;
        Self::from_pairs(&pairs)
    }

    pub fn outcomes(&self) -> &[f64] {
        &self.outcomes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn mean(&self) -> f64 {
        expect(&self.probs, &self.outcomes, |y| y)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.outcomes.iter().all(|&y| y >= 0.0)
    }

    /// Same outcomes under different probabilities (no sum check).
    fn reweighted(&self, probs: Vec<f64>) -> Self {
        Self {
            outcomes: self.outcomes.clone(),
            probs,
        }
    }
}

/// Behavioral parameters `(λ₊, λ₋, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HfheParams {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub q: f64,
}

impl HfheParams {
    pub fn new(lambda_plus: f64, lambda_minus: f64, q: f64) -> Result<Self> {
        for (name, v) in [("λ₊", lambda_plus), ("λ₋", lambda_minus)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "{name}={v} outside [0, 1]"
                )));
            }
        }
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::NonPositiveQ(q));
        }
        Ok(Self {
            lambda_plus,
            lambda_minus,
            q,
        })
    }

    /// Parameters without probability distortion.
    pub fn undistorted(lambda_plus: f64, lambda_minus: f64) -> Result<Self> {
        Self::new(lambda_plus, lambda_minus, 1.0)
    }
}

impl Default for HfheParams {
    fn default() -> Self {
        Self {
            lambda_plus: 0.30,
            lambda_minus: 0.69,
            q: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Attitude {
    Averse,
    Seeking,
    Neutral,
}

/// Classification outcome with the quantities of the neutrality line
/// `λ₊ = −m·λ₋ + k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskAttitude {
    pub attitude: Attitude,
    /// `E|Y₋ − μ₋| / E|Y₊ − μ₊|`; `None` when the gain deviation is zero.
    pub m: Option<f64>,
    pub k: Option<f64>,
    pub threshold: Option<f64>,
}

fn expect(probs: &[f64], ys: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    probs.iter().zip(ys).map(|(p, &y)| p * f(y)).sum()
}

/// Mean absolute deviations `(E|Y₊ − μ₊|, E|Y₋ − μ₋|)` under `probs`.
fn part_deviations(probs: &[f64], ys: &[f64]) -> (f64, f64) {
    let mu_plus = expect(probs, ys, |y| y.max(0.0));
    let mu_minus = expect(probs, ys, |y| y.min(0.0));
    let dev_plus = expect(probs, ys, |y| (y.max(0.0) - mu_plus).abs());
    let dev_minus = expect(probs, ys, |y| (y.min(0.0) - mu_minus).abs());
    (dev_plus, dev_minus)
}

/// Single-parameter functional for nonnegative lotteries:
/// `μ + 2{λ·E[(Y−μ)₊] + (1−λ)·E[(Y−μ)₋]}`.
pub fn h_lambda(lottery: &Lottery, lambda: f64) -> Result<f64> {
    if !lottery.is_nonnegative() {
        return Err(Error::NegativeLottery);
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "λ={lambda} outside [0, 1]"
        )));
    }
    let (ys, ps) = (lottery.outcomes(), lottery.probs());
    let mu = lottery.mean();
    let above = expect(ps, ys, |y| (y - mu).max(0.0));
    let below = expect(ps, ys, |y| (y - mu).min(0.0));
    Ok(mu + 2.0 * (lambda * above + (1.0 - lambda) * below))
}

/// Two-parameter functional `H₂`; `params.q` is ignored.
pub fn h2(lottery: &Lottery, params: &HfheParams) -> f64 {
    h2_raw(
        lottery.probs(),
        lottery.outcomes(),
        params.lambda_plus,
        params.lambda_minus,
    )
}

fn h2_raw(probs: &[f64], ys: &[f64], lambda_plus: f64, lambda_minus: f64) -> f64 {
    let mu = expect(probs, ys, |y| y);
    let (dev_plus, dev_minus) = part_deviations(probs, ys);
    mu + (2.0 * lambda_plus - 1.0) * dev_plus + (2.0 * lambda_minus - 1.0) * dev_minus
}

/// Power-normalized probability weights `p_iᵠ / Σ_j p_jᵠ`.
///
/// Zero probabilities stay at zero for every `q > 0`.
pub fn distort(probs: &[f64], q: f64) -> Result<Vec<f64>> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::NonPositiveQ(q));
    }
    if q == 1.0 {
        return Ok(probs.to_vec());
    }
    let powered: Vec<f64> = probs.iter().map(|p| p.powf(q)).collect();
    let total: f64 = powered.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidLottery("all probabilities are zero".into()));
    }
    Ok(powered.into_iter().map(|w| w / total).collect())
}

/// `H₂` with every expectation taken under distorted probabilities.
pub fn h_q(lottery: &Lottery, params: &HfheParams) -> Result<f64> {
    let weights = distort(lottery.probs(), params.q)?;
    let distorted = lottery.reweighted(weights);
    Ok(h2(&distorted, params))
}

/// Places `(λ₊, λ₋)` relative to the neutrality line of this lottery.
pub fn classify_attitude(lottery: &Lottery, lambda_plus: f64, lambda_minus: f64) -> RiskAttitude {
    let (dev_plus, dev_minus) = part_deviations(lottery.probs(), lottery.outcomes());
    let by_half = |lambda: f64| {
        if (lambda - 0.5).abs() <= CLASSIFICATION_TOL {
            Attitude::Neutral
        } else if lambda < 0.5 {
            Attitude::Averse
        } else {
            Attitude::Seeking
        }
    };
    match (dev_plus > 0.0, dev_minus > 0.0) {
        (false, false) => RiskAttitude {
            attitude: Attitude::Neutral,
            m: None,
            k: None,
            threshold: None,
        },
        // Only the loss part varies: H₂ − μ has the sign of 2λ₋ − 1.
        (false, true) => RiskAttitude {
            attitude: by_half(lambda_minus),
            m: None,
            k: None,
            threshold: None,
        },
        (true, has_losses) => {
            let m = dev_minus / dev_plus;
            let k = 0.5 * (1.0 + m);
            let threshold = -m * lambda_minus + k;
            let attitude = if !has_losses {
                by_half(lambda_plus)
            } else if (lambda_plus - threshold).abs() <= CLASSIFICATION_TOL {
                Attitude::Neutral
            } else if lambda_plus < threshold {
                Attitude::Averse
            } else {
                Attitude::Seeking
            };
            RiskAttitude {
                attitude,
                m: Some(m),
                k: Some(k),
                threshold: Some(threshold),
            }
        }
    }
}
