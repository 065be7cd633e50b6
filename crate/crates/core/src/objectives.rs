//! Portfolio objective evaluators over a scenario matrix.
//!
//! These are pure evaluators; which direction is optimized belongs to the
//! solvers. Every scenario carries probability `1/T`.

use serde::{Deserialize, Serialize};

use crate::data_io::ScenarioMatrix;
use crate::error::{Error, Result};

const BUDGET_TOL: f64 = 1e-9;
const SHORT_TOL: f64 = 1e-12;

/// Long-only, fully invested weight vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioWeights(Vec<f64>);

impl PortfolioWeights {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidWeights("empty weight vector".into()));
        }
        if let Some((k, w)) = x.iter().enumerate().find(|(_, w)| !(**w >= -SHORT_TOL)) {
            return Err(Error::InvalidWeights(format!("x[{k}] = {w} is negative")));
        }
        let total: f64 = x.iter().sum();
        if (total - 1.0).abs() > BUDGET_TOL {
            return Err(Error::InvalidWeights(format!("weights sum to {total}")));
        }
        Ok(Self(x))
    }

    /// Clips tiny negatives from a numerical solve and renormalizes.
    pub fn from_solver(mut x: Vec<f64>) -> Result<Self> {
        for w in x.iter_mut() {
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        let total: f64 = x.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidWeights("solver returned zero weights".into()));
        }
        x.iter_mut().for_each(|w| *w /= total);
        Self::new(x)
    }

    /// Unit vector on asset `k`.
    pub fn vertex(n: usize, k: usize) -> Self {
        let mut x = vec![0.0; n];
        x[k] = 1.0;
        Self(x)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for PortfolioWeights {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Prospect-theory value-function parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PtParams {
    pub alpha: f64,
    pub beta: f64,
}

impl PtParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("α={alpha} outside (0, 1]")));
        }
        if !(beta >= 0.0) {
            return Err(Error::InvalidParameter(format!("β={beta} is negative")));
        }
        Ok(Self { alpha, beta })
    }
}

impl Default for PtParams {
    fn default() -> Self {
        Self {
            alpha: 0.88,
            beta: 2.25,
        }
    }
}

fn check_dim(sm: &ScenarioMatrix, x: &[f64]) -> Result<()> {
    if sm.n_assets() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: sm.n_assets(),
            found: x.len(),
        });
    }
    Ok(())
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// `R_t(x) = Σ_k x_k r_kt` for every scenario.
pub fn portfolio_returns(sm: &ScenarioMatrix, x: &PortfolioWeights) -> Result<Vec<f64>> {
    check_dim(sm, x.as_slice())?;
    Ok(returns_unchecked(sm, x.as_slice()))
}

pub(crate) fn returns_unchecked(sm: &ScenarioMatrix, x: &[f64]) -> Vec<f64> {
    sm.rows()
        .map(|row| row.iter().zip(x).map(|(r, w)| r * w).sum())
        .collect()
}

/// HF/HE value of an equally likely return sample.
pub fn hfhe_of_returns(returns: &[f64], lambda_plus: f64, lambda_minus: f64) -> f64 {
    let inv_t = 1.0 / returns.len() as f64;
    let (mut mu, mut mu_plus, mut mu_minus) = (0.0, 0.0, 0.0);
    for &r in returns {
        mu += r;
        mu_plus += r.max(0.0);
        mu_minus += r.min(0.0);
    }
    mu *= inv_t;
    mu_plus *= inv_t;
    mu_minus *= inv_t;
    let (mut dev_plus, mut dev_minus) = (0.0, 0.0);
    for &r in returns {
        dev_plus += (r.max(0.0) - mu_plus).abs();
        dev_minus += (r.min(0.0) - mu_minus).abs();
    }
    mu + (2.0 * lambda_plus - 1.0) * dev_plus * inv_t
        + (2.0 * lambda_minus - 1.0) * dev_minus * inv_t
}

/// HF/HE functional of the portfolio return distribution.
pub fn hfhe_objective(
    sm: &ScenarioMatrix,
    x: &PortfolioWeights,
    lambda_plus: f64,
    lambda_minus: f64,
) -> Result<f64> {
    let r = portfolio_returns(sm, x)?;
    Ok(hfhe_of_returns(&r, lambda_plus, lambda_minus))
}

/// Sample mean of `(R₊)^α − β·(−R₋)^α`; `0^α` is taken as 0.
pub fn pt_of_returns(returns: &[f64], pt: &PtParams) -> f64 {
    let total: f64 = returns
        .iter()
        .map(|&r| {
            if r > 0.0 {
                r.powf(pt.alpha)
            } else if r < 0.0 {
                -pt.beta * (-r).powf(pt.alpha)
            } else {
                0.0
            }
        })
        .sum();
    total / returns.len() as f64
}

pub fn pt_objective(sm: &ScenarioMatrix, x: &PortfolioWeights, pt: &PtParams) -> Result<f64> {
    let r = portfolio_returns(sm, x)?;
    Ok(pt_of_returns(&r, pt))
}

pub fn mad_of_returns(returns: &[f64]) -> f64 {
    let mu = mean(returns);
    returns.iter().map(|r| (r - mu).abs()).sum::<f64>() / returns.len() as f64
}

/// Mean absolute deviation of the portfolio return from its mean.
pub fn mad(sm: &ScenarioMatrix, x: &PortfolioWeights) -> Result<f64> {
    let r = portfolio_returns(sm, x)?;
    Ok(mad_of_returns(&r))
}

/// `−μ(x) + c·MAD(x)`, the Mean-MAD scalarization (minimized).
pub fn mean_mad_of_returns(returns: &[f64], mad_weight: f64) -> f64 {
    -mean(returns) + mad_weight * mad_of_returns(returns)
}

/// Signs of `v_t − mean(v)` and their mean, the pieces of a subgradient of
/// `mean |v − mean(v)|`.
fn deviation_signs(values: impl Iterator<Item = f64> + Clone, len: usize) -> (Vec<f64>, f64) {
    let inv_t = 1.0 / len as f64;
    let mean = values.clone().sum::<f64>() * inv_t;
    let signs: Vec<f64> = values
        .map(|v| {
            let d = v - mean;
            if d > 0.0 {
                1.0
            } else if d < 0.0 {
                -1.0
            } else {
                0.0
            }
        })
        .collect();
    let avg = signs.iter().sum::<f64>() * inv_t;
    (signs, avg)
}

/// Subgradient of [`hfhe_of_returns`] with respect to each scenario return.
pub(crate) fn hfhe_return_gradient(
    returns: &[f64],
    lambda_plus: f64,
    lambda_minus: f64,
    out: &mut [f64],
) {
    let len = returns.len();
    let inv_t = 1.0 / len as f64;
    let (sp, ap) = deviation_signs(returns.iter().map(|r| r.max(0.0)), len);
    let (sm, am) = deviation_signs(returns.iter().map(|r| r.min(0.0)), len);
    for (t, (&r, g)) in returns.iter().zip(out.iter_mut()).enumerate() {
        let mut v = 1.0;
        if r > 0.0 {
            v += (2.0 * lambda_plus - 1.0) * (sp[t] - ap);
        } else if r < 0.0 {
            v += (2.0 * lambda_minus - 1.0) * (sm[t] - am);
        }
        *g = v * inv_t;
    }
}

/// Gradient of [`pt_of_returns`]; the slope at a zero return is taken at
/// `|r| = 1e-12` on the loss side.
pub(crate) fn pt_return_gradient(returns: &[f64], pt: &PtParams, out: &mut [f64]) {
    let inv_t = 1.0 / returns.len() as f64;
    for (&r, g) in returns.iter().zip(out.iter_mut()) {
        let slope = pt.alpha * r.abs().max(1e-12).powf(pt.alpha - 1.0);
        *g = if r > 0.0 { slope } else { pt.beta * slope } * inv_t;
    }
}

/// Subgradient of [`mean_mad_of_returns`].
pub(crate) fn mean_mad_return_gradient(returns: &[f64], mad_weight: f64, out: &mut [f64]) {
    let len = returns.len();
    let inv_t = 1.0 / len as f64;
    let (signs, avg) = deviation_signs(returns.iter().copied(), len);
    for (s, g) in signs.iter().zip(out.iter_mut()) {
        *g = (-1.0 + mad_weight * (s - avg)) * inv_t;
    }
}

/// Population (1/T) covariance matrix, row-major `n x n`.
pub fn covariance(sm: &ScenarioMatrix) -> Result<Vec<Vec<f64>>> {
    let t_len = sm.n_scenarios();
    if t_len < 2 {
        return Err(Error::InsufficientObservations {
            needed: 2,
            have: t_len,
        });
    }
    let n = sm.n_assets();
    let mu = sm.mean_returns();
    let mut cov = vec![vec![0.0; n]; n];
    let mut centered = vec![0.0; n];
    for row in sm.rows() {
        for k in 0..n {
            centered[k] = row[k] - mu[k];
        }
        for i in 0..n {
            let ci = centered[i];
            for j in i..n {
                cov[i][j] += ci * centered[j];
            }
        }
    }
    let inv = 1.0 / t_len as f64;
    #[allow(clippy::needless_range_loop)]
    for i in 0..n {
        for j in i..n {
            let v = cov[i][j] * inv;
            cov[i][j] = v;
            cov[j][i] = v;
        }
    }
    Ok(cov)
}

/// `xᵀ Σ x`.
pub fn quadratic_form(cov: &[Vec<f64>], x: &[f64]) -> f64 {
    cov.iter()
        .zip(x)
        .map(|(row, xi)| xi * row.iter().zip(x).map(|(s, xj)| s * xj).sum::<f64>())
        .sum()
}

/// Equally weighted portfolio.
pub fn ew(n: usize) -> Result<PortfolioWeights> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "EW needs at least one asset".into(),
        ));
    }
    Ok(PortfolioWeights(vec![1.0 / n as f64; n]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(values: &[f64]) -> ScenarioMatrix {
        ScenarioMatrix::from_column(values).unwrap()
    }

    fn one() -> PortfolioWeights {
        PortfolioWeights::new(vec![1.0]).unwrap()
    }

    #[test]
    fn weights_validation() {
        assert!(PortfolioWeights::new(vec![0.5, 0.4]).is_err());
        assert!(PortfolioWeights::new(vec![1.5, -0.5]).is_err());
        assert!(PortfolioWeights::new(vec![1.0 + 1e-12, -1e-13]).is_ok());
        let w = PortfolioWeights::from_solver(vec![0.5, 0.5 + 1e-9, -1e-10]).unwrap();
        assert!((w.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(w.as_slice()[2], 0.0);
    }

    #[test]
    fn portfolio_returns_examples() {
        let sm = ScenarioMatrix::from_rows(&[vec![0.02, 0.04], vec![0.01, -0.03]]).unwrap();
        let r = portfolio_returns(&sm, &ew(2).unwrap()).unwrap();
        assert!((r[0] - 0.03).abs() < 1e-15);
        let r = portfolio_returns(&sm, &PortfolioWeights::vertex(2, 0)).unwrap();
        assert_eq!(r, vec![0.02, 0.01]);
        assert!(matches!(
            portfolio_returns(&sm, &one()),
            Err(Error::DimensionMismatch { .. })
        ));
        let single = col(&[0.1, -0.2]);
        assert_eq!(portfolio_returns(&single, &one()).unwrap(), vec![0.1, -0.2]);
    }

    #[test]
    fn hfhe_examples() {
        let sm = col(&[0.6, -0.4]);
        let v = hfhe_objective(&sm, &one(), 0.30, 0.69).unwrap();
        assert!((v - 0.056).abs() < 1e-12);
        let v = hfhe_objective(&sm, &one(), 0.5, 0.5).unwrap();
        assert!((v - 0.1).abs() < 1e-15);
        let flat = col(&[0.1, 0.1]);
        assert!((hfhe_objective(&flat, &one(), 0.9, 0.1).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn pt_examples() {
        let pt = PtParams::default();
        // (0.1^0.88)(1 − 2.25)/2 and (0.1^0.88 + 0.2^0.88)/2 at 40 digits.
        let v = pt_objective(&col(&[0.1, -0.1]), &one(), &pt).unwrap();
        assert!((v + 0.082_391_046_159_775_44).abs() < 1e-14);
        let v = pt_objective(&col(&[0.1, 0.2]), &one(), &pt).unwrap();
        assert!((v - 0.187_217_194_045_083_4).abs() < 1e-14);
        assert_eq!(pt_objective(&col(&[0.0, 0.0]), &one(), &pt).unwrap(), 0.0);
        assert!(PtParams::new(1.2, 1.0).is_err());
    }

    #[test]
    fn mad_examples() {
        assert!((mad(&col(&[0.01, 0.03]), &one()).unwrap() - 0.01).abs() < 1e-15);
        assert!(mad(&col(&[0.2, 0.2, 0.2]), &one()).unwrap() < 1e-15);
        assert_eq!(mad(&col(&[1.0, -1.0]), &one()).unwrap(), 1.0);
    }

    #[test]
    fn covariance_examples() {
        let c = covariance(&col(&[0.01, 0.03])).unwrap();
        assert!((c[0][0] - 0.0001).abs() < 1e-18);

        let sm =
            ScenarioMatrix::from_rows(&[vec![0.1, 0.1], vec![0.3, 0.3], vec![-0.1, -0.1]]).unwrap();
        let c = covariance(&sm).unwrap();
        assert!((c[0][0] - c[0][1]).abs() < 1e-15 && (c[1][1] - c[0][1]).abs() < 1e-15);

        let sm = ScenarioMatrix::from_rows(&[vec![0.1, -0.1], vec![0.3, -0.3], vec![-0.2, 0.2]])
            .unwrap();
        let c = covariance(&sm).unwrap();
        assert!((c[0][1] + c[0][0]).abs() < 1e-15);
        assert!(covariance(&col(&[0.1])).is_err());
    }

    #[test]
    fn ew_examples() {
        assert_eq!(ew(4).unwrap().as_slice(), &[0.25; 4]);
        assert_eq!(ew(1).unwrap().as_slice(), &[1.0]);
        assert!(ew(28).unwrap().as_slice().iter().all(|&w| w == 1.0 / 28.0));
        assert!(ew(0).is_err());
    }

    #[test]
    fn pt_scales_by_two_to_alpha() {
        let pt = PtParams::default();
        let base = [0.013, -0.021, 0.004, -0.002, 0.03];
        let doubled: Vec<f64> = base.iter().map(|r| 2.0 * r).collect();
        let a = pt_of_returns(&base, &pt);
        let b = pt_of_returns(&doubled, &pt);
        assert!((b - 2f64.powf(pt.alpha) * a).abs() < 1e-15);
        assert!((b - 2.0 * a).abs() > 1e-4);
    }

    fn check_gradient(f: impl Fn(&[f64]) -> f64, g: impl Fn(&[f64], &mut [f64]), r: &[f64]) {
        let mut grad = vec![0.0; r.len()];
        g(r, &mut grad);
        let h = 1e-7;
        for t in 0..r.len() {
            let mut up = r.to_vec();
            up[t] += h;
            let mut down = r.to_vec();
            down[t] -= h;
            let fd = (f(&up) - f(&down)) / (2.0 * h);
            assert!((fd - grad[t]).abs() < 1e-6, "t={t}: {fd} vs {}", grad[t]);
        }
    }

    #[test]
    fn return_gradients_match_finite_differences() {
        let r = [0.031, -0.012, 0.004, -0.027, 0.019, 0.052, -0.003];
        check_gradient(
            |v| hfhe_of_returns(v, 0.3, 0.69),
            |v, o| hfhe_return_gradient(v, 0.3, 0.69, o),
            &r,
        );
        let pt = PtParams::default();
        check_gradient(
            |v| pt_of_returns(v, &pt),
            |v, o| pt_return_gradient(v, &pt, o),
            &r,
        );
        check_gradient(
            |v| mean_mad_of_returns(v, 0.4),
            |v, o| mean_mad_return_gradient(v, 0.4, o),
            &r,
        );
    }
}
