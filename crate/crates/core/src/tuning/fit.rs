//! Least-squares fits: `A/gamma + B gamma + C` loss models, `a / sqrt(T)`
//! learning-rate scaling, and polynomials.
//!
//! All models are linear in their coefficients and are solved through the
//! normal equations after scaling every design column to unit norm.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FitModel {
    /// `A / gamma + B gamma + C`, coefficients `[A, B, C]`.
    InvGammaLinear,
    /// `a / sqrt(T)`, coefficients `[a]`.
    InvSqrt,
    /// `sum_j c_j x^j`, coefficients in increasing degree.
    Polynomial { degree: usize },
}

impl FitModel {
    pub fn coefficient_count(&self) -> usize {
        match self {
            FitModel::InvGammaLinear => 3,
            FitModel::InvSqrt => 1,
            FitModel::Polynomial { degree } => degree + 1,
        }
    }

    fn features(&self, x: f64) -> Vec<f64> {
        match *self {
            FitModel::InvGammaLinear => vec![1.0 / x, x, 1.0],
            FitModel::InvSqrt => vec![1.0 / x.sqrt()],
            FitModel::Polynomial { degree } => {
                std::iter::successors(Some(1.0), |p| Some(p * x)).take(degree + 1).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub coefficients: Vec<f64>,
    /// Euclidean norm of the residual vector.
    pub residual_norm: f64,
}

impl FitResult {
    pub fn rms_residual(&self, n_points: usize) -> f64 {
        self.residual_norm / (n_points as f64).sqrt()
    }
}

/// Model value at `x`.
pub fn evaluate(fit: &FitResult, x: f64) -> f64 {
    fit.model
        .features(x)
        .iter()
        .zip(&fit.coefficients)
        .map(|(f, c)| f * c)
        .sum()
}

fn distinct_count(xs: &[f64]) -> usize {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    sorted.len()
}

fn least_squares(model: FitModel, points: &[(f64, f64)]) -> Result<FitResult> {
    let p = model.coefficient_count();
    let xs: Vec<f64> = points.iter().map(|&(x, _)| x).collect();
    if distinct_count(&xs) < p {
        return Err(Error::RankDeficient(format!(
            "{} distinct abscissae for {p} coefficients",
            distinct_count(&xs)
        )));
    }
    if let Some(&(x, y)) = points.iter().find(|(x, y)| !(x.is_finite() && y.is_finite())) {
        return Err(Error::InvalidParameter(format!("non-finite point ({x}, {y})")));
    }
    let n = points.len();
    let mut design = DMatrix::<f64>::zeros(n, p);
    for (i, &x) in xs.iter().enumerate() {
        for (j, f) in model.features(x).into_iter().enumerate() {
            design[(i, j)] = f;
        }
    }
    let y = DVector::from_iterator(n, points.iter().map(|&(_, y)| y));

    let scales: Vec<f64> = (0..p).map(|j| design.column(j).norm()).collect();
    if scales.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(Error::RankDeficient("zero design column".into()));
    }
    let mut scaled = design.clone();
    for (j, &s) in scales.iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0 / s);
    }
    let gram = scaled.transpose() * &scaled;
    let rhs = scaled.transpose() * &y;
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::RankDeficient("normal equations are not positive definite".into()))?;
    let z = chol.solve(&rhs);
    let coefficients: Vec<f64> = z.iter().zip(&scales).map(|(z, s)| z / s).collect();
    let beta = DVector::from_column_slice(&coefficients);
    let residual_norm = (&design * beta - y).norm();
    Ok(FitResult {
        model,
        coefficients,
        residual_norm,
    })
}

/// Fit `h(gamma) = A / gamma + B gamma + C` to `(gamma, loss)` points.
pub fn fit_inv_gamma_linear(points: &[(f64, f64)]) -> Result<FitResult> {
    if let Some(&(g, _)) = points.iter().find(|(g, _)| *g <= 0.0) {
        return Err(Error::NonPositive { name: "gamma", value: g });
    }
    least_squares(FitModel::InvGammaLinear, points)
}

/// `sqrt(A / B)` for a fitted `A / gamma + B gamma + C` with `A, B > 0`.
pub fn minimizer(fit: &FitResult) -> Result<f64> {
    if fit.model != FitModel::InvGammaLinear {
        return Err(Error::InvalidParameter(format!("no minimizer for {:?}", fit.model)));
    }
    let (a, b) = (fit.coefficients[0], fit.coefficients[1]);
    let scale = fit.coefficients.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let eps = 1e-10 * scale;
    if a > eps && b > eps {
        Ok((a / b).sqrt())
    } else {
        Err(Error::NonPhysicalFit(format!("A = {a}, B = {b}")))
    }
}

/// Free-exponent fit `scale * T^exponent` from a log-log regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub scale: f64,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvSqrtFit {
    /// `a / sqrt(T)` fit.
    pub fit: FitResult,
    pub power: PowerFit,
}

/// Fit `a / sqrt(T)` to `(T, gamma*)` points, plus a free-exponent power law.
pub fn fit_inv_sqrt(points: &[(f64, f64)]) -> Result<InvSqrtFit> {
    if points.len() < 2 {
        return Err(Error::RankDeficient(format!("{} points, need at least 2", points.len())));
    }
    if let Some(&(x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::InvalidParameter(format!("non-positive point ({x}, {y})")));
    }
    let fit = least_squares(FitModel::InvSqrt, points)?;
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let line = least_squares(FitModel::Polynomial { degree: 1 }, &logs)?;
    Ok(InvSqrtFit {
        fit,
        power: PowerFit {
            scale: line.coefficients[0].exp(),
            exponent: line.coefficients[1],
        },
    })
}

/// Least-squares polynomial of the given degree.
pub fn fit_polynomial(points: &[(f64, f64)], degree: usize) -> Result<FitResult> {
    if points.len() < degree + 1 {
        return Err(Error::RankDeficient(format!(
            "{} points for degree {degree}",
            points.len()
        )));
    }
    least_squares(FitModel::Polynomial { degree }, points)
}
