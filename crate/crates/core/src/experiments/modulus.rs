use serde::{Deserialize, Serialize};

use super::{ExperimentError, Result};

/// Logarithmic modulus `ω(t) = C / |log t|^μ` fitted to `(t, value)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusFit {
    /// Points used, with `0 < t < 1` and `value > 0`.
    pub points: Vec<(f64, f64)>,
    pub excluded: usize,
    pub fitted_c: f64,
    pub fitted_mu: f64,
    /// Least-squares slope before clamping `μ` into `(0, 1]`.
    pub raw_mu: f64,
    /// RMS residual in log coordinates.
    pub residual: f64,
    pub mu_at_lower: bool,
    pub mu_at_upper: bool,
}

/// Smallest `μ` reported when the data show no decay.
pub const MU_FLOOR: f64 = 1e-6;
pub const MIN_MODULUS_POINTS: usize = 4;

/// Least squares of `(x, y)`: returns `(intercept, slope, rms residual)`.
fn line_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rms = (xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum::<f64>() / n).sqrt();
    (intercept, slope, rms)
}

/// Fit in `(log|log t|, log value)`, where the modulus is the line
/// `log C − μ log|log t|`. Points outside `0 < t < 1` are excluded.
pub fn fit_log_modulus(points: &[(f64, f64)]) -> Result<ModulusFit> {
    let kept: Vec<(f64, f64)> =
        points.iter().copied().filter(|&(t, v)| t > 0.0 && t < 1.0 && v > 0.0 && v.is_finite()).collect();
    if kept.len() < MIN_MODULUS_POINTS {
        return Err(ExperimentError::InsufficientPoints { needed: MIN_MODULUS_POINTS, got: kept.len() });
    }
    let xs: Vec<f64> = kept.iter().map(|(t, _)| (-t.ln()).ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|(_, v)| v.ln()).collect();
    if xs.iter().all(|x| (x - xs[0]).abs() < 1e-14) {
        return Err(ExperimentError::InsufficientPoints { needed: 2, got: 1 });
    }
    let (intercept, slope, rms) = line_fit(&xs, &ys);
    let raw_mu = -slope;
    let mu = raw_mu.clamp(MU_FLOOR, 1.0);
    let (log_c, residual) = if mu == raw_mu {
        (intercept, rms)
    } else {
        let n = xs.len() as f64;
        let lc = xs.iter().zip(&ys).map(|(x, y)| y + mu * x).sum::<f64>() / n;
        let r = (xs.iter().zip(&ys).map(|(x, y)| (y - lc + mu * x).powi(2)).sum::<f64>() / n).sqrt();
        (lc, r)
    };
    Ok(ModulusFit {
        excluded: points.len() - kept.len(),
        points: kept,
        fitted_c: log_c.exp(),
        fitted_mu: mu,
        raw_mu,
        residual,
        mu_at_lower: raw_mu <= MU_FLOOR,
        mu_at_upper: raw_mu > 1.0,
    })
}

impl ModulusFit {
    pub fn eval(&self, t: f64) -> f64 {
        self.fitted_c / (-t.ln()).powf(self.fitted_mu)
    }
}

/// Power law `value = C x^p`, fitted in log–log coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub c: f64,
    pub exponent: f64,
    pub residual: f64,
    pub n: usize,
}

pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerFit> {
    let kept: Vec<(f64, f64)> = points.iter().copied().filter(|&(x, v)| x > 0.0 && v > 0.0 && v.is_finite()).collect();
    if kept.len() < 2 {
        return Err(ExperimentError::InsufficientPoints { needed: 2, got: kept.len() });
    }
    let xs: Vec<f64> = kept.iter().map(|(x, _)| x.ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|(_, v)| v.ln()).collect();
    let (a, b, r) = line_fit(&xs, &ys);
    Ok(PowerFit { c: a.exp(), exponent: b, residual: r, n: kept.len() })
}

impl PowerFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.c * x.powf(self.exponent)
    }
}

/// Exponential growth `log value = a + b ε^{−μ}`, with `μ` chosen on a grid
/// by least residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpGrowthFit {
    pub mu: f64,
    pub intercept: f64,
    pub slope: f64,
    pub residual: f64,
}

pub fn fit_exponential_growth(points: &[(f64, f64)]) -> Result<ExpGrowthFit> {
    let kept: Vec<(f64, f64)> = points.iter().copied().filter(|&(e, v)| e > 0.0 && v > 0.0 && v.is_finite()).collect();
    if kept.len() < 3 {
        return Err(ExperimentError::InsufficientPoints { needed: 3, got: kept.len() });
    }
    let ys: Vec<f64> = kept.iter().map(|(_, v)| v.ln()).collect();
    (1..=200)
        .map(|k| {
            let mu = 0.01 * k as f64;
            let xs: Vec<f64> = kept.iter().map(|(e, _)| e.powf(-mu)).collect();
            let (a, b, r) = line_fit(&xs, &ys);
            ExpGrowthFit { mu, intercept: a, slope: b, residual: r }
        })
        .min_by(|p, q| p.residual.total_cmp(&q.residual))
        .ok_or(ExperimentError::InsufficientPoints { needed: 3, got: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_modulus_round_trip() {
        let pts: Vec<(f64, f64)> =
            [1e-8, 1e-6, 1e-4, 1e-2, 0.3].iter().map(|&t: &f64| (t, 1.0 / (-t.ln()).powf(0.5))).collect();
        let f = fit_log_modulus(&pts).unwrap();
        assert!((f.fitted_c - 1.0).abs() < 1e-6 && (f.fitted_mu - 0.5).abs() < 1e-6);
        assert!(!f.mu_at_lower && !f.mu_at_upper);
    }

    #[test]
    fn t_at_one_is_excluded() {
        let mut pts: Vec<(f64, f64)> = [1e-6, 1e-4, 1e-2, 0.5].iter().map(|&t: &f64| (t, 2.0 / -t.ln())).collect();
        pts.push((1.0, 5.0));
        let f = fit_log_modulus(&pts).unwrap();
        assert_eq!(f.excluded, 1);
        assert!((f.fitted_mu - 1.0).abs() < 1e-9);
        assert!(matches!(fit_log_modulus(&pts[..3]), Err(ExperimentError::InsufficientPoints { .. })));
    }

    #[test]
    fn mu_clamped_with_flags() {
        let pts: Vec<(f64, f64)> =
            [1e-6, 1e-4, 1e-2, 0.5].iter().map(|&t: &f64| (t, 1.0 / (-t.ln()).powi(2))).collect();
        let f = fit_log_modulus(&pts).unwrap();
        assert!(f.mu_at_upper && f.fitted_mu == 1.0 && (f.raw_mu - 2.0).abs() < 1e-9);
    }

    #[test]
    fn power_and_growth_round_trip() {
        let pts: Vec<(f64, f64)> = [0.5, 0.1, 0.05, 0.01].iter().map(|&e: &f64| (e, 3.0 * e.powf(-1.5))).collect();
        let p = fit_power_law(&pts).unwrap();
        assert!((p.c - 3.0).abs() < 1e-6 && (p.exponent + 1.5).abs() < 1e-6);
        let pts: Vec<(f64, f64)> =
            [0.5, 0.3, 0.2, 0.1].iter().map(|&e: &f64| (e, (0.2 + 0.7 * e.powf(-0.5)).exp())).collect();
        let g = fit_exponential_growth(&pts).unwrap();
        assert!((g.mu - 0.5).abs() < 1e-9 && (g.slope - 0.7).abs() < 1e-6);
    }
}
