use serde::{Deserialize, Serialize};

use super::{EstimatorError, Result};

/// Measured norms of one instance of an interpolation inequality
/// `N₂ ≤ C (N₁ + ε)^δ (N₃ + ε)^{1−δ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSample {
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
    pub eps: f64,
}

impl NormSample {
    pub fn new(n1: f64, n2: f64, n3: f64, eps: f64) -> Self {
        Self { n1, n2, n3, eps }
    }

    /// `(log((N₁+ε)/(N₃+ε)), log(N₂/(N₃+ε)))`
    pub fn log_coords(&self) -> (f64, f64) {
        let d = self.n3 + self.eps;
        (((self.n1 + self.eps) / d).ln(), (self.n2 / d).ln())
    }
}

/// Fitted envelope `y ≤ log C + δ x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub c: f64,
    pub delta: f64,
    pub log_c: f64,
}

/// Upper-envelope fit over the samples: among lines `y = log C + δx` lying
/// on or above every point with `δ ∈ [δ_min, 1 − δ_min]`, the one with the
/// least total vertical gap. The optimum is the upper-hull edge above the
/// mean abscissa; ties at a hull vertex prefer the larger slope.
pub fn fit_exponent(samples: &[NormSample], delta_min: f64) -> Result<ExponentFit> {
    if samples.len() < 3 {
        return Err(EstimatorError::InsufficientSamples { needed: 3, got: samples.len() });
    }
    if !(delta_min > 0.0 && delta_min < 0.5) {
        return Err(EstimatorError::InvalidParams(format!("delta_min = {delta_min} must lie in (0, 1/2)")));
    }
    let mut pts = Vec::with_capacity(samples.len());
    for s in samples {
        if s.n2 == 0.0 {
            // imposes no constraint
            continue;
        }
        if !(s.n3 + s.eps > 0.0) || s.n1 + s.eps <= 0.0 || s.n2 < 0.0 {
            return Err(EstimatorError::InvalidParams(format!("sample {s:?} has a non-positive normaliser")));
        }
        pts.push(s.log_coords());
    }
    if pts.is_empty() {
        return Err(EstimatorError::DegenerateSamples("every sample has N2 = 0".into()));
    }
    let x_lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let x_hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if x_hi - x_lo <= 1e-12 * (1.0 + x_lo.abs()) {
        return Err(EstimatorError::DegenerateSamples("all samples share the same abscissa".into()));
    }
    let x_mean = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let hull = upper_hull(&pts);
    // slopes of the hull edges bracketing the mean abscissa
    let mut left_slope = f64::INFINITY;
    let mut right_slope = f64::NEG_INFINITY;
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        let slope = (b.1 - a.1) / (b.0 - a.0);
        if a.0 < x_mean && x_mean < b.0 {
            left_slope = slope;
            right_slope = slope;
            break;
        }
        if b.0 == x_mean {
            left_slope = slope;
        }
        if a.0 == x_mean {
            right_slope = slope;
        }
    }
    // any δ in [right_slope, left_slope] is optimal; prefer the largest
    let (lo, hi) = (delta_min, 1.0 - delta_min);
    let delta = if left_slope.is_finite() { left_slope.clamp(lo, hi) } else { right_slope.clamp(lo, hi) };
    let delta = if right_slope.is_finite() && right_slope > hi { hi } else { delta };
    let log_c = envelope_log_c(&pts, delta);
    Ok(ExponentFit { c: log_c.exp(), delta, log_c })
}

/// Smallest `log C` with all points on or below the line of slope `δ`,
/// padded so the stored constant survives exp/log round trips.
pub fn envelope_log_c(pts: &[(f64, f64)], delta: f64) -> f64 {
    let raw = pts.iter().map(|(x, y)| y - delta * x).fold(f64::NEG_INFINITY, f64::max);
    raw + 1e-12 * (1.0 + raw.abs())
}

fn upper_hull(pts: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut p = pts.to_vec();
    p.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for q in p {
        // keep only the highest point per abscissa
        if let Some(last) = hull.last() {
            if last.0 == q.0 {
                hull.pop();
            }
        }
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (q.1 - a.1) - (b.1 - a.1) * (q.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(q);
    }
    hull
}

/// Constant regime of the three-ball inequality, tested in this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `r₃ − r₂ < min(r₁/20, h₀)`
    Close,
    /// `r₁/10 < 2h₀`
    Mid,
    Far,
}

impl Regime {
    pub fn classify(r1: f64, r2: f64, r3: f64, h0: f64) -> Self {
        if r3 - r2 < (r1 / 20.0).min(h0) {
            Regime::Close
        } else if r1 / 10.0 < 2.0 * h0 {
            Regime::Mid
        } else {
            Regime::Far
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Close => "close",
            Regime::Mid => "mid",
            Regime::Far => "far",
        }
    }
}

/// Column header matching [`InequalityReport::csv_row`].
pub const INEQUALITY_HEADER: &str = "tag,N1,N2,N3,eps,C,delta,slack,regime";

/// One evaluated instance of an interpolation inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
    pub eps: f64,
    pub fitted_c: f64,
    pub fitted_delta: f64,
    /// `log C + δ log(N₁+ε) + (1−δ) log(N₃+ε) − log N₂`
    pub slack: f64,
    pub regime: Option<Regime>,
    /// All norms and `ε` vanish, or `N₂ = 0`: the inequality holds
    /// trivially and no constant is fitted.
    pub degenerate: bool,
    /// `log C_max − log C` against a configured cap, when one is given.
    pub cmax_margin: Option<f64>,
}

pub fn slack(sample: &NormSample, c: f64, delta: f64) -> f64 {
    c.ln() + delta * (sample.n1 + sample.eps).ln() + (1.0 - delta) * (sample.n3 + sample.eps).ln() - sample.n2.ln()
}

impl InequalityReport {
    /// Report against given constants; `C` is raised to at least 1.
    pub fn with_constants(sample: NormSample, c: f64, delta: f64, regime: Option<Regime>) -> Self {
        let fitted_c = c.max(1.0);
        let degenerate = sample.n2 == 0.0;
        let slack = if degenerate { 0.0 } else { slack(&sample, fitted_c, delta) };
        Self {
            n1: sample.n1,
            n2: sample.n2,
            n3: sample.n3,
            eps: sample.eps,
            fitted_c,
            fitted_delta: delta,
            slack,
            regime,
            degenerate,
            cmax_margin: None,
        }
    }

    /// Smallest `C` making the inequality hold at fixed `δ`.
    pub fn fit_at_delta(sample: NormSample, delta: f64, regime: Option<Regime>) -> Self {
        if sample.n2 == 0.0 || sample.n3 + sample.eps == 0.0 {
            return Self::with_constants(sample, 1.0, delta, regime);
        }
        let (x, y) = sample.log_coords();
        let log_c = envelope_log_c(&[(x, y)], delta);
        Self::with_constants(sample, log_c.exp(), delta, regime)
    }

    pub fn with_cap(mut self, c_max: f64) -> Self {
        self.cmax_margin = Some(c_max.ln() - self.fitted_c.ln());
        self
    }

    pub fn sample(&self) -> NormSample {
        NormSample::new(self.n1, self.n2, self.n3, self.eps)
    }

    /// The slack recomputed from the stored norms and constants.
    pub fn recomputed_slack(&self) -> f64 {
        if self.degenerate {
            0.0
        } else {
            slack(&self.sample(), self.fitted_c, self.fitted_delta)
        }
    }

    pub fn holds(&self) -> bool {
        self.degenerate || self.slack >= 0.0
    }

    pub const CSV_HEADER: &'static str = "tag,N1,N2,N3,eps,C,delta,slack,regime";

    pub fn csv_row(&self, tag: &str) -> String {
        format!(
            "{tag},{:e},{:e},{:e},{:e},{:e},{},{:e},{}",
            self.n1,
            self.n2,
            self.n3,
            self.eps,
            self.fitted_c,
            self.fitted_delta,
            self.slack,
            self.regime.map_or("", Regime::as_str)
        )
    }
}

/// Theorem-shaped propagation constants at step `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationBound {
    pub c1: f64,
    pub c2: f64,
    pub tau: f64,
    pub h: f64,
    pub omega_measure: f64,
    pub sigma_measure: f64,
    pub dim: usize,
    /// `C₁ (|Ω|/hⁿ)^{1/2}`
    pub predicted_c: f64,
    /// `τ^{C₂ |Ω|/hⁿ}`
    pub predicted_delta_lower: f64,
    /// `C₁ (|Ω|/hⁿ) [1 + (|Σ∩Ω|/h^{n−1})^{1/2}]`
    pub intermediate_c: f64,
}

impl PropagationBound {
    pub fn new(c1: f64, c2: f64, tau: f64, h: f64, omega_measure: f64, sigma_measure: f64, dim: usize) -> Result<Self> {
        if !(c1 > 0.0 && c2 > 0.0 && tau > 0.0 && tau < 1.0 && h > 0.0) {
            return Err(EstimatorError::InvalidParams(format!(
                "need C1, C2, h > 0 and tau in (0,1); got C1={c1}, C2={c2}, tau={tau}, h={h}"
            )));
        }
        let vol = omega_measure / h.powi(dim as i32);
        let surf = sigma_measure / h.powi(dim as i32 - 1);
        Ok(Self {
            c1,
            c2,
            tau,
            h,
            omega_measure,
            sigma_measure,
            dim,
            predicted_c: c1 * vol.sqrt(),
            predicted_delta_lower: tau.powf(c2 * vol),
            intermediate_c: c1 * vol * (1.0 + surf.sqrt()),
        })
    }
}

/// Predicted three-ball constants `(C, δ_lower)` for the regime of the
/// radii, from the propagation constants `C₁, C₂, τ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeBallShape {
    pub c1: f64,
    pub c2: f64,
    pub tau: f64,
    /// `sup |Σ ∩ B_ρ| / ρ^{n−1}`
    pub kappa: f64,
    pub h0: f64,
    pub diam_omega: f64,
    pub sigma_measure: f64,
}

impl ThreeBallShape {
    pub fn predict(&self, r1: f64, r2: f64, r3: f64, n: usize) -> (Regime, f64, f64) {
        let ni = n as i32;
        let regime = Regime::classify(r1, r2, r3, self.h0);
        let (vol, surf) = match regime {
            Regime::Close => {
                let q = r3 / (r3 - r2);
                (q.powi(ni), self.kappa * q.powi(ni - 1))
            }
            Regime::Mid => {
                let q = (r2 + r1 / 21.0) / (r1 / 21.0);
                (q.powi(ni), self.kappa * q.powi(ni - 1))
            }
            Regime::Far => ((self.diam_omega / self.h0).powi(ni), self.sigma_measure / self.h0.powi(ni - 1)),
        };
        (regime, self.c1 * vol * (1.0 + surf.sqrt()), self.tau.powf(self.c2 * vol))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(c: f64, delta: f64) -> Vec<NormSample> {
        // N₃ = 1, ε = 0: N₂ = C N₁^δ
        [1e-6, 1e-4, 1e-3, 0.01, 0.1, 0.5]
            .iter()
            .map(|&n1: &f64| NormSample::new(n1, c * n1.powf(delta), 1.0, 0.0))
            .collect()
    }

    /// Brute-force vertex enumeration of the envelope program.
    fn brute_force(samples: &[NormSample], dmin: f64) -> (f64, f64) {
        let pts: Vec<(f64, f64)> = samples.iter().map(|s| s.log_coords()).collect();
        let mut cands = vec![dmin, 1.0 - dmin];
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                if pts[i].0 != pts[j].0 {
                    let d = (pts[i].1 - pts[j].1) / (pts[i].0 - pts[j].0);
                    if d >= dmin && d <= 1.0 - dmin {
                        cands.push(d);
                    }
                }
            }
        }
        let obj = |d: f64| {
            let lc = pts.iter().map(|(x, y)| y - d * x).fold(f64::NEG_INFINITY, f64::max);
            pts.iter().map(|(x, y)| lc + d * x - y).sum::<f64>()
        };
        let mut best = (f64::INFINITY, 0.0);
        for d in cands {
            let o = obj(d);
            if o < best.0 - 1e-12 || ((o - best.0).abs() <= 1e-12 && d > best.1) {
                best = (o, d);
            }
        }
        let lc = pts.iter().map(|(x, y)| y - best.1 * x).fold(f64::NEG_INFINITY, f64::max);
        (lc.exp(), best.1)
    }

    #[test]
    fn recovers_synthetic_constants() {
        let f = fit_exponent(&synthetic(2.0, 0.3), 0.01).unwrap();
        assert!((f.c - 2.0).abs() < 1e-6 && (f.delta - 0.3).abs() < 1e-6);
    }

    #[test]
    fn repeated_sample_is_degenerate() {
        let s = NormSample::new(0.1, 0.2, 1.0, 0.0);
        assert!(matches!(fit_exponent(&[s, s, s], 0.01), Err(EstimatorError::DegenerateSamples(_))));
    }

    #[test]
    fn dominated_sample_is_inactive() {
        let mut s = synthetic(2.0, 0.3);
        let base = fit_exponent(&s, 0.01).unwrap();
        s.push(NormSample::new(0.02, 0.5 * 2.0 * 0.02f64.powf(0.3), 1.0, 0.0));
        let f = fit_exponent(&s, 0.01).unwrap();
        assert!((f.c - base.c).abs() < 1e-12 && (f.delta - base.delta).abs() < 1e-12);
    }

    #[test]
    fn hull_matches_vertex_enumeration() {
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..50 {
            let samples: Vec<NormSample> = (0..12)
                .map(|_| {
                    let n1 = 10f64.powf(-4.0 * next());
                    let n2 = n1.powf(0.2 + 0.5 * next()) * (0.5 + next());
                    NormSample::new(n1, n2, 1.0, 1e-5 * next())
                })
                .collect();
            let f = fit_exponent(&samples, 0.01).unwrap();
            let (c, d) = brute_force(&samples, 0.01);
            assert!((f.delta - d).abs() < 1e-9, "{} vs {d}", f.delta);
            assert!((f.c - c).abs() < 1e-9 * c);
        }
    }

    #[test]
    fn regime_order() {
        assert_eq!(Regime::classify(0.3, 0.4, 0.42, 0.05), Regime::Mid);
        assert_eq!(Regime::classify(0.3, 0.4, 0.41, 0.05), Regime::Close);
        assert_eq!(Regime::classify(2.0, 2.5, 3.0, 0.05), Regime::Far);
    }

    #[test]
    fn slack_recomputes() {
        let r = InequalityReport::fit_at_delta(NormSample::new(0.1, 0.3, 1.0, 0.01), 0.4, None);
        assert!(r.slack >= 0.0);
        assert!((r.recomputed_slack() - r.slack).abs() < 1e-15);
    }

    #[test]
    fn bound_monotone_in_h() {
        let a = PropagationBound::new(1.0, 0.1, 0.5, 0.2, 1.0, 1.0, 2).unwrap();
        let b = PropagationBound::new(1.0, 0.1, 0.5, 0.1, 1.0, 1.0, 2).unwrap();
        assert!(b.predicted_delta_lower < a.predicted_delta_lower);
    }
}
