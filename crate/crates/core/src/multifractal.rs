//! Multifractal detrended fluctuation analysis (MF-DFA).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const DEFAULT_Q: [f64; 8] = [-4.0, -3.0, -2.0, -1.0, 1.0, 2.0, 3.0, 4.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HurstSpectrum {
    #[serde(rename = "q")]
    pub q_values: Vec<f64>,
    pub h: Vec<f64>,
    #[serde(rename = "r2")]
    pub fit_r2: Vec<f64>,
    pub scales: Vec<usize>,
}

impl HurstSpectrum {
    pub fn h_at(&self, q: f64) -> Option<f64> {
        self.q_values.iter().position(|&x| x == q).map(|i| self.h[i])
    }

    /// Smallest regression R² across all q.
    pub fn min_r2(&self) -> f64 {
        self.fit_r2.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `count` log-spaced window sizes between `min` and `max` (inclusive, deduplicated).
pub fn log_spaced_scales(min: usize, max: usize, count: usize) -> Vec<usize> {
    if count <= 1 || min >= max {
        return vec![min];
    }
    let (lo, hi) = ((min as f64).ln(), (max as f64).ln());
    let mut out: Vec<usize> = (0..count)
        .map(|i| (lo + (hi - lo) * i as f64 / (count - 1) as f64).exp().round() as usize)
        .collect();
    out.dedup();
    out
}

/// Least-squares projector for polynomial detrending at one window size.
struct Detrender {
    design: DMatrix<f64>,
    pinv: DMatrix<f64>,
}

impl Detrender {
    fn new(size: usize, order: usize) -> Result<Self> {
        let centre = (size as f64 - 1.0) / 2.0;
        let design = DMatrix::from_fn(size, order + 1, |j, p| ((j as f64 - centre) / size as f64).powi(p as i32));
        let gram = design.transpose() * &design;
        let inv = gram.try_inverse().ok_or_else(|| invalid(format!("singular detrending system at scale {size}")))?;
        Ok(Self { pinv: inv * design.transpose(), design })
    }

    /// Mean squared residual of `window` around its polynomial fit.
    fn residual_variance(&self, window: &[f64]) -> f64 {
        let y = nalgebra::DVector::from_column_slice(window);
        let fit = &self.design * (&self.pinv * &y);
        y.iter().zip(fit.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / window.len() as f64
    }
}

fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    (slope, r2)
}

/// Generalized Hurst exponents `h(q)` of `series`.
///
/// The profile (cumulative sum of the mean-centred series) is cut into
/// `⌊N/s⌋` windows from each end; each window is detrended with a polynomial
/// of `detrend_order`, and `F_q(s) = (mean var^{q/2})^{1/q}`. `h(q)` is the
/// OLS slope of `ln F_q(s)` against `ln s`.
pub fn mfdfa(series: &[f64], q_values: &[f64], scales: &[usize], detrend_order: usize) -> Result<HurstSpectrum> {
    if q_values.is_empty() {
        return Err(invalid("at least one q value is required"));
    }
    if q_values.iter().any(|&q| q == 0.0 || !q.is_finite()) {
        return Err(invalid("q values must be finite and non-zero"));
    }
    if scales.len() < 2 {
        return Err(invalid("at least two scales are required"));
    }
    let min_scale = detrend_order + 2;
    if let Some(&s) = scales.iter().find(|&&s| s < min_scale) {
        return Err(invalid(format!("scale {s} is below detrend order + 2 = {min_scale}")));
    }
    let max_scale = *scales.iter().max().expect("non-empty");
    let n = series.len();
    if n < 4 * max_scale {
        return Err(Error::SeriesTooShort { len: n, required: 4 * max_scale });
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    if series.iter().all(|&x| x == series[0]) {
        return Err(Error::ConstantSeries);
    }
    let profile: Vec<f64> = series
        .iter()
        .scan(0.0, |acc, &x| {
            *acc += x - mean;
            Some(*acc)
        })
        .collect();

    let log_s: Vec<f64> = scales.iter().map(|&s| (s as f64).ln()).collect();
    // log_f[q][scale]
    let mut log_f = vec![Vec::with_capacity(scales.len()); q_values.len()];
    for &s in scales {
        let detrender = Detrender::new(s, detrend_order)?;
        let windows = n / s;
        let mut variances = Vec::with_capacity(2 * windows);
        for v in 0..windows {
            variances.push(detrender.residual_variance(&profile[v * s..(v + 1) * s]));
            let start = n - (v + 1) * s;
            variances.push(detrender.residual_variance(&profile[start..start + s]));
        }
        if variances.iter().all(|&v| v == 0.0) {
            return Err(Error::ConstantSeries);
        }
        for (qi, &q) in q_values.iter().enumerate() {
            let mean_pow = variances.iter().map(|&v| v.powf(q / 2.0)).sum::<f64>() / variances.len() as f64;
            let fq = mean_pow.powf(1.0 / q);
            if !(fq.is_finite() && fq > 0.0) {
                return Err(invalid(format!("fluctuation F_q(s) undefined at q = {q}, s = {s}")));
            }
            log_f[qi].push(fq.ln());
        }
    }

    let (h, fit_r2) = log_f.iter().map(|lf| ols(&log_s, lf)).unzip();
    Ok(HurstSpectrum { q_values: q_values.to_vec(), h, fit_r2, scales: scales.to_vec() })
}

/// `max h − min h`.
pub fn spectrum_width(s: &HurstSpectrum) -> Result<f64> {
    if s.h.is_empty() {
        return Err(invalid("empty spectrum"));
    }
    let max = s.h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = s.h.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(max - min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = seeded(seed);
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    #[test]
    fn scales_are_log_spaced() {
        assert_eq!(log_spaced_scales(16, 1024, 7), vec![16, 32, 64, 128, 256, 512, 1024]);
        assert_eq!(log_spaced_scales(16, 16, 5), vec![16]);
    }

    #[test]
    fn constant_series_rejected() {
        let err = mfdfa(&vec![3.0; 512], &[2.0], &[8, 16], 1).unwrap_err();
        assert_eq!(err, Error::ConstantSeries);
    }

    #[test]
    fn argument_validation() {
        let x = noise(256, 1);
        assert!(matches!(mfdfa(&x, &[2.0], &[16, 128], 1), Err(Error::SeriesTooShort { .. })));
        assert!(mfdfa(&x, &[0.0], &[8, 16], 1).is_err());
        assert!(mfdfa(&x, &[2.0], &[2, 16], 1).is_err());
        assert!(mfdfa(&x, &[2.0], &[16], 1).is_err());
    }

    #[test]
    fn affine_invariance() {
        let x = noise(4096, 3);
        let scales = log_spaced_scales(16, 512, 6);
        let a = mfdfa(&x, &DEFAULT_Q, &scales, 1).unwrap();
        let y: Vec<f64> = x.iter().map(|v| -3.5 * v + 12.0).collect();
        let b = mfdfa(&y, &DEFAULT_Q, &scales, 1).unwrap();
        for (ha, hb) in a.h.iter().zip(&b.h) {
            assert!((ha - hb).abs() < 1e-9, "{ha} vs {hb}");
        }
    }

    #[test]
    fn width_of_single_q_is_zero() {
        let s = HurstSpectrum { q_values: vec![2.0], h: vec![0.7], fit_r2: vec![1.0], scales: vec![8, 16] };
        assert_eq!(spectrum_width(&s).unwrap(), 0.0);
        let empty = HurstSpectrum { q_values: vec![], h: vec![], fit_r2: vec![], scales: vec![] };
        assert!(spectrum_width(&empty).is_err());
    }

    #[test]
    fn higher_detrend_order_runs() {
        let x = noise(4096, 8);
        let s = mfdfa(&x, &[2.0], &log_spaced_scales(16, 512, 6), 2).unwrap();
        assert!((s.h[0] - 0.5).abs() < 0.15);
    }
}
