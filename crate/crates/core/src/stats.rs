//! Return-distribution analysis: averaging, normalized log-returns,
//! histograms, moments, q-Gaussian fits and avalanche-size summaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BIN_WIDTH: f64 = 0.2;

/// Average price weighted by the initial endowment of each asset.
pub fn weighted_average_price(p1: &[f64], p2: &[f64], q1: u64, q2: u64) -> Result<Vec<f64>> {
    if p1.len() != p2.len() {
        return Err(Error::Input(format!(
            "price series lengths differ: {} vs {}",
            p1.len(),
            p2.len()
        )));
    }
    let total = (q1 + q2) as f64;
    if total == 0.0 {
        return Err(Error::Input("endowment weights sum to zero".into()));
    }
    let (w1, w2) = (q1 as f64 / total, q2 as f64 / total);
    Ok(p1.iter().zip(p2).map(|(a, b)| a * w1 + b * w2).collect())
}

/// Population mean and standard deviation.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnsSeries {
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
    pub r_av: f64,
    pub r_stdev: f64,
}

pub fn normalized_returns(prices: &[f64]) -> Result<ReturnsSeries> {
    if prices.len() < 3 {
        return Err(Error::Input(format!(
            "need at least 3 prices for returns, got {}",
            prices.len()
        )));
    }
    if let Some(p) = prices.iter().find(|&&p| !(p > 0.0)) {
        return Err(Error::Input(format!("non-positive price {p}")));
    }
    let raw: Vec<f64> = prices.windows(2).map(|w| w[1].ln() - w[0].ln()).collect();
    let (r_av, r_stdev) = mean_sd(&raw);
    if !(r_stdev > 0.0) {
        return Err(Error::Degenerate("returns have zero standard deviation".into()));
    }
    let normalized = raw.iter().map(|r| (r - r_av) / r_stdev).collect();
    Ok(ReturnsSeries { raw, normalized, r_av, r_stdev })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pdf {
    pub centers: Vec<f64>,
    pub densities: Vec<f64>,
    pub counts: Vec<u64>,
    pub bin_width: f64,
}

/// Histogram density on bins of width `bin_width` centred on multiples of the
/// width, spanning `[-m, m]` where `m` covers the largest `|sample|`.
pub fn empirical_pdf(samples: &[f64], bin_width: f64) -> Result<Pdf> {
    if !(bin_width > 0.0) {
        return Err(Error::Input("bin width must be positive".into()));
    }
    if samples.is_empty() {
        return Err(Error::Input("no samples".into()));
    }
    let max_abs = samples.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let half = (max_abs / bin_width).round() as i64;
    let bins = (2 * half + 1) as usize;
    let mut counts = vec![0u64; bins];
    for x in samples {
        let k = ((x / bin_width).round() as i64).clamp(-half, half);
        counts[(k + half) as usize] += 1;
    }
    let norm = samples.len() as f64 * bin_width;
    Ok(Pdf {
        centers: (-half..=half).map(|k| k as f64 * bin_width).collect(),
        densities: counts.iter().map(|&c| c as f64 / norm).collect(),
        counts,
        bin_width,
    })
}

pub fn excess_kurtosis(samples: &[f64]) -> Result<f64> {
    if samples.len() < 4 {
        return Err(Error::Input(format!(
            "need at least 4 samples for kurtosis, got {}",
            samples.len()
        )));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let m2 = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if !(m2 > 0.0) {
        return Err(Error::Degenerate("zero variance".into()));
    }
    let m4 = samples.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    Ok(m4 / (m2 * m2) - 3.0)
}

// ---------------------------------------------------------------------------
// q-Gaussian fit
// ---------------------------------------------------------------------------

pub const Q_MIN: f64 = 1.0;
pub const Q_MAX: f64 = 2.5;

/// `ln` of the q-Gaussian shape `(1 - (1-q) beta x^2)^(1/(1-q))`, i.e. without
/// the amplitude. Valid for `q >= 1`.
pub fn qgaussian_log_shape(x: f64, q: f64, beta: f64) -> f64 {
    let u = beta * x * x;
    if (q - 1.0).abs() < 1e-9 {
        -u
    } else {
        -(((q - 1.0) * u).ln_1p()) / (q - 1.0)
    }
}

pub fn qgaussian(x: f64, amp: f64, q: f64, beta: f64) -> f64 {
    amp * qgaussian_log_shape(x, q, beta).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QGaussianFit {
    pub q: f64,
    pub beta_fit: f64,
    pub amp: f64,
    /// Weighted sum of squared log-density errors over the fitted bins.
    pub residual: f64,
    pub converged: bool,
    pub bins_used: usize,
}

/// Weighted log-space least-squares objective with the amplitude profiled out.
struct LogObjective {
    xs: Vec<f64>,
    log_y: Vec<f64>,
    weights: Vec<f64>,
    total_weight: f64,
}

impl LogObjective {
    fn new(centers: &[f64], densities: &[f64], weights: Option<&[f64]>) -> Result<Self> {
        if centers.len() != densities.len() || weights.is_some_and(|w| w.len() != centers.len()) {
            return Err(Error::Input("centers, densities and weights differ in length".into()));
        }
        let mut obj = LogObjective { xs: Vec::new(), log_y: Vec::new(), weights: Vec::new(), total_weight: 0.0 };
        for (i, (&x, &d)) in centers.iter().zip(densities).enumerate() {
            let w = weights.map_or(1.0, |w| w[i]);
            if d > 0.0 && w > 0.0 {
                obj.xs.push(x);
                obj.log_y.push(d.ln());
                obj.weights.push(w);
                obj.total_weight += w;
            }
        }
        if obj.xs.len() < 8 {
            return Err(Error::Input(format!(
                "need at least 8 non-empty bins to fit, got {}",
                obj.xs.len()
            )));
        }
        Ok(obj)
    }

    /// Returns `(residual, ln_amp)` for the best amplitude at `(q, beta)`.
    fn eval(&self, q: f64, beta: f64) -> (f64, f64) {
        let diffs: Vec<f64> = self
            .xs
            .iter()
            .zip(&self.log_y)
            .map(|(&x, &ly)| ly - qgaussian_log_shape(x, q, beta))
            .collect();
        let ln_amp = diffs.iter().zip(&self.weights).map(|(d, w)| d * w).sum::<f64>() / self.total_weight;
        let residual = diffs
            .iter()
            .zip(&self.weights)
            .map(|(d, w)| w * (d - ln_amp).powi(2))
            .sum();
        (residual, ln_amp)
    }

    /// Best `ln beta` for fixed `q` by golden-section search.
    fn best_beta(&self, q: f64) -> (f64, f64) {
        let f = |lb: f64| self.eval(q, lb.exp()).0;
        let lb = golden_min(f, -8.0, 6.0, 1e-10, 200);
        (lb, f(lb))
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section minimiser on `[a, b]`.
fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64, max_iter: usize) -> f64 {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..max_iter {
        if (b - a).abs() < tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Fits `y = A (1 - (1-q) beta x^2)^(1/(1-q))` to the non-empty bins by least
/// squares on `ln y`. `q` is seeded on a 0.05 grid over `[1, 2]` and refined
/// by golden-section search inside `[1, 2.5]`; `beta` is optimised for every
/// candidate `q` and the amplitude is solved in closed form.
pub fn fit_qgaussian(centers: &[f64], densities: &[f64]) -> Result<QGaussianFit> {
    fit_qgaussian_weighted(centers, densities, None)
}

/// Fits a histogram, weighting each bin by its count. The variance of the
/// log of a bin count is roughly the inverse of the count, so sparse tail
/// bins no longer pull `q` upwards.
pub fn fit_pdf(pdf: &Pdf) -> Result<QGaussianFit> {
    let weights: Vec<f64> = pdf.counts.iter().map(|&c| c as f64).collect();
    fit_qgaussian_weighted(&pdf.centers, &pdf.densities, Some(&weights))
}

/// [`fit_qgaussian`] with per-bin weights on the squared log errors.
pub fn fit_qgaussian_weighted(centers: &[f64], densities: &[f64], weights: Option<&[f64]>) -> Result<QGaussianFit> {
    let objective = LogObjective::new(centers, densities, weights)?;

    let mut best_q = Q_MIN;
    let mut best_r = f64::INFINITY;
    for k in 0..=20 {
        let q = 1.0 + 0.05 * k as f64;
        let (_, r) = objective.best_beta(q);
        if r < best_r {
            best_r = r;
            best_q = q;
        }
    }
    let lo = (best_q - 0.05).max(Q_MIN);
    let hi = (best_q + 0.05).min(Q_MAX);
    let q_ref = golden_min(|q| objective.best_beta(q).1, lo, hi, 1e-6, 100);
    let (q, ln_beta) = {
        let (lb, r) = objective.best_beta(q_ref);
        if r <= best_r {
            (q_ref, lb)
        } else {
            (best_q, objective.best_beta(best_q).0)
        }
    };
    let beta = ln_beta.exp();
    let (residual, ln_amp) = objective.eval(q, beta);
    // A minimum pinned to the beta search box means the shape was not resolved.
    let converged = residual.is_finite() && ln_beta > -7.9 && ln_beta < 5.9;
    Ok(QGaussianFit {
        q,
        beta_fit: beta,
        amp: ln_amp.exp(),
        residual,
        converged,
        bins_used: objective.xs.len(),
    })
}

/// Fit with `q` fixed, for nested-model comparison.
pub fn fit_qgaussian_fixed_q(
    centers: &[f64],
    densities: &[f64],
    weights: Option<&[f64]>,
    q: f64,
) -> Result<QGaussianFit> {
    let objective = LogObjective::new(centers, densities, weights)?;
    let (ln_beta, _) = objective.best_beta(q);
    let (residual, ln_amp) = objective.eval(q, ln_beta.exp());
    Ok(QGaussianFit {
        q,
        beta_fit: ln_beta.exp(),
        amp: ln_amp.exp(),
        residual,
        converged: residual.is_finite(),
        bins_used: objective.xs.len(),
    })
}

// ---------------------------------------------------------------------------
// Avalanches
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvalancheStats {
    /// `(lower, upper_exclusive, count)` for power-of-two bins.
    pub bins: Vec<(usize, usize, u64)>,
    pub count: usize,
    pub min: usize,
    pub max: usize,
    pub mean: f64,
    /// `log10(max / min)`.
    pub decade_span: f64,
}

pub fn avalanche_statistics(sizes: &[usize]) -> Result<AvalancheStats> {
    if sizes.is_empty() {
        return Err(Error::Input("no avalanche sizes".into()));
    }
    if sizes.contains(&0) {
        return Err(Error::Input("avalanche sizes must be positive".into()));
    }
    let min = *sizes.iter().min().unwrap();
    let max = *sizes.iter().max().unwrap();
    let top = usize::BITS - max.leading_zeros();
    let mut bins: Vec<(usize, usize, u64)> = (0..top).map(|k| (1 << k, 1 << (k + 1), 0)).collect();
    for &s in sizes {
        let k = (usize::BITS - 1 - s.leading_zeros()) as usize;
        bins[k].2 += 1;
    }
    let first = bins.iter().position(|b| b.2 > 0).unwrap_or(0);
    bins.drain(..first);
    Ok(AvalancheStats {
        bins,
        count: sizes.len(),
        min,
        max,
        mean: sizes.iter().sum::<usize>() as f64 / sizes.len() as f64,
        decade_span: (max as f64 / min as f64).log10(),
    })
}
