//! Input-PMF optimization over a fixed (peak-limited) support via the
//! unconstrained Blahut-Arimoto algorithm.
//!
//! The channel support never moves: fixing the point set is what implements
//! the peak-power constraint. The inner expectation runs on a shared
//! discretized output grid so that every iteration is an exact alternating
//! maximization of a finite channel, which makes the per-iteration MI
//! sequence monotone to rounding precision.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::infometrics::{self, MetricConfig};

const LN2: f64 = std::f64::consts::LN_2;

/// Outcome of a Blahut-Arimoto run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapingResult {
    /// Optimized PMF over the input support.
    pub pmf: Vec<f64>,
    /// Iterations actually performed (>= 1).
    pub iterations: usize,
    /// Mutual information of the optimized input, bits/symbol (quadrature).
    pub mi_bits: f64,
    /// `10 log10(E|X|^2 / noise_var)` after optimization.
    pub true_snr_db: f64,
    /// False when `max_iter` was reached before the tolerance.
    pub converged: bool,
    /// Per-iteration MI of the discretized channel, bits/symbol.
    pub mi_trace_bits: Vec<f64>,
}

/// One point of an achievable-information-rate curve.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AirPoint {
    pub noise_var: f64,
    pub true_snr_db: f64,
    pub mi_bits: f64,
    pub avg_power: f64,
    pub peak_power: f64,
}

/// Per-rail Gaussian kernel sampled on the output grid, truncated to its
/// significant window and renormalized so each channel row sums to exactly 1.
struct RailKernel {
    start: usize,
    vals: Vec<f64>,
    neg_entropy: f64, // sum v ln v
}

fn rail_kernel(center: f64, grid_lo: f64, step: f64, g: usize, s_rail: f64) -> RailKernel {
    let half_width = 9.0 * s_rail;
    let lo_x = center - half_width;
    let hi_x = center + half_width;
    let start = (((lo_x - grid_lo) / step).floor().max(0.0)) as usize;
    let end = ((((hi_x - grid_lo) / step).ceil()) as usize).min(g - 1);
    let mut vals = Vec::with_capacity(end - start + 1);
    for a in start..=end {
        let x = grid_lo + a as f64 * step;
        let z = (x - center) / s_rail;
        vals.push((-0.5 * z * z).exp());
    }
    let sum: f64 = vals.iter().sum();
    for v in &mut vals {
        *v /= sum;
    }
    let neg_entropy = vals
        .iter()
        .map(|&v| if v > 0.0 { v * v.ln() } else { 0.0 })
        .sum();
    RailKernel { start, vals, neg_entropy }
}

/// Maximizes `I(X; Y)` over the input PMF for the AWGN channel with total
/// complex noise variance `noise_var`, holding the support fixed.
///
/// Stops when the relative MI change drops below `tol` or after `max_iter`
/// iterations (the result is then flagged, not an error).
pub fn blahut_arimoto(
    c: &Constellation,
    noise_var: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ShapingResult> {
    if !(noise_var > 0.0) {
        return Err(Error::invalid("noise_var must be > 0"));
    }
    if max_iter == 0 {
        return Err(Error::invalid("max_iter must be >= 1"));
    }
    let n = c.len();
    let s_rail = (noise_var / 2.0).sqrt();
    let max_rail = c
        .points()
        .iter()
        .map(|p| p.re.abs().max(p.im.abs()))
        .fold(0.0, f64::max);
    let l = max_rail + 6.0 * s_rail;
    let target_step = s_rail / 3.0;
    let g = ((2.0 * l / target_step).ceil() as usize + 1).clamp(64, 192);
    let step = 2.0 * l / (g - 1) as f64;
    let grid_lo = -l;

    let kernels_i: Vec<RailKernel> = c
        .points()
        .iter()
        .map(|p| rail_kernel(p.re, grid_lo, step, g, s_rail))
        .collect();
    let kernels_q: Vec<RailKernel> = c
        .points()
        .iter()
        .map(|p| rail_kernel(p.im, grid_lo, step, g, s_rail))
        .collect();
    // sum_l W ln W per input; the 2-D kernel is the product of the rails.
    let neg_h: Vec<f64> = kernels_i
        .iter()
        .zip(&kernels_q)
        .map(|(ki, kq)| ki.neg_entropy + kq.neg_entropy)
        .collect();

    let mut pmf = vec![1.0 / n as f64; n];
    let mut q = vec![0.0f64; g * g];
    let mut lnq = vec![0.0f64; g * g];
    let mut d = vec![0.0f64; n];
    let mut mi_trace = Vec::new();
    let mut prev_mi = f64::NEG_INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..max_iter {
        iterations += 1;
        // Output marginal on the grid.
        q.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            if pmf[i] == 0.0 {
                continue;
            }
            let ki = &kernels_i[i];
            let kq = &kernels_q[i];
            for (ai, &va) in ki.vals.iter().enumerate() {
                let row = (ki.start + ai) * g + kq.start;
                let t = pmf[i] * va;
                if t == 0.0 {
                    continue;
                }
                let dst = &mut q[row..row + kq.vals.len()];
                for (dv, &vb) in dst.iter_mut().zip(&kq.vals) {
                    *dv += t * vb;
                }
            }
        }
        for (lv, &v) in lnq.iter_mut().zip(&q) {
            *lv = if v > 0.0 { v.ln() } else { 0.0 };
        }
        // Kullback-Leibler terms D_i = E[ln W_i - ln q].
        for i in 0..n {
            if pmf[i] == 0.0 {
                d[i] = f64::NEG_INFINITY;
                continue;
            }
            let ki = &kernels_i[i];
            let kq = &kernels_q[i];
            let mut cross = 0.0;
            for (ai, &va) in ki.vals.iter().enumerate() {
                let row = (ki.start + ai) * g + kq.start;
                let mut s = 0.0;
                let src = &lnq[row..row + kq.vals.len()];
                for (&lv, &vb) in src.iter().zip(&kq.vals) {
                    s += vb * lv;
                }
                cross += va * s;
            }
            d[i] = neg_h[i] - cross;
        }
        let mi_nats: f64 = pmf
            .iter()
            .zip(&d)
            .filter(|(&p, _)| p > 0.0)
            .map(|(&p, &di)| p * di)
            .sum();
        let mi = mi_nats / LN2;
        mi_trace.push(mi);
        if prev_mi.is_finite() && (mi - prev_mi).abs() <= tol * mi.abs().max(1e-12) {
            converged = true;
            break;
        }
        prev_mi = mi;
        // Multiplicative update p_i <- p_i exp(D_i) / Z.
        let dmax = d
            .iter()
            .zip(&pmf)
            .filter(|(_, &p)| p > 0.0)
            .map(|(&di, _)| di)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for i in 0..n {
            if pmf[i] > 0.0 {
                pmf[i] *= (d[i] - dmax).exp();
                z += pmf[i];
            }
        }
        for p in &mut pmf {
            *p /= z;
        }
    }

    // Exact renormalization guards the 1e-12 PMF-sum invariant.
    let z: f64 = pmf.iter().sum();
    for p in &mut pmf {
        *p /= z;
    }
    let shaped = c.with_pmf(pmf.clone())?;
    let mi_bits = infometrics::mutual_information(&shaped, noise_var, &MetricConfig::default())?;
    Ok(ShapingResult {
        pmf,
        iterations,
        mi_bits,
        true_snr_db: true_snr(&shaped, noise_var),
        converged,
        mi_trace_bits: mi_trace,
    })
}

/// `10 log10(E|X|^2 / noise_var)`.
pub fn true_snr(c: &Constellation, noise_var: f64) -> f64 {
    10.0 * (c.average_power() / noise_var).log10()
}

/// One (true SNR, MI) observation for a fixed PMF.
pub fn air_point(c: &Constellation, noise_var: f64, cfg: &MetricConfig) -> Result<AirPoint> {
    let mi = infometrics::mutual_information(c, noise_var, cfg)?;
    Ok(AirPoint {
        noise_var,
        true_snr_db: true_snr(c, noise_var),
        mi_bits: mi,
        avg_power: c.average_power(),
        peak_power: c.peak_power(),
    })
}

/// AIR curve for a fixed PMF over a strictly positive noise grid.
pub fn air_curve(c: &Constellation, noise_grid: &[f64], cfg: &MetricConfig) -> Result<Vec<AirPoint>> {
    if noise_grid.iter().any(|&nv| !(nv > 0.0)) {
        return Err(Error::invalid("noise grid must be strictly positive"));
    }
    noise_grid
        .par_iter()
        .map(|&nv| air_point(c, nv, cfg))
        .collect()
}

/// AIR curve with a fresh Blahut-Arimoto optimization at every noise value,
/// plotted against the post-optimization true SNR.
pub fn ba_air_curve(
    c: &Constellation,
    noise_grid: &[f64],
    tol: f64,
    max_iter: usize,
    cfg: &MetricConfig,
) -> Result<Vec<AirPoint>> {
    if noise_grid.iter().any(|&nv| !(nv > 0.0)) {
        return Err(Error::invalid("noise grid must be strictly positive"));
    }
    noise_grid
        .par_iter()
        .map(|&nv| {
            let res = blahut_arimoto(c, nv, tol, max_iter)?;
            let shaped = c.with_pmf(res.pmf)?;
            air_point(&shaped, nv, cfg)
        })
        .collect()
}

/// Finds the Blahut-Arimoto-optimized PMF whose entropy matches `target_h`
/// bits by bisecting on the design noise variance. Returns the shaped
/// constellation and the noise variance it was optimized for.
pub fn ba_pmf_for_entropy(
    c: &Constellation,
    target_h: f64,
    entropy_tol: f64,
) -> Result<(Constellation, f64)> {
    let n = c.len() as f64;
    if !(target_h > 0.0 && target_h <= n.log2() + 1e-12) {
        return Err(Error::domain(format!("target entropy {target_h} out of range")));
    }
    let p_avg = c.average_power();
    let h_at = |snr_db: f64| -> Result<(f64, Constellation, f64)> {
        let nv = p_avg / 10f64.powf(snr_db / 10.0);
        let res = blahut_arimoto(c, nv, 1e-8, 5_000)?;
        let shaped = c.with_pmf(res.pmf)?;
        Ok((shaped.entropy(), shaped, nv))
    };
    let mut lo = -10.0; // low SNR: concentrated PMF, low entropy
    let mut hi = 40.0; // high SNR: near-uniform PMF
    let (h_hi, shaped_hi, nv_hi) = h_at(hi)?;
    if h_hi < target_h - entropy_tol {
        return Err(Error::domain("entropy target above BA range"));
    }
    if h_hi <= target_h + entropy_tol {
        return Ok((shaped_hi, nv_hi));
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let (h, shaped, nv) = h_at(mid)?;
        if (h - target_h).abs() <= entropy_tol {
            return Ok((shaped, nv));
        }
        if h < target_h {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (h, shaped, nv) = h_at(0.5 * (lo + hi))?;
    if (h - target_h).abs() > 10.0 * entropy_tol {
        return Err(Error::domain(format!(
            "BA entropy bisection stalled at H={h} (target {target_h})"
        )));
    }
    Ok((shaped, nv))
}
