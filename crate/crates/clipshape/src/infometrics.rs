//! Information-theoretic metrics over the discrete-input AWGN channel.
//!
//! Noise convention, used everywhere in this crate: `noise_var` is the total
//! complex-noise variance (each rail carries `noise_var / 2`), and
//! SNR = `E|X|^2 / noise_var`.

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::quad::GaussHermite;

const LN2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Quadrature,
    MonteCarlo,
}

/// Evaluation settings for MI/GMI computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub method: Method,
    pub quadrature_order: usize,
    pub mc_symbols: usize,
    pub seed: u64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            method: Method::Quadrature,
            quadrature_order: 20,
            mc_symbols: 100_000,
            seed: 1,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if self.quadrature_order < 8 {
            return Err(Error::invalid("quadrature_order must be >= 8"));
        }
        if self.method == Method::MonteCarlo && self.mc_symbols < 10_000 {
            return Err(Error::invalid("mc_symbols must be >= 10^4"));
        }
        Ok(())
    }
}

/// AWGN channel capacity `log2(1 + SNR)` in bits per complex symbol.
pub fn awgn_capacity(snr_db: f64) -> f64 {
    (1.0 + 10f64.powf(snr_db / 10.0)).log2()
}

/// Per-sample integrand state shared by the MI and GMI paths: the
/// log-metrics `ln p_j - |y - x_j|^2 / nv` for every candidate symbol.
fn log_metrics(y: Complex64, points: &[Complex64], ln_pmf: &[f64], noise_var: f64, out: &mut [f64]) {
    for ((d, x), &lp) in out.iter_mut().zip(points).zip(ln_pmf) {
        let dy = y - x;
        *d = lp - dy.norm_sqr() / noise_var;
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + v.iter().map(|&d| (d - m).exp()).sum::<f64>().ln()
}

fn ln_pmf(c: &Constellation) -> Vec<f64> {
    c.pmf()
        .iter()
        .map(|&p| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY })
        .collect()
}

/// Mutual information `I(X; Y)` in bits per symbol over circular complex
/// AWGN with total variance `noise_var`.
pub fn mutual_information(c: &Constellation, noise_var: f64, cfg: &MetricConfig) -> Result<f64> {
    cfg.validate()?;
    if !(noise_var > 0.0) {
        return Err(Error::invalid("noise_var must be > 0"));
    }
    match cfg.method {
        Method::Quadrature => Ok(mi_quadrature(c, noise_var, cfg.quadrature_order)),
        Method::MonteCarlo => Ok(mi_monte_carlo(c, noise_var, cfg.mc_symbols, cfg.seed).0),
    }
}

fn mi_quadrature(c: &Constellation, noise_var: f64, order: usize) -> f64 {
    let gh = GaussHermite::new(order);
    let sigma = noise_var.sqrt();
    let lp = ln_pmf(c);
    let points = c.points();
    let inv_pi = 1.0 / std::f64::consts::PI;
    let mut d = vec![0.0; points.len()];
    let mut mi_nats = 0.0;
    for (&x, &pi) in points.iter().zip(c.pmf()) {
        if pi == 0.0 {
            continue;
        }
        let mut acc = 0.0;
        for (&tu, &wu) in gh.nodes.iter().zip(&gh.weights) {
            for (&tv, &wv) in gh.nodes.iter().zip(&gh.weights) {
                let y = x + sigma * Complex64::new(tu, tv);
                log_metrics(y, points, &lp, noise_var, &mut d);
                // ln(W(y|x_i) / q(y)) with q = sum_j p_j W(y|x_j); the
                // Gaussian normalization cancels between numerator and
                // denominator because d already folds in ln p_j.
                let ln_cond = -(tu * tu + tv * tv);
                acc += wu * wv * (ln_cond - log_sum_exp(&d));
            }
        }
        mi_nats += pi * acc * inv_pi;
    }
    mi_nats / LN2
}

/// Monte-Carlo MI estimate, returning `(mi_bits, standard_error_bits)`.
pub fn mi_monte_carlo(c: &Constellation, noise_var: f64, n: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cdf = cumulative(c.pmf());
    let lp = ln_pmf(c);
    let points = c.points();
    let s_rail = (noise_var / 2.0).sqrt();
    let mut d = vec![0.0; points.len()];
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for _ in 0..n {
        let i = sample_index(&cdf, &mut rng);
        let noise = Complex64::new(
            s_rail * gaussian(&mut rng),
            s_rail * gaussian(&mut rng),
        );
        let y = points[i] + noise;
        log_metrics(y, points, &lp, noise_var, &mut d);
        let ln_cond = -noise.norm_sqr() / noise_var;
        let v = (ln_cond - log_sum_exp(&d)) / LN2;
        sum += v;
        sum2 += v * v;
    }
    let mean = sum / n as f64;
    let var = (sum2 / n as f64 - mean * mean).max(0.0);
    (mean, (var / n as f64).sqrt())
}

/// Generalized mutual information under bit-metric decoding, in bits per
/// symbol. Requires bit labels on the constellation.
pub fn gmi(c: &Constellation, noise_var: f64, cfg: &MetricConfig) -> Result<f64> {
    cfg.validate()?;
    if !(noise_var > 0.0) {
        return Err(Error::invalid("noise_var must be > 0"));
    }
    let labels = c
        .labels()
        .ok_or_else(|| Error::invalid("gmi requires bit labels on the constellation"))?;
    let m = labels[0].len();
    let bits: Vec<Vec<bool>> = labels
        .iter()
        .map(|l| l.chars().map(|ch| ch == '1').collect())
        .collect();
    match cfg.method {
        Method::Quadrature => Ok(gmi_quadrature(c, &bits, m, noise_var, cfg.quadrature_order)),
        Method::MonteCarlo => Ok(gmi_monte_carlo(c, &bits, m, noise_var, cfg.mc_symbols, cfg.seed).0),
    }
}

/// Sum over bit levels of `ln q(y) - ln q_b(y)` where `q_b` restricts the
/// mixture to symbols whose bit `b` matches the transmitted symbol's.
fn bit_penalty(d: &[f64], bits: &[Vec<bool>], tx: usize, m: usize) -> f64 {
    let dmax = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut q = 0.0;
    let mut qb = vec![0.0; m];
    for (j, &dj) in d.iter().enumerate() {
        let e = (dj - dmax).exp();
        q += e;
        for b in 0..m {
            if bits[j][b] == bits[tx][b] {
                qb[b] += e;
            }
        }
    }
    let lnq = q.ln();
    qb.iter().map(|&v| lnq - v.ln()).sum()
}

fn gmi_quadrature(c: &Constellation, bits: &[Vec<bool>], m: usize, noise_var: f64, order: usize) -> f64 {
    let gh = GaussHermite::new(order);
    let sigma = noise_var.sqrt();
    let lp = ln_pmf(c);
    let points = c.points();
    let inv_pi = 1.0 / std::f64::consts::PI;
    let mut d = vec![0.0; points.len()];
    let mut penalty_nats = 0.0;
    for (i, (&x, &pi)) in points.iter().zip(c.pmf()).enumerate() {
        if pi == 0.0 {
            continue;
        }
        let mut acc = 0.0;
        for (&tu, &wu) in gh.nodes.iter().zip(&gh.weights) {
            for (&tv, &wv) in gh.nodes.iter().zip(&gh.weights) {
                let y = x + sigma * Complex64::new(tu, tv);
                log_metrics(y, points, &lp, noise_var, &mut d);
                acc += wu * wv * bit_penalty(&d, bits, i, m);
            }
        }
        penalty_nats += pi * acc * inv_pi;
    }
    c.entropy() - penalty_nats / LN2
}

fn gmi_monte_carlo(
    c: &Constellation,
    bits: &[Vec<bool>],
    m: usize,
    noise_var: f64,
    n: usize,
    seed: u64,
) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cdf = cumulative(c.pmf());
    let lp = ln_pmf(c);
    let points = c.points();
    let s_rail = (noise_var / 2.0).sqrt();
    let mut d = vec![0.0; points.len()];
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for _ in 0..n {
        let i = sample_index(&cdf, &mut rng);
        let y = points[i]
            + Complex64::new(s_rail * gaussian(&mut rng), s_rail * gaussian(&mut rng));
        log_metrics(y, points, &lp, noise_var, &mut d);
        let v = bit_penalty(&d, bits, i, m) / LN2;
        sum += v;
        sum2 += v * v;
    }
    let mean = sum / n as f64;
    let var = (sum2 / n as f64 - mean * mean).max(0.0);
    (c.entropy() - mean, (var / n as f64).sqrt())
}

/// GMI estimate from measured symbol/observation pairs under a mismatched
/// Gaussian decoder with the given noise variance. Used when the channel is
/// simulated elsewhere (e.g. a full waveform chain) rather than drawn here.
pub fn gmi_from_observations(
    c: &Constellation,
    noise_var: f64,
    indices: &[u32],
    ys: &[Complex64],
) -> Result<f64> {
    if indices.len() != ys.len() || indices.is_empty() {
        return Err(Error::invalid("need matching non-empty index/observation slices"));
    }
    if !(noise_var > 0.0) {
        return Err(Error::invalid("noise_var must be > 0"));
    }
    let labels = c
        .labels()
        .ok_or_else(|| Error::invalid("gmi requires bit labels on the constellation"))?;
    let m = labels[0].len();
    let bits: Vec<Vec<bool>> = labels
        .iter()
        .map(|l| l.chars().map(|ch| ch == '1').collect())
        .collect();
    let lp = ln_pmf(c);
    let points = c.points();
    let mut d = vec![0.0; points.len()];
    let mut penalty = 0.0;
    for (&i, &y) in indices.iter().zip(ys) {
        log_metrics(y, points, &lp, noise_var, &mut d);
        penalty += bit_penalty(&d, &bits, i as usize, m);
    }
    Ok(c.entropy() - penalty / (indices.len() as f64 * LN2))
}

/// Normalized GMI: `1 - (H(X) - GMI) / m` with `m` bits per QAM symbol.
pub fn ngmi(gmi_bits: f64, entropy_bits: f64, m: usize) -> Result<f64> {
    let mf = m as f64;
    let slack = 1e-9;
    // A mismatched (bit-metric Gaussian) decoder can report slightly negative
    // GMI at very low SNR; only the upper bounds are hard invariants.
    if !(gmi_bits.is_finite() && gmi_bits <= entropy_bits + slack && entropy_bits <= mf + slack) {
        return Err(Error::domain(format!(
            "ngmi precondition violated: gmi={gmi_bits}, H={entropy_bits}, m={m}"
        )));
    }
    Ok(1.0 - (entropy_bits - gmi_bits) / mf)
}

pub(crate) fn cumulative(pmf: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = pmf
        .iter()
        .map(|&p| {
            acc += p;
            acc
        })
        .collect();
    if let Some(last) = cdf.last_mut() {
        *last = 1.0;
    }
    cdf
}

pub(crate) fn sample_index(cdf: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    cdf.partition_point(|&c| c < u).min(cdf.len() - 1)
}

/// Standard normal via Box-Muller (two uniforms per call, second discarded
/// for simplicity of seeding).
pub(crate) fn gaussian(rng: &mut impl Rng) -> f64 {
    loop {
        let u1: f64 = rng.gen();
        let u2: f64 = rng.gen();
        if u1 > f64::MIN_POSITIVE {
            return (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        }
    }
}
