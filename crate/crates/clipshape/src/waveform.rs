//! Digital waveform chain: RRC pulse shaping, per-rail clipping at `k * sigma`,
//! full-scale DAC quantization, PAPR, and the clipping/quantization SNR model
//! in closed form and by measurement.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::infometrics::{cumulative, sample_index};
#[cfg(test)]
use crate::infometrics::gaussian;
use crate::quad;

/// Baud-rate-free digital waveform parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveformSpec {
    /// Samples per symbol.
    pub sps: usize,
    /// RRC roll-off factor.
    pub alpha: f64,
    /// Filter half-support in symbols.
    pub span_symbols: usize,
    /// DAC bit depth `n`.
    pub dac_bits: u32,
    /// Clipping ratio `k` (clip level = `k * sigma` per rail).
    pub clip_ratio: f64,
    /// Symbols per generated sequence.
    pub num_symbols: usize,
    /// RNG seed for symbol generation.
    pub seed: u64,
}

impl Default for WaveformSpec {
    fn default() -> Self {
        WaveformSpec {
            sps: 2,
            alpha: 0.2,
            span_symbols: 64,
            dac_bits: 8,
            clip_ratio: 3.0,
            num_symbols: 200_000,
            seed: 1,
        }
    }
}

impl WaveformSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sps < 2 {
            return Err(Error::invalid("sps must be >= 2"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid(format!("alpha must be in (0, 1], got {}", self.alpha)));
        }
        if self.span_symbols == 0 {
            return Err(Error::invalid("span_symbols must be >= 1"));
        }
        if self.dac_bits < 4 {
            return Err(Error::invalid("dac_bits must be >= 4"));
        }
        if !(self.clip_ratio > 0.0) {
            return Err(Error::invalid("clip_ratio must be > 0"));
        }
        if self.num_symbols == 0 {
            return Err(Error::invalid("num_symbols must be >= 1"));
        }
        Ok(())
    }
}

/// A complex baseband sample sequence together with its pre-clip rail RMS
/// and, once clipped, the clip level.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitalWaveform {
    pub samples: Vec<Complex64>,
    /// RMS of the rails before clipping (`sigma_x`).
    pub sigma_per_rail: f64,
    /// Clip level `c` per rail, set by [`clip`].
    pub clip_level: Option<f64>,
    /// Symbol indices that generated the sequence (empty for raw sample
    /// constructions).
    pub symbol_indices: Vec<u32>,
}

impl DigitalWaveform {
    /// Wraps raw samples, measuring the rail RMS.
    pub fn from_samples(samples: Vec<Complex64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("waveform must be non-empty"));
        }
        let ms: f64 = samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / samples.len() as f64;
        Ok(DigitalWaveform {
            samples,
            sigma_per_rail: (ms / 2.0).sqrt(),
            clip_level: None,
            symbol_indices: Vec::new(),
        })
    }

    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }
}

/// Unit-energy root-raised-cosine taps with `2 * span_symbols * sps + 1`
/// coefficients. The removable singularities at `t = 0` and
/// `|t| = 1/(4 alpha)` are evaluated in closed form.
pub fn rrc_taps(alpha: f64, span_symbols: usize, sps: usize) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha <= 1.0) || span_symbols == 0 || sps < 1 {
        return Err(Error::invalid("invalid RRC parameters"));
    }
    let len = 2 * span_symbols * sps + 1;
    let mid = (len - 1) as f64 / 2.0;
    let pi = std::f64::consts::PI;
    let singular_t = 1.0 / (4.0 * alpha);
    let mut taps = Vec::with_capacity(len);
    for i in 0..len {
        let t = (i as f64 - mid) / sps as f64; // in symbol periods
        let h = if t == 0.0 {
            1.0 + alpha * (4.0 / pi - 1.0)
        } else if (t.abs() - singular_t).abs() < 1e-12 {
            (alpha / 2f64.sqrt())
                * ((1.0 + 2.0 / pi) * (pi / (4.0 * alpha)).sin()
                    + (1.0 - 2.0 / pi) * (pi / (4.0 * alpha)).cos())
        } else {
            let four_at = 4.0 * alpha * t;
            ((pi * t * (1.0 - alpha)).sin() + four_at * (pi * t * (1.0 + alpha)).cos())
                / (pi * t * (1.0 - four_at * four_at))
        };
        taps.push(h);
    }
    let energy: f64 = taps.iter().map(|h| h * h).sum();
    let norm = energy.sqrt();
    for h in &mut taps {
        *h /= norm;
    }
    Ok(taps)
}

/// Draws i.i.d. symbols from the constellation PMF, upsamples by `sps` and
/// applies the RRC filter. Filter transients are discarded: the returned
/// sequence is the steady-state segment of length `num_symbols * sps`.
pub fn generate(c: &Constellation, spec: &WaveformSpec) -> Result<DigitalWaveform> {
    spec.validate()?;
    let taps = rrc_taps(spec.alpha, spec.span_symbols, spec.sps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let cdf = cumulative(c.pmf());
    let pad = spec.span_symbols + 1;
    let total_syms = spec.num_symbols + 2 * pad;
    let indices: Vec<u32> = (0..total_syms)
        .map(|_| sample_index(&cdf, &mut rng) as u32)
        .collect();

    let up_len = (total_syms - 1) * spec.sps + 1;
    let buf_len = up_len + taps.len() - 1;
    let mut buf = vec![Complex64::new(0.0, 0.0); buf_len];
    for (m, &idx) in indices.iter().enumerate() {
        let s = c.points()[idx as usize];
        let base = m * spec.sps;
        for (j, &h) in taps.iter().enumerate() {
            buf[base + j] += s * h;
        }
    }
    let start = taps.len() - 1;
    let n_keep = spec.num_symbols * spec.sps;
    let samples = buf[start..start + n_keep].to_vec();
    let ms: f64 = samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / samples.len() as f64;
    Ok(DigitalWaveform {
        samples,
        sigma_per_rail: (ms / 2.0).sqrt(),
        clip_level: None,
        // Symbols aligned with sample m*sps are those at pad + m.
        symbol_indices: indices[pad..pad + spec.num_symbols].to_vec(),
    })
}

/// Hard-limits each rail to `[-c, c]` with `c = k * sigma_per_rail`, where
/// sigma is the pre-clip rail RMS carried by the waveform. Idempotent.
pub fn clip(w: &DigitalWaveform, k: f64) -> Result<DigitalWaveform> {
    if !(k > 0.0) {
        return Err(Error::invalid("clip ratio must be > 0"));
    }
    let c = k * w.sigma_per_rail;
    let samples = w
        .samples
        .iter()
        .map(|s| Complex64::new(s.re.clamp(-c, c), s.im.clamp(-c, c)))
        .collect();
    Ok(DigitalWaveform {
        samples,
        sigma_per_rail: w.sigma_per_rail,
        clip_level: Some(c),
        symbol_indices: w.symbol_indices.clone(),
    })
}

/// Rescales the clipped rails by `A_max / c` (`A_max = 2^(n-1)`), quantizes
/// to `2^n` mid-rise levels of unit step, and scales back by `c / A_max` so
/// downstream stages see the original scale.
pub fn quantize(w: &DigitalWaveform, dac_bits: u32) -> Result<DigitalWaveform> {
    if dac_bits < 4 {
        return Err(Error::invalid("dac_bits must be >= 4"));
    }
    let c = w
        .clip_level
        .ok_or_else(|| Error::invalid("quantize requires a clipped waveform"))?;
    let a_max = 2f64.powi(dac_bits as i32 - 1);
    let up = a_max / c;
    let down = c / a_max;
    let q_rail = |v: f64| -> f64 {
        let x = v * up;
        ((x.floor() + 0.5).clamp(-a_max + 0.5, a_max - 0.5)) * down
    };
    let samples = w
        .samples
        .iter()
        .map(|s| Complex64::new(q_rail(s.re), q_rail(s.im)))
        .collect();
    Ok(DigitalWaveform {
        samples,
        sigma_per_rail: w.sigma_per_rail,
        clip_level: Some(c),
        symbol_indices: w.symbol_indices.clone(),
    })
}

/// Peak-to-average power ratio over the complex samples, in dB.
pub fn papr(w: &DigitalWaveform) -> Result<f64> {
    if w.samples.is_empty() {
        return Err(Error::invalid("papr of empty waveform"));
    }
    let peak = w.samples.iter().map(|s| s.norm_sqr()).fold(0.0, f64::max);
    Ok(10.0 * (peak / w.mean_power()).log10())
}

/// DAC quantization-noise constant in the SNR denominator `c^2 / (C 2^{2n})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantNoiseModel {
    /// `C = 6` (default).
    Nominal,
    /// `C = 3`, the step-noise value `delta^2 / 12` of a mid-rise quantizer
    /// with `2^n` unit steps across the full scale.
    UniformStep,
}

impl QuantNoiseModel {
    fn constant(self) -> f64 {
        match self {
            QuantNoiseModel::Nominal => 6.0,
            QuantNoiseModel::UniformStep => 3.0,
        }
    }
}

/// One-sided (folded) rail-amplitude density on `[0, inf)`, integrating to 1.
#[derive(Debug, Clone)]
pub enum DensityModel {
    /// Folded Gaussian rail with the given (two-sided) standard deviation.
    Gaussian { sigma: f64 },
    /// Empirical histogram of `|rail|` values: uniform bins of `bin_width`
    /// starting at 0, densities at bin centers.
    Histogram {
        bin_width: f64,
        density: Vec<f64>,
        sigma: f64,
    },
}

impl DensityModel {
    /// Builds the empirical rail histogram of a waveform: 4096 bins covering
    /// `[0, 8 sigma]` (folded from the +-8 sigma two-sided range).
    pub fn from_waveform(w: &DigitalWaveform) -> Result<Self> {
        const BINS: usize = 4096;
        let sigma = w.sigma_per_rail;
        if !(sigma > 0.0) {
            return Err(Error::invalid("waveform has zero rail power"));
        }
        let hi = 8.0 * sigma;
        let bin_width = hi / BINS as f64;
        let mut counts = vec![0u64; BINS];
        let mut total = 0u64;
        for s in &w.samples {
            for v in [s.re.abs(), s.im.abs()] {
                let b = (v / bin_width) as usize;
                if b < BINS {
                    counts[b] += 1;
                }
                total += 1;
            }
        }
        let density = counts
            .iter()
            .map(|&c| c as f64 / (total as f64 * bin_width))
            .collect();
        // Sigma from the actual samples, not the binned approximation.
        Ok(DensityModel::Histogram { bin_width, density, sigma })
    }

    pub fn sigma(&self) -> f64 {
        match self {
            DensityModel::Gaussian { sigma } => *sigma,
            DensityModel::Histogram { sigma, .. } => *sigma,
        }
    }

    /// Integrates `g(x) f(x)` over `[a, b]` (clamped to the model support).
    fn integrate(&self, g: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        match self {
            DensityModel::Gaussian { sigma } => {
                let norm = (2.0 / std::f64::consts::PI).sqrt() / sigma;
                let f = |x: f64| norm * (-0.5 * (x / sigma) * (x / sigma)).exp() * g(x);
                let hi = b.min(a.max(b).min(self.sigma() * 16.0)).max(a);
                quad::integrate(f, a, hi, 1e-8)
            }
            DensityModel::Histogram { bin_width, density, .. } => {
                // Trapezoid over bin centers, with partial end bins.
                let lo = a.max(0.0);
                let hi = b.min(bin_width * density.len() as f64);
                if hi <= lo {
                    return 0.0;
                }
                let center = |i: usize| (i as f64 + 0.5) * bin_width;
                let val = |x: f64| -> f64 {
                    // piecewise-linear between bin centers, flat at the ends
                    let u = x / bin_width - 0.5;
                    if u <= 0.0 {
                        density[0]
                    } else if u >= (density.len() - 1) as f64 {
                        density[density.len() - 1]
                    } else {
                        let i = u.floor() as usize;
                        let frac = u - i as f64;
                        density[i] * (1.0 - frac) + density[i + 1] * frac
                    }
                };
                let mut acc = 0.0;
                let mut x_prev = lo;
                let mut f_prev = val(lo) * g(lo);
                let first_center = ((lo / bin_width - 0.5).ceil().max(0.0)) as usize;
                let mut i = first_center;
                while i < density.len() && center(i) < hi {
                    let x = center(i);
                    if x > x_prev {
                        let f = val(x) * g(x);
                        acc += 0.5 * (f_prev + f) * (x - x_prev);
                        x_prev = x;
                        f_prev = f;
                    }
                    i += 1;
                }
                let f_hi = val(hi) * g(hi);
                acc += 0.5 * (f_prev + f_hi) * (hi - x_prev);
                acc
            }
        }
    }

    fn total_mass(&self) -> f64 {
        self.integrate(|_| 1.0, 0.0, f64::INFINITY.min(self.support_hi()))
    }

    fn support_hi(&self) -> f64 {
        match self {
            DensityModel::Gaussian { sigma } => 16.0 * sigma,
            DensityModel::Histogram { bin_width, density, .. } => {
                bin_width * density.len() as f64
            }
        }
    }
}

/// Closed-form digital SNR of the clip-rescale-quantize chain:
///
/// ```text
/// SNR(k) = [ c^2 P(|x| > c) + E[x^2; |x| <= c] ]
///        / [ c^2 / (C 2^{2n}) + E[(|x| - c)^2; |x| > c] ],   c = k sigma
/// ```
///
/// with all expectations over the rail-amplitude density `f`. Returns dB.
pub fn digital_snr_analytic(
    f: &DensityModel,
    k: f64,
    dac_bits: u32,
    quant: QuantNoiseModel,
) -> Result<f64> {
    if !(k > 0.0) || dac_bits < 4 {
        return Err(Error::invalid("invalid clip ratio or DAC depth"));
    }
    let mass = f.total_mass();
    if (mass - 1.0).abs() > 1e-3 {
        return Err(Error::invalid(format!(
            "density is not normalized (integral = {mass})"
        )));
    }
    let sigma = f.sigma();
    let c = k * sigma;
    let hi = f.support_hi().max(c);
    let tail_mass = f.integrate(|_| 1.0, c, hi);
    let inner_m2 = f.integrate(|x| x * x, 0.0, c.min(hi));
    let clip_noise = f.integrate(|x| (x - c) * (x - c), c, hi);
    let quant_noise = c * c / (quant.constant() * 4f64.powi(dac_bits as i32));
    let num = c * c * tail_mass + inner_m2;
    let den = quant_noise + clip_noise;
    Ok(10.0 * (num / den).log10())
}

/// Measured digital SNR of a generated waveform after clip + quantize:
/// clipped-signal power over (clipping error + quantization error) power.
pub fn digital_snr_of(w: &DigitalWaveform, k: f64, dac_bits: u32) -> Result<f64> {
    let clipped = clip(w, k)?;
    let quantized = quantize(&clipped, dac_bits)?;
    let n = w.samples.len() as f64;
    let sig: f64 = clipped.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / n;
    let clip_err: f64 = w
        .samples
        .iter()
        .zip(&clipped.samples)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        / n;
    let quant_err: f64 = clipped
        .samples
        .iter()
        .zip(&quantized.samples)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        / n;
    Ok(10.0 * (sig / (clip_err + quant_err)).log10())
}

/// Generates the waveform for `(c, spec)` and measures its digital SNR at
/// `spec.clip_ratio` and `spec.dac_bits`.
pub fn digital_snr_empirical(spec: &WaveformSpec, c: &Constellation) -> Result<f64> {
    let w = generate(c, spec)?;
    digital_snr_of(&w, spec.clip_ratio, spec.dac_bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{fit_mb_to_entropy, make_square_qam};

    fn gaussian_waveform(n: usize, seed: u64) -> DigitalWaveform {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..n)
            .map(|_| Complex64::new(gaussian(&mut rng), gaussian(&mut rng)))
            .collect();
        DigitalWaveform::from_samples(samples).unwrap()
    }

    #[test]
    fn rrc_taps_symmetric_unit_energy() {
        let taps = rrc_taps(0.2, 64, 2).unwrap();
        assert_eq!(taps.len(), 257);
        for i in 0..taps.len() {
            assert!((taps[i] - taps[taps.len() - 1 - i]).abs() < 1e-12);
        }
        let energy: f64 = taps.iter().map(|h| h * h).sum();
        assert!((energy - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rrc_cascade_is_isi_free() {
        let sps = 4;
        let taps = rrc_taps(0.2, 32, sps).unwrap();
        // Full self-convolution = raised cosine; symbol-spaced samples away
        // from the peak must vanish.
        let n = taps.len();
        let mut rc = vec![0.0; 2 * n - 1];
        for i in 0..n {
            for j in 0..n {
                rc[i + j] += taps[i] * taps[j];
            }
        }
        let peak_idx = n - 1;
        let peak = rc[peak_idx];
        let mut m = 1;
        while peak_idx >= m * sps {
            let off = rc[peak_idx - m * sps].abs().max(rc[peak_idx + m * sps].abs());
            assert!(off < 1e-3 * peak, "ISI at offset {m}: {off}");
            m += 1;
        }
    }

    #[test]
    fn single_symbol_pmf_is_periodic() {
        let c = make_square_qam(4).unwrap().with_pmf(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let spec = WaveformSpec { num_symbols: 512, ..WaveformSpec::default() };
        let w = generate(&c, &spec).unwrap();
        let period = spec.sps;
        for i in 0..w.samples.len() - period {
            assert!((w.samples[i] - w.samples[i + period]).norm() < 1e-9);
        }
    }

    #[test]
    fn symbol_frequencies_match_pmf() {
        let c = make_square_qam(16).unwrap();
        let spec = WaveformSpec { num_symbols: 100_000, ..WaveformSpec::default() };
        let w = generate(&c, &spec).unwrap();
        let n = w.symbol_indices.len() as f64;
        let bound = 4.0 / n.sqrt();
        let mut freq = vec![0.0; 16];
        for &i in &w.symbol_indices {
            freq[i as usize] += 1.0 / n;
        }
        for (f, &p) in freq.iter().zip(c.pmf()) {
            assert!((f - p).abs() < bound, "freq {f} vs pmf {p}");
        }
    }

    #[test]
    fn rail_variance_matches_upsampling_factor() {
        let c = make_square_qam(64).unwrap();
        let spec = WaveformSpec { num_symbols: 1_000_000, seed: 5, ..WaveformSpec::default() };
        let w = generate(&c, &spec).unwrap();
        // Unit-energy filter on sps-upsampled symbols: mean sample power is
        // avg constellation power / sps.
        let expected_rail_var = c.average_power() / (2.0 * spec.sps as f64);
        let measured = w.sigma_per_rail * w.sigma_per_rail;
        assert!(
            (measured / expected_rail_var - 1.0).abs() < 0.01,
            "measured {measured} expected {expected_rail_var}"
        );
    }

    #[test]
    fn clip_is_idempotent_and_bounded() {
        let w = gaussian_waveform(50_000, 2);
        let c1 = clip(&w, 1.5).unwrap();
        let c2 = clip(&c1, 1.5).unwrap();
        assert_eq!(c1.samples, c2.samples);
        let c = c1.clip_level.unwrap();
        for s in &c1.samples {
            assert!(s.re.abs() <= c && s.im.abs() <= c);
        }
        // Any sample that exceeded c sits exactly at c after clipping.
        let max_rail = c1
            .samples
            .iter()
            .flat_map(|s| [s.re.abs(), s.im.abs()])
            .fold(0.0, f64::max);
        assert_eq!(max_rail, c);
    }

    #[test]
    fn deep_clip_changes_nothing() {
        let w = gaussian_waveform(200_000, 3);
        let clipped = clip(&w, 10.0).unwrap();
        let altered = w
            .samples
            .iter()
            .zip(&clipped.samples)
            .filter(|(a, b)| a != b)
            .count();
        assert!(altered as f64 / w.samples.len() as f64 <= 1e-8, "altered {altered}");
    }

    #[test]
    fn unit_clip_second_moment_matches_oracle() {
        // Independent oracle: the clipped second moment of a unit-variance
        // Gaussian rail at c = 1 is
        //   2 * c^2 * int_1^inf phi + 2 * int_0^1 x^2 phi  = 0.51606...
        let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let tail = quad::integrate(phi, 1.0, 14.0, 1e-10);
        let inner = quad::integrate(|x| x * x * phi(x), 0.0, 1.0, 1e-10);
        let oracle = 2.0 * tail + 2.0 * inner;
        assert!((oracle - 0.51606).abs() < 2e-4, "oracle {oracle}");

        let w = gaussian_waveform(1_000_000, 4);
        let k = 1.0 / w.sigma_per_rail; // clip exactly at unit amplitude
        let clipped = clip(&w, k).unwrap();
        let m2 = clipped
            .samples
            .iter()
            .map(|s| (s.re * s.re + s.im * s.im) / 2.0)
            .sum::<f64>()
            / clipped.samples.len() as f64;
        assert!((m2 / oracle - 1.0).abs() < 0.01, "measured {m2} oracle {oracle}");
    }

    #[test]
    fn quantize_error_bounded_by_half_step() {
        let w = gaussian_waveform(20_000, 6);
        let clipped = clip(&w, 2.0).unwrap();
        let c = clipped.clip_level.unwrap();
        for n in [6u32, 10, 14] {
            let q = quantize(&clipped, n).unwrap();
            let half_step = c / 2f64.powi(n as i32);
            for (a, b) in clipped.samples.iter().zip(&q.samples) {
                assert!((a.re - b.re).abs() <= half_step + 1e-12);
                assert!((a.im - b.im).abs() <= half_step + 1e-12);
            }
        }
    }

    #[test]
    fn quantize_requires_clip() {
        let w = gaussian_waveform(100, 7);
        assert!(quantize(&w, 8).is_err());
    }

    #[test]
    fn full_scale_sine_sqnr() {
        // 6.02 n + 1.76 dB for a full-scale sinusoid.
        let n = 1 << 16;
        let amp = 1.0;
        let freq = 0.137313; // incommensurate with the sample grid
        let samples: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(amp * (2.0 * std::f64::consts::PI * freq * i as f64).sin(), 0.0))
            .collect();
        let w = DigitalWaveform::from_samples(samples).unwrap();
        let k = amp / w.sigma_per_rail;
        let clipped = clip(&w, k).unwrap();
        let q = quantize(&clipped, 8).unwrap();
        let sig: f64 = clipped.samples.iter().map(|s| s.re * s.re).sum();
        let err: f64 = clipped
            .samples
            .iter()
            .zip(&q.samples)
            .map(|(a, b)| (a.re - b.re) * (a.re - b.re))
            .sum();
        let sqnr = 10.0 * (sig / err).log10();
        assert!((sqnr - 49.92).abs() < 0.3, "sqnr {sqnr}");
    }

    #[test]
    fn constant_rail_at_clip_level() {
        let samples = vec![Complex64::new(1.0, 0.0); 64];
        let w = DigitalWaveform::from_samples(samples).unwrap();
        let k = 1.0 / w.sigma_per_rail;
        let clipped = clip(&w, k).unwrap();
        let c = clipped.clip_level.unwrap();
        let q = quantize(&clipped, 8).unwrap();
        let step = c / 128.0;
        for s in &q.samples {
            // top reconstruction level, error exactly half a step
            assert!((s.re - (c - 0.5 * step)).abs() < 1e-12);
        }
    }

    #[test]
    fn papr_basics() {
        let n = 4096;
        let samples: Vec<Complex64> = (0..n)
            .map(|i| {
                let ph = 2.0 * std::f64::consts::PI * 0.2411 * i as f64;
                Complex64::new(ph.cos(), ph.sin())
            })
            .collect();
        let w = DigitalWaveform::from_samples(samples).unwrap();
        assert!(papr(&w).unwrap().abs() < 1e-9, "constant envelope");

        let g = gaussian_waveform(100_000, 8);
        let p0 = papr(&g).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for k in [1.0, 2.0, 3.0, 5.0, 10.0] {
            let pc = papr(&clip(&g, k).unwrap()).unwrap();
            assert!(pc <= p0 + 1e-9, "clipping must not raise PAPR");
            assert!(pc >= prev - 1e-9, "PAPR non-decreasing in k");
            let c = k * g.sigma_per_rail;
            let bound = 10.0 * (2.0 * c * c / clip(&g, k).unwrap().mean_power()).log10();
            assert!(pc <= bound + 1e-9);
            prev = pc;
        }
    }

    #[test]
    fn analytic_snr_gaussian_limits() {
        let f = DensityModel::Gaussian { sigma: 1.0 };
        // Large k: clipping terms vanish, leaving 10 log10(C 2^{2n} / k^2).
        let snr = digital_snr_analytic(&f, 8.0, 8, QuantNoiseModel::Nominal).unwrap();
        let ceiling = 10.0 * (6.0f64 * 65536.0 / 64.0).log10();
        assert!((snr - ceiling).abs() < 0.01, "snr {snr} vs {ceiling}");
        // n = 8, k = 4: close to (but below) the 43.9 dB ceiling.
        let snr4 = digital_snr_analytic(&f, 4.0, 8, QuantNoiseModel::Nominal).unwrap();
        let ceiling4 = 10.0 * (6.0f64 * 65536.0 / 16.0).log10();
        assert!(snr4 < ceiling4 && (snr4 - ceiling4).abs() < 1.0, "snr4 {snr4}");
        // Both noise terms vanish for large n and k.
        let snr_big = digital_snr_analytic(&f, 12.0, 24, QuantNoiseModel::Nominal).unwrap();
        assert!(snr_big > 100.0);
    }

    #[test]
    fn analytic_snr_is_unimodal_in_k() {
        let f = DensityModel::Gaussian { sigma: 1.0 };
        let snrs: Vec<f64> = (0..=40)
            .map(|i| {
                let k = 1.0 + 0.125 * i as f64;
                digital_snr_analytic(&f, k, 8, QuantNoiseModel::Nominal).unwrap()
            })
            .collect();
        let mut sign_changes = 0;
        let mut prev_up = true;
        for w in snrs.windows(2) {
            let up = w[1] >= w[0];
            if up != prev_up {
                sign_changes += 1;
            }
            prev_up = up;
        }
        assert_eq!(sign_changes, 1, "expected a single interior maximum: {snrs:?}");
    }

    #[test]
    fn empirical_vs_histogram_analytic() {
        let c = make_square_qam(64).unwrap();
        let mb = c.mb_pmf(fit_mb_to_entropy(&c, 4.3).unwrap()).unwrap();
        let spec = WaveformSpec { num_symbols: 400_000, seed: 11, ..WaveformSpec::default() };
        let w = generate(&mb, &spec).unwrap();
        let hist = DensityModel::from_waveform(&w).unwrap();
        for k in [2.0, 3.0] {
            let emp = digital_snr_of(&w, k, 8).unwrap();
            let ana = digital_snr_analytic(&hist, k, 8, QuantNoiseModel::UniformStep).unwrap();
            assert!((emp - ana).abs() < 0.3, "k={k}: emp {emp} vs ana {ana}");
        }
    }

    #[test]
    fn gaussian_approximation_within_1db_for_mb() {
        let c = make_square_qam(64).unwrap();
        let mb = c.mb_pmf(fit_mb_to_entropy(&c, 4.3).unwrap()).unwrap();
        let spec = WaveformSpec { num_symbols: 400_000, seed: 12, ..WaveformSpec::default() };
        let w = generate(&mb, &spec).unwrap();
        let g = DensityModel::Gaussian { sigma: w.sigma_per_rail };
        for k in [1.5, 2.5, 4.0] {
            let emp = digital_snr_of(&w, k, 8).unwrap();
            let ana = digital_snr_analytic(&g, k, 8, QuantNoiseModel::UniformStep).unwrap();
            assert!((emp - ana).abs() < 1.0, "k={k}: emp {emp} vs gauss {ana}");
        }
    }

    #[test]
    fn near_transparent_chain() {
        let c = make_square_qam(64).unwrap();
        let spec = WaveformSpec {
            num_symbols: 50_000,
            clip_ratio: 8.0,
            dac_bits: 16,
            ..WaveformSpec::default()
        };
        let snr = digital_snr_empirical(&spec, &c).unwrap();
        assert!(snr > 60.0, "snr {snr}");
    }

    #[test]
    fn eq_terms_match_measurements() {
        // Numerator = post-clip rail variance; denominator tail term =
        // clipping-error variance. Checked at 1% on a long waveform.
        let c = make_square_qam(64).unwrap();
        let mb = c.mb_pmf(fit_mb_to_entropy(&c, 4.3).unwrap()).unwrap();
        let spec = WaveformSpec { num_symbols: 1_000_000, seed: 13, ..WaveformSpec::default() };
        let w = generate(&mb, &spec).unwrap();
        let hist = DensityModel::from_waveform(&w).unwrap();
        let k = 2.0;
        let cl = k * w.sigma_per_rail;
        let n = w.samples.len() as f64;
        let clipped = clip(&w, k).unwrap();
        let measured_num: f64 = clipped
            .samples
            .iter()
            .map(|s| (s.re * s.re + s.im * s.im) / 2.0)
            .sum::<f64>()
            / n;
        let measured_clip_noise: f64 = w
            .samples
            .iter()
            .zip(&clipped.samples)
            .map(|(a, b)| ((a.re - b.re).powi(2) + (a.im - b.im).powi(2)) / 2.0)
            .sum::<f64>()
            / n;
        let hi = 8.0 * w.sigma_per_rail;
        let num = cl * cl * hist.integrate(|_| 1.0, cl, hi) + hist.integrate(|x| x * x, 0.0, cl);
        let tail = hist.integrate(|x| (x - cl) * (x - cl), cl, hi);
        assert!((num / measured_num - 1.0).abs() < 0.01, "num {num} vs {measured_num}");
        assert!(
            (tail / measured_clip_noise - 1.0).abs() < 0.01,
            "tail {tail} vs {measured_clip_noise}"
        );
    }

    #[test]
    fn spec_validation() {
        let mut s = WaveformSpec::default();
        s.alpha = 1.5;
        assert!(s.validate().is_err());
        s = WaveformSpec::default();
        s.dac_bits = 2;
        assert!(s.validate().is_err());
        s = WaveformSpec::default();
        s.clip_ratio = 0.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let c = make_square_qam(16).unwrap();
        let spec = WaveformSpec { num_symbols: 1_000, ..WaveformSpec::default() };
        let a = generate(&c, &spec).unwrap();
        let b = generate(&c, &spec).unwrap();
        assert_eq!(a.samples, b.samples);
    }
}
