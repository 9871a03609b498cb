//! Link-budget model: peak-power-referenced transmit power, noise-floor
//! combining with the digital SNR, NGMI-vs-loss curves, the maximum
//! supportable loss at the FEC threshold, and a full-chain Monte-Carlo
//! cross-check.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::infometrics::{self, gmi, ngmi, MetricConfig};
use crate::waveform::{self, DigitalWaveform, WaveformSpec};

/// Fixed link parameters. Power levels are in dBm, losses in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkScenario {
    /// Power emitted when both rails sit at the clip level.
    pub peak_power_dbm: f64,
    /// Receiver-referred noise floor.
    pub noise_floor_dbm: f64,
    pub loss_db_min: f64,
    pub loss_db_max: f64,
    /// NGMI threshold of the outer code.
    pub fec_threshold: f64,
    /// Bits per QAM symbol in the NGMI normalization.
    pub m_bits: usize,
}

impl Default for LinkScenario {
    fn default() -> Self {
        LinkScenario {
            peak_power_dbm: -2.7,
            noise_floor_dbm: -39.0,
            loss_db_min: 0.0,
            loss_db_max: 30.0,
            fec_threshold: 5.0 / 6.0,
            m_bits: 6,
        }
    }
}

impl LinkScenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.loss_db_max > self.loss_db_min) {
            return Err(Error::invalid("loss_db_max must exceed loss_db_min"));
        }
        if !(self.fec_threshold > 0.0 && self.fec_threshold < 1.0) {
            return Err(Error::invalid("fec_threshold must lie in (0, 1)"));
        }
        if self.m_bits == 0 {
            return Err(Error::invalid("m_bits must be >= 1"));
        }
        Ok(())
    }
}

/// Mean transmit power of a clipped waveform: the peak power scaled by the
/// waveform's mean-to-peak ratio, where peak = both rails at the clip level.
pub fn tx_power_dbm(w: &DigitalWaveform, scen: &LinkScenario) -> Result<f64> {
    let c = w
        .clip_level
        .ok_or_else(|| Error::invalid("tx power requires a clipped waveform"))?;
    Ok(scen.peak_power_dbm + 10.0 * (w.mean_power() / (2.0 * c * c)).log10())
}

/// Combines transmitter distortion and receiver noise into one SNR: the
/// inverse-SNR of the digital chain adds to the inverse-SNR of the
/// received-power-over-noise-floor term.
pub fn effective_rx_snr_db(
    digital_snr_db: f64,
    tx_power_dbm: f64,
    loss_db: f64,
    noise_floor_dbm: f64,
) -> f64 {
    let inv_dig = 10f64.powf(-digital_snr_db / 10.0);
    let inv_rx = 10f64.powf(-(tx_power_dbm - loss_db - noise_floor_dbm) / 10.0);
    -10.0 * (inv_dig + inv_rx).log10()
}

/// NGMI of the constellation on AWGN at the given SNR.
pub fn ngmi_at_snr(
    c: &Constellation,
    snr_db: f64,
    m_bits: usize,
    cfg: &MetricConfig,
) -> Result<f64> {
    let nv = c.average_power() / 10f64.powf(snr_db / 10.0);
    let g = gmi(c, nv, cfg)?;
    ngmi(g, c.entropy(), m_bits)
}

/// NGMI across a list of link losses (same transmit conditions throughout).
pub fn ngmi_vs_loss(
    c: &Constellation,
    digital_snr_db: f64,
    tx_dbm: f64,
    scen: &LinkScenario,
    losses: &[f64],
    cfg: &MetricConfig,
) -> Result<Vec<f64>> {
    scen.validate()?;
    losses
        .iter()
        .map(|&l| {
            let snr = effective_rx_snr_db(digital_snr_db, tx_dbm, l, scen.noise_floor_dbm);
            ngmi_at_snr(c, snr, scen.m_bits, cfg)
        })
        .collect()
}

/// Maximum link loss at which the NGMI still meets the FEC threshold,
/// located by bisection (NGMI is non-increasing in loss). Returns
/// `loss_db_max` if the whole range is supportable and `Error::NoBudget`
/// if even `loss_db_min` is not.
pub fn link_budget(
    c: &Constellation,
    digital_snr_db: f64,
    tx_dbm: f64,
    scen: &LinkScenario,
    cfg: &MetricConfig,
) -> Result<f64> {
    scen.validate()?;
    let ngmi_of = |loss: f64| -> Result<f64> {
        let snr = effective_rx_snr_db(digital_snr_db, tx_dbm, loss, scen.noise_floor_dbm);
        ngmi_at_snr(c, snr, scen.m_bits, cfg)
    };
    let thr = scen.fec_threshold;
    if ngmi_of(scen.loss_db_min)? < thr {
        return Err(Error::NoBudget {
            ngmi: ngmi_of(scen.loss_db_min)?,
            threshold: thr,
        });
    }
    if ngmi_of(scen.loss_db_max)? >= thr {
        return Ok(scen.loss_db_max);
    }
    let mut lo = scen.loss_db_min;
    let mut hi = scen.loss_db_max;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let v = ngmi_of(mid)?;
        if (v - thr).abs() <= 1e-4 {
            return Ok(mid);
        }
        if v >= thr {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Full-chain Monte-Carlo NGMI: pulse shaping, clipping, quantization,
/// additive receiver noise, matched filtering, symbol-rate decimation, a
/// least-squares gain and an empirical mismatched-decoder GMI. `rx_snr_db`
/// is the symbol-domain SNR the added noise alone would produce.
pub fn ngmi_e2e_simulated(
    c: &Constellation,
    spec: &WaveformSpec,
    rx_snr_db: f64,
    m_bits: usize,
    noise_seed: u64,
) -> Result<f64> {
    use rand::SeedableRng;
    let w = waveform::generate(c, spec)?;
    let clipped = waveform::clip(&w, spec.clip_ratio)?;
    let q = waveform::quantize(&clipped, spec.dac_bits)?;

    // Unit-energy matched filter: white per-sample noise of complex variance
    // nv lands as symbol-noise variance nv after filtering and decimation.
    let nv = c.average_power() / 10f64.powf(rx_snr_db / 10.0);
    let s_rail = (nv / 2.0).sqrt();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(noise_seed);
    let rx: Vec<Complex64> = q
        .samples
        .iter()
        .map(|s| {
            s + Complex64::new(
                s_rail * crate::infometrics::gaussian(&mut rng),
                s_rail * crate::infometrics::gaussian(&mut rng),
            )
        })
        .collect();

    let taps = waveform::rrc_taps(spec.alpha, spec.span_symbols, spec.sps)?;
    let half = (taps.len() - 1) / 2;
    // Symbol m is centered at sample m*sps + sps of the steady-state frame;
    // after the group delay of the matched filter its estimate sits at
    // m*sps + sps + half in the full convolution output.
    let mf_at = |n: usize| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &h) in taps.iter().enumerate() {
            if n >= j {
                let t = n - j;
                if t < rx.len() {
                    acc += rx[t] * h;
                }
            }
        }
        acc
    };
    let guard = spec.span_symbols + 2;
    if spec.num_symbols <= 2 * guard {
        return Err(Error::invalid("num_symbols too small for the filter span"));
    }
    let mut idx = Vec::with_capacity(spec.num_symbols - 2 * guard);
    let mut ys = Vec::with_capacity(idx.capacity());
    for m in guard..spec.num_symbols - guard {
        idx.push(w.symbol_indices[m]);
        ys.push(mf_at(m * spec.sps + spec.sps + half));
    }

    // Least-squares complex gain against the known symbols, then the
    // residual power sets the decoder's noise variance.
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for (&i, &y) in idx.iter().zip(&ys) {
        let x = c.points()[i as usize];
        num += y * x.conj();
        den += x.norm_sqr();
    }
    let gain = num / den;
    let mut resid = 0.0;
    for (&i, y) in idx.iter().zip(&mut ys) {
        *y /= gain;
        resid += (*y - c.points()[i as usize]).norm_sqr();
    }
    let resid_var = resid / ys.len() as f64;

    let g = infometrics::gmi_from_observations(c, resid_var, &idx, &ys)?;
    ngmi(g, c.entropy(), m_bits)
}
