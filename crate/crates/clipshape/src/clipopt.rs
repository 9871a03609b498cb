//! Clipping-ratio optimizers: back-to-back digital-SNR maximization,
//! end-to-end link-budget maximization, and the PAPR feasible-region table.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::infometrics::MetricConfig;
use crate::linkmodel::{link_budget, tx_power_dbm, LinkScenario};
use crate::waveform::{self, WaveformSpec};

/// Clipping-ratio search grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KGrid {
    pub k_min: f64,
    pub k_max: f64,
    pub k_step: f64,
}

impl Default for KGrid {
    fn default() -> Self {
        KGrid { k_min: 1.0, k_max: 5.0, k_step: 0.1 }
    }
}

impl KGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_min > 0.0 && self.k_step > 0.0 && self.k_max >= self.k_min) {
            return Err(Error::invalid("k grid must satisfy 0 < k_min <= k_max, k_step > 0"));
        }
        if self.values().len() < 5 {
            return Err(Error::invalid("k grid must contain at least 5 points"));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let mut v = Vec::new();
        let mut i = 0usize;
        loop {
            let k = self.k_min + i as f64 * self.k_step;
            if k > self.k_max + 1e-9 {
                break;
            }
            v.push(k);
            i += 1;
        }
        v
    }
}

/// One grid point of an optimization curve; `None` marks an infeasible k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KCurvePoint {
    pub k: f64,
    pub objective_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub k_star: f64,
    pub objective_at_star: f64,
    pub curve: Vec<KCurvePoint>,
}

/// Strict-greater comparison keeps the smallest k on ties.
fn pick_star(curve: &[KCurvePoint]) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for p in curve {
        if let Some(obj) = p.objective_db {
            if best.map_or(true, |(_, b)| obj > b) {
                best = Some((p.k, obj));
            }
        }
    }
    best
}

/// Maximizes the measured back-to-back digital SNR over the k grid. The
/// waveform is generated once and re-clipped per grid point, which is
/// identical to regenerating with the same seed.
pub fn optimize_b2b(c: &Constellation, spec: &WaveformSpec, grid: &KGrid) -> Result<OptResult> {
    grid.validate()?;
    let w = waveform::generate(c, spec)?;
    let curve: Vec<KCurvePoint> = grid
        .values()
        .par_iter()
        .map(|&k| {
            waveform::digital_snr_of(&w, k, spec.dac_bits)
                .map(|snr| KCurvePoint { k, objective_db: Some(snr) })
        })
        .collect::<Result<_>>()?;
    let (k_star, objective_at_star) =
        pick_star(&curve).ok_or_else(|| Error::invalid("empty objective curve"))?;
    Ok(OptResult { k_star, objective_at_star, curve })
}

/// Maximizes the link budget over the k grid. Grid points whose NGMI misses
/// the FEC threshold even at minimum loss are recorded as infeasible; if all
/// are, the no-budget error is surfaced.
pub fn optimize_e2e(
    c: &Constellation,
    spec: &WaveformSpec,
    scen: &LinkScenario,
    grid: &KGrid,
    cfg: &MetricConfig,
) -> Result<OptResult> {
    grid.validate()?;
    scen.validate()?;
    let w = waveform::generate(c, spec)?;
    // (curve point, best NGMI floor seen among infeasible points)
    let evaluated: Vec<(KCurvePoint, Option<f64>)> = grid
        .values()
        .par_iter()
        .map(|&k| -> Result<(KCurvePoint, Option<f64>)> {
            let clipped = waveform::clip(&w, k)?;
            let dig = waveform::digital_snr_of(&w, k, spec.dac_bits)?;
            let tx = tx_power_dbm(&clipped, scen)?;
            match link_budget(c, dig, tx, scen, cfg) {
                Ok(b) => Ok((KCurvePoint { k, objective_db: Some(b) }, None)),
                Err(Error::NoBudget { ngmi, .. }) => {
                    Ok((KCurvePoint { k, objective_db: None }, Some(ngmi)))
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let curve: Vec<KCurvePoint> = evaluated.iter().map(|(p, _)| *p).collect();
    match pick_star(&curve) {
        Some((k_star, objective_at_star)) => Ok(OptResult { k_star, objective_at_star, curve }),
        None => {
            let best_ngmi = evaluated
                .iter()
                .filter_map(|(_, n)| *n)
                .fold(f64::NEG_INFINITY, f64::max);
            Err(Error::NoBudget { ngmi: best_ngmi, threshold: scen.fec_threshold })
        }
    }
}

/// PAPR bounds and family membership at one clipping ratio. The first family
/// member provides the lower bound, the last the upper bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRow {
    pub k: f64,
    pub papr_lower_db: f64,
    pub papr_upper_db: f64,
    /// PAPR of every family member, in family order.
    pub member_paprs_db: Vec<f64>,
}

impl RegionRow {
    /// True when all interior members fall inside the bounds with at least
    /// the given margin (dB).
    pub fn members_inside(&self, margin_db: f64) -> bool {
        let n = self.member_paprs_db.len();
        self.member_paprs_db[1..n - 1].iter().all(|&p| {
            p >= self.papr_lower_db + margin_db && p <= self.papr_upper_db - margin_db
        })
    }
}

/// Per-k PAPR table of a PMF family ordered from the lower (first) to the
/// upper (last) bound. Each constellation's waveform is generated once and
/// re-clipped across the grid.
pub fn feasible_region(
    family: &[Constellation],
    spec: &WaveformSpec,
    grid: &KGrid,
) -> Result<Vec<RegionRow>> {
    grid.validate()?;
    if family.len() < 2 {
        return Err(Error::invalid("region family needs at least the two bounding PMFs"));
    }
    let waveforms: Vec<_> = family
        .iter()
        .map(|c| waveform::generate(c, spec))
        .collect::<Result<_>>()?;
    grid.values()
        .par_iter()
        .map(|&k| {
            let paprs: Vec<f64> = waveforms
                .iter()
                .map(|w| waveform::papr(&waveform::clip(w, k)?))
                .collect::<Result<_>>()?;
            Ok(RegionRow {
                k,
                papr_lower_db: paprs[0],
                papr_upper_db: *paprs.last().unwrap(),
                member_paprs_db: paprs,
            })
        })
        .collect()
}
