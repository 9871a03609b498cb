//! QAM constellations, probability mass functions and Maxwell-Boltzmann
//! shaping families.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PMF_SUM_TOL: f64 = 1e-12;

/// A discrete channel-input alphabet: complex points, a PMF over them, and
/// optional per-point bit labels (required for GMI).
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
    pmf: Vec<f64>,
    labels: Option<Vec<String>>,
}

/// Maxwell-Boltzmann shaping exponent, `p(x) ~ exp(-nu |x|^2)`.
/// `nu = 0` reproduces the uniform PMF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MbParam {
    pub nu: f64,
}

impl MbParam {
    pub fn new(nu: f64) -> Result<Self> {
        if !(nu >= 0.0) {
            return Err(Error::invalid(format!("nu must be >= 0, got {nu}")));
        }
        Ok(MbParam { nu })
    }
}

#[derive(Serialize, Deserialize)]
struct ConstellationData {
    points: Vec<[f64; 2]>,
    pmf: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl Serialize for Constellation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ConstellationData {
            points: self.points.iter().map(|p| [p.re, p.im]).collect(),
            pmf: self.pmf.clone(),
            labels: self.labels.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Constellation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let data = ConstellationData::deserialize(d)?;
        Constellation::new(
            data.points.iter().map(|p| Complex64::new(p[0], p[1])).collect(),
            data.pmf,
            data.labels,
        )
        .map_err(serde::de::Error::custom)
    }
}

fn contains_point(points: &[Complex64], q: Complex64) -> bool {
    let scale = points.iter().map(|p| p.norm()).fold(0.0, f64::max).max(1.0);
    points.iter().any(|p| (p - q).norm() <= 1e-9 * scale)
}

impl Constellation {
    /// Builds a constellation, validating all structural invariants.
    pub fn new(
        points: Vec<Complex64>,
        pmf: Vec<f64>,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("constellation must have at least one point"));
        }
        if points.len() != pmf.len() {
            return Err(Error::invalid("points and pmf length mismatch"));
        }
        if pmf.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::invalid("pmf entries must be >= 0"));
        }
        let sum: f64 = pmf.iter().sum();
        if (sum - 1.0).abs() > PMF_SUM_TOL {
            return Err(Error::invalid(format!("pmf must sum to 1, got {sum}")));
        }
        let scale = points.iter().map(|p| p.norm()).fold(0.0, f64::max).max(1.0);
        for (i, a) in points.iter().enumerate() {
            for b in points.iter().skip(i + 1) {
                if (a - b).norm() <= 1e-9 * scale {
                    return Err(Error::invalid("points must be pairwise distinct"));
                }
            }
        }
        for &p in &points {
            if !contains_point(&points, Complex64::new(-p.re, p.im))
                || !contains_point(&points, Complex64::new(p.re, -p.im))
            {
                return Err(Error::invalid(
                    "point set must be symmetric under rail negation",
                ));
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != points.len() {
                return Err(Error::invalid("labels and points length mismatch"));
            }
            let mut sorted = labels.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != labels.len() {
                return Err(Error::invalid("labels must be pairwise distinct"));
            }
        }
        Ok(Constellation { points, pmf, labels })
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Bits per label (`ceil(log2(point count))`), if labels are present.
    pub fn bits_per_symbol(&self) -> Option<usize> {
        self.labels.as_ref().map(|l| l[0].len())
    }

    /// Same support and labels with a replacement PMF.
    pub fn with_pmf(&self, pmf: Vec<f64>) -> Result<Self> {
        Constellation::new(self.points.clone(), pmf, self.labels.clone())
    }

    /// Source entropy in bits per symbol, with `0 log 0 := 0`.
    pub fn entropy(&self) -> f64 {
        -self
            .pmf
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.log2())
            .sum::<f64>()
    }

    /// `sum_i p_i |x_i|^2`.
    pub fn average_power(&self) -> f64 {
        self.points
            .iter()
            .zip(&self.pmf)
            .map(|(x, &p)| p * x.norm_sqr())
            .sum()
    }

    /// `max |x_i|^2` over the support (points with `p_i > 0`).
    pub fn peak_power(&self) -> f64 {
        self.points
            .iter()
            .zip(&self.pmf)
            .filter(|(_, &p)| p > 0.0)
            .map(|(x, _)| x.norm_sqr())
            .fold(0.0, f64::max)
    }

    /// Maxwell-Boltzmann PMF `p_i ~ exp(-nu |x_i|^2)` on this support.
    pub fn mb_pmf(&self, param: MbParam) -> Result<Self> {
        let energies: Vec<f64> = self.points.iter().map(|x| x.norm_sqr()).collect();
        let emin = energies.iter().cloned().fold(f64::INFINITY, f64::min);
        let weights: Vec<f64> = energies
            .iter()
            .map(|&e| (-param.nu * (e - emin)).exp())
            .collect();
        let z: f64 = weights.iter().sum();
        self.with_pmf(weights.iter().map(|w| w / z).collect())
    }
}

fn gray_bits(index: usize, bits: usize) -> String {
    let g = index ^ (index >> 1);
    (0..bits)
        .rev()
        .map(|b| if (g >> b) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Square QAM on the odd-integer grid `{+-1, +-3, ...}^2` with a uniform PMF
/// and per-rail Gray labels.
pub fn make_square_qam(order: usize) -> Result<Constellation> {
    if ![4, 16, 64].contains(&order) {
        return Err(Error::invalid(format!(
            "unsupported QAM order {order} (expected 4, 16 or 64)"
        )));
    }
    let side = (order as f64).sqrt() as usize;
    let rail_bits = side.trailing_zeros() as usize;
    let mut points = Vec::with_capacity(order);
    let mut labels = Vec::with_capacity(order);
    for i in 0..side {
        for q in 0..side {
            let re = 2.0 * i as f64 - (side as f64 - 1.0);
            let im = 2.0 * q as f64 - (side as f64 - 1.0);
            points.push(Complex64::new(re, im));
            labels.push(format!("{}{}", gray_bits(i, rail_bits), gray_bits(q, rail_bits)));
        }
    }
    let pmf = vec![1.0 / order as f64; order];
    Constellation::new(points, pmf, Some(labels))
}

/// The 64QAM grid with its 4 corner points removed (60 points), rescaled so
/// the largest point amplitude equals `peak_match`, with a uniform PMF.
/// Labels are inherited from 64QAM on the surviving points.
pub fn make_60qam(peak_match: f64) -> Result<Constellation> {
    if !(peak_match > 0.0) {
        return Err(Error::invalid("peak_match must be > 0"));
    }
    let qam64 = make_square_qam(64)?;
    let labels64 = qam64.labels().unwrap();
    let mut points = Vec::with_capacity(60);
    let mut labels = Vec::with_capacity(60);
    for (x, l) in qam64.points().iter().zip(labels64) {
        if x.re.abs() > 6.9 && x.im.abs() > 6.9 {
            continue; // corner
        }
        points.push(*x);
        labels.push(l.clone());
    }
    let max_amp = points.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let scale = peak_match / max_amp;
    let points = points.into_iter().map(|p| p * scale).collect();
    let pmf = vec![1.0 / 60.0; 60];
    Constellation::new(points, pmf, Some(labels))
}

/// Solves `entropy(mb_pmf(c, nu)) = target_h` by bisection, using the strict
/// monotone decrease of the entropy in `nu`. Tolerance 1e-9 bits.
pub fn fit_mb_to_entropy(c: &Constellation, target_h: f64) -> Result<MbParam> {
    let n = c.len() as f64;
    let energies: Vec<f64> = c.points().iter().map(|x| x.norm_sqr()).collect();
    let emin = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let min_ring = energies.iter().filter(|&&e| (e - emin).abs() <= 1e-9 * emin.max(1.0)).count();
    let h_floor = (min_ring as f64).log2();
    if !(target_h > h_floor && target_h <= n.log2() + 1e-12) {
        return Err(Error::domain(format!(
            "target entropy {target_h} outside achievable range ({h_floor}, {}]",
            n.log2()
        )));
    }
    let h_at = |nu: f64| -> f64 { c.mb_pmf(MbParam { nu }).unwrap().entropy() };
    if (h_at(0.0) - target_h).abs() <= 1e-9 {
        return Ok(MbParam { nu: 0.0 });
    }
    let mut lo = 0.0f64;
    let mut hi = 10.0f64;
    while h_at(hi) > target_h {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::domain("entropy target unreachable within bracket"));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let h = h_at(mid);
        if (h - target_h).abs() <= 1e-10 {
            return Ok(MbParam { nu: mid });
        }
        if h > target_h {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let nu = 0.5 * (lo + hi);
    if (h_at(nu) - target_h).abs() > 1e-9 {
        return Err(Error::domain("entropy bisection failed to converge"));
    }
    Ok(MbParam { nu })
}
