//! Simulation toolkit for comparing average-power and peak-power constrained
//! 64QAM under waveform clipping in unamplified coherent links.
//!
//! The crate is organized around the processing chain:
//!
//! * [`constellation`] — QAM point sets, PMFs, Maxwell-Boltzmann families.
//! * [`shaping`] — Blahut-Arimoto PMF optimization over a fixed support.
//! * [`infometrics`] — MI / GMI / NGMI over the discrete-input AWGN channel.
//! * [`waveform`] — RRC pulse shaping, clipping, DAC quantization, PAPR and
//!   the digital-SNR model.
//! * [`linkmodel`] — Tx power, receiver noise, NGMI-vs-loss and link budget.
//! * [`clipopt`] — back-to-back and end-to-end clipping-ratio optimizers.
//! * [`report`] — CSV / JSON / SVG emission for sweep results.

pub mod clipopt;
pub mod constellation;
pub mod error;
pub mod infometrics;
pub mod linkmodel;
pub mod quad;
pub mod report;
pub mod shaping;
pub mod waveform;

pub use error::{Error, Result};
