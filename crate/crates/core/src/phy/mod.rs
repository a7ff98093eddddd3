//! Per-TTI physical layer: single-stream precoding and PMI quantization,
//! interference covariance assembly with tagged contributors, LMMSE-IRC
//! receive filtering, post-combining SIR/SINR evaluation, exponential
//! effective-SINR mapping, a monotone MCS/BLER abstraction, and Chase-combining
//! HARQ bookkeeping.
//!
//! Everything here is a pure function of its inputs; the engine owns all
//! state except `HarqProcess`, which is owned by exactly one cell's MAC
//! context.

mod abstraction;
mod codebook;
mod covariance;
mod harq;

pub use abstraction::{bler, decode_success, eesm, select_mcs, tb_bits, McsEntry, McsTable};
pub use codebook::{make_precoder, quantize_pmi, PmiCodebook};
pub use covariance::{
    irc_filter, irc_filter_from_matrix, post_sinr, CovContrib, CovarianceMode,
    InterfererClass, InterferenceCovariance, SinrInputs, SinrMode,
};
pub use harq::{harq_combine, HarqError, HarqProcess};

use crate::linalg::CVec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PhyError {
    #[error("channel matrix is zero")]
    ZeroChannel,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("mcs table: {0}")]
    McsTable(String),
}

/// A scheduled transmit precoder for one user on one sub-band.
#[derive(Debug, Clone)]
pub struct Precoder {
    pub user: u32,
    pub sub_band: u8,
    pub vector: CVec,
    /// Quantized codebook index, when the precoder was put through a codebook.
    pub pmi_index: Option<u16>,
}

impl Precoder {
    /// Vector must be unit norm within 1e-9.
    pub fn new(user: u32, sub_band: u8, vector: CVec, pmi_index: Option<u16>) -> Self {
        debug_assert!(
            (vector.norm() - 1.0).abs() < 1e-9,
            "precoder must be unit norm"
        );
        Precoder {
            user,
            sub_band,
            vector,
            pmi_index,
        }
    }
}

/// How transmit precoders are exposed to coordination signaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PmiMode {
    /// Signal the exact precoder vector (upper bound on coordination gain).
    Perfect,
    /// Signal a DFT-codebook index with this many bits.
    Quantized(u8),
}

#[cfg(test)]
mod tests;
