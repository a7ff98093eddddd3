//! Cross-link-interference coordination between base stations.
//!
//! Aggressor BSs publish a compact per-slot map of the DL sub-band precoders
//! they are about to use. A victim BS in UL combines each map with its own
//! BS-to-BS channel estimate (available through duplex reciprocity, since
//! sites do not move), ranks the implied interference vectors, spans the
//! strongest ones with an orthogonal basis, and conditions its interference
//! covariance so the LMMSE-IRC receive filter suppresses the cross-link
//! subspace.
//!
//! The victim's inputs are exactly the received maps plus its own channel
//! estimates; true aggressor precoders never cross the interface (except in
//! the ideal-oracle conditioning mode, which exists for evaluation only).

mod wire;

pub use wire::{decode_map, encode_map, WireError};

use crate::linalg::{
    build_projector, gram_schmidt, line_project, CMat, CVec, LinalgError,
};
use crate::phy::{InterfererClass, InterferenceCovariance, PmiCodebook};
use crate::topology::{CellId, ClusterLayout};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CsaError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("duplicate sub-band {sub_band} for slot {slot_id} in map")]
    DuplicateEntry { slot_id: u8, sub_band: u8 },
}

/// Precoder knowledge carried per map entry: a codebook index on the wire, or
/// the exact vector in the perfect-knowledge upper bound (not encodable).
#[derive(Debug, Clone, PartialEq)]
pub enum PmiValue {
    Index(u16),
    Exact(CVec),
}

/// One signaled entry: the sub-band precoder the sender will apply during
/// `slot_id` of the upcoming radio-frame-configuration period.
#[derive(Debug, Clone, PartialEq)]
pub struct MapEntry {
    pub slot_id: u8,
    pub sub_band: u8,
    pub pmi: PmiValue,
}

/// The per-sender precoder map, published at a slot boundary and consumed by
/// victims during the slots it covers.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderMap {
    pub sender: CellId,
    pub tti: u32,
    pub entries: Vec<MapEntry>,
}

impl PrecoderMap {
    pub fn lookup(&self, slot_id: u8, sub_band: u8) -> Option<&PmiValue> {
        self.entries
            .iter()
            .find(|e| e.slot_id == slot_id && e.sub_band == sub_band)
            .map(|e| &e.pmi)
    }
}

/// Assemble a map from the sender's decided schedule. Entries are sorted by
/// (slot, sub-band) so identical schedules give identical maps; duplicate
/// (slot, sub-band) pairs are rejected.
pub fn build_precoder_map(
    sender: CellId,
    tti: u32,
    scheduled: Vec<MapEntry>,
) -> Result<PrecoderMap, CsaError> {
    let mut entries = scheduled;
    entries.sort_by_key(|e| (e.slot_id, e.sub_band));
    for w in entries.windows(2) {
        if w[0].slot_id == w[1].slot_id && w[0].sub_band == w[1].sub_band {
            return Err(CsaError::DuplicateEntry {
                slot_id: w[0].slot_id,
                sub_band: w[0].sub_band,
            });
        }
    }
    Ok(PrecoderMap {
        sender,
        tti,
        entries,
    })
}

/// Signaling cost of the map exchange in bits per radio-frame-configuration
/// period: `cli_slots x num_subbands x (log2(num_subbands) + pmi_bits)` with
/// `num_subbands = prbs / subband_prbs`, truncated to whole bits.
///
/// The sub-band count is kept as an exact real (50 PRB at 8 PRB per sub-band
/// is 6.25), which reproduces the reference budget of 124 bits per period.
pub fn signaling_overhead(prbs: u32, subband_prbs: u32, pmi_bits: u32, cli_slots: u32) -> u64 {
    assert!(prbs > 0 && subband_prbs > 0 && pmi_bits > 0);
    if cli_slots == 0 {
        return 0;
    }
    let subbands = prbs as f64 / subband_prbs as f64;
    let per_slot = subbands * (subbands.log2() + pmi_bits as f64);
    (cli_slots as f64 * per_slot).floor() as u64
}

/// Payload bits of a concrete map under the wire format's per-entry
/// accounting: `entries x (ceil(log2 num_subbands) + pmi_bits)`. Headers and
/// slot ids are excluded, matching the overhead formula's accounting.
pub fn map_payload_bits(map: &PrecoderMap, num_subbands: usize, pmi_bits: u8) -> u64 {
    let sb_bits = wire::subband_bits(num_subbands);
    map.entries.len() as u64 * (sb_bits as u64 + pmi_bits as u64)
}

/// BSs a victim coordinates with: everything within `radius_factor` times the
/// inter-site distance (the victim itself excluded).
pub fn coordination_set(
    layout: &ClusterLayout,
    victim: CellId,
    radius_factor: f64,
) -> Vec<CellId> {
    let vp = layout.bs_pos[victim.0 as usize];
    let radius = radius_factor * layout.isd_m;
    (0..layout.bs_pos.len())
        .filter(|&i| i != victim.0 as usize)
        .filter(|&i| {
            let p = layout.bs_pos[i];
            ((p[0] - vp[0]).powi(2) + (p[1] - vp[1]).powi(2)).sqrt() <= radius + 1e-9
        })
        .map(|i| CellId(i as u16))
        .collect()
}

/// One ranked cross-link interferer as seen by a victim.
#[derive(Debug, Clone)]
pub struct AggressorEstimate {
    pub victim: CellId,
    pub sub_band: u8,
    pub aggressor: CellId,
    /// Implied interference vector at the victim array: channel times the
    /// signaled precoder, amplitude included.
    pub vector: CVec,
    /// `strength = ||vector||^2`.
    pub strength: f64,
}

impl AggressorEstimate {
    pub fn new(victim: CellId, sub_band: u8, aggressor: CellId, vector: CVec) -> Self {
        let strength = vector.norm_sq();
        AggressorEstimate {
            victim,
            sub_band,
            aggressor,
            vector,
            strength,
        }
    }
}

/// Rank the cross-link aggressors for one victim sub-band from received maps
/// and the victim's own BS-to-BS channel estimates.
///
/// `channel_to_victim` returns the amplitude-scaled aggressor-to-victim
/// matrix (receive antennas x aggressor transmit antennas). Returns up to
/// `max_interferers` estimates, strongest first; equal strengths order by
/// lower aggressor id. An empty result means passthrough conditioning.
pub fn identify_interferers(
    victim: CellId,
    slot_id: u8,
    sub_band: u8,
    maps: &[PrecoderMap],
    codebook: &PmiCodebook,
    mut channel_to_victim: impl FnMut(CellId) -> CMat,
    max_interferers: usize,
) -> Vec<AggressorEstimate> {
    let mut out: Vec<AggressorEstimate> = Vec::new();
    for map in maps {
        if map.sender == victim {
            continue;
        }
        let Some(pmi) = map.lookup(slot_id, sub_band) else {
            continue;
        };
        let v_hat = match pmi {
            PmiValue::Index(i) => codebook.entry(*i as usize).clone(),
            PmiValue::Exact(v) => v.clone(),
        };
        let q = channel_to_victim(map.sender);
        debug_assert_eq!(q.cols(), v_hat.dim(), "codebook ports vs channel columns");
        let vector = q.mul_vec(&v_hat);
        out.push(AggressorEstimate::new(victim, sub_band, map.sender, vector));
    }
    out.sort_by(|a, b| {
        b.strength
            .partial_cmp(&a.strength)
            .unwrap()
            .then(a.aggressor.0.cmp(&b.aggressor.0))
    });
    out.truncate(max_interferers);
    out
}

/// Orthogonal machinery for one victim sub-band: the orthogonalized basis of
/// the estimated cross-link vectors and the projector onto their span.
#[derive(Debug, Clone)]
pub struct ProjectorState {
    pub victim: CellId,
    pub sub_band: u8,
    /// Columns: orthogonal basis of the estimated cross-link span.
    pub basis: CMat,
    /// Orthogonal projector onto the span; idempotent and Hermitian.
    pub projector: CMat,
    /// Absolute slot index the underlying estimates were made for.
    pub valid_slot: u64,
}

impl ProjectorState {
    /// `I - projector`: the map onto the interference-free complement.
    pub fn complement(&self) -> CMat {
        let n = self.projector.rows();
        let mut c = CMat::identity(n);
        c = c.sub(&self.projector);
        c
    }
}

/// Build the cross-link basis and projector from ranked estimates.
/// Dependent estimate vectors are dropped by the orthogonalization; every
/// surviving input stays inside the span (`||P J - J|| <= 1e-8 ||J||`).
pub fn build_cli_projector(
    estimates: &[AggressorEstimate],
    valid_slot: u64,
) -> Result<ProjectorState, LinalgError> {
    let first = estimates.first().ok_or(LinalgError::EmptyBasis)?;
    let dim = first.vector.dim();
    let vectors: Vec<CVec> = estimates.iter().map(|e| e.vector.clone()).collect();
    let gs = gram_schmidt(&vectors)?;
    let projector = build_projector(&gs.basis)?;
    #[cfg(debug_assertions)]
    for (i, v) in vectors.iter().enumerate() {
        if gs.dropped.contains(&i) {
            continue;
        }
        let pv = projector.mul_vec(v);
        let resid = pv.sub(v).norm();
        debug_assert!(
            resid <= 1e-8 * v.norm().max(f64::MIN_POSITIVE),
            "estimate {i} escapes its own span: residual {resid:e}"
        );
    }
    let mut basis = CMat::zeros(dim, gs.basis.len());
    for (j, b) in gs.basis.vectors().iter().enumerate() {
        for i in 0..dim {
            basis[(i, j)] = b[i];
        }
    }
    Ok(ProjectorState {
        victim: first.victim,
        sub_band: first.sub_band,
        basis,
        projector,
        valid_slot,
    })
}

/// How the interference covariance is conditioned against the cross-link span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditioningMode {
    /// Column-wise projection of the covariance onto the corresponding
    /// projector columns, kept for fidelity experiments. Retains cross-link
    /// content by construction.
    LiteralColumns,
    /// Default: sandwich the covariance with the span complement and floor
    /// with noise, `(I-P) R (I-P)^H + sigma^2 I`. Removes the cross-link
    /// span and keeps the result positive definite.
    Complement,
    /// Evaluation-only oracle: rebuild from the contributor list with every
    /// cross-link contributor deleted. Uses ground truth a real victim never
    /// has.
    IdealOracle,
}

/// A conditioned covariance: the assembled matrix plus the mode that made it.
#[derive(Debug, Clone)]
pub struct ConditionedCovariance {
    pub matrix: CMat,
    pub mode: ConditioningMode,
}

/// Condition the victim's interference covariance against the cross-link
/// projector. The complement mode's output already contains the noise floor;
/// pass zero extra noise to the receive-filter solve downstream.
pub fn condition_covariance(
    r: &InterferenceCovariance,
    proj: &ProjectorState,
    mode: ConditioningMode,
    noise_power: f64,
) -> Result<ConditionedCovariance, CsaError> {
    let n = r.dim();
    if proj.projector.rows() != n {
        return Err(CsaError::DimensionMismatch(format!(
            "projector {}x{} vs covariance dim {}",
            proj.projector.rows(),
            proj.projector.cols(),
            n
        )));
    }
    let matrix = match mode {
        ConditioningMode::LiteralColumns => {
            let rm = r.matrix();
            let mut out = CMat::zeros(n, n);
            for col in 0..n {
                let r_col = rm.col(col);
                let axis = proj.projector.col(col);
                // A zero projector column carries no span direction; the
                // projected column is zero.
                if let Ok(p) = line_project(&r_col, &axis) {
                    for row in 0..n {
                        out[(row, col)] = p[row];
                    }
                }
            }
            out
        }
        ConditioningMode::Complement => {
            let comp = proj.complement();
            let mut out = comp.mul(&r.matrix()).mul(&comp.hermitian());
            out.add_scaled_identity(noise_power);
            out
        }
        ConditioningMode::IdealOracle => {
            let mut out = r
                .retain(|c| c.class != InterfererClass::CrossLink)
                .matrix();
            out.add_scaled_identity(noise_power);
            out
        }
    };
    Ok(ConditionedCovariance { matrix, mode })
}
