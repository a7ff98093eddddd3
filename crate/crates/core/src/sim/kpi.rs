//! KPI collection and its serialized form.

use super::config::Scheme;
use super::stats::{outage_latency, quantile};
use crate::topology::Direction;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KpiCounts {
    pub generated_dl: u64,
    pub generated_ul: u64,
    pub decoded_dl: u64,
    pub decoded_ul: u64,
    pub failed_dl: u64,
    pub failed_ul: u64,
    /// Transport-block transmissions, first attempts included.
    pub harq_attempts: u64,
}

impl KpiCounts {
    pub fn generated(&self, dir: Direction) -> u64 {
        match dir {
            Direction::Dl => self.generated_dl,
            Direction::Ul => self.generated_ul,
        }
    }

    pub fn in_flight(&self, dir: Direction) -> u64 {
        match dir {
            Direction::Dl => self.generated_dl - self.decoded_dl - self.failed_dl,
            Direction::Ul => self.generated_ul - self.decoded_ul - self.failed_ul,
        }
    }
}

/// Per-cell inputs to the capacity sum: scheduled (format) symbols, the
/// slot-wise minimum against the buffer-optimal split, and delivered bits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCapacity {
    pub cell: u16,
    pub ul_symbols: u64,
    pub dl_symbols: u64,
    pub min_ul_symbols: u64,
    pub min_dl_symbols: u64,
    pub ul_bits: u64,
    pub dl_bits: u64,
}

impl CellCapacity {
    pub fn add_bits(&mut self, dir: Direction, bits: u64) {
        match dir {
            Direction::Dl => self.dl_bits += bits,
            Direction::Ul => self.ul_bits += bits,
        }
    }
}

/// Terminal record of one packet (kept when per-packet recording is on).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketSample {
    pub direction: Direction,
    pub arrival_symbol: u64,
    pub completion_symbol: Option<u64>,
    pub attempts: u32,
    pub failed: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OutageView {
    pub value_ms: Option<f64>,
    pub insufficient: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct KpiSummary {
    pub dl_outage: OutageView,
    pub ul_outage: OutageView,
    pub median_mu: Option<f64>,
    pub ul_cir_p10_db: Option<f64>,
    pub dl_tput_p10_bits_per_ms: Option<f64>,
    pub ul_tput_p10_bits_per_ms: Option<f64>,
}

/// Everything one run produces. Serialization is canonical: field order is
/// fixed and all samples are finite, so identical runs give identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiStore {
    pub scheme: Scheme,
    pub seed: u64,
    pub config_hash: String,
    pub cells: u32,
    pub slots: u64,
    /// Latencies of delivered packets, ms.
    pub dl_latency_ms: Vec<f64>,
    pub ul_latency_ms: Vec<f64>,
    /// Censoring times of HARQ-failed packets, ms (their rank in outage
    /// statistics is +infinity).
    pub dl_failed_ms: Vec<f64>,
    pub ul_failed_ms: Vec<f64>,
    /// Per delivered packet: payload bits over its latency.
    pub dl_tput_bits_per_ms: Vec<f64>,
    pub ul_tput_bits_per_ms: Vec<f64>,
    /// Post-combining carrier-to-interference per UL transport-block
    /// evaluation, dB, noise excluded, capped at +60 dB.
    pub ul_cir_db: Vec<f64>,
    /// Buffered-traffic ratio, slot-major with `cells` entries per slot.
    pub mu: Vec<f64>,
    /// Accumulated duplexing-mismatch symbols.
    pub chi_ul: u64,
    pub chi_dl: u64,
    /// Map-exchange payload bits consumed.
    pub overhead_bits: u64,
    pub counts: KpiCounts,
    pub capacity: Vec<CellCapacity>,
    /// Optional per-evaluation SINR triples (isolated, cross-free, own),
    /// linear, recorded on UL evaluations when enabled.
    pub nesting: Vec<[f64; 3]>,
    /// Optional terminal per-packet records.
    pub packets: Vec<PacketSample>,
    pub summary: KpiSummary,
}

impl KpiStore {
    pub fn new(scheme: Scheme, seed: u64, config_hash: String, cells: u32, slots: u64) -> Self {
        KpiStore {
            scheme,
            seed,
            config_hash,
            cells,
            slots,
            dl_latency_ms: Vec::new(),
            ul_latency_ms: Vec::new(),
            dl_failed_ms: Vec::new(),
            ul_failed_ms: Vec::new(),
            dl_tput_bits_per_ms: Vec::new(),
            ul_tput_bits_per_ms: Vec::new(),
            ul_cir_db: Vec::new(),
            mu: Vec::new(),
            chi_ul: 0,
            chi_dl: 0,
            overhead_bits: 0,
            counts: KpiCounts::default(),
            capacity: Vec::new(),
            nesting: Vec::new(),
            packets: Vec::new(),
            summary: KpiSummary::default(),
        }
    }

    pub fn latency_samples(&self, dir: Direction) -> (&[f64], usize) {
        match dir {
            Direction::Dl => (&self.dl_latency_ms, self.dl_failed_ms.len()),
            Direction::Ul => (&self.ul_latency_ms, self.ul_failed_ms.len()),
        }
    }

    /// Compute the summary block from the sample arrays.
    pub fn finalize(&mut self, outage_p: f64) {
        let view = |completed: &[f64], failed: usize| {
            let est = outage_latency(completed, failed, outage_p);
            OutageView {
                value_ms: est.value_ms,
                insufficient: est.insufficient,
            }
        };
        self.summary = KpiSummary {
            dl_outage: view(&self.dl_latency_ms, self.dl_failed_ms.len()),
            ul_outage: view(&self.ul_latency_ms, self.ul_failed_ms.len()),
            median_mu: quantile(&self.mu, 0.5),
            ul_cir_p10_db: quantile(&self.ul_cir_db, 0.1),
            dl_tput_p10_bits_per_ms: quantile(&self.dl_tput_bits_per_ms, 0.1),
            ul_tput_p10_bits_per_ms: quantile(&self.ul_tput_bits_per_ms, 0.1),
        };
    }

    /// Achievable-capacity sum: per cell, the mismatch-limited scheduled
    /// symbols times the realized mean throughput per scheduled symbol of
    /// that direction, summed over directions and cells. Bits.
    pub fn capacity_total(&self) -> f64 {
        self.capacity
            .iter()
            .map(|c| {
                let f_ul = if c.ul_symbols > 0 {
                    c.ul_bits as f64 / c.ul_symbols as f64
                } else {
                    0.0
                };
                let f_dl = if c.dl_symbols > 0 {
                    c.dl_bits as f64 / c.dl_symbols as f64
                } else {
                    0.0
                };
                c.min_ul_symbols as f64 * f_ul + c.min_dl_symbols as f64 * f_dl
            })
            .sum()
    }

    /// Packets generated must equal decoded + failed + in-flight, and all
    /// sample arrays must be finite.
    pub fn check_integrity(&self) -> Result<(), String> {
        let c = &self.counts;
        if c.decoded_dl + c.failed_dl > c.generated_dl {
            return Err("DL terminal packets exceed generated".to_string());
        }
        if c.decoded_ul + c.failed_ul > c.generated_ul {
            return Err("UL terminal packets exceed generated".to_string());
        }
        if self.dl_latency_ms.len() as u64 != c.decoded_dl
            || self.ul_latency_ms.len() as u64 != c.decoded_ul
            || self.dl_failed_ms.len() as u64 != c.failed_dl
            || self.ul_failed_ms.len() as u64 != c.failed_ul
        {
            return Err("sample counts disagree with packet counts".to_string());
        }
        let arrays = [
            &self.dl_latency_ms,
            &self.ul_latency_ms,
            &self.dl_failed_ms,
            &self.ul_failed_ms,
            &self.dl_tput_bits_per_ms,
            &self.ul_tput_bits_per_ms,
            &self.ul_cir_db,
            &self.mu,
        ];
        for arr in arrays {
            if arr.iter().any(|v| !v.is_finite()) {
                return Err("non-finite KPI sample".to_string());
            }
        }
        if self.nesting.iter().flatten().any(|v| !v.is_finite()) {
            return Err("non-finite nesting sample".to_string());
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("KPI store serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}
