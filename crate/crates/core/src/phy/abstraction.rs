//! Link-to-system abstraction: exponential effective-SINR mapping, a monotone
//! MCS table with sigmoid-in-dB block error, and rate selection against a
//! block-error target.

use super::PhyError;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Exponential effective-SINR mapping over linear per-allocation SINRs:
/// `-beta * ln(mean(exp(-g_i / beta)))`.
///
/// Computed with a max-shift so widely spread inputs cannot underflow the
/// mean to zero; a constant input is returned exactly.
pub fn eesm(sinrs: &[f64], beta: f64) -> f64 {
    assert!(!sinrs.is_empty(), "eesm needs at least one value");
    assert!(beta > 0.0, "eesm beta must be positive");
    let first = sinrs[0];
    if sinrs.iter().all(|&g| g == first) {
        return first;
    }
    // a_i = -g_i / beta; eff = -beta * (m + ln mean exp(a_i - m)), m = max a_i.
    let m = sinrs
        .iter()
        .map(|&g| -g / beta)
        .fold(f64::NEG_INFINITY, f64::max);
    let mean: f64 = sinrs
        .iter()
        .map(|&g| (-g / beta - m).exp())
        .sum::<f64>()
        / sinrs.len() as f64;
    -beta * (m + mean.ln())
}

/// One modulation-and-coding option.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McsEntry {
    pub index: usize,
    /// Information bits per resource element.
    pub spectral_efficiency: f64,
    /// SINR at which the block error rate crosses one half.
    pub snr_threshold_db: f64,
    pub eesm_beta: f64,
}

/// Monotone MCS table: higher index means higher efficiency and threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct McsTable {
    entries: Vec<McsEntry>,
}

impl McsTable {
    /// 15 entries from QPSK-1/8 (0.25 b/RE) to 64QAM-5/6 (5.0 b/RE),
    /// thresholds evenly from -6 dB to 20 dB.
    pub fn default_table() -> Self {
        let n = 15usize;
        let entries = (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                McsEntry {
                    index: i,
                    spectral_efficiency: 0.25 + t * (5.0 - 0.25),
                    snr_threshold_db: -6.0 + t * (20.0 - -6.0),
                    eesm_beta: 1.0,
                }
            })
            .collect();
        McsTable { entries }
    }

    pub fn from_entries(entries: Vec<McsEntry>) -> Result<Self, PhyError> {
        if entries.is_empty() {
            return Err(PhyError::McsTable("empty table".into()));
        }
        for (i, e) in entries.iter().enumerate() {
            if e.index != i {
                return Err(PhyError::McsTable(format!(
                    "indices must be dense from 0, got {} at row {}",
                    e.index, i
                )));
            }
            if e.eesm_beta <= 0.0 {
                return Err(PhyError::McsTable(format!("beta must be positive at {i}")));
            }
            if i > 0 {
                let p = &entries[i - 1];
                if e.spectral_efficiency <= p.spectral_efficiency
                    || e.snr_threshold_db <= p.snr_threshold_db
                {
                    return Err(PhyError::McsTable(format!(
                        "efficiency and threshold must strictly increase at index {i}"
                    )));
                }
            }
        }
        Ok(McsTable { entries })
    }

    /// Load from a text file: whitespace-separated rows of
    /// `index efficiency threshold_db beta`, `#` comments allowed.
    pub fn from_file(path: &Path) -> Result<Self, PhyError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PhyError::McsTable(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self, PhyError> {
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = t.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(PhyError::McsTable(format!(
                    "line {}: expected 4 fields, got {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let parse = |s: &str| -> Result<f64, PhyError> {
                s.parse()
                    .map_err(|_| PhyError::McsTable(format!("line {}: bad number {s}", lineno + 1)))
            };
            entries.push(McsEntry {
                index: parse(fields[0])? as usize,
                spectral_efficiency: parse(fields[1])?,
                snr_threshold_db: parse(fields[2])?,
                eesm_beta: parse(fields[3])?,
            });
        }
        Self::from_entries(entries)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# index efficiency threshold_db beta\n");
        for e in &self.entries {
            s.push_str(&format!(
                "{} {} {} {}\n",
                e.index, e.spectral_efficiency, e.snr_threshold_db, e.eesm_beta
            ));
        }
        s
    }

    pub fn entries(&self) -> &[McsEntry] {
        &self.entries
    }

    pub fn get(&self, index: usize) -> &McsEntry {
        &self.entries[index]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Sigmoid-in-dB block error rate around the entry's threshold, slope `k`
/// per dB: one half at the threshold, monotone decreasing in SINR.
pub fn bler(effective_sinr_db: f64, mcs: &McsEntry, k_per_db: f64) -> f64 {
    1.0 / (1.0 + (k_per_db * (effective_sinr_db - mcs.snr_threshold_db)).exp())
}

/// Highest-efficiency entry whose predicted block error meets the target at
/// the given estimate; the lowest entry is the fallback when none qualifies.
pub fn select_mcs<'t>(
    estimated_sinr_db: f64,
    table: &'t McsTable,
    k_per_db: f64,
    target_bler: f64,
) -> &'t McsEntry {
    table
        .entries()
        .iter()
        .rev()
        .find(|e| bler(estimated_sinr_db, e, k_per_db) <= target_bler)
        .unwrap_or(&table.entries()[0])
}

/// Transport-block capacity in whole bits for an allocation of `num_re`
/// resource elements.
pub fn tb_bits(mcs: &McsEntry, num_re: u64) -> u64 {
    (mcs.spectral_efficiency * num_re as f64).floor() as u64
}

/// One Bernoulli decode draw at the given block error probability.
pub fn decode_success(rng: &mut impl Rng, bler: f64) -> bool {
    rng.random::<f64>() >= bler
}
