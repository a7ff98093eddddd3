//! MAC layer for dynamic duplexing: the slot-format codebook and its
//! buffer-driven selection, transmission windows, traffic generation,
//! proportional-fair scheduling with HARQ priority, pre-avoidance gating for
//! the cyclic-RFC baseline, and latency accounting at half-symbol precision.
//!
//! Timing model: 30 kHz subcarrier spacing, uniform 1/28 ms per OFDM symbol,
//! 14-symbol slots, 4-symbol transmission windows. Latency arithmetic runs in
//! integer half-symbols so the 4.5 / 5.5-symbol receive processing delays
//! stay exact.

mod sched;
mod traffic;

pub use sched::{
    bound_grants_to_need, filter_preavoid, pf_schedule, restricted_users, AllocEvent,
    AllocOutcome, PfCandidate,
};
pub use traffic::{generate_arrivals, offered_load_bps, PacketRecord, TrafficSource};

use crate::topology::Direction;
use serde::{Deserialize, Serialize};

pub const SYMBOLS_PER_SLOT: usize = 14;
/// Data symbols per slot (the rest are guard/special).
pub const DATA_SYMBOLS_PER_SLOT: u32 = 10;
/// Milliseconds per OFDM symbol.
pub const SYMBOL_MS: f64 = 1.0 / 28.0;
/// Receive-processing delay after the last symbol, in half-symbols.
pub const PROC_DL_HALF_SYMBOLS: u64 = 9; // 4.5 symbols
pub const PROC_UL_HALF_SYMBOLS: u64 = 11; // 5.5 symbols

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sym {
    D,
    U,
    S,
}

/// A 14-symbol duplexing pattern. Data symbols split 10 D+U with one special
/// symbol guarding every D-to-U switch (wraparound included).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotFormat {
    pub label: &'static str,
    pub pattern: [Sym; 14],
}

impl SlotFormat {
    pub fn count(&self, s: Sym) -> u32 {
        self.pattern.iter().filter(|&&x| x == s).count() as u32
    }

    pub fn dl_symbols(&self) -> u32 {
        self.count(Sym::D)
    }

    pub fn ul_symbols(&self) -> u32 {
        self.count(Sym::U)
    }

    /// DL share of the data symbols.
    pub fn dl_fraction(&self) -> f64 {
        self.dl_symbols() as f64 / (self.dl_symbols() + self.ul_symbols()) as f64
    }

    /// Every D-to-U transition (cyclically) must pass through at least one S.
    pub fn guards_every_switch(&self) -> bool {
        for i in 0..SYMBOLS_PER_SLOT {
            let next = self.pattern[(i + 1) % SYMBOLS_PER_SLOT];
            if self.pattern[i] == Sym::D && next == Sym::U {
                return false;
            }
        }
        true
    }
}

use Sym::{D, S, U};

/// The five-format codebook, DL:UL data-symbol ratios 4:1 down to 1:4, with
/// D and U runs interleaved evenly across the slot.
pub fn rfc_codebook() -> Vec<SlotFormat> {
    vec![
        SlotFormat { label: "4:1", pattern: [D, D, D, D, S, U, S, D, D, D, D, S, U, S] },
        SlotFormat { label: "3:2", pattern: [D, D, D, D, S, U, U, S, D, D, S, U, U, S] },
        SlotFormat { label: "1:1", pattern: [D, D, D, S, U, U, U, S, D, D, S, U, U, S] },
        SlotFormat { label: "2:3", pattern: [D, D, S, U, U, U, S, D, D, S, U, U, U, S] },
        SlotFormat { label: "1:4", pattern: [D, S, U, U, U, U, S, D, S, U, U, U, U, S] },
    ]
}

/// Index of the codebook format used in interference-free static slots:
/// the balanced 1:1 pattern, identical at every BS.
pub const STATIC_FORMAT_INDEX: usize = 2;

/// Static (coordinated, interference-free) slots for the cyclic-RFC
/// baselines: two per ten-slot period.
pub fn is_static_slot(slot_index: u64) -> bool {
    slot_index % 5 == 0
}

/// Buffered-traffic ratio `Z_dl / (Z_dl + Z_ul)`; one half when both
/// buffers are empty.
pub fn buffered_ratio(z_dl: u64, z_ul: u64) -> f64 {
    if z_dl == 0 && z_ul == 0 {
        return 0.5;
    }
    z_dl as f64 / (z_dl + z_ul) as f64
}

/// Format whose DL fraction sits closest to the buffered ratio; ties resolve
/// toward the smaller DL fraction (more UL capacity).
pub fn select_slot_format(mu: f64, codebook: &[SlotFormat]) -> usize {
    assert!(!codebook.is_empty());
    let mut best = 0usize;
    let mut best_key = (f64::INFINITY, f64::INFINITY);
    for (i, f) in codebook.iter().enumerate() {
        let frac = f.dl_fraction();
        let key = ((frac - mu).abs(), frac);
        if key < best_key {
            best_key = key;
            best = i;
        }
    }
    best
}

/// The real-valued optimal split of the data symbols for a buffered ratio,
/// rounded: `d_opt = round(10 mu)`, `u_opt = 10 - d_opt`.
pub fn optimal_split(mu: f64) -> (u32, u32) {
    let d = (DATA_SYMBOLS_PER_SLOT as f64 * mu).round() as u32;
    let d = d.min(DATA_SYMBOLS_PER_SLOT);
    (d, DATA_SYMBOLS_PER_SLOT - d)
}

/// Quantization mismatch `(chi_ul, chi_dl) = (|u_c - u_opt|, |d_c - d_opt|)`.
pub fn symbol_mismatch(selected: (u32, u32), optimal: (u32, u32)) -> (u32, u32) {
    let (d_c, u_c) = selected;
    let (d_opt, u_opt) = optimal;
    (u_c.abs_diff(u_opt), d_c.abs_diff(d_opt))
}

/// One same-direction transmission window within a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TxWindow {
    pub direction: Direction,
    /// Symbol offset within the slot.
    pub start: usize,
    pub len: usize,
}

impl TxWindow {
    pub fn end(&self) -> usize {
        self.start + self.len
    }
}

/// Maximal same-direction symbol runs, chopped into windows of at most
/// `tti_symbols` symbols, in slot order.
pub fn transmission_windows(format: &SlotFormat, tti_symbols: usize) -> Vec<TxWindow> {
    assert!(tti_symbols >= 1);
    let mut out = Vec::new();
    let mut i = 0usize;
    while i < SYMBOLS_PER_SLOT {
        let dir = match format.pattern[i] {
            Sym::D => Some(Direction::Dl),
            Sym::U => Some(Direction::Ul),
            Sym::S => None,
        };
        let Some(direction) = dir else {
            i += 1;
            continue;
        };
        let mut j = i;
        while j < SYMBOLS_PER_SLOT && format.pattern[j] == format.pattern[i] {
            j += 1;
        }
        let mut start = i;
        while start < j {
            let len = (j - start).min(tti_symbols);
            out.push(TxWindow { direction, start, len });
            start += len;
        }
        i = j;
    }
    out
}

/// Latency from packet arrival to successful decode, in milliseconds:
/// the transmission window's last symbol plus the direction's receive
/// processing delay, minus the arrival instant. All inputs are absolute
/// symbol ticks; the arithmetic runs in half-symbols and stays exact.
pub fn account_latency(
    arrival_symbol: u64,
    window_end_symbol: u64,
    direction: Direction,
) -> f64 {
    debug_assert!(window_end_symbol >= arrival_symbol);
    let proc = match direction {
        Direction::Dl => PROC_DL_HALF_SYMBOLS,
        Direction::Ul => PROC_UL_HALF_SYMBOLS,
    };
    let half = 2 * window_end_symbol + proc - 2 * arrival_symbol;
    half as f64 * (SYMBOL_MS / 2.0)
}
