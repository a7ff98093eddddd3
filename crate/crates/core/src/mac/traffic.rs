//! Fixed-size packet traffic on independent per-user Poisson processes.

use super::SYMBOL_MS;
use crate::topology::{Direction, UeId};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

/// Per-user traffic description: fixed payload, Poisson arrivals.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrafficSource {
    pub direction: Direction,
    /// Payload per packet, bits.
    pub payload_bits: u32,
    /// Mean arrivals per second per user.
    pub arrival_rate_hz: f64,
}

impl TrafficSource {
    /// Mean arrivals inside a window of `symbols` OFDM symbols.
    pub fn mean_per_window(&self, symbols: u64) -> f64 {
        self.arrival_rate_hz * (symbols as f64 * SYMBOL_MS) / 1000.0
    }
}

/// Offered load per cell per direction: `users x payload x rate`.
pub fn offered_load_bps(users: u32, payload_bits: u32, arrival_rate_hz: f64) -> f64 {
    users as f64 * payload_bits as f64 * arrival_rate_hz
}

/// A packet from arrival to completion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PacketRecord {
    pub id: u64,
    pub direction: Direction,
    pub owner: UeId,
    pub size_bits: u32,
    /// Absolute symbol tick of arrival at the transmitter.
    pub arrival_symbol: u64,
    /// Bits still buffered; the full size until the decode succeeds.
    pub remaining_bits: u32,
    /// Absolute symbol tick of the window that carried the successful decode.
    pub completion_symbol: Option<u64>,
    pub harq_attempts: u32,
    pub failed: bool,
}

impl PacketRecord {
    pub fn new(
        id: u64,
        direction: Direction,
        owner: UeId,
        size_bits: u32,
        arrival_symbol: u64,
    ) -> Self {
        PacketRecord {
            id,
            direction,
            owner,
            size_bits,
            arrival_symbol,
            remaining_bits: size_bits,
            completion_symbol: None,
            harq_attempts: 0,
            failed: false,
        }
    }
}

/// Poisson arrivals for one user over `[window_start, window_start+symbols)`.
/// Each packet lands on a uniform symbol tick inside the window. Ids are
/// assigned from `next_id`, which advances.
pub fn generate_arrivals(
    rng: &mut impl Rng,
    source: &TrafficSource,
    owner: UeId,
    window_start: u64,
    symbols: u64,
    next_id: &mut u64,
) -> Vec<PacketRecord> {
    let mean = source.mean_per_window(symbols);
    if mean <= 0.0 {
        return Vec::new();
    }
    let count = Poisson::new(mean).expect("positive mean").sample(rng) as u64;
    (0..count)
        .map(|_| {
            let offset = rng.random_range(0..symbols);
            let id = *next_id;
            *next_id += 1;
            PacketRecord::new(
                id,
                source.direction,
                owner,
                source.payload_bits,
                window_start + offset,
            )
        })
        .collect()
}
