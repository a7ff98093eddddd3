//! Chase-combining HARQ: retransmissions accumulate linear SINR and the
//! decode is always retried against the MCS of the initial transmission.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum HarqError {
    #[error("max attempts ({0}) exceeded")]
    MaxAttemptsExceeded(u32),
}

/// Per-packet HARQ state, owned by the serving cell's MAC context.
#[derive(Debug, Clone)]
pub struct HarqProcess {
    pub packet_id: u64,
    /// MCS index of the initial transmission; retransmissions reuse it.
    pub mcs_index: usize,
    pub attempts: u32,
    pub max_attempts: u32,
    /// Accumulated linear SINR over attempts; non-decreasing.
    pub accumulated_sinr: f64,
}

impl HarqProcess {
    pub fn new(packet_id: u64, mcs_index: usize, max_attempts: u32) -> Self {
        HarqProcess {
            packet_id,
            mcs_index,
            attempts: 0,
            max_attempts,
            accumulated_sinr: 0.0,
        }
    }

    pub fn exhausted(&self) -> bool {
        self.attempts >= self.max_attempts
    }
}

/// Record one attempt: Chase combining adds the new attempt's linear SINR to
/// the accumulator. Returns the combined linear SINR to decode against, or an
/// error once the attempt budget is spent (the caller turns that into a
/// packet-failure event exactly once).
pub fn harq_combine(process: &mut HarqProcess, new_sinr: f64) -> Result<f64, HarqError> {
    if process.attempts >= process.max_attempts {
        return Err(HarqError::MaxAttemptsExceeded(process.max_attempts));
    }
    debug_assert!(new_sinr >= 0.0, "linear SINR cannot be negative");
    process.attempts += 1;
    process.accumulated_sinr += new_sinr;
    Ok(process.accumulated_sinr)
}
