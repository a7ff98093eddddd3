//! Proportional-fair sub-band allocation with HARQ priority, pre-avoidance
//! gating for the cyclic-RFC baseline, and the allocation event log.

use crate::topology::{Direction, UeId};
use std::collections::HashSet;

/// One user competing for sub-bands in a window.
#[derive(Debug, Clone)]
pub struct PfCandidate {
    pub ue: UeId,
    /// Instantaneous achievable rate per sub-band (any consistent unit).
    pub inst_rate: Vec<f64>,
    /// Smoothed served throughput (same unit); floored internally.
    pub avg_rate: f64,
    /// A pending retransmission pre-empts any new-data metric.
    pub needs_retx: bool,
    /// New data available; a user with neither backlog nor a pending
    /// retransmission is not schedulable.
    pub has_backlog: bool,
}

/// Per-sub-band argmax of `instantaneous rate / average throughput`, with
/// users holding pending retransmissions strictly ahead of new data. Returns
/// one winner (or none) per sub-band; a user may take several sub-bands.
pub fn pf_schedule(candidates: &[PfCandidate], num_subbands: usize) -> Vec<Option<UeId>> {
    let mut out = vec![None; num_subbands];
    for (sb, slot) in out.iter_mut().enumerate() {
        let mut best: Option<(bool, f64, UeId)> = None;
        for c in candidates {
            if !c.needs_retx && !c.has_backlog {
                continue;
            }
            let rate = c.inst_rate.get(sb).copied().unwrap_or(0.0);
            let metric = rate / c.avg_rate.max(1e-9);
            let key = (c.needs_retx, metric, c.ue);
            let better = match &best {
                None => true,
                Some((r, m, ue)) => {
                    // Retransmission class first, then PF metric, then the
                    // lower user id for a stable tie-break.
                    (key.0, key.1) > (*r, *m)
                        || (key.0 == *r && key.1 == *m && key.2 < *ue)
                }
            };
            if better {
                best = Some(key);
            }
        }
        *slot = best.map(|(_, _, ue)| ue);
    }
    out
}

/// Bottom-quartile users by wideband average SINR, but only those genuinely
/// in bad shape (below the quality floor): users a coordinated baseline
/// confines to interference-free static slots. With every user above the
/// floor, nothing is restricted.
pub fn restricted_users(
    users: &[(UeId, f64)],
    quartile: f64,
    quality_floor_db: f64,
) -> HashSet<UeId> {
    let take = (users.len() as f64 * quartile).floor() as usize;
    if take == 0 {
        return HashSet::new();
    }
    let mut sorted: Vec<&(UeId, f64)> = users.iter().collect();
    sorted.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    sorted
        .iter()
        .take(take)
        .filter(|(_, snr)| *snr < quality_floor_db)
        .map(|(ue, _)| *ue)
        .collect()
}

/// Drop restricted users from a candidate set unless the slot is static.
pub fn filter_preavoid(
    candidates: Vec<PfCandidate>,
    slot_is_static: bool,
    restricted: &HashSet<UeId>,
) -> Vec<PfCandidate> {
    if slot_is_static {
        return candidates;
    }
    candidates
        .into_iter()
        .filter(|c| !restricted.contains(&c.ue))
        .collect()
}

/// Buffer-bounded grant refinement. A new-data winner keeps only the
/// sub-bands needed to carry its queued bits (weakest capacity released
/// first); released sub-bands are re-offered, best metric first, to
/// candidates whose queues are not yet covered by their grants. Winners with
/// pending retransmissions are never trimmed and always count as needy.
/// `need_bits` aligns with `candidates`; `re_sb[sb]` is the data-resource
/// count a sub-band grant carries, so `inst_rate[sb] * re_sb[sb]` is the
/// grant's capacity in bits. One winner per sub-band is preserved.
pub fn bound_grants_to_need(
    mut winners: Vec<Option<UeId>>,
    candidates: &[PfCandidate],
    need_bits: &[f64],
    re_sb: &[f64],
) -> Vec<Option<UeId>> {
    let cap = |ci: usize, sb: usize| candidates[ci].inst_rate[sb] * re_sb[sb];

    // Release surplus sub-bands, weakest capacity first; every winner keeps
    // at least one sub-band so its queue still drains.
    let mut released: Vec<usize> = Vec::new();
    for (ci, c) in candidates.iter().enumerate() {
        if c.needs_retx {
            continue;
        }
        let mut held: Vec<usize> = winners
            .iter()
            .enumerate()
            .filter(|(_, w)| **w == Some(c.ue))
            .map(|(sb, _)| sb)
            .collect();
        if held.len() <= 1 {
            continue;
        }
        held.sort_by(|&a, &b| cap(ci, a).partial_cmp(&cap(ci, b)).unwrap().then(a.cmp(&b)));
        let mut total: f64 = held.iter().map(|&sb| cap(ci, sb)).sum();
        let mut kept = held.len();
        for &sb in &held {
            if kept == 1 {
                break;
            }
            if total - cap(ci, sb) >= need_bits[ci] {
                total -= cap(ci, sb);
                kept -= 1;
                winners[sb] = None;
                released.push(sb);
            }
        }
    }
    if released.is_empty() {
        return winners;
    }

    // Residual uncovered need after the trimmed grants; retransmission
    // holders always count as needy (their block must fit somewhere).
    let mut residual: Vec<f64> = candidates
        .iter()
        .enumerate()
        .map(|(ci, c)| {
            if c.needs_retx {
                return f64::INFINITY;
            }
            let granted: f64 = winners
                .iter()
                .enumerate()
                .filter(|(_, w)| **w == Some(c.ue))
                .map(|(sb, _)| cap(ci, sb))
                .sum();
            (need_bits[ci] - granted).max(0.0)
        })
        .collect();

    released.sort_unstable();
    for sb in released {
        let mut best: Option<(bool, f64, UeId, usize)> = None;
        for (ci, c) in candidates.iter().enumerate() {
            if residual[ci] <= 0.0 || (!c.needs_retx && !c.has_backlog) {
                continue;
            }
            let metric = c.inst_rate[sb] / c.avg_rate.max(1e-9);
            let better = match &best {
                None => true,
                Some((r, m, ue, _)) => {
                    (c.needs_retx, metric) > (*r, *m)
                        || (c.needs_retx == *r && metric == *m && c.ue < *ue)
                }
            };
            if better {
                best = Some((c.needs_retx, metric, c.ue, ci));
            }
        }
        if let Some((_, _, ue, ci)) = best {
            winners[sb] = Some(ue);
            residual[ci] = (residual[ci] - cap(ci, sb)).max(0.0);
        }
    }
    winners
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum AllocOutcome {
    /// Transport block decoded on this attempt.
    Decoded,
    /// Decode failed; retransmission pending.
    Pending,
    /// Decode failed on the final attempt; packets dropped.
    Exhausted,
}

/// One line of the allocation/HARQ audit log.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct AllocEvent {
    /// Slot index.
    pub slot: u64,
    /// Absolute symbol tick of the window start.
    pub window_start: u64,
    pub cell: u16,
    pub user: u32,
    pub direction: Direction,
    pub sub_bands: Vec<u8>,
    pub mcs: usize,
    /// False for HARQ retransmissions.
    pub new_data: bool,
    pub outcome: AllocOutcome,
}

impl AllocEvent {
    /// Line-delimited structured form for external audit.
    pub fn to_line(&self) -> String {
        let sbs: Vec<String> = self.sub_bands.iter().map(|s| s.to_string()).collect();
        format!(
            "slot={} window={} cell={} user={} dir={} sb={} mcs={} new={} outcome={:?}",
            self.slot,
            self.window_start,
            self.cell,
            self.user,
            self.direction.as_str(),
            sbs.join(","),
            self.mcs,
            self.new_data,
            self.outcome
        )
    }
}
