//! The slot-driven system simulator. Ties the drop, the keyed channel, the
//! PHY abstraction, the duplexing MAC, and the coordination machinery into
//! one deterministic loop and produces a KPI store.
//!
//! Each slot runs six phases in a fixed order: traffic arrivals, buffer
//! accounting and slot-format selection, per-cell scheduling, coordination
//! (precoder maps and cross-link projectors, coordinated scheme only),
//! window-by-window link evaluation, and the proportional-fair average
//! update. Cells schedule independently; coupling happens only through the
//! interference entering the evaluation phase.
//!
//! Interference model: a sub-band winner is treated as transmitting on every
//! matching data symbol of its slot. A cell whose queue drains mid-slot
//! still radiates for the remaining windows under this approximation; the
//! alternative (activity-exact interference) would make results depend on
//! the order cells are evaluated in.

use std::collections::{HashMap, VecDeque};

use rand_chacha::ChaCha8Rng;

use crate::csa::{
    build_cli_projector, build_precoder_map, condition_covariance, coordination_set,
    identify_interferers, map_payload_bits, AggressorEstimate, ConditioningMode, MapEntry,
    PmiValue, PrecoderMap, ProjectorState,
};
use crate::linalg::{CMat, CVec, C64};
use crate::mac::{
    account_latency, bound_grants_to_need, buffered_ratio, filter_preavoid, generate_arrivals,
    is_static_slot, optimal_split, pf_schedule, restricted_users, rfc_codebook, select_slot_format,
    symbol_mismatch, transmission_windows, AllocEvent, AllocOutcome, PfCandidate, SlotFormat, Sym,
    TxWindow, STATIC_FORMAT_INDEX, SYMBOLS_PER_SLOT,
};
use crate::phy::{
    bler, decode_success, eesm, harq_combine, irc_filter, irc_filter_from_matrix, make_precoder,
    post_sinr, quantize_pmi, select_mcs, tb_bits, CovContrib, HarqProcess, InterfererClass,
    InterferenceCovariance, McsTable, PmiCodebook, PmiMode, SinrInputs, SinrMode,
};
use crate::rngkey::{stream, Domain};
use crate::topology::{
    build_cluster_with, dbm_to_mw, ul_tx_power, CellId, ChannelModel, ClusterLayout, Direction,
    DropParams, Node, UeId, UeNode,
};

use super::config::{ConfigError, Scheme, SimConfig};
use super::kpi::{CellCapacity, KpiStore, PacketSample};

use crate::mac::{PacketRecord, TrafficSource};

/// Smoothing constant of the proportional-fair rate average, per slot
/// (equivalent averaging window: 100 slots = 50 ms).
const PF_ALPHA: f64 = 0.01;

/// Interference-free carrier-to-interference samples are capped here (dB).
const CIR_CAP_DB: f64 = 60.0;

/// Failure step of the outer-loop link-adaptation margin, dB per decode
/// failure; the success step is scaled so the loop's fixed point sits at
/// the configured BLER target.
const OLLA_STEP_DB: f64 = 0.5;

/// Run one simulation to completion.
pub fn run(config: &SimConfig) -> Result<KpiStore, ConfigError> {
    config.validate()?;
    let mut sim = Sim::new(config.clone());
    let total = config.total_slots();
    for slot in 0..total {
        sim.step(slot);
    }
    Ok(sim.finish())
}

/// Entry-wise scalar multiple of a matrix.
fn scale_mat(m: &CMat, s: f64) -> CMat {
    let mut out = CMat::zeros(m.rows(), m.cols());
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            out[(i, j)] = m[(i, j)] * s;
        }
    }
    out
}

fn sqrt_c(p: f64) -> C64 {
    C64::new(p.sqrt(), 0.0)
}

/// Rank-one transmit vector for a channel: its dominant right singular
/// direction, with the first canonical basis vector as the degenerate
/// fallback (an exactly zero channel draw has measure zero).
fn precoder_for(h: &CMat) -> CVec {
    make_precoder(h).unwrap_or_else(|_| {
        let mut e = vec![0.0; h.cols()];
        e[0] = 1.0;
        CVec::from_real(&e)
    })
}

/// Per-slot fading draws are pure functions of their keys; the cache only
/// avoids recomputing them within the slot and never changes results.
struct ChanCache(HashMap<(u64, u64, u8, u64), CMat>);

impl ChanCache {
    fn new() -> Self {
        ChanCache(HashMap::new())
    }

    fn get(&mut self, chan: &ChannelModel, tx: Node, rx: Node, tti: u64, sub_band: u8) -> CMat {
        self.0
            .entry((tx.key(), rx.key(), sub_band, tti))
            .or_insert_with(|| chan.channel(tx, rx, tti, sub_band))
            .clone()
    }
}

/// A packet plus how many of its bits sit in in-flight transport blocks.
struct Pkt {
    rec: PacketRecord,
    assigned: u32,
}

/// One in-flight transport block: its HARQ process, the allocation size it
/// was built for (retransmissions need at least as much), and the packet
/// segments it carries.
struct TbState {
    harq: HarqProcess,
    re_total: u64,
    bits: u64,
    packets: Vec<(u64, u32)>,
    next_tx: u64,
}

/// Per-UE mutable state: traffic stream, queue, in-flight blocks, scheduler
/// bookkeeping, and the static radio quantities derived at setup.
struct UserState {
    node: UeNode,
    source: TrafficSource,
    arrival_rng: ChaCha8Rng,
    queue: VecDeque<u64>,
    /// Ids of this user's non-terminal packets, for buffer accounting.
    active: Vec<u64>,
    tbs: Vec<TbState>,
    avg_rate: f64,
    slot_served: u64,
    current_mcs: usize,
    /// Outer-loop link-adaptation margin, dB, subtracted from SINR
    /// estimates before MCS selection. Decode failures raise it, successes
    /// lower it, so the realized BLER converges on the configured target
    /// even though the estimate is made one CSI block ahead of the data.
    olla_db: f64,
    /// Uncapped uplink transmit PSD in dBm per PRB (uplink users).
    ul_psd_dbm: f64,
    /// Expected other-cell same-direction interference per PRB at this
    /// receiver, in mW (downlink users; uplink uses the per-cell figure).
    est_int_prb_mw: f64,
}

/// One cell's frozen decisions for the current slot.
#[derive(Clone)]
struct SlotPlan {
    windows: Vec<TxWindow>,
    sym_dir: [Option<Direction>; SYMBOLS_PER_SLOT],
    dl_winner: Vec<Option<u32>>,
    ul_winner: Vec<Option<u32>>,
    /// Exact transmit precoder per sub-band (downlink winners).
    dl_precoder: Vec<Option<CVec>>,
    /// What goes on the signaling map for that sub-band.
    dl_signal: Vec<Option<PmiValue>>,
    /// Winner transmit power per sub-band in mW (uplink winners).
    ul_power_mw: Vec<f64>,
}

impl SlotPlan {
    fn empty(n_sb: usize) -> Self {
        SlotPlan {
            windows: Vec::new(),
            sym_dir: [None; SYMBOLS_PER_SLOT],
            dl_winner: vec![None; n_sb],
            ul_winner: vec![None; n_sb],
            dl_precoder: vec![None; n_sb],
            dl_signal: vec![None; n_sb],
            ul_power_mw: vec![0.0; n_sb],
        }
    }
}

/// Everything immutable after setup.
struct Fixed {
    cfg: SimConfig,
    scheme: Scheme,
    layout: ClusterLayout,
    chan: ChannelModel,
    mcs: McsTable,
    codebook: PmiCodebook,
    formats: Vec<SlotFormat>,
    n_sb: usize,
    tti: u64,
    nprb: Vec<u32>,
    noise_sb_mw: Vec<f64>,
    /// Downlink transmit power per sub-band in mW (PSD times PRBs).
    dl_power_sb_mw: Vec<f64>,
    /// Expected other-cell uplink interference per PRB at each BS, in mW.
    est_int_ul_prb_mw: Vec<f64>,
    /// Coordination set of each victim cell.
    coord: Vec<Vec<CellId>>,
    /// Restricted (cell-edge) users per cell, both directions merged.
    restricted: Vec<std::collections::HashSet<UeId>>,
    pmi_bits: u8,
}

struct Sim {
    fx: Fixed,
    users: Vec<UserState>,
    cell_users: Vec<Vec<usize>>,
    arena: Vec<Pkt>,
    next_pkt_id: u64,
    next_tb_id: u64,
    decode_rngs: Vec<ChaCha8Rng>,
    plans: Vec<SlotPlan>,
    maps: Vec<Option<PrecoderMap>>,
    /// Per victim cell and sub-band: the mapped aggressor estimates,
    /// strongest first. Projectors are built per evaluation symbol from the
    /// subset of aggressors whose signaled format is downlink there, so the
    /// receiver spends degrees of freedom only where cross-link interference
    /// is actually announced.
    cli_ests: Vec<Vec<Vec<AggressorEstimate>>>,
    cache: ChanCache,
    kpi: KpiStore,
}

/// Per-candidate scheduling inputs for one cell and slot.
struct Cand {
    ue: UeId,
    uidx: usize,
    needs_retx: bool,
    has_backlog: bool,
    /// Queued bits not yet packed into a transport block; bounds the
    /// sub-band grants this user may hold.
    backlog_bits: u64,
    rates: Vec<f64>,
    ests_linear: Vec<f64>,
    precoders: Vec<Option<CVec>>,
}

struct EvalOut {
    eff_linear: f64,
    cir_db: Option<f64>,
    nesting: Vec<[f64; 3]>,
}

impl Sim {
    fn new(cfg: SimConfig) -> Self {
        let seed = cfg.run.seed;
        let (layout, nodes) = build_cluster_with(
            &DropParams {
                num_cells: cfg.layout.cells as usize,
                isd_m: cfg.layout.isd_m,
                ues_dl_per_cell: cfg.traffic.dl_ues_per_cell as usize,
                ues_ul_per_cell: cfg.traffic.ul_ues_per_cell as usize,
                min_bs_ue_distance_m: cfg.layout.min_bs_ue_distance_m,
            },
            seed,
            &cfg.pathloss,
        );
        let chan = ChannelModel::new(
            &layout,
            &nodes,
            cfg.antennas.bs as usize,
            cfg.antennas.ue as usize,
            cfg.pathloss.clone(),
            seed,
        );
        let cells = layout.num_cells();
        let n_sb = cfg.radio.sub_bands as usize;
        let nprb = cfg.subband_prbs();
        let noise_prb_dbm = cfg.power.noise_dbm_per_prb;
        let noise_sb_mw: Vec<f64> = nprb
            .iter()
            .map(|&n| dbm_to_mw(noise_prb_dbm) * n as f64)
            .collect();
        let dl_psd_dbm = cfg.power.dl_total_dbm - 10.0 * (cfg.radio.prbs as f64).log10();
        let dl_power_sb_mw: Vec<f64> = nprb
            .iter()
            .map(|&n| dbm_to_mw(dl_psd_dbm) * n as f64)
            .collect();
        // Reference grant size for interference estimates and power caps at
        // setup: one sub-band's worth of PRBs.
        let nprb_ref = (cfg.radio.prbs / cfg.radio.sub_bands).max(1);

        let mut users = Vec::with_capacity(nodes.ues.len());
        let mut cell_users = vec![Vec::new(); cells];
        for (i, ue) in nodes.ues.iter().enumerate() {
            assert_eq!(ue.id.0 as usize, i, "drop assigns user ids sequentially");
            cell_users[ue.serving.0 as usize].push(i);
            let pl_db = -chan.large_scale_gain_db(Node::Ue(ue.id), Node::Bs(ue.serving));
            let ul_psd_dbm = ul_tx_power(
                pl_db,
                cfg.power.ul_p0_dbm,
                cfg.power.ul_alpha,
                // Cap applies to the full grant; the per-PRB PSD cap for the
                // reference grant size is derived where powers are formed.
                f64::INFINITY,
            );
            users.push(UserState {
                node: ue.clone(),
                source: TrafficSource {
                    direction: ue.direction,
                    payload_bits: cfg.traffic.payload_bits,
                    arrival_rate_hz: cfg.arrival_rate_hz(ue.direction),
                },
                arrival_rng: stream(seed, Domain::Arrivals, &[ue.id.0 as u64]),
                queue: VecDeque::new(),
                active: Vec::new(),
                tbs: Vec::new(),
                avg_rate: 0.0,
                slot_served: 0,
                current_mcs: 0,
                olla_db: 0.0,
                ul_psd_dbm,
                est_int_prb_mw: 0.0,
            });
        }

        // Capped reference PSD of an uplink user for a one-sub-band grant.
        let capped_psd = |u: &UserState| -> f64 {
            u.ul_psd_dbm
                .min(cfg.power.ul_pmax_dbm - 10.0 * (nprb_ref as f64).log10())
        };

        // Expected other-cell interference per PRB, used only for link
        // adaptation: every cell is assumed busy in the estimator's own
        // direction, and cross-direction leakage is invisible to it. The
        // gap between this estimate and the evaluated interference is what
        // drives HARQ under cross-link conditions.
        let mut est_int_ul_prb_mw = vec![0.0; cells];
        for c in 0..cells {
            let mut total = 0.0;
            for k in 0..cells {
                if k == c {
                    continue;
                }
                let ul_list: Vec<&UserState> = cell_users[k]
                    .iter()
                    .map(|&i| &users[i])
                    .filter(|u| u.node.direction == Direction::Ul)
                    .collect();
                if ul_list.is_empty() {
                    continue;
                }
                let mean: f64 = ul_list
                    .iter()
                    .map(|u| {
                        let g =
                            chan.large_scale_gain_db(Node::Ue(u.node.id), Node::Bs(CellId(c as u16)));
                        dbm_to_mw(capped_psd(u) + g)
                    })
                    .sum::<f64>()
                    / ul_list.len() as f64;
                total += mean;
            }
            est_int_ul_prb_mw[c] = total;
        }
        for i in 0..users.len() {
            if users[i].node.direction != Direction::Dl {
                continue;
            }
            let me = users[i].node.id;
            let serving = users[i].node.serving;
            let mut total = 0.0;
            for k in 0..cells {
                if k as u16 == serving.0 {
                    continue;
                }
                let g = chan.large_scale_gain_db(Node::Bs(CellId(k as u16)), Node::Ue(me));
                total += dbm_to_mw(dl_psd_dbm + g);
            }
            users[i].est_int_prb_mw = total;
        }

        // Restricted users: per cell and direction, the lowest wideband-SNR
        // quartile below the quality floor. Directions pool separately (their
        // link budgets differ), then merge into one per-cell set. Under the
        // coordinated scheme the uplink pool is exempt: the projector
        // receiver suppresses the cross-link these users would otherwise be
        // hidden from, so confining them would only forfeit capacity.
        let mut restricted = vec![std::collections::HashSet::new(); cells];
        for c in 0..cells {
            for dir in [Direction::Dl, Direction::Ul] {
                if cfg.run.scheme == Scheme::Csa && dir == Direction::Ul {
                    continue;
                }
                let listed: Vec<(UeId, f64)> = cell_users[c]
                    .iter()
                    .map(|&i| &users[i])
                    .filter(|u| u.node.direction == dir)
                    .map(|u| {
                        let g = chan
                            .large_scale_gain_db(Node::Ue(u.node.id), Node::Bs(u.node.serving));
                        let snr = match dir {
                            Direction::Dl => dl_psd_dbm + g - noise_prb_dbm,
                            Direction::Ul => capped_psd(u) + g - noise_prb_dbm,
                        };
                        (u.node.id, snr)
                    })
                    .collect();
                let set = restricted_users(
                    &listed,
                    cfg.coordination.restricted_quartile,
                    cfg.coordination.quality_floor_db,
                );
                restricted[c].extend(set);
            }
        }

        let coord: Vec<Vec<CellId>> = (0..cells)
            .map(|c| coordination_set(&layout, CellId(c as u16), cfg.coordination.radius_factor))
            .collect();
        let codebook_bits = match cfg.coordination.pmi {
            PmiMode::Quantized(b) => b,
            PmiMode::Perfect => 4,
        };
        let decode_rngs = (0..cells)
            .map(|c| stream(seed, Domain::Decode, &[c as u64]))
            .collect();

        let scheme = cfg.run.scheme;
        let kpi = KpiStore::new(
            scheme,
            seed,
            cfg.config_hash(),
            cells as u32,
            cfg.total_slots(),
        );
        let mut sim = Sim {
            fx: Fixed {
                scheme,
                layout,
                chan,
                mcs: McsTable::default_table(),
                codebook: PmiCodebook::dft(cfg.antennas.bs as usize, codebook_bits),
                formats: rfc_codebook(),
                n_sb,
                tti: cfg.radio.tti_symbols as u64,
                nprb,
                noise_sb_mw,
                dl_power_sb_mw,
                est_int_ul_prb_mw,
                coord,
                restricted,
                pmi_bits: cfg.pmi_accounting_bits(),
                cfg,
            },
            users,
            cell_users,
            arena: Vec::new(),
            next_pkt_id: 0,
            next_tb_id: 0,
            decode_rngs,
            plans: Vec::new(),
            maps: vec![None; cells],
            cli_ests: vec![vec![Vec::new(); n_sb]; cells],
            cache: ChanCache::new(),
            kpi,
        };
        sim.kpi.capacity = (0..cells)
            .map(|c| CellCapacity {
                cell: c as u16,
                ..CellCapacity::default()
            })
            .collect();
        sim.plans = vec![SlotPlan::empty(n_sb); cells];
        sim
    }

    fn step(&mut self, slot: u64) {
        self.cache.0.clear();
        let cells = self.fx.layout.num_cells();
        for c in 0..cells {
            let plan = self.plan_cell(slot, c);
            self.plans[c] = plan;
        }
        self.build_coordination(slot);
        for c in 0..cells {
            let windows = self.plans[c].windows.clone();
            for w in &windows {
                self.serve_window(slot, c, w);
            }
        }
        for u in &mut self.users {
            u.avg_rate = (1.0 - PF_ALPHA) * u.avg_rate + PF_ALPHA * u.slot_served as f64;
            u.slot_served = 0;
        }
    }

    /// Phases 1-3 for one cell: arrivals, buffer-driven format selection,
    /// and per-direction proportional-fair scheduling.
    fn plan_cell(&mut self, slot: u64, cell: usize) -> SlotPlan {
        let slot_start = slot * SYMBOLS_PER_SLOT as u64;
        let slot_end = slot_start + SYMBOLS_PER_SLOT as u64;

        // Traffic arrivals for this slot.
        for idx in 0..self.cell_users[cell].len() {
            let ui = self.cell_users[cell][idx];
            let u = &mut self.users[ui];
            let batch = generate_arrivals(
                &mut u.arrival_rng,
                &u.source,
                u.node.id,
                slot_start,
                SYMBOLS_PER_SLOT as u64,
                &mut self.next_pkt_id,
            );
            match u.node.direction {
                Direction::Dl => self.kpi.counts.generated_dl += batch.len() as u64,
                Direction::Ul => self.kpi.counts.generated_ul += batch.len() as u64,
            }
            let mut order: Vec<(u64, u64)> =
                batch.iter().map(|p| (p.arrival_symbol, p.id)).collect();
            for p in batch {
                debug_assert_eq!(p.id as usize, self.arena.len());
                u.active.push(p.id);
                self.arena.push(Pkt { rec: p, assigned: 0 });
            }
            order.sort_unstable();
            u.queue.extend(order.iter().map(|&(_, id)| id));
        }

        // Buffer accounting at the slot boundary; packets arriving later in
        // this slot do not count yet.
        let (mut z_dl, mut z_ul) = (0u64, 0u64);
        for idx in 0..self.cell_users[cell].len() {
            let ui = self.cell_users[cell][idx];
            let arena = &self.arena;
            let u = &mut self.users[ui];
            u.active.retain(|&pid| {
                let r = &arena[pid as usize].rec;
                !r.failed && r.remaining_bits > 0
            });
            for &pid in &u.active {
                let r = &arena[pid as usize].rec;
                if r.arrival_symbol <= slot_start {
                    match r.direction {
                        Direction::Dl => z_dl += r.remaining_bits as u64,
                        Direction::Ul => z_ul += r.remaining_bits as u64,
                    }
                }
            }
        }
        let mu = buffered_ratio(z_dl, z_ul);
        self.kpi.mu.push(mu);

        let static_slot = self.fx.scheme.uses_static_slots() && is_static_slot(slot);
        let fmt_idx = if static_slot {
            STATIC_FORMAT_INDEX
        } else {
            select_slot_format(mu, &self.fx.formats)
        };
        let fmt = self.fx.formats[fmt_idx].clone();
        let chosen = (fmt.dl_symbols(), fmt.ul_symbols());
        let opt = optimal_split(mu);
        let (chi_ul, chi_dl) = symbol_mismatch(chosen, opt);
        self.kpi.chi_ul += chi_ul as u64;
        self.kpi.chi_dl += chi_dl as u64;
        let cap = &mut self.kpi.capacity[cell];
        cap.dl_symbols += chosen.0 as u64;
        cap.ul_symbols += chosen.1 as u64;
        cap.min_dl_symbols += chosen.0.min(opt.0) as u64;
        cap.min_ul_symbols += chosen.1.min(opt.1) as u64;

        let mut plan = SlotPlan::empty(self.fx.n_sb);
        plan.windows = transmission_windows(&fmt, self.fx.cfg.radio.tti_symbols as usize);
        for (i, s) in fmt.pattern.iter().enumerate() {
            plan.sym_dir[i] = match s {
                Sym::D => Some(Direction::Dl),
                Sym::U => Some(Direction::Ul),
                Sym::S => None,
            };
        }

        // Candidate construction. Estimates use the fading block at the slot
        // start and the busy-network interference expectation.
        let key0 = slot_start / self.fx.tti;
        let bs = Node::Bs(CellId(cell as u16));
        let mut cands: Vec<Cand> = Vec::new();
        for idx in 0..self.cell_users[cell].len() {
            let ui = self.cell_users[cell][idx];
            let u = &self.users[ui];
            let me = Node::Ue(u.node.id);
            let needs_retx = u.tbs.iter().any(|tb| tb.next_tx < slot_end);
            let backlog_bits: u64 = u
                .active
                .iter()
                .map(|&pid| {
                    let p = &self.arena[pid as usize];
                    if p.rec.failed {
                        0
                    } else {
                        (p.rec.remaining_bits - p.assigned) as u64
                    }
                })
                .sum();
            let has_backlog = backlog_bits > 0;
            let mut rates = Vec::with_capacity(self.fx.n_sb);
            let mut ests = Vec::with_capacity(self.fx.n_sb);
            let mut precoders = Vec::with_capacity(self.fx.n_sb);
            for sb in 0..self.fx.n_sb {
                let nprb = self.fx.nprb[sb] as f64;
                let noise = self.fx.noise_sb_mw[sb];
                let (s_mw, i_mw, v) = match u.node.direction {
                    Direction::Dl => {
                        let h = self.cache.get(&self.fx.chan, bs, me, key0, sb as u8);
                        let v = precoder_for(&h);
                        let s = self.fx.dl_power_sb_mw[sb] * h.mul_vec(&v).norm_sq();
                        (s, u.est_int_prb_mw * nprb, Some(v))
                    }
                    Direction::Ul => {
                        let h = self.cache.get(&self.fx.chan, me, bs, key0, sb as u8);
                        let psd = u
                            .ul_psd_dbm
                            .min(self.fx.cfg.power.ul_pmax_dbm - 10.0 * nprb.log10());
                        let p = dbm_to_mw(psd) * nprb;
                        let s = p * h.col(0).norm_sq();
                        (s, self.fx.est_int_ul_prb_mw[cell] * nprb, None)
                    }
                };
                let est = s_mw / (i_mw + noise);
                let est_db = 10.0 * est.max(f64::MIN_POSITIVE).log10();
                let entry = select_mcs(
                    est_db - u.olla_db,
                    &self.fx.mcs,
                    self.fx.cfg.radio.mcs_slope_per_db,
                    self.fx.cfg.radio.mcs_bler_target,
                );
                rates.push(entry.spectral_efficiency);
                ests.push(est);
                precoders.push(v);
            }
            cands.push(Cand {
                ue: u.node.id,
                uidx: ui,
                needs_retx,
                has_backlog,
                backlog_bits,
                rates,
                ests_linear: ests,
                precoders,
            });
        }

        for dir in [Direction::Dl, Direction::Ul] {
            let mut pf: Vec<PfCandidate> = Vec::new();
            let mut need: Vec<f64> = Vec::new();
            for c in cands.iter().filter(|c| self.users[c.uidx].node.direction == dir) {
                pf.push(PfCandidate {
                    ue: c.ue,
                    inst_rate: c.rates.clone(),
                    avg_rate: self.users[c.uidx].avg_rate,
                    needs_retx: c.needs_retx,
                    has_backlog: c.has_backlog,
                });
                need.push(c.backlog_bits as f64);
            }
            // Both schemes with static anchor slots keep their restricted
            // users out of flexible slots; the coordinated scheme layers the
            // projector machinery on top of that behavior.
            if matches!(self.fx.scheme, Scheme::CrfcTdd | Scheme::Csa) {
                let before: Vec<UeId> = pf.iter().map(|c| c.ue).collect();
                pf = filter_preavoid(pf, static_slot, &self.fx.restricted[cell]);
                if pf.len() != before.len() {
                    need = before
                        .iter()
                        .zip(need)
                        .filter(|(ue, _)| pf.iter().any(|c| c.ue == **ue))
                        .map(|(_, n)| n)
                        .collect();
                }
            }
            // Grants are bounded by queue occupancy: surplus sub-bands move
            // to users whose queues are not covered, so a deep queue soaks
            // up capacity a light user would leave idle mid-slot.
            let dir_syms: u64 = plan
                .windows
                .iter()
                .filter(|w| w.direction == dir)
                .map(|w| w.len as u64)
                .sum();
            let re_sb: Vec<f64> = (0..self.fx.n_sb)
                .map(|sb| (dir_syms * 12 * self.fx.nprb[sb] as u64) as f64)
                .collect();
            let winners = pf_schedule(&pf, self.fx.n_sb);
            let winners = bound_grants_to_need(winners, &pf, &need, &re_sb);
            // Per-winner: won sub-bands, link adaptation over them, powers.
            let mut won: HashMap<u32, Vec<usize>> = HashMap::new();
            for (sb, w) in winners.iter().enumerate() {
                if let Some(ue) = w {
                    won.entry(ue.0).or_default().push(sb);
                }
            }
            let mut by_id: Vec<(&u32, &Vec<usize>)> = won.iter().collect();
            by_id.sort();
            for (&id, sbs) in by_id {
                let cand = cands.iter().find(|c| c.ue.0 == id).expect("winner is a candidate");
                let ests: Vec<f64> = sbs.iter().map(|&sb| cand.ests_linear[sb]).collect();
                let eff_db = 10.0 * eesm(&ests, 1.0).max(f64::MIN_POSITIVE).log10();
                let entry = select_mcs(
                    eff_db - self.users[cand.uidx].olla_db,
                    &self.fx.mcs,
                    self.fx.cfg.radio.mcs_slope_per_db,
                    self.fx.cfg.radio.mcs_bler_target,
                );
                self.users[cand.uidx].current_mcs = entry.index;
                match dir {
                    Direction::Dl => {
                        for &sb in sbs {
                            plan.dl_winner[sb] = Some(id);
                            let v = cand.precoders[sb].clone().expect("downlink candidate");
                            plan.dl_signal[sb] = Some(match self.fx.cfg.coordination.pmi {
                                PmiMode::Perfect => PmiValue::Exact(v.clone()),
                                PmiMode::Quantized(_) => {
                                    let i = quantize_pmi(&v, &self.fx.codebook)
                                        .expect("codebook dimension matches");
                                    PmiValue::Index(i as u16)
                                }
                            });
                            plan.dl_precoder[sb] = Some(v);
                        }
                    }
                    Direction::Ul => {
                        let total_prb: u32 = sbs.iter().map(|&sb| self.fx.nprb[sb]).sum();
                        let psd = self.users[cand.uidx].ul_psd_dbm.min(
                            self.fx.cfg.power.ul_pmax_dbm - 10.0 * (total_prb as f64).log10(),
                        );
                        for &sb in sbs {
                            plan.ul_winner[sb] = Some(id);
                            plan.ul_power_mw[sb] = dbm_to_mw(psd) * self.fx.nprb[sb] as f64;
                        }
                    }
                }
            }
        }
        plan
    }

    /// Phase 4: publish precoder maps and identify the per-victim aggressor
    /// estimates (coordinated scheme, flexible slots only; static slots are
    /// aligned by construction and carry no cross-link).
    fn build_coordination(&mut self, slot: u64) {
        let cells = self.fx.layout.num_cells();
        self.maps = vec![None; cells];
        self.cli_ests = vec![vec![Vec::new(); self.fx.n_sb]; cells];
        if self.fx.scheme != Scheme::Csa || is_static_slot(slot) {
            return;
        }
        let slot_id = (slot % 16) as u8;
        for c in 0..cells {
            let mut entries = Vec::new();
            for sb in 0..self.fx.n_sb {
                if let Some(sig) = &self.plans[c].dl_signal[sb] {
                    entries.push(MapEntry {
                        slot_id,
                        sub_band: sb as u8,
                        pmi: sig.clone(),
                    });
                }
            }
            let map = build_precoder_map(CellId(c as u16), slot as u32, entries)
                .expect("one entry per sub-band");
            self.kpi.overhead_bits += map_payload_bits(&map, self.fx.n_sb, self.fx.pmi_bits);
            self.maps[c] = Some(map);
        }
        for c in 0..cells {
            let victim = CellId(c as u16);
            let maps: Vec<PrecoderMap> = self.fx.coord[c]
                .iter()
                .filter_map(|k| self.maps[k.0 as usize].clone())
                .collect();
            for sb in 0..self.fx.n_sb {
                let fx = &self.fx;
                let cache = &mut self.cache;
                let estimates = identify_interferers(
                    victim,
                    slot_id,
                    sb as u8,
                    &maps,
                    &fx.codebook,
                    |agg| {
                        let m = cache.get(&fx.chan, Node::Bs(agg), Node::Bs(victim), slot, sb as u8);
                        scale_mat(&m, fx.dl_power_sb_mw[sb].sqrt())
                    },
                    fx.cfg.coordination.max_aggressors as usize,
                );
                self.cli_ests[c][sb] = estimates;
            }
        }
    }

    /// Phase 5 for one window: group winners, pick retransmission or new
    /// data per user, evaluate, and resolve HARQ.
    fn serve_window(&mut self, slot: u64, cell: usize, w: &TxWindow) {
        let a = slot * SYMBOLS_PER_SLOT as u64 + w.start as u64;
        let b = slot * SYMBOLS_PER_SLOT as u64 + w.end() as u64;
        let dir = w.direction;
        let mut groups: Vec<(u32, Vec<u8>)> = Vec::new();
        for sb in 0..self.fx.n_sb {
            let winner = match dir {
                Direction::Dl => self.plans[cell].dl_winner[sb],
                Direction::Ul => self.plans[cell].ul_winner[sb],
            };
            if let Some(id) = winner {
                match groups.iter_mut().find(|(g, _)| *g == id) {
                    Some((_, sbs)) => sbs.push(sb as u8),
                    None => groups.push((id, vec![sb as u8])),
                }
            }
        }
        groups.sort();

        for (id, sbs) in groups {
            let uidx = id as usize;
            let re_per_sym: u64 = sbs.iter().map(|&sb| self.fx.nprb[sb as usize] as u64 * 12).sum();
            let re_avail = re_per_sym * w.len as u64;

            // A pending retransmission takes the window if the allocation
            // can carry the original block; otherwise new data may go out.
            let retx_pos = self.users[uidx]
                .tbs
                .iter()
                .position(|tb| tb.next_tx <= a && tb.re_total <= re_avail);
            let (pos, new_data) = match retx_pos {
                Some(p) => (p, false),
                None => {
                    let Some(tb) = self.pack_new_tb(uidx, a, re_avail) else {
                        continue;
                    };
                    self.users[uidx].tbs.push(tb);
                    (self.users[uidx].tbs.len() - 1, true)
                }
            };

            let mcs_idx = self.users[uidx].tbs[pos].harq.mcs_index;
            let beta = self.fx.mcs.get(mcs_idx).eesm_beta;
            let out = eval_transmission(
                &self.fx,
                &self.plans,
                &self.cli_ests[cell],
                &mut self.cache,
                slot,
                cell,
                dir,
                UeId(id),
                &sbs,
                w,
                beta,
                self.fx.cfg.run.record_nesting,
            );
            self.kpi.counts.harq_attempts += 1;
            if dir == Direction::Ul {
                if let Some(cir) = out.cir_db {
                    self.kpi.ul_cir_db.push(cir);
                }
            }
            self.kpi.nesting.extend(out.nesting);
            for pi in 0..self.users[uidx].tbs[pos].packets.len() {
                let pid = self.users[uidx].tbs[pos].packets[pi].0;
                self.arena[pid as usize].rec.harq_attempts += 1;
            }

            let (success, exhausted) = {
                let user = &mut self.users[uidx];
                let tb = &mut user.tbs[pos];
                let combined =
                    harq_combine(&mut tb.harq, out.eff_linear).expect("attempts below budget");
                let eff_db = 10.0 * combined.max(f64::MIN_POSITIVE).log10();
                let entry = self.fx.mcs.get(tb.harq.mcs_index);
                let p_err = bler(eff_db, entry, self.fx.cfg.radio.mcs_slope_per_db);
                let ok = decode_success(&mut self.decode_rngs[cell], p_err);
                (ok, tb.harq.exhausted())
            };

            // Outer-loop margin: asymmetric steps whose fixed point is the
            // BLER target (t): p*step = (1-p)*step*t/(1-t) iff p = t.
            {
                let t = self.fx.cfg.radio.mcs_bler_target;
                let user = &mut self.users[uidx];
                if success {
                    user.olla_db -= OLLA_STEP_DB * t / (1.0 - t);
                } else {
                    user.olla_db += OLLA_STEP_DB;
                }
                user.olla_db = user.olla_db.clamp(-3.0, 30.0);
            }

            if log::log_enabled!(log::Level::Debug) {
                let ev = AllocEvent {
                    slot,
                    window_start: a,
                    cell: cell as u16,
                    user: id,
                    direction: dir,
                    sub_bands: sbs.clone(),
                    mcs: mcs_idx,
                    new_data,
                    outcome: if success {
                        AllocOutcome::Decoded
                    } else if exhausted {
                        AllocOutcome::Exhausted
                    } else {
                        AllocOutcome::Pending
                    },
                };
                log::debug!("{}", ev.to_line());
            }

            self.users[uidx].slot_served += self.users[uidx].tbs[pos].bits;
            if success {
                let tb = self.users[uidx].tbs.remove(pos);
                self.kpi.capacity[cell].add_bits(dir, tb.bits);
                self.deliver_tb(&tb, b, dir);
            } else if exhausted {
                let tb = self.users[uidx].tbs.remove(pos);
                self.fail_tb(&tb, b, dir);
            } else {
                self.users[uidx].tbs[pos].next_tx = b + self.fx.cfg.harq.rtt_symbols as u64;
            }
        }
    }

    /// Assemble a new transport block from the head of the user's queue.
    fn pack_new_tb(&mut self, uidx: usize, window_start: u64, re_avail: u64) -> Option<TbState> {
        let mcs_idx = self.users[uidx].current_mcs;
        let entry = self.fx.mcs.get(mcs_idx);
        let cap = tb_bits(entry, re_avail);
        if cap == 0 {
            return None;
        }
        let user = &mut self.users[uidx];
        let arena = &mut self.arena;
        let mut room = cap;
        let mut content: Vec<(u64, u32)> = Vec::new();
        while room > 0 {
            let Some(&pid) = user.queue.front() else {
                break;
            };
            let pkt = &mut arena[pid as usize];
            if pkt.rec.failed || pkt.rec.remaining_bits == 0 {
                user.queue.pop_front();
                continue;
            }
            if pkt.rec.arrival_symbol > window_start {
                break;
            }
            let assignable = pkt.rec.remaining_bits - pkt.assigned;
            if assignable == 0 {
                user.queue.pop_front();
                continue;
            }
            let take = (assignable as u64).min(room) as u32;
            pkt.assigned += take;
            room -= take as u64;
            content.push((pid, take));
            if pkt.assigned == pkt.rec.remaining_bits {
                user.queue.pop_front();
            }
        }
        if content.is_empty() {
            return None;
        }
        let bits: u64 = content.iter().map(|&(_, n)| n as u64).sum();
        let id = self.next_tb_id;
        self.next_tb_id += 1;
        Some(TbState {
            harq: HarqProcess::new(id, mcs_idx, self.fx.cfg.harq.max_attempts),
            re_total: re_avail,
            bits,
            packets: content,
            next_tx: window_start,
        })
    }

    fn deliver_tb(&mut self, tb: &TbState, end_symbol: u64, dir: Direction) {
        for &(pid, bits) in &tb.packets {
            let pkt = &mut self.arena[pid as usize];
            pkt.assigned = pkt.assigned.saturating_sub(bits);
            if pkt.rec.failed {
                continue;
            }
            pkt.rec.remaining_bits -= bits;
            if pkt.rec.remaining_bits == 0 {
                pkt.rec.completion_symbol = Some(end_symbol);
                let lat = account_latency(pkt.rec.arrival_symbol, end_symbol, dir);
                let tput = pkt.rec.size_bits as f64 / lat;
                match dir {
                    Direction::Dl => {
                        self.kpi.counts.decoded_dl += 1;
                        self.kpi.dl_latency_ms.push(lat);
                        self.kpi.dl_tput_bits_per_ms.push(tput);
                    }
                    Direction::Ul => {
                        self.kpi.counts.decoded_ul += 1;
                        self.kpi.ul_latency_ms.push(lat);
                        self.kpi.ul_tput_bits_per_ms.push(tput);
                    }
                }
            }
        }
    }

    fn fail_tb(&mut self, tb: &TbState, end_symbol: u64, dir: Direction) {
        for &(pid, bits) in &tb.packets {
            let pkt = &mut self.arena[pid as usize];
            pkt.assigned = pkt.assigned.saturating_sub(bits);
            if pkt.rec.failed {
                continue;
            }
            pkt.rec.failed = true;
            // Censored latency of the abandoned packet, for the failure tail.
            let lat = account_latency(pkt.rec.arrival_symbol, end_symbol, dir);
            match dir {
                Direction::Dl => {
                    self.kpi.counts.failed_dl += 1;
                    self.kpi.dl_failed_ms.push(lat);
                }
                Direction::Ul => {
                    self.kpi.counts.failed_ul += 1;
                    self.kpi.ul_failed_ms.push(lat);
                }
            }
        }
    }

    fn finish(mut self) -> KpiStore {
        if self.fx.cfg.run.record_packets {
            self.kpi.packets = self
                .arena
                .iter()
                .map(|p| PacketSample {
                    direction: p.rec.direction,
                    arrival_symbol: p.rec.arrival_symbol,
                    completion_symbol: p.rec.completion_symbol,
                    attempts: p.rec.harq_attempts,
                    failed: p.rec.failed,
                })
                .collect();
        }
        self.kpi.finalize(self.fx.cfg.run.outage_percentile);
        debug_assert_eq!(self.kpi.check_integrity(), Ok(()));
        self.kpi
    }
}

/// Evaluate one transport-block transmission over its (sub-band, symbol)
/// grid and reduce to an effective SINR, with the scheme's receiver model
/// and evaluation deletions applied per point.
#[allow(clippy::too_many_arguments)]
fn eval_transmission(
    fx: &Fixed,
    plans: &[SlotPlan],
    cli_ests: &[Vec<AggressorEstimate>],
    cache: &mut ChanCache,
    slot: u64,
    cell: usize,
    dir: Direction,
    user: UeId,
    sbs: &[u8],
    w: &TxWindow,
    beta: f64,
    record_nesting: bool,
) -> EvalOut {
    let mut sinrs: Vec<f64> = Vec::new();
    let mut sig_mw = 0.0;
    let mut int_mw = 0.0;
    let mut nesting = Vec::new();
    let bs_here = Node::Bs(CellId(cell as u16));
    // Projectors keyed by (sub-band, active-aggressor bitmask); built lazily
    // from the subset of mapped aggressors whose announced format is
    // downlink at the symbol under evaluation.
    let mut proj_cache: HashMap<(u8, u32), Option<ProjectorState>> = HashMap::new();

    for sym in w.start..w.end() {
        let t_abs = slot * SYMBOLS_PER_SLOT as u64 + sym as u64;
        let key_ue = t_abs / fx.tti;
        for &sb in sbs {
            let sbu = sb as usize;
            let noise = fx.noise_sb_mw[sbu];

            // Desired effective vector and the true interferer lists at this
            // receiver, split by class.
            let mut same: Vec<(Node, CVec)> = Vec::new();
            let mut cross: Vec<(Node, CVec)> = Vec::new();
            let h = match dir {
                Direction::Ul => {
                    let hmat = cache.get(&fx.chan, Node::Ue(user), bs_here, key_ue, sb);
                    let h = hmat
                        .col(0)
                        .scale(sqrt_c(plans[cell].ul_power_mw[sbu]));
                    for (k, plan) in plans.iter().enumerate() {
                        if k == cell {
                            continue;
                        }
                        match plan.sym_dir[sym] {
                            Some(Direction::Ul) => {
                                if let Some(x) = plan.ul_winner[sbu] {
                                    let g = cache
                                        .get(&fx.chan, Node::Ue(UeId(x)), bs_here, key_ue, sb)
                                        .col(0)
                                        .scale(sqrt_c(plan.ul_power_mw[sbu]));
                                    same.push((Node::Ue(UeId(x)), g));
                                }
                            }
                            Some(Direction::Dl) => {
                                if let Some(v) = &plan.dl_precoder[sbu] {
                                    let src = Node::Bs(CellId(k as u16));
                                    // BS sites are static; their link holds
                                    // for the whole slot.
                                    let g = cache
                                        .get(&fx.chan, src, bs_here, slot, sb)
                                        .mul_vec(v)
                                        .scale(sqrt_c(fx.dl_power_sb_mw[sbu]));
                                    cross.push((src, g));
                                }
                            }
                            None => {}
                        }
                    }
                    h
                }
                Direction::Dl => {
                    let me = Node::Ue(user);
                    let hmat = cache.get(&fx.chan, bs_here, me, key_ue, sb);
                    let v = plans[cell].dl_precoder[sbu]
                        .as_ref()
                        .expect("downlink winner carries a precoder");
                    let h = hmat.mul_vec(v).scale(sqrt_c(fx.dl_power_sb_mw[sbu]));
                    for (k, plan) in plans.iter().enumerate() {
                        if k == cell {
                            continue;
                        }
                        match plan.sym_dir[sym] {
                            Some(Direction::Dl) => {
                                if let Some(vk) = &plan.dl_precoder[sbu] {
                                    let src = Node::Bs(CellId(k as u16));
                                    let g = cache
                                        .get(&fx.chan, src, me, key_ue, sb)
                                        .mul_vec(vk)
                                        .scale(sqrt_c(fx.dl_power_sb_mw[sbu]));
                                    same.push((src, g));
                                }
                            }
                            Some(Direction::Ul) => {
                                if let Some(x) = plan.ul_winner[sbu] {
                                    let src = Node::Ue(UeId(x));
                                    let g = cache
                                        .get(&fx.chan, src, me, key_ue, sb)
                                        .col(0)
                                        .scale(sqrt_c(plan.ul_power_mw[sbu]));
                                    cross.push((src, g));
                                }
                            }
                            None => {}
                        }
                    }
                    h
                }
            };

            // Gated projector: active only at symbols where at least one
            // mapped aggressor announced downlink. Everywhere else the
            // coordinated receiver degenerates to the plain IRC receiver and
            // pays no subspace loss.
            let proj: Option<&ProjectorState> =
                if fx.scheme == Scheme::Csa && dir == Direction::Ul {
                    let mut mask: u32 = 0;
                    for (i, e) in cli_ests[sbu].iter().enumerate() {
                        let agg = e.aggressor.0 as usize;
                        if plans[agg].sym_dir[sym] == Some(Direction::Dl) {
                            mask |= 1 << i;
                        }
                    }
                    if mask == 0 {
                        None
                    } else {
                        proj_cache
                            .entry((sb, mask))
                            .or_insert_with(|| {
                                let subset: Vec<AggressorEstimate> = cli_ests[sbu]
                                    .iter()
                                    .enumerate()
                                    .filter(|(i, _)| mask & (1 << *i) != 0)
                                    .map(|(_, e)| e.clone())
                                    .collect();
                                build_cli_projector(&subset, slot).ok()
                            })
                            .as_ref()
                    }
                } else {
                    None
                };

            // Receiver-side covariance: per-term same-link knowledge. The
            // cross-link class is invisible to every receiver; the
            // coordinated scheme reaches it only through the projector.
            let n_rx = h.dim();
            let mut r_known = InterferenceCovariance::new(n_rx, fx.cfg.radio.covariance);
            for (src, g) in &same {
                r_known.push(CovContrib {
                    source: *src,
                    class: InterfererClass::SameLink,
                    vector: g.clone(),
                });
            }
            let u = receive_filter(fx, proj, &h, &r_known, noise);

            // Evaluation deletions per scheme. The oracle deletion is tied
            // to the projector being active: where nothing was announced the
            // coordinated receiver handles no cross-link and the terms stay.
            let keep_same = fx.scheme != Scheme::IFree;
            let keep_cross = match fx.scheme {
                Scheme::IFree | Scheme::CfTdd => false,
                Scheme::NcTdd | Scheme::CrfcTdd => true,
                Scheme::Csa => {
                    !(dir == Direction::Ul
                        && proj.is_some()
                        && fx.cfg.coordination.conditioning == ConditioningMode::IdealOracle)
                }
            };
            let mut eval_vecs: Vec<CVec> = Vec::new();
            if keep_same {
                eval_vecs.extend(same.iter().map(|(_, g)| g.clone()));
            }
            if keep_cross {
                eval_vecs.extend(cross.iter().map(|(_, g)| g.clone()));
            }
            sig_mw += h.norm_sq();
            int_mw += eval_vecs.iter().map(CVec::norm_sq).sum::<f64>();
            let sinr = post_sinr(
                &u,
                &SinrInputs {
                    desired: h.clone(),
                    interferers: eval_vecs,
                    noise_power: noise,
                },
                fx.cfg.radio.sinr,
            );
            for _ in 0..fx.nprb[sbu] {
                sinrs.push(sinr);
            }

            if record_nesting && dir == Direction::Ul {
                // The three reference scheme semantics at this evaluation
                // point, each deleting a superset of interference terms:
                // interference-free reception, cross-link-free reception with
                // the unconstrained same-link optimum, and the projected
                // receiver with cross-link oracle-deleted. The chain is
                // ordered by construction; the store keeps the evidence.
                let same_only: Vec<CVec> = same.iter().map(|(_, g)| g.clone()).collect();
                let mut r_nest =
                    InterferenceCovariance::new(n_rx, crate::phy::CovarianceMode::PerTerm);
                for (src, g) in &same {
                    r_nest.push(CovContrib {
                        source: *src,
                        class: InterfererClass::SameLink,
                        vector: g.clone(),
                    });
                }
                let empty =
                    InterferenceCovariance::new(n_rx, crate::phy::CovarianceMode::PerTerm);
                let ua = irc_filter(&h, &empty, noise);
                let val_a = post_sinr(
                    &ua,
                    &SinrInputs {
                        desired: h.clone(),
                        interferers: Vec::new(),
                        noise_power: noise,
                    },
                    SinrMode::Sinr,
                );
                let ub = irc_filter(&h, &r_nest, noise);
                let val_b = post_sinr(
                    &ub,
                    &SinrInputs {
                        desired: h.clone(),
                        interferers: same_only.clone(),
                        noise_power: noise,
                    },
                    SinrMode::Sinr,
                );
                let uc = match proj {
                    None => ub.clone(),
                    Some(ps) => match condition_covariance(
                        &r_nest,
                        ps,
                        ConditioningMode::IdealOracle,
                        noise,
                    ) {
                        Ok(cond) => {
                            let comp = ps.complement();
                            let hp = comp.mul_vec(&h);
                            comp.mul_vec(&irc_filter_from_matrix(&hp, &cond.matrix, 0.0))
                        }
                        Err(_) => ub.clone(),
                    },
                };
                let val_c = post_sinr(
                    &uc,
                    &SinrInputs {
                        desired: h.clone(),
                        interferers: same_only,
                        noise_power: noise,
                    },
                    SinrMode::Sinr,
                );
                nesting.push([val_a, val_b, val_c]);
            }
        }
    }

    let cir_db = (dir == Direction::Ul).then(|| {
        if int_mw <= 0.0 {
            CIR_CAP_DB
        } else {
            (10.0 * (sig_mw / int_mw).log10()).min(CIR_CAP_DB)
        }
    });
    EvalOut {
        eff_linear: eesm(&sinrs, beta),
        cir_db,
        nesting,
    }
}

/// The scheme's receive filter for one evaluation point. `proj` is the
/// gated projector: present only for the coordinated scheme's uplink at
/// symbols with announced cross-link activity.
fn receive_filter(
    fx: &Fixed,
    proj: Option<&ProjectorState>,
    h: &CVec,
    r_known: &InterferenceCovariance,
    noise: f64,
) -> CVec {
    match fx.scheme {
        Scheme::IFree => {
            let empty = InterferenceCovariance::new(h.dim(), fx.cfg.radio.covariance);
            irc_filter(h, &empty, noise)
        }
        Scheme::CfTdd | Scheme::NcTdd | Scheme::CrfcTdd => irc_filter(h, r_known, noise),
        Scheme::Csa => {
            let Some(ps) = proj else {
                return irc_filter(h, r_known, noise);
            };
            let mode = fx.cfg.coordination.conditioning;
            match condition_covariance(r_known, ps, mode, noise) {
                Err(_) => irc_filter(h, r_known, noise),
                Ok(cond) => match mode {
                    ConditioningMode::LiteralColumns => {
                        irc_filter_from_matrix(h, &cond.matrix, noise)
                    }
                    // Solve in the projected subspace; the conditioned
                    // matrix already carries its noise floor.
                    ConditioningMode::Complement | ConditioningMode::IdealOracle => {
                        let comp = ps.complement();
                        let hp = comp.mul_vec(h);
                        let w = irc_filter_from_matrix(&hp, &cond.matrix, 0.0);
                        comp.mul_vec(&w)
                    }
                },
            }
        }
    }
}
