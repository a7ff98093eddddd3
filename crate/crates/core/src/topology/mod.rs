//! Hexagonal cluster geometry, user drop, and the substitute radio channel:
//! log-distance pathloss per link class, log-normal shadowing, and
//! block-Rayleigh fast fading that is deterministic given (seed, link, TTI,
//! sub-band). BS-BS links see a near-LOS exponent-2 class with elevated
//! antennas, which is what makes cross-link interference between base
//! stations the dominant impairment; UE-UE links see the highest loss class.
//!
//! Channels are reciprocal: `channel(a -> b)` equals the plain transpose of
//! `channel(b -> a)` at the same TTI and sub-band, shadowing included.

mod drop_file;

pub use drop_file::{dump_drop, load_drop, parse_drop, render_drop};

use crate::linalg::{CMat, C64};
use crate::rngkey::{stream, Domain};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Traffic / transmission direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    Dl,
    Ul,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Dl => "dl",
            Direction::Ul => "ul",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellId(pub u16);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UeId(pub u32);

/// Any transmitting or receiving node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    Bs(CellId),
    Ue(UeId),
}

impl Node {
    /// Stable integer key for stream derivation and canonical pair ordering.
    pub fn key(self) -> u64 {
        match self {
            Node::Bs(CellId(c)) => c as u64,
            Node::Ue(UeId(u)) => 1_000_000 + u as u64,
        }
    }
}

/// Propagation class of a link, selected by the endpoint kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkClass {
    BsUe,
    BsBs,
    UeUe,
}

impl LinkClass {
    pub fn of(a: Node, b: Node) -> LinkClass {
        match (a, b) {
            (Node::Bs(_), Node::Bs(_)) => LinkClass::BsBs,
            (Node::Ue(_), Node::Ue(_)) => LinkClass::UeUe,
            _ => LinkClass::BsUe,
        }
    }
}

/// Log-distance pathloss: `intercept + 10 n log10(d_km)`, plus log-normal
/// shadowing with the given deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathlossClass {
    pub intercept_db: f64,
    pub exponent: f64,
    pub shadow_sigma_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LargeScaleModel {
    pub bs_ue: PathlossClass,
    pub bs_bs: PathlossClass,
    pub ue_ue: PathlossClass,
}

impl Default for LargeScaleModel {
    fn default() -> Self {
        LargeScaleModel {
            // Macro-to-user, the classic urban-macro fit.
            bs_ue: PathlossClass { intercept_db: 128.1, exponent: 3.76, shadow_sigma_db: 8.0 },
            // Elevated antennas near line of sight between sites.
            bs_bs: PathlossClass { intercept_db: 100.0, exponent: 2.0, shadow_sigma_db: 6.0 },
            // Ground-level clutter both ends, highest loss.
            ue_ue: PathlossClass { intercept_db: 132.0, exponent: 4.0, shadow_sigma_db: 6.0 },
        }
    }
}

impl LargeScaleModel {
    pub fn class(&self, c: LinkClass) -> &PathlossClass {
        match c {
            LinkClass::BsUe => &self.bs_ue,
            LinkClass::BsBs => &self.bs_bs,
            LinkClass::UeUe => &self.ue_ue,
        }
    }
}

/// Mean (shadowing-free) pathloss in dB at distance `d_m` meters.
pub fn pathloss_db(class: &PathlossClass, d_m: f64) -> f64 {
    let d_km = (d_m.max(1.0)) / 1000.0;
    class.intercept_db + 10.0 * class.exponent * d_km.log10()
}

/// Transmit powers and the noise floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSetting {
    /// Total BS transmit power, dBm, split evenly across sub-bands.
    pub dl_total_dbm: f64,
    /// Open-loop UL target, dBm per resource block.
    pub ul_p0_dbm: f64,
    /// Fractional pathloss compensation factor.
    pub ul_alpha: f64,
    /// UE power cap, dBm.
    pub ul_pmax_dbm: f64,
    /// Thermal noise plus receiver noise figure, dBm per resource block.
    pub noise_dbm_per_prb: f64,
}

impl Default for PowerSetting {
    fn default() -> Self {
        PowerSetting {
            dl_total_dbm: 40.0,
            ul_p0_dbm: -103.0,
            ul_alpha: 1.0,
            ul_pmax_dbm: 23.0,
            noise_dbm_per_prb: -111.4,
        }
    }
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Open-loop uplink power control: `min(p_max, p0 + alpha * pathloss)`, dBm.
pub fn ul_tx_power(pathloss_db: f64, p0_dbm: f64, alpha: f64, pmax_dbm: f64) -> f64 {
    (p0_dbm + alpha * pathloss_db).min(pmax_dbm)
}

/// Base-station positions on a hex grid, center-out spiral order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterLayout {
    pub isd_m: f64,
    pub cell_radius_m: f64,
    pub bs_pos: Vec<[f64; 2]>,
}

impl ClusterLayout {
    pub fn num_cells(&self) -> usize {
        self.bs_pos.len()
    }
}

/// Hex-grid positions: center cell first, then rings walked in a fixed spiral
/// order, truncated to `count`.
pub fn hex_positions(count: usize, isd_m: f64) -> Vec<[f64; 2]> {
    let mut out = vec![[0.0, 0.0]];
    let dirs: [(i64, i64); 6] = [(1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)];
    let mut ring = 1i64;
    while out.len() < count {
        let (mut q, mut r) = (-ring, ring);
        for d in dirs {
            for _ in 0..ring {
                if out.len() >= count {
                    break;
                }
                let x = isd_m * (q as f64 + r as f64 / 2.0);
                let y = isd_m * (3f64.sqrt() / 2.0) * r as f64;
                out.push([x, y]);
                q += d.0;
                r += d.1;
            }
        }
        ring += 1;
    }
    out.truncate(count);
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UeNode {
    pub id: UeId,
    pub serving: CellId,
    pub pos: [f64; 2],
    pub direction: Direction,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct NodeSet {
    pub ues: Vec<UeNode>,
}

impl NodeSet {
    pub fn in_cell(&self, cell: CellId, dir: Direction) -> impl Iterator<Item = &UeNode> {
        self.ues
            .iter()
            .filter(move |u| u.serving == cell && u.direction == dir)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DropParams {
    pub num_cells: usize,
    pub isd_m: f64,
    pub ues_dl_per_cell: usize,
    pub ues_ul_per_cell: usize,
    pub min_bs_ue_distance_m: f64,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Shadowing draw for an unordered node pair. Keyed by node identity only,
/// so the drop procedure and the channel model see the same value.
fn pair_shadow_db(seed: u64, sigma_db: f64, a: Node, b: Node) -> f64 {
    if sigma_db == 0.0 {
        return 0.0;
    }
    let (lo, hi) = ordered(a, b);
    let mut rng = stream(seed, Domain::Shadowing, &[lo.key(), hi.key()]);
    let normal = Normal::new(0.0, sigma_db).unwrap();
    normal.sample(&mut rng)
}

/// Drop the cluster: BSs on the hex grid, UEs uniform over each cell's disc
/// (annulus above the minimum BS distance). Association is by strongest
/// large-scale gain, shadowing included: positions are redrawn until the
/// dropping cell is the strongest server, so the per-cell user counts hold
/// exactly and no user camps on a deeply shadowed cell edge.
pub fn build_cluster(params: &DropParams, seed: u64) -> (ClusterLayout, NodeSet) {
    build_cluster_with(params, seed, &LargeScaleModel::default())
}

/// `build_cluster` against an explicit large-scale model (pathloss class
/// and shadowing deviation drive the association test).
pub fn build_cluster_with(
    params: &DropParams,
    seed: u64,
    large_scale: &LargeScaleModel,
) -> (ClusterLayout, NodeSet) {
    let layout = ClusterLayout {
        isd_m: params.isd_m,
        cell_radius_m: params.isd_m / 2.0,
        bs_pos: hex_positions(params.num_cells, params.isd_m),
    };
    let class = large_scale.class(LinkClass::BsUe);
    let mut ues = Vec::new();
    let mut next_id = 0u32;
    for (ci, &bs) in layout.bs_pos.iter().enumerate() {
        let per_dir = [
            (Direction::Dl, params.ues_dl_per_cell),
            (Direction::Ul, params.ues_ul_per_cell),
        ];
        for (dir, count) in per_dir {
            for k in 0..count {
                let mut rng = stream(
                    seed,
                    Domain::Layout,
                    &[ci as u64, dir as u64, k as u64],
                );
                // Shadowing toward each BS is fixed by node identity, so the
                // redraw loop below only moves the position.
                let me = Node::Ue(UeId(next_id));
                let shadow: Vec<f64> = (0..layout.bs_pos.len())
                    .map(|j| {
                        pair_shadow_db(seed, class.shadow_sigma_db, me, Node::Bs(CellId(j as u16)))
                    })
                    .collect();
                let r0 = params.min_bs_ue_distance_m;
                let r1 = layout.cell_radius_m;
                let mut best: Option<([f64; 2], f64)> = None;
                let mut pos = [bs[0], bs[1]];
                for _ in 0..10_000 {
                    let u: f64 = rng.random();
                    let r = (u * (r1 * r1 - r0 * r0) + r0 * r0).sqrt();
                    let theta: f64 = rng.random::<f64>() * std::f64::consts::TAU;
                    pos = [bs[0] + r * theta.cos(), bs[1] + r * theta.sin()];
                    let gain = |j: usize| {
                        -(pathloss_db(class, dist(pos, layout.bs_pos[j])) + shadow[j])
                    };
                    let margin = (0..layout.bs_pos.len())
                        .filter(|&j| j != ci)
                        .map(|j| gain(ci) - gain(j))
                        .fold(f64::INFINITY, f64::min);
                    if margin >= 0.0 {
                        best = None;
                        break;
                    }
                    if best.map_or(true, |(_, m)| margin > m) {
                        best = Some((pos, margin));
                    }
                }
                // Draw budget exhausted: fall back to the least-shadowed
                // candidate so the drop still terminates deterministically.
                if let Some((p, _)) = best {
                    pos = p;
                }
                ues.push(UeNode {
                    id: UeId(next_id),
                    serving: CellId(ci as u16),
                    pos,
                    direction: dir,
                });
                next_id += 1;
            }
        }
    }
    (layout, NodeSet { ues })
}

/// Channel generator: owns the geometry, per-class pathloss models, antenna
/// counts, and the run seed. All outputs are pure functions of their keys.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    seed: u64,
    pub bs_ant: usize,
    pub ue_ant: usize,
    pub large_scale: LargeScaleModel,
    bs_pos: Vec<[f64; 2]>,
    ue_pos: Vec<[f64; 2]>,
}

impl ChannelModel {
    pub fn new(
        layout: &ClusterLayout,
        nodes: &NodeSet,
        bs_ant: usize,
        ue_ant: usize,
        large_scale: LargeScaleModel,
        seed: u64,
    ) -> Self {
        let mut ue_pos = vec![[0.0, 0.0]; nodes.ues.len()];
        for ue in &nodes.ues {
            ue_pos[ue.id.0 as usize] = ue.pos;
        }
        ChannelModel {
            seed,
            bs_ant,
            ue_ant,
            large_scale,
            bs_pos: layout.bs_pos.clone(),
            ue_pos,
        }
    }

    pub fn antennas(&self, n: Node) -> usize {
        match n {
            Node::Bs(_) => self.bs_ant,
            Node::Ue(_) => self.ue_ant,
        }
    }

    pub fn position(&self, n: Node) -> [f64; 2] {
        match n {
            Node::Bs(CellId(c)) => self.bs_pos[c as usize],
            Node::Ue(UeId(u)) => self.ue_pos[u as usize],
        }
    }

    pub fn distance(&self, a: Node, b: Node) -> f64 {
        dist(self.position(a), self.position(b))
    }

    /// Shadowing-free pathloss in dB.
    pub fn mean_pathloss_db(&self, a: Node, b: Node) -> f64 {
        let class = self.large_scale.class(LinkClass::of(a, b));
        pathloss_db(class, self.distance(a, b))
    }

    /// Shadowing in dB for the unordered node pair; symmetric by keying.
    pub fn shadowing_db(&self, a: Node, b: Node) -> f64 {
        let class = self.large_scale.class(LinkClass::of(a, b));
        pair_shadow_db(self.seed, class.shadow_sigma_db, a, b)
    }

    /// Large-scale gain in dB: `-(pathloss + shadowing)`. Symmetric.
    pub fn large_scale_gain_db(&self, a: Node, b: Node) -> f64 {
        -(self.mean_pathloss_db(a, b) + self.shadowing_db(a, b))
    }

    /// Fast-fading channel from `tx` to `rx` at (tti, sub_band), dimensioned
    /// `rx antennas x tx antennas`, scaled so the mean squared Frobenius norm
    /// equals `rx_ant * tx_ant * linear(large_scale_gain)`. Block-constant
    /// within a TTI. Reciprocal: the reverse link is the plain transpose.
    pub fn channel(&self, tx: Node, rx: Node, tti: u64, sub_band: u8) -> CMat {
        let (lo, hi) = ordered(tx, rx);
        let canonical = self.canonical_fading(lo, hi, tti, sub_band);
        if tx == lo {
            canonical
        } else {
            canonical.transpose()
        }
    }

    /// Canonical draw for the unordered pair, oriented lo -> hi
    /// (rows: hi antennas, cols: lo antennas).
    fn canonical_fading(&self, lo: Node, hi: Node, tti: u64, sub_band: u8) -> CMat {
        let rows = self.antennas(hi);
        let cols = self.antennas(lo);
        let gain_db = self.large_scale_gain_db(lo, hi);
        let amp = dbm_to_mw(gain_db).sqrt();
        let mut rng = stream(
            self.seed,
            Domain::FastFading,
            &[lo.key(), hi.key(), tti, sub_band as u64],
        );
        let normal = Normal::new(0.0, (0.5f64).sqrt()).unwrap();
        let mut m = CMat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let re: f64 = normal.sample(&mut rng);
                let im: f64 = normal.sample(&mut rng);
                m[(i, j)] = C64::new(amp * re, amp * im);
            }
        }
        m
    }
}

fn ordered(a: Node, b: Node) -> (Node, Node) {
    if a.key() <= b.key() {
        (a, b)
    } else {
        (b, a)
    }
}

#[cfg(test)]
mod tests;
