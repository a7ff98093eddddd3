//! Run configuration: defaults, hierarchical text format, validation.

use crate::csa::ConditioningMode;
use crate::phy::{CovarianceMode, PmiMode, SinrMode};
use crate::topology::{LargeScaleModel, PowerSetting};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

/// The evaluated duplexing/coordination schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Dynamic TDD with all cross-link terms removed from evaluation
    /// (perfect BS-BS and UE-UE cancellation bound).
    CfTdd,
    /// Dynamic TDD with no coordination: all interference present, plain
    /// same-link IRC receivers.
    NcTdd,
    /// Coordinated radio-frame configuration: periodic static slots with an
    /// identical format at every BS, plus pre-avoidance gating of weak users
    /// into those slots.
    CrfcTdd,
    /// The coordinated suppression scheme: pre-avoidance plus precoder-map
    /// exchange and projector conditioning of the UL interference covariance.
    Csa,
    /// All inter-cell interference removed from evaluation (isolated-cell
    /// bound).
    IFree,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::CfTdd,
        Scheme::NcTdd,
        Scheme::CrfcTdd,
        Scheme::Csa,
        Scheme::IFree,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::CfTdd => "cf_tdd",
            Scheme::NcTdd => "nc_tdd",
            Scheme::CrfcTdd => "crfc_tdd",
            Scheme::Csa => "csa",
            Scheme::IFree => "i_free",
        }
    }

    /// Schemes running the static/flexible slot split (and with it the
    /// pre-avoidance gating).
    pub fn uses_static_slots(self) -> bool {
        matches!(self, Scheme::CrfcTdd | Scheme::Csa)
    }

    /// Only the coordinated suppression scheme exchanges maps and conditions
    /// the covariance.
    pub fn conditions_covariance(self) -> bool {
        matches!(self, Scheme::Csa)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cf_tdd" => Ok(Scheme::CfTdd),
            "nc_tdd" => Ok(Scheme::NcTdd),
            "crfc_tdd" => Ok(Scheme::CrfcTdd),
            "csa" => Ok(Scheme::Csa),
            "i_free" => Ok(Scheme::IFree),
            other => Err(format!(
                "unknown scheme {other:?}; expected one of cf_tdd, nc_tdd, crfc_tdd, csa, i_free"
            )),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config io: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse: {0}")]
    Parse(String),
    #[error("config invalid: {key}: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutSection {
    /// Number of cells on the hexagonal grid.
    pub cells: u32,
    /// Inter-site distance, meters.
    pub isd_m: f64,
    /// Minimum BS-to-UE drop distance, meters.
    pub min_bs_ue_distance_m: f64,
}

impl Default for LayoutSection {
    fn default() -> Self {
        LayoutSection {
            cells: 7,
            isd_m: 500.0,
            min_bs_ue_distance_m: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AntennaSection {
    /// BS antennas (N).
    pub bs: u32,
    /// UE antennas (M).
    pub ue: u32,
}

impl Default for AntennaSection {
    fn default() -> Self {
        AntennaSection { bs: 4, ue: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioSection {
    /// Carrier resource blocks.
    pub prbs: u32,
    /// Number of sub-bands the PRBs split into (PMI granularity).
    pub sub_bands: u32,
    /// Transmission window cap, OFDM symbols.
    pub tti_symbols: u32,
    /// Post-combining ratio mode used by link evaluation.
    pub sinr: SinrMode,
    /// Covariance assembly mode.
    pub covariance: CovarianceMode,
    /// Link-adaptation block-error target.
    pub mcs_bler_target: f64,
    /// Block-error sigmoid slope, per dB.
    pub mcs_slope_per_db: f64,
}

impl Default for RadioSection {
    fn default() -> Self {
        RadioSection {
            prbs: 50,
            sub_bands: 4,
            tti_symbols: 4,
            sinr: SinrMode::Sinr,
            covariance: CovarianceMode::PerTerm,
            mcs_bler_target: 0.01,
            mcs_slope_per_db: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficSection {
    /// Fixed payload per packet, bits (both directions).
    pub payload_bits: u32,
    /// Offered load per cell, megabits per second, both directions combined.
    pub offered_load_mbps: f64,
    /// DL:UL offered-traffic ratio (2.0 means 2:1).
    pub dl_ul_ratio: f64,
    pub dl_ues_per_cell: u32,
    pub ul_ues_per_cell: u32,
}

impl Default for TrafficSection {
    fn default() -> Self {
        TrafficSection {
            payload_bits: 400,
            offered_load_mbps: 5.0,
            dl_ul_ratio: 2.0,
            dl_ues_per_cell: 5,
            ul_ues_per_cell: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarqSection {
    /// Transmission attempts per transport block, first included.
    pub max_attempts: u32,
    /// Symbols between a failed attempt and the earliest retransmission.
    pub rtt_symbols: u32,
}

impl Default for HarqSection {
    fn default() -> Self {
        HarqSection {
            max_attempts: 4,
            rtt_symbols: 14,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoordinationSection {
    /// Precoder signaling granularity for the map exchange.
    pub pmi: PmiMode,
    /// Covariance conditioning mode for the suppression scheme.
    pub conditioning: ConditioningMode,
    /// Coordination-set radius as a multiple of the inter-site distance.
    pub radius_factor: f64,
    /// Projector rank cap: strongest aggressors kept.
    pub max_aggressors: u32,
    /// Pre-avoidance: population share eligible for restriction.
    pub restricted_quartile: f64,
    /// Pre-avoidance: only users below this wideband SNR are restricted.
    pub quality_floor_db: f64,
}

impl Default for CoordinationSection {
    fn default() -> Self {
        CoordinationSection {
            pmi: PmiMode::Quantized(4),
            conditioning: ConditioningMode::Complement,
            radius_factor: 1.5,
            max_aggressors: 3,
            restricted_quartile: 0.25,
            quality_floor_db: 15.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub scheme: Scheme,
    pub seed: u64,
    pub duration_s: f64,
    /// Target outage probability for the latency quantile.
    pub outage_percentile: f64,
    /// Keep per-packet terminal records in the KPI store.
    pub record_packets: bool,
    /// Record per-evaluation scheme-nesting SINR triples on UL decodes.
    pub record_nesting: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            scheme: Scheme::NcTdd,
            seed: 1,
            duration_s: 2.0,
            outage_percentile: 1e-2,
            record_packets: false,
            record_nesting: false,
        }
    }
}

/// Full run configuration. An empty config file yields these defaults:
/// 7 cells at 500 m spacing, 4x2 antennas, 10 MHz (50 PRBs) in 4 sub-bands,
/// 4-symbol windows, 400-bit payloads offered DL:UL = 2:1, alpha = 1 and
/// P0 = -103 dBm open-loop UL power control, Chase HARQ with 4 attempts.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub layout: LayoutSection,
    pub antennas: AntennaSection,
    pub radio: RadioSection,
    pub traffic: TrafficSection,
    pub harq: HarqSection,
    pub coordination: CoordinationSection,
    pub run: RunSection,
    pub power: PowerSetting,
    pub pathloss: LargeScaleModel,
}

impl SimConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let cfg: SimConfig =
            toml::from_str(s).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn dump(&self, path: &Path) -> Result<(), ConfigError> {
        std::fs::write(path, self.to_toml_string())?;
        Ok(())
    }

    /// Range validation; the key in the error names the offending field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.layout.cells == 0 {
            return Err(invalid("layout.cells", "at least one cell"));
        }
        if !(self.layout.isd_m > 0.0) {
            return Err(invalid("layout.isd_m", "positive inter-site distance"));
        }
        if !(self.layout.min_bs_ue_distance_m >= 0.0)
            || self.layout.min_bs_ue_distance_m >= self.layout.isd_m / 2.0
        {
            return Err(invalid(
                "layout.min_bs_ue_distance_m",
                "must sit inside the cell radius",
            ));
        }
        if self.antennas.bs == 0 {
            return Err(invalid("antennas.bs", "at least one BS antenna"));
        }
        if self.antennas.ue == 0 {
            return Err(invalid("antennas.ue", "at least one UE antenna"));
        }
        if self.radio.prbs == 0 {
            return Err(invalid("radio.prbs", "at least one resource block"));
        }
        if self.radio.sub_bands == 0 || self.radio.sub_bands > self.radio.prbs {
            return Err(invalid(
                "radio.sub_bands",
                "between 1 and the PRB count",
            ));
        }
        if self.radio.tti_symbols == 0 || self.radio.tti_symbols > 14 {
            return Err(invalid("radio.tti_symbols", "between 1 and 14"));
        }
        if !(self.radio.mcs_bler_target > 0.0 && self.radio.mcs_bler_target < 1.0) {
            return Err(invalid("radio.mcs_bler_target", "in (0, 1)"));
        }
        if !(self.radio.mcs_slope_per_db > 0.0) {
            return Err(invalid("radio.mcs_slope_per_db", "positive slope"));
        }
        if self.traffic.payload_bits == 0 {
            return Err(invalid("traffic.payload_bits", "at least one bit"));
        }
        if !(self.traffic.offered_load_mbps >= 0.0) {
            return Err(invalid("traffic.offered_load_mbps", "non-negative"));
        }
        if !(self.traffic.dl_ul_ratio > 0.0) {
            return Err(invalid("traffic.dl_ul_ratio", "positive ratio"));
        }
        if self.harq.max_attempts == 0 {
            return Err(invalid("harq.max_attempts", "at least one attempt"));
        }
        if self.harq.rtt_symbols == 0 {
            return Err(invalid("harq.rtt_symbols", "at least one symbol"));
        }
        if let PmiMode::Quantized(bits) = self.coordination.pmi {
            if bits == 0 || bits > 10 {
                return Err(invalid("coordination.pmi", "codebook bits in 1..=10"));
            }
        }
        if !(self.coordination.radius_factor > 0.0) {
            return Err(invalid("coordination.radius_factor", "positive factor"));
        }
        if self.coordination.max_aggressors == 0 {
            return Err(invalid("coordination.max_aggressors", "at least one"));
        }
        if !(0.0..=1.0).contains(&self.coordination.restricted_quartile) {
            return Err(invalid("coordination.restricted_quartile", "in [0, 1]"));
        }
        if !(self.run.duration_s > 0.0) {
            return Err(invalid("run.duration_s", "positive duration"));
        }
        if !(self.run.outage_percentile > 0.0 && self.run.outage_percentile < 1.0) {
            return Err(invalid("run.outage_percentile", "in (0, 1)"));
        }
        Ok(())
    }

    /// Simulated slots: one slot is 0.5 ms at 30 kHz spacing.
    pub fn total_slots(&self) -> u64 {
        (self.run.duration_s * 2000.0).ceil() as u64
    }

    /// PRBs of each sub-band; remainders go to the lowest sub-bands.
    pub fn subband_prbs(&self) -> Vec<u32> {
        let s = self.radio.sub_bands;
        let base = self.radio.prbs / s;
        let extra = self.radio.prbs % s;
        (0..s).map(|i| base + u32::from(i < extra)).collect()
    }

    /// Per-user arrival rate in Hz for a direction, from the per-cell
    /// offered load split DL:UL.
    pub fn arrival_rate_hz(&self, direction: crate::topology::Direction) -> f64 {
        use crate::topology::Direction;
        let total_bps = self.traffic.offered_load_mbps * 1e6;
        let r = self.traffic.dl_ul_ratio;
        let (share, users) = match direction {
            Direction::Dl => (r / (1.0 + r), self.traffic.dl_ues_per_cell),
            Direction::Ul => (1.0 / (1.0 + r), self.traffic.ul_ues_per_cell),
        };
        if users == 0 {
            return 0.0;
        }
        total_bps * share / (self.traffic.payload_bits as f64 * users as f64)
    }

    /// Bits accounted per signaled map entry's precoder index. The exact
    /// (diagnostic) mode is costed at the default 4-bit codebook a real
    /// deployment would signal.
    pub fn pmi_accounting_bits(&self) -> u8 {
        match self.coordination.pmi {
            PmiMode::Quantized(b) => b,
            PmiMode::Perfect => 4,
        }
    }

    /// FNV-1a hash of the canonical text form; stored in KPI output so
    /// results stay traceable to the exact configuration.
    pub fn config_hash(&self) -> String {
        let mut h: u64 = 0xcbf29ce484222325;
        for byte in self.to_toml_string().bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}
