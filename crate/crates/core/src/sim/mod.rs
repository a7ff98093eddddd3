//! System-level simulation: run configuration, the deterministic symbol-tick
//! engine implementing the five evaluation schemes, KPI collection, and the
//! summary statistics (ECDF, outage quantiles, capacity).
//!
//! One run is strictly sequential over symbol ticks; every stochastic input
//! is drawn from a keyed stream, so the full KPI output is a pure function
//! of (config, seed). Independent runs share no state and may execute on
//! separate threads.

mod config;
mod engine;
mod kpi;
mod stats;

pub use config::{
    AntennaSection, ConfigError, CoordinationSection, HarqSection, LayoutSection, RadioSection,
    RunSection, Scheme, SimConfig, TrafficSection,
};
pub use engine::run;
pub use kpi::{CellCapacity, KpiCounts, KpiStore, KpiSummary, OutageView, PacketSample};
pub use stats::{ccdf, ecdf, outage_latency, quantile, symmetric_percent, OutageEstimate};
