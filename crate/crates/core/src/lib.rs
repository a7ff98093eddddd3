//! System-level simulator for dynamic-TDD cellular networks carrying sporadic
//! low-latency traffic, centered on suppression of BS-to-BS cross-link
//! interference at the uplink receiver via precoder-signaling and orthogonal
//! subspace projection.
//!
//! Layout:
//! - [`linalg`]: small dense complex vectors/matrices, Gram-Schmidt, projectors,
//!   Hermitian solves. Everything downstream builds on these.
//! - [`topology`]: hexagonal cluster layout, user drop, large-scale and
//!   fast-fading channel generation, uplink power control.
//! - [`phy`]: precoding, PMI codebooks, interference covariance, IRC receivers,
//!   post-combining SINR, EESM link mapping, BLER, HARQ combining.
//! - [`csa`]: the coordination scheme, precoder-map signaling with its wire
//!   format, aggressor identification, projector construction, covariance
//!   conditioning.
//! - [`mac`]: traffic generation, TDD slot formats and their per-slot
//!   selection, proportional-fair scheduling, latency accounting.
//! - [`sim`]: the symbol-tick engine, scheme semantics, KPI collection and
//!   serialization, distribution statistics, configuration.
//! - [`runner`]: campaign execution over load/scheme/seed grids and plot-data
//!   extraction.

pub mod csa;
pub mod linalg;
pub mod mac;
pub mod phy;
pub mod rngkey;
pub mod runner;
pub mod sim;
pub mod topology;

pub use linalg::{CMat, CVec, C64};
