//! Interference covariance assembly, the LMMSE-IRC receive filter, and
//! post-combining SIR/SINR evaluation.
//!
//! Covariance contributions are tagged by source and by class (same-link vs
//! cross-link) so evaluation variants can delete term groups without
//! rebuilding the scenario. Effective vectors passed around here already
//! carry their amplitude: `g = sqrt(tx power x large-scale gain) * H * w`.

use crate::linalg::{hermitian_solve, CMat, CVec};
use crate::topology::Node;
use serde::{Deserialize, Serialize};

/// Interference class of a covariance contributor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterfererClass {
    /// Same transmission direction as the victim link (other cells' co-channel
    /// transmitters of the same kind).
    SameLink,
    /// Opposite direction: BS-to-BS or UE-to-UE leakage under dynamic duplexing.
    CrossLink,
}

/// One rank-one contribution `g g^H` with provenance.
#[derive(Debug, Clone)]
pub struct CovContrib {
    pub source: Node,
    pub class: InterfererClass,
    /// Effective receive vector including amplitude.
    pub vector: CVec,
}

/// How the covariance is assembled from its contributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceMode {
    /// Sum of per-term outer products (standard, positive semidefinite).
    #[default]
    PerTerm,
    /// Sum the vectors first, then take one outer product. Kept for
    /// comparison; the result is rank one and makes IRC degenerate.
    SumThenOuter,
}

/// Tagged interference covariance for one victim receiver on one sub-band.
#[derive(Debug, Clone)]
pub struct InterferenceCovariance {
    dim: usize,
    mode: CovarianceMode,
    contribs: Vec<CovContrib>,
}

impl InterferenceCovariance {
    pub fn new(dim: usize, mode: CovarianceMode) -> Self {
        InterferenceCovariance {
            dim,
            mode,
            contribs: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode(&self) -> CovarianceMode {
        self.mode
    }

    pub fn contributors(&self) -> &[CovContrib] {
        &self.contribs
    }

    pub fn push(&mut self, contrib: CovContrib) {
        assert_eq!(contrib.vector.dim(), self.dim, "contributor dim mismatch");
        self.contribs.push(contrib);
    }

    /// New covariance keeping only contributors the predicate accepts.
    pub fn retain(&self, mut keep: impl FnMut(&CovContrib) -> bool) -> Self {
        InterferenceCovariance {
            dim: self.dim,
            mode: self.mode,
            contribs: self.contribs.iter().filter(|c| keep(c)).cloned().collect(),
        }
    }

    /// Assemble the matrix. Per-term mode is Hermitian positive semidefinite
    /// by construction; the literal mode is the single outer product of the
    /// vector sum.
    pub fn matrix(&self) -> CMat {
        let mut r = CMat::zeros(self.dim, self.dim);
        match self.mode {
            CovarianceMode::PerTerm => {
                for c in &self.contribs {
                    r.add_scaled_outer(&c.vector, 1.0);
                }
            }
            CovarianceMode::SumThenOuter => {
                if !self.contribs.is_empty() {
                    let mut sum = CVec::zeros(self.dim);
                    for c in &self.contribs {
                        sum = sum.add(&c.vector);
                    }
                    r.add_scaled_outer(&sum, 1.0);
                }
            }
        }
        r
    }
}

/// LMMSE-IRC receive filter `u = (h h^H + R + sigma^2 I)^{-1} h`.
///
/// When the Hermitian solve reports ill conditioning the matrix is diagonally
/// loaded with an escalating fraction of its mean diagonal and retried; the
/// fallback is logged. The filter scale is arbitrary (SINR is scale
/// invariant); the returned vector is not normalized.
pub fn irc_filter(
    effective_channel: &CVec,
    r: &InterferenceCovariance,
    noise_power: f64,
) -> CVec {
    irc_filter_from_matrix(effective_channel, &r.matrix(), noise_power)
}

pub fn irc_filter_from_matrix(effective_channel: &CVec, r: &CMat, noise_power: f64) -> CVec {
    let n = effective_channel.dim();
    assert_eq!(r.rows(), n, "covariance dim mismatch");
    let mut full = r.clone();
    full.add_scaled_outer(effective_channel, 1.0);
    full.add_scaled_identity(noise_power);
    match hermitian_solve(&full, effective_channel) {
        Ok(u) => u,
        Err(_) => {
            let base = (full.trace_real() / n as f64).max(f64::MIN_POSITIVE);
            for eps in [1e-10, 1e-8, 1e-6, 1e-4] {
                let mut loaded = full.clone();
                loaded.add_scaled_identity(base * eps);
                if let Ok(u) = hermitian_solve(&loaded, effective_channel) {
                    log::warn!("irc_filter: diagonal loading {:e} applied", base * eps);
                    return u;
                }
            }
            log::error!("irc_filter: solve failed at all loadings, using matched filter");
            effective_channel.clone()
        }
    }
}

/// Post-combining ratio mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SinrMode {
    /// Interference-only denominator, capped so an interference-free ratio
    /// stays finite. Cap is linear (default 1e6, i.e. +60 dB).
    Sir { cap_linear: f64 },
    /// Interference plus noise denominator, exact (no cap).
    Sinr,
}

impl SinrMode {
    pub fn sir_default() -> Self {
        SinrMode::Sir { cap_linear: 1e6 }
    }
}

/// The per-link terms entering one post-combining ratio. All vectors carry
/// their amplitudes; `noise_power` is per receive antenna.
#[derive(Debug, Clone)]
pub struct SinrInputs {
    pub desired: CVec,
    pub interferers: Vec<CVec>,
    pub noise_power: f64,
}

/// Post-combining ratio for receive filter `u`: `|u^H d|^2` over the summed
/// interference powers `|u^H g_k|^2`, plus `sigma^2 ||u||^2` in SINR mode.
pub fn post_sinr(u: &CVec, inputs: &SinrInputs, mode: SinrMode) -> f64 {
    let signal = u.inner(&inputs.desired).norm_sqr();
    let interference: f64 = inputs
        .interferers
        .iter()
        .map(|g| u.inner(g).norm_sqr())
        .sum();
    match mode {
        SinrMode::Sir { cap_linear } => {
            if interference <= 0.0 {
                return cap_linear;
            }
            (signal / interference).min(cap_linear)
        }
        SinrMode::Sinr => signal / (interference + inputs.noise_power * u.norm_sq()),
    }
}
