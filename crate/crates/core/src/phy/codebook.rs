//! Dominant-direction precoding and DFT-codebook PMI quantization.

use super::PhyError;
use crate::linalg::{CMat, CVec, C64};

/// Oversampled-DFT codebook: `2^bits` unit-norm beams over `num_ports`
/// antennas. Coarser books are exact subsets of finer ones (entry `m` of a
/// `b`-bit book equals entry `4m` of a `b+2`-bit book), so refining the
/// codebook never loses alignment.
#[derive(Debug, Clone)]
pub struct PmiCodebook {
    pub num_ports: usize,
    pub bits: u8,
    entries: Vec<CVec>,
}

impl PmiCodebook {
    pub fn dft(num_ports: usize, bits: u8) -> Self {
        assert!(num_ports > 0 && bits > 0 && bits <= 16);
        let size = 1usize << bits;
        let scale = 1.0 / (num_ports as f64).sqrt();
        let entries = (0..size)
            .map(|m| {
                let mut v = CVec::zeros(num_ports);
                for i in 0..num_ports {
                    let phase = std::f64::consts::TAU * (i * m) as f64 / size as f64;
                    v[i] = C64::new(scale * phase.cos(), scale * phase.sin());
                }
                v
            })
            .collect();
        PmiCodebook {
            num_ports,
            bits,
            entries,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, index: usize) -> &CVec {
        &self.entries[index]
    }
}

/// Dominant right singular direction of the channel: the unit-norm
/// single-stream precoder maximizing received power. Power iteration on
/// `H^H H` with a deterministic start and canonical phase (largest entry made
/// real positive), so equal inputs give bit-equal outputs.
pub fn make_precoder(channel: &CMat) -> Result<CVec, PhyError> {
    let n = channel.cols();
    if n == 0 || channel.rows() == 0 {
        return Err(PhyError::ZeroChannel);
    }
    let a = channel.hermitian().mul(channel);
    let trace = a.trace_real();
    if !(trace > 0.0) || !trace.is_finite() {
        return Err(PhyError::ZeroChannel);
    }
    // Start from the column with the largest diagonal entry; if the iteration
    // stalls (start orthogonal to the dominant space), retry from each
    // canonical basis vector and keep the best Rayleigh quotient.
    let mut best: Option<(f64, CVec)> = None;
    let mut starts: Vec<usize> = Vec::with_capacity(n + 1);
    let j0 = (0..n)
        .max_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap())
        .unwrap();
    starts.push(j0);
    starts.extend((0..n).filter(|&j| j != j0));
    for &j in &starts {
        if let Some(x) = power_iterate(&a, j) {
            let lam = rayleigh(&a, &x);
            match &best {
                Some((b, _)) if lam <= *b * (1.0 + 1e-12) => {}
                _ => best = Some((lam, x)),
            }
            // The deterministic start almost always converges to the top
            // direction; extra starts only matter for exact degeneracies.
            if best.as_ref().unwrap().0 >= trace / n as f64 {
                break;
            }
        }
    }
    let (_, x) = best.ok_or(PhyError::ZeroChannel)?;
    Ok(canonical_phase(x))
}

fn power_iterate(a: &CMat, start_col: usize) -> Option<CVec> {
    let n = a.cols();
    let mut x = CVec::zeros(n);
    x[start_col] = C64::new(1.0, 0.0);
    let mut lam_prev = rayleigh(a, &x);
    for _ in 0..2000 {
        let y = a.mul_vec(&x);
        let norm = y.norm();
        if norm <= f64::MIN_POSITIVE {
            return None;
        }
        x = y.scale(C64::new(1.0 / norm, 0.0));
        let lam = rayleigh(a, &x);
        if (lam - lam_prev).abs() <= 1e-14 * lam.max(f64::MIN_POSITIVE) {
            return Some(x);
        }
        lam_prev = lam;
    }
    Some(x)
}

fn rayleigh(a: &CMat, x: &CVec) -> f64 {
    x.inner(&a.mul_vec(x)).re / x.norm_sq().max(f64::MIN_POSITIVE)
}

/// Rotate a unit vector so its largest-magnitude entry is real positive.
fn canonical_phase(v: CVec) -> CVec {
    let k = (0..v.dim())
        .max_by(|&i, &j| v[i].norm_sqr().partial_cmp(&v[j].norm_sqr()).unwrap())
        .unwrap();
    let mag = v[k].norm();
    if mag <= f64::MIN_POSITIVE {
        return v;
    }
    let rot = v[k].conj() / C64::new(mag, 0.0);
    let rotated = v.scale(rot);
    let norm = rotated.norm();
    rotated.scale(C64::new(1.0 / norm, 0.0))
}

/// Closest codebook entry by correlation `|c^H v|`; ties break to the lowest
/// index.
pub fn quantize_pmi(v: &CVec, codebook: &PmiCodebook) -> Result<usize, PhyError> {
    if v.dim() != codebook.num_ports {
        return Err(PhyError::DimensionMismatch(format!(
            "vector dim {} vs codebook ports {}",
            v.dim(),
            codebook.num_ports
        )));
    }
    let mut best_idx = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    for (i, c) in codebook.entries.iter().enumerate() {
        let val = c.inner(v).norm_sqr();
        if val > best_val {
            best_val = val;
            best_idx = i;
        }
    }
    Ok(best_idx)
}
