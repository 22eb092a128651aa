//! Empirical entropy, joint entropy, conditional entropy and mutual
//! information over binary symbol sequences. All values are in nats.
//!
//! Estimators are plug-in: cell probabilities are raw frequencies with the
//! `0 ln 0 = 0` convention and no smoothing or bias correction. Subtractive
//! identities (`H(Y|X) = H(X,Y) - H(X)`, `I = H(X)+H(Y)-H(X,Y)`) are the
//! primary computation routes; the `_direct` variants evaluate the defining
//! double sums and exist so the two routes can be checked against each
//! other.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::Bits;
use crate::real::Real;
use crate::store::WaveformStore;

use rayon::prelude::*;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum InfoError {
    #[error("empty sequence has no entropy")]
    EmptySequence,
    #[error("sequence lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("store has no wire named {0:?}")]
    MissingWire(String),
    #[error("waveform too short to encode (needs at least 2 samples)")]
    SequenceTooShort,
}

/// Per-wire clustering point: encoded-transition entropy plus transition
/// probability.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyRecord<F> {
    pub wire: String,
    pub entropy: F,
    pub p_transition: F,
}

/// Entropy of a Bernoulli(p) symbol in nats; maximal (`ln 2`) at p = 0.5,
/// zero at p = 0 and p = 1.
pub fn binary_entropy<F: Real>(p: F) -> F {
    plogp(p) + plogp(F::one() - p)
}

#[inline]
fn plogp<F: Real>(p: F) -> F {
    if p > F::zero() {
        -(p * p.ln())
    } else {
        F::zero()
    }
}

/// Entropy of the empirical {0,1} distribution given `ones` one-symbols out
/// of `len`.
pub fn entropy_from_counts<F: Real>(ones: usize, len: usize) -> F {
    debug_assert!(ones <= len && len > 0);
    let n = F::from_count(len);
    plogp(F::from_count(ones) / n) + plogp(F::from_count(len - ones) / n)
}

/// Empirical entropy of a binary sequence.
pub fn entropy<F: Real>(seq: &Bits) -> Result<F, InfoError> {
    if seq.is_empty() {
        return Err(InfoError::EmptySequence);
    }
    Ok(entropy_from_counts(seq.count_ones(), seq.len()))
}

fn joint_cells(x: &Bits, y: &Bits) -> Result<[usize; 4], InfoError> {
    if x.is_empty() {
        return Err(InfoError::EmptySequence);
    }
    if x.len() != y.len() {
        return Err(InfoError::LengthMismatch(x.len(), y.len()));
    }
    Ok(x.pair_counts(y))
}

/// Empirical joint entropy over the four (x, y) cells.
pub fn joint_entropy<F: Real>(x: &Bits, y: &Bits) -> Result<F, InfoError> {
    let cells = joint_cells(x, y)?;
    let n = F::from_count(x.len());
    Ok(cells
        .iter()
        .map(|&c| plogp(F::from_count(c) / n))
        .sum())
}

/// Conditional entropy `H(y | x)` via the chain rule.
pub fn conditional_entropy<F: Real>(y: &Bits, x: &Bits) -> Result<F, InfoError> {
    Ok(joint_entropy::<F>(x, y)? - entropy::<F>(x)?)
}

/// Conditional entropy evaluated as the defining sum
/// `-sum p(x,y) ln p(y|x)`.
pub fn conditional_entropy_direct<F: Real>(y: &Bits, x: &Bits) -> Result<F, InfoError> {
    let cells = joint_cells(x, y)?; // [n00, n01, n10, n11], first bit = x
    let n = F::from_count(x.len());
    let nx0 = cells[0] + cells[1];
    let nx1 = cells[2] + cells[3];
    let mut h = F::zero();
    for (cell, nx) in [(cells[0], nx0), (cells[1], nx0), (cells[2], nx1), (cells[3], nx1)] {
        if cell > 0 {
            let p_xy = F::from_count(cell) / n;
            let p_y_given_x = F::from_count(cell) / F::from_count(nx);
            h = h - p_xy * p_y_given_x.ln();
        }
    }
    Ok(h)
}

/// Mutual information `I(x; y) = H(x) + H(y) - H(x,y)`.
///
/// Plug-in MI is nonnegative up to rounding; results within 1e-12 of zero
/// are snapped to exactly zero.
pub fn mutual_information<F: Real>(x: &Bits, y: &Bits) -> Result<F, InfoError> {
    let v = entropy::<F>(x)? + entropy::<F>(y)? - joint_entropy::<F>(x, y)?;
    Ok(snap_zero(v))
}

/// Mutual information evaluated as the defining double sum
/// `sum p(x,y) ln( p(x,y) / (p(x) p(y)) )`.
pub fn mutual_information_direct<F: Real>(x: &Bits, y: &Bits) -> Result<F, InfoError> {
    let cells = joint_cells(x, y)?;
    let n = x.len();
    let nx = [cells[0] + cells[1], cells[2] + cells[3]];
    let ny = [cells[0] + cells[2], cells[1] + cells[3]];
    let mut mi = F::zero();
    for xi in 0..2 {
        for yi in 0..2 {
            let c = cells[(xi << 1) | yi];
            if c > 0 {
                let p_xy = F::from_count(c) / F::from_count(n);
                // ratio of exact integer products keeps independent cells at
                // exactly 1.0
                let ratio = (F::from_count(c) * F::from_count(n))
                    / (F::from_count(nx[xi]) * F::from_count(ny[yi]));
                mi = mi + p_xy * ratio.ln();
            }
        }
    }
    Ok(snap_zero(mi))
}

fn snap_zero<F: Real>(v: F) -> F {
    if v.abs() < F::from_f64_lossy(1e-12) {
        F::zero()
    } else {
        v
    }
}

/// Builds the clustering points for the named wires: encode transitions,
/// then take the empirical entropy and transition probability of the
/// encoded sequence.
pub fn entropy_records<F: Real>(
    store: &WaveformStore,
    names: &[String],
) -> Result<Vec<EntropyRecord<F>>, InfoError> {
    if store.cycles < 2 {
        return Err(InfoError::SequenceTooShort);
    }
    names
        .par_iter()
        .map(|name| {
            let row = store
                .row_by_name(name)
                .ok_or_else(|| InfoError::MissingWire(name.clone()))?;
            let transitions = row.count_adjacent_diffs();
            let n = row.len() - 1;
            Ok(EntropyRecord {
                wire: name.clone(),
                entropy: entropy_from_counts(transitions, n),
                p_transition: F::from_count(transitions) / F::from_count(n),
            })
        })
        .collect()
}
