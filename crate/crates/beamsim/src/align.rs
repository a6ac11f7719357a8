//! Beam-pair search procedures and the loss metric comparing them.
//!
//! Training measurements are noiseless by default (powers are compared
//! directly); an optional per-measurement AWGN knob perturbs only the
//! choice, never the reported power at the chosen pair. Ties always go to
//! the lowest (tx, rx) beam-index pair, which makes the argmax independent
//! of evaluation order.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::array::{dot_conj, Codebook};
use crate::channel::ChannelMatrix;
use crate::error::Error;
use crate::prior::CandidatePairs;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Exhaustive,
    Restricted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentResult {
    pub tx_beam: usize,
    pub rx_beam: usize,
    /// Number of receive-power evaluations performed.
    pub trained_pairs: usize,
    /// True receive power at the returned pair.
    pub best_power: f64,
    pub strategy: Strategy,
}

/// Additive complex Gaussian noise on each training measurement; standard
/// deviation in the scaled amplitude domain. Zero disables it.
#[derive(Debug, Clone)]
pub struct MeasurementNoise {
    pub amplitude_std: f64,
    pub rng: ChaCha8Rng,
}

fn search(
    h: &ChannelMatrix,
    tx_codebook: &Codebook,
    rx_codebook: &Codebook,
    pairs: &[(usize, usize)],
    strategy: Strategy,
    mut noise: Option<&mut MeasurementNoise>,
) -> Result<AlignmentResult> {
    if pairs.is_empty() {
        return Err(match strategy {
            Strategy::Exhaustive => Error::EmptySubset,
            Strategy::Restricted => Error::EmptyCandidates,
        });
    }
    let scale = (h.n_tx() * h.n_rx()) as f64;
    let sqrt_scale = scale.sqrt();
    // H·f per distinct tx beam; identical operations to receive_power
    let mut projected: Vec<Option<Vec<Complex64>>> = vec![None; tx_codebook.len()];
    let mut evaluated = 0usize;
    let mut best: Option<(f64, usize, usize, f64)> = None;
    for &(t, r) in pairs {
        if t >= tx_codebook.len() || r >= rx_codebook.len() {
            return Err(Error::InvalidConfig(format!(
                "beam pair ({t}, {r}) outside the codebooks"
            )));
        }
        if projected[t].is_none() {
            projected[t] = Some(h.apply(tx_codebook.beam(t))?);
        }
        let v = projected[t].as_ref().unwrap();
        let w = rx_codebook.beam(r);
        if w.len() != h.n_rx() {
            return Err(Error::DimensionMismatch {
                expected: h.n_rx(),
                got: w.len(),
            });
        }
        let amp = dot_conj(w.entries(), v);
        let power = amp.norm_sqr() * scale;
        evaluated += 1;
        let measured = match noise.as_deref_mut() {
            Some(n) if n.amplitude_std > 0.0 => {
                let normal = Normal::new(0.0, n.amplitude_std / std::f64::consts::SQRT_2)
                    .expect("positive std");
                let noise_sample =
                    Complex64::new(normal.sample(&mut n.rng), normal.sample(&mut n.rng));
                (amp * sqrt_scale + noise_sample).norm_sqr()
            }
            _ => power,
        };
        let replace = match best {
            None => true,
            Some((m, bt, br, _)) => measured > m || (measured == m && (t, r) < (bt, br)),
        };
        if replace {
            best = Some((measured, t, r, power));
        }
    }
    let (_, tx_beam, rx_beam, best_power) = best.expect("non-empty pair list");
    Ok(AlignmentResult {
        tx_beam,
        rx_beam,
        trained_pairs: evaluated,
        best_power,
        strategy,
    })
}

/// Sweeps every pair in tx_subset × rx_subset and returns the argmax.
pub fn exhaustive_search(
    h: &ChannelMatrix,
    tx_codebook: &Codebook,
    rx_codebook: &Codebook,
    tx_subset: &[usize],
    rx_subset: &[usize],
) -> Result<AlignmentResult> {
    exhaustive_search_with_noise(h, tx_codebook, rx_codebook, tx_subset, rx_subset, None)
}

pub fn exhaustive_search_with_noise(
    h: &ChannelMatrix,
    tx_codebook: &Codebook,
    rx_codebook: &Codebook,
    tx_subset: &[usize],
    rx_subset: &[usize],
    noise: Option<&mut MeasurementNoise>,
) -> Result<AlignmentResult> {
    if tx_subset.is_empty() || rx_subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    let pairs: Vec<(usize, usize)> = tx_subset
        .iter()
        .flat_map(|&t| rx_subset.iter().map(move |&r| (t, r)))
        .collect();
    search(h, tx_codebook, rx_codebook, &pairs, Strategy::Exhaustive, noise)
}

/// Sweeps exactly the predetermined candidate pairs.
pub fn restricted_search(
    h: &ChannelMatrix,
    tx_codebook: &Codebook,
    rx_codebook: &Codebook,
    candidates: &CandidatePairs,
) -> Result<AlignmentResult> {
    restricted_search_with_noise(h, tx_codebook, rx_codebook, candidates, None)
}

pub fn restricted_search_with_noise(
    h: &ChannelMatrix,
    tx_codebook: &Codebook,
    rx_codebook: &Codebook,
    candidates: &CandidatePairs,
    noise: Option<&mut MeasurementNoise>,
) -> Result<AlignmentResult> {
    search(
        h,
        tx_codebook,
        rx_codebook,
        &candidates.pairs,
        Strategy::Restricted,
        noise,
    )
}

/// Receive-power loss of the restricted sweep relative to exhaustive search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLoss {
    /// dB ≥ 0; +∞ records a blockage miss (restricted found no power while
    /// exhaustive did).
    pub db: f64,
    /// Both sweeps measured zero power: no link at all, loss defined as 0.
    pub no_link: bool,
}

pub fn power_loss_db(exhaustive: &AlignmentResult, restricted: &AlignmentResult) -> PowerLoss {
    if exhaustive.best_power == 0.0 && restricted.best_power == 0.0 {
        return PowerLoss { db: 0.0, no_link: true };
    }
    if restricted.best_power == 0.0 {
        return PowerLoss { db: f64::INFINITY, no_link: false };
    }
    PowerLoss {
        db: 10.0 * (exhaustive.best_power / restricted.best_power).log10(),
        no_link: false,
    }
}
