//! Quadratic Wasserstein distance on the line.
//!
//! In one dimension the monotone rearrangement is the optimal coupling, so
//! `W₂` is the `L²` distance between quantile functions.

use rayon::prelude::*;

use crate::density::{density_to_quantiles, Density, QuantileRep};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// `sqrt((1/M) Σ (X_i − Y_i)²)`.
pub fn w2_distance<T: Real>(a: &QuantileRep<T>, b: &QuantileRep<T>) -> Result<T> {
    w2_positions(a.positions(), b.positions())
}

pub(crate) fn w2_positions<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::MismatchedParticles {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(w2_sq_unchecked(a, b).sqrt())
}

pub(crate) fn w2_sq_unchecked<T: Real>(a: &[T], b: &[T]) -> T {
    let s = a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y));
    s / T::of_usize(a.len())
}

/// Distance between grid densities through `M` shared quantiles.
pub fn w2_distance_density<T: Real>(a: &Density<T>, b: &Density<T>, m: usize) -> Result<T> {
    w2_distance(&density_to_quantiles(a, m)?, &density_to_quantiles(b, m)?)
}

/// Empirical ½-Hölder constant `max_{s<t} W₂(μ_s, μ_t)/√(t − s)`.
pub fn holder_modulus<T: Real>(times: &[T], states: &[QuantileRep<T>]) -> Result<T> {
    if times.len() != states.len() {
        return Err(Error::param("states", "one state per time required"));
    }
    if times.len() < 3 {
        return Err(Error::param(
            "states",
            format!("need at least 3 snapshots, got {}", times.len()),
        ));
    }
    if let Some(s) = states.iter().find(|s| s.len() != states[0].len()) {
        return Err(Error::MismatchedParticles {
            left: states[0].len(),
            right: s.len(),
        });
    }
    let rows: Vec<T> = (0..times.len())
        .into_par_iter()
        .map(|i| {
            let mut best = T::zero();
            for j in i + 1..times.len() {
                let dt = times[j] - times[i];
                if dt > T::zero() {
                    let d = w2_sq_unchecked(states[i].positions(), states[j].positions()).sqrt();
                    best = best.max(d / dt.sqrt());
                }
            }
            best
        })
        .collect();
    Ok(rows.into_iter().fold(T::zero(), T::max))
}
