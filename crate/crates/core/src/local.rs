//! Local bounds by enumeration of extremal deterministic strategies.
//!
//! The expression is linear in every outcome, so a deterministic optimum only
//! ever uses the extremal outcomes `+-1/2`, whatever the number of spins. For a
//! fixed strategy of Bob, Alice's best reply is `a_i = sign(field_i) / 2` with
//! `field_i = va_i + sum_j w_ij b_j`, which leaves `2^m` candidates to scan.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::{quantum_value, BellInequality, MeasurementSettings};
use crate::error::{Error, Result};

pub const MAX_LOCAL_BOUND_SETTINGS: usize = 26;
pub const MAX_VERTEX_SETTINGS: usize = 13;

const CHUNK: u64 = 1 << 12;

/// Outcome assignment with every entry equal to `+1/2` or `-1/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl DeterministicStrategy {
    /// Bit `k` set means outcome `-1/2` for setting `k`.
    pub fn from_bits(m: usize, alice: u64, bob: u64) -> Self {
        let out = |bits: u64| (0..m).map(|k| half_sign(bits >> k & 1 == 0)).collect();
        Self { a: out(alice), b: out(bob) }
    }

    pub fn value(&self, ineq: &BellInequality) -> f64 {
        ineq.evaluate(&self.a, &self.b, |i, j| self.a[i] * self.b[j])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalBound {
    pub value: f64,
    pub strategy: DeterministicStrategy,
}

fn half_sign(positive: bool) -> f64 {
    if positive {
        0.5
    } else {
        -0.5
    }
}

fn bob_outcomes(m: usize, bits: u64) -> Vec<f64> {
    (0..m).map(|k| half_sign(bits >> k & 1 == 0)).collect()
}

/// Alice's fields and Bob's marginal term for one strategy of Bob, from scratch.
fn fields_for(ineq: &BellInequality, b: &[f64]) -> (Vec<f64>, f64) {
    let m = ineq.settings();
    let fields = (0..m)
        .map(|i| ineq.alice_marginals()[i] + (0..m).map(|j| ineq.w(i, j) * b[j]).sum::<f64>())
        .collect();
    let bob = ineq.bob_marginals().iter().zip(b).map(|(v, x)| v * x).sum();
    (fields, bob)
}

fn best_reply_value(fields: &[f64], bob: f64) -> f64 {
    0.5 * fields.iter().map(|f| f.abs()).sum::<f64>() + bob
}

/// Exact maximum of the expression over local deterministic strategies.
///
/// Ties between Bob strategies go to the lowest index (all `+1/2` first) and
/// `sign(0)` is read as `+1/2`.
pub fn local_bound(ineq: &BellInequality) -> Result<LocalBound> {
    let m = ineq.settings();
    if m > MAX_LOCAL_BOUND_SETTINGS {
        return Err(Error::TooLarge { what: "m", value: m, limit: MAX_LOCAL_BOUND_SETTINGS });
    }
    let total: u64 = 1 << m;
    let chunks = total.div_ceil(CHUNK);

    // Walk Bob's strategies in Gray-code order inside each chunk, so a step
    // flips one outcome and updates Alice's fields in O(m). Fields are rebuilt
    // exactly at every chunk start to keep rounding drift bounded.
    let scan = |chunk: u64| -> (f64, u64) {
        let start = chunk * CHUNK;
        let end = (start + CHUNK).min(total);
        let mut code = start ^ (start >> 1);
        let mut b = bob_outcomes(m, code);
        let (mut fields, mut bob) = fields_for(ineq, &b);
        let mut best = (best_reply_value(&fields, bob), code);
        for pos in start + 1..end {
            let k = pos.trailing_zeros() as usize;
            code ^= 1 << k;
            let delta = -2.0 * b[k];
            b[k] = -b[k];
            for (i, f) in fields.iter_mut().enumerate() {
                *f += ineq.w(i, k) * delta;
            }
            bob += ineq.bob_marginals()[k] * delta;
            let v = best_reply_value(&fields, bob);
            if v > best.0 || (v == best.0 && code < best.1) {
                best = (v, code);
            }
        }
        best
    };

    let pick = |x: (f64, u64), y: (f64, u64)| {
        if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) {
            y
        } else {
            x
        }
    };
    let (_, code) = if chunks > 4 {
        (0..chunks).into_par_iter().map(scan).reduce(|| (f64::NEG_INFINITY, u64::MAX), pick)
    } else {
        (0..chunks).map(scan).fold((f64::NEG_INFINITY, u64::MAX), pick)
    };

    let b = bob_outcomes(m, code);
    let (fields, _) = fields_for(ineq, &b);
    let a: Vec<f64> = fields.iter().map(|&f| half_sign(f >= 0.0)).collect();
    let strategy = DeterministicStrategy { a, b };
    Ok(LocalBound { value: strategy.value(ineq), strategy })
}

/// Correlation vector of one deterministic strategy:
/// `(<a_1>..<a_m>, <b_1>..<b_m>, <a_1 b_1>, <a_1 b_2>, ..., <a_m b_m>)`.
pub fn vertex(m: usize, alice: u64, bob: u64) -> Vec<f64> {
    let s = DeterministicStrategy::from_bits(m, alice, bob);
    let mut v = Vec::with_capacity(2 * m + m * m);
    v.extend_from_slice(&s.a);
    v.extend_from_slice(&s.b);
    for i in 0..m {
        for j in 0..m {
            v.push(s.a[i] * s.b[j]);
        }
    }
    v
}

/// Lazily produces all `2^(2m)` vertices of the local polytope.
pub fn vertices(m: usize) -> Result<impl Iterator<Item = Vec<f64>>> {
    if m > MAX_VERTEX_SETTINGS {
        return Err(Error::TooLarge { what: "m", value: m, limit: MAX_VERTEX_SETTINGS });
    }
    let per_party: u64 = 1 << m;
    Ok((0..per_party).flat_map(move |a| (0..per_party).map(move |b| vertex(m, a, b))))
}

pub fn enumerate_vertices(m: usize) -> Result<Vec<Vec<f64>>> {
    Ok(vertices(m)?.collect())
}

/// Evaluates an inequality on a correlation vector laid out as in [`vertex`].
pub fn evaluate_on_vertex(ineq: &BellInequality, v: &[f64]) -> f64 {
    let m = ineq.settings();
    ineq.evaluate(&v[..m], &v[m..2 * m], |i, j| v[2 * m + i * m + j])
}

/// Quantum value at fixed settings minus the local bound; positive means violation.
pub fn violation_gap(ineq: &BellInequality, settings: &MeasurementSettings, spins: u32) -> Result<f64> {
    let local = match ineq.local_bound() {
        Some(l) => l,
        None => local_bound(ineq)?.value,
    };
    Ok(quantum_value(ineq, settings, spins)? - local)
}
