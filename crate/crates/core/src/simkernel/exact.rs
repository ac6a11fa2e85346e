//! Exact stationary occupancy of one LRU cache under independent Poisson
//! request streams, by solving the Markov chain over ordered cache contents.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};

/// Largest chain accepted.
pub const MAX_EXACT_STATES: u64 = 100_000;
/// Chains up to this size are solved by dense LU; larger ones iterate.
const DENSE_LIMIT: usize = 3000;
const POWER_TOL: f64 = 1e-14;
const POWER_MAX_ITER: usize = 1_000_000;

fn permutations(n: u64, k: u64) -> u64 {
    (n - k + 1..=n).fold(1u64, |acc, x| acc.saturating_mul(x))
}

fn enumerate(active: &[u8], len: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if prefix.len() == len {
        out.push(prefix.clone());
        return;
    }
    for &item in active {
        if !prefix.contains(&item) {
            prefix.push(item);
            enumerate(active, len, prefix, out);
            prefix.pop();
        }
    }
}

fn successor(state: &[u8], item: u8) -> Vec<u8> {
    let mut next = Vec::with_capacity(state.len());
    next.push(item);
    next.extend(state.iter().copied().filter(|&x| x != item));
    next.truncate(state.len());
    next
}

/// Per-item stationary presence probability of an LRU cache of `capacity`
/// items when item `i` is requested at `rates[i]`.
pub fn exact_lru_stationary(rates: &[f64], capacity: usize) -> Result<Vec<f64>> {
    if rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(invalid("rates", "must be finite and >= 0"));
    }
    if capacity == 0 {
        return Err(invalid("Lc", "capacity must be positive"));
    }
    let active: Vec<usize> = (0..rates.len()).filter(|&i| rates[i] > 0.0).collect();
    if capacity >= active.len() {
        return Ok(rates.iter().map(|&r| if r > 0.0 { 1.0 } else { 0.0 }).collect());
    }
    let states_count = permutations(active.len() as u64, capacity as u64);
    if states_count > MAX_EXACT_STATES || active.len() > u8::MAX as usize {
        return Err(Error::StateSpaceTooLarge {
            states: states_count,
            limit: MAX_EXACT_STATES,
        });
    }

    let labels: Vec<u8> = (0..active.len() as u8).collect();
    let mut states = Vec::with_capacity(states_count as usize);
    enumerate(&labels, capacity, &mut Vec::new(), &mut states);
    let index: HashMap<&[u8], usize> = states
        .iter()
        .enumerate()
        .map(|(k, s)| (s.as_slice(), k))
        .collect();

    let mut transitions = Vec::new();
    for (from, s) in states.iter().enumerate() {
        for &label in &labels {
            if s[0] == label {
                continue;
            }
            let to = index[successor(s, label).as_slice()];
            transitions.push((from, to, rates[active[label as usize]]));
        }
    }

    let n = states.len();
    let pi = if n <= DENSE_LIMIT {
        solve_dense(n, &transitions)?
    } else {
        solve_power(n, &transitions)
    };

    let mut rho = vec![0.0; rates.len()];
    for (s, p) in states.iter().zip(&pi) {
        for &label in s {
            rho[active[label as usize]] += p;
        }
    }
    Ok(rho)
}

fn solve_dense(n: usize, transitions: &[(usize, usize, f64)]) -> Result<Vec<f64>> {
    // pi Q = 0 written as Q^T pi^T = 0, with the last equation replaced by
    // the normalization.
    let mut a = DMatrix::<f64>::zeros(n, n);
    for &(from, to, rate) in transitions {
        a[(to, from)] += rate;
        a[(from, from)] -= rate;
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Contract("LRU generator is singular".into()))?;
    Ok(x.iter().map(|v| v.max(0.0)).collect())
}

fn solve_power(n: usize, transitions: &[(usize, usize, f64)]) -> Vec<f64> {
    let mut outflow = vec![0.0; n];
    for &(from, _, rate) in transitions {
        outflow[from] += rate;
    }
    let uniform = outflow.iter().cloned().fold(0.0, f64::max);
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..POWER_MAX_ITER {
        for k in 0..n {
            next[k] = pi[k] * (1.0 - outflow[k] / uniform);
        }
        for &(from, to, rate) in transitions {
            next[to] += pi[from] * rate / uniform;
        }
        let diff: f64 = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if diff < POWER_TOL {
            break;
        }
    }
    pi
}
