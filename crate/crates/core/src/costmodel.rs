//! Retrieval cost of a cache fleet with a resolution system.
//!
//! Total cost per second is download cost plus update cost:
//!
//! ```text
//! phi = sum_i N gamma_i B_i ((P_i - rho_i) xi_int + (1 - P_i) xi_ext)
//!     + sum_i R_i l_i xi_up
//! ```
//!
//! where `P_i` is the probability a request is served inside the domain and
//! `l_i` the entropy-coded length of one update packet. Restricting caching
//! to the `i*` most popular items trades download benefit against update
//! overhead; [`optimize_threshold`] picks the best `i*`.

use crate::error::{invalid, Result};
use crate::lrumodel::{
    item_update_rate, occupancy_with_time, zipf_popularities, CharacteristicTime, ItemProfile,
    NetworkConfig,
};
use crate::ratecore::DistortionBudget;

/// Catalog size up to which the threshold scan is exhaustive.
pub const EXHAUSTIVE_SCAN_LIMIT: usize = 100_000;
/// Ratio of the geometric grid used above [`EXHAUSTIVE_SCAN_LIMIT`].
pub const GRID_RATIO: f64 = 1.05;

/// Per-bit costs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostRates {
    pub xi_up: f64,
    pub xi_int: f64,
    pub xi_ext: f64,
}

impl CostRates {
    pub fn new(xi_up: f64, xi_int: f64, xi_ext: f64) -> Result<Self> {
        let rates = Self {
            xi_up,
            xi_int,
            xi_ext,
        };
        rates.validate()?;
        Ok(rates)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.xi_up.is_finite() && self.xi_up >= 0.0) {
            return Err(invalid("xi_up", format!("must be >= 0, got {}", self.xi_up)));
        }
        if !(self.xi_int.is_finite() && self.xi_int >= 0.0) {
            return Err(invalid("xi_int", format!("must be >= 0, got {}", self.xi_int)));
        }
        if !(self.xi_ext.is_finite() && self.xi_ext >= self.xi_int) {
            return Err(invalid(
                "xi_ext",
                format!("must be finite and >= xi_int={}, got {}", self.xi_int, self.xi_ext),
            ));
        }
        Ok(())
    }
}

/// Which end of the internal-service probability band to price with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServiceBound {
    /// `P_i = 1 - (1 - rho_i)^Nc`: the CRS view is never stale.
    Upper,
    /// `P_i = [1 - (1 - rho_i + eps1)^Nc]^+`, raised to at least `rho_i`.
    Lower,
}

/// Bits in one update packet for an item updated with share `beta` of all
/// update events: cache id, entropy-coded item id, and the new state bit.
/// `None` when the item never updates.
pub fn packet_length(n_caches: u32, beta: f64) -> Option<f64> {
    (beta > 0.0).then(|| (n_caches as f64).log2() - beta.log2() + 1.0)
}

/// Update shares `beta_i = lambda_i (1 - rho_i) / sum_k lambda_k (1 - rho_k)`.
pub fn update_shares(profiles: &[ItemProfile]) -> Vec<f64> {
    let churn: Vec<f64> = profiles
        .iter()
        .map(|p| p.per_cache_rate * (1.0 - p.occupancy))
        .collect();
    let total: f64 = churn.iter().sum();
    if total > 0.0 {
        churn.iter().map(|c| c / total).collect()
    } else {
        vec![0.0; churn.len()]
    }
}

/// Bounds on the probability a request for an item is served by some cache
/// in the domain.
pub fn internal_probability_bounds(rho: f64, n_caches: u32, eps1: f64) -> (f64, f64) {
    let n = n_caches as i32;
    let high = 1.0 - (1.0 - rho).powi(n);
    let low = (1.0 - (1.0 - rho + eps1).powi(n)).max(0.0);
    (low, high)
}

/// Per-item ingredients of the cost report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItemCost {
    /// Fleet update rate with `n_copies` independent placements.
    pub update_rate: f64,
    /// Fleet update rate when every download yields a single update.
    pub update_rate_single: f64,
    pub packet_bits: Option<f64>,
    pub beta: f64,
    pub p_low: f64,
    pub p_high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub phi_up_min: f64,
    pub phi_up_max: f64,
    pub phi_dl_low: f64,
    pub phi_dl_high: f64,
    pub phi_low: f64,
    pub phi_high: f64,
    pub per_item: Vec<ItemCost>,
}

/// `sum_i R_i l_i xi_up`, skipping items without a packet length.
pub fn update_cost_sum(rates: &[f64], lengths: &[Option<f64>], xi_up: f64) -> f64 {
    rates
        .iter()
        .zip(lengths)
        .map(|(r, l)| l.map_or(0.0, |l| r * l))
        .sum::<f64>()
        * xi_up
}

fn download_cost_item(requests: f64, size: f64, rho: f64, p: f64, rates: &CostRates) -> f64 {
    let p = p.max(rho);
    requests * size * ((p - rho) * rates.xi_int + (1.0 - p) * rates.xi_ext)
}

/// Update-cost band `(min, max)`. The max uses `n_copies` independent
/// placements per download, the min fully dependent placements (one update).
pub fn update_cost(
    config: &NetworkConfig,
    profiles: &[ItemProfile],
    budget: DistortionBudget,
    rates: &CostRates,
) -> (f64, f64) {
    let items = item_costs(config, profiles, budget);
    band_from_items(&items, rates)
}

fn band_from_items(items: &[ItemCost], rates: &CostRates) -> (f64, f64) {
    let lengths: Vec<Option<f64>> = items.iter().map(|c| c.packet_bits).collect();
    let max: Vec<f64> = items.iter().map(|c| c.update_rate).collect();
    let min: Vec<f64> = items.iter().map(|c| c.update_rate_single).collect();
    (
        update_cost_sum(&min, &lengths, rates.xi_up),
        update_cost_sum(&max, &lengths, rates.xi_up),
    )
}

fn item_costs(
    config: &NetworkConfig,
    profiles: &[ItemProfile],
    budget: DistortionBudget,
) -> Vec<ItemCost> {
    let betas = update_shares(profiles);
    let copies = config.n_copies as f64;
    profiles
        .iter()
        .zip(betas)
        .map(|(p, beta)| {
            let update_rate =
                item_update_rate(p.per_cache_rate, p.occupancy, config.n_caches, budget);
            // Che occupancy is invariant under a uniform rescaling of the
            // rates, so one placement per download keeps rho and divides lambda.
            let update_rate_single = item_update_rate(
                p.per_cache_rate / copies,
                p.occupancy,
                config.n_caches,
                budget,
            );
            let (p_low, p_high) =
                internal_probability_bounds(p.occupancy, config.n_caches, budget.eps1());
            ItemCost {
                update_rate,
                update_rate_single,
                packet_bits: packet_length(config.n_caches, beta),
                beta,
                p_low,
                p_high,
            }
        })
        .collect()
}

/// Download cost bounds `(low, high)`: low prices with the upper bound on
/// `P_i`, high with the lower bound.
pub fn download_cost(
    config: &NetworkConfig,
    profiles: &[ItemProfile],
    rates: &CostRates,
    eps1: f64,
) -> (f64, f64) {
    let users = config.n_users as f64;
    profiles
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |(low, high), (i, p)| {
            let requests = users * p.request_rate_per_user;
            let size = config.item_size.get(i);
            let (p_low, p_high) = internal_probability_bounds(p.occupancy, config.n_caches, eps1);
            (
                low + download_cost_item(requests, size, p.occupancy, p_high, rates),
                high + download_cost_item(requests, size, p.occupancy, p_low, rates),
            )
        })
}

pub fn total_cost(
    config: &NetworkConfig,
    profiles: &[ItemProfile],
    budget: DistortionBudget,
    rates: &CostRates,
) -> Result<CostReport> {
    config.validate()?;
    rates.validate()?;
    if profiles.len() != config.n_items {
        return Err(invalid(
            "profiles",
            format!("{} profiles for {} items", profiles.len(), config.n_items),
        ));
    }
    let per_item = item_costs(config, profiles, budget);
    let (phi_up_min, phi_up_max) = band_from_items(&per_item, rates);
    let (phi_dl_low, phi_dl_high) = download_cost(config, profiles, rates, budget.eps1());
    Ok(CostReport {
        phi_up_min,
        phi_up_max,
        phi_dl_low,
        phi_dl_high,
        phi_low: phi_dl_low + phi_up_min,
        phi_high: phi_dl_high + phi_up_max,
        per_item,
    })
}

/// Cost when only items `1..=i_star` may be cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdCost {
    pub i_star: usize,
    pub phi: f64,
    /// Cost with no caching at all.
    pub phi1: f64,
    /// Saving from caching.
    pub phi2: f64,
    /// Update overhead.
    pub phi3: f64,
}

/// Reusable evaluator for [`threshold_cost`]. Consecutive thresholds reuse
/// the previous characteristic time as a starting point.
pub struct ThresholdEvaluator<'a> {
    config: &'a NetworkConfig,
    budget: DistortionBudget,
    rates: CostRates,
    bound: ServiceBound,
    size: f64,
    popularity: Vec<f64>,
    lambdas: Vec<f64>,
    scratch_rho: Vec<f64>,
}

impl<'a> ThresholdEvaluator<'a> {
    pub fn new(
        config: &'a NetworkConfig,
        budget: DistortionBudget,
        rates: CostRates,
        bound: ServiceBound,
    ) -> Result<Self> {
        config.validate()?;
        rates.validate()?;
        let size = config.item_size.uniform().ok_or_else(|| {
            invalid("B", "threshold optimization needs a uniform item size")
        })?;
        let popularity = zipf_popularities(config.n_items, config.zipf_alpha);
        let lambdas = popularity
            .iter()
            .map(|&a| config.per_cache_rate(a, config.n_copies))
            .collect();
        Ok(Self {
            config,
            budget,
            rates,
            bound,
            size,
            popularity,
            lambdas,
            scratch_rho: Vec::new(),
        })
    }

    pub fn n_items(&self) -> usize {
        self.config.n_items
    }

    pub fn evaluate(&mut self, i_star: usize) -> Result<ThresholdCost> {
        let m = self.config.n_items;
        if i_star > m {
            return Err(invalid("i_star", format!("must lie in [0, M={m}], got {i_star}")));
        }
        let cfg = self.config;
        let traffic = self.size
            * cfg.n_users as f64
            * cfg.request_rate_per_user;
        let phi1 = traffic * self.rates.xi_ext;
        if i_star == 0 {
            return Ok(ThresholdCost {
                i_star,
                phi: phi1,
                phi1,
                phi2: 0.0,
                phi3: 0.0,
            });
        }

        let lambdas = &self.lambdas[..i_star];
        let (rho, _tc): (Vec<f64>, CharacteristicTime) =
            occupancy_with_time(lambdas, cfg.cache_capacity)?;
        self.scratch_rho = rho;
        let rho = &self.scratch_rho;

        let mut served_internal = 0.0;
        let mut served_local = 0.0;
        let mut churn_total = 0.0;
        for i in 0..i_star {
            let (p_low, p_high) =
                internal_probability_bounds(rho[i], cfg.n_caches, self.budget.eps1());
            let p = match self.bound {
                ServiceBound::Upper => p_high,
                ServiceBound::Lower => p_low.max(rho[i]),
            };
            served_internal += self.popularity[i] * p;
            served_local += self.popularity[i] * rho[i];
            churn_total += lambdas[i] * (1.0 - rho[i]);
        }
        let phi2 = traffic * (self.rates.xi_ext - self.rates.xi_int) * served_internal
            + traffic * self.rates.xi_int * served_local;

        let mut overhead = 0.0;
        if churn_total > 0.0 {
            for i in 0..i_star {
                let r = item_update_rate(lambdas[i], rho[i], cfg.n_caches, self.budget);
                if r > 0.0 {
                    let beta = lambdas[i] * (1.0 - rho[i]) / churn_total;
                    if let Some(bits) = packet_length(cfg.n_caches, beta) {
                        overhead += r * bits;
                    }
                }
            }
        }
        let phi3 = self.rates.xi_up * overhead;
        Ok(ThresholdCost {
            i_star,
            phi: phi1 - phi2 + phi3,
            phi1,
            phi2,
            phi3,
        })
    }
}

pub fn threshold_cost(
    config: &NetworkConfig,
    budget: DistortionBudget,
    rates: CostRates,
    i_star: usize,
    bound: ServiceBound,
) -> Result<ThresholdCost> {
    ThresholdEvaluator::new(config, budget, rates, bound)?.evaluate(i_star)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdPlan {
    pub i_star: usize,
    pub phi_at: f64,
    pub phi_no_cache: f64,
    pub benefit: f64,
    pub overhead: f64,
    /// Cost when every item may be cached (`i* = M`).
    pub phi_all: f64,
    /// Every threshold evaluated, ascending.
    pub candidates: Vec<ThresholdCost>,
    /// Optimum when pricing with the lower bound on `P_i`.
    pub lower_bound: (usize, f64),
    /// Whether every `i*` in `0..=M` was evaluated.
    pub exhaustive: bool,
}

impl ThresholdPlan {
    /// Relative saving of the optimum over caching everything.
    pub fn reduction(&self) -> f64 {
        if self.phi_all > 0.0 {
            1.0 - self.phi_at / self.phi_all
        } else {
            0.0
        }
    }
}

/// Thresholds to evaluate for a catalog of `m` items.
pub fn scan_points(m: usize) -> Vec<usize> {
    if m <= EXHAUSTIVE_SCAN_LIMIT {
        return (0..=m).collect();
    }
    let mut points = vec![0usize];
    let mut x = 1.0f64;
    while (x as usize) < m {
        let p = x as usize;
        if *points.last().unwrap() != p {
            points.push(p);
        }
        x = (x * GRID_RATIO).max(x + 1.0);
    }
    points.push(m);
    points
}

fn argmin(costs: &[ThresholdCost]) -> usize {
    // strict comparison keeps the smallest i* on ties
    let mut best = 0;
    for (k, c) in costs.iter().enumerate() {
        if c.phi < costs[best].phi {
            best = k;
        }
    }
    best
}

fn scan(evaluator: &mut ThresholdEvaluator<'_>) -> Result<(Vec<ThresholdCost>, bool)> {
    let m = evaluator.n_items();
    let grid = scan_points(m);
    let exhaustive = grid.len() == m + 1;
    let mut costs = grid
        .iter()
        .map(|&i| evaluator.evaluate(i))
        .collect::<Result<Vec<_>>>()?;
    if !exhaustive {
        let best = argmin(&costs);
        let lo = grid[best.saturating_sub(2)];
        let hi = grid[(best + 2).min(grid.len() - 1)];
        for i in lo..=hi {
            if grid.binary_search(&i).is_err() {
                costs.push(evaluator.evaluate(i)?);
            }
        }
        costs.sort_by_key(|c| c.i_star);
    }
    Ok((costs, exhaustive))
}

/// Finds the caching threshold minimizing total cost (upper bound on `P_i`),
/// and reports the lower-bound optimum alongside.
pub fn optimize_threshold(
    config: &NetworkConfig,
    budget: DistortionBudget,
    rates: CostRates,
) -> Result<ThresholdPlan> {
    let mut upper = ThresholdEvaluator::new(config, budget, rates, ServiceBound::Upper)?;
    let (candidates, exhaustive) = scan(&mut upper)?;
    let best = candidates[argmin(&candidates)];
    let phi_all = candidates.last().expect("i* = M is always scanned").phi;

    let mut lower = ThresholdEvaluator::new(config, budget, rates, ServiceBound::Lower)?;
    let (lower_costs, _) = scan(&mut lower)?;
    let lower_best = lower_costs[argmin(&lower_costs)];

    Ok(ThresholdPlan {
        i_star: best.i_star,
        phi_at: best.phi,
        phi_no_cache: best.phi1,
        benefit: best.phi2,
        overhead: best.phi3,
        phi_all,
        candidates,
        lower_bound: (lower_best.i_star, lower_best.phi),
        exhaustive,
    })
}
