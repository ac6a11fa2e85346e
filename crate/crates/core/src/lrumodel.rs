//! Analytical model of a homogeneous fleet of LRU caches.
//!
//! Items are requested with Zipf popularity. Each cache sees item `i` at rate
//! `lambda_i = gamma_i * N * n_copies / n_caches` (every download lands in
//! `n_copies` independent caches), and holds it with the Che occupancy
//! `rho_i = 1 - exp(-lambda_i * t_C)`, where the characteristic time `t_C`
//! solves `sum_i (1 - exp(-lambda_i * t_C)) = L_c`.

use crate::error::{invalid, Result};
use crate::ratecore::DistortionBudget;

/// Relative bracket width at which the characteristic-time solve stops.
const CHE_REL_TOL: f64 = 1e-10;
const CHE_MAX_ITER: usize = 500;

/// Item sizes in bits.
#[derive(Debug, Clone, PartialEq)]
pub enum ItemSizes {
    Uniform(f64),
    PerItem(Vec<f64>),
}

impl ItemSizes {
    pub fn get(&self, index: usize) -> f64 {
        match self {
            ItemSizes::Uniform(b) => *b,
            ItemSizes::PerItem(sizes) => sizes[index],
        }
    }

    pub fn uniform(&self) -> Option<f64> {
        match self {
            ItemSizes::Uniform(b) => Some(*b),
            ItemSizes::PerItem(_) => None,
        }
    }

    /// Multiplies every size by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            ItemSizes::Uniform(b) => ItemSizes::Uniform(b * factor),
            ItemSizes::PerItem(v) => ItemSizes::PerItem(v.iter().map(|b| b * factor).collect()),
        }
    }
}

/// Parameters of the cache network. `cache_capacity` counts items.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub n_users: u64,
    pub n_items: usize,
    pub n_caches: u32,
    pub n_copies: u32,
    pub cache_capacity: usize,
    pub item_size: ItemSizes,
    pub zipf_alpha: f64,
    pub request_rate_per_user: f64,
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 {
            return Err(invalid("N", "need at least one user"));
        }
        if self.n_items == 0 {
            return Err(invalid("M", "need at least one item"));
        }
        if self.n_caches == 0 {
            return Err(invalid("Nc", "need at least one cache"));
        }
        if self.n_copies == 0 || self.n_copies > self.n_caches {
            return Err(invalid(
                "Nbar",
                format!("must lie in [1, Nc={}], got {}", self.n_caches, self.n_copies),
            ));
        }
        if self.cache_capacity == 0 || self.cache_capacity > self.n_items {
            return Err(invalid(
                "Lc",
                format!("must lie in [1, M={}], got {}", self.n_items, self.cache_capacity),
            ));
        }
        if !(self.zipf_alpha.is_finite() && self.zipf_alpha >= 0.0) {
            return Err(invalid("alpha", format!("must be >= 0, got {}", self.zipf_alpha)));
        }
        if !(self.request_rate_per_user.is_finite() && self.request_rate_per_user > 0.0) {
            return Err(invalid(
                "gamma",
                format!("must be > 0, got {}", self.request_rate_per_user),
            ));
        }
        match &self.item_size {
            ItemSizes::Uniform(b) => {
                if !(b.is_finite() && *b >= 0.0) {
                    return Err(invalid("B", format!("must be >= 0, got {b}")));
                }
            }
            ItemSizes::PerItem(sizes) => {
                if sizes.len() != self.n_items {
                    return Err(invalid(
                        "B",
                        format!("{} sizes for {} items", sizes.len(), self.n_items),
                    ));
                }
                if sizes.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
                    return Err(invalid("B", "sizes must be finite and >= 0"));
                }
            }
        }
        Ok(())
    }

    /// Per-cache request rate for an item of popularity `alpha_i` under
    /// `copies` placements per download.
    pub fn per_cache_rate(&self, alpha_i: f64, copies: u32) -> f64 {
        self.request_rate_per_user * alpha_i * self.n_users as f64 * copies as f64
            / self.n_caches as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItemProfile {
    pub popularity: f64,
    pub request_rate_per_user: f64,
    pub per_cache_rate: f64,
    pub occupancy: f64,
}

/// Normalized Zipf popularities `i^-alpha / sum_k k^-alpha`, `i = 1..=m`.
pub fn zipf_popularities(m: usize, alpha: f64) -> Vec<f64> {
    let weights: Vec<f64> = (1..=m).map(|i| (i as f64).powf(-alpha)).collect();
    // summing smallest-first keeps the normalization accurate for large m
    let total: f64 = weights.iter().rev().sum();
    weights.into_iter().map(|w| w / total).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CharacteristicTime {
    Finite(f64),
    /// The cache can hold every item with positive rate.
    AllResident,
}

fn check_rates(rates: &[f64]) -> Result<()> {
    if rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(invalid("rates", "must be finite and >= 0"));
    }
    Ok(())
}

fn che_residual(rates: &[f64], capacity: f64, t: f64) -> (f64, f64) {
    let mut filled = 0.0;
    let mut slope = 0.0;
    for &r in rates {
        let e = (-r * t).exp();
        filled += 1.0 - e;
        slope += r * e;
    }
    (filled - capacity, slope)
}

/// Solves `sum_i (1 - exp(-rate_i * t)) = capacity` for `t > 0`.
///
/// The left side is increasing and concave in `t`, so Newton steps started
/// left of the root stay left and converge monotonically; each step is still
/// checked against a bisection bracket.
pub fn che_characteristic_time(rates: &[f64], capacity: usize) -> Result<CharacteristicTime> {
    check_rates(rates)?;
    let active = rates.iter().filter(|&&r| r > 0.0).count();
    if capacity >= active {
        return Ok(CharacteristicTime::AllResident);
    }
    if capacity == 0 {
        return Ok(CharacteristicTime::Finite(0.0));
    }
    let cap = capacity as f64;
    let total_rate: f64 = rates.iter().sum();

    let mut lo = 0.0;
    let mut hi = cap / total_rate;
    while che_residual(rates, cap, hi).0 < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    let mut t = lo;
    for _ in 0..CHE_MAX_ITER {
        let (f, slope) = che_residual(rates, cap, t);
        if f == 0.0 {
            return Ok(CharacteristicTime::Finite(t));
        }
        if f < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        if hi - lo <= CHE_REL_TOL * hi {
            break;
        }
        let newton = t - f / slope;
        let next = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - t).abs() <= 1e-3 * CHE_REL_TOL * t {
            t = next;
            break;
        }
        t = next;
    }
    Ok(CharacteristicTime::Finite(t))
}

/// Che occupancy per item. Zero-rate items are never resident.
pub fn occupancy(rates: &[f64], capacity: usize) -> Result<Vec<f64>> {
    Ok(occupancy_with_time(rates, capacity)?.0)
}

pub(crate) fn occupancy_with_time(
    rates: &[f64],
    capacity: usize,
) -> Result<(Vec<f64>, CharacteristicTime)> {
    let tc = che_characteristic_time(rates, capacity)?;
    let rho = match tc {
        CharacteristicTime::AllResident => rates
            .iter()
            .map(|&r| if r > 0.0 { 1.0 } else { 0.0 })
            .collect(),
        CharacteristicTime::Finite(t) => rates.iter().map(|&r| -(-r * t).exp_m1()).collect(),
    };
    Ok((rho, tc))
}

/// Popularity, rates and occupancy of every item under `config`.
pub fn item_profiles(config: &NetworkConfig) -> Result<Vec<ItemProfile>> {
    config.validate()?;
    let popularity = zipf_popularities(config.n_items, config.zipf_alpha);
    let rates: Vec<f64> = popularity
        .iter()
        .map(|&a| config.per_cache_rate(a, config.n_copies))
        .collect();
    let rho = occupancy(&rates, config.cache_capacity)?;
    Ok(popularity
        .iter()
        .zip(rates.iter().zip(rho))
        .map(|(&a, (&lambda, rho))| ItemProfile {
            popularity: a,
            request_rate_per_user: config.request_rate_per_user * a,
            per_cache_rate: lambda,
            occupancy: rho,
        })
        .collect())
}

/// Whether an item with occupancy `rho` needs any updates under `budget`.
pub fn item_needs_updates(rho: f64, budget: DistortionBudget) -> bool {
    let (e1, e2) = (budget.eps1(), budget.eps2());
    e1 < rho && rho < 1.0 - e2 && e1 * (1.0 - rho) + e2 * rho < rho * (1.0 - rho)
}

/// Minimum fleet-total update rate for one item held by each of `n_caches`
/// caches with occupancy `rho` and per-cache rate `lambda`.
pub fn item_update_rate(lambda: f64, rho: f64, n_caches: u32, budget: DistortionBudget) -> f64 {
    if !item_needs_updates(rho, budget) {
        return 0.0;
    }
    let (e1, e2) = (budget.eps1(), budget.eps2());
    let miss = 1.0 - rho;
    let bracket = 2.0 - e1 * miss / (rho * (miss - e2)) - e2 * rho / (miss * (rho - e1));
    n_caches as f64 * lambda * miss * bracket
}

#[derive(Debug, Clone, PartialEq)]
pub struct FleetRate {
    pub total: f64,
    pub per_item: Vec<f64>,
    pub profiles: Vec<ItemProfile>,
}

impl FleetRate {
    /// Total update rate per request arriving at the fleet, `R / (N_c lambda)`.
    pub fn per_request(&self, n_caches: u32) -> f64 {
        let lambda: f64 = self.profiles.iter().map(|p| p.per_cache_rate).sum();
        self.total / (n_caches as f64 * lambda)
    }

    /// Total update rate per cache state change (entries plus evictions count
    /// as one change pair).
    pub fn per_change(&self, n_caches: u32) -> Option<f64> {
        let changes: f64 = self
            .profiles
            .iter()
            .map(|p| n_caches as f64 * p.per_cache_rate * (1.0 - p.occupancy))
            .sum();
        (changes > 0.0).then(|| self.total / changes)
    }
}

pub fn fleet_update_rate(config: &NetworkConfig, budget: DistortionBudget) -> Result<FleetRate> {
    let profiles = item_profiles(config)?;
    let per_item: Vec<f64> = profiles
        .iter()
        .map(|p| item_update_rate(p.per_cache_rate, p.occupancy, config.n_caches, budget))
        .collect();
    Ok(FleetRate {
        total: per_item.iter().sum(),
        per_item,
        profiles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratecore::{min_update_rate, OnOffStats};

    fn config(m: usize, lc: usize, alpha: f64) -> NetworkConfig {
        NetworkConfig {
            n_users: 1,
            n_items: m,
            n_caches: 1,
            n_copies: 1,
            cache_capacity: lc,
            item_size: ItemSizes::Uniform(1.0),
            zipf_alpha: alpha,
            request_rate_per_user: 1.0,
        }
    }

    #[test]
    fn zipf_examples() {
        assert_eq!(zipf_popularities(1, 0.9), vec![1.0]);
        let p = zipf_popularities(2, 1.0);
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15 && (p[1] - 1.0 / 3.0).abs() < 1e-15);
        let p = zipf_popularities(4, 0.7);
        let sum: f64 = (1..=4).map(|k| (k as f64).powf(-0.7)).sum();
        assert!((sum - 2.45796).abs() < 1e-5);
        assert!((p[0] - 0.40684).abs() < 1e-5);
        assert!(p.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn che_two_equal_items() {
        match che_characteristic_time(&[1.0, 1.0], 1).unwrap() {
            CharacteristicTime::Finite(t) => assert!((t - 2f64.ln()).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
        let rho = occupancy(&[1.0, 1.0], 1).unwrap();
        assert!((rho[0] - 0.5).abs() < 1e-9 && (rho[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn che_residual_small() {
        let rates = [2.0, 1.0, 1.0];
        let CharacteristicTime::Finite(t) = che_characteristic_time(&rates, 2).unwrap() else {
            panic!()
        };
        let lhs = (1.0 - (-2.0 * t).exp()) + 2.0 * (1.0 - (-t).exp());
        assert!((lhs - 2.0).abs() < 1e-9);
    }

    #[test]
    fn che_all_resident() {
        assert_eq!(
            che_characteristic_time(&[3.0, 2.0, 1.0], 3).unwrap(),
            CharacteristicTime::AllResident
        );
        assert_eq!(occupancy(&[3.0, 2.0, 1.0], 3).unwrap(), vec![1.0; 3]);
        assert_eq!(occupancy(&[3.0, 0.0, 1.0], 2).unwrap(), vec![1.0, 0.0, 1.0]);
        assert!(occupancy(&[1.0, -1.0], 1).is_err());
    }

    #[test]
    fn che_conservation_large_catalog() {
        let alpha = zipf_popularities(100_000, 0.7);
        for lc in [1, 20, 1000, 50_000] {
            let rho = occupancy(&alpha, lc).unwrap();
            let total: f64 = rho.iter().sum();
            assert!((total - lc as f64).abs() < 1e-6 * (lc as f64).max(1.0), "Lc={lc}: {total}");
            assert!(rho.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn item_rate_examples() {
        let b = DistortionBudget::symmetric(0.1).unwrap();
        assert!((item_update_rate(1.0, 0.5, 1, b) - 0.75).abs() < 1e-12);
        assert_eq!(item_update_rate(1.0, 0.05, 4, b), 0.0);
        let z = DistortionBudget::zero();
        assert!((item_update_rate(3.0, 0.2, 5, z) - 2.0 * 5.0 * 3.0 * 0.8).abs() < 1e-12);
    }

    #[test]
    fn bridge_to_single_state_rate() {
        let b = DistortionBudget::new(0.02, 0.05).unwrap();
        for &(lambda, rho, nc) in &[(0.7, 0.3, 3u32), (5.0, 0.8, 10), (0.01, 0.5, 1)] {
            let stats = OnOffStats::from_occupancy(rho, lambda).unwrap();
            let expected = nc as f64 * min_update_rate(stats, b);
            let got = item_update_rate(lambda, rho, nc, b);
            assert!((got - expected).abs() <= 1e-12 * expected, "{got} vs {expected}");
        }
    }

    #[test]
    fn fleet_single_item() {
        let r = fleet_update_rate(&config(1, 1, 0.7), DistortionBudget::symmetric(1e-4).unwrap())
            .unwrap();
        assert_eq!(r.total, 0.0);
    }

    #[test]
    fn fleet_per_request_shape() {
        let small = DistortionBudget::symmetric(1e-4).unwrap();
        let near_two = fleet_update_rate(&config(1000, 2, 0.7), small).unwrap().per_request(1);
        assert!(near_two > 1.8, "{near_two}");
        let mut last = f64::INFINITY;
        for lc in [200, 400, 600, 800, 999] {
            let v = fleet_update_rate(&config(1000, lc, 0.7), small).unwrap().per_request(1);
            assert!(v < last, "Lc={lc}: {v} !< {last}");
            last = v;
        }
        assert!(fleet_update_rate(&config(1000, 1000, 0.7), small).unwrap().total == 0.0);
    }

    #[test]
    fn config_validation() {
        let mut c = config(10, 11, 0.7);
        assert!(c.validate().is_err());
        c.cache_capacity = 5;
        c.n_copies = 2;
        assert!(c.validate().is_err());
        c.n_copies = 1;
        c.request_rate_per_user = 0.0;
        assert!(c.validate().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn normalized_rate_in_range(m in 2usize..300, frac in 0.0f64..1.0, alpha in 0.0f64..1.5, eps in 0.0f64..0.2) {
                let lc = 1 + ((m - 1) as f64 * frac) as usize;
                let r = fleet_update_rate(&config(m, lc, alpha), DistortionBudget::symmetric(eps).unwrap()).unwrap();
                let v = r.per_request(1);
                prop_assert!((0.0..=2.0 + 1e-12).contains(&v));
                prop_assert!(r.profiles.windows(2).all(|w| w[0].occupancy >= w[1].occupancy - 1e-15));
            }

            #[test]
            fn dominance_in_budget(m in 2usize..200, frac in 0.0f64..1.0, alpha in 0.0f64..1.5,
                                   e1 in 0.0f64..0.2, e2 in 0.0f64..0.2, d1 in 0.0f64..0.1, d2 in 0.0f64..0.1) {
                let lc = 1 + ((m - 1) as f64 * frac) as usize;
                let c = config(m, lc, alpha);
                let tight = fleet_update_rate(&c, DistortionBudget::new(e1, e2).unwrap()).unwrap().total;
                let loose = fleet_update_rate(&c, DistortionBudget::new(e1 + d1, e2 + d2).unwrap()).unwrap().total;
                prop_assert!(loose <= tight * (1.0 + 1e-12) + 1e-15);
            }
        }
    }
}
