//! Discrete-event simulation of an LRU cache fleet whose presence view in
//! the CRS is maintained by the stochastic update policy.
//!
//! Each run replays a request stream twice. The first pass estimates the
//! time-weighted occupancy `rho_hat_i` of every item; the second pass drives
//! the per-item [`UpdatePolicy`] (from `rho_hat_i` or the Che occupancy) and
//! measures how long the view disagrees with the caches.
//!
//! A Bernoulli static view is redrawn at every CRS lookup, so its mismatch
//! time is accrued at its expected value.

mod exact;
mod lru;

pub use exact::{exact_lru_stationary, MAX_EXACT_STATES};
pub use lru::{lru_apply, LruCache, LruOutcome};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::costmodel::{packet_length, CostRates};
use crate::error::{invalid, Error, Result};
use crate::lrumodel::{item_profiles, NetworkConfig};
use crate::ratecore::{policy_for_occupancy, DistortionBudget, StaticAssignment, UpdatePolicy};
use crate::workload::{check_sorted, RequestEvent};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub network: NetworkConfig,
    pub rates: CostRates,
    /// Whether serving an internal fetch counts as a use at the serving cache.
    pub refresh_on_internal: bool,
    /// Keep a log of every state and view change.
    pub record_log: bool,
}

impl SimConfig {
    pub fn new(network: NetworkConfig, rates: CostRates) -> Self {
        Self {
            network,
            rates,
            refresh_on_internal: true,
            record_log: false,
        }
    }
}

/// Where the per-item occupancy feeding the update policy comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySource {
    /// Che occupancy of the configured Zipf workload.
    Analytic,
    /// Occupancy measured in the first replay.
    Empirical,
    /// Caller-supplied occupancy per item.
    Occupancy(Vec<f64>),
    /// The same policy for every item.
    Override(UpdatePolicy),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogKind {
    Enter,
    Leave,
    /// The view was set to this value.
    View(bool),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEntry {
    pub time: f64,
    /// 0-based cache index.
    pub cache: u32,
    /// 0-based item index.
    pub item: u32,
    pub kind: LogKind,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ItemStats {
    pub rho_hat: f64,
    /// Fraction of cache-time with the item present but reported absent.
    pub d1: f64,
    /// Fraction of cache-time with the item absent but reported present.
    pub d2: f64,
    pub changes: u64,
    pub updates: u64,
    pub local: u64,
    pub internal: u64,
    pub external: u64,
    pub misdirections: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub seed: u64,
    pub items: Vec<ItemStats>,
    /// Time at which measurement started (after the warm-up requests).
    pub measure_start: f64,
    pub horizon: f64,
    pub requests: u64,
    pub changes: u64,
    pub updates: u64,
    pub local: u64,
    pub internal: u64,
    pub external: u64,
    pub misdirections: u64,
    /// Bits-weighted cost per second of downloads and updates.
    pub realized_cost: f64,
    /// Policy applied to each item.
    pub policies: Vec<UpdatePolicy>,
    pub log: Vec<LogEntry>,
}

impl SimReport {
    fn empty(n_items: usize, seed: u64) -> Self {
        Self {
            seed,
            items: vec![ItemStats::default(); n_items],
            measure_start: 0.0,
            horizon: 0.0,
            requests: 0,
            changes: 0,
            updates: 0,
            local: 0,
            internal: 0,
            external: 0,
            misdirections: 0,
            realized_cost: 0.0,
            policies: Vec::new(),
            log: Vec::new(),
        }
    }

    pub fn updates_per_request(&self) -> f64 {
        ratio(self.updates, self.requests)
    }

    /// Updates sent per cache state change.
    pub fn updates_per_change(&self) -> f64 {
        ratio(self.updates, self.changes)
    }

    /// `(local, internal, external)` shares of measured requests.
    pub fn service_fractions(&self) -> (f64, f64, f64) {
        (
            ratio(self.local, self.requests),
            ratio(self.internal, self.requests),
            ratio(self.external, self.requests),
        )
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn check_events(events: &[RequestEvent], n_items: usize) -> Result<()> {
    check_sorted(events)?;
    if let Some(e) = events
        .iter()
        .find(|e| e.item == 0 || e.item as usize > n_items || e.requester == 0)
    {
        return Err(out_of_range(e, n_items));
    }
    Ok(())
}

fn out_of_range(e: &RequestEvent, n_items: usize) -> Error {
    invalid(
        "trace",
        format!(
            "event at t={} has item {} outside [1, M={n_items}] or requester 0",
            e.time, e.item
        ),
    )
}

struct Replay<'a> {
    config: &'a SimConfig,
    n_items: usize,
    caches: Vec<LruCache>,
    present: Vec<bool>,
    view: Vec<bool>,
    since: Vec<f64>,
    wrong_up: Vec<f64>,
    wrong_down: Vec<f64>,
    up_time: Vec<f64>,
    policies: Vec<UpdatePolicy>,
    placement: ChaCha8Rng,
    coins: ChaCha8Rng,
    measure_from: f64,
    measuring: bool,
    report: SimReport,
}

impl<'a> Replay<'a> {
    fn new(config: &'a SimConfig, policies: Vec<UpdatePolicy>, seed: u64) -> Self {
        let net = &config.network;
        let (m, nc) = (net.n_items, net.n_caches as usize);
        let placement = ChaCha8Rng::seed_from_u64(seed);
        let mut coins = ChaCha8Rng::seed_from_u64(seed);
        coins.set_stream(1);
        let mut replay = Self {
            config,
            n_items: m,
            caches: (0..nc).map(|_| LruCache::new(net.cache_capacity, m)).collect(),
            present: vec![false; nc * m],
            view: vec![false; nc * m],
            since: vec![0.0; nc * m],
            wrong_up: vec![0.0; m],
            wrong_down: vec![0.0; m],
            up_time: vec![0.0; m],
            policies,
            placement,
            coins,
            measure_from: f64::INFINITY,
            measuring: false,
            report: SimReport::empty(m, seed),
        };
        replay.initial_views();
        replay
    }

    fn initial_views(&mut self) {
        let nc = self.caches.len();
        for c in 0..nc {
            for i in 0..self.n_items {
                let v = match self.policies[i].static_assignment() {
                    Some(StaticAssignment::Constant(v)) => v,
                    // drawn afresh at every lookup instead
                    Some(StaticAssignment::Bernoulli(_)) | None => false,
                };
                if v {
                    self.view[c * self.n_items + i] = true;
                    self.log(0.0, c, i, LogKind::View(true));
                }
            }
        }
    }

    fn log(&mut self, time: f64, cache: usize, item: usize, kind: LogKind) {
        if self.config.record_log {
            self.report.log.push(LogEntry {
                time,
                cache: cache as u32,
                item: item as u32,
                kind,
            });
        }
    }

    fn flush(&mut self, k: usize, now: f64) {
        let start = self.since[k].max(self.measure_from);
        if now > start {
            let i = k % self.n_items;
            let dt = now - start;
            if self.present[k] {
                self.up_time[i] += dt;
            }
            match (self.bernoulli_view(i), self.present[k], self.view[k]) {
                // an independent Bernoulli view is wrong for the expected
                // share of the interval
                (Some(q), true, _) => self.wrong_up[i] += dt * (1.0 - q),
                (Some(q), false, _) => self.wrong_down[i] += dt * q,
                (None, true, false) => self.wrong_up[i] += dt,
                (None, false, true) => self.wrong_down[i] += dt,
                _ => {}
            }
        }
        self.since[k] = now;
    }

    fn bernoulli_view(&self, item: usize) -> Option<f64> {
        match self.policies[item].static_assignment() {
            Some(StaticAssignment::Bernoulli(q)) => Some(q),
            _ => None,
        }
    }

    /// What the CRS reports for a (cache, item) pair at a lookup.
    fn lookup(&mut self, k: usize) -> bool {
        match self.bernoulli_view(k % self.n_items) {
            Some(q) => self.coins.random_bool(q),
            None => self.view[k],
        }
    }

    fn change(&mut self, now: f64, cache: usize, item: usize, entering: bool) {
        let k = cache * self.n_items + item;
        self.flush(k, now);
        self.present[k] = entering;
        self.log(
            now,
            cache,
            item,
            if entering { LogKind::Enter } else { LogKind::Leave },
        );
        let policy = self.policies[item];
        let u = if entering { policy.u1() } else { policy.u2() };
        let announced = u > 0.0 && self.coins.random_bool(u);
        if announced {
            self.view[k] = entering;
            self.log(now, cache, item, LogKind::View(entering));
        }
        if self.measuring {
            let stats = &mut self.report.items[item];
            stats.changes += 1;
            self.report.changes += 1;
            if announced {
                stats.updates += 1;
                self.report.updates += 1;
            }
        }
    }

    fn access(&mut self, now: f64, cache: usize, item: usize) {
        if let LruOutcome::Inserted { evicted } = lru_apply(&mut self.caches[cache], item as u32) {
            if let Some(victim) = evicted {
                self.change(now, cache, victim as usize, false);
            }
            self.change(now, cache, item, true);
        }
    }

    fn place(&mut self, now: f64, home: usize, item: usize) {
        self.access(now, home, item);
        let nc = self.caches.len();
        let extra = self.config.network.n_copies as usize - 1;
        if extra == 0 {
            return;
        }
        let others = sample(&mut self.placement, nc - 1, extra);
        for k in others.iter() {
            let target = if k >= home { k + 1 } else { k };
            self.access(now, target, item);
        }
    }

    fn request(&mut self, event: &RequestEvent) {
        let now = event.time;
        let item = event.item as usize - 1;
        let nc = self.caches.len();
        let home = (event.requester as usize - 1) % nc;
        let m = self.n_items;

        if self.present[home * m + item] {
            self.caches[home].touch(item as u32);
            if self.measuring {
                self.report.items[item].local += 1;
            }
            return;
        }
        let mut server = None;
        let mut stale = false;
        for c in (0..nc).filter(|&c| c != home) {
            let k = c * m + item;
            if self.lookup(k) {
                if self.present[k] {
                    server = Some(c);
                    break;
                }
                stale = true;
            }
        }
        if let Some(c) = server {
            if self.config.refresh_on_internal {
                self.caches[c].touch(item as u32);
            }
        }
        if self.measuring {
            let stats = &mut self.report.items[item];
            match server {
                Some(_) => stats.internal += 1,
                None => {
                    stats.external += 1;
                    if stale {
                        stats.misdirections += 1;
                    }
                }
            }
        }
        self.place(now, home, item);
    }

    fn run(mut self, events: impl IntoIterator<Item = RequestEvent>) -> Result<SimReport> {
        let net = &self.config.network;
        let warmup = net.cache_capacity.saturating_mul(net.n_caches as usize);
        let mut count = 0usize;
        let mut end = 0.0;
        for event in events {
            if count > 0 && (event.time < end || event.time.is_nan()) {
                return Err(Error::UnsortedStream {
                    index: count,
                    time: event.time,
                    previous: end,
                });
            }
            if event.item == 0 || event.item as usize > self.n_items || event.requester == 0 {
                return Err(out_of_range(&event, self.n_items));
            }
            if count == warmup {
                self.measure_from = event.time;
                self.measuring = true;
            }
            self.request(&event);
            end = event.time;
            count += 1;
        }
        for k in 0..self.present.len() {
            self.flush(k, end);
        }
        Ok(self.finish(count.saturating_sub(warmup) as u64, end))
    }

    fn finish(mut self, requests: u64, end: f64) -> SimReport {
        let horizon = if self.measuring { end - self.measure_from } else { 0.0 };
        let scale = self.caches.len() as f64 * horizon;
        let r = &mut self.report;
        r.measure_start = if self.measuring { self.measure_from } else { end };
        r.horizon = horizon;
        r.requests = requests;
        for (i, s) in r.items.iter_mut().enumerate() {
            if scale > 0.0 {
                s.rho_hat = self.up_time[i] / scale;
                s.d1 = self.wrong_up[i] / scale;
                s.d2 = self.wrong_down[i] / scale;
            }
            r.local += s.local;
            r.internal += s.internal;
            r.external += s.external;
            r.misdirections += s.misdirections;
        }
        if horizon > 0.0 {
            let rates = self.config.rates;
            let nc = self.config.network.n_caches;
            let mut bits = 0.0;
            for (i, s) in r.items.iter().enumerate() {
                let size = self.config.network.item_size.get(i);
                bits += size * (s.internal as f64 * rates.xi_int + s.external as f64 * rates.xi_ext);
                let beta = ratio(s.updates, r.updates);
                if let Some(len) = packet_length(nc, beta) {
                    bits += s.updates as f64 * len * rates.xi_up;
                }
            }
            r.realized_cost = bits / horizon;
        }
        r.policies = self.policies;
        self.report
    }
}

/// Replays `events` once without update traffic and returns the measured
/// per-item occupancy, averaged over caches and taken after warm-up.
pub fn estimate_occupancy(config: &SimConfig, events: &[RequestEvent], seed: u64) -> Result<Vec<f64>> {
    config.network.validate()?;
    check_events(events, config.network.n_items)?;
    let policies = vec![UpdatePolicy::announce_all(); config.network.n_items];
    let mut quiet = config.clone();
    quiet.record_log = false;
    let report = Replay::new(&quiet, policies, seed).run(events.iter().copied())?;
    Ok(report.items.iter().map(|s| s.rho_hat).collect())
}

/// Two-phase simulation: estimate occupancy, then replay under the update
/// policy and measure distortion, update traffic and the service mix.
pub fn run_simulation(
    config: &SimConfig,
    budget: DistortionBudget,
    events: &[RequestEvent],
    source: &PolicySource,
    seed: u64,
) -> Result<SimReport> {
    let net = &config.network;
    net.validate()?;
    config.rates.validate()?;
    check_events(events, net.n_items)?;
    if events.is_empty() {
        return Ok(SimReport::empty(net.n_items, seed));
    }
    let policies = match source {
        PolicySource::Empirical => policies_for(&estimate_occupancy(config, events, seed)?, budget)?,
        other => source_policies(net, budget, other)?,
    };
    Replay::new(config, policies, seed).run(events.iter().copied())
}

fn source_policies(
    net: &NetworkConfig,
    budget: DistortionBudget,
    source: &PolicySource,
) -> Result<Vec<UpdatePolicy>> {
    match source {
        PolicySource::Override(p) => Ok(vec![*p; net.n_items]),
        PolicySource::Analytic => policies_for(
            &item_profiles(net)?.iter().map(|p| p.occupancy).collect::<Vec<_>>(),
            budget,
        ),
        PolicySource::Occupancy(rho) => {
            if rho.len() != net.n_items {
                return Err(invalid(
                    "occupancy",
                    format!("{} values for {} items", rho.len(), net.n_items),
                ));
            }
            policies_for(rho, budget)
        }
        PolicySource::Empirical => Err(invalid(
            "policy",
            "empirical occupancy needs a replayable trace, not a one-shot stream",
        )),
    }
}

/// Single-pass variant of [`run_simulation`] for streams too large to hold
/// in memory. The empirical policy source is not available here.
pub fn run_simulation_stream(
    config: &SimConfig,
    budget: DistortionBudget,
    events: impl IntoIterator<Item = RequestEvent>,
    source: &PolicySource,
    seed: u64,
) -> Result<SimReport> {
    config.network.validate()?;
    config.rates.validate()?;
    let policies = source_policies(&config.network, budget, source)?;
    Replay::new(config, policies, seed).run(events)
}

fn policies_for(rho: &[f64], budget: DistortionBudget) -> Result<Vec<UpdatePolicy>> {
    rho.iter()
        .map(|&r| policy_for_occupancy(r.clamp(0.0, 1.0), budget))
        .collect()
}

/// Per-item means over several seeded runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundsReport {
    pub rounds: Vec<SimReport>,
    pub rho_hat: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl RoundsReport {
    pub fn from_rounds(rounds: Vec<SimReport>) -> Self {
        let m = rounds.first().map_or(0, |r| r.items.len());
        let n = rounds.len().max(1) as f64;
        let mean = |f: fn(&ItemStats) -> f64| -> Vec<f64> {
            (0..m)
                .map(|i| rounds.iter().map(|r| f(&r.items[i])).sum::<f64>() / n)
                .collect()
        };
        let rho_hat = mean(|s| s.rho_hat);
        let d1 = mean(|s| s.d1);
        let d2 = mean(|s| s.d2);
        Self {
            rounds,
            rho_hat,
            d1,
            d2,
        }
    }
}

/// Runs `rounds` simulations with seeds `seed, seed + 1, ...`.
pub fn run_rounds(
    config: &SimConfig,
    budget: DistortionBudget,
    events: &[RequestEvent],
    source: &PolicySource,
    seed: u64,
    rounds: u32,
) -> Result<RoundsReport> {
    let reports = (0..rounds as u64)
        .map(|r| run_simulation(config, budget, events, source, seed.wrapping_add(r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(RoundsReport::from_rounds(reports))
}

/// Time-weighted presence of every item in a single LRU cache of
/// `capacity` items replaying `events` from the first to the last request.
pub fn empirical_occupancy(
    events: &[RequestEvent],
    n_items: usize,
    capacity: usize,
) -> Result<Vec<f64>> {
    let (first, last) = match (events.first(), events.last()) {
        (Some(f), Some(l)) => (f.time, l.time),
        _ => return Err(Error::EmptyTrace),
    };
    check_events(events, n_items)?;
    if capacity == 0 {
        return Err(invalid("Lc", "capacity must be positive"));
    }
    if last <= first {
        return Err(Error::ZeroDuration);
    }
    let mut cache = LruCache::new(capacity, n_items);
    let mut entered = vec![0.0; n_items];
    let mut resident = vec![0.0; n_items];
    for e in events {
        let item = e.item - 1;
        if let LruOutcome::Inserted { evicted } = lru_apply(&mut cache, item) {
            if let Some(v) = evicted {
                resident[v as usize] += e.time - entered[v as usize];
            }
            entered[item as usize] = e.time;
        }
    }
    for item in cache.iter() {
        resident[item as usize] += last - entered[item as usize];
    }
    Ok(resident.iter().map(|t| t / (last - first)).collect())
}
