//! Mode runners. Each produces its files in memory so reruns can be compared
//! byte for byte before anything touches the disk.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use cachewire::costmodel::{optimize_threshold, total_cost, CostReport};
use cachewire::lrumodel::{fleet_update_rate, item_profiles, FleetRate, NetworkConfig};
use cachewire::simkernel::{
    run_simulation, run_simulation_stream, PolicySource, RoundsReport, SimConfig, SimReport,
};
use cachewire::workload::{fold_requesters, parse_trace, synthetic_stream, RequestEvent};

use crate::config::{ExperimentConfig, Mode, PolicyChoice};
use crate::error::CliError;

pub const RATE_COLUMNS: &[&str] = &["item", "rho", "lambda", "R_i", "normalized_rate"];
pub const COST_COLUMNS: &[&str] = &[
    "param",
    "phi_up_min",
    "phi_up_max",
    "phi_dl_low",
    "phi_dl_high",
    "phi_low",
    "phi_high",
];
pub const OPTIMIZE_COLUMNS: &[&str] = &["i_star_candidate", "phi", "phi1", "phi2", "phi3"];
pub const SIMULATE_COLUMNS: &[&str] = &[
    "item", "rho_hat", "d1", "d2", "updates", "local", "internal", "external",
];
pub const SWEEP_COLUMNS: &[&str] = &[
    "axis",
    "value",
    "R_total",
    "normalized_rate",
    "updates_per_change",
    "phi_up_min",
    "phi_up_max",
    "phi_dl_low",
    "phi_dl_high",
    "phi_low",
    "phi_high",
];

/// Files produced by one run, in write order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub files: Vec<(String, String)>,
    /// Short human-readable result, also printed to stdout.
    pub summary: String,
}

impl Output {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.as_str())
    }

    pub fn write_to(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir)?;
        for (name, content) in &self.files {
            fs::write(dir.join(name), content)?;
        }
        Ok(())
    }
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("CSV of ASCII fields"))
}

fn num(x: f64) -> String {
    format!("{x}")
}

pub fn execute(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    match cfg.mode {
        Mode::Rate => rate(cfg),
        Mode::Cost => cost(cfg),
        Mode::Optimize => optimize(cfg),
        Mode::Simulate => simulate(cfg),
        Mode::Sweep => sweep(cfg),
    }
}

fn rate(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let net = cfg.network()?;
    let fleet = fleet_update_rate(&net, cfg.budget()?)?;
    let nc = net.n_caches as f64;
    let rows: Vec<Vec<String>> = fleet
        .profiles
        .iter()
        .zip(&fleet.per_item)
        .enumerate()
        .map(|(i, (p, r))| {
            vec![
                (i + 1).to_string(),
                num(p.occupancy),
                num(p.per_cache_rate),
                num(*r),
                num(r / (nc * p.per_cache_rate)),
            ]
        })
        .collect();
    let summary = format!(
        "R_total={} normalized_rate={} updates_per_change={}",
        num(fleet.total),
        num(fleet.per_request(net.n_caches)),
        fleet.per_change(net.n_caches).map_or("NA".into(), num),
    );
    Ok(Output {
        files: vec![
            ("rate.csv".into(), csv_text(RATE_COLUMNS, &rows)?),
            ("rate_summary.txt".into(), format!("{summary}\n")),
        ],
        summary,
    })
}

fn cost_report(cfg: &ExperimentConfig) -> Result<(NetworkConfig, CostReport, FleetRate), CliError> {
    let net = cfg.network()?;
    let budget = cfg.budget()?;
    let profiles = item_profiles(&net)?;
    let report = total_cost(&net, &profiles, budget, &cfg.cost_rates()?)?;
    let fleet = fleet_update_rate(&net, budget)?;
    Ok((net, report, fleet))
}

fn cost_cells(r: &CostReport) -> Vec<String> {
    [
        r.phi_up_min,
        r.phi_up_max,
        r.phi_dl_low,
        r.phi_dl_high,
        r.phi_low,
        r.phi_high,
    ]
    .into_iter()
    .map(num)
    .collect()
}

/// Configs for every sweep value, in order, or just the base config.
fn points(cfg: &ExperimentConfig) -> Result<Vec<(String, ExperimentConfig)>, CliError> {
    match &cfg.sweep {
        None => Ok(vec![("base".into(), cfg.clone())]),
        Some(axis) => cfg
            .values
            .iter()
            .map(|&v| Ok((num(v), cfg.with_axis(axis, v)?)))
            .collect(),
    }
}

fn cost(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let pts = points(cfg)?;
    let rows = pts
        .par_iter()
        .map(|(label, c)| {
            let (_, report, _) = cost_report(c)?;
            let mut row = vec![label.clone()];
            row.extend(cost_cells(&report));
            Ok(row)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let summary = format!("{} cost point(s)", rows.len());
    Ok(Output {
        files: vec![("cost.csv".into(), csv_text(COST_COLUMNS, &rows)?)],
        summary,
    })
}

fn sweep(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let axis = cfg.sweep.clone().expect("validated");
    let pts = points(cfg)?;
    let rows = pts
        .par_iter()
        .map(|(label, c)| {
            let (net, report, fleet) = cost_report(c)?;
            let mut row = vec![
                axis.clone(),
                label.clone(),
                num(fleet.total),
                num(fleet.per_request(net.n_caches)),
                fleet.per_change(net.n_caches).map_or("NA".into(), num),
            ];
            row.extend(cost_cells(&report));
            Ok(row)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let summary = format!("sweep over {axis}: {} point(s)", rows.len());
    Ok(Output {
        files: vec![("sweep.csv".into(), csv_text(SWEEP_COLUMNS, &rows)?)],
        summary,
    })
}

fn optimize(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let net = cfg.network()?;
    let plan = optimize_threshold(&net, cfg.budget()?, cfg.cost_rates()?)?;
    let rows: Vec<Vec<String>> = plan
        .candidates
        .iter()
        .map(|t| {
            vec![
                t.i_star.to_string(),
                num(t.phi),
                num(t.phi1),
                num(t.phi2),
                num(t.phi3),
            ]
        })
        .collect();
    let summary = format!(
        "i_star={} phi={} phi_all={} reduction={} benefit={} overhead={} lower_bound_i_star={} lower_bound_phi={} exhaustive={}",
        plan.i_star,
        num(plan.phi_at),
        num(plan.phi_all),
        num(plan.reduction()),
        num(plan.benefit),
        num(plan.overhead),
        plan.lower_bound.0,
        num(plan.lower_bound.1),
        plan.exhaustive,
    );
    Ok(Output {
        files: vec![
            ("optimize.csv".into(), csv_text(OPTIMIZE_COLUMNS, &rows)?),
            ("optimize_summary.txt".into(), format!("{summary}\n")),
        ],
        summary,
    })
}

/// Events, network and the id to print for each dense item.
struct Workload {
    net: NetworkConfig,
    events: Option<Vec<RequestEvent>>,
    labels: Vec<u64>,
}

fn load_workload(cfg: &ExperimentConfig) -> Result<Workload, CliError> {
    match &cfg.trace {
        Some(path) => {
            if !path.exists() {
                return Err(CliError::Io(std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("trace file {} not found", path.display()),
                )));
            }
            let trace = parse_trace(path)?;
            let mut events = trace.events.clone();
            let users = cfg.n_users.unwrap_or(trace.n_users() as u64);
            if (users as usize) < trace.n_users() {
                fold_requesters(&mut events, users as u32)?;
            }
            let mut shaped = cfg.clone();
            shaped.n_items = trace.n_items();
            let net = shaped.network_with_users(users)?;
            Ok(Workload {
                net,
                events: Some(events),
                labels: trace.item_ids,
            })
        }
        None => {
            let net = cfg.network()?;
            let events = match cfg.policy {
                PolicyChoice::Empirical => {
                    Some(synthetic_stream(&net, cfg.n_requests, cfg.seed)?.collect())
                }
                PolicyChoice::Analytic => None,
            };
            let labels = (1..=net.n_items as u64).collect();
            Ok(Workload {
                net,
                events,
                labels,
            })
        }
    }
}

fn simulate(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let work = load_workload(cfg)?;
    let mut sim = SimConfig::new(work.net.clone(), cfg.cost_rates()?);
    sim.refresh_on_internal = cfg.refresh_internal;
    let budget = cfg.budget()?;
    let source = match cfg.policy {
        PolicyChoice::Analytic => PolicySource::Analytic,
        PolicyChoice::Empirical => PolicySource::Empirical,
    };

    let reports = (0..cfg.rounds as u64)
        .into_par_iter()
        .map(|r| {
            let seed = cfg.seed.wrapping_add(r);
            match &work.events {
                Some(events) => run_simulation(&sim, budget, events, &source, seed),
                None => {
                    let stream = synthetic_stream(&work.net, cfg.n_requests, cfg.seed)?;
                    run_simulation_stream(&sim, budget, stream, &source, seed)
                }
            }
        })
        .collect::<Result<Vec<SimReport>, _>>()?;
    let rounds = RoundsReport::from_rounds(reports);

    let total = |f: fn(&cachewire::simkernel::ItemStats) -> u64, i: usize| -> u64 {
        rounds.rounds.iter().map(|r| f(&r.items[i])).sum()
    };
    let mut requested = 0usize;
    let mut d1_ok = 0usize;
    let mut d2_ok = 0usize;
    let rows: Vec<Vec<String>> = (0..work.net.n_items)
        .map(|i| {
            let served = total(|s| s.local + s.internal + s.external, i);
            if served > 0 {
                requested += 1;
                d1_ok += (rounds.d1[i] <= cfg.eps1) as usize;
                d2_ok += (rounds.d2[i] <= cfg.eps2) as usize;
            }
            vec![
                work.labels[i].to_string(),
                num(rounds.rho_hat[i]),
                num(rounds.d1[i]),
                num(rounds.d2[i]),
                total(|s| s.updates, i).to_string(),
                total(|s| s.local, i).to_string(),
                total(|s| s.internal, i).to_string(),
                total(|s| s.external, i).to_string(),
            ]
        })
        .collect();

    let sum = |f: fn(&SimReport) -> u64| -> u64 { rounds.rounds.iter().map(f).sum() };
    let requests = sum(|r| r.requests);
    let frac = |x: u64| if requests == 0 { 0.0 } else { x as f64 / requests as f64 };
    let changes = sum(|r| r.changes);
    let updates = sum(|r| r.updates);
    let cost = rounds.rounds.iter().map(|r| r.realized_cost).sum::<f64>() / rounds.rounds.len() as f64;
    let summary = format!(
        "rounds={} seed={} requests={} changes={} updates={} updates_per_request={} updates_per_change={} local={} internal={} external={} misdirections={} realized_cost={} requested_items={} d1_within_budget={} d2_within_budget={}",
        cfg.rounds,
        cfg.seed,
        requests,
        changes,
        updates,
        num(frac(updates)),
        num(if changes == 0 { 0.0 } else { updates as f64 / changes as f64 }),
        num(frac(sum(|r| r.local))),
        num(frac(sum(|r| r.internal))),
        num(frac(sum(|r| r.external))),
        sum(|r| r.misdirections),
        num(cost),
        requested,
        d1_ok,
        d2_ok,
    );
    Ok(Output {
        files: vec![
            ("simulate.csv".into(), csv_text(SIMULATE_COLUMNS, &rows)?),
            ("simulate_summary.txt".into(), format!("{summary}\n")),
        ],
        summary,
    })
}
