//! Request streams: synthetic Poisson/Zipf generation and rating-trace
//! ingestion (tab-separated `user item rating timestamp`, the MovieLens
//! `u.data` layout).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Exp, Uniform};

use crate::error::{invalid, Error, Result};
use crate::lrumodel::{zipf_popularities, NetworkConfig};

/// One content request. `item` and `requester` are 1-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RequestEvent {
    pub time: f64,
    pub item: u32,
    pub requester: u32,
}

/// Checks that event times never decrease.
pub fn check_sorted(events: &[RequestEvent]) -> Result<()> {
    for (index, w) in events.windows(2).enumerate() {
        if w[1].time < w[0].time || w[1].time.is_nan() {
            return Err(Error::UnsortedStream {
                index: index + 1,
                time: w[1].time,
                previous: w[0].time,
            });
        }
    }
    Ok(())
}

/// Poisson arrivals at aggregate rate `N * gamma`, Zipf items, uniform users.
pub struct SyntheticStream {
    rng: ChaCha8Rng,
    items: WeightedAliasIndex<f64>,
    gaps: Exp<f64>,
    users: Uniform<u32>,
    clock: f64,
    remaining: u64,
}

impl Iterator for SyntheticStream {
    type Item = RequestEvent;

    fn next(&mut self) -> Option<RequestEvent> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        self.clock += self.gaps.sample(&mut self.rng);
        let item = self.items.sample(&mut self.rng) as u32 + 1;
        let requester = self.users.sample(&mut self.rng);
        Some(RequestEvent {
            time: self.clock,
            item,
            requester,
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.remaining as usize;
        (n, Some(n))
    }
}

pub fn synthetic_stream(
    config: &NetworkConfig,
    n_requests: u64,
    seed: u64,
) -> Result<SyntheticStream> {
    config.validate()?;
    if n_requests == 0 {
        return Err(invalid("n_requests", "must be >= 1"));
    }
    if config.n_items > u32::MAX as usize || config.n_users > u32::MAX as u64 {
        return Err(invalid("M", "catalog and user ids must fit in 32 bits"));
    }
    let weights = zipf_popularities(config.n_items, config.zipf_alpha);
    let items = WeightedAliasIndex::new(weights)
        .map_err(|e| invalid("alpha", format!("cannot sample popularities: {e}")))?;
    let rate = config.n_users as f64 * config.request_rate_per_user;
    Ok(SyntheticStream {
        rng: ChaCha8Rng::seed_from_u64(seed),
        items,
        gaps: Exp::new(rate).map_err(|e| invalid("gamma", e.to_string()))?,
        users: Uniform::new_inclusive(1, config.n_users as u32).expect("n_users >= 1"),
        clock: 0.0,
        remaining: n_requests,
    })
}

/// A parsed trace with the dense id maps: `item_ids[k]` is the original id
/// of item `k + 1`, and likewise for `user_ids`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTrace {
    pub events: Vec<RequestEvent>,
    pub item_ids: Vec<u64>,
    pub user_ids: Vec<u64>,
}

impl ParsedTrace {
    pub fn n_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn n_users(&self) -> usize {
        self.user_ids.len()
    }
}

pub fn parse_trace(path: impl AsRef<Path>) -> Result<ParsedTrace> {
    read_trace(File::open(path)?)
}

fn field<T: std::str::FromStr>(
    value: Option<&str>,
    what: &str,
    line: usize,
) -> Result<T> {
    let raw = value.ok_or_else(|| Error::Parse {
        line,
        reason: format!("missing {what}"),
    })?;
    raw.parse().map_err(|_| Error::Parse {
        line,
        reason: format!("{what} `{raw}` is not a number"),
    })
}

fn dense_ids(raw: &[u64]) -> (Vec<u64>, Vec<u32>) {
    let mut ids = raw.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let mapped = raw
        .iter()
        .map(|id| ids.binary_search(id).expect("present") as u32 + 1)
        .collect();
    (ids, mapped)
}

/// Parses a trace from any reader. Ratings are discarded; the timestamp is
/// taken as the request time. Events are sorted by time, stable on ties.
pub fn read_trace(reader: impl Read) -> Result<ParsedTrace> {
    let mut rows: Vec<(u64, u64, f64)> = Vec::new();
    for (k, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let number = k + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let user: u64 = field(parts.next(), "user id", number)?;
        let item: u64 = field(parts.next(), "item id", number)?;
        let _rating: f64 = field(parts.next(), "rating", number)?;
        let time: f64 = field(parts.next(), "timestamp", number)?;
        if !time.is_finite() || time < 0.0 {
            return Err(Error::Parse {
                line: number,
                reason: format!("timestamp {time} must be finite and >= 0"),
            });
        }
        if let Some(extra) = parts.next() {
            return Err(Error::Parse {
                line: number,
                reason: format!("unexpected fifth field `{extra}`"),
            });
        }
        rows.push((user, item, time));
    }
    if rows.is_empty() {
        return Err(Error::EmptyTrace);
    }
    rows.sort_by(|a, b| a.2.total_cmp(&b.2));

    let (user_ids, users) = dense_ids(&rows.iter().map(|r| r.0).collect::<Vec<_>>());
    let (item_ids, items) = dense_ids(&rows.iter().map(|r| r.1).collect::<Vec<_>>());
    let events = rows
        .iter()
        .zip(users.into_iter().zip(items))
        .map(|(row, (requester, item))| RequestEvent {
            time: row.2,
            item,
            requester,
        })
        .collect();
    Ok(ParsedTrace {
        events,
        item_ids,
        user_ids,
    })
}

/// Writes events in the trace layout with the rating column fixed to 0.
pub fn write_trace(path: impl AsRef<Path>, events: &[RequestEvent]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_trace_to(&mut out, events)?;
    out.flush()?;
    Ok(())
}

pub fn write_trace_to(out: &mut impl Write, events: &[RequestEvent]) -> Result<()> {
    for e in events {
        writeln!(out, "{}\t{}\t0\t{}", e.requester, e.item, e.time)?;
    }
    Ok(())
}

/// Maps requester ids onto `1..=n_users` modulo `n_users`.
pub fn fold_requesters(events: &mut [RequestEvent], n_users: u32) -> Result<()> {
    if n_users == 0 {
        return Err(invalid("N", "need at least one user"));
    }
    for e in events {
        e.requester = (e.requester - 1) % n_users + 1;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStats {
    /// Largest item id seen.
    pub n_items: usize,
    /// Largest requester id seen.
    pub n_users: usize,
    pub distinct_items: usize,
    pub duration: f64,
    /// Requests per item, indexed by `item - 1`.
    pub counts: Vec<u64>,
}

pub fn trace_stats(events: &[RequestEvent]) -> Result<TraceStats> {
    let (first, last) = match (events.first(), events.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::EmptyTrace),
    };
    let n_items = events.iter().map(|e| e.item).max().unwrap_or(0) as usize;
    let n_users = events.iter().map(|e| e.requester).max().unwrap_or(0) as usize;
    let mut counts = vec![0u64; n_items];
    for e in events {
        counts[e.item as usize - 1] += 1;
    }
    Ok(TraceStats {
        n_items,
        n_users,
        distinct_items: counts.iter().filter(|&&c| c > 0).count(),
        duration: last.time - first.time,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lrumodel::ItemSizes;

    fn config(m: usize, alpha: f64) -> NetworkConfig {
        NetworkConfig {
            n_users: 50,
            n_items: m,
            n_caches: 1,
            n_copies: 1,
            cache_capacity: 1,
            item_size: ItemSizes::Uniform(1.0),
            zipf_alpha: alpha,
            request_rate_per_user: 2.0,
        }
    }

    fn counts(m: usize, alpha: f64, n: u64, seed: u64) -> Vec<u64> {
        let ev: Vec<_> = synthetic_stream(&config(m, alpha), n, seed).unwrap().collect();
        trace_stats(&ev).unwrap().counts
    }

    #[test]
    fn flat_zipf_is_uniform_within_three_sigma() {
        let n = 200_000u64;
        let c = counts(20, 0.0, n, 3);
        let p = 1.0 / 20.0;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for (i, &k) in c.iter().enumerate() {
            assert!((k as f64 - n as f64 * p).abs() < 3.5 * sigma, "item {i}: {k}");
        }
    }

    #[test]
    fn top_item_frequency_matches_popularity() {
        let n = 300_000u64;
        let c = counts(100, 0.7, n, 11);
        let p = zipf_popularities(100, 0.7)[0];
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((c[0] as f64 - n as f64 * p).abs() < 3.0 * sigma);
    }

    #[test]
    fn chi_square_sanity() {
        let n = 200_000u64;
        let m = 50;
        let c = counts(m, 0.9, n, 5);
        let p = zipf_popularities(m, 0.9);
        let chi2: f64 = c
            .iter()
            .zip(&p)
            .map(|(&k, &q)| {
                let e = n as f64 * q;
                (k as f64 - e).powi(2) / e
            })
            .sum();
        // 49 dof, p = 0.001 critical value ~ 85.35
        assert!(chi2 < 85.35, "chi2 = {chi2}");
    }

    #[test]
    fn ks_distance_small_at_one_million() {
        let m = 1000;
        let n = 1_000_000u64;
        let c = counts(m, 0.7, n, 17);
        let p = zipf_popularities(m, 0.7);
        let (mut emp, mut target, mut ks) = (0.0, 0.0, 0.0f64);
        for (k, q) in c.iter().zip(&p) {
            emp += *k as f64 / n as f64;
            target += q;
            ks = ks.max((emp - target).abs());
        }
        assert!(ks <= 0.005, "KS = {ks}");
    }

    #[test]
    fn arrivals_are_poisson_at_aggregate_rate() {
        let ev: Vec<_> = synthetic_stream(&config(10, 0.7), 100_000, 2).unwrap().collect();
        check_sorted(&ev).unwrap();
        let rate = ev.len() as f64 / ev.last().unwrap().time;
        assert!((rate - 100.0).abs() < 1.5, "{rate}");
        assert!(ev.iter().all(|e| (1..=50).contains(&e.requester)));
    }

    #[test]
    fn seeded_streams_repeat() {
        let a: Vec<_> = synthetic_stream(&config(30, 0.7), 1000, 9).unwrap().collect();
        let b: Vec<_> = synthetic_stream(&config(30, 0.7), 1000, 9).unwrap().collect();
        let c: Vec<_> = synthetic_stream(&config(30, 0.7), 1000, 10).unwrap().collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(synthetic_stream(&config(30, 0.7), 0, 9).is_err());
    }

    #[test]
    fn parse_small_fixture() {
        let text = "7\t50\t3\t300\n2\t10\t5\t100\n7\t10\t1\t100\n";
        let t = read_trace(text.as_bytes()).unwrap();
        assert_eq!(t.item_ids, vec![10, 50]);
        assert_eq!(t.user_ids, vec![2, 7]);
        let ev: Vec<_> = t.events.iter().map(|e| (e.time, e.item, e.requester)).collect();
        // ties keep input order
        assert_eq!(ev, vec![(100.0, 1, 1), (100.0, 1, 2), (300.0, 2, 2)]);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let text = "1\t2\t3\t4\n1\tfoo\t3\t5\n";
        match read_trace(text.as_bytes()) {
            Err(Error::Parse { line: 2, reason }) => assert!(reason.contains("item id")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(read_trace("1\t2\t3\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(read_trace("".as_bytes()), Err(Error::EmptyTrace)));
        assert!(matches!(read_trace("\n\n".as_bytes()), Err(Error::EmptyTrace)));
    }

    #[test]
    fn unsorted_stream_rejected() {
        let ev = [
            RequestEvent { time: 1.0, item: 1, requester: 1 },
            RequestEvent { time: 0.5, item: 1, requester: 1 },
        ];
        assert!(matches!(check_sorted(&ev), Err(Error::UnsortedStream { index: 1, .. })));
    }

    #[test]
    fn trace_round_trip() {
        let ev: Vec<_> = synthetic_stream(&config(30, 0.7), 500, 4).unwrap().collect();
        let mut buf = Vec::new();
        write_trace_to(&mut buf, &ev).unwrap();
        let back = read_trace(buf.as_slice()).unwrap();
        assert_eq!(back.events.len(), ev.len());
        for (a, b) in ev.iter().zip(&back.events) {
            assert_eq!(a.time, b.time);
            assert_eq!(back.item_ids[b.item as usize - 1], a.item as u64);
            assert_eq!(back.user_ids[b.requester as usize - 1], a.requester as u64);
        }
    }

    #[test]
    fn fold_and_stats() {
        let mut ev = vec![
            RequestEvent { time: 0.0, item: 3, requester: 5 },
            RequestEvent { time: 2.5, item: 1, requester: 2 },
        ];
        fold_requesters(&mut ev, 2).unwrap();
        assert_eq!((ev[0].requester, ev[1].requester), (1, 2));
        let s = trace_stats(&ev).unwrap();
        assert_eq!(s.counts, vec![1, 0, 1]);
        assert_eq!((s.n_items, s.distinct_items, s.duration), (3, 2, 2.5));
        assert!(matches!(trace_stats(&[]), Err(Error::EmptyTrace)));
    }
}
