//! Minimum update rate for a single binary on/off state.
//!
//! The forwarding plane holds a state `S(t) ∈ {0, 1}` alternating between
//! "down" periods (mean `theta`) and "up" periods (mean `tau`). The control
//! plane keeps a view `Ŝ(t)` that only changes when a change is announced.
//! Two distortions are tracked:
//!
//! - `D1 = P(S = 1, Ŝ = 0)` (false negative), capped by `eps1`;
//! - `D2 = P(S = 0, Ŝ = 1)` (false positive), capped by `eps2`.
//!
//! Announcing each 0→1 change with probability `u1` and each 1→0 change with
//! probability `u2` meets the caps exactly at the minimum rate
//! `(u1 + u2) / (tau + theta)`. Outside the update-required region a static
//! view (constant or independent Bernoulli) already meets the budget.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{invalid, Error, Result};

/// Clamp slack tolerated on `u1`/`u2` before it is treated as a region bug.
const CLAMP_SLACK: f64 = 1e-12;

/// Expected cycle count below which an oracle run is flagged as too short.
pub const MIN_ORACLE_CYCLES: f64 = 1e5;

/// Mean durations of the up (`tau`) and down (`theta`) periods, in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnOffStats {
    tau: f64,
    theta: f64,
}

impl OnOffStats {
    pub fn new(tau: f64, theta: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(invalid("tau", format!("must be finite and > 0, got {tau}")));
        }
        if !(theta.is_finite() && theta > 0.0) {
            return Err(invalid(
                "theta",
                format!("must be finite and > 0, got {theta}"),
            ));
        }
        Ok(Self { tau, theta })
    }

    /// Rebuilds the on/off means of a cached item from its stationary
    /// occupancy `rho` and the rate `lambda` at which absent copies are
    /// (re)created: `theta = 1/lambda`, `tau = theta * rho / (1 - rho)`.
    pub fn from_occupancy(rho: f64, lambda: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(invalid("rho", format!("must lie in (0, 1), got {rho}")));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(invalid("lambda", format!("must be > 0, got {lambda}")));
        }
        let theta = 1.0 / lambda;
        Self::new(theta * rho / (1.0 - rho), theta)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Stationary probability that the state is up.
    pub fn p_up(&self) -> f64 {
        self.tau / (self.tau + self.theta)
    }

    /// Mean length of one up+down cycle.
    pub fn cycle(&self) -> f64 {
        self.tau + self.theta
    }

    /// Rate of 0→1 changes (equal to the rate of 1→0 changes).
    pub fn change_rate(&self) -> f64 {
        1.0 / self.cycle()
    }
}

/// Caps on the two distortion probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionBudget {
    eps1: f64,
    eps2: f64,
}

impl DistortionBudget {
    pub fn new(eps1: f64, eps2: f64) -> Result<Self> {
        if !(eps1.is_finite() && eps1 >= 0.0) {
            return Err(invalid("eps1", format!("must be >= 0, got {eps1}")));
        }
        if !(eps2.is_finite() && eps2 >= 0.0) {
            return Err(invalid("eps2", format!("must be >= 0, got {eps2}")));
        }
        if eps1 + eps2 > 1.0 {
            return Err(invalid(
                "eps1+eps2",
                format!("must not exceed 1, got {}", eps1 + eps2),
            ));
        }
        Ok(Self { eps1, eps2 })
    }

    pub fn symmetric(eps: f64) -> Result<Self> {
        Self::new(eps, eps)
    }

    pub fn zero() -> Self {
        Self {
            eps1: 0.0,
            eps2: 0.0,
        }
    }

    pub fn eps1(&self) -> f64 {
        self.eps1
    }

    pub fn eps2(&self) -> f64 {
        self.eps2
    }
}

/// Which of the four regimes a (state, budget) pair falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionLabel {
    /// `p_up <= eps1`: keep the view at 0.
    AlwaysDown,
    /// `1 - p_up <= eps2`: keep the view at 1.
    AlwaysUp,
    /// Both states likely, but an independent Bernoulli view suffices.
    RandomStatic,
    /// Changes must be announced.
    UpdatesRequired,
}

impl RegionLabel {
    pub fn needs_updates(self) -> bool {
        self == RegionLabel::UpdatesRequired
    }
}

/// View maintained by the control plane without any update traffic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StaticAssignment {
    Constant(bool),
    /// Report "up" with this probability, independently of the real state.
    Bernoulli(f64),
}

/// Announcement probabilities per change type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdatePolicy {
    u1: f64,
    u2: f64,
    static_assignment: Option<StaticAssignment>,
}

impl UpdatePolicy {
    /// Announce type-I changes with probability `u1` and type-II with `u2`.
    ///
    /// `(0, 0)` is rejected: a policy that never announces must say what the
    /// view holds, see [`UpdatePolicy::fixed`].
    pub fn coin(u1: f64, u2: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&u1) {
            return Err(invalid("u1", format!("must lie in [0, 1], got {u1}")));
        }
        if !(0.0..=1.0).contains(&u2) {
            return Err(invalid("u2", format!("must lie in [0, 1], got {u2}")));
        }
        if u1 == 0.0 && u2 == 0.0 {
            return Err(invalid(
                "u1,u2",
                "a silent policy needs a static assignment",
            ));
        }
        Ok(Self {
            u1,
            u2,
            static_assignment: None,
        })
    }

    pub fn announce_all() -> Self {
        Self {
            u1: 1.0,
            u2: 1.0,
            static_assignment: None,
        }
    }

    pub fn fixed(assignment: StaticAssignment) -> Result<Self> {
        if let StaticAssignment::Bernoulli(p) = assignment {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid("rho0", format!("must lie in [0, 1], got {p}")));
            }
        }
        Ok(Self {
            u1: 0.0,
            u2: 0.0,
            static_assignment: Some(assignment),
        })
    }

    pub fn u1(&self) -> f64 {
        self.u1
    }

    pub fn u2(&self) -> f64 {
        self.u2
    }

    pub fn static_assignment(&self) -> Option<StaticAssignment> {
        self.static_assignment
    }

    /// Fraction of changes announced, `u1 + u2` per up/down cycle.
    pub fn updates_per_cycle(&self) -> f64 {
        self.u1 + self.u2
    }
}

/// Region for a state with stationary up-probability `p_up ∈ [0, 1]`.
///
/// Every boundary is resolved to the no-update side, where the update
/// fractions would divide by zero.
pub fn classify_occupancy(p_up: f64, budget: DistortionBudget) -> RegionLabel {
    let p_down = 1.0 - p_up;
    if p_up <= budget.eps1 {
        RegionLabel::AlwaysDown
    } else if p_down <= budget.eps2 {
        RegionLabel::AlwaysUp
    } else if 1.0 - budget.eps1 / p_up <= budget.eps2 / p_down {
        RegionLabel::RandomStatic
    } else {
        RegionLabel::UpdatesRequired
    }
}

pub fn classify_region(stats: OnOffStats, budget: DistortionBudget) -> RegionLabel {
    classify_occupancy(stats.p_up(), budget)
}

fn clamp_fraction(name: &str, u: f64) -> Result<f64> {
    if !(-CLAMP_SLACK..=1.0 + CLAMP_SLACK).contains(&u) || u.is_nan() {
        return Err(Error::Contract(format!(
            "{name} = {u} lies outside [0, 1]; region classification is inconsistent"
        )));
    }
    Ok(u.clamp(0.0, 1.0))
}

/// Smallest announcement probabilities per change type that meet the budget.
pub fn update_fractions(stats: OnOffStats, budget: DistortionBudget) -> Result<UpdatePolicy> {
    let region = classify_region(stats, budget);
    if region != RegionLabel::UpdatesRequired {
        return Err(Error::Contract(format!(
            "update fractions are only defined when updates are required (region is {region:?})"
        )));
    }
    let (tau, theta) = (stats.tau, stats.theta);
    let (eps1, eps2) = (budget.eps1, budget.eps2);
    let cycle = tau + theta;
    let u1 = 1.0 - eps1 * (theta / tau) / (theta / cycle - eps2);
    let u2 = 1.0 - eps2 * (tau / theta) / (tau / cycle - eps1);
    Ok(UpdatePolicy {
        u1: clamp_fraction("u1", u1)?,
        u2: clamp_fraction("u2", u2)?,
        static_assignment: None,
    })
}

/// Minimum number of update packets per second; zero outside the
/// update-required region.
pub fn min_update_rate(stats: OnOffStats, budget: DistortionBudget) -> f64 {
    match update_fractions(stats, budget) {
        Ok(policy) => policy.updates_per_cycle() / stats.cycle(),
        Err(_) => 0.0,
    }
}

/// Static view for the three no-update regions.
pub fn static_policy(stats: OnOffStats, budget: DistortionBudget) -> Result<UpdatePolicy> {
    static_policy_for_occupancy(stats.p_up(), budget)
}

pub(crate) fn static_policy_for_occupancy(
    p_up: f64,
    budget: DistortionBudget,
) -> Result<UpdatePolicy> {
    let assignment = match classify_occupancy(p_up, budget) {
        RegionLabel::AlwaysDown => StaticAssignment::Constant(false),
        RegionLabel::AlwaysUp => StaticAssignment::Constant(true),
        RegionLabel::RandomStatic => {
            let lo = 1.0 - budget.eps1 / p_up;
            let hi = budget.eps2 / (1.0 - p_up);
            StaticAssignment::Bernoulli((0.5 * (lo + hi)).clamp(0.0, 1.0))
        }
        RegionLabel::UpdatesRequired => {
            return Err(Error::Contract(
                "no static view meets the budget; updates are required".into(),
            ))
        }
    };
    UpdatePolicy::fixed(assignment)
}

/// Cheapest policy meeting the budget for a state with occupancy `p_up`.
///
/// Unlike [`update_fractions`] this accepts the degenerate occupancies 0 and
/// 1, which always land in a static region.
pub fn policy_for_occupancy(p_up: f64, budget: DistortionBudget) -> Result<UpdatePolicy> {
    if !(0.0..=1.0).contains(&p_up) {
        return Err(invalid("p_up", format!("must lie in [0, 1], got {p_up}")));
    }
    match classify_occupancy(p_up, budget) {
        RegionLabel::UpdatesRequired => {
            // Only the ratio tau/theta matters, so fix the cycle length at 1.
            let stats = OnOffStats::new(p_up, 1.0 - p_up)?;
            update_fractions(stats, budget)
        }
        _ => static_policy_for_occupancy(p_up, budget),
    }
}

/// Distortion the given policy produces analytically, by the renewal-reward
/// argument: an unannounced change leaves the view wrong for the following
/// period only if the view was right before it.
pub fn expected_distortion(stats: OnOffStats, policy: UpdatePolicy) -> (f64, f64) {
    let p_up = stats.p_up();
    let p_down = 1.0 - p_up;
    match policy.static_assignment {
        Some(StaticAssignment::Constant(false)) => (p_up, 0.0),
        Some(StaticAssignment::Constant(true)) => (0.0, p_down),
        Some(StaticAssignment::Bernoulli(rho0)) => (p_up * (1.0 - rho0), p_down * rho0),
        None => {
            // w1 = (1-u1)(1-w2), w2 = (1-u2)(1-w1)
            let (a, b) = (1.0 - policy.u1, 1.0 - policy.u2);
            let denom = 1.0 - a * b;
            let w1 = a * (1.0 - b) / denom;
            let w2 = b * (1.0 - a) / denom;
            (p_up * w1, p_down * w2)
        }
    }
}

/// Measured outcome of one Monte-Carlo oracle run.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub d1: f64,
    pub d2: f64,
    pub horizon: f64,
    pub cycles: u64,
    pub changes: u64,
    pub updates: u64,
    /// Set when the horizon covers fewer than [`MIN_ORACLE_CYCLES`] expected cycles.
    pub short_horizon: bool,
}

/// Simulates the on/off process with exponential durations under `policy`
/// and returns time-averaged distortions.
///
/// The view starts correct (down, not present). A Bernoulli static view is
/// redrawn at the start of every period; the draw is independent of the
/// state, so only its time average matters.
pub fn monte_carlo_distortion_oracle(
    stats: OnOffStats,
    policy: UpdatePolicy,
    horizon: f64,
    seed: u64,
) -> Result<OracleReport> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(invalid("horizon", format!("must be > 0, got {horizon}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let up = Exp::new(1.0 / stats.tau).expect("positive rate");
    let down = Exp::new(1.0 / stats.theta).expect("positive rate");

    let mut view = match policy.static_assignment {
        Some(StaticAssignment::Constant(v)) => v,
        _ => false,
    };
    let mut clock = 0.0;
    let mut wrong_up = 0.0;
    let mut wrong_down = 0.0;
    let mut cycles = 0u64;
    let mut changes = 0u64;
    let mut updates = 0u64;

    let redraw = |rng: &mut ChaCha8Rng, view: &mut bool| {
        if let Some(StaticAssignment::Bernoulli(p)) = policy.static_assignment {
            *view = rng.random_bool(p);
        }
    };

    'outer: loop {
        redraw(&mut rng, &mut view);
        let y = down.sample(&mut rng);
        let span = y.min(horizon - clock);
        if view {
            wrong_down += span;
        }
        clock += y;
        if clock >= horizon {
            break 'outer;
        }

        // type I change: 0 -> 1
        changes += 1;
        if policy.u1 > 0.0 && rng.random_bool(policy.u1) {
            view = true;
            updates += 1;
        }
        redraw(&mut rng, &mut view);
        let z = up.sample(&mut rng);
        let span = z.min(horizon - clock);
        if !view {
            wrong_up += span;
        }
        clock += z;
        cycles += 1;
        if clock >= horizon {
            break 'outer;
        }

        // type II change: 1 -> 0
        changes += 1;
        if policy.u2 > 0.0 && rng.random_bool(policy.u2) {
            view = false;
            updates += 1;
        }
    }

    Ok(OracleReport {
        d1: wrong_up / horizon,
        d2: wrong_down / horizon,
        horizon,
        cycles,
        changes,
        updates,
        short_horizon: horizon / stats.cycle() < MIN_ORACLE_CYCLES,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(tau: f64, theta: f64) -> OnOffStats {
        OnOffStats::new(tau, theta).unwrap()
    }

    fn budget(e1: f64, e2: f64) -> DistortionBudget {
        DistortionBudget::new(e1, e2).unwrap()
    }

    /// Strict region conditions written on (tau, theta) directly.
    fn strict_conditions(tau: f64, theta: f64, e1: f64, e2: f64) -> bool {
        let ratio = theta / tau;
        e2 / (1.0 - e2) < ratio
            && ratio < (1.0 - e1) / e1
            && e2 * tau + e1 * theta < tau * theta / (tau + theta)
    }

    #[test]
    fn region_examples() {
        assert_eq!(
            classify_region(stats(1.0, 9.0), budget(0.2, 0.01)),
            RegionLabel::AlwaysDown
        );
        assert!(strict_conditions(1.0, 1.0, 0.1, 0.1));
        assert_eq!(
            classify_region(stats(1.0, 1.0), budget(0.1, 0.1)),
            RegionLabel::UpdatesRequired
        );
        assert_eq!(
            classify_region(stats(1.0, 1.0), budget(0.4, 0.4)),
            RegionLabel::RandomStatic
        );
        assert_eq!(
            classify_region(stats(999.0, 1.0), budget(0.05, 0.01)),
            RegionLabel::AlwaysUp
        );
    }

    #[test]
    fn boundary_goes_to_static_side() {
        // p_up == eps1 exactly
        assert_eq!(
            classify_region(stats(1.0, 3.0), budget(0.25, 0.01)),
            RegionLabel::AlwaysDown
        );
        assert!(update_fractions(stats(1.0, 3.0), budget(0.25, 0.01)).is_err());
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(OnOffStats::new(0.0, 1.0).is_err());
        assert!(OnOffStats::new(1.0, f64::NAN).is_err());
        assert!(DistortionBudget::new(-0.1, 0.0).is_err());
        assert!(DistortionBudget::new(0.6, 0.5).is_err());
        assert!(UpdatePolicy::coin(0.0, 0.0).is_err());
        assert!(UpdatePolicy::coin(1.2, 0.5).is_err());
    }

    #[test]
    fn update_fraction_examples() {
        let p = update_fractions(stats(1.0, 1.0), budget(0.1, 0.1)).unwrap();
        assert!((p.u1() - 0.75).abs() < 1e-12);
        assert!((p.u2() - 0.75).abs() < 1e-12);

        let p = update_fractions(stats(1.0, 1.0), DistortionBudget::zero()).unwrap();
        assert_eq!((p.u1(), p.u2()), (1.0, 1.0));

        // hand evaluation: 1 - 0.025/(1/3 - 0.05), 1 - 0.1/(2/3 - 0.05)
        let p = update_fractions(stats(2.0, 1.0), budget(0.05, 0.05)).unwrap();
        assert!((p.u1() - (1.0 - 0.025 / (1.0 / 3.0 - 0.05))).abs() < 1e-12);
        assert!((p.u2() - (1.0 - 0.1 / (2.0 / 3.0 - 0.05))).abs() < 1e-12);
        assert!((p.u1() - 0.9118).abs() < 1e-4);
        assert!((p.u2() - 0.8378).abs() < 1e-4);
    }

    #[test]
    fn update_fractions_outside_region_is_contract_error() {
        let err = update_fractions(stats(1.0, 1.0), budget(0.4, 0.4)).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn min_rate_examples() {
        assert!((min_update_rate(stats(1.0, 1.0), budget(0.1, 0.1)) - 0.75).abs() < 1e-12);
        // two updates per change cycle at change rate 1/2
        assert_eq!(min_update_rate(stats(1.0, 1.0), DistortionBudget::zero()), 1.0);
        assert_eq!(min_update_rate(stats(1.0, 99.0), budget(0.05, 0.001)), 0.0);
    }

    #[test]
    fn static_policy_examples() {
        let p = static_policy(stats(1.0, 99.0), budget(0.05, 0.001)).unwrap();
        assert_eq!(p.static_assignment(), Some(StaticAssignment::Constant(false)));
        let (d1, d2) = expected_distortion(stats(1.0, 99.0), p);
        assert!((d1 - 0.01).abs() < 1e-15);
        assert_eq!(d2, 0.0);

        let s = stats(999.0, 1.0);
        let p = static_policy(s, budget(0.05, 0.01)).unwrap();
        assert_eq!(p.static_assignment(), Some(StaticAssignment::Constant(true)));
        let (d1, d2) = expected_distortion(s, p);
        assert_eq!(d1, 0.0);
        assert!((d2 - 0.001).abs() < 1e-15);

        let p = static_policy(stats(1.0, 1.0), budget(0.4, 0.4)).unwrap();
        assert_eq!(p.static_assignment(), Some(StaticAssignment::Bernoulli(0.5)));
        let (d1, d2) = expected_distortion(stats(1.0, 1.0), p);
        assert!((d1 - 0.25).abs() < 1e-15 && (d2 - 0.25).abs() < 1e-15);

        assert!(static_policy(stats(1.0, 1.0), budget(0.1, 0.1)).is_err());
    }

    #[test]
    fn analytic_distortion_is_tight_at_min_fractions() {
        for &(tau, theta, e1, e2) in &[(1.0, 1.0, 0.1, 0.1), (2.0, 1.0, 0.05, 0.05), (0.3, 7.0, 0.01, 0.001)] {
            let s = stats(tau, theta);
            let p = update_fractions(s, budget(e1, e2)).unwrap();
            let (d1, d2) = expected_distortion(s, p);
            assert!((d1 - e1).abs() < 1e-12, "d1 {d1} vs {e1}");
            assert!((d2 - e2).abs() < 1e-12, "d2 {d2} vs {e2}");
        }
    }

    #[test]
    fn oracle_perfect_view() {
        let r = monte_carlo_distortion_oracle(stats(1.0, 1.0), UpdatePolicy::announce_all(), 1e5, 7)
            .unwrap();
        assert_eq!(r.d1, 0.0);
        assert_eq!(r.d2, 0.0);
        assert_eq!(r.updates, r.changes);
        assert!(r.short_horizon);
    }

    #[test]
    fn oracle_matches_min_fractions() {
        let s = stats(1.0, 1.0);
        let p = update_fractions(s, budget(0.1, 0.1)).unwrap();
        let r = monte_carlo_distortion_oracle(s, p, 2e6, 11).unwrap();
        assert!(!r.short_horizon);
        assert!((r.d1 - 0.1).abs() < 0.005, "d1 = {}", r.d1);
        assert!((r.d2 - 0.1).abs() < 0.005, "d2 = {}", r.d2);
        let per_sec = r.updates as f64 / r.horizon;
        assert!((per_sec - 0.75).abs() < 0.01, "rate {per_sec}");
    }

    #[test]
    fn oracle_type_two_always_announced() {
        let r = monte_carlo_distortion_oracle(
            stats(1.0, 1.0),
            UpdatePolicy::coin(0.0, 1.0).unwrap(),
            1e5,
            3,
        )
        .unwrap();
        assert_eq!(r.d2, 0.0);
        assert!(r.d1 > 0.4);
    }

    #[test]
    fn oracle_bernoulli_view() {
        let s = stats(1.0, 1.0);
        let p = static_policy(s, budget(0.4, 0.4)).unwrap();
        let r = monte_carlo_distortion_oracle(s, p, 1e6, 5).unwrap();
        assert_eq!(r.updates, 0);
        assert!((r.d1 - 0.25).abs() < 0.01);
        assert!((r.d2 - 0.25).abs() < 0.01);
    }

    #[test]
    fn occupancy_bridge() {
        let s = OnOffStats::from_occupancy(0.5, 1.0).unwrap();
        assert!((s.tau() - 1.0).abs() < 1e-15 && (s.theta() - 1.0).abs() < 1e-15);
        assert!(OnOffStats::from_occupancy(1.0, 1.0).is_err());
        let p = policy_for_occupancy(0.0, budget(0.0, 0.0)).unwrap();
        assert_eq!(p.static_assignment(), Some(StaticAssignment::Constant(false)));
        let p = policy_for_occupancy(1.0, budget(0.0, 0.0)).unwrap();
        assert_eq!(p.static_assignment(), Some(StaticAssignment::Constant(true)));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn eps() -> impl Strategy<Value = f64> {
            prop_oneof![Just(0.0), 1e-4f64..0.45]
        }

        proptest! {
            #[test]
            fn region_matches_strict_conditions(tau in 0.01f64..100.0, theta in 0.01f64..100.0, e1 in eps(), e2 in eps()) {
                let label = classify_region(stats(tau, theta), budget(e1, e2));
                // skip draws within rounding distance of a boundary
                let p = tau / (tau + theta);
                let margin = (p - e1).abs().min((1.0 - p - e2).abs())
                    .min((p * (1.0 - p) - e1 * (1.0 - p) - e2 * p).abs());
                prop_assume!(margin > 1e-9);
                prop_assert_eq!(label.needs_updates(), strict_conditions(tau, theta, e1, e2));
            }

            #[test]
            fn rate_monotone_in_budget(tau in 0.01f64..100.0, theta in 0.01f64..100.0,
                                       e1 in 0.0f64..0.3, e2 in 0.0f64..0.3, d in 0.0f64..0.1) {
                let s = stats(tau, theta);
                let base = min_update_rate(s, budget(e1, e2));
                prop_assert!(min_update_rate(s, budget(e1 + d, e2)) <= base * (1.0 + 1e-12) + 1e-15);
                prop_assert!(min_update_rate(s, budget(e1, e2 + d)) <= base * (1.0 + 1e-12) + 1e-15);
            }

            #[test]
            fn zero_budget_limit(tau in 0.01f64..100.0, theta in 0.01f64..100.0) {
                prop_assert_eq!(min_update_rate(stats(tau, theta), DistortionBudget::zero()), 2.0 / (tau + theta));
            }

            #[test]
            fn swap_symmetry(tau in 0.01f64..100.0, theta in 0.01f64..100.0, e1 in eps(), e2 in eps()) {
                let a = min_update_rate(stats(tau, theta), budget(e1, e2));
                let b = min_update_rate(stats(theta, tau), budget(e2, e1));
                prop_assert!((a - b).abs() <= 1e-12 * a.max(b).max(1e-300));
            }

            #[test]
            fn static_policies_meet_budget(tau in 0.01f64..100.0, theta in 0.01f64..100.0, e1 in eps(), e2 in eps()) {
                let s = stats(tau, theta);
                let b = budget(e1, e2);
                if let Ok(p) = static_policy(s, b) {
                    let (d1, d2) = expected_distortion(s, p);
                    prop_assert!(d1 <= e1 + 1e-12 && d2 <= e2 + 1e-12);
                }
            }
        }
    }
}
