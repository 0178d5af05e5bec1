//! Logistic branching random walk as an exact event-driven Markov chain.
//!
//! Finite model on `N` sites: per particle birth `s`, migration `c` to a
//! uniform site, and at a `k`-occupied site death at total rate `d k(k-1)`.
//! Limit model on unboundedly many sites: emigration only from crowded sites
//! (`k >= 2`) onto the lowest empty site, plus immigration at rate `c iota`
//! into each of `tracked` sites. `iota = 0` is the collision-free process.
//!
//! Per-site weights `k`, `k(k-1)` and `k [k >= 2]` live in Fenwick trees, so
//! every event costs `O(log sites)` and rate bookkeeping stays in integers.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_nonneg, check_positive, Error, Result};
use crate::fenwick::Fenwick;
use crate::rng::replica_rng;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Space<T> {
    Finite { n: usize },
    Unbounded { iota: T, tracked: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParticleParams<T> {
    pub c: T,
    pub s: T,
    pub d: T,
    pub space: Space<T>,
}

fn check_rates<T: Real>(c: T, s: T, d: T) -> Result<()> {
    check_nonneg("c", c.as_f64())?;
    check_nonneg("s", s.as_f64())?;
    check_nonneg("d", d.as_f64())
}

impl<T: Real> ParticleParams<T> {
    pub fn finite(n: usize, c: T, s: T, d: T) -> Result<Self> {
        check_rates(c, s, d)?;
        if n == 0 {
            return Err(Error::InvalidParameter { name: "N", reason: "need at least one site".into() });
        }
        Ok(ParticleParams { c, s, d, space: Space::Finite { n } })
    }

    pub fn limit(c: T, s: T, d: T, iota: T, tracked: usize) -> Result<Self> {
        check_rates(c, s, d)?;
        check_nonneg("iota", iota.as_f64())?;
        if iota > T::zero() && tracked == 0 {
            return Err(Error::InvalidParameter {
                name: "tracked",
                reason: "immigration needs at least one tracked site".into(),
            });
        }
        Ok(ParticleParams { c, s, d, space: Space::Unbounded { iota, tracked } })
    }

    pub fn collision_free(c: T, s: T, d: T) -> Result<Self> {
        Self::limit(c, s, d, T::zero(), 0)
    }

    /// `s k - d k(k-1)`: net production rate of a `k`-occupied site.
    pub fn mean_production(&self, k: u64) -> T {
        let kf = T::from_u64(k).unwrap_or_else(T::max_value);
        self.s * kf - self.d * kf * (kf - T::one())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum EventKind {
    Birth,
    Death,
    Migrate,
    Emigrate,
    Immigrate,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Birth => "birth",
            EventKind::Death => "death",
            EventKind::Migrate => "migrate",
            EventKind::Emigrate => "emigrate",
            EventKind::Immigrate => "immigrate",
        }
    }
}

/// One transition. `site` is where the event happens (the source for
/// moves, the destination for immigration); `target` is a move's destination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event<T> {
    pub t: T,
    pub kind: EventKind,
    pub site: usize,
    pub target: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome<T> {
    Event(Event<T>),
    /// Total rate zero: the chain is absorbed.
    Extinct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventRates<T> {
    pub birth: T,
    pub death: T,
    pub migrate: T,
    pub emigrate: T,
    pub immigrate: T,
}

impl<T: Real> EventRates<T> {
    pub fn total(&self) -> T {
        self.birth + self.death + self.migrate + self.emigrate + self.immigrate
    }

    fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> EventKind {
        let table = [
            (self.birth, EventKind::Birth),
            (self.death, EventKind::Death),
            (self.migrate, EventKind::Migrate),
            (self.emigrate, EventKind::Emigrate),
            (self.immigrate, EventKind::Immigrate),
        ];
        let u = T::uniform01(rng) * self.total();
        let mut acc = T::zero();
        let mut last = EventKind::Birth;
        for (rate, kind) in table {
            if rate > T::zero() {
                acc = acc + rate;
                last = kind;
                if u < acc {
                    return kind;
                }
            }
        }
        last
    }
}

#[inline]
fn weights(k: u32) -> (u64, u64, u64) {
    let k = u64::from(k);
    (k, k * k.saturating_sub(1), if k >= 2 { k } else { 0 })
}

/// Site occupation counts with the rate bookkeeping needed for sampling.
#[derive(Debug, Clone)]
pub struct OccupancyState<T> {
    counts: Vec<u32>,
    total: u64,
    occupied: usize,
    t: T,
    linear: Fenwick,
    pairs: Fenwick,
    crowded: Fenwick,
    free: BinaryHeap<Reverse<usize>>,
    /// Every site at or above `high` is empty.
    high: usize,
}

impl<T: Real> OccupancyState<T> {
    fn empty(capacity: usize) -> Self {
        OccupancyState {
            counts: vec![0; capacity],
            total: 0,
            occupied: 0,
            t: T::zero(),
            linear: Fenwick::new(capacity),
            pairs: Fenwick::new(capacity),
            crowded: Fenwick::new(capacity),
            free: BinaryHeap::new(),
            high: 0,
        }
    }

    /// State of the finite model with the given `(site, count)` entries.
    pub fn finite(n: usize, initial: &[(usize, u32)]) -> Result<Self> {
        let mut st = Self::empty(n);
        for &(site, k) in initial {
            if site >= n {
                return Err(Error::InvalidParameter { name: "site", reason: format!("{site} >= N = {n}") });
            }
            st.set_count(site, st.counts[site] + k);
        }
        Ok(st)
    }

    pub fn unbounded(initial: &[(usize, u32)]) -> Self {
        let cap = initial.iter().map(|e| e.0 + 1).max().unwrap_or(1).max(16);
        let mut st = Self::empty(cap);
        for &(site, k) in initial {
            let cur = st.count(site);
            st.set_count(site, cur + k);
        }
        st
    }

    pub fn t(&self) -> T {
        self.t
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn occupied_sites(&self) -> usize {
        self.occupied
    }

    pub fn count(&self, site: usize) -> u32 {
        self.counts.get(site).copied().unwrap_or(0)
    }

    /// Occupied `(site, count)` pairs in site order.
    pub fn occupied(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.counts.iter().enumerate().filter(|e| *e.1 > 0).map(|(i, &k)| (i, k))
    }

    pub fn counts_map(&self) -> BTreeMap<usize, u32> {
        self.occupied().collect()
    }

    fn ensure_capacity(&mut self, site: usize) {
        if site < self.counts.len() {
            return;
        }
        let cap = (self.counts.len() * 2).max(site + 1);
        self.counts.resize(cap, 0);
        let w: Vec<(u64, u64, u64)> = self.counts.iter().map(|&k| weights(k)).collect();
        self.linear = Fenwick::from_weights(w.iter().map(|x| x.0));
        self.pairs = Fenwick::from_weights(w.iter().map(|x| x.1));
        self.crowded = Fenwick::from_weights(w.iter().map(|x| x.2));
    }

    fn set_count(&mut self, site: usize, k: u32) {
        self.ensure_capacity(site);
        let old = self.counts[site];
        if old == k {
            return;
        }
        let (a0, b0, c0) = weights(old);
        let (a1, b1, c1) = weights(k);
        self.linear.add(site, a1 as i64 - a0 as i64);
        self.pairs.add(site, b1 as i64 - b0 as i64);
        self.crowded.add(site, c1 as i64 - c0 as i64);
        self.total = self.total + u64::from(k) - u64::from(old);
        self.counts[site] = k;
        if old == 0 {
            self.occupied += 1;
            if site >= self.high {
                for gap in self.high..site {
                    self.free.push(Reverse(gap));
                }
                self.high = site + 1;
            }
        } else if k == 0 {
            self.occupied -= 1;
            self.free.push(Reverse(site));
        }
    }

    fn lowest_empty(&mut self) -> usize {
        while let Some(&Reverse(i)) = self.free.peek() {
            if i < self.high && self.counts[i] == 0 {
                return i;
            }
            self.free.pop();
        }
        self.high
    }

    pub fn rates(&self, params: &ParticleParams<T>) -> EventRates<T> {
        let p = T::from_u64(self.linear.total()).expect("weight");
        let q = T::from_u64(self.pairs.total()).expect("weight");
        let (migrate, emigrate, immigrate) = match params.space {
            Space::Finite { .. } => (params.c * p, T::zero(), T::zero()),
            Space::Unbounded { iota, tracked } => {
                let e = T::from_u64(self.crowded.total()).expect("weight");
                (T::zero(), params.c * e, params.c * iota * T::from_usize_lossy(tracked))
            }
        };
        EventRates { birth: params.s * p, death: params.d * q, migrate, emigrate, immigrate }
    }

    /// Recomputes every weight sum from the raw counts and compares with the
    /// incremental bookkeeping.
    pub fn audit(&self) -> bool {
        let (mut p, mut q, mut e, mut occ) = (0u64, 0u64, 0u64, 0usize);
        for &k in &self.counts {
            let (a, b, c) = weights(k);
            p += a;
            q += b;
            e += c;
            occ += usize::from(k > 0);
        }
        p == self.linear.total()
            && q == self.pairs.total()
            && e == self.crowded.total()
            && p == self.total
            && occ == self.occupied
            && self.counts[self.high.min(self.counts.len())..].iter().all(|&k| k == 0)
    }

    fn pick_site<R: Rng + ?Sized>(tree: &Fenwick, rng: &mut R) -> usize {
        tree.find(rng.random_range(0..tree.total()))
    }
}

fn check_space<T: Real>(state: &OccupancyState<T>, params: &ParticleParams<T>, want_finite: bool) -> Result<()> {
    match (params.space, want_finite) {
        (Space::Finite { n }, true) if state.counts.len() == n => Ok(()),
        (Space::Finite { n }, true) => Err(Error::InvalidParameter {
            name: "state",
            reason: format!("{} sites, params expect {n}", state.counts.len()),
        }),
        (Space::Unbounded { .. }, false) => Ok(()),
        _ => Err(Error::InvalidParameter { name: "space", reason: "wrong model for this stepper".into() }),
    }
}

/// Waiting time to the next event, or `None` when the total rate is zero.
fn sample_wait<T: Real, R: Rng + ?Sized>(state: &OccupancyState<T>, params: &ParticleParams<T>, rng: &mut R) -> Option<(T, EventRates<T>)> {
    let rates = state.rates(params);
    let total = rates.total();
    if total > T::zero() {
        Some((T::exp1(rng) / total, rates))
    } else {
        None
    }
}

/// Applies one event at the current time.
fn apply_event<T: Real, R: Rng + ?Sized>(
    state: &mut OccupancyState<T>,
    params: &ParticleParams<T>,
    rates: &EventRates<T>,
    rng: &mut R,
) -> Event<T> {
    let kind = rates.pick(rng);
    let (site, target) = match kind {
        EventKind::Birth => {
            let site = OccupancyState::<T>::pick_site(&state.linear, rng);
            state.set_count(site, state.counts[site] + 1);
            (site, None)
        }
        EventKind::Death => {
            let site = OccupancyState::<T>::pick_site(&state.pairs, rng);
            state.set_count(site, state.counts[site] - 1);
            (site, None)
        }
        EventKind::Migrate => {
            let n = match params.space {
                Space::Finite { n } => n,
                Space::Unbounded { .. } => unreachable!("migration only in the finite model"),
            };
            let site = OccupancyState::<T>::pick_site(&state.linear, rng);
            let dest = rng.random_range(0..n);
            if dest != site {
                state.set_count(site, state.counts[site] - 1);
                state.set_count(dest, state.counts[dest] + 1);
            }
            (site, Some(dest))
        }
        EventKind::Emigrate => {
            let site = OccupancyState::<T>::pick_site(&state.crowded, rng);
            let dest = state.lowest_empty();
            state.set_count(site, state.counts[site] - 1);
            state.set_count(dest, 1);
            (site, Some(dest))
        }
        EventKind::Immigrate => {
            let tracked = match params.space {
                Space::Unbounded { tracked, .. } => tracked,
                Space::Finite { .. } => unreachable!("immigration only in the limit model"),
            };
            let site = rng.random_range(0..tracked);
            let cur = state.count(site);
            state.set_count(site, cur + 1);
            (site, None)
        }
    };
    Event { t: state.t, kind, site, target }
}

fn step_checked<T: Real, R: Rng + ?Sized>(
    state: &mut OccupancyState<T>,
    params: &ParticleParams<T>,
    rng: &mut R,
) -> StepOutcome<T> {
    match sample_wait(state, params, rng) {
        None => StepOutcome::Extinct,
        Some((wait, rates)) => {
            state.t = state.t + wait;
            StepOutcome::Event(apply_event(state, params, &rates, rng))
        }
    }
}

/// One Gillespie step of the finite-`N` model.
pub fn step_eta_finite<T: Real, R: Rng + ?Sized>(
    state: &mut OccupancyState<T>,
    params: &ParticleParams<T>,
    rng: &mut R,
) -> Result<StepOutcome<T>> {
    check_space(state, params, true)?;
    Ok(step_checked(state, params, rng))
}

/// One Gillespie step of the limit model.
pub fn step_eta_limit<T: Real, R: Rng + ?Sized>(
    state: &mut OccupancyState<T>,
    params: &ParticleParams<T>,
    rng: &mut R,
) -> Result<StepOutcome<T>> {
    check_space(state, params, false)?;
    Ok(step_checked(state, params, rng))
}

/// Runs the chain to time `t_end` (exactly, by memorylessness of the last
/// waiting time). Returns `true` if the chain was absorbed on the way.
pub fn advance_to<T: Real, R: Rng + ?Sized>(
    state: &mut OccupancyState<T>,
    params: &ParticleParams<T>,
    t_end: T,
    rng: &mut R,
    mut log: Option<&mut Vec<Event<T>>>,
) -> Result<bool> {
    check_space(state, params, matches!(params.space, Space::Finite { .. }))?;
    while state.t < t_end {
        let Some((wait, rates)) = sample_wait(state, params, rng) else {
            state.t = t_end;
            return Ok(true);
        };
        if state.t + wait > t_end {
            state.t = t_end;
            break;
        }
        state.t = state.t + wait;
        let ev = apply_event(state, params, &rates, rng);
        if let Some(log) = log.as_deref_mut() {
            log.push(ev);
        }
    }
    Ok(false)
}

/// Time averages of `total / N` and of the occupied fraction over
/// `[t_start, t_end]`, from a single run started with one particle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OccupancyAverages {
    pub intensity: f64,
    pub occupied_fraction: f64,
}

pub fn time_averaged_occupancy<T: Real, R: Rng + ?Sized>(
    params: &ParticleParams<T>,
    t_start: T,
    t_end: T,
    rng: &mut R,
) -> Result<OccupancyAverages> {
    let Space::Finite { n } = params.space else {
        return Err(Error::InvalidParameter { name: "space", reason: "needs the finite model".into() });
    };
    if !(t_start < t_end) {
        return Err(Error::InvalidParameter { name: "t_start", reason: "need t_start < t_end".into() });
    }
    let mut state = OccupancyState::finite(n, &[(0, 1)])?;
    advance_to(&mut state, params, t_start, rng, None)?;
    let (mut mass, mut occ) = (0.0f64, 0.0f64);
    loop {
        let hold_rates = sample_wait(&state, params, rng);
        let (wait, rates) = match hold_rates {
            Some(x) => x,
            None => (t_end - state.t, EventRates { birth: T::zero(), death: T::zero(), migrate: T::zero(), emigrate: T::zero(), immigrate: T::zero() }),
        };
        let until = (state.t + wait).min(t_end);
        let h = (until - state.t).as_f64();
        mass += h * state.total as f64;
        occ += h * state.occupied as f64;
        if until >= t_end || rates.total() <= T::zero() {
            break;
        }
        state.t = until;
        apply_event(&mut state, params, &rates, rng);
    }
    let span = (t_end - t_start).as_f64() * n as f64;
    Ok(OccupancyAverages { intensity: mass / span, occupied_fraction: occ / span })
}

/// `N^-1 * total` on `t_grid` for each replica of the finite model started
/// from one particle at site 0.
pub fn intensity_trajectory<T: Real>(
    params: &ParticleParams<T>,
    t_grid: &[T],
    replicas: usize,
    seed: u64,
) -> Result<Vec<Vec<T>>> {
    let Space::Finite { n } = params.space else {
        return Err(Error::InvalidParameter { name: "space", reason: "needs the finite model".into() });
    };
    if t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter { name: "t_grid", reason: "must be ascending".into() });
    }
    let nf = T::from_usize_lossy(n);
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(seed, r as u64);
            let mut state = OccupancyState::finite(n, &[(0, 1)])?;
            let mut out = Vec::with_capacity(t_grid.len());
            for &t in t_grid {
                advance_to(&mut state, params, t, &mut rng, None)?;
                out.push(T::from_u64(state.total()).expect("count") / nf);
            }
            Ok(out)
        })
        .collect()
}

/// Whether a lone particle may leave its site in the single-site chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum EmigrationRule {
    /// Every particle leaves at rate `c`, as in the finite model; the
    /// equilibrium of a typical site of the large finite system.
    #[default]
    AllOccupied,
    /// Only particles at sites with `k >= 2` leave, as in the limit model.
    Crowded,
}

/// Probability vector over occupation sizes `0..=K_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeDistribution<T> {
    pub probs: Vec<T>,
}

impl<T: Real> SizeDistribution<T> {
    pub fn k_max(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn mean(&self) -> T {
        self.probs.iter().enumerate().map(|(k, &p)| T::from_usize_lossy(k) * p).sum()
    }

    /// The law conditioned on `k >= 1`.
    pub fn conditioned_positive(&self) -> Result<Self> {
        let rest = T::one() - self.probs[0];
        if rest <= T::zero() {
            return Err(Error::Degenerate("no mass on k >= 1".into()));
        }
        let mut probs: Vec<T> = self.probs.iter().map(|&p| p / rest).collect();
        probs[0] = T::zero();
        Ok(SizeDistribution { probs })
    }
}

/// `ceil(4 (s/d + c iota / d + 10))`.
pub fn default_k_max<T: Real>(c: T, s: T, d: T, iota: T) -> usize {
    let v = T::lit(4.0) * (s / d + c * iota / d + T::lit(10.0));
    v.ceil().to_usize().unwrap_or(usize::MAX / 4)
}

/// Largest tail mass beyond `K_max` that is accepted.
pub const TAIL_TOLERANCE: f64 = 1e-10;

/// Stationary law of the single-site birth-death chain with up-rates
/// `s k + c iota` and down-rates `d k(k-1) + c k` (lone particles included
/// or not according to `rule`), by detailed balance truncated at `K_max`.
pub fn single_site_equilibrium<T: Real>(
    c: T,
    s: T,
    d: T,
    iota: T,
    k_max: Option<usize>,
    rule: EmigrationRule,
) -> Result<SizeDistribution<T>> {
    check_rates(c, s, d)?;
    check_nonneg("iota", iota.as_f64())?;
    if d <= T::zero() && iota > T::zero() {
        return Err(Error::InvalidParameter { name: "d", reason: "need d > 0 when iota > 0".into() });
    }
    let kmax = match k_max {
        Some(k) => k,
        None if d > T::zero() => default_k_max(c, s, d, iota),
        None => 1,
    };
    let up = |k: usize| s * T::from_usize_lossy(k) + c * iota;
    let down = |k: usize| {
        let kf = T::from_usize_lossy(k);
        let leave = match rule {
            EmigrationRule::AllOccupied => kf,
            EmigrationRule::Crowded if k >= 2 => kf,
            EmigrationRule::Crowded => T::zero(),
        };
        d * kf * (kf - T::one()) + c * leave
    };
    let ext = 2 * kmax + 20;
    let neg_inf = T::neg_infinity();
    let mut logw = vec![neg_inf; ext + 1];
    logw[0] = T::zero();
    for k in 0..ext {
        let (l, m) = (up(k), down(k + 1));
        if l <= T::zero() {
            break;
        }
        if m <= T::zero() {
            // k+1 cannot be left downwards: everything below is transient.
            for w in logw.iter_mut().take(k + 1) {
                *w = neg_inf;
            }
            logw[k + 1] = T::zero();
            continue;
        }
        logw[k + 1] = logw[k] + l.ln() - m.ln();
    }
    let top = logw.iter().copied().fold(neg_inf, T::max);
    let w: Vec<T> = logw.iter().map(|&lw| (lw - top).exp()).collect();
    let kept: T = w[..=kmax].iter().copied().sum();
    let tail: T = w[kmax + 1..].iter().copied().sum();
    let tail_frac = (tail / (kept + tail)).as_f64();
    let tol = TAIL_TOLERANCE.max(T::epsilon().as_f64() * 100.0);
    if tail_frac > tol {
        return Err(Error::Truncation { k_max: kmax, tail: tail_frac });
    }
    Ok(SizeDistribution { probs: w[..=kmax].iter().map(|&x| x / kept).collect() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntensityFixedPoint {
    pub iota_star: f64,
    /// `0` is always a fixed point.
    pub trivial: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Damped iteration `iota <- (iota + F(iota)) / 2`, `F(iota)` the mean of the
/// single-site equilibrium, started at `s/d`.
pub fn self_consistent_intensity(
    c: f64,
    s: f64,
    d: f64,
    tol: f64,
    k_max: Option<usize>,
    rule: EmigrationRule,
) -> Result<IntensityFixedPoint> {
    check_positive("tol", tol)?;
    check_positive("d", d)?;
    const MAX_ITER: usize = 10_000;
    let mut iota = s / d;
    let mut history = Vec::new();
    for it in 1..=MAX_ITER {
        let f = single_site_equilibrium(c, s, d, iota, k_max, rule)?.mean();
        let residual = f - iota;
        if residual.abs() < tol {
            return Ok(IntensityFixedPoint { iota_star: iota, trivial: 0.0, iterations: it, residual });
        }
        history.push(iota);
        if history.len() > 8 {
            history.remove(0);
        }
        iota = 0.5 * iota + 0.5 * f;
    }
    Err(Error::NoConvergence { iterations: MAX_ITER, last: history })
}
