//! Crump-Mode-Jagers view of the collision-free process.
//!
//! Occupied sites are the individuals: a site is born when an emigrant lands
//! on it and it gives birth at rate `c * k * [k >= 2]` while holding `k`
//! particles. Three estimates of the Malthusian parameter are provided: the
//! root of the Laplace equation for the birth intensity measure, the slope of
//! `log K_t`, and the stable size distribution formula.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_nonneg, check_positive, Error, Result};
use crate::particles::{advance_to, Event, EventKind, OccupancyState, ParticleParams};
use crate::rng::replica_rng;
use crate::scalar::Real;
use crate::stats::{linear_fit, Summary};

/// Counts of occupied sites by (age bin, size), plus sites with size above
/// `j_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgeSizeHistogram {
    pub da: f64,
    pub j_max: usize,
    /// `cells[a][j-1]`: sites of age in `[a da, (a+1) da)` holding `j` particles.
    pub cells: Vec<Vec<f64>>,
    pub overflow: f64,
    pub normalized: bool,
}

impl AgeSizeHistogram {
    fn new(da: f64, j_max: usize, age_bins: usize) -> Self {
        AgeSizeHistogram { da, j_max, cells: vec![vec![0.0; j_max]; age_bins.max(1)], overflow: 0.0, normalized: false }
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().flatten().sum::<f64>() + self.overflow
    }

    pub fn normalize(&self) -> Result<Self> {
        let total = self.total();
        if total <= 0.0 {
            return Err(Error::Degenerate("empty histogram".into()));
        }
        let mut out = self.clone();
        for row in out.cells.iter_mut() {
            for v in row.iter_mut() {
                *v /= total;
            }
        }
        out.overflow /= total;
        out.normalized = true;
        Ok(out)
    }

    /// Adds the counts of `other`, padding age bins as needed.
    pub fn merge(&mut self, other: &AgeSizeHistogram) {
        assert_eq!(self.j_max, other.j_max);
        if other.cells.len() > self.cells.len() {
            self.cells.resize(other.cells.len(), vec![0.0; self.j_max]);
        }
        for (row, orow) in self.cells.iter_mut().zip(&other.cells) {
            for (v, o) in row.iter_mut().zip(orow) {
                *v += o;
            }
        }
        self.overflow += other.overflow;
    }

    /// Size marginal, entry `j-1` for size `j`.
    pub fn size_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.j_max];
        for row in &self.cells {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out
    }

    pub fn age_marginal(&self) -> Vec<f64> {
        self.cells.iter().map(|r| r.iter().sum()).collect()
    }
}

/// Replays `log` from the initial configuration up to time `t` and bins the
/// occupied sites by age (time since the site was last occupied from empty)
/// and current size.
pub fn track_age_size<T: Real>(
    initial: &[(usize, u32)],
    log: &[Event<T>],
    t: T,
    da: f64,
    j_max: usize,
) -> Result<AgeSizeHistogram> {
    check_positive("da", da)?;
    if j_max == 0 {
        return Err(Error::InvalidParameter { name: "j_max", reason: "need at least 1".into() });
    }
    let mut counts: Vec<u32> = Vec::new();
    let mut since: Vec<f64> = Vec::new();
    let bump = |site: usize, up: bool, at: f64, counts: &mut Vec<u32>, since: &mut Vec<f64>| {
        if site >= counts.len() {
            counts.resize(site + 1, 0);
            since.resize(site + 1, 0.0);
        }
        if up {
            if counts[site] == 0 {
                since[site] = at;
            }
            counts[site] += 1;
        } else {
            counts[site] -= 1;
        }
    };
    for &(site, k) in initial {
        for _ in 0..k {
            bump(site, true, 0.0, &mut counts, &mut since);
        }
    }
    for ev in log.iter().take_while(|e| e.t <= t) {
        let at = ev.t.as_f64();
        match ev.kind {
            EventKind::Birth | EventKind::Immigrate => bump(ev.site, true, at, &mut counts, &mut since),
            EventKind::Death => bump(ev.site, false, at, &mut counts, &mut since),
            EventKind::Migrate | EventKind::Emigrate => {
                let dest = ev.target.expect("moves carry a destination");
                if dest != ev.site {
                    bump(ev.site, false, at, &mut counts, &mut since);
                    bump(dest, true, at, &mut counts, &mut since);
                }
            }
        }
    }
    let tf = t.as_f64();
    let bins = (tf / da).floor() as usize + 1;
    let mut h = AgeSizeHistogram::new(da, j_max, bins);
    for (&k, &s0) in counts.iter().zip(&since) {
        if k == 0 {
            continue;
        }
        let k = k as usize;
        if k > j_max {
            h.overflow += 1.0;
            continue;
        }
        let a = (((tf - s0) / da).floor() as usize).min(bins - 1);
        h.cells[a][k - 1] += 1.0;
    }
    Ok(h)
}

/// `mu([0, t])` on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BirthIntensityCurve {
    pub t_grid: Vec<f64>,
    pub mu: Vec<f64>,
    /// Standard error of each `mu` entry.
    pub se: Vec<f64>,
}

/// Rates of the single-site internal chain: birth `s k`, death `d k(k-1)`,
/// emigration `c k [k >= 2]` with the emigrant discarded.
fn zeta_rates(c: f64, s: f64, d: f64, k: u64) -> (f64, f64, f64) {
    let kf = k as f64;
    (s * kf, d * kf * (kf - 1.0), if k >= 2 { c * kf } else { 0.0 })
}

/// `int_0^{t_i} c zeta(u) [zeta(u) >= 2] du` for every grid point, along one
/// path of the internal chain started from a single particle. The integrand
/// is piecewise constant, so the integral is exact.
fn zeta_path_integrals<R: Rng + ?Sized>(c: f64, s: f64, d: f64, t_grid: &[f64], rng: &mut R) -> Vec<f64> {
    let mut out = Vec::with_capacity(t_grid.len());
    let (mut k, mut t, mut acc) = (1u64, 0.0f64, 0.0f64);
    let mut next = 0usize;
    let intensity = |k: u64| if k >= 2 { c * k as f64 } else { 0.0 };
    loop {
        let (b, de, e) = zeta_rates(c, s, d, k);
        let total = b + de + e;
        let wait = if total > 0.0 { f64::exp1(rng) / total } else { f64::INFINITY };
        let t_next = t + wait;
        while next < t_grid.len() && t_grid[next] <= t_next {
            out.push(acc + intensity(k) * (t_grid[next] - t));
            next += 1;
        }
        if next == t_grid.len() {
            return out;
        }
        acc += intensity(k) * wait;
        t = t_next;
        let u = f64::uniform01(rng) * total;
        if u < b {
            k += 1;
        } else {
            k -= 1;
        }
    }
}

/// Monte Carlo estimate of `mu([0, t]) = c int_0^t E[zeta(u) [zeta(u) >= 2]] du`.
pub fn estimate_mu(c: f64, s: f64, d: f64, t_grid: &[f64], replicas: usize, seed: u64) -> Result<BirthIntensityCurve> {
    check_nonneg("c", c)?;
    check_nonneg("s", s)?;
    check_nonneg("d", d)?;
    if t_grid.is_empty() || t_grid[0] < 0.0 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter { name: "t_grid", reason: "need a strictly ascending grid in [0, inf)".into() });
    }
    if replicas < 2 {
        return Err(Error::InvalidParameter { name: "replicas", reason: "need at least 2".into() });
    }
    let paths: Vec<Vec<f64>> = (0..replicas)
        .into_par_iter()
        .map(|r| zeta_path_integrals(c, s, d, t_grid, &mut replica_rng(seed, r as u64)))
        .collect();
    let mut mu = Vec::with_capacity(t_grid.len());
    let mut se = Vec::with_capacity(t_grid.len());
    let mut column = vec![0.0; replicas];
    for i in 0..t_grid.len() {
        for (slot, p) in column.iter_mut().zip(&paths) {
            *slot = p[i];
        }
        let summary = Summary::of(&column);
        mu.push(summary.mean);
        se.push(summary.se);
    }
    Ok(BirthIntensityCurve { t_grid: t_grid.to_vec(), mu, se })
}

impl BirthIntensityCurve {
    /// `int e^{-alpha t} mu(dt)`, with `mu` linear between grid points and
    /// continued beyond the grid at its final slope.
    pub fn laplace(&self, alpha: f64) -> f64 {
        let (t, mu) = (&self.t_grid, &self.mu);
        let mut total = 0.0;
        let mut prev_t = 0.0;
        let mut prev_mu = 0.0;
        let mut slope = 0.0;
        for (&ti, &mi) in t.iter().zip(mu) {
            let h = ti - prev_t;
            if h > 0.0 {
                slope = (mi - prev_mu) / h;
                total += slope * ((-alpha * prev_t).exp() - (-alpha * ti).exp()) / alpha;
            }
            prev_t = ti;
            prev_mu = mi;
        }
        total + slope * (-alpha * prev_t).exp() / alpha
    }
}

/// Lower end of the bisection bracket.
pub const ALPHA_FLOOR: f64 = 1e-6;

/// Root of `int e^{-alpha t} mu(dt) = 1` on `[ALPHA_FLOOR, s]`.
pub fn malthusian_alpha(mu: &BirthIntensityCurve, s: f64) -> Result<f64> {
    check_positive("s", s)?;
    let f = |a: f64| mu.laplace(a) - 1.0;
    let (mut lo, mut hi) = (ALPHA_FLOOR, s);
    let (flo, fhi) = (f(lo), f(hi));
    if flo < 0.0 {
        return Err(Error::NoRoot { lo, hi, diagnostic: "Laplace transform below 1 at the lower end: subcritical" });
    }
    if fhi > 0.0 {
        return Err(Error::NoRoot { lo, hi, diagnostic: "Laplace transform above 1 at alpha = s" });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthFit {
    pub alpha: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `K_T e^{-alpha T}` per replica.
    pub w_samples: Vec<f64>,
}

/// Pooled least-squares slope of `log K_t` over the last `tail_fraction` of
/// the sample times.
pub fn growth_rate_fit(times: &[f64], k_t: &[Vec<f64>], tail_fraction: f64) -> Result<GrowthFit> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidParameter { name: "tail_fraction", reason: "must lie in (0, 1]".into() });
    }
    if k_t.iter().any(|r| r.len() != times.len()) {
        return Err(Error::InvalidParameter { name: "k_t", reason: "every trajectory must match the time grid".into() });
    }
    let alive: Vec<&Vec<f64>> = k_t.iter().filter(|r| r.last().is_some_and(|&k| k > 0.0)).collect();
    if alive.is_empty() {
        return Err(Error::Degenerate("every trajectory is extinct".into()));
    }
    let start = ((1.0 - tail_fraction) * times.len() as f64).floor() as usize;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for r in &alive {
        for (&t, &k) in times[start..].iter().zip(&r[start..]) {
            if k > 0.0 {
                xs.push(t);
                ys.push(k.ln());
            }
        }
    }
    let fit = linear_fit(&xs, &ys).ok_or_else(|| Error::Degenerate("tail window has a single time".into()))?;
    let t_end = *times.last().expect("non-empty");
    let w_samples = alive.iter().map(|r| r.last().expect("non-empty") * (-fit.slope * t_end).exp()).collect();
    Ok(GrowthFit { alpha: fit.slope, intercept: fit.intercept, r_squared: fit.r_squared, w_samples })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CmjRates {
    pub alpha: f64,
    pub gamma: f64,
    pub b: f64,
}

/// `alpha = c sum_{j>=2} j U(j)`, `gamma = c U(1)`, `B = (alpha + gamma)/c`
/// from the size marginal `U` of a normalised histogram.
pub fn cmj_rates(stable: &AgeSizeHistogram, c: f64) -> Result<CmjRates> {
    check_positive("c", c)?;
    let h = if stable.normalized { stable.clone() } else { stable.normalize()? };
    if h.overflow > 0.0 {
        return Err(Error::Truncation { k_max: h.j_max, tail: h.overflow });
    }
    let u = h.size_marginal();
    let alpha = c * u.iter().enumerate().skip(1).map(|(i, p)| (i + 1) as f64 * p).sum::<f64>();
    let gamma = c * u[0];
    Ok(CmjRates { alpha, gamma, b: (alpha + gamma) / c })
}

/// One collision-free run from a single particle.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionFreeRun {
    /// Occupied-site count at each sample time.
    pub k_t: Vec<f64>,
    pub log: Vec<Event<f64>>,
}

pub fn simulate_collision_free(params: &ParticleParams<f64>, times: &[f64], seed: u64, replica: u64) -> Result<CollisionFreeRun> {
    let mut rng = replica_rng(seed, replica);
    let mut state = OccupancyState::unbounded(&[(0, 1)]);
    let mut log = Vec::new();
    let mut k_t = Vec::with_capacity(times.len());
    for &t in times {
        advance_to(&mut state, params, t, &mut rng, Some(&mut log))?;
        k_t.push(state.occupied_sites() as f64);
    }
    Ok(CollisionFreeRun { k_t, log })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CmjConfig {
    pub horizon: f64,
    pub replicas: usize,
    pub mu_replicas: usize,
    pub mu_t_max: f64,
    pub mu_dt: f64,
    pub da: f64,
    pub j_max: usize,
    pub sample_points: usize,
    pub tail_fraction: f64,
    pub seed: u64,
}

impl CmjConfig {
    pub fn for_rates(s: f64, d: f64) -> Self {
        CmjConfig {
            horizon: 16.0 / s,
            replicas: 200,
            mu_replicas: 100_000,
            mu_t_max: 30.0 / s,
            mu_dt: 0.05 / s,
            da: 0.25 / s,
            j_max: if d > 0.0 { (4.0 * (s / d + 10.0)).ceil() as usize } else { 400 },
            sample_points: 65,
            tail_fraction: 0.5,
            seed: 0,
        }
    }
}

/// All three growth-rate estimates on one parameter set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CmjReport {
    pub alpha_laplace: f64,
    pub alpha_regression: f64,
    pub alpha_histogram: f64,
    pub gamma: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub w_mean: f64,
    pub w_var: f64,
    /// Total variation between the pooled normalised histograms at `T/2`
    /// and `T`.
    pub stability_tv: f64,
    pub overflow: f64,
    pub mu: BirthIntensityCurve,
    pub stable_size: Vec<f64>,
}

pub fn cmj_report(c: f64, s: f64, d: f64, cfg: &CmjConfig) -> Result<CmjReport> {
    check_positive("c", c)?;
    check_positive("horizon", cfg.horizon)?;
    if cfg.sample_points < 2 {
        return Err(Error::InvalidParameter { name: "sample_points", reason: "need at least 2".into() });
    }
    let params = ParticleParams::collision_free(c, s, d)?;
    let n_mu = (cfg.mu_t_max / cfg.mu_dt).round() as usize;
    let t_grid: Vec<f64> = (1..=n_mu).map(|i| i as f64 * cfg.mu_dt).collect();
    let mu = estimate_mu(c, s, d, &t_grid, cfg.mu_replicas, crate::rng::stream_seed(cfg.seed, "mu"))?;
    let alpha_laplace = malthusian_alpha(&mu, s)?;

    let times: Vec<f64> =
        (1..=cfg.sample_points).map(|i| cfg.horizon * i as f64 / cfg.sample_points as f64).collect();
    let run_seed = crate::rng::stream_seed(cfg.seed, "collision-free");
    let per_run: Vec<Result<(Vec<f64>, AgeSizeHistogram, AgeSizeHistogram)>> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let run = simulate_collision_free(&params, &times, run_seed, r as u64)?;
            let full = track_age_size(&[(0, 1)], &run.log, cfg.horizon, cfg.da, cfg.j_max)?;
            let half = track_age_size(&[(0, 1)], &run.log, cfg.horizon / 2.0, cfg.da, cfg.j_max)?;
            Ok((run.k_t, full, half))
        })
        .collect();
    let mut k_t = Vec::with_capacity(cfg.replicas);
    let mut pooled_full: Option<AgeSizeHistogram> = None;
    let mut pooled_half: Option<AgeSizeHistogram> = None;
    for r in per_run {
        let (k, full, half) = r?;
        k_t.push(k);
        match pooled_full.as_mut() {
            Some(p) => p.merge(&full),
            None => pooled_full = Some(full),
        }
        match pooled_half.as_mut() {
            Some(p) => p.merge(&half),
            None => pooled_half = Some(half),
        }
    }
    let full = pooled_full.ok_or_else(|| Error::Degenerate("no replicas".into()))?.normalize()?;
    let half = pooled_half.ok_or_else(|| Error::Degenerate("no replicas".into()))?.normalize()?;
    let fit = growth_rate_fit(&times, &k_t, cfg.tail_fraction)?;
    let w = Summary::of(&fit.w_samples);
    let stable_size = full.size_marginal();
    let stability_tv = crate::stats::total_variation(&stable_size, &half.size_marginal());
    let overflow = full.overflow;
    let rates = cmj_rates(&full, c)?;
    Ok(CmjReport {
        alpha_laplace,
        alpha_regression: fit.alpha,
        alpha_histogram: rates.alpha,
        gamma: rates.gamma,
        b: rates.b,
        w_mean: w.mean,
        w_var: w.var,
        stability_tv,
        overflow,
        mu,
        stable_size,
    })
}
