//! Monte Carlo checks of the duality identities between the diffusion models
//! and the particle models.
//!
//! * Moment duality: `E[X_t^k] = E[x0^{D_t}]`, `X` the neutral diffusion
//!   (`c = s = 0`) and `D` the death chain `n -> n-1` at rate `d n(n-1)/2`.
//! * Spatial duality: `E[x_1(i, t)]` for the `N`-site system started all
//!   type 1 equals `E[exp(-(m/N) int_0^t Pi_u du)]`, `Pi` the total count of
//!   the finite logistic branching walk started from one particle.
//!
//! The particle death rate `d` corresponds to diffusion noise `2d`; both
//! spatial checks take diffusion-scale parameters and halve `d` for the dual.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_positive, Error, Result};
use crate::fw_meanfield::{empirical_mean, run_for, FrequencyState, FrequencyType, SystemParams};
use crate::fw_single::{step_fw_rng, ClampTally, DiffusionParams, NoiseScheme};
use crate::particles::{step_eta_finite, EventKind, OccupancyState, ParticleParams, StepOutcome};
use crate::rng::{replica_rng, stream_seed};
use crate::scalar::Real;
use crate::stats::{linear_fit, median, z_score, LinearFit, Summary};

/// Default `|z|` threshold of a single check.
pub const Z_THRESHOLD: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualityReport {
    pub lhs_mean: f64,
    pub lhs_se: f64,
    pub rhs_mean: f64,
    pub rhs_se: f64,
    pub z_score: f64,
    pub pass: bool,
}

impl DualityReport {
    pub fn new(lhs: Summary, rhs: Summary) -> Self {
        let z = z_score(lhs.mean, lhs.se, rhs.mean, rhs.se);
        DualityReport {
            lhs_mean: lhs.mean,
            lhs_se: lhs.se,
            rhs_mean: rhs.mean,
            rhs_se: rhs.se,
            z_score: z,
            pass: z.abs() < Z_THRESHOLD,
        }
    }

    /// Re-evaluates `pass` at another threshold.
    pub fn with_threshold(mut self, z_max: f64) -> Self {
        self.pass = self.z_score.abs() < z_max;
        self
    }
}

/// `P(D_t = j)` for `j = 1..=k` when `k <= 3`.
pub fn death_chain_law(k: u32, d: f64, t: f64) -> Option<Vec<f64>> {
    match k {
        1 => Some(vec![1.0]),
        2 => {
            let p2 = (-d * t).exp();
            Some(vec![1.0 - p2, p2])
        }
        3 => {
            let p3 = (-3.0 * d * t).exp();
            let p2 = 1.5 * ((-d * t).exp() - p3);
            Some(vec![1.0 - p2 - p3, p2, p3])
        }
        _ => None,
    }
}

/// Samples `D_t` from `D_0 = k`.
pub fn sample_death_chain<R: Rng + ?Sized>(k: u32, d: f64, t: f64, rng: &mut R) -> u32 {
    let mut n = k;
    let mut clock = 0.0;
    while n > 1 {
        let rate = d * f64::from(n) * f64::from(n - 1) / 2.0;
        clock += f64::exp1(rng) / rate;
        if clock > t {
            break;
        }
        n -= 1;
    }
    n
}

/// Moment duality at `(x0, k, d, t)`. The left side uses `replicas`
/// diffusion paths with step `dt`; the right side is exact for `k <= 3` and
/// uses `replicas` death-chain samples otherwise.
#[allow(clippy::too_many_arguments)]
pub fn check_moment_duality<T: Real>(
    x0: T,
    d: T,
    k: u32,
    t: T,
    dt: T,
    scheme: NoiseScheme,
    replicas: usize,
    seed: u64,
) -> Result<DualityReport> {
    if k == 0 {
        return Err(Error::InvalidParameter { name: "k", reason: "need k >= 1".into() });
    }
    check_positive("d", d.as_f64())?;
    check_positive("dt", dt.as_f64())?;
    let xf = x0.as_f64();
    if !(0.0..=1.0).contains(&xf) {
        return Err(Error::Domain { what: "x0", value: xf, domain: "[0, 1]" });
    }
    if replicas < 2 {
        return Err(Error::InvalidParameter { name: "replicas", reason: "need at least 2".into() });
    }
    let params = DiffusionParams::new(T::zero(), T::zero(), d, T::zero())?;
    let steps = (t / dt).round().to_usize().unwrap_or(0);
    let lhs_seed = stream_seed(seed, "moment-lhs");
    let lhs: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(lhs_seed, r as u64);
            let mut tally = ClampTally::default();
            let mut x = x0;
            for _ in 0..steps {
                x = step_fw_rng(x, &params, dt, scheme, &mut rng, &mut tally)?;
            }
            Ok(x.as_f64().powi(k as i32))
        })
        .collect::<Result<_>>()?;
    let (df, tf) = (d.as_f64(), t.as_f64());
    let rhs = match death_chain_law(k, df, tf) {
        Some(law) => {
            let mean = law.iter().enumerate().map(|(j, p)| p * xf.powi(j as i32 + 1)).sum();
            Summary { n: 0, mean, var: 0.0, se: 0.0 }
        }
        None => {
            let rhs_seed = stream_seed(seed, "moment-rhs");
            let draws: Vec<f64> = (0..replicas)
                .into_par_iter()
                .map(|r| {
                    let mut rng = replica_rng(rhs_seed, r as u64);
                    xf.powi(sample_death_chain(k, df, tf, &mut rng) as i32)
                })
                .collect();
            Summary::of(&draws)
        }
    };
    Ok(DualityReport::new(Summary::of(&lhs), rhs))
}

/// Total count of the finite model on `[0, t]`: the count after each event
/// and the exact integral of the piecewise-constant path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupationPath<T> {
    pub times: Vec<T>,
    pub counts: Vec<u64>,
    pub integral: T,
}

fn count_change(kind: EventKind) -> i64 {
    match kind {
        EventKind::Birth | EventKind::Immigrate => 1,
        EventKind::Death => -1,
        EventKind::Migrate | EventKind::Emigrate => 0,
    }
}

/// Runs the finite model from one particle at site 0 up to `t`.
pub fn dual_occupation<T: Real, R: Rng + ?Sized>(
    params: &ParticleParams<T>,
    t: T,
    rng: &mut R,
) -> Result<OccupationPath<T>> {
    let crate::particles::Space::Finite { n } = params.space else {
        return Err(Error::InvalidParameter { name: "space", reason: "needs the finite model".into() });
    };
    let mut state = OccupancyState::finite(n, &[(0, 1)])?;
    let mut path = OccupationPath { times: vec![T::zero()], counts: vec![1], integral: T::zero() };
    let mut count = 1u64;
    loop {
        let before = state.t();
        let outcome = step_eta_finite(&mut state, params, rng)?;
        let until = match outcome {
            StepOutcome::Event(ev) if ev.t <= t => ev.t,
            _ => t,
        };
        path.integral = path.integral + (until - before) * T::from_u64(count).unwrap_or_else(T::max_value);
        match outcome {
            StepOutcome::Event(ev) if ev.t <= t => {
                count = count.saturating_add_signed(count_change(ev.kind));
                path.times.push(ev.t);
                path.counts.push(count);
            }
            _ => return Ok(path),
        }
    }
}

/// Spatial duality for the `N`-site system (diffusion-scale `d`). The left
/// side averages `x_1` over sites, the right side uses the dual with death
/// rate `d/2`.
pub fn check_spatial_duality<T: Real>(
    params: &SystemParams<T>,
    t: T,
    dt: T,
    scheme: NoiseScheme,
    replicas: usize,
    seed: u64,
) -> Result<DualityReport> {
    if replicas < 2 {
        return Err(Error::InvalidParameter { name: "replicas", reason: "need at least 2".into() });
    }
    check_positive("dt", dt.as_f64())?;
    let lhs_seed = stream_seed(seed, "spatial-lhs");
    let rhs_seed = stream_seed(seed, "spatial-rhs");
    let lhs: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(lhs_seed, r as u64);
            let mut tally = ClampTally::default();
            let mut state = FrequencyState::<T>::all_ones(params.n);
            run_for(&mut state, params, t, dt, scheme, &mut rng, &mut tally)?;
            Ok(empirical_mean(&state, FrequencyType::One).as_f64())
        })
        .collect::<Result<_>>()?;
    let dual = ParticleParams::finite(params.n, params.c, params.s, params.d / T::lit(2.0))?;
    let rate = params.mutation_rate().as_f64();
    let rhs: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(rhs_seed, r as u64);
            let path = dual_occupation(&dual, t, &mut rng)?;
            Ok((-rate * path.integral.as_f64()).exp())
        })
        .collect::<Result<_>>()?;
    Ok(DualityReport::new(Summary::of(&lhs), Summary::of(&rhs)))
}

/// First time `(m/L) int_0^T Pi_u du` reaches 1 for the single-site dual
/// (particle rates `s` and `d`, started from one particle).
pub fn hazard_time<T: Real, R: Rng + ?Sized>(params: &ParticleParams<T>, m: T, l: T, rng: &mut R) -> Result<T> {
    check_positive("m", m.as_f64())?;
    let target = l / m;
    let mut state = OccupancyState::finite(1, &[(0, 1)])?;
    let mut integral = T::zero();
    let mut count = 1u64;
    loop {
        let before = state.t();
        let k = T::from_u64(count).unwrap_or_else(T::max_value);
        match step_eta_finite(&mut state, params, rng)? {
            StepOutcome::Event(ev) => {
                let gained = (ev.t - before) * k;
                if integral + gained >= target {
                    return Ok(before + (target - integral) / k);
                }
                integral = integral + gained;
                count = count.saturating_add_signed(count_change(ev.kind));
            }
            StepOutcome::Extinct => return Ok(before + (target - integral) / k),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimescaleFit {
    pub l: Vec<f64>,
    pub medians: Vec<f64>,
    /// Regressor: `ln L` when `d = 0`, `L` otherwise.
    pub regressor: Vec<f64>,
    pub fit: LinearFit,
}

/// Median hazard times over the `L` grid, fitted against `ln L` (for
/// `d = 0`) or `L` (for `d > 0`). `d` is on the diffusion scale.
pub fn single_site_timescale(
    s: f64,
    d: f64,
    m: f64,
    l_grid: &[f64],
    replicas: usize,
    seed: u64,
) -> Result<TimescaleFit> {
    if l_grid.len() < 2 {
        return Err(Error::InvalidParameter { name: "L", reason: "need at least two values".into() });
    }
    if replicas == 0 {
        return Err(Error::InvalidParameter { name: "replicas", reason: "need at least 1".into() });
    }
    check_positive("s", s)?;
    let params = ParticleParams::finite(1, 0.0, s, d / 2.0)?;
    let mut medians = Vec::with_capacity(l_grid.len());
    for (i, &l) in l_grid.iter().enumerate() {
        check_positive("L", l)?;
        let arm = replica_rng(seed, i as u64).random::<u64>();
        let times: Vec<f64> = (0..replicas)
            .into_par_iter()
            .map(|r| hazard_time(&params, m, l, &mut replica_rng(arm, r as u64)))
            .collect::<Result<_>>()?;
        medians.push(median(&times));
    }
    let regressor: Vec<f64> = if d == 0.0 { l_grid.iter().map(|l| l.ln()).collect() } else { l_grid.to_vec() };
    let fit = linear_fit(&regressor, &medians).ok_or_else(|| Error::Degenerate("L grid has no spread".into()))?;
    Ok(TimescaleFit { l: l_grid.to_vec(), medians, regressor, fit })
}
