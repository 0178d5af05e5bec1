//! The droplet limit: excursions of the single-site diffusion (pulled to 0 by
//! migration) launched at a rate driven by immigration `m` and by the mass
//! already present.
//!
//! Excursions are cut at level `eps`: new atoms start at `eps` and arrive as a
//! Poisson stream of intensity `(m + c M) / S(eps)`, `M` the current total
//! mass and `S` the scale function.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_positive, Error, Result};
use crate::fw_meanfield::{run_for, type2_mass, FrequencyState, SystemParams, MASS_FLOOR};
use crate::fw_single::{advance_raw, scale_function, ClampTally, DiffusionParams, NoiseScheme};
use crate::rng::replica_rng;
use crate::scalar::Real;
use crate::stats::{linear_fit, Summary};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom<T> {
    pub label: T,
    pub mass: T,
    pub birth: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DropletState<T> {
    pub active: Vec<Atom<T>>,
    pub total_mass: T,
    pub t: T,
}

impl<T: Real> Default for DropletState<T> {
    fn default() -> Self {
        DropletState { active: Vec::new(), total_mass: T::zero(), t: T::zero() }
    }
}

impl<T: Real> DropletState<T> {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn n_atoms(&self) -> usize {
        self.active.len()
    }
}

/// Rates and cut-off of a droplet simulation, with `S(eps)` precomputed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DropletModel<T> {
    pub params: DiffusionParams<T>,
    pub m: T,
    pub eps: T,
    pub scale_eps: T,
    pub scheme: NoiseScheme,
}

impl<T: Real> DropletModel<T> {
    /// `params.m_bar` is ignored: excursions are pulled towards 0.
    pub fn new(params: DiffusionParams<T>, m: T, eps: T) -> Result<Self> {
        let e = eps.as_f64();
        if !(e > 0.0 && e < 1.0) {
            return Err(Error::Domain { what: "eps", value: e, domain: "(0, 1)" });
        }
        if !(m.as_f64() >= 0.0) {
            return Err(Error::InvalidParameter { name: "m", reason: "must be non-negative".into() });
        }
        check_positive("d", params.d.as_f64())?;
        let params = params.with_mean(T::zero());
        let scale_eps = scale_function(&params, eps)?;
        Ok(DropletModel { params, m, eps, scale_eps, scheme: NoiseScheme::default() })
    }

    pub fn with_scheme(mut self, scheme: NoiseScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn spawn_intensity(&self, total_mass: T) -> T {
        (self.m + self.params.c * total_mass) / self.scale_eps
    }
}

/// Advances every atom by one diffusion step, drops atoms that hit 0, then
/// adds the atoms spawned during the step at level `eps`.
pub fn step_droplet<T: Real, R: Rng + ?Sized>(
    state: &mut DropletState<T>,
    model: &DropletModel<T>,
    dt: T,
    rng: &mut R,
    tally: &mut ClampTally,
) -> Result<()> {
    if !dt.is_finite() {
        return Err(Error::NonFinite("dt"));
    }
    check_positive("dt", dt.as_f64())?;
    let intensity = model.spawn_intensity(state.total_mass);
    let p = &model.params;
    let floor = T::lit(MASS_FLOOR);
    state.active.retain_mut(|a| {
        let raw = advance_raw(a.mass, p.drift(a.mass), p.d, dt, model.scheme, rng, tally);
        a.mass = tally.clamp(raw);
        a.mass >= floor
    });
    let spawned = T::poisson(intensity * dt, rng);
    for _ in 0..spawned {
        let label = T::uniform01(rng);
        let birth = state.t + dt * T::uniform01(rng);
        state.active.push(Atom { label, mass: model.eps, birth });
    }
    state.total_mass = state.active.iter().map(|a| a.mass).sum();
    state.t = state.t + dt;
    Ok(())
}

/// Total mass and atom count sampled every `record_every` steps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DropletTrace<T> {
    pub times: Vec<T>,
    pub total_mass: Vec<T>,
    pub n_atoms: Vec<usize>,
}

pub fn run_droplet<T: Real, R: Rng + ?Sized>(
    model: &DropletModel<T>,
    horizon: T,
    dt: T,
    record_every: usize,
    rng: &mut R,
) -> Result<(DropletTrace<T>, DropletState<T>)> {
    check_positive("horizon", horizon.as_f64())?;
    let steps = (horizon / dt).round().to_usize().unwrap_or(0);
    let every = record_every.max(1);
    let mut state = DropletState::empty();
    let mut tally = ClampTally::default();
    let mut trace = DropletTrace { times: vec![T::zero()], total_mass: vec![T::zero()], n_atoms: vec![0] };
    for i in 1..=steps {
        step_droplet(&mut state, model, dt, rng, &mut tally)?;
        if i % every == 0 || i == steps {
            trace.times.push(state.t);
            trace.total_mass.push(state.total_mass);
            trace.n_atoms.push(state.n_atoms());
        }
    }
    Ok((trace, state))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthConstant {
    pub alpha_star: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub times: Vec<f64>,
    pub mean_mass: Vec<f64>,
    /// `e^{-alpha_star t} E[M_t]` on the sample times.
    pub rescaled_mean: Vec<f64>,
    /// `max / min - 1` of `rescaled_mean` over the tail half.
    pub tail_variation: f64,
    /// `e^{-alpha_star T} M_T` per replica.
    pub w_samples: Vec<f64>,
    pub w: Summary,
    pub extinct_replicas: usize,
}

/// Replica-parallel runs from the empty state, replica `r` seeded from
/// `(seed, r)`.
pub fn droplet_traces<T: Real>(
    model: &DropletModel<T>,
    horizon: T,
    dt: T,
    record_every: usize,
    replicas: usize,
    seed: u64,
) -> Result<Vec<DropletTrace<T>>> {
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(seed, r as u64);
            run_droplet(model, horizon, dt, record_every, &mut rng).map(|(tr, _)| tr)
        })
        .collect()
}

/// Fits `log E[M_t]` by least squares over the tail half of the sampled
/// window.
pub fn growth_from_traces<T: Real>(traces: &[DropletTrace<T>]) -> Result<GrowthConstant> {
    let Some(first) = traces.first() else {
        return Err(Error::InvalidParameter { name: "replicas", reason: "need at least 1".into() });
    };
    let times: Vec<f64> = first.times.iter().map(|t| t.as_f64()).collect();
    let nf = traces.len() as f64;
    let mean_mass: Vec<f64> = (0..times.len())
        .map(|i| traces.iter().map(|tr| tr.total_mass[i].as_f64()).sum::<f64>() / nf)
        .collect();
    let t_end = *times.last().unwrap_or(&0.0);
    let tail: Vec<usize> = (0..times.len()).filter(|&i| times[i] >= 0.5 * t_end).collect();
    if tail.iter().any(|&i| mean_mass[i] <= 0.0) {
        return Err(Error::Degenerate("all replicas empty inside the fitting window".into()));
    }
    let xs: Vec<f64> = tail.iter().map(|&i| times[i]).collect();
    let ys: Vec<f64> = tail.iter().map(|&i| mean_mass[i].ln()).collect();
    let fit = linear_fit(&xs, &ys).ok_or_else(|| Error::Degenerate("fewer than two sample times in the tail".into()))?;
    let alpha = fit.slope;
    let rescaled_mean: Vec<f64> = times.iter().zip(&mean_mass).map(|(t, m)| (-alpha * t).exp() * m).collect();
    let (lo, hi) = tail
        .iter()
        .map(|&i| rescaled_mean[i])
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let w_samples: Vec<f64> =
        traces.iter().map(|tr| (-alpha * t_end).exp() * tr.total_mass.last().map_or(0.0, |v| v.as_f64())).collect();
    let extinct_replicas = traces.iter().filter(|tr| tr.total_mass.last().is_none_or(|v| *v <= T::zero())).count();
    Ok(GrowthConstant {
        alpha_star: alpha,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        times,
        mean_mass,
        rescaled_mean,
        tail_variation: hi / lo - 1.0,
        w: Summary::of(&w_samples),
        w_samples,
        extinct_replicas,
    })
}

/// [`droplet_traces`] followed by [`growth_from_traces`].
pub fn growth_constant<T: Real>(
    model: &DropletModel<T>,
    horizon: T,
    dt: T,
    record_every: usize,
    replicas: usize,
    seed: u64,
) -> Result<GrowthConstant> {
    if !(model.m > T::zero()) {
        return Err(Error::InvalidParameter { name: "m", reason: "growth needs m > 0".into() });
    }
    if replicas == 0 {
        return Err(Error::InvalidParameter { name: "replicas", reason: "need at least 1".into() });
    }
    growth_from_traces(&droplet_traces(model, horizon, dt, record_every, replicas, seed)?)
}

/// `e^{-alpha t} N xbar_2(t)` for the `N`-site system started all type 1,
/// one value per replica: the finite-system counterpart of `e^{-alpha t}`
/// times the droplet mass.
pub fn finite_system_growth<T: Real>(
    params: &SystemParams<T>,
    alpha: f64,
    t: T,
    dt: T,
    scheme: NoiseScheme,
    replicas: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(seed, r as u64);
            let mut tally = ClampTally::default();
            let mut state = FrequencyState::<T>::all_ones(params.n);
            run_for(&mut state, params, t, dt, scheme, &mut rng, &mut tally)?;
            Ok((-alpha * state.t.as_f64()).exp() * type2_mass(&state).as_f64())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{replica_rng, SimRng};
    use crate::stats::z_score;
    use rand::SeedableRng;

    fn model(m: f64, eps: f64) -> DropletModel<f64> {
        DropletModel::new(DiffusionParams::excursion(1.0, 1.0, 1.0).unwrap(), m, eps).unwrap()
    }

    #[test]
    fn no_immigration_stays_empty() {
        let mdl = model(0.0, 0.05);
        let mut rng = SimRng::seed_from_u64(1);
        let (trace, state) = run_droplet(&mdl, 5.0, 1e-2, 10, &mut rng).unwrap();
        assert!(trace.total_mass.iter().all(|&m| m == 0.0));
        assert_eq!(state.n_atoms(), 0);
    }

    #[test]
    fn empty_spawn_intensity_is_m_over_scale() {
        let mdl = model(2.0, 0.05);
        let s = scale_function(&mdl.params, 0.05).unwrap();
        assert_eq!(mdl.spawn_intensity(0.0), 2.0 / s);
        assert!(mdl.spawn_intensity(1.0) > mdl.spawn_intensity(0.5));
    }

    #[test]
    fn rejects_bad_eps() {
        let p = DiffusionParams::excursion(1.0, 1.0, 1.0).unwrap();
        assert!(DropletModel::new(p, 1.0, 0.0).is_err());
        assert!(DropletModel::new(p, 1.0, 1.0).is_err());
    }

    #[test]
    fn total_mass_matches_atoms_and_jumps_by_eps() {
        let mdl = model(1.0, 0.05);
        let mut rng = SimRng::seed_from_u64(3);
        let mut tally = ClampTally::default();
        let mut state = DropletState::empty();
        for _ in 0..2000 {
            let before = state.n_atoms();
            step_droplet(&mut state, &mdl, 1e-3, &mut rng, &mut tally).unwrap();
            let sum: f64 = state.active.iter().map(|a| a.mass).sum();
            assert!((sum - state.total_mass).abs() < 1e-12);
            assert!(state.active.iter().all(|a| a.mass >= MASS_FLOOR && (0.0..=1.0).contains(&a.label)));
            let new: Vec<_> = state.active.iter().filter(|a| a.birth > state.t - 1e-3).collect();
            assert!(new.iter().all(|a| a.mass == 0.05));
            assert!(state.n_atoms() <= before + new.len());
        }
        assert!(state.n_atoms() > 0);
    }

    fn terminal_masses(m: f64, replicas: usize, seed: u64) -> Vec<f64> {
        let mdl = model(m, 0.05);
        (0..replicas)
            .map(|r| {
                let mut rng = replica_rng(seed, r as u64);
                run_droplet(&mdl, 3.0, 2e-3, 100, &mut rng).unwrap().1.total_mass
            })
            .collect()
    }

    #[test]
    fn immigration_is_additive_in_law() {
        // M^{m1+m2} =d M^{m1} + M^{m2} (independent)
        let n = 1500;
        let joint = Summary::of(&terminal_masses(1.0, n, 11));
        let a = terminal_masses(0.4, n, 12);
        let b = terminal_masses(0.6, n, 13);
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let split = Summary::of(&sum);
        let z_mean = z_score(joint.mean, joint.se, split.mean, split.se);
        assert!(z_mean.abs() < 4.0, "means {} vs {} (z={z_mean})", joint.mean, split.mean);
        // variance comparison via the fourth-moment standard error
        let var_se = |xs: &[f64], s: &Summary| {
            let m4 = xs.iter().map(|x| (x - s.mean).powi(4)).sum::<f64>() / xs.len() as f64;
            ((m4 - s.var * s.var) / xs.len() as f64).sqrt()
        };
        let joint_xs = terminal_masses(1.0, n, 11);
        let z_var = z_score(joint.var, var_se(&joint_xs, &joint), split.var, var_se(&sum, &split));
        assert!(z_var.abs() < 4.0, "variances {} vs {} (z={z_var})", joint.var, split.var);
    }

    #[test]
    fn growth_constant_is_between_zero_and_s() {
        let mdl = model(1.0, 0.05);
        let g = growth_constant(&mdl, 6.0, 2e-3, 100, 200, 5).unwrap();
        assert!(g.alpha_star > 0.0 && g.alpha_star < 1.0, "{}", g.alpha_star);
        assert!(g.w.var > 0.0);
    }

    #[test]
    fn growth_constant_needs_immigration() {
        assert!(growth_constant(&model(0.0, 0.05), 1.0, 1e-2, 10, 4, 1).is_err());
    }
}
