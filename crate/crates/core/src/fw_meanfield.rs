//! N-site mean-field Fisher-Wright system with rare mutation.
//!
//! Only the type-1 frequencies are stored; type 2 is `1 - x1` entrywise.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_nonneg, check_positive, Error, Result};
use crate::fw_single::{advance_raw, euler_raw, ClampTally, NoiseScheme};
use crate::rng::replica_rng;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemParams<T> {
    pub n: usize,
    pub c: T,
    pub s: T,
    pub d: T,
    pub m: T,
    /// Mutation denominator; equals `n` unless overridden.
    pub l: T,
}

impl<T: Real> SystemParams<T> {
    pub fn new(n: usize, c: T, s: T, d: T, m: T) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter { name: "N", reason: "need at least one site".into() });
        }
        check_nonneg("c", c.as_f64())?;
        check_nonneg("s", s.as_f64())?;
        check_nonneg("d", d.as_f64())?;
        check_nonneg("m", m.as_f64())?;
        Ok(SystemParams { n, c, s, d, m, l: T::from_usize_lossy(n) })
    }

    pub fn with_denominator(mut self, l: T) -> Result<Self> {
        check_positive("L", l.as_f64())?;
        self.l = l;
        Ok(self)
    }

    /// `1e-3 * min(1, 1/(c + s + d + m/L))`.
    pub fn default_dt(&self) -> T {
        let total = self.c + self.s + self.d + self.m / self.l;
        let scale = if total > T::one() { T::one() / total } else { T::one() };
        T::lit(1e-3) * scale
    }

    #[inline]
    pub fn mutation_rate(&self) -> T {
        self.m / self.l
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FrequencyType {
    One,
    Two,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyState<T> {
    pub x1: Vec<T>,
    pub t: T,
}

impl<T: Real> FrequencyState<T> {
    pub fn new(x1: Vec<T>, t: T) -> Result<Self> {
        if x1.is_empty() {
            return Err(Error::InvalidParameter { name: "x1", reason: "empty state".into() });
        }
        check_entries(&x1)?;
        Ok(FrequencyState { x1, t })
    }

    /// Every site fully of type 1, the pre-emergence start.
    pub fn all_ones(n: usize) -> Self {
        FrequencyState { x1: vec![T::one(); n], t: T::zero() }
    }

    pub fn all_zeros(n: usize) -> Self {
        FrequencyState { x1: vec![T::zero(); n], t: T::zero() }
    }

    pub fn len(&self) -> usize {
        self.x1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x1.is_empty()
    }

    pub fn x2(&self) -> impl Iterator<Item = T> + '_ {
        self.x1.iter().map(|&x| T::one() - x)
    }
}

fn check_entries<T: Real>(x: &[T]) -> Result<()> {
    for &v in x {
        if !v.is_finite() {
            return Err(Error::NonFinite("state entry"));
        }
        if v < T::zero() || v > T::one() {
            return Err(Error::Domain { what: "state entry", value: v.as_f64(), domain: "[0, 1]" });
        }
    }
    Ok(())
}

pub fn empirical_mean<T: Real>(state: &FrequencyState<T>, ty: FrequencyType) -> T {
    let n = T::from_usize_lossy(state.x1.len());
    let m1 = state.x1.iter().copied().sum::<T>() / n;
    match ty {
        FrequencyType::One => m1,
        FrequencyType::Two => T::one() - m1,
    }
}

/// Total type-2 mass `sum_j x2(j)`, computed directly rather than as
/// `N * (1 - mean)` so that small masses keep their relative accuracy.
pub fn type2_mass<T: Real>(state: &FrequencyState<T>) -> T {
    state.x2().sum()
}

#[inline]
fn site_drift<T: Real>(x: T, mean: T, params: &SystemParams<T>, mu: T) -> T {
    params.c * (mean - x) - params.s * x * (T::one() - x) - mu * x
}

fn check_dt<T: Real>(dt: T) -> Result<()> {
    if !dt.is_finite() {
        return Err(Error::NonFinite("dt"));
    }
    check_positive("dt", dt.as_f64())
}

/// Advances every site by one step with the spatial mean frozen at its
/// value at the start of the step.
pub fn step_system<T: Real, R: Rng + ?Sized>(
    state: &mut FrequencyState<T>,
    params: &SystemParams<T>,
    dt: T,
    scheme: NoiseScheme,
    rng: &mut R,
    tally: &mut ClampTally,
) -> Result<()> {
    check_dt(dt)?;
    if state.x1.len() != params.n {
        return Err(Error::InvalidParameter {
            name: "state",
            reason: format!("{} sites, params expect {}", state.x1.len(), params.n),
        });
    }
    if state.x1.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("state entry"));
    }
    let mean = empirical_mean(state, FrequencyType::One);
    let mu = params.mutation_rate();
    for x in state.x1.iter_mut() {
        let drift = site_drift(*x, mean, params, mu);
        let raw = advance_raw(*x, drift, params.d, dt, scheme, rng, tally);
        *x = tally.clamp(raw);
    }
    state.t = state.t + dt;
    Ok(())
}

/// Euler-Maruyama step driven by explicit standard normal draws, one per site.
pub fn step_system_with_noise<T: Real>(
    state: &mut FrequencyState<T>,
    params: &SystemParams<T>,
    dt: T,
    noise: &[T],
    tally: &mut ClampTally,
) -> Result<()> {
    check_dt(dt)?;
    if noise.len() != state.x1.len() || state.x1.len() != params.n {
        return Err(Error::InvalidParameter { name: "noise", reason: "one draw per site required".into() });
    }
    if state.x1.iter().chain(noise).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("state or noise"));
    }
    let mean = empirical_mean(state, FrequencyType::One);
    let mu = params.mutation_rate();
    for (x, &z) in state.x1.iter_mut().zip(noise) {
        let drift = site_drift(*x, mean, params, mu);
        *x = tally.clamp(euler_raw(*x, drift, params.d, dt, z));
    }
    state.t = state.t + dt;
    Ok(())
}

/// Runs `round(duration / dt)` steps.
pub fn run_for<T: Real, R: Rng + ?Sized>(
    state: &mut FrequencyState<T>,
    params: &SystemParams<T>,
    duration: T,
    dt: T,
    scheme: NoiseScheme,
    rng: &mut R,
    tally: &mut ClampTally,
) -> Result<()> {
    let steps = (duration / dt).round().to_u64().unwrap_or(0);
    for _ in 0..steps {
        step_system(state, params, dt, scheme, rng, tally)?;
    }
    Ok(())
}

/// Finite list of `(label, mass)` atoms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomicMassMeasure<T> {
    pub atoms: Vec<(T, T)>,
}

impl<T: Real> AtomicMassMeasure<T> {
    pub fn total_mass(&self) -> T {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// Atoms lighter than this are dropped.
pub const MASS_FLOOR: f64 = 1e-12;

/// I.i.d. uniform labels, one per site.
pub fn draw_labels<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<T> {
    (0..n).map(|_| T::uniform01(rng)).collect()
}

/// `sum_j x2(j) delta_{a(j)}` with atoms below [`MASS_FLOOR`] pruned.
pub fn droplet_measure<T: Real>(state: &FrequencyState<T>, labels: &[T]) -> Result<AtomicMassMeasure<T>> {
    if labels.len() != state.x1.len() {
        return Err(Error::InvalidParameter { name: "labels", reason: "one label per site required".into() });
    }
    let floor = T::lit(MASS_FLOOR);
    let atoms = state
        .x2()
        .zip(labels)
        .filter(|(m, _)| *m >= floor)
        .map(|(m, &a)| (a, m))
        .collect();
    Ok(AtomicMassMeasure { atoms })
}

/// Normalised histogram of type-2 frequencies over `bins` equal bins.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalMeasure {
    pub masses: Vec<f64>,
    pub count: usize,
}

impl EmpiricalMeasure {
    pub fn bin_of(x: f64, bins: usize) -> usize {
        ((x * bins as f64).floor().max(0.0) as usize).min(bins - 1)
    }
}

pub fn empirical_distribution<T: Real>(state: &FrequencyState<T>, bins: usize) -> Result<EmpiricalMeasure> {
    if bins < 2 {
        return Err(Error::InvalidParameter { name: "bins", reason: "need at least 2".into() });
    }
    let mut counts = vec![0usize; bins];
    for x2 in state.x2() {
        counts[EmpiricalMeasure::bin_of(x2.as_f64(), bins)] += 1;
    }
    let n = state.x1.len();
    Ok(EmpiricalMeasure { masses: counts.iter().map(|&k| k as f64 / n as f64).collect(), count: n })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmergenceConfig<T> {
    pub dt: T,
    pub scheme: NoiseScheme,
    pub replicas: usize,
    pub seed: u64,
    /// Number of sample times on the window.
    pub points: usize,
    /// Simulation stops here even if half-takeover has not happened.
    pub t_cap: T,
}

/// Per-replica trajectories sampled at `times` (absolute), i.e. at
/// `ln(N)/alpha_hat + t` for `t` on the requested window, truncated at 0.
#[derive(Debug, Clone, Serialize)]
pub struct EmergenceRun<T> {
    pub offset: T,
    pub times: Vec<T>,
    pub mean_type2: Vec<Vec<T>>,
    pub droplet_mass: Vec<Vec<T>>,
    /// First time the type-2 mean reaches 1/2, if before `t_cap`.
    pub half_takeover: Vec<Option<T>>,
    pub clamps: ClampTally,
}

pub fn emergence_experiment<T: Real>(
    params: &SystemParams<T>,
    alpha_hat: T,
    window: (T, T),
    cfg: &EmergenceConfig<T>,
) -> Result<EmergenceRun<T>> {
    check_positive("alpha_hat", alpha_hat.as_f64())?;
    check_dt(cfg.dt)?;
    if cfg.replicas == 0 {
        return Err(Error::InvalidParameter { name: "replicas", reason: "need at least 1".into() });
    }
    if cfg.points == 0 {
        return Err(Error::InvalidParameter { name: "points", reason: "need at least 1".into() });
    }
    let (lo, hi) = window;
    if !(lo <= hi) {
        return Err(Error::InvalidParameter { name: "window", reason: "need t_lo <= t_hi".into() });
    }
    let offset = T::from_usize_lossy(params.n).ln() / alpha_hat;
    let span = if cfg.points > 1 { (hi - lo) / T::from_usize_lossy(cfg.points - 1) } else { T::zero() };
    let times: Vec<T> = (0..cfg.points)
        .map(|k| (offset + lo + span * T::from_usize_lossy(k)).max(T::zero()))
        .collect();
    let sample_steps: Vec<u64> =
        times.iter().map(|&t| (t / cfg.dt).round().to_u64().unwrap_or(0)).collect();
    let cap_steps = (cfg.t_cap / cfg.dt).round().to_u64().unwrap_or(0);

    let results: Vec<Result<(Vec<T>, Vec<T>, Option<T>, ClampTally)>> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(cfg.seed, r as u64);
            let mut tally = ClampTally::default();
            let mut state = FrequencyState::<T>::all_ones(params.n);
            let mut means = Vec::with_capacity(sample_steps.len());
            let mut masses = Vec::with_capacity(sample_steps.len());
            let mut half = None;
            let half_level = T::lit(0.5);
            let last_sample = sample_steps.last().copied().unwrap_or(0);
            let mut next = 0usize;
            let mut step = 0u64;
            loop {
                while next < sample_steps.len() && sample_steps[next] == step {
                    let mass = type2_mass(&state);
                    masses.push(mass);
                    means.push(mass / T::from_usize_lossy(params.n));
                    next += 1;
                }
                if half.is_none() && empirical_mean(&state, FrequencyType::Two) >= half_level {
                    half = Some(cfg.dt * T::from_u64(step).expect("step"));
                }
                if step >= last_sample && (half.is_some() || step >= cap_steps) {
                    break;
                }
                step_system(&mut state, params, cfg.dt, cfg.scheme, &mut rng, &mut tally)?;
                step += 1;
            }
            Ok((means, masses, half, tally))
        })
        .collect();

    let mut run = EmergenceRun {
        offset,
        times,
        mean_type2: Vec::with_capacity(cfg.replicas),
        droplet_mass: Vec::with_capacity(cfg.replicas),
        half_takeover: Vec::with_capacity(cfg.replicas),
        clamps: ClampTally::default(),
    };
    for r in results {
        let (means, masses, half, tally) = r?;
        run.mean_type2.push(means);
        run.droplet_mass.push(masses);
        run.half_takeover.push(half);
        run.clamps.merge(tally);
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fw_single::{step_fw_rng, DiffusionParams};
    use crate::stats::{ks_critical, ks_statistic, median};
    use proptest::prelude::*;

    fn sp(n: usize, c: f64, s: f64, d: f64, m: f64) -> SystemParams<f64> {
        SystemParams::new(n, c, s, d, m).unwrap()
    }

    #[test]
    fn all_ones_is_absorbing_without_mutation() {
        let params = sp(8, 1.0, 1.0, 1.0, 0.0);
        let mut state = FrequencyState::all_ones(8);
        let mut rng = replica_rng(1, 0);
        let mut tally = ClampTally::default();
        for scheme in [NoiseScheme::EulerClamp, NoiseScheme::BoundaryFeller] {
            for _ in 0..500 {
                step_system(&mut state, &params, 1e-2, scheme, &mut rng, &mut tally).unwrap();
            }
            assert!(state.x1.iter().all(|&x| x == 1.0));
        }
    }

    #[test]
    fn all_zeros_is_fixed() {
        let params = sp(8, 1.0, 1.0, 1.0, 3.0);
        let mut state = FrequencyState::all_zeros(8);
        let mut rng = replica_rng(2, 0);
        let mut tally = ClampTally::default();
        for _ in 0..500 {
            step_system(&mut state, &params, 1e-2, NoiseScheme::BoundaryFeller, &mut rng, &mut tally).unwrap();
        }
        assert!(state.x1.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rejects_non_finite_entries() {
        let params = sp(2, 1.0, 1.0, 1.0, 1.0);
        let mut state = FrequencyState { x1: vec![0.5, f64::NAN], t: 0.0 };
        let mut rng = replica_rng(0, 0);
        let mut tally = ClampTally::default();
        assert!(step_system(&mut state, &params, 1e-3, NoiseScheme::BoundaryFeller, &mut rng, &mut tally).is_err());
        assert!(FrequencyState::new(vec![0.5, 1.5], 0.0).is_err());
    }

    #[test]
    fn empirical_means() {
        let ones = FrequencyState::<f64>::all_ones(4);
        assert_eq!(empirical_mean(&ones, FrequencyType::One), 1.0);
        assert_eq!(empirical_mean(&ones, FrequencyType::Two), 0.0);
        let mixed = FrequencyState::<f64>::new(vec![0.2, 0.6], 0.0).unwrap();
        assert!((empirical_mean(&mixed, FrequencyType::Two) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn droplet_examples() {
        let ones = FrequencyState::<f64>::all_ones(5);
        let labels = vec![0.1, 0.2, 0.3, 0.4, 0.5];
        assert!(droplet_measure(&ones, &labels).unwrap().is_empty());
        let single = FrequencyState::<f64>::new(vec![0.7], 0.0).unwrap();
        let m = droplet_measure(&single, &[0.42]).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.atoms[0].0, 0.42);
        assert!((m.atoms[0].1 - 0.3).abs() < 1e-15);
    }

    #[test]
    fn histogram_examples() {
        let zeros = FrequencyState::<f64>::all_zeros(6);
        let h = empirical_distribution(&zeros, 10).unwrap();
        assert_eq!(h.masses[9], 1.0);
        let ones = FrequencyState::<f64>::all_ones(6);
        assert_eq!(empirical_distribution(&ones, 10).unwrap().masses[0], 1.0);
        let half = FrequencyState::new(vec![0.0, 1.0, 0.0, 1.0], 0.0).unwrap();
        let h = empirical_distribution(&half, 100).unwrap();
        assert_eq!((h.masses[0], h.masses[99]), (0.5, 0.5));
        assert!(empirical_distribution(&half, 1).is_err());
    }

    #[test]
    fn default_dt_heuristic() {
        assert!((sp(10, 1.0, 1.0, 1.0, 10.0).default_dt() - 1e-3 / 4.0).abs() < 1e-18);
        assert_eq!(sp(10, 0.1, 0.1, 0.1, 0.0).default_dt(), 1e-3);
    }

    /// Type-2 frequencies stepped directly, with the roles of the types
    /// exchanged and the noise negated.
    fn step_type2(x2: &mut [f64], params: &SystemParams<f64>, dt: f64, noise: &[f64]) {
        let mean = x2.iter().sum::<f64>() / x2.len() as f64;
        let mu = params.m / params.l;
        for (y, &z) in x2.iter_mut().zip(noise) {
            let drift = params.c * (mean - *y) + params.s * *y * (1.0 - *y) + mu * (1.0 - *y);
            let raw = *y + drift * dt + (params.d * *y * (1.0 - *y) * dt).sqrt() * (-z);
            *y = raw.clamp(0.0, 1.0);
        }
    }

    #[test]
    fn two_type_closure() {
        let params = sp(16, 1.3, 0.7, 0.9, 2.0);
        let mut rng = replica_rng(9, 0);
        let mut state = FrequencyState::new((0..16).map(|i| (i as f64 + 0.5) / 16.0).collect(), 0.0).unwrap();
        let mut x2: Vec<f64> = state.x2().collect();
        let mut tally = ClampTally::default();
        for _ in 0..200 {
            let noise: Vec<f64> = (0..16).map(|_| f64::standard_normal(&mut rng)).collect();
            step_system_with_noise(&mut state, &params, 1e-3, &noise, &mut tally).unwrap();
            step_type2(&mut x2, &params, 1e-3, &noise);
            for (a, b) in state.x2().zip(&x2) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_site_reduces_to_one_dimensional_diffusion() {
        // With N = 1 mutation is migration at rate m/L towards type 2.
        let (c, s, d, m) = (2.0, 1.0, 1.0, 0.5);
        let params = sp(1, c, s, d, m);
        let single = DiffusionParams::new(m, s, d, 1.0).unwrap();
        let (dt, t_end, paths) = (1e-3, 1.0, 10_000u64);
        let steps = (t_end / dt) as usize;
        let x0 = 0.6;
        let system: Vec<f64> = (0..paths)
            .into_par_iter()
            .map(|i| {
                let mut rng = replica_rng(100, i);
                let mut tally = ClampTally::default();
                let mut st = FrequencyState::new(vec![1.0 - x0], 0.0).unwrap();
                for _ in 0..steps {
                    step_system(&mut st, &params, dt, NoiseScheme::BoundaryFeller, &mut rng, &mut tally).unwrap();
                }
                1.0 - st.x1[0]
            })
            .collect();
        let reduced: Vec<f64> = (0..paths)
            .into_par_iter()
            .map(|i| {
                let mut rng = replica_rng(200, i);
                let mut tally = ClampTally::default();
                let mut y = x0;
                for _ in 0..steps {
                    y = step_fw_rng(y, &single, dt, NoiseScheme::BoundaryFeller, &mut rng, &mut tally).unwrap();
                }
                y
            })
            .collect();
        let ks = ks_statistic(&system, &reduced);
        assert!(ks < ks_critical(system.len(), reduced.len(), 0.01), "KS {ks}");
    }

    #[test]
    fn emergence_without_mutation_stays_empty() {
        let params = sp(16, 1.0, 1.0, 1.0, 0.0);
        let cfg = EmergenceConfig { dt: 1e-2, scheme: NoiseScheme::BoundaryFeller, replicas: 3, seed: 5, points: 5, t_cap: 5.0 };
        let run = emergence_experiment(&params, 0.5, (-2.0, 2.0), &cfg).unwrap();
        assert!(run.mean_type2.iter().flatten().all(|&v| v == 0.0));
        assert!(run.half_takeover.iter().all(Option::is_none));
    }

    #[test]
    fn emergence_window_truncated_at_zero() {
        let params = sp(4, 1.0, 1.0, 1.0, 1.0);
        let cfg = EmergenceConfig { dt: 1e-2, scheme: NoiseScheme::BoundaryFeller, replicas: 1, seed: 0, points: 3, t_cap: 1.0 };
        let run = emergence_experiment(&params, 1.0, (-10.0, 0.0), &cfg).unwrap();
        assert_eq!(run.times[0], 0.0);
        assert_eq!(run.mean_type2[0][0], 0.0);
    }

    #[test]
    fn more_mutation_means_earlier_takeover() {
        let base = sp(32, 1.0, 2.0, 1.0, 1.0);
        let more = sp(32, 1.0, 2.0, 1.0, 8.0);
        let cfg = EmergenceConfig { dt: 2e-3, scheme: NoiseScheme::BoundaryFeller, replicas: 40, seed: 77, points: 2, t_cap: 60.0 };
        let a = emergence_experiment(&base, 1.0, (0.0, 0.0), &cfg).unwrap();
        let b = emergence_experiment(&more, 1.0, (0.0, 0.0), &cfg).unwrap();
        let ta: Vec<f64> = a.half_takeover.iter().map(|h| h.expect("finite takeover")).collect();
        let tb: Vec<f64> = b.half_takeover.iter().map(|h| h.expect("finite takeover")).collect();
        assert!(median(&tb) < median(&ta), "{} vs {}", median(&tb), median(&ta));
        let earlier = ta.iter().zip(&tb).filter(|(x, y)| y < x).count();
        assert!(earlier * 4 >= 3 * ta.len(), "{earlier} of {}", ta.len());
    }

    proptest! {
        #[test]
        fn entries_stay_in_unit_interval(seed in 0u64..500, c in 0.0f64..4.0, s in 0.0f64..4.0,
                                         d in 0.0f64..4.0, m in 0.0f64..4.0, euler in proptest::bool::ANY) {
            let params = sp(6, c, s, d, m);
            let mut rng = replica_rng(seed, 1);
            let mut st = FrequencyState::new(draw_labels(6, &mut rng), 0.0).unwrap();
            let mut tally = ClampTally::default();
            let scheme = if euler { NoiseScheme::EulerClamp } else { NoiseScheme::BoundaryFeller };
            for _ in 0..50 {
                step_system(&mut st, &params, 1e-2, scheme, &mut rng, &mut tally).unwrap();
                prop_assert!(st.x1.iter().all(|&x| (0.0..=1.0).contains(&x)));
            }
        }

        #[test]
        fn droplet_total_mass_identity(xs in proptest::collection::vec(0.0f64..=1.0, 1..40), seed in 0u64..100) {
            let st = FrequencyState::new(xs.clone(), 0.0).unwrap();
            let mut rng = replica_rng(seed, 0);
            let labels = draw_labels(xs.len(), &mut rng);
            let drop = droplet_measure(&st, &labels).unwrap();
            let expected = xs.len() as f64 * empirical_mean(&st, FrequencyType::Two);
            prop_assert!((drop.total_mass() - expected).abs() < 1e-12 * xs.len() as f64 + 1e-12 * 40.0);
        }

        #[test]
        fn histogram_sums_to_one(xs in proptest::collection::vec(0.0f64..=1.0, 1..60), bins in 2usize..200) {
            let st = FrequencyState::new(xs, 0.0).unwrap();
            let h = empirical_distribution(&st, bins).unwrap();
            prop_assert!((h.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn generic_over_f32() {
        let params = SystemParams::<f32>::new(4, 1.0, 1.0, 1.0, 1.0).unwrap();
        let mut st = FrequencyState::<f32>::all_ones(4);
        let mut rng = replica_rng(3, 0);
        let mut tally = ClampTally::default();
        for _ in 0..100 {
            step_system(&mut st, &params, 1e-2, NoiseScheme::BoundaryFeller, &mut rng, &mut tally).unwrap();
        }
        assert!(st.x1.iter().all(|&x| (0.0..=1.0).contains(&x)));
        assert!(empirical_mean(&st, FrequencyType::Two) > 0.0);
    }
}
