//! Single-site Fisher-Wright diffusion
//!
//! `dy = c(m̄ - y)dt + s y(1-y)dt + sqrt(d y(1-y)) dW` on `[0, 1]`: time
//! stepping, the scale function, hitting probabilities and excursions started
//! at a small level `eps`.

use rand::Rng;
use serde::Serialize;

use crate::error::{check_nonneg, check_positive, Error, Result};
use crate::quadrature::adaptive_simpson;
use crate::scalar::Real;

/// Rates of the single-site diffusion. `m_bar` is the level the migration
/// drift pulls towards; it is 0 for the excursion dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiffusionParams<T> {
    pub c: T,
    pub s: T,
    pub d: T,
    pub m_bar: T,
}

impl<T: Real> DiffusionParams<T> {
    pub fn new(c: T, s: T, d: T, m_bar: T) -> Result<Self> {
        check_nonneg("c", c.as_f64())?;
        check_nonneg("s", s.as_f64())?;
        check_nonneg("d", d.as_f64())?;
        let mb = m_bar.as_f64();
        if !mb.is_finite() {
            return Err(Error::NonFinite("m_bar"));
        }
        if !(0.0..=1.0).contains(&mb) {
            return Err(Error::Domain { what: "m_bar", value: mb, domain: "[0, 1]" });
        }
        Ok(DiffusionParams { c, s, d, m_bar })
    }

    /// Parameters of the excursion dynamics (`m_bar = 0`).
    pub fn excursion(c: T, s: T, d: T) -> Result<Self> {
        Self::new(c, s, d, T::zero())
    }

    pub fn with_mean(mut self, m_bar: T) -> Self {
        self.m_bar = m_bar;
        self
    }

    #[inline]
    pub fn drift(&self, x: T) -> T {
        self.c * (self.m_bar - x) + self.s * x * (T::one() - x)
    }

    #[inline]
    pub fn variance(&self, x: T) -> T {
        self.d * x * (T::one() - x)
    }
}

/// How the noise increment is realised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum NoiseScheme {
    /// Plain Euler-Maruyama increment followed by clamping to `[0, 1]`.
    EulerClamp,
    /// Gaussian increment in the interior; within `FELLER_THRESHOLD * d * dt`
    /// of a boundary the increment is the exact transition of the Feller
    /// diffusion `sqrt(d(1-y) y) dW` frozen over the step, which never leaves
    /// `[0, 1]` and keeps the conditional mean and variance exact.
    #[default]
    BoundaryFeller,
}

/// Distance from a boundary, in units of `d * dt`, below which
/// [`NoiseScheme::BoundaryFeller`] switches to the Feller transition. At this
/// distance a Gaussian step crosses the boundary with probability below 1e-12.
pub const FELLER_THRESHOLD: f64 = 50.0;

/// Counts of steps whose raw value left `[0, 1]` and was clamped.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ClampTally {
    pub below: u64,
    pub above: u64,
}

impl ClampTally {
    #[inline]
    pub fn clamp<T: Real>(&mut self, v: T) -> T {
        if v < T::zero() {
            self.below += 1;
            T::zero()
        } else if v > T::one() {
            self.above += 1;
            T::one()
        } else {
            v
        }
    }

    pub fn total(&self) -> u64 {
        self.below + self.above
    }

    pub fn merge(&mut self, other: ClampTally) {
        self.below += other.below;
        self.above += other.above;
    }
}

fn check_step_inputs<T: Real>(x: T, dt: T) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::NonFinite("state"));
    }
    if !dt.is_finite() {
        return Err(Error::NonFinite("dt"));
    }
    check_positive("dt", dt.as_f64())?;
    let xf = x.as_f64();
    if !(0.0..=1.0).contains(&xf) {
        return Err(Error::Domain { what: "state", value: xf, domain: "[0, 1]" });
    }
    Ok(())
}

/// One Euler-Maruyama step driven by the standard normal draw `noise`,
/// clamped to `[0, 1]`.
pub fn step_fw<T: Real>(
    state: T,
    params: &DiffusionParams<T>,
    dt: T,
    noise: T,
    tally: &mut ClampTally,
) -> Result<T> {
    check_step_inputs(state, dt)?;
    if !noise.is_finite() {
        return Err(Error::NonFinite("noise"));
    }
    Ok(tally.clamp(euler_raw(state, params.drift(state), params.d, dt, noise)))
}

#[inline]
pub(crate) fn euler_raw<T: Real>(x: T, drift: T, d: T, dt: T, noise: T) -> T {
    let var = d * x * (T::one() - x);
    x + drift * dt + (var.max(T::zero()) * dt).sqrt() * noise
}

/// Noise part of a split step: returns the raw value after the stochastic
/// increment from `x` (which must already lie in `[0, 1]`).
#[inline]
pub(crate) fn boundary_noise<T: Real, R: Rng + ?Sized>(x: T, d: T, dt: T, rng: &mut R) -> T {
    if d <= T::zero() {
        return x;
    }
    let one = T::one();
    let half = T::lit(0.5);
    let flip = x > half;
    let y = if flip { one - x } else { x };
    if y <= T::zero() {
        return x;
    }
    if y >= T::lit(FELLER_THRESHOLD) * d * dt {
        let var = d * x * (one - x);
        return x + (var * dt).sqrt() * T::standard_normal(rng);
    }
    let d_eff = d * (one - y);
    let lambda = T::lit(2.0) * y / (d_eff * dt);
    let k = T::poisson(lambda, rng);
    let y_new = if k == 0 {
        T::zero()
    } else {
        T::gamma(T::from_u64(k).unwrap_or_else(T::max_value), d_eff * dt * half, rng)
    };
    if flip {
        one - y_new
    } else {
        y_new
    }
}

/// Raw (unclamped) value after one step of `scheme` with the given drift.
/// The deterministic part is applied first and clamped (tallied) so that the
/// noise kernel always starts inside `[0, 1]`.
#[inline]
pub(crate) fn advance_raw<T: Real, R: Rng + ?Sized>(
    x: T,
    drift: T,
    d: T,
    dt: T,
    scheme: NoiseScheme,
    rng: &mut R,
    tally: &mut ClampTally,
) -> T {
    match scheme {
        NoiseScheme::EulerClamp => euler_raw(x, drift, d, dt, T::standard_normal(rng)),
        NoiseScheme::BoundaryFeller => {
            let mid = tally.clamp(x + drift * dt);
            boundary_noise(mid, d, dt, rng)
        }
    }
}

/// One step of the single-site diffusion with noise drawn from `rng`.
pub fn step_fw_rng<T: Real, R: Rng + ?Sized>(
    state: T,
    params: &DiffusionParams<T>,
    dt: T,
    scheme: NoiseScheme,
    rng: &mut R,
    tally: &mut ClampTally,
) -> Result<T> {
    check_step_inputs(state, dt)?;
    let raw = advance_raw(state, params.drift(state), params.d, dt, scheme, rng, tally);
    Ok(tally.clamp(raw))
}

fn scale_rtol<T: Real>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(64.0))
}

/// Scale function `S(x) = ∫_0^x exp(-2sy/d) (1-y)^(-2c/d) dy`, normalised so
/// that `S(0) = 0` and `S'(0) = 1`.
///
/// For `c > 0` the integrand is singular at 1, so the integral is taken in
/// `z = -ln(1-y)`, where it is smooth.
pub fn scale_function<T: Real>(params: &DiffusionParams<T>, x: T) -> Result<T> {
    if !x.is_finite() {
        return Err(Error::NonFinite("x"));
    }
    let xf = x.as_f64();
    if !(0.0..1.0).contains(&xf) {
        return Err(Error::Domain { what: "x", value: xf, domain: "[0, 1)" });
    }
    if params.d <= T::zero() {
        return Err(Error::InvalidParameter {
            name: "d",
            reason: "scale function needs d > 0".into(),
        });
    }
    if x == T::zero() {
        return Ok(T::zero());
    }
    let two = T::lit(2.0);
    let kappa = two * params.s / params.d;
    let gamma = two * params.c / params.d;
    let rtol = scale_rtol::<T>();
    if params.c == T::zero() {
        let f = |y: T| (-kappa * y).exp();
        let rough = x * (f(T::zero()) + f(x)) / two;
        return Ok(adaptive_simpson(&f, T::zero(), x, rtol * rough.abs(), 50));
    }
    let z_max = -(-x).ln_1p();
    let f = |z: T| {
        let y = -(-z).exp_m1();
        (-kappa * y + (gamma - T::one()) * z).exp()
    };
    let rough = z_max * (f(T::zero()) + f(z_max)) / two;
    Ok(adaptive_simpson(&f, T::zero(), z_max, rtol * rough.abs(), 50))
}

/// `S` tabulated on an ascending mesh of `[0, x_max]`, evaluated anywhere in
/// `[0, 1)` by integrating only the remainder from the nearest node.
#[derive(Debug, Clone, Serialize)]
pub struct ScaleTable<T> {
    grid: Vec<T>,
    values: Vec<T>,
    params: DiffusionParams<T>,
}

impl<T: Real> ScaleTable<T> {
    pub fn build(params: DiffusionParams<T>, points: usize, x_max: T) -> Result<Self> {
        if points < 2 {
            return Err(Error::InvalidParameter { name: "points", reason: "need at least 2".into() });
        }
        let xm = x_max.as_f64();
        if !(xm > 0.0 && xm < 1.0) {
            return Err(Error::Domain { what: "x_max", value: xm, domain: "(0, 1)" });
        }
        let n1 = T::from_usize_lossy(points - 1);
        let grid: Vec<T> = (0..points).map(|i| x_max * T::from_usize_lossy(i) / n1).collect();
        let mut values = Vec::with_capacity(points);
        values.push(T::zero());
        for w in grid.windows(2) {
            let seg = segment(&params, w[0], w[1])?;
            let last = *values.last().expect("non-empty");
            values.push(last + seg);
        }
        Ok(ScaleTable { grid, values, params })
    }

    pub fn grid(&self) -> &[T] {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn params(&self) -> &DiffusionParams<T> {
        &self.params
    }

    pub fn eval(&self, x: T) -> Result<T> {
        let xf = x.as_f64();
        if !(0.0..1.0).contains(&xf) {
            return Err(Error::Domain { what: "x", value: xf, domain: "[0, 1)" });
        }
        let idx = match self.grid.binary_search_by(|g| g.partial_cmp(&x).expect("finite grid")) {
            Ok(i) => return Ok(self.values[i]),
            Err(0) => 0,
            Err(i) => i - 1,
        };
        Ok(self.values[idx] + segment(&self.params, self.grid[idx], x)?)
    }
}

/// `S(b) - S(a)` for `0 <= a <= b < 1`.
fn segment<T: Real>(params: &DiffusionParams<T>, a: T, b: T) -> Result<T> {
    // Differences of the transformed integral keep full relative accuracy.
    Ok(scale_function(params, b)? - scale_function(params, a)?)
}

/// `P_eps(T_eta < T_0) = S(eps) / S(eta)` for `0 < eps <= eta < 1`.
pub fn hitting_probability<T: Real>(params: &DiffusionParams<T>, eps: T, eta: T) -> Result<T> {
    let (e, h) = (eps.as_f64(), eta.as_f64());
    if !(e > 0.0 && e <= h && h < 1.0) {
        return Err(Error::InvalidParameter {
            name: "eps/eta",
            reason: format!("need 0 < eps <= eta < 1, got eps={e}, eta={h}"),
        });
    }
    if eps == eta {
        return Ok(T::one());
    }
    Ok(scale_function(params, eps)? / scale_function(params, eta)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExcursionConfig<T> {
    pub dt: T,
    pub scheme: NoiseScheme,
    /// Hard cap on the number of steps; guards the noiseless case.
    pub max_steps: u64,
    /// Keep every `record_every`-th sample (0 keeps only the endpoints).
    pub record_every: u64,
    /// Stop as soon as the path reaches this level.
    pub stop_above: Option<T>,
}

impl<T: Real> Default for ExcursionConfig<T> {
    fn default() -> Self {
        ExcursionConfig {
            dt: T::lit(1e-3),
            scheme: NoiseScheme::default(),
            max_steps: 1_000_000,
            record_every: 1,
            stop_above: None,
        }
    }
}

/// A path started at `eps` and run until its first step at or below 0.
#[derive(Debug, Clone, Serialize)]
pub struct ExcursionPath<T> {
    pub start_time: T,
    /// `(t, w(t))` with `t` relative to the start; first entry is `(0, eps)`.
    pub samples: Vec<(T, T)>,
    /// Time of the first step at or below 0; `None` if the path was stopped
    /// (step cap or `stop_above`) before returning to 0.
    pub lifetime: Option<T>,
    pub max_value: T,
    pub capped: bool,
}

impl<T: Real> ExcursionPath<T> {
    pub fn reached(&self, level: T) -> bool {
        self.max_value >= level
    }
}

/// Samples the diffusion (with `m_bar` forced to 0) from `eps` until it
/// returns to 0.
pub fn sample_excursion<T: Real, R: Rng + ?Sized>(
    params: &DiffusionParams<T>,
    eps: T,
    cfg: &ExcursionConfig<T>,
    rng: &mut R,
) -> Result<ExcursionPath<T>> {
    let e = eps.as_f64();
    if !(e > 0.0 && e < 1.0) {
        return Err(Error::Domain { what: "eps", value: e, domain: "(0, 1)" });
    }
    check_step_inputs(eps, cfg.dt)?;
    let p = params.with_mean(T::zero());
    let mut tally = ClampTally::default();
    let mut x = eps;
    let mut samples = vec![(T::zero(), eps)];
    let mut max_value = eps;
    let mut step = 0u64;
    loop {
        if let Some(level) = cfg.stop_above {
            if x >= level {
                let t = cfg.dt * T::from_u64(step).expect("step count");
                if samples.last().map(|s| s.0) != Some(t) {
                    samples.push((t, x));
                }
                return Ok(ExcursionPath { start_time: T::zero(), samples, lifetime: None, max_value, capped: false });
            }
        }
        if step >= cfg.max_steps {
            return Ok(ExcursionPath { start_time: T::zero(), samples, lifetime: None, max_value, capped: true });
        }
        let raw = advance_raw(x, p.drift(x), p.d, cfg.dt, cfg.scheme, rng, &mut tally);
        step += 1;
        let t = cfg.dt * T::from_u64(step).expect("step count");
        if raw <= T::zero() {
            samples.push((t, T::zero()));
            return Ok(ExcursionPath { start_time: T::zero(), samples, lifetime: Some(t), max_value, capped: false });
        }
        x = tally.clamp(raw);
        max_value = max_value.max(x);
        if cfg.record_every > 0 && step % cfg.record_every == 0 {
            samples.push((t, x));
        }
    }
}
