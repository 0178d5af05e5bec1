//! Deterministic solvers: the McKean-Vlasov density equation and the
//! colonization system for the occupied fraction and the size distribution.
//!
//! # Density equation
//!
//! `du/dt = -d/dx[(c(m - x) + s x(1-x)) u] + (d/2) d2/dx2[x(1-x) u]` with `m`
//! the current mean. The grid is vertex-centred: node `k` sits at
//! `x_k = k/(M-1)` and owns the control volume `[x_k - h/2, x_k + h/2]`
//! clipped to `[0, 1]`, so the end nodes are the boundary atoms.
//!
//! For `d > 0` the flux across an interface is written relative to the
//! frozen-mean stationary density
//! `rho = x^(2cm/d - 1) (1-x)^(2c(1-m)/d - 1) e^(2sx/d)`:
//! `F = -(d/2) x(1-x) rho (U/W)'`, with `W_k` the integral of `rho` over
//! control volume `k`. The discrete steady state is then exact, mass is
//! conserved to round-off, and an end node whose `W` diverges is absorbing.
//! For `d = 0` each node carries a parcel of mass with its own position,
//! transported along the characteristics.

use serde::Serialize;

use crate::error::{check_nonneg, check_positive, Error, Result};
use crate::particles::SizeDistribution;
use crate::quadrature::gauss_legendre_8;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MkvParams<T> {
    pub c: T,
    pub s: T,
    pub d: T,
}

impl<T: Real> MkvParams<T> {
    pub fn new(c: T, s: T, d: T) -> Result<Self> {
        check_nonneg("c", c.as_f64())?;
        check_nonneg("s", s.as_f64())?;
        check_nonneg("d", d.as_f64())?;
        Ok(MkvParams { c, s, d })
    }
}

/// Masses on the `M` control volumes, with the position of each mass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityGrid<T> {
    pub masses: Vec<T>,
    /// Node positions, except after transport steps (`d = 0`), where each
    /// entry is the centroid of the parcel held by that node.
    pub positions: Vec<T>,
    pub t: T,
}

impl<T: Real> DensityGrid<T> {
    fn nodes(m: usize) -> Vec<T> {
        let h = T::one() / T::from_usize_lossy(m - 1);
        (0..m).map(|k| if k + 1 == m { T::one() } else { h * T::from_usize_lossy(k) }).collect()
    }

    fn check_size(m: usize) -> Result<()> {
        if m < 3 {
            return Err(Error::InvalidParameter { name: "M", reason: "need at least 3 nodes".into() });
        }
        Ok(())
    }

    /// Uniform density on `[0, 1]`.
    pub fn uniform(m: usize) -> Result<Self> {
        Self::check_size(m)?;
        let h = T::one() / T::from_usize_lossy(m - 1);
        let half = h / T::lit(2.0);
        let masses = (0..m).map(|k| if k == 0 || k + 1 == m { half } else { h }).collect();
        Ok(DensityGrid { masses, positions: Self::nodes(m), t: T::zero() })
    }

    /// Unit mass at `y0`, held by the nearest node.
    pub fn point_mass(m: usize, y0: T) -> Result<Self> {
        Self::check_size(m)?;
        let y = y0.as_f64();
        if !(0.0..=1.0).contains(&y) {
            return Err(Error::Domain { what: "y0", value: y, domain: "[0, 1]" });
        }
        let mut grid = DensityGrid { masses: vec![T::zero(); m], positions: Self::nodes(m), t: T::zero() };
        let k = Self::node_of(m, y0);
        grid.masses[k] = T::one();
        grid.positions[k] = y0;
        Ok(grid)
    }

    /// Builds a grid from explicit node masses (which must sum to 1).
    pub fn from_masses(masses: Vec<T>) -> Result<Self> {
        Self::check_size(masses.len())?;
        if masses.iter().any(|v| !v.is_finite() || *v < T::zero()) {
            return Err(Error::InvalidParameter { name: "masses", reason: "entries must be finite and non-negative".into() });
        }
        let total: T = masses.iter().copied().sum();
        if (total - T::one()).abs() > T::lit(1e-10).max(T::epsilon() * T::lit(100.0)) {
            return Err(Error::InvalidParameter { name: "masses", reason: format!("total mass {} != 1", total.as_f64()) });
        }
        let n = masses.len();
        Ok(DensityGrid { masses, positions: Self::nodes(n), t: T::zero() })
    }

    fn node_of(m: usize, x: T) -> usize {
        let scaled = x * T::from_usize_lossy(m - 1);
        scaled.round().to_usize().unwrap_or(0).min(m - 1)
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn total_mass(&self) -> T {
        self.masses.iter().copied().sum()
    }

    pub fn mean(&self) -> T {
        self.masses.iter().zip(&self.positions).map(|(&w, &x)| w * x).sum()
    }

    pub fn spacing(&self) -> T {
        T::one() / T::from_usize_lossy(self.masses.len() - 1)
    }
}

/// Log-weights of the well-balanced flux for a frozen mean.
struct Balance<T> {
    /// `ln W_k`; `+inf` for an absorbing end node.
    log_w: Vec<T>,
    /// `ln(x(1-x) rho)` at the interface between nodes `k` and `k+1`.
    log_ar: Vec<T>,
}

/// Logs at the interfaces and at the interior quadrature nodes; these do
/// not depend on the mean.
struct Geometry<T> {
    n: usize,
    /// `(x, ln x, ln(1-x))` at each interface.
    iface: Vec<(T, T, T)>,
    /// `(x, ln x, ln(1-x), weight)`, eight per interior control volume.
    nodes: Vec<(T, T, T, T)>,
}

impl<T: Real> Geometry<T> {
    fn new(n: usize) -> Self {
        let h = T::one() / T::from_usize_lossy(n - 1);
        let half = h / T::lit(2.0);
        let logs = |x: T| (x, x.ln(), (-x).ln_1p());
        let iface = (0..n - 1).map(|k| logs(h * (T::from_usize_lossy(k) + T::lit(0.5)))).collect();
        let rule = gauss_legendre_8::<T>();
        let mut nodes = Vec::with_capacity(8 * n);
        for k in 1..n - 1 {
            let a = h * T::from_usize_lossy(k) - half;
            for &(xi, w) in &rule {
                let (x, lx, l1) = logs(a + h * xi);
                nodes.push((x, lx, l1, w));
            }
        }
        Geometry { n, iface, nodes }
    }
}

fn balance<T: Real>(geo: &Geometry<T>, mean: T, p: &MkvParams<T>) -> Balance<T> {
    let n = geo.n;
    let two = T::lit(2.0);
    let one = T::one();
    let pe = two * p.c * mean / p.d - one;
    let qe = two * p.c * (one - mean) / p.d - one;
    let kappa = two * p.s / p.d;
    let h = one / T::from_usize_lossy(n - 1);
    let half = h / two;
    let rule = gauss_legendre_8::<T>();

    let log_ar: Vec<T> = geo.iface.iter().map(|&(x, lx, l1)| (pe + one) * lx + (qe + one) * l1 + kappa * x).collect();

    // ln of the integral over interior volume k, via a shifted log-sum-exp
    let interior = |k: usize| -> T {
        let pts = &geo.nodes[8 * (k - 1)..8 * k];
        let mut vals = [T::zero(); 8];
        let mut top = T::neg_infinity();
        for (v, &(x, lx, l1, _)) in vals.iter_mut().zip(pts) {
            *v = pe * lx + qe * l1 + kappa * x;
            top = top.max(*v);
        }
        let sum: T = pts.iter().zip(&vals).map(|(&(.., w), &v)| w * (v - top).exp()).sum();
        top + (sum * h).ln()
    };
    // int_0^{half} x^e g(x) dx with g smooth, exponent e > -1
    let end_cell = |e: T, g: &dyn Fn(T) -> T| -> T {
        if e >= T::zero() {
            let vals: Vec<T> = rule.iter().map(|&(xi, _)| e * (half * xi).ln() + g(half * xi)).collect();
            let top = vals.iter().copied().fold(T::neg_infinity(), T::max);
            let sum: T = rule.iter().zip(&vals).map(|(&(_, w), &v)| w * (v - top).exp()).sum();
            return top + (sum * half).ln();
        }
        // x = half * t^(1/(e+1)) turns x^e dx into half^(e+1)/(e+1) dt
        let inv = one / (e + one);
        let vals: Vec<T> = rule.iter().map(|&(ti, _)| g(half * ti.powf(inv))).collect();
        let top = vals.iter().copied().fold(T::neg_infinity(), T::max);
        let sum: T = rule.iter().zip(&vals).map(|(&(_, w), &v)| w * (v - top).exp()).sum();
        (e + one) * half.ln() - (e + one).ln() + top + sum.ln()
    };

    let mut log_w = Vec::with_capacity(n);
    log_w.push(if pe <= -one {
        T::infinity()
    } else {
        end_cell(pe, &|x: T| qe * (-x).ln_1p() + kappa * x)
    });
    for k in 1..n - 1 {
        log_w.push(interior(k));
    }
    log_w.push(if qe <= -one {
        T::infinity()
    } else {
        // mirror: y = 1 - x
        end_cell(qe, &|y: T| pe * (-y).ln_1p() + kappa * (one - y))
    });
    Balance { log_w, log_ar }
}

/// Interface conductances `G_k` and node factors `r_k = exp(L - ln W_k)`,
/// scaled by the common `L = max ln(a rho)` so that flux
/// `F_k = -(d / 2h) G_k (U_{k+1} r_{k+1} - U_k r_k)`.
fn conductances<T: Real>(b: &Balance<T>) -> (Vec<T>, Vec<T>) {
    let top = b.log_ar.iter().copied().fold(T::neg_infinity(), T::max);
    let g = b.log_ar.iter().map(|&v| (v - top).exp()).collect();
    let r = b.log_w.iter().map(|&v| if v.is_infinite() { T::zero() } else { (top - v).exp() }).collect();
    (g, r)
}

struct Prepared<T> {
    g: Vec<T>,
    r: Vec<T>,
    coef: T,
    max_dt: T,
}

fn prepare<T: Real>(geo: &Geometry<T>, grid: &DensityGrid<T>, params: &MkvParams<T>) -> Prepared<T> {
    let n = grid.len();
    let (g, r) = conductances(&balance(geo, grid.mean(), params));
    let coef = params.d / (T::lit(2.0) * grid.spacing());
    let mut worst = T::zero();
    for k in 0..n {
        let left = if k > 0 { g[k - 1] } else { T::zero() };
        let right = if k + 1 < n { g[k] } else { T::zero() };
        worst = worst.max(coef * (left + right) * r[k]);
    }
    let max_dt = if worst > T::zero() { T::one() / worst } else { T::infinity() };
    Prepared { g, r, coef, max_dt }
}

/// Largest step that keeps every mass non-negative (the explicit update is
/// then a column-stochastic map).
pub fn max_stable_dt<T: Real>(grid: &DensityGrid<T>, params: &MkvParams<T>) -> T {
    if params.d <= T::zero() {
        let speed = params.c + params.s;
        return if speed > T::zero() { T::one() / speed } else { T::infinity() };
    }
    prepare(&Geometry::new(grid.len()), grid, params).max_dt
}

/// One explicit step of the density equation.
pub fn step_mkv_pde<T: Real>(grid: &mut DensityGrid<T>, params: &MkvParams<T>, dt: T) -> Result<()> {
    if !dt.is_finite() {
        return Err(Error::NonFinite("dt"));
    }
    check_positive("dt", dt.as_f64())?;
    if params.d <= T::zero() {
        transport_step(grid, params, dt);
        grid.t = grid.t + dt;
        return Ok(());
    }
    let prep = prepare(&Geometry::new(grid.len()), grid, params);
    apply(grid, &prep, dt)
}

fn apply<T: Real>(grid: &mut DensityGrid<T>, prep: &Prepared<T>, dt: T) -> Result<()> {
    if dt > prep.max_dt {
        return Err(Error::CflViolation { dt: dt.as_f64(), max_dt: prep.max_dt.as_f64() });
    }
    let n = grid.len();
    let Prepared { g, r, coef, .. } = prep;
    let flux: Vec<T> = (0..n - 1)
        .map(|k| -*coef * g[k] * (grid.masses[k + 1] * r[k + 1] - grid.masses[k] * r[k]))
        .collect();
    for k in 0..n {
        let inflow = if k > 0 { flux[k - 1] } else { T::zero() };
        let outflow = if k + 1 < n { flux[k] } else { T::zero() };
        grid.masses[k] = (grid.masses[k] + dt * (inflow - outflow)).max(T::zero());
    }
    grid.positions = DensityGrid::<T>::nodes(n);
    grid.t = grid.t + dt;
    Ok(())
}

/// `d = 0`: RK4 on the parcel positions (all coupled through the mean),
/// then parcels are merged per nearest node.
fn transport_step<T: Real>(grid: &mut DensityGrid<T>, params: &MkvParams<T>, dt: T) {
    let n = grid.len();
    let w = &grid.masses;
    let deriv = |xs: &[T]| -> Vec<T> {
        let m: T = w.iter().zip(xs).map(|(&a, &x)| a * x).sum();
        xs.iter().map(|&x| params.c * (m - x) + params.s * x * (T::one() - x)).collect()
    };
    let x0 = grid.positions.clone();
    let half = dt / T::lit(2.0);
    let k1 = deriv(&x0);
    let x2: Vec<T> = x0.iter().zip(&k1).map(|(&x, &k)| x + half * k).collect();
    let k2 = deriv(&x2);
    let x3: Vec<T> = x0.iter().zip(&k2).map(|(&x, &k)| x + half * k).collect();
    let k3 = deriv(&x3);
    let x4: Vec<T> = x0.iter().zip(&k3).map(|(&x, &k)| x + dt * k).collect();
    let k4 = deriv(&x4);
    let six = T::lit(6.0);
    let two = T::lit(2.0);
    let moved: Vec<T> = (0..n)
        .map(|i| (x0[i] + dt / six * (k1[i] + two * k2[i] + two * k3[i] + k4[i])).max(T::zero()).min(T::one()))
        .collect();
    let mut masses = vec![T::zero(); n];
    let mut moments = vec![T::zero(); n];
    for (i, &x) in moved.iter().enumerate() {
        if grid.masses[i] > T::zero() {
            let k = DensityGrid::<T>::node_of(n, x);
            masses[k] = masses[k] + grid.masses[i];
            moments[k] = moments[k] + grid.masses[i] * x;
        }
    }
    let nodes = DensityGrid::<T>::nodes(n);
    grid.positions = (0..n).map(|k| if masses[k] > T::zero() { moments[k] / masses[k] } else { nodes[k] }).collect();
    grid.masses = masses;
}

/// Mean curve of a density run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanCurve<T> {
    pub t: Vec<T>,
    pub m: Vec<T>,
    /// Largest `|total mass - initial total mass|` seen.
    pub mass_drift: T,
    pub steps: usize,
}

/// Integrates to `horizon`, sampling the mean every `record_every` time
/// units. Without `dt` each step uses half of [`max_stable_dt`] (and
/// `1e-3 / (c + s)` when `d = 0`).
pub fn run_mkv_to_fixation<T: Real>(
    grid0: &DensityGrid<T>,
    params: &MkvParams<T>,
    horizon: T,
    dt: Option<T>,
    record_every: T,
) -> Result<(MeanCurve<T>, DensityGrid<T>)> {
    check_positive("horizon", horizon.as_f64())?;
    check_positive("record_every", record_every.as_f64())?;
    let mut grid = grid0.clone();
    let start = grid.t;
    let end = start + horizon;
    let m0 = grid.total_mass();
    let mut curve = MeanCurve { t: vec![grid.t], m: vec![grid.mean()], mass_drift: T::zero(), steps: 0 };
    let mut next_record = start + record_every;
    let tiny = horizon * T::epsilon() * T::lit(16.0);
    let geo = Geometry::new(grid.len());
    while grid.t < end - tiny {
        let cap = (end - grid.t).min(next_record - grid.t).max(tiny);
        if params.d > T::zero() {
            let prep = prepare(&geo, &grid, params);
            let step = dt.unwrap_or(prep.max_dt * T::lit(0.5)).min(cap);
            apply(&mut grid, &prep, step)?;
        } else {
            let speed = params.c + params.s;
            let step = dt.unwrap_or(if speed > T::zero() { T::lit(1e-3) / speed } else { horizon }).min(cap);
            step_mkv_pde(&mut grid, params, step)?;
        }
        curve.steps += 1;
        curve.mass_drift = curve.mass_drift.max((grid.total_mass() - m0).abs());
        if grid.t >= next_record - tiny {
            curve.t.push(grid.t);
            curve.m.push(grid.mean());
            next_record = next_record + record_every;
        }
    }
    if curve.t.last() != Some(&grid.t) {
        curve.t.push(grid.t);
        curve.m.push(grid.mean());
    }
    Ok((curve, grid))
}

/// `(u, U)`: occupied fraction and size distribution of occupied sites over
/// sizes `1..=J_max` (entry `j-1` for size `j`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColonizationState<T> {
    pub u: T,
    pub usize: Vec<T>,
    pub t: T,
}

/// `(alpha, gamma) = (c sum_{j>=2} j U(j), c U(1))`.
pub fn colonization_rates<T: Real>(usize_: &[T], c: T) -> (T, T) {
    let alpha = c * usize_.iter().enumerate().skip(1).map(|(i, &p)| T::from_usize_lossy(i + 1) * p).sum::<T>();
    (alpha, c * usize_[0])
}

impl<T: Real> ColonizationState<T> {
    pub fn new(u: T, usize_: Vec<T>, t: T) -> Result<Self> {
        let uf = u.as_f64();
        if !(0.0..=1.0).contains(&uf) {
            return Err(Error::Domain { what: "u", value: uf, domain: "[0, 1]" });
        }
        if usize_.is_empty() {
            return Err(Error::InvalidParameter { name: "usize", reason: "need J_max >= 1".into() });
        }
        if usize_.iter().any(|v| !v.is_finite() || *v < T::zero()) {
            return Err(Error::InvalidParameter { name: "usize", reason: "entries must be finite and non-negative".into() });
        }
        Ok(ColonizationState { u, usize: usize_, t })
    }

    pub fn j_max(&self) -> usize {
        self.usize.len()
    }

    pub fn mass(&self) -> T {
        self.usize.iter().copied().sum()
    }

    /// `sum (1 + j^2) U(j)`.
    pub fn nu_norm(&self) -> T {
        self.usize
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let j = T::from_usize_lossy(i + 1);
                (T::one() + j * j) * p
            })
            .sum()
    }

    pub fn rates(&self, c: T) -> (T, T) {
        colonization_rates(&self.usize, c)
    }
}

/// Default size truncation `ceil(4 (s/d + 10))`.
pub fn default_j_max<T: Real>(s: T, d: T) -> usize {
    (T::lit(4.0) * (s / d + T::lit(10.0))).ceil().to_usize().unwrap_or(400)
}

/// Time derivative of `(u, U)`. Deaths occur at total rate `d j(j-1)` at a
/// `j`-occupied site, as in the particle model; the top size reflects births
/// and arrivals.
fn colonization_rhs<T: Real>(u: T, us: &[T], p: &MkvParams<T>) -> (T, Vec<T>) {
    let jm = us.len();
    let (alpha, gamma) = colonization_rates(us, p.c);
    let one = T::one();
    let du = alpha * (one - u) * u - gamma * u * u;
    let shift = u * (alpha + gamma);
    let renorm = alpha * (one - u) - gamma * u;
    let mut dv = vec![T::zero(); jm];
    for i in 0..jm {
        let j = T::from_usize_lossy(i + 1);
        let at = us[i];
        let top = i + 1 == jm;
        let mut r = T::zero();
        // births
        if i > 0 {
            r = r + p.s * (j - one) * us[i - 1];
        }
        if !top {
            r = r - p.s * j * at;
        }
        // deaths
        if !top {
            r = r + p.d * (j + one) * j * us[i + 1];
        }
        r = r - p.d * j * (j - one) * at;
        // emigration
        if !top {
            r = r + p.c * (j + one) * us[i + 1];
        }
        if i > 0 {
            r = r - p.c * j * at;
        } else {
            r = r - p.c * u * at;
        }
        // arrivals on occupied sites
        if i > 0 {
            r = r + shift * us[i - 1];
        }
        if !top {
            r = r - shift * at;
        }
        // newly colonised sites
        if i == 0 {
            r = r + (one - u) * alpha;
        }
        r = r - renorm * at;
        dv[i] = r;
    }
    (du, dv)
}

/// Tolerance on negative entries after a step.
pub const NEGATIVE_TOLERANCE: f64 = 1e-12;

/// One explicit Euler step.
pub fn step_colonization<T: Real>(state: &mut ColonizationState<T>, params: &MkvParams<T>, dt: T) -> Result<()> {
    if !dt.is_finite() {
        return Err(Error::NonFinite("dt"));
    }
    check_positive("dt", dt.as_f64())?;
    let (du, dv) = colonization_rhs(state.u, &state.usize, params);
    let u = state.u + dt * du;
    let next: Vec<T> = state.usize.iter().zip(&dv).map(|(&a, &b)| a + dt * b).collect();
    let floor = -T::lit(NEGATIVE_TOLERANCE);
    if let Some((i, &v)) = next.iter().enumerate().find(|(_, v)| **v < floor) {
        return Err(Error::NegativeState { index: i + 1, value: v.as_f64() });
    }
    if u < floor {
        return Err(Error::NegativeState { index: 0, value: u.as_f64() });
    }
    state.u = u.max(T::zero()).min(T::one());
    state.usize = next.into_iter().map(|v| v.max(T::zero())).collect();
    state.t = state.t + dt;
    Ok(())
}

/// Step size that keeps the explicit update positive.
pub fn colonization_dt<T: Real>(state: &ColonizationState<T>, params: &MkvParams<T>) -> T {
    let jm = state.usize.len();
    let (alpha, gamma) = state.rates(params.c);
    let shift = state.u * (alpha + gamma);
    let renorm = (alpha * (T::one() - state.u) - gamma * state.u).max(T::zero());
    let mut worst = T::zero();
    for i in 0..jm {
        let j = T::from_usize_lossy(i + 1);
        let out = params.s * j + params.d * j * (j - T::one()) + params.c * j + shift + renorm;
        worst = worst.max(out);
    }
    if worst > T::zero() { T::lit(0.5) / worst } else { T::one() }
}

/// Size distribution at the `u = 0` fixed point of the colonization system,
/// found by marching the `u = 0` equations to stationarity.
pub fn stable_size_distribution<T: Real>(params: &MkvParams<T>, j_max: usize, tol: T) -> Result<SizeDistribution<T>> {
    check_positive("c", params.c.as_f64())?;
    if j_max < 2 {
        return Err(Error::InvalidParameter { name: "j_max", reason: "need at least 2".into() });
    }
    let mut state = ColonizationState::new(T::zero(), {
        let mut v = vec![T::zero(); j_max];
        v[0] = T::one();
        v
    }, T::zero())?;
    const MAX_STEPS: usize = 50_000_000;
    for _ in 0..MAX_STEPS {
        let dt = colonization_dt(&state, params);
        let (_, dv) = colonization_rhs(T::zero(), &state.usize, params);
        let worst = dv.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
        if worst < tol {
            let mut probs = vec![T::zero()];
            probs.extend(state.usize.iter().copied());
            return Ok(SizeDistribution { probs });
        }
        step_colonization(&mut state, params, dt)?;
    }
    Err(Error::NoConvergence { iterations: MAX_STEPS, last: state.usize.iter().take(4).map(|v| v.as_f64()).collect() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntranceTrajectory<T> {
    pub alpha: T,
    pub t: Vec<T>,
    pub u: Vec<T>,
    /// `e^{-alpha t} u(t)`.
    pub scaled: Vec<T>,
    /// `Usize(1..J_max)` at each recorded time.
    pub sizes: Vec<Vec<T>>,
    pub final_state: ColonizationState<T>,
    pub warning: Option<String>,
}

/// Largest `u(t_start)` regarded as resolving the entrance regime.
pub const ENTRANCE_U_MAX: f64 = 1e-3;

/// Starts from `u = A e^{alpha t_start}` with `U` the stable size law (its
/// entry for size 0 is ignored) and integrates to `t_end` with step `dt`,
/// recording every `record_every` steps.
#[allow(clippy::too_many_arguments)]
pub fn entrance_shoot<T: Real>(
    params: &MkvParams<T>,
    amplitude: T,
    t_start: T,
    t_end: T,
    stable: &SizeDistribution<T>,
    dt: T,
    record_every: usize,
) -> Result<EntranceTrajectory<T>> {
    check_positive("A", amplitude.as_f64())?;
    check_positive("dt", dt.as_f64())?;
    if !(t_start < t_end) {
        return Err(Error::InvalidParameter { name: "t_start", reason: "need t_start < t_end".into() });
    }
    let us: Vec<T> = stable.probs[1..].to_vec();
    let (alpha, _) = colonization_rates(&us, params.c);
    let u0 = amplitude * (alpha * t_start).exp();
    let warning = (u0.as_f64() > ENTRANCE_U_MAX)
        .then(|| format!("u(t_start) = {:.3e} exceeds {ENTRANCE_U_MAX:e}: entrance regime not resolved", u0.as_f64()));
    let mut state = ColonizationState::new(u0.min(T::one()), us, t_start)?;
    let steps = ((t_end - t_start) / dt).round().to_usize().unwrap_or(0);
    let every = record_every.max(1);
    let mut out = EntranceTrajectory { alpha, t: vec![], u: vec![], scaled: vec![], sizes: vec![], final_state: state.clone(), warning };
    let record = |out: &mut EntranceTrajectory<T>, st: &ColonizationState<T>| {
        out.t.push(st.t);
        out.u.push(st.u);
        out.scaled.push((-alpha * st.t).exp() * st.u);
        out.sizes.push(st.usize.clone());
    };
    record(&mut out, &state);
    for i in 1..=steps {
        step_colonization(&mut state, params, dt)?;
        state.t = t_start + dt * T::from_usize_lossy(i);
        if i % every == 0 || i == steps {
            record(&mut out, &state);
        }
    }
    out.final_state = state;
    Ok(out)
}
