//! The experiment registry.

use serde_json::{json, Map, Value as Json};

use emergence_core::cmj::{cmj_report, estimate_mu, malthusian_alpha, CmjConfig};
use emergence_core::droplet::{droplet_traces, growth_from_traces, DropletModel};
use emergence_core::duality::{check_moment_duality, check_spatial_duality, single_site_timescale, DualityReport};
use emergence_core::fw_meanfield::{emergence_experiment, EmergenceConfig, SystemParams};
use emergence_core::fw_single::{DiffusionParams, NoiseScheme};
use emergence_core::mkv::{
    default_j_max, entrance_shoot, run_mkv_to_fixation, stable_size_distribution, DensityGrid, MkvParams,
};
use emergence_core::particles::{
    advance_to, self_consistent_intensity, single_site_equilibrium, time_averaged_occupancy, EmigrationRule,
    OccupancyState, ParticleParams,
};
use emergence_core::rng::{replica_rng, stream_seed};
use emergence_core::stats::{linear_fit, median, Summary};
use emergence_core::Error;

use crate::config::{Kind, ParamSpec, RunConfig};
use crate::output::{Cell, Outcome, Table};
use crate::RunError;

pub type Runner = fn(&RunConfig) -> Result<Outcome, RunError>;

pub struct Experiment {
    pub name: &'static str,
    pub about: &'static str,
    pub default_replicas: usize,
    pub params: &'static [ParamSpec],
    pub run: Runner,
}

const fn real(key: &'static str, default: &'static str, help: &'static str) -> ParamSpec {
    ParamSpec { key, kind: Kind::Real, default, help }
}

const fn int(key: &'static str, default: &'static str, help: &'static str) -> ParamSpec {
    ParamSpec { key, kind: Kind::Int, default, help }
}

const fn text(key: &'static str, default: &'static str, help: &'static str) -> ParamSpec {
    ParamSpec { key, kind: Kind::Str, default, help }
}

const SCHEME: ParamSpec = text("scheme", "boundary_feller", "noise scheme: boundary_feller | euler_clamp");

static EXPERIMENTS: [Experiment; 9] = [
    Experiment {
        name: "emergence_scaling",
        about: "half-takeover time of the type-2 mean against ln N",
        default_replicas: 100,
        params: &[
            real("c", "1", "migration rate"),
            real("s", "1", "selection rate"),
            real("d", "1", "resampling rate"),
            real("m", "1", "mutation intensity"),
            text("n_list", "64,128,256,512,1024", "comma-separated site counts"),
            real("dt", "0.001", "time step"),
            real("alpha", "0", "growth rate; 0 estimates it from the birth intensity"),
            int("mu_replicas", "100000", "replicas for the birth-intensity estimate"),
            real("t_lo", "-5", "window start relative to ln(N)/alpha"),
            real("t_hi", "5", "window end relative to ln(N)/alpha"),
            int("points", "21", "sample times on the window"),
            real("t_extra", "20", "cap beyond ln(N)/alpha"),
            SCHEME,
        ],
        run: run_emergence,
    },
    Experiment {
        name: "droplet_growth",
        about: "total mass of the droplet process and its growth constant",
        default_replicas: 1000,
        params: &[
            real("c", "1", "migration rate"),
            real("s", "1", "selection rate"),
            real("d", "1", "resampling rate"),
            real("m", "1", "immigration intensity"),
            real("eps", "0.05", "excursion threshold"),
            real("horizon", "8", "time horizon"),
            real("dt", "0.002", "time step"),
            int("record_every", "50", "steps between samples"),
            SCHEME,
        ],
        run: run_droplet,
    },
    Experiment {
        name: "cmj_alpha",
        about: "Malthusian parameter, rates and limit variable of the collision-free process",
        default_replicas: 200,
        params: &[
            real("c", "1", "migration rate"),
            real("s", "1", "birth rate"),
            real("d", "1", "pairwise death coefficient"),
            real("horizon", "0", "simulation horizon; 0 uses 16/s"),
            int("mu_replicas", "100000", "replicas for the birth-intensity estimate"),
            real("tail_fraction", "0.5", "fraction of the horizon used by the regression"),
        ],
        run: run_cmj,
    },
    Experiment {
        name: "duality_moment",
        about: "single-site moment duality against the block-counting death chain",
        default_replicas: 100_000,
        params: &[
            real("x0", "0.3", "initial frequency"),
            int("k", "2", "moment order"),
            real("d", "1", "resampling rate"),
            real("t", "0.5", "time"),
            real("dt", "0.001", "time step"),
            int("lattice", "0", "1 adds the 36-cell lattice"),
            int("lattice_replicas", "10000", "replicas per lattice cell"),
            SCHEME,
        ],
        run: run_moment_duality,
    },
    Experiment {
        name: "duality_spatial",
        about: "N-site duality against the occupation functional of the dual",
        default_replicas: 100_000,
        params: &[
            int("n", "10", "site count"),
            real("c", "1", "migration rate"),
            real("s", "1", "selection rate"),
            real("d", "1", "resampling rate"),
            real("m", "1", "mutation intensity"),
            real("t", "1", "time"),
            real("dt", "0.001", "time step"),
            SCHEME,
        ],
        run: run_spatial_duality,
    },
    Experiment {
        name: "mkv_fixation",
        about: "grid mean of the McKean-Vlasov density",
        default_replicas: 1,
        params: &[
            real("c", "1", "migration rate"),
            real("s", "1", "selection rate"),
            real("d", "1", "resampling rate"),
            int("cells", "200", "grid nodes"),
            real("horizon", "20", "time horizon"),
            real("dt", "0", "time step; 0 picks a stable one"),
            real("record_every", "0.5", "time between samples"),
            text("initial", "uniform", "uniform | point"),
            real("y0", "0.2", "location of the point mass"),
        ],
        run: run_mkv,
    },
    Experiment {
        name: "colonization",
        about: "entrance solution of the colonization-equilibration system",
        default_replicas: 1,
        params: &[
            real("c", "1", "migration rate"),
            real("s", "1", "birth rate"),
            real("d", "1", "pairwise death coefficient"),
            int("j_max", "0", "size truncation; 0 uses 4(s/d + 10)"),
            real("amplitude", "1", "growth amplitude A"),
            real("t_start", "-15", "start time"),
            real("t_end", "10", "end time"),
            real("dt", "0.00025", "time step"),
            int("record_every", "40", "steps between samples"),
            real("tol", "1e-13", "stable-law tolerance"),
        ],
        run: run_colonization,
    },
    Experiment {
        name: "intensity_fixed_point",
        about: "self-consistent intensity, single-site equilibrium and finite-system check",
        default_replicas: 8,
        params: &[
            real("c", "1", "migration rate"),
            real("s", "1", "birth rate"),
            real("d", "1", "pairwise death coefficient"),
            real("tol", "1e-12", "fixed-point tolerance"),
            text("rule", "all_occupied", "emigration rule: all_occupied | crowded"),
            int("n", "200", "sites of the finite system; 0 skips the simulation"),
            real("t_start", "25", "averaging window start"),
            real("t_end", "50", "averaging window end"),
            real("events_until", "5", "length of the logged event run; 0 skips it"),
        ],
        run: run_intensity,
    },
    Experiment {
        name: "single_site_timescale",
        about: "median first-mutation time of one site against L",
        default_replicas: 400,
        params: &[
            real("s", "1", "selection rate"),
            real("d", "0", "resampling rate"),
            real("m", "1", "mutation intensity"),
            text("l_list", "100,1000,10000", "comma-separated mutation denominators"),
        ],
        run: run_timescale,
    },
];

pub fn registry() -> &'static [Experiment] {
    &EXPERIMENTS
}

/// Looks up an experiment by name or alias.
pub fn find_experiment(name: &str) -> Option<&'static Experiment> {
    let name = match name {
        "moment_duality" => "duality_moment",
        "spatial_duality" => "duality_spatial",
        other => other,
    };
    EXPERIMENTS.iter().find(|e| e.name == name)
}

fn scheme(cfg: &RunConfig) -> Result<NoiseScheme, RunError> {
    match cfg.text("scheme") {
        "boundary_feller" => Ok(NoiseScheme::BoundaryFeller),
        "euler_clamp" => Ok(NoiseScheme::EulerClamp),
        other => Err(RunError::Param { key: "scheme", reason: format!("unknown scheme `{other}`") }),
    }
}

fn list(cfg: &RunConfig, key: &'static str) -> Result<Vec<f64>, RunError> {
    cfg.text(key)
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v > 0.0)
                .ok_or_else(|| RunError::Param { key, reason: format!("`{p}` is not a positive number") })
        })
        .collect()
}

fn count(cfg: &RunConfig, key: &'static str) -> Result<usize, RunError> {
    usize::try_from(cfg.int(key)).map_err(|_| RunError::Param { key, reason: "must be non-negative".into() })
}

fn to_map(v: Json) -> Map<String, Json> {
    match v {
        Json::Object(m) => m,
        other => Map::from_iter([("value".to_string(), other)]),
    }
}

fn run_emergence(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let (c, s, d, m) = (cfg.real("c"), cfg.real("s"), cfg.real("d"), cfg.real("m"));
    let sizes = list(cfg, "n_list")?;
    let mut summary = Map::new();
    let alpha = if cfg.real("alpha") > 0.0 {
        cfg.real("alpha")
    } else {
        let base = CmjConfig::for_rates(s, d / 2.0);
        let n_mu = (base.mu_t_max / base.mu_dt).round() as usize;
        let grid: Vec<f64> = (1..=n_mu).map(|i| i as f64 * base.mu_dt).collect();
        let mu = estimate_mu(c, s, d / 2.0, &grid, count(cfg, "mu_replicas")?, stream_seed(cfg.seed, "alpha"))?;
        malthusian_alpha(&mu, s)?
    };
    summary.insert("alpha".into(), json!(alpha));

    let mut table = Table::new(&["n", "replica", "t", "mean_type2", "droplet_mass"]);
    let mut takeover = Table::new(&["n", "replica", "half_takeover"]);
    let (mut logs, mut medians) = (Vec::new(), Vec::new());
    let mut capped = 0;
    for &nf in &sizes {
        let n = nf.round() as usize;
        let params = SystemParams::new(n, c, s, d, m)?;
        let ecfg = EmergenceConfig {
            dt: cfg.real("dt"),
            scheme: scheme(cfg)?,
            replicas: cfg.replicas,
            seed: stream_seed(cfg.seed, &format!("emergence-{n}")),
            points: count(cfg, "points")?,
            t_cap: (n as f64).ln() / alpha + cfg.real("t_extra"),
        };
        let run = emergence_experiment(&params, alpha, (cfg.real("t_lo"), cfg.real("t_hi")), &ecfg)?;
        for r in 0..cfg.replicas {
            for (i, &t) in run.times.iter().enumerate() {
                table.push(vec![
                    n.into(),
                    r.into(),
                    t.into(),
                    run.mean_type2[r][i].into(),
                    run.droplet_mass[r][i].into(),
                ]);
            }
            takeover.push(vec![n.into(), r.into(), run.half_takeover[r].into()]);
        }
        capped += run.half_takeover.iter().filter(|h| h.is_none()).count();
        let times: Vec<f64> = run.half_takeover.iter().map(|h| h.unwrap_or(f64::INFINITY)).collect();
        logs.push((n as f64).ln());
        medians.push(median(&times));
    }
    summary.insert("median_half_takeover".into(), json!(medians.iter().map(|m| m.to_string()).collect::<Vec<_>>()));
    summary.insert("capped_replicas".into(), json!(capped));
    summary.insert("inverse_alpha".into(), json!(1.0 / alpha));
    match linear_fit(&logs, &medians) {
        Some(fit) if fit.slope.is_finite() => {
            summary.insert("slope".into(), json!(fit.slope));
            summary.insert("intercept".into(), json!(fit.intercept));
            summary.insert("r_squared".into(), json!(fit.r_squared));
        }
        _ => {
            summary.insert("slope".into(), json!("undetermined"));
        }
    }
    Ok(Outcome { table, summary, extra: vec![("half_takeover".into(), takeover)] })
}

fn run_droplet(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let params = DiffusionParams::excursion(cfg.real("c"), cfg.real("s"), cfg.real("d"))?;
    let model = DropletModel::new(params, cfg.real("m"), cfg.real("eps"))?.with_scheme(scheme(cfg)?);
    let traces = droplet_traces(
        &model,
        cfg.real("horizon"),
        cfg.real("dt"),
        count(cfg, "record_every")?,
        cfg.replicas,
        stream_seed(cfg.seed, "droplet"),
    )?;
    let mut table = Table::new(&["replica", "t", "total_mass", "n_atoms"]);
    for (r, tr) in traces.iter().enumerate() {
        for i in 0..tr.times.len() {
            table.push(vec![r.into(), tr.times[i].into(), tr.total_mass[i].into(), tr.n_atoms[i].into()]);
        }
    }
    let mut summary = Map::new();
    match growth_from_traces(&traces) {
        Ok(g) => {
            summary.insert("alpha_star".into(), json!(g.alpha_star));
            summary.insert("intercept".into(), json!(g.intercept));
            summary.insert("r_squared".into(), json!(g.r_squared));
            summary.insert("tail_variation".into(), json!(g.tail_variation));
            summary.insert("W_mean".into(), json!(g.w.mean));
            summary.insert("W_var".into(), json!(g.w.var));
            summary.insert("extinct_replicas".into(), json!(g.extinct_replicas));
        }
        Err(Error::Degenerate(why)) => {
            summary.insert("fit".into(), json!(format!("degenerate: {why}")));
        }
        Err(e) => return Err(e.into()),
    }
    Ok(Outcome { table, summary, extra: vec![] })
}

fn run_cmj(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let (c, s, d) = (cfg.real("c"), cfg.real("s"), cfg.real("d"));
    let mut ccfg = CmjConfig::for_rates(s, d);
    ccfg.seed = cfg.seed;
    ccfg.replicas = cfg.replicas;
    ccfg.mu_replicas = count(cfg, "mu_replicas")?;
    ccfg.tail_fraction = cfg.real("tail_fraction");
    if cfg.real("horizon") > 0.0 {
        ccfg.horizon = cfg.real("horizon");
    }
    let r = cmj_report(c, s, d, &ccfg)?;
    let quantities = [
        ("alpha_laplace", r.alpha_laplace),
        ("alpha_regression", r.alpha_regression),
        ("alpha_histogram", r.alpha_histogram),
        ("gamma", r.gamma),
        ("B", r.b),
        ("W_mean", r.w_mean),
        ("W_var", r.w_var),
        ("stability_tv", r.stability_tv),
        ("overflow", r.overflow),
    ];
    let mut table = Table::new(&["quantity", "value"]);
    let mut summary = Map::new();
    for (q, v) in quantities {
        table.push(vec![q.into(), v.into()]);
        summary.insert(q.into(), json!(v));
    }
    let mut stable = Table::new(&["j", "probability"]);
    for (i, &p) in r.stable_size.iter().enumerate() {
        stable.push(vec![(i + 1).into(), p.into()]);
    }
    Ok(Outcome { table, summary, extra: vec![("stable_size".into(), stable)] })
}

const DUALITY_COLUMNS: [&str; 6] = ["lhs_mean", "lhs_se", "rhs_mean", "rhs_se", "z_score", "pass"];

fn report_cells(r: &DualityReport) -> Vec<Cell> {
    vec![r.lhs_mean.into(), r.lhs_se.into(), r.rhs_mean.into(), r.rhs_se.into(), r.z_score.into(), r.pass.into()]
}

fn run_moment_duality(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let k = u32::try_from(cfg.int("k")).map_err(|_| RunError::Param { key: "k", reason: "out of range".into() })?;
    let (dt, sch) = (cfg.real("dt"), scheme(cfg)?);
    let mut columns = vec!["check", "x0", "k", "d", "t"];
    columns.extend(DUALITY_COLUMNS);
    let mut table = Table::new(&columns);
    let main = check_moment_duality(
        cfg.real("x0"),
        cfg.real("d"),
        k,
        cfg.real("t"),
        dt,
        sch,
        cfg.replicas,
        stream_seed(cfg.seed, "moment"),
    )?;
    let mut row = vec!["main".into(), cfg.real("x0").into(), (k as usize).into(), cfg.real("d").into(), cfg.real("t").into()];
    row.extend(report_cells(&main));
    table.push(row);
    let mut summary = to_map(serde_json::to_value(main)?);
    if cfg.int("lattice") != 0 {
        let cell_replicas = count(cfg, "lattice_replicas")?;
        let mut worst = 0.0f64;
        for (i, &x0) in [0.1f64, 0.5, 0.9].iter().enumerate() {
            for (j, &kk) in [2u32, 3, 5].iter().enumerate() {
                for (a, &d) in [0.5f64, 2.0].iter().enumerate() {
                    for (b, &t) in [0.25f64, 1.0].iter().enumerate() {
                        let seed = stream_seed(cfg.seed, &format!("lattice-{i}{j}{a}{b}"));
                        let r = check_moment_duality(x0, d, kk, t, dt, sch, cell_replicas, seed)?
                            .with_threshold(4.0);
                        worst = worst.max(r.z_score.abs());
                        let mut row = vec!["lattice".into(), x0.into(), (kk as usize).into(), d.into(), t.into()];
                        row.extend(report_cells(&r));
                        table.push(row);
                    }
                }
            }
        }
        summary.insert("lattice_max_abs_z".into(), json!(worst));
        summary.insert("lattice_pass".into(), json!(worst < 4.0));
    }
    Ok(Outcome { table, summary, extra: vec![] })
}

fn run_spatial_duality(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let n = count(cfg, "n")?;
    let sys = SystemParams::new(n, cfg.real("c"), cfg.real("s"), cfg.real("d"), cfg.real("m"))?;
    let r = check_spatial_duality(&sys, cfg.real("t"), cfg.real("dt"), scheme(cfg)?, cfg.replicas, cfg.seed)?;
    let mut columns = vec!["n", "t"];
    columns.extend(DUALITY_COLUMNS);
    let mut table = Table::new(&columns);
    let mut row = vec![n.into(), cfg.real("t").into()];
    row.extend(report_cells(&r));
    table.push(row);
    Ok(Outcome { table, summary: to_map(serde_json::to_value(r)?), extra: vec![] })
}

fn run_mkv(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let p = MkvParams::new(cfg.real("c"), cfg.real("s"), cfg.real("d"))?;
    let cells = count(cfg, "cells")?;
    let grid = match cfg.text("initial") {
        "uniform" => DensityGrid::uniform(cells)?,
        "point" => DensityGrid::point_mass(cells, cfg.real("y0"))?,
        other => return Err(RunError::Param { key: "initial", reason: format!("unknown initial law `{other}`") }),
    };
    let dt = Some(cfg.real("dt")).filter(|&v| v > 0.0);
    let (curve, end) = run_mkv_to_fixation(&grid, &p, cfg.real("horizon"), dt, cfg.real("record_every"))?;
    let mut table = Table::new(&["t", "mean"]);
    for (&t, &m) in curve.t.iter().zip(&curve.m) {
        table.push(vec![t.into(), m.into()]);
    }
    let mut summary = Map::new();
    let final_mean = curve.m.last().copied().unwrap_or(f64::NAN);
    summary.insert("final_mean".into(), json!(final_mean));
    summary.insert("fixed".into(), json!(final_mean >= 0.99));
    summary.insert("mass_drift".into(), json!(curve.mass_drift));
    summary.insert("final_mass".into(), json!(end.total_mass()));
    summary.insert("steps".into(), json!(curve.steps));
    Ok(Outcome { table, summary, extra: vec![] })
}

fn run_colonization(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let p = MkvParams::new(cfg.real("c"), cfg.real("s"), cfg.real("d"))?;
    let j_max = match count(cfg, "j_max")? {
        0 => default_j_max(p.s, p.d),
        j => j,
    };
    let stable = stable_size_distribution(&p, j_max, cfg.real("tol"))?;
    let amp = cfg.real("amplitude");
    let dt = cfg.real("dt");
    let tr = entrance_shoot(&p, amp, cfg.real("t_start"), cfg.real("t_end"), &stable, dt, count(cfg, "record_every")?)?;
    let mut columns: Vec<String> = ["t", "u", "m"].map(String::from).to_vec();
    columns.extend((1..=j_max).map(|j| format!("usize_{j}")));
    let mut table = Table::new(&columns);
    for i in 0..tr.t.len() {
        let sizes = &tr.sizes[i];
        let mean_size: f64 = sizes.iter().enumerate().map(|(j, &q)| (j + 1) as f64 * q).sum();
        let mut row: Vec<Cell> = vec![tr.t[i].into(), tr.u[i].into(), mean_size.into()];
        row.extend(sizes.iter().map(|&q| Cell::Real(q)));
        table.push(row);
    }
    let entrance = tr
        .u
        .iter()
        .zip(&tr.scaled)
        .filter(|(u, _)| **u < 1e-2)
        .map(|(_, sc)| (sc / amp - 1.0).abs())
        .fold(0.0f64, f64::max);
    let mut summary = Map::new();
    summary.insert("alpha".into(), json!(tr.alpha));
    summary.insert("j_max".into(), json!(j_max));
    summary.insert("dt".into(), json!(dt));
    summary.insert("scheme".into(), json!("explicit_euler"));
    summary.insert("entrance_deviation".into(), json!(entrance));
    summary.insert("final_u".into(), json!(tr.final_state.u));
    summary.insert("final_mass".into(), json!(tr.final_state.mass()));
    summary.insert("warning".into(), tr.warning.map_or(Json::Null, Json::String));
    Ok(Outcome { table, summary, extra: vec![] })
}

fn run_intensity(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let (c, s, d) = (cfg.real("c"), cfg.real("s"), cfg.real("d"));
    let rule = match cfg.text("rule") {
        "all_occupied" => EmigrationRule::AllOccupied,
        "crowded" => EmigrationRule::Crowded,
        other => return Err(RunError::Param { key: "rule", reason: format!("unknown rule `{other}`") }),
    };
    let fp = self_consistent_intensity(c, s, d, cfg.real("tol"), None, rule)?;
    let law = single_site_equilibrium(c, s, d, fp.iota_star, None, rule)?;
    let mut table = Table::new(&["k", "probability"]);
    for (k, &p) in law.probs.iter().enumerate() {
        table.push(vec![k.into(), p.into()]);
    }
    let mut summary = to_map(serde_json::to_value(fp)?);
    let n = count(cfg, "n")?;
    let mut extra = Vec::new();
    if n > 0 {
        let params = ParticleParams::finite(n, c, s, d)?;
        let seed = stream_seed(cfg.seed, "occupancy");
        let runs = (0..cfg.replicas as u64)
            .map(|r| {
                let mut rng = replica_rng(seed, r);
                time_averaged_occupancy(&params, cfg.real("t_start"), cfg.real("t_end"), &mut rng)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let intensity: Vec<f64> = runs.iter().map(|r| r.intensity).collect();
        let occupied: Vec<f64> = runs.iter().map(|r| r.occupied_fraction).collect();
        let si = Summary::of(&intensity);
        summary.insert("simulated_intensity".into(), json!(si.mean));
        summary.insert("simulated_intensity_se".into(), json!(si.se));
        summary.insert("occupied_fraction".into(), json!(Summary::of(&occupied).mean));

        let until = cfg.real("events_until");
        if until > 0.0 {
            let mut rng = replica_rng(stream_seed(cfg.seed, "events"), 0);
            let mut state = OccupancyState::finite(n, &[(0, 1)])?;
            let mut log = Vec::new();
            let extinct = advance_to(&mut state, &params, until, &mut rng, Some(&mut log))?;
            let mut events = Table::new(&["t", "site", "event"]);
            for ev in &log {
                events.push(vec![ev.t.into(), ev.site.into(), ev.kind.as_str().into()]);
            }
            summary.insert("final_intensity".into(), json!(state.total() as f64 / n as f64));
            summary.insert("extinct".into(), json!(extinct || state.total() == 0));
            extra.push(("events".to_string(), events));
        }
    }
    Ok(Outcome { table, summary, extra })
}

fn run_timescale(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let grid = list(cfg, "l_list")?;
    let fit = single_site_timescale(cfg.real("s"), cfg.real("d"), cfg.real("m"), &grid, cfg.replicas, cfg.seed)?;
    let mut table = Table::new(&["L", "median", "regressor"]);
    for i in 0..fit.l.len() {
        table.push(vec![fit.l[i].into(), fit.medians[i].into(), fit.regressor[i].into()]);
    }
    let mut summary = Map::new();
    summary.insert("regressor".into(), json!(if cfg.real("d") == 0.0 { "ln L" } else { "L" }));
    summary.insert("slope".into(), json!(fit.fit.slope));
    summary.insert("intercept".into(), json!(fit.fit.intercept));
    summary.insert("r_squared".into(), json!(fit.fit.r_squared));
    Ok(Outcome { table, summary, extra: vec![] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Value;

    #[test]
    fn nine_unique_experiments_with_parsable_defaults() {
        let names: Vec<_> = registry().iter().map(|e| e.name).collect();
        assert_eq!(names.len(), 9);
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 9);
        for e in registry() {
            for p in e.params {
                assert!(Value::parse(p.kind, p.default).is_some(), "{}.{}", e.name, p.key);
            }
        }
    }

    #[test]
    fn aliases_resolve() {
        assert_eq!(find_experiment("moment_duality").unwrap().name, "duality_moment");
        assert_eq!(find_experiment("spatial_duality").unwrap().name, "duality_spatial");
        assert!(find_experiment("nothing").is_none());
    }
}
