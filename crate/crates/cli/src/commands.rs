use floqlin::classical::{
    bifurcation_scan, classify, find_limit_cycle, phase_oscillator_coefficients,
    stability_eigenvalues, stationary_states, turning_points, ClassicalError, CycleOptions,
    LimitCycle, ModelParams, RegionLabel,
};
use floqlin::floquet::FloquetSystem;
use floqlin::fluctuations::{
    c_kernel, theta_diffusion, theta_kernel, GaussianSnapshot, GridSpec, LinearizedState,
    WignerGrid,
};
use floqlin::fock_oracle::{
    evolve_steady, exact_wigner, expectation, quadrature_moments, FockState, OracleParams,
};
use floqlin::positive_p::{linearized_theta_sim, simulate_ensemble, EnsembleOptions, TRACKED};
use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::output::{fmt_f, Outputs};
use crate::Failure;

/// Results and heatmap descriptions collected for the metadata file.
#[derive(Default)]
pub struct Report {
    pub results: Map<String, Value>,
    pub heatmaps: Map<String, Value>,
}

impl Report {
    fn set(&mut self, key: &str, value: Value) {
        self.results.insert(key.to_string(), value);
    }

    fn heatmap(&mut self, out: &mut Outputs, name: &str, grid: &WignerGrid) -> Result<(), Failure> {
        let (lo, hi) = out.pgm(name, grid)?;
        self.heatmaps.insert(
            name.to_string(),
            json!({
                "wmin": lo,
                "wmax": hi,
                "grid": grid.spec,
                "first_row": "p_max",
                "mass": grid.mass(),
            }),
        );
        Ok(())
    }
}

fn linspace(max: f64, n: usize, k: usize) -> f64 {
    if n < 2 {
        0.0
    } else {
        max * k as f64 / (n - 1) as f64
    }
}

fn cycle_options(cfg: &RunConfig) -> CycleOptions {
    CycleOptions {
        n_grid: cfg.options.n_grid,
        ..CycleOptions::default()
    }
}

fn cycle(cfg: &RunConfig) -> Result<LimitCycle, Failure> {
    Ok(find_limit_cycle(&cfg.model, &cycle_options(cfg))?)
}

fn floquet(cfg: &RunConfig) -> Result<FloquetSystem, Failure> {
    Ok(FloquetSystem::build(&cycle(cfg)?)?)
}

/// Largest classical amplitude: the cycle's if there is one, otherwise the
/// largest stable stationary state.
pub fn classical_amplitude(model: &ModelParams) -> Result<f64, Failure> {
    match find_limit_cycle(model, &CycleOptions::default()) {
        Ok(c) => Ok(c.samples.iter().map(|b| b.norm()).fold(0.0, f64::max)),
        Err(ClassicalError::NoLimitCycle { .. }) => Ok(stationary_states(model.f, model.delta)
            .iter()
            .filter(|s| s.stable)
            .map(|s| s.intensity.sqrt())
            .fold(0.0, f64::max)),
        Err(e) => Err(e.into()),
    }
}

/// Fills in the grid extent and Fock cutoff the command needs.
pub fn resolve(cfg: &mut RunConfig) -> Result<(), Failure> {
    let needs_grid = matches!(
        cfg.command.as_str(),
        "wigner-linearized" | "wigner-exact" | "compare"
    );
    let needs_cutoff = matches!(cfg.command.as_str(), "wigner-exact" | "compare")
        || (cfg.command == "pp-moments" && cfg.options.oracle);
    let o = &cfg.options;
    if !(needs_grid && o.grid_half_width.is_none() || needs_cutoff && o.n_max.is_none()) {
        return Ok(());
    }
    let a = classical_amplitude(&cfg.model)?;
    let r = a / cfg.model.gamma.sqrt();
    if needs_grid && cfg.options.grid_half_width.is_none() {
        // phase-space radius is 2|β|/√γ, plus room for the vacuum width
        cfg.options.grid_half_width = Some(((2.0 * r + 6.0) * 2.0).ceil() / 2.0);
    }
    if needs_cutoff && cfg.options.n_max.is_none() {
        cfg.options.n_max = Some((r * r + 6.0 * r + 10.0).ceil() as usize);
    }
    Ok(())
}

pub fn execute(cfg: &RunConfig, out: &mut Outputs) -> Result<Report, Failure> {
    match cfg.command.as_str() {
        "phase-diagram" => phase_diagram(cfg, out),
        "bifurcation" => bifurcation(cfg, out),
        "limit-cycle" => limit_cycle(cfg, out),
        "floquet" => floquet_cmd(cfg, out),
        "theta-diffusion" => theta(cfg, out),
        "wigner-linearized" => wigner_linearized(cfg, out),
        "wigner-exact" => wigner_exact(cfg, out),
        "compare" => compare(cfg, out),
        "pp-moments" => pp_moments(cfg, out),
        other => Err(Failure::Usage(format!("unknown command {other:?}"))),
    }
}

fn phase_diagram(cfg: &RunConfig, out: &mut Outputs) -> Result<Report, Failure> {
    let o = &cfg.options;
    let n = o.resolution;
    if n < 2 || !(o.i_max > 0.0) || !(o.delta2_max > 0.0) {
        return Err(Failure::Usage(
            "phase-diagram needs resolution >= 2 and positive ranges".into(),
        ));
    }
    let labels = [
        RegionLabel::StableOverdamped,
        RegionLabel::StableUnderdamped,
        RegionLabel::UnstableStatic,
        RegionLabel::UnstableHopfSide,
    ];
    let mut counts = [0usize; 4];
    let mut rows = Vec::with_capacity(n * n);
    for a in 0..n {
        let d2 = linspace(o.delta2_max, n, a);
        let delta = d2.sqrt();
        for b in 0..n {
            let i = linspace(o.i_max, n, b);
            let region = classify(i, delta);
            counts[labels.iter().position(|l| *l == region.label).unwrap()] += 1;
            let (lp, lm) = stability_eigenvalues(i, delta);
            let (g, w2) = phase_oscillator_coefficients(i, delta);
            rows.push(vec![
                fmt_f(d2),
                fmt_f(i),
                region.label.as_str().to_string(),
                fmt_f(lp.re),
                fmt_f(lp.im),
                fmt_f(lm.re),
                fmt_f(lm.im),
                fmt_f(g),
                fmt_f(w2),
            ]);
        }
    }
    out.csv(
        "phase_diagram.csv",
        &[
            "delta2",
            "intensity",
            "label",
            "lambda_plus_re",
            "lambda_plus_im",
            "lambda_minus_re",
            "lambda_minus_im",
            "damping_rate",
            "omega2",
        ],
        &rows,
    )?;

    let opt = |v: Option<f64>| v.map(fmt_f).unwrap_or_default();
    let bounds: Vec<Vec<String>> = (0..n)
        .map(|a| {
            let d2 = linspace(o.delta2_max, n, a);
            let tp = turning_points(d2.sqrt());
            vec![
                fmt_f(d2),
                opt(tp.map(|t| t.i_plus)),
                opt(tp.map(|t| t.i_minus)),
                opt(tp.map(|t| t.f2_plus)),
                opt(tp.map(|t| t.f2_minus)),
                fmt_f(0.5),
                fmt_f(d2.sqrt()),
            ]
        })
        .collect();
    out.csv(
        "boundaries.csv",
        &[
            "delta2",
            "tp_plus_intensity",
            "tp_minus_intensity",
            "tp_plus_f2",
            "tp_minus_f2",
            "hopf_intensity",
            "underdamped_intensity",
        ],
        &bounds,
    )?;

    let mut rep = Report::default();
    let mut by_label = Map::new();
    for (l, c) in labels.iter().zip(counts) {
        by_label.insert(l.as_str().into(), json!(c));
    }
    rep.set("points", json!(n * n));
    rep.set("label_counts", Value::Object(by_label));
    rep.set("turning_point_coalescence_delta2", json!(1.0 / 3.0));
    Ok(rep)
}

fn bifurcation(cfg: &RunConfig, out: &mut Outputs) -> Result<Report, Failure> {
    let o = &cfg.options;
    let scan = bifurcation_scan(
        cfg.model.delta,
        o.f2_min,
        o.f2_max,
        o.resolution,
        &cycle_options(cfg),
    )?;
    let mut rows = Vec::new();
    let mut cycle_range: Option<(f64, f64)> = None;
    let mut max_stable = 0;
    for row in &scan {
        for s in &row.states {
            rows.push(vec![
                fmt_f(row.f2),
                "stationary".into(),
                fmt_f(s.intensity),
                fmt_f(s.phase),
                (s.stable as u8).to_string(),
                format!("{:?}", s.damping).to_lowercase(),
                String::new(),
                String::new(),
            ]);
        }
        max_stable = max_stable.max(row.stable_states().count());
        if let (Some(i), Some(t), Some(a)) = (
            row.cycle_mean_intensity,
            row.cycle_period,
            row.cycle_amplitude,
        ) {
            rows.push(vec![
                fmt_f(row.f2),
                "cycle".into(),
                fmt_f(i),
                String::new(),
                "1".into(),
                String::new(),
                fmt_f(t),
                fmt_f(a),
            ]);
            cycle_range = Some(match cycle_range {
                None => (row.f2, row.f2),
                Some((lo, hi)) => (lo.min(row.f2), hi.max(row.f2)),
            });
        }
    }
    out.csv(
        "branches.csv",
        &[
            "f2",
            "kind",
            "intensity",
            "phase",
            "stable",
            "damping",
            "period",
            "amplitude",
        ],
        &rows,
    )?;
    let mut rep = Report::default();
    rep.set("rows", json!(rows.len()));
    rep.set("max_stable_states", json!(max_stable));
    rep.set("cycle_f2_range", json!(cycle_range));
    rep.set("turning_points", json!(turning_points(cfg.model.delta)));
    Ok(rep)
}

fn cycle_rows(c: &LimitCycle) -> Vec<Vec<String>> {
    c.samples
        .iter()
        .enumerate()
        .map(|(k, b)| {
            vec![
                k.to_string(),
                fmt_f(c.time(k)),
                fmt_f(b.re),
                fmt_f(b.im),
                fmt_f(b.norm_sqr()),
            ]
        })
        .collect()
}

const CYCLE_HEADER: [&str; 5] = ["k", "tau", "beta_re", "beta_im", "intensity"];

fn cycle_summary(rep: &mut Report, c: &LimitCycle) {
    rep.set("period", json!(c.period));
    rep.set("closure_residual", json!(c.closure_residual));
    rep.set("drift_residual", json!(c.drift_residual()));
    rep.set("mean_intensity", json!(c.mean_intensity()));
    rep.set("amplitude", json!(c.amplitude()));
    rep.set("n_grid", json!(c.n_grid()));
}

fn limit_cycle(cfg: &RunConfig, out: &mut Outputs) -> Result<Report, Failure> {
    let c = cycle(cfg)?;
    out.csv("cycle.csv", &CYCLE_HEADER, &cycle_rows(&c))?;
    let mut rep = Report::default();
    cycle_summary(&mut rep, &c);
    Ok(rep)
}

fn complex_json(z: floqlin::numerics::C64) -> Value {
    json!([z.re, z.im])
}

fn floquet_cmd(cfg: &RunConfig, out: &mut Outputs) -> Result<Report, Failure> {
    let sys = floquet(cfg)?;
    out.csv("cycle.csv", &CYCLE_HEADER, &cycle_rows(&sys.cycle))?;
    let t = sys.period();
    let eig: Vec<Vec<String>> = (0..2)
        .map(|j| {
            let m = (sys.mu[j] * t).exp();
            vec![
                j.to_string(),
                fmt_f(sys.mu[j].re),
                fmt_f(sys.mu[j].im),
                fmt_f(m.re),
                fmt_f(m.im),
            ]
        })
        .collect();
    out.csv(
        "eigenvalues.csv",
        &["j", "mu_re", "mu_im", "multiplier_re", "multiplier_im"],
        &eig,
    )?;

    let mut header = vec!["k".to_string(), "tau".to_string()];
    for mode in ["p0", "p1", "q0", "q1"] {
        for comp in 0..2 {
            for part in ["re", "im"] {
                header.push(format!("{mode}_{comp}_{part}"));
            }
        }
    }
    let m = &sys.modes;
    let rows: Vec<Vec<String>> = (0..sys.n_grid())
        .map(|k| {
            let mut r = vec![k.to_string(), fmt_f(sys.cycle.time(k))];
            for v in [&m.p0[k], &m.p1[k], &m.q0[k], &m.q1[k]] {
                for z in v {
                    r.push(fmt_f(z.re));
                    r.push(fmt_f(z.im));
                }
            }
            r
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.csv("modes.csv", &header, &rows)?;

    let mut rep = Report::default();
    cycle_summary(&mut rep, &sys.cycle);
    rep.set(
        "mu",
        json!([complex_json(sys.mu[0]), complex_json(sys.mu[1])]),
    );
    rep.set("goldstone_residual", json!(sys.goldstone_residual()));
    rep.set("mean_trace", json!(sys.mean_trace()));
    rep.set(
        "trace_sum_error",
        json!((sys.mu[0] + sys.mu[1] - sys.mean_trace()).norm()),
    );
    rep.set("periodicity_defects", json!(m.periodicity_defects));
    Ok(rep)
}

fn theta(cfg: &RunConfig, out: &mut Outputs) -> Result<Report, Failure> {
    let o = &cfg.options;
    let gamma = cfg.model.gamma;
    let sys = floquet(cfg)?;
    let td = theta_diffusion(&sys, gamma, o.t_max, o.n_points)?;
    let rows: Vec<Vec<String>> = td
        .times
        .iter()
        .zip(&td.variance)
        .map(|(t, v)| vec![fmt_f(*t), fmt_f(*v)])
        .collect();
    out.csv("variance.csv", &["tau", "theta_variance"], &rows)?;

    let kt = theta_kernel(&sys)?;
    let kc = c_kernel(&sys)?;
    let rows: Vec<Vec<String>> = (0..sys.n_grid())
        .map(|k| {
            vec![
                k.to_string(),
                fmt_f(sys.cycle.time(k)),
                fmt_f(kt[k]),
                fmt_f(kc[k]),
            ]
        })
        .collect();
    out.csv(
        "kernels.csv",
        &["k", "tau", "theta_kernel", "c_kernel"],
        &rows,
    )?;

    let mut rep = Report::default();
    rep.set("period", json!(sys.period()));
    rep.set(
        "mu",
        json!([complex_json(sys.mu[0]), complex_json(sys.mu[1])]),
    );
    rep.set("slope", json!(td.slope));
    rep.set("mean_rate", json!(td.mean_rate));
    if o.simulate {
        let sim = linearized_theta_sim(&sys, gamma, o.dt, o.t_max, o.n_traj, o.seed)?;
        let rows: Vec<Vec<String>> = (0..sim.times.len())
            .map(|k| {
                vec![
                    fmt_f(sim.times[k]),
                    fmt_f(sim.theta_variance[k]),
                    fmt_f(sim.theta_complex_variance[k]),
                ]
            })
            .collect();
        out.csv(
            "theta_sim.csv",
            &["tau", "theta_variance", "theta_complex_variance"],
            &rows,
        )?;
        let rows: Vec<Vec<String>> = sim
            .phase_bins
            .iter()
            .zip(&sim.c1_variance)
            .map(|(p, c)| vec![fmt_f(*p), fmt_f(*c)])
            .collect();
        out.csv("c1_bins.csv", &["phase", "c1_variance_over_gamma"], &rows)?;
        rep.set("simulated_slope", json!(sim.slope));
        rep.set(
            "simulated_slope_relative_error",
            json!((sim.slope - sim.predicted_slope).abs() / sim.predicted_slope),
        );
        rep.set("contamination", json!(sim.contamination));
    }
    Ok(rep)
}

fn grid_spec(cfg: &RunConfig) -> Result<GridSpec, Failure> {
    let hw = cfg
        .options
        .grid_half_width
        .ok_or_else(|| Failure::Usage("grid half-width unresolved".into()))?;
    if !(hw > 0.0) || cfg.options.grid_points < 3 {
        return Err(Failure::Usage(
            "grid needs a positive half-width and at least 3 points".into(),
        ));
    }
    Ok(GridSpec::square(hw, cfg.options.grid_points))
}

fn linearized(
    cfg: &RunConfig,
    sys: &FloquetSystem,
    rep: &mut Report,
) -> Result<(Vec<GaussianSnapshot>, WignerGrid), Failure> {
    let state = LinearizedState::new(sys, cfg.model.gamma)?;
    let snaps = state.snapshots(cfg.options.n_theta)?;
    let w = state.mixture_wigner(&grid_spec(cfg)?, cfg.options.n_theta)?;
    let dets: Vec<f64> = snaps.iter().map(|s| s.det()).collect();
    rep.set("period", json!(sys.period()));
    rep.set(
        "mu",
        json!([complex_json(sys.mu[0]), complex_json(sys.mu[1])]),
    );
    rep.set(
        "covariance_det_range",
        json!([
            dets.iter().copied().fold(f64::INFINITY, f64::min),
            dets.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        ]),
    );
    rep.set("linearized_mass", json!(w.mass()));
    rep.set("linearized_mean", json!(w.mean()));
    Ok((snaps, w))
}

fn wigner_linearized(cfg: &RunConfig, out: &mut Outputs) -> Result<Report, Failure> {
    let mut rep = Report::default();
    let sys = floquet(cfg)?;
    let (snaps, w) = linearized(cfg, &sys, &mut rep)?;
    let rows: Vec<Vec<String>> = snaps
        .iter()
        .map(|s| {
            vec![
                fmt_f(s.theta),
                fmt_f(s.mean[0]),
                fmt_f(s.mean[1]),
                fmt_f(s.cov[0][0]),
                fmt_f(s.cov[0][1]),
                fmt_f(s.cov[1][1]),
                fmt_f(s.det()),
            ]
        })
        .collect();
    out.csv(
        "snapshots.csv",
        &["theta", "mean_x", "mean_p", "v_xx", "v_xp", "v_pp", "det"],
        &rows,
    )?;
    rep.heatmap(out, "wigner_linearized.pgm", &w)?;
    Ok(rep)
}

fn oracle(cfg: &RunConfig, rep: &mut Report) -> Result<FockState, Failure> {
    let n_max = cfg
        .options
        .n_max
        .ok_or_else(|| Failure::Usage("Fock cutoff unresolved".into()))?;
    let mut p = OracleParams::new(cfg.model, n_max);
    p.steady_tol = cfg.options.steady_tol;
    let st = evolve_steady(&p)?;
    let (mean, cov) = quadrature_moments(&st)?;
    rep.set("n_max_used", json!(st.n_max));
    rep.set("leakage", json!(st.leakage));
    rep.set("steady_residual", json!(st.residual));
    rep.set("oracle_time", json!(st.time));
    rep.set("photon_number", json!(expectation(&st, 1, 1)?.re));
    rep.set("a2dag_a2", json!(expectation(&st, 2, 2)?.re));
    rep.set("quadrature_mean", json!(mean));
    rep.set("quadrature_cov", json!(cov));
    Ok(st)
}

fn populations(out: &mut Outputs, st: &FockState) -> Result<(), Failure> {
    let rows: Vec<Vec<String>> = st
        .populations()
        .iter()
        .enumerate()
        .map(|(n, p)| vec![n.to_string(), fmt_f(*p)])
        .collect();
    out.csv("populations.csv", &["n", "probability"], &rows)?;
    Ok(())
}

fn wigner_exact(cfg: &RunConfig, out: &mut Outputs) -> Result<Report, Failure> {
    let mut rep = Report::default();
    let st = oracle(cfg, &mut rep)?;
    populations(out, &st)?;
    let w = exact_wigner(&st, &grid_spec(cfg)?);
    rep.set("exact_mass", json!(w.mass()));
    rep.heatmap(out, "wigner_exact.pgm", &w)?;
    Ok(rep)
}

fn compare(cfg: &RunConfig, out: &mut Outputs) -> Result<Report, Failure> {
    let mut rep = Report::default();
    let sys = floquet(cfg)?;
    let (_, lin) = linearized(cfg, &sys, &mut rep)?;
    let st = oracle(cfg, &mut rep)?;
    populations(out, &st)?;
    let exact = exact_wigner(&st, &lin.spec);
    let d = distances(&sys, cfg.model.gamma, &lin, &exact);
    let rows = vec![
        vec!["l1_relative".to_string(), fmt_f(d.l1_relative)],
        vec!["sup".to_string(), fmt_f(d.sup)],
        vec!["exact_max_x".to_string(), fmt_f(d.max_at[0])],
        vec!["exact_max_p".to_string(), fmt_f(d.max_at[1])],
        vec![
            "max_to_cycle_cells".to_string(),
            fmt_f(d.max_to_cycle_cells),
        ],
    ];
    out.csv("distances.csv", &["metric", "value"], &rows)?;
    rep.set("exact_mass", json!(exact.mass()));
    rep.set(
        "distances",
        json!({
            "l1_relative": d.l1_relative,
            "sup": d.sup,
            "exact_max_at": d.max_at,
            "max_to_cycle_cells": d.max_to_cycle_cells,
        }),
    );
    rep.heatmap(out, "wigner_linearized.pgm", &lin)?;
    rep.heatmap(out, "wigner_exact.pgm", &exact)?;
    Ok(rep)
}

/// Distances between two Wigner grids on the same spec.
pub struct Distances {
    /// `Σ|W₁ - W₂| dA / Σ W₂ dA`.
    pub l1_relative: f64,
    pub sup: f64,
    /// Location of the maximum of the second grid.
    pub max_at: [f64; 2],
    /// Distance from that maximum to the classical cycle in
    /// `(2Re β̄, 2Im β̄)/√γ`, in units of the larger grid spacing.
    pub max_to_cycle_cells: f64,
}

pub fn distances(
    sys: &FloquetSystem,
    gamma: f64,
    lin: &WignerGrid,
    exact: &WignerGrid,
) -> Distances {
    let spec = exact.spec;
    let diff: f64 = lin
        .values
        .iter()
        .zip(&exact.values)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        * exact.cell_area();
    let sup = lin.sup_distance(exact).unwrap_or(f64::INFINITY);
    let (imax, _) = exact
        .values
        .iter()
        .enumerate()
        .fold(
            (0, f64::NEG_INFINITY),
            |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc },
        );
    let max_at = [spec.x(imax % spec.nx), spec.p(imax / spec.nx)];
    let s = 2.0 / gamma.sqrt();
    let to_cycle = sys
        .cycle
        .samples
        .iter()
        .map(|b| (s * b.re - max_at[0]).hypot(s * b.im - max_at[1]))
        .fold(f64::INFINITY, f64::min);
    Distances {
        l1_relative: diff / exact.mass(),
        sup,
        max_at,
        max_to_cycle_cells: to_cycle / spec.dx().max(spec.dp()),
    }
}

fn pp_moments(cfg: &RunConfig, out: &mut Outputs) -> Result<Report, Failure> {
    let o = &cfg.options;
    let mut opts = EnsembleOptions::new(o.n_traj, o.dt, o.t_end, o.seed);
    opts.window_start = o.window_start;
    let stats = simulate_ensemble(&cfg.model, &opts)?;

    let mut header = vec!["tau".to_string()];
    for (m, n) in TRACKED {
        for part in ["re", "im", "se_re", "se_im"] {
            header.push(format!("m{m}{n}_{part}"));
        }
    }
    let rows: Vec<Vec<String>> = (0..stats.times.len())
        .map(|k| {
            let mut r = vec![fmt_f(stats.times[k])];
            for s in &stats.series {
                let e = &s[k];
                r.extend([
                    fmt_f(e.mean.re),
                    fmt_f(e.mean.im),
                    fmt_f(e.se[0]),
                    fmt_f(e.se[1]),
                ]);
            }
            r
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.csv("series.csv", &header, &rows)?;

    let mut rep = Report::default();
    let fock = if o.oracle {
        Some(oracle(cfg, &mut rep)?)
    } else {
        None
    };
    let mut rows = Vec::new();
    let mut z_scores = Map::new();
    for s in &stats.steady {
        let q = s.quantum;
        let mut r = vec![
            s.m.to_string(),
            s.n.to_string(),
            fmt_f(q.mean.re),
            fmt_f(q.mean.im),
            fmt_f(q.se[0]),
            fmt_f(q.se[1]),
        ];
        if let Some(st) = &fock {
            let e = expectation(st, s.m as usize, s.n as usize)?;
            let z = (q.mean.re - e.re) / q.se[0].max(f64::MIN_POSITIVE);
            r.extend([fmt_f(e.re), fmt_f(e.im), fmt_f(z)]);
            z_scores.insert(format!("m{}{}", s.m, s.n), json!(z));
        }
        rows.push(r);
    }
    let mut header = vec!["m", "n", "re", "im", "se_re", "se_im"];
    if fock.is_some() {
        header.extend(["fock_re", "fock_im", "z_re"]);
    }
    out.csv("steady.csv", &header, &rows)?;
    rep.set("n_traj", json!(stats.n_traj));
    rep.set("n_diverged", json!(stats.n_diverged));
    rep.set("window", json!(stats.window));
    rep.set("steady", json!(stats.steady));
    if fock.is_some() {
        rep.set("z_scores", Value::Object(z_scores));
    }
    Ok(rep)
}
