use std::path::{Path, PathBuf};

use nalgebra::Matrix2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use super::output::{fmt, format_json, projections, write_table_csv, write_trajectory_csv, Plot};
use super::{Scenario, ScenarioConfig, ScenarioError};
use crate::analysis::{
    canard_arrival, dip_depth, find_limit_cycle, first_return_minus, first_return_minus_trajectory, funnel_starts,
    local_map_l, local_map_trajectory, strong_canard_start, variational_twist, AnalysisError,
};
use crate::charts::{round_trip_error, sample_hub};
use crate::integrator::{integrate_hybrid_filippov, Termination, Trajectory};
use crate::normal_form::{characteristic_residual, sample_valid_params, DEFAULT_TAU_INT};
use crate::regularization::RegularizationFn;

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub output_dir: PathBuf,
    pub summary_path: PathBuf,
    pub errors: usize,
    /// 0 when every computation succeeded, 3 otherwise.
    pub exit_code: i32,
}

#[derive(Debug, Clone, Serialize)]
struct ErrorRecord {
    code: String,
    message: String,
    context: Value,
}

struct Ctx<'a> {
    cfg: &'a ScenarioConfig,
    phi: RegularizationFn,
    dir: PathBuf,
    files: Vec<String>,
    errors: Vec<ErrorRecord>,
}

impl Ctx<'_> {
    fn error(&mut self, e: &AnalysisError, context: Value) {
        log::warn!("{}: {e}", e.code());
        self.errors.push(ErrorRecord { code: e.code().into(), message: e.to_string(), context });
    }

    fn io_error(&mut self, what: &str, e: impl std::fmt::Display) {
        log::error!("writing {what}: {e}");
        self.errors.push(ErrorRecord { code: "Io".into(), message: format!("{what}: {e}"), context: Value::Null });
    }

    fn trajectory(&mut self, name: &str, tr: &Trajectory) {
        match write_trajectory_csv(&self.dir.join(name), tr) {
            Ok(()) => self.files.push(name.into()),
            Err(e) => self.io_error(name, e),
        }
    }

    fn table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) {
        match write_table_csv(&self.dir.join(name), header, rows) {
            Ok(()) => self.files.push(name.into()),
            Err(e) => self.io_error(name, e),
        }
    }

    fn plot(&mut self, name: &str, plot: &Plot) {
        match std::fs::write(self.dir.join(name), plot.to_svg()) {
            Ok(()) => self.files.push(name.into()),
            Err(e) => self.io_error(name, e),
        }
    }

    /// `(x, z)` and `(t, y)` plots of a set of labelled trajectories.
    fn projection_plots(&mut self, stem: &str, title: &str, runs: &[(String, &Trajectory)]) {
        let mut xz = Plot::new(&format!("{title}: (x, z)"), "x", "z");
        let mut ty = Plot::new(&format!("{title}: (t, y)"), "t", "y");
        for (label, tr) in runs {
            let (a, b) = projections(tr);
            xz = xz.with(label.clone(), a);
            ty = ty.with(label.clone(), b);
        }
        self.plot(&format!("{stem}_xz.svg"), &xz);
        self.plot(&format!("{stem}_ty.svg"), &ty);
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

/// Runs a validated scenario and writes its outputs into `out_dir`.
///
/// Numerical failures do not abort the run: they are collected in the
/// `errors` array of `summary.json` and turn the exit code into 3.
pub fn run(cfg: &ScenarioConfig, out_dir: &Path) -> Result<RunOutcome, ScenarioError> {
    let findings = cfg.findings();
    if !findings.is_empty() {
        return Err(ScenarioError::Invalid(findings));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| ScenarioError::Io(format!("{}: {e}", out_dir.display())))?;
    let mut ctx = Ctx {
        cfg,
        phi: RegularizationFn::new(cfg.phi.family),
        dir: out_dir.to_path_buf(),
        files: Vec::new(),
        errors: Vec::new(),
    };
    log::info!("running {:?} into {}", cfg.scenario, out_dir.display());

    let results = match cfg.scenario {
        Scenario::VarthetaCheck => vartheta_check(&mut ctx),
        Scenario::EigenReport => eigen_report(&mut ctx),
        Scenario::CanardPortrait => canard_portrait(&mut ctx),
        Scenario::HybridSim => hybrid_sim(&mut ctx),
        Scenario::LocalMapSweep => local_map_sweep(&mut ctx),
        Scenario::Twist => twist(&mut ctx),
        Scenario::LimitCycle => limit_cycle(&mut ctx),
        Scenario::CaseDip => case_dip(&mut ctx),
        Scenario::ChartRoundtrip => chart_roundtrip(&mut ctx),
    };

    let mut summary = Map::new();
    summary.insert("scenario".into(), to_value(&cfg.scenario));
    summary.insert("params".into(), to_value(&cfg.params));
    summary.insert("phi".into(), to_value(&cfg.phi.family));
    summary.insert("seed".into(), json!(cfg.seed));
    summary.insert("assumptions".into(), assumptions(cfg));
    let case = cfg.geometry.as_ref().and_then(|g| cfg.params.classify_case(g.i_in, g.delta).ok());
    summary.insert("case".into(), to_value(&case));
    summary.insert("results".into(), results);
    summary.insert("files".into(), to_value(&ctx.files));
    summary.insert("errors".into(), to_value(&ctx.errors));

    let summary_path = out_dir.join("summary.json");
    std::fs::write(&summary_path, format_json(&Value::Object(summary)))
        .map_err(|e| ScenarioError::Io(format!("{}: {e}", summary_path.display())))?;
    let errors = ctx.errors.len();
    Ok(RunOutcome { output_dir: out_dir.to_path_buf(), summary_path, errors, exit_code: if errors == 0 { 0 } else { 3 } })
}

fn assumptions(cfg: &ScenarioConfig) -> Value {
    let a = cfg.params.check_assumption_a();
    let e = cfg.params.eigen_data().ok();
    json!({
        "a_holds": a.holds,
        "a_failures": a.failures,
        "discriminant": a.discriminant,
        "b_holds": cfg.params.check_assumption_b(DEFAULT_TAU_INT),
        "xi": e.map(|e| e.xi),
        "n": e.map(|e| e.n),
    })
}

fn vartheta_check(ctx: &mut Ctx) -> Value {
    let (p, cfg, g) = (ctx.cfg.params, ctx.cfg.solver, ctx.cfg.vartheta);
    let points: Vec<(f64, f64)> = (1..=g.nx)
        .flat_map(|i| {
            let x = g.x_max * i as f64 / g.nx as f64;
            (0..g.nz).map(move |k| {
                let z = if g.nz == 1 { 0.5 * (g.z_min + g.z_max) } else { g.z_min + (g.z_max - g.z_min) * k as f64 / (g.nz - 1) as f64 };
                (x, z)
            })
        })
        .collect();
    let outcomes: Vec<_> = points.par_iter().map(|&(x, z)| first_return_minus(&p, x, z, &cfg)).collect();

    let mut rows = Vec::new();
    let mut max_error = 0.0f64;
    for (&(x, z), out) in points.iter().zip(outcomes) {
        match out {
            Ok((xn, zn)) => {
                let (xa, za) = p.return_map_vartheta(x, z).expect("x > 0");
                let err = (xn - xa).abs().max((zn - za).abs());
                max_error = max_error.max(err);
                rows.push([x, z, xn, zn, xa, za, err].map(fmt).to_vec());
            }
            Err(e) => ctx.error(&e, json!({"x": x, "z": z})),
        }
    }
    ctx.table("vartheta.csv", &["x", "z", "x_numeric", "z_numeric", "x_exact", "z_exact", "error"], &rows);

    let (x, z) = (0.5 * g.x_max, 0.5 * (g.z_min + g.z_max));
    match first_return_minus_trajectory(&p, x, z, &cfg) {
        Ok(tr) => {
            ctx.trajectory("first_return.csv", &tr);
            ctx.projection_plots("first_return", "first return of X-", &[(format!("x0 = {x}"), &tr)]);
        }
        Err(e) => ctx.error(&e, json!({"x": x, "z": z})),
    }
    json!({"n_points": points.len(), "n_ok": rows.len(), "max_error": max_error})
}

fn eigen_report(ctx: &mut Ctx) -> Value {
    let p = ctx.cfg.params;
    let mut out = Map::new();
    match p.eigen_data() {
        Ok(e) => {
            out.insert("eigen".into(), to_value(&e));
            out.insert("characteristic_residual".into(), json!(characteristic_residual(&p, &e)));
            out.insert("z1_star_sign".into(), json!(if e.z1_star > 0.0 { 1 } else { -1 }));
            out.insert("canard_lines".into(), to_value(&p.canard_lines().ok()));
        }
        Err(e) => ctx.error(&e.into(), Value::Null),
    }
    if let Some(g) = &ctx.cfg.geometry {
        out.insert("u_out".into(), to_value(&p.u_out(g.nu)));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed);
    let mut max_residual = 0.0f64;
    let mut ordering_violations = 0usize;
    for _ in 0..ctx.cfg.draws {
        let q = sample_valid_params(&mut rng);
        let Ok(e) = q.eigen_data() else { continue };
        max_residual = max_residual.max(characteristic_residual(&q, &e));
        let ordered = e.lambda_minus < e.lambda_plus
            && e.lambda_plus < 0.0
            && e.chi_plus < e.chi_minus
            && e.chi_minus < 0.0
            && e.z1_star > e.chi_minus;
        if !ordered {
            ordering_violations += 1;
        }
    }
    out.insert(
        "random_draws".into(),
        json!({"draws": ctx.cfg.draws, "max_characteristic_residual": max_residual, "ordering_violations": ordering_violations}),
    );
    Value::Object(out)
}

fn canard_portrait(ctx: &mut Ctx) -> Value {
    let (p, cfg, c, h) = (ctx.cfg.params, ctx.cfg.solver, ctx.cfg.canard, ctx.cfg.hybrid.settings);
    let mut starts = match funnel_starts(&p, c.radius, c.n_funnel) {
        Ok(s) => s,
        Err(e) => {
            ctx.error(&e, Value::Null);
            return Value::Null;
        }
    };
    match strong_canard_start(&p, c.radius) {
        Ok(s) => starts.push(s),
        Err(e) => ctx.error(&e, Value::Null),
    }
    let runs: Vec<_> = starts.par_iter().map(|&s| canard_arrival(&p, s, c.t_max, &cfg, &h)).collect();

    let mut orbits = Vec::new();
    let mut trajs = Vec::new();
    let mut max_weak = 0.0f64;
    let mut strong = Value::Null;
    for (i, (start, run)) in starts.iter().zip(runs).enumerate() {
        let is_strong = i == c.n_funnel;
        match run {
            Ok(a) => {
                let name = if is_strong { "strong_canard.csv".to_string() } else { format!("funnel_{i:02}.csv") };
                ctx.trajectory(&name, &a.trajectory);
                if is_strong {
                    strong = to_value(&a);
                } else {
                    max_weak = max_weak.max(if a.reached_two_fold { a.angle_weak } else { f64::INFINITY });
                    orbits.push(to_value(&a));
                }
                trajs.push((if is_strong { "strong".into() } else { format!("funnel {i}") }, a.trajectory));
            }
            Err(e) => ctx.error(&e, json!({"start": start})),
        }
    }

    let mut plot = Plot::new("sliding orbits into the two-fold", "x", "z");
    if let Ok(e) = p.eigen_data() {
        let r = 1.2 * c.radius;
        for (label, v) in [("v+", e.v_plus), ("v-", e.v_minus)] {
            let n = v[0].hypot(v[1]);
            plot = plot.with(label, vec![(-r * v[0] / n, -r * v[1] / n), (0.0, 0.0)]);
        }
    }
    for (label, tr) in &trajs {
        plot = plot.with(label.clone(), projections(tr).0);
    }
    ctx.plot("canards_xz.svg", &plot);
    json!({"funnel": orbits, "max_angle_weak": max_weak, "strong_canard": strong})
}

fn hybrid_sim(ctx: &mut Ctx) -> Value {
    let (p, cfg) = (ctx.cfg.params, ctx.cfg.solver);
    let hs = ctx.cfg.hybrid.clone();
    let sys = p.pws_system();
    let runs: Vec<_> =
        hs.starts.par_iter().map(|&s| integrate_hybrid_filippov(&sys, s, hs.t_max, &cfg, &hs.settings)).collect();
    let mut out = Vec::new();
    let mut plotted = Vec::new();
    for (i, (start, run)) in hs.starts.iter().zip(runs).enumerate() {
        match run {
            Ok(tr) => {
                ctx.trajectory(&format!("hybrid_{i:02}.csv"), &tr);
                let termination = match tr.termination {
                    Termination::EndOfSpan => "end_of_span".to_string(),
                    Termination::TerminalEvent(k) => k.label(),
                };
                let events: Vec<Value> =
                    tr.events.iter().map(|e| json!({"kind": e.kind.label(), "t": e.t, "state": e.state})).collect();
                out.push(json!({
                    "start": start,
                    "termination": termination,
                    "nonunique": tr.nonunique,
                    "final_time": tr.final_time(),
                    "final_state": tr.final_state(),
                    "events": events,
                }));
                plotted.push((format!("start {i}"), tr));
            }
            Err(e) => ctx.error(&e.into(), json!({"start": start})),
        }
    }
    let refs: Vec<(String, &Trajectory)> = plotted.iter().map(|(l, t)| (l.clone(), t)).collect();
    ctx.projection_plots("hybrid", "Filippov orbits", &refs);
    json!({"runs": out})
}

/// No entry exceeds its predecessor by more than 5 %.
fn nonincreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= 1.05 * w[0])
}

fn local_map_sweep(ctx: &mut Ctx) -> Value {
    let (p, cfg, grid, phi) = (ctx.cfg.params, ctx.cfg.solver, ctx.cfg.grid, ctx.phi);
    let geom = ctx.cfg.geometry.expect("validated");
    let u = p.u_out(geom.nu);
    let mut sweep = Vec::new();
    let mut rows = Vec::new();
    let mut passages = Vec::new();
    for &eps in &ctx.cfg.epsilons.clone() {
        let res = match local_map_l(&p, &phi, eps, &geom, &grid, &cfg) {
            Ok(r) => r,
            Err(e) => {
                ctx.error(&e, json!({"epsilon": eps}));
                continue;
            }
        };
        for f in &res.failures {
            ctx.errors.push(ErrorRecord {
                code: f.code.clone(),
                message: f.message.clone(),
                context: json!({"epsilon": eps, "y": f.y, "z": f.z}),
            });
        }
        for ((img, jac), &i) in res.images.iter().zip(&res.jacobians).zip(&res.image_index) {
            let (y, z) = res.grid[i];
            let m = Matrix2::new(jac[0][0], jac[0][1], jac[1][0], jac[1][1]);
            let norm = m.singular_values().max();
            rows.push([eps, y, z, img.0, img.1, (img.0 - u[0]).hypot(img.1 - u[2]), norm].map(fmt).to_vec());
        }
        sweep.push(json!({
            "epsilon": eps,
            "n_points": res.grid.len(),
            "n_images": res.images.len(),
            "max_dist_to_u_out": res.max_dist_to_u_out,
            "diam_image": res.diam_image,
            "max_op_norm_jac": res.max_op_norm_jac,
        }));
        let centre = res.grid[res.grid.len() / 2];
        match local_map_trajectory(&p, &phi, eps, &geom, centre, &cfg) {
            Ok(tr) => {
                ctx.trajectory(&format!("passage_{}.csv", passages.len()), &tr);
                passages.push((format!("eps = {eps:.0e}"), tr));
            }
            Err(e) => ctx.error(&e, json!({"epsilon": eps, "y": centre.0, "z": centre.1})),
        }
    }
    ctx.table(
        "local_map.csv",
        &["epsilon", "y", "z", "x_image", "z_image", "dist_to_u_out", "jac_op_norm"],
        &rows,
    );
    let refs: Vec<(String, &Trajectory)> = passages.iter().map(|(l, t)| (l.clone(), t)).collect();
    ctx.projection_plots("passage", "passage through the two-fold region", &refs);

    let col = |k: &str| sweep.iter().map(|s| s[k].as_f64().unwrap_or(f64::NAN)).collect::<Vec<_>>();
    json!({
        "u_out": u,
        "sweep": sweep,
        "dist_nonincreasing": nonincreasing(&col("max_dist_to_u_out")),
        "diam_nonincreasing": nonincreasing(&col("diam_image")),
    })
}

fn twist(ctx: &mut Ctx) -> Value {
    let (p, cfg, phi) = (ctx.cfg.params, ctx.cfg.solver, ctx.phi);
    let mut runs = Vec::new();
    let mut third = Vec::new();
    for &mu in &ctx.cfg.twist.mu.clone() {
        match variational_twist(&p, &phi, mu, &cfg) {
            Ok(t) => {
                third.push((mu, t.varpi_out_normalized[2].abs()));
                runs.push(to_value(&t));
            }
            Err(e) => ctx.error(&e, json!({"mu": mu})),
        }
    }
    // smaller μ should give a smaller third component
    let mut by_mu = third.clone();
    by_mu.sort_by(|a, b| b.0.total_cmp(&a.0));
    let decreasing = by_mu.windows(2).all(|w| w[1].1 < w[0].1);
    json!({"runs": runs, "third_component_decreases_with_mu": decreasing})
}

fn limit_cycle(ctx: &mut Ctx) -> Value {
    let (p, cfg, phi, newton) = (ctx.cfg.params, ctx.cfg.solver, ctx.phi, ctx.cfg.newton);
    let geom = ctx.cfg.geometry.expect("validated");
    let g = ctx.cfg.global_return.expect("validated");
    let u = p.u_out(geom.nu);
    let mut out = Vec::new();
    let mut dists = Vec::new();
    let mut cycles = Vec::new();
    for &eps in &ctx.cfg.epsilons.clone() {
        match find_limit_cycle(&p, &phi, eps, &geom, &g, &cfg, &newton) {
            Ok(lc) => {
                let dist = (lc.fixed_point[0] - u[0]).hypot(lc.fixed_point[1] - u[2]);
                dists.push(dist);
                out.push(json!({
                    "epsilon": eps,
                    "fixed_point": lc.fixed_point,
                    "dist_to_u_out": dist,
                    "floquet": lc.floquet.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                    "max_floquet_modulus": lc.max_floquet_modulus(),
                    "iterations": lc.iterations,
                    "residual": lc.residual,
                }));
                ctx.trajectory(&format!("cycle_{}.csv", cycles.len()), &lc.cycle);
                cycles.push((format!("eps = {eps:.0e}"), lc.cycle));
            }
            Err(e) => ctx.error(&e, json!({"epsilon": eps})),
        }
    }
    let refs: Vec<(String, &Trajectory)> = cycles.iter().map(|(l, t)| (l.clone(), t)).collect();
    ctx.projection_plots("cycle", "limit cycle passage", &refs);
    json!({
        "u_out": u,
        "cycles": out,
        "approaches_u_out": dists.windows(2).all(|w| w[1] < w[0]),
    })
}

fn case_dip(ctx: &mut Ctx) -> Value {
    let (p, cfg, grid, phi) = (ctx.cfg.params, ctx.cfg.solver, ctx.cfg.grid, ctx.phi);
    let geom = ctx.cfg.geometry.expect("validated");
    let mut out = Vec::new();
    let mut rows = Vec::new();
    for &eps in &ctx.cfg.epsilons.clone() {
        match dip_depth(&p, &phi, eps, &geom, &grid, &cfg) {
            Ok(r) => {
                rows.extend(r.per_point.iter().map(|&(y, z, m)| [eps, y, z, m].map(fmt).to_vec()));
                out.push(json!({"epsilon": eps, "case": r.case, "dip": r.dip, "dip_over_epsilon": r.dip / eps}));
            }
            Err(e) => ctx.error(&e, json!({"epsilon": eps})),
        }
    }
    ctx.table("dip.csv", &["epsilon", "y", "z", "min_y"], &rows);
    json!({"sweep": out})
}

fn chart_roundtrip(ctx: &mut Ctx) -> Value {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed);
    let hubs: Vec<[f64; 4]> = (0..ctx.cfg.draws).map(|_| sample_hub(&mut rng)).collect();
    let max_error = hubs.iter().map(|&h| round_trip_error(h)).fold(0.0, f64::max);
    json!({"draws": hubs.len(), "max_round_trip_error": max_error})
}
