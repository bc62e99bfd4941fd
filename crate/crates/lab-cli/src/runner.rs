//! Experiment orchestration: each experiment kind runs end-to-end from a
//! validated config, writing its report JSON, plot CSVs and the manifest.

use crate::artifacts::{self, point_str, ArtifactSink};
use crate::config::{validate, ExperimentConfig, ExperimentKind};
use crate::manifest::{self, CheckSummary, RunManifest, StageClock};
use anyhow::{bail, Context};
use carnot_lab::fields::{
    embedding_scaling_test, DriftSpec, EmbeddingExponents, GridField, SpaceTimeGrid,
};
use carnot_lab::group::CarnotGroupSpec;
use carnot_lab::heat::{
    envelope_check, euclidean_heat_kernel, kernel_density_estimate, kernel_lp_scaling_check,
    semigroup_apply_mc, EnvelopeSample, KernelScalingConfig, McParams,
};
use carnot_lab::pde::{select_lambda_traced, solve_heat, SolverOptions};
use carnot_lab::report::Verdict;
use carnot_lab::rng::{fill_standard_normal, stream_rng};
use carnot_lab::sde::{integrate_ensemble, krylov_check, Region, Scheme};
use carnot_lab::zvonkin::{
    build_map, conjugation_consistency, injectivity_check, uniqueness_experiment, ZvonkinMap,
    GRAD_CERT_TOL,
};
use serde::Serialize;
use std::path::Path;
use std::sync::Arc;

#[derive(Debug, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub verdict: Verdict,
    pub detail: serde_json::Value,
}

impl CheckRecord {
    fn new(name: &str, verdict: Verdict, detail: impl Serialize) -> Self {
        CheckRecord {
            name: name.to_string(),
            verdict,
            detail: serde_json::to_value(detail).unwrap_or(serde_json::Value::Null),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub experiment: String,
    pub checks: Vec<CheckRecord>,
}

pub struct RunOutcome {
    pub manifest: RunManifest,
}

impl RunOutcome {
    pub fn all_passed(&self) -> bool {
        self.manifest.all_passed
    }
}

/// Runs the configured experiment. `seed_override` replaces the config seed
/// (recorded in the manifest); artifacts land under `out_dir`.
pub fn run(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> anyhow::Result<RunOutcome> {
    let started_at = chrono::Utc::now().to_rfc3339();
    let mut cfg = cfg.clone();
    if let Some(seed) = seed_override {
        cfg.mc.seed = seed;
    }
    let report = validate(&cfg);
    if !report.valid {
        bail!("invalid config: {}", report.issues.join("; "));
    }
    let group = cfg.resolve_group()?;
    let mut sink = ArtifactSink::new(out_dir)?;
    let mut clock = StageClock::new();

    let checks = match cfg.experiment {
        ExperimentKind::HeatChecks => heat_checks(&cfg, &group, &mut sink, &mut clock)?,
        ExperimentKind::KernelScaling => kernel_scaling(&cfg, &group, &mut sink, &mut clock)?,
        ExperimentKind::Kolmogorov => kolmogorov(&cfg, &group, &mut sink, &mut clock)?,
        ExperimentKind::ZvonkinUniqueness => {
            zvonkin_uniqueness(&cfg, &group, &mut sink, &mut clock)?
        }
        ExperimentKind::Krylov => krylov(&cfg, &group, &mut sink, &mut clock)?,
        ExperimentKind::Embedding => embedding(&cfg, &group, &mut sink, &mut clock)?,
    };

    let run_report = RunReport {
        scenario: cfg.name.clone(),
        experiment: cfg.experiment.as_str().to_string(),
        checks,
    };
    sink.write_json("report.json", &run_report)?;

    let all_passed = run_report
        .checks
        .iter()
        .all(|c| c.verdict.passed());
    let manifest = RunManifest {
        scenario: cfg.name.clone(),
        experiment: cfg.experiment.as_str().to_string(),
        config_hash: manifest::config_hash(&cfg),
        code_version: manifest::code_version(),
        seed: cfg.mc.seed,
        started_at,
        finished_at: chrono::Utc::now().to_rfc3339(),
        stages: clock.into_records(),
        checks: run_report
            .checks
            .iter()
            .map(|c| CheckSummary {
                name: c.name.clone(),
                verdict: c.verdict,
            })
            .collect(),
        artifacts: sink.files().to_vec(),
        all_passed,
    };
    std::fs::write(
        out_dir.join("manifest.json"),
        serde_json::to_vec_pretty(&manifest)?,
    )?;
    Ok(RunOutcome { manifest })
}

fn mc_params(cfg: &ExperimentConfig) -> McParams {
    McParams {
        samples: cfg.mc.paths,
        steps_per_unit_time: (cfg.mc.steps as f64 / cfg.horizon).ceil() as usize,
        seed: cfg.mc.seed,
    }
}

// ---------------------------------------------------------------- heat

fn heat_checks(
    cfg: &ExperimentConfig,
    group: &CarnotGroupSpec,
    sink: &mut ArtifactSink,
    clock: &mut StageClock,
) -> anyhow::Result<Vec<CheckRecord>> {
    let mc = mc_params(cfg);
    let mut rows: Vec<String> = Vec::new();
    let mut checks = Vec::new();
    if !group.is_abelian() {
        bail!("heat_checks is defined for abelian groups; use kernel_scaling on {}", group.name());
    }
    let t = cfg.horizon / 2.0;

    // MC semigroup vs the exact second moment: P_t x² = x² + 2t.
    let f = |y: &[f64]| y[0] * y[0];
    let mut sq_ok = true;
    clock.time("mc_semigroup_second_moment", || -> anyhow::Result<()> {
        for (i, &x) in [0.5f64, -0.9, 1.3].iter().enumerate() {
            let mc_i = McParams {
                seed: mc.seed.wrapping_add(i as u64),
                ..mc
            };
            let point = vec![x];
            let est = semigroup_apply_mc(group, &f, t, &point, &mc_i)?;
            let exact = x * x + 2.0 * t;
            let rel = (est.value - exact).abs() / exact;
            let pass = rel < 0.01;
            sq_ok &= pass;
            rows.push(format!(
                "second_moment,{t},{},{},{exact},{},{},{}",
                point_str(&point),
                est.value,
                est.std_error,
                0.01,
                u8::from(pass)
            ));
        }
        Ok(())
    })?;
    checks.push(CheckRecord::new(
        "mc_semigroup_second_moment_rel_error_lt_1pct",
        Verdict::from_bool(sq_ok),
        serde_json::json!({ "t": t }),
    ));

    // Kernel density vs the closed form at 20 points, within 3 SE.
    let mut kde_ok = true;
    let mut worst = 0.0f64;
    clock.time("kernel_density_vs_closed_form", || -> anyhow::Result<()> {
        let mut rng = stream_rng(mc.seed ^ 0x5ca1e, 0);
        for i in 0..20 {
            let mut draw = vec![0.0; group.dim()];
            fill_standard_normal(&mut rng, &mut draw);
            let x: Vec<f64> = draw.iter().map(|v| v * (2.0 * t).sqrt()).collect();
            let mc_i = McParams {
                seed: mc.seed.wrapping_add(100 + i as u64),
                ..mc
            };
            let est = kernel_density_estimate(group, t, &x, &mc_i, None)?;
            let exact = euclidean_heat_kernel(group.dim(), t, &x);
            let tol = 3.0 * est.std_error;
            let pass = (est.value - exact).abs() < tol;
            kde_ok &= pass;
            worst = worst.max((est.value - exact).abs() / est.std_error.max(1e-300));
            rows.push(format!(
                "kernel_density,{t},{},{},{exact},{},{tol},{}",
                point_str(&x),
                est.value,
                est.std_error,
                u8::from(pass)
            ));
        }
        Ok(())
    })?;
    checks.push(CheckRecord::new(
        "kernel_density_within_3se_at_20_points",
        Verdict::from_bool(kde_ok),
        serde_json::json!({ "worst_se_multiples": worst }),
    ));

    sink.write_csv("heat_checks.csv", artifacts::HEAT_CHECKS_HEADER, rows)?;
    Ok(checks)
}

// ------------------------------------------------------------- kernels

fn kernel_scaling(
    cfg: &ExperimentConfig,
    group: &CarnotGroupSpec,
    sink: &mut ArtifactSink,
    clock: &mut StageClock,
) -> anyhow::Result<Vec<CheckRecord>> {
    let mc = mc_params(cfg);
    let grid = cfg.build_grid()?;
    let mut checks = Vec::new();

    // Self-similarity collapse at 20 points: the Silverman KDE is exactly
    // dilation-equivariant in law, so 3 combined SEs cover the difference.
    let mut collapse_rows = Vec::new();
    let collapse_ok = clock.time("self_similarity_collapse", || -> anyhow::Result<bool> {
        let q_half = group.homogeneous_dim() as f64 / 2.0;
        let times: [f64; 4] = [0.36, 0.49, 0.64, 0.81];
        let mut ok = true;
        let mut rng = stream_rng(mc.seed ^ 0xc0111a95e, 1);
        for i in 0..20 {
            let t = times[i % times.len()];
            let mut dir = vec![0.0; group.dim()];
            fill_standard_normal(&mut rng, &mut dir);
            // Moderate dilation-scaled offsets.
            let mut x: Vec<f64> = dir.iter().map(|v| 0.55 * v).collect();
            group.dilate_into(t.sqrt(), &mut x);
            let mc_a = McParams {
                seed: mc.seed.wrapping_add(1000 + i as u64),
                ..mc
            };
            let mc_b = McParams {
                seed: mc.seed.wrapping_add(5000 + i as u64),
                ..mc
            };
            let lhs = kernel_density_estimate(group, t, &x, &mc_a, None)?;
            let mut scaled = x.clone();
            group.dilate_into(t.powf(-0.5), &mut scaled);
            let rhs = kernel_density_estimate(group, 1.0, &scaled, &mc_b, None)?;
            let lhs_val = lhs.value * t.powf(q_half);
            let se = (t.powf(2.0 * q_half) * lhs.std_error.powi(2) + rhs.std_error.powi(2)).sqrt();
            let tol = 3.0 * se;
            let pass = (lhs_val - rhs.value).abs() < tol;
            ok &= pass;
            collapse_rows.push(format!(
                "{t},{},{lhs_val},{},{tol},{}",
                point_str(&x),
                rhs.value,
                u8::from(pass)
            ));
        }
        Ok(ok)
    })?;
    sink.write_csv(
        "collapse_points.csv",
        artifacts::COLLAPSE_POINTS_HEADER,
        collapse_rows,
    )?;
    checks.push(CheckRecord::new(
        "self_similarity_collapse_3se_20_points",
        Verdict::from_bool(collapse_ok),
        serde_json::json!({ "points": 20 }),
    ));

    // Mass slope: ‖p_t‖_{L¹} is t-flat (slope within 0.05 of 0).
    let scaling_cfg = KernelScalingConfig {
        times: vec![
            0.4 * cfg.horizon,
            0.6 * cfg.horizon,
            0.8 * cfg.horizon,
            cfg.horizon,
        ],
        space: grid.space.clone(),
        mc,
        bandwidth_scale: 1.0,
        tolerance: 0.05,
    };
    let slope_report = clock.time("mass_slope", || {
        kernel_lp_scaling_check(group, 1.0, &[], &|_| 1.0, 0.0, &scaling_cfg)
    })?;
    sink.write_csv(
        "kernel_norms.csv",
        artifacts::KERNEL_NORMS_HEADER,
        slope_report
            .abscissae
            .iter()
            .zip(&slope_report.values)
            .map(|(t, n)| format!("{t},{n}")),
    )?;
    checks.push(CheckRecord::new(
        "mass_conservation_slope_within_0.05",
        slope_report.verdict,
        &slope_report,
    ));

    // Envelope fit on 50 samples along two rays.
    let mut envelope_rows = Vec::new();
    let (k_order, idx): (usize, Vec<usize>) = (0, vec![]);
    let envelope_ok = clock.time("envelope_fit", || -> anyhow::Result<bool> {
        let rays: [Vec<f64>; 2] = [
            {
                let mut v = vec![0.0; group.dim()];
                v[0] = 1.0;
                v
            },
            {
                let mut v = vec![1.0; group.dim()];
                let norm = group.homogeneous_norm(&v);
                for u in v.iter_mut() {
                    *u /= norm;
                }
                v
            },
        ];
        let times = [0.3, 0.45, 0.6, 0.8, 1.0];
        let radii = [0.0, 0.5, 0.9, 1.3, 1.7];
        let mut samples = Vec::new();
        for (ti, &t_rel) in times.iter().enumerate() {
            let t = t_rel * cfg.horizon;
            let mc_t = McParams {
                seed: mc.seed.wrapping_add(9000 + ti as u64),
                ..mc
            };
            let cloud = carnot_lab::heat::kernel_endpoints(group, t, &mc_t)?;
            for ray in &rays {
                for &r in &radii {
                    let mut x = ray.clone();
                    group.dilate_into((r * t.sqrt()).max(1e-9), &mut x);
                    let est = carnot_lab::heat::kde_at_point(&cloud, group.dim(), &x, None)?;
                    samples.push(EnvelopeSample {
                        t,
                        x,
                        estimate: est.value,
                    });
                }
            }
        }
        let (env, rep) = envelope_check(group, &samples, k_order, &idx, 0.05)?;
        for s in &samples {
            let e = env.value(group, s.t, &s.x);
            envelope_rows.push(format!(
                "{},{},{},{e},{}",
                s.t,
                point_str(&s.x),
                s.estimate,
                s.estimate / e
            ));
        }
        checks.push(CheckRecord::new(
            "envelope_ratio_le_1.05",
            rep.verdict,
            &rep,
        ));
        Ok(rep.verdict.passed())
    })?;
    let _ = envelope_ok;
    sink.write_csv(
        "envelope_samples.csv",
        artifacts::ENVELOPE_SAMPLES_HEADER,
        envelope_rows,
    )?;
    Ok(checks)
}

// ---------------------------------------------------------- kolmogorov

/// Vector source `f = -b` (Euclidean coordinates) on the grid.
pub fn zvonkin_source(
    group: &CarnotGroupSpec,
    drift: &DriftSpec,
    grid: &Arc<SpaceTimeGrid>,
) -> Vec<GridField> {
    let n = group.dim();
    let mut f = Vec::with_capacity(n);
    for j in 0..n {
        let mut bvec = Vec::new();
        f.push(GridField::from_fn(grid.clone(), |t, x| {
            drift.euclidean_vector_into(group, t, x, &mut bvec);
            -bvec[j]
        }));
    }
    f
}

fn kolmogorov(
    cfg: &ExperimentConfig,
    group: &CarnotGroupSpec,
    sink: &mut ArtifactSink,
    clock: &mut StageClock,
) -> anyhow::Result<Vec<CheckRecord>> {
    let grid = cfg.build_grid()?;
    let drift = cfg.build_drift(group)?;
    let f = zvonkin_source(group, &drift, &grid);
    let opts = SolverOptions::default();
    let (lambda, sol, ladder) = clock.time("lambda_ladder", || {
        select_lambda_traced(group, &drift, &f, cfg.epsilon, &opts)
    })?;
    sink.write_csv(
        "kolmogorov.csv",
        artifacts::KOLMOGOROV_HEADER,
        ladder.iter().map(|r| {
            format!(
                "{},{},{},{},{}",
                r.lambda, r.iterations, r.grad_sup, r.residual, r.max_deriv_sup
            )
        }),
    )?;
    let mut checks = Vec::new();
    checks.push(CheckRecord::new(
        "lambda_at_most_4096",
        Verdict::from_bool(lambda <= 4096.0),
        serde_json::json!({ "lambda": lambda }),
    ));
    checks.push(CheckRecord::new(
        "gradient_sup_at_most_half",
        Verdict::from_bool(sol.grad_sup <= 0.5),
        serde_json::json!({ "grad_sup": sol.grad_sup }),
    ));
    checks.push(CheckRecord::new(
        "plugin_residual_below_1e-3",
        Verdict::from_bool(sol.residual_norm < 1e-3),
        serde_json::json!({ "residual": sol.residual_norm }),
    ));
    checks.push(CheckRecord::new(
        "derivative_sups_below_epsilon",
        Verdict::from_bool(ladder.last().map(|r| r.max_deriv_sup <= cfg.epsilon).unwrap_or(false)),
        serde_json::json!({ "epsilon": cfg.epsilon, "ladder": ladder }),
    ));
    Ok(checks)
}

// ------------------------------------------------------------- zvonkin

/// Builds the Zvonkin map of a scenario (shared with the acceptance suite).
pub fn build_scenario_map(
    cfg: &ExperimentConfig,
    group: &CarnotGroupSpec,
) -> anyhow::Result<ZvonkinMap> {
    let grid = cfg.build_grid()?;
    let drift = cfg.build_drift(group)?;
    build_map(
        group,
        &drift,
        grid,
        &cfg.x0,
        cfg.epsilon,
        &SolverOptions::default(),
    )
    .context("Zvonkin map construction failed")
}

fn zvonkin_uniqueness(
    cfg: &ExperimentConfig,
    group: &CarnotGroupSpec,
    sink: &mut ArtifactSink,
    clock: &mut StageClock,
) -> anyhow::Result<Vec<CheckRecord>> {
    let drift = cfg.build_drift(group)?;
    let mut checks = Vec::new();
    let map = clock.time("build_map", || build_scenario_map(cfg, group))?;

    // Round trip Φ∘Φ⁻¹ over 100 points at every grid time.
    let grid = map.solution.components[0].grid().clone();
    let mut roundtrip_rows = Vec::new();
    let roundtrip_ok = clock.time("round_trip", || -> anyhow::Result<bool> {
        let mut rng = stream_rng(cfg.mc.seed ^ 0xf1b, 2);
        let radius = map.omega_radius() * 0.95;
        let mut points = Vec::new();
        while points.len() < 100 {
            let mut draw = vec![0.0; group.dim()];
            fill_standard_normal(&mut rng, &mut draw);
            let norm: f64 = draw.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            let r = radius * (points.len() as f64 / 100.0).cbrt();
            points.push(
                draw.iter()
                    .zip(map.omega_center())
                    .map(|(d, c)| c + d / norm * r)
                    .collect::<Vec<f64>>(),
            );
        }
        let mut ok = true;
        let mut phi = Vec::new();
        for k in 0..grid.n_t {
            let t = grid.time(k);
            let mut worst = 0.0f64;
            for x in &points {
                map.apply(t, x, &mut phi);
                let back = map.invert(t, &phi)?;
                let err: f64 = back
                    .iter()
                    .zip(x)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                worst = worst.max(err);
            }
            ok &= worst < 1e-8;
            roundtrip_rows.push(format!("{t},{worst}"));
        }
        Ok(ok)
    })?;
    sink.write_csv("roundtrip.csv", artifacts::ROUNDTRIP_HEADER, roundtrip_rows)?;
    checks.push(CheckRecord::new(
        "round_trip_below_1e-8",
        Verdict::from_bool(roundtrip_ok),
        serde_json::json!({ "points": 100 }),
    ));
    let (fwd, inv) = map.grad_bounds;
    let in_band = |v: f64| v >= 0.5 - GRAD_CERT_TOL && v <= 2.0 + GRAD_CERT_TOL;
    checks.push(CheckRecord::new(
        "gradient_certificates_in_band",
        Verdict::from_bool(in_band(fwd) && in_band(inv)),
        serde_json::json!({ "forward": fwd, "inverse": inv, "tol": GRAD_CERT_TOL }),
    ));
    checks.push(CheckRecord::new(
        "map_injective_on_samples",
        Verdict::from_bool(injectivity_check(&map, 24, cfg.mc.seed)?),
        serde_json::Value::Null,
    ));

    let steps = [cfg.mc.steps / 4, cfg.mc.steps / 2, cfg.mc.steps];
    let consistency = clock.time("conjugation_consistency", || {
        conjugation_consistency(
            &map,
            group,
            &drift,
            &cfg.x0,
            &steps,
            cfg.mc.paths,
            cfg.mc.seed,
            0.4,
            &cfg.name,
        )
    })?;
    sink.write_csv(
        "consistency_levels.csv",
        artifacts::CONSISTENCY_LEVELS_HEADER,
        consistency
            .levels
            .iter()
            .zip(&consistency.defects)
            .map(|(l, d)| format!("{l},{d}")),
    )?;
    checks.push(CheckRecord::new(
        "conjugation_consistency_slope_ge_0.4",
        consistency.verdict,
        &consistency,
    ));

    let uniq = clock.time("uniqueness", || {
        uniqueness_experiment(
            group,
            &drift,
            &cfg.x0,
            &map.omega,
            cfg.horizon,
            &steps,
            cfg.mc.paths,
            cfg.mc.seed ^ 0xdead,
            1e-2,
            0.1,
            &cfg.name,
        )
    })?;
    sink.write_csv(
        "uniqueness_levels.csv",
        artifacts::UNIQUENESS_LEVELS_HEADER,
        uniq.levels
            .iter()
            .zip(&uniq.defects)
            .map(|(l, d)| format!("{l},{d}")),
    )?;
    checks.push(CheckRecord::new(
        "uniqueness_shadow_with_negative_control",
        uniq.verdict,
        &uniq,
    ));
    Ok(checks)
}

// -------------------------------------------------------------- krylov

fn krylov(
    cfg: &ExperimentConfig,
    group: &CarnotGroupSpec,
    sink: &mut ArtifactSink,
    clock: &mut StageClock,
) -> anyhow::Result<Vec<CheckRecord>> {
    let grid = cfg.build_grid()?;
    let drift = cfg.build_drift(group)?;
    let region = Region::Ball {
        center: cfg.x0.clone(),
        radius: cfg.omega_radius(&grid),
    };
    let base = clock.time("ensemble_base", || {
        integrate_ensemble(
            group,
            &drift,
            &cfg.x0,
            cfg.horizon,
            cfg.mc.steps,
            cfg.mc.paths,
            cfg.mc.seed,
            0,
            &region,
            Scheme::LieExp,
        )
    })?;
    let doubled = clock.time("ensemble_doubled", || {
        integrate_ensemble(
            group,
            &drift,
            &cfg.x0,
            cfg.horizon,
            cfg.mc.steps,
            2 * cfg.mc.paths,
            cfg.mc.seed,
            1 << 24,
            &region,
            Scheme::LieExp,
        )
    })?;
    // Nonnegative occupation field: a unit bump over the stopping ball.
    let radius = cfg.omega_radius(&grid);
    let f = GridField::from_fn(grid.clone(), |_, x| {
        let s = group.homogeneous_norm(x) / (radius * 1.2);
        if s < 1.0 {
            (1.0 - 1.0 / (1.0 - s * s)).exp()
        } else {
            0.0
        }
    });
    let mut pairs = Vec::new();
    for i in 0..5 {
        for j in 0..5 {
            let s = cfg.horizon * i as f64 / 10.0;
            let t = s + cfg.horizon * (j + 1) as f64 / 10.0;
            pairs.push((s, t));
        }
    }
    let rep = clock.time("krylov_ratios", || {
        krylov_check(group, &base, &doubled, &f, drift.p, drift.q, &pairs, 0.25)
    })?;
    sink.write_csv(
        "krylov_ratios.csv",
        artifacts::KRYLOV_RATIOS_HEADER,
        pairs
            .iter()
            .zip(rep.ratios_base.iter().zip(&rep.ratios_doubled))
            .map(|((s, t), (rb, rd))| format!("{s},{t},{rb},{rd}")),
    )?;
    let verdict = rep.verdict;
    Ok(vec![CheckRecord::new(
        "krylov_ratio_stable_under_doubling",
        verdict,
        &rep,
    )])
}

// ----------------------------------------------------------- embedding

fn embedding(
    cfg: &ExperimentConfig,
    group: &CarnotGroupSpec,
    sink: &mut ArtifactSink,
    clock: &mut StageClock,
) -> anyhow::Result<Vec<CheckRecord>> {
    let min_bound = cfg
        .grid
        .bounds
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let bump_radius = 0.5 * min_bound;
    let horizons = [cfg.horizon, cfg.horizon / 2.0, cfg.horizon / 4.0];
    let family = clock.time("heat_family", || -> anyhow::Result<Vec<(f64, GridField)>> {
        let mut out = Vec::new();
        for &t_j in &horizons {
            let space = carnot_lab::fields::SpatialGrid::new(
                cfg.grid.bounds.clone(),
                cfg.grid.n_x.clone(),
            )?;
            let grid = Arc::new(SpaceTimeGrid::new(t_j, cfg.grid.n_t, space, cfg.grid.fd_step)?);
            let f = GridField::from_fn(grid, |_, x| {
                let s = group.homogeneous_norm(x) / bump_radius;
                if s < 1.0 {
                    (1.0 - 1.0 / (1.0 - s * s)).exp()
                } else {
                    0.0
                }
            });
            let sol = solve_heat(group, &f, &SolverOptions::default())?;
            out.push((t_j, sol.components.into_iter().next().unwrap()));
        }
        Ok(out)
    })?;
    let exponents = EmbeddingExponents {
        k: 0,
        l: 0,
        q: cfg.drift.q,
        p: cfg.drift.p,
        q1: f64::INFINITY,
        p1: f64::INFINITY,
    };
    let rep = clock.time("embedding_slope", || {
        embedding_scaling_test(group, &family, &exponents, 0.15)
    })?;
    sink.write_csv(
        "embedding_ratios.csv",
        artifacts::EMBEDDING_RATIOS_HEADER,
        rep.abscissae
            .iter()
            .zip(&rep.values)
            .map(|(h, r)| format!("{h},{r}")),
    )?;
    let verdict = rep.verdict;
    Ok(vec![CheckRecord::new(
        "embedding_slope_le_alpha_plus_0.15",
        verdict,
        &rep,
    )])
}

