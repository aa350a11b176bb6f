//! Subcommand implementations. Each writes its artifacts into the output
//! directory and returns the first solver error it meets.

use crate::artifacts::{unflatten, write_json, Csv, Table};
use crate::config::{Mode, RunConfig, VelocityChoice, KEYS};
use crate::CliError;
use landau_core::diagnostics::{
    fit_decay_rate, fit_oscillation, fit_stat_osc, FitMethod, OscillationFit, RateFit,
    StatOscWindow,
};
use landau_core::dispersion::{eval_K, eval_penrose_continued, kernel_quadrature, landau_roots};
use landau_core::linresponse::{
    decompose_rep_i, decompose_rep_ii, forcing_from_samples, solve_linear, summarize_field,
    ForcingMethod, RadialEvaluator, SpeedMap, VelocityQuadrature,
};
use landau_core::nonlinear::{run_direct, run_picard, FieldHistory, RadialGrid};
use landau_core::volterra::{apply_resolvent, solve_volterra_march, ModeSeries};
use landau_core::Complex64;
use serde_json::{json, Map, Value};
use std::path::Path;
use std::time::Instant;

/// Probe point for the cross-check of the τ-quadrature against K.
const QUAD_PROBE: Complex64 = Complex64::new(0.5, -0.1);

fn config_echo(cfg: &RunConfig) -> Value {
    let map: Map<String, Value> = KEYS
        .iter()
        .map(|k| (k.to_string(), json!(cfg.get(k))))
        .collect();
    Value::Object(map)
}

fn rate_json(fit: Result<RateFit, landau_core::Error>) -> Value {
    match fit {
        Ok(f) => json!({
            "slope": f.slope,
            "slope_stderr": f.slope_stderr,
            "intercept": f.intercept,
            "r_squared": f.r_squared,
            "exp_r_squared": f.exp_r_squared,
            "n_points": f.n_points,
            "window": [f.window.0, f.window.1],
            "method": format!("{:?}", f.method),
        }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn freq_json(fit: Result<OscillationFit, landau_core::Error>) -> Value {
    match fit {
        Ok(f) => json!({
            "frequency": f.frequency,
            "stderr": f.stderr,
            "mean_spacing": f.mean_spacing,
            "n_crossings": f.crossings.len(),
        }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn out_path(dir: &Path, name: &str) -> std::path::PathBuf {
    dir.join(name)
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))
}

/// (k, Landau roots, |1+K| residuals, quadrature-vs-closed-form mismatch).
pub fn dispersion(cfg: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let eq = cfg.equilibrium();
    let kgrid = cfg.kgrid()?;
    let hash = cfg.hash();
    let mut csv = Csv::new(
        &hash,
        &[
            "k",
            "re_lambda_plus",
            "im_lambda_plus",
            "re_lambda_minus",
            "im_lambda_minus",
            "residual_plus",
            "residual_minus",
            "quad_mismatch",
        ],
    );
    let mut worst: f64 = 0.0;
    for &k in &kgrid.k {
        let [a, b] = landau_roots(&eq, k)?;
        let ra = eval_penrose_continued(&eq, k, a)?.norm();
        let rb = eval_penrose_continued(&eq, k, b)?.norm();
        let mismatch = (kernel_quadrature(&eq, k, QUAD_PROBE, cfg.quad_tol)?
            - eval_K(&eq, k, QUAD_PROBE)?)
        .norm();
        worst = worst.max(ra).max(rb);
        csv.row(&[k, a.re, a.im, b.re, b.im, ra, rb, mismatch]);
    }
    csv.write(&out_path(dir, "dispersion.csv"))?;
    log::info!(
        "dispersion: {} wavenumbers, worst root residual {worst:.3e}",
        kgrid.len()
    );
    Ok(())
}

pub fn linear(cfg: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let eq = cfg.equilibrium();
    let kgrid = cfg.kgrid()?;
    let hash = cfg.hash();
    let n_steps = cfg.n_steps();
    let clock = Instant::now();
    let run = solve_linear(
        &eq,
        &cfg.datum(),
        &kgrid,
        cfg.dt,
        n_steps,
        ForcingMethod::Separable,
    )?;

    let mut modes = Csv::new(&hash, &["k", "t", "re_rho_hat", "im_rho_hat"]);
    for (j, m) in run.rho_hat.iter().enumerate() {
        for n in (0..=n_steps).step_by(cfg.output_stride) {
            let v = m.values[n];
            modes.row(&[kgrid.k[j], n as f64 * cfg.dt, v.re, v.im]);
        }
    }
    modes.write(&out_path(dir, "linear_modes.csv"))?;

    let summary = summarize_field(&run, cfg.r_max, cfg.n_r);
    let probe = RadialEvaluator::new(&kgrid, vec![cfg.probe_radius]);
    let e_probe: Vec<f64> = (0..=n_steps)
        .map(|n| probe.field(&run.snapshot(n))[0])
        .collect();
    let mut field = Csv::new(&hash, &["t", "sup_e", "l1_rho", "e_probe"]);
    for n in (0..=n_steps).step_by(cfg.output_stride) {
        field.row(&[
            summary.times[n],
            summary.sup_field[n],
            summary.l1_density[n],
            e_probe[n],
        ]);
    }
    field.write(&out_path(dir, "linear_field.csv"))?;

    let window = cfg.fit_window();
    let meta = json!({
        "subcommand": "linear",
        "runtime_s": clock.elapsed().as_secs_f64(),
        "sup_field_decay": rate_json(fit_decay_rate(&summary.times, &summary.sup_field, window, FitMethod::EnvelopePeaks)),
        "probe_frequency": freq_json(fit_oscillation(&summary.times, &e_probe, window)),
        "targets": { "sup_field_slope": -2.0, "frequency": 1.0 },
        "config": config_echo(cfg),
    });
    write_json(&out_path(dir, "linear_meta.json"), &hash, meta)
}

/// Representation I and II of each mode next to the resolvent solution.
pub fn decompose(cfg: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let eq = cfg.equilibrium();
    let kgrid = cfg.kgrid()?;
    let hash = cfg.hash();
    let f0 = cfg.datum();
    let n_steps = cfg.n_steps();
    let quad = match cfg.velocity {
        VelocityChoice::Bump => VelocityQuadrature::new(
            64,
            32,
            SpeedMap::Truncated {
                v_max: cfg.velocity_radius,
            },
        )?,
        _ => VelocityQuadrature::default_rule(),
    };
    let mut csv = Csv::new(
        &hash,
        &[
            "k",
            "t",
            "rho_hat",
            "r_i",
            "re_t_i",
            "im_t_i",
            "re_r_ii",
            "re_t_ii",
            "im_t_ii",
            "has_rep_ii",
        ],
    );
    let mut per_mode = Vec::new();
    for &k in &kgrid.k {
        let samples = f0.samples(&quad, k);
        let h = forcing_from_samples(&quad, &samples, k, cfg.dt, n_steps)?;
        let sol: ModeSeries = if eq.is_poisson() {
            apply_resolvent(k, &h)?
        } else {
            solve_volterra_march(&eq, k, &h)?
        };
        let rep_i = decompose_rep_i(&h);
        let rep_ii = decompose_rep_ii(&quad, &samples, k, cfg.dt, n_steps).ok();
        let scale = sol.sup_norm().max(1e-300);
        let err_i = rep_i.reconstruct().max_diff(&sol) / scale;
        let err_ii = rep_ii
            .as_ref()
            .map(|p| p.reconstruct().max_diff(&sol) / scale);
        for n in (0..=n_steps).step_by(cfg.output_stride) {
            let ri = rep_i.r_part.values[n].re;
            let ti = rep_i.t_part.values[n];
            let (rii, tii, has) = match &rep_ii {
                Some(p) => (p.r_part.values[n].re, p.t_part.values[n], 1.0),
                None => (0.0, Complex64::new(0.0, 0.0), 0.0),
            };
            csv.row(&[
                k,
                n as f64 * cfg.dt,
                sol.values[n].re,
                ri,
                ti.re,
                ti.im,
                rii,
                tii.re,
                tii.im,
                has,
            ]);
        }
        per_mode.push(json!({ "k": k, "rep_i_rel_error": err_i, "rep_ii_rel_error": err_ii }));
    }
    csv.write(&out_path(dir, "representations.csv"))?;
    let meta = json!({
        "subcommand": "decompose",
        "note": "representation II is only formed where the resonance guard sup|v·ξ| ≤ 1/2 holds",
        "modes": per_mode,
        "config": config_echo(cfg),
    });
    write_json(&out_path(dir, "decompose_meta.json"), &hash, meta)
}

fn write_history(cfg: &RunConfig, dir: &Path, h: &FieldHistory) -> Result<(), CliError> {
    let hash = cfg.hash();
    let mut rho = Csv::new(&hash, &["t", "r", "rho"]);
    let mut e = Csv::new(&hash, &["t", "r", "e"]);
    for n in (0..h.n_times()).step_by(cfg.output_stride) {
        let t = n as f64 * h.dt;
        for i in 0..h.grid.n {
            let r = h.grid.r(i);
            rho.row(&[t, r, h.rho[n][i]]);
            e.row(&[t, r, h.e[n][i]]);
        }
    }
    rho.write(&out_path(dir, "rho_rt.csv"))?;
    e.write(&out_path(dir, "field_rt.csv"))
}

pub fn nonlinear(cfg: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let nl = cfg.nonlinear();
    let hash = cfg.hash();
    let clock = Instant::now();
    let (history, iterates, converged, conservation) = match cfg.mode {
        Mode::Direct => {
            let rep = run_direct(&nl)?;
            let cons = json!({
                "n_markers": rep.n_markers,
                "mass_initial": rep.mass_initial,
                "mass_drift": rep.mass_drift,
                "leaked": rep.leaked,
                "injected": rep.injected,
                "boundary_ratio": rep.boundary_ratio,
                "lattice_mass_error": rep.lattice_mass_error,
                "poisson_residual": rep.history.poisson_residual(),
            });
            (rep.history, Vec::new(), true, cons)
        }
        Mode::Picard => {
            let rep = run_picard(&nl)?;
            let its: Vec<Value> = rep
                .iterates
                .iter()
                .map(|it| json!({ "iteration": it.iteration, "distance": it.distance, "ratio": it.ratio, "relaxed": it.relaxed }))
                .collect();
            let cons = json!({
                "boundary_ratio": rep.history.boundary_ratio(),
                "poisson_residual": rep.history.poisson_residual(),
                "sup_field": rep.history.sup_field(),
            });
            (rep.history, its, rep.converged, cons)
        }
    };
    let runtime = clock.elapsed().as_secs_f64();
    write_history(cfg, dir, &history)?;
    let mode = cfg.get("mode");
    write_json(
        &out_path(dir, "picard_log.json"),
        &hash,
        json!({ "mode": mode, "converged": converged, "tol_picard": cfg.tol_picard, "iterates": iterates }),
    )?;
    write_json(
        &out_path(dir, "run_meta.json"),
        &hash,
        json!({
            "subcommand": "nonlinear",
            "mode": mode,
            "runtime_s": runtime,
            "conservation": conservation,
            "config": config_echo(cfg),
        }),
    )?;
    if !converged {
        return Err(CliError::NonConvergence(format!(
            "Picard iteration did not reach {:e} in {} iterates",
            cfg.tol_picard, cfg.picard_max_iter
        )));
    }
    Ok(())
}

/// Decay and frequency fits of whatever run lives in `input`, plus the
/// static/oscillatory window decomposition when a density history exists.
pub fn rates(cfg: &RunConfig, input: &Path, dir: &Path) -> Result<(), CliError> {
    let hash = cfg.hash();
    let window = cfg.fit_window();
    let linear_file = input.join("linear_field.csv");
    let field_file = input.join("field_rt.csv");
    let rho_file = input.join("rho_rt.csv");
    let mut body = Map::new();
    let mut sources = Vec::new();

    let (times, sup_e, probe) = if linear_file.exists() {
        let tab = Table::read(&linear_file)?;
        sources.push(json!({ "file": "linear_field.csv", "config_sha256": tab.config_hash }));
        (
            tab.column("t")?,
            tab.column("sup_e")?,
            tab.column("e_probe")?,
        )
    } else if field_file.exists() {
        let tab = Table::read(&field_file)?;
        sources.push(json!({ "file": "field_rt.csv", "config_sha256": tab.config_hash }));
        let (times, radii, rows) =
            unflatten(&tab.column("t")?, &tab.column("r")?, &tab.column("e")?)?;
        let j = radii
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 - cfg.probe_radius)
                    .abs()
                    .total_cmp(&(b.1 - cfg.probe_radius).abs())
            })
            .map_or(0, |p| p.0);
        let sup: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().map(|x| x.abs()).fold(0.0, f64::max))
            .collect();
        let probe: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        (times, sup, probe)
    } else {
        return Err(CliError::Io(format!(
            "{} holds neither linear_field.csv nor field_rt.csv",
            input.display()
        )));
    };
    body.insert(
        "sup_field_decay".into(),
        rate_json(fit_decay_rate(
            &times,
            &sup_e,
            window,
            FitMethod::EnvelopePeaks,
        )),
    );
    body.insert(
        "probe_frequency".into(),
        freq_json(fit_oscillation(&times, &probe, window)),
    );

    if rho_file.exists() {
        let tab = Table::read(&rho_file)?;
        sources.push(json!({ "file": "rho_rt.csv", "config_sha256": tab.config_hash }));
        let (t, radii, rows) =
            unflatten(&tab.column("t")?, &tab.column("r")?, &tab.column("rho")?)?;
        let r_max = *radii.last().unwrap_or(&0.0);
        let grid = RadialGrid::new(radii.len(), r_max)?;
        match fit_stat_osc(&t, &rows, cfg.stat_osc_window) {
            Ok(windows) => stat_osc_summary(&mut body, &windows, &grid, &hash, window, dir)?,
            Err(e) => {
                body.insert("stat_field_decay".into(), json!({ "error": e.to_string() }));
                body.insert("osc_field_decay".into(), json!({ "error": e.to_string() }));
            }
        }
    }
    body.insert("targets".into(), json!({ "sup_field_slope": -2.0, "osc_field_slope": -2.0, "stat_field_slope": -3.0, "frequency": 1.0 }));
    body.insert("sources".into(), Value::Array(sources));
    body.insert("subcommand".into(), json!("rates"));
    write_json(&out_path(dir, "rates.json"), &hash, Value::Object(body))
}

fn stat_osc_summary(
    body: &mut Map<String, Value>,
    windows: &[StatOscWindow],
    grid: &RadialGrid,
    hash: &str,
    window: (f64, f64),
    dir: &Path,
) -> Result<(), CliError> {
    let mut csv = Csv::new(hash, &["t", "e_stat_sup", "e_osc_sup", "max_residual"]);
    let mut mids = Vec::new();
    let (mut stat, mut osc) = (Vec::new(), Vec::new());
    for w in windows {
        let (s, o) = (w.stat_field_sup(&grid), w.osc_field_sup(&grid));
        csv.row(&[w.t_mid(), s, o, w.max_residual()]);
        mids.push(w.t_mid());
        stat.push(s);
        osc.push(o);
    }
    csv.write(&out_path(dir, "decomposition.csv"))?;
    body.insert(
        "stat_field_decay".into(),
        rate_json(fit_decay_rate(&mids, &stat, window, FitMethod::AllSamples)),
    );
    body.insert(
        "osc_field_decay".into(),
        rate_json(fit_decay_rate(&mids, &osc, window, FitMethod::AllSamples)),
    );
    body.insert(
            "decomposition_note".into(),
            json!("static/oscillatory split by windowed least squares on c0 + Re(c1 e^{-it}); a heuristic proxy for the representation split"),
        );
    Ok(())
}
