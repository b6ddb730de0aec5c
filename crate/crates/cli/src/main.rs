//! Command-line runner: parameter sweeps over the influence-functional
//! pipeline, toy spectral models, echo amplitudes, post-hoc fitting, and
//! checkpointed resumption. Curves go to CSV (fixed column set, provenance
//! hash in the header), fit reports to JSON.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use config::{EchoRun, ExperimentConfig, FitConfig, InfluenceConfig, ToyConfig, ToySpec};
use output::{parse_csv, render_csv, Row};
use tempent_core::entropy::{power_traces, prefix_renyi2_all};
use tempent_core::fit::{
    aic_compare, fit_model, format_value_error, format_win_loss, window_ensemble, ModelKind,
};
use tempent_core::influence::{contract_influence, TemporalMPS};
use tempent_core::toy::SpectrumModel;
use tempent_core::{amplitude_curve, diffusive_exponent, mutual_info_disjoint, renyi2,
    renyi2_curve, EchoConfig, IsingParams};

#[derive(Parser)]
#[command(name = "tempent", about = "Temporal-entanglement sweep runner")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Entropy / mutual-information / relative-scaling curves over a
    /// parameter grid.
    Influence(RunArgs),
    /// Analytic toy-spectrum curves.
    Toy(RunArgs),
    /// Finite-chain echo amplitudes.
    Echo(RunArgs),
    /// Post-hoc window-ensemble fits and AIC comparison on an existing CSV.
    Fit(RunArgs),
    /// Extend a checkpointed influence contraction to a larger step count.
    Resume(ResumeArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if absent).
    #[arg(long)]
    out: PathBuf,
    /// Worker threads over independent grid points; output is identical for
    /// any worker count.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Trace-drift convergence threshold; rows beyond it are flagged.
    #[arg(long, default_value_t = 1e-3)]
    drift_threshold: f64,
    /// Random seed reserved for Monte Carlo fit diagnostics.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ResumeArgs {
    /// Checkpoint written by the influence subcommand.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Target Trotter-step count; must not be below the checkpointed count.
    #[arg(long)]
    extend_to: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    drift_threshold: f64,
    /// Also emit the maximal bipartition mutual information per new step.
    #[arg(long)]
    mutual_info: bool,
    /// Optional parameter assertions; a mismatch with the checkpoint is
    /// rejected.
    #[arg(long)]
    j: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    g: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Command::Influence(a) => cmd_influence(a),
        Command::Toy(a) => cmd_toy(a),
        Command::Echo(a) => cmd_echo(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Resume(a) => cmd_resume(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load_config(path: &Path) -> Result<(ExperimentConfig, String), String> {
    let raw = std::fs::read(path).map_err(|e| format!("config {}: {e}", path.display()))?;
    let sha = hex(&Sha256::digest(&raw));
    let cfg: ExperimentConfig =
        serde_json::from_slice(&raw).map_err(|e| format!("config parse error: {e}"))?;
    Ok((cfg, sha))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn ensure_out(dir: &Path) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("output dir {}: {e}", dir.display()))
}

fn write_file(path: &Path, text: &str) -> Result<(), String> {
    std::fs::write(path, text).map_err(|e| format!("write {}: {e}", path.display()))
}

/// Run `f` over `0..n` on up to `workers` threads; results come back in
/// index order regardless of scheduling.
fn run_parallel<T: Send>(n: usize, workers: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let workers = workers.max(1).min(n.max(1));
    if workers <= 1 {
        return (0..n).map(f).collect();
    }
    let slots: Vec<Mutex<Option<T>>> = (0..n).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for w in 0..workers {
            let f = &f;
            let slots = &slots;
            s.spawn(move || {
                let mut i = w;
                while i < n {
                    *slots[i].lock().unwrap() = Some(f(i));
                    i += workers;
                }
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().unwrap())
        .collect()
}

// ---------------------------------------------------------------- influence

/// What to emit per time step; shared by `influence` and `resume` so resumed
/// rows are byte-identical to a fresh run.
struct EmitOpts {
    renyi_orders: Vec<u32>,
    delta_pairs: Vec<(u32, u32)>,
    bipartition_mutual_info: bool,
    higher_order_stride: usize,
    power_bond_cap: usize,
}

fn emit_step(
    l: &TemporalMPS,
    o: &EmitOpts,
    drift_threshold: f64,
    rows: &mut Vec<Row>,
) -> Result<(), String> {
    let p = l.params;
    let n_t = l.n_t();
    let t = n_t as f64 * p.dt;
    let unconverged = !l.converged(drift_threshold);
    let row = |quantity: &str, n: Option<u32>, m: Option<u32>, value: f64, flag: bool| Row {
        j: p.j,
        h: p.h,
        g: p.g,
        dt: p.dt,
        bond_cap: l.bond_cap,
        t,
        quantity: quantity.to_string(),
        n,
        m,
        t_l: None,
        delta_t: None,
        value,
        flag,
    };
    rows.push(row("S2", Some(2), None, renyi2(l), unconverged));
    if o.bipartition_mutual_info && n_t >= 2 {
        let s = prefix_renyi2_all(l);
        let i2max = (1..n_t)
            .map(|c| s[c - 1] + s[n_t - c - 1] - s[n_t - 1])
            .fold(f64::NEG_INFINITY, f64::max);
        rows.push(row("I2max", None, None, i2max, unconverged));
    }
    let n_need = o
        .renyi_orders
        .iter()
        .copied()
        .filter(|&n| n > 2)
        .chain(o.delta_pairs.iter().map(|&(n, _)| n))
        .max();
    if let Some(n_need) = n_need {
        if n_t % o.higher_order_stride == 0 {
            let pt = power_traces(l, n_need, o.power_bond_cap).map_err(|e| e.to_string())?;
            let lt = &pt.log_traces;
            let flag = unconverged || pt.flagged;
            for &ord in o.renyi_orders.iter().filter(|&&n| n > 2) {
                let v = (lt[ord as usize - 1] - ord as f64 * lt[0]) / (1.0 - ord as f64);
                rows.push(row("Sn", Some(ord), None, v, flag));
            }
            for &(n, m) in &o.delta_pairs {
                let v = -(lt[n as usize - 1] - (n as f64 / m as f64) * lt[m as usize - 1]);
                rows.push(row("Delta", Some(n), Some(m), v, flag));
            }
        }
    }
    Ok(())
}

fn checkpoint_name(h: f64, g: f64, cap: usize) -> String {
    let fmt = |x: f64| x.to_string().replace('-', "m").replace('.', "p");
    format!("influence_h{}_g{}_cap{cap}.ckpt", fmt(h), fmt(g))
}

fn influence_point(
    cfg: &InfluenceConfig,
    h: f64,
    g: f64,
    cap: usize,
    drift_threshold: f64,
    checkpoint: Option<&Path>,
) -> Result<(Vec<Row>, f64), String> {
    let p = IsingParams::new(cfg.j, h, g, cfg.dt);
    let opts = EmitOpts {
        renyi_orders: cfg.renyi_orders.clone(),
        delta_pairs: cfg.delta_pairs.clone(),
        bipartition_mutual_info: cfg.bipartition_mutual_info,
        higher_order_stride: cfg.higher_order_stride,
        power_bond_cap: cfg.power_bond_cap.unwrap_or(2 * cap),
    };
    let mut rows = Vec::new();
    let mut l = contract_influence(p, 1, cap, drift_threshold).map_err(|e| e.to_string())?;
    emit_step(&l, &opts, drift_threshold, &mut rows)?;
    for _ in 2..=cfg.n_t_max {
        l.extend().map_err(|e| e.to_string())?;
        emit_step(&l, &opts, drift_threshold, &mut rows)?;
    }
    let unconverged = !l.converged(drift_threshold);
    for d in &cfg.disjoint_blocks {
        for sep in 0..=d.delta_t_max {
            let s = mutual_info_disjoint(&l, d.t_l, sep);
            rows.push(Row {
                j: p.j,
                h: p.h,
                g: p.g,
                dt: p.dt,
                bond_cap: cap,
                t: cfg.n_t_max as f64 * p.dt,
                quantity: "I2disjoint".to_string(),
                n: None,
                m: None,
                t_l: Some(s.t_l),
                delta_t: Some(s.delta_t),
                value: s.value,
                flag: unconverged,
            });
        }
    }
    if let Some(path) = checkpoint {
        l.write_checkpoint(path).map_err(|e| e.to_string())?;
    }
    if let Some(horizon) = cfg.trotter_compare {
        let n_coarse = (horizon / cfg.dt).round().max(1.0) as usize;
        let coarse =
            renyi2_curve(p, n_coarse, cap, drift_threshold).map_err(|e| e.to_string())?;
        let p_fine = IsingParams::new(cfg.j, h, g, cfg.dt / 2.0);
        let fine =
            renyi2_curve(p_fine, 2 * n_coarse, cap, drift_threshold).map_err(|e| e.to_string())?;
        for k in 1..=n_coarse {
            let a = &coarse.samples[k - 1];
            let b = &fine.samples[2 * k - 1];
            rows.push(Row {
                j: p.j,
                h: p.h,
                g: p.g,
                dt: p.dt,
                bond_cap: cap,
                t: k as f64 * cfg.dt,
                quantity: "trotter_dev_S2".to_string(),
                n: Some(2),
                m: None,
                t_l: None,
                delta_t: None,
                value: (a.value - b.value).abs(),
                flag: !(a.converged && b.converged),
            });
        }
    }
    Ok((rows, l.trace_drift))
}

fn cmd_influence(a: &RunArgs) -> Result<(), String> {
    let (cfg, sha) = load_config(&a.config)?;
    let inf = cfg
        .influence
        .ok_or("influence: section missing from config")?;
    inf.validate()?;
    ensure_out(&a.out)?;
    let mut points = Vec::new();
    for &cap in &inf.bond_cap {
        for &g in &inf.g {
            for &h in &inf.h {
                points.push((h, g, cap));
            }
        }
    }
    let started = Instant::now();
    let results = run_parallel(points.len(), a.workers, |i| {
        let (h, g, cap) = points[i];
        let ckpt = inf
            .checkpoints
            .then(|| a.out.join(checkpoint_name(h, g, cap)));
        let t0 = Instant::now();
        let r = influence_point(&inf, h, g, cap, a.drift_threshold, ckpt.as_deref());
        (r, t0.elapsed().as_secs_f64())
    });
    let mut rows = Vec::new();
    for ((h, g, cap), (result, wall)) in points.iter().zip(results) {
        let (point_rows, drift) = result?;
        println!(
            "point h={h} g={g} cap={cap}: rows={} max_trace_drift={drift:.3e} wall={wall:.1}s",
            point_rows.len()
        );
        let trotter_dev = point_rows
            .iter()
            .filter(|r| r.quantity == "trotter_dev_S2")
            .map(|r| r.value)
            .fold(f64::NAN, f64::max);
        if trotter_dev.is_finite() {
            println!("  trotter comparison (dt vs dt/2): max |delta S2| = {trotter_dev:.3e}");
        }
        rows.extend(point_rows);
    }
    write_file(&a.out.join("influence.csv"), &render_csv(&sha, &rows))?;
    println!(
        "influence: {} rows over {} grid points in {:.1}s -> {}",
        rows.len(),
        points.len(),
        started.elapsed().as_secs_f64(),
        a.out.join("influence.csv").display()
    );
    Ok(())
}

// ------------------------------------------------------------------- resume

fn cmd_resume(a: &ResumeArgs) -> Result<(), String> {
    let raw = std::fs::read(&a.checkpoint)
        .map_err(|e| format!("checkpoint {}: {e}", a.checkpoint.display()))?;
    let sha = hex(&Sha256::digest(&raw));
    let mut l = TemporalMPS::read_checkpoint(&a.checkpoint)
        .map_err(|e| format!("checkpoint {}: {e}", a.checkpoint.display()))?;
    let p = l.params;
    for (flag, given, actual) in [
        ("--j", a.j, p.j),
        ("--h", a.h, p.h),
        ("--g", a.g, p.g),
        ("--dt", a.dt, p.dt),
    ] {
        if let Some(v) = given {
            if v != actual {
                return Err(format!(
                    "{flag} {v} does not match checkpointed value {actual}"
                ));
            }
        }
    }
    if a.extend_to < l.n_t() {
        return Err(format!(
            "--extend-to {} is below the checkpointed step count {}",
            a.extend_to,
            l.n_t()
        ));
    }
    ensure_out(&a.out)?;
    let opts = EmitOpts {
        renyi_orders: vec![2],
        delta_pairs: Vec::new(),
        bipartition_mutual_info: a.mutual_info,
        higher_order_stride: 1,
        power_bond_cap: 2 * l.bond_cap,
    };
    let mut rows = Vec::new();
    while l.n_t() < a.extend_to {
        l.extend().map_err(|e| e.to_string())?;
        emit_step(&l, &opts, a.drift_threshold, &mut rows)?;
    }
    write_file(&a.out.join("resume.csv"), &render_csv(&sha, &rows))?;
    if !rows.is_empty() {
        l.write_checkpoint(&a.checkpoint)
            .map_err(|e| format!("checkpoint {}: {e}", a.checkpoint.display()))?;
    }
    println!(
        "resume: extended to n_t={} ({} new rows, max_trace_drift={:.3e})",
        l.n_t(),
        rows.len(),
        l.trace_drift
    );
    Ok(())
}

// ---------------------------------------------------------------------- toy

fn build_toy_model(spec: &ToySpec) -> Result<SpectrumModel, String> {
    let m = match spec.variant.as_str() {
        "single" => SpectrumModel::single(spec.gamma1, spec.alpha1),
        "double" => SpectrumModel::double(
            spec.gamma1,
            spec.alpha1,
            spec.gamma2.unwrap(),
            spec.alpha2.unwrap(),
            spec.r.unwrap(),
        ),
        "triple" => SpectrumModel::triple(
            spec.gamma1,
            spec.alpha1,
            spec.gamma2.unwrap(),
            spec.alpha2.unwrap(),
            spec.r.unwrap(),
            spec.r_prime.unwrap(),
        ),
        other => return Err(format!("toy.models.variant: unknown variant \"{other}\"")),
    };
    m.map_err(|e| format!("toy.models: {e:?}"))
}

fn cmd_toy(a: &RunArgs) -> Result<(), String> {
    let (cfg, sha) = load_config(&a.config)?;
    let toy = cfg.toy.ok_or("toy: section missing from config")?;
    toy.validate()?;
    ensure_out(&a.out)?;
    let rows = toy_rows(&toy)?;
    write_file(&a.out.join("toy.csv"), &render_csv(&sha, &rows))?;
    println!("toy: {} rows -> {}", rows.len(), a.out.join("toy.csv").display());
    Ok(())
}

fn toy_rows(toy: &ToyConfig) -> Result<Vec<Row>, String> {
    let steps = ((toy.t_max - toy.t_min) / toy.t_step).round() as usize;
    let mut rows = Vec::new();
    for spec in &toy.models {
        let model = build_toy_model(spec)?;
        let quantity = format!("toy_delta_{}", spec.variant);
        let fb_quantity = format!("toy_fb_{}", spec.variant);
        for k in 0..=steps {
            let t = toy.t_min + k as f64 * toy.t_step;
            // the smallest time where all spectrum weights are defined
            if model.spectrum(t).is_err() {
                continue;
            }
            for &(n, m) in &toy.pairs {
                let v = model.delta_nm(t, n, m).map_err(|e| format!("toy: {e:?}"))?;
                rows.push(toy_row(&quantity, t, Some(n), Some(m), v));
            }
            for &n in &toy.forward_backward_orders {
                let v = model
                    .forward_backward_renyi(t, n as f64)
                    .map_err(|e| format!("toy: {e:?}"))?;
                rows.push(toy_row(&fb_quantity, t, Some(n), None, v));
            }
        }
    }
    Ok(rows)
}

fn toy_row(quantity: &str, t: f64, n: Option<u32>, m: Option<u32>, value: f64) -> Row {
    Row {
        j: 0.0,
        h: 0.0,
        g: 0.0,
        dt: 0.0,
        bond_cap: 0,
        t,
        quantity: quantity.to_string(),
        n,
        m,
        t_l: None,
        delta_t: None,
        value,
        flag: false,
    }
}

// --------------------------------------------------------------------- echo

fn cmd_echo(a: &RunArgs) -> Result<(), String> {
    let (cfg, sha) = load_config(&a.config)?;
    let echo = cfg.echo.ok_or("echo: section missing from config")?;
    echo.validate()?;
    ensure_out(&a.out)?;
    let results = run_parallel(echo.runs.len(), a.workers, |i| echo_run(&echo.runs[i]));
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for (run, result) in echo.runs.iter().zip(results) {
        let (run_rows, fit) = result?;
        rows.extend(run_rows);
        if let Some((beta, err)) = fit {
            let window = run.fit_window.unwrap();
            println!(
                "echo L={} h={} g={}: beta = {}",
                run.l,
                run.h,
                run.g,
                format_value_error(beta, err)
            );
            fits.push(serde_json::json!({
                "l": run.l, "h": run.h, "g": run.g, "dt": run.dt,
                "bond_cap": run.bond_cap,
                "window": [window.0, window.1],
                "beta": beta, "beta_error": err,
                "formatted": format_value_error(beta, err),
            }));
        }
    }
    write_file(&a.out.join("echo.csv"), &render_csv(&sha, &rows))?;
    let summary = serde_json::json!({ "config_sha256": sha, "fits": fits });
    write_file(
        &a.out.join("echo_summary.json"),
        &format!("{}\n", serde_json::to_string_pretty(&summary).unwrap()),
    )?;
    println!("echo: {} rows -> {}", rows.len(), a.out.join("echo.csv").display());
    Ok(())
}

#[allow(clippy::type_complexity)]
fn echo_run(run: &EchoRun) -> Result<(Vec<Row>, Option<(f64, f64)>), String> {
    let p = IsingParams::new(run.j, run.h, run.g, run.dt);
    let c = EchoConfig::new(run.l, p, run.bond_cap, run.t_max);
    let curve = amplitude_curve(&c).map_err(|e| e.to_string())?;
    let rows = curve
        .samples
        .iter()
        .map(|s| Row {
            j: p.j,
            h: p.h,
            g: p.g,
            dt: p.dt,
            bond_cap: run.bond_cap,
            t: s.t,
            quantity: "echo_log_abs2".to_string(),
            n: None,
            m: None,
            t_l: Some(run.l),
            delta_t: None,
            value: s.log_abs2,
            flag: s.flagged,
        })
        .collect();
    let fit = match run.fit_window {
        Some(window) => Some(diffusive_exponent(&curve, window).map_err(|e| e.to_string())?),
        None => None,
    };
    Ok((rows, fit))
}

// ---------------------------------------------------------------------- fit

fn parse_kind(name: &str) -> ModelKind {
    match name {
        "power_law" => ModelKind::PowerLaw,
        "exponential" => ModelKind::Exponential,
        "logarithmic" => ModelKind::Logarithmic,
        "linear" => ModelKind::Linear,
        _ => unreachable!("validated"),
    }
}

fn cmd_fit(a: &RunArgs) -> Result<(), String> {
    let (cfg, sha) = load_config(&a.config)?;
    let fit = cfg.fit.ok_or("fit: section missing from config")?;
    fit.validate()?;
    ensure_out(&a.out)?;
    let report = fit_report(&fit, &sha)?;
    let path = a.out.join("fit_report.json");
    write_file(
        &path,
        &format!("{}\n", serde_json::to_string_pretty(&report).unwrap()),
    )?;
    println!("fit: report -> {}", path.display());
    Ok(())
}

fn fit_report(fit: &FitConfig, sha: &str) -> Result<serde_json::Value, String> {
    let text = std::fs::read_to_string(&fit.input)
        .map_err(|e| format!("fit.input {}: {e}", fit.input))?;
    let rows = parse_csv(&text)?;
    let mut samples: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.quantity == fit.quantity)
        .filter(|r| fit.h.map_or(true, |h| r.h == h))
        .filter(|r| fit.g.map_or(true, |g| r.g == g))
        .map(|r| (r.t, r.value))
        .collect();
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    samples.dedup_by(|a, b| a.0 == b.0);
    if samples.is_empty() {
        return Err(format!(
            "fit.quantity: no rows match \"{}\" in {}",
            fit.quantity, fit.input
        ));
    }
    let mut lowers = Vec::new();
    let mut lo = fit.lower_min;
    while lo <= fit.lower_max + 1e-12 {
        lowers.push(lo);
        lo += fit.window_step;
    }
    let kinds: Vec<ModelKind> = fit.models.iter().map(|m| parse_kind(m)).collect();

    let mut model_reports = Vec::new();
    for &kind in &kinds {
        let ens = window_ensemble(kind, &samples, &lowers, fit.upper, fit.derivative_mode)
            .map_err(|e| format!("fit: {e}"))?;
        let names = kind.param_names(fit.derivative_mode);
        let params: serde_json::Map<String, serde_json::Value> = names
            .iter()
            .enumerate()
            .map(|(i, &nm)| {
                (
                    nm.to_string(),
                    serde_json::json!({
                        "value": ens.mean_params[i],
                        "error": ens.propagated_errors[i],
                        "trend": ens.trend[i],
                        "formatted": format_value_error(ens.mean_params[i], ens.propagated_errors[i]),
                    }),
                )
            })
            .collect();
        model_reports.push(serde_json::json!({
            "kind": kind.name(),
            "windows": ens.members.len(),
            "failed_windows": ens.failed,
            "params": params,
        }));
    }

    // per-window AIC contest over the windows where every model converges
    let mut wins = vec![0usize; kinds.len()];
    let mut contested = 0usize;
    for &lo in &lowers {
        let window: Vec<(f64, f64)> = samples
            .iter()
            .copied()
            .filter(|&(x, _)| x >= lo && x <= fit.upper)
            .collect();
        let fits: Vec<_> = kinds
            .iter()
            .filter_map(|&k| fit_model(k, &window, fit.derivative_mode).ok())
            .collect();
        if fits.len() != kinds.len() {
            continue;
        }
        contested += 1;
        let ranked = aic_compare(&fits, window.len(), false);
        let winner = ranked.iter().find(|e| e.winner).unwrap().kind;
        wins[kinds.iter().position(|&k| k == winner).unwrap()] += 1;
    }
    let best = (0..kinds.len()).max_by_key(|&i| wins[i]).unwrap();
    let aic = serde_json::json!({
        "windows": contested,
        "wins": kinds
            .iter()
            .zip(&wins)
            .map(|(k, &w)| (k.name().to_string(), serde_json::json!(w)))
            .collect::<serde_json::Map<_, _>>(),
        "summary": format_win_loss(wins[best], contested, kinds[best]),
    });

    Ok(serde_json::json!({
        "config_sha256": sha,
        "quantity": fit.quantity,
        "sample_count": samples.len(),
        "derivative_mode": fit.derivative_mode,
        "upper": fit.upper,
        "window_lowers": lowers,
        "models": model_reports,
        "aic": aic,
    }))
}
