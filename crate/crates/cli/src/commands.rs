//! Subcommand implementations: config loading, derived-parameter report,
//! ensemble runs, the pair-source demo, and parameter sweeps.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use eprtel_core::collision::{
    collision_range, position_resolution, validity_threshold, CollisionParams,
};
use eprtel_core::config::Config;
use eprtel_core::constants::{IonSpecies, ELEMENTARY_CHARGE};
use eprtel_core::phasespace::{Histogram1D, RunningMoments};
use eprtel_core::source::{design_check, EprPairState, SourceParams};
use eprtel_core::teleport::{
    f_max, run_ensemble, sweep, ErrorBudget, InputState, NoiseBudget, RunConfig, RunMode,
    RunReport,
};

use crate::output;
use crate::{CommonArgs, Format, RunArgs, SweepArgs};

/// Whether a successful command should exit 0 or 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Clean,
    Warned,
}

pub fn load_config(common: &CommonArgs) -> Result<Config> {
    let text = match &common.config {
        Some(path) => {
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?
        }
        None => "{}".to_string(),
    };
    let mut overrides = Vec::new();
    for entry in &common.set {
        let (key, value) = entry
            .split_once('=')
            .with_context(|| format!("--set expects KEY=VALUE, got `{entry}`"))?;
        overrides.push((key.to_string(), value.to_string()));
    }
    if let Some(seed) = common.seed {
        overrides.push(("seed".into(), seed.to_string()));
    }
    if let Some(events) = common.events {
        overrides.push(("events".into(), events.to_string()));
    }
    if let Some(workers) = common.workers {
        overrides.push(("workers".into(), workers.to_string()));
    }
    Ok(Config::from_json_with_overrides(&text, &overrides)?)
}

#[derive(Debug, Serialize)]
struct ParamsReport {
    species: IonSpecies,
    com_temperature_k: f64,
    squeezing: f64,
    pair_state: EprPairState,
    /// Momentum-sum spread as a velocity (m/s).
    momentum_sum_spread_velocity_mps: f64,
    epr_product_over_hbar: f64,
    epr_product_over_half_hbar: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    collision: Option<CollisionReport>,
    warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
struct CollisionReport {
    approach_speed_mps: f64,
    collision_range_m: f64,
    position_resolution_m: f64,
    validity_threshold_kgmps: f64,
    validity_threshold_speed_mps: f64,
    noise: NoiseBudget,
    budget: ErrorBudget,
    f_max: f64,
    nonclassical: bool,
}

fn build_params_report(config: &Config) -> Result<ParamsReport> {
    let source = config.source_params()?;
    let pair = source.pair_state()?;
    let collision = match config.collision_params()? {
        Some(col) => Some(build_collision_report(config, &source, &col)?),
        None => None,
    };
    let warnings = match config.collision_params()? {
        Some(col) => design_check(&source, &col),
        None => check_aperture_only(&source),
    };
    Ok(ParamsReport {
        species: source.species.clone(),
        com_temperature_k: source.com_temperature()?,
        squeezing: source.squeezing()?,
        momentum_sum_spread_velocity_mps: pair.sigma_psum / source.species.fragment_mass,
        epr_product_over_hbar: pair.epr_product_over_hbar(),
        epr_product_over_half_hbar: pair.epr_product_over_half_hbar(),
        pair_state: pair,
        collision,
        warnings,
    })
}

fn check_aperture_only(source: &SourceParams) -> Vec<String> {
    if source.com_size > source.aperture {
        vec![format!(
            "D <~ L violated: D = {:.3e} m exceeds aperture L = {:.3e} m",
            source.com_size, source.aperture
        )]
    } else {
        Vec::new()
    }
}

fn build_collision_report(
    config: &Config,
    source: &SourceParams,
    col: &CollisionParams,
) -> Result<CollisionReport> {
    let threshold = validity_threshold(&col.species, source.com_size)?;
    let resolution = position_resolution(
        &col.species,
        source.com_size,
        source.vib_spread,
        col.approach_speed,
    )?;
    let noise = config.noise_spec().resolve(source, col)?;
    let pair = source.pair_state()?;
    let budget = eprtel_core::teleport::error_budget(pair.sigma_xdiff, pair.sigma_psum, &noise);
    Ok(CollisionReport {
        approach_speed_mps: col.approach_speed,
        collision_range_m: collision_range(&col.species, col.approach_speed)?,
        position_resolution_m: resolution,
        validity_threshold_kgmps: threshold,
        validity_threshold_speed_mps: threshold / col.species.fragment_mass,
        noise,
        f_max: f_max(budget.product_over_hbar),
        nonclassical: budget.product_over_hbar < 1.0,
        budget,
    })
}

fn render_params_text(r: &ParamsReport) -> String {
    let mut lines = Vec::new();
    let charge_e = (r.species.charge / ELEMENTARY_CHARGE).round() as i64;
    lines.push(format!(
        "species                    {} (m = {:.4e} kg, M = {:.4e} kg, q = {charge_e:+}e)",
        r.species.name, r.species.fragment_mass, r.species.molecule_mass
    ));
    lines.push(format!(
        "com_temperature            {:.4e} K ({:.3} uK)",
        r.com_temperature_k,
        r.com_temperature_k * 1e6
    ));
    lines.push(format!("squeezing s                {:.4}", r.squeezing));
    lines.push(format!(
        "pair spreads               dd = {:.4e} m, D = {:.4e} m",
        r.pair_state.sigma_xdiff, r.pair_state.sigma_xsum
    ));
    lines.push(format!(
        "momentum_sum_spread        {:.4e} kg·m/s (dPx/m = {:.3} mm/s)",
        r.pair_state.sigma_psum,
        r.momentum_sum_spread_velocity_mps * 1e3
    ));
    lines.push(format!(
        "epr_product                {:.4e}·hbar = {:.4e}·(hbar/2)",
        r.epr_product_over_hbar, r.epr_product_over_half_hbar
    ));
    if let Some(c) = &r.collision {
        lines.push(format!(
            "collision_range            {:.4e} m ({:.1} nm) at v_y = {:.1} m/s",
            c.collision_range_m,
            c.collision_range_m * 1e9,
            c.approach_speed_mps
        ));
        lines.push(format!(
            "position_resolution        {:.4e} m ({:.1} nm)",
            c.position_resolution_m,
            c.position_resolution_m * 1e9
        ));
        lines.push(format!(
            "validity_threshold         {:.4e} kg·m/s (v_y >= {:.1} m/s)",
            c.validity_threshold_kgmps, c.validity_threshold_speed_mps
        ));
        lines.push(format!(
            "noise                      dx_meas = {:.4e} m, dp_meas = {:.4e} kg·m/s, dx_shift = {:.4e} m, dp_shift = {:.4e} kg·m/s",
            c.noise.dx_meas, c.noise.dp_meas, c.noise.dx_shift, c.noise.dp_shift
        ));
        lines.push(format!(
            "error_budget               dx_t = {:.4e} m, dp_t = {:.4e} kg·m/s",
            c.budget.dx_t, c.budget.dp_t
        ));
        lines.push(format!(
            "product_over_hbar          {:.4}",
            c.budget.product_over_hbar
        ));
        lines.push(format!("f_max                      {:.4}", c.f_max));
        lines.push(format!("nonclassical               {}", c.nonclassical));
    }
    for w in &r.warnings {
        lines.push(format!("warning: {w}"));
    }
    lines.join("\n")
}

pub fn cmd_params(common: &CommonArgs) -> Result<Status> {
    let config = load_config(common)?;
    let report = build_params_report(&config)?;
    match common.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
        Format::Csv => println!("{}", render_params_text(&report)),
    }
    Ok(if report.warnings.is_empty() {
        Status::Clean
    } else {
        Status::Warned
    })
}

fn prepare_run_config(args: &RunArgs, forced_mode: Option<RunMode>) -> Result<RunConfig> {
    let mut config = load_config(&args.common)?;
    if let Some(mode) = forced_mode {
        config.mode = Some(mode);
    }
    Ok(config.run_config()?)
}

fn write_run_files(out: &Path, report: &RunReport, format: Format) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    output::write_json(&out.join("summary.json"), report)?;
    match format {
        Format::Csv => {
            if let (Some(hx), Some(hp)) = (&report.hist_x, &report.hist_p) {
                output::write_histogram_csv(&out.join("hist_x.csv"), hx, "m")?;
                output::write_histogram_csv(&out.join("hist_p.csv"), hp, "kgmps")?;
            }
            if let Some(dx) = &report.density_x {
                output::write_density_csv(&out.join("density_x.csv"), dx, "x_m")?;
            }
            if let Some(dp) = &report.density_p {
                output::write_density_csv(&out.join("density_p.csv"), dp, "p_kgmps")?;
            }
        }
        Format::Json => {
            if let (Some(hx), Some(hp)) = (&report.hist_x, &report.hist_p) {
                output::write_json(&out.join("hist_x.json"), hx)?;
                output::write_json(&out.join("hist_p.json"), hp)?;
            }
            if let Some(dx) = &report.density_x {
                output::write_json(&out.join("density_x.json"), dx)?;
            }
            if let Some(dp) = &report.density_p {
                output::write_json(&out.join("density_p.json"), dp)?;
            }
        }
    }
    Ok(())
}

fn finish_run(args: &RunArgs, report: &RunReport) -> Result<Status> {
    write_run_files(&args.out, report, args.common.format)?;
    let budget = &report.budget;
    println!(
        "events = {}, workers = {}, seed = {}",
        report.config.n_events, report.workers, report.seed
    );
    println!(
        "budget: dx_t = {:.4e} m, dp_t = {:.4e} kg·m/s, product/hbar = {:.4}",
        budget.dx_t, budget.dp_t, budget.product_over_hbar
    );
    match report.fidelity_estimate {
        Some(f) => println!("f_max = {:.4}, fidelity_estimate = {f:.4}", report.f_max),
        None => println!("f_max = {:.4}", report.f_max),
    }
    if let Some(fr) = &report.fringes {
        println!(
            "fringe attenuation = {:.4} (predicted {:.4})",
            fr.attenuation, fr.predicted_attenuation
        );
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    println!("wrote {}", args.out.display());
    Ok(if report.warnings.is_empty() {
        Status::Clean
    } else {
        Status::Warned
    })
}

pub fn cmd_teleport(args: &RunArgs) -> Result<Status> {
    let run = prepare_run_config(args, Some(RunMode::Quantum))?;
    let report = run_ensemble(&run)?;
    finish_run(args, &report)
}

pub fn cmd_classical(args: &RunArgs) -> Result<Status> {
    let run = prepare_run_config(args, Some(RunMode::Classical))?;
    let report = run_ensemble(&run)?;
    finish_run(args, &report)
}

pub fn cmd_cat(args: &RunArgs) -> Result<Status> {
    let run = prepare_run_config(args, Some(RunMode::Quantum))?;
    if !matches!(run.input, InputState::Cat(_)) {
        bail!("the cat subcommand needs input.type = \"cat\" in the config");
    }
    let report = run_ensemble(&run)?;
    finish_run(args, &report)
}

/// Collective-coordinate statistics of one sampled series.
#[derive(Debug, Serialize)]
struct SeriesMoments {
    mean: f64,
    std: f64,
}

impl From<&RunningMoments> for SeriesMoments {
    fn from(m: &RunningMoments) -> Self {
        SeriesMoments {
            mean: m.mean(),
            std: m.std(),
        }
    }
}

#[derive(Debug, Serialize)]
struct EprDemoSummary {
    config: Config,
    seed: u64,
    n_events: u64,
    pair_state: EprPairState,
    epr_product_over_hbar: f64,
    epr_product_over_half_hbar: f64,
    x_diff: SeriesMoments,
    p_sum: SeriesMoments,
    x_single: SeriesMoments,
    p_single: SeriesMoments,
    warnings: Vec<String>,
}

/// Sample the pair source alone and contrast the collective-coordinate
/// distributions with their single-particle counterparts.
pub fn cmd_epr_demo(args: &RunArgs) -> Result<Status> {
    let config = load_config(&args.common)?;
    let source = config.source_params()?;
    let pair = source.pair_state()?;
    let n = config
        .events
        .context("epr-demo needs `events` in the config (or --events)")?;
    let seed = config
        .seed
        .context("epr-demo needs `seed` in the config (or --seed)")?;

    let sigma_x0 = 0.5
        * (pair.sigma_xsum * pair.sigma_xsum + pair.sigma_xdiff * pair.sigma_xdiff).sqrt();
    let sigma_p0 = 0.5
        * (pair.sigma_psum * pair.sigma_psum + pair.sigma_pdiff * pair.sigma_pdiff).sqrt();
    let k = config.hist_range_sigma;
    let mut hist_xdiff = Histogram1D::new(-k * sigma_x0, k * sigma_x0, config.bins)?;
    let mut hist_x0 = hist_xdiff.clone();
    let mut hist_psum = Histogram1D::new(-k * sigma_p0, k * sigma_p0, config.bins)?;
    let mut hist_p0 = hist_psum.clone();
    let mut m_xdiff = RunningMoments::default();
    let mut m_psum = RunningMoments::default();
    let mut m_x0 = RunningMoments::default();
    let mut m_p0 = RunningMoments::default();

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for _ in 0..n {
        let (a, b) = pair.sample(&mut rng);
        hist_xdiff.add(a.x - b.x);
        hist_psum.add(a.p + b.p);
        hist_x0.add(a.x);
        hist_p0.add(a.p);
        m_xdiff.add(a.x - b.x);
        m_psum.add(a.p + b.p);
        m_x0.add(a.x);
        m_p0.add(a.p);
    }

    let warnings = match config.collision_params()? {
        Some(col) => design_check(&source, &col),
        None => Vec::new(),
    };
    let summary = EprDemoSummary {
        config: config.clone(),
        seed,
        n_events: n,
        pair_state: pair,
        epr_product_over_hbar: pair.epr_product_over_hbar(),
        epr_product_over_half_hbar: pair.epr_product_over_half_hbar(),
        x_diff: (&m_xdiff).into(),
        p_sum: (&m_psum).into(),
        x_single: (&m_x0).into(),
        p_single: (&m_p0).into(),
        warnings: warnings.clone(),
    };

    fs::create_dir_all(&args.out)?;
    output::write_json(&args.out.join("summary.json"), &summary)?;
    match args.common.format {
        Format::Csv => {
            output::write_histogram_pair_csv(
                &args.out.join("hist_x.csv"),
                "m",
                [("x_diff", &hist_xdiff), ("x_single", &hist_x0)],
            )?;
            output::write_histogram_pair_csv(
                &args.out.join("hist_p.csv"),
                "kgmps",
                [("p_sum", &hist_psum), ("p_single", &hist_p0)],
            )?;
        }
        Format::Json => {
            output::write_json(&args.out.join("hist_x.json"), &[&hist_xdiff, &hist_x0])?;
            output::write_json(&args.out.join("hist_p.json"), &[&hist_psum, &hist_p0])?;
        }
    }
    println!(
        "std(x0-x1) = {:.4e} m, std(x0) = {:.4e} m, std(p0+p1) = {:.4e} kg·m/s, std(p0) = {:.4e} kg·m/s",
        m_xdiff.std(),
        m_x0.std(),
        m_psum.std(),
        m_p0.std()
    );
    println!(
        "epr product = {:.4e}·hbar (hbar/s = {:.4e}·hbar)",
        pair.epr_product_over_hbar(),
        1.0 / source.squeezing().unwrap_or(f64::NAN)
    );
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    println!("wrote {}", args.out.display());
    Ok(if warnings.is_empty() {
        Status::Clean
    } else {
        Status::Warned
    })
}

#[derive(Debug, Serialize)]
struct SweepSummary {
    config: RunConfig,
    parameter: String,
    monte_carlo: bool,
    rows: Vec<eprtel_core::teleport::SweepRow>,
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<Status> {
    let run = prepare_run_config(&args.run, None)?;
    if args.values.is_empty() {
        bail!("--values needs at least one value");
    }
    let rows = sweep(&run, &args.param, &args.values, args.mc)?;
    fs::create_dir_all(&args.run.out)?;
    let summary = SweepSummary {
        config: run,
        parameter: args.param.clone(),
        monte_carlo: args.mc,
        rows,
    };
    match args.run.common.format {
        Format::Csv => {
            output::write_sweep_csv(&args.run.out.join("sweep.csv"), &args.param, &summary.rows)?
        }
        Format::Json => output::write_json(&args.run.out.join("sweep.json"), &summary.rows)?,
    }
    output::write_json(&args.run.out.join("summary.json"), &summary)?;
    let flagged = summary.rows.iter().filter(|r| r.note.is_some()).count();
    println!(
        "swept {} over {} values ({flagged} flagged); wrote {}",
        args.param,
        summary.rows.len(),
        args.run.out.display()
    );
    Ok(Status::Clean)
}
