//! End-to-end ensemble behavior: moment identities, fidelity estimates,
//! quantum/classical separation, the perfect-teleportation limit, and
//! determinism of serialized reports.

use eprtel_core::collision::CollisionParams;
use eprtel_core::constants::IonSpecies;
use eprtel_core::phasespace::{tv_distance, GaussianState};
use eprtel_core::source::SourceParams;
use eprtel_core::teleport::{
    run_ensemble, InputState, NoiseEntry, NoiseSpec, RunConfig, RunMode,
};

fn li_paper_config() -> RunConfig {
    let species = IonSpecies::preset("Li+").unwrap();
    RunConfig {
        source: SourceParams {
            species: species.clone(),
            com_size: 300e-9,
            vib_spread: 0.1e-9,
            frag_spread: 1e-9,
            vel_diff_spread: 0.0,
            aperture: 1e-6,
            beam_speed: 1000.0,
            lens_floor: 0.0,
        },
        collision: CollisionParams {
            species: species.clone(),
            approach_speed: 300.0,
            packet_extent: 10e-9,
            instrument_momentum: species.fragment_mass * 1e-3,
        },
        noise: NoiseSpec::default(),
        input: InputState::Gaussian(GaussianState::mus(4.049e-8).unwrap()),
        n_events: 50_000,
        seed: 42,
        mode: RunMode::Quantum,
        workers: 1,
        bins: 60,
        hist_range_sigma: 4.0,
        grid_points: 2001,
    }
}

#[test]
fn quantum_and_classical_fidelities_separate() {
    let quantum = run_ensemble(&li_paper_config()).unwrap();
    let mut classical_cfg = li_paper_config();
    classical_cfg.mode = RunMode::Classical;
    let classical = run_ensemble(&classical_cfg).unwrap();

    let fq = quantum.fidelity_estimate.unwrap();
    let fc = classical.fidelity_estimate.unwrap();
    assert!((0.88..0.96).contains(&fq), "quantum fidelity {fq}");
    assert!((fc - 0.5).abs() < 0.02, "classical fidelity {fc}");
    assert!(fq - fc > 0.3, "separation {}", fq - fc);
    assert!(quantum.nonclassicality.nonclassical);
    assert!(!classical.nonclassicality.nonclassical);
}

#[test]
fn paper_run_has_no_design_warnings() {
    let report = run_ensemble(&li_paper_config()).unwrap();
    assert!(
        report.warnings.is_empty(),
        "unexpected warnings: {:?}",
        report.warnings
    );
}

#[test]
fn histograms_account_for_all_events() {
    let report = run_ensemble(&li_paper_config()).unwrap();
    let hx = report.hist_x.unwrap();
    assert_eq!(hx.total, 50_000);
    assert!(hx.in_range() <= hx.total);
    // ±4 sigma should keep out-of-range counts well below 1%
    assert!((hx.underflow + hx.overflow) as f64 / (hx.total as f64) < 0.01);
}

#[test]
fn perfect_teleportation_limit_reproduces_input() {
    // dd -> 0, D -> infinity with all instrument noise off: the output
    // histogram converges on the input density
    let mut cfg = li_paper_config();
    cfg.source.vib_spread = 1e-13;
    cfg.source.frag_spread = 1e-13;
    cfg.source.com_size = 1e-3;
    cfg.source.aperture = 1e-2;
    cfg.noise = NoiseSpec {
        x_meas: NoiseEntry::Fixed(0.0),
        p_meas: NoiseEntry::Fixed(0.0),
        x_shift: 0.0,
        p_shift: 0.0,
    };
    let report = run_ensemble(&cfg).unwrap();
    assert!(report.budget.product_over_hbar < 1e-6);

    let hist = report.hist_x.unwrap();
    let input_density = &report.density_x.unwrap().input;
    let tv = tv_distance(&hist, input_density).unwrap();
    assert!(tv < 0.02, "tv = {tv}");
    let f = report.fidelity_estimate.unwrap();
    assert!(f > 0.99, "fidelity = {f}");
}

#[test]
fn displaced_input_mean_is_teleported() {
    let mut cfg = li_paper_config();
    let mus = GaussianState::mus(4.049e-8).unwrap();
    cfg.input = InputState::Gaussian(
        GaussianState::new(2.0e-7, 5.0e-28, mus.sigma_x, mus.sigma_p, 0.0).unwrap(),
    );
    let report = run_ensemble(&cfg).unwrap();
    let out = report.output_moments.unwrap();
    let n = cfg.n_events as f64;
    let tol_x = 4.0 * out.std_x / n.sqrt();
    let tol_p = 4.0 * out.std_p / n.sqrt();
    assert!((out.mean_x - 2.0e-7).abs() < tol_x);
    assert!((out.mean_p - 5.0e-28).abs() < tol_p);
    // displaced minimum-uncertainty inputs still get a fidelity estimate
    assert!(report.fidelity_estimate.is_some());
}

#[test]
fn serialized_reports_are_bit_identical_across_runs() {
    let a = run_ensemble(&li_paper_config()).unwrap();
    let b = run_ensemble(&li_paper_config()).unwrap();
    let ja = serde_json::to_string(&a).unwrap();
    let jb = serde_json::to_string(&b).unwrap();
    assert_eq!(ja, jb);
}

#[test]
fn report_config_roundtrip_reproduces_run() {
    let report = run_ensemble(&li_paper_config()).unwrap();
    let summary = serde_json::to_value(&report).unwrap();
    let cfg: RunConfig = serde_json::from_value(summary["config"].clone()).unwrap();
    let again = run_ensemble(&cfg).unwrap();
    assert_eq!(report, again);
}

#[test]
fn different_seeds_decorrelate() {
    let a = run_ensemble(&li_paper_config()).unwrap();
    let mut cfg = li_paper_config();
    cfg.seed = 43;
    let b = run_ensemble(&cfg).unwrap();
    assert_ne!(
        a.output_moments.unwrap().mean_x,
        b.output_moments.unwrap().mean_x
    );
}

#[test]
fn multiworker_run_keeps_moment_contracts() {
    let mut cfg = li_paper_config();
    cfg.workers = 8;
    let report = run_ensemble(&cfg).unwrap();
    assert_eq!(report.workers, 8);
    let out = report.output_moments.unwrap();
    let input = GaussianState::mus(4.049e-8).unwrap();
    let expect = input.sigma_x * input.sigma_x + report.budget.dx_t * report.budget.dx_t;
    let ratio = out.std_x * out.std_x / expect;
    assert!((0.97..1.03).contains(&ratio), "variance ratio {ratio}");
    let f = report.fidelity_estimate.unwrap();
    assert!((f - report.f_max).abs() < 0.04);
}
