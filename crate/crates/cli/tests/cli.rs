use std::f64::consts::PI;
use std::path::PathBuf;

use nrqae::model::{Mode, NoiseSpec};
use nrqae_cli::commands::*;
use nrqae_cli::config::{
    ExperimentConfig, IqaeSpec, OutputSpec, Overrides, ProblemSpec, StateSpec, CONFIG_VERSION,
};
use nrqae_cli::error::CliError;
use nrqae_cli::main_with;
use proptest::prelude::*;

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn shipped(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&configs_dir().join(name)).unwrap()
}

fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = main_with(std::iter::once("nrqae").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn tmp_path(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nrqae-cli-tests-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn every_shipped_config_loads_and_round_trips() {
    let mut seen = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ExperimentConfig::load(&path).unwrap();
        assert_eq!(cfg.version, CONFIG_VERSION);
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg, "{path:?}");
        seen += 1;
    }
    assert!(seen >= 5);
}

#[test]
fn defaults_fill_missing_fields() {
    let cfg = ExperimentConfig::from_json(r#"{"version": 1}"#).unwrap();
    assert_eq!(cfg, ExperimentConfig::default());
    assert_eq!(cfg.s_grid.len(), 9);
    assert_eq!(cfg.t_depths, (1..=64).collect::<Vec<_>>());
}

#[test]
fn config_rejections() {
    let bad = [
        r#"{"version": 2}"#,
        r#"{"version": 1, "shots": 0}"#,
        r#"{"version": 1, "unknown": 3}"#,
        r#"{"version": 1, "trials": 0}"#,
        r#"{"version": 1, "iterations": 40}"#,
        r#"{"version": 1, "perturbation": -0.1}"#,
        r#"{"version": 1, "s_grid": [0.0]}"#,
        r#"{"version": 1, "t_depths": [0, 1]}"#,
        r#"{"version": 1, "problem": {"mode": "amplitude", "qubits": 1, "psi": {"angle": 0.0}}}"#,
        r#"{"version": 1, "problem": {"mode": "observable", "qubits": 2, "psi": {"angle": 0.0}, "observable": "Z"}}"#,
        r#"{"version": 1, "problem": {"mode": "amplitude", "qubits": 4, "psi": {"angle": 0.0}, "phi": {"angle": 0.0}}}"#,
        r#"{"version": 1, "problem": {"mode": "amplitude", "qubits": 1, "psi": {"vector": [[0,0],[0,0]]}, "phi": {"angle": 0.0}}}"#,
        r#"{"version": 1, "noise": {"kind": "pauli", "i": 0.5}}"#,
        r#"{"version": 1, "noise": {"kind": "bogus"}}"#,
        r#"{"version": 1, "iqae": {"max_rounds": 200}}"#,
        "not json",
    ];
    for text in bad {
        assert!(matches!(ExperimentConfig::from_json(text), Err(CliError::Config(_))), "{text}");
    }
}

#[test]
fn explicit_vectors_are_normalized() {
    let cfg = ExperimentConfig::from_json(
        r#"{"version": 1, "problem": {"mode": "amplitude", "qubits": 1,
            "psi": {"vector": [[3, 0], [0, 4]]}, "phi": {"vector": [[1, 0], [0, 0]]}}}"#,
    )
    .unwrap();
    let p = cfg.problem.build().unwrap();
    assert!((p.exact_value() - 0.36).abs() < 1e-15);
}

#[test]
fn statistical_noise_takes_the_run_seed_when_unset() {
    let mut cfg = ExperimentConfig::from_json(r#"{"version": 1, "seed": 9, "noise": {"kind": "statistical"}}"#).unwrap();
    assert!(matches!(cfg.resolved_noise(), NoiseSpec::Statistical { seed: Some(9), .. }));
    cfg.noise = NoiseSpec::statistical(4);
    assert!(matches!(cfg.resolved_noise(), NoiseSpec::Statistical { seed: Some(4), .. }));
}

#[test]
fn flags_override_file_values() {
    let mut cfg = shipped("compare_pauli.json");
    assert_eq!(cfg.shots, Some(100_000));
    cfg.apply(&Overrides {
        seed: Some(42),
        out: Some(PathBuf::from("/tmp/run.csv")),
        trials: Some(3),
        shots: Some(500),
        exact: false,
    });
    assert_eq!((cfg.seed, cfg.trials, cfg.shots), (42, 3, Some(500)));
    assert_eq!(
        cfg.output,
        OutputSpec {
            csv: Some(PathBuf::from("/tmp/run.csv")),
            svg: Some(PathBuf::from("/tmp/run.svg")),
        }
    );
    cfg.apply(&Overrides {
        exact: true,
        ..Overrides::default()
    });
    assert_eq!(cfg.shots, None);
    assert_eq!(cfg.seed, 42);
}

fn arb_state() -> impl Strategy<Value = StateSpec> {
    prop_oneof![
        (-10.0..10.0f64).prop_map(StateSpec::Angle),
        any::<u64>().prop_map(StateSpec::Random),
        prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 2)
            .prop_map(|v| StateSpec::Vector(v.into_iter().map(|(a, b)| [a + 2.0, b]).collect())),
    ]
}

fn arb_noise() -> impl Strategy<Value = NoiseSpec> {
    prop_oneof![
        Just(NoiseSpec::None),
        (0.6..1.0f64, 0.0..0.05f64, any::<Option<u64>>())
            .prop_map(|(fidelity, spread, seed)| NoiseSpec::Statistical { fidelity, spread, seed }),
        (0.0..1.0f64).prop_map(|gamma| NoiseSpec::AmplitudeDamping { gamma }),
        (0.0..1.0f64).prop_map(|p| NoiseSpec::Depolarizing { p }),
        (-3.0..3.0f64).prop_map(|delta_t| NoiseSpec::Coherent { delta_t }),
        Just(NoiseSpec::pauli()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trips_losslessly(
        psi in arb_state(),
        phi in arb_state(),
        observable in any::<bool>(),
        noise in arb_noise(),
        shots in prop::option::of(1u64..10_000_000),
        iterations in 0u32..=10,
        trials in 1u32..1000,
        seed in any::<u64>(),
        retry in any::<bool>(),
        perturbation in prop::option::of(0.0..0.5f64),
        s_grid in prop::collection::vec(1e-6..1.0f64, 0..6),
        t_depths in prop::collection::vec(1usize..200, 1..6),
        confidence in 0.5..0.999f64,
        target_eps in 1e-9..0.1f64,
        max_rounds in 1u32..=127,
        csv in any::<bool>(),
    ) {
        let problem = if observable {
            ProblemSpec { mode: Mode::Observable, qubits: 1, psi, phi: None, observable: Some("Y".into()) }
        } else {
            ProblemSpec { mode: Mode::Amplitude, qubits: 1, psi, phi: Some(phi), observable: None }
        };
        let cfg = ExperimentConfig {
            version: CONFIG_VERSION,
            problem,
            noise,
            shots,
            iterations,
            trials,
            seed,
            retry,
            perturbation,
            s_grid,
            t_depths,
            iqae: IqaeSpec { confidence, target_eps, max_rounds },
            output: OutputSpec {
                csv: csv.then(|| PathBuf::from("out/run.csv")),
                svg: None,
            },
        };
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

#[test]
fn estimate_worked_instance() {
    let r = cmd_estimate(&shipped("worked.json")).unwrap();
    assert!((r.value - 0.75).abs() < 1e-9);
    assert!((r.mirror - 0.25).abs() < 1e-9);
    assert!((r.theta_ch - 2.0 * PI / 3.0).abs() < 1e-9);
}

#[test]
fn estimate_ideal_angle() {
    let r = cmd_estimate(&shipped("ideal_angle.json")).unwrap();
    assert!((r.theta_ch - 2.0 * PI / 7.0).abs() < 1e-9, "{}", r.theta_ch);
}

#[test]
fn estimate_coincident_states() {
    let mut cfg = ExperimentConfig::default();
    cfg.problem.phi = Some(cfg.problem.psi.clone());
    let r = cmd_estimate(&cfg).unwrap();
    assert_eq!(r.value, 1.0);
    assert!(r.no_signal);
}

#[test]
fn estimate_observable_config() {
    let cfg = shipped("observable.json");
    let truth = cfg.problem.build().unwrap().exact_value();
    let r = cmd_estimate(&cfg).unwrap();
    assert_eq!(r.mode, Mode::Observable);
    assert!((r.value - truth).abs() < 0.02, "{} vs {truth}", r.value);
}

#[test]
fn sweep_without_perturbation_is_exact() {
    let mut cfg = shipped("sweep_perturbed.json");
    cfg.perturbation = None;
    cfg.trials = 2;
    let rows = cmd_sweep_depth(&cfg).unwrap();
    assert_eq!(rows.len(), 16);
    assert!(rows.iter().all(|r| r.abs_error < 1e-9), "{rows:?}");
}

#[test]
fn sweep_rows_are_sorted_and_deterministic() {
    let mut cfg = shipped("sweep_perturbed.json");
    cfg.perturbation = None;
    cfg.shots = Some(20_000);
    cfg.trials = 6;
    cfg.iterations = 3;
    let a = sweep_csv(&cmd_sweep_depth(&cfg).unwrap()).render();
    let b = sweep_csv(&cmd_sweep_depth(&cfg).unwrap()).render();
    assert_eq!(a, b);
    let keys: Vec<(u64, u64)> = a
        .lines()
        .skip(1)
        .map(|l| {
            let mut f = l.split(',');
            (f.next().unwrap().parse().unwrap(), f.next().unwrap().parse().unwrap())
        })
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert_eq!(keys.len(), 24);
    cfg.seed += 1;
    assert_ne!(a, sweep_csv(&cmd_sweep_depth(&cfg).unwrap()).render());
}

#[test]
fn sweep_under_noise_targets_the_perturbed_phase() {
    let mut cfg = shipped("sweep_perturbed.json");
    cfg.perturbation = None;
    cfg.noise = NoiseSpec::Depolarizing { p: 0.02 };
    cfg.trials = 1;
    cfg.iterations = 5;
    let rows = cmd_sweep_depth(&cfg).unwrap();
    let ideal = PI / 3.0;
    assert!((rows[0].theta_true - ideal).abs() > 1e-6);
    assert!(rows.last().unwrap().abs_error < 1e-3);
}

#[test]
fn compare_without_noise_converges_for_both_methods() {
    let mut cfg = shipped("compare_pauli.json");
    cfg.noise = NoiseSpec::None;
    cfg.trials = 3;
    cfg.iterations = 4;
    let rows = cmd_compare_noise(&cfg).unwrap();
    assert_eq!(rows.len(), 2 * 3 * 5);
    for m in [Method::Nrqae, Method::Iqae] {
        let med = compare_medians(&rows, m);
        assert!(med.last().unwrap().1 < 5e-3, "{m:?}: {med:?}");
    }
    for r in rows.iter().filter(|r| r.method == Method::Iqae) {
        let budget = rows
            .iter()
            .find(|e| e.method == Method::Nrqae && e.depth == r.depth && e.trial == r.trial)
            .unwrap()
            .oracle_calls;
        assert!(r.oracle_calls <= budget);
    }
}

#[test]
fn compare_coherent_runs_and_plots() {
    let cfg = shipped("compare_coherent.json");
    let rows = cmd_compare_noise(&cfg).unwrap();
    assert!(rows.iter().all(|r| r.abs_error.is_finite()));
    let svg = compare_svg(&rows, "coherent noise");
    assert_eq!(svg, compare_svg(&cmd_compare_noise(&cfg).unwrap(), "coherent noise"));
    assert_eq!(svg.matches("<polyline").count(), 2);
}

#[test]
fn compare_requires_shots() {
    let mut cfg = shipped("compare_pauli.json");
    cfg.shots = None;
    assert!(matches!(cmd_compare_noise(&cfg), Err(CliError::Config(_))));
}

#[test]
fn verify_reports_slopes_and_rows() {
    let out = cmd_verify_perturbation(&shipped("verify_depolarizing.json")).unwrap();
    assert_eq!(out.reports.len(), 9);
    assert_eq!(out.flagged(), 0);
    assert!((out.slopes.first_order_shift.unwrap() - 1.0).abs() < 0.05);
    let csv = verify_csv(&out).render();
    assert_eq!(csv.lines().count(), 10);
    assert!(csv.starts_with("s,eps,lemma1_residual,"));
}

#[test]
fn verify_requires_noise() {
    let mut cfg = shipped("verify_depolarizing.json");
    cfg.noise = NoiseSpec::None;
    assert!(matches!(cmd_verify_perturbation(&cfg), Err(CliError::Config(_))));
}

#[test]
fn plan_shots_examples() {
    assert_eq!(cmd_plan_shots(0.01, 0.05).unwrap(), 18445);
    assert_eq!(cmd_plan_shots(0.1, 0.05).unwrap(), 185);
    assert_eq!(cmd_plan_shots(0.5, 2.0 / std::f64::consts::E).unwrap(), 2);
    assert!(cmd_plan_shots(0.0, 0.05).is_err());
}

#[test]
fn exit_status_mapping() {
    assert_eq!(CliError::Usage(String::new()).exit_code(), 1);
    assert_eq!(CliError::Config(String::new()).exit_code(), 1);
    assert_eq!(CliError::Estimation(nrqae::Error::InsufficientDepths { usable: 0 }).exit_code(), 2);
    assert_eq!(CliError::Flagged(1).exit_code(), 3);
}

#[test]
fn binary_entry_points() {
    let (code, out, _) = run_cli(&["plan-shots", "--eps", "0.1"]);
    assert_eq!((code, out.as_str()), (0, "185\n"));

    let (code, out, err) = run_cli(&["estimate", "--exact"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.starts_with("mode,theta_ch,value,"));
    assert!(out.contains(",7.50000000000e-1,"));
    assert!(err.contains("value         0.750000000000"));

    let (code, _, _) = run_cli(&["--help"]);
    assert_eq!(code, 0);
    let (code, _, _) = run_cli(&["estimate", "--exact", "--shots", "10"]);
    assert_eq!(code, 1);
    let (code, _, _) = run_cli(&["estimate", "--config", "/nonexistent/config.json"]);
    assert_eq!(code, 1);
    let (code, _, err) = run_cli(&["estimate", "--shots", "1"]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("every iteration failed"));
}

#[test]
fn binary_writes_files_byte_identically() {
    let cfg = configs_dir().join("compare_coherent.json");
    let cfg = cfg.to_str().unwrap();
    let a = tmp_path("a.csv");
    let b = tmp_path("b.csv");
    for p in [&a, &b] {
        let (code, out, err) = run_cli(&["compare-noise", "--config", cfg, "--trials", "2", "--out", p.to_str().unwrap()]);
        assert_eq!(code, 0, "{err}");
        assert!(out.contains("nrqae median"));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(
        std::fs::read(a.with_extension("svg")).unwrap(),
        std::fs::read(b.with_extension("svg")).unwrap()
    );
    let csv = std::fs::read_to_string(&a).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "depth,trial,method,estimate,truth,abs_error,oracle_calls");
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 6);
}
