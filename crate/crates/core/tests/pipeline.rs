use statdiff::calibrate::{tune, HealthyModel, TuneConfig};
use statdiff::engine::{run_stream, EngineOptions};
use statdiff::evalkit::{build_report, outcome_from_log};
use statdiff::feedersim::{
    healthy_training_set, read_waveform_csv, simulate, write_waveform_csv, FaultSpec, GridSpec,
    Scenario, ScenarioConfig,
};
use statdiff::FaultLabel;

fn small_model() -> HealthyModel {
    let train: Vec<_> = healthy_training_set(&GridSpec::default(), 6)
        .unwrap()
        .iter()
        .map(|s| simulate(s).unwrap().0)
        .collect();
    let cfg = TuneConfig {
        budget: 20,
        ..TuneConfig::default()
    };
    tune(&train, &cfg).unwrap().model
}

fn scenario(id: &str, fault: Option<FaultSpec>) -> Scenario {
    Scenario {
        id: id.into(),
        config: ScenarioConfig {
            seed: 7,
            ..ScenarioConfig::default()
        },
        fault,
    }
}

#[test]
fn simulate_tune_run_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let model = small_model();
    let path = dir.path().join("model.json");
    model.save(&path).unwrap();
    let model = HealthyModel::load(&path).unwrap();

    let fault = FaultSpec {
        t_f: 0.2,
        label: FaultLabel::Bc,
        r_f: Some(10.0),
        location_frac: 0.4,
        internal: true,
    };
    let mut outcomes = Vec::new();
    for sc in [scenario("fault", Some(fault)), scenario("healthy", None)] {
        let (rec, truth) = simulate(&sc).unwrap();
        let csv = dir.path().join(format!("{}.csv", sc.id));
        write_waveform_csv(&rec, &csv).unwrap();
        let rec = read_waveform_csv(&csv).unwrap();
        let log = run_stream(&rec, &model, EngineOptions::default()).unwrap();
        outcomes.push(outcome_from_log(
            &truth,
            &log,
            model.thresholds.tau_det,
            rec.sample_rate_hz,
        ));
    }
    assert!(outcomes[0].is_true_positive());
    assert_eq!(outcomes[0].predicted, Some(FaultLabel::Bc));
    assert!(!outcomes[1].tripped);

    let report = build_report(&outcomes).unwrap();
    assert_eq!(report.overall.detection.n_detected, 1);
    assert_eq!(report.overall.detection.false_trips, 0);
}

#[test]
fn saved_model_reloads_identically() {
    let dir = tempfile::tempdir().unwrap();
    let model = small_model();
    let path = dir.path().join("m.json");
    model.save(&path).unwrap();
    let back = HealthyModel::load(&path).unwrap();
    assert_eq!(back.to_json().unwrap(), model.to_json().unwrap());
}
