use tempfile::tempdir;
use wrist_mrac::adaptive::{export_dataset, read_dataset};
use wrist_mrac::closed_loop::{read_trace, write_plot_data, write_trace, Direction};
use wrist_mrac::config::DirectionChoice;
use wrist_mrac::nn::{load_normalizer, load_weights, save_normalizer, save_weights, Activation};
use wrist_mrac::pipeline::{self, evaluate_trace};
use wrist_mrac::Config;

fn short_config() -> Config {
    Config::from_toml_str(
        "[mrac]\nduration = 6.0\n\n[nn]\nmax_epochs = 60\n\n[loop]\nduration = 6.0\n",
    )
    .unwrap()
}

#[test]
fn dataset_file_round_trip() {
    let config = short_config();
    let records = pipeline::generate_dataset(&config).unwrap();
    let dir = tempdir().unwrap();
    let path = dir.path().join("dataset.csv");
    export_dataset(&records, &path, Some("config-digest: abc")).unwrap();

    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# config-digest: abc"));
    assert_eq!(lines.next(), Some("t,r,y_plant,y_model,e,u_force_N,theta"));
    assert_eq!(lines.count(), 6001);
    assert_eq!(read_dataset(&path).unwrap(), records);
}

#[test]
fn trained_controller_survives_the_filesystem() {
    let config = short_config();
    let records = pipeline::generate_dataset(&config).unwrap();
    let outcome = pipeline::train_controller(&config, &records).unwrap();
    let dir = tempdir().unwrap();
    let weights = dir.path().join("weights.txt");
    let normalizer = dir.path().join("normalizer.txt");
    save_weights(outcome.controller.network(), &weights, None).unwrap();
    save_normalizer(outcome.controller.normalizer(), &normalizer, None).unwrap();

    let net = load_weights(&weights, Activation::Sigmoid, Activation::Linear).unwrap();
    assert_eq!(&net, outcome.controller.network());
    assert_eq!(
        &load_normalizer(&normalizer).unwrap(),
        outcome.controller.normalizer()
    );
}

#[test]
fn trace_files_keep_metrics() {
    let config = short_config();
    let records = pipeline::generate_dataset(&config).unwrap();
    let outcome = pipeline::train_controller(&config, &records).unwrap();
    let traces = pipeline::simulate(
        &config,
        &outcome.controller,
        DirectionChoice::One(Direction::Flexion),
    )
    .unwrap();
    assert_eq!(traces.len(), 1);
    let trace = &traces[&Direction::Flexion];

    let dir = tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    write_trace(trace, &path).unwrap();
    let back = read_trace(&path).unwrap();
    assert_eq!(back.direction, Some(Direction::Flexion));
    assert_eq!(back.digest.as_deref(), Some(config.digest().as_str()));
    assert_eq!(back.y_plant, trace.y_plant);
    assert_eq!(
        evaluate_trace(&config, &back).unwrap(),
        evaluate_trace(&config, trace).unwrap()
    );

    let plot = dir.path().join("plot.csv");
    write_plot_data(trace, &plot, 10).unwrap();
    let text = std::fs::read_to_string(&plot).unwrap();
    assert_eq!(text.lines().nth(1), Some("t,y_ref,y_plant,e"));
    assert_eq!(text.lines().count(), 2 + 601);
}

#[test]
fn config_file_overrides_and_digest() {
    let base = Config::default();
    let tuned = Config::from_toml_str("[plant]\nzeta = 0.9\n").unwrap();
    assert_eq!(tuned.plant.zeta, 0.9);
    assert_eq!(tuned.beam, base.beam);
    assert_ne!(tuned.digest(), base.digest());
    assert_eq!(
        Config::from_toml_str(&tuned.to_toml()).unwrap().digest(),
        tuned.digest()
    );
}
