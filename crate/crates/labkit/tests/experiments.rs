use finlab::experiments::{run_fig1, run_pieces, run_train, Fig1Config, PiecesConfig, TrainConfig};
use finlab::{Experiment, RunContext, Scale};

fn ctx(seed: u64, workers: usize) -> (tempfile::TempDir, RunContext) {
    let dir = tempfile::tempdir().unwrap();
    let ctx = RunContext::new(seed, dir.path(), workers);
    (dir, ctx)
}

fn small_fig1() -> Fig1Config {
    Fig1Config {
        layers: vec![3],
        widths: vec![20],
        nets_per_cell: 4,
        ..Fig1Config::defaults(Scale::Desk)
    }
}

#[test]
fn fig1_csv_is_identical_across_worker_counts() {
    let (a, ca) = ctx(3, 1);
    let (b, cb) = ctx(3, 4);
    run_fig1(&small_fig1(), &ca).unwrap();
    run_fig1(&small_fig1(), &cb).unwrap();
    for entry in std::fs::read_dir(a.path()).unwrap() {
        let name = entry.unwrap().file_name();
        if name.to_string_lossy().ends_with(".csv") {
            let x = std::fs::read(a.path().join(&name)).unwrap();
            let y = std::fs::read(b.path().join(&name)).unwrap();
            assert_eq!(x, y, "{name:?} differs");
        }
    }
}

#[test]
fn seed_changes_results() {
    let cfg = PiecesConfig {
        nets: 3,
        ..PiecesConfig::defaults(Scale::Desk)
    };
    let (_a, ca) = ctx(1, 1);
    let (_b, cb) = ctx(2, 1);
    let ra = run_pieces(&cfg, &ca).unwrap();
    let rb = run_pieces(&cfg, &cb).unwrap();
    assert_eq!(ra.len(), 9);
    assert_ne!(ra, rb);
}

#[test]
fn pieces_never_exceed_the_combinatorial_bound() {
    let cfg = PiecesConfig {
        nets: 5,
        ..PiecesConfig::defaults(Scale::Desk)
    };
    let (_d, c) = ctx(0, 2);
    for r in run_pieces(&cfg, &c).unwrap() {
        assert!(r.pieces >= 1);
        assert!(r.pieces <= r.activation_regions);
        assert!((r.activation_regions as f64) <= r.telgarsky_bound);
    }
}

#[test]
fn short_training_run_writes_trace_and_networks() {
    let cfg = TrainConfig {
        architecture: vec![1, 8, 8, 1],
        iterations: 20,
        probe_interval: 5,
        ..TrainConfig::defaults(Scale::Desk)
    };
    let (d, c) = ctx(0, 1);
    let rep = run_train(&cfg, &c).unwrap();
    assert_eq!(rep.rows.len(), 20);
    assert!(rep.final_risk.is_finite());
    assert!(rep.rows.iter().filter(|r| r.pieces.is_some()).count() >= 4);
    for f in ["trace.csv", "initial_network.json", "final_network.json"] {
        assert!(d.path().join(f).exists(), "{f} missing");
    }
}

#[test]
fn invalid_config_is_rejected() {
    let cfg = PiecesConfig {
        architecture: vec![2, 4, 1],
        ..PiecesConfig::defaults(Scale::Desk)
    };
    let (_d, c) = ctx(0, 1);
    assert!(run_pieces(&cfg, &c).is_err());
}
