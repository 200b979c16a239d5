//! End-to-end harness behavior: run lifecycle, determinism, checkpoint round
//! trips, plotting, and remote-abort handling.

use landrl::agents::Algorithm;
use landrl::bridge::{BridgeServer, EnvFactory};
use landrl::env::ScenarioConfig;
use landrl::harness::{
    evaluate, moving_average, plot_metrics, read_metrics, train, EnvChoice, HarnessError,
    ReplaySettings, RunConfig,
};
use landrl::task::ShapedEnv;
use landrl::AgentConfig;
use std::path::Path;
use std::sync::Arc;
use tempfile::tempdir;

/// A small config that still exercises learning: tiny nets, short warm-up.
fn small_config(algorithm: Algorithm, seed: u64, out_dir: &Path) -> RunConfig {
    RunConfig {
        algorithm,
        episodes: 12,
        seed,
        agent: AgentConfig {
            hidden: vec![16, 16],
            batch_size: 32,
            ..AgentConfig::default()
        },
        replay: ReplaySettings {
            capacity: 10_000,
            warmup: 200,
        },
        out_dir: out_dir.to_path_buf(),
        ..RunConfig::default()
    }
}

#[test]
fn single_episode_run_writes_one_record() {
    let dir = tempdir().unwrap();
    let mut config = small_config(Algorithm::Ddpg, 1, &dir.path().join("run"));
    config.episodes = 1;
    let summary = train(&config).unwrap();
    assert_eq!(summary.episodes_run, 1);
    let records = read_metrics(&summary.metrics_path).unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].episode, 1);
    assert!(records[0].steps <= 40);
    assert!(records[0].ret.is_finite());
    // config is captured alongside the metrics
    assert!(config.out_dir.join("config.json").exists());
    assert!(summary.checkpoint_path.exists());
}

#[test]
fn identical_config_and_seed_give_byte_identical_metrics() {
    let dir = tempdir().unwrap();
    let config_a = small_config(Algorithm::Sac, 33, &dir.path().join("a"));
    let config_b = small_config(Algorithm::Sac, 33, &dir.path().join("b"));
    let sa = train(&config_a).unwrap();
    let sb = train(&config_b).unwrap();
    let bytes_a = std::fs::read(&sa.metrics_path).unwrap();
    let bytes_b = std::fs::read(&sb.metrics_path).unwrap();
    assert_eq!(bytes_a, bytes_b);
    // a different seed must change the file
    let config_c = small_config(Algorithm::Sac, 34, &dir.path().join("c"));
    let sc = train(&config_c).unwrap();
    assert_ne!(bytes_a, std::fs::read(&sc.metrics_path).unwrap());
}

#[test]
fn recorded_return_equals_the_sum_of_step_rewards() {
    // replay the run's episode stream with the shaped env directly
    let dir = tempdir().unwrap();
    let config = small_config(Algorithm::Td3, 7, &dir.path().join("run"));
    let summary = train(&config).unwrap();
    let records = read_metrics(&summary.metrics_path).unwrap();
    assert_eq!(records.len(), 12);
    for r in &records {
        assert!(r.ret.is_finite());
        assert_eq!(r.wall_ms, r.steps as u64 * 100);
    }
    // avg50 column equals the windowed mean of the return column
    let returns: Vec<f64> = records.iter().map(|r| r.ret).collect();
    let avg = moving_average(&returns, 50);
    for (r, a) in records.iter().zip(avg) {
        assert!((r.avg50 - a).abs() < 1e-9);
    }
}

#[test]
fn checkpoint_round_trip_reproduces_greedy_actions_bitwise() {
    let dir = tempdir().unwrap();
    let config = small_config(Algorithm::Sac, 5, &dir.path().join("run"));
    let summary = train(&config).unwrap();

    let (mut a, scenario) = landrl::agents::load_checkpoint(&summary.checkpoint_path, 0).unwrap();
    let (mut b, _) = landrl::agents::load_checkpoint(&summary.checkpoint_path, 99).unwrap();
    assert_eq!(scenario, config.scenario);
    use rand::{Rng, SeedableRng};
    let mut obs_rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    for _ in 0..50 {
        let mut obs = [0.0; 6];
        for v in obs.iter_mut() {
            *v = obs_rng.gen_range(-2.0..2.0);
        }
        let ca = a.act(&obs, false);
        let cb = b.act(&obs, false);
        assert_eq!(ca.ax.to_bits(), cb.ax.to_bits());
        assert_eq!(ca.ay.to_bits(), cb.ay.to_bits());
    }
}

#[test]
fn evaluation_is_deterministic_and_validates_input() {
    let dir = tempdir().unwrap();
    let config = small_config(Algorithm::Ddpg, 2, &dir.path().join("run"));
    let summary = train(&config).unwrap();

    assert!(matches!(
        evaluate(&summary.checkpoint_path, 0, 1),
        Err(HarnessError::InvalidConfig(_))
    ));
    let e1 = evaluate(&summary.checkpoint_path, 20, 9).unwrap();
    let e2 = evaluate(&summary.checkpoint_path, 20, 9).unwrap();
    assert_eq!(e1, e2);
    assert!(e1.success_rate >= 0.0 && e1.success_rate <= 1.0);
    assert!(e1.red_rate <= e1.success_rate);
    assert!(e1.mean_steps <= 40.0);
}

#[test]
fn plot_writes_a_non_empty_image() {
    let dir = tempdir().unwrap();
    let config = small_config(Algorithm::Sac, 11, &dir.path().join("run"));
    let summary = train(&config).unwrap();
    let out = dir.path().join("curve.svg");
    plot_metrics(&summary.metrics_path, &out).unwrap();
    let meta = std::fs::metadata(&out).unwrap();
    assert!(meta.len() > 0);
    let body = std::fs::read_to_string(&out).unwrap();
    assert!(body.contains("<svg"));
}

#[test]
fn plot_rejects_an_empty_metrics_file() {
    let dir = tempdir().unwrap();
    let metrics = dir.path().join("empty.csv");
    std::fs::write(&metrics, format!("{}\n", landrl::harness::METRICS_HEADER)).unwrap();
    let out = dir.path().join("curve.svg");
    assert!(matches!(
        plot_metrics(&metrics, &out),
        Err(HarnessError::Metrics(_))
    ));
}

#[test]
fn remote_training_works_and_aborts_cleanly_when_the_server_dies() {
    let factory: EnvFactory = Arc::new(|| {
        Box::new(ShapedEnv::new(ScenarioConfig::default(), 0).expect("default scenario is valid"))
    });
    let server = BridgeServer::spawn(factory, "127.0.0.1:0").unwrap();

    // a short remote run behaves like a builtin run
    let dir = tempdir().unwrap();
    let mut config = small_config(Algorithm::Ddpg, 3, &dir.path().join("remote"));
    config.episodes = 3;
    config.env = EnvChoice::Remote(server.local_addr().to_string());
    let summary = train(&config).unwrap();
    assert_eq!(summary.episodes_run, 3);

    let mut builtin = small_config(Algorithm::Ddpg, 3, &dir.path().join("builtin"));
    builtin.episodes = 3;
    let builtin_summary = train(&builtin).unwrap();
    assert_eq!(
        std::fs::read(&summary.metrics_path).unwrap(),
        std::fs::read(&builtin_summary.metrics_path).unwrap(),
        "remote and builtin runs must produce identical metrics"
    );

    // kill the server; connecting for a new run fails outright
    let addr = server.local_addr().to_string();
    server.shutdown();
    let mut dead = small_config(Algorithm::Ddpg, 4, &dir.path().join("dead"));
    dead.env = EnvChoice::Remote(addr);
    assert!(train(&dead).is_err());
}

/// A server that speaks the protocol for exactly one episode, then hangs up.
fn one_episode_server() -> (std::net::SocketAddr, std::thread::JoinHandle<()>) {
    use landrl::bridge::WireMessage;
    use landrl::env::ActionCmd;
    use landrl::task::Environment;
    use std::io::{BufRead, BufReader, Write};

    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let handle = std::thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut writer = stream.try_clone().unwrap();
        let mut reader = BufReader::new(stream);
        let mut env = ShapedEnv::new(ScenarioConfig::default(), 0).unwrap();
        let mut send = |msg: &WireMessage| {
            let mut line = serde_json::to_string(msg).unwrap();
            line.push('\n');
            writer.write_all(line.as_bytes()).unwrap();
        };
        send(&WireMessage::Hello {
            version: "1".into(),
        });
        send(&WireMessage::Spec {
            state_dim: 6,
            action_dim: 2,
            action_bound: 1.0,
        });
        let mut line = String::new();
        loop {
            line.clear();
            if reader.read_line(&mut line).unwrap() == 0 {
                return;
            }
            match serde_json::from_str::<WireMessage>(line.trim_end()).unwrap() {
                WireMessage::Reset { seed } => {
                    let state = env.reset(seed).unwrap();
                    send(&WireMessage::Obs {
                        state: state.observation(),
                    });
                }
                WireMessage::Step { action } => {
                    let out = env.step(ActionCmd::new(action[0], action[1])).unwrap();
                    send(&WireMessage::Transition {
                        state: out.next_state.observation(),
                        reward: out.reward,
                        done: out.done,
                        termination: out.termination,
                        zone: out.zone,
                    });
                    if out.done {
                        return; // hang up mid-run
                    }
                }
                _ => return,
            }
        }
    });
    (addr, handle)
}

#[test]
fn mid_run_remote_failure_keeps_completed_episodes() {
    let (addr, handle) = one_episode_server();
    let dir = tempdir().unwrap();
    let mut config = small_config(Algorithm::Ddpg, 6, &dir.path().join("abort"));
    config.episodes = 5;
    config.env = EnvChoice::Remote(addr.to_string());

    match train(&config) {
        Err(HarnessError::Aborted { completed, .. }) => assert_eq!(completed, 1),
        other => panic!("expected an abort after episode 1, got {other:?}"),
    }
    let records = read_metrics(&config.out_dir.join("metrics.csv")).unwrap();
    assert_eq!(records.len(), 1, "the completed episode must be on disk");
    handle.join().unwrap();
}
