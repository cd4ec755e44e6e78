use vnfplace::experiments::{run_experiment, ExperimentConfig, ResourceSweep, Scheme};
use vnfplace::gen::GeneratorConfig;
use vnfplace::lp::SolverOptions;
use vnfplace::Resource;

fn small_gen() -> GeneratorConfig {
    GeneratorConfig {
        mec_count: 4,
        ..Default::default()
    }
}

#[test]
fn lr_reward_nondecreasing_in_capacity() {
    let sweeps = [
        (Resource::Cpu, vec![8.0, 16.0, 24.0, 40.0]),
        (Resource::Ram, vec![12.0, 24.0, 48.0]),
        (Resource::Uplink, vec![20.0, 40.0, 75.0]),
        (Resource::Downlink, vec![60.0, 120.0, 250.0]),
    ];
    let cfg = ExperimentConfig {
        request_counts: vec![],
        resource_sweeps: sweeps
            .iter()
            .map(|(resource, values)| ResourceSweep {
                resource: *resource,
                values: values.clone(),
            })
            .collect(),
        sweep_request_count: 20,
        runs: 4,
        schemes: vec![Scheme::Lr, Scheme::Greedy],
        ..Default::default()
    };
    let rep = run_experiment(&cfg, &small_gen(), &SolverOptions::default()).unwrap();
    for (resource, values) in &sweeps {
        for run in 0..cfg.runs {
            let rewards: Vec<f64> = values
                .iter()
                .map(|&v| {
                    rep.runs
                        .iter()
                        .find(|r| r.scheme == Scheme::Lr && r.sweep == resource.name() && r.point == v && r.run == run)
                        .unwrap()
                        .reward
                })
                .collect();
            assert!(rewards.windows(2).all(|w| w[1] >= w[0] - 1e-6), "{resource} run {run}: {rewards:?}");
        }
    }
}

#[test]
fn utilization_grows_with_requests_and_only_rr_overloads() {
    let cfg = ExperimentConfig {
        request_counts: vec![10, 30, 50],
        runs: 10,
        ..Default::default()
    };
    let rep = run_experiment(&cfg, &GeneratorConfig::default(), &SolverOptions::default()).unwrap();
    for metric in ["cpu_util_pct", "uplink_util_pct"] {
        let u: Vec<f64> = [10.0, 30.0, 50.0]
            .iter()
            .map(|&p| rep.find(Scheme::Lr, "requests", p, metric).unwrap().mean)
            .collect();
        assert!(u[0] < u[1] && u[1] < u[2], "{metric}: {u:?}");
    }
    for r in &rep.runs {
        if r.scheme != Scheme::Rr {
            assert!(r.feasible, "{r:?}");
            assert!(r.utilization_pct.iter().all(|&u| u <= 100.0 + 1e-6), "{r:?}");
        }
    }
    let rr_violation = rep.find(Scheme::Rr, "requests", 50.0, "violation_rate").unwrap().mean;
    assert!((0.0..=1.0).contains(&rr_violation));
}

#[test]
fn more_runs_keep_earlier_runs() {
    let base = ExperimentConfig {
        request_counts: vec![12],
        runs: 3,
        schemes: vec![Scheme::Greedy],
        ..Default::default()
    };
    let more = ExperimentConfig { runs: 6, ..base.clone() };
    let a = run_experiment(&base, &small_gen(), &SolverOptions::default()).unwrap();
    let b = run_experiment(&more, &small_gen(), &SolverOptions::default()).unwrap();
    let key = |r: &vnfplace::experiments::RunRecord| (r.run, r.instance_seed, r.reward, r.served_pct, r.utilization_pct);
    let early: Vec<_> = b.runs.iter().filter(|r| r.run < 3).map(key).collect();
    assert_eq!(a.runs.iter().map(key).collect::<Vec<_>>(), early);
}
