use qsp_core::control::final_state;
use qsp_core::deep::{dql_train, encode, DqlAgent, DqlConfig, Experience};
use qsp_core::dense::DenseNet;
use qsp_core::krotov::{backward_pass, costate_init, forward_pass, krotov_run, krotov_update_sweep, KrotovConfig};
use qsp_core::noise::noise_eval;
use qsp_core::qubit::fidelity;
use qsp_core::sgd::{sgd_run, SgdConfig};
use qsp_core::tabular::{ql_train, QlConfig};
use qsp_core::{derive_seed, rng_from_seed, ConstraintSpec, ProblemSpec, QubitState, RunResult};
use rand::Rng;

fn random_controls(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..n).map(|_| rng.random_range(0.0..1.0)).collect()
}

#[test]
fn backward_pass_preserves_costate_norm() {
    let p = ProblemSpec::default();
    for seed in 0..20 {
        let controls = random_controls(30, seed);
        let dt = p.physics.step_duration(30);
        let states = forward_pass(&controls, &p.initial, dt, &p.physics);
        let chi_n = costate_init(&states[30], &p.target);
        let chis = backward_pass(&controls, chi_n, dt, &p.physics);
        for chi in &chis {
            assert!((chi.norm() - chi_n.norm()).abs() < 1e-12);
            assert!(chi.norm() <= 1.0 + 1e-12);
        }
    }
}

#[test]
fn krotov_update_is_bounded_by_scale() {
    let p = ProblemSpec::default();
    let n = 25;
    let dt = p.physics.step_duration(n);
    for (seed, lam) in [(1u64, 1e-3), (2, 0.1), (3, 0.3), (4, 1.0)] {
        let controls = random_controls(n, seed);
        let states = forward_pass(&controls, &p.initial, dt, &p.physics);
        let chis = backward_pass(&controls, costate_init(&states[n], &p.target), dt, &p.physics);
        let cfg = KrotovConfig { update_scale: lam, ..Default::default() };
        let (next, _) = krotov_update_sweep(&controls, &chis, &p.initial, &ConstraintSpec::unbounded(n), dt, &p.physics, &cfg);
        let moved: f64 = next.iter().zip(&controls).map(|(a, b)| (a - b).abs()).sum();
        assert!(moved <= lam * 4.0 * n as f64 + 1e-12, "λ={lam} moved {moved}");
        assert!(next.iter().zip(&controls).all(|(a, b)| (a - b).abs() <= 4.0 * lam + 1e-12));
    }
}

#[test]
fn single_krotov_sweep_usually_improves() {
    let p = ProblemSpec::default();
    let n = 50;
    let dt = p.physics.step_duration(n);
    let cfg = KrotovConfig { update_scale: 0.1, ..Default::default() };
    let unbounded = ConstraintSpec::unbounded(n);
    let improved = (0..100u64)
        .filter(|&k| {
            let controls = random_controls(n, derive_seed(77, k));
            let states = forward_pass(&controls, &p.initial, dt, &p.physics);
            let before = fidelity(&states[n], &p.target);
            let chis = backward_pass(&controls, costate_init(&states[n], &p.target), dt, &p.physics);
            let (_, after) = krotov_update_sweep(&controls, &chis, &p.initial, &unbounded, dt, &p.physics, &cfg);
            fidelity(&after[n], &p.target) > before
        })
        .count();
    assert!(improved >= 90, "improved in {improved} of 100");
}

#[test]
fn sweep_states_match_fresh_propagation() {
    let p = ProblemSpec::default();
    let n = 12;
    let dt = p.physics.step_duration(n);
    let controls = random_controls(n, 5);
    let states = forward_pass(&controls, &p.initial, dt, &p.physics);
    let chis = backward_pass(&controls, costate_init(&states[n], &p.target), dt, &p.physics);
    let c = ConstraintSpec::bounded(0.0, 0.8, n);
    let (next, swept) = krotov_update_sweep(&controls, &chis, &p.initial, &c, dt, &p.physics, &KrotovConfig::default());
    assert!(next.iter().all(|v| (0.0..=0.8).contains(v)));
    let fresh = forward_pass(&next, &p.initial, dt, &p.physics);
    for (a, b) in swept.iter().zip(&fresh) {
        assert!((fidelity(a, b) - 1.0).abs() < 1e-12);
    }
}

fn check_common(r: &RunResult, p: &ProblemSpec) {
    let best = r.best_so_far();
    assert!(best.windows(2).all(|w| w[1] >= w[0]));
    assert!(r.fidelity_trace.iter().all(|f| f.is_finite() && (0.0..=1.0).contains(f)));
    assert!((p.fidelity_of(&r.best_sequence) - r.best_fidelity).abs() < 1e-12);
}

#[test]
fn sgd_and_krotov_respect_bounds() {
    let p = ProblemSpec::default();
    let c = ConstraintSpec::bounded(-0.5, 0.7, 15);
    for seed in 0..5 {
        let sgd = sgd_run(&p, &c, &SgdConfig { n_iter: 200, learn_rate: 1.0, ..Default::default() }, &mut rng_from_seed(seed), seed).unwrap();
        let kro = krotov_run(&p, &c, &KrotovConfig { n_iter: 50, ..Default::default() }, &mut rng_from_seed(seed), seed).unwrap();
        for r in [&sgd, &kro] {
            check_common(r, &p);
            assert!(r.best_sequence.values.iter().all(|v| (-0.5..=0.7).contains(v)));
        }
    }
}

/// Index of the first step whose fidelity is within `thr` of one, if any.
fn first_crossing(p: &ProblemSpec, values: &[f64], dt: f64, thr: f64) -> Option<usize> {
    (1..=values.len()).find(|&k| 1.0 - fidelity(&final_state(&p.initial, &values[..k], dt, &p.physics), &p.target) < thr)
}

#[test]
fn q_learning_stops_at_first_success() {
    let p = ProblemSpec::default();
    for (n, seed) in [(20usize, 1u64), (20, 2), (10, 3), (6, 4)] {
        let c = ConstraintSpec::discrete(0.0, 1.0, 1, n);
        let cfg = QlConfig { n_iter: 200, ..Default::default() };
        let (r, table) = ql_train(&p, &c, &cfg, &mut rng_from_seed(seed), seed).unwrap();
        check_common(&r, &p);
        assert!(table.values().iter().all(|v| v.is_finite()));
        assert_eq!(table.states(), 1800);
        let greedy = r.greedy.as_ref().unwrap();
        for seq in [&r.best_sequence, &greedy.sequence] {
            assert!(seq.len() <= n);
            match first_crossing(&p, &seq.values, seq.dt, cfg.success_threshold) {
                Some(k) => assert_eq!(k, seq.len()),
                None => assert_eq!(seq.len(), n),
            }
        }
    }
}

#[test]
fn loss_falls_under_repeated_training() {
    let mut rng = rng_from_seed(8);
    for _ in 0..10 {
        let mut net = DenseNet::new(&[4, 16, 16, 3], &mut rng).unwrap();
        let input: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (action, target) = (rng.random_range(0..3), rng.random_range(-1.0..1.0));
        let mut last = f64::INFINITY;
        for _ in 0..100 {
            let loss = net.train_step(&input, action, target, 1e-2).unwrap();
            assert!(loss < last || loss < 1e-12, "loss rose from {last} to {loss}");
            last = loss;
        }
    }
}

#[test]
fn target_network_only_moves_on_sync() {
    let cfg = DqlConfig { sync_every: 7, batch_size: 4, ..Default::default() };
    let mut rng = rng_from_seed(12);
    let mut agent = DqlAgent::new(2, &cfg, &mut rng).unwrap();
    for k in 0..20 {
        let psi = QubitState::new(
            num_complex::Complex64::new(rng.random_range(-1.0..1.0), 0.3),
            num_complex::Complex64::new(0.2, rng.random_range(-1.0..1.0)),
        )
        .unwrap();
        let s = encode(&psi);
        agent.memory.remember(Experience { prev_state: s, action: k % 2, reward: 0.01, next_state: s, terminal: k % 3 == 0 });
    }
    let probe = [0.6, 0.0, 0.0, 0.8];
    let mut frozen = agent.target_net.forward(&probe).unwrap();
    for call in 1..=30 {
        agent.learn(&cfg, &mut rng).unwrap();
        let now = agent.target_net.forward(&probe).unwrap();
        if call % cfg.sync_every == 0 {
            assert_eq!(agent.target_net, agent.eval_net);
            frozen = now;
        } else {
            assert_eq!(now, frozen);
        }
    }
    assert_eq!(agent.syncs, 30 / 7);
}

#[test]
fn dql_is_seed_deterministic_and_stores_unit_states() {
    let p = ProblemSpec::default();
    let c = ConstraintSpec::discrete(0.0, 1.0, 1, 10);
    let cfg = DqlConfig { n_iter: 40, ..Default::default() };
    let (a, agent) = dql_train(&p, &c, &cfg, &mut rng_from_seed(21), 21).unwrap();
    let (b, _) = dql_train(&p, &c, &cfg, &mut rng_from_seed(21), 21).unwrap();
    assert_eq!(a, b);
    check_common(&a, &p);
    for e in agent.memory.iter() {
        for s in [e.prev_state, e.next_state] {
            let n: f64 = s.0.iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() < 1e-10);
        }
        assert!(e.action < 2);
    }
}

#[test]
fn noise_never_helps_a_perfect_pulse() {
    let p = ProblemSpec::default();
    let seq = qsp_core::ControlSequence::new(vec![0.0; 5], p.physics.step_duration(20));
    assert!((p.fidelity_of(&seq) - 1.0).abs() < 1e-12);
    let mut rng = rng_from_seed(4);
    assert_eq!(noise_eval(&seq, 0.0, 100, &p, &mut rng), p.fidelity_of(&seq));
    let mut prev = 1.0 + 1e-12;
    for eps in [0.05, 0.1, 0.2, 0.3] {
        let f = noise_eval(&seq, eps, 200, &p, &mut rng);
        assert!(f <= prev, "ε={eps}: {f} > {prev}");
        prev = f;
    }
}
