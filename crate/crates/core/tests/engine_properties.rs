mod common;

use common::{close, random_model};
use qzone::engine::{
    run_classical_baseline, run_direct, run_hybrid, HybridConfig, InitPolicy, RunTrajectory, Selection,
    TerminationReason,
};
use qzone::subsolvers::{solve_exact, SolverKind, SubSolverConfig, DEFAULT_EXACT_CAP};
use qzone::zoning::{build_qubo, generate_instance};
use qzone::{Assignment, QuboModel};

fn check_trajectory(m: &QuboModel, t: &RunTrajectory) {
    for (k, r) in t.iterations.iter().enumerate() {
        assert_eq!(r.iteration, k + 1);
        if r.accepted {
            assert!(r.objective_after < r.objective_before);
        } else {
            assert_eq!(r.objective_after, r.objective_before);
        }
        if let Some(next) = t.iterations.get(k + 1) {
            assert_eq!(next.objective_before, r.objective_after);
        }
    }
    assert!(t.incumbent_objectives().windows(2).all(|w| w[1] <= w[0]));
    let last = t.iterations.last().unwrap().objective_after;
    assert!(close(t.final_partition.objective, last));
    assert!(close(m.evaluate(&t.final_partition.assignment).unwrap(), last));
}

#[test]
fn full_active_set_with_exact_equals_enumeration() {
    for s in 0..10u64 {
        let inst = generate_instance(2 + s as usize % 3, 3, 3, s).unwrap();
        let m = build_qubo(&inst).unwrap();
        let n = m.num_vars();
        let cfg = HybridConfig {
            q: n,
            subsolver: SubSolverConfig::new(SolverKind::Exact, s),
            seed: s,
            ..HybridConfig::default()
        };
        let t = run_hybrid(&m, &cfg).unwrap();
        check_trajectory(&m, &t);
        let opt = solve_exact(&m, DEFAULT_EXACT_CAP).unwrap();
        assert!(close(t.final_partition.objective, opt.energy));
    }
}

#[test]
fn every_policy_gives_monotone_consistent_trajectories() {
    let m = build_qubo(&generate_instance(5, 5, 3, 2).unwrap()).unwrap();
    for selection in [Selection::Impact, Selection::Random, Selection::RoundRobin] {
        for kind in [
            SolverKind::Auto,
            SolverKind::Anneal,
            SolverKind::Tabu,
            SolverKind::Greedy,
            SolverKind::Exact,
        ] {
            for init in [InitPolicy::Zeros, InitPolicy::Random, InitPolicy::Greedy] {
                let cfg = HybridConfig {
                    q: 7,
                    selection,
                    subsolver: SubSolverConfig::new(kind, 3).with_budget(50),
                    init,
                    seed: 3,
                    max_iterations: 8,
                    ..HybridConfig::default()
                };
                let t = run_hybrid(&m, &cfg).unwrap();
                check_trajectory(&m, &t);
                assert_eq!(t, run_hybrid(&m, &cfg).unwrap());
            }
        }
    }
}

#[test]
fn zero_model_stays_at_constant() {
    let m = QuboModel::constant_only(10, 4.5).unwrap();
    let cfg = HybridConfig {
        q: 3,
        subsolver: SubSolverConfig::new(SolverKind::Anneal, 0),
        ..HybridConfig::default()
    };
    let t = run_hybrid(&m, &cfg).unwrap();
    assert_eq!(t.termination_reason, TerminationReason::Patience);
    assert_eq!(t.iterations.len(), 2);
    assert!(t.incumbent_objectives().iter().all(|&e| e == 4.5));
}

#[test]
fn warm_start_overrides_init() {
    let m = random_model(12, 4);
    let warm = Assignment::from_bits(vec![true; 12]);
    let cfg = HybridConfig {
        q: 4,
        warm_start: Some(warm.clone()),
        max_iterations: 1,
        ..HybridConfig::default()
    };
    let t = run_hybrid(&m, &cfg).unwrap();
    assert_eq!(t.iterations[0].objective_before, m.evaluate(&warm).unwrap());
    let bad = HybridConfig {
        warm_start: Some(Assignment::zeros(5)),
        ..cfg
    };
    assert!(run_hybrid(&m, &bad).is_err());
}

#[test]
fn invalid_configs_are_rejected() {
    let m = random_model(30, 1);
    let exact_too_big = HybridConfig {
        q: 30,
        subsolver: SubSolverConfig::new(SolverKind::Exact, 0),
        ..HybridConfig::default()
    };
    assert!(run_hybrid(&m, &exact_too_big).is_err());
    assert!(run_hybrid(
        &m,
        &HybridConfig {
            q: 0,
            ..HybridConfig::default()
        }
    )
    .is_err());
    assert!(run_hybrid(
        &m,
        &HybridConfig {
            patience: 0,
            ..HybridConfig::default()
        }
    )
    .is_err());
    assert!(run_classical_baseline(&m, &HybridConfig::default()).is_err());
    assert!(run_direct(&m, &SubSolverConfig::new(SolverKind::Exact, 0)).is_err());
}

#[test]
fn direct_exact_is_optimal() {
    let m = build_qubo(&generate_instance(3, 3, 2, 5).unwrap()).unwrap();
    let t = run_direct(&m, &SubSolverConfig::new(SolverKind::Exact, 0)).unwrap();
    assert_eq!(t.iterations.len(), 1);
    assert!(close(t.final_partition.objective, solve_exact(&m, 24).unwrap().energy));
}

#[test]
fn failing_external_subsolver_counts_as_non_improving() {
    let m = random_model(8, 2);
    let mut sub = SubSolverConfig::new(SolverKind::External, 0);
    sub.params.external_command = vec!["sh".into(), "-c".into(), "exit 3".into()];
    let cfg = HybridConfig {
        q: 4,
        subsolver: sub,
        patience: 3,
        ..HybridConfig::default()
    };
    let t = run_hybrid(&m, &cfg).unwrap();
    assert_eq!(t.iterations.len(), 3);
    assert!(t.iterations.iter().all(|r| r.failed && !r.accepted));
    assert_eq!(t.termination_reason, TerminationReason::Patience);
}

#[test]
fn trajectory_csv_layout() {
    let m = random_model(10, 3);
    let t = run_hybrid(
        &m,
        &HybridConfig {
            q: 4,
            ..HybridConfig::default()
        },
    )
    .unwrap();
    let csv = t.to_csv_string();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "iteration,objective_before,objective_after,accepted,num_active,subsolver_evals"
    );
    assert_eq!(lines.count(), t.iterations.len());
}
