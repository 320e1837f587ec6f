mod common;

use common::*;
use smi_core::linalg::{frob_sq, re_inner};
use smi_core::*;

fn long_run(objective: Objective, init: Init, seed: u64) -> OptimizerConfig64 {
    OptimizerConfig {
        max_iters: 3000,
        grad_norm_tol: 1e-10,
        objective,
        init,
        seed,
        ..OptimizerConfig::default()
    }
}

/// Water-filling over gains `a`: maximises `Σ ln(1 + a_i p_i)` with `Σ p_i = P`.
fn water_fill(gains: &[f64], power: f64) -> f64 {
    let mut a: Vec<f64> = gains.to_vec();
    a.sort_by(|x, y| y.partial_cmp(x).unwrap());
    for active in (1..=a.len()).rev() {
        let inv: f64 = a[..active].iter().map(|g| 1.0 / g).sum();
        let level = (power + inv) / active as f64;
        if level > 1.0 / a[active - 1] {
            return a[..active].iter().map(|g| (g * level).ln()).sum();
        }
    }
    unreachable!()
}

#[test]
fn riemannian_gradient_is_tangent() {
    for seed in 0..30 {
        let inst = random_instance(6, 4, 3, 8, 10.0, seed);
        let p = inst.scenario.power_budget;
        let f = inst.precoder.scaled_to(p);
        let e = euclidean_gradient(&inst.corr, &f, &inst.scenario)
            .unwrap()
            .grad;
        let r = riemannian_gradient(&f, &e, p).unwrap();
        let inner = re_inner(f.matrix(), &r);
        assert!(inner.abs() <= 1e-12 * f.matrix().norm() * e.norm());
    }
}

#[test]
fn off_sphere_point_rejected() {
    let f = Precoder64::scaled_random(4, 2, 1.0, 3);
    let g = f.matrix().clone();
    assert!(matches!(
        riemannian_gradient(&f, &g, 2.0),
        Err(SmiError::OffSphere { .. })
    ));
}

#[test]
fn retraction_is_second_order() {
    let p = 1.5;
    let f = Precoder64::scaled_random(5, 3, p, 1);
    let raw = Precoder64::scaled_random(5, 3, 1.0, 2).into_matrix();
    let d = riemannian_gradient(&f, &raw, p).unwrap();
    let err = |t: f64| {
        let r = retract(&f, &(&d * C64::new(t, 0.0)), p).unwrap();
        assert!((r.power() - p).abs() <= 1e-12 * p);
        (r.matrix() - (f.matrix() + &d * C64::new(t, 0.0))).norm()
    };
    let (t1, t2) = (1e-2, 1e-3);
    let slope = (err(t1) / err(t2)).log10() / (t1 / t2).log10();
    assert!((slope - 2.0).abs() <= 0.2, "{slope}");

    let z = Precoder64::scaled_random(2, 1, 1.0, 3);
    let neg = -z.matrix().clone();
    assert!(matches!(
        retract(&z, &neg, 1.0),
        Err(SmiError::ZeroRetraction)
    ));
}

#[test]
fn armijo_accepts_full_step_on_linear_objective() {
    let p = 2.0;
    let f = Precoder64::scaled_random(4, 2, p, 5);
    let a = Precoder64::scaled_random(4, 2, 1.0, 6).into_matrix();
    // L(F) = Re tr(F Aᴴ) has ∂L/∂F* = A / 2
    let obj = |q: &Precoder64| Ok(re_inner(q.matrix(), &a));
    let g = riemannian_gradient(&f, &(&a * C64::new(0.5, 0.0)), p).unwrap();
    let cur = obj(&f).unwrap();
    let cfg = ArmijoConfig::<f64> {
        initial_step: 1e-3,
        ..ArmijoConfig::default()
    };
    let s = armijo_search(obj, &f, cur, &g, &g, p, &cfg).unwrap();
    assert_eq!(s.backtracks, 0);
    assert_eq!(s.evals, 1);
    assert!(s.value >= cur + 1e-4 * s.step * frob_sq(&g));
}

#[test]
fn armijo_backtracks_and_fails_as_expected() {
    let p = 1.0;
    let f = Precoder64::scaled_random(3, 1, p, 7);
    let g = riemannian_gradient(
        &f,
        &Precoder64::scaled_random(3, 1, 1.0, 8).into_matrix(),
        p,
    )
    .unwrap();
    let flat = |_: &Precoder64| Ok(0.0);
    let cfg = ArmijoConfig::<f64> {
        max_backtracks: 5,
        ..ArmijoConfig::default()
    };
    assert!(matches!(
        armijo_search(flat, &f, 0.0, &g, &g, p, &cfg),
        Err(SmiError::LineSearchFailure { backtracks: 5 })
    ));
    let neg = -g.clone();
    assert!(armijo_search(flat, &f, 0.0, &neg, &g, p, &cfg).is_err());

    // concave quadratic along the direction: needs several halvings
    let target = f.matrix() + &g * C64::new(1e-3, 0.0);
    let bowl = |q: &Precoder64| Ok(-frob_sq(&(q.matrix() - &target)));
    let cur = bowl(&f).unwrap();
    let s = armijo_search(bowl, &f, cur, &g, &g, p, &ArmijoConfig::default()).unwrap();
    assert!(s.backtracks > 0);
    assert_eq!(s.evals, s.backtracks + 1);
    assert!((s.step - 0.5f64.powi(s.backtracks as i32)).abs() < 1e-15);
}

#[test]
fn single_stream_optimum_from_random_start() {
    for seed in 0..3 {
        let inst = random_instance(5, 3, 1, 6, 0.0, 40 + seed);
        let s = Scenario64 {
            noise_power: 1.0,
            power_budget: 1.0,
            ..inst.scenario
        };
        let corr = inst.corr.with_rx_scaled(1.0 / inst.corr.r_rx().norm());
        let best = Precoder64::eigenbeam(&corr, 1, 1.0).unwrap();
        for objective in [Objective::AsymptoticSmi, Objective::UpperBoundSmi] {
            let opt = objective.value(&corr, &best, &s).unwrap();
            let trace =
                optimize_precoder(&corr, &s, &long_run(objective, Init::ScaledRandom, seed))
                    .unwrap();
            assert!(
                rel_err(trace.final_objective(), opt) <= 1e-6,
                "{} vs {opt}",
                trace.final_objective()
            );
        }
    }
}

#[test]
fn upper_bound_optimum_matches_water_filling() {
    let mut g = rng(9);
    let mu = [2.0, 1.0, 0.5, 0.1];
    let q = random_unitary(4, &mut g);
    let d = CMat64::from_diagonal(&nalgebra::DVector::from_iterator(
        4,
        mu.iter().map(|&m| C64::new(m, 0.0)),
    ));
    let r_tx = &q * d * q.adjoint();
    let b = steering_vector(2, 0.4);
    let r_rx = (&b * b.adjoint()) * C64::new(3.0, 0.0);
    let corr = CorrelationPair64::new(r_tx, r_rx, 4).unwrap();
    let s = Scenario64 {
        n_tx: 4,
        n_rx: 2,
        n_targets: 4,
        n_frames: 16,
        noise_power: 1.0,
        power_budget: 2.0,
        ..Scenario64::desk()
    };
    let lambda = 6.0;
    let gains: Vec<f64> = mu.iter().map(|m| lambda * m).collect();
    let oracle = water_fill(&gains, 2.0);
    let trace = baseline_ub_precoder(
        &corr,
        &s,
        &long_run(Objective::UpperBoundSmi, Init::ScaledRandom, 1),
    )
    .unwrap();
    assert!(
        rel_err(trace.final_objective(), oracle) <= 1e-6,
        "{} vs {oracle}",
        trace.final_objective()
    );
}

#[test]
fn optimiser_is_deterministic_and_monotone() {
    let inst = sector_instance(8, 4, 3, 16, 10.0, 4);
    let cfg = OptimizerConfig64::default();
    let a = optimize_precoder(&inst.corr, &inst.scenario, &cfg).unwrap();
    let b = optimize_precoder(&inst.corr, &inst.scenario, &cfg).unwrap();
    assert_eq!(a.precoder.matrix(), b.precoder.matrix());
    assert_eq!(a.records.len(), b.records.len());
    assert!(a.iterations() <= cfg.max_iters);
    for w in a.records.windows(2) {
        assert!(w[1].objective >= w[0].objective);
        assert!(w[1].step > 0.0);
    }
    let p = inst.scenario.power_budget;
    assert!((a.precoder.power() - p).abs() <= 1e-10 * p);
}

#[test]
fn cross_evaluation_favours_own_objective() {
    for seed in 0..3 {
        let inst = sector_instance(8, 4, 3, 8, 10.0, 20 + seed);
        let (c, s) = (&inst.corr, &inst.scenario);
        let cfg = OptimizerConfig64::default();
        let smi = optimize_precoder(c, s, &cfg).unwrap().precoder;
        let ub = baseline_ub_precoder(c, s, &cfg).unwrap().precoder;
        let a = |p: &Precoder64| smi_asymptotic(c, p, s).unwrap().nats;
        let u = |p: &Precoder64| smi_upper_bound(c, p, s).unwrap().nats;
        assert!(a(&smi) >= a(&ub) - 1e-6, "{} < {}", a(&smi), a(&ub));
        assert!(u(&ub) >= u(&smi) - 1e-6, "{} < {}", u(&ub), u(&smi));
        let eig = Precoder64::eigenbeam(c, 3, s.power_budget).unwrap();
        assert!(a(&smi) >= a(&eig));
    }
}

#[test]
fn isotropic_case_converges_to_equal_power() {
    let (n, n_rx, lambda_raw) = (4, 3, 2.5);
    let corr = CorrelationPair64::new(
        CMat64::identity(n, n),
        CMat64::identity(n_rx, n_rx) * C64::new(lambda_raw, 0.0),
        n,
    )
    .unwrap();
    let s = Scenario64 {
        n_tx: n,
        n_rx,
        n_targets: n,
        n_frames: 8,
        noise_power: 0.5,
        power_budget: 3.0,
        ..Scenario64::desk()
    };
    let lambda = lambda_raw / 0.5;
    let closed = (n * n_rx) as f64 * (1.0 + lambda * 3.0 / n as f64).ln();
    let trace = baseline_ub_precoder(
        &corr,
        &s,
        &long_run(Objective::UpperBoundSmi, Init::ScaledRandom, 2),
    )
    .unwrap();
    assert!(
        rel_err(trace.final_objective(), closed) <= 1e-6,
        "{} vs {closed}",
        trace.final_objective()
    );
    let gram = trace.precoder.gram_eigenvalues().unwrap();
    for g in gram {
        assert!((g - 3.0 / n as f64).abs() < 1e-4);
    }
}

#[test]
fn armijo_on_smi_instance() {
    let inst = sector_instance(8, 4, 3, 16, 10.0, 6);
    let (c, s) = (&inst.corr, &inst.scenario);
    let p = s.power_budget;
    let f = inst.precoder.scaled_to(p);
    let obj = |q: &Precoder64| Ok(smi_asymptotic(c, q, s)?.nats);
    let cur = obj(&f).unwrap();
    let g = riemannian_gradient(&f, &euclidean_gradient(c, &f, s).unwrap().grad, p).unwrap();
    let cfg = ArmijoConfig::default();
    let step = armijo_search(obj, &f, cur, &g, &g, p, &cfg).unwrap();
    assert!(step.backtracks <= 30 && step.value > cur);

    let tiny = &g * C64::new(1e-12, 0.0);
    let step = armijo_search(obj, &f, cur, &tiny, &g, p, &cfg).unwrap();
    assert_eq!(step.backtracks, 0);
}
