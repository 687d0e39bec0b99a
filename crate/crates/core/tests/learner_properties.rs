use dtap_core::learner::{
    giga_wolf_update, gradient, wpl_delta, wpl_step, Algorithm, GigaWolfState, LearnerConfig, LearnerState,
    ValueEstimate,
};
use dtap_core::policy::{project, sample, GradientVector, Policy};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_policy(rng: &mut ChaCha8Rng, n: usize) -> Policy {
    let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
    let s: f64 = w.iter().sum();
    project(&w.iter().map(|x| x / s).collect::<Vec<_>>(), 0.0).unwrap()
}

fn cfg(algorithm: Algorithm, eta: f64, floor: f64) -> LearnerConfig {
    LearnerConfig {
        eta,
        alpha: 0.1,
        epsilon_floor: floor,
        algorithm,
    }
}

#[test]
fn wpl_step_sign_and_magnitude() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10_000 {
        let n = rng.random_range(2..=5);
        let p = random_policy(&mut rng, n);
        let g = GradientVector::new((0..n).map(|_| rng.random_range(-50.0..50.0)).collect()).unwrap();
        let eta = rng.random_range(1e-6..0.1);
        let delta = wpl_delta(&p, &g, eta).unwrap();
        for j in 0..n {
            assert!(delta[j] == 0.0 || delta[j].signum() == g[j].signum());
            assert!(delta[j].abs() <= eta * g[j].abs() + 1e-15);
        }
    }
}

#[test]
fn gradient_is_centred() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let n = rng.random_range(1..=5);
        let p = random_policy(&mut rng, n);
        let v = ValueEstimate::from_values((0..n).map(|_| rng.random_range(-500.0..0.0)).collect()).unwrap();
        let g = gradient(&v, &p).unwrap();
        let s: f64 = (0..n).map(|j| p[j] * g[j]).sum();
        assert!(s.abs() < 1e-9, "{s}");
    }
}

#[test]
fn giga_wolf_delta_and_segment() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10_000 {
        let n = rng.random_range(2..=5);
        let p = random_policy(&mut rng, n);
        let z = GigaWolfState {
            z: random_policy(&mut rng, n),
        };
        let g = GradientVector::new((0..n).map(|_| rng.random_range(-5.0..5.0)).collect()).unwrap();
        let c = cfg(Algorithm::GigaWolf, rng.random_range(1e-4..0.2), 0.0);
        let step = giga_wolf_update(&p, &z, &g, &c).unwrap();
        assert!((0.0..=1.0).contains(&step.delta));
        for j in 0..n {
            let expected = step.fast[j] + step.delta * (step.baseline[j] - step.fast[j]);
            assert!((step.policy[j] - expected).abs() < 1e-12);
        }
        // the baseline does not depend on z
        let other = GigaWolfState {
            z: random_policy(&mut rng, n),
        };
        let again = giga_wolf_update(&p, &other, &g, &c).unwrap();
        assert_eq!(again.baseline, step.baseline);
    }
}

#[test]
fn two_action_bandit_rises_in_expectation() {
    let c = LearnerConfig {
        eta: 0.005,
        alpha: 0.5,
        epsilon_floor: 0.01,
        algorithm: Algorithm::Wpl,
    };
    let reward = |a: usize| if a == 0 { -1.0 } else { -10.0 };
    let mut state = LearnerState::new(2, &c).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    // warm-up so both estimates are informed
    for a in [0, 1, 0, 1, 0, 1] {
        state.observe(a, reward(a), &c).unwrap();
    }
    for _ in 0..20_000 {
        // exhaustive expectation over the sampled action
        let expected: f64 = (0..2)
            .map(|a| {
                let mut next = state.clone();
                next.observe(a, reward(a), &c).unwrap();
                state.policy[a] * next.policy[0]
            })
            .sum();
        assert!(expected >= state.policy[0] - 1e-12);
        let a = sample(&state.policy, &mut rng);
        state.observe(a, reward(a), &c).unwrap();
    }
    assert!((state.policy[0] - 0.99).abs() < 1e-6);
}

#[test]
fn paired_learners_agree_on_direction() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let p0 = rng.random_range(0.2..0.8);
        let p = Policy::new(vec![p0, 1.0 - p0]).unwrap();
        let g0 = rng.random_range(-1.0..1.0);
        let g = GradientVector::new(vec![g0, -g0]).unwrap();
        let eta = 0.01;
        let wpl = wpl_step(&p, &g, &cfg(Algorithm::Wpl, eta, 0.0)).unwrap();
        // z at the far vertex forces delta = 1
        let far = GigaWolfState {
            z: Policy::deterministic(2, if g0 > 0.0 { 1 } else { 0 }).unwrap(),
        };
        let giga = giga_wolf_update(&p, &far, &g, &cfg(Algorithm::GigaWolf, eta, 0.0)).unwrap();
        assert_eq!(giga.delta, 1.0);
        assert_eq!((wpl[0] - p0).signum(), g0.signum());
        assert_eq!((giga.policy[0] - p0).signum(), g0.signum());
    }
}

proptest! {
    #[test]
    fn wpl_zero_gradient_invariance(w in prop::collection::vec(0.01f64..1.0, 2..=5), eta in 1e-6f64..1.0) {
        let s: f64 = w.iter().sum();
        let p = project(&w.iter().map(|x| x / s).collect::<Vec<_>>(), 0.0).unwrap();
        let next = wpl_step(&p, &GradientVector::zeros(p.len()), &cfg(Algorithm::Wpl, eta, 0.0)).unwrap();
        for j in 0..p.len() {
            prop_assert!((next[j] - p[j]).abs() <= 1e-12);
        }
    }

    #[test]
    fn learners_emit_valid_floored_policies(
        rewards in prop::collection::vec((0usize..5, -300.0f64..0.0), 1..200),
        giga in any::<bool>(),
    ) {
        let algorithm = if giga { Algorithm::GigaWolf } else { Algorithm::Wpl };
        let c = LearnerConfig { eta: 0.01, alpha: 0.3, epsilon_floor: 0.01, algorithm };
        let mut s = LearnerState::new(5, &c).unwrap();
        for (a, r) in rewards {
            s.observe(a, r, &c).unwrap();
            let sum: f64 = s.policy.as_slice().iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(s.policy.as_slice().iter().all(|&x| x >= 0.01 - 1e-12));
        }
    }
}
