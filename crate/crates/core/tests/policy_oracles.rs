use dtap_core::policy::{entropy, project, sample, Policy};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Exact nearest point of `{p : sum p = 1, p >= floor}` by enumerating every
/// candidate free set S (coordinates above the floor). For a fixed S the
/// equality-constrained minimiser is `p_S = v_S - theta`, the rest pinned at
/// the floor; the best feasible candidate is the projection.
fn brute_force_projection(v: &[f64], floor: f64) -> Vec<f64> {
    let n = v.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << n) {
        let free: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let pinned = (n - free.len()) as f64 * floor;
        let theta = (free.iter().map(|&i| v[i]).sum::<f64>() - (1.0 - pinned)) / free.len() as f64;
        let mut p = vec![floor; n];
        let mut feasible = true;
        for &i in &free {
            p[i] = v[i] - theta;
            if p[i] < floor - 1e-12 {
                feasible = false;
            }
        }
        if !feasible {
            continue;
        }
        let d: f64 = p.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, p));
        }
    }
    best.expect("some free set is always feasible").1
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[test]
fn projection_matches_enumeration_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let n = rng.random_range(2..=6);
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let fast = project(&v, 0.0).unwrap();
        let slow = brute_force_projection(&v, 0.0);
        for (a, b) in fast.as_slice().iter().zip(&slow) {
            assert!((a - b).abs() <= 1e-6, "{v:?}: {fast:?} vs {slow:?}");
        }
    }
}

#[test]
fn floored_projection_matches_enumeration_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let n = rng.random_range(2..=6);
        let floor = rng.random_range(0.0..0.9 / n as f64);
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.5)).collect();
        let fast = project(&v, floor).unwrap();
        let slow = brute_force_projection(&v, floor);
        for (a, b) in fast.as_slice().iter().zip(&slow) {
            assert!((a - b).abs() <= 1e-6, "{v:?} floor {floor}: {fast:?} vs {slow:?}");
        }
    }
}

#[test]
fn no_grid_point_is_closer() {
    let step = 0.01;
    let grid: Vec<[f64; 3]> = (0..=100)
        .flat_map(|i| (0..=100 - i).map(move |j| [i as f64 * step, j as f64 * step, (100 - i - j) as f64 * step]))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..50 {
        let v: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.5)).collect();
        let p = project(&v, 0.0).unwrap();
        let d = dist2(p.as_slice(), &v).sqrt();
        let grid_best = grid
            .iter()
            .map(|g| dist2(g, &v).sqrt())
            .fold(f64::INFINITY, f64::min);
        assert!(d <= grid_best + 1e-12, "projection further than a grid point");
        // the grid point nearest the projection is within 2 grid steps
        assert!(grid_best <= d + 2.0 * step);
    }
}

#[test]
fn uniform_entropy_is_log2_n() {
    for n in 2..=5 {
        let h = entropy(&Policy::uniform(n).unwrap());
        assert!((h - (n as f64).log2()).abs() < 1e-12);
    }
}

#[test]
fn empirical_sampling_frequencies() {
    let p = Policy::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut counts = [0u64; 4];
    for _ in 0..100_000 {
        counts[sample(&p, &mut rng)] += 1;
    }
    for (c, q) in counts.iter().zip(p.as_slice()) {
        assert!((*c as f64 / 1e5 - q).abs() < 0.01);
    }
}

fn raw_vector() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, 1..=6)
}

proptest! {
    #[test]
    fn projection_is_idempotent(v in raw_vector(), frac in 0.0f64..0.99) {
        let floor = frac / v.len() as f64;
        let once = project(&v, floor).unwrap();
        let twice = project(once.as_slice(), floor).unwrap();
        for (a, b) in once.as_slice().iter().zip(twice.as_slice()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn projection_lands_on_floored_simplex(v in raw_vector(), frac in 0.0f64..0.99) {
        let floor = frac / v.len() as f64;
        let p = project(&v, floor).unwrap();
        let sum: f64 = p.as_slice().iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-9);
        prop_assert!(p.as_slice().iter().all(|&x| x >= floor - 1e-12 && x <= 1.0));
    }

    #[test]
    fn entropy_bounds_and_permutation(v in prop::collection::vec(0.0f64..1.0, 1..=6), rot in 0usize..6) {
        let p = project(&v, 0.0).unwrap();
        let h = entropy(&p);
        let n = p.len() as f64;
        prop_assert!(h >= 0.0 && h <= n.log2() + 1e-12);
        let mut rotated = p.as_slice().to_vec();
        let k = rot % rotated.len();
        rotated.rotate_left(k);
        let q = Policy::new(rotated).unwrap();
        prop_assert!((entropy(&q) - h).abs() <= 1e-12);
    }
}
