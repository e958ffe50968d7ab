//! Active learning must pick unlabeled positions uniformly.

use densdrift::knowledge::{active_learn, LabelBudget};
use densdrift::stream::{ClassId, Instance, LabelOracle, Window};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const N: usize = 50;

fn window() -> (Window, LabelOracle) {
    let mut oracle = LabelOracle::new();
    let instances = (0..N as u64)
        .map(|i| {
            oracle.register(i, ClassId((i % 2) as u32));
            Instance::new(i, vec![i as f64]).unwrap()
        })
        .collect();
    (Window::new(instances).unwrap(), oracle)
}

#[test]
fn selected_positions_are_uniform() {
    let budget = LabelBudget::new(0.2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut counts = [0u64; N];
    let trials = 4_000;
    for _ in 0..trials {
        let (w, mut oracle) = window();
        let rl = active_learn(&w, &mut oracle, budget, &mut rng);
        assert_eq!(rl.len(), 10);
        for e in rl.entries() {
            counts[e.instance.index as usize] += 1;
        }
    }
    let expected = (trials * 10) as f64 / N as f64;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let critical = ChiSquared::new((N - 1) as f64).unwrap().inverse_cdf(0.999);
    assert!(chi2 < critical, "chi2 {chi2:.1} >= {critical:.1}");
}

#[test]
fn given_labels_are_kept_and_not_charged() {
    let budget = LabelBudget::new(0.2).unwrap();
    let mut oracle = LabelOracle::new();
    let instances: Vec<Instance> = (0..N as u64)
        .map(|i| {
            oracle.register(i, ClassId(1));
            let inst = Instance::new(i, vec![0.0]).unwrap();
            if i < 4 {
                inst.with_label(ClassId(1))
            } else {
                inst
            }
        })
        .collect();
    let w = Window::new(instances).unwrap();
    let rl = active_learn(&w, &mut oracle, budget, &mut ChaCha8Rng::seed_from_u64(1));
    assert_eq!(rl.len(), 10);
    assert_eq!(oracle.query_count(), 6);
    assert!((0..4).all(|i| rl.contains(i)));
}
