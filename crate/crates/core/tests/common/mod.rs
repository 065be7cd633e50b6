//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use hfhe::data_io::ScenarioMatrix;
use hfhe::lottery::Lottery;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// Uniform point on the simplex.
pub fn simplex_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub fn uniform_matrix(
    rng: &mut ChaCha8Rng,
    t: usize,
    n: usize,
    lo: f64,
    hi: f64,
) -> ScenarioMatrix {
    let data = (0..t * n).map(|_| rng.gen_range(lo..hi)).collect();
    ScenarioMatrix::from_flat(t, n, data).unwrap()
}

/// One-factor daily returns: `μ + σ_f·f_t + σ_e·e_kt`.
pub fn factor_matrix(seed: u64, t: usize, n: usize) -> ScenarioMatrix {
    let mut rng = rng(seed);
    let z = Normal::new(0.0, 1.0).unwrap();
    let drift: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..0.0008)).collect();
    let mut data = Vec::with_capacity(t * n);
    for _ in 0..t {
        let f: f64 = z.sample(&mut rng);
        for d in &drift {
            data.push(d + 0.008 * f + 0.012 * z.sample(&mut rng));
        }
    }
    ScenarioMatrix::from_flat(t, n, data).unwrap()
}

/// Lottery with 1..=8 outcomes in `[lo, hi]` and random probabilities.
pub fn lottery(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Lottery {
    let k = rng.gen_range(1..=8);
    let outcomes = (0..k).map(|_| rng.gen_range(lo..hi)).collect();
    Lottery::new(outcomes, simplex_point(rng, k)).unwrap()
}

/// Lottery with at least one strictly positive and one strictly negative outcome.
pub fn mixed_lottery(rng: &mut ChaCha8Rng) -> Lottery {
    let k = rng.gen_range(2..=8);
    let mut outcomes: Vec<f64> = (0..k).map(|_| rng.gen_range(-100.0..100.0)).collect();
    outcomes[0] = rng.gen_range(0.5..100.0);
    outcomes[1] = -rng.gen_range(0.5..100.0);
    Lottery::new(outcomes, simplex_point(rng, k)).unwrap()
}

/// Every simplex point whose coordinates are multiples of `1/steps`.
pub fn simplex_grid(n: usize, steps: usize, mut visit: impl FnMut(&[f64])) {
    fn rec(k: usize, left: usize, steps: usize, cur: &mut Vec<f64>, visit: &mut dyn FnMut(&[f64])) {
        if k + 1 == cur.len() {
            cur[k] = left as f64 / steps as f64;
            visit(cur);
            return;
        }
        for i in 0..=left {
            cur[k] = i as f64 / steps as f64;
            rec(k + 1, left - i, steps, cur, visit);
        }
    }
    let mut cur = vec![0.0; n];
    rec(0, steps, steps, &mut cur, &mut visit);
}
