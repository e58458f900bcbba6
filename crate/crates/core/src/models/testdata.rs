use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two separated Gaussian-ish blobs in 2-D; positives near (2, 2).
pub fn blobs(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let pos = i % 2 == 0;
        let c = if pos { 2.0 } else { -2.0 };
        x.push(vec![
            c + rng.random_range(-1.0..1.0),
            c + rng.random_range(-1.0..1.0),
        ]);
        y.push(pos);
    }
    (x, y)
}

/// XOR quadrants with a 0.2 margin around both axes.
pub fn xor(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let sx = if i % 2 == 0 { 1.0 } else { -1.0 };
        let sy = if (i / 2) % 2 == 0 { 1.0 } else { -1.0 };
        x.push(vec![
            sx * rng.random_range(0.2..1.0),
            sy * rng.random_range(0.2..1.0),
        ]);
        y.push(sx * sy > 0.0);
    }
    (x, y)
}
