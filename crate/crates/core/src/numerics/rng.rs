use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded, platform-independent random stream.
///
/// Backed by ChaCha8 (`rand_chacha`), whose output is specified bit-for-bit.
/// Child streams for independent work items come from [`Rng::split`], which
/// derives a fresh seed with SplitMix64 so that the child for index `i`
/// depends only on the parent seed and `i`, never on how much of the parent
/// stream has been consumed.
#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream number `index`.
    pub fn split(&self, index: u64) -> Rng {
        Rng::new(splitmix64(self.seed ^ splitmix64(index.wrapping_add(1))))
    }

    /// Uniform on `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Uniform on `[lo, hi]`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform on `[0, n)`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }
}

/// Draws a point with each coordinate independently uniform on `[lo_i, hi_i]`.
pub fn uniform_in_box(rng: &mut Rng, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    assert_eq!(lo.len(), hi.len(), "box bounds differ in length");
    lo.iter().zip(hi).map(|(&l, &h)| rng.uniform(l, h)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_box() {
        let mut rng = Rng::new(7);
        assert_eq!(uniform_in_box(&mut rng, &[0.0, 0.0], &[0.0, 0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn same_seed_same_draws() {
        let lo = [-1.0, -1.0];
        let hi = [1.0, 1.0];
        let a = uniform_in_box(&mut Rng::new(1), &lo, &hi);
        let b = uniform_in_box(&mut Rng::new(1), &lo, &hi);
        assert_eq!(a, b);
        assert!(a.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn split_is_stable_and_distinct() {
        let mut parent = Rng::new(42);
        let before = parent.split(3).next_f64();
        parent.next_f64();
        assert_eq!(before, parent.split(3).next_f64());
        assert_ne!(parent.split(3).next_f64(), parent.split(4).next_f64());
    }

    #[test]
    fn unit_box_mean() {
        let mut rng = Rng::new(99);
        let n = 100_000;
        let mut sum = [0.0; 3];
        for _ in 0..n {
            let p = uniform_in_box(&mut rng, &[0.0; 3], &[1.0; 3]);
            for (s, v) in sum.iter_mut().zip(&p) {
                *s += v;
            }
        }
        for s in sum {
            assert!((s / n as f64 - 0.5).abs() < 0.01);
        }
    }
}
