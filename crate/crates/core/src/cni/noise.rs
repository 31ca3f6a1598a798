use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Independent random streams derived from one run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    PrivacyNoise = 1,
    Smoothing = 2,
    IndexDraw = 3,
    Data = 4,
    Trial = 5,
}

/// SplitMix64 finaliser over `(seed, purpose)`.
pub fn derive_seed(seed: u64, purpose: u64) -> u64 {
    let mut z = seed ^ purpose.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform on `(0, 1]` with 53 random bits.
pub fn unit_open<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Two independent standard normals from two uniforms on `(0, 1]`.
pub fn box_muller(u1: f64, u2: f64) -> (f64, f64) {
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = std::f64::consts::TAU * u2;
    (r * theta.cos(), r * theta.sin())
}

/// Seeded standard-normal generator with one ChaCha stream per step.
///
/// [`GaussianStream::at_step`] rewinds to the start of stream `t`, so the
/// noise of step `t` depends only on `(seed, purpose, t)`.
#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: ChaCha8Rng,
    draws: u64,
}

impl GaussianStream {
    pub fn new(seed: u64, purpose: Purpose) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, purpose as u64)),
            draws: 0,
        }
    }

    pub fn at_step(&mut self, step: u64) -> &mut Self {
        self.rng.set_stream(step);
        self.rng.set_word_pos(0);
        self
    }

    /// Fills `out` with independent N(0, 1) draws.
    pub fn fill(&mut self, out: &mut [f64]) {
        let mut chunks = out.chunks_exact_mut(2);
        for pair in &mut chunks {
            let (a, b) = box_muller(unit_open(&mut self.rng), unit_open(&mut self.rng));
            pair[0] = a;
            pair[1] = b;
        }
        if let [last] = chunks.into_remainder() {
            *last = box_muller(unit_open(&mut self.rng), unit_open(&mut self.rng)).0;
        }
        self.draws += out.len() as u64;
    }

    /// Number of normals handed out so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// The underlying generator, positioned wherever the last call left it.
    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn purposes_give_distinct_seeds() {
        let seeds: Vec<u64> = [Purpose::PrivacyNoise, Purpose::Smoothing, Purpose::IndexDraw, Purpose::Data, Purpose::Trial]
            .iter()
            .map(|&p| derive_seed(7, p as u64))
            .collect();
        for i in 0..seeds.len() {
            for j in i + 1..seeds.len() {
                assert_ne!(seeds[i], seeds[j]);
            }
        }
        assert_ne!(derive_seed(0, 1), derive_seed(1, 1));
    }

    #[test]
    fn step_streams_are_replayable() {
        let mut a = GaussianStream::new(3, Purpose::PrivacyNoise);
        let mut b = GaussianStream::new(3, Purpose::PrivacyNoise);
        let mut x = [0.0; 5];
        let mut y = [0.0; 5];
        a.at_step(4).fill(&mut x);
        b.at_step(1).fill(&mut y);
        b.at_step(4).fill(&mut y);
        assert_eq!(x, y);
        a.at_step(5).fill(&mut y);
        assert_ne!(x, y);
        assert_eq!(a.draws(), 10);
    }

    #[test]
    fn normals_have_unit_moments() {
        let mut g = GaussianStream::new(11, Purpose::PrivacyNoise);
        let n = 200_000;
        let mut buf = vec![0.0; n];
        g.at_step(0).fill(&mut buf);
        let mean = buf.iter().sum::<f64>() / n as f64;
        let var = buf.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());
        assert!((var - 1.0).abs() < 0.02);
        let tail = buf.iter().filter(|v| v.abs() > 1.959_963_985).count() as f64 / n as f64;
        assert!((tail - 0.05).abs() < 0.003);
    }

    #[test]
    fn unit_open_never_returns_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10_000 {
            let u = unit_open(&mut rng);
            assert!(u > 0.0 && u <= 1.0);
        }
    }
}
