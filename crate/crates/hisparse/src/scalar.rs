use nalgebra::ComplexField;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Scalar field of a signal: real (`f64`) or complex (`Complex64`).
///
/// The field is fixed by the type parameter, so mixed-field operations are
/// rejected at compile time. `ComplexField` supplies conjugation, modulus
/// and the embedding of reals.
pub trait Scalar: ComplexField<RealField = f64> + Copy + Send + Sync {
    const IS_COMPLEX: bool;

    /// Draw one entry with every real component i.i.d. standard normal.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    fn to_complex(self) -> Complex64;
}

impl Scalar for f64 {
    const IS_COMPLEX: bool = false;

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Scalar for Complex64 {
    const IS_COMPLEX: bool = true;

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    }

    fn to_complex(self) -> Complex64 {
        self
    }
}

/// Deterministic seed mixing for deriving independent RNG streams from a
/// master seed and a tuple of coordinates (splitmix64 chain). Stable across
/// platforms and releases; sweep reproducibility relies on it.
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        state ^= splitmix64(p.wrapping_add(state));
        state = splitmix64(state);
    }
    state
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
