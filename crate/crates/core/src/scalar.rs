//! Scalar abstraction shared by every simulator and solver.
//!
//! All state types are generic over [`Real`], which is implemented for `f32`
//! and `f64`. Besides the usual float arithmetic the trait carries the few
//! random variates the simulators need, so that generic code never has to
//! spell out `rand_distr` bounds.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Poisson, StandardNormal};

/// Floating point scalar usable by the simulators: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only if the value is not representable,
    /// which cannot happen for finite literals and `f32`/`f64`.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Exponential variate with unit rate.
    fn exp1<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Uniform on `[0, 1)`.
    fn uniform01<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Poisson count with mean `lambda`; zero for non-positive or non-finite means.
    fn poisson<R: Rng + ?Sized>(lambda: Self, rng: &mut R) -> u64;

    /// Gamma variate with integer-or-real `shape > 0` and `scale > 0`.
    fn gamma<R: Rng + ?Sized>(shape: Self, scale: Self, rng: &mut R) -> Self;
}

macro_rules! impl_real {
    ($f:ty) => {
        impl Real for $f {
            #[inline]
            fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardNormal.sample(rng)
            }

            #[inline]
            fn exp1<R: Rng + ?Sized>(rng: &mut R) -> Self {
                Exp1.sample(rng)
            }

            #[inline]
            fn uniform01<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.random::<$f>()
            }

            fn poisson<R: Rng + ?Sized>(lambda: Self, rng: &mut R) -> u64 {
                if !(lambda > 0.0) || !lambda.is_finite() {
                    return 0;
                }
                // Small means dominate near-boundary sites; inversion is cheaper
                // than building a distribution object.
                if lambda < 10.0 {
                    let mut k = 0u64;
                    let mut p = (-lambda).exp();
                    let mut cdf = p;
                    let u: $f = rng.random();
                    while u > cdf {
                        k += 1;
                        p *= lambda / k as $f;
                        cdf += p;
                        if p <= 0.0 {
                            break;
                        }
                    }
                    return k;
                }
                match Poisson::new(lambda) {
                    Ok(dist) => {
                        let v: $f = dist.sample(rng);
                        v as u64
                    }
                    Err(_) => lambda.round() as u64,
                }
            }

            fn gamma<R: Rng + ?Sized>(shape: Self, scale: Self, rng: &mut R) -> Self {
                Gamma::new(shape, scale)
                    .expect("gamma parameters positive and finite")
                    .sample(rng)
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn poisson_small_mean_matches_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        for &lambda in &[0.01f64, 0.7, 4.0, 25.0] {
            let draws: Vec<f64> = (0..n).map(|_| f64::poisson(lambda, &mut rng) as f64).collect();
            let mean = draws.iter().sum::<f64>() / n as f64;
            let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let se = (lambda / n as f64).sqrt();
            assert!((mean - lambda).abs() < 5.0 * se, "lambda={lambda} mean={mean}");
            assert!((var / lambda - 1.0).abs() < 0.05, "lambda={lambda} var={var}");
        }
    }

    #[test]
    fn poisson_degenerate_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(f64::poisson(0.0, &mut rng), 0);
        assert_eq!(f64::poisson(-1.0, &mut rng), 0);
        assert_eq!(f32::poisson(f32::NAN, &mut rng), 0);
    }
}
