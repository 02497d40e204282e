use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Sample locations on the unit circle `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet<T> {
    locations: Vec<T>,
}

impl<T: Scalar> SampleSet<T> {
    pub fn new(locations: Vec<T>) -> Result<Self> {
        if let Some(i) = locations
            .iter()
            .position(|x| !(*x >= T::zero() && *x < T::one()))
        {
            return Err(Error::InvalidParams(format!(
                "sample #{i} = {} outside [0, 1)",
                locations[i]
            )));
        }
        Ok(Self { locations })
    }

    /// `n` i.i.d. uniform locations drawn from a ChaCha8 stream seeded by `seed`.
    pub fn uniform(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let below_one = T::one() - T::epsilon();
        let locations = (0..n)
            .map(|_| T::lit(rng.gen::<f64>()).min(below_one))
            .collect();
        Self { locations }
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn locations(&self) -> &[T] {
        &self.locations
    }

    /// Smallest circular distance between two distinct samples.
    pub fn min_separation(&self) -> Option<T> {
        if self.len() < 2 {
            return None;
        }
        let mut sorted = self.locations.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite locations"));
        let wrap = sorted[0] + T::one() - sorted[sorted.len() - 1];
        Some(
            sorted
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(wrap, T::min),
        )
    }
}
