use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::NnError;

/// Observed range of one scalar quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinMax {
    min: f64,
    max: f64,
}

impl MinMax {
    pub fn new(min: f64, max: f64) -> Option<Self> {
        (min.is_finite() && max.is_finite() && max > min).then_some(Self { min, max })
    }

    /// Range of `values`; `None` for empty, non-finite or constant data.
    pub fn fit(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let (min, max) = values
            .into_iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        Self::new(min, max)
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn span(&self) -> f64 {
        self.max - self.min
    }

    /// Maps [min, max] onto [0, 1]; values outside extrapolate linearly.
    pub fn normalize(&self, raw: f64) -> f64 {
        (raw - self.min) / self.span()
    }

    pub fn denormalize(&self, scaled: f64) -> f64 {
        self.min + scaled * self.span()
    }
}

/// Min-max scaling for the controller's input (error) and output (force).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    pub input: MinMax,
    pub output: MinMax,
}

impl Normalizer {
    pub fn normalize_input(&self, raw: f64) -> f64 {
        self.input.normalize(raw)
    }

    pub fn normalize_output(&self, raw: f64) -> f64 {
        self.output.normalize(raw)
    }

    pub fn inverse_input(&self, scaled: f64) -> f64 {
        self.input.denormalize(scaled)
    }

    pub fn inverse_output(&self, scaled: f64) -> f64 {
        self.output.denormalize(scaled)
    }
}

/// Normalized (input, target) pairs together with the scaling that produced
/// them.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    inputs: Vec<f64>,
    targets: Vec<f64>,
    normalizer: Normalizer,
}

/// Index partition of a [`TrainingSet`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl TrainingSet {
    /// Fits the normalizer on the raw pairs and scales them into [0, 1].
    pub fn from_raw(raw_inputs: &[f64], raw_targets: &[f64]) -> Result<Self, NnError> {
        if raw_inputs.len() != raw_targets.len() {
            return Err(NnError::InputShape {
                expected: raw_inputs.len(),
                found: raw_targets.len(),
            });
        }
        let input = MinMax::fit(raw_inputs.iter().copied()).ok_or(NnError::NonFiniteInput)?;
        let output = MinMax::fit(raw_targets.iter().copied()).ok_or(NnError::NonFiniteInput)?;
        let normalizer = Normalizer { input, output };
        Ok(Self {
            inputs: raw_inputs.iter().map(|&x| input.normalize(x)).collect(),
            targets: raw_targets.iter().map(|&y| output.normalize(y)).collect(),
            normalizer,
        })
    }

    /// Already-normalized pairs with an explicit normalizer.
    pub fn from_normalized(
        inputs: Vec<f64>,
        targets: Vec<f64>,
        normalizer: Normalizer,
    ) -> Result<Self, NnError> {
        if inputs.len() != targets.len() {
            return Err(NnError::InputShape {
                expected: inputs.len(),
                found: targets.len(),
            });
        }
        if inputs.iter().chain(&targets).any(|v| !v.is_finite()) {
            return Err(NnError::NonFiniteInput);
        }
        Ok(Self {
            inputs,
            targets,
            normalizer,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            inputs: indices.iter().map(|&i| self.inputs[i]).collect(),
            targets: indices.iter().map(|&i| self.targets[i]).collect(),
            normalizer: self.normalizer,
        }
    }

    /// Seeded shuffle into train / validation / test partitions. Partition
    /// sizes are rounded from the fractions; the training part gets the rest.
    pub fn split(&self, val_fraction: f64, test_fraction: f64, seed: u64) -> Split {
        let n = self.len();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_val = ((n as f64) * val_fraction).round() as usize;
        let n_test = ((n as f64) * test_fraction).round() as usize;
        let n_held = (n_val + n_test).min(n.saturating_sub(1));
        let n_val = n_val.min(n_held);
        let test = idx.split_off(n - (n_held - n_val));
        let validation = idx.split_off(idx.len() - n_val);
        Split {
            train: idx,
            validation,
            test,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bounds_and_midpoint() {
        let m = MinMax::new(-2.0, 6.0).unwrap();
        assert_eq!(m.normalize(-2.0), 0.0);
        assert_eq!(m.normalize(6.0), 1.0);
        assert_eq!(m.normalize(2.0), 0.5);
        // no clamping outside the fitted range
        assert_eq!(m.normalize(10.0), 1.5);
    }

    #[test]
    fn degenerate_ranges_are_rejected() {
        assert!(MinMax::new(1.0, 1.0).is_none());
        assert!(MinMax::new(2.0, 1.0).is_none());
        assert!(MinMax::fit([]).is_none());
        assert!(MinMax::fit([3.0, 3.0]).is_none());
        assert!(TrainingSet::from_raw(&[1.0, 2.0], &[5.0, 5.0]).is_err());
    }

    #[test]
    fn training_set_values_in_unit_interval() {
        let xs: Vec<f64> = (0..50).map(|k| (k as f64 * 0.37).sin()).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x * x - 1.0).collect();
        let set = TrainingSet::from_raw(&xs, &ys).unwrap();
        assert!(set
            .inputs()
            .iter()
            .chain(set.targets())
            .all(|v| (-1e-12..=1.0 + 1e-12).contains(v)));
    }

    #[test]
    fn split_is_a_seeded_partition() {
        let xs: Vec<f64> = (0..100).map(f64::from).collect();
        let set = TrainingSet::from_raw(&xs, &xs).unwrap();
        let a = set.split(0.15, 0.15, 9);
        assert_eq!(
            (a.train.len(), a.validation.len(), a.test.len()),
            (70, 15, 15)
        );
        let mut all: Vec<usize> = a
            .train
            .iter()
            .chain(&a.validation)
            .chain(&a.test)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert_eq!(set.split(0.15, 0.15, 9), a);
        assert_ne!(set.split(0.15, 0.15, 10), a);
        let none = set.split(0.0, 0.0, 9);
        assert_eq!(none.train.len(), 100);
    }

    proptest! {
        #[test]
        fn round_trip(lo in -1e3..1e3f64, width in 1e-3..1e3f64, t in -0.5..1.5f64) {
            let m = MinMax::new(lo, lo + width).unwrap();
            let raw = m.denormalize(t);
            prop_assert!((m.denormalize(m.normalize(raw)) - raw).abs() <= 1e-12 * raw.abs().max(1.0));
        }
    }
}
