//! Observation index sets and the masked projection `P_Ω`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tensor::{check_shape, DenseTensor};

/// Set of observed entries of a tensor, stored as strictly increasing linear
/// indices under the tensor linearization (first index fastest).
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ObservationMask {
    shape: Vec<usize>,
    observed: Vec<usize>,
}

impl ObservationMask {
    pub fn new(shape: Vec<usize>, observed: Vec<usize>) -> Result<Self> {
        let len = check_shape(&shape)?;
        if observed.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::MaskNotSorted);
        }
        if let Some(&last) = observed.last() {
            if last >= len {
                return Err(Error::MaskIndexOutOfBounds { index: last, len });
            }
        }
        Ok(Self { shape, observed })
    }

    /// Sorts and deduplicates `indices` before validating.
    pub fn from_unsorted(shape: Vec<usize>, mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        Self::new(shape, indices)
    }

    pub fn full(shape: &[usize]) -> Result<Self> {
        let len = check_shape(shape)?;
        Ok(Self {
            shape: shape.to_vec(),
            observed: (0..len).collect(),
        })
    }

    pub fn empty(shape: &[usize]) -> Result<Self> {
        check_shape(shape)?;
        Ok(Self {
            shape: shape.to_vec(),
            observed: Vec::new(),
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn indices(&self) -> &[usize] {
        &self.observed
    }

    pub fn total(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn count(&self) -> usize {
        self.observed.len()
    }

    pub fn is_full(&self) -> bool {
        self.observed.len() == self.total()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    pub fn observed_fraction(&self) -> f64 {
        self.count() as f64 / self.total() as f64
    }

    /// Root mean square of the observed entries of `t` (0 for an empty mask).
    pub fn observed_rms(&self, t: &DenseTensor) -> Result<f64> {
        if t.shape() != self.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape.clone(),
                found: t.shape().to_vec(),
            });
        }
        if self.observed.is_empty() {
            return Ok(0.0);
        }
        let sum: f64 = self.observed.iter().map(|&i| t.data()[i] * t.data()[i]).sum();
        Ok(libm::sqrt(sum / self.observed.len() as f64))
    }

    pub fn contains(&self, linear: usize) -> bool {
        self.observed.binary_search(&linear).is_ok()
    }

    /// Dense membership bitmap, one flag per entry.
    pub fn bitmap(&self) -> Vec<bool> {
        let mut flags = alloc::vec![false; self.total()];
        for &i in &self.observed {
            flags[i] = true;
        }
        flags
    }

    /// Linear indices of the unobserved entries.
    pub fn complement(&self) -> Vec<usize> {
        let flags = self.bitmap();
        (0..flags.len()).filter(|&i| !flags[i]).collect()
    }

    fn check_tensor(&self, t: &DenseTensor) -> Result<()> {
        if t.shape() != self.shape.as_slice() {
            return Err(Error::ShapeMismatch {
                expected: self.shape.clone(),
                found: t.shape().to_vec(),
            });
        }
        Ok(())
    }

    /// `P_Ω(t)`: observed entries copied, everything else zero.
    pub fn project(&self, t: &DenseTensor) -> Result<DenseTensor> {
        self.check_tensor(t)?;
        let mut out = DenseTensor::zeros(t.shape())?;
        let src = t.data();
        let dst = out.data_mut();
        for &i in &self.observed {
            dst[i] = src[i];
        }
        Ok(out)
    }

    /// Overwrites the observed entries of `target` with those of `source`.
    pub fn copy_observed(&self, source: &DenseTensor, target: &mut DenseTensor) -> Result<()> {
        self.check_tensor(source)?;
        self.check_tensor(target)?;
        let src = source.data();
        let dst = target.data_mut();
        for &i in &self.observed {
            dst[i] = src[i];
        }
        Ok(())
    }

    /// Number of observed entries per index of mode 0 (per sample for stacked data).
    pub fn observed_per_sample(&self) -> Vec<usize> {
        let m = self.shape[0];
        let mut counts = alloc::vec![0usize; m];
        for &i in &self.observed {
            counts[i % m] += 1;
        }
        counts
    }

    /// Restricts the mask to a subset of samples (mode 0), in the given order.
    pub fn select_samples(&self, samples: &[usize]) -> Result<Self> {
        let m = self.shape[0];
        let rest = self.total() / m;
        let k = samples.len();
        let flags = self.bitmap();
        let mut out = Vec::new();
        for c in 0..rest {
            for (r, &s) in samples.iter().enumerate() {
                if s >= m {
                    return Err(Error::InvalidParameter(alloc::format!(
                        "sample {s} out of range for {m} samples"
                    )));
                }
                if flags[s + m * c] {
                    out.push(r + k * c);
                }
            }
        }
        let mut shape = self.shape.clone();
        shape[0] = k;
        Self::new(shape, out)
    }

    /// Removes the given linear indices from the observed set.
    pub fn without(&self, removed: &[usize]) -> Result<Self> {
        let mut drop = removed.to_vec();
        drop.sort_unstable();
        let observed = self
            .observed
            .iter()
            .copied()
            .filter(|i| drop.binary_search(i).is_err())
            .collect();
        Self::new(self.shape.clone(), observed)
    }
}

/// Free-function form of [`ObservationMask::project`].
pub fn project_mask(t: &DenseTensor, mask: &ObservationMask) -> Result<DenseTensor> {
    mask.project(t)
}
