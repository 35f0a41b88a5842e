//! Prediction error metrics and cross-validated choice of λ.

use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::datagen::{substream, Stream};
use crate::error::{Error, Result};
use crate::mask::ObservationMask;
use crate::regression::predict;
use crate::solver::{fit, TrmvConfig};
use crate::tensor::DenseTensor;

/// Standardized prediction error `‖y − ŷ‖_F / ‖y‖_F`.
pub fn spe(y_true: &DenseTensor, y_hat: &DenseTensor) -> Result<f64> {
    let norm = y_true.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::ZeroTensor);
    }
    Ok(y_true.distance(y_hat)? / norm)
}

/// SPE restricted to a set of linear indices.
pub fn spe_on(y_true: &DenseTensor, y_hat: &DenseTensor, indices: &[usize]) -> Result<f64> {
    y_true.check_same_shape(y_hat)?;
    let (mut num, mut den) = (0.0, 0.0);
    for &i in indices {
        let (a, b) = (y_true.data()[i], y_hat.data()[i]);
        num += (a - b) * (a - b);
        den += a * a;
    }
    if den == 0.0 {
        return Err(Error::ZeroTensor);
    }
    Ok(libm::sqrt(num / den))
}

/// Transformed SPE `−1/ln(SPE)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Tspe {
    Value(f64),
    /// SPE ≥ 1, where the transform is undefined or negative.
    OutOfDomain { spe: f64 },
}

impl Tspe {
    pub fn value(&self) -> Option<f64> {
        match self {
            Tspe::Value(v) => Some(*v),
            Tspe::OutOfDomain { .. } => None,
        }
    }

    pub fn is_out_of_domain(&self) -> bool {
        matches!(self, Tspe::OutOfDomain { .. })
    }
}

/// `−1/ln(spe)` for `spe ∈ [0, 1)` (0 at `spe = 0`); otherwise the
/// out-of-domain marker carrying the raw SPE.
pub fn tspe(spe: f64) -> Tspe {
    if spe == 0.0 {
        Tspe::Value(0.0)
    } else if spe > 0.0 && spe < 1.0 {
        Tspe::Value(-1.0 / libm::log(spe))
    } else {
        Tspe::OutOfDomain { spe }
    }
}

/// Outcome of a λ search.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSearch {
    pub lambda: f64,
    /// `(λ, mean validation SPE)` for every grid point.
    pub scores: Vec<(f64, f64)>,
}

/// K-fold search over `grid`: each fold hides a share of the observed
/// entries, the model is fitted on the rest, and the hidden entries are
/// scored by SPE. Returns the λ with the smallest mean validation SPE
/// (the first one on ties).
pub fn cross_validate_lambda(
    inputs: &[DenseTensor],
    y0: &DenseTensor,
    mask: &ObservationMask,
    grid: &[f64],
    folds: usize,
    cfg: &TrmvConfig,
) -> Result<LambdaSearch> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty λ grid".into()));
    }
    if folds < 2 || folds > mask.count() {
        return Err(Error::InvalidParameter(alloc::format!(
            "{folds} folds for {} observed entries",
            mask.count()
        )));
    }
    let mut order = mask.indices().to_vec();
    order.shuffle(&mut substream(cfg.seed, Stream::Mask));
    let mut groups: Vec<Vec<usize>> = (0..folds).map(|_| Vec::new()).collect();
    for (i, idx) in order.into_iter().enumerate() {
        groups[i % folds].push(idx);
    }

    let mut scores = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let run = TrmvConfig { lambda, ..cfg.clone() };
        let mut total = 0.0;
        for held in &groups {
            let train = mask.without(held)?;
            let model = fit(inputs, y0, &train, &run)?;
            let pred = predict(inputs, &model)?;
            total += spe_on(y0, &pred, held)?;
        }
        scores.push((lambda, total / folds as f64));
    }
    let best = scores
        .iter()
        .fold(None::<(f64, f64)>, |acc, &(l, s)| match acc {
            Some((_, bs)) if bs <= s => acc,
            _ => Some((l, s)),
        })
        .expect("nonempty grid");
    Ok(LambdaSearch {
        lambda: best.0,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tspe_values() {
        assert_eq!(tspe(0.0), Tspe::Value(0.0));
        assert!((tspe((-2.0f64).exp()).value().unwrap() - 0.5).abs() < 1e-15);
        assert!((tspe((-1.0f64).exp()).value().unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(tspe(1.0), Tspe::OutOfDomain { spe: 1.0 });
        assert!(tspe(2.5).is_out_of_domain());
        assert!(tspe(0.2).value().unwrap() < tspe(0.3).value().unwrap());
    }

    #[test]
    fn spe_cases() {
        let y = DenseTensor::from_fn(&[2, 3], |i| (i[0] + i[1]) as f64 + 1.0).unwrap();
        assert_eq!(spe(&y, &y).unwrap(), 0.0);
        let z = DenseTensor::zeros(&[2, 3]).unwrap();
        assert_eq!(spe(&y, &z).unwrap(), 1.0);
        assert!(spe(&z, &y).is_err());
        assert_eq!(spe_on(&y, &y.scaled(2.0), &[0, 4]).unwrap(), 1.0);
    }

    #[test]
    fn cross_validation_picks_the_best_score() {
        use crate::datagen::{procedure_b, ProcedureBParams, SamplingParams};
        let params = ProcedureBParams {
            sampling: SamplingParams {
                samples: 16,
                train_samples: 12,
                missing_fraction: 0.5,
                ..SamplingParams::default()
            },
            input_dims: vec![vec![7]],
            input_ranks: vec![2],
            output_dims: vec![6, 5],
            output_rank: 2,
            sigma: 0.0,
        };
        let d = procedure_b(&params, 3).unwrap();
        let xs = d.train_inputs().unwrap();
        let y0 = d.observed_response().unwrap();
        let cfg = TrmvConfig {
            max_iter: 4,
            ..TrmvConfig::default()
        };
        let one = cross_validate_lambda(&xs, &y0, &d.mask, &[1.0], 3, &cfg).unwrap();
        assert_eq!(one.lambda, 1.0);
        let grid = [0.1, 1.0, 10.0];
        let s = cross_validate_lambda(&xs, &y0, &d.mask, &grid, 3, &cfg).unwrap();
        assert_eq!(s.scores.len(), 3);
        let best = s.scores.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
        assert_eq!(s.scores.iter().find(|x| x.0 == s.lambda).unwrap().1, best);
        assert!(cross_validate_lambda(&xs, &y0, &d.mask, &[], 3, &cfg).is_err());
        assert!(cross_validate_lambda(&xs, &y0, &d.mask, &grid, 1, &cfg).is_err());
    }
}
