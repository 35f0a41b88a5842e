//! Two-stage baseline: complete the response by nuclear-norm minimization
//! alone, then fit the regression on the completed response.

use crate::completion::{run_consensus, AdmmConfig, AdmmDiagnostics};
use crate::error::{Error, Result};
use crate::mask::ObservationMask;
use crate::regression::TrmvModel;
use crate::solver::{fit, TrmvConfig};
use crate::tensor::DenseTensor;

/// `min Σ α_i ‖Y_(i)‖_*` subject to `P_Ω(Y) = P_Ω(Y_0)`, solved with the
/// consensus ADMM loop with the data-fidelity term removed.
pub fn tc_complete(
    y0: &DenseTensor,
    mask: &ObservationMask,
    cfg: &AdmmConfig,
) -> Result<(DenseTensor, AdmmDiagnostics)> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    run_consensus(None, y0, mask, cfg, None)
}

/// Completes the response, then fits the coefficients on the completed
/// response with every entry treated as observed.
pub fn tc_mtot_fit(
    inputs: &[DenseTensor],
    y0: &DenseTensor,
    mask: &ObservationMask,
    cfg: &TrmvConfig,
) -> Result<TrmvModel> {
    let (completed, _) = tc_complete(y0, mask, &cfg.completion_config())?;
    let full = ObservationMask::full(y0.shape())?;
    fit(inputs, &completed, &full, cfg)
}
