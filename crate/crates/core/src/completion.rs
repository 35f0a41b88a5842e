//! Consensus ADMM for the response-completion step.
//!
//! Solves
//!
//! ```text
//! min_Y  Σ_i α_i { λ‖Y_(i)‖_* + ½‖Y − A‖_F² }   s.t.  P_Ω(Y) = P_Ω(Y_0)
//! ```
//!
//! by giving every nuclear-norm mode its own local copy `M_i`, a global
//! variable `Y` and dual tensors `Θ_i`. One iteration is
//!
//! 1. `M_i ← fold(svt(C_(i), λ_i))` with
//!    `C = (α_i A + ρY + Θ_i)/(α_i + ρ)` and `λ_i = λα_i/(α_i + ρ)`;
//! 2. `Y ← Y_0` on Ω and `(1/d) Σ_i (M_i − Θ_i/ρ)` elsewhere;
//! 3. `Θ_i ← Θ_i + ρ(Y − M_i)`.
//!
//! Dropping the data-fidelity term (no `A`) turns the same loop into pure
//! nuclear-norm completion, which the baseline uses.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{check_weights, svt_detailed};
use crate::mask::ObservationMask;
use crate::tensor::DenseTensor;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct AdmmConfig {
    /// Penalty weight, in units of the RMS of the observed response entries,
    /// so that rescaling the data leaves the fit unchanged.
    pub lambda: f64,
    /// Nuclear-norm weights, one per nuclear mode. `None` means `1/d` each.
    pub weights: Option<Vec<f64>>,
    pub rho: f64,
    pub max_iter: usize,
    pub tol: f64,
    /// Residual balancing: double ρ when the primal residual exceeds ten
    /// times the dual residual, halve it in the opposite case.
    pub adaptive_rho: bool,
    /// Also penalize the rank of the sample-mode unfolding.
    pub include_sample_mode: bool,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            weights: None,
            rho: 1.0,
            max_iter: 300,
            tol: 1e-6,
            adaptive_rho: false,
            include_sample_mode: false,
        }
    }
}

impl AdmmConfig {
    /// Modes that enter the nuclear norm for a response of the given order.
    pub fn nuclear_modes(&self, order: usize) -> Vec<usize> {
        if self.include_sample_mode || order == 1 {
            (0..order).collect()
        } else {
            (1..order).collect()
        }
    }

    pub fn resolved_weights(&self, order: usize) -> Result<Vec<f64>> {
        let d = self.nuclear_modes(order).len();
        let w = match &self.weights {
            Some(w) => {
                if w.len() != d {
                    return Err(Error::InvalidParameter(alloc::format!(
                        "{} nuclear-norm weights for {d} modes",
                        w.len()
                    )));
                }
                w.clone()
            }
            None => vec![1.0 / d as f64; d],
        };
        check_weights(&w)?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter("λ must be finite and nonnegative".into()));
        }
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(Error::InvalidParameter("ρ must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be positive".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("tol must be positive".into()));
        }
        Ok(())
    }
}

/// Output of one local update.
#[derive(Debug, Clone)]
pub struct LocalUpdate {
    pub tensor: DenseTensor,
    /// Singular values of the thresholded unfolding.
    pub singular_values: Vec<f64>,
}

/// `M_i` minimizing `λα_i‖M_(i)‖_* + (α_i/2)‖M − A‖² + ⟨Θ_i, Y − M⟩ + (ρ/2)‖Y − M‖²`.
///
/// With `a = None` the fidelity term is dropped and the update becomes
/// `svt((ρY + Θ)/ρ, λα_i/ρ)`.
pub fn local_update(
    a: Option<&DenseTensor>,
    y: &DenseTensor,
    theta: &DenseTensor,
    mode: usize,
    alpha: f64,
    lambda: f64,
    rho: f64,
) -> Result<LocalUpdate> {
    y.check_same_shape(theta)?;
    let fidelity = if a.is_some() { alpha } else { 0.0 };
    let denom = fidelity + rho;
    let mut c = y.scaled(rho);
    c.axpy(1.0, theta)?;
    if let Some(a) = a {
        c.axpy(alpha, a)?;
    }
    let c = c.scaled(1.0 / denom);
    let threshold = lambda * alpha / denom;
    let shrunk = svt_detailed(&c.matricize(mode)?, threshold)?;
    Ok(LocalUpdate {
        tensor: DenseTensor::fold(&shrunk.matrix, mode, y.shape())?,
        singular_values: shrunk.singular_values,
    })
}

/// Closed-form global step: observed entries from `y0`, the rest the mean
/// of `M_i − Θ_i/ρ`.
pub fn global_update(
    locals: &[DenseTensor],
    duals: &[DenseTensor],
    y0: &DenseTensor,
    mask: &ObservationMask,
    rho: f64,
) -> Result<DenseTensor> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter("ρ must be positive".into()));
    }
    if locals.is_empty() || locals.len() != duals.len() {
        return Err(Error::InvalidParameter(alloc::format!(
            "{} locals and {} duals",
            locals.len(),
            duals.len()
        )));
    }
    let d = locals.len() as f64;
    let mut y = DenseTensor::zeros(y0.shape())?;
    for (m, t) in locals.iter().zip(duals) {
        y.axpy(1.0 / d, m)?;
        y.axpy(-1.0 / (rho * d), t)?;
    }
    mask.copy_observed(y0, &mut y)?;
    Ok(y)
}

/// `Θ_i + ρ(Y − M_i)`.
pub fn dual_update(theta: &DenseTensor, y: &DenseTensor, m: &DenseTensor, rho: f64) -> Result<DenseTensor> {
    let mut out = theta.clone();
    out.axpy(rho, y)?;
    out.axpy(-rho, m)?;
    Ok(out)
}

/// Working state of a consensus ADMM solve.
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub y: DenseTensor,
    pub locals: Vec<DenseTensor>,
    pub duals: Vec<DenseTensor>,
    pub rho: f64,
    pub iteration: usize,
}

impl AdmmState {
    /// `Y = init` (or `P_Ω(Y_0)`), observed entries pinned to `Y_0`,
    /// `M_i = Y`, `Θ_i = 0`.
    pub fn new(
        y0: &DenseTensor,
        mask: &ObservationMask,
        init: Option<&DenseTensor>,
        copies: usize,
        rho: f64,
    ) -> Result<Self> {
        let mut y = match init {
            Some(t) => {
                y0.check_same_shape(t)?;
                t.clone()
            }
            None => mask.project(y0)?,
        };
        mask.copy_observed(y0, &mut y)?;
        let zero = DenseTensor::zeros(y0.shape())?;
        Ok(Self {
            locals: vec![y.clone(); copies],
            duals: vec![zero; copies],
            y,
            rho,
            iteration: 0,
        })
    }
}

/// Per-iteration record.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmIteration {
    pub iteration: usize,
    /// `Σ α_i (λ‖M_(i)‖_* + ½‖M_i − A‖²)` evaluated at the local copies; equals
    /// the completion objective at `Y` once the copies agree with it.
    pub objective: f64,
    /// `max_i ‖Y − M_i‖_F`.
    pub primal_residual: f64,
    /// `ρ √d ‖Y^{k+1} − Y^k‖_F`.
    pub dual_residual: f64,
    pub rho: f64,
    /// Number of nonzero singular values kept in each local copy.
    pub ranks: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct AdmmDiagnostics {
    pub iterations: Vec<AdmmIteration>,
    pub converged: bool,
}

impl AdmmDiagnostics {
    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }
}

/// Completes `y0` on the unobserved entries, pulled towards `a`.
pub fn admm_complete(
    a: &DenseTensor,
    y0: &DenseTensor,
    mask: &ObservationMask,
    cfg: &AdmmConfig,
) -> Result<(DenseTensor, AdmmDiagnostics)> {
    run_consensus(Some(a), y0, mask, cfg, None)
}

/// As [`admm_complete`], starting the global variable from `init`.
pub fn admm_complete_from(
    a: &DenseTensor,
    y0: &DenseTensor,
    mask: &ObservationMask,
    cfg: &AdmmConfig,
    init: &DenseTensor,
) -> Result<(DenseTensor, AdmmDiagnostics)> {
    run_consensus(Some(a), y0, mask, cfg, Some(init))
}

/// As [`admm_complete`], resuming from (and updating) a previous state, so
/// that local copies, duals and ρ carry over between related solves.
pub fn admm_complete_resume(
    a: &DenseTensor,
    y0: &DenseTensor,
    mask: &ObservationMask,
    cfg: &AdmmConfig,
    state: &mut AdmmState,
) -> Result<(DenseTensor, AdmmDiagnostics)> {
    solve(Some(a), y0, mask, cfg, state)
}

pub(crate) fn run_consensus(
    a: Option<&DenseTensor>,
    y0: &DenseTensor,
    mask: &ObservationMask,
    cfg: &AdmmConfig,
    init: Option<&DenseTensor>,
) -> Result<(DenseTensor, AdmmDiagnostics)> {
    cfg.validate()?;
    let copies = cfg.nuclear_modes(y0.order()).len();
    let mut state = AdmmState::new(y0, mask, init, copies, cfg.rho)?;
    solve(a, y0, mask, cfg, &mut state)
}

fn solve(
    a: Option<&DenseTensor>,
    y0: &DenseTensor,
    mask: &ObservationMask,
    cfg: &AdmmConfig,
    state: &mut AdmmState,
) -> Result<(DenseTensor, AdmmDiagnostics)> {
    cfg.validate()?;
    if let Some(a) = a {
        a.check_same_shape(y0)?;
    }
    if mask.shape() != y0.shape() {
        return Err(Error::ShapeMismatch {
            expected: y0.shape().to_vec(),
            found: mask.shape().to_vec(),
        });
    }
    let modes = cfg.nuclear_modes(y0.order());
    let weights = cfg.resolved_weights(y0.order())?;
    let d = modes.len();
    if state.locals.len() != d || state.duals.len() != d {
        return Err(Error::DimensionMismatch(alloc::format!(
            "state holds {} copies for {d} nuclear modes",
            state.locals.len()
        )));
    }
    state.y.check_same_shape(y0)?;
    let lambda = cfg.lambda * mask.observed_rms(y0)?;
    let mut diag = AdmmDiagnostics::default();

    if mask.is_full() {
        // Every entry is pinned, so the global step returns Y_0 at once.
        diag.iterations.push(AdmmIteration {
            iteration: 1,
            objective: f64::NAN,
            primal_residual: 0.0,
            dual_residual: 0.0,
            rho: cfg.rho,
            ranks: Vec::new(),
        });
        diag.converged = true;
        state.y = y0.clone();
        return Ok((y0.clone(), diag));
    }

    let mut best: Option<(f64, DenseTensor)> = None;
    for _ in 0..cfg.max_iter {
        state.iteration += 1;
        let rho = state.rho;
        let mut objective = 0.0;
        let mut ranks = Vec::with_capacity(d);
        for (i, (&mode, &alpha)) in modes.iter().zip(&weights).enumerate() {
            let up = local_update(a, &state.y, &state.duals[i], mode, alpha, lambda, rho)?;
            let nuclear: f64 = up.singular_values.iter().sum();
            objective += alpha * lambda * nuclear;
            if let Some(a) = a {
                objective += 0.5 * alpha * up.tensor.distance_sq(a)?;
            }
            ranks.push(up.singular_values.len());
            state.locals[i] = up.tensor;
        }
        let y_new = global_update(&state.locals, &state.duals, y0, mask, rho)?;
        let mut primal: f64 = 0.0;
        for i in 0..d {
            state.duals[i] = dual_update(&state.duals[i], &y_new, &state.locals[i], rho)?;
            primal = primal.max(y_new.distance(&state.locals[i])?);
        }
        let change = y_new.distance(&state.y)?;
        let scale = state.y.frobenius_norm().max(1.0);
        let dual_res = rho * libm::sqrt(d as f64) * change;
        state.y = y_new;
        diag.iterations.push(AdmmIteration {
            iteration: state.iteration,
            objective,
            primal_residual: primal,
            dual_residual: dual_res,
            rho,
            ranks,
        });

        let y_scale = state.y.frobenius_norm().max(1.0);
        if change / scale < cfg.tol && primal / y_scale < cfg.tol {
            diag.converged = true;
            return Ok((state.y.clone(), diag));
        }
        if best.as_ref().is_none_or(|(p, _)| primal < *p) {
            best = Some((primal, state.y.clone()));
        }
        if cfg.adaptive_rho {
            if primal > 10.0 * dual_res {
                state.rho *= 2.0;
            } else if dual_res > 10.0 * primal {
                state.rho /= 2.0;
            }
        }
    }
    let y = best.map(|(_, y)| y).unwrap_or_else(|| state.y.clone());
    Ok((y, diag))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], f: impl Fn(&[usize]) -> f64) -> DenseTensor {
        DenseTensor::from_fn(shape, |i| f(i)).unwrap()
    }

    #[test]
    fn local_update_without_threshold_averages() {
        let a = t(&[2, 3, 2], |i| (i[0] + 2 * i[1] + 3 * i[2]) as f64);
        let y = t(&[2, 3, 2], |i| (i[0] * i[1]) as f64 - 1.0);
        let theta = DenseTensor::zeros(&[2, 3, 2]).unwrap();
        let m = local_update(Some(&a), &y, &theta, 1, 1.0, 0.0, 1.0).unwrap();
        let expected = a.add(&y).unwrap().scaled(0.5);
        assert!(m.tensor.distance(&expected).unwrap() < 1e-12);
    }

    #[test]
    fn local_update_huge_lambda_is_zero() {
        let a = t(&[2, 3, 2], |i| (i[0] + i[1] + i[2]) as f64);
        let theta = DenseTensor::zeros(&[2, 3, 2]).unwrap();
        let m = local_update(Some(&a), &a, &theta, 2, 0.5, 1e9, 1.0).unwrap();
        assert_eq!(m.tensor.frobenius_norm(), 0.0);
        assert!(m.singular_values.is_empty());
    }

    #[test]
    fn global_update_cases() {
        let shape = [2, 2, 2];
        let y0 = t(&shape, |i| (i[0] + i[1] + i[2]) as f64 + 1.0);
        let zero = DenseTensor::zeros(&shape).unwrap();
        let two = t(&shape, |_| 2.0);
        let full = ObservationMask::full(&shape).unwrap();
        assert_eq!(
            global_update(&[zero.clone(), two.clone()], &[zero.clone(), zero.clone()], &y0, &full, 1.0).unwrap(),
            y0
        );
        let partial = ObservationMask::new(shape.to_vec(), vec![0, 5]).unwrap();
        let y = global_update(&[zero.clone(), two.clone()], &[zero.clone(), zero.clone()], &y0, &partial, 1.0).unwrap();
        for (i, v) in y.data().iter().enumerate() {
            if partial.contains(i) {
                assert_eq!(*v, y0.data()[i]);
            } else {
                assert_eq!(*v, 1.0);
            }
        }
        let y1 = global_update(core::slice::from_ref(&two), core::slice::from_ref(&zero), &y0, &partial, 3.0).unwrap();
        assert_eq!(y1.data()[1], 2.0);
        assert!(global_update(&[two], &[zero], &y0, &partial, 0.0).is_err());
    }

    #[test]
    fn dual_update_cases() {
        let shape = [2, 3];
        let y = t(&shape, |i| i[0] as f64 - i[1] as f64);
        let m = t(&shape, |i| (i[0] * i[1]) as f64);
        let theta = t(&shape, |i| 0.5 * i[1] as f64);
        assert_eq!(dual_update(&theta, &y, &y, 2.0).unwrap(), theta);
        let zero = DenseTensor::zeros(&shape).unwrap();
        let e = y.sub(&m).unwrap();
        assert_eq!(dual_update(&zero, &y, &m, 1.0).unwrap(), e);
        let twice = dual_update(&dual_update(&theta, &y, &m, 0.5).unwrap(), &y, &m, 0.5).unwrap();
        let expected = theta.add(&e).unwrap();
        assert!(twice.distance(&expected).unwrap() < 1e-12);
    }

    #[test]
    fn full_mask_returns_y0_immediately() {
        let shape = [3, 2, 2];
        let y0 = t(&shape, |i| (i[0] + 3 * i[1]) as f64 * 0.7 - i[2] as f64);
        let a = t(&shape, |_| 5.0);
        let full = ObservationMask::full(&shape).unwrap();
        let (y, d) = admm_complete(&a, &y0, &full, &AdmmConfig::default()).unwrap();
        assert_eq!(y, y0);
        assert_eq!(d.len(), 1);
        assert!(d.converged);
    }

    #[test]
    fn invalid_config_rejected() {
        let shape = [2, 2, 2];
        let y0 = DenseTensor::zeros(&shape).unwrap();
        let mask = ObservationMask::new(shape.to_vec(), vec![0]).unwrap();
        let cfg = AdmmConfig { rho: 0.0, ..AdmmConfig::default() };
        assert!(admm_complete(&y0, &y0, &mask, &cfg).is_err());
        let cfg = AdmmConfig { weights: Some(vec![0.3, 0.3]), ..AdmmConfig::default() };
        assert!(admm_complete(&y0, &y0, &mask, &cfg).is_err());
    }

    #[test]
    fn nuclear_modes_exclude_samples() {
        let cfg = AdmmConfig::default();
        assert_eq!(cfg.nuclear_modes(3), vec![1, 2]);
        assert_eq!(cfg.nuclear_modes(1), vec![0]);
        let with = AdmmConfig { include_sample_mode: true, ..cfg };
        assert_eq!(with.nuclear_modes(3), vec![0, 1, 2]);
        assert_eq!(with.resolved_weights(3).unwrap(), vec![1.0 / 3.0; 3]);
    }
}
