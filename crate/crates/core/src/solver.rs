//! Outer block-coordinate descent: alternate the completion step for `Y` with
//! one ALS coefficient update per input.
//!
//! The objective is
//!
//! ```text
//! F(Y, B) = λ Σ_i α_i ‖Y_(i)‖_* + ½‖Y − Σ_j X_j * B_j‖_F²,   P_Ω(Y) = P_Ω(Y_0).
//! ```
//!
//! `λ` is given in units of the RMS of the observed entries of `Y_0`.
//!
//! The completion step is an inexact ADMM solve, and re-estimating the
//! response rank changes the feasible set of the coefficient step, so neither
//! is a guaranteed descent on its own. With `monotone` set (the default) each
//! step is kept only when it does not increase `F`.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::completion::{admm_complete_resume, AdmmConfig, AdmmState};
use crate::error::{Error, Result};
use crate::linalg::{random_orthonormal, tucker_rank_estimate_modes, weighted_nuclear_norm, RankSpec};
use crate::mask::ObservationMask;
use crate::regression::{
    als_bcd_fit_reduced, learn_input_bases, reduce_input, CoefficientTensor, FitDiagnostics,
    OuterIteration, OutputInit, TrmvModel,
};
use crate::tensor::DenseTensor;

const BASELINE_MIN_ITER: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct TrmvConfig {
    pub lambda: f64,
    /// Nuclear-norm weights; `None` means equal weights.
    pub weights: Option<Vec<f64>>,
    pub rho: f64,
    /// Outer iteration cap.
    pub max_iter: usize,
    /// Early exit once the relative objective change stays below this for
    /// `patience` consecutive iterations.
    pub objective_tol: f64,
    pub patience: usize,
    pub admm_max_iter: usize,
    pub admm_tol: f64,
    pub adaptive_rho: bool,
    pub include_sample_mode: bool,
    pub als_sweeps: usize,
    /// Explained-energy ratio for the response rank estimate.
    pub rank_ratio: f64,
    /// Explained-energy ratio for the input bases.
    pub input_rank_ratio: f64,
    /// Size of the random initial coefficients, relative to the observed
    /// response norm.
    pub init_scale: f64,
    /// Keep the objective nonincreasing across outer iterations: a step
    /// that would raise it is replaced by a refit at the previous rank.
    pub monotone: bool,
    pub seed: u64,
}

impl Default for TrmvConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            weights: None,
            rho: 1.0,
            max_iter: 50,
            objective_tol: 1e-8,
            patience: 3,
            admm_max_iter: 300,
            admm_tol: 1e-6,
            adaptive_rho: false,
            include_sample_mode: false,
            als_sweeps: 10,
            rank_ratio: 0.95,
            input_rank_ratio: 0.95,
            init_scale: 0.01,
            monotone: true,
            seed: 0,
        }
    }
}

impl TrmvConfig {
    pub fn admm_config(&self) -> AdmmConfig {
        AdmmConfig {
            lambda: self.lambda,
            weights: self.weights.clone(),
            rho: self.rho,
            max_iter: self.admm_max_iter,
            tol: self.admm_tol,
            adaptive_rho: self.adaptive_rho,
            include_sample_mode: self.include_sample_mode,
        }
    }

    /// Settings for the completion-only baseline. It runs once rather than
    /// inside an outer loop, so it gets residual balancing and a larger
    /// iteration cap to reach its own convergence.
    pub fn completion_config(&self) -> AdmmConfig {
        AdmmConfig {
            adaptive_rho: true,
            max_iter: self.admm_max_iter.max(BASELINE_MIN_ITER),
            ..self.admm_config()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.admm_config().validate()?;
        if self.max_iter == 0 || self.als_sweeps == 0 || self.patience == 0 {
            return Err(Error::InvalidParameter(
                "iteration counts must be positive".into(),
            ));
        }
        for (name, r) in [("rank_ratio", self.rank_ratio), ("input_rank_ratio", self.input_rank_ratio)] {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::InvalidParameter(alloc::format!("{name} must lie in (0, 1]")));
            }
        }
        if !(self.init_scale >= 0.0) || !(self.objective_tol >= 0.0) {
            return Err(Error::InvalidParameter("negative scale or tolerance".into()));
        }
        Ok(())
    }
}

/// Defaults for a stacked response of the given shape: equal weights over
/// the non-sample modes.
pub fn default_config(response_shape: &[usize]) -> TrmvConfig {
    let cfg = TrmvConfig::default();
    let d = cfg.admm_config().nuclear_modes(response_shape.len()).len().max(1);
    TrmvConfig {
        weights: Some(vec![1.0 / d as f64; d]),
        ..cfg
    }
}

/// Per-mode rank estimate of a stacked response over its non-sample modes.
pub fn estimate_response_rank(y: &DenseTensor, ratio: f64) -> Result<Vec<usize>> {
    let modes: Vec<usize> = (1..y.order()).collect();
    let ranks = tucker_rank_estimate_modes(y, &modes, ratio)?;
    Ok(ranks.into_iter().map(|r| r.max(1)).collect())
}

/// Ranks to try for a coefficient block, from the estimate `target` back to
/// the block's current ranks `old`, halving the gap at each step.
fn rank_ladder(target: &[usize], old: &[usize]) -> Vec<Vec<usize>> {
    let mut ladder = vec![target.to_vec()];
    let mut current = target.to_vec();
    while current != old {
        for (c, &o) in current.iter_mut().zip(old) {
            *c = if *c < o { *c + (o - *c).div_ceil(2) } else { *c - (*c - o).div_ceil(2) };
        }
        ladder.push(current.clone());
    }
    ladder
}

/// ALS refit of one block at `ranks`, warm-started from its current output
/// bases. Returns the block and its loss against `w`.
fn refit_block(
    block: &CoefficientTensor,
    w: &DenseTensor,
    z: &DenseTensor,
    ranks: &[usize],
    sweeps: usize,
    seed: u64,
) -> Result<(CoefficientTensor, f64)> {
    let als = als_bcd_fit_reduced(w, z, ranks, OutputInit::Given(block.output_bases()), sweeps, seed)?;
    let fitted = CoefficientTensor::new(als.core, block.input_bases().to_vec(), als.output_bases)?;
    let loss = fitted.apply_reduced(z)?.distance_sq(w)?;
    Ok((fitted, loss))
}

fn check_problem(inputs: &[DenseTensor], y0: &DenseTensor, mask: &ObservationMask) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::InvalidParameter("at least one input is required".into()));
    }
    if y0.order() < 2 {
        return Err(Error::InvalidShape(y0.shape().to_vec()));
    }
    let m = y0.shape()[0];
    for x in inputs {
        if x.order() < 2 || x.shape()[0] != m {
            return Err(Error::DimensionMismatch(alloc::format!(
                "input of shape {:?} for {m} response samples",
                x.shape()
            )));
        }
    }
    if mask.shape() != y0.shape() {
        return Err(Error::ShapeMismatch {
            expected: y0.shape().to_vec(),
            found: mask.shape().to_vec(),
        });
    }
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    if !y0.is_finite() || inputs.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("non-finite data".into()));
    }
    Ok(())
}

struct Problem<'a> {
    reduced: Vec<DenseTensor>,
    y0: &'a DenseTensor,
    modes: Vec<usize>,
    weights: Vec<f64>,
    lambda: f64,
}

impl Problem<'_> {
    fn prediction(&self, coefs: &[CoefficientTensor], skip: Option<usize>) -> Result<DenseTensor> {
        let mut total = DenseTensor::zeros(self.y0.shape())?;
        for (j, (b, z)) in coefs.iter().zip(&self.reduced).enumerate() {
            if Some(j) != skip {
                total.axpy(1.0, &b.apply_reduced(z)?)?;
            }
        }
        Ok(total)
    }

    fn nuclear(&self, y: &DenseTensor) -> Result<f64> {
        weighted_nuclear_norm(y, &self.modes, &self.weights)
    }

    fn objective(&self, y: &DenseTensor, nuclear: f64, pred: &DenseTensor) -> Result<f64> {
        Ok(self.lambda * nuclear + 0.5 * y.distance_sq(pred)?)
    }
}

/// Fits one coefficient tensor per input to the partially observed response.
///
/// `inputs[j]` has shape `(m, P_j1, …)`, `y0` has shape `(m, Q_1, …, Q_d)`;
/// entries of `y0` outside `mask` are ignored.
pub fn fit(
    inputs: &[DenseTensor],
    y0: &DenseTensor,
    mask: &ObservationMask,
    cfg: &TrmvConfig,
) -> Result<TrmvModel> {
    Ok(fit_detailed(inputs, y0, mask, cfg)?.0)
}

/// [`fit`], also returning the final completed response.
pub fn fit_detailed(
    inputs: &[DenseTensor],
    y0: &DenseTensor,
    mask: &ObservationMask,
    cfg: &TrmvConfig,
) -> Result<(TrmvModel, DenseTensor)> {
    cfg.validate()?;
    check_problem(inputs, y0, mask)?;
    let admm = cfg.admm_config();
    let modes = admm.nuclear_modes(y0.order());
    let weights = admm.resolved_weights(y0.order())?;

    let mut bases = Vec::with_capacity(inputs.len());
    let mut reduced = Vec::with_capacity(inputs.len());
    for x in inputs {
        let u = learn_input_bases(x, &RankSpec::Ratio(cfg.input_rank_ratio))?;
        reduced.push(reduce_input(x, &u)?);
        bases.push(u);
    }
    let problem = Problem {
        reduced,
        y0,
        modes,
        weights,
        lambda: cfg.lambda * mask.observed_rms(y0)?,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut y = mask.project(y0)?;
    let y_norm = y.frobenius_norm();
    if y_norm == 0.0 {
        return Err(Error::ZeroTensor);
    }
    let out_dims: Vec<usize> = y0.shape()[1..].to_vec();
    let mut ranks = estimate_response_rank(&y, cfg.rank_ratio)?;

    // Random initial coefficients, scaled so each contributes a small
    // fraction of the observed response norm.
    let mut coefs = Vec::with_capacity(inputs.len());
    for (u, z) in bases.iter().zip(&problem.reduced) {
        let mut core_shape: Vec<usize> = u.iter().map(|m| m.ncols()).collect();
        core_shape.extend_from_slice(&ranks);
        let core = DenseTensor::from_fn(&core_shape, |_| rng.sample::<f64, _>(StandardNormal))?;
        let v: Vec<_> = out_dims
            .iter()
            .zip(&ranks)
            .map(|(&q, &r)| random_orthonormal(q, r, &mut rng))
            .collect();
        let mut b = CoefficientTensor::new(core, u.clone(), v)?;
        let size = b.apply_reduced(z)?.frobenius_norm();
        let scale = if size > 0.0 {
            cfg.init_scale * y_norm / (size * inputs.len() as f64)
        } else {
            0.0
        };
        b.tucker.core = b.tucker.core.scaled(scale);
        coefs.push(b);
    }

    let mut pred = problem.prediction(&coefs, None)?;
    let mut nuclear = problem.nuclear(&y)?;
    let mut objective = problem.objective(&y, nuclear, &pred)?;
    let mut diagnostics = FitDiagnostics {
        iterations: Vec::new(),
        initial_objective: objective,
    };
    let mut quiet = 0;
    let mut admm_state = AdmmState::new(y0, mask, Some(&y), problem.modes.len(), admm.rho)?;

    for k in 1..=cfg.max_iter {
        // Completion step. Copies, duals and ρ carry over from the previous
        // outer iteration.
        let (y_new, admm_diag) = admm_complete_resume(&pred, y0, mask, &admm, &mut admm_state)?;
        let admm_iterations = admm_diag.len();
        let nuclear_new = problem.nuclear(&y_new)?;
        let completion_accepted =
            !cfg.monotone || problem.objective(&y_new, nuclear_new, &pred)? <= objective;
        if completion_accepted {
            y = y_new;
            nuclear = nuclear_new;
        }
        ranks = estimate_response_rank(&y, cfg.rank_ratio)?;

        // Coefficient steps, one input at a time against the partial residual.
        // A step to a lower rank may raise the loss of this block. In
        // monotone mode the rank moves towards the estimate only as far as
        // the objective stays at or below the previous outer iterate; the
        // last resort is a refit at the old rank, which never raises it.
        let start = coefs.clone();
        let mut fallbacks = 0;
        for j in 0..coefs.len() {
            let w = y.sub(&problem.prediction(&coefs, Some(j))?)?;
            let z = &problem.reduced[j];
            let old_loss = coefs[j].apply_reduced(z)?.distance_sq(&w)?;
            let old_ranks = coefs[j].output_ranks();
            let seed = rng.next_u64();
            let targets = if cfg.monotone {
                rank_ladder(&ranks, &old_ranks)
            } else {
                vec![ranks.clone()]
            };
            let mut updated = false;
            for target in targets {
                let (candidate, loss) = refit_block(&coefs[j], &w, z, &target, cfg.als_sweeps, seed)?;
                let ok = !cfg.monotone
                    || if target == old_ranks {
                        loss <= old_loss
                    } else {
                        problem.lambda * nuclear + 0.5 * loss <= objective
                    };
                if ok {
                    updated = target == ranks;
                    coefs[j] = candidate;
                    break;
                }
            }
            if !updated {
                fallbacks += 1;
            }
        }
        pred = problem.prediction(&coefs, None)?;
        let mut new_objective = problem.objective(&y, nuclear, &pred)?;

        // A block held above the estimated rank feeds its own extra
        // components back into the completed entries, which can pin it
        // there. Try the rank-following step followed by a fresh completion
        // and keep it if it ends lower.
        let mut rank_refresh = false;
        if cfg.monotone && fallbacks > 0 {
            let mut alt = start;
            for j in 0..alt.len() {
                let w = y.sub(&problem.prediction(&alt, Some(j))?)?;
                let seed = rng.next_u64();
                alt[j] = refit_block(&alt[j], &w, &problem.reduced[j], &ranks, cfg.als_sweeps, seed)?.0;
            }
            let alt_pred = problem.prediction(&alt, None)?;
            let mut alt_state = admm_state.clone();
            let (alt_y, _) = admm_complete_resume(&alt_pred, y0, mask, &admm, &mut alt_state)?;
            let alt_nuclear = problem.nuclear(&alt_y)?;
            let alt_objective = problem.objective(&alt_y, alt_nuclear, &alt_pred)?;
            if alt_objective < new_objective {
                coefs = alt;
                pred = alt_pred;
                y = alt_y;
                nuclear = alt_nuclear;
                admm_state = alt_state;
                new_objective = alt_objective;
                fallbacks = 0;
                rank_refresh = true;
            }
        }

        let change = (objective - new_objective).abs() / objective.abs().max(f64::MIN_POSITIVE);
        objective = new_objective;
        let deviation = mask
            .indices()
            .iter()
            .map(|&i| (y.data()[i] - y0.data()[i]).abs())
            .fold(0.0, f64::max);
        diagnostics.iterations.push(OuterIteration {
            iteration: k,
            objective,
            ranks: ranks.clone(),
            admm_iterations,
            admm_converged: admm_diag.converged,
            observed_deviation: deviation,
            completion_accepted,
            coefficient_fallbacks: fallbacks,
            rank_refresh,
        });
        if !objective.is_finite() {
            return Err(Error::NoConvergence("outer objective is not finite"));
        }
        quiet = if change < cfg.objective_tol { quiet + 1 } else { 0 };
        if quiet >= cfg.patience {
            break;
        }
    }

    let model = TrmvModel {
        coefficients: coefs,
        response_rank: ranks,
        lambda: cfg.lambda,
        diagnostics,
    };
    Ok((model, y))
}
