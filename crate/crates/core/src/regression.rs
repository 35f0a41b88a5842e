//! Tucker-constrained coefficient tensors, their ALS fit and prediction.
//!
//! A coefficient `B_j` of shape `(P_1, …, P_l, Q_1, …, Q_d)` is stored as
//! `C ×_1 U_1 … ×_l U_l ×_{l+1} V_1 … ×_{l+d} V_d`. The input bases `U_k`
//! come from the inputs alone; the core and output bases are fitted by
//! alternating least squares:
//!
//! * with `V` fixed the core solves an ordinary least-squares problem in the
//!   reduced coordinates `Z = X ×_2 U_1ᵀ … ×_{l+1} U_lᵀ`;
//! * with the core and the other bases fixed each `V_i` is an orthogonal
//!   Procrustes solution.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    complete_basis, estimate_rank, leading_left_singular_vectors, least_squares,
    random_orthonormal, svd, RankSpec, TuckerFactors,
};
use crate::tensor::{contract_batched, DenseTensor, Matrix};

/// One Tucker-form coefficient tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTensor {
    /// Factors are `(U_1, …, U_l, V_1, …, V_d)`.
    pub tucker: TuckerFactors,
    pub input_shape: Vec<usize>,
    pub output_shape: Vec<usize>,
}

impl CoefficientTensor {
    pub fn new(core: DenseTensor, input_bases: Vec<Matrix>, output_bases: Vec<Matrix>) -> Result<Self> {
        let input_shape: Vec<usize> = input_bases.iter().map(|u| u.nrows()).collect();
        let output_shape: Vec<usize> = output_bases.iter().map(|v| v.nrows()).collect();
        let mut factors = input_bases;
        factors.extend(output_bases);
        let ranks: Vec<usize> = factors.iter().map(|f| f.ncols()).collect();
        if core.shape() != ranks.as_slice() {
            return Err(Error::ShapeMismatch {
                expected: ranks,
                found: core.shape().to_vec(),
            });
        }
        Ok(Self {
            tucker: TuckerFactors { core, factors },
            input_shape,
            output_shape,
        })
    }

    pub fn input_order(&self) -> usize {
        self.input_shape.len()
    }

    pub fn core(&self) -> &DenseTensor {
        &self.tucker.core
    }

    pub fn input_bases(&self) -> &[Matrix] {
        &self.tucker.factors[..self.input_order()]
    }

    pub fn output_bases(&self) -> &[Matrix] {
        &self.tucker.factors[self.input_order()..]
    }

    pub fn output_ranks(&self) -> Vec<usize> {
        self.output_bases().iter().map(|v| v.ncols()).collect()
    }

    /// `X * B` for stacked inputs, computed in the reduced coordinates
    /// without assembling `B`.
    pub fn apply(&self, x: &DenseTensor) -> Result<DenseTensor> {
        if x.order() != self.input_order() + 1 || x.shape()[1..] != self.input_shape[..] {
            return Err(Error::ShapeMismatch {
                expected: self.input_shape.clone(),
                found: x.shape()[1..].to_vec(),
            });
        }
        let z = reduce_input(x, self.input_bases())?;
        self.apply_reduced(&z)
    }

    /// `X * B` from inputs already projected onto the input bases.
    pub fn apply_reduced(&self, z: &DenseTensor) -> Result<DenseTensor> {
        let c = core_matrix(self.core(), self.input_order());
        let g = reduced_prediction(z, &c, &self.output_ranks())?;
        expand_output(&g, self.output_bases())
    }
}

/// Full coefficient tensor by repeated mode products.
pub fn assemble(b: &CoefficientTensor) -> Result<DenseTensor> {
    b.tucker.reconstruct()
}

/// Input bases: leading left singular vectors of each non-sample unfolding
/// of the stacked input `x` of shape `(m, P_1, …, P_l)`.
pub fn learn_input_bases(x: &DenseTensor, ranks: &RankSpec) -> Result<Vec<Matrix>> {
    let l = x.order().saturating_sub(1);
    if l == 0 {
        return Err(Error::InvalidShape(x.shape().to_vec()));
    }
    let targets: Vec<usize> = match ranks {
        RankSpec::Fixed(r) => {
            if r.len() != l {
                return Err(Error::InvalidParameter(alloc::format!(
                    "{} input ranks for {l} input modes",
                    r.len()
                )));
            }
            r.clone()
        }
        RankSpec::Ratio(ratio) => {
            if x.data().iter().all(|&v| v == 0.0) {
                return Err(Error::ZeroTensor);
            }
            let mut r = Vec::with_capacity(l);
            for k in 1..=l {
                r.push(estimate_rank(&x.matricize(k)?, *ratio)?.max(1));
            }
            r
        }
    };
    let mut bases = Vec::with_capacity(l);
    for (k, &r) in targets.iter().enumerate() {
        let dim = x.shape()[k + 1];
        if r == 0 || r > dim {
            return Err(Error::RankExceedsDimension { mode: k, rank: r, dim });
        }
        bases.push(leading_left_singular_vectors(&x.matricize(k + 1)?, r)?);
    }
    Ok(bases)
}

/// `Z = X ×_2 U_1ᵀ … ×_{l+1} U_lᵀ`, shape `(m, P̃_1, …, P̃_l)`.
pub fn reduce_input(x: &DenseTensor, bases: &[Matrix]) -> Result<DenseTensor> {
    if x.order() != bases.len() + 1 {
        return Err(Error::DimensionMismatch(alloc::format!(
            "order-{} input with {} bases",
            x.order(),
            bases.len()
        )));
    }
    let mut z = x.clone();
    for (k, u) in bases.iter().enumerate() {
        z = z.mode_product(&u.transpose(), k + 1)?;
    }
    Ok(z)
}

/// The core viewed as a `P̃ × Q̃` matrix (input modes on rows).
fn core_matrix(core: &DenseTensor, input_order: usize) -> Matrix {
    let p: usize = core.shape()[..input_order].iter().product();
    let q = core.len() / p;
    Matrix::from_column_slice(p, q, core.data())
}

/// `Z_(1) C` reshaped to `(m, Q̃_1, …, Q̃_d)`.
fn reduced_prediction(z: &DenseTensor, c: &Matrix, output_ranks: &[usize]) -> Result<DenseTensor> {
    let m = z.shape()[0];
    let zm = Matrix::from_column_slice(m, z.len() / m, z.data());
    if zm.ncols() != c.nrows() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "reduced input has {} columns, core has {} rows",
            zm.ncols(),
            c.nrows()
        )));
    }
    let g = zm * c;
    let mut shape = alloc::vec![m];
    shape.extend_from_slice(output_ranks);
    DenseTensor::new(shape, g.as_slice().to_vec())
}

/// `G ×_2 V_1 … ×_{d+1} V_d`.
fn expand_output(g: &DenseTensor, output_bases: &[Matrix]) -> Result<DenseTensor> {
    let mut t = g.clone();
    for (k, v) in output_bases.iter().enumerate() {
        t = t.mode_product(v, k + 1)?;
    }
    Ok(t)
}

/// `W ×_{k+1} V_kᵀ` for every `k` except `skip`.
fn project_output(w: &DenseTensor, output_bases: &[Matrix], skip: Option<usize>) -> Result<DenseTensor> {
    let mut t = w.clone();
    for (k, v) in output_bases.iter().enumerate() {
        if Some(k) != skip {
            t = t.mode_product(&v.transpose(), k + 1)?;
        }
    }
    Ok(t)
}

/// Result of an ALS fit.
#[derive(Debug, Clone)]
pub struct AlsFit {
    /// Core of shape `(P̃_1, …, P̃_l, Q̃_1, …, Q̃_d)`.
    pub core: DenseTensor,
    pub output_bases: Vec<Matrix>,
    /// `‖W − X * B‖_F²` after each sweep.
    pub objectives: Vec<f64>,
}

/// How to start the output bases.
#[derive(Debug, Clone, Copy)]
pub enum OutputInit<'a> {
    /// Leading left singular vectors of the unfoldings of the target.
    FromTarget,
    /// Given bases, truncated or extended to the requested ranks.
    Given(&'a [Matrix]),
}

/// Fits core and output bases of `B` so that `X * B` approximates `w`.
///
/// `w` has shape `(m, Q_1, …, Q_d)`, `x` has shape `(m, P_1, …, P_l)`.
/// `seed` drives the random orthonormal fallback used when the target has
/// no usable directions.
pub fn als_bcd_fit(
    w: &DenseTensor,
    x: &DenseTensor,
    input_bases: &[Matrix],
    output_ranks: &[usize],
    init: OutputInit<'_>,
    sweeps: usize,
    seed: u64,
) -> Result<AlsFit> {
    let z = reduce_input(x, input_bases)?;
    als_bcd_fit_reduced(w, &z, output_ranks, init, sweeps, seed)
}

/// [`als_bcd_fit`] on inputs already projected onto their bases.
pub fn als_bcd_fit_reduced(
    w: &DenseTensor,
    z: &DenseTensor,
    output_ranks: &[usize],
    init: OutputInit<'_>,
    sweeps: usize,
    seed: u64,
) -> Result<AlsFit> {
    let d = w.order() - 1;
    if d == 0 || output_ranks.len() != d {
        return Err(Error::InvalidParameter(alloc::format!(
            "{} output ranks for {d} output modes",
            output_ranks.len()
        )));
    }
    if z.shape()[0] != w.shape()[0] {
        return Err(Error::DimensionMismatch(alloc::format!(
            "{} input samples, {} response samples",
            z.shape()[0],
            w.shape()[0]
        )));
    }
    if !w.is_finite() {
        return Err(Error::InvalidParameter("non-finite regression target".into()));
    }
    for (k, &r) in output_ranks.iter().enumerate() {
        let dim = w.shape()[k + 1];
        if r == 0 || r > dim {
            return Err(Error::RankExceedsDimension { mode: k, rank: r, dim });
        }
    }
    if sweeps == 0 {
        return Err(Error::InvalidParameter("at least one ALS sweep is required".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bases = Vec::with_capacity(d);
    for (k, &r) in output_ranks.iter().enumerate() {
        let dim = w.shape()[k + 1];
        let v = match init {
            OutputInit::Given(given) => {
                let g = given.get(k).ok_or_else(|| {
                    Error::InvalidParameter(alloc::format!("no initial basis for output mode {k}"))
                })?;
                if g.nrows() != dim {
                    return Err(Error::DimensionMismatch(alloc::format!(
                        "initial basis for output mode {k} has {} rows, expected {dim}",
                        g.nrows()
                    )));
                }
                if g.ncols() >= r {
                    g.columns(0, r).into_owned()
                } else {
                    complete_basis(g, r)
                }
            }
            OutputInit::FromTarget => {
                let unf = w.matricize(k + 1)?;
                if unf.iter().all(|&v| v == 0.0) {
                    random_orthonormal(dim, r, &mut rng)
                } else {
                    leading_left_singular_vectors(&unf, r)?
                }
            }
        };
        bases.push(v);
    }

    let m = z.shape()[0];
    let p = z.len() / m;
    let zm = Matrix::from_column_slice(m, p, z.data());
    let w_norm_sq = w.frobenius_norm_sq();
    let mut core_m = Matrix::zeros(p, output_ranks.iter().product());
    let mut objectives = Vec::with_capacity(sweeps);

    for _ in 0..sweeps {
        // Core: least squares against the target projected onto the bases.
        let wt = project_output(w, &bases, None)?;
        let wt_m = Matrix::from_column_slice(m, wt.len() / m, wt.data());
        core_m = least_squares(&zm, &wt_m)?;

        // Output bases: orthogonal Procrustes, one mode at a time.
        let g = reduced_prediction(z, &core_m, output_ranks)?;
        for i in 0..d {
            let partial = project_output(w, &bases, Some(i))?;
            let cross = partial.matricize(i + 1)? * g.matricize(i + 1)?.transpose();
            if cross.iter().all(|&v| v == 0.0) {
                continue;
            }
            let s = svd(&cross)?;
            bases[i] = s.u * s.v.transpose();
        }

        let pred = expand_output(&g, &bases)?;
        let obj = pred.distance_sq(w)?;
        let done = objectives
            .last()
            .is_some_and(|&prev: &f64| prev - obj <= 1e-13 * w_norm_sq.max(1.0));
        objectives.push(obj);
        if done {
            break;
        }
    }

    let mut core_shape: Vec<usize> = z.shape()[1..].to_vec();
    core_shape.extend_from_slice(output_ranks);
    Ok(AlsFit {
        core: DenseTensor::new(core_shape, core_m.as_slice().to_vec())?,
        output_bases: bases,
        objectives,
    })
}

/// One outer iteration of a fit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OuterIteration {
    pub iteration: usize,
    /// `λ Σ α_i ‖Y_(i)‖_* + ½‖Y − Σ_j X_j * B_j‖_F²` after the iteration.
    pub objective: f64,
    /// Per-mode rank estimate of the response iterate.
    pub ranks: Vec<usize>,
    pub admm_iterations: usize,
    pub admm_converged: bool,
    /// Largest `|Y − Y_0|` over observed entries.
    pub observed_deviation: f64,
    /// Whether the completion step lowered the objective and was kept.
    pub completion_accepted: bool,
    /// Inputs whose coefficient update at the new rank estimate was
    /// rejected (the previous rank or coefficients were kept instead).
    pub coefficient_fallbacks: usize,
    /// The rank-following step with a fresh completion replaced the
    /// safeguarded one.
    pub rank_refresh: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitDiagnostics {
    pub iterations: Vec<OuterIteration>,
    /// Objective before the first iteration.
    pub initial_objective: f64,
}

impl FitDiagnostics {
    pub fn objective_trace(&self) -> Vec<f64> {
        self.iterations.iter().map(|it| it.objective).collect()
    }

    pub fn rank_trace(&self) -> Vec<Vec<usize>> {
        self.iterations.iter().map(|it| it.ranks.clone()).collect()
    }

    /// Iterations whose objective exceeds the previous one (the initial
    /// objective for the first) by more than `rel_tol·(1 + |previous|)`.
    pub fn objective_increases(&self, rel_tol: f64) -> usize {
        let mut prev = self.initial_objective;
        let mut count = 0;
        for it in &self.iterations {
            if it.objective > prev + rel_tol * (1.0 + prev.abs()) {
                count += 1;
            }
            prev = it.objective;
        }
        count
    }
}

/// A fitted model: one coefficient tensor per input.
#[derive(Debug, Clone, PartialEq)]
pub struct TrmvModel {
    pub coefficients: Vec<CoefficientTensor>,
    pub response_rank: Vec<usize>,
    pub lambda: f64,
    pub diagnostics: FitDiagnostics,
}

impl TrmvModel {
    pub fn input_count(&self) -> usize {
        self.coefficients.len()
    }

    pub fn output_shape(&self) -> &[usize] {
        &self.coefficients[0].output_shape
    }

    pub fn predict(&self, inputs: &[DenseTensor]) -> Result<DenseTensor> {
        predict(inputs, self)
    }
}

/// `Ŷ = Σ_j X_j * B_j` with each `B_j` assembled in full.
pub fn predict(inputs: &[DenseTensor], model: &TrmvModel) -> Result<DenseTensor> {
    if inputs.len() != model.coefficients.len() || inputs.is_empty() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "{} inputs for a model with {} coefficients",
            inputs.len(),
            model.coefficients.len()
        )));
    }
    let mut total: Option<DenseTensor> = None;
    for (x, b) in inputs.iter().zip(&model.coefficients) {
        if x.order() != b.input_order() + 1 || x.shape()[1..] != b.input_shape[..] {
            return Err(Error::ShapeMismatch {
                expected: b.input_shape.clone(),
                found: x.shape()[1..].to_vec(),
            });
        }
        let part = contract_batched(x, &assemble(b)?)?;
        match total.as_mut() {
            None => total = Some(part),
            Some(t) => t.axpy(1.0, &part)?,
        }
    }
    Ok(total.expect("at least one input"))
}
