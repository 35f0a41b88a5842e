//! Seeded synthetic data: curve-on-curve regression (procedure A), Fourier
//! Tucker tensors (procedure B), linear overlay fields on a wafer, and
//! missingness masks.
//!
//! Every generator draws from independent substreams of the master seed:
//! structure (inputs and coefficients), noise and mask. Changing only the
//! noise level therefore rescales one fixed noise realization.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{Cholesky, SymmetricEigen};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::mask::ObservationMask;
use crate::tensor::{contract_batched, DenseTensor, Matrix};

/// Named random substreams derived from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Structure = 1,
    Noise = 2,
    Mask = 3,
}

pub fn substream(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Matérn-type kernel `(1 + 20δ + (20δ)²/3) e^{−20δ}`, `δ = |z − z'|`.
pub fn cov_sigma1(z: f64, zp: f64) -> f64 {
    let a = 20.0 * (z - zp).abs();
    (1.0 + a + a * a / 3.0) * libm::exp(-a)
}

/// Squared-exponential kernel `e^{−(2|z − z'|)²}`.
pub fn cov_sigma2(z: f64, zp: f64) -> f64 {
    let a = 2.0 * (z - zp);
    libm::exp(-a * a)
}

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-4;

/// Zero-mean Gaussian process sampler on a fixed grid (Cholesky factor of
/// the Gram matrix, with diagonal jitter when needed).
#[derive(Debug, Clone)]
pub struct GpSampler {
    factor: Matrix,
    /// Jitter that was added to the diagonal (0 if none was needed).
    pub jitter: f64,
}

impl GpSampler {
    pub fn new(grid: &[f64], cov: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::InvalidParameter("empty grid".into()));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter(
                "grid points must be strictly increasing".into(),
            ));
        }
        let n = grid.len();
        let gram = Matrix::from_fn(n, n, |i, j| cov(grid[i], grid[j]));
        if let Some(ch) = Cholesky::new(gram.clone()) {
            return Ok(Self { factor: ch.l(), jitter: 0.0 });
        }
        let mut jitter = JITTER_START;
        while jitter <= JITTER_MAX * (1.0 + 1e-9) {
            let shifted = &gram + Matrix::identity(n, n) * jitter;
            if let Some(ch) = Cholesky::new(shifted) {
                return Ok(Self { factor: ch.l(), jitter });
            }
            jitter *= 10.0;
        }
        Err(Error::NotPositiveDefinite(JITTER_MAX))
    }

    pub fn len(&self) -> usize {
        self.factor.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.len();
        let z = nalgebra::DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        (&self.factor * z).as_slice().to_vec()
    }
}

/// One Gaussian process draw on `grid`.
pub fn gp_sample<R: Rng + ?Sized>(
    grid: &[f64],
    cov: impl Fn(f64, f64) -> f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    Ok(GpSampler::new(grid, cov)?.sample(rng))
}

/// How missing entries are spread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum MaskPolicy {
    /// Remove a fraction `r` of all entries.
    #[default]
    Global,
    /// Remove a fraction `r` of every sample's entries (mode 0 is the sample mode).
    PerSample,
}

/// Observation mask with a fraction `r` of entries removed uniformly
/// without replacement.
pub fn gen_mask<R: Rng + ?Sized>(
    shape: &[usize],
    r: f64,
    policy: MaskPolicy,
    rng: &mut R,
) -> Result<ObservationMask> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::InvalidParameter(alloc::format!(
            "missing fraction must lie in [0, 1), got {r}"
        )));
    }
    let total = ObservationMask::empty(shape)?.total();
    if r == 0.0 {
        return ObservationMask::full(shape);
    }
    match policy {
        MaskPolicy::Global => {
            let keep = libm::round((1.0 - r) * total as f64) as usize;
            let picked = index::sample(rng, total, keep).into_vec();
            ObservationMask::from_unsorted(shape.to_vec(), picked)
        }
        MaskPolicy::PerSample => {
            let m = shape[0];
            let rest = total / m;
            let keep = libm::round((1.0 - r) * rest as f64) as usize;
            if keep == 0 {
                return Err(Error::InvalidParameter(alloc::format!(
                    "missing fraction {r} leaves no observed entry in a sample of {rest}"
                )));
            }
            let mut picked = Vec::with_capacity(keep * m);
            for i in 0..m {
                for c in index::sample(rng, rest, keep).into_iter() {
                    picked.push(i + m * c);
                }
            }
            ObservationMask::from_unsorted(shape.to_vec(), picked)
        }
    }
}

/// Sample counts and missingness shared by every generator.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SamplingParams {
    pub samples: usize,
    /// The first `train_samples` samples form the training split.
    pub train_samples: usize,
    pub missing_fraction: f64,
    pub mask_policy: MaskPolicy,
}

impl Default for SamplingParams {
    fn default() -> Self {
        Self {
            samples: 200,
            train_samples: 100,
            missing_fraction: 0.8,
            mask_policy: MaskPolicy::Global,
        }
    }
}

impl SamplingParams {
    fn validate(&self) -> Result<()> {
        if self.train_samples == 0 || self.train_samples > self.samples {
            return Err(Error::InvalidParameter(alloc::format!(
                "{} training samples out of {}",
                self.train_samples,
                self.samples
            )));
        }
        Ok(())
    }
}

/// Curve-on-curve regression.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ProcedureAParams {
    pub sampling: SamplingParams,
    /// Number of input curves.
    pub inputs: usize,
    /// Correlation between input curves at a fixed location.
    pub rho_c: f64,
    pub sigma: f64,
    /// Grid size on the input interval (0, 2).
    pub input_grid: usize,
    /// Grid size on the output interval (0, 1).
    pub output_grid: usize,
}

impl Default for ProcedureAParams {
    fn default() -> Self {
        Self {
            sampling: SamplingParams::default(),
            inputs: 2,
            rho_c: 0.0,
            sigma: 0.0,
            input_grid: 100,
            output_grid: 100,
        }
    }
}

/// Tensor inputs and response built from Fourier bases.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ProcedureBParams {
    pub sampling: SamplingParams,
    /// Per-sample shape of each input.
    pub input_dims: Vec<Vec<usize>>,
    /// Rank of each input along every one of its modes.
    pub input_ranks: Vec<usize>,
    pub output_dims: Vec<usize>,
    pub output_rank: usize,
    pub sigma: f64,
}

impl Default for ProcedureBParams {
    fn default() -> Self {
        Self {
            sampling: SamplingParams::default(),
            input_dims: vec![vec![60], vec![50, 50]],
            input_ranks: vec![3, 3],
            output_dims: vec![60, 40],
            output_rank: 5,
            sigma: 0.0,
        }
    }
}

/// Linear overlay fields on a wafer driven by six signature coefficients.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct OverlayParams {
    pub sampling: SamplingParams,
    /// Measurement locations on the unit disk.
    pub points: usize,
    /// Standard deviation of each of `k_1, …, k_6`.
    pub magnitudes: [f64; 6],
    pub sigma: f64,
}

impl Default for OverlayParams {
    fn default() -> Self {
        Self {
            sampling: SamplingParams::default(),
            points: 100,
            magnitudes: [1.0; 6],
            sigma: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "generator", rename_all = "kebab-case"))]
pub enum GeneratorParams {
    ProcedureA(ProcedureAParams),
    ProcedureB(ProcedureBParams),
    Overlay(OverlayParams),
}

impl GeneratorParams {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ProcedureA(_) => "procedure-a",
            Self::ProcedureB(_) => "procedure-b",
            Self::Overlay(_) => "overlay",
        }
    }

    pub fn sampling(&self) -> &SamplingParams {
        match self {
            Self::ProcedureA(p) => &p.sampling,
            Self::ProcedureB(p) => &p.sampling,
            Self::Overlay(p) => &p.sampling,
        }
    }

    pub fn sampling_mut(&mut self) -> &mut SamplingParams {
        match self {
            Self::ProcedureA(p) => &mut p.sampling,
            Self::ProcedureB(p) => &mut p.sampling,
            Self::Overlay(p) => &mut p.sampling,
        }
    }

    pub fn sigma(&self) -> f64 {
        match self {
            Self::ProcedureA(p) => p.sigma,
            Self::ProcedureB(p) => p.sigma,
            Self::Overlay(p) => p.sigma,
        }
    }

    pub fn set_sigma(&mut self, sigma: f64) {
        match self {
            Self::ProcedureA(p) => p.sigma = sigma,
            Self::ProcedureB(p) => p.sigma = sigma,
            Self::Overlay(p) => p.sigma = sigma,
        }
    }

    pub fn generate(&self, seed: u64) -> Result<SyntheticDataset> {
        match self {
            Self::ProcedureA(p) => procedure_a(p, seed),
            Self::ProcedureB(p) => procedure_b(p, seed),
            Self::Overlay(p) => overlay_generate(p, seed),
        }
    }
}

/// A generated dataset with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub params: GeneratorParams,
    pub seed: u64,
    /// Stacked inputs over all samples, sample mode first.
    pub inputs: Vec<DenseTensor>,
    /// Complete response over all samples (noise included).
    pub response: DenseTensor,
    /// Observed entries of the training response.
    pub mask: ObservationMask,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Coefficient tensors that generated the response (discretized).
    pub coefficients: Vec<DenseTensor>,
}

impl SyntheticDataset {
    pub fn generator(&self) -> &'static str {
        self.params.name()
    }

    pub fn train_inputs(&self) -> Result<Vec<DenseTensor>> {
        self.inputs.iter().map(|x| x.select_samples(&self.train)).collect()
    }

    pub fn test_inputs(&self) -> Result<Vec<DenseTensor>> {
        self.inputs.iter().map(|x| x.select_samples(&self.test)).collect()
    }

    pub fn train_response(&self) -> Result<DenseTensor> {
        self.response.select_samples(&self.train)
    }

    pub fn test_response(&self) -> Result<DenseTensor> {
        self.response.select_samples(&self.test)
    }

    /// Training response with unobserved entries set to zero.
    pub fn observed_response(&self) -> Result<DenseTensor> {
        self.mask.project(&self.train_response()?)
    }

    /// Replaces the mask with a fresh one at another missing fraction,
    /// drawn from the mask substream.
    pub fn remask(&mut self, missing_fraction: f64) -> Result<()> {
        self.params.sampling_mut().missing_fraction = missing_fraction;
        self.mask = make_mask(&self.response, self.params.sampling(), self.seed)?;
        Ok(())
    }
}

fn make_mask(response: &DenseTensor, s: &SamplingParams, seed: u64) -> Result<ObservationMask> {
    let mut shape = response.shape().to_vec();
    shape[0] = s.train_samples;
    gen_mask(&shape, s.missing_fraction, s.mask_policy, &mut substream(seed, Stream::Mask))
}

fn finish(
    params: GeneratorParams,
    seed: u64,
    inputs: Vec<DenseTensor>,
    clean: DenseTensor,
    sigma: f64,
    coefficients: Vec<DenseTensor>,
) -> Result<SyntheticDataset> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(alloc::format!("noise level {sigma}")));
    }
    let mut response = clean;
    if sigma > 0.0 {
        let mut rng = substream(seed, Stream::Noise);
        for v in response.data_mut() {
            *v += sigma * rng.sample::<f64, _>(StandardNormal);
        }
    }
    let s = params.sampling().clone();
    let mask = make_mask(&response, &s, seed)?;
    Ok(SyntheticDataset {
        params,
        seed,
        inputs,
        response,
        mask,
        train: (0..s.train_samples).collect(),
        test: (s.train_samples..s.samples).collect(),
        coefficients,
    })
}

/// Midpoints of `n` equal cells of `(lo, hi)`.
pub fn midpoint_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / n as f64;
    (0..n).map(|k| lo + (k as f64 + 0.5) * h).collect()
}

/// `Δ` with `S = ΔΔᵀ` for the equicorrelation matrix `S` (unit diagonal,
/// `rho_c` elsewhere).
pub fn correlation_factor(p: usize, rho_c: f64) -> Result<Matrix> {
    let s = Matrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { rho_c });
    let eig = SymmetricEigen::new(s);
    if eig.eigenvalues.iter().any(|&v| v < -1e-12) {
        return Err(Error::InvalidParameter(alloc::format!(
            "correlation {rho_c} does not give a positive semidefinite matrix"
        )));
    }
    let mut delta = eig.eigenvectors;
    for (j, &v) in eig.eigenvalues.iter().enumerate() {
        delta.column_mut(j).scale_mut(libm::sqrt(v.max(0.0)));
    }
    Ok(delta)
}

/// Curve-on-curve data. Inputs are `p` curves on `(0, 2)`, the response a
/// curve on `(0, 1)`; the integral over `s` is the rectangle rule on the
/// midpoint grid, and the returned coefficients carry the `Δs` weight so
/// that `y = Σ_j X_j * B_j` holds exactly for `σ = 0`.
pub fn procedure_a(params: &ProcedureAParams, seed: u64) -> Result<SyntheticDataset> {
    let s = &params.sampling;
    s.validate()?;
    let p = params.inputs;
    if p == 0 || params.input_grid == 0 || params.output_grid == 0 {
        return Err(Error::InvalidParameter("inputs and grid sizes must be positive".into()));
    }
    if !(0.0..1.0).contains(&params.rho_c) {
        return Err(Error::InvalidParameter(alloc::format!(
            "input correlation must lie in [0, 1), got {}",
            params.rho_c
        )));
    }
    let (ns, nt, m) = (params.input_grid, params.output_grid, s.samples);
    let sg = midpoint_grid(0.0, 2.0, ns);
    let tg = midpoint_grid(0.0, 1.0, nt);
    let ds = 2.0 / ns as f64;
    let rough_s = GpSampler::new(&sg, cov_sigma1)?;
    let rough_t = GpSampler::new(&tg, cov_sigma1)?;
    let smooth_s = GpSampler::new(&sg, cov_sigma2)?;
    let mut rng = substream(seed, Stream::Structure);

    let scale = ds / (p * p) as f64;
    let mut coefficients = Vec::with_capacity(p);
    for _ in 0..p {
        let mut b = DenseTensor::zeros(&[ns, nt])?;
        for _ in 0..3 {
            let gamma = rough_t.sample(&mut rng);
            let psi = rough_s.sample(&mut rng);
            let data = b.data_mut();
            for (t, g) in gamma.iter().enumerate() {
                for (si, ps) in psi.iter().enumerate() {
                    data[si + ns * t] += scale * g * ps;
                }
            }
        }
        coefficients.push(b);
    }

    let delta = correlation_factor(p, params.rho_c)?;
    let mut inputs = vec![DenseTensor::zeros(&[m, ns])?; p];
    for n in 0..m {
        let w: Vec<Vec<f64>> = (0..p).map(|_| smooth_s.sample(&mut rng)).collect();
        for (j, x) in inputs.iter_mut().enumerate() {
            let data = x.data_mut();
            for si in 0..ns {
                data[n + m * si] = (0..p).map(|k| delta[(j, k)] * w[k][si]).sum();
            }
        }
    }

    let mut clean = DenseTensor::zeros(&[m, nt])?;
    for (x, b) in inputs.iter().zip(&coefficients) {
        clean.axpy(1.0, &contract_batched(x, b)?)?;
    }
    finish(
        GeneratorParams::ProcedureA(params.clone()),
        seed,
        inputs,
        clean,
        params.sigma,
        coefficients,
    )
}

/// `P × R` matrix whose column `t` (1-based) is `cos(2πt x_j)` for odd `t`
/// and `sin(2πt x_j)` for even `t`, with `x_j = j/P`, `j = 1, …, P`.
pub fn fourier_basis(p: usize, r: usize) -> Matrix {
    Matrix::from_fn(p, r, |j, c| {
        let t = (c + 1) as f64;
        let x = (j + 1) as f64 / p as f64;
        if (c + 1) % 2 == 1 {
            libm::cos(2.0 * PI * t * x)
        } else {
            libm::sin(2.0 * PI * t * x)
        }
    })
}

fn gaussian_tensor<R: Rng + ?Sized>(shape: &[usize], rng: &mut R) -> Result<DenseTensor> {
    DenseTensor::from_fn(shape, |_| rng.sample::<f64, _>(StandardNormal))
}

/// Tensor data from Fourier bases and standard normal cores.
pub fn procedure_b(params: &ProcedureBParams, seed: u64) -> Result<SyntheticDataset> {
    let s = &params.sampling;
    s.validate()?;
    let p = params.input_dims.len();
    if p == 0 || params.input_ranks.len() != p {
        return Err(Error::InvalidParameter(alloc::format!(
            "{p} inputs with {} ranks",
            params.input_ranks.len()
        )));
    }
    if params.output_dims.is_empty() || params.output_rank == 0 {
        return Err(Error::InvalidParameter("empty output specification".into()));
    }
    for (k, (dims, &r)) in params.input_dims.iter().zip(&params.input_ranks).enumerate() {
        if dims.is_empty() || r == 0 {
            return Err(Error::InvalidParameter(alloc::format!("input {k} is empty")));
        }
        for (mode, &dim) in dims.iter().enumerate() {
            if r > dim {
                return Err(Error::RankExceedsDimension { mode, rank: r, dim });
            }
        }
    }
    for (mode, &dim) in params.output_dims.iter().enumerate() {
        if params.output_rank > dim {
            return Err(Error::RankExceedsDimension {
                mode,
                rank: params.output_rank,
                dim,
            });
        }
    }
    let m = s.samples;
    let r_out = params.output_rank;
    let v: Vec<Matrix> = params.output_dims.iter().map(|&q| fourier_basis(q, r_out)).collect();
    let mut rng = substream(seed, Stream::Structure);

    let mut coefficients = Vec::with_capacity(p);
    let mut bases = Vec::with_capacity(p);
    for (dims, &r) in params.input_dims.iter().zip(&params.input_ranks) {
        let u: Vec<Matrix> = dims.iter().map(|&dim| fourier_basis(dim, r)).collect();
        let mut core_shape = vec![r; dims.len()];
        core_shape.extend(vec![r_out; params.output_dims.len()]);
        let mut b = gaussian_tensor(&core_shape, &mut rng)?;
        for (k, f) in u.iter().chain(&v).enumerate() {
            b = b.mode_product(f, k)?;
        }
        coefficients.push(b);
        bases.push(u);
    }

    let mut inputs = Vec::with_capacity(p);
    for (u, &r) in bases.iter().zip(&params.input_ranks) {
        let mut shape = vec![m];
        shape.extend(vec![r; u.len()]);
        let mut x = gaussian_tensor(&shape, &mut rng)?;
        for (k, f) in u.iter().enumerate() {
            x = x.mode_product(f, k + 1)?;
        }
        inputs.push(x);
    }

    let mut shape = vec![m];
    shape.extend_from_slice(&params.output_dims);
    let mut clean = DenseTensor::zeros(&shape)?;
    for (x, b) in inputs.iter().zip(&coefficients) {
        clean.axpy(1.0, &contract_batched(x, b)?)?;
    }
    finish(
        GeneratorParams::ProcedureB(params.clone()),
        seed,
        inputs,
        clean,
        params.sigma,
        coefficients,
    )
}

/// `n` points spread over the unit disk on a sunflower spiral.
pub fn disk_points(n: usize) -> Vec<(f64, f64)> {
    let golden = PI * (3.0 - libm::sqrt(5.0));
    (0..n)
        .map(|i| {
            let r = libm::sqrt((i as f64 + 0.5) / n as f64);
            let a = golden * i as f64;
            (r * libm::cos(a), r * libm::sin(a))
        })
        .collect()
}

/// `[1, x, y, x², xy, y², x³, x²y, xy², y³]`.
pub fn overlay_basis(x: f64, y: f64) -> [f64; 10] {
    [1.0, x, y, x * x, x * y, y * y, x * x * x, x * x * y, x * y * y, y * y * y]
}

/// `(F_x, F_y)` at every point for signature `k = (k_1, …, k_20)`:
/// `F_x = (k_1, k_3, …, k_19)·b`, `F_y = (k_2, k_4, …, k_20)·b`.
pub fn overlay_fields(k: &[f64; 20], points: &[(f64, f64)]) -> (Vec<f64>, Vec<f64>) {
    let mut fx = Vec::with_capacity(points.len());
    let mut fy = Vec::with_capacity(points.len());
    for &(x, y) in points {
        let b = overlay_basis(x, y);
        fx.push((0..10).map(|i| k[2 * i] * b[i]).sum());
        fy.push((0..10).map(|i| k[2 * i + 1] * b[i]).sum());
    }
    (fx, fy)
}

/// Overlay data on generated disk points.
pub fn overlay_generate(params: &OverlayParams, seed: u64) -> Result<SyntheticDataset> {
    overlay_generate_at(params, &disk_points(params.points), seed)
}

/// Overlay data: inputs are the linear signatures `(k_1, …, k_6)` with
/// shape `(m, 6)`, the response stacks `(F_x, F_y)` with shape `(m, 2, n)`.
pub fn overlay_generate_at(
    params: &OverlayParams,
    points: &[(f64, f64)],
    seed: u64,
) -> Result<SyntheticDataset> {
    let s = &params.sampling;
    s.validate()?;
    let n = points.len();
    if n < 2 || points.iter().all(|p| *p == points[0]) {
        return Err(Error::InvalidParameter("degenerate overlay point set".into()));
    }
    let m = s.samples;
    let mut rng = substream(seed, Stream::Structure);
    let mut x = DenseTensor::zeros(&[m, 6])?;
    let mut clean = DenseTensor::zeros(&[m, 2, n])?;
    for i in 0..m {
        let mut k = [0.0; 20];
        for (c, mag) in params.magnitudes.iter().enumerate() {
            k[c] = mag * rng.sample::<f64, _>(StandardNormal);
            x.set(&[i, c], k[c]);
        }
        let (fx, fy) = overlay_fields(&k, points);
        for pt in 0..n {
            clean.set(&[i, 0, pt], fx[pt]);
            clean.set(&[i, 1, pt], fy[pt]);
        }
    }
    let mut b = DenseTensor::zeros(&[6, 2, n])?;
    for (pt, &(px, py)) in points.iter().enumerate() {
        for (comp, offset) in [(0usize, 0usize), (1, 1)] {
            b.set(&[offset, comp, pt], 1.0);
            b.set(&[2 + offset, comp, pt], px);
            b.set(&[4 + offset, comp, pt], py);
        }
    }
    finish(
        GeneratorParams::Overlay(params.clone()),
        seed,
        vec![x],
        clean,
        params.sigma,
        vec![b],
    )
}

/// Human-readable label, e.g. `procedure-b(seed=7)`.
pub fn describe(params: &GeneratorParams, seed: u64) -> String {
    alloc::format!("{}(seed={seed})", params.name())
}
