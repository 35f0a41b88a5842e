//! Matrix SVD utilities, singular value thresholding, nuclear norms, rank
//! estimation by explained energy, and HOSVD.
//!
//! Singular vector signs are normalized so that the largest-magnitude entry
//! of every left singular vector is positive (the paired right vector is
//! flipped with it). This makes every decomposition deterministic.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::linalg::{SymmetricEigen, QR, SVD};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tensor::{DenseTensor, Matrix};

const SVD_MAX_ITER: usize = 10_000;
/// Aspect ratio above which spectral work goes through the smaller Gram matrix.
const GRAM_ASPECT: usize = 2;

/// Thin SVD `M = U diag(σ) Vᵀ` with `σ` nonincreasing.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub v: Matrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for (j, s) in self.singular_values.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.transpose()
    }
}

fn check_finite(m: &Matrix) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidParameter("matrix has non-finite entries".into()))
    }
}

/// Flips the sign of column `j` of `u` (and of `v` when given) so that the
/// largest-magnitude entry of the `u` column is positive.
fn normalize_signs(u: &mut Matrix, mut v: Option<&mut Matrix>) {
    for j in 0..u.ncols() {
        let mut best = 0.0f64;
        let mut sign = 1.0;
        for x in u.column(j).iter() {
            if x.abs() > best {
                best = x.abs();
                sign = if *x < 0.0 { -1.0 } else { 1.0 };
            }
        }
        if sign < 0.0 {
            u.column_mut(j).neg_mut();
            if let Some(v) = v.as_deref_mut() {
                v.column_mut(j).neg_mut();
            }
        }
    }
}

fn raw_svd(m: &Matrix, vectors: bool) -> Result<SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    SVD::try_new(m.clone(), vectors, vectors, f64::EPSILON, SVD_MAX_ITER)
        .ok_or(Error::NoConvergence("svd"))
}

/// Thin singular value decomposition with deterministic signs.
pub fn svd(m: &Matrix) -> Result<SvdResult> {
    check_finite(m)?;
    // nalgebra is faster on tall input, so decompose the transpose of wide matrices.
    let (mut u, mut v, s) = if m.ncols() > m.nrows() {
        let d = raw_svd(&m.transpose(), true)?;
        let u_t = d.u.ok_or(Error::NoConvergence("svd"))?;
        let v_t = d.v_t.ok_or(Error::NoConvergence("svd"))?;
        (v_t.transpose(), u_t, d.singular_values)
    } else {
        let d = raw_svd(m, true)?;
        let u = d.u.ok_or(Error::NoConvergence("svd"))?;
        let v_t = d.v_t.ok_or(Error::NoConvergence("svd"))?;
        (u, v_t.transpose(), d.singular_values)
    };
    normalize_signs(&mut u, Some(&mut v));
    Ok(SvdResult {
        u,
        singular_values: s.iter().copied().collect(),
        v,
    })
}

/// Singular values only, nonincreasing.
pub fn singular_values(m: &Matrix) -> Result<Vec<f64>> {
    check_finite(m)?;
    let d = if m.ncols() > m.nrows() {
        raw_svd(&m.transpose(), false)?
    } else {
        raw_svd(m, false)?
    };
    Ok(d.singular_values.iter().copied().collect())
}

fn uses_gram(m: &Matrix) -> bool {
    let (r, c) = m.shape();
    r.max(c) >= GRAM_ASPECT * r.min(c)
}

/// Eigenpairs of a symmetric matrix sorted by decreasing eigenvalue.
fn sorted_sym_eigen(g: Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = g.nrows();
    let eig = SymmetricEigen::try_new(g, f64::EPSILON, SVD_MAX_ITER)
        .ok_or(Error::NoConvergence("symmetric eigendecomposition"))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vecs))
}

/// Squared singular values (energies), nonincreasing. Wide or tall matrices
/// go through the eigenvalues of the smaller Gram matrix.
pub fn energy_spectrum(m: &Matrix) -> Result<Vec<f64>> {
    check_finite(m)?;
    if uses_gram(m) {
        let g = if m.nrows() <= m.ncols() {
            m * m.transpose()
        } else {
            m.transpose() * m
        };
        let (vals, _) = sorted_sym_eigen(g)?;
        Ok(vals.into_iter().map(|v| v.max(0.0)).collect())
    } else {
        Ok(singular_values(m)?.into_iter().map(|s| s * s).collect())
    }
}

/// Result of a singular value thresholding step.
#[derive(Debug, Clone)]
pub struct Thresholded {
    pub matrix: Matrix,
    /// Singular values after shrinkage (zeros dropped), nonincreasing.
    pub singular_values: Vec<f64>,
}

/// Singular value soft-thresholding: the minimizer of
/// `τ‖X‖_* + ½‖X − M‖_F²`, i.e. `U diag(max(0, σ − τ)) Vᵀ`.
pub fn svt(m: &Matrix, tau: f64) -> Result<Matrix> {
    Ok(svt_detailed(m, tau)?.matrix)
}

pub fn svt_detailed(m: &Matrix, tau: f64) -> Result<Thresholded> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter(alloc::format!(
            "threshold must be a finite nonnegative number, got {tau}"
        )));
    }
    check_finite(m)?;
    if uses_gram(m) {
        return svt_gram(m, tau);
    }
    let d = svd(m)?;
    let kept: Vec<f64> = d
        .singular_values
        .iter()
        .map(|s| s - tau)
        .take_while(|s| *s > 0.0)
        .collect();
    let k = kept.len();
    let mut us = d.u.columns(0, k).into_owned();
    for (j, s) in kept.iter().enumerate() {
        us.column_mut(j).scale_mut(*s);
    }
    let matrix = us * d.v.columns(0, k).transpose();
    Ok(Thresholded {
        matrix,
        singular_values: kept,
    })
}

/// SVT through the eigendecomposition of the smaller Gram matrix:
/// `X = U diag(max(0, 1 − τ/σ)) Uᵀ M` (wide) or `M V diag(…) Vᵀ` (tall).
fn svt_gram(m: &Matrix, tau: f64) -> Result<Thresholded> {
    let wide = m.nrows() <= m.ncols();
    let g = if wide {
        m * m.transpose()
    } else {
        m.transpose() * m
    };
    let (vals, vecs) = sorted_sym_eigen(g)?;
    let mut kept = Vec::new();
    let mut factors = Vec::new();
    for &lam in &vals {
        let s = libm::sqrt(lam.max(0.0));
        if s <= tau || s == 0.0 {
            break;
        }
        kept.push(s - tau);
        factors.push((s - tau) / s);
    }
    let k = kept.len();
    let basis = vecs.columns(0, k).into_owned();
    let mut scaled = basis.clone();
    for (j, f) in factors.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*f);
    }
    let matrix = if wide {
        scaled * (basis.transpose() * m)
    } else {
        (m * basis) * scaled.transpose()
    };
    Ok(Thresholded {
        matrix,
        singular_values: kept,
    })
}

pub fn matrix_nuclear_norm(m: &Matrix) -> Result<f64> {
    Ok(singular_values(m)?.iter().sum())
}

pub(crate) fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() || weights.iter().any(|&a| !(a > 0.0)) {
        return Err(Error::InvalidParameter(
            "nuclear-norm weights must be positive".into(),
        ));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(alloc::format!(
            "nuclear-norm weights must sum to 1, got {sum}"
        )));
    }
    Ok(())
}

/// `Σ_i α_i ‖T_(i)‖_*` over every mode of `t`.
pub fn tensor_nuclear_norm(t: &DenseTensor, weights: &[f64]) -> Result<f64> {
    let modes: Vec<usize> = (0..t.order()).collect();
    weighted_nuclear_norm(t, &modes, weights)
}

/// `Σ_i α_i ‖T_(modes[i])‖_*` over a subset of modes.
pub fn weighted_nuclear_norm(t: &DenseTensor, modes: &[usize], weights: &[f64]) -> Result<f64> {
    if modes.len() != weights.len() {
        return Err(Error::InvalidParameter(alloc::format!(
            "{} weights for {} modes",
            weights.len(),
            modes.len()
        )));
    }
    check_weights(weights)?;
    let mut total = 0.0;
    for (&mode, &a) in modes.iter().zip(weights) {
        total += a * matrix_nuclear_norm(&t.matricize(mode)?)?;
    }
    Ok(total)
}

fn check_ratio(ratio: f64) -> Result<()> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "explained-energy ratio must lie in (0, 1], got {ratio}"
        )));
    }
    Ok(())
}

/// Smallest `r` whose leading energies reach `ratio` of the total.
/// Returns 0 only for an all-zero spectrum.
pub fn rank_from_energies(energies: &[f64], ratio: f64) -> Result<usize> {
    check_ratio(ratio)?;
    let total: f64 = energies.iter().sum();
    if total <= 0.0 {
        return Ok(0);
    }
    let mut acc = 0.0;
    for (i, e) in energies.iter().enumerate() {
        acc += e;
        if acc >= ratio * total {
            return Ok(i + 1);
        }
    }
    Ok(energies.len())
}

/// Number of leading singular values explaining `ratio` of the squared
/// Frobenius energy. A zero matrix yields 0.
pub fn estimate_rank(m: &Matrix, ratio: f64) -> Result<usize> {
    check_ratio(ratio)?;
    rank_from_energies(&energy_spectrum(m)?, ratio)
}

/// First `k` left singular vectors of `m`, orthonormal, sign-normalized.
pub fn leading_left_singular_vectors(m: &Matrix, k: usize) -> Result<Matrix> {
    check_finite(m)?;
    if k > m.nrows() {
        return Err(Error::RankExceedsDimension {
            mode: 0,
            rank: k,
            dim: m.nrows(),
        });
    }
    if m.nrows() <= m.ncols() && uses_gram(m) {
        let (_, vecs) = sorted_sym_eigen(m * m.transpose())?;
        let mut u = vecs.columns(0, k).into_owned();
        normalize_signs(&mut u, None);
        return Ok(u);
    }
    let d = svd(m)?;
    if d.u.ncols() >= k {
        return Ok(d.u.columns(0, k).into_owned());
    }
    // Fewer columns than requested: complete the basis deterministically.
    Ok(complete_basis(&d.u, k))
}

/// Extends orthonormal columns `q` to `k` columns with Gram–Schmidt against
/// the canonical basis.
pub(crate) fn complete_basis(q: &Matrix, k: usize) -> Matrix {
    let n = q.nrows();
    let mut cols: Vec<nalgebra::DVector<f64>> = q.column_iter().map(|c| c.into_owned()).collect();
    let mut e = 0;
    while cols.len() < k && e < n {
        let mut v = nalgebra::DVector::<f64>::zeros(n);
        v[e] = 1.0;
        e += 1;
        for _ in 0..2 {
            for c in &cols {
                let proj = c.dot(&v);
                v.axpy(-proj, c, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            cols.push(v / norm);
        }
    }
    Matrix::from_columns(&cols)
}

/// Random matrix with orthonormal columns (QR of a Gaussian matrix).
pub fn random_orthonormal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    assert!(cols <= rows, "cannot build {cols} orthonormal columns in R^{rows}");
    let g = Matrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = QR::new(g);
    let mut q = qr.q();
    normalize_signs(&mut q, None);
    q
}

/// Tucker factorization `core ×_1 U_1 … ×_n U_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TuckerFactors {
    pub core: DenseTensor,
    /// Factor `k` is `P_k × R_k`.
    pub factors: Vec<Matrix>,
}

impl TuckerFactors {
    pub fn ranks(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.ncols()).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.nrows()).collect()
    }

    pub fn reconstruct(&self) -> Result<DenseTensor> {
        let mut t = self.core.clone();
        for (k, f) in self.factors.iter().enumerate() {
            t = t.mode_product(f, k)?;
        }
        Ok(t)
    }
}

/// How many components to keep per mode.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RankSpec {
    Fixed(Vec<usize>),
    /// Explained-energy ratio applied to every mode.
    Ratio(f64),
}

/// Truncated higher-order SVD.
pub fn hosvd(t: &DenseTensor, ranks: &RankSpec) -> Result<TuckerFactors> {
    let n = t.order();
    let targets = match ranks {
        RankSpec::Fixed(r) => {
            if r.len() != n {
                return Err(Error::InvalidParameter(alloc::format!(
                    "{} ranks for an order-{n} tensor",
                    r.len()
                )));
            }
            r.clone()
        }
        RankSpec::Ratio(ratio) => tucker_rank_estimate(t, *ratio)?,
    };
    let mut factors = Vec::with_capacity(n);
    for (k, &r) in targets.iter().enumerate() {
        let dim = t.shape()[k];
        if r == 0 || r > dim {
            return Err(Error::RankExceedsDimension { mode: k, rank: r, dim });
        }
        factors.push(leading_left_singular_vectors(&t.matricize(k)?, r)?);
    }
    let mut core = t.clone();
    for (k, f) in factors.iter().enumerate() {
        core = core.mode_product(&f.transpose(), k)?;
    }
    Ok(TuckerFactors { core, factors })
}

/// Per-mode rank estimates over every mode of `t`.
pub fn tucker_rank_estimate(t: &DenseTensor, ratio: f64) -> Result<Vec<usize>> {
    let modes: Vec<usize> = (0..t.order()).collect();
    tucker_rank_estimate_modes(t, &modes, ratio)
}

/// Per-mode rank estimates restricted to `modes`.
pub fn tucker_rank_estimate_modes(t: &DenseTensor, modes: &[usize], ratio: f64) -> Result<Vec<usize>> {
    check_ratio(ratio)?;
    if t.data().iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroTensor);
    }
    let mut ranks = vec![0; modes.len()];
    for (r, &k) in ranks.iter_mut().zip(modes) {
        *r = estimate_rank(&t.matricize(k)?, ratio)?;
    }
    Ok(ranks)
}

/// Solves `min ‖A X − B‖_F` through the normal equations, falling back to
/// a `1e-8·I` ridge when `AᵀA` is not positive definite.
pub fn least_squares(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let ata = a.transpose() * a;
    let atb = a.transpose() * b;
    if let Some(ch) = ata.clone().cholesky() {
        let x = ch.solve(&atb);
        if x.iter().all(|v| v.is_finite()) {
            return Ok(x);
        }
    }
    let n = ata.nrows();
    let ridged = ata + Matrix::identity(n, n) * 1e-8;
    let ch = ridged
        .cholesky()
        .ok_or(Error::NoConvergence("ridge least squares"))?;
    Ok(ch.solve(&atb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rand_matrix(r: usize, c: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
    }

    fn orthonormality_error(u: &Matrix) -> f64 {
        let k = u.ncols();
        (u.transpose() * u - Matrix::identity(k, k)).abs().max()
    }

    #[test]
    fn diag_svd() {
        let m = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 3.0]));
        let d = svd(&m).unwrap();
        assert_eq!(d.singular_values, vec![3.0, 1.0]);
        let z = svd(&Matrix::zeros(3, 2)).unwrap();
        assert!(z.singular_values.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn svd_reconstructs_random() {
        for (r, c) in [(6, 4), (4, 6), (3, 40), (40, 3)] {
            let m = rand_matrix(r, c, (r * 100 + c) as u64);
            let d = svd(&m).unwrap();
            let err = (d.reconstruct() - &m).norm() / m.norm();
            assert!(err <= 1e-10, "{r}x{c}: {err}");
            assert!(orthonormality_error(&d.u) < 1e-10);
            assert!(orthonormality_error(&d.v) < 1e-10);
            assert!(d.singular_values.windows(2).all(|w| w[0] >= w[1]));
            for j in 0..d.u.ncols() {
                let col = d.u.column(j);
                let big = col.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
                assert!(big > 0.0);
            }
        }
    }

    #[test]
    fn svd_rejects_nan() {
        let mut m = Matrix::zeros(2, 2);
        m[(0, 1)] = f64::NAN;
        assert!(svd(&m).is_err());
    }

    #[test]
    fn svt_diag_and_large_threshold() {
        let m = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0]));
        let s = svt(&m, 2.0).unwrap();
        let expected = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 0.0]));
        assert!((s - expected).norm() < 1e-14);
        let r = rand_matrix(5, 7, 3);
        let smax = singular_values(&r).unwrap()[0];
        assert_eq!(svt(&r, smax).unwrap().norm(), 0.0);
        assert!(svt(&r, -1.0).is_err());
    }

    #[test]
    fn gram_and_direct_svt_agree() {
        for (r, c) in [(5, 60), (60, 5)] {
            let m = rand_matrix(r, c, 11);
            let tau = singular_values(&m).unwrap()[2];
            let fast = svt_gram(&m, tau).unwrap();
            let d = svd(&m).unwrap();
            let mut slow = Matrix::zeros(r, c);
            for (j, s) in d.singular_values.iter().enumerate() {
                if *s > tau {
                    slow += d.u.column(j) * d.v.column(j).transpose() * (s - tau);
                }
            }
            assert!((fast.matrix - slow).norm() < 1e-10);
            assert_eq!(fast.singular_values.len(), 2);
        }
    }

    #[test]
    fn nuclear_norms() {
        let m = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0]));
        assert!((matrix_nuclear_norm(&m).unwrap() - 4.0).abs() < 1e-14);
        let r = rand_matrix(3, 5, 9);
        let t = DenseTensor::from_matrix(&r).unwrap();
        let tn = tensor_nuclear_norm(&t, &[0.5, 0.5]).unwrap();
        assert!((tn - matrix_nuclear_norm(&r).unwrap()).abs() < 1e-12);
        assert!(tensor_nuclear_norm(&t, &[0.5, 0.6]).is_err());
        assert!(tensor_nuclear_norm(&t, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn rank_estimates() {
        assert_eq!(estimate_rank(&Matrix::identity(5, 5), 0.5).unwrap(), 3);
        assert_eq!(estimate_rank(&Matrix::zeros(3, 3), 0.9).unwrap(), 0);
        let r = rand_matrix(4, 4, 1);
        assert_eq!(estimate_rank(&r, 1e-12).unwrap(), 1);
        assert!(estimate_rank(&r, 0.0).is_err());
        assert!(estimate_rank(&r, 1.5).is_err());
        // exact rank 2 from two random outer products
        let a = rand_matrix(6, 1, 2);
        let b = rand_matrix(1, 9, 3);
        let c = rand_matrix(6, 1, 4);
        let d = rand_matrix(1, 9, 5);
        let m = &a * &b + &c * &d;
        assert_eq!(estimate_rank(&m, 0.999).unwrap(), 2);
    }

    #[test]
    fn rank_monotone_in_ratio() {
        let m = rand_matrix(6, 30, 8);
        let mut last = 0;
        for i in 1..=100 {
            let r = estimate_rank(&m, i as f64 / 100.0).unwrap();
            assert!(r >= last);
            last = r;
        }
    }

    #[test]
    fn hosvd_full_rank_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = DenseTensor::from_fn(&[3, 4, 2], |_| rng.sample(StandardNormal)).unwrap();
        let f = hosvd(&t, &RankSpec::Fixed(vec![3, 4, 2])).unwrap();
        let err = f.reconstruct().unwrap().distance(&t).unwrap() / t.frobenius_norm();
        assert!(err < 1e-12);
        for u in &f.factors {
            assert!(orthonormality_error(u) < 1e-10);
        }
        assert!(hosvd(&t, &RankSpec::Fixed(vec![4, 4, 2])).is_err());
        assert_eq!(tucker_rank_estimate(&t, 1.0).unwrap(), vec![3, 4, 2]);
    }

    #[test]
    fn rank_one_tucker_estimate() {
        let t = DenseTensor::from_fn(&[3, 4, 5], |i| {
            (1.0 + i[0] as f64) * (2.0 - i[1] as f64) * (0.5 + i[2] as f64)
        })
        .unwrap();
        assert_eq!(tucker_rank_estimate(&t, 0.99).unwrap(), vec![1, 1, 1]);
        assert_eq!(
            tucker_rank_estimate(&DenseTensor::zeros(&[2, 2]).unwrap(), 0.9),
            Err(Error::ZeroTensor)
        );
    }

    #[test]
    fn random_orthonormal_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = random_orthonormal(7, 3, &mut rng);
        assert!(orthonormality_error(&q) < 1e-12);
    }

    #[test]
    fn complete_basis_extends() {
        let q = Matrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let full = complete_basis(&q, 3);
        assert!(orthonormality_error(&full) < 1e-12);
    }

    #[test]
    fn least_squares_exact_and_ridge() {
        let a = rand_matrix(10, 3, 2);
        let x = rand_matrix(3, 2, 3);
        let b = &a * &x;
        assert!((least_squares(&a, &b).unwrap() - x).norm() < 1e-10);
        let degenerate = Matrix::zeros(4, 2);
        let sol = least_squares(&degenerate, &Matrix::zeros(4, 1)).unwrap();
        assert!(sol.iter().all(|v| v.is_finite()));
    }
}
