//! Dense matrix functions: square roots of weighted-symmetric PSD matrices,
//! the exponential, resolvents, the pseudo-inverse, spectra and induced norms.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub mod opnorm;

pub use opnorm::{opnorm, opnorm_b, NormValue};

/// Symmetric part `(M + Mᵀ)/2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Relative asymmetry `‖M − Mᵀ‖_F / ‖M‖_F` (zero for `M = 0`).
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = m.norm();
    if scale == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).norm() / scale
}

/// Eigendecomposition of the symmetric part of `m`.
pub fn sym_eigen(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let eig = SymmetricEigen::try_new(symmetrize(m), f64::EPSILON, 0)
        .ok_or(Error::NoConvergence("symmetric eigendecomposition"))?;
    Ok((eig.eigenvalues, eig.eigenvectors))
}

/// `V f(Λ) Vᵀ` for a symmetric eigendecomposition.
fn apply_spectral(values: &DVector<f64>, vectors: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let mut scaled = vectors.clone();
    for (j, lam) in values.iter().enumerate() {
        let fl = f(*lam);
        scaled.column_mut(j).scale_mut(fl);
    }
    scaled * vectors.transpose()
}

/// `(W^{1/2}, W^{-1/2})` for a symmetric positive definite `W`.
pub fn spd_sqrt_pair(w: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if w.nrows() != w.ncols() {
        return Err(Error::Shape(alloc::format!("{}x{} weight", w.nrows(), w.ncols())));
    }
    let n = w.nrows();
    if (0..n).all(|j| (0..n).all(|i| i == j || w[(i, j)] == 0.0)) {
        let d = w.diagonal();
        if d.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::NotPositiveDefinite("weight"));
        }
        return Ok((
            DMatrix::from_diagonal(&d.map(libm::sqrt)),
            DMatrix::from_diagonal(&d.map(|v| 1.0 / libm::sqrt(v))),
        ));
    }
    let (values, vectors) = sym_eigen(w)?;
    if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::NotPositiveDefinite("weight"));
    }
    let sqrt = apply_spectral(&values, &vectors, libm::sqrt);
    let inv_sqrt = apply_spectral(&values, &vectors, |v| 1.0 / libm::sqrt(v));
    Ok((sqrt, inv_sqrt))
}

/// A matrix `M` that is self-adjoint with respect to the inner product
/// `(x, y)_W = xᵀWy`, i.e. `WM = MᵀW`. Functions of `M` are evaluated in the
/// frame `W^{1/2} M W^{-1/2}`, where it is a symmetric matrix.
#[derive(Debug, Clone)]
pub struct WeightedSymmetric {
    values: DVector<f64>,
    vectors: DMatrix<f64>,
    w_sqrt: DMatrix<f64>,
    w_inv_sqrt: DMatrix<f64>,
}

/// Relative tolerance on the frame symmetry of a PSD-like input.
pub const FRAME_SYMMETRY_TOL: f64 = 1e-8;
/// Most negative admissible eigenvalue, relative to the spectral radius.
pub const NEGATIVE_EIGEN_TOL: f64 = 1e-8;
/// Eigenvalues below this fraction of the largest are clamped to zero.
pub const CLAMP_TOL: f64 = 1e-12;

impl WeightedSymmetric {
    /// Decomposes `m` in the frame of `w`, given `w^{1/2}` and `w^{-1/2}`.
    pub fn new(m: &DMatrix<f64>, w_sqrt: &DMatrix<f64>, w_inv_sqrt: &DMatrix<f64>) -> Result<Self> {
        let framed = w_sqrt * m * w_inv_sqrt;
        let defect = asymmetry(&framed);
        if !(defect <= FRAME_SYMMETRY_TOL) {
            return Err(Error::NotPsdLike { defect });
        }
        let (values, vectors) = sym_eigen(&framed)?;
        Ok(WeightedSymmetric {
            values,
            vectors,
            w_sqrt: w_sqrt.clone(),
            w_inv_sqrt: w_inv_sqrt.clone(),
        })
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.values
    }

    /// Largest eigenvalue magnitude.
    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Rejects spectra below `−NEGATIVE_EIGEN_TOL·ρ` and returns the
    /// eigenvalues with rounding negatives (below `CLAMP_TOL·ρ`) set to zero.
    pub fn clamped_psd_values(&self) -> Result<DVector<f64>> {
        let rho = self.spectral_radius();
        let min = self.values.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -NEGATIVE_EIGEN_TOL * rho {
            return Err(Error::NotPsdLike { defect: -min });
        }
        let floor = CLAMP_TOL * rho;
        Ok(self.values.map(|v| if v < floor { 0.0 } else { v }))
    }

    /// `f(M)` for a function of the (clamped, nonnegative) spectrum.
    pub fn apply_psd(&self, f: impl Fn(f64) -> f64) -> Result<DMatrix<f64>> {
        let values = self.clamped_psd_values()?;
        let framed = apply_spectral(&values, &self.vectors, f);
        Ok(&self.w_inv_sqrt * framed * &self.w_sqrt)
    }

    /// Number of eigenvalues above the clamping threshold.
    pub fn rank(&self) -> usize {
        let floor = CLAMP_TOL * self.spectral_radius();
        self.values.iter().filter(|v| **v > floor).count()
    }
}

/// Principal square root of a matrix similar to a symmetric PSD matrix via
/// the SPD weight `w`.
pub fn sqrt_psd_like(m: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (s, si) = spd_sqrt_pair(w)?;
    WeightedSymmetric::new(m, &s, &si)?.apply_psd(libm::sqrt)
}

/// Moore–Penrose pseudo-inverse. Singular values at or below `1e-12·σ_max`
/// are treated as zero.
pub fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return DMatrix::zeros(c, r);
    }
    let svd = SVD::new(m.clone(), true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    if smax == 0.0 {
        return DMatrix::zeros(c, r);
    }
    let cut = 1e-12 * smax;
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let mut out = DMatrix::zeros(c, r);
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s > cut {
            out += (vt.row(k).transpose() / *s) * u.column(k).transpose();
        }
    }
    out
}

/// Resolvent `R(λ, M) = (λI − M)⁻¹`.
pub fn resolvent(m: &DMatrix<f64>, lambda: f64) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let shifted = DMatrix::identity(n, n) * lambda - m;
    let inv = shifted.clone().lu().try_inverse().ok_or(Error::Singular { lambda })?;
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular { lambda });
    }
    // A residual test alone accepts near-singular systems; also reject
    // Frobenius condition numbers beyond ~1/ε.
    let cond = shifted.norm() * inv.norm();
    let residual = (&shifted * &inv - DMatrix::identity(n, n)).norm();
    if !(residual <= 1e-10 * n as f64) || !(cond < 1e14) {
        return Err(Error::Singular { lambda });
    }
    Ok(inv)
}

/// Induced `ℓ¹` norm (maximum absolute column sum).
pub fn norm_l1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Induced `ℓ^∞` norm (maximum absolute row sum).
pub fn norm_linf(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Spectral norm (largest singular value).
pub fn norm_2(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// Largest 1-norms for which the [m/m] Padé approximant reaches unit roundoff.
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.53939833006323e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA13: f64 = 5.371920351148152;

/// `U` (odd part) and `V` (even part) of a low-order Padé approximant.
fn pade_low(a: &DMatrix<f64>, b: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let a2 = a * a;
    let mut power = DMatrix::identity(n, n);
    let mut u = DMatrix::zeros(n, n);
    let mut v = DMatrix::zeros(n, n);
    for k in 0..b.len() / 2 {
        v += &power * b[2 * k];
        u += &power * b[2 * k + 1];
        power = &power * &a2;
    }
    (a * u, v)
}

fn pade13(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let b = &PADE13;
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1];
    let u = a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + id * b[0];
    (u, v)
}

/// `exp(tM)` by scaling and squaring with diagonal Padé approximants of
/// degree 3, 5, 7, 9 or 13 selected from the 1-norm.
pub fn expm(m: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if t == 0.0 || n == 0 {
        return Ok(DMatrix::identity(n, n));
    }
    let a = m * t;
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow);
    }
    let norm = norm_l1(&a);
    let mut squarings = 0u32;
    let (u, v) = if let Some((deg, _)) = THETA.iter().find(|(_, theta)| norm <= *theta) {
        let coeffs: &[f64] = match deg {
            3 => &PADE3,
            5 => &PADE5,
            7 => &PADE7,
            _ => &PADE9,
        };
        pade_low(&a, coeffs)
    } else {
        let s = libm::ceil(libm::log2(norm / THETA13)).max(0.0);
        if s > 1023.0 {
            return Err(Error::Overflow);
        }
        squarings = s as u32;
        pade13(&(a * libm::exp2(-s)))
    };
    let denom = &v - &u;
    let numer = v + u;
    let mut result = denom.lu().solve(&numer).ok_or(Error::Overflow)?;
    for _ in 0..squarings {
        result = &result * &result;
    }
    if result.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow);
    }
    Ok(result)
}

/// Eigenvalues and (when available) an eigenvector basis of a real matrix.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    /// Columns are eigenvectors; `None` unless `diagonalizable`.
    pub basis: Option<DMatrix<Complex64>>,
    pub diagonalizable: bool,
}

/// Relative residual accepted for `M·V = V·Λ`.
const EIGENPAIR_TOL: f64 = 1e-8;

impl Spectrum {
    /// Eigenvalues from the real Schur form; eigenvectors by inverse
    /// iteration, orthogonalized within clusters of equal eigenvalues.
    pub fn of(m: &DMatrix<f64>) -> Result<Spectrum> {
        let n = m.nrows();
        if n == 0 {
            return Ok(Spectrum {
                eigenvalues: Vec::new(),
                basis: Some(DMatrix::zeros(0, 0)),
                diagonalizable: true,
            });
        }
        let schur =
            nalgebra::Schur::try_new(m.clone(), f64::EPSILON, 0).ok_or(Error::NoConvergence("Schur decomposition"))?;
        let eigenvalues: Vec<Complex64> = schur
            .complex_eigenvalues()
            .iter()
            .map(|z| Complex64::new(z.re, z.im))
            .collect();

        let scale = m.norm().max(f64::MIN_POSITIVE);
        let mc: DMatrix<Complex64> = m.map(|v| Complex64::new(v, 0.0));
        let mut basis = DMatrix::<Complex64>::zeros(n, n);
        for (k, lam) in eigenvalues.iter().enumerate() {
            let cluster: Vec<usize> = (0..k)
                .filter(|j| (eigenvalues[*j] - lam).norm() <= 1e-8 * scale)
                .collect();
            let shift = *lam + Complex64::new(1e-10 * scale, 1e-10 * scale);
            let shifted = &mc - DMatrix::<Complex64>::identity(n, n) * shift;
            let lu = shifted.lu();
            let mut v =
                DVector::<Complex64>::from_fn(n, |i, _| Complex64::new(1.0 + ((i * 7 + k * 3) % 5) as f64 * 0.1, 0.0));
            v[k % n] += Complex64::new(1.0, 0.0);
            for _ in 0..3 {
                let Some(next) = lu.solve(&v) else { break };
                v = next;
                for j in &cluster {
                    let q = basis.column(*j).clone_owned();
                    let coeff = q.dotc(&v);
                    v -= q * coeff;
                }
                let nv = v.norm();
                if nv == 0.0 || !nv.is_finite() {
                    break;
                }
                v /= Complex64::new(nv, 0.0);
            }
            basis.set_column(k, &v);
        }

        let lambda = DMatrix::<Complex64>::from_diagonal(&DVector::from_vec(eigenvalues.clone()));
        let residual = (&mc * &basis - &basis * lambda).norm();
        let finite = basis.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        let invertible = finite && basis.clone().lu().try_inverse().is_some();
        let diagonalizable = finite && invertible && residual <= EIGENPAIR_TOL * scale * basis.norm();
        Ok(Spectrum {
            eigenvalues,
            basis: if diagonalizable { Some(basis) } else { None },
            diagonalizable,
        })
    }

    /// Largest real part.
    pub fn abscissa(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest imaginary part in absolute value.
    pub fn max_imag(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn min_real(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.re).fold(f64::INFINITY, f64::min)
    }

    /// Frobenius condition number of the eigenvector basis.
    pub fn condition(&self) -> Option<f64> {
        let b = self.basis.as_ref()?;
        let inv = b.clone().lu().try_inverse()?;
        Some(b.norm() * inv.norm())
    }

    /// `exp(tM) = V exp(tΛ) V⁻¹`, real part. `None` if not diagonalizable.
    pub fn exp(&self, t: f64) -> Option<DMatrix<f64>> {
        let b = self.basis.as_ref()?;
        let inv = b.clone().lu().try_inverse()?;
        let d = DVector::from_iterator(self.eigenvalues.len(), self.eigenvalues.iter().map(|z| (z * t).exp()));
        let e = b * DMatrix::from_diagonal(&d) * inv;
        Some(e.map(|z| z.re))
    }
}
