//! Finite-dimensional riggings `H₁ ⊆ B ⊆ H₂`.
//!
//! `H₂` carries `(x, y)₂ = xᵀW₂y`. A positive definite `T₁₂` commuting with
//! `W₂` determines `H₁` through `(x, y)₁ = (T₁₂⁻¹x, y)₂`, i.e. `W₁ = W₂T₁₂⁻¹`.
//! Both Hilbert weights are rescaled so that
//! `‖x‖_{H₂} ≤ ‖x‖_B ≤ ‖x‖_{H₁}` with equality attained on some vector.

pub mod embedding;

use alloc::string::ToString;
use core::fmt;
use core::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::ensemble::{self, SeededRng};
use crate::error::{Error, Result};
use crate::matfun::spd_sqrt_pair;
use crate::norm::{BanachNorm, Functional};
use crate::report::{MaxTracker, PropertyReport, Tracker};

/// Which norm a vector (or covector, for `BDual`) is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Space {
    B,
    H1,
    H2,
    BDual,
}

impl FromStr for Space {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "B" | "b" => Ok(Space::B),
            "H1" | "h1" => Ok(Space::H1),
            "H2" | "h2" => Ok(Space::H2),
            "B'" | "B-dual" | "b-dual" | "Bdual" => Ok(Space::BDual),
            other => Err(Error::UnknownSpace(other.to_string())),
        }
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Space::B => "B",
            Space::H1 => "H1",
            Space::H2 => "H2",
            Space::BDual => "B-dual",
        })
    }
}

/// The triple `H₁ ⊆ B ⊆ H₂` at dimension `n`.
#[derive(Debug, Clone)]
pub struct Rigging {
    n: usize,
    b_norm: BanachNorm,
    w2_raw: DMatrix<f64>,
    t12: DMatrix<f64>,
    c_scale: (f64, f64),
    constants_exact: bool,
    w1: DMatrix<f64>,
    w2: DMatrix<f64>,
    w1_inv: DMatrix<f64>,
    w2_inv: DMatrix<f64>,
    w1_sqrt: DMatrix<f64>,
    w1_inv_sqrt: DMatrix<f64>,
    w2_sqrt: DMatrix<f64>,
    w2_inv_sqrt: DMatrix<f64>,
    diagonal: bool,
}

impl PartialEq for Rigging {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.b_norm == other.b_norm
            && self.w2_raw == other.w2_raw
            && self.t12 == other.t12
            && self.c_scale == other.c_scale
    }
}

const SYMMETRY_TOL: f64 = 1e-12;
const COMMUTE_TOL: f64 = 1e-12;

fn is_diagonal(m: &DMatrix<f64>) -> bool {
    m.iter()
        .enumerate()
        .all(|(k, v)| *v == 0.0 || k % m.nrows() == k / m.nrows())
}

fn check_spd(m: &DMatrix<f64>, n: usize, what: &'static str) -> Result<()> {
    if m.shape() != (n, n) {
        return Err(Error::Shape(alloc::format!(
            "{what} is {}x{}, expected {n}x{n}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite(what));
    }
    if (m - m.transpose()).norm() > SYMMETRY_TOL * m.norm() {
        return Err(Error::NotPositiveDefinite(what));
    }
    if m.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite(what));
    }
    Ok(())
}

fn spd_inverse(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    if is_diagonal(m) {
        if m.diagonal().iter().any(|v| !(*v > 0.0)) {
            return Err(Error::NotPositiveDefinite(what));
        }
        return Ok(DMatrix::from_diagonal(&m.diagonal().map(|v| 1.0 / v)));
    }
    let inv = m.clone().cholesky().ok_or(Error::NotPositiveDefinite(what))?.inverse();
    Ok(crate::matfun::symmetrize(&inv))
}

/// Builds a rigging, computing the embedding constants `(c₁, c₂)` so that the
/// norm ordering holds with equality attained.
pub fn make_rigging(n: usize, b_norm: BanachNorm, w2_raw: DMatrix<f64>, t12: DMatrix<f64>) -> Result<Rigging> {
    validate_inputs(n, &b_norm, &w2_raw, &t12)?;
    let c2_bound = embedding::hilbert_over_banach(&w2_raw, &b_norm)?;
    let c2 = 1.0 / c2_bound.value;
    let w2 = &w2_raw * (c2 * c2);
    let w1_unscaled = crate::matfun::symmetrize(&(&w2 * spd_inverse(&t12, "t12")?));
    let c1_bound = embedding::banach_over_hilbert(&w1_unscaled, &b_norm)?;
    let mut r = Rigging::assemble(n, b_norm, w2_raw, t12, (c1_bound.value, c2))?;
    r.constants_exact = c2_bound.exact && c1_bound.exact;
    Ok(r)
}

fn validate_inputs(n: usize, b_norm: &BanachNorm, w2_raw: &DMatrix<f64>, t12: &DMatrix<f64>) -> Result<()> {
    if n == 0 {
        return Err(Error::Shape("dimension must be positive".to_string()));
    }
    b_norm.validate(n)?;
    check_spd(w2_raw, n, "w2")?;
    check_spd(t12, n, "t12")?;
    let defect = (w2_raw * t12 - t12 * w2_raw).norm();
    if defect > COMMUTE_TOL * w2_raw.norm() * t12.norm() {
        return Err(Error::NotCommuting { defect });
    }
    Ok(())
}

impl Rigging {
    /// Rebuilds a rigging from stored constants without recomputing them.
    /// The norm ordering is only guaranteed if `c_scale` came from
    /// [`make_rigging`].
    pub fn from_parts(
        n: usize,
        b_norm: BanachNorm,
        w2_raw: DMatrix<f64>,
        t12: DMatrix<f64>,
        c_scale: (f64, f64),
    ) -> Result<Rigging> {
        validate_inputs(n, &b_norm, &w2_raw, &t12)?;
        let (c1, c2) = c_scale;
        if !(c1 > 0.0 && c2 > 0.0 && c1.is_finite() && c2.is_finite()) {
            return Err(Error::Shape("c_scale entries must be positive".to_string()));
        }
        Rigging::assemble(n, b_norm, w2_raw, t12, c_scale)
    }

    fn assemble(
        n: usize,
        b_norm: BanachNorm,
        w2_raw: DMatrix<f64>,
        t12: DMatrix<f64>,
        c_scale: (f64, f64),
    ) -> Result<Rigging> {
        let (c1, c2) = c_scale;
        let w2 = &w2_raw * (c2 * c2);
        let w1 = crate::matfun::symmetrize(&(&w2 * spd_inverse(&t12, "t12")?)) * (c1 * c1);
        check_spd(&w1, n, "w1")?;
        let w1_inv = spd_inverse(&w1, "w1")?;
        let w2_inv = spd_inverse(&w2, "w2")?;
        let (w1_sqrt, w1_inv_sqrt) = spd_sqrt_pair(&w1)?;
        let (w2_sqrt, w2_inv_sqrt) = spd_sqrt_pair(&w2)?;
        let diagonal = is_diagonal(&w2_raw) && is_diagonal(&t12);
        Ok(Rigging {
            n,
            b_norm,
            w2_raw,
            t12,
            c_scale,
            constants_exact: true,
            w1,
            w2,
            w1_inv,
            w2_inv,
            w1_sqrt,
            w1_inv_sqrt,
            w2_sqrt,
            w2_inv_sqrt,
            diagonal,
        })
    }

    /// Diagonal model from weight vectors.
    pub fn diagonal(b_norm: BanachNorm, w2_raw: &[f64], t12: &[f64]) -> Result<Rigging> {
        let n = w2_raw.len();
        if t12.len() != n {
            return Err(Error::Shape(alloc::format!(
                "w2 has {n} entries, t12 has {}",
                t12.len()
            )));
        }
        make_rigging(
            n,
            b_norm,
            DMatrix::from_diagonal(&DVector::from_row_slice(w2_raw)),
            DMatrix::from_diagonal(&DVector::from_row_slice(t12)),
        )
    }

    /// `B = ℓ²`, `W₁ = W₂ = I`: the Hilbert reduction.
    pub fn identity(n: usize) -> Result<Rigging> {
        make_rigging(n, BanachNorm::lp(2.0), DMatrix::identity(n, n), DMatrix::identity(n, n))
    }

    /// `n = 2`, `B = ℓ¹`, `W₂ = diag(1, 1/4)`, `W₁ = diag(2, 2)`.
    pub fn worked_example() -> Rigging {
        Rigging::diagonal(BanachNorm::lp(1.0), &[1.0, 0.25], &[0.5, 0.125]).expect("worked example is a valid rigging")
    }

    /// Discrete Wiener-like model on `n` interior grid nodes of `[0, 1]`:
    /// sup-norm on the grid, `W₂ = I/n` (discrete `L²`) and `T₁₂` the inverse
    /// of the Dirichlet Laplacian `(n+1)²·tridiag(−1, 2, −1)`.
    pub fn wiener_like(n: usize) -> Result<Rigging> {
        if n == 0 {
            return Err(Error::Shape("dimension must be positive".to_string()));
        }
        let h2 = ((n + 1) * (n + 1)) as f64;
        let lap = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                2.0 * h2
            } else if i.abs_diff(j) == 1 {
                -h2
            } else {
                0.0
            }
        });
        let t12 = spd_inverse(&lap, "laplacian")?;
        make_rigging(n, BanachNorm::SupGrid, DMatrix::identity(n, n) / n as f64, t12)
    }

    /// Diagonal model with `w2_raw` and `t12` entries log-uniform in `[1/4, 4]`.
    pub fn random_diagonal(n: usize, b_norm: BanachNorm, rng: &mut SeededRng) -> Result<Rigging> {
        let w2 = ensemble::log_uniform_diagonal(rng, n, 4.0);
        let t12 = ensemble::log_uniform_diagonal(rng, n, 4.0);
        Rigging::diagonal(b_norm, &w2, &t12)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn b_norm(&self) -> &BanachNorm {
        &self.b_norm
    }

    pub fn w1(&self) -> &DMatrix<f64> {
        &self.w1
    }

    pub fn w2(&self) -> &DMatrix<f64> {
        &self.w2
    }

    pub fn w1_inv(&self) -> &DMatrix<f64> {
        &self.w1_inv
    }

    pub fn w2_inv(&self) -> &DMatrix<f64> {
        &self.w2_inv
    }

    /// `(W^{1/2}, W^{-1/2})` for `H₁` (`i = 1`) or `H₂` (`i = 2`).
    pub fn sqrt_pair(&self, i: u8) -> Result<(&DMatrix<f64>, &DMatrix<f64>)> {
        match i {
            1 => Ok((&self.w1_sqrt, &self.w1_inv_sqrt)),
            2 => Ok((&self.w2_sqrt, &self.w2_inv_sqrt)),
            other => Err(Error::UnknownSpace(alloc::format!("H{other}"))),
        }
    }

    pub fn weight(&self, i: u8) -> Result<&DMatrix<f64>> {
        match i {
            1 => Ok(&self.w1),
            2 => Ok(&self.w2),
            other => Err(Error::UnknownSpace(alloc::format!("H{other}"))),
        }
    }

    pub fn w2_raw(&self) -> &DMatrix<f64> {
        &self.w2_raw
    }

    pub fn t12(&self) -> &DMatrix<f64> {
        &self.t12
    }

    /// `(c₁, c₂)`.
    pub fn c_scale(&self) -> (f64, f64) {
        self.c_scale
    }

    /// Whether `c_scale` came from closed forms rather than ascent.
    pub fn constants_exact(&self) -> bool {
        self.constants_exact
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    /// True for `B = ℓ²` with `W₁ = W₂ = I`.
    pub fn is_identity(&self) -> bool {
        let id = DMatrix::<f64>::identity(self.n, self.n);
        self.b_norm == BanachNorm::P(2.0) && self.w1 == id && self.w2 == id
    }

    fn hilbert_norm(w: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
        libm::sqrt(x.dot(&(w * x)).max(0.0))
    }

    /// Norm of `x` in `space`. For `Space::BDual`, `x` holds covector
    /// coordinates and the dual `B` norm is returned.
    pub fn norm(&self, x: &DVector<f64>, space: Space) -> f64 {
        match space {
            Space::B => self.b_norm.norm(x.as_slice()),
            Space::H1 => Self::hilbert_norm(&self.w1, x),
            Space::H2 => Self::hilbert_norm(&self.w2, x),
            Space::BDual => self.b_norm.dual_norm(x.as_slice()),
        }
    }

    pub fn dual_norm(&self, f: &Functional) -> f64 {
        self.b_norm.dual_norm(f.coords.as_slice())
    }

    /// `(x, y)ᵢ = xᵀWᵢy`.
    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>, i: u8) -> Result<f64> {
        Ok(x.dot(&(self.weight(i)? * y)))
    }

    /// Conjugate isomorphism `Jᵢ: Hᵢ → Hᵢ'`, `x ↦ Wᵢx`.
    pub fn j_map(&self, x: &DVector<f64>, i: u8) -> Result<Functional> {
        Ok(Functional::new(self.weight(i)? * x))
    }

    /// `Jᵢ⁻¹`, `f ↦ Wᵢ⁻¹f`.
    pub fn j_inv(&self, f: &Functional, i: u8) -> Result<DVector<f64>> {
        let inv = match i {
            1 => &self.w1_inv,
            2 => &self.w2_inv,
            other => return Err(Error::UnknownSpace(alloc::format!("H{other}"))),
        };
        Ok(inv * &f.coords)
    }

    /// `φˢ_x = (‖x‖²_B / ‖x‖²_{H₂}) J₂(x)`.
    pub fn special_duality(&self, x: &DVector<f64>) -> Result<Functional> {
        let h2 = x.dot(&(&self.w2 * x));
        if !(h2 > 0.0) {
            return Err(Error::ZeroVector);
        }
        let b = self.norm(x, Space::B);
        Ok(Functional::new(&self.w2 * x * (b * b / h2)))
    }

    /// Samples `trials` Gaussian vectors and asserts the norm ordering with
    /// `1e-12` relative slack. The dual norm of the special duality map
    /// relative to `‖x‖_B` is measured only.
    pub fn check_embedding(&self, trials: usize, seed: u64) -> PropertyReport {
        let mut rng = ensemble::rng(seed);
        let mut lower = Tracker::new("h2_le_b");
        let mut upper = Tracker::new("b_le_h1");
        let mut duality_ratio = MaxTracker::new("special_duality_dual_norm_ratio_max");
        let mut duality_min = MaxTracker::new("special_duality_dual_norm_ratio_min_neg");
        for _ in 0..trials.max(1) {
            let x = ensemble::normal_vector(&mut rng, self.n);
            let (h2, b, h1) = (
                self.norm(&x, Space::H2),
                self.norm(&x, Space::B),
                self.norm(&x, Space::H1),
            );
            // defect > 0 means the ordering is violated
            let d_low = (h2 - b) / b;
            let d_up = (b - h1) / h1;
            lower.record(d_low <= 1e-12, d_low, || x.as_slice().to_vec());
            upper.record(d_up <= 1e-12, d_up, || x.as_slice().to_vec());
            if let Ok(phi) = self.special_duality(&x) {
                let ratio = self.dual_norm(&phi) / b;
                duality_ratio.record(ratio, || x.as_slice().to_vec());
                duality_min.record(-ratio, || x.as_slice().to_vec());
            }
        }
        let mut report = PropertyReport::new("check_embedding", seed, trials.max(1));
        report.push_assertion(lower);
        report.push_assertion(upper);
        report.measured.push(duality_ratio.into_measurement());
        let mut m = duality_min.into_measurement();
        m.quantity = "special_duality_dual_norm_ratio_min".to_string();
        m.value = -m.value;
        report.measured.push(m);
        report
    }
}
