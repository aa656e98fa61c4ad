//! Induced operator norms between the spaces of a rigging.
//!
//! Closed forms: Hilbert-to-Hilbert pairs (largest singular value of
//! `W_to^{1/2} M W_from^{-1/2}`), sources with `p = 1` (extreme points of the
//! unit ball are scaled coordinate vectors), targets with `p = ∞` (row-wise dual
//! norms) and `p = 2` sources/targets. Everything else is estimated by a
//! Boyd-type power iteration whose value is always attained by a concrete
//! vector, hence a lower bound.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::ensemble;
use crate::error::{Error, Result};
use crate::matfun::norm_2;
use crate::norm::BanachNorm;
use crate::rigging::{Rigging, Space};

/// An operator norm and whether it is exact or a power-method estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormValue {
    pub value: f64,
    pub exact: bool,
}

const RESTARTS: usize = 32;
const MAX_ITER: usize = 200;
const POWER_SEED: u64 = 0x0B0E_D0C0_FFEE_0032;

/// A norm on `ℝⁿ` together with its duality maps.
enum NormSpec<'a> {
    Banach(&'a BanachNorm),
    Hilbert {
        w: &'a DMatrix<f64>,
        w_inv: &'a DMatrix<f64>,
    },
}

impl NormSpec<'_> {
    fn value(&self, x: &DVector<f64>) -> f64 {
        match self {
            NormSpec::Banach(b) => b.norm(x.as_slice()),
            NormSpec::Hilbert { w, .. } => libm::sqrt(x.dot(&(*w * x)).max(0.0)),
        }
    }

    fn dual_value(&self, f: &DVector<f64>) -> f64 {
        match self {
            NormSpec::Banach(b) => b.dual_norm(f.as_slice()),
            NormSpec::Hilbert { w_inv, .. } => libm::sqrt(f.dot(&(*w_inv * f)).max(0.0)),
        }
    }

    /// `f` with `⟨y, f⟩ = ‖y‖`, `‖f‖' = 1`.
    fn norming_functional(&self, y: &DVector<f64>) -> DVector<f64> {
        match self {
            NormSpec::Banach(b) => DVector::from_vec(b.norming_functional(y.as_slice())),
            NormSpec::Hilbert { w, .. } => {
                let wy = *w * y;
                let n = libm::sqrt(y.dot(&wy).max(0.0));
                if n == 0.0 {
                    wy
                } else {
                    wy / n
                }
            }
        }
    }

    /// `x` with `‖x‖ = 1`, `⟨x, f⟩ = ‖f‖'`.
    fn norming_vector(&self, f: &DVector<f64>) -> DVector<f64> {
        match self {
            NormSpec::Banach(b) => DVector::from_vec(b.norming_vector(f.as_slice())),
            NormSpec::Hilbert { w_inv, .. } => {
                let x = *w_inv * f;
                let n = libm::sqrt(f.dot(&x).max(0.0));
                if n == 0.0 {
                    x
                } else {
                    x / n
                }
            }
        }
    }
}

fn spec_for<'a>(r: &'a Rigging, s: Space) -> Result<NormSpec<'a>> {
    match s {
        Space::B => Ok(NormSpec::Banach(r.b_norm())),
        Space::H1 => Ok(NormSpec::Hilbert {
            w: r.w1(),
            w_inv: r.w1_inv(),
        }),
        Space::H2 => Ok(NormSpec::Hilbert {
            w: r.w2(),
            w_inv: r.w2_inv(),
        }),
        Space::BDual => Err(Error::UnknownSpace(alloc::format!(
            "{s} (operator norms use B, H1, H2)"
        ))),
    }
}

/// `(S, S⁻¹)` with `‖x‖ = ‖Sx‖₂` for Hilbert spaces and `B = ℓ²` (weighted).
fn euclidean_frame(r: &Rigging, s: Space) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
    match s {
        Space::H1 | Space::H2 => {
            let (a, b) = r.sqrt_pair(if s == Space::H1 { 1 } else { 2 }).ok()?;
            Some((a.clone(), b.clone()))
        }
        Space::B if r.b_norm().p() == 2.0 => {
            let w = r.b_norm().scaling(r.n());
            let d = DVector::from_vec(w.clone());
            let di = d.map(|v| 1.0 / v);
            Some((DMatrix::from_diagonal(&d), DMatrix::from_diagonal(&di)))
        }
        _ => None,
    }
}

/// `‖M‖_{from→to}`.
pub fn opnorm(m: &DMatrix<f64>, from: Space, to: Space, r: &Rigging) -> Result<NormValue> {
    let n = r.n();
    if m.shape() != (n, n) {
        return Err(Error::Shape(alloc::format!(
            "{}x{} operator on dimension {n}",
            m.nrows(),
            m.ncols()
        )));
    }
    let src = spec_for(r, from)?;
    let dst = spec_for(r, to)?;
    if m.iter().all(|v| *v == 0.0) {
        return Ok(NormValue {
            value: 0.0,
            exact: true,
        });
    }

    if let (Some((_, s_from_inv)), Some((s_to, _))) = (euclidean_frame(r, from), euclidean_frame(r, to)) {
        return Ok(NormValue {
            value: norm_2(&(s_to * m * s_from_inv)),
            exact: true,
        });
    }

    if from == Space::B && r.b_norm().p() == 1.0 {
        // unit ball of ‖Ωx‖₁ is the hull of ±eⱼ/ωⱼ
        let omega = r.b_norm().scaling(n);
        let value = (0..n)
            .map(|j| dst.value(&(m.column(j).clone_owned() / omega[j])))
            .fold(0.0, f64::max);
        return Ok(NormValue { value, exact: true });
    }

    if to == Space::B && r.b_norm().p().is_infinite() {
        // ‖Mx‖ = maxᵢ ωᵢ|rowᵢ·x|, each row bounded by its dual norm
        let omega = r.b_norm().scaling(n);
        let value = (0..n)
            .map(|i| omega[i] * src.dual_value(&m.row(i).transpose()))
            .fold(0.0, f64::max);
        return Ok(NormValue { value, exact: true });
    }

    Ok(NormValue {
        value: power_estimate(m, &src, &dst),
        exact: false,
    })
}

/// `‖M‖_{B→B}` shorthand.
pub fn opnorm_b(m: &DMatrix<f64>, r: &Rigging) -> Result<NormValue> {
    opnorm(m, Space::B, Space::B, r)
}

fn power_estimate(m: &DMatrix<f64>, src: &NormSpec<'_>, dst: &NormSpec<'_>) -> f64 {
    let n = m.ncols();
    let mut rng = ensemble::rng(POWER_SEED);
    let mut starts: Vec<DVector<f64>> = (0..RESTARTS - 1)
        .map(|_| ensemble::normal_vector(&mut rng, n))
        .collect();
    // the column of largest target norm is a good deterministic start
    let best_col = (0..n)
        .max_by(|a, b| {
            let va = dst.value(&m.column(*a).clone_owned());
            let vb = dst.value(&m.column(*b).clone_owned());
            va.total_cmp(&vb)
        })
        .unwrap_or(0);
    starts.push(DVector::from_fn(n, |i, _| if i == best_col { 1.0 } else { 0.0 }));

    let mt = m.transpose();
    let mut best = 0.0f64;
    for start in starts {
        let sn = src.value(&start);
        if sn == 0.0 {
            continue;
        }
        let mut x = start / sn;
        let mut est = dst.value(&(m * &x));
        for _ in 0..MAX_ITER {
            let y = m * &x;
            let g = dst.norming_functional(&y);
            let z = &mt * g;
            let x_next = src.norming_vector(&z);
            let xn = src.value(&x_next);
            if xn == 0.0 {
                break;
            }
            let x_next = x_next / xn;
            let next = dst.value(&(m * &x_next));
            if next <= est * (1.0 + 1e-15) {
                if next > est {
                    est = next;
                }
                break;
            }
            est = next;
            x = x_next;
        }
        best = best.max(est);
    }
    best
}
