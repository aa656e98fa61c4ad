//! Embedding constants between a Hilbert norm `‖x‖_W = √(xᵀWx)` and a
//! (weighted) `ℓᵖ` norm.
//!
//! Weighted norms `‖(ωᵢxᵢ)‖_p` are reduced to plain `ℓᵖ` by the substitution
//! `y = Ωx`, which replaces `W` with `Ω⁻¹WΩ⁻¹`. Closed forms cover diagonal
//! `W` for every `p` (Hölder) and the extreme-point cases `p ∈ {1, 2, ∞}`
//! for full `W`; anything else falls back to projected gradient ascent.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::ensemble;
use crate::error::{Error, Result};
use crate::matfun::sym_eigen;
use crate::norm::{lp_norm, BanachNorm};

/// Supremum of a norm ratio, with a flag telling whether it is a closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub value: f64,
    pub exact: bool,
}

impl Bound {
    fn exact(value: f64) -> Self {
        Bound { value, exact: true }
    }
}

const ASCENT_RESTARTS: usize = 64;
const ASCENT_SEED: u64 = 0x5EED_0E3B_ED00_0001;
const MAX_SIGN_ENUMERATION: usize = 24;

/// `sup_x ‖x‖_W / ‖x‖_B`.
pub fn hilbert_over_banach(w: &DMatrix<f64>, b: &BanachNorm) -> Result<Bound> {
    let (wr, p) = reduce(w, b);
    if let Some(d) = diagonal_of(&wr) {
        let v = if p <= 2.0 {
            max(&d)
        } else if p.is_infinite() {
            d.iter().sum()
        } else {
            lp_norm(&d, p / (p - 2.0))
        };
        return Ok(Bound::exact(libm::sqrt(v)));
    }
    let n = wr.nrows();
    if p == 1.0 {
        let diag: Vec<f64> = wr.diagonal().iter().cloned().collect();
        return Ok(Bound::exact(libm::sqrt(max(&diag))));
    }
    if p == 2.0 {
        let (values, _) = sym_eigen(&wr)?;
        return Ok(Bound::exact(libm::sqrt(values.max())));
    }
    if p.is_infinite() && n <= MAX_SIGN_ENUMERATION {
        return Ok(Bound::exact(libm::sqrt(max_sign_quadratic(&wr))));
    }
    Ok(ascent(
        n,
        |y| hilbert(&wr, y),
        |y| lp_norm(y.as_slice(), p),
        |y| hilbert_grad(&wr, y),
        |y| lp_grad(y, p),
    ))
}

/// `sup_x ‖x‖_B / ‖x‖_W`.
pub fn banach_over_hilbert(w: &DMatrix<f64>, b: &BanachNorm) -> Result<Bound> {
    let (wr, p) = reduce(w, b);
    if let Some(d) = diagonal_of(&wr) {
        if p >= 2.0 {
            let inv: Vec<f64> = d.iter().map(|v| 1.0 / v).collect();
            return Ok(Bound::exact(libm::sqrt(max(&inv))));
        }
        // (Σ w^{-p/(2-p)})^{(2-p)/(2p)}
        let v = if p == 1.0 {
            libm::sqrt(d.iter().map(|v| 1.0 / v).sum())
        } else {
            let sum: f64 = d.iter().map(|v| libm::pow(*v, -p / (2.0 - p))).sum();
            libm::pow(sum, (2.0 - p) / (2.0 * p))
        };
        return Ok(Bound::exact(v));
    }
    let n = wr.nrows();
    let winv = wr
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite("embedding weight"))?
        .inverse();
    if p.is_infinite() {
        let diag: Vec<f64> = winv.diagonal().iter().cloned().collect();
        return Ok(Bound::exact(libm::sqrt(max(&diag))));
    }
    if p == 2.0 {
        let (values, _) = sym_eigen(&winv)?;
        return Ok(Bound::exact(libm::sqrt(values.max())));
    }
    if p == 1.0 && n <= MAX_SIGN_ENUMERATION {
        return Ok(Bound::exact(libm::sqrt(max_sign_quadratic(&winv))));
    }
    Ok(ascent(
        n,
        |y| lp_norm(y.as_slice(), p),
        |y| hilbert(&wr, y),
        |y| lp_grad(y, p),
        |y| hilbert_grad(&wr, y),
    ))
}

fn reduce(w: &DMatrix<f64>, b: &BanachNorm) -> (DMatrix<f64>, f64) {
    let omega = b.scaling(w.nrows());
    let wr = DMatrix::from_fn(w.nrows(), w.ncols(), |i, j| w[(i, j)] / (omega[i] * omega[j]));
    (wr, b.p())
}

fn diagonal_of(w: &DMatrix<f64>) -> Option<Vec<f64>> {
    let n = w.nrows();
    for j in 0..n {
        for i in 0..n {
            if i != j && w[(i, j)] != 0.0 {
                return None;
            }
        }
    }
    Some(w.diagonal().iter().cloned().collect())
}

fn max(v: &[f64]) -> f64 {
    v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// `max_{s ∈ {±1}ⁿ} sᵀQs`, walking sign patterns in Gray-code order.
fn max_sign_quadratic(q: &DMatrix<f64>) -> f64 {
    let n = q.nrows();
    let mut s = alloc::vec![1.0f64; n];
    let mut qs: DVector<f64> = q * DVector::from_element(n, 1.0);
    let mut value: f64 = qs.sum();
    let mut best = value;
    // s₀ stays fixed: the form is even in s.
    for step in 1u64..(1u64 << (n - 1)) {
        let k = step.trailing_zeros() as usize + 1;
        let sk = s[k];
        value += -4.0 * sk * qs[k] + 4.0 * q[(k, k)];
        for i in 0..n {
            qs[i] -= 2.0 * sk * q[(i, k)];
        }
        s[k] = -sk;
        best = best.max(value);
    }
    best
}

fn hilbert(w: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    libm::sqrt(y.dot(&(w * y)).max(0.0))
}

fn hilbert_grad(w: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let wy = w * y;
    let v = y.dot(&wy);
    wy / v
}

/// Gradient of `log ‖y‖_p`, `1 < p < ∞`.
fn lp_grad(y: &DVector<f64>, p: f64) -> DVector<f64> {
    let n = lp_norm(y.as_slice(), p);
    y.map(|v| v.signum() * libm::pow(v.abs() / n, p - 1.0) / n)
}

/// Maximizes `num(y)/den(y)` over the unit sphere by projected gradient
/// ascent on the log-ratio, from seeded random starts. The result is a lower
/// bound on the supremum.
fn ascent<A, B, GA, GB>(n: usize, num: A, den: B, grad_num: GA, grad_den: GB) -> Bound
where
    A: Fn(&DVector<f64>) -> f64,
    B: Fn(&DVector<f64>) -> f64,
    GA: Fn(&DVector<f64>) -> DVector<f64>,
    GB: Fn(&DVector<f64>) -> DVector<f64>,
{
    let ratio = |y: &DVector<f64>| num(y) / den(y);
    let mut rng = ensemble::rng(ASCENT_SEED);
    let mut best = 0.0f64;
    for _ in 0..ASCENT_RESTARTS {
        let mut y = ensemble::normal_vector(&mut rng, n);
        y /= y.norm();
        let mut f = ratio(&y);
        let mut step = 0.1;
        for _ in 0..2000 {
            let g = grad_num(&y) - grad_den(&y);
            let g = &g - &y * g.dot(&y);
            if g.norm() < 1e-15 {
                break;
            }
            let mut cand = &y + &g * step;
            cand /= cand.norm();
            let fc = ratio(&cand);
            if fc > f {
                y = cand;
                f = fc;
                step *= 1.5;
            } else {
                step *= 0.5;
                if step < 1e-14 {
                    break;
                }
            }
        }
        best = best.max(f);
    }
    Bound {
        value: best,
        exact: false,
    }
}
