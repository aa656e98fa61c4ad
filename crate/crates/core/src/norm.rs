//! Norms on `ℝⁿ` used for the Banach space `B` and its dual.
//!
//! A weighted norm scales coordinates before taking the `p`-norm:
//! `‖x‖ = ‖(ωᵢxᵢ)ᵢ‖_p`. Its dual is `‖f‖' = ‖(fᵢ/ωᵢ)ᵢ‖_q` with `1/p + 1/q = 1`.

use alloc::string::ToString;
use alloc::vec::Vec;

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Conjugate exponent `q` with `1/p + 1/q = 1`.
pub fn conjugate_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// Plain `ℓᵖ` norm with closed forms for `p ∈ {1, 2, ∞}`.
pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    if p == 1.0 {
        x.iter().map(|v| v.abs()).sum()
    } else if p == 2.0 {
        let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let s: f64 = x.iter().map(|v| (v / scale) * (v / scale)).sum();
        scale * libm::sqrt(s)
    } else if p.is_infinite() {
        x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    } else {
        let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let s: f64 = x.iter().map(|v| libm::pow(v.abs() / scale, p)).sum();
        scale * libm::pow(s, 1.0 / p)
    }
}

/// A unit-norm element of the `ℓᵖ` dual ball norming `y`:
/// `⟨y, f⟩ = ‖y‖_p` and `‖f‖_q = 1`. Zero for `y = 0`.
fn lp_norming_functional(y: &[f64], p: f64) -> Vec<f64> {
    let n = lp_norm(y, p);
    if n == 0.0 {
        return alloc::vec![0.0; y.len()];
    }
    if p == 1.0 {
        y.iter().map(|v| if *v == 0.0 { 0.0 } else { v.signum() }).collect()
    } else if p.is_infinite() {
        let (k, _) = y.iter().enumerate().fold(
            (0, -1.0),
            |(bk, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bk, bv) },
        );
        let mut f = alloc::vec![0.0; y.len()];
        f[k] = y[k].signum();
        f
    } else {
        y.iter().map(|v| v.signum() * libm::pow(v.abs() / n, p - 1.0)).collect()
    }
}

/// Descriptor of the Banach norm `‖·‖_B`.
#[derive(Debug, Clone, PartialEq)]
pub enum BanachNorm {
    /// `ℓᵖ`, `1 ≤ p ≤ ∞`.
    P(f64),
    /// `x ↦ ‖(ωᵢxᵢ)ᵢ‖_p` with strictly positive weights.
    WeightedP { p: f64, weights: Vec<f64> },
    /// Sup-norm over the nodes of a uniform grid (`ℓ^∞` on nodal values).
    SupGrid,
}

impl BanachNorm {
    pub fn lp(p: f64) -> Self {
        BanachNorm::P(p)
    }

    pub fn sup() -> Self {
        BanachNorm::P(f64::INFINITY)
    }

    /// The exponent `p` of the underlying `ℓᵖ` norm.
    pub fn p(&self) -> f64 {
        match self {
            BanachNorm::P(p) | BanachNorm::WeightedP { p, .. } => *p,
            BanachNorm::SupGrid => f64::INFINITY,
        }
    }

    pub fn weights(&self) -> Option<&[f64]> {
        match self {
            BanachNorm::WeightedP { weights, .. } => Some(weights),
            _ => None,
        }
    }

    /// Coordinate scaling `ω` (all ones for unweighted norms).
    pub fn scaling(&self, n: usize) -> Vec<f64> {
        match self.weights() {
            Some(w) => w.to_vec(),
            None => alloc::vec![1.0; n],
        }
    }

    pub fn is_hilbertian(&self) -> bool {
        self.p() == 2.0
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let p = self.p();
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidNorm(alloc::format!("exponent {p} is below 1")));
        }
        if let Some(w) = self.weights() {
            if w.len() != n {
                return Err(Error::InvalidNorm(alloc::format!(
                    "{} weights for dimension {n}",
                    w.len()
                )));
            }
            if w.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::InvalidNorm("weights must be finite and positive".to_string()));
            }
        }
        Ok(())
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        match self.weights() {
            None => lp_norm(x, self.p()),
            Some(w) => {
                let y: Vec<f64> = x.iter().zip(w).map(|(a, b)| a * b).collect();
                lp_norm(&y, self.p())
            }
        }
    }

    /// Dual norm of a covector under the coordinate pairing.
    pub fn dual_norm(&self, f: &[f64]) -> f64 {
        let q = conjugate_exponent(self.p());
        match self.weights() {
            None => lp_norm(f, q),
            Some(w) => {
                let g: Vec<f64> = f.iter().zip(w).map(|(a, b)| a / b).collect();
                lp_norm(&g, q)
            }
        }
    }

    /// A covector `f` with `⟨y, f⟩ = ‖y‖_B` and `‖f‖_{B'} = 1`.
    pub fn norming_functional(&self, y: &[f64]) -> Vec<f64> {
        match self.weights() {
            None => lp_norming_functional(y, self.p()),
            Some(w) => {
                let z: Vec<f64> = y.iter().zip(w).map(|(a, b)| a * b).collect();
                lp_norming_functional(&z, self.p())
                    .into_iter()
                    .zip(w)
                    .map(|(a, b)| a * b)
                    .collect()
            }
        }
    }

    /// A vector `x` with `‖x‖_B = 1` and `⟨x, f⟩ = ‖f‖_{B'}`.
    pub fn norming_vector(&self, f: &[f64]) -> Vec<f64> {
        let q = conjugate_exponent(self.p());
        match self.weights() {
            None => lp_norming_functional(f, q),
            Some(w) => {
                let g: Vec<f64> = f.iter().zip(w).map(|(a, b)| a / b).collect();
                lp_norming_functional(&g, q)
                    .into_iter()
                    .zip(w)
                    .map(|(a, b)| a / b)
                    .collect()
            }
        }
    }
}

/// A covector acting on `ℝⁿ` by `⟨x, f⟩ = Σ xᵢfᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Functional {
    pub coords: DVector<f64>,
}

impl Functional {
    pub fn new(coords: DVector<f64>) -> Self {
        Functional { coords }
    }

    pub fn apply(&self, x: &DVector<f64>) -> f64 {
        self.coords.dot(x)
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|v| v.is_finite())
    }
}
