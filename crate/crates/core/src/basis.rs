//! Unit-norm Markushevich bases built from the common eigenbasis of `W₂` and
//! `T₁₂`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::ensemble;
use crate::error::{Error, Result};
use crate::matfun::sym_eigen;
use crate::norm::Functional;
use crate::report::{PropertyReport, Tracker};
use crate::rigging::{Rigging, Space};

/// Tolerance for biorthogonality, unit norms and monotonicity.
pub const BASIS_TOL: f64 = 1e-12;
/// Random coefficient vectors used by the monotonicity and dual-bound checks.
pub const COEFFICIENT_TRIALS: usize = 200;

/// Biorthogonal system `{xᵢ, xᵢ*}`: vectors are columns, functionals rows.
#[derive(Debug, Clone, PartialEq)]
pub struct MBasis<'r> {
    pub vectors: DMatrix<f64>,
    pub functionals: DMatrix<f64>,
    rigging: &'r Rigging,
}

impl<'r> MBasis<'r> {
    pub fn rigging(&self) -> &'r Rigging {
        self.rigging
    }

    pub fn n(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.vectors.column(i).into_owned()
    }

    pub fn functional(&self, i: usize) -> Functional {
        Functional::new(self.functionals.row(i).transpose())
    }
}

/// Common eigenvectors of `W₂` and `W₁`, as Euclidean-orthonormal columns.
fn common_eigenbasis(r: &Rigging) -> Result<DMatrix<f64>> {
    let n = r.n();
    if r.is_diagonal() {
        return Ok(DMatrix::identity(n, n));
    }
    let (w1, w2) = (r.w1(), r.w2());
    // generic combination: its eigenvectors diagonalize both when they commute
    let mix = w2 / w2.norm() + w1 * (0.618_033_988_749_894_8 / w1.norm());
    let (_, v) = sym_eigen(&mix)?;
    let mut defect: f64 = 0.0;
    for w in [w1, w2] {
        let d = v.transpose() * w * &v;
        let off = d.iter().map(|x| x * x).sum::<f64>() - d.diagonal().iter().map(|x| x * x).sum::<f64>();
        defect = defect.max(libm::sqrt(off.max(0.0)) / w.norm());
    }
    if defect > 1e-10 {
        return Err(Error::NotCommuting { defect });
    }
    Ok(v)
}

/// `xᵢ = vᵢ/‖vᵢ‖_B` over the common eigenvectors `vᵢ`, and
/// `xᵢ* = J₂(xᵢ)/‖xᵢ‖²_{H₂}`.
pub fn markushevich(r: &Rigging) -> Result<MBasis<'_>> {
    let n = r.n();
    let v = common_eigenbasis(r)?;
    let mut vectors = DMatrix::zeros(n, n);
    let mut functionals = DMatrix::zeros(n, n);
    for i in 0..n {
        let vi = v.column(i).into_owned();
        let x = &vi / r.norm(&vi, Space::B);
        let h2_sq = r.inner(&x, &x, 2)?;
        let f = r.w2() * &x / h2_sq;
        vectors.set_column(i, &x);
        functionals.set_row(i, &f.transpose());
    }
    Ok(MBasis {
        vectors,
        functionals,
        rigging: r,
    })
}

fn rank(m: &DMatrix<f64>) -> usize {
    let s = m.clone().svd(false, false).singular_values;
    let top = s.max();
    s.iter().filter(|v| **v > BASIS_TOL * top * m.nrows() as f64).count()
}

/// Biorthogonality, unit primal and dual norms, monotonicity of partial sums,
/// full rank of both families, and `|⟨y, xₙ*⟩| ≤ ‖y‖_B` for random `y` in the
/// span.
pub fn check_basis(b: &MBasis<'_>, seed: u64) -> PropertyReport {
    let r = b.rigging;
    let n = b.n();
    let mut report = PropertyReport::new("check_basis", seed, COEFFICIENT_TRIALS);

    let mut bio = Tracker::new("biorthogonal");
    let pairing = &b.functionals * &b.vectors;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            let d = (pairing[(j, i)] - target).abs();
            bio.record(d <= BASIS_TOL, d, || alloc::vec![i as f64, j as f64]);
        }
    }
    report.push_assertion(bio);

    let mut primal = Tracker::new("unit_primal_norm");
    let mut dual = Tracker::new("unit_dual_norm");
    for i in 0..n {
        let d = (r.norm(&b.vector(i), Space::B) - 1.0).abs();
        primal.record(d <= BASIS_TOL, d, || alloc::vec![i as f64]);
        let d = (r.dual_norm(&b.functional(i)) - 1.0).abs();
        dual.record(d <= BASIS_TOL, d, || alloc::vec![i as f64]);
    }
    report.push_assertion(primal);
    report.push_assertion(dual);

    let mut rng = ensemble::rng(seed);
    let mut monotone = Tracker::new("monotone");
    let mut dual_bound = Tracker::new("dual_bound");
    for _ in 0..COEFFICIENT_TRIALS {
        let a = ensemble::normal_vector(&mut rng, n);
        let mut partial = DVector::zeros(n);
        let mut best: f64 = 0.0;
        let mut worst = 0.0_f64;
        for m in 0..n {
            partial += b.vectors.column(m) * a[m];
            let nm = r.norm(&partial, Space::B);
            worst = worst.max(best - nm);
            best = best.max(nm);
        }
        monotone.record(worst <= BASIS_TOL, worst, || a.iter().cloned().collect());

        let y = &partial / r.norm(&partial, Space::B);
        let excess = (&b.functionals * &y).amax() - 1.0;
        dual_bound.record(excess <= BASIS_TOL, excess, || y.iter().cloned().collect());
    }
    report.push_assertion(monotone);
    report.push_assertion(dual_bound);

    let mut full = Tracker::new("full_rank");
    let (rv, rf) = (rank(&b.vectors), rank(&b.functionals));
    full.record(rv == n && rf == n, (2 * n - rv - rf) as f64, || {
        alloc::vec![rv as f64, rf as f64]
    });
    report.push_assertion(full);

    let cond = {
        let s = b.vectors.clone().svd(false, false).singular_values;
        s.max() / s.min()
    };
    report.push_measurement("vectors_condition", cond, Vec::new());
    report
}
