//! Bounded operators on `B` and the embedding adjoint
//! `A* = J₁⁻¹ A′ J₂ = W₁⁻¹AᵀW₂`, where `A′` is the coordinate transpose acting
//! on covectors.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::ensemble;
use crate::error::{Error, Result};
use crate::matfun::{self, opnorm, resolvent, Spectrum, WeightedSymmetric};
use crate::report::{PropertyReport, Tracker};
use crate::rigging::{Rigging, Space};

/// A matrix acting on the coordinates of a rigging.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator<'r> {
    rigging: &'r Rigging,
    matrix: DMatrix<f64>,
}

impl<'r> Operator<'r> {
    pub fn new(rigging: &'r Rigging, matrix: DMatrix<f64>) -> Result<Self> {
        let n = rigging.n();
        if matrix.shape() != (n, n) {
            return Err(Error::Shape(alloc::format!(
                "{}x{} matrix on a rigging of dimension {n}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("operator entries must be finite".into()));
        }
        Ok(Operator { rigging, matrix })
    }

    pub fn zero(rigging: &'r Rigging) -> Self {
        let n = rigging.n();
        Operator {
            rigging,
            matrix: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(rigging: &'r Rigging) -> Self {
        let n = rigging.n();
        Operator {
            rigging,
            matrix: DMatrix::identity(n, n),
        }
    }

    pub(crate) fn wrap(rigging: &'r Rigging, matrix: DMatrix<f64>) -> Self {
        Operator { rigging, matrix }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn rigging(&self) -> &'r Rigging {
        self.rigging
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x
    }

    fn same_rigging(&self, other: &Operator<'_>) -> Result<()> {
        if core::ptr::eq(self.rigging, other.rigging) || self.rigging == other.rigging {
            Ok(())
        } else {
            Err(Error::RiggingMismatch)
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Operator<'_>) -> Result<Operator<'r>> {
        self.same_rigging(other)?;
        Ok(Operator::wrap(self.rigging, &self.matrix * &other.matrix))
    }

    /// `α·self + β·other`.
    pub fn combine(&self, alpha: f64, other: &Operator<'_>, beta: f64) -> Result<Operator<'r>> {
        self.same_rigging(other)?;
        Ok(Operator::wrap(
            self.rigging,
            &self.matrix * alpha + &other.matrix * beta,
        ))
    }

    /// `A* = W₁⁻¹AᵀW₂`.
    pub fn adjoint(&self) -> Operator<'r> {
        let r = self.rigging;
        Operator::wrap(r, r.w1_inv() * self.matrix.transpose() * r.w2())
    }

    /// `A*A` and `(I + A*A)⁻¹`.
    pub fn gram(&self) -> Result<Gram<'r>> {
        let n = self.rigging.n();
        let astar_a = self.adjoint().matrix * &self.matrix;
        // (I + A*A)⁻¹ = R(1, −A*A)
        let inv = resolvent(&(-&astar_a), 1.0)?;
        let residual = ((DMatrix::identity(n, n) + &astar_a) * &inv - DMatrix::identity(n, n)).norm();
        if !(residual <= 1e-10 * n as f64) {
            return Err(Error::Singular { lambda: -1.0 });
        }
        Ok(Gram {
            astar_a: Operator::wrap(self.rigging, astar_a),
            inv_i_plus: Operator::wrap(self.rigging, inv),
            residual,
        })
    }

    /// `‖A‖²_{H₂}` via the largest singular value of `W₂^{1/2}AW₂^{-1/2}`.
    pub fn h2_norm(&self) -> f64 {
        let (s, si) = self.rigging.sqrt_pair(2).expect("H2 exists");
        matfun::norm_2(&(s * &self.matrix * si))
    }

    /// `‖W₂M − MᵀW₂‖_F / (‖W₂‖_F‖M‖_F)`.
    pub fn h2_symmetry_defect(&self) -> f64 {
        let w2 = self.rigging.w2();
        let scale = w2.norm() * self.matrix.norm();
        if scale == 0.0 {
            return 0.0;
        }
        (w2 * &self.matrix - self.matrix.transpose() * w2).norm() / scale
    }

    fn flat(&self) -> Vec<f64> {
        self.matrix.as_slice().to_vec()
    }
}

/// `A*A` together with `(I + A*A)⁻¹`.
#[derive(Debug, Clone)]
pub struct Gram<'r> {
    pub astar_a: Operator<'r>,
    pub inv_i_plus: Operator<'r>,
    /// `‖(I + A*A)(I + A*A)⁻¹ − I‖_F`.
    pub residual: f64,
}

/// Relative tolerance for algebraic identities.
pub const ALGEBRAIC_TOL: f64 = 1e-10;
/// Relative tolerance for spectral quantities.
pub const SPECTRAL_TOL: f64 = 1e-8;

fn witness(a: &Operator<'_>, vectors: &[&DVector<f64>]) -> Vec<f64> {
    let mut w = a.flat();
    for v in vectors {
        w.extend_from_slice(v.as_slice());
    }
    w
}

/// Checks the adjoint properties of `A*A` on `n_x` seeded random vectors.
///
/// Asserted: accretivity `⟨A*Ax, φˢ_x⟩ ≥ −1e-10·‖A‖²_F‖x‖²_B`; real,
/// nonnegative spectrum of `A*A`; symmetry of `A*A` in `H₁`; the residual of
/// `(I + A*A)⁻¹`. Measured: the star residual `‖(A*A)* − A*A‖_F` and the
/// `H₂`-symmetry defect of `A*A`. Witnesses are `vec(A)` followed by the
/// offending vectors.
pub fn check_vonneumann(a: &Operator<'_>, n_x: usize, seed: u64) -> PropertyReport {
    let r = a.rigging();
    let n = r.n();
    let trials = n_x.max(1);
    let mut report = PropertyReport::new("check_vonneumann", seed, trials);
    let gram = match a.gram() {
        Ok(g) => g,
        Err(_) => {
            let mut t = Tracker::new("invertible_i_plus_astar_a");
            t.record(false, f64::INFINITY, || a.flat());
            report.push_assertion(t);
            return report;
        }
    };
    let aa = gram.astar_a.matrix();
    let a_f2 = a.matrix().norm_squared();

    let mut rng = ensemble::rng(seed);
    let mut accretive = Tracker::new("accretive");
    let mut h1_sym = Tracker::new("h1_selfadjoint");
    let weight_scale = r.w1().norm() * r.w1_inv().norm() * r.w2().norm();
    for _ in 0..trials {
        let x = ensemble::normal_vector(&mut rng, n);
        let y = ensemble::normal_vector(&mut rng, n);
        let aax = aa * &x;

        let b = r.norm(&x, Space::B);
        if let Ok(phi) = r.special_duality(&x) {
            let pairing = phi.apply(&aax);
            let scale = a_f2 * b * b;
            let defect = if scale > 0.0 { -pairing / scale } else { 0.0 };
            accretive.record(pairing >= -ALGEBRAIC_TOL * scale, defect, || witness(a, &[&x]));
        }

        let lhs = r.inner(&aax, &y, 1).expect("H1");
        let rhs = r.inner(&x, &(aa * &y), 1).expect("H1");
        let scale = weight_scale * a_f2 * x.norm() * y.norm();
        let diff = (lhs - rhs).abs();
        let defect = if scale > 0.0 { diff / scale } else { diff };
        h1_sym.record(diff <= ALGEBRAIC_TOL * scale, defect, || witness(a, &[&x, &y]));
    }
    report.push_assertion(accretive);
    report.push_assertion(h1_sym);

    let aa_f = aa.norm();
    let mut real = Tracker::new("spectrum_real");
    let mut nonneg = Tracker::new("spectrum_nonnegative");
    match Spectrum::of(aa) {
        Ok(spec) => {
            let imag = if aa_f > 0.0 { spec.max_imag() / aa_f } else { 0.0 };
            real.record(imag <= SPECTRAL_TOL, imag, || a.flat());
            let neg = if aa_f > 0.0 { -spec.min_real() / aa_f } else { 0.0 };
            nonneg.record(neg <= SPECTRAL_TOL, neg, || a.flat());
        }
        Err(_) => {
            real.record(false, f64::INFINITY, || a.flat());
            nonneg.record(false, f64::INFINITY, || a.flat());
        }
    }
    report.push_assertion(real);
    report.push_assertion(nonneg);

    let mut inv = Tracker::new("invertible_i_plus_astar_a");
    inv.record(gram.residual <= ALGEBRAIC_TOL * n as f64, gram.residual, || a.flat());
    report.push_assertion(inv);

    let star = gram.astar_a.adjoint();
    report.push_measurement("star_residual", (star.matrix() - aa).norm(), a.flat());
    report.push_measurement("h2_symmetry_defect", gram.astar_a.h2_symmetry_defect(), a.flat());
    report
}

/// Checks `‖A‖_{H₂} ≤ ‖A‖_B` for an `H₂`-symmetric operator.
///
/// `‖A‖_{H₂}` is the spectral radius in the `H₂` frame. When `‖A‖_B` is only a
/// power-method estimate the ratio is measured instead of asserted.
pub fn check_lax(a: &Operator<'_>) -> Result<PropertyReport> {
    let defect = a.h2_symmetry_defect();
    if !(defect <= 1e-12) {
        return Err(Error::NotH2Symmetric { defect });
    }
    let r = a.rigging();
    let (s, si) = r.sqrt_pair(2)?;
    let h2 = WeightedSymmetric::new(a.matrix(), s, si)?.spectral_radius();
    let b = opnorm(a.matrix(), Space::B, Space::B, r)?;
    let mut report = PropertyReport::new("check_lax", 0, 1);
    let ratio = if b.value > 0.0 { h2 / b.value } else { 0.0 };
    if b.exact {
        let mut t = Tracker::new("lax_bound");
        let excess = if b.value > 0.0 { ratio - 1.0 } else { h2 };
        t.record(h2 <= (1.0 + ALGEBRAIC_TOL) * b.value, excess, || a.flat());
        report.push_assertion(t);
    }
    report.push_measurement("h2_norm", h2, Vec::new());
    report.push_measurement("b_norm", b.value, Vec::new());
    report.push_measurement("b_norm_exact", if b.exact { 1.0 } else { 0.0 }, Vec::new());
    report.push_measurement("h2_over_b", ratio, a.flat());
    Ok(report)
}

/// Records `‖A‖²_{H₂}`, `‖A*A‖_B` and `‖A‖²_B` with their ratios. Only
/// finiteness is asserted; whether `‖A‖²_{H₂} ≤ ‖A*A‖_B` held is measured.
pub fn check_h2_bound(a: &Operator<'_>) -> PropertyReport {
    let r = a.rigging();
    let h2 = a.h2_norm();
    let h2_sq = h2 * h2;
    let aa = a.adjoint().matrix * a.matrix();
    let aa_b = opnorm(&aa, Space::B, Space::B, r).expect("B is a valid tag");
    let a_b = opnorm(a.matrix(), Space::B, Space::B, r).expect("B is a valid tag");
    let a_b_sq = a_b.value * a_b.value;
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };

    let mut report = PropertyReport::new("check_h2_bound", 0, 1);
    let mut finite = Tracker::new("finite");
    let all_finite = h2_sq.is_finite() && aa_b.value.is_finite() && a_b_sq.is_finite();
    finite.record(all_finite, if all_finite { 0.0 } else { f64::INFINITY }, || a.flat());
    report.push_assertion(finite);

    report.push_measurement("h2_norm_sq", h2_sq, Vec::new());
    report.push_measurement("astar_a_b_norm", aa_b.value, Vec::new());
    report.push_measurement("b_norm_sq", a_b_sq, Vec::new());
    report.push_measurement("h2_sq_over_b_sq", ratio(h2_sq, a_b_sq), a.flat());
    report.push_measurement("astar_a_b_over_b_sq", ratio(aa_b.value, a_b_sq), a.flat());
    let chain = h2_sq <= aa_b.value * (1.0 + ALGEBRAIC_TOL);
    report.push_measurement("chain_h2_sq_le_astar_a_b", if chain { 1.0 } else { 0.0 }, a.flat());
    report.push_measurement(
        "b_norms_exact",
        if aa_b.exact && a_b.exact { 1.0 } else { 0.0 },
        Vec::new(),
    );
    report
}

/// `U ⟂ V` in the sense `⟨y, φˢ_x⟩ = 0` for all `x ∈ U`, `y ∈ V`, tested
/// through the equivalent condition `VᵀW₂U = 0` (relative to
/// `‖V‖_F‖W₂‖_F‖U‖_F`). Columns of `u`, `v` span the subspaces.
pub fn is_orthogonal(r: &Rigging, u: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<bool> {
    let n = r.n();
    if (u.ncols() > 0 && u.nrows() != n) || (v.ncols() > 0 && v.nrows() != n) {
        return Err(Error::Shape(alloc::format!("subspace bases must have {n} rows")));
    }
    if u.ncols() == 0 || v.ncols() == 0 {
        return Ok(true);
    }
    let w2 = r.w2();
    let scale = u.norm() * w2.norm() * v.norm();
    // both orders, so the relation is symmetric bit for bit
    let vu = (v.transpose() * w2 * u).amax();
    let uv = (u.transpose() * w2 * v).amax();
    Ok(vu.max(uv) <= 1e-12 * scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::BanachNorm;
    use proptest::prelude::*;

    fn mat(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, v)
    }

    fn nilpotent() -> DMatrix<f64> {
        mat(2, 2, &[0.0, 1.0, 0.0, 0.0])
    }

    #[test]
    fn hilbert_adjoint_is_transpose() {
        let r = Rigging::identity(3).unwrap();
        let m = ensemble::normal_matrix(&mut ensemble::rng(1), 3);
        let a = Operator::new(&r, m.clone()).unwrap();
        assert!((a.adjoint().matrix() - m.transpose()).norm() <= 1e-14);
    }

    #[test]
    fn worked_adjoint() {
        let r = Rigging::worked_example();
        let a = Operator::new(&r, nilpotent()).unwrap();
        let astar = a.adjoint();
        // brute-force W₁⁻¹AᵀW₂ entry by entry
        let (w1, w2, m) = (r.w1(), r.w2(), a.matrix());
        for i in 0..2 {
            for j in 0..2 {
                let mut s = 0.0;
                for k in 0..2 {
                    for l in 0..2 {
                        s += w1.clone().try_inverse().unwrap()[(i, k)] * m[(l, k)] * w2[(l, j)];
                    }
                }
                assert!((astar.matrix()[(i, j)] - s).abs() < 1e-15);
            }
        }
        assert_eq!(astar.matrix(), &mat(2, 2, &[0.0, 0.0, 0.5, 0.0]));
    }

    #[test]
    fn gram_examples() {
        let r = Rigging::worked_example();
        let g = Operator::new(&r, nilpotent()).unwrap().gram().unwrap();
        assert_eq!(g.astar_a.matrix(), &mat(2, 2, &[0.0, 0.0, 0.0, 0.5]));
        let inv = g.inv_i_plus.matrix();
        assert!((inv - mat(2, 2, &[1.0, 0.0, 0.0, 2.0 / 3.0])).norm() < 1e-15);

        let z = Operator::zero(&r).gram().unwrap();
        assert_eq!(z.astar_a.matrix(), &DMatrix::zeros(2, 2));
        assert_eq!(z.inv_i_plus.matrix(), &DMatrix::identity(2, 2));

        let id = Rigging::identity(2).unwrap();
        let (c, s) = (libm::cos(0.3), libm::sin(0.3));
        let g = Operator::new(&id, mat(2, 2, &[c, -s, s, c])).unwrap().gram().unwrap();
        assert!((g.astar_a.matrix() - DMatrix::identity(2, 2)).norm() < 1e-15);
        assert!((g.inv_i_plus.matrix() - DMatrix::identity(2, 2) * 0.5).norm() < 1e-15);
    }

    #[test]
    fn worked_accretivity_and_star_residual() {
        let r = Rigging::worked_example();
        let a = Operator::new(&r, nilpotent()).unwrap();
        let aa = a.gram().unwrap().astar_a;
        let x = DVector::from_row_slice(&[1.0, 1.0]);
        let pairing = r.j_map(&x, 2).unwrap().apply(&aa.apply(&x));
        assert!((pairing - 0.125).abs() < 1e-15);

        let rep = check_vonneumann(&a, 50, 3);
        let star = rep.measurement("star_residual").unwrap().value;
        assert!((star - 0.4375).abs() < 1e-12);
    }

    #[test]
    fn identity_rigging_passes_vonneumann() {
        let r = Rigging::identity(4).unwrap();
        let mut rng = ensemble::rng(10);
        for k in 0..200 {
            let a = Operator::new(&r, ensemble::normal_matrix(&mut rng, 4)).unwrap();
            let rep = check_vonneumann(&a, 10, k);
            assert!(rep.passed(), "{rep:?}");
            assert!(rep.measurement("star_residual").unwrap().value <= 1e-12);
        }
    }

    #[test]
    fn lax_examples() {
        let r = Rigging::diagonal(BanachNorm::lp(1.0), &[1.0, 1.0], &[1.0, 1.0]).unwrap();
        // ℓ¹ with W₂ = I (c₂ = 1); the swap matrix is H₂-symmetric
        assert_eq!(r.w2(), &DMatrix::identity(2, 2));
        let a = Operator::new(&r, mat(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        let rep = check_lax(&a).unwrap();
        assert!(rep.passed());
        assert!((rep.measurement("h2_norm").unwrap().value - 1.0).abs() < 1e-15);
        assert_eq!(rep.measurement("b_norm").unwrap().value, 1.0);

        let rep = check_lax(&Operator::identity(&r)).unwrap();
        assert!(rep.passed());
        assert!((rep.measurement("h2_over_b").unwrap().value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lax_rejects_non_symmetric() {
        let r = Rigging::worked_example();
        let a = Operator::new(&r, nilpotent()).unwrap();
        assert!(matches!(check_lax(&a), Err(Error::NotH2Symmetric { .. })));
    }

    #[test]
    fn lax_random_symmetric_operators() {
        let mut rng = ensemble::rng(33);
        for k in 0..150 {
            let p = [1.0, 2.0, f64::INFINITY][k % 3];
            let n = 2 + k % 7;
            let r = Rigging::random_diagonal(n, BanachNorm::lp(p), &mut rng).unwrap();
            let m = ensemble::h2_symmetric_matrix(&mut rng, r.w2_inv());
            let a = Operator::new(&r, m).unwrap();
            assert!(check_lax(&a).unwrap().passed());
        }
    }

    #[test]
    fn h2_bound_examples() {
        let r = Rigging::worked_example();
        let rep = check_h2_bound(&Operator::new(&r, nilpotent()).unwrap());
        assert!(rep.passed());
        assert!((rep.measurement("h2_norm_sq").unwrap().value - 4.0).abs() < 1e-14);
        assert!((rep.measurement("astar_a_b_norm").unwrap().value - 0.5).abs() < 1e-15);
        assert_eq!(rep.measurement("b_norm_sq").unwrap().value, 1.0);
        assert_eq!(rep.measurement("chain_h2_sq_le_astar_a_b").unwrap().value, 0.0);

        let rep = check_h2_bound(&Operator::zero(&r));
        for q in ["h2_norm_sq", "astar_a_b_norm", "b_norm_sq"] {
            assert_eq!(rep.measurement(q).unwrap().value, 0.0);
        }

        let id = Rigging::identity(3).unwrap();
        let m = ensemble::normal_matrix(&mut ensemble::rng(2), 3);
        let rep = check_h2_bound(&Operator::new(&id, m).unwrap());
        assert!((rep.measurement("h2_sq_over_b_sq").unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonality_examples() {
        let r = Rigging::worked_example();
        let e1 = mat(2, 1, &[1.0, 0.0]);
        let e2 = mat(2, 1, &[0.0, 1.0]);
        assert!(is_orthogonal(&r, &e1, &e2).unwrap());
        let u = mat(2, 1, &[1.0, 1.0]);
        let v = mat(2, 1, &[1.0, -4.0]);
        assert!(is_orthogonal(&r, &u, &v).unwrap());
        assert!(!is_orthogonal(&r, &u, &e1).unwrap());
        assert!(is_orthogonal(&r, &DMatrix::zeros(2, 0), &u).unwrap());
    }

    #[test]
    fn orthogonality_matches_duality_definition() {
        // ⟨y, φˢ_x⟩ = 0 for x ∈ span(u), y ∈ span(v)
        let r = Rigging::worked_example();
        let u = DVector::from_row_slice(&[1.0, 1.0]);
        let v = DVector::from_row_slice(&[1.0, -4.0]);
        for s in [-2.0, 0.5, 3.0] {
            let phi = r.special_duality(&(&u * s)).unwrap();
            for t in [-1.0, 2.0] {
                assert!(phi.apply(&(&v * t)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn adjoint_rejects_mismatched_riggings() {
        let r1 = Rigging::identity(2).unwrap();
        let r2 = Rigging::worked_example();
        let a = Operator::identity(&r1);
        let b = Operator::identity(&r2);
        assert_eq!(a.compose(&b).unwrap_err(), Error::RiggingMismatch);
    }

    proptest! {
        #[test]
        fn adjoint_is_linear(alpha in -3.0f64..3.0, beta in -3.0f64..3.0, seed in 0u64..500) {
            let mut rng = ensemble::rng(seed);
            let r = Rigging::random_diagonal(3, BanachNorm::lp(1.5), &mut rng).unwrap();
            let a = Operator::new(&r, ensemble::normal_matrix(&mut rng, 3)).unwrap();
            let b = Operator::new(&r, ensemble::normal_matrix(&mut rng, 3)).unwrap();
            let lhs = a.combine(alpha, &b, beta).unwrap().adjoint();
            let rhs = a.adjoint().combine(alpha, &b.adjoint(), beta).unwrap();
            let scale = r.w1_inv().norm() * r.w2().norm() * (a.matrix().norm() + b.matrix().norm());
            prop_assert!((lhs.matrix() - rhs.matrix()).norm() <= 1e-14 * scale);
        }

        #[test]
        fn lemma_symmetry(seed in 0u64..2000, ku in 0usize..3, kv in 0usize..3) {
            let mut rng = ensemble::rng(seed);
            let r = Rigging::random_diagonal(4, BanachNorm::lp(2.0), &mut rng).unwrap();
            let u = DMatrix::from_fn(4, ku, |_, _| rand::Rng::gen_range(&mut rng, -1.0..1.0));
            // V inside the W₂-orthogonal complement of U half of the time
            let raw = DMatrix::from_fn(4, kv, |_, _| rand::Rng::gen_range(&mut rng, -1.0..1.0));
            let v = if seed % 2 == 0 && ku > 0 {
                let g = u.transpose() * r.w2() * &u;
                let proj = &u * g.try_inverse().unwrap() * u.transpose() * r.w2();
                &raw - proj * &raw
            } else {
                raw
            };
            prop_assert_eq!(is_orthogonal(&r, &u, &v).unwrap(), is_orthogonal(&r, &v, &u).unwrap());
        }
    }
}
