//! Polar factors, the generalized Yosida approximator
//! `A_λ = λA R(λ, T)` with `T = −(A*A)^{1/2}`, semigroup convergence sweeps and
//! the bounded-transform metric `d(A, B) = ‖A₀ − B₀‖_B`,
//! `A₀ = A(I + A*A)^{-1/2}`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::adjoint::Operator;
use crate::error::{Error, Result};
use crate::matfun::{self, expm, opnorm_b, pinv, resolvent, NormValue, Spectrum, WeightedSymmetric};
use crate::report::{MaxTracker, PropertyReport, Tracker};
use crate::rigging::Space;

/// `A = UT` with `T = −(A*A)^{1/2}` and `T̄ = −(AA*)^{1/2}`.
#[derive(Debug, Clone)]
pub struct PolarData<'r> {
    pub t: Operator<'r>,
    pub tbar: Operator<'r>,
    /// Partial isometry from `range(T) ⊆ H₁` into `H₂`.
    pub u: Operator<'r>,
    pub rank_t: usize,
    pub rank_tbar: usize,
}

/// Polar factors of `A`.
///
/// `A*A` is self-adjoint in `H₁`, `AA*` in `H₂`; each square root is taken in
/// its own frame. `U = A·T⁺` where `T⁺` is the pseudo-inverse of `T` in the
/// `H₁` frame, so `U` vanishes on the `H₁`-orthogonal complement of `range(T)`.
pub fn polar_factors<'r>(a: &Operator<'r>) -> Result<PolarData<'r>> {
    let r = a.rigging();
    let astar = a.adjoint();
    let aa = astar.matrix() * a.matrix();
    let aas = a.matrix() * astar.matrix();

    let (s1, s1i) = r.sqrt_pair(1)?;
    let (s2, s2i) = r.sqrt_pair(2)?;
    let frame1 = WeightedSymmetric::new(&aa, s1, s1i)?;
    let frame2 = WeightedSymmetric::new(&aas, s2, s2i)?;
    let t = -frame1.apply_psd(libm::sqrt)?;
    let tbar = -frame2.apply_psd(libm::sqrt)?;

    let t_framed = matfun::symmetrize(&(s1 * &t * s1i));
    let t_pinv = s1i * pinv(&t_framed) * s1;
    let u = a.matrix() * t_pinv;

    Ok(PolarData {
        rank_t: frame1.rank(),
        rank_tbar: frame2.rank(),
        t: Operator::new(r, t)?,
        tbar: Operator::new(r, tbar)?,
        u: Operator::new(r, u)?,
    })
}

/// Residuals of the two algebraic identities satisfied by `A_λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YosidaDefects {
    /// `‖A_λ − (λ²U R(λ,T) − λU)‖_F`.
    pub identity: f64,
    /// Magnitude of the terms in the identity, for relative comparison.
    pub identity_scale: f64,
    /// `‖A R(λ,T) − R(λ,T̄) A‖_F`.
    pub intertwining: f64,
    pub intertwining_scale: f64,
}

/// Generalized Yosida approximators of a fixed operator.
#[derive(Debug, Clone)]
pub struct GeneralizedYosida<'r> {
    a: Operator<'r>,
    polar: PolarData<'r>,
}

impl<'r> GeneralizedYosida<'r> {
    pub fn new(a: &Operator<'r>) -> Result<Self> {
        Ok(GeneralizedYosida {
            a: a.clone(),
            polar: polar_factors(a)?,
        })
    }

    pub fn polar(&self) -> &PolarData<'r> {
        &self.polar
    }

    /// `A_λ = λ A R(λ, T)`.
    pub fn approximator(&self, lambda: f64) -> Result<Operator<'r>> {
        if !(lambda > 0.0) {
            return Err(Error::NonPositiveLambda(lambda));
        }
        let res = resolvent(self.polar.t.matrix(), lambda)?;
        Operator::new(self.a.rigging(), self.a.matrix() * res * lambda)
    }

    pub fn defects(&self, lambda: f64) -> Result<YosidaDefects> {
        if !(lambda > 0.0) {
            return Err(Error::NonPositiveLambda(lambda));
        }
        let a = self.a.matrix();
        let u = self.polar.u.matrix();
        let res = resolvent(self.polar.t.matrix(), lambda)?;
        let res_bar = resolvent(self.polar.tbar.matrix(), lambda)?;
        let a_lambda = a * &res * lambda;
        let via_u = u * &res * (lambda * lambda) - u * lambda;
        let ar = a * &res;
        let ra = &res_bar * a;
        Ok(YosidaDefects {
            identity: (&a_lambda - via_u).norm(),
            identity_scale: lambda * lambda * u.norm() * res.norm()
                + lambda * u.norm()
                + lambda * a.norm() * res.norm(),
            intertwining: (ar - ra).norm(),
            intertwining_scale: a.norm() * (res.norm() + res_bar.norm()),
        })
    }
}

/// `A_λ = λ A R(λ, T)`, `T = −(A*A)^{1/2}`.
pub fn yosida_general<'r>(a: &Operator<'r>, lambda: f64) -> Result<Operator<'r>> {
    if !(lambda > 0.0) {
        return Err(Error::NonPositiveLambda(lambda));
    }
    GeneralizedYosida::new(a)?.approximator(lambda)
}

/// Classical approximator `λ A R(λ, A)`, defined only for `λ` beyond the
/// spectral abscissa of `A`.
pub fn yosida_classical<'r>(a: &Operator<'r>, lambda: f64) -> Result<Operator<'r>> {
    let abscissa = Spectrum::of(a.matrix())?.abscissa();
    if !(lambda > abscissa) {
        return Err(Error::BelowAbscissa { lambda, abscissa });
    }
    let res = resolvent(a.matrix(), lambda)?;
    Operator::new(a.rigging(), a.matrix() * res * lambda)
}

/// One `(λ, t)` cell of a convergence sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub lambda: f64,
    /// `max_x ‖A_λx − Ax‖_B / ‖Ax‖_B` over inputs with `Ax ≠ 0`.
    pub approx_err: f64,
    pub t: f64,
    /// `max_x ‖exp(tA_λ)x − exp(tA)x‖_B`.
    pub semigroup_err: f64,
    /// `‖exp(tA_λ)‖_{B→B}`.
    pub expm_norm_b: f64,
    pub expm_norm_exact: bool,
}

/// Rows ordered by `λ` (strictly increasing), then by `t`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn lambdas(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for r in &self.rows {
            if out.last() != Some(&r.lambda) {
                out.push(r.lambda);
            }
        }
        out
    }

    /// Approximator error per `λ`.
    pub fn approx_errors(&self) -> Vec<f64> {
        self.per_lambda(|rows| rows[0].approx_err)
    }

    /// Worst semigroup error over the time grid, per `λ`.
    pub fn semigroup_errors(&self) -> Vec<f64> {
        self.per_lambda(|rows| rows.iter().map(|r| r.semigroup_err).fold(0.0, f64::max))
    }

    fn per_lambda(&self, f: impl Fn(&[ConvergenceRow]) -> f64) -> Vec<f64> {
        self.rows.chunk_by(|a, b| a.lambda == b.lambda).map(f).collect()
    }
}

/// Output of [`semigroup_experiment`].
#[derive(Debug, Clone)]
pub struct SemigroupExperiment {
    pub table: ConvergenceTable,
    /// `(λ, A_λ)` for every swept `λ`.
    pub approximators: Vec<(f64, DMatrix<f64>)>,
    pub report: PropertyReport,
}

/// Relative slack allowed when errors should not increase with `λ`.
pub const MONOTONE_SLACK: f64 = 0.05;
/// Band for `e(2λ)/e(λ)` over the last three doublings.
pub const RATE_BAND: (f64, f64) = (0.35, 0.65);
/// Condition number of the eigenvector basis up to which the eigen oracle
/// is compared with the scaling-and-squaring exponential.
pub const ORACLE_MAX_CONDITION: f64 = 1e4;

fn validate_sweep(n: usize, lambdas: &[f64], ts: &[f64], xs: &[DVector<f64>]) -> Result<()> {
    if lambdas.is_empty() || ts.is_empty() || xs.is_empty() {
        return Err(Error::Shape("lambdas, ts and xs must be nonempty".into()));
    }
    if let Some(l) = lambdas.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
        return Err(Error::NonPositiveLambda(*l));
    }
    if lambdas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Shape("lambdas must be strictly increasing".into()));
    }
    if ts.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::Shape("times must be finite and nonnegative".into()));
    }
    if xs.iter().any(|x| x.len() != n) {
        return Err(Error::Shape(alloc::format!("inputs must have length {n}")));
    }
    Ok(())
}

/// Sweeps `λ` and `t`, comparing `A_λ` with `A` and `exp(tA_λ)` with `exp(tA)`
/// in the `B` norm.
///
/// Asserted: both error sequences are nonincreasing in `λ` up to 5%; the
/// approximator error ratio over the last three doublings lies in
/// `[0.35, 0.65]`; the scaling-and-squaring exponential agrees with the
/// eigendecomposition oracle when the eigenbasis is well conditioned; and, on
/// the Hilbert reduction only, `‖exp(tA_λ)‖ ≤ 1 + 1e-10`. On other riggings
/// the largest `‖exp(tA_λ)‖_B` is measured.
pub fn semigroup_experiment(
    a: &Operator<'_>,
    lambdas: &[f64],
    ts: &[f64],
    xs: &[DVector<f64>],
) -> Result<SemigroupExperiment> {
    let r = a.rigging();
    validate_sweep(r.n(), lambdas, ts, xs)?;
    let yosida = GeneralizedYosida::new(a)?;
    let m = a.matrix();
    let mut report = PropertyReport::new("semigroup_experiment", 0, lambdas.len() * ts.len() * xs.len());

    let exact_flows: Vec<DMatrix<f64>> = ts.iter().map(|t| expm(m, *t)).collect::<Result<_>>()?;
    let ax: Vec<DVector<f64>> = xs.iter().map(|x| m * x).collect();
    let ax_norms: Vec<f64> = ax.iter().map(|v| r.norm(v, Space::B)).collect();
    let flow_scale = exact_flows
        .iter()
        .flat_map(|e| xs.iter().map(move |x| r.norm(&(e * x), Space::B)))
        .fold(0.0, f64::max);

    // eigendecomposition oracle for exp(tA)
    let spectrum = Spectrum::of(m)?;
    match spectrum.condition() {
        Some(cond) if cond <= ORACLE_MAX_CONDITION => {
            let mut t_oracle = Tracker::new("expm_matches_eigen_oracle");
            for (t, e) in ts.iter().zip(&exact_flows) {
                if let Some(oracle) = spectrum.exp(*t) {
                    let rel = (e - &oracle).norm() / oracle.norm().max(f64::MIN_POSITIVE);
                    t_oracle.record(rel <= 1e-9, rel, || alloc::vec![*t]);
                }
            }
            report.push_assertion(t_oracle);
            report.push_measurement("eigen_basis_condition", cond, Vec::new());
        }
        other => {
            report.push_measurement("eigen_basis_condition", other.unwrap_or(f64::INFINITY), Vec::new());
        }
    }

    let mut table = ConvergenceTable::default();
    let mut approximators = Vec::with_capacity(lambdas.len());
    let hilbert = r.is_identity();
    let mut contraction = Tracker::new("contraction_hilbert");
    let mut growth = MaxTracker::new("expm_norm_b_max");
    let mut any_inexact = false;

    for &lambda in lambdas {
        let a_lambda = yosida.approximator(lambda)?;
        let al = a_lambda.matrix();
        let approx_err = xs
            .iter()
            .zip(&ax)
            .zip(&ax_norms)
            .filter(|(_, n)| **n > 0.0)
            .map(|((x, axv), n)| r.norm(&(al * x - axv), Space::B) / n)
            .fold(0.0, f64::max);
        for (t, exact) in ts.iter().zip(&exact_flows) {
            let flow = expm(al, *t)?;
            let semigroup_err = xs
                .iter()
                .map(|x| r.norm(&(&flow * x - exact * x), Space::B))
                .fold(0.0, f64::max);
            let nrm: NormValue = opnorm_b(&flow, r)?;
            any_inexact |= !nrm.exact;
            growth.record(nrm.value, || alloc::vec![lambda, *t]);
            if hilbert && *t > 0.0 {
                contraction.record(nrm.value <= 1.0 + 1e-10, nrm.value - 1.0, || alloc::vec![lambda, *t]);
            }
            table.rows.push(ConvergenceRow {
                lambda,
                approx_err,
                t: *t,
                semigroup_err,
                expm_norm_b: nrm.value,
                expm_norm_exact: nrm.exact,
            });
        }
        approximators.push((lambda, a_lambda.into_matrix()));
    }

    let approx = table.approx_errors();
    let semi = table.semigroup_errors();
    report.push_assertion(monotone("approx_err_nonincreasing", lambdas, &approx, 1e-12));
    report.push_assertion(monotone(
        "semigroup_err_nonincreasing",
        lambdas,
        &semi,
        1e-12 * flow_scale.max(f64::MIN_POSITIVE),
    ));
    let (rate, doublings) = rate_check("approx_err_rate", lambdas, &approx, 1e-12);
    if doublings > 0 {
        report.push_assertion(rate);
    }
    let (semi_rate, _) = rate_check("semigroup_err_rate", lambdas, &semi, 1e-12 * flow_scale);
    let semi_rate = semi_rate.into_assertion();
    report.push_measurement("semigroup_err_rate_worst", semi_rate.defect, semi_rate.witness);
    report.push_measurement("doublings_checked", doublings as f64, Vec::new());
    if hilbert {
        report.push_assertion(contraction);
    }
    report.measured.push(growth.into_measurement());
    report.push_measurement("expm_norm_b_exact", if any_inexact { 0.0 } else { 1.0 }, Vec::new());
    report.push_measurement("approx_err_final", *approx.last().unwrap_or(&0.0), Vec::new());
    report.push_measurement("semigroup_err_final", *semi.last().unwrap_or(&0.0), Vec::new());

    Ok(SemigroupExperiment {
        table,
        approximators,
        report,
    })
}

/// `errors[k+1] ≤ (1 + slack)·errors[k]`, ignoring values below `floor`.
fn monotone(name: &str, lambdas: &[f64], errors: &[f64], floor: f64) -> Tracker {
    let mut t = Tracker::new(name);
    for k in 1..errors.len() {
        let (prev, next) = (errors[k - 1], errors[k]);
        let excess = if prev > 0.0 { next / prev - 1.0 } else { next };
        let ok = next <= (1.0 + MONOTONE_SLACK) * prev || next <= floor;
        t.record(ok, excess, || alloc::vec![lambdas[k - 1], lambdas[k], prev, next]);
    }
    t
}

/// Ratio `e(2λ)/e(λ)` over the last three doublings present in `lambdas`.
/// The defect is the distance outside the band (negative inside it).
fn rate_check(name: &str, lambdas: &[f64], errors: &[f64], floor: f64) -> (Tracker, usize) {
    let mut t = Tracker::new(name);
    let pairs: Vec<usize> = (1..lambdas.len())
        .filter(|k| (lambdas[*k] - 2.0 * lambdas[k - 1]).abs() <= 1e-12 * lambdas[*k])
        .collect();
    let last: Vec<usize> = pairs.iter().rev().take(3).rev().cloned().collect();
    for k in &last {
        let (prev, next) = (errors[k - 1], errors[*k]);
        if prev <= floor {
            continue;
        }
        let ratio = next / prev;
        let outside = (RATE_BAND.0 - ratio).max(ratio - RATE_BAND.1);
        t.record(outside <= 0.0, outside, || alloc::vec![lambdas[k - 1], ratio]);
    }
    (t, last.len())
}

/// Bounded transform `A₀ = A(I + A*A)^{-1/2}`, with the inverse square root
/// taken in the `H₁` frame.
pub fn bounded_transform<'r>(a: &Operator<'r>) -> Result<Operator<'r>> {
    let r = a.rigging();
    let aa = a.adjoint().matrix() * a.matrix();
    let (s1, s1i) = r.sqrt_pair(1)?;
    let f = WeightedSymmetric::new(&aa, s1, s1i)?.apply_psd(|s| 1.0 / libm::sqrt(1.0 + s))?;
    Operator::new(r, a.matrix() * f)
}

/// `d(A, B) = ‖A₀ − B₀‖_{B→B}`.
pub fn operator_metric(a: &Operator<'_>, b: &Operator<'_>) -> Result<NormValue> {
    if !(core::ptr::eq(a.rigging(), b.rigging()) || a.rigging() == b.rigging()) {
        return Err(Error::RiggingMismatch);
    }
    let a0 = bounded_transform(a)?;
    let b0 = bounded_transform(b)?;
    let r = a.rigging();
    // evaluate both orientations so d(A, B) and d(B, A) agree bit for bit
    let ab = opnorm_b(&(a0.matrix() - b0.matrix()), r)?;
    let ba = opnorm_b(&(b0.matrix() - a0.matrix()), r)?;
    Ok(NormValue {
        value: ab.value.max(ba.value),
        exact: ab.exact && ba.exact,
    })
}

/// `UT = A`, `‖U‖_{H₁→H₂} = 1` for `A ≠ 0`, and `‖Tx‖_{H₁} = ‖Ax‖_{H₂}` on
/// `n_x` random inputs.
pub fn check_polar(a: &Operator<'_>, n_x: usize, seed: u64) -> Result<PropertyReport> {
    let r = a.rigging();
    let p = polar_factors(a)?;
    let mut report = PropertyReport::new("check_polar", seed, n_x);
    let a_norm = a.matrix().norm();

    let mut recon = Tracker::new("polar_reconstruction");
    let d = (p.u.matrix() * p.t.matrix() - a.matrix()).norm();
    recon.record(d <= 1e-8 * a_norm, d / a_norm.max(f64::MIN_POSITIVE), Vec::new);
    report.push_assertion(recon);

    if a_norm > 0.0 {
        let mut iso = Tracker::new("partial_isometry_norm");
        let u = matfun::opnorm(p.u.matrix(), Space::H1, Space::H2, r)?;
        let d = (u.value - 1.0).abs();
        iso.record(d <= 1e-8, d, Vec::new);
        report.push_assertion(iso);
    }

    let mut rng = crate::ensemble::rng(seed);
    let mut modulus = Tracker::new("isometry_identity");
    for _ in 0..n_x {
        let x = crate::ensemble::normal_vector(&mut rng, r.n());
        let lhs = r.norm(&(p.t.matrix() * &x), Space::H1);
        let rhs = r.norm(&a.apply(&x), Space::H2);
        let d = (lhs - rhs).abs() / rhs.max(f64::MIN_POSITIVE);
        modulus.record(d <= 1e-9 || lhs == rhs, d, || x.iter().cloned().collect());
    }
    report.push_assertion(modulus);
    report.push_measurement("rank_t", p.rank_t as f64, Vec::new());
    Ok(report)
}

/// `A_λ = λ²U R(λ,T) − λU` to `1e-9` and `A R(λ,T) = R(λ,T̄) A` to `1e-8`,
/// relative to the magnitude of the terms.
pub fn check_yosida_identities(a: &Operator<'_>, lambdas: &[f64]) -> Result<PropertyReport> {
    let y = GeneralizedYosida::new(a)?;
    let mut report = PropertyReport::new("check_yosida_identities", 0, lambdas.len());
    let mut ident = Tracker::new("yosida_identity");
    let mut inter = Tracker::new("intertwining");
    for &lambda in lambdas {
        let d = y.defects(lambda)?;
        let rel = d.identity / d.identity_scale.max(f64::MIN_POSITIVE);
        ident.record(d.identity <= 1e-9 * d.identity_scale, rel, || alloc::vec![lambda]);
        let rel = d.intertwining / d.intertwining_scale.max(f64::MIN_POSITIVE);
        inter.record(d.intertwining <= 1e-8 * d.intertwining_scale, rel, || {
            alloc::vec![lambda]
        });
    }
    report.push_assertion(ident);
    report.push_assertion(inter);
    Ok(report)
}

/// Metric axioms on a triple: exact symmetry, `d(A, A) = 0`, the triangle
/// inequality to `1e-12` (asserted only when all three distances are exact),
/// and `‖A₀‖_{H₁→H₂} ≤ 1 + 1e-10` for each member.
pub fn check_metric(ops: [&Operator<'_>; 3]) -> Result<PropertyReport> {
    let mut report = PropertyReport::new("check_metric", 0, 1);
    let mut d = [[NormValue {
        value: 0.0,
        exact: true,
    }; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            d[i][j] = operator_metric(ops[i], ops[j])?;
        }
    }
    let mut sym = Tracker::new("symmetric");
    let mut zero = Tracker::new("zero_on_diagonal");
    for i in 0..3 {
        let z = d[i][i].value;
        zero.record(z == 0.0, z, || alloc::vec![i as f64]);
        for j in (i + 1)..3 {
            let gap = (d[i][j].value - d[j][i].value).abs();
            sym.record(gap == 0.0, gap, || alloc::vec![i as f64, j as f64]);
        }
    }
    report.push_assertion(sym);
    report.push_assertion(zero);

    let exact = d.iter().flatten().all(|v| v.exact);
    let mut tri = Tracker::new("triangle");
    let mut worst = f64::INFINITY;
    for (i, j, k) in [(0, 1, 2), (0, 2, 1), (1, 0, 2)] {
        let slack = d[i][j].value + d[j][k].value - d[i][k].value;
        worst = worst.min(slack);
        tri.record(slack >= -1e-12, -slack, || alloc::vec![i as f64, j as f64, k as f64]);
    }
    if exact {
        report.push_assertion(tri);
    }
    report.push_measurement("triangle_slack_min", worst, Vec::new());

    let mut bound = Tracker::new("bounded_transform_norm");
    for (i, a) in ops.iter().enumerate() {
        let a0 = bounded_transform(a)?;
        let v = matfun::opnorm(a0.matrix(), Space::H1, Space::H2, a.rigging())?.value;
        bound.record(v <= 1.0 + 1e-10, v - 1.0, || alloc::vec![i as f64]);
    }
    report.push_assertion(bound);
    report.push_measurement("d01", d[0][1].value, Vec::new());
    report.push_measurement("d_exact", if exact { 1.0 } else { 0.0 }, Vec::new());
    Ok(report)
}
