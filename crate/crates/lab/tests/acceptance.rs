//! Acceptance suite. Each check prints one PASS/FAIL line; the process exits
//! nonzero if any check fails.
//!
//! Reference values are recomputed here from plain nalgebra decompositions
//! (SVD, symmetric eigendecomposition, dense inverses) rather than through
//! the library's own kernels wherever that is practical.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use gk_core::adjoint::Operator;
use gk_core::approx::{bounded_transform, operator_metric, polar_factors, semigroup_experiment, yosida_general};
use gk_core::basis::{markushevich, COEFFICIENT_TRIALS};
use gk_core::ensemble::{self, SeededRng};
use gk_core::matfun::expm;
use gk_core::{BanachNorm, DMatrix, DVector, Rigging, Space};
use gk_lab::run::unit_coordinate_inputs;

const PS: [f64; 5] = [1.0, 1.5, 2.0, 3.0, f64::INFINITY];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn sigma_max(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

fn sym_fn(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let e = m.clone().symmetric_eigen();
    &e.eigenvectors * DMatrix::from_diagonal(&e.eigenvalues.map(f)) * e.eigenvectors.transpose()
}

fn diag_sqrt(w: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_diagonal(&w.diagonal().map(f64::sqrt))
}

fn lp(x: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        x.iter().fold(0.0, |m, v| m.max(v.abs()))
    } else {
        x.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

fn member(master: u64, k: u64) -> SeededRng {
    ensemble::rng(ensemble::member_seed(master, k))
}

fn random_diagonal(rng: &mut SeededRng, n: usize, p: f64) -> Rigging {
    Rigging::random_diagonal(n, BanachNorm::lp(p), rng).unwrap()
}

/// Hilbert reduction: transpose adjoint, zero star-residual, metric against
/// an SVD oracle.
fn hilbert_reduction() -> Outcome {
    let mut worst = [0.0f64; 3];
    for n in 2..=8 {
        let r = Rigging::identity(n).unwrap();
        for k in 0..200u64 {
            let mut rng = member(0xA1, (n as u64) << 16 | k);
            let a = ensemble::normal_matrix(&mut rng, n);
            let b = ensemble::normal_matrix(&mut rng, n);
            let op = Operator::new(&r, a.clone()).unwrap();
            worst[0] = worst[0].max((op.adjoint().matrix() - a.transpose()).norm());
            let aa = op.gram().unwrap().astar_a;
            let star = (r.w1_inv() * aa.matrix().transpose() * r.w2() - aa.matrix()).norm();
            worst[1] = worst[1].max(star);

            let id = DMatrix::<f64>::identity(n, n);
            let t = |m: &DMatrix<f64>| m * sym_fn(&(&id + m.transpose() * m), |s| 1.0 / s.sqrt());
            let oracle = sigma_max(&(t(&a) - t(&b)));
            let d = operator_metric(&op, &Operator::new(&r, b).unwrap()).unwrap().value;
            worst[2] = worst[2].max((d - oracle).abs());
        }
    }
    outcome(
        worst[0] <= 1e-12 && worst[1] <= 1e-12 && worst[2] <= 1e-10,
        format!(
            "adjoint {:.2e}, star {:.2e}, metric {:.2e}",
            worst[0], worst[1], worst[2]
        ),
    )
}

/// Shared ensemble for accretivity and the spectral checks.
fn accretive_ensemble(mut f: impl FnMut(&Rigging, &Operator<'_>, &DVector<f64>)) {
    for k in 0..1000u64 {
        let mut rng = member(0xA2, k);
        let n = 2 + (k as usize % 7);
        let r = random_diagonal(&mut rng, n, PS[k as usize % 5]);
        let a = Operator::new(&r, ensemble::normal_matrix(&mut rng, n)).unwrap();
        let x = ensemble::normal_vector(&mut rng, n);
        f(&r, &a, &x);
    }
}

fn accretivity() -> Outcome {
    let (mut violations, mut worst, mut witness) = (0, 0.0f64, String::new());
    accretive_ensemble(|r, a, x| {
        // A*A = W₁⁻¹AᵀW₂A and φˢ_x = (‖x‖²_B/‖x‖²_{H₂})·W₂x, built directly
        let m = a.matrix();
        let aa = r.w1_inv() * m.transpose() * r.w2() * m;
        let bx = r.norm(x, Space::B);
        let h2 = x.dot(&(r.w2() * x));
        let phi = r.w2() * x * (bx * bx / h2);
        let pairing = (aa * x).dot(&phi);
        let scale = m.norm_squared() * bx * bx;
        if pairing < -1e-10 * scale {
            violations += 1;
            let rel = -pairing / scale;
            if rel > worst {
                worst = rel;
                witness = format!("n={} p={}", r.n(), r.b_norm().p());
            }
        }
    });
    outcome(
        violations == 0,
        format!("{violations}/1000 violations, worst relative {worst:.3e} ({witness})"),
    )
}

fn spectral_invertibility() -> Outcome {
    let (mut violations, mut worst_imag, mut worst_neg, mut worst_res) = (0, 0.0f64, 0.0f64, 0.0f64);
    accretive_ensemble(|r, a, _| {
        let n = r.n();
        let m = a.matrix();
        let aa = r.w1_inv() * m.transpose() * r.w2() * m;
        let scale = aa.norm();
        let eig = aa.complex_eigenvalues();
        let imag = eig.iter().fold(0.0f64, |w, z| w.max(z.im.abs())) / scale;
        let neg = eig.iter().fold(0.0f64, |w, z| w.max(-z.re)) / scale;
        let gram = a.gram().unwrap();
        let ipa = DMatrix::identity(n, n) + gram.astar_a.matrix();
        let res = (ipa * gram.inv_i_plus.matrix() - DMatrix::identity(n, n)).norm();
        worst_imag = worst_imag.max(imag);
        worst_neg = worst_neg.max(neg);
        worst_res = worst_res.max(res / n as f64);
        if imag > 1e-8 || neg > 1e-8 || res > 1e-10 * n as f64 {
            violations += 1;
        }
    });
    outcome(
        violations == 0,
        format!("{violations} violations; max |Im| {worst_imag:.2e}, max negativity {worst_neg:.2e}, residual/n {worst_res:.2e}"),
    )
}

fn h1_selfadjoint() -> Outcome {
    let mut violations = 0;
    let mut worst = 0.0f64;
    for k in 0..1000u64 {
        let mut rng = member(0xA4, k);
        let n = 2 + (k as usize % 7);
        let r = random_diagonal(&mut rng, n, PS[k as usize % 5]);
        let a = Operator::new(&r, ensemble::normal_matrix(&mut rng, n)).unwrap();
        let x = ensemble::normal_vector(&mut rng, n);
        let y = ensemble::normal_vector(&mut rng, n);
        let aa = a.gram().unwrap().astar_a.into_matrix();
        let lhs = (&aa * &x).dot(&(r.w1() * &y));
        let rhs = x.dot(&(r.w1() * (&aa * &y)));
        let scale = (r.w1() * &aa).norm() * x.norm() * y.norm();
        let rel = (lhs - rhs).abs() / scale;
        worst = worst.max(rel);
        if rel > 1e-10 {
            violations += 1;
        }
    }
    let r = Rigging::worked_example();
    let a = Operator::new(&r, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0])).unwrap();
    let aa = a.gram().unwrap().astar_a.into_matrix();
    let star = (r.w1_inv() * aa.transpose() * r.w2() - &aa).norm();
    outcome(
        violations == 0 && (star - 0.4375).abs() <= 1e-12,
        format!("{violations}/1000 violations (worst {worst:.2e}); worked star-residual {star}"),
    )
}

fn lax_bound() -> Outcome {
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for k in 0..500u64 {
        let mut rng = member(0xA5, k);
        let n = 2 + (k as usize % 7);
        let p = [1.0, 2.0, f64::INFINITY][k as usize % 3];
        let r = random_diagonal(&mut rng, n, p);
        let s = ensemble::h2_symmetric_matrix(&mut rng, r.w2_inv());
        // ‖S‖_{H₂} = σ_max(W₂^{1/2} S W₂^{-1/2}); ‖S‖_B by column/row sums or σ_max
        let w = diag_sqrt(r.w2());
        let h2 = sigma_max(&(&w * &s * w.clone().try_inverse().unwrap()));
        let b = if p == 1.0 {
            s.column_iter()
                .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max)
        } else if p == 2.0 {
            sigma_max(&s)
        } else {
            s.row_iter()
                .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max)
        };
        let excess = h2 / b - 1.0;
        worst = worst.max(excess);
        if excess > 1e-10 {
            violations += 1;
        }
    }
    outcome(
        violations == 0,
        format!("{violations}/500 violations, max ‖S‖_H2/‖S‖_B − 1 = {worst:.3e}"),
    )
}

fn polar_isometry() -> Outcome {
    let (mut violations, mut worst) = (0, [0.0f64; 3]);
    for k in 0..500u64 {
        let mut rng = member(0xA6, k);
        let n = 2 + (k as usize % 7);
        let r = random_diagonal(&mut rng, n, PS[k as usize % 5]);
        let m = ensemble::normal_matrix(&mut rng, n);
        let a = Operator::new(&r, m.clone()).unwrap();
        let pf = polar_factors(&a).unwrap();
        let recon = (pf.u.matrix() * pf.t.matrix() - &m).norm() / m.norm();
        let (s1, s2) = (diag_sqrt(r.w1()), diag_sqrt(r.w2()));
        let u_norm = sigma_max(&(&s2 * pf.u.matrix() * s1.try_inverse().unwrap()));
        let mut iso = 0.0f64;
        for _ in 0..16 {
            let x = ensemble::normal_vector(&mut rng, n);
            let tx = pf.t.matrix() * &x;
            let ax = &m * &x;
            let lhs = tx.dot(&(r.w1() * &tx)).sqrt();
            let rhs = ax.dot(&(r.w2() * &ax)).sqrt();
            iso = iso.max((lhs - rhs).abs() / rhs);
        }
        worst[0] = worst[0].max(recon);
        worst[1] = worst[1].max((u_norm - 1.0).abs());
        worst[2] = worst[2].max(iso);
        if recon > 1e-8 || (u_norm - 1.0).abs() > 1e-8 || iso > 1e-9 {
            violations += 1;
        }
    }
    outcome(
        violations == 0,
        format!(
            "{violations}/500 violations; ‖UT−A‖/‖A‖ {:.2e}, |‖U‖−1| {:.2e}, isometry {:.2e}",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn yosida_identities() -> Outcome {
    let (mut violations, mut worst) = (0, [0.0f64; 2]);
    for k in 0..100u64 {
        let mut rng = member(0xA7, k);
        let n = 2 + (k as usize % 7);
        let r = random_diagonal(&mut rng, n, PS[k as usize % 5]);
        let m = ensemble::normal_matrix(&mut rng, n);
        let a = Operator::new(&r, m.clone()).unwrap();
        let pf = polar_factors(&a).unwrap();
        let id = DMatrix::<f64>::identity(n, n);
        for j in 0..=10 {
            let lambda = f64::from(1u32 << j);
            let res = (&id * lambda - pf.t.matrix()).try_inverse().unwrap();
            let res_bar = (&id * lambda - pf.tbar.matrix()).try_inverse().unwrap();
            let al = yosida_general(&a, lambda).unwrap().into_matrix();
            let u = pf.u.matrix();
            let via_u = u * &res * (lambda * lambda) - u * lambda;
            let scale1 = lambda * lambda * u.norm() * res.norm() + lambda * u.norm() + lambda * m.norm() * res.norm();
            let d1 = (&al - via_u).norm() / scale1;
            let scale2 = m.norm() * (res.norm() + res_bar.norm());
            let d2 = (&m * &res - &res_bar * &m).norm() / scale2;
            worst[0] = worst[0].max(d1);
            worst[1] = worst[1].max(d2);
            if d1 > 1e-9 || d2 > 1e-8 {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0,
        format!(
            "{violations} violations; identity {:.2e}, intertwining {:.2e}",
            worst[0], worst[1]
        ),
    )
}

fn convergence_rates() -> Outcome {
    let lambdas: Vec<f64> = (0..=10).map(|k| f64::from(1u32 << k)).collect();
    let ts: Vec<f64> = (1..=8).map(|k| f64::from(k) * 0.25).collect();
    let mut problems: Vec<String> = Vec::new();
    let mut worst_final = 0.0f64;

    let mut check = |label: String, a: &Operator<'_>, xs: &[DVector<f64>]| {
        let exp = semigroup_experiment(a, &lambdas, &ts, xs).unwrap();
        let approx = exp.table.approx_errors();
        let semi = exp.table.semigroup_errors();
        for k in 8..=10 {
            if approx[k - 1] > 0.0 {
                let ratio = approx[k] / approx[k - 1];
                if !(0.35..=0.65).contains(&ratio) {
                    problems.push(format!("{label}: ratio {ratio:.3} at λ={}", lambdas[k]));
                }
            }
        }
        for k in 1..semi.len() {
            if semi[k] > 1.05 * semi[k - 1] {
                problems.push(format!("{label}: semigroup error rises at λ={}", lambdas[k]));
            }
        }
        let last = *semi.last().unwrap();
        worst_final = worst_final.max(last);
        if last >= 1e-2 {
            problems.push(format!("{label}: semigroup error {last:.3e} at λ=1024"));
        }
    };

    for k in 0..50u64 {
        let mut rng = member(0xA8, k);
        let r = random_diagonal(&mut rng, 8, PS[k as usize % 5]);
        let m = ensemble::normal_matrix(&mut rng, 8);
        let f = m.norm();
        let a = Operator::new(&r, m / f).unwrap();
        check(format!("random #{k}"), &a, &unit_coordinate_inputs(&r));
    }
    let worked = Rigging::worked_example();
    let nil = Operator::new(&worked, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0])).unwrap();
    check("nilpotent".into(), &nil, &unit_coordinate_inputs(&worked));
    let one = Rigging::identity(1).unwrap();
    let neg = Operator::new(&one, DMatrix::from_element(1, 1, -1.0)).unwrap();
    check("diag(-1)".into(), &neg, &unit_coordinate_inputs(&one));

    let scalar = semigroup_experiment(&neg, &[10.0], &[1.0], &[DVector::from_element(1, 1.0)]).unwrap();
    let got = scalar.table.rows[0].semigroup_err;
    let oracle = ((-10.0f64 / 11.0).exp() - (-1.0f64).exp()).abs();
    if (got - oracle).abs() > 1e-6 {
        problems.push(format!("scalar case {got} vs {oracle}"));
    }
    outcome(
        problems.is_empty(),
        format!(
            "{} problems; worst λ=1024 semigroup error {worst_final:.3e}; scalar {got:.10} (oracle {oracle:.10}){}",
            problems.len(),
            problems.first().map(|p| format!("; first: {p}")).unwrap_or_default()
        ),
    )
}

fn contraction() -> Outcome {
    let ts = [0.1, 0.25, 0.5, 1.0, 2.0, 4.0];
    let (mut violations, mut worst, mut witness) = (0, 0.0f64, String::new());
    for k in 0..100u64 {
        let mut rng = member(0xA9, k);
        let n = 2 + (k as usize % 7);
        let r = Rigging::identity(n).unwrap();
        let a = Operator::new(&r, ensemble::normal_matrix(&mut rng, n)).unwrap();
        let mut bad = false;
        for j in 0..=10 {
            let lambda = f64::from(1u32 << j);
            let al = yosida_general(&a, lambda).unwrap().into_matrix();
            for t in ts {
                let nrm = sigma_max(&expm(&al, t).unwrap());
                if nrm > 1.0 + 1e-10 {
                    bad = true;
                    if nrm - 1.0 > worst {
                        worst = nrm - 1.0;
                        witness = format!("case {k}, λ={lambda}, t={t}");
                    }
                }
            }
        }
        violations += usize::from(bad);
    }
    // reported only: B-norm growth on a general rigging
    let mut rng = member(0xA9, 1 << 20);
    let r = random_diagonal(&mut rng, 4, 1.0);
    let a = Operator::new(&r, ensemble::normal_matrix(&mut rng, 4)).unwrap();
    let exp = semigroup_experiment(&a, &[1.0, 1024.0], &[0.1, 1.0], &unit_coordinate_inputs(&r)).unwrap();
    let growth = exp.report.measurement("expm_norm_b_max").unwrap().value;
    outcome(
        violations == 0,
        format!(
            "{violations}/100 operators exceed 1 + 1e-10, worst excess {worst:.3e} ({witness}); ℓ¹ rigging max ‖exp(tA_λ)‖_B = {growth:.3}"
        ),
    )
}

fn markushevich_basis() -> Outcome {
    let (mut violations, mut checked, mut worst) = (0, 0, [0.0f64; 4]);
    for (pi, &p) in PS.iter().enumerate() {
        for n in 2..=16usize {
            for rep in 0..3u64 {
                let mut rng = member(0xAA, ((pi * 32 + n) as u64) << 8 | rep);
                let r = random_diagonal(&mut rng, n, p);
                let b = markushevich(&r).unwrap();
                let q = conjugate(p);
                let pairing = &b.functionals * &b.vectors;
                let bio = (pairing - DMatrix::<f64>::identity(n, n)).amax();
                let mut primal = 0.0f64;
                let mut dual = 0.0f64;
                for i in 0..n {
                    primal = primal.max((lp(b.vectors.column(i).as_slice(), p) - 1.0).abs());
                    let row: Vec<f64> = b.functionals.row(i).iter().copied().collect();
                    dual = dual.max((lp(&row, q) - 1.0).abs());
                }
                let mut mono = 0.0f64;
                for _ in 0..COEFFICIENT_TRIALS {
                    let a = ensemble::normal_vector(&mut rng, n);
                    let mut partial = DVector::zeros(n);
                    let norms: Vec<f64> = (0..n)
                        .map(|m| {
                            partial += b.vectors.column(m) * a[m];
                            lp(partial.as_slice(), p)
                        })
                        .collect();
                    for m in 0..n {
                        for l in m + 1..n {
                            mono = mono.max(norms[m] - norms[l]);
                        }
                    }
                }
                for (w, v) in worst.iter_mut().zip([bio, primal, dual, mono]) {
                    *w = w.max(v);
                }
                checked += 1;
                if bio > 1e-12 || primal > 1e-12 || dual > 1e-12 || mono > 1e-12 {
                    violations += 1;
                }
            }
        }
    }
    outcome(
        violations == 0,
        format!(
            "{violations}/{checked} bases fail; biorth {:.1e}, primal {:.1e}, dual {:.1e}, monotone {:.1e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn metric_axioms() -> Outcome {
    let mut problems = 0;
    let mut worst_slack = f64::INFINITY;
    for k in 0..500u64 {
        let mut rng = member(0xAB, k);
        let n = 2 + (k as usize % 7);
        let r = random_diagonal(&mut rng, n, [1.0, 2.0, f64::INFINITY][k as usize % 3]);
        let ops: Vec<Operator<'_>> = (0..3)
            .map(|_| Operator::new(&r, ensemble::normal_matrix(&mut rng, n)).unwrap())
            .collect();
        let d = |i: usize, j: usize| operator_metric(&ops[i], &ops[j]).unwrap().value;
        let slack = d(0, 1) + d(1, 2) - d(0, 2);
        worst_slack = worst_slack.min(slack);
        if d(0, 1) != d(1, 0) || d(2, 2) != 0.0 || slack < -1e-12 {
            problems += 1;
        }
    }
    let mut worst_norm = 0.0f64;
    for k in 0..500u64 {
        let mut rng = member(0xAC, k);
        let n = 2 + (k as usize % 7);
        let r = Rigging::identity(n).unwrap();
        let a = Operator::new(&r, ensemble::normal_matrix(&mut rng, n) * 3.0).unwrap();
        let nrm = sigma_max(bounded_transform(&a).unwrap().matrix());
        worst_norm = worst_norm.max(nrm);
        if nrm > 1.0 + 1e-10 {
            problems += 1;
        }
    }
    outcome(
        problems == 0,
        format!("{problems} violations; min triangle slack {worst_slack:.3e}, max ‖A₀‖₂ {worst_norm:.15}"),
    )
}

fn strip_timing(text: &str) -> String {
    let mut v: serde_json::Value = serde_json::from_str(text).unwrap();
    v.as_object_mut().unwrap().remove("timing");
    serde_json::to_string_pretty(&v).unwrap()
}

fn determinism() -> Outcome {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/verify_random.json");
    let dir = std::env::temp_dir().join(format!("gk-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut payloads = Vec::new();
    // same config, including the output path; only the thread count differs
    let out = dir.join("verify.json");
    for (run, threads) in [(0, "1"), (1, "4")] {
        let _ = std::fs::remove_file(&out);
        let status = Command::new(env!("CARGO_BIN_EXE_gk-lab"))
            .args([
                "verify",
                "--config",
                config.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])
            .env("RAYON_NUM_THREADS", threads)
            .status()
            .unwrap();
        let text = std::fs::read_to_string(&out).unwrap_or_default();
        if text.is_empty() || status.code().is_none_or(|c| c > 1) {
            return outcome(false, format!("run {run} produced no report ({status})"));
        }
        payloads.push(strip_timing(&text));
    }
    let same = payloads[0] == payloads[1];
    outcome(
        same,
        format!("{} bytes per payload, identical: {same}", payloads[0].len()),
    )
}

type Check = (&'static str, fn() -> Outcome);

fn main() {
    let checks: [Check; 12] = [
        ("hilbert_reduction", hilbert_reduction),
        ("accretivity", accretivity),
        ("spectrum_and_invertibility", spectral_invertibility),
        ("h1_selfadjointness", h1_selfadjoint),
        ("lax_bound", lax_bound),
        ("polar_partial_isometry", polar_isometry),
        ("yosida_identities", yosida_identities),
        ("convergence_rates", convergence_rates),
        ("hilbert_contraction", contraction),
        ("markushevich_basis", markushevich_basis),
        ("metric_axioms", metric_axioms),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "{:02} {name:<28} {status}  {} [{:.1}s]",
            k + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
