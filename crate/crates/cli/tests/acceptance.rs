//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use infogeo_core::crbound::{cr_gap, scalar_biased_bound, PsdTolerance};
use infogeo_core::estimation::d_phi_hat;
use infogeo_core::fisher::{analyze, essential_decomposition, fisher_matrix, DEFAULT_REL_THRESHOLD};
use infogeo_core::measure::expectation;
use infogeo_core::model::{expectation_curve, integrability_at};
use infogeo_core::simplex::*;
use infogeo_core::verify::{verify_cells, CellReport, VerifyOptions};
use infogeo_core::zoo::*;
use infogeo_core::{Curve, DensityMeasure, ParamModel, SampleSpace};
use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20240611;
const MC_SAMPLES: usize = 200_000;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn random_masses(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| 0.05 + 2.0 * rng.random::<f64>()).collect()
}

fn random_probability(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let m = random_masses(rng, n);
    let s: f64 = m.iter().sum();
    m.into_iter().map(|v| v / s).collect()
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| 4.0 * rng.random::<f64>() - 2.0).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn simplex_metric() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut exact = true;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = 2 + (rng.random::<f64>() * 7.0) as usize;
        let mu = random_masses(&mut rng, n);
        let closed = fisher_metric_full(&SimplexPoint::measure(mu.clone()).unwrap());
        exact &= (0..n).all(|i| (0..n).all(|j| closed[(i, j)] == if i == j { 1.0 / mu[i] } else { 0.0 }));
        let g = fisher_matrix(&make_measure_cone(n).unwrap().model, &mu).unwrap().g;
        worst = worst.max((g - closed).abs().max());
    }
    verdict(exact && worst <= 1e-10, format!("closed form exact: {exact}; max |G - diag(1/mu)| = {worst:.2e} (tol 1e-10)"))
}

fn simplex_pairings() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = 2 + (rng.random::<f64>() * 7.0) as usize;
        let (f, g) = (random_vec(&mut rng, n), random_vec(&mut rng, n));
        let m = random_masses(&mut rng, n);
        let space = std::sync::Arc::new(SampleSpace::finite_n(n).unwrap());
        let fg: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a * b).collect();
        let full = inverse_pairing_full(&SimplexPoint::measure(m.clone()).unwrap(), &f, &g).unwrap();
        let direct = expectation(&fg, &DensityMeasure::new(space.clone(), m).unwrap()).unwrap();
        worst = worst.max((full - direct).abs());

        let p = random_probability(&mut rng, n);
        let cov = inverse_pairing_simplex(&SimplexPoint::probability(p.clone()).unwrap(), &f, &g).unwrap();
        let mu = DensityMeasure::new(space, p).unwrap();
        let direct = expectation(&fg, &mu).unwrap() - expectation(&f, &mu).unwrap() * expectation(&g, &mu).unwrap();
        worst = worst.max((cov - direct).abs());
    }
    verdict(worst <= 1e-12, format!("max deviation from direct sums {worst:.2e} over 100 cases (tol 1e-12)"))
}

fn simplex_gradients() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let (mut duality, mut tangency, mut orthogonality) = (0.0f64, 0.0f64, 0.0f64);
    for n in 2..=8 {
        for _ in 0..100 {
            let partials = random_vec(&mut rng, n);
            let x = random_vec(&mut rng, n);
            let m = SimplexPoint::measure(random_masses(&mut rng, n)).unwrap();
            let grad = fisher_gradient_full(&m, &partials).unwrap();
            duality = duality.max((metric_pairing(&m, &grad, &x) - dot(&partials, &x)).abs());

            let p = SimplexPoint::probability(random_probability(&mut rng, n)).unwrap();
            let grad = fisher_gradient_simplex(&p, &partials).unwrap();
            let xbar = x.iter().sum::<f64>() / n as f64;
            let tangent: Vec<f64> = x.iter().map(|v| v - xbar).collect();
            duality = duality.max((metric_pairing(&p, &grad, &tangent) - dot(&partials, &tangent)).abs());
            tangency = tangency.max(grad.iter().sum::<f64>().abs());
            let grad_w = fisher_gradient_full(&SimplexPoint::measure(p.masses().to_vec()).unwrap(), &vec![1.0; n]).unwrap();
            orthogonality = orthogonality.max(metric_pairing(&p, &grad, &grad_w).abs());
        }
    }
    let pass = duality <= 1e-10 && tangency <= 1e-10 && orthogonality <= 1e-10;
    verdict(pass, format!("duality {duality:.2e}, tangency {tangency:.2e}, orthogonality {orthogonality:.2e} over 700 trials (tol 1e-10)"))
}

fn singular_points() -> Vec<Vec<f64>> {
    let mut v = vec![vec![0.0, 0.0]];
    v.extend([0.25, 0.5, 0.75].map(|a| vec![a, 0.0]));
    v.extend([0.5, 1.0, 2.0].map(|b| vec![0.0, b]));
    v
}

fn singularity_map() -> Verdict {
    let nm = make_normal_mixture(SampleSpace::simpson(-12.0, 12.0, 4001).unwrap()).unwrap();
    let mut expected: Vec<(Vec<f64>, usize)> = singular_points().into_iter().map(|xi| {
        let r = usize::from(xi != [0.0, 0.0]);
        (xi, r)
    }).collect();
    expected.extend(normal_mixture_regular_points().into_iter().map(|xi| (xi, 2)));
    let mut wrong = Vec::new();
    for (xi, rank) in &expected {
        let f = fisher_matrix(&nm.model, xi).unwrap();
        let got = essential_decomposition(&f, 1e-8).rank;
        if got != *rank {
            wrong.push(format!("{xi:?}: rank {got}, expected {rank}"));
        }
    }
    verdict(wrong.is_empty(), format!("{}/{} ranks as expected{}", expected.len() - wrong.len(), expected.len(), if wrong.is_empty() { String::new() } else { format!("; {}", wrong.join(", ")) }))
}

fn cells<'a>(entries: &[&'a ZooEntry]) -> Vec<(&'a ParamModel, &'a SuiteEntry, Vec<f64>)> {
    entries
        .iter()
        .flat_map(|e| e.default_points.iter().flat_map(move |xi| e.estimator_suite.iter().map(move |s| (&e.model, s, xi.clone()))))
        .collect()
}

struct Matrix {
    finite: Vec<CellReport>,
    sampled: Vec<CellReport>,
    errors: Vec<String>,
}

fn build_matrix() -> Matrix {
    let bernoulli = make_bernoulli().unwrap();
    let mut finite = vec![make_multinomial(2).unwrap(), make_multinomial(3).unwrap(), make_multinomial(4).unwrap()];
    for n in [1, 5, 10] {
        finite.push(make_product(&bernoulli, n).unwrap());
    }
    finite.insert(0, bernoulli);
    let nm = make_normal_mixture(normal_mixture_grid().unwrap()).unwrap();

    let mut errors = Vec::new();
    let mut collect = |r: Vec<infogeo_core::Result<CellReport>>| -> Vec<CellReport> {
        r.into_iter().filter_map(|c| c.map_err(|e| errors.push(e.to_string())).ok()).collect()
    };
    let finite_refs: Vec<&ZooEntry> = finite.iter().collect();
    let finite = collect(verify_cells(&cells(&finite_refs), &VerifyOptions::default()));
    let opts = VerifyOptions { monte_carlo: Some((MC_SAMPLES, SEED)), ..Default::default() };
    let sampled = collect(verify_cells(&cells(&[&nm]), &opts));
    Matrix { finite, sampled, errors }
}

fn cr_inequality(m: &Matrix) -> Verdict {
    let mut failures = Vec::new();
    let mut margin = f64::INFINITY;
    for c in m.finite.iter().chain(&m.sampled) {
        let tol = 1e-6 * (1.0 + c.gap.variance.trace());
        margin = margin.min(c.gap.min_gap_eig + tol);
        if c.gap.min_gap_eig < -tol {
            failures.push(format!("{} {} {:?}: {:.2e}", c.model, c.estimator, c.xi, c.gap.min_gap_eig));
        }
    }
    let mut mc_margin = f64::INFINITY;
    for c in &m.sampled {
        let mc = c.monte_carlo.as_ref().unwrap();
        let tol = 5.0 * mc.standard_error;
        mc_margin = mc_margin.min(mc.report.min_gap_eig + tol);
        if mc.report.min_gap_eig < -tol {
            failures.push(format!("MC {} {:?}: {:.2e} < -5 SE = {:.2e}", c.estimator, c.xi, mc.report.min_gap_eig, -tol));
        }
    }
    failures.extend(m.errors.iter().cloned());
    let cells = m.finite.len() + m.sampled.len();
    verdict(
        failures.is_empty(),
        format!(
            "{cells} cells ({} sampled with S={MC_SAMPLES}); min slack {margin:.2e} above -1e-6(1+trV), {mc_margin:.2e} above -5 SE{}",
            m.sampled.len(),
            if failures.is_empty() { String::new() } else { format!("; failing: {}", failures.join("; ")) }
        ),
    )
}

fn equality_cases(m: &Matrix) -> Verdict {
    let mut gap = 0.0f64;
    for n in 2..=4 {
        let e = make_multinomial(n).unwrap();
        for name in ["empirical", "empirical-masses"] {
            let s = e.suite_entry(name).unwrap();
            for xi in &e.default_points {
                let r = cr_gap(&e.model, &s.estimator, &s.feature, xi, PsdTolerance::Auto, DEFAULT_REL_THRESHOLD).unwrap();
                gap = gap.max(r.gap.abs().max());
            }
        }
    }
    let b = make_bernoulli().unwrap();
    let mut scalar = 0.0f64;
    for name in ["scaled-0.5", "scaled-0.8", "scaled-1.2"] {
        let est = &b.suite_entry(name).unwrap().estimator;
        for xi in &b.default_points {
            let r = scalar_biased_bound(&b.model, est, xi).unwrap();
            scalar = scalar.max((r.mse_lhs - r.rhs).abs());
        }
    }
    let borovkov = m.finite.iter().chain(&m.sampled).filter_map(|c| c.borovkov_rel_deviation).fold(0.0, f64::max);
    let pass = gap <= 1e-10 && scalar <= 1e-10 && borovkov <= 1e-8;
    verdict(pass, format!("multinomial |gap| {gap:.2e} (tol 1e-10); scalar bias bound |lhs - rhs| {scalar:.2e} (tol 1e-10); borovkov vs general {borovkov:.2e} (tol 1e-8)"))
}

fn msevb(m: &Matrix) -> Verdict {
    let worst = m.finite.iter().chain(&m.sampled).map(|c| c.stats.msevb_residual).fold(0.0, f64::max);
    verdict(worst <= 1e-8 && m.errors.is_empty(), format!("max residual {worst:.2e} (tol 1e-8)"))
}

fn differentiation(m: &Matrix) -> Verdict {
    let worst = m.finite.iter().chain(&m.sampled).map(|c| c.derivative_rel_error).fold(0.0, f64::max);
    verdict(worst <= 1e-5 && m.errors.is_empty(), format!("max relative error {worst:.2e} (tol 1e-5)"))
}

/// `∫ h(u) (α − u h′(u)/h(u))² du` by composite Simpson on a fine grid.
fn pathology_constant(alpha: f64) -> f64 {
    let bump = Bump::new();
    let n = 200_000;
    let h = 1.0 / n as f64;
    let f = |u: f64| {
        let v = bump.value(u);
        if v == 0.0 {
            0.0
        } else {
            let g = alpha - u * Bump::log_derivative(u);
            v * g * g
        }
    };
    let s: f64 = (1..n).map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h)).sum();
    s * h / 3.0
}

fn pathology() -> Verdict {
    let alpha = 2.0;
    let ts = [-0.2, -0.1, -0.05, -0.01, 0.01, 0.05, 0.1, 0.2];
    let e = make_pathology(alpha, 4.0).unwrap();
    let curve = Curve::line(vec![0.0], vec![1.0], -0.2, 0.2);
    let c2 = pathology_constant(alpha);
    let k2 = integrability_at(&e.model, &curve, 2.0, &ts).unwrap();
    let trend_dev = k2
        .samples
        .iter()
        .map(|s| (s.norm / (c2 * s.t.abs().powf(alpha - 1.0)).sqrt() - 1.0).abs())
        .fold(0.0, f64::max);

    let k4 = integrability_at(&e.model, &curve, 4.0, &[0.01, 0.2]).unwrap();
    let (near, far) = (&k4.samples[0], &k4.samples[1]);
    let ratio_pow = near.norm_pow / far.norm_pow;
    let ratio_norm = near.norm / far.norm;

    let phi = &e.observable("x^-beta").unwrap().values;
    let ex = expectation_curve(&e.model, phi, &curve, &[0.0, 0.01, 0.1]).unwrap();
    let ratio_e = ex[1] / ex[2];

    let first = e.model.space().points().iter().copied().find(|x| *x > 0.0).unwrap();
    let mu = infogeo_core::model::density_at(&e.model, &[0.01]).unwrap();
    let near_clip: Vec<f64> = e.model.space().points().iter().zip(phi).map(|(x, v)| if *x <= 2.0 * first { *v } else { 0.0 }).collect();
    let clip_share = expectation(&near_clip, &mu).unwrap() / ex[1];

    let pass = trend_dev < 0.1 && ratio_pow >= 10.0 && ratio_e >= 5.0 && ex[0] == 0.0 && clip_share < 0.01;
    verdict(
        pass,
        format!(
            "k=2 max deviation from trend {:.1}%; k=4 norm^k ratio {ratio_pow:.1} (k-th root ratio {ratio_norm:.2}); E(phi) ratio {ratio_e:.1}, E_p0(phi) = {}; clipped-node share {clip_share:.1e}",
            100.0 * trend_dev, ex[0]
        ),
    )
}

fn visibility() -> Verdict {
    let nm = make_normal_mixture(normal_mixture_grid().unwrap()).unwrap();
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for xi in singular_points() {
        let (_, decomp, _) = analyze(&nm.model, &xi, DEFAULT_REL_THRESHOLD).unwrap();
        let k: DMatrix<f64> = decomp.kernel_basis();
        for s in &nm.estimator_suite {
            let j = d_phi_hat(&nm.model, &s.estimator, &s.feature, &xi).unwrap();
            let leak = (&j * &k).abs().max();
            let scale = j.norm();
            if leak > 1e-6 * scale {
                failures.push(format!("{} {xi:?}: {leak:.2e}", s.name));
            }
            if scale > 0.0 {
                worst = worst.max(leak / scale);
            }
        }
    }
    verdict(failures.is_empty(), format!("max |J k| / |J| = {worst:.2e} at {} singular points (tol 1e-6){}", singular_points().len(), if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }))
}

fn determinism() -> Verdict {
    let spec = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs/verify-normal-mixture.json");
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    let mut codes = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("report-{i}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_infogeo"))
            .args(["run", "--spec"])
            .arg(&spec)
            .arg("--out")
            .arg(&out)
            .env_remove("INFOGEO_SEED")
            .env_remove("INFOGEO_THREADS")
            .env_remove("INFOGEO_RANK_THRESHOLD")
            .env_remove("INFOGEO_PSD_TOL")
            .env_remove("INFOGEO_FORMAT")
            .status()
            .unwrap();
        codes.push(status.code());
        outputs.push(std::fs::read(&out).unwrap_or_default());
    }
    let same = !outputs[0].is_empty() && outputs[0] == outputs[1];
    verdict(same && codes == [Some(0), Some(0)], format!("{} bytes each, identical: {same}, exit codes {codes:?}", outputs[0].len()))
}

fn main() {
    let mut results: Vec<(u32, &str, Verdict, Duration, Duration)> = Vec::new();
    let mut timed = |id: u32, name: &'static str, limit: Duration, f: &mut dyn FnMut() -> Verdict| {
        let t = Instant::now();
        let v = f();
        results.push((id, name, v, t.elapsed(), limit));
    };
    let secs = Duration::from_secs;
    timed(1, "simplex Fisher metric", secs(1), &mut simplex_metric);
    timed(2, "simplex inverse pairings", secs(1), &mut simplex_pairings);
    timed(3, "simplex Fisher gradients", secs(1), &mut simplex_gradients);
    timed(4, "normal mixture singularity map", secs(30), &mut singularity_map);
    let mut matrix = None;
    timed(5, "general Cramér-Rao inequality", secs(300), &mut || {
        let m = build_matrix();
        let v = cr_inequality(&m);
        matrix = Some(m);
        v
    });
    let m = matrix.unwrap();
    timed(6, "equality cases", secs(10), &mut || equality_cases(&m));
    timed(7, "MSE = V + b b^T", secs(300), &mut || msevb(&m));
    timed(8, "differentiation under the integral", secs(300), &mut || differentiation(&m));
    timed(9, "pathology reproduction", secs(30), &mut pathology);
    timed(10, "visibility at singular points", secs(300), &mut visibility);
    timed(11, "byte-identical verify reports", secs(300), &mut determinism);

    let mut failed = 0;
    for (id, name, v, elapsed, limit) in &results {
        let in_time = elapsed <= limit;
        let pass = v.pass && in_time;
        failed += usize::from(!pass);
        println!(
            "criterion {id:>2} {}: {name}: {} [{:.2} s, limit {} s]",
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
