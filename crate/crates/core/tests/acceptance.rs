//! End-to-end acceptance checks. Runs without the libtest harness so each
//! check prints exactly one ordered PASS/FAIL line.

use std::collections::HashMap;
use std::io::Write;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use bdupdate::bgu::{bgu_update, GivensRotation, Side};
use bdupdate::bhu::{bhu_update, HouseholderCompactState};
use bdupdate::bounds::{diff_bounds, exact_diff_sq};
use bdupdate::dense::{bidiagonal_values, bidiagonalize_dense};
use bdupdate::gkb::{gkb, Reorth};
use bdupdate::jacobi::{jacobi_svd, DEFAULT_TOL};
use bdupdate::rbd::{rbd, SketchConfig};
use bdupdate::synth;
use bdupdate::tracking::{IncrementalSvd, TrackedFactorization, UpdateEvent};
use bdupdate::truncation::bd_truncation_error_sq;
use bdupdate::{BidiagonalMatrix, DenseMatrix};

struct Outcome {
    pass: bool,
    detail: String,
}

type Check = fn() -> Outcome;

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed <= Duration::from_secs(limit_secs)
}

fn frob_sq(a: &DenseMatrix) -> f64 {
    a.data().iter().map(|x| x * x).sum()
}

fn diff_frob(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn updated_dense(b: &BidiagonalMatrix, bhat: &[f64], chat: &[f64]) -> DenseMatrix {
    let mut a = b.to_dense();
    for (i, bi) in bhat.iter().enumerate() {
        for (j, cj) in chat.iter().enumerate() {
            a[(i, j)] += bi * cj;
        }
    }
    a
}

/// Column-zeroed band: keeps columns `0..r`.
fn keep_prefix(b: &BidiagonalMatrix, r: usize) -> DenseMatrix {
    let mut d = b.to_dense();
    for i in 0..d.rows() {
        for j in r..d.cols() {
            d[(i, j)] = 0.0;
        }
    }
    d
}

fn truncation_identity() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut checks = 0;
    for s in 0..20u64 {
        let n = 2 + (s as usize * 7) % 39;
        let m = n + (s as usize * 11) % (61 - n);
        let a = synth::gaussian_matrix(m, n, 100 + s);
        let d = bidiagonalize_dense(&a);
        let scale = frob_sq(&a);
        for r in 1..=n {
            let formula = bd_truncation_error_sq(&d.b, &(0..r).collect::<Vec<_>>()).unwrap();
            let ar =
                d.q.matrix()
                    .matmul(&keep_prefix(&d.b, r))
                    .matmul(&d.p.matrix().transpose());
            let dense = diff_frob(&a, &ar).powi(2);
            worst = worst.max((formula - dense).abs() / scale);
            checks += 1;
        }
    }
    let t = start.elapsed();
    outcome(
        worst <= 1e-10 && within(t, 10),
        format!("{checks} prefixes, worst relative gap {worst:.2e}, {t:.2?}"),
    )
}

fn bound_sandwich() -> Outcome {
    let start = Instant::now();
    let mut violations = 0;
    let mut oracle_gap = 0.0f64;
    let mut full_rank_gap = 0.0f64;
    for s in 0..10u64 {
        let a = synth::gaussian_matrix(60, 40, 200 + s);
        let d = bidiagonalize_dense(&a);
        let svd_a = jacobi_svd(&a, DEFAULT_TOL).unwrap();
        let q = d.q.matrix();
        let pt = d.p.matrix().transpose();
        let scale = frob_sq(&a);
        for r in 1..=40 {
            let bounds = diff_bounds(&svd_a.sigma, &d.b, r).unwrap();
            let exact = exact_diff_sq(&d.b, r).unwrap();
            // independent dense evaluation of the same distance
            let bd = q.matmul(&keep_prefix(&d.b, r)).matmul(&pt);
            let dense = diff_frob(&svd_a.reconstruct(r), &bd).powi(2);
            oracle_gap = oracle_gap.max((dense - exact).abs() / scale);
            let slack = 1e-10 * scale;
            if bounds.lower > exact + slack || exact > bounds.upper + slack {
                violations += 1;
            }
            if r == 40 {
                full_rank_gap = full_rank_gap
                    .max((bounds.lower - exact).abs())
                    .max((bounds.upper - exact).abs());
            }
        }
    }
    let t = start.elapsed();
    outcome(
        violations == 0 && full_rank_gap <= 1e-9 && oracle_gap <= 1e-9 && within(t, 30),
        format!(
            "{violations} violations, gap at r=t {full_rank_gap:.2e}, exact vs dense {oracle_gap:.2e}, {t:.2?}"
        ),
    )
}

fn reflect_rows(a: &mut DenseMatrix, y: &[f64]) {
    let yy: f64 = y.iter().map(|v| v * v).sum();
    if yy == 0.0 {
        return;
    }
    for j in 0..a.cols() {
        let dot: f64 = (0..a.rows()).map(|i| y[i] * a[(i, j)]).sum();
        let f = 2.0 * dot / yy;
        for (i, yi) in y.iter().enumerate() {
            a[(i, j)] -= f * yi;
        }
    }
}

fn reflect_cols(a: &mut DenseMatrix, w: &[f64]) {
    let ww: f64 = w.iter().map(|v| v * v).sum();
    if ww == 0.0 {
        return;
    }
    for i in 0..a.rows() {
        let dot: f64 = (0..a.cols()).map(|j| a[(i, j)] * w[j]).sum();
        let f = 2.0 * dot / ww;
        for (j, wj) in w.iter().enumerate() {
            a[(i, j)] -= f * wj;
        }
    }
}

fn compact_representation() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut storage_ok = true;
    let mut storage_checks = 0;
    for s in 0..10u64 {
        let (m, n) = (30, 20);
        let b = synth::gaussian_bidiagonal(m, n, 300 + s);
        let bhat = synth::gaussian_vector(m, 400 + s);
        let chat = synth::gaussian_vector(n, 500 + s);
        let a = updated_dense(&b, &bhat, &chat);
        let scale = frob_sq(&a).sqrt();
        let mut st = HouseholderCompactState::new(b, bhat, chat).unwrap();
        loop {
            let (kl, kr) = (st.k_left(), st.k_right());
            let mut oracle = a.clone();
            let y = st.y_matrix();
            for j in 0..kl {
                reflect_rows(&mut oracle, &y.column(j));
            }
            let w = st.w_matrix();
            for j in 0..kr {
                reflect_cols(&mut oracle, &w.column(j));
            }
            let dense = st.densify().unwrap();
            worst = worst.max(diff_frob(&dense, &oracle) / scale);
            if kl == kr {
                storage_ok &= st.aux_storage() == (m + n + 2) * kl;
                storage_checks += 1;
            } else {
                storage_ok &= st.aux_storage() == (m + 1) * kl + (n + 1) * kr;
            }
            if st.is_complete() {
                break;
            }
            st.step().unwrap();
        }
    }
    let t = start.elapsed();
    outcome(
        worst <= 1e-10 && storage_ok && within(t, 20),
        format!(
            "worst relative gap {worst:.2e}, storage exact on {storage_checks} balanced steps: {storage_ok}, {t:.2?}"
        ),
    )
}

fn max_abs_gap(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a.abs() - b.abs()).abs())
        .fold(0.0, f64::max)
}

fn update_agreement() -> Outcome {
    let start = Instant::now();
    let shapes = [
        (200, 200),
        (200, 150),
        (180, 180),
        (150, 100),
        (120, 120),
        (120, 60),
        (100, 100),
        (90, 30),
        (80, 80),
        (64, 48),
        (50, 50),
        (40, 10),
        (33, 33),
        (25, 20),
        (16, 16),
        (12, 5),
        (8, 8),
        (5, 3),
        (3, 3),
        (2, 2),
    ];
    let mut worst = 0.0f64;
    for (s, &(m, n)) in shapes.iter().enumerate() {
        let s = s as u64;
        let b = synth::gaussian_bidiagonal(m, n, 600 + s);
        let bhat = synth::gaussian_vector(m, 700 + s);
        let chat = synth::gaussian_vector(n, 800 + s);
        let a = updated_dense(&b, &bhat, &chat);
        let scale = frob_sq(&a).sqrt();
        let g = bgu_update(&b, &bhat, &chat).unwrap().b;
        let h = bhu_update(&b, &bhat, &chat).unwrap().b;
        let (d, _) = bidiagonal_values(&a);
        for (x, y) in [(&g, &h), (&g, &d), (&h, &d)] {
            let gap = max_abs_gap(&x.alphas, &y.alphas).max(max_abs_gap(&x.betas, &y.betas));
            worst = worst.max(gap / scale);
        }
    }
    let t = start.elapsed();
    outcome(
        worst <= 1e-9 && within(t, 60),
        format!("20 instances, worst pairwise relative gap {worst:.2e}, {t:.2?}"),
    )
}

fn rotate(a: &mut DenseMatrix, g: &GivensRotation) {
    let (i, j, c, s) = (g.i, g.j, g.c, g.s);
    match g.side {
        Side::Left => {
            for k in 0..a.cols() {
                let (x, y) = (a[(i, k)], a[(j, k)]);
                if i == j {
                    a[(i, k)] = c * x;
                } else {
                    a[(i, k)] = c * x - s * y;
                    a[(j, k)] = s * x + c * y;
                }
            }
        }
        Side::Right => {
            for k in 0..a.rows() {
                let (x, y) = (a[(k, i)], a[(k, j)]);
                if i == j {
                    a[(k, i)] = c * x;
                } else {
                    a[(k, i)] = c * x - s * y;
                    a[(k, j)] = s * x + c * y;
                }
            }
        }
    }
}

fn bgu_exactness() -> Outcome {
    let shapes = [
        (1, 1),
        (2, 2),
        (3, 2),
        (5, 5),
        (10, 4),
        (20, 20),
        (40, 25),
        (64, 64),
        (100, 100),
        (150, 60),
        (200, 200),
    ];
    let mut worst = 0.0f64;
    let mut local = true;
    let mut bounded = true;
    let mut runs = 0;
    for (s, &(m, n)) in shapes.iter().enumerate() {
        for variant in 0..3u64 {
            let seed = 900 + 10 * s as u64 + variant;
            let b = synth::gaussian_bidiagonal(m, n, seed);
            let mut bhat = synth::gaussian_vector(m, seed + 1000);
            let mut chat = synth::gaussian_vector(n, seed + 2000);
            if variant == 1 {
                // update that already fits in the band
                bhat.iter_mut().skip(1).for_each(|x| *x = 0.0);
                chat.iter_mut().skip(2).for_each(|x| *x = 0.0);
            } else if variant == 2 {
                bhat.iter_mut().for_each(|x| *x = 0.0);
            }
            let out = bgu_update(&b, &bhat, &chat).unwrap();
            let mut a = updated_dense(&b, &bhat, &chat);
            let scale = frob_sq(&a).sqrt().max(f64::MIN_POSITIVE);
            out.left.iter().for_each(|g| rotate(&mut a, g));
            out.right.iter().for_each(|g| rotate(&mut a, g));
            worst = worst.max(diff_frob(&a, &out.b.to_dense()) / scale);
            let rot = out.audit.rotations as u64;
            local &= out.audit.mult_counter <= 10 * rot;
            bounded &= out.audit.rotations <= 6 * n * n + 4 * (m + n);
            runs += 1;
        }
    }
    outcome(
        worst <= 1e-10 && local && bounded,
        format!(
            "{runs} runs, worst relative gap {worst:.2e}, mult <= 10 x rotations: {local}, rotation bound: {bounded}"
        ),
    )
}

fn slope(ns: &[f64], ys: &[f64]) -> f64 {
    let xs: Vec<f64> = ns.iter().map(|x| x.ln()).collect();
    let ls: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ls.iter().sum::<f64>() / k);
    let num: f64 = xs.iter().zip(&ls).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

fn quadratic_scaling() -> Outcome {
    let start = Instant::now();
    let sizes = [100usize, 200, 400, 800];
    let mut bgu_mults = Vec::new();
    let mut dense_mults = Vec::new();
    for &n in &sizes {
        let b = synth::gaussian_bidiagonal(n, n, n as u64);
        let bhat = synth::gaussian_vector(n, n as u64 + 1);
        let chat = synth::gaussian_vector(n, n as u64 + 2);
        bgu_mults.push(bgu_update(&b, &bhat, &chat).unwrap().audit.mult_counter as f64);
        let (_, mults) = bidiagonal_values(&updated_dense(&b, &bhat, &chat));
        dense_mults.push(mults as f64);
    }
    let ns: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let (sg, sd) = (slope(&ns, &bgu_mults), slope(&ns, &dense_mults));
    let t = start.elapsed();
    outcome(
        (1.7..=2.3).contains(&sg) && sd >= 2.6 && within(t, 120),
        format!("givens slope {sg:.3}, dense slope {sd:.3}, {t:.2?}"),
    )
}

fn streaming_fidelity() -> Outcome {
    let start = Instant::now();
    let n = 500;
    let mut rng = synth::rng(1234);
    use rand::seq::index::sample;
    use rand::Rng;
    let nodes: Vec<usize> = sample(&mut rng, n, 40).into_vec();
    let mut tracker = TrackedFactorization::new(n, n, 64).unwrap();
    let mut truth: HashMap<(usize, usize), f64> = HashMap::new();
    let mut cumulative = 0.0;
    let mut worst_step = 0.0f64;
    for _ in 0..50 {
        let u = nodes[rng.random_range(0..nodes.len())];
        let mut v = nodes[rng.random_range(0..nodes.len())];
        while v == u {
            v = nodes[rng.random_range(0..nodes.len())];
        }
        let w: f64 = rng.random_range(0.5..2.0);
        for (i, j) in [(u, v), (v, u)] {
            tracker
                .update(&UpdateEvent::Sparse { i, j, theta: w })
                .unwrap();
            *truth.entry((i, j)).or_default() += w;
        }
        let frob = truth.values().map(|x| x * x).sum::<f64>().sqrt();
        let step = (frob - tracker.b().frob_norm()).abs();
        worst_step = worst_step.max(step);
        cumulative += step;
    }
    let t = start.elapsed();
    outcome(
        cumulative <= 1e-8 && within(t, 30),
        format!("cumulative residual {cumulative:.2e}, worst step {worst_step:.2e}, {t:.2?}"),
    )
}

fn tracker_agreement() -> Outcome {
    let (m, n, r) = (150, 120, 32);
    let u0 = synth::orthonormal_columns(m, r, 77);
    let v0 = synth::orthonormal_columns(n, r, 78);
    let mut tracker = TrackedFactorization::new(m, n, r).unwrap();
    let mut isvd = IncrementalSvd::new(m, n, r).unwrap();
    let mut truth = DenseMatrix::zeros(m, n);
    let mut worst = 0.0f64;
    let mut worst_truth = 0.0f64;
    for h in 0..200u64 {
        let b = u0.matvec(&synth::gaussian_vector(r, 10_000 + h));
        let c = v0.matvec(&synth::gaussian_vector(r, 20_000 + h));
        truth.add_outer(1.0, &b, &c);
        let ev = UpdateEvent::Dense { b, c };
        tracker.update(&ev).unwrap();
        isvd.update(&ev).unwrap();
        let scale = frob_sq(&truth).sqrt();
        let rep = tracker.represented();
        worst = worst.max(diff_frob(&rep, &isvd.represented()) / scale);
        worst_truth = worst_truth.max(diff_frob(&rep, &truth) / scale);
    }
    outcome(
        worst <= 1e-7,
        format!("200 events, worst relative disagreement {worst:.2e}, vs truth {worst_truth:.2e}"),
    )
}

fn factor_bits(q: &DenseMatrix, b: &BidiagonalMatrix, p: &DenseMatrix) -> Vec<u64> {
    q.data()
        .iter()
        .chain(&b.alphas)
        .chain(&b.betas)
        .chain(p.data())
        .map(|x| x.to_bits())
        .collect()
}

fn rbd_floor() -> Outcome {
    let (m, n, r) = (100, 80, 10);
    let sigma: Vec<f64> = (0..n).map(|i| 0.8f64.powi(i as i32)).collect();
    let a = synth::with_spectrum(m, n, &sigma, 4242);
    let floor = sigma[r..].iter().map(|s| s * s).sum::<f64>().sqrt();
    let mut below = 0;
    let mut identical = true;
    let mut worst_ratio = 0.0f64;
    for seed in 0..20u64 {
        let cfg = SketchConfig::new(r, seed);
        let x = rbd(&a, &cfg).unwrap();
        let y = rbd(&a, &cfg).unwrap();
        identical &= factor_bits(x.q.matrix(), &x.b, x.p.matrix())
            == factor_bits(y.q.matrix(), &y.b, y.p.matrix());
        let err = diff_frob(&a, &x.reconstruct());
        if err < floor - 1e-10 {
            below += 1;
        }
        worst_ratio = worst_ratio.max(err / floor);
    }
    outcome(
        below == 0 && identical,
        format!(
            "20 seeds, {below} below floor {floor:.4e}, worst error/floor {worst_ratio:.3}, byte-identical: {identical}"
        ),
    )
}

fn orthogonality_drift(f: &DenseMatrix) -> f64 {
    let g = f.transpose().matmul(f);
    let k = g.rows();
    let mut s = 0.0;
    for i in 0..k {
        for j in 0..k {
            let e = g[(i, j)] - if i == j { 1.0 } else { 0.0 };
            s += e * e;
        }
    }
    s.sqrt()
}

fn gkb_reorthogonalization() -> Outcome {
    let a = synth::sparse_matrix(100, 60, 0.15, 5150);
    let mut p1 = synth::gaussian_vector(60, 5151);
    let norm = p1.iter().map(|x| x * x).sum::<f64>().sqrt();
    p1.iter_mut().for_each(|x| *x /= norm);
    let drift = |reorth| {
        let g = gkb(&a, &p1, 60, reorth).unwrap();
        orthogonality_drift(g.q.matrix()).max(orthogonality_drift(g.p.matrix()))
    };
    let (full, none) = (drift(Reorth::Full), drift(Reorth::None));
    outcome(
        full <= 1e-10 && none >= full,
        format!("full reorth drift {full:.2e}, no reorth drift {none:.2e}"),
    )
}

fn main() -> ExitCode {
    let checks: [(&str, Check); 10] = [
        ("truncation error identity", truncation_identity),
        ("SVD/BD distance bound sandwich", bound_sandwich),
        ("compact Householder representation", compact_representation),
        ("BHU/BGU/dense agreement", update_agreement),
        ("BGU exactness and locality", bgu_exactness),
        ("BGU quadratic scaling", quadratic_scaling),
        ("streaming fidelity", streaming_fidelity),
        ("tracker vs incremental SVD", tracker_agreement),
        ("RBD floor and determinism", rbd_floor),
        ("GKB reorthogonalization", gkb_reorthogonalization),
    ];
    let mut out = std::io::stdout().lock();
    let mut failed = 0;
    for (k, (name, check)) in checks.iter().enumerate() {
        let o = check();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        let _ = writeln!(out, "criterion {:>2} {tag}: {name} ({})", k + 1, o.detail);
    }
    let _ = writeln!(
        out,
        "{} of {} criteria passed",
        checks.len() - failed,
        checks.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
