use std::ffi::CStr;
use std::ptr;

use bdupdate_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(bd_last_error()) }
        .to_string_lossy()
        .into_owned()
}

fn band_values(h: *const BdBand) -> (Vec<f64>, Vec<f64>) {
    let (mut m, mut n) = (0, 0);
    assert_eq!(unsafe { bd_band_shape(h, &mut m, &mut n) }, BD_OK);
    let t = m.min(n);
    let mut a = vec![0.0; t];
    let mut b = vec![0.0; t.saturating_sub(1)];
    assert_eq!(
        unsafe { bd_band_values(h, a.as_mut_ptr(), b.as_mut_ptr()) },
        BD_OK
    );
    (a, b)
}

fn dense(m: usize, n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut d = vec![0.0; m * n];
    for (i, v) in a.iter().enumerate() {
        d[i * n + i] = *v;
    }
    for (i, v) in b.iter().enumerate() {
        d[i * n + i + 1] = *v;
    }
    d
}

fn singular_values_sq_sum(d: &[f64]) -> f64 {
    d.iter().map(|x| x * x).sum()
}

#[test]
fn band_round_trip() {
    let mut h = ptr::null_mut();
    let a = [1.0, 2.0, 3.0];
    let b = [0.5, -0.5];
    assert_eq!(
        unsafe { bd_band_new(4, 3, a.as_ptr(), b.as_ptr(), &mut h) },
        BD_OK
    );
    assert!(!h.is_null());
    assert_eq!(band_values(h), (a.to_vec(), b.to_vec()));
    unsafe { bd_band_free(h) };
}

#[test]
fn null_arguments_are_reported() {
    let a = [1.0, 2.0];
    let b = [0.5];
    let code = unsafe { bd_band_new(2, 2, a.as_ptr(), b.as_ptr(), ptr::null_mut()) };
    assert_eq!(code, BD_ERR_NULL);
    assert!(last_error().contains("null"));
    let code = unsafe { bd_band_new(2, 2, ptr::null(), b.as_ptr(), &mut ptr::null_mut()) };
    assert_eq!(code, BD_ERR_NULL);
    let (mut m, mut n) = (0, 0);
    assert_eq!(
        unsafe { bd_band_shape(ptr::null(), &mut m, &mut n) },
        BD_ERR_NULL
    );
    unsafe {
        bd_band_free(ptr::null_mut());
        bd_tracker_free(ptr::null_mut());
    }
}

#[test]
fn bad_policy_is_invalid() {
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { bd_tracker_new(5, 4, 2, &mut t) }, BD_OK);
    assert_eq!(
        unsafe { bd_tracker_set_policy(t, BD_REORTH_EVERY, 0.0) },
        BD_ERR_INVALID
    );
    assert_eq!(unsafe { bd_tracker_set_policy(t, 42, 1.0) }, BD_ERR_INVALID);
    assert_eq!(
        unsafe { bd_tracker_set_policy(t, BD_REORTH_ADAPTIVE, 1e-8) },
        BD_OK
    );
    assert_eq!(last_error(), "");
    unsafe { bd_tracker_free(t) };
}

#[test]
fn out_of_range_index_is_dimension_error() {
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { bd_tracker_new(5, 4, 2, &mut t) }, BD_OK);
    assert_eq!(
        unsafe { bd_tracker_update_sparse(t, 5, 0, 1.0) },
        BD_ERR_DIMENSION
    );
    assert!(!last_error().is_empty());
    unsafe { bd_tracker_free(t) };
}

#[test]
fn bidiagonalize_reconstructs() {
    let (m, n) = (5, 3);
    let a: Vec<f64> = (0..m * n)
        .map(|k| ((k * 7 + 3) % 11) as f64 - 5.0)
        .collect();
    let mut h = ptr::null_mut();
    let mut q = vec![0.0; m * m];
    let mut p = vec![0.0; n * n];
    let code =
        unsafe { bd_bidiagonalize(m, n, a.as_ptr(), &mut h, q.as_mut_ptr(), p.as_mut_ptr()) };
    assert_eq!(code, BD_OK);
    let (al, be) = band_values(h);
    let bd = dense(m, n, &al, &be);
    let mut err = 0.0f64;
    for i in 0..m {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..m {
                for l in 0..n {
                    s += q[i * m + k] * bd[k * n + l] * p[j * n + l];
                }
            }
            err = err.max((s - a[i * n + j]).abs());
        }
    }
    assert!(err < 1e-12, "{err}");
    unsafe { bd_band_free(h) };

    let mut h2 = ptr::null_mut();
    let code =
        unsafe { bd_bidiagonalize(m, n, a.as_ptr(), &mut h2, ptr::null_mut(), ptr::null_mut()) };
    assert_eq!(code, BD_OK);
    unsafe { bd_band_free(h2) };
}

#[test]
fn update_schemes_agree() {
    let (m, n) = (6, 5);
    let a = [3.0, -1.0, 2.0, 0.5, 4.0];
    let b = [1.0, 0.25, -2.0, 1.5];
    let bhat = [0.3, -0.2, 0.9, 0.1, -0.7, 0.4];
    let chat = [1.0, 0.5, -0.5, 0.2, 0.8];
    let mut band = ptr::null_mut();
    assert_eq!(
        unsafe { bd_band_new(m, n, a.as_ptr(), b.as_ptr(), &mut band) },
        BD_OK
    );

    let mut g = ptr::null_mut();
    let mut rotations = 0usize;
    let code = unsafe { bd_bgu_update(band, bhat.as_ptr(), chat.as_ptr(), &mut g, &mut rotations) };
    assert_eq!(code, BD_OK);
    assert!(rotations > 0);

    let mut h = ptr::null_mut();
    let mut mults = 0u64;
    let code = unsafe { bd_bhu_update(band, bhat.as_ptr(), chat.as_ptr(), &mut h, &mut mults) };
    assert_eq!(code, BD_OK);
    assert!(mults > 0);

    // Both are orthogonally equivalent to B + bhat chatᵀ, so the
    // Frobenius norms match it.
    let mut target = dense(m, n, &a, &b);
    for i in 0..m {
        for j in 0..n {
            target[i * n + j] += bhat[i] * chat[j];
        }
    }
    let want = singular_values_sq_sum(&target);
    for handle in [g, h] {
        let (al, be) = band_values(handle);
        let got = singular_values_sq_sum(&al) + singular_values_sq_sum(&be);
        assert!((got - want).abs() < 1e-10 * want, "{got} vs {want}");
    }
    unsafe {
        bd_band_free(g);
        bd_band_free(h);
        bd_band_free(band);
    }
}

#[test]
fn tracker_follows_rank_two_stream() {
    let (m, n, r) = (8, 6, 3);
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { bd_tracker_new(m, n, r, &mut t) }, BD_OK);
    let mut truth = vec![0.0; m * n];
    let u1: Vec<f64> = (0..m).map(|i| (i as f64 + 1.0).sin()).collect();
    let v1: Vec<f64> = (0..n).map(|j| (j as f64 * 0.7).cos()).collect();
    assert_eq!(
        unsafe { bd_tracker_update(t, u1.as_ptr(), v1.as_ptr()) },
        BD_OK
    );
    for i in 0..m {
        for j in 0..n {
            truth[i * n + j] += u1[i] * v1[j];
        }
    }
    assert_eq!(unsafe { bd_tracker_update_sparse(t, 2, 3, 1.5) }, BD_OK);
    truth[2 * n + 3] += 1.5;

    let mut rep = vec![0.0; m * n];
    assert_eq!(
        unsafe { bd_tracker_represented(t, rep.as_mut_ptr()) },
        BD_OK
    );
    let err = rep
        .iter()
        .zip(&truth)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-12, "{err}");

    let frob = singular_values_sq_sum(&truth).sqrt();
    let mut res = f64::NAN;
    assert_eq!(unsafe { bd_tracker_residual(t, frob, &mut res) }, BD_OK);
    assert!(res < 1e-12);

    let (mut dq, mut dp) = (f64::NAN, f64::NAN);
    assert_eq!(unsafe { bd_tracker_drift(t, &mut dq, &mut dp) }, BD_OK);
    assert!(dq < 1e-12 && dp < 1e-12);
    assert_eq!(unsafe { bd_tracker_reorthogonalize(t) }, BD_OK);

    let mut band = ptr::null_mut();
    assert_eq!(unsafe { bd_tracker_band(t, &mut band) }, BD_OK);
    let (mut bm, mut bn) = (0, 0);
    assert_eq!(unsafe { bd_band_shape(band, &mut bm, &mut bn) }, BD_OK);
    assert_eq!((bm, bn), (r, r));
    unsafe {
        bd_band_free(band);
        bd_tracker_free(t);
    }
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/bdupdate.h");
    for name in [
        "bd_last_error",
        "bd_band_new",
        "bd_band_free",
        "bd_band_shape",
        "bd_band_values",
        "bd_bidiagonalize",
        "bd_bgu_update",
        "bd_bhu_update",
        "bd_tracker_new",
        "bd_tracker_free",
        "bd_tracker_set_policy",
        "bd_tracker_update_sparse",
        "bd_tracker_update",
        "bd_tracker_band",
        "bd_tracker_residual",
        "bd_tracker_drift",
        "bd_tracker_reorthogonalize",
        "bd_tracker_represented",
    ] {
        assert!(header.contains(&format!("{name}(")), "{name} missing");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let dir = std::env::temp_dir().join(format!("bdupdate-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("use.c");
    std::fs::write(
        &src,
        "#include \"bdupdate.h\"\n\
         int run(void) {\n\
             BdTracker *t = NULL;\n\
             if (bd_tracker_new(4, 3, 2, &t) != BD_OK) return 1;\n\
             bd_tracker_update_sparse(t, 0, 0, 1.0);\n\
             bd_tracker_free(t);\n\
             return bd_last_error()[0] != 0;\n\
         }\n",
    )
    .unwrap();
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let status = std::process::Command::new(cc)
        .args([
            "-std=c99",
            "-Wall",
            "-Werror",
            "-fsyntax-only",
            "-I",
            include,
        ])
        .arg(&src)
        .status()
        .unwrap();
    std::fs::remove_dir_all(&dir).ok();
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| {
            std::process::Command::new(c)
                .arg("--version")
                .output()
                .is_ok_and(|o| o.status.success())
        })
        .ok_or(())
}
