//! Rank-r streaming tracker `A ≈ Q B Pᵀ` under rank-1 events.
//!
//! Each event `b cᵀ` is split against the current bases, the (r+1)-order
//! middle matrix `[B 0; 0 0] + [b̂; δ][ĉ; γ]ᵀ` is reduced with
//! [`bgu_update`], and the result is cut back to order r by zeroing the
//! smallest diagonal entry, chasing its column empty and deleting it.

use std::collections::HashMap;
use std::str::FromStr;

use rand::seq::index::sample;

use crate::bgu::{apply_rotations, bgu_update, givens, GivensRotation, Side};
use crate::dense::bidiagonalize_dense;
use crate::error::{Error, Result};
use crate::jacobi::{jacobi_svd, DEFAULT_TOL};
use crate::matrix::{compose, BidiagonalMatrix, DenseMatrix};
use crate::synth;

/// Relative size below which the part of `b` (or `c`) outside the basis is dropped.
pub const AUGMENT_TOL: f64 = 1e-12;
/// Drift level that triggers adaptive reorthogonalization.
pub const ADAPTIVE_THRESHOLD: f64 = 1e-8;
const DRIFT_SUBSET: usize = 32;
const FULL_CHECK_EVERY: u64 = 64;
/// Drift growth below this level is roundoff and never counts as doubling.
const DOUBLING_FLOOR: f64 = 1e-12;
const REPROJECT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReorthPolicy {
    Never,
    EveryK(u64),
    /// Reorthogonalize when the drift estimate passes the threshold or has
    /// doubled since the previous check.
    Adaptive(f64),
}

impl Default for ReorthPolicy {
    fn default() -> Self {
        ReorthPolicy::Adaptive(ADAPTIVE_THRESHOLD)
    }
}

impl FromStr for ReorthPolicy {
    type Err = Error;

    /// `never`, `every:K` or `adaptive[:THRESHOLD]`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown reorthogonalization policy '{s}'"));
        let (name, arg) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        match (name, arg) {
            ("never", None) => Ok(ReorthPolicy::Never),
            ("every", Some(k)) => match k.parse::<u64>() {
                Ok(k) if k > 0 => Ok(ReorthPolicy::EveryK(k)),
                _ => Err(bad()),
            },
            ("adaptive", None) => Ok(ReorthPolicy::default()),
            ("adaptive", Some(t)) => match t.parse::<f64>() {
                Ok(t) if t > 0.0 => Ok(ReorthPolicy::Adaptive(t)),
                _ => Err(bad()),
            },
            _ => Err(bad()),
        }
    }
}

/// A rank-1 change `b cᵀ`, dense or as `θ eᵢ eⱼᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub enum UpdateEvent {
    Dense { b: Vec<f64>, c: Vec<f64> },
    Sparse { i: usize, j: usize, theta: f64 },
}

impl UpdateEvent {
    fn vectors(&self, m: usize, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let (b, c) = match self {
            UpdateEvent::Dense { b, c } => {
                if b.len() != m || c.len() != n {
                    return Err(Error::Dimension(format!(
                        "event of shape {}x{} for a {m}x{n} tracker",
                        b.len(),
                        c.len()
                    )));
                }
                (b.clone(), c.clone())
            }
            UpdateEvent::Sparse { i, j, theta } => {
                if *i >= m {
                    return Err(Error::IndexOutOfRange {
                        index: *i,
                        limit: m,
                    });
                }
                if *j >= n {
                    return Err(Error::IndexOutOfRange {
                        index: *j,
                        limit: n,
                    });
                }
                let mut b = vec![0.0; m];
                let mut c = vec![0.0; n];
                b[*i] = *theta;
                c[*j] = 1.0;
                (b, c)
            }
        };
        if b.iter().chain(&c).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { step: 0 });
        }
        Ok((b, c))
    }
}

/// `b = Q b̂ + b⊥` with `δ = ‖b⊥‖`, and likewise `c = P ĉ + c⊥`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub bhat: Vec<f64>,
    pub bperp: Vec<f64>,
    pub delta: f64,
    pub chat: Vec<f64>,
    pub cperp: Vec<f64>,
    pub gamma: f64,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn sub_projection(basis: &DenseMatrix, x: &mut [f64]) -> Vec<f64> {
    let h = basis.tmatvec(x);
    let back = basis.matvec(&h);
    for (xi, bi) in x.iter_mut().zip(&back) {
        *xi -= bi;
    }
    h
}

/// Splits `x` against the orthonormal columns of `basis`, re-projecting once
/// if the remainder is not orthogonal enough.
fn split(basis: &DenseMatrix, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut perp = x.to_vec();
    let mut coef = sub_projection(basis, &mut perp);
    let scale = norm(x);
    let leak = basis.tmatvec(&perp);
    if leak.iter().any(|v| v.abs() > REPROJECT_TOL * scale) {
        let h = sub_projection(basis, &mut perp);
        coef.iter_mut().zip(&h).for_each(|(a, b)| *a += b);
    }
    (coef, perp)
}

pub fn project(q: &DenseMatrix, p: &DenseMatrix, b: &[f64], c: &[f64]) -> Result<Projection> {
    if b.len() != q.rows() || c.len() != p.rows() {
        return Err(Error::Dimension(
            "vector lengths do not match the bases".into(),
        ));
    }
    let (bhat, bperp) = split(q, b);
    let (chat, cperp) = split(p, c);
    let delta = norm(&bperp);
    let gamma = norm(&cperp);
    Ok(Projection {
        bhat,
        bperp,
        delta,
        chat,
        cperp,
        gamma,
    })
}

/// Unit vector orthogonal to `basis` along `dir` (scaled by `len`), with one
/// extra Gram–Schmidt pass. Folds the correction back into `coef` so that
/// `basis·coef + len'·w` still equals the original vector. Returns `(w, len')`.
fn new_direction(basis: &DenseMatrix, dir: &[f64], len: f64, coef: &mut [f64]) -> (Vec<f64>, f64) {
    let mut w: Vec<f64> = dir.iter().map(|x| x / len).collect();
    let h = sub_projection(basis, &mut w);
    coef.iter_mut().zip(&h).for_each(|(a, b)| *a += len * b);
    let nw = norm(&w);
    w.iter_mut().for_each(|x| *x /= nw);
    (w, len * nw)
}

/// Unit vector orthogonal to `basis`, built from the coordinate axis the
/// basis covers least.
fn completion(basis: &DenseMatrix) -> Vec<f64> {
    let (m, k) = basis.shape();
    let weakest = (0..m)
        .map(|i| (i, basis.row(i).iter().map(|v| v * v).sum::<f64>()))
        .fold(
            (0, f64::INFINITY),
            |best, (i, w)| if w < best.1 { (i, w) } else { best },
        );
    let mut e = vec![0.0; m];
    e[weakest.0] = 1.0;
    let mut dummy = vec![0.0; k];
    sub_projection(basis, &mut e);
    let nw = norm(&e);
    new_direction(basis, &e, nw, &mut dummy).0
}

fn append_column(mat: &DenseMatrix, col: &[f64]) -> DenseMatrix {
    let k = mat.cols();
    DenseMatrix::from_fn(
        mat.rows(),
        k + 1,
        |i, j| if j < k { mat[(i, j)] } else { col[i] },
    )
}

/// Bases and coefficient vectors of the augmented middle problem.
struct Augmented {
    q: DenseMatrix,
    p: DenseMatrix,
    u: Vec<f64>,
    v: Vec<f64>,
    grew_q: bool,
    grew_p: bool,
}

/// Extends the bases with the new directions of `b` and `c`. When only `c`
/// brings a new direction, `Q` gets an arbitrary orthogonal column so the
/// middle matrix stays square; returns `None` in that case if `Q` is already
/// square.
fn augment(q: &DenseMatrix, p: &DenseMatrix, b: &[f64], c: &[f64]) -> Result<Option<Augmented>> {
    let pr = project(q, p, b, c)?;
    let grow_q = pr.delta > AUGMENT_TOL * norm(b);
    let grow_p = pr.gamma > AUGMENT_TOL * norm(c);
    let mut u = pr.bhat.clone();
    let mut v = pr.chat.clone();
    let (mut qa, mut pa) = (q.clone(), p.clone());
    if grow_q {
        let (w, len) = new_direction(q, &pr.bperp, pr.delta, &mut u);
        qa = append_column(q, &w);
        u.push(len);
    }
    if grow_p {
        let (w, len) = new_direction(p, &pr.cperp, pr.gamma, &mut v);
        pa = append_column(p, &w);
        v.push(len);
        if !grow_q {
            if q.rows() == q.cols() {
                return Ok(None);
            }
            qa = append_column(q, &completion(q));
            u.push(0.0);
        }
    }
    Ok(Some(Augmented {
        q: qa,
        p: pa,
        u,
        v,
        grew_q: grow_q,
        grew_p: grow_p,
    }))
}

/// Band of `b` padded with zeros to shape `rows × cols`.
fn padded(b: &BidiagonalMatrix, rows: usize, cols: usize) -> Result<BidiagonalMatrix> {
    let t = rows.min(cols);
    let mut alphas = b.alphas.clone();
    let mut betas = b.betas.clone();
    alphas.resize(t, 0.0);
    betas.resize(t.saturating_sub(1), 0.0);
    BidiagonalMatrix::new(rows, cols, alphas, betas)
}

/// Index with the smallest `|αᵢ|`, ties going to the largest index.
pub fn deflation_index(b: &BidiagonalMatrix) -> usize {
    let mut best = 0;
    let mut best_a = f64::INFINITY;
    for (i, a) in b.alphas.iter().enumerate() {
        if a.abs() <= best_a {
            best = i;
            best_a = a.abs();
        }
    }
    best
}

/// Order-(k−1) band from an order-k band by dropping `α_d`.
#[derive(Debug, Clone)]
pub struct Deflation {
    pub b: BidiagonalMatrix,
    pub index: usize,
    /// Row rotations, in order-k indices; the last row is dropped afterwards.
    pub left: Vec<GivensRotation>,
    /// Column rotations, in order-k indices; column `index` is dropped afterwards.
    pub right: Vec<GivensRotation>,
    /// Frobenius norm removed, `|α_d|`.
    pub lost: f64,
}

/// Zeroes the smallest diagonal entry, chases `β_{d−1}` up and out of
/// column `d` with column rotations, then deletes that (now empty) column.
/// Uses at most `k−1` rotations in total.
pub fn deflate(b: &BidiagonalMatrix) -> Result<Deflation> {
    let d = deflation_index(b);
    let lost = b.alphas[d].abs();
    let mut work = b.clone();
    work.alphas[d] = 0.0;
    let mut right = Vec::new();
    if d > 0 {
        let mut fill = work.betas[d - 1];
        work.betas[d - 1] = 0.0;
        for k in (0..d).rev() {
            if fill == 0.0 {
                break;
            }
            let (c, s) = givens(fill, work.alphas[k])?;
            work.alphas[k] = s * fill + c * work.alphas[k];
            if k > 0 {
                let above = work.betas[k - 1];
                fill = -s * above;
                work.betas[k - 1] = c * above;
            } else {
                fill = 0.0;
            }
            right.push(GivensRotation {
                side: Side::Right,
                i: d,
                j: k,
                c,
                s,
            });
        }
    }
    let (nb, left) = delete_index(&work, d)?;
    Ok(Deflation {
        b: nb,
        index: d,
        left,
        right,
        lost,
    })
}

/// Deletes column `d` of a square band of order `k` and restores upper
/// bidiagonal form on the first `k−1` rows with at most `k−1−d` row
/// rotations. Returns the order-(k−1) band and the rotations (in
/// order-k row indices).
pub fn delete_index(
    b: &BidiagonalMatrix,
    d: usize,
) -> Result<(BidiagonalMatrix, Vec<GivensRotation>)> {
    let k = b.order();
    if b.m != b.n || d >= k || k < 2 {
        return Err(Error::InvalidArgument(format!(
            "cannot delete index {d} from order {k}"
        )));
    }
    let r = k - 1;
    let mut diag = vec![0.0; r];
    let mut sup = vec![0.0; r];
    let mut sub = vec![0.0; r];
    for j in 0..r {
        if j < d {
            diag[j] = b.alphas[j];
            if j + 1 < d {
                sup[j] = b.betas[j];
            }
        } else {
            diag[j] = b.betas[j];
            sub[j] = b.alphas[j + 1];
        }
    }
    let mut rots = Vec::new();
    for j in d..r {
        let a = sub[j];
        if a == 0.0 {
            continue;
        }
        let (c, s) = givens(a, diag[j])?;
        let (x0, y0, y1) = (a, diag[j], sup[j]);
        let x1 = if j + 1 < r { diag[j + 1] } else { 0.0 };
        debug_assert!((c * x0 - s * y0).abs() <= 1e-12 * a.abs().max(y0.abs()));
        diag[j] = s * x0 + c * y0;
        sup[j] = s * x1 + c * y1;
        if j + 1 < r {
            diag[j + 1] = c * x1 - s * y1;
        }
        sub[j] = 0.0;
        rots.push(GivensRotation {
            side: Side::Left,
            i: j + 1,
            j,
            c,
            s,
        });
    }
    sup.truncate(r - 1);
    Ok((BidiagonalMatrix::new(r, r, diag, sup)?, rots))
}

/// Product of a rotation log as the k×k matrix that, multiplied on the
/// right of a basis, applies the log to its columns.
fn rotation_matrix(rots: &[GivensRotation], k: usize) -> Result<DenseMatrix> {
    apply_rotations(&DenseMatrix::identity(k, k), rots, Side::Right, false)
}

/// Counters from the most recent update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateStats {
    pub rotations: usize,
    pub mults: u64,
    pub grew_q: bool,
    pub grew_p: bool,
    pub deleted: Option<usize>,
    pub reorthogonalized: bool,
}

#[derive(Debug, Clone)]
pub struct TrackedFactorization {
    q: DenseMatrix,
    p: DenseMatrix,
    b: BidiagonalMatrix,
    update_count: u64,
    drift_q: f64,
    drift_p: f64,
    policy: ReorthPolicy,
    last_check: f64,
    drift_calls: u64,
    reorth_count: u64,
    last: UpdateStats,
}

/// Tracker for an m×n stream holding `Q = I(:, 1:r)`, `P = I(:, 1:r)`, `B = 0`.
pub fn track_init(m: usize, n: usize, r: usize) -> Result<TrackedFactorization> {
    TrackedFactorization::new(m, n, r)
}

impl TrackedFactorization {
    pub fn new(m: usize, n: usize, r: usize) -> Result<Self> {
        if r == 0 || r > m.min(n) {
            return Err(Error::InvalidArgument(format!(
                "rank {r} outside 1..={}",
                m.min(n)
            )));
        }
        Ok(Self {
            q: DenseMatrix::identity(m, r),
            p: DenseMatrix::identity(n, r),
            b: BidiagonalMatrix::zeros(r, r),
            update_count: 0,
            drift_q: 0.0,
            drift_p: 0.0,
            policy: ReorthPolicy::default(),
            last_check: 0.0,
            drift_calls: 0,
            reorth_count: 0,
            last: UpdateStats::default(),
        })
    }

    pub fn with_policy(mut self, policy: ReorthPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn set_policy(&mut self, policy: ReorthPolicy) {
        self.policy = policy;
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.q.rows(), self.p.rows())
    }

    pub fn rank(&self) -> usize {
        self.b.order()
    }

    pub fn q(&self) -> &DenseMatrix {
        &self.q
    }

    pub fn p(&self) -> &DenseMatrix {
        &self.p
    }

    pub fn b(&self) -> &BidiagonalMatrix {
        &self.b
    }

    pub fn update_count(&self) -> u64 {
        self.update_count
    }

    pub fn reorth_count(&self) -> u64 {
        self.reorth_count
    }

    pub fn policy(&self) -> ReorthPolicy {
        self.policy
    }

    /// Most recent drift estimates `(Q, P)`.
    pub fn drift(&self) -> (f64, f64) {
        (self.drift_q, self.drift_p)
    }

    pub fn last_stats(&self) -> UpdateStats {
        self.last
    }

    pub fn project(&self, b: &[f64], c: &[f64]) -> Result<Projection> {
        project(&self.q, &self.p, b, c)
    }

    /// `Q B Pᵀ` as a dense matrix.
    pub fn represented(&self) -> DenseMatrix {
        compose(&self.q, &self.b, &self.p)
    }

    /// `|frob_a − ‖B‖_F|`.
    pub fn residual(&self, frob_a: f64) -> f64 {
        (frob_a - self.b.frob_norm()).abs()
    }

    /// Applies one event. On error the tracker is left unchanged.
    pub fn update(&mut self, ev: &UpdateEvent) -> Result<()> {
        let (m, n) = self.shape();
        let r = self.rank();
        let (bv, cv) = ev.vectors(m, n)?;
        let mut stats = UpdateStats::default();
        let (q, b, p) = match augment(&self.q, &self.p, &bv, &cv)? {
            None => {
                // Q is square, so only a dense reduction of the wide middle matrix applies.
                let (pr_b, pr_c) = (self.q.tmatvec(&bv), split(&self.p, &cv));
                let gamma = norm(&pr_c.1);
                let mut v = pr_c.0;
                let (w, len) = new_direction(&self.p, &pr_c.1, gamma, &mut v);
                v.push(len);
                let pa = append_column(&self.p, &w);
                let mut mid = padded(&self.b, r, r + 1)?.to_dense();
                mid.add_outer(1.0, &pr_b, &v);
                let red = bidiagonalize_dense(&mid);
                stats.mults = red.mults;
                stats.grew_p = true;
                let q = self.q.matmul(red.q.matrix());
                let p = pa.matmul(&red.p.matrix().leading_columns(r));
                let band = BidiagonalMatrix::new(r, r, red.b.alphas, red.b.betas)?;
                (q, band, p)
            }
            Some(aug) => {
                let (kq, kp) = (aug.q.cols(), aug.p.cols());
                stats.grew_q = aug.grew_q;
                stats.grew_p = aug.grew_p;
                let mid = padded(&self.b, kq, kp)?;
                let out = bgu_update(&mid, &aug.u, &aug.v)?;
                stats.rotations = out.audit.rotations;
                stats.mults = out.audit.mult_counter;
                if kq == r + 1 && kp == r + 1 {
                    let def = deflate(&out.b)?;
                    stats.rotations += def.left.len() + def.right.len();
                    stats.deleted = Some(def.index);
                    let mut left = out.left;
                    left.extend(def.left);
                    let mut right = out.right;
                    right.extend(def.right);
                    let gl = rotation_matrix(&left, kq)?.leading_columns(r);
                    let keep: Vec<usize> = (0..kp).filter(|&j| j != def.index).collect();
                    let gr = rotation_matrix(&right, kp)?.select_columns(&keep);
                    (aug.q.matmul(&gl), def.b, aug.p.matmul(&gr))
                } else {
                    let gl = rotation_matrix(&out.left, kq)?.leading_columns(r);
                    let gr = rotation_matrix(&out.right, kp)?;
                    let band = BidiagonalMatrix::new(r, r, out.b.alphas, out.b.betas)?;
                    (aug.q.matmul(&gl), band, aug.p.matmul(&gr))
                }
            }
        };
        if !b.is_finite() || !q.is_finite() || !p.is_finite() {
            return Err(Error::NonFinite {
                step: self.update_count as usize,
            });
        }
        self.q = q;
        self.p = p;
        self.b = b;
        self.update_count += 1;
        stats.reorthogonalized = self.apply_policy()?;
        self.last = stats;
        Ok(())
    }

    fn apply_policy(&mut self) -> Result<bool> {
        match self.policy {
            ReorthPolicy::Never => Ok(false),
            ReorthPolicy::EveryK(k) => {
                if self.update_count.is_multiple_of(k) {
                    self.reorthogonalize()?;
                    Ok(true)
                } else {
                    Ok(false)
                }
            }
            ReorthPolicy::Adaptive(threshold) => {
                let before = self.last_check;
                let (dq, dp) = self.drift_check();
                let now = dq.max(dp);
                if now > threshold || (now > DOUBLING_FLOOR && now > 2.0 * before) {
                    self.reorthogonalize()?;
                    Ok(true)
                } else {
                    Ok(false)
                }
            }
        }
    }

    /// Estimates `‖QᵀQ − I‖_F` and `‖PᵀP − I‖_F` on a random subset of
    /// `min(r, 32)` columns, exactly on every 64th call.
    pub fn drift_check(&mut self) -> (f64, f64) {
        let r = self.rank();
        self.drift_calls += 1;
        let full = r <= DRIFT_SUBSET || self.drift_calls.is_multiple_of(FULL_CHECK_EVERY);
        let (dq, dp) = if full {
            (self.q.orthogonality_defect(), self.p.orthogonality_defect())
        } else {
            let mut rng = synth::rng(self.drift_calls);
            let idx = sample(&mut rng, r, DRIFT_SUBSET).into_vec();
            (
                self.q.select_columns(&idx).orthogonality_defect(),
                self.p.select_columns(&idx).orthogonality_defect(),
            )
        };
        self.drift_q = dq;
        self.drift_p = dp;
        self.last_check = dq.max(dp);
        (dq, dp)
    }

    /// Replaces `Q`, `P` by the orthonormal factors of their QR
    /// decompositions and folds the triangular factors into the band.
    pub fn reorthogonalize(&mut self) -> Result<()> {
        let r = self.rank();
        let (qo, rq, kq) = self.q.thin_qr(0.0);
        let (po, rp, kp) = self.p.thin_qr(0.0);
        if kq < r || kp < r {
            return Err(Error::Singular(kq.min(kp)));
        }
        let mid = rq.matmul(&self.b.to_dense()).matmul(&rp.transpose());
        let red = bidiagonalize_dense(&mid);
        let q = qo.matmul(red.q.matrix());
        let p = po.matmul(red.p.matrix());
        if !q.is_finite() || !p.is_finite() || !red.b.is_finite() {
            return Err(Error::NonFinite {
                step: self.update_count as usize,
            });
        }
        self.q = q;
        self.p = p;
        self.b = red.b;
        self.drift_q = self.q.orthogonality_defect();
        self.drift_p = self.p.orthogonality_defect();
        self.last_check = self.drift_q.max(self.drift_p);
        self.reorth_count += 1;
        Ok(())
    }

    /// Binary snapshot: `m, n, r, update_count` (u64), `Q` and `P`
    /// column-major, the band, then drift and policy counters, all
    /// little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let (m, n) = self.shape();
        let r = self.rank();
        let mut out = Vec::with_capacity(8 * (8 + (m + n) * r + 2 * r + 4));
        for v in [m as u64, n as u64, r as u64, self.update_count] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for mat in [&self.q, &self.p] {
            for j in 0..r {
                for i in 0..mat.rows() {
                    out.extend_from_slice(&mat[(i, j)].to_le_bytes());
                }
            }
        }
        for v in self.b.alphas.iter().chain(&self.b.betas) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let (tag, param) = match self.policy {
            ReorthPolicy::Never => (0u64, 0u64),
            ReorthPolicy::EveryK(k) => (1, k),
            ReorthPolicy::Adaptive(t) => (2, t.to_bits()),
        };
        for v in [tag, param, self.drift_calls, self.reorth_count] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in [self.drift_q, self.drift_p, self.last_check] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: &str| Error::Parse {
            line: 0,
            msg: msg.to_string(),
        };
        let mut words = bytes
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes")));
        if !bytes.len().is_multiple_of(8) || bytes.len() < 32 {
            return Err(bad("truncated tracker snapshot"));
        }
        let mut next = || {
            words
                .next()
                .ok_or_else(|| bad("truncated tracker snapshot"))
        };
        let (m, n, r, count) = (
            next()? as usize,
            next()? as usize,
            next()? as usize,
            next()?,
        );
        if r == 0 || r > m.min(n) {
            return Err(bad("inconsistent tracker header"));
        }
        let expected = 4 + (m + n) * r + 2 * r - 1 + 4 + 3;
        if bytes.len() / 8 != expected {
            return Err(bad("snapshot length does not match its header"));
        }
        let mut read_mat = |rows: usize| -> Result<DenseMatrix> {
            let mut mat = DenseMatrix::zeros(rows, r);
            for j in 0..r {
                for i in 0..rows {
                    mat[(i, j)] = f64::from_bits(next()?);
                }
            }
            Ok(mat)
        };
        let q = read_mat(m)?;
        let p = read_mat(n)?;
        let alphas = (0..r)
            .map(|_| next().map(f64::from_bits))
            .collect::<Result<Vec<_>>>()?;
        let betas = (0..r - 1)
            .map(|_| next().map(f64::from_bits))
            .collect::<Result<Vec<_>>>()?;
        let (tag, param, drift_calls, reorth_count) = (next()?, next()?, next()?, next()?);
        let policy = match tag {
            0 => ReorthPolicy::Never,
            1 if param > 0 => ReorthPolicy::EveryK(param),
            2 => ReorthPolicy::Adaptive(f64::from_bits(param)),
            _ => return Err(bad("unknown policy tag")),
        };
        let (drift_q, drift_p, last_check) = (
            f64::from_bits(next()?),
            f64::from_bits(next()?),
            f64::from_bits(next()?),
        );
        Ok(Self {
            q,
            p,
            b: BidiagonalMatrix::new(r, r, alphas, betas)?,
            update_count: count,
            drift_q,
            drift_p,
            policy,
            last_check,
            drift_calls,
            reorth_count,
            last: UpdateStats::default(),
        })
    }
}

pub fn track_update(tracker: &mut TrackedFactorization, ev: &UpdateEvent) -> Result<()> {
    tracker.update(ev)
}

/// Running `‖A‖_F` for a stream of sparse triples, from the exact increment
/// `2θ·A(i,j) + θ²`.
#[derive(Debug, Clone, Default)]
pub struct FrobeniusAccumulator {
    entries: HashMap<(usize, usize), f64>,
    sq: f64,
}

impl FrobeniusAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, i: usize, j: usize, theta: f64) {
        let e = self.entries.entry((i, j)).or_insert(0.0);
        self.sq += 2.0 * theta * *e + theta * theta;
        *e += theta;
        self.sq = self.sq.max(0.0);
    }

    pub fn norm(&self) -> f64 {
        self.sq.sqrt()
    }

    /// Sum of squares recomputed from the stored entries.
    pub fn exact_norm(&self) -> f64 {
        self.entries.values().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Rank-r incremental SVD `U diag(σ) Vᵀ`, resolving the augmented middle
/// matrix with a full SVD. Kept as a comparison baseline.
#[derive(Debug, Clone)]
pub struct IncrementalSvd {
    u: DenseMatrix,
    sigma: Vec<f64>,
    v: DenseMatrix,
}

impl IncrementalSvd {
    pub fn new(m: usize, n: usize, r: usize) -> Result<Self> {
        if r == 0 || r > m.min(n) {
            return Err(Error::InvalidArgument(format!(
                "rank {r} outside 1..={}",
                m.min(n)
            )));
        }
        Ok(Self {
            u: DenseMatrix::identity(m, r),
            sigma: vec![0.0; r],
            v: DenseMatrix::identity(n, r),
        })
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn represented(&self) -> DenseMatrix {
        let diag = BidiagonalMatrix::new(
            self.sigma.len(),
            self.sigma.len(),
            self.sigma.clone(),
            vec![0.0; self.sigma.len() - 1],
        )
        .expect("square diagonal");
        compose(&self.u, &diag, &self.v)
    }

    pub fn update(&mut self, ev: &UpdateEvent) -> Result<()> {
        let (m, n) = (self.u.rows(), self.v.rows());
        let r = self.sigma.len();
        let (bv, cv) = ev.vectors(m, n)?;
        let (qa, pa, u, v) = match augment(&self.u, &self.v, &bv, &cv)? {
            Some(a) => (a.q, a.p, a.u, a.v),
            None => {
                let (coef, perp) = split(&self.v, &cv);
                let gamma = norm(&perp);
                let mut v = coef;
                let (w, len) = new_direction(&self.v, &perp, gamma, &mut v);
                v.push(len);
                (
                    self.u.clone(),
                    append_column(&self.v, &w),
                    self.u.tmatvec(&bv),
                    v,
                )
            }
        };
        let (kq, kp) = (qa.cols(), pa.cols());
        let mut mid = DenseMatrix::zeros(kq, kp);
        for (i, s) in self.sigma.iter().enumerate() {
            mid[(i, i)] = *s;
        }
        mid.add_outer(1.0, &u, &v);
        let svd = jacobi_svd(&mid, DEFAULT_TOL)?;
        self.u = qa.matmul(&svd.u.matrix().leading_columns(r));
        self.v = pa.matmul(&svd.v.matrix().leading_columns(r));
        self.sigma = svd.sigma[..r].to_vec();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{gaussian_bidiagonal, gaussian_vector};

    #[test]
    fn init_is_zero() {
        let t = track_init(4, 4, 2).unwrap();
        assert_eq!(t.q(), &DenseMatrix::identity(4, 2));
        assert_eq!(t.b().frob_norm(), 0.0);
        assert_eq!(t.represented().frob_norm(), 0.0);
        assert!(track_init(3, 5, 4).is_err());
        assert!(track_init(3, 5, 0).is_err());
    }

    #[test]
    fn single_event_captured() {
        let mut t = track_init(10, 8, 3).unwrap();
        let b = gaussian_vector(10, 1);
        let c = gaussian_vector(8, 2);
        t.update(&UpdateEvent::Dense {
            b: b.clone(),
            c: c.clone(),
        })
        .unwrap();
        let expect = norm(&b) * norm(&c);
        assert!((t.b().frob_norm() - expect).abs() <= 1e-10 * expect);
        let mut a = DenseMatrix::zeros(10, 8);
        a.add_outer(1.0, &b, &c);
        assert!(t.represented().sub(&a).frob_norm() <= 1e-12 * expect);
    }

    #[test]
    fn projection_splits() {
        let q = crate::synth::orthonormal_columns(12, 4, 3);
        let p = crate::synth::orthonormal_columns(9, 4, 4);
        let b = gaussian_vector(12, 5);
        let c = p.matvec(&[1.0, 2.0, 0.0, -1.0]);
        let pr = project(&q, &p, &b, &c).unwrap();
        let back: Vec<f64> = q
            .matvec(&pr.bhat)
            .iter()
            .zip(&pr.bperp)
            .map(|(x, y)| x + y)
            .collect();
        assert!(back
            .iter()
            .zip(&b)
            .all(|(x, y)| (x - y).abs() <= 1e-12 * norm(&b)));
        assert!(q
            .tmatvec(&pr.bperp)
            .iter()
            .all(|v| v.abs() <= 1e-10 * norm(&b)));
        assert!(pr.gamma <= 1e-12 * norm(&c));
    }

    #[test]
    fn deletion_keeps_other_columns() {
        let b = gaussian_bidiagonal(6, 6, 7);
        for d in 0..6 {
            let (nb, rots) = delete_index(&b, d).unwrap();
            assert!(rots.len() <= 5 - d);
            let mut full = b.to_dense();
            for i in 0..6 {
                full[(i, d)] = 0.0;
            }
            let keep: Vec<usize> = (0..6).filter(|&j| j != d).collect();
            let cut = full.select_columns(&keep);
            let rotated = apply_rotations(&cut, &rots, Side::Left, false).unwrap();
            for j in 0..5 {
                assert!(rotated[(5, j)].abs() < 1e-14);
            }
            let top = DenseMatrix::from_fn(5, 5, |i, j| rotated[(i, j)]);
            assert!(top.sub(&nb.to_dense()).max_abs() < 1e-13);
        }
    }

    #[test]
    fn deflation_tie_goes_to_last() {
        let b = BidiagonalMatrix::new(3, 3, vec![1.0, 0.0, 0.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(deflation_index(&b), 2);
    }

    #[test]
    fn deflation_loses_only_the_dropped_diagonal() {
        let mut b = gaussian_bidiagonal(7, 7, 3);
        b.alphas[4] = 1e-3;
        let def = deflate(&b).unwrap();
        assert_eq!(def.index, 4);
        assert!(def.left.len() + def.right.len() <= 6);
        let mut full = b.to_dense();
        full[(4, 4)] = 0.0;
        let t = apply_rotations(&full, &def.left, Side::Left, false).unwrap();
        let t = apply_rotations(&t, &def.right, Side::Right, false).unwrap();
        for i in 0..7 {
            assert!(t[(i, 4)].abs() < 1e-14);
        }
        let keep: Vec<usize> = (0..7).filter(|&j| j != 4).collect();
        let cut = t.select_columns(&keep);
        assert!(cut.row(6).iter().all(|v| v.abs() < 1e-14));
        let top = DenseMatrix::from_fn(6, 6, |i, j| cut[(i, j)]);
        assert!(top.sub(&def.b.to_dense()).max_abs() < 1e-13);
        let lost = (b.frob_norm_sq() - def.b.frob_norm_sq()).sqrt();
        assert!((lost - 1e-3).abs() < 1e-10);
    }

    #[test]
    fn policy_parsing() {
        assert_eq!(
            "never".parse::<ReorthPolicy>().unwrap(),
            ReorthPolicy::Never
        );
        assert_eq!(
            "every:5".parse::<ReorthPolicy>().unwrap(),
            ReorthPolicy::EveryK(5)
        );
        assert_eq!(
            "adaptive".parse::<ReorthPolicy>().unwrap(),
            ReorthPolicy::Adaptive(1e-8)
        );
        assert!("every:0".parse::<ReorthPolicy>().is_err());
        assert!("sometimes".parse::<ReorthPolicy>().is_err());
    }

    #[test]
    fn bad_event_leaves_tracker() {
        let mut t = track_init(5, 5, 2).unwrap();
        t.update(&UpdateEvent::Sparse {
            i: 1,
            j: 2,
            theta: 1.0,
        })
        .unwrap();
        let before = t.to_bytes();
        assert!(t
            .update(&UpdateEvent::Sparse {
                i: 7,
                j: 0,
                theta: 1.0
            })
            .is_err());
        assert!(t
            .update(&UpdateEvent::Sparse {
                i: 0,
                j: 0,
                theta: f64::NAN
            })
            .is_err());
        assert_eq!(t.to_bytes(), before);
    }

    #[test]
    fn snapshot_round_trip() {
        let mut t = track_init(7, 6, 3)
            .unwrap()
            .with_policy(ReorthPolicy::EveryK(2));
        for k in 0..5 {
            t.update(&UpdateEvent::Sparse {
                i: k,
                j: (2 * k) % 6,
                theta: 1.0 + k as f64,
            })
            .unwrap();
        }
        let bytes = t.to_bytes();
        let back = TrackedFactorization::from_bytes(&bytes).unwrap();
        assert_eq!(back.to_bytes(), bytes);
        assert_eq!(back.policy(), ReorthPolicy::EveryK(2));
        assert!(TrackedFactorization::from_bytes(&bytes[..bytes.len() - 8]).is_err());
    }

    #[test]
    fn square_left_basis_uses_dense_path() {
        let mut t = track_init(3, 6, 3).unwrap();
        let mut a = DenseMatrix::zeros(3, 6);
        for k in 0..6 {
            let b = gaussian_vector(3, k);
            let c = gaussian_vector(6, 100 + k);
            a.add_outer(1.0, &b, &c);
            t.update(&UpdateEvent::Dense { b, c }).unwrap();
        }
        assert!(t.represented().sub(&a).frob_norm() <= 1e-10 * a.frob_norm());
    }

    #[test]
    fn frobenius_accumulator() {
        let mut acc = FrobeniusAccumulator::new();
        acc.add(0, 1, 2.0);
        acc.add(0, 1, -1.0);
        acc.add(3, 3, 2.0);
        assert!((acc.norm() - 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(acc.norm(), acc.exact_norm());
    }
}
