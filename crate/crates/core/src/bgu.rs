//! Givens-rotation update of a bidiagonal matrix under a rank-1 change.
//!
//! `B + b cᵀ` is reduced back to upper bidiagonal form with plane rotations
//! that only ever touch a constant-size window of a banded workspace.
//!
//! Schedule (0-based, `m ≥ n`):
//!
//! 1. Spike: rotate rows `(j−1, j)` for `j = m−1, …, n` to fold `b[n..]`
//!    into `b[n−1]`. Only the last rotation meets the band, leaving one
//!    entry at `(n, n−1)`.
//! 2. For `k = n−2, …, 0`: fold `b[k+1]` into `b[k]` with a row rotation,
//!    then (for `k ≥ 1`) `c[k+1]` into `c[k]` with a column rotation,
//!    chasing every bulge down and off the band after each rotation.
//!    Column 0 is never rotated, so the first column of `P` stays `e₁`.
//! 3. The rank-1 part now sits at `(0, 0)` and `(0, 1)`; add it to the band,
//!    which has one subdiagonal and two superdiagonals.
//! 4. Sweep `k = 0, 1, …`: clear `(k+1, k)` and then `(k, k+3)`, `(k, k+2)`,
//!    chasing each bulge before the next.
//!
//! A bulge at `(i, i−2)` is removed by rotating rows `(i−1, i)`, a bulge at
//! `(i, i+3)` by rotating columns `(i+2, i+3)`.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{BidiagonalMatrix, DenseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// Plane rotation acting on rows (left) or columns (right) `i` and `j`:
/// `xᵢ ← c xᵢ − s xⱼ`, `xⱼ ← s xᵢ + c xⱼ`. A record with `i == j` is a
/// reflection `xᵢ ← c xᵢ` with `c = −1`, used to make the band nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GivensRotation {
    pub side: Side,
    pub i: usize,
    pub j: usize,
    pub c: f64,
    pub s: f64,
}

impl GivensRotation {
    pub fn is_sign_flip(&self) -> bool {
        self.i == self.j
    }
}

/// `(c, s)` with `c·gi − s·gj = 0` and `s·gi + c·gj = √(gi² + gj²)`.
pub fn givens(gi: f64, gj: f64) -> Result<(f64, f64)> {
    if !gi.is_finite() || !gj.is_finite() {
        return Err(Error::NonFinite { step: 0 });
    }
    let r = gi.hypot(gj);
    if r == 0.0 {
        return Ok((1.0, 0.0));
    }
    Ok((gj / r, gi / r))
}

/// Counters collected by [`bgu_update`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct BguAudit {
    /// Plane rotations, excluding sign flips.
    pub rotations: usize,
    pub spike_rotations: usize,
    pub phase1_rotations: usize,
    pub phase2_rotations: usize,
    pub sign_flips: usize,
    /// Entries read and written by the rotations: two per column (or row)
    /// inside each rotation's window.
    pub mult_counter: u64,
    /// Widest window, in entries per row or column, including the update vector.
    pub max_window: usize,
    /// Set when the update already fit inside the band.
    pub early_exit: bool,
}

#[derive(Debug, Clone)]
pub struct BguOutput {
    pub b: BidiagonalMatrix,
    pub left: Vec<GivensRotation>,
    pub right: Vec<GivensRotation>,
    pub audit: BguAudit,
}

/// Band offsets `j − i` kept per row: one bulge slot below, the subdiagonal,
/// the diagonal, two superdiagonals and one bulge slot above.
const LOW: isize = -2;
const HIGH: isize = 3;
const WIDTH: usize = (HIGH - LOW + 1) as usize;

struct Workspace {
    n: usize,
    rows: usize,
    band: Vec<[f64; WIDTH]>,
    u: Vec<f64>,
    v: Vec<f64>,
    left: Vec<GivensRotation>,
    right: Vec<GivensRotation>,
    audit: BguAudit,
    pending: BTreeSet<usize>,
}

impl Workspace {
    fn get(&self, i: usize, j: usize) -> f64 {
        if i >= self.rows || j >= self.n {
            return 0.0;
        }
        let d = j as isize - i as isize;
        if (LOW..=HIGH).contains(&d) {
            self.band[i][(d - LOW) as usize]
        } else {
            0.0
        }
    }

    fn set(&mut self, i: usize, j: usize, val: f64) {
        let d = j as isize - i as isize;
        if i >= self.rows || !(LOW..=HIGH).contains(&d) {
            assert!(val == 0.0, "fill outside the workspace at ({i}, {j})");
            return;
        }
        self.band[i][(d - LOW) as usize] = val;
    }

    fn count(&mut self, window: usize) {
        self.audit.mult_counter += 2 * window as u64;
        self.audit.max_window = self.audit.max_window.max(window);
    }

    fn check(&self, c: f64, s: f64) -> Result<()> {
        if c.is_finite() && s.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite {
                step: self.left.len() + self.right.len(),
            })
        }
    }

    /// Rotates rows `kill` and `keep` (adjacent) so that `target` becomes
    /// zero in row `kill`. `target` is a column index, or `None` for the
    /// update vector `u`.
    fn rotate_rows(&mut self, kill: usize, keep: usize, target: Option<usize>) -> Result<bool> {
        let (a, b) = match target {
            Some(j) => (self.get(kill, j), self.get(keep, j)),
            None => (self.u[kill], self.u[keep]),
        };
        if a == 0.0 {
            return Ok(false);
        }
        let (c, s) = givens(a, b)?;
        self.check(c, s)?;
        let lo = kill.min(keep);
        let first = lo.saturating_sub(2);
        let last = (lo + 1 + 3).min(self.n - 1);
        let mut window = 0;
        for j in first..=last {
            let x = self.get(kill, j);
            let y = self.get(keep, j);
            if x == 0.0 && y == 0.0 {
                continue;
            }
            window += 1;
            self.set(kill, j, c * x - s * y);
            self.set(keep, j, s * x + c * y);
        }
        let (x, y) = (self.u[kill], self.u[keep]);
        if x != 0.0 || y != 0.0 {
            window += 1;
            self.u[kill] = c * x - s * y;
            self.u[keep] = s * x + c * y;
        }
        match target {
            Some(j) => self.set(kill, j, 0.0),
            None => self.u[kill] = 0.0,
        }
        self.count(window);
        self.left.push(GivensRotation {
            side: Side::Left,
            i: kill,
            j: keep,
            c,
            s,
        });
        for r in [kill, keep] {
            if r < self.rows {
                self.pending.insert(r);
            }
        }
        Ok(true)
    }

    /// Column counterpart of [`Self::rotate_rows`]; `target` is a row index
    /// or `None` for the update vector `v`.
    fn rotate_cols(&mut self, kill: usize, keep: usize, target: Option<usize>) -> Result<bool> {
        let (a, b) = match target {
            Some(i) => (self.get(i, kill), self.get(i, keep)),
            None => (self.v[kill], self.v[keep]),
        };
        if a == 0.0 {
            return Ok(false);
        }
        let (c, s) = givens(a, b)?;
        self.check(c, s)?;
        let lo = kill.min(keep);
        let first = lo.saturating_sub(3);
        let last = (lo + 1 + 2).min(self.rows - 1);
        let mut window = 0;
        for i in first..=last {
            let x = self.get(i, kill);
            let y = self.get(i, keep);
            if x == 0.0 && y == 0.0 {
                continue;
            }
            window += 1;
            self.set(i, kill, c * x - s * y);
            self.set(i, keep, s * x + c * y);
            self.pending.insert(i);
        }
        let (x, y) = (self.v[kill], self.v[keep]);
        if x != 0.0 || y != 0.0 {
            window += 1;
            self.v[kill] = c * x - s * y;
            self.v[keep] = s * x + c * y;
        }
        match target {
            Some(i) => self.set(i, kill, 0.0),
            None => self.v[kill] = 0.0,
        }
        self.count(window);
        self.right.push(GivensRotation {
            side: Side::Right,
            i: kill,
            j: keep,
            c,
            s,
        });
        Ok(true)
    }

    /// Removes every bulge, topmost first, pushing each off the bottom.
    fn chase(&mut self) -> Result<()> {
        while let Some(i) = self.pending.pop_first() {
            if i >= 2 && self.get(i, i - 2) != 0.0 {
                self.rotate_rows(i, i - 1, Some(i - 2))?;
                self.pending.insert(i);
                continue;
            }
            if i + 3 < self.n && self.get(i, i + 3) != 0.0 {
                self.rotate_cols(i + 3, i + 2, Some(i))?;
                self.pending.insert(i);
            }
        }
        Ok(())
    }

    fn rotations(&self) -> usize {
        self.left.len() + self.right.len()
    }

    fn assert_band(&self, sub: isize, sup: isize) {
        for (i, row) in self.band.iter().enumerate() {
            for (slot, v) in row.iter().enumerate() {
                let d = slot as isize + LOW;
                if *v != 0.0 && (d < -sub || d > sup) {
                    panic!("entry ({i}, {}) outside band", i as isize + d);
                }
            }
        }
    }
}

/// True when `u vᵀ` only touches the diagonal and first superdiagonal.
fn fits_band(u: &[f64], v: &[f64], n: usize) -> bool {
    let rows: Vec<usize> = (0..u.len()).filter(|&i| u[i] != 0.0).collect();
    let cols: Vec<usize> = (0..v.len()).filter(|&j| v[j] != 0.0).collect();
    if rows.is_empty() || cols.is_empty() {
        return true;
    }
    rows.iter()
        .all(|&i| i < n && cols.iter().all(|&j| j == i || j == i + 1))
}

/// Reduces `B + bhat chatᵀ` to upper bidiagonal form.
///
/// Returns the new band and the rotation logs with
/// `(∏ left)(B + bhat chatᵀ)(∏ right)ᵀ = Bnew`, where each product applies
/// its log in order (see [`apply_rotations`]). The band of the result is
/// nonnegative unless the update already fit inside the band, in which case
/// it is added in place with no rotations.
pub fn bgu_update(b: &BidiagonalMatrix, bhat: &[f64], chat: &[f64]) -> Result<BguOutput> {
    let (m, n) = (b.m, b.n);
    if bhat.len() != m || chat.len() != n {
        return Err(Error::Dimension(format!(
            "update vectors of length {} and {} for a {m}x{n} band",
            bhat.len(),
            chat.len()
        )));
    }
    if m < n {
        return Err(Error::Dimension(format!(
            "wide {m}x{n} band is not supported"
        )));
    }
    if bhat
        .iter()
        .chain(chat)
        .chain(&b.alphas)
        .chain(&b.betas)
        .any(|v| !v.is_finite())
    {
        return Err(Error::NonFinite { step: 0 });
    }
    if fits_band(bhat, chat, n) {
        let mut out = b.clone();
        for (i, ui) in bhat.iter().enumerate().take(n) {
            if *ui == 0.0 {
                continue;
            }
            out.alphas[i] += ui * chat[i];
            if i + 1 < n {
                out.betas[i] += ui * chat[i + 1];
            }
        }
        let audit = BguAudit {
            early_exit: true,
            ..BguAudit::default()
        };
        return Ok(BguOutput {
            b: out,
            left: Vec::new(),
            right: Vec::new(),
            audit,
        });
    }

    let rows = m.min(n + 1);
    let mut band = vec![[0.0; WIDTH]; rows];
    for (i, row) in band.iter_mut().enumerate().take(n) {
        row[(0 - LOW) as usize] = b.alphas[i];
        if i + 1 < n {
            row[(1 - LOW) as usize] = b.betas[i];
        }
    }
    let mut ws = Workspace {
        n,
        rows,
        band,
        u: bhat.to_vec(),
        v: chat.to_vec(),
        left: Vec::new(),
        right: Vec::new(),
        audit: BguAudit::default(),
        pending: BTreeSet::new(),
    };

    for j in (n..m).rev() {
        ws.rotate_rows(j, j - 1, None)?;
    }
    ws.chase()?;
    ws.audit.spike_rotations = ws.rotations();

    for k in (0..n.saturating_sub(1)).rev() {
        ws.rotate_rows(k + 1, k, None)?;
        ws.chase()?;
        if k >= 1 {
            ws.rotate_cols(k + 1, k, None)?;
            ws.chase()?;
        }
    }
    ws.audit.phase1_rotations = ws.rotations() - ws.audit.spike_rotations;

    for i in 0..ws.u.len() {
        let ui = ws.u[i];
        if ui == 0.0 {
            continue;
        }
        for j in 0..n {
            let vj = ws.v[j];
            if vj != 0.0 {
                let cur = ws.get(i, j);
                ws.set(i, j, cur + ui * vj);
            }
        }
    }
    ws.u.iter_mut().for_each(|x| *x = 0.0);
    ws.v.iter_mut().for_each(|x| *x = 0.0);
    ws.assert_band(1, 2);

    let before = ws.rotations();
    for k in 0..n {
        if k + 1 < rows {
            ws.rotate_rows(k + 1, k, Some(k))?;
            ws.chase()?;
        }
        if k + 3 < n {
            ws.rotate_cols(k + 3, k + 2, Some(k))?;
            ws.chase()?;
        }
        if k + 2 < n {
            ws.rotate_cols(k + 2, k + 1, Some(k))?;
            ws.chase()?;
        }
    }
    ws.audit.phase2_rotations = ws.rotations() - before;
    ws.assert_band(0, 1);
    ws.audit.rotations = ws.rotations();

    let mut alphas: Vec<f64> = (0..n).map(|i| ws.get(i, i)).collect();
    let mut betas: Vec<f64> = (0..n.saturating_sub(1)).map(|i| ws.get(i, i + 1)).collect();
    for i in 0..n {
        if alphas[i] < 0.0 {
            alphas[i] = -alphas[i];
            if i + 1 < n {
                betas[i] = -betas[i];
            }
            ws.left.push(GivensRotation {
                side: Side::Left,
                i,
                j: i,
                c: -1.0,
                s: 0.0,
            });
            ws.audit.sign_flips += 1;
        }
        if i + 1 < n && betas[i] < 0.0 {
            betas[i] = -betas[i];
            alphas[i + 1] = -alphas[i + 1];
            ws.right.push(GivensRotation {
                side: Side::Right,
                i: i + 1,
                j: i + 1,
                c: -1.0,
                s: 0.0,
            });
            ws.audit.sign_flips += 1;
        }
    }
    let out = BidiagonalMatrix::new(m, n, alphas, betas)?;
    if !out.is_finite() {
        return Err(Error::NonFinite {
            step: ws.rotations(),
        });
    }
    Ok(BguOutput {
        b: out,
        left: ws.left,
        right: ws.right,
        audit: ws.audit,
    })
}

/// Applies a rotation sequence to the rows (`Left`, `M ← G M`) or columns
/// (`Right`, `M ← M Gᵀ`) of `mat`, in log order. With `transpose`, applies
/// the inverse of the whole sequence instead (reverse order, `s → −s`).
pub fn apply_rotations(
    mat: &DenseMatrix,
    rots: &[GivensRotation],
    side: Side,
    transpose: bool,
) -> Result<DenseMatrix> {
    let mut out = mat.clone();
    apply_rotations_in_place(&mut out, rots, side, transpose)?;
    Ok(out)
}

pub fn apply_rotations_in_place(
    mat: &mut DenseMatrix,
    rots: &[GivensRotation],
    side: Side,
    transpose: bool,
) -> Result<()> {
    let limit = match side {
        Side::Left => mat.rows(),
        Side::Right => mat.cols(),
    };
    if let Some(r) = rots.iter().find(|r| r.i >= limit || r.j >= limit) {
        return Err(Error::IndexOutOfRange {
            index: r.i.max(r.j),
            limit,
        });
    }
    let mut one = |g: &GivensRotation| {
        let s = if transpose { -g.s } else { g.s };
        match side {
            Side::Left => rotate_dense_rows(mat, g.i, g.j, g.c, s),
            Side::Right => rotate_dense_cols(mat, g.i, g.j, g.c, s),
        }
    };
    if transpose {
        rots.iter().rev().for_each(&mut one);
    } else {
        rots.iter().for_each(&mut one);
    }
    Ok(())
}

fn rotate_dense_rows(mat: &mut DenseMatrix, i: usize, j: usize, c: f64, s: f64) {
    if i == j {
        mat.row_mut(i).iter_mut().for_each(|x| *x *= c);
        return;
    }
    let n = mat.cols();
    let data = mat.data_mut();
    for k in 0..n {
        let (x, y) = (data[i * n + k], data[j * n + k]);
        data[i * n + k] = c * x - s * y;
        data[j * n + k] = s * x + c * y;
    }
}

fn rotate_dense_cols(mat: &mut DenseMatrix, i: usize, j: usize, c: f64, s: f64) {
    let n = mat.cols();
    let data = mat.data_mut();
    for row in data.chunks_exact_mut(n) {
        if i == j {
            row[i] *= c;
            continue;
        }
        let (x, y) = (row[i], row[j]);
        row[i] = c * x - s * y;
        row[j] = s * x + c * y;
    }
}

/// Accumulates a rotation log into an explicit k×k orthogonal matrix `G`
/// with `G = ∏ Gᵢ` (for `Left`) so that applying the log equals
/// multiplying by `G`.
pub fn accumulate(rots: &[GivensRotation], k: usize) -> Result<DenseMatrix> {
    apply_rotations(&DenseMatrix::identity(k, k), rots, Side::Left, false)
}

/// CSV dump, one rotation per line: `side,i,j,c,s`.
pub fn rotations_csv(left: &[GivensRotation], right: &[GivensRotation]) -> String {
    let mut out = String::from("side,i,j,c,s\n");
    for g in left.iter().chain(right) {
        let side = match g.side {
            Side::Left => "left",
            Side::Right => "right",
        };
        let _ = writeln!(out, "{side},{},{},{:e},{:e}", g.i, g.j, g.c, g.s);
    }
    out
}

/// Reads a dump written by [`rotations_csv`], returning `(left, right)`.
pub fn parse_rotations_csv(text: &str) -> Result<(Vec<GivensRotation>, Vec<GivensRotation>)> {
    let mut left = Vec::new();
    let mut right = Vec::new();
    for (no, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::Parse {
            line: no + 1,
            msg: msg.to_string(),
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(bad("expected side,i,j,c,s"));
        }
        let side = match f[0] {
            "left" => Side::Left,
            "right" => Side::Right,
            _ => return Err(bad("side must be left or right")),
        };
        let g = GivensRotation {
            side,
            i: f[1].parse().map_err(|_| bad("bad index"))?,
            j: f[2].parse().map_err(|_| bad("bad index"))?,
            c: f[3].parse().map_err(|_| bad("bad cosine"))?,
            s: f[4].parse().map_err(|_| bad("bad sine"))?,
        };
        match side {
            Side::Left => left.push(g),
            Side::Right => right.push(g),
        }
    }
    Ok((left, right))
}
