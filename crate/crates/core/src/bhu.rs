//! Householder bidiagonalization of `B + b cᵀ` without fill-in.
//!
//! After `k` left and `l` right reflectors the transformed matrix is held as
//!
//! ```text
//! Qᵀ (B + b cᵀ) P = B − U M⁻¹ Vᵀ,   U = [b  Y  BW],   V = [c  BᵀY  W],
//!
//!     [ −1     0     cᵀW  ]
//! M = [ Yᵀb   ½Tᵀ   YᵀBW  ]
//!     [  0     0     ½R   ]
//! ```
//!
//! where `Q = I − 2 Y T⁻¹ Yᵀ`, `P = I − 2 W R⁻¹ Wᵀ` and `T`, `R` are unit upper
//! triangular with off-diagonals `2 yᵢᵀyⱼ` and `2 wᵢᵀwⱼ`. `B` itself is never
//! modified. The strictly upper parts of `T` and `R` live in the structural
//! zeros of `Y` and `W`, so the state needs `(m + n + 2) k` numbers besides
//! `B`, `b` and `c`.

use crate::error::{Error, Result};
use crate::house::house;
use crate::matrix::{BidiagonalMatrix, DenseMatrix};

#[derive(Debug, Clone)]
pub struct HouseholderCompactState {
    m: usize,
    n: usize,
    b: BidiagonalMatrix,
    bhat: Vec<f64>,
    chat: Vec<f64>,
    /// Column-major m×k_left. Column j holds `T[0..j, j]` in rows `0..j`
    /// and `y_j` from row `j` down.
    y_packed: Vec<f64>,
    /// Column-major n×k_right. Column j holds `R[0..j, j]` in rows `0..j`
    /// and `w_j` from row `j + 1` down; row `j` is unused.
    w_packed: Vec<f64>,
    k_left: usize,
    k_right: usize,
    y_bhat: Vec<f64>,
    chat_w: Vec<f64>,
    /// Row-major k_left × k_right copy of `Yᵀ B W`, when enabled.
    ybw: Option<Vec<Vec<f64>>>,
    alphas: Vec<f64>,
    betas: Vec<f64>,
    steps_done: usize,
    mults: u64,
}

/// Final band and compact factors.
#[derive(Debug, Clone)]
pub struct BhuOutput {
    pub b: BidiagonalMatrix,
    /// m×k_left reflector vectors.
    pub y: DenseMatrix,
    /// n×k_right reflector vectors.
    pub w: DenseMatrix,
    pub t: DenseMatrix,
    pub r: DenseMatrix,
    pub mults: u64,
}

impl HouseholderCompactState {
    /// Starts from `B + bhat chatᵀ` with no reflectors. `B` must have at
    /// least as many rows as columns.
    pub fn new(b: BidiagonalMatrix, bhat: Vec<f64>, chat: Vec<f64>) -> Result<Self> {
        Self::with_cache(b, bhat, chat, true)
    }

    /// As [`Self::new`], choosing whether to keep the `Yᵀ B W` cache.
    pub fn with_cache(
        b: BidiagonalMatrix,
        bhat: Vec<f64>,
        chat: Vec<f64>,
        cache: bool,
    ) -> Result<Self> {
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
        Ok(Self {
            m,
            n,
            b,
            bhat,
            chat,
            y_packed: Vec::new(),
            w_packed: Vec::new(),
            k_left: 0,
            k_right: 0,
            y_bhat: Vec::new(),
            chat_w: Vec::new(),
            ybw: cache.then(Vec::new),
            alphas: Vec::new(),
            betas: Vec::new(),
            steps_done: 0,
            mults: 0,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn k_left(&self) -> usize {
        self.k_left
    }

    pub fn k_right(&self) -> usize {
        self.k_right
    }

    pub fn steps_done(&self) -> usize {
        self.steps_done
    }

    pub fn is_complete(&self) -> bool {
        self.steps_done == self.n
    }

    pub fn band(&self) -> &BidiagonalMatrix {
        &self.b
    }

    pub fn mults(&self) -> u64 {
        self.mults
    }

    /// New diagonal and superdiagonal entries produced so far.
    pub fn new_band(&self) -> (&[f64], &[f64]) {
        (&self.alphas, &self.betas)
    }

    /// Values held by the compact representation: packed `Y/T`, packed
    /// `W/R` and the two cached vectors.
    pub fn aux_storage(&self) -> usize {
        self.y_packed.len() + self.w_packed.len() + self.y_bhat.len() + self.chat_w.len()
    }

    /// Size of the optional `Yᵀ B W` cache.
    pub fn cache_storage(&self) -> usize {
        self.ybw
            .as_ref()
            .map_or(0, |c| c.iter().map(Vec::len).sum())
    }

    fn y(&self, i: usize, j: usize) -> f64 {
        if i >= j {
            self.y_packed[j * self.m + i]
        } else {
            0.0
        }
    }

    fn t(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.y_packed[j * self.m + i],
            std::cmp::Ordering::Equal => 1.0,
            std::cmp::Ordering::Greater => 0.0,
        }
    }

    fn w(&self, i: usize, j: usize) -> f64 {
        if i > j {
            self.w_packed[j * self.n + i]
        } else {
            0.0
        }
    }

    fn r(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.w_packed[j * self.n + i],
            std::cmp::Ordering::Equal => 1.0,
            std::cmp::Ordering::Greater => 0.0,
        }
    }

    fn y_col(&self, j: usize) -> &[f64] {
        &self.y_packed[j * self.m + j..(j + 1) * self.m]
    }

    fn w_col(&self, j: usize) -> &[f64] {
        &self.w_packed[j * self.n + j + 1..(j + 1) * self.n]
    }

    /// `Y z`.
    fn y_times(&mut self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (j, zj) in z.iter().enumerate() {
            if *zj == 0.0 {
                continue;
            }
            let off = j * self.m;
            for (o, y) in out[j..]
                .iter_mut()
                .zip(&self.y_packed[off + j..off + self.m])
            {
                *o += y * zj;
            }
            self.mults += (self.m - j) as u64;
        }
        out
    }

    /// `Yᵀ x`.
    fn y_t_times(&mut self, x: &[f64]) -> Vec<f64> {
        let out: Vec<f64> = (0..self.k_left)
            .map(|j| self.y_col(j).iter().zip(&x[j..]).map(|(a, b)| a * b).sum())
            .collect();
        self.mults += (0..self.k_left).map(|j| (self.m - j) as u64).sum::<u64>();
        out
    }

    /// `W z`.
    fn w_times(&mut self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (j, zj) in z.iter().enumerate() {
            if *zj == 0.0 {
                continue;
            }
            let off = j * self.n;
            for (o, w) in out[j + 1..]
                .iter_mut()
                .zip(&self.w_packed[off + j + 1..off + self.n])
            {
                *o += w * zj;
            }
            self.mults += (self.n - j - 1) as u64;
        }
        out
    }

    /// `Wᵀ x`.
    fn w_t_times(&mut self, x: &[f64]) -> Vec<f64> {
        let out: Vec<f64> = (0..self.k_right)
            .map(|j| {
                self.w_col(j)
                    .iter()
                    .zip(&x[j + 1..])
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        self.mults += (0..self.k_right)
            .map(|j| (self.n - j - 1) as u64)
            .sum::<u64>();
        out
    }

    /// `(Yᵀ B W) z`.
    fn ybw_times(&mut self, z: &[f64]) -> Vec<f64> {
        if let Some(c) = &self.ybw {
            self.mults += (self.k_left * self.k_right) as u64;
            return c
                .iter()
                .map(|row| row.iter().zip(z).map(|(a, b)| a * b).sum())
                .collect();
        }
        let wz = self.w_times(z);
        let bwz = self.b.matvec(&wz);
        self.y_t_times(&bwz)
    }

    /// `(Yᵀ B W)ᵀ z`.
    fn ybw_t_times(&mut self, z: &[f64]) -> Vec<f64> {
        if let Some(c) = &self.ybw {
            self.mults += (self.k_left * self.k_right) as u64;
            let mut out = vec![0.0; self.k_right];
            for (row, zi) in c.iter().zip(z) {
                for (o, v) in out.iter_mut().zip(row) {
                    *o += v * zi;
                }
            }
            return out;
        }
        let yz = self.y_times(z);
        let btyz = self.b.tmatvec(&yz);
        self.w_t_times(&btyz)
    }

    fn split<'a>(&self, v: &'a [f64]) -> (f64, &'a [f64], &'a [f64]) {
        (v[0], &v[1..1 + self.k_left], &v[1 + self.k_left..])
    }

    /// `M⁻¹ rhs` by two triangular solves and one block product.
    pub fn middle_solve(&mut self, rhs: &[f64]) -> Result<Vec<f64>> {
        let (kl, kr) = (self.k_left, self.k_right);
        if rhs.len() != 1 + kl + kr {
            return Err(Error::Dimension(format!(
                "right-hand side of length {}, expected {}",
                rhs.len(),
                1 + kl + kr
            )));
        }
        let (r1, r2, r3) = self.split(rhs);
        let mut z3 = r3.to_vec();
        for i in (0..kr).rev() {
            let s: f64 = (i + 1..kr).map(|j| self.r(i, j) * z3[j]).sum();
            z3[i] -= s;
        }
        for v in &mut z3 {
            *v *= 2.0;
        }
        let z1 = self.chat_w.iter().zip(&z3).map(|(a, b)| a * b).sum::<f64>() - r1;
        let coupling = self.ybw_times(&z3);
        let mut z2: Vec<f64> = (0..kl)
            .map(|i| r2[i] - self.y_bhat[i] * z1 - coupling[i])
            .collect();
        for i in 0..kl {
            let s: f64 = (0..i).map(|j| self.t(j, i) * z2[j]).sum();
            z2[i] -= s;
        }
        for v in &mut z2 {
            *v *= 2.0;
        }
        self.mults += (kl * kl + kr * kr) as u64 / 2 + (kl + kr) as u64 * 2;
        let mut out = Vec::with_capacity(1 + kl + kr);
        out.push(z1);
        out.extend(z2);
        out.extend(z3);
        Ok(out)
    }

    /// `M⁻ᵀ rhs`.
    pub fn middle_solve_transpose(&mut self, rhs: &[f64]) -> Result<Vec<f64>> {
        let (kl, kr) = (self.k_left, self.k_right);
        if rhs.len() != 1 + kl + kr {
            return Err(Error::Dimension(format!(
                "right-hand side of length {}, expected {}",
                rhs.len(),
                1 + kl + kr
            )));
        }
        let (r1, r2, r3) = self.split(rhs);
        let mut z2 = r2.to_vec();
        for i in (0..kl).rev() {
            let s: f64 = (i + 1..kl).map(|j| self.t(i, j) * z2[j]).sum();
            z2[i] -= s;
        }
        for v in &mut z2 {
            *v *= 2.0;
        }
        let z1 = self.y_bhat.iter().zip(&z2).map(|(a, b)| a * b).sum::<f64>() - r1;
        let coupling = self.ybw_t_times(&z2);
        let mut z3: Vec<f64> = (0..kr)
            .map(|i| r3[i] - self.chat_w[i] * z1 - coupling[i])
            .collect();
        for i in 0..kr {
            let s: f64 = (0..i).map(|j| self.r(j, i) * z3[j]).sum();
            z3[i] -= s;
        }
        for v in &mut z3 {
            *v *= 2.0;
        }
        self.mults += (kl * kl + kr * kr) as u64 / 2 + (kl + kr) as u64 * 2;
        let mut out = Vec::with_capacity(1 + kl + kr);
        out.push(z1);
        out.extend(z2);
        out.extend(z3);
        Ok(out)
    }

    /// `Qᵀ (B + b cᵀ) P x` for the current reflectors.
    pub fn apply(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::Dimension(format!(
                "vector of length {}, expected {}",
                x.len(),
                self.n
            )));
        }
        let bx = self.b.matvec(x);
        let mut rhs = vec![self.chat.iter().zip(x).map(|(a, b)| a * b).sum()];
        rhs.extend(self.y_t_times(&bx));
        rhs.extend(self.w_t_times(x));
        let z = self.middle_solve(&rhs)?;
        Ok(self.combine_left(bx, &z))
    }

    /// `B v − b z₁ − Y z₂ − B W z₃`.
    fn combine_left(&mut self, mut out: Vec<f64>, z: &[f64]) -> Vec<f64> {
        let (z1, z2, z3) = self.split(z);
        let (z2, z3) = (z2.to_vec(), z3.to_vec());
        let yz = self.y_times(&z2);
        let wz = self.w_times(&z3);
        let bwz = self.b.matvec(&wz);
        for i in 0..self.m {
            out[i] -= self.bhat[i] * z1 + yz[i] + bwz[i];
        }
        self.mults += self.m as u64;
        out
    }

    /// `Pᵀ (B + b cᵀ)ᵀ Q x`.
    pub fn apply_transpose(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.m {
            return Err(Error::Dimension(format!(
                "vector of length {}, expected {}",
                x.len(),
                self.m
            )));
        }
        let btx = self.b.tmatvec(x);
        let mut rhs = vec![self.bhat.iter().zip(x).map(|(a, b)| a * b).sum()];
        rhs.extend(self.y_t_times(x));
        rhs.extend(self.w_t_times(&btx));
        let z = self.middle_solve_transpose(&rhs)?;
        Ok(self.combine_right(btx, &z))
    }

    /// `Bᵀ v − c z₁ − Bᵀ Y z₂ − W z₃`.
    fn combine_right(&mut self, mut out: Vec<f64>, z: &[f64]) -> Vec<f64> {
        let (z1, z2, z3) = self.split(z);
        let (z2, z3) = (z2.to_vec(), z3.to_vec());
        let yz = self.y_times(&z2);
        let btyz = self.b.tmatvec(&yz);
        let wz = self.w_times(&z3);
        for j in 0..self.n {
            out[j] -= self.chat[j] * z1 + btyz[j] + wz[j];
        }
        self.mults += self.n as u64;
        out
    }

    fn alpha(&self, i: usize) -> f64 {
        self.b.alphas.get(i).copied().unwrap_or(0.0)
    }

    fn beta(&self, i: usize) -> f64 {
        self.b.betas.get(i).copied().unwrap_or(0.0)
    }

    /// Entries `k..m` of column `k` of the current matrix. Valid when `k`
    /// left reflectors have been applied.
    pub fn column(&mut self, k: usize) -> Result<Vec<f64>> {
        if k >= self.n || self.k_left != k {
            return Err(Error::OutOfOrder(format!(
                "column {k} with {} left reflectors",
                self.k_left
            )));
        }
        let mut rhs = vec![self.chat[k]];
        let bk = self.alpha(k);
        let bk1 = if k > 0 { self.beta(k - 1) } else { 0.0 };
        for j in 0..self.k_left {
            let mut v = bk * self.y(k, j);
            if k > 0 {
                v += bk1 * self.y(k - 1, j);
            }
            rhs.push(v);
        }
        for j in 0..self.k_right {
            rhs.push(self.w(k, j));
        }
        let z = self.middle_solve(&rhs)?;
        let mut be = vec![0.0; self.m];
        be[k] = bk;
        if k > 0 {
            be[k - 1] = bk1;
        }
        let full = self.combine_left(be, &z);
        Ok(full[k..].to_vec())
    }

    /// Entries `k+1..n` of row `k`. Valid after the left reflector of step
    /// `k` and before its right reflector.
    pub fn row(&mut self, k: usize) -> Result<Vec<f64>> {
        if k + 1 >= self.n || self.k_left != k + 1 || self.k_right != k {
            return Err(Error::OutOfOrder(format!(
                "row {k} with {} left and {} right reflectors",
                self.k_left, self.k_right
            )));
        }
        let mut rhs = vec![self.bhat[k]];
        for j in 0..self.k_left {
            rhs.push(self.y(k, j));
        }
        let (ak, bk) = (self.alpha(k), self.beta(k));
        for j in 0..self.k_right {
            rhs.push(ak * self.w(k, j) + bk * self.w(k + 1, j));
        }
        let z = self.middle_solve_transpose(&rhs)?;
        let mut bte = vec![0.0; self.n];
        bte[k] = ak;
        if k + 1 < self.n {
            bte[k + 1] = bk;
        }
        let full = self.combine_right(bte, &z);
        Ok(full[k + 1..].to_vec())
    }

    fn push_left(&mut self, y: &[f64]) {
        let k = self.k_left;
        let mut col = vec![0.0; self.m];
        for i in 0..k {
            let d: f64 = self.y_col(i).iter().zip(&y[i..]).map(|(a, b)| a * b).sum();
            col[i] = 2.0 * d;
        }
        col[k..].copy_from_slice(&y[k..]);
        self.mults += (0..k).map(|i| (self.m - i) as u64).sum::<u64>();
        let yb: f64 = y.iter().zip(&self.bhat).map(|(a, b)| a * b).sum();
        self.y_packed.extend_from_slice(&col);
        self.y_bhat.push(yb);
        self.k_left += 1;
        if self.ybw.is_some() {
            let bty = self.b.tmatvec(y);
            let row = self.w_t_times(&bty);
            self.ybw.as_mut().unwrap().push(row);
        }
    }

    fn push_right(&mut self, w: &[f64]) {
        let k = self.k_right;
        let mut col = vec![0.0; self.n];
        for i in 0..k {
            let d: f64 = self
                .w_col(i)
                .iter()
                .zip(&w[i + 1..])
                .map(|(a, b)| a * b)
                .sum();
            col[i] = 2.0 * d;
        }
        col[k + 1..].copy_from_slice(&w[k + 1..]);
        self.mults += (0..k).map(|i| (self.n - i - 1) as u64).sum::<u64>();
        let cw: f64 = w.iter().zip(&self.chat).map(|(a, b)| a * b).sum();
        self.w_packed.extend_from_slice(&col);
        self.chat_w.push(cw);
        self.k_right += 1;
        if self.ybw.is_some() {
            let bw = self.b.matvec(w);
            let col = self.y_t_times(&bw);
            for (row, v) in self.ybw.as_mut().unwrap().iter_mut().zip(col) {
                row.push(v);
            }
        }
    }

    /// One step: the left reflector for column `k`, then the right
    /// reflector for row `k`. Entries that need no reflector (the last
    /// diagonal when square, the last superdiagonal) are read off directly.
    pub fn step(&mut self) -> Result<()> {
        let k = self.steps_done;
        if k >= self.n {
            return Err(Error::OutOfOrder("factorization already complete".into()));
        }
        let col = self.column(k)?;
        if col.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: k });
        }
        if k + 1 < self.n || self.m > self.n {
            let mut full = vec![0.0; self.m];
            full[k..].copy_from_slice(&col);
            let (alpha, y) = house(&full, k)?;
            self.push_left(&y.essential);
            self.alphas.push(alpha);
        } else {
            self.alphas.push(col[0]);
        }
        if k + 1 < self.n {
            let row = self.row(k)?;
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { step: k });
            }
            if k + 2 < self.n {
                let mut full = vec![0.0; self.n];
                full[k + 1..].copy_from_slice(&row);
                let (beta, w) = house(&full, k + 1)?;
                self.push_right(&w.essential);
                self.betas.push(beta);
            } else {
                self.betas.push(row[0]);
            }
        }
        self.steps_done += 1;
        Ok(())
    }

    /// Runs up to `max_steps` further steps (all remaining when `None`).
    pub fn run(&mut self, max_steps: Option<usize>) -> Result<()> {
        let mut budget = max_steps.unwrap_or(usize::MAX);
        while !self.is_complete() && budget > 0 {
            self.step()?;
            budget -= 1;
        }
        Ok(())
    }

    /// Reflector vectors as an explicit m×k_left matrix.
    pub fn y_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.m, self.k_left, |i, j| self.y(i, j))
    }

    pub fn w_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.n, self.k_right, |i, j| self.w(i, j))
    }

    pub fn t_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.k_left, self.k_left, |i, j| self.t(i, j))
    }

    pub fn r_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.k_right, self.k_right, |i, j| self.r(i, j))
    }

    /// `Q = I − 2 Y T⁻¹ Yᵀ` as a dense m×m matrix.
    pub fn left_factor(&self) -> DenseMatrix {
        let mut q = DenseMatrix::identity(self.m, self.m);
        for j in (0..self.k_left).rev() {
            reflect_rows(&mut q, self.y_col(j), j);
        }
        q
    }

    /// `P = I − 2 W R⁻¹ Wᵀ` as a dense n×n matrix.
    pub fn right_factor(&self) -> DenseMatrix {
        let mut p = DenseMatrix::identity(self.n, self.n);
        for j in (0..self.k_right).rev() {
            reflect_rows(&mut p, self.w_col(j), j + 1);
        }
        p
    }

    /// The current matrix `B − U M⁻¹ Vᵀ`, column by column.
    pub fn densify(&mut self) -> Result<DenseMatrix> {
        let mut out = DenseMatrix::zeros(self.m, self.n);
        let mut e = vec![0.0; self.n];
        for j in 0..self.n {
            e[j] = 1.0;
            let c = self.apply(&e)?;
            out.set_column(j, &c);
            e[j] = 0.0;
        }
        Ok(out)
    }

    /// Band produced by a completed run.
    pub fn output(&self) -> Result<BhuOutput> {
        if !self.is_complete() {
            return Err(Error::OutOfOrder(format!(
                "{} of {} steps done",
                self.steps_done, self.n
            )));
        }
        Ok(BhuOutput {
            b: BidiagonalMatrix::new(self.m, self.n, self.alphas.clone(), self.betas.clone())?,
            y: self.y_matrix(),
            w: self.w_matrix(),
            t: self.t_matrix(),
            r: self.r_matrix(),
            mults: self.mults,
        })
    }

    /// Packed little-endian snapshot: header `m, n, k_left, k_right` as
    /// `u64`, then band, `b`, `c`, packed `Y/T`, packed `W/R`, `Yᵀb`,
    /// `cᵀW`, followed by the produced band prefix and the cache flag.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for h in [self.m, self.n, self.k_left, self.k_right] {
            out.extend_from_slice(&(h as u64).to_le_bytes());
        }
        let floats = self
            .b
            .alphas
            .iter()
            .chain(&self.b.betas)
            .chain(&self.bhat)
            .chain(&self.chat)
            .chain(&self.y_packed)
            .chain(&self.w_packed)
            .chain(&self.y_bhat)
            .chain(&self.chat_w);
        for v in floats {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for h in [
            self.steps_done,
            self.alphas.len(),
            self.betas.len(),
            self.ybw.is_some() as usize,
        ] {
            out.extend_from_slice(&(h as u64).to_le_bytes());
        }
        for v in self.alphas.iter().chain(&self.betas) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut rd = Reader { bytes, pos: 0 };
        let m = rd.count()?;
        let n = rd.count()?;
        let kl = rd.count()?;
        let kr = rd.count()?;
        if m == 0 || n == 0 || m < n || kl > n || kr > n {
            return Err(Error::Parse {
                line: 0,
                msg: format!("bad snapshot header {m} {n} {kl} {kr}"),
            });
        }
        let t = n;
        let b = BidiagonalMatrix::new(m, n, rd.floats(t)?, rd.floats(t - 1)?)?;
        let bhat = rd.floats(m)?;
        let chat = rd.floats(n)?;
        let y_packed = rd.floats(m * kl)?;
        let w_packed = rd.floats(n * kr)?;
        let y_bhat = rd.floats(kl)?;
        let chat_w = rd.floats(kr)?;
        let steps_done = rd.count()?;
        let na = rd.count()?;
        let nb = rd.count()?;
        let cache = rd.count()? != 0;
        if na > n || nb > n {
            return Err(Error::Parse {
                line: 0,
                msg: "bad band prefix length".into(),
            });
        }
        let alphas = rd.floats(na)?;
        let betas = rd.floats(nb)?;
        let mut s = Self {
            m,
            n,
            b,
            bhat,
            chat,
            y_packed,
            w_packed,
            k_left: kl,
            k_right: kr,
            y_bhat,
            chat_w,
            ybw: None,
            alphas,
            betas,
            steps_done,
            mults: 0,
        };
        if cache {
            let mut rows = Vec::with_capacity(kl);
            for i in 0..kl {
                let y: Vec<f64> = (0..m).map(|r| s.y(r, i)).collect();
                let bty = s.b.tmatvec(&y);
                rows.push(s.w_t_times(&bty));
            }
            s.ybw = Some(rows);
            s.mults = 0;
        }
        Ok(s)
    }
}

/// `M ← M (I − 2 y yᵀ)` with `y` supported from `offset`.
fn reflect_rows(mat: &mut DenseMatrix, tail: &[f64], offset: usize) {
    for i in 0..mat.rows() {
        let row = &mut mat.row_mut(i)[offset..];
        let d: f64 = row.iter().zip(tail).map(|(a, b)| a * b).sum();
        for (v, t) in row.iter_mut().zip(tail) {
            *v -= 2.0 * d * t;
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take8(&mut self) -> Result<[u8; 8]> {
        let end = self.pos + 8;
        let chunk = self.bytes.get(self.pos..end).ok_or_else(|| Error::Parse {
            line: 0,
            msg: "truncated snapshot".into(),
        })?;
        self.pos = end;
        Ok(chunk.try_into().expect("eight bytes"))
    }

    fn count(&mut self) -> Result<usize> {
        Ok(u64::from_le_bytes(self.take8()?) as usize)
    }

    fn floats(&mut self, k: usize) -> Result<Vec<f64>> {
        (0..k)
            .map(|_| Ok(f64::from_le_bytes(self.take8()?)))
            .collect()
    }
}

/// Runs the full update of `B + bhat chatᵀ`.
pub fn bhu_update(b: &BidiagonalMatrix, bhat: &[f64], chat: &[f64]) -> Result<BhuOutput> {
    let mut s = HouseholderCompactState::new(b.clone(), bhat.to_vec(), chat.to_vec())?;
    s.run(None)?;
    s.output()
}
