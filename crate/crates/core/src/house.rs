//! Householder reflectors with unit-norm vectors, `H = I - 2 y yᵀ`.

use crate::error::{Error, Result};

/// Unit vector defining the reflector `I - tau * y yᵀ` with `tau = 2`.
///
/// `essential` has the full length of the target vector; entries before
/// `offset` are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct HouseholderVector {
    pub essential: Vec<f64>,
    pub offset: usize,
    pub tau: f64,
}

impl HouseholderVector {
    pub fn len(&self) -> usize {
        self.essential.len()
    }

    pub fn is_empty(&self) -> bool {
        self.essential.is_empty()
    }

    /// Nonzero tail of the vector, starting at `offset`.
    pub fn tail(&self) -> &[f64] {
        &self.essential[self.offset..]
    }

    /// Overwrites `x` with `(I - 2yyᵀ) x`.
    pub fn apply(&self, x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.essential.len());
        let o = self.offset;
        let d: f64 = self.essential[o..]
            .iter()
            .zip(&x[o..])
            .map(|(y, v)| y * v)
            .sum();
        let f = self.tau * d;
        for (xi, yi) in x[o..].iter_mut().zip(&self.essential[o..]) {
            *xi -= f * yi;
        }
    }

    /// Explicit reflector matrix, row-major.
    pub fn to_dense(&self) -> crate::matrix::DenseMatrix {
        let n = self.len();
        crate::matrix::DenseMatrix::from_fn(n, n, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            id - self.tau * self.essential[i] * self.essential[j]
        })
    }
}

/// Reflector mapping `a[offset..]` onto a multiple of `e_offset`.
///
/// Returns `(alpha, y)` with `(I - 2yyᵀ) a = [a[..offset], alpha, 0, ...]`.
/// `alpha` takes the sign opposite to `a[offset]`. An all-zero tail gives
/// `y = e_offset` and `alpha = 0`.
pub fn house(a: &[f64], offset: usize) -> Result<(f64, HouseholderVector)> {
    if offset >= a.len() {
        return Err(Error::InvalidArgument(format!(
            "empty reflector slice (offset {offset}, length {})",
            a.len()
        )));
    }
    let tail = &a[offset..];
    let scale = tail.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let mut essential = vec![0.0; a.len()];
    if scale == 0.0 {
        essential[offset] = 1.0;
        return Ok((
            0.0,
            HouseholderVector {
                essential,
                offset,
                tau: 2.0,
            },
        ));
    }
    let norm = scale * tail.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt();
    let alpha = if tail[0] >= 0.0 { -norm } else { norm };
    essential[offset..].copy_from_slice(tail);
    essential[offset] -= alpha;
    let ynorm = essential[offset..]
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    for v in &mut essential[offset..] {
        *v /= ynorm;
    }
    Ok((
        alpha,
        HouseholderVector {
            essential,
            offset,
            tau: 2.0,
        },
    ))
}
