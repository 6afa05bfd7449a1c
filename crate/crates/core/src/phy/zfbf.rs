use crate::chanmodel::CsiMatrix;
use crate::error::{Error, Result};
use crate::C64;

use super::{inner, norm_sqr};

/// Largest condition number accepted for a user selection.
pub const COND_LIMIT: f64 = 1e12;

/// Zero-forcing beams for the selected users of `csi`, in the order of
/// `users`.
pub fn zfbf_vectors(csi: &CsiMatrix, users: &[usize]) -> Result<Vec<Vec<C64>>> {
    let cols: Vec<&[C64]> = users.iter().map(|&k| csi.column(k)).collect();
    zf_beams(&cols)
}

/// Normalized columns of `H (Hᴴ H)⁻¹` for the matrix whose columns are
/// `cols`.
///
/// Uses a column-pivoted QR factorization `H Π = Q R` (Gram-Schmidt with
/// reorthogonalization), so that `H (Hᴴ H)⁻¹ = Q R⁻ᴴ Πᵀ`. The ratio
/// `|r₁₁| / |r_nn|` of the pivoted factor estimates the condition number.
pub fn zf_beams(cols: &[&[C64]]) -> Result<Vec<Vec<C64>>> {
    let n = cols.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let m = cols[0].len();
    if n > m {
        return Err(Error::InvalidDimension(format!("{n} users exceed {m} antennas")));
    }
    if cols.iter().any(|c| c.len() != m) {
        return Err(Error::InvalidDimension("ragged CSI columns".into()));
    }

    let mut remaining: Vec<usize> = (0..n).collect();
    let mut perm = Vec::with_capacity(n);
    let mut q: Vec<Vec<C64>> = Vec::with_capacity(n);
    // Upper triangular, row-major n × n.
    let mut r = vec![C64::new(0.0, 0.0); n * n];

    for j in 0..n {
        // Residuals of every remaining column against span(q_0..q_{j-1}).
        let mut best: Option<(usize, Vec<C64>, Vec<C64>, f64)> = None;
        for (slot, &c) in remaining.iter().enumerate() {
            let mut resid = cols[c].to_vec();
            let mut coef = vec![C64::new(0.0, 0.0); j];
            for _pass in 0..2 {
                for (i, qi) in q.iter().enumerate() {
                    let proj = inner(qi, &resid);
                    coef[i] += proj;
                    for (x, y) in resid.iter_mut().zip(qi) {
                        *x -= proj * y;
                    }
                }
            }
            let nrm = norm_sqr(&resid);
            if best.as_ref().map_or(true, |b| nrm > b.3) {
                best = Some((slot, resid, coef, nrm));
            }
        }
        let (slot, resid, coef, nrm) = best.expect("at least one remaining column");
        let col = remaining.remove(slot);
        let rjj = nrm.sqrt();
        let r00 = if j == 0 { rjj } else { r[0].re };
        if !(rjj > 0.0) || r00 / rjj > COND_LIMIT {
            return Err(Error::SingularSelection {
                cond: if rjj > 0.0 { r00 / rjj } else { f64::INFINITY },
            });
        }
        for (i, c) in coef.into_iter().enumerate() {
            r[i * n + j] = c;
        }
        r[j * n + j] = C64::new(rjj, 0.0);
        q.push(resid.into_iter().map(|x| x / rjj).collect());
        perm.push(col);
    }

    // X = R⁻ᴴ (lower triangular): solve Rᴴ X = I column by column.
    let mut x = vec![C64::new(0.0, 0.0); n * n];
    for col in 0..n {
        for row in col..n {
            let mut s = if row == col { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            for i in col..row {
                // (Rᴴ)[row][i] = conj(R[i][row])
                s -= r[i * n + row].conj() * x[i * n + col];
            }
            x[row * n + col] = s / r[row * n + row].re;
        }
    }

    let mut beams = vec![Vec::new(); n];
    for (j, &orig) in perm.iter().enumerate() {
        let mut w = vec![C64::new(0.0, 0.0); m];
        for (i, qi) in q.iter().enumerate().skip(j) {
            let xij = x[i * n + j];
            for (wv, qv) in w.iter_mut().zip(qi) {
                *wv += qv * xij;
            }
        }
        let nrm = norm_sqr(&w).sqrt();
        beams[orig] = w.into_iter().map(|v| v / nrm).collect();
    }
    Ok(beams)
}
