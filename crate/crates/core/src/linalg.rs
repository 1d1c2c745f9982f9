//! Complex dense factorizations built for bond dimensions in the hundreds:
//! Householder QR, one-sided Jacobi SVD (QR-reduced first, so isometries stay
//! orthonormal to machine precision even for tiny singular values), weight
//! truncation, the singular-value differentiation rule, and a two-sided
//! Jacobi eigensolver for Hermitian matrices.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{CoreError, Result};
use crate::tensor::{matmul, Tensor, C64};

const ZERO: C64 = Complex::new(0.0, 0.0);
/// Relative threshold below which singular values count as numerical zeros.
const SV_ZERO_RTOL: f64 = 1e-14;
/// Column-orthogonality target of a Jacobi sweep.
const JACOBI_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 64;

fn sgn(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Thin QR of an `m x n` matrix: `(q, r)` with `q` of shape `m x k`,
/// `r` of shape `k x n`, `k = min(m, n)`, and `q` having orthonormal columns.
pub fn qr_thin(a: &Tensor) -> Result<(Tensor, Tensor)> {
    if a.rank() != 2 {
        return Err(CoreError::dim("qr requires a rank-2 tensor"));
    }
    let (m, n) = (a.shape()[0], a.shape()[1]);
    let k = m.min(n);
    let mut r = a.data().to_vec();
    // Reflectors: (start row, v, 2/|v|^2), applied as H = I - (2/|v|^2) v v^dag.
    let mut reflectors: Vec<(usize, Vec<C64>, f64)> = Vec::with_capacity(k);

    for col in 0..k {
        let seg = m - col;
        let mut v: Vec<C64> = (0..seg).map(|i| r[(col + i) * n + col]).collect();
        let normx = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if normx == 0.0 {
            reflectors.push((col, Vec::new(), 0.0));
            continue;
        }
        let phase = if v[0].norm() > 0.0 {
            v[0] / v[0].norm()
        } else {
            Complex::new(1.0, 0.0)
        };
        let beta = -phase * normx;
        v[0] -= beta;
        let vnorm_sqr: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm_sqr == 0.0 {
            reflectors.push((col, Vec::new(), 0.0));
            continue;
        }
        let coef = 2.0 / vnorm_sqr;
        // Apply the reflector to the trailing block of R.
        for j in col..n {
            let mut w = ZERO;
            for i in 0..seg {
                w += v[i].conj() * r[(col + i) * n + j];
            }
            w *= coef;
            for i in 0..seg {
                r[(col + i) * n + j] -= w * v[i];
            }
        }
        r[col * n + col] = beta;
        for i in 1..seg {
            r[(col + i) * n + col] = ZERO;
        }
        reflectors.push((col, v, coef));
    }

    // Accumulate the thin Q by running the reflectors backwards over E_k.
    let mut q = vec![ZERO; m * k];
    for i in 0..k {
        q[i * k + i] = Complex::new(1.0, 0.0);
    }
    for (col, v, coef) in reflectors.iter().rev() {
        if v.is_empty() {
            continue;
        }
        let seg = m - col;
        for j in 0..k {
            let mut w = ZERO;
            for i in 0..seg {
                w += v[i].conj() * q[(col + i) * k + j];
            }
            w *= *coef;
            for i in 0..seg {
                q[(col + i) * k + j] -= w * v[i];
            }
        }
    }

    let q = Tensor::new([m, k], q)?;
    let r_top = Tensor::new(
        [k, n],
        (0..k * n).map(|idx| r[idx]).collect::<Vec<_>>(),
    )?;
    Ok((q, r_top))
}

/// One-sided Jacobi SVD of a square matrix, returned as columns.
/// `w` already holds the matrix columns and is overwritten with `U * diag(s)`.
fn jacobi_sweeps(w: &mut [Vec<C64>], v: &mut [Vec<C64>]) -> Result<()> {
    let s = w.len();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        // Columns whose norm is negligible against the largest one carry
        // only rotation residue; rotating them against each other keeps
        // reshuffling that residue and would never converge.
        let gmax = w
            .iter()
            .map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .fold(0.0, f64::max);
        let floor = gmax * 1e-30;
        for p in 0..s {
            for q in (p + 1)..s {
                let mut gpp = 0.0;
                let mut gqq = 0.0;
                let mut gpq = ZERO;
                for i in 0..s {
                    gpp += w[p][i].norm_sqr();
                    gqq += w[q][i].norm_sqr();
                    gpq += w[p][i].conj() * w[q][i];
                }
                if gpp <= floor || gqq <= floor {
                    continue;
                }
                let off = gpq.norm();
                if off <= JACOBI_TOL * (gpp * gqq).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gpq / off;
                let tau = (gqq - gpp) / (2.0 * off);
                let t = sgn(tau) / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                let ph = phase.conj();
                for i in 0..s {
                    let wp = w[p][i];
                    let wq = ph * w[q][i];
                    w[p][i] = c * wp - sn * wq;
                    w[q][i] = sn * wp + c * wq;
                }
                for i in 0..s {
                    let vp = v[p][i];
                    let vq = ph * v[q][i];
                    v[p][i] = c * vp - sn * vq;
                    v[q][i] = sn * vp + c * vq;
                }
            }
        }
        if !rotated {
            return Ok(());
        }
    }
    Err(CoreError::NoConvergence("jacobi svd"))
}

/// Replace zero columns with unit vectors orthogonal to the nonzero ones,
/// so the returned isometry is orthonormal even for rank-deficient input.
fn complete_orthonormal(cols: &mut [Vec<C64>], zero: &[usize]) {
    let s = cols.len();
    for &j in zero {
        let mut best: Option<Vec<C64>> = None;
        let mut best_norm = 0.0;
        for k in 0..s {
            let mut cand = vec![ZERO; s];
            cand[k] = Complex::new(1.0, 0.0);
            for (c, col) in cols.iter().enumerate() {
                // Skip the slot being filled and zero slots not yet rebuilt.
                if c == j || (c > j && zero.contains(&c)) {
                    continue;
                }
                let ov: C64 = col.iter().zip(&cand).map(|(a, b)| a.conj() * b).sum();
                for (ci, coli) in cand.iter_mut().zip(col) {
                    *ci -= ov * coli;
                }
            }
            let nrm = cand.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if nrm > best_norm {
                best_norm = nrm;
                best = Some(cand);
            }
            if best_norm > 0.5 {
                break;
            }
        }
        if let Some(mut cand) = best {
            if best_norm > 0.0 {
                for c in &mut cand {
                    *c /= best_norm;
                }
            }
            cols[j] = cand;
        }
    }
}

fn svd_square(a: &Tensor) -> Result<(Tensor, Vec<f64>, Tensor)> {
    let s = a.shape()[0];
    let mut w: Vec<Vec<C64>> = (0..s)
        .map(|j| (0..s).map(|i| a.data()[i * s + j]).collect())
        .collect();
    let mut v: Vec<Vec<C64>> = (0..s)
        .map(|j| {
            let mut col = vec![ZERO; s];
            col[j] = Complex::new(1.0, 0.0);
            col
        })
        .collect();
    jacobi_sweeps(&mut w, &mut v)?;

    let mut order: Vec<usize> = (0..s).collect();
    let norms: Vec<f64> = w
        .iter()
        .map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).expect("finite norms"));

    let mut ucols: Vec<Vec<C64>> = Vec::with_capacity(s);
    let mut vcols: Vec<Vec<C64>> = Vec::with_capacity(s);
    let mut sigma = Vec::with_capacity(s);
    let mut zero_cols = Vec::new();
    for (rank, &j) in order.iter().enumerate() {
        sigma.push(norms[j]);
        vcols.push(v[j].clone());
        if norms[j] > 0.0 {
            ucols.push(w[j].iter().map(|z| z / norms[j]).collect());
        } else {
            zero_cols.push(rank);
            ucols.push(vec![ZERO; s]);
        }
    }
    complete_orthonormal(&mut ucols, &zero_cols);

    let u = Tensor::from_fn([s, s], |idx| ucols[idx[1]][idx[0]]);
    let vh = Tensor::from_fn([s, s], |idx| vcols[idx[0]][idx[1]].conj());
    Ok((u, sigma, vh))
}

/// Full SVD `a = u . diag(s) . vh` of an `m x n` matrix with `k = min(m, n)`:
/// `u` is `m x k` with orthonormal columns, `vh` is `k x n` with orthonormal
/// rows, and `s` is nonincreasing and nonnegative.
pub fn svd(a: &Tensor) -> Result<(Tensor, Vec<f64>, Tensor)> {
    if a.rank() != 2 {
        return Err(CoreError::dim("svd requires a rank-2 tensor"));
    }
    if !a.is_finite() {
        return Err(CoreError::NonFinite(alloc::format!(
            "svd input of shape {:?} contains non-finite entries",
            a.shape()
        )));
    }
    let (m, n) = (a.shape()[0], a.shape()[1]);
    if m == 0 || n == 0 {
        return Err(CoreError::dim("svd of an empty matrix"));
    }
    if m >= n {
        let (q, r) = qr_thin(a)?;
        let (ur, sigma, vh) = svd_square(&r)?;
        let u = matmul(&q, &ur)?;
        Ok((u, sigma, vh))
    } else {
        // a = (r^dag) (q^dag) with q from the QR of a^dag.
        let (q, r) = qr_thin(&a.dagger()?)?;
        let (u, sigma, vh_small) = svd_square(&r.dagger()?)?;
        let vh = matmul(&vh_small, &q.dagger()?)?;
        Ok((u, sigma, vh))
    }
}

/// Truncated SVD of a tensor split into row and column index groups.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// Left isometry with shape `(row extents..., k)`; orthonormal columns.
    pub u: Tensor,
    /// Kept singular values, nonincreasing.
    pub s: Vec<f64>,
    /// Right isometry (stored as `V^dag`) with shape `(k, col extents...)`;
    /// orthonormal rows.
    pub vh: Tensor,
    /// Discarded weight fraction: sum of dropped s_i^2 over the total.
    pub truncation_error: f64,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// `u . diag(s) . vh`, reshaped back to the original index groups.
    pub fn reconstruct(&self) -> Result<Tensor> {
        let k = self.rank();
        let rows: usize = self.u.len() / k;
        let cols: usize = self.vh.len() / k;
        let um = self.u.reshape([rows, k])?;
        let mut svh = self.vh.reshape([k, cols])?;
        for (t, &sv) in self.s.iter().enumerate() {
            for j in 0..cols {
                svh.data_mut()[t * cols + j] *= sv;
            }
        }
        let prod = matmul(&um, &svh)?;
        let mut shape: Vec<usize> = self.u.shape()[..self.u.rank() - 1].to_vec();
        shape.extend_from_slice(&self.vh.shape()[1..]);
        prod.into_reshape(shape)
    }
}

/// SVD across the split after the first `row_axes` axes, keeping the largest
/// singular values such that the discarded weight fraction stays within
/// `cutoff`, capped at `max_rank`, always keeping at least one.
///
/// Values below `1e-14` of the largest are treated as numerical zeros and
/// always dropped (never below rank one).
pub fn svd_truncated(
    a: &Tensor,
    row_axes: usize,
    cutoff: f64,
    max_rank: usize,
) -> Result<SvdResult> {
    if row_axes == 0 || row_axes >= a.rank() {
        return Err(CoreError::dim(format_args!(
            "row split {row_axes} invalid for rank {}",
            a.rank()
        )));
    }
    if !(cutoff >= 0.0 && cutoff.is_finite()) {
        return Err(CoreError::arg("cutoff must be finite and nonnegative"));
    }
    if max_rank == 0 {
        return Err(CoreError::arg("max_rank must be at least 1"));
    }
    let row_shape = a.shape()[..row_axes].to_vec();
    let col_shape = a.shape()[row_axes..].to_vec();
    let rows: usize = row_shape.iter().product();
    let cols: usize = col_shape.iter().product();
    let (u, sigma, vh) = svd(&a.reshape([rows, cols])?)?;

    let total: f64 = sigma.iter().map(|s| s * s).sum();
    if total == 0.0 {
        return Err(CoreError::arg("cannot split an all-zero tensor"));
    }
    let zero_tol = sigma[0] * SV_ZERO_RTOL;
    let full = sigma.len();
    let mut keep = full;
    while keep > 1 && sigma[keep - 1] <= zero_tol {
        keep -= 1;
    }
    // Greedy discard from the tail while the weight budget holds.
    let mut discarded: f64 = sigma[keep..full].iter().map(|s| s * s).sum();
    while keep > 1 {
        let w = sigma[keep - 1] * sigma[keep - 1];
        if discarded + w > cutoff * total {
            break;
        }
        discarded += w;
        keep -= 1;
    }
    while keep > max_rank {
        keep -= 1;
        discarded += sigma[keep] * sigma[keep];
    }

    let mut u_shape = row_shape;
    u_shape.push(keep);
    let mut vh_shape = vec![keep];
    vh_shape.extend(col_shape);

    let k_full = u.shape()[1];
    let u_cut = Tensor::from_fn([rows, keep], |idx| u.data()[idx[0] * k_full + idx[1]])
        .into_reshape(u_shape)?;
    let vh_cut = Tensor::from_fn([keep, cols], |idx| vh.data()[idx[0] * cols + idx[1]])
        .into_reshape(vh_shape)?;

    Ok(SvdResult {
        u: u_cut,
        s: sigma[..keep].to_vec(),
        vh: vh_cut,
        truncation_error: discarded / total,
    })
}

/// Gradient of a scalar through the singular values only: for upstream
/// sensitivities `ds_i`, the input-matrix gradient is `U diag(ds) V^dag`,
/// returned in the shape of the original split tensor.
pub fn singular_value_gradient(svd: &SvdResult, upstream: &[f64]) -> Result<Tensor> {
    let k = svd.rank();
    if upstream.len() != k {
        return Err(CoreError::dim(format_args!(
            "upstream length {} vs rank {k}",
            upstream.len()
        )));
    }
    let rows = svd.u.len() / k;
    let cols = svd.vh.len() / k;
    let um = svd.u.reshape([rows, k])?;
    let mut dvh = svd.vh.reshape([k, cols])?;
    for (t, &d) in upstream.iter().enumerate() {
        for j in 0..cols {
            dvh.data_mut()[t * cols + j] *= d;
        }
    }
    let grad = matmul(&um, &dvh)?;
    let mut shape: Vec<usize> = svd.u.shape()[..svd.u.rank() - 1].to_vec();
    shape.extend_from_slice(&svd.vh.shape()[1..]);
    grad.into_reshape(shape)
}

/// Eigendecomposition of a Hermitian matrix by cyclic two-sided Jacobi:
/// ascending real eigenvalues and a unitary whose columns are eigenvectors.
pub fn eigh(a: &Tensor) -> Result<(Vec<f64>, Tensor)> {
    if a.rank() != 2 || a.shape()[0] != a.shape()[1] {
        return Err(CoreError::dim("eigh requires a square rank-2 tensor"));
    }
    if !a.is_finite() {
        return Err(CoreError::NonFinite(alloc::string::String::from(
            "eigh input contains non-finite entries",
        )));
    }
    let n = a.shape()[0];
    // Symmetrize to wash out representation noise in nominally Hermitian input.
    let mut m: Vec<C64> = vec![ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = 0.5 * (a.data()[i * n + j] + a.data()[j * n + i].conj());
        }
    }
    let mut v = vec![ZERO; n * n];
    for i in 0..n {
        v[i * n + i] = Complex::new(1.0, 0.0);
    }
    let fro = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let thresh = 1e-15 * fro;

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                let off = apq.norm();
                if off <= thresh {
                    continue;
                }
                rotated = true;
                let phase = apq / off;
                let app = m[p * n + p].re;
                let aqq = m[q * n + q].re;
                let tau = (aqq - app) / (2.0 * off);
                let t = sgn(tau) / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                let ph = phase.conj();
                // Column rotation (right-multiply by J).
                for i in 0..n {
                    let mp = m[i * n + p];
                    let mq = ph * m[i * n + q];
                    m[i * n + p] = c * mp - sn * mq;
                    m[i * n + q] = sn * mp + c * mq;
                }
                // Row rotation (left-multiply by J^dag).
                for j in 0..n {
                    let mp = m[p * n + j];
                    let mq = phase * m[q * n + j];
                    m[p * n + j] = c * mp - sn * mq;
                    m[q * n + j] = sn * mp + c * mq;
                }
                for i in 0..n {
                    let vp = v[i * n + p];
                    let vq = ph * v[i * n + q];
                    v[i * n + p] = c * vp - sn * vq;
                    v[i * n + q] = sn * vp + c * vq;
                }
            }
        }
        if !rotated {
            let mut order: Vec<usize> = (0..n).collect();
            let evals: Vec<f64> = (0..n).map(|i| m[i * n + i].re).collect();
            order.sort_by(|&i, &j| evals[i].partial_cmp(&evals[j]).expect("finite"));
            let sorted: Vec<f64> = order.iter().map(|&i| evals[i]).collect();
            let vecs = Tensor::from_fn([n, n], |idx| v[idx[0] * n + order[idx[1]]]);
            return Ok((sorted, vecs));
        }
    }
    Err(CoreError::NoConvergence("jacobi eigh"))
}
