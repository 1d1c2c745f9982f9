//! Dense complex tensors in row-major layout with pairwise contraction.
//!
//! Contraction is bilinear: no complex conjugation is applied to either
//! operand. Inner products of quantum states must conjugate the bra side
//! explicitly (see [`Tensor::conj`]).

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{CoreError, Result};

pub type C64 = Complex<f64>;

/// Dense tensor over `C64`. The empty shape `[]` is a scalar with one element.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<C64>,
}

fn element_count(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl Tensor {
    pub fn new(shape: impl Into<Vec<usize>>, data: Vec<C64>) -> Result<Self> {
        let shape = shape.into();
        let expected = element_count(&shape);
        if data.len() != expected {
            return Err(CoreError::ShapeMismatch {
                shape,
                expected,
                got: data.len(),
            });
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: impl Into<Vec<usize>>) -> Self {
        let shape = shape.into();
        let n = element_count(&shape);
        Tensor {
            shape,
            data: vec![C64::new(0.0, 0.0); n],
        }
    }

    pub fn scalar(value: C64) -> Self {
        Tensor {
            shape: Vec::new(),
            data: vec![value],
        }
    }

    /// Rank-2 identity.
    pub fn identity(n: usize) -> Self {
        let mut t = Tensor::zeros([n, n]);
        for i in 0..n {
            t.data[i * n + i] = C64::new(1.0, 0.0);
        }
        t
    }

    pub fn from_fn(shape: impl Into<Vec<usize>>, mut f: impl FnMut(&[usize]) -> C64) -> Self {
        let shape = shape.into();
        let n = element_count(&shape);
        let mut idx = vec![0usize; shape.len()];
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(f(&idx));
            for ax in (0..shape.len()).rev() {
                idx[ax] += 1;
                if idx[ax] < shape[ax] {
                    break;
                }
                idx[ax] = 0;
            }
        }
        Tensor { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    /// Row-major strides.
    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.shape.len()];
        for ax in (0..self.shape.len().saturating_sub(1)).rev() {
            s[ax] = s[ax + 1] * self.shape[ax + 1];
        }
        s
    }

    fn flat_index(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.shape.len() {
            return Err(CoreError::dim(format_args!(
                "index rank {} vs tensor rank {}",
                index.len(),
                self.shape.len()
            )));
        }
        let mut flat = 0;
        for (ax, (&i, &ext)) in index.iter().zip(&self.shape).enumerate() {
            if i >= ext {
                return Err(CoreError::dim(format_args!(
                    "index {i} out of range for axis {ax} (extent {ext})"
                )));
            }
            flat = flat * ext + i;
        }
        Ok(flat)
    }

    pub fn get(&self, index: &[usize]) -> Result<C64> {
        Ok(self.data[self.flat_index(index)?])
    }

    pub fn set(&mut self, index: &[usize], value: C64) -> Result<()> {
        let flat = self.flat_index(index)?;
        self.data[flat] = value;
        Ok(())
    }

    /// Reinterpret the data under a new shape with the same element count.
    pub fn into_reshape(mut self, new_shape: impl Into<Vec<usize>>) -> Result<Self> {
        let new_shape = new_shape.into();
        let expected = element_count(&new_shape);
        if expected != self.data.len() {
            return Err(CoreError::ShapeMismatch {
                shape: new_shape,
                expected,
                got: self.data.len(),
            });
        }
        self.shape = new_shape;
        Ok(self)
    }

    pub fn reshape(&self, new_shape: impl Into<Vec<usize>>) -> Result<Self> {
        self.clone().into_reshape(new_shape)
    }

    /// Permute axes: output axis `d` is input axis `perm[d]`.
    pub fn transpose(&self, perm: &[usize]) -> Result<Self> {
        let r = self.rank();
        if perm.len() != r {
            return Err(CoreError::dim(format_args!(
                "permutation length {} vs rank {r}",
                perm.len()
            )));
        }
        let mut seen = vec![false; r];
        for &p in perm {
            if p >= r || seen[p] {
                return Err(CoreError::dim("invalid axis permutation"));
            }
            seen[p] = true;
        }
        let src_strides = self.strides();
        let new_shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let mut out = Vec::with_capacity(self.data.len());
        let mut idx = vec![0usize; r];
        for _ in 0..self.data.len() {
            let mut src = 0;
            for d in 0..r {
                src += idx[d] * src_strides[perm[d]];
            }
            out.push(self.data[src]);
            for ax in (0..r).rev() {
                idx[ax] += 1;
                if idx[ax] < new_shape[ax] {
                    break;
                }
                idx[ax] = 0;
            }
        }
        Ok(Tensor {
            shape: new_shape,
            data: out,
        })
    }

    pub fn conj(&self) -> Self {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Conjugate transpose of a rank-2 tensor.
    pub fn dagger(&self) -> Result<Self> {
        if self.rank() != 2 {
            return Err(CoreError::dim("dagger requires a rank-2 tensor"));
        }
        Ok(self.conj().transpose(&[1, 0]).expect("rank checked"))
    }

    pub fn scale(&mut self, factor: C64) {
        for z in &mut self.data {
            *z *= factor;
        }
    }

    pub fn add(&self, other: &Tensor) -> Result<Self> {
        if self.shape != other.shape {
            return Err(CoreError::dim("add requires identical shapes"));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Tensor {
            shape: self.shape.clone(),
            data,
        })
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Rank-2 matrix product `a @ b`.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.rank() != 2 || b.rank() != 2 {
        return Err(CoreError::dim("matmul requires rank-2 tensors"));
    }
    let (m, k) = (a.shape[0], a.shape[1]);
    let (k2, n) = (b.shape[0], b.shape[1]);
    if k != k2 {
        return Err(CoreError::dim(format_args!(
            "matmul inner extents {k} vs {k2}"
        )));
    }
    let mut out = vec![C64::new(0.0, 0.0); m * n];
    for i in 0..m {
        let arow = &a.data[i * k..(i + 1) * k];
        let orow = &mut out[i * n..(i + 1) * n];
        for (p, &apv) in arow.iter().enumerate() {
            if apv == C64::new(0.0, 0.0) {
                continue;
            }
            let brow = &b.data[p * n..(p + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += apv * bv;
            }
        }
    }
    Tensor::new([m, n], out)
}

/// Contract `a` with `b` over the axis pairs `(axis_of_a, axis_of_b)`.
///
/// Paired axes must have equal extents and appear at most once per side.
/// The result carries the unpaired axes of `a` (in order) followed by the
/// unpaired axes of `b`; contracting all axes yields a rank-0 scalar.
pub fn contract(a: &Tensor, b: &Tensor, pairs: &[(usize, usize)]) -> Result<Tensor> {
    let mut a_paired = vec![false; a.rank()];
    let mut b_paired = vec![false; b.rank()];
    for &(ia, ib) in pairs {
        if ia >= a.rank() || ib >= b.rank() {
            return Err(CoreError::dim(format_args!(
                "contraction pair ({ia}, {ib}) out of range for ranks ({}, {})",
                a.rank(),
                b.rank()
            )));
        }
        if a_paired[ia] || b_paired[ib] {
            return Err(CoreError::dim("axis contracted twice"));
        }
        if a.shape[ia] != b.shape[ib] {
            return Err(CoreError::dim(format_args!(
                "contracted extents differ: axis {ia} of a has {}, axis {ib} of b has {}",
                a.shape[ia], b.shape[ib]
            )));
        }
        a_paired[ia] = true;
        b_paired[ib] = true;
    }

    let a_keep: Vec<usize> = (0..a.rank()).filter(|&ax| !a_paired[ax]).collect();
    let b_keep: Vec<usize> = (0..b.rank()).filter(|&ax| !b_paired[ax]).collect();
    let a_sum: Vec<usize> = pairs.iter().map(|&(ia, _)| ia).collect();
    let b_sum: Vec<usize> = pairs.iter().map(|&(_, ib)| ib).collect();

    let keep_a_ext: usize = a_keep.iter().map(|&ax| a.shape[ax]).product();
    let keep_b_ext: usize = b_keep.iter().map(|&ax| b.shape[ax]).product();
    let sum_ext: usize = a_sum.iter().map(|&ax| a.shape[ax]).product();

    let mut perm_a = a_keep.clone();
    perm_a.extend_from_slice(&a_sum);
    let mut perm_b = b_sum.clone();
    perm_b.extend_from_slice(&b_keep);

    let am = a
        .transpose(&perm_a)?
        .into_reshape([keep_a_ext, sum_ext])?;
    let bm = b
        .transpose(&perm_b)?
        .into_reshape([sum_ext, keep_b_ext])?;
    let cm = matmul(&am, &bm)?;

    let mut out_shape: Vec<usize> = a_keep.iter().map(|&ax| a.shape[ax]).collect();
    out_shape.extend(b_keep.iter().map(|&ax| b.shape[ax]));
    cm.into_reshape(out_shape)
}
