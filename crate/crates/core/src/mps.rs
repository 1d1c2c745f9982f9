//! Matrix product states for spin-1/2 chains.
//!
//! Site tensors have shape `(left bond, 2, right bond)` with unit bonds at
//! both ends; site 0 is the most significant bit of the dense index, so
//! configuration `(s_0, ..., s_{n-1})` maps to `sum_i s_i 2^(n-1-i)`.
//!
//! ```text
//!   1 --[A_0]-- x1 --[A_1]-- x2 ... x_{n-1} --[A_{n-1}]-- 1
//!         |            |                          |
//!         s_0          s_1                        s_{n-1}
//! ```
//!
//! A canonical center at site `c` means every site left of `c` is a left
//! isometry and every site right of `c` a right isometry; the full state
//! norm then lives in the center tensor alone.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex;
#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{CoreError, Result};
use crate::linalg::{qr_thin, svd, svd_truncated};
use crate::tensor::{contract, matmul, Tensor, C64};
use crate::util::uniform_f64;

const ONE: C64 = Complex::new(1.0, 0.0);
const ZERO: C64 = Complex::new(0.0, 0.0);
/// Largest chain the dense conversions will materialize (16 MiB of C64).
pub const MAX_DENSE_SITES: usize = 24;
/// Normalization slack tolerated by sampling and compression.
const NORM_TOL: f64 = 1e-8;
/// Unitarity deviation beyond which strict gate application refuses.
const UNITARY_TOL: f64 = 1e-8;
/// Schmidt weights are clamped at this floor inside entropy logarithms.
pub(crate) const ENTROPY_CLAMP: f64 = 1e-12;

/// Knobs for truncated gate application.
#[derive(Debug, Clone, Copy)]
pub struct TruncOptions {
    /// Discarded-weight budget per split (fraction of total weight).
    pub cutoff: f64,
    /// Hard cap on the bond dimension.
    pub max_rank: usize,
    /// Refuse gates whose unitarity deviation exceeds the strict tolerance.
    /// When false the deviation is still measured and reported.
    pub strict_unitary: bool,
}

impl Default for TruncOptions {
    fn default() -> Self {
        TruncOptions {
            cutoff: 1e-6,
            max_rank: 256,
            strict_unitary: true,
        }
    }
}

/// Outcome of one truncated gate application.
#[derive(Debug, Clone, Copy, Default)]
pub struct GateApplication {
    /// Discarded weight fraction of this split.
    pub truncation_error: f64,
    /// Bond dimension after the split.
    pub bond: usize,
    /// Measured `max |G^dag G - I|` of the gate.
    pub unitary_deviation: f64,
}

#[derive(Debug, Clone)]
pub struct MatrixProductState {
    sites: Vec<Tensor>,
    center: Option<usize>,
}

impl MatrixProductState {
    /// Product state `|bits>` with unit bonds.
    pub fn product_state(bits: &[u8]) -> Result<Self> {
        if bits.is_empty() {
            return Err(CoreError::arg("product state needs at least one site"));
        }
        let sites = bits
            .iter()
            .map(|&b| {
                if b > 1 {
                    return Err(CoreError::arg("physical values must be 0 or 1"));
                }
                let mut t = Tensor::zeros([1, 2, 1]);
                t.set(&[0, b as usize, 0], ONE)?;
                Ok(t)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MatrixProductState {
            sites,
            center: Some(0),
        })
    }

    /// Build from raw site tensors; bond extents must chain and end at 1.
    pub fn from_sites(sites: Vec<Tensor>, center: Option<usize>) -> Result<Self> {
        if sites.is_empty() {
            return Err(CoreError::arg("empty site list"));
        }
        let mut left = 1usize;
        for (i, s) in sites.iter().enumerate() {
            if s.rank() != 3 || s.shape()[1] != 2 {
                return Err(CoreError::dim(format_args!(
                    "site {i} must have shape (bond, 2, bond), got {:?}",
                    s.shape()
                )));
            }
            if s.shape()[0] != left {
                return Err(CoreError::dim(format_args!(
                    "site {i} left bond {} does not chain (expected {left})",
                    s.shape()[0]
                )));
            }
            left = s.shape()[2];
        }
        if left != 1 {
            return Err(CoreError::dim("last site must end in a unit bond"));
        }
        if let Some(c) = center {
            if c >= sites.len() {
                return Err(CoreError::dim("center out of range"));
            }
        }
        Ok(MatrixProductState { sites, center })
    }

    /// Compress a normalized dense statevector into an MPS by repeated
    /// truncated splits, renormalizing the kept weights after each split.
    /// Returns the state and the summed discarded-weight fractions.
    pub fn compress_dense(dense: &[C64], cutoff: f64, max_rank: usize) -> Result<(Self, f64)> {
        let len = dense.len();
        let n = len.trailing_zeros() as usize;
        if len == 0 || len != 1 << n {
            return Err(CoreError::arg("dense length must be a power of two"));
        }
        if n > MAX_DENSE_SITES {
            return Err(CoreError::SizeLimit(alloc::format!(
                "{n} sites exceeds the dense cap of {MAX_DENSE_SITES}"
            )));
        }
        if n == 0 {
            return Err(CoreError::arg("need at least one site"));
        }
        let norm = dense.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(CoreError::NotNormalized {
                deviation: (norm - 1.0).abs(),
            });
        }

        let mut sites = Vec::with_capacity(n);
        let mut total_discarded = 0.0;
        // carry: (chi * remaining physical) matrix, starting as (2, 2^(n-1)).
        let mut chi = 1usize;
        let mut carry: Vec<C64> = dense.to_vec();
        for i in 0..n - 1 {
            let cols = 1usize << (n - 1 - i);
            let mat = Tensor::new([chi * 2, cols], carry)?;
            let split = svd_truncated(&mat, 1, cutoff, max_rank)?;
            total_discarded += split.truncation_error;
            let k = split.rank();
            sites.push(split.u.into_reshape([chi, 2, k])?);
            // carry = diag(s)/||s|| . vh
            let snorm = split.s.iter().map(|x| x * x).sum::<f64>().sqrt();
            let mut next = split.vh.into_data();
            for (t, &sv) in split.s.iter().enumerate() {
                let f = sv / snorm;
                for v in &mut next[t * cols..(t + 1) * cols] {
                    *v *= f;
                }
            }
            chi = k;
            carry = next;
        }
        sites.push(Tensor::new([chi, 2, 1], carry)?);
        let mut out = MatrixProductState {
            sites,
            center: Some(n - 1),
        };
        // The final carry holds the (already renormalized) norm; scrub the
        // residual float drift so downstream normalization checks pass.
        let nrm = out.sites[n - 1].norm();
        if nrm > 0.0 {
            out.sites[n - 1].scale(Complex::new(1.0 / nrm, 0.0));
        }
        Ok((out, total_discarded))
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn center(&self) -> Option<usize> {
        self.center
    }

    pub fn site(&self, i: usize) -> &Tensor {
        &self.sites[i]
    }

    /// Bond dimension to the right of site `i` (so `bond_dim(n-1) = 1`).
    pub fn bond_dim(&self, i: usize) -> usize {
        self.sites[i].shape()[2]
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites.iter().map(|s| s.shape()[2]).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// `<sigma|psi>` for a full configuration.
    pub fn amplitude(&self, config: &[u8]) -> Result<C64> {
        if config.len() != self.n_sites() {
            return Err(CoreError::dim(format_args!(
                "configuration length {} vs {} sites",
                config.len(),
                self.n_sites()
            )));
        }
        let mut v: Vec<C64> = vec![ONE];
        for (i, &s) in config.iter().enumerate() {
            if s > 1 {
                return Err(CoreError::arg("physical values must be 0 or 1"));
            }
            let a = &self.sites[i];
            let chi_r = a.shape()[2];
            let mut next = vec![ZERO; chi_r];
            for (l, &vl) in v.iter().enumerate() {
                if vl == ZERO {
                    continue;
                }
                let row = &a.data()[(l * 2 + s as usize) * chi_r..(l * 2 + s as usize + 1) * chi_r];
                for (nr, &ar) in next.iter_mut().zip(row) {
                    *nr += vl * ar;
                }
            }
            v = next;
        }
        Ok(v[0])
    }

    /// Expand to a dense statevector (guarded by [`MAX_DENSE_SITES`]).
    pub fn to_dense(&self) -> Result<Vec<C64>> {
        let n = self.n_sites();
        if n > MAX_DENSE_SITES {
            return Err(CoreError::SizeLimit(alloc::format!(
                "{n} sites exceeds the dense cap of {MAX_DENSE_SITES}"
            )));
        }
        // cur: (2^i, chi) matrix.
        let mut cur: Vec<C64> = vec![ONE];
        let mut rows = 1usize;
        let mut chi = 1usize;
        for a in &self.sites {
            let chi_r = a.shape()[2];
            let mut next = vec![ZERO; rows * 2 * chi_r];
            for x in 0..rows {
                for s in 0..2 {
                    let dst = &mut next[(x * 2 + s) * chi_r..(x * 2 + s + 1) * chi_r];
                    for l in 0..chi {
                        let f = cur[x * chi + l];
                        if f == ZERO {
                            continue;
                        }
                        let row = &a.data()[(l * 2 + s) * chi_r..(l * 2 + s + 1) * chi_r];
                        for (d, &ar) in dst.iter_mut().zip(row) {
                            *d += f * ar;
                        }
                    }
                }
            }
            cur = next;
            rows *= 2;
            chi = chi_r;
        }
        Ok(cur)
    }

    /// `<self|other>` with the bra side conjugated.
    pub fn overlap(&self, other: &MatrixProductState) -> Result<C64> {
        if self.n_sites() != other.n_sites() {
            return Err(CoreError::dim("overlap of chains with different lengths"));
        }
        let mut env = Tensor::identity(1);
        for (a, b) in self.sites.iter().zip(&other.sites) {
            // (la, s, ra)* x (la, lb) -> (s, ra, lb); then with (lb, s, rb).
            let left = contract(&a.conj(), &env, &[(0, 0)])?;
            env = contract(&left, b, &[(0, 1), (2, 0)])?;
        }
        Ok(env.data()[0])
    }

    pub fn norm(&self) -> f64 {
        match self.center {
            Some(c) => self.sites[c].norm(),
            None => self
                .overlap(self)
                .map(|z| z.re.max(0.0).sqrt())
                .unwrap_or(f64::NAN),
        }
    }

    pub fn normalize(&mut self) {
        let nrm = self.norm();
        if nrm > 0.0 && nrm.is_finite() {
            let f = Complex::new(1.0 / nrm, 0.0);
            match self.center {
                Some(c) => self.sites[c].scale(f),
                None => self.sites[0].scale(f),
            }
        }
    }

    /// Make site `i` a left isometry, pushing its R factor into site `i+1`.
    fn left_step(&mut self, i: usize) -> Result<()> {
        let a = &self.sites[i];
        let (chi_l, chi_r) = (a.shape()[0], a.shape()[2]);
        let (q, r) = qr_thin(&a.reshape([chi_l * 2, chi_r])?)?;
        let k = q.shape()[1];
        self.sites[i] = q.into_reshape([chi_l, 2, k])?;
        self.sites[i + 1] = contract(&r, &self.sites[i + 1], &[(1, 0)])?;
        Ok(())
    }

    /// Make site `i` a right isometry, pushing its L factor into site `i-1`.
    fn right_step(&mut self, i: usize) -> Result<()> {
        let a = &self.sites[i];
        let (chi_l, chi_r) = (a.shape()[0], a.shape()[2]);
        let m = a.reshape([chi_l, 2 * chi_r])?;
        let (q2, r2) = qr_thin(&m.dagger()?)?;
        let k = q2.shape()[1];
        // m = (r2^dag)(q2^dag); rows of q2^dag are orthonormal.
        self.sites[i] = q2.dagger()?.into_reshape([k, 2, chi_r])?;
        let l = r2.dagger()?; // (chi_l, k)
        self.sites[i - 1] = contract(&self.sites[i - 1], &l, &[(2, 0)])?;
        Ok(())
    }

    /// Establish a canonical center at `site` (full sweep if none exists,
    /// incremental QR moves otherwise).
    pub fn canonicalize(&mut self, site: usize) -> Result<()> {
        let n = self.n_sites();
        if site >= n {
            return Err(CoreError::dim("center out of range"));
        }
        match self.center {
            Some(c) if c == site => Ok(()),
            Some(c) if c < site => {
                for i in c..site {
                    self.left_step(i)?;
                }
                self.center = Some(site);
                Ok(())
            }
            Some(c) => {
                for i in (site + 1..=c).rev() {
                    self.right_step(i)?;
                }
                self.center = Some(site);
                Ok(())
            }
            None => {
                for i in 0..site {
                    self.left_step(i)?;
                }
                for i in (site + 1..n).rev() {
                    self.right_step(i)?;
                }
                self.center = Some(site);
                Ok(())
            }
        }
    }

    /// Worst orthonormality deviation of the isometries around the center.
    pub fn canonical_residual(&self) -> f64 {
        let Some(c) = self.center else {
            return f64::NAN;
        };
        let mut worst = 0.0f64;
        for (i, a) in self.sites.iter().enumerate() {
            let (chi_l, chi_r) = (a.shape()[0], a.shape()[2]);
            if i < c {
                let m = a.reshape([chi_l * 2, chi_r]).expect("site shape");
                let g = matmul(&m.dagger().expect("rank 2"), &m).expect("gram");
                worst = worst.max(identity_deviation(&g));
            } else if i > c {
                let m = a.reshape([chi_l, 2 * chi_r]).expect("site shape");
                let g = matmul(&m, &m.dagger().expect("rank 2")).expect("gram");
                worst = worst.max(identity_deviation(&g));
            }
        }
        worst
    }

    /// Apply a single-site unitary; the canonical center is unaffected.
    pub fn apply_one_site_gate(
        &mut self,
        site: usize,
        gate: &Tensor,
        opts: &TruncOptions,
    ) -> Result<GateApplication> {
        if site >= self.n_sites() {
            return Err(CoreError::dim("gate site out of range"));
        }
        if gate.shape() != [2, 2] {
            return Err(CoreError::dim("one-site gate must be 2x2"));
        }
        let deviation = unitary_deviation(gate)?;
        if opts.strict_unitary && deviation > UNITARY_TOL {
            return Err(CoreError::NotUnitary { deviation });
        }
        let a = &self.sites[site];
        let out = contract(gate, a, &[(1, 1)])?; // (o, l, r)
        self.sites[site] = out.transpose(&[1, 0, 2])?;
        Ok(GateApplication {
            truncation_error: 0.0,
            bond: self.sites[site].shape()[2],
            unitary_deviation: deviation,
        })
    }

    /// Apply a two-site unitary on `(site, site+1)` with a truncated split.
    /// The kept Schmidt weights are renormalized to unit total weight, and
    /// the canonical center ends at `site + 1`.
    pub fn apply_two_qubit_gate(
        &mut self,
        site: usize,
        gate: &Tensor,
        opts: &TruncOptions,
    ) -> Result<GateApplication> {
        let n = self.n_sites();
        if site + 1 >= n {
            return Err(CoreError::dim("two-site gate needs sites (i, i+1) in range"));
        }
        let gate4 = match gate.shape() {
            [4, 4] => gate.reshape([2, 2, 2, 2])?,
            [2, 2, 2, 2] => gate.clone(),
            s => {
                return Err(CoreError::dim(format_args!(
                    "two-site gate shape {s:?} (want 4x4 or 2x2x2x2)"
                )))
            }
        };
        let deviation = unitary_deviation(&gate4.reshape([4, 4])?)?;
        if opts.strict_unitary && deviation > UNITARY_TOL {
            return Err(CoreError::NotUnitary { deviation });
        }
        self.canonicalize(site)?;

        let theta = contract(&self.sites[site], &self.sites[site + 1], &[(2, 0)])?;
        // gate (oi, oj, si, sj) x theta (l, si, sj, r) -> (oi, oj, l, r)
        let theta = contract(&gate4, &theta, &[(2, 1), (3, 2)])?.transpose(&[2, 0, 1, 3])?;
        let split = svd_truncated(&theta, 2, opts.cutoff, opts.max_rank)?;
        let k = split.rank();
        let snorm = split.s.iter().map(|x| x * x).sum::<f64>().sqrt();
        let chi_r = theta.shape()[3];
        self.sites[site] = split.u; // (chi_l, 2, k) already
        let mut b = split.vh.into_reshape([k, 2 * chi_r])?;
        for (t, &sv) in split.s.iter().enumerate() {
            let f = Complex::new(sv / snorm, 0.0);
            for v in &mut b.data_mut()[t * 2 * chi_r..(t + 1) * 2 * chi_r] {
                *v *= f;
            }
        }
        self.sites[site + 1] = b.into_reshape([k, 2, chi_r])?;
        self.center = Some(site + 1);
        Ok(GateApplication {
            truncation_error: split.truncation_error,
            bond: k,
            unitary_deviation: deviation,
        })
    }

    /// Schmidt values across the cut between sites `bond-1` and `bond`.
    pub fn schmidt_values(&self, bond: usize) -> Result<Vec<f64>> {
        let n = self.n_sites();
        if bond == 0 || bond >= n {
            return Err(CoreError::dim(format_args!(
                "bond {bond} out of range 1..{n}"
            )));
        }
        let mut work = self.clone();
        work.canonicalize(bond - 1)?;
        let a = &work.sites[bond - 1];
        let (chi_l, chi_r) = (a.shape()[0], a.shape()[2]);
        let (_, s, _) = svd(&a.reshape([chi_l * 2, chi_r])?)?;
        Ok(s)
    }

    /// Von Neumann entropy of the bipartition at `bond`, from the squared
    /// Schmidt values normalized to a distribution; weights are clamped at
    /// `1e-12` inside the logarithm.
    pub fn entanglement_entropy(&self, bond: usize) -> Result<f64> {
        let s = self.schmidt_values(bond)?;
        Ok(entropy_from_schmidt(&s))
    }

    /// Draw `n_samples` configurations from `|psi(sigma)|^2` by sweeping the
    /// conditionals left to right; each sample consumes an independent RNG
    /// stream derived from `seed` and the sample index, so batches are
    /// deterministic and order-independent. Also returns each sample's exact
    /// amplitude, read off the same sweep.
    pub fn perfect_sample(&self, n_samples: usize, seed: u64) -> Result<SampleBatch> {
        if n_samples == 0 {
            return Err(CoreError::arg("need at least one sample"));
        }
        let deviation = (self.norm() - 1.0).abs();
        if deviation.is_nan() || deviation > NORM_TOL {
            return Err(CoreError::NotNormalized { deviation });
        }
        let n = self.n_sites();
        let mut work = self.clone();
        work.canonicalize(0)?;

        let mut configs = vec![0u8; n_samples * n];
        let mut amplitudes = vec![ZERO; n_samples];
        let max_chi = work.sites.iter().map(|s| s.shape()[2]).max().unwrap_or(1);
        let mut b0 = vec![ZERO; max_chi];
        let mut b1 = vec![ZERO; max_chi];
        let mut v = vec![ZERO; max_chi];

        for j in 0..n_samples {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(j as u64);
            v[0] = ONE;
            let mut vlen = 1usize;
            let mut amp = ONE;
            for i in 0..n {
                let a = &work.sites[i];
                let chi_r = a.shape()[2];
                b0[..chi_r].fill(ZERO);
                b1[..chi_r].fill(ZERO);
                for l in 0..vlen {
                    let vl = v[l];
                    if vl == ZERO {
                        continue;
                    }
                    let r0 = &a.data()[(l * 2) * chi_r..(l * 2 + 1) * chi_r];
                    let r1 = &a.data()[(l * 2 + 1) * chi_r..(l * 2 + 2) * chi_r];
                    for r in 0..chi_r {
                        b0[r] += vl * r0[r];
                        b1[r] += vl * r1[r];
                    }
                }
                let q0: f64 = b0[..chi_r].iter().map(|z| z.norm_sqr()).sum();
                let q1: f64 = b1[..chi_r].iter().map(|z| z.norm_sqr()).sum();
                let total = q0 + q1;
                let p0 = if total > 0.0 { q0 / total } else { 0.5 };
                let u = uniform_f64(&mut rng);
                let (bit, q) = if u < p0 { (0u8, q0) } else { (1u8, q1) };
                configs[j * n + i] = bit;
                let root = q.sqrt();
                amp *= root;
                let chosen = if bit == 0 { &b0 } else { &b1 };
                if root > 0.0 {
                    let inv = 1.0 / root;
                    for r in 0..chi_r {
                        v[r] = chosen[r] * inv;
                    }
                } else {
                    v[..chi_r].fill(ZERO);
                }
                vlen = chi_r;
            }
            // v is now a unit scalar carrying the phase.
            amplitudes[j] = amp * v[0];
        }
        SampleBatch::from_parts(n, configs, amplitudes, None)
    }
}

pub(crate) fn identity_deviation(g: &Tensor) -> f64 {
    let k = g.shape()[0];
    let mut worst = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            let expect = if i == j { ONE } else { ZERO };
            worst = worst.max((g.data()[i * k + j] - expect).norm());
        }
    }
    worst
}

/// `max |G^dag G - I|` for a square gate matrix.
pub fn unitary_deviation(gate: &Tensor) -> Result<f64> {
    if gate.rank() != 2 || gate.shape()[0] != gate.shape()[1] {
        return Err(CoreError::dim("unitarity check needs a square matrix"));
    }
    let g = matmul(&gate.dagger()?, gate)?;
    Ok(identity_deviation(&g))
}

/// Entropy of the squared-Schmidt distribution with the documented clamp.
pub fn entropy_from_schmidt(schmidt: &[f64]) -> f64 {
    let total: f64 = schmidt.iter().map(|s| s * s).sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mut ent = 0.0;
    for &s in schmidt {
        let p = s * s / total;
        if p > 0.0 {
            ent -= p * p.max(ENTROPY_CLAMP).ln();
        }
    }
    ent
}

/// A batch of sampled (or enumerated) configurations with their amplitudes.
///
/// `weights` is `None` for i.i.d. samples (uniform `1/len` weights) and holds
/// explicit probabilities for enumerated batches.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    n_sites: usize,
    configs: Vec<u8>,
    amplitudes: Vec<C64>,
    weights: Option<Vec<f64>>,
}

impl SampleBatch {
    pub fn from_parts(
        n_sites: usize,
        configs: Vec<u8>,
        amplitudes: Vec<C64>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        if n_sites == 0 {
            return Err(CoreError::arg("batch needs at least one site"));
        }
        if configs.len() != amplitudes.len() * n_sites {
            return Err(CoreError::dim(format_args!(
                "{} config bytes vs {} amplitudes x {n_sites} sites",
                configs.len(),
                amplitudes.len()
            )));
        }
        if let Some(w) = &weights {
            if w.len() != amplitudes.len() {
                return Err(CoreError::dim("weights length mismatch"));
            }
        }
        if amplitudes.is_empty() {
            return Err(CoreError::arg("empty batch"));
        }
        Ok(SampleBatch {
            n_sites,
            configs,
            amplitudes,
            weights,
        })
    }

    /// Every basis configuration of `n_sites` spins, weighted by `|psi|^2`.
    /// Used for exact (enumerated) evaluations on small chains.
    pub fn full_basis(n_sites: usize, dense: &[C64]) -> Result<Self> {
        if dense.len() != 1 << n_sites {
            return Err(CoreError::dim("dense length vs site count"));
        }
        let mut configs = Vec::with_capacity(dense.len() * n_sites);
        for idx in 0..dense.len() {
            for i in 0..n_sites {
                configs.push(((idx >> (n_sites - 1 - i)) & 1) as u8);
            }
        }
        let weights: Vec<f64> = dense.iter().map(|z| z.norm_sqr()).collect();
        SampleBatch::from_parts(n_sites, configs, dense.to_vec(), Some(weights))
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn config(&self, j: usize) -> &[u8] {
        &self.configs[j * self.n_sites..(j + 1) * self.n_sites]
    }

    pub fn amplitude(&self, j: usize) -> C64 {
        self.amplitudes[j]
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// Weight of sample `j`; uniform `1/len` unless explicit weights exist.
    pub fn weight(&self, j: usize) -> f64 {
        match &self.weights {
            Some(w) => w[j],
            None => 1.0 / self.len() as f64,
        }
    }

    pub fn has_explicit_weights(&self) -> bool {
        self.weights.is_some()
    }

    /// Replace stored amplitudes (used when re-evaluating through an exact
    /// contraction path instead of the sampling sweep).
    pub fn with_amplitudes(&self, amplitudes: Vec<C64>) -> Result<Self> {
        SampleBatch::from_parts(
            self.n_sites,
            self.configs.clone(),
            amplitudes,
            self.weights.clone(),
        )
    }

    /// Dense index of configuration `j` (site 0 most significant).
    pub fn dense_index(&self, j: usize) -> usize {
        self.config(j)
            .iter()
            .fold(0usize, |acc, &b| (acc << 1) | b as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ghz(n: usize) -> MatrixProductState {
        let mut dense = vec![ZERO; 1 << n];
        let r = core::f64::consts::FRAC_1_SQRT_2;
        dense[0] = Complex::new(r, 0.0);
        dense[(1 << n) - 1] = Complex::new(r, 0.0);
        MatrixProductState::compress_dense(&dense, 0.0, usize::MAX)
            .unwrap()
            .0
    }

    #[test]
    fn product_state_amplitudes() {
        let psi = MatrixProductState::product_state(&[0, 1, 0]).unwrap();
        assert_abs_diff_eq!(psi.amplitude(&[0, 1, 0]).unwrap().re, 1.0);
        assert_abs_diff_eq!(psi.amplitude(&[0, 0, 0]).unwrap().norm(), 0.0);
        assert!(psi.amplitude(&[0, 1]).is_err());
    }

    #[test]
    fn ghz_has_bond_two_and_ln2_entropy() {
        let psi = ghz(4);
        assert_eq!(psi.max_bond(), 2);
        let s = psi.entanglement_entropy(2).unwrap();
        assert_abs_diff_eq!(s, core::f64::consts::LN_2, epsilon = 1e-10);
        let amp = psi.amplitude(&[1, 1, 1, 1]).unwrap();
        assert_abs_diff_eq!(amp.norm(), core::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
    }

    #[test]
    fn product_state_entropy_is_zero() {
        let psi = MatrixProductState::product_state(&[0, 1, 1, 0]).unwrap();
        assert_abs_diff_eq!(psi.entanglement_entropy(2).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn canonical_moves_preserve_the_state() {
        let psi = ghz(5);
        let dense_before = psi.to_dense().unwrap();
        let mut moved = psi.clone();
        moved.canonicalize(0).unwrap();
        moved.canonicalize(4).unwrap();
        moved.canonicalize(2).unwrap();
        assert!(moved.canonical_residual() < 1e-12);
        let dense_after = moved.to_dense().unwrap();
        for (a, b) in dense_before.iter().zip(&dense_after) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn norm_is_one_after_compression() {
        let psi = ghz(6);
        assert_abs_diff_eq!(psi.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn strict_mode_rejects_non_unitary_gate() {
        let mut psi = ghz(4);
        let mut g = Tensor::identity(4);
        g.data_mut()[0] = Complex::new(2.0, 0.0);
        let err = psi
            .apply_two_qubit_gate(1, &g, &TruncOptions::default())
            .unwrap_err();
        assert!(matches!(err, CoreError::NotUnitary { .. }));
        let lenient = TruncOptions {
            strict_unitary: false,
            ..TruncOptions::default()
        };
        let info = psi.apply_two_qubit_gate(1, &g, &lenient).unwrap();
        assert!(info.unitary_deviation > 1.0);
    }

    #[test]
    fn sampling_requires_normalization() {
        let mut psi = ghz(4);
        let c = psi.center().unwrap();
        psi.sites[c].scale(Complex::new(2.0, 0.0));
        assert!(matches!(
            psi.perfect_sample(10, 1),
            Err(CoreError::NotNormalized { .. })
        ));
    }

    #[test]
    fn ghz_samples_only_the_two_branches_with_exact_amplitudes() {
        let psi = ghz(6);
        let batch = psi.perfect_sample(200, 7).unwrap();
        let r = core::f64::consts::FRAC_1_SQRT_2;
        for j in 0..batch.len() {
            let cfg = batch.config(j);
            assert!(
                cfg.iter().all(|&b| b == 0) || cfg.iter().all(|&b| b == 1),
                "GHZ sample must be all zeros or all ones"
            );
            assert_abs_diff_eq!(batch.amplitude(j).re, r, epsilon = 1e-12);
            assert_abs_diff_eq!(batch.amplitude(j).im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn sampling_is_deterministic_in_the_seed() {
        let psi = ghz(5);
        let a = psi.perfect_sample(50, 42).unwrap();
        let b = psi.perfect_sample(50, 42).unwrap();
        assert_eq!(a.configs, b.configs);
        let c = psi.perfect_sample(50, 43).unwrap();
        assert_ne!(a.configs, c.configs);
    }

    #[test]
    fn full_basis_batch_indexes_consistently() {
        let psi = ghz(3);
        let dense = psi.to_dense().unwrap();
        let batch = SampleBatch::full_basis(3, &dense).unwrap();
        assert_eq!(batch.len(), 8);
        for j in 0..8 {
            assert_eq!(batch.dense_index(j), j);
            assert_eq!(batch.amplitude(j), dense[j]);
        }
        let wsum: f64 = (0..8).map(|j| batch.weight(j)).sum();
        assert_abs_diff_eq!(wsum, 1.0, epsilon = 1e-12);
    }
}
