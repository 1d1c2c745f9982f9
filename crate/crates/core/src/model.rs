//! Two-leg triangular spin-1/2 ladder, folded to a zigzag chain:
//!
//! ```text
//!   0   2   4   6        leg A
//!    \ / \ / \ / \
//!     1   3   5   7      leg B
//! ```
//!
//! Nearest neighbors along the zigzag couple with `j1`, next-nearest
//! (within a leg) with `j2`, and `jr` adds four-site cyclic ring exchange
//! `(jr/2) (P + P^dag)` on the plaquette tuple `(j, j+1, j+3, j+2)`,
//! where `P|a,b,c,d> = |d,a,b,c>`. Boundaries are open: a term exists only
//! if all of its sites fit on the chain.
//!
//! Basis convention matches the MPS/dense layout: site `i` is bit
//! `n-1-i` of the index, bit value 1 is spin down.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex;
#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::cost::hard_sign;
use crate::error::{CoreError, Result};
use crate::linalg::eigh;
use crate::mps::SampleBatch;
use crate::tensor::{Tensor, C64};
use crate::util::normal_f64;

/// Exact diagonalization refuses chains longer than this.
pub const MAX_ED_SITES: usize = 20;
/// Sector dimension below which the dense eigensolver is used directly.
const LANCZOS_DENSE_THRESHOLD: usize = 256;
const LANCZOS_MAX_BASIS: usize = 80;
const LANCZOS_RESTART_KEEP: usize = 10;
const LANCZOS_MAX_RESTARTS: usize = 60;
const LANCZOS_TOL: f64 = 1e-11;

/// Couplings of the ladder; `n_sites` must be even (the total-S^z = 0
/// sector is only defined there) and within the ED cap.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LadderModel {
    pub n_sites: usize,
    pub j1: f64,
    pub j2: f64,
    pub jr: f64,
}

impl LadderModel {
    pub fn new(n_sites: usize, j1: f64, j2: f64, jr: f64) -> Result<Self> {
        let m = LadderModel { n_sites, j1, j2, jr };
        m.validate()?;
        Ok(m)
    }

    pub fn heisenberg(n_sites: usize) -> Result<Self> {
        LadderModel::new(n_sites, 1.0, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 || !self.n_sites.is_multiple_of(2) {
            return Err(CoreError::arg("n_sites must be even and at least 2"));
        }
        if self.n_sites > MAX_ED_SITES {
            return Err(CoreError::SizeLimit(alloc::format!(
                "n_sites {} exceeds the exact-diagonalization cap of {MAX_ED_SITES}",
                self.n_sites
            )));
        }
        if ![self.j1, self.j2, self.jr].iter().all(|c| c.is_finite()) {
            return Err(CoreError::arg("couplings must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Term {
    /// `J (S_i . S_j)` exchange.
    Exchange { i: usize, j: usize, coupling: f64 },
    /// `w P` for one cyclic direction on the ordered tuple.
    Ring { sites: [usize; 4], coupling: f64, inverse: bool },
}

/// The ladder Hamiltonian as a matrix-free Hermitian operator.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    model: LadderModel,
    terms: Vec<Term>,
}

impl Hamiltonian {
    pub fn new(model: &LadderModel) -> Result<Self> {
        model.validate()?;
        let n = model.n_sites;
        let mut terms = Vec::new();
        for j in 0..n {
            if model.j1 != 0.0 && j + 1 < n {
                terms.push(Term::Exchange { i: j, j: j + 1, coupling: model.j1 });
            }
            if model.j2 != 0.0 && j + 2 < n {
                terms.push(Term::Exchange { i: j, j: j + 2, coupling: model.j2 });
            }
            if model.jr != 0.0 && j + 3 < n {
                let sites = [j, j + 1, j + 3, j + 2];
                terms.push(Term::Ring { sites, coupling: model.jr / 2.0, inverse: false });
                terms.push(Term::Ring { sites, coupling: model.jr / 2.0, inverse: true });
            }
        }
        Ok(Hamiltonian { model: *model, terms })
    }

    pub fn model(&self) -> &LadderModel {
        &self.model
    }

    pub fn dim(&self) -> usize {
        1 << self.model.n_sites
    }

    fn bit(&self, state: usize, site: usize) -> usize {
        (state >> (self.model.n_sites - 1 - site)) & 1
    }

    fn mask(&self, site: usize) -> usize {
        1 << (self.model.n_sites - 1 - site)
    }

    /// Image of `state` and the matrix element, for one term's off-diagonal
    /// (or the diagonal element when the term acts diagonally).
    fn term_action(&self, term: &Term, state: usize) -> (usize, f64, f64) {
        // Returns (flipped_state, offdiag_coefficient, diag_coefficient).
        match *term {
            Term::Exchange { i, j, coupling } => {
                let bi = self.bit(state, i);
                let bj = self.bit(state, j);
                if bi == bj {
                    (state, 0.0, 0.25 * coupling)
                } else {
                    let flipped = state ^ (self.mask(i) | self.mask(j));
                    (flipped, 0.5 * coupling, -0.25 * coupling)
                }
            }
            Term::Ring { sites, coupling, inverse } => {
                let [a, b, c, d] = sites;
                let (xa, xb, xc, xd) = (
                    self.bit(state, a),
                    self.bit(state, b),
                    self.bit(state, c),
                    self.bit(state, d),
                );
                // P|a,b,c,d> = |d,a,b,c>; the inverse cycles the other way.
                let (ya, yb, yc, yd) = if inverse {
                    (xb, xc, xd, xa)
                } else {
                    (xd, xa, xb, xc)
                };
                let mut out = state;
                for (site, bit) in [(a, ya), (b, yb), (c, yc), (d, yd)] {
                    let m = self.mask(site);
                    out = (out & !m) | (bit * m);
                }
                if out == state {
                    (state, 0.0, coupling)
                } else {
                    (out, coupling, 0.0)
                }
            }
        }
    }

    /// `out += H v` over the full 2^n basis.
    pub fn apply_dense(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.dim());
        debug_assert_eq!(out.len(), self.dim());
        for state in 0..self.dim() {
            let amp = v[state];
            if amp == 0.0 {
                continue;
            }
            for term in &self.terms {
                let (target, off, diag) = self.term_action(term, state);
                if diag != 0.0 {
                    out[state] += diag * amp;
                }
                if off != 0.0 {
                    out[target] += off * amp;
                }
            }
        }
    }

    /// `out += H v` restricted to a conserved-S^z sector.
    pub fn apply_in_sector(&self, basis: &SzBasis, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), basis.len());
        debug_assert_eq!(out.len(), basis.len());
        for (idx, &state) in basis.states.iter().enumerate() {
            let amp = v[idx];
            if amp == 0.0 {
                continue;
            }
            let state = state as usize;
            for term in &self.terms {
                let (target, off, diag) = self.term_action(term, state);
                if diag != 0.0 {
                    out[idx] += diag * amp;
                }
                if off != 0.0 {
                    let tgt = basis.index_of(target).expect("H conserves total S^z");
                    out[tgt] += off * amp;
                }
            }
        }
    }

    /// Dense sector matrix (for oracles and the small-sector eigensolver).
    pub fn sector_matrix(&self, basis: &SzBasis) -> Tensor {
        let d = basis.len();
        let mut m = Tensor::zeros([d, d]);
        let mut col = vec![0.0; d];
        let mut out = vec![0.0; d];
        for j in 0..d {
            col.iter_mut().for_each(|x| *x = 0.0);
            out.iter_mut().for_each(|x| *x = 0.0);
            col[j] = 1.0;
            self.apply_in_sector(basis, &col, &mut out);
            for i in 0..d {
                if out[i] != 0.0 {
                    m.data_mut()[i * d + j] = Complex::new(out[i], 0.0);
                }
            }
        }
        m
    }
}

/// Basis of a fixed total-S^z sector, stored as sorted bitstrings with an
/// O(1) rank table.
#[derive(Debug, Clone)]
pub struct SzBasis {
    n_sites: usize,
    states: Vec<u32>,
    rank: Vec<u32>,
}

impl SzBasis {
    /// The total-S^z = 0 sector: exactly half the spins down.
    pub fn sz_zero(n_sites: usize) -> Result<Self> {
        if n_sites < 2 || !n_sites.is_multiple_of(2) || n_sites > MAX_ED_SITES {
            return Err(CoreError::arg(
                "S^z = 0 sector needs an even chain within the ED cap",
            ));
        }
        let full = 1usize << n_sites;
        let half = (n_sites / 2) as u32;
        let mut states = Vec::new();
        let mut rank = vec![u32::MAX; full];
        for s in 0..full {
            if (s as u32).count_ones() == half {
                rank[s] = states.len() as u32;
                states.push(s as u32);
            }
        }
        Ok(SzBasis { n_sites, states, rank })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn state(&self, idx: usize) -> usize {
        self.states[idx] as usize
    }

    pub fn index_of(&self, state: usize) -> Option<usize> {
        match self.rank[state] {
            u32::MAX => None,
            r => Some(r as usize),
        }
    }
}

/// Ground state data from sector exact diagonalization.
#[derive(Debug, Clone)]
pub struct GroundStateResult {
    pub n_sites: usize,
    pub energy: f64,
    /// Distance to the next eigenvalue within the S^z = 0 sector.
    pub degeneracy_gap: f64,
    /// `||H psi - E psi||` of the returned ground vector.
    pub residual: f64,
    /// Dense statevector over the full basis, global phase fixed so the
    /// largest-magnitude amplitude is real positive.
    pub state: Vec<C64>,
}

/// Lowest two eigenpairs of the model in the S^z = 0 sector.
///
/// Small sectors go through the dense eigensolver; larger ones through
/// Lanczos with full reorthogonalization and thick restarts.
pub fn ground_state(model: &LadderModel) -> Result<GroundStateResult> {
    let h = Hamiltonian::new(model)?;
    let basis = SzBasis::sz_zero(model.n_sites)?;
    let dim = basis.len();

    let (evals, mut ground) = if dim <= LANCZOS_DENSE_THRESHOLD {
        let m = h.sector_matrix(&basis);
        let (vals, vecs) = eigh(&m)?;
        let v0: Vec<f64> = (0..dim).map(|i| vecs.data()[i * dim].re).collect();
        ((vals[0], vals[1]), v0)
    } else {
        let mut apply = |v: &[f64], out: &mut [f64]| h.apply_in_sector(&basis, v, out);
        let (vals, vecs) = lanczos_lowest_two(&mut apply, dim)?;
        ((vals[0], vals[1]), vecs.into_iter().next().expect("two pairs"))
    };

    // Normalize and measure the residual explicitly.
    let nrm = ground.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut ground {
        *x /= nrm;
    }
    let mut hv = vec![0.0; dim];
    h.apply_in_sector(&basis, &ground, &mut hv);
    let energy = ground.iter().zip(&hv).map(|(a, b)| a * b).sum::<f64>();
    let residual = hv
        .iter()
        .zip(&ground)
        .map(|(h, g)| (h - energy * g) * (h - energy * g))
        .sum::<f64>()
        .sqrt();

    // Embed into the full basis with the phase convention applied.
    let mut state = vec![Complex::new(0.0, 0.0); h.dim()];
    let mut largest = 0usize;
    for (idx, &s) in basis.states.iter().enumerate() {
        state[s as usize] = Complex::new(ground[idx], 0.0);
        if ground[idx].abs() > ground[largest].abs() {
            largest = idx;
        }
    }
    if ground[largest] < 0.0 {
        for z in &mut state {
            *z = -*z;
        }
    }

    Ok(GroundStateResult {
        n_sites: model.n_sites,
        energy,
        degeneracy_gap: evals.1 - evals.0,
        residual,
        state,
    })
}

/// Lanczos with full reorthogonalization and thick restarts; returns the two
/// lowest eigenvalues and their vectors.
fn lanczos_lowest_two(
    apply: &mut dyn FnMut(&[f64], &mut [f64]),
    dim: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let m_max = LANCZOS_MAX_BASIS.min(dim);
    let mut rng = ChaCha12Rng::seed_from_u64(0x1a2b_3c4d);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m_max);
    let mut t = vec![0.0f64; m_max * m_max];

    let mut v0: Vec<f64> = (0..dim).map(|_| normal_f64(&mut rng)).collect();
    normalize(&mut v0);
    basis.push(v0);

    let mut m = 1usize; // current basis size
    for _restart in 0..LANCZOS_MAX_RESTARTS {
        // Extend the basis up to m_max.
        while m < m_max {
            let j = m - 1;
            let mut w = vec![0.0; dim];
            apply(&basis[j], &mut w);
            let alpha = dot(&basis[j], &w);
            t[j * m_max + j] = alpha;
            // Full reorthogonalization, two passes.
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(b, &w);
                    axpy(&mut w, -c, b);
                }
            }
            let beta = norm2(&w);
            let scale = t.iter().fold(0.0f64, |a, &x| a.max(x.abs())).max(1.0);
            if beta <= 1e-14 * scale {
                // Invariant subspace: restart the residual direction randomly.
                let mut fresh: Vec<f64> = (0..dim).map(|_| normal_f64(&mut rng)).collect();
                for _ in 0..2 {
                    for b in &basis {
                        let c = dot(b, &fresh);
                        axpy(&mut fresh, -c, b);
                    }
                }
                let fn2 = norm2(&fresh);
                if fn2 <= 1e-12 {
                    break; // basis spans the whole space
                }
                for x in &mut fresh {
                    *x /= fn2;
                }
                // Coupling is zero: the block decouples.
                basis.push(fresh);
                m += 1;
                continue;
            }
            t[j * m_max + m] = beta;
            t[m * m_max + j] = beta;
            for x in &mut w {
                *x /= beta;
            }
            basis.push(w);
            m += 1;
        }

        // The newest vector has not been applied yet; doing so completes the
        // projected matrix and yields the residual coupling in one pass.
        let mut w = vec![0.0; dim];
        apply(&basis[m - 1], &mut w);
        t[(m - 1) * m_max + (m - 1)] = dot(&basis[m - 1], &w);
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                axpy(&mut w, -c, b);
            }
        }
        let beta_m = norm2(&w);

        // Ritz pairs of the projected matrix.
        let tm = Tensor::from_fn([m, m], |idx| Complex::new(t[idx[0] * m_max + idx[1]], 0.0));
        let (vals, vecs) = eigh(&tm)?;
        let scale = vals.iter().fold(1.0f64, |a, &x| a.max(x.abs()));
        let pairs = 2.min(m);
        let converged = (0..pairs).all(|i| {
            let tail = vecs.data()[(m - 1) * m + i].re.abs();
            beta_m * tail <= LANCZOS_TOL * scale
        }) && m >= 2;

        if converged || m >= dim {
            let mut out_vals = Vec::with_capacity(pairs);
            let mut out_vecs = Vec::with_capacity(pairs);
            for i in 0..pairs {
                out_vals.push(vals[i]);
                let mut x = vec![0.0; dim];
                for (jb, b) in basis.iter().enumerate() {
                    axpy(&mut x, vecs.data()[jb * m + i].re, b);
                }
                normalize(&mut x);
                out_vecs.push(x);
            }
            if pairs == 1 {
                out_vals.push(out_vals[0]);
                out_vecs.push(out_vecs[0].clone());
            }
            return Ok((out_vals, out_vecs));
        }

        // Thick restart: keep the lowest Ritz vectors plus the residual.
        let keep = LANCZOS_RESTART_KEEP.min(m - 1);
        let mut new_basis: Vec<Vec<f64>> = Vec::with_capacity(m_max);
        for i in 0..keep {
            let mut x = vec![0.0; dim];
            for (jb, b) in basis.iter().enumerate() {
                axpy(&mut x, vecs.data()[jb * m + i].re, b);
            }
            normalize(&mut x);
            new_basis.push(x);
        }
        for x in &mut w {
            *x /= beta_m;
        }
        new_basis.push(w);
        t.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..keep {
            t[i * m_max + i] = vals[i];
            let s = beta_m * vecs.data()[(m - 1) * m + i].re;
            t[i * m_max + keep] = s;
            t[keep * m_max + i] = s;
        }
        basis = new_basis;
        m = keep + 1;
    }
    Err(CoreError::NoConvergence("lanczos"))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn normalize(v: &mut [f64]) {
    let n = norm2(v);
    if n > 0.0 {
        for x in v {
            *x /= n;
        }
    }
}

/// `sum_sigma p(sigma) sign(Re psi(sigma))` over a dense state
/// (normalization is divided out).
pub fn average_sign_dense(state: &[C64]) -> f64 {
    let total: f64 = state.iter().map(|z| z.norm_sqr()).sum();
    if total <= 0.0 {
        return 0.0;
    }
    state
        .iter()
        .map(|z| z.norm_sqr() * hard_sign(z.re))
        .sum::<f64>()
        / total
}

/// Monte Carlo estimate of the average sign from a sample batch, with the
/// standard error of the mean.
pub fn average_sign_sampled(batch: &SampleBatch) -> (f64, f64) {
    let n = batch.len();
    let signs: Vec<f64> = (0..n).map(|j| hard_sign(batch.amplitude(j).re)).collect();
    let mean: f64 = (0..n).map(|j| batch.weight(j) * signs[j]).sum();
    if batch.has_explicit_weights() || n < 2 {
        return (mean, 0.0);
    }
    let var = signs.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Sublattice mask `[true, false, true, ...]`: even sites on sublattice A.
pub fn even_sublattice(n_sites: usize) -> Vec<bool> {
    (0..n_sites).map(|i| i % 2 == 0).collect()
}

/// Multiply each amplitude by `(-1)^(number of down spins on sublattice A)`.
/// For a bipartite antiferromagnet this removes the ground-state sign
/// structure exactly. The result's global sign is canonicalized so its
/// average sign is nonnegative (the transform is only defined up to a
/// global phase, and tie-broken input phases would otherwise leak through).
pub fn marshall_transform(state: &[C64], n_sites: usize, sublattice_a: &[bool]) -> Result<Vec<C64>> {
    if state.len() != 1 << n_sites {
        return Err(CoreError::dim("state length vs site count"));
    }
    if sublattice_a.len() != n_sites {
        return Err(CoreError::dim("sublattice mask length vs site count"));
    }
    let mut mask = 0usize;
    for (i, &on_a) in sublattice_a.iter().enumerate() {
        if on_a {
            mask |= 1 << (n_sites - 1 - i);
        }
    }
    let mut out: Vec<C64> = state
        .iter()
        .enumerate()
        .map(|(idx, &z)| {
            if (idx & mask).count_ones() % 2 == 1 {
                -z
            } else {
                z
            }
        })
        .collect();
    if average_sign_dense(&out) < 0.0 {
        for z in &mut out {
            *z = -*z;
        }
    }
    Ok(out)
}
