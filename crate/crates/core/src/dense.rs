//! Statevector gate kernels.
//!
//! Index convention matches the MPS layout: site `i` occupies bit
//! `n_sites - 1 - i`, so site 0 is the most significant bit. Two-site
//! gates act on adjacent pairs `(site, site + 1)` whose bits are adjacent;
//! the local row index is `2 * s_i + s_{i+1}`.

use num_complex::Complex;

use crate::error::{CoreError, Result};
use crate::tensor::{Tensor, C64};

const ZERO: C64 = Complex::new(0.0, 0.0);

fn check_state(state: &[C64], n_sites: usize) -> Result<()> {
    if state.len() != 1 << n_sites {
        return Err(CoreError::dim(format_args!(
            "state length {} vs 2^{n_sites}",
            state.len()
        )));
    }
    Ok(())
}

/// Apply a 2x2 gate to `site` in place.
pub fn apply_one_site(state: &mut [C64], n_sites: usize, site: usize, gate: &Tensor) -> Result<()> {
    check_state(state, n_sites)?;
    if site >= n_sites {
        return Err(CoreError::dim("gate site out of range"));
    }
    if gate.shape() != [2, 2] {
        return Err(CoreError::dim("one-site gate must be 2x2"));
    }
    let g = gate.data();
    let bit = n_sites - 1 - site;
    let off = 1usize << bit;
    let low_mask = off - 1;
    for base in 0..state.len() / 2 {
        let i0 = ((base >> bit) << (bit + 1)) | (base & low_mask);
        let i1 = i0 | off;
        let v0 = state[i0];
        let v1 = state[i1];
        state[i0] = g[0] * v0 + g[1] * v1;
        state[i1] = g[2] * v0 + g[3] * v1;
    }
    Ok(())
}

/// Apply a 4x4 gate to the adjacent pair `(site, site + 1)` in place.
pub fn apply_two_site(state: &mut [C64], n_sites: usize, site: usize, gate: &Tensor) -> Result<()> {
    check_state(state, n_sites)?;
    if site + 1 >= n_sites {
        return Err(CoreError::dim("two-site gate needs sites (i, i+1) in range"));
    }
    if gate.shape() != [4, 4] {
        return Err(CoreError::dim("two-site gate must be 4x4"));
    }
    let g = gate.data();
    let lo_bit = n_sites - 2 - site;
    let off_lo = 1usize << lo_bit; // s_{i+1}
    let off_hi = off_lo << 1; // s_i
    let low_mask = off_lo - 1;
    for base in 0..state.len() / 4 {
        let i00 = ((base >> lo_bit) << (lo_bit + 2)) | (base & low_mask);
        let idx = [i00, i00 | off_lo, i00 | off_hi, i00 | off_hi | off_lo];
        let v = [state[idx[0]], state[idx[1]], state[idx[2]], state[idx[3]]];
        for r in 0..4 {
            let row = &g[r * 4..r * 4 + 4];
            state[idx[r]] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
        }
    }
    Ok(())
}

/// Environment of a one-site gate:
/// `E[r][c] = sum_rest out_adjoint[(r, rest)] * conj(input[(c, rest)])`,
/// the gradient of a real scalar with respect to the gate matrix entries
/// (Wirtinger convention, `d/dRe + i d/dIm`).
pub fn gate_environment_one_site(
    out_adjoint: &[C64],
    input: &[C64],
    n_sites: usize,
    site: usize,
) -> Result<Tensor> {
    check_state(out_adjoint, n_sites)?;
    check_state(input, n_sites)?;
    if site >= n_sites {
        return Err(CoreError::dim("gate site out of range"));
    }
    let bit = n_sites - 1 - site;
    let off = 1usize << bit;
    let low_mask = off - 1;
    let mut env = [ZERO; 4];
    for base in 0..input.len() / 2 {
        let i0 = ((base >> bit) << (bit + 1)) | (base & low_mask);
        let i1 = i0 | off;
        let a = [out_adjoint[i0], out_adjoint[i1]];
        let v = [input[i0].conj(), input[i1].conj()];
        for r in 0..2 {
            for c in 0..2 {
                env[r * 2 + c] += a[r] * v[c];
            }
        }
    }
    Tensor::new([2, 2], env.to_vec())
}

/// Environment of a two-site gate on `(site, site + 1)`; see the one-site
/// variant for the convention.
pub fn gate_environment_two_site(
    out_adjoint: &[C64],
    input: &[C64],
    n_sites: usize,
    site: usize,
) -> Result<Tensor> {
    check_state(out_adjoint, n_sites)?;
    check_state(input, n_sites)?;
    if site + 1 >= n_sites {
        return Err(CoreError::dim("two-site gate needs sites (i, i+1) in range"));
    }
    let lo_bit = n_sites - 2 - site;
    let off_lo = 1usize << lo_bit;
    let off_hi = off_lo << 1;
    let low_mask = off_lo - 1;
    let mut env = [ZERO; 16];
    for base in 0..input.len() / 4 {
        let i00 = ((base >> lo_bit) << (lo_bit + 2)) | (base & low_mask);
        let idx = [i00, i00 | off_lo, i00 | off_hi, i00 | off_hi | off_lo];
        let a = [
            out_adjoint[idx[0]],
            out_adjoint[idx[1]],
            out_adjoint[idx[2]],
            out_adjoint[idx[3]],
        ];
        let v = [
            input[idx[0]].conj(),
            input[idx[1]].conj(),
            input[idx[2]].conj(),
            input[idx[3]].conj(),
        ];
        for r in 0..4 {
            for c in 0..4 {
                env[r * 4 + c] += a[r] * v[c];
            }
        }
    }
    Tensor::new([4, 4], env.to_vec())
}
