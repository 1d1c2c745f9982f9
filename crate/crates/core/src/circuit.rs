//! Parametrized local circuits in a brick-wall layout.
//!
//! Two gate families are supported: single-site z rotations
//! `rz(theta) = diag(exp(-i theta/2), exp(i theta/2))` and general two-qubit
//! unitaries `U = exp(-i H)` where `H` is an arbitrary 4x4 Hermitian matrix
//! built from 16 real parameters. Both are smooth in their parameters and
//! exactly unitary at every parameter value, so an optimizer can walk the
//! parameter space freely without leaving the unitary manifold.
//!
//! The general-gate parameter layout (used by [`GateSpec::params`] and the
//! gradient) is: `params[0..4]` are the diagonal entries `H[i][i]`, followed
//! by (real, imaginary) pairs of the upper triangle in the order
//! (0,1), (0,2), (0,3), (1,2), (1,3), (2,3); the lower triangle is the
//! conjugate.
//!
//! Gradients propagate through the matrix exponential with the standard
//! spectral rule: if `H = W L W^dag` and `Gbar` is the gradient with respect
//! to the gate entries, the gradient with respect to `H` is
//! `E = W (conj(K) .* Phi)^T W^dag` with `K = W^dag Gbar W` and
//! `Phi_pq = -i exp(-i (l_p + l_q)/2) sinc((l_p - l_q)/2)`,
//! which is stable under degenerate eigenvalues.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex;
#[allow(unused_imports)]
use num_traits::Float;

use crate::dense;
use crate::error::{CoreError, Result};
use crate::linalg::eigh;
use crate::mps::{GateApplication, MatrixProductState, TruncOptions};
use crate::tensor::{matmul, Tensor, C64};

/// Upper-triangle pair order for the general-gate Hermitian generator.
pub const HERMITIAN_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Parameters per general two-qubit gate: 4 diagonal + 6 complex off-diagonal.
pub const GENERAL_GATE_PARAMS: usize = 16;

/// Supported gate families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum GateKind {
    /// Single-site z rotation, one angle parameter.
    Rz,
    /// General two-qubit unitary `exp(-i H)`, 16 real parameters.
    GeneralTwoQubit,
}

impl GateKind {
    /// Number of sites the gate acts on.
    pub fn arity(self) -> usize {
        match self {
            GateKind::Rz => 1,
            GateKind::GeneralTwoQubit => 2,
        }
    }

    /// Number of real parameters per gate.
    pub fn param_count(self) -> usize {
        match self {
            GateKind::Rz => 1,
            GateKind::GeneralTwoQubit => GENERAL_GATE_PARAMS,
        }
    }
}

/// One placed gate: a family, the leftmost site it touches, and its
/// parameters. Multi-site gates act on consecutive sites.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GateSpec {
    pub kind: GateKind,
    pub site: usize,
    pub params: Vec<f64>,
}

impl GateSpec {
    /// A z rotation on `site`.
    pub fn rz(site: usize, theta: f64) -> Self {
        GateSpec {
            kind: GateKind::Rz,
            site,
            params: vec![theta],
        }
    }

    /// A general two-qubit gate on `(site, site + 1)`.
    pub fn general(site: usize, params: [f64; GENERAL_GATE_PARAMS]) -> Self {
        GateSpec {
            kind: GateKind::GeneralTwoQubit,
            site,
            params: params.to_vec(),
        }
    }

    /// Sites covered by this gate, leftmost first.
    pub fn support(&self) -> core::ops::Range<usize> {
        self.site..self.site + self.kind.arity()
    }

    pub fn validate(&self, n_sites: usize) -> Result<()> {
        if self.params.len() != self.kind.param_count() {
            return Err(CoreError::dim(format_args!(
                "gate at site {} expects {} params, got {}",
                self.site,
                self.kind.param_count(),
                self.params.len()
            )));
        }
        if self.site + self.kind.arity() > n_sites {
            return Err(CoreError::dim(format_args!(
                "gate support {:?} exceeds {} sites",
                self.support(),
                n_sites
            )));
        }
        if !self.params.iter().all(|p| p.is_finite()) {
            return Err(CoreError::NonFinite("gate parameters".into()));
        }
        Ok(())
    }

    /// Build the unitary matrix: 2x2 for one-site gates, 4x4 for two-site.
    pub fn materialize(&self) -> Result<Tensor> {
        match self.kind {
            GateKind::Rz => {
                let theta = self.params[0];
                let half = Complex::new(0.0, -theta / 2.0).exp();
                Tensor::new(
                    [2, 2],
                    vec![half, C64::default(), C64::default(), half.conj()],
                )
            }
            GateKind::GeneralTwoQubit => {
                let (eigs, basis) = self.generator_eigs()?;
                // U = W exp(-i L) W^dag.
                let mut phases = Tensor::zeros([4, 4]);
                for (i, l) in eigs.iter().enumerate() {
                    phases.set(&[i, i], Complex::new(0.0, -l).exp())?;
                }
                matmul(&matmul(&basis, &phases)?, &basis.dagger()?)
            }
        }
    }

    /// Hermitian generator of a general gate, from the parameter layout in
    /// the module docs.
    pub fn generator(&self) -> Result<Tensor> {
        if self.kind != GateKind::GeneralTwoQubit {
            return Err(CoreError::arg("only general gates have a generator"));
        }
        let p = &self.params;
        let mut h = Tensor::zeros([4, 4]);
        for i in 0..4 {
            h.set(&[i, i], Complex::new(p[i], 0.0))?;
        }
        for (k, &(i, j)) in HERMITIAN_PAIRS.iter().enumerate() {
            let entry = Complex::new(p[4 + 2 * k], p[5 + 2 * k]);
            h.set(&[i, j], entry)?;
            h.set(&[j, i], entry.conj())?;
        }
        Ok(h)
    }

    fn generator_eigs(&self) -> Result<(Vec<f64>, Tensor)> {
        eigh(&self.generator()?)
    }

    /// Pull a gradient with respect to the unitary's entries back to the
    /// gate parameters. `gate_adjoint` uses the Wirtinger convention
    /// `d/dRe + i d/dIm` of a real scalar objective.
    pub fn parameter_gradient(&self, gate_adjoint: &Tensor) -> Result<Vec<f64>> {
        match self.kind {
            GateKind::Rz => {
                if gate_adjoint.shape() != [2, 2] {
                    return Err(CoreError::dim("rz adjoint must be 2x2"));
                }
                let theta = self.params[0];
                let d00 = Complex::new(0.0, -0.5) * Complex::new(0.0, -theta / 2.0).exp();
                let d11 = Complex::new(0.0, 0.5) * Complex::new(0.0, theta / 2.0).exp();
                let g00 = gate_adjoint.get(&[0, 0])?;
                let g11 = gate_adjoint.get(&[1, 1])?;
                Ok(vec![(g00.conj() * d00 + g11.conj() * d11).re])
            }
            GateKind::GeneralTwoQubit => {
                if gate_adjoint.shape() != [4, 4] {
                    return Err(CoreError::dim("general-gate adjoint must be 4x4"));
                }
                let (eigs, basis) = self.generator_eigs()?;
                let k = matmul(&matmul(&basis.dagger()?, gate_adjoint)?, &basis)?;
                // S_pq = conj(K_pq) * Phi_pq, then E = W S^T W^dag gives
                // dY = Re tr(E dH) for any Hermitian perturbation dH.
                let mut s_t = Tensor::zeros([4, 4]);
                for p in 0..4 {
                    for q in 0..4 {
                        let mid = Complex::new(0.0, -(eigs[p] + eigs[q]) / 2.0).exp();
                        let phi = Complex::new(0.0, -1.0) * mid * sinc((eigs[p] - eigs[q]) / 2.0);
                        s_t.set(&[q, p], k.get(&[p, q])?.conj() * phi)?;
                    }
                }
                let e = matmul(&matmul(&basis, &s_t)?, &basis.dagger()?)?;
                let mut grad = vec![0.0; GENERAL_GATE_PARAMS];
                for (i, slot) in grad.iter_mut().enumerate().take(4) {
                    *slot = e.get(&[i, i])?.re;
                }
                for (kk, &(i, j)) in HERMITIAN_PAIRS.iter().enumerate() {
                    let eij = e.get(&[i, j])?;
                    let eji = e.get(&[j, i])?;
                    grad[4 + 2 * kk] = (eij + eji).re;
                    grad[5 + 2 * kk] = eij.im - eji.im;
                }
                Ok(grad)
            }
        }
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Gates that act simultaneously; their supports must be disjoint.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Layer {
    pub gates: Vec<GateSpec>,
}

impl Layer {
    pub fn new(gates: Vec<GateSpec>) -> Self {
        Layer { gates }
    }
}

/// A layered circuit over `n_sites` spins.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Circuit {
    pub n_sites: usize,
    pub layers: Vec<Layer>,
}

/// Truncation bookkeeping from running a circuit over an MPS.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CircuitApplication {
    /// Sum of per-gate discarded Schmidt weight fractions.
    pub total_truncation: f64,
    /// Largest single-gate discarded fraction.
    pub max_truncation: f64,
    /// Largest bond dimension reached.
    pub max_bond: usize,
}

impl Circuit {
    pub fn new(n_sites: usize, layers: Vec<Layer>) -> Result<Self> {
        let circuit = Circuit { n_sites, layers };
        circuit.validate()?;
        Ok(circuit)
    }

    /// Brick-wall circuit of `depth` layers. For two-site gates the layers
    /// alternate between even-start pairs (0,1), (2,3), ... and odd-start
    /// pairs (1,2), (3,4), ...; for z rotations every layer covers all
    /// sites. All parameters start at zero (identity circuit).
    pub fn brick_wall(n_sites: usize, depth: usize, kind: GateKind) -> Result<Self> {
        if n_sites == 0 {
            return Err(CoreError::arg("circuit needs at least one site"));
        }
        let mut layers = Vec::with_capacity(depth);
        for layer_idx in 0..depth {
            let gates = match kind {
                GateKind::Rz => (0..n_sites).map(|s| GateSpec::rz(s, 0.0)).collect(),
                GateKind::GeneralTwoQubit => {
                    let start = layer_idx % 2;
                    (start..n_sites.saturating_sub(1))
                        .step_by(2)
                        .map(|s| GateSpec::general(s, [0.0; GENERAL_GATE_PARAMS]))
                        .collect()
                }
            };
            layers.push(Layer::new(gates));
        }
        Circuit::new(n_sites, layers)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites == 0 {
            return Err(CoreError::arg("circuit needs at least one site"));
        }
        for (li, layer) in self.layers.iter().enumerate() {
            let mut occupied = vec![false; self.n_sites];
            for gate in &layer.gates {
                gate.validate(self.n_sites)?;
                for s in gate.support() {
                    if occupied[s] {
                        return Err(CoreError::arg(format_args!(
                            "layer {li}: overlapping gates at site {s}"
                        )));
                    }
                    occupied[s] = true;
                }
            }
        }
        Ok(())
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn n_gates(&self) -> usize {
        self.layers.iter().map(|l| l.gates.len()).sum()
    }

    /// Total number of real parameters.
    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .flat_map(|l| &l.gates)
            .map(|g| g.kind.param_count())
            .sum()
    }

    /// Flatten all parameters, layer by layer, gates in listed order.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            for gate in &layer.gates {
                out.extend_from_slice(&gate.params);
            }
        }
        out
    }

    /// Overwrite all parameters from a flat vector in [`Circuit::params`]
    /// order.
    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(CoreError::dim(format_args!(
                "expected {} params, got {}",
                self.param_count(),
                params.len()
            )));
        }
        let mut cursor = 0;
        for layer in &mut self.layers {
            for gate in &mut layer.gates {
                let n = gate.kind.param_count();
                gate.params.copy_from_slice(&params[cursor..cursor + n]);
                cursor += n;
            }
        }
        Ok(())
    }

    /// Run the circuit over a dense statevector in place.
    pub fn apply_to_dense(&self, state: &mut [C64]) -> Result<()> {
        for layer in &self.layers {
            for gate in &layer.gates {
                let matrix = gate.materialize()?;
                match gate.kind.arity() {
                    1 => dense::apply_one_site(state, self.n_sites, gate.site, &matrix)?,
                    _ => dense::apply_two_site(state, self.n_sites, gate.site, &matrix)?,
                }
            }
        }
        Ok(())
    }

    /// Run the circuit over an MPS, truncating after each two-site gate.
    /// Returns the transformed state and truncation statistics.
    pub fn apply_to_mps(
        &self,
        psi: &MatrixProductState,
        opts: &TruncOptions,
    ) -> Result<(MatrixProductState, CircuitApplication)> {
        if psi.n_sites() != self.n_sites {
            return Err(CoreError::dim(format_args!(
                "circuit on {} sites, state on {}",
                self.n_sites,
                psi.n_sites()
            )));
        }
        let mut state = psi.clone();
        let mut stats = CircuitApplication::default();
        for layer in &self.layers {
            for gate in &layer.gates {
                let matrix = gate.materialize()?;
                let GateApplication {
                    truncation_error,
                    bond,
                    ..
                } = match gate.kind.arity() {
                    1 => state.apply_one_site_gate(gate.site, &matrix, opts)?,
                    _ => state.apply_two_qubit_gate(gate.site, &matrix, opts)?,
                };
                stats.total_truncation += truncation_error;
                stats.max_truncation = stats.max_truncation.max(truncation_error);
                stats.max_bond = stats.max_bond.max(bond);
            }
        }
        Ok((state, stats))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mps::unitary_deviation;
    use approx::assert_abs_diff_eq;
    use rand_chacha::ChaCha12Rng;
    use rand_core::SeedableRng;

    fn random_general(site: usize, rng: &mut ChaCha12Rng, scale: f64) -> GateSpec {
        let mut params = [0.0; GENERAL_GATE_PARAMS];
        for p in params.iter_mut() {
            *p = scale * crate::util::normal_f64(rng);
        }
        GateSpec::general(site, params)
    }

    #[test]
    fn rz_matches_the_closed_form() {
        let gate = GateSpec::rz(0, core::f64::consts::PI).materialize().unwrap();
        assert_abs_diff_eq!(gate.get(&[0, 0]).unwrap().im, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(gate.get(&[1, 1]).unwrap().im, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(gate.get(&[0, 1]).unwrap().norm(), 0.0);
    }

    #[test]
    fn zero_parameters_give_the_identity() {
        let gate = GateSpec::general(0, [0.0; 16]).materialize().unwrap();
        assert!(crate::mps::identity_deviation(&gate) < 1e-14);
    }

    #[test]
    fn general_gates_are_unitary_for_random_parameters() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..10 {
            let gate = random_general(0, &mut rng, 1.5).materialize().unwrap();
            assert!(unitary_deviation(&gate).unwrap() < 1e-12);
        }
    }

    #[test]
    fn brick_wall_alternates_pair_starts() {
        let circuit = Circuit::brick_wall(6, 3, GateKind::GeneralTwoQubit).unwrap();
        let starts: Vec<Vec<usize>> = circuit
            .layers
            .iter()
            .map(|l| l.gates.iter().map(|g| g.site).collect())
            .collect();
        assert_eq!(starts, vec![vec![0, 2, 4], vec![1, 3], vec![0, 2, 4]]);
        assert_eq!(circuit.param_count(), 8 * GENERAL_GATE_PARAMS);

        let rz = Circuit::brick_wall(5, 2, GateKind::Rz).unwrap();
        assert_eq!(rz.n_gates(), 10);
        assert_eq!(rz.param_count(), 10);
    }

    #[test]
    fn params_roundtrip_through_the_flat_vector() {
        let mut circuit = Circuit::brick_wall(4, 2, GateKind::GeneralTwoQubit).unwrap();
        let mut values: Vec<f64> = (0..circuit.param_count()).map(|i| i as f64 * 0.1).collect();
        circuit.set_params(&values).unwrap();
        assert_eq!(circuit.params(), values);
        values.pop();
        assert!(circuit.set_params(&values).is_err());
    }

    #[test]
    fn overlapping_gates_are_rejected() {
        let layer = Layer::new(vec![GateSpec::general(0, [0.0; 16]), GateSpec::general(1, [0.0; 16])]);
        assert!(Circuit::new(4, vec![layer]).is_err());
    }

    /// Finite-difference check of the parameter pullback for a generic
    /// linear objective Y = Re sum_ab conj(M_ab) U_ab, whose gate adjoint
    /// is exactly M.
    #[test]
    fn parameter_gradient_matches_finite_differences() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let mut probe = Tensor::zeros([4, 4]);
        for r in 0..4 {
            for c in 0..4 {
                probe
                    .set(
                        &[r, c],
                        C64::new(
                            crate::util::normal_f64(&mut rng),
                            crate::util::normal_f64(&mut rng),
                        ),
                    )
                    .unwrap();
            }
        }
        let objective = |spec: &GateSpec, m: &Tensor| -> f64 {
            let u = spec.materialize().unwrap();
            u.data()
                .iter()
                .zip(m.data())
                .map(|(u, m)| (m.conj() * u).re)
                .sum()
        };

        let spec = random_general(0, &mut rng, 0.8);
        let grad = spec.parameter_gradient(&probe).unwrap();
        let h = 1e-6;
        for k in 0..GENERAL_GATE_PARAMS {
            let mut plus = spec.clone();
            plus.params[k] += h;
            let mut minus = spec.clone();
            minus.params[k] -= h;
            let fd = (objective(&plus, &probe) - objective(&minus, &probe)) / (2.0 * h);
            assert_abs_diff_eq!(grad[k], fd, epsilon = 1e-6);
        }

        let probe2 = Tensor::new(
            [2, 2],
            vec![
                C64::new(0.4, -0.9),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(-1.3, 0.2),
            ],
        )
        .unwrap();
        let spec = GateSpec::rz(0, 0.73);
        let grad = spec.parameter_gradient(&probe2).unwrap();
        let mut plus = spec.clone();
        plus.params[0] += h;
        let mut minus = spec.clone();
        minus.params[0] -= h;
        let fd = (objective(&plus, &probe2) - objective(&minus, &probe2)) / (2.0 * h);
        assert_abs_diff_eq!(grad[0], fd, epsilon = 1e-8);
    }

    #[test]
    fn degenerate_generators_still_differentiate_cleanly() {
        // Diagonal generator with equal eigenvalues exercises the sinc
        // branch at exactly zero separation.
        let mut params = [0.0; GENERAL_GATE_PARAMS];
        params[0] = 0.5;
        params[1] = 0.5;
        params[2] = 0.5;
        params[3] = 0.5;
        let spec = GateSpec::general(0, params);
        let probe = Tensor::identity(4);
        let grad = spec.parameter_gradient(&probe).unwrap();
        assert!(grad.iter().all(|g| g.is_finite()));
        // Y = Re tr U = 4 cos(0.5) here; dY/d(diag_i) = sin(-0.5) ... check
        // against finite differences.
        let h = 1e-6;
        let mut plus = spec.clone();
        plus.params[0] += h;
        let mut minus = spec.clone();
        minus.params[0] -= h;
        let tr = |s: &GateSpec| s.materialize().unwrap().data().iter().step_by(5).map(|z| z.re).sum::<f64>();
        let fd = (tr(&plus) - tr(&minus)) / (2.0 * h);
        assert_abs_diff_eq!(grad[0], fd, epsilon = 1e-7);
    }
}
