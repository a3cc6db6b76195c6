//! Ground-truth simulator: a qubit coupled through sigma_z to one or more
//! truncated bosonic modes.
//!
//! The qubit is the first tensor factor; |e> is the +1 eigenstate of sigma_z
//! (index 0) and |g> the -1 eigenstate (index 1). Units have hbar = k_B = 1.

mod measure;
mod metrics;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, expm_unitary, identity, kron, sigma_x, sigma_z, ComplexMatrix, DensityMatrix,
};

pub use measure::{
    generate_trajectory, generate_trajectory_traced, measure_system, sample_categorical,
    MeasurementBasis,
    MeasurementRecord, Trajectory,
};
pub use metrics::{fidelity, reduced_bloch, separability, BlochVector};

pub const EXCITED: usize = 0;
pub const GROUND: usize = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    /// Angular frequency of the oscillator.
    pub omega: f64,
    /// Coupling to the qubit's sigma_z.
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemParams {
    pub g: f64,
    pub b0: f64,
    pub modes: Vec<Mode>,
    pub n_fock: usize,
    pub temperature: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            g: 2.0,
            b0: 1.0,
            modes: vec![Mode {
                omega: 1.0,
                lambda: 0.1,
            }],
            n_fock: 5,
            temperature: 10.0,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_fock < 2 {
            return Err(Error::InvalidParams(format!(
                "n_fock must be >= 2, got {}",
                self.n_fock
            )));
        }
        if self.modes.is_empty() {
            return Err(Error::InvalidParams("at least one bath mode is required".into()));
        }
        if let Some(m) = self.modes.iter().find(|m| !(m.omega > 0.0)) {
            return Err(Error::InvalidParams(format!(
                "mode frequency must be positive, got {}",
                m.omega
            )));
        }
        if !(self.temperature >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        Ok(())
    }

    /// Factor dimensions of the joint space: qubit, then one factor per mode.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![2];
        d.extend(std::iter::repeat_n(self.n_fock, self.modes.len()));
        d
    }

    pub fn bath_dim(&self) -> usize {
        self.n_fock.pow(self.modes.len() as u32)
    }

    /// Qubit-only Hamiltonian -(g/2)(B0 sigma_z + Bx sigma_x).
    pub fn qubit_hamiltonian(&self, bx: f64) -> ComplexMatrix {
        (sigma_z() * c(self.b0, 0.0) + sigma_x() * c(bx, 0.0)) * c(-self.g / 2.0, 0.0)
    }

    /// Control term -(g/2) Bx sigma_x on the qubit alone.
    pub fn control_hamiltonian(&self, bx: f64) -> ComplexMatrix {
        sigma_x() * c(-self.g / 2.0 * bx, 0.0)
    }
}

/// Truncated annihilation operator: a|n> = sqrt(n)|n-1>.
pub fn annihilation(n_fock: usize) -> ComplexMatrix {
    let mut a = ComplexMatrix::zeros(n_fock, n_fock);
    for n in 1..n_fock {
        a[(n - 1, n)] = c((n as f64).sqrt(), 0.0);
    }
    a
}

/// `op` on mode `k` of `n_modes`, identity elsewhere.
fn mode_operator(op: &ComplexMatrix, k: usize, n_modes: usize, n_fock: usize) -> ComplexMatrix {
    let id = identity(n_fock);
    let mut out = identity(1);
    for j in 0..n_modes {
        out = kron(&out, if j == k { op } else { &id });
    }
    out
}

/// Joint Hamiltonian H_0 + H_c + H_bath + H_int on qubit ⊗ modes.
pub fn build_hamiltonian(p: &SystemParams, bx: f64) -> ComplexMatrix {
    let nm = p.modes.len();
    let bath_dim = p.bath_dim();
    let id_bath = identity(bath_dim);
    let a = annihilation(p.n_fock);
    let number = a.adjoint() * &a;
    let quadrature = &a + a.adjoint();

    let mut h = kron(&p.qubit_hamiltonian(bx), &id_bath);
    let mut h_bath = ComplexMatrix::zeros(bath_dim, bath_dim);
    let mut coupling = ComplexMatrix::zeros(bath_dim, bath_dim);
    for (k, mode) in p.modes.iter().enumerate() {
        h_bath += mode_operator(&number, k, nm, p.n_fock) * c(mode.omega, 0.0);
        coupling += mode_operator(&quadrature, k, nm, p.n_fock) * c(mode.lambda, 0.0);
    }
    h += kron(&identity(2), &h_bath);
    h += kron(&sigma_z(), &coupling);
    h
}

/// Gibbs state of one truncated mode, renormalized after truncation.
pub fn thermal_state(omega: f64, temperature: f64, n_fock: usize) -> DensityMatrix {
    let mut m = ComplexMatrix::zeros(n_fock, n_fock);
    if temperature == 0.0 {
        m[(0, 0)] = c(1.0, 0.0);
    } else {
        let weights: Vec<f64> = (0..n_fock)
            .map(|n| (-(n as f64) * omega / temperature).exp())
            .collect();
        let z: f64 = weights.iter().sum();
        for (n, w) in weights.iter().enumerate() {
            m[(n, n)] = c(w / z, 0.0);
        }
    }
    DensityMatrix::from_parts(m, vec![n_fock]).expect("square by construction")
}

/// Thermal state of the whole bath, one factor per mode.
pub fn thermal_bath(p: &SystemParams) -> DensityMatrix {
    let mut it = p
        .modes
        .iter()
        .map(|m| thermal_state(m.omega, p.temperature, p.n_fock));
    let first = it.next().expect("validated: at least one mode");
    it.fold(first, |acc, s| acc.tensor(&s))
}

/// |e><e| ⊗ thermal bath.
pub fn initial_joint_state(p: &SystemParams) -> DensityMatrix {
    with_qubit_state(p, &DensityMatrix::basis_state(2, EXCITED))
}

/// Arbitrary qubit state ⊗ thermal bath.
pub fn with_qubit_state(p: &SystemParams, qubit: &DensityMatrix) -> DensityMatrix {
    qubit.tensor(&thermal_bath(p))
}

/// U rho U^H with U = exp(-i H dt).
pub fn evolve(rho: &DensityMatrix, h: &ComplexMatrix, dt: f64) -> Result<DensityMatrix> {
    let u = expm_unitary(h, dt)?;
    conjugate(rho, &u)
}

/// U rho U^H for a precomputed propagator.
pub fn conjugate(rho: &DensityMatrix, u: &ComplexMatrix) -> Result<DensityMatrix> {
    if u.nrows() != rho.dim() || !u.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "propagator {}x{} vs state dim {}",
            u.nrows(),
            u.ncols(),
            rho.dim()
        )));
    }
    let m = u * rho.matrix() * u.adjoint();
    DensityMatrix::from_parts(m, rho.dims().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{herm_eig, max_abs_diff, random};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single_mode(lambda: f64, n_fock: usize, temperature: f64) -> SystemParams {
        SystemParams {
            modes: vec![Mode { omega: 1.0, lambda }],
            n_fock,
            temperature,
            ..Default::default()
        }
    }

    #[test]
    fn decoupled_hamiltonian_commutes_with_sigma_z() {
        let p = single_mode(0.0, 4, 1.0);
        let h = build_hamiltonian(&p, 0.0);
        let z = kron(&sigma_z(), &identity(4));
        assert!(max_abs_diff(&(&h * &z), &(&z * &h)) < 1e-14);
        assert!(crate::linalg::hermiticity_error(&h) == 0.0);
    }

    #[test]
    fn smallest_truncation_coupling_block() {
        let p = single_mode(0.3, 2, 1.0);
        assert_eq!(annihilation(2)[(0, 1)], c(1.0, 0.0));
        let h = build_hamiltonian(&p, 0.0);
        // qubit |e> block (rows/cols 0..2): -(g/2)B0 + omega n + lambda (a + a^H)
        assert_eq!(h[(0, 1)], c(0.3, 0.0));
        assert_eq!(h[(1, 0)], c(0.3, 0.0));
        // |g> block carries -lambda
        assert_eq!(h[(2, 3)], c(-0.3, 0.0));
        // no cross-qubit terms without a control field
        assert_eq!(h[(0, 2)], c(0.0, 0.0));
    }

    #[test]
    fn decoupled_spectrum() {
        // -sigma_z ⊗ I + I ⊗ n for g = 2, B0 = 1, omega = 1, N = 2
        let p = single_mode(0.0, 2, 1.0);
        let e = herm_eig(&build_hamiltonian(&p, 0.0)).unwrap();
        let expect = [-1.0, 0.0, 1.0, 2.0];
        for (a, b) in e.values.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14, "{:?}", e.values);
        }
    }

    #[test]
    fn control_field_enters_as_sigma_x() {
        let p = single_mode(0.0, 2, 1.0);
        let h = build_hamiltonian(&p, 0.5);
        // -(g/2) Bx = -0.5 between |e,n> and |g,n>
        assert_eq!(h[(0, 2)], c(-0.5, 0.0));
        assert_eq!(h[(1, 3)], c(-0.5, 0.0));
    }

    #[test]
    fn thermal_zero_temperature_is_vacuum() {
        let s = thermal_state(1.0, 0.0, 5);
        assert_eq!(s.matrix(), &crate::linalg::basis_projector(5, 0));
    }

    #[test]
    fn thermal_high_temperature_is_flat() {
        let s = thermal_state(1.0, 1e9, 5);
        for n in 0..5 {
            assert!((s.matrix()[(n, n)].re - 0.2).abs() < 1e-6);
        }
    }

    #[test]
    fn thermal_unit_temperature() {
        let s = thermal_state(1.0, 1.0, 5);
        let z: f64 = (0..5).map(|n| (-(n as f64)).exp()).sum();
        for n in 0..5 {
            assert!((s.matrix()[(n, n)].re - (-(n as f64)).exp() / z).abs() < 1e-15);
        }
        assert!((s.trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn initial_state_product_structure() {
        let p = single_mode(0.1, 5, 0.0);
        let rho = initial_joint_state(&p);
        assert_eq!(rho.dims(), &[2, 5]);
        let expect = kron(&crate::linalg::basis_projector(2, 0), &crate::linalg::basis_projector(5, 0));
        assert_eq!(rho.matrix(), &expect);
        let q = rho.partial_trace(0).unwrap();
        assert_eq!(q.matrix(), &crate::linalg::basis_projector(2, EXCITED));
    }

    #[test]
    fn initial_state_purity_is_bath_purity() {
        let p = single_mode(0.1, 5, 1.0);
        let rho = initial_joint_state(&p);
        let bath = thermal_state(1.0, 1.0, 5);
        assert!((rho.purity() - bath.purity()).abs() < 1e-14);
        rho.validate().unwrap();
    }

    #[test]
    fn evolve_trivial_and_spectrum_preserving() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rho = DensityMatrix::new(random::density(6, &mut rng), vec![2, 3]).unwrap();
        let same = evolve(&rho, &ComplexMatrix::zeros(6, 6), 0.4).unwrap();
        assert!(max_abs_diff(same.matrix(), rho.matrix()) < 1e-15);

        let h = random::hermitian(6, 1.0, &mut rng);
        let out = evolve(&rho, &h, 0.9).unwrap();
        assert!((out.purity() - rho.purity()).abs() < 1e-12);
        let before = herm_eig(rho.matrix()).unwrap().values;
        let after = herm_eig(&crate::linalg::hermitize(out.matrix())).unwrap().values;
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn larmor_precession() {
        let p = SystemParams::default();
        let h = p.qubit_hamiltonian(0.0);
        let plus = DensityMatrix::pure(&[c(1.0, 0.0), c(1.0, 0.0)], vec![2]).unwrap();
        let rate = p.g * p.b0;
        for &t in &[0.1, 0.5, 1.3] {
            let b = reduced_bloch(&evolve(&plus, &h, t).unwrap()).unwrap();
            // H = -(g/2) B0 sigma_z turns the Bloch vector clockwise about +z
            assert!((b.x - (rate * t).cos()).abs() < 1e-12);
            assert!((b.y + (rate * t).sin()).abs() < 1e-12);
            assert!(b.z.abs() < 1e-12);
        }
    }

    #[test]
    fn params_validation() {
        let p = SystemParams { n_fock: 1, ..SystemParams::default() };
        assert!(p.validate().is_err());
        let mut p = SystemParams::default();
        p.modes[0].omega = 0.0;
        assert!(p.validate().is_err());
        let p = SystemParams { temperature: -1.0, ..SystemParams::default() };
        assert!(p.validate().is_err());
        assert!(SystemParams::default().validate().is_ok());
    }
}
