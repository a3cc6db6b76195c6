use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    c, check_hermitian, expm_unitary, herm_eig, identity, kron, random, ComplexMatrix,
    DensityMatrix, Superoperator, C64,
};

/// Default initialization scale: H entries ~ 0.1 / dt.
pub const INIT_SCALE: f64 = 0.1;

/// Effective-reservoir model: a Hermitian generator on
/// system ⊗ reservoir ⊗ ancilla whose Stinespring channel
/// `Phi[rho] = tr_A(U (rho ⊗ rho_A) U^H)`, `U = exp(-i H dt)`, advances the
/// system+reservoir state by one time step.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingModel {
    d_s: usize,
    d_er: usize,
    d_a: usize,
    dt: f64,
    h: ComplexMatrix,
    rho_er0: DensityMatrix,
    rho_a: DensityMatrix,
}

impl EmbeddingModel {
    pub fn new(
        d_s: usize,
        d_er: usize,
        d_a: usize,
        dt: f64,
        h: ComplexMatrix,
        rho_er0: DensityMatrix,
        rho_a: DensityMatrix,
    ) -> Result<Self> {
        if d_s == 0 || d_er == 0 || d_a == 0 {
            return Err(Error::InvalidParams("model dimensions must be >= 1".into()));
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidParams(format!("dt must be positive, got {dt}")));
        }
        let total = d_s * d_er * d_a;
        if h.nrows() != total || h.ncols() != total {
            return Err(Error::DimensionMismatch(format!(
                "H must be {total}x{total}, got {}x{}",
                h.nrows(),
                h.ncols()
            )));
        }
        check_hermitian(&h)?;
        if rho_er0.dim() != d_er || rho_a.dim() != d_a {
            return Err(Error::DimensionMismatch(format!(
                "reservoir/ancilla states have dims {}/{}, expected {d_er}/{d_a}",
                rho_er0.dim(),
                rho_a.dim()
            )));
        }
        rho_er0.validate()?;
        rho_a.validate()?;
        Ok(Self {
            d_s,
            d_er,
            d_a,
            dt,
            h: crate::linalg::hermitize(&h),
            rho_er0: rho_er0.with_dims(vec![d_er])?,
            rho_a: rho_a.with_dims(vec![d_a])?,
        })
    }

    /// Random Hermitian H with scale `INIT_SCALE / dt`, reservoir I/d_ER,
    /// ancilla |0><0| and d_A = d_S * d_ER.
    pub fn init(d_s: usize, d_er: usize, dt: f64, seed: u64) -> Result<Self> {
        Self::init_scaled(d_s, d_er, dt, seed, INIT_SCALE)
    }

    pub fn init_scaled(d_s: usize, d_er: usize, dt: f64, seed: u64, scale: f64) -> Result<Self> {
        if d_s == 0 || d_er == 0 {
            return Err(Error::InvalidParams("model dimensions must be >= 1".into()));
        }
        let d_a = d_s * d_er;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random::hermitian(d_s * d_er * d_a, scale / dt, &mut rng);
        Self::new(
            d_s,
            d_er,
            d_a,
            dt,
            h,
            DensityMatrix::maximally_mixed(d_er),
            DensityMatrix::basis_state(d_a, 0),
        )
    }

    /// Closed-system embedding: H = H_S ⊗ I_ER ⊗ I_A, so the ancilla never
    /// couples and the channel is conjugation by exp(-i H_S dt) ⊗ I_ER.
    pub fn closed_system(h_s: &ComplexMatrix, d_er: usize, dt: f64) -> Result<Self> {
        let d_s = h_s.nrows();
        let d_a = d_s * d_er;
        let h = kron(&kron(h_s, &identity(d_er)), &identity(d_a));
        Self::new(
            d_s,
            d_er,
            d_a,
            dt,
            h,
            DensityMatrix::maximally_mixed(d_er),
            DensityMatrix::basis_state(d_a, 0),
        )
    }

    pub fn d_s(&self) -> usize {
        self.d_s
    }

    pub fn d_er(&self) -> usize {
        self.d_er
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.h
    }

    pub fn rho_er0(&self) -> &DensityMatrix {
        &self.rho_er0
    }

    pub fn rho_a(&self) -> &DensityMatrix {
        &self.rho_a
    }

    /// Dimension of the system+reservoir space the channel acts on.
    pub fn sys_dim(&self) -> usize {
        self.d_s * self.d_er
    }

    pub fn total_dim(&self) -> usize {
        self.sys_dim() * self.d_a
    }

    pub fn n_params(&self) -> usize {
        self.total_dim() * self.total_dim()
    }

    /// rho0_S ⊗ rho_ER0 with dims (d_S, d_ER).
    pub fn initial_state(&self, rho0_s: &DensityMatrix) -> Result<DensityMatrix> {
        if rho0_s.dim() != self.d_s {
            return Err(Error::DimensionMismatch(format!(
                "initial system state has dim {}, model d_S = {}",
                rho0_s.dim(),
                self.d_s
            )));
        }
        rho0_s
            .clone()
            .with_dims(vec![self.d_s])?
            .tensor(&self.rho_er0)
            .with_dims(vec![self.d_s, self.d_er])
    }

    /// Real parameter vector: diagonal entries first, then (Re, Im) of each
    /// upper-triangular entry in row-major order.
    pub fn params(&self) -> Vec<f64> {
        hermitian_to_params(&self.h)
    }

    pub fn set_params(&mut self, theta: &[f64]) -> Result<()> {
        self.h = params_to_hermitian(theta, self.total_dim())?;
        Ok(())
    }

    pub fn with_hamiltonian(&self, h: ComplexMatrix) -> Result<Self> {
        Self::new(
            self.d_s,
            self.d_er,
            self.d_a,
            self.dt,
            h,
            self.rho_er0.clone(),
            self.rho_a.clone(),
        )
    }

    pub fn unitary(&self) -> Result<ComplexMatrix> {
        expm_unitary(&self.h, self.dt)
    }

    /// Kraus form of the Stinespring channel.
    pub fn channel(&self) -> Result<Channel> {
        Channel::from_dilation(
            &self.unitary()?,
            self.rho_a.matrix(),
            self.sys_dim(),
        )
    }

    /// One application of the channel to a system+reservoir state.
    pub fn apply_channel(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.sys_dim() {
            return Err(Error::DimensionMismatch(format!(
                "state dim {} vs model system+reservoir dim {}",
                rho.dim(),
                self.sys_dim()
            )));
        }
        let out = self.channel()?.apply(rho.matrix());
        DensityMatrix::from_parts(out, rho.dims().to_vec())
    }
}

/// Index of the parameter holding H[mu][mu].
pub fn diag_param_index(mu: usize) -> usize {
    mu
}

/// Indices of the (Re, Im) parameters of H[mu][nu], mu < nu.
pub fn offdiag_param_index(mu: usize, nu: usize, dim: usize) -> (usize, usize) {
    debug_assert!(mu < nu && nu < dim);
    // pairs before row mu: sum_{r<mu} (dim - 1 - r)
    let before = mu * (2 * dim - mu - 1) / 2;
    let k = dim + 2 * (before + (nu - mu - 1));
    (k, k + 1)
}

pub fn hermitian_to_params(h: &ComplexMatrix) -> Vec<f64> {
    let d = h.nrows();
    let mut theta = Vec::with_capacity(d * d);
    for mu in 0..d {
        theta.push(h[(mu, mu)].re);
    }
    for mu in 0..d {
        for nu in mu + 1..d {
            theta.push(h[(mu, nu)].re);
            theta.push(h[(mu, nu)].im);
        }
    }
    theta
}

pub fn params_to_hermitian(theta: &[f64], d: usize) -> Result<ComplexMatrix> {
    if theta.len() != d * d {
        return Err(Error::DimensionMismatch(format!(
            "{} parameters for a {d}x{d} Hermitian matrix",
            theta.len()
        )));
    }
    let mut h = ComplexMatrix::zeros(d, d);
    for mu in 0..d {
        h[(mu, mu)] = c(theta[mu], 0.0);
    }
    let mut k = d;
    for mu in 0..d {
        for nu in mu + 1..d {
            let z = c(theta[k], theta[k + 1]);
            h[(mu, nu)] = z;
            h[(nu, mu)] = z.conj();
            k += 2;
        }
    }
    Ok(h)
}

/// A CPTP map in Kraus form, `rho -> sum_k K_k rho K_k^H`.
#[derive(Clone, Debug)]
pub struct Channel {
    kraus: Vec<ComplexMatrix>,
}

impl Channel {
    /// Kraus operators of tr_A(U (rho ⊗ rho_A) U^H). The ancilla is the last
    /// tensor factor of U's space.
    pub fn from_dilation(u: &ComplexMatrix, rho_a: &ComplexMatrix, sys_dim: usize) -> Result<Self> {
        let d_a = rho_a.nrows();
        if u.nrows() != sys_dim * d_a {
            return Err(Error::DimensionMismatch(format!(
                "dilation unitary {}x{} vs {sys_dim} x {d_a}",
                u.nrows(),
                u.ncols()
            )));
        }
        let anc = herm_eig(rho_a)?;
        let mut kraus = Vec::new();
        for (j, &pj) in anc.values.iter().enumerate() {
            if pj <= 1e-15 {
                continue;
            }
            let w = pj.sqrt();
            let phi = anc.vectors.column(j);
            for a in 0..d_a {
                let mut k = ComplexMatrix::zeros(sys_dim, sys_dim);
                for s in 0..sys_dim {
                    for t in 0..sys_dim {
                        let mut acc = C64::new(0.0, 0.0);
                        for b in 0..d_a {
                            acc += u[(s * d_a + a, t * d_a + b)] * phi[b];
                        }
                        k[(s, t)] = acc * w;
                    }
                }
                kraus.push(k);
            }
        }
        Ok(Self { kraus })
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn dim(&self) -> usize {
        self.kraus[0].nrows()
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(rho.nrows(), rho.ncols());
        for k in &self.kraus {
            out += k * rho * k.adjoint();
        }
        out
    }

    /// Heisenberg-picture adjoint, `Y -> sum_k K_k^H Y K_k`.
    pub fn apply_adjoint(&self, y: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(y.nrows(), y.ncols());
        for k in &self.kraus {
            out += k.adjoint() * y * k;
        }
        out
    }

    pub fn superoperator(&self) -> Superoperator {
        let d = self.dim();
        let mut m = ComplexMatrix::zeros(d * d, d * d);
        for k in &self.kraus {
            m += Superoperator::conjugation(k, k).into_matrix();
        }
        Superoperator::from_matrix(d, m).expect("square by construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, partial_trace, trace};

    #[test]
    fn init_is_hermitian_and_seeded() {
        let a = EmbeddingModel::init(2, 2, 0.2, 9).unwrap();
        let b = EmbeddingModel::init(2, 2, 0.2, 9).unwrap();
        assert_eq!(a, b);
        assert!(crate::linalg::hermiticity_error(a.hamiltonian()) < 1e-12);
        assert_eq!(a.d_a(), 4);
        assert_eq!(a.n_params(), 256);
        assert_ne!(a, EmbeddingModel::init(2, 2, 0.2, 10).unwrap());
    }

    #[test]
    fn eigenvalue_spread_scales_with_init_scale() {
        let spread = |m: &EmbeddingModel| {
            let v = herm_eig(m.hamiltonian()).unwrap().values;
            v[v.len() - 1] - v[0]
        };
        let a = EmbeddingModel::init_scaled(2, 1, 0.2, 3, 0.1).unwrap();
        let b = EmbeddingModel::init_scaled(2, 1, 0.2, 3, 0.3).unwrap();
        assert!((spread(&b) / spread(&a) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn param_round_trip_and_indexing() {
        let m = EmbeddingModel::init(2, 1, 0.2, 1).unwrap();
        let theta = m.params();
        let h = params_to_hermitian(&theta, 4).unwrap();
        assert_eq!(&h, m.hamiltonian());
        let (re, im) = offdiag_param_index(1, 3, 4);
        assert_eq!(theta[re], h[(1, 3)].re);
        assert_eq!(theta[im], h[(1, 3)].im);
        assert_eq!(theta[diag_param_index(2)], h[(2, 2)].re);
    }

    #[test]
    fn zero_hamiltonian_is_identity_channel() {
        let m = EmbeddingModel::init(2, 2, 0.2, 1)
            .unwrap()
            .with_hamiltonian(ComplexMatrix::zeros(16, 16))
            .unwrap();
        let mut rng = <ChaCha8Rng as SeedableRng>::seed_from_u64(2);
        let rho = DensityMatrix::new(random::density(4, &mut rng), vec![2, 2]).unwrap();
        let out = m.apply_channel(&rho).unwrap();
        assert!(max_abs_diff(out.matrix(), rho.matrix()) < 1e-15);
    }

    #[test]
    fn decoupled_ancilla_gives_unitary_channel() {
        let mut rng = <ChaCha8Rng as SeedableRng>::seed_from_u64(3);
        let hs = random::hermitian(2, 1.0, &mut rng);
        let m = EmbeddingModel::closed_system(&hs, 1, 0.3).unwrap();
        let u = expm_unitary(&hs, 0.3).unwrap();
        let rho = DensityMatrix::new(random::density(2, &mut rng), vec![2]).unwrap();
        let out = m.apply_channel(&rho).unwrap();
        assert!(max_abs_diff(out.matrix(), &(&u * rho.matrix() * u.adjoint())) < 1e-14);
    }

    #[test]
    fn kraus_matches_partial_trace_of_dilation() {
        let mut rng = <ChaCha8Rng as SeedableRng>::seed_from_u64(4);
        let mut m = EmbeddingModel::init(2, 2, 0.2, 5).unwrap();
        // mixed ancilla exercises the multi-eigenvector Kraus path
        let rho_a = DensityMatrix::new(random::density(4, &mut rng), vec![4]).unwrap();
        m = EmbeddingModel::new(2, 2, 4, 0.2, m.hamiltonian().clone(), m.rho_er0().clone(), rho_a)
            .unwrap();
        let u = m.unitary().unwrap();
        for _ in 0..10 {
            let rho = random::density(4, &mut rng);
            let big = &u * kron(&rho, m.rho_a().matrix()) * u.adjoint();
            let direct = partial_trace(&big, &[4, 4], 0).unwrap();
            let via = m.channel().unwrap().apply(&rho);
            assert!(max_abs_diff(&direct, &via) < 1e-13);
        }
    }

    #[test]
    fn channel_is_trace_preserving_and_positive() {
        let mut rng = <ChaCha8Rng as SeedableRng>::seed_from_u64(6);
        for seed in 0..5 {
            let m = EmbeddingModel::init(2, 2, 0.2, seed).unwrap();
            for _ in 0..10 {
                let rho = DensityMatrix::new(random::density(4, &mut rng), vec![2, 2]).unwrap();
                let out = m.apply_channel(&rho).unwrap();
                assert!((trace(out.matrix()) - c(1.0, 0.0)).norm() < 1e-12);
                let min = herm_eig(&crate::linalg::hermitize(out.matrix())).unwrap().values[0];
                assert!(min > -1e-10);
            }
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        let m = EmbeddingModel::init(2, 1, 0.2, 1).unwrap();
        assert!(m.with_hamiltonian(ComplexMatrix::zeros(3, 3)).is_err());
        let rho = DensityMatrix::maximally_mixed(3);
        assert!(m.apply_channel(&rho).is_err());
        assert!(EmbeddingModel::init(0, 1, 0.2, 1).is_err());
    }
}
