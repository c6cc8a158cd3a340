//! Brute-force reference computations used to check the closed forms.
//!
//! Everything here works at the level of states: qubit Kraus maps and Choi
//! matrices with eigenvalue entropies, and single-mode Gaussian covariance
//! matrices pushed through beam splitters. None of it calls into the
//! closed-form reductions in [`crate::channels`] or [`crate::bounds`].

use nalgebra::{Complex, Matrix2, Matrix4};
use rand::Rng;

use crate::error::{domain, Error, Result};

pub type C64 = Complex<f64>;

/// Eigenvalues below this are treated as exactly zero in entropies.
pub const EIGEN_ZERO: f64 = 1e-14;
/// Completeness tolerance for Kraus sets.
pub const KRAUS_TOL: f64 = 1e-12;

fn c(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

/// A qubit channel given by Kraus operators.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitChannel {
    kraus: Vec<Matrix2<C64>>,
}

impl QubitChannel {
    pub fn new(kraus: Vec<Matrix2<C64>>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::Kraus("empty Kraus set".into()));
        }
        let sum: Matrix2<C64> = kraus.iter().map(|k| k.adjoint() * k).sum();
        let dev = (sum - Matrix2::identity()).map(|z| z.norm()).max();
        if dev > KRAUS_TOL {
            return Err(Error::Kraus(format!("sum K^dag K deviates from identity by {dev:e}")));
        }
        Ok(QubitChannel { kraus })
    }

    pub fn identity() -> Self {
        QubitChannel { kraus: vec![Matrix2::identity()] }
    }

    /// `K0 = |0><0| + sqrt(1-p)|1><1|`, `K1 = sqrt(p)|0><1|`.
    pub fn amplitude_damping(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(domain(format!("damping probability {p} outside [0, 1]")));
        }
        let k0 = Matrix2::new(c(1.0), c(0.0), c(0.0), c((1.0 - p).sqrt()));
        let k1 = Matrix2::new(c(0.0), c(p.sqrt()), c(0.0), c(0.0));
        QubitChannel::new(vec![k0, k1])
    }

    /// Phase flip with probability `p`.
    pub fn dephasing(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(domain(format!("dephasing probability {p} outside [0, 1]")));
        }
        let k0 = Matrix2::identity() * c((1.0 - p).sqrt());
        let k1 = Matrix2::new(c(1.0), c(0.0), c(0.0), c(-1.0)) * c(p.sqrt());
        QubitChannel::new(vec![k0, k1])
    }

    pub fn kraus(&self) -> &[Matrix2<C64>] {
        &self.kraus
    }

    pub fn apply(&self, rho: &Matrix2<C64>) -> Matrix2<C64> {
        self.kraus.iter().map(|k| k * rho * k.adjoint()).sum()
    }

    /// `next ∘ self`: apply `self` first.
    pub fn then(&self, next: &QubitChannel) -> QubitChannel {
        let kraus = next
            .kraus
            .iter()
            .flat_map(|b| self.kraus.iter().map(move |a| b * a))
            .collect();
        QubitChannel { kraus }
    }
}

/// Two-qubit Choi state `(I ⊗ E)(|Φ><Φ|)`, basis index `2a + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix(pub Matrix4<C64>);

pub fn choi_of(channel: &QubitChannel) -> Result<ChoiMatrix> {
    // Re-validate: callers may have assembled the Kraus set by hand.
    let channel = QubitChannel::new(channel.kraus.clone())?;
    let mut rho = Matrix4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let mut unit = Matrix2::zeros();
            unit[(i, j)] = c(1.0);
            let out = channel.apply(&unit);
            for a in 0..2 {
                for b in 0..2 {
                    rho[(2 * i + a, 2 * j + b)] += out[(a, b)] * c(0.5);
                }
            }
        }
    }
    Ok(ChoiMatrix(rho))
}

/// Partial trace over the second qubit.
pub fn trace_out_b(rho: &Matrix4<C64>) -> Matrix2<C64> {
    Matrix2::from_fn(|i, j| rho[(2 * i, 2 * j)] + rho[(2 * i + 1, 2 * j + 1)])
}

/// Partial trace over the first qubit.
pub fn trace_out_a(rho: &Matrix4<C64>) -> Matrix2<C64> {
    Matrix2::from_fn(|i, j| rho[(i, j)] + rho[(2 + i, 2 + j)])
}

fn entropy_of_eigs(eigs: impl IntoIterator<Item = f64>) -> Result<f64> {
    let mut s = 0.0;
    for l in eigs {
        if l < -1e-10 {
            return Err(domain(format!("matrix is not positive semidefinite (eigenvalue {l:e})")));
        }
        if l > EIGEN_ZERO {
            s -= l * l.log2();
        }
    }
    Ok(s)
}

/// Von Neumann entropy (bits) of a 4x4 Hermitian density matrix.
pub fn entropy4(rho: &Matrix4<C64>) -> Result<f64> {
    let h = (rho + rho.adjoint()) * c(0.5);
    entropy_of_eigs(h.symmetric_eigenvalues().iter().copied())
}

/// Von Neumann entropy (bits) of a 2x2 Hermitian density matrix.
pub fn entropy2(rho: &Matrix2<C64>) -> Result<f64> {
    let h = (rho + rho.adjoint()) * c(0.5);
    entropy_of_eigs(h.symmetric_eigenvalues().iter().copied())
}

/// Coherent and reverse coherent information `(I_C, I_RC)` of a Choi state.
pub fn ci_rci(choi: &ChoiMatrix) -> Result<(f64, f64)> {
    let rho = &choi.0;
    let tr = rho.trace();
    if (tr - c(1.0)).norm() > 1e-12 {
        return Err(domain(format!("Choi matrix has trace {tr}")));
    }
    let s_ab = entropy4(rho)?;
    let s_b = entropy2(&trace_out_a(rho))?;
    let s_a = entropy2(&trace_out_b(rho))?;
    Ok((s_b - s_ab, s_a - s_ab))
}

/// `S(A) - S(AB)` for the purification of `diag(1-u, u)` sent through
/// amplitude damping `p`, by explicit diagonalisation.
pub fn ad_rci_at_u(p: f64, u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(domain(format!("excitation probability {u} outside [0, 1]")));
    }
    let chan = QubitChannel::amplitude_damping(p)?;
    let amp = [(1.0 - u).sqrt(), u.sqrt()];
    let mut rho = Matrix4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let mut unit = Matrix2::zeros();
            unit[(i, j)] = c(amp[i] * amp[j]);
            let out = chan.apply(&unit);
            for a in 0..2 {
                for b in 0..2 {
                    rho[(2 * i + a, 2 * j + b)] += out[(a, b)];
                }
            }
        }
    }
    Ok(entropy2(&trace_out_b(&rho))? - entropy4(&rho)?)
}

/// Single-mode covariance matrix in the vacuum = I/2 convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix(pub Matrix2<f64>);

impl CovarianceMatrix {
    pub fn new(m: Matrix2<f64>) -> Result<Self> {
        if (m[(0, 1)] - m[(1, 0)]).abs() > 1e-12 {
            return Err(domain("covariance matrix is not symmetric"));
        }
        if !(m[(0, 0)] > 0.0 && m.determinant() > 0.0) {
            return Err(domain("covariance matrix is not positive definite"));
        }
        if m.determinant() < 0.25 - 1e-12 {
            return Err(domain(format!(
                "covariance matrix violates the uncertainty bound (det {})",
                m.determinant()
            )));
        }
        Ok(CovarianceMatrix(m))
    }

    pub fn vacuum() -> Self {
        CovarianceMatrix(Matrix2::identity() * 0.5)
    }

    pub fn thermal(nbar: f64) -> Self {
        CovarianceMatrix(Matrix2::identity() * (nbar + 0.5))
    }
}

/// Push a covariance matrix through a chain of thermal-loss channels
/// `(tau, nbar)`, each realised as a beam splitter of transmissivity `tau`
/// mixing the signal with a thermal mode of `nbar / (1 - tau)` photons.
pub fn gaussian_propagate(v: &CovarianceMatrix, channels: &[(f64, f64)]) -> Result<CovarianceMatrix> {
    let mut v = CovarianceMatrix::new(v.0)?.0;
    for &(tau, nbar) in channels {
        if !(tau > 0.0 && tau <= 1.0) || !(nbar >= 0.0) {
            return Err(domain(format!("invalid thermal-loss channel ({tau}, {nbar})")));
        }
        if tau == 1.0 {
            // Limit of a vanishing beam splitter: additive noise only.
            v += Matrix2::identity() * nbar;
            continue;
        }
        let env = CovarianceMatrix::thermal(nbar / (1.0 - tau)).0;
        let mut joint = Matrix4::<f64>::zeros();
        joint.fixed_view_mut::<2, 2>(0, 0).copy_from(&v);
        joint.fixed_view_mut::<2, 2>(2, 2).copy_from(&env);
        let (t, r) = (tau.sqrt(), (1.0 - tau).sqrt());
        let i2 = Matrix2::<f64>::identity();
        let mut bs = Matrix4::<f64>::zeros();
        bs.fixed_view_mut::<2, 2>(0, 0).copy_from(&(i2 * t));
        bs.fixed_view_mut::<2, 2>(0, 2).copy_from(&(i2 * r));
        bs.fixed_view_mut::<2, 2>(2, 0).copy_from(&(i2 * -r));
        bs.fixed_view_mut::<2, 2>(2, 2).copy_from(&(i2 * t));
        let out = bs * joint * bs.transpose();
        v = out.fixed_view::<2, 2>(0, 0).into_owned();
    }
    Ok(CovarianceMatrix(v))
}

/// Entropy (bits) of a thermal state by summing its photon-number distribution.
pub fn thermal_state_entropy(nbar: f64) -> f64 {
    if nbar <= 0.0 {
        return 0.0;
    }
    let q = nbar / (nbar + 1.0);
    let mut p = 1.0 / (nbar + 1.0);
    let mut s = 0.0;
    let mut k = 0;
    while p > 1e-300 && k < 1_000_000 {
        s -= p * p.log2();
        p *= q;
        k += 1;
    }
    s
}

/// Uniformly random qubit density matrix (Bloch ball).
pub fn random_qubit_state<R: Rng + ?Sized>(rng: &mut R) -> Matrix2<C64> {
    let (x, y, z) = loop {
        let v: (f64, f64, f64) =
            (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if v.0 * v.0 + v.1 * v.1 + v.2 * v.2 <= 1.0 {
            break v;
        }
    };
    Matrix2::new(
        c(0.5 * (1.0 + z)),
        Complex::new(0.5 * x, -0.5 * y),
        Complex::new(0.5 * x, 0.5 * y),
        c(0.5 * (1.0 - z)),
    )
}

/// Random squeezed, rotated thermal state.
pub fn random_covariance<R: Rng + ?Sized>(rng: &mut R) -> CovarianceMatrix {
    let nu = 0.5 + rng.gen_range(0.0..3.0);
    let r: f64 = rng.gen_range(-1.0..1.0);
    let theta: f64 = rng.gen_range(0.0..std::f64::consts::PI);
    let rot = Matrix2::new(theta.cos(), -theta.sin(), theta.sin(), theta.cos());
    let sq = Matrix2::new((2.0 * r).exp(), 0.0, 0.0, (-2.0 * r).exp());
    let m = rot * sq * rot.transpose() * nu;
    // Symmetrise away rounding.
    CovarianceMatrix((m + m.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn h2(u: f64) -> f64 {
        [u, 1.0 - u].iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
    }

    #[test]
    fn kraus_validation() {
        let bad = Matrix2::new(c(1.0), c(0.0), c(0.0), c(0.5));
        assert!(matches!(QubitChannel::new(vec![bad]), Err(Error::Kraus(_))));
        assert!(QubitChannel::amplitude_damping(1.2).is_err());
    }

    #[test]
    fn choi_examples() {
        let id = choi_of(&QubitChannel::identity()).unwrap().0;
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert!(close(id[(i, j)].re, 0.5, 1e-15));
        }
        assert!(close(id[(1, 1)].re, 0.0, 1e-15));

        let full = choi_of(&QubitChannel::amplitude_damping(1.0).unwrap()).unwrap().0;
        // (I/2) ⊗ |0><0|
        assert!(close(full[(0, 0)].re, 0.5, 1e-15));
        assert!(close(full[(2, 2)].re, 0.5, 1e-15));
        assert!(close(full.map(|z| z.norm()).sum(), 1.0, 1e-15));

        let ad = choi_of(&QubitChannel::amplitude_damping(0.3).unwrap()).unwrap().0;
        assert!(close(ad[(3, 3)].re, 0.35, 1e-15));
        assert!(close(ad[(0, 0)].re, 0.5, 1e-15));
        let ra = trace_out_b(&ad);
        assert!(close(ra[(0, 0)].re, 0.5, 1e-15) && close(ra[(1, 1)].re, 0.5, 1e-15));
    }

    #[test]
    fn ci_rci_examples() {
        let (ic, irc) = ci_rci(&choi_of(&QubitChannel::identity()).unwrap()).unwrap();
        assert!(close(ic, 1.0, 1e-12) && close(irc, 1.0, 1e-12));

        let (ic, irc) = ci_rci(&choi_of(&QubitChannel::amplitude_damping(1.0).unwrap()).unwrap()).unwrap();
        assert!(close(ic, -1.0, 1e-12) && close(irc, 0.0, 1e-12));

        for p in [0.05, 0.2, 0.4] {
            let (ic, irc) = ci_rci(&choi_of(&QubitChannel::dephasing(p).unwrap()).unwrap()).unwrap();
            assert!(close(ic, 1.0 - h2(p), 1e-11));
            assert!(close(irc, 1.0 - h2(p), 1e-11));
        }
    }

    #[test]
    fn ad_rci_at_u_examples() {
        assert!(close(ad_rci_at_u(0.3, 0.0).unwrap(), 0.0, 1e-12));
        assert!(close(ad_rci_at_u(0.0, 0.5).unwrap(), 1.0, 1e-12));
        let v = ad_rci_at_u(0.5, 0.3).unwrap();
        assert!(close(v, h2(0.3) - h2(0.15), 1e-11));
        assert!(close(v, 0.2715, 1e-4));
    }

    #[test]
    fn gaussian_examples() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let v = random_covariance(&mut rng);
        let out = gaussian_propagate(&v, &[(1.0, 0.0)]).unwrap();
        assert!((out.0 - v.0).abs().max() < 1e-15);

        for (tau, nbar) in [(0.3, 0.0), (0.7, 0.2), (0.01, 0.002)] {
            let out = gaussian_propagate(&CovarianceMatrix::vacuum(), &[(tau, nbar)]).unwrap();
            assert!((out.0 - Matrix2::identity() * (0.5 + nbar)).abs().max() < 1e-14);
        }

        let out = gaussian_propagate(&v, &[(0.8, 0.1), (0.5, 0.2)]).unwrap();
        let expect = v.0 * 0.4 + Matrix2::identity() * 0.55;
        assert!((out.0 - expect).abs().max() < 1e-14);
    }

    #[test]
    fn covariance_validation() {
        assert!(CovarianceMatrix::new(Matrix2::new(0.4, 0.0, 0.0, 0.4)).is_err());
        assert!(CovarianceMatrix::new(Matrix2::new(1.0, 0.2, 0.3, 1.0)).is_err());
        assert!(CovarianceMatrix::new(Matrix2::new(-1.0, 0.0, 0.0, -1.0)).is_err());
    }

    #[test]
    fn thermal_entropy_matches_geometric_sum() {
        for n in [0.0, 0.1, 1.0, 4.0] {
            let closed = if n == 0.0 { 0.0 } else { (n + 1.0) * (n + 1.0f64).log2() - n * n.log2() };
            assert!(close(thermal_state_entropy(n), closed, 1e-12));
        }
    }
}
