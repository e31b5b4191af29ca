//! Haar-random unitaries, random pure states and constructed LU-equivalent
//! pairs.
//!
//! Randomness comes from [`RandomStream`], a ChaCha20 stream keyed by SHA-256
//! of `(seed, label path)`. Draws are therefore identical on every platform,
//! and a child stream obtained with [`RandomStream::split`] does not depend on
//! how many values the parent has already produced.
//!
//! Complex Gaussians use the polar Box-Muller transform of two uniforms
//! `u1 in (0, 1]`, `u2 in [0, 1)`: `z = sqrt(-ln u1) * exp(2 pi i u2)`, which
//! has independent `N(0, 1/2)` real and imaginary parts (`E|z|^2 = 1`).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::statespace::{apply_local_unitaries, LocalUnitaryTuple, PureState, SubsystemDims};
use crate::{CMatrix, Error, Result};

/// Seeded, splittable random stream.
#[derive(Debug, Clone)]
pub struct RandomStream {
    key: [u8; 32],
    rng: ChaCha20Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        let mut h = Sha256::new();
        h.update(b"luequiv-stream");
        h.update(seed.to_le_bytes());
        Self::from_key(h.finalize().into())
    }

    fn from_key(key: [u8; 32]) -> Self {
        Self {
            key,
            rng: ChaCha20Rng::from_seed(key),
        }
    }

    /// Independent child stream named by `label`.
    pub fn split(&self, label: &str) -> Self {
        let mut h = Sha256::new();
        h.update(self.key);
        h.update((label.len() as u64).to_le_bytes());
        h.update(label.as_bytes());
        Self::from_key(h.finalize().into())
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn complex_gaussian(&mut self) -> Complex64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        Complex64::from_polar((-u1.ln()).sqrt(), std::f64::consts::TAU * u2)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.random::<u64>()
    }
}

/// Haar-distributed `d x d` unitary: QR of a complex Ginibre matrix with each
/// column of `Q` multiplied by the phase of the matching diagonal entry of `R`.
pub fn haar_unitary(d: usize, stream: &mut RandomStream) -> Result<CMatrix> {
    if d == 0 {
        return Err(Error::InvalidDims(
            "unitary dimension must be positive".into(),
        ));
    }
    let z = CMatrix::from_fn(d, d, |_, _| stream.complex_gaussian());
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    Ok(q)
}

/// One Haar unitary per subsystem.
pub fn haar_tuple(dims: &SubsystemDims, stream: &mut RandomStream) -> Result<LocalUnitaryTuple> {
    let us = dims
        .as_slice()
        .iter()
        .map(|&d| haar_unitary(d, stream))
        .collect::<Result<Vec<_>>>()?;
    Ok(LocalUnitaryTuple::new_unchecked(us))
}

/// Normalized complex Gaussian vector (Haar-random pure state).
pub fn random_pure_state(dims: &SubsystemDims, stream: &mut RandomStream) -> Result<PureState> {
    let amps = (0..dims.total())
        .map(|_| stream.complex_gaussian())
        .collect();
    PureState::new(dims.clone(), amps)
}

/// `(U |psi>, U)` for a Haar-random local tuple `U`.
pub fn random_lu_pair(
    psi: &PureState,
    stream: &mut RandomStream,
) -> Result<(PureState, LocalUnitaryTuple)> {
    let tuple = haar_tuple(psi.dims(), stream)?;
    Ok((apply_local_unitaries(psi, &tuple)?, tuple))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitarity_residual;
    use crate::statespace::partial_trace;

    fn dims(v: &[usize]) -> SubsystemDims {
        SubsystemDims::new(v.to_vec()).unwrap()
    }

    #[test]
    fn stream_is_reproducible_and_split_is_draw_independent() {
        let mut a = RandomStream::new(7);
        let mut b = RandomStream::new(7);
        let xs: Vec<u64> = (0..4).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..4).map(|_| b.next_u64()).collect();
        assert_eq!(xs, ys);

        let fresh = RandomStream::new(7).split("child");
        let mut child_a = a.split("child");
        let mut child_b = fresh;
        assert_eq!(child_a.next_u64(), child_b.next_u64());
        assert_ne!(
            RandomStream::new(7).split("x").next_u64(),
            RandomStream::new(7).split("y").next_u64()
        );
        assert_ne!(
            RandomStream::new(7).next_u64(),
            RandomStream::new(8).next_u64()
        );
    }

    #[test]
    fn gaussian_moments() {
        let mut s = RandomStream::new(1);
        let n = 20_000;
        let zs: Vec<Complex64> = (0..n).map(|_| s.complex_gaussian()).collect();
        let mean: Complex64 = zs.iter().sum::<Complex64>() / n as f64;
        let second: f64 = zs.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
        assert!(mean.norm() < 0.03);
        assert!((second - 1.0).abs() < 0.03);
    }

    #[test]
    fn haar_examples() {
        let mut s = RandomStream::new(3);
        let u1 = haar_unitary(1, &mut s).unwrap();
        assert!((u1[(0, 0)].norm() - 1.0).abs() < 1e-15);
        for d in [2, 4, 7] {
            let u = haar_unitary(d, &mut s).unwrap();
            assert!(unitarity_residual(&u) < 1e-12);
        }
        assert!(haar_unitary(0, &mut s).is_err());
    }

    #[test]
    fn random_state_and_pair() {
        let mut s = RandomStream::new(5);
        let psi = random_pure_state(&dims(&[2, 2, 2]), &mut s).unwrap();
        assert!((psi.amplitudes().norm() - 1.0).abs() < 1e-12);
        assert!(SubsystemDims::new(vec![2]).is_err());

        let (phi, t) = random_lu_pair(&psi, &mut s).unwrap();
        assert!((phi.amplitudes().norm() - 1.0).abs() < 1e-12);
        let back = apply_local_unitaries(&phi, &t.inverse()).unwrap();
        assert!((back.amplitudes() - psi.amplitudes()).norm() < 1e-12);

        // Same stream position, same draws.
        let mut s1 = RandomStream::new(9);
        let mut s2 = RandomStream::new(9);
        assert_eq!(
            random_pure_state(&dims(&[3, 2]), &mut s1).unwrap(),
            random_pure_state(&dims(&[3, 2]), &mut s2).unwrap()
        );
    }

    #[test]
    fn purity_of_reduced_haar_state_matches_closed_form() {
        // E Tr(rho_A^2) = (dA + dB) / (dA dB + 1) for Haar states on dA x dB.
        let mut s = RandomStream::new(2024).split("purity");
        let d = dims(&[2, 4]);
        let samples: Vec<f64> = (0..1000)
            .map(|_| {
                let psi = random_pure_state(&d, &mut s).unwrap();
                let rho = partial_trace(&psi, &[1]).unwrap();
                let m = rho.matrix();
                (m * m).trace().re
            })
            .collect();
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let expect = 6.0 / 9.0;
        assert!(
            (mean - expect).abs() < 3.0 * (var / n).sqrt(),
            "{mean} vs {expect}"
        );
    }

    #[test]
    fn haar_is_left_invariant_in_distribution_of_first_entry() {
        // |U_00|^2 of a Haar unitary on d = 3 is Beta(1, 2): mean 1/3.
        let mut s = RandomStream::new(77);
        let n = 4000;
        let mean: f64 = (0..n)
            .map(|_| haar_unitary(3, &mut s).unwrap()[(0, 0)].norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0 / 3.0).abs() < 0.015);
    }
}
