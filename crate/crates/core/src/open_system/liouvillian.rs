//! Matrix-free action of the one-atom-plus-field Lindblad generator.
//!
//! The density is a dense `2N × 2N` row-major matrix on `atom ⊗ field`
//! with row index `s·N + n` (`s = 0` ground, `s = 1` excited). Every term is
//! evaluated directly from the ladder structure; no superoperator exists.

use rayon::prelude::*;

use super::LossParams;
use crate::error::{Error, Result};
use crate::scalar::{czero, from_usize, lit, mul_neg_i, Real, C};

/// Generator `−i[H, ρ] + κ(n_T+1)𝒟[a]ρ + κn_T𝒟[a†]ρ + γ𝒟[σ₋]ρ` with
/// `H = aσ₊ + a†σ₋` when `coupled`, and `𝒟[L]ρ = LρL† − ½{L†L, ρ}`.
#[derive(Clone, Debug)]
pub struct Liouvillian<T> {
    n_f: usize,
    coupled: bool,
    kappa_down: T,
    kappa_up: T,
    gamma: T,
    sqrt_n: Vec<T>,
    /// Diagonal of `a†a`.
    number: Vec<T>,
    /// Diagonal of the truncated `aa†` (zero on the top level).
    number_up: Vec<T>,
}

impl<T: Real> Liouvillian<T> {
    pub fn new(n_f: usize, params: &LossParams<T>, coupled: bool) -> Result<Self> {
        if n_f < 2 {
            return Err(Error::domain("the field needs at least two levels"));
        }
        params.validate()?;
        let sqrt_n = (0..=n_f).map(|n| from_usize::<T>(n).sqrt()).collect();
        let number = (0..n_f).map(from_usize::<T>).collect();
        let number_up = (0..n_f)
            .map(|n| if n + 1 < n_f { from_usize::<T>(n + 1) } else { T::zero() })
            .collect();
        Ok(Self {
            n_f,
            coupled,
            kappa_down: params.kappa * (params.n_thermal + T::one()),
            kappa_up: params.kappa * params.n_thermal,
            gamma: params.gamma,
            sqrt_n,
            number,
            number_up,
        })
    }

    pub fn n_f(&self) -> usize {
        self.n_f
    }

    /// Side length `2N` of the density matrix.
    pub fn dim(&self) -> usize {
        2 * self.n_f
    }

    pub fn is_coupled(&self) -> bool {
        self.coupled
    }

    /// The basis state `H` connects `(s, m)` to, with the matrix element.
    #[inline]
    fn hop(&self, s: usize, m: usize) -> Option<(usize, T)> {
        let n = self.n_f;
        if s == 0 {
            (m >= 1).then(|| (n + m - 1, self.sqrt_n[m]))
        } else {
            (m + 1 < n).then(|| (m + 1, self.sqrt_n[m + 1]))
        }
    }

    /// Writes `ℒρ` into `out`.
    pub fn apply(&self, rho: &[C<T>], out: &mut [C<T>]) -> Result<()> {
        let d = self.dim();
        if rho.len() != d * d || out.len() != d * d {
            return Err(Error::Dimension {
                expected: d * d,
                got: rho.len().min(out.len()),
            });
        }
        let n = self.n_f;
        let half = lit::<T>(0.5);
        out.par_chunks_mut(d).enumerate().for_each(|(r, row_out)| {
            let (s, m) = (r / n, r % n);
            let row_hop = if self.coupled { self.hop(s, m) } else { None };
            for (c, o) in row_out.iter_mut().enumerate() {
                let (t, k) = (c / n, c % n);
                let mut acc = czero::<T>();
                if self.coupled {
                    let mut comm = czero::<T>();
                    if let Some((rr, h)) = row_hop {
                        comm += rho[rr * d + c] * h;
                    }
                    if let Some((cc, h)) = self.hop(t, k) {
                        comm -= rho[r * d + cc] * h;
                    }
                    acc += mul_neg_i(comm);
                }
                let here = rho[r * d + c];
                if self.kappa_down > T::zero() {
                    if m + 1 < n && k + 1 < n {
                        acc += rho[(r + 1) * d + c + 1] * (self.kappa_down * self.sqrt_n[m + 1] * self.sqrt_n[k + 1]);
                    }
                    acc -= here * (half * self.kappa_down * (self.number[m] + self.number[k]));
                }
                if self.kappa_up > T::zero() {
                    if m >= 1 && k >= 1 {
                        acc += rho[(r - 1) * d + c - 1] * (self.kappa_up * self.sqrt_n[m] * self.sqrt_n[k]);
                    }
                    acc -= here * (half * self.kappa_up * (self.number_up[m] + self.number_up[k]));
                }
                if self.gamma > T::zero() {
                    if s == 0 && t == 0 {
                        acc += rho[(r + n) * d + c + n] * self.gamma;
                    }
                    let excited = from_usize::<T>(s + t);
                    acc -= here * (half * self.gamma * excited);
                }
                *o = acc;
            }
        });
        Ok(())
    }

    /// Rough bound on the spectral radius, used to pick initial step sizes.
    pub fn norm_estimate(&self) -> T {
        let top = from_usize::<T>(self.n_f);
        let coupling = if self.coupled { lit::<T>(2.0) * top.sqrt() } else { T::zero() };
        coupling + (self.kappa_down + self.kappa_up) * top * lit(2.0) + self.gamma
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMat;

    fn params(kappa: f64, gamma: f64, n_t: f64) -> LossParams<f64> {
        LossParams { kappa, gamma, n_thermal: n_t }
    }

    /// Dense reference `−i[H,ρ] + Σ 𝒟` built from explicit matrices.
    fn dense_reference(n: usize, p: &LossParams<f64>, coupled: bool, rho: &CMat<f64>) -> CMat<f64> {
        let d = 2 * n;
        let mut a = CMat::zeros(n, n);
        for k in 1..n {
            a[(k - 1, k)] = C::new((k as f64).sqrt(), 0.0);
        }
        let id_f = CMat::identity(n);
        let id_a = CMat::identity(2);
        let mut sm = CMat::zeros(2, 2);
        sm[(0, 1)] = C::new(1.0, 0.0);
        let big_a = id_a.kron(&a);
        let big_sm = sm.kron(&id_f);
        let h = &big_sm.adjoint().matmul(&big_a) + &big_sm.matmul(&big_a.adjoint());
        let diss = |l: &CMat<f64>, rate: f64| -> CMat<f64> {
            let ldl = l.adjoint().matmul(l);
            let t1 = l.matmul(rho).matmul(&l.adjoint());
            let t2 = &ldl.matmul(rho) + &rho.matmul(&ldl);
            (&t1 - &t2.scale_real(0.5)).scale_real(rate)
        };
        let mut out = CMat::zeros(d, d);
        if coupled {
            let comm = &h.matmul(rho) - &rho.matmul(&h);
            out = &out + &comm.scale(C::new(0.0, -1.0));
        }
        out = &out + &diss(&big_a, p.kappa * (p.n_thermal + 1.0));
        out = &out + &diss(&big_a.adjoint(), p.kappa * p.n_thermal);
        out = &out + &diss(&big_sm, p.gamma);
        out
    }

    fn sample_density(d: usize) -> CMat<f64> {
        let m = CMat::from_fn(d, d, |i, j| C::new(((i * 7 + j * 3) % 11) as f64 / 11.0 - 0.4, ((i * 5 + j) % 7) as f64 / 7.0 - 0.5));
        let rho = m.matmul(&m.adjoint());
        let tr = rho.trace().re;
        rho.scale_real(1.0 / tr)
    }

    #[test]
    fn matches_dense_construction() {
        let n = 6;
        let rho = sample_density(2 * n);
        for (p, coupled) in [
            (params(0.0, 0.0, 0.0), true),
            (params(0.3, 0.0, 0.0), false),
            (params(0.2, 0.1, 0.4), true),
            (params(0.0, 0.7, 0.0), false),
        ] {
            let l = Liouvillian::new(n, &p, coupled).unwrap();
            let mut out = vec![C::new(0.0, 0.0); 4 * n * n];
            l.apply(rho.as_slice(), &mut out).unwrap();
            let reference = dense_reference(n, &p, coupled, &rho);
            let diff = (&CMat::from_vec(2 * n, 2 * n, out) - &reference).max_abs();
            assert!(diff < 1e-13, "{diff}");
        }
    }

    #[test]
    fn derivative_is_traceless_and_hermitian() {
        let n = 8;
        let rho = sample_density(2 * n);
        let l = Liouvillian::new(n, &params(0.05, 0.02, 0.1), true).unwrap();
        let mut out = vec![C::new(0.0, 0.0); 4 * n * n];
        l.apply(rho.as_slice(), &mut out).unwrap();
        let m = CMat::from_vec(2 * n, 2 * n, out);
        assert!(m.trace().norm() < 1e-14);
        assert!(m.hermiticity_residual() < 1e-14);
    }

    #[test]
    fn rejects_wrong_length() {
        let l = Liouvillian::new(4, &params(0.0, 0.0, 0.0), true).unwrap();
        let mut out = vec![C::new(0.0, 0.0); 64];
        assert!(l.apply(&[C::new(0.0, 0.0); 10], &mut out).is_err());
    }
}
