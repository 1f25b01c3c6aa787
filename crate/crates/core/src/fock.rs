//! Truncated Fock-space algebra: coherent states, quadrature wavefunctions
//! and Husimi Q evaluation.
//!
//! Energies are in units of the coupling `g`; times appear only as `gτ`.

use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::{inner, norm_sqr};
use crate::scalar::{cis, czero, from_usize, lit, to_f64, Real, C};

/// Tail mass at or above which a coherent state is rejected.
pub const TRUNCATION_ERROR_MASS: f64 = 1e-4;
/// Tail mass below which a coherent state is flagged normalized.
pub const NORMALIZED_TAIL_MASS: f64 = 1e-8;
/// Tail mass targeted by [`auto_dim`].
pub const AUTO_TAIL_MASS: f64 = 1e-12;

/// Photon-number cutoff `⌊n̄ + 4√n̄⌋`.
pub fn truncation_dim<T: Real>(nbar: T) -> Result<usize> {
    let nbar = to_f64(nbar);
    if !(nbar >= 1.0) || !nbar.is_finite() {
        return Err(Error::domain(format!("truncation_dim needs nbar >= 1, got {nbar}")));
    }
    Ok((nbar + 4.0 * nbar.sqrt()).floor() as usize)
}

/// Poisson(`nbar`) mass on photon numbers `n >= n_f`, i.e. the norm a
/// coherent state with `|α|² = nbar` loses when truncated to `n_f` levels.
pub fn poisson_tail(nbar: f64, n_f: usize) -> f64 {
    if nbar <= 0.0 {
        return if n_f == 0 { 1.0 } else { 0.0 };
    }
    let ln_nbar = nbar.ln();
    let log_p = |n: usize| -nbar + n as f64 * ln_nbar - ln_gamma(n as f64 + 1.0);
    if (n_f as f64) <= nbar {
        // bulk side: 1 − head, head summed from the top down
        let head: f64 = (0..n_f).rev().map(|n| log_p(n).exp()).sum();
        return (1.0 - head).max(0.0);
    }
    let mut tail = 0.0;
    let mut n = n_f;
    loop {
        let term = log_p(n).exp();
        tail += term;
        if term <= tail * 1e-17 || term == 0.0 {
            break;
        }
        n += 1;
    }
    tail
}

/// Working cutoff for a coherent input of mean photon number `nbar`: the
/// smallest dimension not below [`truncation_dim`] whose coherent tail is at
/// most [`AUTO_TAIL_MASS`], plus two levels of headroom for the two photons
/// the sequential interaction can add.
pub fn auto_dim<T: Real>(nbar: T) -> Result<usize> {
    let nb = to_f64(nbar);
    if !(nb >= 0.0) || !nb.is_finite() {
        return Err(Error::domain(format!("auto_dim needs finite nbar >= 0, got {nb}")));
    }
    let mut n = if nb >= 1.0 { truncation_dim(nb)? } else { 1 };
    while poisson_tail(nb, n) > AUTO_TAIL_MASS {
        n += 1;
    }
    Ok(n + 2)
}

/// Complex amplitudes over the truncated Fock basis `|0⟩ … |n_f − 1⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldVector<T> {
    amplitudes: Vec<C<T>>,
    normalized: bool,
}

impl<T: Real> FieldVector<T> {
    pub fn zeros(n_f: usize) -> Self {
        Self {
            amplitudes: vec![czero(); n_f],
            normalized: false,
        }
    }

    pub fn vacuum(n_f: usize) -> Self {
        Self::fock(0, n_f)
    }

    /// Photon-number state `|n⟩`.
    pub fn fock(n: usize, n_f: usize) -> Self {
        assert!(n < n_f, "Fock level {n} outside cutoff {n_f}");
        let mut v = Self::zeros(n_f);
        v.amplitudes[n] = C::new(T::one(), T::zero());
        v.normalized = true;
        v
    }

    /// Wraps raw amplitudes; the vector is flagged normalized when its norm is
    /// within `1e-10` of one.
    pub fn from_amplitudes(amplitudes: Vec<C<T>>) -> Self {
        let n = to_f64(norm_sqr(&amplitudes));
        Self {
            amplitudes,
            normalized: (n - 1.0).abs() <= 1e-10,
        }
    }

    pub fn n_f(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C<T>] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C<T>] {
        self.normalized = false;
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C<T>> {
        self.amplitudes
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm_sqr(&self) -> T {
        norm_sqr(&self.amplitudes)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> C<T> {
        inner(&self.amplitudes, &other.amplitudes)
    }

    pub fn scaled(&self, s: C<T>) -> Self {
        Self::from_amplitudes(self.amplitudes.iter().map(|a| *a * s).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.amplitudes.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `Σ_n w_n c_n`, the projection `⟨χ|ψ⟩` when `w` holds `⟨χ|n⟩`.
    pub fn project_onto(&self, bra_row: &[C<T>]) -> C<T> {
        self.amplitudes
            .iter()
            .zip(bra_row)
            .fold(czero(), |acc, (c, w)| acc + *w * *c)
    }
}

/// Coherent-state amplitudes `e^{-|α|²/2} α^n / √(n!)` for `n < n_f`.
///
/// Evaluated through the recurrence `c_{n+1} = c_n α / √(n+1)` carried in
/// log-magnitude form so that neither `e^{-|α|²/2}` nor `n!` can under- or
/// overflow.
pub fn coherent_amplitudes<T: Real>(alpha: C<T>, n_f: usize) -> Result<FieldVector<T>> {
    if n_f == 0 {
        return Err(Error::domain("coherent_amplitudes needs n_f >= 1"));
    }
    let tail = poisson_tail(to_f64(alpha.norm_sqr()), n_f);
    if tail >= TRUNCATION_ERROR_MASS {
        return Err(Error::Truncation {
            what: format!("coherent state |α|² = {} does not fit in {n_f} levels", alpha.norm_sqr()),
            mass: tail,
        });
    }
    let mut v = coherent_unchecked(alpha, n_f);
    v.normalized = tail < NORMALIZED_TAIL_MASS;
    Ok(v)
}

/// Coherent amplitudes without any truncation check (used for `⟨β|` in
/// phase-space scans where β may lie far outside the populated region).
pub fn coherent_unchecked<T: Real>(alpha: C<T>, n_f: usize) -> FieldVector<T> {
    let mut amps = vec![czero(); n_f];
    let r = alpha.norm();
    if n_f == 0 {
        return FieldVector {
            amplitudes: amps,
            normalized: false,
        };
    }
    if r == T::zero() {
        amps[0] = C::new(T::one(), T::zero());
        return FieldVector {
            amplitudes: amps,
            normalized: true,
        };
    }
    // accumulated in f64 so that f32 callers keep full normalization
    let phase = to_f64(alpha.arg());
    let r = to_f64(r);
    let ln_r = r.ln();
    let mut log_mag = -0.5 * r * r;
    for (n, a) in amps.iter_mut().enumerate() {
        if n > 0 {
            log_mag += ln_r - 0.5 * (n as f64).ln();
        }
        let (s, c) = (phase * n as f64).sin_cos();
        let m = log_mag.exp();
        *a = C::new(lit(m * c), lit(m * s));
    }
    FieldVector {
        amplitudes: amps,
        normalized: false,
    }
}

/// Local-oscillator phase θ and quadrature value `x_θ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec<T> {
    theta: T,
    value: T,
}

impl<T: Real> QuadratureSpec<T> {
    /// θ is reduced into `[0, 2π)`.
    pub fn new(theta: T, value: T) -> Self {
        let two_pi = T::PI() + T::PI();
        let mut th = theta % two_pi;
        if th < T::zero() {
            th += two_pi;
        }
        if th >= two_pi {
            th = T::zero();
        }
        Self { theta: th, value }
    }

    /// The `p = x_{π/2}` quadrature.
    pub fn p(value: T) -> Self {
        Self::new(T::FRAC_PI_2(), value)
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn value(&self) -> T {
        self.value
    }

    pub fn with_value(&self, value: T) -> Self {
        Self { value, ..*self }
    }
}

/// Normalized Hermite functions `h_0(x) … h_{count−1}(x)`.
///
/// The three-term recurrence is run on a rescaled pair of values with the
/// common scale factor tracked as a logarithm, so `e^{-x²/2}` underflow at
/// large `|x|` does not zero out the high-`n` functions that are genuinely
/// non-negligible there.
pub fn hermite_functions<T: Real>(x: T, count: usize) -> Vec<T> {
    let mut out = vec![T::zero(); count];
    if count == 0 {
        return out;
    }
    let half = lit::<T>(0.5);
    let two = lit::<T>(2.0);
    let mut log_scale = -half * x * x - T::PI().ln() * lit::<T>(0.25);
    let big = lit::<T>(1e30);
    let mut prev = T::zero();
    let mut cur = T::one();
    out[0] = log_scale.exp();
    if count == 1 {
        return out;
    }
    for n in 1..count {
        let nf = from_usize::<T>(n);
        let next = if n == 1 {
            two.sqrt() * x * cur
        } else {
            x * (two / nf).sqrt() * cur - ((nf - T::one()) / nf).sqrt() * prev
        };
        prev = cur;
        cur = next;
        let mag = cur.abs().max(prev.abs());
        if mag > big {
            prev /= mag;
            cur /= mag;
            log_scale += mag.ln();
        }
        out[n] = cur * log_scale.exp();
    }
    out
}

/// `⟨x_θ|n⟩ = e^{−inθ} h_n(x)`.
pub fn quadrature_wavefunction<T: Real>(n: usize, spec: &QuadratureSpec<T>) -> C<T> {
    let h = hermite_functions(spec.value(), n + 1);
    cis(-spec.theta() * from_usize::<T>(n)) * h[n]
}

/// The row `(⟨x_θ|0⟩, …, ⟨x_θ|n_f − 1⟩)`.
pub fn quadrature_row<T: Real>(spec: &QuadratureSpec<T>, n_f: usize) -> Vec<C<T>> {
    hermite_functions(spec.value(), n_f)
        .into_iter()
        .enumerate()
        .map(|(n, h)| cis(-spec.theta() * from_usize::<T>(n)) * h)
        .collect()
}

/// Husimi function `Q(β) = (1/π) Σ_ij |⟨β|g_ij⟩|²` of the field state whose
/// reduced density is `Σ_ij |g_ij⟩⟨g_ij|`.
pub fn husimi_q<T: Real>(components: &[FieldVector<T>], beta: C<T>) -> T {
    let n_f = components.iter().map(FieldVector::n_f).max().unwrap_or(0);
    let bra = coherent_unchecked(beta, n_f);
    components
        .iter()
        .map(|g| inner(&bra.amplitudes()[..g.n_f()], g.amplitudes()).norm_sqr())
        .sum::<T>()
        / T::PI()
}

/// Husimi function on the rectangular grid `β = (x + ip)/√2`, row-major in
/// `p` then `x`: entry `[ip * xs.len() + ix]`.
pub fn husimi_q_grid<T: Real>(components: &[FieldVector<T>], xs: &[T], ps: &[T]) -> Vec<T> {
    let inv_sqrt2 = T::FRAC_1_SQRT_2();
    (0..xs.len() * ps.len())
        .into_par_iter()
        .map(|k| {
            let (ip, ix) = (k / xs.len(), k % xs.len());
            husimi_q(components, C::new(xs[ix] * inv_sqrt2, ps[ip] * inv_sqrt2))
        })
        .collect()
}

/// Uniform grid from `lo` to `hi` inclusive with spacing at most `step`.
pub fn uniform_grid<T: Real>(lo: T, hi: T, step: T) -> Vec<T> {
    assert!(hi >= lo && step > T::zero(), "uniform_grid: bad bounds");
    let intervals = ((hi - lo) / step - lit::<T>(1e-9)).ceil().max(T::one());
    let n = intervals.to_usize().unwrap_or(1);
    let h = (hi - lo) / from_usize::<T>(n);
    (0..=n).map(|k| lo + h * from_usize::<T>(k)).collect()
}

/// Trapezoidal rule on a (possibly nonuniform) sorted grid.
pub fn trapezoid<T: Real>(xs: &[T], ys: &[T]) -> T {
    assert_eq!(xs.len(), ys.len(), "trapezoid: unequal lengths");
    let half = lit::<T>(0.5);
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (x[1] - x[0]) * (y[0] + y[1]) * half)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn truncation_dim_matches_floor_formula() {
        assert_eq!(truncation_dim(100.0).unwrap(), 140);
        assert_eq!(truncation_dim(500.0).unwrap(), 589);
        assert_eq!(truncation_dim(10.0).unwrap(), 22);
        assert!(matches!(truncation_dim(0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn vacuum_from_zero_alpha() {
        let v = coherent_amplitudes(C::new(0.0, 0.0), 5).unwrap();
        assert_eq!(v.amplitudes()[0], C::new(1.0, 0.0));
        assert!(v.amplitudes()[1..].iter().all(|z| z.norm() == 0.0));
        assert!(v.is_normalized());
    }

    #[test]
    fn coherent_ratio_c2_over_c0() {
        let v = coherent_amplitudes(C::new(2.0, 0.0), 30).unwrap();
        let r = v.amplitudes()[2] / v.amplitudes()[0];
        assert_abs_diff_eq!(r.re, 2.0 * 2f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(r.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn coherent_phase_enters_as_e_inphi() {
        let phi = 0.3;
        let v = coherent_amplitudes(C::from_polar(3.0, phi), 40).unwrap();
        let r = v.amplitudes()[5] / v.amplitudes()[4];
        assert_abs_diff_eq!(r.arg(), phi, epsilon = 1e-12);
        assert_abs_diff_eq!(r.norm(), 3.0 / 5f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn too_small_cutoff_is_a_truncation_error() {
        let err = coherent_amplitudes(C::new(10.0, 0.0), 100).unwrap_err();
        assert!(matches!(err, Error::Truncation { .. }));
        assert!(coherent_amplitudes(C::new(1.0, 0.0), 0).is_err());
    }

    #[test]
    fn large_alpha_does_not_underflow() {
        let v = coherent_amplitudes(C::new(40.0, 0.0), auto_dim(1600.0).unwrap()).unwrap();
        assert_abs_diff_eq!(v.norm_sqr(), 1.0, epsilon = 1e-11);
        let v32 = coherent_amplitudes(C::new(15.0f32, 0.0), auto_dim(225.0f32).unwrap()).unwrap();
        assert!((v32.norm_sqr() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn hermite_low_orders() {
        let h = hermite_functions(0.0, 3);
        assert_abs_diff_eq!(h[0], std::f64::consts::PI.powf(-0.25), epsilon = 1e-15);
        assert_abs_diff_eq!(h[0], 0.751125544464943, epsilon = 1e-12);
        assert_abs_diff_eq!(h[1], 0.0, epsilon = 1e-15);
        let x = 0.8;
        let h = hermite_functions(x, 3);
        let h0 = std::f64::consts::PI.powf(-0.25) * (-x * x / 2.0f64).exp();
        // h_2 = (2x² − 1) h_0 / √2
        assert_abs_diff_eq!(h[2], (2.0 * x * x - 1.0) * h0 / 2f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn hermite_guard_keeps_high_orders_at_large_x() {
        // at x = 40 the ground state underflows (e^{-800}) but h_800 is O(0.1)
        let h = hermite_functions(40.0f64, 900);
        assert_eq!(h[0], 0.0);
        assert!(h[799].abs() > 1e-3 || h[800].abs() > 1e-3);
        assert!(h.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn wavefunction_phase_convention() {
        let spec = QuadratureSpec::new(0.4, 0.3);
        let w = quadrature_wavefunction(3, &spec);
        let h3 = hermite_functions(0.3, 4)[3];
        assert_abs_diff_eq!(w.re, (-1.2f64).cos() * h3, epsilon = 1e-15);
        assert_abs_diff_eq!(w.im, (-1.2f64).sin() * h3, epsilon = 1e-15);
    }

    #[test]
    fn theta_is_reduced_into_range() {
        let s = QuadratureSpec::new(-std::f64::consts::FRAC_PI_2, 0.0);
        assert_abs_diff_eq!(s.theta(), 1.5 * std::f64::consts::PI, epsilon = 1e-15);
        let s = QuadratureSpec::new(2.0 * std::f64::consts::PI, 0.0);
        assert!(s.theta() < 1e-12);
    }

    #[test]
    fn husimi_coherent_self_overlap() {
        let beta = C::new(1.5, -0.5);
        let g = coherent_amplitudes(beta, 40).unwrap();
        assert_abs_diff_eq!(husimi_q(&[g], beta), 1.0 / std::f64::consts::PI, epsilon = 1e-12);
    }

    #[test]
    fn uniform_grid_hits_both_ends() {
        let g = uniform_grid(-2.0, 2.0, 0.01);
        assert_eq!(g.len(), 401);
        assert_eq!(*g.first().unwrap(), -2.0);
        assert_abs_diff_eq!(*g.last().unwrap(), 2.0, epsilon = 1e-14);
    }
}
