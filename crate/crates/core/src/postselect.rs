//! Conditioning the atom pair on a measurement of the cavity field.

use rayon::prelude::*;
use statrs::function::erf::erf;

use crate::bell::bell_vectors;
use crate::channel::TwoQubitChannel;
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::fock::{coherent_amplitudes, quadrature_row, trapezoid, uniform_grid, QuadratureSpec};
use crate::jc::{evolve_sequential_unchecked, AtomFieldState};
use crate::linalg::{inner, norm_sqr, CMat};
use crate::scalar::{czero, lit, to_f64, Real, C};

/// Default integration step for windowed quadrature probabilities.
pub const DEFAULT_P_STEP: f64 = 0.01;

/// Two-qubit amplitudes left after projecting the field, with their weight.
#[derive(Clone, Debug, PartialEq)]
pub struct PostselectedState<T> {
    pub amplitudes: [C<T>; 4],
    /// `Σ|amplitudes|²`: a probability (coherent projection) or a probability
    /// density in the quadrature value (quadrature projection).
    pub weight: T,
}

impl<T: Real> PostselectedState<T> {
    pub fn from_amplitudes(amplitudes: [C<T>; 4]) -> Self {
        Self {
            weight: norm_sqr(&amplitudes),
            amplitudes,
        }
    }

    /// Unit-norm amplitudes, or `None` for a zero-weight event.
    pub fn normalized(&self) -> Option<[C<T>; 4]> {
        if self.weight > T::zero() {
            let s = T::one() / self.weight.sqrt();
            Some(self.amplitudes.map(|a| a * s))
        } else {
            None
        }
    }

    /// `|⟨target|ψ⟩|²` with both vectors normalized.
    pub fn fidelity_to(&self, target: &[C<T>; 4]) -> Option<T> {
        let psi = self.normalized()?;
        let tn = norm_sqr(target);
        if tn <= T::zero() {
            return None;
        }
        Some(inner(target, &psi).norm_sqr() / tn)
    }
}

/// `M_φ = |Ψ⁻⟩⟨Ψ⁻| + |Φ⁻_φ⟩⟨Φ⁻_φ|`.
pub fn ideal_m<T: Real>(phi: T) -> CMat<T> {
    let b = bell_vectors(phi);
    &CMat::outer(&b.psi_minus, &b.psi_minus) + &CMat::outer(&b.phi_minus, &b.phi_minus)
}

/// `⟨α|g_ij⟩` for every pair component.
pub fn project_coherent<T: Real>(state: &AtomFieldState<T>, alpha: C<T>) -> Result<PostselectedState<T>> {
    let bra = coherent_amplitudes(alpha, state.n_f())?;
    let amps = std::array::from_fn(|k| inner(bra.amplitudes(), state.components()[k].amplitudes()));
    Ok(PostselectedState::from_amplitudes(amps))
}

/// `⟨x_θ|g_ij⟩` for every pair component.
pub fn project_quadrature<T: Real>(state: &AtomFieldState<T>, spec: &QuadratureSpec<T>) -> PostselectedState<T> {
    let row = quadrature_row(spec, state.n_f());
    project_with_row(state, &row)
}

fn project_with_row<T: Real>(state: &AtomFieldState<T>, row: &[C<T>]) -> PostselectedState<T> {
    let amps = std::array::from_fn(|k| state.components()[k].project_onto(row));
    PostselectedState::from_amplitudes(amps)
}

/// `P(x) = Σ_ij |⟨x_θ|g_ij⟩|²` at every grid point.
pub fn quadrature_pdf<T: Real>(state: &AtomFieldState<T>, theta: T, grid: &[T]) -> Vec<T> {
    grid.par_iter()
        .map(|&x| project_quadrature(state, &QuadratureSpec::new(theta, x)).weight)
        .collect()
}

/// Trapezoidal integral of [`quadrature_pdf`] over `window` with spacing at
/// most `step`.
pub fn success_probability<T: Real>(state: &AtomFieldState<T>, theta: T, window: [T; 2], step: T) -> Result<T> {
    if !(window[0] < window[1]) {
        return Err(Error::domain(format!("window must satisfy lo < hi, got [{}, {}]", window[0], window[1])));
    }
    if !(step > T::zero()) {
        return Err(Error::domain("integration step must be > 0"));
    }
    let grid = uniform_grid(window[0], window[1], step);
    let pdf = quadrature_pdf(state, theta, &grid);
    Ok(trapezoid(&grid, &pdf))
}

/// The `⋆` branch `M_φ c` of the three-branch picture.
pub fn star_amplitudes<T: Real>(c: &[C<T>; 4], phi: T) -> [C<T>; 4] {
    let v = ideal_m(phi).matvec(c);
    std::array::from_fn(|k| v[k])
}

/// `|⟨ψ⋆|W₂ψ⟩|²` with both vectors normalized first.
pub fn fidelity_star<T: Real>(state: &AtomFieldState<T>, spec: &QuadratureSpec<T>, c: &[C<T>; 4], phi: T) -> Result<T> {
    let star = star_amplitudes(c, phi);
    let scale = lit::<T>(1e-12) * norm_sqr(c).max(T::min_positive_value());
    if norm_sqr(&star) <= scale {
        return Err(Error::UndefinedFidelity("input has no component in the range of M".into()));
    }
    project_quadrature(state, spec)
        .fidelity_to(&star)
        .ok_or_else(|| Error::UndefinedFidelity("postselected state has zero weight".into()))
}

/// Large-`n̄` estimates of the windowed success probability built from
/// `erf` and `s = ⟨ψ⋆|ψ⋆⟩`. The numerical integral is the reference value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymptoticSuccess {
    pub star_norm_sqr: f64,
    pub window_erf: f64,
    /// `erf / s²`.
    pub divided: f64,
    /// `erf · s`.
    pub multiplied: f64,
}

pub fn asymptotic_success<T: Real>(c: &[C<T>; 4], phi: T, window: [f64; 2]) -> AsymptoticSuccess {
    let s = to_f64(norm_sqr(&star_amplitudes(c, phi)));
    let window_erf = 0.5 * (erf(window[1]) - erf(window[0]));
    AsymptoticSuccess {
        star_norm_sqr: s,
        window_erf,
        divided: if s > 0.0 { window_erf / (s * s) } else { f64::INFINITY },
        multiplied: window_erf * s,
    }
}

/// The 4×4 matrix `K` whose column `i` is the quadrature-postselected output
/// of basis input `e_i`.
pub fn w2_kraus_matrix<T: Real>(config: &SimConfig) -> Result<CMat<T>> {
    if config.is_lossy() {
        return Err(Error::precondition("the Kraus form requires kappa = gamma = 0"));
    }
    config.validate()?;
    let n_f = config.resolved_n_f()?;
    let alpha = config.alpha::<T>();
    let spec = QuadratureSpec::new(lit::<T>(config.theta()), lit::<T>(config.p()));
    let row = quadrature_row(&spec, n_f);
    let (g1, g2) = (lit::<T>(config.gtau1), lit::<T>(config.gtau2()));
    let mut k = CMat::zeros(4, 4);
    for i in 0..4 {
        let mut e = [czero(); 4];
        e[i] = C::new(T::one(), T::zero());
        let evolved = evolve_sequential_unchecked(&e, alpha, g1, g2, n_f)?;
        let out = project_with_row(&evolved, &row);
        for (r, a) in out.amplitudes.iter().enumerate() {
            k[(r, i)] = *a;
        }
    }
    Ok(k)
}

/// Rank-1 channel `ρ ↦ KρK†` of [`w2_kraus_matrix`].
pub fn w2_kraus<T: Real>(config: &SimConfig) -> Result<TwoQubitChannel<T>> {
    TwoQubitChannel::from_kraus(w2_kraus_matrix(config)?)
}
