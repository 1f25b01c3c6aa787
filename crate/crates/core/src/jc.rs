//! Exact sequential resonant Jaynes–Cummings evolution of two qubits passing
//! one after the other through a single-mode cavity.
//!
//! Qubit states are labelled `|ij⟩ = |i⟩_{A₁}|j⟩_{A₂}` with `0` the ground and
//! `1` the excited level; two-qubit amplitude arrays are ordered
//! `[c00, c01, c10, c11]`.

use crate::error::{Error, Result};
use crate::fock::{coherent_amplitudes, FieldVector};
use crate::linalg::norm_sqr;
use crate::scalar::{cis, czero, from_usize, lit, mul_neg_i, to_f64, Real, C};

/// Dropped mass per step above which evolution is rejected.
pub const MAX_DROPPED_MASS: f64 = 1e-6;

/// Which qubit crosses the cavity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Atom {
    First,
    Second,
}

/// Pure joint state `Σ_ij |ij⟩|g_ij⟩` of the two qubits and the field.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomFieldState<T> {
    components: [FieldVector<T>; 4],
    dropped_mass: T,
}

#[inline]
pub fn pair_index(a1: usize, a2: usize) -> usize {
    2 * a1 + a2
}

impl<T: Real> AtomFieldState<T> {
    /// `Σ_ij c_ij |ij⟩ ⊗ |field⟩`.
    pub fn product(c: &[C<T>; 4], field: &FieldVector<T>) -> Self {
        Self {
            components: std::array::from_fn(|k| field.scaled(c[k])),
            dropped_mass: T::zero(),
        }
    }

    pub fn from_components(components: [FieldVector<T>; 4]) -> Result<Self> {
        let n_f = components[0].n_f();
        if let Some(bad) = components.iter().find(|g| g.n_f() != n_f) {
            return Err(Error::Dimension {
                expected: n_f,
                got: bad.n_f(),
            });
        }
        Ok(Self {
            components,
            dropped_mass: T::zero(),
        })
    }

    pub fn n_f(&self) -> usize {
        self.components[0].n_f()
    }

    /// `|g_ij⟩`.
    pub fn component(&self, a1: usize, a2: usize) -> &FieldVector<T> {
        &self.components[pair_index(a1, a2)]
    }

    pub fn components(&self) -> &[FieldVector<T>; 4] {
        &self.components
    }

    /// `Σ_ij ‖g_ij‖²`.
    pub fn total_norm(&self) -> T {
        self.components.iter().map(FieldVector::norm_sqr).sum()
    }

    /// Norm lost at the cutoff over all steps so far.
    pub fn dropped_mass(&self) -> T {
        self.dropped_mass
    }
}

/// Applies the resonant JCM propagator `exp(−i gτ (a σ₊ + a† σ₋))` to one
/// qubit and the field, leaving the other qubit's index untouched.
///
/// Within each doublet `{|1,n⟩, |0,n+1⟩}` the rotation angle is `Ω_n τ` with
/// `Ω_n = g√(n+1)`; `|0,0⟩` is dark. The doublet of the top level `|1,n_f−1⟩`
/// leaks into `|0,n_f⟩`, which is dropped and accounted in the state.
pub fn jcm_step<T: Real>(state: &AtomFieldState<T>, atom: Atom, gtau: T) -> Result<AtomFieldState<T>> {
    if !(gtau >= T::zero()) {
        return Err(Error::domain(format!("jcm_step needs gtau >= 0, got {gtau}")));
    }
    let n_f = state.n_f();
    let (cosines, sines): (Vec<T>, Vec<T>) = (0..n_f)
        .map(|n| {
            let angle = gtau * from_usize::<T>(n + 1).sqrt();
            (angle.cos(), angle.sin())
        })
        .unzip();

    let mut out = state.clone();
    let mut dropped = T::zero();
    for spectator in 0..2 {
        let (ig, ie) = match atom {
            Atom::First => (pair_index(0, spectator), pair_index(1, spectator)),
            Atom::Second => (pair_index(spectator, 0), pair_index(spectator, 1)),
        };
        let ground = state.components[ig].amplitudes();
        let excited = state.components[ie].amplitudes();
        let mut new_ground = vec![czero(); n_f];
        let mut new_excited = vec![czero(); n_f];
        new_ground[0] = ground[0];
        for n in 0..n_f {
            let (c, s) = (cosines[n], sines[n]);
            if n + 1 < n_f {
                // |1,n⟩ ↔ |0,n+1⟩
                new_excited[n] = excited[n] * c + mul_neg_i(ground[n + 1]) * s;
                new_ground[n + 1] = ground[n + 1] * c + mul_neg_i(excited[n]) * s;
            } else {
                new_excited[n] = excited[n] * c;
                dropped += excited[n].norm_sqr() * s * s;
            }
        }
        out.components[ig] = FieldVector::from_amplitudes(new_ground);
        out.components[ie] = FieldVector::from_amplitudes(new_excited);
    }
    if to_f64(dropped) > MAX_DROPPED_MASS {
        return Err(Error::Truncation {
            what: format!("JCM step pushed amplitude past the cutoff n_f = {n_f}"),
            mass: to_f64(dropped),
        });
    }
    out.dropped_mass += dropped;
    Ok(out)
}

/// Checks `Σ|c|² = 1 ± 1e-10`.
pub fn check_normalized<T: Real>(c: &[C<T>; 4]) -> Result<()> {
    let n = to_f64(norm_sqr(c));
    let tol = if std::mem::size_of::<T>() < 8 { 1e-5 } else { 1e-10 };
    if (n - 1.0).abs() > tol {
        return Err(Error::precondition(format!("qubit amplitudes have norm² {n}, expected 1")));
    }
    Ok(())
}

/// `|Ψ(τ)⟩ = e^{−iH^{A₂}τ₂} e^{−iH^{A₁}τ₁} (Σ c_ij|ij⟩)|α⟩`.
pub fn evolve_sequential<T: Real>(
    c: &[C<T>; 4],
    alpha: C<T>,
    gtau1: T,
    gtau2: T,
    n_f: usize,
) -> Result<AtomFieldState<T>> {
    check_normalized(c)?;
    evolve_sequential_unchecked(c, alpha, gtau1, gtau2, n_f)
}

/// As [`evolve_sequential`] without the normalization precondition, for
/// linear maps built column by column.
pub fn evolve_sequential_unchecked<T: Real>(
    c: &[C<T>; 4],
    alpha: C<T>,
    gtau1: T,
    gtau2: T,
    n_f: usize,
) -> Result<AtomFieldState<T>> {
    let field = coherent_amplitudes(alpha, n_f)?;
    let s0 = AtomFieldState::product(c, &field);
    let s1 = jcm_step(&s0, Atom::First, gtau1)?;
    jcm_step(&s1, Atom::Second, gtau2)
}

/// Three-branch coherent-state approximation of the evolved state:
/// `ψ₋|αe^{−igτ/√n̄}⟩ + ψ₊|αe^{+igτ/√n̄}⟩ + ψ⋆|α⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchDecomposition<T> {
    /// Two-qubit amplitudes paired with `|α⟩`.
    pub psi_star: [C<T>; 4],
    /// Paired with `|α e^{+igτ/√n̄}⟩`.
    pub psi_plus: [C<T>; 4],
    /// Paired with `|α e^{−igτ/√n̄}⟩`.
    pub psi_minus: [C<T>; 4],
    /// Coherent amplitudes of the branches in the order (⋆, +, −).
    pub labels: [C<T>; 3],
}

impl<T: Real> BranchDecomposition<T> {
    pub fn total_norm(&self) -> T {
        norm_sqr(&self.psi_star) + norm_sqr(&self.psi_plus) + norm_sqr(&self.psi_minus)
    }

    /// Full joint state `Σ_b ψ_b ⊗ |label_b⟩` on `n_f` levels.
    pub fn reconstruct(&self, n_f: usize) -> Result<AtomFieldState<T>> {
        let branches = [
            (&self.psi_star, self.labels[0]),
            (&self.psi_plus, self.labels[1]),
            (&self.psi_minus, self.labels[2]),
        ];
        let mut comps: [Vec<C<T>>; 4] = std::array::from_fn(|_| vec![czero(); n_f]);
        for (amps, label) in branches {
            let field = coherent_amplitudes(label, n_f)?;
            for (k, comp) in comps.iter_mut().enumerate() {
                for (dst, f) in comp.iter_mut().zip(field.amplitudes()) {
                    *dst += amps[k] * *f;
                }
            }
        }
        AtomFieldState::from_components(comps.map(FieldVector::from_amplitudes))
    }
}

/// Branch decomposition of `(Σ c_ij|ij⟩)|α⟩` after two equal interaction times.
pub fn branch_decompose<T: Real>(c: &[C<T>; 4], alpha: C<T>, gtau: T) -> Result<BranchDecomposition<T>> {
    let nbar = alpha.norm_sqr();
    if nbar < T::one() {
        return Err(Error::domain(format!("branch_decompose needs |α| >= 1, got {}", alpha.norm())));
    }
    let phi = alpha.arg();
    let e_phi = cis(phi);
    let inv_sqrt2 = T::FRAC_1_SQRT_2();
    let half = lit::<T>(0.5);
    let bell = crate::bell::bell_vectors(phi);

    let star_psi = (c[1] - c[2]) * inv_sqrt2;
    let star_phi = (c[0] * e_phi - c[3] * e_phi.conj()) * inv_sqrt2;
    let psi_star: [C<T>; 4] =
        std::array::from_fn(|k| bell.psi_minus[k] * star_psi + bell.phi_minus[k] * star_phi);

    let sym = c[0] * e_phi + c[3] * e_phi.conj();
    let anti = c[1] + c[2];
    let sqrt_nbar = nbar.sqrt();
    let branch = |sign: T| -> [C<T>; 4] {
        // (sym ∓ anti) / (2 e^{∓ig√n̄τ}) · (|Φ⁺_φ⟩ ∓ |Ψ⁺⟩)/√2, sign = ±1 for ψ±
        let coeff = (sym - anti * sign) * half * cis(sign * gtau * sqrt_nbar);
        std::array::from_fn(|k| (bell.phi_plus[k] - bell.psi_plus[k] * sign) * inv_sqrt2 * coeff)
    };
    let rot = gtau / sqrt_nbar;
    Ok(BranchDecomposition {
        psi_star,
        psi_plus: branch(T::one()),
        psi_minus: branch(-T::one()),
        labels: [alpha, alpha * cis(rot), alpha * cis(-rot)],
    })
}

/// Exact overlap `⟨α|αe^{igτ/√n̄}⟩ = exp[−n̄(1 − e^{igτ/√n̄})]`.
pub fn coherent_overlap<T: Real>(nbar: T, gtau: T) -> Result<C<T>> {
    if !(nbar > T::zero()) {
        return Err(Error::domain(format!("coherent_overlap needs nbar > 0, got {nbar}")));
    }
    let z = (C::new(T::one(), T::zero()) - cis(gtau / nbar.sqrt())) * (-nbar);
    Ok(z.exp())
}

/// Large-`n̄` limit `e^{−(gτ)²/2}` of [`coherent_overlap`].
pub fn coherent_overlap_asymptotic<T: Real>(gtau: T) -> T {
    (-gtau * gtau * lit::<T>(0.5)).exp()
}

/// Outcome of checking the interaction-time window `√2 < gτ ≪ √n̄`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegimeDiagnostic {
    /// `gτ > √2`: the three field branches are nearly orthogonal.
    pub orthogonality: bool,
    /// `gτ ≤ √n̄/5`: the linearized Rabi frequency is accurate.
    pub linearization: bool,
    pub valid: bool,
}

pub fn validate_regime<T: Real>(nbar: T, gtau: T) -> RegimeDiagnostic {
    let orthogonality = gtau > T::SQRT_2();
    let linearization = nbar >= T::zero() && gtau <= nbar.sqrt() / lit::<T>(5.0);
    RegimeDiagnostic {
        orthogonality,
        linearization,
        valid: orthogonality && linearization,
    }
}

impl std::fmt::Display for RegimeDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.orthogonality, self.linearization) {
            (true, true) => write!(f, "interaction time inside the valid window"),
            (false, true) => write!(f, "gτ <= √2: field branches overlap"),
            (true, false) => write!(f, "gτ > √n̄/5: coherent-branch linearization degrades"),
            (false, false) => write!(f, "gτ outside both window bounds"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::auto_dim;
    use approx::assert_abs_diff_eq;

    fn basis(k: usize) -> [C<f64>; 4] {
        std::array::from_fn(|j| if j == k { C::new(1.0, 0.0) } else { C::new(0.0, 0.0) })
    }

    #[test]
    fn ground_vacuum_is_dark() {
        let s = AtomFieldState::product(&basis(0), &FieldVector::vacuum(6));
        let out = jcm_step(&s, Atom::First, 1.234).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn vacuum_rabi_half_period() {
        // |10⟩|0⟩ → −i|00⟩|1⟩ at gτ = π/2
        let s = AtomFieldState::product(&basis(2), &FieldVector::vacuum(6));
        let out = jcm_step(&s, Atom::First, std::f64::consts::FRAC_PI_2).unwrap();
        let g00 = out.component(0, 0).amplitudes();
        assert_abs_diff_eq!(g00[1].im, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.component(1, 0).norm_sqr(), 0.0, epsilon = 1e-30);
    }

    #[test]
    fn second_atom_step_leaves_first_index() {
        let s = AtomFieldState::product(&basis(1), &FieldVector::vacuum(6));
        let out = jcm_step(&s, Atom::Second, std::f64::consts::FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(out.component(0, 0).amplitudes()[1].im, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.component(1, 0).norm_sqr() + out.component(1, 1).norm_sqr(), 0.0);
    }

    #[test]
    fn negative_time_rejected() {
        let s = AtomFieldState::product(&basis(0), &FieldVector::vacuum(3));
        assert!(matches!(jcm_step(&s, Atom::First, -0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn cutoff_leak_is_a_truncation_error() {
        let s = AtomFieldState::product(&basis(3), &FieldVector::fock(4, 5));
        let err = jcm_step(&s, Atom::First, 0.5).unwrap_err();
        assert!(matches!(err, Error::Truncation { .. }));
    }

    #[test]
    fn identity_at_zero_time() {
        let c = [C::new(0.5, 0.0), C::new(0.0, 0.5), C::new(-0.5, 0.0), C::new(0.5, 0.0)];
        let alpha = C::new(3.0, 0.0);
        let n_f = auto_dim(9.0).unwrap();
        let s = evolve_sequential(&c, alpha, 0.0, 0.0, n_f).unwrap();
        let field = coherent_amplitudes(alpha, n_f).unwrap();
        for k in 0..4 {
            for (a, b) in s.components()[k].amplitudes().iter().zip(field.amplitudes()) {
                assert_abs_diff_eq!((*a - c[k] * *b).norm(), 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn unnormalized_input_rejected() {
        let c = [C::new(1.0, 0.0), C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0)];
        assert!(matches!(
            evolve_sequential(&c, C::new(2.0, 0.0), 1.0, 1.0, 30),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn singlet_lives_in_star_branch() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let c = [C::new(0.0, 0.0), C::new(s, 0.0), C::new(-s, 0.0), C::new(0.0, 0.0)];
        let b = branch_decompose(&c, C::new(10.0, 0.0), 2.0).unwrap();
        for k in 0..4 {
            assert_abs_diff_eq!((b.psi_star[k] - c[k]).norm(), 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(b.psi_plus[k].norm(), 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(b.psi_minus[k].norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn ground_pair_star_branch_is_half_phi_minus() {
        let b = branch_decompose(&basis(0), C::new(10.0, 0.0), 2.0).unwrap();
        // ψ⋆ = Φ⁻/√2 = (|00⟩ − |11⟩)/2
        assert_abs_diff_eq!(b.psi_star[0].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(b.psi_star[3].re, -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(norm_sqr(&b.psi_star), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(b.total_norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn overlap_values() {
        let o = coherent_overlap(50.0, 0.0).unwrap();
        assert_abs_diff_eq!(o.re, 1.0, epsilon = 1e-15);
        let (nbar, gt) = (37.0f64, 1.3f64);
        let o = coherent_overlap(nbar, gt).unwrap();
        assert_abs_diff_eq!(o.norm(), (-nbar * (1.0 - (gt / nbar.sqrt()).cos())).exp(), epsilon = 1e-14);
        let o = coherent_overlap(200.0f64, 2.0).unwrap();
        let asym = coherent_overlap_asymptotic(2.0f64);
        assert_abs_diff_eq!(asym, 0.1353352832366127, epsilon = 1e-15);
        assert!((o.norm() - asym).abs() / asym < 0.02);
        assert!(coherent_overlap(0.0, 1.0).is_err());
    }

    #[test]
    fn regime_window() {
        let d = validate_regime(100.0, 2.0);
        assert!(d.orthogonality && d.linearization && d.valid);
        let d = validate_regime(100.0, 1.0);
        assert!(!d.orthogonality && !d.valid);
        let d = validate_regime(10.0, 2.0);
        assert!(d.orthogonality && !d.linearization && !d.valid);
    }
}
