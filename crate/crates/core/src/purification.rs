//! The aB and aD purification protocols, their closed-form recursions, the
//! iteration driver and pair-cost accounting.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::bell::{
    b_unitaries, bell_diag_state, measure_pair, on_pair_qubit, pauli_x, rho_psi, twirl_bell_diagonal, twirl_full,
    FourQubitState, QubitPairState, A1, A2, B1, B2,
};
use crate::channel::TwoQubitChannel;
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::postselect::ideal_m;
use crate::scalar::{lit, to_f64, Real};

/// Hard cap on the number of purification rounds.
pub const MAX_ITERATIONS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Protocol {
    AB,
    AD,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::AB => "aB",
            Protocol::AD => "aD",
        })
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ab" => Ok(Protocol::AB),
            "ad" => Ok(Protocol::AD),
            other => Err(Error::domain(format!("unknown protocol `{other}` (aB | aD)"))),
        }
    }
}

/// The two-qubit operation applied to `(A₁, A₂)` and `(B₁, B₂)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Backend<T> {
    /// The projector `M_φ`.
    Ideal { phi: T },
    /// `ρ ↦ KρK†`.
    Kraus(CMat<T>),
    Channel(TwoQubitChannel<T>),
}

impl<T: Real> Backend<T> {
    pub fn ideal() -> Self {
        Backend::Ideal { phi: T::zero() }
    }

    fn apply(&self, state: &FourQubitState<T>) -> Result<FourQubitState<T>> {
        match self {
            Backend::Ideal { phi } => {
                let k = TwoQubitChannel::from_kraus(ideal_m(*phi))?;
                let s = k.apply_to_four(state, (A1, A2))?;
                k.apply_to_four(&s, (B1, B2))
            }
            Backend::Kraus(k) => {
                let k = TwoQubitChannel::from_kraus(k.clone())?;
                let s = k.apply_to_four(state, (A1, A2))?;
                k.apply_to_four(&s, (B1, B2))
            }
            Backend::Channel(c) => {
                let s = c.apply_to_four(state, (A1, A2))?;
                c.apply_to_four(&s, (B1, B2))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeRecord<T> {
    pub outcome: (u8, u8),
    /// Probability of the outcome given success of the two-qubit operations.
    pub probability: T,
    /// Corrected, normalized pair state (`None` for impossible outcomes).
    pub state: Option<QubitPairState<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolStepResult<T> {
    pub output: QubitPairState<T>,
    /// Trace after both two-qubit operations.
    pub success_probability: T,
    pub fidelity: T,
    pub per_outcome: Vec<OutcomeRecord<T>>,
}

/// Options for the aD step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AdOptions {
    /// Apply the final `b₃ ⊗ b₃` rotation.
    pub final_rotation: bool,
}

impl Default for AdOptions {
    fn default() -> Self {
        Self { final_rotation: true }
    }
}

fn run_step<T: Real>(
    a: QubitPairState<T>,
    b: QubitPairState<T>,
    backend: &Backend<T>,
    rotation: Option<&CMat<T>>,
) -> Result<ProtocolStepResult<T>> {
    let four = backend.apply(&FourQubitState::product(&a, &b))?;
    let success = four.trace();
    let floor = lit::<T>(1e-14);
    if !(success > floor) {
        return Err(Error::DegenerateStep(to_f64(success)));
    }
    let flip = on_pair_qubit(&pauli_x::<T>(), 0);
    let branches = measure_pair(&four, (A2, B2))?;
    let mut acc = CMat::zeros(4, 4);
    let mut per_outcome = Vec::with_capacity(4);
    for br in branches {
        let corrected = if br.outcome.0 == br.outcome.1 {
            br.unnormalized.conjugated(&flip)
        } else {
            br.unnormalized
        };
        let corrected = match rotation {
            Some(u) => corrected.conjugated(u),
            None => corrected,
        };
        acc = &acc + corrected.matrix();
        per_outcome.push(OutcomeRecord {
            outcome: br.outcome,
            probability: br.probability,
            state: corrected.normalized().ok().filter(|_| br.state.is_some()),
        });
    }
    let output = QubitPairState::from_matrix_unchecked(acc).normalized()?;
    let fidelity = output.fidelity();
    Ok(ProtocolStepResult {
        output,
        success_probability: success,
        fidelity,
        per_outcome,
    })
}

/// One aB round: Werner-twirl both inputs, apply the backend, measure
/// `(A₂, B₂)`, flip `A₁` on equal outcomes and keep every outcome.
pub fn step_ab<T: Real>(
    rho_a: &QubitPairState<T>,
    rho_b: &QubitPairState<T>,
    backend: &Backend<T>,
) -> Result<ProtocolStepResult<T>> {
    let a = twirl_full(&rho_a.normalized()?);
    let b = twirl_full(&rho_b.normalized()?);
    run_step(a, b, backend, None)
}

/// One aD round: Bell-diagonal twirl, backend, measurement and correction as
/// in aB, then optionally `b₃ ⊗ b₃` on the surviving pair.
pub fn step_ad<T: Real>(
    rho_a: &QubitPairState<T>,
    rho_b: &QubitPairState<T>,
    backend: &Backend<T>,
    options: AdOptions,
) -> Result<ProtocolStepResult<T>> {
    let a = twirl_bell_diagonal(&rho_a.normalized()?);
    let b = twirl_bell_diagonal(&rho_b.normalized()?);
    let b3 = &b_unitaries::<T>()[2];
    let rot = b3.kron(b3);
    run_step(a, b, backend, options.final_rotation.then_some(&rot))
}

/// `(F′, P)` of aB on two Werner states of fidelity `F`.
pub fn recursion_ab<T: Real>(f: T) -> (T, T) {
    recursion_ab_mixed(f, f)
}

/// `(F′, P)` of aB on Werner states of fidelities `F₁` and `F₂`.
pub fn recursion_ab_mixed<T: Real>(f1: T, f2: T) -> (T, T) {
    let (g1, g2) = (T::one() - f1, T::one() - f2);
    let three = lit::<T>(3.0);
    let nine = lit::<T>(9.0);
    let num = f1 * f2 + g1 * g2 / nine;
    let norm = f1 * f2 + (f1 * g2 + g1 * f2) / three + lit::<T>(5.0) * g1 * g2 / nine;
    (num / norm, norm * lit(0.5))
}

/// `(weights′, P)` of aD on two copies of the Bell-diagonal state with
/// weights `(F, F₁, F₂, F₃)` on `(Ψ⁻, Φ⁻, Φ⁺, Ψ⁺)`.
pub fn recursion_ad<T: Real>(w: [T; 4]) -> ([T; 4], T) {
    let [f, f1, f2, f3] = w;
    let two = lit::<T>(2.0);
    let d = (f + f1).powi(2) + (f2 + f3).powi(2);
    (
        [(f * f + f1 * f1) / d, two * f2 * f3 / d, two * f * f1 / d, (f2 * f2 + f3 * f3) / d],
        d / two,
    )
}

/// `(F′, P)` of aD on `ρ_Ψ(F_a)` and `ρ_Ψ(F_b)`.
pub fn recursion_ad_psi<T: Real>(fa: T, fb: T) -> (T, T) {
    let d = fa * fb + (T::one() - fa) * (T::one() - fb);
    (fa * fb / d, d * lit(0.5))
}

/// When to stop iterating.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stop<T> {
    Iterations(usize),
    TargetFidelity(T),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryPoint<T> {
    pub iteration: usize,
    pub fidelity: T,
    /// Success probability of the round that produced this point (1 for the
    /// initial state).
    pub success_probability: T,
    /// `Π_{k ≤ iteration} 2/P_k`.
    pub cumulative_pairs: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    pub protocol: Protocol,
    pub points: Vec<TrajectoryPoint<T>>,
    pub final_state: QubitPairState<T>,
    pub warnings: Vec<String>,
}

impl<T: Real> Trajectory<T> {
    pub fn final_fidelity(&self) -> T {
        self.points.last().map(|p| p.fidelity).unwrap_or_else(T::zero)
    }

    pub fn iterations(&self) -> usize {
        self.points.last().map(|p| p.iteration).unwrap_or(0)
    }
}

/// Running products `Π 2/P_k`.
pub fn cumulative_pairs<T: Real>(probabilities: &[T]) -> Vec<T> {
    let two = lit::<T>(2.0);
    probabilities
        .iter()
        .scan(T::one(), |acc, p| {
            *acc = *acc * two / *p;
            Some(*acc)
        })
        .collect()
}

/// Feeds two copies of the current pair into `protocol` until `stop`.
pub fn iterate<T: Real>(
    protocol: Protocol,
    initial: &QubitPairState<T>,
    stop: Stop<T>,
    backend: &Backend<T>,
    ad: AdOptions,
) -> Result<Trajectory<T>> {
    let mut warnings = Vec::new();
    let mut state = initial.normalized()?;
    let f0 = state.fidelity();
    if protocol == Protocol::AB && f0 <= lit(0.5) {
        warnings.push(format!("initial fidelity {f0} <= 1/2: aB cannot purify this state"));
    }
    let max_rounds = match stop {
        Stop::Iterations(n) if n > MAX_ITERATIONS => {
            return Err(Error::domain(format!("at most {MAX_ITERATIONS} iterations, got {n}")));
        }
        Stop::Iterations(n) => n,
        Stop::TargetFidelity(_) => MAX_ITERATIONS,
    };
    let mut points = vec![TrajectoryPoint {
        iteration: 0,
        fidelity: f0,
        success_probability: T::one(),
        cumulative_pairs: T::one(),
    }];
    let reached = |f: T| matches!(stop, Stop::TargetFidelity(target) if f >= target);
    let mut pairs = T::one();
    let mut round = 0;
    while round < max_rounds && !reached(points[round].fidelity) {
        let step = match protocol {
            Protocol::AB => step_ab(&state, &state, backend)?,
            Protocol::AD => step_ad(&state, &state, backend, ad)?,
        };
        round += 1;
        pairs = pairs * lit::<T>(2.0) / step.success_probability;
        points.push(TrajectoryPoint {
            iteration: round,
            fidelity: step.fidelity,
            success_probability: step.success_probability,
            cumulative_pairs: pairs,
        });
        state = step.output;
    }
    if let Stop::TargetFidelity(target) = stop {
        if points[round].fidelity < target {
            return Err(Error::NoConvergence(MAX_ITERATIONS));
        }
    }
    Ok(Trajectory {
        protocol,
        points,
        final_state: state,
        warnings,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComparisonRow<T> {
    pub f: T,
    pub ab_fidelity: T,
    pub ab_probability: T,
    pub ad_fidelity: T,
    pub ad_probability: T,
}

/// Both recursions on `ρ_Ψ(F)` inputs over `grid`.
pub fn compare_protocols<T: Real>(grid: &[T]) -> Vec<ComparisonRow<T>> {
    grid.par_iter()
        .map(|&f| {
            let (ab_fidelity, ab_probability) = recursion_ab(f);
            let (ad_fidelity, ad_probability) = recursion_ad_psi(f, f);
            ComparisonRow {
                f,
                ab_fidelity,
                ab_probability,
                ad_fidelity,
                ad_probability,
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResourceRow<T> {
    pub iteration: usize,
    pub fidelity: T,
    pub cumulative_pairs: T,
}

/// Ideal-backend rounds needed to reach `target` from `ρ_Ψ(F₀)` (aD) or the
/// Werner state of fidelity `F₀` (aB), with the pair cost after each round.
pub fn resources<T: Real>(protocol: Protocol, f0: T, target: T) -> Result<Vec<ResourceRow<T>>> {
    if !(f0 > lit(0.5) && f0 <= T::one()) {
        return Err(Error::precondition(format!("initial fidelity must lie in (1/2, 1], got {f0}")));
    }
    let mut rows = vec![ResourceRow {
        iteration: 0,
        fidelity: f0,
        cumulative_pairs: T::one(),
    }];
    let (mut f, mut pairs) = (f0, T::one());
    while f < target {
        if rows.len() > MAX_ITERATIONS {
            return Err(Error::NoConvergence(MAX_ITERATIONS));
        }
        let (next, p) = match protocol {
            Protocol::AB => recursion_ab(f),
            Protocol::AD => recursion_ad_psi(f, f),
        };
        f = next;
        pairs = pairs * lit::<T>(2.0) / p;
        rows.push(ResourceRow {
            iteration: rows.len(),
            fidelity: f,
            cumulative_pairs: pairs,
        });
    }
    Ok(rows)
}

/// Initial state used by the drivers: `ρ_Ψ(F)` for aD, Werner for aB.
pub fn canonical_input<T: Real>(protocol: Protocol, f: T) -> Result<QubitPairState<T>> {
    match protocol {
        Protocol::AB => crate::bell::werner_state(f),
        Protocol::AD => rho_psi(f),
    }
}

/// Bell-diagonal state from weights, for callers holding `[T; 4]`.
pub fn from_weights<T: Real>(w: [T; 4]) -> Result<QubitPairState<T>> {
    bell_diag_state(w[0], w[1], w[2], w[3])
}
