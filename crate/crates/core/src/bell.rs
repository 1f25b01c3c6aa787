//! Bell-state algebra, the local unitaries used for twirling, Werner and
//! Bell-diagonal states, and index plumbing for four-qubit density matrices.
//!
//! Four-qubit states use the canonical qubit order `(A₁, B₁, A₂, B₂)` with
//! `A₁` the most significant bit of the 16-dimensional index.

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::scalar::{cis, czero, lit, Real, C};

/// Qubit positions in a [`FourQubitState`].
pub const A1: usize = 0;
pub const B1: usize = 1;
pub const A2: usize = 2;
pub const B2: usize = 3;
pub const FOUR_QUBIT_LABELS: [&str; 4] = ["A1", "B1", "A2", "B2"];

/// Bell vectors in the computational basis `|00⟩, |01⟩, |10⟩, |11⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct BellBasis<T> {
    pub psi_minus: [C<T>; 4],
    pub psi_plus: [C<T>; 4],
    pub phi_minus: [C<T>; 4],
    pub phi_plus: [C<T>; 4],
}

impl<T: Real> BellBasis<T> {
    /// In the order of the Bell-diagonal weights `(F, F₁, F₂, F₃)`:
    /// `Ψ⁻, Φ⁻, Φ⁺, Ψ⁺`.
    pub fn ordered(&self) -> [&[C<T>; 4]; 4] {
        [&self.psi_minus, &self.phi_minus, &self.phi_plus, &self.psi_plus]
    }
}

/// `Ψ± = (|01⟩ ± |10⟩)/√2`, `Φ±_φ = (e^{−iφ}|00⟩ ± e^{iφ}|11⟩)/√2`.
pub fn bell_vectors<T: Real>(phi: T) -> BellBasis<T> {
    let s = T::FRAC_1_SQRT_2();
    let z = czero::<T>();
    let r = C::new(s, T::zero());
    let em = cis(-phi) * s;
    let ep = cis(phi) * s;
    BellBasis {
        psi_minus: [z, r, -r, z],
        psi_plus: [z, r, r, z],
        phi_minus: [em, z, z, -ep],
        phi_plus: [em, z, z, ep],
    }
}

pub fn pauli_x<T: Real>() -> CMat<T> {
    let (o, l) = (czero::<T>(), C::new(T::one(), T::zero()));
    CMat::from_vec(2, 2, vec![o, l, l, o])
}

pub fn pauli_y<T: Real>() -> CMat<T> {
    let o = czero::<T>();
    CMat::from_vec(2, 2, vec![o, C::new(T::zero(), -T::one()), C::new(T::zero(), T::one()), o])
}

pub fn pauli_z<T: Real>() -> CMat<T> {
    CMat::from_real_diagonal(&[T::one(), -T::one()])
}

/// Single-qubit unitaries `b₁ = (𝟙 + iσx)/√2`, `b₂ = (𝟙 − iσy)/√2`,
/// `b₃ = |1⟩⟨1| + i|0⟩⟨0|`, `b₄ = 𝟙`.
pub fn b_unitaries<T: Real>() -> [CMat<T>; 4] {
    let s = C::new(T::FRAC_1_SQRT_2(), T::zero());
    let id = CMat::<T>::identity(2);
    let i = C::new(T::zero(), T::one());
    let b1 = (&id + &pauli_x::<T>().scale(i)).scale(s);
    let b2 = (&id - &pauli_y::<T>().scale(i)).scale(s);
    let mut b3 = CMat::zeros(2, 2);
    b3[(0, 0)] = i;
    b3[(1, 1)] = C::new(T::one(), T::zero());
    [b1, b2, b3, id]
}

/// Two-qubit density matrix in the computational basis.
#[derive(Clone, Debug, PartialEq)]
pub struct QubitPairState<T> {
    rho: CMat<T>,
}

impl<T: Real> QubitPairState<T> {
    /// Wraps a 4×4 matrix after checking it is Hermitian.
    pub fn new(rho: CMat<T>) -> Result<Self> {
        if rho.rows() != 4 || rho.cols() != 4 {
            return Err(Error::Dimension {
                expected: 4,
                got: rho.rows(),
            });
        }
        let tol = lit::<T>(1e-9).max(T::epsilon() * lit(64.0));
        if rho.hermiticity_residual() > tol {
            return Err(Error::precondition("pair state is not Hermitian"));
        }
        Ok(Self { rho })
    }

    pub(crate) fn from_matrix_unchecked(rho: CMat<T>) -> Self {
        Self { rho }
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn pure(psi: &[C<T>; 4]) -> Self {
        Self {
            rho: CMat::outer(psi, psi),
        }
    }

    pub fn matrix(&self) -> &CMat<T> {
        &self.rho
    }

    pub fn into_matrix(self) -> CMat<T> {
        self.rho
    }

    pub fn trace(&self) -> T {
        self.rho.trace().re
    }

    pub fn normalized(&self) -> Result<Self> {
        let t = self.trace();
        if !(t > T::zero()) {
            return Err(Error::DegenerateStep(crate::scalar::to_f64(t)));
        }
        Ok(Self {
            rho: self.rho.scale_real(T::one() / t),
        })
    }

    /// Singlet fidelity `⟨Ψ⁻|ρ|Ψ⁻⟩`.
    pub fn fidelity(&self) -> T {
        let b = bell_vectors(T::zero());
        self.rho.sandwich(&b.psi_minus, &b.psi_minus).re
    }

    /// Bell-basis populations `(F, F₁, F₂, F₃)` on `(Ψ⁻, Φ⁻, Φ⁺, Ψ⁺)`.
    pub fn bell_weights(&self) -> [T; 4] {
        let b = bell_vectors(T::zero());
        b.ordered().map(|v| self.rho.sandwich(v, v).re)
    }

    /// Largest Bell-basis off-diagonal magnitude.
    pub fn bell_offdiagonal_residual(&self) -> T {
        let b = bell_vectors(T::zero());
        let vs = b.ordered();
        let mut worst = T::zero();
        for (i, u) in vs.iter().enumerate() {
            for (j, v) in vs.iter().enumerate() {
                if i != j {
                    worst = worst.max(self.rho.sandwich(*u, *v).norm());
                }
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> T {
        self.rho.min_hermitian_eigenvalue()
    }

    /// `U ρ U†` for a 4×4 unitary (or any 4×4 operator).
    pub fn conjugated(&self, u: &CMat<T>) -> Self {
        Self {
            rho: self.rho.conjugate_by(u),
        }
    }
}

/// Four-qubit density matrix in the order `(A₁, B₁, A₂, B₂)`; may be
/// unnormalized after a postselected operation.
#[derive(Clone, Debug, PartialEq)]
pub struct FourQubitState<T> {
    rho: CMat<T>,
}

impl<T: Real> FourQubitState<T> {
    pub fn new(rho: CMat<T>) -> Result<Self> {
        if rho.rows() != 16 || rho.cols() != 16 {
            return Err(Error::Dimension {
                expected: 16,
                got: rho.rows(),
            });
        }
        Ok(Self { rho })
    }

    /// `ρ^{A₁B₁} ⊗ ρ^{A₂B₂}`.
    pub fn product(first: &QubitPairState<T>, second: &QubitPairState<T>) -> Self {
        Self {
            rho: first.matrix().kron(second.matrix()),
        }
    }

    pub fn matrix(&self) -> &CMat<T> {
        &self.rho
    }

    pub fn trace(&self) -> T {
        self.rho.trace().re
    }

    pub fn labels(&self) -> [&'static str; 4] {
        FOUR_QUBIT_LABELS
    }
}

#[inline]
fn bit(index: usize, qubit: usize) -> usize {
    (index >> (3 - qubit)) & 1
}

#[inline]
fn with_bits(index: usize, q1: usize, v1: usize, q2: usize, v2: usize) -> usize {
    let clear = !((1 << (3 - q1)) | (1 << (3 - q2))) & 0xF;
    (index & clear) | (v1 << (3 - q1)) | (v2 << (3 - q2))
}

fn check_targets(targets: (usize, usize)) -> Result<()> {
    let (a, b) = targets;
    if a > 3 || b > 3 || a == b {
        return Err(Error::domain(format!("invalid qubit pair ({a}, {b})")));
    }
    Ok(())
}

/// `|φ⟩⟨φ|` populations of the Bell basis with weights `(F, F₁, F₂, F₃)` on
/// `(Ψ⁻, Φ⁻, Φ⁺, Ψ⁺)`.
pub fn bell_diag_state<T: Real>(f: T, f1: T, f2: T, f3: T) -> Result<QubitPairState<T>> {
    let ws = [f, f1, f2, f3];
    let tol = lit::<T>(1e-12).max(T::epsilon() * lit(16.0));
    if ws.iter().any(|w| !(*w >= -tol && *w <= T::one() + tol)) {
        return Err(Error::domain(format!("Bell weights {ws:?} outside [0, 1]")));
    }
    let sum: T = ws.iter().copied().sum();
    if (sum - T::one()).abs() > lit::<T>(1e-10).max(T::epsilon() * lit(16.0)) {
        return Err(Error::domain(format!("Bell weights sum to {sum}, expected 1")));
    }
    let b = bell_vectors(T::zero());
    let mut rho = CMat::zeros(4, 4);
    for (w, v) in ws.iter().zip(b.ordered()) {
        rho = &rho + &CMat::outer(v, v).scale_real(*w);
    }
    Ok(QubitPairState { rho })
}

/// Werner state: singlet weight `F`, triplet weights `(1 − F)/3`.
pub fn werner_state<T: Real>(f: T) -> Result<QubitPairState<T>> {
    let t = (T::one() - f) / lit(3.0);
    bell_diag_state(f, t, t, t)
}

/// `F|Ψ⁻⟩⟨Ψ⁻| + (1 − F)|Ψ⁺⟩⟨Ψ⁺|`.
pub fn rho_psi<T: Real>(f: T) -> Result<QubitPairState<T>> {
    bell_diag_state(f, T::zero(), T::zero(), T::one() - f)
}

/// Bilateral unitaries `B_j = b_j ⊗ b_j`.
fn bilateral<T: Real>() -> [CMat<T>; 4] {
    b_unitaries::<T>().map(|b| b.kron(&b))
}

/// Four-term average `(1/4) Σ_j (B_jB_j)† ρ (B_jB_j)`, projecting onto
/// Bell-diagonal form.
pub fn twirl_bell_diagonal<T: Real>(rho: &QubitPairState<T>) -> QubitPairState<T> {
    let quarter = lit::<T>(0.25);
    let mut acc = CMat::zeros(4, 4);
    for bb in bilateral::<T>() {
        let u = bb.matmul(&bb);
        acc = &acc + &u.adjoint().matmul(rho.matrix()).matmul(&u);
    }
    QubitPairState {
        rho: acc.scale_real(quarter),
    }
}

/// Three-term average `(1/3) Σ_{j≤3} B_j† ρ_BD B_j`, equalizing the
/// triplet weights of a Bell-diagonal state.
pub fn twirl_werner<T: Real>(rho_bd: &QubitPairState<T>) -> Result<QubitPairState<T>> {
    let residual = rho_bd.bell_offdiagonal_residual();
    if residual > lit::<T>(1e-9).max(T::epsilon() * lit(1e3)) {
        return Err(Error::precondition(format!(
            "twirl_werner needs a Bell-diagonal input (off-diagonal {residual})"
        )));
    }
    Ok(twirl_werner_unchecked(rho_bd))
}

fn twirl_werner_unchecked<T: Real>(rho_bd: &QubitPairState<T>) -> QubitPairState<T> {
    let third = T::one() / lit::<T>(3.0);
    let mut acc = CMat::zeros(4, 4);
    for bb in bilateral::<T>().iter().take(3) {
        acc = &acc + &bb.adjoint().matmul(rho_bd.matrix()).matmul(bb);
    }
    QubitPairState {
        rho: acc.scale_real(third),
    }
}

/// Full Werner twirl of an arbitrary pair state.
pub fn twirl_full<T: Real>(rho: &QubitPairState<T>) -> QubitPairState<T> {
    twirl_werner_unchecked(&twirl_bell_diagonal(rho))
}

/// Single-qubit operator on `qubit` of a pair, as a 4×4 matrix.
pub fn on_pair_qubit<T: Real>(op: &CMat<T>, qubit: usize) -> CMat<T> {
    let id = CMat::identity(2);
    if qubit == 0 {
        op.kron(&id)
    } else {
        id.kron(op)
    }
}

/// Dense 16×16 matrix of a 4×4 operator `K` acting on the qubit pair
/// `targets = (q₁, q₂)`; `q₁` is the more significant index of `K`.
pub fn lift_pair_operator<T: Real>(k: &CMat<T>, targets: (usize, usize)) -> Result<CMat<T>> {
    check_targets(targets)?;
    let (q1, q2) = targets;
    let mut u = CMat::zeros(16, 16);
    for col in 0..16 {
        let i = 2 * bit(col, q1) + bit(col, q2);
        for o in 0..4 {
            let row = with_bits(col, q1, o >> 1, q2, o & 1);
            u[(row, col)] += k[(o, i)];
        }
    }
    Ok(u)
}

/// `K ρ K†` with `K` acting on the pair `targets`; the output is
/// unnormalized and its trace is the success weight.
pub fn embed_kraus<T: Real>(
    k: &CMat<T>,
    targets: (usize, usize),
    state: &FourQubitState<T>,
) -> Result<FourQubitState<T>> {
    if k.rows() != 4 || k.cols() != 4 {
        return Err(Error::Dimension {
            expected: 4,
            got: k.rows(),
        });
    }
    let u = lift_pair_operator(k, targets)?;
    Ok(FourQubitState {
        rho: state.matrix().conjugate_by(&u),
    })
}

/// Applies a rank-4 tensor `E_{k,l,i,j}` to the pair `targets`:
/// `ρ' [(k,r),(l,s)] = Σ_ij E_{k,l,i,j} ρ[(i,r),(j,s)]`, where `r, s` index
/// the two spectator qubits.
pub fn apply_pair_tensor<T: Real>(
    entries: &[C<T>],
    targets: (usize, usize),
    state: &FourQubitState<T>,
) -> Result<FourQubitState<T>> {
    check_targets(targets)?;
    if entries.len() != 256 {
        return Err(Error::Dimension {
            expected: 256,
            got: entries.len(),
        });
    }
    let (q1, q2) = targets;
    let rho = state.matrix();
    let mut out = CMat::zeros(16, 16);
    // enumerate spectator patterns through the indices whose target bits are zero
    let bases: Vec<usize> = (0..16).filter(|&x| bit(x, q1) == 0 && bit(x, q2) == 0).collect();
    for &rb in &bases {
        for &sb in &bases {
            let mut block = [[czero::<T>(); 4]; 4];
            for (i, row) in block.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = rho[(
                        with_bits(rb, q1, i >> 1, q2, i & 1),
                        with_bits(sb, q1, j >> 1, q2, j & 1),
                    )];
                }
            }
            for k in 0..4 {
                for l in 0..4 {
                    let mut acc = czero::<T>();
                    for (i, row) in block.iter().enumerate() {
                        for (j, v) in row.iter().enumerate() {
                            acc += entries[((k * 4 + l) * 4 + i) * 4 + j] * *v;
                        }
                    }
                    out[(with_bits(rb, q1, k >> 1, q2, k & 1), with_bits(sb, q1, l >> 1, q2, l & 1))] = acc;
                }
            }
        }
    }
    Ok(FourQubitState { rho: out })
}

/// One branch of a computational-basis measurement of a qubit pair.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementBranch<T> {
    /// Measured bits of the two target qubits, in target order.
    pub outcome: (u8, u8),
    /// Probability relative to the trace of the measured state.
    pub probability: T,
    /// Normalized state of the two remaining qubits (canonical order), or
    /// `None` when the outcome has zero probability.
    pub state: Option<QubitPairState<T>>,
    /// The unnormalized conditional block (trace = `probability · Tr ρ`).
    pub unnormalized: QubitPairState<T>,
}

/// Projects `targets` onto `|00⟩, |01⟩, |10⟩, |11⟩` and reduces to the other
/// two qubits, which keep their canonical relative order.
pub fn measure_pair<T: Real>(
    state: &FourQubitState<T>,
    targets: (usize, usize),
) -> Result<[MeasurementBranch<T>; 4]> {
    check_targets(targets)?;
    let (q1, q2) = targets;
    let rest: Vec<usize> = (0..4).filter(|q| *q != q1 && *q != q2).collect();
    let total = state.trace();
    let rho = state.matrix();
    let index_of = |m: usize, r: usize| -> usize {
        let mut idx = 0usize;
        idx |= (m >> 1) << (3 - q1);
        idx |= (m & 1) << (3 - q2);
        idx |= (r >> 1) << (3 - rest[0]);
        idx |= (r & 1) << (3 - rest[1]);
        idx
    };
    let branches = std::array::from_fn(|m| {
        let block = CMat::from_fn(4, 4, |r, c| rho[(index_of(m, r), index_of(m, c))]);
        let weight = block.trace().re;
        let probability = if total > T::zero() { weight / total } else { T::zero() };
        let floor = T::epsilon() * total.abs();
        let normalized = if weight > floor {
            Some(QubitPairState {
                rho: block.scale_real(T::one() / weight),
            })
        } else {
            None
        };
        MeasurementBranch {
            outcome: ((m >> 1) as u8, (m & 1) as u8),
            probability,
            state: normalized,
            unnormalized: QubitPairState { rho: block },
        }
    });
    Ok(branches)
}
