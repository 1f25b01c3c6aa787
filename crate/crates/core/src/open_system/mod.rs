//! Markovian losses during the two interactions and the free flight between
//! them, and the postselected two-qubit channel they produce.
//!
//! Only one atom is ever coupled to the field, so the propagated object is
//! the `2N × 2N` density of that atom and the field. Decay of the atom that
//! is outside the cavity commutes with everything else and is applied in
//! closed form as amplitude damping.

mod integrate;
mod liouvillian;

use rayon::prelude::*;

pub use integrate::{evolve, IntegratorKind, IntegratorSettings, IntegratorStats};
pub use liouvillian::Liouvillian;

use crate::channel::TwoQubitChannel;
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::fock::{coherent_amplitudes, quadrature_row, QuadratureSpec};
use crate::linalg::CMat;
use crate::scalar::{czero, lit, Real, C};

/// Loss rates in units of `g`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossParams<T> {
    pub kappa: T,
    pub gamma: T,
    /// Mean thermal photon number of the cavity bath.
    pub n_thermal: T,
}

impl<T: Real> LossParams<T> {
    pub fn lossless() -> Self {
        Self {
            kappa: T::zero(),
            gamma: T::zero(),
            n_thermal: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("kappa", self.kappa), ("gamma", self.gamma), ("n_T", self.n_thermal)] {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::domain(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    InteractionFirst,
    Free,
    InteractionSecond,
}

impl Stage {
    pub fn is_coupled(self) -> bool {
        !matches!(self, Stage::Free)
    }
}

/// Evaluates the generator of `stage` on a `2N × 2N` density.
pub fn liouvillian_apply<T: Real>(stage: Stage, rho: &CMat<T>, params: &LossParams<T>) -> Result<CMat<T>> {
    if !rho.is_square() || !rho.rows().is_multiple_of(2) {
        return Err(Error::Dimension {
            expected: 2 * (rho.rows() / 2).max(1),
            got: rho.rows(),
        });
    }
    let l = Liouvillian::new(rho.rows() / 2, params, stage.is_coupled())?;
    let mut out = vec![czero(); rho.rows() * rho.rows()];
    l.apply(rho.as_slice(), &mut out)?;
    Ok(CMat::from_vec(rho.rows(), rho.rows(), out))
}

/// Single-qubit amplitude damping with survival `e^{−γt}` applied to the
/// 2×2 block `x`.
pub fn amplitude_damp<T: Real>(x: [[C<T>; 2]; 2], gamma_t: T) -> [[C<T>; 2]; 2] {
    let keep = (-gamma_t).exp();
    let coh = (-gamma_t * lit::<T>(0.5)).exp();
    [
        [x[0][0] + x[1][1] * (T::one() - keep), x[0][1] * coh],
        [x[1][0] * coh, x[1][1] * keep],
    ]
}

/// Joint density of both atoms and the field, `4N × 4N`, with row index
/// `(2·a₁ + a₂)·N + n`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDensity<T> {
    n_f: usize,
    rho: CMat<T>,
}

impl<T: Real> JointDensity<T> {
    pub fn n_f(&self) -> usize {
        self.n_f
    }

    pub fn matrix(&self) -> &CMat<T> {
        &self.rho
    }

    pub fn trace(&self) -> T {
        self.rho.trace().re
    }

    /// Field block `⟨i|ρ|j⟩` for atom-pair indices `i, j ∈ 0..4`.
    pub fn field_block(&self, i: usize, j: usize) -> CMat<T> {
        let n = self.n_f;
        CMat::from_fn(n, n, |r, c| self.rho[(i * n + r, j * n + c)])
    }

    /// Reduced two-qubit density.
    pub fn atoms(&self) -> CMat<T> {
        CMat::from_fn(4, 4, |i, j| self.field_block(i, j).trace())
    }

    /// Unnormalized two-qubit operator `⟨x_θ|ρ|x_θ⟩`.
    pub fn project_field(&self, spec: &QuadratureSpec<T>) -> CMat<T> {
        let w = quadrature_row(spec, self.n_f);
        CMat::from_fn(4, 4, |i, j| sandwich_row(&self.field_block(i, j), &w))
    }
}

/// `Σ_mn w_m G_mn conj(w_n)`.
fn sandwich_row<T: Real>(g: &CMat<T>, w: &[C<T>]) -> C<T> {
    let n = w.len();
    let mut acc = czero();
    for m in 0..n {
        let mut row = czero();
        for k in 0..n {
            row += g[(m, k)] * w[k].conj();
        }
        acc += w[m] * row;
    }
    acc
}

/// Interaction and free-flight durations (`gτ` units).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Schedule<T> {
    pub gtau1: T,
    pub gtau_f: T,
    pub gtau2: T,
}

/// Everything needed to run the lossy two-atom sequence.
#[derive(Clone, Debug)]
pub struct OpenSystem<T> {
    pub n_f: usize,
    pub alpha: C<T>,
    pub schedule: Schedule<T>,
    pub params: LossParams<T>,
    pub settings: IntegratorSettings,
}

type Block2<T> = [[C<T>; 2]; 2];

impl<T: Real> OpenSystem<T> {
    pub fn from_config(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            n_f: config.resolved_n_f()?,
            alpha: config.alpha(),
            schedule: Schedule {
                gtau1: lit(config.gtau1),
                gtau_f: lit(config.gtau_f),
                gtau2: lit(config.gtau2()),
            },
            params: config.loss_params(),
            settings: IntegratorSettings {
                kind: config.integrator,
                rtol: config.tol,
                ..Default::default()
            },
        })
    }

    fn run(&self, coupled: bool, rho: Vec<C<T>>, t: T) -> Result<Vec<C<T>>> {
        let l = Liouvillian::new(self.n_f, &self.params, coupled)?;
        let est = l.norm_estimate();
        let (y, _) = evolve(|x: &[C<T>], out: &mut [C<T>]| l.apply(x, out), rho, t, est, &self.settings)?;
        Ok(y)
    }

    /// First interaction and free flight for the tracked atom starting in
    /// `x ⊗ |α⟩⟨α|`.
    fn first_leg(&self, x: Block2<T>) -> Result<Vec<C<T>>> {
        let n = self.n_f;
        let d = 2 * n;
        let coh = coherent_amplitudes(self.alpha, n)?;
        let a = coh.amplitudes();
        let mut rho = vec![czero(); d * d];
        for s in 0..2 {
            for t in 0..2 {
                if x[s][t] == czero() {
                    continue;
                }
                for m in 0..n {
                    for k in 0..n {
                        rho[(s * n + m) * d + t * n + k] = x[s][t] * a[m] * a[k].conj();
                    }
                }
            }
        }
        let rho = self.run(true, rho, self.schedule.gtau1)?;
        self.run(false, rho, self.schedule.gtau_f)
    }

    /// Second interaction for the second atom starting in `y ⊗ F`.
    fn second_leg(&self, y: Block2<T>, field: &[C<T>], field_stride: usize, offset: usize) -> Result<Vec<C<T>>> {
        let n = self.n_f;
        let d = 2 * n;
        let mut rho = vec![czero(); d * d];
        for u in 0..2 {
            for v in 0..2 {
                if y[u][v] == czero() {
                    continue;
                }
                for m in 0..n {
                    for k in 0..n {
                        rho[(u * n + m) * d + v * n + k] = y[u][v] * field[offset + m * field_stride + k];
                    }
                }
            }
        }
        self.run(true, rho, self.schedule.gtau2)
    }

    fn idle_second_input(&self, a2: usize, b2: usize) -> Block2<T> {
        let mut unit = [[czero(); 2]; 2];
        unit[a2][b2] = C::new(T::one(), T::zero());
        amplitude_damp(unit, self.params.gamma * (self.schedule.gtau1 + self.schedule.gtau_f))
    }

    /// Full lossy sequence from `ρ_atoms ⊗ |α⟩⟨α|`.
    pub fn propagate(&self, rho_atoms: &CMat<T>) -> Result<JointDensity<T>> {
        if rho_atoms.rows() != 4 || rho_atoms.cols() != 4 {
            return Err(Error::Dimension {
                expected: 4,
                got: rho_atoms.rows(),
            });
        }
        let n = self.n_f;
        let d = 2 * n;
        // Group by the second atom's indices; each group is one first-leg run.
        let groups: Vec<(usize, usize)> = (0..2).flat_map(|a2| (0..2).map(move |b2| (a2, b2))).collect();
        let legs: Vec<Option<Vec<C<T>>>> = groups
            .par_iter()
            .map(|&(a2, b2)| {
                let x: Block2<T> = std::array::from_fn(|a1| std::array::from_fn(|b1| rho_atoms[(2 * a1 + a2, 2 * b1 + b2)]));
                if x.iter().flatten().all(|z| *z == czero()) {
                    Ok(None)
                } else {
                    self.first_leg(x).map(Some)
                }
            })
            .collect::<Result<_>>()?;

        let jobs: Vec<(usize, usize, usize)> = (0..4)
            .filter(|g| legs[*g].is_some())
            .flat_map(|g| (0..2).flat_map(move |s| (0..2).map(move |t| (g, s, t))))
            .collect();
        let outs: Vec<Vec<C<T>>> = jobs
            .par_iter()
            .map(|&(g, s, t)| {
                let (a2, b2) = groups[g];
                let leg = legs[g].as_ref().expect("filtered");
                self.second_leg(self.idle_second_input(a2, b2), leg, d, s * n * d + t * n)
            })
            .collect::<Result<_>>()?;

        // Accumulate blocks, then damp the first atom over the second leg.
        let big = 4 * n;
        let mut acc: [[CMat<T>; 2]; 2] = std::array::from_fn(|_| std::array::from_fn(|_| CMat::zeros(d, d)));
        for (&(_, s, t), g) in jobs.iter().zip(&outs) {
            for (dst, src) in acc[s][t].as_mut_slice().iter_mut().zip(g) {
                *dst += *src;
            }
        }
        let damped = damp_first_atom(acc, self.params.gamma * self.schedule.gtau2);
        let mut rho = CMat::zeros(big, big);
        for s in 0..2 {
            for t in 0..2 {
                let blk = &damped[s][t];
                for r in 0..d {
                    for c in 0..d {
                        rho[(s * d + r, t * d + c)] = blk[(r, c)];
                    }
                }
            }
        }
        Ok(JointDensity { n_f: n, rho })
    }

    /// The postselected channel `E_{k,l,i,j}` at quadrature `spec`.
    pub fn extract_channel(&self, spec: &QuadratureSpec<T>) -> Result<TwoQubitChannel<T>> {
        let n = self.n_f;
        let d = 2 * n;
        let w = quadrature_row(spec, n);
        let units1: Vec<(usize, usize)> = (0..2).flat_map(|a| (0..2).map(move |b| (a, b))).collect();
        let legs: Vec<Vec<C<T>>> = units1
            .par_iter()
            .map(|&(a, b)| {
                let mut x = [[czero(); 2]; 2];
                x[a][b] = C::new(T::one(), T::zero());
                self.first_leg(x)
            })
            .collect::<Result<_>>()?;

        let pairs: Vec<(usize, usize)> = (0..4).flat_map(|i| (i..4).map(move |j| (i, j))).collect();
        let jobs: Vec<(usize, usize, usize)> = (0..pairs.len())
            .flat_map(|p| (0..2).flat_map(move |s| (0..2).map(move |t| (p, s, t))))
            .collect();
        // Each job: second leg of unit pair p for first-atom block (s, t),
        // projected onto the quadrature immediately.
        let projected: Vec<Block2<T>> = jobs
            .par_iter()
            .map(|&(p, s, t)| {
                let (i, j) = pairs[p];
                let (a1, a2, b1, b2) = (i >> 1, i & 1, j >> 1, j & 1);
                let leg = &legs[2 * a1 + b1];
                let g = self.second_leg(self.idle_second_input(a2, b2), leg, d, s * n * d + t * n)?;
                let g = CMat::from_vec(d, d, g);
                Ok(std::array::from_fn(|u| {
                    std::array::from_fn(|v| {
                        let blk = CMat::from_fn(n, n, |r, c| g[(u * n + r, v * n + c)]);
                        sandwich_row(&blk, &w)
                    })
                }))
            })
            .collect::<Result<_>>()?;

        let gamma_t2 = self.params.gamma * self.schedule.gtau2;
        let mut entries = vec![czero(); 256];
        let flat = |k: usize, l: usize, i: usize, j: usize| ((k * 4 + l) * 4 + i) * 4 + j;
        for (p, &(i, j)) in pairs.iter().enumerate() {
            let mut blocks: [[Block2<T>; 2]; 2] = [[[[czero(); 2]; 2]; 2]; 2];
            for s in 0..2 {
                for t in 0..2 {
                    blocks[s][t] = projected[p * 4 + s * 2 + t];
                }
            }
            // First-atom damping mixes the (s, t) blocks.
            let damped = damp_first_atom_small(blocks, gamma_t2);
            for s in 0..2 {
                for t in 0..2 {
                    for u in 0..2 {
                        for v in 0..2 {
                            let (k, l) = (2 * s + u, 2 * t + v);
                            let e = damped[s][t][u][v];
                            entries[flat(k, l, i, j)] = e;
                            if i != j {
                                entries[flat(l, k, j, i)] = e.conj();
                            }
                        }
                    }
                }
            }
        }
        TwoQubitChannel::from_entries(entries)
    }
}

fn damp_first_atom<T: Real>(blocks: [[CMat<T>; 2]; 2], gamma_t: T) -> [[CMat<T>; 2]; 2] {
    let keep = (-gamma_t).exp();
    let coh = (-gamma_t * lit::<T>(0.5)).exp();
    let [[b00, b01], [b10, b11]] = blocks;
    [
        [&b00 + &b11.scale_real(T::one() - keep), b01.scale_real(coh)],
        [b10.scale_real(coh), b11.scale_real(keep)],
    ]
}

fn damp_first_atom_small<T: Real>(blocks: [[Block2<T>; 2]; 2], gamma_t: T) -> [[Block2<T>; 2]; 2] {
    let mut out = blocks;
    for u in 0..2 {
        for v in 0..2 {
            let x = [[blocks[0][0][u][v], blocks[0][1][u][v]], [blocks[1][0][u][v], blocks[1][1][u][v]]];
            let y = amplitude_damp(x, gamma_t);
            for s in 0..2 {
                for t in 0..2 {
                    out[s][t][u][v] = y[s][t];
                }
            }
        }
    }
    out
}

/// Full lossy sequence from `ρ_atoms ⊗ |α⟩⟨α|` with parameters from `config`.
pub fn propagate<T: Real>(rho_atoms: &CMat<T>, config: &SimConfig) -> Result<JointDensity<T>> {
    OpenSystem::from_config(config)?.propagate(rho_atoms)
}

/// The postselected channel at the configured quadrature.
pub fn extract_channel<T: Real>(config: &SimConfig) -> Result<TwoQubitChannel<T>> {
    let sys = OpenSystem::from_config(config)?;
    let spec = QuadratureSpec::new(lit::<T>(config.theta()), lit::<T>(config.p()));
    sys.extract_channel(&spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FieldVector;
    use crate::jc::evolve_sequential;
    use crate::postselect::w2_kraus;

    fn cfg(nbar: f64, n_f: usize) -> SimConfig {
        SimConfig { nbar, n_f, n_t: 0.0, ..Default::default() }
    }

    fn pure_density(c: &[C<f64>; 4], config: &SimConfig) -> CMat<f64> {
        let st = evolve_sequential(c, config.alpha(), config.gtau1, config.gtau2(), config.resolved_n_f().unwrap()).unwrap();
        let v: Vec<C<f64>> = st.components().iter().flat_map(|g: &FieldVector<f64>| g.amplitudes().to_vec()).collect();
        CMat::outer(&v, &v)
    }

    #[test]
    fn lossless_limit_matches_unitary_evolution() {
        let config = cfg(50.0, 0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let c = [C::new(h, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.5), C::new(0.5, 0.0)];
        let rho_atoms = CMat::outer(&c, &c);
        for kind in [IntegratorKind::RungeKutta, IntegratorKind::Krylov] {
            let joint = propagate(&rho_atoms, &SimConfig { integrator: kind, ..config.clone() }).unwrap();
            let diff = (joint.matrix() - &pure_density(&c, &config)).frobenius_norm();
            assert!(diff < 1e-6, "{kind}: {diff}");
        }
    }

    #[test]
    fn trace_is_preserved_with_losses() {
        let config = SimConfig { kappa: 1.0 / 60.0, gamma: 0.05, n_t: 0.1, ..cfg(10.0, 42) };
        let rho_atoms = CMat::<f64>::from_real_diagonal(&[0.1, 0.2, 0.3, 0.4]);
        let joint = propagate::<f64>(&rho_atoms, &config).unwrap();
        assert!((joint.trace() - 1.0).abs() < 1e-8);
        assert!(joint.matrix().hermiticity_residual() < 1e-10);
    }

    #[test]
    fn cavity_field_amplitude_decays() {
        let n = 40;
        let kappa = 0.3;
        let params = LossParams { kappa, gamma: 0.0, n_thermal: 0.0 };
        let l = Liouvillian::new(n, &params, false).unwrap();
        let alpha = C::new(3.0, 0.0);
        let a = coherent_amplitudes(alpha, n).unwrap();
        let d = 2 * n;
        let mut rho = vec![C::new(0.0, 0.0); d * d];
        for m in 0..n {
            for k in 0..n {
                rho[m * d + k] = a.amplitudes()[m] * a.amplitudes()[k].conj();
            }
        }
        let t = 1.7;
        let (y, _) = evolve(|x: &[C<f64>], o: &mut [C<f64>]| l.apply(x, o), rho, t, l.norm_estimate(), &IntegratorSettings::default()).unwrap();
        // ⟨a⟩ = Tr(aρ) = Σ √m ρ[m, m−1]
        let mean: C<f64> = (1..n).map(|m| y[m * d + m - 1] * (m as f64).sqrt()).sum();
        assert!((mean - alpha * (-kappa * t / 2.0).exp()).norm() < 1e-7);
    }

    #[test]
    fn excited_population_decays_in_free_flight() {
        let gamma = 0.2;
        let config = SimConfig { gamma, gtau1: 0.0, gtau2: Some(0.0), gtau_f: 2.5, ..cfg(4.0, 20) };
        let rho_atoms = CMat::from_real_diagonal(&[0.0, 0.0, 0.0, 1.0]);
        let atoms = propagate(&rho_atoms, &config).unwrap().atoms();
        let p_excited_first = atoms[(2, 2)].re + atoms[(3, 3)].re;
        let p_excited_second = atoms[(1, 1)].re + atoms[(3, 3)].re;
        let expect = (-gamma * 2.5f64).exp();
        assert!((p_excited_first - expect).abs() < 1e-8);
        assert!((p_excited_second - expect).abs() < 1e-8);
    }

    #[test]
    fn lossless_channel_is_the_kraus_outer_product() {
        let config = SimConfig { gtau2: Some(2.2), p: Some(0.3), ..cfg(12.0, 0) };
        let chan = extract_channel::<f64>(&config).unwrap();
        let kraus = w2_kraus::<f64>(&config).unwrap();
        assert!(chan.max_entry_distance(&kraus) < 1e-7);
    }

    #[test]
    fn lossy_channel_is_hermitian_and_completely_positive() {
        let config = SimConfig { kappa: 1.0 / 60.0, gamma: 1.0 / 3000.0, n_t: 0.1, p: Some(0.15), ..cfg(10.0, 30) };
        let v = extract_channel::<f64>(&config).unwrap().validity();
        assert!(v.hermiticity_residual < 1e-9);
        assert!(v.choi_min_eigenvalue > -1e-8);
    }

    #[test]
    fn damping_block_formula() {
        let one = C::new(1.0, 0.0);
        let z = C::new(0.0, 0.0);
        let y = amplitude_damp([[z, one], [one, one]], 2f64.ln());
        assert!((y[0][0].re - 0.5).abs() < 1e-15);
        assert!((y[1][1].re - 0.5).abs() < 1e-15);
        assert!((y[0][1].re - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn stage_generator_rejects_odd_dimension() {
        let rho = CMat::<f64>::identity(3);
        assert!(liouvillian_apply(Stage::Free, &rho, &LossParams::lossless()).is_err());
    }
}
