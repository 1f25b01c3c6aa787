//! Time stepping for autonomous linear systems `y' = L y`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{expm, CMat};
use crate::scalar::{czero, lit, to_f64, Real, C};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntegratorKind {
    /// Adaptive Dormand–Prince 5(4).
    #[default]
    #[serde(rename = "rk45")]
    RungeKutta,
    /// Krylov (Arnoldi) approximation of `e^{tL} y`.
    #[serde(rename = "krylov")]
    Krylov,
}

impl fmt::Display for IntegratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::RungeKutta => "rk45",
            Self::Krylov => "krylov",
        })
    }
}

impl FromStr for IntegratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rk45" | "dopri5" | "runge-kutta" => Ok(Self::RungeKutta),
            "krylov" | "expmv" => Ok(Self::Krylov),
            other => Err(Error::domain(format!("unknown integrator `{other}` (rk45 | krylov)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorSettings {
    pub kind: IntegratorKind,
    pub rtol: f64,
    pub max_steps: usize,
    /// Arnoldi subspace size.
    pub krylov_dim: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            kind: IntegratorKind::RungeKutta,
            rtol: 1e-8,
            max_steps: 1_000_000,
            krylov_dim: 30,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

fn axpy<T: Real>(y: &mut [C<T>], a: T, x: &[C<T>]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += *xi * a;
    }
}

fn max_abs<T: Real>(v: &[C<T>]) -> T {
    v.iter().fold(T::zero(), |m, z| m.max(z.norm()))
}

/// Advances `y` by `t` under `y' = f(y)`, where `f(y, out)` writes the
/// derivative.
pub fn evolve<T, F>(f: F, y: Vec<C<T>>, t: T, norm_estimate: T, settings: &IntegratorSettings) -> Result<(Vec<C<T>>, IntegratorStats)>
where
    T: Real,
    F: Fn(&[C<T>], &mut [C<T>]) -> Result<()>,
{
    if !(t >= T::zero()) {
        return Err(Error::domain(format!("integration time must be >= 0, got {t}")));
    }
    if t == T::zero() {
        return Ok((y, IntegratorStats::default()));
    }
    match settings.kind {
        IntegratorKind::RungeKutta => dopri5(f, y, t, norm_estimate, settings),
        IntegratorKind::Krylov => krylov(f, y, t, settings),
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn dopri5<T, F>(f: F, mut y: Vec<C<T>>, t_end: T, norm_estimate: T, settings: &IntegratorSettings) -> Result<(Vec<C<T>>, IntegratorStats)>
where
    T: Real,
    F: Fn(&[C<T>], &mut [C<T>]) -> Result<()>,
{
    let n = y.len();
    let rtol = lit::<T>(settings.rtol);
    let mut stats = IntegratorStats::default();
    let mut k: [Vec<C<T>>; 7] = std::array::from_fn(|_| vec![czero(); n]);
    let mut tmp = vec![czero(); n];
    let mut y_new = vec![czero(); n];

    let mut t = T::zero();
    let mut h = (lit::<T>(0.5) / norm_estimate.max(lit(1e-3))).min(t_end);
    let h_min = t_end * lit::<T>(1e-14);
    f(&y, &mut k[0])?;
    stats.evaluations += 1;

    let stage = |tmp: &mut Vec<C<T>>, y: &[C<T>], k: &[Vec<C<T>>; 7], coeffs: &[(usize, f64)], h: T| {
        tmp.copy_from_slice(y);
        for &(idx, a) in coeffs {
            axpy(tmp, h * lit::<T>(a), &k[idx]);
        }
    };

    while t < t_end {
        if stats.accepted + stats.rejected >= settings.max_steps {
            return Err(Error::Integrator {
                t: to_f64(t),
                step: to_f64(h),
                steps: stats.accepted,
                reason: "step budget exhausted".into(),
            });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        stage(&mut tmp, &y, &k, &[(0, A21)], h);
        f(&tmp, &mut k[1])?;
        stage(&mut tmp, &y, &k, &[(0, A31), (1, A32)], h);
        f(&tmp, &mut k[2])?;
        stage(&mut tmp, &y, &k, &[(0, A41), (1, A42), (2, A43)], h);
        f(&tmp, &mut k[3])?;
        stage(&mut tmp, &y, &k, &[(0, A51), (1, A52), (2, A53), (3, A54)], h);
        f(&tmp, &mut k[4])?;
        stage(&mut tmp, &y, &k, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)], h);
        f(&tmp, &mut k[5])?;
        stage(&mut y_new, &y, &k, &[(0, B1), (2, B3), (3, B4), (4, B5), (5, B6)], h);
        f(&y_new, &mut k[6])?;
        stats.evaluations += 6;

        let scale = max_abs(&y).max(max_abs(&y_new)).max(T::min_positive_value());
        let mut err = T::zero();
        for i in 0..n {
            let e = (k[0][i] * lit::<T>(E1)
                + k[2][i] * lit::<T>(E3)
                + k[3][i] * lit::<T>(E4)
                + k[4][i] * lit::<T>(E5)
                + k[5][i] * lit::<T>(E6)
                + k[6][i] * lit::<T>(E7))
                * h;
            err = err.max(e.norm());
        }
        let ratio = err / (rtol * scale);
        if !ratio.is_finite() {
            return Err(Error::Integrator {
                t: to_f64(t),
                step: to_f64(h),
                steps: stats.accepted,
                reason: "non-finite error estimate".into(),
            });
        }
        let factor = if ratio > T::zero() {
            (lit::<T>(0.9) * ratio.powf(lit(-0.2))).min(lit(5.0)).max(lit(0.2))
        } else {
            lit(5.0)
        };
        if ratio <= T::one() {
            stats.accepted += 1;
            t = if last { t_end } else { t + h };
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);
            h *= factor;
        } else {
            stats.rejected += 1;
            h *= factor.min(T::one());
            if h < h_min {
                return Err(Error::Integrator {
                    t: to_f64(t),
                    step: to_f64(h),
                    steps: stats.accepted,
                    reason: "step size underflow".into(),
                });
            }
        }
    }
    Ok((y, stats))
}

fn krylov<T, F>(f: F, mut y: Vec<C<T>>, t_end: T, settings: &IntegratorSettings) -> Result<(Vec<C<T>>, IntegratorStats)>
where
    T: Real,
    F: Fn(&[C<T>], &mut [C<T>]) -> Result<()>,
{
    let n = y.len();
    let m_max = settings.krylov_dim.max(2).min(n);
    let rtol = lit::<T>(settings.rtol);
    let mut stats = IntegratorStats::default();
    let mut t = T::zero();
    let mut tau = t_end;
    let mut w = vec![czero::<T>(); n];

    while t < t_end {
        if stats.accepted + stats.rejected >= settings.max_steps {
            return Err(Error::Integrator {
                t: to_f64(t),
                step: to_f64(tau),
                steps: stats.accepted,
                reason: "step budget exhausted".into(),
            });
        }
        let beta = y.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if beta == T::zero() {
            return Ok((y, stats));
        }
        // Arnoldi with modified Gram–Schmidt.
        let mut basis: Vec<Vec<C<T>>> = Vec::with_capacity(m_max + 1);
        basis.push(y.iter().map(|z| *z / beta).collect());
        let mut hess = CMat::<T>::zeros(m_max + 1, m_max);
        let mut m = m_max;
        let mut breakdown = false;
        for j in 0..m_max {
            f(&basis[j], &mut w)?;
            stats.evaluations += 1;
            for (i, v) in basis.iter().enumerate() {
                let hij = v.iter().zip(&w).fold(czero::<T>(), |acc, (a, b)| acc + a.conj() * *b);
                hess[(i, j)] = hij;
                for (wk, vk) in w.iter_mut().zip(v) {
                    *wk -= *vk * hij;
                }
            }
            let hn = w.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
            hess[(j + 1, j)] = C::new(hn, T::zero());
            if hn <= lit::<T>(1e-13) * beta.max(T::one()) {
                m = j + 1;
                breakdown = true;
                break;
            }
            basis.push(w.iter().map(|z| *z / hn).collect());
        }
        let h_next = hess[(m, m - 1)].re;
        let small = CMat::from_fn(m, m, |i, j| hess[(i, j)]);

        tau = tau.min(t_end - t);
        loop {
            let e = expm(&small.scale_real(tau));
            let err = if breakdown { T::zero() } else { h_next * e[(m - 1, 0)].norm() };
            if err <= rtol || tau <= t_end * lit::<T>(1e-14) {
                if err > rtol {
                    return Err(Error::Integrator {
                        t: to_f64(t),
                        step: to_f64(tau),
                        steps: stats.accepted,
                        reason: "Krylov step size underflow".into(),
                    });
                }
                let mut out = vec![czero::<T>(); n];
                for (i, v) in basis.iter().take(m).enumerate() {
                    let coef = e[(i, 0)] * beta;
                    for (o, vi) in out.iter_mut().zip(v) {
                        *o += *vi * coef;
                    }
                }
                y = out;
                t = if tau >= t_end - t { t_end } else { t + tau };
                stats.accepted += 1;
                if err < rtol * lit(1e-2) {
                    tau *= lit(2.0);
                }
                break;
            }
            stats.rejected += 1;
            tau *= lit(0.5);
        }
    }
    Ok((y, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `y' = A y` for a small dense `A`.
    fn dense_system(a: &CMat<f64>) -> impl Fn(&[C<f64>], &mut [C<f64>]) -> Result<()> + '_ {
        move |y, out| {
            out.copy_from_slice(&a.matvec(y));
            Ok(())
        }
    }

    fn test_matrix() -> CMat<f64> {
        CMat::from_fn(6, 6, |i, j| {
            let x = ((i * 3 + j * 5) % 7) as f64 / 7.0 - 0.5;
            let y = ((i + 2 * j) % 5) as f64 / 5.0 - 0.4;
            C::new(x * 0.6 - if i == j { 0.3 } else { 0.0 }, y * 1.5)
        })
    }

    #[test]
    fn both_integrators_match_expm() {
        let a = test_matrix();
        let y0: Vec<C<f64>> = (0..6).map(|k| C::new(1.0 / (k as f64 + 1.0), 0.2 * k as f64)).collect();
        let exact = expm(&a.scale_real(2.5)).matvec(&y0);
        for kind in [IntegratorKind::RungeKutta, IntegratorKind::Krylov] {
            let settings = IntegratorSettings { kind, rtol: 1e-10, krylov_dim: 4, ..Default::default() };
            let (y, stats) = evolve(dense_system(&a), y0.clone(), 2.5, 2.0, &settings).unwrap();
            let err = y.iter().zip(&exact).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
            assert!(err < 1e-8, "{kind}: {err}");
            assert!(stats.accepted > 0);
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let a = test_matrix();
        let y0 = vec![C::new(1.0, 0.0); 6];
        let (y, stats) = evolve(dense_system(&a), y0.clone(), 0.0, 1.0, &IntegratorSettings::default()).unwrap();
        assert_eq!(y, y0);
        assert_eq!(stats.evaluations, 0);
    }

    #[test]
    fn step_budget_is_reported() {
        let a = test_matrix();
        let settings = IntegratorSettings { max_steps: 2, rtol: 1e-12, ..Default::default() };
        let err = evolve(dense_system(&a), vec![C::new(1.0, 0.0); 6], 50.0, 1.0, &settings).unwrap_err();
        assert!(matches!(err, Error::Integrator { .. }));
    }

    #[test]
    fn kind_parses_and_prints() {
        assert_eq!("krylov".parse::<IntegratorKind>().unwrap(), IntegratorKind::Krylov);
        assert_eq!("RK45".parse::<IntegratorKind>().unwrap(), IntegratorKind::RungeKutta);
        assert!("euler".parse::<IntegratorKind>().is_err());
        assert_eq!(IntegratorKind::Krylov.to_string(), "krylov");
    }
}
