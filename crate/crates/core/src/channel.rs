//! Two-qubit linear maps `ρ ↦ Σ E_{k,l,i,j} ρ_{ij} |φ_k⟩⟨φ_l|` and their
//! JSON layout.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bell::{apply_pair_tensor, embed_kraus, FourQubitState, QubitPairState};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::scalar::{czero, lit, to_f64, Real, C};

#[inline]
fn flat(k: usize, l: usize, i: usize, j: usize) -> usize {
    ((k * 4 + l) * 4 + i) * 4 + j
}

#[derive(Clone, Debug, PartialEq)]
pub enum ChannelKind<T> {
    General,
    /// `ρ ↦ KρK†`; `E_{k,l,i,j} = K_{k,i} conj(K_{l,j})`.
    Rank1 { kraus: CMat<T> },
}

/// Not-necessarily trace-preserving linear map on 4×4 matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoQubitChannel<T> {
    entries: Vec<C<T>>,
    kind: ChannelKind<T>,
}

impl<T: Real> TwoQubitChannel<T> {
    /// General channel from entries stored in `[k][l][i][j]` order.
    pub fn from_entries(entries: Vec<C<T>>) -> Result<Self> {
        if entries.len() != 256 {
            return Err(Error::Dimension {
                expected: 256,
                got: entries.len(),
            });
        }
        Ok(Self {
            entries,
            kind: ChannelKind::General,
        })
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize, usize, usize) -> C<T>) -> Self {
        let mut entries = vec![czero(); 256];
        for k in 0..4 {
            for l in 0..4 {
                for i in 0..4 {
                    for j in 0..4 {
                        entries[flat(k, l, i, j)] = f(k, l, i, j);
                    }
                }
            }
        }
        Self {
            entries,
            kind: ChannelKind::General,
        }
    }

    pub fn from_kraus(kraus: CMat<T>) -> Result<Self> {
        if kraus.rows() != 4 || kraus.cols() != 4 {
            return Err(Error::Dimension {
                expected: 4,
                got: kraus.rows(),
            });
        }
        let mut ch = Self::from_fn(|k, l, i, j| kraus[(k, i)] * kraus[(l, j)].conj());
        ch.kind = ChannelKind::Rank1 { kraus };
        Ok(ch)
    }

    pub fn identity() -> Self {
        let one = C::new(T::one(), T::zero());
        Self::from_fn(|k, l, i, j| if k == i && l == j { one } else { czero() })
    }

    pub fn kind(&self) -> &ChannelKind<T> {
        &self.kind
    }

    pub fn kraus(&self) -> Option<&CMat<T>> {
        match &self.kind {
            ChannelKind::Rank1 { kraus } => Some(kraus),
            ChannelKind::General => None,
        }
    }

    pub fn entries(&self) -> &[C<T>] {
        &self.entries
    }

    #[inline]
    pub fn entry(&self, k: usize, l: usize, i: usize, j: usize) -> C<T> {
        self.entries[flat(k, l, i, j)]
    }

    /// Image of a two-qubit matrix.
    pub fn apply(&self, rho: &CMat<T>) -> CMat<T> {
        CMat::from_fn(4, 4, |k, l| {
            let mut acc = czero();
            for i in 0..4 {
                for j in 0..4 {
                    acc += self.entry(k, l, i, j) * rho[(i, j)];
                }
            }
            acc
        })
    }

    pub fn apply_to_pair(&self, rho: &QubitPairState<T>) -> QubitPairState<T> {
        QubitPairState::from_matrix_unchecked(self.apply(rho.matrix()))
    }

    /// Choi matrix `C[(i,k),(j,l)] = E_{k,l,i,j}`; PSD iff the map is
    /// completely positive.
    pub fn choi_matrix(&self) -> CMat<T> {
        CMat::from_fn(16, 16, |r, c| {
            let (i, k) = (r / 4, r % 4);
            let (j, l) = (c / 4, c % 4);
            self.entry(k, l, i, j)
        })
    }

    /// `max |E_{l,k,j,i} − conj(E_{k,l,i,j})|`.
    pub fn hermiticity_residual(&self) -> T {
        let mut worst = T::zero();
        for k in 0..4 {
            for l in 0..4 {
                for i in 0..4 {
                    for j in 0..4 {
                        let d = self.entry(l, k, j, i) - self.entry(k, l, i, j).conj();
                        worst = worst.max(d.norm());
                    }
                }
            }
        }
        worst
    }

    pub fn choi_min_eigenvalue(&self) -> T {
        self.choi_matrix().min_hermitian_eigenvalue()
    }

    /// Trace of the image of each basis projector `|φ_i⟩⟨φ_i|`, the success
    /// weight of the operation on that input.
    pub fn trace_weights(&self) -> [T; 4] {
        std::array::from_fn(|i| (0..4).map(|k| self.entry(k, k, i, i).re).sum())
    }

    /// Applies the map to the qubit pair `targets` of a four-qubit state.
    pub fn apply_to_four(&self, state: &FourQubitState<T>, targets: (usize, usize)) -> Result<FourQubitState<T>> {
        match &self.kind {
            ChannelKind::Rank1 { kraus } => embed_kraus(kraus, targets, state),
            ChannelKind::General => apply_pair_tensor(&self.entries, targets, state),
        }
    }

    pub fn validity(&self) -> ChannelValidity {
        ChannelValidity {
            hermiticity_residual: to_f64(self.hermiticity_residual()),
            choi_min_eigenvalue: to_f64(self.choi_min_eigenvalue()),
            trace_weights: self.trace_weights().map(to_f64),
        }
    }

    /// Maximum entrywise distance to another channel.
    pub fn max_entry_distance(&self, other: &Self) -> T {
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).norm()))
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            entries: self.entries.iter().map(|z| *z * s).collect(),
            kind: match &self.kind {
                ChannelKind::General => ChannelKind::General,
                ChannelKind::Rank1 { kraus } => ChannelKind::Rank1 {
                    kraus: kraus.scale_real(s.sqrt()),
                },
            },
        }
    }

    /// Serializes to the documented JSON layout.
    pub fn to_json(&self, metadata: Value) -> Value {
        let entries: Vec<Vec<Vec<Vec<JsonComplex>>>> = (0..4)
            .map(|k| {
                (0..4)
                    .map(|l| {
                        (0..4)
                            .map(|i| (0..4).map(|j| JsonComplex::from(self.entry(k, l, i, j))).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let mut doc = serde_json::json!({
            "format": "two-qubit-channel/v1",
            "index_order": "[k][l][i][j]: E(|phi_i><phi_j|) = sum_kl E_klij |phi_k><phi_l|, basis 00,01,10,11",
            "kind": match self.kind { ChannelKind::General => "general", ChannelKind::Rank1 { .. } => "rank1" },
            "metadata": metadata,
            "validity": serde_json::to_value(self.validity()).unwrap_or(Value::Null),
            "entries": entries,
        });
        if let ChannelKind::Rank1 { kraus } = &self.kind {
            let rows: Vec<Vec<JsonComplex>> = (0..4)
                .map(|r| (0..4).map(|c| JsonComplex::from(kraus[(r, c)])).collect())
                .collect();
            doc["kraus"] = serde_json::to_value(rows).unwrap_or(Value::Null);
        }
        doc
    }

    /// Parses the JSON layout produced by [`to_json`](Self::to_json).
    pub fn from_json(doc: &Value) -> Result<Self> {
        let bad = |msg: &str| Error::precondition(format!("channel JSON: {msg}"));
        let entries = doc.get("entries").ok_or_else(|| bad("missing `entries`"))?;
        let nested: Vec<Vec<Vec<Vec<JsonComplex>>>> =
            serde_json::from_value(entries.clone()).map_err(|e| bad(&e.to_string()))?;
        let shape_ok = nested.len() == 4
            && nested.iter().all(|a| {
                a.len() == 4 && a.iter().all(|b| b.len() == 4 && b.iter().all(|c| c.len() == 4))
            });
        if !shape_ok {
            return Err(bad("entries must have shape 4x4x4x4"));
        }
        let ch = Self::from_fn(|k, l, i, j| nested[k][l][i][j].to_complex());
        if doc.get("kind").and_then(Value::as_str) == Some("rank1") {
            if let Some(kv) = doc.get("kraus") {
                let rows: Vec<Vec<JsonComplex>> =
                    serde_json::from_value(kv.clone()).map_err(|e| bad(&e.to_string()))?;
                if rows.len() == 4 && rows.iter().all(|r| r.len() == 4) {
                    let k = CMat::from_fn(4, 4, |r, c| rows[r][c].to_complex());
                    return Ok(Self {
                        entries: ch.entries,
                        kind: ChannelKind::Rank1 { kraus: k },
                    });
                }
            }
        }
        Ok(ch)
    }
}

/// Diagnostics reported alongside an extracted channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelValidity {
    pub hermiticity_residual: f64,
    pub choi_min_eigenvalue: f64,
    pub trace_weights: [f64; 4],
}

impl ChannelValidity {
    pub fn is_valid(&self) -> bool {
        self.hermiticity_residual <= 1e-9 && self.choi_min_eigenvalue >= -1e-8
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
struct JsonComplex {
    re: f64,
    im: f64,
}

impl JsonComplex {
    fn to_complex<T: Real>(self) -> C<T> {
        C::new(lit(self.re), lit(self.im))
    }
}

impl<T: Real> From<C<T>> for JsonComplex {
    fn from(z: C<T>) -> Self {
        Self {
            re: to_f64(z.re),
            im: to_f64(z.im),
        }
    }
}
