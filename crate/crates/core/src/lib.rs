//! Entanglement purification of atom pairs that interact sequentially with a
//! coherently driven cavity mode and are postselected by homodyne detection
//! of the field.
//!
//! Numerical routines are generic over the real scalar (`f32` or `f64`);
//! the aliases at the crate root fix it to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bell;
pub mod channel;
pub mod config;
pub mod error;
pub mod fock;
pub mod jc;
pub mod linalg;
pub mod open_system;
pub mod postselect;
pub mod purification;
pub mod scalar;

pub use bell::{FourQubitState, QubitPairState};
pub use channel::{ChannelKind, ChannelValidity, TwoQubitChannel};
pub use config::SimConfig;
pub use error::{Error, Result};
pub use fock::{FieldVector, QuadratureSpec};
pub use jc::{AtomFieldState, BranchDecomposition};
pub use linalg::CMat;
pub use open_system::{IntegratorKind, LossParams};
pub use postselect::PostselectedState;
pub use purification::{Backend, Protocol, ProtocolStepResult, Stop, Trajectory};
pub use scalar::{Real, C};

pub type Complex64 = C<f64>;
pub type Matrix = CMat<f64>;
pub type Field = FieldVector<f64>;
pub type JointState = AtomFieldState<f64>;
pub type PairState = QubitPairState<f64>;
pub type FourQubit = FourQubitState<f64>;
pub type Channel = TwoQubitChannel<f64>;
pub type Quadrature = QuadratureSpec<f64>;

pub type Field32 = FieldVector<f32>;
pub type JointState32 = AtomFieldState<f32>;
pub type PairState32 = QubitPairState<f32>;
