// SPDX-License-Identifier: Apache-2.0

//! Pulse-level simulation and gate compilation for two fixed-frequency,
//! fixed-coupling qubits driven at their own Larmor frequencies.

pub mod analysis;
pub mod compiler;
pub mod integrator;
pub mod linalg;
pub mod model;
pub mod pauli;
pub mod scalar;

pub use model::{
    hamiltonian_at, sync_time, validate_sequence, Diagnostic, DiagnosticKind, Drive, Envelope, Flip,
    ModelError, PulseSegment, PulseSequence, Qubit, SequenceDocument, Severity, SystemParams, VirtualZ,
};
pub use pauli::{Pauli, PauliError, PauliString, Rotation, RotationWord};
pub use scalar::Scalar;

pub type Mat4_64 = linalg::Mat4<f64>;
pub type Ket64 = linalg::Ket<f64>;
pub type SystemParams64 = SystemParams<f64>;
pub type SystemParamsF32 = SystemParams<f32>;
pub type PulseSequence64 = PulseSequence<f64>;
pub type PulseSequenceF32 = PulseSequence<f32>;
