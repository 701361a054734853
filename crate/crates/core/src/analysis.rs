// SPDX-License-Identifier: Apache-2.0

//! Entanglement measures, fidelities and the one-qubit error budget.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compiler::{one_qubit_duration, Axis, CompileError, Compiler};
use crate::integrator::{logical_propagator, z_rotation, DensityState, StepPolicy};
use crate::linalg::{hermitian_eigen, kron, modulus, re, sqrt_psd, unitarity_defect, Ket, Mat2, Mat4};
use crate::model::{PulseSequence, Qubit, SystemParams};
use crate::pauli::{Pauli, PauliString, Rotation, RotationWord};
use crate::scalar::{lit, to_f64, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("density matrix has eigenvalue {0:.3e} below tolerance")]
    NegativeEigenvalue(f64),
    #[error("propagator is not unitary (defect {0:.3e})")]
    NotUnitary(f64),
    #[error("drive amplitudes must be non-negative")]
    NegativeAmplitude,
    #[error(transparent)]
    Compile(#[from] CompileError),
}

/// Bloch vector of `Tr_other ρ`.
pub fn reduced_bloch<T: Scalar>(rho: &DensityState<T>, q: Qubit) -> [T; 3] {
    let o = 3 * q.index();
    [rho.c[o], rho.c[o + 1], rho.c[o + 2]]
}

pub fn bloch_norm<T: Scalar>(b: &[T; 3]) -> T {
    (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt()
}

/// Wootters concurrence. The positivity tolerance is `1e-9`, or a small
/// multiple of machine epsilon when that is larger.
pub fn concurrence<T: Scalar>(rho: &DensityState<T>) -> Result<T, AnalysisError> {
    concurrence_with_tol(rho, lit::<T>(1e-9).max(T::default_epsilon() * lit(256.0)))
}

/// [`concurrence`] accepting eigenvalues down to `-tol`; slightly negative
/// eigenvalues are clamped.
pub fn concurrence_with_tol<T: Scalar>(rho: &DensityState<T>, tol: T) -> Result<T, AnalysisError> {
    let m = rho.matrix();
    let min = hermitian_eigen(&m).0[0];
    if min < -tol {
        return Err(AnalysisError::NegativeEigenvalue(to_f64(min)));
    }
    let yy = PauliString::unit(Pauli::Y, Pauli::Y).matrix::<T>();
    let flipped = yy * m.map(|z| z.conj()) * yy;
    let s = sqrt_psd(&m);
    let r = sqrt_psd(&(s * flipped * s));
    let l = hermitian_eigen(&r).0;
    Ok((l[3] - l[2] - l[1] - l[0]).max(T::zero()))
}

/// `⟨ψ|ρ|ψ⟩`.
pub fn state_fidelity<T: Scalar>(rho: &DensityState<T>, psi: &Ket<T>) -> T {
    (psi.adjoint() * rho.matrix() * psi)[(0, 0)].re
}

/// True iff both reduced Bloch vectors vanish to `tol` and the state is
/// nearly pure.
pub fn entanglement_flag<T: Scalar>(rho: &DensityState<T>, tol: T) -> bool {
    bloch_norm(&reduced_bloch(rho, Qubit::One)) <= tol
        && bloch_norm(&reduced_bloch(rho, Qubit::Two)) <= tol
        && rho.purity() >= T::one() - tol * lit(2.0)
}

/// Computational basis ket `|k⟩`.
pub fn basis_ket<T: Scalar>(k: usize) -> Ket<T> {
    let mut v = Ket::zeros();
    v[k] = re(T::one());
    v
}

/// Gate comparison results. Fidelities are stored as `f64` for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub per_state: BTreeMap<String, f64>,
    pub process: f64,
    /// `[φ₁, φ₂, θ₁, θ₂]` in `Z(φ₁,φ₂)·U·Z(θ₁,θ₂)`.
    pub alignment: [f64; 4],
    pub notes: Vec<String>,
}

fn z_pair<T: Scalar>(a: T, b: T) -> Mat4<T> {
    z_rotation(Qubit::One, a) * z_rotation(Qubit::Two, b)
}

/// Maximizes `f` over `x` by coordinate ascent. Along each coordinate `f` is
/// assumed to be `A + B cos x + C sin x`, so three samples determine the
/// exact coordinate maximum.
fn harmonic_ascent<const N: usize>(f: impl Fn(&[f64; N]) -> f64, tol: f64) -> ([f64; N], f64) {
    let mut x = [0.0; N];
    let mut best = f(&x);
    for _ in 0..500 {
        let before = best;
        for k in 0..N {
            let at = |v: f64| {
                let mut y = x;
                y[k] = v;
                f(&y)
            };
            let base = x[k];
            let f0 = best;
            let f1 = at(base + 2.0 * PI / 3.0);
            let f2 = at(base + 4.0 * PI / 3.0);
            let b = (2.0 * f0 - f1 - f2) / 3.0;
            let c = (f1 - f2) / 3.0f64.sqrt();
            let cand = wrap(base + c.atan2(b));
            let fc = at(cand);
            if fc > best {
                best = fc;
                x[k] = cand;
            }
        }
        if best - before <= tol {
            break;
        }
    }
    (x, best)
}

fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

/// Process fidelity `|Tr(W†·Z(φ)·U·Z(θ))|²/16` against a rotation word,
/// optionally maximized over the four local z phases. `u` should already
/// include the virtual-Z ledger (see [`logical_propagator`]).
pub fn gate_fidelity<T: Scalar>(u: &Mat4<T>, word: &RotationWord, align_local_z: bool) -> Result<FidelityReport, AnalysisError> {
    let defect = unitarity_defect(u);
    if defect > lit(1e-6) {
        return Err(AnalysisError::NotUnitary(to_f64(defect)));
    }
    let u: Mat4<f64> = u.map(|z| num_complex::Complex::new(to_f64(z.re), to_f64(z.im)));
    let w: Mat4<f64> = word.unitary();
    let aligned = |x: &[f64; 4]| z_pair(x[0], x[1]) * u * z_pair(x[2], x[3]);
    let process = |m: &Mat4<f64>| modulus((w.adjoint() * m).trace()).powi(2) / 16.0;
    let raw = process(&u);
    let (x, _) = if align_local_z {
        harmonic_ascent(|x| process(&aligned(x)), 1e-15)
    } else {
        ([0.0; 4], raw)
    };
    let m = aligned(&x);
    let value = process(&m).min(1.0);
    let mut per_state = BTreeMap::new();
    for k in 0..4 {
        let input = basis_ket::<f64>(k);
        let ideal = w * input;
        let out = m * input;
        let f = modulus((ideal.adjoint() * out)[(0, 0)]).powi(2).min(1.0);
        per_state.insert(format!("{:02b}", k), f);
    }
    let mut notes = vec![format!("process infidelity {:.3e}", 1.0 - value)];
    if align_local_z {
        notes.push(format!("unaligned process fidelity {:.9}", raw.min(1.0)));
    }
    Ok(FidelityReport {
        per_state,
        process: value,
        alignment: x,
        notes,
    })
}

/// [`gate_fidelity`] of the logical propagator of `seq`.
pub fn sequence_fidelity<T: Scalar>(
    p: &SystemParams<T>,
    seq: &PulseSequence<T>,
    word: &RotationWord,
    align_local_z: bool,
    policy: StepPolicy,
) -> Result<FidelityReport, AnalysisError> {
    gate_fidelity(&logical_propagator(p, seq, policy), word, align_local_z)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidebandReport {
    /// `[ω₁ᶻ − ω₁ʸ, ω₁ᶻ + ω₁ʸ]`.
    pub qubit1: [f64; 2],
    /// `[ω₂ᶻ − ω₂ʸ, ω₂ᶻ + ω₂ʸ]`.
    pub qubit2: [f64; 2],
    /// `(ω₁ᶻ − ω₁ʸ) − (ω₂ᶻ + ω₂ʸ)`.
    pub gap: f64,
    pub resonant: bool,
}

pub const SIDEBAND_TOL: f64 = 1e-9;

/// Dressed-state sidebands of two driven qubits and the gap between the
/// lower sideband of qubit 1 and the upper sideband of qubit 2.
pub fn sideband_check<T: Scalar>(p: &SystemParams<T>, amp_y1: T, amp_y2: T) -> Result<SidebandReport, AnalysisError> {
    if amp_y1 < T::zero() || amp_y2 < T::zero() {
        return Err(AnalysisError::NegativeAmplitude);
    }
    let gap = (p.w1z() - amp_y1) - (p.w2z() + amp_y2);
    Ok(SidebandReport {
        qubit1: [to_f64(p.w1z() - amp_y1), to_f64(p.w1z() + amp_y1)],
        qubit2: [to_f64(p.w2z() - amp_y2), to_f64(p.w2z() + amp_y2)],
        gap: to_f64(gap),
        resonant: to_f64(gap).abs() <= SIDEBAND_TOL,
    })
}

/// Spectator states used for the one-qubit error: `|0⟩` and `|+⟩`.
pub const SPECTATORS: [[f64; 3]; 2] = [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]];

/// The six axis states, a 2-design for the one-qubit average.
const AXIS_STATES: [[f64; 3]; 6] = [
    [1.0, 0.0, 0.0],
    [-1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, -1.0, 0.0],
    [0.0, 0.0, 1.0],
    [0.0, 0.0, -1.0],
];

fn bloch_matrix(b: [f64; 3]) -> Mat2<f64> {
    let one = Mat2::<f64>::identity();
    let m = |p: Pauli| p.matrix::<f64>();
    (one + m(Pauli::X) * re(b[0]) + m(Pauli::Y) * re(b[1]) + m(Pauli::Z) * re(b[2])) * re(0.5)
}

fn embed(q: Qubit, target: &Mat2<f64>, spectator: &Mat2<f64>) -> Mat4<f64> {
    match q {
        Qubit::One => kron(target, spectator),
        Qubit::Two => kron(spectator, target),
    }
}

fn reduce(q: Qubit, rho: &Mat4<f64>) -> Mat2<f64> {
    Mat2::from_fn(|r, c| {
        (0..2).fold(re(0.0), |acc, k| {
            acc + match q {
                Qubit::One => rho[(2 * r + k, 2 * c + k)],
                Qubit::Two => rho[(2 * k + r, 2 * k + c)],
            }
        })
    })
}

fn z2(theta: f64) -> Mat2<f64> {
    Mat2::from_diagonal(&nalgebra::Vector2::new(
        num_complex::Complex::from_polar(1.0, theta / 2.0),
        num_complex::Complex::from_polar(1.0, -theta / 2.0),
    ))
}

/// `1 − F_avg` of the target's reduced channel against `ideal`, maximized
/// over z phases before and after the target rotation, for a fixed
/// spectator Bloch vector.
pub fn reduced_channel_error(u: &Mat4<f64>, target: Qubit, ideal: &Mat2<f64>, spectator: [f64; 3]) -> f64 {
    let spec = bloch_matrix(spectator);
    let outputs: Vec<(Mat2<f64>, Mat2<f64>)> = AXIS_STATES
        .iter()
        .map(|&b| {
            let rho_t = bloch_matrix(b);
            let out = reduce(target, &(u * embed(target, &rho_t, &spec) * u.adjoint()));
            (rho_t, out)
        })
        .collect();
    let fidelity = |x: &[f64; 2]| {
        let r = z2(x[0]) * ideal * z2(x[1]);
        outputs
            .iter()
            .map(|(rho_in, out)| (r * rho_in * r.adjoint() * out).trace().re)
            .sum::<f64>()
            / outputs.len() as f64
    };
    let (_, best) = harmonic_ascent(fidelity, 1e-15);
    (1.0 - best).max(0.0)
}

/// Error of one quarter-turn gate, per spectator state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateError {
    pub target: u8,
    pub axis: char,
    pub spectator_zero: f64,
    pub spectator_plus: f64,
}

impl GateError {
    pub fn worst(&self) -> f64 {
        self.spectator_zero.max(self.spectator_plus)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneQubitBudget {
    /// `ωˣˣ·t₂^sync`, the argument of the parasitic-angle formula.
    pub coupling_product: f64,
    /// `arccos(ωˣˣ·t₂^sync)`; `None` when the argument exceeds 1.
    pub parasitic_angle: Option<f64>,
    pub gates: Vec<GateError>,
    /// Worst case over the gates and spectator states.
    pub simulated_error: f64,
    pub echo: bool,
}

/// Simulated error of the quarter-turn `axis` rotation on `target`, worst
/// case over the spectator states, optionally with the idle-qubit echo.
pub fn one_qubit_gate_error<T: Scalar>(
    p: &SystemParams<T>,
    compiler: &Compiler<T>,
    target: Qubit,
    axis: Axis,
    echo: bool,
    policy: StepPolicy,
) -> Result<GateError, AnalysisError> {
    let seg = compiler.one_qubit(target, axis, lit(FRAC_PI_2), T::zero())?;
    let mut seq = PulseSequence::from_segments(vec![seg]);
    if echo {
        seq = compiler.insert_decoupling(&seq, 0)?;
    }
    let u = logical_propagator(p, &seq, policy).map(|z| num_complex::Complex::new(to_f64(z.re), to_f64(z.im)));
    let ideal4: Mat4<f64> = Rotation::of(PauliString::single(target.number(), axis.pauli()), 1, 2).unitary();
    let ideal = reduce(target, &ideal4) * re(0.5);
    let errors = SPECTATORS.map(|s| reduced_channel_error(&u, target, &ideal, s));
    Ok(GateError {
        target: target.number(),
        axis: match axis {
            Axis::X => 'x',
            Axis::Y => 'y',
        },
        spectator_zero: errors[0],
        spectator_plus: errors[1],
    })
}

/// Quarter turns about `x` and `y` on either qubit.
pub const BUDGET_GATES: [(Qubit, Axis); 4] = [
    (Qubit::One, Axis::X),
    (Qubit::One, Axis::Y),
    (Qubit::Two, Axis::X),
    (Qubit::Two, Axis::Y),
];

/// Reports the parasitic-angle formula next to the simulated error of the
/// quarter-turn gates in [`BUDGET_GATES`].
pub fn one_qubit_error_budget<T: Scalar>(p: &SystemParams<T>, echo: bool, policy: StepPolicy) -> Result<OneQubitBudget, AnalysisError> {
    let compiler = Compiler::new(p);
    let product = to_f64(p.wxx() * one_qubit_duration(p));
    let gates = BUDGET_GATES
        .iter()
        .map(|&(q, a)| one_qubit_gate_error(p, &compiler, q, a, echo, policy))
        .collect::<Result<Vec<_>, _>>()?;
    let simulated_error = gates.iter().map(GateError::worst).fold(0.0, f64::max);
    Ok(OneQubitBudget {
        coupling_product: product,
        parasitic_angle: (product <= 1.0).then(|| product.acos()),
        gates,
        simulated_error,
        echo,
    })
}

/// `1 −` aligned process fidelity of the compiled CNOT.
pub fn cnot_error<T: Scalar>(p: &SystemParams<T>, policy: StepPolicy) -> Result<f64, AnalysisError> {
    let compiler = Compiler::new(p);
    let seq = compiler.cnot()?;
    let word = seq.intended.clone().expect("compiled CNOT records its word");
    Ok(1.0 - sequence_fidelity(p, &seq, &word, true, policy)?.process)
}

/// Final state of the D pulse applied to `|00⟩`.
pub fn d_final_state<T: Scalar>(p: &SystemParams<T>, policy: StepPolicy) -> Result<DensityState<T>, AnalysisError> {
    let seq = Compiler::with_calibration(p, Default::default()).d(T::zero())?;
    let u = logical_propagator(p, &seq, policy);
    Ok(DensityState::from_ket(&(u * basis_ket::<T>(0))))
}

pub fn d_concurrence<T: Scalar>(p: &SystemParams<T>, policy: StepPolicy) -> Result<f64, AnalysisError> {
    Ok(to_f64(concurrence(&d_final_state(p, policy)?)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{build_cnot_word, cnot_matrix};
    use proptest::prelude::*;

    fn bell(k: usize) -> Ket<f64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = Ket::<f64>::zeros();
        match k {
            0 => {
                v[0] = re(s);
                v[3] = num_complex::Complex::new(0.0, s);
            }
            1 => {
                v[0] = re(s);
                v[3] = re(-s);
            }
            2 => {
                v[1] = re(s);
                v[2] = re(s);
            }
            _ => {
                v[1] = re(s);
                v[2] = re(-s);
            }
        }
        v
    }

    #[test]
    fn reduced_bloch_examples() {
        let zero = DensityState::<f64>::basis(0);
        assert_eq!(reduced_bloch(&zero, Qubit::One), [0.0, 0.0, 1.0]);
        let b = DensityState::from_ket(&bell(0));
        assert!(bloch_norm(&reduced_bloch(&b, Qubit::One)) < 1e-15);
        assert!(bloch_norm(&reduced_bloch(&b, Qubit::Two)) < 1e-15);
        assert_eq!(reduced_bloch(&DensityState::<f64>::maximally_mixed(), Qubit::Two), [0.0; 3]);
    }

    #[test]
    fn concurrence_examples() {
        for k in 0..4 {
            let c = concurrence(&DensityState::from_ket(&bell(k))).unwrap();
            assert!((c - 1.0).abs() < 1e-7, "bell {k}: {c}");
        }
        assert!(concurrence(&DensityState::<f64>::basis(1)).unwrap() < 1e-7);
        assert!(concurrence(&DensityState::<f64>::maximally_mixed()).unwrap() < 1e-12);
        let bad = DensityState { c: [0.9; 15] };
        assert!(matches!(concurrence(&bad), Err(AnalysisError::NegativeEigenvalue(_))));
    }

    #[test]
    fn fidelity_examples() {
        let psi = bell(0);
        let rho = DensityState::from_ket(&psi);
        assert!((state_fidelity(&rho, &psi) - 1.0).abs() < 1e-14);
        assert!(state_fidelity(&rho, &bell(2)).abs() < 1e-14);
    }

    #[test]
    fn entanglement_flag_examples() {
        assert!(entanglement_flag(&DensityState::from_ket(&bell(0)), 1e-6));
        assert!(!entanglement_flag(&DensityState::<f64>::maximally_mixed(), 1e-6));
        assert!(!entanglement_flag(&DensityState::<f64>::basis(0), 1e-6));
    }

    #[test]
    fn ideal_gate_scores_one() {
        let w = build_cnot_word();
        let r = gate_fidelity(&w.unitary::<f64>(), &w, false).unwrap();
        assert!((r.process - 1.0).abs() < 1e-12);
        assert!(r.per_state.values().all(|f| (f - 1.0).abs() < 1e-12));
        assert_eq!(r.per_state.keys().cloned().collect::<Vec<_>>(), ["00", "01", "10", "11"]);
        let r = gate_fidelity(&cnot_matrix::<f64>(), &w, true).unwrap();
        assert!((r.process - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alignment_recovers_local_phases() {
        let w = build_cnot_word();
        let u = z_pair(0.3, -0.7) * w.unitary::<f64>() * z_pair(1.1, 0.2);
        let off = gate_fidelity(&u, &w, false).unwrap();
        let on = gate_fidelity(&u, &w, true).unwrap();
        assert!(off.process < 0.9);
        assert!((on.process - 1.0).abs() < 1e-9, "{}", on.process);
    }

    #[test]
    fn non_unitary_rejected() {
        let m = Mat4::<f64>::identity() * re(1.1);
        assert!(matches!(
            gate_fidelity(&m, &RotationWord::empty(), false),
            Err(AnalysisError::NotUnitary(_))
        ));
    }

    #[test]
    fn sideband_examples() {
        let p = SystemParams::standard();
        let r = sideband_check(&p, 0.05, 0.05).unwrap();
        assert!((r.qubit1[0] - 1.0).abs() < 1e-12 && (r.qubit1[1] - 1.1).abs() < 1e-12);
        assert!((r.qubit2[0] - 0.9).abs() < 1e-12 && (r.qubit2[1] - 1.0).abs() < 1e-12);
        assert!(r.gap.abs() < 1e-12 && r.resonant);
        let r = sideband_check(&p, 0.0, 0.0).unwrap();
        assert!((r.gap - 0.1).abs() < 1e-12 && !r.resonant);
        let r = sideband_check(&p, 0.025, 0.025).unwrap();
        assert!((r.gap - 0.05).abs() < 1e-12);
        assert!(sideband_check(&p, 0.06, 0.04).unwrap().resonant);
        assert_eq!(sideband_check(&p, -0.1, 0.0), Err(AnalysisError::NegativeAmplitude));
    }

    #[test]
    fn reduced_channel_error_of_ideal_gate_is_zero() {
        let ideal4: Mat4<f64> = Rotation::of(PauliString::single(1, Pauli::Y), 1, 2).unitary();
        let ideal = reduce(Qubit::One, &ideal4) * re(0.5);
        for s in SPECTATORS {
            let e = reduced_channel_error(&ideal4, Qubit::One, &ideal, s);
            assert!(e < 1e-14, "{e}");
        }
        let detuned = z_rotation(Qubit::One, 0.2) * ideal4;
        assert!(reduced_channel_error(&detuned, Qubit::One, &ideal, SPECTATORS[0]) < 1e-14);
    }

    proptest! {
        #[test]
        fn product_states_have_unit_bloch_and_no_concurrence(
            t1 in 0.0..PI, f1 in 0.0..2.0 * PI, t2 in 0.0..PI, f2 in 0.0..2.0 * PI,
        ) {
            let b = |t: f64, f: f64| [t.sin() * f.cos(), t.sin() * f.sin(), t.cos()];
            let rho = DensityState::product(b(t1, f1), b(t2, f2));
            prop_assert!((bloch_norm(&reduced_bloch(&rho, Qubit::One)) - 1.0).abs() < 1e-12);
            prop_assert!((bloch_norm(&reduced_bloch(&rho, Qubit::Two)) - 1.0).abs() < 1e-12);
            prop_assert!(concurrence(&rho).unwrap() < 1e-6);
        }

        #[test]
        fn sideband_gap_is_linear(delta in 0.01..0.4f64, a in 0.0..0.2f64, b in 0.0..0.2f64) {
            let p = SystemParams::symmetric(delta, 0.0).unwrap();
            let r = sideband_check(&p, a, b).unwrap();
            prop_assert!((r.gap - (delta - a - b)).abs() < 1e-12);
            prop_assert!(sideband_check(&p, delta / 2.0, delta / 2.0).unwrap().gap.abs() < 1e-12);
        }

        #[test]
        fn gate_fidelity_ignores_global_phase(phi in -PI..PI, a in -1.0..1.0f64) {
            let w = build_cnot_word();
            let u = z_pair(a, 0.5 * a) * cnot_matrix::<f64>() * crate::linalg::expm_hermitian(&PauliString::unit(Pauli::X, Pauli::Z).matrix(), 0.1 * a);
            let base = gate_fidelity(&u, &w, true).unwrap();
            let moved = gate_fidelity(&(u * crate::linalg::cis(phi)), &w, true).unwrap();
            prop_assert!((base.process - moved.process).abs() < 1e-9);
            let raw = gate_fidelity(&u, &w, false).unwrap();
            prop_assert!(base.process >= raw.process - 1e-12);
        }
    }
}
