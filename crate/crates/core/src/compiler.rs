// SPDX-License-Identifier: Apache-2.0

//! Named gates to pulse sequences.
//!
//! One-qubit rotations are resonant pulses of duration `4π/δ` whose
//! amplitude sets the angle (`δ/8` for a quarter turn). Two-qubit pulses
//! drive both qubits with `ωʸ = δ/2`, which brings the upper sideband of
//! qubit 1 onto the lower sideband of qubit 2, for `4π/ωˣˣ`; negating qubit
//! 2's drive halfway through cancels the `σᶻσᶻ` factor and leaves
//! `(X₁X₂)^(±1/2)`. Z rotations are frame changes.

use std::f64::consts::{FRAC_PI_2, PI};

use thiserror::Error;

use crate::integrator::{rotating_propagator, StepPolicy};
use crate::linalg::{modulus, Mat4};
use crate::model::{on_sync_grid, Drive, Flip, PulseSegment, PulseSequence, Qubit, SystemParams, VirtualZ};
use crate::pauli::{build_cnot_word, Pauli, PauliString, Rotation, RotationWord};
use crate::scalar::{lit, to_f64, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompileError {
    #[error("rotation angle {angle} exceeds pi/2; compose several segments instead")]
    AngleOutOfRange { angle: f64 },
    #[error("start time {start} is not on the sync grid (t0_sync = {t0})")]
    OffGridStart { start: f64, t0: f64 },
    #[error("segment {index} is not a one-qubit pulse")]
    NotOneQubitSegment { index: usize },
    #[error("segment {index} does not begin a decoupled block")]
    NotDecoupled { index: usize },
    #[error("two-qubit gates need a nonzero coupling")]
    NoCoupling,
}

/// Rotation axis of a one-qubit pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn pauli(self) -> Pauli {
        match self {
            Axis::X => Pauli::X,
            Axis::Y => Pauli::Y,
        }
    }
}

/// Sign conventions measured by simulation.
///
/// `x_sense[q]` is the sign `s` such that a pulse with `ωˣ > 0` on qubit `q`
/// realizes `X_q^(s·|a|)`; likewise `y_sense`. `xx_sense` is the sign of
/// the exponent of the refocused two-qubit pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Calibration {
    pub x_sense: [i8; 2],
    pub y_sense: [i8; 2],
    pub xx_sense: i8,
}

const CALIBRATION_STEPS: usize = 64;

impl Calibration {
    /// Simulates a quarter-turn pulse per qubit and channel (coupling
    /// switched off) and one refocused two-qubit pulse, and reads the signs
    /// off the rotating-frame propagators.
    pub fn measure<T: Scalar>(p: &SystemParams<T>) -> Self {
        let policy = StepPolicy::with_steps(CALIBRATION_STEPS);
        let free = p.with_wxx(T::zero()).expect("zero coupling is always valid");
        let t2 = one_qubit_duration(p);
        let amp = p.delta() / lit(8.0);
        let sense = |q: Qubit, axis: Axis| -> i8 {
            let drive = match axis {
                Axis::X => Drive::new(amp, T::zero()),
                Axis::Y => Drive::new(T::zero(), amp),
            };
            let seq = PulseSequence::from_segments(vec![PulseSegment::single(q, T::zero(), t2, drive)]);
            let u = rotating_propagator(&free, &seq, policy);
            let axis = PauliString::single(q.number(), axis.pauli());
            let plus = overlap(&u, &Rotation::of(axis, 1, 2).unitary());
            let minus = overlap(&u, &Rotation::of(axis, -1, 2).unitary());
            if plus >= minus {
                1
            } else {
                -1
            }
        };
        let xx_sense = if p.wxx() > T::zero() {
            let seq = xx_sequence(p, T::zero(), true);
            let u = rotating_propagator(p, &seq, policy);
            let xx = PauliString::unit(Pauli::X, Pauli::X).matrix::<T>();
            let ratio = (xx * u).trace() / u.trace();
            if ratio.im < T::zero() {
                -1
            } else {
                1
            }
        } else {
            1
        };
        Self {
            x_sense: [sense(Qubit::One, Axis::X), sense(Qubit::Two, Axis::X)],
            y_sense: [sense(Qubit::One, Axis::Y), sense(Qubit::Two, Axis::Y)],
            xx_sense,
        }
    }

    pub fn sense(&self, q: Qubit, axis: Axis) -> i8 {
        match axis {
            Axis::X => self.x_sense[q.index()],
            Axis::Y => self.y_sense[q.index()],
        }
    }
}

fn overlap<T: Scalar>(u: &Mat4<T>, w: &Mat4<T>) -> T {
    modulus((w.adjoint() * u).trace())
}

/// `4π/δ`, the length of every one-qubit pulse.
pub fn one_qubit_duration<T: Scalar>(p: &SystemParams<T>) -> T {
    lit::<T>(2.0) * p.t0_sync()
}

/// `4π/ωˣˣ`, the length of the D and refocused pulses.
pub fn two_qubit_duration<T: Scalar>(p: &SystemParams<T>) -> T {
    lit::<T>(4.0 * PI) / p.wxx()
}

/// Smallest grid time `>= t`.
pub fn next_grid_time<T: Scalar>(p: &SystemParams<T>, t: T) -> T {
    if on_sync_grid(p, t, lit(1e-9)) {
        return t;
    }
    (t / p.t0_sync()).ceil() * p.t0_sync()
}

/// Waiting time `t_w ∈ [0, 2π/δ)` with `δ·t_w ≡ angle (mod 2π)`; the
/// physical alternative to a virtual Z. Not snapped to the grid, since every
/// grid point has `δ·t ≡ 0`.
pub fn physical_wait_time<T: Scalar>(p: &SystemParams<T>, angle: T) -> T {
    let two_pi = T::two_pi();
    let a = angle % two_pi;
    let a = if a < T::zero() { a + two_pi } else { a };
    a / p.delta()
}

fn xx_sequence<T: Scalar>(p: &SystemParams<T>, start: T, refocus: bool) -> PulseSequence<T> {
    let amp = p.delta() * lit(0.5);
    let duration = two_qubit_duration(p);
    let mut seg = PulseSegment::new(start, duration, Drive::new(T::zero(), amp), Drive::new(T::zero(), amp));
    if refocus {
        seg.flip = Some(Flip {
            t: start + duration * lit(0.5),
            qubit: Qubit::Two,
        });
    }
    PulseSequence::from_segments(vec![seg])
}

/// Appends a virtual `exp(i·angle·σᶻ_q/2)` at time `t`.
pub fn virtual_z<T: Scalar>(seq: &PulseSequence<T>, qubit: Qubit, angle: T, t: T) -> PulseSequence<T> {
    let mut out = seq.clone();
    out.virtual_z.push(VirtualZ { qubit, angle, t });
    out
}

/// Gate compiler bound to one parameter set and its calibration.
#[derive(Debug, Clone)]
pub struct Compiler<T> {
    params: SystemParams<T>,
    calibration: Calibration,
}

impl<T: Scalar> Compiler<T> {
    /// Measures the calibration for `p`.
    pub fn new(p: &SystemParams<T>) -> Self {
        Self::with_calibration(p, Calibration::measure(p))
    }

    pub fn with_calibration(p: &SystemParams<T>, calibration: Calibration) -> Self {
        Self {
            params: *p,
            calibration,
        }
    }

    pub fn params(&self) -> &SystemParams<T> {
        &self.params
    }

    pub fn calibration(&self) -> Calibration {
        self.calibration
    }

    fn check_grid(&self, start: T) -> Result<(), CompileError> {
        if on_sync_grid(&self.params, start, lit(1e-9)) {
            Ok(())
        } else {
            Err(CompileError::OffGridStart {
                start: to_f64(start),
                t0: to_f64(self.params.t0_sync()),
            })
        }
    }

    /// Rotation by `angle` radians on the Bloch sphere, i.e. `P^(angle/π)`.
    pub fn one_qubit(&self, qubit: Qubit, axis: Axis, angle: T, start: T) -> Result<PulseSegment<T>, CompileError> {
        if angle.abs() > lit::<T>(FRAC_PI_2) * lit(1.0 + 1e-12) {
            return Err(CompileError::AngleOutOfRange { angle: to_f64(angle) });
        }
        self.check_grid(start)?;
        let p = &self.params;
        let sense: T = lit(self.calibration.sense(qubit, axis) as f64);
        let amp = sense * angle / lit(FRAC_PI_2) * p.delta() / lit(8.0);
        let drive = match axis {
            Axis::X => Drive::new(amp, T::zero()),
            Axis::Y => Drive::new(T::zero(), amp),
        };
        Ok(PulseSegment::single(qubit, start, one_qubit_duration(p), drive))
    }

    /// Both qubits driven at `ωʸ = δ/2` for `4π/ωˣˣ`, no flip.
    pub fn d(&self, start: T) -> Result<PulseSequence<T>, CompileError> {
        self.two_qubit(start, false)
    }

    /// The D pulse with qubit 2's drive negated at the midpoint.
    pub fn xx_half(&self, start: T) -> Result<PulseSequence<T>, CompileError> {
        self.two_qubit(start, true)
    }

    fn two_qubit(&self, start: T, refocus: bool) -> Result<PulseSequence<T>, CompileError> {
        if self.params.wxx() <= T::zero() {
            return Err(CompileError::NoCoupling);
        }
        self.check_grid(start)?;
        Ok(xx_sequence(&self.params, start, refocus))
    }

    /// The rotation word the pulses physically realize for a CNOT. When the
    /// refocused pulse natively gives `(X₁X₂)^(−1/2)` the word is conjugated
    /// by `σ₁ᶻ`, which leaves the CNOT unchanged.
    pub fn cnot_schedule(&self) -> RotationWord {
        let word = build_cnot_word();
        if self.calibration.xx_sense < 0 {
            word.conjugated_by(&PauliString::single(1, Pauli::Z))
        } else {
            word
        }
    }

    /// Compiles a Clifford word whose rotations are one-qubit `X`/`Y`
    /// rotations with `|exponent| <= 1/2`, `(X₁X₂)^(±1/2)` matching the
    /// calibrated sense, and `Z` rotations (virtual). Pulses are scheduled
    /// back to back from `t = 0`, each starting on the sync grid.
    pub fn compile_word(&self, word: &RotationWord) -> Result<PulseSequence<T>, CompileError> {
        let p = &self.params;
        let mut seq = PulseSequence::new();
        let mut t = T::zero();
        let xx = PauliString::unit(Pauli::X, Pauli::X);
        for r in word.iter() {
            let axis = r.axis();
            let exponent = r.exponent();
            let angle: T = lit(exponent.numer().to_owned() as f64 / *exponent.denom() as f64 * PI);
            let single = match (axis.first, axis.second) {
                (a, Pauli::I) => Some((Qubit::One, a)),
                (Pauli::I, b) => Some((Qubit::Two, b)),
                _ => None,
            };
            match single {
                Some((q, Pauli::Z)) => {
                    seq.virtual_z.push(VirtualZ { qubit: q, angle, t });
                }
                Some((q, pauli)) => {
                    let axis = if pauli == Pauli::X { Axis::X } else { Axis::Y };
                    t = next_grid_time(p, t);
                    let seg = self.one_qubit(q, axis, angle, t)?;
                    t = seg.end();
                    seq.push(seg);
                }
                None => {
                    let native = Rotation::of(xx, self.calibration.xx_sense as i64, 2);
                    if *r != native {
                        return Err(CompileError::AngleOutOfRange { angle: to_f64(angle) });
                    }
                    t = next_grid_time(p, t);
                    let block = self.xx_half(t)?;
                    t = block.duration();
                    seq.append_shifted(&block, T::zero());
                }
            }
        }
        seq.total_time = Some(t);
        Ok(seq)
    }

    /// `X₂^(1/2) Y₁^(1/2) (X₁X₂)^(1/2) Y₁^(−1/2) Z₁^(1/2)`, sequential, with
    /// the trailing Z as a ledger entry at the end.
    pub fn cnot(&self) -> Result<PulseSequence<T>, CompileError> {
        let mut seq = self.compile_word(&self.cnot_schedule())?;
        seq.intended = Some(build_cnot_word());
        Ok(seq)
    }

    /// Echo on the idle qubit of one-qubit segment `index`: the host is
    /// split in half, and each half is followed by a `σʸ` π pulse on the
    /// other qubit. Later events move by `2·(4π/δ)`.
    pub fn insert_decoupling(&self, seq: &PulseSequence<T>, index: usize) -> Result<PulseSequence<T>, CompileError> {
        let host = *seq
            .segments
            .get(index)
            .ok_or(CompileError::NotOneQubitSegment { index })?;
        let q = host.driven_qubit().ok_or(CompileError::NotOneQubitSegment { index })?;
        let idle = q.other();
        let t2 = one_qubit_duration(&self.params);
        let half = host.duration * lit(0.5);
        let added = t2 * lit(2.0);
        let pi_amp = lit::<T>(self.calibration.sense(idle, Axis::Y) as f64) * self.params.delta() / lit(4.0);
        let echo = Drive::new(T::zero(), pi_amp);

        let mut first = host;
        first.duration = half;
        let e1 = PulseSegment::single(idle, host.start + half, t2, echo);
        let mut second = host;
        second.start = e1.end();
        second.duration = half;
        let e2 = PulseSegment::single(idle, second.end(), t2, echo);

        let mut out = shift_after(seq, index, host.end(), added);
        out.segments.remove(index);
        for s in [first, e1, second, e2] {
            out.push(s);
        }
        Ok(out)
    }

    /// Inverse of [`Compiler::insert_decoupling`] for the block whose first
    /// host half is segment `index`.
    pub fn remove_decoupling(&self, seq: &PulseSequence<T>, index: usize) -> Result<PulseSequence<T>, CompileError> {
        let not = CompileError::NotDecoupled { index };
        let block = seq.segments.get(index..index + 4).ok_or(not.clone())?;
        let (first, e1, second, e2) = (block[0], block[1], block[2], block[3]);
        let q = first.driven_qubit().ok_or(not.clone())?;
        let t2 = one_qubit_duration(&self.params);
        let tol = lit::<T>(1e-9) * t2;
        let is_echo = |s: &PulseSegment<T>, at: T| {
            s.driven_qubit() == Some(q.other())
                && (s.start - at).abs() <= tol
                && (s.duration - t2).abs() <= tol
                && s.drive(q.other()).x == T::zero()
                && (s.drive(q.other()).y.abs() - self.params.delta() / lit(4.0)).abs() <= tol
        };
        let same_host = second.driven_qubit() == Some(q)
            && second.drive(q) == first.drive(q)
            && (second.duration - first.duration).abs() <= tol;
        if !(is_echo(&e1, first.end()) && same_host && (second.start - e1.end()).abs() <= tol && is_echo(&e2, second.end())) {
            return Err(not);
        }
        let mut host = first;
        host.duration = first.duration * lit(2.0);
        let mut out = seq.clone();
        out.segments.drain(index..index + 4);
        let out = shift_after(&out, usize::MAX, e2.end(), -(t2 * lit(2.0)));
        let mut out = out;
        out.push(host);
        Ok(out)
    }
}

/// Moves every segment starting at or after `from` (other than `skip`),
/// every ledger entry at or after `from`, and the total time, by `dt`.
fn shift_after<T: Scalar>(seq: &PulseSequence<T>, skip: usize, from: T, dt: T) -> PulseSequence<T> {
    let tol = lit::<T>(1e-12) * from.abs().max(T::one());
    let mut out = seq.clone();
    for (i, s) in out.segments.iter_mut().enumerate() {
        if i != skip && s.start >= from - tol {
            *s = s.shift(dt);
        }
    }
    for v in out.virtual_z.iter_mut() {
        if v.t >= from - tol {
            v.t += dt;
        }
    }
    if let Some(t) = out.total_time.as_mut() {
        if *t >= from - tol {
            *t += dt;
        }
    }
    out
}

/// `compile_one_qubit` with a freshly measured calibration.
pub fn compile_one_qubit<T: Scalar>(
    p: &SystemParams<T>,
    qubit: Qubit,
    axis: Axis,
    angle: T,
    start: T,
) -> Result<PulseSegment<T>, CompileError> {
    Compiler::new(p).one_qubit(qubit, axis, angle, start)
}

pub fn compile_d<T: Scalar>(p: &SystemParams<T>, start: T) -> Result<PulseSequence<T>, CompileError> {
    Compiler::with_calibration(p, Calibration::default()).d(start)
}

pub fn compile_xx_half<T: Scalar>(p: &SystemParams<T>, start: T) -> Result<PulseSequence<T>, CompileError> {
    Compiler::with_calibration(p, Calibration::default()).xx_half(start)
}

pub fn compile_cnot<T: Scalar>(p: &SystemParams<T>) -> Result<PulseSequence<T>, CompileError> {
    Compiler::new(p).cnot()
}

impl Default for Calibration {
    /// Senses before measurement: every channel taken as positive.
    fn default() -> Self {
        Self {
            x_sense: [1, 1],
            y_sense: [1, 1],
            xx_sense: 1,
        }
    }
}
