// SPDX-License-Identifier: Apache-2.0

//! System parameters, pulse data and the lab-frame Hamiltonian.
//!
//! Angular frequencies are in units of the mean Larmor frequency
//! `ω₀ = (ω₁ᶻ + ω₂ᶻ)/2` and times in units of `1/ω₀`. The Hamiltonian is
//!
//! ```text
//! H/ħ = ½[ω₁ᶻσ₁ᶻ + 2(ω₁ˣ(t)cos(ω₁ᶻt) + ω₁ʸ(t)sin(ω₁ᶻt))σ₁ˣ
//!       + ω₂ᶻσ₂ᶻ + 2(ω₂ˣ(t)cos(ω₂ᶻt) + ω₂ʸ(t)sin(ω₂ᶻt))σ₂ˣ
//!       + ωˣˣσ₁ˣσ₂ˣ]
//! ```
//!
//! Each drive is resonant with its own qubit and the carriers are phase
//! coherent with the `t = 0` lab clock. Note that the second-line in-phase
//! amplitude belongs to qubit 2; it is sometimes printed as `ω₁ˣ`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{re, Mat4};
use crate::pauli::{PauliString, RotationWord};
use crate::scalar::{lit, to_f64, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("detuning must be positive (w1z > w2z), got w1z={w1z}, w2z={w2z}")]
    NonPositiveDetuning { w1z: f64, w2z: f64 },
    #[error("coupling wxx={wxx} must satisfy 0 <= wxx <= 0.5*delta (delta={delta})")]
    CouplingTooStrong { wxx: f64, delta: f64 },
    #[error("parameter `{0}` is not finite")]
    NotFinite(&'static str),
    #[error("qubit index must be 1 or 2, got {0}")]
    BadQubit(u8),
}

/// Qubit label. Qubit 1 has the higher Larmor frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Qubit {
    One,
    Two,
}

impl Qubit {
    pub const BOTH: [Qubit; 2] = [Qubit::One, Qubit::Two];

    pub fn index(self) -> usize {
        match self {
            Qubit::One => 0,
            Qubit::Two => 1,
        }
    }

    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn other(self) -> Qubit {
        match self {
            Qubit::One => Qubit::Two,
            Qubit::Two => Qubit::One,
        }
    }
}

impl TryFrom<u8> for Qubit {
    type Error = ModelError;
    fn try_from(v: u8) -> Result<Self, ModelError> {
        match v {
            1 => Ok(Qubit::One),
            2 => Ok(Qubit::Two),
            _ => Err(ModelError::BadQubit(v)),
        }
    }
}

impl From<Qubit> for u8 {
    fn from(q: Qubit) -> u8 {
        q.number()
    }
}

impl std::fmt::Display for Qubit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Violation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    CouplingRatio,
    OffGrid,
    ChannelOverlap,
    BadSegment,
    FlipOutsideSegment,
    Unsorted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl Diagnostic {
    fn violation(kind: DiagnosticKind, message: String) -> Self {
        Self {
            severity: Severity::Violation,
            kind,
            message,
        }
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Violation => "violation",
        };
        write!(f, "{sev}: {}", self.message)
    }
}

/// Fixed circuit frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemParams<T> {
    w1z: T,
    w2z: T,
    wxx: T,
}

impl<T: Scalar> SystemParams<T> {
    pub fn new(w1z: T, w2z: T, wxx: T) -> Result<Self, ModelError> {
        for (name, v) in [("w1z", w1z), ("w2z", w2z), ("wxx", wxx)] {
            if !v.is_finite() {
                return Err(ModelError::NotFinite(name));
            }
        }
        let delta = w1z - w2z;
        if delta <= T::zero() {
            return Err(ModelError::NonPositiveDetuning {
                w1z: to_f64(w1z),
                w2z: to_f64(w2z),
            });
        }
        if wxx < T::zero() || wxx > delta * lit(0.5) {
            return Err(ModelError::CouplingTooStrong {
                wxx: to_f64(wxx),
                delta: to_f64(delta),
            });
        }
        Ok(Self { w1z, w2z, wxx })
    }

    /// Larmor frequencies split symmetrically about `ω₀ = 1`.
    pub fn symmetric(delta: T, wxx: T) -> Result<Self, ModelError> {
        let half = delta * lit(0.5);
        Self::new(T::one() + half, T::one() - half, wxx)
    }

    /// `ω₁ᶻ = 1.05`, `ω₂ᶻ = 0.95`, `ωˣˣ = 0.01`.
    pub fn standard() -> Self {
        Self::new(lit(1.05), lit(0.95), lit(0.01)).expect("valid defaults")
    }

    pub fn w1z(&self) -> T {
        self.w1z
    }

    pub fn w2z(&self) -> T {
        self.w2z
    }

    pub fn wxx(&self) -> T {
        self.wxx
    }

    pub fn larmor(&self, q: Qubit) -> T {
        match q {
            Qubit::One => self.w1z,
            Qubit::Two => self.w2z,
        }
    }

    pub fn delta(&self) -> T {
        self.w1z - self.w2z
    }

    pub fn w0(&self) -> T {
        (self.w1z + self.w2z) * lit(0.5)
    }

    /// `2π/ωˣˣ`; infinite without coupling.
    pub fn t_swap(&self) -> T {
        T::two_pi() / self.wxx
    }

    /// `2π/δ`, the period of the interqubit precession phase.
    pub fn t0_sync(&self) -> T {
        T::two_pi() / self.delta()
    }

    /// Period of the fastest carrier.
    pub fn smallest_carrier_period(&self) -> T {
        T::two_pi() / self.w1z.max(self.w2z)
    }

    /// Same frequencies with a different coupling.
    pub fn with_wxx(&self, wxx: T) -> Result<Self, ModelError> {
        Self::new(self.w1z, self.w2z, wxx)
    }

    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if self.wxx > self.delta() * lit(0.2) {
            out.push(Diagnostic {
                severity: Severity::Warning,
                kind: DiagnosticKind::CouplingRatio,
                message: format!(
                    "wxx/delta = {:.4} exceeds 0.2; the qubits entangle appreciably at rest",
                    to_f64(self.wxx / self.delta())
                ),
            });
        }
        out
    }
}

impl Default for SystemParams<f64> {
    fn default() -> Self {
        Self::standard()
    }
}

#[derive(Deserialize)]
struct RawParams<T> {
    w1z: T,
    w2z: T,
    wxx: T,
}

impl<'de, T: Scalar + Deserialize<'de>> Deserialize<'de> for SystemParams<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawParams::<T>::deserialize(d)?;
        SystemParams::new(raw.w1z, raw.w2z, raw.wxx).map_err(serde::de::Error::custom)
    }
}

/// `m · t_o^sync`.
pub fn sync_time<T: Scalar>(p: &SystemParams<T>, m: u64) -> T {
    lit::<T>(m as f64) * p.t0_sync()
}

/// Is `t` an integer multiple of `t_o^sync` within relative tolerance `rel`?
pub fn on_sync_grid<T: Scalar>(p: &SystemParams<T>, t: T, rel: T) -> bool {
    let t0 = p.t0_sync();
    let m = (t / t0).round();
    (t - m * t0).abs() <= rel * t0.max(t.abs())
}

/// Amplitude scale applied to both quadratures of a segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Envelope<T> {
    #[default]
    Square,
    /// Half-cosine ramps of length `rise` at both ends.
    RaisedCosine { rise: T },
}

impl<T: Scalar> Envelope<T> {
    /// Scale factor at `t_rel` into a segment of length `duration`.
    pub fn scale(&self, t_rel: T, duration: T) -> T {
        match *self {
            Envelope::Square => T::one(),
            Envelope::RaisedCosine { rise } => {
                let rise = rise.min(duration * lit(0.5));
                if rise <= T::zero() {
                    return T::one();
                }
                let edge = t_rel.min(duration - t_rel).max(T::zero());
                if edge >= rise {
                    T::one()
                } else {
                    (T::one() - (T::pi() * edge / rise).cos()) * lit(0.5)
                }
            }
        }
    }

    /// Offsets inside the segment where the envelope is not smooth.
    pub fn breakpoints(&self, duration: T) -> Vec<T> {
        match *self {
            Envelope::Square => Vec::new(),
            Envelope::RaisedCosine { rise } => {
                let rise = rise.min(duration * lit(0.5));
                vec![rise, duration - rise]
            }
        }
    }
}

/// In-phase (`x`) and quadrature (`y`) drive amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Drive<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Drive<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.x == T::zero() && self.y == T::zero()
    }

    fn scaled(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }

    /// Quadratures re-expressed after a virtual `exp(iθσᶻ/2)` frame change
    /// that logically precedes the drive.
    pub fn in_frame(self, theta: T) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(self.x * c + self.y * s, self.y * c - self.x * s)
    }
}

/// Mid-segment sign reversal of one qubit's drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Flip<T> {
    pub t: T,
    pub qubit: Qubit,
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for Flip<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr<T> {
            Time(T),
            Full { t: T, qubit: Qubit },
        }
        Ok(match Repr::<T>::deserialize(d)? {
            Repr::Time(t) => Flip {
                t,
                qubit: Qubit::Two,
            },
            Repr::Full { t, qubit } => Flip { t, qubit },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSegment<T> {
    pub start: T,
    pub duration: T,
    pub q1: Drive<T>,
    pub q2: Drive<T>,
    #[serde(default)]
    pub envelope: Envelope<T>,
    #[serde(default)]
    pub flip: Option<Flip<T>>,
}

impl<T: Scalar> PulseSegment<T> {
    pub fn new(start: T, duration: T, q1: Drive<T>, q2: Drive<T>) -> Self {
        Self {
            start,
            duration,
            q1,
            q2,
            envelope: Envelope::Square,
            flip: None,
        }
    }

    /// Segment driving only `q`.
    pub fn single(q: Qubit, start: T, duration: T, drive: Drive<T>) -> Self {
        match q {
            Qubit::One => Self::new(start, duration, drive, Drive::zero()),
            Qubit::Two => Self::new(start, duration, Drive::zero(), drive),
        }
    }

    pub fn end(&self) -> T {
        self.start + self.duration
    }

    pub fn drive(&self, q: Qubit) -> Drive<T> {
        match q {
            Qubit::One => self.q1,
            Qubit::Two => self.q2,
        }
    }

    pub fn drive_mut(&mut self, q: Qubit) -> &mut Drive<T> {
        match q {
            Qubit::One => &mut self.q1,
            Qubit::Two => &mut self.q2,
        }
    }

    pub fn drives(&self, q: Qubit) -> bool {
        !self.drive(q).is_zero()
    }

    /// A pulse that drives both qubits at once.
    pub fn is_two_qubit(&self) -> bool {
        self.drives(Qubit::One) && self.drives(Qubit::Two)
    }

    /// The only driven qubit, if exactly one is driven.
    pub fn driven_qubit(&self) -> Option<Qubit> {
        match (self.drives(Qubit::One), self.drives(Qubit::Two)) {
            (true, false) => Some(Qubit::One),
            (false, true) => Some(Qubit::Two),
            _ => None,
        }
    }

    /// Half-open activity window `[start, end)`.
    pub fn is_active(&self, t: T) -> bool {
        t >= self.start && t < self.end()
    }

    fn shifted(mut self, dt: T) -> Self {
        self.start += dt;
        if let Some(f) = self.flip.as_mut() {
            f.t += dt;
        }
        self
    }

    /// Same segment moved by `dt`.
    pub fn shift(&self, dt: T) -> Self {
        self.shifted(dt)
    }
}

/// Frame rotation `exp(i·angle·σᶻ_q/2)` applied in software at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirtualZ<T> {
    pub qubit: Qubit,
    pub angle: T,
    pub t: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence<T> {
    pub segments: Vec<PulseSegment<T>>,
    #[serde(default)]
    pub virtual_z: Vec<VirtualZ<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_time: Option<T>,
    /// Logical rotation word the sequence was compiled from, if any.
    #[serde(skip)]
    pub intended: Option<RotationWord>,
}

impl<T: Scalar> Default for PulseSequence<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> PulseSequence<T> {
    pub fn new() -> Self {
        Self {
            segments: Vec::new(),
            virtual_z: Vec::new(),
            total_time: None,
            intended: None,
        }
    }

    /// An undriven sequence lasting `t`.
    pub fn idle(t: T) -> Self {
        Self {
            total_time: Some(t),
            ..Self::new()
        }
    }

    pub fn from_segments(mut segments: Vec<PulseSegment<T>>) -> Self {
        sort_segments(&mut segments);
        Self {
            segments,
            ..Self::new()
        }
    }

    /// Inserts a segment, keeping the list sorted by start time.
    pub fn push(&mut self, seg: PulseSegment<T>) {
        let at = self.segments.partition_point(|s| s.start <= seg.start);
        self.segments.insert(at, seg);
    }

    /// Appends all segments and ledger entries of `other`, shifted by `dt`.
    pub fn append_shifted(&mut self, other: &PulseSequence<T>, dt: T) {
        for s in &other.segments {
            self.push(s.shift(dt));
        }
        for v in &other.virtual_z {
            self.virtual_z.push(VirtualZ { t: v.t + dt, ..*v });
        }
        if let Some(t) = other.total_time {
            self.total_time = Some(self.total_time.map_or(t + dt, |own| own.max(t + dt)));
        }
    }

    /// End of the last physical or bookkeeping event.
    pub fn duration(&self) -> T {
        let mut end = self.total_time.unwrap_or(T::zero());
        for s in &self.segments {
            end = end.max(s.end());
        }
        for v in &self.virtual_z {
            end = end.max(v.t);
        }
        end
    }

    /// Accumulated virtual-Z angle on `q` from entries with time `<= t`.
    pub fn frame_angle(&self, q: Qubit, t: T) -> T {
        self.virtual_z
            .iter()
            .filter(|v| v.qubit == q && v.t <= t)
            .fold(T::zero(), |acc, v| acc + v.angle)
    }

    /// Total virtual-Z angle on `q`.
    pub fn total_frame_angle(&self, q: Qubit) -> T {
        self.virtual_z
            .iter()
            .filter(|v| v.qubit == q)
            .fold(T::zero(), |acc, v| acc + v.angle)
    }

    /// Times at which the drive configuration changes discontinuously
    /// (segment edges, flips, envelope corners, frame changes), sorted.
    pub fn breakpoints(&self) -> Vec<T> {
        let mut out = Vec::new();
        for s in &self.segments {
            out.push(s.start);
            out.push(s.end());
            if let Some(f) = s.flip {
                out.push(f.t);
            }
            for b in s.envelope.breakpoints(s.duration) {
                out.push(s.start + b);
            }
        }
        for v in &self.virtual_z {
            out.push(v.t);
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        out
    }

    /// Drive configuration in force at `t`, with flips and frame changes
    /// resolved. Envelopes remain time dependent.
    pub fn snapshot(&self, t: T) -> DriveSnapshot<T> {
        let mut snap = DriveSnapshot::default();
        for s in self.segments.iter().filter(|s| s.is_active(t)) {
            for q in Qubit::BOTH {
                let mut d = s.drive(q);
                if d.is_zero() {
                    continue;
                }
                if let Some(f) = s.flip {
                    if f.qubit == q && t >= f.t {
                        d = d.scaled(-T::one());
                    }
                }
                d = d.in_frame(self.frame_angle(q, t));
                snap.drives[q.index()].push(ActiveDrive {
                    base: d,
                    envelope: s.envelope,
                    start: s.start,
                    duration: s.duration,
                });
            }
        }
        snap
    }
}

fn sort_segments<T: Scalar>(segments: &mut [PulseSegment<T>]) {
    segments.sort_by(|a, b| a.start.partial_cmp(&b.start).unwrap_or(std::cmp::Ordering::Equal));
}

#[derive(Debug, Clone, Copy)]
pub struct ActiveDrive<T> {
    base: Drive<T>,
    envelope: Envelope<T>,
    start: T,
    duration: T,
}

impl<T: Scalar> ActiveDrive<T> {
    pub fn amplitude(&self, t: T) -> Drive<T> {
        self.base
            .scaled(self.envelope.scale(t - self.start, self.duration))
    }
}

/// Drives active on each qubit over an interval with no breakpoints.
#[derive(Debug, Clone)]
pub struct DriveSnapshot<T> {
    drives: [Vec<ActiveDrive<T>>; 2],
}

impl<T> Default for DriveSnapshot<T> {
    fn default() -> Self {
        Self {
            drives: [Vec::new(), Vec::new()],
        }
    }
}

impl<T: Scalar> DriveSnapshot<T> {
    pub fn amplitude(&self, q: Qubit, t: T) -> Drive<T> {
        self.drives[q.index()]
            .iter()
            .fold(Drive::zero(), |acc, d| {
                let a = d.amplitude(t);
                Drive::new(acc.x + a.x, acc.y + a.y)
            })
    }

    /// Hamiltonian at `t` for this drive configuration.
    pub fn hamiltonian(&self, p: &SystemParams<T>, t: T) -> Hamiltonian<T> {
        let mut h = Hamiltonian::zero();
        let half: T = lit(0.5);
        for q in Qubit::BOTH {
            let w = p.larmor(q);
            let a = self.amplitude(q, t);
            let (s, c) = (w * t).sin_cos();
            let (x_idx, z_idx) = match q {
                Qubit::One => (X1_IDX, Z1_IDX),
                Qubit::Two => (X2_IDX, Z2_IDX),
            };
            h.coeffs[z_idx] = w * half;
            h.coeffs[x_idx] = a.x * c + a.y * s;
        }
        h.coeffs[XX_IDX] = p.wxx() * half;
        h
    }
}

const X1_IDX: usize = 0;
const Z1_IDX: usize = 2;
const X2_IDX: usize = 3;
const Z2_IDX: usize = 5;
const XX_IDX: usize = 6;

/// Traceless Hermitian operator `H = Σ_α coeffs[α]·P_α` over the canonical
/// Pauli basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hamiltonian<T> {
    pub coeffs: [T; 15],
}

impl<T: Scalar> Hamiltonian<T> {
    pub fn zero() -> Self {
        Self {
            coeffs: [T::zero(); 15],
        }
    }

    pub fn coefficient(&self, p: PauliString) -> T {
        p.basis_index().map_or(T::zero(), |i| self.coeffs[i])
    }

    pub fn matrix(&self) -> Mat4<T> {
        PauliString::basis()
            .iter()
            .zip(self.coeffs.iter())
            .filter(|(_, c)| **c != T::zero())
            .fold(Mat4::zeros(), |acc, (p, c)| acc + p.matrix::<T>() * re(*c))
    }
}

/// `H(t)` for the sequence at absolute time `t`.
pub fn hamiltonian_at<T: Scalar>(p: &SystemParams<T>, seq: &PulseSequence<T>, t: T) -> Hamiltonian<T> {
    seq.snapshot(t).hamiltonian(p, t)
}

/// Structural checks: sync grid for two-qubit pulses, per-channel overlaps,
/// malformed segments and the coupling ratio.
pub fn validate_sequence<T: Scalar>(p: &SystemParams<T>, seq: &PulseSequence<T>) -> Vec<Diagnostic> {
    let mut out = p.diagnostics();
    let rel: T = lit(1e-9);
    let tol = rel * p.t0_sync().max(seq.duration());

    for (i, s) in seq.segments.iter().enumerate() {
        if !(s.start.is_finite() && s.duration.is_finite()) || s.duration <= T::zero() || s.start < T::zero() {
            out.push(Diagnostic::violation(
                DiagnosticKind::BadSegment,
                format!(
                    "segment {i}: start {} / duration {} is not a valid time window",
                    to_f64(s.start),
                    to_f64(s.duration)
                ),
            ));
        }
        if let Some(f) = s.flip {
            if !(f.t > s.start && f.t < s.end()) {
                out.push(Diagnostic::violation(
                    DiagnosticKind::FlipOutsideSegment,
                    format!("segment {i}: flip at {} lies outside its window", to_f64(f.t)),
                ));
            }
        }
        if s.is_two_qubit() && !on_sync_grid(p, s.start, rel) {
            out.push(Diagnostic::violation(
                DiagnosticKind::OffGrid,
                format!(
                    "segment {i}: two-qubit pulse starts at {} = {:.6} t0_sync, off the sync grid",
                    to_f64(s.start),
                    to_f64(s.start / p.t0_sync())
                ),
            ));
        }
    }

    if seq.segments.windows(2).any(|w| w[1].start < w[0].start) {
        out.push(Diagnostic::violation(
            DiagnosticKind::Unsorted,
            "segments are not sorted by start time".to_string(),
        ));
    }

    for q in Qubit::BOTH {
        let mut driving: Vec<(usize, &PulseSegment<T>)> =
            seq.segments.iter().enumerate().filter(|(_, s)| s.drives(q)).collect();
        driving.sort_by(|a, b| a.1.start.partial_cmp(&b.1.start).unwrap_or(std::cmp::Ordering::Equal));
        for w in driving.windows(2) {
            let ((i, a), (j, b)) = (w[0], w[1]);
            if b.start < a.end() - tol {
                out.push(Diagnostic::violation(
                    DiagnosticKind::ChannelOverlap,
                    format!("segments {i} and {j} both drive qubit {q} at overlapping times"),
                ));
            }
        }
    }
    out
}

/// Only the violations from [`validate_sequence`].
pub fn violations<T: Scalar>(p: &SystemParams<T>, seq: &PulseSequence<T>) -> Vec<Diagnostic> {
    validate_sequence(p, seq)
        .into_iter()
        .filter(|d| d.severity == Severity::Violation)
        .collect()
}

/// JSON document holding the system parameters and a pulse sequence.
///
/// ```json
/// {"w1z":1.05,"w2z":0.95,"wxx":0.01,"segments":[...],"virtual_z":[...]}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceDocument<T> {
    pub w1z: T,
    pub w2z: T,
    pub wxx: T,
    #[serde(default)]
    pub segments: Vec<PulseSegment<T>>,
    #[serde(default)]
    pub virtual_z: Vec<VirtualZ<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_time: Option<T>,
}

impl<T: Scalar> SequenceDocument<T> {
    pub fn new(p: &SystemParams<T>, seq: &PulseSequence<T>) -> Self {
        Self {
            w1z: p.w1z(),
            w2z: p.w2z(),
            wxx: p.wxx(),
            segments: seq.segments.clone(),
            virtual_z: seq.virtual_z.clone(),
            total_time: seq.total_time,
        }
    }

    pub fn params(&self) -> Result<SystemParams<T>, ModelError> {
        SystemParams::new(self.w1z, self.w2z, self.wxx)
    }

    pub fn into_parts(self) -> Result<(SystemParams<T>, PulseSequence<T>), ModelError> {
        let p = self.params()?;
        let mut seq = PulseSequence::from_segments(self.segments);
        seq.virtual_z = self.virtual_z;
        seq.total_time = self.total_time;
        Ok((p, seq))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{is_hermitian, max_abs};
    use proptest::prelude::*;

    fn params() -> SystemParams<f64> {
        SystemParams::standard()
    }

    #[test]
    fn derived_quantities() {
        let p = params();
        assert!((p.delta() - 0.1).abs() < 1e-15);
        assert!((p.w0() - 1.0).abs() < 1e-15);
        assert!((p.t_swap() - 2.0 * std::f64::consts::PI / 0.01).abs() < 1e-9);
        assert_eq!(p, SystemParams::symmetric(0.1, 0.01).unwrap());
    }

    #[test]
    fn parameter_validation() {
        assert!(matches!(
            SystemParams::new(0.95, 1.05, 0.01),
            Err(ModelError::NonPositiveDetuning { .. })
        ));
        assert!(matches!(
            SystemParams::new(1.05, 0.95, 0.06),
            Err(ModelError::CouplingTooStrong { .. })
        ));
        assert!(SystemParams::new(1.05, 0.95, 0.05).is_ok());
        let warn = SystemParams::new(1.05, 0.95, 0.03).unwrap();
        assert_eq!(warn.diagnostics()[0].kind, DiagnosticKind::CouplingRatio);
        assert!(params().diagnostics().is_empty());
        assert!(SystemParams::new(f64::NAN, 0.95, 0.01).is_err());
    }

    #[test]
    fn sync_times() {
        let p = params();
        assert!((sync_time(&p, 1) - 62.8319).abs() < 1e-4);
        assert_eq!(sync_time(&p, 0), 0.0);
        assert!((sync_time(&p, 2) - 125.6637).abs() < 1e-4);
        assert!((sync_time(&p, 2) - 4.0 * std::f64::consts::PI / 0.1).abs() < 1e-12);
    }

    #[test]
    fn drift_hamiltonian() {
        let p = params();
        let h = hamiltonian_at(&p, &PulseSequence::new(), 17.3);
        let mut expect = [0.0; 15];
        expect[Z1_IDX] = 1.05 / 2.0;
        expect[Z2_IDX] = 0.95 / 2.0;
        expect[XX_IDX] = 0.01 / 2.0;
        for (a, b) in h.coeffs.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
        let free = SystemParams::new(1.05, 0.95, 0.0).unwrap();
        let h = hamiltonian_at(&free, &PulseSequence::new(), 3.0);
        let nonzero: Vec<usize> = (0..15).filter(|&i| h.coeffs[i] != 0.0).collect();
        assert_eq!(nonzero, vec![Z1_IDX, Z2_IDX]);
    }

    #[test]
    fn carrier_node_silences_quadrature() {
        let p = params();
        let seq = PulseSequence::from_segments(vec![PulseSegment::single(
            Qubit::One,
            0.0,
            200.0,
            Drive::new(0.0, 0.05),
        )]);
        let t = 2.0 * std::f64::consts::PI / 1.05 * 3.0;
        let h = hamiltonian_at(&p, &seq, t);
        assert!(h.coeffs[X1_IDX].abs() < 1e-15);
        let h = hamiltonian_at(&p, &seq, t + 1.0);
        assert!((h.coeffs[X1_IDX] - 0.05 * (1.05f64 * (t + 1.0)).sin()).abs() < 1e-15);
    }

    #[test]
    fn matrix_matches_explicit_lab_hamiltonian() {
        let p = params();
        let seq = PulseSequence::from_segments(vec![PulseSegment::new(
            0.0,
            100.0,
            Drive::new(0.01, 0.02),
            Drive::new(-0.03, 0.04),
        )]);
        let t = 7.7;
        let h = hamiltonian_at(&p, &seq, t).matrix();
        use crate::pauli::Pauli::*;
        let m = |a, b| PauliString::unit(a, b).matrix::<f64>();
        let f1 = 0.01 * (1.05f64 * t).cos() + 0.02 * (1.05f64 * t).sin();
        let f2 = -0.03 * (0.95f64 * t).cos() + 0.04 * (0.95f64 * t).sin();
        let expect = (m(Z, I) * re(1.05)
            + m(X, I) * re(2.0 * f1)
            + m(I, Z) * re(0.95)
            + m(I, X) * re(2.0 * f2)
            + m(X, X) * re(0.01))
            * re(0.5);
        assert!(max_abs(&(h - expect)) < 1e-15);
    }

    #[test]
    fn flip_and_envelope_shape_amplitudes() {
        let p = params();
        let mut seg = PulseSegment::new(0.0, 100.0, Drive::new(0.0, 0.05), Drive::new(0.0, 0.05));
        seg.flip = Some(Flip {
            t: 50.0,
            qubit: Qubit::Two,
        });
        seg.envelope = Envelope::RaisedCosine { rise: 10.0 };
        let seq = PulseSequence::from_segments(vec![seg]);
        let snap = seq.snapshot(75.0);
        assert_eq!(snap.amplitude(Qubit::Two, 75.0).y, -0.05);
        assert_eq!(snap.amplitude(Qubit::One, 75.0).y, 0.05);
        let early = seq.snapshot(5.0);
        assert!((early.amplitude(Qubit::One, 5.0_f64).y - 0.025).abs() < 1e-15);
        assert_eq!(hamiltonian_at(&p, &seq, 100.0).coeffs[X1_IDX], 0.0);
    }

    #[test]
    fn envelope_bounds() {
        let env = Envelope::RaisedCosine { rise: 7.0 };
        for k in 0..=100 {
            let t = k as f64 * 0.5;
            let s = env.scale(t, 50.0);
            assert!((0.0..=1.0).contains(&s));
        }
        assert_eq!(env.scale(25.0, 50.0), 1.0);
        assert_eq!(Envelope::<f64>::Square.scale(3.0, 5.0), 1.0);
    }

    #[test]
    fn validation_examples() {
        let p = params();
        assert!(validate_sequence(&p, &PulseSequence::new()).is_empty());
        let t0 = p.t0_sync();
        let off = PulseSequence::from_segments(vec![PulseSegment::new(
            0.5 * t0,
            2.0 * t0,
            Drive::new(0.0, 0.05),
            Drive::new(0.0, 0.05),
        )]);
        let d = validate_sequence(&p, &off);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::OffGrid);

        let overlap = PulseSequence::from_segments(vec![
            PulseSegment::single(Qubit::One, 0.0, 2.0 * t0, Drive::new(0.0, 0.01)),
            PulseSegment::single(Qubit::One, t0, 2.0 * t0, Drive::new(0.01, 0.0)),
            PulseSegment::single(Qubit::Two, t0, 2.0 * t0, Drive::new(0.01, 0.0)),
        ]);
        let d = validate_sequence(&p, &overlap);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::ChannelOverlap);

        let mut bad = PulseSegment::single(Qubit::One, 0.0, t0, Drive::new(0.0, 0.01));
        bad.flip = Some(Flip { t: 2.0 * t0, qubit: Qubit::One });
        let d = validate_sequence(&p, &PulseSequence::from_segments(vec![bad]));
        assert_eq!(d[0].kind, DiagnosticKind::FlipOutsideSegment);
    }

    #[test]
    fn frame_change_rotates_quadratures() {
        let d = Drive::new(0.0, 1.0).in_frame(std::f64::consts::FRAC_PI_2);
        assert!((d.x - 1.0).abs() < 1e-15 && d.y.abs() < 1e-15);
        let d = Drive::new(0.3, -0.2).in_frame(0.0);
        assert_eq!(d, Drive::new(0.3, -0.2));
    }

    #[test]
    fn document_schema() {
        let text = r#"{"w1z":1.05,"w2z":0.95,"wxx":0.01,"segments":[{"start":0,"duration":125.6637,"q1":{"x":0,"y":0.0125},"q2":{"x":0,"y":0},"envelope":{"kind":"square"},"flip":null}],"virtual_z":[{"qubit":1,"angle":1.5707963,"t":1633.6281}]}"#;
        let doc: SequenceDocument<f64> = serde_json::from_str(text).unwrap();
        let (p, seq) = doc.clone().into_parts().unwrap();
        assert_eq!(p, params());
        assert_eq!(seq.segments[0].q1.y, 0.0125);
        assert_eq!(seq.virtual_z[0].qubit, Qubit::One);
        let back: SequenceDocument<f64> =
            serde_json::from_str(&serde_json::to_string(&doc).unwrap()).unwrap();
        assert_eq!(back, doc);

        let flip: PulseSegment<f64> = serde_json::from_str(
            r#"{"start":0,"duration":10,"q1":{"x":0,"y":1},"q2":{"x":0,"y":1},"flip":5}"#,
        )
        .unwrap();
        assert_eq!(flip.flip.unwrap().qubit, Qubit::Two);
        assert!(serde_json::from_str::<SystemParams<f64>>(r#"{"w1z":0.9,"w2z":1.0,"wxx":0.01}"#).is_err());
        assert!(serde_json::from_str::<VirtualZ<f64>>(r#"{"qubit":3,"angle":0,"t":0}"#).is_err());
    }

    fn arb_segment() -> impl Strategy<Value = PulseSegment<f64>> {
        (0.0..300.0f64, 1.0..100.0f64, -0.05..0.05f64, -0.05..0.05f64, -0.05..0.05f64, -0.05..0.05f64)
            .prop_map(|(s, d, a, b, c, e)| PulseSegment::new(s, d, Drive::new(a, b), Drive::new(c, e)))
    }

    proptest! {
        #[test]
        fn hamiltonian_is_hermitian(segs in prop::collection::vec(arb_segment(), 0..4), t in 0.0..400.0f64) {
            let seq = PulseSequence::from_segments(segs);
            let h = hamiltonian_at(&params(), &seq, t).matrix();
            prop_assert!(is_hermitian(&h, 1e-15));
        }

        #[test]
        fn carrier_phase_is_tied_to_the_lab_clock(offset in 0.0..50.0f64, k in 1u32..5) {
            // Shifting a qubit-1 segment by whole Larmor periods leaves the
            // coefficient trace unchanged apart from the window.
            let p = params();
            let period = 2.0 * std::f64::consts::PI / p.w1z();
            let seg = PulseSegment::single(Qubit::One, offset, 40.0, Drive::new(0.01, 0.02));
            let a = PulseSequence::from_segments(vec![seg]);
            let shift = k as f64 * period;
            let b = PulseSequence::from_segments(vec![seg.shift(shift)]);
            for j in 0..20 {
                let t = offset + 2.0 * j as f64;
                let ha = hamiltonian_at(&p, &a, t).coeffs[X1_IDX];
                let hb = hamiltonian_at(&p, &b, t + shift).coeffs[X1_IDX];
                prop_assert!((ha - hb).abs() < 1e-12);
            }
        }
    }
}
