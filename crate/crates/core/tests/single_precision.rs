use flicforq::analysis::{basis_ket, concurrence, gate_fidelity};
use flicforq::compiler::compile_d;
use flicforq::integrator::{apply_logical, logical_propagator, StepPolicy};
use flicforq::{PulseSequenceF32, RotationWord, SystemParamsF32};

#[test]
fn d_pulse_entangles_in_f32() {
    let p = SystemParamsF32::standard();
    let seq: PulseSequenceF32 = compile_d(&p, 0.0).unwrap();
    let rho = apply_logical(&p, &seq, &basis_ket(0), StepPolicy::default());
    let c: f32 = concurrence(&rho).unwrap();
    assert!(c > 0.95, "concurrence {c}");
}

#[test]
fn f32_and_f64_agree_on_xx_half() {
    let word: RotationWord = "X1X2^1/2".parse().unwrap();
    let p32 = SystemParamsF32::standard();
    let p64 = flicforq::SystemParams64::standard();
    let s32 = flicforq::compiler::compile_xx_half(&p32, 0.0).unwrap();
    let s64 = flicforq::compiler::compile_xx_half(&p64, 0.0).unwrap();
    let f32_ = gate_fidelity(&logical_propagator(&p32, &s32, StepPolicy::default()), &word, true).unwrap();
    let f64_ = gate_fidelity(&logical_propagator(&p64, &s64, StepPolicy::default()), &word, true).unwrap();
    assert!((f32_.process - f64_.process).abs() < 1e-3, "{} vs {}", f32_.process, f64_.process);
}
