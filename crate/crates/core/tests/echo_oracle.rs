//! Echo-amplitude checks: dense propagator oracle at small chain length,
//! structural invariants, and exponent-fit round trips.

use num_complex::Complex64 as C64;
use tempent_core::echo::{
    amplitude_curve, diffusive_exponent, AmplitudeCurve, AmplitudeSample, EchoConfig,
};
use tempent_core::oracle::dense_echo_step;
use tempent_core::tensor::{contract, DenseTensor};
use tempent_core::IsingParams;

fn mat_mul(a: &DenseTensor, b: &DenseTensor) -> DenseTensor {
    contract(a, b, &[(1, 0)]).unwrap()
}

/// Dense `ln |A(t)|^2` at every Trotter step by powering the exact one-step
/// propagators.
fn dense_log_abs2(p: &IsingParams, l: usize, steps: usize) -> Vec<f64> {
    let step_full = dense_echo_step(p, l, None);
    let step_halves = dense_echo_step(p, l, Some(l / 2 - 1));
    let dim = 1 << l;
    let mut full = DenseTensor::eye(dim);
    let mut halves = DenseTensor::eye(dim);
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        full = mat_mul(&step_full, &full);
        halves = mat_mul(&step_halves, &halves);
        // A = 2^{-l} Tr(halves^dagger full)
        let mut tr = C64::new(0.0, 0.0);
        for i in 0..dim {
            for k in 0..dim {
                tr += halves.get(&[k, i]).conj() * full.get(&[k, i]);
            }
        }
        out.push(2.0 * ((tr.norm() / dim as f64).ln()));
    }
    out
}

fn synthetic_curve(f: impl Fn(f64) -> f64, t_max: f64, dt: f64) -> AmplitudeCurve {
    let steps = (t_max / dt).round() as usize;
    AmplitudeCurve {
        config_l: 0,
        params: IsingParams::new(1.0, 0.0, 0.0, dt),
        bond_cap: 1,
        samples: (0..=steps)
            .map(|k| {
                let t = k as f64 * dt;
                AmplitudeSample {
                    t,
                    log_abs2: if k == 0 { 0.0 } else { f(t) },
                    flagged: false,
                }
            })
            .collect(),
    }
}

#[test]
fn amplitude_starts_at_one() {
    let c = EchoConfig::new(4, IsingParams::new(1.0, 0.5, 0.9, 0.1), 64, 0.5);
    let curve = amplitude_curve(&c).unwrap();
    assert_eq!(curve.samples[0].t, 0.0);
    assert_eq!(curve.samples[0].log_abs2, 0.0);
}

#[test]
fn decoupled_chain_keeps_unit_amplitude() {
    // J = 0: the halves never talk, U = U_L U_R exactly
    let c = EchoConfig::new(6, IsingParams::new(0.0, 0.7, 0.3, 0.1), 64, 2.0);
    let curve = amplitude_curve(&c).unwrap();
    for s in &curve.samples {
        assert!(s.log_abs2.abs() < 1e-10, "t {}: {}", s.t, s.log_abs2);
        assert!(!s.flagged);
    }
}

#[test]
fn amplitude_is_bounded_by_one() {
    for (h, g) in [(0.809, -0.9045), (0.5, 0.0)] {
        let c = EchoConfig::new(6, IsingParams::new(1.0, h, g, 0.05), 256, 2.0);
        let curve = amplitude_curve(&c).unwrap();
        for s in &curve.samples {
            assert!(s.log_abs2 <= 1e-10, "t {}: {}", s.t, s.log_abs2);
        }
    }
}

#[test]
fn matches_dense_propagator_oracle() {
    let p = IsingParams::new(1.0, 0.809, -0.9045, 0.05);
    let l = 8;
    let t_max = 2.5;
    let steps = (t_max / p.dt).round() as usize;
    let c = EchoConfig::new(l, p, 256, t_max);
    let curve = amplitude_curve(&c).unwrap();
    let dense = dense_log_abs2(&p, l, steps);
    for (s, want) in curve.samples.iter().skip(1).zip(&dense) {
        let dev = (s.log_abs2 - want).abs();
        assert!(dev < 1e-6, "t {}: dev {dev:.3e}", s.t);
        assert!(!s.flagged);
    }
}

#[test]
fn exponent_round_trips() {
    let diffusive = synthetic_curve(|t| -2.26 * t.powf(0.502), 12.0, 0.05);
    let (beta, _) = diffusive_exponent(&diffusive, (0.5, 12.0)).unwrap();
    assert!((beta - 0.502).abs() < 1e-6, "beta {beta}");

    let ballistic = synthetic_curve(|t| -0.9 * t, 12.0, 0.05);
    let (beta, _) = diffusive_exponent(&ballistic, (0.5, 12.0)).unwrap();
    assert!((beta - 1.0).abs() < 1e-3, "beta {beta}");
}
