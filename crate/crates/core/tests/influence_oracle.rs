//! Cross-validation of the transverse-contraction influence MPS against the
//! brute-force dense reference at small step counts, plus structural checks
//! (reductions, refolding, checkpointing) at sizes where everything is exact.

use num_complex::Complex64 as C64;
use tempent_core::influence::{contract_influence, contract_influence_mirrored, TemporalMPS};
use tempent_core::oracle::{dense_influence_matrix, partial_trace_suffix};
use tempent_core::tensor::{hermitian_eigenvalues, DenseTensor};
use tempent_core::IsingParams;

const UNTRUNCATED: usize = 4096;

fn build(p: IsingParams, n_t: usize) -> TemporalMPS {
    contract_influence(p, n_t, UNTRUNCATED, 1e-3).expect("contraction")
}

fn max_dev(a: &DenseTensor, b: &DenseTensor) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn renyi2(l: &TemporalMPS) -> f64 {
    -(l.norm_sq_log() - 2.0 * l.trace_log())
}

#[test]
fn one_step_trace() {
    let p = IsingParams::new(1.0, 0.37, 1.21, 0.1);
    let l = build(p, 1);
    let want = (0.5 * (p.lambda1() + p.lambda2())).ln();
    assert!((l.trace_log() - want).abs() < 1e-12);
}

#[test]
fn trace_law_untruncated() {
    let p = IsingParams::new(1.0, 0.5, 0.9, 0.1);
    let step = (0.5 * (p.lambda1() + p.lambda2())).ln();
    for n_t in 1..=6 {
        let l = build(p, n_t);
        let dev = (l.trace_log() - n_t as f64 * step).abs();
        assert!(dev < 1e-10, "n_t {n_t}: trace log off by {dev:.3e}");
        assert!(l.trace_drift < 1e-12);
    }
}

#[test]
fn symmetric_coupling_point_trace_rate() {
    // J dt = pi/4 makes both singular values sqrt(2)
    let p = IsingParams::new(std::f64::consts::FRAC_PI_4 / 0.1, 0.3, 0.2, 0.1);
    assert!((p.lambda1() - p.lambda2()).abs() < 1e-12);
    let l = build(p, 3);
    let want = 3.0 * std::f64::consts::SQRT_2.ln();
    assert!((l.trace_log() - want).abs() < 1e-10);
}

#[test]
fn matches_dense_oracle_across_parameters() {
    let points = [
        (1.0, 0.5, 0.9),
        (1.0, 0.809, -0.9045),
        (1.0, 0.0, 0.7),
        (1.0, 1.3, 0.0),
        (0.7, 0.4, 0.25),
    ];
    for &(j, h, g) in &points {
        let p = IsingParams::new(j, h, g, 0.1);
        for n_t in 1..=5 {
            let l = build(p, n_t);
            let got = l.densify_matrix();
            let want = dense_influence_matrix(&p, n_t, n_t);
            let dev = max_dev(&got, &want);
            assert!(dev < 1e-10, "({j},{h},{g}) n_t {n_t}: dev {dev:.3e}");
        }
    }
}

#[test]
fn mirrored_contraction_agrees() {
    let p = IsingParams::new(1.0, 0.5, 0.9, 0.1);
    for n_t in 1..=5 {
        let l = build(p, n_t);
        let r = contract_influence_mirrored(p, n_t, UNTRUNCATED, 1e-3, true).unwrap();
        assert!((renyi2(&l) - renyi2(&r)).abs() < 1e-10);
    }
}

#[test]
fn extra_columns_do_not_change_result() {
    // the influence MPS is a fixed point of uniform column absorption
    let p = IsingParams::new(1.0, 0.5, 0.9, 0.1);
    for n_t in 1..=5 {
        let l = build(p, n_t);
        let s2 = renyi2(&l);
        let mut wider = l.clone();
        for k in 1..=2 {
            wider.absorb_uniform_column().unwrap();
            let dev = (renyi2(&wider) - s2).abs();
            assert!(dev < 1e-12, "n_t {n_t}, +{k} columns: dev {dev:.3e}");
        }
        let dev = max_dev(&wider.densify_matrix(), &l.densify_matrix());
        assert!(dev < 1e-10, "n_t {n_t}: amplitude dev {dev:.3e}");
    }
}

#[test]
fn reduced_trace_prefix_matches_earlier_time() {
    let p = IsingParams::new(1.0, 0.5, 0.9, 0.1);
    let n_t = 6;
    let l = build(p, n_t);
    for n_keep in 1..=n_t {
        let red = l.reduced_trace_prefix(n_keep);
        assert_eq!(red.sites.len(), n_keep);
        let short = build(p, n_keep);
        // reduction leaves the factor ((l1+l2)/2)^(n_t-n_keep) in log_norm
        let scale = (0.5 * (p.lambda1() + p.lambda2())).powi((n_t - n_keep) as i32);
        let rescaled = short.densify_matrix().scale(C64::new(scale, 0.0));
        let dev = max_dev(&red.densify_matrix(), &rescaled);
        assert!(dev / scale < 1e-8, "n_keep {n_keep}: dev {dev:.3e}");
        // and the dense partial trace agrees directly
        let dense = dense_influence_matrix(&p, n_t, n_t);
        let want = partial_trace_suffix(&dense, n_t, n_keep);
        let got = red.densify_matrix();
        assert!(max_dev(&got, &want) < 1e-8);
        // entropies coincide with the earlier-time functional
        assert!((renyi2(&red) - renyi2(&short)).abs() < 1e-8);
    }
    // degenerate reductions
    let full = l.reduced_trace_prefix(n_t);
    assert!(max_dev(&full.densify_matrix(), &l.densify_matrix()) < 1e-12);
    let none = l.reduced_trace_prefix(0);
    assert!(none.sites.is_empty());
    assert!((none.log_norm - l.trace_log()).abs() < 1e-10);
}

#[test]
fn unfolded_form_is_positive_and_refolds() {
    let p = IsingParams::new(1.0, 0.5, 0.0, 0.1); // integrable point
    for n_t in [1usize, 4] {
        let l = build(p, n_t);
        let mpo = l.to_mpo();
        for s in &mpo.sites {
            assert_eq!(s.rank(), 4);
        }
        let back = mpo.fold(p, l.bond_cap);
        for (a, b) in l.sites.iter().zip(&back.sites) {
            assert_eq!(a.shape(), b.shape());
            assert!(max_dev(a, b) < 1e-12, "refold must invert the unfold");
        }
        let dense = l.densify_matrix();
        let evals = hermitian_eigenvalues(&dense).expect("hermitian");
        assert!(evals.iter().all(|&e| e >= -1e-10), "PSD violated: {evals:?}");
        if n_t == 1 {
            let tr: C64 = dense.get(&[0, 0]) + dense.get(&[1, 1]);
            assert!((tr.re - 0.5 * (p.lambda1() + p.lambda2())).abs() < 1e-12);
        }
    }
}

#[test]
fn truncated_run_keeps_trace_drift_small() {
    let p = IsingParams::new(1.0, 0.5, 0.9, 0.1);
    let l = contract_influence(p, 40, 64, 1e-3).unwrap();
    assert!(l.converged(1e-3), "trace drift {:.3e}", l.trace_drift);
    assert!(l.sites.iter().all(|s| s.shape()[0] <= 64 && s.shape()[2] <= 64));
}

#[test]
fn discarded_weight_shrinks_with_bond_cap() {
    let p = IsingParams::new(1.0, 0.5, 0.9, 0.1);
    let mut last = f64::INFINITY;
    for cap in [8, 16, 32] {
        let l = contract_influence(p, 12, cap, 1e-3).unwrap();
        assert!(
            l.max_discarded_weight <= last + 1e-15,
            "cap {cap}: {:.3e} vs {:.3e}",
            l.max_discarded_weight,
            last
        );
        last = l.max_discarded_weight;
    }
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let dir = std::env::temp_dir().join("tempent-checkpoint-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("state.bin");
    let p = IsingParams::new(1.0, 0.5, 0.9, 0.1);
    let l = contract_influence(p, 8, 16, 1e-3).unwrap();
    l.write_checkpoint(&path).unwrap();
    let back = TemporalMPS::read_checkpoint(&path).unwrap();
    assert_eq!(l.sites.len(), back.sites.len());
    assert_eq!(l.log_norm.to_bits(), back.log_norm.to_bits());
    assert_eq!(l.trace_drift.to_bits(), back.trace_drift.to_bits());
    assert_eq!(l.bond_cap, back.bond_cap);
    for (a, b) in l.sites.iter().zip(&back.sites) {
        assert_eq!(a.shape(), b.shape());
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert_eq!(x.re.to_bits(), y.re.to_bits());
            assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
    }
    // a resumed object extends identically to a freshly built longer one
    let mut resumed = back;
    resumed.extend().unwrap();
    let fresh = contract_influence(p, 9, 16, 1e-3).unwrap();
    assert!((renyi2(&resumed) - renyi2(&fresh)).abs() < 1e-12);

    // corruption must be detected
    let mut bytes = std::fs::read(&path).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x01;
    let bad = dir.join("corrupt.bin");
    std::fs::write(&bad, &bytes).unwrap();
    assert!(TemporalMPS::read_checkpoint(&bad).is_err());
}
