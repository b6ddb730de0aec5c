//! Structural checks of the toy spectral models: normalization, closed-form
//! agreement, extremum sequences, asymptotics, and the pure-state identity
//! tying the relative scalings to the forward-backward entropies.

use tempent_core::toy::{
    delta_nm_single_closed_form, delta_nm_triple_asymptote, forward_backward_asymptote_double,
    scan_extrema, ExtremumKind, SpectrumModel, ToyError,
};

/// Scan grid in steps of 0.05 starting at T = 1: below that the default
/// bulk count saturates its floor and Delta picks up clamp artifacts.
fn scan_grid(steps: usize) -> Vec<f64> {
    (0..steps).map(|k| 1.0 + 0.05 * k as f64).collect()
}

fn fig_double() -> SpectrumModel {
    SpectrumModel::double(1.5, 0.6, 1.25, 0.4, 0.1).unwrap()
}

fn fig_triple() -> SpectrumModel {
    SpectrumModel::triple(1.5, 0.6, 1.25, 0.4, 0.1, 0.3).unwrap()
}

#[test]
fn spectrum_is_normalized_and_nonnegative() {
    let models = [
        SpectrumModel::single(1.5, 0.5).unwrap(),
        fig_double(),
        fig_triple(),
    ];
    for m in models {
        for k in 0..=60 {
            let t = 0.5 * k as f64;
            let spec = m.spectrum(t).unwrap();
            let total: f64 = spec.iter().map(|&(l, mult)| l * mult).sum();
            assert!((total - 1.0).abs() < 1e-12, "T {t}: sum {total}");
            assert!(spec.iter().all(|&(l, _)| l >= 0.0));
        }
    }
}

#[test]
fn single_variant_trivial_points() {
    let m = SpectrumModel::single(1.5, 0.5).unwrap();
    let spec = m.spectrum(0.0).unwrap();
    assert_eq!(spec[0], (1.0, 1.0));
    assert_eq!(spec[1].0, 0.0);

    // symmetric double parameters give a degenerate pair
    let sym = SpectrumModel::double(1.5, 0.6, 1.5, 0.6, 0.5).unwrap();
    for k in 0..=20 {
        let t = k as f64;
        let d = sym.distinguished(t);
        assert!((d[0] - d[1]).abs() < 1e-15);
    }
}

#[test]
fn rejects_bad_parameters() {
    assert!(matches!(
        SpectrumModel::single(1.5, 1.2),
        Err(ToyError::BadParameter(_))
    ));
    assert!(matches!(
        SpectrumModel::single(-0.1, 0.5),
        Err(ToyError::BadParameter(_))
    ));
    assert!(matches!(
        SpectrumModel::double(1.5, 0.6, 1.25, 0.4, 1.3),
        Err(ToyError::BadParameter(_))
    ));
    // a bulk that shrinks below zero at small T is reported, not silently used
    let m = SpectrumModel::single(1.5, 0.5)
        .unwrap()
        .with_bulk_count(|t| t - 5.0);
    assert!(matches!(
        m.spectrum(1.0),
        Err(ToyError::BadParameter(_)) | Err(ToyError::NegativeEigenvalue { .. })
    ));
}

#[test]
fn closed_form_matches_moment_sums() {
    let m = SpectrumModel::single(1.5, 0.5).unwrap();
    for k in 1..=60 {
        let t = 0.5 * k as f64;
        for (n, mm) in [(3u32, 2u32), (4, 2), (6, 4), (6, 3)] {
            let a = m.delta_nm(t, n, mm).unwrap();
            let b = delta_nm_single_closed_form(&m, t, n, mm);
            assert!((a - b).abs() < 1e-10, "T {t} ({n},{mm}): {a} vs {b}");
        }
    }
}

#[test]
fn delta_respects_flat_spectrum_bounds() {
    for m in [SpectrumModel::single(1.5, 0.5).unwrap(), fig_double(), fig_triple()] {
        for k in 1..=40 {
            let t = 0.5 * k as f64;
            let rank: f64 = m.spectrum(t).unwrap().iter().map(|&(_, mult)| mult).sum();
            for (n, mm) in [(4u32, 2u32), (6, 4)] {
                let d = m.delta_nm(t, n, mm).unwrap();
                let upper = (n as f64 / mm as f64 - 1.0) * rank.ln();
                assert!(d >= -1e-10, "T {t}: {d}");
                assert!(d <= upper + 1e-10, "T {t}: {d} > {upper}");
            }
        }
    }
}

#[test]
fn flat_limit_approaches_upper_bound() {
    // a huge gamma kills lambda_1 instantly; the spectrum is essentially flat
    let mut m = SpectrumModel::single(1.0, 0.5).unwrap();
    m.gamma1 = 400.0;
    let t = 3.0;
    let n_bulk = (m.bulk_count)(t);
    let d = m.delta_nm(t, 4, 2).unwrap();
    let want = (4.0 / 2.0 - 1.0) * n_bulk.ln();
    assert!((d - want).abs() / want < 1e-6, "{d} vs {want}");
}

#[test]
fn forward_backward_identity_and_rank_one() {
    let m = fig_double();
    for k in 1..=30 {
        let t = 0.7 * k as f64;
        for n in 2..=5u32 {
            let s = m.forward_backward_renyi(t, n as f64).unwrap();
            let d = m.delta_nm(t, 2 * n, 2).unwrap();
            let dev = (d - (n as f64 - 1.0) * s).abs();
            assert!(dev < 1e-10, "T {t} n {n}: dev {dev:.3e}");
        }
    }
    // n = 2 coincides with Delta_{4,2} itself
    let s2 = m.forward_backward_renyi(4.0, 2.0).unwrap();
    let d42 = m.delta_nm(4.0, 4, 2).unwrap();
    assert!((s2 - d42).abs() < 1e-12);
}

#[test]
fn single_variant_has_one_maximum() {
    let m = SpectrumModel::single(1.5, 0.5).unwrap();
    let grid = scan_grid(600);
    let ext = scan_extrema(&m, 6, 4, &grid).unwrap();
    assert_eq!(ext.len(), 1, "{ext:?}");
    assert_eq!(ext[0].kind, ExtremumKind::Maximum);
}

#[test]
fn double_variant_max_min_max() {
    let m = fig_double();
    let grid = scan_grid(2000);
    let ext = scan_extrema(&m, 6, 4, &grid).unwrap();
    let kinds: Vec<ExtremumKind> = ext.iter().map(|e| e.kind).collect();
    assert_eq!(
        kinds,
        vec![
            ExtremumKind::Maximum,
            ExtremumKind::Minimum,
            ExtremumKind::Maximum
        ],
        "{ext:?}"
    );
}

#[test]
fn inset_parameters_give_single_maximum() {
    // equal decay laws for both eigenvalues: the two-hump structure collapses
    let m = SpectrumModel::double(1.5, 0.6, 1.5, 0.6, 0.4).unwrap();
    let grid = scan_grid(2000);
    let ext = scan_extrema(&m, 6, 4, &grid).unwrap();
    assert_eq!(ext.len(), 1, "{ext:?}");
    assert_eq!(ext[0].kind, ExtremumKind::Maximum);
}

#[test]
fn maximum_moves_earlier_with_m() {
    let m = fig_double();
    let grid = scan_grid(2000);
    let mut last_peak = f64::INFINITY;
    for mm in [2u32, 3, 4] {
        let ext = scan_extrema(&m, 6, mm, &grid).unwrap();
        let first_max = ext
            .iter()
            .find(|e| e.kind == ExtremumKind::Maximum)
            .expect("a maximum");
        assert!(
            first_max.time <= last_peak + 1e-12,
            "m {mm}: peak {} after {}",
            first_max.time,
            last_peak
        );
        last_peak = first_max.time;
    }
}

#[test]
fn constant_spectrum_has_no_extrema() {
    // near-frozen eigenvalues over a constant bulk: Delta is flat in T
    let mut m = SpectrumModel::single(1.0, 0.5).unwrap();
    m.gamma1 = 1e-14;
    let m = m.with_bulk_count(|_| 1022.0);
    let grid: Vec<f64> = (1..=100).map(|k| 0.2 * k as f64).collect();
    let ext = scan_extrema(&m, 6, 4, &grid).unwrap();
    assert!(ext.is_empty(), "{ext:?}");
}

#[test]
fn triple_variant_reaches_pair_asymptote() {
    let m = fig_triple();
    let want = delta_nm_triple_asymptote(0.3, 6, 4);
    let got = m.delta_nm(300.0, 6, 4).unwrap();
    assert!(
        (got - want).abs() / want.abs() < 0.01,
        "{got} vs asymptote {want}"
    );
}

#[test]
fn forward_backward_asymptotic_regimes() {
    let m = fig_double();
    // n > 1/2: decays toward zero; n < 1/2: keeps growing linearly in T
    let s_early = m.forward_backward_renyi(40.0, 0.75).unwrap();
    let s_late = m.forward_backward_renyi(400.0, 0.75).unwrap();
    assert!(s_late < s_early);
    assert!(s_late < 0.05, "n > 1/2 should decay, got {s_late}");

    let g_mid = m.forward_backward_renyi(200.0, 0.3).unwrap();
    let g_late = m.forward_backward_renyi(400.0, 0.3).unwrap();
    let slope = (g_late - g_mid) / 200.0;
    // linear growth at rate set by the bulk dimension growth
    assert!(slope > 0.5, "n < 1/2 should grow linearly, slope {slope}");

    // closed-form late-time limit for n < 1
    for n in [0.3, 0.75] {
        let t = 400.0;
        let direct = m.forward_backward_renyi(t, n).unwrap();
        let asym = forward_backward_asymptote_double(&m, t, n);
        let dev = (direct - asym).abs() / direct.abs().max(1e-12);
        assert!(dev < 0.05, "n {n}: {direct} vs {asym}");
    }
}
