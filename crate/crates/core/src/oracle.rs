//! Brute-force dense reference implementations used to validate the tensor
//! network code at small sizes.
//!
//! Everything here works with full `2^W x 2^W` matrices and deliberately
//! avoids the MPO/MPS machinery: the only shared ingredients are the
//! elementary gate definitions. A chain of `W` spins represents the kept half
//! of the system next to the cut; one Trotter step with a fixed cut-bond
//! channel `b` is
//!
//! `S[b] = A_layer * R_b * (product of intra-chain XX gates) * A_layer`
//!
//! and the influence functional over `n` steps is the Gram matrix
//!
//! `rho[b, b'] = Tr[P[b']^dagger P[b]] / 2^W`,  `P[b] = S[b_n] ... S[b_1]`,
//!
//! for channel strings `b = (b_1, ..., b_n)`. Composite string indices place
//! the earliest time step in the most significant bit.

use num_complex::Complex64 as C64;

use crate::gates::{field_rotation, single_qubit_gate, split_two_qubit_gate, IsingParams};
use crate::tensor::{contract, hermitian_eigenvalues, DenseTensor};

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Kronecker product of two square matrices, `a` acting on the more
/// significant subspace.
pub fn kron(a: &DenseTensor, b: &DenseTensor) -> DenseTensor {
    let (na, nb) = (a.shape()[0], b.shape()[0]);
    let mut out = DenseTensor::zeros(&[na * nb, na * nb]);
    for ia in 0..na {
        for ja in 0..na {
            for ib in 0..nb {
                for jb in 0..nb {
                    out.set(
                        &[ia * nb + ib, ja * nb + jb],
                        a.get(&[ia, ja]) * b.get(&[ib, jb]),
                    );
                }
            }
        }
    }
    out
}

/// Embed a single-site operator at `site` (0-based, site 0 most significant)
/// in a `w`-spin chain.
pub fn embed_single(op: &DenseTensor, site: usize, w: usize) -> DenseTensor {
    let mut out = DenseTensor::eye(1);
    for s in 0..w {
        let factor = if s == site { op.clone() } else { DenseTensor::eye(2) };
        out = kron(&out, &factor);
    }
    out
}

/// Embed a two-site operator (given as a 4x4 matrix on sites `site`,
/// `site + 1`) in a `w`-spin chain.
pub fn embed_pair(op: &DenseTensor, site: usize, w: usize) -> DenseTensor {
    let mut out = DenseTensor::eye(1);
    let mut s = 0;
    while s < w {
        if s == site {
            out = kron(&out, op);
            s += 2;
        } else {
            out = kron(&out, &DenseTensor::eye(2));
            s += 1;
        }
    }
    out
}

pub fn pauli_x() -> DenseTensor {
    DenseTensor::from_vec(&[2, 2], vec![c(0.0), c(1.0), c(1.0), c(0.0)]).unwrap()
}

pub fn pauli_z() -> DenseTensor {
    DenseTensor::from_vec(&[2, 2], vec![c(1.0), c(0.0), c(0.0), c(-1.0)]).unwrap()
}

fn mat_mul(a: &DenseTensor, b: &DenseTensor) -> DenseTensor {
    contract(a, b, &[(1, 0)]).expect("square matrices")
}

fn dagger(a: &DenseTensor) -> DenseTensor {
    a.conj().permute(&[1, 0]).expect("matrix")
}

fn trace(a: &DenseTensor) -> C64 {
    let n = a.shape()[0];
    (0..n).map(|i| a.get(&[i, i])).sum()
}

/// Dense `exp(+i theta XX)` on two qubits.
pub fn dense_xx_gate(theta: f64) -> DenseTensor {
    let mut g = DenseTensor::zeros(&[4, 4]);
    for i in 0..4usize {
        g.set(&[i, i], C64::new(theta.cos(), 0.0));
        g.set(&[i, i ^ 3], C64::new(0.0, theta.sin()));
    }
    g
}

/// One full second-order Trotter step A B A on an open chain of `w` spins,
/// as a dense `2^w x 2^w` unitary.
pub fn dense_trotter_step(p: &IsingParams, w: usize) -> DenseTensor {
    let a1 = single_qubit_gate(p);
    let mut a_layer = DenseTensor::eye(1);
    for _ in 0..w {
        a_layer = kron(&a_layer, &a1);
    }
    let mut b_layer = DenseTensor::eye(1 << w);
    let xx = dense_xx_gate(p.j * p.dt);
    for s in 0..w.saturating_sub(1) {
        b_layer = mat_mul(&embed_pair(&xx, s, w), &b_layer);
    }
    mat_mul(&a_layer, &mat_mul(&b_layer, &a_layer))
}

/// The two channel operators `R_b` of the cut bond, acting on spin 0 of the
/// kept chain.
fn cut_channels(p: &IsingParams, w: usize) -> [DenseTensor; 2] {
    let split = split_two_qubit_gate(p);
    let mut r = [DenseTensor::eye(1 << w), DenseTensor::eye(1 << w)];
    for (b, slot) in r.iter_mut().enumerate() {
        let mut m = DenseTensor::zeros(&[2, 2]);
        for i in 0..2 {
            for o in 0..2 {
                m.set(&[o, i], split.right_tensor.get(&[i, o, b]));
            }
        }
        *slot = embed_single(&m, 0, w);
    }
    r
}

/// Dense influence functional of a half-infinite chain after `n_t` Trotter
/// steps, computed on a kept chain of `w >= n_t` spins (the light cone
/// guarantees `w = n_t` is exact). Returns a Hermitian
/// `2^{n_t} x 2^{n_t}` matrix indexed by cut-channel strings with the
/// earliest step in the most significant bit.
pub fn dense_influence_matrix(p: &IsingParams, n_t: usize, w: usize) -> DenseTensor {
    assert!(n_t >= 1 && w >= n_t && w <= 12);
    let channels = cut_channels(p, w);
    // step operator with cut channel b: A * (B layer) * R_b * A; the cut
    // channel commutes with the B layer, so its position inside it is free
    let a1 = single_qubit_gate(p);
    let mut a_layer = DenseTensor::eye(1);
    for _ in 0..w {
        a_layer = kron(&a_layer, &a1);
    }
    let mut b_layer = DenseTensor::eye(1 << w);
    let xx = dense_xx_gate(p.j * p.dt);
    for s in 0..w - 1 {
        b_layer = mat_mul(&embed_pair(&xx, s, w), &b_layer);
    }
    let s_op = [
        mat_mul(&a_layer, &mat_mul(&b_layer, &mat_mul(&channels[0], &a_layer))),
        mat_mul(&a_layer, &mat_mul(&b_layer, &mat_mul(&channels[1], &a_layer))),
    ];

    // all products P[b] = S[b_n] ... S[b_1] by extending strings one step at
    // a time, earliest step applied first
    let mut products: Vec<DenseTensor> = vec![DenseTensor::eye(1 << w)];
    for _ in 0..n_t {
        let mut next = Vec::with_capacity(products.len() * 2);
        for prod in &products {
            // new step multiplies from the left; new bit is the least
            // significant (latest step), so push b=0 then b=1 keeps the
            // "earliest step most significant" ordering
            next.push(mat_mul(&s_op[0], prod));
            next.push(mat_mul(&s_op[1], prod));
        }
        products = next;
    }

    let dim = 1 << n_t;
    let norm = 1.0 / (1u64 << w) as f64;
    let mut rho = DenseTensor::zeros(&[dim, dim]);
    for (bi, pb) in products.iter().enumerate() {
        for (bj, pbp) in products.iter().enumerate() {
            let v = trace(&mat_mul(&dagger(pbp), pb)) * c(norm);
            rho.set(&[bi, bj], v);
        }
    }
    rho
}

/// Partial trace of a channel-string density matrix over the latest
/// `n_t - keep` steps, keeping the first `keep` temporal sites.
pub fn partial_trace_suffix(rho: &DenseTensor, n_t: usize, keep: usize) -> DenseTensor {
    assert!(keep >= 1 && keep <= n_t);
    let kept_dim = 1usize << keep;
    let traced = 1usize << (n_t - keep);
    let mut out = DenseTensor::zeros(&[kept_dim, kept_dim]);
    for i in 0..kept_dim {
        for j in 0..kept_dim {
            let mut acc = C64::new(0.0, 0.0);
            for s in 0..traced {
                acc += rho.get(&[i * traced + s, j * traced + s]);
            }
            out.set(&[i, j], acc);
        }
    }
    out
}

/// Partial trace keeping an arbitrary subset of temporal sites (0-based,
/// site 0 = earliest step = most significant bit).
pub fn partial_trace_keep(rho: &DenseTensor, n_t: usize, keep: &[usize]) -> DenseTensor {
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    assert!(!kept.is_empty() && *kept.last().unwrap() < n_t);
    let traced: Vec<usize> = (0..n_t).filter(|s| !kept.contains(s)).collect();
    let kd = 1usize << kept.len();
    let td = 1usize << traced.len();
    // expand a compact index over a site list into a full string
    let expand = |idx: usize, sites: &[usize]| -> usize {
        let mut full = 0usize;
        for (pos, &site) in sites.iter().enumerate() {
            let bit = (idx >> (sites.len() - 1 - pos)) & 1;
            full |= bit << (n_t - 1 - site);
        }
        full
    };
    let mut out = DenseTensor::zeros(&[kd, kd]);
    for i in 0..kd {
        for j in 0..kd {
            let (fi, fj) = (expand(i, &kept), expand(j, &kept));
            let mut acc = C64::new(0.0, 0.0);
            for s in 0..td {
                let fs = expand(s, &traced);
                acc += rho.get(&[fi | fs, fj | fs]);
            }
            out.set(&[i, j], acc);
        }
    }
    out
}

/// Tr rho^n for integer n >= 1 of a Hermitian matrix, via its spectrum.
pub fn trace_power(rho: &DenseTensor, n: u32) -> f64 {
    let evals = hermitian_eigenvalues(rho).expect("hermitian density matrix");
    evals.iter().map(|l| l.powi(n as i32)).sum()
}

/// Order-2 Renyi entropy -log(Tr rho^2 / (Tr rho)^2).
pub fn renyi2(rho: &DenseTensor) -> f64 {
    let t1 = trace(rho).re;
    -(trace_power(rho, 2) / (t1 * t1)).ln()
}

/// Second Renyi mutual information between temporal regions `a` and `b`
/// (disjoint site lists) of a channel-string density matrix.
pub fn mutual_info_renyi2(rho: &DenseTensor, n_t: usize, a: &[usize], b: &[usize]) -> f64 {
    let mut ab: Vec<usize> = a.iter().chain(b).copied().collect();
    ab.sort_unstable();
    let ra = partial_trace_keep(rho, n_t, a);
    let rb = partial_trace_keep(rho, n_t, b);
    let rab = partial_trace_keep(rho, n_t, &ab);
    renyi2(&ra) + renyi2(&rb) - renyi2(&rab)
}

/// Dense propagator of the finite simulated chain used by the echo
/// diagnostics: one second-order Trotter step of
/// `H = -J sum XX + sum (h Z + g X) + J X_1 + J X_L` on `l` spins, with the
/// sign convention that the field layer is `exp(-i dt/2 sum(h Z + g X))`
/// including the boundary `+J X` pinning terms, and the coupling layer is
/// `exp(+i dt J XX)` per bond.
pub fn dense_echo_step(p: &IsingParams, l: usize, drop_bond: Option<usize>) -> DenseTensor {
    assert!(l >= 2 && l <= 12);
    let mut a_layer = DenseTensor::eye(1);
    for s in 0..l {
        // boundary spins carry the extra +J X pinning field
        let g_eff = if s == 0 || s == l - 1 { p.g + p.j } else { p.g };
        a_layer = kron(&a_layer, &field_rotation(p.h, g_eff, 0.5 * p.dt));
    }
    let mut b_layer = DenseTensor::eye(1 << l);
    let xx = dense_xx_gate(p.j * p.dt);
    for s in 0..l - 1 {
        if drop_bond == Some(s) {
            continue;
        }
        b_layer = mat_mul(&embed_pair(&xx, s, l), &b_layer);
    }
    mat_mul(&a_layer, &mat_mul(&b_layer, &a_layer))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_of_paulis() {
        let zx = kron(&pauli_z(), &pauli_x());
        assert!((zx.get(&[0, 1]) - c(1.0)).norm() < 1e-15);
        assert!((zx.get(&[2, 3]) + c(1.0)).norm() < 1e-15);
        assert!(zx.get(&[0, 0]).norm() < 1e-15);
    }

    #[test]
    fn trotter_step_is_unitary() {
        let p = IsingParams::new(1.0, 0.5, 0.9, 0.1);
        let u = dense_trotter_step(&p, 3);
        let g = mat_mul(&dagger(&u), &u);
        for i in 0..8 {
            for j in 0..8 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g.get(&[i, j]) - c(want)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn trotter_error_scales_as_second_order() {
        // splitting error e(dt) = || U(dt) - U(dt/2)^2 || shrinks by ~8x when
        // dt is halved for a second-order scheme
        let w = 3;
        let err = |dt: f64| -> f64 {
            let p = IsingParams::new(1.0, 0.5, 0.9, dt);
            let ph = IsingParams::new(1.0, 0.5, 0.9, dt / 2.0);
            let u = dense_trotter_step(&p, w);
            let uh = dense_trotter_step(&ph, w);
            let uhh = mat_mul(&uh, &uh);
            u.as_slice()
                .iter()
                .zip(uhh.as_slice())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max)
        };
        for dt in [0.2, 0.1] {
            let ratio = err(dt) / err(dt / 2.0);
            assert!((6.0..=10.0).contains(&ratio), "ratio {ratio} at dt {dt}");
        }
    }

    #[test]
    fn one_step_influence_is_diagonal() {
        // rho_L(1) = diag(cos(J dt), sin(J dt))
        let p = IsingParams::new(1.0, 0.5, 0.9, 0.1);
        let rho = dense_influence_matrix(&p, 1, 1);
        let theta: f64 = 0.1;
        assert!((rho.get(&[0, 0]) - c(theta.cos())).norm() < 1e-12);
        assert!((rho.get(&[1, 1]) - c(theta.sin())).norm() < 1e-12);
        assert!(rho.get(&[0, 1]).norm() < 1e-12);
        assert!(rho.get(&[1, 0]).norm() < 1e-12);
    }

    #[test]
    fn influence_trace_law() {
        // Tr rho_L(n) = ((lambda1 + lambda2)/2)^n
        for n_t in 1..=4usize {
            let p = IsingParams::new(1.0, 0.7, 0.4, 0.1);
            let rho = dense_influence_matrix(&p, n_t, n_t);
            let tr: C64 = (0..1 << n_t).map(|i| rho.get(&[i, i])).sum();
            let want = (0.5 * (p.lambda1() + p.lambda2())).powi(n_t as i32);
            assert!((tr - c(want)).norm() < 1e-10, "n_t {n_t}: {tr} vs {want}");
        }
    }

    #[test]
    fn influence_is_positive_semidefinite() {
        let p = IsingParams::new(1.0, 0.5, 0.9, 0.1);
        let rho = dense_influence_matrix(&p, 3, 3);
        let evals = hermitian_eigenvalues(&rho).unwrap();
        assert!(evals.iter().all(|&l| l > -1e-12));
    }

    #[test]
    fn light_cone_makes_width_irrelevant() {
        let p = IsingParams::new(1.0, 0.5, 0.9, 0.1);
        let a = dense_influence_matrix(&p, 3, 3);
        let b = dense_influence_matrix(&p, 3, 5);
        let dev = a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-12, "light-cone deviation {dev}");
    }

    #[test]
    fn partial_trace_reduces_to_shorter_time() {
        // tracing the latest step gives ((l1 + l2)/2) * rho_L(n - 1)
        let p = IsingParams::new(1.0, 0.7, 0.4, 0.1);
        let n_t = 4;
        let rho = dense_influence_matrix(&p, n_t, n_t);
        let reduced = partial_trace_suffix(&rho, n_t, n_t - 1);
        let shorter = dense_influence_matrix(&p, n_t - 1, n_t - 1);
        let factor = 0.5 * (p.lambda1() + p.lambda2());
        for i in 0..1 << (n_t - 1) {
            for j in 0..1 << (n_t - 1) {
                let dev = (reduced.get(&[i, j]) - shorter.get(&[i, j]) * c(factor)).norm();
                assert!(dev < 1e-10);
            }
        }
    }

    #[test]
    fn partial_trace_keep_matches_suffix_form() {
        let p = IsingParams::new(1.0, 0.5, 0.9, 0.1);
        let n_t = 4;
        let rho = dense_influence_matrix(&p, n_t, n_t);
        let a = partial_trace_suffix(&rho, n_t, 2);
        let b = partial_trace_keep(&rho, n_t, &[0, 1]);
        for i in 0..4 {
            for j in 0..4 {
                assert!((a.get(&[i, j]) - b.get(&[i, j])).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn mutual_info_is_symmetric_and_nonnegative() {
        let p = IsingParams::new(1.0, 0.5, 0.9, 0.1);
        let n_t = 4;
        let rho = dense_influence_matrix(&p, n_t, n_t);
        let iab = mutual_info_renyi2(&rho, n_t, &[0], &[2, 3]);
        let iba = mutual_info_renyi2(&rho, n_t, &[2, 3], &[0]);
        assert!((iab - iba).abs() < 1e-12);
        assert!(iab > -1e-10);
    }

    #[test]
    fn echo_step_is_unitary_and_halves_commute_check() {
        let p = IsingParams::new(1.0, 0.809, -0.9045, 0.1);
        let u = dense_echo_step(&p, 4, None);
        let g = mat_mul(&dagger(&u), &u);
        for i in 0..16 {
            for j in 0..16 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g.get(&[i, j]) - c(want)).norm() < 1e-12);
            }
        }
        // dropping the middle bond factorizes the step into two halves
        let uc = dense_echo_step(&p, 4, Some(1));
        // uc should equal kron of two 2-site steps with matching boundary
        // fields: left half has pinning only on its left edge
        let mut left = DenseTensor::eye(1);
        left = kron(&left, &field_rotation(p.h, p.g + p.j, 0.05));
        left = kron(&left, &field_rotation(p.h, p.g, 0.05));
        let lb = mat_mul(&left, &mat_mul(&dense_xx_gate(p.j * p.dt), &left));
        let mut right = DenseTensor::eye(1);
        right = kron(&right, &field_rotation(p.h, p.g, 0.05));
        right = kron(&right, &field_rotation(p.h, p.g + p.j, 0.05));
        let rb = mat_mul(&right, &mat_mul(&dense_xx_gate(p.j * p.dt), &right));
        let want = kron(&lb, &rb);
        let dev = uc
            .as_slice()
            .iter()
            .zip(want.as_slice())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-12, "split-step deviation {dev}");
    }
}
