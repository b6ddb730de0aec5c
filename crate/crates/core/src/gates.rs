//! Trotterized Ising evolution gates and the one-step MPO row tensors,
//! together with their folded (forward tensor backward-conjugate) variants.
//!
//! Leg ordering used throughout this module:
//! * gate matrices: `[p_out, p_in]`
//! * split-gate 3-leg tensors: `[p_in, p_out, bond]`
//! * bulk row tensor: `[p_in, p_out, bond_left, bond_right]`
//! * edge row tensor: `[p_in, p_out, bond]`
//!
//! Folded legs pair the forward index first and the backward (conjugated)
//! index second: `folded = 2 * forward + backward`, so folded physical and
//! bond legs have dimension 4.
//!
//! Sign convention: the single-qubit half-layer is `exp(-i dt/2 (h Z + g X))`
//! and the two-qubit entangler is `exp(+i dt J X X)`, i.e. the coupling term
//! of the Hamiltonian enters with a minus sign.

use num_complex::Complex64 as C64;

use crate::tensor::{contract, DenseTensor};

/// Parameters of the transverse+longitudinal-field Ising chain and the
/// Trotter step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsingParams {
    /// Nearest-neighbour coupling J.
    pub j: f64,
    /// Transverse field h.
    pub h: f64,
    /// Longitudinal field g.
    pub g: f64,
    /// Trotter step.
    pub dt: f64,
}

impl IsingParams {
    pub fn new(j: f64, h: f64, g: f64, dt: f64) -> Self {
        assert!(dt > 0.0, "Trotter step must be positive");
        assert!(j.is_finite() && h.is_finite() && g.is_finite());
        Self { j, h, g, dt }
    }

    /// First singular value of the split two-qubit gate, 2 cos(J dt).
    pub fn lambda1(&self) -> f64 {
        2.0 * (self.j * self.dt).cos()
    }

    /// Second singular value of the split two-qubit gate, 2 sin(J dt).
    pub fn lambda2(&self) -> f64 {
        2.0 * (self.j * self.dt).sin()
    }

    /// Exact growth rate of log Tr of the influence functional per unit time,
    /// log((lambda1 + lambda2) / 2) / dt.
    pub fn trace_rate(&self) -> f64 {
        (0.5 * (self.lambda1() + self.lambda2())).ln() / self.dt
    }
}

/// Symmetric SVD split of the two-qubit entangler across the bond.
#[derive(Debug, Clone)]
pub struct GateSplit {
    /// 3-leg tensor on the left qubit, legs `[p_in, p_out, bond]`.
    pub left_tensor: DenseTensor,
    /// 3-leg tensor on the right qubit, legs `[p_in, p_out, bond]`.
    pub right_tensor: DenseTensor,
    pub lambda1: f64,
    pub lambda2: f64,
}

/// Row tensors of one second-order Trotter step, unfolded and folded.
#[derive(Debug, Clone)]
pub struct StepMpo {
    /// `[p_in, p_out, bond_left, bond_right]`, bonds of dimension 2.
    pub bulk_tensor: DenseTensor,
    /// `[p_in, p_out, bond]`; chain-end tensor carrying a single split bond.
    pub edge_tensor: DenseTensor,
    /// `[p_in(4), p_out(4), bond_left(4), bond_right(4)]`.
    pub folded_bulk: DenseTensor,
    /// `[p_in(4), p_out(4), bond(4)]`.
    pub folded_edge: DenseTensor,
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `exp(-i angle (h Z + g X))` as a `[p_out, p_in]` matrix.
pub fn field_rotation(h: f64, g: f64, angle: f64) -> DenseTensor {
    let omega = (h * h + g * g).sqrt();
    if omega == 0.0 {
        return DenseTensor::eye(2);
    }
    let (cos_p, sin_p) = ((omega * angle).cos(), (omega * angle).sin());
    let (nz, nx) = (h / omega, g / omega);
    // cos(phi) I - i sin(phi) (nz Z + nx X)
    DenseTensor::from_vec(
        &[2, 2],
        vec![
            c(cos_p, -sin_p * nz),
            c(0.0, -sin_p * nx),
            c(0.0, -sin_p * nx),
            c(cos_p, sin_p * nz),
        ],
    )
    .expect("2x2")
}

/// Single-qubit half-layer `exp(-i dt/2 (h Z + g X))`, a `[p_out, p_in]`
/// unitary.
pub fn single_qubit_gate(p: &IsingParams) -> DenseTensor {
    field_rotation(p.h, p.g, 0.5 * p.dt)
}

/// Split `exp(+i dt J XX)` symmetrically across the bond.
///
/// Channel 0 carries `sqrt(cos) * I`, channel 1 `sqrt(i sin) * X` on each
/// side, so contracting the two tensors over the bond rebuilds the gate and
/// the associated singular values are `2 cos(J dt)` and `2 sin(J dt)`.
pub fn split_two_qubit_gate(p: &IsingParams) -> GateSplit {
    let theta = p.j * p.dt;
    let s0 = c(theta.cos(), 0.0).sqrt();
    let s1 = c(0.0, theta.sin()).sqrt();
    // legs [p_in, p_out, bond]: channel 0 is s0 * identity, channel 1 s1 * X
    let mut t = DenseTensor::zeros(&[2, 2, 2]);
    t.set(&[0, 0, 0], s0);
    t.set(&[1, 1, 0], s0);
    t.set(&[0, 1, 1], s1);
    t.set(&[1, 0, 1], s1);
    GateSplit {
        left_tensor: t.clone(),
        right_tensor: t,
        lambda1: p.lambda1(),
        lambda2: p.lambda2(),
    }
}

/// Fold a tensor whose legs are all operator legs: outer product with the
/// conjugate copy, pairing forward first and backward second on every leg.
pub fn fold(t: &DenseTensor) -> DenseTensor {
    let rank = t.rank();
    let outer = contract(t, &t.conj(), &[]).expect("tensor product");
    // interleave forward leg k with backward leg rank + k
    let perm: Vec<usize> = (0..rank).flat_map(|k| [k, rank + k]).collect();
    let interleaved = outer.permute(&perm).expect("valid permutation");
    let folded_shape: Vec<usize> = t.shape().iter().map(|d| d * d).collect();
    interleaved.reshape(&folded_shape).expect("squared dims")
}

/// Vectorized identity on a folded leg: `delta(forward, backward)`.
pub fn identity_cap(dim: usize) -> DenseTensor {
    let mut cap = DenseTensor::zeros(&[dim * dim]);
    for k in 0..dim {
        cap.set(&[k * dim + k], c(1.0, 0.0));
    }
    cap
}

/// Build the row tensors of one Trotter step A B A, plus their folded forms.
pub fn build_step_mpo(p: &IsingParams) -> StepMpo {
    let a = single_qubit_gate(p);
    let split = split_two_qubit_gate(p);

    // site operator for given bonds: A * R_bl * L_br * A, assembled as a
    // [p_in, p_out, bl, br] tensor
    let bulk = assemble_bulk(&a, &split);
    let edge = assemble_edge(&a, &split);

    StepMpo {
        folded_bulk: fold(&bulk),
        folded_edge: fold(&edge),
        bulk_tensor: bulk,
        edge_tensor: edge,
    }
}

fn mat_mul(a: &DenseTensor, b: &DenseTensor) -> DenseTensor {
    // [o,m] x [m,i] -> [o,i]
    contract(a, b, &[(1, 0)]).expect("square matrices")
}

/// Matrix `[o, i]` of split channel `b`, from a `[p_in, p_out, bond]` tensor.
fn channel(split_tensor: &DenseTensor, b: usize) -> DenseTensor {
    let mut m = DenseTensor::zeros(&[2, 2]);
    for i in 0..2 {
        for o in 0..2 {
            m.set(&[o, i], split_tensor.get(&[i, o, b]));
        }
    }
    m
}

fn assemble_bulk(a: &DenseTensor, split: &GateSplit) -> DenseTensor {
    let mut bulk = DenseTensor::zeros(&[2, 2, 2, 2]);
    for bl in 0..2 {
        for br in 0..2 {
            let m = mat_mul(&mat_mul(a, &channel(&split.right_tensor, bl)), &mat_mul(&channel(&split.left_tensor, br), a));
            for i in 0..2 {
                for o in 0..2 {
                    bulk.set(&[i, o, bl, br], m.get(&[o, i]));
                }
            }
        }
    }
    bulk
}

fn assemble_edge(a: &DenseTensor, split: &GateSplit) -> DenseTensor {
    let mut edge = DenseTensor::zeros(&[2, 2, 2]);
    for b in 0..2 {
        let m = mat_mul(a, &mat_mul(&channel(&split.left_tensor, b), a));
        for i in 0..2 {
            for o in 0..2 {
                edge.set(&[i, o, b], m.get(&[o, i]));
            }
        }
    }
    edge
}
