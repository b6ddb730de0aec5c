//! Dense complex tensor algebra: contraction, permutation/reshape, truncated
//! SVD and Hermitian eigendecomposition.
//!
//! Tensors are stored row-major over a positional shape list; there are no
//! index names. Every module that builds on this one documents its own leg
//! ordering convention instead.

use ndarray::{Array2, ArrayD, Axis, Ix2, IxDyn};
use ndarray_linalg::{Eigh, JobSvd, QRInto, SVDDCInto, UPLO};
use num_complex::Complex64 as C64;
use thiserror::Error;

/// Relative singular-value cutoff applied when a caller only specifies a
/// maximum rank. Strips numerical-noise directions without affecting the
/// physics at the working tolerances.
pub const DEFAULT_REL_CUTOFF: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("shape {shape:?} holds {expected} amplitudes, got {got}")]
    ShapeMismatch {
        shape: Vec<usize>,
        expected: usize,
        got: usize,
    },
    #[error("contraction pair {pair:?} joins unequal dimensions {a_dim} and {b_dim}")]
    DimMismatch {
        pair: (usize, usize),
        a_dim: usize,
        b_dim: usize,
    },
    #[error("axis {axis} out of range for rank-{rank} tensor")]
    AxisOutOfRange { axis: usize, rank: usize },
    #[error("axis {0} referenced more than once")]
    DuplicateAxis(usize),
    #[error("split must leave both index groups non-empty")]
    EmptySplit,
    #[error("max_rank must be at least 1")]
    ZeroMaxRank,
    #[error("expected a square matrix, got shape {0:?}")]
    NotSquare(Vec<usize>),
    #[error("matrix deviates from Hermiticity by {0:.3e} (tolerance {1:.1e})")]
    NotHermitian(f64, f64),
    #[error("LAPACK backend failure: {0}")]
    Backend(String),
}

/// Complex tensor with shape metadata; amplitudes are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    data: ArrayD<C64>,
}

impl DenseTensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            data: ArrayD::zeros(IxDyn(shape)),
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<C64>) -> Result<Self, TensorError> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(TensorError::ShapeMismatch {
                shape: shape.to_vec(),
                expected,
                got: data.len(),
            });
        }
        let data = ArrayD::from_shape_vec(IxDyn(shape), data).expect("length checked");
        Ok(Self { data })
    }

    pub fn scalar(value: C64) -> Self {
        Self {
            data: ArrayD::from_elem(IxDyn(&[]), value),
        }
    }

    /// n-by-n identity matrix.
    pub fn eye(n: usize) -> Self {
        let mut t = Self::zeros(&[n, n]);
        for i in 0..n {
            t.data[[i, i]] = C64::new(1.0, 0.0);
        }
        t
    }

    pub fn from_array(data: ArrayD<C64>) -> Self {
        let data = if data.is_standard_layout() {
            data
        } else {
            data.as_standard_layout().to_owned()
        };
        Self { data }
    }

    pub fn array(&self) -> &ArrayD<C64> {
        &self.data
    }

    pub fn into_array(self) -> ArrayD<C64> {
        self.data
    }

    pub fn shape(&self) -> &[usize] {
        self.data.shape()
    }

    pub fn rank(&self) -> usize {
        self.data.ndim()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, idx: &[usize]) -> C64 {
        self.data[IxDyn(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: C64) {
        self.data[IxDyn(idx)] = value;
    }

    pub fn as_slice(&self) -> &[C64] {
        self.data.as_slice().expect("standard layout")
    }

    /// Extract the single amplitude of a rank-0 or one-element tensor.
    pub fn to_scalar(&self) -> C64 {
        debug_assert_eq!(self.len(), 1);
        self.as_slice()[0]
    }

    /// Whether every amplitude has an exactly zero imaginary part.
    ///
    /// Linear-algebra primitives use this to dispatch to real BLAS/LAPACK,
    /// which runs several times faster than the complex routines. Real
    /// operations on real inputs produce bitwise-zero imaginary parts, so the
    /// fast path persists through whole contraction pipelines.
    pub fn is_real(&self) -> bool {
        self.as_slice().iter().all(|z| z.im == 0.0)
    }

    pub fn conj(&self) -> Self {
        Self {
            data: self.data.mapv(|z| z.conj()),
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            data: self.data.mapv(|z| z * factor),
        }
    }

    /// Largest amplitude magnitude.
    pub fn max_abs(&self) -> f64 {
        self.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Divide by the largest amplitude magnitude and return its natural log.
    /// A zero tensor is left untouched and reports log 1 = 0.
    pub fn normalize_max(&mut self) -> f64 {
        let m = self.max_abs();
        if m == 0.0 {
            return 0.0;
        }
        let inv = C64::new(1.0 / m, 0.0);
        self.data.mapv_inplace(|z| z * inv);
        m.ln()
    }

    /// Reorder indices; the amplitude multiset is unchanged.
    pub fn permute(&self, axes: &[usize]) -> Result<Self, TensorError> {
        check_axes(axes, self.rank())?;
        if axes.len() != self.rank() {
            return Err(TensorError::AxisOutOfRange {
                axis: axes.len(),
                rank: self.rank(),
            });
        }
        let permuted = self.data.view().permuted_axes(IxDyn(axes));
        Ok(Self {
            data: permuted.as_standard_layout().to_owned(),
        })
    }

    /// Multiply every slice along `axis` by the matching real factor.
    pub fn scale_axis(&self, axis: usize, factors: &[f64]) -> Result<Self, TensorError> {
        if axis >= self.rank() {
            return Err(TensorError::AxisOutOfRange {
                axis,
                rank: self.rank(),
            });
        }
        if factors.len() != self.shape()[axis] {
            return Err(TensorError::ShapeMismatch {
                shape: self.shape().to_vec(),
                expected: self.shape()[axis],
                got: factors.len(),
            });
        }
        let mut data = self.data.clone();
        for (mut lane, &f) in data.axis_iter_mut(Axis(axis)).zip(factors) {
            lane.mapv_inplace(|z| z * f);
        }
        Ok(Self { data })
    }

    /// Regroup indices without touching the amplitudes.
    pub fn reshape(&self, shape: &[usize]) -> Result<Self, TensorError> {
        let expected: usize = shape.iter().product();
        if expected != self.len() {
            return Err(TensorError::ShapeMismatch {
                shape: shape.to_vec(),
                expected,
                got: self.len(),
            });
        }
        let data = self
            .data
            .view()
            .into_shape(IxDyn(shape))
            .expect("standard layout and length checked")
            .to_owned();
        Ok(Self { data })
    }
}

fn check_axes(axes: &[usize], rank: usize) -> Result<(), TensorError> {
    let mut seen = vec![false; rank];
    for &ax in axes {
        if ax >= rank {
            return Err(TensorError::AxisOutOfRange { axis: ax, rank });
        }
        if seen[ax] {
            return Err(TensorError::DuplicateAxis(ax));
        }
        seen[ax] = true;
    }
    Ok(())
}

/// Flatten `t` into the matrix over `left_axes` versus the rest, returning
/// the matrix plus both dimension groups.
fn matricize(
    t: &DenseTensor,
    left_axes: &[usize],
) -> Result<(Array2<C64>, Vec<usize>, Vec<usize>), TensorError> {
    check_axes(left_axes, t.rank())?;
    if left_axes.is_empty() || left_axes.len() == t.rank() {
        return Err(TensorError::EmptySplit);
    }
    let right_axes: Vec<usize> = (0..t.rank()).filter(|i| !left_axes.contains(i)).collect();
    let left_dims: Vec<usize> = left_axes.iter().map(|&i| t.shape()[i]).collect();
    let right_dims: Vec<usize> = right_axes.iter().map(|&i| t.shape()[i]).collect();
    let m: usize = left_dims.iter().product();
    let n: usize = right_dims.iter().product();

    let mut perm = left_axes.to_vec();
    perm.extend_from_slice(&right_axes);
    let mat = t
        .permute(&perm)?
        .into_array()
        .into_shape(IxDyn(&[m, n]))
        .expect("checked")
        .into_dimensionality::<Ix2>()
        .expect("rank 2");
    Ok((mat, left_dims, right_dims))
}

fn real_part(m: &Array2<C64>) -> Array2<f64> {
    m.mapv(|z| z.re)
}

fn to_complex(m: Array2<f64>) -> Array2<C64> {
    m.mapv(|x| C64::new(x, 0.0))
}

/// Contract `a` with `b` over the given `(axis_of_a, axis_of_b)` pairs.
///
/// Remaining indices are ordered a-first then b, each group keeping its
/// original order. An empty pair list yields the tensor product.
pub fn contract(
    a: &DenseTensor,
    b: &DenseTensor,
    pairs: &[(usize, usize)],
) -> Result<DenseTensor, TensorError> {
    let a_axes: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let b_axes: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    check_axes(&a_axes, a.rank())?;
    check_axes(&b_axes, b.rank())?;
    for &(i, j) in pairs {
        let (da, db) = (a.shape()[i], b.shape()[j]);
        if da != db {
            return Err(TensorError::DimMismatch {
                pair: (i, j),
                a_dim: da,
                b_dim: db,
            });
        }
    }

    let free_a: Vec<usize> = (0..a.rank()).filter(|i| !a_axes.contains(i)).collect();
    let free_b: Vec<usize> = (0..b.rank()).filter(|j| !b_axes.contains(j)).collect();

    let mut perm_a = free_a.clone();
    perm_a.extend_from_slice(&a_axes);
    let mut perm_b = b_axes.clone();
    perm_b.extend_from_slice(&free_b);

    let m: usize = free_a.iter().map(|&i| a.shape()[i]).product();
    let k: usize = a_axes.iter().map(|&i| a.shape()[i]).product();
    let n: usize = free_b.iter().map(|&j| b.shape()[j]).product();

    let am = a
        .permute(&perm_a)?
        .into_array()
        .into_shape(IxDyn(&[m, k]))
        .expect("checked")
        .into_dimensionality::<Ix2>()
        .expect("rank 2");
    let bm = b
        .permute(&perm_b)?
        .into_array()
        .into_shape(IxDyn(&[k, n]))
        .expect("checked")
        .into_dimensionality::<Ix2>()
        .expect("rank 2");

    let prod = if a.is_real() && b.is_real() {
        to_complex(real_part(&am).dot(&real_part(&bm)))
    } else {
        am.dot(&bm)
    };

    let mut out_shape: Vec<usize> = free_a.iter().map(|&i| a.shape()[i]).collect();
    out_shape.extend(free_b.iter().map(|&j| b.shape()[j]));
    Ok(DenseTensor {
        data: prod
            .into_dyn()
            .into_shape(IxDyn(&out_shape))
            .expect("element count preserved"),
    })
}

/// Outcome of a truncated singular value decomposition across a bipartition.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// Left group indices plus a trailing bond index of the kept rank.
    pub left_isometry: DenseTensor,
    /// Kept singular values, descending.
    pub singular_values: Vec<f64>,
    /// Leading bond index plus the right group indices.
    pub right_isometry: DenseTensor,
    /// Sum of squared dropped singular values over the sum of all squares.
    pub discarded_weight: f64,
}

/// Truncated SVD of `t` split into the `left_axes` group versus the rest.
///
/// Keeps at most `max_rank` singular values and drops any value below
/// `rel_cutoff` times the largest one. Singular values come back descending
/// from LAPACK; a truncation boundary inside a degenerate cluster keeps the
/// earliest values, which makes regression output deterministic.
pub fn truncated_svd(
    t: &DenseTensor,
    left_axes: &[usize],
    max_rank: usize,
    rel_cutoff: f64,
) -> Result<SvdResult, TensorError> {
    if max_rank < 1 {
        return Err(TensorError::ZeroMaxRank);
    }
    let (mat, left_dims, right_dims) = matricize(t, left_axes)?;

    let (u_trunc, s, vt_trunc, keep, discarded_weight) = if t.is_real() {
        let (u, sv, vt) = real_part(&mat)
            .svddc_into(JobSvd::Some)
            .map_err(|e| TensorError::Backend(e.to_string()))?;
        let s: Vec<f64> = sv.to_vec();
        let (keep, dw) = select_rank(&s, max_rank, rel_cutoff);
        let u_trunc = to_complex(u.expect("requested").slice(ndarray::s![.., ..keep]).to_owned());
        let vt_trunc = to_complex(vt.expect("requested").slice(ndarray::s![..keep, ..]).to_owned());
        (u_trunc, s, vt_trunc, keep, dw)
    } else {
        let (u, sv, vt) = mat
            .svddc_into(JobSvd::Some)
            .map_err(|e| TensorError::Backend(e.to_string()))?;
        let s: Vec<f64> = sv.to_vec();
        let (keep, dw) = select_rank(&s, max_rank, rel_cutoff);
        let u_trunc = u.expect("requested").slice(ndarray::s![.., ..keep]).to_owned();
        let vt_trunc = vt.expect("requested").slice(ndarray::s![..keep, ..]).to_owned();
        (u_trunc, s, vt_trunc, keep, dw)
    };

    let mut left_shape = left_dims;
    left_shape.push(keep);
    let mut right_shape = vec![keep];
    right_shape.extend_from_slice(&right_dims);

    Ok(SvdResult {
        left_isometry: DenseTensor::from_array(u_trunc.into_dyn())
            .reshape(&left_shape)
            .expect("element count preserved"),
        singular_values: s.iter().take(keep).copied().collect(),
        right_isometry: DenseTensor::from_array(vt_trunc.into_dyn())
            .reshape(&right_shape)
            .expect("element count preserved"),
        discarded_weight,
    })
}

/// Extra sketch columns beyond the target rank in
/// [`truncated_svd_sketched`]; generous relative to typical spectral decay,
/// so the sketch error sits far below the working truncation weight.
const SKETCH_OVERSAMPLE: usize = 32;

/// Subspace (power) iterations of the range finder. Plain one-pass sketches
/// degrade badly on slowly decaying spectra (e.g. operator entanglement of
/// chaotic propagators); each iteration effectively squares the spectral
/// ratios seen by the sketch at the cost of two extra multiplies.
const SKETCH_POWER_ITERATIONS: usize = 2;

/// Truncated SVD via a randomized range finder, falling back to
/// [`truncated_svd`] when the sketch cannot pay off.
///
/// The sketch projects onto `max_rank + 32` directions drawn from a fixed
/// seed, so results are deterministic, and is sharpened with a few subspace
/// iterations so that slowly decaying spectra are captured accurately. It is
/// only taken when the matricization comfortably exceeds the sketch width.
/// The reported `discarded_weight` is measured within the sketch, which
/// understates the true tail by the (small, post-iteration) energy outside
/// it.
pub fn truncated_svd_sketched(
    t: &DenseTensor,
    left_axes: &[usize],
    max_rank: usize,
    rel_cutoff: f64,
) -> Result<SvdResult, TensorError> {
    if max_rank < 1 {
        return Err(TensorError::ZeroMaxRank);
    }
    let (mat, left_dims, right_dims) = matricize(t, left_axes)?;
    let (m, n) = (mat.shape()[0], mat.shape()[1]);
    let width = max_rank + SKETCH_OVERSAMPLE;
    if m.min(n) < 2 * width {
        return truncated_svd(t, left_axes, max_rank, rel_cutoff);
    }

    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed_cafe_f00d_0001);
    let mut gauss = move || {
        // Box-Muller from two uniforms
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen::<f64>();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };

    let (u_trunc, s, vt_trunc, keep, discarded_weight) = if t.is_real() {
        let omega = Array2::from_shape_simple_fn((n, width), &mut gauss);
        let mr = real_part(&mat);
        let y = mr.dot(&omega); // m x width
        let (mut q, _r) = y
            .qr_into()
            .map_err(|e| TensorError::Backend(e.to_string()))?;
        for _ in 0..SKETCH_POWER_ITERATIONS {
            let (qz, _r) = mr
                .t()
                .dot(&q) // n x width
                .qr_into()
                .map_err(|e| TensorError::Backend(e.to_string()))?;
            let (q2, _r) = mr
                .dot(&qz) // m x width
                .qr_into()
                .map_err(|e| TensorError::Backend(e.to_string()))?;
            q = q2;
        }
        let b = q.t().dot(&mr); // width x n
        let (ub, sv, vt) = b
            .svddc_into(JobSvd::Some)
            .map_err(|e| TensorError::Backend(e.to_string()))?;
        let s: Vec<f64> = sv.to_vec();
        let (keep, dw) = select_rank(&s, max_rank, rel_cutoff);
        let u_trunc = q.dot(&ub.expect("requested").slice(ndarray::s![.., ..keep]));
        let vt_trunc = vt.expect("requested").slice(ndarray::s![..keep, ..]).to_owned();
        (to_complex(u_trunc), s, to_complex(vt_trunc), keep, dw)
    } else {
        let omega = Array2::from_shape_simple_fn((n, width), || C64::new(gauss(), gauss()));
        let y = mat.dot(&omega); // m x width
        let (mut q, _r) = y
            .qr_into()
            .map_err(|e| TensorError::Backend(e.to_string()))?;
        for _ in 0..SKETCH_POWER_ITERATIONS {
            let (qz, _r) = mat
                .t()
                .mapv(|z| z.conj())
                .dot(&q) // n x width
                .qr_into()
                .map_err(|e| TensorError::Backend(e.to_string()))?;
            let (q2, _r) = mat
                .dot(&qz) // m x width
                .qr_into()
                .map_err(|e| TensorError::Backend(e.to_string()))?;
            q = q2;
        }
        let qh = q.t().mapv(|z| z.conj());
        let b = qh.dot(&mat); // width x n
        let (ub, sv, vt) = b
            .svddc_into(JobSvd::Some)
            .map_err(|e| TensorError::Backend(e.to_string()))?;
        let s: Vec<f64> = sv.to_vec();
        let (keep, dw) = select_rank(&s, max_rank, rel_cutoff);
        let u_trunc = q.dot(&ub.expect("requested").slice(ndarray::s![.., ..keep]));
        let vt_trunc = vt.expect("requested").slice(ndarray::s![..keep, ..]).to_owned();
        (u_trunc, s, vt_trunc, keep, dw)
    };

    let mut left_shape = left_dims;
    left_shape.push(keep);
    let mut right_shape = vec![keep];
    right_shape.extend_from_slice(&right_dims);
    Ok(SvdResult {
        left_isometry: DenseTensor::from_array(u_trunc.into_dyn())
            .reshape(&left_shape)
            .expect("element count preserved"),
        singular_values: s.iter().take(keep).copied().collect(),
        right_isometry: DenseTensor::from_array(vt_trunc.into_dyn())
            .reshape(&right_shape)
            .expect("element count preserved"),
        discarded_weight,
    })
}

/// How many leading singular values to keep and the relative squared weight
/// of the dropped tail.
fn select_rank(s: &[f64], max_rank: usize, rel_cutoff: f64) -> (usize, f64) {
    let total_sq: f64 = s.iter().map(|x| x * x).sum();
    let s_max = s.first().copied().unwrap_or(0.0);
    let mut keep = s
        .iter()
        .take(max_rank)
        .take_while(|&&x| x >= rel_cutoff * s_max && x > 0.0)
        .count();
    keep = keep.max(1).min(s.len());

    let kept_sq: f64 = s.iter().take(keep).map(|x| x * x).sum();
    let discarded_weight = if total_sq > 0.0 {
        ((total_sq - kept_sq) / total_sq).max(0.0)
    } else {
        0.0
    };
    (keep, discarded_weight)
}

/// RQ-style factorization across a bipartition: `t = carry · q` with `q`
/// row-orthonormal (`q q† = 1`).
///
/// Returns `(carry, q)` with shapes `left_dims + [k]` and `[k] + right_dims`,
/// `k = min(prod(left_dims), prod(right_dims))`. This is the cheap
/// orthogonalization primitive for canonicalization sweeps where no
/// truncation is wanted.
pub fn rq_decompose(
    t: &DenseTensor,
    left_axes: &[usize],
) -> Result<(DenseTensor, DenseTensor), TensorError> {
    let (mat, left_dims, right_dims) = matricize(t, left_axes)?;

    // QR of the conjugate transpose: M† = Q R  =>  M = R† Q†
    let (carry, qd) = if t.is_real() {
        let mt = real_part(&mat).reversed_axes().as_standard_layout().to_owned();
        let (q, r) = mt
            .qr_into()
            .map_err(|e| TensorError::Backend(e.to_string()))?;
        (to_complex(r.t().to_owned()), to_complex(q.t().to_owned()))
    } else {
        let mt = mat.t().mapv(|z| z.conj());
        let (q, r) = mt
            .qr_into()
            .map_err(|e| TensorError::Backend(e.to_string()))?;
        (r.t().mapv(|z| z.conj()), q.t().mapv(|z| z.conj()))
    }; // carry [m, k], qd [k, n]

    let k = carry.shape()[1];
    let mut carry_shape = left_dims;
    carry_shape.push(k);
    let mut q_shape = vec![k];
    q_shape.extend_from_slice(&right_dims);
    Ok((
        DenseTensor::from_array(carry.into_dyn()).reshape(&carry_shape)?,
        DenseTensor::from_array(qd.into_dyn()).reshape(&q_shape)?,
    ))
}

/// Eigenvalues of a Hermitian matrix, descending.
pub fn hermitian_eigenvalues(m: &DenseTensor) -> Result<Vec<f64>, TensorError> {
    const HERM_TOL: f64 = 1e-10;
    if m.rank() != 2 || m.shape()[0] != m.shape()[1] {
        return Err(TensorError::NotSquare(m.shape().to_vec()));
    }
    let n = m.shape()[0];
    let arr = m
        .array()
        .view()
        .into_dimensionality::<Ix2>()
        .expect("rank 2");
    let scale = m.max_abs().max(1.0);
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in 0..=i {
            dev = dev.max((arr[[i, j]] - arr[[j, i]].conj()).norm());
        }
    }
    if dev > HERM_TOL * scale {
        return Err(TensorError::NotHermitian(dev, HERM_TOL * scale));
    }
    let (vals, _) = arr
        .to_owned()
        .eigh(UPLO::Lower)
        .map_err(|e| TensorError::Backend(e.to_string()))?;
    let mut vals: Vec<f64> = vals.to_vec();
    vals.reverse();
    Ok(vals)
}
