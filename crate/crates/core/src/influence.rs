//! Transverse contraction of the half-infinite spatio-temporal network into
//! the temporal MPS representing the vectorized influence functional.
//!
//! The network is contracted column by column from the far end of the kept
//! half-chain toward the cut. The strict brickwork light cone makes the
//! absorbed region a staircase: the column absorbed at step `j` spans Trotter
//! rows `1..=j`, with folded bulk tensors below and a folded edge tensor
//! (future-trace capped) on top. Extending the result from time `T` to
//! `T + dt` therefore costs exactly one more temporal site and one more
//! column, which is what makes full `T`-sweeps affordable.
//!
//! Site tensors carry legs `[bond_left, phys(4), bond_right]`; site 0 is the
//! earliest Trotter step. All magnitudes are tracked in the log domain via
//! `log_norm`.

use std::io::{Read as _, Write as _};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64 as C64;
use sha2::{Digest, Sha256};

use crate::gates::{build_step_mpo, identity_cap, IsingParams};
use crate::tensor::{
    contract, rq_decompose, truncated_svd, truncated_svd_sketched, DenseTensor, TensorError,
    DEFAULT_REL_CUTOFF,
};

/// Vectorized influence functional at time `n_t * dt` as a temporal MPS.
#[derive(Debug, Clone)]
pub struct TemporalMPS {
    /// One 3-leg tensor `[bond_left, phys(4), bond_right]` per Trotter step;
    /// site 0 is the earliest step. Outer bonds have dimension 1.
    pub sites: Vec<DenseTensor>,
    /// Accumulated natural log of all scale factors divided out.
    pub log_norm: f64,
    pub params: IsingParams,
    pub bond_cap: usize,
    /// Relative deviation of `(1/T) log Tr rho_L` from the exact rate.
    pub trace_drift: f64,
    /// Largest per-column relative discarded weight seen during truncation.
    pub max_discarded_weight: f64,
}

/// Unfolded form of the influence functional: an MPO over the forward and
/// backward contour legs, sites `[bond_left, ket(2), bra(2), bond_right]`.
#[derive(Debug, Clone)]
pub struct InfluenceMPO {
    pub sites: Vec<DenseTensor>,
    pub log_norm: f64,
}

/// Unitary taking a folded ket-bra leg from the pair basis `|f><b|`
/// (index `2f + b`) to the orthonormal Hermitian operator basis
/// `{1, X, Y, Z}/sqrt(2)`; layout `[pair(4), op(4)]`, columns are the
/// vectorized basis operators.
///
/// Every folded tensor of the network describes a Hermiticity-preserving
/// map, so in this basis all amplitudes are real and the contraction runs
/// entirely through the fast real BLAS/LAPACK paths. Contracted leg pairs
/// must carry opposite conjugations of this matrix; by convention the
/// physical legs of the stored MPS always carry the conjugated copy.
fn pauli_basis() -> DenseTensor {
    let r = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let i = C64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
    let o = C64::new(0.0, 0.0);
    DenseTensor::from_vec(
        &[4, 4],
        vec![
            r, o, o, r, //
            o, r, -i, o, //
            o, r, i, o, //
            r, o, o, -r,
        ],
    )
    .expect("4x4")
}

/// Assert that all amplitudes are real up to rounding noise and strip the
/// imaginary parts exactly, so downstream algebra stays on the real path.
fn realify(t: DenseTensor) -> DenseTensor {
    let tol = 1e-12 * t.max_abs().max(1.0);
    let data = t
        .as_slice()
        .iter()
        .map(|z| {
            assert!(z.im.abs() <= tol, "expected a real tensor, found im {}", z.im);
            C64::new(z.re, 0.0)
        })
        .collect();
    DenseTensor::from_vec(t.shape(), data).expect("same shape")
}

/// Identity trace cap for any leg of the real-basis network, `sqrt(2)` on
/// the identity component.
pub(crate) fn real_cap() -> DenseTensor {
    realify(contract(&identity_cap(2), &pauli_basis(), &[(0, 0)]).expect("cap"))
}

/// One Trotter step of the folded network, rotated to the real basis.
struct RealStep {
    /// Folded bulk tensor `[p_in(4), p_out(4), bond_left(4), bond_right(4)]`.
    bulk: DenseTensor,
    /// Folded edge with the future-trace cap applied, `[p_in(4), bond(4)]`;
    /// its bond leg becomes the newest physical leg of the MPS.
    e_top: DenseTensor,
    /// Trace cap for any leg of this network.
    cap: DenseTensor,
    /// Trace cap times the maximally mixed initial state weight 1/2.
    half_cap: DenseTensor,
}

fn real_step(p: &IsingParams, mirror: bool) -> RealStep {
    let mpo = build_step_mpo(p);
    let s = pauli_basis();
    let sc = s.conj();
    // each contracted pair needs one plain and one conjugated copy; the bond
    // leg that becomes the physical MPS leg always takes the conjugated one,
    // so a mirrored column swaps the bond assignments
    let (b_near, b_far) = if mirror { (&sc, &s) } else { (&s, &sc) };
    let bulk = contract(&mpo.folded_bulk, &s, &[(0, 0)]).expect("pi");
    let bulk = contract(&bulk, &sc, &[(0, 0)]).expect("po");
    let bulk = contract(&bulk, b_near, &[(0, 0)]).expect("bl");
    let bulk = contract(&bulk, b_far, &[(0, 0)]).expect("br");
    let edge = contract(&mpo.folded_edge, &identity_cap(2), &[(1, 0)]).expect("edge cap");
    let edge = contract(&edge, &s, &[(0, 0)]).expect("pi");
    let edge = contract(&edge, &sc, &[(0, 0)]).expect("bond");
    let cap = real_cap();
    RealStep {
        bulk: realify(bulk),
        e_top: realify(edge),
        half_cap: cap.scale(C64::new(0.5, 0.0)),
        cap,
    }
}

/// Build the influence MPS for `n_t` steps by `n_t` staircase extensions.
pub fn contract_influence(
    p: IsingParams,
    n_t: usize,
    bond_cap: usize,
    drift_threshold: f64,
) -> Result<TemporalMPS, TensorError> {
    contract_influence_mirrored(p, n_t, bond_cap, drift_threshold, false)
}

/// Same as [`contract_influence`] but with the spatial orientation of every
/// absorbed column reflected (the "right" influence functional).
pub fn contract_influence_mirrored(
    p: IsingParams,
    n_t: usize,
    bond_cap: usize,
    drift_threshold: f64,
    mirror: bool,
) -> Result<TemporalMPS, TensorError> {
    if bond_cap < 1 {
        return Err(TensorError::ZeroMaxRank);
    }
    assert!(n_t >= 1, "need at least one Trotter step");
    assert!(drift_threshold > 0.0);
    let mut l = TemporalMPS {
        sites: Vec::new(),
        log_norm: 0.0,
        params: p,
        bond_cap,
        trace_drift: 0.0,
        max_discarded_weight: 0.0,
    };
    let step = real_step(&p, mirror);
    for _ in 0..n_t {
        l.extend_step(&step, mirror)?;
    }
    let _ = drift_threshold; // convergence is reported via trace_drift
    Ok(l)
}

impl TemporalMPS {
    pub fn n_t(&self) -> usize {
        self.sites.len()
    }

    /// Whether the trace monitor stayed within the given threshold.
    pub fn converged(&self, drift_threshold: f64) -> bool {
        self.trace_drift <= drift_threshold
    }

    /// Extend from `n_t` to `n_t + 1` Trotter steps: append one temporal
    /// site and absorb one staircase column.
    pub fn extend(&mut self) -> Result<(), TensorError> {
        let step = real_step(&self.params, false);
        self.extend_step(&step, false)
    }

    fn extend_step(&mut self, step: &RealStep, mirror: bool) -> Result<(), TensorError> {
        if self.sites.is_empty() {
            // first column is the capped edge tensor alone
            let v = contract(&step.half_cap, &step.e_top, &[(0, 0)])?;
            self.sites.push(v.reshape(&[1, 4, 1])?);
            self.update_drift();
            return Ok(());
        }
        // Zip the staircase column into the chain bottom-to-top, truncating
        // each bond as it forms so the 4x-inflated intermediates are never
        // materialized. The carry `c[new_bond, old_bond, vert]` holds the
        // already-absorbed part of the column; `vert` is the column's
        // vertical leg entering the current row (the initial-state half-cap
        // below row one, `p_out` of the previous row in between).
        let n = self.sites.len();
        let old_bond_ax = if mirror { 3 } else { 2 }; // bulk leg joined to the old physical leg
        let mut c = step.half_cap.reshape(&[1, 1, 4])?;
        let mut column_discard: f64 = 0.0;
        for k in 0..n {
            // c[z, a_prev, pi] x site[a_prev, q, a] -> [z, pi, q, a]
            let t = contract(&c, &self.sites[k], &[(1, 0)])?;
            // join (pi, q) with the bulk row -> [z, a, po, new_phys]
            let t = contract(&t, &step.bulk, &[(1, 0), (2, old_bond_ax)])?;
            let t = t.permute(&[0, 3, 1, 2])?; // [z, new_phys, a, po]
            let svd = truncated_svd_sketched(&t, &[0, 1], self.bond_cap, DEFAULT_REL_CUTOFF)?;
            column_discard += svd.discarded_weight;
            self.sites[k] = svd.left_isometry; // [z, 4, z']
            c = svd.right_isometry.scale_axis(0, &svd.singular_values)?; // [z', a, po]
            self.log_norm += c.normalize_max();
        }
        // top row: future-capped edge, its bond leg is the newest site
        let top = contract(&c, &step.e_top, &[(2, 0)])?; // [z, 1, phys]
        let z = top.shape()[0];
        self.sites.push(top.reshape(&[z, 4, 1])?);
        self.orthogonalize_right()?;
        self.max_discarded_weight = self.max_discarded_weight.max(column_discard);
        self.update_drift();
        Ok(())
    }

    /// Absorb one spatially uniform column of full height (no new temporal
    /// site). For an exact influence MPS this is an identity operation up to
    /// normalization: the environment of the next spin toward the cut is the
    /// influence functional itself.
    pub fn absorb_uniform_column(&mut self) -> Result<(), TensorError> {
        let step = real_step(&self.params, false);
        let n = self.sites.len();
        assert!(n >= 1);
        let bulk_bot = contract(&step.half_cap, &step.bulk, &[(0, 0)])?; // [po, bl, br]
        let bulk_top = contract(&step.bulk, &step.cap, &[(1, 0)])?; // [pi, bl, br]
        if n == 1 {
            let both = contract(&step.half_cap, &bulk_top, &[(0, 0)])?; // [bl, br]
            let site = &self.sites[0];
            let r = contract(site, &both, &[(1, 0)])?; // [vl, vr, br]
            self.sites[0] = r.permute(&[0, 2, 1])?;
        } else {
            for t in 0..n {
                let site = &self.sites[t];
                let (vl, vr) = (site.shape()[0], site.shape()[2]);
                let new = if t == 0 {
                    let r = contract(site, &bulk_bot, &[(1, 1)])?; // [vl, vr, po, br]
                    r.permute(&[0, 3, 1, 2])?.reshape(&[vl, 4, vr * 4])?
                } else if t == n - 1 {
                    let r = contract(site, &bulk_top, &[(1, 1)])?; // [vl, vr, pi, br]
                    r.permute(&[0, 2, 3, 1])?.reshape(&[vl * 4, 4, vr])?
                } else {
                    let r = contract(site, &step.bulk, &[(1, 2)])?; // [vl, vr, pi, po, br]
                    r.permute(&[0, 2, 4, 1, 3])?.reshape(&[vl * 4, 4, vr * 4])?
                };
                self.sites[t] = new;
            }
        }
        self.compress()?;
        self.update_drift();
        Ok(())
    }

    /// Single left-to-right truncating SVD sweep at `bond_cap` followed by a
    /// right-to-left orthogonalization pass, renormalizing each site into
    /// `log_norm`.
    ///
    /// The trailing pass leaves the state right-canonical, so the next
    /// column's truncation sweep cuts against an environment skewed only by
    /// the one freshly absorbed column. Ordering the passes this way keeps
    /// every factorization at the post-truncation bond size, which is what
    /// makes long sweeps at large caps affordable; the trace monitor tracks
    /// the accumulated truncation quality.
    fn compress(&mut self) -> Result<(), TensorError> {
        let n = self.sites.len();
        // left-to-right sweep with truncation
        let mut column_discard: f64 = 0.0;
        for k in 0..n {
            if k + 1 < n {
                let svd = truncated_svd(&self.sites[k], &[0, 1], self.bond_cap, DEFAULT_REL_CUTOFF)?;
                column_discard += svd.discarded_weight;
                self.sites[k] = svd.left_isometry;
                let carry = svd
                    .right_isometry
                    .scale_axis(0, &svd.singular_values)?;
                self.sites[k + 1] = contract(&carry, &self.sites[k + 1], &[(1, 0)])?;
            }
            let ln = self.sites[k].normalize_max();
            self.log_norm += ln;
        }
        self.orthogonalize_right()?;
        self.max_discarded_weight = self.max_discarded_weight.max(column_discard);
        Ok(())
    }

    /// Right-to-left RQ pass leaving every site but the first
    /// right-canonical; cheap because it runs on already-truncated bonds.
    fn orthogonalize_right(&mut self) -> Result<(), TensorError> {
        for k in (1..self.sites.len()).rev() {
            let (carry, q) = rq_decompose(&self.sites[k], &[0])?;
            self.sites[k] = q; // [rank, phys, vr]
            self.sites[k - 1] = contract(&self.sites[k - 1], &carry, &[(2, 0)])?;
            self.log_norm += self.sites[k - 1].normalize_max();
        }
        Ok(())
    }

    fn update_drift(&mut self) {
        let lstep = (0.5 * (self.params.lambda1() + self.params.lambda2())).ln();
        let got = self.trace_log() / self.sites.len() as f64;
        self.trace_drift = ((got - lstep) / lstep).abs();
    }

    /// `log Tr rho_L`, every physical leg closed with the identity cap.
    pub fn trace_log(&self) -> f64 {
        let cap = real_cap();
        let mut log_acc = self.log_norm;
        let mut v = DenseTensor::from_vec(&[1], vec![C64::new(1.0, 0.0)]).unwrap();
        for site in &self.sites {
            let capped = contract(site, &cap, &[(1, 0)]).expect("cap"); // [vl, vr]
            v = contract(&v, &capped, &[(0, 0)]).expect("chain");
            log_acc += v.normalize_max();
        }
        let s = v.to_scalar();
        log_acc + s.re.abs().ln()
    }

    /// `log <L|L>`, the squared two-norm of the vectorized functional.
    pub fn norm_sq_log(&self) -> f64 {
        let mut log_acc = 2.0 * self.log_norm;
        let mut env = DenseTensor::from_vec(&[1, 1], vec![C64::new(1.0, 0.0)]).unwrap();
        for site in &self.sites {
            // env[va, vb] * site[va, q, vr] * conj(site)[vb, q, vr']
            let e = contract(&env, site, &[(0, 0)]).expect("chain");
            env = contract(&e, &site.conj(), &[(0, 0), (1, 1)]).expect("chain");
            log_acc += env.normalize_max();
        }
        let s = env.to_scalar();
        log_acc + s.re.ln()
    }

    /// Trace out the latest `n_t - n_keep` temporal sites with identity
    /// caps; the scalar prefactor is absorbed into `log_norm`.
    pub fn reduced_trace_prefix(&self, n_keep: usize) -> TemporalMPS {
        assert!(n_keep <= self.sites.len());
        let cap = real_cap();
        let mut out = self.clone();
        let mut log_acc = 0.0;
        let mut w = DenseTensor::from_vec(&[1], vec![C64::new(1.0, 0.0)]).unwrap();
        while out.sites.len() > n_keep {
            let site = out.sites.pop().unwrap();
            let capped = contract(&site, &cap, &[(1, 0)]).expect("cap"); // [vl, vr]
            w = contract(&capped, &w, &[(1, 0)]).expect("chain");
            log_acc += w.normalize_max();
        }
        if let Some(last) = out.sites.last_mut() {
            let absorbed = contract(last, &w, &[(2, 0)]).expect("absorb"); // [vl, q]
            let (vl, q) = (absorbed.shape()[0], absorbed.shape()[1]);
            *last = absorbed.reshape(&[vl, q, 1]).expect("rank 3");
            log_acc += last.normalize_max();
        } else {
            // n_keep = 0: the full trace survives as a pure scalar
            let s = w.to_scalar();
            log_acc += s.re.abs().ln();
        }
        out.log_norm += log_acc;
        out
    }

    /// Rotate a site's physical leg from the real operator basis back to the
    /// ket-bra pair basis `2*f + b`.
    fn unfold_phys(site: &DenseTensor) -> DenseTensor {
        let s = pauli_basis();
        contract(site, &s, &[(1, 1)])
            .expect("basis")
            .permute(&[0, 2, 1])
            .expect("rank 3")
    }

    /// Unfold each physical leg into ket/bra legs of dimension 2.
    pub fn to_mpo(&self) -> InfluenceMPO {
        let sites = self
            .sites
            .iter()
            .map(|s| {
                let (vl, vr) = (s.shape()[0], s.shape()[2]);
                Self::unfold_phys(s).reshape(&[vl, 2, 2, vr]).expect("folded leg")
            })
            .collect();
        InfluenceMPO {
            sites,
            log_norm: self.log_norm,
        }
    }

    /// Dense folded vector over all sites (small `n_t` only), scaled by
    /// `exp(log_norm)`; legs ordered earliest step first, each of dim 4.
    pub fn densify(&self) -> DenseTensor {
        assert!(self.sites.len() <= 10, "densify is for small networks");
        let mut acc = DenseTensor::from_vec(&[1], vec![C64::new(1.0, 0.0)]).unwrap();
        for site in &self.sites {
            let k = acc.rank();
            acc = contract(&acc, &Self::unfold_phys(site), &[(k - 1, 0)]).expect("chain");
        }
        // acc legs: [1-dim left, q1, ..., qn, 1-dim right]
        let shape: Vec<usize> = vec![4; self.sites.len()];
        let squeezed = acc.reshape(&shape).expect("outer bonds are trivial");
        squeezed.scale(C64::new(self.log_norm.exp(), 0.0))
    }

    /// Dense density matrix `2^n x 2^n` (small `n_t` only), ket string in
    /// the row index, earliest step in the most significant bit.
    pub fn densify_matrix(&self) -> DenseTensor {
        let v = self.densify();
        let n = self.sites.len();
        let dim = 1usize << n;
        let mut m = DenseTensor::zeros(&[dim, dim]);
        for f in 0..dim {
            for b in 0..dim {
                let idx: Vec<usize> = (0..n)
                    .map(|s| 2 * ((f >> (n - 1 - s)) & 1) + ((b >> (n - 1 - s)) & 1))
                    .collect();
                m.set(&[f, b], v.get(&idx));
            }
        }
        m
    }

    /// Serialize to a self-describing binary checkpoint with a SHA-256
    /// integrity trailer; round-trips bit-exactly.
    pub fn write_checkpoint(&self, path: &Path) -> std::io::Result<()> {
        let mut buf: Vec<u8> = Vec::new();
        buf.extend_from_slice(b"TEMPENTL");
        buf.write_u32::<LittleEndian>(1)?; // format version
        for v in [self.params.j, self.params.h, self.params.g, self.params.dt] {
            buf.write_f64::<LittleEndian>(v)?;
        }
        buf.write_u64::<LittleEndian>(self.sites.len() as u64)?;
        buf.write_u64::<LittleEndian>(self.bond_cap as u64)?;
        buf.write_f64::<LittleEndian>(self.log_norm)?;
        buf.write_f64::<LittleEndian>(self.trace_drift)?;
        buf.write_f64::<LittleEndian>(self.max_discarded_weight)?;
        for site in &self.sites {
            buf.write_u64::<LittleEndian>(site.rank() as u64)?;
            for &d in site.shape() {
                buf.write_u64::<LittleEndian>(d as u64)?;
            }
            for z in site.as_slice() {
                buf.write_f64::<LittleEndian>(z.re)?;
                buf.write_f64::<LittleEndian>(z.im)?;
            }
        }
        let digest = Sha256::digest(&buf);
        let mut file = std::fs::File::create(path)?;
        file.write_all(&buf)?;
        file.write_all(&digest)?;
        Ok(())
    }

    pub fn read_checkpoint(path: &Path) -> std::io::Result<TemporalMPS> {
        let bytes = std::fs::read(path)?;
        let bad = |msg: &str| std::io::Error::new(std::io::ErrorKind::InvalidData, msg);
        if bytes.len() < 8 + 32 || &bytes[..8] != b"TEMPENTL" {
            return Err(bad("not a checkpoint file"));
        }
        let (body, trailer) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(body).as_slice() != trailer {
            return Err(bad("checksum mismatch"));
        }
        let mut r = &body[8..];
        let version = r.read_u32::<LittleEndian>()?;
        if version != 1 {
            return Err(bad("unsupported checkpoint version"));
        }
        let mut params = [0.0f64; 4];
        for p in &mut params {
            *p = r.read_f64::<LittleEndian>()?;
        }
        let n_sites = r.read_u64::<LittleEndian>()? as usize;
        let bond_cap = r.read_u64::<LittleEndian>()? as usize;
        let log_norm = r.read_f64::<LittleEndian>()?;
        let trace_drift = r.read_f64::<LittleEndian>()?;
        let max_discarded_weight = r.read_f64::<LittleEndian>()?;
        let mut sites = Vec::with_capacity(n_sites);
        for _ in 0..n_sites {
            let rank = r.read_u64::<LittleEndian>()? as usize;
            if rank != 3 {
                return Err(bad("site tensors must have three legs"));
            }
            let mut shape = [0usize; 3];
            for d in &mut shape {
                *d = r.read_u64::<LittleEndian>()? as usize;
            }
            let len: usize = shape.iter().product();
            let mut data = Vec::with_capacity(len);
            for _ in 0..len {
                let re = r.read_f64::<LittleEndian>()?;
                let im = r.read_f64::<LittleEndian>()?;
                data.push(C64::new(re, im));
            }
            sites.push(
                DenseTensor::from_vec(&shape, data).map_err(|_| bad("corrupt site tensor"))?,
            );
        }
        let mut probe = [0u8; 1];
        if r.read(&mut probe)? != 0 {
            return Err(bad("trailing bytes in checkpoint"));
        }
        Ok(TemporalMPS {
            sites,
            log_norm,
            params: IsingParams::new(params[0], params[1], params[2], params[3]),
            bond_cap,
            trace_drift,
            max_discarded_weight,
        })
    }
}

impl InfluenceMPO {
    /// Refold ket/bra legs into a temporal MPS; inverse of
    /// [`TemporalMPS::to_mpo`] up to rounding in the basis rotation.
    pub fn fold(&self, params: IsingParams, bond_cap: usize) -> TemporalMPS {
        let sc = pauli_basis().conj();
        let sites = self
            .sites
            .iter()
            .map(|s| {
                let (vl, vr) = (s.shape()[0], s.shape()[3]);
                let pair = s.reshape(&[vl, 4, vr]).expect("pair of qubit legs");
                realify(
                    contract(&pair, &sc, &[(1, 0)])
                        .expect("basis")
                        .permute(&[0, 2, 1])
                        .expect("rank 3"),
                )
            })
            .collect();
        let mut l = TemporalMPS {
            sites,
            log_norm: self.log_norm,
            params,
            bond_cap,
            trace_drift: 0.0,
            max_discarded_weight: 0.0,
        };
        l.update_drift();
        l
    }
}
