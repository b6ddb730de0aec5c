//! Scalar diagnostics of the influence functional: Rényi entropies of any
//! integer order, mutual information between adjacent and disjoint temporal
//! blocks, and relative Rényi scalings.
//!
//! All traces and overlaps stay in the log domain. Entropies are invariant
//! under the overall normalization of the functional, so every formula here
//! uses raw (unnormalized) log-traces in normalization-cancelling
//! combinations.

use num_complex::Complex64 as C64;

use crate::gates::IsingParams;
use crate::influence::{contract_influence, real_cap, InfluenceMPO, TemporalMPS};
use crate::tensor::{
    contract, rq_decompose, truncated_svd_sketched, DenseTensor, TensorError, DEFAULT_REL_CUTOFF,
};

/// Relative discarded weight on any single compressed power above which the
/// resulting sample is flagged as unreliable.
pub const POWER_DISCARD_FLAG: f64 = 1e-6;

/// One point of an entropy-versus-time curve.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropySample {
    /// Trotter step count; physical time is `n_t * dt`.
    pub n_t: usize,
    pub value: f64,
    pub converged: bool,
}

/// Entropy samples of one Rényi order along a time sweep at fixed parameters.
#[derive(Debug, Clone)]
pub struct EntropyCurve {
    pub params: IsingParams,
    pub bond_cap: usize,
    /// Rényi order, at least 2.
    pub order: u32,
    pub samples: Vec<EntropySample>,
}

/// Rényi-2 mutual information between two equal disjoint temporal blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct MutualInfoSample {
    /// Block length in Trotter steps.
    pub t_l: usize,
    /// Separation between the blocks in Trotter steps.
    pub delta_t: usize,
    pub value: f64,
}

/// A value that may rest on compressions whose discarded weight exceeded the
/// reliability threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flagged {
    pub value: f64,
    pub flagged: bool,
}

/// Rényi-2 entropy of the normalized functional: `Tr rho^2` is the squared
/// two-norm of the vectorized state.
pub fn renyi2(l: &TemporalMPS) -> f64 {
    -(l.norm_sq_log() - 2.0 * l.trace_log())
}

/// `log Tr rho^k` for `k = 1..=n_max`, by iterated MPO products.
#[derive(Debug, Clone)]
pub struct PowerTraces {
    /// `log_traces[k-1] = log Tr rho^k`.
    pub log_traces: Vec<f64>,
    /// Largest per-product relative discarded weight.
    pub max_discarded: f64,
    pub flagged: bool,
}

/// Compute `log Tr rho^k` up to `n_max` by sequential products
/// `rho * rho^(k-1)`, compressing every product to `power_bond_cap`.
///
/// Sequential products (never binary squaring) keep the compression-error
/// profile uniform in `k`.
pub fn power_traces(
    l: &TemporalMPS,
    n_max: u32,
    power_bond_cap: usize,
) -> Result<PowerTraces, TensorError> {
    assert!(n_max >= 1);
    let rho = l.to_mpo();
    let mut log_traces = vec![mpo_trace_log(&rho)];
    let mut acc = rho.clone();
    let mut max_discarded: f64 = 0.0;
    for _ in 2..=n_max {
        let (next, discarded) = mpo_product(&rho, &acc, power_bond_cap)?;
        max_discarded = max_discarded.max(discarded);
        acc = next;
        log_traces.push(mpo_trace_log(&acc));
    }
    Ok(PowerTraces {
        log_traces,
        max_discarded,
        flagged: max_discarded > POWER_DISCARD_FLAG,
    })
}

/// Rényi entropy of order `n >= 2` of the normalized functional.
pub fn renyi_n(l: &TemporalMPS, n: u32, power_bond_cap: usize) -> Result<Flagged, TensorError> {
    assert!(n >= 2);
    let p = power_traces(l, n, power_bond_cap)?;
    let value = (p.log_traces[n as usize - 1] - n as f64 * p.log_traces[0]) / (1.0 - n as f64);
    Ok(Flagged {
        value,
        flagged: p.flagged,
    })
}

/// Relative Rényi scaling `-log[ Tr rho^n / (Tr rho^m)^(n/m) ]`, `n > m >= 1`.
pub fn delta_nm(l: &TemporalMPS, n: u32, m: u32, power_bond_cap: usize) -> Result<Flagged, TensorError> {
    assert!(n > m && m >= 1);
    let p = power_traces(l, n, power_bond_cap)?;
    Ok(Flagged {
        value: delta_from_log_traces(&p.log_traces, n, m),
        flagged: p.flagged,
    })
}

fn delta_from_log_traces(log_traces: &[f64], n: u32, m: u32) -> f64 {
    -(log_traces[n as usize - 1] - (n as f64 / m as f64) * log_traces[m as usize - 1])
}

/// Rényi-n entropy of the pure forward-backward state `<L|/sqrt(<L|L>)`,
/// `S_{L,n} = Delta_{2n,2} / (n - 1)`.
pub fn forward_backward_renyi(
    l: &TemporalMPS,
    n: u32,
    power_bond_cap: usize,
) -> Result<Flagged, TensorError> {
    assert!(n >= 2);
    let d = delta_nm(l, 2 * n, 2, power_bond_cap)?;
    Ok(Flagged {
        value: d.value / (n as f64 - 1.0),
        flagged: d.flagged,
    })
}

/// `log sum_i lambda_i^k` of a nonnegative spectrum, scaled for stability;
/// nonpositive eigenvalues are dropped.
fn log_trace_power_spectrum(eigs: &[f64], k: f64) -> f64 {
    let m = eigs.iter().copied().fold(0.0, f64::max);
    assert!(m > 0.0, "spectrum must contain a positive eigenvalue");
    let sum: f64 = eigs
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| (l / m).powf(k))
        .sum();
    k * m.ln() + sum.ln()
}

/// Rényi entropy of order `n >= 2` straight from a spectrum.
pub fn renyi_n_spectrum(eigs: &[f64], n: u32) -> f64 {
    assert!(n >= 2);
    let ln = log_trace_power_spectrum(eigs, n as f64);
    let l1 = log_trace_power_spectrum(eigs, 1.0);
    (ln - n as f64 * l1) / (1.0 - n as f64)
}

/// Relative Rényi scaling straight from a spectrum, `n > m >= 1`.
pub fn delta_nm_spectrum(eigs: &[f64], n: u32, m: u32) -> f64 {
    assert!(n > m && m >= 1);
    let ln = log_trace_power_spectrum(eigs, n as f64);
    let lm = log_trace_power_spectrum(eigs, m as f64);
    -(ln - (n as f64 / m as f64) * lm)
}

/// Rényi-2 entropies of the reduced functional over the first `t` steps, for
/// every `t = 1..=n_t`, in one pair of transfer sweeps.
///
/// Tracing the future end of the functional telescopes, so the reduced
/// object over the first `t` steps carries the same spectrum as the
/// functional at time `t`; its trace equals the full trace for every `t`.
pub fn prefix_renyi2_all(l: &TemporalMPS) -> Vec<f64> {
    let n = l.sites.len();
    let cap = real_cap();
    let trace_log = l.trace_log();
    let one = || DenseTensor::from_vec(&[1, 1], vec![C64::new(1.0, 0.0)]).unwrap();

    // doubled-network purity environments of the kept prefix, from the left;
    // environments are [bond, conj-copy bond] matrices
    let mut left = Vec::with_capacity(n);
    let mut log_left = Vec::with_capacity(n);
    let mut env = one();
    let mut log_acc = 0.0;
    for site in &l.sites {
        let e = contract(&env, site, &[(0, 0)]).expect("chain"); // [vb, q, vr]
        env = contract(&e, &site.conj(), &[(0, 0), (1, 1)]).expect("chain"); // [vr, vr']
        log_acc += env.normalize_max();
        left.push(env.clone());
        log_left.push(log_acc);
    }

    // capped-pair environments of the traced suffix; rights[k] covers sites
    // k.. (rights[n] is the empty suffix)
    let mut rights = vec![one(); n + 1];
    let mut log_rights = vec![0.0; n + 1];
    for k in (0..n).rev() {
        let m = contract(&l.sites[k], &cap, &[(1, 0)]).expect("cap"); // [vl, vr]
        let e = contract(&m, &rights[k + 1], &[(1, 0)]).expect("chain"); // [vl, vr']
        let mut r = contract(&e, &m.conj(), &[(1, 1)]).expect("chain"); // [vl, vl']
        log_rights[k] = log_rights[k + 1] + r.normalize_max();
        rights[k] = r;
    }

    (1..=n)
        .map(|t| {
            let dot = contract(&left[t - 1], &rights[t], &[(0, 0), (1, 1)])
                .expect("closure")
                .to_scalar();
            let purity_log =
                2.0 * l.log_norm + log_left[t - 1] + log_rights[t] + dot.re.abs().ln();
            -(purity_log - 2.0 * trace_log)
        })
        .collect()
}

/// `log Tr rho_kept^2` where `keep[k]` marks the temporal sites retained;
/// the rest are traced in place with identity caps.
pub fn masked_purity_log(l: &TemporalMPS, keep: &[bool]) -> f64 {
    assert_eq!(keep.len(), l.sites.len());
    let cap = real_cap();
    let mut env = DenseTensor::from_vec(&[1, 1], vec![C64::new(1.0, 0.0)]).unwrap();
    let mut log_acc = 2.0 * l.log_norm;
    for (site, &kept) in l.sites.iter().zip(keep) {
        if kept {
            let e = contract(&env, site, &[(0, 0)]).expect("chain"); // [vb, q, vr]
            env = contract(&e, &site.conj(), &[(0, 0), (1, 1)]).expect("chain");
        } else {
            let m = contract(site, &cap, &[(1, 0)]).expect("cap"); // [vl, vr]
            let e = contract(&env, &m, &[(0, 0)]).expect("chain"); // [vb, vr]
            env = contract(&e, &m.conj(), &[(0, 0)]).expect("chain"); // [vr, vr']
        }
        log_acc += env.normalize_max();
    }
    log_acc + env.to_scalar().re.abs().ln()
}

/// Rényi-2 entropy of the reduced functional over the masked sites. The
/// trace of a partial trace is the full trace, so only the purity needs the
/// mask.
pub fn masked_renyi2(l: &TemporalMPS, keep: &[bool]) -> f64 {
    -(masked_purity_log(l, keep) - 2.0 * l.trace_log())
}

/// Rényi-2 mutual information across the temporal cut after `n_cut` steps of
/// an existing functional, via the partial-trace identity.
pub fn mutual_info_bipartition_of(l: &TemporalMPS, n_cut: usize) -> f64 {
    let n = l.sites.len();
    assert!(0 < n_cut && n_cut < n);
    let s = prefix_renyi2_all(l);
    s[n_cut - 1] + s[n - n_cut - 1] - s[n - 1]
}

/// Rényi-2 mutual information across a temporal cut, building the
/// functional at the given parameters; the flag reports trace-monitor
/// convergence of the underlying contraction.
pub fn mutual_info_bipartition(
    p: IsingParams,
    n_t: usize,
    n_cut: usize,
    bond_cap: usize,
    drift_threshold: f64,
) -> Result<Flagged, TensorError> {
    let l = contract_influence(p, n_t, bond_cap, drift_threshold)?;
    Ok(Flagged {
        value: mutual_info_bipartition_of(&l, n_cut),
        flagged: !l.converged(drift_threshold),
    })
}

/// Rényi-2 mutual information between two blocks of `block_len` steps
/// separated by `separation` steps, the first block starting at temporal
/// site `start`; all other sites are traced in place.
pub fn mutual_info_disjoint_at(
    l: &TemporalMPS,
    start: usize,
    block_len: usize,
    separation: usize,
) -> MutualInfoSample {
    let n = l.sites.len();
    assert!(block_len >= 1);
    assert!(start + 2 * block_len + separation <= n);
    let mut mask_a = vec![false; n];
    let mut mask_b = vec![false; n];
    let mut mask_ab = vec![false; n];
    for k in 0..block_len {
        mask_a[start + k] = true;
        mask_b[start + block_len + separation + k] = true;
        mask_ab[start + k] = true;
        mask_ab[start + block_len + separation + k] = true;
    }
    let tr2 = 2.0 * l.trace_log();
    let s_a = -(masked_purity_log(l, &mask_a) - tr2);
    let s_b = -(masked_purity_log(l, &mask_b) - tr2);
    let s_ab = -(masked_purity_log(l, &mask_ab) - tr2);
    MutualInfoSample {
        t_l: block_len,
        delta_t: separation,
        value: s_a + s_b - s_ab,
    }
}

/// [`mutual_info_disjoint_at`] anchored at the earliest step; the value is
/// translation invariant, so the anchor is a convention.
pub fn mutual_info_disjoint(
    l: &TemporalMPS,
    block_len: usize,
    separation: usize,
) -> MutualInfoSample {
    mutual_info_disjoint_at(l, 0, block_len, separation)
}

/// Rényi-2 curve over `n_t = 1..=n_t_max` from one incremental contraction.
pub fn renyi2_curve(
    p: IsingParams,
    n_t_max: usize,
    bond_cap: usize,
    drift_threshold: f64,
) -> Result<EntropyCurve, TensorError> {
    assert!(n_t_max >= 1);
    let mut l = contract_influence(p, 1, bond_cap, drift_threshold)?;
    let mut samples = Vec::with_capacity(n_t_max);
    samples.push(EntropySample {
        n_t: 1,
        value: renyi2(&l),
        converged: l.converged(drift_threshold),
    });
    for n_t in 2..=n_t_max {
        l.extend()?;
        samples.push(EntropySample {
            n_t,
            value: renyi2(&l),
            converged: l.converged(drift_threshold),
        });
    }
    Ok(EntropyCurve {
        params: p,
        bond_cap,
        order: 2,
        samples,
    })
}

/// `log |Tr rho|` of an unfolded MPO.
fn mpo_trace_log(m: &InfluenceMPO) -> f64 {
    let id = DenseTensor::eye(2);
    let mut log_acc = m.log_norm;
    let mut v = DenseTensor::from_vec(&[1], vec![C64::new(1.0, 0.0)]).unwrap();
    for site in &m.sites {
        let traced = contract(site, &id, &[(1, 0), (2, 1)]).expect("trace"); // [vl, vr]
        v = contract(&v, &traced, &[(0, 0)]).expect("chain");
        log_acc += v.normalize_max();
    }
    log_acc + v.to_scalar().norm().ln()
}

/// Operator product `a * b` of two equal-length MPOs, zipped left-to-right
/// with truncation to `bond_cap` and right-orthogonalized; returns the
/// product and the summed relative discarded weight.
fn mpo_product(
    a: &InfluenceMPO,
    b: &InfluenceMPO,
    bond_cap: usize,
) -> Result<(InfluenceMPO, f64), TensorError> {
    let n = a.sites.len();
    assert_eq!(n, b.sites.len());
    assert!(n >= 1);
    let mut log_norm = a.log_norm + b.log_norm;
    let mut sites: Vec<DenseTensor> = Vec::with_capacity(n);
    let mut discarded: f64 = 0.0;
    // carry [new_bond, a_bond, b_bond]
    let mut c = DenseTensor::from_vec(&[1, 1, 1], vec![C64::new(1.0, 0.0)])?;
    for k in 0..n {
        // c[z, va, vb] x a_k[va, ket, x, va'] -> [z, vb, ket, x, va']
        let t = contract(&c, &a.sites[k], &[(1, 0)])?;
        // x b_k[vb, x, bra, vb'] over (vb, x) -> [z, ket, va', bra, vb']
        let t = contract(&t, &b.sites[k], &[(1, 0), (3, 1)])?;
        let t = t.permute(&[0, 1, 3, 2, 4])?; // [z, ket, bra, va', vb']
        if k + 1 == n {
            let z = t.shape()[0];
            let mut last = t.reshape(&[z, 2, 2, 1])?; // outer bonds are trivial
            log_norm += last.normalize_max();
            sites.push(last);
        } else {
            let svd = truncated_svd_sketched(&t, &[0, 1, 2], bond_cap, DEFAULT_REL_CUTOFF)?;
            discarded += svd.discarded_weight;
            sites.push(svd.left_isometry); // [z, 2, 2, z']
            c = svd.right_isometry.scale_axis(0, &svd.singular_values)?; // [z', va', vb']
            log_norm += c.normalize_max();
        }
    }
    // right-to-left orthogonalization so the next product in a power chain
    // truncates against a canonical environment
    for k in (1..n).rev() {
        let (carry, q) = rq_decompose(&sites[k], &[0])?;
        sites[k] = q;
        sites[k - 1] = contract(&sites[k - 1], &carry, &[(3, 0)])?;
        log_norm += sites[k - 1].normalize_max();
    }
    Ok((InfluenceMPO { sites, log_norm }, discarded))
}
