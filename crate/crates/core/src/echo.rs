//! Finite-chain evolution amplitude `A(t) = tr(U(t) rho_0 U_L'(t) U_R'(t))`
//! (primes denoting adjoints) for a pinned Ising chain, computed by evolving
//! the vectorized full-chain and decoupled-halves propagators as matrix
//! product operators and overlapping them each Trotter step.
//!
//! Hamiltonian: `H = -J sum XX - sum (h Z + g X) - J X_1 - J X_L`; the two
//! boundary terms pin the chain ends. The halves Hamiltonians drop the bond
//! term across the central cut and keep their pinning terms.
//!
//! The gates reuse the influence-module sign convention, which differs from
//! `exp(-i dt H)` by conjugation with `Y` on every site; `|A(t)|` is
//! unaffected. Under that conjugation the pinning enters the field layer as
//! `g -> g + J` on the edge sites.

use num_complex::Complex64 as C64;

use crate::fit::{fit_model, FitError, ModelKind};
use crate::gates::{field_rotation, IsingParams};
use crate::tensor::{
    contract, rq_decompose, truncated_svd_sketched, DenseTensor, TensorError, DEFAULT_REL_CUTOFF,
};

/// Per-step relative discarded weight above this flags all later samples.
const ECHO_DISCARD_FLAG: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct EchoConfig {
    /// Chain length; even and at least 4 so the halves are well defined.
    pub l: usize,
    pub params: IsingParams,
    pub bond_cap: usize,
    /// Evolution horizon; the curve is sampled every Trotter step.
    pub t_max: f64,
}

impl EchoConfig {
    pub fn new(l: usize, params: IsingParams, bond_cap: usize, t_max: f64) -> Self {
        assert!(l >= 4 && l % 2 == 0, "chain length must be even and >= 4");
        assert!(bond_cap >= 1 && t_max > 0.0);
        Self {
            l,
            params,
            bond_cap,
            t_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeSample {
    pub t: f64,
    /// `ln |A(t)|^2`.
    pub log_abs2: f64,
    /// True once any step's discarded weight exceeded the threshold.
    pub flagged: bool,
}

#[derive(Debug, Clone)]
pub struct AmplitudeCurve {
    pub config_l: usize,
    pub params: IsingParams,
    pub bond_cap: usize,
    pub samples: Vec<AmplitudeSample>,
}

/// A vectorized operator on the chain as an MPO; site legs are
/// `[bond_left, ket(2), bra(2), bond_right]`.
struct OpMpo {
    sites: Vec<DenseTensor>,
    log_norm: f64,
}

impl OpMpo {
    fn identity(l: usize) -> Self {
        let mut site = DenseTensor::zeros(&[1, 2, 2, 1]);
        site.set(&[0, 0, 0, 0], C64::new(1.0, 0.0));
        site.set(&[0, 1, 1, 0], C64::new(1.0, 0.0));
        Self {
            sites: vec![site; l],
            log_norm: 0.0,
        }
    }

    /// Multiply a single-site gate `[out, in]` onto the ket leg of site `k`.
    fn apply_site(&mut self, k: usize, gate: &DenseTensor) -> Result<(), TensorError> {
        let t = contract(&self.sites[k], gate, &[(1, 1)])?; // [bl, bra, br, out]
        self.sites[k] = t.permute(&[0, 3, 1, 2])?;
        Ok(())
    }

    /// Bring the chain to right-canonical form, norm into `log_norm`.
    fn orthogonalize_right(&mut self) -> Result<(), TensorError> {
        for k in (1..self.sites.len()).rev() {
            let (carry, q) = rq_decompose(&self.sites[k], &[0])?;
            self.sites[k] = q;
            self.sites[k - 1] = contract(&self.sites[k - 1], &carry, &[(3, 0)])?;
        }
        self.log_norm += self.sites[0].normalize_max();
        Ok(())
    }

    /// Left-to-right sweep applying the two-site gate `[o1, o2, k1, k2]` on
    /// every bond except `skip`, truncating to `bond_cap`; skipped bonds are
    /// still re-split to move the orthogonality center. Call right-canonical;
    /// returns the largest relative discarded weight.
    fn apply_bonds(
        &mut self,
        gate: &DenseTensor,
        skip: Option<usize>,
        bond_cap: usize,
    ) -> Result<f64, TensorError> {
        let mut max_discarded: f64 = 0.0;
        for i in 0..self.sites.len() - 1 {
            let mut theta = contract(&self.sites[i], &self.sites[i + 1], &[(3, 0)])?;
            // [bl, k1, b1, k2, b2, br]
            if skip != Some(i) {
                theta = contract(&theta, gate, &[(1, 2), (3, 3)])?
                    // -> [bl, b1, b2, br, o1, o2]
                    .permute(&[0, 4, 1, 5, 2, 3])?;
            }
            let svd = truncated_svd_sketched(&theta, &[0, 1, 2], bond_cap, DEFAULT_REL_CUTOFF)?;
            max_discarded = max_discarded.max(svd.discarded_weight);
            self.sites[i] = svd.left_isometry;
            let mut carry = svd.right_isometry.scale_axis(0, &svd.singular_values)?;
            self.log_norm += carry.normalize_max();
            self.sites[i + 1] = carry;
        }
        Ok(max_discarded)
    }
}

/// The gates of one second-order Trotter step: half field layers per site
/// (with boundary pinning folded into the transverse field) and the bond
/// entangler `exp(+i dt J XX)` as a `[o1, o2, k1, k2]` tensor.
struct StepGates {
    field: Vec<DenseTensor>,
    bond: DenseTensor,
}

fn step_gates(p: &IsingParams, l: usize) -> StepGates {
    let field = (0..l)
        .map(|s| {
            let g_eff = if s == 0 || s == l - 1 { p.g + p.j } else { p.g };
            field_rotation(p.h, g_eff, 0.5 * p.dt)
        })
        .collect();
    // exp(+i theta XX) = cos I + i sin XX on the two-qubit space
    let theta = p.j * p.dt;
    let mut bond = DenseTensor::zeros(&[2, 2, 2, 2]);
    for k1 in 0..2 {
        for k2 in 0..2 {
            bond.set(&[k1, k2, k1, k2], C64::new(theta.cos(), 0.0));
            bond.set(&[1 - k1, 1 - k2, k1, k2], C64::new(0.0, theta.sin()));
        }
    }
    StepGates { field, bond }
}

fn trotter_step(
    op: &mut OpMpo,
    gates: &StepGates,
    skip: Option<usize>,
    bond_cap: usize,
) -> Result<f64, TensorError> {
    for k in 0..op.sites.len() {
        op.apply_site(k, &gates.field[k])?;
    }
    op.orthogonalize_right()?;
    let discarded = op.apply_bonds(&gates.bond, skip, bond_cap)?;
    for k in 0..op.sites.len() {
        op.apply_site(k, &gates.field[k])?;
    }
    Ok(discarded)
}

/// `ln |<vec(b), vec(a)>|` including both normalizations.
fn log_abs_overlap(a: &OpMpo, b: &OpMpo) -> Result<f64, TensorError> {
    let mut env = DenseTensor::from_vec(&[1, 1], vec![C64::new(1.0, 0.0)]).unwrap();
    let mut log_acc = a.log_norm + b.log_norm;
    for (sa, sb) in a.sites.iter().zip(&b.sites) {
        let t = contract(&env, sa, &[(0, 0)])?; // [yb, ket, bra, xr]
        env = contract(&t, &sb.conj(), &[(0, 0), (1, 1), (2, 2)])?; // [xr, yr]
        log_acc += env.normalize_max();
    }
    Ok(log_acc + env.to_scalar().norm().ln())
}

/// Evolve the full-chain and decoupled-halves propagators and sample
/// `ln |A(t)|^2` every Trotter step, starting from `A(0) = 1`.
pub fn amplitude_curve(c: &EchoConfig) -> Result<AmplitudeCurve, TensorError> {
    let p = c.params;
    let gates = step_gates(&p, c.l);
    let cut_bond = c.l / 2 - 1;
    let mut full = OpMpo::identity(c.l);
    let mut halves = OpMpo::identity(c.l);
    let steps = (c.t_max / p.dt).round() as usize;
    let mut samples = vec![AmplitudeSample {
        t: 0.0,
        log_abs2: 0.0,
        flagged: false,
    }];
    let mut flagged = false;
    for step in 1..=steps {
        let d1 = trotter_step(&mut full, &gates, None, c.bond_cap)?;
        let d2 = trotter_step(&mut halves, &gates, Some(cut_bond), c.bond_cap)?;
        flagged |= d1.max(d2) > ECHO_DISCARD_FLAG;
        let log_abs = log_abs_overlap(&full, &halves)? - c.l as f64 * 2f64.ln();
        samples.push(AmplitudeSample {
            t: step as f64 * p.dt,
            log_abs2: 2.0 * log_abs,
            flagged,
        });
    }
    Ok(AmplitudeCurve {
        config_l: c.l,
        params: p,
        bond_cap: c.bond_cap,
        samples,
    })
}

/// Fit `ln |A(t)|^2 = -c t^beta` over the window and return `beta` with its
/// 1-sigma fit error.
pub fn diffusive_exponent(
    curve: &AmplitudeCurve,
    window: (f64, f64),
) -> Result<(f64, f64), FitError> {
    let pts: Vec<(f64, f64)> = curve
        .samples
        .iter()
        .filter(|s| s.t >= window.0 && s.t <= window.1)
        .map(|s| (s.t, s.log_abs2))
        .collect();
    if pts.len() < 10 {
        return Err(FitError::TooFewSamples {
            have: pts.len(),
            need: 10,
        });
    }
    let fit = fit_model(ModelKind::PowerLaw, &pts, false)?;
    let (beta, err) = fit.param("alpha").expect("power law exponent");
    Ok((beta, err))
}
