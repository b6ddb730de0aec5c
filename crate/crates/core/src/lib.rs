pub mod echo;
pub mod entropy;
pub mod fit;
pub mod gates;
pub mod influence;
pub mod oracle;
pub mod tensor;
pub mod toy;

pub use entropy::{
    delta_nm, delta_nm_spectrum, forward_backward_renyi, mutual_info_bipartition,
    mutual_info_bipartition_of, mutual_info_disjoint, mutual_info_disjoint_at, power_traces,
    prefix_renyi2_all, renyi2, renyi2_curve, renyi_n, renyi_n_spectrum, EntropyCurve,
    EntropySample, Flagged, MutualInfoSample, PowerTraces,
};

pub use echo::{amplitude_curve, diffusive_exponent, AmplitudeCurve, AmplitudeSample, EchoConfig};

pub use fit::{
    aic_compare, aic_value, finite_diff, fit_model, format_value_error, format_win_loss,
    window_ensemble, AicEntry, FitEnsemble, FitError, FitModel, ModelKind,
};

pub use influence::{
    contract_influence, contract_influence_mirrored, InfluenceMPO, TemporalMPS,
};

pub use gates::{
    build_step_mpo, fold, identity_cap, single_qubit_gate, split_two_qubit_gate, GateSplit,
    IsingParams, StepMpo,
};

pub use tensor::{contract, hermitian_eigenvalues, truncated_svd, DenseTensor, SvdResult};

pub use toy::{
    delta_nm_single_closed_form, delta_nm_triple_asymptote, forward_backward_asymptote_double,
    scan_extrema, Extremum, ExtremumKind, SpectrumModel, SpectrumVariant, ToyError,
};
