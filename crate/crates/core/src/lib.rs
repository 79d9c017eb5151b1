//! Numerical bounds on the reliability of classical-quantum channels.
//!
//! A classical-quantum channel maps each input symbol `x` to a density
//! operator `S_x` on a finite-dimensional Hilbert space. This crate evaluates
//! converse bounds for block codes over such channels:
//!
//! - the constant-composition sphere-packing exponent `E_sp^cc(R, P)` and its
//!   Rényi-type coefficient `E_0^cc(rho, P)`,
//! - the finiteness threshold `R_inf(P)` and its composition-free variant,
//! - Marton's `theta(G, P)` and the logarithmic Lovász theta of the channel's
//!   confusability graph, together with projector representations and the
//!   purification that links the two,
//! - conditional sphere-packing bounds for state-dependent channel families,
//!   and the Elias-type machinery built on admissible auxiliary channels.
//!
//! All values are in nats. Everything is dense, deterministic given a seed,
//! and sized for desk-scale inputs (dimensions up to a few dozen).

pub mod channel;
pub mod elias;
pub mod error;
pub mod herm;
pub mod renyi;
pub mod sphere;
pub mod theta;

pub use channel::{
    check_stationary, classical_embed, composition_of, conditional_composition_of,
    confusability_graph, CQChannel, CodeBlock, Composition, ConditionalComposition,
    ConfusabilityGraph, PureStateChannel, StateSequence,
};
pub use elias::{
    code_overlap_exponent, construct_aux_channel, espu_cc, extract_subcode, gamma_check,
    mutual_information, overlap_rate_bound, weakened_bound, AuxChannel, AuxFamily,
    GammaCertificate, SpuSearchSpace, SpuValue, SubcodeSearch, SubcodeWitness, EPSILON_DEFAULT,
};
pub use error::CqError;
pub use herm::{
    eig_hermitian, frac_power, frac_power_with_tol, kron, partial_trace_second, purify,
    range_projector, DensityOperator, EigenSystem, HermitianOperator, Projector,
};
pub use renyi::{
    e0_gradient, e0_objective, minimize_from, minimize_over_density, mu, DensityObjective,
    E0Objective, LogTraceObjective, RenyiOrder, SmoothedMaxLogTrace, SolveReport, SolverConfig,
};
pub use sphere::{
    channel_fingerprint, check_cond_theorem4, check_theorem4, e0_optimal_composition, e0cc,
    e0cc_cond, espcc, espcc_cond, r_infinity, r_infinity_cond, r_infinity_global, BoundCurve,
    BoundPoint, CondChannelFamily, CurveMetadata, E0Result, EspResult, MinimaxResult,
    OptCompResult, Theorem4Check, RHO_MAX_DEFAULT,
};
pub use theta::{
    direct_sum_mix, j_functional, max_p_theta, purify_to_rank_one, theta_lovasz, theta_marton,
    theta_sp, MaxPTheta, OrthonormalRepresentation, ProjectorRepresentation, ThetaBodyPoint,
    ThetaConfig, ThetaValue,
};
