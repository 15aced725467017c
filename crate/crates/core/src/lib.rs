//! Expected connected components of the Ross random graph.
//!
//! A population of n people occupies the nodes of a random graph in which
//! every node i draws one contact X_i ~ p; the expected number of
//! connected components E_C(p) is the expected minimum number of initially
//! infected people needed to reach everyone. This crate computes E_C
//! exactly and by simulation, follows majorization flow through total
//! variation balls, and certifies with interval arithmetic the constants
//! behind the Lipschitz continuity bounds
//!
//! ```text
//! kappa_lower(n)  <=  optimal Lipschitz constant of E_C  <=  3 + mu sqrt(n-2)
//! ```
//!
//! where mu is the maximum of x - x^2 M(x) over x >= 0 and M is the Mills
//! ratio of the standard normal distribution.

pub mod bounds;
pub mod components;
pub mod dist;
mod erf;
pub mod error;
pub mod flow;
pub mod graph;
pub mod interval;
pub mod mills;

pub use bounds::{
    bound_curve, certified_constants, certified_maximum, extremal_family, lipschitz_lower,
    lipschitz_lower_tail, lipschitz_report, lipschitz_upper, series_coefficient, series_sum,
    series_upper_bounds, sweep_bound_curve, upper_bound_check, verify_chain, BoundParams,
    BoundSweep, ChainCheck, ChainReport, LipschitzReport,
};
pub use components::{
    expected_components, expected_components_bruteforce, flow_derivative, flow_derivative_upper,
    SymmetricAccumulator,
};
pub use dist::{
    majorizes, random_majorization_pair, random_prob_vector, sample_in_tv_ball, tv_distance,
    ProbVector, SortedProbView, TVRadius,
};
pub use error::{Error, Result};
pub use flow::{flow_bound, flow_derivative_numeric, flow_difference, minimal_element, FlowPoint};
pub use graph::{
    component_representatives, count_components, epidemic_spread, expected_components_exhaustive,
    mc_expected_components, min_seeds, sample_graph, sample_graph_stream, GraphRealization,
    McEstimate,
};
pub use interval::{
    interval_mills, interval_newton, interval_objective, interval_objective_prime,
    interval_objective_second, maximize_objective, Interval, MaximizeReport, RootEnclosure,
    SignClass, DEFAULT_ERFC_ULPS,
};
pub use mills::{
    derivative_identity_residual, mills_ratio, objective, objective_prime, objective_second,
    MillsEval,
};
