//! Helmholtz Green's functions from Lefschetz thimbles of the einbein
//! proper-time integral.

pub mod action;
pub mod asymptotics;
pub mod critical;
pub mod error;
pub mod export;
pub mod laurent;
pub mod model;
pub mod monodromy;
pub mod pade;
pub mod poly;
pub mod quadrature;
pub mod thimble;

pub use action::{
    build_action, hamilton_jacobi_residual, schrodinger_residual, spatial_gradient, ActionTerm,
    EinbeinAction, Factor, Prefactor, Wavefunction, C64,
};
pub use critical::{
    caustic_locus, find_critical_points, ghost_source_locus, nearby_pole_cusp, CausticClassification,
    CausticType, CriticalPoint, Region, Zone,
};
pub use error::{Error, Result};
pub use laurent::{laurent_ghost_pole, laurent_point_source, LaurentSeries};
pub use pade::{fit_rational, riemann_hurwitz_count, RationalApproximant};
pub use model::{ProblemSpec, RefractionModel, SourceSpec};
pub use quadrature::{field_at, field_grid, oracle_field, thimble_field, Contribution, FieldOptions, FieldSample, TopologyCache};
pub use thimble::{ContourClass, Decomposition, Thimble};
pub use monodromy::{LoopParameter, MonodromyMatrix, ParameterLoop};
pub use asymptotics::{airy, airy_uniform, arrival_times, lambda_map, stationary_phase, Arrival, LambdaMap, UniformExpansion};
