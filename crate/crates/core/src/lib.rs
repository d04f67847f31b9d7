//! Coded path protection: shared-protection planning, conversion to XOR
//! coding groups, coding trails, failure simulation and restoration times.

pub mod cpp;
pub mod ilp;
pub mod net;
pub mod pcycle;
pub mod resto;
pub mod scalar;
pub mod sim;
pub mod spp;
pub mod trail;

/// Restoration-time types at double precision.
pub type RtParams64 = resto::RtParams<f64>;
pub type RtReport64 = resto::RtReport<f64>;
pub type WorstCase64 = resto::WorstCase<f64>;

/// Exact LP arithmetic for the ILP solver.
pub type Rational = num_rational::BigRational;
