//! Rotation numbers, continued fractions, linearization and the family
//! equation used by the perfectness decomposition.

mod cf;
mod family;
mod linearize;
mod number;

pub use cf::{continued_fraction, convergent_denominators, noble, DiophantineParams};
pub use family::{
    pick_t0, scan, solve_family, FamilySolution, FamilySolver, PickedT0, ScanConfig, ScanResult, SolveParams,
};
pub use linearize::{linearize, LinearizationResult, LinearizeParams, Method};
pub use number::{
    orbit_displacements, plain_rotation_number, rotation_number, weighted_average, RotationEstimate,
};
