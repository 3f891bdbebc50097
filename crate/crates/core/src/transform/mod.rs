//! The forward map from source laws to positive variables `T` with all
//! moments finite, its explicit inverse, and the checks tying them together.

mod checks;
mod inverse;
mod phi;
mod tdist;

pub use checks::{
    centering_identity, invariance_check, landing_check, roundtrip, weighted_identity, CenteringReport, IdentityRow,
    InvarianceReport, LandingReport, RoundtripReport, INVARIANCE_GRID, ROUNDTRIP_GRID,
};
pub use inverse::{c_t, phi_inverse, phi_inverse_parts, InverseParts};
pub use phi::{phi, PHI_MOMENTS};
pub use tdist::{CdfLaw, DensityLaw, MixtureComponent, TDist, TDistSpec, TForm};
