//! Vietoris–Rips persistence over Z/2 and Betti numbers.

pub mod filtration;
pub mod oracle;
pub mod persistence;
pub mod profile;

pub use filtration::{build_vr_filtration, build_vr_filtration_with_budget, Filtration, Simplex};
pub use oracle::brute_force_betti;
pub use persistence::{
    betti_at_scale, betti_at_scale_robust, reduce_boundary_matrix, BettiVector, Interval, PersistenceDiagram,
};
pub use profile::{betti_profile, BettiConfig, BettiProfile};
