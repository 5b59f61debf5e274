//! Tunnel geometry, unilateral penalty contact with regularized Coulomb
//! friction, the drill reaction model and the static-equilibrium check.

mod contact;
mod equilibrium;
mod tunnel;

pub use contact::{
    contact_force, drill_reaction, friction_force, ContactId, ContactParams, ContactState, DrillParams, Wrench,
};
pub use equilibrium::{
    solve_contact_equilibrium, static_equilibrium, ContactPoint, EquilibriumReport, SUPPORT_FORCE_TOLERANCE,
    SUPPORT_MOMENT_TOLERANCE,
};
pub use tunnel::{signed_penetration, Penetration, TunnelCrossSection};
