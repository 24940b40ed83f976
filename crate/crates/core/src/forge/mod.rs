//! Test sets: Cantor products with their parameter planner and Harnack chain,
//! plus comparison families.

mod cantor;
mod chain;
mod family;
mod plan;

pub use cantor::{cantor_set, CantorSet, CantorSpec, Gap};
pub use chain::{harnack_chain_bound, HarnackChain};
pub use family::{family, FamilyParams, FAMILY_NAMES};
pub use plan::{plan_cantor, rho_from_delta, CantorPlan};
