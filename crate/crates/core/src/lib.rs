//! Cooperative-game under-frequency load shedding.
//!
//! The crate is organised along the two stages of the scheme:
//!
//! * [`frequency_dynamics`] simulates the center-of-inertia (COI) frequency of a
//!   multi-machine system, measures the initial rate of change of frequency
//!   (ROCOF) after a disturbance and turns it into a disturbance power
//!   `P_d = 2 ΣH · |df_c/dt| / f_n`. It also generates the characteristic
//!   functions of load coalitions by simulation.
//! * [`coalition_game`] holds the cooperative-game machinery: coalitions as
//!   bitmasks, exact Shapley values, the equivalent (averaged) Shapley value of
//!   the Δf and ROCOF games, and core membership.
//! * [`ufls_planner`] turns `P_d` and the equivalent Shapley values into per-bus
//!   shed amounts using distribution factors and total-preserving rounding.
//!
//! [`grid_model`] provides the system data model, the system file format and the
//! bundled WECC 3-machine 9-bus fixture.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coalition_game;
mod error;
pub mod frequency_dynamics;
pub mod grid_model;
pub mod ode;
pub mod ufls_planner;

pub use coalition_game::{
    enumerate_coalitions, equivalent_shapley, in_core, shapley_permutation_oracle,
    shapley_values, Allocation, CharacteristicTable, Coalition, CoalitionGame, ShapleyResult,
};
pub use error::{Error, Result};
pub use frequency_dynamics::{
    characteristic_functions, coi_frequency, disturbance_power, initial_rocof, simulate,
    CharacteristicOptions, DisturbanceEstimate, DynamicsParams, Event, EventSchedule,
    FrequencyTrace,
};
pub use grid_model::{load_system, BusId, LoadPoint, Machine, PowerSystem};
pub use ufls_planner::{allocate, distribution_factors, plan_from_measurement, PlanEntry, SheddingPlan};
