//! Characteristic functions of load coalitions, generated by simulation.
//!
//! For every coalition S the disturbance is simulated twice:
//!
//! * with every load of S fully shed `shed_delay` seconds after the disturbance;
//!   the Δf worth is the final COI frequency minus that of the no-shedding run;
//! * with the shed coincident with the disturbance; the ROCOF worth is the
//!   initial COI ROCOF minus that of the no-shedding run (positive: shedding
//!   makes the initial frequency decline shallower).
//!
//! The empty coalition is the no-shedding run itself, so both worths are 0.

use rayon::prelude::*;

use super::events::{Event, EventSchedule};
use super::simulator::{simulate_with, DynamicsParams, DEFAULT_DT};
use super::{initial_rocof, DEFAULT_ROCOF_WINDOW};
use crate::coalition_game::{Coalition, CoalitionGame, MAX_PLAYERS};
use crate::error::{Error, Result};
use crate::grid_model::{BusId, PowerSystem};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicOptions {
    /// Delay between the disturbance and the shed in the Δf runs, s.
    pub shed_delay: f64,
    /// Simulated time after the disturbance in the Δf runs, s.
    pub settle_time: f64,
    pub dt: f64,
    pub rocof_window: f64,
    pub params: DynamicsParams,
}

impl Default for CharacteristicOptions {
    fn default() -> Self {
        CharacteristicOptions {
            shed_delay: 2.0,
            settle_time: 40.0,
            dt: DEFAULT_DT,
            rocof_window: DEFAULT_ROCOF_WINDOW,
            params: DynamicsParams::default(),
        }
    }
}

/// (Δf game, ROCOF game) over `candidates` with default options.
pub fn characteristic_functions(
    system: &PowerSystem,
    candidates: &[BusId],
    disturbance: &EventSchedule,
) -> Result<(CoalitionGame, CoalitionGame)> {
    characteristic_functions_with(system, candidates, disturbance, &CharacteristicOptions::default())
}

pub fn characteristic_functions_with(
    system: &PowerSystem,
    candidates: &[BusId],
    disturbance: &EventSchedule,
    opts: &CharacteristicOptions,
) -> Result<(CoalitionGame, CoalitionGame)> {
    let n = candidates.len();
    if n == 0 {
        return Err(Error::InvalidArgument("at least one candidate bus required".into()));
    }
    if n > MAX_PLAYERS {
        return Err(Error::Capacity {
            what: "characteristic-function generation",
            max: MAX_PLAYERS,
            got: n,
        });
    }
    let mut shed_mw = Vec::with_capacity(n);
    for (i, bus) in candidates.iter().enumerate() {
        if candidates[..i].contains(bus) {
            return Err(Error::InvalidArgument(format!("candidate bus {bus} listed twice")));
        }
        let load = system
            .load(bus)
            .ok_or_else(|| Error::Validation(format!("candidate bus {bus} has no load")))?;
        if !load.sheddable {
            return Err(Error::Validation(format!("candidate bus {bus} is not sheddable")));
        }
        shed_mw.push(load.active);
    }
    let t_d = disturbance
        .start()
        .ok_or_else(|| Error::InvalidArgument("disturbance schedule is empty".into()))?;
    if !(opts.shed_delay >= 0.0) {
        return Err(Error::InvalidArgument("shed delay must be >= 0".into()));
    }

    let schedule = |c: Coalition, at: f64| -> Result<EventSchedule> {
        c.members().try_fold(disturbance.clone(), |s, i| {
            s.with(at, Event::shed(candidates[i].clone(), shed_mw[i]))
        })
    };
    let evaluate = |bits: u32| -> Result<(f64, f64)> {
        let c = Coalition::from_bits(bits);
        let settled = simulate_with(
            system,
            &schedule(c, t_d + opts.shed_delay)?,
            t_d + opts.settle_time,
            opts.dt,
            &opts.params,
        )?;
        let early = simulate_with(
            system,
            &schedule(c, t_d)?,
            t_d + opts.rocof_window + opts.dt,
            opts.dt,
            &opts.params,
        )?;
        Ok((settled.steady_state(), initial_rocof(&early, t_d, opts.rocof_window)?))
    };

    let runs: Vec<(f64, f64)> = (0..1u32 << n).into_par_iter().map(evaluate).collect::<Result<_>>()?;
    let (f_base, r_base) = runs[0];
    let deltaf = CoalitionGame::new(candidates.to_vec(), runs.iter().map(|(f, _)| f - f_base).collect())?;
    let rocof = CoalitionGame::new(candidates.to_vec(), runs.iter().map(|(_, r)| r - r_base).collect())?;
    Ok((deltaf, rocof))
}
