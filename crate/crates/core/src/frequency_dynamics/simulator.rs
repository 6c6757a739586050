//! Multi-machine swing model with first-order droop governors.
//!
//! Per online machine `i`, with deviations from nominal as states:
//!
//! ```text
//! (2 H_i / f_n) dΔf_i/dt = Δpm_i − (H_i/ΣH) E − H_i (Ks (θ_i − θ_c) + Kd (Δf_i − Δf_c))
//! dθ_i/dt             = 2π Δf_i
//! T_i dΔpm_i/dt       = −k_i Δf_i / f_n − Δpm_i,      k_i = (rating_i / base) / R_i
//! ```
//!
//! `E = (P_load − Σ scheduled output) / base + D Δf_c / f_n` is the electrical
//! imbalance, picked up by the machines in proportion to their inertia. The
//! synchronizing term is H-weighted so it sums to zero over the machines:
//! it moves power between machines without touching the COI, whose frequency
//! therefore obeys `(2ΣH/f_n) dΔf_c/dt = ΣΔpm − E` exactly. In steady state all
//! machines share one frequency and `Δf_c / f_n = −E_0 / β` with
//! `β = Σk_i + D`.

use std::f64::consts::PI;

use super::events::{Event, EventSchedule};
use super::FrequencyTrace;
use crate::error::{Error, Result};
use crate::grid_model::{BusId, PowerSystem};
use crate::ode::Rk4;

/// Largest accepted integration step, seconds.
pub const MAX_DT: f64 = 0.01;
/// Default integration step, seconds.
pub const DEFAULT_DT: f64 = 1e-3;

const TIME_EPS: f64 = 1e-9;

/// Parameters of the inter-machine coupling. They shape the individual
/// machine traces only; the COI response does not depend on them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsParams {
    /// Natural frequency of the inter-machine swing mode, Hz.
    pub sync_mode_hz: f64,
    /// Damping ratio of the inter-machine swing mode.
    pub sync_damping_ratio: f64,
}

impl Default for DynamicsParams {
    fn default() -> Self {
        DynamicsParams {
            sync_mode_hz: 1.5,
            sync_damping_ratio: 0.3,
        }
    }
}

#[derive(Debug, Clone)]
struct Network {
    f_n: f64,
    base: f64,
    damping: f64,
    inertia: Vec<f64>,
    gain: Vec<f64>,
    governor_tc: Vec<f64>,
    scheduled_mw: Vec<f64>,
    online: Vec<bool>,
    load_buses: Vec<BusId>,
    load_mw: Vec<f64>,
    load_total_mw: f64,
    ks: f64,
    kd: f64,
}

impl Network {
    fn machines(&self) -> usize {
        self.inertia.len()
    }

    /// (ΣH, Δf_c, θ_c) over online machines.
    fn centre(&self, y: &[f64]) -> (f64, f64, f64) {
        let m = self.machines();
        let (mut hs, mut fsum, mut thsum) = (0.0, 0.0, 0.0);
        for i in (0..m).filter(|&i| self.online[i]) {
            let h = self.inertia[i];
            hs += h;
            fsum += h * y[i];
            thsum += h * y[m + i];
        }
        (hs, fsum / hs, thsum / hs)
    }

    fn derivative(&self, y: &[f64], dy: &mut [f64]) {
        let m = self.machines();
        let (hs, dfc, thc) = self.centre(y);
        let scheduled: f64 = (0..m).filter(|&i| self.online[i]).map(|i| self.scheduled_mw[i]).sum();
        let imbalance = (self.load_total_mw - scheduled) / self.base + self.damping * dfc / self.f_n;
        for i in 0..m {
            if !self.online[i] {
                dy[i] = 0.0;
                dy[m + i] = 0.0;
                dy[2 * m + i] = 0.0;
                continue;
            }
            let h = self.inertia[i];
            let df = y[i];
            let droop = -self.gain[i] * df / self.f_n;
            let tc = self.governor_tc[i];
            let pm = if tc > 0.0 { y[2 * m + i] } else { droop };
            let sync = h * (self.ks * (y[m + i] - thc) + self.kd * (df - dfc));
            dy[i] = self.f_n / (2.0 * h) * (pm - h / hs * imbalance - sync);
            dy[m + i] = 2.0 * PI * df;
            dy[2 * m + i] = if tc > 0.0 { (droop - y[2 * m + i]) / tc } else { 0.0 };
        }
    }

    fn apply(&mut self, event: &Event, ids: &[String]) -> Result<()> {
        match event {
            Event::MachineOutage { machine } => {
                let i = ids
                    .iter()
                    .position(|id| id == machine)
                    .ok_or_else(|| Error::InvalidArgument(format!("event references unknown machine '{machine}'")))?;
                if !self.online[i] {
                    return Err(Error::InvalidArgument(format!("machine '{machine}' is already offline")));
                }
                if self.online.iter().filter(|&&o| o).count() == 1 {
                    return Err(Error::InvalidArgument(format!(
                        "outage of machine '{machine}' would leave no machine online"
                    )));
                }
                self.online[i] = false;
            }
            Event::LoadShed { bus, mw } => {
                let j = self.load_index(bus)?;
                if !(*mw >= 0.0 && mw.is_finite()) {
                    return Err(Error::InvalidArgument(format!("shed amount at bus {bus} must be >= 0")));
                }
                if *mw > self.load_mw[j] + 1e-9 {
                    return Err(Error::InvalidArgument(format!(
                        "cannot shed {mw} MW at bus {bus}: only {} MW connected",
                        self.load_mw[j]
                    )));
                }
                self.load_mw[j] = (self.load_mw[j] - mw).max(0.0);
            }
            Event::LoadStep { bus, delta_mw } => {
                let j = self.load_index(bus)?;
                if !delta_mw.is_finite() || self.load_mw[j] + delta_mw < -1e-9 {
                    return Err(Error::InvalidArgument(format!(
                        "load step of {delta_mw} MW at bus {bus} would make the load negative"
                    )));
                }
                self.load_mw[j] = (self.load_mw[j] + delta_mw).max(0.0);
            }
        }
        self.load_total_mw = self.load_mw.iter().sum();
        Ok(())
    }

    fn load_index(&self, bus: &BusId) -> Result<usize> {
        self.load_buses
            .iter()
            .position(|b| b == bus)
            .ok_or_else(|| Error::InvalidArgument(format!("event references unknown bus {bus}")))
    }
}

/// Time-stepping state of the frequency model.
#[derive(Debug, Clone)]
pub struct Simulator {
    ids: Vec<String>,
    net: Network,
    state: Vec<f64>,
    time: f64,
    rk: Rk4,
}

impl Simulator {
    /// Starts at nominal frequency with governors at their scheduled output.
    pub fn new(system: &PowerSystem, params: &DynamicsParams) -> Self {
        let f_n = system.nominal_frequency();
        let base = system.base_power();
        let ms = system.machines();
        let omega = 2.0 * PI * params.sync_mode_hz;
        let load_mw: Vec<f64> = system.loads().iter().map(|l| l.active).collect();
        let net = Network {
            f_n,
            base,
            damping: system.damping(),
            inertia: ms.iter().map(|m| m.inertia_h).collect(),
            gain: ms.iter().map(|m| m.rating / base / m.droop).collect(),
            governor_tc: ms.iter().map(|m| m.governor_tc).collect(),
            scheduled_mw: ms.iter().map(|m| m.output).collect(),
            online: ms.iter().map(|m| m.online).collect(),
            load_buses: system.loads().iter().map(|l| l.bus.clone()).collect(),
            load_total_mw: load_mw.iter().sum(),
            load_mw,
            ks: omega * omega / (PI * f_n),
            kd: 4.0 * params.sync_damping_ratio * omega / f_n,
        };
        let dim = 3 * ms.len();
        Simulator {
            ids: ms.iter().map(|m| m.id.clone()).collect(),
            net,
            state: vec![0.0; dim],
            time: 0.0,
            rk: Rk4::new(dim),
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn apply(&mut self, event: &Event) -> Result<()> {
        self.net.apply(event, &self.ids)
    }

    pub fn step(&mut self, h: f64) {
        let net = &self.net;
        self.rk.step(|y, dy| net.derivative(y, dy), &mut self.state, h);
        self.time += h;
    }

    /// COI frequency in Hz.
    pub fn coi_frequency(&self) -> f64 {
        self.net.f_n + self.net.centre(&self.state).1
    }

    /// Instantaneous df_c/dt in Hz/s evaluated from the model equations.
    pub fn coi_rocof(&self) -> f64 {
        let mut dy = vec![0.0; self.state.len()];
        self.net.derivative(&self.state, &mut dy);
        let (hs, _, _) = self.net.centre(&self.state);
        (0..self.net.machines())
            .filter(|&i| self.net.online[i])
            .map(|i| self.net.inertia[i] * dy[i])
            .sum::<f64>()
            / hs
    }

    /// Machine frequencies in Hz, NaN for offline machines.
    pub fn machine_frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.net.machines()).map(|i| {
            if self.net.online[i] {
                self.net.f_n + self.state[i]
            } else {
                f64::NAN
            }
        })
    }

    /// Connected load in MW per bus, in system order.
    pub fn loads_mw(&self) -> &[f64] {
        &self.net.load_mw
    }
}

/// Simulates `duration` seconds with the default coupling parameters.
pub fn simulate(system: &PowerSystem, events: &EventSchedule, duration: f64, dt: f64) -> Result<FrequencyTrace> {
    simulate_with(system, events, duration, dt, &DynamicsParams::default())
}

/// Fixed-step RK4 simulation sampled every `dt`. Steps are split at event
/// times so events take effect exactly when scheduled.
pub fn simulate_with(
    system: &PowerSystem,
    events: &EventSchedule,
    duration: f64,
    dt: f64,
    params: &DynamicsParams,
) -> Result<FrequencyTrace> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::InvalidArgument(format!("duration must be > 0, got {duration}")));
    }
    if !(dt > 0.0 && dt <= MAX_DT) {
        return Err(Error::InvalidArgument(format!("dt must lie in (0, {MAX_DT}] s, got {dt}")));
    }
    let mut sim = Simulator::new(system, params);

    // Reject bad events before integrating anything.
    let mut dry = sim.clone();
    for (_, e) in events.events() {
        dry.apply(e)?;
    }

    let steps = ((duration / dt).round() as usize).max(1);
    let mut trace = FrequencyTrace::empty(system, dt, steps + 1);
    trace.record(0.0, sim.coi_frequency(), sim.machine_frequencies());

    let evs = events.events();
    let mut next = 0;
    for k in 0..steps {
        let t0 = k as f64 * dt;
        let t1 = (k + 1) as f64 * dt;
        while next < evs.len() && evs[next].0 <= t0 + TIME_EPS {
            sim.apply(&evs[next].1)?;
            next += 1;
        }
        let mut t = t0;
        while next < evs.len() && evs[next].0 < t1 - TIME_EPS {
            let te = evs[next].0;
            if te > t {
                sim.step(te - t);
                t = te;
            }
            sim.apply(&evs[next].1)?;
            next += 1;
        }
        sim.step(t1 - t);
        trace.record(t1, sim.coi_frequency(), sim.machine_frequencies());
    }
    Ok(trace)
}
