//! Frequency dynamics: COI frequency, ROCOF measurement, disturbance power,
//! and simulation of the system response to outages and load shedding.

mod characteristic;
mod events;
mod simulator;

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::grid_model::PowerSystem;

pub use characteristic::{characteristic_functions, characteristic_functions_with, CharacteristicOptions};
pub use events::{Event, EventSchedule};
pub use simulator::{simulate, simulate_with, DynamicsParams, Simulator, DEFAULT_DT, MAX_DT};

/// Default least-squares window for the initial ROCOF, seconds.
pub const DEFAULT_ROCOF_WINDOW: f64 = 0.1;

/// Inertia-weighted mean frequency Σ H_i f_i / Σ H_i.
pub fn coi_frequency(freqs: &[f64], inertias: &[f64]) -> Result<f64> {
    if freqs.is_empty() {
        return Err(Error::InvalidArgument("COI frequency needs at least one machine".into()));
    }
    if freqs.len() != inertias.len() {
        return Err(Error::InvalidArgument(format!(
            "{} frequencies but {} inertias",
            freqs.len(),
            inertias.len()
        )));
    }
    if let Some(h) = inertias.iter().find(|h| !(**h > 0.0)) {
        return Err(Error::InvalidArgument(format!("inertia must be > 0, got {h}")));
    }
    // Weighted mean of offsets from the first machine: identical inputs come back exactly.
    let reference = freqs[0];
    let num: f64 = freqs.iter().zip(inertias).map(|(f, h)| h * (f - reference)).sum();
    let den: f64 = inertias.iter().sum();
    Ok(reference + num / den)
}

/// Generation deficit in MW implied by a COI ROCOF: `2 ΣH |df_c/dt| / f_n · base`.
pub fn disturbance_power(rocof: f64, total_inertia: f64, f_n: f64, base: f64) -> Result<f64> {
    if !(f_n > 0.0) {
        return Err(Error::InvalidArgument(format!("nominal frequency must be > 0, got {f_n}")));
    }
    if !(total_inertia > 0.0) {
        return Err(Error::InvalidArgument(format!("total inertia must be > 0, got {total_inertia}")));
    }
    if !(base > 0.0) {
        return Err(Error::InvalidArgument(format!("base power must be > 0, got {base}")));
    }
    if !rocof.is_finite() {
        return Err(Error::InvalidArgument(format!("ROCOF must be finite, got {rocof}")));
    }
    Ok(2.0 * total_inertia * rocof.abs() / f_n * base)
}

/// COI ROCOF in Hz/s immediately after a power imbalance of `imbalance_mw`
/// (positive for a deficit), before any governor has moved.
pub fn instantaneous_rocof(imbalance_mw: f64, total_inertia: f64, f_n: f64, base: f64) -> f64 {
    -imbalance_mw / base * f_n / (2.0 * total_inertia)
}

/// First-stage result: the measured ROCOF and the deficit it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceEstimate {
    /// df_c/dt at detection, Hz/s.
    pub rocof: f64,
    /// ΣH of the machines still online, s.
    pub total_inertia: f64,
    /// Disturbance power P_d, MW.
    pub p_d: f64,
    /// Δp_i = 2 H_i |df_c/dt| / f_n · base per online machine, MW. Sums to `p_d`.
    pub per_machine_dp: Vec<f64>,
}

impl DisturbanceEstimate {
    /// Builds the estimate for a measured ROCOF on the post-event system.
    pub fn from_rocof(rocof: f64, system: &PowerSystem) -> Result<Self> {
        let f_n = system.nominal_frequency();
        let base = system.base_power();
        let total_inertia = system.total_inertia();
        let p_d = disturbance_power(rocof, total_inertia, f_n, base)?;
        let per_machine_dp = system
            .online_machines()
            .map(|m| 2.0 * m.inertia_h * rocof.abs() / f_n * base)
            .collect();
        Ok(DisturbanceEstimate {
            rocof,
            total_inertia,
            p_d,
            per_machine_dp,
        })
    }
}

/// Least-squares slope of the COI frequency over `[event_time, event_time + window]`.
pub fn initial_rocof(trace: &FrequencyTrace, event_time: f64, window: f64) -> Result<f64> {
    if !(window > trace.dt) {
        return Err(Error::InvalidArgument(format!(
            "ROCOF window {window} s must exceed the trace step {} s",
            trace.dt
        )));
    }
    let last = trace.time.last().copied().unwrap_or(0.0);
    let eps = 1e-9;
    if !(event_time >= -eps) || event_time + window > last + eps {
        return Err(Error::InvalidArgument(format!(
            "ROCOF window [{event_time}, {}] s lies outside the trace [0, {last}] s",
            event_time + window
        )));
    }
    let (lo, hi) = (event_time - eps, event_time + window + eps);
    let pts: Vec<(f64, f64)> = trace
        .time
        .iter()
        .zip(&trace.coi_frequency)
        .filter(|(t, _)| **t >= lo && **t <= hi)
        .map(|(t, f)| (*t, *f))
        .collect();
    // Centre both coordinates before forming the normal equation.
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let fm = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, f) in &pts {
        sxy += (t - tm) * (f - fm);
        sxx += (t - tm) * (t - tm);
    }
    Ok(sxy / sxx)
}

/// Sampled frequencies on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTrace {
    pub dt: f64,
    pub nominal_frequency: f64,
    pub time: Vec<f64>,
    pub machine_ids: Vec<String>,
    pub inertias: Vec<f64>,
    /// `machine_frequency[i][k]`: machine `i` at sample `k`, Hz. NaN while offline.
    pub machine_frequency: Vec<Vec<f64>>,
    pub coi_frequency: Vec<f64>,
}

impl FrequencyTrace {
    fn empty(system: &PowerSystem, dt: f64, capacity: usize) -> Self {
        let ms = system.machines();
        FrequencyTrace {
            dt,
            nominal_frequency: system.nominal_frequency(),
            time: Vec::with_capacity(capacity),
            machine_ids: ms.iter().map(|m| m.id.clone()).collect(),
            inertias: ms.iter().map(|m| m.inertia_h).collect(),
            machine_frequency: vec![Vec::with_capacity(capacity); ms.len()],
            coi_frequency: Vec::with_capacity(capacity),
        }
    }

    fn record(&mut self, t: f64, coi: f64, machines: impl Iterator<Item = f64>) {
        self.time.push(t);
        self.coi_frequency.push(coi);
        for (series, f) in self.machine_frequency.iter_mut().zip(machines) {
            series.push(f);
        }
    }

    /// A trace with only a COI series, sampled from t = 0 every `dt`.
    pub fn from_coi(dt: f64, nominal_frequency: f64, coi: Vec<f64>) -> Self {
        FrequencyTrace {
            dt,
            nominal_frequency,
            time: (0..coi.len()).map(|k| k as f64 * dt).collect(),
            machine_ids: vec![],
            inertias: vec![],
            machine_frequency: vec![],
            coi_frequency: coi,
        }
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    /// Final COI frequency, Hz.
    pub fn steady_state(&self) -> f64 {
        *self.coi_frequency.last().expect("trace has at least one sample")
    }

    /// (time, frequency) of the lowest COI sample.
    pub fn nadir(&self) -> (f64, f64) {
        self.time
            .iter()
            .zip(&self.coi_frequency)
            .fold((0.0, f64::INFINITY), |best, (&t, &f)| if f < best.1 { (t, f) } else { best })
    }

    /// COI frequency at the sample nearest to `t`.
    pub fn coi_at(&self, t: f64) -> f64 {
        let k = ((t / self.dt).round().max(0.0) as usize).min(self.len() - 1);
        self.coi_frequency[k]
    }

    /// CSV with header `time_s,f_coi_hz,f_<id>_hz,...` and six decimals.
    /// Offline machines leave their field empty.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "time_s,f_coi_hz")?;
        for id in &self.machine_ids {
            write!(w, ",f_{id}_hz")?;
        }
        writeln!(w)?;
        for k in 0..self.len() {
            write!(w, "{:.6},{:.6}", self.time[k], self.coi_frequency[k])?;
            for series in &self.machine_frequency {
                let f = series[k];
                if f.is_nan() {
                    write!(w, ",")?;
                } else {
                    write!(w, ",{f:.6}")?;
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}
