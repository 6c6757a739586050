use crate::error::{Error, Result};
use crate::grid_model::BusId;

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    /// Trip a machine: its output and its inertia leave the system.
    MachineOutage { machine: String },
    /// Disconnect `mw` of the load at `bus`.
    LoadShed { bus: BusId, mw: f64 },
    /// Change the load at `bus` by `delta_mw` (negative to reduce).
    LoadStep { bus: BusId, delta_mw: f64 },
}

impl Event {
    pub fn outage(machine: impl Into<String>) -> Self {
        Event::MachineOutage { machine: machine.into() }
    }

    pub fn shed(bus: impl Into<BusId>, mw: f64) -> Self {
        Event::LoadShed { bus: bus.into(), mw }
    }
}

/// Timed events, kept in non-decreasing time order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventSchedule {
    events: Vec<(f64, Event)>,
}

impl EventSchedule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_events(events: Vec<(f64, Event)>) -> Result<Self> {
        let mut s = Self::new();
        for (t, e) in events {
            s.push(t, e)?;
        }
        Ok(s)
    }

    /// Appends an event; times must be finite, non-negative and non-decreasing.
    pub fn push(&mut self, time: f64, event: Event) -> Result<()> {
        if !(time >= 0.0 && time.is_finite()) {
            return Err(Error::InvalidArgument(format!("event time must be >= 0, got {time}")));
        }
        if let Some(&(last, _)) = self.events.last() {
            if time < last {
                return Err(Error::InvalidArgument(format!(
                    "event at t={time} s precedes the previous event at t={last} s"
                )));
            }
        }
        self.events.push((time, event));
        Ok(())
    }

    /// Same schedule plus one more event, inserted after any events at the same time.
    pub fn with(&self, time: f64, event: Event) -> Result<Self> {
        let mut events = self.events.clone();
        let pos = events.partition_point(|(t, _)| *t <= time);
        events.insert(pos, (time, event));
        Self::from_events(events)
    }

    pub fn events(&self) -> &[(f64, Event)] {
        &self.events
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Time of the first event.
    pub fn start(&self) -> Option<f64> {
        self.events.first().map(|(t, _)| *t)
    }
}
