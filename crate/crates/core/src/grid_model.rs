//! Power-system data model and the system file format.
//!
//! A system file is TOML with physical units throughout:
//!
//! ```toml
//! base_mva = 100.0
//! nominal_frequency_hz = 60.0
//! damping_pu = 0.0            # optional, default 0
//!
//! [[machines]]
//! id = 1                      # integer or string
//! inertia_h_s = 23.64         # on the system base
//! rating_mva = 247.5
//! droop_pu = 0.05             # optional, default 0.05
//! governor_tc_s = 0.5         # optional, default 0.5
//! output_mw = 67.0
//! online = true               # optional, default true
//!
//! [[loads]]
//! bus = 5                     # integer or string
//! active_mw = 125.0
//! reactive_mvar = 50.0        # optional, default 0
//! sheddable = true            # optional, default true
//! priority = false            # optional, default false
//! ```
//!
//! Any other tables (lines, transformers, ...) are accepted and ignored.

use std::cmp::Ordering;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

/// Default per-unit speed regulation when a machine does not specify one.
pub const DEFAULT_DROOP_PU: f64 = 0.05;
/// Default first-order governor lag in seconds.
pub const DEFAULT_GOVERNOR_TC_S: f64 = 0.5;

/// The bundled WECC 3-machine 9-bus system file.
pub const WECC9_TOML: &str = include_str!("../fixtures/wecc9.toml");
/// Path of the bundled WECC 9-bus system file, relative to the workspace root.
pub const WECC9_PATH: &str = "crates/core/fixtures/wecc9.toml";

/// Parsed WECC 9-bus fixture.
pub fn wecc9() -> PowerSystem {
    PowerSystem::from_toml_str(WECC9_TOML).expect("bundled WECC 9-bus fixture is valid")
}

/// Load bus identifier.
///
/// Ordering is numeric when both ids are integers and lexicographic otherwise,
/// so bus "8" sorts before bus "10".
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct BusId(String);

impl BusId {
    pub fn new(id: impl Into<String>) -> Self {
        BusId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn numeric(&self) -> Option<u64> {
        self.0.parse().ok()
    }
}

impl Ord for BusId {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.numeric(), other.numeric()) {
            (Some(a), Some(b)) => a.cmp(&b).then_with(|| self.0.cmp(&other.0)),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => self.0.cmp(&other.0),
        }
    }
}

impl PartialOrd for BusId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for BusId {
    fn from(s: &str) -> Self {
        BusId(s.to_owned())
    }
}

impl From<u32> for BusId {
    fn from(n: u32) -> Self {
        BusId(n.to_string())
    }
}

impl std::str::FromStr for BusId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Parse("empty bus id".into()));
        }
        Ok(BusId(s.to_owned()))
    }
}

impl<'de> Deserialize<'de> for BusId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        id_from_str_or_int(d).map(BusId)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum StrOrInt {
    Str(String),
    Int(i64),
}

fn id_from_str_or_int<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<String, D::Error> {
    Ok(match StrOrInt::deserialize(d)? {
        StrOrInt::Str(s) => s,
        StrOrInt::Int(n) => n.to_string(),
    })
}

fn default_droop() -> f64 {
    DEFAULT_DROOP_PU
}

fn default_governor_tc() -> f64 {
    DEFAULT_GOVERNOR_TC_S
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Machine {
    #[serde(deserialize_with = "id_from_str_or_int")]
    pub id: String,
    /// Inertia constant H in seconds, on the system base.
    #[serde(rename = "inertia_h_s")]
    pub inertia_h: f64,
    #[serde(rename = "rating_mva")]
    pub rating: f64,
    /// Per-unit speed regulation R on the machine rating.
    #[serde(rename = "droop_pu", default = "default_droop")]
    pub droop: f64,
    #[serde(rename = "governor_tc_s", default = "default_governor_tc")]
    pub governor_tc: f64,
    /// Initial output in MW.
    #[serde(rename = "output_mw")]
    pub output: f64,
    #[serde(default = "default_true")]
    pub online: bool,
}

impl Machine {
    /// A machine with default droop and governor lag, online.
    pub fn new(id: impl Into<String>, inertia_h: f64, rating: f64, output: f64) -> Self {
        Machine {
            id: id.into(),
            inertia_h,
            rating,
            droop: DEFAULT_DROOP_PU,
            governor_tc: DEFAULT_GOVERNOR_TC_S,
            output,
            online: true,
        }
    }

    fn validate(&self) -> Result<()> {
        let fail = |what: &str| Err(Error::Validation(format!("machine '{}': {what}", self.id)));
        if self.id.is_empty() {
            return Err(Error::Validation("machine id must not be empty".into()));
        }
        if !(self.inertia_h > 0.0 && self.inertia_h.is_finite()) {
            return fail("inertia_h must be > 0");
        }
        if !(self.rating > 0.0 && self.rating.is_finite()) {
            return fail("rating must be > 0");
        }
        if !(self.droop > 0.0 && self.droop.is_finite()) {
            return fail("droop must be > 0");
        }
        if !(self.governor_tc >= 0.0 && self.governor_tc.is_finite()) {
            return fail("governor_tc must be >= 0");
        }
        if !(self.output >= 0.0 && self.output <= self.rating) {
            return fail("output must lie in [0, rating]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadPoint {
    pub bus: BusId,
    #[serde(rename = "active_mw")]
    pub active: f64,
    /// Carried through file round trips; the frequency model ignores it.
    #[serde(rename = "reactive_mvar", default)]
    pub reactive: f64,
    #[serde(default = "default_true")]
    pub sheddable: bool,
    /// Priority loads are never candidates for shedding.
    #[serde(default)]
    pub priority: bool,
}

impl LoadPoint {
    pub fn new(bus: impl Into<BusId>, active: f64) -> Self {
        LoadPoint {
            bus: bus.into(),
            active,
            reactive: 0.0,
            sheddable: true,
            priority: false,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SystemFile {
    base_mva: f64,
    nominal_frequency_hz: f64,
    #[serde(default)]
    damping_pu: f64,
    #[serde(default)]
    machines: Vec<Machine>,
    #[serde(default)]
    loads: Vec<LoadPoint>,
}

/// A validated power system. Immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSystem {
    machines: Vec<Machine>,
    loads: Vec<LoadPoint>,
    nominal_frequency: f64,
    base_power: f64,
    damping: f64,
}

impl PowerSystem {
    /// Validates and builds a system. Priority loads are forced non-sheddable.
    pub fn new(
        machines: Vec<Machine>,
        mut loads: Vec<LoadPoint>,
        nominal_frequency: f64,
        base_power: f64,
        damping: f64,
    ) -> Result<Self> {
        if !(nominal_frequency > 0.0 && nominal_frequency.is_finite()) {
            return Err(Error::Validation("nominal_frequency must be > 0".into()));
        }
        if !(base_power > 0.0 && base_power.is_finite()) {
            return Err(Error::Validation("base_power must be > 0".into()));
        }
        if !(damping >= 0.0 && damping.is_finite()) {
            return Err(Error::Validation("damping must be >= 0".into()));
        }
        if machines.is_empty() {
            return Err(Error::Validation("at least one machine required".into()));
        }
        for m in &machines {
            m.validate()?;
        }
        if !machines.iter().any(|m| m.online) {
            return Err(Error::Validation("at least one online machine required".into()));
        }
        for (i, m) in machines.iter().enumerate() {
            if machines[..i].iter().any(|o| o.id == m.id) {
                return Err(Error::Validation(format!("duplicate machine id '{}'", m.id)));
            }
        }
        for (i, l) in loads.iter().enumerate() {
            if !(l.active >= 0.0 && l.active.is_finite()) {
                return Err(Error::Validation(format!("load at bus {}: active must be >= 0", l.bus)));
            }
            if loads[..i].iter().any(|o| o.bus == l.bus) {
                return Err(Error::Validation(format!("duplicate load bus '{}'", l.bus)));
            }
        }
        for l in loads.iter_mut().filter(|l| l.priority) {
            l.sheddable = false;
        }
        Ok(PowerSystem {
            machines,
            loads,
            nominal_frequency,
            base_power,
            damping,
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: SystemFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        PowerSystem::new(
            file.machines,
            file.loads,
            file.nominal_frequency_hz,
            file.base_mva,
            file.damping_pu,
        )
    }

    pub fn to_toml_string(&self) -> String {
        let file = SystemFile {
            base_mva: self.base_power,
            nominal_frequency_hz: self.nominal_frequency,
            damping_pu: self.damping,
            machines: self.machines.clone(),
            loads: self.loads.clone(),
        };
        toml::to_string(&file).expect("system data is always representable as TOML")
    }

    pub fn machines(&self) -> &[Machine] {
        &self.machines
    }

    pub fn loads(&self) -> &[LoadPoint] {
        &self.loads
    }

    /// f_n in Hz.
    pub fn nominal_frequency(&self) -> f64 {
        self.nominal_frequency
    }

    /// System base in MVA.
    pub fn base_power(&self) -> f64 {
        self.base_power
    }

    /// Load-frequency damping D in per unit.
    pub fn damping(&self) -> f64 {
        self.damping
    }

    pub fn machine(&self, id: &str) -> Option<&Machine> {
        self.machines.iter().find(|m| m.id == id)
    }

    pub fn load(&self, bus: &BusId) -> Option<&LoadPoint> {
        self.loads.iter().find(|l| &l.bus == bus)
    }

    pub fn online_machines(&self) -> impl Iterator<Item = &Machine> {
        self.machines.iter().filter(|m| m.online)
    }

    /// ΣH over online machines, in seconds.
    pub fn total_inertia(&self) -> f64 {
        self.online_machines().map(|m| m.inertia_h).sum()
    }

    /// Frequency-response characteristic β = Σ(rating/base)/R + D over online
    /// machines, in per unit power per per unit frequency.
    pub fn frequency_response(&self) -> f64 {
        self.online_machines()
            .map(|m| m.rating / self.base_power / m.droop)
            .sum::<f64>()
            + self.damping
    }

    pub fn total_load_mw(&self) -> f64 {
        self.loads.iter().map(|l| l.active).sum()
    }

    pub fn total_generation_mw(&self) -> f64 {
        self.online_machines().map(|m| m.output).sum()
    }

    /// Copy of the system with one machine taken offline, as it stands after
    /// the machine trips.
    pub fn with_machine_offline(&self, id: &str) -> Result<Self> {
        let mut machines = self.machines.clone();
        let m = machines
            .iter_mut()
            .find(|m| m.id == id)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown machine '{id}'")))?;
        m.online = false;
        PowerSystem::new(
            machines,
            self.loads.clone(),
            self.nominal_frequency,
            self.base_power,
            self.damping,
        )
    }
}

/// Sum of inertia constants over online machines.
pub fn total_inertia(system: &PowerSystem) -> f64 {
    system.total_inertia()
}

/// Reads and validates a system file.
pub fn load_system(path: impl AsRef<Path>) -> Result<PowerSystem> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    PowerSystem::from_toml_str(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}
