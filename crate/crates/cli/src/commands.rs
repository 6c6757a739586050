use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ufls_core::coalition_game::equivalent_shapley_weighted;
use ufls_core::frequency_dynamics::characteristic_functions_with;
use ufls_core::{
    allocate, initial_rocof, plan_from_measurement, simulate, BusId, CharacteristicOptions, CharacteristicTable,
    CoalitionGame, Event, EventSchedule, FrequencyTrace, PowerSystem, ShapleyResult, SheddingPlan,
};

use crate::config::{CharfunSource, CliError, CliResult, Outage, PowerSpec, Scenario};

/// Final COI frequency within this band of nominal counts as recovered, Hz.
const RECOVERY_BAND_HZ: f64 = 0.05;

fn write_output(sc: &Scenario, name: &str, contents: &str) -> CliResult<PathBuf> {
    fs::create_dir_all(&sc.out).map_err(|e| CliError::io(&sc.out, e))?;
    let path = sc.out.join(name);
    fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

fn require_outage(sc: &Scenario) -> CliResult<&Outage> {
    sc.outage
        .as_ref()
        .ok_or_else(|| CliError::Usage("this command needs --outage <machine>@<time>".into()))
}

fn outage_schedule(out: &Outage) -> CliResult<EventSchedule> {
    Ok(EventSchedule::from_events(vec![(out.time, Event::outage(out.machine.clone()))])?)
}

fn load_table(path: &Path) -> CliResult<(String, CharacteristicTable)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let table = CharacteristicTable::parse(&text).map_err(|e| match e {
        ufls_core::Error::Parse(msg) => ufls_core::Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    Ok((text, table))
}

/// (Δf game, ROCOF game, canonical or verbatim file text).
fn games(sc: &Scenario) -> CliResult<(CoalitionGame, CoalitionGame, String)> {
    match &sc.source {
        CharfunSource::File(path) => {
            let (text, table) = load_table(path)?;
            let players = if sc.candidates.is_empty() {
                table.players().to_vec()
            } else {
                sc.candidates.clone()
            };
            let (df, rc) = table.to_games(&players)?;
            Ok((df, rc, text))
        }
        CharfunSource::Simulate => {
            let schedule = outage_schedule(require_outage(sc)?)?;
            let candidates: Vec<BusId> = if sc.candidates.is_empty() {
                sc.system.loads().iter().filter(|l| l.sheddable).map(|l| l.bus.clone()).collect()
            } else {
                sc.candidates.clone()
            };
            let opts = CharacteristicOptions {
                shed_delay: sc.shed_delay,
                dt: sc.dt,
                rocof_window: sc.rocof_window,
                ..Default::default()
            };
            let (df, rc) = characteristic_functions_with(&sc.system, &candidates, &schedule, &opts)?;
            let text = CharacteristicTable::render(&df, &rc)?;
            Ok((df, rc, text))
        }
    }
}

fn shapley_of(sc: &Scenario) -> CliResult<ShapleyResult> {
    let (df, rc, _) = games(sc)?;
    Ok(equivalent_shapley_weighted(&df, &rc, sc.eqv_weight)?)
}

fn load_caps(system: &PowerSystem, buses: &[BusId]) -> CliResult<Vec<f64>> {
    buses
        .iter()
        .map(|bus| match system.load(bus) {
            Some(l) if l.sheddable => Ok(l.active),
            Some(_) => Err(ufls_core::Error::Validation(format!("bus {bus} is not sheddable")).into()),
            None => Err(ufls_core::Error::Validation(format!("bus {bus} has no load")).into()),
        })
        .collect()
}

/// Measured ROCOF after the outage and the post-outage system.
fn measure(sc: &Scenario, out: &Outage, trace: Option<&FrequencyTrace>) -> CliResult<(f64, PowerSystem)> {
    let owned;
    let trace = match trace {
        Some(t) => t,
        None => {
            owned = simulate(&sc.system, &outage_schedule(out)?, out.time + sc.rocof_window + 2.0 * sc.dt, sc.dt)?;
            &owned
        }
    };
    let rocof = initial_rocof(trace, out.time, sc.rocof_window)?;
    Ok((rocof, sc.system.with_machine_offline(&out.machine)?))
}

/// The plan and, for a measured disturbance, the ROCOF it came from.
fn make_plan(sc: &Scenario, shapley: &ShapleyResult, trace: Option<&FrequencyTrace>) -> CliResult<(SheddingPlan, Option<f64>)> {
    match sc.pd {
        PowerSpec::Mw(p_d) => {
            let caps = load_caps(&sc.system, &shapley.players)?;
            let plan = allocate(p_d, &shapley.players, &shapley.psi_eqv, sc.granularity, Some(&caps))?;
            Ok((plan, None))
        }
        PowerSpec::Auto => {
            let out = require_outage(sc)?;
            let (rocof, post) = measure(sc, out, trace)?;
            Ok((plan_from_measurement(rocof, &post, shapley, sc.granularity)?, Some(rocof)))
        }
    }
}

pub fn charfun(sc: &Scenario) -> CliResult<()> {
    let (df, rc, text) = games(sc)?;
    let path = write_output(sc, "charfun.txt", &text)?;
    print!("{}", CharacteristicTable::render(&df, &rc)?);
    println!("wrote {} coalitions to {}", (1usize << df.player_count()) - 1, path.display());
    Ok(())
}

pub fn shapley(sc: &Scenario) -> CliResult<()> {
    let result = shapley_of(sc)?;
    let path = write_output(sc, "shapley.csv", &result.to_csv())?;
    print!("{result}");
    println!("wrote {}", path.display());
    Ok(())
}

pub fn plan(sc: &Scenario) -> CliResult<()> {
    let shapley = shapley_of(sc)?;
    let (plan, rocof) = make_plan(sc, &shapley, None)?;
    let path = write_output(sc, "plan.csv", &plan.to_csv())?;
    if let Some(r) = rocof {
        println!("measured ROCOF {r:.4} Hz/s -> P_d {:.3} MW", plan.total_p_d);
    }
    println!("{plan}");
    println!("wrote {}", path.display());
    Ok(())
}

pub fn run_simulate(sc: &Scenario) -> CliResult<()> {
    let out = require_outage(sc)?;
    let outage = outage_schedule(out)?;
    let f_n = sc.system.nominal_frequency();
    let no_shed = simulate(&sc.system, &outage, sc.duration, sc.dt)?;

    let shapley = shapley_of(sc)?;
    let covers_window = out.time + sc.rocof_window <= sc.duration;
    let (plan, rocof) = make_plan(sc, &shapley, covers_window.then_some(&no_shed))?;

    // The relay acts `shed_delay` after the outage, or at the threshold
    // crossing if that comes later. Without a crossing nothing is shed.
    let crossing = no_shed
        .time
        .iter()
        .zip(&no_shed.coi_frequency)
        .find(|(t, f)| **t >= out.time && **f < sc.threshold)
        .map(|(t, _)| *t);
    let shed_time = crossing
        .map(|t| t.max(out.time + sc.shed_delay))
        .filter(|t| *t <= sc.duration);
    let mut events = outage.clone();
    if let Some(t) = shed_time {
        for e in plan.entries.iter().filter(|e| e.rounded_mw > 0.0) {
            events = events.with(t, Event::shed(e.bus.clone(), e.rounded_mw))?;
        }
    }
    let shed = simulate(&sc.system, &events, sc.duration, sc.dt)?;

    let (t_a, nadir_a) = no_shed.nadir();
    let (t_b, nadir_b) = shed.nadir();
    let (final_a, final_b) = (no_shed.steady_state(), shed.steady_state());
    let recovered = (final_b - f_n).abs() < RECOVERY_BAND_HZ;

    let mut summary = String::new();
    let _ = writeln!(summary, "outage: machine {} at {:.3} s", out.machine, out.time);
    if let Some(r) = rocof {
        let _ = writeln!(summary, "measured_rocof_hz_s: {r:.6}");
    }
    let _ = writeln!(summary, "disturbance_power_mw: {:.3}", plan.total_p_d);
    let _ = writeln!(summary, "threshold_hz: {:.3}", sc.threshold);
    match shed_time {
        Some(t) => {
            let _ = writeln!(summary, "shed_time_s: {t:.3}");
            for e in &plan.entries {
                let _ = writeln!(summary, "shed_bus_{}_mw: {}", e.bus, e.rounded_mw);
            }
        }
        None => {
            let _ = writeln!(summary, "shed_time_s: none (threshold not crossed)");
        }
    }
    let _ = writeln!(summary, "no_shed_nadir_hz: {nadir_a:.6} at {t_a:.3} s");
    let _ = writeln!(summary, "no_shed_final_hz: {final_a:.6}");
    let _ = writeln!(summary, "shed_nadir_hz: {nadir_b:.6} at {t_b:.3} s");
    let _ = writeln!(summary, "shed_final_hz: {final_b:.6}");
    let _ = writeln!(summary, "recovered: {recovered}");

    write_output(sc, "trace_no_shed.csv", &no_shed.to_csv_string())?;
    write_output(sc, "trace_shed.csv", &shed.to_csv_string())?;
    write_output(sc, "plan.csv", &plan.to_csv())?;
    let path = write_output(sc, "summary.txt", &summary)?;
    print!("{summary}");
    println!("wrote traces and {}", path.display());
    Ok(())
}
