//! Second stage: spread the disturbance power over the candidate buses.
//!
//! Each bus gets the share `D_k = ψ_k / Σψ` of `P_d`. The raw amounts are then
//! rounded to whole multiples of the granularity with largest-remainder
//! apportionment, so the rounded amounts still add up to `P_d`.

use std::fmt;

use crate::coalition_game::ShapleyResult;
use crate::error::{Error, Result};
use crate::frequency_dynamics::disturbance_power;
use crate::grid_model::{BusId, PowerSystem};

pub const DEFAULT_GRANULARITY_MW: f64 = 1.0;

/// Under-frequency trigger used by closed-loop scenarios: 59.5 Hz on a 60 Hz
/// system, scaled for other nominal frequencies. The allocation never uses it.
pub fn default_trigger_threshold(nominal_frequency: f64) -> f64 {
    nominal_frequency * (59.5 / 60.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanEntry {
    pub bus: BusId,
    pub equivalent_shapley: f64,
    pub distribution_factor: f64,
    /// D_k · P_d, MW.
    pub raw_mw: f64,
    /// Amount to shed, an integer multiple of the granularity, MW.
    pub rounded_mw: f64,
    /// `rounded_mw` in granularity units.
    pub rounded_units: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SheddingPlan {
    pub entries: Vec<PlanEntry>,
    /// Disturbance power the plan distributes, MW.
    pub total_p_d: f64,
    pub granularity: f64,
}

impl SheddingPlan {
    /// Σ rounded amounts, MW: `round(P_d / granularity) · granularity`.
    pub fn rounded_total(&self) -> f64 {
        self.entries.iter().map(|e| e.rounded_units).sum::<u64>() as f64 * self.granularity
    }

    pub fn entry(&self, bus: &BusId) -> Option<&PlanEntry> {
        self.entries.iter().find(|e| &e.bus == bus)
    }

    pub fn rounded_amounts(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.rounded_mw).collect()
    }

    /// CSV with header `bus,psi_eqv,distribution_factor,raw_mw,rounded_mw`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bus,psi_eqv,distribution_factor,raw_mw,rounded_mw\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{}\n",
                e.bus,
                e.equivalent_shapley,
                e.distribution_factor,
                e.raw_mw,
                fmt_amount(e.rounded_mw, self.granularity)
            ));
        }
        out
    }
}

/// Formats an amount with as many decimals as the granularity needs.
fn fmt_amount(mw: f64, granularity: f64) -> String {
    let mut decimals = 0;
    let mut g = granularity;
    while decimals < 6 && (g - g.round()).abs() > 1e-9 {
        g *= 10.0;
        decimals += 1;
    }
    format!("{mw:.decimals$}")
}

impl fmt::Display for SheddingPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>8}  {:>10}  {:>12}  {:>10}  {:>10}",
            "Bus", "Eq. Shapley", "Distribution", "Raw (MW)", "Shed (MW)"
        )?;
        for e in &self.entries {
            writeln!(
                f,
                "{:>8}  {:>10.4}  {:>12.5}  {:>10.3}  {:>10}",
                e.bus.as_str(),
                e.equivalent_shapley,
                e.distribution_factor,
                e.raw_mw,
                fmt_amount(e.rounded_mw, self.granularity)
            )?;
        }
        write!(
            f,
            "{:>8}  {:>10}  {:>12}  {:>10.3}  {:>10}",
            "Total",
            "",
            "",
            self.total_p_d,
            fmt_amount(self.rounded_total(), self.granularity)
        )
    }
}

/// D_k = ψ_k / Σψ.
pub fn distribution_factors(psi_eqv: &[f64]) -> Result<Vec<f64>> {
    if let Some(p) = psi_eqv.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "equivalent Shapley values must be finite and >= 0, got {p}"
        )));
    }
    let total: f64 = psi_eqv.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateShapley);
    }
    Ok(psi_eqv.iter().map(|p| p / total).collect())
}

/// Splits `p_d` over `buses` in proportion to their equivalent Shapley values.
///
/// With `caps` (connected load per bus), a bus whose share exceeds its cap is
/// held at the cap and the excess goes to the remaining buses in proportion to
/// their distribution factors, repeating until every share fits.
pub fn allocate(
    p_d: f64,
    buses: &[BusId],
    psi_eqv: &[f64],
    granularity: f64,
    caps: Option<&[f64]>,
) -> Result<SheddingPlan> {
    if !(p_d >= 0.0 && p_d.is_finite()) {
        return Err(Error::InvalidArgument(format!("disturbance power must be >= 0, got {p_d}")));
    }
    if !(granularity > 0.0 && granularity.is_finite()) {
        return Err(Error::InvalidArgument(format!("granularity must be > 0, got {granularity}")));
    }
    if buses.len() != psi_eqv.len() {
        return Err(Error::PlayerMismatch(format!(
            "{} buses but {} Shapley values",
            buses.len(),
            psi_eqv.len()
        )));
    }
    for (i, b) in buses.iter().enumerate() {
        if buses[..i].contains(b) {
            return Err(Error::InvalidArgument(format!("bus {b} listed twice")));
        }
    }
    let factors = distribution_factors(psi_eqv)?;
    let target = (p_d / granularity).round() as u64;

    let unit_caps: Option<Vec<u64>> = match caps {
        None => None,
        Some(c) if c.len() != buses.len() => {
            return Err(Error::PlayerMismatch(format!("{} buses but {} caps", buses.len(), c.len())));
        }
        Some(c) => {
            if let Some(x) = c.iter().find(|x| !(**x >= 0.0)) {
                return Err(Error::InvalidArgument(format!("caps must be >= 0, got {x}")));
            }
            let available: f64 = c.iter().sum();
            if p_d > available + 1e-9 {
                return Err(Error::Infeasible(format!(
                    "disturbance power {p_d:.3} MW exceeds the {available:.3} MW of candidate load"
                )));
            }
            Some(c.iter().map(|x| (x / granularity + 1e-9).floor() as u64).collect())
        }
    };

    let units = match &unit_caps {
        None => apportion(target, &factors, buses),
        Some(caps) => apportion_capped(target, &factors, buses, caps)?,
    };

    let entries = buses
        .iter()
        .zip(psi_eqv)
        .zip(&factors)
        .zip(units)
        .map(|(((bus, &psi), &d), u)| PlanEntry {
            bus: bus.clone(),
            equivalent_shapley: psi,
            distribution_factor: d,
            raw_mw: d * p_d,
            rounded_mw: u as f64 * granularity,
            rounded_units: u,
        })
        .collect();
    Ok(SheddingPlan {
        entries,
        total_p_d: p_d,
        granularity,
    })
}

/// Largest-remainder apportionment of `total` units by `weights` (summing to
/// one). Ties in the remainder go to the lower bus id.
fn apportion(total: u64, weights: &[f64], buses: &[BusId]) -> Vec<u64> {
    let quotas: Vec<f64> = weights.iter().map(|w| w * total as f64).collect();
    let mut units: Vec<u64> = quotas.iter().map(|q| q.floor() as u64).collect();
    let assigned: u64 = units.iter().sum();
    let mut left = total.saturating_sub(assigned) as usize;
    if left == 0 {
        return units;
    }
    // Remainders quantised to 1e-9 so float noise cannot split genuine ties.
    let key = |q: f64| ((q - q.floor()) * 1e9).round() as i64;
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| key(quotas[b]).cmp(&key(quotas[a])).then_with(|| buses[a].cmp(&buses[b])));
    for &i in &order {
        if left == 0 {
            break;
        }
        units[i] += 1;
        left -= 1;
    }
    units
}

fn apportion_capped(total: u64, weights: &[f64], buses: &[BusId], caps: &[u64]) -> Result<Vec<u64>> {
    if caps.iter().sum::<u64>() < total {
        return Err(Error::Infeasible(format!(
            "{total} units to shed but only {} available at this granularity",
            caps.iter().sum::<u64>()
        )));
    }
    let n = weights.len();
    let mut fixed: Vec<Option<u64>> = vec![None; n];
    loop {
        let remaining = total - fixed.iter().flatten().sum::<u64>();
        let free: Vec<usize> = (0..n).filter(|&i| fixed[i].is_none()).collect();
        let weight: f64 = free.iter().map(|&i| weights[i]).sum();
        if remaining > 0 && !(weight > 0.0) {
            return Err(Error::Infeasible(
                "capped buses cannot be relieved: remaining buses have zero distribution factor".into(),
            ));
        }
        let over: Vec<usize> = free
            .iter()
            .copied()
            .filter(|&i| weights[i] / weight * remaining as f64 > caps[i] as f64)
            .collect();
        if over.is_empty() {
            let mut units: Vec<u64> = fixed.iter().map(|f| f.unwrap_or(0)).collect();
            if remaining > 0 {
                let w: Vec<f64> = free.iter().map(|&i| weights[i] / weight).collect();
                let b: Vec<BusId> = free.iter().map(|&i| buses[i].clone()).collect();
                for (&i, u) in free.iter().zip(apportion(remaining, &w, &b)) {
                    units[i] = u;
                }
            }
            return Ok(units);
        }
        for i in over {
            fixed[i] = Some(caps[i]);
        }
    }
}

/// Both stages from a measured COI ROCOF: `P_d` from the post-event system's
/// inertia, then the allocation over the Shapley players capped at their
/// connected load.
///
/// A non-negative ROCOF means no generation deficit, and yields an all-zero plan.
pub fn plan_from_measurement(
    rocof: f64,
    system: &PowerSystem,
    shapley: &ShapleyResult,
    granularity: f64,
) -> Result<SheddingPlan> {
    let caps = shapley
        .players
        .iter()
        .map(|bus| match system.load(bus) {
            Some(l) if l.sheddable => Ok(l.active),
            Some(_) => Err(Error::Validation(format!("bus {bus} is not sheddable"))),
            None => Err(Error::Validation(format!("bus {bus} has no load"))),
        })
        .collect::<Result<Vec<f64>>>()?;
    let p_d = if rocof < 0.0 {
        disturbance_power(rocof, system.total_inertia(), system.nominal_frequency(), system.base_power())?
    } else if rocof.is_finite() {
        0.0
    } else {
        return Err(Error::InvalidArgument(format!("ROCOF must be finite, got {rocof}")));
    };
    allocate(p_d, &shapley.players, &shapley.psi_eqv, granularity, Some(&caps))
}
