//! Inputs shared by the benchmarks.

use ufls_core::{BusId, CoalitionGame};

/// A convex game on `n` players: additive weights plus a quadratic synergy term.
pub fn synthetic_game(n: usize) -> CoalitionGame {
    let players = (1..=n as u32).map(BusId::from).collect();
    CoalitionGame::from_fn(players, |c| {
        let size = c.len() as f64;
        c.members().map(|i| 1.0 + 0.1 * i as f64).sum::<f64>() + 0.01 * size * size
    })
    .expect("n within the player limit")
}
