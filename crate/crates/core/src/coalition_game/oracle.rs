//! Shapley values as the average marginal contribution over all player
//! orderings. Shares no code with the coalition-sum implementation and is used
//! to cross-check it.

use super::{Coalition, CoalitionGame};
use crate::error::{Error, Result};

/// 8! = 40320 orderings is the largest enumeration we allow.
pub const MAX_ORACLE_PLAYERS: usize = 8;

pub fn shapley_permutation_oracle(game: &CoalitionGame) -> Result<Vec<f64>> {
    let n = game.player_count();
    if n > MAX_ORACLE_PLAYERS {
        return Err(Error::Capacity {
            what: "permutation oracle",
            max: MAX_ORACLE_PLAYERS,
            got: n,
        });
    }
    let mut totals = vec![0.0; n];
    let mut count = 0u64;
    let mut order: Vec<usize> = (0..n).collect();
    let mut visit = |order: &[usize]| {
        let mut coalition = Coalition::EMPTY;
        for &p in order {
            let next = coalition.with(p);
            totals[p] += game.worth(next) - game.worth(coalition);
            coalition = next;
        }
        count += 1;
    };

    // Heap's algorithm, iterative form.
    visit(&order);
    let mut c = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                order.swap(0, i);
            } else {
                order.swap(c[i], i);
            }
            visit(&order);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }

    Ok(totals.into_iter().map(|t| t / count as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_model::BusId;

    #[test]
    fn single_player() {
        let g = CoalitionGame::new(vec![BusId::from("1")], vec![0.0, 7.0]).unwrap();
        assert_eq!(shapley_permutation_oracle(&g).unwrap(), vec![7.0]);
    }

    #[test]
    fn ordering_fractions() {
        // Worth 1 iff player 0 is in S and player 1 is not: player 0 gains 1 when
        // it precedes player 1 (half of all orderings), player 1 loses 1 otherwise.
        for n in 2..=MAX_ORACLE_PLAYERS {
            let players = (0..n as u32).map(BusId::from).collect();
            let g = CoalitionGame::from_fn(players, |c| if c.contains(0) && !c.contains(1) { 1.0 } else { 0.0 })
                .unwrap();
            let psi = shapley_permutation_oracle(&g).unwrap();
            assert!((psi[0] - 0.5).abs() < 1e-15 && (psi[1] + 0.5).abs() < 1e-15, "{psi:?}");
            assert!(psi[2..].iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn guard() {
        let players = (0..9u32).map(BusId::from).collect();
        let g = CoalitionGame::from_fn(players, |_| 1.0).unwrap();
        assert!(matches!(shapley_permutation_oracle(&g), Err(Error::Capacity { .. })));
    }
}
