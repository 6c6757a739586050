//! Cooperative games over load buses.
//!
//! A game with `n` players stores one worth per coalition in a dense vector
//! indexed by the coalition bitmask, so `worth[0]` is the empty coalition and
//! `worth[(1 << n) - 1]` the grand coalition.

mod oracle;
mod table;

use std::fmt;

use crate::error::{Error, Result};
use crate::grid_model::BusId;

pub use oracle::{shapley_permutation_oracle, MAX_ORACLE_PLAYERS};
pub use table::CharacteristicTable;

/// Enumeration guard: 2^24 worths is the largest dense game we build.
pub const MAX_PLAYERS: usize = 24;

/// Weight of the Δf game in the equivalent Shapley value.
pub const DEFAULT_EQUIVALENT_WEIGHT: f64 = 0.5;

/// Absolute slack for the coalitional-rationality inequalities of the core.
pub const CORE_SLACK: f64 = 1e-9;

/// A set of players, bit `i` set when player `i` is a member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Coalition(u32);

impl Coalition {
    pub const EMPTY: Coalition = Coalition(0);

    pub fn from_bits(bits: u32) -> Self {
        Coalition(bits)
    }

    /// The coalition of all `n` players.
    pub fn grand(n: usize) -> Self {
        debug_assert!(n <= MAX_PLAYERS);
        Coalition(((1u64 << n) - 1) as u32)
    }

    pub fn from_members(members: impl IntoIterator<Item = usize>) -> Self {
        Coalition(members.into_iter().fold(0, |acc, i| acc | (1 << i)))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn contains(self, player: usize) -> bool {
        self.0 & (1 << player) != 0
    }

    pub fn with(self, player: usize) -> Self {
        Coalition(self.0 | (1 << player))
    }

    pub fn without(self, player: usize) -> Self {
        Coalition(self.0 & !(1 << player))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Member indices in ascending order.
    pub fn members(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(i)
        })
    }
}

fn check_capacity(n: usize) -> Result<()> {
    if n > MAX_PLAYERS {
        return Err(Error::Capacity {
            what: "coalition enumeration",
            max: MAX_PLAYERS,
            got: n,
        });
    }
    Ok(())
}

/// All 2^n coalitions of `n` players in ascending bitmask order, empty set first.
pub fn enumerate_coalitions(n: usize) -> Result<Vec<Coalition>> {
    check_capacity(n)?;
    Ok((0..1u32 << n).map(Coalition).collect())
}

/// A transferable-utility game: players plus a worth for every coalition.
#[derive(Debug, Clone, PartialEq)]
pub struct CoalitionGame {
    players: Vec<BusId>,
    worth: Vec<f64>,
}

impl CoalitionGame {
    /// Builds a game from a dense worth vector indexed by coalition bitmask.
    pub fn new(players: Vec<BusId>, worth: Vec<f64>) -> Result<Self> {
        let n = players.len();
        check_capacity(n)?;
        for (i, p) in players.iter().enumerate() {
            if players[..i].contains(p) {
                return Err(Error::Validation(format!("duplicate player '{p}'")));
            }
        }
        if worth.len() != 1 << n {
            return Err(Error::Validation(format!(
                "a {n}-player game needs {} worths, got {}",
                1u64 << n,
                worth.len()
            )));
        }
        if worth[0] != 0.0 {
            return Err(Error::Validation("worth of the empty coalition must be 0".into()));
        }
        if let Some(i) = worth.iter().position(|w| !w.is_finite()) {
            return Err(Error::Validation(format!("worth of coalition {i:#b} is not finite")));
        }
        Ok(CoalitionGame { players, worth })
    }

    /// Builds a game by evaluating `f` on every non-empty coalition.
    pub fn from_fn(players: Vec<BusId>, mut f: impl FnMut(Coalition) -> f64) -> Result<Self> {
        check_capacity(players.len())?;
        let worth = (0..1u32 << players.len())
            .map(|bits| if bits == 0 { 0.0 } else { f(Coalition(bits)) })
            .collect();
        CoalitionGame::new(players, worth)
    }

    pub fn players(&self) -> &[BusId] {
        &self.players
    }

    pub fn player_count(&self) -> usize {
        self.players.len()
    }

    pub fn worth(&self, coalition: Coalition) -> f64 {
        self.worth[coalition.index()]
    }

    /// Worths indexed by coalition bitmask.
    pub fn worths(&self) -> &[f64] {
        &self.worth
    }

    pub fn grand_worth(&self) -> f64 {
        self.worth[self.worth.len() - 1]
    }

    pub fn player_index(&self, bus: &BusId) -> Option<usize> {
        self.players.iter().position(|p| p == bus)
    }

    /// Coalition made of the named players.
    pub fn coalition_of(&self, buses: &[BusId]) -> Result<Coalition> {
        buses.iter().try_fold(Coalition::EMPTY, |c, b| {
            self.player_index(b)
                .map(|i| c.with(i))
                .ok_or_else(|| Error::InvalidArgument(format!("bus {b} is not a player")))
        })
    }

    /// The game restricted to `players`, in that order.
    pub fn subgame(&self, players: &[BusId]) -> Result<Self> {
        let idx: Vec<usize> = players
            .iter()
            .map(|b| {
                self.player_index(b)
                    .ok_or_else(|| Error::InvalidArgument(format!("bus {b} is not a player")))
            })
            .collect::<Result<_>>()?;
        CoalitionGame::from_fn(players.to_vec(), |c| {
            let mapped = c.members().fold(Coalition::EMPTY, |acc, i| acc.with(idx[i]));
            self.worth(mapped)
        })
    }

    /// The game (V+W)(S) = V(S) + W(S).
    pub fn add(&self, other: &CoalitionGame) -> Result<Self> {
        ensure_same_players(self, other)?;
        let worth = self.worth.iter().zip(&other.worth).map(|(a, b)| a + b).collect();
        CoalitionGame::new(self.players.clone(), worth)
    }
}

fn ensure_same_players(a: &CoalitionGame, b: &CoalitionGame) -> Result<()> {
    if a.players != b.players {
        return Err(Error::PlayerMismatch(format!(
            "[{}] vs [{}]",
            join(&a.players),
            join(&b.players)
        )));
    }
    Ok(())
}

fn join(ids: &[BusId]) -> String {
    ids.iter().map(BusId::as_str).collect::<Vec<_>>().join(", ")
}

/// Shapley weights (|S|-1)!(n-|S|)!/n! indexed by |S| = 1..=n.
///
/// Written as 1 / (n · C(n-1, |S|-1)). The binomial is exact in f64 for
/// n ≤ 24 (it stays below 2^53), so each weight carries a single rounding.
fn shapley_weights(n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n + 1];
    let mut binom = 1.0f64; // C(n-1, k)
    for k in 0..n {
        w[k + 1] = 1.0 / (n as f64 * binom);
        binom = binom * (n - 1 - k) as f64 / (k + 1) as f64;
    }
    w
}

/// Exact Shapley values by direct summation over coalitions.
///
/// For each player j every coalition S ∋ j is visited once and contributes
/// `w(|S|) · (V(S) − V(S∖{j}))`, so the cost is n·2^(n−1) marginal terms.
pub fn shapley_values(game: &CoalitionGame) -> Vec<f64> {
    let n = game.player_count();
    let weights = shapley_weights(n);
    let worth = &game.worth;
    let full = 1usize << n;
    (0..n)
        .map(|j| {
            let bit = 1usize << j;
            // Walk coalitions without j in blocks of `bit` so the inner loop is branch-free.
            let mut acc = 0.0;
            let mut base = 0;
            while base < full {
                for without in base..base + bit {
                    let with = without | bit;
                    let size = with.count_ones() as usize;
                    acc += weights[size] * (worth[with] - worth[without]);
                }
                base += bit << 1;
            }
            acc
        })
        .collect()
}

/// Per-player Shapley values of the Δf and ROCOF games and their combination.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapleyResult {
    pub players: Vec<BusId>,
    /// Shapley values of the steady-state frequency-rise game, Hz.
    pub psi_deltaf: Vec<f64>,
    /// Shapley values of the initial-ROCOF game, Hz/s.
    pub psi_rocof: Vec<f64>,
    pub psi_eqv: Vec<f64>,
}

impl ShapleyResult {
    pub fn get(&self, bus: &BusId) -> Option<(f64, f64, f64)> {
        let i = self.players.iter().position(|p| p == bus)?;
        Some((self.psi_deltaf[i], self.psi_rocof[i], self.psi_eqv[i]))
    }

    /// CSV with header `bus,psi_deltaf,psi_rocof,psi_eqv`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bus,psi_deltaf,psi_rocof,psi_eqv\n");
        for (i, bus) in self.players.iter().enumerate() {
            out.push_str(&format!(
                "{bus},{:.6},{:.6},{:.6}\n",
                self.psi_deltaf[i], self.psi_rocof[i], self.psi_eqv[i]
            ));
        }
        out
    }
}

impl fmt::Display for ShapleyResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>8}  {:>12}  {:>12}  {:>12}", "Bus", "Shapley Δf", "Shapley ROCOF", "Equivalent")?;
        for (i, bus) in self.players.iter().enumerate() {
            writeln!(
                f,
                "{:>8}  {:>12.4}  {:>12.4}  {:>12.4}",
                bus.as_str(),
                self.psi_deltaf[i],
                self.psi_rocof[i],
                self.psi_eqv[i]
            )?;
        }
        Ok(())
    }
}

/// Equivalent Shapley value: the element-wise mean of both games' values.
pub fn equivalent_shapley(deltaf_game: &CoalitionGame, rocof_game: &CoalitionGame) -> Result<ShapleyResult> {
    equivalent_shapley_weighted(deltaf_game, rocof_game, DEFAULT_EQUIVALENT_WEIGHT)
}

/// `psi_eqv = w·psi_deltaf + (1−w)·psi_rocof` for `w` in [0, 1].
pub fn equivalent_shapley_weighted(
    deltaf_game: &CoalitionGame,
    rocof_game: &CoalitionGame,
    deltaf_weight: f64,
) -> Result<ShapleyResult> {
    ensure_same_players(deltaf_game, rocof_game)?;
    if !(0.0..=1.0).contains(&deltaf_weight) {
        return Err(Error::InvalidArgument(format!(
            "equivalent Shapley weight must lie in [0, 1], got {deltaf_weight}"
        )));
    }
    let psi_deltaf = shapley_values(deltaf_game);
    let psi_rocof = shapley_values(rocof_game);
    // With w = 0.5 both products are exact, so this is bit-identical to (a + b) / 2.
    let psi_eqv = psi_deltaf
        .iter()
        .zip(&psi_rocof)
        .map(|(a, b)| deltaf_weight * a + (1.0 - deltaf_weight) * b)
        .collect();
    Ok(ShapleyResult {
        players: deltaf_game.players.clone(),
        psi_deltaf,
        psi_rocof,
        psi_eqv,
    })
}

/// A payoff vector α, one entry per player.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub payoffs: Vec<f64>,
}

impl Allocation {
    pub fn new(payoffs: Vec<f64>) -> Self {
        Allocation { payoffs }
    }
}

impl From<Vec<f64>> for Allocation {
    fn from(payoffs: Vec<f64>) -> Self {
        Allocation { payoffs }
    }
}

/// Whether `allocation` lies in the core: α·e^S ≥ V(S) for every proper
/// coalition (with [`CORE_SLACK`]) and α·e^N = V(N) to 1e-9 relative.
pub fn in_core(game: &CoalitionGame, allocation: &Allocation) -> Result<bool> {
    let n = game.player_count();
    let alpha = &allocation.payoffs;
    if alpha.len() != n {
        return Err(Error::PlayerMismatch(format!(
            "allocation has {} payoffs for {n} players",
            alpha.len()
        )));
    }
    // Subset sums α·e^S built incrementally: drop the lowest member.
    let full = 1usize << n;
    let mut sums = vec![0.0; full];
    for s in 1..full {
        let low = s.trailing_zeros() as usize;
        sums[s] = sums[s & (s - 1)] + alpha[low];
    }
    let grand = full - 1;
    let vn = game.worth[grand];
    if (sums[grand] - vn).abs() > 1e-9 * vn.abs().max(1.0) {
        return Ok(false);
    }
    Ok((0..grand).all(|s| sums[s] >= game.worth[s] - CORE_SLACK))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[&str]) -> Vec<BusId> {
        v.iter().map(|s| BusId::from(*s)).collect()
    }

    fn game(players: &[&str], worth: Vec<f64>) -> CoalitionGame {
        CoalitionGame::new(ids(players), worth).unwrap()
    }

    fn reference_games() -> (CoalitionGame, CoalitionGame) {
        // Bitmask order over players (5, 6, 8).
        let df = game(&["5", "6", "8"], vec![0.0, 1.2757, 0.9196, 2.1869, 0.9887, 2.2727, 1.9144, 3.1883]);
        let rc = game(&["5", "6", "8"], vec![0.0, 1.1189, 0.7990, 1.9169, 0.8890, 2.0092, 1.6866, 2.8071]);
        (df, rc)
    }

    #[test]
    fn enumerate_three_players() {
        let cs = enumerate_coalitions(3).unwrap();
        assert_eq!(cs.len(), 8);
        let sets: Vec<Vec<usize>> = cs.iter().map(|c| c.members().collect()).collect();
        assert_eq!(
            sets,
            vec![vec![], vec![0], vec![1], vec![0, 1], vec![2], vec![0, 2], vec![1, 2], vec![0, 1, 2]]
        );
    }

    #[test]
    fn enumerate_edge_sizes() {
        assert_eq!(enumerate_coalitions(0).unwrap(), vec![Coalition::EMPTY]);
        assert_eq!(enumerate_coalitions(2).unwrap().len(), 4);
        assert!(matches!(enumerate_coalitions(25), Err(Error::Capacity { max: 24, got: 25, .. })));
    }

    #[test]
    fn coalition_bit_ops() {
        let c = Coalition::from_members([0, 3]);
        assert_eq!(c.bits(), 0b1001);
        assert!(c.contains(3) && !c.contains(1));
        assert_eq!(c.with(1).len(), 3);
        assert_eq!(c.without(0), Coalition::from_bits(0b1000));
        assert_eq!(Coalition::grand(24).len(), 24);
    }

    #[test]
    fn weights_sum_to_one_over_orderings() {
        // Σ_s C(n-1, s-1) w(s) = 1 for every n.
        for n in 1..=24usize {
            let w = shapley_weights(n);
            let mut binom = 1.0;
            let mut total = 0.0;
            for k in 0..n {
                total += binom * w[k + 1];
                binom = binom * (n - 1 - k) as f64 / (k + 1) as f64;
            }
            assert!((total - 1.0).abs() < 1e-13, "n={n} total={total}");
        }
    }

    #[test]
    fn reference_deltaf_shapley() {
        let (df, _) = reference_games();
        let psi = shapley_values(&df);
        let expected = [1.2750833333333331, 0.9178833333333333, 0.9953333333333333];
        for (a, b) in psi.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{psi:?}");
        }
        let oracle = shapley_permutation_oracle(&df).unwrap();
        for (a, b) in psi.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn symmetric_and_dummy_games() {
        assert_eq!(shapley_values(&game(&["1", "2"], vec![0.0, 1.0, 1.0, 3.0])), vec![1.5, 1.5]);
        assert_eq!(shapley_values(&game(&["1", "2"], vec![0.0, 2.0, 0.0, 2.0])), vec![2.0, 0.0]);
    }

    #[test]
    fn equivalent_shapley_reference() {
        let (df, rc) = reference_games();
        let r = equivalent_shapley(&df, &rc).unwrap();
        for (a, b) in r.psi_eqv.iter().zip([1.1973, 0.8581, 0.9424]) {
            assert!((a - b).abs() < 5e-4, "{:?}", r.psi_eqv);
        }
        let sum: f64 = r.psi_eqv.iter().sum();
        assert!((sum - 2.9977).abs() < 1e-9 * 2.9977);
        for i in 0..3 {
            assert_eq!(r.psi_eqv[i], (r.psi_deltaf[i] + r.psi_rocof[i]) / 2.0);
        }
    }

    #[test]
    fn equivalent_of_identical_games() {
        let (df, _) = reference_games();
        let r = equivalent_shapley(&df, &df).unwrap();
        assert_eq!(r.psi_eqv, r.psi_deltaf);
    }

    #[test]
    fn equivalent_weight_override() {
        let (df, rc) = reference_games();
        let r = equivalent_shapley_weighted(&df, &rc, 1.0).unwrap();
        assert_eq!(r.psi_eqv, r.psi_deltaf);
        assert!(equivalent_shapley_weighted(&df, &rc, 1.5).is_err());
    }

    #[test]
    fn equivalent_rejects_player_mismatch() {
        let (df, _) = reference_games();
        let other = game(&["5", "8", "6"], vec![0.0; 8]);
        assert!(matches!(equivalent_shapley(&df, &other), Err(Error::PlayerMismatch(_))));
    }

    #[test]
    fn subgame_two_locations() {
        let (df, rc) = reference_games();
        let players = ids(&["5", "8"]);
        let r = equivalent_shapley(&df.subgame(&players).unwrap(), &rc.subgame(&players).unwrap()).unwrap();
        assert!((r.psi_eqv[0] - 1.1997).abs() < 1e-9);
        assert!((r.psi_eqv[1] - 0.94125).abs() < 1e-9);
    }

    #[test]
    fn core_membership() {
        let g = game(&["1", "2"], vec![0.0, 0.0, 0.0, 1.0]);
        assert!(in_core(&g, &vec![0.5, 0.5].into()).unwrap());
        assert!(!in_core(&g, &vec![0.7, 0.4].into()).unwrap());
        assert!(!in_core(&g, &vec![1.2, -0.2].into()).unwrap());
        assert!(in_core(&g, &vec![1.0].into()).is_err());
    }

    #[test]
    fn game_validation() {
        assert!(CoalitionGame::new(ids(&["a"]), vec![1.0, 2.0]).is_err());
        assert!(CoalitionGame::new(ids(&["a"]), vec![0.0]).is_err());
        assert!(CoalitionGame::new(ids(&["a", "a"]), vec![0.0; 4]).is_err());
        assert!(CoalitionGame::new(ids(&["a"]), vec![0.0, f64::NAN]).is_err());
    }
}
