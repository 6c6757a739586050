//! Characteristic-function files.
//!
//! One coalition per line:
//!
//! ```text
//! members=5,6, delta_f_hz=2.1869, rocof_hz_s=1.9169
//! ```
//!
//! `#` starts a comment. The empty coalition may be omitted (its worth is 0 in
//! both games); every non-empty coalition of the requested players must be
//! present.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::{ensure_same_players, Coalition, CoalitionGame};
use crate::error::{Error, Result};
use crate::grid_model::BusId;

#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicTable {
    players: Vec<BusId>,
    rows: BTreeMap<BTreeSet<BusId>, (f64, f64)>,
}

impl CharacteristicTable {
    pub fn parse(text: &str) -> Result<Self> {
        let mut players: Vec<BusId> = Vec::new();
        let mut rows = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse(format!("line {lineno}: {msg}"));
            let (members, deltaf, rocof) = parse_row(line).map_err(err)?;
            let set: BTreeSet<BusId> = members.iter().cloned().collect();
            if set.len() != members.len() {
                return Err(err("repeated bus in members".into()));
            }
            if set.is_empty() && (deltaf != 0.0 || rocof != 0.0) {
                return Err(err("the empty coalition must have worth 0".into()));
            }
            for m in members {
                if !players.contains(&m) {
                    players.push(m);
                }
            }
            if rows.insert(set, (deltaf, rocof)).is_some() {
                return Err(err("duplicate coalition".into()));
            }
        }
        Ok(CharacteristicTable { players, rows })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Players in order of first appearance in the file.
    pub fn players(&self) -> &[BusId] {
        &self.players
    }

    /// (Δf worth, ROCOF worth) of a coalition given by bus ids.
    pub fn get(&self, members: &[BusId]) -> Option<(f64, f64)> {
        if members.is_empty() {
            return Some((0.0, 0.0));
        }
        self.rows.get(&members.iter().cloned().collect::<BTreeSet<_>>()).copied()
    }

    /// The Δf and ROCOF games over `players` (a subset of the file's players,
    /// in the order given).
    pub fn to_games(&self, players: &[BusId]) -> Result<(CoalitionGame, CoalitionGame)> {
        for p in players {
            if !self.players.contains(p) {
                return Err(Error::Validation(format!(
                    "bus {p} does not appear in the characteristic-function table"
                )));
            }
        }
        let n = players.len();
        super::check_capacity(n)?;
        let mut deltaf = vec![0.0; 1 << n];
        let mut rocof = vec![0.0; 1 << n];
        for bits in 1..1u32 << n {
            let members: Vec<BusId> = Coalition::from_bits(bits).members().map(|i| players[i].clone()).collect();
            let (d, r) = self.get(&members).ok_or_else(|| {
                Error::Validation(format!("missing coalition {{{}}}", super::join(&members)))
            })?;
            deltaf[bits as usize] = d;
            rocof[bits as usize] = r;
        }
        Ok((
            CoalitionGame::new(players.to_vec(), deltaf)?,
            CoalitionGame::new(players.to_vec(), rocof)?,
        ))
    }

    /// Both games over all players of the file.
    pub fn games(&self) -> Result<(CoalitionGame, CoalitionGame)> {
        self.to_games(&self.players)
    }

    /// Canonical file text for a pair of games: every non-empty coalition in
    /// ascending bitmask order, values in shortest round-trip form.
    pub fn render(deltaf: &CoalitionGame, rocof: &CoalitionGame) -> Result<String> {
        ensure_same_players(deltaf, rocof)?;
        let players = deltaf.players();
        let mut out = String::from("# members=<bus ids>, delta_f_hz=<steady-state rise>, rocof_hz_s=<initial ROCOF rise>\n");
        for bits in 1..1u32 << players.len() {
            let c = Coalition::from_bits(bits);
            let members: Vec<&str> = c.members().map(|i| players[i].as_str()).collect();
            out.push_str(&format!(
                "members={}, delta_f_hz={}, rocof_hz_s={}\n",
                members.join(","),
                deltaf.worth(c),
                rocof.worth(c)
            ));
        }
        Ok(out)
    }
}

fn parse_row(line: &str) -> std::result::Result<(Vec<BusId>, f64, f64), String> {
    let mut members: Option<Vec<BusId>> = None;
    let mut deltaf = None;
    let mut rocof = None;
    let mut current: Option<&str> = None;
    for token in line.split(',').map(str::trim) {
        match token.split_once('=') {
            Some((key, value)) => {
                let (key, value) = (key.trim(), value.trim());
                let duplicate = match key {
                    "members" => {
                        let v = if value.is_empty() { vec![] } else { vec![BusId::from(value)] };
                        members.replace(v).is_some()
                    }
                    "delta_f_hz" => deltaf.replace(parse_real(key, value)?).is_some(),
                    "rocof_hz_s" => rocof.replace(parse_real(key, value)?).is_some(),
                    other => return Err(format!("unknown field '{other}'")),
                };
                if duplicate {
                    return Err(format!("field '{key}' given twice"));
                }
                current = Some(key);
            }
            None if current == Some("members") && !token.is_empty() => {
                members.as_mut().expect("members field is open").push(BusId::from(token));
            }
            None => return Err(format!("unexpected token '{token}'")),
        }
    }
    Ok((
        members.ok_or("missing field 'members'")?,
        deltaf.ok_or("missing field 'delta_f_hz'")?,
        rocof.ok_or("missing field 'rocof_hz_s'")?,
    ))
}

fn parse_real(key: &str, value: &str) -> std::result::Result<f64, String> {
    match value.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("field '{key}': '{value}' is not a finite number")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE_CHARFUN: &str = include_str!("../../fixtures/wecc9_reference.charfun");

    fn ids(v: &[&str]) -> Vec<BusId> {
        v.iter().map(|s| BusId::from(*s)).collect()
    }

    #[test]
    fn parses_fixture() {
        let t = CharacteristicTable::parse(REFERENCE_CHARFUN).unwrap();
        assert_eq!(t.players(), ids(&["5", "6", "8"]).as_slice());
        let (df, rc) = t.games().unwrap();
        assert_eq!(df.worth(Coalition::from_members([0])), 1.2757);
        assert_eq!(rc.grand_worth(), 2.8071);
        assert_eq!(df.worth(Coalition::EMPTY), 0.0);
        assert_eq!(t.get(&ids(&["8", "5"])), Some((2.2727, 2.0092)));
    }

    #[test]
    fn render_round_trips() {
        let t = CharacteristicTable::parse(REFERENCE_CHARFUN).unwrap();
        let (df, rc) = t.games().unwrap();
        let text = CharacteristicTable::render(&df, &rc).unwrap();
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 7);
        assert!(text.contains("members=5,6, delta_f_hz=2.1869, rocof_hz_s=1.9169"));
        let back = CharacteristicTable::parse(&text).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn subset_of_players() {
        let t = CharacteristicTable::parse(REFERENCE_CHARFUN).unwrap();
        let (df, _) = t.to_games(&ids(&["8", "5"])).unwrap();
        assert_eq!(df.worths(), &[0.0, 0.9887, 1.2757, 2.2727]);
        assert!(t.to_games(&ids(&["5", "7"])).is_err());
    }

    #[test]
    fn missing_coalition_is_an_error() {
        let text: String = REFERENCE_CHARFUN.lines().filter(|l| !l.starts_with("members=6,8")).map(|l| format!("{l}\n")).collect();
        let t = CharacteristicTable::parse(&text).unwrap();
        let err = t.games().unwrap_err();
        assert!(err.to_string().contains("missing coalition {6, 8}"), "{err}");
        // The two-player game on (5, 6) does not need the removed row.
        assert!(t.to_games(&ids(&["5", "6"])).is_ok());
    }

    #[test]
    fn malformed_rows() {
        for bad in [
            "members=5, delta_f_hz=1.0",
            "members=5, delta_f_hz=x, rocof_hz_s=1",
            "members=5,5, delta_f_hz=1, rocof_hz_s=1",
            "members=5, delta_f_hz=1, rocof_hz_s=1, cost=3",
            "members=, delta_f_hz=1, rocof_hz_s=0",
            "delta_f_hz=1, 5, rocof_hz_s=1, members=5",
        ] {
            let err = CharacteristicTable::parse(bad).unwrap_err();
            assert!(err.to_string().contains("line 1"), "{bad}: {err}");
        }
        let dup = "members=5, delta_f_hz=1, rocof_hz_s=1\nmembers=5, delta_f_hz=2, rocof_hz_s=1\n";
        assert!(CharacteristicTable::parse(dup).unwrap_err().to_string().contains("line 2"));
        // An explicit zero empty coalition is accepted.
        assert!(CharacteristicTable::parse("members=, delta_f_hz=0, rocof_hz_s=0").is_ok());
    }
}
