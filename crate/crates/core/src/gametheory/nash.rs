use serde::{Deserialize, Serialize};

use super::game::NormalFormGame;
use super::GameError;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EquilibriumKind {
    StrictNash,
    WeakNash,
    NotNash,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquilibriumClassification {
    pub profile: Vec<usize>,
    pub kind: EquilibriumKind,
}

/// Classifies a pure profile by its unilateral deviations.
pub fn is_nash<T: Scalar>(
    game: &NormalFormGame<T>,
    profile: &[usize],
) -> Result<EquilibriumClassification, GameError> {
    let base = game.payoffs(profile)?;
    let mut tie = false;
    let mut dev = profile.to_vec();
    for (i, &own) in profile.iter().enumerate() {
        for s in 0..game.strategies(i).len() {
            if s == own {
                continue;
            }
            dev[i] = s;
            let alt = &game.payoffs(&dev)?[i];
            if *alt > base[i] {
                return Ok(EquilibriumClassification {
                    profile: profile.to_vec(),
                    kind: EquilibriumKind::NotNash,
                });
            }
            tie |= *alt == base[i];
        }
        dev[i] = own;
    }
    Ok(EquilibriumClassification {
        profile: profile.to_vec(),
        kind: if tie {
            EquilibriumKind::WeakNash
        } else {
            EquilibriumKind::StrictNash
        },
    })
}

/// All pure equilibria, strict or weak, in row-major profile order.
pub fn pure_nash_set<T: Scalar>(game: &NormalFormGame<T>) -> Vec<EquilibriumClassification> {
    game.profiles()
        .map(|p| is_nash(game, &p).expect("enumerated profiles are valid"))
        .filter(|c| c.kind != EquilibriumKind::NotNash)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Enforcement<T> {
    pub holds: bool,
    /// Per player: payoff of complying minus payoff of defecting, everyone else complying.
    pub margins: Vec<T>,
}

/// Whether complying is a best response for every player when all others comply.
pub fn enforcement_holds<T: Scalar>(
    game: &NormalFormGame<T>,
    comply: &str,
    defect: &str,
) -> Result<Enforcement<T>, GameError> {
    let index = |i: usize, label: &str| {
        game.strategy_index(i, label)
            .ok_or_else(|| GameError::MissingStrategy {
                player: i,
                label: label.to_string(),
            })
    };
    let all_c = (0..game.players())
        .map(|i| index(i, comply))
        .collect::<Result<Vec<_>, _>>()?;
    let mut margins = Vec::with_capacity(game.players());
    for i in 0..game.players() {
        let mut dev = all_c.clone();
        dev[i] = index(i, defect)?;
        let c = game.payoffs(&all_c)?[i].clone();
        let d = game.payoffs(&dev)?[i].clone();
        margins.push(c - d);
    }
    Ok(Enforcement {
        holds: margins.iter().all(|m| !m.is_negative()),
        margins,
    })
}
