use serde::{Deserialize, Serialize};

use super::GameError;
use crate::scalar::Scalar;

/// Finite n-player game with a payoff vector for every pure profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalFormGame<T> {
    strategies: Vec<Vec<String>>,
    /// Indexed by the row-major rank of the profile; each entry has one payoff per player.
    payoffs: Vec<Vec<T>>,
}

impl<T: Scalar> NormalFormGame<T> {
    pub fn new(strategies: Vec<Vec<String>>, payoffs: Vec<Vec<T>>) -> Result<Self, GameError> {
        if strategies.is_empty() || strategies.iter().any(Vec::is_empty) {
            return Err(GameError::Shape("every player needs a strategy".into()));
        }
        let size: usize = strategies.iter().map(Vec::len).product();
        if payoffs.len() != size {
            return Err(GameError::Shape(format!(
                "{} payoff entries for {size} profiles",
                payoffs.len()
            )));
        }
        if let Some(p) = payoffs.iter().find(|p| p.len() != strategies.len()) {
            return Err(GameError::Shape(format!(
                "payoff vector of length {} for {} players",
                p.len(),
                strategies.len()
            )));
        }
        Ok(NormalFormGame { strategies, payoffs })
    }

    /// Builds the payoff table by calling `f` on every profile.
    pub fn from_fn(
        strategies: Vec<Vec<String>>,
        mut f: impl FnMut(&[usize]) -> Vec<T>,
    ) -> Result<Self, GameError> {
        let counts: Vec<usize> = strategies.iter().map(Vec::len).collect();
        let payoffs = Profiles::new(&counts).map(|p| f(&p)).collect();
        Self::new(strategies, payoffs)
    }

    pub fn players(&self) -> usize {
        self.strategies.len()
    }

    pub fn strategies(&self, player: usize) -> &[String] {
        &self.strategies[player]
    }

    pub fn strategy_counts(&self) -> Vec<usize> {
        self.strategies.iter().map(Vec::len).collect()
    }

    pub fn strategy_index(&self, player: usize, label: &str) -> Option<usize> {
        self.strategies.get(player)?.iter().position(|s| s == label)
    }

    pub fn rank(&self, profile: &[usize]) -> Result<usize, GameError> {
        if profile.len() != self.players() {
            return Err(GameError::Profile(format!("{profile:?}")));
        }
        let mut r = 0;
        for (&s, strat) in profile.iter().zip(&self.strategies) {
            if s >= strat.len() {
                return Err(GameError::Profile(format!("{profile:?}")));
            }
            r = r * strat.len() + s;
        }
        Ok(r)
    }

    pub fn payoffs(&self, profile: &[usize]) -> Result<&[T], GameError> {
        Ok(&self.payoffs[self.rank(profile)?])
    }

    pub fn profiles(&self) -> Profiles {
        Profiles::new(&self.strategy_counts())
    }

    pub fn labels(&self, profile: &[usize]) -> Vec<String> {
        profile
            .iter()
            .zip(&self.strategies)
            .map(|(&s, st)| st[s].clone())
            .collect()
    }

    pub fn map<U: Scalar>(&self, mut f: impl FnMut(usize, &T) -> U) -> NormalFormGame<U> {
        NormalFormGame {
            strategies: self.strategies.clone(),
            payoffs: self
                .payoffs
                .iter()
                .map(|p| p.iter().enumerate().map(|(i, v)| f(i, v)).collect())
                .collect(),
        }
    }
}

/// Row-major enumeration of pure profiles.
#[derive(Clone, Debug)]
pub struct Profiles {
    counts: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl Profiles {
    fn new(counts: &[usize]) -> Self {
        let next = if counts.iter().all(|&c| c > 0) {
            Some(vec![0; counts.len()])
        } else {
            None
        };
        Profiles {
            counts: counts.to_vec(),
            next,
        }
    }
}

impl Iterator for Profiles {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.next.take()?;
        let mut n = cur.clone();
        for k in (0..n.len()).rev() {
            n[k] += 1;
            if n[k] < self.counts[k] {
                self.next = Some(n);
                break;
            }
            n[k] = 0;
        }
        Some(cur)
    }
}

pub const COMPLY: usize = 0;
pub const DEFECT: usize = 1;

/// Two players, strategies C (index 0) and D (index 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayoffMatrix2x2<T> {
    /// `cells[row][col] = (row player's payoff, column player's payoff)`.
    pub cells: [[(T, T); 2]; 2],
}

impl<T: Scalar> PayoffMatrix2x2<T> {
    pub fn new(cc: (T, T), cd: (T, T), dc: (T, T), dd: (T, T)) -> Self {
        PayoffMatrix2x2 {
            cells: [[cc, cd], [dc, dd]],
        }
    }

    pub fn to_game(&self) -> NormalFormGame<T> {
        let labels = || vec!["C".to_string(), "D".to_string()];
        NormalFormGame::from_fn(vec![labels(), labels()], |p| {
            let (a, b) = self.cells[p[0]][p[1]].clone();
            vec![a, b]
        })
        .expect("2x2 shape is fixed")
    }
}
