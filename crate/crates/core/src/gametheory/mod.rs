//! Normal-form games, pure Nash classification, the enforcement condition
//! and empirical payoff matrices estimated from simulation.

mod egta;
mod fixture;
mod game;
mod nash;

pub use egta::{
    estimate_return, fill_empirical_matrix, CellDocument, CellRun, DiscountedReturnEstimate,
    EgtaPlan, EmpiricalMatrix, EquilibriumDocument, PayoffDocument, FOCAL_PLAYERS,
};
pub use fixture::{load_fixture, parse_decimal, MatrixFixture, PayoffFixture};
pub use game::{NormalFormGame, PayoffMatrix2x2, Profiles, COMPLY, DEFECT};
pub use nash::{
    enforcement_holds, is_nash, pure_nash_set, Enforcement, EquilibriumClassification,
    EquilibriumKind,
};

#[derive(Debug, thiserror::Error)]
pub enum GameError {
    #[error("malformed game: {0}")]
    Shape(String),
    #[error("invalid profile {0}")]
    Profile(String),
    #[error("player {player} has no strategy labelled {label:?}")]
    MissingStrategy { player: usize, label: String },
    #[error("bad fixture: {0}")]
    Fixture(String),
}
