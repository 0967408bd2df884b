use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

/// Radius of the circular move range.
pub const MOVE_RANGE: i32 = 3;
/// Radius of the circular gather range (4-neighbourhood).
pub const GATHER_RANGE: i32 = 1;
/// 29 moves (including the no-op) and 4 gathers.
pub const ACTION_COUNT: usize = 33;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActionKind {
    Move,
    Gather,
}

/// A discrete action: jump by an offset, or gather from an adjacent cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action {
    pub kind: ActionKind,
    pub dx: i32,
    pub dy: i32,
}

impl Action {
    pub const NOOP: Action = Action {
        kind: ActionKind::Move,
        dx: 0,
        dy: 0,
    };

    pub fn movement(dx: i32, dy: i32) -> Option<Action> {
        let a = Action {
            kind: ActionKind::Move,
            dx,
            dy,
        };
        a.is_valid().then_some(a)
    }

    pub fn gather(dx: i32, dy: i32) -> Option<Action> {
        let a = Action {
            kind: ActionKind::Gather,
            dx,
            dy,
        };
        a.is_valid().then_some(a)
    }

    pub fn is_valid(&self) -> bool {
        let r2 = self.dx * self.dx + self.dy * self.dy;
        match self.kind {
            ActionKind::Move => r2 <= MOVE_RANGE * MOVE_RANGE,
            ActionKind::Gather => r2 == GATHER_RANGE * GATHER_RANGE,
        }
    }

    /// Position in [`all_actions`]. Index 0 is the no-op.
    pub fn index(&self) -> usize {
        all_actions()
            .iter()
            .position(|a| a == self)
            .expect("action is not part of the action space")
    }

    pub fn from_index(index: usize) -> Option<Action> {
        all_actions().get(index).copied()
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ActionKind::Move => write!(f, "move({},{})", self.dx, self.dy),
            ActionKind::Gather => write!(f, "gather({},{})", self.dx, self.dy),
        }
    }
}

/// The full action space in a fixed order: the no-op, the remaining moves in
/// lexicographic `(dx, dy)` order, then gathers east, south, west, north.
pub fn all_actions() -> &'static [Action; ACTION_COUNT] {
    static ACTIONS: OnceLock<[Action; ACTION_COUNT]> = OnceLock::new();
    ACTIONS.get_or_init(|| {
        let mut list = vec![Action::NOOP];
        for dx in -MOVE_RANGE..=MOVE_RANGE {
            for dy in -MOVE_RANGE..=MOVE_RANGE {
                if (dx, dy) != (0, 0) {
                    if let Some(a) = Action::movement(dx, dy) {
                        list.push(a);
                    }
                }
            }
        }
        for (dx, dy) in [(1, 0), (0, 1), (-1, 0), (0, -1)] {
            list.push(Action::gather(dx, dy).expect("unit offset"));
        }
        list.try_into().expect("action space has 33 entries")
    })
}
