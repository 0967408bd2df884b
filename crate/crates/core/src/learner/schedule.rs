use serde::{Deserialize, Serialize};

use super::LearnerError;

/// Piecewise-linear exploration schedule over training steps (or episodes;
/// the unit is whatever the caller counts).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    breakpoints: Vec<(u64, f64)>,
}

impl EpsilonSchedule {
    pub fn new(breakpoints: Vec<(u64, f64)>) -> Result<Self, LearnerError> {
        if breakpoints.is_empty() {
            return Err(LearnerError::EmptySchedule);
        }
        for w in breakpoints.windows(2) {
            if w[1].0 <= w[0].0 || w[1].1 > w[0].1 {
                return Err(LearnerError::InvalidSchedule(format!(
                    "breakpoints must have increasing steps and non-increasing epsilon: {:?} -> {:?}",
                    w[0], w[1]
                )));
            }
        }
        if let Some(bad) = breakpoints.iter().find(|b| !(0.0..=1.0).contains(&b.1)) {
            return Err(LearnerError::InvalidSchedule(format!(
                "epsilon {} outside [0, 1]",
                bad.1
            )));
        }
        Ok(EpsilonSchedule { breakpoints })
    }

    pub fn constant(epsilon: f64) -> Result<Self, LearnerError> {
        Self::new(vec![(0, epsilon)])
    }

    /// Linear decay from `start` to `end` over `[0, until]`.
    pub fn linear(start: f64, end: f64, until: u64) -> Result<Self, LearnerError> {
        Self::new(vec![(0, start), (until.max(1), end)])
    }

    pub fn breakpoints(&self) -> &[(u64, f64)] {
        &self.breakpoints
    }
}

pub fn epsilon_at(schedule: &EpsilonSchedule, step: u64) -> f64 {
    let bp = &schedule.breakpoints;
    if step <= bp[0].0 {
        return bp[0].1;
    }
    for w in bp.windows(2) {
        let ((s0, e0), (s1, e1)) = (w[0], w[1]);
        if step <= s1 {
            let frac = (step - s0) as f64 / (s1 - s0) as f64;
            return e0 + (e1 - e0) * frac;
        }
    }
    bp[bp.len() - 1].1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_and_clamp() {
        let s = EpsilonSchedule::new(vec![(0, 1.0), (100, 0.1)]).unwrap();
        assert!((epsilon_at(&s, 50) - 0.55).abs() < 1e-12);
        assert_eq!(epsilon_at(&s, 0), 1.0);
        assert_eq!(epsilon_at(&s, 1_000_000), 0.1);
    }

    #[test]
    fn multi_segment() {
        let s = EpsilonSchedule::new(vec![(10, 1.0), (20, 0.5), (40, 0.0)]).unwrap();
        assert_eq!(epsilon_at(&s, 5), 1.0);
        assert!((epsilon_at(&s, 30) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn invalid_schedules() {
        assert!(matches!(EpsilonSchedule::new(vec![]), Err(LearnerError::EmptySchedule)));
        assert!(EpsilonSchedule::new(vec![(0, 0.1), (10, 0.5)]).is_err());
        assert!(EpsilonSchedule::new(vec![(0, 1.5)]).is_err());
        assert!(EpsilonSchedule::new(vec![(5, 1.0), (5, 0.5)]).is_err());
    }
}
