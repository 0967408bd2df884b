use serde::{Deserialize, Serialize};

use super::trace::BehaviorTrace;

/// Default per-step harvest quota.
pub const DEFAULT_QUOTA: u32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub agent_id: usize,
    /// `true` means Defective.
    pub flagged: bool,
    pub confidence: f64,
}

/// Flags a trace iff some single-step reward exceeds `quota`.
pub fn quota_detect(trace: &BehaviorTrace, quota: u32) -> Verdict {
    let flagged = trace.entries().iter().any(|e| e.raw_reward > quota);
    Verdict {
        agent_id: trace.agent_id,
        flagged,
        confidence: if flagged { 1.0 } else { 0.0 },
    }
}
