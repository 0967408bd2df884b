/// Independent seed for a named stream, via SplitMix64 finalisation.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub mod stream {
    pub const TRAIN_WORLD: u64 = 1;
    pub const EVAL_WORLD: u64 = 2;
    pub const LEARNER: u64 = 3;
    pub const DETECTOR: u64 = 4;
    pub const SWEEP: u64 = 5;
    pub const EGTA_CELL: u64 = 6;
    pub const CORPUS: u64 = 7;
    pub const ROLES: u64 = 8;
    pub const REPLICATE: u64 = 9;
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn streams_do_not_collide() {
        let mut seen = HashSet::new();
        for s in 0..10 {
            for i in 0..500 {
                assert!(seen.insert(derive_seed(42, s, i)));
            }
        }
        assert_eq!(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
    }
}
