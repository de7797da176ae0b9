//! Reproducible seed streams.
//!
//! Every random stream in a simulation is derived from a master seed plus a
//! `(replication, role)` pair, so any replication can be regenerated on its
//! own and parallel execution yields the same records as sequential.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for all simulation streams.
pub type SimRng = ChaCha8Rng;

/// Role of a stream within one replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamRole {
    Samples,
    Schedule,
    Pilot,
    Other(u64),
}

impl StreamRole {
    fn tag(self) -> u64 {
        match self {
            StreamRole::Samples => 0x5341_4d50,
            StreamRole::Schedule => 0x5343_4844,
            StreamRole::Pilot => 0x5049_4c54,
            StreamRole::Other(x) => 0x4f54_4852 ^ x.rotate_left(17),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for `(master, replication, role)`; a pure function of its inputs.
pub fn derive_seed(master: u64, replication: u64, role: StreamRole) -> u64 {
    let a = splitmix64(master);
    let b = splitmix64(a ^ replication.wrapping_mul(0xd6e8_feb8_6659_fd93));
    splitmix64(b ^ role.tag())
}

/// Generator for `(master, replication, role)`.
pub fn stream(master: u64, replication: u64, role: StreamRole) -> SimRng {
    SimRng::seed_from_u64(derive_seed(master, replication, role))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_distinct_across_roles_and_replications() {
        let s = derive_seed(7, 0, StreamRole::Samples);
        assert_ne!(s, derive_seed(7, 0, StreamRole::Schedule));
        assert_ne!(s, derive_seed(7, 1, StreamRole::Samples));
        assert_ne!(s, derive_seed(8, 0, StreamRole::Samples));
        assert_eq!(s, derive_seed(7, 0, StreamRole::Samples));
    }
}
