//! Deterministic substream derivation.
//!
//! Each logical random stream is keyed by the user seed plus a short tag
//! path (stream kind, replication, cohort, SNP). The key is hashed through
//! a SplitMix64 finalizer chain into a ChaCha8 seed. Two properties matter:
//! streams with different tag paths are statistically independent, and the
//! same path always reproduces the same stream — the individual-level DGP
//! relies on this to regenerate identical genotype columns on both of its
//! passes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream kinds (first tag element).
pub const TAG_SUMMARY: u64 = 1;
/// The once-per-config φ_j draw that fixes the γ vector.
pub const TAG_PHI: u64 = 2;
/// Per-individual noise (U, E_X, E_Y) for one cohort of one replication.
pub const TAG_NOISE: u64 = 3;
/// One genotype column: (replication, cohort, SNP).
pub const TAG_GENO: u64 = 4;
/// Per-replication balanced-pleiotropy effects α_j.
pub const TAG_ALPHA: u64 = 5;

/// Cohort identifiers (second-level tag).
pub const COHORT_EXPOSURE: u64 = 0;
pub const COHORT_OUTCOME: u64 = 1;
pub const COHORT_SELECTION: u64 = 2;

/// SplitMix64 finalizer: a strong 64-bit mix, bijective on u64.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the ChaCha8 stream for a tag path under a user seed.
pub fn substream(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut h = splitmix64(seed ^ 0x6A09_E667_F3BC_C908);
    for &t in tags {
        h = splitmix64(h ^ t);
    }
    ChaCha8Rng::seed_from_u64(h)
}
