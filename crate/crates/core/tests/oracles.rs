mod common;

use common::oracle::{worst_link_error, worst_oracle_error};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn trace_transpose_and_tensor_match_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let worst = worst_oracle_error(&mut rng);
    assert!(worst < 1e-12, "worst error {worst:e}");
}

#[test]
fn link_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let worst = worst_link_error(&mut rng);
    assert!(worst < 1e-12, "worst error {worst:e}");
}
