mod common;

use common::planner_oracle::{chain_instances, check, random_instance};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn chains_match_exhaustive_search() {
    let mut fails = Vec::new();
    for inst in chain_instances() {
        if let Err(e) = check(&inst) {
            fails.push(e);
        }
    }
    assert!(fails.is_empty(), "{} mismatches, first: {}", fails.len(), fails[0]);
}

#[test]
fn random_instances_match_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut done = 0;
    while done < 200 {
        if let Some(inst) = random_instance(&mut rng) {
            if let Err(e) = check(&inst) {
                panic!("{e}");
            }
            done += 1;
        }
    }
}
