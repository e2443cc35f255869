//! Grows the cube forest to height 1000 and lists every tree that bears
//! fruit or survives.
//!
//! `cargo run --release --example cube_survivors`

use std::time::Instant;

use totient_forest::arboreal::{grow_forest, Caps, TreeStatus};
use totient_forest::bounds::BoundProvider;
use totient_forest::sequence::IncrementSequence;

fn main() {
    let seq = IncrementSequence::cubes();
    let bound = BoundProvider::auto_for(&seq);
    println!("bound {bound}");
    let caps = Caps::with_height(1000).node_cap(1_000_000).witness_window(2000);
    let start = Instant::now();
    let forest = grow_forest(&seq, &bound, &caps).expect("forest");
    println!("{} trees in {:.1?}", forest.trees.len(), start.elapsed());
    for tree in &forest.trees {
        if !matches!(tree.status, TreeStatus::Died { .. }) || !tree.fruit_heights.is_empty() {
            let witness = tree.witness.map_or(String::new(), |n| format!(", witness n = {n}"));
            println!("{:>4}  {}{witness}", tree.root, tree.status);
        }
    }
}
