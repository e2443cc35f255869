use totient_forest::arboreal::{grow_forest, Caps};
use totient_forest::bounds::BoundProvider;
use totient_forest::sequence::IncrementSequence;
use totient_forest::stats::{
    canopy_density, fruit_rolling_share, tree_size_profile, tree_size_profile_with, CountingMode,
};

#[test]
fn squares_canopy() {
    let seq = IncrementSequence::squares();
    let forest = grow_forest(&seq, &BoundProvider::squares(), &Caps::with_height(160)).unwrap();
    let canopy = canopy_density(&forest);
    assert_eq!(canopy.len(), 161);

    assert_eq!(canopy[0].total, forest.trees.len() as u64);

    for level in &canopy[60..=100] {
        let nonzero: Vec<u64> = level.counts.iter().filter(|c| c.1 > 0).map(|c| c.0).collect();
        assert_eq!(nonzero, [16, 22], "height {}", level.height);
    }
    for level in &canopy[118..] {
        assert_eq!(level.share(16), Some(1.0));
    }

    let profile = tree_size_profile(forest.tree(22).unwrap());
    assert_eq!(profile[0], (0, 1));
    assert!(profile.len() > 101);
    let multi = tree_size_profile_with(forest.tree(22).unwrap(), &seq, CountingMode::Multiplicity).unwrap();
    assert_eq!(multi, profile);
}

#[test]
fn cube_rolling_share_values() {
    let rolling = fruit_rolling_share(&IncrementSequence::cubes(), 1200, 1000).unwrap();
    let allowed = [1, 4, 12, 36, 40, 48, 72, 88, 96, 110, 112, 116, 156];
    for (_, counts) in &rolling.rows {
        assert!(counts.keys().all(|v| allowed.contains(v)));
        assert_eq!(counts.values().sum::<u64>(), 1000);
    }
}
