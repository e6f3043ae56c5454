use exotic_core::enumerate::enumerate_up_to_order;
use exotic_core::equivariance::{
    check_orthogonal_group, classify_trees, float_orthogonal_residual, CheckConfig, Property,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[test]
fn signed_permutation_groups_act_exactly() {
    let trees = enumerate_up_to_order(3);
    let failures: Vec<String> = trees
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, t)| {
            [2, 3, 4].into_iter().filter_map(move |d| {
                let r = check_orthogonal_group(t, d, 100 + i as u64);
                (!r.holds()).then(|| format!("{t} in d = {d}"))
            })
        })
        .collect();
    assert!(failures.is_empty(), "{failures:?}");
}

#[test]
fn generic_orthogonal_residual_is_small() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for t in enumerate_up_to_order(3) {
        let r = float_orthogonal_residual(&t, 20, &[2, 3, 4, 5], &mut rng);
        assert!(r <= 1e-8, "{t}: {r:e}");
    }
}

#[test]
fn semi_orthogonal_equals_affine_on_small_trees() {
    let trees = enumerate_up_to_order(3);
    let props = [Property::Stiefel, Property::Grassmann, Property::Affine];
    let table = classify_trees(&trees, &props, &CheckConfig::new(6, 0, 5));
    for row in &table.rows {
        let holds: Vec<bool> = row.reports.iter().map(|r| r.holds()).collect();
        assert_eq!(holds[0] && holds[1], holds[2], "{}", row.tree);
        assert_eq!(holds[2], row.flags.is_butcher_tree, "{}", row.tree);
    }
    assert!(table.witnesses_valid());
}
