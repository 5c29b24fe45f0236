//! Evaluation measures against direct reference implementations.

use docrestore::metrics::{drd, f_measure, non_uniform_blocks, pseudo_f_measure, psnr, recall_skeleton, thin};
use docrestore::BinaryMask;
use docrestore_testkit::{oracle, random_blobby_mask, random_mask, rng};
use proptest::prelude::*;
use rand::Rng;

fn pair(seed: u64) -> (BinaryMask, BinaryMask) {
    let mut r = rng(seed);
    if r.random_bool(0.5) {
        let d = r.random_range(0.05..0.6);
        (random_mask(16, 16, d, &mut r), random_mask(16, 16, d, &mut r))
    } else {
        (random_blobby_mask(16, 16, &mut r), random_blobby_mask(16, 16, &mut r))
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fast_measures_match_reference(seed in any::<u64>()) {
        let (pred, gt) = pair(seed);
        prop_assert_eq!(f_measure(&pred, &gt).unwrap(), oracle::f_measure(&pred, &gt));
        prop_assert_eq!(psnr(&pred, &gt).unwrap(), oracle::psnr(&pred, &gt));
        let fps = pseudo_f_measure(&pred, &gt).unwrap();
        prop_assert!((fps - oracle::pseudo_f_measure(&pred, &gt)).abs() <= 1e-9);
        let d = drd(&pred, &gt).unwrap();
        prop_assert!((d - oracle::drd(&pred, &gt)).abs() <= 1e-9);
    }

    #[test]
    fn thinning_matches_reference(seed in any::<u64>()) {
        let (_, gt) = pair(seed);
        let reference = oracle::zhang_suen(&gt);
        let fast = thin(&gt);
        for y in 0..16 {
            for x in 0..16 {
                prop_assert_eq!(fast.get(x, y), reference[y][x]);
            }
        }
    }

    #[test]
    fn skeleton_stays_inside_its_mask(seed in any::<u64>()) {
        let (_, gt) = pair(seed);
        let s = recall_skeleton(&gt);
        prop_assert!(s.bits().iter().zip(gt.bits()).all(|(&a, &b)| !a || b));
        prop_assert_eq!(s.count() == 0, gt.count() == 0);
    }

    #[test]
    fn identical_masks_score_perfectly(seed in any::<u64>()) {
        let (gt, _) = pair(seed);
        prop_assume!(gt.count() > 0);
        prop_assert_eq!(f_measure(&gt, &gt).unwrap(), 100.0);
        prop_assert_eq!(pseudo_f_measure(&gt, &gt).unwrap(), 100.0);
        prop_assert_eq!(drd(&gt, &gt).unwrap(), 0.0);
        prop_assert_eq!(psnr(&gt, &gt).unwrap(), 99.0);
    }
}

#[test]
fn single_flip_has_unit_distortion() {
    let (pred, gt) = oracle::single_flip_case();
    assert_eq!(non_uniform_blocks(&gt), 1);
    assert!((drd(&pred, &gt).unwrap() - 1.0).abs() < 1e-12);
    assert!((oracle::drd(&pred, &gt) - 1.0).abs() < 1e-12);
}

#[test]
fn partial_edge_blocks_are_counted() {
    let mut gt = BinaryMask::new(10, 10, vec![false; 100]).unwrap();
    gt.set(9, 9, true);
    assert_eq!(non_uniform_blocks(&gt), 1);
    gt.set(0, 0, true);
    assert_eq!(non_uniform_blocks(&gt), 2);
}
