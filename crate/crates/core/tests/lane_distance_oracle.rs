use lmr_core::testkit::random_lane_graph;
use lmr_core::{build_lane_graph, oracle_lane_distance, within_lane_distance, LaneIdx, LanePoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn bounded_search_matches_exhaustive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut reached = 0;
    for _ in 0..500 {
        let g = build_lane_graph(random_lane_graph(&mut rng, 20)).unwrap();
        for _ in 0..4 {
            let pick = |rng: &mut ChaCha8Rng| {
                let seg = LaneIdx(rng.gen_range(0..g.len()));
                LanePoint::new(seg, rng.gen_range(0.0..=g[seg].length()))
            };
            let (from, to) = (pick(&mut rng), pick(&mut rng));
            let threshold = rng.gen_range(1.0..45.0);
            let fast = within_lane_distance(&g, from, &[to], threshold).unwrap();
            let slow = oracle_lane_distance(&g, from, to, threshold).unwrap().filter(|&d| d < threshold);
            assert_eq!(fast.reached, slow.is_some(), "{from:?} -> {to:?} at {threshold}");
            if let (Some(a), Some(b)) = (fast.distance, slow) {
                assert!((a - b).abs() < 1e-9, "{a} vs {b}");
                reached += 1;
            }
        }
    }
    assert!(reached > 200, "too few reachable pairs to be meaningful: {reached}");
}

#[test]
fn multiple_targets_take_the_nearest() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let g = build_lane_graph(random_lane_graph(&mut rng, 12)).unwrap();
        let from = LanePoint::new(LaneIdx(0), rng.gen_range(0.0..=g[LaneIdx(0)].length()));
        let targets: Vec<_> = (0..3)
            .map(|_| {
                let seg = LaneIdx(rng.gen_range(0..g.len()));
                LanePoint::new(seg, rng.gen_range(0.0..=g[seg].length()))
            })
            .collect();
        let threshold = 40.0;
        let combined = within_lane_distance(&g, from, &targets, threshold).unwrap();
        let each = targets
            .iter()
            .filter_map(|t| within_lane_distance(&g, from, &[*t], threshold).unwrap().distance)
            .reduce(f64::min);
        assert_eq!(combined.distance, each);
    }
}
