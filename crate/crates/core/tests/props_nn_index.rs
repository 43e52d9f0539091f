//! Oracle equivalence for the removable NN index: any operation sequence
//! must behave exactly like a masked brute-force scan, and the tree must
//! examine sublinearly many points on nice data.

mod common;

use common::{brute_knn, masked_nearest, TestRng};
use graph_dbd::{NnIndex, PointSet};
use proptest::prelude::*;

#[derive(Debug, Clone)]
enum Op {
    Nearest(usize),
    Remove(usize),
    Knn(usize, usize),
}

fn points_strategy() -> impl Strategy<Value = PointSet> {
    (2usize..24, 1usize..4).prop_flat_map(|(n, d)| {
        prop::collection::vec(
            prop::collection::vec((-8i32..=8).prop_map(|v| v as f64 / 4.0), d),
            n,
        )
        .prop_map(|rows| PointSet::new(rows).unwrap())
    })
}

fn ops_strategy(n: usize) -> impl Strategy<Value = Vec<Op>> {
    prop::collection::vec(
        prop_oneof![
            (0..n).prop_map(Op::Nearest),
            (0..n).prop_map(Op::Remove),
            (0..n, 1..n.max(2)).prop_map(|(q, k)| Op::Knn(q, k)),
        ],
        1..60,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn operation_sequences_match_masked_scan(
        (points, ops) in points_strategy()
            .prop_flat_map(|ps| {
                let n = ps.len();
                (Just(ps), ops_strategy(n))
            }),
        pi in 0usize..3,
    ) {
        let p = [1.0, 2.0, 5.0][pi];
        let mut index = NnIndex::build(&points, p).unwrap();
        let mut closed = vec![false; points.len()];
        for op in ops {
            match op {
                Op::Nearest(q) => {
                    let got = index.nearest(q);
                    let want = masked_nearest(&points, &closed, p, q);
                    prop_assert_eq!(got, want);
                }
                Op::Remove(i) => {
                    if closed[i] {
                        prop_assert!(index.remove(i).is_err());
                    } else {
                        index.remove(i).unwrap();
                        closed[i] = true;
                    }
                }
                Op::Knn(q, k) => {
                    if k <= points.len() - 1 {
                        let got = index.knn(q, k).unwrap();
                        let want = brute_knn(&points, p, q, k);
                        prop_assert_eq!(got, want);
                    } else {
                        prop_assert!(index.knn(q, k).is_err());
                    }
                }
            }
        }
    }

    #[test]
    fn determinism_across_rebuilds(points in points_strategy(), pi in 0usize..3) {
        let p = [1.0, 2.0, 5.0][pi];
        let a = NnIndex::build(&points, p).unwrap();
        let b = NnIndex::build(&points, p).unwrap();
        for q in 0..points.len() {
            prop_assert_eq!(a.nearest(q), b.nearest(q));
        }
    }
}

/// Large interleaved remove/nearest run against the masked oracle, on tree
/// sized inputs (well past the brute-force cutoff).
#[test]
fn long_interleaved_sequence_matches_oracle() {
    let mut rng = TestRng::new(0xA11CE);
    let points = rng.uniform_points(600, 3);
    let mut index = NnIndex::build(&points, 2.0).unwrap();
    let mut closed = vec![false; points.len()];
    let mut removed = 0;
    for step in 0..1200 {
        let q = rng.below(points.len());
        assert_eq!(
            index.nearest(q),
            masked_nearest(&points, &closed, 2.0, q),
            "step {step}"
        );
        if removed + 1 < points.len() {
            let mut i = rng.below(points.len());
            while closed[i] {
                i = rng.below(points.len());
            }
            index.remove(i).unwrap();
            closed[i] = true;
            removed += 1;
        }
    }
}

#[test]
fn knn_on_tree_matches_brute_sort() {
    let mut rng = TestRng::new(0xBEE);
    let points = rng.uniform_points(500, 3);
    let index = NnIndex::build(&points, 2.0).unwrap();
    for _ in 0..50 {
        let q = rng.below(points.len());
        assert_eq!(index.knn(q, 10).unwrap(), brute_knn(&points, 2.0, q, 10));
    }
}

#[test]
fn thousand_point_queries_match_brute_force() {
    let mut rng = TestRng::new(0x5EED);
    let points = rng.uniform_points(1000, 5);
    let index = NnIndex::build(&points, 2.0).unwrap();
    let closed = vec![false; points.len()];
    for _ in 0..100 {
        let q = rng.below(points.len());
        assert_eq!(index.nearest(q), masked_nearest(&points, &closed, 2.0, q));
    }
}

/// Mean points examined per query must grow sublinearly in n on uniform
/// low-dimensional data (a trend check, not a constant bound).
#[test]
fn query_cost_grows_sublinearly() {
    let mut rng = TestRng::new(0xCAFE);
    let mean_examined = |n: usize, rng: &mut TestRng| -> f64 {
        let points = rng.uniform_points(n, 2);
        let index = NnIndex::build(&points, 2.0).unwrap();
        let queries = 200;
        for i in 0..queries {
            index.nearest((i * 7919) % n);
        }
        index.points_examined() as f64 / queries as f64
    };
    let small = mean_examined(1000, &mut rng);
    let large = mean_examined(8000, &mut rng);
    // 8x the points; a linear scan would examine 8x as many. Require
    // clearly sublinear growth.
    assert!(
        large < small * 4.0,
        "examined {small:.1} at n=1000 vs {large:.1} at n=8000"
    );
}
