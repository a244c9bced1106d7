use proptest::collection::vec;
use proptest::prelude::*;
use sensordiff::phase_classifier::{parse_rules, render_rules};
use sensordiff::series_io::{parse_series, render_series};
use sensordiff::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e6..1e6f64,
        -1.0..1.0f64,
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
    ]
}

fn increasing_times(n: usize) -> impl Strategy<Value = Vec<f64>> {
    (-1e3..1e3f64, vec(1e-3..10.0f64, n)).prop_map(|(start, steps)| {
        let mut t = start;
        let mut out = Vec::with_capacity(steps.len());
        for dt in steps {
            out.push(t);
            t += dt;
        }
        out
    })
}

fn series() -> impl Strategy<Value = SampleSeries> {
    (1usize..30, 1usize..4)
        .prop_flat_map(|(n, s)| (increasing_times(n), vec(vec(finite(), s), n)))
        .prop_map(|(times, rows)| SampleSeries::from_rows(times, rows).unwrap())
}

fn rule(s: usize, id: usize) -> impl Strategy<Value = AssociationRule> {
    (
        vec(any::<bool>(), s),
        vec(any::<bool>(), s),
        finite(),
        finite(),
        1usize..10_000,
    )
        .prop_map(move |(bits, pred_bits, a, b, support)| AssociationRule {
            class_id: id,
            bits,
            e_lo: a.min(b),
            e_hi: a.max(b),
            pred_bits,
            support,
        })
}

fn rules() -> impl Strategy<Value = Vec<AssociationRule>> {
    (1usize..6, 1usize..8).prop_flat_map(|(s, k)| (0..k).map(|id| rule(s, id)).collect::<Vec<_>>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn series_text_round_trip_is_exact(s in series()) {
        let back = parse_series(&render_series(&s), true).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn w_is_affine_invariant(
        sample in vec(-100.0..100.0f64, 3..200),
        scale in prop_oneof![-50.0..-0.01f64, 0.01..50.0f64],
        shift in -1e3..1e3f64,
    ) {
        let spread = sample.iter().cloned().fold(f64::MIN, f64::max)
            - sample.iter().cloned().fold(f64::MAX, f64::min);
        prop_assume!(spread > 1e-6);
        let base = sw_statistic(&sample).unwrap();
        let moved: Vec<f64> = sample.iter().map(|x| scale * x + shift).collect();
        let other = sw_statistic(&moved).unwrap();
        prop_assert!((base.w - other.w).abs() <= 1e-9 * base.w, "{} vs {}", base.w, other.w);
        prop_assert!(base.w > 0.0 && base.w <= 1.0);
        prop_assert!((0.0..=1.0).contains(&base.p_value));
    }

    #[test]
    fn smoothing_keeps_length_and_first_value(values in vec(finite(), 2..100)) {
        let m = smooth_values(&values).unwrap();
        prop_assert_eq!(m.len(), values.len());
        prop_assert_eq!(m[0], values[0]);
    }

    #[test]
    fn basis_round_trip(
        vs in vec((0.01..5.0f64, -5.0..5.0f64), 2..60),
    ) {
        let vectors: Vec<SegmentVector> = vs
            .iter()
            .enumerate()
            .map(|(i, (dt, dv))| SegmentVector::new(i + 1, *dt, *dv))
            .collect();
        match orthogonalize(&vectors) {
            Ok(basis) => {
                let back = reconstruct(&basis).unwrap();
                for (a, b) in vectors.iter().zip(&back) {
                    let scale = a.norm();
                    prop_assert!((a.dt - b.dt).abs() <= 1e-10 * scale);
                    prop_assert!((a.dv - b.dv).abs() <= 1e-10 * scale);
                    prop_assert_eq!(a.k, b.k);
                }
                for e in basis.entries.iter().filter(|e| e.parity == Parity::Even) {
                    prop_assert_eq!(e.fourier, 1.0);
                }
            }
            Err(Error::DegenerateScale { .. }) => {}
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn max_gap_matches_scan(energies in vec(prop_oneof![-10i32..10, -3i32..3], 2..40)) {
        let energies: Vec<f64> = energies.iter().map(|&e| f64::from(e) * 0.5).collect();
        let mut sorted = energies.clone();
        sorted.sort_by(f64::total_cmp);
        let mut best: Option<(usize, f64)> = None;
        for i in 0..sorted.len() - 1 {
            let gap = sorted[i + 1] - sorted[i];
            if gap > 0.0 && best.is_none_or(|(_, g)| gap > g) {
                best = Some((i, gap));
            }
        }
        let split = max_gap_split(&energies).unwrap();
        match (split, best) {
            (None, None) => {}
            (Some(s), Some((i, gap))) => {
                prop_assert_eq!(s.boundary, i + 1);
                prop_assert_eq!(s.gap, gap);
                prop_assert_eq!(s.threshold, (sorted[i] + sorted[i + 1]) / 2.0);
            }
            (s, b) => prop_assert!(false, "{s:?} vs {b:?}"),
        }
    }

    #[test]
    fn rules_round_trip(list in rules()) {
        let back = parse_rules(&render_rules(&list)).unwrap();
        prop_assert_eq!(back.len(), list.len());
        for (a, b) in list.iter().zip(&back) {
            prop_assert_eq!(a.e_lo.to_bits(), b.e_lo.to_bits());
            prop_assert_eq!(a.e_hi.to_bits(), b.e_hi.to_bits());
        }
        prop_assert_eq!(back, list);
    }

    #[test]
    fn leaf_count_monotone_in_k(
        energies in vec(-50.0..50.0f64, 1..60),
        k in 1usize..12,
        tau in prop_oneof![Just(0.0), 0.0..0.5f64],
    ) {
        let small = build_tree_from_energies(&energies, k, tau).unwrap();
        let large = build_tree_from_energies(&energies, k + 1, tau).unwrap();
        prop_assert!(large.leaf_count() >= small.leaf_count());
        prop_assert!(small.leaf_count() <= k.max(1));

        let mut seen = vec![0usize; energies.len()];
        for leaf in small.leaves() {
            for &m in &small.nodes[leaf].members {
                seen[m] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn leaf_ranges_are_disjoint_and_ordered(energies in vec(-50.0..50.0f64, 2..60), k in 1usize..10) {
        let tree = build_tree_from_energies(&energies, k, 0.0).unwrap();
        let mut ranges: Vec<(f64, f64)> = tree
            .leaves()
            .iter()
            .map(|&l| (tree.nodes[l].lo, tree.nodes[l].hi))
            .collect();
        ranges.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in ranges.windows(2) {
            prop_assert!(w[0].1 < w[1].0);
        }
    }
}
