//! Randomized invariant checks for the numeric core: similarity measures,
//! neighborhood overlap, data splitting, losses, rank statistics, and the
//! synthetic generator.

use proptest::prelude::*;

use mnno_core::{
    bonferroni_adjust, derive_seed, evaluate_loss, generate_synthetic_paired, k_fold_split,
    load_paired_tsv, mean_nn_overlap, similarity, spearman_rho, top_k_neighbors,
    wilcoxon_rank_sum_p, write_paired_tsv, CrossMap, LossKind, MarginContext, PairedDataset,
    SimilarityMeasure, SynthSpec, VectorSet,
};

const DIM: usize = 4;

fn finite_component() -> impl Strategy<Value = f64> {
    -5.0..5.0f64
}

fn vector(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(finite_component(), dim)
}

fn nonzero_vector(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    vector(dim).prop_filter("needs non-negligible norm", |v| {
        v.iter().map(|c| c * c).sum::<f64>().sqrt() > 1e-3
    })
}

fn point_cloud(n: usize, dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(nonzero_vector(dim), n)
}

fn make_set(points: &[Vec<f64>]) -> VectorSet<f64> {
    let keys = (0..points.len()).map(|i| format!("item{i:03}")).collect();
    VectorSet::from_rows(keys, points.to_vec()).unwrap()
}

/// True when all pairwise similarities within a set are separated by more
/// than `gap`, i.e. no near-ties that a perturbation could flip.
fn well_separated(points: &[Vec<f64>], measure: SimilarityMeasure, gap: f64) -> bool {
    let n = points.len();
    for i in 0..n {
        let mut sims: Vec<f64> = (0..n)
            .filter(|&j| j != i)
            .map(|j| similarity(&points[i], &points[j], measure).unwrap())
            .collect();
        sims.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if sims.windows(2).any(|w| (w[1] - w[0]).abs() <= gap) {
            return false;
        }
    }
    true
}

/// Reflection through the hyperplane orthogonal to `u`: an exactly orthogonal
/// linear map (up to rounding), distance- and angle-preserving.
fn householder(points: &[Vec<f64>], u: &[f64]) -> Vec<Vec<f64>> {
    let uu: f64 = u.iter().map(|c| c * c).sum();
    points
        .iter()
        .map(|p| {
            let pu: f64 = p.iter().zip(u).map(|(a, b)| a * b).sum();
            let scale = 2.0 * pu / uu;
            p.iter().zip(u).map(|(a, b)| a - scale * b).collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn similarity_is_symmetric(
        a in nonzero_vector(DIM),
        b in nonzero_vector(DIM),
    ) {
        for measure in [SimilarityMeasure::Cosine, SimilarityMeasure::Euclidean] {
            let ab = similarity(&a, &b, measure).unwrap();
            let ba = similarity(&b, &a, measure).unwrap();
            prop_assert_eq!(ab, ba);
        }
    }

    #[test]
    fn similarity_ranges(
        a in nonzero_vector(DIM),
        b in nonzero_vector(DIM),
    ) {
        let cos = similarity(&a, &b, SimilarityMeasure::Cosine).unwrap();
        prop_assert!((-1.0..=1.0).contains(&cos));
        let euc = similarity(&a, &b, SimilarityMeasure::Euclidean).unwrap();
        prop_assert!(euc > 0.0 && euc <= 1.0);
    }

    #[test]
    fn cosine_ignores_positive_scaling(
        a in nonzero_vector(DIM),
        b in nonzero_vector(DIM),
        alpha in 0.1..10.0f64,
        beta in 0.1..10.0f64,
    ) {
        let base = similarity(&a, &b, SimilarityMeasure::Cosine).unwrap();
        let sa: Vec<f64> = a.iter().map(|c| c * alpha).collect();
        let sb: Vec<f64> = b.iter().map(|c| c * beta).collect();
        let scaled = similarity(&sa, &sb, SimilarityMeasure::Cosine).unwrap();
        prop_assert!((base - scaled).abs() < 1e-12);
    }

    #[test]
    fn euclidean_similarity_ignores_shared_translation(
        a in nonzero_vector(DIM),
        b in nonzero_vector(DIM),
        t in vector(DIM),
    ) {
        let base = similarity(&a, &b, SimilarityMeasure::Euclidean).unwrap();
        let ta: Vec<f64> = a.iter().zip(&t).map(|(c, s)| c + s).collect();
        let tb: Vec<f64> = b.iter().zip(&t).map(|(c, s)| c + s).collect();
        let moved = similarity(&ta, &tb, SimilarityMeasure::Euclidean).unwrap();
        prop_assert!((base - moved).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn overlap_is_symmetric_bounded_and_total_at_full_k(
        v in point_cloud(8, DIM),
        z in point_cloud(8, DIM),
        k in 1usize..4,
    ) {
        let vs = make_set(&v);
        let zs = make_set(&z);
        let m = mean_nn_overlap(&vs, &zs, k, SimilarityMeasure::Euclidean).unwrap();
        let m_rev = mean_nn_overlap(&zs, &vs, k, SimilarityMeasure::Euclidean).unwrap();
        prop_assert_eq!(m, m_rev);
        prop_assert!((0.0..=1.0).contains(&m));
        prop_assert_eq!(
            mean_nn_overlap(&vs, &vs, k, SimilarityMeasure::Euclidean).unwrap(),
            1.0
        );
        // With K = N-1 every point neighbors every other in both spaces.
        let full = mean_nn_overlap(&vs, &zs, v.len() - 1, SimilarityMeasure::Euclidean).unwrap();
        prop_assert_eq!(full, 1.0);
    }

    #[test]
    fn overlap_survives_a_shared_permutation(
        v in point_cloud(7, DIM),
        z in point_cloud(7, DIM),
        rot in 1usize..6,
    ) {
        prop_assume!(well_separated(&v, SimilarityMeasure::Euclidean, 1e-9));
        prop_assume!(well_separated(&z, SimilarityMeasure::Euclidean, 1e-9));
        let base = mean_nn_overlap(
            &make_set(&v), &make_set(&z), 2, SimilarityMeasure::Euclidean,
        ).unwrap();
        let perm: Vec<usize> = (0..v.len()).map(|i| (i + rot) % v.len()).collect();
        let pv: Vec<Vec<f64>> = perm.iter().map(|&i| v[i].clone()).collect();
        let pz: Vec<Vec<f64>> = perm.iter().map(|&i| z[i].clone()).collect();
        let moved = mean_nn_overlap(
            &make_set(&pv), &make_set(&pz), 2, SimilarityMeasure::Euclidean,
        ).unwrap();
        prop_assert_eq!(base, moved);
    }

    #[test]
    fn overlap_survives_an_orthogonal_transform_of_one_space(
        v in point_cloud(7, DIM),
        z in point_cloud(7, DIM),
        u in nonzero_vector(DIM),
    ) {
        prop_assume!(well_separated(&z, SimilarityMeasure::Euclidean, 1e-6));
        let base = mean_nn_overlap(
            &make_set(&v), &make_set(&z), 2, SimilarityMeasure::Euclidean,
        ).unwrap();
        let hz = householder(&z, &u);
        let reflected = mean_nn_overlap(
            &make_set(&v), &make_set(&hz), 2, SimilarityMeasure::Euclidean,
        ).unwrap();
        prop_assert_eq!(base, reflected);
    }

    #[test]
    fn neighbor_rows_exclude_self_and_have_effective_k_entries(
        v in point_cloud(9, DIM),
        k in 1usize..12,
    ) {
        let vs = make_set(&v);
        let index = top_k_neighbors(&vs, k, SimilarityMeasure::Euclidean).unwrap();
        let k_eff = k.min(v.len() - 1);
        prop_assert_eq!(index.effective_k(), k_eff);
        for (i, row) in index.rows().iter().enumerate() {
            prop_assert_eq!(row.len(), k_eff);
            prop_assert!(!row.contains(&i));
            let mut dedup = row.clone();
            dedup.sort_unstable();
            dedup.dedup();
            prop_assert_eq!(dedup.len(), k_eff);
        }
    }
}

fn paired(n: usize) -> impl Strategy<Value = PairedDataset<f64>> {
    (point_cloud(n, DIM), point_cloud(n, DIM)).prop_map(|(x, y)| {
        PairedDataset::new(make_set(&x), make_set(&y), None).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn k_fold_test_sets_partition_the_dataset(
        ds in paired(11),
        k in 2usize..6,
        seed in any::<u64>(),
    ) {
        let folds = k_fold_split(&ds, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut test_keys: Vec<String> = Vec::new();
        let mut sizes = Vec::new();
        for (train, test) in &folds {
            prop_assert_eq!(train.len() + test.len(), ds.len());
            sizes.push(test.len());
            for key in test.keys() {
                prop_assert!(!train.keys().contains(key));
            }
            test_keys.extend(test.keys().iter().cloned());
        }
        test_keys.sort();
        let mut all: Vec<String> = ds.keys().to_vec();
        all.sort();
        prop_assert_eq!(test_keys, all);
        let (min, max) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
        prop_assert!(max - min <= 1);
    }

    #[test]
    fn paired_tsv_round_trips_bit_exactly(
        x in point_cloud(6, DIM),
        y in point_cloud(6, 3),
        labeled in any::<bool>(),
    ) {
        let labels = labeled.then(|| (0..6).map(|i| format!("class{}", i % 2)).collect());
        let ds = PairedDataset::new(make_set(&x), make_set(&y), labels).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.tsv");
        write_paired_tsv(&path, &ds).unwrap();
        let back: PairedDataset<f64> = load_paired_tsv(&path).unwrap();
        prop_assert_eq!(back, ds);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn mse_is_invariant_under_simultaneous_orthogonal_transform(
        p in nonzero_vector(DIM),
        t in nonzero_vector(DIM),
        u in nonzero_vector(DIM),
    ) {
        let base = evaluate_loss(LossKind::Mse, &p, &t, None).unwrap().value;
        let hp = &householder(std::slice::from_ref(&p), &u)[0];
        let ht = &householder(std::slice::from_ref(&t), &u)[0];
        let reflected = evaluate_loss(LossKind::Mse, hp, ht, None).unwrap().value;
        prop_assert!((base - reflected).abs() <= 1e-9 * (1.0 + base.abs()));
    }

    #[test]
    fn cosine_loss_is_invariant_under_positive_scaling(
        p in nonzero_vector(DIM),
        t in nonzero_vector(DIM),
        alpha in 0.1..10.0f64,
        beta in 0.1..10.0f64,
    ) {
        let base = evaluate_loss(LossKind::Cosine, &p, &t, None).unwrap().value;
        let sp: Vec<f64> = p.iter().map(|c| c * alpha).collect();
        let st: Vec<f64> = t.iter().map(|c| c * beta).collect();
        let scaled = evaluate_loss(LossKind::Cosine, &sp, &st, None).unwrap().value;
        prop_assert!((base - scaled).abs() < 1e-10);
        prop_assert!((0.0..=2.0).contains(&base));
    }

    #[test]
    fn max_margin_is_non_negative_and_zero_when_satisfied(
        p in nonzero_vector(DIM),
        t in nonzero_vector(DIM),
        neg in nonzero_vector(DIM),
        margin in 0.0..5.0f64,
    ) {
        let ctx = MarginContext { neg_pred: &neg, margin };
        let eval = evaluate_loss(LossKind::MaxMargin, &p, &t, Some(ctx)).unwrap();
        prop_assert!(eval.value >= 0.0);
        let dist = |a: &[f64], b: &[f64]| -> f64 {
            a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
        };
        let slack = margin + dist(&p, &t) - dist(&neg, &t);
        if slack <= 0.0 {
            prop_assert_eq!(eval.value, 0.0);
            prop_assert!(eval.upstream.iter().all(|&g| g == 0.0));
        } else {
            prop_assert!((eval.value - slack).abs() < 1e-12);
        }
    }

    #[test]
    fn spearman_is_symmetric_and_rank_based(
        pairs in prop::collection::vec((finite_component(), finite_component()), 4..20),
    ) {
        let a: Vec<f64> = pairs.iter().map(|(x, _)| *x).collect();
        let b: Vec<f64> = pairs.iter().map(|(_, y)| *y).collect();
        prop_assume!(a.iter().any(|&v| v != a[0]));
        prop_assume!(b.iter().any(|&v| v != b[0]));
        let ab = spearman_rho(&a, &b).unwrap();
        let ba = spearman_rho(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&ab));
        prop_assert!((spearman_rho(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        // A strictly increasing transform preserves ranks exactly.
        let cubed: Vec<f64> = a.iter().map(|v| v * v * v).collect();
        prop_assert_eq!(spearman_rho(&cubed, &b).unwrap(), ab);
    }

    #[test]
    fn wilcoxon_p_is_symmetric_and_in_range(
        a in prop::collection::vec(finite_component(), 2..8),
        b in prop::collection::vec(finite_component(), 2..8),
    ) {
        let p_ab = wilcoxon_rank_sum_p(&a, &b).unwrap();
        let p_ba = wilcoxon_rank_sum_p(&b, &a).unwrap();
        prop_assert!((p_ab - p_ba).abs() < 1e-12);
        prop_assert!(p_ab > 0.0 && p_ab <= 1.0);
    }

    #[test]
    fn bonferroni_is_monotone_and_clamped(
        ps in prop::collection::vec(1e-12..1.0f64, 1..8),
        extra in 0usize..3,
    ) {
        let m = ps.len() + extra;
        let adjusted = bonferroni_adjust(&ps, Some(m)).unwrap();
        for (raw, adj) in ps.iter().zip(&adjusted) {
            prop_assert!(*adj >= *raw);
            prop_assert!(*adj <= 1.0);
            prop_assert!((adj - (raw * m as f64).min(1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn derived_seeds_differ_across_context_parts(
        base in any::<u64>(),
        a in any::<u64>(),
        b in any::<u64>(),
    ) {
        prop_assume!(a != b);
        prop_assert_ne!(derive_seed(base, &[a]), derive_seed(base, &[b]));
        prop_assert_eq!(derive_seed(base, &[a, b]), derive_seed(base, &[a, b]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn synthetic_datasets_satisfy_their_contract(
        n_classes in 2usize..5,
        items in 2usize..5,
        d_x in 2usize..5,
        d_y in 2usize..5,
        linear in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let spec = SynthSpec {
            n_classes,
            items_per_class: items,
            d_x,
            d_y,
            cross_map: if linear { CrossMap::Linear } else { CrossMap::TanhMlp },
            noise_x: 0.3,
            noise_y: 0.3,
            seed,
        };
        let ds: PairedDataset<f64> = generate_synthetic_paired(&spec).unwrap();
        prop_assert_eq!(ds.len(), n_classes * items);
        prop_assert_eq!(ds.x().dim(), d_x);
        prop_assert_eq!(ds.y().dim(), d_y);
        let labels = ds.labels().unwrap();
        for label in labels {
            prop_assert_eq!(labels.iter().filter(|l| *l == label).count(), items);
        }
        let again: PairedDataset<f64> = generate_synthetic_paired(&spec).unwrap();
        prop_assert_eq!(ds, again);
    }
}
