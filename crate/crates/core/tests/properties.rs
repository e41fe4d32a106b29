use lscd_core::align::{align_spaces, cosine_distance, normalize_and_center, orthogonal_procrustes, procrustes_residual};
use lscd_core::corpus::{build_vocabulary, extract_usages, Corpus, Sentence};
use lscd_core::discovery::{binarize, sample_population, GradedRanking, Measure};
use lscd_core::metrics::{f_beta, krippendorff_alpha, precision_recall_fbeta, spearman_rho};
use lscd_core::static_embed::VectorSpace;
use lscd_core::token_embed::{apd, com_distance, ApdMode, UsageVectorSet};
use lscd_core::wug::{
    change_labels, cluster_wug, jensen_shannon_distance, normalized_loss, Clustering, Judgment, Rating, SolverConfig,
    Wug,
};
use lscd_core::annotation::{project_from_usages, AnnotationProject, Event, ProjectConfig};
use lscd_core::corpus::UsageSample;
use lscd_core::Period;
use nalgebra::DMatrix;
use proptest::prelude::*;
use std::collections::{BTreeMap, BTreeSet};

fn scores_strategy() -> impl Strategy<Value = BTreeMap<String, f64>> {
    prop::collection::vec(-10.0f64..10.0, 2..40)
        .prop_map(|v| v.into_iter().enumerate().map(|(i, s)| (format!("w{i:03}"), s)).collect())
}

fn ranking(scores: BTreeMap<String, f64>) -> GradedRanking {
    GradedRanking::new(scores, Measure::Cd).unwrap()
}

fn positives(scores: &BTreeMap<String, f64>, t: f64) -> BTreeSet<String> {
    binarize(&ranking(scores.clone()), t).unwrap().positives().map(str::to_owned).collect()
}

fn random_orthogonal(dim: usize, seed: &[f64]) -> DMatrix<f64> {
    let m = DMatrix::from_fn(dim, dim, |r, c| seed[(r * dim + c) % seed.len()] + if r == c { 0.5 } else { 0.0 });
    m.qr().q()
}

fn space(words: usize, dim: usize, values: &[f64]) -> VectorSpace {
    let data: Vec<f64> = (0..words * dim).map(|i| values[i % values.len()] + (i as f64 * 0.37).sin()).collect();
    VectorSpace::new((0..words).map(|i| format!("v{i}")).collect(), dim, data).unwrap()
}

fn rotate(s: &VectorSpace, q: &DMatrix<f64>) -> VectorSpace {
    VectorSpace::from_matrix(s.words().to_vec(), &(s.matrix() * q)).unwrap()
}

fn usage(id: &str, period: Period) -> UsageSample {
    UsageSample { usage_id: id.into(), lemma: "w".into(), context: "w".into(), target_index: 0, period }
}

/// Random WUG: `n` nodes split over both periods, ratings 1..=4 on a random subset of pairs.
fn wug_strategy() -> impl Strategy<Value = Wug> {
    (3usize..9).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        prop::collection::vec(prop::option::weighted(0.7, 1u8..=4), pairs).prop_map(move |ratings| {
            let nodes = (0..n).map(|i| usage(&format!("u{i}"), if i % 2 == 0 { Period::C1 } else { Period::C2 })).collect();
            let mut judgments = Vec::new();
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if let Some(r) = ratings[k] {
                        judgments.push(Judgment::new(format!("u{i}"), format!("u{j}"), "a", Rating::Score(r)));
                    }
                    k += 1;
                }
            }
            Wug::from_parts("w", nodes, judgments).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn positives_shrink_as_t_grows(scores in scores_strategy(), t1 in -2.0f64..2.0, dt in 0.0f64..2.0) {
        let low = positives(&scores, t1);
        let high = positives(&scores, t1 + dt);
        prop_assert!(high.is_subset(&low));
    }

    #[test]
    fn labels_survive_affine_rescaling(scores in scores_strategy(), c in 0.1f64..20.0, b in -50.0f64..50.0, t in -2.0f64..2.0) {
        let scaled: BTreeMap<String, f64> = scores.iter().map(|(k, s)| (k.clone(), c * s + b)).collect();
        let a = binarize(&ranking(scores.clone()), t).unwrap();
        let s = binarize(&ranking(scaled), t).unwrap();
        // labels may only differ for scores sitting on the threshold up to rounding
        for (k, score) in &scores {
            if ((score - a.mu) / a.sigma.max(1e-300) - t).abs() > 1e-9 {
                prop_assert_eq!(a.labels[k], s.labels[k], "{}", k);
            }
        }
    }

    #[test]
    fn labels_ignore_key_order(scores in scores_strategy(), t in -2.0f64..2.0) {
        let renamed: BTreeMap<String, f64> = scores.iter().map(|(k, s)| (format!("z{}", 999 - k[1..].parse::<usize>().unwrap()), *s)).collect();
        let a: Vec<bool> = {
            let p = binarize(&ranking(scores.clone()), t).unwrap();
            scores.keys().map(|k| p.labels[k]).collect()
        };
        let b: Vec<bool> = {
            let p = binarize(&ranking(renamed), t).unwrap();
            scores.keys().map(|k| p.labels[&format!("z{}", 999 - k[1..].parse::<usize>().unwrap())]).collect()
        };
        prop_assert_eq!(a, b);
    }

    #[test]
    fn spearman_ignores_monotone_transforms(x in prop::collection::vec(-5.0f64..5.0, 3..30), y in prop::collection::vec(-5.0f64..5.0, 3..30)) {
        let n = x.len().min(y.len());
        let (x, y) = (&x[..n], &y[..n]);
        if let Ok(rho) = spearman_rho(x, y) {
            let fx: Vec<f64> = x.iter().map(|v| v.powi(3) * 2.0 + 1.0).collect();
            let gy: Vec<f64> = y.iter().map(|v| v.exp()).collect();
            let rho2 = spearman_rho(&fx, &gy).unwrap();
            prop_assert!((rho - rho2).abs() < 1e-9);
        }
    }

    #[test]
    fn alpha_ignores_permutations(
        ratings in prop::collection::vec(prop::collection::vec(prop::option::weighted(0.8, 1u8..=4), 8), 2..5),
        shift in 0usize..8,
    ) {
        let m: Vec<Vec<Option<f64>>> = ratings.iter().map(|r| r.iter().map(|v| v.map(f64::from)).collect()).collect();
        if let Ok(alpha) = krippendorff_alpha(&m) {
            let mut permuted: Vec<Vec<Option<f64>>> = m.iter().rev().cloned().collect();
            for row in &mut permuted {
                row.rotate_left(shift);
            }
            let alpha2 = krippendorff_alpha(&permuted).unwrap();
            prop_assert!((alpha - alpha2).abs() < 1e-9);
        }
    }

    #[test]
    fn f_beta_strictly_increasing(p in 0.01f64..1.0, r in 0.01f64..1.0, dp in 0.001f64..0.5, beta in 0.1f64..3.0) {
        let base = f_beta(p, r, beta);
        prop_assert!(f_beta((p + dp).min(1.0), r, beta) > base || p + dp > 1.0);
        prop_assert!(f_beta(p, (r + dp).min(1.0), beta) > base || r + dp > 1.0);
    }

    #[test]
    fn gold_against_itself_is_perfect(labels in prop::collection::vec(any::<bool>(), 1..30)) {
        let mut gold: BTreeMap<String, bool> = labels.iter().enumerate().map(|(i, &l)| (format!("w{i}"), l)).collect();
        gold.insert("pos".into(), true);
        let e = precision_recall_fbeta(&gold, &gold, 0.5).unwrap();
        prop_assert_eq!((e.precision, e.recall, e.f_beta), (1.0, 1.0, 1.0));
    }

    #[test]
    fn cosine_distance_symmetric_and_scale_free(u in prop::collection::vec(-3.0f64..3.0, 4), v in prop::collection::vec(-3.0f64..3.0, 4), c in 0.01f64..100.0) {
        prop_assume!(u.iter().any(|x| x.abs() > 1e-3) && v.iter().any(|x| x.abs() > 1e-3));
        let d = cosine_distance(&u, &v).unwrap();
        prop_assert!((d - cosine_distance(&v, &u).unwrap()).abs() < 1e-12);
        prop_assert!((0.0..=2.0).contains(&d));
        let scaled: Vec<f64> = u.iter().map(|x| x * c).collect();
        prop_assert!(cosine_distance(&u, &scaled).unwrap().abs() < 1e-12);
        let flipped: Vec<f64> = u.iter().map(|x| -x * c).collect();
        prop_assert!((cosine_distance(&u, &flipped).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn procrustes_invariant_to_common_rotation(vals in prop::collection::vec(-1.0f64..1.0, 16), rot in prop::collection::vec(-1.0f64..1.0, 9)) {
        let s1 = space(12, 6, &vals);
        let s2 = space(12, 6, &vals.iter().rev().copied().collect::<Vec<_>>());
        let q = random_orthogonal(6, &rot);
        let before = align_spaces(&s1, &s2).unwrap();
        let after = align_spaces(&rotate(&s1, &q), &rotate(&s2, &q)).unwrap();
        for w in s1.words() {
            let a = before.distance(w).unwrap().unwrap();
            let b = after.distance(w).unwrap().unwrap();
            prop_assert!((a - b).abs() < 1e-6, "{w}: {a} vs {b}");
        }
    }

    #[test]
    fn procrustes_never_worse_than_identity(vals in prop::collection::vec(-1.0f64..1.0, 20), other in prop::collection::vec(-1.0f64..1.0, 20)) {
        let s1 = normalize_and_center(&space(15, 5, &vals)).unwrap();
        let s2 = normalize_and_center(&space(15, 5, &other)).unwrap();
        let pair = orthogonal_procrustes(&s1, &s2).unwrap();
        let id = DMatrix::identity(5, 5);
        prop_assert!(procrustes_residual(&s1, &s2, &pair.rotation) <= procrustes_residual(&s1, &s2, &id) + 1e-9);
        prop_assert!(pair.orthogonality_defect() <= 1e-6);
    }

    #[test]
    fn apd_symmetric_and_order_free(a in prop::collection::vec(prop::collection::vec(0.1f64..2.0, 3), 1..8), b in prop::collection::vec(prop::collection::vec(0.1f64..2.0, 3), 1..8)) {
        let mk = |p: Period, rows: &[Vec<f64>]| UsageVectorSet::new("w", p, rows.iter().enumerate().map(|(i, r)| (format!("{p}{i}"), r.clone()))).unwrap();
        let (s1, s2) = (mk(Period::C1, &a), mk(Period::C2, &b));
        let d12 = apd(&s1, &s2, ApdMode::Full).unwrap();
        prop_assert!((d12 - apd(&s2, &s1, ApdMode::Full).unwrap()).abs() < 1e-12);
        let rev: Vec<Vec<f64>> = a.iter().rev().cloned().collect();
        let s1r = mk(Period::C1, &rev);
        prop_assert!((d12 - apd(&s1r, &s2, ApdMode::Full).unwrap()).abs() < 1e-12);
        prop_assert!((com_distance(&s1, &s2).unwrap() - com_distance(&s1r, &s2).unwrap()).abs() < 1e-12);
        prop_assert!(com_distance(&s1, &s1).unwrap().abs() < 1e-12);
        let doubled: Vec<Vec<f64>> = a.iter().chain(&a).cloned().collect();
        let s1d = mk(Period::C1, &doubled);
        prop_assert!((com_distance(&s1, &s2).unwrap() - com_distance(&s1d, &s2).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn apd_of_a_set_with_itself_is_positive_unless_parallel(a in prop::collection::vec(prop::collection::vec(0.1f64..2.0, 3), 2..8)) {
        let s = UsageVectorSet::new("w", Period::C1, a.iter().enumerate().map(|(i, r)| (format!("u{i}"), r.clone()))).unwrap();
        let d = apd(&s, &s, ApdMode::Full).unwrap();
        let parallel = a.iter().all(|r| cosine_distance(r, &a[0]).unwrap() < 1e-12);
        prop_assert!(parallel || d > 0.0);
    }

    #[test]
    fn clustering_no_worse_than_trivial_partitions(wug in wug_strategy()) {
        let (clustering, loss) = cluster_wug(&wug, &SolverConfig::default());
        let edges = wug.edges();
        let loss_of = |c: &dyn Fn(&str) -> usize| -> f64 {
            edges.iter().map(|(p, &w)| {
                let same = c(&p.0) == c(&p.1);
                if same && w < 2.5 { 2.5 - w } else if !same && w >= 2.5 { w - 2.5 } else { 0.0 }
            }).sum()
        };
        let singletons = loss_of(&|id: &str| id[1..].parse().unwrap());
        let single = loss_of(&|_: &str| 0);
        prop_assert!(loss <= singletons + 1e-9 && loss <= single + 1e-9);
        prop_assert!((loss - loss_of(&|id: &str| clustering[id])).abs() < 1e-9);
        let nl = normalized_loss(&wug, &clustering);
        prop_assert!((0.0..=1.0).contains(&nl));
    }

    #[test]
    fn normalized_loss_bounded_for_any_clustering(wug in wug_strategy(), labels in prop::collection::vec(0usize..4, 9)) {
        let c: Clustering = wug.nodes.iter().enumerate().map(|(i, n)| (n.usage_id.clone(), labels[i])).collect();
        let nl = normalized_loss(&wug, &c);
        prop_assert!((0.0..=1.0).contains(&nl));
    }

    #[test]
    fn change_labels_ignore_cluster_ids(wug in wug_strategy(), offset in 1usize..50) {
        let (c, _) = cluster_wug(&wug, &SolverConfig::default());
        prop_assume!(wug.active_count(Period::C1) > 0 && wug.active_count(Period::C2) > 0);
        let relabeled: Clustering = c.iter().map(|(k, v)| (k.clone(), 1000 - v * offset)).collect();
        let a = change_labels(&wug, &c).unwrap();
        let b = change_labels(&wug, &relabeled).unwrap();
        prop_assert_eq!(a.binary, b.binary);
        prop_assert!((a.graded - b.graded).abs() < 1e-12);
        prop_assert_eq!(a.gained.len(), b.gained.len());
        prop_assert_eq!(a.lost.len(), b.lost.len());
        for cl in &a.gained {
            prop_assert!(!a.lost.contains(cl));
        }
    }

    #[test]
    fn jsd_is_a_bounded_symmetric_distance(p in prop::collection::vec(0.0f64..1.0, 4), q in prop::collection::vec(0.0f64..1.0, 4)) {
        let (sp, sq): (f64, f64) = (p.iter().sum(), q.iter().sum());
        prop_assume!(sp > 0.01 && sq > 0.01);
        let p: Vec<f64> = p.iter().map(|x| x / sp).collect();
        let q: Vec<f64> = q.iter().map(|x| x / sq).collect();
        let d = jensen_shannon_distance(&p, &q);
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!((d - jensen_shannon_distance(&q, &p)).abs() < 1e-12);
        prop_assert!(jensen_shannon_distance(&p, &p) < 1e-7);
    }

    #[test]
    fn vocabulary_counts_match_token_counts(lines in prop::collection::vec(prop::collection::vec(0usize..6, 1..8), 1..20)) {
        let words = ["a", "b", "c", "d", "e", "f"];
        let sentences: Vec<Sentence> = lines.iter().map(|l| Sentence::from_text(&l.iter().map(|&i| words[i]).collect::<Vec<_>>().join(" "))).collect();
        let c1 = Corpus::new("c1", Period::C1, sentences.clone()).unwrap();
        let c2 = Corpus::new("c2", Period::C2, sentences).unwrap();
        let vocab = build_vocabulary(&c1, &c2);
        prop_assert_eq!(vocab.entries().iter().map(|e| e.freq_c1).sum::<usize>(), c1.token_count());
        prop_assert_eq!(c1.lemma_counts().values().sum::<usize>(), c1.token_count());
    }

    #[test]
    fn usage_extraction_is_seeded_and_distinct(hits in 1usize..60, max_n in 1usize..30, seed in any::<u64>()) {
        let sentences: Vec<Sentence> = (0..hits).map(|i| Sentence::from_text(&format!("x target {i} target"))).collect();
        let c = Corpus::new("c", Period::C1, sentences).unwrap();
        let a = extract_usages(&c, "target", max_n, seed).unwrap();
        prop_assert_eq!(&a, &extract_usages(&c, "target", max_n, seed).unwrap());
        prop_assert_eq!(a.len(), hits.min(max_n));
        let ids: BTreeSet<_> = a.iter().map(|u| &u.usage_id).collect();
        prop_assert_eq!(ids.len(), a.len());
    }

    #[test]
    fn population_allocation_is_exact(freqs in prop::collection::vec(1usize..200, 5..60), frac in 0.0f64..1.0, seed in any::<u64>()) {
        let mut text1 = Vec::new();
        for (i, &f) in freqs.iter().enumerate() {
            for _ in 0..f {
                text1.push(Sentence::from_text(&format!("l{i}")));
            }
        }
        let c1 = Corpus::new("c1", Period::C1, text1.clone()).unwrap();
        let c2 = Corpus::new("c2", Period::C2, text1).unwrap();
        let vocab = build_vocabulary(&c1, &c2);
        let size = ((freqs.len() as f64) * frac) as usize;
        let p = sample_population(&vocab, size, &BTreeSet::new(), seed).unwrap();
        prop_assert_eq!(p.lemmas.len(), size);
        prop_assert_eq!(p.areas.iter().map(|a| a.drawn).sum::<usize>(), size);
        prop_assert_eq!(p, sample_population(&vocab, size, &BTreeSet::new(), seed).unwrap());
    }
}

#[derive(Clone, Debug)]
enum Action {
    Judge { annotator: usize, rating: u8 },
    Advance { force: bool },
}

fn action() -> impl Strategy<Value = Action> {
    prop_oneof![
        8 => (0usize..3, 0u8..=4).prop_map(|(annotator, rating)| Action::Judge { annotator, rating }),
        1 => any::<bool>().prop_map(|force| Action::Advance { force }),
    ]
}

fn small_project(seed: u64) -> AnnotationProject {
    let usages: Vec<UsageSample> = (0..12)
        .map(|i| UsageSample {
            usage_id: format!("u{i:02}"),
            lemma: if i % 3 == 0 { "b".into() } else { "a".into() },
            context: format!("a b {i}"),
            target_index: 0,
            period: if i % 2 == 0 { Period::C1 } else { Period::C2 },
        })
        .collect();
    let config = ProjectConfig { seed, sample_size: 4, ..Default::default() };
    let mut p = project_from_usages("prop", &["a".into(), "b".into()], usages, config).unwrap();
    for name in ["x", "y", "z"] {
        p.register_annotator(name).unwrap();
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn log_replay_reproduces_project(seed in any::<u64>(), actions in prop::collection::vec(action(), 0..80)) {
        let mut p = small_project(seed);
        let names = ["x", "y", "z"];
        for a in actions {
            match a {
                Action::Judge { annotator, rating } => {
                    let who = names[annotator];
                    if let Some(next) = p.next_pair(who).unwrap() {
                        let j = Judgment::new(&next.usage_1.usage_id, &next.usage_2.usage_id, who, Rating::from_code(i64::from(rating)).unwrap());
                        p.submit_judgment(&next.lemma, j.clone()).unwrap();
                        prop_assert!(p.submit_judgment(&next.lemma, j).is_err());
                    }
                }
                Action::Advance { force } => {
                    let _ = p.advance_round(force);
                }
            }
        }
        let mut seen = BTreeSet::new();
        for e in p.log() {
            if let Event::Judgment { lemma, judgment } = e {
                prop_assert!(seen.insert((lemma.clone(), judgment.pair().unwrap(), judgment.annotator.clone())));
            }
        }
        let replayed = AnnotationProject::replay(p.spec().clone(), p.log().iter().cloned()).unwrap();
        prop_assert_eq!(replayed.status(), p.status());
        prop_assert_eq!(&replayed, &p);
    }
}
