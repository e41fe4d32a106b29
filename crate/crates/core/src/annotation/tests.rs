use super::*;
use crate::corpus::Sentence;
use crate::wug::Rating;

fn corpus(period: Period, lines: &[&str]) -> Corpus {
    Corpus::new("c", period, lines.iter().map(|l| Sentence::from_text(l)).collect()).unwrap()
}

fn usage(id: &str, period: Period) -> UsageSample {
    UsageSample { usage_id: id.into(), lemma: "w".into(), context: format!("w {id}"), target_index: 0, period }
}

fn project(ids: &[(&str, Period)]) -> AnnotationProject {
    let usages = ids.iter().map(|(i, p)| usage(i, *p)).collect();
    let spec = ProjectSpec {
        id: "p".into(),
        config: ProjectConfig::default(),
        targets: vec![TargetSpec { lemma: "w".into(), usages, issues: vec![] }],
    };
    let mut p = AnnotationProject::new(spec).unwrap();
    p.register_annotator("ann").unwrap();
    p
}

fn set_pool(p: &mut AnnotationProject, pairs: &[(&str, &str)]) {
    let t = p.targets.get_mut("w").unwrap();
    t.schedule.clear();
    t.scheduled.clear();
    for (a, b) in pairs {
        t.schedule(p.round, PairKey::new(a, b).unwrap());
    }
}

fn judge(p: &mut AnnotationProject, a: &str, b: &str, who: &str, r: Rating) -> Result<()> {
    p.submit_judgment("w", Judgment::new(a, b, who, r))
}

#[test]
fn creation_samples_and_flags() {
    let mut c1_lines = vec!["only ten haus"; 10];
    c1_lines.push("no target");
    let c1 = corpus(Period::C1, &c1_lines);
    let c2_lines: Vec<String> = (0..40).map(|i| format!("haus {i}")).collect();
    let c2 = corpus(Period::C2, &c2_lines.iter().map(String::as_str).collect::<Vec<_>>());
    let targets = vec!["haus".to_string(), "baum".to_string()];
    let p = create_project("p1", &targets, &c1, &c2, ProjectConfig::default()).unwrap();
    let haus = &p.spec().targets.iter().find(|t| t.lemma == "haus").unwrap();
    assert_eq!(haus.usages.len(), 35);
    assert_eq!(haus.issues, vec![TargetIssue::UnderSampled { period: Period::C1, found: 10, requested: 25 }]);
    let baum = &p.spec().targets.iter().find(|t| t.lemma == "baum").unwrap();
    assert_eq!(baum.issues.len(), 2);
    assert_eq!(p.schedule("haus").unwrap().len(), 70);
    assert!(p.schedule("baum").unwrap().is_empty());
    assert_eq!(p, create_project("p1", &targets, &c1, &c2, ProjectConfig::default()).unwrap());
    assert!(create_project("bad id", &targets, &c1, &c2, ProjectConfig::default()).is_err());
}

#[test]
fn pair_unranking_covers_all_pairs() {
    let n = 7;
    let pairs: Vec<_> = (0..n * (n - 1) / 2).map(|k| unrank_pair(k, n)).collect();
    let mut expected = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            expected.push((i, j));
        }
    }
    assert_eq!(pairs, expected);
}

#[test]
fn serving_is_per_annotator_and_exhausts() {
    let ids: Vec<(String, Period)> = (0..20).map(|i| (format!("u{i:02}"), if i < 10 { Period::C1 } else { Period::C2 })).collect();
    let refs: Vec<(&str, Period)> = ids.iter().map(|(i, p)| (i.as_str(), *p)).collect();
    let mut p = project(&refs);
    p.register_annotator("other").unwrap();
    assert!(p.next_pair("nobody").is_err());

    let order = |p: &AnnotationProject, who: &str| {
        let mut q = p.clone();
        let mut out = Vec::new();
        while let Some(n) = q.next_pair(who).unwrap() {
            out.push(PairKey::new(&n.usage_1.usage_id, &n.usage_2.usage_id).unwrap());
            judge(&mut q, &n.usage_1.usage_id, &n.usage_2.usage_id, who, Rating::Score(3)).unwrap();
        }
        out
    };
    let a = order(&p, "ann");
    let b = order(&p, "other");
    assert_eq!(a.len(), 40);
    assert_eq!(a.iter().collect::<BTreeSet<_>>(), b.iter().collect::<BTreeSet<_>>());
    assert_ne!(a, b);

    let first = p.next_pair("ann").unwrap().unwrap();
    assert_eq!(first.scale[0], (4, "Identical".to_string()));
    judge(&mut p, &first.usage_1.usage_id, &first.usage_2.usage_id, "ann", Rating::Score(4)).unwrap();
    assert!(judge(&mut p, &first.usage_2.usage_id, &first.usage_1.usage_id, "ann", Rating::Score(2)).is_err());
    judge(&mut p, &first.usage_1.usage_id, &first.usage_2.usage_id, "other", Rating::Score(2)).unwrap();
}

#[test]
fn judgments_are_validated() {
    let mut p = project(&[("a", Period::C1), ("b", Period::C2), ("c", Period::C2)]);
    set_pool(&mut p, &[("a", "b")]);
    assert!(judge(&mut p, "a", "c", "ann", Rating::Score(3)).is_err());
    assert!(judge(&mut p, "a", "b", "stranger", Rating::Score(3)).is_err());
    assert!(p.submit_judgment("zzz", Judgment::new("a", "b", "ann", Rating::Score(3))).is_err());
    assert!(p.register_annotator("ann").is_err());
    judge(&mut p, "a", "b", "ann", Rating::Abstain).unwrap();
    assert!(p.wug("w").unwrap().edges().is_empty());
    assert_eq!(p.log().len(), 2);
}

#[test]
fn single_cluster_completes_immediately() {
    let mut p = project(&[("a", Period::C1), ("b", Period::C1), ("c", Period::C2)]);
    set_pool(&mut p, &[("a", "b"), ("b", "c")]);
    judge(&mut p, "a", "b", "ann", Rating::Score(4)).unwrap();
    assert!(p.advance_round(false).is_err());
    judge(&mut p, "b", "c", "ann", Rating::Score(4)).unwrap();
    let status = p.advance_round(false).unwrap();
    assert!(status.all_complete());
    assert_eq!(status.targets["w"].unconnected_multicluster_pairs, Some(0));
    assert!(p.next_pair("ann").unwrap().is_none());
}

#[test]
fn two_multiclusters_get_one_bridge() {
    let mut p = project(&[("a", Period::C1), ("b", Period::C1), ("c", Period::C2), ("d", Period::C2)]);
    set_pool(&mut p, &[("a", "b"), ("c", "d")]);
    judge(&mut p, "a", "b", "ann", Rating::Score(4)).unwrap();
    judge(&mut p, "c", "d", "ann", Rating::Score(4)).unwrap();
    let status = p.advance_round(false).unwrap();
    let t = &status.targets["w"];
    assert!(!t.complete);
    assert_eq!(t.unconnected_multicluster_pairs, Some(1));
    assert_eq!(t.total_scheduled, 3);
    let new = &p.schedule("w").unwrap()[2];
    assert_eq!(new.round, 1);
    assert!(new.pair.contains("a") || new.pair.contains("b"));
    assert!(new.pair.contains("c") || new.pair.contains("d"));

    let served = p.next_pair("ann").unwrap().unwrap();
    judge(&mut p, &served.usage_1.usage_id, &served.usage_2.usage_id, "ann", Rating::Score(1)).unwrap();
    let status = p.advance_round(false).unwrap();
    assert!(status.all_complete());
    // n = 3 exceeds both cluster sizes, so only the graded score registers the split
    let change = p.change("w").unwrap();
    assert!(!change.binary);
    assert!((change.graded - 1.0).abs() < 1e-12);
}

#[test]
fn forced_advance_and_replay() {
    let mut p = project(&[("a", Period::C1), ("b", Period::C1), ("c", Period::C2), ("d", Period::C2)]);
    let n = p.next_pair("ann").unwrap().unwrap();
    judge(&mut p, &n.usage_1.usage_id, &n.usage_2.usage_id, "ann", Rating::Score(4)).unwrap();
    let status = p.advance_round(true).unwrap();
    let replayed = AnnotationProject::replay(p.spec().clone(), p.log().to_vec()).unwrap();
    assert_eq!(replayed.status(), status);
    assert_eq!(replayed, p);
}

#[test]
fn store_roundtrip_and_torn_write() {
    let dir = tempfile::tempdir().unwrap();
    let store = ProjectStore::open(dir.path()).unwrap();
    let mut p = project(&[("a", Period::C1), ("b", Period::C1), ("c", Period::C2)]);
    store.create(&p).unwrap();
    assert!(store.create(&p).is_err());
    let n = p.next_pair("ann").unwrap().unwrap();
    let event = Event::Judgment {
        lemma: "w".into(),
        judgment: Judgment::new(n.usage_1.usage_id, n.usage_2.usage_id, "ann", Rating::Score(3)),
    };
    store.execute(&mut p, event.clone()).unwrap();
    assert!(store.execute(&mut p, event).is_err());
    store.execute(&mut p, Event::Advance { force: true }).unwrap();
    let loaded = store.load("p").unwrap();
    assert_eq!(loaded.status(), p.status());

    let log = dir.path().join("p").join("log.jsonl");
    let mut text = std::fs::read_to_string(&log).unwrap();
    text.push_str("{\"event\":\"annot");
    std::fs::write(&log, &text).unwrap();
    assert_eq!(store.load("p").unwrap().status(), p.status());
    assert!(std::fs::read_to_string(&log).unwrap().ends_with('\n'));
    assert_eq!(store.load_all().unwrap().len(), 1);
}

#[test]
fn export_omits_clusters_before_clustering() {
    let mut p = project(&[("a", Period::C1), ("b", Period::C1), ("c", Period::C2)]);
    assert!(p.export_wug("w").is_err());
    let n = p.next_pair("ann").unwrap().unwrap();
    judge(&mut p, &n.usage_1.usage_id, &n.usage_2.usage_id, "ann", Rating::Score(3)).unwrap();
    let files = p.export_wug("w").unwrap().files;
    assert!(!files.contains_key("clusters.tsv"));
    let judgments = wug::read_judgments(files["judgments.tsv"].as_bytes()).unwrap();
    let nodes = crate::corpus::read_usages_from(files["uses.tsv"].as_bytes()).unwrap();
    let back = Wug::from_parts("w", nodes, judgments).unwrap();
    assert_eq!(back.edges(), p.wug("w").unwrap().edges());

    p.advance_round(true).unwrap();
    let files = p.export_wug("w").unwrap().files;
    assert!(files.contains_key("clusters.tsv"));
    let layout: Layout = serde_json::from_str(&files["layout.json"]).unwrap();
    assert_eq!(layout.nodes.len(), 3);
    assert!(p.export_wug("nope").is_err());
}
