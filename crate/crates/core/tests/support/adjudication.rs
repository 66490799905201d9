#![allow(dead_code)]

//! Random adjudication cases, a brute-force oracle and the properties checked
//! against `resolve`. Also run by the acceptance suite.

use std::collections::HashMap;

use proptest::prelude::*;
use sensecrowd_core::{
    resolve, uncertainty_flag, validate_annotation, Annotation, AnnotationKind, Annotator,
    AnnotatorId, LexiconEntry, PartOfSpeech, Resolution, SenseInventory, WordId, UNCERTAIN,
};

pub fn annotator(i: usize, score: u8) -> Annotator {
    Annotator {
        annotator_id: AnnotatorId(format!("a{i:02}")),
        name: format!("n{i}"),
        email: format!("a{i}@example.org"),
        profession: "teacher".into(),
        education: "ma".into(),
        score,
        registered_at: 0,
    }
}

/// One annotation per annotator, drawn from the labels legal for `pos`/`kind`.
#[derive(Clone, Debug)]
pub struct Case {
    pub pos: PartOfSpeech,
    pub kind: AnnotationKind,
    pub annotators: Vec<Annotator>,
    pub annotations: Vec<Annotation>,
}

pub fn case_strategy() -> impl Strategy<Value = Case> {
    let shape = prop_oneof![
        Just((PartOfSpeech::Verb, AnnotationKind::Sense)),
        Just((PartOfSpeech::Adverb, AnnotationKind::Sense)),
        Just((PartOfSpeech::Adjective, AnnotationKind::Sense)),
        Just((PartOfSpeech::Verb, AnnotationKind::Polarity)),
    ];
    (shape, 1usize..8).prop_flat_map(|((pos, kind), n)| {
        let inv = SenseInventory::default();
        let primary = inv.allowed_primary(kind, pos);
        let secondary = inv.allowed_secondary(kind, pos);
        // Restrict to a few labels so agreement and ties are common.
        let pick = primary.len().min(3);
        let tags = proptest::collection::vec(
            (0..pick, 0..pick, any::<bool>(), 0u8..=10),
            n,
        );
        (Just((pos, kind, primary, secondary)), tags).prop_map(
            move |((pos, kind, primary, secondary), draws)| {
                let mut annotators = Vec::new();
                let mut annotations = Vec::new();
                for (i, (p, s, uncertain, score)) in draws.into_iter().enumerate() {
                    annotators.push(annotator(i, score));
                    let prim = if uncertain && kind == AnnotationKind::Sense {
                        UNCERTAIN.to_string()
                    } else {
                        primary[p].clone()
                    };
                    let sec = secondary.as_ref().map(|list| {
                        if uncertain {
                            UNCERTAIN.to_string()
                        } else {
                            list[s].clone()
                        }
                    });
                    annotations.push(Annotation {
                        annotator_id: AnnotatorId(format!("a{i:02}")),
                        kind,
                        primary_tag: prim,
                        secondary_tag: sec,
                        timestamp: i as i64,
                    });
                }
                Case {
                    pos,
                    kind,
                    annotators,
                    annotations,
                }
            },
        )
    })
}

pub fn roster(case: &Case) -> HashMap<AnnotatorId, Annotator> {
    case.annotators
        .iter()
        .map(|a| (a.annotator_id.clone(), a.clone()))
        .collect()
}

pub type Pair = (String, Option<String>);

pub fn pair(a: &Annotation) -> Pair {
    (a.primary_tag.clone(), a.secondary_tag.clone())
}

/// Brute-force restatement of the adjudication rule.
pub fn oracle(case: &Case) -> (Option<Pair>, Resolution) {
    let scores = roster(case);
    let decisive: Vec<&Annotation> = case
        .annotations
        .iter()
        .filter(|a| a.primary_tag != UNCERTAIN)
        .collect();
    if decisive.is_empty() {
        let sec = case
            .annotations
            .iter()
            .any(|a| a.secondary_tag.is_some())
            .then(|| UNCERTAIN.to_string());
        return (Some((UNCERTAIN.to_string(), sec)), Resolution::Unanimous);
    }
    let first = pair(decisive[0]);
    if decisive.iter().all(|a| pair(a) == first) {
        return (Some(first), Resolution::Unanimous);
    }
    let mut best = 0u8;
    for a in &decisive {
        best = best.max(scores[&a.annotator_id].score);
    }
    let mut leaders: Vec<Pair> = decisive
        .iter()
        .filter(|a| scores[&a.annotator_id].score == best)
        .map(|a| pair(a))
        .collect();
    leaders.sort();
    leaders.dedup();
    if leaders.len() == 1 {
        (Some(leaders.remove(0)), Resolution::ScoreWin)
    } else {
        (None, Resolution::NeedsReview)
    }
}

pub fn matches_oracle(case: &Case) -> Result<(), TestCaseError> {
    let got = resolve(&case.annotations, &roster(case)).unwrap();
    let (tags, resolution) = oracle(case);
    prop_assert_eq!(got.resolution, resolution);
    prop_assert_eq!(got.primary_tag.clone(), tags.as_ref().map(|t| t.0.clone()));
    prop_assert_eq!(got.secondary_tag.clone(), tags.and_then(|t| t.1));
    prop_assert_eq!(got.resolution == Resolution::NeedsReview, got.primary_tag.is_none());
    Ok(())
}

pub fn order_invariance(case: &Case, perm_seed: u64) -> Result<(), TestCaseError> {
    let roster = roster(case);
    let base = resolve(&case.annotations, &roster).unwrap();
    let mut shuffled = case.annotations.clone();
    // Fisher-Yates driven by a simple LCG so the permutation is reproducible.
    let mut s = perm_seed;
    for i in (1..shuffled.len()).rev() {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        shuffled.swap(i, (s >> 33) as usize % (i + 1));
    }
    prop_assert_eq!(resolve(&shuffled, &roster).unwrap(), base);
    Ok(())
}

/// Makes one decisive annotator strictly the best and checks their tags win.
pub fn unique_top_scorer_dominates(case: &Case, winner: prop::sample::Index) -> Result<(), TestCaseError> {
    let mut case = case.clone();
    let decisive: Vec<usize> = (0..case.annotations.len())
        .filter(|&i| case.annotations[i].primary_tag != UNCERTAIN)
        .collect();
    prop_assume!(!decisive.is_empty());
    let w = decisive[winner.index(decisive.len())];
    for (i, a) in case.annotators.iter_mut().enumerate() {
        a.score = if i == w { 10 } else { a.score.min(9) };
    }
    let got = resolve(&case.annotations, &roster(&case)).unwrap();
    prop_assert_eq!(got.primary_tag, Some(case.annotations[w].primary_tag.clone()));
    prop_assert_eq!(got.secondary_tag, case.annotations[w].secondary_tag.clone());
    prop_assert_ne!(got.resolution, Resolution::NeedsReview);
    Ok(())
}

/// Every annotator gets the same score, so any disagreement is a tie.
pub fn tied_disagreeing_leaders_need_review(case: &Case, score: u8) -> Result<(), TestCaseError> {
    let mut case = case.clone();
    for a in &mut case.annotators {
        a.score = score;
    }
    let mut decisive: Vec<Pair> = case
        .annotations
        .iter()
        .filter(|a| a.primary_tag != UNCERTAIN)
        .map(pair)
        .collect();
    decisive.sort();
    decisive.dedup();
    let got = resolve(&case.annotations, &roster(&case)).unwrap();
    if decisive.len() > 1 {
        prop_assert_eq!(got.resolution, Resolution::NeedsReview);
        prop_assert!(got.primary_tag.is_none() && got.secondary_tag.is_none());
    } else {
        prop_assert_eq!(got.resolution, Resolution::Unanimous);
    }
    Ok(())
}

pub fn resolved_tags_stay_in_inventory(case: &Case) -> Result<(), TestCaseError> {
    let inv = SenseInventory::default();
    let mut entry = LexiconEntry::new(WordId("w".into()), "padaṃ", case.pos, "gloss", "example");
    for a in &case.annotations {
        prop_assert!(validate_annotation(a, &entry, &inv).is_ok());
        entry.upsert_annotation(a.clone());
    }
    let got = resolve(&case.annotations, &roster(case)).unwrap();
    if let Some(p) = &got.primary_tag {
        prop_assert!(inv.allowed_primary(case.kind, case.pos).contains(p));
    }
    match (&got.secondary_tag, inv.allowed_secondary(case.kind, case.pos)) {
        (Some(s), Some(allowed)) => prop_assert!(allowed.contains(s)),
        (Some(_), None) => prop_assert!(false, "secondary tag where none is allowed"),
        _ => {}
    }
    Ok(())
}

#[derive(Clone, Copy, Debug)]
pub struct FlagCase {
    pub uncertain: usize,
    pub certain: usize,
    pub threshold: f64,
    pub min_annotations: usize,
}

pub fn flag_case_strategy() -> impl Strategy<Value = FlagCase> {
    (0usize..8, 0usize..8, 0.01f64..=1.0, 1usize..6).prop_map(
        |(uncertain, certain, threshold, min_annotations)| FlagCase {
            uncertain,
            certain,
            threshold,
            min_annotations,
        },
    )
}

/// Adding an `Uncertain` annotation never clears the flag.
pub fn flag_is_monotone(c: FlagCase) -> Result<(), TestCaseError> {
    let mut entry = LexiconEntry::new(WordId("w".into()), "padaṃ", PartOfSpeech::Verb, "g", "e");
    for i in 0..c.uncertain + c.certain {
        let tag = if i < c.uncertain { UNCERTAIN } else { "ToDo" };
        entry.upsert_annotation(Annotation {
            annotator_id: AnnotatorId(format!("a{i}")),
            kind: AnnotationKind::Sense,
            primary_tag: tag.into(),
            secondary_tag: Some(tag.into()),
            timestamp: 0,
        });
    }
    let before = uncertainty_flag(&entry, c.threshold, c.min_annotations);
    entry.upsert_annotation(Annotation {
        annotator_id: AnnotatorId("extra".into()),
        kind: AnnotationKind::Sense,
        primary_tag: UNCERTAIN.into(),
        secondary_tag: Some(UNCERTAIN.into()),
        timestamp: 1,
    });
    let after = uncertainty_flag(&entry, c.threshold, c.min_annotations);
    prop_assert!(!before || after);
    // Exact restatement of the rule on integer counts.
    let total = c.uncertain + c.certain + 1;
    let expected =
        total >= c.min_annotations && (c.uncertain + 1) as f64 >= c.threshold * total as f64;
    prop_assert_eq!(after, expected);
    Ok(())
}

/// Runs every property for `cases` cases each with a fixed-seed runner.
/// Returns the property name with its outcome.
pub fn run_all(cases: u32) -> Vec<(&'static str, Result<(), String>)> {
    use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
    fn runner(cases: u32) -> TestRunner {
        let config = Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        };
        TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
    }
    fn flat<T: std::fmt::Debug>(r: Result<(), proptest::test_runner::TestError<T>>) -> Result<(), String> {
        r.map_err(|e| e.to_string())
    }
    vec![
        (
            "matches brute-force oracle",
            flat(runner(cases).run(&case_strategy(), |c| matches_oracle(&c))),
        ),
        (
            "order invariance",
            flat(runner(cases).run(&(case_strategy(), any::<u64>()), |(c, s)| order_invariance(&c, s))),
        ),
        (
            "score dominance",
            flat(runner(cases).run(&(case_strategy(), any::<prop::sample::Index>()), |(c, w)| {
                unique_top_scorer_dominates(&c, w)
            })),
        ),
        (
            "tie needs review",
            flat(runner(cases).run(&(case_strategy(), 0u8..=10), |(c, s)| {
                tied_disagreeing_leaders_need_review(&c, s)
            })),
        ),
        (
            "tags stay in inventory",
            flat(runner(cases).run(&case_strategy(), |c| resolved_tags_stay_in_inventory(&c))),
        ),
        (
            "uncertainty flag monotone",
            flat(runner(cases).run(&flag_case_strategy(), flag_is_monotone)),
        ),
    ]
}
