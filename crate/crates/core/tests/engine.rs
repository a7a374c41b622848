use std::cell::Cell;

use counterframe_core::client::{ClientError, MockRewriter, Rewriter, SentimentOracle};
use counterframe_core::engine::{
    generate_counterfactual, run_ablation, CounterfactualEngine, EngineConfig, RunStatus,
    SelectionStrategy, TargetSentiment,
};
use counterframe_core::registry::{Category, ModificationType, REGISTRY};
use counterframe_core::{LexiconScorer, SentimentClass, SentimentProbs};
use proptest::prelude::*;

/// Six negative lexicon hits, no positive ones.
const SIX_NEGATIVE: &str =
    "Talks collapsed amid threats, hostility and violence; a crisis and deadlock followed.";

struct Counting<T> {
    inner: T,
    calls: Cell<usize>,
}

impl<T> Counting<T> {
    fn new(inner: T) -> Self {
        Self {
            inner,
            calls: Cell::new(0),
        }
    }
}

impl<T: SentimentOracle> SentimentOracle for Counting<T> {
    fn predict(&self, text: &str) -> Result<SentimentProbs, ClientError> {
        self.calls.set(self.calls.get() + 1);
        self.inner.predict(text)
    }
}

impl<T: Rewriter> Rewriter for Counting<T> {
    fn rewrite(&self, text: &str, m: &ModificationType) -> Result<String, ClientError> {
        self.calls.set(self.calls.get() + 1);
        self.inner.rewrite(text, m)
    }
}

struct ConstantNegative;

impl SentimentOracle for ConstantNegative {
    fn predict(&self, _: &str) -> Result<SentimentProbs, ClientError> {
        Ok(SentimentProbs::new(0.8, 0.1, 0.1).unwrap())
    }
}

/// Fails on the n-th call (1-based).
struct FailOn {
    n: usize,
    calls: Cell<usize>,
}

impl Rewriter for FailOn {
    fn rewrite(&self, text: &str, m: &ModificationType) -> Result<String, ClientError> {
        self.calls.set(self.calls.get() + 1);
        if self.calls.get() == self.n {
            Err(ClientError::Unavailable {
                attempts: 4,
                reason: "timeout".into(),
            })
        } else {
            MockRewriter::default().rewrite(text, m)
        }
    }
}

/// Laplace closed form of the compound score for given hit counts, α = 1.
fn closed_form_compound(np: usize, nn: usize) -> f64 {
    (np as f64 - nn as f64) / (np as f64 + nn as f64 + 3.0)
}

#[test]
fn two_step_hand_trace_succeeds_at_step_two() {
    let lex = LexiconScorer::default();
    assert_eq!(lex.counts(SIX_NEGATIVE), (0, 6));
    assert!((closed_form_compound(0, 6) - (-6.0 / 9.0)).abs() < 1e-15);
    assert_eq!(closed_form_compound(3, 6), -0.25);
    assert_eq!(closed_form_compound(6, 6), 0.0);

    let oracle = Counting::new(lex);
    let rewriter = Counting::new(MockRewriter::default());
    let config = EngineConfig {
        target: TargetSentiment::exactly(SentimentClass::Neutral),
        ..EngineConfig::default()
    };
    let run = CounterfactualEngine::new(&rewriter, &oracle, config)
        .generate("r1", SIX_NEGATIVE, SentimentClass::Negative)
        .unwrap();
    assert_eq!(run.status, RunStatus::Success);
    assert_eq!(run.records.len(), 2);
    assert_eq!(run.records[0].category, Category::Participants);
    assert_eq!(run.records[0].predicted_class, SentimentClass::Negative);
    assert!((run.records[0].predicted_score - -0.25).abs() < 1e-12);
    assert_eq!(run.records[1].category, Category::Process);
    assert_eq!(run.records[1].predicted_class, SentimentClass::Neutral);
    assert!(run.records[1].predicted_score.abs() < 1e-12);
    assert_eq!(oracle.calls.get(), 2);
    assert_eq!(rewriter.calls.get(), 2);
    run.validate().unwrap();
}

#[test]
fn constant_negative_exhausts_all_five_categories() {
    let rewriter = Counting::new(MockRewriter::default());
    let oracle = Counting::new(ConstantNegative);
    let config = EngineConfig {
        target: TargetSentiment::exactly(SentimentClass::Positive),
        ..EngineConfig::default()
    };
    let run = CounterfactualEngine::new(&rewriter, &oracle, config)
        .generate("r", "Some event text.", SentimentClass::Negative)
        .unwrap();
    assert_eq!(run.status, RunStatus::Failure);
    assert_eq!(run.records.len(), 5);
    assert_eq!(oracle.calls.get(), 5);
    assert_eq!(rewriter.calls.get(), 5);
    assert_eq!(run.final_text, run.records[4].text_after);
    run.validate().unwrap();
}

#[test]
fn empty_category_order_returns_failure_without_records() {
    let config = EngineConfig {
        category_order: vec![],
        ..EngineConfig::default()
    };
    let run = generate_counterfactual(
        "Original.",
        SentimentClass::Negative,
        &config,
        &MockRewriter::default(),
        &LexiconScorer::default(),
    )
    .unwrap();
    assert_eq!(run.status, RunStatus::Failure);
    assert!(run.records.is_empty());
    assert_eq!(run.final_text, "Original.");
    run.validate().unwrap();
}

#[test]
fn empty_text_is_rejected() {
    let err = generate_counterfactual(
        "   ",
        SentimentClass::Negative,
        &EngineConfig::default(),
        &MockRewriter::default(),
        &LexiconScorer::default(),
    );
    assert!(err.is_err());
}

#[test]
fn client_error_aborts_with_prefix_preserved() {
    let rewriter = FailOn {
        n: 3,
        calls: Cell::new(0),
    };
    let config = EngineConfig {
        target: TargetSentiment::exactly(SentimentClass::Positive),
        ..EngineConfig::default()
    };
    let run = CounterfactualEngine::new(&rewriter, &ConstantNegative, config)
        .generate("r", "Text.", SentimentClass::Negative)
        .unwrap();
    assert_eq!(run.status, RunStatus::Error);
    assert_eq!(run.records.len(), 2);
    let err = run.error.as_ref().unwrap();
    assert_eq!(err.step, 3);
    assert_eq!(err.code, "upstream_unavailable");
    assert_eq!(run.final_text, run.records[1].text_after);
    run.validate().unwrap();
}

#[test]
fn invalid_oracle_payload_is_an_error_not_a_class() {
    struct Broken;
    impl SentimentOracle for Broken {
        fn predict(&self, _: &str) -> Result<SentimentProbs, ClientError> {
            Ok(SentimentProbs {
                p_neg: 0.9,
                p_neu: 0.9,
                p_pos: 0.9,
            })
        }
    }
    let run = generate_counterfactual(
        "Text.",
        SentimentClass::Negative,
        &EngineConfig::default(),
        &MockRewriter::default(),
        &Broken,
    )
    .unwrap();
    assert_eq!(run.status, RunStatus::Error);
    assert_eq!(run.error.unwrap().code, "upstream_protocol");
}

#[test]
fn or_better_target_accepts_positive() {
    // one negative hit: the first step jumps straight to Positive
    let text = "A bad start.";
    let exact = generate_counterfactual(
        text,
        SentimentClass::Negative,
        &EngineConfig {
            target: TargetSentiment::exactly(SentimentClass::Neutral),
            ..EngineConfig::default()
        },
        &MockRewriter::default(),
        &LexiconScorer::default(),
    )
    .unwrap();
    assert_eq!(exact.status, RunStatus::Failure);
    let better = generate_counterfactual(
        text,
        SentimentClass::Negative,
        &EngineConfig {
            target: TargetSentiment::at_least(SentimentClass::Neutral),
            ..EngineConfig::default()
        },
        &MockRewriter::default(),
        &LexiconScorer::default(),
    )
    .unwrap();
    assert_eq!(better.status, RunStatus::Success);
    assert_eq!(better.records.len(), 1);
    assert_eq!(better.records[0].predicted_class, SentimentClass::Positive);
}

#[test]
fn pre_check_short_circuits_only_when_enabled() {
    let cfg = |pre_check| EngineConfig {
        target: TargetSentiment::exactly(SentimentClass::Neutral),
        pre_check,
        ..EngineConfig::default()
    };
    let oracle = Counting::new(LexiconScorer::default());
    let rw = MockRewriter::default();
    let run = CounterfactualEngine::new(&rw, &oracle, cfg(true))
        .generate("r", "Plain text.", SentimentClass::Neutral)
        .unwrap();
    assert_eq!(run.status, RunStatus::Success);
    assert!(run.records.is_empty());
    assert_eq!(oracle.calls.get(), 0);
    run.validate().unwrap();

    let run = CounterfactualEngine::new(&rw, &oracle, cfg(false))
        .generate("r", "Plain text.", SentimentClass::Neutral)
        .unwrap();
    assert!(!run.records.is_empty());
}

#[test]
fn exhaustive_selection_keeps_first_class_change() {
    let oracle = Counting::new(LexiconScorer::default());
    let rewriter = Counting::new(MockRewriter::default());
    let config = EngineConfig {
        target: TargetSentiment::exactly(SentimentClass::Positive),
        selection: SelectionStrategy::Exhaustive,
        category_order: vec![Category::Participants],
        ..EngineConfig::default()
    };
    let run = CounterfactualEngine::new(&rewriter, &oracle, config)
        .generate("r", SIX_NEGATIVE, SentimentClass::Negative)
        .unwrap();
    // every participants fragment adds 3 positives: (3-6)/12 stays Negative,
    // so all three are tried and the first is kept
    assert_eq!(run.records.len(), 1);
    assert_eq!(run.records[0].attempts, 3);
    assert_eq!(run.records[0].modification, "participants.replace_lead_negotiator");
    assert_eq!(oracle.calls.get(), 3);
    assert_eq!(rewriter.calls.get(), 3);
}

#[test]
fn random_selection_is_seed_deterministic() {
    let cfg = |seed| EngineConfig {
        target: TargetSentiment::exactly(SentimentClass::Positive),
        selection: SelectionStrategy::Random,
        seed,
        ..EngineConfig::default()
    };
    let run = |seed| {
        generate_counterfactual(
            "Neutral wording.",
            SentimentClass::Neutral,
            &cfg(seed),
            &MockRewriter::default(),
            &ConstantNegative,
        )
        .unwrap()
    };
    assert_eq!(run(11), run(11));
    let keys = |seed: u64| -> Vec<String> {
        run(seed).records.into_iter().map(|r| r.modification).collect()
    };
    assert!((0..20).any(|s| keys(s) != keys(0)));
}

#[test]
fn ablation_rows_are_independent_of_each_other() {
    let mods: Vec<&ModificationType> = REGISTRY.iter().collect();
    let targets = [SentimentClass::Neutral, SentimentClass::Positive];
    let rows = run_ablation(
        SIX_NEGATIVE,
        SentimentClass::Negative,
        &mods,
        &targets,
        Default::default(),
        &MockRewriter::default(),
        &LexiconScorer::default(),
    )
    .unwrap();
    assert_eq!(rows.len(), 14);
    for row in &rows {
        assert_eq!(row.original_text, SIX_NEGATIVE);
        // one step from six negatives: (3-6)/12 = -0.25
        assert_eq!(row.resulting_class, Some(SentimentClass::Negative));
        assert!(!row.success);
    }

    // two negatives: (3-2)/8 = 0.125 crosses tau
    let rows = run_ablation(
        "talks collapsed amid threats",
        SentimentClass::Negative,
        &mods[6..7],
        &targets,
        Default::default(),
        &MockRewriter::default(),
        &LexiconScorer::default(),
    )
    .unwrap();
    assert!((closed_form_compound(3, 2) - 0.125).abs() < 1e-15);
    assert!(rows[0].success);
    assert_eq!(rows[0].resulting_class, Some(SentimentClass::Positive));

    let empty = run_ablation(
        "x",
        SentimentClass::Negative,
        &[],
        &targets,
        Default::default(),
        &MockRewriter::default(),
        &LexiconScorer::default(),
    )
    .unwrap();
    assert!(empty.is_empty());
}

#[test]
fn ablation_error_rows_do_not_stop_the_rest() {
    let rewriter = FailOn {
        n: 2,
        calls: Cell::new(0),
    };
    let mods: Vec<&ModificationType> = REGISTRY.iter().take(4).collect();
    let rows = run_ablation(
        "text",
        SentimentClass::Negative,
        &mods,
        &[SentimentClass::Neutral],
        Default::default(),
        &rewriter,
        &LexiconScorer::default(),
    )
    .unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows[1].error.is_some());
    assert!(!rows[1].success);
    assert!(rows.iter().enumerate().all(|(i, r)| i == 1 || r.error.is_none()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn persisted_runs_keep_the_chain_invariant(
        nn in 0usize..25,
        np in 0usize..6,
        order in proptest::sample::subsequence(Category::ALL.to_vec(), 0..=5).prop_shuffle(),
        target_idx in 0usize..3,
        or_better in any::<bool>(),
        selection in prop_oneof![Just(SelectionStrategy::First), Just(SelectionStrategy::Random)],
        seed in any::<u64>(),
        tau in 0.05f64..0.5,
    ) {
        let mut text = String::from("Report:");
        for _ in 0..nn { text.push_str(" crisis"); }
        for _ in 0..np { text.push_str(" peace"); }
        let oracle = Counting::new(LexiconScorer::default());
        let rewriter = Counting::new(MockRewriter::default());
        let config = EngineConfig {
            target: TargetSentiment { class: SentimentClass::ALL[target_idx], or_better },
            category_order: order.clone(),
            thresholds: counterframe_core::ClassThresholds::new(tau).unwrap(),
            selection,
            seed,
            pre_check: false,
        };
        let run = CounterfactualEngine::new(&rewriter, &oracle, config)
            .generate("p", &text, SentimentClass::Negative)
            .unwrap();
        prop_assert!(run.validate().is_ok(), "{:?}", run.validate());
        prop_assert_eq!(oracle.calls.get(), run.records.len());
        prop_assert_eq!(rewriter.calls.get(), run.records.len());
        prop_assert!(run.records.len() <= order.len());
    }

    #[test]
    fn ablation_commutes_with_permutation(perm in Just((0..14).collect::<Vec<usize>>()).prop_shuffle()) {
        let mods: Vec<&ModificationType> = REGISTRY.iter().collect();
        let shuffled: Vec<&ModificationType> = perm.iter().map(|&i| mods[i]).collect();
        let targets = [SentimentClass::Neutral, SentimentClass::Positive];
        let run = |m: &[&ModificationType]| run_ablation(
            "tension and dispute over trade", SentimentClass::Negative, m, &targets,
            Default::default(), &MockRewriter::default(), &LexiconScorer::default()).unwrap();
        let base = run(&mods);
        let permuted = run(&shuffled);
        for (i, &p) in perm.iter().enumerate() {
            prop_assert_eq!(&permuted[i], &base[p]);
        }
    }
}
