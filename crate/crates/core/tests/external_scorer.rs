mod common;

use std::time::{Duration, Instant};

use specqa::ranking::{rank, ExternalScorer, ExternalScorerConfig, RankError, Scorer, ScorerError};

const BACKPACK: &str = r#"{"product_id":"bp1","vertical":"Backpack","specs":[{"key":"material","value":"polyester"},{"key":"compatible laptop size","value":"15.4 inch"},{"key":"laptop sleeve","value":"yes"}],"questions":[{"question_id":"q1","text":"Does 16 inch laptop fit in to it?","gold_spec_index":1}]}"#;

/// Answers every pair with the same line.
fn constant(score: &str) -> String {
    format!(
        r#"echo "HELLO 0 1"
while read -r cmd n; do
  [ "$cmd" = QUIT ] && exit 0
  i=0
  while [ "$i" -lt "$n" ]; do read -r _; echo "{score}"; i=$((i+1)); done
done"#
    )
}

/// Counts question tokens that also occur in the spec.
const OVERLAP: &str = r#"echo "HELLO 0 100"
while read -r cmd n; do
  [ "$cmd" = QUIT ] && exit 0
  i=0
  while [ "$i" -lt "$n" ]; do
    IFS= read -r pair
    printf '%s\n' "$pair" | awk -F '\t' '{
      nq = split(tolower($1), q, /[^a-z0-9]+/)
      ns = split(tolower($2), s, /[^a-z0-9]+/)
      for (i = 1; i <= ns; i++) if (s[i] != "") seen[s[i]] = 1
      c = 0
      for (i = 1; i <= nq; i++) if (q[i] in seen) c++
      print c
    }'
    i=$((i+1))
  done
done"#;

fn config(timeout_ms: u64) -> ExternalScorerConfig {
    ExternalScorerConfig {
        timeout: Duration::from_millis(timeout_ms),
        name: "stub".into(),
    }
}

fn rank_with(cmd: &str, timeout_ms: u64) -> Result<Vec<usize>, RankError> {
    let catalog = common::catalog(BACKPACK);
    let product = &catalog.products()[0];
    let mut scorer = ExternalScorer::spawn_shell(cmd, config(timeout_ms)).map_err(RankError::Scorer)?;
    rank(&product.questions[0], product, &mut scorer).map(|l| l.order())
}

#[test]
fn constant_scores_rank_by_index() {
    assert_eq!(rank_with(&constant("0.5"), 5000).unwrap(), vec![0, 1, 2]);
}

#[test]
fn overlap_stub_orders_by_shared_tokens() {
    // "does 16 inch laptop fit in to it" shares: material 0, "compatible
    // laptop size 15.4 inch" 2 (laptop, inch), "laptop sleeve yes" 1.
    assert_eq!(rank_with(OVERLAP, 5000).unwrap(), vec![1, 2, 0]);
}

#[test]
fn handshake_declares_range() {
    let s = ExternalScorer::spawn_shell(OVERLAP, config(5000)).unwrap();
    assert_eq!(s.range(), (0.0, 100.0));
    assert_eq!(s.name(), "stub");
}

fn scorer_error(cmd: &str, timeout_ms: u64) -> ScorerError {
    match rank_with(cmd, timeout_ms) {
        Err(RankError::Scorer(e)) => e,
        other => panic!("expected a scorer error, got {other:?}"),
    }
}

#[test]
fn short_answer_is_a_count_mismatch() {
    let stub = r#"echo "HELLO 0 1"; read -r _ n; read -r _; read -r _; read -r _; echo 0.1; echo 0.2; sleep 5"#;
    let e = scorer_error(stub, 500);
    assert!(matches!(e, ScorerError::CountMismatch { expected: 3, got: 2 }), "{e}");
    assert!(e.to_string().contains("count mismatch"));

    let exits = r#"echo "HELLO 0 1"; read -r _ n; echo 0.1; echo 0.2"#;
    assert!(matches!(scorer_error(exits, 5000), ScorerError::CountMismatch { expected: 3, got: 2 }));
}

#[test]
fn surplus_lines_surface_on_the_next_batch() {
    let catalog = common::catalog(BACKPACK);
    let product = &catalog.products()[0];
    let stub = r#"echo "HELLO 0 1"
while read -r cmd n; do
  [ "$cmd" = QUIT ] && exit 0
  i=0
  while [ "$i" -lt "$n" ]; do read -r _; echo 0.5; i=$((i+1)); done
  echo 0.5
done"#;
    let mut s = ExternalScorer::spawn_shell(stub, config(5000)).unwrap();
    rank(&product.questions[0], product, &mut s).unwrap();
    std::thread::sleep(Duration::from_millis(200));
    let err = rank(&product.questions[0], product, &mut s).unwrap_err();
    assert!(matches!(err, RankError::Scorer(ScorerError::CountMismatch { .. })), "{err}");
}

#[test]
fn protocol_violations_are_errors_not_zeros() {
    assert!(matches!(scorer_error(&constant("abc"), 5000), ScorerError::MalformedResponse { .. }));
    assert!(matches!(scorer_error(&constant("1.5"), 5000), ScorerError::OutOfRange { .. }));
    assert!(matches!(scorer_error(&constant("NaN"), 5000), ScorerError::NonFinite));
    assert!(matches!(scorer_error("echo HI", 5000), ScorerError::Handshake(_)));
    assert!(matches!(scorer_error("exit 0", 5000), ScorerError::Handshake(_)));
    assert!(matches!(scorer_error(r#"echo "HELLO 1 0""#, 5000), ScorerError::Handshake(_)));
}

#[test]
fn silent_scorer_times_out() {
    let start = Instant::now();
    let e = scorer_error(r#"echo "HELLO 0 1"; sleep 10"#, 300);
    assert!(matches!(e, ScorerError::Timeout(_)), "{e}");
    assert!(start.elapsed() < Duration::from_secs(5));
}

#[test]
fn missing_program_fails_to_spawn() {
    let e = ExternalScorer::spawn("/nonexistent/scorer", &[] as &[&str], config(1000)).unwrap_err();
    assert!(matches!(e, ScorerError::Spawn(_)), "{e}");
}
