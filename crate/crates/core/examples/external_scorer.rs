// Plugs an out-of-process model into ranking through the line protocol.
// The "model" here is a shell loop that counts shared words.
//
// $ cargo run --example external_scorer

use std::time::Duration;

use specqa::corpus::{AnswerTypeRules, ProductCatalog};
use specqa::ranking::{rank, ExternalScorer, ExternalScorerConfig};

const CATALOG: &str = r#"{"product_id":"bp1","vertical":"Backpack","specs":[{"key":"material","value":"polyester"},{"key":"compatible laptop size","value":"15.4 inch"},{"key":"laptop sleeve","value":"yes"}],"questions":[{"question_id":"q1","text":"Does 16 inch laptop fit in to it?","gold_spec_index":1}]}"#;

// HELLO once, then per batch: SCORE n, n "question<TAB>spec" lines in,
// n scores out.
const OVERLAP: &str = r#"echo "HELLO 0 100"
while read -r cmd n; do
  [ "$cmd" = QUIT ] && exit 0
  i=0
  while [ "$i" -lt "$n" ]; do
    IFS= read -r pair
    printf '%s\n' "$pair" | awk -F '\t' '{
      nq = split(tolower($1), q, /[^a-z0-9]+/); ns = split(tolower($2), s, /[^a-z0-9]+/)
      for (i = 1; i <= ns; i++) if (s[i] != "") seen[s[i]] = 1
      c = 0; for (i = 1; i <= nq; i++) if (q[i] in seen) c++
      print c
    }'
    i=$((i+1))
  done
done"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let catalog = ProductCatalog::from_jsonl(CATALOG.as_bytes(), &AnswerTypeRules::default())?;
    let product = &catalog.products()[0];
    let config = ExternalScorerConfig { timeout: Duration::from_secs(5), name: "overlap".into() };
    let mut scorer = ExternalScorer::spawn_shell(OVERLAP, config)?;
    println!("declared range {:?}", scorer.range());

    let ranked = rank(&product.questions[0], product, &mut scorer)?;
    for e in &ranked.entries {
        println!("{:>4}  {}", e.score, product.specs[e.spec_index].text());
    }

    // Protocol violations are errors, never silent zeros.
    let short = r#"echo "HELLO 0 1"; read -r _; echo 0.5"#;
    let mut broken = ExternalScorer::spawn_shell(short, ExternalScorerConfig::default())?;
    println!("short reply: {}", rank(&product.questions[0], product, &mut broken).unwrap_err());
    Ok(())
}
