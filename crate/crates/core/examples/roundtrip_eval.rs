//! Roundtrip translation scores for one query in a hand-made space: the
//! nearest Spanish unit of "woman" is "esposa", which leads back to "wife",
//! so only the settings with two neighbours per step recover "woman".
//!
//! cargo run --example roundtrip_eval

use concept_embed::embed::EmbeddingSpace;
use concept_embed::eval::{evaluate_roundtrip, LemmaTable, QuerySet, Setting};

fn main() -> concept_embed::Result<()> {
    let at = |deg: f32| [deg.to_radians().cos(), deg.to_radians().sin()];
    let rows = [
        ("eng:woman", at(0.0)),
        ("eng:wife", at(90.0)),
        ("eng:man", at(180.0)),
        ("spa:esposa", at(50.0)),
        ("spa:mujer", at(60.0)),
        ("spa:hombre", at(190.0)),
    ];
    let space = EmbeddingSpace::from_rows(
        rows.iter().map(|(w, _)| w.to_string()).collect(),
        2,
        rows.iter().flat_map(|(_, v)| *v).collect(),
    )?;
    let mut lemmas = LemmaTable::default();
    lemmas.add_group([b"woman".to_vec(), b"women".to_vec()].into());
    let queries = QuerySet::word(&["woman".into()], "eng", &lemmas);
    let report = evaluate_roundtrip(&space, &queries, &["spa".into()], &Setting::STANDARD);
    for (i, s) in report.settings.iter().enumerate() {
        println!("{s}: {}", report.queries[0].precision(i));
    }
    Ok(())
}
