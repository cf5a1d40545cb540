use skic_core::explain::{explain_term, parse_explanation, ExplanationDoc};
use skic_core::ski::parse_gael_term;

#[test]
fn add2_encoding_golden() {
    let golden = include_str!("../fixtures/explain_add2.txt");
    let t = parse_gael_term("S #addZ (K 2)").unwrap();
    assert_eq!(explain_term(&t).to_text(), golden);
    let doc = ExplanationDoc::from_text(golden).unwrap();
    assert_eq!(parse_explanation(&doc).unwrap(), t);
}

#[test]
fn sentences_may_arrive_in_any_order() {
    let golden = include_str!("../fixtures/explain_add2.txt");
    let mut doc = ExplanationDoc::from_text(golden).unwrap();
    doc.sentences.reverse();
    assert_eq!(parse_explanation(&doc).unwrap(), parse_gael_term("S #addZ (K 2)").unwrap());
}
