use proptest::prelude::*;
use skic_core::explain::{explain_term, parse_explanation, ExplanationDoc};
use skic_core::gen::{depth, TermGen};
use skic_core::lambda_ir::{alpha_equivalent, beta_reduce, parse_term, pretty_print, DEFAULT_FUEL};
use skic_core::lex::Dialect;
use skic_core::mdl::{compress_term, MdlConfig};
use skic_core::metrics::{compression_rate, symbolic_density, tokenize, DEFAULT_C};
use skic_core::ski::{
    bracket_abstract, compare_on_probes, gael_print, parse_gael_term, ski_decode, ski_reduce,
    ProbeConfig, RuleSet,
};
use skic_core::softgrad::{soft_cr, SoftKeepVector};
use skic_core::types::posterior;

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(64)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn print_then_parse_is_alpha_identity(seed in any::<u64>()) {
        let t = TermGen::new(seed).closed_term(6);
        let back = parse_term(&pretty_print(&t)).unwrap();
        prop_assert!(alpha_equivalent(&t, &back));
    }

    #[test]
    fn abstraction_output_is_lambda_free_and_faithful(seed in any::<u64>()) {
        let t = TermGen::new(seed).closed_term(6);
        for r in RuleSet::ALL {
            let s = bracket_abstract(&t, r).unwrap();
            let stats = compare_on_probes(&t, &s, &ProbeConfig::default(), DEFAULT_FUEL);
            prop_assert_eq!(stats.mismatches, 0, "{} under {}", pretty_print(&t), r);
            prop_assert_eq!(stats.exhausted, 0);
        }
    }

    #[test]
    fn eta_is_never_longer_than_naive(seed in any::<u64>()) {
        let t = TermGen::new(seed).closed_term(6);
        let eta = bracket_abstract(&t, RuleSet::EtaOptimized).unwrap();
        let naive = bracket_abstract(&t, RuleSet::Naive).unwrap();
        prop_assert!(eta.size() <= naive.size());
    }

    #[test]
    fn decode_commutes_with_reduction(seed in any::<u64>()) {
        let mut g = TermGen::new(seed);
        let t = g.closed_term(5);
        let s = bracket_abstract(&t, RuleSet::WithI).unwrap();
        let args = [skic_core::ski::SkiTerm::Int(2), skic_core::ski::SkiTerm::Int(-1), skic_core::ski::SkiTerm::Int(3)];
        let arity = t.leading_lams().min(3);
        let applied = skic_core::ski::SkiTerm::apply(s, args[..arity].iter().cloned());
        if let Ok(nf) = ski_reduce(&applied, DEFAULT_FUEL) {
            let via_lambda = beta_reduce(&ski_decode(&applied), DEFAULT_FUEL).unwrap();
            let via_ski = beta_reduce(&ski_decode(&nf), DEFAULT_FUEL).unwrap();
            prop_assert!(alpha_equivalent(&via_lambda, &via_ski));
        }
    }

    #[test]
    fn gael_print_parse_round_trip(seed in any::<u64>()) {
        let s = TermGen::new(seed).raw_ski(6);
        prop_assert_eq!(parse_gael_term(&gael_print(&s)).unwrap(), s);
    }

    #[test]
    fn explanation_round_trip_and_text(seed in any::<u64>()) {
        let s = TermGen::new(seed).raw_ski(6);
        let doc = explain_term(&s);
        prop_assert_eq!(parse_explanation(&doc).unwrap(), s.clone());
        prop_assert_eq!(ExplanationDoc::from_text(&doc.to_text()).unwrap(), doc.clone());
        prop_assert_eq!(explain_term(&s).to_text(), doc.to_text());
    }

    #[test]
    fn explanation_coverage_count(seed in any::<u64>()) {
        let s = TermGen::new(seed).raw_ski(6);
        fn count(t: &skic_core::ski::SkiTerm, spine_root: bool) -> usize {
            match t {
                skic_core::ski::SkiTerm::App(f, a) => spine_root as usize + count(f, false) + count(a, true),
                _ => 1,
            }
        }
        prop_assert_eq!(explain_term(&s).sentences.len(), count(&s, true));
    }

    #[test]
    fn compression_rate_matches_rational(s in 0usize..5000, p in 1usize..5000) {
        let cr = compression_rate(s, p).unwrap();
        prop_assert_eq!(cr, (p as f64 - s as f64) / p as f64);
        let keep = SoftKeepVector::indicator(s.min(p), p);
        prop_assert_eq!(soft_cr(&keep).unwrap(), compression_rate(s.min(p), p).unwrap());
    }

    #[test]
    fn density_report_is_consistent(bytes in proptest::collection::vec(any::<u8>(), 1..2000)) {
        let r = symbolic_density(&bytes, DEFAULT_C).unwrap();
        prop_assert_eq!(r.rho, r.k_approx as f64 / bytes.len() as f64);
        prop_assert!(r.rho > 0.0);
    }

    #[test]
    fn posterior_sums_to_one(seed in any::<u64>()) {
        let (cs, vars) = TermGen::new(seed).constraint_set(5);
        let post = posterior(&cs, &vars).unwrap();
        let z: f64 = post.support.iter().map(|c| c.probability).sum();
        prop_assert!((z - 1.0).abs() <= 1e-9);
    }
}

#[test]
fn generated_terms_respect_depth() {
    let mut g = TermGen::new(17);
    for _ in 0..500 {
        assert!(depth(&g.closed_term(6)) <= 6);
    }
}

#[test]
fn plan_never_worse_than_eta_alone() {
    let mut g = TermGen::new(23);
    for _ in 0..40 {
        let t = g.closed_term(5);
        let all = compress_term(&t, &MdlConfig::default()).unwrap();
        let eta_only = compress_term(
            &t,
            &MdlConfig {
                rule_sets: vec![RuleSet::EtaOptimized],
                extraction_enabled: false,
                ..MdlConfig::default()
            },
        )
        .unwrap();
        assert!(all.objective <= eta_only.objective, "{}", pretty_print(&t));
        assert_eq!(all.distance, 0.0);
        let gael = gael_print(all.encoded.main.as_ref().unwrap());
        assert!(tokenize(&gael, Dialect::Gael).is_ok());
    }
}
