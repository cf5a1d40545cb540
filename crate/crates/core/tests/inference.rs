use std::path::Path;

use skic_core::gen::TermGen;
use skic_core::lambda_ir::{parse_program, Program, DEFAULT_FUEL};
use skic_core::pipeline::{corpus_files, specialize, PipelineConfig};
use skic_core::ski::{behavioral_equal, ProbeConfig, Verdict};
use skic_core::types::{map_assignment, posterior, TypePosterior};

#[test]
fn offset_leaves_probabilities_unchanged() {
    let mut g = TermGen::new(41);
    for _ in 0..100 {
        let (mut cs, vars) = g.constraint_set(5);
        let before = posterior(&cs, &vars).unwrap();
        cs.offset += 123.25;
        let after = posterior(&cs, &vars).unwrap();
        for (a, b) in before.support.iter().zip(&after.support) {
            assert!((a.probability - b.probability).abs() <= 1e-9);
        }
    }
}

#[test]
fn raising_one_energy_lowers_its_probability() {
    let mut g = TermGen::new(42);
    for _ in 0..50 {
        let (cs, vars) = g.constraint_set(3);
        let post = posterior(&cs, &vars).unwrap();
        if post.support.len() < 2 {
            continue;
        }
        let mut energies: Vec<_> = post.support.iter().map(|c| (c.assignment.clone(), c.energy)).collect();
        energies[0].1 += 0.5;
        let bumped = TypePosterior::from_energies(energies);
        assert!(bumped.support[0].probability < post.support[0].probability);
    }
}

#[test]
fn map_ignores_support_order() {
    let mut g = TermGen::new(43);
    for _ in 0..50 {
        let (cs, vars) = g.constraint_set(4);
        let post = posterior(&cs, &vars).unwrap();
        let mut reversed = post.clone();
        reversed.support.reverse();
        let mut rotated = post.clone();
        let k = rotated.support.len() / 3;
        rotated.support.rotate_left(k);
        let m = map_assignment(&post).unwrap();
        assert_eq!(map_assignment(&reversed).unwrap(), m);
        assert_eq!(map_assignment(&rotated).unwrap(), m);
    }
}

#[test]
fn specialization_preserves_behaviour_on_corpus() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    for f in corpus_files(&dir).unwrap() {
        let prog = parse_program(&std::fs::read_to_string(&f).unwrap()).unwrap();
        let (spec, _) = specialize(&prog, &PipelineConfig::default());
        let units = |p: &Program| -> Vec<_> {
            (0..p.defs.len())
                .map(|i| p.inlined_def(i))
                .chain(p.inlined_main())
                .collect()
        };
        for (a, b) in units(&prog).iter().zip(units(&spec)) {
            assert_eq!(
                behavioral_equal(a, &b, &ProbeConfig::default(), DEFAULT_FUEL),
                Verdict::Equal,
                "{}",
                f.display()
            );
        }
    }
}
