use std::collections::BTreeMap;

use asp_core::decide::{
    buchi_verdict, decide_asp, ground_chain, BuchiVerdict, DecideConfig, DecideError, Tier3Mode,
};
use asp_core::eqsys::{
    build_system, certify_subreturn, classify_heads, clean, kleene_solve, newton_solve,
    ClassifyConfig, HeadClass, SubReturnProof,
};
use asp_core::ppda::translate;
use asp_core::semantics::{prefix_distribution, step, Event, TreePolicy};
use asp_core::syntax::{
    parse_file, pretty_print, random_definition, rational_to_f64, subterms, Definition, Kind,
    Rational,
};
use num::{One, Zero};
use proptest::prelude::*;

fn definition() -> impl Strategy<Value = Definition> {
    (any::<u64>(), any::<bool>()).prop_map(|(seed, tree)| {
        let kind = if tree { Kind::Tree } else { Kind::Stream };
        random_definition(seed, kind, 6)
    })
}

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(256)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn step_distributions_are_normalized(d in definition()) {
        for t in subterms(&d) {
            let dist = step(&d, &t).unwrap();
            prop_assert!(!dist.is_empty());
            prop_assert!(dist.values().all(|p| *p > Rational::zero()));
            let total: Rational = dist.values().cloned().sum();
            prop_assert_eq!(total, Rational::one());
        }
    }

    #[test]
    fn parser_round_trip(d in definition()) {
        let text = pretty_print(&d);
        let parsed = parse_file(&text).unwrap();
        prop_assert_eq!(parsed, vec![d]);
    }

    #[test]
    fn prefix_marginals_are_consistent(d in definition()) {
        let policy = TreePolicy::Uniform;
        let mut previous = prefix_distribution(&d, 0, &policy).unwrap();
        for depth in 1..=5 {
            let current = prefix_distribution(&d, depth, &policy).unwrap();
            let total: Rational = current.values().cloned().sum();
            prop_assert_eq!(total, Rational::one());
            let mut marginal: BTreeMap<Vec<Event>, Rational> = BTreeMap::new();
            for (prefix, p) in &current {
                prop_assert_eq!(prefix.len(), depth);
                *marginal.entry(prefix[..depth - 1].to_vec()).or_insert_with(Rational::zero) += p;
            }
            prop_assert_eq!(&marginal, &previous);
            previous = current;
        }
    }

    #[test]
    fn automaton_rows_are_distributions(d in definition()) {
        let p = translate(&d);
        for q in 0..p.states().len() {
            for top in p.tops() {
                let row = p.row(q, top);
                prop_assert!(!row.is_empty());
                let total: Rational = row.iter().map(|m| m.prob.clone()).sum();
                prop_assert_eq!(total, Rational::one());
            }
        }
    }

    #[test]
    fn kleene_iterates_increase_below_the_fixed_point(d in definition()) {
        let s = build_system(&translate(&d));
        let newton = newton_solve(&s, 1e-12);
        let mut previous = vec![0.0; s.len()];
        for n in [1, 2, 5, 20, 100, 1000] {
            let k = kleene_solve(&s, 0.0, n);
            for (i, (before, now)) in previous.iter().zip(&k.values).enumerate() {
                prop_assert!(before <= now);
                prop_assert!(*now <= 1.0);
                prop_assert!(*now <= newton.values[i] + 1e-9, "{}", s.label(i));
            }
            previous = k.values;
        }
    }

    #[test]
    fn cleaning_preserves_the_fixed_point(d in definition()) {
        let s = build_system(&translate(&d));
        let (cleaned, pos) = clean(&s);
        let full = kleene_solve(&s, 0.0, 2000);
        let reduced = kleene_solve(&cleaned, 0.0, 2000);
        for i in 0..s.len() {
            match pos.map[i] {
                Some(j) => {
                    prop_assert!(pos.positive[i]);
                    prop_assert_eq!(cleaned.var(j), s.var(i));
                    prop_assert!((full.values[i] - reduced.values[j]).abs() < 1e-12);
                    prop_assert!(reduced.values[j] > 0.0);
                }
                None => {
                    prop_assert!(!pos.positive[i]);
                    prop_assert_eq!(full.values[i], 0.0);
                }
            }
        }
    }

    #[test]
    fn head_classes_match_their_evidence(d in definition()) {
        let (s, _) = clean(&build_system(&translate(&d)));
        let kleene = kleene_solve(&s, 0.0, 100_000);
        for (h, class) in classify_heads(&s, &ClassifyConfig::default()) {
            let mass: f64 = s.head_vars(h).iter().map(|&i| kleene.values[i]).sum();
            match class {
                HeadClass::AlmostSureReturn => prop_assert!(mass >= 0.99, "{mass}"),
                HeadClass::SubReturn(SubReturnProof::PreFixedPoint(cert)) => {
                    let mut candidate = vec![Rational::one(); s.len()];
                    for (var, value) in cert {
                        candidate[s.find(var).unwrap()] = value;
                    }
                    prop_assert!(certify_subreturn(&s, h, &candidate));
                }
                HeadClass::SubReturn(SubReturnProof::NoReturn) => prop_assert_eq!(mass, 0.0),
                HeadClass::SubReturn(_) => prop_assert!(mass < 1.0),
                HeadClass::Unknown { kleene_lower, .. } => prop_assert!(kleene_lower <= 1.0),
            }
        }
    }

    #[test]
    fn almost_sure_heads_admit_no_certificate(d in definition(), slack in 1u32..30) {
        let (s, _) = clean(&build_system(&translate(&d)));
        let kleene = kleene_solve(&s, 1e-12, 100_000);
        let eps = rational_to_f64(&Rational::new(1.into(), (1i64 << slack).into()));
        let candidate: Vec<Rational> = kleene
            .values
            .iter()
            .map(|&x| Rational::from_float((x + eps).min(1.0)).unwrap())
            .collect();
        for (h, class) in classify_heads(&s, &ClassifyConfig::default()) {
            if class.is_almost_sure() {
                prop_assert!(!certify_subreturn(&s, h, &candidate));
            }
        }
    }

    #[test]
    fn decisions_are_consistent(d in definition()) {
        let cfg = DecideConfig { tier3: Tier3Mode::Never, ..DecideConfig::default() };
        match decide_asp(&d, &cfg) {
            Ok(_) | Err(DecideError::ResourceExceeded(_)) => {}
            Err(e) => prop_assert!(false, "{}: {e}", pretty_print(&d)),
        }
    }

    #[test]
    fn forgetting_head_classes_is_antitone(d in definition(), mask in any::<u64>()) {
        let p = translate(&d);
        let (s, _) = clean(&build_system(&p));
        let classes = classify_heads(&s, &ClassifyConfig::default());
        let weakened: BTreeMap<_, _> = classes
            .iter()
            .enumerate()
            .map(|(i, (h, c))| {
                let forget = mask >> (i % 64) & 1 == 1;
                let c = if forget { HeadClass::Unknown { kleene_lower: 0.0, iterations: 0 } } else { c.clone() };
                (*h, c)
            })
            .collect();
        let before = buchi_verdict(&ground_chain(&p, &s, &classes));
        let after = buchi_verdict(&ground_chain(&p, &s, &weakened));
        if after != BuchiVerdict::Unknown {
            prop_assert_eq!(after, before);
        }
    }
}
