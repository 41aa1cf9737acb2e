//! ASP verdicts: the measure criterion, the exact automaton analysis and
//! optional simulation evidence.

mod chain;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::eqsys::{build_system, classify_heads, clean, ClassifyConfig, Head, HeadClass};
use crate::measure::{measure, tier1_verdict, Tier1};
use crate::ppda::translate;
use crate::semantics::{monte_carlo, McReport, SemanticsError, TreePolicy};
use crate::syntax::{Definition, Rational};

pub use chain::{
    buchi_analysis, buchi_verdict, ground_chain, BuchiAnalysis, BuchiVerdict, Edge, GraphSummary,
    GroundChain, Node, Provenance, ReturnClass,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AspResult {
    Asp,
    NotAsp,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tier {
    Measure,
    Exact,
    StatisticalOnly,
}

/// When to run the simulation tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tier3Mode {
    Never,
    /// Only when the exact analysis is inconclusive.
    OnUnknown,
    Always,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecideConfig {
    pub classify: ClassifyConfig,
    pub tier3: Tier3Mode,
    pub mc_runs: usize,
    pub mc_horizon: usize,
    pub seed: u64,
    /// Run the exact analysis even when the measure already decides.
    pub cross_check: bool,
    /// Largest automaton (in states) the exact analysis accepts.
    pub max_states: usize,
}

impl Default for DecideConfig {
    fn default() -> Self {
        DecideConfig {
            classify: ClassifyConfig::default(),
            tier3: Tier3Mode::OnUnknown,
            mc_runs: 200,
            mc_horizon: 10_000,
            seed: 0xA5F,
            cross_check: true,
            max_states: 64,
        }
    }
}

/// Output of the exact automaton analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactEvidence {
    pub states: Vec<String>,
    pub heads: BTreeMap<Head, HeadClass>,
    pub chain: GroundChain,
    pub analysis: BuchiAnalysis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evidence {
    pub measure: Rational,
    pub tier1: Tier1,
    pub exact: Option<ExactEvidence>,
    pub monte_carlo: Option<McReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub result: AspResult,
    pub tier: Tier,
    pub evidence: Evidence,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecideError {
    #[error("internal inconsistency in `{name}`: {detail}")]
    InternalInconsistency { name: String, detail: String },
    #[error("resource bound exceeded: {0}")]
    ResourceExceeded(String),
    #[error(transparent)]
    Simulation(#[from] SemanticsError),
}

/// Runs the automaton pipeline: translation, equation system, cleaning,
/// head classification, ground chain and its qualitative analysis.
pub fn exact_analysis(d: &Definition, config: &DecideConfig) -> Result<ExactEvidence, DecideError> {
    let p = translate(d);
    if p.states().len() > config.max_states {
        return Err(DecideError::ResourceExceeded(format!(
            "automaton of `{}` has {} states (limit {})",
            d.name(),
            p.states().len(),
            config.max_states
        )));
    }
    let (s, _) = clean(&build_system(&p));
    let heads = classify_heads(&s, &config.classify);
    let chain = ground_chain(&p, &s, &heads);
    let analysis = buchi_analysis(&chain);
    let states = (0..p.states().len()).map(|i| p.state_name(i)).collect();
    Ok(ExactEvidence { states, heads, chain, analysis })
}

/// Decides almost-sure productivity of `d`.
///
/// A positive measure answers ASP directly. The exact analysis runs unless
/// disabled for measure-decided definitions, and must then agree. The
/// simulation tier never changes the result.
pub fn decide_asp(d: &Definition, config: &DecideConfig) -> Result<Verdict, DecideError> {
    let tier1 = tier1_verdict(d);
    let mut evidence = Evidence { measure: measure(d), tier1, exact: None, monte_carlo: None };

    let run_exact = tier1 == Tier1::Abstain || config.cross_check;
    let exact_verdict = if run_exact {
        let exact = exact_analysis(d, config)?;
        let v = exact.analysis.verdict;
        evidence.exact = Some(exact);
        Some(v)
    } else {
        None
    };

    let (result, tier) = match (tier1, exact_verdict) {
        (Tier1::Asp, Some(BuchiVerdict::NotAlmostSure)) => {
            return Err(DecideError::InternalInconsistency {
                name: d.name().to_string(),
                detail: "positive measure but the exact analysis found a silent bottom component"
                    .into(),
            });
        }
        (Tier1::Asp, _) => (AspResult::Asp, Tier::Measure),
        (_, Some(BuchiVerdict::AlmostSure)) => (AspResult::Asp, Tier::Exact),
        (_, Some(BuchiVerdict::NotAlmostSure)) => (AspResult::NotAsp, Tier::Exact),
        (_, _) => (AspResult::Unknown, Tier::Exact),
    };

    let simulate = match config.tier3 {
        Tier3Mode::Never => false,
        Tier3Mode::OnUnknown => result == AspResult::Unknown,
        Tier3Mode::Always => true,
    };
    let tier = if simulate {
        evidence.monte_carlo = Some(monte_carlo(
            d,
            config.mc_runs,
            config.mc_horizon,
            config.seed,
            &TreePolicy::Uniform,
        )?);
        if result == AspResult::Unknown {
            Tier::StatisticalOnly
        } else {
            tier
        }
    } else {
        tier
    };
    Ok(Verdict { result, tier, evidence })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_file;

    fn decide(src: &str) -> Verdict {
        decide_asp(&parse_file(src).unwrap()[0], &DecideConfig::default()).unwrap()
    }

    #[test]
    fn stream_examples() {
        let v = decide("stream s = a : s (+ 3/4) tail(s)");
        assert_eq!((v.result, v.tier), (AspResult::Asp, Tier::Measure));
        assert_eq!(v.evidence.exact.unwrap().analysis.verdict, BuchiVerdict::AlmostSure);

        let v = decide("stream s = a : s (+ 1/2) tail(s)");
        assert_eq!((v.result, v.tier), (AspResult::Asp, Tier::Exact));
        assert_eq!(v.evidence.tier1, Tier1::Abstain);

        assert_eq!(decide("stream s = a : s (+ 1/4) tail(s)").result, AspResult::NotAsp);
        assert_eq!(decide("stream s = s").result, AspResult::NotAsp);
        assert_eq!(decide("stream s = tail(a : s)").result, AspResult::NotAsp);
        for p in ["1/10", "1/2", "9/10"] {
            let v = decide(&format!("stream s = a : s (+ {p}) s"));
            assert_eq!((v.result, v.tier), (AspResult::Asp, Tier::Measure));
        }
    }

    #[test]
    fn tree_examples() {
        let v = decide("tree t = left(t) (+ 1/4) mk(x, t, t)");
        assert_eq!((v.result, v.tier), (AspResult::Asp, Tier::Measure));
        let v = decide("tree t = left(t) (+ 1/4) mk(x, t, left(t))");
        assert_eq!((v.result, v.tier), (AspResult::Asp, Tier::Exact));
    }

    #[test]
    fn no_simulation_for_conclusive_results() {
        let v = decide("stream s = s");
        assert!(v.evidence.monte_carlo.is_none());
        let cfg = DecideConfig { tier3: Tier3Mode::Always, mc_runs: 8, mc_horizon: 500, ..Default::default() };
        let v = decide_asp(&parse_file("stream s = s").unwrap()[0], &cfg).unwrap();
        assert_eq!((v.result, v.tier), (AspResult::NotAsp, Tier::Exact));
        assert!(v.evidence.monte_carlo.is_some());
    }

    #[test]
    fn cross_check_can_be_skipped() {
        let cfg = DecideConfig { cross_check: false, ..Default::default() };
        let v = decide_asp(&parse_file("stream s = a : s").unwrap()[0], &cfg).unwrap();
        assert!(v.evidence.exact.is_none());
        assert_eq!(v.result, AspResult::Asp);
    }

    #[test]
    fn state_limit() {
        let cfg = DecideConfig { max_states: 2, ..Default::default() };
        let d = parse_file("stream s = a : s (+ 1/2) tail(s)").unwrap().remove(0);
        assert!(matches!(decide_asp(&d, &cfg), Err(DecideError::ResourceExceeded(_))));
    }
}
