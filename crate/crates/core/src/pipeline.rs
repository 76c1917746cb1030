//! End-to-end refinement: source text in, flat models out.
//!
//! Phase order: parse, parameter instantiation, validation, type checking,
//! representation selection, channelling, structural constraints, rewriting
//! to all normal forms, bubble finalization, invariant hoisting and name
//! fixing. Models that print identically are merged.

use crate::ast::{Expr, Spec};
use crate::diag::{Diagnostic, RefineError, Severity};
use crate::emit::{build_flat_model, print_model, FlatModel};
use crate::engine::{finalize_bubbles, hoist_spec, normal_forms, EngineConfig};
use crate::rep::{add_channelling, add_structural_constraints, enumerate_representations, RepMode};
use crate::rules::default_rules;
use crate::{parser, typecheck};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Front(Diagnostic),
    #[error("{0}")]
    Refine(#[from] RefineError),
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub rep_mode: RepMode,
    pub all_reps: bool,
    pub hoist: bool,
    pub max_steps: u64,
    pub max_models: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        let cfg = EngineConfig::default();
        PipelineOptions {
            rep_mode: RepMode::SingleRep,
            all_reps: false,
            hoist: true,
            max_steps: cfg.max_steps,
            max_models: cfg.max_models,
        }
    }
}

#[derive(Debug)]
pub struct PipelineOutput {
    /// The instantiated, type-checked specification the models refine.
    pub spec: Spec,
    pub models: Vec<FlatModel>,
    pub spec_hash: String,
}

pub fn spec_hash(source: &str) -> String {
    hex::encode(Sha256::digest(source.as_bytes()))
}

/// Parse, instantiate, validate and type-check; the specification handed to
/// refinement and to the oracle.
pub fn front_end(source: &str, params: &[(String, Expr)]) -> Result<Spec, PipelineError> {
    let mut spec = parser::parse_spec_text(source).map_err(PipelineError::Front)?;
    let diags = typecheck::validate_spec(&spec);
    if let Some(d) = diags.iter().find(|d| d.severity == Severity::Error) {
        return Err(PipelineError::Front(d.clone()));
    }
    typecheck::typecheck_spec(&mut spec).map_err(PipelineError::Front)?;
    let spec = typecheck::instantiate(&spec, params).map_err(PipelineError::Front)?;
    Ok(spec)
}

/// The complete pipeline over one source text.
pub fn refine_source(
    source: &str,
    params: &[(String, Expr)],
    opts: &PipelineOptions,
) -> Result<PipelineOutput, PipelineError> {
    let spec = front_end(source, params)?;
    let hash = spec_hash(source);
    let cfg = EngineConfig { max_steps: opts.max_steps, max_models: opts.max_models };
    let rules = default_rules();

    let mut models: Vec<FlatModel> = Vec::new();
    let mut seen: std::collections::BTreeSet<String> = std::collections::BTreeSet::new();
    for mut rs in enumerate_representations(&spec, opts.rep_mode, opts.all_reps)? {
        add_channelling(&mut rs)?;
        add_structural_constraints(&mut rs)?;
        for mut ws in normal_forms(rs, &rules, &cfg)? {
            finalize_bubbles(&mut ws)?;
            if opts.hoist {
                hoist_spec(&mut ws.rs.spec);
            }
            let fm = build_flat_model(&ws, &hash)?;
            if seen.insert(print_model(&fm)) {
                models.push(fm);
            }
            if models.len() >= opts.max_models {
                break;
            }
        }
        if models.len() >= opts.max_models {
            break;
        }
    }
    Ok(PipelineOutput { spec, models, spec_hash: hash })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::check_equivalence;

    const KNAPSACK: &str = "letting value be function (1 --> 3, 2 --> 4, 3 --> 5) \
         letting volume be function (1 --> 2, 2 --> 3, 3 --> 4) \
         find x : set (maxsize 3) of int(1..3) \
         maximising sum i elem x . value(i) \
         such that (sum i elem x . volume(i)) <= 4";

    #[test]
    fn knapsack_models_are_flat_and_equivalent() {
        let out = refine_source(KNAPSACK, &[], &PipelineOptions::default()).unwrap();
        assert!(!out.models.is_empty());
        for fm in &out.models {
            let report = check_equivalence(&out.spec, fm).unwrap();
            assert!(report.equivalent, "{}", report.failure_summary());
            assert!(report.abstract_solutions > 0);
        }
    }

    #[test]
    fn printed_models_reparse_and_reprint_identically() {
        let out = refine_source(KNAPSACK, &[], &PipelineOptions::default()).unwrap();
        for fm in &out.models {
            let text = print_model(fm);
            let body: String = text
                .lines()
                .filter(|l| !l.trim_start().starts_with('$'))
                .collect::<Vec<_>>()
                .join("\n");
            let reparsed = parser::parse_spec_text(&body).expect("model must re-parse");
            let fm2 = FlatModel { spec: reparsed, ..fm.clone() };
            assert_eq!(print_model(&fm2), text);
        }
    }

    #[test]
    fn front_end_reports_bad_input() {
        assert!(front_end("find x :", &[]).is_err());
        assert!(front_end("find x : int(1..3) such that y = 1", &[]).is_err());
    }
}
