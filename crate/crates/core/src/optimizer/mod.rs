//! Rule-driven plan rewriting and physical operator selection.
//!
//! Rules are tried in priority order. The first rule that matches anywhere
//! in the plan (searching top-down, nested plans before inputs) is applied,
//! the plan is validated, and the search restarts from the highest-priority
//! rule. A stage ends when no rule of that stage matches.

pub mod analysis;
pub mod physical;
pub mod rules;

#[cfg(test)]
mod tests;

pub use analysis::{analyze_ordering, OrderingProperty};
pub use physical::{select_physical, PhysicalConfig, PhysicalOp, PhysicalPlan};
pub use rules::{standard_rules, RewriteRule, Stage};

use analysis::Analysis;
use rules::{Edit, Locus};

use crate::algebra::{print_plan, validate, LogicalPlan, Op};
use crate::error::{Error, Result};

/// Upper bound on rule applications per stage. Every rule shrinks the plan
/// or moves an operator toward the leaves, so real plans stop far below it.
pub const STEP_CEILING: usize = 10_000;

/// One rule application and the plan it produced.
#[derive(Clone, Debug)]
pub struct TraceStep {
    pub rule: &'static str,
    pub plan: LogicalPlan,
}

impl TraceStep {
    pub fn text(&self) -> String {
        print_plan(&self.plan)
    }
}

#[derive(Clone, Debug)]
pub struct Optimized {
    pub plan: LogicalPlan,
    pub trace: Vec<TraceStep>,
}

fn apply_first(op: &mut Op, rule: &RewriteRule, locus: Locus, facts: &Analysis) -> Option<Edit> {
    if let Some(edit) = (rule.apply)(op, locus, facts) {
        return Some(edit);
    }
    if let Op::Subplan { nested, input } = op {
        let inner = Locus {
            nested: true,
            empty_outer: matches!(**input, Op::EmptyTupleSource),
        };
        if let Some(edit) = apply_first(nested, rule, inner, facts) {
            return Some(edit);
        }
    }
    for i in op.inputs_mut() {
        if let Some(edit) = apply_first(i, rule, locus, facts) {
            return Some(edit);
        }
    }
    None
}

/// Applies one rule at its first match. Returns whether it fired.
pub fn apply_once(plan: &mut LogicalPlan, rule: &RewriteRule) -> bool {
    let facts = Analysis::new(&plan.root);
    let top = Locus {
        nested: false,
        empty_outer: true,
    };
    match apply_first(&mut plan.root, rule, top, &facts) {
        None => false,
        Some(Edit::Local) => true,
        Some(Edit::Substitute(v, with)) => {
            plan.root.substitute(v, &with);
            true
        }
    }
}

/// Runs `rules` to fixpoint, one stage after another in `stages` order.
pub fn run_optimizer_traced(plan: LogicalPlan, rules: &[RewriteRule], stages: &[Stage]) -> Result<Optimized> {
    let mut plan = plan;
    let mut trace = Vec::new();
    for stage in stages {
        let active: Vec<&RewriteRule> = rules.iter().filter(|r| r.stage == *stage).collect();
        let mut steps = 0;
        'fixpoint: loop {
            for rule in &active {
                if apply_once(&mut plan, rule) {
                    validate(&plan).map_err(|e| Error::Rule {
                        rule: rule.name.to_string(),
                        message: e.to_string(),
                    })?;
                    trace.push(TraceStep {
                        rule: rule.name,
                        plan: plan.clone(),
                    });
                    steps += 1;
                    if steps >= STEP_CEILING {
                        return Err(Error::Rule {
                            rule: rule.name.to_string(),
                            message: format!("no fixpoint after {} rule applications", STEP_CEILING),
                        });
                    }
                    continue 'fixpoint;
                }
            }
            break;
        }
    }
    Ok(Optimized { plan, trace })
}

pub fn run_optimizer(plan: LogicalPlan, rules: &[RewriteRule], stages: &[Stage]) -> Result<LogicalPlan> {
    run_optimizer_traced(plan, rules, stages).map(|o| o.plan)
}

/// The standard logical rewrites.
pub fn optimize(plan: LogicalPlan) -> Result<Optimized> {
    run_optimizer_traced(plan, &standard_rules(), &[Stage::Logical])
}

/// The standard rules minus those named in `disabled`.
pub fn rules_without(disabled: &[&str]) -> Vec<RewriteRule> {
    standard_rules().into_iter().filter(|r| !disabled.contains(&r.name)).collect()
}
