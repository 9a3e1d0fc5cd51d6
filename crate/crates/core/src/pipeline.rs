//! End-to-end replication run for the Izumi endomorphism over a group.

use serde::Serialize;

use crate::entropy::{entropy_report, EntropyReport, ItineraryConfig};
use crate::group::{ClosedFormReport, DualGroup};
use crate::masa::{
    check_masa_invariant, closed_form_rule, extract_local_rule, rules_equal, ClosedFormKind, LocalRule,
};
use crate::munit::{extract_w_from_with, LegMatrix};
use crate::algebra::flip_matrix;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    fn failed(name: &str, err: impl std::fmt::Display) -> Self {
        Check::new(name, false, format!("error: {err}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplicateConfig {
    pub masa_depth: usize,
    pub window: usize,
    pub m_max: usize,
    pub budget: u64,
}

impl ReplicateConfig {
    pub fn new(m_max: usize) -> Self {
        ReplicateConfig {
            masa_depth: crate::masa::DEFAULT_DEPTH,
            window: 1,
            m_max,
            budget: crate::entropy::budget_from_env(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PentagonSummary {
    pub order: String,
    pub defect: f64,
    pub passed: bool,
    pub flip_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationReport {
    pub group: String,
    #[serde(rename = "N")]
    pub alphabet: usize,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed_forms: Option<ClosedFormReport>,
    /// Agreement of the extracted `γ` rule with `w_1 + w_{k+1}`; reported,
    /// never part of the verdict.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_matches_anchored_sum: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy: Option<EntropyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pentagon: Option<PentagonSummary>,
}

impl ReplicationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report JSON is always serializable")
    }

    pub fn text(&self) -> String {
        let mut s = format!("group {} (N = {})\n", self.group, self.alphabet);
        for c in &self.checks {
            let mark = if c.passed { "pass" } else { "FAIL" };
            s.push_str(&format!("  [{mark}] {:<34} {}\n", c.name, c.detail));
        }
        if let Some(agree) = self.gamma_matches_anchored_sum {
            s.push_str(&format!(
                "  [info] γ rule vs w_1 + w_{{k+1}}         {}\n",
                if agree { "agree" } else { "differ" }
            ));
        }
        if let Some(e) = &self.entropy {
            s.push_str("\nitinerary counts for T_ρ′\n");
            s.push_str(&e.rho_prime.table());
            s.push_str("\nitinerary counts for T_γ\n");
            s.push_str(&e.gamma.table());
            s.push('\n');
            s.push_str(&e.table());
        }
        s.push_str(if self.passed() { "\nresult: PASS\n" } else { "\nresult: FAIL\n" });
        s
    }
}

fn rule_check(name: &str, extracted: &Result<LocalRule, String>, expected: &LocalRule, depth: usize) -> Check {
    match extracted {
        Ok(rule) => match rules_equal(rule, expected, depth) {
            Ok(eq) => Check::new(
                name,
                eq,
                format!("r = {}, exhaustive to depth {depth}", rule.lookahead()),
            ),
            Err(e) => Check::failed(name, e),
        },
        Err(e) => Check::new(name, false, e.clone()),
    }
}

/// Runs every check in order. Later stages still run after an earlier
/// failure so the report is complete, except when the bracket is invalid.
pub fn replicate(group: &DualGroup, cfg: &ReplicateConfig) -> ReplicationReport {
    let mut report = ReplicationReport {
        group: group.label(),
        alphabet: group.order(),
        checks: Vec::new(),
        closed_forms: None,
        gamma_matches_anchored_sum: None,
        entropy: None,
        pentagon: None,
    };
    let checks = &mut report.checks;

    let bracket = group.validate_bracket();
    let detail = match &bracket.first_violation {
        Some(v) => v.to_string(),
        None => "conjugation, orthogonality, multiplicativity, symmetry".into(),
    };
    checks.push(Check::new("bracket axioms", bracket.passed(), detail));
    if !bracket.passed() {
        return report;
    }

    let (rho, rho_prime, gamma) = match (group.izumi_endomorphism(), group.rho_prime(), group.gamma()) {
        (Ok(a), Ok(b), Ok(c)) => (a, b, c),
        (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => {
            checks.push(Check::failed("construct ρ, ρ′, γ", e));
            return report;
        }
    };

    match group.verify_closed_forms() {
        Ok(cf) => {
            checks.push(Check::new("associated unitary closed form", cf.unitary_matches, ""));
            checks.push(Check::new("ρ∘β closed form", cf.rho_beta_matches, ""));
            checks.push(Check::new("ρ² closed form", cf.rho_squared_matches, ""));
            checks.push(Check::new("γ² = Φ∘γ", cf.square_root_relation, "on generators"));
            report.closed_forms = Some(cf);
        }
        Err(e) => checks.push(Check::failed("closed forms", e)),
    }

    let depth = cfg.masa_depth;
    match check_masa_invariant(&rho, 1) {
        Ok(c) => {
            let detail = c.violation.as_ref().map_or("no witness".to_string(), |v| v.to_string());
            checks.push(Check::new("ρ leaves C_N non-invariant", !c.is_invariant(), detail));
        }
        Err(e) => checks.push(Check::failed("ρ leaves C_N non-invariant", e)),
    }
    for (name, e) in [("ρ′ leaves C_N invariant", &rho_prime), ("γ leaves C_N invariant", &gamma)] {
        match check_masa_invariant(e, depth) {
            Ok(c) => {
                let detail = match &c.violation {
                    Some(v) => v.to_string(),
                    None => format!("{} cylinders up to length {depth}", c.cylinders_checked),
                };
                checks.push(Check::new(name, c.is_invariant(), detail));
            }
            Err(err) => checks.push(Check::failed(name, err)),
        }
    }

    let t_prime = extract_local_rule(&rho_prime, depth).map_err(|e| e.to_string());
    let t_gamma = extract_local_rule(&gamma, depth).map_err(|e| e.to_string());
    let closed = |kind| closed_form_rule(kind, group, depth).expect("closed forms build for valid groups");
    checks.push(rule_check(
        "T_ρ′ = difference rule",
        &t_prime,
        &closed(ClosedFormKind::Difference),
        depth,
    ));
    checks.push(rule_check(
        "T_γ = anchored difference rule",
        &t_gamma,
        &closed(ClosedFormKind::AnchoredDifference),
        depth,
    ));
    if let Ok(t) = &t_gamma {
        report.gamma_matches_anchored_sum = rules_equal(t, &closed(ClosedFormKind::AnchoredSum), depth).ok();
    }

    let it_cfg = ItineraryConfig {
        n: cfg.window,
        m_max: cfg.m_max,
        budget: cfg.budget,
    };
    match entropy_report(group, &it_cfg) {
        Ok(e) => {
            for (name, est) in [("C(m) = N^(n+m−1) for T_ρ′", &e.rho_prime), ("C(m) = N^(n+m−1) for T_γ", &e.gamma)] {
                let detail = match &est.truncated {
                    Some(t) => format!("truncated at m = {} (budget {})", t.m, t.budget),
                    None => format!("m ≤ {}, h = {:.12}", est.counts.len(), est.h_top().unwrap_or(0.0)),
                };
                checks.push(Check::new(name, est.exact_full_shift && est.truncated.is_none(), detail));
            }
            checks.push(Check::new(
                "unitaries of ρ, ρ′, γ in F_N^2",
                e.unitaries_in_level_two,
                "needed for the cited upper bound",
            ));
            report.entropy = Some(e);
        }
        Err(err) => checks.push(Check::failed("entropy", err)),
    }

    match extract_w_from_with(&gamma, group.config()) {
        Ok(w) => {
            let defect = w.w.pentagon_defect();
            let passed = w.w.pentagon_check(group.config());
            let flip_defect = LegMatrix::new(flip_matrix(group.order()))
                .map(|f| f.pentagon_defect())
                .unwrap_or(f64::NAN);
            checks.push(Check::new(
                "pentagon for W",
                passed,
                format!("{:?}, defect {defect:.3e}", w.order),
            ));
            report.pentagon = Some(PentagonSummary {
                order: format!("{:?}", w.order),
                defect,
                passed,
                flip_defect,
            });
        }
        Err(e) => checks.push(Check::failed("pentagon for W", e)),
    }
    report
}
