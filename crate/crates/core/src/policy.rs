//! Endorsement-policy expression language.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr      := "AND" "(" exprs ")" | "OR" "(" exprs ")"
//!            | "OutOf" "(" int "," exprs ")" | principal
//! exprs     := expr ("," expr)*
//! principal := orgid "." role          e.g. R1.peer
//! ```
//!
//! `AND`/`OR` take at least two children; `OutOf(n, ...)` requires
//! `1 <= n <= children`. The canonical printer emits no whitespace, and
//! `parse(print(e)) == e`.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

use crate::identity::Role;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PolicyExpr {
    Principal(String),
    And(Vec<PolicyExpr>),
    Or(Vec<PolicyExpr>),
    OutOf(u32, Vec<PolicyExpr>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("policy syntax error at line {line}, column {col}: {message}")]
pub struct PolicyError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl PolicyExpr {
    /// True iff the signer set satisfies the policy.
    ///
    /// `OutOf` counts structurally distinct children so a duplicated child
    /// cannot be satisfied twice by a single endorsement.
    pub fn evaluate(&self, signers: &BTreeSet<String>) -> bool {
        match self {
            PolicyExpr::Principal(p) => signers.contains(p),
            PolicyExpr::And(children) => children.iter().all(|c| c.evaluate(signers)),
            PolicyExpr::Or(children) => children.iter().any(|c| c.evaluate(signers)),
            PolicyExpr::OutOf(n, children) => {
                let mut distinct: Vec<&PolicyExpr> = Vec::new();
                for c in children {
                    if !distinct.contains(&c) {
                        distinct.push(c);
                    }
                }
                let satisfied = distinct.iter().filter(|c| c.evaluate(signers)).count();
                satisfied >= *n as usize
            }
        }
    }

    /// All principals mentioned anywhere in the expression.
    pub fn principals(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_principals(&mut out);
        out
    }

    fn collect_principals(&self, out: &mut BTreeSet<String>) {
        match self {
            PolicyExpr::Principal(p) => {
                out.insert(p.clone());
            }
            PolicyExpr::And(cs) | PolicyExpr::Or(cs) | PolicyExpr::OutOf(_, cs) => {
                for c in cs {
                    c.collect_principals(out);
                }
            }
        }
    }

    /// All inclusion-minimal subsets of `universe` that satisfy the policy,
    /// sorted by (size, elements). Exhaustive over subsets, so the universe
    /// is capped at 16 principals.
    pub fn minimal_satisfying_sets(&self, universe: &BTreeSet<String>) -> Vec<BTreeSet<String>> {
        assert!(
            universe.len() <= 16,
            "minimal_satisfying_sets universe capped at 16 principals"
        );
        let items: Vec<&String> = universe.iter().collect();
        let n = items.len();
        let mut minimal: Vec<(u32, BTreeSet<String>)> = Vec::new();
        let mut masks: Vec<u32> = (0u32..(1 << n)).collect();
        masks.sort_by_key(|m| (m.count_ones(), *m));
        'outer: for mask in masks {
            // skip supersets of an already-found minimal set
            for (mmask, _) in &minimal {
                if mask & mmask == *mmask {
                    continue 'outer;
                }
            }
            let set: BTreeSet<String> = items
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, s)| (*s).clone())
                .collect();
            if self.evaluate(&set) {
                minimal.push((mask, set));
            }
        }
        let mut sets: Vec<BTreeSet<String>> = minimal.into_iter().map(|(_, s)| s).collect();
        sets.sort_by(|a, b| {
            a.len()
                .cmp(&b.len())
                .then_with(|| a.iter().cmp(b.iter()))
        });
        sets
    }

    fn check_arity(&self, at: (usize, usize)) -> Result<(), PolicyError> {
        let (line, col) = at;
        let err = |message: String| PolicyError { line, col, message };
        match self {
            PolicyExpr::Principal(_) => Ok(()),
            PolicyExpr::And(cs) => {
                if cs.len() < 2 {
                    return Err(err(format!("AND requires at least 2 operands, got {}", cs.len())));
                }
                Ok(())
            }
            PolicyExpr::Or(cs) => {
                if cs.len() < 2 {
                    return Err(err(format!("OR requires at least 2 operands, got {}", cs.len())));
                }
                Ok(())
            }
            PolicyExpr::OutOf(n, cs) => {
                if cs.is_empty() {
                    return Err(err("OutOf requires at least 1 operand".to_string()));
                }
                if *n < 1 || *n as usize > cs.len() {
                    return Err(err(format!(
                        "OutOf threshold {n} out of range 1..={}",
                        cs.len()
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Canonical printer: `AND(R1.peer,R2.peer)`, no whitespace.
impl fmt::Display for PolicyExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join(f: &mut fmt::Formatter<'_>, cs: &[PolicyExpr]) -> fmt::Result {
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{c}")?;
            }
            Ok(())
        }
        match self {
            PolicyExpr::Principal(p) => f.write_str(p),
            PolicyExpr::And(cs) => {
                f.write_str("AND(")?;
                join(f, cs)?;
                f.write_str(")")
            }
            PolicyExpr::Or(cs) => {
                f.write_str("OR(")?;
                join(f, cs)?;
                f.write_str(")")
            }
            PolicyExpr::OutOf(n, cs) => {
                write!(f, "OutOf({n},")?;
                join(f, cs)?;
                f.write_str(")")
            }
        }
    }
}

pub fn parse(text: &str) -> Result<PolicyExpr, PolicyError> {
    let mut p = Parser::new(text);
    let expr = p.expr()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(expr)
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn new(text: &str) -> Parser {
        Parser {
            chars: text.chars().collect(),
            pos: 0,
        }
    }

    fn location(&self) -> (usize, usize) {
        let mut line = 1;
        let mut col = 1;
        for &c in &self.chars[..self.pos] {
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        }
        (line, col)
    }

    fn error(&self, message: impl Into<String>) -> PolicyError {
        let (line, col) = self.location();
        PolicyError {
            line,
            col,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expect(&mut self, c: char) -> Result<(), PolicyError> {
        match self.peek() {
            Some(got) if got == c => {
                self.pos += 1;
                Ok(())
            }
            Some(got) => Err(self.error(format!("expected `{c}`, found `{got}`"))),
            None => Err(self.error(format!("expected `{c}`, found end of input"))),
        }
    }

    fn word(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len()
            && (self.chars[self.pos].is_alphanumeric()
                || self.chars[self.pos] == '_'
                || self.chars[self.pos] == '-')
        {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn expr(&mut self) -> Result<PolicyExpr, PolicyError> {
        self.skip_ws();
        let at = self.location();
        let word = self.word();
        if word.is_empty() {
            return Err(self.error("expected operator or principal"));
        }
        let expr = match word.as_str() {
            "AND" => PolicyExpr::And(self.operand_list(None)?),
            "OR" => PolicyExpr::Or(self.operand_list(None)?),
            "OutOf" => {
                self.expect('(')?;
                self.skip_ws();
                let n = self.integer()?;
                self.expect(',')?;
                let children = self.expr_list()?;
                self.expect(')')?;
                PolicyExpr::OutOf(n, children)
            }
            org => {
                // principal form: OrgID.role
                self.expect('.')?;
                let role_at = self.location();
                let role_word = self.word();
                let Some(_) = Role::parse(&role_word) else {
                    return Err(PolicyError {
                        line: role_at.0,
                        col: role_at.1,
                        message: format!(
                            "unknown role `{role_word}` (expected admin, peer, orderer, or client)"
                        ),
                    });
                };
                PolicyExpr::Principal(format!("{org}.{role_word}"))
            }
        };
        expr.check_arity(at).map(|_| expr)
    }

    fn operand_list(&mut self, _n: Option<u32>) -> Result<Vec<PolicyExpr>, PolicyError> {
        self.expect('(')?;
        let children = self.expr_list()?;
        self.expect(')')?;
        Ok(children)
    }

    fn expr_list(&mut self) -> Result<Vec<PolicyExpr>, PolicyError> {
        let mut out = vec![self.expr()?];
        while self.peek() == Some(',') {
            self.pos += 1;
            out.push(self.expr()?);
        }
        Ok(out)
    }

    fn integer(&mut self) -> Result<u32, PolicyError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected integer threshold"));
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        s.parse().map_err(|_| self.error("threshold too large"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn principal(s: &str) -> PolicyExpr {
        PolicyExpr::Principal(s.to_string())
    }

    fn signers(list: &[&str]) -> BTreeSet<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parses_basic_forms() {
        assert_eq!(
            parse("AND(R1.peer, R2.peer)").unwrap(),
            PolicyExpr::And(vec![principal("R1.peer"), principal("R2.peer")])
        );
        assert_eq!(
            parse("OutOf(2, R1.peer, R2.peer, R0.peer)").unwrap(),
            PolicyExpr::OutOf(
                2,
                vec![principal("R1.peer"), principal("R2.peer"), principal("R0.peer")]
            )
        );
        assert_eq!(
            parse(" OR( R1.admin ,AND(R1.peer,R2.peer) ) ").unwrap(),
            PolicyExpr::Or(vec![
                principal("R1.admin"),
                PolicyExpr::And(vec![principal("R1.peer"), principal("R2.peer")])
            ])
        );
    }

    #[test]
    fn arity_violations() {
        let err = parse("OutOf(4, R1.peer, R2.peer)").unwrap_err();
        assert!(err.message.contains("out of range"));
        assert!(parse("AND(R1.peer)").is_err());
        assert!(parse("OR(R1.peer)").is_err());
        assert!(parse("OutOf(0, R1.peer)").is_err());
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse("AND(R1.peer,\n R2.bogus)").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.message.contains("unknown role"));
        let err = parse("AND(R1.peer R2.peer)").unwrap_err();
        assert_eq!(err.line, 1);
    }

    #[test]
    fn evaluate_examples() {
        let p = parse("AND(R1.peer,R2.peer)").unwrap();
        assert!(!p.evaluate(&signers(&["R1.peer"])));
        assert!(p.evaluate(&signers(&["R1.peer", "R2.peer"])));

        let p = parse("OutOf(2,A.peer,B.peer,C.peer)").unwrap();
        assert!(p.evaluate(&signers(&["A.peer", "C.peer"])));
        assert!(!p.evaluate(&signers(&["B.peer"])));
    }

    #[test]
    fn duplicate_children_count_once() {
        let p = PolicyExpr::OutOf(2, vec![principal("A.peer"), principal("A.peer"), principal("B.peer")]);
        assert!(!p.evaluate(&signers(&["A.peer"])));
        assert!(p.evaluate(&signers(&["A.peer", "B.peer"])));
    }

    #[test]
    fn minimal_sets_examples() {
        let universe = signers(&["A.peer", "B.peer", "C.peer"]);
        let and = parse("AND(A.peer,B.peer)").unwrap();
        assert_eq!(
            and.minimal_satisfying_sets(&universe),
            vec![signers(&["A.peer", "B.peer"])]
        );

        let outof = parse("OutOf(2,A.peer,B.peer,C.peer)").unwrap();
        assert_eq!(
            outof.minimal_satisfying_sets(&universe),
            vec![
                signers(&["A.peer", "B.peer"]),
                signers(&["A.peer", "C.peer"]),
                signers(&["B.peer", "C.peer"]),
            ]
        );

        let or = parse("OR(AND(A.peer,B.peer),C.peer)").unwrap();
        assert_eq!(
            or.minimal_satisfying_sets(&universe),
            vec![signers(&["C.peer"]), signers(&["A.peer", "B.peer"])]
        );

        // unsatisfiable over the universe
        let needs_d = parse("AND(A.peer,D.peer)").unwrap();
        assert_eq!(needs_d.minimal_satisfying_sets(&universe), Vec::<BTreeSet<String>>::new());
    }

    // -- independent oracles ------------------------------------------------

    /// Brute-force truth evaluator, written independently of
    /// `PolicyExpr::evaluate`: evaluates by materializing each node's
    /// satisfied-child count with explicit loops and structural dedup via
    /// printed form.
    fn oracle_eval(expr: &PolicyExpr, signers: &BTreeSet<String>) -> bool {
        match expr {
            PolicyExpr::Principal(p) => signers.iter().any(|s| s == p),
            PolicyExpr::And(cs) => {
                let mut all = true;
                for c in cs {
                    if !oracle_eval(c, signers) {
                        all = false;
                    }
                }
                all
            }
            PolicyExpr::Or(cs) => {
                let mut any = false;
                for c in cs {
                    if oracle_eval(c, signers) {
                        any = true;
                    }
                }
                any
            }
            PolicyExpr::OutOf(n, cs) => {
                let mut seen: Vec<String> = Vec::new();
                let mut count = 0usize;
                for c in cs {
                    let printed = c.to_string();
                    if seen.contains(&printed) {
                        continue;
                    }
                    seen.push(printed);
                    if oracle_eval(c, signers) {
                        count += 1;
                    }
                }
                count >= *n as usize
            }
        }
    }

    /// Exhaustive subset oracle for minimal satisfying sets.
    fn oracle_minimal(expr: &PolicyExpr, universe: &BTreeSet<String>) -> Vec<BTreeSet<String>> {
        let items: Vec<&String> = universe.iter().collect();
        let mut satisfying: Vec<BTreeSet<String>> = Vec::new();
        for mask in 0u32..(1 << items.len()) {
            let set: BTreeSet<String> = items
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << *i) != 0)
                .map(|(_, s)| (*s).clone())
                .collect();
            if oracle_eval(expr, &set) {
                satisfying.push(set);
            }
        }
        let mut minimal: Vec<BTreeSet<String>> = satisfying
            .iter()
            .filter(|s| {
                !satisfying
                    .iter()
                    .any(|t| t.len() < s.len() && t.is_subset(s))
                    && !satisfying
                        .iter()
                        .any(|t| t.len() == s.len() && *t != **s && t.is_subset(s))
            })
            .cloned()
            .collect();
        minimal.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.iter().cmp(b.iter())));
        minimal
    }

    fn universe4() -> Vec<String> {
        vec![
            "R0.peer".to_string(),
            "R1.peer".to_string(),
            "R2.peer".to_string(),
            "R3.peer".to_string(),
        ]
    }

    fn xorshift(state: &mut u64) -> u64 {
        *state ^= *state << 13;
        *state ^= *state >> 7;
        *state ^= *state << 17;
        *state
    }

    /// Deterministic pseudo-random policy generator over 4 principals.
    fn random_policy(state: &mut u64, depth: usize) -> PolicyExpr {
        let u = universe4();
        if depth == 0 || xorshift(state) % 4 == 0 {
            return PolicyExpr::Principal(u[(xorshift(state) % 4) as usize].clone());
        }
        let arity = 2 + (xorshift(state) % 3) as usize;
        let children: Vec<PolicyExpr> = (0..arity)
            .map(|_| random_policy(state, depth - 1))
            .collect();
        match xorshift(state) % 3 {
            0 => PolicyExpr::And(children),
            1 => PolicyExpr::Or(children),
            _ => {
                let n = 1 + (xorshift(state) % arity as u64) as u32;
                PolicyExpr::OutOf(n, children)
            }
        }
    }

    #[test]
    fn random_depth3_policies_match_truth_table_oracle() {
        let u = universe4();
        let mut state = 42u64;
        for _ in 0..400 {
            let policy = random_policy(&mut state, 3);
            for mask in 0u32..16 {
                let set: BTreeSet<String> = u
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << *i) != 0)
                    .map(|(_, s)| s.clone())
                    .collect();
                assert_eq!(
                    policy.evaluate(&set),
                    oracle_eval(&policy, &set),
                    "mismatch for {policy} on {set:?}"
                );
            }
        }
    }

    #[test]
    fn minimal_sets_match_subset_oracle() {
        let universe: BTreeSet<String> = universe4().into_iter().collect();
        let mut state = 7u64;
        for _ in 0..150 {
            let policy = random_policy(&mut state, 2);
            assert_eq!(
                policy.minimal_satisfying_sets(&universe),
                oracle_minimal(&policy, &universe),
                "mismatch for {policy}"
            );
        }
    }

    #[test]
    fn and_or_equal_outof_forms() {
        // AND(x...) == OutOf(|x|, x...) and OR(x...) == OutOf(1, x...) on
        // every signer subset, exhaustively for up to 4 distinct principals.
        let u = universe4();
        for arity in 2..=4usize {
            let children: Vec<PolicyExpr> = u[..arity]
                .iter()
                .map(|p| PolicyExpr::Principal(p.clone()))
                .collect();
            let and = PolicyExpr::And(children.clone());
            let and_eq = PolicyExpr::OutOf(arity as u32, children.clone());
            let or = PolicyExpr::Or(children.clone());
            let or_eq = PolicyExpr::OutOf(1, children.clone());
            for mask in 0u32..(1 << u.len()) {
                let set: BTreeSet<String> = u
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << *i) != 0)
                    .map(|(_, s)| s.clone())
                    .collect();
                assert_eq!(and.evaluate(&set), and_eq.evaluate(&set));
                assert_eq!(or.evaluate(&set), or_eq.evaluate(&set));
            }
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_policy() -> impl Strategy<Value = PolicyExpr> {
            let leaf = prop::sample::select(universe4()).prop_map(PolicyExpr::Principal);
            leaf.prop_recursive(3, 24, 4, |inner| {
                prop_oneof![
                    prop::collection::vec(inner.clone(), 2..4).prop_map(PolicyExpr::And),
                    prop::collection::vec(inner.clone(), 2..4).prop_map(PolicyExpr::Or),
                    (prop::collection::vec(inner, 1..4), any::<u32>()).prop_map(|(cs, n)| {
                        let n = 1 + n % cs.len() as u32;
                        PolicyExpr::OutOf(n, cs)
                    }),
                ]
            })
        }

        proptest! {
            /// Adding signers never turns a satisfied policy unsatisfied.
            #[test]
            fn evaluate_is_monotone(policy in arb_policy(), small_mask in 0u32..16, extra_mask in 0u32..16) {
                let u = universe4();
                let pick = |mask: u32| -> BTreeSet<String> {
                    u.iter().enumerate()
                        .filter(|(i, _)| mask & (1 << *i) != 0)
                        .map(|(_, s)| s.clone())
                        .collect()
                };
                let small = pick(small_mask);
                let large = pick(small_mask | extra_mask);
                if policy.evaluate(&small) {
                    prop_assert!(policy.evaluate(&large));
                }
            }

            /// parse(print(e)) == e
            #[test]
            fn parse_print_identity(policy in arb_policy()) {
                let printed = policy.to_string();
                let reparsed = parse(&printed).unwrap();
                prop_assert_eq!(reparsed, policy);
            }
        }
    }
}
