//! Browser bindings. Every export takes text and returns a JSON string, so
//! the same functions are exercised by native tests.

use fcq::cqdecomp::{analyze, cyclicity_conditions};
use fcq::eval::{Evaluator, DEFAULT_TUPLE_BUDGET};
use fcq::normalize::normalize;
use fcq::query::{oracle_eval, parse_query, DEFAULT_ORACLE_BUDGET};
use fcq::spanner::{pseudo_acyclic_to_fccq, sercq_to_fccq, Sercq};
use fcq::WordIndex;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn error(msg: impl ToString) -> String {
    json!({ "error": msg.to_string() }).to_string()
}

fn text(v: &[u8]) -> Value {
    Value::from(String::from_utf8_lossy(v).into_owned())
}

/// Acyclicity verdict, cyclicity report and, when acyclic, the decomposed
/// query and its join tree in DOT.
#[wasm_bindgen]
pub fn check(query: &str) -> String {
    let q = match parse_query(query) {
        Ok(q) => q,
        Err(e) => return error(e),
    };
    let normalized = normalize(&q).query;
    let report = cyclicity_conditions(&normalized).to_string();
    match analyze(&q) {
        Ok(qd) => json!({
            "acyclic": true,
            "normalized": normalized.to_string(),
            "report": report,
            "decomposition": qd.query2.to_string(),
            "join_tree": qd.tree.to_dot(),
        }),
        Err(c) => json!({
            "acyclic": false,
            "normalized": normalized.to_string(),
            "report": report,
            "reason": c.to_string(),
        }),
    }
    .to_string()
}

/// Up to `limit` answers of the query on `word`. Cyclic queries fall back to
/// exhaustive search.
#[wasm_bindgen]
pub fn enumerate(query: &str, word: &str, limit: usize) -> String {
    let q = match parse_query(query) {
        Ok(q) => q,
        Err(e) => return error(e),
    };
    let w = word.as_bytes();
    let (method, answers): (&str, Vec<Vec<Vec<u8>>>) = match analyze(&q) {
        Ok(qd) => {
            let idx = WordIndex::new(w);
            match Evaluator::new(&qd, &idx, DEFAULT_TUPLE_BUDGET) {
                Ok(ev) => ("join tree", ev.answers().take(limit).collect()),
                Err(e) => return error(e),
            }
        }
        Err(_) => match oracle_eval(&q, w, DEFAULT_ORACLE_BUDGET) {
            Ok(set) => ("exhaustive", set.into_iter().take(limit).collect()),
            Err(e) => return error(e),
        },
    };
    let head: Vec<String> = q.head.iter().map(|v| v.to_string()).collect();
    let rows: Vec<Value> = answers.iter().map(|a| Value::from(a.iter().map(|v| text(v)).collect::<Vec<_>>())).collect();
    json!({ "head": head, "method": method, "answers": rows }).to_string()
}

/// Compiles a SERCQ to an FC-CQ, via the pseudo-acyclic construction when
/// `pseudo` is set.
#[wasm_bindgen]
pub fn convert(sercq: &str, pseudo: bool) -> String {
    let p = match Sercq::parse(sercq) {
        Ok(p) => p,
        Err(e) => return error(e),
    };
    let q = if pseudo { pseudo_acyclic_to_fccq(&p).map(|d| d.query2) } else { sercq_to_fccq(&p) };
    match q {
        Ok(q) => json!({ "query": q.to_string(), "acyclic": analyze(&q).is_ok() }).to_string(),
        Err(e) => error(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn check_reports_both_verdicts() {
        let v = parse(&check("Ans() :- U = x1.x2.x3.x1"));
        assert_eq!(v["acyclic"], true);
        assert!(v["join_tree"].as_str().unwrap().starts_with("graph JoinTree {"));
        let v = parse(&check("Ans() :- U = x1.x2.x1.x3.x1"));
        assert_eq!(v["acyclic"], false);
        assert!(parse(&check("Ans( :-"))["error"].is_string());
    }

    #[test]
    fn enumerate_uses_both_methods() {
        let v = parse(&enumerate("Ans(x,y) :- U = x.y", "ab", 10));
        assert_eq!(v["method"], "join tree");
        assert_eq!(v["answers"], json!([["", "ab"], ["a", "b"], ["ab", ""]]));
        assert_eq!(parse(&enumerate("Ans(x,y) :- U = x.y", "ab", 1))["answers"], json!([["", "ab"]]));
        let v = parse(&enumerate("Ans(x1) :- U = x1.x2.x1.x3.x1", "aaaaa", 10));
        assert_eq!(v["method"], "exhaustive");
        assert!(!v["answers"].as_array().unwrap().is_empty());
    }

    #[test]
    fn convert_round_trips_into_check() {
        let s = "eq[x1,x2] join( S* x1{S+} a S* ; S* x2{S+} b S* )";
        let v = parse(&convert(s, false));
        let q = v["query"].as_str().unwrap();
        assert_eq!(parse(&enumerate(q, "cacb", 5))["answers"].as_array().unwrap().len(), 1);
        assert_eq!(parse(&convert(s, true))["acyclic"], true);
        assert!(parse(&convert("join( x{a} y{b} )", true))["error"].is_string());
    }
}
