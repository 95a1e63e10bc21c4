//! The evaluator against the exhaustive reference on random acyclic queries.

use fcq::cqdecomp::analyze;
use fcq::eval::{Evaluator, DEFAULT_TUPLE_BUDGET};
use fcq::query::{oracle_eval, AnswerSet, DEFAULT_ORACLE_BUDGET};
use fcq::regex::Regex;
use fcq::{FcCq, Pattern, RegexConstraint, Symbol, Variable, WordEquation, WordIndex};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

const REGEXES: &[&str] = &["a*", "b", "(ab)*", "S*bS*", "_", "a|bb", "S*"];

fn var(k: usize) -> Variable {
    if k == 0 {
        Variable::Universe
    } else {
        Variable::named(format!("v{k}"))
    }
}

fn random_query(rng: &mut StdRng) -> FcCq {
    let nvars = rng.gen_range(2..=5);
    let equations: Vec<WordEquation> = (0..rng.gen_range(1..=3))
        .map(|_| {
            let lhs = var(rng.gen_range(0..=nvars));
            let rhs = (0..rng.gen_range(1..=4))
                .map(|_| {
                    if rng.gen_bool(0.15) {
                        Symbol::Letter(*[b'a', b'b'].choose(rng).unwrap())
                    } else {
                        Symbol::Var(var(rng.gen_range(1..=nvars)))
                    }
                })
                .collect();
            WordEquation::new(lhs, Pattern(rhs))
        })
        .collect();
    let constraints: Vec<RegexConstraint> = (0..rng.gen_range(0..=2))
        .map(|_| RegexConstraint::new(var(rng.gen_range(1..=nvars)), Regex::parse(REGEXES.choose(rng).unwrap()).unwrap()))
        .collect();
    let mut q = FcCq { head: vec![], equations, constraints };
    let mut body: Vec<Variable> = q.variables().into_iter().collect();
    body.shuffle(rng);
    q.head = body.into_iter().take(rng.gen_range(0..=2)).collect();
    q
}

fn words(max: usize) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    let mut k = 0;
    while k < out.len() {
        if out[k].len() < max {
            for c in [b'a', b'b'] {
                let mut w = out[k].clone();
                w.push(c);
                out.push(w);
            }
        }
        k += 1;
    }
    out
}

#[test]
fn random_acyclic_queries_match_oracle() {
    let mut rng = StdRng::seed_from_u64(20);
    let ws = words(7);
    let mut tested = 0;
    while tested < 80 {
        let q = random_query(&mut rng);
        let Ok(qd) = analyze(&q) else { continue };
        tested += 1;
        for w in &ws {
            let idx = WordIndex::new(w);
            let ev = Evaluator::new(&qd, &idx, DEFAULT_TUPLE_BUDGET).unwrap();
            let expected = oracle_eval(&q, w, DEFAULT_ORACLE_BUDGET).unwrap();
            let got: Vec<_> = ev.answers().collect();
            assert!(got.windows(2).all(|p| p[0] < p[1]), "{q} on {w:?}: not strictly increasing");
            assert_eq!(got.into_iter().collect::<AnswerSet>(), expected, "{q} on {:?}", String::from_utf8_lossy(w));
            assert_eq!(ev.model_check(), !expected.is_empty());
        }
    }
}

#[test]
fn universal_constraint_changes_nothing() {
    let mut rng = StdRng::seed_from_u64(21);
    let ws = words(5);
    let mut tested = 0;
    while tested < 20 {
        let q = random_query(&mut rng);
        let Ok(qd) = analyze(&q) else { continue };
        tested += 1;
        let mut q2 = q.clone();
        let v = q.variables().into_iter().next().unwrap();
        q2.constraints.push(RegexConstraint::new(v, Regex::universal()));
        let qd2 = analyze(&q2).unwrap();
        for w in &ws {
            let idx = WordIndex::new(w);
            let a: AnswerSet = Evaluator::new(&qd, &idx, DEFAULT_TUPLE_BUDGET).unwrap().answer_set();
            let b: AnswerSet = Evaluator::new(&qd2, &idx, DEFAULT_TUPLE_BUDGET).unwrap().answer_set();
            assert_eq!(a, b);
        }
    }
}
