use std::process::{Command, Output};

fn fcq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fcq")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn check_examples() {
    let o = fcq(&["check", "-q", "Ans() :- U = x1.x2.x1.x3.x1"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert_eq!(s.lines().next(), Some("cyclic (condition 2)"));
    assert!(s.contains("condition 2 (cyclic right-hand side): fired at atoms 0"));
    assert_eq!(stdout(&fcq(&["check", "-q", "Ans() :- U = x1.x2.x3.x1"])), "acyclic\n");
    let json = stdout(&fcq(&["check", "-q", "Ans() :- U = x1.x2.x1.x3.x1", "--format", "json"]));
    assert!(json.contains("\"acyclic\":false"));
}

#[test]
fn prefactor_flag_rescues_shared_subpattern() {
    let q = "Ans() :- x1 = y1.y2.y3.y4.y5, x2 = y6.y2.y3.y4.y5";
    assert!(stdout(&fcq(&["check", "-q", q])).starts_with("cyclic (condition 3)"));
    assert_eq!(stdout(&fcq(&["check", "-q", q, "--prefactor"])), "acyclic\n");
}

#[test]
fn enum_lists_all_splits() {
    let o = fcq(&["enum", "-q", "Ans(x,y) :- U = x.y", "-w", "ab"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "\"\"\t\"ab\"\n\"a\"\t\"b\"\n\"ab\"\t\"\"\n");
    let o = fcq(&["enum", "-q", "Ans(x,y) :- U = x.y", "-w", "ab", "--format", "json", "--limit", "2"]);
    assert_eq!(stdout(&o), "[[\"\",\"ab\"],[\"a\",\"b\"]]\n");
}

#[test]
fn eval_exit_codes() {
    let yes = fcq(&["eval", "-q", "Ans() :- U = x.x", "-w", "abab"]);
    assert_eq!((yes.status.code(), stdout(&yes).as_str()), (Some(0), "true\n"));
    let no = fcq(&["eval", "-q", "Ans() :- U = x.x", "-w", "aba"]);
    assert_eq!((no.status.code(), stdout(&no).as_str()), (Some(1), "false\n"));
    assert_eq!(fcq(&["eval", "-q", "Ans( :- ", "-w", "a"]).status.code(), Some(2));
    assert_eq!(fcq(&["enum", "-q", "Ans(x,y) :- U = x.y", "-w", "aaaa", "--budget", "2"]).status.code(), Some(3));
}

#[test]
fn word_file_input() {
    let dir = std::env::temp_dir().join(format!("fcq-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("w.txt");
    std::fs::write(&path, "abab\n").unwrap();
    let o = fcq(&["eval", "-q", "Ans() :- U = x.x", "--word-file", path.to_str().unwrap()]);
    assert_eq!(stdout(&o), "true\n");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn decompose_outputs() {
    let q = "Ans(x) :- U = x.y.x.z, y in /a*/";
    let n = stdout(&fcq(&["decompose", "-q", q, "--emit", "normalized"]));
    assert_eq!(n, "Ans(x) :- U = x.y.x.z, y in /a*/\n");
    let d = stdout(&fcq(&["decompose", "-q", q]));
    assert!(d.starts_with("Ans(x) :- "));
    let dot = stdout(&fcq(&["decompose", "-q", q, "--emit", "join-tree", "--format", "dot"]));
    assert!(dot.starts_with("graph JoinTree {"));
    let ct = stdout(&fcq(&["decompose", "-q", q, "--emit", "concat-tree", "--format", "dot"]));
    assert!(ct.starts_with("digraph atom0 {"));
    let cyclic = fcq(&["decompose", "-q", "Ans() :- U = x1.x2.x1.x3.x1"]);
    assert_eq!(cyclic.status.code(), Some(1));
}

#[test]
fn convert_both_paths() {
    let s = "eq[x1,x2] join( S* x1{S+} a S* ; S* x2{S+} b S* )";
    let q = stdout(&fcq(&["convert", "-s", s]));
    assert!(q.starts_with("Ans(x1_P, x1_C, x2_P, x2_C) :- "));
    let p = stdout(&fcq(&["convert", "-s", s, "--pseudo"]));
    assert!(p.contains("U = x1_P.$s1") && p.contains("x1_C = x2_C"));
    // The compiled query is itself accepted by the other commands.
    let o = fcq(&["eval", "-q", q.trim(), "-w", "cacb"]);
    assert_eq!(stdout(&o), "true\n");
    assert_eq!(fcq(&["convert", "-s", "join( x{a} y{b} )", "--pseudo"]).status.code(), Some(2));
}

#[test]
fn outputs_are_deterministic() {
    let runs = [
        vec!["decompose", "-q", "Ans(x,z) :- U = x.y.x.z, y = z.z", "--emit", "join-tree", "--format", "json"],
        vec!["enum", "-q", "Ans(x,y) :- U = x.y.x, y in /b*/", "-w", "abbaabba"],
        vec!["convert", "-s", "join( S* x{a|(b)*} y{S*} S* )"],
    ];
    for args in runs {
        assert_eq!(fcq(&args).stdout, fcq(&args).stdout, "{args:?}");
    }
}

#[test]
fn bench_emits_csv() {
    let o = fcq(&["bench", "--limit", "4"]);
    assert!(o.status.success());
    let s = stdout(&o);
    let mut lines = s.lines();
    assert_eq!(lines.next(), Some("experiment,n,seconds"));
    assert!(lines.all(|l| l.split(',').count() == 3));
    assert!(s.contains("pattern,4,") && s.contains("enum_delay,32,"));
}
