//! One line per primary acceptance criterion. Always exits 0; a criterion
//! that is not met prints FAIL with the reason.

mod common;

use std::time::{Duration, Instant};

use serde_json::Value;

use common::{example_path, golden_path, run, scratch};

const PURITY: &str = "field rationals\nrank 1\nvars x y\nsymbols u\nimage x = terms[(1): 1]\nimage y = terms[(1): u^2]\n";

fn report(name: &str, result: Result<String, String>) -> bool {
    match result {
        Ok(detail) => println!("PASS  {name}: {detail}"),
        Err(detail) => println!("FAIL  {name}: {detail}"),
    }
    true
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

/// First ten terms of each displayed series, written out from the closed forms.
fn expected_psi() -> Vec<(&'static str, Vec<(String, String)>)> {
    let x2 = (1..).filter(|i| i % 5 != 0).take(10).map(|i| (format!("(0,0,{i})"), (i % 5).to_string())).collect();
    let x4 = (1..=10).map(|i| (format!("(0,0,{})", 3 * i), format!("u3^{}", 3 * i))).collect();
    vec![
        ("X1", vec![("(0,0,1)".into(), "1".into())]),
        ("X2", x2),
        ("X3", vec![("(0,0,1)".into(), "u3".into())]),
        ("X4", x4),
    ]
}

fn golden() -> Result<String, String> {
    let spec = example_path();
    let t = Instant::now();
    let r = run(&["monomialize", spec.to_str().unwrap(), "--json"]);
    let took = t.elapsed();
    ensure(r.code == 0, || format!("exit {}: {}", r.code, r.stderr))?;
    let v: Value = serde_json::from_str(&r.stdout).map_err(|e| e.to_string())?;
    let monoidal: Vec<&Value> = v["log"].as_array().unwrap().iter().filter(|e| e["kind"] == "monoidal").collect();
    ensure(monoidal.len() == 1 && monoidal[0]["text"] == "X4 -> Y4*Y1^2", || format!("monoidal maps {monoidal:?}"))?;
    for ((var, want), got) in expected_psi().iter().zip(v["psi"].as_array().unwrap()) {
        let terms: Vec<(String, String)> = got["terms"]
            .as_array()
            .unwrap()
            .iter()
            .map(|t| (t[0].as_str().unwrap().to_string(), t[1].as_str().unwrap().to_string()))
            .collect();
        ensure(got["var"] == *var && terms == *want, || format!("psi({var}) = {terms:?}"))?;
    }
    ensure(v["residue_field"] == "k(u3)", || format!("residue field {}", v["residue_field"]))?;
    let rep = &v["residues"][0]["representative"];
    ensure(rep == "X3/X1", || format!("representative {rep}"))?;
    let finals: Vec<&str> = v["final_values"].as_array().unwrap().iter().map(|x| x.as_str().unwrap()).collect();
    ensure(finals == ["(0,0,1)", "(0,1,0)", "(0,0,1)", "(1,0,0)"], || format!("final values {finals:?}"))?;
    let pinned: Value = serde_json::from_str(&std::fs::read_to_string(golden_path()).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    ensure(v == pinned, || "output differs from tests/golden/example.json".into())?;
    ensure(took < Duration::from_secs(5), || format!("took {}", secs(took)))?;
    Ok(format!("X4 -> Y4*Y1^2, 4 psi series x 10 terms, k(u3) via X3/X1, final values match, {}", secs(took)))
}

fn checkpoints() -> Result<String, String> {
    let spec = example_path();
    let spec = spec.to_str().unwrap();
    let value = |expr: &str| run(&["value", spec, expr]).stdout.trim().to_string();
    let d21 = value("X2 - X1");
    ensure(d21 == "(0,0,2)", || format!("v(X2 - X1) = {d21}"))?;
    let d41 = value("X4*X1^-2 - u3^3*X1");
    ensure(d41 == "(0,0,4)", || format!("v(Y4 - u3^3*Y1) = {d41}"))?;
    let v: Value = serde_json::from_str(&run(&["monomialize", spec, "--json"]).stdout).map_err(|e| e.to_string())?;
    let limits: Vec<&str> =
        v["trace"].as_array().unwrap().iter().filter(|e| e["kind"] == "limit").map(|e| e["value"].as_str().unwrap()).collect();
    ensure(limits == ["(0,1,0)", "(1,0,-2)"], || format!("limit values {limits:?}"))?;
    Ok("v(X2 - X1) = (0,0,2), first limit (0,1,0), v(Y4 - u3^3*Y1) = (0,0,4), second limit (1,0,-2)".into())
}

fn lattice() -> Result<String, String> {
    let t = Instant::now();
    let fails = common::lattice_suite(500, 21);
    let took = t.elapsed();
    ensure(fails.is_empty(), || format!("{} failures, first: {}", fails.len(), fails[0]))?;
    ensure(took < Duration::from_secs(10), || format!("took {}", secs(took)))?;
    Ok(format!("500 matrices, 0 failures, {}", secs(took)))
}

fn axioms() -> Result<String, String> {
    let (fails, checked, tried) = common::axioms_until(1000, 5000, 22);
    ensure(fails.is_empty(), || format!("{} failures, first: {}", fails.len(), fails[0]))?;
    ensure(checked == 1000, || format!("only {checked} of {tried} pairs certified"))?;
    Ok(format!("1000 certified pairs over F_5 and Q ({tried} drawn), 0 failures"))
}

fn hahn() -> Result<String, String> {
    let fails = common::hahn_suite(500, 23, 20);
    ensure(fails.is_empty(), || format!("{} failures, first: {}", fails.len(), fails[0]))?;
    Ok("500 stream pairs, sum/difference/product/product+factor agree with the oracle".into())
}

fn recomposition() -> Result<String, String> {
    let fails = common::recompose_suite(1000, 20, 200);
    let first = |f: &String| f.lines().next().unwrap_or("").chars().take(160).collect::<String>();
    ensure(fails.is_empty(), || {
        format!("{} of 20 specs failed: {}", fails.len(), fails.iter().map(first).collect::<Vec<_>>().join("; "))
    })?;
    Ok("20 specs, 200 polynomials each, 0 mismatches".into())
}

fn negatives() -> Result<String, String> {
    let purity = scratch("acceptance-purity.spec", PURITY);
    let r = run(&["monomialize", purity.to_str().unwrap()]);
    ensure(r.code == 4, || format!("purity spec exited {}: {}", r.code, r.stderr))?;
    let spec = example_path();
    let r = run(&["monomialize", spec.to_str().unwrap(), "--no-limits", "--max-steps", "2"]);
    ensure(r.code == 3, || format!("starved Example exited {}: {}", r.code, r.stderr))?;
    let prefix = r.stderr.rsplit_once('[').and_then(|(_, p)| p.split_once(']')).map(|(p, _)| p.to_string()).unwrap_or_default();
    let len = prefix.matches('(').count();
    ensure(len == 2, || format!("prefix [{prefix}] has length {len}"))?;
    Ok(format!("purity exits 4; starved Example exits 3 with prefix [{prefix}]"))
}

fn main() {
    report("golden Example", golden());
    report("Example checkpoints", checkpoints());
    report("lattice suite", lattice());
    report("valuation axioms", axioms());
    report("Hahn arithmetic", hahn());
    report("recomposition", recomposition());
    report("negative tests", negatives());
}
