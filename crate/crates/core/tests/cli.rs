use gdp_core::cli::run_with;
use gdp_core::report::render;
use gdp_core::scenario::{from_value, load_scenario, semantically_equal};
use serde_json::{json, Value};
use std::fs;
use std::path::{Path, PathBuf};

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn bundled() -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> =
        fs::read_dir(scenarios()).unwrap().map(|e| e.unwrap().path()).filter(|p| p.extension().is_some_and(|x| x == "json")).collect();
    files.sort();
    files
}

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gdp-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

/// Runs the CLI and returns the exit code with stdout and stderr.
fn gdp(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv: Vec<&str> = std::iter::once("gdp").chain(args.iter().copied()).collect();
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json_of(text: &str) -> Value {
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("not JSON ({e}): {text}"))
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn price_command_reports_the_supremum() {
    let file = scenarios().join("max_linear.json");
    let (code, out, _) = gdp(&["price", path_str(&file), "--payoff", "[-2,1]"]);
    assert_eq!(code, 0);
    let r = json_of(&out);
    assert_eq!(r["sup"], json!(0.0));
    assert_eq!(r["right_closed"], json!(true));
    let (code, out, _) = gdp(&["price", path_str(&file), "[1,-2]"]);
    assert_eq!(code, 0);
    let r = json_of(&out);
    assert_eq!(r["sup"], json!(-1.5));
    assert_eq!(r["right_closed"], json!(false));
    assert_eq!(r["attainer"], json!([-0.5, -0.5]));
}

#[test]
fn invalid_probabilities_exit_with_a_schema_error() {
    let file = scenarios().join("invalid").join("bad_probs.json");
    let (code, out, err) = gdp(&["price", path_str(&file)]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    let e = json_of(&err);
    assert_eq!(e["error"], json!("SchemaError"));
    assert_eq!(e["exit_code"], json!(2));
    assert!(e["issues"].as_array().is_some_and(|i| !i.is_empty()), "{e}");
}

#[test]
fn pointedness_failure_exits_three() {
    let file = scenarios().join("parabola_counterexample.json");
    let (code, out, err) = gdp(&["ftap-check", path_str(&file)]);
    assert_eq!(code, 3);
    assert_eq!(json_of(&out)["verdict"], json!("PreconditionFailed"));
    assert_eq!(json_of(&err)["verdict"], json!("PreconditionFailed"));
}

#[test]
fn empty_file_is_a_schema_error() {
    let dir = scratch_dir("empty");
    let file = dir.join("empty.json");
    fs::write(&file, "").unwrap();
    let err = load_scenario(&file).unwrap_err();
    assert_eq!(err.kind(), "SchemaError");
    let (code, _, stderr) = gdp(&["gooddeal", path_str(&file)]);
    assert_eq!(code, 2);
    assert_eq!(json_of(&stderr)["error"], json!("SchemaError"));
    fs::remove_dir_all(dir).ok();
}

#[test]
fn scripted_acceptance_without_generators_fails_the_deflator_query() {
    let dir = scratch_dir("nogen");
    let file = dir.join("nogen.json");
    let scenario = json!({
        "name": "nogen",
        "states": 2,
        "probs": [0.5, 0.5],
        "securities": [[1, 0], [0, 1]],
        "pricing": { "type": "expr", "body": "max(2*x1 + x2, x1 + 2*x2)" },
        "constraints": { "type": "none" },
        "acceptance": { "type": "expr", "constraints": ["pow(max(-s1, 0), 2) - s2"] },
        "queries": [{ "command": "deflator" }]
    });
    fs::write(&file, scenario.to_string()).unwrap();
    load_scenario(&file).unwrap();
    let (code, _, err) = gdp(&["deflator", path_str(&file)]);
    assert_eq!(code, 3);
    assert_eq!(json_of(&err)["error"], json!("NotPolyhedral"));
    fs::remove_dir_all(dir).ok();
}

#[test]
fn usage_errors_exit_two() {
    let (code, _, err) = gdp(&["price"]);
    assert_eq!(code, 2);
    assert_eq!(json_of(&err)["error"], json!("Usage"));
    let (code, _, _) = gdp(&["no-such-command"]);
    assert_eq!(code, 2);
}

#[test]
fn bundled_scenarios_round_trip() {
    for file in bundled() {
        let original: Value = serde_json::from_str(&fs::read_to_string(&file).unwrap()).unwrap();
        let loaded = load_scenario(&file).unwrap();
        let again = loaded.to_value();
        assert!(semantically_equal(&original, &again), "{}", file.display());
        let reloaded = from_value(&again).unwrap();
        assert!(semantically_equal(&again, &reloaded.to_value()), "{}", file.display());
    }
}

#[test]
fn batch_reproduces_the_goldens() {
    let out_dir = scratch_dir("batch");
    let (code, stdout, _) = gdp(&["batch", path_str(&scenarios()), "--out", path_str(&out_dir)]);
    assert_eq!(code, 0, "{stdout}");
    let lines: Vec<Value> = stdout.lines().map(json_of).collect();
    assert_eq!(lines.len(), bundled().len());
    for l in &lines {
        assert_eq!(l["status"], json!("ok"), "{l}");
    }
    for file in bundled() {
        let name = file.file_name().unwrap();
        let golden: Value = serde_json::from_str(&fs::read_to_string(scenarios().join("golden").join(name)).unwrap()).unwrap();
        let got = fs::read_to_string(out_dir.join(name)).unwrap();
        assert_eq!(got, format!("{}\n", render(&golden["report"])), "{}", name.to_string_lossy());
    }
    fs::remove_dir_all(out_dir).ok();
}

fn golden(name: &str) -> Value {
    let text = fs::read_to_string(scenarios().join("golden").join(format!("{name}.json"))).unwrap();
    serde_json::from_str::<Value>(&text).unwrap()["report"].clone()
}

fn result<'a>(report: &'a Value, command: &str, nth: usize) -> &'a Value {
    report["results"].as_array().unwrap().iter().filter(|r| r["command"] == command).nth(nth).unwrap()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn goldens_carry_the_reference_values() {
    let g = golden("max_linear");
    let first = &result(&g, "price", 0)["report"];
    assert_eq!(num(&first["sup"]), 0.0);
    assert_eq!(first["right_closed"], json!(true));
    let second = &result(&g, "price", 1)["report"];
    assert_eq!(num(&second["sup"]), -1.5);
    assert_eq!(second["attainer"], json!([-0.5, -0.5]));
    assert_eq!(second["right_closed"], json!(false));

    let g = golden("capped_long");
    for k in 0..2 {
        let r = &result(&g, "price", k)["report"];
        assert!(num(&r["sup"]).abs() <= 1e-7);
        assert_eq!(r["right_closed"], json!(false));
    }

    let g = golden("exponential");
    let r = &result(&g, "price", 0)["report"];
    assert!((num(&r["sup"]) + 1.0).abs() <= 1e-5);
    assert_eq!(r["attained"], json!(false));
    assert_eq!(r["right_closed"], json!(true));

    let g = golden("nonconic_gap");
    let r = &result(&g, "duality-gap", 0)["report"];
    assert_eq!(num(&r["dual_strict"]["value"]), 0.0);
    assert_eq!(num(&r["gap_strict"]), 1.0);

    let g = golden("parabola_counterexample");
    let r = result(&g, "ftap-check", 0);
    assert_eq!(r["exit_code"], json!(3));
    assert_eq!(r["report"]["verdict"], json!("PreconditionFailed"));
}
