//! End-to-end tests of the command-line binary: exit codes, report shapes,
//! fixture round-trips, and schema conformance of the JSON output.

use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kampen"))
}

fn write_temp(content: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().expect("temp file");
    f.write_all(content.as_bytes()).expect("write");
    f
}

fn report(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

#[test]
fn obstruction_on_k5_reports_order_two() {
    let fx = bin().args(["fixtures", "k5"]).output().unwrap();
    assert!(fx.status.success());
    let f = write_temp(&String::from_utf8(fx.stdout).unwrap());
    let out = bin()
        .args(["obstruction", f.path().to_str().unwrap()])
        .output()
        .unwrap();
    let r = report(&out);
    assert_eq!(r["result"]["trivial"], Value::Bool(false));
    assert_eq!(r["result"]["order"], serde_json::json!(2));
    assert_eq!(r["result"]["verdict"], serde_json::json!("DoesNotEmbed"));
    validate(&r);
}

#[test]
fn obstruction_on_a_point_is_trivial() {
    let f = write_temp("0\n");
    let out = bin()
        .args(["obstruction", f.path().to_str().unwrap()])
        .output()
        .unwrap();
    let r = report(&out);
    assert_eq!(r["result"]["trivial"], Value::Bool(true));
    assert_eq!(r["result"]["verdict"], serde_json::json!("Embeds"));
}

#[test]
fn chords_analyze_matches_expected_shape() {
    let out = bin().args(["chords", "analyze", "1 2 1 2"]).output().unwrap();
    let r = report(&out);
    assert_eq!(r["result"]["rank"], serde_json::json!(2));
    assert_eq!(r["result"]["factors"], serde_json::json!(1));
    assert_eq!(r["result"]["planar"], Value::Bool(false));
    validate(&r);
}

#[test]
fn chords_formula_end_to_end() {
    // The sum of the two linking derivatives on the interleaved diagram.
    let theta = kampen::chords::parse_diagram("1 2 1 2").unwrap();
    let pairs = kampen::chords::manturov_pairs(&theta);
    assert_eq!(pairs.len(), 2);
    let a = kampen::chords::v_ab_derivative(&theta, &pairs[0].0, &pairs[0].1).unwrap();
    let b = kampen::chords::v_ab_derivative(&theta, &pairs[1].0, &pairs[1].1).unwrap();
    let sum = a.add(&b).unwrap();
    let mut text = String::new();
    for (&(c, d), v) in sum.entries() {
        text.push_str(&format!("{} {} {}\n", c, d, v));
    }
    let f = write_temp(&text);
    let out = bin()
        .args(["chords", "formula", "1 2 1 2", "--deriv", f.path().to_str().unwrap()])
        .output()
        .unwrap();
    let r = report(&out);
    assert_eq!(r["result"]["propto"], serde_json::json!(0));
    assert_eq!(r["result"]["obstruction_trivial"], Value::Bool(true));
    assert!(!r["result"]["formula"].is_null());
    validate(&r);

    // One linking derivative alone is refused an integral formula.
    let mut text = String::new();
    for (&(c, d), v) in a.entries() {
        text.push_str(&format!("{} {} {}\n", c, d, v));
    }
    let f = write_temp(&text);
    let out = bin()
        .args(["chords", "formula", "1 2 1 2", "--deriv", f.path().to_str().unwrap()])
        .output()
        .unwrap();
    let r = report(&out);
    assert_eq!(r["result"]["propto"], serde_json::json!(1));
    assert!(r["result"]["formula"].is_null());
    assert_eq!(r["result"]["half_integer_formula"]["doubled"], Value::Bool(true));
    validate(&r);
}

#[test]
fn fixtures_round_trip() {
    let expected = [
        ("k5", kampen::obstructions::k5()),
        ("k33", kampen::obstructions::k33()),
        ("sarkaria", kampen::obstructions::sarkaria_example()),
        ("petersen", kampen::obstructions::petersen()),
        ("flores-1", kampen::obstructions::flores(1)),
        ("flores-2", kampen::obstructions::flores(2)),
    ];
    for (name, complex) in expected {
        let out = bin().args(["fixtures", name]).output().unwrap();
        assert!(out.status.success(), "fixture {}", name);
        let text = String::from_utf8(out.stdout).unwrap();
        let (parsed, _) = kampen::simplicial::SimplicialComplex::parse(&text).unwrap();
        assert_eq!(parsed, complex, "round trip for {}", name);
    }
}

#[test]
fn exit_codes() {
    // Unknown subcommand.
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(64));
    // Malformed file.
    let f = write_temp("0 0 1\n");
    let out = bin()
        .args(["obstruction", f.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    // Precondition failure: linkless on a 2-complex.
    let f = write_temp("0 1 2\n");
    let out = bin()
        .args(["linkless", f.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    // Malformed chord word.
    let out = bin().args(["chords", "analyze", "1 2 1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_are_deterministic_up_to_timing() {
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("timing_ms");
        v
    };
    let a = report(&bin().args(["chords", "analyze", "1 1 2 2"]).output().unwrap());
    let b = report(&bin().args(["chords", "analyze", "1 1 2 2"]).output().unwrap());
    assert_eq!(strip(a), strip(b));
}

#[test]
fn coconnect_and_coindex_and_h2n_reports_validate() {
    let fx = bin().args(["fixtures", "k5"]).output().unwrap();
    let f = write_temp(&String::from_utf8(fx.stdout).unwrap());
    let path = f.path().to_str().unwrap().to_string();
    for args in [
        vec!["h2n", path.as_str(), "--verify"],
        vec!["coindex", path.as_str()],
        vec!["coconnect", path.as_str(), "--k", "0"],
    ] {
        let out = bin().args(&args).output().unwrap();
        let r = report(&out);
        validate(&r);
    }
    let out = bin().args(["h2n", &path, "--verify"]).output().unwrap();
    let r = report(&out);
    assert_eq!(r["result"]["verified"], Value::Bool(true));
    assert_eq!(r["result"]["group"]["display"], serde_json::json!("Z/2"));
}

// ---------------------------------------------------------------------------
// Schema conformance (a small validator covering the checked-in schema)
// ---------------------------------------------------------------------------

fn schema() -> Value {
    let text = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/schema/report.schema.json"
    ))
    .expect("schema file");
    serde_json::from_str(&text).expect("valid schema JSON")
}

fn validate(report: &Value) {
    let s = schema();
    let mut errors = Vec::new();
    check(report, &s, &s, "$", &mut errors);
    assert!(errors.is_empty(), "schema violations: {:?}", errors);
}

fn type_matches(value: &Value, ty: &str) -> bool {
    match ty {
        "object" => value.is_object(),
        "array" => value.is_array(),
        "string" => value.is_string(),
        "integer" => value.is_i64() || value.is_u64(),
        "number" => value.is_number(),
        "boolean" => value.is_boolean(),
        "null" => value.is_null(),
        _ => false,
    }
}

fn check(value: &Value, schema: &Value, root: &Value, path: &str, errors: &mut Vec<String>) {
    let schema = if let Some(r) = schema.get("$ref").and_then(Value::as_str) {
        let key = r.trim_start_matches("#/");
        key.split('/').fold(root, |acc, part| &acc[part])
    } else {
        schema
    };
    if let Some(any) = schema.get("anyOf").and_then(Value::as_array) {
        let ok = any.iter().any(|sub| {
            let mut sub_errors = Vec::new();
            check(value, sub, root, path, &mut sub_errors);
            sub_errors.is_empty()
        });
        if !ok {
            errors.push(format!("{}: matches no anyOf branch", path));
        }
        return;
    }
    match schema.get("type") {
        Some(Value::String(t)) => {
            if !type_matches(value, t) {
                errors.push(format!("{}: expected {}", path, t));
                return;
            }
        }
        Some(Value::Array(ts)) => {
            if !ts
                .iter()
                .filter_map(Value::as_str)
                .any(|t| type_matches(value, t))
            {
                errors.push(format!("{}: expected one of {:?}", path, ts));
                return;
            }
        }
        _ => {}
    }
    if let Some(pattern) = schema.get("pattern").and_then(Value::as_str) {
        // The only pattern in the schema is the digest form.
        if pattern == "^sha256:[0-9a-f]{64}$" {
            let s = value.as_str().unwrap_or("");
            let ok = s.strip_prefix("sha256:").is_some_and(|h| {
                h.len() == 64 && h.chars().all(|c| c.is_ascii_hexdigit())
            });
            if !ok {
                errors.push(format!("{}: digest pattern mismatch", path));
            }
        }
    }
    if let (Some(min), Some(n)) = (schema.get("minimum").and_then(Value::as_i64), value.as_i64()) {
        if n < min {
            errors.push(format!("{}: below minimum", path));
        }
    }
    if let (Some(max), Some(n)) = (schema.get("maximum").and_then(Value::as_i64), value.as_i64()) {
        if n > max {
            errors.push(format!("{}: above maximum", path));
        }
    }
    if let Some(obj) = value.as_object() {
        if let Some(required) = schema.get("required").and_then(Value::as_array) {
            for key in required.iter().filter_map(Value::as_str) {
                if !obj.contains_key(key) {
                    errors.push(format!("{}: missing required key {}", path, key));
                }
            }
        }
        let props = schema.get("properties").and_then(Value::as_object);
        if let Some(props) = props {
            for (key, sub) in obj {
                match props.get(key) {
                    Some(sub_schema) => {
                        check(sub, sub_schema, root, &format!("{}.{}", path, key), errors)
                    }
                    None => {
                        if schema.get("additionalProperties") == Some(&Value::Bool(false)) {
                            errors.push(format!("{}: unexpected key {}", path, key));
                        }
                    }
                }
            }
        }
    }
    if let Some(items) = value.as_array() {
        if let Some(min) = schema.get("minItems").and_then(Value::as_u64) {
            if (items.len() as u64) < min {
                errors.push(format!("{}: too few items", path));
            }
        }
        if let Some(max) = schema.get("maxItems").and_then(Value::as_u64) {
            if (items.len() as u64) > max {
                errors.push(format!("{}: too many items", path));
            }
        }
        if let Some(item_schema) = schema.get("items") {
            if item_schema.is_object() {
                for (i, item) in items.iter().enumerate() {
                    check(item, item_schema, root, &format!("{}[{}]", path, i), errors);
                }
            }
        }
    }
}
