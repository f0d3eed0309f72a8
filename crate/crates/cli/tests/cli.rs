use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sos")).args(args).env_remove("CI").output().expect("run sos")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "sos failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_str(&stdout(o)).expect("valid JSON")
}

#[test]
fn formulas_output_is_byte_stable() {
    let a = stdout(&sos(&["formulas", "--beta", "1.3", "--u", "0.02"]));
    let b = stdout(&sos(&["formulas", "--beta", "1.3", "--u", "0.02"]));
    assert_eq!(a, b);
}

#[test]
fn emitted_floats_parse_back_to_the_same_bits() {
    let v = json(&sos(&["formulas", "--beta", "1"]));
    let c = sos_core::formulas::small_cluster_constants(1.0).unwrap();
    assert_eq!(v["H1"].as_f64().unwrap().to_bits(), c.H1.to_bits());
    assert_eq!(v["H2"].as_f64().unwrap().to_bits(), c.H2.to_bits());
    assert_eq!(v["c2"].as_f64().unwrap().to_bits(), c.c2.to_bits());
    assert_eq!(v["format_version"], "sos-cli/1");
    assert_eq!(v["config"]["command"]["formulas"]["beta"], 1.0);
    assert_eq!(v["provenance"], "closed_form");
}

#[test]
fn keys_are_sorted() {
    let text = stdout(&sos(&["formulas", "--beta", "1"]));
    let top: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("  \"") && !l.starts_with("   "))
        .map(|l| l.trim().split('"').nth(1).unwrap())
        .collect();
    let mut sorted = top.clone();
    sorted.sort();
    assert_eq!(top, sorted);
}

#[test]
fn seeded_sampling_is_reproducible() {
    let args = ["sample", "--nx", "4", "--ny", "4", "--beta", "1", "--sweeps", "4000", "--burn-in", "100", "--seed", "9"];
    let a = stdout(&sos(&args));
    assert_eq!(a, stdout(&sos(&args)));
    let mut other = args.to_vec();
    *other.last_mut().unwrap() = "10";
    assert_ne!(a, stdout(&sos(&other)));
    let v: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["peaks"][0]["p1"]["provenance"], "mcmc");
    assert!(v["peaks"][0]["p1"]["stderr"].is_number());
}

#[test]
fn ci_mode_requires_a_seed() {
    let o = Command::new(env!("CARGO_BIN_EXE_sos"))
        .args(["sample", "--beta", "1", "--sweeps", "100"])
        .env("CI", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--seed"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# constants\nbeta = 2.0\nalpha1 = 3   # trailing comment\n").unwrap();
    let c = cfg.to_str().unwrap();
    let v = json(&sos(&["formulas", "--config", c]));
    assert_eq!(v["beta"], 2.0);
    assert_eq!(v["config"]["command"]["formulas"]["alpha1"], 3.0);
    let v = json(&sos(&["formulas", "--config", c, "--beta", "0.7"]));
    assert_eq!(v["beta"], 0.7);
    let v = json(&sos(&["--config", c, "formulas", "--alpha1", "2"]));
    assert_eq!(v["beta"], 2.0);
    assert_eq!(v["config"]["command"]["formulas"]["alpha1"], 2.0);
}

#[test]
fn unknown_config_key_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "beta = 1\nbta = 2\n").unwrap();
    let o = sos(&["formulas", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key `bta`"));
}

#[test]
fn empty_table_gives_header_only_csv() {
    // no contour is shorter than 4
    let o = sos(&["contours", "--enumerate", "2", "--beta", "1", "--format", "csv"]);
    assert_eq!(stdout(&o), "length,count,weight\n");
}

#[test]
fn enumeration_csv_rows() {
    let text = stdout(&sos(&["contours", "--enumerate", "6", "--beta", "1", "--format", "csv"]));
    let rows: Vec<Vec<String>> = text.lines().map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows[0], ["length", "count", "weight"]);
    assert_eq!(rows[1][..2], ["4", "1"]);
    let w: f64 = rows[1][2].parse().unwrap();
    assert_eq!(w, (-4.0f64).exp());
}

#[test]
fn decompose_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let field = dir.path().join("field.json");
    std::fs::write(&field, r#"{"boundary_level": 0, "heights": [[1,1,2],[2,1,0],[1,2,-1],[2,2,1]]}"#).unwrap();
    let out = dir.path().join("cyl.json");
    let o = sos(&["contours", "--decompose", field.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success() && o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let f: sos_core::HeightField = serde_json::from_value(v["field"].clone()).unwrap();
    assert_eq!(v["energy"], sos_core::exact::hamiltonian(&f));
    let cs: Vec<sos_core::contours::Cylinder> = serde_json::from_value(v["cylinders"].clone()).unwrap();
    let back = sos_core::contours::reconstruct(&sos_core::contours::CylinderSet::new(cs), f.region_arc().clone(), 0).unwrap();
    assert_eq!(back, f);
}

#[test]
fn freeenergy_csv_columns() {
    let text = stdout(&sos(&["freeenergy", "--beta", "1", "--width", "1", "--hmax", "6", "--u-grid", "-0.1:0.2:4", "--format", "csv"]));
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "u,f_wet,f_free,fbar,F_printed,F_derived,provenance");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("0.0000000000000000e0,"));
    assert!(rows.iter().all(|r| r.ends_with(",transfer")));
}

#[test]
fn exact_check_reports_pass() {
    let v = json(&sos(&["exact", "--region", "2x2", "--beta", "1", "--ensemble", "wetting", "--h", "0.2", "--check", "identity"]));
    assert_eq!(v["pass"], true);
    assert!(v["gaps"]["gap"].as_f64().unwrap() < 1e-8);
    assert_eq!(v["provenance"], "exact");
}

/// Validator for the draft-07 keywords used by the published schema.
fn violations(schema: &Value, v: &Value, at: &str, out: &mut Vec<String>) {
    let type_ok = |t: &str| match t {
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "boolean" => v.is_boolean(),
        "null" => v.is_null(),
        "number" => v.is_number(),
        "integer" => v.is_i64() || v.is_u64(),
        other => panic!("unsupported type {other}"),
    };
    for (k, s) in schema.as_object().unwrap() {
        match k.as_str() {
            "type" => {
                let ok = match s {
                    Value::String(t) => type_ok(t),
                    Value::Array(ts) => ts.iter().any(|t| type_ok(t.as_str().unwrap())),
                    _ => panic!("bad type keyword"),
                };
                if !ok {
                    out.push(format!("{at}: expected type {s}"));
                }
            }
            "const" if v != s => out.push(format!("{at}: expected {s}")),
            "enum" if !s.as_array().unwrap().contains(v) => out.push(format!("{at}: {v} not in {s}")),
            "minimum" => {
                if let Some(x) = v.as_f64() {
                    if x < s.as_f64().unwrap() {
                        out.push(format!("{at}: {x} below {s}"));
                    }
                }
            }
            "minLength" => {
                if let Some(x) = v.as_str() {
                    if (x.chars().count() as u64) < s.as_u64().unwrap() {
                        out.push(format!("{at}: string too short"));
                    }
                }
            }
            "minItems" => {
                if let Some(xs) = v.as_array() {
                    if (xs.len() as u64) < s.as_u64().unwrap() {
                        out.push(format!("{at}: too few items"));
                    }
                }
            }
            "required" => {
                if let Some(m) = v.as_object() {
                    for r in s.as_array().unwrap() {
                        if !m.contains_key(r.as_str().unwrap()) {
                            out.push(format!("{at}: missing {r}"));
                        }
                    }
                }
            }
            "properties" => {
                if let Some(m) = v.as_object() {
                    for (name, sub) in s.as_object().unwrap() {
                        if let Some(x) = m.get(name) {
                            violations(sub, x, &format!("{at}/{name}"), out);
                        }
                    }
                }
            }
            "additionalProperties" if s == &Value::Bool(false) => {
                if let Some(m) = v.as_object() {
                    let known = schema["properties"].as_object().unwrap();
                    for name in m.keys().filter(|n| !known.contains_key(*n)) {
                        out.push(format!("{at}: unexpected key {name}"));
                    }
                }
            }
            "items" => {
                if let Some(xs) = v.as_array() {
                    for (i, x) in xs.iter().enumerate() {
                        violations(s, x, &format!("{at}/{i}"), out);
                    }
                }
            }
            "$schema" | "$id" | "title" | "const" | "enum" | "additionalProperties" => {}
            other => panic!("schema keyword {other} not handled by the test validator"),
        }
    }
}

fn schema() -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/verify-report.schema.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn schema_valid(report: &Value) {
    let mut errs = Vec::new();
    violations(&schema(), report, "", &mut errs);
    assert!(errs.is_empty(), "report does not match schema: {errs:?}");
}

#[test]
fn verify_identities_passes_and_matches_schema() {
    let o = sos(&["verify", "--suite", "identities"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["pass"], true);
    assert!(v["checks"].as_array().unwrap().iter().any(|c| c["anchor"] == "lehagga-ii"));
    schema_valid(&v);
    let mut bad = v.clone();
    bad["checks"][0]["pass"] = Value::String("yes".into());
    bad["extra"] = Value::Null;
    bad.as_object_mut().unwrap().remove("seed");
    let mut errs = Vec::new();
    violations(&schema(), &bad, "", &mut errs);
    assert_eq!(errs.len(), 3, "{errs:?}");
}

#[test]
fn wrong_h2_constant_fails_verify() {
    let o = sos(&["verify", "--suite", "identities", "--perturb-h2", "1e-6"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lehagga-ii"));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["failed"], serde_json::json!(["lehagga-ii"]));
    schema_valid(&v);
}

#[test]
fn verify_sampler_suite_with_seed() {
    let o = sos(&["verify", "--suite", "sampler", "--seed", "20261016", "--sweeps", "200000", "--threads", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    schema_valid(&json(&o));
}
