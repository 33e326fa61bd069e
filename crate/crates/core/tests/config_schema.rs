use std::collections::BTreeSet;
use std::path::Path;

use serde_json::Value;

use crime_lab::classifiers::ModelSpec;
use crime_lab::ensembles::EnsembleSpec;
use crime_lab::runner::RunConfig;

fn manifest(p: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(p)
}

fn schema() -> Value {
    serde_json::from_str(
        &std::fs::read_to_string(manifest("schema/run_config.schema.json")).unwrap(),
    )
    .unwrap()
}

fn enum_values(v: &Value) -> Vec<String> {
    v["enum"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s.as_str().unwrap().to_string())
        .collect()
}

#[test]
fn sample_configs_load() {
    let mut n = 0;
    for entry in std::fs::read_dir(manifest("configs")).unwrap() {
        let path = entry.unwrap().path();
        let cfg = RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(!cfg.dataset.as_os_str().is_empty());
        n += 1;
    }
    assert!(n >= 5);
}

#[test]
fn schema_lists_every_config_field() {
    let s = schema();
    let props: BTreeSet<String> = s["properties"]
        .as_object()
        .unwrap()
        .keys()
        .cloned()
        .collect();
    let cfg = RunConfig::new("x.csv", ModelSpec::knn());
    let mut echoed: BTreeSet<String> = serde_json::to_value(&cfg)
        .unwrap()
        .as_object()
        .unwrap()
        .keys()
        .cloned()
        .collect();
    echoed.extend(["out_dir".to_string(), "threads".to_string()]);
    assert_eq!(props, echoed);
    let required: Vec<&str> = s["required"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(required, ["dataset", "model"]);
}

#[test]
fn schema_enums_are_accepted() {
    let s = schema();
    let p = &s["properties"];
    for kind in enum_values(&p["sampler"]["properties"]["kind"]) {
        let text = format!(
            r#"{{"dataset":"d.csv","model":{{"kind":"knn"}},"sampler":{{"kind":"{kind}"}}}}"#
        );
        RunConfig::from_json(&text).unwrap_or_else(|e| panic!("sampler {kind}: {e}"));
    }
    for kind in enum_values(&p["selector"]["properties"]["kind"]) {
        let text = format!(
            r#"{{"dataset":"d.csv","model":{{"kind":"knn"}},"selector":{{"kind":"{kind}"}}}}"#
        );
        RunConfig::from_json(&text).unwrap_or_else(|e| panic!("selector {kind}: {e}"));
    }
    for proto in enum_values(&p["protocol"]) {
        let text =
            format!(r#"{{"dataset":"d.csv","model":{{"kind":"knn"}},"protocol":"{proto}"}}"#);
        RunConfig::from_json(&text).unwrap();
    }
    for m in s["$defs"]["model"]["oneOf"].as_array().unwrap() {
        let kind = m["properties"]["kind"]["const"].as_str().unwrap();
        let spec: ModelSpec = serde_json::from_str(&format!(r#"{{"kind":"{kind}"}}"#)).unwrap();
        assert_eq!(spec.name(), kind);
        let keys: BTreeSet<String> = m["properties"]
            .as_object()
            .unwrap()
            .keys()
            .cloned()
            .collect();
        let emitted: BTreeSet<String> = serde_json::to_value(&spec)
            .unwrap()
            .as_object()
            .unwrap()
            .keys()
            .cloned()
            .collect();
        assert_eq!(keys, emitted, "fields of {kind}");
    }
    for e in s["$defs"]["ensemble"]["oneOf"].as_array().unwrap() {
        let kind = e["properties"]["kind"]["const"].as_str().unwrap();
        let text = match kind {
            "bagging" => r#"{"kind":"bagging","base":{"kind":"knn"}}"#.to_string(),
            "voting" => r#"{"kind":"voting","bases":[{"kind":"knn"},{"kind":"lda"}]}"#.to_string(),
            k => format!(r#"{{"kind":"{k}"}}"#),
        };
        let spec: EnsembleSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(spec.name(), kind);
    }
}

#[test]
fn unknown_fields_and_missing_model_are_config_errors() {
    for text in [
        r#"{"dataset":"d.csv","model":{"kind":"knn"},"foldz":3}"#,
        r#"{"dataset":"d.csv"}"#,
        r#"{"dataset":"d.csv","model":{"kind":"svm"}}"#,
        r#"{"dataset":"d.csv","model":{"kind":"knn"},"folds":1}"#,
    ] {
        let err = RunConfig::from_json(text).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{text}: {err}");
    }
}
