//! The CSV headers are a public format; changing them needs a schema bump.

use sld_core::harness::{
    run_audit, write_rows, AuditConfig, AuditRow, ResultRow, AUDIT_SCHEMA_VERSION, RESULT_SCHEMA_VERSION,
};

fn header<R: serde::Serialize>(row: R) -> String {
    let mut buf = Vec::new();
    write_rows(&[row], &mut buf).unwrap();
    String::from_utf8(buf).unwrap().lines().next().unwrap().to_string() + "\n"
}

#[test]
fn result_header() {
    assert_eq!(RESULT_SCHEMA_VERSION, 1);
    let row = ResultRow {
        schema_version: RESULT_SCHEMA_VERSION,
        experiment_id: "x".into(),
        trial: 0,
        seed: 0,
        mode: "desk".into(),
        opt_proxy: 0.0,
        achieved_tv: None,
        tv_error: None,
        bound: 1.0,
        success: false,
        runtime_ms: None,
        verdicts: String::new(),
        epsilon_spent: 0.0,
        delta_spent: 0.0,
        within_budget: true,
        output: "BOTTOM".into(),
    };
    assert_eq!(header(row), include_str!("golden/result_header.csv"));
}

#[test]
fn audit_header() {
    assert_eq!(AUDIT_SCHEMA_VERSION, 1);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.csv");
    let mut cfg = AuditConfig::from_toml(
        "id = \"g\"\nkind = \"tlap_release\"\ntrials = 10000\nseed = 1\nepsilon = 1.0\ndelta = 0.05\nbins = 4\n",
    )
    .unwrap();
    cfg.out = Some(path.clone());
    let s = run_audit(&cfg).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next().unwrap().to_string() + "\n", include_str!("golden/audit_header.csv"));
    assert_eq!(text.lines().count(), s.rows.len() + 1);
    let _: &AuditRow = s.rows.last().unwrap();
}
