use magsob::lemma_verify::{certify, monotonicity_scan, ScanRow};
use magsob::QuadratureConfig;
use std::f64::consts::PI;

#[test]
fn scans_pass_for_all_exponents() {
    let cfg = QuadratureConfig::default();
    for q in [2.5, 3.0, 4.0, 6.0, 10.0] {
        let rows = monotonicity_scan(q, 200, &cfg).unwrap();
        assert_eq!(rows.len(), 200);
        let floor = 2.0 * PI / (q + 2.0).sqrt();
        assert!(rows.iter().all(|r: &ScanRow| r.m > floor && r.m < PI));
    }
}

#[test]
fn q4_scan_endpoints() {
    let rows = monotonicity_scan(4.0, 200, &QuadratureConfig::default()).unwrap();
    let last = rows.last().unwrap();
    assert!((last.m - 2.0 * PI / 6f64.sqrt()).abs() < 1e-3, "{}", last.m);
    // the small-gamma end approaches pi only like gamma^(1/4)
    assert!(PI - rows[0].m < 0.2);
}

#[test]
fn certificates_serialize() {
    let report = certify(4.0, 5, 32, &QuadratureConfig::default()).unwrap();
    assert!(report.passed);
    let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(json["sign"].as_array().unwrap().len(), 5);
    assert!(json["limit"]["raw"].as_array().unwrap().len() == 3);
}
