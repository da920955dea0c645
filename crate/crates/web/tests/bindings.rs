use magsob_web::{m_curve_json, minimizer_profile_json, solve_json};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn curve_is_decreasing_between_limits() {
    let v = parse(m_curve_json(4.0, 40).unwrap());
    let m: Vec<f64> = v["m"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert_eq!(m.len(), 40);
    assert!(m.windows(2).all(|w| w[1] < w[0]));
    let (lo, hi) = (
        v["limit_high"].as_f64().unwrap(),
        v["limit_low"].as_f64().unwrap(),
    );
    assert!(m.iter().all(|&x| x > lo && x < hi));
}

#[test]
fn solve_reports_regimes() {
    let v = parse(solve_json(4.0, 0.3).unwrap());
    assert_eq!(v["regime"], "constant");
    assert!(v["detail"].is_null());
    let v = parse(solve_json(4.0, 0.45).unwrap());
    assert_eq!(v["regime"], "symmetry_broken");
    assert!(v["mu"].as_f64().unwrap() < v["mu_constant"].as_f64().unwrap());
    // the page's slider reaches the boundary flux
    let v = parse(solve_json(4.0, 0.5).unwrap());
    assert_eq!(v["extrapolated"], true);
}

#[test]
fn profile_shapes() {
    let v = parse(minimizer_profile_json(4.0, 0.45, 100).unwrap());
    assert_eq!(v["x"].as_array().unwrap().len(), 101);
    assert_eq!(v["re"].as_array().unwrap().len(), 101);
    let v = parse(minimizer_profile_json(4.0, 0.2, 64).unwrap());
    assert!(v["r"]
        .as_array()
        .unwrap()
        .iter()
        .all(|r| r.as_f64() == Some(1.0)));
}

#[test]
fn errors_are_messages() {
    let err = solve_json(1.5, 0.3).unwrap_err();
    assert!(err.contains("q"), "{err}");
    assert!(m_curve_json(f64::NAN, 10).is_err());
}
