//! Host-side checks of the JSON payloads the browser page consumes.

use erlab_wasm::{measure_json, phase_curve_json, scatter_json};

fn parse(s: &str) -> serde_json::Value {
    let v: serde_json::Value = serde_json::from_str(s).expect("valid JSON");
    assert!(v.get("error").is_none(), "unexpected error payload: {v}");
    v
}

#[test]
fn phase_curve_payload() {
    let v = parse(&phase_curve_json(0.5));
    assert!((v["b_star"].as_f64().unwrap() - 2.588_699_449_562_089_8).abs() < 1e-12);
    let lambda = v["lambda"].as_array().unwrap();
    let rho = v["rho"].as_array().unwrap();
    assert_eq!(lambda.len(), 301);
    assert_eq!(rho.len(), 301);
    // rho decreases from the edge jump and hits zero at lambda_max
    let edge = v["edge_exponent"].as_f64().unwrap();
    assert!((rho[0].as_f64().unwrap() - edge).abs() <= 1e-12);
    let lam_max = v["lambda_max"].as_f64().unwrap();
    for (l, r) in lambda.iter().zip(rho) {
        if l.as_f64().unwrap() > lam_max + 1e-9 {
            assert_eq!(r.as_f64().unwrap(), 0.0);
        }
    }

    // above b_* the whole curve vanishes and lambda_max is null
    let flat = parse(&phase_curve_json(2.7));
    assert!(flat["lambda_max"].is_null());
    for r in flat["rho"].as_array().unwrap() {
        assert_eq!(r.as_f64().unwrap(), 0.0);
    }

    let bad: serde_json::Value = serde_json::from_str(&phase_curve_json(-1.0)).unwrap();
    assert!(bad.get("error").is_some());
}

#[test]
fn measure_payload() {
    let v = parse(&measure_json(2.5));
    assert!((v["total_mass"].as_f64().unwrap() - 1.0).abs() <= 1e-9);
    // atoms at +-Lambda(2.5) = +-2.5/sqrt(1.5), mass (2.5-2)/(2*2.5-2) each
    assert!((v["atom_location"].as_f64().unwrap() - 2.5 / 1.5f64.sqrt()).abs() <= 1e-12);
    assert!((v["atom_mass"].as_f64().unwrap() - 0.5 / 3.0).abs() <= 1e-12);
    let x = v["x"].as_array().unwrap();
    let density = v["density"].as_array().unwrap();
    assert_eq!(x.len(), 401);
    for (xi, di) in x.iter().zip(density) {
        let (xi, di) = (xi.as_f64().unwrap(), di.as_f64().unwrap());
        assert!(di >= 0.0);
        if xi.abs() > 2.0 {
            assert_eq!(di, 0.0, "no continuous mass outside (-2, 2)");
        }
    }

    let sub = parse(&measure_json(1.0));
    assert_eq!(sub["atom_mass"].as_f64().unwrap(), 0.0, "no atoms below alpha = 2");

    let bad: serde_json::Value = serde_json::from_str(&measure_json(-0.5)).unwrap();
    assert!(bad.get("error").is_some());
}

#[test]
fn scatter_payload() {
    let v = parse(&scatter_json(200, 0.8, 1));
    let eig = v["eigenvalue"].as_array().unwrap();
    let inf = v["inf_norm"].as_array().unwrap();
    let gamma = v["gamma"].as_array().unwrap();
    assert_eq!(eig.len(), 200);
    assert_eq!(inf.len(), 200);
    assert_eq!(gamma.len(), 200);
    for i in inf {
        let i = i.as_f64().unwrap();
        assert!(i > 0.0 && i <= 1.0, "sup norm of a unit vector: {i}");
    }
    // deterministic for a fixed seed
    assert_eq!(scatter_json(200, 0.8, 1), scatter_json(200, 0.8, 1));
    assert_ne!(scatter_json(200, 0.8, 1), scatter_json(200, 0.8, 2));

    let bad: serde_json::Value = serde_json::from_str(&scatter_json(5000, 0.8, 1)).unwrap();
    assert!(bad.get("error").is_some(), "n cap enforced");
}
