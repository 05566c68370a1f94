use mobsrv_demo::{chase_json, growth_json, median_json, MAX_CHASE_STEPS};
use serde_json::Value;

fn parse(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

fn pair(v: &Value) -> [f64; 2] {
    [v[0].as_f64().unwrap(), v[1].as_f64().unwrap()]
}

#[test]
fn median_of_square_corners_is_its_center() {
    let v = parse(&median_json(&[0.0, 0.0, 2.0, 0.0, 2.0, 2.0, 0.0, 2.0]).unwrap());
    let m = pair(&v["median"]);
    assert!(
        (m[0] - 1.0).abs() < 1e-6 && (m[1] - 1.0).abs() < 1e-6,
        "{m:?}"
    );
    assert!((v["objective"].as_f64().unwrap() - 4.0 * 2f64.sqrt()).abs() < 1e-6);
}

#[test]
fn median_rejects_bad_input() {
    assert!(median_json(&[]).is_err());
    assert!(median_json(&[1.0, 2.0, 3.0]).is_err());
    assert!(median_json(&[f64::NAN, 0.0]).is_err());
}

#[test]
fn chase_traces_have_consistent_shape() {
    let v = parse(&chase_json(7, 30, 0.5, 2.0).unwrap());
    let online = v["online"].as_array().unwrap();
    let offline = v["offline"].as_array().unwrap();
    assert_eq!(v["requests"].as_array().unwrap().len(), 30);
    assert_eq!(online.len(), 31);
    assert_eq!(offline.len(), 31);
    assert_eq!(pair(&online[0]), pair(&offline[0]));
    for w in online.windows(2) {
        let (a, b) = (pair(&w[0]), pair(&w[1]));
        assert!(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt() <= 1.5 + 1e-9);
    }
    for w in offline.windows(2) {
        let (a, b) = (pair(&w[0]), pair(&w[1]));
        assert!(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt() <= 1.0 + 1e-9);
    }
    let on = v["online_cost"].as_f64().unwrap();
    let off = v["offline_cost"].as_f64().unwrap();
    assert!(off > 0.0 && off <= on + 1e-9);
    assert!((v["ratio"].as_f64().unwrap() - on / off).abs() < 1e-9);
}

#[test]
fn chase_is_deterministic_and_bounded() {
    assert_eq!(chase_json(3, 10, 0.5, 1.0), chase_json(3, 10, 0.5, 1.0));
    assert!(chase_json(3, 0, 0.5, 1.0).is_err());
    assert!(chase_json(3, MAX_CHASE_STEPS + 1, 0.5, 1.0).is_err());
    assert!(chase_json(3, 10, -1.0, 1.0).is_err());
}

#[test]
fn growth_curve_rises_without_augmentation() {
    let v = parse(&growth_json(0.0, 400).unwrap());
    let points = v["points"].as_array().unwrap();
    let steps: Vec<u64> = points
        .iter()
        .map(|p| p["steps"].as_u64().unwrap())
        .collect();
    assert_eq!(steps, vec![25, 100, 400]);
    let ratios: Vec<f64> = points
        .iter()
        .map(|p| p["ratio"].as_f64().unwrap())
        .collect();
    assert!(ratios.windows(2).all(|w| w[1] > w[0]), "{ratios:?}");
    let exponent = v["exponent"].as_f64().unwrap();
    assert!(exponent > 0.3 && exponent < 0.7, "{exponent}");
    assert!(growth_json(0.0, 10).is_err());
}
