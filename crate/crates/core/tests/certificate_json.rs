use anisoscat::hodograph::{certify, degenerate_problem, random_triple, CertifyOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn certificate_serializes_with_all_sections() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let t = random_triple(&mut rng, 4.0, 3.0);
    let cert = certify(&t.problem, &CertifyOptions::default()).unwrap();
    let v: serde_json::Value = serde_json::to_value(&cert).unwrap();
    for key in ["frame", "grid", "constants", "ellipticity", "oblique", "residuals", "failures", "pass"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["pass"], true);
    assert!(v["oblique"]["margin"].as_f64().unwrap() >= 0.0);
}

#[test]
fn degenerate_certificate_lists_the_failing_node() {
    let cert = certify(&degenerate_problem(), &CertifyOptions::default()).unwrap();
    let v: serde_json::Value = serde_json::to_value(&cert).unwrap();
    assert_eq!(v["pass"], false);
    assert_eq!(v["failures"][0]["y"], serde_json::json!([0.0, 0.0]));
}

#[test]
fn certificates_are_deterministic_for_a_seed() {
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t = random_triple(&mut rng, 4.0, 3.0);
        serde_json::to_string(&certify(&t.problem, &CertifyOptions { seed: 5, ..CertifyOptions::default() }).unwrap()).unwrap()
    };
    assert_eq!(run(), run());
}
