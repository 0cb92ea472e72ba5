use o2lyap::harness::config::{ScenarioConfig, ALL_SCENARIOS, SWEEP_PARAMS};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn emit_then_parse_is_identity(k in 0usize..8, which in 0usize..SWEEP_PARAMS.len(), scale in 0.1..3.0f64) {
        let mut cfg = ScenarioConfig::preset(ALL_SCENARIOS[k]);
        let name = SWEEP_PARAMS[which];
        // Values that every parameter accepts.
        let value = match name {
            "n" => 64.0,
            "save_every" | "seed" => 10.0,
            _ => scale,
        };
        if cfg.set_param(name, value).is_ok() && cfg.validate().is_ok() {
            let back = ScenarioConfig::parse(&cfg.emit().unwrap()).unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}

#[test]
fn unknown_keys_are_rejected() {
    let text = ScenarioConfig::preset(ALL_SCENARIOS[0]).emit().unwrap() + "\nbogus = 1\n";
    assert!(ScenarioConfig::parse(&text).is_err());
}
