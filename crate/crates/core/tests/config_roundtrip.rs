use ledgerlink::experiments::ScenarioConfig;
use proptest::prelude::*;

fn assignment() -> impl Strategy<Value = (String, String)> {
    prop_oneof![
        (0.0f64..1.0).prop_map(|v| ("case2.p".to_string(), v.to_string())),
        (1u32..100).prop_map(|v| ("case2.periods".to_string(), v.to_string())),
        (1.0f64..50.0).prop_map(|v| ("case2.block_period_s".to_string(), v.to_string())),
        (-1e3f64..1e3).prop_map(|v| ("lorawan.path_loss_ref_db".to_string(), v.to_string())),
        (0.0f64..20.0).prop_map(|v| ("lorawan.shadowing_sigma_db".to_string(), v.to_string())),
        any::<bool>().prop_map(|v| ("lorawan.rayleigh_fading".to_string(), v.to_string())),
        (0.001f64..1.0).prop_map(|v| ("lorawan.dl_duty_cycle".to_string(), v.to_string())),
        (0.0f64..100.0).prop_map(|v| ("dlt.fabric.validation_time_s".to_string(), v.to_string())),
        prop_oneof![Just("none".to_string()), (1u32..2000).prop_map(|v| v.to_string())]
            .prop_map(|v| ("dlt.bitcoin.header_size".to_string(), v)),
        prop_oneof![Just("tree".to_string()), (0u32..999).prop_map(|v| v.to_string())]
            .prop_map(|v| ("sync.state_proof".to_string(), v)),
        proptest::collection::vec(0u64..1000, 1..6).prop_map(|s| (
            "seeds".to_string(),
            s.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
        )),
        proptest::sample::select(vec!["a", "b", "c", "a,b", "b,c", "a,b,c"])
            .prop_map(|v| ("case2.methods".to_string(), v.to_string())),
        proptest::sample::select(vec!["case1", "case2", "toa", "rates"])
            .prop_map(|v| ("scenario".to_string(), v.to_string())),
    ]
}

proptest! {
    #[test]
    fn emitted_configs_parse_back_unchanged(sets in proptest::collection::vec(assignment(), 0..12)) {
        let mut cfg = ScenarioConfig::default();
        for (k, v) in &sets {
            cfg.set(k, v).unwrap();
        }
        let text = cfg.emit();
        let back = ScenarioConfig::parse(&text).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

#[test]
fn unknown_key_is_reported_with_its_line() {
    let err = ScenarioConfig::parse("scenario = case1\n\nlorawan.nope = 3\n").unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("lorawan.nope"), "{msg}");
}
