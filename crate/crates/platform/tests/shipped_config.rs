mod common;

use std::collections::BTreeMap;

use tradeoff_core::frontier::TradeoffArm;
use tradeoff_core::simulator::SimulationConfig;
use tradeoff_platform::config::StudyConfig;
use tradeoff_platform::synth::population_cell_weights;

#[test]
fn study_config_loads_with_default_arms() {
    let config = StudyConfig::load(&common::shipped_config_path()).unwrap();
    assert_eq!(config.arms, TradeoffArm::defaults());
    assert_eq!(config.analysis.bootstrap, 1000);
    assert!(config.event_log.ends_with("data/events.jsonl"));
}

#[test]
fn cell_weights_match_population_marginals() {
    let config = StudyConfig::load(&common::shipped_config_path()).unwrap();
    let shipped = config.cells().unwrap();
    let expected = population_cell_weights();
    assert_eq!(shipped.len(), 3840);
    assert_eq!(shipped.missing_cells(), 0);
    for ((a, wa), (b, wb)) in shipped.entries().iter().zip(expected.entries()) {
        assert_eq!(a, b);
        assert!((wa - wb).abs() < 1e-12, "{a:?}: {wa} vs {wb}");
    }
}

#[test]
fn simulation_file_matches_built_in_experiments() {
    let path = common::shipped_config_path().with_file_name("simulation.toml");
    let text = std::fs::read_to_string(path).unwrap();
    let experiments: BTreeMap<String, SimulationConfig> = toml::from_str(&text).unwrap();
    for (name, built_in) in [("high", SimulationConfig::high_arm()), ("low", SimulationConfig::low_arm())] {
        let shipped = &experiments[name];
        assert_eq!(
            (shipped.start_date, shipped.days, shipped.seed, shipped.bidding),
            (built_in.start_date, built_in.days, built_in.seed, built_in.bidding),
            "{name}"
        );
        assert_eq!(shipped.full_daily_budget, built_in.full_daily_budget);
        assert_eq!(shipped.campaigns.len(), built_in.campaigns.len());
        for (s, b) in shipped.campaigns.iter().zip(&built_in.campaigns) {
            assert_eq!((s.language, s.daily_budget), (b.language, b.daily_budget));
            assert!((s.cost_per_conversion - b.cost_per_conversion).abs() < 1e-9, "{name}");
            assert!((s.cross_language_rate - b.cross_language_rate).abs() < 1e-12, "{name}");
        }
    }
}
