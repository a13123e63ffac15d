use dfscreen::simgen::{BetaSpec, Scenario, ScenarioSampler};
use dfscreen::{
    run_experiment, screen, DMatrix, DVector, ExperimentConfig, LinkSpec, Method, MethodSettings, ScenarioConfig,
    ScreenError, ScreenOptions, SelectionResult,
};

fn scenario(link: LinkSpec, n: usize, p: usize, rho: f64, seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        scenario: Scenario::Ar1,
        n,
        p,
        rho,
        link,
        beta: BetaSpec::Dense(vec![1.0, -1.0, 0.8]),
        replications: 1,
        seed,
    }
}

#[test]
fn zero_response_selects_nothing() {
    let (x, _) = ScenarioSampler::new(&scenario(LinkSpec::Identity, 40, 60, 0.0, 1))
        .unwrap()
        .replication(0)
        .unwrap();
    let mut opts = ScreenOptions::new(LinkSpec::Identity);
    opts.c = Some(1.0);
    let r = screen(&x, &DVector::zeros(40), &opts).unwrap();
    assert!(r.selected.is_empty());
}

#[test]
fn selection_result_survives_json() {
    let (x, y) = ScenarioSampler::new(&scenario(LinkSpec::Identity, 80, 120, 0.5, 2))
        .unwrap()
        .replication(0)
        .unwrap();
    let r = screen(&x, &y, &ScreenOptions::new(LinkSpec::Identity)).unwrap();
    assert!(r.cv.is_some());
    let back: SelectionResult = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn strong_signal_recovered_for_each_simulated_link() {
    for (link, n) in [(LinkSpec::Identity, 200), (LinkSpec::Logit, 400), (LinkSpec::Log, 200)] {
        let mut cfg = scenario(link, n, 300, 0.0, 3);
        cfg.beta = BetaSpec::Dense(vec![1.0, -1.0, 0.8]);
        let (x, y) = ScenarioSampler::new(&cfg).unwrap().replication(0).unwrap();
        let r = screen(&x, &y, &ScreenOptions::new(link)).unwrap();
        for j in 0..3 {
            assert!(r.selected.contains(&j), "{link}: {:?}", r.selected);
        }
    }
}

#[test]
fn contract_errors_are_flagged() {
    let x = DMatrix::from_element(10, 3, 1.0);
    let y = DVector::from_element(10, 0.3);
    let err = screen(&x, &y, &ScreenOptions::new(LinkSpec::Logit)).unwrap_err();
    assert!(matches!(err, ScreenError::Domain { .. }));
    assert!(err.is_contract_violation());
}

#[test]
fn replications_prefix_is_stable_under_count_change() {
    let mut cfg = ExperimentConfig {
        scenario: scenario(LinkSpec::Identity, 50, 70, 0.2, 9),
        methods: vec![Method::Fbic, Method::SisTopk, Method::WrhTopk],
        settings: MethodSettings::default(),
    };
    cfg.scenario.replications = 2;
    let short = run_experiment(&cfg).unwrap();
    cfg.scenario.replications = 4;
    let long = run_experiment(&cfg).unwrap();
    assert_eq!(short.replications[..], long.replications[..2]);
}
