use starris::baselines::{baseline_configuration, run_baseline, BaselineKind};
use starris::fp::{run_es, run_es_from, EsOptions};
use starris::scenario::{generate_channels, reference_config, Scenario};
use starris::ts::{run_ts, TsOptions, TsSchedule};

#[test]
fn es_seeded_from_any_baseline_never_drops() {
    let cfg = reference_config(4, 8, 20.0);
    for seed in 0..3 {
        let ch = generate_channels(&cfg, seed);
        let opts = EsOptions { seed, ..EsOptions::default() };
        for kind in BaselineKind::ALL {
            if kind == BaselineKind::NoRis {
                continue;
            }
            let base = run_baseline(kind, &cfg, &ch, &opts).unwrap();
            let es = run_es_from(&cfg, &ch, base.run.ris.clone(), base.run.precoder.clone(), &opts).unwrap();
            assert!(es.sum_rate >= base.sum_rate() - 1e-6, "{kind}: es {} base {}", es.sum_rate, base.sum_rate());
        }
    }
}

#[test]
fn equal_energy_start_matches_es_start() {
    let cfg = reference_config(4, 8, 20.0);
    let ch = generate_channels(&cfg, 5);
    let ee = baseline_configuration(BaselineKind::EqualEnergy, &cfg, &ch, 5).unwrap();
    let (es, _) = starris::fp::initial_state(&ch, cfg.power, 5, 0.5).unwrap();
    assert_eq!(ee, es);
}

#[test]
fn desk_ordering_es_above_random_star() {
    let cfg = reference_config(8, 16, 30.0);
    let mut es_sum = 0.0;
    let mut rs_sum = 0.0;
    let mut ee_sum = 0.0;
    for seed in 0..5 {
        let ch = generate_channels(&cfg, seed);
        let opts = EsOptions { seed, ..EsOptions::default() };
        es_sum += run_es(&cfg, &ch, &opts).unwrap().sum_rate;
        rs_sum += run_baseline(BaselineKind::RandomStar, &cfg, &ch, &opts).unwrap().sum_rate();
        ee_sum += run_baseline(BaselineKind::EqualEnergy, &cfg, &ch, &opts).unwrap().sum_rate();
    }
    assert!(es_sum > rs_sum);
    assert!(es_sum >= ee_sum);
}

#[test]
fn ts_schedules_both_supported() {
    let cfg = reference_config(4, 8, 20.0);
    let ch = generate_channels(&cfg, 1);
    let alt = run_ts(&cfg, &ch, &TsOptions::default()).unwrap();
    let once = run_ts(&cfg, &ch, &TsOptions { schedule: TsSchedule::OneShot, ..TsOptions::default() }).unwrap();
    assert_eq!(alt.schedule, TsSchedule::Alternate);
    assert_eq!(once.schedule, TsSchedule::OneShot);
    assert_eq!(once.rounds.len(), 1);
    assert!(alt.rounds.len() <= 20);
    assert!((0.0..=1.0).contains(&alt.delta) && (0.0..=1.0).contains(&once.delta));
}

#[test]
fn shipped_scenarios_load() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let paper = Scenario::load(root.join("paper.toml")).unwrap();
    assert_eq!(paper.config, reference_config(8, 40, 30.0));
    let desk = Scenario::load(root.join("desk.toml")).unwrap();
    assert_eq!(desk.config, reference_config(8, 16, 30.0));
}
