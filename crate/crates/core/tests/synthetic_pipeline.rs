use chrono::NaiveDate;
use tickzone::estimators::{count_alternations, estimate_eta};
use tickzone::io::{read_daily_records, run_pipeline, PipelineConfig, SyntheticAsset, SyntheticMarket};

fn market(assets: Vec<SyntheticAsset>, days: usize, secs: f64, seed: u64) -> SyntheticMarket {
    SyntheticMarket {
        assets,
        days,
        session_secs: secs,
        sigma_dispersion: 0.25,
        seed,
        start: NaiveDate::from_ymd_opt(2010, 1, 4).unwrap(),
    }
}

#[test]
fn continuation_fraction_at_quarter_eta() {
    // η = 1/4 gives continuation probability η/(1/2 + η) = 1/3.
    let m = market(
        vec![SyntheticAsset {
            id: "Q".into(),
            tick: "1".parse().unwrap(),
            etas: vec![0.25],
            sigma: 1.0,
        }],
        1,
        20_000.0,
        3,
    );
    let day = m.simulate().unwrap().remove(0);
    let changes = day.tape.price_changes();
    assert!(changes.len() > 20_000, "{} changes", changes.len());
    let counts = count_alternations(changes.iter().map(|c| c.direction)).unwrap();
    assert!((counts.continuation_fraction() - 1.0 / 3.0).abs() < 0.01, "{counts:?}");
    assert!((estimate_eta(&counts).unwrap() - 0.25).abs() < 0.01);
}

#[test]
fn pipeline_over_three_assets() {
    let dir = tempfile::tempdir().unwrap();
    let asset = |id: &str, tick: &str, etas: Vec<f64>| SyntheticAsset {
        id: id.into(),
        tick: tick.parse().unwrap(),
        etas,
        sigma: 0.15 * tick.parse::<f64>().unwrap(),
    };
    let m = market(
        vec![
            asset("AAA", "0.5", vec![0.12, 0.3]),
            asset("BBB", "1", vec![0.2, 0.35, 0.25]),
            asset("CCC", "0.25", vec![0.3, 0.15]),
        ],
        30,
        1800.0,
        21,
    );
    let data = dir.path().join("data");
    let mut config = m.write_dataset(&data).unwrap();
    config.set("out_dir", dir.path().join("out").display().to_string());
    let pc = PipelineConfig::from_config(&config).unwrap();
    let summary = run_pipeline(&pc).unwrap();

    assert_eq!(summary.records.len(), 90);
    assert!(summary.skipped.is_empty());
    assert_eq!(summary.fits.len(), 3);
    for g in &summary.fits {
        let fit = g.fit.as_ref().unwrap();
        let flagged = summary
            .records
            .iter()
            .filter(|r| r.asset_id == g.asset_id && r.is_flagged())
            .count();
        assert_eq!(fit.n_days, 30 - flagged);
        assert!(flagged <= 3, "{flagged} flagged days");
        assert!(fit.p1.value > 0.5 && fit.p1.value < 1.5, "{}: {fit:?}", g.label());
    }

    let file = std::fs::File::open(&summary.outputs[0]).unwrap();
    let back = read_daily_records(file).unwrap();
    assert_eq!(back, summary.records);
    let regression = std::fs::read_to_string(&summary.outputs[1]).unwrap();
    assert_eq!(regression.lines().count(), 4);
}
