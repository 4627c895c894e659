use zs_core::{
    chirped_sech, run_experiment, ChirpedSechParams, Command, Dispersion, ExperimentConfig, ExperimentReport,
    SchemeId, C64,
};

fn scan_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(Command::Scan);
    cfg.amplitudes = vec![5.2];
    cfg.chirp = 4.0;
    cfg.m_values = Some(vec![512]);
    cfg.schemes = vec![SchemeId::Es4, SchemeId::Bo];
    cfg.n_points = Some(65);
    cfg
}

#[test]
fn scan_of_saved_signal_matches_in_memory_signal() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.csv");
    let params = ChirpedSechParams::new(5.2, 4.0);
    chirped_sech(params, 30.0, 512, Dispersion::Anomalous)
        .unwrap()
        .save(&path)
        .unwrap();

    let mut cfg = scan_config();
    cfg.signal_file = Some(path);
    let from_file = run_experiment(&cfg).unwrap();
    assert_eq!(from_file.rows_for("ES4", "a_re").count(), 65);

    let signal = chirped_sech(params, 30.0, 512, Dispersion::Anomalous).unwrap();
    for row in from_file.rows_for("BO", "b_im") {
        let xi = row.key.unwrap();
        let r = zs_core::propagate(&signal, C64::new(xi, 0.0), SchemeId::Bo, false).unwrap();
        assert_eq!(row.value.to_bits(), r.b.im.to_bits(), "xi = {xi}");
    }
}

#[test]
fn summary_statistics_survive_serialization() {
    let report = run_experiment(&scan_config()).unwrap();
    let mut csv = Vec::new();
    report.write_csv(&mut csv).unwrap();
    let mut json = Vec::new();
    report.write_json(&mut json).unwrap();
    for back in [
        ExperimentReport::read_csv(csv.as_slice()).unwrap(),
        ExperimentReport::read_json(json.as_slice()).unwrap(),
    ] {
        for scheme in ["ES4", "BO"] {
            for metric in ["mse_a", "mse_b", "wall_clock_s"] {
                assert_eq!(
                    back.value(scheme, Some(512), metric),
                    report.value(scheme, Some(512), metric)
                );
            }
        }
    }
}

#[test]
fn row_counts_follow_the_swept_dimensions() {
    let mut cfg = ExperimentConfig::new(Command::Order);
    cfg.m_values = Some(vec![128, 256]);
    cfg.n_points = Some(17);
    cfg.schemes = vec![SchemeId::Ct4, SchemeId::Rk4, SchemeId::Tes4];
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.rows.iter().filter(|r| r.metric == "order").count(), 3 * 17);

    let mut cfg = ExperimentConfig::new(Command::Discrete);
    cfg.amplitudes = (0..5).map(|k| 1.0 + 0.5 * k as f64).collect();
    cfg.m_values = Some(vec![256, 512]);
    cfg.schemes = vec![SchemeId::Es4];
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(
        report.rows.iter().filter(|r| r.metric == "error_r0").count(),
        5 * 2
    );
}

#[test]
fn normal_dispersion_energy_run() {
    let mut cfg = ExperimentConfig::new(Command::Energy);
    cfg.amplitudes = vec![5.2];
    cfg.chirp = 4.0;
    cfg.dispersion = Dispersion::Normal;
    cfg.m_values = Some(vec![1024]);
    cfg.xi_range = Some((-20.0, 20.0));
    cfg.n_points = Some(257);
    let report = run_experiment(&cfg).unwrap();
    let rel = |s: SchemeId| {
        report
            .value(s.name(), Some(1024), "max_h_deviation_relative")
            .unwrap()
    };
    for scheme in [SchemeId::Bo, SchemeId::Es4, SchemeId::Tes4, SchemeId::Ct4] {
        assert!(rel(scheme) < 1e-8, "{scheme}: {:e}", rel(scheme));
        assert!(report.value(scheme.name(), Some(1024), "e_c_error").is_none());
    }
    // RK4 loses the invariant towards the edges of the interval.
    let edge = report
        .rows_for("RK4", "h_deviation")
        .find(|r| r.key == Some(20.0))
        .unwrap()
        .value;
    assert!(edge > 1e3 * rel(SchemeId::Es4));
}

#[test]
fn mse_slopes_beyond_the_minimal_grid() {
    let mut cfg = ExperimentConfig::new(Command::Scan);
    let ms = vec![1 << 10, 1 << 11, 1 << 12, 1 << 13];
    cfg.m_values = Some(ms.clone());
    cfg.schemes = vec![SchemeId::Es4, SchemeId::Bo];
    let report = run_experiment(&cfg).unwrap();
    assert!(report.value("ALL", None, "m_min").unwrap() < ms[0] as f64);
    for (scheme, window) in [("ES4", -9.0..=-7.0), ("BO", -5.0..=-3.0)] {
        for metric in ["mse_a", "mse_b"] {
            let (x, y): (Vec<f64>, Vec<f64>) = ms
                .iter()
                .map(|&m| {
                    (
                        (m as f64).log2(),
                        report.value(scheme, Some(m), metric).unwrap().log2(),
                    )
                })
                .unzip();
            let (mx, my) = (x.iter().sum::<f64>() / 4.0, y.iter().sum::<f64>() / 4.0);
            let slope = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>()
                / x.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
            assert!(window.contains(&slope), "{scheme} {metric}: slope {slope}");
        }
    }
}
