use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use super::*;
use crate::sim::{KpiStore, Scheme, SimConfig};
use crate::topology::Direction;

fn tiny_base() -> SimConfig {
    let mut cfg = SimConfig::default();
    cfg.layout.cells = 2;
    cfg.traffic.dl_ues_per_cell = 1;
    cfg.traffic.ul_ues_per_cell = 1;
    cfg.run.duration_s = 0.02;
    cfg
}

fn tiny_campaign(out_dir: PathBuf) -> Campaign {
    Campaign {
        base: tiny_base(),
        loads_mbps: vec![1.0],
        schemes: vec![Scheme::CfTdd, Scheme::NcTdd],
        seeds: vec![3, 4],
        out_dir,
        workers: 2,
    }
}

#[test]
fn campaign_axes_must_be_nonempty_and_unique() {
    let dir = tempfile::tempdir().expect("tempdir");
    let good = tiny_campaign(dir.path().to_path_buf());
    assert!(good.validate().is_ok());

    let mut c = good.clone();
    c.loads_mbps.clear();
    assert!(matches!(c.validate(), Err(RunnerError::Invalid(_))));

    let mut c = good.clone();
    c.schemes.push(Scheme::CfTdd);
    assert!(matches!(c.validate(), Err(RunnerError::Invalid(_))));

    let mut c = good.clone();
    c.seeds.push(3);
    assert!(matches!(c.validate(), Err(RunnerError::Invalid(_))));

    let mut c = good;
    c.loads_mbps.push(1.0);
    assert!(matches!(c.validate(), Err(RunnerError::Invalid(_))));
}

#[test]
fn tuple_order_is_load_major_and_names_are_stable() {
    let dir = tempfile::tempdir().expect("tempdir");
    let mut c = tiny_campaign(dir.path().to_path_buf());
    c.loads_mbps = vec![1.0, 2.5];
    c.seeds = vec![7];
    let tuples = c.tuples();
    assert_eq!(
        tuples,
        vec![
            (1.0, Scheme::CfTdd, 7),
            (1.0, Scheme::NcTdd, 7),
            (2.5, Scheme::CfTdd, 7),
            (2.5, Scheme::NcTdd, 7),
        ]
    );
    assert_eq!(tuple_file_name(Scheme::Csa, 2.5, 7), "csa_2.5_7.json");
    assert_eq!(tuple_file_name(Scheme::CfTdd, 4.0, 11), "cf_tdd_4_11.json");
}

#[test]
fn campaign_writes_every_tuple_and_rows_match_the_files() {
    let dir = tempfile::tempdir().expect("tempdir");
    let campaign = tiny_campaign(dir.path().to_path_buf());
    let report = run_campaign(&campaign).expect("campaign runs");

    assert!(report.failures.is_empty());
    assert_eq!(report.files.len(), 4);
    assert_eq!(report.rows.len(), 8);
    for path in &report.files {
        assert!(path.is_file(), "missing {}", path.display());
    }
    assert!(dir.path().join("rows.csv").is_file());
    assert!(dir.path().join("summary.txt").is_file());

    // Each row is recomputable from the per-tuple file it came from.
    for row in &report.rows {
        let path = campaign
            .out_dir
            .join(tuple_file_name(row.scheme, row.load_mbps, row.seed));
        let kpi = KpiStore::load(&path).expect("tuple file loads");
        assert_eq!(kpi.scheme, row.scheme);
        assert_eq!(kpi.seed, row.seed);
        let expected = match row.direction {
            Direction::Dl => kpi.summary.dl_outage.value_ms,
            Direction::Ul => kpi.summary.ul_outage.value_ms,
        };
        assert_eq!(row.outage_ms, expected);
        assert_eq!(row.overhead_bits, kpi.overhead_bits);
    }

    let csv = fs::read_to_string(dir.path().join("rows.csv")).expect("csv");
    assert!(csv.starts_with(ResultRow::CSV_HEADER));
    assert_eq!(csv.lines().count(), 1 + report.rows.len());
}

#[test]
fn rerun_reuses_files_and_leaves_bytes_unchanged() {
    let dir = tempfile::tempdir().expect("tempdir");
    let campaign = tiny_campaign(dir.path().to_path_buf());
    let first = run_campaign(&campaign).expect("first run");
    let snapshot: Vec<(PathBuf, String)> = first
        .files
        .iter()
        .map(|p| (p.clone(), fs::read_to_string(p).expect("readable")))
        .collect();
    let mtimes: Vec<_> = first
        .files
        .iter()
        .map(|p| fs::metadata(p).and_then(|m| m.modified()).expect("mtime"))
        .collect();

    let second = run_campaign(&campaign).expect("second run");
    assert_eq!(first.files, second.files);
    for ((path, bytes), mtime) in snapshot.iter().zip(&mtimes) {
        assert_eq!(&fs::read_to_string(path).expect("readable"), bytes);
        let after = fs::metadata(path).and_then(|m| m.modified()).expect("mtime");
        assert_eq!(&after, mtime, "rerun rewrote {}", path.display());
    }
    assert_eq!(first.summary_text, second.summary_text);
}

#[test]
fn stale_files_from_another_config_are_recomputed() {
    let dir = tempfile::tempdir().expect("tempdir");
    let mut campaign = tiny_campaign(dir.path().to_path_buf());
    campaign.schemes = vec![Scheme::CfTdd];
    campaign.seeds = vec![3];
    run_campaign(&campaign).expect("first run");

    let path = dir.path().join(tuple_file_name(Scheme::CfTdd, 1.0, 3));
    let original = fs::read_to_string(&path).expect("readable");

    // Same grid point, different base config: the stale file must not be
    // reused.
    campaign.base.traffic.payload_bits = 200;
    run_campaign(&campaign).expect("second run");
    let replaced = fs::read_to_string(&path).expect("readable");
    assert_ne!(original, replaced);
}

#[test]
fn a_failing_tuple_does_not_sink_the_campaign() {
    let dir = tempfile::tempdir().expect("tempdir");
    let mut campaign = tiny_campaign(dir.path().to_path_buf());
    campaign.schemes = vec![Scheme::CfTdd];
    campaign.seeds = vec![3];
    campaign.loads_mbps = vec![1.0, -1.0];

    let report = run_campaign(&campaign).expect("campaign tolerates tuple failure");
    assert_eq!(report.failures.len(), 1);
    assert_eq!(report.failures[0].load_mbps, -1.0);
    assert!(report.failures[0].error.contains("offered_load_mbps"));
    assert_eq!(report.files.len(), 1);
    assert_eq!(report.rows.len(), 2);
}

#[test]
fn summary_value_is_recomputable_from_the_tuple_files() {
    let dir = tempfile::tempdir().expect("tempdir");
    let campaign = tiny_campaign(dir.path().to_path_buf());
    let report = run_campaign(&campaign).expect("campaign runs");

    // Pool CF-TDD UL latencies over both seeds and recompute the quantile
    // that the summary table printed.
    let mut completed = Vec::new();
    let mut failed = 0usize;
    for seed in &campaign.seeds {
        let path = dir.path().join(tuple_file_name(Scheme::CfTdd, 1.0, *seed));
        let kpi = KpiStore::load(&path).expect("tuple file loads");
        let (c, f) = kpi.latency_samples(Direction::Ul);
        completed.extend_from_slice(c);
        failed += f;
    }
    let est = outage_latency(&completed, failed, campaign.base.run.outage_percentile);
    if let Some(v) = est.value_ms {
        assert!(
            report.summary_text.contains(&format!("{v:.3}")),
            "summary should contain the pooled value {v:.3}:\n{}",
            report.summary_text
        );
    } else {
        assert!(report.summary_text.contains("fail"));
    }
    assert!(report.summary_text.contains("[ul]"));
    assert!(report.summary_text.contains("[dl]"));
}

#[test]
fn plot_kind_labels_roundtrip() {
    for kind in PlotKind::ALL {
        assert_eq!(PlotKind::from_str(kind.as_str()), Ok(kind));
    }
    assert!(PlotKind::from_str("sinr_pdf").is_err());
}

#[test]
fn plotdata_tables_match_the_stored_distributions() {
    let dir = tempfile::tempdir().expect("tempdir");
    let campaign = tiny_campaign(dir.path().to_path_buf());
    let report = run_campaign(&campaign).expect("campaign runs");
    let plots = dir.path().join("plots");

    let written = emit_plotdata(&report.files, PlotKind::MuEcdf, &plots).expect("plotdata");
    assert_eq!(written.len(), 2, "one table per scheme");
    for path in &written {
        let text = fs::read_to_string(path).expect("readable");
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("value,probability"));
        let steps: Vec<(f64, f64)> = lines
            .map(|l| {
                let (v, p) = l.split_once(',').expect("two columns");
                (v.parse().expect("value"), p.parse().expect("probability"))
            })
            .collect();
        assert!(!steps.is_empty());
        assert!(steps.windows(2).all(|w| w[0].0 < w[1].0));
        assert!(steps.iter().all(|s| (0.0..=1.0).contains(&s.1)));
        assert_eq!(steps.last().expect("nonempty").1, 1.0);
    }

    // The per-scheme table equals the ECDF of the pooled stored samples.
    let nc_path = plots.join("mu_ecdf_nc_tdd.csv");
    let mut pooled = Vec::new();
    for seed in &campaign.seeds {
        let path = dir.path().join(tuple_file_name(Scheme::NcTdd, 1.0, *seed));
        pooled.extend(KpiStore::load(&path).expect("loads").mu);
    }
    let expected = ecdf(&pooled);
    let text = fs::read_to_string(&nc_path).expect("readable");
    let got: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let (v, p) = l.split_once(',').expect("two columns");
            (v.parse().expect("value"), p.parse().expect("probability"))
        })
        .collect();
    assert_eq!(got.len(), expected.len());
    for (g, e) in got.iter().zip(&expected) {
        assert!((g.0 - e.0).abs() < 1e-12 && (g.1 - e.1).abs() < 1e-12);
    }
}

#[test]
fn latency_ccdf_floors_at_the_failure_fraction() {
    let table = censored_ccdf(&[1.0, 2.0, 3.0], 1);
    assert_eq!(table.len(), 3);
    assert_eq!(table[0], (1.0, 0.75));
    assert_eq!(table[1], (2.0, 0.5));
    assert_eq!(table[2], (3.0, 0.25));

    let clean = censored_ccdf(&[1.0, 2.0], 0);
    assert_eq!(clean.last().expect("nonempty").1, 0.0);
    assert!(censored_ccdf(&[], 0).is_empty());
}

#[test]
fn three_sample_latency_table_has_three_steps_ending_at_zero() {
    let dir = tempfile::tempdir().expect("tempdir");
    let mut kpi = KpiStore::new(Scheme::CfTdd, 1, "feedfeedfeedfeed".to_string(), 1, 10);
    kpi.dl_latency_ms = vec![0.75, 1.25, 2.0];
    kpi.counts.generated_dl = 3;
    kpi.counts.decoded_dl = 3;
    let path = dir.path().join("cf_tdd_1_1.json");
    kpi.save(&path).expect("save");

    let plots = dir.path().join("plots");
    emit_plotdata(&[path], PlotKind::LatencyCcdf, &plots).expect("plotdata");
    let text =
        fs::read_to_string(plots.join("latency_ccdf_cf_tdd_dl.csv")).expect("readable");
    let steps: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let (v, p) = l.split_once(',').expect("two columns");
            (v.parse().expect("value"), p.parse().expect("probability"))
        })
        .collect();
    assert_eq!(steps.len(), 3);
    assert_eq!(steps.last().expect("nonempty"), &(2.0, 0.0));
}

#[test]
fn plotdata_emits_per_direction_tables_for_directional_kinds() {
    let dir = tempfile::tempdir().expect("tempdir");
    let mut campaign = tiny_campaign(dir.path().to_path_buf());
    campaign.schemes = vec![Scheme::CfTdd];
    campaign.seeds = vec![3];
    let report = run_campaign(&campaign).expect("campaign runs");
    let plots = dir.path().join("plots");

    let written = emit_plotdata(&report.files, PlotKind::LatencyCcdf, &plots).expect("plotdata");
    let names: Vec<String> = written
        .iter()
        .map(|p| p.file_name().expect("name").to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, vec!["latency_ccdf_cf_tdd_dl.csv", "latency_ccdf_cf_tdd_ul.csv"]);
}

#[test]
fn plotdata_rejects_empty_and_unreadable_inputs() {
    let dir = tempfile::tempdir().expect("tempdir");
    let err = emit_plotdata(&[], PlotKind::MuEcdf, dir.path());
    assert!(matches!(err, Err(RunnerError::MissingInput(_))));

    let missing = dir.path().join("nope.json");
    let err = emit_plotdata(&[missing.clone()], PlotKind::MuEcdf, dir.path());
    match err {
        Err(RunnerError::MissingInput(msg)) => assert!(msg.contains("nope.json")),
        other => panic!("expected MissingInput, got {other:?}"),
    }
}
