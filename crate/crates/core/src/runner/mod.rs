//! Campaign execution over a (load, scheme, seed) grid and post-processing
//! of the stored results: per-tuple KPI files, a per-run result table, an
//! aggregated scheme-comparison summary, and plot-ready distribution tables.
//!
//! Each tuple runs as an independent simulation on a worker thread; results
//! land in one JSON file per tuple, written atomically (temp file + rename)
//! so interrupted campaigns never leave half-written outputs. A rerun over
//! the same directory reuses files whose configuration hash still matches
//! and recomputes the rest, so the campaign is idempotent. A failing tuple
//! is reported and skipped; the rest of the grid still completes.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use thiserror::Error;

use crate::sim::{self, ecdf, outage_latency, symmetric_percent, KpiStore, Scheme, SimConfig};
use crate::topology::Direction;

/// Errors from campaign setup and post-processing. Per-tuple simulation
/// failures are not errors at this level; they are collected in the report.
#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid campaign: {0}")]
    Invalid(String),
    #[error("missing input: {0}")]
    MissingInput(String),
}

fn io_err(path: &Path, source: std::io::Error) -> RunnerError {
    RunnerError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// A sweep: the cross product of offered loads, schemes, and seeds over one
/// base configuration. The base carries everything the axes do not override.
#[derive(Debug, Clone)]
pub struct Campaign {
    pub base: SimConfig,
    pub loads_mbps: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    /// Worker threads; clamped to [1, tuple count].
    pub workers: usize,
}

impl Campaign {
    /// Check the axes: each non-empty and free of duplicates. The base
    /// config is validated per tuple (axis overrides can change validity).
    pub fn validate(&self) -> Result<(), RunnerError> {
        if self.loads_mbps.is_empty() {
            return Err(RunnerError::Invalid("no offered loads".to_string()));
        }
        if self.schemes.is_empty() {
            return Err(RunnerError::Invalid("no schemes".to_string()));
        }
        if self.seeds.is_empty() {
            return Err(RunnerError::Invalid("no seeds".to_string()));
        }
        let mut loads: Vec<u64> = self.loads_mbps.iter().map(|l| l.to_bits()).collect();
        loads.sort_unstable();
        loads.dedup();
        if loads.len() != self.loads_mbps.len() {
            return Err(RunnerError::Invalid("duplicate load".to_string()));
        }
        let mut schemes = self.schemes.clone();
        schemes.sort_by_key(|s| s.as_str());
        schemes.dedup();
        if schemes.len() != self.schemes.len() {
            return Err(RunnerError::Invalid("duplicate scheme".to_string()));
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return Err(RunnerError::Invalid("duplicate seed".to_string()));
        }
        Ok(())
    }

    /// The full grid in a fixed order: load-major, then scheme, then seed.
    pub fn tuples(&self) -> Vec<(f64, Scheme, u64)> {
        let mut out = Vec::new();
        for &load in &self.loads_mbps {
            for &scheme in &self.schemes {
                for &seed in &self.seeds {
                    out.push((load, scheme, seed));
                }
            }
        }
        out
    }

    /// Configuration for one grid point: the base with the axis values
    /// substituted in.
    pub fn tuple_config(&self, load: f64, scheme: Scheme, seed: u64) -> SimConfig {
        let mut cfg = self.base.clone();
        cfg.traffic.offered_load_mbps = load;
        cfg.run.scheme = scheme;
        cfg.run.seed = seed;
        cfg
    }
}

/// File name for one tuple's KPI store inside the campaign directory.
pub fn tuple_file_name(scheme: Scheme, load_mbps: f64, seed: u64) -> String {
    format!("{scheme}_{load_mbps}_{seed}.json")
}

/// One line of the per-run result table: a single (scheme, load, seed,
/// direction) cell, straight from that tuple's KPI summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scheme: Scheme,
    pub load_mbps: f64,
    pub seed: u64,
    pub direction: Direction,
    /// Latency at the configured outage percentile; None when the quantile
    /// falls in the HARQ-failure mass.
    pub outage_ms: Option<f64>,
    /// The sample count was too small to resolve the percentile.
    pub insufficient: bool,
    /// UL rows only: 10th-percentile carrier-to-interference ratio.
    pub cir_p10_db: Option<f64>,
    pub tput_p10_bits_per_ms: Option<f64>,
    pub mu_median: Option<f64>,
    pub overhead_bits: u64,
}

impl ResultRow {
    pub const CSV_HEADER: &'static str = "scheme,load_mbps,seed,direction,outage_ms,\
insufficient,cir_p10_db,tput_p10_bits_per_ms,mu_median,overhead_bits";

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.scheme,
            self.load_mbps,
            self.seed,
            self.direction.as_str(),
            opt(self.outage_ms),
            self.insufficient,
            opt(self.cir_p10_db),
            opt(self.tput_p10_bits_per_ms),
            opt(self.mu_median),
            self.overhead_bits,
        )
    }
}

/// A tuple that did not produce a KPI file, with the reason.
#[derive(Debug, Clone)]
pub struct TupleFailure {
    pub scheme: Scheme,
    pub load_mbps: f64,
    pub seed: u64,
    pub error: String,
}

/// Everything a campaign run produces besides the per-tuple files.
#[derive(Debug, Clone)]
pub struct CampaignReport {
    /// One row per (tuple, direction), in grid order.
    pub rows: Vec<ResultRow>,
    pub failures: Vec<TupleFailure>,
    /// Per-tuple KPI files written or reused, in grid order.
    pub files: Vec<PathBuf>,
    /// Human-readable comparison: loads down, schemes by direction across,
    /// pooled over seeds, with the relative gap against the channel-feedback
    /// baseline (or the first scheme when that baseline is absent).
    pub summary_text: String,
    /// Any direction of any tuple had too few samples for the requested
    /// outage percentile.
    pub insufficient_any: bool,
}

/// Run the whole grid, write one KPI file per tuple plus `rows.csv` and
/// `summary.txt`, and return the aggregated report. Tuples already on disk
/// with a matching configuration hash are reused, not rerun.
pub fn run_campaign(campaign: &Campaign) -> Result<CampaignReport, RunnerError> {
    campaign.validate()?;
    fs::create_dir_all(&campaign.out_dir).map_err(|e| io_err(&campaign.out_dir, e))?;

    let tuples = campaign.tuples();
    let n = tuples.len();
    let slots: Vec<Mutex<Option<Result<(PathBuf, KpiStore), String>>>> =
        (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = campaign.workers.clamp(1, n);

    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let (load, scheme, seed) = tuples[i];
                let outcome = run_tuple(campaign, load, scheme, seed);
                *slots[i].lock().expect("worker poisoned a result slot") = Some(outcome);
            });
        }
    });

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut files = Vec::new();
    let mut stores: Vec<((f64, Scheme, u64), KpiStore)> = Vec::new();
    for (i, slot) in slots.into_iter().enumerate() {
        let (load, scheme, seed) = tuples[i];
        let outcome = slot
            .into_inner()
            .expect("worker poisoned a result slot")
            .expect("work queue drained before every slot was filled");
        match outcome {
            Ok((path, kpi)) => {
                files.push(path);
                rows.extend(tuple_rows(load, scheme, seed, &kpi));
                stores.push(((load, scheme, seed), kpi));
            }
            Err(error) => failures.push(TupleFailure {
                scheme,
                load_mbps: load,
                seed,
                error,
            }),
        }
    }

    let insufficient_any = rows.iter().any(|r| r.insufficient);
    let summary_text = comparison_table(campaign, &stores);

    let mut csv = String::from(ResultRow::CSV_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.to_csv());
        csv.push('\n');
    }
    let csv_path = campaign.out_dir.join("rows.csv");
    write_atomic(&csv_path, &csv)?;
    let summary_path = campaign.out_dir.join("summary.txt");
    write_atomic(&summary_path, &summary_text)?;

    Ok(CampaignReport {
        rows,
        failures,
        files,
        summary_text,
        insufficient_any,
    })
}

/// Run or reuse one grid point. The returned error string is per-tuple and
/// never aborts the campaign.
fn run_tuple(
    campaign: &Campaign,
    load: f64,
    scheme: Scheme,
    seed: u64,
) -> Result<(PathBuf, KpiStore), String> {
    let cfg = campaign.tuple_config(load, scheme, seed);
    cfg.validate().map_err(|e| e.to_string())?;
    let path = campaign.out_dir.join(tuple_file_name(scheme, load, seed));
    if let Ok(existing) = KpiStore::load(&path) {
        if existing.config_hash == cfg.config_hash() {
            return Ok((path, existing));
        }
    }
    let kpi = sim::run(&cfg).map_err(|e| e.to_string())?;
    write_atomic(&path, &kpi.to_json()).map_err(|e| e.to_string())?;
    Ok((path, kpi))
}

/// The two direction rows for one finished tuple.
fn tuple_rows(load: f64, scheme: Scheme, seed: u64, kpi: &KpiStore) -> Vec<ResultRow> {
    let s = &kpi.summary;
    [Direction::Dl, Direction::Ul]
        .into_iter()
        .map(|direction| {
            let (outage, tput, cir) = match direction {
                Direction::Dl => (&s.dl_outage, s.dl_tput_p10_bits_per_ms, None),
                Direction::Ul => (&s.ul_outage, s.ul_tput_p10_bits_per_ms, s.ul_cir_p10_db),
            };
            ResultRow {
                scheme,
                load_mbps: load,
                seed,
                direction,
                outage_ms: outage.value_ms,
                insufficient: outage.insufficient,
                cir_p10_db: cir,
                tput_p10_bits_per_ms: tput,
                mu_median: s.median_mu,
                overhead_bits: kpi.overhead_bits,
            }
        })
        .collect()
}

/// Latency samples of one (load, scheme) cell pooled over seeds.
struct PooledCell {
    completed: Vec<f64>,
    failed: usize,
}

/// Outage latency per (load, scheme, direction), pooled over seeds, plus the
/// symmetric percentage gap against the first scheme of the campaign. Every
/// number is a pure function of the per-tuple stores.
fn comparison_table(campaign: &Campaign, stores: &[((f64, Scheme, u64), KpiStore)]) -> String {
    let p = campaign.base.run.outage_percentile;
    let reference = campaign
        .schemes
        .iter()
        .copied()
        .find(|s| *s == Scheme::CfTdd)
        .unwrap_or(campaign.schemes[0]);
    let mut text = format!(
        "Outage latency [ms] at p = {p}, pooled over {} seed(s).\n\
         Relative gaps are symmetric percent against {reference}.\n",
        campaign.seeds.len()
    );
    for direction in [Direction::Ul, Direction::Dl] {
        let mut pooled: BTreeMap<(u64, &str), PooledCell> = BTreeMap::new();
        for ((load, scheme, _), kpi) in stores {
            let cell = pooled
                .entry((load.to_bits(), scheme.as_str()))
                .or_insert_with(|| PooledCell {
                    completed: Vec::new(),
                    failed: 0,
                });
            let (completed, failed) = kpi.latency_samples(direction);
            cell.completed.extend_from_slice(completed);
            cell.failed += failed;
        }

        text.push_str(&format!("\n[{}]\n", direction.as_str()));
        let mut header = format!("{:>10}", "load_mbps");
        for scheme in &campaign.schemes {
            header.push_str(&format!(" | {:>18}", scheme.as_str()));
        }
        text.push_str(&header);
        text.push('\n');

        for &load in &campaign.loads_mbps {
            let mut line = format!("{load:>10}");
            let reference_value = pooled
                .get(&(load.to_bits(), reference.as_str()))
                .and_then(|c| outage_latency(&c.completed, c.failed, p).value_ms);
            for scheme in &campaign.schemes {
                let cell = pooled.get(&(load.to_bits(), scheme.as_str()));
                let entry = match cell {
                    None => "absent".to_string(),
                    Some(c) => {
                        let est = outage_latency(&c.completed, c.failed, p);
                        let mark = if est.insufficient { "!" } else { "" };
                        match est.value_ms {
                            None => format!("fail{mark}"),
                            Some(v) => {
                                let gap = reference_value
                                    .filter(|_| *scheme != reference)
                                    .map(|r| format!(" ({:+.1}%)", symmetric_percent(v, r)))
                                    .unwrap_or_default();
                                format!("{v:.3}{gap}{mark}")
                            }
                        }
                    }
                };
                line.push_str(&format!(" | {entry:>18}"));
            }
            text.push_str(&line);
            text.push('\n');
        }
    }
    text
}

/// Which stored distribution a plot-data table is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Complementary CDF of packet latency, per direction, with the
    /// HARQ-failure mass kept as the floor of the tail.
    LatencyCcdf,
    /// ECDF of the per-slot UL traffic-proportion estimate.
    MuEcdf,
    /// ECDF of per-transport-block UL carrier-to-interference samples.
    CirEcdf,
    /// ECDF of per-packet throughput, per direction.
    TputEcdf,
}

impl PlotKind {
    pub const ALL: [PlotKind; 4] = [
        PlotKind::LatencyCcdf,
        PlotKind::MuEcdf,
        PlotKind::CirEcdf,
        PlotKind::TputEcdf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PlotKind::LatencyCcdf => "latency_ccdf",
            PlotKind::MuEcdf => "mu_ecdf",
            PlotKind::CirEcdf => "cir_ecdf",
            PlotKind::TputEcdf => "tput_ecdf",
        }
    }

    /// Kinds that produce one table per direction.
    fn per_direction(self) -> bool {
        matches!(self, PlotKind::LatencyCcdf | PlotKind::TputEcdf)
    }
}

impl fmt::Display for PlotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlotKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "latency_ccdf" => Ok(PlotKind::LatencyCcdf),
            "mu_ecdf" => Ok(PlotKind::MuEcdf),
            "cir_ecdf" => Ok(PlotKind::CirEcdf),
            "tput_ecdf" => Ok(PlotKind::TputEcdf),
            other => Err(format!("unknown plot kind: {other}")),
        }
    }
}

/// Extract two-column (value, probability) tables from stored KPI files,
/// one output file per scheme (and per direction where the distribution is
/// directional), pooling samples of the same scheme across input files.
/// Returns the written paths.
pub fn emit_plotdata(
    kpi_files: &[PathBuf],
    kind: PlotKind,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, RunnerError> {
    if kpi_files.is_empty() {
        return Err(RunnerError::MissingInput("no KPI files given".to_string()));
    }
    let mut stores = Vec::new();
    for path in kpi_files {
        let kpi = KpiStore::load(path).map_err(|_| {
            RunnerError::MissingInput(format!("unreadable KPI file: {}", path.display()))
        })?;
        stores.push(kpi);
    }
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;

    let mut schemes: Vec<Scheme> = stores.iter().map(|k| k.scheme).collect();
    schemes.sort_by_key(|s| s.as_str());
    schemes.dedup();

    let mut written = Vec::new();
    for scheme in schemes {
        let group: Vec<&KpiStore> = stores.iter().filter(|k| k.scheme == scheme).collect();
        if kind.per_direction() {
            for direction in [Direction::Dl, Direction::Ul] {
                let table = match kind {
                    PlotKind::LatencyCcdf => {
                        let mut completed = Vec::new();
                        let mut failed = 0usize;
                        for kpi in &group {
                            let (c, f) = kpi.latency_samples(direction);
                            completed.extend_from_slice(c);
                            failed += f;
                        }
                        censored_ccdf(&completed, failed)
                    }
                    PlotKind::TputEcdf => {
                        let samples: Vec<f64> = group
                            .iter()
                            .flat_map(|kpi| match direction {
                                Direction::Dl => kpi.dl_tput_bits_per_ms.iter(),
                                Direction::Ul => kpi.ul_tput_bits_per_ms.iter(),
                            })
                            .copied()
                            .collect();
                        ecdf(&samples)
                    }
                    _ => unreachable!("direction-free kinds handled below"),
                };
                let name = format!("{kind}_{scheme}_{}.csv", direction.as_str());
                written.push(write_table(&out_dir.join(name), &table)?);
            }
        } else {
            let samples: Vec<f64> = group
                .iter()
                .flat_map(|kpi| match kind {
                    PlotKind::MuEcdf => kpi.mu.iter(),
                    PlotKind::CirEcdf => kpi.ul_cir_db.iter(),
                    _ => unreachable!("directional kinds handled above"),
                })
                .copied()
                .collect();
            let name = format!("{kind}_{scheme}.csv");
            written.push(write_table(&out_dir.join(name), &ecdf(&samples))?);
        }
    }
    Ok(written)
}

/// CCDF over completed latencies with the failed packets kept at rank
/// +infinity: the curve floors at failed/total instead of zero, so the
/// plotted tail stays honest about undelivered traffic.
fn censored_ccdf(completed: &[f64], failed: usize) -> Vec<(f64, f64)> {
    let total = completed.len() + failed;
    if total == 0 {
        return Vec::new();
    }
    let scale = completed.len() as f64 / total as f64;
    let floor = failed as f64 / total as f64;
    ecdf(completed)
        .into_iter()
        .map(|(v, f)| (v, (1.0 - f) * scale + floor))
        .collect()
}

fn write_table(path: &Path, table: &[(f64, f64)]) -> Result<PathBuf, RunnerError> {
    let mut text = String::from("value,probability\n");
    for (v, p) in table {
        text.push_str(&format!("{v},{p}\n"));
    }
    write_atomic(path, &text)?;
    Ok(path.to_path_buf())
}

/// Write via a sibling temp file and rename, so readers never observe a
/// partial file and reruns replace outputs in one step.
fn write_atomic(path: &Path, contents: &str) -> Result<(), RunnerError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests;
