use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{run_scenario, Campaign, Detector, MetricsReport, Scenario};
use crate::error::{Error, Result};
use crate::mimo::DetectionInstance;

pub const RECORDS_FILE: &str = "records.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";
pub const LATENCY_FILE: &str = "latency.json";
pub const CSV_FILE: &str = "report.csv";

pub fn write_instances(path: &Path, instances: &[DetectionInstance]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for inst in instances {
        serde_json::to_writer(&mut w, inst)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_instances(path: &Path) -> Result<Vec<DetectionInstance>> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Writes `records.jsonl`, `summary.json` and `latency.json` into `dir`.
///
/// Only `latency.json` depends on wall-clock time.
pub fn write_campaign(dir: &Path, campaign: &Campaign) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(fs::File::create(dir.join(RECORDS_FILE))?);
    for r in &campaign.records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    write_json(&dir.join(SUMMARY_FILE), &campaign.report)?;
    write_json(&dir.join(LATENCY_FILE), &campaign.latency)
}

/// Reads a `summary.json` holding either one report or an array of them.
pub fn read_summary(path: &Path) -> Result<Vec<MetricsReport>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Wire {
        One(Box<MetricsReport>),
        Many(Vec<MetricsReport>),
    }
    let text = fs::read_to_string(path)?;
    Ok(match serde_json::from_str(&text)? {
        Wire::One(r) => vec![*r],
        Wire::Many(v) => v,
    })
}

/// Plot-ready CSV: one row per report and BER curve point.
pub fn report_csv(reports: &[MetricsReport]) -> String {
    let mut out = String::from("scenario,detector,n_pe,ber,p_ml,ci_lo,ci_hi\n");
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in reports {
        for point in &r.ber_curve {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                csv_field(&r.scenario),
                r.detector,
                point.n_pe,
                point.ber,
                opt(r.p_ml.map(|p| p.p)),
                opt(r.p_ml.map(|p| p.ci_lo)),
                opt(r.p_ml.map(|p| p.ci_hi)),
            );
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Axes swept by `bench`; an empty axis keeps the base scenario's value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub detectors: Vec<Detector>,
    pub n_users: Vec<usize>,
    pub n_rx: Vec<usize>,
    pub snr_db: Vec<f64>,
    pub n_runs: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub base: Scenario,
    pub grid: Grid,
}

fn axis<T: Clone>(values: &[T], base: T) -> Vec<T> {
    if values.is_empty() {
        vec![base]
    } else {
        values.to_vec()
    }
}

fn snr_label(snr_db: f64) -> String {
    if snr_db.is_finite() {
        format!("{snr_db}dB")
    } else {
        "noisefree".into()
    }
}

impl BenchConfig {
    /// Cartesian product of the grid, in a fixed order.
    pub fn scenarios(&self) -> Vec<Scenario> {
        let b = &self.base;
        let mut out = Vec::new();
        for &detector in &axis(&self.grid.detectors, b.detector) {
            for &n_users in &axis(&self.grid.n_users, b.n_users) {
                for &n_rx in &axis(&self.grid.n_rx, b.n_rx) {
                    for &snr_db in &axis(&self.grid.snr_db, b.snr_db) {
                        for &n_runs in &axis(&self.grid.n_runs, b.n_runs) {
                            let id = format!(
                                "{}-{detector}-{n_users}x{n_rx}-{}-{}-r{n_runs}",
                                b.id,
                                b.constellation,
                                snr_label(snr_db)
                            );
                            out.push(Scenario {
                                id,
                                detector,
                                n_users,
                                n_rx,
                                snr_db,
                                n_runs,
                                ..b.clone()
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

/// Runs every grid scenario, writing one sub-directory each plus a combined
/// `summary.json` and `report.csv` in `dir`.
pub fn run_bench(config: &BenchConfig, dir: &Path) -> Result<Vec<MetricsReport>> {
    let scenarios = config.scenarios();
    for s in &scenarios {
        s.validate()?;
    }
    let mut ids: Vec<&str> = scenarios.iter().map(|s| s.id.as_str()).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument(
            "bench grid produces duplicate scenario ids".into(),
        ));
    }
    fs::create_dir_all(dir)?;
    let mut reports = Vec::with_capacity(scenarios.len());
    for s in &scenarios {
        let campaign = run_scenario(s)?;
        write_campaign(&dir.join(&s.id), &campaign)?;
        reports.push(campaign.report);
    }
    write_json(&dir.join(SUMMARY_FILE), &reports)?;
    fs::write(dir.join(CSV_FILE), report_csv(&reports))?;
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mimo::Constellation;

    fn config() -> BenchConfig {
        BenchConfig {
            base: Scenario {
                id: "g".into(),
                n_users: 2,
                n_rx: 3,
                constellation: Constellation::Qpsk,
                n_instances: 4,
                n_runs: 8,
                seed: 3,
                ..Default::default()
            },
            grid: Grid {
                detectors: vec![Detector::Paramax, Detector::Zf],
                snr_db: vec![5.0, 15.0],
                ..Default::default()
            },
        }
    }

    #[test]
    fn grid_expansion() {
        let s = config().scenarios();
        assert_eq!(s.len(), 4);
        assert_eq!(s[0].id, "g-paramax-2x3-qpsk-5dB-r8");
        assert_eq!(s[3].detector, Detector::Zf);
        assert_eq!(s[3].snr_db, 15.0);
    }

    #[test]
    fn bench_outputs_byte_identical() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run_bench(&config(), a.path()).unwrap();
        run_bench(&config(), b.path()).unwrap();
        for name in [SUMMARY_FILE, CSV_FILE] {
            assert_eq!(
                fs::read(a.path().join(name)).unwrap(),
                fs::read(b.path().join(name)).unwrap()
            );
        }
        for s in config().scenarios() {
            for name in [SUMMARY_FILE, RECORDS_FILE] {
                let pa = a.path().join(&s.id).join(name);
                assert_eq!(
                    fs::read(&pa).unwrap(),
                    fs::read(b.path().join(&s.id).join(name)).unwrap()
                );
            }
        }
        let back = read_summary(&a.path().join(SUMMARY_FILE)).unwrap();
        assert_eq!(back.len(), 4);
        let csv = report_csv(&back);
        assert_eq!(
            csv.lines().next().unwrap(),
            "scenario,detector,n_pe,ber,p_ml,ci_lo,ci_hi"
        );
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn instances_jsonl_round_trip() {
        let s = Scenario {
            n_users: 2,
            n_rx: 2,
            n_instances: 3,
            ..Default::default()
        };
        let inst = super::super::scenario_instances(&s).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("i.jsonl");
        write_instances(&path, &inst).unwrap();
        assert_eq!(read_instances(&path).unwrap(), inst);
    }

    #[test]
    fn csv_quotes_awkward_ids() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("plain"), "plain");
    }
}
