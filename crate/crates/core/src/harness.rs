//! Multi-seed sweeps, trace persistence and result tables.
//!
//! Each (template, seed) pair produces one JSON-lines trace: a `header`
//! line with the full run configuration, one `generation` line per
//! recorded generation and a closing `done` line. Traces are written to
//! `<id>.jsonl.partial` and renamed once complete, so a directory can be
//! resumed after an interruption by simply running the sweep again.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{run_with, Algorithm, GeneticParams, GenerationRecord, MetricSelection, RunConfig};
use crate::error::{Error, Result};
use crate::metrics::{median, recovery_savings, wilcoxon_ranksum};

/// A sweep: every template is run once per seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output_dir: PathBuf,
    pub seeds: Vec<u64>,
    /// Overrides each template's indicator selection when set.
    #[serde(default)]
    pub metrics: Option<MetricSelection>,
    /// Store the population every `snapshot_every` generations (0 = never).
    /// The final population is stored whenever this is non-zero.
    #[serde(default)]
    pub snapshot_every: usize,
    /// Concurrent runs; 0 picks the number of CPUs.
    #[serde(default)]
    pub workers: usize,
    #[serde(rename = "template")]
    pub templates: Vec<RunConfig>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Base and IR2 variants of NSGA-II on ZDT1, ZDT2 and ZDT6, observed at
    /// generation 100.
    pub fn zdt_preset(output_dir: impl Into<PathBuf>) -> Self {
        let runs = ["ZDT1", "ZDT2", "ZDT6"].map(|p| (p, 2, Algorithm::Nsga2));
        Self::preset(output_dir, &runs, 100)
    }

    /// NSGA-III on WFG4-3 and WFG6-3 and MOEA/D on WFG7-3, observed at
    /// generation 40.
    pub fn wfg_preset(output_dir: impl Into<PathBuf>) -> Self {
        let runs = [("WFG4", 3, Algorithm::Nsga3), ("WFG6", 3, Algorithm::Nsga3), ("WFG7", 3, Algorithm::Moead)];
        Self::preset(output_dir, &runs, 40)
    }

    fn preset(output_dir: impl Into<PathBuf>, runs: &[(&str, usize, Algorithm)], generations: usize) -> Self {
        let templates = runs
            .iter()
            .flat_map(|&(problem, n_obj, algorithm)| {
                [false, true].map(|ir2| RunConfig {
                    problem: problem.to_string(),
                    n_obj,
                    algorithm,
                    ir2,
                    generations,
                    genetic: GeneticParams::default(),
                    ..Default::default()
                })
            })
            .collect();
        Self {
            output_dir: output_dir.into(),
            seeds: (1..=DEFAULT_SEEDS).collect(),
            metrics: None,
            snapshot_every: 0,
            workers: 0,
            templates,
        }
    }

    /// Checks seeds, template validity and trace-name uniqueness.
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("seed list is empty"));
        }
        let mut seen = BTreeSet::new();
        if let Some(s) = self.seeds.iter().find(|s| !seen.insert(**s)) {
            return Err(Error::config(format!("seed {s} is listed twice")));
        }
        if self.templates.is_empty() {
            return Err(Error::config("no run templates"));
        }
        let mut ids = BTreeSet::new();
        for t in &self.templates {
            let t = self.instantiate(t, self.seeds[0]);
            t.resolve()?;
            let id = template_id(&t);
            if !ids.insert(id.clone()) {
                return Err(Error::config(format!("two templates share the id '{id}'")));
            }
        }
        Ok(())
    }

    fn instantiate(&self, template: &RunConfig, seed: u64) -> RunConfig {
        let mut c = template.clone();
        c.seed = seed;
        if let Some(m) = self.metrics {
            c.metrics = m;
        }
        c
    }

    /// Every (config, trace path) pair of the sweep, in template-major order.
    pub fn jobs(&self) -> Vec<(RunConfig, PathBuf)> {
        self.templates
            .iter()
            .flat_map(|t| self.seeds.iter().map(move |&s| self.instantiate(t, s)))
            .map(|c| {
                let path = self.output_dir.join(format!("{}.jsonl", trace_id(&c)));
                (c, path)
            })
            .collect()
    }
}

/// Seeds per configuration in the presets; odd so the median is one run.
pub const DEFAULT_SEEDS: u64 = 11;

/// `zdt1-m2-nsga2-ir2`: problem, objective count and variant.
pub fn template_id(config: &RunConfig) -> String {
    format!("{}-m{}-{}", config.problem.to_ascii_lowercase(), config.n_obj, config.variant_id())
}

/// Template id plus `-s<seed>`.
pub fn trace_id(config: &RunConfig) -> String {
    format!("{}-s{}", template_id(config), config.seed)
}

/// Population snapshot: decision and objective vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub x: Vec<Vec<f64>>,
    pub f: Vec<Vec<f64>>,
}

/// One line of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceLine {
    Header {
        id: String,
        config: RunConfig,
    },
    Generation {
        #[serde(flatten)]
        record: GenerationRecord,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        population: Option<Snapshot>,
    },
    Done {
        evaluations: u64,
    },
}

/// A completed trace read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredTrace {
    pub path: PathBuf,
    pub config: RunConfig,
    pub records: Vec<GenerationRecord>,
    pub snapshots: Vec<(usize, Snapshot)>,
    pub evaluations: u64,
}

impl StoredTrace {
    pub fn hv_at(&self, generation: usize) -> Option<f64> {
        self.records.iter().find(|r| r.generation == generation).and_then(|r| r.hv)
    }

    pub fn hv_series(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.hv).collect()
    }
}

/// Parses a trace file; fails unless it is complete.
pub fn read_trace(path: impl AsRef<Path>) -> Result<StoredTrace> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut config = None;
    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    let mut evaluations = None;
    for (no, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: TraceLine = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), no + 1)))?;
        match parsed {
            TraceLine::Header { config: c, .. } => config = Some(c),
            TraceLine::Generation { record, population } => {
                if let Some(p) = population {
                    snapshots.push((record.generation, p));
                }
                records.push(record);
            }
            TraceLine::Done { evaluations: e } => evaluations = Some(e),
        }
    }
    let config = config.ok_or_else(|| Error::Parse(format!("{}: missing header", path.display())))?;
    let evaluations = evaluations.ok_or_else(|| Error::Parse(format!("{}: trace is incomplete", path.display())))?;
    Ok(StoredTrace {
        path: path.to_path_buf(),
        config,
        records,
        snapshots,
        evaluations,
    })
}

/// Completed traces in `dir`, sorted by file name.
pub fn load_traces(dir: impl AsRef<Path>) -> Result<Vec<StoredTrace>> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    paths.sort();
    paths.iter().map(read_trace).collect()
}

/// Runs one configuration, writing its trace to `path`.
pub fn run_to_trace(config: &RunConfig, path: &Path, snapshot_every: usize) -> Result<u64> {
    let partial = path.with_extension("jsonl.partial");
    let file = File::create(&partial).map_err(|e| Error::io(&partial, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>, line: &TraceLine| -> Result<()> {
        let text = serde_json::to_string(line).map_err(|e| Error::Parse(e.to_string()))?;
        writeln!(out, "{text}").and_then(|_| out.flush()).map_err(|e| Error::io(&partial, e))
    };
    let header = TraceLine::Header {
        id: trace_id(config),
        config: config.clone(),
    };
    write(&mut out, &header)?;
    let last = config.generations;
    let trace = run_with(config, |record, pop| {
        let g = record.generation;
        let snap = snapshot_every > 0 && (g % snapshot_every == 0 || g == last);
        let population = snap.then(|| Snapshot {
            x: pop.iter().map(|i| i.x.clone()).collect(),
            f: pop.iter().map(|i| i.objectives().to_vec()).collect(),
        });
        write(
            &mut out,
            &TraceLine::Generation {
                record: record.clone(),
                population,
            },
        )
    })?;
    write(
        &mut out,
        &TraceLine::Done {
            evaluations: trace.evaluations,
        },
    )?;
    drop(out);
    fs::rename(&partial, path).map_err(|e| Error::io(path, e))?;
    Ok(trace.evaluations)
}

/// Outcome of a sweep.
#[derive(Debug, Default)]
pub struct ExperimentSummary {
    pub completed: Vec<PathBuf>,
    /// Traces already present and complete.
    pub skipped: Vec<PathBuf>,
    pub failed: Vec<(PathBuf, Error)>,
    /// Evaluations spent by this invocation.
    pub evaluations: u64,
}

/// Runs every missing (template, seed) trace. Failures are collected per
/// trace; sibling runs continue.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentSummary> {
    config.validate()?;
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let workers = if config.workers == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        config.workers
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config(format!("worker pool: {e}")))?;
    let outcomes: Vec<(PathBuf, Option<Result<u64>>)> = pool.install(|| {
        config
            .jobs()
            .into_par_iter()
            .map(|(run, path)| {
                if read_trace(&path).is_ok() {
                    (path, None)
                } else {
                    let r = run_to_trace(&run, &path, config.snapshot_every);
                    (path, Some(r))
                }
            })
            .collect()
    });
    let mut summary = ExperimentSummary::default();
    for (path, outcome) in outcomes {
        match outcome {
            None => summary.skipped.push(path),
            Some(Ok(evals)) => {
                summary.evaluations += evals;
                summary.completed.push(path);
            }
            Some(Err(e)) => summary.failed.push((path, e)),
        }
    }
    Ok(summary)
}

/// Generation at which a comparison is read off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observation {
    At(usize),
    /// `k` generations after the base median HV first becomes non-zero.
    AfterNonzero(usize),
}

/// One (problem, M, algorithm) comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub problem: String,
    pub n_obj: usize,
    pub base: String,
    pub ir2: String,
    pub generation: usize,
    pub seeds: usize,
    pub base_median_hv: f64,
    pub ir2_median_hv: f64,
    /// Two-sided rank-sum p-value across seeds.
    pub p_value: f64,
    /// First generation at which the base median series reaches the IR2
    /// median, if it does within the recorded generations.
    pub recovery_generation: Option<usize>,
    pub savings_percent: f64,
    pub savings_label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

const CSV_HEADER: &str =
    "problem,n_obj,base,ir2,generation,seeds,base_median_hv,ir2_median_hv,p_value,recovery_generation,savings_percent,savings_label";

impl ResultTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let rec = r.recovery_generation.map(|g| g.to_string()).unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},\"{}\"\n",
                r.problem,
                r.n_obj,
                r.base,
                r.ir2,
                r.generation,
                r.seeds,
                r.base_median_hv,
                r.ir2_median_hv,
                r.p_value,
                rec,
                r.savings_percent,
                r.savings_label
            ));
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result table serializes")
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>, stem: &str) -> Result<(PathBuf, PathBuf)> {
        let dir = dir.as_ref();
        let csv = dir.join(format!("{stem}.csv"));
        let json = dir.join(format!("{stem}.json"));
        fs::write(&csv, self.to_csv()).map_err(|e| Error::io(&csv, e))?;
        fs::write(&json, self.to_json() + "\n").map_err(|e| Error::io(&json, e))?;
        Ok((csv, json))
    }
}

/// Per-generation median over traces, truncated to the shortest series.
pub fn median_series(traces: &[&StoredTrace]) -> Vec<f64> {
    let series: Vec<Vec<f64>> = traces.iter().map(|t| t.hv_series()).collect();
    let len = series.iter().map(Vec::len).min().unwrap_or(0);
    (0..len)
        .map(|g| median(&series.iter().map(|s| s[g]).collect::<Vec<_>>()).expect("non-empty"))
        .collect()
}

/// Compares variant `base_id` against `ir2_id` (variant ids such as
/// `nsga2` and `nsga2-ir2`) for every (problem, M) where both ran.
pub fn aggregate_and_report(
    traces: &[StoredTrace],
    observe: Observation,
    base_id: &str,
    ir2_id: &str,
) -> Result<ResultTable> {
    type Key = (String, usize);
    let mut groups: BTreeMap<Key, (Vec<&StoredTrace>, Vec<&StoredTrace>)> = BTreeMap::new();
    for t in traces {
        let key = (t.config.problem.clone(), t.config.n_obj);
        let v = t.config.variant_id();
        if v == base_id {
            groups.entry(key).or_default().0.push(t);
        } else if v == ir2_id {
            groups.entry(key).or_default().1.push(t);
        }
    }
    let mut rows = Vec::new();
    for ((problem, n_obj), (mut base, mut ir2)) in groups {
        if base.is_empty() || ir2.is_empty() {
            continue;
        }
        base.sort_by_key(|t| t.config.seed);
        ir2.sort_by_key(|t| t.config.seed);
        let seeds = |v: &[&StoredTrace]| v.iter().map(|t| t.config.seed).collect::<Vec<_>>();
        let (sb, si) = (seeds(&base), seeds(&ir2));
        if sb != si {
            let only_base: Vec<_> = sb.iter().filter(|s| !si.contains(s)).collect();
            let only_ir2: Vec<_> = si.iter().filter(|s| !sb.contains(s)).collect();
            return Err(Error::Aggregation(format!(
                "{problem} (M = {n_obj}): seed sets differ; only {base_id}: {only_base:?}, only {ir2_id}: {only_ir2:?}"
            )));
        }
        let base_series = median_series(&base);
        let generation = match observe {
            Observation::At(t) => t,
            Observation::AfterNonzero(k) => match base_series.iter().position(|&h| h > 0.0) {
                Some(g) => g + k,
                None => {
                    return Err(Error::Aggregation(format!(
                        "{problem} (M = {n_obj}): base median HV never becomes non-zero"
                    )))
                }
            },
        };
        let at = |v: &[&StoredTrace]| -> Result<Vec<f64>> {
            v.iter()
                .map(|t| {
                    t.hv_at(generation).ok_or_else(|| {
                        Error::Aggregation(format!("{}: no HV recorded at generation {generation}", t.path.display()))
                    })
                })
                .collect()
        };
        let (hb, hi) = (at(&base)?, at(&ir2)?);
        let ir2_median = median(&hi).expect("non-empty");
        let recovery = recovery_savings(&base_series, ir2_median, generation.max(1))?;
        rows.push(ResultRow {
            problem,
            n_obj,
            base: base_id.to_string(),
            ir2: ir2_id.to_string(),
            generation,
            seeds: sb.len(),
            base_median_hv: median(&hb).expect("non-empty"),
            ir2_median_hv: ir2_median,
            p_value: wilcoxon_ranksum(&hi, &hb),
            recovery_generation: recovery.generation,
            savings_percent: recovery.savings_percent,
            savings_label: recovery.savings_label(),
        });
    }
    Ok(ResultTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(problem: &str, ir2: bool, seed: u64, hv: &[f64]) -> StoredTrace {
        let config = RunConfig {
            problem: problem.into(),
            n_obj: 2,
            ir2,
            seed,
            ..Default::default()
        };
        let records = hv
            .iter()
            .enumerate()
            .map(|(g, &h)| GenerationRecord {
                generation: g,
                evaluations: 100 * (g as u64 + 1),
                hv: Some(h),
                gd: None,
                igd: None,
                learning: false,
                training_rows: None,
            })
            .collect();
        StoredTrace {
            path: PathBuf::from(format!("{problem}-{ir2}-{seed}.jsonl")),
            config,
            records,
            snapshots: Vec::new(),
            evaluations: 100 * hv.len() as u64,
        }
    }

    #[test]
    fn median_of_three() {
        let t: Vec<_> = [0.1, 0.3, 0.2].iter().enumerate().map(|(s, &h)| trace("ZDT1", false, s as u64, &[h])).collect();
        let refs: Vec<_> = t.iter().collect();
        assert_eq!(median_series(&refs), vec![0.2]);
    }

    #[test]
    fn identical_variants_give_no_difference() {
        let mut traces = Vec::new();
        for s in 0..5 {
            let hv: Vec<f64> = (0..6).map(|g| (g as f64 + s as f64) / 20.0).collect();
            traces.push(trace("ZDT1", false, s, &hv));
            traces.push(trace("ZDT1", true, s, &hv));
        }
        let table = aggregate_and_report(&traces, Observation::At(3), "nsga2", "nsga2-ir2").unwrap();
        let row = &table.rows[0];
        assert!(row.p_value >= 0.9);
        assert_eq!(row.recovery_generation, Some(3));
        assert_eq!(row.savings_percent, 0.0);
        assert_eq!(row.base_median_hv, row.ir2_median_hv);
    }

    #[test]
    fn mismatched_seeds_name_the_problem() {
        let traces = vec![trace("ZDT2", false, 1, &[0.1]), trace("ZDT2", true, 2, &[0.1])];
        let err = aggregate_and_report(&traces, Observation::At(0), "nsga2", "nsga2-ir2").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("ZDT2") && msg.contains("[1]") && msg.contains("[2]"), "{msg}");
    }

    #[test]
    fn observation_after_first_nonzero() {
        let mut traces = Vec::new();
        for s in 0..3 {
            traces.push(trace("DTLZ1", false, s, &[0.0, 0.0, 0.1, 0.2, 0.3, 0.4]));
            traces.push(trace("DTLZ1", true, s, &[0.0, 0.1, 0.2, 0.3, 0.4, 0.5]));
        }
        let table = aggregate_and_report(&traces, Observation::AfterNonzero(2), "nsga2", "nsga2-ir2").unwrap();
        assert_eq!(table.rows[0].generation, 4);
        assert_eq!(table.rows[0].recovery_generation, Some(5));
        assert_eq!(table.rows[0].savings_percent, 25.0);
    }

    #[test]
    fn config_validation() {
        let mut c = ExperimentConfig::zdt_preset("/tmp/unused");
        assert!(c.validate().is_ok());
        assert_eq!(c.templates.len(), 6);
        c.seeds.push(1);
        assert!(c.validate().is_err());
        c.seeds.clear();
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::wfg_preset("/tmp/unused");
        c.templates.push(c.templates[0].clone());
        assert!(c.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let c = ExperimentConfig::wfg_preset("out");
        let text = c.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), c);
        let minimal = "output_dir = \"o\"\nseeds = [3]\n[[template]]\nproblem = \"ZDT1\"\nn_obj = 2\n";
        let m = ExperimentConfig::from_toml_str(minimal).unwrap();
        assert_eq!(m.templates[0].algorithm, Algorithm::Nsga2);
        assert_eq!(m.jobs()[0].1, PathBuf::from("o/zdt1-m2-nsga2-s3.jsonl"));
    }
}
