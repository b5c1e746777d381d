//! Batch runs: extraction, full and alternate solves, best-of-two.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::{build_model, read_route_dir, select_hierarchy, ExtractConfig, Hierarchy, TrainingRoute, Variant};
use crate::instance::{Cost, RoutingInstance};
use crate::penalty::{ConstraintSet, PenaltyBreakdown, PenaltyModel};
use crate::search::{solve, SearchConfig, Solution};
use crate::tour::write_tour;
use crate::tsplib::parse_instance;

pub const DEFAULT_MERGE_FACTOR: f64 = 1.01;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergePolicy {
    pub merge_factor: f64,
}

impl Default for MergePolicy {
    fn default() -> Self {
        MergePolicy {
            merge_factor: DEFAULT_MERGE_FACTOR,
        }
    }
}

impl MergePolicy {
    pub fn new(merge_factor: f64) -> Result<MergePolicy> {
        if !(merge_factor >= 1.0 && merge_factor.is_finite()) {
            return Err(Error::InvalidArgument(format!("merge factor {merge_factor} must be at least 1")));
        }
        Ok(MergePolicy { merge_factor })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Choice {
    Full,
    Alternate,
}

/// The full tour wins iff `t_f ≤ merge_factor · t_a`. Both lengths are
/// travel times under the original matrix.
pub fn best_of_two(t_f: Cost, t_a: Cost, policy: MergePolicy) -> Choice {
    if t_f as f64 <= policy.merge_factor * t_a as f64 {
        Choice::Full
    } else {
        Choice::Alternate
    }
}

fn default_seed() -> u64 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchJob {
    /// Defaults to the instance file stem.
    #[serde(default)]
    pub name: Option<String>,
    pub instance: PathBuf,
    /// Directory of training routes; overrides the batch-wide one.
    #[serde(default)]
    pub training: Option<PathBuf>,
    pub full_seconds: f64,
    pub alternate_seconds: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Fixed run count; with it the result no longer depends on timing.
    #[serde(default)]
    pub runs: Option<usize>,
    pub output: PathBuf,
}

impl BatchJob {
    pub fn name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            self.instance
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default()
        })
    }

    fn validate(&self) -> Result<()> {
        for (what, v) in [("full_seconds", self.full_seconds), ("alternate_seconds", self.alternate_seconds)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{what} must be positive")));
            }
        }
        Ok(())
    }
}

/// A jobs file. Relative paths are taken relative to the file.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct JobsFile {
    #[serde(default)]
    pub training: Option<PathBuf>,
    pub jobs: Vec<BatchJob>,
}

pub fn read_jobs(path: &Path) -> Result<Vec<BatchJob>> {
    let file: JobsFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let rel = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    Ok(file
        .jobs
        .into_iter()
        .map(|mut j| {
            j.instance = rel(&j.instance);
            j.output = rel(&j.output);
            j.training = j.training.as_deref().or(file.training.as_deref()).map(rel);
            j
        })
        .collect())
}

#[derive(Clone, Debug)]
pub struct BatchConfig {
    pub workers: usize,
    pub policy: MergePolicy,
    /// Template for both solves; time limit, seed and runs come from the job.
    pub search: SearchConfig,
    pub transitive: bool,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            workers: 1,
            policy: MergePolicy::default(),
            search: SearchConfig::default(),
            transitive: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelResult {
    pub length: Cost,
    pub penalty: PenaltyBreakdown,
    pub constraints: usize,
    pub satisfied: usize,
    pub runs: usize,
    pub reference: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobReport {
    pub name: String,
    pub instance: PathBuf,
    pub output: PathBuf,
    pub ok: bool,
    pub error: Option<String>,
    pub n: usize,
    pub selected: Option<Choice>,
    /// The selected tour.
    pub length: Cost,
    pub penalty: u64,
    pub constraints: usize,
    pub satisfied: usize,
    pub full: Option<ModelResult>,
    pub alternate: Option<ModelResult>,
    pub warnings: Vec<String>,
    /// Solve time; parsing and extraction are excluded.
    pub solve_ms: u128,
    pub wall_ms: u128,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub jobs: usize,
    pub ok: usize,
    pub failed: usize,
    pub length: i128,
    pub penalty: u64,
    pub solve_ms: u128,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub workers: usize,
    pub merge_factor: f64,
    pub jobs: Vec<JobReport>,
    pub totals: Totals,
    pub wall_ms: u128,
}

impl BatchReport {
    pub fn totals_of(jobs: &[JobReport]) -> Totals {
        let mut t = Totals {
            jobs: jobs.len(),
            ..Default::default()
        };
        for j in jobs {
            if j.ok {
                t.ok += 1;
                t.length += j.length as i128;
                t.penalty += j.penalty;
            } else {
                t.failed += 1;
            }
            t.solve_ms += j.solve_ms;
        }
        t
    }
}

/// `extra` appended to `base`; the time-window flag and cluster penalty of
/// `base` are kept unless `extra` sets one.
fn merge(base: &ConstraintSet, extra: ConstraintSet) -> ConstraintSet {
    let mut cs = base.clone();
    cs.singles.extend(extra.singles);
    cs.disjunctions.extend(extra.disjunctions);
    cs.groups.extend(extra.groups);
    for t in extra.transforms {
        if !cs.transforms.contains(&t) {
            cs.transforms.push(t);
        }
    }
    cs.cluster_penalty = extra.cluster_penalty.or(cs.cluster_penalty);
    cs.group_cluster_penalty = extra.group_cluster_penalty.or(cs.group_cluster_penalty);
    cs.time_windows |= extra.time_windows;
    cs
}

/// Number of constraints (singles and disjunctions) and how many of them
/// `stops` satisfies.
pub fn satisfied_constraints(instance: &RoutingInstance, cs: &ConstraintSet, stops: &[usize]) -> Result<(usize, usize)> {
    let one = |singles: Vec<_>, disjunctions: Vec<_>| ConstraintSet {
        singles,
        disjunctions,
        groups: cs.groups.clone(),
        ..Default::default()
    };
    let mut sets: Vec<ConstraintSet> = cs.singles.iter().map(|c| one(vec![c.clone()], vec![])).collect();
    sets.extend(cs.disjunctions.iter().map(|d| one(vec![], vec![d.clone()])));
    let mut ok = 0;
    for s in &sets {
        let model = PenaltyModel::new(instance, s)?;
        if model.evaluate_stops(stops, &mut model.scratch()).total() == 0 {
            ok += 1;
        }
    }
    Ok((sets.len(), ok))
}

fn config_for(job: &BatchJob, base: &SearchConfig, seconds: f64) -> SearchConfig {
    SearchConfig {
        time_limit: Some(Duration::from_secs_f64(seconds)),
        seed: job.seed,
        runs: job.runs,
        ..base.clone()
    }
}

fn model_result(instance: &RoutingInstance, cs: &ConstraintSet, sol: &Solution, reference: Option<String>) -> Result<ModelResult> {
    let (constraints, satisfied) = satisfied_constraints(instance, cs, &sol.stops)?;
    Ok(ModelResult {
        length: sol.length,
        penalty: sol.penalty,
        constraints,
        satisfied,
        runs: sol.runs,
        reference,
    })
}

/// Reads every distinct training directory once.
fn load_training(jobs: &[BatchJob]) -> BTreeMap<PathBuf, std::result::Result<Arc<(Vec<TrainingRoute>, Hierarchy)>, String>> {
    let mut out = BTreeMap::new();
    for dir in jobs.iter().filter_map(|j| j.training.clone()) {
        out.entry(dir.clone()).or_insert_with(|| {
            read_route_dir(&dir)
                .map(|routes| {
                    let h = select_hierarchy(&routes, [1, 1, 1]);
                    info!("{}: {} training routes, hierarchy {h}", dir.display(), routes.len());
                    Arc::new((routes, h))
                })
                .map_err(|e| format!("training routes {}: {e}", dir.display()))
        });
    }
    out
}

fn run_job(job: &BatchJob, training: Option<&(Vec<TrainingRoute>, Hierarchy)>, cfg: &BatchConfig, report: &mut JobReport) -> Result<()> {
    job.validate()?;
    let (instance, base) = parse_instance(&std::fs::read_to_string(&job.instance)?)?;
    report.n = instance.n();
    let zoned = !instance.zones().is_empty();

    let (full, alt, sol) = if zoned {
        let (routes, h) = match training {
            Some((r, h)) => (r.as_slice(), h.clone()),
            None => (&[][..], Hierarchy::default()),
        };
        let extract = |variant| {
            let ec = ExtractConfig {
                variant,
                transitive: cfg.transitive,
                zones_only: false,
            };
            build_model(&instance, routes, &h, &ec)
        };
        let fm = extract(Variant::Full)?;
        let am = extract(Variant::Alternate)?;
        report.warnings.extend(fm.warnings.iter().cloned());
        let fcs = merge(&base, fm.constraints);
        let acs = merge(&base, am.constraints);

        let started = Instant::now();
        let fs = solve(&instance, &fcs, &config_for(job, &cfg.search, job.full_seconds))?;
        let als = solve(&instance, &acs, &config_for(job, &cfg.search, job.alternate_seconds))?;
        report.solve_ms = started.elapsed().as_millis();

        let fr = model_result(&instance, &fcs, &fs, fm.zone_reference)?;
        let ar = model_result(&instance, &acs, &als, am.zone_reference)?;
        let choice = best_of_two(fs.length, als.length, cfg.policy);
        report.selected = Some(choice);
        let (sol, r) = match choice {
            Choice::Full => (fs, &fr),
            Choice::Alternate => (als, &ar),
        };
        report.constraints = r.constraints;
        report.satisfied = r.satisfied;
        (Some(fr), Some(ar), sol)
    } else {
        // nothing to extract: one solve under the file's own constraints
        let started = Instant::now();
        let s = solve(&instance, &base, &config_for(job, &cfg.search, job.full_seconds))?;
        report.solve_ms = started.elapsed().as_millis();
        let fr = model_result(&instance, &base, &s, None)?;
        report.selected = Some(Choice::Full);
        report.constraints = fr.constraints;
        report.satisfied = fr.satisfied;
        (Some(fr), None, s)
    };
    report.length = sol.length;
    report.penalty = sol.penalty.total();
    report.full = full;
    report.alternate = alt;

    let comments = [
        format!("NAME : {}", report.name),
        format!("LENGTH : {}", sol.length),
        format!("PENALTY : {}", sol.penalty.total()),
        format!("MODEL : {}", if report.selected == Some(Choice::Full) { "full" } else { "alternate" }),
    ];
    if let Some(dir) = job.output.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(&job.output, write_tour(&sol.stops, &comments))?;
    Ok(())
}

/// Runs every job on a pool of `cfg.workers` threads. Failing jobs are
/// reported and do not stop the batch. Reports keep the order of `jobs`.
pub fn run_batch(jobs: &[BatchJob], cfg: &BatchConfig) -> BatchReport {
    let started = Instant::now();
    let training = load_training(jobs);
    let next = AtomicUsize::new(0);
    let sink: Mutex<Vec<Option<JobReport>>> = Mutex::new(vec![None; jobs.len()]);
    let workers = cfg.workers.clamp(1, jobs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let t0 = Instant::now();
                let mut r = JobReport {
                    name: job.name(),
                    instance: job.instance.clone(),
                    output: job.output.clone(),
                    ok: false,
                    error: None,
                    n: 0,
                    selected: None,
                    length: 0,
                    penalty: 0,
                    constraints: 0,
                    satisfied: 0,
                    full: None,
                    alternate: None,
                    warnings: Vec::new(),
                    solve_ms: 0,
                    wall_ms: 0,
                };
                let tr = match job.training.as_ref().map(|d| &training[d]) {
                    None => Ok(None),
                    Some(Ok(a)) => Ok(Some(a.as_ref())),
                    Some(Err(e)) => Err(e.clone()),
                };
                let outcome = tr.and_then(|t| run_job(job, t, cfg, &mut r).map_err(|e| e.to_string()));
                match outcome {
                    Ok(()) => r.ok = true,
                    Err(e) => {
                        warn!("{}: {e}", r.name);
                        r.error = Some(e);
                    }
                }
                r.wall_ms = t0.elapsed().as_millis();
                sink.lock().expect("report sink")[i] = Some(r);
            });
        }
    });
    let jobs: Vec<JobReport> = sink
        .into_inner()
        .expect("report sink")
        .into_iter()
        .map(|r| r.expect("every job reported"))
        .collect();
    BatchReport {
        workers,
        merge_factor: cfg.policy.merge_factor,
        totals: BatchReport::totals_of(&jobs),
        jobs,
        wall_ms: started.elapsed().as_millis(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tour::read_tour;
    use crate::tsplib::write_instance;

    #[test]
    fn merge_factor_rule() {
        let p = MergePolicy::default();
        assert_eq!(best_of_two(100, 98, p), Choice::Alternate);
        assert_eq!(best_of_two(100, 100, p), Choice::Full);
        assert_eq!(best_of_two(101, 100, p), Choice::Full);
        assert_eq!(best_of_two(102, 100, p), Choice::Alternate);
        let one = MergePolicy::new(1.0).unwrap();
        assert_eq!(best_of_two(7, 7, one), Choice::Full);
        assert_eq!(best_of_two(8, 7, one), Choice::Alternate);
        assert!(MergePolicy::new(0.99).is_err());
        assert!(MergePolicy::new(f64::NAN).is_err());
    }

    fn write_jobs(dir: &Path, count: usize, broken: Option<usize>) -> Vec<BatchJob> {
        (0..count)
            .map(|k| {
                let n = 9 + k;
                let travel: Vec<Vec<Cost>> = (0..n)
                    .map(|i| (0..n).map(|j| if i == j { 0 } else { ((i * 13 + j * 7 + k) % 17 + 1) as Cost }).collect())
                    .collect();
                let inst = RoutingInstance::new(format!("j{k}"), travel, vec![]).unwrap();
                let path = dir.join(format!("j{k}.atsp"));
                let text = if broken == Some(k) {
                    "NAME : broken\nDIMENSION : x\n".to_string()
                } else {
                    write_instance(&inst, &ConstraintSet::default())
                };
                std::fs::write(&path, text).unwrap();
                BatchJob {
                    name: None,
                    instance: path,
                    training: None,
                    full_seconds: 5.0,
                    alternate_seconds: 5.0,
                    seed: k as u64,
                    runs: Some(2),
                    output: dir.join(format!("out/j{k}.tour")),
                }
            })
            .collect()
    }

    #[test]
    fn four_jobs_two_workers() {
        let dir = tempfile::tempdir().unwrap();
        let jobs = write_jobs(dir.path(), 4, None);
        let report = run_batch(&jobs, &BatchConfig { workers: 2, ..Default::default() });
        assert_eq!(report.jobs.len(), 4);
        assert_eq!(report.totals, BatchReport::totals_of(&report.jobs));
        for (job, r) in jobs.iter().zip(&report.jobs) {
            assert!(r.ok, "{:?}", r.error);
            let (inst, _) = parse_instance(&std::fs::read_to_string(&job.instance).unwrap()).unwrap();
            let stops = read_tour(&std::fs::read_to_string(&job.output).unwrap()).unwrap();
            let mut sorted = stops.clone();
            sorted.sort();
            assert_eq!(sorted, (0..inst.n()).collect::<Vec<_>>());
            assert_eq!(inst.tour_length(&stops), r.length);
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let dir = tempfile::tempdir().unwrap();
        let jobs = write_jobs(dir.path(), 3, None);
        let strip = |r: BatchReport| r.jobs.into_iter().map(|j| (j.length, j.penalty, j.full)).collect::<Vec<_>>();
        let a = strip(run_batch(&jobs, &BatchConfig { workers: 1, ..Default::default() }));
        let b = strip(run_batch(&jobs, &BatchConfig { workers: 3, ..Default::default() }));
        assert_eq!(a, b);
    }

    #[test]
    fn malformed_job_is_isolated() {
        let dir = tempfile::tempdir().unwrap();
        let jobs = write_jobs(dir.path(), 3, Some(1));
        let report = run_batch(&jobs, &BatchConfig { workers: 2, ..Default::default() });
        assert!(report.jobs[0].ok && report.jobs[2].ok);
        assert!(!report.jobs[1].ok && report.jobs[1].error.is_some());
        assert_eq!((report.totals.ok, report.totals.failed), (2, 1));
    }

    #[test]
    fn jobs_file_paths_are_relative_to_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("jobs.json");
        std::fs::write(
            &path,
            r#"{"training": "train", "jobs": [
                {"instance": "a.atsp", "full_seconds": 1, "alternate_seconds": 0.5, "output": "a.tour"},
                {"instance": "/abs/b.atsp", "training": "other", "full_seconds": 1, "alternate_seconds": 1, "seed": 7, "output": "b.tour"}
            ]}"#,
        )
        .unwrap();
        let jobs = read_jobs(&path).unwrap();
        assert_eq!(jobs[0].instance, dir.path().join("a.atsp"));
        assert_eq!(jobs[0].training.as_deref(), Some(dir.path().join("train").as_path()));
        assert_eq!(jobs[0].seed, 1);
        assert_eq!(jobs[0].name(), "a");
        assert_eq!(jobs[1].instance, PathBuf::from("/abs/b.atsp"));
        assert_eq!(jobs[1].training.as_deref(), Some(dir.path().join("other").as_path()));
    }

    #[test]
    fn nonpositive_limits_fail_the_job() {
        let dir = tempfile::tempdir().unwrap();
        let mut jobs = write_jobs(dir.path(), 1, None);
        jobs[0].alternate_seconds = 0.0;
        let report = run_batch(&jobs, &BatchConfig::default());
        assert!(!report.jobs[0].ok);
    }
}
