//! Scenario generation, experiment orchestration and CSV/SVG emission.

use std::io::Write;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{decomposition_saving, worst_case_load, TradeoffCurve};
use crate::decomposition::{decompose, search_decompositions};
use crate::error::{Result, ShuffleError};
use crate::lifecycle::{RoundOptions, RoundState};
use crate::load::LoadValue;
use crate::model::{canonical_u, Assignment, FileTransitionGraph, SystemParams};
use crate::placement::{partition_files, place_caches, PayloadStore};
use crate::protocol::{execute_shuffle, PayloadState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShuffleMode {
    Random,
    WorstCase,
    Explicit,
}

impl ShuffleMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ShuffleMode::Random => "random",
            ShuffleMode::WorstCase => "worst-case",
            ShuffleMode::Explicit => "explicit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: SystemParams,
    pub mode: ShuffleMode,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default = "one")]
    pub rounds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub search_budget: usize,
    #[serde(default)]
    pub payload_bytes: usize,
    /// Scenario file for explicit mode.
    #[serde(default)]
    pub assignment: Option<PathBuf>,
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub svg: Option<PathBuf>,
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    pub fn new(params: SystemParams, mode: ShuffleMode) -> Self {
        ExperimentConfig {
            params,
            mode,
            trials: 1,
            rounds: 1,
            seed: 0,
            search_budget: 0,
            payload_bytes: 0,
            assignment: None,
            csv: None,
            svg: None,
        }
    }
}

/// Per-trial generator: `ChaCha8` seeded with `seed`, stream `trial`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Uniformly random files chunked into `K` blocks of `N/K`; `u` canonical.
pub fn gen_random_shuffle_with(params: &SystemParams, rng: &mut impl Rng) -> Assignment {
    let mut files: Vec<usize> = (1..=params.n_files).collect();
    files.shuffle(rng);
    let d = files
        .chunks(params.files_per_worker())
        .map(<[usize]>::to_vec)
        .collect();
    Assignment::with_canonical_u(d).expect("chunks of a permutation partition the files")
}

pub fn gen_random_shuffle(params: &SystemParams, seed: u64) -> Assignment {
    gen_random_shuffle_with(params, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `d(i) = u(i+1)`, `d(K) = u(1)`.
pub fn gen_worst_case(params: &SystemParams) -> Assignment {
    let u = canonical_u(params.n_workers, params.n_files);
    let mut d = u.clone();
    d.rotate_left(1);
    Assignment::new(u, d).expect("block shift is a valid assignment")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub k: usize,
    pub n: usize,
    pub s: usize,
    pub shat: usize,
    pub mode: ShuffleMode,
    pub gammas: Vec<usize>,
    pub load: LoadValue,
    pub worst: LoadValue,
    pub verified: bool,
    pub seed: u64,
}

impl TrialRecord {
    pub fn saving(&self) -> LoadValue {
        &self.worst - &self.load
    }
}

fn trial_assignment(config: &ExperimentConfig, explicit: Option<&Assignment>, rng: &mut ChaCha8Rng) -> Result<Assignment> {
    match config.mode {
        ShuffleMode::Random => Ok(gen_random_shuffle_with(&config.params, rng)),
        ShuffleMode::WorstCase => Ok(gen_worst_case(&config.params)),
        ShuffleMode::Explicit => explicit
            .cloned()
            .ok_or_else(|| ShuffleError::InvalidAssignment("explicit mode needs an assignment".into())),
    }
}

fn run_trial(config: &ExperimentConfig, explicit: Option<&Assignment>, trial: usize) -> Result<Vec<TrialRecord>> {
    let params = &config.params;
    let mut rng = trial_rng(config.seed, trial as u64);
    let worst = worst_case_load(params.n_files, params.n_workers, params.shat());
    let record = |index: usize, gammas: Vec<usize>, load: LoadValue| TrialRecord {
        trial: index,
        k: params.n_workers,
        n: params.n_files,
        s: params.cache_size,
        shat: params.shat(),
        mode: config.mode,
        gammas,
        load,
        worst: worst.clone(),
        verified: true,
        seed: config.seed,
    };

    if config.rounds <= 1 {
        let a = trial_assignment(config, explicit, &mut rng)?;
        let (a, _) = crate::model::canonicalize_assignment(&a);
        let g = FileTransitionGraph::from_assignment(&a);
        let decomposition = if config.search_budget > 0 {
            search_decompositions(&g, params.shat(), config.search_budget, rng.gen())?.best
        } else {
            decompose(&g)?
        };
        let caches = place_caches(params, &a);
        let payloads = (config.payload_bytes > 0).then(|| {
            let master = PayloadStore::random(&partition_files(params, &a), config.payload_bytes, &mut rng);
            PayloadState::from_master(master, &caches)
        });
        let outcome = execute_shuffle(params, &a, &caches, &decomposition, payloads.as_ref())?;
        if !outcome.verified() {
            return Err(ShuffleError::Verification(format!("trial {trial} failed decodability checks")));
        }
        return Ok(vec![record(trial, outcome.decomposition.gammas.clone(), outcome.load)]);
    }

    let options = RoundOptions {
        search_budget: config.search_budget,
        seed: rng.gen(),
        payload_bytes: config.payload_bytes,
        history_window: Some(1),
    };
    let mut state = RoundState::new(params, &options);
    let mut out = Vec::with_capacity(config.rounds);
    for r in 0..config.rounds {
        let a = trial_assignment(config, explicit, &mut rng)?;
        let rec = state.step(params, &a, &options)?;
        out.push(record(trial * config.rounds + r, rec.gammas, rec.load));
    }
    Ok(out)
}

/// Runs all trials in parallel and returns records in trial order. With `rounds > 1` each
/// round is a row and `trial` counts rounds across trials.
pub fn run_experiment(config: &ExperimentConfig, explicit: Option<&Assignment>) -> Result<Vec<TrialRecord>> {
    config.params.validate()?;
    if config.trials == 0 || config.rounds == 0 {
        return Err(ShuffleError::InvalidParams("trials and rounds must be positive".into()));
    }
    if let Some(a) = explicit {
        a.check_params(&config.params)?;
    }
    let per_trial: Vec<Result<Vec<TrialRecord>>> = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(config, explicit, t))
        .collect();
    let mut out = Vec::with_capacity(config.trials * config.rounds);
    for r in per_trial {
        out.extend(r?);
    }
    Ok(out)
}

/// Five-number summary and exact mean of the loads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadSummary {
    pub count: usize,
    pub min: LoadValue,
    pub q1: LoadValue,
    pub median: LoadValue,
    pub q3: LoadValue,
    pub max: LoadValue,
    pub mean: LoadValue,
    pub worst: LoadValue,
}

fn quantile(sorted: &[LoadValue], num: usize, den: usize) -> LoadValue {
    // Lower nearest rank.
    let idx = ((sorted.len() - 1) * num) / den;
    sorted[idx].clone()
}

pub fn summarize(records: &[TrialRecord]) -> Option<LoadSummary> {
    if records.is_empty() {
        return None;
    }
    let mut loads: Vec<LoadValue> = records.iter().map(|r| r.load.clone()).collect();
    loads.sort();
    let total: LoadValue = loads.iter().cloned().sum();
    Some(LoadSummary {
        count: loads.len(),
        min: loads[0].clone(),
        q1: quantile(&loads, 1, 4),
        median: quantile(&loads, 1, 2),
        q3: quantile(&loads, 3, 4),
        max: loads[loads.len() - 1].clone(),
        mean: total * LoadValue::new(1, loads.len() as i64),
        worst: records[0].worst.clone(),
    })
}

pub const CSV_HEADER: [&str; 15] = [
    "trial", "K", "N", "S", "shat", "mode", "gammas", "load_num", "load_den", "load_float", "worst_num",
    "worst_den", "saving_float", "verified", "seed",
];

pub fn write_records_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        let gammas = r.gammas.iter().map(ToString::to_string).collect::<Vec<_>>().join(";");
        w.write_record([
            r.trial.to_string(),
            r.k.to_string(),
            r.n.to_string(),
            r.s.to_string(),
            r.shat.to_string(),
            r.mode.as_str().to_string(),
            gammas,
            r.load.numer().to_string(),
            r.load.denom().to_string(),
            format!("{:.6}", r.load.to_f64()),
            r.worst.numer().to_string(),
            r.worst.denom().to_string(),
            format!("{:.6}", r.saving().to_f64()),
            r.verified.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_tradeoff_csv<W: Write>(curve: &TradeoffCurve, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["S", "R_num", "R_den", "R_float"])?;
    for (s, r) in &curve.corner_points {
        w.write_record([
            s.to_string(),
            r.numer().to_string(),
            r.denom().to_string(),
            format!("{:.6}", r.to_f64()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Records plus the closed-form identities each row must satisfy.
pub fn check_records(records: &[TrialRecord]) -> std::result::Result<(), String> {
    for r in records {
        if !r.verified {
            return Err(format!("trial {} not verified", r.trial));
        }
        if r.load > r.worst {
            return Err(format!("trial {} load {} exceeds worst case {}", r.trial, r.load, r.worst));
        }
        let saving = decomposition_saving(r.k, r.shat, &r.gammas);
        if r.saving() != saving {
            return Err(format!("trial {} saving {} differs from {}", r.trial, r.saving(), saving));
        }
    }
    Ok(())
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 56.0;

struct Frame {
    x0: f64,
    x1: f64,
    y1: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        PAD + (v - self.x0) / (self.x1 - self.x0).max(1e-9) * (W - 2.0 * PAD)
    }
    fn y(&self, v: f64) -> f64 {
        H - PAD - v / self.y1.max(1e-9) * (H - 2.0 * PAD)
    }
}

fn axes(svg: &mut String, f: &Frame, xlabel: &str, ylabel: &str, title: &str) {
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{title}</text>\n\
         <line x1=\"{PAD}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{}\" stroke=\"black\"/>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{xlabel}</text>\n\
         <text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{ylabel}</text>\n",
        W / 2.0,
        H - PAD,
        W - PAD,
        H - PAD,
        H - PAD,
        W / 2.0,
        H - 14.0,
        H / 2.0,
        H / 2.0
    ));
    for i in 0..=4 {
        let v = f.y1 * i as f64 / 4.0;
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.2}</text>\n",
            PAD - 6.0,
            f.y(v) + 4.0,
            v
        ));
    }
}

/// Corner points and hull of a trade-off curve.
pub fn tradeoff_svg(curve: &TradeoffCurve) -> String {
    let ymax = curve.corner_points.iter().map(|(_, r)| r.to_f64()).fold(0.0, f64::max).max(1.0);
    let f = Frame {
        x0: 1.0,
        x1: curve.k as f64,
        y1: ymax,
    };
    let mut svg = String::new();
    axes(
        &mut svg,
        &f,
        "cache size S",
        "load R",
        &format!("K = {}, gamma = {}", curve.k, curve.gamma),
    );
    let pts: Vec<String> = curve
        .hull
        .iter()
        .map(|(s, r)| format!("{:.1},{:.1}", f.x(*s as f64), f.y(r.to_f64())))
        .collect();
    svg.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"{}\"/>\n",
        pts.join(" ")
    ));
    for (s, r) in &curve.corner_points {
        svg.push_str(&format!(
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"4\" fill=\"#d62728\"><title>S={s} R={r}</title></circle>\n\
             <text x=\"{:.1}\" y=\"{}\" text-anchor=\"middle\">{s}</text>\n",
            f.x(*s as f64),
            f.y(r.to_f64()),
            f.x(*s as f64),
            H - PAD + 16.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// One box per configuration, keyed by `N/K`, with the worst-case value as a dashed marker.
pub fn sweep_svg(title: &str, points: &[(usize, LoadSummary)]) -> String {
    let ymax = points
        .iter()
        .map(|(_, s)| s.worst.to_f64().max(s.max.to_f64()))
        .fold(0.0, f64::max)
        .max(1.0);
    let xmax = points.iter().map(|(x, _)| *x).max().unwrap_or(1) as f64;
    let f = Frame {
        x0: 0.0,
        x1: xmax + 1.0,
        y1: ymax,
    };
    let mut svg = String::new();
    axes(&mut svg, &f, "N/K", "load R", title);
    let half = 12.0;
    let mut mean_pts = Vec::new();
    for (x, s) in points {
        let cx = f.x(*x as f64);
        svg.push_str(&format!(
            "<line x1=\"{cx:.1}\" y1=\"{:.1}\" x2=\"{cx:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n\
             <rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"#aec7e8\" stroke=\"black\"/>\n\
             <line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\" stroke-width=\"2\"/>\n\
             <line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#d62728\" stroke-dasharray=\"4 3\"/>\n\
             <text x=\"{cx:.1}\" y=\"{}\" text-anchor=\"middle\">{x}</text>\n",
            f.y(s.min.to_f64()),
            f.y(s.max.to_f64()),
            cx - half,
            f.y(s.q3.to_f64()),
            2.0 * half,
            (f.y(s.q1.to_f64()) - f.y(s.q3.to_f64())).max(1.0),
            cx - half,
            f.y(s.median.to_f64()),
            cx + half,
            f.y(s.median.to_f64()),
            cx - half - 4.0,
            f.y(s.worst.to_f64()),
            cx + half + 4.0,
            f.y(s.worst.to_f64()),
            H - PAD + 16.0
        ));
        mean_pts.push(format!("{cx:.1},{:.1}", f.y(s.mean.to_f64())));
    }
    svg.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"#2ca02c\" stroke-width=\"2\" points=\"{}\"/>\n</svg>\n",
        mean_pts.join(" ")
    ));
    svg
}

/// Writes the CSV (and SVG box plot when requested) named in the config.
pub fn emit_outputs(records: &[TrialRecord], config: &ExperimentConfig) -> Result<()> {
    if let Some(path) = &config.csv {
        write_records_csv(records, std::fs::File::create(path)?)?;
    }
    if let Some(path) = &config.svg {
        let points: Vec<(usize, LoadSummary)> = summarize(records)
            .map(|s| vec![(config.params.files_per_worker(), s)])
            .unwrap_or_default();
        let title = format!(
            "K = {}, S^ = {}, {} trials",
            config.params.n_workers,
            config.params.shat(),
            records.len()
        );
        std::fs::write(path, sweep_svg(&title, &points))?;
    }
    Ok(())
}
