use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rankq::config::RunConfig;
use rankq::dataset::{self, FilterPolicy, SplitMode};
use rankq::estimation::build_pair_models;
use rankq::qcompute::{decide, format_percent, group_pairs, Decision, Method, MethodRegistry};
use rankq::simulator::{self, MachineMode, PopulationSpec};
use rankq::{PairModel, RankingSequence};
use serde::{Deserialize, Serialize};

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("cannot open {}", path.display()))?))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    pub q: f64,
    pub q_percent: String,
    pub method: Method,
    pub tie_mass: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bin_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_stderr: Option<f64>,
    pub target_log_p: f64,
    pub epsilon: f64,
    pub decision: Decision,
    pub pairs: usize,
    pub groups: usize,
    pub blocks: u128,
}

/// Renders a block count, which saturates at `u128::MAX`.
pub fn block_label(blocks: u128) -> String {
    if blocks == u128::MAX {
        format!("> {:.1e}", u128::MAX as f64)
    } else {
        blocks.to_string()
    }
}

/// Groups the models per `cfg` and scores `seq` with the configured method.
pub fn evaluate_sequence(models: &[PairModel], seq: &RankingSequence, cfg: &RunConfig) -> Result<Evaluation> {
    cfg.validate()?;
    let mut grouped = group_pairs(models, cfg.quantization_step)?;
    if let Some(ceiling) = cfg.theta_ceiling {
        grouped = grouped.with_theta_ceiling(ceiling)?;
    }
    let method = MethodRegistry::with_builtin().build(&cfg.method, &cfg.method_params())?;
    let r = method.compute(&grouped, seq)?;
    Ok(Evaluation {
        q: r.q,
        q_percent: format_percent(r.q),
        method: r.method,
        tie_mass: r.tie_mass,
        error_bound: r.error_bound,
        bin_width: r.bin_width,
        mc_stderr: r.mc_stderr,
        target_log_p: r.target_log_p,
        epsilon: cfg.epsilon,
        decision: decide(r.q, cfg.epsilon)?,
        pairs: grouped.total_pairs(),
        groups: grouped.groups().len(),
        blocks: grouped.block_count(),
    })
}

pub fn load_models(path: &Path) -> Result<Vec<PairModel>> {
    dataset::parse_targets(open(path)?).with_context(|| format!("reading model {}", path.display()))
}

pub fn load_predictions(path: &Path, models: &[PairModel]) -> Result<RankingSequence> {
    dataset::parse_predictions(open(path)?, models).with_context(|| format!("reading predictions {}", path.display()))
}

#[derive(Clone, Debug, Serialize)]
struct EstimateRow<'a> {
    pair_id: &'a str,
    theta: f64,
    flipped: bool,
    provenance: String,
}

#[derive(Debug, Serialize)]
struct EstimateSummary<'a> {
    pairs: Vec<EstimateRow<'a>>,
    dropped: Vec<&'a str>,
    groups: usize,
    blocks: u128,
}

pub fn cmd_estimate(
    annotations: &Path,
    out: &Path,
    mode: SplitMode,
    max_undecided: Option<u32>,
    cfg: &RunConfig,
    json: bool,
    w: &mut dyn Write,
) -> Result<()> {
    cfg.validate()?;
    let records = dataset::parse_annotations(open(annotations)?)
        .with_context(|| format!("reading annotations {}", annotations.display()))?;
    let mut policy = FilterPolicy::for_mode(mode);
    if let Some(m) = max_undecided {
        policy.max_undecided = m;
    }
    let filtered = dataset::filter_pairs(&records, &policy);
    let models = build_pair_models(&filtered.kept, &cfg.policy)?;
    if models.is_empty() {
        anyhow::bail!("no pairs left after filtering {}", annotations.display());
    }
    dataset::export_targets(&models, create(out)?)?;

    let grouped = group_pairs(&models, cfg.quantization_step)?;
    let summary = EstimateSummary {
        pairs: models
            .iter()
            .map(|m| EstimateRow {
                pair_id: m.pair_id.as_str(),
                theta: m.theta,
                flipped: m.flipped,
                provenance: m.provenance.to_string(),
            })
            .collect(),
        dropped: filtered.dropped.iter().map(|p| p.as_str()).collect(),
        groups: grouped.groups().len(),
        blocks: grouped.block_count(),
    };
    if json {
        serde_json::to_writer_pretty(&mut *w, &summary)?;
        writeln!(w)?;
        return Ok(());
    }
    let width = summary.pairs.iter().map(|r| r.pair_id.len()).max().unwrap_or(7).max(7);
    writeln!(w, "{:width$}  {:>8}  {:7}  provenance", "pair_id", "theta", "flipped")?;
    for r in &summary.pairs {
        writeln!(w, "{:width$}  {:>8.6}  {:7}  {}", r.pair_id, r.theta, r.flipped, r.provenance)?;
    }
    writeln!(w, "kept {} pairs, dropped {}", summary.pairs.len(), summary.dropped.len())?;
    writeln!(w, "groups G = {}, blocks J = {}", summary.groups, block_label(summary.blocks))?;
    writeln!(w, "wrote {}", out.display())?;
    Ok(())
}

pub fn cmd_evaluate(model: &Path, predictions: &Path, cfg: &RunConfig, json: bool, w: &mut dyn Write) -> Result<()> {
    let models = load_models(model)?;
    let seq = load_predictions(predictions, &models)?;
    let ev = evaluate_sequence(&models, &seq, cfg)?;
    if json {
        serde_json::to_writer_pretty(&mut *w, &ev)?;
        writeln!(w)?;
        return Ok(());
    }
    writeln!(w, "Q = {}%", ev.q_percent)?;
    writeln!(w, "method: {} (G = {}, J = {})", ev.method, ev.groups, block_label(ev.blocks))?;
    writeln!(w, "tie mass: {:e}", ev.tie_mass)?;
    if let Some(b) = ev.error_bound {
        writeln!(w, "error bound: {b:e}")?;
    }
    if let Some(bw) = ev.bin_width {
        writeln!(w, "bin width: {bw:e}")?;
    }
    if let Some(se) = ev.mc_stderr {
        writeln!(w, "std. error: {se:e}")?;
    }
    writeln!(w, "verdict: {} at epsilon = {}", ev.decision, ev.epsilon)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MachineSpec {
    pub name: String,
    #[serde(flatten)]
    pub mode: MachineMode,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Simulation input file: a population plus the synthetic predictors to run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    #[serde(flatten)]
    pub population: PopulationSpec,
    #[serde(default)]
    pub machines: Vec<MachineSpec>,
}

pub fn cmd_simulate(spec_path: &Path, out_dir: &Path, seed: Option<u64>, w: &mut dyn Write) -> Result<()> {
    let text = fs::read_to_string(spec_path).with_context(|| format!("cannot read {}", spec_path.display()))?;
    let mut spec: SimulationSpec =
        serde_json::from_str(&text).with_context(|| format!("invalid spec {}", spec_path.display()))?;
    if let Some(s) = seed {
        spec.population.seed = s;
    }
    spec.population.validate()?;
    for m in &spec.machines {
        if m.name.is_empty() || !m.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            anyhow::bail!("machine name `{}` must be non-empty and use [A-Za-z0-9_-]", m.name);
        }
    }
    fs::create_dir_all(out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;

    let truth = simulator::sample_population(&spec.population)?;
    let annotations = simulator::sample_annotations(&truth, &spec.population)?;
    let ann_path = out_dir.join("annotations.csv");
    dataset::write_annotations(&annotations, create(&ann_path)?)?;
    let truth_path = out_dir.join("truth.csv");
    dataset::export_targets(&truth, create(&truth_path)?)?;

    let mut written: Vec<PathBuf> = vec![ann_path, truth_path];
    for (i, m) in spec.machines.iter().enumerate() {
        let seed = m.seed.unwrap_or_else(|| spec.population.seed.wrapping_add(1 + i as u64));
        let seq = simulator::sample_machine_sequence(&truth, m.mode, seed)?;
        let path = out_dir.join(format!("predictions_{}.csv", m.name));
        dataset::write_predictions(&seq, &truth, create(&path)?)?;
        written.push(path);
    }

    let n = truth.len();
    let mean = truth.iter().map(|m| m.theta).sum::<f64>() / n.max(1) as f64;
    let certain = truth.iter().filter(|m| m.theta == 1.0).count();
    writeln!(w, "pairs: {n}, annotations: {}", annotations.len())?;
    writeln!(w, "true theta: mean {mean:.4}, min {:.4}, max {:.4}, equal to 1: {certain}",
        truth.iter().map(|m| m.theta).fold(f64::INFINITY, f64::min),
        truth.iter().map(|m| m.theta).fold(f64::NEG_INFINITY, f64::max))?;
    for p in written {
        writeln!(w, "wrote {}", p.display())?;
    }
    Ok(())
}
