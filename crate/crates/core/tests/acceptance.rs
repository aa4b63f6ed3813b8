mod common;

use std::time::Instant;

use common::{human_sequence, random_model, random_sequence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rankq::dataset::write_annotations;
use rankq::estimation::{build_pair_models, estimate_confidence, EstimatorPolicy, PairCounts};
use rankq::qcompute::{
    decide, enumerate_blocks, exceeds_threshold, format_percent, group_pairs, q_bruteforce, q_dp, q_exact,
    q_montecarlo, Decision, GroupedModel, DEFAULT_BIN_WIDTH, DEFAULT_ENUMERATION_CAP,
};
use rankq::simulator::{
    sample_annotations, sample_machine_sequence, sample_population, ConfidenceModel, MachineMode, PopulationSpec,
    ThetaDistribution,
};
use rankq::{PairId, PairModel, Provenance, RankingSequence};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// The 200 models shared by the oracle and minimality criteria.
fn test_models() -> Vec<Vec<PairModel>> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..200).map(|i| random_model(&mut rng, 12, 4, i % 2 == 0)).collect()
}

fn grouped(models: &[PairModel]) -> GroupedModel {
    group_pairs(models, 0.0).unwrap()
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_exact, mut worst_bound, mut dp_violations) = (0.0f64, 0.0f64, 0);
    for models in test_models() {
        let x = if rng.gen_bool(0.5) { human_sequence(&mut rng, &models) } else { random_sequence(&mut rng, &models) };
        let g = grouped(&models);
        let table = enumerate_blocks(&g, DEFAULT_ENUMERATION_CAP).unwrap();
        let e = q_exact(&table, &g, &x).unwrap();
        let b = q_bruteforce(&models, &x).unwrap();
        let d = q_dp(&g, &x, DEFAULT_BIN_WIDTH).unwrap();
        let bound = d.error_bound.unwrap();
        worst_exact = worst_exact.max((e.q - b.q).abs());
        worst_bound = worst_bound.max(bound);
        if d.q < e.q - 1e-12 || d.q > e.q + bound + 1e-12 {
            dp_violations += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst_exact <= 1e-9 && worst_bound <= 1e-4 && dp_violations == 0 && secs < 30.0,
        format!("max |exact-brute| {worst_exact:.1e}, max dp bound {worst_bound:.1e}, dp outside bound {dp_violations}, {secs:.2}s"),
    )
}

fn normalization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let models = random_model(&mut rng, 40, 4, i % 2 == 0);
        let table = enumerate_blocks(&grouped(&models), DEFAULT_ENUMERATION_CAP).unwrap();
        let sum: f64 = table.blocks().iter().map(|b| b.mass()).sum();
        worst = worst.max((sum - 1.0).abs()).max((table.total_mass() - 1.0).abs());
    }
    check(worst <= 1e-9, format!("max |sum-1| {worst:.1e}"))
}

fn grid_oracle(n: u32, s: [u32; 3]) -> f64 {
    let ll = |theta: f64, q: [f64; 3]| -> f64 {
        let mut v = n as f64 * theta.ln();
        for (c, p) in s.iter().zip(q) {
            if *c > 0 {
                v += *c as f64 * p.ln();
            }
        }
        v
    };
    let mut best = f64::NEG_INFINITY;
    for i in 0..=500 {
        let theta = 0.5 + i as f64 / 1000.0;
        let (lo, hi) = ((4.0 * theta - 3.0).max(0.0), 2.0 * theta - 1.0);
        for j in 0..=200 {
            let q2 = lo + (hi - lo) * j as f64 / 200.0;
            let q = [3.0 - 4.0 * theta + q2, 4.0 * theta - 2.0 - 2.0 * q2, q2];
            if q.iter().all(|&p| p >= 0.0) {
                best = best.max(ll(theta, q));
            }
        }
    }
    best
}

fn confidence_boundaries() -> Outcome {
    let mut problems = Vec::new();
    for n in [1, 3, 10, 40] {
        let top = estimate_confidence(&PairCounts::new("p", n, n).with_scores([0, 0, n]), 1e-8).unwrap();
        let bottom = estimate_confidence(&PairCounts::new("p", n, n).with_scores([n, 0, 0]), 1e-8).unwrap();
        if (top.theta - 1.0).abs() > 1e-6 || (bottom.theta - 0.5).abs() > 1e-6 {
            problems.push(format!("n={n}: {} {}", top.theta, bottom.theta));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_constraint, mut worst_gap) = (0.0f64, f64::NEG_INFINITY);
    for _ in 0..100 {
        let mut s = [rng.gen_range(0..=12), rng.gen_range(0..=12), rng.gen_range(0..=12)];
        if s.iter().sum::<u32>() == 0 {
            s[rng.gen_range(0..3)] = 1;
        }
        let n: u32 = s.iter().sum();
        let sol = estimate_confidence(&PairCounts::new("p", n, n).with_scores(s), 1e-8).unwrap();
        let q = [sol.q0, sol.q1, sol.q2];
        let violation = [
            (q.iter().sum::<f64>() - 1.0).abs(),
            (0.5 * q[0] + 0.75 * q[1] + q[2] - sol.theta).abs(),
            -q.iter().cloned().fold(f64::INFINITY, f64::min),
        ];
        worst_constraint = violation.iter().cloned().fold(worst_constraint, f64::max);
        worst_gap = worst_gap.max(grid_oracle(n, s) - sol.log_likelihood);
    }
    check(
        problems.is_empty() && worst_constraint <= 1e-6 && worst_gap <= 1e-8,
        format!("boundary misses {problems:?}, max constraint violation {worst_constraint:.1e}, max grid-minus-solver {worst_gap:.1e}"),
    )
}

fn degeneracy() -> Outcome {
    let counts = vec![
        PairCounts::new("unanimous", 5, 5).with_scores([0, 1, 4]),
        PairCounts::new("split", 5, 3),
        PairCounts::new("lean", 5, 1),
    ];
    let models = build_pair_models(&counts, &EstimatorPolicy::ratio_only()).unwrap();
    let unanimous = models.iter().find(|m| m.pair_id.as_str() == "unanimous").unwrap();
    let x: RankingSequence = models.iter().map(|m| (m.pair_id.clone(), m.pair_id.as_str() != "unanimous")).collect();
    let g = group_pairs(&models, 0.01).unwrap();
    let table = enumerate_blocks(&g, DEFAULT_ENUMERATION_CAP).unwrap();
    let r = q_exact(&table, &g, &x).unwrap();
    let shown = format_percent(r.q);
    let verdict = decide(r.q, 0.1).unwrap();
    check(
        unanimous.theta == 1.0 && r.q == 1.0 && shown == "100" && verdict == Decision::Distinguishable,
        format!("theta {}, Q = {shown}%, {verdict}", unanimous.theta),
    )
}

fn sampling_consistency() -> Outcome {
    let start = Instant::now();
    let spec = PopulationSpec {
        n_pairs: 200,
        theta_distribution: ThetaDistribution::PointMixture { points: vec![(0.8, 1.0)] },
        confidence_model: ConfidenceModel::MaxEntropy,
        annotators_per_pair: 5,
        second_round: None,
        random_orientation: false,
        seed: 5,
    };
    let truth = sample_population(&spec).unwrap();
    let g = group_pairs(&truth, 0.0).unwrap();
    let trials = 1000;
    let (mut flagged, mut max_tie) = (0, 0.0f64);
    for seed in 0..trials {
        let x = sample_machine_sequence(&truth, MachineMode::Human, seed).unwrap();
        let r = q_dp(&g, &x, DEFAULT_BIN_WIDTH).unwrap();
        max_tie = max_tie.max(r.tie_mass);
        if decide(r.q, 0.1).unwrap() == Decision::Distinguishable {
            flagged += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let limit = (0.1 + max_tie).min(1.0);
    let se = (limit * (1.0 - limit) / trials as f64).sqrt();
    let fraction = flagged as f64 / trials as f64;
    check(
        fraction <= limit + 3.0 * se && secs < 60.0,
        format!("flagged {fraction:.3} vs limit {limit:.3} + 3se {:.3}, {secs:.2}s", 3.0 * se),
    )
}

fn modal_minimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut not_minimal, mut worst_tie) = (0, 0.0f64);
    for models in test_models() {
        let g = grouped(&models);
        let table = enumerate_blocks(&g, DEFAULT_ENUMERATION_CAP).unwrap();
        let modal = RankingSequence::modal(models.iter().map(|m| &m.pair_id));
        let qm = q_exact(&table, &g, &modal).unwrap();
        worst_tie = worst_tie.max((qm.q - qm.tie_mass).abs());
        for _ in 0..1000 {
            let x = random_sequence(&mut rng, &models);
            if q_exact(&table, &g, &x).unwrap().q < qm.q - 1e-12 {
                not_minimal += 1;
            }
        }
    }
    check(
        not_minimal == 0 && worst_tie <= 1e-9,
        format!("sequences below modal {not_minimal}, max |q-tie| {worst_tie:.1e}"),
    )
}

fn scale() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let models: Vec<PairModel> = (0..300)
        .map(|i| {
            let theta = common::GRID[i % 11];
            PairModel::from_raw(PairId::new(format!("p{i:03}")), theta, Provenance::External)
        })
        .collect();
    let g = group_pairs(&models, 0.0).unwrap();
    let mut dp_secs = 0.0f64;
    let mut worst_bound = 0.0f64;
    for _ in 0..3 {
        let x = human_sequence(&mut rng, &models);
        let start = Instant::now();
        let r = q_dp(&g, &x, DEFAULT_BIN_WIDTH).unwrap();
        dp_secs = dp_secs.max(start.elapsed().as_secs_f64());
        worst_bound = worst_bound.max(r.error_bound.unwrap());
    }

    let thetas = [0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85];
    let big: Vec<PairModel> = (0..63)
        .map(|i| PairModel::from_raw(PairId::new(format!("b{i:02}")), thetas[i % 7], Provenance::External))
        .collect();
    let gb = group_pairs(&big, 0.0).unwrap();
    let blocks = gb.block_count();
    let x = human_sequence(&mut rng, &big);
    let start = Instant::now();
    let table = enumerate_blocks(&gb, DEFAULT_ENUMERATION_CAP).unwrap();
    let r = q_exact(&table, &gb, &x).unwrap();
    let enum_secs = start.elapsed().as_secs_f64();
    check(
        dp_secs < 5.0 && enum_secs < 10.0 && r.q > 0.0,
        format!(
            "dp N=300 G={} slowest {dp_secs:.2}s (bound {worst_bound:.1e}); enumeration J={blocks} {enum_secs:.2}s",
            g.groups().len()
        ),
    )
}

fn formatting() -> Outcome {
    let cases = [(0.938, "93.8", true), (0.891, "89.1", false), (0.9, "90.0", false)];
    let mut ok = true;
    let mut shown = Vec::new();
    for (q, text, flagged) in cases {
        let f = format_percent(q);
        let e = exceeds_threshold(q, 0.1).unwrap();
        ok &= f == text && e == flagged;
        shown.push(format!("{f}{}", if e { "*" } else { "" }));
    }
    check(ok, shown.join(" "))
}

fn seeded_outputs() -> Vec<u8> {
    let spec = PopulationSpec {
        n_pairs: 120,
        theta_distribution: ThetaDistribution::Beta { mean: 0.8, concentration: 4.0 },
        confidence_model: ConfidenceModel::Blend { polarized_weight: 0.3 },
        annotators_per_pair: 5,
        second_round: Some(10),
        random_orientation: true,
        seed: 99,
    };
    let truth = sample_population(&spec).unwrap();
    let mut out = Vec::new();
    write_annotations(&sample_annotations(&truth, &spec).unwrap(), &mut out).unwrap();
    let g = group_pairs(&truth, 0.01).unwrap();
    let x = sample_machine_sequence(&truth, MachineMode::Human, 3).unwrap();
    let mc = q_montecarlo(&g, &x, 100_000, 4).unwrap();
    let dp = q_dp(&g, &x, DEFAULT_BIN_WIDTH).unwrap();
    out.extend(format!("{:?} {:?} {:?}", mc.q.to_bits(), dp.q.to_bits(), dp.error_bound.map(f64::to_bits)).bytes());
    out
}

fn determinism() -> Outcome {
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(seeded_outputs)
    };
    let first = run(1);
    let same = first == run(1) && first == run(4);
    check(same, format!("{} bytes compared across 1 and 4 threads", first.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("oracle equivalence", oracle_equivalence),
        ("block normalization", normalization),
        ("confidence estimator boundaries", confidence_boundaries),
        ("unanimous-pair degeneracy", degeneracy),
        ("sampling consistency", sampling_consistency),
        ("modal minimality", modal_minimality),
        ("scale", scale),
        ("threshold and formatting", formatting),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
