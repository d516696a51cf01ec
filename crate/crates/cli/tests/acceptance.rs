//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::index::sample_weighted;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use repweight::analysis::{entropy, ks_statistic, WeightedSample};
use repweight::ingest::{compute_desired, fill_missing, skewed_subsample_detailed};
use repweight::linalg::{lambert_w, project_simplex, project_topk, top_k_indices};
use repweight::prox::{
    prox_absolute, prox_box, prox_entropy_limited, prox_equality, prox_kl, prox_kl_limited,
    prox_least_squares,
};
use repweight::raking::{dual_objective, rake, rake_step, PartitionedProblem};
use repweight::*;
use repweight_testkit::{
    best_k_subset_sum, column_along, grid_min, max_entropy_dual_newton, random_positive_weights,
    simplex_projection_grid, Partition, Population,
};

type Outcome = std::result::Result<String, String>;

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn entropy_reg() -> RegularizerSpec {
    RegularizerSpec::Entropy { limit: None }
}

fn tight() -> SolverConfig {
    SolverConfig { eps_abs: 1e-9, eps_rel: 1e-9, ..SolverConfig::default() }
}

fn matrix_of(part: &Partition) -> SampleMatrix {
    SampleMatrix::new(part.m(), part.n(), part.triplets(), vec![]).unwrap()
}

/// Equality-per-attribute problem over a partition with the given regularizer.
fn partition_problem(part: &Partition, f_des: &[f64], loss: fn(Vec<f64>) -> LossSpec, reg: RegularizerSpec) -> WeightingProblem {
    let offsets = part.offsets();
    let losses = part
        .levels
        .iter()
        .zip(&offsets)
        .enumerate()
        .map(|(a, (&l, &o))| (format!("attr{a}"), loss(f_des[o..o + l].to_vec())));
    WeightingProblem {
        matrix: matrix_of(part),
        layout: BlockLayout::sequential(losses).unwrap(),
        regularizer: reg,
        lambda: 1.0,
    }
}

fn equality(target: Vec<f64>) -> LossSpec {
    LossSpec::Equality { target }
}

fn kl(target: Vec<f64>) -> LossSpec {
    LossSpec::Kl { target }
}

fn partitioned(part: &Partition, f_des: &[f64]) -> PartitionedProblem {
    let selectors = part.offsets().iter().zip(&part.levels).map(|(&o, &l)| o..o + l).collect();
    PartitionedProblem::new(&matrix_of(part), selectors, f_des.to_vec()).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let sex: Vec<Vec<f64>> = vec![
        (0..10).map(|j| if j < 4 { 1.0 } else { 0.0 }).collect(),
        (0..10).map(|j| if j < 4 { 0.0 } else { 1.0 }).collect(),
    ];
    let f_des = [0.5, 0.5];
    let expected: Vec<f64> = (0..10).map(|j| if j < 4 { 0.125 } else { 0.5 / 6.0 }).collect();

    let problem = WeightingProblem {
        matrix: SampleMatrix::from_dense(&sex).unwrap(),
        layout: BlockLayout::sequential([("sex", equality(f_des.to_vec()))]).unwrap(),
        regularizer: entropy_reg(),
        lambda: 1.0,
    };
    let admm = solve(&problem, &SolverConfig::default()).unwrap();
    check!(admm.status == Status::Converged, "ADMM status {:?}", admm.status);
    let raked = rake(&PartitionedProblem::from_problem(&problem).unwrap(), 1000, 1e-12).unwrap();
    let newton = max_entropy_dual_newton(&sex, &f_des);
    let elapsed = start.elapsed();

    let errors = [
        max_abs_diff(&admm.w, &expected),
        max_abs_diff(&raked.weights, &expected),
        max_abs_diff(&newton, &expected),
    ];
    check!(errors.iter().all(|&e| e <= 1e-3), "errors admm/rake/newton {errors:?}");
    check!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("female 0.125 male 0.0833 on all three paths, max error {:.1e}, {elapsed:.2?}", errors.iter().fold(0.0f64, |a, &b| a.max(b))))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut steps = 0usize;
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let levels: Vec<usize> = (0..3).map(|_| rng.random_range(2..=6)).collect();
        let part = Partition::random(1000, &levels, &mut rng);
        let f_des = part.marginals(&random_positive_weights(1000, 1.0, &mut rng));

        let problem = partition_problem(&part, &f_des, equality, entropy_reg());
        let admm = solve(&problem, &SolverConfig::default()).unwrap();
        check!(admm.status == Status::Converged, "seed {seed}: ADMM status {:?}", admm.status);
        let pp = partitioned(&part, &f_des);
        let raked = rake(&pp, 1000, 1e-12).unwrap();
        check!(raked.converged, "seed {seed}: raking did not converge");
        let newton = max_entropy_dual_newton(&part.dense(), &f_des);
        for (a, b) in [(&admm.w, &raked.weights), (&admm.w, &newton), (&raked.weights, &newton)] {
            worst = worst.max(max_abs_diff(a, b));
        }

        // replay the raking steps with the dual variable ν ← ν − log(want/have)
        let mut w = vec![1.0 / 1000.0; 1000];
        let mut nu = vec![0.0; pp.m()];
        let mut value = dual_objective(&pp, &nu);
        for step in 0..raked.passes * levels.len() {
            let s = step % levels.len();
            let range = pp.selectors()[s].clone();
            let have = pp.marginal(s, &w);
            w = rake_step(&pp, &w, s).unwrap();
            for (c, i) in range.enumerate() {
                nu[i] -= (pp.f_des()[i] / have[c]).ln();
            }
            let next = dual_objective(&pp, &nu);
            check!(next >= value - 1e-12, "seed {seed} step {step}: dual fell from {value} to {next}");
            value = next;
            steps += 1;
        }
    }
    let elapsed = start.elapsed();
    check!(worst <= 1e-4, "pairwise difference {worst:.2e}");
    check!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!("50 problems, pairwise max {worst:.1e}, dual nondecreasing over {steps} rake steps, {elapsed:.2?}"))
}

fn xlogx_over(x: f64, target: f64) -> f64 {
    if x < 0.0 {
        f64::INFINITY
    } else if x == 0.0 {
        0.0
    } else {
        x * (x / target).ln()
    }
}

fn within(lo: f64, hi: f64, g: impl Fn(f64) -> f64) -> impl Fn(f64) -> f64 {
    move |x| if x < lo || x > hi { f64::INFINITY } else { g(x) }
}

/// `x` is no worse than a 1e-4 grid around it in `g(x) + (x − v)²/(2t)`, up to 1e-8.
fn grid_optimal(g: impl Fn(f64) -> f64, x: f64, v: f64, t: f64) -> bool {
    let phi = |z: f64| g(z) + (z - v).powi(2) / (2.0 * t);
    phi(x) <= grid_min(&phi, x, 1e-2, 1e-4) + 1e-8
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut failures = Vec::new();
    let variants = ["equality", "least_squares", "absolute", "box", "kl", "entropy", "entropy_limited", "kl_limited"];
    for name in variants {
        for _ in 0..200 {
            let v: f64 = rng.random_range(-3.0..3.0);
            let t = 10f64.powf(rng.random_range(-1.5..1.0));
            let target: f64 = rng.random_range(0.05..1.0);
            let scale: f64 = rng.random_range(0.1..3.0);
            let kappa: f64 = rng.random_range(1.2..4.0);
            let ok = match name {
                "equality" => {
                    let x = prox_equality(&[target], &[v], t).unwrap()[0];
                    grid_optimal(|z| if z == target { 0.0 } else { f64::INFINITY }, x, v, t)
                }
                "least_squares" => {
                    let x = prox_least_squares(&[target], scale, &[v], t).unwrap()[0];
                    grid_optimal(|z| scale * scale * (z - target).powi(2), x, v, t)
                }
                "absolute" => {
                    let x = prox_absolute(&[target], scale, &[v], t).unwrap()[0];
                    grid_optimal(|z| scale * (z - target).abs(), x, v, t)
                }
                "box" => {
                    let hi = target + scale;
                    let x = prox_box(&[target], &[hi], &[v], t).unwrap()[0];
                    grid_optimal(within(target, hi, |_| 0.0), x, v, t)
                }
                "kl" => {
                    let x = prox_kl(&[target], &[v], t).unwrap()[0];
                    grid_optimal(|z| xlogx_over(z, target), x, v, t)
                }
                "entropy" => {
                    let x = prox_entropy_limited(None, 1, &[v], t).unwrap()[0];
                    grid_optimal(|z| xlogx_over(z, 1.0), x, v, t)
                }
                "entropy_limited" => {
                    let n = rng.random_range(1..6);
                    let (lo, hi) = (1.0 / (kappa * n as f64), kappa / n as f64);
                    let x = prox_entropy_limited(Some(kappa), n, &vec![v; n], t).unwrap()[0];
                    grid_optimal(within(lo, hi, |z| xlogx_over(z, 1.0)), x, v, t)
                }
                _ => {
                    let x = prox_kl_limited(&[target], Some(kappa), &[v], t).unwrap()[0];
                    grid_optimal(within(1.0 / kappa, kappa, |z| xlogx_over(z, target)), x, v, t)
                }
            };
            if !ok {
                failures.push(format!("{name} v={v} t={t}"));
            }
        }
    }
    check!(failures.is_empty(), "{} grid failures, first {}", failures.len(), failures[0]);

    let mut worst = 0.0f64;
    for step in 0..=1600 {
        let x = 10f64.powf(-8.0 + step as f64 * 0.01);
        let w = lambert_w(x).unwrap();
        worst = worst.max(((w * w.exp() - x) / x).abs());
    }
    check!(worst <= 1e-12, "Lambert W relative error {worst:.2e}");
    Ok(format!("{} prox instances grid-optimal, Lambert W relative error {worst:.1e}", 200 * variants.len()))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let v: [f64; 3] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
        worst = worst.max(max_abs_diff(&project_simplex(&v).unwrap(), &simplex_projection_grid(v)));
    }
    check!(worst <= 1e-6, "simplex projection off by {worst:.2e}");
    for case in 0..200 {
        let n = rng.random_range(1..=12);
        let k = rng.random_range(1..=n);
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-20..20) as f64 / 4.0).collect();
        let w = project_topk(&v, k).unwrap();
        check!(
            w.iter().filter(|&&x| x == 1.0 / k as f64).count() == k && w.iter().all(|&x| x == 0.0 || x == 1.0 / k as f64),
            "case {case}: not a k-selection"
        );
        let picked: f64 = top_k_indices(&v, k).unwrap().iter().map(|&i| v[i]).sum();
        check!((picked - best_k_subset_sum(&v, k)).abs() < 1e-12, "case {case}: top-k misses the best subset");
    }
    Ok(format!("simplex max error {worst:.1e} on 100 instances, top-k optimal on 200"))
}

const POPULATION: usize = 50_000;
const SUBSAMPLE: usize = 2000;
const LEVELS: [usize; 4] = [2, 5, 4, 6];

/// Synthetic population, its marginals, and a skewed subsample with a held-out column that
/// moves with the skew direction.
struct SkewInstance {
    part: Partition,
    f_des: Vec<f64>,
    sample: Vec<usize>,
    column: Vec<f64>,
}

fn skew_instance(seed: u64) -> SkewInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
    let part = Partition::random(POPULATION, &LEVELS, &mut rng);
    let full = matrix_of(&part);
    let drawn = skewed_subsample_detailed(&full, SUBSAMPLE, seed).unwrap();
    let offsets = part.offsets();
    let scores: Vec<f64> = (0..POPULATION)
        .map(|j| part.codes.iter().zip(&offsets).map(|(codes, &o)| drawn.direction[o + codes[j]]).sum())
        .collect();
    let column = column_along(&scores, 4.0, &mut rng);
    let f_des = part.marginals(&vec![1.0 / POPULATION as f64; POPULATION]);
    SkewInstance { part, f_des, sample: drawn.indices, column }
}

fn subsample_partition(part: &Partition, rows: &[usize]) -> Partition {
    Partition {
        levels: part.levels.clone(),
        codes: part.codes.iter().map(|c| rows.iter().map(|&j| c[j]).collect()).collect(),
    }
}

fn max_entropy_weights(inst: &SkewInstance) -> (Vec<f64>, Partition) {
    let sub = subsample_partition(&inst.part, &inst.sample);
    let problem = partition_problem(&sub, &inst.f_des, equality, entropy_reg());
    let sol = solve(&problem, &SolverConfig::default()).unwrap();
    assert_eq!(sol.status, Status::Converged);
    (sol.w, sub)
}

fn criterion_5() -> Outcome {
    let mut worst_gap = 0.0f64;
    let mut highest = 0.0f64;
    for seed in 0..5 {
        let inst = skew_instance(seed);
        let (w, sub) = max_entropy_weights(&inst);
        let h = entropy(&w);
        let gap = max_abs_diff(&sub.marginals(&w), &inst.f_des);
        check!(h < (SUBSAMPLE as f64).ln(), "seed {seed}: entropy {h} not below log n");
        check!(gap <= 1e-5, "seed {seed}: ‖Fw − f_des‖∞ = {gap:.2e}");
        worst_gap = worst_gap.max(gap);
        highest = highest.max(h);
    }
    Ok(format!(
        "5 skewed subsamples, entropy at most {highest:.3} < log n = {:.3}, marginal error at most {worst_gap:.1e}",
        (SUBSAMPLE as f64).ln()
    ))
}

fn criterion_6() -> Outcome {
    let mut improved = 0;
    let (mut before, mut after) = (0.0, 0.0);
    for seed in 0..50 {
        let inst = skew_instance(seed);
        let (w, _) = max_entropy_weights(&inst);
        let values: Vec<f64> = inst.sample.iter().map(|&j| inst.column[j]).collect();
        let population = WeightedSample::uniform(inst.column.clone()).unwrap();
        let unweighted = ks_statistic(&WeightedSample::uniform(values.clone()).unwrap(), &population).unwrap();
        let weighted = ks_statistic(&WeightedSample::new(values, w).unwrap(), &population).unwrap();
        if weighted < unweighted {
            improved += 1;
        }
        before += unweighted / 50.0;
        after += weighted / 50.0;
    }
    check!(improved >= 45, "weighted K-S better on only {improved}/50 seeds");
    Ok(format!("weighted K-S better on {improved}/50 seeds, mean {before:.3} unweighted vs {after:.3} weighted"))
}

fn kl_loss(fw: &[f64], target: &[f64]) -> f64 {
    fw.iter().zip(target).map(|(&f, &t)| if f > 0.0 { f * (f / t).ln() } else { 0.0 }).sum()
}

fn criterion_7() -> Outcome {
    const K: usize = 100;
    const DRAWS: usize = 200;
    let mut wins = 0;
    let mut slowest = Duration::ZERO;
    for seed in 0..50 {
        let inst = skew_instance(seed);
        let sub = subsample_partition(&inst.part, &inst.sample);

        let start = Instant::now();
        let problem = partition_problem(&sub, &inst.f_des, kl, RegularizerSpec::Boolean { k: K });
        let sol = solve(&problem, &SolverConfig { seed, ..SolverConfig::default() }).unwrap();
        slowest = slowest.max(start.elapsed());
        check!(
            sol.w.iter().filter(|&&x| x == 1.0 / K as f64).count() == K && sol.w.iter().all(|&x| x == 0.0 || x == 1.0 / K as f64),
            "seed {seed}: selection is not k-sparse with equal weights"
        );
        let selected = kl_loss(&sub.marginals(&sol.w), &inst.f_des);

        // baseline: k-subsets drawn without replacement from the raked maximum-entropy weights
        let me = rake(&partitioned(&sub, &inst.f_des), 1000, 1e-12).unwrap().weights;
        let mut rng = ChaCha8Rng::seed_from_u64(20_000 + seed);
        let mut losses: Vec<f64> = (0..DRAWS)
            .map(|_| {
                let picked = sample_weighted(&mut rng, SUBSAMPLE, |j| me[j], K).unwrap();
                let mut w = vec![0.0; SUBSAMPLE];
                for j in picked.iter() {
                    w[j] = 1.0 / K as f64;
                }
                kl_loss(&sub.marginals(&w), &inst.f_des)
            })
            .collect();
        losses.sort_by(f64::total_cmp);
        let median = 0.5 * (losses[DRAWS / 2 - 1] + losses[DRAWS / 2]);
        if selected < median {
            wins += 1;
        }
    }
    check!(wins >= 45, "selection beat the baseline median on only {wins}/50 seeds");
    check!(slowest < Duration::from_secs(30), "slowest instance took {slowest:?}");
    Ok(format!("selection below the baseline median on {wins}/50 seeds, slowest solve {slowest:.2?}"))
}

fn criterion_8() -> Outcome {
    let levels = [318, 2, 32, 5];
    let n = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let part = Partition::random(n, &levels, &mut rng);
    // the first attribute is unrecorded for some samples and gets mean-filled
    let mut triplets = Vec::new();
    let mut missing = Vec::new();
    for (i, j, v) in part.triplets() {
        if i < levels[0] && j >= levels[0] && rng.random::<f64>() < 0.027 {
            missing.extend((0..levels[0]).map(|r| (r, j)));
        } else {
            triplets.push((i, j, v));
        }
    }
    let raw = SampleMatrix::new(part.m(), n, triplets, missing).unwrap();
    let matrix = fill_missing(&raw, &compute_desired(&raw).unwrap()).unwrap();
    let density = matrix.entries().len() as f64 / (part.m() * n) as f64;
    check!((0.03..=0.04).contains(&density), "density {density:.4}");
    let target = matrix.mul_vec(&random_positive_weights(n, 1.0, &mut rng));

    let problem = WeightingProblem {
        matrix,
        layout: BlockLayout::sequential([("all", equality(target.clone()))]).unwrap(),
        regularizer: entropy_reg(),
        lambda: 1.0,
    };
    let start = Instant::now();
    let sol = solve(&problem, &SolverConfig::default()).unwrap();
    let elapsed = start.elapsed();
    check!(sol.status == Status::Converged, "status {:?} after {} iterations", sol.status, sol.iterations);
    check!(elapsed < Duration::from_secs(120), "took {elapsed:?}");
    let gap = max_abs_diff(&sol.f, &target);
    Ok(format!(
        "n = {n}, m = {}, density {:.2}%, converged in {} iterations, {elapsed:.2?}, ‖Fw − f_des‖∞ {gap:.1e}",
        part.m(),
        100.0 * density,
        sol.iterations
    ))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for case in 0..20 {
        let m = rng.random_range(2..6);
        let n = rng.random_range(15..60);
        let dense: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 }).collect())
            .collect();
        let w0 = random_positive_weights(n, 0.7, &mut rng);
        let target: Vec<f64> = dense.iter().map(|row| row.iter().zip(&w0).map(|(a, b)| a * b).sum()).collect();
        let solutions: Vec<Vec<f64>> = [0.1, 1.0, 10.0]
            .iter()
            .map(|&lambda| {
                let problem = WeightingProblem {
                    matrix: SampleMatrix::from_dense(&dense).unwrap(),
                    layout: BlockLayout::sequential([("all", equality(target.clone()))]).unwrap(),
                    regularizer: entropy_reg(),
                    lambda,
                };
                solve(&problem, &tight()).unwrap().w
            })
            .collect();
        let diff = max_abs_diff(&solutions[0], &solutions[1]).max(max_abs_diff(&solutions[1], &solutions[2]));
        check!(diff <= 1e-5, "case {case}: λ changes w by {diff:.2e}");
        worst = worst.max(diff);
    }
    Ok(format!("20 instances, largest difference across λ ∈ {{0.1, 1, 10}} {worst:.1e}"))
}

fn repweight(dir: &Path, args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_repweight"))
        .args(args)
        .current_dir(dir)
        .status()
        .unwrap()
        .code()
        .unwrap()
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let pop = Population::generate(3000, &[2, 3, 4], &mut rng);
    pop.write_csv(&root.join("population.csv"), None).unwrap();
    let rows: Vec<usize> = (0..3000).filter(|_| rng.random::<f64>() < 0.2).collect();
    pop.write_csv(&root.join("sample.csv"), Some(&rows)).unwrap();

    let mut base = String::from("version = 1\ninput = \"sample.csv\"\nreference = \"population.csv\"\nseed = 17\n");
    for name in ["attr0", "attr1", "attr2"] {
        base += &format!("[[columns]]\nname = \"{name}\"\ntype = \"categorical\"\n");
    }
    base += "[[columns]]\nname = \"height\"\ntype = \"numeric\"\n";
    let groups = |loss: &str| -> String {
        ["attr0", "attr1", "attr2"]
            .iter()
            .map(|c| format!("[[groups]]\nkind = \"cross\"\ncolumns = [\"{c}\"]\nloss = \"{loss}\"\n"))
            .collect()
    };
    let configs = [
        ("solve", format!("{base}{}", groups("equality"))),
        ("select", format!("{base}{}[regularizer]\nkind = \"boolean\"\nk = 30\n[select]\nbaseline_draws = 20\n", groups("kl"))),
        ("rake", format!("{base}{}", groups("equality"))),
        ("compare", format!("{base}{}[compare]\ncolumn = \"height\"\nweights = [\"solve_a/weights.csv\"]\n", groups("equality"))),
        ("skew", format!("{base}{}[skew]\nsize = 100\n", groups("equality"))),
    ];
    for (command, config) in &configs {
        std::fs::write(root.join(format!("{command}.toml")), config).unwrap();
    }

    let mut files = 0;
    for (command, _) in &configs {
        let config = format!("{command}.toml");
        let outputs = [format!("{command}_a"), format!("{command}_b")];
        for out in &outputs {
            let code = repweight(root, &[command, "--config", &config, "--output", out]);
            check!(code == 0 || code == 2, "{command} exited {code}");
        }
        let mut names: Vec<_> = std::fs::read_dir(root.join(&outputs[0]))
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        names.sort();
        check!(!names.is_empty(), "{command} wrote nothing");
        for name in names {
            let a = std::fs::read(root.join(&outputs[0]).join(&name)).unwrap();
            let b = std::fs::read(root.join(&outputs[1]).join(&name));
            check!(b.as_ref().ok() == Some(&a), "{command}: {} differs between runs", name.to_string_lossy());
            files += 1;
        }
    }
    Ok(format!("solve, select, rake, compare and skew reproduce all {files} output files byte for byte"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("post-stratification ground truth", criterion_1),
        ("method equivalence", criterion_2),
        ("prox oracle suite", criterion_3),
        ("projection oracles", criterion_4),
        ("maximum-entropy sanity", criterion_5),
        ("K-S improvement", criterion_6),
        ("representative selection", criterion_7),
        ("scale check", criterion_8),
        ("lambda invariance", criterion_9),
        ("CLI determinism", criterion_10),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
