use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use repweight::raking::{dual_objective, rake, rake_step, DualState, PartitionedProblem};
use repweight::*;
use repweight_testkit::{dual_value_and_weights, max_entropy_dual_newton, random_positive_weights, Partition};

fn instance(seed: u64, n: usize, levels: &[usize]) -> (PartitionedProblem, Partition) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let part = Partition::random(n, levels, &mut rng);
    let w0 = random_positive_weights(n, 1.0, &mut rng);
    let f_des = part.marginals(&w0);
    let matrix = SampleMatrix::new(part.m(), n, part.triplets(), vec![]).unwrap();
    let offsets = part.offsets();
    let selectors = offsets.iter().zip(levels).map(|(&o, &l)| o..o + l).collect();
    (PartitionedProblem::new(&matrix, selectors, f_des).unwrap(), part)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn dual_at_zero_is_minus_log_n() {
    let (pp, _) = instance(1, 37, &[3, 2]);
    assert!((dual_objective(&pp, &vec![0.0; pp.m()]) + 37f64.ln()).abs() < 1e-12);
}

#[test]
fn dual_is_invariant_to_selector_shifts() {
    let (pp, _) = instance(2, 40, &[3, 4]);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let nu: Vec<f64> = (0..pp.m()).map(|_| rng.random_range(-2.0..2.0)).collect();
    let mut shifted = nu.clone();
    for x in &mut shifted[3..7] {
        *x += 1.7;
    }
    assert!((dual_objective(&pp, &nu) - dual_objective(&pp, &shifted)).abs() < 1e-12);
}

#[test]
fn dual_equals_lagrangian_at_implied_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for seed in 0..20 {
        let (pp, part) = instance(seed, 25, &[2, 3, 4]);
        let nu: Vec<f64> = (0..pp.m()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let w = DualState { nu: nu.clone() }.implied_weights(&pp);
        let fw = part.marginals(&w);
        let lagrangian: f64 = w.iter().map(|x| x * x.ln()).sum::<f64>()
            + nu.iter().zip(fw.iter().zip(pp.f_des())).map(|(v, (a, b))| v * (a - b)).sum::<f64>();
        assert!((dual_objective(&pp, &nu) - lagrangian).abs() < 1e-10);
        let (oracle_value, oracle_w) = dual_value_and_weights(&part.dense(), pp.f_des(), &nu);
        assert!((dual_objective(&pp, &nu) - oracle_value).abs() < 1e-10);
        assert!(max_abs_diff(&w, &oracle_w) < 1e-14);
    }
}

#[test]
fn rake_steps_ascend_the_dual() {
    for seed in 0..20 {
        let (pp, _) = instance(seed, 200, &[2, 5, 3]);
        let mut w = vec![1.0 / 200.0; 200];
        let mut nu = vec![0.0; pp.m()];
        let mut value = dual_objective(&pp, &nu);
        for step in 0..30 {
            let s = step % pp.selectors().len();
            let range = pp.selectors()[s].clone();
            let before = pp.marginal(s, &w);
            w = rake_step(&pp, &w, s).unwrap();
            // the multiplicative factor want/have corresponds to ν ← ν − log(want/have)
            for (c, i) in range.clone().enumerate() {
                nu[i] -= (pp.f_des()[i] / before[c]).ln();
            }
            assert!(max_abs_diff(&pp.marginal(s, &w), &pp.f_des()[range]) < 1e-12);
            assert!(max_abs_diff(&DualState { nu: nu.clone() }.implied_weights(&pp), &w) < 1e-12);
            let next = dual_objective(&pp, &nu);
            assert!(next >= value - 1e-12, "seed {seed} step {step}: {next} < {value}");
            value = next;
            assert!(w.iter().all(|&x| x > 0.0));
        }
    }
}

#[test]
fn two_binary_attributes_match_newton() {
    // one sample per cell of a 2 × 2 table
    let dense = vec![
        vec![1.0, 1.0, 0.0, 0.0],
        vec![0.0, 0.0, 1.0, 1.0],
        vec![1.0, 0.0, 1.0, 0.0],
        vec![0.0, 1.0, 0.0, 1.0],
    ];
    let f_des = vec![0.6, 0.4, 0.7, 0.3];
    let matrix = SampleMatrix::from_dense(&dense).unwrap();
    let pp = PartitionedProblem::new(&matrix, vec![0..2, 2..4], f_des.clone()).unwrap();
    let raked = rake(&pp, 1000, 1e-13).unwrap();
    assert!(raked.converged);
    let oracle = max_entropy_dual_newton(&dense, &f_des);
    assert!(max_abs_diff(&raked.weights, &oracle) < 1e-8);
    // independence is the maximum-entropy table
    assert!(max_abs_diff(&raked.weights, &[0.42, 0.18, 0.28, 0.12]) < 1e-8);
}

#[test]
fn raking_agrees_with_admm_and_newton() {
    for seed in 0..5 {
        let (pp, part) = instance(seed + 100, 300, &[2, 4, 6]);
        let raked = rake(&pp, 10_000, 1e-10).unwrap();
        assert!(raked.converged);
        let oracle = max_entropy_dual_newton(&part.dense(), pp.f_des());
        assert!(max_abs_diff(&raked.weights, &oracle) < 1e-8);

        let offsets = part.offsets();
        let layout = BlockLayout::sequential(part.levels.iter().zip(&offsets).enumerate().map(|(a, (&l, &o))| {
            (format!("attr{a}"), LossSpec::Equality { target: pp.f_des()[o..o + l].to_vec() })
        }))
        .unwrap();
        let p = WeightingProblem {
            matrix: SampleMatrix::new(part.m(), part.n(), part.triplets(), vec![]).unwrap(),
            layout,
            regularizer: RegularizerSpec::Entropy { limit: None },
            lambda: 1.0,
        };
        let sol = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(sol.status, Status::Converged);
        assert!(max_abs_diff(&sol.w, &raked.weights) < 1e-4);
        assert_eq!(PartitionedProblem::from_problem(&p).unwrap().f_des(), pp.f_des());
    }
}

#[test]
fn post_stratification_in_one_pass() {
    let female: Vec<f64> = (0..10).map(|j| if j < 4 { 1.0 } else { 0.0 }).collect();
    let male: Vec<f64> = female.iter().map(|x| 1.0 - x).collect();
    let matrix = SampleMatrix::from_dense(&[female, male]).unwrap();
    let pp = PartitionedProblem::new(&matrix, vec![0..2], vec![0.5, 0.5]).unwrap();
    let raked = rake(&pp, 10, 1e-12).unwrap();
    assert_eq!(raked.passes, 1);
    assert!((raked.weights[0] - 0.125).abs() < 1e-15);
    assert!((raked.weights[9] - 0.5 / 6.0).abs() < 1e-15);
}

#[test]
fn empty_category_with_mass_is_unmatchable() {
    let matrix = SampleMatrix::from_dense(&[vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
    let pp = PartitionedProblem::new(&matrix, vec![0..2], vec![0.5, 0.5]).unwrap();
    assert!(matches!(rake(&pp, 10, 1e-10), Err(Error::UnmatchableMarginal { .. })));
    let ok = PartitionedProblem::new(&matrix, vec![0..2], vec![1.0, 0.0]).unwrap();
    assert_eq!(rake(&ok, 10, 1e-10).unwrap().weights, vec![0.5, 0.5]);
}

#[test]
fn overlapping_partition_is_rejected() {
    let matrix = SampleMatrix::from_dense(&[vec![1.0, 1.0], vec![1.0, 0.0]]).unwrap();
    assert!(PartitionedProblem::new(&matrix, vec![0..2], vec![0.5, 0.5]).is_err());
}
