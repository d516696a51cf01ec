use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use repweight::admm::{block_losses, loss_value};
use repweight::analysis::{entropy, ks_statistic, weighted_cdf, weighted_mean, write_cdf_csv, WeightedSample};
use repweight::ingest::{skewed_subsample_detailed, FeatureGroup};
use repweight::raking::{rake, PartitionedProblem};
use repweight::sampling::sample_without_replacement;
use repweight::{LossSpec, RegularizerSpec, Solution, Status};
use serde_json::{json, Value};

use crate::config::Run;
use crate::output::{num, nums, read_weights, write_indices, write_json, write_residuals, write_weights};
use crate::pipeline::{feature_plan, filled_features, load_tables, prepare, Prepared};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

fn exit_code(status: Status) -> i32 {
    match status {
        Status::Converged => EXIT_OK,
        Status::MaxIterations | Status::Diverged => EXIT_NOT_CONVERGED,
        Status::Infeasible => EXIT_INFEASIBLE,
    }
}

fn status_name(status: Status) -> &'static str {
    match status {
        Status::Converged => "converged",
        Status::MaxIterations => "max_iterations",
        Status::Infeasible => "infeasible",
        Status::Diverged => "diverged",
    }
}

fn note(verbose: bool, message: impl AsRef<str>) {
    if verbose {
        eprintln!("{}", message.as_ref());
    }
}

fn output_dir(run: &Run) -> Result<&Path> {
    std::fs::create_dir_all(&run.output)
        .with_context(|| format!("cannot create output directory {}", run.output.display()))?;
    Ok(&run.output)
}

fn describe(prep: &Prepared, verbose: bool) {
    note(
        verbose,
        format!(
            "problem: n = {}, m = {}, {} groups, {} filled entries",
            prep.problem.n(),
            prep.problem.m(),
            prep.problem.layout.blocks().len(),
            prep.filled
        ),
    );
}

fn block_report(prep: &Prepared, w: &[f64]) -> Value {
    let p = &prep.problem;
    let losses = block_losses(p, &p.matrix.mul_vec(w));
    Value::Array(
        p.layout
            .blocks()
            .iter()
            .zip(losses)
            .map(|(b, value)| json!({ "name": b.name, "loss": b.loss.kind(), "value": num(value) }))
            .collect(),
    )
}

fn solution_report(command: &str, prep: &Prepared, sol: &Solution) -> Value {
    json!({
        "command": command,
        "status": status_name(sol.status),
        "iterations": sol.iterations,
        "primal_residual": num(sol.primal_residual.last().copied().unwrap_or(f64::NAN)),
        "dual_residual": num(sol.dual_residual.last().copied().unwrap_or(f64::NAN)),
        "objective": num(sol.objective),
        "entropy": num(entropy(&sol.w)),
        "n": prep.problem.n(),
        "m": prep.problem.m(),
        "filled_entries": prep.filled,
        "blocks": block_report(prep, &sol.w),
    })
}

pub fn solve(run: &Run, verbose: bool) -> Result<i32> {
    let prep = prepare(run)?;
    if !prep.problem.regularizer.is_convex() {
        bail!("the boolean regularizer is not convex; use the `select` command");
    }
    describe(&prep, verbose);
    let sol = repweight::solve(&prep.problem, &run.config.solver)?;
    note(verbose, format!("{} after {} iterations", status_name(sol.status), sol.iterations));

    let out = output_dir(run)?;
    write_weights(&out.join("weights.csv"), &sol.w)?;
    write_residuals(&out.join("residuals.csv"), &sol.primal_residual, &sol.dual_residual)?;
    write_json(&out.join("diagnostics.json"), &solution_report("solve", &prep, &sol))?;
    Ok(exit_code(sol.status))
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

pub fn select(run: &Run, verbose: bool) -> Result<i32> {
    let prep = prepare(run)?;
    let RegularizerSpec::Boolean { k } = prep.problem.regularizer else {
        bail!("select needs a boolean regularizer (kind = \"boolean\")");
    };
    describe(&prep, verbose);
    let p = &prep.problem;
    let sol = repweight::solve(p, &run.config.solver)?;
    let loss = loss_value(p, &sol.w);
    let selected: Vec<usize> = (0..p.n()).filter(|&i| sol.w[i] > 0.0).collect();
    note(verbose, format!("selected {k} samples, loss {loss}"));

    let draws = run.config.select.baseline_draws;
    let baseline = if draws > 0 {
        let relaxed = repweight::solve(&p.max_entropy_relaxation(), &run.config.solver)?;
        let mut rng = ChaCha8Rng::seed_from_u64(run.config.seed);
        // stream 0 seeds the solver's own draws
        rng.set_stream(1);
        let mut losses = Vec::with_capacity(draws);
        for _ in 0..draws {
            let picked = sample_without_replacement(&relaxed.w, k, &mut rng)?;
            let mut w = vec![0.0; p.n()];
            for i in picked {
                w[i] = 1.0 / k as f64;
            }
            losses.push(loss_value(p, &w));
        }
        let mut sorted = losses.clone();
        sorted.sort_by(f64::total_cmp);
        let above = losses.iter().filter(|&&l| l > loss).count();
        note(verbose, format!("baseline median loss {}", median(&sorted)));
        json!({
            "draws": draws,
            "max_entropy_status": status_name(relaxed.status),
            "median": num(median(&sorted)),
            "mean": num(losses.iter().sum::<f64>() / draws as f64),
            "min": num(sorted[0]),
            "max": num(sorted[draws - 1]),
            "worse_than_selection": above,
        })
    } else {
        Value::Null
    };

    let out = output_dir(run)?;
    write_weights(&out.join("weights.csv"), &sol.w)?;
    write_indices(&out.join("selected.csv"), &selected)?;
    write_residuals(&out.join("residuals.csv"), &sol.primal_residual, &sol.dual_residual)?;
    let mut report = solution_report("select", &prep, &sol);
    report["k"] = json!(k);
    report["loss"] = num(loss);
    report["baseline"] = baseline;
    write_json(&out.join("selection.json"), &report)?;
    Ok(exit_code(sol.status))
}

pub fn rake_cmd(run: &Run, verbose: bool) -> Result<i32> {
    for g in &run.config.groups {
        ensure!(
            matches!(g.feature, FeatureGroup::Cross { .. }),
            "raking needs cross groups only; '{}' is not one",
            g.feature.name()
        );
    }
    let prep = prepare(run)?;
    ensure!(prep.filled == 0, "raking needs complete categorical data; {} entries are missing", prep.filled);
    if let Some(b) = prep.problem.layout.blocks().iter().find(|b| !matches!(b.loss, LossSpec::Equality { .. })) {
        bail!("raking needs equality losses; group '{}' has {}", b.name, b.loss.kind());
    }
    describe(&prep, verbose);
    let pp = PartitionedProblem::from_problem(&prep.problem)?;
    let result = rake(&pp, run.config.rake.max_passes, run.config.rake.tol)?;
    note(verbose, format!("{} passes, max marginal error {}", result.passes, result.max_error));

    let degenerate: Vec<Value> = result
        .degenerate
        .iter()
        .map(|&(s, c)| json!(prep.labels[pp.selectors()[s].start + c]))
        .collect();
    let out = output_dir(run)?;
    write_weights(&out.join("weights.csv"), &result.weights)?;
    write_json(
        &out.join("diagnostics.json"),
        &json!({
            "command": "rake",
            "status": if result.converged { "converged" } else { "max_passes" },
            "passes": result.passes,
            "max_marginal_error": num(result.max_error),
            "entropy": num(entropy(&result.weights)),
            "n": pp.n(),
            "m": pp.m(),
            "degenerate_categories": degenerate,
            "blocks": block_report(&prep, &result.weights),
        }),
    )?;
    Ok(if result.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

/// Non-missing values of a numeric column with their row indices.
fn present(values: &[Option<f64>]) -> (Vec<usize>, Vec<f64>) {
    values.iter().enumerate().filter_map(|(i, v)| v.map(|x| (i, x))).unzip()
}

fn restricted_sample(rows: &[usize], values: &[f64], w: &[f64], what: &str) -> Result<WeightedSample> {
    let kept: Vec<f64> = rows.iter().map(|&i| w[i]).collect();
    let total: f64 = kept.iter().sum();
    ensure!(total > 0.0, "{what}: no weight on rows with a value");
    Ok(WeightedSample::new(values.to_vec(), kept.into_iter().map(|x| x / total).collect())?)
}

pub fn compare(run: &Run, verbose: bool) -> Result<i32> {
    let section = run.config.compare.as_ref().context("config has no [compare] section")?;
    ensure!(section.points >= 2, "compare needs at least 2 evaluation points");
    let (sample, reference) = load_tables(run)?;
    let reference = reference.context("compare needs a reference table")?;
    let (rows, values) = present(sample.numeric(&section.column)?);
    let (_, ref_values) = present(reference.numeric(&section.column)?);
    ensure!(!values.is_empty() && !ref_values.is_empty(), "column '{}' has no values", section.column);
    let dropped = sample.n() - rows.len();
    note(verbose, format!("{} sample values ({dropped} missing), {} reference values", values.len(), ref_values.len()));

    let reference_ws = WeightedSample::uniform(ref_values.clone())?;
    let unweighted = restricted_sample(&rows, &values, &vec![1.0; sample.n()], "uniform weights")?;

    let lo = values.iter().chain(&ref_values).copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().chain(&ref_values).copied().fold(f64::NEG_INFINITY, f64::max);
    let steps = (section.points - 1) as f64;
    let points: Vec<f64> = (0..section.points)
        .map(|i| if i + 1 == section.points { hi } else { lo + (hi - lo) * i as f64 / steps })
        .collect();

    let out = output_dir(run)?;
    let write_curve = |name: &str, ws: &WeightedSample| -> Result<()> {
        let cdf = weighted_cdf(ws, &points)?;
        let path = out.join(name);
        let file = std::fs::File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
        write_cdf_csv(std::io::BufWriter::new(file), &points, &cdf)?;
        Ok(())
    };
    write_curve("cdf_reference.csv", &reference_ws)?;
    write_curve("cdf_unweighted.csv", &unweighted)?;

    let mut weighted = Vec::new();
    for (idx, path) in section.weights.iter().enumerate() {
        let w = read_weights(&run.resolve(path))?;
        ensure!(
            w.len() == sample.n(),
            "{} has {} weights but the table has {} rows",
            path.display(),
            w.len(),
            sample.n()
        );
        let ws = restricted_sample(&rows, &values, &w, &path.display().to_string())?;
        let ks = ks_statistic(&ws, &reference_ws)?;
        note(verbose, format!("{}: K-S {ks}", path.display()));
        let name = if idx == 0 { "cdf_weighted.csv".to_string() } else { format!("cdf_weighted_{}.csv", idx + 1) };
        write_curve(&name, &ws)?;
        weighted.push(json!({
            "weights": path.display().to_string(),
            "ks": num(ks),
            "mean": num(weighted_mean(&ws)),
            "cdf": name,
        }));
    }

    write_json(
        &out.join("compare.json"),
        &json!({
            "command": "compare",
            "column": section.column,
            "sample_values": values.len(),
            "missing_values": dropped,
            "reference_values": ref_values.len(),
            "reference_mean": num(weighted_mean(&reference_ws)),
            "unweighted": { "ks": num(ks_statistic(&unweighted, &reference_ws)?), "mean": num(weighted_mean(&unweighted)) },
            "weighted": weighted,
        }),
    )?;
    Ok(EXIT_OK)
}

pub fn skew(run: &Run, verbose: bool) -> Result<i32> {
    let section = run.config.skew.as_ref().context("config has no [skew] section")?;
    let (table, _) = load_tables(run)?;
    let plan = feature_plan(run)?;
    plan.validate(&table)?;
    let labels = plan.row_labels(&table)?;
    let f = filled_features(&table, &plan)?;
    let seed = run.config.seed;
    let drawn = skewed_subsample_detailed(&f, section.size, seed)?;
    note(verbose, format!("drew {} of {} rows with seed {seed}", section.size, table.n()));

    let input = run.resolve(&run.config.input);
    let mut reader = csv::Reader::from_path(&input).with_context(|| format!("cannot read {}", input.display()))?;
    let header = reader.headers()?.clone();
    let records = reader.records().collect::<std::result::Result<Vec<_>, _>>()?;
    let out = output_dir(run)?;
    let mut writer = csv::Writer::from_path(out.join("subsample.csv"))?;
    writer.write_record(&header)?;
    for &i in &drawn.indices {
        writer.write_record(&records[i])?;
    }
    writer.flush()?;

    let n = table.n();
    let full = f.mul_vec(&vec![1.0 / n as f64; n]);
    let mut sub_w = vec![0.0; n];
    for &i in &drawn.indices {
        sub_w[i] = 1.0 / drawn.indices.len() as f64;
    }
    let sub = f.mul_vec(&sub_w);
    let pi = &drawn.probabilities;
    let rows: Vec<Value> = labels
        .iter()
        .enumerate()
        .map(|(i, label)| {
            json!({ "row": label, "full": num(full[i]), "subsample": num(sub[i]) })
        })
        .collect();
    write_json(
        &out.join("skew.json"),
        &json!({
            "command": "skew",
            "seed": seed,
            "size": section.size,
            "n": n,
            "marginals": rows,
            "probabilities": {
                "min": num(pi.iter().copied().fold(f64::INFINITY, f64::min)),
                "max": num(pi.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
                "mean": num(1.0 / n as f64),
                "effective_size": num(1.0 / pi.iter().map(|p| p * p).sum::<f64>()),
            },
            "direction": nums(&drawn.direction),
            "indices": drawn.indices,
        }),
    )?;
    Ok(EXIT_OK)
}
