//! Acceptance suite. Runs every exit criterion, prints one PASS/FAIL line
//! per criterion and exits non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use mpseg_core::eval::{parse_epsilon_grid, run_epsilon_sweep, run_threshold_ablation};
use mpseg_core::profile::{sliding_dot_products, StompRows};
use mpseg_core::segmentation::idealized_arc_count;
use mpseg_core::{
    brute_force_profile, conv_profile, generate_clean, generate_synthetic, run_pipeline, score,
    stomp_profile, znorm_distance, ConvOptions, Dataset, GroundTruth, MatrixProfile,
    PipelineConfig, SyntheticSpec, TimeSeries, WindowConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Uniform noise for even seeds, a random walk for odd ones.
fn random_series(rng: &mut ChaCha8Rng, n: usize, walk: bool) -> TimeSeries {
    let mut level = 0.0;
    let values = (0..n)
        .map(|_| {
            let step: f64 = rng.random_range(-1.0..1.0);
            if walk {
                level += step;
                level
            } else {
                step
            }
        })
        .collect();
    TimeSeries::new(values).unwrap()
}

/// Best and runner-up masked distances for query `i`, from scratch.
fn brute_row_margin(t: &[f64], m: usize, zone: usize, i: usize) -> f64 {
    let l = t.len() - m + 1;
    let mut best = f64::INFINITY;
    let mut second = f64::INFINITY;
    for j in 0..l {
        if i.abs_diff(j) <= zone {
            continue;
        }
        let d = znorm_distance(&t[i..i + m], &t[j..j + m]).unwrap();
        if d < best {
            second = best;
            best = d;
        } else if d < second {
            second = d;
        }
    }
    second - best
}

fn compare_to_oracle(
    t: &[f64],
    oracle: &MatrixProfile,
    other: &MatrixProfile,
    label: &str,
) -> Result<f64, String> {
    let mut max_dp: f64 = 0.0;
    for i in 0..oracle.len() {
        let dp = (oracle.distances[i] - other.distances[i]).abs();
        max_dp = max_dp.max(dp);
        if oracle.indices[i] != other.indices[i] {
            let margin = brute_row_margin(t, oracle.m, oracle.exclusion_zone, i);
            ensure(margin < 1e-4, || {
                format!(
                    "{label}: I[{i}] = {} vs oracle {} with runner-up margin {margin:.3e}",
                    other.indices[i], oracle.indices[i]
                )
            })?;
        }
    }
    ensure(max_dp <= 1e-5, || {
        format!("{label}: max |dP| = {max_dp:.3e}")
    })?;
    Ok(max_dp)
}

fn oracle_equivalence() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0001);
    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let n = rng.random_range(100..=1000);
        let m = [8, 16, 50][case % 3];
        let t = random_series(&mut rng, n, case % 2 == 1);
        let cfg = WindowConfig::new(m).unwrap();
        let oracle = brute_force_profile(&t, &cfg).map_err(|e| e.to_string())?;
        let stomp = stomp_profile(&t, &cfg).map_err(|e| e.to_string())?;
        let conv =
            conv_profile(&t, &cfg, ConvOptions::new(64, 2).unwrap()).map_err(|e| e.to_string())?;
        for (mp, label) in [(&stomp, "stomp"), (&conv, "conv")] {
            let dp = compare_to_oracle(t.values(), &oracle, mp, &format!("case {case} {label}"))?;
            worst = worst.max(dp);
        }
    }
    let secs = started.elapsed().as_secs_f64();
    ensure(secs <= 60.0, || format!("took {secs:.1}s > 60s"))?;
    Ok(format!("200 series, max |dP| {worst:.2e}, {secs:.1}s"))
}

fn partition_determinism() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0002);
    for case in 0..20 {
        let n = rng.random_range(150..=800);
        let m = [8, 16, 50, 32][case % 4];
        let t = random_series(&mut rng, n, case % 2 == 0);
        let cfg = WindowConfig::new(m).unwrap();
        let l = n - m + 1;
        let reference = conv_profile(&t, &cfg, ConvOptions::new(l, 1).unwrap()).unwrap();
        for batch in [1, 7, 64, l] {
            for workers in [1, 4] {
                let mp = conv_profile(&t, &cfg, ConvOptions::new(batch, workers).unwrap()).unwrap();
                let same = mp.indices == reference.indices
                    && mp
                        .distances
                        .iter()
                        .zip(&reference.distances)
                        .all(|(a, b)| a.to_bits() == b.to_bits());
                ensure(same, || {
                    format!("case {case}: batch {batch} workers {workers} differs")
                })?;
            }
        }
    }
    Ok("20 instances x batch {1,7,64,l} x workers {1,4} bit-identical".into())
}

fn recurrence_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0003);
    // Sensor-like samples: a positive offset plus a bounded signal.
    let t: Vec<f64> = (0..3000)
        .map(|i| 20.0 + (i as f64 * 0.05).sin() + rng.random_range(-0.5..0.5))
        .collect();
    let m = 100;
    let l = t.len() - m + 1;
    let diagonals: Vec<usize> = (0..50).map(|_| rng.random_range(1..l - 1)).collect();
    let mut rows = StompRows::new(&t, m).unwrap();
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    let mut i = 0;
    while let Some(row) = rows.next_row() {
        for &k in &diagonals {
            let j = i + k;
            if j >= l {
                continue;
            }
            let direct = sliding_dot_products(&t[i..i + m], &t[j..j + m]).unwrap()[0];
            let rel = (row[j] - direct).abs() / direct.abs();
            worst = worst.max(rel);
            checked += 1;
        }
        i += 1;
    }
    ensure(worst <= 1e-9, || format!("max relative error {worst:.3e}"))?;
    Ok(format!(
        "{checked} cells on 50 diagonals, max rel err {worst:.2e}"
    ))
}

fn iac_exactness() -> Outcome {
    for l in [2usize, 7, 100, 10001] {
        let iac = idealized_arc_count(l).map_err(|e| e.to_string())?;
        ensure(iac.len() == l, || format!("l = {l}: length {}", iac.len()))?;
        ensure(iac[0] == 0.0, || format!("l = {l}: IAC[0] = {}", iac[0]))?;
        for (i, &v) in iac.iter().enumerate() {
            // Exact integer numerator, one correctly rounded division.
            let exact = (2 * i as u128 * (l - i) as u128) as f64 / l as f64;
            ensure(v == exact, || format!("l = {l}, i = {i}: {v} vs {exact}"))?;
        }
    }
    Ok("l in {2,7,100,10001} exact".into())
}

fn synthetic_spec(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        seed,
        ..SyntheticSpec::default()
    }
}

fn segmentation_accuracy() -> Outcome {
    let spec = synthetic_spec(0);
    let snr = (spec.regime_a.amplitude.powi(2) / 2.0) / spec.noise_std.powi(2);
    ensure(snr >= 10.0, || format!("SNR {snr}"))?;
    let cfg = PipelineConfig {
        m: 100,
        workers: 4,
        ..Default::default()
    };
    let mut hits = 0;
    let mut f1_sum = 0.0;
    for seed in 0..100 {
        let spec = synthetic_spec(1000 + seed);
        let (series, truth) = generate_synthetic(&spec).unwrap();
        let boundary = truth.anomaly_start.unwrap();
        let out = run_pipeline(&series, &cfg).map_err(|e| e.to_string())?;
        let cad = &out.density.corrected;
        ensure(cad.iter().all(|c| (0.0..=1.0).contains(c)), || {
            format!("seed {seed}: CAD outside [0,1]")
        })?;
        let argmin_raw = cad
            .iter()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |b, (i, &c)| if c < b.1 { (i, c) } else { b },
            )
            .0
            + out.offset;
        if argmin_raw.abs_diff(boundary) <= 100 {
            hits += 1;
        }
        let local = truth.shifted(out.offset).unwrap();
        f1_sum += score(&out.report.labels, &local, cad.len()).unwrap().f1;
    }
    let mean_f1 = f1_sum / 100.0;
    ensure(hits >= 95, || format!("{hits}/100 within 100 samples"))?;
    ensure(mean_f1 >= 0.90, || format!("mean F1 {mean_f1:.3}"))?;
    Ok(format!("{hits}/100 within +-100, mean F1 {mean_f1:.3}"))
}

fn clean_dataset(seed: u64) -> Dataset {
    let (series, truth) = generate_clean(&synthetic_spec(seed)).unwrap();
    Dataset {
        name: format!("clean_{seed}"),
        series,
        truth,
    }
}

fn threshold_ablation() -> Outcome {
    let clean: Vec<Dataset> = (0..50).map(|s| clean_dataset(2000 + s)).collect();
    let cfg = PipelineConfig {
        epsilon: 0.35,
        ..Default::default()
    };
    let table = run_threshold_ablation(&clean, &cfg).map_err(|e| e.to_string())?;
    let mut gated = 0;
    for row in &table.rows {
        let r = row
            .outcome
            .as_ref()
            .map_err(|e| format!("{}: {e}", row.name))?;
        ensure(r.fpr_with <= r.fpr_without, || {
            format!(
                "{}: gated FPR {} > ungated {}",
                row.name, r.fpr_with, r.fpr_without
            )
        })?;
        if r.min_cad >= 0.35 {
            gated += 1;
            ensure(r.fpr_with == 0.0, || {
                format!("{}: min CAD {} but FPR {}", row.name, r.min_cad, r.fpr_with)
            })?;
        }
    }
    Ok(format!("50 clean series, {gated} silenced by the gate"))
}

fn epsilon_sweep() -> Outcome {
    let grid = parse_epsilon_grid("0.1:0.8:0.1").map_err(|e| e.to_string())?;
    ensure(grid.len() == 8, || {
        format!("grid has {} points", grid.len())
    })?;
    let cfg = PipelineConfig::default();
    for seed in 0..10 {
        let spec = synthetic_spec(3000 + seed);
        let (series, truth) = generate_synthetic(&spec).unwrap();
        let anomalous = Dataset {
            name: format!("anomalous_{seed}"),
            series,
            truth,
        };
        let clean = clean_dataset(3000 + seed);
        let pts = run_epsilon_sweep(&anomalous, &clean, &cfg, &grid).map_err(|e| e.to_string())?;
        for w in pts.windows(2) {
            ensure(w[0].f1 <= w[1].f1 && w[0].fpr <= w[1].fpr, || {
                format!(
                    "pair {seed}: eps {} -> {} breaks monotonicity ({:?} -> {:?})",
                    w[0].epsilon, w[1].epsilon, w[0], w[1]
                )
            })?;
        }
    }
    Ok("10 pairs monotone over 0.1..0.8".into())
}

fn runtime() -> Outcome {
    let spec = SyntheticSpec {
        total_length: 1834,
        seed: 7,
        ..Default::default()
    };
    let (series, _) = generate_synthetic(&spec).unwrap();
    let cfg = WindowConfig::new(100).unwrap();
    let time = |workers| {
        let opts = ConvOptions::new(ConvOptions::DEFAULT_BATCH_ROWS, workers).unwrap();
        let started = Instant::now();
        conv_profile(&series, &cfg, opts).unwrap();
        started.elapsed().as_secs_f64()
    };
    let single = time(1);
    let four = time(4);
    ensure(single <= 5.0, || {
        format!("single-threaded {single:.3}s > 5s")
    })?;
    ensure(four <= 2.0, || format!("4 workers {four:.3}s > 2s"))?;
    Ok(format!(
        "n=1834 m=100: {single:.3}s (1 worker), {four:.3}s (4 workers)"
    ))
}

fn metric_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0009);
    for case in 0..500 {
        let l = rng.random_range(1..400);
        let predicted: Vec<u8> = (0..l).map(|_| rng.random_range(0..2)).collect();
        let truth = if rng.random_bool(0.2) {
            GroundTruth::clean()
        } else {
            GroundTruth {
                anomaly_start: Some(rng.random_range(0..l)),
            }
        };
        let card = score(&predicted, &truth, l).map_err(|e| e.to_string())?;
        let (mut tp, mut fp, mut tn, mut fn_) = (0u64, 0u64, 0u64, 0u64);
        for (i, &p) in predicted.iter().enumerate() {
            let actual = truth.anomaly_start.is_some_and(|s| i > s);
            match (p == 1, actual) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, false) => tn += 1,
                (false, true) => fn_ += 1,
            }
        }
        ensure(
            (card.tp, card.fp, card.tn, card.fn_) == (tp, fp, tn, fn_),
            || format!("case {case}: counts {card:?} vs ({tp},{fp},{tn},{fn_})"),
        )?;
        let precision = if tp + fp > 0 {
            tp as f64 / (tp + fp) as f64
        } else {
            0.0
        };
        let recall = if tp + fn_ > 0 {
            tp as f64 / (tp + fn_) as f64
        } else {
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        let fpr = if fp + tn > 0 {
            fp as f64 / (fp + tn) as f64
        } else {
            0.0
        };
        ensure(
            (card.f1 - f1).abs() <= 1e-12 && (card.fpr - fpr).abs() <= 1e-12,
            || {
                format!(
                    "case {case}: f1 {} vs {f1}, fpr {} vs {fpr}",
                    card.f1, card.fpr
                )
            },
        )?;
    }
    Ok("500 fuzz cases".into())
}

fn main() -> ExitCode {
    let criteria: [Check; 9] = [
        ("oracle equivalence", oracle_equivalence),
        ("partition determinism", partition_determinism),
        ("dot-product recurrence", recurrence_check),
        ("idealized arc count exactness", iac_exactness),
        ("segmentation accuracy", segmentation_accuracy),
        ("threshold ablation shape", threshold_ablation),
        ("epsilon sweep monotonicity", epsilon_sweep),
        ("conv profile runtime", runtime),
        ("metric identities", metric_identities),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
