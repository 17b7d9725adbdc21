//! Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero when any
//! criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use infometer::advisor::{recommend, DataKind, Objective, Query};
use infometer::causal::{
    autonomy_causal, autonomy_observational, causal_emergence, effective_information, phi, phi_of_cut, Bipartition,
    CoarseGraining, SystemSplit, Tpm, Trial,
};
use infometer::data::{DiscreteSeries, SampleMatrix};
use infometer::entropy::{entropy_knn, entropy_plugin, entropy_vasicek, EntropyEstimator};
use infometer::error::Error;
use infometer::inference::{
    bootstrap_ci, network_scan, BootstrapConfig, Correction, ScanConditioning, ScanConfig, SurrogateConfig,
    SurrogateMethod,
};
use infometer::manifest::{ManifestBuilder, Role, Uncertainty};
use infometer::mi::{ksg_weighted, mi_ksg};
use infometer::report::{entropy_discrete, RunOptions};
use infometer::simulate::{
    chain, coupled_ar, degenerate_micro, gaussian_pair, node_series, planted_network, reactive_system, run_tpm,
    self_copy_system, white_noise,
};
use infometer::temporal::{transfer_entropy_tested, EmbeddingSpec, TeEstimator};
use infometer::RngSeed;
use rand::Rng;
use serde_json::Value;

type Check = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Check + 'a>);

fn within(name: &str, got: f64, want: f64, tol: f64) -> Check {
    if (got - want).abs() <= tol {
        Ok(format!("{name} = {got:.4} (target {want} ± {tol})"))
    } else {
        Err(format!("{name} = {got:.4}, outside {want} ± {tol}"))
    }
}

fn budget(elapsed: Duration, limit: Duration) -> Check {
    if elapsed <= limit {
        Ok(format!("{:.1} s within {} s", elapsed.as_secs_f64(), limit.as_secs()))
    } else {
        Err(format!("{:.1} s exceeds the {} s budget", elapsed.as_secs_f64(), limit.as_secs()))
    }
}

/// Folds sub-checks into one verdict while keeping every detail.
fn verdict(parts: Vec<Check>) -> Check {
    let failed = parts.iter().any(Result::is_err);
    let text = parts.into_iter().map(|p| p.unwrap_or_else(|e| format!("FAILED {e}"))).collect::<Vec<_>>().join("; ");
    if failed {
        Err(text)
    } else {
        Ok(text)
    }
}

fn col(values: &[f64]) -> SampleMatrix {
    SampleMatrix::from_column(values).unwrap()
}

fn c1_entropy() -> Check {
    let start = Instant::now();
    let mut parts = Vec::new();
    for k in [2usize, 4, 8] {
        let series = DiscreteSeries::new((0..1000 * k).map(|i| i % k).collect(), k).unwrap();
        let h = entropy_plugin(&series).unwrap().value;
        parts.push(within(&format!("plugin uniform-{k}"), h, (k as f64).ln(), 1e-12));
    }
    let mut rng = RngSeed::new(101).substream(0);
    let u: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
    parts.push(within("vasicek U(0,1)", entropy_vasicek(&col(&u), None).unwrap().value, 0.0, 0.02));
    let a = white_noise(100_000, RngSeed::new(102));
    let b = white_noise(100_000, RngSeed::new(103));
    let normal2 = SampleMatrix::from_columns(&[&a, &b]).unwrap();
    parts.push(within("knn 2-d normal", entropy_knn(&normal2, 4).unwrap().value, 2.8379, 0.05));
    parts.push(budget(start.elapsed(), Duration::from_secs(10)));
    verdict(parts)
}

fn c2_gaussian_mi() -> Check {
    let start = Instant::now();
    let mut parts = Vec::new();
    let (x, y) = gaussian_pair(2000, 0.6, RngSeed::new(201)).unwrap();
    for k in [3, 5, 10] {
        let mi = mi_ksg(&col(&x), &col(&y), k).unwrap().value;
        parts.push(within(&format!("rho 0.6 k={k}"), mi, 0.2231, 0.05));
    }
    let (x, y) = gaussian_pair(2000, 0.0, RngSeed::new(202)).unwrap();
    parts.push(within("independent k=4", mi_ksg(&col(&x), &col(&y), 4).unwrap().value, 0.0, 0.03));
    parts.push(budget(start.elapsed(), Duration::from_secs(30)));
    verdict(parts)
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (p, q) in a.iter().zip(b) {
        sab += (p - ma) * (q - mb);
        saa += (p - ma) * (p - ma);
        sbb += (q - mb) * (q - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Linear-Gaussian TE at l = k = 1: −½ ln(1 − r²) with r the partial
/// correlation of X_{t+1} and Y_t given X_t.
fn linear_te(source: &[f64], target: &[f64]) -> f64 {
    let n = target.len();
    let (future, past, src) = (&target[1..], &target[..n - 1], &source[..n - 1]);
    let (r_fs, r_fp, r_sp) = (correlation(future, src), correlation(future, past), correlation(src, past));
    let r = (r_fs - r_fp * r_sp) / ((1.0 - r_fp * r_fp) * (1.0 - r_sp * r_sp)).sqrt();
    -0.5 * (1.0 - r * r).ln()
}

fn te_test(source: &[f64], target: &[f64], seed: RngSeed) -> (f64, f64) {
    let cfg = SurrogateConfig { method: SurrogateMethod::TimeShift, surrogates: 200, ..SurrogateConfig::default() };
    let te =
        transfer_entropy_tested(source, target, &[], &EmbeddingSpec::default(), TeEstimator::Ksg { k: 4 }, &cfg, seed)
            .unwrap();
    (te.value, te.significance.unwrap().p_value)
}

fn c3_directionality() -> Check {
    let start = Instant::now();
    let mut parts = Vec::new();
    let (y, x) = coupled_ar(10_000, 0.5, 1, RngSeed::new(300)).unwrap();
    let (forward, p) = te_test(&y, &x, RngSeed::new(301));
    parts.push(within("T(Y->X) - linear oracle", forward - linear_te(&y, &x), 0.0, 0.03));
    parts.push(if p == 1.0 / 201.0 { Ok("forward p = 1/201".to_string()) } else { Err(format!("forward p = {p}")) });
    let quiet = (0..50u64)
        .filter(|&rep| {
            let (y, x) = coupled_ar(10_000, 0.5, 1, RngSeed::new(1000 + rep)).unwrap();
            te_test(&x, &y, RngSeed::new(2000 + rep)).1 > 0.05
        })
        .count();
    parts.push(if quiet >= 45 {
        Ok(format!("reverse non-significant in {quiet}/50"))
    } else {
        Err(format!("reverse non-significant in only {quiet}/50"))
    });
    parts.push(budget(start.elapsed(), Duration::from_secs(300)));
    verdict(parts)
}

fn scan_config(correction: Correction) -> ScanConfig {
    ScanConfig {
        surrogates: 200,
        alpha: 0.05,
        correction,
        conditioning: ScanConditioning::AllOthers,
        ..ScanConfig::default()
    }
}

fn c4_network() -> Check {
    let mut parts = Vec::new();
    let cfg = scan_config(Correction::Bonferroni);
    let (mut exact, mut errors, mut last_error) = (0, 0, None);
    for run in 0..100u64 {
        let streams = planted_network(2000, RngSeed::new(400 + run));
        match network_scan(&streams, &cfg, RngSeed::new(500 + run)) {
            Ok(r) if r.rejected == [(0, 1)] => exact += 1,
            Ok(_) => {}
            Err(e) => {
                errors += 1;
                last_error = Some(e);
            }
        }
    }
    let mut detail = format!("exactly A->B rejected in {exact}/100 runs");
    if let Some(e) = last_error {
        detail += &format!(" ({errors} runs refused: {e})");
    }
    parts.push(if exact >= 85 { Ok(detail) } else { Err(detail) });

    let streams = chain(2000, RngSeed::new(450));
    match network_scan(&streams, &cfg, RngSeed::new(451)) {
        Ok(r) => {
            let a_to_c = r.rejected.contains(&(0, 2));
            let direct = r.rejected.contains(&(0, 1)) && r.rejected.contains(&(1, 2));
            let text = format!("chain rejected {:?}", r.rejected);
            parts.push(if !a_to_c && direct { Ok(text) } else { Err(text) });
        }
        Err(e) => parts.push(Err(format!("chain scan refused: {e}"))),
    }
    verdict(parts)
}

fn random_tpm(n: usize, rng: &mut impl Rng) -> Tpm {
    let s = 1 << n;
    let rows: Vec<Vec<f64>> = (0..s)
        .map(|_| {
            let mut row: Vec<f64> = (0..s).map(|_| rng.random::<f64>() + 1e-3).collect();
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= total);
            let head: f64 = row[..s - 1].iter().sum();
            row[s - 1] = (1.0 - head).max(0.0);
            row
        })
        .collect();
    Tpm::from_rows(n, &rows).unwrap()
}

/// Minimum over every nonempty proper subset, both orientations included.
fn brute_force_phi(tpm: &Tpm) -> f64 {
    let n = tpm.n();
    (1..(1usize << n) - 1)
        .map(|mask| {
            let part: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            phi_of_cut(tpm, &Bipartition::new(n, &part).unwrap()).unwrap()
        })
        .fold(f64::INFINITY, f64::min)
}

fn c5_exactness() -> Check {
    let start = Instant::now();
    let mut parts = Vec::new();
    parts.push(within("EI(identity, n=3)", effective_information(&Tpm::identity(3).unwrap()), 3.0, 1e-9));
    let constant = Tpm::from_map(3, |_| 5).unwrap();
    parts.push(within("EI(constant rows)", effective_information(&constant), 0.0, 1e-12));
    // Two independent copy loops: nodes {0,1} swap, nodes {2,3} swap.
    let disconnected =
        Tpm::from_map(4, |s| (s & 1) << 1 | (s >> 1 & 1) | (s >> 2 & 1) << 3 | (s >> 3 & 1) << 2).unwrap();
    parts.push(within("Phi(disconnected)", phi(&disconnected).unwrap().value, 0.0, 1e-12));
    let mut rng = RngSeed::new(500).substream(0);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let tpm = random_tpm(2 + i % 4, &mut rng);
        worst = worst.max((phi(&tpm).unwrap().value - brute_force_phi(&tpm)).abs());
    }
    parts.push(within("max |Phi - brute force| over 100 TPMs, n = 2..5", worst, 0.0, 1e-9));
    parts.push(budget(start.elapsed(), Duration::from_secs(120)));
    verdict(parts)
}

fn c6_emergence() -> Check {
    let (micro, grain) = degenerate_micro();
    let r = causal_emergence(&micro, &grain).unwrap();
    let identity = Tpm::identity(2).unwrap();
    let flat = causal_emergence(&identity, &CoarseGraining::singletons(4).unwrap()).unwrap();
    verdict(vec![
        within("ei_macro", r.ei_macro, 1.0, 1e-9),
        if r.ei_macro > r.ei_micro && r.emergent {
            Ok(format!("ei_micro = {:.4} < ei_macro, emergent", r.ei_micro))
        } else {
            Err(format!("ei_micro = {:.4}, emergent = {}", r.ei_micro, r.emergent))
        },
        if flat.emergent {
            Err("identity micro flagged emergent".into())
        } else {
            Ok("identity micro not emergent".into())
        },
    ])
}

fn trials(paths: &[Vec<usize>], v: usize, e: usize) -> Vec<Trial> {
    paths.iter().map(|p| Trial { v: vec![node_series(p, v)], e: vec![node_series(p, e)] }).collect()
}

fn c7_autonomy() -> Check {
    let seed = RngSeed::new(700);
    let reactive = reactive_system(0.05).unwrap();
    let obs = autonomy_observational(&trials(&run_tpm(&reactive, 50, 200, seed), 0, 1), 1).unwrap().value;
    let causal = autonomy_causal(&reactive, &SystemSplit::new(3, vec![0], vec![1, 2], 1).unwrap()).unwrap().value;
    let copy = self_copy_system();
    let copy_obs = autonomy_observational(&trials(&run_tpm(&copy, 400, 20, seed), 0, 1), 1).unwrap().value;
    let copy_causal = autonomy_causal(&copy, &SystemSplit::new(2, vec![0], vec![1], 1).unwrap()).unwrap().value;
    let above = |name: &str, v: f64, floor: f64| {
        if v > floor {
            Ok(format!("{name} = {v:.3} > {floor}"))
        } else {
            Err(format!("{name} = {v:.3}, not above {floor}"))
        }
    };
    verdict(vec![
        above("reactive observational", obs, 0.3),
        within("reactive causal", causal, 0.0, 0.05),
        within("self-copy observational", copy_obs, 1.0, 0.05),
        within("self-copy causal", copy_causal, 1.0, 0.05),
    ])
}

fn coverage(name: &str, hits: usize, runs: usize) -> Check {
    let rate = hits as f64 / runs as f64;
    let text = format!("{name} coverage {hits}/{runs} = {:.1}%", 100.0 * rate);
    if (0.90..=0.99).contains(&rate) {
        Ok(text)
    } else {
        Err(format!("{text}, outside [90%, 99%]"))
    }
}

fn c8_calibration() -> Check {
    let mut parts = Vec::new();
    let rejections = (0..200u64)
        .filter(|&rep| {
            let x = white_noise(500, RngSeed::new(800 + 2 * rep));
            let y = white_noise(500, RngSeed::new(801 + 2 * rep));
            te_test(&y, &x, RngSeed::new(5000 + rep)).1 <= 0.05
        })
        .count();
    let frac = rejections as f64 / 200.0;
    let text = format!("null TE p <= 0.05 in {rejections}/200 = {frac:.3}");
    parts.push(if (0.02..=0.09).contains(&frac) { Ok(text) } else { Err(format!("{text}, outside [0.02, 0.09]")) });

    let ln4 = 4f64.ln();
    let mut hits = 0;
    for rep in 0..200u64 {
        let mut rng = RngSeed::new(6000 + rep).substream(0);
        let series = DiscreteSeries::new((0..1000).map(|_| rng.random_range(0..4)).collect(), 4).unwrap();
        let mut opts = RunOptions::new(RngSeed::new(7000 + rep));
        opts.bootstrap.replicates = 500;
        let r = entropy_discrete(&series, EntropyEstimator::Plugin, &opts, Vec::new()).unwrap();
        let ci = r.result.ci.unwrap();
        hits += usize::from(ci.low <= ln4 && ln4 <= ci.high);
    }
    parts.push(coverage("plugin entropy uniform-4", hits, 200));

    let oracle = -0.5 * (1.0f64 - 0.36).ln();
    let mut hits = 0;
    for rep in 0..200u64 {
        let (x, y) = gaussian_pair(2000, 0.6, RngSeed::new(8000 + rep)).unwrap();
        let (x, y) = (col(&x), col(&y));
        let point = ksg_weighted(&x, &y, None, 4, None).unwrap();
        let ci = bootstrap_ci(
            point,
            2000,
            |w| ksg_weighted(&x, &y, None, 4, Some(w)),
            &BootstrapConfig::default(),
            RngSeed::new(9000 + rep),
        )
        .unwrap();
        hits += usize::from(ci.low <= oracle && oracle <= ci.high);
    }
    parts.push(coverage("KSG MI rho 0.6", hits, 200));
    verdict(parts)
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_infometer")).args(args).env_remove("INFOMETER_WORKERS").output().unwrap()
}

fn cli_json(args: &[&str]) -> Result<Value, String> {
    let out = cli(args);
    if !out.status.success() {
        return Err(format!(
            "`{}` exited {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())
}

struct Fixtures {
    _dir: tempfile::TempDir,
    ar: String,
    symbols: String,
    chain: String,
    reactive: String,
    trials: String,
    micro: String,
}

impl Fixtures {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let path = |f: &str| dir.path().join(f).to_string_lossy().into_owned();
        let make = |out: &str, args: &[&str]| {
            let mut all = vec!["simulate"];
            all.extend_from_slice(args);
            all.extend_from_slice(&["--seed", "9", "--output", out]);
            assert!(cli(&all).status.success(), "simulate {args:?}");
        };
        let f = Fixtures {
            ar: path("ar.csv"),
            symbols: path("u.csv"),
            chain: path("chain.csv"),
            reactive: path("r.json"),
            trials: path("r.csv"),
            micro: path("d.json"),
            _dir: dir,
        };
        make(&f.ar, &["coupled-ar", "--n", "2000"]);
        make(&f.symbols, &["uniform-symbols", "--n", "1000"]);
        make(&f.chain, &["chain", "--n", "300"]);
        make(&f.reactive, &["reactive-tpm"]);
        make(&f.trials, &["tpm-trials", "--tpm", &f.reactive, "--trials", "20", "--n", "100"]);
        make(&f.micro, &["degenerate-tpm"]);
        f
    }
}

const SNAPSHOT: &str = "../core/tests/snapshots/advisor.json";

fn advisor_grid() -> Value {
    let mut out = Vec::new();
    for objective in Objective::ALL {
        for kind in [DataKind::Discrete, DataKind::Continuous, DataKind::Mixed] {
            for d in [1, 5, 128] {
                for interventional in [false, true] {
                    let q = Query::new(objective, kind, d, 5_000, true, interventional).unwrap();
                    out.push(serde_json::json!({ "query": q, "recommendation": recommend(&q) }));
                }
            }
        }
    }
    Value::Array(out)
}

fn c9_fidelity(fx: &Fixtures) -> Check {
    let mut parts = Vec::new();
    let stored: Value = serde_json::from_str(
        &std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join(SNAPSHOT)).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let grid = advisor_grid();
    parts.push(if grid == stored {
        Ok(format!("advisor matches snapshot over {} queries", grid.as_array().unwrap().len()))
    } else {
        Err("advisor output drifted from the snapshot".into())
    });

    let fast = ["--seed", "5", "--surrogates", "200", "--bootstrap", "100"];
    let runs: Vec<Vec<&str>> = vec![
        vec!["entropy", "--input", &fx.symbols, "--column", "x"],
        vec!["entropy", "--input", &fx.ar, "--column", "source,target", "--estimator", "knn"],
        vec!["kl", "--p", "0.2,0.8", "--q", "0.5,0.5"],
        vec!["mi", "--input", &fx.ar, "--x", "source", "--y", "target"],
        vec!["cmi", "--input", &fx.chain, "--x", "A", "--y", "C", "--z", "B"],
        vec!["te", "--input", &fx.ar, "--source", "source", "--target", "target"],
        vec!["ais", "--input", &fx.ar, "--column", "target"],
        vec!["predinfo", "--input", &fx.ar, "--column", "target", "--window", "2"],
        vec!["ei", "--tpm", &fx.reactive],
        vec!["phi", "--tpm", &fx.reactive],
        vec!["emergence", "--tpm", &fx.micro, "--groups", "0,1,2;3"],
        vec![
            "autonomy",
            "--tpm",
            &fx.reactive,
            "--v-nodes",
            "0",
            "--input",
            &fx.trials,
            "--v-cols",
            "n0",
            "--e-cols",
            "n1",
            "--trial-column",
            "trial",
        ],
        vec!["scan", "--input", &fx.chain],
    ];
    let mut entries = 0;
    let mut incomplete = Vec::new();
    for mut args in runs {
        args.extend_from_slice(&fast);
        let v = match cli_json(&args) {
            Ok(v) => v,
            Err(e) => {
                incomplete.push(e);
                continue;
            }
        };
        for e in v["results"].as_array().into_iter().flatten() {
            entries += 1;
            let m = &e["manifest"];
            let complete =
                ["role", "estimator", "uncertainty", "significance", "preprocessing"].iter().all(|f| !m[f].is_null())
                    && m["estimator"]["id"].as_str().is_some_and(|s| !s.is_empty());
            if !complete || !e["value"].is_number() {
                incomplete.push(format!("{} {}", args[0], e["label"]));
            }
        }
    }
    parts.push(if incomplete.is_empty() && entries > 0 {
        Ok(format!("{entries} CLI results from 13 runs all carry 5-field manifests"))
    } else {
        Err(format!("incomplete: {incomplete:?}"))
    });

    let refused = ManifestBuilder::new()
        .role(Role::Measurement)
        .estimator("entropy_plugin", Default::default())
        .uncertainty(Uncertainty::Exact { reason: "x".into() })
        .preprocessing(Vec::new())
        .build();
    parts.push(match refused {
        Err(Error::MissingField(f)) => Ok(format!("manifest without `{f}` is refused")),
        other => Err(format!("incomplete manifest accepted: {other:?}")),
    });
    verdict(parts)
}

fn c10_determinism(fx: &Fixtures) -> Check {
    let runs: Vec<Vec<&str>> = vec![
        vec!["te", "--input", &fx.ar, "--source", "source", "--target", "target", "--seed", "42"],
        vec!["mi", "--input", &fx.ar, "--x", "source", "--y", "target", "--seed", "42"],
        vec!["scan", "--input", &fx.chain, "--seed", "42", "--bootstrap", "100"],
        vec![
            "autonomy",
            "--input",
            &fx.trials,
            "--v-cols",
            "n0",
            "--e-cols",
            "n1",
            "--trial-column",
            "trial",
            "--seed",
            "42",
        ],
    ];
    let mut parts = Vec::new();
    for args in runs {
        let outputs: Vec<Vec<u8>> = ["1", "4", "1"]
            .iter()
            .map(|w| {
                let mut a = args.clone();
                a.extend_from_slice(&["--workers", w]);
                cli(&a).stdout
            })
            .collect();
        let same = !outputs[0].is_empty() && outputs.windows(2).all(|w| w[0] == w[1]);
        let text = format!("{} ({} bytes) with --workers 1/4/1", args[0], outputs[0].len());
        parts.push(if same { Ok(format!("{text} identical")) } else { Err(format!("{text} differ")) });
    }
    verdict(parts)
}

fn main() {
    let fixtures = Fixtures::new();
    let criteria: Vec<Criterion> = vec![
        ("closed-form entropy", Box::new(c1_entropy)),
        ("Gaussian MI oracle", Box::new(c2_gaussian_mi)),
        ("TE directionality", Box::new(c3_directionality)),
        ("network scan pipeline", Box::new(c4_network)),
        ("EI and Phi exactness", Box::new(c5_exactness)),
        ("causal emergence", Box::new(c6_emergence)),
        ("autonomy discordance", Box::new(c7_autonomy)),
        ("statistical calibration", Box::new(c8_calibration)),
        ("framework fidelity", Box::new(|| c9_fidelity(&fixtures))),
        ("determinism", Box::new(|| c10_determinism(&fixtures))),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag} [{name}] ({secs:.1} s): {detail}", i + 1);
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
