//! Acceptance gate: one check per criterion, one PASS/FAIL line each.
//!
//! Runs as a plain binary (`harness = false`) so the report is always
//! printed; the process exits non-zero if any criterion fails.

use std::fs;
use std::path::Path;
use std::sync::OnceLock;
use std::time::Instant;

use cultmarket::cli::cli_main;
use cultmarket::engine::{realize, run, run_paired, simulate, RunOptions};
use cultmarket::harness::{
    parse_grid, run_paired_experiment, run_replicated, run_sweep, Execution, SweepCell, SweepSpec,
};
use cultmarket::metrics::{gini_inequality, quartile_difference};
use cultmarket::preferences::{quality, sample_preferences};
use cultmarket::rng::{run_seed, RandomStream, Substream};
use cultmarket::{ModelConfig, PreferenceMatrix, SocialGraph, TopologySpec};
use rand::Rng;

const REPLICATIONS: usize = 100;

/// Slope targets at γ = 0 and their tolerance.
const SLOPE_TARGETS: [(usize, f64); 3] = [(5, 0.10), (20, 0.28), (50, 0.40)];
const SLOPE_TOL: f64 = 0.03;

const DIAGONAL_MIN_PEARSON: f64 = 0.9;
const DIAGONAL_MAX_MEAN_DEVIATION: f64 = 0.02;

const AMPLIFICATION_MIN_WINS: usize = 95;

const LOW_INEQUALITY_MAX: f64 = 0.3;
const HIGH_INEQUALITY_MIN: f64 = 0.8;
const MIN_SHARP_STEP: f64 = 0.1;
const MIN_TRANSITION_SHIFT: f64 = 0.05;
/// Transition shift between σ = 0.5 and σ = 2 observed with master seed 0,
/// frozen as a regression value.
const FROZEN_TRANSITION_SHIFT: f64 = 0.24151810078794578;
const REGRESSION_TOL: f64 = 1e-9;

const FUZZ_CASES: usize = 1000;
const FUZZ_MAX_ITEMS: usize = 32;
const METRIC_REL_TOL: f64 = 1e-12;

const CLT_MATRICES: usize = 1000;
const CLT_STD_RANGE: (f64, f64) = (0.09, 0.11);

const INVARIANCE_INSTANCES: usize = 100;
const INVARIANCE_MAX_SIZE: usize = 20;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn base() -> ModelConfig {
    ModelConfig::default()
}

fn sweep(sigma: f64) -> &'static [SweepCell] {
    static S05: OnceLock<Vec<SweepCell>> = OnceLock::new();
    static S1: OnceLock<Vec<SweepCell>> = OnceLock::new();
    static S2: OnceLock<Vec<SweepCell>> = OnceLock::new();
    let slot = if sigma == 0.5 {
        &S05
    } else if sigma == 1.0 {
        &S1
    } else if sigma == 2.0 {
        &S2
    } else {
        unreachable!("sweep for sigma {sigma} not cached")
    };
    slot.get_or_init(|| {
        let spec = SweepSpec {
            gamma_values: parse_grid("0:1:0.05").unwrap(),
            sigma_values: vec![sigma],
            replications: REPLICATIONS,
            base_config: base(),
        };
        run_sweep(&spec, Execution::Parallel).unwrap()
    })
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// γ at which I_mean first reaches the midpoint between its γ=0 and γ=1
/// values, linearly interpolated between grid points.
fn transition_gamma(cells: &[SweepCell]) -> f64 {
    let lo = cells.first().unwrap().i_mean;
    let hi = cells.last().unwrap().i_mean;
    let mid = 0.5 * (lo + hi);
    for w in cells.windows(2) {
        if w[0].i_mean < mid && w[1].i_mean >= mid {
            let frac = (mid - w[0].i_mean) / (w[1].i_mean - w[0].i_mean);
            return w[0].gamma() + frac * (w[1].gamma() - w[0].gamma());
        }
    }
    f64::NAN
}

fn c1_slopes() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (t, target) in SLOPE_TARGETS {
        let config = ModelConfig {
            horizon: t,
            ..base()
        };
        let cell = run_replicated(&config, REPLICATIONS, Execution::Parallel)
            .map_err(|e| e.to_string())?
            .cell;
        let hit = (cell.slope_mean - target).abs() <= SLOPE_TOL
            && (cell.slope_pooled - target).abs() <= SLOPE_TOL;
        ok &= hit;
        parts.push(format!(
            "T={t}: per-run {:.4}, pooled {:.4} (target {target}±{SLOPE_TOL})",
            cell.slope_mean, cell.slope_pooled
        ));
    }
    check(ok, parts.join("; "))
}

fn c2_topology_invariance() -> Outcome {
    let topologies = [
        TopologySpec::RingLattice { k: 4 },
        TopologySpec::Complete,
        TopologySpec::RandomUndirected { k: 4 },
        TopologySpec::RandomDirected { k: 4 },
    ];
    let runs = 20;
    for i in 0..runs {
        let grids: Vec<Vec<bool>> = topologies
            .iter()
            .map(|&topology| {
                let config = ModelConfig { topology, ..base() };
                run(&config, i).map(|r| r.final_state.consumption_grid().to_vec())
            })
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        if grids.windows(2).any(|w| w[0] != w[1]) {
            return Err(format!("run {i}: consumption grids differ across topologies"));
        }
    }
    Ok(format!("{runs} runs x 4 topologies, grids bit-identical"))
}

fn c3_low_pressure_diagonal() -> Outcome {
    let table = run_paired_experiment(&base(), &[0.0, 0.3], REPLICATIONS, Execution::Parallel)
        .map_err(|e| e.to_string())?;
    let x: Vec<f64> = table.runs.iter().flat_map(|r| r.shares(0).to_vec()).collect();
    let y: Vec<f64> = table.runs.iter().flat_map(|r| r.shares(1).to_vec()).collect();
    let r = pearson(&x, &y);
    let dev = x.iter().zip(&y).map(|(a, b)| b - a).sum::<f64>() / x.len() as f64;
    check(
        r >= DIAGONAL_MIN_PEARSON && dev.abs() <= DIAGONAL_MAX_MEAN_DEVIATION,
        format!(
            "pearson {r:.4} (>= {DIAGONAL_MIN_PEARSON}), mean deviation {dev:.2e} (|.| <= {DIAGONAL_MAX_MEAN_DEVIATION})"
        ),
    )
}

fn c4_high_pressure_amplification() -> Outcome {
    let table = run_paired_experiment(&base(), &[0.0, 0.7], REPLICATIONS, Execution::Parallel)
        .map_err(|e| e.to_string())?;
    let x: Vec<f64> = table.runs.iter().flat_map(|r| r.shares(0).to_vec()).collect();
    let y: Vec<f64> = table.runs.iter().flat_map(|r| r.shares(1).to_vec()).collect();
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    let decile = x.len() / 10;
    let mean = |idx: &[usize], v: &[f64]| idx.iter().map(|&i| v[i]).sum::<f64>() / idx.len() as f64;
    let (bottom, top) = (&order[..decile], &order[x.len() - decile..]);
    let (top0, top7) = (mean(top, &x), mean(top, &y));
    let (bot0, bot7) = (mean(bottom, &x), mean(bottom, &y));
    let wins = table
        .runs
        .iter()
        .filter(|r| r.reports[1].inequality > r.reports[0].inequality)
        .count();
    check(
        top7 > top0 && bot7 < bot0 && wins >= AMPLIFICATION_MIN_WINS,
        format!(
            "top decile {top0:.4} -> {top7:.4}, bottom decile {bot0:.4} -> {bot7:.4}, \
             I(0.7) > I(0) in {wins}/{REPLICATIONS} runs (>= {AMPLIFICATION_MIN_WINS})"
        ),
    )
}

fn c5_inequality_transition() -> Outcome {
    let s1 = sweep(1.0);
    let at = |g: f64| s1.iter().find(|c| (c.gamma() - g).abs() < 1e-9).unwrap().i_mean;
    let i0 = at(0.0);
    let i95 = at(0.95);
    let max_step = s1
        .windows(2)
        .map(|w| w[1].i_mean - w[0].i_mean)
        .fold(f64::NEG_INFINITY, f64::max);
    let t05 = transition_gamma(sweep(0.5));
    let t2 = transition_gamma(sweep(2.0));
    let shift = t2 - t05;
    let regression_ok = (shift - FROZEN_TRANSITION_SHIFT).abs() <= REGRESSION_TOL;
    let low_ok = i0 <= LOW_INEQUALITY_MAX;
    let high_ok = i95 >= HIGH_INEQUALITY_MIN;
    let step_ok = max_step > MIN_SHARP_STEP;
    let shift_ok = shift.abs() >= MIN_TRANSITION_SHIFT;
    let mark = |b: bool| if b { "ok" } else { "FAILED" };
    check(
        low_ok && high_ok && step_ok && shift_ok && regression_ok,
        format!(
            "I(0)={i0:.4} <= {LOW_INEQUALITY_MAX} [{}]; I(0.95)={i95:.4} >= {HIGH_INEQUALITY_MIN} [{}]; \
             max step {max_step:.4} > {MIN_SHARP_STEP} [{}]; transition sigma=0.5 at {t05:.4}, \
             sigma=2 at {t2:.4}, shift {shift:.4} >= {MIN_TRANSITION_SHIFT} [{}], frozen {FROZEN_TRANSITION_SHIFT} [{}]",
            mark(low_ok),
            mark(high_ok),
            mark(step_ok),
            mark(shift_ok),
            mark(regression_ok),
        ),
    )
}

fn peak_index(cells: &[SweepCell]) -> usize {
    cells
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.q_mean.total_cmp(&b.1.q_mean))
        .unwrap()
        .0
}

fn c6_quartile_unimodality() -> Outcome {
    let s1 = sweep(1.0);
    let peak = peak_index(s1);
    let q: Vec<f64> = s1.iter().map(|c| c.q_mean).collect();
    let baseline = q[0];
    let rises = q[..=peak].windows(2).all(|w| w[1] > w[0]);
    let falls = q[peak..].windows(2).all(|w| w[1] < w[0]);
    let interior = peak > 0 && peak + 1 < q.len();
    let last = s1.last().unwrap();
    let zero_ok = last.q_mean.abs() <= 2.0 * last.q_stderr();
    let baseline_ok = baseline > 0.0 && baseline < q[peak];
    let p05 = sweep(0.5)[peak_index(sweep(0.5))].gamma();
    let p2 = sweep(2.0)[peak_index(sweep(2.0))].gamma();
    check(
        rises && falls && interior && zero_ok && baseline_ok && p05 != p2,
        format!(
            "sigma=1: Q(0)={baseline:.4}, peak {:.4} at gamma {:.2}, monotone rise {rises}, \
             monotone fall {falls}; Q(1)={:.4} (2 se = {:.4}); peak gamma sigma=0.5 {p05:.2} vs sigma=2 {p2:.2}",
            q[peak],
            s1[peak].gamma(),
            last.q_mean,
            2.0 * last.q_stderr()
        ),
    )
}

/// Direct pairwise double sum.
fn gini_oracle(d: &[f64]) -> f64 {
    let m = d.len() as f64;
    let total: f64 = d.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let mut num = 0.0;
    for a in d {
        for b in d {
            num += (a - b).abs();
        }
    }
    (num / (m * m)) / (2.0 * total / m)
}

/// Quartile means from pairwise rank counting, no sorting.
fn quartile_oracle(d: &[f64], q: &[f64]) -> f64 {
    let m = d.len();
    let quarter = m / 4;
    let (mut upper, mut lower) = (0.0, 0.0);
    for a in 0..m {
        let above = (0..m)
            .filter(|&b| q[b] > q[a] || (q[b] == q[a] && b < a))
            .count();
        let below = (0..m)
            .filter(|&b| q[b] < q[a] || (q[b] == q[a] && b > a))
            .count();
        if above < quarter {
            upper += d[a];
        }
        if below < quarter {
            lower += d[a];
        }
    }
    upper / quarter as f64 - lower / quarter as f64
}

fn rel_close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= METRIC_REL_TOL * a.abs().max(b.abs())
}

fn c7_metric_oracles() -> Outcome {
    let hand = gini_inequality(&[0.0, 1.0]) == 0.5 && gini_inequality(&[1.0, 0.0, 0.0, 0.0]) == 0.75;
    let mut rng = RandomStream::from_seed(0xACCE);
    let mut worst: f64 = 0.0;
    for case in 0..FUZZ_CASES {
        let m = rng.random_range(4..=FUZZ_MAX_ITEMS);
        let shares: Vec<f64> = (0..m)
            .map(|_| match rng.random_range(0..10) {
                0 => 0.0,
                1 => 1.0,
                _ => rng.random::<f64>(),
            })
            .collect();
        // Every fifth case draws qualities from a coarse grid to exercise ties.
        let qualities: Vec<f64> = (0..m)
            .map(|_| {
                if case % 5 == 0 {
                    rng.random_range(-2i32..=2) as f64
                } else {
                    rng.random_range(-3.0..3.0)
                }
            })
            .collect();
        let g = gini_inequality(&shares);
        let go = gini_oracle(&shares);
        let qd = quartile_difference(&shares, &qualities).map_err(|e| e.to_string())?;
        let qo = quartile_oracle(&shares, &qualities);
        if !rel_close(g, go) || !rel_close(qd, qo) {
            return Err(format!(
                "case {case}: gini {g} vs oracle {go}, quartile {qd} vs oracle {qo}"
            ));
        }
        if go != 0.0 {
            worst = worst.max((g - go).abs() / go);
        }
        let short = &shares[..rng.random_range(1..=m)];
        if !rel_close(gini_inequality(short), gini_oracle(short)) {
            return Err(format!("case {case}: gini mismatch on {} items", short.len()));
        }
    }
    check(
        hand,
        format!(
            "{FUZZ_CASES} fuzzed vectors (M <= {FUZZ_MAX_ITEMS}) agree to rel {METRIC_REL_TOL:e} \
             (worst gini rel err {worst:.1e}); hand cases exact {hand}"
        ),
    )
}

fn c8_clt() -> Outcome {
    let n = 100;
    let m = 100;
    let mut qs = Vec::with_capacity(CLT_MATRICES * m);
    for i in 0..CLT_MATRICES as u64 {
        let mut rng = RandomStream::substream(run_seed(8, i), Substream::Preferences);
        let prefs = sample_preferences(n, m, 1.0, &mut rng).map_err(|e| e.to_string())?;
        qs.extend(quality(&prefs).0);
    }
    let k = qs.len() as f64;
    let mean = qs.iter().sum::<f64>() / k;
    let sd = (qs.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
    check(
        (CLT_STD_RANGE.0..=CLT_STD_RANGE.1).contains(&sd),
        format!(
            "std of item quality over {CLT_MATRICES} matrices = {sd:.5} (in [{}, {}])",
            CLT_STD_RANGE.0, CLT_STD_RANGE.1
        ),
    )
}

fn c9_invariance() -> Outcome {
    let mut rng = RandomStream::from_seed(0x1A7);
    for case in 0..INVARIANCE_INSTANCES as u64 {
        let n = rng.random_range(3..=INVARIANCE_MAX_SIZE);
        let m = rng.random_range(2..=INVARIANCE_MAX_SIZE);
        let topology = match rng.random_range(0..4) {
            0 => TopologySpec::RingLattice { k: 2 },
            1 => TopologySpec::Complete,
            2 => TopologySpec::RandomUndirected { k: 2 },
            _ => TopologySpec::RandomDirected { k: 2 },
        };
        let gamma = match case % 4 {
            0 => 0.0,
            1 => 1.0,
            _ => rng.random::<f64>(),
        };
        let config = ModelConfig {
            n_agents: n,
            n_items: m,
            horizon: rng.random_range(1..=m),
            social_pressure: gamma,
            intra_item_deviation: rng.random_range(0.1..3.0),
            topology,
            master_seed: case,
        };
        let (graph, prefs) = realize(&config, case).map_err(|e| e.to_string())?;
        let shift = rng.random_range(-5.0..5.0);
        let shifted = prefs.map(|l| l + shift).map_err(|e| e.to_string())?;
        let grid = |g: &SocialGraph, p: &PreferenceMatrix, c: &ModelConfig| {
            simulate(c, g, p, case, RunOptions::default())
                .map(|r| r.final_state.consumption_grid().to_vec())
                .map_err(|e| e.to_string())
        };
        if grid(&graph, &prefs, &config)? != grid(&graph, &shifted, &config)? {
            return Err(format!("case {case}: shift by {shift} changed the outcome at gamma {gamma}"));
        }
        let zero = config.with_gamma(0.0);
        let scale = rng.random_range(0.05..20.0);
        let scaled = prefs.map(|l| l * scale).map_err(|e| e.to_string())?;
        if grid(&graph, &prefs, &zero)? != grid(&graph, &scaled, &zero)? {
            return Err(format!("case {case}: scaling by {scale} changed the gamma=0 outcome"));
        }
    }
    Ok(format!(
        "{INVARIANCE_INSTANCES} instances (N, M <= {INVARIANCE_MAX_SIZE}): shift and gamma=0 scale leave grids identical"
    ))
}

fn read_dir_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn c10_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let invoke = |sub: &str, extra: &[&str], out: &Path| {
        let mut argv = vec!["cultmarket".to_owned(), sub.to_owned()];
        argv.extend(
            [
                "--agents", "60", "--items", "50", "--steps", "10", "--topology", "random", "--k", "6",
                "--runs", "12", "--seed", "42",
            ]
            .map(String::from),
        );
        argv.extend(extra.iter().map(|s| s.to_string()));
        argv.push("--out".into());
        argv.push(out.to_string_lossy().into_owned());
        cli_main(argv)
    };
    let dirs: Vec<_> = ["run-a", "run-b", "sweep-par", "sweep-seq", "paired-a", "paired-b"]
        .iter()
        .map(|d| tmp.path().join(d))
        .collect();
    let codes = [
        invoke("run", &["--gamma", "0.6", "--sigma", "1"], &dirs[0]),
        invoke("run", &["--gamma", "0.6", "--sigma", "1"], &dirs[1]),
        invoke("sweep", &["--gamma", "0:1:0.25", "--sigma", "0.5,2"], &dirs[2]),
        invoke("sweep", &["--gamma", "0:1:0.25", "--sigma", "0.5,2", "--sequential"], &dirs[3]),
        invoke("paired", &["--gammas", "0,0.7"], &dirs[4]),
        invoke("paired", &["--gammas", "0,0.7", "--sequential"], &dirs[5]),
    ];
    if codes.iter().any(|&c| c != 0) {
        return Err(format!("cli exit codes {codes:?}"));
    }
    let same = |a: &Path, b: &Path| read_dir_files(a) == read_dir_files(b);
    let repeat = same(&dirs[0], &dirs[1]);
    let sweep_par = same(&dirs[2], &dirs[3]);
    let paired_par = same(&dirs[4], &dirs[5]);
    // Library level: paired runs and parallel replication agree with sequential.
    let config = base().with_gamma(0.5);
    let par = run_replicated(&config, 20, Execution::Parallel).map_err(|e| e.to_string())?;
    let seq = run_replicated(&config, 20, Execution::Sequential).map_err(|e| e.to_string())?;
    let paired = run_paired(&config, &[0.5], 3).map_err(|e| e.to_string())?;
    let lib_ok = par == seq && paired[0] == run(&config, 3).map_err(|e| e.to_string())?;
    check(
        repeat && sweep_par && paired_par && lib_ok,
        format!(
            "repeated run byte-identical {repeat}; sweep parallel == sequential {sweep_par}; \
             paired parallel == sequential {paired_par}; library parallel == sequential {lib_ok}"
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("C1 slope reproduction", c1_slopes),
        ("C2 gamma=0 topology invariance", c2_topology_invariance),
        ("C3 low-pressure diagonal", c3_low_pressure_diagonal),
        ("C4 high-pressure amplification", c4_high_pressure_amplification),
        ("C5 inequality transition", c5_inequality_transition),
        ("C6 quartile-difference unimodality", c6_quartile_unimodality),
        ("C7 metric oracles", c7_metric_oracles),
        ("C8 quality CLT", c8_clt),
        ("C9 invariance properties", c9_invariance),
        ("C10 determinism and parallel equivalence", c10_determinism),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                println!("[FAIL] {name} ({secs:.1}s): {detail}");
                failed.push(name);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", criteria.len());
    } else {
        println!("acceptance: {} of {} criteria failed: {}", failed.len(), criteria.len(), failed.join(", "));
        std::process::exit(1);
    }
}
