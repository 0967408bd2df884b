//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Failing criteria are reported, not asserted, so the suite always completes;
//! the process only exits non-zero when a criterion cannot be evaluated at all.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use num_rational::Rational64;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use regforce::detector::{quota_detect, BehaviorTrace};
use regforce::experiments::{
    emit_outputs, load_summary, parse_config_str, parse_config_with, run, ExperimentConfig,
    Overrides, RunReport, Scale, ALL_COMPLIANT,
};
use regforce::gametheory::{
    enforcement_holds, load_fixture, pure_nash_set, EquilibriumKind, NormalFormGame, COMPLY,
    DEFECT,
};
use regforce::shaping::{
    boycott_shape, threshold_diminish, RewardHistory, ShapingContext, ShapingStage,
    ThresholdRegulation,
};

type Outcome = Result<(bool, String), String>;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn desk(name: &str) -> Result<ExperimentConfig, String> {
    parse_config_with(&configs().join(name), Scale::Desk, &Overrides::default())
        .map_err(|e| e.to_string())
}

fn pooled(a: Option<f64>, b: Option<f64>) -> f64 {
    (a.unwrap_or(0.0).powi(2) + b.unwrap_or(0.0).powi(2)).sqrt()
}

fn timed(f: impl FnOnce() -> Outcome) -> (Outcome, Duration) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed())
}

// ---- 1 -------------------------------------------------------------------

fn nash_fixture() -> Outcome {
    let started = Instant::now();
    let fx = load_fixture(&configs().join("fixture_payoffs.toml")).map_err(|e| e.to_string())?;
    let r = |s: &str| regforce::gametheory::parse_decimal(s).unwrap();
    let before = fx.before.to_exact().map_err(|e| e.to_string())?.to_game();
    let after = fx.after.to_exact().map_err(|e| e.to_string())?.to_game();

    let unique = |g: &NormalFormGame<Rational64>, p: [usize; 2]| {
        let set = pure_nash_set(g);
        set.len() == 1 && set[0].profile == p && set[0].kind != EquilibriumKind::NotNash
    };
    let eb = enforcement_holds(&before, "C", "D").map_err(|e| e.to_string())?;
    let ea = enforcement_holds(&after, "C", "D").map_err(|e| e.to_string())?;
    let ok = unique(&before, [DEFECT, DEFECT])
        && unique(&after, [COMPLY, COMPLY])
        && !eb.holds
        && ea.holds
        && eb.margins.iter().all(|m| *m == r("-206.9"))
        && ea.margins.iter().all(|m| *m == r("247.1"));
    let fast = started.elapsed() < Duration::from_secs(1);
    Ok((
        ok && fast,
        format!(
            "before NE {:?}, after NE {:?}, margins {} / {}",
            pure_nash_set(&before).iter().map(|c| &c.profile).collect::<Vec<_>>(),
            pure_nash_set(&after).iter().map(|c| &c.profile).collect::<Vec<_>>(),
            eb.margins[0],
            ea.margins[0]
        ),
    ))
}

// ---- 2 -------------------------------------------------------------------

fn boycott_oracle(raw: Rational64, flags: &[bool], obs: &[Rational64], b: Rational64) -> Rational64 {
    let mut sum = Rational64::zero();
    let mut k = 0i64;
    for i in 0..flags.len() {
        if flags[i] {
            sum += obs[i];
            k += 1;
        }
    }
    if k == 0 {
        raw
    } else {
        raw - b * sum / Rational64::from_integer(k)
    }
}

fn boycott_cases() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut bad = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=10);
        let flags: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
        let obs: Vec<Rational64> = (0..n).map(|_| Rational64::from_integer(rng.gen_range(0..=5))).collect();
        let raw = Rational64::from_integer(rng.gen_range(-1..=5));
        let b1 = Rational64::new(rng.gen_range(0..=40), 10);
        let b2 = Rational64::new(rng.gen_range(0..=40), 10);
        let f = |b: Rational64| boycott_shape(raw, &flags, &obs, &b).unwrap();

        let matches = f(b1) == boycott_oracle(raw, &flags, &obs, b1);
        let zero_b = f(Rational64::zero()) == raw;
        let none = boycott_shape(raw, &vec![false; n], &obs, &b1).unwrap() == raw;
        let linear = f(b1 + b2) - raw == (f(b1) - raw) + (f(b2) - raw);
        if !(matches && zero_b && none && linear) {
            bad += 1;
        }
    }
    Ok((bad == 0, format!("{bad}/1000 cases disagree")))
}

// ---- 3 -------------------------------------------------------------------

fn threshold_table() -> Outcome {
    let tau = Rational64::from_integer(2);
    let stage = ShapingStage::Threshold(ThresholdRegulation { tau: 2.0, window: 3 });
    let mut bad = Vec::new();
    for i in 0..=10i64 {
        for raw in 0..=5i64 {
            let r = Rational64::from_integer(raw);
            let acc = Rational64::from_integer(i);
            let expected = if i <= 2 { r } else { -Rational64::one() };
            // history of three previous steps summing to I
            let hist: Vec<Rational64> = [i.min(5), (i - 5).clamp(0, 5), (i - 10).max(0)]
                .iter()
                .map(|&x| Rational64::from_integer(x))
                .collect();
            let h = RewardHistory::from_slice(3, &hist);
            let ctx = ShapingContext { history: &h, verdicts: &[], observed: &[] };
            let direct = threshold_diminish(r, &acc, &tau);
            let staged = stage.apply(r, &ctx).unwrap();
            if direct != expected || staged != expected {
                bad.push((i, raw));
            }
        }
    }
    Ok((bad.is_empty(), format!("{} of 66 (I, R) cells wrong {:?}", bad.len(), bad)))
}

// ---- 4 -------------------------------------------------------------------

fn quota_traces() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let quota = 3;
    let (mut fp, mut fneg) = (0, 0);
    for id in 0..10_000 {
        let cap: u32 = [2, 3, 5][rng.gen_range(0..3)];
        let len = rng.gen_range(1..=200);
        let mut rewards: Vec<u32> = (0..len).map(|_| rng.gen_range(0..=cap)).collect();
        let defective = cap > quota;
        if defective {
            // a defective agent exceeds the quota at least once
            let at = rng.gen_range(0..len);
            rewards[at] = rng.gen_range(quota + 1..=cap);
        }
        let flagged = quota_detect(&BehaviorTrace::from_rewards(id, &rewards), quota).flagged;
        match (flagged, defective) {
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            _ => {}
        }
    }
    Ok((fp == 0 && fneg == 0, format!("{fp} false positives, {fneg} false negatives")))
}

// ---- 5 -------------------------------------------------------------------

fn detector_trend() -> Outcome {
    let c = desk("detector.toml")?;
    let (rep, took) = run_timed(&c)?;
    let m = &rep.detector_metrics;
    let long_ok = m.iter().filter(|p| p.length >= 20).all(|p| p.test_acc >= 0.95);
    let mono = m.windows(2).all(|w| w[1].test_acc + 0.02 >= w[0].test_acc);
    let fast = took <= Duration::from_secs(300);
    let pts: Vec<String> = m.iter().map(|p| format!("L={}:{:.3}", p.length, p.test_acc)).collect();
    Ok((
        long_ok && mono && fast && m.len() == 4,
        format!("test acc {} ; {:.0}s", pts.join(" "), took.as_secs_f64()),
    ))
}

fn run_timed(c: &ExperimentConfig) -> Result<(RunReport, Duration), String> {
    let t = Instant::now();
    let r = run(c).map_err(|e| e.to_string())?;
    Ok((r, t.elapsed()))
}

// ---- 6 -------------------------------------------------------------------

fn experiment1() -> Outcome {
    let c = desk("exp1.toml")?;
    let (rep, took) = run_timed(&c)?;
    let get = |b: f64| rep.condition(&format!("B={b}")).cloned();
    let conds: Vec<_> = c.boycott.iter().map(|&b| get(b)).collect::<Option<_>>().ok_or("missing condition")?;
    let first = &conds[0];
    let last = conds.last().unwrap();
    let a = first.avg_d > first.avg_c;
    let b = conds.windows(2).all(|w| {
        w[1].avg_d.unwrap_or(f64::NAN) <= w[0].avg_d.unwrap_or(f64::NAN) + pooled(w[0].se_d, w[1].se_d)
    });
    let cf = rep.counterfactual_avg_c.ok_or("no all-compliant run")?;
    let cc = last.avg_d.unwrap_or(f64::NAN) < cf;
    let d: Vec<String> = conds
        .iter()
        .map(|s| format!("{}: D={:.1}±{:.1} C={:.1}", s.condition, s.avg_d.unwrap_or(f64::NAN), s.se_d.unwrap_or(0.0), s.avg_c.unwrap_or(f64::NAN)))
        .collect();
    Ok((
        a && b && cc && c.replicates >= 5 && took <= Duration::from_secs(1800),
        format!(
            "(a) {a} (b) {b} (c) {cc}; {} ; all-compliant C={cf:.1}; {} seeds; {:.0}s",
            d.join(", "),
            c.replicates,
            took.as_secs_f64()
        ),
    ))
}

// ---- 7 -------------------------------------------------------------------

fn experiment2() -> Outcome {
    let c = desk("exp2.toml")?;
    let (rep, took) = run_timed(&c)?;
    let all = rep.condition(ALL_COMPLIANT).ok_or("no all-compliant run")?;
    let (s, w) = (all.avg_strong.unwrap_or(f64::NAN), all.avg_weak.unwrap_or(f64::NAN));
    let b0 = rep.condition("B=0").ok_or("missing B=0")?;
    let b2 = rep.condition("B=2").ok_or("missing B=2")?;
    let (d0, d2) = (b0.avg_d.unwrap_or(f64::NAN), b2.avg_d.unwrap_or(f64::NAN));
    let se = pooled(b0.se_d, b2.se_d);
    let strong = s > w;
    let drop = d0 - d2 > se;
    Ok((
        strong && drop && took <= Duration::from_secs(1800),
        format!(
            "strong {s:.1} vs weak {w:.1} ({strong}); D(B=0)={d0:.1} D(B=2)={d2:.1} drop {:.1} vs pooled SE {se:.1} ({drop}); {:.0}s",
            d0 - d2,
            took.as_secs_f64()
        ),
    ))
}

// ---- 8 -------------------------------------------------------------------

fn egta_flip() -> Outcome {
    let c = desk("egta.toml")?;
    let (rep, took) = run_timed(&c)?;
    let before = rep.payoff_before.as_ref().ok_or("no before matrix")?;
    let after = rep.payoff_after.as_ref().ok_or("no after matrix")?;
    // margins are f(C | C) - f(D | C); negative means defecting pays
    let defect_pays = before.margins.iter().all(|m| *m < 0.0);
    let cc_ne = after
        .equilibria
        .iter()
        .any(|e| e.profile == ["C".to_string(), "C".to_string()] && e.kind != EquilibriumKind::NotNash);
    Ok((
        defect_pays && cc_ne && after.enforcement_holds && took <= Duration::from_secs(3600),
        format!(
            "before margins [{:.1}, {:.1}]; after margins [{:.1}, {:.1}], (C,C) NE {cc_ne}, enforcement {}; {:.0}s",
            before.margins[0],
            before.margins[1],
            after.margins[0],
            after.margins[1],
            after.enforcement_holds,
            took.as_secs_f64()
        ),
    ))
}

// ---- 9 -------------------------------------------------------------------

const SMALL: &[(&str, &str)] = &[
    (
        "exp1",
        "scenario = \"exp1\"\nseed = 5\nreplicates = 2\ntrain_episodes = 40\neval_episodes = 3\nepisode_length = 60\nboycott = [0.0, 2.0]\n",
    ),
    (
        "exp2",
        "scenario = \"exp2\"\nseed = 5\nreplicates = 2\ntrain_episodes = 40\neval_episodes = 4\nepisode_length = 60\nboycott = [0.0, 2.0]\n[detector]\nepochs = 5\n",
    ),
    (
        "egta",
        "scenario = \"egta\"\nseed = 5\nreplicates = 1\ntrain_episodes = 20\neval_episodes = 2\nepisode_length = 40\n",
    ),
    (
        "detector",
        "scenario = \"detector\"\nseed = 5\n[detector]\nlengths = [5, 10]\nepochs = 5\ncorpus_traces = 60\ntrace_length = 40\n",
    ),
];

fn persisted(dir: &Path) -> Result<Vec<(String, String)>, String> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    let mut out = Vec::new();
    for f in files {
        let name = f.file_name().unwrap().to_string_lossy().into_owned();
        let text = if name == "summary.json" {
            let mut s = load_summary(dir).map_err(|e| e.to_string())?;
            s.wall_clock_seconds = 0.0;
            serde_json::to_string(&s).unwrap()
        } else {
            fs::read_to_string(&f).map_err(|e| e.to_string())?
        };
        out.push((name, text));
    }
    Ok(out)
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut differing = Vec::new();
    for (name, text) in SMALL {
        let c = parse_config_str(text, Scale::Desk, &Overrides::default()).map_err(|e| e.to_string())?;
        let mut seen = Vec::new();
        for k in 0..2 {
            let dir = tmp.path().join(format!("{name}{k}"));
            let rep = run(&c).map_err(|e| format!("{name}: {e}"))?;
            emit_outputs(&rep, &dir).map_err(|e| e.to_string())?;
            seen.push(persisted(&dir)?);
        }
        if seen[0] != seen[1] || seen[0].is_empty() {
            differing.push(*name);
        }
    }
    Ok((
        differing.is_empty(),
        format!("runners with differing outputs: {differing:?} (of exp1, exp2, egta, detector)"),
    ))
}

// ---- 10 ------------------------------------------------------------------

/// Brute force over every profile and every unilateral deviation.
fn brute_force(g: &NormalFormGame<i64>) -> Vec<(Vec<usize>, EquilibriumKind)> {
    let counts = g.strategy_counts();
    let mut out = Vec::new();
    let total: usize = counts.iter().product();
    for mut k in 0..total {
        let mut p = vec![0; counts.len()];
        for i in (0..counts.len()).rev() {
            p[i] = k % counts[i];
            k /= counts[i];
        }
        let base = g.payoffs(&p).unwrap();
        let (mut strict, mut nash) = (true, true);
        for i in 0..counts.len() {
            for s in 0..counts[i] {
                if s == p[i] {
                    continue;
                }
                let mut q = p.clone();
                q[i] = s;
                let dev = g.payoffs(&q).unwrap()[i];
                if dev > base[i] {
                    nash = false;
                }
                if dev >= base[i] {
                    strict = false;
                }
            }
        }
        if nash {
            out.push((p, if strict { EquilibriumKind::StrictNash } else { EquilibriumKind::WeakNash }));
        }
    }
    out
}

fn random_game(rng: &mut ChaCha8Rng, players: usize) -> NormalFormGame<i64> {
    let names = vec![vec!["C".to_string(), "D".to_string()]; players];
    // small range so that ties, hence weak equilibria, are common
    NormalFormGame::from_fn(names, |_| (0..players).map(|_| rng.gen_range(0..4)).collect()).unwrap()
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut bad = (0, 0);
    for (players, n, slot) in [(2, 10_000, 0), (3, 100, 1)] {
        for _ in 0..n {
            let g = random_game(&mut rng, players);
            let ours: Vec<_> = pure_nash_set(&g).into_iter().map(|c| (c.profile, c.kind)).collect();
            if ours != brute_force(&g) {
                if slot == 0 {
                    bad.0 += 1
                } else {
                    bad.1 += 1
                }
            }
        }
    }
    Ok((
        bad == (0, 0),
        format!("mismatches: {}/10000 two-player, {}/100 three-player", bad.0, bad.1),
    ))
}

fn main() {
    // `cargo test -- --list` and friends must not start the long runs
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("nash fixture exactness", nash_fixture),
        ("boycott shaping arithmetic", boycott_cases),
        ("threshold regulation table", threshold_table),
        ("rule detector on 10^4 traces", quota_traces),
        ("learned detector length trend", detector_trend),
        ("experiment 1 trend", experiment1),
        ("experiment 2 trend", experiment2),
        ("egta flip", egta_flip),
        ("determinism", determinism),
        ("nash oracle equivalence", oracle_equivalence),
    ];
    // e.g. REGFORCE_ACCEPTANCE_ONLY=1,2,10 for a partial run
    let only: Option<Vec<usize>> = std::env::var("REGFORCE_ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let (mut passed, mut ran) = (0, 0);
    let mut broken = false;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if only.as_ref().is_some_and(|o| !o.contains(&(i + 1))) {
            continue;
        }
        ran += 1;
        let (out, took) = timed(f);
        match out {
            Ok((ok, detail)) => {
                passed += ok as usize;
                let tag = if ok { "PASS" } else { "FAIL" };
                println!("{tag} [{:>2}] {name}: {detail} ({:.2}s)", i + 1, took.as_secs_f64());
            }
            Err(e) => {
                broken = true;
                println!("FAIL [{:>2}] {name}: could not evaluate: {e}", i + 1);
            }
        }
    }
    println!("acceptance: {passed}/{ran} criteria pass");
    if broken {
        std::process::exit(1);
    }
}
