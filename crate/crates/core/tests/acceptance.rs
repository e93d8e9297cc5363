//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach stdout.
//! Exits nonzero if any criterion fails, except those listed in
//! `KNOWN_UNATTAINABLE`, which are reported but cannot pass as pinned.

use std::process::Command;
use std::time::Instant;

use genetic_drift::algorithm::{select_winner, AlgorithmState, BitVector, MarginalVector, OneMax, UpdateRule};
use genetic_drift::analysis::{
    binomial_mode_bound, bstep_probability_exact, chain_hitting_time_oracle, drift_lower_bound, mode_bound_check,
    normal_cdf, normal_cdf_bounds, poisson_binomial_pmf, variable_drift_bound, DriftFunction, Dynamics, ModeSide,
};
use genetic_drift::experiments::stats::{loglog_slope, mean, median, proportion_se};
use genetic_drift::experiments::{
    balanced_k, border_census, bstep_frequency_experiment, clt_diagnostic, coupon_collector_experiment,
    hitting_time_experiment, runtime_sweep, superposition_stats, CouponConfig, HittingConfig, HittingMode,
    SweepConfig,
};
use genetic_drift::{Algorithm, TrackedBits};

/// Max mass times sqrt(m) is at least sqrt(2/pi) ~ 0.80 for large m at p = 1/2,
/// so the pinned constant 0.5 cannot hold. See the project notes.
const KNOWN_UNATTAINABLE: &[u32] = &[4];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

// 1. -------------------------------------------------------------------

/// Offspring of length 4 whose bit 0 is (xi, yi) and whose OneMax values
/// differ by `diff` (x minus y).
fn pair(xi: bool, yi: bool, diff: i32) -> (BitVector, BitVector) {
    let rest = diff - (xi as i32 - yi as i32);
    let (a, b) = if rest >= 0 { (rest, 0) } else { (0, -rest) };
    let fill = |first: bool, ones: i32| BitVector::new((0..4).map(|j| if j == 0 { first } else { j <= ones }).collect());
    (fill(xi, a), fill(yi, b))
}

fn update_rule_exactness() -> Outcome {
    let n = 4usize;
    let (lo, hi) = (1.0 / n as f64, 1.0 - 1.0 / n as f64);
    let clamp = |p: f64| p.max(lo).min(hi);
    let (k, rho) = (10.0, 0.1);
    let cga = UpdateRule::cga(k).unwrap();
    let mmas = UpdateRule::mmas(rho).unwrap();
    let mut cases = 0;
    let mut bad = Vec::new();
    for &p in &[0.5, lo, hi, lo + 0.05] {
        for (xi, yi) in [(false, false), (false, true), (true, false), (true, true)] {
            for diff in [2, -2, 0] {
                let (x, y) = pair(xi, yi, diff);
                let (w, l) = select_winner(&x, &y, &OneMax);
                let x_wins = diff >= 0;
                if (w == &x) != x_wins {
                    bad.push(format!("winner for diff {diff}"));
                }
                let (wi, li) = if x_wins { (xi, yi) } else { (yi, xi) };
                let model = MarginalVector::from_probs(vec![p; n]).unwrap();
                let want_cga = clamp(p + (wi as i32 - li as i32) as f64 / k);
                let want_mmas = clamp(if wi { (1.0 - rho) * p + rho } else { (1.0 - rho) * p });
                let got_cga = cga.update(&model, w, l).get(0);
                let got_mmas = mmas.update(&model, w, l).get(0);
                cases += 2;
                if got_cga != want_cga {
                    bad.push(format!("cga p={p} bits=({xi},{yi}) diff={diff}: {got_cga} != {want_cga}"));
                }
                if got_mmas != want_mmas {
                    bad.push(format!("mmas p={p} bits=({xi},{yi}) diff={diff}: {got_mmas} != {want_mmas}"));
                }
            }
        }
    }
    outcome(bad.is_empty(), format!("{cases} transitions checked, {} mismatches {:?}", bad.len(), bad))
}

// 2. -------------------------------------------------------------------

fn within(x: f64, want: f64, se: f64, z: f64) -> bool {
    (x - want).abs() <= z * se
}

fn superposition() -> Outcome {
    let (n, p, k, rho, steps) = (33, 0.5, 50.0, 0.1, 200_000);
    let q = p * (1.0 - p);
    let c = superposition_stats(UpdateRule::cga(k).unwrap(), n, p, steps, 0, 11).unwrap();
    let rw = c.rw_steps as f64;
    let up = c.rw_up as f64 / rw;
    let down = c.rw_down as f64 / rw;
    let se_q = (q * (1.0 - q) / rw).sqrt();
    let b_mean = c.b_delta.mean();
    let b_want = 2.0 * q / k;

    let m = superposition_stats(UpdateRule::mmas(rho).unwrap(), n, p, steps, 0, 12).unwrap();
    let m_up = m.rw_up as f64 / m.rw_steps as f64;
    let m_down = m.b_down as f64 / m.b_steps as f64;
    let want_down = (1.0 - p) * (1.0 - p);

    let checks = [
        within(up, q, se_q, 4.0),
        within(down, q, se_q, 4.0),
        within(b_mean, b_want, c.b_delta.std_err(), 4.0),
        within(m_up, p, proportion_se(p, m.rw_steps), 4.0),
        within(m_down, want_down, proportion_se(want_down, m.b_steps), 4.0),
        c.model_unchanged && m.model_unchanged,
    ];
    outcome(
        checks.iter().all(|&b| b),
        format!(
            "cga rw up {up:.4} down {down:.4} (want {q}), b mean {b_mean:.6} (want {b_want:.6}); \
             mmas rw up {m_up:.4} (want {p}), b down {m_down:.4} (want {want_down})"
        ),
    )
}

// 3. -------------------------------------------------------------------

fn ln_choose(a: u64, b: u64) -> f64 {
    let lf = |x: u64| (1..=x).map(|i| (i as f64).ln()).sum::<f64>();
    lf(a) - lf(b) - lf(a - b)
}

/// With all marginals at 1/2, D + (n - 1) ~ Bin(2(n - 1), 1/2).
fn bstep_closed_form(n: u64) -> f64 {
    let m = n - 1;
    let scale = -((2 * m) as f64) * 2f64.ln();
    (ln_choose(2 * m, m) + scale).exp() + (ln_choose(2 * m, m - 1) + scale).exp()
}

fn bstep_scaling() -> Outcome {
    let ns = [17usize, 65, 257];
    let exact: Vec<f64> = ns.iter().map(|&n| bstep_probability_exact(&vec![0.5; n], 0).unwrap()).collect();
    let oracle_ok = ns.iter().zip(&exact).all(|(&n, &e)| (e - bstep_closed_form(n as u64)).abs() < 1e-12);
    let r1 = exact[0] / exact[1];
    let r2 = exact[1] / exact[2];
    let ratios_ok = (r1 - 2.0).abs() <= 0.3 && (r2 - 2.0).abs() <= 0.3;
    let trials = 200_000;
    let rows = bstep_frequency_experiment(&ns, trials, 21, jobs()).unwrap();
    let mc_ok = rows.iter().all(|r| {
        let se = (r.exact * (1.0 - r.exact) / trials as f64).sqrt();
        within(r.empirical, r.exact, se, 4.0)
    });
    let mc: Vec<String> = rows.iter().map(|r| format!("{:.4}", r.empirical)).collect();
    outcome(
        oracle_ok && ratios_ok && mc_ok,
        format!(
            "exact {:.5}/{:.5}/{:.5}, ratios {r1:.3} {r2:.3}, Monte Carlo {}",
            exact[0],
            exact[1],
            exact[2],
            mc.join("/")
        ),
    )
}

// 4. -------------------------------------------------------------------

fn enumerate(probs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; probs.len() + 1];
    for mask in 0u32..(1 << probs.len()) {
        let w: f64 = probs
            .iter()
            .enumerate()
            .map(|(j, &p)| if mask >> j & 1 == 1 { p } else { 1.0 - p })
            .product();
        out[mask.count_ones() as usize] += w;
    }
    out
}

fn mode_bounds() -> Outcome {
    let mut enum_err = 0.0f64;
    for m in 1..=12usize {
        let probs: Vec<f64> = (0..m).map(|j| 1.0 / 6.0 + (j as f64 * 0.37).fract() * (2.0 / 3.0)).collect();
        let pmf = poisson_binomial_pmf(&probs).unwrap();
        for (a, b) in pmf.masses().iter().zip(enumerate(&probs)) {
            enum_err = enum_err.max((a - b).abs());
        }
    }

    let mut bound_ok = true;
    let mut ratios = Vec::new();
    for m in [4u64, 16, 64, 256] {
        for p in [0.5, 1.0 / 6.0, 5.0 / 6.0] {
            let probs = vec![p; m as usize];
            let (max_mass, ratio) = mode_bound_check(&probs).unwrap();
            ratios.push(ratio);
            let mean = m as f64 * p;
            let bound = if (mean - mean.round()).abs() < 1e-9 {
                binomial_mode_bound(m, p, ModeSide::Ceil).unwrap()
            } else {
                // the mode sits at floor or ceil of the mean; the larger bound covers both
                let pmf = poisson_binomial_pmf(&probs).unwrap();
                let at = |k: f64| pmf.mass(k as i64);
                let c = binomial_mode_bound(m, p, ModeSide::Ceil).ok();
                let f = binomial_mode_bound(m, p, ModeSide::Floor).ok();
                bound_ok &= c.is_none_or(|c| at(mean.ceil()) <= c) && f.is_none_or(|f| at(mean.floor()) <= f);
                f64::INFINITY
            };
            bound_ok &= max_mass <= bound;
        }
    }
    let worst = ratios.iter().cloned().fold(0.0, f64::max);
    let constant_ok = worst <= 0.5;
    outcome(
        enum_err <= 1e-12 && bound_ok && constant_ok,
        format!(
            "enumeration error {enum_err:.1e}, binomial bounds hold: {bound_ok}, max mass*sqrt(m) up to {worst:.4} \
             (pinned <= 0.5)"
        ),
    )
}

// 5. -------------------------------------------------------------------

fn drift_direction() -> Outcome {
    let (n, k) = (33, 50.0);
    let st = superposition_stats(UpdateRule::cga(k).unwrap(), n, 0.5, 1_000_000, 0, 51).unwrap();
    let bound = drift_lower_bound(&MarginalVector::uniform(n).unwrap(), 0, k).unwrap();
    // independent value of the bound: (2/11)(1/4)/K / sqrt(32/4)
    let want = 2.0 / 11.0 * 0.25 / k / 8f64.sqrt();
    let emp = st.delta.mean();
    let se = st.delta.std_err();
    outcome(
        (bound - want).abs() < 1e-15 && emp >= bound - 4.0 * se,
        format!("E[delta] {emp:.6} (se {se:.1e}) vs bound {bound:.6}"),
    )
}

// 6. -------------------------------------------------------------------

/// Symmetric birth-death walk with rate q(i) = (i/K)(1 - i/K) each way,
/// absorbed at 0 and K: q(i)(h(i+1) - 2h(i) + h(i-1)) = -1.
fn cga_walk_closed_form(k: usize, start: usize) -> f64 {
    let kf = k as f64;
    let inv_q = |i: usize| {
        let p = i as f64 / kf;
        1.0 / (p * (1.0 - p))
    };
    // h(i) = i h(1) - sum_{j=1}^{i-1} sum_{l=1}^{j} 1/q(l)
    let mut cum = vec![0.0; k + 1];
    for j in 1..k {
        cum[j] = cum[j - 1] + inv_q(j);
    }
    let tail = |i: usize| (1..i).map(|j| cum[j]).sum::<f64>();
    let h1 = tail(k) / kf;
    start as f64 * h1 - tail(start)
}

fn quadratic_hitting() -> Outcome {
    let vals: Vec<f64> = [20u64, 40, 80]
        .iter()
        .map(|&k| chain_hitting_time_oracle(k, (0, k), Dynamics::CgaRw, k / 2).unwrap())
        .collect();
    let closed_ok = [20usize, 40, 80]
        .iter()
        .zip(&vals)
        .all(|(&k, &v)| (v - cga_walk_closed_form(k, k / 2)).abs() <= 1e-8 * v);
    let scaled: Vec<f64> = vals.iter().zip([20.0, 40.0, 80.0]).map(|(v, k)| v / (k * k)).collect();
    let (lo, hi) = scaled.iter().fold((f64::MAX, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));

    let oracle = chain_hitting_time_oracle(50, (0, 50), Dynamics::CgaRw, 25).unwrap();
    let mut cfg = HittingConfig::new(HittingMode::RwOnly, Algorithm::Cga, 50.0, 1.0, 0.1, 10_000);
    cfg.base_seed = 61;
    cfg.jobs = jobs();
    let mc = hitting_time_experiment(&cfg).unwrap().summary;
    let rel = (mc.mean_t - oracle).abs() / oracle;
    outcome(
        closed_ok && hi / lo <= 2.0 && rel <= 0.05 && mc.censored == 0,
        format!(
            "V/K^2 = {:.3}/{:.3}/{:.3} (spread {:.3}); K=50 oracle {oracle:.1}, Monte Carlo {:.1} ({:.2}% off)",
            scaled[0],
            scaled[1],
            scaled[2],
            hi / lo,
            mc.mean_t,
            100.0 * rel
        ),
    )
}

// 7. -------------------------------------------------------------------

fn hitting_second_statement() -> Outcome {
    let mut c = HittingConfig::new(HittingMode::RwOnly, Algorithm::Cga, 50.0, 0.5, 0.1, 10_000);
    c.base_seed = 71;
    c.jobs = jobs();
    let cs = hitting_time_experiment(&c).unwrap().summary;
    let c_bound = 1.0 - (-2.5f64).exp();

    let mut m = HittingConfig::new(HittingMode::RwOnly, Algorithm::Mmas, 1.0 / 50.0, 0.5, 0.1, 10_000);
    m.base_seed = 72;
    m.jobs = jobs();
    let ms = hitting_time_experiment(&m).unwrap().summary;
    let m_bound = 1.0 - (-1.0 / 1.6f64).exp();

    let c_ok = (cs.bound - c_bound).abs() < 1e-12 && cs.not_bridged >= c_bound - 3.0 * cs.not_bridged_se;
    let m_ok = (ms.bound - m_bound).abs() < 1e-12 && ms.not_bridged >= m_bound - 3.0 * ms.not_bridged_se;
    outcome(
        c_ok && m_ok,
        format!(
            "cga {:.4} vs bound {c_bound:.4} (window {}), mmas {:.4} vs bound {m_bound:.4} (window {:.1})",
            cs.not_bridged, cs.window, ms.not_bridged, ms.window
        ),
    )
}

// 8. -------------------------------------------------------------------

fn drift_regimes() -> Outcome {
    let n = 100usize;
    let nf = n as f64;
    let checkpoint = (nf * nf.ln()).ceil() as u64;
    let mut cfg = SweepConfig::new(Algorithm::Cga, vec![n], vec![0.5], 200);
    cfg.tracked_bits = TrackedBits::All;
    cfg.base_seed = 8_000;
    cfg.jobs = jobs();
    let census = border_census(&cfg, checkpoint).unwrap();
    let hits = census.lower_hits();
    let frac_many = hits.iter().filter(|&&h| h >= 5).count() as f64 / hits.len() as f64;

    let k_safe = (10.0 * nf.sqrt() * nf.ln()).ceil();
    let mut safe = SweepConfig::new(Algorithm::Cga, vec![n], vec![1.0 / k_safe], 200);
    safe.base_seed = 8_500;
    safe.jobs = jobs();
    let res = runtime_sweep(&safe).unwrap();
    let clean = res.records.iter().filter(|r| !r.censored() && r.min_marginal >= 1.0 / 3.0).count() as f64
        / res.records.len() as f64;
    outcome(
        frac_many >= 0.90 && clean >= 0.99,
        format!(
            "K=2: >=5 lower-border bits by t={checkpoint} in {:.1}% (mean {:.1}); K={k_safe}: no marginal below 1/3 \
             in {:.1}%",
            100.0 * frac_many,
            mean(&hits.iter().map(|&h| h as f64).collect::<Vec<_>>()),
            100.0 * clean
        ),
    )
}

// 9. -------------------------------------------------------------------

fn runtime_scaling() -> Outcome {
    let ns = [25usize, 50, 100, 200];
    let mut parts = Vec::new();
    let mut ok = true;
    for algo in [Algorithm::Cga, Algorithm::Mmas] {
        let mut pts = Vec::new();
        for (idx, &n) in ns.iter().enumerate() {
            let mut cfg = SweepConfig::new(algo, vec![n], vec![1.0 / balanced_k(n)], 100);
            cfg.base_seed = 9_000 + 1_000 * idx as u64;
            cfg.jobs = jobs();
            let res = runtime_sweep(&cfg).unwrap();
            let it: Vec<f64> = res.records.iter().map(|r| r.iterations.unwrap_or(r.budget) as f64).collect();
            let nf = n as f64;
            pts.push((nf * nf.ln(), median(&it)));
        }
        let slope = loglog_slope(&pts);

        let n = 100;
        let k = balanced_k(n);
        let mut cfg = SweepConfig::new(algo, vec![n], vec![1.0 / k, 1.0 / (16.0 * k)], 50);
        cfg.base_seed = 9_900;
        cfg.jobs = jobs();
        let res = runtime_sweep(&cfg).unwrap();
        let small = mean(&res.cell_iterations(n, 1.0 / k));
        let large = mean(&res.cell_iterations(n, 1.0 / (16.0 * k)));
        let ratio = large / small;
        ok &= (0.8..=1.3).contains(&slope) && ratio >= 4.0;
        parts.push(format!("{algo}: slope {slope:.3}, x16 ratio {ratio:.2}"));
    }
    outcome(ok, parts.join("; "))
}

// 10. ------------------------------------------------------------------

fn coupon() -> Outcome {
    let n = 100;
    let cfg = CouponConfig {
        n,
        m: 10,
        rule: UpdateRule::cga(balanced_k(n)).unwrap(),
        trials: 200,
        budget: None,
        base_seed: 10_000,
        jobs: jobs(),
    };
    let s = coupon_collector_experiment(&cfg).unwrap();
    // (n/2 - 1)(eps/2) ln n with eps = 1/2
    let t = 49.0 * 0.25 * 100f64.ln();
    let frac = s.times.iter().filter(|&&x| x as f64 >= t).count() as f64 / s.times.len() as f64;
    let th_ok = s.threshold.is_some_and(|x| (x - t).abs() < 1e-9);
    outcome(
        th_ok && t >= 56.0 && frac >= 0.95,
        format!("threshold {t:.2}, reached in {:.1}% of trials (median {:.0})", 100.0 * frac, s.median),
    )
}

// 11. ------------------------------------------------------------------

fn clt() -> Outcome {
    let s = clt_diagnostic(100, 10_000, 2000, 11_000, jobs()).unwrap();
    outcome(
        s.ks_distance <= 0.05 && !s.low_confidence,
        format!("KS distance {:.4}, mean {:.3}, sd {:.3}", s.ks_distance, s.mean, s.sd),
    )
}

// 12. ------------------------------------------------------------------

/// 1 - Phi(x) from the series Phi(x) = 1/2 + phi(x) sum x^(2k+1)/(1*3*...*(2k+1)),
/// independent of the library quadrature.
fn upper_tail(x: f64) -> f64 {
    let (mut term, mut sum) = (x, x);
    for k in 1..500 {
        term *= x * x / (2 * k + 1) as f64;
        sum += term;
    }
    0.5 - (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt() * sum
}

fn appendix_calculators() -> Outcome {
    let mut ok = true;
    let mut worst_rel = 0.0f64;
    for (c, a, m) in [(0.25, 1.0, 10.0), (2.0, 0.5, 100.0), (1e-3, 3.0, 7.0)] {
        let v = variable_drift_bound(&DriftFunction::new(move |_| c), a, m).unwrap();
        let want = m / c;
        worst_rel = worst_rel.max((v - want).abs() / want);
    }
    ok &= worst_rel <= 1e-6;
    let mut sandwich = 0;
    for i in 1..=10 {
        let x = 0.5 * i as f64;
        let (lo, hi) = normal_cdf_bounds(x).unwrap();
        let truth = 1.0 - normal_cdf(x);
        let cross = upper_tail(x);
        if lo <= truth && truth <= hi && (truth - cross).abs() <= 1e-9 {
            sandwich += 1;
        }
    }
    ok &= sandwich == 10;
    outcome(ok, format!("additive drift rel. error {worst_rel:.1e}, {sandwich}/10 normal-tail sandwiches"))
}

// 13. ------------------------------------------------------------------

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_genetic-drift");
    let sweep = |name: &str, jobs: &str| {
        let out = dir.path().join(name);
        let status = Command::new(bin)
            .args(["sweep", "--algo", "cga", "--n", "16,32", "--K", "8,16,32", "--trials", "6", "--seed", "1313"])
            .args(["--jobs", jobs, "--out"])
            .arg(&out)
            .output()
            .unwrap()
            .status;
        assert!(status.success());
        let summary = out.with_file_name(format!("{}.summary.csv", name.trim_end_matches(".csv")));
        (std::fs::read(&out).unwrap(), std::fs::read(summary).unwrap())
    };
    let a = sweep("a.csv", "1");
    let b = sweep("b.csv", "1");
    let c = sweep("c.csv", "4");

    // replaying a state reproduces offspring and model bit for bit
    let mut s1 = AlgorithmState::new(MarginalVector::uniform(20).unwrap(), UpdateRule::mmas(0.1).unwrap(), 5);
    let mut s2 = s1.clone();
    let replay = (0..200).all(|_| s1.step(&OneMax) == s2.step(&OneMax)) && s1.model() == s2.model();

    outcome(
        a == b && a == c && replay,
        format!("{} data bytes, identical across re-run and --jobs 4: {}", a.0.len(), a == b && a == c),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 13] = [
        (1, "update-rule exactness", update_rule_exactness),
        (2, "superposition statistics", superposition),
        (3, "b-step probability scaling", bstep_scaling),
        (4, "Poisson-binomial mode bounds", mode_bounds),
        (5, "drift lower-bound direction", drift_direction),
        (6, "quadratic random-walk hitting time", quadratic_hitting),
        (7, "hitting-time window probability", hitting_second_statement),
        (8, "genetic-drift regimes", drift_regimes),
        (9, "runtime scaling", runtime_scaling),
        (10, "coupon-collector recovery", coupon),
        (11, "CLT diagnostic", clt),
        (12, "drift and normal-tail calculators", appendix_calculators),
        (13, "determinism", determinism),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut unexpected = Vec::new();
    for (id, name, f) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let started = Instant::now();
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id:>2} ({name}): {} [{:.1}s]", o.detail, started.elapsed().as_secs_f64());
        if !o.pass && !KNOWN_UNATTAINABLE.contains(&id) {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
