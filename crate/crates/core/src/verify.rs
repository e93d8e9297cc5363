//! Bound-versus-oracle checks behind `verify-bounds`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algorithm::{sample_bits, MarginalVector, UpdateRule};
use crate::analysis::{
    binomial_mode_bound, bstep_probability_exact, chain_hitting_time_oracle, drift_lower_bound,
    mode_bound_check, normal_cdf, normal_cdf_bounds, poisson_binomial_pmf, potential_g_cga, potential_g_mmas,
    variable_drift_bound, Chain, DriftFunction, Dynamics, ModeSide,
};
use crate::error::{config, Result};
use crate::experiments::superposition_stats;
use crate::instrument::{classify_step, compute_d, StepClass};

pub const FAMILIES: &[&str] = &[
    "drift-bound",
    "poisson-mode",
    "binomial-mode",
    "bstep",
    "variable-drift",
    "normal-cdf",
    "potential-g",
    "chain",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub family: &'static str,
    pub name: String,
    pub value: f64,
    pub reference: f64,
    pub pass: bool,
}

struct Checks {
    family: &'static str,
    out: Vec<Check>,
}

impl Checks {
    fn push(&mut self, name: impl Into<String>, value: f64, reference: f64, pass: bool) {
        self.out.push(Check { family: self.family, name: name.into(), value, reference, pass });
    }

    fn close(&mut self, name: impl Into<String>, value: f64, reference: f64, tol: f64) {
        let pass = (value - reference).abs() <= tol;
        self.push(name, value, reference, pass);
    }

    fn le(&mut self, name: impl Into<String>, value: f64, reference: f64) {
        let pass = value <= reference;
        self.push(name, value, reference, pass);
    }
}

/// Runs the named families (all of them if `only` is empty).
pub fn verify_bounds(only: &[String], seed: u64) -> Result<Vec<Check>> {
    if let Some(bad) = only.iter().find(|f| !FAMILIES.contains(&f.as_str())) {
        return config(format!("unknown family `{bad}` (known: {})", FAMILIES.join(", ")));
    }
    let mut all = Vec::new();
    for &family in FAMILIES {
        if !only.is_empty() && !only.iter().any(|f| f == family) {
            continue;
        }
        let mut c = Checks { family, out: Vec::new() };
        match family {
            "drift-bound" => drift_bound(&mut c, seed)?,
            "poisson-mode" => poisson_mode(&mut c, seed)?,
            "binomial-mode" => binomial_mode(&mut c)?,
            "bstep" => bstep(&mut c, seed)?,
            "variable-drift" => variable_drift(&mut c)?,
            "normal-cdf" => normal_tails(&mut c)?,
            "potential-g" => potential_g(&mut c)?,
            "chain" => chains(&mut c)?,
            _ => unreachable!(),
        }
        all.extend(c.out);
    }
    Ok(all)
}

fn drift_bound(c: &mut Checks, seed: u64) -> Result<()> {
    let m = MarginalVector::uniform(5)?;
    let b = drift_lower_bound(&m, 0, 10.0)?;
    c.close("n=5 K=10 p=1/2", b, 1.0 / 220.0, 1e-15);
    let b2 = drift_lower_bound(&m, 0, 20.0)?;
    c.close("doubling K halves", b2, b / 2.0, 1e-15);
    let below = MarginalVector::filled(5, 0.2)?;
    c.push("p = 1/n rejected", 0.0, 0.0, drift_lower_bound(&below, 0, 10.0).is_err());

    let (n, k) = (33, 50.0);
    let st = superposition_stats(UpdateRule::cga(k)?, n, 0.5, 200_000, 0, seed)?;
    let bound = drift_lower_bound(&MarginalVector::uniform(n)?, 0, k)?;
    let lhs = st.delta.mean() + 4.0 * st.delta.std_err();
    c.push("E[delta] at n=33 K=50 (+4 SE) >= bound", lhs, bound, lhs >= bound);
    Ok(())
}

fn enumerate_pmf(probs: &[f64]) -> Vec<f64> {
    let m = probs.len();
    let mut out = vec![0.0; m + 1];
    for mask in 0u32..(1 << m) {
        let mut w = 1.0;
        for (j, &p) in probs.iter().enumerate() {
            w *= if mask >> j & 1 == 1 { p } else { 1.0 - p };
        }
        out[mask.count_ones() as usize] += w;
    }
    out
}

fn poisson_mode(c: &mut Checks, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for m in 1..=12 {
        let probs: Vec<f64> = (0..m).map(|_| rng.gen()).collect();
        let pmf = poisson_binomial_pmf(&probs)?;
        let brute = enumerate_pmf(&probs);
        for (a, b) in pmf.masses().iter().zip(&brute) {
            worst = worst.max((a - b).abs());
        }
        worst = worst.max((pmf.total() - 1.0).abs());
    }
    c.le("max |pmf - enumeration|, m <= 12", worst, 1e-12);

    let (m4, _) = mode_bound_check(&[0.5; 4])?;
    c.close("m=4 p=1/2 max mass", m4, 0.375, 1e-15);
    let (m100, _) = mode_bound_check(&[0.5; 100])?;
    c.le("m=100 max mass <= 1/sqrt(50 pi)", m100, 1.0 / (50.0 * std::f64::consts::PI).sqrt());
    let (m400, _) = mode_bound_check(&[0.5; 400])?;
    c.close("m x4 halves max mass", m100 / m400, 2.0, 0.2);

    let mut ratios = Vec::new();
    for m in [4usize, 16, 64, 256] {
        let probs: Vec<f64> = (0..m).map(|_| rng.gen_range(1.0 / 6.0..=5.0 / 6.0)).collect();
        ratios.push(mode_bound_check(&probs)?.1);
    }
    let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    c.le("max mass * sqrt(m) spread over m in {4..256}", hi / lo, 1.5);
    Ok(())
}

fn binomial_pmf(n: u64, p: f64) -> Vec<f64> {
    poisson_binomial_pmf(&vec![p; n as usize]).map(|x| x.masses().to_vec()).unwrap_or_default()
}

fn binomial_mode(c: &mut Checks) -> Result<()> {
    let exact = binomial_pmf(100, 0.5)[50];
    let b = binomial_mode_bound(100, 0.5, ModeSide::Ceil)?;
    c.close("n=100 p=1/2 bound", b, 0.0798, 1e-4);
    c.le("n=100 exact <= bound", exact, b);
    let exact = binomial_pmf(10, 0.5)[5];
    let b = binomial_mode_bound(10, 0.5, ModeSide::Ceil)?;
    c.close("n=10 p=1/2 bound", b, 0.2523, 1e-4);
    c.le("n=10 exact <= bound", exact, b);
    let pmf = binomial_pmf(7, 0.5);
    c.le("n=7 ceil side", pmf[4], binomial_mode_bound(7, 0.5, ModeSide::Ceil)?);
    c.le("n=7 floor side", pmf[3], binomial_mode_bound(7, 0.5, ModeSide::Floor)?);
    Ok(())
}

fn bstep(c: &mut Checks, seed: u64) -> Result<()> {
    c.close("n=2 exact", bstep_probability_exact(&[0.5, 0.5], 0)?, 0.75, 1e-15);
    let p65 = bstep_probability_exact(&[0.5; 65], 0)?;
    let p257 = bstep_probability_exact(&[0.5; 257], 0)?;
    c.close("P(65)/P(257)", p65 / p257, 2.0, 0.2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for n in [5usize, 33, 65] {
        let probs = vec![0.5; n];
        let exact = bstep_probability_exact(&probs, 0)?;
        let samples = 200_000u64;
        let mut hits = 0u64;
        for _ in 0..samples {
            let x = sample_bits(&probs, &mut rng);
            let y = sample_bits(&probs, &mut rng);
            hits += (classify_step(compute_d(&x, &y, 0)) == StepClass::Biased) as u64;
        }
        let est = hits as f64 / samples as f64;
        let se = (exact * (1.0 - exact) / samples as f64).sqrt();
        c.close(format!("n={n} Monte Carlo within 4 SE"), est, exact, 4.0 * se);
    }
    Ok(())
}

fn variable_drift(c: &mut Checks) -> Result<()> {
    let v = variable_drift_bound(&DriftFunction::new(|_| 0.25), 1.0, 10.0)?;
    c.close("constant h = 1/4", v, 40.0, 40.0 * 1e-6);
    let v = variable_drift_bound(&DriftFunction::new(|x| x), 1.0, std::f64::consts::E)?;
    c.close("h(x) = x up to e", v, 2.0, 2e-6);
    let (k, n) = (100.0, 1e6);
    let coef = 101.0 / (3300.0 * k);
    let v = variable_drift_bound(&DriftFunction::new(move |x: f64| x.sqrt() * coef), 1e4, n)?;
    let closed = 1e4 / (1e2 * coef) + 2.0 * (n.sqrt() - 100.0) / coef;
    c.close("h = c sqrt(x)", v, closed, closed * 1e-6);
    Ok(())
}

fn normal_tails(c: &mut Checks) -> Result<()> {
    for step in 1..=10 {
        let x = step as f64 * 0.5;
        let (lo, hi) = normal_cdf_bounds(x)?;
        let truth = 1.0 - normal_cdf(x);
        c.push(format!("x={x} sandwich"), truth, hi, lo <= truth && truth <= hi);
    }
    let (lo, hi) = normal_cdf_bounds(-2.0)?;
    let truth = normal_cdf(-2.0);
    c.push("x=-2 sandwich", truth, hi, lo <= truth && truth <= hi);
    c.push("x=0 rejected", 0.0, 0.0, normal_cdf_bounds(0.0).is_err());
    Ok(())
}

fn potential_g(c: &mut Checks) -> Result<()> {
    c.close("K=10 g(5)", potential_g_cga(5, 10)?, 0.0, 0.0);
    c.close("K=10 g(4)", potential_g_cga(4, 10)?, 2.0, 1e-12);
    c.close("K=10 g(6)", potential_g_cga(6, 10)?, -2.0, 1e-12);
    let k = 100u64;
    let g: Vec<f64> = (0..=k).map(|i| potential_g_cga(i, k)).collect::<Result<_>>()?;
    let monotone = g.windows(2).all(|w| w[0] > w[1]);
    c.push("K=100 decreasing", 0.0, 0.0, monotone);
    c.le("K=100 g(0) <= 2K", g[0], 2.0 * k as f64);
    let mut worst = f64::MIN;
    for i in 0..=k / 2 {
        for j in i + 1..=k / 2 {
            let slack = g[i as usize] - g[j as usize] - 2.0 * (2.0 * k as f64).sqrt() * ((j - i) as f64).sqrt();
            worst = worst.max(slack);
        }
    }
    c.le("K=100 stretch bound slack", worst, 0.0);
    c.close("mmas g(1/2)", potential_g_mmas(0.5, 0.3)?, 0.0, 1e-15);
    c.close("mmas g(1/4) rho=0.1", potential_g_mmas(0.25, 0.1)?, 20.0 * (0.5f64.sqrt() - 0.5), 1e-12);
    let (x, r, rho) = (0.4, 0.05, 0.1);
    let diff = potential_g_mmas(x - r, rho)? - potential_g_mmas(x, rho)?;
    c.close("mmas g(x-r) - g(x)", diff, 2.0 / rho * (x.sqrt() - (x - r).sqrt()), 1e-12);
    Ok(())
}

/// Walk on {0..m} towards target 0: from x it moves to x - 1 with
/// probability h(x), otherwise stays. The drift at x is exactly h(x).
fn downward_chain(m: usize, h: &dyn Fn(f64) -> f64) -> Chain {
    let mut chain = Chain::new(m + 1);
    chain.set_target(0);
    for x in 1..=m {
        chain.add(x, x - 1, h(x as f64));
    }
    chain
}

fn chains(c: &mut Checks) -> Result<()> {
    for k in [10u64, 40] {
        let v = chain_hitting_time_oracle(k, (0, k), Dynamics::FairWalk, k / 2)?;
        c.close(format!("fair walk K={k}"), v, (k as f64 / 2.0).powi(2), 1e-8 * (k * k) as f64);
    }
    let scaled: Vec<f64> = [20u64, 40, 80]
        .iter()
        .map(|&k| chain_hitting_time_oracle(k, (0, k), Dynamics::CgaRw, k / 2).map(|v| v / (k * k) as f64))
        .collect::<Result<_>>()?;
    let (lo, hi) = scaled.iter().fold((f64::MAX, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    c.le("cGA rw V/K^2 spread over K in {20,40,80}", hi / lo, 2.0);

    let m = 200usize;
    let mf = m as f64;
    type Drift = Box<dyn Fn(f64) -> f64>;
    let hs: [(&str, Drift); 3] = [
        ("constant", Box::new(|_| 0.3)),
        ("linear", Box::new(move |x| 0.9 * x / mf)),
        ("sqrt", Box::new(move |x: f64| 0.8 * (x / mf).sqrt())),
    ];
    for (name, h) in hs.iter() {
        let oracle = downward_chain(m, h.as_ref()).expected_hitting_times()?[m];
        let bound = variable_drift_bound(&DriftFunction::new(h), 1.0, mf)?;
        // equality for constant drift, up to quadrature tolerance
        let pass = oracle <= bound * (1.0 + 1e-6);
        c.push(format!("{name} drift chain <= variable drift bound"), oracle, bound, pass);
    }
    Ok(())
}
