use genetic_drift::algorithm::{clamp_borders, run, BitVector, MarginalVector, OneMax, RunConfig, UpdateRule};
use genetic_drift::analysis::{bstep_probability_exact, poisson_binomial_pmf};
use genetic_drift::instrument::{classify_step, compute_d, StepClass};
use proptest::prelude::*;

fn bits(v: &[bool]) -> BitVector {
    BitVector::new(v.to_vec())
}

// brute force over all 2^n outcomes
fn enumerate_ones(probs: &[f64]) -> Vec<f64> {
    let n = probs.len();
    let mut out = vec![0.0; n + 1];
    for mask in 0u32..(1 << n) {
        let mut w = 1.0;
        for (i, &p) in probs.iter().enumerate() {
            w *= if mask >> i & 1 == 1 { p } else { 1.0 - p };
        }
        out[mask.count_ones() as usize] += w;
    }
    out
}

proptest! {
    #[test]
    fn clamp_stays_in_border_range(p in -1.0f64..2.0, n in 2usize..500) {
        let c = clamp_borders(p, n);
        let lo = 1.0 / n as f64;
        prop_assert!(c >= lo && c <= 1.0 - lo);
    }

    #[test]
    fn cga_moves_by_one_over_k_or_not_at_all(
        n in 2usize..40, k in 2u32..200, p in 0.0f64..1.0, w: bool, l: bool,
    ) {
        let rule = UpdateRule::cga(k as f64).unwrap();
        let p = clamp_borders(p, n);
        let q = rule.apply_bit(p, w, l, n);
        let lo = 1.0 / n as f64;
        prop_assert!(q >= lo - 1e-15 && q <= 1.0 - lo + 1e-15);
        if w == l {
            prop_assert_eq!(q, p);
        } else {
            let target = clamp_borders(if w { p + 1.0 / k as f64 } else { p - 1.0 / k as f64 }, n);
            prop_assert!((q - target).abs() < 1e-12);
        }
    }

    #[test]
    fn mmas_follows_the_winner(n in 2usize..40, rho in 0.001f64..1.0, p in 0.0f64..1.0, w: bool, l: bool) {
        let rule = UpdateRule::mmas(rho).unwrap();
        let p = clamp_borders(p, n);
        let q = rule.apply_bit(p, w, l, n);
        let raw = if w { (1.0 - rho) * p + rho } else { (1.0 - rho) * p };
        prop_assert!((q - clamp_borders(raw, n)).abs() < 1e-12);
        if w { prop_assert!(q >= p - 1e-15) } else { prop_assert!(q <= p + 1e-15) }
    }

    #[test]
    fn pmf_matches_enumeration(raw in prop::collection::vec(0.0f64..1.0, 1..10)) {
        let pmf = poisson_binomial_pmf(&raw).unwrap();
        let brute = enumerate_ones(&raw);
        prop_assert!((pmf.total() - 1.0).abs() < 1e-12);
        for (k, &b) in brute.iter().enumerate() {
            prop_assert!((pmf.mass(k as i64) - b).abs() < 1e-12);
        }
    }

    #[test]
    fn bstep_probability_matches_enumeration(raw in prop::collection::vec(0.05f64..0.95, 2..7), i in 0usize..7) {
        let i = i % raw.len();
        let n = raw.len();
        // enumerate both offspring jointly
        let mut brute = 0.0;
        for mx in 0u32..(1 << n) {
            for my in 0u32..(1 << n) {
                let mut w = 1.0;
                for (j, &p) in raw.iter().enumerate() {
                    w *= if mx >> j & 1 == 1 { p } else { 1.0 - p };
                    w *= if my >> j & 1 == 1 { p } else { 1.0 - p };
                }
                let x: Vec<bool> = (0..n).map(|j| mx >> j & 1 == 1).collect();
                let y: Vec<bool> = (0..n).map(|j| my >> j & 1 == 1).collect();
                if classify_step(compute_d(&bits(&x), &bits(&y), i)) == StepClass::Biased {
                    brute += w;
                }
            }
        }
        let exact = bstep_probability_exact(&raw, i).unwrap();
        prop_assert!((exact - brute).abs() < 1e-12);
    }

    #[test]
    fn d_ignores_bit_i(x in prop::collection::vec(any::<bool>(), 1..30), y in prop::collection::vec(any::<bool>(), 1..30)) {
        let n = x.len().min(y.len());
        let (x, y) = (&x[..n], &y[..n]);
        let ones = |v: &[bool]| v.iter().filter(|&&b| b).count() as i64;
        for i in 0..n {
            let d = compute_d(&bits(x), &bits(y), i);
            prop_assert_eq!(d, (ones(x) - x[i] as i64) - (ones(y) - y[i] as i64));
            prop_assert_eq!(classify_step(d) == StepClass::Biased, d == 0 || d == -1);
        }
    }

    #[test]
    fn runs_are_deterministic_in_the_seed(seed: u64, n in 4usize..16) {
        let cfg = RunConfig::new(n, UpdateRule::cga(8.0).unwrap(), 300);
        let a = run(&cfg, seed, &OneMax).unwrap();
        let b = run(&cfg, seed, &OneMax).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn marginal_vector_rejects_out_of_range() {
    assert!(MarginalVector::from_probs(vec![0.5, 1.2]).is_err());
    assert!(MarginalVector::from_probs(vec![f64::NAN, 0.5]).is_err());
}
