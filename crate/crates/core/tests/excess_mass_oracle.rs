use proptest::prelude::*;
use spdea::distribution::excess_mass_statistic;

/// Every family of at most `k` disjoint index intervals over sorted data, as
/// (observation count, total length).
fn families(v: &[f64], k: usize) -> Vec<(usize, f64)> {
    fn rec(v: &[f64], from: usize, left: usize, acc: (usize, f64), out: &mut Vec<(usize, f64)>) {
        out.push(acc);
        if left == 0 {
            return;
        }
        for a in from..v.len() {
            for b in a..v.len() {
                rec(v, b + 1, left - 1, (acc.0 + b - a + 1, acc.1 + v[b] - v[a]), out);
            }
        }
    }
    let mut out = Vec::new();
    rec(v, 0, k, (0, 0.0), &mut out);
    out
}

fn brute_force(sample: &[f64], k0: usize) -> f64 {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let lo = families(&v, k0);
    let hi = families(&v, k0 + 1);
    let e = |f: &[(usize, f64)], l: f64| {
        f.iter().map(|&(c, len)| c as f64 / n - l * len).fold(f64::NEG_INFINITY, f64::max)
    };
    // the difference of two envelopes peaks where some pair of lines cross
    let mut candidates = vec![1e12];
    let all: Vec<_> = lo.iter().chain(&hi).copied().collect();
    for (i, a) in all.iter().enumerate() {
        for b in &all[i + 1..] {
            if a.1 != b.1 {
                let l = (a.0 as f64 - b.0 as f64) / n / (a.1 - b.1);
                if l > 0.0 {
                    candidates.push(l);
                }
            }
        }
    }
    candidates.into_iter().map(|l| e(&hi, l) - e(&lo, l)).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matches_enumeration(sample in prop::collection::vec(0u8..40, 1..7), k0 in 1usize..3) {
        let s: Vec<f64> = sample.iter().map(|&v| v as f64 * 0.25).collect();
        let exact = excess_mass_statistic(&s, k0);
        let brute = brute_force(&s, k0);
        prop_assert!((exact - brute).abs() < 1e-12, "{exact} vs {brute} on {s:?}");
    }

    #[test]
    fn affine_invariant(sample in prop::collection::vec(-50.0f64..50.0, 2..40), a in -10.0f64..10.0, b in 0.1f64..10.0) {
        let moved: Vec<f64> = sample.iter().map(|v| a + b * v).collect();
        let d0 = excess_mass_statistic(&sample, 1);
        let d1 = excess_mass_statistic(&moved, 1);
        prop_assert!((d0 - d1).abs() < 1e-9, "{d0} vs {d1}");
    }

    #[test]
    fn nonnegative(sample in prop::collection::vec(-5.0f64..5.0, 0..30), k0 in 1usize..4) {
        prop_assert!(excess_mass_statistic(&sample, k0) >= 0.0);
    }
}
