use std::collections::BTreeMap;

use proptest::prelude::*;
use spdea::conditional::{
    cdea_scores, conditional_survival, lscv_bandwidth, BandwidthVector, ConditioningSet,
};
use spdea::data::{
    build_capital_stock, derive_ratios, load_panel, perpetual_inventory, DecisionUnit, FrontierSample,
    Observation, PanelDataset, PanelSchema, PimConfig, Region,
};
use spdea::dea::{dea_output_scores, solve_output_lp, Rts};
use spdea::distribution::{correlations, describe, kde, BandwidthRule};
use spdea::effects::{efficiency_ratios, local_linear_fit, significance_test};
use spdea::weights::{knn_weights, morans_i, spatial_lag};

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 64,
        ..ProptestConfig::default()
    }
}

fn units(p: usize, r: usize, n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<(Vec<f64>, Vec<f64>)>> {
    prop::collection::vec(
        (prop::collection::vec(1.0f64..100.0, p), prop::collection::vec(1.0f64..100.0, r)),
        n,
    )
}

fn sample_of(rows: &[(Vec<f64>, Vec<f64>)]) -> FrontierSample {
    let units = rows
        .iter()
        .enumerate()
        .map(|(i, (x, q))| DecisionUnit::new(format!("u{i}"), x.clone(), q.clone()))
        .collect();
    FrontierSample::new(None, units).unwrap()
}

fn lambdas(rows: &[(Vec<f64>, Vec<f64>)], rts: Rts) -> Vec<f64> {
    dea_output_scores(&sample_of(rows), rts).unwrap().lambdas()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

fn coords(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec((0.0f64..100.0, 0.0f64..100.0).prop_map(|(a, b)| [a, b]), n)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn dea_rescaling_a_dimension_keeps_lambda(
        rows in units(2, 2, 3..12),
        c in 0.01f64..100.0,
        dim in 0usize..4,
        rts in prop_oneof![Just(Rts::Crs), Just(Rts::Vrs)],
    ) {
        let before = lambdas(&rows, rts);
        let scaled: Vec<_> = rows
            .iter()
            .map(|(x, q)| {
                let (mut x, mut q) = (x.clone(), q.clone());
                if dim < 2 { x[dim] *= c } else { q[dim - 2] *= c }
                (x, q)
            })
            .collect();
        for (a, b) in before.iter().zip(lambdas(&scaled, rts)) {
            prop_assert!(close(*a, b, 1e-8), "{a} vs {b}");
        }
    }

    #[test]
    fn dea_dominated_unit_changes_nothing(
        rows in units(1, 2, 2..12),
        pick in any::<prop::sample::Index>(),
        worse in (0.0f64..0.5, 0.0f64..0.5, 0.0f64..0.5),
        rts in prop_oneof![Just(Rts::Crs), Just(Rts::Vrs)],
    ) {
        let before = lambdas(&rows, rts);
        let (x, q) = &rows[pick.index(rows.len())];
        let mut extended = rows.clone();
        extended.push((vec![x[0] * (1.0 + worse.0)], vec![q[0] * (1.0 - worse.1), q[1] * (1.0 - worse.2)]));
        let after = lambdas(&extended, rts);
        for (a, b) in before.iter().zip(&after) {
            prop_assert!(close(*a, *b, 1e-8), "{a} vs {b}");
        }
    }

    #[test]
    fn dea_adding_a_unit_never_lowers_lambda(
        rows in units(2, 1, 2..12),
        extra in units(2, 1, 1..2),
        rts in prop_oneof![Just(Rts::Crs), Just(Rts::Vrs)],
    ) {
        let before = lambdas(&rows, rts);
        let mut extended = rows.clone();
        extended.extend(extra);
        for (a, b) in before.iter().zip(lambdas(&extended, rts)) {
            prop_assert!(b >= a - 1e-9, "{a} -> {b}");
        }
    }

    #[test]
    fn dea_crs_lambda_dominates_vrs(rows in units(2, 2, 2..14)) {
        for (c, v) in lambdas(&rows, Rts::Crs).iter().zip(lambdas(&rows, Rts::Vrs)) {
            prop_assert!(*c >= v - 1e-9, "crs {c} < vrs {v}");
        }
    }

    #[test]
    fn dea_extra_input_never_lowers_lambda(
        rows in units(2, 1, 2..12),
        pick in any::<prop::sample::Index>(),
        delta in 0.001f64..50.0,
        rts in prop_oneof![Just(Rts::Crs), Just(Rts::Vrs)],
    ) {
        let sample = sample_of(&rows);
        let (x, q) = &rows[pick.index(rows.len())];
        let base = solve_output_lp(x, q, &sample, rts).unwrap().lambda;
        let padded: Vec<f64> = x.iter().map(|v| v + delta).collect();
        let more = solve_output_lp(&padded, q, &sample, rts).unwrap().lambda;
        prop_assert!(more >= base - 1e-9, "{base} -> {more}");
    }

    #[test]
    fn conditional_scores_dominate_and_shrink_with_bandwidth(
        rows in units(1, 1, 4..16),
        zs in prop::collection::vec(0.0f64..1.0, 16),
        h in 0.05f64..0.6,
        grow in 1.0f64..4.0,
        rts in prop_oneof![Just(Rts::Crs), Just(Rts::Vrs)],
    ) {
        let sample = sample_of(&rows);
        let z = ConditioningSet::from_columns(vec![zs[..rows.len()].to_vec()]).unwrap();
        let dea = dea_output_scores(&sample, rts).unwrap();
        let narrow = cdea_scores(&sample, &z, &BandwidthVector::user(vec![h]).unwrap(), rts).unwrap();
        let wide = cdea_scores(&sample, &z, &BandwidthVector::user(vec![h * grow]).unwrap(), rts).unwrap();
        for ((d, n), w) in dea.units.iter().zip(&narrow.units).zip(&wide.units) {
            prop_assert!(n.score >= d.score - 1e-9);
            prop_assert!(n.score >= w.score - 1e-9);
        }
        for r in efficiency_ratios(&narrow, &dea, &z).unwrap().ratios() {
            prop_assert!(r > 0.0 && r <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn conditional_with_covering_bandwidth_is_dea(
        rows in units(2, 1, 3..14),
        zs in prop::collection::vec(0.0f64..1.0, 14),
        rts in prop_oneof![Just(Rts::Crs), Just(Rts::Vrs)],
    ) {
        let sample = sample_of(&rows);
        let z = ConditioningSet::from_columns(vec![zs[..rows.len()].to_vec()]).unwrap();
        let cond = cdea_scores(&sample, &z, &BandwidthVector::user(vec![1e9]).unwrap(), rts).unwrap();
        let dea = dea_output_scores(&sample, rts).unwrap();
        for (c, d) in cond.lambdas().iter().zip(dea.lambdas()) {
            prop_assert!((c - d).abs() <= 1e-9 * d.max(1.0));
        }
    }

    #[test]
    fn survival_is_a_probability_decreasing_in_output(
        rows in units(1, 1, 3..14),
        zs in prop::collection::vec(0.0f64..1.0, 14),
        x0 in 1.0f64..100.0,
        z0 in 0.0f64..1.0,
        levels in (0.0f64..100.0, 0.0f64..100.0),
        h in 0.05f64..2.0,
    ) {
        let sample = sample_of(&rows);
        let z = ConditioningSet::from_columns(vec![zs[..rows.len()].to_vec()]).unwrap();
        let h = BandwidthVector::user(vec![h]).unwrap();
        let (lo, hi) = (levels.0.min(levels.1), levels.0.max(levels.1));
        let at = |q: f64| conditional_survival(&[q], &[x0], &[z0], &sample, &z, &h);
        if let (Ok(a), Ok(b)) = (at(lo), at(hi)) {
            prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
            prop_assert!(b <= a + 1e-12);
        }
    }

    #[test]
    fn standardized_rows_sum_to_one(pts in coords(3..25), k in 1usize..6) {
        prop_assume!(k < pts.len());
        let w = knn_weights(&pts, k).unwrap();
        for row in w.rows() {
            prop_assert!((row.iter().map(|(_, v)| v).sum::<f64>() - 1.0).abs() <= 1e-12);
        }
        for v in spatial_lag(&w, &vec![1.0; pts.len()]).unwrap() {
            prop_assert!((v - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn knn_is_invariant_to_rigid_motion(
        pts in coords(3..25),
        k in 1usize..6,
        angle in 0.0f64..std::f64::consts::TAU,
        shift in (-1e3f64..1e3, -1e3f64..1e3),
    ) {
        prop_assume!(k < pts.len());
        let (s, c) = angle.sin_cos();
        let moved: Vec<[f64; 2]> = pts
            .iter()
            .map(|p| [c * p[0] - s * p[1] + shift.0, s * p[0] + c * p[1] + shift.1])
            .collect();
        let a = knn_weights(&pts, k).unwrap();
        let b = knn_weights(&moved, k).unwrap();
        for i in 0..pts.len() {
            let (mut x, mut y) = (a.neighbors(i), b.neighbors(i));
            x.sort_unstable();
            y.sort_unstable();
            prop_assert_eq!(x, y);
        }
    }

    #[test]
    fn moran_is_affine_invariant(
        pts in coords(5..25),
        values in prop::collection::vec(-10.0f64..10.0, 25),
        a in prop_oneof![-50.0f64..-0.1, 0.1f64..50.0],
        b in -100.0f64..100.0,
    ) {
        let n = pts.len();
        let v = &values[..n];
        prop_assume!(v.iter().any(|x| (x - v[0]).abs() > 1e-3));
        let w = knn_weights(&pts, 3).unwrap();
        let base = morans_i(&w, v, 99, 4).unwrap();
        let moved: Vec<f64> = v.iter().map(|x| a * x + b).collect();
        let other = morans_i(&w, &moved, 99, 4).unwrap();
        prop_assert!((base.statistic - other.statistic).abs() <= 1e-9);
        if a > 0.0 {
            prop_assert_eq!(&base.quadrants, &other.quadrants);
        }
        let again = morans_i(&w, v, 99, 4).unwrap();
        prop_assert_eq!(base.p_value.to_bits(), again.p_value.to_bits());
    }

    #[test]
    fn local_linear_reproduces_affine_functions(
        zs in prop::collection::vec(-5.0f64..5.0, 8..60),
        a in -10.0f64..10.0,
        b in -10.0f64..10.0,
        h in 2.0f64..20.0,
    ) {
        let r: Vec<f64> = zs.iter().map(|z| a + b * z).collect();
        let grid: Vec<f64> = (0..21).map(|i| -4.0 + 0.4 * i as f64).collect();
        let fit = local_linear_fit(&zs, &r, h, &grid);
        prop_assume!(fit.is_ok());
        let fit = fit.unwrap();
        for ((g, m), s) in grid.iter().zip(&fit.mean).zip(&fit.slope) {
            prop_assert!((m - (a + b * g)).abs() <= 1e-9);
            prop_assert!((s - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn kde_is_a_density(scores in prop::collection::vec(0.05f64..1.0, 3..80)) {
        prop_assume!(scores.iter().any(|x| (x - scores[0]).abs() > 1e-6));
        let d = kde(&scores, BandwidthRule::Silverman).unwrap();
        prop_assert!((d.trapezoid_mass() - 1.0).abs() <= 1e-3);
        prop_assert!(d.density.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn spearman_ignores_monotone_transforms(
        pairs in prop::collection::vec((0.01f64..1.0, 0.01f64..1.0), 4..50),
    ) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        prop_assume!(a.iter().any(|x| *x != a[0]) && b.iter().any(|x| *x != b[0]));
        let base = correlations(&a, &b).unwrap();
        let ta: Vec<f64> = a.iter().map(|x| x.ln()).collect();
        let tb: Vec<f64> = b.iter().map(|x| x.powi(3) + 2.0).collect();
        let moved = correlations(&ta, &tb).unwrap();
        prop_assert!((base.spearman.estimate - moved.spearman.estimate).abs() <= 1e-12);
    }

    #[test]
    fn describe_scales_with_data(scores in prop::collection::vec(0.0f64..1.0, 1..60), c in 0.01f64..100.0) {
        let a = describe(&scores).unwrap();
        let scaled: Vec<f64> = scores.iter().map(|x| x * c).collect();
        let b = describe(&scaled).unwrap();
        for (x, y) in [(a.mean, b.mean), (a.sd, b.sd), (a.min, b.min), (a.median, b.median), (a.max, b.max)] {
            prop_assert!((x * c - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn pim_is_linear_and_positive(
        investment in prop::collection::vec((0.0f64..50.0, 0.0f64..50.0), 3..8),
        totals in (100.0f64..1e4, 100.0f64..1e4),
        delta in 0.0f64..0.5,
    ) {
        let years = investment.len() as i32;
        let panel = |scale: f64| {
            let regions = vec![
                Region { id: "A1".into(), country: "A".into(), coord: None },
                Region { id: "A2".into(), country: "A".into(), coord: None },
                Region { id: "B1".into(), country: "B".into(), coord: None },
            ];
            let cells = (0..3)
                .map(|i| {
                    investment
                        .iter()
                        .map(|(u, v)| Observation {
                            gva: 10.0,
                            emp: 1.0,
                            gfcf: Some(scale * (1.0 + if i == 0 { *u } else { *v })),
                            capital: None,
                        })
                        .collect()
                })
                .collect();
            PanelDataset::new(regions, 2000, 2000 + years - 1, cells).unwrap()
        };
        let pim = |scale: f64| {
            let mut cfg = PimConfig::new(delta, 2000, 2001);
            cfg.benchmarks = BTreeMap::from([("A".to_string(), scale * totals.0)]);
            build_capital_stock(&panel(scale), &cfg).unwrap()
        };
        let (one, two) = (pim(1.0), pim(2.0));
        for i in 0..3 {
            for y in 2001..2000 + years {
                let k1 = one.observation(i, y).unwrap().capital.unwrap();
                let k2 = two.observation(i, y).unwrap().capital.unwrap();
                prop_assert!(k1 > 0.0);
                prop_assert_eq!(2.0 * k1, k2);
            }
        }
        let series: Vec<f64> = investment.iter().map(|p| p.0).collect();
        prop_assert!(perpetual_inventory(totals.1, &series, delta).iter().all(|k| *k > 0.0));
    }

    #[test]
    fn ratios_ignore_common_scaling_and_panels_round_trip(
        cells in prop::collection::vec((1.0f64..1e4, 1.0f64..1e3, 0.0f64..100.0, 1.0f64..1e5), 4..16),
        c in 0.001f64..1000.0,
    ) {
        let build = |scale: f64| {
            let regions: Vec<Region> = (0..cells.len() / 2)
                .map(|i| Region { id: format!("R{i}"), country: "C".into(), coord: Some([i as f64, 0.5]) })
                .collect();
            let rows = cells
                .chunks_exact(2)
                .map(|pair| {
                    pair.iter()
                        .map(|&(gva, emp, gfcf, capital)| Observation {
                            gva: gva * scale,
                            emp: emp * scale,
                            gfcf: Some(gfcf),
                            capital: Some(capital * scale),
                        })
                        .collect()
                })
                .collect();
            PanelDataset::new(regions, 1999, 2000, rows).unwrap()
        };
        let (base, scaled) = (build(1.0), build(c));
        for year in [1999, 2000] {
            let (a, b) = (derive_ratios(&base, year).unwrap(), derive_ratios(&scaled, year).unwrap());
            for (u, v) in a.units().iter().zip(b.units()) {
                prop_assert!(close(u.q[0], v.q[0], 1e-12) && close(u.x[0], v.x[0], 1e-12));
            }
        }
        let mut csv = Vec::new();
        base.write_csv(&mut csv).unwrap();
        prop_assert_eq!(&load_panel(csv.as_slice(), &PanelSchema::default()).unwrap(), &base);
        prop_assert_eq!(&PanelDataset::from_json(&base.to_json().unwrap()).unwrap(), &base);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn lscv_conditional_scores_dominate(rows in units(1, 1, 12..24), zs in prop::collection::vec(0.0f64..1.0, 24)) {
        let sample = sample_of(&rows);
        let z = ConditioningSet::from_columns(vec![zs[..rows.len()].to_vec()]).unwrap();
        let h = lscv_bandwidth(&sample, &z).unwrap();
        let cond = cdea_scores(&sample, &z, &h, Rts::Crs).unwrap();
        let dea = dea_output_scores(&sample, Rts::Crs).unwrap();
        for (c, d) in cond.scores().iter().zip(dea.scores()) {
            prop_assert!(*c >= d - 1e-9);
        }
    }

    #[test]
    fn significance_is_reproducible(zs in prop::collection::vec(0.0f64..1.0, 30), noise in prop::collection::vec(-0.3f64..0.3, 30)) {
        let r: Vec<f64> = zs.iter().zip(&noise).map(|(z, e)| z + e).collect();
        let z = ConditioningSet::from_columns(vec![zs]).unwrap();
        let a = significance_test(&z, &r, 0, 99, 17).unwrap();
        let b = significance_test(&z, &r, 0, 99, 17).unwrap();
        prop_assert_eq!(a, b);
    }
}
