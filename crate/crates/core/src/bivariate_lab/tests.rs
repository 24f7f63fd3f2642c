use super::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dgp() -> Matrix2<f64> {
    Matrix2::new(1.0, 0.5, 0.2, 1.2)
}

/// Brute-force θ-set on a fine grid, using the indicator directly.
fn grid_set(phi: &BivariatePhi, yk: Vector2<f64>, points: usize) -> Vec<bool> {
    theta_grid(points)
        .iter()
        .map(|&t| restriction_holds(phi, t, yk, LabRestriction::ShockSign))
        .collect()
}

#[test]
fn dgp_reduced_form() {
    let (phi, theta0, rotation) = BivariatePhi::from_a0(&dgp()).unwrap();
    assert!((phi.s11 - 1.181818).abs() < 1e-6);
    assert!((phi.s21 + 0.517483).abs() < 1e-6);
    assert!((phi.s22 - 0.769231).abs() < 1e-6);
    assert!((theta0 - 0.39479111969976).abs() < 1e-10);
    assert!(rotation);
    // A0 = Q' Σ_tr⁻¹ with the folded Q.
    let a0 = folded_q(theta0).transpose() * phi.sigma_tr_inv();
    assert!((a0 - dgp()).norm() < 1e-10);
    assert!(phi.normalization_ok(theta0));
}

#[test]
fn folded_q_is_orthogonal_and_normalizes_second_shock() {
    let phi = BivariatePhi::new(1.3, -0.4, 0.8).unwrap();
    for t in theta_grid(721) {
        let q = folded_q(t);
        assert!((q.transpose() * q - Matrix2::identity()).norm() < 1e-12);
        assert_eq!(q[(0, 0)], t.cos());
        assert_eq!(q[(1, 0)], t.sin());
        // Second column against the second column of Σ_tr⁻¹.
        let inv = phi.sigma_tr_inv();
        let dot = q[(0, 1)] * inv[(0, 1)] + q[(1, 1)] * inv[(1, 1)];
        assert!(dot >= -1e-12, "theta {t}");
        let y = Vector2::new(0.3, -1.1);
        assert!((phi.eps1(t, y) - phi.shocks(t, y)[0]).abs() < 1e-12);
    }
}

#[test]
fn boundary_cases_are_errors() {
    let phi = BivariatePhi::new(1.0, 0.0, 1.0).unwrap();
    assert!(matches!(
        theta_set_shock_sign(&phi, Vector2::new(1.0, 0.3)),
        Err(Error::BoundaryCase(_))
    ));
    let phi = BivariatePhi::new(1.0, 0.5, 1.0).unwrap();
    assert!(matches!(
        theta_set_shock_sign(&phi, Vector2::new(2.0, 1.0)),
        Err(Error::BoundaryCase(_))
    ));
    assert!(BivariatePhi::new(0.0, 0.5, 1.0).is_err());
}

#[test]
fn closed_form_matches_grid_in_all_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let points = 100_001;
    let step = 2.0 * PI / (points - 1) as f64;
    let mut seen = [0usize; 4];
    let mut done = 0;
    while done < 200 {
        let phi = BivariatePhi::new(
            rng.random_range(0.2..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(0.2..2.0),
        )
        .unwrap();
        let y = Vector2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let d = phi.s21 * y[0] - phi.s11 * y[1];
        let case = 2 * usize::from(phi.s21 > 0.0) + usize::from(d > 0.0);
        // Balance the four sign cases.
        if seen[case] >= 50 {
            continue;
        }
        seen[case] += 1;
        done += 1;
        let set = theta_set_shock_sign(&phi, y).unwrap();
        let grid = theta_grid(points);
        let brute = grid_set(&phi, y, points);
        for (i, (&t, &b)) in grid.iter().zip(&brute).enumerate() {
            let near_edge = set
                .intervals
                .iter()
                .any(|iv| (t - iv.lo).abs() < 2.0 * step || (t - iv.hi).abs() < 2.0 * step);
            if !near_edge {
                assert_eq!(set.contains(t), b, "case {case} phi {phi:?} y {y:?} theta {t} i {i}");
            }
        }
        let measure = brute.iter().filter(|&&b| b).count() as f64 * step;
        assert!((measure - set.measure()).abs() < 1e-3, "case {case}");

        // η-set against a direct scan of σ11 cos θ.
        let eta = eta_set(&phi, y).unwrap();
        let vals: Vec<f64> = grid
            .iter()
            .zip(&brute)
            .filter(|(_, &b)| b)
            .map(|(&t, _)| phi.s11 * t.cos())
            .collect();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!((eta.lo - lo).abs() < 1e-3 && (eta.hi - hi).abs() < 1e-3, "case {case}");
    }
}

#[test]
fn eta_closed_form_matches_composition() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 200 {
        let phi = BivariatePhi::new(
            rng.random_range(0.2..2.0),
            rng.random_range(-2.0..-0.05),
            rng.random_range(0.2..2.0),
        )
        .unwrap();
        let y = Vector2::new(rng.random_range(0.05..3.0), rng.random_range(-3.0..3.0));
        if phi.s21 * y[0] - phi.s11 * y[1] <= 0.0 {
            continue;
        }
        checked += 1;
        let set = theta_set_shock_sign(&phi, y).unwrap();
        let composed = cos_range(phi.s11, &set.intervals[0]);
        let eta = eta_set(&phi, y).unwrap();
        assert!((eta.lo - composed.lo).abs() < 1e-10);
        assert!((eta.hi - composed.hi).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eta_bounds_continuous_in_data(
        s11 in 0.2f64..2.0, s21 in 0.05f64..2.0, s22 in 0.2f64..2.0, neg in any::<bool>(),
        y1 in -3.0f64..3.0, y2 in -3.0f64..3.0,
    ) {
        let s21 = if neg { -s21 } else { s21 };
        let phi = BivariatePhi::new(s11, s21, s22).unwrap();
        let y = Vector2::new(y1, y2);
        let d = s21 * y1 - s11 * y2;
        prop_assume!(d.abs() > 0.05 && y1.abs() > 0.05);
        prop_assume!(((s22 / s21) - s22 * y1 / d).abs() > 0.05);
        let h = 1e-7;
        let a = eta_set(&phi, y).unwrap();
        let b = eta_set(&phi, Vector2::new(y1 + h, y2 + h)).unwrap();
        prop_assert!((a.lo - b.lo).abs() < 1e-4 && (a.hi - b.hi).abs() < 1e-4);
        prop_assert!(a.lo <= a.hi && a.hi <= s11 + 1e-12 && a.lo >= -s11 - 1e-12);
    }

    #[test]
    fn restriction_probability_matches_simulation(theta in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(theta.to_bits());
        let m = 20_000;
        let hits = (0..m)
            .filter(|_| {
                let e = Vector2::new(std_normal::<f64, _>(&mut rng), std_normal(&mut rng));
                shock_indicator(theta, e, LabRestriction::HistDecomp)
            })
            .count();
        let p = restriction_probability(theta, LabRestriction::HistDecomp);
        prop_assert!((hits as f64 / m as f64 - p).abs() < 5.0 * (0.25 / m as f64).sqrt());
    }
}

#[test]
fn shock_sign_likelihood_is_two_valued() {
    let (phi, theta0, _) = BivariatePhi::from_a0(&dgp()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sample = simulate_bivariate(&dgp(), 50, true, &mut rng).unwrap();
    let grid = theta_grid(2001);
    for mode in [LikelihoodMode::Conditional, LikelihoodMode::Unconditional] {
        let prof =
            likelihood_profile(&grid, &phi, &sample.y, 0, LabRestriction::ShockSign, mode, 0, &mut rng)
                .unwrap();
        let pos: Vec<f64> = prof.iter().filter(|p| p.value > 0.0).map(|p| p.value).collect();
        assert!(!pos.is_empty());
        assert!(pos.iter().all(|&v| (v - pos[0]).abs() <= 1e-12 * pos[0]));
        let at_truth = likelihood_profile(
            &[theta0],
            &phi,
            &sample.y,
            0,
            LabRestriction::ShockSign,
            mode,
            0,
            &mut rng,
        )
        .unwrap();
        assert!(at_truth[0].value > 0.0);
    }
    let cond = likelihood_profile(
        &[theta0],
        &phi,
        &sample.y,
        0,
        LabRestriction::ShockSign,
        LikelihoodMode::Conditional,
        0,
        &mut rng,
    )
    .unwrap();
    let unc = likelihood_profile(
        &[theta0],
        &phi,
        &sample.y,
        0,
        LabRestriction::ShockSign,
        LikelihoodMode::Unconditional,
        0,
        &mut rng,
    )
    .unwrap();
    assert!((cond[0].value / unc[0].value - 2.0).abs() < 1e-12);
}

#[test]
fn hist_decomp_likelihood_uses_simulated_denominator() {
    let (phi, _, _) = BivariatePhi::from_a0(&dgp()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sample = simulate_bivariate(&dgp(), 20, true, &mut rng).unwrap();
    let grid = theta_grid(101);
    let prof = likelihood_profile(
        &grid,
        &phi,
        &sample.y,
        0,
        LabRestriction::HistDecomp,
        LikelihoodMode::Conditional,
        50_000,
        &mut rng,
    )
    .unwrap();
    for p in &prof {
        let r = restriction_probability(p.theta, LabRestriction::HistDecomp);
        assert!((p.r_hat - r).abs() < 5.0 * p.r_se.max(1e-3), "theta {}", p.theta);
    }
}

#[test]
fn hellinger_vanishes_at_truth_and_is_bounded() {
    let (phi, theta0, _) = BivariatePhi::from_a0(&dgp()).unwrap();
    let mut grid = theta_grid(201);
    grid.push(theta0);
    for kind in [LabRestriction::ShockSign, LabRestriction::HistDecomp] {
        for mode in [LikelihoodMode::Conditional, LikelihoodMode::Unconditional] {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let prof = hellinger_profile(&grid, &phi, theta0, kind, mode, 20_000, &mut rng).unwrap();
            let truth = prof.last().unwrap();
            assert!(truth.value.abs() < 1e-12);
            assert!(prof.iter().all(|p| (-1e-12..=2.0 + 1e-12).contains(&p.value)));
        }
    }
}

#[test]
fn unconditional_hellinger_matches_disagreement_probability() {
    // For the shock-sign restriction the disagreement event has a closed form:
    // two half-planes in ε-space at angle |θ − θ0| disagree with probability |θ − θ0|/π.
    let (phi, theta0, _) = BivariatePhi::from_a0(&dgp()).unwrap();
    let grid = [theta0 - 0.2, theta0 + 0.1];
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let m = 200_000;
    let prof = hellinger_profile(
        &grid,
        &phi,
        theta0,
        LabRestriction::ShockSign,
        LikelihoodMode::Unconditional,
        m,
        &mut rng,
    )
    .unwrap();
    for p in prof {
        assert!(phi.normalization_ok(p.theta));
        let expect = 2.0 * (p.theta - theta0).abs() / PI;
        assert!((p.value - expect).abs() < 0.01, "{} vs {expect}", p.value);
    }
}

#[test]
fn arc_intersection_examples() {
    let (lo, hi) = arc_intersection(&[Vector2::new(1.0, 0.0)]).unwrap();
    assert!((lo + PI / 2.0).abs() < 1e-12 && (hi - PI / 2.0).abs() < 1e-12);
    let (lo, hi) = arc_intersection(&[Vector2::new(1.0, 0.0), Vector2::new(0.0, 1.0)]).unwrap();
    assert!(lo.abs() < 1e-12 && (hi - PI / 2.0).abs() < 1e-12);
    assert!(arc_intersection(&[Vector2::new(1.0, 0.0), Vector2::new(-1.0, 0.1), Vector2::new(0.0, -1.0)]).is_none());
    // Wrap-around across ±π.
    let (lo, hi) = arc_intersection(&[Vector2::new(-1.0, 0.0), Vector2::new(-1.0, 1.0)]).unwrap();
    assert!((lo - PI / 2.0).abs() < 1e-12 && (hi - 5.0 * PI / 4.0).abs() < 1e-12);
}

#[test]
fn consistency_widths_shrink_and_cover_truth() {
    let t_list = [1, 10, 100, 1000];
    let rows = consistency_experiment(&dgp(), &t_list, 50, 42).unwrap();
    assert_eq!(rows.len(), 200);
    assert!(rows.iter().all(|r| r.contains_truth && r.width > 0.0));
    // Nested samples: widths never grow within a replication.
    for rep in 0..50 {
        let w: Vec<f64> = rows.iter().filter(|r| r.replication == rep).map(|r| r.width).collect();
        assert!(w.windows(2).all(|p| p[1] <= p[0] + 1e-12));
    }
    let mean = |t: usize| {
        let v: Vec<f64> = rows.iter().filter(|r| r.t == t).map(|r| r.width).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    assert!(mean(1000) < 0.05 * mean(1));
    assert_eq!(rows, consistency_experiment(&dgp(), &t_list, 50, 42).unwrap());
}

#[test]
fn narrative_proxy_examples() {
    let phi = BivariatePhi::new(1.0, 0.0, 1.0).unwrap();
    let p = narrative_proxy(&phi, Vector2::new(1.0, 1.0)).unwrap();
    assert!((p.theta_hat - PI / 4.0).abs() < 1e-12);
    assert!((p.eta_hat - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    assert!((p.eta2_hat - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    assert!((p.relative - 1.0).abs() < 1e-12);
    assert!(matches!(
        narrative_proxy(&phi, Vector2::new(0.0, 1.0)),
        Err(Error::ProxyUndefined(_))
    ));
    // The proxy θ zeroes the second shock and keeps the first positive.
    let (phi, _, _) = BivariatePhi::from_a0(&dgp()).unwrap();
    for y in [Vector2::new(0.7, -0.4), Vector2::new(-1.2, 0.3)] {
        let p = narrative_proxy(&phi, y).unwrap();
        let e = phi.shocks(p.theta_hat, y);
        assert!(e[0] > 0.0);
        assert!(e[1].abs() < 1e-12);
        assert!((p.eta_hat - phi.s11 * p.theta_hat.cos()).abs() < 1e-12);
    }
}

#[test]
fn simulation_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let t = 200_000;
    let s = simulate_bivariate(&dgp(), t, true, &mut rng).unwrap();
    assert!(s.shocks[(0, 0)] >= 0.0);
    let (phi, _, _) = BivariatePhi::from_a0(&dgp()).unwrap();
    let sigma = phi.sigma_tr() * phi.sigma_tr().transpose();
    let cov = s.y.transpose() * &s.y / t as f64;
    for i in 0..2 {
        for j in 0..2 {
            assert!((cov[(i, j)] - sigma[(i, j)]).abs() < 0.02);
        }
    }
    for i in 0..t.min(100) {
        let e = dgp() * Vector2::new(s.y[(i, 0)], s.y[(i, 1)]);
        assert!((e[0] - s.shocks[(i, 0)]).abs() < 1e-12);
    }
    assert!(simulate_bivariate(&Matrix2::new(1.0, 2.0, 2.0, 4.0), 5, false, &mut rng).is_err());
}

#[test]
fn params_round_trip() {
    let (phi, _, _) = BivariatePhi::from_a0(&dgp()).unwrap();
    let p = phi.params();
    assert_eq!(p.n(), 2);
    assert_eq!(p.k(), 0);
}
