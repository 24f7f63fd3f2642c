use super::*;
use crate::restrictions::{
    check_sign_normalization, ContributionMode, NarrativeRestriction, RestrictionSet, Sign,
};
use crate::stats::ks_uniform_pvalue;
use crate::var_core::{compute_residuals, OrthonormalMatrix, ReducedFormParams};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

fn randn(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

fn bivariate(s11: f64, s21: f64, s22: f64) -> ReducedFormParams<f64> {
    ReducedFormParams::from_cholesky(
        0,
        false,
        DMatrix::zeros(2, 0),
        DMatrix::from_row_slice(2, 2, &[s11, 0.0, s21, s22]),
    )
    .unwrap()
}

fn shock_sign(shock: usize, period: usize) -> NarrativeRestriction {
    NarrativeRestriction::ShockSign {
        shock,
        period,
        sign: Sign::Positive,
    }
}

#[test]
fn haar_draws_are_orthonormal() {
    let mut rng = substream(1, 0);
    for n in 1..7 {
        for _ in 0..200 {
            let q: DMatrix<f64> = draw_uniform_orthonormal(n, &mut rng);
            assert!((q.transpose() * &q - DMatrix::identity(n, n)).norm() < 1e-10);
        }
    }
    let q: DMatrix<f32> = draw_uniform_orthonormal(4, &mut rng);
    assert!((q.transpose() * &q - DMatrix::identity(4, 4)).norm() < 1e-5);
}

#[test]
fn haar_first_column_angle_uniform() {
    let mut rng = substream(2, 0);
    let angles: Vec<f64> = (0..10_000)
        .map(|_| {
            let q: DMatrix<f64> = draw_uniform_orthonormal(2, &mut rng);
            q[(1, 0)].atan2(q[(0, 0)])
        })
        .collect();
    let p = ks_uniform_pvalue(&angles, -PI, PI);
    assert!(p > 0.01, "KS p = {p}");
}

#[test]
fn haar_entry_means_vanish() {
    let mut rng = substream(3, 0);
    let draws = 10_000;
    let mut sum = DMatrix::<f64>::zeros(3, 3);
    for _ in 0..draws {
        sum += draw_uniform_orthonormal::<f64, _>(3, &mut rng);
    }
    let mean = sum / draws as f64;
    assert!(mean.amax() < 4.0 / (draws as f64).sqrt(), "{mean}");
}

#[test]
fn haar_left_invariance() {
    // The angle of P q̃_1 must stay uniform for a fixed rotation P (n = 2),
    // and the first coordinate of P q̃_1 must match q̃_1's in distribution (n = 3).
    let mut rng = substream(4, 0);
    let p2 = OrthonormalMatrix::rotation(0.9).into_inner();
    let angles: Vec<f64> = (0..10_000)
        .map(|_| {
            let q = &p2 * draw_uniform_orthonormal::<f64, _>(2, &mut rng);
            q[(1, 0)].atan2(q[(0, 0)])
        })
        .collect();
    assert!(ks_uniform_pvalue(&angles, -PI, PI) > 0.01);

    let p3 = randn(&mut ChaCha8Rng::seed_from_u64(9), 3, 3).qr().q();
    let a: Vec<f64> = (0..5000)
        .map(|_| draw_uniform_orthonormal::<f64, _>(3, &mut rng)[(0, 0)])
        .collect();
    let b: Vec<f64> = (0..5000)
        .map(|_| (&p3 * draw_uniform_orthonormal::<f64, _>(3, &mut rng))[(0, 0)])
        .collect();
    // For n = 3 the first coordinate of a uniform unit vector is Uniform[-1, 1].
    assert!(ks_uniform_pvalue(&a, -1.0, 1.0) > 0.01);
    assert!(ks_uniform_pvalue(&b, -1.0, 1.0) > 0.01);
}

#[test]
fn sign_fix_examples() {
    let mut rng = substream(5, 0);
    let rf = ReducedFormParams::new(0, false, DMatrix::zeros(3, 0), {
        let a = randn(&mut ChaCha8Rng::seed_from_u64(1), 3, 3);
        &a * a.transpose() + DMatrix::identity(3, 3)
    })
    .unwrap();
    for _ in 0..1000 {
        let q = draw_normalized(&rf, &mut rng);
        assert!(check_sign_normalization(&rf, &q));
        let again = sign_fix_columns(q.matrix().clone(), &rf);
        assert_eq!(&again, &q);
        let mut flipped = q.matrix().clone();
        flipped.column_mut(0).neg_mut();
        assert_eq!(sign_fix_columns(flipped, &rf), q);
    }
}

#[test]
fn shock_sign_probability_is_power_of_half() {
    let mut rng = substream(6, 0);
    let rf = bivariate(1.0, 0.3, 0.8);
    let q = draw_normalized(&rf, &mut rng);
    let m = 100_000;
    let sets = [
        RestrictionSet::new().with_narrative(shock_sign(0, 0)),
        RestrictionSet::new()
            .with_narrative(shock_sign(0, 0))
            .with_narrative(shock_sign(1, 2)),
    ];
    for (s, set) in sets.iter().enumerate() {
        let target = 0.5f64.powi(s as i32 + 1);
        let est = approx_narrative_probability(&rf, &q, set, 5, m, &mut rng).unwrap();
        let se = (target * (1.0 - target) / m as f64).sqrt();
        assert!((est.value - target).abs() < 3.0 * se, "s={} r={}", s + 1, est.value);
    }
    let none = approx_narrative_probability(&rf, &q, &RestrictionSet::new(), 5, 10, &mut rng).unwrap();
    assert_eq!(none.value, 1.0);
}

/// `Pr(ε_1 ≥ 0, |H_11| ≥ |H_12|)` on the rotation branch, computed from the
/// closed-form contributions with an unrelated generator.
fn hist_decomp_r_closed_form(theta: f64, m: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (s, c) = theta.sin_cos();
    let mut hits = 0;
    for _ in 0..m {
        let e1: f64 = rng.sample(StandardNormal);
        let e2: f64 = rng.sample(StandardNormal);
        if e1 >= 0.0 && (c * e1).abs() >= (s * e2).abs() {
            hits += 1;
        }
    }
    hits as f64 / m as f64
}

#[test]
fn hist_decomp_probability_matches_second_oracle() {
    let rf = bivariate(1.18, -0.52, 0.77);
    let set = RestrictionSet::new()
        .with_narrative(shock_sign(0, 0))
        .with_narrative(NarrativeRestriction::HistDecomp {
            variable: 0,
            shock: 0,
            start: 0,
            span: 0,
            mode: ContributionMode::MostImportant,
        });
    let m = 40_000;
    let mut rng = substream(7, 0);
    for k in 0..9 {
        let theta = -1.2 + 0.3 * k as f64;
        let q = OrthonormalMatrix::rotation(theta);
        let a = approx_narrative_probability(&rf, &q, &set, 1, m, &mut rng).unwrap().value;
        let b = hist_decomp_r_closed_form(theta, m, 1000 + k);
        let exact = (1.0 / theta.tan()).abs().atan() / PI;
        let se = (exact * (1.0 - exact) / m as f64).sqrt();
        assert!((a - b).abs() < 3.0 * se * 2f64.sqrt(), "theta={theta}: {a} vs {b}");
        assert!((a - exact).abs() < 3.5 * se, "theta={theta}: {a} vs {exact}");
    }
}

#[test]
fn inverse_gamma_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let t = 40;
    let data = randn(&mut rng, t, 1) * 1.5;
    let sampler = PhiPosteriorSampler::new(&data, 0, false).unwrap();
    assert_eq!(sampler.dof(), t);
    let s = sampler.scatter()[(0, 0)];
    let draws = 40_000;
    let mut rng = substream(8, 1);
    let xs: Vec<f64> = (0..draws)
        .map(|_| draw_phi(&sampler, &mut rng).unwrap().sigma()[(0, 0)])
        .collect();
    let mean = xs.iter().sum::<f64>() / draws as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
    // InvGamma(a = T/2, b = S/2): mean b/(a−1), variance mean²/(a−2).
    let (a, b) = (t as f64 / 2.0, s / 2.0);
    let m_exact = b / (a - 1.0);
    let v_exact = m_exact * m_exact / (a - 2.0);
    assert!((mean - m_exact).abs() < 4.0 * (v_exact / draws as f64).sqrt(), "{mean} vs {m_exact}");
    assert!((var / v_exact - 1.0).abs() < 0.1, "{var} vs {v_exact}");
}

#[test]
fn posterior_concentrates_on_truth() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let t = 2000;
    let b_true = DMatrix::from_row_slice(2, 3, &[0.5, 0.1, 0.2, -0.2, 0.3, -0.1]);
    let mut y = DMatrix::zeros(t, 2);
    for i in 1..t {
        let x = nalgebra::DVector::from_vec(vec![y[(i - 1, 0)], y[(i - 1, 1)], 1.0]);
        let u = nalgebra::DVector::from_vec(vec![rng.sample(StandardNormal), rng.sample(StandardNormal)]);
        let yi = &b_true * x + u;
        y.set_row(i, &yi.transpose());
    }
    let sampler = PhiPosteriorSampler::new(&y, 1, true).unwrap();
    let mut rng = substream(10, 0);
    let draws: Vec<DMatrix<f64>> = (0..2000).map(|_| draw_phi(&sampler, &mut rng).unwrap().b().clone()).collect();
    for r in 0..2 {
        for c in 0..3 {
            let xs: Vec<f64> = draws.iter().map(|b| b[(r, c)]).collect();
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64).sqrt();
            assert!((mean - b_true[(r, c)]).abs() < 3.0 * sd, "B[{r},{c}]: {mean} ± {sd}");
        }
    }
}

#[test]
fn improper_and_unstable_paths() {
    let data = DMatrix::<f64>::from_element(5, 2, 1.0);
    assert!(matches!(
        PhiPosteriorSampler::new(&data, 1, true),
        Err(crate::Error::ImproperPosterior { .. })
    ));
    // A random walk posterior with the stability cap at 1 draw fails quickly.
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut y = DMatrix::<f64>::zeros(60, 1);
    for i in 1..60 {
        y[(i, 0)] = y[(i - 1, 0)] * 1.05 + rng.sample::<f64, _>(StandardNormal);
    }
    let sampler = PhiPosteriorSampler::new(&y, 1, false).unwrap().with_max_unstable(1);
    let mut rng = substream(12, 0);
    let mut saw_error = false;
    for _ in 0..50 {
        match draw_phi(&sampler, &mut rng) {
            Err(crate::Error::UnstableDraws { attempts: 1 }) => saw_error = true,
            Ok(rf) => assert!(crate::var_core::stability_check(&rf)),
            Err(e) => panic!("{e}"),
        }
    }
    assert!(saw_error);
}

#[test]
fn no_restrictions_accept_everything() {
    let rf = bivariate(1.0, 0.2, 0.9);
    let data = randn(&mut ChaCha8Rng::seed_from_u64(13), 10, 2);
    let settings = UnconditionalSettings {
        prior: QPrior::JointUniform,
        max_q_attempts: 1,
        window: 1,
    };
    let draws = sample_unconditional(&FixedPhi(rf.clone()), &data, &RestrictionSet::new(), 100, &settings, 1).unwrap();
    assert_eq!(draws.len(), 100);
    assert!(draws.iter().all(|d| d.weight == 1.0 && check_sign_normalization(&rf, &d.q)));
}

#[test]
fn low_acceptance_aborts() {
    let rf = bivariate(1.0, 0.0, 1.0);
    let data = randn(&mut ChaCha8Rng::seed_from_u64(14), 2, 2);
    // ε_{1,0} ≥ 0 and ε_{1,0} ≤ 0 hold jointly only on a null set.
    let set = RestrictionSet::new()
        .with_narrative(shock_sign(0, 0))
        .with_narrative(NarrativeRestriction::ShockSign {
            shock: 0,
            period: 0,
            sign: Sign::Negative,
        })
        .with_narrative(shock_sign(1, 1))
        .with_narrative(NarrativeRestriction::ShockSign {
            shock: 1,
            period: 1,
            sign: Sign::Negative,
        });
    let settings = UnconditionalSettings {
        prior: QPrior::ConditionallyUniform,
        max_q_attempts: 100,
        window: 5_000,
    };
    assert!(matches!(
        sample_unconditional(&FixedPhi(rf), &data, &set, 2, &settings, 1),
        Err(crate::Error::LowAcceptance { .. })
    ));
}

#[test]
fn sampling_is_deterministic_and_thread_independent() {
    let rf = bivariate(1.0, -0.4, 0.8);
    let data = randn(&mut ChaCha8Rng::seed_from_u64(15), 5, 2);
    let set = RestrictionSet::new().with_narrative(shock_sign(0, 1));
    let settings = UnconditionalSettings::default();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| sample_unconditional(&FixedPhi(rf.clone()), &data, &set, 64, &settings, 77).unwrap())
    };
    let a = run(1);
    let b = run(3);
    assert!(a.iter().zip(&b).all(|(x, y)| x.q == y.q));
}

#[test]
fn shock_sign_only_reweighting_is_uniform() {
    let rf = bivariate(1.0, -0.4, 0.8);
    let data = randn(&mut ChaCha8Rng::seed_from_u64(16), 6, 2);
    let set = RestrictionSet::new()
        .with_narrative(shock_sign(0, 1))
        .with_narrative(shock_sign(1, 3));
    let draws =
        sample_unconditional(&FixedPhi(rf.clone()), &data, &set, 200, &UnconditionalSettings::default(), 3).unwrap();
    let m = 20_000;
    let out = reweight_conditional(&draws, &set, 6, m, 200, 4).unwrap();
    let se = (0.25 * 0.75 / m as f64).sqrt();
    for r in &out.r_hat {
        assert!((r - 0.25).abs() < 4.5 * se, "r-hat {r}");
    }
    assert_eq!(out.capped, 0);
    // Support is preserved.
    let innov = compute_residuals(&data, &rf).unwrap();
    let prep = crate::restrictions::PreparedRestrictions::new(&rf, &set, &innov).unwrap();
    assert!(out.draws.iter().all(|d| prep.accepts(&d.q)));
}

#[test]
fn equal_weights_resample_uniformly() {
    let rf = bivariate(1.0, 0.0, 1.0);
    let data = randn(&mut ChaCha8Rng::seed_from_u64(17), 4, 2);
    let draws =
        sample_unconditional(&FixedPhi(rf), &data, &RestrictionSet::new(), 10, &UnconditionalSettings::default(), 5)
            .unwrap();
    let out = reweight_conditional(&draws, &RestrictionSet::new(), 4, 10, 50_000, 6).unwrap();
    let mut counts = [0usize; 10];
    for &i in &out.indices {
        counts[i] += 1;
    }
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - 5000.0).powi(2) / 5000.0).sum();
    // 9 degrees of freedom; the 0.999 quantile is 27.9.
    assert!(chi2 < 27.9, "chi2 = {chi2}");
}

#[test]
fn unconditional_likelihood_is_flat_in_q() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let rf = bivariate(1.2, -0.5, 0.7);
    let data = randn(&mut rng, 3, 2);
    let innov = compute_residuals(&data, &rf).unwrap();
    let set = RestrictionSet::new().with_narrative(shock_sign(0, 0));
    let draws = sample_unconditional(&FixedPhi(rf.clone()), &data, &set, 50, &UnconditionalSettings::default(), 8).unwrap();
    let values: Vec<f64> = draws
        .iter()
        .map(|d| unconditional_log_likelihood(&rf, &d.q, &innov, &set).unwrap().unwrap())
        .collect();
    assert!(values.iter().all(|v| v.to_bits() == values[0].to_bits()));
    // Conditional version divides by r = 1/2 for one shock sign.
    let c = conditional_log_likelihood(&rf, &draws[0].q, &innov, &set, 0.5).unwrap().unwrap();
    assert!((c - values[0] - 2f64.ln()).abs() < 1e-12);
}

#[test]
fn hpd_examples() {
    assert!(matches!(hpd_interval(&[1.0; 50], 0.5), Err(crate::Error::TooFewDraws { .. })));
    assert_eq!(hpd_interval(&[2.5; 200], 0.68).unwrap(), (2.5, 2.5));

    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let u: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
    let (lo, hi) = hpd_interval(&u, 0.68).unwrap();
    assert!(((hi - lo) - 0.68).abs() < 0.02);

    let z: Vec<f64> = (0..400_000).map(|_| rng.sample(StandardNormal)).collect();
    let (lo, hi) = hpd_interval(&z, 0.68).unwrap();
    assert!((lo + 1.0).abs() < 0.05 && (hi - 1.0).abs() < 0.05, "[{lo}, {hi}]");
}
