use nalgebra::{DMatrix, Matrix2};
use nsvar_core::bivariate_lab::{eta_set, simulate_bivariate, BivariatePhi};
use nsvar_core::pipeline::{run_pipeline, Algorithm, Mode, PipelineSettings, RunStatus};
use nsvar_core::restrictions::{NarrativeRestriction, RestrictionSet, Sign};
use nsvar_core::robust::Target;
use nsvar_core::sampling::{draw_uniform_orthonormal, substream, FixedPhi, PhiPosteriorSampler};
use nsvar_core::var_core::{
    historical_decomposition, impulse_response, structural_shocks, vma_coefficients, OrthonormalMatrix,
};
use nsvar_core::{OrthonormalMatrixF64, PipelineOutputF32, PipelineOutputF64, ReducedFormParamsF32, ReducedFormParamsF64};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn shock_sign(period: usize) -> RestrictionSet {
    RestrictionSet::new().with_narrative(NarrativeRestriction::ShockSign {
        shock: 0,
        period,
        sign: Sign::Positive,
    })
}

const ETA: [Target; 1] = [Target {
    variable: 0,
    shock: 0,
    horizon: 0,
}];

#[test]
fn known_phi_pipeline_reproduces_the_closed_form_set() {
    let a0 = Matrix2::new(1.0, 0.5, 0.2, 1.2);
    let (phi, _, _) = BivariatePhi::from_a0(&a0).unwrap();
    let sample = simulate_bivariate(&a0, 5, true, &mut substream(3, 0)).unwrap();
    let exact = eta_set(&phi, nalgebra::Vector2::new(sample.y[(2, 0)], sample.y[(2, 1)])).unwrap();
    for algorithm in [Algorithm::Mc, Algorithm::Chebyshev] {
        let settings = PipelineSettings {
            n_phi: 3,
            algorithm,
            ..PipelineSettings::default()
        };
        let out: PipelineOutputF64 =
            run_pipeline(&FixedPhi(phi.params()), &sample.y, &shock_sign(2), &ETA, &[], &settings).unwrap();
        assert_eq!(out.status, RunStatus::Ok);
        let mean = out.summaries[0].mean;
        let tol = if algorithm == Algorithm::Mc { 0.02 } else { 1e-6 };
        assert!((mean.lo - exact.lo).abs() < tol && (mean.hi - exact.hi).abs() < tol, "{mean:?} vs {exact:?}");
    }
}

#[test]
fn single_precision_pipeline_tracks_double() {
    let a0 = Matrix2::new(1.0, 0.5, 0.2, 1.2);
    let sample = simulate_bivariate(&a0, 80, true, &mut substream(4, 0)).unwrap();
    let settings = PipelineSettings {
        n_phi: 200,
        algorithm: Algorithm::Chebyshev,
        ..PipelineSettings::default()
    };
    let y32: DMatrix<f32> = sample.y.map(|v| v as f32);
    let out64: PipelineOutputF64 = run_pipeline(
        &PhiPosteriorSampler::new(&sample.y, 1, true).unwrap(),
        &sample.y,
        &shock_sign(10),
        &ETA,
        &[],
        &settings,
    )
    .unwrap();
    let out32: PipelineOutputF32 =
        run_pipeline(&PhiPosteriorSampler::new(&y32, 1, true).unwrap(), &y32, &shock_sign(10), &ETA, &[], &settings)
            .unwrap();
    let (m64, m32) = (out64.summaries[0].mean, out32.summaries[0].mean);
    assert!((m64.lo - m32.lo as f64).abs() < 0.05 && (m64.hi - m32.hi as f64).abs() < 0.05);
}

#[test]
fn reruns_and_thread_counts_give_identical_output() {
    let a0 = Matrix2::new(1.0, 0.5, 0.2, 1.2);
    let sample = simulate_bivariate(&a0, 60, true, &mut substream(5, 0)).unwrap();
    let sampler = PhiPosteriorSampler::new(&sample.y, 1, true).unwrap();
    let settings = PipelineSettings {
        n_phi: 40,
        algorithm: Algorithm::Mc,
        mc: nsvar_core::robust::McSettings::new(300, 30_000),
        ..PipelineSettings::default()
    };
    let run = || format!("{:?}", run_pipeline(&sampler, &sample.y, &shock_sign(7), &ETA, &[], &settings).unwrap());
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let first = run();
    assert_eq!(first, run());
    assert_eq!(first, pool.install(run));
}

#[test]
fn standard_mode_reports_point_means() {
    let a0 = Matrix2::new(1.0, 0.5, 0.2, 1.2);
    let sample = simulate_bivariate(&a0, 60, true, &mut substream(6, 0)).unwrap();
    let settings = PipelineSettings {
        n_phi: 300,
        mode: Mode::StandardUnconditional,
        ..PipelineSettings::default()
    };
    let out = run_pipeline(
        &PhiPosteriorSampler::new(&sample.y, 0, false).unwrap(),
        &sample.y,
        &shock_sign(0),
        &ETA,
        &[],
        &settings,
    )
    .unwrap();
    let s = &out.summaries[0];
    assert_eq!(s.mean.lo, s.mean.hi);
    let hpd = s.intervals[0].interval.unwrap();
    assert!(hpd.contains(s.mean.lo));
}

fn random_params(seed: u64, n: usize, p: usize) -> ReducedFormParamsF64 {
    let mut rng = substream(seed, 0);
    let a = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let sigma = &a * a.transpose() + DMatrix::identity(n, n) * 0.5;
    let b = DMatrix::from_fn(n, n * p, |_, _| rng.sample::<f64, _>(StandardNormal) * 0.2 / (n * p) as f64);
    ReducedFormParamsF64::new(p, false, b, sigma).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn historical_decomposition_adds_up(seed in any::<u64>(), n in 2usize..5, p in 1usize..4, h in 0usize..6) {
        let params = random_params(seed, n, p);
        let mut rng = substream(seed, 1);
        let q = OrthonormalMatrixF64::new(draw_uniform_orthonormal(n, &mut rng)).unwrap();
        let window = DMatrix::<f64>::from_fn(h + 1, n, |_, _| rng.sample(StandardNormal));
        let vma = vma_coefficients(&params, h);
        for i in 0..n {
            let total: f64 = (0..n)
                .map(|j| historical_decomposition(&params, &vma, &q, &window, i, j).unwrap())
                .sum();
            let direct: f64 = (0..=h).map(|l| (vma.get(l).unwrap() * window.row(h - l).transpose())[i]).sum();
            prop_assert!((total - direct).abs() <= 1e-10 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn shocks_and_structural_matrix_round_trip(seed in any::<u64>(), n in 2usize..6) {
        let params = random_params(seed, n, 1);
        let mut rng = substream(seed, 2);
        let q = OrthonormalMatrix::new(draw_uniform_orthonormal(n, &mut rng)).unwrap();
        let u = nalgebra::DVector::<f64>::from_fn(n, |_, _| rng.sample(StandardNormal));
        let eps = structural_shocks(&params, &q, &u).unwrap();
        prop_assert!((params.sigma_tr() * q.matrix() * &eps - &u).norm() <= 1e-10);
        let a0_inv = params.a0(&q).try_inverse().unwrap();
        prop_assert!((&a0_inv * a0_inv.transpose() - params.sigma()).norm() <= 1e-10 * params.sigma().norm());
        // Impact responses are the columns of Σ_tr Q.
        let vma = vma_coefficients(&params, 0);
        let impact = params.sigma_tr() * q.matrix();
        for i in 0..n {
            for j in 0..n {
                let r = impulse_response(&params, &vma, &q, i, j, 0).unwrap();
                prop_assert!((r - impact[(i, j)]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn single_precision_impulse_responses_match(seed in any::<u64>()) {
        let params = random_params(seed, 3, 2);
        let p32 = ReducedFormParamsF32::new(2, false, params.b().map(|v| v as f32), params.sigma().map(|v| v as f32)).unwrap();
        let mut rng = substream(seed, 3);
        let q = draw_uniform_orthonormal::<f64, _>(3, &mut rng);
        let q64 = OrthonormalMatrixF64::new(q.clone()).unwrap();
        let q32 = nsvar_core::OrthonormalMatrixF32::new(q.map(|v| v as f32)).unwrap();
        let (v64, v32) = (vma_coefficients(&params, 4), vma_coefficients(&p32, 4));
        for h in 0..=4 {
            let a = impulse_response(&params, &v64, &q64, 1, 0, h).unwrap();
            let b = impulse_response(&p32, &v32, &q32, 1, 0, h).unwrap();
            prop_assert!((a - b as f64).abs() <= 1e-4 * (1.0 + a.abs()));
        }
    }
}
