use biaslab::generator::{apply_representation_bias, generate_population, scenario_params};
use biaslab::harness::ExperimentConfig;
use biaslab::metrics::dp_of_target;
use biaslab::{GeneratorParams, Population, RngStream, ScenarioId};

fn shipped(scenario: ScenarioId, n: usize) -> GeneratorParams {
    let config = ExperimentConfig::shipped();
    GeneratorParams {
        n_samples: n,
        ..scenario_params(scenario, &config.generator, &config.presets)
    }
}

fn group_mean(pop: &Population, values: &[f64], group: u8) -> (f64, usize) {
    let xs: Vec<f64> = (0..pop.len()).filter(|&i| pop.a[i] == group).map(|i| values[i]).collect();
    (xs.iter().sum::<f64>() / xs.len() as f64, xs.len())
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal CDF by composite Simpson integration from -10.
fn normal_cdf(x: f64) -> f64 {
    let lo = -10.0;
    let steps = 20_000;
    let h = (x - lo) / steps as f64;
    let mut acc = normal_pdf(lo) + normal_pdf(x);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * normal_pdf(lo + i as f64 * h);
    }
    acc * h / 3.0
}

fn normal_quantile(q: f64) -> f64 {
    let (mut lo, mut hi) = (-10.0, 10.0);
    for _ in 0..80 {
        let mid = (lo + hi) / 2.0;
        if normal_cdf(mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / 2.0
}

#[test]
fn resource_gap_matches_historical_bias() {
    let params = GeneratorParams {
        n_samples: 100_000,
        beta_r_h: 2.0,
        sigma_r: 1.0,
        ..GeneratorParams::default()
    };
    let pop = generate_population(&params, &mut RngStream::new(21, "gap")).unwrap();
    let (m0, n0) = group_mean(&pop, &pop.r, 0);
    let (m1, n1) = group_mean(&pop, &pop.r, 1);
    let se = (1.0 / n0 as f64 + 1.0 / n1 as f64).sqrt();
    assert!(((m1 - m0) - -2.0).abs() <= 4.0 * se, "gap {}", m1 - m0);
}

#[test]
fn noiseless_resource_is_constant() {
    let params = GeneratorParams {
        n_samples: 500,
        sigma_r: 0.0,
        mu_r: 1.25,
        ..GeneratorParams::default()
    };
    let pop = generate_population(&params, &mut RngStream::new(1, "flat")).unwrap();
    assert!(pop.r.iter().all(|&r| r == 1.25));
}

#[test]
fn generation_is_deterministic() {
    let params = shipped(ScenarioId::V, 5_000);
    let a = generate_population(&params, &mut RngStream::new(3, "det")).unwrap();
    let b = generate_population(&params, &mut RngStream::new(3, "det")).unwrap();
    assert_eq!(a, b);
    let c = generate_population(&params, &mut RngStream::new(4, "det")).unwrap();
    assert_ne!(a, c);
}

#[test]
fn target_is_thresholded_score_on_every_row() {
    for scenario in ScenarioId::ALL {
        let params = shipped(scenario, 20_000);
        let pop = generate_population(&params, &mut RngStream::new(8, "y")).unwrap();
        for i in 0..pop.len() {
            assert_eq!(pop.y[i], u8::from(pop.s[i] > params.s_bar));
            assert_eq!(pop.p_y[i], u8::from(pop.p_s[i] > params.s_bar));
        }
    }
}

#[test]
fn scenario_presets_switch_the_right_knobs() {
    let config = ExperimentConfig::shipped();
    let i = scenario_params(ScenarioId::I, &config.generator, &config.presets);
    assert_eq!((i.beta_r_h, i.beta_q_h, i.beta_y_h), (0.0, 0.0, 0.0));
    let iv = scenario_params(ScenarioId::IV, &config.generator, &config.presets);
    assert_eq!((iv.beta_r_h, iv.beta_q_h), (0.0, 0.0));
    assert_eq!(iv.beta_y_h, config.presets.iv_beta_y_h);
    let ii = scenario_params(ScenarioId::II, &config.generator, &config.presets);
    assert!(ii.beta_r_h != 0.0 && ii.beta_q_h != 0.0 && ii.beta_y_h == 0.0);
    let iii = scenario_params(ScenarioId::III, &config.generator, &config.presets);
    assert!(iii.beta_r_h != 0.0 && iii.beta_q_h == 0.0 && iii.beta_y_h == 0.0);
    let v = scenario_params(ScenarioId::V, &config.generator, &config.presets);
    assert!(v.beta_r_h != 0.0 && v.beta_q_h == 0.0 && v.beta_y_h != 0.0);
}

#[test]
fn scenario_one_target_is_balanced() {
    let pop = generate_population(&shipped(ScenarioId::I, 100_000), &mut RngStream::new(31, "dp")).unwrap();
    let dp = dp_of_target(&pop.y, &pop.a).unwrap();
    assert!(dp.abs() <= 1.5, "dp {dp}");
}

#[test]
fn scenario_two_effects_nearly_cancel() {
    let params = shipped(ScenarioId::II, 100_000);
    assert!(params.beta_r_h != 0.0);
    let pop = generate_population(&params, &mut RngStream::new(32, "dp")).unwrap();
    let dp = dp_of_target(&pop.y, &pop.a).unwrap();
    assert!(dp.abs() <= 1.5, "dp {dp}");
}

#[test]
fn undersampling_counts_follow_the_definition() {
    let mut a = vec![0u8; 900];
    a.extend(vec![1u8; 900]);
    let params = GeneratorParams {
        n_samples: 1_800,
        ..GeneratorParams::default()
    };
    let mut pop = generate_population(&params, &mut RngStream::new(2, "u")).unwrap();
    pop.a = a;
    let out = apply_representation_bias(&pop, 0.2, false, &mut RngStream::new(2, "keep")).unwrap();
    assert_eq!((out.count_group(0), out.count_group(1)), (900, 180));

    let same = apply_representation_bias(&pop, 1.0, false, &mut RngStream::new(2, "keep")).unwrap();
    assert_eq!(same, pop);
}

#[test]
fn conditioned_undersampling_matches_order_statistics() {
    let params = GeneratorParams {
        n_samples: 100_000,
        beta_r_h: 0.0,
        mu_r: 0.0,
        sigma_r: 1.0,
        ..GeneratorParams::default()
    };
    let pop = generate_population(&params, &mut RngStream::new(41, "os")).unwrap();
    let out = apply_representation_bias(&pop, 0.4, true, &mut RngStream::new(41, "keep")).unwrap();

    let (original, n1) = group_mean(&pop, &pop.r, 1);
    let (retained, k) = group_mean(&out, &out.r, 1);
    assert!(retained < original);

    // mean of the lowest fraction q of a standard normal is -pdf(z_q) / q
    let q = k as f64 / n1 as f64;
    let expected = -normal_pdf(normal_quantile(q)) / q;
    let tolerance = 4.0 / (k as f64).sqrt();
    assert!((retained - expected).abs() <= tolerance, "retained {retained}, expected {expected}");
}
