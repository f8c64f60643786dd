use lmsm_haar::kernels::KernelParams;
use lmsm_haar::lmsm::{
    hurst_preset, synthesize_path, synthesize_with_pyramid, validate_params, BoundaryPolicy, HurstFunction,
    PathConfig,
};
use lmsm_haar::series::{evaluate_field, Component, EvalDomain, Method, SeriesEvaluator, Truncation};
use lmsm_haar::stable::{CoefficientMode, PyramidSpec};
use lmsm_haar::Error;
use proptest::prelude::*;

fn constraints(err: Error) -> Vec<String> {
    match err {
        Error::Constraints(list) => list,
        other => panic!("expected a constraint list, got {other:?}"),
    }
}

#[test]
fn preset_values() {
    let linear = hurst_preset("linear", &[]).unwrap();
    assert!((linear.eval(0.5) - 0.8).abs() < 1e-15);
    let sine = hurst_preset("sine", &[]).unwrap();
    assert_eq!(sine.eval(0.0), 0.8);
    assert!((sine.eval(0.125) - 1.0).abs() < 1e-15);
    let logistic = hurst_preset("logistic", &[]).unwrap();
    assert!((logistic.eval(0.5) - 0.775).abs() < 1e-15);
    let c = hurst_preset("constant", &[0.75]).unwrap();
    assert!([0.0, 0.3, 1.0].iter().all(|&t| c.eval(t) == 0.75));
    let table = hurst_preset("table", &[0.0, 0.7, 1.0, 0.9]).unwrap();
    assert!((table.eval(0.25) - 0.75).abs() < 1e-15);
    assert!(hurst_preset("cubic", &[]).is_err());
    assert!(hurst_preset("linear", &[0.9]).is_err());
}

#[test]
fn spec_strings_round_trip() {
    for name in ["linear", "sine", "logistic"] {
        let h = hurst_preset(name, &[]).unwrap();
        let back: HurstFunction = h.spec_string().parse().unwrap();
        assert_eq!(back, h);
    }
    let t: HurstFunction = "table:0,0.7;0.5,0.9;1,0.8".parse().unwrap();
    assert!((t.eval(0.75) - 0.85).abs() < 1e-15);
}

#[test]
fn figure_rows_one_and_two_violate_the_strict_bounds() {
    let row1 = constraints(validate_params(1.4, &hurst_preset("linear", &[]).unwrap(), BoundaryPolicy::Strict).unwrap_err());
    assert_eq!(row1.len(), 1);
    assert!(row1[0].contains("min H"));
    let row2 = constraints(validate_params(1.7, &hurst_preset("sine", &[]).unwrap(), BoundaryPolicy::Strict).unwrap_err());
    assert_eq!(row2.len(), 1);
    assert!(row2[0].contains("max H"));
    let clamped = validate_params(1.4, &hurst_preset("linear", &[]).unwrap(), BoundaryPolicy::Clamp).unwrap();
    assert!(clamped.clamped);
    assert!(clamped.h(1.0) > 1.0 / 1.4);
}

#[test]
fn valid_and_doubly_invalid_configurations() {
    let ok = validate_params(1.5, &HurstFunction::Constant { value: 0.75 }, BoundaryPolicy::Strict).unwrap();
    assert!(!ok.clamped);
    let bad = constraints(validate_params(2.5, &HurstFunction::Constant { value: 1.2 }, BoundaryPolicy::Strict).unwrap_err());
    assert_eq!(bad.len(), 2);
    assert!(bad[0].contains("alpha"));
}

#[test]
fn a_single_time_zero_gives_zero() {
    let cfg = PathConfig::new(1.5, HurstFunction::Constant { value: 0.8 }, 6, 4, 1);
    let p = synthesize_path(&cfg, Some(&[0.0])).unwrap();
    assert_eq!(p.y, vec![0.0]);
    assert_eq!((p.y1[0], p.y2[0]), (0.0, 0.0));
}

#[test]
fn constant_hurst_reproduces_the_field_row() {
    let alpha = 1.5;
    let v = 0.8;
    let cfg = PathConfig::new(alpha, HurstFunction::Constant { value: v }, 8, 5, 17);
    let path = synthesize_path(&cfg, None).unwrap();
    let pyr = PyramidSpec::new(alpha, 8, 5, CoefficientMode::Consistent, 17).generate().unwrap();
    let eval = SeriesEvaluator::new(&pyr).unwrap();
    let domain = EvalDomain::new(path.t.clone(), vec![v], alpha).unwrap();
    let field = evaluate_field(&domain, &eval, Truncation::new(8, 5), Component::Total, Method::Abel).unwrap();
    let bits = |x: &[f64]| x.iter().map(|f| f.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&field.column(0)), bits(&path.y));
}

#[test]
fn components_add_up_exactly() {
    let cfg = PathConfig::new(1.6, hurst_preset("logistic", &[]).unwrap(), 8, 5, 3);
    let p = synthesize_path(&cfg, None).unwrap();
    assert_eq!(p.t.len(), 257);
    for i in 0..p.t.len() {
        assert_eq!(p.y[i], p.y1[i] + p.y2[i]);
        assert!(p.y[i].is_finite());
    }
    assert_eq!(p.y[0], 0.0);
}

#[test]
fn identical_configurations_give_identical_csv() {
    let mut cfg = PathConfig::new(1.4, hurst_preset("linear", &[]).unwrap(), 7, 4, 99);
    cfg.policy = BoundaryPolicy::Clamp;
    let a = synthesize_path(&cfg, None).unwrap().to_csv();
    let b = synthesize_path(&cfg, None).unwrap().to_csv();
    assert_eq!(a, b);
    assert!(a.starts_with("# {"));
    assert!(a.contains("\"clamp_applied\":true"));
    assert!(a.lines().nth(1) == Some("t,y1,y2,y"));
    cfg.seed = 100;
    assert_ne!(synthesize_path(&cfg, None).unwrap().to_csv(), a);
}

#[test]
fn coupled_depths_differ_by_exactly_one_row() {
    let alpha = 1.5;
    let hurst = hurst_preset("linear", &[0.85, -0.1]).unwrap();
    let t: Vec<f64> = (0..=64).map(|i| i as f64 / 64.0).collect();
    let path_at = |hf: usize, lf: usize| {
        let mut cfg = PathConfig::new(alpha, hurst.clone(), hf, lf, 5);
        cfg.resolution = Some((10, 6));
        synthesize_path(&cfg, Some(&t)).unwrap()
    };
    let (lo, hi) = (path_at(7, 4), path_at(8, 5));
    let pyr = PyramidSpec::new(alpha, 8, 5, CoefficientMode::Consistent, 5)
        .with_resolutions(10, 6)
        .generate()
        .unwrap();
    let params = KernelParams::new(alpha).unwrap();
    for (i, &ti) in t.iter().enumerate() {
        let k = params.kernel(hurst.eval(ti)).unwrap();
        let y = ti * 128.0;
        let row: f64 = pyr.hf_row(7).iter().enumerate().map(|(kk, z)| z * k.theta(y - kk as f64)).sum();
        let added = (-7.0 * hurst.eval(ti)).exp2() * row;
        assert!((hi.y1[i] - lo.y1[i] - added).abs() < 1e-12 * (1.0 + hi.y1[i].abs()), "t={ti}");
    }
}

#[test]
fn figure_row_three_runs_at_full_depth() {
    let cfg = PathConfig::new(1.6, hurst_preset("logistic", &[]).unwrap(), 12, 6, 7);
    let p = synthesize_path(&cfg, None).unwrap();
    assert_eq!(p.t.len(), 4097);
    assert!(p.y.iter().all(|x| x.is_finite()));
}

#[test]
fn precomputed_pyramid_path_matches_the_one_shot_path() {
    let cfg = PathConfig::new(1.5, HurstFunction::Constant { value: 0.9 }, 6, 3, 4);
    let p = synthesize_path(&cfg, None).unwrap();
    let pyr = PyramidSpec::new(1.5, 6, 3, CoefficientMode::Consistent, 4).generate().unwrap();
    let validated = validate_params(1.5, &cfg.hurst, BoundaryPolicy::Strict).unwrap();
    let q = synthesize_with_pyramid(&validated, &pyr, &p.t, 6, 3, Method::Abel).unwrap();
    assert_eq!(p.y, q.y);
    assert!(synthesize_with_pyramid(&validated, &pyr, &[1.5], 6, 3, Method::Abel).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn table_functions_stay_within_their_knots(hs in proptest::collection::vec(0.7f64..0.95, 2..6), t in 0.0f64..=1.0) {
        let n = hs.len();
        let knots: Vec<f64> = hs.iter().enumerate().flat_map(|(i, &h)| [i as f64 / (n - 1) as f64, h]).collect();
        let f = hurst_preset("table", &knots).unwrap();
        let lo = hs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = hs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let h = f.eval(t);
        prop_assert!(h >= lo - 1e-15 && h <= hi + 1e-15);
        prop_assert!(validate_params(1.5, &f, BoundaryPolicy::Strict).is_ok());
    }
}
