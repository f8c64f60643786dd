use std::f64::consts::PI;

use lmsm_haar::analysis::{estimate_scale, median};
use lmsm_haar::stable::{
    build_levy_grid, derive_seed, generate_coefficients, prefix_sums, read_pyramid, rng_stream, sample_sas, streams,
    write_pyramid, zeta_from_levy, CoefficientMode, LevyGrid, PyramidSpec, StableLaw,
};
use lmsm_haar::Error;
use proptest::prelude::*;
use rand::Rng;

const ALPHA: f64 = 1.5;

/// Median of `|S|` for standard SαS with α = 1.5, from numerical inversion
/// of the characteristic function at 40 digits.
const MEDIAN_ABS_1_5: f64 = 0.96893318171358300521;

/// Chambers–Mallows–Stuck in its general skewed form with β = 0, written
/// out separately from the library sampler.
fn cms_oracle<R: Rng>(alpha: f64, rng: &mut R) -> f64 {
    let v = PI * (rng.random::<f64>() - 0.5);
    let w = -(1.0 - rng.random::<f64>()).ln();
    let a = (alpha * v).sin() / v.cos().powf(1.0 / alpha);
    let b = ((v - alpha * v).cos() / w).powf((1.0 - alpha) / alpha);
    a * b
}

#[test]
fn sampler_median_matches_an_independent_oracle() {
    let law = StableLaw::standard(ALPHA).unwrap();
    let mut rng = rng_stream(11, streams::DRAWS);
    let ours: Vec<f64> = (0..100_000).map(|_| sample_sas(&law, &mut rng).abs()).collect();
    let mut rng = rng_stream(12, streams::DRAWS);
    let theirs: Vec<f64> = (0..100_000).map(|_| cms_oracle(ALPHA, &mut rng).abs()).collect();
    let (m_ours, m_theirs) = (median(&ours), median(&theirs));
    assert!((m_ours / m_theirs - 1.0).abs() < 0.01, "{m_ours} vs {m_theirs}");
    assert!((m_ours / MEDIAN_ABS_1_5 - 1.0).abs() < 0.01, "{m_ours}");
}

#[test]
fn scaled_law_scales_draws() {
    let law = StableLaw::new(ALPHA, 3.0).unwrap();
    let mut rng = rng_stream(5, streams::DRAWS);
    let draws: Vec<f64> = (0..100_000).map(|_| law.sample(&mut rng)).collect();
    let s = estimate_scale(&draws, ALPHA).unwrap();
    assert!((s / 3.0 - 1.0).abs() < 0.02, "{s}");
}

#[test]
fn invalid_laws_are_rejected() {
    assert!(matches!(StableLaw::new(ALPHA, 0.0), Err(Error::Parameter(_))));
    assert!(matches!(StableLaw::new(1.0, 1.0), Err(Error::Parameter(_))));
    assert!(matches!(StableLaw::new(2.0, 1.0), Err(Error::Parameter(_))));
}

#[test]
fn identical_streams_give_identical_draws() {
    let law = StableLaw::standard(ALPHA).unwrap();
    let a = sample_sas(&law, &mut rng_stream(9, 4));
    let b = sample_sas(&law, &mut rng_stream(9, 4));
    assert_eq!(a.to_bits(), b.to_bits());
    assert_ne!(derive_seed(9, 0), derive_seed(9, 1));
}

#[test]
fn levy_grid_is_anchored_at_zero() {
    let g = build_levy_grid(ALPHA, -2.0, 3.0, 5, &mut rng_stream(1, 1)).unwrap();
    assert_eq!(g.value_at(0.0), Some(0.0));
    assert_eq!(g.len(), 5 * 32 + 1);
    let single = build_levy_grid(ALPHA, 0.0, 0.0, 3, &mut rng_stream(1, 1)).unwrap();
    assert_eq!(single.values(), &[0.0]);
    assert!(build_levy_grid(ALPHA, -0.3, 1.0, 2, &mut rng_stream(1, 1)).is_err());
}

#[test]
fn levy_increments_have_the_step_scale() {
    let g = build_levy_grid(ALPHA, 0.0, 100_000.0 / 16.0, 4, &mut rng_stream(2, 1)).unwrap();
    let inc = g.increments();
    assert_eq!(inc.len(), 100_000);
    let s = estimate_scale(&inc, ALPHA).unwrap();
    let want = (1.0f64 / 16.0).powf(1.0 / ALPHA);
    assert!((s / want - 1.0).abs() < 0.05, "{s} vs {want}");
}

#[test]
fn zeta_annihilates_affine_paths() {
    let level = 6;
    let values: Vec<f64> = (0..=2 * 64).map(|m| 2.5 * (m as f64 - 64.0) / 64.0).collect();
    let g = LevyGrid::from_values(ALPHA, -1.0, level, values).unwrap();
    for j in 0..level as i32 {
        for k in -(1i64 << j)..(1i64 << j) {
            assert_eq!(zeta_from_levy(&g, j, k).unwrap(), 0.0, "j={j} k={k}");
        }
    }
}

#[test]
fn zeta_zero_zero_is_a_second_difference() {
    let (s, w) = (0.37, -1.21);
    let g = LevyGrid::from_values(ALPHA, 0.0, 1, vec![0.0, s, w]).unwrap();
    assert_eq!(zeta_from_levy(&g, 0, 0).unwrap(), 2.0 * s - w);
    assert!(matches!(zeta_from_levy(&g, 1, 0), Err(Error::Resolution(_))));
}

#[test]
fn zeta_rows_have_unit_scale() {
    let pyr = generate_coefficients(ALPHA, 18, 2, CoefficientMode::Consistent, 21).unwrap();
    let row = pyr.hf_row(17);
    assert!(row.len() >= 100_000);
    let s = estimate_scale(row, ALPHA).unwrap();
    assert!((s - 1.0).abs() < 0.05, "{s}");
    let lf = generate_coefficients(ALPHA, 1, 16, CoefficientMode::Consistent, 22).unwrap();
    for j in [-2, 0, 2] {
        let s = estimate_scale(lf.lf_row(j), ALPHA).unwrap();
        assert!((s - 1.0).abs() < 0.05, "row {j}: {s}");
    }
}

#[test]
fn prefix_sums_have_levy_scales() {
    // λ_{j,k} has the law of Z(k+1): scale (k+1)^{1/α}.
    let reps = 4000u64;
    let rows: Vec<Vec<f64>> = (0..reps)
        .map(|r| {
            let pyr = generate_coefficients(ALPHA, 4, 2, CoefficientMode::Consistent, derive_seed(31, r)).unwrap();
            prefix_sums(&pyr).hf_row(3).to_vec()
        })
        .collect();
    for k in [0usize, 3, 7] {
        let column: Vec<f64> = rows.iter().map(|r| r[k]).collect();
        let s = estimate_scale(&column, ALPHA).unwrap();
        let want = ((k + 1) as f64).powf(1.0 / ALPHA);
        assert!((s / want - 1.0).abs() < 0.10, "k={k}: {s} vs {want}");
    }
}

#[test]
fn smallest_pyramid_has_the_stated_rows() {
    for mode in [CoefficientMode::Consistent, CoefficientMode::Independent] {
        let pyr = generate_coefficients(ALPHA, 1, 2, mode, 0).unwrap();
        assert_eq!(pyr.hf_row(0).len(), 1);
        assert_eq!(pyr.lf_row(-1).len(), 2);
        assert_eq!(pyr.lf_row(0).len(), 4);
        assert_eq!(pyr.lf_row(1).len(), 2);
    }
    assert!(generate_coefficients(ALPHA, 0, 2, CoefficientMode::Consistent, 0).is_err());
    assert!(generate_coefficients(ALPHA, 1, 1, CoefficientMode::Consistent, 0).is_err());
}

#[test]
fn row_lengths_follow_the_index_sets() {
    let pyr = generate_coefficients(ALPHA, 7, 5, CoefficientMode::Independent, 3).unwrap();
    for j in 0..7 {
        assert_eq!(pyr.hf_row(j).len(), 1 << j);
    }
    for j in -4..=4 {
        assert_eq!(pyr.lf_row(j).len(), 1 << (5 - j.unsigned_abs()));
    }
}

#[test]
fn consistent_pyramids_share_coefficients_across_depths() {
    let shallow = PyramidSpec::new(ALPHA, 5, 3, CoefficientMode::Consistent, 8)
        .with_resolutions(9, 6)
        .generate()
        .unwrap();
    let deep = PyramidSpec::new(ALPHA, 9, 6, CoefficientMode::Consistent, 8)
        .generate()
        .unwrap();
    assert_eq!(shallow.z1().to_bits(), deep.z1().to_bits());
    for j in 0..5 {
        assert_eq!(shallow.hf_row(j), deep.hf_row(j));
    }
    for j in -2..=2 {
        let n = shallow.lf_row(j).len();
        assert_eq!(shallow.lf_row(j), &deep.lf_row(j)[..n]);
    }
}

#[test]
fn published_configuration_fits_the_default_budget() {
    let pyr = generate_coefficients(1.6, 12, 6, CoefficientMode::Consistent, 7).unwrap();
    assert_eq!(pyr.hf_row(11).len(), 2048);
    assert_eq!(pyr.lf_row(0).len(), 64);
    let tight = PyramidSpec::new(ALPHA, 4, 10, CoefficientMode::Consistent, 0).with_entry_budget(1000);
    assert!(matches!(tight.generate(), Err(Error::Budget { .. })));
}

#[test]
fn prefix_sum_examples() {
    let pyr = generate_coefficients(ALPHA, 6, 4, CoefficientMode::Consistent, 5).unwrap();
    let pre = prefix_sums(&pyr);
    for j in 0..6 {
        assert_eq!(pre.hf_row(j)[0], pyr.hf_row(j)[0]);
    }
    for j in -3..=3 {
        assert_eq!(pre.lf_row(j)[0], pyr.lf_row(j)[0]);
    }
    let hf = (0..3).map(|j| vec![1.0; 1 << j]).collect();
    let lf = (0..3).map(|i: i32| vec![1.0; 1 << (2 - (i - 1).unsigned_abs())]).collect();
    let ones = lmsm_haar::stable::CoefficientPyramid::from_rows(ALPHA, hf, lf, 0.0).unwrap();
    let pre = prefix_sums(&ones);
    assert_eq!(pre.hf_row(2), &[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(pre.lf_row(0), &[1.0, 2.0, 3.0, 4.0]);
}

#[test]
fn identical_seeds_give_identical_pyramids() {
    for mode in [CoefficientMode::Consistent, CoefficientMode::Independent] {
        let a = generate_coefficients(ALPHA, 8, 5, mode, 42).unwrap();
        let b = generate_coefficients(ALPHA, 8, 5, mode, 42).unwrap();
        let c = generate_coefficients(ALPHA, 8, 5, mode, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}

#[test]
fn container_round_trip_is_exact() {
    let pyr = generate_coefficients(ALPHA, 6, 4, CoefficientMode::Consistent, 77).unwrap();
    let mut bytes = Vec::new();
    write_pyramid(&pyr, &mut bytes).unwrap();
    assert_eq!(&bytes[..4], b"HLMP");
    assert_eq!(read_pyramid(bytes.as_slice()).unwrap(), pyr);
    bytes.truncate(bytes.len() - 3);
    assert!(read_pyramid(bytes.as_slice()).is_err());
}

proptest! {
    #[test]
    fn pyramid_shapes_hold_for_any_depth(hf in 1usize..9, lf in 2usize..7, seed in any::<u64>()) {
        let pyr = generate_coefficients(ALPHA, hf, lf, CoefficientMode::Independent, seed).unwrap();
        prop_assert_eq!(pyr.hf_rows().len(), hf);
        prop_assert_eq!(pyr.lf_rows().len(), 2 * lf - 1);
        let expected: usize = (1usize << hf) - 1 + (1usize << lf) + 2 * ((1usize << lf) - 2);
        prop_assert_eq!(pyr.coefficient_count(), expected);
    }

    #[test]
    fn affine_grids_give_zero_coefficients(eighths in -80i32..80, j in 0i32..5, k in -16i64..16) {
        // Dyadic slopes keep every grid value exact.
        let slope = f64::from(eighths) / 8.0;
        let level = 6u32;
        let values: Vec<f64> = (0..=2 * 1024).map(|m| slope * (m as f64 - 1024.0) / 64.0).collect();
        let g = LevyGrid::from_values(ALPHA, -16.0, level, values).unwrap();
        prop_assert_eq!(zeta_from_levy(&g, j, k).unwrap(), 0.0);
    }
}
