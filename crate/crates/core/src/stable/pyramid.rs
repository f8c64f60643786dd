use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_levy_grid, build_levy_path, check_alpha, rng_stream, streams, LevyGrid, StableLaw};
use crate::error::{Error, Result};

/// Default cap on the number of Lévy path entries a pyramid may allocate.
pub const DEFAULT_ENTRY_BUDGET: usize = 1 << 26;

/// How the Haar coefficients are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoefficientMode {
    /// Every coefficient is a second difference of one shared Lévy path per
    /// half-line. This is the exact joint law.
    Consistent,
    /// Every coefficient is an independent unit-scale SαS draw. Rows have the
    /// right marginal law, but the coupling across rows is lost, so sums over
    /// several rows do **not** have the law of the target field when α < 2.
    Independent,
}

impl CoefficientMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CoefficientMode::Consistent => "consistent",
            CoefficientMode::Independent => "independent",
        }
    }
}

impl std::str::FromStr for CoefficientMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "consistent" => Ok(CoefficientMode::Consistent),
            "independent" => Ok(CoefficientMode::Independent),
            other => Err(Error::Parameter(format!("unknown coefficient mode `{other}`"))),
        }
    }
}

/// The Haar coefficients `ζ` of the driving noise.
///
/// * High frequency: rows `j ∈ [0, hf_depth)`, row `j` holding `ζ_{j,k}` for
///   `k ∈ [0, 2^j)`.
/// * Low frequency: rows `j ∈ (-lf_depth, lf_depth)`, row `j` holding
///   `ζ_{j,-k}` for `k ∈ [1, 2^(lf_depth-|j|)]` (stored at index `k-1`).
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientPyramid {
    pub(crate) alpha: f64,
    pub(crate) hf_depth: usize,
    pub(crate) lf_depth: usize,
    pub(crate) hf: Vec<Vec<f64>>,
    pub(crate) lf: Vec<Vec<f64>>,
    pub(crate) z1: f64,
    pub(crate) mode: CoefficientMode,
    pub(crate) seed: u64,
    pub(crate) hf_resolution: usize,
    pub(crate) lf_resolution: usize,
}

impl CoefficientPyramid {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn hf_depth(&self) -> usize {
        self.hf_depth
    }

    pub fn lf_depth(&self) -> usize {
        self.lf_depth
    }

    pub fn mode(&self) -> CoefficientMode {
        self.mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Level of the positive-side Lévy grid (consistent mode).
    pub fn hf_resolution(&self) -> usize {
        self.hf_resolution
    }

    /// Depth whose reference points the negative-side Lévy path covers.
    pub fn lf_resolution(&self) -> usize {
        self.lf_resolution
    }

    /// `Z(1)`, the coefficient of the leading high-frequency term.
    pub fn z1(&self) -> f64 {
        self.z1
    }

    /// `ζ_{j,k}` for `k ∈ [0, 2^j)`.
    pub fn hf_row(&self, j: usize) -> &[f64] {
        &self.hf[j]
    }

    /// `ζ_{j,-k}` for `k = 1, 2, …` (index `k - 1`).
    pub fn lf_row(&self, j: i32) -> &[f64] {
        &self.lf[lf_index(j, self.lf_depth)]
    }

    pub fn hf_rows(&self) -> &[Vec<f64>] {
        &self.hf
    }

    /// Low-frequency rows in order `j = 1 - lf_depth, …, lf_depth - 1`.
    pub fn lf_rows(&self) -> &[Vec<f64>] {
        &self.lf
    }

    /// Row indices `j` of the low-frequency part, in storage order.
    pub fn lf_row_indices(&self) -> impl Iterator<Item = i32> {
        lf_row_range(self.lf_depth)
    }

    pub fn coefficient_count(&self) -> usize {
        self.hf.iter().map(Vec::len).sum::<usize>() + self.lf.iter().map(Vec::len).sum::<usize>()
    }

    /// Wraps caller-supplied coefficient rows, laid out as in the struct
    /// docs. Depths are read off the row counts; the pyramid is labelled
    /// independent with seed 0.
    pub fn from_rows(alpha: f64, hf: Vec<Vec<f64>>, lf: Vec<Vec<f64>>, z1: f64) -> Result<Self> {
        if lf.len() % 2 == 0 && !lf.is_empty() {
            return Err(Error::Format(format!("odd number of low-frequency rows expected, found {}", lf.len())));
        }
        let hf_depth = hf.len();
        let lf_depth = lf.len().div_ceil(2);
        Self::from_parts(alpha, hf_depth, lf_depth, hf, lf, z1, CoefficientMode::Independent, 0, hf_depth, lf_depth)
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        alpha: f64,
        hf_depth: usize,
        lf_depth: usize,
        hf: Vec<Vec<f64>>,
        lf: Vec<Vec<f64>>,
        z1: f64,
        mode: CoefficientMode,
        seed: u64,
        hf_resolution: usize,
        lf_resolution: usize,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        if hf.len() != hf_depth {
            return Err(Error::Format(format!(
                "expected {hf_depth} high-frequency rows, found {}",
                hf.len()
            )));
        }
        for (j, row) in hf.iter().enumerate() {
            if row.len() != 1 << j {
                return Err(Error::Format(format!("high-frequency row {j} has length {}", row.len())));
            }
        }
        let expected_lf = if lf_depth == 0 { 0 } else { 2 * lf_depth - 1 };
        if lf.len() != expected_lf {
            return Err(Error::Format(format!(
                "expected {expected_lf} low-frequency rows, found {}",
                lf.len()
            )));
        }
        for (row, j) in lf.iter().zip(lf_row_range(lf_depth)) {
            if row.len() != lf_row_len(lf_depth, j) {
                return Err(Error::Format(format!("low-frequency row {j} has length {}", row.len())));
            }
        }
        Ok(Self {
            alpha,
            hf_depth,
            lf_depth,
            hf,
            lf,
            z1,
            mode,
            seed,
            hf_resolution,
            lf_resolution,
        })
    }
}

pub(crate) fn lf_row_range(depth: usize) -> impl Iterator<Item = i32> {
    let d = depth as i32;
    (1 - d)..d
}

pub(crate) fn lf_row_len(depth: usize, j: i32) -> usize {
    1 << (depth - j.unsigned_abs() as usize)
}

fn lf_index(j: i32, depth: usize) -> usize {
    (j + depth as i32 - 1) as usize
}

/// Running sums `λ` of each coefficient row.
///
/// High-frequency rows: `λ_{j,k} = Σ_{m=0}^{k} ζ_{j,m}`.
/// Low-frequency rows: `λ_{j,-k} = Σ_{m=1}^{k} ζ_{j,-m}`, stored at `k - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixSums {
    pub(crate) lf_depth: usize,
    pub(crate) hf: Vec<Vec<f64>>,
    pub(crate) lf: Vec<Vec<f64>>,
}

impl PrefixSums {
    pub fn hf_row(&self, j: usize) -> &[f64] {
        &self.hf[j]
    }

    pub fn lf_row(&self, j: i32) -> &[f64] {
        &self.lf[lf_index(j, self.lf_depth)]
    }
}

fn running_sum(row: &[f64]) -> Vec<f64> {
    row.iter()
        .scan(0.0, |acc, &z| {
            *acc += z;
            Some(*acc)
        })
        .collect()
}

pub fn prefix_sums(pyramid: &CoefficientPyramid) -> PrefixSums {
    PrefixSums {
        lf_depth: pyramid.lf_depth,
        hf: pyramid.hf.iter().map(|r| running_sum(r)).collect(),
        lf: pyramid.lf.iter().map(|r| running_sum(r)).collect(),
    }
}

/// `ζ_{j,k} = -2^{j/α} (Z(k/2^j) - 2 Z((k+½)/2^j) + Z((k+1)/2^j))`.
///
/// The three points must be stored in `grid`, which requires
/// `grid.level() ≥ j + 1`.
pub fn zeta_from_levy(grid: &LevyGrid, j: i32, k: i64) -> Result<f64> {
    let shift = grid.level() as i64 - i64::from(j) - 1;
    if shift < 0 {
        return Err(Error::Resolution(format!(
            "row {j} needs grid level ≥ {}, grid has level {}",
            j + 1,
            grid.level()
        )));
    }
    if shift > 60 {
        return Err(Error::Resolution(format!("row {j} is too coarse for level {}", grid.level())));
    }
    let unit = 1i64 << shift;
    let at = |half_steps: i64| {
        half_steps
            .checked_mul(unit)
            .and_then(|tick| grid.value_at_tick(tick))
            .ok_or_else(|| {
                Error::Resolution(format!(
                    "point {}·2^-{} of ζ({j},{k}) is not on the grid",
                    half_steps,
                    i64::from(j) + 1
                ))
            })
    };
    let left = at(2 * k)?;
    let mid = at(2 * k + 1)?;
    let right = at(2 * k + 2)?;
    let weight = (f64::from(j) / grid.alpha()).exp2();
    Ok(-weight * (left - 2.0 * mid + right))
}

/// Parameters of a coefficient pyramid.
///
/// `hf_resolution` / `lf_resolution` fix the Lévy paths independently of the
/// truncation depths: two consistent-mode pyramids with the same seed and
/// resolutions share every coefficient they both hold, whatever their
/// depths. They default to the depths.
#[derive(Debug, Clone, PartialEq)]
pub struct PyramidSpec {
    pub alpha: f64,
    pub hf_depth: usize,
    pub lf_depth: usize,
    pub mode: CoefficientMode,
    pub seed: u64,
    pub hf_resolution: Option<usize>,
    pub lf_resolution: Option<usize>,
    pub entry_budget: usize,
}

impl PyramidSpec {
    pub fn new(alpha: f64, hf_depth: usize, lf_depth: usize, mode: CoefficientMode, seed: u64) -> Self {
        Self {
            alpha,
            hf_depth,
            lf_depth,
            mode,
            seed,
            hf_resolution: None,
            lf_resolution: None,
            entry_budget: DEFAULT_ENTRY_BUDGET,
        }
    }

    pub fn with_resolutions(mut self, hf: usize, lf: usize) -> Self {
        self.hf_resolution = Some(hf);
        self.lf_resolution = Some(lf);
        self
    }

    pub fn with_entry_budget(mut self, budget: usize) -> Self {
        self.entry_budget = budget;
        self
    }

    fn resolutions(&self) -> Result<(usize, usize)> {
        let hf = self.hf_resolution.unwrap_or(self.hf_depth);
        let lf = self.lf_resolution.unwrap_or(self.lf_depth);
        if hf < self.hf_depth || lf < self.lf_depth {
            return Err(Error::Parameter(format!(
                "path resolutions ({hf}, {lf}) must not be below the depths ({}, {})",
                self.hf_depth, self.lf_depth
            )));
        }
        if hf > 40 || lf > 30 {
            return Err(Error::Parameter(format!("path resolutions ({hf}, {lf}) are unsupported")));
        }
        Ok((hf, lf))
    }

    pub fn generate(&self) -> Result<CoefficientPyramid> {
        check_alpha(self.alpha)?;
        let (hf_res, lf_res) = self.resolutions()?;
        let (hf, lf, z1) = match self.mode {
            CoefficientMode::Consistent => self.consistent(hf_res, lf_res)?,
            CoefficientMode::Independent => self.independent()?,
        };
        Ok(CoefficientPyramid {
            alpha: self.alpha,
            hf_depth: self.hf_depth,
            lf_depth: self.lf_depth,
            hf,
            lf,
            z1,
            mode: self.mode,
            seed: self.seed,
            hf_resolution: hf_res,
            lf_resolution: lf_res,
        })
    }

    fn consistent(&self, hf_res: usize, lf_res: usize) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>, f64)> {
        let needed = (1usize << hf_res) + 1;
        if needed > self.entry_budget {
            return Err(Error::Budget {
                what: "positive Lévy grid",
                needed,
                budget: self.entry_budget,
            });
        }
        let mut rng = rng_stream(self.seed, streams::POSITIVE_PATH);
        let positive = build_levy_grid(self.alpha, 0.0, 1.0, hf_res as u32, &mut rng)?;
        let z1 = positive.value_at(1.0).expect("grid spans [0, 1]");
        let hf = (0..self.hf_depth)
            .into_par_iter()
            .map(|j| {
                (0..1i64 << j)
                    .map(|k| zeta_from_levy(&positive, j as i32, k))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;

        let lf = if self.lf_depth == 0 {
            Vec::new()
        } else {
            let negative = self.negative_path(lf_res)?;
            lf_row_range(self.lf_depth)
                .collect::<Vec<_>>()
                .into_par_iter()
                .map(|j| {
                    (1..=lf_row_len(self.lf_depth, j) as i64)
                        .map(|k| zeta_from_levy(&negative, j, -k))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?
        };
        Ok((hf, lf, z1))
    }

    /// The negative half-line path holds `Z` at exactly the points referenced
    /// by a depth-`res` low-frequency pyramid: `(-k + s/2)/2^j` for
    /// `|j| < res`, `1 ≤ k ≤ 2^(res-|j|)`, `s ∈ {0,1,2}`. These lie in
    /// `[-2^res, 0]` on the lattice of step `2^-res`.
    fn negative_path(&self, res: usize) -> Result<LevyGrid> {
        let coefficient_count = 3 * (1usize << res) - 4;
        let bound = 3 * coefficient_count + 1;
        if bound > self.entry_budget {
            return Err(Error::Budget {
                what: "negative Lévy path",
                needed: bound,
                budget: self.entry_budget,
            });
        }
        let mut ticks = Vec::with_capacity(bound);
        for j in lf_row_range(res) {
            let unit = 1i64 << (res as i64 - i64::from(j) - 1);
            for k in 1..=lf_row_len(res, j) as i64 {
                for s in 0..3 {
                    ticks.push((-2 * k + s) * unit);
                }
            }
        }
        let mut rng = rng_stream(self.seed, streams::NEGATIVE_PATH);
        build_levy_path(self.alpha, res as u32, ticks, &mut rng)
    }

    fn independent(&self) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>, f64)> {
        let unit = StableLaw::standard(self.alpha)?;
        let draw_row = |stream: u64, len: usize| {
            let mut rng = rng_stream(self.seed, stream);
            let mut row = vec![0.0; len];
            unit.fill(&mut rng, &mut row);
            row
        };
        let hf = (0..self.hf_depth)
            .into_par_iter()
            .map(|j| draw_row(streams::hf_row(j), 1 << j))
            .collect();
        let lf = lf_row_range(self.lf_depth)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|j| draw_row(streams::lf_row(j), lf_row_len(self.lf_depth, j)))
            .collect();
        let z1 = unit.sample(&mut rng_stream(self.seed, streams::Z1));
        Ok((hf, lf, z1))
    }
}

/// Builds the coefficient pyramid for high-frequency depth `hf_depth ≥ 1` and
/// low-frequency depth `lf_depth ≥ 2`, with default path resolutions and
/// entry budget.
pub fn generate_coefficients(
    alpha: f64,
    hf_depth: usize,
    lf_depth: usize,
    mode: CoefficientMode,
    seed: u64,
) -> Result<CoefficientPyramid> {
    if hf_depth < 1 || lf_depth < 2 {
        return Err(Error::Parameter(format!(
            "pyramid needs hf depth ≥ 1 and lf depth ≥ 2, got ({hf_depth}, {lf_depth})"
        )));
    }
    PyramidSpec::new(alpha, hf_depth, lf_depth, mode, seed).generate()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_pyramid_shape() {
        let pyr = generate_coefficients(1.5, 1, 2, CoefficientMode::Consistent, 3).unwrap();
        assert_eq!(pyr.hf_rows().len(), 1);
        assert_eq!(pyr.hf_row(0).len(), 1);
        let lens: Vec<usize> = pyr.lf_rows().iter().map(Vec::len).collect();
        assert_eq!(lens, vec![2, 4, 2]);
        assert_eq!(pyr.lf_row_indices().collect::<Vec<_>>(), vec![-1, 0, 1]);
    }

    #[test]
    fn row_cardinalities_for_all_depths() {
        for hf in 1..8 {
            for lf in 2..7 {
                for mode in [CoefficientMode::Consistent, CoefficientMode::Independent] {
                    let pyr = generate_coefficients(1.3, hf, lf, mode, 1).unwrap();
                    for j in 0..hf {
                        assert_eq!(pyr.hf_row(j).len(), 1 << j);
                    }
                    for j in pyr.lf_row_indices() {
                        assert_eq!(pyr.lf_row(j).len(), 1 << (lf - j.unsigned_abs() as usize));
                    }
                }
            }
        }
    }

    #[test]
    fn depth_preconditions() {
        assert!(generate_coefficients(1.5, 0, 2, CoefficientMode::Consistent, 0).is_err());
        assert!(generate_coefficients(1.5, 1, 1, CoefficientMode::Consistent, 0).is_err());
        assert!(generate_coefficients(2.5, 1, 2, CoefficientMode::Consistent, 0).is_err());
    }

    #[test]
    fn budget_guard_rejects_large_paths() {
        let spec = PyramidSpec::new(1.5, 4, 8, CoefficientMode::Consistent, 0).with_entry_budget(1000);
        assert!(matches!(spec.generate(), Err(Error::Budget { .. })));
        let spec = PyramidSpec::new(1.5, 12, 2, CoefficientMode::Consistent, 0).with_entry_budget(1000);
        assert!(matches!(
            spec.generate(),
            Err(Error::Budget { what: "positive Lévy grid", .. })
        ));
    }

    #[test]
    fn identical_seeds_give_identical_pyramids() {
        for mode in [CoefficientMode::Consistent, CoefficientMode::Independent] {
            let a = generate_coefficients(1.5, 6, 4, mode, 77).unwrap();
            let b = generate_coefficients(1.5, 6, 4, mode, 77).unwrap();
            let c = generate_coefficients(1.5, 6, 4, mode, 78).unwrap();
            assert_eq!(a, b);
            assert_ne!(a.hf_row(5), c.hf_row(5));
        }
    }

    #[test]
    fn shared_resolution_shares_coefficients() {
        let deep = PyramidSpec::new(1.5, 7, 5, CoefficientMode::Consistent, 9)
            .with_resolutions(8, 6)
            .generate()
            .unwrap();
        let shallow = PyramidSpec::new(1.5, 4, 3, CoefficientMode::Consistent, 9)
            .with_resolutions(8, 6)
            .generate()
            .unwrap();
        assert_eq!(deep.z1().to_bits(), shallow.z1().to_bits());
        for j in 0..4 {
            assert_eq!(deep.hf_row(j), shallow.hf_row(j));
        }
        for j in shallow.lf_row_indices() {
            let n = shallow.lf_row(j).len();
            assert_eq!(&deep.lf_row(j)[..n], shallow.lf_row(j));
        }
    }

    #[test]
    fn independent_rows_do_not_depend_on_depth() {
        let deep = generate_coefficients(1.5, 7, 5, CoefficientMode::Independent, 9).unwrap();
        let shallow = generate_coefficients(1.5, 3, 3, CoefficientMode::Independent, 9).unwrap();
        assert_eq!(deep.z1().to_bits(), shallow.z1().to_bits());
        assert_eq!(deep.hf_row(2), shallow.hf_row(2));
        assert_eq!(&deep.lf_row(-1)[..4], shallow.lf_row(-1));
    }

    #[test]
    fn prefix_sum_conventions() {
        let pyr = generate_coefficients(1.5, 5, 4, CoefficientMode::Consistent, 2).unwrap();
        let pre = prefix_sums(&pyr);
        for j in 0..5 {
            assert_eq!(pre.hf_row(j)[0], pyr.hf_row(j)[0]);
        }
        for j in pyr.lf_row_indices() {
            assert_eq!(pre.lf_row(j)[0], pyr.lf_row(j)[0]);
            let total: f64 = pyr.lf_row(j).iter().sum();
            let last = *pre.lf_row(j).last().unwrap();
            assert!((total - last).abs() <= 1e-12 * (1.0 + total.abs()));
        }
        assert_eq!(running_sum(&[1.0; 6]), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn zeta_needs_fine_enough_grid() {
        let mut rng = rng_stream(0, 0);
        let grid = build_levy_grid(1.5, 0.0, 1.0, 3, &mut rng).unwrap();
        assert!(zeta_from_levy(&grid, 2, 0).is_ok());
        assert!(matches!(zeta_from_levy(&grid, 3, 0), Err(Error::Resolution(_))));
        assert!(matches!(zeta_from_levy(&grid, 2, 4), Err(Error::Resolution(_))));
    }
}
