use rand::Rng;

use super::{check_alpha, StableLaw};
use crate::error::{Error, Result};

/// Largest supported grid level; ticks are stored as `i64` multiples of
/// `2^-level`.
const MAX_LEVEL: u32 = 52;

#[derive(Debug, Clone, PartialEq)]
enum Ticks {
    /// Every multiple of the step between `first` and `first + len - 1`.
    Uniform { first: i64 },
    /// A sorted, duplicate-free subset of the dyadic lattice.
    Sparse(Vec<i64>),
}

/// Values of a symmetric α-stable Lévy process `Z` at points of the dyadic
/// lattice `2^-level · ℤ`, anchored at `Z(0) = 0`.
///
/// A grid is either uniform (every lattice point in `[t_min, t_max]`) or
/// sparse (only the points a caller asked for). Both carry the exact joint
/// law of `Z` at the stored points.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyGrid {
    alpha: f64,
    level: u32,
    ticks: Ticks,
    values: Vec<f64>,
}

impl LevyGrid {
    /// A uniform grid from given values at `t_min + m·2^-level`, for
    /// manufactured paths. The value at `t = 0` must be exactly 0.
    pub fn from_values(alpha: f64, t_min: f64, level: u32, values: Vec<f64>) -> Result<Self> {
        check_alpha(alpha)?;
        check_level(level)?;
        let first = to_tick(t_min, level)
            .ok_or_else(|| Error::Parameter(format!("t_min = {t_min} is not a multiple of 2^-{level}")))?;
        let origin = usize::try_from(-first)
            .ok()
            .filter(|&i| i < values.len())
            .ok_or_else(|| Error::Parameter("grid values must cover t = 0".into()))?;
        if values[origin] != 0.0 {
            return Err(Error::Parameter(format!("value at t = 0 must be 0, got {}", values[origin])));
        }
        Ok(Self {
            alpha,
            level,
            ticks: Ticks::Uniform { first },
            values,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Lattice step `2^-level`.
    pub fn step(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.ticks, Ticks::Uniform { .. })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn first_tick(&self) -> i64 {
        match &self.ticks {
            Ticks::Uniform { first } => *first,
            Ticks::Sparse(ticks) => ticks[0],
        }
    }

    fn last_tick(&self) -> i64 {
        match &self.ticks {
            Ticks::Uniform { first } => first + self.values.len() as i64 - 1,
            Ticks::Sparse(ticks) => *ticks.last().expect("grid holds the origin"),
        }
    }

    pub fn t_min(&self) -> f64 {
        self.first_tick() as f64 * self.step()
    }

    pub fn t_max(&self) -> f64 {
        self.last_tick() as f64 * self.step()
    }

    /// Lattice index of `t`, if `t` is an exact multiple of the step.
    pub fn tick_of(&self, t: f64) -> Option<i64> {
        to_tick(t, self.level)
    }

    /// `Z` at lattice point `tick · 2^-level`, if stored.
    pub fn value_at_tick(&self, tick: i64) -> Option<f64> {
        let idx = match &self.ticks {
            Ticks::Uniform { first } => {
                let idx = tick.checked_sub(*first)?;
                if idx < 0 {
                    return None;
                }
                idx as usize
            }
            Ticks::Sparse(ticks) => ticks.binary_search(&tick).ok()?,
        };
        self.values.get(idx).copied()
    }

    /// `Z(t)`, if `t` is a stored lattice point.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        self.value_at_tick(self.tick_of(t)?)
    }

    /// Increments between consecutive stored points, in increasing `t`.
    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

fn to_tick(t: f64, level: u32) -> Option<i64> {
    if !t.is_finite() {
        return None;
    }
    let scaled = t * (level as f64).exp2();
    if scaled.fract() != 0.0 || scaled.abs() > (1u64 << 62) as f64 {
        return None;
    }
    Some(scaled as i64)
}

fn check_level(level: u32) -> Result<()> {
    if level > MAX_LEVEL {
        return Err(Error::Parameter(format!(
            "grid level {level} exceeds the supported maximum {MAX_LEVEL}"
        )));
    }
    Ok(())
}

/// Samples `Z` on every lattice point of `[t_min, t_max]` at step
/// `2^-level`. Increments are i.i.d. SαS with scale `(2^-level)^(1/α)`,
/// accumulated outward from the origin so that `Z(0) = 0` exactly.
///
/// Draw order is the positive side (increasing `t`) followed by the negative
/// side (decreasing `t`).
pub fn build_levy_grid<R: Rng + ?Sized>(
    alpha: f64,
    t_min: f64,
    t_max: f64,
    level: u32,
    rng: &mut R,
) -> Result<LevyGrid> {
    check_alpha(alpha)?;
    check_level(level)?;
    if !(t_min <= 0.0 && t_max >= 0.0) {
        return Err(Error::Parameter(format!(
            "grid must contain the origin: got [{t_min}, {t_max}]"
        )));
    }
    let lo = to_tick(t_min, level).ok_or_else(|| {
        Error::Parameter(format!("t_min = {t_min} is not a multiple of 2^-{level}"))
    })?;
    let hi = to_tick(t_max, level).ok_or_else(|| {
        Error::Parameter(format!("t_max = {t_max} is not a multiple of 2^-{level}"))
    })?;
    let n_neg = (-lo) as usize;
    let n_pos = hi as usize;

    let step = (-(level as f64)).exp2();
    let law = StableLaw::new(alpha, step.powf(1.0 / alpha))?;
    let mut values = vec![0.0; n_neg + n_pos + 1];
    let origin = n_neg;
    for m in 1..=n_pos {
        values[origin + m] = values[origin + m - 1] + law.sample(rng);
    }
    for m in 1..=n_neg {
        values[origin - m] = values[origin - m + 1] - law.sample(rng);
    }
    Ok(LevyGrid {
        alpha,
        level,
        ticks: Ticks::Uniform { first: lo },
        values,
    })
}

/// Samples `Z` at an arbitrary set of lattice points (`ticks`, in units of
/// `2^-level`). The origin is always included. Each gap between neighbouring
/// points receives one SαS increment with scale `(gap · 2^-level)^(1/α)`, so
/// the result has the exact finite-dimensional law of the process.
///
/// Draw order matches [`build_levy_grid`]: positive side outward, then
/// negative side outward.
pub fn build_levy_path<R: Rng + ?Sized>(
    alpha: f64,
    level: u32,
    mut ticks: Vec<i64>,
    rng: &mut R,
) -> Result<LevyGrid> {
    check_alpha(alpha)?;
    check_level(level)?;
    ticks.push(0);
    ticks.sort_unstable();
    ticks.dedup();
    let origin = ticks.binary_search(&0).expect("origin inserted above");

    let step = (-(level as f64)).exp2();
    let unit = StableLaw::standard(alpha)?;
    let inv_alpha = 1.0 / alpha;
    let mut values = vec![0.0; ticks.len()];
    for i in origin + 1..ticks.len() {
        let gap = (ticks[i] - ticks[i - 1]) as f64 * step;
        values[i] = values[i - 1] + gap.powf(inv_alpha) * unit.sample(rng);
    }
    for i in (0..origin).rev() {
        let gap = (ticks[i + 1] - ticks[i]) as f64 * step;
        values[i] = values[i + 1] - gap.powf(inv_alpha) * unit.sample(rng);
    }
    let ticks = if ticks.last().map(|&l| l - ticks[0] + 1) == Some(ticks.len() as i64) {
        Ticks::Uniform { first: ticks[0] }
    } else {
        Ticks::Sparse(ticks)
    };
    Ok(LevyGrid {
        alpha,
        level,
        ticks,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stable::{rng_stream, streams};

    #[test]
    fn origin_is_exactly_zero() {
        let mut rng = rng_stream(11, streams::DRAWS);
        let grid = build_levy_grid(1.5, -2.0, 3.0, 3, &mut rng).unwrap();
        assert_eq!(grid.value_at(0.0), Some(0.0));
        assert_eq!(grid.len(), 5 * 8 + 1);
        assert_eq!(grid.t_min(), -2.0);
        assert_eq!(grid.t_max(), 3.0);
        assert!(grid.is_uniform());
    }

    #[test]
    fn degenerate_grid_has_single_zero_entry() {
        let mut rng = rng_stream(1, streams::DRAWS);
        let grid = build_levy_grid(1.5, 0.0, 0.0, 5, &mut rng).unwrap();
        assert_eq!(grid.values(), &[0.0]);
    }

    #[test]
    fn misaligned_endpoints_are_rejected() {
        let mut rng = rng_stream(1, streams::DRAWS);
        assert!(matches!(
            build_levy_grid(1.5, -0.3, 1.0, 2, &mut rng),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            build_levy_grid(1.5, 0.5, 1.0, 2, &mut rng),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            build_levy_grid(1.5, 0.0, 1.125, 2, &mut rng),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn lookups_outside_the_grid_fail() {
        let mut rng = rng_stream(1, streams::DRAWS);
        let grid = build_levy_grid(1.5, 0.0, 1.0, 2, &mut rng).unwrap();
        assert!(grid.value_at(0.25).is_some());
        assert!(grid.value_at(0.125).is_none());
        assert!(grid.value_at(-0.25).is_none());
        assert!(grid.value_at(1.25).is_none());
    }

    #[test]
    fn sparse_path_matches_requested_points() {
        let mut rng = rng_stream(5, streams::DRAWS);
        let path = build_levy_path(1.5, 4, vec![-32, -3, 5, 16, -3], &mut rng).unwrap();
        assert!(!path.is_uniform());
        assert_eq!(path.len(), 5);
        assert_eq!(path.value_at_tick(0), Some(0.0));
        assert!(path.value_at_tick(-3).is_some());
        assert!(path.value_at_tick(-4).is_none());
        assert_eq!(path.t_min(), -2.0);
        assert_eq!(path.t_max(), 1.0);
    }

    #[test]
    fn contiguous_sparse_request_becomes_uniform() {
        let mut rng = rng_stream(5, streams::DRAWS);
        let path = build_levy_path(1.5, 1, vec![-2, -1, 1, 2], &mut rng).unwrap();
        assert!(path.is_uniform());
        assert_eq!(path.value_at(0.0), Some(0.0));
    }

    #[test]
    fn dense_and_sparse_builders_agree_on_contiguous_ticks() {
        let a = build_levy_grid(1.7, -1.0, 1.0, 2, &mut rng_stream(9, 0)).unwrap();
        let b = build_levy_path(1.7, 2, (-4..=4).collect(), &mut rng_stream(9, 0)).unwrap();
        assert_eq!(a, b);
    }
}
