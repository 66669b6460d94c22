//! Input-space samplers: endpoint-inclusive grids, seeded uniform random
//! draws and Halton low-discrepancy points.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constraints::BoxSet;
use crate::error::{check_dim, NmpcError, Result};
use crate::plant::InputVec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerScheme {
    Grid,
    Random,
    Halton,
}

/// Power-law warp that concentrates samples around `anchor`.
///
/// Along each coordinate the normalized distance `s ∈ [0, 1]` to the anchor,
/// measured toward the nearer box face on that side, becomes `s^exponent`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityWarp {
    pub anchor: Vec<f64>,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub scheme: SamplerScheme,
    pub seed: u64,
    /// Leading Halton points to discard.
    pub skip: u64,
    pub warp: Option<DensityWarp>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            scheme: SamplerScheme::Halton,
            seed: 0,
            skip: 0,
            warp: None,
        }
    }
}

impl SamplerConfig {
    pub fn new(scheme: SamplerScheme) -> Self {
        SamplerConfig {
            scheme,
            ..SamplerConfig::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// A sampler plus the number of samples it has emitted.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerState {
    config: SamplerConfig,
    counter: u64,
}

impl SamplerState {
    pub fn new(config: SamplerConfig) -> Self {
        SamplerState { config, counter: 0 }
    }

    /// Resumes a stream at an arbitrary position.
    pub fn at(config: SamplerConfig, counter: u64) -> Self {
        SamplerState { config, counter }
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }
}

/// Base-`base` radical inverse (van der Corput) of `index`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    debug_assert!(base >= 2);
    let inv_base = 1.0 / base as f64;
    let mut scale = inv_base;
    let mut value = 0.0;
    while index > 0 {
        value += (index % base) as f64 * scale;
        index /= base;
        scale *= inv_base;
    }
    value
}

/// The first `count` primes.
pub fn first_primes(count: usize) -> Vec<u64> {
    let mut primes: Vec<u64> = Vec::with_capacity(count);
    let mut candidate = 2u64;
    while primes.len() < count {
        if primes.iter().take_while(|&&p| p * p <= candidate).all(|&p| !candidate.is_multiple_of(p)) {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
}

/// Point `index` (1-based) of the Halton sequence in `[0, 1)^dim`.
pub fn halton_point(index: u64, dim: usize) -> Vec<f64> {
    first_primes(dim).into_iter().map(|b| radical_inverse(index, b)).collect()
}

/// Draws `count` samples from `bounds`, advancing the sampler by `count`.
pub fn draw_samples(state: &mut SamplerState, bounds: &BoxSet, count: usize) -> Result<Vec<InputVec>> {
    if let Some(coordinate) = bounds.first_unbounded() {
        return Err(NmpcError::UnboundedBox { coordinate });
    }
    if let Some(w) = &state.config.warp {
        check_dim("warp anchor", bounds.dim(), w.anchor.len())?;
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    let m = bounds.dim();
    let unit: Vec<Vec<f64>> = match state.config.scheme {
        SamplerScheme::Grid => grid_unit_points(m, count),
        SamplerScheme::Halton => {
            let primes = first_primes(m);
            let start = state.config.skip + state.counter + 1;
            (0..count as u64)
                .map(|q| primes.iter().map(|&b| radical_inverse(start + q, b)).collect())
                .collect()
        }
        SamplerScheme::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(state.config.seed);
            // each f64 consumes two 32-bit words of the keystream
            rng.set_word_pos(2 * m as u128 * state.counter as u128);
            (0..count)
                .map(|_| (0..m).map(|_| rng.random::<f64>()).collect())
                .collect()
        }
    };
    state.counter += count as u64;
    Ok(unit
        .into_iter()
        .map(|t| map_to_box(&t, bounds, state.config.warp.as_ref()))
        .collect())
}

/// Row-major prefix of the smallest `g^m ≥ count` endpoint-inclusive grid,
/// in unit coordinates.
fn grid_unit_points(m: usize, count: usize) -> Vec<Vec<f64>> {
    let mut per_axis = 1usize;
    while per_axis.checked_pow(m as u32).is_some_and(|total| total < count) {
        per_axis += 1;
    }
    let level = |i: usize| -> f64 {
        if per_axis == 1 {
            0.5
        } else {
            i as f64 / (per_axis - 1) as f64
        }
    };
    (0..count)
        .map(|mut q| {
            let mut digits = vec![0usize; m];
            for d in digits.iter_mut().rev() {
                *d = q % per_axis;
                q /= per_axis;
            }
            digits.into_iter().map(level).collect()
        })
        .collect()
}

fn map_to_box(unit: &[f64], bounds: &BoxSet, warp: Option<&DensityWarp>) -> InputVec {
    let lower = bounds.lower();
    let upper = bounds.upper();
    DVector::from_iterator(
        unit.len(),
        unit.iter().enumerate().map(|(c, &t)| {
            let (lo, hi) = (lower[c], upper[c]);
            let v = if t >= 1.0 { hi } else { (lo + (hi - lo) * t).clamp(lo, hi) };
            match warp {
                Some(w) => warp_coordinate(v, w.anchor[c].clamp(lo, hi), lo, hi, w.exponent),
                None => v,
            }
        }),
    )
}

fn warp_coordinate(v: f64, anchor: f64, lo: f64, hi: f64, exponent: f64) -> f64 {
    let (span, sign) = if v >= anchor { (hi - anchor, 1.0) } else { (anchor - lo, -1.0) };
    if span <= 0.0 {
        return anchor;
    }
    let s = ((v - anchor).abs() / span).min(1.0);
    (anchor + sign * span * s.powf(exponent)).clamp(lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;
    use proptest::prelude::*;

    fn unit_square() -> BoxSet {
        BoxSet::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn van_der_corput_values() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert_eq!(radical_inverse(5, 2), 0.625);
        assert_eq!(radical_inverse(1, 3), 1.0 / 3.0);
    }

    #[test]
    fn primes() {
        assert_eq!(first_primes(6), vec![2, 3, 5, 7, 11, 13]);
    }

    #[test]
    fn grid_includes_endpoints() {
        let bounds = BoxSet::new(vec![-4.5], vec![4.5]).unwrap();
        let mut s = SamplerState::new(SamplerConfig::new(SamplerScheme::Grid));
        let pts = draw_samples(&mut s, &bounds, 3).unwrap();
        assert_eq!(pts, vec![dvector![-4.5], dvector![0.0], dvector![4.5]]);
        assert_eq!(s.counter(), 3);
    }

    #[test]
    fn grid_in_two_dimensions_is_row_major() {
        let mut s = SamplerState::new(SamplerConfig::new(SamplerScheme::Grid));
        let pts = draw_samples(&mut s, &unit_square(), 5).unwrap();
        // 3x3 grid truncated to five points
        assert_eq!(
            pts,
            vec![
                dvector![0.0, 0.0],
                dvector![0.0, 0.5],
                dvector![0.0, 1.0],
                dvector![0.5, 0.0],
                dvector![0.5, 0.5]
            ]
        );
    }

    #[test]
    fn halton_first_point() {
        let mut s = SamplerState::new(SamplerConfig::new(SamplerScheme::Halton));
        let pts = draw_samples(&mut s, &unit_square(), 1).unwrap();
        assert_eq!(pts, vec![dvector![0.5, 1.0 / 3.0]]);
    }

    #[test]
    fn halton_stream_continues_across_calls() {
        let mut a = SamplerState::new(SamplerConfig::new(SamplerScheme::Halton));
        let mut whole = draw_samples(&mut a, &unit_square(), 7).unwrap();
        let mut b = SamplerState::new(SamplerConfig::new(SamplerScheme::Halton));
        let mut parts = draw_samples(&mut b, &unit_square(), 3).unwrap();
        parts.extend(draw_samples(&mut b, &unit_square(), 4).unwrap());
        assert_eq!(whole, parts);
        let mut skipped = SamplerState::new(SamplerConfig {
            skip: 3,
            ..SamplerConfig::new(SamplerScheme::Halton)
        });
        let tail = draw_samples(&mut skipped, &unit_square(), 4).unwrap();
        assert_eq!(tail, whole.split_off(3));
    }

    #[test]
    fn halton_dyadic_coverage() {
        for k in 1..=10u32 {
            let n = 1u64 << k;
            let mut seen = vec![false; n as usize];
            for i in 1..=n {
                let cell = (radical_inverse(i, 2) * n as f64) as usize;
                assert!(!seen[cell], "cell {cell} hit twice for k={k}");
                seen[cell] = true;
            }
        }
    }

    #[test]
    fn random_is_reproducible_from_seed_and_counter() {
        let cfg = SamplerConfig::new(SamplerScheme::Random).with_seed(42);
        let mut a = SamplerState::new(cfg.clone());
        let first = draw_samples(&mut a, &unit_square(), 5).unwrap();
        let second = draw_samples(&mut a, &unit_square(), 5).unwrap();
        let mut resumed = SamplerState::at(cfg.clone(), 5);
        assert_eq!(draw_samples(&mut resumed, &unit_square(), 5).unwrap(), second);
        let mut fresh = SamplerState::new(cfg);
        assert_eq!(draw_samples(&mut fresh, &unit_square(), 5).unwrap(), first);
        assert_ne!(first, second);
    }

    #[test]
    fn unbounded_box_is_rejected() {
        let bounds = BoxSet::unbounded(1);
        let mut s = SamplerState::new(SamplerConfig::default());
        assert_eq!(
            draw_samples(&mut s, &bounds, 2).unwrap_err(),
            NmpcError::UnboundedBox { coordinate: 0 }
        );
    }

    #[test]
    fn warp_pulls_samples_toward_anchor() {
        let bounds = BoxSet::new(vec![-1.0], vec![1.0]).unwrap();
        let warp = DensityWarp {
            anchor: vec![0.0],
            exponent: 2.0,
        };
        let mut plain = SamplerState::new(SamplerConfig::new(SamplerScheme::Grid));
        let mut warped = SamplerState::new(SamplerConfig {
            warp: Some(warp),
            ..SamplerConfig::new(SamplerScheme::Grid)
        });
        let a = draw_samples(&mut plain, &bounds, 5).unwrap();
        let b = draw_samples(&mut warped, &bounds, 5).unwrap();
        assert_eq!(b, vec![dvector![-1.0], dvector![-0.25], dvector![0.0], dvector![0.25], dvector![1.0]]);
        assert!(a.iter().zip(&b).all(|(x, y)| y[0].abs() <= x[0].abs()));
    }

    fn scheme() -> impl Strategy<Value = SamplerScheme> {
        prop_oneof![
            Just(SamplerScheme::Grid),
            Just(SamplerScheme::Random),
            Just(SamplerScheme::Halton)
        ]
    }

    proptest! {
        #[test]
        fn samples_stay_inside_the_box(
            scheme in scheme(),
            seed in any::<u64>(),
            counter in 0u64..10_000,
            lo in -100.0f64..100.0,
            width in 0.0f64..50.0,
            lo2 in -1.0f64..0.0,
            count in 0usize..60,
            warp in any::<bool>(),
        ) {
            let bounds = BoxSet::new(vec![lo, lo2], vec![lo + width, 1.0]).unwrap();
            let cfg = SamplerConfig {
                scheme,
                seed,
                skip: 0,
                warp: warp.then(|| DensityWarp { anchor: vec![lo + 0.3 * width, 0.0], exponent: 3.0 }),
            };
            let mut s = SamplerState::at(cfg.clone(), counter);
            let pts = draw_samples(&mut s, &bounds, count).unwrap();
            prop_assert_eq!(pts.len(), count);
            prop_assert_eq!(s.counter(), counter + count as u64);
            for p in &pts {
                prop_assert!(bounds.contains(p));
            }
            let mut again = SamplerState::at(cfg, counter);
            prop_assert_eq!(draw_samples(&mut again, &bounds, count).unwrap(), pts);
        }

        #[test]
        fn grid_spacing_is_uniform(lo in -10.0f64..10.0, width in 0.1f64..20.0, count in 2usize..50) {
            let bounds = BoxSet::new(vec![lo], vec![lo + width]).unwrap();
            let mut s = SamplerState::new(SamplerConfig::new(SamplerScheme::Grid));
            let pts = draw_samples(&mut s, &bounds, count).unwrap();
            let h = (bounds.upper()[0] - lo) / (count - 1) as f64;
            prop_assert_eq!(pts[0][0], lo);
            prop_assert_eq!(pts[count - 1][0], bounds.upper()[0]);
            for w in pts.windows(2) {
                prop_assert!(((w[1][0] - w[0][0]) - h).abs() <= 1e-12 * (1.0 + lo.abs() + width));
            }
        }
    }
}
