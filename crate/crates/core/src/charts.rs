//! Coordinate charts used around the regularized two-fold.
//!
//! Every chart carries four coordinates. `Ebar1` `(x, ŷ, z, ε)` with
//! `y = ε ŷ` is the hub; all transforms go through it.
//!
//! | chart    | coordinates          | relation to the hub                      |
//! |----------|----------------------|------------------------------------------|
//! | `Ybar1`  | `(x, y, z, ε̂)`       | `ŷ = 1/ε̂`, `ε = y ε̂`, needs `y, ε̂ > 0`    |
//! | `YbarM1` | `(x, y, z, ε̂)`       | `ŷ = −1/ε̂`, `ε = −y ε̂`, needs `y < 0 < ε̂` |
//! | `K1`     | `(r₁, ε₁, z₁, ŷ)`    | `x = −r₁`, `z = r₁ z₁`, `ε = r₁² ε₁`      |
//! | `K2`     | `(x₂, z₂, r₂, ŷ)`    | `x = r₂ x₂`, `z = r₂ z₂`, `ε = r₂²`       |
//! | `K3`     | `(r₃, ε₃, z₃, ŷ)`    | `x = r₃`, `z = r₃ z₃`, `ε = r₃² ε₃`       |

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chart {
    Ebar1,
    Ybar1,
    YbarM1,
    K1,
    K2,
    K3,
}

impl Chart {
    pub const ALL: [Chart; 6] = [Chart::Ebar1, Chart::Ybar1, Chart::YbarM1, Chart::K1, Chart::K2, Chart::K3];
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChartError {
    #[error("coordinates {coords:?} are outside the domain of chart {chart:?}")]
    OutOfDomain { chart: Chart, coords: [f64; 4] },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub chart: Chart,
    pub coords: [f64; 4],
}

impl ChartPoint {
    pub fn new(chart: Chart, coords: [f64; 4]) -> Self {
        Self { chart, coords }
    }

    /// Hub coordinates `(x, ŷ, z, ε)`.
    pub fn to_hub(&self) -> Result<[f64; 4], ChartError> {
        let c = self.coords;
        let bad = || ChartError::OutOfDomain { chart: self.chart, coords: c };
        let hub = match self.chart {
            Chart::Ebar1 => {
                if !(c[3] > 0.0) {
                    return Err(bad());
                }
                c
            }
            Chart::Ybar1 => {
                let [x, y, z, eh] = c;
                if !(y > 0.0 && eh > 0.0) {
                    return Err(bad());
                }
                [x, 1.0 / eh, z, y * eh]
            }
            Chart::YbarM1 => {
                let [x, y, z, eh] = c;
                if !(y < 0.0 && eh > 0.0) {
                    return Err(bad());
                }
                [x, -1.0 / eh, z, -y * eh]
            }
            Chart::K1 => {
                let [r1, e1, z1, yh] = c;
                if !(r1 > 0.0 && e1 > 0.0) {
                    return Err(bad());
                }
                [-r1, yh, r1 * z1, r1 * r1 * e1]
            }
            Chart::K2 => {
                let [x2, z2, r2, yh] = c;
                if !(r2 > 0.0) {
                    return Err(bad());
                }
                [r2 * x2, yh, r2 * z2, r2 * r2]
            }
            Chart::K3 => {
                let [r3, e3, z3, yh] = c;
                if !(r3 > 0.0 && e3 > 0.0) {
                    return Err(bad());
                }
                [r3, yh, r3 * z3, r3 * r3 * e3]
            }
        };
        Ok(hub)
    }

    pub fn from_hub(chart: Chart, hub: [f64; 4]) -> Result<Self, ChartError> {
        let [x, yh, z, eps] = hub;
        let bad = || ChartError::OutOfDomain { chart, coords: hub };
        if !(eps > 0.0) {
            return Err(bad());
        }
        let coords = match chart {
            Chart::Ebar1 => hub,
            Chart::Ybar1 => {
                if !(yh > 0.0) {
                    return Err(bad());
                }
                [x, eps * yh, z, 1.0 / yh]
            }
            Chart::YbarM1 => {
                if !(yh < 0.0) {
                    return Err(bad());
                }
                [x, eps * yh, z, -1.0 / yh]
            }
            Chart::K1 => {
                if !(x < 0.0) {
                    return Err(bad());
                }
                let r1 = -x;
                [r1, eps / (r1 * r1), z / r1, yh]
            }
            Chart::K2 => {
                let r2 = eps.sqrt();
                [x / r2, z / r2, r2, yh]
            }
            Chart::K3 => {
                if !(x > 0.0) {
                    return Err(bad());
                }
                [x, eps / (x * x), z / x, yh]
            }
        };
        Ok(Self { chart, coords })
    }

    /// Cartesian `(x, y, z)` together with `ε`.
    pub fn to_cartesian(&self) -> Result<([f64; 3], f64), ChartError> {
        let [x, yh, z, eps] = self.to_hub()?;
        Ok(([x, eps * yh, z], eps))
    }
}

pub fn chart_transform(p: &ChartPoint, target: Chart) -> Result<ChartPoint, ChartError> {
    if p.chart == target {
        p.to_hub()?;
        return Ok(*p);
    }
    ChartPoint::from_hub(target, p.to_hub()?)
}

/// Random hub point with `|x| ∈ [0.05, 3)`, `|ŷ| ∈ [0.05, 20)`, `z ∈ [−3, 3)` and
/// `log₁₀ ε ∈ [−6, −1)`; signs of `x` and `ŷ` are random.
pub fn sample_hub<R: rand::Rng + ?Sized>(rng: &mut R) -> [f64; 4] {
    let sx = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let sy = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    [
        sx * rng.random_range(0.05..3.0),
        sy * rng.random_range(0.05..20.0),
        rng.random_range(-3.0..3.0),
        10f64.powf(rng.random_range(-6.0..-1.0)),
    ]
}

/// Largest relative error of `a → b → a` over all ordered pairs of charts whose
/// domains contain `hub`. Errors are relative to `max(|coord|, 1)`.
pub fn round_trip_error(hub: [f64; 4]) -> f64 {
    let mut worst = 0.0f64;
    for a in Chart::ALL {
        let Ok(pa) = ChartPoint::from_hub(a, hub) else { continue };
        for b in Chart::ALL {
            let Ok(pb) = chart_transform(&pa, b) else { continue };
            let back = chart_transform(&pb, a).expect("inverse of a valid transform");
            for i in 0..4 {
                worst = worst.max((back.coords[i] - pa.coords[i]).abs() / pa.coords[i].abs().max(1.0));
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hub_to_k1_example() {
        let p = ChartPoint::new(Chart::Ebar1, [-1.0, 0.3, -0.5, 1e-4]);
        let k1 = chart_transform(&p, Chart::K1).unwrap();
        assert_eq!(k1.coords, [1.0, 1e-4, -0.5, 0.3]);
    }

    #[test]
    fn k1_to_k2_entry_example() {
        let p = ChartPoint::new(Chart::K1, [0.37, 1e-4, -2.0, 0.1]);
        let k2 = chart_transform(&p, Chart::K2).unwrap();
        assert_relative_eq!(k2.coords[0], -100.0, epsilon = 1e-10);
    }

    #[test]
    fn yhat_round_trip() {
        let p = ChartPoint::new(Chart::Ebar1, [0.2, 4.0, 1.0, 1e-3]);
        let y = chart_transform(&p, Chart::Ybar1).unwrap();
        assert_eq!(y.coords[3], 0.25);
        let back = chart_transform(&y, Chart::Ebar1).unwrap();
        assert_relative_eq!(back.coords[1], 4.0, epsilon = 1e-15);
    }

    #[test]
    fn domain_errors() {
        let p = ChartPoint::new(Chart::Ebar1, [1.0, 0.3, -0.5, 1e-4]);
        assert!(chart_transform(&p, Chart::K1).is_err());
        assert!(chart_transform(&p, Chart::YbarM1).is_err());
        let bad = ChartPoint::new(Chart::K2, [1.0, 1.0, -1.0, 0.0]);
        assert!(chart_transform(&bad, Chart::Ebar1).is_err());
    }

    fn random_hub(rng: &mut ChaCha8Rng, sx: f64, sy: f64) -> [f64; 4] {
        [
            sx * rng.random_range(0.05..3.0),
            sy * rng.random_range(0.05..20.0),
            rng.random_range(-3.0..3.0),
            10f64.powf(rng.random_range(-6.0..-1.0)),
        ]
    }

    #[test]
    fn pairwise_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for a in Chart::ALL {
            for b in Chart::ALL {
                for _ in 0..1000 {
                    // sample in the overlap of a and b
                    let needs_neg_x = [a, b].contains(&Chart::K1);
                    let needs_pos_x = [a, b].contains(&Chart::K3);
                    let needs_neg_y = [a, b].contains(&Chart::YbarM1);
                    let needs_pos_y = [a, b].contains(&Chart::Ybar1);
                    if (needs_neg_x && needs_pos_x) || (needs_neg_y && needs_pos_y) {
                        continue;
                    }
                    let sx = if needs_neg_x { -1.0 } else if needs_pos_x { 1.0 } else { rng.random_range(-1.0..1.0f64).signum() };
                    let sy = if needs_neg_y { -1.0 } else if needs_pos_y { 1.0 } else { rng.random_range(-1.0..1.0f64).signum() };
                    let hub = random_hub(&mut rng, sx, sy);
                    let pa = ChartPoint::from_hub(a, hub).unwrap();
                    let pb = chart_transform(&pa, b).unwrap();
                    let back = chart_transform(&pb, a).unwrap();
                    for i in 0..4 {
                        let scale = pa.coords[i].abs().max(1.0);
                        assert!((back.coords[i] - pa.coords[i]).abs() <= 1e-12 * scale, "{a:?}->{b:?}: {pa:?} vs {back:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn sampled_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            assert!(round_trip_error(sample_hub(&mut rng)) <= 1e-12);
        }
    }

    #[test]
    fn cycle_is_identity() {
        let hub = [-0.4, 2.5, -1.1, 1e-4];
        let mut p = ChartPoint::from_hub(Chart::Ebar1, hub).unwrap();
        for c in [Chart::Ybar1, Chart::K1, Chart::K2, Chart::Ebar1] {
            p = chart_transform(&p, c).unwrap();
        }
        for (got, want) in p.coords.iter().zip(hub) {
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
        let (xyz, eps) = p.to_cartesian().unwrap();
        assert_relative_eq!(xyz[1], 2.5e-4, epsilon = 1e-18);
        assert_eq!(eps, 1e-4);
    }
}
