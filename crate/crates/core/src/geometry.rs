//! Channel cross-section `h(x)` and the cumulative resistance `H(x) = ∫_0^x ds / h(s)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{quad, roots, special::logmean};

/// Cross-sectional area profile on [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AreaProfile {
    Constant {
        area: f64,
    },
    /// `h(x) = base (1 - depth exp(-((x - center)/width)^2))`, a smooth neck.
    Bump {
        base: f64,
        depth: f64,
        center: f64,
        width: f64,
    },
    /// Piecewise-linear interpolation of samples; `x` must start at 0 and end at 1.
    Tabulated {
        x: Vec<f64>,
        h: Vec<f64>,
    },
}

impl Default for AreaProfile {
    fn default() -> Self {
        AreaProfile::Constant { area: 1.0 }
    }
}

impl AreaProfile {
    pub fn validate(&self) -> Result<()> {
        match self {
            AreaProfile::Constant { area } => {
                if !(*area > 0.0 && area.is_finite()) {
                    return Err(Error::InvalidModel(format!("area must be positive, got {area}")));
                }
            }
            AreaProfile::Bump { base, depth, width, center } => {
                if !(*base > 0.0) || !(0.0..1.0).contains(depth) || !(*width > 0.0) || !center.is_finite() {
                    return Err(Error::InvalidModel(
                        "bump needs base > 0, 0 <= depth < 1, width > 0".into(),
                    ));
                }
            }
            AreaProfile::Tabulated { x, h } => {
                if x.len() < 2 || x.len() != h.len() {
                    return Err(Error::InvalidModel("tabulated profile needs >= 2 matching samples".into()));
                }
                if x[0] != 0.0 || x[x.len() - 1] != 1.0 {
                    return Err(Error::InvalidModel("tabulated x must start at 0 and end at 1".into()));
                }
                if x.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidModel("tabulated x must be strictly increasing".into()));
                }
                if h.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    return Err(Error::InvalidModel("tabulated h must be positive".into()));
                }
            }
        }
        Ok(())
    }

    pub fn h(&self, x: f64) -> f64 {
        match self {
            AreaProfile::Constant { area } => *area,
            AreaProfile::Bump { base, depth, center, width } => {
                let s = (x - center) / width;
                base * (1.0 - depth * (-s * s).exp())
            }
            AreaProfile::Tabulated { x: xs, h } => {
                let k = segment(xs, x);
                let t = (x - xs[k]) / (xs[k + 1] - xs[k]);
                h[k] + t * (h[k + 1] - h[k])
            }
        }
    }

    /// `∫_0^x ds / h(s)`.
    pub fn cumulative(&self, x: f64) -> f64 {
        match self {
            AreaProfile::Constant { area } => x / area,
            AreaProfile::Bump { .. } => quad::adaptive(|s| 1.0 / self.h(s), 0.0, x, 1e-14, 1e-13),
            AreaProfile::Tabulated { x: xs, h } => {
                let k = segment(xs, x);
                let mut sum = 0.0;
                for i in 0..k {
                    sum += (xs[i + 1] - xs[i]) / logmean(h[i + 1], h[i]);
                }
                let hx = self.h(x);
                sum + (x - xs[k]) / logmean(hx, h[k])
            }
        }
    }

    /// `∫_lo^hi h(s) ds`.
    pub fn area_integral(&self, lo: f64, hi: f64) -> f64 {
        match self {
            AreaProfile::Constant { area } => area * (hi - lo),
            _ => quad::adaptive(|s| self.h(s), lo, hi, 1e-15, 1e-13),
        }
    }
}

fn segment(xs: &[f64], x: f64) -> usize {
    let n = xs.len();
    match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(i) => i.min(n - 2),
        Err(i) => i.saturating_sub(1).min(n - 2),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometryDef {
    area: AreaProfile,
    a: f64,
    b: f64,
}

/// Area profile, junction points `0 < a < b < 1` and cached `H(a)`, `H(b)`, `H(1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeometryDef", into = "GeometryDef")]
pub struct ChannelGeometry {
    area: AreaProfile,
    a: f64,
    b: f64,
    ha: f64,
    hb: f64,
    h1: f64,
}

impl TryFrom<GeometryDef> for ChannelGeometry {
    type Error = Error;
    fn try_from(d: GeometryDef) -> Result<Self> {
        ChannelGeometry::new(d.area, d.a, d.b)
    }
}

impl From<ChannelGeometry> for GeometryDef {
    fn from(g: ChannelGeometry) -> Self {
        GeometryDef { area: g.area, a: g.a, b: g.b }
    }
}

impl ChannelGeometry {
    pub fn new(area: AreaProfile, a: f64, b: f64) -> Result<Self> {
        area.validate()?;
        if !(0.0 < a && a < b && b < 1.0) {
            return Err(Error::InvalidModel(format!("need 0 < a < b < 1, got a = {a}, b = {b}")));
        }
        let ha = area.cumulative(a);
        let hb = area.cumulative(b);
        let h1 = area.cumulative(1.0);
        Ok(Self { area, a, b, ha, hb, h1 })
    }

    /// Unit cross-section with junctions at `a`, `b`.
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        Self::new(AreaProfile::Constant { area: 1.0 }, a, b)
    }

    pub fn area(&self) -> &AreaProfile {
        &self.area
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn h(&self, x: f64) -> f64 {
        self.area.h(x)
    }

    #[allow(non_snake_case)]
    pub fn H(&self, x: f64) -> f64 {
        if x == self.a {
            self.ha
        } else if x == self.b {
            self.hb
        } else if x == 1.0 {
            self.h1
        } else {
            self.area.cumulative(x)
        }
    }

    pub fn h_a(&self) -> f64 {
        self.ha
    }

    pub fn h_b(&self) -> f64 {
        self.hb
    }

    pub fn h_1(&self) -> f64 {
        self.h1
    }

    /// `α = H(a)/H(1)`.
    pub fn alpha(&self) -> f64 {
        self.ha / self.h1
    }

    /// `β = H(b)/H(1)`.
    pub fn beta(&self) -> f64 {
        self.hb / self.h1
    }

    /// The `x` with `H(x) = target`, for `target` in `[0, H(1)]`.
    pub fn inverse_h(&self, target: f64) -> f64 {
        if let AreaProfile::Constant { area } = self.area {
            return (target * area).clamp(0.0, 1.0);
        }
        if target <= 0.0 {
            return 0.0;
        }
        if target >= self.h1 {
            return 1.0;
        }
        roots::brent(|x| self.area.cumulative(x) - target, 0.0, 1.0, 1e-15).unwrap_or(target / self.h1)
    }

    /// Mirror image `x -> 1 - x` with junctions `(1 - b, 1 - a)`.
    pub fn mirrored(&self) -> Result<Self> {
        let area = match &self.area {
            AreaProfile::Constant { area } => AreaProfile::Constant { area: *area },
            AreaProfile::Bump { base, depth, center, width } => {
                AreaProfile::Bump { base: *base, depth: *depth, center: 1.0 - center, width: *width }
            }
            AreaProfile::Tabulated { x, h } => AreaProfile::Tabulated {
                x: x.iter().rev().map(|v| 1.0 - v).collect(),
                h: h.iter().rev().copied().collect(),
            },
        };
        Self::new(area, 1.0 - self.b, 1.0 - self.a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn bump() -> ChannelGeometry {
        ChannelGeometry::new(AreaProfile::Bump { base: 1.0, depth: 0.8, center: 0.5, width: 0.1 }, 0.35, 0.65)
            .unwrap()
    }

    #[test]
    fn uniform_geometry_has_identity_resistance() {
        let g = ChannelGeometry::uniform(1.0 / 3.0, 2.0 / 3.0).unwrap();
        assert_eq!(g.H(0.0), 0.0);
        assert_eq!(g.h_1(), 1.0);
        assert_relative_eq!(g.alpha(), 1.0 / 3.0);
        assert_relative_eq!(g.inverse_h(0.25), 0.25);
    }

    #[test]
    fn bump_resistance_matches_quadrature() {
        let g = bump();
        let reference = quad::GaussLegendre::new(40).composite(|s| 1.0 / g.h(s), 0.0, 1.0, 200);
        assert!((g.h_1() - reference).abs() < 1e-10);
        assert!(g.h_1() > 1.0);
        let x = g.inverse_h(0.5 * g.h_1());
        assert_relative_eq!(x, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn tabulated_resistance_is_exact_for_linear_segments() {
        let area = AreaProfile::Tabulated { x: vec![0.0, 0.5, 1.0], h: vec![1.0, 2.0, 2.0] };
        let g = ChannelGeometry::new(area, 0.25, 0.75).unwrap();
        // ∫_0^0.5 dx/(1+2x) = ln(2)/2, then 0.5/2
        assert_relative_eq!(g.h_1(), 0.5 * 2f64.ln() + 0.25, max_relative = 1e-14);
        assert_relative_eq!(g.H(0.25), 0.5 * 1.5f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn invalid_geometry_is_rejected() {
        assert!(ChannelGeometry::uniform(0.6, 0.4).is_err());
        assert!(ChannelGeometry::new(AreaProfile::Constant { area: -1.0 }, 0.3, 0.6).is_err());
    }

    #[test]
    fn geometry_round_trips_through_serde() {
        let g = bump();
        let s = serde_json::to_string(&g).unwrap();
        let back: ChannelGeometry = serde_json::from_str(&s).unwrap();
        assert_eq!(g, back);
    }

    proptest! {
        #[test]
        fn resistance_is_strictly_increasing(x in 0.0f64..0.99, dx in 1e-4f64..0.01) {
            let g = bump();
            prop_assert!(g.H(x + dx) > g.H(x));
        }
    }
}
