//! Parametric families: compositions of normalized quadratics, the cubic family, and extended maps
//! induced from a multimodal map by one of its restrictive cycles.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Branch, IntervalDynamics, Interval, NormalizedExtendedMap};
use crate::error::{Error, Result};
use crate::numeric;
use crate::renorm::{self, RestrictiveIntervalCycle};

/// `z -> -2 lambda z^2 + 2 lambda - 1` on `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticBranch {
    lambda: f64,
}

impl QuadraticBranch {
    pub fn new(lambda: f64) -> Self {
        Self { lambda }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl Branch for QuadraticBranch {
    fn eval(&self, x: f64) -> f64 {
        // 1 - x^2 vanishes exactly at x = -1, so f(-1) = -1 for every lambda.
        -1.0 + 2.0 * self.lambda * (1.0 - x * x)
    }

    fn deriv(&self, x: f64) -> f64 {
        -4.0 * self.lambda * x
    }

    fn critical_point(&self) -> f64 {
        0.0
    }

    fn domain(&self) -> Interval {
        Interval::new(-1.0, 1.0)
    }

    fn is_even(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadCompositionParams {
    pub lambdas: Vec<f64>,
}

impl QuadCompositionParams {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::DegenerateParams("at least one lambda is required".into()));
        }
        if let Some(l) = lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return Err(Error::DegenerateParams(format!("lambda {l} outside [0, 1]")));
        }
        Ok(Self { lambdas })
    }
}

/// The extended map whose branch `i` is `z -> -2 lambda_i z^2 + 2 lambda_i - 1`.
///
/// The lambda = 0 branch is constant, so it has no maximum in the strict sense; it is still
/// accepted here because the family is closed at the parameter boundary.
pub fn quad_composition(p: &QuadCompositionParams) -> NormalizedExtendedMap {
    let branches: Vec<Arc<dyn Branch>> = p
        .lambdas
        .iter()
        .map(|&l| Arc::new(QuadraticBranch::new(l)) as Arc<dyn Branch>)
        .collect();
    NormalizedExtendedMap::from_trusted(branches)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicParams {
    pub a: f64,
    pub b: f64,
}

/// `z -> z^3 - 3 a^2 z + b` as a one-level system with critical points `-|a|` (maximum) and `|a|`
/// (minimum), acting on the interval between its extreme fixed points.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicMap {
    pub params: CubicParams,
    a2: f64,
    domain: Interval,
}

impl CubicMap {
    pub fn eval(&self, z: f64) -> f64 {
        z * (z * z - 3.0 * self.a2) + self.params.b
    }

    pub fn deriv(&self, z: f64) -> f64 {
        3.0 * (z * z - self.a2)
    }

    /// Critical points, ascending.
    pub fn critical_pair(&self) -> [f64; 2] {
        let a = self.params.a.abs();
        [-a, a]
    }
}

impl IntervalDynamics for CubicMap {
    fn levels(&self) -> usize {
        1
    }

    fn step_raw(&self, _level: usize, x: f64) -> (f64, f64) {
        (self.eval(x), self.deriv(x))
    }

    fn critical_points(&self, _level: usize) -> Vec<f64> {
        self.critical_pair().to_vec()
    }

    fn domain(&self, _level: usize) -> Interval {
        self.domain
    }
}

pub fn cubic_map(p: CubicParams) -> Result<CubicMap> {
    if p.a == 0.0 || !p.a.is_finite() || !p.b.is_finite() {
        return Err(Error::DegenerateParams(format!("cubic needs a != 0 (a = {}, b = {})", p.a, p.b)));
    }
    let a2 = p.a * p.a;
    let g = |z: f64| z * (z * z - 3.0 * a2) + p.b - z;
    // Fixed points: roots of z^3 - (3a^2 + 1) z + b; g has turning points at +-m.
    let m = ((3.0 * a2 + 1.0) / 3.0).sqrt();
    let bound = 2.0 + 3.0 * a2 + p.b.abs();
    let hi = numeric::bisect(g, m, bound, 0.0);
    let lo = numeric::bisect(g, -bound, -m, 0.0);
    match (lo, hi) {
        (Ok(lo), Ok(hi)) if lo < hi => Ok(CubicMap {
            params: p,
            a2,
            domain: Interval::new(lo, hi),
        }),
        _ => Err(Error::DegenerateParams(format!(
            "cubic with a = {}, b = {} has no interval between distinct extreme fixed points",
            p.a, p.b
        ))),
    }
}

/// Extended map of type n obtained from a multimodal map and one of its restrictive cycles.
#[derive(Debug, Clone)]
pub struct InducedTypeNMap {
    pub base: Arc<dyn IntervalDynamics>,
    pub cycle: RestrictiveIntervalCycle,
    pub map: NormalizedExtendedMap,
    /// Number of base-map iterates composed in each branch.
    pub return_times: Vec<usize>,
    /// Branches whose rescaling reverses orientation.
    pub flipped: Vec<bool>,
}

/// Rescale the first-return branches of `cycle` into a normalized extended map.
pub fn induce_extended_map(cycle: &RestrictiveIntervalCycle) -> Result<InducedTypeNMap> {
    renorm::verify_cycle(cycle)?;
    let map = renorm::renormalize(cycle)?;
    Ok(InducedTypeNMap {
        base: cycle.dynamics().clone(),
        cycle: cycle.clone(),
        map,
        return_times: cycle.branch_steps(),
        flipped: cycle.visits.iter().map(|v| v.flipped).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evaluate, iterate, LevelPoint};

    #[test]
    fn quad_full_branch() {
        let f = quad_composition(&QuadCompositionParams::new(vec![1.0]).unwrap());
        for (z, v) in [(0.0, 1.0), (1.0, -1.0), (-1.0, -1.0), (0.5, 0.5)] {
            assert_eq!(evaluate(&f, LevelPoint::new(z, 0)).unwrap().x, v);
        }
    }

    #[test]
    fn quad_half_is_superstable() {
        let f = quad_composition(&QuadCompositionParams::new(vec![0.5]).unwrap());
        assert_eq!(evaluate(&f, LevelPoint::new(0.0, 0)).unwrap().x, 0.0);
        assert!(evaluate(&f, LevelPoint::new(0.3, 0)).unwrap().x < 0.0);
    }

    #[test]
    fn quad_two_levels() {
        let f = quad_composition(&QuadCompositionParams::new(vec![1.0, 1.0]).unwrap());
        assert_eq!(iterate(&f, LevelPoint::new(0.0, 0), 2).unwrap(), LevelPoint::new(-1.0, 0));
    }

    #[test]
    fn quad_boundary_exact_for_awkward_lambdas() {
        for l in [0.1, 0.3, 1.0 / 3.0, 0.7, 0.8090169943749475, 0.999999] {
            assert_eq!(QuadraticBranch::new(l).eval(-1.0), -1.0, "lambda {l}");
        }
    }

    #[test]
    fn quad_params_validation() {
        assert!(QuadCompositionParams::new(vec![1.2]).is_err());
        assert!(QuadCompositionParams::new(vec![]).is_err());
        assert!(QuadCompositionParams::new(vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn cubic_examples() {
        let f = cubic_map(CubicParams { a: 1.0, b: 0.0 }).unwrap();
        assert_eq!(f.eval(1.0), -2.0);
        assert_eq!(f.eval(-1.0), 2.0);
        assert_eq!(f.critical_points(0), vec![-1.0, 1.0]);
        assert_eq!(f.deriv(1.0), 0.0);
        assert_eq!(f.deriv(-1.0), 0.0);
        // Extreme fixed points of z^3 - 4z are +-2.
        assert!((f.domain(0).hi - 2.0).abs() < 1e-15);
        assert!((f.domain(0).lo + 2.0).abs() < 1e-15);
    }

    #[test]
    fn cubic_rejects_zero_a() {
        assert!(matches!(cubic_map(CubicParams { a: 0.0, b: 0.3 }), Err(Error::DegenerateParams(_))));
    }
}
