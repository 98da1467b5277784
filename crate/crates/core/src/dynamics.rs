//! Extended maps of type n: evaluation, orbits, orbit derivatives and periodic points.
//!
//! An extended map is a cyclic chain of unimodal branches `f_i: I_i -> I_{i+1 mod n}`, each with a
//! single quadratic maximum. Points carry their level. Multimodal maps such as the cubic family
//! share the same orbit machinery through [`IntervalDynamics`], as one-level systems with several
//! critical points.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric;

/// Absolute slack on interval membership.
pub const DOMAIN_SLACK: f64 = 1e-12;

/// Derivatives below this magnitude raise the near-critical flag of an [`OrbitDerivative`].
pub const CRITICAL_DERIVATIVE: f64 = 1e-14;

/// Newton step budget in [`find_periodic_point`].
pub const MAX_NEWTON_STEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelPoint {
    pub x: f64,
    pub level: usize,
}

impl LevelPoint {
    pub fn new(x: f64, level: usize) -> Self {
        Self { x, level }
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// Interval spanned by two points in either order.
    pub fn new(a: f64, b: f64) -> Self {
        if a <= b {
            Self { lo: a, hi: b }
        } else {
            Self { lo: b, hi: a }
        }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64, slack: f64) -> bool {
        x >= self.lo - slack && x <= self.hi + slack
    }

    pub fn contains_interval(&self, other: &Interval, slack: f64) -> bool {
        other.lo >= self.lo - slack && other.hi <= self.hi + slack
    }

    /// Length of the intersection (0 when disjoint).
    pub fn overlap(&self, other: &Interval) -> f64 {
        (self.hi.min(other.hi) - self.lo.max(other.lo)).max(0.0)
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Hausdorff distance between two intervals.
    pub fn hausdorff(&self, other: &Interval) -> f64 {
        (self.lo - other.lo).abs().max((self.hi - other.hi).abs())
    }
}

/// One unimodal branch of an extended map.
pub trait Branch: Send + Sync + fmt::Debug {
    fn eval(&self, x: f64) -> f64;
    fn deriv(&self, x: f64) -> f64;
    fn eval_with_deriv(&self, x: f64) -> (f64, f64) {
        (self.eval(x), self.deriv(x))
    }
    /// Location of the maximum.
    fn critical_point(&self) -> f64;
    /// The interval `I_i = [-1, a_i]` (or its unnormalized counterpart).
    fn domain(&self) -> Interval;
    /// True when the branch is known to be an even function of `x - critical_point()`.
    fn is_even(&self) -> bool {
        false
    }
    /// Estimated absolute error of `eval`; zero for closed forms.
    fn error_estimate(&self) -> f64 {
        0.0
    }
}

/// A system of finitely many levels of interval maps, each level carrying finitely many critical
/// points, stepping level `i` to level `i + 1 mod levels`.
pub trait IntervalDynamics: Send + Sync + fmt::Debug {
    fn levels(&self) -> usize;
    /// Value and derivative of the level map at `x`, without domain checks.
    fn step_raw(&self, level: usize, x: f64) -> (f64, f64);
    /// Critical points of the level map, ascending.
    fn critical_points(&self, level: usize) -> Vec<f64>;
    fn domain(&self, level: usize) -> Interval;
    /// True when the level map is even about its single critical point.
    fn is_even(&self, _level: usize) -> bool {
        false
    }
    /// Estimated absolute error of `step_raw` values on any level.
    fn error_estimate(&self) -> f64 {
        0.0
    }
}

/// Extended map of type n.
#[derive(Debug, Clone)]
pub struct ExtendedMap {
    branches: Vec<Arc<dyn Branch>>,
}

impl ExtendedMap {
    /// Validates that every branch has an interior maximum at its critical point.
    pub fn new(branches: Vec<Arc<dyn Branch>>) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::InvalidInput("an extended map needs at least one branch".into()));
        }
        for (i, b) in branches.iter().enumerate() {
            let d = b.domain();
            let c = b.critical_point();
            if !(d.lo < c && c < d.hi) {
                return Err(Error::InvalidInput(format!(
                    "branch {i}: critical point {c} not inside [{}, {}]",
                    d.lo, d.hi
                )));
            }
            let h = 1e-4 * (d.len()).min(c - d.lo).min(d.hi - c);
            if !(b.deriv(c - h) > 0.0 && b.deriv(c + h) < 0.0) {
                return Err(Error::InvalidInput(format!(
                    "branch {i}: critical point {c} is not a maximum"
                )));
            }
        }
        Ok(Self { branches })
    }

    pub fn n(&self) -> usize {
        self.branches.len()
    }

    pub fn branch(&self, i: usize) -> &Arc<dyn Branch> {
        &self.branches[i % self.branches.len()]
    }

    pub fn branches(&self) -> &[Arc<dyn Branch>] {
        &self.branches
    }

    pub fn crit(&self, i: usize) -> f64 {
        self.branch(i).critical_point()
    }

    pub fn domain_right(&self, i: usize) -> f64 {
        self.branch(i).domain().hi
    }
}

impl IntervalDynamics for ExtendedMap {
    fn levels(&self) -> usize {
        self.n()
    }

    fn step_raw(&self, level: usize, x: f64) -> (f64, f64) {
        self.branch(level).eval_with_deriv(x)
    }

    fn critical_points(&self, level: usize) -> Vec<f64> {
        vec![self.crit(level)]
    }

    fn domain(&self, level: usize) -> Interval {
        self.branch(level).domain()
    }

    fn is_even(&self, level: usize) -> bool {
        self.branch(level).is_even()
    }

    fn error_estimate(&self) -> f64 {
        self.branches.iter().map(|b| b.error_estimate()).fold(0.0, f64::max)
    }
}

/// Extended map in normal form: every critical point at 0 and every `f_i(-1) = -1` exactly.
#[derive(Debug, Clone)]
pub struct NormalizedExtendedMap(ExtendedMap);

impl NormalizedExtendedMap {
    pub fn new(branches: Vec<Arc<dyn Branch>>) -> Result<Self> {
        let map = ExtendedMap::new(branches)?;
        for (i, b) in map.branches.iter().enumerate() {
            if b.critical_point() != 0.0 {
                return Err(Error::InvalidInput(format!("branch {i}: critical point is not 0")));
            }
            let v = b.eval(-1.0);
            if v != -1.0 {
                return Err(Error::InvalidInput(format!("branch {i}: f(-1) = {v}, not -1")));
            }
            if b.domain().lo != -1.0 {
                return Err(Error::InvalidInput(format!("branch {i}: domain must start at -1")));
            }
        }
        Ok(Self(map))
    }

    /// Skips the maximum check; for closed-form families whose normalization holds by algebra.
    pub(crate) fn from_trusted(branches: Vec<Arc<dyn Branch>>) -> Self {
        debug_assert!(branches
            .iter()
            .all(|b| b.critical_point() == 0.0 && b.eval(-1.0) == -1.0));
        Self(ExtendedMap { branches })
    }

    pub fn as_extended(&self) -> &ExtendedMap {
        &self.0
    }
}

impl std::ops::Deref for NormalizedExtendedMap {
    type Target = ExtendedMap;
    fn deref(&self) -> &ExtendedMap {
        &self.0
    }
}

impl IntervalDynamics for NormalizedExtendedMap {
    fn levels(&self) -> usize {
        self.0.n()
    }
    fn step_raw(&self, level: usize, x: f64) -> (f64, f64) {
        self.0.step_raw(level, x)
    }
    fn critical_points(&self, level: usize) -> Vec<f64> {
        self.0.critical_points(level)
    }
    fn domain(&self, level: usize) -> Interval {
        self.0.domain(level)
    }
    fn is_even(&self, level: usize) -> bool {
        self.0.is_even(level)
    }
    fn error_estimate(&self) -> f64 {
        self.0.error_estimate()
    }
}

/// Product of derivatives along an orbit, with an overflow-safe log accumulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitDerivative {
    pub value: f64,
    pub log_abs: f64,
    /// Set when some factor had magnitude below [`CRITICAL_DERIVATIVE`].
    pub near_critical: bool,
}

impl OrbitDerivative {
    pub fn one() -> Self {
        Self {
            value: 1.0,
            log_abs: 0.0,
            near_critical: false,
        }
    }

    /// Multiply in one more factor.
    pub fn push(&mut self, d: f64) {
        if d.abs() < CRITICAL_DERIVATIVE {
            self.near_critical = true;
        }
        let sign = if self.value < 0.0 { -1.0 } else { 1.0 } * d.signum();
        self.log_abs += d.abs().ln();
        let direct = self.value * d;
        self.value = if direct.is_finite() && (direct != 0.0 || d == 0.0 || self.value == 0.0) {
            direct
        } else if self.log_abs < 700.0 {
            sign * self.log_abs.exp()
        } else {
            sign * f64::INFINITY
        };
    }
}

fn check_domain<D: IntervalDynamics + ?Sized>(f: &D, p: LevelPoint, step: usize) -> Result<()> {
    if f.domain(p.level).contains(p.x, DOMAIN_SLACK) && p.x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            x: p.x,
            level: p.level,
            step,
        })
    }
}

/// One step of the map.
pub fn evaluate<D: IntervalDynamics + ?Sized>(f: &D, p: LevelPoint) -> Result<LevelPoint> {
    let level = p.level % f.levels();
    let p = LevelPoint::new(p.x, level);
    check_domain(f, p, 0)?;
    Ok(LevelPoint::new(f.step_raw(level, p.x).0, (level + 1) % f.levels()))
}

/// `k` steps of the map, checking every intermediate point.
pub fn iterate<D: IntervalDynamics + ?Sized>(f: &D, p: LevelPoint, k: usize) -> Result<LevelPoint> {
    let n = f.levels();
    let mut q = LevelPoint::new(p.x, p.level % n);
    for step in 0..k {
        check_domain(f, q, step)?;
        q = LevelPoint::new(f.step_raw(q.level, q.x).0, (q.level + 1) % n);
    }
    Ok(q)
}

/// `k` steps without domain checks, returning the endpoint and the derivative of the composition.
pub fn iterate_raw<D: IntervalDynamics + ?Sized>(f: &D, p: LevelPoint, k: usize) -> (LevelPoint, f64) {
    let n = f.levels();
    let mut level = p.level % n;
    let mut x = p.x;
    let mut d = 1.0;
    for _ in 0..k {
        let (y, dy) = f.step_raw(level, x);
        d *= dy;
        x = y;
        level = (level + 1) % n;
    }
    (LevelPoint::new(x, level), d)
}

/// Derivative of `F^k` at `p`.
pub fn orbit_derivative<D: IntervalDynamics + ?Sized>(
    f: &D,
    p: LevelPoint,
    k: usize,
) -> Result<OrbitDerivative> {
    let n = f.levels();
    let mut q = LevelPoint::new(p.x, p.level % n);
    let mut acc = OrbitDerivative::one();
    for step in 0..k {
        check_domain(f, q, step)?;
        let (y, dy) = f.step_raw(q.level, q.x);
        acc.push(dy);
        q = LevelPoint::new(y, (q.level + 1) % n);
    }
    Ok(acc)
}

/// Image of an interval on `level` under one step: endpoints plus interior critical values.
pub fn image_interval<D: IntervalDynamics + ?Sized>(f: &D, level: usize, j: Interval) -> Interval {
    let a = f.step_raw(level, j.lo).0;
    let b = f.step_raw(level, j.hi).0;
    let mut out = Interval::new(a, b);
    for c in f.critical_points(level) {
        if c > j.lo && c < j.hi {
            let v = f.step_raw(level, c).0;
            out = out.hull(&Interval::new(v, v));
        }
    }
    out
}

/// A periodic point of the given period near `seed`, with its multiplier.
///
/// Newton on `F^period(x) - x` is tried first; if it fails to converge, the nearest sign change
/// of `F^period(x) - x` around the seed is bisected. `period` must be a multiple of the number of
/// levels so that the point returns to its own level.
pub fn find_periodic_point<D: IntervalDynamics + ?Sized>(
    f: &D,
    period: usize,
    seed: LevelPoint,
    tol: f64,
) -> Result<(LevelPoint, OrbitDerivative)> {
    let n = f.levels();
    if period == 0 || !period.is_multiple_of(n) {
        return Err(Error::InvalidInput(format!(
            "period {period} must be a positive multiple of the level count {n}"
        )));
    }
    let level = seed.level % n;
    let dom = f.domain(level);
    let h = |x: f64| {
        let (q, d) = iterate_raw(f, LevelPoint::new(x, level), period);
        (q.x - x, d - 1.0)
    };

    let mut x = seed.x.clamp(dom.lo, dom.hi);
    let mut best = (f64::INFINITY, x);
    let mut converged = None;
    for _ in 0..MAX_NEWTON_STEPS {
        let (r, dr) = h(x);
        if !r.is_finite() {
            break;
        }
        if r.abs() < best.0 {
            best = (r.abs(), x);
        }
        if r.abs() < tol {
            converged = Some(x);
            break;
        }
        let next = x - r / dr;
        if !next.is_finite() {
            break;
        }
        x = next.clamp(dom.lo, dom.hi);
    }

    let x = match converged {
        Some(x) => x,
        None => {
            let width = dom.len();
            let step = width / 2048.0;
            let s = seed.x.clamp(dom.lo, dom.hi);
            let mut found = None;
            'outer: for j in 1..=2048 {
                for dir in [-1.0, 1.0] {
                    let a = (s + dir * (j - 1) as f64 * step).clamp(dom.lo, dom.hi);
                    let b = (s + dir * j as f64 * step).clamp(dom.lo, dom.hi);
                    if a == b {
                        continue;
                    }
                    let (ra, rb) = (h(a).0, h(b).0);
                    if ra == 0.0 {
                        found = Some(a);
                        break 'outer;
                    }
                    if ra.signum() != rb.signum() {
                        found = Some(numeric::bisect(|t| h(t).0, a, b, 0.0)?);
                        break 'outer;
                    }
                }
            }
            match found {
                Some(x) if h(x).0.abs() < tol => x,
                Some(x) => {
                    return Err(Error::NoConvergence {
                        iterations: MAX_NEWTON_STEPS,
                        residual: h(x).0.abs().min(best.0),
                    })
                }
                None => {
                    return Err(Error::NoConvergence {
                        iterations: MAX_NEWTON_STEPS,
                        residual: best.0,
                    })
                }
            }
        }
    };
    let p = LevelPoint::new(x, level);
    let mult = orbit_derivative(f, p, period)?;
    Ok((p, mult))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{quad_composition, QuadCompositionParams};

    fn quad(lambda: f64) -> NormalizedExtendedMap {
        quad_composition(&QuadCompositionParams::new(vec![lambda]).unwrap())
    }

    #[test]
    fn evaluate_full_map_at_critical_point() {
        let f = quad(1.0);
        assert_eq!(evaluate(&f, LevelPoint::new(0.0, 0)).unwrap(), LevelPoint::new(1.0, 0));
    }

    #[test]
    fn evaluate_boundary_is_fixed() {
        let f = quad_composition(&QuadCompositionParams::new(vec![0.3, 0.9, 0.6]).unwrap());
        for i in 0..3 {
            let q = evaluate(&f, LevelPoint::new(-1.0, i)).unwrap();
            assert_eq!(q, LevelPoint::new(-1.0, (i + 1) % 3));
        }
    }

    #[test]
    fn evaluate_rejects_points_outside_domain() {
        let f = quad(1.0);
        assert!(evaluate(&f, LevelPoint::new(1.0 + 1e-13, 0)).is_ok());
        assert!(matches!(
            evaluate(&f, LevelPoint::new(1.0 + 1e-9, 0)),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn iterate_examples() {
        let half = quad(0.5);
        assert_eq!(iterate(&half, LevelPoint::new(0.0, 0), 5).unwrap(), LevelPoint::new(0.0, 0));
        let full = quad(1.0);
        assert_eq!(iterate(&full, LevelPoint::new(0.0, 0), 2).unwrap(), LevelPoint::new(-1.0, 0));
        let p = LevelPoint::new(0.3, 0);
        assert_eq!(iterate(&full, p, 0).unwrap(), p);
    }

    #[test]
    fn iterate_reports_failing_step() {
        // Two branches: the first maps 0 to 1, beyond the second level's domain [-1, 0.5].
        #[derive(Debug)]
        struct Short;
        impl Branch for Short {
            fn eval(&self, x: f64) -> f64 {
                0.5 - 1.5 * x * x
            }
            fn deriv(&self, x: f64) -> f64 {
                -3.0 * x
            }
            fn critical_point(&self) -> f64 {
                0.0
            }
            fn domain(&self) -> Interval {
                Interval::new(-1.0, 0.5)
            }
        }
        let q = crate::families::QuadraticBranch::new(1.0);
        let f = ExtendedMap::new(vec![Arc::new(q), Arc::new(Short)]).unwrap();
        match iterate(&f, LevelPoint::new(0.0, 0), 3) {
            Err(Error::Domain { step, level, .. }) => {
                assert_eq!(step, 1);
                assert_eq!(level, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn orbit_derivative_examples() {
        let f = quad(0.7);
        let d = orbit_derivative(&f, LevelPoint::new(0.3, 0), 1).unwrap();
        assert!((d.value - (-4.0 * 0.7 * 0.3)).abs() < 1e-15);
        let full = quad(1.0);
        let d = orbit_derivative(&full, LevelPoint::new(0.5, 0), 1).unwrap();
        assert_eq!(d.value, -2.0);
        let d = orbit_derivative(&full, LevelPoint::new(0.5, 0), 3).unwrap();
        assert_eq!(d.value, -8.0);
        assert!((d.log_abs - 8f64.ln()).abs() < 1e-15);
        let d = orbit_derivative(&full, LevelPoint::new(0.0, 0), 3).unwrap();
        assert_eq!(d.value, 0.0);
        assert!(d.near_critical);
    }

    #[test]
    fn orbit_derivative_survives_overflow() {
        // The fixed point -1 of the full map has multiplier 4; 600 steps overflow the direct product.
        let full = quad(1.0);
        let d = orbit_derivative(&full, LevelPoint::new(-1.0, 0), 600).unwrap();
        assert!((d.log_abs - 600.0 * 4f64.ln()).abs() < 1e-9);
        assert_eq!(d.value, f64::INFINITY);
        let d = orbit_derivative(&full, LevelPoint::new(-1.0, 0), 300).unwrap();
        assert!((d.value / 4f64.powi(300) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn periodic_point_boundary_fixed_point() {
        for lambda in [0.3, 0.7, 1.0] {
            let f = quad(lambda);
            let (p, m) = find_periodic_point(&f, 1, LevelPoint::new(-0.9, 0), 1e-14).unwrap();
            assert!((p.x + 1.0).abs() < 1e-14);
            assert!((m.value - 4.0 * lambda).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_point_interior_fixed_point() {
        // Root of 2z^2 + z - 1 = 0 closest to the seed.
        let oracle = (-1.0 + (1.0f64 + 8.0).sqrt()) / 4.0;
        let f = quad(1.0);
        let (p, m) = find_periodic_point(&f, 1, LevelPoint::new(0.4, 0), 1e-14).unwrap();
        assert!((p.x - oracle).abs() < 1e-14);
        assert!((m.value + 2.0).abs() < 1e-13);
    }

    #[test]
    fn periodic_point_period_two() {
        // F^2(z) - z = -(2z^2 + z - 1)(4z^2 - 2z - 1); the period-2 orbit solves 4z^2 - 2z - 1 = 0.
        let oracle = (2.0 + (4.0f64 + 16.0).sqrt()) / 8.0;
        let poly = |z: f64| -(2.0 * z * z + z - 1.0) * (4.0 * z * z - 2.0 * z - 1.0);
        let f = quad(1.0);
        let direct = |z: f64| iterate(&f, LevelPoint::new(z, 0), 2).unwrap().x - z;
        for z in [-0.9, -0.3, 0.2, 0.6, 0.95] {
            assert!((poly(z) - direct(z)).abs() < 1e-14);
        }
        let (p, _) = find_periodic_point(&f, 2, LevelPoint::new(0.7, 0), 1e-14).unwrap();
        assert!((p.x - oracle).abs() < 1e-13);
        assert!((p.x - (1.0 + 5f64.sqrt()) / 4.0).abs() < 1e-13);
    }

    #[test]
    fn periodic_point_rejects_level_changing_period() {
        let f = quad_composition(&QuadCompositionParams::new(vec![0.9, 0.9]).unwrap());
        assert!(matches!(
            find_periodic_point(&f, 3, LevelPoint::new(0.1, 0), 1e-12),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn interval_helpers() {
        let a = Interval::new(0.5, -0.5);
        assert_eq!(a.lo, -0.5);
        assert_eq!(a.len(), 1.0);
        let b = Interval::new(0.25, 2.0);
        assert_eq!(a.overlap(&b), 0.25);
        assert!(a.hull(&b).contains_interval(&a, 0.0));
        let f = quad(1.0);
        let img = image_interval(&f, 0, Interval::new(-0.5, 0.25));
        assert_eq!(img, Interval::new(0.5, 1.0));
    }

    #[test]
    fn normalized_constructor_rejects_shifted_branch() {
        #[derive(Debug)]
        struct Off;
        impl Branch for Off {
            fn eval(&self, x: f64) -> f64 {
                -x * x + 0.1
            }
            fn deriv(&self, x: f64) -> f64 {
                -2.0 * x
            }
            fn critical_point(&self) -> f64 {
                0.0
            }
            fn domain(&self) -> Interval {
                Interval::new(-1.0, 1.0)
            }
        }
        assert!(NormalizedExtendedMap::new(vec![Arc::new(Off)]).is_err());
        assert!(ExtendedMap::new(vec![Arc::new(Off)]).is_ok());
    }
}
