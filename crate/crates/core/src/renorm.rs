//! Restrictive-interval cycles, their marked combinatorial data, and the renormalization operator.
//!
//! A restrictive cycle of period `k` is an interval `P` around the base critical point whose first
//! `k` images have pairwise disjoint interiors, contain every critical point, and return into `P`.
//! Its boundary is a repelling periodic point `beta` together with the symmetric partner of `beta`.
//! Each visit of the cycle to a critical point contributes one branch of the renormalized map, the
//! first return rescaled so that the critical point sits at 0 and the periodic point at -1.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    image_interval, iterate_raw, orbit_derivative, Branch, IntervalDynamics, Interval, LevelPoint,
    NormalizedExtendedMap, DOMAIN_SLACK,
};
use crate::error::{Error, Result};
use crate::numeric;

/// Default bound on the period scanned per level.
pub const DEFAULT_MAX_PERIOD: usize = 64;

/// Multipliers with modulus within this band of 1 are neither repelling nor rejected.
pub const AMBIGUITY_BAND: f64 = 1e-6;

/// Normalization residual beyond which a renormalized map is considered unreliable.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-7;

const GRID: usize = 512;

/// One passage of the cycle through a critical point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalVisit {
    /// Index in the orbit of `P` at which the critical point is met.
    pub time: usize,
    pub level: usize,
    /// Global index of the critical point (levels in order, ascending within a level).
    pub critical_index: usize,
    pub critical_point: f64,
    /// Image of the boundary periodic point at this time.
    pub beta: f64,
    /// Symmetric partner of `beta` about the critical point.
    pub partner: f64,
    /// True when the rescaling sending `beta` to -1 reverses orientation.
    pub flipped: bool,
}

impl CriticalVisit {
    /// The symmetrized interval around the critical point.
    pub fn interval(&self) -> Interval {
        Interval::new(self.beta, self.partner)
    }

    /// Signed length `c - beta` of the affine chart sending `c` to 0 and `beta` to -1.
    pub fn scale(&self) -> f64 {
        self.critical_point - self.beta
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RestrictiveIntervalCycle {
    #[serde(skip)]
    dynamics: Arc<dyn IntervalDynamics>,
    pub period: usize,
    pub p: Interval,
    pub beta: f64,
    pub multiplier: f64,
    /// `(level, F^j(P))` for `j < period`.
    pub iterates: Vec<(usize, Interval)>,
    /// Global index of the critical point inside each iterate, if any.
    pub touched: Vec<Option<usize>>,
    /// Visits in order of time; the first is the base critical point at time 0.
    pub visits: Vec<CriticalVisit>,
}

impl RestrictiveIntervalCycle {
    pub fn dynamics(&self) -> &Arc<dyn IntervalDynamics> {
        &self.dynamics
    }

    /// The times `l_1 < ... < l_n` at which the orbit meets a critical point.
    pub fn return_times(&self) -> Vec<usize> {
        self.visits.iter().map(|v| v.time).collect()
    }

    /// Number of base iterates composed into each renormalized branch.
    pub fn branch_steps(&self) -> Vec<usize> {
        let n = self.visits.len();
        (0..n)
            .map(|m| {
                let next = if m + 1 < n { self.visits[m + 1].time } else { self.period };
                next - self.visits[m].time
            })
            .collect()
    }
}

/// Marked combinatorial data of one renormalization step.
///
/// Indices run over `0..period`; index `j` names the orbit interval `F^j(P)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MarkedCombinatorialData {
    pub period: usize,
    /// Number of levels of the map the cycle lives in.
    pub levels: usize,
    /// Pairs `(i, j)` with `F^i(P)` left of `F^j(P)` on the same level, sorted.
    pub order: Vec<(usize, usize)>,
    /// Indices of the orbit intervals containing a critical point, ascending.
    pub marks: Vec<usize>,
    /// `successor[i]` is the index whose interval contains the image of interval `i`.
    pub successor: Vec<usize>,
}

impl MarkedCombinatorialData {
    /// Period-doubling combinatorics of a one-level map.
    pub fn doubling() -> Self {
        Self {
            period: 2,
            levels: 1,
            order: vec![(0, 1)],
            marks: vec![0],
            successor: vec![1, 0],
        }
    }

    /// Spatial order of the orbit intervals on each level, left to right.
    pub fn arrangement(&self) -> Vec<Vec<usize>> {
        (0..self.levels)
            .map(|lvl| {
                let mut idx: Vec<usize> = (0..self.period).filter(|j| j % self.levels == lvl).collect();
                idx.sort_by_key(|&j| self.order.iter().filter(|&&(_, b)| b == j).count());
                idx
            })
            .collect()
    }

    /// Compact text form, e.g. `2:0<1|*0` for doubling.
    pub fn label(&self) -> String {
        let arr: Vec<String> = self
            .arrangement()
            .iter()
            .map(|lvl| lvl.iter().map(|j| j.to_string()).collect::<Vec<_>>().join("<"))
            .collect();
        let marks: Vec<String> = self.marks.iter().map(|m| m.to_string()).collect();
        format!("{}:{}|*{}", self.period, arr.join("/"), marks.join(","))
    }
}

/// Structural equality of combinatorial data.
pub fn mcd_equal(a: &MarkedCombinatorialData, b: &MarkedCombinatorialData) -> bool {
    a == b
}

#[derive(Debug, Clone, Copy)]
struct Critical {
    level: usize,
    x: f64,
    index: usize,
}

fn criticals(f: &dyn IntervalDynamics) -> Vec<Critical> {
    let mut out = Vec::new();
    for level in 0..f.levels() {
        for x in f.critical_points(level) {
            let index = out.len();
            out.push(Critical { level, x, index });
        }
    }
    out
}

/// Maximal monotone lap around the critical point `c` of `level`.
fn lap(f: &dyn IntervalDynamics, level: usize, c: f64) -> Interval {
    let dom = f.domain(level);
    let mut lo = dom.lo;
    let mut hi = dom.hi;
    for d in f.critical_points(level) {
        if d < c {
            lo = lo.max(d);
        } else if d > c {
            hi = hi.min(d);
        }
    }
    Interval { lo, hi }
}

/// Symmetric partner of `x` about the critical point `c`: the point on the other side of `c`, in
/// the same lap, with the same image.
fn partner(f: &dyn IntervalDynamics, level: usize, c: f64, x: f64) -> Option<f64> {
    if f.is_even(level) {
        return Some(2.0 * c - x);
    }
    let l = lap(f, level, c);
    let v = f.step_raw(level, x).0;
    let g = |t: f64| f.step_raw(level, t).0 - v;
    let end = if x < c { l.hi } else { l.lo };
    numeric::bisect(g, c, end, 0.0).ok()
}

/// Restrictive cycle of the base critical point of a normalized extended map with minimal period
/// up to `max_period`, if any.
pub fn find_restrictive_interval(
    f: &NormalizedExtendedMap,
    max_period: usize,
) -> Result<Option<RestrictiveIntervalCycle>> {
    find_restrictive_cycle(Arc::new(f.clone()), max_period)
}

/// Minimal-period restrictive cycle around the first critical point of level 0 of any system of
/// interval maps.
pub fn find_restrictive_cycle(
    f: Arc<dyn IntervalDynamics>,
    max_period: usize,
) -> Result<Option<RestrictiveIntervalCycle>> {
    let levels = f.levels();
    let c0 = f.critical_points(0)[0];
    let base_lap = lap(f.as_ref(), 0, c0);
    let top = f.step_raw(0, c0).0;
    let height = |x: f64| (top - f.step_raw(0, x).0).abs();

    // A return at time k can bound P only if it comes closer to c0, in the height sense, than
    // every earlier return to level 0.
    let mut closest = f64::INFINITY;
    let mut q = LevelPoint::new(c0, 0);
    for k in 1..=max_period {
        let (next, _) = iterate_raw(f.as_ref(), q, 1);
        q = next;
        if !q.x.is_finite() || !f.domain(q.level).contains(q.x, DOMAIN_SLACK) {
            break;
        }
        if q.level != 0 {
            continue;
        }
        let inside = base_lap.contains(q.x, 0.0);
        let h = if inside { height(q.x) } else { f64::INFINITY };
        if k >= 2 * levels && inside && h <= closest && closest > 0.0 {
            if let Some(cycle) = cycles_of_period(&f, k, c0, base_lap, closest)? {
                return Ok(Some(cycle));
            }
        }
        closest = closest.min(h);
    }
    Ok(None)
}

fn cycles_of_period(
    f: &Arc<dyn IntervalDynamics>,
    k: usize,
    c0: f64,
    base_lap: Interval,
    bound: f64,
) -> Result<Option<RestrictiveIntervalCycle>> {
    let fd = f.as_ref();
    let top = fd.step_raw(0, c0).0;
    let height = |x: f64| top - fd.step_raw(0, x).0;
    // Window of points at most as high as the closest earlier return.
    let edge = |end: f64| {
        if !bound.is_finite() || height(end) <= bound {
            end
        } else {
            numeric::bisect(|x| height(x) - bound, c0, end, 0.0).unwrap_or(end)
        }
    };
    let window = Interval::new(edge(base_lap.lo), edge(base_lap.hi));
    if window.len() <= 0.0 {
        return Ok(None);
    }

    let phi = |x: f64| iterate_raw(fd, LevelPoint::new(x, 0), k).0.x - x;
    let phi_d = |x: f64| {
        let (q, d) = iterate_raw(fd, LevelPoint::new(x, 0), k);
        (q.x - x, d - 1.0)
    };
    let mut roots: Vec<f64> = Vec::new();
    let xs: Vec<f64> = (0..=GRID)
        .map(|i| window.lo + window.len() * i as f64 / GRID as f64)
        .collect();
    let vals: Vec<f64> = xs.iter().map(|&x| phi(x)).collect();
    for i in 0..GRID {
        let (a, b) = (xs[i], xs[i + 1]);
        let (va, vb) = (vals[i], vals[i + 1]);
        if !va.is_finite() || !vb.is_finite() {
            continue;
        }
        if va == 0.0 {
            roots.push(a);
        } else if vb != 0.0 && va.signum() != vb.signum() {
            roots.push(numeric::newton_bracketed(phi_d, a, b)?);
        }
    }
    if vals[GRID] == 0.0 {
        roots.push(xs[GRID]);
    }

    let scale = base_lap.len();
    let mut best: Option<(f64, std::result::Result<RestrictiveIntervalCycle, Error>)> = None;
    for beta in roots {
        if (beta - c0).abs() <= 1e-9 * scale {
            continue;
        }
        let Some(other) = partner(fd, 0, c0, beta) else {
            continue;
        };
        let p = Interval::new(beta, other);
        if !base_lap.contains_interval(&p, DOMAIN_SLACK) {
            continue;
        }
        let outcome = match assemble(f, k, beta, other) {
            Ok(cycle) => {
                let m = cycle.multiplier.abs();
                if m > 1.0 + AMBIGUITY_BAND {
                    Ok(cycle)
                } else if m >= 1.0 - AMBIGUITY_BAND {
                    Err(Error::NumericalAmbiguity {
                        x: beta,
                        multiplier: cycle.multiplier,
                    })
                } else {
                    continue;
                }
            }
            Err(_) => continue,
        };
        if best.as_ref().is_none_or(|(len, _)| p.len() > *len) {
            best = Some((p.len(), outcome));
        }
    }
    match best {
        None => Ok(None),
        Some((_, Ok(c))) => Ok(Some(c)),
        Some((_, Err(e))) => Err(e),
    }
}

/// Build the cycle bounded by `beta` and its partner and check every condition except the
/// multiplier band. Returns a reason on failure.
fn assemble(
    f: &Arc<dyn IntervalDynamics>,
    k: usize,
    beta: f64,
    other: f64,
) -> std::result::Result<RestrictiveIntervalCycle, String> {
    let fd = f.as_ref();
    let levels = fd.levels();
    let crits = criticals(fd);
    let p = Interval::new(beta, other);
    let mult = orbit_derivative(fd, LevelPoint::new(beta, 0), k).map_err(|e| e.to_string())?;
    // First-order propagation of evaluation error along the orbit of beta.
    let err = fd.error_estimate();
    let mut propagated = 0.0;
    let mut q = LevelPoint::new(beta, 0);
    for _ in 0..k {
        let (v, d) = fd.step_raw(q.level, q.x);
        propagated = propagated * d.abs() + err;
        q = LevelPoint::new(v, (q.level + 1) % levels);
    }
    if propagated > 1e-6 * p.len() {
        return Err("evaluation error too large to decide containment".into());
    }
    let slack = DOMAIN_SLACK + 4.0 * propagated;

    let mut iterates = Vec::with_capacity(k);
    let mut j_int = p;
    for j in 0..k {
        let level = j % levels;
        if !fd.domain(level).contains_interval(&j_int, DOMAIN_SLACK) {
            return Err(format!("orbit interval {j} leaves the domain"));
        }
        iterates.push((level, j_int));
        j_int = image_interval(fd, level, j_int);
    }
    if !p.contains_interval(&j_int, slack) {
        return Err("the period-k image is not inside P".into());
    }
    for a in 0..k {
        for b in (a + 1)..k {
            if iterates[a].0 == iterates[b].0 && iterates[a].1.overlap(&iterates[b].1) > slack {
                return Err(format!("orbit intervals {a} and {b} overlap"));
            }
        }
    }

    let mut touched = vec![None; k];
    let mut seen = vec![false; crits.len()];
    for (j, (level, iv)) in iterates.iter().enumerate() {
        for c in crits.iter().filter(|c| c.level == *level) {
            // A superstable orbit puts a critical point exactly on an interval endpoint.
            if iv.contains(c.x, slack) {
                if touched[j].is_some() {
                    return Err(format!("orbit interval {j} contains two critical points"));
                }
                touched[j] = Some(c.index);
                seen[c.index] = true;
            }
        }
    }
    if touched[0] != Some(0) {
        return Err("P does not contain the base critical point".into());
    }
    if seen.iter().any(|s| !s) {
        return Err("the cycle misses a critical point".into());
    }

    let mut visits = Vec::new();
    for (j, t) in touched.iter().enumerate() {
        let Some(ci) = *t else { continue };
        let c = crits[ci];
        let b = iterate_raw(fd, LevelPoint::new(beta, 0), j).0.x;
        let other = if j == 0 {
            other
        } else {
            partner(fd, c.level, c.x, b).ok_or_else(|| format!("no symmetric partner at time {j}"))?
        };
        let sym = Interval::new(b, other);
        if !sym.contains_interval(&iterates[j].1, slack) {
            return Err(format!("orbit interval {j} is not bounded by the periodic point"));
        }
        visits.push(CriticalVisit {
            time: j,
            level: c.level,
            critical_index: ci,
            critical_point: c.x,
            beta: b,
            partner: other,
            flipped: c.x - b < 0.0,
        });
    }

    // Each first-return branch must be unimodal and land in the next symmetrized interval.
    for m in 0..visits.len() {
        let v = visits[m];
        let next = visits.get(m + 1).copied().unwrap_or(visits[0]);
        let steps = visits.get(m + 1).map_or(k, |w| w.time) - v.time;
        let mut iv = v.interval();
        for s in 0..steps {
            let level = (v.level + s) % levels;
            if s > 0 && crits.iter().any(|c| c.level == level && c.x > iv.lo && c.x < iv.hi) {
                return Err(format!("return branch from time {} is not unimodal", v.time));
            }
            iv = image_interval(fd, level, iv);
        }
        if !next.interval().contains_interval(&iv, slack) {
            return Err(format!("return branch from time {} overshoots", v.time));
        }
    }

    Ok(RestrictiveIntervalCycle {
        dynamics: f.clone(),
        period: k,
        p,
        beta,
        multiplier: mult.value,
        iterates,
        touched,
        visits,
    })
}

/// Re-check every defining condition of a cycle.
pub fn verify_cycle(cycle: &RestrictiveIntervalCycle) -> Result<()> {
    let other = if cycle.p.lo == cycle.beta { cycle.p.hi } else { cycle.p.lo };
    let fresh = assemble(&cycle.dynamics, cycle.period, cycle.beta, other).map_err(Error::InvalidCycle)?;
    if fresh.multiplier.abs() <= 1.0 + AMBIGUITY_BAND {
        return Err(Error::InvalidCycle(format!(
            "boundary multiplier {} is not repelling",
            fresh.multiplier
        )));
    }
    if fresh.visits.len() != cycle.visits.len() || fresh.touched != cycle.touched {
        return Err(Error::InvalidCycle("critical visits changed on re-verification".into()));
    }
    Ok(())
}

/// Read the marked combinatorial data off a cycle.
pub fn extract_mcd(cycle: &RestrictiveIntervalCycle) -> MarkedCombinatorialData {
    let k = cycle.period;
    let levels = cycle.dynamics.levels();
    let mut order = Vec::new();
    for a in 0..k {
        for b in 0..k {
            let (la, ia) = cycle.iterates[a];
            let (lb, ib) = cycle.iterates[b];
            if a != b && la == lb && ia.mid() < ib.mid() {
                order.push((a, b));
            }
        }
    }
    order.sort_unstable();
    let marks = cycle
        .touched
        .iter()
        .enumerate()
        .filter_map(|(j, t)| t.map(|_| j))
        .collect();
    let successor = (0..k)
        .map(|i| {
            let (level, iv) = cycle.iterates[i];
            let img = image_interval(cycle.dynamics.as_ref(), level, iv);
            (0..k)
                .find(|&t| {
                    cycle.iterates[t].0 == (level + 1) % levels
                        && cycle.iterates[t].1.contains_interval(&img, 1e-9 * (1.0 + img.len()))
                })
                .unwrap_or((i + 1) % k)
        })
        .collect();
    MarkedCombinatorialData {
        period: k,
        levels,
        order,
        marks,
        successor,
    }
}

/// First-return branch of a cycle in the affine charts of two consecutive visits, shifted so that
/// `-1` maps to `-1` exactly.
#[derive(Debug, Clone)]
pub struct ComposedBranch {
    parent: Arc<dyn IntervalDynamics>,
    level: usize,
    steps: usize,
    c_in: f64,
    s_in: f64,
    c_out: f64,
    s_out: f64,
    offset: f64,
    error: f64,
    right: f64,
    even: bool,
}

impl ComposedBranch {
    fn raw(&self, y: f64) -> (f64, f64) {
        let x = self.c_in + y * self.s_in;
        let (q, d) = iterate_raw(self.parent.as_ref(), LevelPoint::new(x, self.level), self.steps);
        ((q.x - self.c_out) / self.s_out, d * self.s_in / self.s_out)
    }

    /// Value of the unshifted rescaled return at -1 plus one; zero in exact arithmetic.
    pub fn normalization_residual(&self) -> f64 {
        self.offset
    }
}

impl Branch for ComposedBranch {
    fn eval(&self, y: f64) -> f64 {
        self.raw(y).0 - self.offset
    }

    fn deriv(&self, y: f64) -> f64 {
        self.raw(y).1
    }

    fn eval_with_deriv(&self, y: f64) -> (f64, f64) {
        let (v, d) = self.raw(y);
        (v - self.offset, d)
    }

    fn critical_point(&self) -> f64 {
        0.0
    }

    fn domain(&self) -> Interval {
        Interval { lo: -1.0, hi: self.right }
    }

    fn is_even(&self) -> bool {
        self.even
    }

    fn error_estimate(&self) -> f64 {
        self.error
    }
}

fn composed_branches(cycle: &RestrictiveIntervalCycle) -> Vec<ComposedBranch> {
    let steps = cycle.branch_steps();
    let n = cycle.visits.len();
    (0..n)
        .map(|m| {
            let v = cycle.visits[m];
            let w = cycle.visits[(m + 1) % n];
            let even = cycle.dynamics.is_even(v.level) && cycle.dynamics.critical_points(v.level).len() == 1;
            let right = if even && v.critical_point == 0.0 && v.partner == -v.beta {
                1.0
            } else {
                (v.partner - v.critical_point) / v.scale()
            };
            let mut b = ComposedBranch {
                parent: cycle.dynamics.clone(),
                level: v.level,
                steps: steps[m],
                c_in: v.critical_point,
                s_in: v.scale(),
                c_out: w.critical_point,
                s_out: w.scale(),
                offset: 0.0,
                error: 0.0,
                right,
                even,
            };
            b.offset = b.raw(-1.0).0 + 1.0;
            // Parent errors and rounding accumulate once per composed step, then get rescaled.
            let per_step = cycle.dynamics.error_estimate() + 4.0 * f64::EPSILON;
            b.error = b.offset.abs() + per_step * b.steps as f64 / b.s_out.abs();
            b
        })
        .collect()
}

/// The renormalization of the map carrying `cycle`: one rescaled first-return branch per critical
/// visit, in normal form.
pub fn renormalize(cycle: &RestrictiveIntervalCycle) -> Result<NormalizedExtendedMap> {
    let branches = composed_branches(cycle);
    if let Some(b) = branches
        .iter()
        .find(|b| b.normalization_residual().abs() > NORMALIZATION_TOLERANCE)
    {
        return Err(Error::PrecisionExhausted {
            level: 0,
            residual: b.normalization_residual().abs(),
        });
    }
    let arcs: Vec<Arc<dyn Branch>> = branches.into_iter().map(|b| Arc::new(b) as Arc<dyn Branch>).collect();
    NormalizedExtendedMap::new(arcs).map_err(|e| Error::InvalidCycle(e.to_string()))
}

/// Affine chart from a tower level's branch coordinate back to the input map:
/// `x = center + scale * y` on input level `level`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub level: usize,
    pub center: f64,
    pub scale: f64,
    /// Input-map iterates composed in this branch.
    pub steps: usize,
}

impl Chart {
    pub fn to_input(&self, y: f64) -> f64 {
        self.center + self.scale * y
    }

    pub fn interval_to_input(&self, iv: Interval) -> Interval {
        Interval::new(self.to_input(iv.lo), self.to_input(iv.hi))
    }
}

#[derive(Debug, Clone)]
pub struct TowerLevel {
    pub map: NormalizedExtendedMap,
    /// Cycle and combinatorics of this level, when it renormalizes.
    pub cycle: Option<RestrictiveIntervalCycle>,
    pub mcd: Option<MarkedCombinatorialData>,
    /// Per branch, the chart back to the input map.
    pub charts: Vec<Chart>,
}

/// Why a tower stopped growing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TowerStop {
    DepthReached,
    NotRenormalizable { level: usize },
    PrecisionExhausted { level: usize, residual: f64 },
    Ambiguous { level: usize, multiplier: f64 },
}

#[derive(Debug, Clone)]
pub struct RenormTower {
    pub levels: Vec<TowerLevel>,
    pub stop: TowerStop,
}

impl RenormTower {
    /// Number of successful renormalizations.
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn word(&self) -> Vec<MarkedCombinatorialData> {
        self.levels.iter().filter_map(|l| l.mcd.clone()).collect()
    }

    /// Period of each level's cycle measured in input-map iterates; level 0 counts one pass
    /// through the input levels.
    pub fn periods(&self) -> Vec<usize> {
        self.levels
            .iter()
            .map(|l| l.charts.iter().map(|c| c.steps).sum())
            .collect()
    }

    /// Largest ratio `N_{k+1} / N_k` over the computed levels.
    pub fn ratio_bound(&self) -> Option<f64> {
        let p = self.periods();
        p.windows(2)
            .map(|w| w[1] as f64 / w[0] as f64)
            .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))))
    }

    /// Restrictive interval of level k (k >= 1) in input coordinates, on the input level of the
    /// base critical point.
    pub fn restrictive_interval_input(&self, k: usize) -> Option<(usize, Interval)> {
        let lvl = self.levels.get(k)?;
        let chart = lvl.charts[0];
        let dom = lvl.map.branch(0).domain();
        Some((chart.level, chart.interval_to_input(dom)))
    }

    /// Signed rescaling factors `c - beta` of each visit at each renormalized level.
    pub fn rescalings(&self) -> Vec<Vec<f64>> {
        self.levels
            .iter()
            .filter_map(|l| l.cycle.as_ref())
            .map(|c| c.visits.iter().map(|v| v.scale()).collect())
            .collect()
    }

    pub fn summary(&self) -> TowerSummary {
        let periods = self.periods();
        TowerSummary {
            depth: self.depth(),
            stop: self.stop.clone(),
            periods: periods.clone(),
            ratio_bound: self.ratio_bound(),
            levels: self
                .levels
                .iter()
                .enumerate()
                .filter_map(|(k, l)| {
                    let c = l.cycle.as_ref()?;
                    Some(LevelSummary {
                        level: k,
                        period: c.period,
                        mcd: l.mcd.clone()?,
                        beta: c.beta,
                        multiplier: c.multiplier,
                        interval: c.p,
                        rescale: c.visits.iter().map(|v| v.scale()).collect(),
                        return_times: c.return_times(),
                    })
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: usize,
    pub period: usize,
    pub mcd: MarkedCombinatorialData,
    pub beta: f64,
    pub multiplier: f64,
    pub interval: Interval,
    pub rescale: Vec<f64>,
    pub return_times: Vec<usize>,
}

/// Serializable view of a tower.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TowerSummary {
    pub depth: usize,
    pub stop: TowerStop,
    pub periods: Vec<usize>,
    pub ratio_bound: Option<f64>,
    pub levels: Vec<LevelSummary>,
}

/// Renormalize repeatedly, up to `depth` times.
pub fn build_tower(f: &NormalizedExtendedMap, depth: usize, max_period_per_level: usize) -> Result<RenormTower> {
    let charts0: Vec<Chart> = (0..f.n())
        .map(|i| Chart {
            level: i,
            center: f.crit(i),
            scale: 1.0,
            steps: 1,
        })
        .collect();
    let mut levels = vec![TowerLevel {
        map: f.clone(),
        cycle: None,
        mcd: None,
        charts: charts0,
    }];
    let mut stop = TowerStop::DepthReached;
    for k in 0..depth {
        let current = levels.last().expect("tower has a base level");
        let cycle = match find_restrictive_interval(&current.map, max_period_per_level) {
            Ok(Some(c)) => c,
            Ok(None) => {
                stop = TowerStop::NotRenormalizable { level: k };
                break;
            }
            Err(Error::NumericalAmbiguity { multiplier, .. }) => {
                stop = TowerStop::Ambiguous { level: k, multiplier };
                break;
            }
            Err(e) => return Err(e),
        };
        let next = match renormalize(&cycle) {
            Ok(m) => m,
            Err(Error::PrecisionExhausted { residual, .. }) => {
                stop = TowerStop::PrecisionExhausted { level: k + 1, residual };
                break;
            }
            Err(e) => return Err(e),
        };
        let steps = cycle.branch_steps();
        let n = current.map.n();
        let charts: Vec<Chart> = cycle
            .visits
            .iter()
            .enumerate()
            .map(|(m, v)| {
                let host = current.charts[v.level];
                let input_steps = (0..steps[m])
                    .map(|s| current.charts[(v.level + s) % n].steps)
                    .sum();
                Chart {
                    level: host.level,
                    center: host.to_input(v.critical_point),
                    scale: host.scale * v.scale(),
                    steps: input_steps,
                }
            })
            .collect();
        let mcd = extract_mcd(&cycle);
        let last = levels.last_mut().expect("tower has a base level");
        last.cycle = Some(cycle);
        last.mcd = Some(mcd);
        levels.push(TowerLevel {
            map: next,
            cycle: None,
            mcd: None,
            charts,
        });
    }
    Ok(RenormTower { levels, stop })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evaluate, find_periodic_point};
    use crate::families::{quad_composition, QuadCompositionParams};

    fn quad(lambda: f64) -> NormalizedExtendedMap {
        quad_composition(&QuadCompositionParams::new(vec![lambda]).unwrap())
    }

    const LAMBDA_STAR: f64 = 0.809_016_994_374_947_5;

    #[test]
    fn superstable_period_two_cycle() {
        let f = quad(LAMBDA_STAR);
        let c = find_restrictive_interval(&f, 16).unwrap().unwrap();
        assert_eq!(c.period, 2);
        let beta = (2.0 * LAMBDA_STAR - 1.0) / (2.0 * LAMBDA_STAR);
        assert!((c.beta - beta).abs() < 1e-14);
        assert!((c.p.lo + beta).abs() < 1e-14 && (c.p.hi - beta).abs() < 1e-14);
        assert_eq!(c.return_times(), vec![0]);
    }

    #[test]
    fn no_cycle_at_full_map_or_superstable_fixed_point() {
        assert!(find_restrictive_interval(&quad(1.0), 16).unwrap().is_none());
        assert!(find_restrictive_interval(&quad(0.5), 16).unwrap().is_none());
    }

    #[test]
    fn doubling_mcd() {
        let c = find_restrictive_interval(&quad(0.85), 16).unwrap().unwrap();
        let m = extract_mcd(&c);
        assert_eq!(m, MarkedCombinatorialData::doubling());
        assert_eq!(m.label(), "2:0<1|*0");
    }

    #[test]
    fn renormalized_map_at_superstable_parameter() {
        let f = quad(LAMBDA_STAR);
        let c = find_restrictive_interval(&f, 16).unwrap().unwrap();
        let g = renormalize(&c).unwrap();
        assert_eq!(evaluate(&g, LevelPoint::new(-1.0, 0)).unwrap().x, -1.0);
        assert!(evaluate(&g, LevelPoint::new(0.0, 0)).unwrap().x.abs() < 1e-12);
        let d = g.branch(0).deriv(-1.0);
        let (_, m) = find_periodic_point(&f, 2, LevelPoint::new(c.beta, 0), 1e-15).unwrap();
        assert!((d / m.value - 1.0).abs() < 1e-10);
        assert_eq!(g.domain_right(0), 1.0);
    }

    #[test]
    fn verify_is_idempotent() {
        for lambda in [0.8, 0.87, 0.892, 0.96] {
            if let Some(c) = find_restrictive_interval(&quad(lambda), 16).unwrap() {
                verify_cycle(&c).unwrap();
            }
        }
    }

    #[test]
    fn tower_depths() {
        let t = build_tower(&quad(LAMBDA_STAR), 3, 64).unwrap();
        assert_eq!(t.depth(), 1);
        assert_eq!(t.stop, TowerStop::NotRenormalizable { level: 1 });
        let t = build_tower(&quad(1.0), 3, 64).unwrap();
        assert_eq!(t.depth(), 0);
    }

    #[test]
    fn period_three_window() {
        // The superstable period-3 parameter of 1 - mu x^2 is mu = 1.7548776662466927.
        let mu: f64 = 1.754_877_666_246_692_7;
        let lambda = (1.0 + (1.0 + 4.0 * mu).sqrt()) / 4.0;
        let c = find_restrictive_interval(&quad(lambda), 16).unwrap().unwrap();
        assert_eq!(c.period, 3);
        let m = extract_mcd(&c);
        assert_eq!(m.arrangement(), vec![vec![2, 0, 1]]);
        assert_eq!(m.successor, vec![1, 2, 0]);
    }
}
