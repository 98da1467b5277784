//! Finite-depth certificates for solenoidal attractors, and the induced expanding map assembled
//! from the critical intervals of a renormalization tower.
//!
//! Everything here works in the coordinates of the input map. A tower level `k >= 1` contributes
//! the orbit of its restrictive interval (for certificates) and its symmetrized critical intervals
//! `Q^k_q`, read off the tower charts (for the induced map). Level 0 takes the whole branch domain
//! as the critical interval of each critical point.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{image_interval, iterate_raw, Interval, IntervalDynamics, LevelPoint, NormalizedExtendedMap};
use crate::error::{Error, Result};
use crate::numeric;
use crate::renorm::{build_tower, RenormTower};

/// Containment and disjointness slack used by the solenoid checks.
pub const CERTIFICATE_SLACK: f64 = 1e-10;
/// Largest accepted mismatch between a branch image endpoint and its target endpoint.
pub const MARKOV_TOLERANCE: f64 = 1e-9;

/// One interval `I^k_j` of a certificate level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelInterval {
    /// Which interval of the extended map hosts it.
    pub level: usize,
    pub interval: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolenoidVerdict {
    /// Every level up to the requested depth passed. Infinite depth is not proven.
    DepthLimited,
    /// The tower stopped before the requested depth, so the attractor is not solenoidal.
    Terminated { level: usize, stop: String },
    /// A level broke disjointness, invariance or nesting.
    Rejected { level: usize, reason: String },
    /// Consecutive periods grew faster than the ratio bound.
    RatioExceeded { level: usize, ratio: f64 },
}

/// Nested periodic interval families `I^k_j`, `k = 1..=depth`, of a renormalizable map.
///
/// The attractor itself is approximated by the union of the deepest level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolenoidCertificate {
    /// `n_k`: period of level `k`, in iterates of the input map.
    pub periods: Vec<usize>,
    pub levels: Vec<Vec<LevelInterval>>,
    /// `max n_{k+1} / n_k` over the certified levels.
    pub ratio_bound: Option<f64>,
    pub depth: usize,
    pub verdict: SolenoidVerdict,
}

impl SolenoidCertificate {
    pub fn is_certified(&self) -> bool {
        self.verdict == SolenoidVerdict::DepthLimited
    }

    /// Total length of the deepest level, the finite-depth stand-in for the attractor.
    pub fn attractor_length(&self) -> f64 {
        self.levels.last().map_or(0.0, |l| l.iter().map(|i| i.interval.len()).sum())
    }
}

/// Build nested cycles up to `max_depth` and check, level by level, disjoint interiors,
/// `f(I^k_j) ⊂ I^k_{j+1}`, that every critical point is covered, nesting in the previous level
/// and `n_{k+1} / n_k <= ratio_bound`. `None` when `f` does not renormalize at all.
pub fn detect_solenoid(f: &NormalizedExtendedMap, max_depth: usize, ratio_bound: f64) -> Result<Option<SolenoidCertificate>> {
    if ratio_bound.is_nan() || ratio_bound < 1.0 {
        return Err(Error::InvalidInput(format!("ratio bound {ratio_bound} must be at least 1")));
    }
    // Periods somewhat past the bound are still searched so that a violation is reported as
    // such instead of as a terminated tower.
    let max_period = 2 * f.n() * (ratio_bound.ceil() as usize).max(2);
    let tower = build_tower(f, max_depth, max_period)?;
    if tower.depth() == 0 {
        return Ok(None);
    }
    let mut cert = SolenoidCertificate {
        periods: Vec::new(),
        levels: Vec::new(),
        ratio_bound: None,
        depth: 0,
        verdict: SolenoidVerdict::DepthLimited,
    };
    for k in 1..=tower.depth() {
        let intervals = level_intervals(f, &tower, k);
        if let Err(reason) = check_level(f, &intervals, cert.levels.last()) {
            cert.verdict = SolenoidVerdict::Rejected { level: k, reason };
            return Ok(Some(cert));
        }
        let n = intervals.len();
        if let Some(&prev) = cert.periods.last() {
            let ratio = n as f64 / prev as f64;
            cert.ratio_bound = Some(cert.ratio_bound.map_or(ratio, |r: f64| r.max(ratio)));
            if ratio > ratio_bound {
                cert.verdict = SolenoidVerdict::RatioExceeded { level: k, ratio };
                return Ok(Some(cert));
            }
        }
        cert.periods.push(n);
        cert.levels.push(intervals);
        cert.depth = k;
    }
    if tower.depth() < max_depth {
        cert.verdict = SolenoidVerdict::Terminated {
            level: tower.depth() + 1,
            stop: format!("{:?}", tower.stop),
        };
    }
    Ok(Some(cert))
}

/// Orbit of the restrictive interval of level `k`, pushed forward by the input map.
fn level_intervals(f: &NormalizedExtendedMap, tower: &RenormTower, k: usize) -> Vec<LevelInterval> {
    let parent = &tower.levels[k - 1];
    let cycle = parent.cycle.as_ref().expect("a renormalized level records its cycle");
    let chart = parent.charts[0];
    let n: usize = tower.levels[k].charts.iter().map(|c| c.steps).sum();
    let mut level = chart.level;
    let mut iv = chart.interval_to_input(cycle.p);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(LevelInterval { level, interval: iv });
        iv = image_interval(f, level, iv);
        level = (level + 1) % f.n();
    }
    out
}

fn check_level(f: &NormalizedExtendedMap, iv: &[LevelInterval], prev: Option<&Vec<LevelInterval>>) -> std::result::Result<(), String> {
    let n = iv.len();
    for a in 0..n {
        for b in (a + 1)..n {
            if iv[a].level == iv[b].level && iv[a].interval.overlap(&iv[b].interval) > CERTIFICATE_SLACK {
                return Err(format!("intervals {a} and {b} overlap"));
            }
        }
    }
    for j in 0..n {
        let next = iv[(j + 1) % n];
        let image = image_interval(f, iv[j].level, iv[j].interval);
        if next.level != (iv[j].level + 1) % f.n() || !next.interval.contains_interval(&image, CERTIFICATE_SLACK) {
            return Err(format!("the image of interval {j} is not inside interval {}", (j + 1) % n));
        }
    }
    for c in 0..f.n() {
        if !iv.iter().any(|i| i.level == c && i.interval.contains(f.crit(c), 0.0)) {
            return Err(format!("critical point {c} is not covered"));
        }
    }
    if let Some(prev) = prev {
        let m = prev.len();
        for (j, i) in iv.iter().enumerate() {
            let host = prev[j % m];
            if host.level != i.level || !host.interval.contains_interval(&i.interval, CERTIFICATE_SLACK) {
                return Err(format!("interval {j} is not nested in interval {} of the previous level", j % m));
            }
        }
    }
    Ok(())
}

/// The critical interval `Q^k_q` of each critical point, with its successor return time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalInterval {
    pub depth: usize,
    /// Index of the critical point, equal to the interval of the extended map hosting it.
    pub critical: usize,
    pub interval: Interval,
    /// `n^k`: iterates until the orbit of this interval next meets a critical interval.
    pub return_time: usize,
}

/// One branch `R^k_{-i}` of the induced map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InducedBranch {
    pub depth: usize,
    /// Critical point `r` whose interval `R^k_0` this branch pulls back.
    pub target_critical: usize,
    /// Pullback time `i`: `F^i` maps the branch monotonically onto `R^k_0`.
    pub pullback: usize,
    pub level: usize,
    pub interval: Interval,
    /// Critical point whose interval `Q^{k-1}_q` hosts the branch.
    pub host: usize,
    /// `n_s^{k-1}`: the branch is `F` iterated this many times.
    pub return_time: usize,
    /// Largest distance between an image endpoint and the matching endpoint of the target.
    pub endpoint_error: f64,
}

impl InducedBranch {
    /// Pullback index of the image branch; 0 means the image is `R^k_0` itself.
    pub fn target_pullback(&self) -> usize {
        self.pullback - self.return_time
    }
}

/// Finite-depth real induced map `G`: on each branch interval it is a fixed iterate of the
/// input map.
#[derive(Debug, Clone)]
pub struct InducedMap {
    pub map: NormalizedExtendedMap,
    pub depth: usize,
    /// `critical[k][q]` is `Q^k_q` for `k = 0..=depth`.
    pub critical: Vec<Vec<CriticalInterval>>,
    /// Every pullback `R^k_{-i}`, admitted into the domain or not, for `k = 1..=depth`.
    pub pullbacks: Vec<Vec<Vec<LevelInterval>>>,
    pub branches: Vec<InducedBranch>,
}

impl InducedMap {
    /// Largest endpoint mismatch over all branches.
    pub fn markov_error(&self) -> f64 {
        self.branches.iter().map(|b| b.endpoint_error).fold(0.0, f64::max)
    }

    /// Branch used at `p`: the deepest branch containing it.
    pub fn branch_at(&self, p: LevelPoint) -> Option<&InducedBranch> {
        self.branches
            .iter()
            .filter(|b| b.level == p.level && b.interval.contains(p.x, 0.0))
            .max_by_key(|b| b.depth)
    }

    /// `G(p)` and `DG(p)`, or `None` off the domain.
    pub fn eval(&self, p: LevelPoint) -> Option<(LevelPoint, f64)> {
        let b = self.branch_at(p)?;
        Some(iterate_raw(&self.map, p, b.return_time))
    }

    /// Whether `p` lies in a deepest critical interval, where the finite-depth domain has no
    /// branches.
    pub fn in_core(&self, p: LevelPoint) -> bool {
        self.critical[self.depth]
            .iter()
            .any(|q| q.critical == p.level && q.interval.contains(p.x, 0.0))
    }

    /// Points of the forward critical orbits, `steps` iterates of each critical point.
    pub fn postcritical_orbit(&self, steps: usize) -> Vec<LevelPoint> {
        let mut out = Vec::with_capacity(steps * self.map.n());
        for c in 0..self.map.n() {
            let mut p = LevelPoint::new(self.map.crit(c), c);
            for _ in 0..steps {
                p = iterate_raw(&self.map, p, 1).0;
                out.push(p);
            }
        }
        out
    }
}

/// Critical intervals of every tower level up to `depth`.
fn critical_intervals(tower: &RenormTower, depth: usize) -> Vec<Vec<CriticalInterval>> {
    (0..=depth)
        .map(|k| {
            tower.levels[k]
                .charts
                .iter()
                .enumerate()
                .map(|(q, c)| CriticalInterval {
                    depth: k,
                    critical: c.level,
                    interval: c.interval_to_input(tower.levels[k].map.domain(q)),
                    return_time: c.steps,
                })
                .collect()
        })
        .collect()
}

/// Monotone lap of `level` that contains `x`.
fn lap_of(f: &NormalizedExtendedMap, level: usize, x: f64) -> Interval {
    let d = f.domain(level);
    let c = f.crit(level);
    if x < c {
        Interval::new(d.lo, c)
    } else {
        Interval::new(c, d.hi)
    }
}

/// Component of `F^{-1}(target)` inside the lap of `x`.
fn pull_back_once(f: &NormalizedExtendedMap, level: usize, x: f64, target: Interval) -> Option<Interval> {
    let lap = lap_of(f, level, x);
    let g = |y: f64| f.step_raw(level, y).0;
    let solve = |v: f64| {
        let (a, b) = (g(lap.lo) - v, g(lap.hi) - v);
        if a == 0.0 {
            Some(lap.lo)
        } else if b == 0.0 {
            Some(lap.hi)
        } else if a.signum() != b.signum() {
            numeric::bisect(|y| g(y) - v, lap.lo, lap.hi, 0.0).ok()
        } else {
            None
        }
    };
    Some(Interval::new(solve(target.lo)?, solve(target.hi)?))
}

/// Assemble the induced map of depth `depth` from a tower: pull back each `R^k_0 = Q^k_r` along
/// the critical orbit that lands in it, keep the pullbacks inside some `Q^{k-1}_q`, and give each
/// kept branch the return time of its host.
pub fn build_induced_map(tower: &RenormTower, depth: usize) -> Result<InducedMap> {
    if depth < 1 || tower.depth() < depth {
        return Err(Error::InvalidInput(format!(
            "induced map of depth {depth} needs a tower of at least that depth (have {})",
            tower.depth()
        )));
    }
    let f = tower.levels[0].map.clone();
    let nl = f.n();
    let critical = critical_intervals(tower, depth);
    let mut pullbacks = Vec::with_capacity(depth);
    let mut branches = Vec::new();
    for k in 1..=depth {
        let crits = &critical[k];
        let mut per_r = Vec::with_capacity(crits.len());
        for (ri, r) in crits.iter().enumerate() {
            let q = crits[(ri + crits.len() - 1) % crits.len()];
            let n = q.return_time;
            let qc = f.crit(q.critical);
            // Points F^{n-i}(c_q) for i = n-1, ..., 1, each on the level it lives on.
            let orbit: Vec<LevelPoint> = (0..n)
                .scan(LevelPoint::new(qc, q.critical), |p, _| {
                    let cur = *p;
                    *p = iterate_raw(&f, *p, 1).0;
                    Some(cur)
                })
                .collect();
            let mut chain = Vec::with_capacity(n);
            let mut target = LevelInterval {
                level: r.critical,
                interval: r.interval,
            };
            chain.push(target);
            for i in 1..n {
                let p = orbit[n - i];
                let iv = pull_back_once(&f, p.level, p.x, target.interval)
                    .ok_or(Error::PullbackFailure { level: k, step: i })?;
                target = LevelInterval {
                    level: p.level,
                    interval: iv,
                };
                chain.push(target);
            }
            for (i, li) in chain.iter().enumerate().skip(1) {
                let Some(host) = critical[k - 1]
                    .iter()
                    .find(|h| h.critical == li.level && h.interval.contains_interval(&li.interval, 1e-12))
                else {
                    continue;
                };
                if host.return_time > i {
                    return Err(Error::PullbackFailure { level: k, step: i });
                }
                let target = chain[i - host.return_time];
                let a = iterate_raw(&f, LevelPoint::new(li.interval.lo, li.level), host.return_time).0.x;
                let b = iterate_raw(&f, LevelPoint::new(li.interval.hi, li.level), host.return_time).0.x;
                let image = Interval::new(a, b);
                let endpoint_error = (image.lo - target.interval.lo)
                    .abs()
                    .max((image.hi - target.interval.hi).abs());
                branches.push(InducedBranch {
                    depth: k,
                    target_critical: r.critical,
                    pullback: i,
                    level: li.level,
                    interval: li.interval,
                    host: host.critical,
                    return_time: host.return_time,
                    endpoint_error,
                });
            }
            per_r.push(chain);
        }
        pullbacks.push(per_r);
    }
    debug_assert!(branches.iter().all(|b| b.level < nl));
    Ok(InducedMap {
        map: f,
        depth,
        critical,
        pullbacks,
        branches,
    })
}

/// Convenience wrapper: build the tower of `f` and its induced map.
pub fn induced_map_of(f: &NormalizedExtendedMap, depth: usize, max_period: usize) -> Result<InducedMap> {
    let tower = build_tower(f, depth, max_period)?;
    if tower.depth() < depth {
        return Err(Error::InvalidInput(format!(
            "tower stopped at depth {} ({:?}), {depth} requested",
            tower.depth(),
            tower.stop
        )));
    }
    build_induced_map(&tower, depth)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionStats {
    pub samples: usize,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

/// Per-branch and overall `|DG|` statistics over `samples` equidistributed interior points per
/// branch. `None` entries mean no samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub per_branch: Vec<Option<ExpansionStats>>,
    pub overall: Option<ExpansionStats>,
}

fn stats(mut v: Vec<f64>) -> Option<ExpansionStats> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(ExpansionStats {
        samples: v.len(),
        min: v[0],
        median: v[v.len() / 2],
        max: v[v.len() - 1],
    })
}

pub fn expansion_report(g: &InducedMap, samples: usize) -> ExpansionReport {
    // Golden-ratio Weyl sequence: deterministic and evenly spread.
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let per: Vec<Vec<f64>> = g
        .branches
        .par_iter()
        .map(|b| {
            (0..samples)
                .map(|s| {
                    let t = (0.5 + golden * s as f64).fract();
                    let x = b.interval.lo + t * b.interval.len();
                    iterate_raw(&g.map, LevelPoint::new(x, b.level), b.return_time).1.abs()
                })
                .collect()
        })
        .collect();
    ExpansionReport {
        overall: stats(per.iter().flatten().copied().collect()),
        per_branch: per.into_iter().map(stats).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EscapeOutcome {
    /// Left the domain and the deepest critical intervals.
    Escaped,
    /// Reached a deepest critical interval, where the finite-depth map stops resolving.
    Unresolved,
    /// Stayed in the domain for every step.
    Stayed,
}

/// Iterate `G` from `p` for at most `steps` steps.
pub fn escape_outcome(g: &InducedMap, p: LevelPoint, steps: usize) -> EscapeOutcome {
    let mut p = p;
    for _ in 0..steps {
        match g.eval(p) {
            Some((q, _)) => p = q,
            None => break,
        }
    }
    if g.branch_at(p).is_some() {
        EscapeOutcome::Stayed
    } else if g.in_core(p) {
        EscapeOutcome::Unresolved
    } else {
        EscapeOutcome::Escaped
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeCounts {
    pub escaped: usize,
    pub unresolved: usize,
    pub stayed: usize,
}

impl EscapeCounts {
    fn tally(outcomes: impl Iterator<Item = EscapeOutcome>) -> Self {
        let mut c = EscapeCounts {
            escaped: 0,
            unresolved: 0,
            stayed: 0,
        };
        for o in outcomes {
            match o {
                EscapeOutcome::Escaped => c.escaped += 1,
                EscapeOutcome::Unresolved => c.unresolved += 1,
                EscapeOutcome::Stayed => c.stayed += 1,
            }
        }
        c
    }
}

/// Finite-sample escape dichotomy: random domain points should leave, postcritical points in the
/// domain should not. Also reports how far `G` moves sampled postcritical points from the sampled
/// postcritical set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeReport {
    pub steps: usize,
    pub random: EscapeCounts,
    pub postcritical: EscapeCounts,
    pub postcritical_invariance: f64,
}

pub fn escape_dichotomy(g: &InducedMap, random: usize, postcritical: usize, steps: usize, seed: u64) -> EscapeReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total: f64 = g.branches.iter().map(|b| b.interval.len()).sum();
    let random_points: Vec<LevelPoint> = (0..random)
        .map(|_| {
            let mut u = rng.gen::<f64>() * total;
            let b = g
                .branches
                .iter()
                .find(|b| {
                    u -= b.interval.len();
                    u <= 0.0
                })
                .unwrap_or_else(|| g.branches.last().expect("the induced map has branches"));
            LevelPoint::new(b.interval.lo + rng.gen::<f64>() * b.interval.len(), b.level)
        })
        .collect();

    // A long orbit to serve as the closure of the postcritical set; the samples come from its
    // start so that their images stay inside it.
    let max_return = g.branches.iter().map(|b| b.return_time).max().unwrap_or(1);
    let orbit_len = 4 * postcritical.max(1) + steps * max_return + max_return;
    let orbit = g.postcritical_orbit(orbit_len);
    let mut sorted: Vec<Vec<f64>> = vec![Vec::new(); g.map.n()];
    for p in &orbit {
        sorted[p.level].push(p.x);
    }
    sorted.iter_mut().for_each(|v| v.sort_by(f64::total_cmp));
    let nearest = |p: LevelPoint| {
        let v = &sorted[p.level];
        let i = v.partition_point(|&x| x < p.x);
        [i.checked_sub(1), Some(i)]
            .into_iter()
            .flatten()
            .filter_map(|j| v.get(j))
            .map(|x| (x - p.x).abs())
            .fold(f64::INFINITY, f64::min)
    };
    let post: Vec<LevelPoint> = orbit
        .iter()
        .take(orbit_len.min(4 * postcritical.max(1)))
        .copied()
        .filter(|p| g.branch_at(*p).is_some())
        .take(postcritical)
        .collect();
    let invariance = post
        .iter()
        .filter_map(|p| g.eval(*p))
        .map(|(q, _)| nearest(q))
        .fold(0.0, f64::max);

    EscapeReport {
        steps,
        random: EscapeCounts::tally(random_points.par_iter().map(|p| escape_outcome(g, *p, steps)).collect::<Vec<_>>().into_iter()),
        postcritical: EscapeCounts::tally(post.par_iter().map(|p| escape_outcome(g, *p, steps)).collect::<Vec<_>>().into_iter()),
        postcritical_invariance: invariance,
    }
}
