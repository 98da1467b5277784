//! Parameter-space experiments: superstable parameters, stationary cascades, enumeration of
//! first-renormalization combinatorics, and nested covers of renormalizable parameters.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{IntervalDynamics, NormalizedExtendedMap};
use crate::error::{Error, Result};
use crate::families::{cubic_map, induce_extended_map, quad_composition, CubicParams, QuadCompositionParams};
use crate::numeric;
use crate::renorm::{build_tower, extract_mcd, find_restrictive_cycle, MarkedCombinatorialData};

/// Prescribed combinatorics of successive renormalizations.
pub type CombinatoricsWord = Vec<MarkedCombinatorialData>;

/// Width to which window edges are bisected.
pub const EDGE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Family {
    /// Compositions of `n` normalized quadratics, parameters `lambda_i` in `[0, 1]`.
    Quadcomp { n: usize },
    /// `z^3 - 3 a^2 z + b`, parameters `(a, b)`.
    Cubic,
}

impl Family {
    pub fn dimension(&self) -> usize {
        match self {
            Family::Quadcomp { n } => *n,
            Family::Cubic => 2,
        }
    }

    /// Number of critical points, the `n` of the type-n extended maps involved.
    pub fn critical_count(&self) -> usize {
        match self {
            Family::Quadcomp { n } => *n,
            Family::Cubic => 2,
        }
    }

    /// Parameter region used by covers and enumeration unless overridden.
    pub fn default_domain(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Family::Quadcomp { n } => (vec![0.0; *n], vec![1.0; *n]),
            Family::Cubic => (vec![0.55, -0.5], vec![0.95, 0.5]),
        }
    }

    /// Combinatorics of the first `depth` renormalizations at a parameter, each with period at
    /// most `max_period`. Shorter when the tower stops early.
    pub fn word_at(&self, params: &[f64], depth: usize, max_period: usize) -> Result<CombinatoricsWord> {
        if depth == 0 {
            return Ok(Vec::new());
        }
        match self {
            Family::Quadcomp { .. } => {
                let f = quad_composition(&QuadCompositionParams::new(params.to_vec())?);
                Ok(build_tower(&f, depth, max_period)?.word())
            }
            Family::Cubic => {
                let f = match cubic_map(CubicParams { a: params[0], b: params[1] }) {
                    Ok(f) => f,
                    Err(Error::DegenerateParams(_)) => return Ok(Vec::new()),
                    Err(e) => return Err(e),
                };
                let cycle = match find_restrictive_cycle(Arc::new(f), max_period) {
                    Ok(Some(c)) => c,
                    Ok(None) | Err(Error::NumericalAmbiguity { .. }) => return Ok(Vec::new()),
                    Err(e) => return Err(e),
                };
                let mut word = vec![extract_mcd(&cycle)];
                if depth > 1 {
                    match induce_extended_map(&cycle) {
                        Ok(ind) => word.extend(build_tower(&ind.map, depth - 1, max_period)?.word()),
                        Err(Error::PrecisionExhausted { .. }) | Err(Error::InvalidCycle(_)) => {}
                        Err(e) => return Err(e),
                    }
                }
                Ok(word)
            }
        }
    }

    /// The normalized extended map reached after `level` renormalizations, counting the induced
    /// map of the cubic as the first.
    pub fn renormalized_map(&self, params: &[f64], level: usize, max_period: usize) -> Result<NormalizedExtendedMap> {
        let (base, remaining) = match self {
            Family::Quadcomp { .. } => (quad_composition(&QuadCompositionParams::new(params.to_vec())?), level),
            Family::Cubic => {
                if level == 0 {
                    return Err(Error::InvalidInput("the cubic itself is not an extended map".into()));
                }
                let f = cubic_map(CubicParams { a: params[0], b: params[1] })?;
                let cycle = find_restrictive_cycle(Arc::new(f), max_period)?
                    .ok_or_else(|| Error::CycleMismatch("the cubic has no restrictive cycle".into()))?;
                (induce_extended_map(&cycle)?.map, level - 1)
            }
        };
        let tower = build_tower(&base, remaining, max_period)?;
        if tower.depth() < remaining {
            return Err(Error::CycleMismatch(format!(
                "only {} of {remaining} renormalizations exist ({:?})",
                tower.depth(),
                tower.stop
            )));
        }
        Ok(tower.levels[remaining].map.clone())
    }

    fn map(&self, params: &[f64]) -> Result<Arc<dyn IntervalDynamics>> {
        Ok(match self {
            Family::Quadcomp { .. } => Arc::new(quad_composition(&QuadCompositionParams::new(params.to_vec())?)),
            Family::Cubic => Arc::new(cubic_map(CubicParams { a: params[0], b: params[1] })?),
        })
    }
}

/// Box in parameter space certified with a combinatorics word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub level: usize,
    pub word: CombinatoricsWord,
}

impl ParameterBox {
    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn contains_box(&self, other: &ParameterBox) -> bool {
        self.lo.iter().zip(&other.lo).all(|(a, b)| a <= b) && self.hi.iter().zip(&other.hi).all(|(a, b)| b <= a)
    }

    pub fn periods(&self) -> Vec<usize> {
        self.word.iter().map(|s| s.period).collect()
    }
}

// ---------------------------------------------------------------------------------------------
// Kneading sequences of one-level maps.

/// Itinerary symbols of a superstable orbit: `true` for points right of the critical point,
/// listed for the iterates `1..period`.
pub fn kneading_of_mcd(s: &MarkedCombinatorialData) -> Vec<bool> {
    (1..s.period).map(|j| s.order.contains(&(0, j))).collect()
}

/// Substitution product of two superstable kneading words.
pub fn kneading_star(a: &[bool], b: &[bool]) -> Vec<bool> {
    let odd = a.iter().filter(|&&r| r).count() % 2 == 1;
    let mut out = a.to_vec();
    for &s in b {
        out.push(s ^ odd);
        out.extend_from_slice(a);
    }
    out
}

/// Kneading word of the superstable center of a one-level word.
pub fn kneading_of_word(word: &[MarkedCombinatorialData]) -> Vec<bool> {
    word.iter()
        .fold(Vec::new(), |acc, s| kneading_star(&acc, &kneading_of_mcd(s)))
}

fn quad_critical_orbit(lambda: f64, steps: usize) -> (f64, f64) {
    // Value of F^steps(0) and its derivative in lambda.
    let (mut x, mut dx) = (0.0f64, 0.0f64);
    for _ in 0..steps {
        let nx = -1.0 + 2.0 * lambda * (1.0 - x * x);
        dx = 2.0 * (1.0 - x * x) - 4.0 * lambda * x * dx;
        x = nx;
    }
    (x, dx)
}

/// Itinerary of the critical orbit; `None` if the orbit returns near the critical point early,
/// where the symbols are not determined.
fn quad_itinerary(lambda: f64, len: usize) -> Option<Vec<bool>> {
    let mut x = 0.0f64;
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        x = -1.0 + 2.0 * lambda * (1.0 - x * x);
        if x.abs() < 1e-9 {
            return None;
        }
        out.push(x > 0.0);
    }
    Some(out)
}

fn word_period(word: &[MarkedCombinatorialData]) -> usize {
    word.iter().map(|s| s.period).product()
}

// ---------------------------------------------------------------------------------------------
// Superstable parameters.

/// Parameter in `bracket` whose critical orbits realize `word` superstably.
///
/// One-level quadratic family: a safeguarded Newton solve of `F^N(0) = 0`, `N` the product of
/// the periods, checked against the kneading word of `word`. Several critical points: the
/// conditions "critical point m reaches the next critical point after its return time" solved by
/// damped Newton with a coordinate-bisection fallback, checked by rebuilding the tower.
pub fn superstable_parameter(family: &Family, word: &[MarkedCombinatorialData], bracket: &ParameterBox) -> Result<Vec<f64>> {
    match family {
        Family::Quadcomp { n: 1 } => {
            let nn = word_period(word);
            let (lo, hi) = (bracket.lo[0], bracket.hi[0]);
            let g = |l: f64| quad_critical_orbit(l, nn);
            if g(lo).0.signum() == g(hi).0.signum() {
                return Err(Error::NoSolutionInBracket(format!(
                    "F^{nn}(0) keeps its sign on [{lo}, {hi}]"
                )));
            }
            let l = numeric::newton_bracketed(g, lo, hi)?;
            check_kneading(l, word)?;
            Ok(vec![l])
        }
        _ => superstable_system(family, word, bracket),
    }
}

/// Plain bisection for the one-level quadratic family, used as an independent cross-check.
pub fn superstable_bisection(word: &[MarkedCombinatorialData], lo: f64, hi: f64) -> Result<f64> {
    let nn = word_period(word);
    let l = numeric::bisect(|l| quad_critical_orbit(l, nn).0, lo, hi, 0.0)?;
    check_kneading(l, word)?;
    Ok(l)
}

fn check_kneading(lambda: f64, word: &[MarkedCombinatorialData]) -> Result<()> {
    if word.iter().any(|s| s.levels != 1) {
        return Err(Error::InvalidInput("one-level family needs one-level combinatorics".into()));
    }
    let expected = kneading_of_word(word);
    let got = quad_itinerary(lambda, expected.len());
    if got.as_ref() != Some(&expected) {
        return Err(Error::WrongItinerary(format!(
            "itinerary at lambda = {lambda} differs from the kneading word of the requested combinatorics"
        )));
    }
    Ok(())
}

/// For a word on an n-critical-point family: per final branch, its starting critical point and
/// return time in input iterates.
fn composite_returns(family: &Family, word: &[MarkedCombinatorialData]) -> Vec<(usize, usize)> {
    let n = family.critical_count();
    // (input critical index, steps) for each branch of the current level.
    let (mut branches, rest): (Vec<(usize, usize)>, &[MarkedCombinatorialData]) = match family {
        Family::Quadcomp { .. } => ((0..n).map(|i| (i, 1)).collect(), word),
        Family::Cubic => {
            // The first cycle lives on the one-level cubic; its visits are -|a| then |a|.
            let s = &word[0];
            let br = (0..s.marks.len())
                .map(|m| {
                    let next = s.marks.get(m + 1).copied().unwrap_or(s.period);
                    (m, next - s.marks[m])
                })
                .collect();
            (br, &word[1..])
        }
    };
    for s in rest {
        let nl = branches.len();
        branches = (0..s.marks.len())
            .map(|m| {
                let start = s.marks[m];
                let next = s.marks.get(m + 1).copied().unwrap_or(s.period);
                let steps = (start..next).map(|t| branches[t % nl].1).sum();
                (branches[start % nl].0, steps)
            })
            .collect();
    }
    branches
}

fn critical_points_and_derivs(family: &Family, params: &[f64]) -> Vec<(f64, Vec<f64>)> {
    match family {
        Family::Quadcomp { n } => (0..*n).map(|_| (0.0, vec![0.0; *n])).collect(),
        Family::Cubic => {
            let s = params[0].signum();
            vec![(-params[0].abs(), vec![-s, 0.0]), (params[0].abs(), vec![s, 0.0])]
        }
    }
}

/// Residuals of the superstable conditions and their Jacobian (forward mode).
fn superstable_residuals(family: &Family, returns: &[(usize, usize)], params: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = family.dimension();
    let crits = critical_points_and_derivs(family, params);
    let mut res = Vec::with_capacity(returns.len());
    let mut jac = Vec::with_capacity(returns.len());
    for (m, &(start, steps)) in returns.iter().enumerate() {
        let (mut x, mut dx) = crits[start].clone();
        let mut level = start;
        for _ in 0..steps {
            match family {
                Family::Quadcomp { n } => {
                    let l = params[level];
                    let nx = -1.0 + 2.0 * l * (1.0 - x * x);
                    for (p, v) in dx.iter_mut().enumerate() {
                        *v = -4.0 * l * x * *v + if p == level { 2.0 * (1.0 - x * x) } else { 0.0 };
                    }
                    x = nx;
                    level = (level + 1) % n;
                }
                Family::Cubic => {
                    let a = params[0];
                    let fp = 3.0 * (x * x - a * a);
                    let nx = x * (x * x - 3.0 * a * a) + params[1];
                    dx = vec![fp * dx[0] - 6.0 * a * x, fp * dx[1] + 1.0];
                    x = nx;
                }
            }
        }
        let target = returns[(m + 1) % returns.len()].0;
        let (c, dc) = &crits[target];
        res.push(x - c);
        jac.push((0..d).map(|p| dx[p] - dc[p]).collect());
    }
    (res, jac)
}

fn superstable_system(family: &Family, word: &[MarkedCombinatorialData], bracket: &ParameterBox) -> Result<Vec<f64>> {
    if word.is_empty() {
        return Err(Error::InvalidInput("an empty word has no superstable condition system".into()));
    }
    let returns = composite_returns(family, word);
    let d = family.dimension();
    if returns.len() != d {
        return Err(Error::InvalidInput(format!(
            "{} superstable conditions for {d} parameters",
            returns.len()
        )));
    }
    let inside = |p: &[f64]| p.iter().enumerate().all(|(i, v)| *v >= bracket.lo[i] && *v <= bracket.hi[i]);
    let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut x = bracket.center();
    let mut best = f64::INFINITY;
    let mut solved = None;
    for _ in 0..100 {
        let (r, j) = superstable_residuals(family, &returns, &x);
        let rn = norm(&r);
        best = best.min(rn);
        if rn < 1e-13 {
            solved = Some(x.clone());
            break;
        }
        let jm = nalgebra::DMatrix::from_fn(d, d, |a, b| j[a][b]);
        let rv = nalgebra::DVector::from_vec(r.clone());
        let Some(step) = jm.lu().solve(&rv) else { break };
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..30 {
            let cand: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - t * s).collect();
            if inside(&cand) && norm(&superstable_residuals(family, &returns, &cand).0) < rn {
                x = cand;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            if rn < 1e-11 {
                solved = Some(x.clone());
            }
            break;
        }
    }
    let x = match solved {
        Some(x) => x,
        None => coordinate_bisection(family, &returns, bracket).ok_or_else(|| {
            Error::NoSolutionInBracket(format!("superstable system unsolved (best residual {best:e})"))
        })?,
    };
    let realized = family.word_at(&x, word.len() + 1, word.iter().map(|s| s.period).max().unwrap_or(2))?;
    if realized.len() < word.len() || realized[..word.len()] != *word {
        return Err(Error::WrongItinerary(format!(
            "solution {x:?} realizes {} instead of {}",
            word_label(&realized),
            word_label(word)
        )));
    }
    Ok(x)
}

/// Cyclic one-coordinate bisection on the conditions, for when Newton stalls.
fn coordinate_bisection(family: &Family, returns: &[(usize, usize)], bracket: &ParameterBox) -> Option<Vec<f64>> {
    let d = family.dimension();
    let mut x = bracket.center();
    for _ in 0..60 {
        for c in 0..d {
            let f = |v: f64| {
                let mut p = x.clone();
                p[c] = v;
                superstable_residuals(family, returns, &p).0[c]
            };
            if let Ok(v) = numeric::bisect(f, bracket.lo[c], bracket.hi[c], 0.0) {
                x[c] = v;
            }
        }
        let r = superstable_residuals(family, returns, &x).0;
        if r.iter().all(|v| v.abs() < 1e-12) {
            return Some(x);
        }
    }
    None
}

pub fn word_label(word: &[MarkedCombinatorialData]) -> String {
    if word.is_empty() {
        return "-".into();
    }
    word.iter().map(|s| s.period.to_string()).collect::<Vec<_>>().join("x")
}

// ---------------------------------------------------------------------------------------------
// Cascades.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeReport {
    pub sigma: MarkedCombinatorialData,
    /// `lambda_0 ..= lambda_K`; `lambda_0` is the superstable fixed point parameter.
    pub lambdas: Vec<f64>,
    /// `delta_k = (lambda_k - lambda_{k-1}) / (lambda_{k+1} - lambda_k)` for `k = 1..K`.
    pub deltas: Vec<f64>,
    /// Reciprocal restrictive-interval ratios along the tower at `lambda_inf`, level by level.
    pub alphas: Vec<f64>,
    /// Aitken extrapolation of the last three parameters.
    pub lambda_inf: f64,
}

/// Superstable parameters of the stationary words `sigma^k`, `k <= depth`, in the one-level
/// quadratic family.
pub fn cascade(sigma: &MarkedCombinatorialData, depth: usize) -> Result<CascadeReport> {
    if depth == 0 {
        return Err(Error::InvalidInput("cascade depth must be at least 1".into()));
    }
    if sigma.levels != 1 {
        return Err(Error::InvalidInput("cascades run in the one-level quadratic family".into()));
    }
    let mut lambdas: Vec<f64> = vec![0.5];
    let mut word: Vec<MarkedCombinatorialData> = Vec::new();
    let mut ratio = 3.0;
    for k in 1..=depth {
        word.push(sigma.clone());
        let (lo, hi) = if k == 1 {
            (0.5, 1.0)
        } else {
            let last = lambdas[k - 1];
            let gap = (last - lambdas[k - 2]).abs();
            let reach = 3.0 * gap / ratio;
            ((last - reach).max(0.0), (last + reach).min(1.0))
        };
        let l = locate_superstable(&word, lo, hi, lambdas[k - 1])?;
        lambdas.push(l);
        if k >= 2 {
            ratio = (lambdas[k - 1] - lambdas[k - 2]) / (lambdas[k] - lambdas[k - 1]);
            ratio = ratio.abs().max(1.5);
        }
    }
    let deltas = lambdas
        .windows(3)
        .map(|w| (w[1] - w[0]) / (w[2] - w[1]))
        .collect();
    let lambda_inf = if lambdas.len() >= 3 {
        let m = lambdas.len();
        numeric::aitken(lambdas[m - 3], lambdas[m - 2], lambdas[m - 1])
    } else {
        *lambdas.last().expect("nonempty")
    };
    let f = quad_composition(&QuadCompositionParams::new(vec![lambda_inf.clamp(0.0, 1.0)])?);
    let tower = build_tower(&f, depth.max(2), sigma.period)?;
    let alphas = tower
        .levels
        .iter()
        .filter_map(|l| l.cycle.as_ref())
        .take_while(|c| extract_mcd(c) == *sigma)
        .map(|c| 1.0 / c.visits[0].scale().abs())
        .collect();
    Ok(CascadeReport {
        sigma: sigma.clone(),
        lambdas,
        deltas,
        alphas,
        lambda_inf,
    })
}

/// Scan `[lo, hi]` for roots of `F^N(0)` whose itinerary matches `word`; return the one closest
/// to `near`.
fn locate_superstable(word: &[MarkedCombinatorialData], lo: f64, hi: f64, near: f64) -> Result<f64> {
    let nn = word_period(word);
    let grid = 4000;
    let xs: Vec<f64> = (0..=grid).map(|i| lo + (hi - lo) * i as f64 / grid as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|&l| quad_critical_orbit(l, nn).0).collect();
    let mut best: Option<f64> = None;
    for i in 0..grid {
        if vals[i] == 0.0 || vals[i].signum() != vals[i + 1].signum() {
            let root = if vals[i] == 0.0 {
                xs[i]
            } else {
                numeric::newton_bracketed(|l| quad_critical_orbit(l, nn), xs[i], xs[i + 1])?
            };
            if check_kneading(root, word).is_ok() && best.is_none_or(|b| (root - near).abs() < (b - near).abs()) {
                best = Some(root);
            }
        }
    }
    best.ok_or_else(|| {
        Error::NoSolutionInBracket(format!(
            "no superstable parameter for {} in [{lo}, {hi}]",
            word_label(word)
        ))
    })
}

/// Superstable parameters of `sigma^1 ..= sigma^depth` in any family, each located by scanning
/// the previous window on a tensor grid for parameters with the next word, then solving from
/// the hull of those parameters.
pub fn stationary_sequence(family: &Family, sigma: &MarkedCombinatorialData, region: &ParameterBox, depth: usize, grid: usize) -> Result<Vec<Vec<f64>>> {
    let d = family.dimension();
    let mut region = region.clone();
    let mut out = Vec::with_capacity(depth);
    for k in 1..=depth {
        let word = vec![sigma.clone(); k];
        let total = (grid + 1).pow(d as u32);
        let point = |mut idx: usize| -> Vec<f64> {
            (0..d)
                .map(|a| {
                    let i = idx % (grid + 1);
                    idx /= grid + 1;
                    region.lo[a] + (region.hi[a] - region.lo[a]) * i as f64 / grid as f64
                })
                .collect()
        };
        let hits: Vec<Vec<f64>> = (0..total)
            .into_par_iter()
            .filter_map(|i| {
                let p = point(i);
                match family.word_at(&p, k, sigma.period) {
                    Ok(w) if w == word => Some(p),
                    _ => None,
                }
            })
            .collect();
        if hits.is_empty() {
            return Err(Error::NoSolutionInBracket(format!(
                "no parameter with combinatorics {} on a {grid}-point grid",
                word_label(&word)
            )));
        }
        let cell: Vec<f64> = (0..d).map(|a| (region.hi[a] - region.lo[a]) / grid as f64).collect();
        let (dlo, dhi) = family.default_domain();
        let lo: Vec<f64> = (0..d)
            .map(|a| (hits.iter().map(|h| h[a]).fold(f64::INFINITY, f64::min) - cell[a]).max(dlo[a]))
            .collect();
        let hi: Vec<f64> = (0..d)
            .map(|a| (hits.iter().map(|h| h[a]).fold(f64::NEG_INFINITY, f64::max) + cell[a]).min(dhi[a]))
            .collect();
        region = ParameterBox {
            lo,
            hi,
            level: k,
            word: word.clone(),
        };
        out.push(superstable_parameter(family, &word, &region)?);
    }
    Ok(out)
}

/// Coordinatewise Aitken extrapolation of the last three points of a convergent sequence.
pub fn extrapolate(points: &[Vec<f64>]) -> Option<Vec<f64>> {
    let n = points.len();
    (n >= 3).then(|| {
        (0..points[n - 1].len())
            .map(|i| numeric::aitken(points[n - 3][i], points[n - 2][i], points[n - 1][i]))
            .collect()
    })
}

// ---------------------------------------------------------------------------------------------
// Enumeration of first-renormalization combinatorics.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Enumeration {
    pub combinatorics: Vec<MarkedCombinatorialData>,
    /// Parameter grid spacing used by the scan.
    pub grid_step: f64,
}

/// All first-renormalization combinatorics with period at most `p * n` seen on a parameter grid.
///
/// One-level quadratic family: windows are runs of grid points sharing combinatorics, and each is
/// re-read at its superstable center. Other families: combinatorics read at the grid points.
pub fn enumerate_combinatorics(family: &Family, p: usize, grid_step: f64) -> Result<Enumeration> {
    let n = family.critical_count();
    let max_period = p * n;
    if max_period < 2 {
        return Ok(Enumeration {
            combinatorics: Vec::new(),
            grid_step,
        });
    }
    let (lo, hi) = family.default_domain();
    let d = family.dimension();
    let per_axis: Vec<usize> = (0..d).map(|i| ((hi[i] - lo[i]) / grid_step).round() as usize + 1).collect();
    let total: usize = per_axis.iter().product();
    let point = |mut idx: usize| -> Vec<f64> {
        (0..d)
            .map(|i| {
                let k = idx % per_axis[i];
                idx /= per_axis[i];
                (lo[i] + k as f64 * grid_step).min(hi[i])
            })
            .collect()
    };
    let words: Vec<Option<MarkedCombinatorialData>> = (0..total)
        .into_par_iter()
        .map(|i| {
            family
                .word_at(&point(i), 1, max_period)
                .ok()
                .and_then(|w| w.into_iter().next())
        })
        .collect();

    let mut found: Vec<MarkedCombinatorialData> = Vec::new();
    if let Family::Quadcomp { n: 1 } = family {
        let mut i = 0;
        while i < total {
            let Some(s) = words[i].clone() else {
                i += 1;
                continue;
            };
            let mut j = i;
            while j + 1 < total && words[j + 1].as_ref() == Some(&s) {
                j += 1;
            }
            let (a, b) = (point(i.saturating_sub(1))[0], point((j + 1).min(total - 1))[0]);
            let at_center = locate_superstable(std::slice::from_ref(&s), a, b, 0.5 * (a + b))
                .ok()
                .and_then(|c| family.word_at(&[c * (1.0 - 1e-15)], 1, max_period).ok())
                .and_then(|w| w.into_iter().next());
            let s = at_center.unwrap_or(s);
            if !found.contains(&s) {
                found.push(s);
            }
            i = j + 1;
        }
    } else {
        for s in words.into_iter().flatten() {
            if !found.contains(&s) {
                found.push(s);
            }
        }
    }
    found.sort_by_key(|a| (a.period, a.label()));
    Ok(Enumeration {
        combinatorics: found,
        grid_step,
    })
}

// ---------------------------------------------------------------------------------------------
// Covers.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverOptions {
    /// Root-scan resolution per window (one-parameter covers).
    pub window_grid: usize,
    /// Level-1 tensor grid cells per axis (multi-parameter covers).
    pub grid: usize,
    /// Subdivision per axis of a box when descending one level (multi-parameter covers).
    pub subdivide: usize,
    /// Parameter region; the family default when absent.
    pub domain: Option<(Vec<f64>, Vec<f64>)>,
}

impl Default for CoverOptions {
    fn default() -> Self {
        Self {
            window_grid: 4000,
            grid: 64,
            subdivide: 4,
            domain: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub family: Family,
    pub p: usize,
    pub depth: usize,
    /// Boxes of every level, level 0 first.
    pub boxes: Vec<ParameterBox>,
    /// Total volume per level.
    pub measures: Vec<f64>,
    pub warnings: Vec<String>,
}

impl CoverReport {
    pub fn level(&self, j: usize) -> impl Iterator<Item = &ParameterBox> {
        self.boxes.iter().filter(move |b| b.level == j)
    }

    /// Largest ratio of consecutive periods along any certified word, against `p`.
    pub fn max_period_ratio(&self) -> Option<f64> {
        self.boxes
            .iter()
            .filter_map(|b| b.periods().iter().copied().max())
            .max()
            .map(|m| m as f64 / self.family.critical_count() as f64)
    }
}

/// Nested covers of the parameters whose first `j` renormalizations have periods at most
/// `p * n`, for `j <= depth`.
pub fn parameter_cover(family: &Family, p: usize, depth: usize, opts: &CoverOptions) -> Result<CoverReport> {
    let (lo, hi) = opts.domain.clone().unwrap_or_else(|| family.default_domain());
    let root = ParameterBox {
        lo,
        hi,
        level: 0,
        word: Vec::new(),
    };
    let mut boxes = vec![root.clone()];
    let mut warnings = Vec::new();
    let mut frontier = vec![root];
    for j in 0..depth {
        let children: Vec<(Vec<ParameterBox>, Vec<String>)> = frontier
            .par_iter()
            .map(|parent| match family {
                Family::Quadcomp { n: 1 } => sub_windows(parent, p, opts.window_grid),
                _ => sub_boxes(family, parent, p, if j == 0 { opts.grid } else { opts.subdivide }),
            })
            .collect::<Result<Vec<_>>>()?;
        frontier = Vec::new();
        for (c, w) in children {
            frontier.extend(c);
            warnings.extend(w);
        }
        boxes.extend(frontier.iter().cloned());
    }
    let measures = (0..=depth)
        .map(|j| boxes.iter().filter(|b| b.level == j).map(|b| b.volume()).sum())
        .collect();
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    Ok(CoverReport {
        family: *family,
        p,
        depth,
        boxes,
        measures,
        warnings,
    })
}

/// Renormalization windows of the next level inside a one-parameter window.
fn sub_windows(parent: &ParameterBox, p: usize, grid: usize) -> Result<(Vec<ParameterBox>, Vec<String>)> {
    let fam = Family::Quadcomp { n: 1 };
    let j = parent.level;
    let (lo, hi) = (parent.lo[0], parent.hi[0]);
    let base = word_period(&parent.word);
    let step = (hi - lo) / grid as f64;
    let xs: Vec<f64> = (0..=grid).map(|i| lo + step * i as f64).collect();
    let mut centers: Vec<(f64, CombinatoricsWord)> = Vec::new();
    let mut warnings = Vec::new();
    for k in 2..=p {
        let nn = base * k;
        let vals: Vec<f64> = xs.iter().map(|&l| quad_critical_orbit(l, nn).0).collect();
        for i in 0..grid {
            if vals[i] != 0.0 && vals[i].signum() == vals[i + 1].signum() {
                continue;
            }
            let root = if vals[i] == 0.0 {
                xs[i]
            } else {
                numeric::newton_bracketed(|l| quad_critical_orbit(l, nn), xs[i], xs[i + 1])?
            };
            let w = fam.word_at(&[root], j + 2, p)?;
            if w.len() <= j && exact_period(root, nn) == nn {
                warnings.push(format!(
                    "superstable parameter {root} of period {nn} inside window {} could not be certified at this precision",
                    word_label(&parent.word)
                ));
            }
            if w.len() == j + 1 && w[..j] == parent.word[..] && w[j].period == k && !centers.iter().any(|(_, cw)| *cw == w) {
                centers.push((root, w));
            }
        }
    }
    centers.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::new();
    for (c, w) in centers {
        let pass = |l: f64| fam.word_at(&[l], j + 1, p).map(|v| v == w).unwrap_or(false);
        let left = edge(&pass, c, lo);
        let right = edge(&pass, c, hi);
        out.push(ParameterBox {
            lo: vec![left],
            hi: vec![right],
            level: j + 1,
            word: w,
        });
    }
    for pair in out.windows(2) {
        if pair[1].lo[0] - pair[0].hi[0] < step {
            warnings.push(format!(
                "windows {} and {} are closer than the scan step {step:e}",
                word_label(&pair[0].word),
                word_label(&pair[1].word)
            ));
        }
    }
    Ok((out, warnings))
}

/// Smallest `m <= n` with the critical orbit back at the critical point after `m` steps.
fn exact_period(lambda: f64, n: usize) -> usize {
    let mut x = 0.0f64;
    for m in 1..=n {
        x = -1.0 + 2.0 * lambda * (1.0 - x * x);
        if x.abs() < 1e-9 {
            return m;
        }
    }
    n
}

/// Last passing point between a passing `inner` and `outer`, to [`EDGE_TOLERANCE`].
fn edge<F: Fn(f64) -> bool>(pass: &F, inner: f64, outer: f64) -> f64 {
    if pass(outer) {
        return outer;
    }
    let (mut a, mut b) = (inner, outer);
    while (b - a).abs() > EDGE_TOLERANCE {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        if pass(m) {
            a = m;
        } else {
            b = m;
        }
    }
    a
}

/// Tensor subdivision of a box, keeping the cells whose center certifies one more level.
fn sub_boxes(family: &Family, parent: &ParameterBox, p: usize, cells: usize) -> Result<(Vec<ParameterBox>, Vec<String>)> {
    let d = family.dimension();
    let j = parent.level;
    let total = cells.pow(d as u32);
    let max_period = p * family.critical_count();
    let out: Vec<Option<ParameterBox>> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let mut rem = idx;
            let mut lo = Vec::with_capacity(d);
            let mut hi = Vec::with_capacity(d);
            for a in 0..d {
                let i = rem % cells;
                rem /= cells;
                let w = (parent.hi[a] - parent.lo[a]) / cells as f64;
                lo.push(parent.lo[a] + w * i as f64);
                hi.push(parent.lo[a] + w * (i + 1) as f64);
            }
            let b = ParameterBox {
                lo,
                hi,
                level: j + 1,
                word: Vec::new(),
            };
            let word = family.word_at(&b.center(), j + 1, max_period)?;
            Ok((word.len() == j + 1 && word[..j] == parent.word[..]).then_some(ParameterBox { word, ..b }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((out.into_iter().flatten().collect(), Vec::new()))
}

/// Map of a quadratic-composition parameter vector, for callers that only hold parameters.
pub fn quad_map(lambdas: &[f64]) -> Result<NormalizedExtendedMap> {
    Ok(quad_composition(&QuadCompositionParams::new(lambdas.to_vec())?))
}

/// Value of `F^N(0)` for the one-level quadratic family.
pub fn critical_return(lambda: f64, steps: usize) -> f64 {
    quad_critical_orbit(lambda, steps).0
}

/// The map behind a family parameter point.
pub fn family_map(family: &Family, params: &[f64]) -> Result<Arc<dyn IntervalDynamics>> {
    family.map(params)
}
