//! Coefficient-space discretization of normalized extended maps with even branches, the
//! renormalization operator on it, its derivative as a dense matrix, renormalization fixed points,
//! and eigen-analysis of the derivative.
//!
//! Branch `i` is `g_i(z) = c_{i,0} + sum_{t=1..m} c_{i,t} T_t(2 s z^2 - 1)`, with `T_t` the
//! Chebyshev polynomials, so `s z^2` ranges over `[0, 1]` on `|z| <= 1/sqrt(s)`. The constant
//! `c_{i,0}` is not stored: it is whatever makes `g_i(-1) = -1`.

use std::sync::Arc;

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Branch, Interval, NormalizedExtendedMap};
use crate::error::{Error, Result};
use crate::numeric;
use crate::search::{extrapolate, stationary_sequence, Family, ParameterBox};
use crate::renorm::{extract_mcd, find_restrictive_interval, renormalize, MarkedCombinatorialData, RestrictiveIntervalCycle};

/// `s = 1/1.21`: the basis covers `|z| <= 1.1`, ten percent past the branch domain `[-1, 1]`.
pub const DEFAULT_SCALE: f64 = 1.0 / 1.21;
/// Largest collocation residual accepted by [`fit_coeffs`].
pub const FIT_TOLERANCE: f64 = 1e-9;
/// Half-width of the band around modulus 1 reported separately.
pub const UNIT_BAND: f64 = 1e-6;
/// Newton stops once `max |R(C) - C|` falls below this.
pub const FIXED_POINT_TOLERANCE: f64 = 1e-10;
/// Largest accepted relative eigenpair residual.
/// Newton steps allowed when solving for a renormalization fixed point.
pub const MAX_NEWTON_STEPS: usize = 40;
pub const EIGEN_RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Shifted Chebyshev values of `w = 2 s z^2 - 1` and their `z`-derivatives, `t = 0..=m`.
fn shifted_chebyshev(scale: f64, z: f64, m: usize, vals: &mut [f64], dvals: &mut [f64]) {
    let w = 2.0 * scale * z * z - 1.0;
    numeric::chebyshev_with_derivs(w, &mut vals[..=m], &mut dvals[..=m]);
    let dw = 4.0 * scale * z;
    for d in dvals[..=m].iter_mut() {
        *d *= dw;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffMap {
    pub n: usize,
    pub m: usize,
    pub scale: f64,
    /// `coeffs[i][t - 1] = c_{i,t}` for `t = 1..=m`.
    pub coeffs: Vec<Vec<f64>>,
}

impl CoeffMap {
    pub fn new(scale: f64, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        let n = coeffs.len();
        let m = coeffs.first().map_or(0, Vec::len);
        if n == 0 || m == 0 || coeffs.iter().any(|c| c.len() != m) {
            return Err(Error::InvalidInput("coefficient blocks must be nonempty and of equal degree".into()));
        }
        if !(scale > 0.0 && scale <= 1.0) {
            return Err(Error::InvalidInput(format!("basis scale {scale} outside (0, 1]")));
        }
        Ok(Self { n, m, scale, coeffs })
    }

    /// The eliminated constant `c_{i,0}`.
    pub fn constant_term(&self, i: usize) -> f64 {
        // At z = -1 every T_t(2s - 1) enters; subtract them from the target -1.
        let mut v = vec![0.0; self.m + 1];
        let mut d = vec![0.0; self.m + 1];
        shifted_chebyshev(self.scale, 1.0, self.m, &mut v, &mut d);
        -1.0 - self.coeffs[i].iter().zip(&v[1..]).map(|(c, t)| c * t).sum::<f64>()
    }

    /// Tangent basis function `e_t`: `T_t(2 s z^2 - 1) - T_t(2 s - 1)`, which vanishes at `z = -1`.
    pub fn basis_values(&self, z: f64, out: &mut [f64]) {
        let mut v = vec![0.0; self.m + 1];
        let mut d = vec![0.0; self.m + 1];
        let mut v1 = vec![0.0; self.m + 1];
        shifted_chebyshev(self.scale, z, self.m, &mut v, &mut d);
        shifted_chebyshev(self.scale, 1.0, self.m, &mut v1, &mut d);
        for t in 1..=self.m {
            out[t - 1] = v[t] - v1[t];
        }
    }

    /// Stacked coefficients, branch by branch.
    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_iterator(self.n * self.m, self.coeffs.iter().flatten().copied())
    }

    pub fn from_vector(&self, v: &DVector<f64>) -> CoeffMap {
        let coeffs = (0..self.n)
            .map(|i| v.as_slice()[i * self.m..(i + 1) * self.m].to_vec())
            .collect();
        CoeffMap { coeffs, ..self.clone() }
    }

    pub fn max_distance(&self, other: &CoeffMap) -> f64 {
        (self.to_vector() - other.to_vector()).amax()
    }

    /// `|g_i(-1) + 1|` per branch, as evaluated.
    pub fn normalization_residuals(&self) -> Vec<f64> {
        let map = self.to_map();
        (0..self.n).map(|i| (map.branch(i).eval(-1.0) + 1.0).abs()).collect()
    }

    pub fn to_map(&self) -> NormalizedExtendedMap {
        let shared = Arc::new(self.clone());
        let branches: Vec<Arc<dyn Branch>> = (0..self.n)
            .map(|i| {
                let mut all = vec![self.constant_term(i)];
                all.extend_from_slice(&self.coeffs[i]);
                // Pin the value at -1 to exactly -1; the constant does so up to rounding.
                let anchor = self.eval_with_deriv(&all, -1.0).0 + 1.0;
                Arc::new(CoeffBranch {
                    map: shared.clone(),
                    all,
                    anchor,
                }) as Arc<dyn Branch>
            })
            .collect();
        NormalizedExtendedMap::new(branches).expect("coefficient branches are normalized by construction")
    }

    fn eval_with_deriv(&self, all: &[f64], z: f64) -> (f64, f64) {
        let w = 2.0 * self.scale * z * z - 1.0;
        let (mut t0, mut t1) = (1.0, w);
        let (mut d0, mut d1) = (0.0, 1.0);
        let mut v = all[0];
        let mut d = 0.0;
        if self.m >= 1 {
            v += all[1] * t1;
            d += all[1] * d1;
        }
        for &c in &all[2..] {
            let t2 = 2.0 * w * t1 - t0;
            let d2 = 2.0 * t1 + 2.0 * w * d1 - d0;
            v += c * t2;
            d += c * d2;
            (t0, t1, d0, d1) = (t1, t2, d1, d2);
        }
        (v, d * 4.0 * self.scale * z)
    }
}

#[derive(Debug, Clone)]
struct CoeffBranch {
    map: Arc<CoeffMap>,
    /// `c_0 ..= c_m`.
    all: Vec<f64>,
    anchor: f64,
}

impl Branch for CoeffBranch {
    fn eval(&self, x: f64) -> f64 {
        self.eval_with_deriv(x).0
    }

    fn deriv(&self, x: f64) -> f64 {
        self.eval_with_deriv(x).1
    }

    fn eval_with_deriv(&self, x: f64) -> (f64, f64) {
        let (v, d) = self.map.eval_with_deriv(&self.all, x);
        (v - self.anchor, d)
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

/// Result of projecting a map onto the coefficient space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub map: CoeffMap,
    /// Largest collocation residual of the unconstrained least-squares fit.
    pub residual: f64,
    /// Per branch, the change of the constant term made by imposing `g(-1) = -1`.
    pub shifts: Vec<f64>,
}

/// Collocation nodes `z_j >= 0` with `s z_j^2` at the Chebyshev points of `[0, 1]`, and the
/// pseudo-inverse of the full basis `T_0..T_m` sampled there.
#[derive(Debug, Clone)]
struct Collocation {
    nodes: Vec<f64>,
    pinv: DMatrix<f64>,
}

impl Collocation {
    fn new(m: usize, scale: f64) -> Result<Self> {
        let count = 4 * m;
        let nodes: Vec<f64> = (0..count)
            .map(|j| {
                let theta = std::f64::consts::PI * (j as f64 + 0.5) / count as f64;
                let w = 0.5 * (1.0 - theta.cos());
                (w / scale).sqrt()
            })
            .collect();
        let mut a = DMatrix::zeros(count, m + 1);
        let mut v = vec![0.0; m + 1];
        let mut d = vec![0.0; m + 1];
        for (r, &z) in nodes.iter().enumerate() {
            shifted_chebyshev(scale, z, m, &mut v, &mut d);
            for c in 0..=m {
                a[(r, c)] = v[c];
            }
        }
        let pinv = a
            .clone()
            .pseudo_inverse(1e-14)
            .map_err(|e| Error::EigenFailure(format!("collocation pseudo-inverse: {e}")))?;
        Ok(Self { nodes, pinv })
    }

    /// Least-squares coefficients `c_0..=c_m` of the sampled values.
    fn solve(&self, values: &DVector<f64>) -> DVector<f64> {
        &self.pinv * values
    }
}

/// Least-squares fit of every branch of `f` on the even Chebyshev basis of degree `m`, then
/// projection onto `g(-1) = -1` by moving the constant term.
pub fn fit_coeffs(f: &NormalizedExtendedMap, m: usize) -> Result<Fit> {
    fit_with_scale(f, m, DEFAULT_SCALE)
}

pub fn fit_with_scale(f: &NormalizedExtendedMap, m: usize, scale: f64) -> Result<Fit> {
    fit_branches(f.branches(), m, scale)
}

/// Fit arbitrary even branches; the constant of each is then moved to impose `g(-1) = -1`, and
/// the move is reported in [`Fit::shifts`].
pub fn fit_branches(branches: &[Arc<dyn Branch>], m: usize, scale: f64) -> Result<Fit> {
    if m == 0 {
        return Err(Error::InvalidInput("degree must be at least 1".into()));
    }
    let col = Collocation::new(m, scale)?;
    fit_on(&col, branches, m, scale)
}

fn fit_on(col: &Collocation, branches: &[Arc<dyn Branch>], m: usize, scale: f64) -> Result<Fit> {
    let mut coeffs = Vec::with_capacity(branches.len());
    let mut residual: f64 = 0.0;
    let mut shifts = Vec::with_capacity(branches.len());
    let mut v = vec![0.0; m + 1];
    let mut d = vec![0.0; m + 1];
    for b in branches {
        let vals = DVector::from_iterator(col.nodes.len(), col.nodes.iter().map(|&z| b.eval(z)));
        let c = col.solve(&vals);
        for (j, &z) in col.nodes.iter().enumerate() {
            shifted_chebyshev(scale, z, m, &mut v, &mut d);
            let approx: f64 = c.iter().zip(&v).map(|(a, t)| a * t).sum();
            residual = residual.max((approx - vals[j]).abs());
        }
        let kept: Vec<f64> = c.as_slice()[1..].to_vec();
        let projected = CoeffMap {
            n: 1,
            m,
            scale,
            coeffs: vec![kept.clone()],
        };
        shifts.push(projected.constant_term(0) - c[0]);
        coeffs.push(kept);
    }
    if !residual.is_finite() || residual > FIT_TOLERANCE {
        return Err(Error::PoorFit {
            residual,
            threshold: FIT_TOLERANCE,
        });
    }
    Ok(Fit {
        map: CoeffMap::new(scale, coeffs)?,
        residual,
        shifts,
    })
}

fn detect(c: &CoeffMap, sigma: &MarkedCombinatorialData) -> Result<RestrictiveIntervalCycle> {
    let map = c.to_map();
    let cycle = find_restrictive_interval(&map, sigma.period)?
        .ok_or_else(|| Error::CycleMismatch(format!("no restrictive cycle of period at most {}", sigma.period)))?;
    let got = extract_mcd(&cycle);
    if got != *sigma {
        return Err(Error::CycleMismatch(format!(
            "detected {} instead of {}",
            got.label(),
            sigma.label()
        )));
    }
    Ok(cycle)
}

/// Renormalize the map realized by `c` along `sigma` and refit at the same degree.
pub fn apply_r(c: &CoeffMap, sigma: &MarkedCombinatorialData) -> Result<CoeffMap> {
    let col = Collocation::new(c.m, c.scale)?;
    apply_r_on(&col, c, sigma)
}

fn apply_r_on(col: &Collocation, c: &CoeffMap, sigma: &MarkedCombinatorialData) -> Result<CoeffMap> {
    let cycle = detect(c, sigma)?;
    let r = renormalize(&cycle)?;
    Ok(fit_on(col, r.branches(), c.m, c.scale)?.map)
}

/// Derivative of [`apply_r`] at a base point, in the stacked coefficient basis.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub matrix: DMatrix<f64>,
    pub base: CoeffMap,
    pub sigma: MarkedCombinatorialData,
}

/// Value, derivative, and tangent of `steps` iterates from `(level, x)`, the tangent taken along
/// the perturbation of branch `dir.0` by basis function `dir.1`.
fn orbit_tangent(c: &CoeffMap, branches: &[Vec<f64>], level: usize, x: f64, steps: usize, dir: (usize, usize)) -> (f64, f64, f64) {
    let mut basis = vec![0.0; c.m];
    let (mut x, mut d, mut a) = (x, 1.0, 0.0);
    let mut lev = level;
    for _ in 0..steps {
        let (v, dv) = c.eval_with_deriv(&branches[lev], x);
        let pert = if lev == dir.0 {
            c.basis_values(x, &mut basis);
            basis[dir.1]
        } else {
            0.0
        };
        a = dv * a + pert;
        d *= dv;
        x = v;
        lev = (lev + 1) % c.n;
    }
    (x, d, a)
}

/// Analytic derivative of `C -> apply_r(C, sigma)`, one column per stacked coefficient.
pub fn discretize_dr(c: &CoeffMap, sigma: &MarkedCombinatorialData) -> Result<OperatorMatrix> {
    let col = Collocation::new(c.m, c.scale)?;
    let cycle = detect(c, sigma)?;
    let branches: Vec<Vec<f64>> = (0..c.n)
        .map(|i| {
            let mut all = vec![c.constant_term(i)];
            all.extend_from_slice(&c.coeffs[i]);
            all
        })
        .collect();
    let k = cycle.period;
    let beta = cycle.beta;
    let steps = cycle.branch_steps();
    let visits = cycle.visits.clone();
    let dim = c.n * c.m;
    let columns: Vec<Vec<f64>> = (0..dim)
        .into_par_iter()
        .map(|idx| {
            let dir = (idx / c.m, idx % c.m);
            // Implicit-function derivative of the periodic point, then along its orbit.
            let (_, dk, ak) = orbit_tangent(c, &branches, 0, beta, k, dir);
            let dbeta0 = ak / (1.0 - dk);
            let dbeta: Vec<f64> = visits
                .iter()
                .map(|v| {
                    let (_, d, a) = orbit_tangent(c, &branches, 0, beta, v.time, dir);
                    a + d * dbeta0
                })
                .collect();
            let mut out = vec![0.0; dim];
            for (mi, v) in visits.iter().enumerate() {
                let ni = (mi + 1) % visits.len();
                let w = visits[ni];
                let (s_in, s_out) = (v.scale(), w.scale());
                let (ds_in, ds_out) = (-dbeta[mi], -dbeta[ni]);
                let vals = DVector::from_iterator(
                    col.nodes.len(),
                    col.nodes.iter().map(|&y| {
                        let x = v.critical_point + s_in * y;
                        let (q, d, a) = orbit_tangent(c, &branches, v.level, x, steps[mi], dir);
                        let raw = (q - w.critical_point) / s_out;
                        (a + d * ds_in * y) / s_out - raw * ds_out / s_out
                    }),
                );
                let coeffs = col.solve(&vals);
                out[mi * c.m..(mi + 1) * c.m].copy_from_slice(&coeffs.as_slice()[1..]);
            }
            out
        })
        .collect();
    let matrix = DMatrix::from_fn(dim, dim, |r, q| columns[q][r]);
    Ok(OperatorMatrix {
        matrix,
        base: c.clone(),
        sigma: sigma.clone(),
    })
}

/// Central-difference derivative of [`apply_r`], column by column.
pub fn finite_difference_dr(c: &CoeffMap, sigma: &MarkedCombinatorialData, h: f64) -> Result<DMatrix<f64>> {
    let col = Collocation::new(c.m, c.scale)?;
    let base = c.to_vector();
    let dim = base.len();
    let columns: Vec<DVector<f64>> = (0..dim)
        .into_par_iter()
        .map(|q| {
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[q] += h;
            minus[q] -= h;
            let rp = apply_r_on(&col, &c.from_vector(&plus), sigma)?.to_vector();
            let rm = apply_r_on(&col, &c.from_vector(&minus), sigma)?.to_vector();
            Ok((rp - rm) / (2.0 * h))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_columns(&columns))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdCheck {
    pub step: f64,
    pub max_abs_difference: f64,
    pub max_entry: f64,
}

/// Compare the analytic derivative with central differences.
pub fn fd_check(c: &CoeffMap, sigma: &MarkedCombinatorialData, h: f64) -> Result<FdCheck> {
    let analytic = discretize_dr(c, sigma)?.matrix;
    let fd = finite_difference_dr(c, sigma, h)?;
    Ok(FdCheck {
        step: h,
        max_abs_difference: (&analytic - &fd).amax(),
        max_entry: analytic.amax(),
    })
}

/// Seed for [`renorm_fixed_point`] in any family: locate the superstable parameters of
/// `sigma^1 ..= sigma^depth` inside `region`, extrapolate their limit, and fit the map reached
/// after `depth - 1` renormalizations there.
pub fn seed_from_family(
    family: &Family,
    sigma: &MarkedCombinatorialData,
    region: &ParameterBox,
    depth: usize,
    grid: usize,
    m: usize,
) -> Result<CoeffMap> {
    let seq = stationary_sequence(family, sigma, region, depth, grid)?;
    let limit = extrapolate(&seq).unwrap_or_else(|| seq[seq.len() - 1].clone());
    let g = family.renormalized_map(&limit, depth.saturating_sub(1), sigma.period)?;
    Ok(fit_branches(g.branches(), m, DEFAULT_SCALE)?.map)
}

/// Fit of the one-level quadratic map at `lambda`, renormalized `depth` times along `sigma`.
pub fn seed_from_parameter(lambda: f64, sigma: &MarkedCombinatorialData, m: usize, depth: usize) -> Result<CoeffMap> {
    let col = Collocation::new(m, DEFAULT_SCALE)?;
    let f = crate::families::quad_composition(&crate::families::QuadCompositionParams::new(vec![lambda])?);
    let mut c = fit_on(&col, f.branches(), m, DEFAULT_SCALE)?.map;
    for _ in 0..depth {
        c = apply_r_on(&col, &c, sigma)?;
    }
    Ok(c)
}

/// Seed for `m` branches-of-degree built from a map given on another degree or scale.
pub fn refit(c: &CoeffMap, m: usize) -> Result<CoeffMap> {
    Ok(fit_with_scale(&c.to_map(), m, c.scale)?.map)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub map: CoeffMap,
    /// `max |R(C) - C|` at the returned point.
    pub residual: f64,
    pub newton_steps: usize,
    pub residual_history: Vec<f64>,
}

/// Newton's method on `C -> R(C) - C` with Jacobian `DR - I`.
pub fn renorm_fixed_point(sigma: &MarkedCombinatorialData, m: usize, seed: &CoeffMap) -> Result<FixedPoint> {
    let mut c = if seed.m == m { seed.clone() } else { refit(seed, m)? };
    let col = Collocation::new(m, c.scale)?;
    let mut history = Vec::new();
    let mut r = apply_r_on(&col, &c, sigma)?;
    for step in 0..=MAX_NEWTON_STEPS {
        let diff = r.to_vector() - c.to_vector();
        let res = diff.amax();
        history.push(res);
        if res < FIXED_POINT_TOLERANCE {
            return Ok(FixedPoint {
                map: c,
                residual: res,
                newton_steps: step,
                residual_history: history,
            });
        }
        if step == MAX_NEWTON_STEPS {
            break;
        }
        let dr = discretize_dr(&c, sigma)?.matrix;
        let dim = dr.nrows();
        let jac = dr - DMatrix::identity(dim, dim);
        let delta = jac
            .lu()
            .solve(&(-diff))
            .ok_or(Error::NoConvergence {
                iterations: step,
                residual: res,
            })?;
        // Halve the step until the renormalization is defined and the residual drops.
        let mut t = 1.0;
        loop {
            let cand = c.from_vector(&(c.to_vector() + &delta * t));
            if let Ok(rc) = apply_r_on(&col, &cand, sigma) {
                if (rc.to_vector() - cand.to_vector()).amax() < res {
                    c = cand;
                    r = rc;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-4 {
                return Err(Error::NoConvergence {
                    iterations: step,
                    residual: res,
                });
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_NEWTON_STEPS,
        residual: history.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
    /// Smallest singular value of `M - mu I` over `max |M_ij|`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Sorted by decreasing modulus.
    pub eigenvalues: Vec<Eigenvalue>,
    pub count_expanding: usize,
    pub count_unit: usize,
    pub count_contracting: usize,
    pub leading: Eigenvalue,
    /// Largest modulus among the non-expanding eigenvalues.
    pub contraction_estimate: f64,
    pub max_residual: f64,
}

/// Full eigen decomposition with band classification.
pub fn spectrum_report(m: &DMatrix<f64>) -> Result<SpectrumReport> {
    let dim = m.nrows();
    if dim == 0 || m.ncols() != dim {
        return Err(Error::InvalidInput("spectrum needs a nonempty square matrix".into()));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenFailure("matrix has non-finite entries".into()));
    }
    let raw = m.clone().complex_eigenvalues();
    let norm = m.amax().max(f64::MIN_POSITIVE);
    let mc: DMatrix<Complex<f64>> = m.map(|v| Complex::new(v, 0.0));
    let mut eigenvalues: Vec<Eigenvalue> = raw
        .iter()
        .map(|mu| {
            let shifted = &mc - DMatrix::from_diagonal_element(dim, dim, *mu);
            let sv = shifted.singular_values();
            let smallest = sv.iter().copied().fold(f64::INFINITY, f64::min);
            Eigenvalue {
                re: mu.re,
                im: mu.im,
                modulus: mu.norm(),
                residual: smallest / norm,
            }
        })
        .collect();
    eigenvalues.sort_by(|a, b| b.modulus.total_cmp(&a.modulus));
    let max_residual = eigenvalues.iter().map(|e| e.residual).fold(0.0, f64::max);
    if max_residual > EIGEN_RESIDUAL_TOLERANCE {
        return Err(Error::EigenFailure(format!(
            "eigenpair residual {max_residual:e} exceeds {EIGEN_RESIDUAL_TOLERANCE:e}"
        )));
    }
    let count_expanding = eigenvalues.iter().filter(|e| e.modulus > 1.0 + UNIT_BAND).count();
    let count_contracting = eigenvalues.iter().filter(|e| e.modulus < 1.0 - UNIT_BAND).count();
    let count_unit = dim - count_expanding - count_contracting;
    Ok(SpectrumReport {
        leading: eigenvalues[0],
        contraction_estimate: eigenvalues
            .iter()
            .find(|e| e.modulus <= 1.0 + UNIT_BAND)
            .map_or(0.0, |e| e.modulus),
        eigenvalues,
        count_expanding,
        count_unit,
        count_contracting,
        max_residual,
    })
}

/// Projector onto the span of the non-expanding eigenvectors, along the expanding ones.
pub fn stable_projector(m: &DMatrix<f64>, report: &SpectrumReport) -> Result<DMatrix<f64>> {
    let dim = m.nrows();
    let expanding: Vec<&Eigenvalue> = report
        .eigenvalues
        .iter()
        .filter(|e| e.modulus > 1.0 + UNIT_BAND)
        .collect();
    if expanding.iter().any(|e| e.im != 0.0) {
        return Err(Error::EigenFailure("complex expanding eigenvalues are not supported by the projector".into()));
    }
    if expanding.is_empty() {
        return Ok(DMatrix::identity(dim, dim));
    }
    let null_vector = |a: DMatrix<f64>| -> DVector<f64> {
        let svd = a.svd(false, true);
        let vt = svd.v_t.expect("requested");
        let (idx, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(y.1))
            .expect("nonempty");
        vt.row(idx).transpose()
    };
    let shift = |mu: f64| DMatrix::from_diagonal_element(dim, dim, mu);
    let u = DMatrix::from_columns(&expanding.iter().map(|e| null_vector(m - shift(e.re))).collect::<Vec<_>>());
    let w = DMatrix::from_columns(
        &expanding
            .iter()
            .map(|e| null_vector(m.transpose() - shift(e.re)))
            .collect::<Vec<_>>(),
    );
    let gram = w.transpose() * &u;
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::EigenFailure("left and right expanding eigenvectors are orthogonal".into()))?;
    Ok(DMatrix::identity(dim, dim) - &u * inv * w.transpose())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub samples: usize,
    pub steps: usize,
    /// Per sample: fitted rate `c` in `|M^i v| ~ K c^-i`.
    pub rates: Vec<f64>,
    pub constants: Vec<f64>,
    /// Per sample: correlation of `log |M^i v|` with `i`.
    pub correlations: Vec<f64>,
}

impl ContractionReport {
    pub fn min_rate(&self) -> f64 {
        self.rates.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_correlation(&self) -> f64 {
        self.correlations.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Iterate random stable-projected vectors under `m`, re-projecting after each step so rounding
/// does not feed the expanding directions, and fit geometric decay to the norms.
pub fn horizontal_contraction(m: &DMatrix<f64>, report: &SpectrumReport, samples: usize, steps: usize, seed: u64) -> Result<ContractionReport> {
    let proj = stable_projector(m, report)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = m.nrows();
    let mut out = ContractionReport {
        samples,
        steps,
        rates: Vec::new(),
        constants: Vec::new(),
        correlations: Vec::new(),
    };
    for _ in 0..samples {
        let mut v = &proj * DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
        let mut xs = Vec::with_capacity(steps + 1);
        let mut ys = Vec::with_capacity(steps + 1);
        for i in 0..=steps {
            xs.push(i as f64);
            ys.push(v.norm().ln());
            v = &proj * (m * v);
        }
        let fit = numeric::fit_line(&xs, &ys);
        out.rates.push((-fit.slope).exp());
        out.constants.push((fit.intercept - ys[0]).exp());
        out.correlations.push(fit.correlation);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evaluate, LevelPoint};
    use crate::families::{quad_composition, QuadCompositionParams};

    fn quad(l: f64) -> NormalizedExtendedMap {
        quad_composition(&QuadCompositionParams::new(vec![l]).unwrap())
    }

    #[test]
    fn quadratic_is_represented_exactly() {
        let fit = fit_coeffs(&quad(0.83), 4).unwrap();
        assert!(fit.residual < 1e-14, "{}", fit.residual);
        let g = fit.map.to_map();
        for z in [-1.0, -0.4, 0.0, 0.3, 0.9] {
            let a = evaluate(&g, LevelPoint::new(z, 0)).unwrap().x;
            let b = -1.0 + 2.0 * 0.83 * (1.0 - z * z);
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(g.branch(0).eval(-1.0), -1.0);
        assert_eq!(g.branch(0).deriv(0.0), 0.0);
    }

    #[derive(Debug)]
    struct Cosine(f64);
    impl Branch for Cosine {
        fn eval(&self, x: f64) -> f64 {
            self.0 + 2.0 * (x.cos() - 1f64.cos())
        }
        fn deriv(&self, x: f64) -> f64 {
            -2.0 * x.sin()
        }
        fn critical_point(&self) -> f64 {
            0.0
        }
        fn domain(&self) -> Interval {
            Interval::new(-1.0, 1.0)
        }
    }

    #[test]
    fn analytic_branch_fit_is_accurate() {
        let fit = fit_branches(&[Arc::new(Cosine(-1.0)) as Arc<dyn Branch>], 12, DEFAULT_SCALE).unwrap();
        assert!(fit.residual < 1e-12);
        assert!(fit.shifts[0].abs() < 1e-12);
        let g = fit.map.to_map();
        for i in 0..100 {
            let z = -1.0 + 2.0 * numeric::van_der_corput(i);
            let exact = Cosine(-1.0).eval(z);
            assert!((g.branch(0).eval(z) - exact).abs() < 1e-10 * exact.abs().max(1.0));
        }
    }

    #[test]
    fn constraint_violation_moves_the_constant() {
        let fit = fit_branches(&[Arc::new(Cosine(-0.75)) as Arc<dyn Branch>], 12, DEFAULT_SCALE).unwrap();
        assert!((fit.shifts[0] + 0.25).abs() < 1e-12, "{:?}", fit.shifts);
        assert_eq!(fit.map.to_map().branch(0).eval(-1.0), -1.0);
    }

    #[test]
    fn apply_r_at_superstable_parameter() {
        let lstar = (1.0 + 5f64.sqrt()) / 4.0;
        let c = fit_coeffs(&quad(lstar), 8).unwrap().map;
        let r = apply_r(&c, &MarkedCombinatorialData::doubling()).unwrap();
        let g = r.to_map();
        assert_eq!(g.branch(0).eval(-1.0), -1.0);
        assert!(g.branch(0).eval(0.0).abs() < 1e-10);
    }

    #[test]
    fn apply_r_reports_wrong_combinatorics() {
        let c = fit_coeffs(&quad(0.96), 8).unwrap().map;
        assert!(matches!(
            apply_r(&c, &MarkedCombinatorialData::doubling()),
            Err(Error::CycleMismatch(_))
        ));
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let c = seed_from_parameter(0.8924864179677362, &MarkedCombinatorialData::doubling(), 10, 2).unwrap();
        let check = fd_check(&c, &MarkedCombinatorialData::doubling(), 1e-6).unwrap();
        assert!(check.max_abs_difference < 1e-5, "{check:?}");
    }

    #[test]
    fn identity_spectrum_is_unit_band() {
        let r = spectrum_report(&DMatrix::identity(5, 5)).unwrap();
        assert_eq!(r.count_unit, 5);
        assert_eq!(r.count_expanding + r.count_contracting, 0);
    }

    #[test]
    fn diagonal_spectrum_bands() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 0.5, -0.25, 1.0]));
        let r = spectrum_report(&m).unwrap();
        assert_eq!((r.count_expanding, r.count_unit, r.count_contracting), (1, 1, 2));
        assert_eq!(r.leading.modulus, 3.0);
        let p = stable_projector(&m, &r).unwrap();
        assert!((p[(0, 0)]).abs() < 1e-12 && (p[(1, 1)] - 1.0).abs() < 1e-12);
    }
}
