//! Renormalize the quadratic map at the superstable period-2 parameter.
//!
//! The first renormalization of `F` at `lambda = (1 + sqrt 5) / 4` is again a quadratic map, the
//! superstable fixed-point one. This prints the cycle, the normalization of `R(F)`, and compares the
//! multiplier of `R(F)` at -1 with that of `F^2` at the boundary periodic point.

use renormlab::dynamics::{orbit_derivative, IntervalDynamics, LevelPoint};
use renormlab::renorm::{extract_mcd, find_restrictive_interval, renormalize};
use renormlab::search::quad_map;

fn main() -> renormlab::Result<()> {
    let lambda = (1.0 + 5f64.sqrt()) / 4.0;
    let f = quad_map(&[lambda])?;
    let cycle = find_restrictive_interval(&f, 8)?.expect("the period-2 cycle exists");
    println!("lambda = {lambda}");
    println!("period {}  P = [{:.12}, {:.12}]  beta = {:.12}", cycle.period, cycle.p.lo, cycle.p.hi, cycle.beta);
    println!("combinatorics {}", extract_mcd(&cycle).label());

    let g = renormalize(&cycle)?;
    let (at_minus_one, dg) = g.step_raw(0, -1.0);
    let (at_zero, _) = g.step_raw(0, 0.0);
    let df2 = orbit_derivative(&f, LevelPoint::new(cycle.beta, 0), cycle.period)?.value;
    println!("R(F)(-1) = {at_minus_one}");
    println!("R(F)(0)  = {at_zero:e}");
    println!("R(F)'(-1) = {dg:.15}   DF^2(beta) = {df2:.15}   relative gap {:.2e}", ((dg - df2) / df2).abs());
    Ok(())
}
