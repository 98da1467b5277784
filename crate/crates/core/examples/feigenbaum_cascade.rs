//! Period-doubling cascade of the quadratic family: superstable parameters, the ratios of their
//! gaps, and the scaling of restrictive intervals at the accumulation point.
//!
//! `cargo run --release --example feigenbaum_cascade [K]`

use renormlab::renorm::MarkedCombinatorialData;
use renormlab::search::cascade;

fn main() -> renormlab::Result<()> {
    let k: usize = std::env::args().nth(1).map_or(10, |s| s.parse().expect("K is an integer"));
    let t = std::time::Instant::now();
    let rep = cascade(&MarkedCombinatorialData::doubling(), k)?;
    println!("{:>3}  {:>20}  {:>18}", "k", "lambda_k", "delta_k");
    for (i, l) in rep.lambdas.iter().enumerate() {
        let d = if i >= 1 { rep.deltas.get(i - 1).map_or(String::new(), |d| format!("{d:.12}")) } else { String::new() };
        println!("{i:>3}  {l:>20.17}  {d:>18}");
    }
    println!("accumulation point  {:.15}", rep.lambda_inf);
    println!("interval scalings:");
    for (i, a) in rep.alphas.iter().enumerate() {
        println!("  level {:>2}  {a:.10}", i + 1);
    }
    println!("({:.2?})", t.elapsed());
    Ok(())
}
