//! Finite-depth solenoid certificates: at the accumulation point of the doubling cascade the
//! certificate reaches full depth with periods 2^k, at a superstable parameter it stops after one
//! level, and the full quadratic map has none.

use renormlab::attractor::detect_solenoid;
use renormlab::search::quad_map;

fn main() -> renormlab::Result<()> {
    let cases = [
        ("accumulation point", 0.892486417967745),
        ("superstable period 2", (1.0 + 5f64.sqrt()) / 4.0),
        ("full map", 1.0),
    ];
    for (name, lambda) in cases {
        let t = std::time::Instant::now();
        match detect_solenoid(&quad_map(&[lambda])?, 6, 2.0)? {
            None => println!("{name} (lambda = {lambda}): no renormalization, no certificate"),
            Some(c) => {
                println!("{name} (lambda = {lambda}): depth {}, periods {:?}, ratio bound {:?}", c.depth, c.periods, c.ratio_bound);
                println!("  verdict {:?}", c.verdict);
                println!("  total length of the deepest level {:.3e}", c.attractor_length());
            }
        }
        println!("  ({:.2?})", t.elapsed());
    }
    Ok(())
}
