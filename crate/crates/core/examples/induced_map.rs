//! The induced expanding map of the Feigenbaum quadratic map: branches, Markov endpoint matching,
//! derivative statistics and the escape test.
//!
//! `cargo run --release --example induced_map [K]`

use renormlab::attractor::{escape_dichotomy, expansion_report, induced_map_of};
use renormlab::search::quad_map;

fn main() -> renormlab::Result<()> {
    let k: usize = std::env::args().nth(1).map_or(3, |s| s.parse().expect("K is an integer"));
    let g = induced_map_of(&quad_map(&[0.892486417967745])?, k, 2)?;
    println!("{} branches at depth {k}", g.branches.len());
    for b in &g.branches {
        println!(
            "  depth {} pullback {:>2}  [{:+.10}, {:+.10}]  G = F^{:<3} onto R_-{}   endpoint error {:.1e}",
            b.depth,
            b.pullback,
            b.interval.lo,
            b.interval.hi,
            b.return_time,
            b.target_pullback(),
            b.endpoint_error
        );
    }
    let rep = expansion_report(&g, 1000);
    if let Some(s) = rep.overall {
        println!("|DG| over {} samples: min {:.4}, median {:.4}, max {:.4}", s.samples, s.min, s.median, s.max);
    }
    let esc = escape_dichotomy(&g, 200, 200, 50, 1);
    println!(
        "random points: {} escaped, {} reached the deepest critical intervals, {} stayed",
        esc.random.escaped, esc.random.unresolved, esc.random.stayed
    );
    println!(
        "postcritical points: {} escaped, {} reached the deepest critical intervals, {} stayed",
        esc.postcritical.escaped, esc.postcritical.unresolved, esc.postcritical.stayed
    );
    Ok(())
}
