//! List the primitive combinatorics of first renormalizations up to a period bound.

use renormlab::search::{enumerate_combinatorics, Family};

fn main() -> renormlab::Result<()> {
    let runs = [
        (Family::Quadcomp { n: 1 }, 4, 1e-4),
        (Family::Quadcomp { n: 2 }, 2, 0.01),
        (Family::Cubic, 2, 0.01),
    ];
    for (family, p, step) in runs {
        let t = std::time::Instant::now();
        let e = enumerate_combinatorics(&family, p, step)?;
        println!("{family:?}, period <= {p}: {} combinatorics ({:.2?})", e.combinatorics.len(), t.elapsed());
        for s in &e.combinatorics {
            println!("  {}", s.label());
        }
    }
    Ok(())
}
