//! Cover the parameter space of a family by boxes of fixed renormalization combinatorics and watch
//! the covered measure shrink level by level.
//!
//! `cargo run --release --example parameter_cover [p] [depth]` runs the one-branch quadratic family;
//! add `--cubic` for the cubic family.

use renormlab::search::{parameter_cover, CoverOptions, Family};

fn main() -> renormlab::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cubic = args.iter().any(|a| a == "--cubic");
    let nums: Vec<usize> = args.iter().filter_map(|a| a.parse().ok()).collect();
    let (family, p, depth) = if cubic {
        (Family::Cubic, nums.first().copied().unwrap_or(2), nums.get(1).copied().unwrap_or(2))
    } else {
        (Family::Quadcomp { n: 1 }, nums.first().copied().unwrap_or(4), nums.get(1).copied().unwrap_or(3))
    };
    let t = std::time::Instant::now();
    let rep = parameter_cover(&family, p, depth, &CoverOptions::default())?;
    println!("{:?}, periods up to {p}, depth {depth}", family);
    println!("{:>5} {:>6} {:>14} {:>10}", "level", "boxes", "measure", "ratio");
    for (j, m) in rep.measures.iter().enumerate() {
        let ratio = if j > 0 { format!("{:.4}", m / rep.measures[j - 1]) } else { String::new() };
        println!("{j:>5} {:>6} {m:>14.6e} {ratio:>10}", rep.level(j).count());
    }
    if let Some(r) = rep.max_period_ratio() {
        println!("largest period ratio between nested boxes: {r}");
    }
    for w in &rep.warnings {
        println!("warning: {w}");
    }
    println!("({:.2?})", t.elapsed());
    Ok(())
}
