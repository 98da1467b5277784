//! Renormalization fixed point in coefficient space and the spectrum of the derivative there.
//!
//! Default: the doubling fixed point. With `--two-level`, the stationary period-6 combinatorics of
//! the two-branch quadratic family, whose derivative has two expanding eigenvalues.
//!
//! `cargo run --release --example fixed_point_spectrum [--two-level] [m]`

use renormlab::cli::two_level_sigma;
use renormlab::renorm::MarkedCombinatorialData;
use renormlab::search::{Family, ParameterBox};
use renormlab::spectrum::{discretize_dr, fd_check, horizontal_contraction, renorm_fixed_point, seed_from_family, spectrum_report};

fn main() -> renormlab::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let two = args.iter().any(|a| a == "--two-level");
    let m: usize = args.iter().find_map(|a| a.parse().ok()).unwrap_or(if two { 20 } else { 30 });
    let t = std::time::Instant::now();

    let (family, sigma, region, depth, grid) = if two {
        let r = ParameterBox { lo: vec![0.6, 0.85], hi: vec![0.85, 1.0], level: 0, word: vec![] };
        (Family::Quadcomp { n: 2 }, two_level_sigma()?, r, 3, 60)
    } else {
        let r = ParameterBox { lo: vec![0.3], hi: vec![1.0], level: 0, word: vec![] };
        (Family::Quadcomp { n: 1 }, MarkedCombinatorialData::doubling(), r, 4, 400)
    };
    println!("combinatorics {}  degree m = {m}", sigma.label());
    let seed = seed_from_family(&family, &sigma, &region, depth, grid, m)?;
    let fp = renorm_fixed_point(&sigma, m, &seed)?;
    println!("Newton residuals {:?}", fp.residual_history.iter().map(|r| format!("{r:.1e}")).collect::<Vec<_>>());

    let dr = discretize_dr(&fp.map, &sigma)?;
    let rep = spectrum_report(&dr.matrix)?;
    println!(
        "{} expanding, {} near the unit circle, {} contracting; max eigen residual {:.1e}",
        rep.count_expanding, rep.count_unit, rep.count_contracting, rep.max_residual
    );
    for e in rep.eigenvalues.iter().take(6) {
        println!("  {:>22.15} {:+.3e}i   |mu| = {:.6}", e.re, e.im, e.modulus);
    }

    let fd = fd_check(&fp.map, &sigma, 1e-6)?;
    println!("finite-difference check: max entry gap {:.2e} (largest entry {:.2})", fd.max_abs_difference, fd.max_entry);

    let c = horizontal_contraction(&dr.matrix, &rep, 20, 20, 1)?;
    println!(
        "stable directions: slowest decay rate {:.3}, log-norm correlation at worst {:.5}",
        c.min_rate(),
        c.max_correlation()
    );
    println!("({:.2?})", t.elapsed());
    Ok(())
}
