//! The cubic family `z^3 - 3 a^2 z + b`: its period-2 superstable center, the extended map induced
//! by a restrictive cycle, and the boxes of a depth-2 parameter cover.

use std::collections::BTreeMap;
use std::sync::Arc;

use renormlab::dynamics::IntervalDynamics;
use renormlab::families::{cubic_map, induce_extended_map, CubicParams};
use renormlab::renorm::{extract_mcd, find_restrictive_cycle};
use renormlab::search::{parameter_cover, superstable_parameter, word_label, CoverOptions, Family, ParameterBox};

fn main() -> renormlab::Result<()> {
    let cubic = Family::Cubic;
    let p = [0.7, 0.02];
    let word = cubic.word_at(&p, 1, 2)?;
    println!("combinatorics at a = {}, b = {}: {}", p[0], p[1], word_label(&word));
    let bracket = ParameterBox { lo: vec![0.6, -0.1], hi: vec![0.8, 0.1], level: 0, word: vec![] };
    let center = superstable_parameter(&cubic, &word, &bracket)?;
    println!("superstable center {:?} (1/sqrt 2 = {})", center, 0.5f64.sqrt());

    let f = cubic_map(CubicParams { a: p[0], b: p[1] })?;
    let cycle = find_restrictive_cycle(Arc::new(f), 2)?.expect("a period-2 restrictive cycle");
    let induced = induce_extended_map(&cycle)?;
    println!(
        "induced map: {} branches, return times {:?}, flipped {:?}, combinatorics {}",
        induced.map.levels(),
        induced.return_times,
        induced.flipped,
        extract_mcd(&cycle).label()
    );

    let cover = parameter_cover(&cubic, 2, 2, &CoverOptions::default())?;
    println!("cover measures by level {:?}", cover.measures);
    let mut by_word: BTreeMap<String, (usize, f64)> = BTreeMap::new();
    for b in cover.level(2) {
        let e = by_word.entry(word_label(&b.word)).or_default();
        e.0 += 1;
        e.1 += b.volume();
    }
    println!("level-2 boxes by combinatorics:");
    for (w, (count, vol)) in by_word {
        println!("  {w:>6}: {count:>4} boxes, area {vol:.3e}");
    }
    Ok(())
}
