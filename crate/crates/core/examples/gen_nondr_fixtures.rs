//! Regenerates `fixtures/nondr_tables.json`: monotone lattice-submodular
//! tables that are not DR-submodular, certified by exhaustive checks.
//!
//! Usage: cargo run -p latmax --example gen_nondr_fixtures [-- <output path>]

use latmax::instances::{make_lattice_nondr, random, TableFixture};
use latmax::LatticePoint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PER_DIM: usize = 6;

fn main() {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/nondr_tables.json").to_string());
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    let mut tables = Vec::new();
    for n in [2usize, 3] {
        let mut found = 0;
        while found < PER_DIM {
            let cap = LatticePoint::from_vec((0..n).map(|_| rng.gen_range(2..=4)).collect());
            let values = random::convex_plus_concave_table(&mut rng, &cap);
            match make_lattice_nondr(cap.clone(), values.clone()) {
                Ok(t) if !t.dr_submodular => {
                    tables.push(TableFixture { cap: cap.into_vec(), values });
                    found += 1;
                }
                _ => {}
            }
        }
    }
    let lines: Vec<String> = tables.iter().map(|t| serde_json::to_string(t).expect("serialize fixture")).collect();
    let json = format!("[\n  {}\n]\n", lines.join(",\n  "));
    std::fs::write(&out, json).expect("write fixture file");
    eprintln!("wrote {} tables to {out}", tables.len());
}
