//! Shared inputs for the benchmarks in `benches/`.

use logic_sketch::eval::synthetic_corpus;
use logic_sketch::{parse_sketch, DatasetItem, SketchDocument, TaskKind};

pub const RELATION_SKETCH: &str = include_str!("../../core/fixtures/ade_relation.sketch");

pub fn relation_sketch() -> SketchDocument {
    parse_sketch(RELATION_SKETCH).expect("fixture parses")
}

pub fn relation_corpus(n: usize) -> Vec<DatasetItem> {
    synthetic_corpus(n, 2024, TaskKind::Relation)
}

/// Gold labels and predictions that agree on roughly 80% of items.
pub fn label_pairs(n: usize) -> (Vec<u8>, Vec<u8>) {
    let gold: Vec<u8> = (0..n).map(|i| ((i * 7919) % 3 == 0) as u8).collect();
    let pred = gold
        .iter()
        .enumerate()
        .map(|(i, &g)| if (i * 104_729) % 5 == 0 { 1 - g } else { g })
        .collect();
    (gold, pred)
}
