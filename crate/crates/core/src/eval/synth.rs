//! Seeded synthetic drug/effect sentences for smoke tests and benchmarks.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DatasetItem;
use crate::sketch::TaskKind;

const DRUGS: [&str; 12] = [
    "amoxicillin",
    "methotrexate",
    "warfarin",
    "lisinopril",
    "carbamazepine",
    "vancomycin",
    "cisplatin",
    "lithium",
    "isoniazid",
    "clozapine",
    "amiodarone",
    "valproate",
];

const EFFECTS: [&str; 12] = [
    "rash",
    "hepatotoxicity",
    "neutropenia",
    "angioedema",
    "pancreatitis",
    "seizures",
    "nephrotoxicity",
    "bleeding",
    "agranulocytosis",
    "hyponatremia",
    "delirium",
    "bradycardia",
];

/// `(template, intended label)`; `{d}` and `{e}` are the drug and effect.
const TEMPLATES: [(&str, u8); 12] = [
    ("The patient developed {e} after starting {d}.", 1),
    (
        "A 54-year-old woman presented with {e} secondary to {d}.",
        1,
    ),
    (
        "Shortly after initiation of {d}, the patient experienced {e}.",
        1,
    ),
    ("We report a case of {e} induced by {d} in a young man.", 1),
    ("He was admitted with severe {e} caused by {d} therapy.", 1),
    (
        "The patient developed {e} while taking {d} for three weeks.",
        1,
    ),
    ("{D} did not cause any {e} in the patient.", 0),
    (
        "There was no evidence of {e} in the patient after {d} was started.",
        0,
    ),
    (
        "{D} is widely used, and {e} is a common complaint in clinics.",
        0,
    ),
    ("The patient received {d} and had a history of {e}.", 0),
    ("Her {e} was ruled out as a consequence of {d}.", 0),
    ("Monitoring for {e} is recommended in trials of {d}.", 0),
];

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// `n` items with ids `s0000…`, drawn from fixed templates. Relation items
/// carry the drug and effect; sentence items carry neither.
pub fn synthetic_corpus(n: usize, seed: u64, task: TaskKind) -> Vec<DatasetItem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let drug = *DRUGS.choose(&mut rng).expect("non-empty");
            let effect = *EFFECTS.choose(&mut rng).expect("non-empty");
            let (template, label) = TEMPLATES[rng.random_range(0..TEMPLATES.len())];
            let text = template
                .replace("{D}", &capitalize(drug))
                .replace("{d}", drug)
                .replace("{e}", effect);
            let id = format!("s{i:04}");
            match task {
                TaskKind::Relation => DatasetItem::relation(id, text, drug, effect, label),
                TaskKind::Sentence => DatasetItem::sentence(id, text, label),
            }
        })
        .collect()
}
