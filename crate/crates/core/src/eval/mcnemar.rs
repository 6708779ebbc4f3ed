use serde::{Deserialize, Serialize};

use super::{align, chi2_p_value, DatasetItem, PredictionSet};
use crate::error::StatsError;

/// Continuity-corrected McNemar test. `n01` counts items method A got wrong
/// and method B got right; `n10` the reverse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McNemarResult {
    pub n01: u64,
    pub n10: u64,
    pub chi2: f64,
    pub p_value: f64,
}

/// `chi2 = (|n01 - n10| - 1)^2 / (n01 + n10)`, and `chi2 = 0, p = 1` when
/// there are no discordant pairs.
pub fn mcnemar_counts(n01: u64, n10: u64) -> McNemarResult {
    let discordant = n01 + n10;
    if discordant == 0 {
        return McNemarResult {
            n01,
            n10,
            chi2: 0.0,
            p_value: 1.0,
        };
    }
    let diff = n01.abs_diff(n10) as f64 - 1.0;
    let chi2 = diff * diff / discordant as f64;
    McNemarResult {
        n01,
        n10,
        chi2,
        p_value: chi2_p_value(chi2).expect("chi2 is non-negative"),
    }
}

pub fn mcnemar_from_correctness(
    a_correct: &[bool],
    b_correct: &[bool],
) -> Result<McNemarResult, StatsError> {
    if a_correct.len() != b_correct.len() {
        return Err(StatsError::InvalidArgument(format!(
            "{} vs {} paired items",
            a_correct.len(),
            b_correct.len()
        )));
    }
    let mut n01 = 0;
    let mut n10 = 0;
    for (&a, &b) in a_correct.iter().zip(b_correct) {
        match (a, b) {
            (false, true) => n01 += 1,
            (true, false) => n10 += 1,
            _ => {}
        }
    }
    Ok(mcnemar_counts(n01, n10))
}

/// Paired comparison of two prediction sets over the same gold items.
pub fn mcnemar(
    gold: &[DatasetItem],
    a: &PredictionSet,
    b: &PredictionSet,
) -> Result<McNemarResult, StatsError> {
    let (g, pa) = align(gold, a)?;
    let (_, pb) = align(gold, b)?;
    let correct = |p: &[u8]| -> Vec<bool> { g.iter().zip(p).map(|(x, y)| x == y).collect() };
    mcnemar_from_correctness(&correct(&pa), &correct(&pb))
}
