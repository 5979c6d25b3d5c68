use super::ModelError;
use crate::decomposition::LabelId;

/// Highest-scoring permitted label; ties go to the lowest id.
pub fn decode(scores: &[f64], mask: Option<&[bool]>) -> Result<LabelId, ModelError> {
    let mut best: Option<(LabelId, f64)> = None;
    for (k, &s) in scores.iter().enumerate() {
        if mask.is_some_and(|m| !m.get(k).copied().unwrap_or(false)) {
            continue;
        }
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((k, s));
        }
    }
    best.map(|(k, _)| k).ok_or(ModelError::EmptyMask)
}

/// [`decode`] applied to every row.
pub fn decode_rows(rows: &[Vec<f64>], mask: Option<&[bool]>) -> Result<Vec<LabelId>, ModelError> {
    rows.iter().map(|r| decode(r, mask)).collect()
}
