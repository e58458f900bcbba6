use crate::error::{Error, Result};

/// Modal slice label; a tie goes to the positive (fatigue) class.
pub fn classify_block(slice_labels: &[bool]) -> Result<bool> {
    if slice_labels.is_empty() {
        return Err(Error::Contract(
            "cannot classify a block with no slices".into(),
        ));
    }
    let positive = slice_labels.iter().filter(|&&l| l).count();
    Ok(2 * positive >= slice_labels.len())
}

/// Block-level outcome of majority voting.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct BlockPrediction {
    pub block_key: String,
    pub subject_id: String,
    pub label: bool,
    pub predicted: bool,
    pub slices: usize,
    pub positive_slices: usize,
}

/// Groups slice predictions by block (in order of first appearance) and
/// votes. `items` yields `(block_key, subject_id, true label, slice
/// prediction)`.
pub fn vote_blocks<'a>(
    items: impl IntoIterator<Item = (&'a str, &'a str, bool, bool)>,
) -> Result<Vec<BlockPrediction>> {
    let mut out: Vec<BlockPrediction> = Vec::new();
    let mut index = std::collections::HashMap::new();
    for (key, subject, label, pred) in items {
        let i = *index.entry(key.to_string()).or_insert_with(|| {
            out.push(BlockPrediction {
                block_key: key.to_string(),
                subject_id: subject.to_string(),
                label,
                predicted: false,
                slices: 0,
                positive_slices: 0,
            });
            out.len() - 1
        });
        let block = &mut out[i];
        if block.label != label {
            return Err(Error::Contract(format!(
                "slices of {key} carry different labels"
            )));
        }
        block.slices += 1;
        block.positive_slices += pred as usize;
    }
    for b in &mut out {
        b.predicted = 2 * b.positive_slices >= b.slices;
    }
    Ok(out)
}
