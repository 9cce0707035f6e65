use crate::error::{Error, Result};

/// Pixel counts of the four (prediction, ground truth) combinations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    /// pred = 1, gt = 1
    pub n11: u64,
    /// pred = 1, gt = 0
    pub n10: u64,
    /// pred = 0, gt = 1
    pub n01: u64,
    /// pred = 0, gt = 0
    pub n00: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.n11 + self.n10 + self.n01 + self.n00
    }

    /// `n11 / (n11 + n10 + n01)`; two empty masks agree perfectly (1.0).
    pub fn jaccard(&self) -> f64 {
        let union = self.n11 + self.n10 + self.n01;
        if union == 0 {
            1.0
        } else {
            self.n11 as f64 / union as f64
        }
    }
}

/// Counts pixel pairs of two equally sized binary masks.
pub fn confusion(pred: &[u8], gt: &[u8]) -> Result<ConfusionCounts> {
    if pred.len() != gt.len() {
        return Err(Error::shape(format!(
            "prediction has {} pixels, ground truth {}",
            pred.len(),
            gt.len()
        )));
    }
    let mut counts = [0u64; 4];
    for (index, (&p, &g)) in pred.iter().zip(gt).enumerate() {
        if p > 1 {
            return Err(Error::InvalidMask { index, value: p });
        }
        if g > 1 {
            return Err(Error::InvalidMask { index, value: g });
        }
        counts[((p << 1) | g) as usize] += 1;
    }
    Ok(ConfusionCounts {
        n00: counts[0],
        n01: counts[1],
        n10: counts[2],
        n11: counts[3],
    })
}

pub fn jaccard(counts: &ConfusionCounts) -> f64 {
    counts.jaccard()
}

pub fn mask_jaccard(pred: &[u8], gt: &[u8]) -> Result<f64> {
    Ok(confusion(pred, gt)?.jaccard())
}
