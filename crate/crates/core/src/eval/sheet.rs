use crate::data::Image;
use crate::error::{Error, Result};

const SEPARATOR: u8 = 128;

/// Side-by-side rendering: prediction on the left, ground truth on the
/// right, white lesion on black, split by a two-pixel mid-gray column.
pub fn contact_sheet(pred: &[u8], gt: &[u8], height: usize, width: usize) -> Result<Image> {
    let area = height * width;
    if pred.len() != area || gt.len() != area {
        return Err(Error::shape(format!(
            "masks of {} and {} pixels do not match {height}x{width}",
            pred.len(),
            gt.len()
        )));
    }
    let sheet_w = 2 * width + 2;
    let mut data = Vec::with_capacity(height * sheet_w * 3);
    let px = |v: u8| if v > 0 { 255 } else { 0 };
    for y in 0..height {
        let row = y * width..(y + 1) * width;
        let pixels = pred[row.clone()]
            .iter()
            .map(|&v| px(v))
            .chain([SEPARATOR, SEPARATOR])
            .chain(gt[row].iter().map(|&v| px(v)));
        for v in pixels {
            data.extend_from_slice(&[v, v, v]);
        }
    }
    Image::rgb(sheet_w, height, data)
}
