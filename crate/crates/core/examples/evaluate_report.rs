//! Jaccard scoring and report aggregation: scores a few hand-made masks,
//! summarizes four example scores against the 0.65 "segmented" threshold,
//! and renders a prediction/ground-truth contact sheet.
//!
//! ```text
//! cargo run --example evaluate_report -- [sheet.ppm]
//! ```

use lesionseg::data::write_netpbm;
use lesionseg::eval::{confusion, contact_sheet, EvalReport, ImageScore, DEFAULT_THRESHOLD};

fn disc(size: usize, cx: f64, cy: f64, r: f64) -> Vec<u8> {
    (0..size * size)
        .map(|i| {
            let (y, x) = ((i / size) as f64, (i % size) as f64);
            (((x - cx).powi(2) + (y - cy).powi(2)) < r * r) as u8
        })
        .collect()
}

fn main() -> lesionseg::Result<()> {
    let size = 64;
    let gt = disc(size, 32.0, 32.0, 18.0);
    let pred = disc(size, 36.0, 30.0, 16.0);
    let counts = confusion(&pred, &gt)?;
    println!(
        "pred vs gt: both {}  pred only {}  gt only {}  neither {}  -> J = {:.3}",
        counts.n11,
        counts.n10,
        counts.n01,
        counts.n00,
        counts.jaccard()
    );

    let scores = [0.943, 0.875, 0.271, 0.527]
        .iter()
        .enumerate()
        .map(|(i, &j)| ImageScore {
            id: format!("img{i}"),
            jaccard: j,
        })
        .collect();
    let report = EvalReport::new(scores, DEFAULT_THRESHOLD)?;
    print!("{}", report.to_csv());
    let s = &report.summary;
    println!(
        "mean {:.3}  median {:.3}  std {:.4}  success {}/{}",
        s.mean, s.median, s.std, s.success_count, s.count
    );

    let path = std::env::args().nth(1).unwrap_or_else(|| "sheet.ppm".into());
    write_netpbm(&path, &contact_sheet(&pred, &gt, size, size)?)?;
    println!("contact sheet written to {path}");
    Ok(())
}
