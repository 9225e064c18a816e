//! Calibrate intent boundaries two ways:
//!
//! 1. from labelled samples scattered around a planted boundary with 5%
//!    label noise, reporting how far the recovered normal is from the truth;
//! 2. from the bundled drone-style recording in `data/sample`, through
//!    interaction extraction and per-frame labelling.
//!
//!     cargo run --release --example calibrate_synthetic

use crosswalk_ir::calibration::synthetic::{normal_angle_deg, planted_samples};
use crosswalk_ir::calibration::{calibrate, load_dataset_dir, train_linear_svm, ExtractParams, SvmConfig};
use crosswalk_ir::intent::{BoundaryParams, Perspective};
use std::path::Path;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let planted = BoundaryParams::new(-0.003, 0.05, 0.25, Perspective::PedVsAv);
    let samples = planted_samples(&planted, 500, 0.05, 7);
    let model = train_linear_svm(&samples, &SvmConfig::default())?;
    let p = model.params;
    println!("planted   w1={:.5} w2={:.4} b={:.4}", planted.w1, planted.w2, planted.b);
    // rescale so the two rows are comparable by eye
    let s = planted.w2 / p.w2;
    println!("recovered w1={:.5} w2={:.4} b={:.4}  (scaled by {s:.3})", p.w1 * s, p.w2 * s, p.b * s);
    println!(
        "normal off by {:.2} deg, training accuracy {:.2}%\n",
        normal_angle_deg(&p, &planted),
        100.0 * model.metrics.accuracy
    );

    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/sample");
    let recordings = load_dataset_dir(&dir)?;
    let run = calibrate(&recordings, &ExtractParams::default(), 1, &SvmConfig::default());
    println!("{}: {} interactions, {} skipped", dir.display(), run.extraction.segments.len(), run.extraction.skipped.len());
    for (m, n) in run.models.iter().zip(run.samples) {
        match m {
            Ok(m) => println!(
                "  {:<9} w1={:.4} w2={:.4} b={:.4}  acc {:.2}%  f1 {:.2}%  ({n} samples)",
                m.params.perspective.as_str(),
                m.params.w1,
                m.params.w2,
                m.params.b,
                100.0 * m.metrics.accuracy,
                100.0 * m.metrics.f1
            ),
            Err(e) => println!("  rejected: {e} ({n} samples)"),
        }
    }
    Ok(())
}
