//! Centroid tracking on synthetic camera frames, written as a trace CSV.
use beamwander::ingest;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let frames = (0..50)
        .map(|k| {
            let a = k as f64 * 0.2;
            ingest::gaussian_spot(48, 64, 32.0 + 8.0 * a.cos(), 24.0 + 5.0 * a.sin(), 4.0)
        })
        .collect::<beamwander::Result<Vec<_>>>()?;
    let trace = ingest::centroid_trace(&frames, 1.0 / 300.0)?;
    println!("{} frames, centre {:?}, units {}", trace.len(), trace.center, trace.units);

    let dir = std::env::temp_dir().join("beamwander-ingest-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("trace.csv");
    ingest::write_trace(&trace, &path)?;
    let back = ingest::read_trace(&path)?;
    println!("wrote {} and read back {} samples, identical: {}", path.display(), back.len(), back.xs == trace.xs);
    Ok(())
}
