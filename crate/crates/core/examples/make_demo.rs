//! Writes the shipped demo dataset: 1,000 random sites in a 4600 x 2800 km
//! box with a spatially smooth regressor and a spatially smooth error.
//!
//! cargo run --release -p spatial-hac --example make_demo -- data/demo.csv

use std::io::Write;

use spatial_hac::geo::{random_points, BBox};
use spatial_hac::randfield::{FieldSimulator, SemivariogramModel, StreamId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "data/demo.csv".into());
    let ps = random_points(1000, BBox::contiguous_us(), 11)?;
    let sim = FieldSimulator::new(&ps, SemivariogramModel::matern(1.5, 80.0)?)?;
    let x = sim.draw(StreamId::new(2024, 0)).values;
    let u = sim.draw(StreamId::new(2024, 1)).values;
    let white = FieldSimulator::new(&ps, SemivariogramModel::matern(1.5, 0.0)?)?;
    let z = white.draw(StreamId::new(2024, 2)).values;

    let mut w = std::io::BufWriter::new(std::fs::File::create(&path)?);
    writeln!(w, "id,x_km,y_km,outcome,treatment,noise")?;
    for i in 0..ps.len() {
        let c = ps.point(i);
        let y = 1.0 + 0.1 * x[i] + u[i];
        writeln!(
            w,
            "{},{:.3},{:.3},{:.6},{:.6},{:.6}",
            i + 1,
            c[0],
            c[1],
            y,
            x[i],
            z[i]
        )?;
    }
    w.flush()?;
    Ok(())
}
