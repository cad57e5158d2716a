//! Simulate a censored step-stress dataset and write it as CSV.
//!
//! ```bash
//! cargo run --release --example simulate_dataset
//! ```

use ssalt::fixtures::{midpoint_frame, reference_mle, solar_lighting_design};
use ssalt::io::{parse_dataset_csv, write_dataset_csv};
use ssalt::simulate::simulate_dataset;
use ssalt::RngSeed;

fn main() -> ssalt::Result<()> {
    let design = solar_lighting_design().with_frame(midpoint_frame())?.with_n(50)?;
    let truth = reference_mle();

    // the same seed always gives the same dataset
    let data = simulate_dataset(&truth, &design, RngSeed::new(42));
    let counts = data.cell_counts();
    println!("cause 1 failures by phase: {:?}", counts[0]);
    println!("cause 2 failures by phase: {:?}", counts[1]);
    println!("censored at tc = {}: {}", design.tc(), data.n_censored());

    let mut csv = Vec::new();
    write_dataset_csv(&mut csv, &data)?;
    print!("{}", String::from_utf8_lossy(&csv).lines().take(6).collect::<Vec<_>>().join("\n"));
    println!("\n...");

    let back = parse_dataset_csv(csv.as_slice(), design)?;
    assert_eq!(back, data);
    Ok(())
}
