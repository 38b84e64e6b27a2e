//! Regenerate the bundled synthetic cohort.
//!
//! ```sh
//! cargo run --example synthesize_cohort -- [OUT.csv] [SEED]
//! ```

use triage::data::Schema;
use triage::synth::{generate_csv, SynthConfig, DEFAULT_SEED};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = args.next().unwrap_or_else(|| "cohort.csv".into());
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(DEFAULT_SEED);
    let cfg = SynthConfig { seed, ..Default::default() };
    let text = generate_csv(&Schema::bundled(), &cfg);
    std::fs::write(&out, &text)?;
    println!("wrote {} records to {out}", text.lines().filter(|l| !l.starts_with('#')).count() - 1);
    Ok(())
}
