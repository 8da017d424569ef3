//! Round trip of frame data through the `pssfield v1` text format, then a
//! solve on the data read back.

use pseudosphere::models::cosh_frame;
use pseudosphere::pssfield::{read_frame, write_frame};
use pseudosphere::rotation::{solve_phi_2d, SolveOptions};
use pseudosphere::GridChart;

fn main() -> pseudosphere::Result<()> {
    let chart = GridChart::from_bounds(&[-1.0, -1.5], &[1.0, 1.5], &[41, 41])?;
    let dir = std::env::temp_dir().join("pseudosphere-field-files");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("cosh_frame.pss");
    write_frame(&path, &cosh_frame(&chart)?)?;
    let fd = read_frame(&path)?;
    let header = std::fs::read_to_string(&path)?
        .lines()
        .next()
        .unwrap_or_default()
        .to_string();
    println!("{header}");
    let rep = solve_phi_2d(&fd, 0.0, &chart.center(), &SolveOptions::default())?;
    println!("{}", rep.summary_line());
    Ok(())
}
