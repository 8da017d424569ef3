//! Drives the `converge` pipeline from a config string: reruns the frame
//! solve on nested grids and prints the observed orders.

use pseudosphere::app::cmd_converge;
use pseudosphere::config::RunConfig;

const CONFIG: &str = r#"
[model]
kind = "sine_gordon"
kink = "static"

[chart]
lower = [-8.0, -8.0]
upper = [8.0, 8.0]
counts = [33, 33]

[converge]
command = "solve-frame"
levels = [1, 2, 4]
gate = ["closed_residual", "compat_residual"]
"#;

fn main() -> pseudosphere::Result<()> {
    let cfg = RunConfig::parse(CONFIG)?;
    let out = cmd_converge(&cfg, 1)?;
    for line in &out.lines {
        println!("{line}");
    }
    print!("{}", String::from_utf8_lossy(&out.artifacts[0].bytes));
    Ok(())
}
