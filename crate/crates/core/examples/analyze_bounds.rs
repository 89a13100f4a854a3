//! Rank lower bounds for the bundled architectures.

use std::path::Path;

use convac::analysis::theorem1_bound;
use convac::io::read_arch;

fn main() -> convac::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/arch");
    let mut files: Vec<_> = std::fs::read_dir(&dir)?.filter_map(|e| e.ok()).map(|e| e.path()).collect();
    files.sort();
    for path in files {
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        let spec = read_arch(&path)?;
        match theorem1_bound(&spec) {
            Ok(r) => println!(
                "{name:<26} H={:<4} bound {}^{} at layer {} (log10 {}){}",
                spec.width(),
                r.best.base,
                r.best.exponent,
                r.best.layer,
                r.log10.map_or("-inf".into(), |l| format!("{l:.2}")),
                if r.trivial { ", trivial" } else { "" }
            ),
            Err(e) => println!("{name:<26} skipped: {e}"),
        }
    }
    Ok(())
}
