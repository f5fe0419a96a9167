//! Regenerate the bundled fixture files under `crates/core/fixtures`.
//!
//!     cargo run -p openindex-core --example gen_fixtures

use openindex_core::fixtures::{all_fixture_files, fixture_dir};

fn main() -> std::io::Result<()> {
    let dir = fixture_dir();
    std::fs::create_dir_all(&dir)?;
    for (name, content) in all_fixture_files() {
        std::fs::write(dir.join(name), content)?;
        println!("wrote {}", dir.join(name).display());
    }
    Ok(())
}
