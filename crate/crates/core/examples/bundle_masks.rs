//! Regenerates the bundled salt masks under `data/`.
//!
//! `cargo run -p lsfwi --example bundle_masks`

use std::path::Path;

use lsfwi::grid::Grid2D;
use lsfwi::io::{write_model, ModelFile};
use lsfwi::model::Preset;

fn main() -> lsfwi::Result<()> {
    let grid = Grid2D::new(201, 61, 50.0)?;
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    std::fs::create_dir_all(&dir)?;
    for p in Preset::ALL {
        let mask = p.shape(&grid).rasterize(&grid)?;
        let file = ModelFile::new(grid)
            .with_field("indicator", "1", mask)
            .with_attribute("preset", p.name())?;
        let path = dir.join(format!("mask_{}.mod", p.name()));
        write_model(&path, &file)?;
        println!("{}", path.display());
    }
    Ok(())
}
