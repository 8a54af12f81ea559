//! Level-set inversion of one elliptical salt body on a small grid.

use lsfwi::grid::Grid2D;
use lsfwi::helmholtz::PmlConfig;
use lsfwi::inversion::{erf, pls_fwi_multiscale, InversionConfig};
use lsfwi::levelset::init_levelset;
use lsfwi::model::{linear_background, make_salt_model, BackgroundParam, Shape};
use lsfwi::rbf::{assemble_kernel, build_node_grid, RbfFamily, RbfSpec};
use lsfwi::survey::{forward_model, standard_acquisition, Survey};

fn main() -> lsfwi::Result<()> {
    let grid = Grid2D::new(101, 31, 50.0)?;
    let survey = Survey::new(grid, standard_acquisition(&grid, 16, 32)?, PmlConfig { width: 10, strength: 4.0 })?;
    let m0 = linear_background(&grid, &BackgroundParam::default())?;
    let truth = make_salt_model(&grid, &m0, &Shape::ellipse([2300.0, 800.0], [1130.0, 430.0]), 4500.0)?;
    let data = forward_model(&survey, &truth.m)?;

    let nodes = build_node_grid(&grid, 5, 2)?;
    let kernel = assemble_kernel(&grid, &nodes, &RbfSpec::for_nodes(RbfFamily::Wendland4, 4.0, &nodes)?)?;
    let alpha0 = init_levelset(&nodes, grid.center(), 2.0 * nodes.spacing, 1.0, -1.0)?;

    let bands = survey.acquisition.bands.clone();
    let run = pls_fwi_multiscale(&alpha0, &m0, truth.m1, &kernel, &survey, &data, &bands, &InversionConfig::default())?;
    println!("ERF {:.3e}", erf(&survey, &run.model, &run.start, &data, &survey.acquisition.band_union())?);
    Ok(())
}
