//! Small FWI instances shared by the integration tests.

use lsfwi::grid::Grid2D;
use lsfwi::helmholtz::PmlConfig;
use lsfwi::model::{linear_background, make_salt_model, BackgroundParam, Shape};
use lsfwi::survey::{equispaced_line, Acquisition, Survey};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub survey: Survey,
    pub background: Vec<f64>,
    pub truth: Vec<f64>,
    pub indicator: Vec<f64>,
    pub m1: f64,
}

/// 40×20 grid (h = 50 m), 3 surface sources, 8 receivers, 2 frequencies,
/// an elliptical salt body inside a linear background.
pub fn gradient_instance() -> Instance {
    let grid = Grid2D::new(40, 20, 50.0).unwrap();
    let acq = Acquisition {
        sources: equispaced_line(&grid, 3, 0.0),
        receivers: equispaced_line(&grid, 8, 50.0),
        frequencies: vec![2.5, 3.0],
        bands: vec![vec![0, 1]],
        ricker_peak: Some(15.0),
    };
    let pml = PmlConfig { width: 10, strength: 4.0 };
    let survey = Survey::new(grid, acq, pml).unwrap();
    let background = linear_background(&grid, &BackgroundParam::default()).unwrap();
    let shape = Shape::ellipse([1000.0, 500.0], [400.0, 200.0]);
    let model = make_salt_model(&grid, &background, &shape, 4500.0).unwrap();
    Instance { survey, background, truth: model.m, indicator: model.indicator, m1: model.m1 }
}

/// Random direction scaled to `scale` in the max norm.
pub fn random_direction(n: usize, scale: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let max = v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    v.into_iter().map(|x| x * scale / max).collect()
}
