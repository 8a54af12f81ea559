//! Acquisition geometry, the forward operator `d = F(m)`, Ricker frequency
//! weighting and noise injection.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::helmholtz::{assemble_system, HelmholtzSystem, PmlConfig};

/// Source/receiver layout, frequencies (Hz) and the inversion band partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Acquisition {
    pub sources: Vec<[f64; 2]>,
    pub receivers: Vec<[f64; 2]>,
    pub frequencies: Vec<f64>,
    /// Ordered, disjoint sets of indices into `frequencies`.
    pub bands: Vec<Vec<usize>>,
    /// Peak frequency of the Ricker weighting; `None` disables weighting.
    pub ricker_peak: Option<f64>,
}

impl Acquisition {
    pub fn n_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn n_receivers(&self) -> usize {
        self.receivers.len()
    }

    pub fn n_frequencies(&self) -> usize {
        self.frequencies.len()
    }

    pub fn weight(&self, k: usize) -> f64 {
        match self.ricker_peak {
            Some(peak) => ricker_weight(self.frequencies[k], peak),
            None => 1.0,
        }
    }

    /// Frequency indices covered by any band, in ascending order.
    pub fn band_union(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.bands.iter().flatten().copied().collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    pub fn validate(&self, grid: &Grid2D) -> Result<()> {
        if self.sources.is_empty() || self.receivers.is_empty() || self.frequencies.is_empty() {
            return Err(Error::InvalidConfig("acquisition needs sources, receivers and frequencies".into()));
        }
        for (what, list) in [("source", &self.sources), ("receiver", &self.receivers)] {
            for (i, p) in list.iter().enumerate() {
                if grid.node_at(*p).is_none() {
                    return Err(Error::InvalidConfig(format!(
                        "{what} {i} at ({}, {}) is not a grid node inside the model",
                        p[0], p[1]
                    )));
                }
            }
        }
        if let Some(f) = self.frequencies.iter().find(|f| !(**f > 0.0 && f.is_finite())) {
            return Err(Error::InvalidConfig(format!("frequency {f} must be positive")));
        }
        if let Some(p) = self.ricker_peak {
            if !(p > 0.0) {
                return Err(Error::InvalidConfig(format!("Ricker peak {p} must be positive")));
            }
        }
        let mut prev_max = f64::NEG_INFINITY;
        let mut seen = vec![false; self.frequencies.len()];
        for (b, band) in self.bands.iter().enumerate() {
            if band.is_empty() {
                return Err(Error::InvalidConfig(format!("band {b} is empty")));
            }
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &k in band {
                let f = *self.frequencies.get(k).ok_or_else(|| {
                    Error::InvalidConfig(format!("band {b} references missing frequency {k}"))
                })?;
                if std::mem::replace(&mut seen[k], true) {
                    return Err(Error::InvalidConfig(format!("frequency {k} belongs to two bands")));
                }
                lo = lo.min(f);
                hi = hi.max(f);
            }
            if lo <= prev_max {
                return Err(Error::InvalidConfig(format!("band {b} is not ordered low to high")));
            }
            prev_max = hi;
        }
        Ok(())
    }
}

/// Ricker amplitude spectrum normalized to 1 at the peak frequency.
pub fn ricker_weight(f: f64, f_peak: f64) -> f64 {
    let r = (f / f_peak).powi(2);
    r * (1.0 - r).exp()
}

/// `start + k·step` for `k = 0..n`.
pub fn frequency_list(start: f64, step: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| start + k as f64 * step).collect()
}

/// Bands `[edges[b], edges[b+1])`, each taking the first `per_band`
/// frequencies at or above its lower edge.
pub fn partition_bands(frequencies: &[f64], edges: &[f64], per_band: usize) -> Vec<Vec<usize>> {
    let tol = 1e-9;
    edges
        .windows(2)
        .map(|e| {
            frequencies
                .iter()
                .enumerate()
                .filter(|(_, &f)| f >= e[0] - tol && f < e[1] - tol)
                .map(|(k, _)| k)
                .take(per_band)
                .collect()
        })
        .collect()
}

/// `n` node-aligned points spread evenly across the grid width at depth `depth`.
pub fn equispaced_line(grid: &Grid2D, n: usize, depth: f64) -> Vec<[f64; 2]> {
    let j = ((depth - grid.origin[1]) / grid.h).round() as usize;
    if n == 1 {
        return vec![[grid.x(grid.nx / 2), grid.z(j)]];
    }
    (0..n)
        .map(|s| {
            let i = ((s * (grid.nx - 1)) as f64 / (n - 1) as f64).round() as usize;
            [grid.x(i), grid.z(j)]
        })
        .collect()
}

/// 50 surface sources and 100 receivers at 50 m depth, 2.5–3.5 Hz in
/// 0.0625 Hz steps, four bands of four frequencies, Ricker peak 15 Hz.
pub fn benchmark_acquisition(grid: &Grid2D) -> Result<Acquisition> {
    if grid.width() < 10000.0 - 1e-9 || grid.depth() < 3000.0 - 1e-9 || grid.h > 50.0 {
        return Err(Error::InvalidGrid(format!(
            "layout needs at least a 10000 m x 3000 m grid with h <= 50 m, got {} x {} (h = {})",
            grid.width(),
            grid.depth(),
            grid.h
        )));
    }
    standard_acquisition(grid, 50, 100)
}

/// Benchmark frequencies, bands and depths with custom source and receiver counts.
pub fn standard_acquisition(grid: &Grid2D, n_sources: usize, n_receivers: usize) -> Result<Acquisition> {
    let frequencies = frequency_list(2.5, 0.0625, 17);
    let bands = partition_bands(&frequencies, &[2.5, 2.75, 3.0, 3.25, 3.5], 4);
    let acq = Acquisition {
        sources: equispaced_line(grid, n_sources, grid.origin[1]),
        receivers: equispaced_line(grid, n_receivers, grid.origin[1] + 50.0),
        frequencies,
        bands,
        ricker_peak: Some(15.0),
    };
    acq.validate(grid)?;
    Ok(acq)
}

/// How noise was added to a cube, kept for provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseRecord {
    pub snr_db: f64,
    pub seed: u64,
    /// 2-norm of the injected noise.
    pub noise_norm: f64,
}

/// Complex data indexed `(frequency, source, receiver)`, C order.
#[derive(Debug, Clone, PartialEq)]
pub struct DataCube {
    pub acquisition: Acquisition,
    pub values: Vec<Complex64>,
    pub noise: Option<NoiseRecord>,
}

impl DataCube {
    pub fn zeros(acquisition: &Acquisition) -> Self {
        let n = acquisition.n_frequencies() * acquisition.n_sources() * acquisition.n_receivers();
        Self { acquisition: acquisition.clone(), values: vec![Complex64::new(0.0, 0.0); n], noise: None }
    }

    pub fn shape(&self) -> [usize; 3] {
        [
            self.acquisition.n_frequencies(),
            self.acquisition.n_sources(),
            self.acquisition.n_receivers(),
        ]
    }

    #[inline]
    pub fn offset(&self, f: usize, s: usize, r: usize) -> usize {
        let [_, ns, nr] = self.shape();
        (f * ns + s) * nr + r
    }

    pub fn get(&self, f: usize, s: usize, r: usize) -> Complex64 {
        self.values[self.offset(f, s, r)]
    }

    /// Entries of one frequency slice, `(source, receiver)` order.
    pub fn frequency_slice(&self, f: usize) -> &[Complex64] {
        let [_, ns, nr] = self.shape();
        &self.values[f * ns * nr..(f + 1) * ns * nr]
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// 2-norm restricted to the listed frequencies.
    pub fn norm_over(&self, frequencies: &[usize]) -> f64 {
        frequencies
            .iter()
            .flat_map(|&f| self.frequency_slice(f))
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `‖self − other‖₂` over the listed frequencies.
    pub fn distance_over(&self, other: &DataCube, frequencies: &[usize]) -> Result<f64> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                context: "data cube",
                expected: self.values.len(),
                got: other.values.len(),
            });
        }
        Ok(frequencies
            .iter()
            .flat_map(|&f| self.frequency_slice(f).iter().zip(other.frequency_slice(f)))
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    /// Divides each frequency slice by its Ricker weight.
    pub fn unweighted(&self) -> DataCube {
        self.rescaled(|w| 1.0 / w)
    }

    /// Multiplies each frequency slice by its Ricker weight.
    pub fn weighted(&self) -> DataCube {
        self.rescaled(|w| w)
    }

    fn rescaled(&self, factor: impl Fn(f64) -> f64) -> DataCube {
        let mut out = self.clone();
        let [nf, ns, nr] = self.shape();
        for f in 0..nf {
            let c = factor(self.acquisition.weight(f));
            for v in &mut out.values[f * ns * nr..(f + 1) * ns * nr] {
                *v *= c;
            }
        }
        out
    }
}

/// Validated acquisition bound to a grid and absorbing-layer setup.
#[derive(Debug, Clone)]
pub struct Survey {
    pub grid: Grid2D,
    pub acquisition: Acquisition,
    pub pml: PmlConfig,
    source_nodes: Vec<usize>,
    receiver_nodes: Vec<usize>,
}

impl Survey {
    pub fn new(grid: Grid2D, acquisition: Acquisition, pml: PmlConfig) -> Result<Self> {
        grid.validate()?;
        pml.validate()?;
        acquisition.validate(&grid)?;
        let node = |p: &[f64; 2]| grid.node_at(*p).expect("validated");
        let source_nodes = acquisition.sources.iter().map(node).collect();
        let receiver_nodes = acquisition.receivers.iter().map(node).collect();
        Ok(Self { grid, acquisition, pml, source_nodes, receiver_nodes })
    }

    pub fn source_nodes(&self) -> &[usize] {
        &self.source_nodes
    }

    pub fn receiver_nodes(&self) -> &[usize] {
        &self.receiver_nodes
    }

    pub fn all_frequencies(&self) -> Vec<usize> {
        (0..self.acquisition.n_frequencies()).collect()
    }

    pub fn omega(&self, k: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.acquisition.frequencies[k]
    }

    pub(crate) fn check_model(&self, m: &[f64]) -> Result<()> {
        if m.len() != self.grid.len() {
            return Err(Error::DimensionMismatch { context: "model", expected: self.grid.len(), got: m.len() });
        }
        Ok(())
    }

    /// Assembles and factorizes the operator for frequency index `k`.
    pub fn factorized_system(&self, m: &[f64], k: usize) -> Result<HelmholtzSystem> {
        assemble_system(&self.grid, m, self.omega(k), &self.pml)?.factorize()
    }

    pub(crate) fn sources_for(&self, sys: &HelmholtzSystem) -> Vec<Vec<Complex64>> {
        self.source_nodes.iter().map(|&n| sys.point_source(n)).collect()
    }

    /// Receiver samples of one wavefield, weighted.
    pub(crate) fn sample(&self, sys: &HelmholtzSystem, u: &[Complex64], weight: f64) -> Vec<Complex64> {
        self.receiver_nodes.iter().map(|&r| u[sys.padded_index(r)] * weight).collect()
    }
}

fn annotate(err: Error, frequency: usize) -> Error {
    match err {
        Error::Solve { source_index, message, .. } => Error::Solve { frequency, source_index, message },
        Error::Factorization { omega, column } => Error::Solve {
            frequency,
            source_index: 0,
            message: format!("factorization failed at omega = {omega} (column {column})"),
        },
        other => other,
    }
}

/// `F(m)` on every frequency of the acquisition.
pub fn forward_model(survey: &Survey, m: &[f64]) -> Result<DataCube> {
    forward_model_on(survey, m, &survey.all_frequencies())
}

/// `F(m)` on a subset of frequency indices; other slices are left zero.
pub fn forward_model_on(survey: &Survey, m: &[f64], frequencies: &[usize]) -> Result<DataCube> {
    survey.check_model(m)?;
    let slices: Vec<(usize, Vec<Complex64>)> = frequencies
        .par_iter()
        .map(|&k| {
            let sys = survey.factorized_system(m, k).map_err(|e| annotate(e, k))?;
            let sources = survey.sources_for(&sys);
            let fields = sys.solve_multi_rhs(&sources, false).map_err(|e| annotate(e, k))?;
            let weight = survey.acquisition.weight(k);
            let mut slice = Vec::with_capacity(sources.len() * survey.receiver_nodes.len());
            for u in &fields {
                slice.extend(survey.sample(&sys, &u.values, weight));
            }
            Ok((k, slice))
        })
        .collect::<Result<_>>()?;
    let mut cube = DataCube::zeros(&survey.acquisition);
    let per = survey.acquisition.n_sources() * survey.acquisition.n_receivers();
    for (k, slice) in slices {
        cube.values[k * per..(k + 1) * per].copy_from_slice(&slice);
    }
    Ok(cube)
}

/// Adds complex white Gaussian noise rescaled so that
/// `20 log10(‖d‖/‖n‖) = snr_db`. An infinite SNR returns the input.
pub fn add_noise(d: &DataCube, snr_db: f64, seed: u64) -> Result<DataCube> {
    let d_norm = d.norm();
    if d_norm == 0.0 {
        return Err(Error::ZeroData);
    }
    if snr_db == f64::INFINITY {
        let mut out = d.clone();
        out.noise = Some(NoiseRecord { snr_db, seed, noise_norm: 0.0 });
        return Ok(out);
    }
    if !snr_db.is_finite() {
        return Err(Error::InvalidConfig(format!("SNR {snr_db} dB is not usable")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<Complex64> = (0..d.values.len())
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect();
    let raw_norm = raw.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let target = d_norm * 10f64.powf(-snr_db / 20.0);
    let scale = target / raw_norm;
    let mut out = d.clone();
    let mut noise_sq = 0.0;
    for (v, n) in out.values.iter_mut().zip(&raw) {
        let n = n * scale;
        noise_sq += n.norm_sqr();
        *v += n;
    }
    out.noise = Some(NoiseRecord { snr_db, seed, noise_norm: noise_sq.sqrt() });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ricker_values() {
        assert_eq!(ricker_weight(15.0, 15.0), 1.0);
        assert!(ricker_weight(1e-8, 15.0) < 1e-15);
        let expected = (1.0 / 36.0) * (1.0f64 - 1.0 / 36.0).exp();
        assert!((ricker_weight(2.5, 15.0) - expected).abs() < 1e-16);
        assert!((ricker_weight(2.5, 15.0) - 0.0734).abs() < 5e-5);
    }

    #[test]
    fn benchmark_layout() {
        let g = Grid2D::new(201, 61, 50.0).unwrap();
        let acq = benchmark_acquisition(&g).unwrap();
        assert_eq!(acq.frequencies.len(), 17);
        assert_eq!(*acq.frequencies.last().unwrap(), 3.5);
        assert_eq!(acq.n_sources(), 50);
        assert_eq!(acq.n_receivers(), 100);
        assert!(acq.receivers.iter().all(|p| p[1] == 50.0));
        assert!(acq.sources.iter().all(|p| p[1] == 0.0));
        assert_eq!(acq.bands.len(), 4);
        assert!(acq.bands.iter().all(|b| b.len() == 4));
        assert_eq!(acq.bands[0], vec![0, 1, 2, 3]);
        assert_eq!(acq.bands[3], vec![12, 13, 14, 15]);
        let mut xs: Vec<f64> = acq.receivers.iter().map(|p| p[0]).collect();
        xs.dedup();
        assert_eq!(xs.len(), 100);
        assert!(benchmark_acquisition(&Grid2D::new(101, 31, 50.0).unwrap()).is_err());
    }

    #[test]
    fn validation_catches_bad_layouts() {
        let g = Grid2D::new(101, 31, 50.0).unwrap();
        let mut acq = standard_acquisition(&g, 4, 8).unwrap();
        acq.sources[0] = [10.0, 0.0];
        assert!(acq.validate(&g).is_err());
        let mut acq = standard_acquisition(&g, 4, 8).unwrap();
        acq.bands.swap(0, 1);
        assert!(acq.validate(&g).is_err());
        let mut acq = standard_acquisition(&g, 4, 8).unwrap();
        acq.bands[1].push(0);
        assert!(acq.validate(&g).is_err());
    }

    #[test]
    fn noise_scaling_and_determinism() {
        let g = Grid2D::new(11, 6, 50.0).unwrap();
        let acq = Acquisition {
            sources: vec![[0.0, 0.0], [100.0, 0.0]],
            receivers: vec![[50.0, 50.0], [200.0, 50.0], [500.0, 50.0]],
            frequencies: vec![2.5, 3.0],
            bands: vec![vec![0], vec![1]],
            ricker_peak: Some(15.0),
        };
        acq.validate(&g).unwrap();
        let mut d = DataCube::zeros(&acq);
        for (k, v) in d.values.iter_mut().enumerate() {
            *v = Complex64::new(k as f64 + 1.0, -(k as f64) * 0.5);
        }
        let a = add_noise(&d, 10.0, 42).unwrap();
        let b = add_noise(&d, 10.0, 42).unwrap();
        assert_eq!(a, b);
        let noise: f64 =
            a.values.iter().zip(&d.values).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        let ratio = noise / d.norm();
        assert!((ratio - 10f64.powf(-0.5)).abs() < 1e-14, "{ratio}");
        assert!((a.noise.unwrap().noise_norm - noise).abs() < 1e-12 * noise);
        let c = add_noise(&d, 10.0, 43).unwrap();
        assert_ne!(a.values, c.values);
        let clean = add_noise(&d, f64::INFINITY, 1).unwrap();
        assert_eq!(clean.values, d.values);
        assert!(matches!(add_noise(&DataCube::zeros(&acq), 10.0, 1), Err(Error::ZeroData)));
    }

    #[test]
    fn weighting_round_trip_is_exact_enough() {
        let g = Grid2D::new(11, 6, 50.0).unwrap();
        let acq = standard_acquisition(&g, 2, 3).unwrap();
        let mut d = DataCube::zeros(&acq);
        for (k, v) in d.values.iter_mut().enumerate() {
            *v = Complex64::new((k as f64).sin(), (k as f64).cos());
        }
        let back = d.unweighted().weighted();
        for (a, b) in back.values.iter().zip(&d.values) {
            assert!((a - b).norm() <= 4.0 * f64::EPSILON * b.norm());
        }
    }
}
