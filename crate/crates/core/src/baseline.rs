//! CSI-based comparison method.
//!
//! Measures the complex received signal at random training positions,
//! recovers a sparse set of paths over a uniform angular dictionary with
//! orthogonal matching pursuit, rebuilds `h(·)` from the estimate and picks
//! the strongest point of a regular grid.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{argmax_first, path_length_delta, Position, Probe, Region};
use crate::error::{invalid, Result};

/// Uniform `G_θ × G_φ` grid of arrival angles over `[-π/2, π/2]²`, endpoints
/// included. Atom `i·G_φ + j` pairs elevation `i` with azimuth `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularDictionary {
    elevations: Vec<f64>,
    azimuths: Vec<f64>,
    wavelength: f64,
}

fn uniform_angles(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n)
        .map(|i| -FRAC_PI_2 + PI * i as f64 / (n - 1) as f64)
        .collect()
}

impl AngularDictionary {
    pub fn new(elevation_points: usize, azimuth_points: usize, wavelength: f64) -> Result<Self> {
        if elevation_points == 0 || azimuth_points == 0 {
            return Err(invalid("dictionary grid sizes must be at least 1"));
        }
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(invalid(format!(
                "wavelength must be positive, got {wavelength}"
            )));
        }
        Ok(Self {
            elevations: uniform_angles(elevation_points),
            azimuths: uniform_angles(azimuth_points),
            wavelength,
        })
    }

    pub fn len(&self) -> usize {
        self.elevations.len() * self.azimuths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn elevations(&self) -> &[f64] {
        &self.elevations
    }

    pub fn azimuths(&self) -> &[f64] {
        &self.azimuths
    }

    pub fn index(&self, elevation_index: usize, azimuth_index: usize) -> usize {
        elevation_index * self.azimuths.len() + azimuth_index
    }

    /// `(elevation, azimuth)` of atom `index`.
    pub fn angles(&self, index: usize) -> (f64, f64) {
        let n = self.azimuths.len();
        (self.elevations[index / n], self.azimuths[index % n])
    }

    /// Phase term the atom contributes to `h` at `position`,
    /// `exp(-j·2π/λ·ρ(position))`. Always unit modulus.
    pub fn phase(&self, index: usize, position: Position) -> Complex64 {
        let (elevation, azimuth) = self.angles(index);
        let k = 2.0 * PI / self.wavelength;
        Complex64::cis(-k * path_length_delta(position, elevation, azimuth))
    }
}

/// Sparse path estimate: `(atom index, gain)` pairs in selection order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EstimatedChannel {
    pub atoms: Vec<(usize, Complex64)>,
}

impl EstimatedChannel {
    pub fn support(&self) -> Vec<usize> {
        self.atoms.iter().map(|&(i, _)| i).collect()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// One measurement at each of `count` uniform random positions.
pub fn collect_training<P: Probe + ?Sized, R: Rng + ?Sized>(
    probe: &mut P,
    count: usize,
    region: &Region,
    rng: &mut R,
) -> Result<Vec<(Position, Complex64)>> {
    if count == 0 {
        return Err(invalid("training needs at least one measurement"));
    }
    Ok((0..count)
        .map(|_| {
            let p = region.sample(rng);
            (p, probe.measure(p))
        })
        .collect())
}

pub const OMP_RELATIVE_TOLERANCE: f64 = 1e-6;
// new atom counts as dependent when less than this fraction of it survives
// orthogonalization against the current support
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct OmpOutcome {
    pub estimate: EstimatedChannel,
    /// Residual norm before the first selection and after each one.
    pub residual_norms: Vec<f64>,
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Orthogonal matching pursuit with at most `sparsity` atoms.
///
/// Gains are divided by `√P` so they are on the same scale as the path
/// gains. Stops early once the residual falls below
/// [`OMP_RELATIVE_TOLERANCE`] of the measurement norm, or when the next atom
/// is linearly dependent on the support (the support found so far is kept).
pub fn omp_recover(
    samples: &[(Position, Complex64)],
    dict: &AngularDictionary,
    sparsity: usize,
    transmit_power: f64,
) -> Result<EstimatedChannel> {
    omp_with_trace(samples, dict, sparsity, transmit_power).map(|o| o.estimate)
}

pub fn omp_with_trace(
    samples: &[(Position, Complex64)],
    dict: &AngularDictionary,
    sparsity: usize,
    transmit_power: f64,
) -> Result<OmpOutcome> {
    if sparsity == 0 {
        return Err(invalid("sparsity budget must be at least 1"));
    }
    if transmit_power.is_nan() || transmit_power <= 0.0 {
        return Err(invalid(format!(
            "transmit power must be positive, got {transmit_power}"
        )));
    }
    let measurements: Vec<Complex64> = samples.iter().map(|&(_, y)| y).collect();
    let initial_norm = norm(&measurements);
    let mut residual_norms = vec![initial_norm];
    if samples.is_empty() || initial_norm.is_nan() || initial_norm <= 0.0 {
        return Ok(OmpOutcome {
            estimate: EstimatedChannel::default(),
            residual_norms,
        });
    }

    // columns of the sensing matrix, one per atom
    let columns: Vec<Vec<Complex64>> = (0..dict.len())
        .into_par_iter()
        .map(|g| samples.iter().map(|&(p, _)| dict.phase(g, p)).collect())
        .collect();

    let tolerance = OMP_RELATIVE_TOLERANCE * initial_norm;
    let mut residual = measurements.clone();
    let mut support: Vec<usize> = Vec::new();
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    // upper-triangular factor, stored by column
    let mut r_factor: Vec<Vec<Complex64>> = Vec::new();

    while support.len() < sparsity.min(samples.len()) && norm(&residual) >= tolerance {
        let mut best: Option<(usize, f64)> = None;
        for (g, col) in columns.iter().enumerate() {
            if support.contains(&g) {
                continue;
            }
            let c = inner(col, &residual).norm();
            if best.is_none_or(|(_, b)| c > b) {
                best = Some((g, c));
            }
        }
        let Some((chosen, _)) = best else { break };

        let atom = &columns[chosen];
        let mut w = atom.clone();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); basis.len()];
        // two passes of Gram-Schmidt
        for _ in 0..2 {
            for (k, q) in basis.iter().enumerate() {
                let c = inner(q, &w);
                coeffs[k] += c;
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let w_norm = norm(&w);
        if w_norm < RANK_TOLERANCE * norm(atom) {
            break;
        }
        let q: Vec<Complex64> = w.iter().map(|z| z / w_norm).collect();
        let z = inner(&q, &residual);
        for (ri, qi) in residual.iter_mut().zip(&q) {
            *ri -= z * qi;
        }
        coeffs.push(Complex64::new(w_norm, 0.0));
        r_factor.push(coeffs);
        basis.push(q);
        support.push(chosen);
        residual_norms.push(norm(&residual));
    }

    // least squares on the support: R x = Qᴴ y
    let rhs: Vec<Complex64> = basis.iter().map(|q| inner(q, &measurements)).collect();
    let n = support.len();
    let mut gains = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut acc = rhs[i];
        for j in i + 1..n {
            acc -= r_factor[j][i] * gains[j];
        }
        gains[i] = acc / r_factor[i][i];
    }
    let scale = transmit_power.sqrt();
    Ok(OmpOutcome {
        estimate: EstimatedChannel {
            atoms: support
                .into_iter()
                .zip(gains)
                .map(|(i, g)| (i, g / scale))
                .collect(),
        },
        residual_norms,
    })
}

pub fn reconstruct_response(
    est: &EstimatedChannel,
    dict: &AngularDictionary,
    position: Position,
) -> Complex64 {
    est.atoms
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, &(i, g)| {
            acc + g * dict.phase(i, position)
        })
}

/// Grid point maximizing `|ĥ|²`; the first occurrence in row-major order wins.
pub fn grid_search_optimum(
    est: &EstimatedChannel,
    dict: &AngularDictionary,
    region: &Region,
    resolution: f64,
) -> Result<Position> {
    let grid = region.grid(resolution)?;
    let power: Vec<f64> = grid
        .par_iter()
        .map(|&p| reconstruct_response(est, dict, p).norm_sqr())
        .collect();
    Ok(grid[argmax_first(&power)])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub elevation_points: usize,
    pub azimuth_points: usize,
    /// Fixed OMP sparsity; `None` uses `min(2L, M/2)` capped at
    /// [`MAX_AUTO_SPARSITY`].
    pub sparsity: Option<usize>,
    /// Grid-search spacing in wavelengths.
    pub resolution: f64,
}

pub const MAX_AUTO_SPARSITY: usize = 64;

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            elevation_points: 32,
            azimuth_points: 32,
            sparsity: None,
            resolution: 0.05,
        }
    }
}

impl BaselineConfig {
    pub fn sparsity_for(&self, measurements: usize, num_paths: usize) -> usize {
        self.sparsity.unwrap_or_else(|| {
            (2 * num_paths)
                .min(measurements / 2)
                .clamp(1, MAX_AUTO_SPARSITY)
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.elevation_points == 0 || self.azimuth_points == 0 {
            return Err(invalid("dictionary grid sizes must be at least 1"));
        }
        if self.sparsity == Some(0) {
            return Err(invalid("sparsity must be at least 1"));
        }
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(invalid(format!(
                "baseline resolution must be positive, got {}",
                self.resolution
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineOutcome {
    pub position: Position,
    pub estimate: EstimatedChannel,
    /// Probe calls made, read from the probe's counter.
    pub measurements: u64,
}

/// Spends the whole budget on training, then estimates and grid-searches.
///
/// `num_paths` only feeds the automatic sparsity rule.
pub fn csi_baseline<P: Probe + ?Sized, R: Rng + ?Sized>(
    probe: &mut P,
    region: &Region,
    budget: usize,
    config: &BaselineConfig,
    num_paths: usize,
    transmit_power: f64,
    rng: &mut R,
) -> Result<BaselineOutcome> {
    if budget == 0 {
        return Err(invalid("baseline budget must be at least 1"));
    }
    config.validate()?;
    let start = probe.measurement_count();
    let samples = collect_training(probe, budget, region, rng)?;
    let measurements = probe.measurement_count() - start;
    let dict = AngularDictionary::new(config.elevation_points, config.azimuth_points, 1.0)?;
    let estimate = omp_recover(
        &samples,
        &dict,
        config.sparsity_for(budget, num_paths),
        transmit_power,
    )?;
    let position = grid_search_optimum(&estimate, &dict, region, config.resolution)?;
    Ok(BaselineOutcome {
        position,
        estimate,
        measurements,
    })
}
