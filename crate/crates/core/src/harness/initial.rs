//! Initial data generators.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{FourierTerm, InitialCondition};
use crate::error::{Error, Result};
use crate::functional::{BoundaryCondition, ScalarField};

/// Basis function of mode `k` for the boundary condition: full Fourier
/// modes on the circle, `sin(kπx/ℓ)` under Dirichlet, `cos(kπx/ℓ)` under
/// Neumann.
fn mode_value(bc: BoundaryCondition, ell: f64, k: usize, cos_coef: f64, sin_coef: f64, x: f64) -> f64 {
    let kf = k as f64;
    match bc {
        BoundaryCondition::Periodic => {
            let (s, c) = (2.0 * PI * kf * x / ell).sin_cos();
            cos_coef * c + sin_coef * s
        }
        BoundaryCondition::Dirichlet => (sin_coef + cos_coef) * (PI * kf * x / ell).sin(),
        BoundaryCondition::Neumann => (cos_coef + sin_coef) * (PI * kf * x / ell).cos(),
    }
}

pub fn fourier_mix(
    n: usize,
    ell: f64,
    bc: BoundaryCondition,
    constant: f64,
    terms: &[FourierTerm],
    half_shift_antisymmetric: bool,
) -> Result<ScalarField> {
    let constant = if bc == BoundaryCondition::Dirichlet { 0.0 } else { constant };
    let eval = |x: f64| constant + terms.iter().map(|t| mode_value(bc, ell, t.mode, t.cos, t.sin, x)).sum::<f64>();
    if !half_shift_antisymmetric {
        return ScalarField::from_fn(n, ell, bc, eval);
    }
    if bc != BoundaryCondition::Periodic || n % 2 != 0 {
        return Err(Error::InvalidConfig("half-shift antisymmetry needs a periodic grid with even n".into()));
    }
    // Fill one half and mirror, so the symmetry holds bit for bit.
    let mut values = vec![0.0; n];
    let h = ell / n as f64;
    for i in 0..n / 2 {
        let u = eval(i as f64 * h);
        values[i] = u;
        values[i + n / 2] = -u;
    }
    ScalarField::new(values, ell, bc)
}

pub fn random_smooth(n: usize, ell: f64, bc: BoundaryCondition, seed: u64, modes: usize, amplitude: f64, decay: f64) -> Result<ScalarField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let constant = if bc == BoundaryCondition::Dirichlet {
        0.0
    } else {
        rng.gen_range(-1.0..1.0)
    };
    let terms: Vec<(usize, f64, f64)> = (1..=modes)
        .map(|k| {
            let w = (k as f64).powf(-decay);
            let c: f64 = rng.gen_range(-1.0..1.0);
            let s: f64 = rng.gen_range(-1.0..1.0);
            match bc {
                BoundaryCondition::Periodic => (k, w * c, w * s),
                _ => (k, w * c, 0.0),
            }
        })
        .collect();
    ScalarField::from_fn(n, ell, bc, |x| {
        amplitude * (constant + terms.iter().map(|&(k, c, s)| mode_value(bc, ell, k, c, s, x)).sum::<f64>())
    })
}

/// Last row of a `snapshots.csv` written by a previous run. `path` may name
/// the file or the run directory.
pub fn import_snapshot(path: &Path, n: usize, ell: f64, bc: BoundaryCondition) -> Result<ScalarField> {
    let file = if path.is_dir() { path.join(super::output::SNAPSHOT_FILE) } else { path.to_path_buf() };
    let text = std::fs::read_to_string(&file)?;
    let last = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with('t'))
        .next_back()
        .ok_or_else(|| Error::Parse(format!("{} has no snapshot rows", file.display())))?;
    let values: Vec<f64> = last
        .split(',')
        .skip(1)
        .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{}: {e}", file.display()))))
        .collect::<Result<_>>()?;
    if values.len() != n {
        return Err(Error::InvalidConfig(format!(
            "imported snapshot has {} points, the configured grid has {n}",
            values.len()
        )));
    }
    ScalarField::new(values, ell, bc)
}

/// Initial data that does not depend on another run.
pub fn generate(ic: &InitialCondition, n: usize, ell: f64, bc: BoundaryCondition) -> Result<ScalarField> {
    match ic {
        InitialCondition::FourierMix {
            constant,
            terms,
            half_shift_antisymmetric,
        } => fourier_mix(n, ell, bc, *constant, terms, *half_shift_antisymmetric),
        InitialCondition::RandomSmooth {
            seed,
            modes,
            amplitude,
            decay,
        } => random_smooth(n, ell, bc, *seed, *modes, *amplitude, *decay),
        InitialCondition::Import { path } => import_snapshot(Path::new(path), n, ell, bc),
        InitialCondition::Relaxed { .. } => Err(Error::InvalidConfig(
            "relaxed initial data is produced by running a scenario".into(),
        )),
    }
}
