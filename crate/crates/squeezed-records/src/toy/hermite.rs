//! Orthonormal Hermite functions as an alternative mode basis.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Uniform sampling grid `x_i = x0 + i·h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermiteGrid {
    pub x0: f64,
    pub h: f64,
    pub n: usize,
}

impl HermiteGrid {
    /// Symmetric grid on `[-half, half]`.
    pub fn symmetric(half: f64, n: usize) -> Result<Self> {
        if !(half > 0.0) || n < 3 {
            return Err(domain("need half > 0 and at least 3 points"));
        }
        Ok(Self {
            x0: -half,
            h: 2.0 * half / (n - 1) as f64,
            n,
        })
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.x0 + self.h * i as f64)
    }

    /// Whether basis functions up to `n_max` are resolved: the grid covers
    /// the classical turning point with margin and samples the shortest
    /// oscillation several times.
    pub fn check_resolution(&self, n_max: usize) -> Result<()> {
        let turning = (2.0 * n_max as f64 + 1.0).sqrt();
        let reach = turning + 6.0;
        let lo = self.x0;
        let hi = self.x0 + self.h * (self.n - 1) as f64;
        if lo > -reach || hi < reach {
            return Err(Error::Resolution(format!(
                "grid [{lo}, {hi}] does not cover ±{reach:.2} needed for n_max = {n_max}"
            )));
        }
        if self.h > 0.5 / turning {
            return Err(Error::Resolution(format!(
                "spacing {} too coarse for n_max = {n_max} (need <= {:.4})",
                self.h,
                0.5 / turning
            )));
        }
        Ok(())
    }
}

/// All `ψ_0 … ψ_{n_max}` at `x`, with `ψ_n = (2ⁿn!√π)^{−1/2} H_n(x) e^{−x²/2}`
/// from the stable three-term recurrence.
pub fn hermite_functions(x: f64, n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let p0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    out.push(p0);
    if n_max == 0 {
        return out;
    }
    out.push(std::f64::consts::SQRT_2 * x * p0);
    for n in 2..=n_max {
        let nf = n as f64;
        let v = (2.0 / nf).sqrt() * x * out[n - 1] - ((nf - 1.0) / nf).sqrt() * out[n - 2];
        out.push(v);
    }
    out
}

pub fn hermite_function(n: usize, x: f64) -> f64 {
    hermite_functions(x, n)[n]
}

/// Coefficients `c_n = ∫ f ψ_n dx` by the trapezoid rule, which is spectrally
/// accurate for functions that vanish at the grid ends.
pub fn hermite_mode_decomposition(
    samples: &[f64],
    grid: HermiteGrid,
    n_max: usize,
) -> Result<Vec<f64>> {
    if samples.len() != grid.n {
        return Err(domain("samples must match the grid"));
    }
    grid.check_resolution(n_max)?;
    let mut c = vec![0.0; n_max + 1];
    for (x, f) in grid.points().zip(samples) {
        for (cn, p) in c.iter_mut().zip(hermite_functions(x, n_max)) {
            *cn += f * p * grid.h;
        }
    }
    Ok(c)
}

/// `Σ c_n ψ_n(x)` on the grid.
pub fn hermite_reconstruct(coeffs: &[f64], grid: HermiteGrid) -> Vec<f64> {
    if coeffs.is_empty() {
        return vec![0.0; grid.n];
    }
    grid.points()
        .map(|x| {
            hermite_functions(x, coeffs.len() - 1)
                .iter()
                .zip(coeffs)
                .map(|(p, c)| p * c)
                .sum()
        })
        .collect()
}

/// Gram matrix `∫ψ_nψ_m` on the grid. Field and momentum projections
/// `φ_n = ∫ψ_nφ`, `π_m = ∫ψ_mπ` then satisfy `[φ_n, π_m] = i·G_{nm}`.
pub fn hermite_gram(grid: HermiteGrid, n_max: usize) -> Result<Vec<Vec<f64>>> {
    grid.check_resolution(n_max)?;
    let mut g = vec![vec![0.0; n_max + 1]; n_max + 1];
    for x in grid.points() {
        let p = hermite_functions(x, n_max);
        for i in 0..=n_max {
            for j in 0..=n_max {
                g[i][j] += p[i] * p[j] * grid.h;
            }
        }
    }
    Ok(g)
}

/// `H_n(x)H_m(y)H_l(z)` for the triplet `(n, m, l)`.
pub fn hermite_function_3d(triplet: [usize; 3], point: [f64; 3]) -> f64 {
    (0..3)
        .map(|a| hermite_function(triplet[a], point[a]))
        .product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_is_identity() {
        let g = hermite_gram(HermiteGrid::symmetric(14.0, 1401).unwrap(), 19).unwrap();
        for (i, row) in g.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-10, "G[{i}][{j}] = {v}");
            }
        }
    }

    #[test]
    fn basis_function_projects_to_unit_vector() {
        let grid = HermiteGrid::symmetric(12.0, 1201).unwrap();
        let f: Vec<f64> = grid.points().map(|x| hermite_function(3, x)).collect();
        let c = hermite_mode_decomposition(&f, grid, 8).unwrap();
        for (n, v) in c.iter().enumerate() {
            assert!((v - if n == 3 { 1.0 } else { 0.0 }).abs() < 1e-12);
        }
    }

    #[test]
    fn reconstruction_improves_with_order() {
        let grid = HermiteGrid::symmetric(16.0, 2001).unwrap();
        let f: Vec<f64> = grid
            .points()
            .map(|x| (-(x - 1.5f64).powi(2) / 1.5).exp())
            .collect();
        let err = |n: usize| {
            let c = hermite_mode_decomposition(&f, grid, n).unwrap();
            hermite_reconstruct(&c, grid)
                .iter()
                .zip(&f)
                .map(|(a, b)| (a - b).powi(2) * grid.h)
                .sum::<f64>()
                .sqrt()
        };
        let e: Vec<f64> = [2, 6, 12, 24].iter().map(|&n| err(n)).collect();
        assert!(e.windows(2).all(|w| w[1] < w[0]), "{e:?}");
        assert!(e[3] < 1e-4);
    }

    #[test]
    fn coarse_grid_rejected() {
        let grid = HermiteGrid::symmetric(5.0, 51).unwrap();
        assert!(matches!(hermite_gram(grid, 20), Err(Error::Resolution(_))));
    }

    #[test]
    fn product_basis_is_orthonormal_in_3d() {
        let grid = HermiteGrid::symmetric(8.0, 41).unwrap();
        let pts: Vec<f64> = grid.points().collect();
        let triplets = [[0, 0, 0], [1, 0, 2], [2, 1, 0], [0, 3, 1]];
        for a in triplets {
            for b in triplets {
                let mut s = 0.0;
                for &x in &pts {
                    for &y in &pts {
                        for &z in &pts {
                            s += hermite_function_3d(a, [x, y, z])
                                * hermite_function_3d(b, [x, y, z]);
                        }
                    }
                }
                s *= grid.h.powi(3);
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((s - want).abs() < 1e-10, "{a:?} {b:?} {s}");
            }
        }
    }
}
