//! Complex (1,j-valued) scalar fields on a periodic grid, with the spectral
//! operations the slow-scale calculus needs: derivatives, scalar Fourier
//! multipliers, norms, and exact zero-padded resampling between commensurate
//! grids.

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::Grid2;
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct CField {
    pub grid: Grid2,
    pub data: Vec<Complex64>,
}

impl CField {
    pub fn zeros(grid: Grid2) -> Self {
        CField {
            grid,
            data: vec![Complex64::default(); grid.len()],
        }
    }

    pub fn from_fn(grid: Grid2, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for ia in 0..grid.n_alpha {
            for ib in 0..grid.n_beta {
                data.push(f(grid.alpha(ia), grid.beta(ib)));
            }
        }
        CField { grid, data }
    }

    pub fn constant(grid: Grid2, c: Complex64) -> Self {
        CField {
            grid,
            data: vec![c; grid.len()],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn conj(&self) -> Self {
        self.map(|c| c.conj())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        CField {
            grid: self.grid,
            data: self.data.iter().map(|&c| f(c)).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|c| c * s)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.grid.same_as(&other.grid)?;
        Ok(CField {
            grid: self.grid,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn add_assign_scaled(&mut self, other: &Self, s: Complex64) {
        debug_assert_eq!(self.grid, other.grid);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.grid.same_as(&other.grid)?;
        Ok(CField {
            grid: self.grid,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.grid.same_as(&other.grid)?;
        Ok(CField {
            grid: self.grid,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    /// Series coefficients (forward transform with 1/N scaling).
    pub fn coeffs(&self) -> Vec<Complex64> {
        let mut c = self.data.clone();
        fft::forward2(&mut c, self.grid.n_alpha, self.grid.n_beta);
        c
    }

    pub fn from_coeffs(grid: Grid2, mut coeffs: Vec<Complex64>) -> Self {
        fft::inverse2(&mut coeffs, grid.n_alpha, grid.n_beta);
        CField { grid, data: coeffs }
    }

    /// Apply a scalar spectral multiplier s(xi1, xi2).
    pub fn apply_multiplier(&self, s: impl Fn(f64, f64) -> Complex64) -> Self {
        let mut c = self.coeffs();
        let g = &self.grid;
        for ia in 0..g.n_alpha {
            let xi1 = g.xi1(ia);
            for ib in 0..g.n_beta {
                c[g.idx(ia, ib)] *= s(xi1, g.xi2(ib));
            }
        }
        CField::from_coeffs(*g, c)
    }

    pub fn deriv_x(&self) -> Self {
        self.apply_multiplier(|x1, _| Complex64::new(0.0, x1))
    }

    pub fn deriv_y(&self) -> Self {
        self.apply_multiplier(|_, x2| Complex64::new(0.0, x2))
    }

    /// |D|^q with the zero mode annihilated.
    pub fn frac_deriv(&self, q: f64) -> Self {
        self.apply_multiplier(|x1, x2| {
            let r = (x1 * x1 + x2 * x2).sqrt();
            if r == 0.0 {
                Complex64::default()
            } else {
                Complex64::new(r.powf(q), 0.0)
            }
        })
    }

    /// L2 norm with the domain measure.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.data.iter().map(|c| c.norm_sqr()).sum();
        (s * self.grid.cell_area()).sqrt()
    }

    pub fn l2_inner(&self, other: &Self) -> Result<Complex64> {
        self.grid.same_as(&other.grid)?;
        let s: Complex64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.grid.cell_area())
    }

    /// Nonhomogeneous Sobolev norm, ||f||^2 = ||f||_{L2}^2 + || |D|^s f ||_{L2}^2.
    pub fn hs_norm(&self, s: f64) -> f64 {
        let c = self.coeffs();
        let g = &self.grid;
        let measure = g.len_alpha * g.len_beta;
        let mut low = 0.0;
        let mut high = 0.0;
        for ia in 0..g.n_alpha {
            let x1 = g.xi1(ia);
            for ib in 0..g.n_beta {
                let x2 = g.xi2(ib);
                let m = c[g.idx(ia, ib)].norm_sqr();
                low += m;
                let r2 = x1 * x1 + x2 * x2;
                if r2 > 0.0 {
                    high += r2.powf(s) * m;
                }
            }
        }
        ((low + high) * measure).sqrt()
    }

    /// Exact trigonometric resampling onto a finer commensurate grid: the
    /// target must contain the source frequency lattice (signed indices embed
    /// one-to-one).  Used for slow -> fast packet realization.
    pub fn resample(&self, target: Grid2) -> Result<Self> {
        if target.n_alpha < self.grid.n_alpha || target.n_beta < self.grid.n_beta {
            return Err(Error::Incommensurable(format!(
                "target grid {}x{} smaller than source {}x{}",
                target.n_alpha, target.n_beta, self.grid.n_alpha, self.grid.n_beta
            )));
        }
        let src = self.coeffs();
        let mut dst = vec![Complex64::default(); target.len()];
        for ia in 0..self.grid.n_alpha {
            let sa = Grid2::signed_index(ia, self.grid.n_alpha);
            let ta = Grid2::storage_index(sa, target.n_alpha);
            for ib in 0..self.grid.n_beta {
                let sb = Grid2::signed_index(ib, self.grid.n_beta);
                let tb = Grid2::storage_index(sb, target.n_beta);
                dst[ta * target.n_beta + tb] = src[self.grid.idx(ia, ib)];
            }
        }
        Ok(CField::from_coeffs(target, dst))
    }

    /// Evaluate the trigonometric series at shifted arguments, f(x + dx, y + dy).
    pub fn shift(&self, dx: f64, dy: f64) -> Self {
        self.apply_multiplier(|x1, x2| Complex64::from_polar(1.0, x1 * dx + x2 * dy))
    }

    /// Zero the Nyquist rows (signed index -n/2 on either axis).  Those rows
    /// are self-paired under the reflection xi -> -xi, so operations that
    /// rely on conjugation symmetry treat any content there inconsistently.
    pub fn drop_nyquist(&self) -> Self {
        let g = self.grid;
        let mut c = self.coeffs();
        let na2 = g.n_alpha / 2;
        let nb2 = g.n_beta / 2;
        for ib in 0..g.n_beta {
            c[g.idx(na2, ib)] = Complex64::default();
        }
        for ia in 0..g.n_alpha {
            c[g.idx(ia, nb2)] = Complex64::default();
        }
        CField::from_coeffs(g, c)
    }

    /// Zero all coefficients with |xi| above `frac` of the axis Nyquist
    /// frequency (2/3-rule dealiasing uses frac = 2/3).
    pub fn band_limit(&self, frac: f64) -> Self {
        let g = self.grid;
        let cut1 = frac * (g.n_alpha / 2) as f64 * 2.0 * std::f64::consts::PI / g.len_alpha;
        let cut2 = frac * (g.n_beta / 2) as f64 * 2.0 * std::f64::consts::PI / g.len_beta;
        self.apply_multiplier(|x1, x2| {
            if x1.abs() <= cut1 && x2.abs() <= cut2 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::default()
            }
        })
    }
}
