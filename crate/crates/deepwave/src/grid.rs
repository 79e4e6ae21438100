//! Uniform periodic grid on [0, L_alpha) x [0, L_beta).
//!
//! Storage is row-major with beta fastest: index = ia * n_beta + ib.
//! Frequencies use the centered signed-index convention, xi = m * 2*pi/L with
//! m in {-n/2, ..., n/2 - 1}.

use crate::error::{Error, Result};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2 {
    pub n_alpha: usize,
    pub n_beta: usize,
    pub len_alpha: f64,
    pub len_beta: f64,
}

impl Grid2 {
    pub fn new(n_alpha: usize, n_beta: usize, len_alpha: f64, len_beta: f64) -> Result<Self> {
        for n in [n_alpha, n_beta] {
            if n < 2 || !n.is_power_of_two() {
                return Err(Error::NotPowerOfTwo(n));
            }
        }
        if !(len_alpha > 0.0 && len_beta > 0.0) {
            return Err(Error::invalid("len", "domain lengths must be positive"));
        }
        Ok(Grid2 {
            n_alpha,
            n_beta,
            len_alpha,
            len_beta,
        })
    }

    /// Square grid with both lengths 2*pi*lambda.
    pub fn square(n: usize, lambda: f64) -> Result<Self> {
        Grid2::new(n, n, 2.0 * PI * lambda, 2.0 * PI * lambda)
    }

    pub fn len(&self) -> usize {
        self.n_alpha * self.n_beta
    }

    pub fn idx(&self, ia: usize, ib: usize) -> usize {
        ia * self.n_beta + ib
    }

    pub fn d_alpha(&self) -> f64 {
        self.len_alpha / self.n_alpha as f64
    }

    pub fn d_beta(&self) -> f64 {
        self.len_beta / self.n_beta as f64
    }

    /// Area element of one cell.
    pub fn cell_area(&self) -> f64 {
        self.d_alpha() * self.d_beta()
    }

    pub fn alpha(&self, ia: usize) -> f64 {
        ia as f64 * self.d_alpha()
    }

    pub fn beta(&self, ib: usize) -> f64 {
        ib as f64 * self.d_beta()
    }

    /// Signed frequency index for storage index m on an axis of n points.
    pub fn signed_index(m: usize, n: usize) -> i64 {
        if m <= n / 2 - 1 {
            m as i64
        } else {
            m as i64 - n as i64
        }
    }

    /// Storage index for a signed frequency index (must lie in [-n/2, n/2)).
    pub fn storage_index(s: i64, n: usize) -> usize {
        if s >= 0 {
            s as usize
        } else {
            (s + n as i64) as usize
        }
    }

    pub fn xi1(&self, ia: usize) -> f64 {
        Self::signed_index(ia, self.n_alpha) as f64 * 2.0 * PI / self.len_alpha
    }

    pub fn xi2(&self, ib: usize) -> f64 {
        Self::signed_index(ib, self.n_beta) as f64 * 2.0 * PI / self.len_beta
    }

    /// Frequency lattice spacing along alpha.
    pub fn dxi1(&self) -> f64 {
        2.0 * PI / self.len_alpha
    }

    /// Checks that k is (numerically) on the alpha frequency lattice and
    /// returns its signed index.
    pub fn carrier_index(&self, k: f64) -> Result<i64> {
        let spacing = self.dxi1();
        let m = k / spacing;
        let rounded = m.round();
        if (m - rounded).abs() > 1e-9 * (1.0 + m.abs()) {
            return Err(Error::OffLatticeCarrier { k, spacing });
        }
        let half = (self.n_alpha / 2) as i64;
        let r = rounded as i64;
        if r < -half || r >= half {
            return Err(Error::invalid(
                "k",
                format!("carrier index {r} outside representable range [{}, {})", -half, half),
            ));
        }
        Ok(r)
    }

    pub fn same_as(&self, other: &Grid2) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::grid_mismatch(
                format!("{self:?}"),
                format!("{other:?}"),
            ))
        }
    }
}
