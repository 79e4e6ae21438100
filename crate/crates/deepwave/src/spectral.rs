//! Left/right j-Fourier transforms of quaternion fields and the Fourier
//! multiplier operators built on them: Riesz transforms, the flat Hilbert
//! transform H0, fractional solid derivatives |D|^q, the wave-packet mode
//! filter, and Sobolev/weighted/Hoelder norms.
//!
//! A quaternion field splits into complex channels f = u + v i with u, v
//! 1,j-valued; the left transform is then two ordinary complex transforms,
//! F_L[f] = F[u] + F[v] i, because i passes through the integral on the right
//! while the kernel e^{-j x.xi} multiplies on the left.

use crate::cfield::CField;
use crate::error::{Error, Result};
use crate::fft;
use crate::grid::Grid2;
use crate::quat::Quaternion;
use num_complex::Complex64;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct QuaternionField {
    pub grid: Grid2,
    pub data: Vec<Quaternion>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    Left,
    Right,
}

/// Two-sided Fourier coefficients of a quaternion field, stored as the
/// channel pair of coefficient arrays.
#[derive(Debug, Clone)]
pub struct SpectralField {
    pub grid: Grid2,
    pub flavor: Flavor,
    pub u: Vec<Complex64>,
    pub v: Vec<Complex64>,
}

impl QuaternionField {
    pub fn zeros(grid: Grid2) -> Self {
        QuaternionField {
            grid,
            data: vec![Quaternion::zero(); grid.len()],
        }
    }

    pub fn from_fn(grid: Grid2, mut f: impl FnMut(f64, f64) -> Quaternion) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for ia in 0..grid.n_alpha {
            for ib in 0..grid.n_beta {
                data.push(f(grid.alpha(ia), grid.beta(ib)));
            }
        }
        QuaternionField { grid, data }
    }

    pub fn from_channels(u: &CField, v: &CField) -> Result<Self> {
        u.grid.same_as(&v.grid)?;
        Ok(QuaternionField {
            grid: u.grid,
            data: u
                .data
                .iter()
                .zip(&v.data)
                .map(|(&a, &b)| Quaternion::from_channels(a, b))
                .collect(),
        })
    }

    /// 1,j-valued field from a complex field (v channel zero).
    pub fn from_complex_field(u: &CField) -> Self {
        QuaternionField {
            grid: u.grid,
            data: u.data.iter().map(|&c| Quaternion::from_complex(c)).collect(),
        }
    }

    pub fn channels(&self) -> (CField, CField) {
        let mut u = Vec::with_capacity(self.data.len());
        let mut v = Vec::with_capacity(self.data.len());
        for q in &self.data {
            let (a, b) = q.channels();
            u.push(a);
            v.push(b);
        }
        (
            CField { grid: self.grid, data: u },
            CField { grid: self.grid, data: v },
        )
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.grid.same_as(&o.grid)?;
        Ok(QuaternionField {
            grid: self.grid,
            data: self.data.iter().zip(&o.data).map(|(&a, &b)| a + b).collect(),
        })
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.grid.same_as(&o.grid)?;
        Ok(QuaternionField {
            grid: self.grid,
            data: self.data.iter().zip(&o.data).map(|(&a, &b)| a - b).collect(),
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        QuaternionField {
            grid: self.grid,
            data: self.data.iter().map(|q| q.scale(s)).collect(),
        }
    }

    /// Pointwise Hamilton product self * o.
    pub fn mul(&self, o: &Self) -> Result<Self> {
        self.grid.same_as(&o.grid)?;
        Ok(QuaternionField {
            grid: self.grid,
            data: self.data.iter().zip(&o.data).map(|(&a, &b)| a * b).collect(),
        })
    }

    /// Left multiplication by a constant quaternion.
    pub fn lmul(&self, c: Quaternion) -> Self {
        QuaternionField {
            grid: self.grid,
            data: self.data.iter().map(|&q| c * q).collect(),
        }
    }

    /// Right multiplication by a constant quaternion.
    pub fn rmul(&self, c: Quaternion) -> Self {
        QuaternionField {
            grid: self.grid,
            data: self.data.iter().map(|&q| q * c).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        QuaternionField {
            grid: self.grid,
            data: self.data.iter().map(|q| q.conj()).collect(),
        }
    }

    pub fn dagger(&self) -> Self {
        QuaternionField {
            grid: self.grid,
            data: self.data.iter().map(|q| q.dagger()).collect(),
        }
    }

    pub fn component(&self, i: usize) -> CField {
        CField {
            grid: self.grid,
            data: self
                .data
                .iter()
                .map(|q| {
                    Complex64::new(
                        match i {
                            0 => q.q0,
                            1 => q.q1,
                            2 => q.q2,
                            _ => q.q3,
                        },
                        0.0,
                    )
                })
                .collect(),
        }
    }

    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.data.iter().map(|q| q.norm_sq()).sum();
        (s * self.grid.cell_area()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().map(|q| q.norm()).fold(0.0, f64::max)
    }

    /// Pointwise inner-product integral of two fields.
    pub fn l2_inner(&self, o: &Self) -> Result<f64> {
        self.grid.same_as(&o.grid)?;
        let s: f64 = self.data.iter().zip(&o.data).map(|(a, b)| a.dot(*b)).sum();
        Ok(s * self.grid.cell_area())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|q| q.is_finite())
    }

    /// Translate samples by whole grid steps (periodic).
    pub fn translate(&self, sa: usize, sb: usize) -> Self {
        let g = self.grid;
        QuaternionField::from_fn(g, |a, b| {
            let ia = ((a / g.d_alpha()).round() as usize + sa) % g.n_alpha;
            let ib = ((b / g.d_beta()).round() as usize + sb) % g.n_beta;
            self.data[g.idx(ia, ib)]
        })
    }
}

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------

/// Left j-Fourier transform.
pub fn fft_left(f: &QuaternionField) -> SpectralField {
    let (u, v) = f.channels();
    let mut uc = u.data;
    let mut vc = v.data;
    fft::forward2(&mut uc, f.grid.n_alpha, f.grid.n_beta);
    fft::forward2(&mut vc, f.grid.n_alpha, f.grid.n_beta);
    SpectralField {
        grid: f.grid,
        flavor: Flavor::Left,
        u: uc,
        v: vc,
    }
}

/// Right j-Fourier transform: the kernel multiplies from the right, so the
/// i channel sees the conjugate (reflected) transform.
pub fn fft_right(f: &QuaternionField) -> SpectralField {
    let (u, v) = f.channels();
    let mut uc = u.data;
    let mut vc = v.data;
    fft::forward2(&mut uc, f.grid.n_alpha, f.grid.n_beta);
    fft::forward2(&mut vc, f.grid.n_alpha, f.grid.n_beta);
    let vc = reflect(&vc, &f.grid);
    SpectralField {
        grid: f.grid,
        flavor: Flavor::Right,
        u: uc,
        v: vc,
    }
}

pub fn ifft(s: &SpectralField) -> QuaternionField {
    let mut uc = s.u.clone();
    let mut vc = match s.flavor {
        Flavor::Left => s.v.clone(),
        Flavor::Right => reflect(&s.v, &s.grid),
    };
    fft::inverse2(&mut uc, s.grid.n_alpha, s.grid.n_beta);
    fft::inverse2(&mut vc, s.grid.n_alpha, s.grid.n_beta);
    let u = CField { grid: s.grid, data: uc };
    let v = CField { grid: s.grid, data: vc };
    QuaternionField::from_channels(&u, &v).expect("matching grids by construction")
}

/// Coefficient array reflected through the origin, c(xi) -> c(-xi).
fn reflect(c: &[Complex64], g: &Grid2) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); c.len()];
    for ia in 0..g.n_alpha {
        let ra = (g.n_alpha - ia) % g.n_alpha;
        for ib in 0..g.n_beta {
            let rb = (g.n_beta - ib) % g.n_beta;
            out[g.idx(ia, ib)] = c[g.idx(ra, rb)];
        }
    }
    out
}

impl SpectralField {
    /// Coefficient at a storage index as a quaternion.
    pub fn coeff(&self, ia: usize, ib: usize) -> Quaternion {
        let i = self.grid.idx(ia, ib);
        Quaternion::from_channels(self.u[i], self.v[i])
    }

    /// Frequency-side inner product matching the physical-space integral
    /// under Plancherel (includes the domain measure).
    pub fn inner(&self, o: &SpectralField) -> Result<f64> {
        self.grid.same_as(&o.grid)?;
        let mut s = 0.0;
        for i in 0..self.u.len() {
            let a = Quaternion::from_channels(self.u[i], self.v[i]);
            let b = Quaternion::from_channels(o.u[i], o.v[i]);
            s += a.dot(b);
        }
        Ok(s * self.grid.len_alpha * self.grid.len_beta)
    }
}

// ---------------------------------------------------------------------------
// Multipliers
// ---------------------------------------------------------------------------

type SymbolFn = Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>;

/// A Fourier multiplier of the form F[f] -> s_plain(xi) F[f](xi) + s_kflip(xi) F[k f](xi).
///
/// The second factor composes the transform with *left* multiplication by k,
/// which on the channel pair appears as a conjugated reflection; this is the
/// composition rule under which H0^2 = I holds exactly.
#[derive(Clone)]
pub struct MultiplierSymbol {
    plain: SymbolFn,
    kflip: SymbolFn,
}

impl MultiplierSymbol {
    pub fn new(
        plain: impl Fn(f64, f64) -> Complex64 + Send + Sync + 'static,
        kflip: impl Fn(f64, f64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        MultiplierSymbol {
            plain: Arc::new(plain),
            kflip: Arc::new(kflip),
        }
    }

    pub fn scalar(plain: impl Fn(f64, f64) -> Complex64 + Send + Sync + 'static) -> Self {
        MultiplierSymbol::new(plain, |_, _| Complex64::default())
    }

    pub fn identity() -> Self {
        MultiplierSymbol::scalar(|_, _| Complex64::new(1.0, 0.0))
    }

    /// Riesz transform R_l, symbol -j xi_l/|xi| (zero on the mean mode).
    pub fn riesz(l: usize) -> Self {
        assert!(l == 1 || l == 2, "Riesz index must be 1 or 2");
        MultiplierSymbol::scalar(move |x1, x2| {
            let r = (x1 * x1 + x2 * x2).sqrt();
            if r == 0.0 {
                Complex64::default()
            } else {
                let xl = if l == 1 { x1 } else { x2 };
                Complex64::new(0.0, -xl / r)
            }
        })
    }

    /// Flat Hilbert transform H0 = -j R1 + i R2; in symbol form
    /// F H0 = -(xi1/|xi|) F + (xi2/|xi|) F k.
    pub fn flat_hilbert() -> Self {
        MultiplierSymbol::new(
            |x1, x2| {
                let r = (x1 * x1 + x2 * x2).sqrt();
                if r == 0.0 {
                    Complex64::default()
                } else {
                    Complex64::new(-x1 / r, 0.0)
                }
            },
            |x1, x2| {
                let r = (x1 * x1 + x2 * x2).sqrt();
                if r == 0.0 {
                    Complex64::default()
                } else {
                    Complex64::new(x2 / r, 0.0)
                }
            },
        )
    }

    /// |D|^q (zero on the mean mode).
    pub fn fractional(q: f64) -> Result<Self> {
        if !(-2.0 < q && q <= 4.0) {
            return Err(Error::invalid("q", format!("{q} outside (-2, 4]")));
        }
        Ok(MultiplierSymbol::scalar(move |x1, x2| {
            let r = (x1 * x1 + x2 * x2).sqrt();
            if r == 0.0 {
                Complex64::default()
            } else {
                Complex64::new(r.powf(q), 0.0)
            }
        }))
    }

    /// Sharp cutoff to the ball |(xi1 - k, xi2)| <= |k|/2 around the carrier.
    pub fn mode_filter(k: f64) -> Result<Self> {
        if k == 0.0 {
            return Err(Error::invalid("k", "mode filter carrier must be nonzero"));
        }
        Ok(MultiplierSymbol::scalar(move |x1, x2| {
            let d1 = x1 - k;
            if (d1 * d1 + x2 * x2).sqrt() <= 0.5 * k.abs() {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::default()
            }
        }))
    }

    pub fn eval(&self, x1: f64, x2: f64) -> (Complex64, Complex64) {
        ((self.plain)(x1, x2), (self.kflip)(x1, x2))
    }
}

/// Apply a multiplier to a channel pair (u, v) with q = u + v i.
pub fn apply_multiplier_pair(u: &CField, v: &CField, m: &MultiplierSymbol) -> Result<(CField, CField)> {
    u.grid.same_as(&v.grid)?;
    let g = u.grid;
    let su = u.coeffs();
    let sv = v.coeffs();
    let mut u_out = vec![Complex64::default(); su.len()];
    let mut v_out = vec![Complex64::default(); sv.len()];
    let jj = Complex64::new(0.0, 1.0);
    for ia in 0..g.n_alpha {
        let x1 = g.xi1(ia);
        let ra = (g.n_alpha - ia) % g.n_alpha;
        for ib in 0..g.n_beta {
            let x2 = g.xi2(ib);
            let rb = (g.n_beta - ib) % g.n_beta;
            let (p, q) = m.eval(x1, x2);
            if !(p.re.is_finite() && p.im.is_finite() && q.re.is_finite() && q.im.is_finite()) {
                return Err(Error::NonFinite(format!("multiplier symbol at xi=({x1}, {x2})")));
            }
            let i = g.idx(ia, ib);
            let r = g.idx(ra, rb);
            // F[k f](xi) = ( j conj(v^(-xi)), -j conj(u^(-xi)) )
            u_out[i] = p * su[i] + q * jj * sv[r].conj();
            v_out[i] = p * sv[i] - q * jj * su[r].conj();
        }
    }
    Ok((
        CField::from_coeffs(g, u_out),
        CField::from_coeffs(g, v_out),
    ))
}

/// Apply a multiplier to a quaternion field through the left transform.
pub fn apply_multiplier(f: &QuaternionField, m: &MultiplierSymbol) -> Result<QuaternionField> {
    let (u, v) = f.channels();
    let (u_out, v_out) = apply_multiplier_pair(&u, &v, m)?;
    QuaternionField::from_channels(&u_out, &v_out)
}

pub fn flat_hilbert(f: &QuaternionField) -> QuaternionField {
    apply_multiplier(f, &MultiplierSymbol::flat_hilbert()).expect("H0 symbol is finite")
}

pub fn fractional_derivative(f: &QuaternionField, q: f64) -> Result<QuaternionField> {
    apply_multiplier(f, &MultiplierSymbol::fractional(q)?)
}

pub fn mode_filter(f: &QuaternionField, k: f64) -> Result<QuaternionField> {
    apply_multiplier(f, &MultiplierSymbol::mode_filter(k)?)
}

/// The surface Dirac derivative k D = j d/d_alpha - i d/d_beta.
pub fn k_dirac(f: &QuaternionField) -> QuaternionField {
    let (u, v) = f.channels();
    let ua = u.deriv_x();
    let va = v.deriv_x();
    let ub = u.deriv_y();
    let vb = v.deriv_y();
    // j (ua + va i) = (j ua) + (j va) i
    let jj = Complex64::new(0.0, 1.0);
    let mut out_u = ua.scale(jj);
    let mut out_v = va.scale(jj);
    // -i (ub + vb i) = -(conj(vb) ... ): i(U + Vi) = -conj(V) + conj(U) i
    out_u.add_assign_scaled(&vb.conj(), Complex64::new(1.0, 0.0));
    out_v.add_assign_scaled(&ub.conj(), Complex64::new(-1.0, 0.0));
    QuaternionField::from_channels(&out_u, &out_v).expect("same grid")
}

// ---------------------------------------------------------------------------
// Norms
// ---------------------------------------------------------------------------

/// ||f||_{H^s}^2 = ||f||_{L2}^2 + || |D|^s f ||_{L2}^2, computed spectrally.
pub fn sobolev_norm(f: &QuaternionField, s: f64) -> Result<f64> {
    if s < 0.0 {
        return Err(Error::invalid("s", "Sobolev index must be nonnegative"));
    }
    let sp = fft_left(f);
    let g = &f.grid;
    let measure = g.len_alpha * g.len_beta;
    let mut acc = 0.0;
    for ia in 0..g.n_alpha {
        let x1 = g.xi1(ia);
        for ib in 0..g.n_beta {
            let x2 = g.xi2(ib);
            let i = g.idx(ia, ib);
            let m = sp.u[i].norm_sqr() + sp.v[i].norm_sqr();
            let r2 = x1 * x1 + x2 * x2;
            let w = if r2 > 0.0 { 1.0 + r2.powf(s) } else { 1.0 };
            acc += w * m;
        }
    }
    Ok((acc * measure).sqrt())
}

/// Periodicized polynomial weight <(x - L/2, y - L/2)>^d sampled on the grid.
pub fn weight_field(grid: Grid2, d: f64) -> CField {
    CField::from_fn(grid, |a, b| {
        let dx = a - 0.5 * grid.len_alpha;
        let dy = b - 0.5 * grid.len_beta;
        Complex64::new((1.0 + dx * dx + dy * dy).powf(0.5 * d), 0.0)
    })
}

/// Weighted Sobolev norm ||<(x,y)>^d f||_{H^s} with integer s and the weight
/// applied pointwise before differentiation.
pub fn weighted_norm(f: &QuaternionField, s: u32, d: f64) -> Result<f64> {
    if d < 0.0 {
        return Err(Error::invalid("d", "weight exponent must be nonnegative"));
    }
    let w = weight_field(f.grid, d);
    let (u, v) = f.channels();
    let wu = u.mul(&w)?;
    let wv = v.mul(&w)?;
    let wf = QuaternionField::from_channels(&wu, &wv)?;
    sobolev_norm(&wf, s as f64)
}

/// W^{s,infty}-style norm: sum over |j| <= s of the sup of |d^j f|, with
/// spectral differentiation.
pub fn holder_norm(f: &QuaternionField, s: u32) -> Result<f64> {
    let (u, v) = f.channels();
    let mut total = 0.0;
    for j1 in 0..=s {
        for j2 in 0..=(s - j1) {
            let mut du = u.clone();
            let mut dv = v.clone();
            for _ in 0..j1 {
                du = du.deriv_x();
                dv = dv.deriv_x();
            }
            for _ in 0..j2 {
                du = du.deriv_y();
                dv = dv.deriv_y();
            }
            let mut sup: f64 = 0.0;
            for i in 0..du.data.len() {
                let m = (du.data[i].norm_sqr() + dv.data[i].norm_sqr()).sqrt();
                sup = sup.max(m);
            }
            total += sup;
        }
    }
    Ok(total)
}
