//! Envelope dynamics on the slow grid: the hyperbolic cubic NLS
//! `j A_T + a A_XX - b A_YY + c A |A|^2 = 0`,
//! solved by Strang splitting with an exact Fourier linear propagator and an
//! exact pointwise cubic phase rotation, and the driven linear equation for
//! the second-order corrector B.  Envelopes are 1,j-valued, so everything
//! runs in the complex plane under C = R + Rj; the quaternion view is
//! available at the boundary of the module.

use crate::cfield::CField;
use crate::error::{Error, Result};
use crate::grid::Grid2;
use crate::spectral::{sobolev_norm, weighted_norm, QuaternionField};
use num_complex::Complex64;

/// Carrier/scale parameters with the deep-water dispersion relation
/// omega^2 = k, omega' = 1/(2 sqrt k), omega'' = -1/(4 k^{3/2}).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketParams {
    pub k: f64,
    pub eps: f64,
    pub omega: f64,
    pub omega_prime: f64,
    pub omega_double_prime: f64,
}

impl PacketParams {
    pub fn new(k: f64, eps: f64) -> Result<Self> {
        if k <= 0.0 {
            return Err(Error::invalid("k", "carrier wavenumber must be positive"));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::invalid("eps", "scale must lie in (0, 1)"));
        }
        let omega = k.sqrt();
        Ok(PacketParams {
            k,
            eps,
            omega,
            omega_prime: 0.5 / k.sqrt(),
            omega_double_prime: -0.25 / k.powf(1.5),
        })
    }

    /// Detuned copy with omega^2 != k, for negative dispersion tests.
    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }
}

/// Coefficients (a, b, c) of j A_T + a A_XX - b A_YY + c A |A|^2 = 0,
/// obtained from 2j A_T - w'' A_XX + 2 w'' A_YY + k^2 w A |A|^2 = 0.
pub fn hnls_rhs_coefficients(p: &PacketParams) -> (f64, f64, f64) {
    let wpp = p.omega_double_prime;
    (-0.5 * wpp, -wpp, 0.5 * p.k * p.k * p.omega)
}

/// 1,j-valued envelope on the slow grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub values: CField,
    pub time: f64,
}

impl Envelope {
    pub fn new(values: CField) -> Self {
        Envelope { values, time: 0.0 }
    }

    pub fn zeros(grid: Grid2) -> Self {
        Envelope::new(CField::zeros(grid))
    }

    pub fn gaussian(grid: Grid2, amplitude: f64, sigma: f64) -> Self {
        let (cx, cy) = (0.5 * grid.len_alpha, 0.5 * grid.len_beta);
        Envelope::new(CField::from_fn(grid, |x, y| {
            let r2 = (x - cx).powi(2) + (y - cy).powi(2);
            Complex64::new(amplitude * (-r2 / (2.0 * sigma * sigma)).exp(), 0.0)
        }))
    }

    pub fn grid(&self) -> Grid2 {
        self.values.grid
    }

    /// Quaternion view; q1 and q3 are structurally zero.
    pub fn as_quaternion_field(&self) -> QuaternionField {
        QuaternionField::from_complex_field(&self.values)
    }
}

/// T-derivative of A from the equation itself: A_T = j(a A_XX - b A_YY) + j c A|A|^2.
/// The Nyquist rows are zeroed: the dispersion factor is largest exactly
/// there, and content on those self-paired rows breaks the conjugation
/// symmetry the packet calculus relies on.
pub fn hnls_time_derivative(a_field: &CField, p: &PacketParams) -> CField {
    let (a, b, c) = hnls_rhs_coefficients(p);
    let jj = Complex64::new(0.0, 1.0);
    let lin = a_field
        .apply_multiplier(|x1, x2| Complex64::new(-a * x1 * x1 + b * x2 * x2, 0.0))
        .scale(jj);
    let mut out = lin;
    for (o, z) in out.data.iter_mut().zip(&a_field.data) {
        *o += jj * c * z.norm_sqr() * z;
    }
    out.drop_nyquist()
}

/// Second T-derivative, by differentiating the equation once more.
pub fn hnls_second_time_derivative(a_field: &CField, p: &PacketParams) -> CField {
    let (a, b, c) = hnls_rhs_coefficients(p);
    let jj = Complex64::new(0.0, 1.0);
    let at = hnls_time_derivative(a_field, p);
    let lin = at
        .apply_multiplier(|x1, x2| Complex64::new(-a * x1 * x1 + b * x2 * x2, 0.0))
        .scale(jj);
    let mut out = lin;
    // d/dT (A^2 conj A) = 2 A A_T conj A + A^2 conj(A_T)
    for ((o, z), zt) in out.data.iter_mut().zip(&a_field.data).zip(&at.data) {
        *o += jj * c * (2.0 * z * zt * z.conj() + z * z * zt.conj());
    }
    out.drop_nyquist()
}

fn linear_phase(p: &PacketParams, tau: f64) -> impl Fn(f64, f64) -> Complex64 {
    let (a, b, _) = hnls_rhs_coefficients(p);
    move |x1, x2| Complex64::from_polar(1.0, (-a * x1 * x1 + b * x2 * x2) * tau)
}

fn check_finite(f: &CField, what: &str) -> Result<()> {
    if f.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

/// Strang split-step integration of the HNLS envelope to time `t_final`.
pub fn evolve_a(a0: &Envelope, p: &PacketParams, t_final: f64, dt: f64) -> Result<Envelope> {
    if dt <= 0.0 {
        return Err(Error::invalid("dt", "time step must be positive"));
    }
    let (_, _, c) = hnls_rhs_coefficients(p);
    let n_steps = (t_final / dt).round().max(1.0) as usize;
    let tau = t_final / n_steps as f64;
    let jj = Complex64::new(0.0, 1.0);

    let mut f = a0.values.band_limit(2.0 / 3.0);
    let half = linear_phase(p, 0.5 * tau);
    for _ in 0..n_steps {
        f = f.apply_multiplier(&half);
        for z in f.data.iter_mut() {
            *z *= (jj * c * z.norm_sqr() * tau).exp();
        }
        f = f.band_limit(2.0 / 3.0);
        f = f.apply_multiplier(&half);
        check_finite(&f, "evolve_a state")?;
    }
    Ok(Envelope {
        values: f,
        time: a0.time + t_final,
    })
}

/// Coefficient and source callbacks for the B equation
/// B_T = j(a B_XX - b B_YY) + F1 B + F2 conj(B) + F3,
/// each given the slow time and the envelope A at that time.
pub struct BSources<'a> {
    pub f1: Option<&'a dyn Fn(f64, &Envelope) -> CField>,
    pub f2: Option<&'a dyn Fn(f64, &Envelope) -> CField>,
    pub f3: Option<&'a dyn Fn(f64, &Envelope) -> CField>,
}

impl Default for BSources<'_> {
    fn default() -> Self {
        BSources {
            f1: None,
            f2: None,
            f3: None,
        }
    }
}

/// Split-step integration of the driven corrector equation.  The reaction
/// step (no derivatives of B appear in it) is advanced pointwise with RK4.
pub fn evolve_b(
    b0: &Envelope,
    a_path: &dyn Fn(f64) -> Envelope,
    p: &PacketParams,
    sources: &BSources,
    t_final: f64,
    dt: f64,
) -> Result<Envelope> {
    if dt <= 0.0 {
        return Err(Error::invalid("dt", "time step must be positive"));
    }
    let n_steps = (t_final / dt).round().max(1.0) as usize;
    let tau = t_final / n_steps as f64;
    let grid = b0.grid();
    let zero = CField::zeros(grid);

    let eval = |src: &Option<&dyn Fn(f64, &Envelope) -> CField>, t: f64| -> Result<CField> {
        match src {
            Some(f) => {
                let a = a_path(t);
                let out = f(t, &a);
                grid.same_as(&out.grid)?;
                Ok(out)
            }
            None => Ok(zero.clone()),
        }
    };

    let mut f = b0.values.band_limit(2.0 / 3.0);
    let half = linear_phase(p, 0.5 * tau);
    let mut t = b0.time;
    for _ in 0..n_steps {
        f = f.apply_multiplier(&half);
        // reaction step via RK4 with coefficients sampled at t, t + tau/2, t + tau
        let (f1a, f2a, f3a) = (eval(&sources.f1, t)?, eval(&sources.f2, t)?, eval(&sources.f3, t)?);
        let tm = t + 0.5 * tau;
        let (f1m, f2m, f3m) = (eval(&sources.f1, tm)?, eval(&sources.f2, tm)?, eval(&sources.f3, tm)?);
        let te = t + tau;
        let (f1e, f2e, f3e) = (eval(&sources.f1, te)?, eval(&sources.f2, te)?, eval(&sources.f3, te)?);
        let rhs = |state: &CField, f1: &CField, f2: &CField, f3: &CField| -> CField {
            let mut out = f3.clone();
            for i in 0..out.data.len() {
                out.data[i] += f1.data[i] * state.data[i] + f2.data[i] * state.data[i].conj();
            }
            out
        };
        let k1 = rhs(&f, &f1a, &f2a, &f3a);
        let mut s2 = f.clone();
        s2.add_assign_scaled(&k1, Complex64::new(0.5 * tau, 0.0));
        let k2 = rhs(&s2, &f1m, &f2m, &f3m);
        let mut s3 = f.clone();
        s3.add_assign_scaled(&k2, Complex64::new(0.5 * tau, 0.0));
        let k3 = rhs(&s3, &f1m, &f2m, &f3m);
        let mut s4 = f.clone();
        s4.add_assign_scaled(&k3, Complex64::new(tau, 0.0));
        let k4 = rhs(&s4, &f1e, &f2e, &f3e);
        for i in 0..f.data.len() {
            f.data[i] += tau / 6.0
                * (k1.data[i] + 2.0 * k2.data[i] + 2.0 * k3.data[i] + k4.data[i]);
        }
        f = f.band_limit(2.0 / 3.0);
        f = f.apply_multiplier(&half);
        check_finite(&f, "evolve_b state")?;
        t += tau;
    }
    Ok(Envelope {
        values: f,
        time: b0.time + t_final,
    })
}

/// Conserved mass ||A||_{L2}^2.
pub fn mass(a: &Envelope) -> f64 {
    let n = a.values.l2_norm();
    n * n
}

/// Conserved energy integral a|A_X|^2 - b|A_Y|^2 - (c/2)|A|^4.
pub fn hamiltonian(a: &Envelope, p: &PacketParams) -> f64 {
    let (ca, cb, cc) = hnls_rhs_coefficients(p);
    let ax = a.values.deriv_x();
    let ay = a.values.deriv_y();
    let mut acc = 0.0;
    for i in 0..a.values.data.len() {
        let m2 = a.values.data[i].norm_sqr();
        acc += ca * ax.data[i].norm_sqr() - cb * ay.data[i].norm_sqr() - 0.5 * cc * m2 * m2;
    }
    acc * a.grid().cell_area()
}

/// Weighted decay norm ||<(X,Y)>^delta A||_{H^3}.
pub fn decay_norm(a: &Envelope, delta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::invalid("delta", "must lie in [0, 1]"));
    }
    weighted_norm(&a.as_quaternion_field(), 3, delta)
}

/// H^s norm of the envelope.
pub fn envelope_hs(a: &Envelope, s: f64) -> f64 {
    sobolev_norm(&a.as_quaternion_field(), s).expect("s >= 0")
}
