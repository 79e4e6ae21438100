//! Normal-form machinery: the resonance denominator and its two-sided
//! comparability bound, the bilinear kernels Q0/Q1 solved exactly from their
//! 2x2 system, the derivative-gain inequality, and the FFT-based bilinear
//! application of a kernel to a packet factor and a band-limited field.

use crate::cfield::CField;
use crate::error::{Error, Result};
use crate::grid::Grid2;
use crate::spectral::ifft;
use crate::spectral::{fft_left, Flavor, QuaternionField, SpectralField};
use num_complex::Complex64;
use rand::Rng;
use std::sync::Arc;

const JJ: Complex64 = Complex64::new(0.0, 1.0);

pub type Freq2 = (f64, f64);

fn norm2(x: Freq2) -> f64 {
    (x.0 * x.0 + x.1 * x.1).sqrt()
}

/// General trilinear resonance denominator
/// D = (|xi| - |xi - xi'| - |xi'|)^2 - 4 |xi'| |xi - xi'|.
pub fn resonance_denominator(xi: Freq2, xi_prime: Freq2) -> f64 {
    let diff = (xi.0 - xi_prime.0, xi.1 - xi_prime.1);
    let a = norm2(xi) - norm2(diff) - norm2(xi_prime);
    a * a - 4.0 * norm2(xi_prime) * norm2(diff)
}

/// Specialization xi - xi' = -k i used by the kernels:
/// D(xi') = (|xi' - k i| - |xi'| - k)^2 - 4 k |xi'|.
pub fn kernel_denominator(k: f64, xi_prime: Freq2) -> f64 {
    resonance_denominator((xi_prime.0 - k, xi_prime.1), xi_prime)
}

/// A sample point is resonant when |D| < 1e-9 (1 + |xi'|^2).
pub fn is_resonant(k: f64, xi_prime: Freq2) -> bool {
    let d = kernel_denominator(k, xi_prime);
    let n2 = xi_prime.0 * xi_prime.0 + xi_prime.1 * xi_prime.1;
    d.abs() < 1e-9 * (1.0 + n2)
}

// ---------------------------------------------------------------------------
// Inequality suites
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default)]
pub struct InequalityReport {
    pub samples: usize,
    pub violations_b: usize,
    pub violations_c: usize,
    /// Fitted two-sided comparability constant for the denominator bound.
    pub fitted_c0: f64,
    /// Rows (sample index, lhs, rhs, margin) for CSV export.
    pub rows: Vec<(usize, f64, f64, f64)>,
}

/// Evaluate both sides of the triangle-defect bound (b) and the three-term
/// bound (c), and fit the two-sided constant of the comparability bound (a)
/// over the given samples.
pub fn denominator_inequalities(samples: &[(Freq2, Freq2)]) -> InequalityReport {
    let mut report = InequalityReport {
        samples: samples.len(),
        ..Default::default()
    };
    let mut c0: f64 = 1.0;
    for (idx, &(xi, xip)) in samples.iter().enumerate() {
        let diff = (xi.0 - xip.0, xi.1 - xip.1);
        let (nxi, nxip, ndiff) = (norm2(xi), norm2(xip), norm2(diff));
        if nxi == 0.0 || nxip == 0.0 || ndiff == 0.0 {
            continue;
        }
        // (b); the provable two-sided form is 2 min(|xi - xi'|, |xi'|)
        // (the reverse triangle inequality applied both ways)
        let lhs_b = (nxi - nxip - ndiff).abs();
        let rhs_b = 2.0 * ndiff.min(nxip);
        if lhs_b > rhs_b * (1.0 + 1e-12) {
            report.violations_b += 1;
        }
        if report.rows.len() < 4096 {
            report.rows.push((idx, lhs_b, rhs_b, rhs_b - lhs_b));
        }
        // (a): 1/|D| within [1/C0, C0] of (|xi|+|xi'|+|xi-xi'|)/(|xi||xi'||xi-xi'|)
        let d = resonance_denominator(xi, xip);
        if d != 0.0 {
            let comparator = (nxi + nxip + ndiff) / (nxi * nxip * ndiff);
            let ratio = (1.0 / d.abs()) / comparator;
            c0 = c0.max(ratio).max(1.0 / ratio);
        }
        // (c): cross-product over denominator bounded by three ratio terms
        let cross = (xi.0 * xip.1 - xi.1 * xip.0).abs();
        if d != 0.0 {
            let lhs_c = cross / d.abs();
            let t1 = cross / (nxi * nxip);
            let cross2 = (xi.0 * diff.1 - xi.1 * diff.0).abs();
            let t2 = cross2 / (nxi * ndiff);
            let cross3 = (xip.0 * diff.1 - xip.1 * diff.0).abs();
            let t3 = cross3 / (nxip * ndiff);
            // the constant in (c) follows from (a); use the fitted value
            if lhs_c > c0 * (t1 + t2 + t3) * (1.0 + 1e-9) {
                report.violations_c += 1;
            }
        }
    }
    report.fitted_c0 = c0;
    report
}

/// Draw random frequency pairs for the inequality suites.
pub fn random_frequency_pairs(n: usize, rng: &mut impl Rng) -> Vec<(Freq2, Freq2)> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let scale = 10f64.powf(rng.gen_range(-1.0..2.0));
        let xi = (
            rng.gen_range(-1.0..1.0) * scale,
            rng.gen_range(-1.0..1.0) * scale,
        );
        let xip = (
            rng.gen_range(-1.0..1.0) * scale,
            rng.gen_range(-1.0..1.0) * scale,
        );
        let diff = (xi.0 - xip.0, xi.1 - xip.1);
        if norm2(xi) < 1e-6 || norm2(xip) < 1e-6 || norm2(diff) < 1e-6 {
            continue;
        }
        out.push((xi, xip));
    }
    out
}

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

/// Right-hand sides (F0, F1) of the kernel system, as 1,j values.
pub type ForcingFn = Arc<dyn Fn(Freq2) -> (Complex64, Complex64) + Send + Sync>;

#[derive(Clone)]
pub enum KernelVariant {
    /// Caller-supplied forcing functions.
    Generic(ForcingFn),
    /// F0 = -k xi2', F1 = 0.
    Particular1,
    /// The commutator-prepared kernels with the derivative-gain factor
    /// (xi_l'/|xi'| - xi_l/|xi|), l in {1, 2}, restricted to |xi'| >= 4k.
    Particular7 { l: usize },
}

#[derive(Clone)]
pub struct NormalFormKernel {
    pub k: f64,
    pub variant: KernelVariant,
}

impl NormalFormKernel {
    pub fn new(k: f64, variant: KernelVariant) -> Result<Self> {
        if k <= 0.0 {
            return Err(Error::invalid("k", "carrier must be positive"));
        }
        if let KernelVariant::Particular7 { l } = variant {
            if l != 1 && l != 2 {
                return Err(Error::invalid("l", "component index must be 1 or 2"));
            }
        }
        Ok(NormalFormKernel { k, variant })
    }

    fn forcing(&self, xi_prime: Freq2) -> (Complex64, Complex64) {
        match &self.variant {
            KernelVariant::Generic(f) => f(xi_prime),
            KernelVariant::Particular1 => (
                Complex64::new(-self.k * xi_prime.1, 0.0),
                Complex64::default(),
            ),
            KernelVariant::Particular7 { l } => {
                // xi = xi' - k i under the kernel substitution
                let xi = (xi_prime.0 - self.k, xi_prime.1);
                let (nxi, nxip) = (norm2(xi), norm2(xi_prime));
                let gain = if *l == 1 {
                    xi_prime.0 / nxip - xi.0 / nxi
                } else {
                    xi_prime.1 / nxip - xi.1 / nxi
                };
                (JJ * self.k * xi_prime.1 * gain, Complex64::default())
            }
        }
    }

    /// Solve the 2x2 kernel system exactly:
    ///   d Q0 + 2 j w |xi'| Q1 = F0
    ///  -2 j w Q0 + d Q1       = F1
    /// with d = |xi' - k i| - |xi'| - k and determinant d^2 - 4 k |xi'|.
    pub fn kernel_values(&self, xi_prime: Freq2) -> Result<(Complex64, Complex64)> {
        let k = self.k;
        if let KernelVariant::Particular7 { .. } = self.variant {
            if norm2(xi_prime) < 4.0 * k {
                return Err(Error::invalid(
                    "xi_prime",
                    format!("below the low-frequency cutoff |xi'| >= 4k = {}", 4.0 * k),
                ));
            }
        }
        if is_resonant(k, xi_prime) {
            return Err(Error::Resonant(vec![xi_prime]));
        }
        let omega = k.sqrt();
        let d = norm2((xi_prime.0 - k, xi_prime.1)) - norm2(xi_prime) - k;
        let det = d * d - 4.0 * k * norm2(xi_prime);
        let (f0, f1) = self.forcing(xi_prime);
        let dm = Complex64::new(d, 0.0);
        let off = 2.0 * JJ * omega;
        // inverse of [[d, off |xi'|], [-off, d]] applied to (f0, f1)
        let q0 = (dm * f0 - off * norm2(xi_prime) * f1) / det;
        let q1 = (off * f0 + dm * f1) / det;
        Ok((q0, q1))
    }

    /// Residual of (Q0, Q1) substituted back into the system, relative to
    /// the data scale.
    pub fn back_substitution_residual(&self, xi_prime: Freq2) -> Result<f64> {
        let (q0, q1) = self.kernel_values(xi_prime)?;
        let k = self.k;
        let omega = k.sqrt();
        let d = norm2((xi_prime.0 - k, xi_prime.1)) - norm2(xi_prime) - k;
        let off = 2.0 * JJ * omega;
        let (f0, f1) = self.forcing(xi_prime);
        let r0 = Complex64::new(d, 0.0) * q0 + off * norm2(xi_prime) * q1 - f0;
        let r1 = -off * q0 + Complex64::new(d, 0.0) * q1 - f1;
        let scale = f0
            .norm()
            .max(f1.norm())
            .max(q0.norm())
            .max(q1.norm())
            .max(1.0);
        Ok(r0.norm().max(r1.norm()) / scale)
    }
}

// ---------------------------------------------------------------------------
// Derivative gain
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default)]
pub struct GainReport {
    pub samples: usize,
    pub violations: usize,
    pub max_ratio: f64,
}

/// Verify |xi_l'/|xi'| - xi_l/|xi|| <= C/|xi'| with C = 6k over samples
/// satisfying |xi - xi'| <= (3/2) k and |xi'| >= 4 k.
pub fn derivative_gain_check(k: f64, samples: usize, rng: &mut impl Rng) -> GainReport {
    let c = 6.0 * k;
    let mut report = GainReport {
        samples,
        ..Default::default()
    };
    for _ in 0..samples {
        let r = 4.0 * k * 10f64.powf(rng.gen_range(0.0..3.0));
        let th = rng.gen_range(0.0..std::f64::consts::TAU);
        let xip = (r * th.cos(), r * th.sin());
        let dr = rng.gen_range(0.0..1.5 * k);
        let dth = rng.gen_range(0.0..std::f64::consts::TAU);
        let xi = (xip.0 + dr * dth.cos(), xip.1 + dr * dth.sin());
        let (nxi, nxip) = (norm2(xi), norm2(xip));
        for l in 0..2 {
            let lhs = if l == 0 {
                (xip.0 / nxip - xi.0 / nxi).abs()
            } else {
                (xip.1 / nxip - xi.1 / nxi).abs()
            };
            let rhs = c / nxip;
            report.max_ratio = report.max_ratio.max(lhs / rhs);
            if lhs > rhs * (1.0 + 1e-12) {
                report.violations += 1;
            }
        }
    }
    report
}

// ---------------------------------------------------------------------------
// Bilinear application
// ---------------------------------------------------------------------------

/// Apply the quadratic correction in frequency space: the coefficients of
/// the output are
///   sum_{xi'} F[eps B_{-k} conj(S) e^{-j phi}](xi - xi') Q0(xi') F[theta](xi'),
/// the outer sum running over the narrow support of the filtered packet
/// factor (making the work proportional to that bandwidth squared).  `s` is
/// the slow envelope, realized at the packet scale on theta's grid; resonant
/// xi' in theta's support produce an error listing the offending
/// frequencies.
pub fn apply_bilinear(
    s_envelope: &CField,
    theta: &QuaternionField,
    kernel: &NormalFormKernel,
    eps: f64,
) -> Result<QuaternionField> {
    let fast = theta.grid;
    let k = kernel.k;
    let kidx = fast.carrier_index(k)?;

    let slow = s_envelope.grid;
    if (eps * fast.len_alpha - slow.len_alpha).abs() > 1e-9 * slow.len_alpha {
        return Err(Error::Incommensurable(format!(
            "eps * len_fast = {} != len_slow = {}",
            eps * fast.len_alpha,
            slow.len_alpha
        )));
    }
    // realize eps conj(S)(eps x) e^{-j k alpha} spectrally: slow coefficients
    // embed index-to-index, shifted by -k
    let sbar = s_envelope.conj();
    let scoeff = sbar.coeffs();

    // the filtered packet support: |(eta1 + k, eta2)| <= k/2
    let mut support: Vec<(i64, i64, Complex64)> = Vec::new();
    for ia in 0..slow.n_alpha {
        let sa = Grid2::signed_index(ia, slow.n_alpha) - kidx;
        for ib in 0..slow.n_beta {
            let sb = Grid2::signed_index(ib, slow.n_beta);
            let eta1 = sa as f64 * fast.dxi1();
            let eta2 = sb as f64 * 2.0 * std::f64::consts::PI / fast.len_beta;
            let d1 = eta1 + k;
            if (d1 * d1 + eta2 * eta2).sqrt() <= 0.5 * k {
                let c = scoeff[slow.idx(ia, ib)] * eps;
                if c.norm() > 0.0 {
                    support.push((sa, sb, c));
                }
            }
        }
    }

    let th = fft_left(theta);
    let mut out_u = vec![Complex64::default(); fast.len()];
    let mut out_v = vec![Complex64::default(); fast.len()];
    let half_a = (fast.n_alpha / 2) as i64;
    let half_b = (fast.n_beta / 2) as i64;
    let mut resonant: Vec<(f64, f64)> = Vec::new();
    // only coefficients carrying actual theta content participate; round-off
    // junk must not trip the resonance detector
    let th_scale: f64 = (0..th.u.len())
        .map(|i| th.u[i].norm().max(th.v[i].norm()))
        .fold(0.0, f64::max);
    let coeff_floor = 1e-14 * th_scale;

    for ja in 0..fast.n_alpha {
        let sa_t = Grid2::signed_index(ja, fast.n_alpha);
        for jb in 0..fast.n_beta {
            let i_t = fast.idx(ja, jb);
            let tu = th.u[i_t];
            let tv = th.v[i_t];
            if tu.norm() + tv.norm() <= coeff_floor {
                continue;
            }
            let sb_t = Grid2::signed_index(jb, fast.n_beta);
            let xi_p = (
                sa_t as f64 * fast.dxi1(),
                sb_t as f64 * 2.0 * std::f64::consts::PI / fast.len_beta,
            );
            if xi_p.0 == 0.0 && xi_p.1 == 0.0 {
                continue;
            }
            if is_resonant(k, xi_p) {
                if resonant.len() < 16 {
                    resonant.push(xi_p);
                }
                continue;
            }
            let q = match kernel.kernel_values(xi_p) {
                Ok((q0, _)) => q0,
                Err(Error::InvalidArgument { .. }) => continue, // below cutoff
                Err(e) => return Err(e),
            };
            for &(da, db, c) in &support {
                let oa = sa_t + da;
                let ob = sb_t + db;
                if oa < -half_a || oa >= half_a || ob < -half_b || ob >= half_b {
                    continue;
                }
                let io = fast.idx(
                    Grid2::storage_index(oa, fast.n_alpha),
                    Grid2::storage_index(ob, fast.n_beta),
                );
                let w = c * q;
                out_u[io] += w * tu;
                out_v[io] += w * tv;
            }
        }
    }
    if !resonant.is_empty() {
        return Err(Error::Resonant(resonant));
    }
    Ok(ifft(&SpectralField {
        grid: fast,
        flavor: Flavor::Left,
        u: out_u,
        v: out_v,
    }))
}
