//! Order-by-order residual verification of the multiscale hierarchy and
//! eps-sweep convergence studies.
//!
//! The evolution-equation residual P~ (I - H~) z~ k - [D~_t, H~] D~_t zeta~^dagger
//! minus the multiscale value of the quadratic integral terms is collected in
//! the graded packet algebra, so each eps power is available separately: the
//! orders built into the correctors cancel to round-off, and the surviving
//! power-4+ content realizes to the residual whose eps-scaling the sweep
//! measures.

use crate::cfield::CField;
use crate::error::{Error, Result};
use crate::grid::Grid2;
use crate::multiscale::{
    realize_spectrum, spectrum_norms, Graded, ScaleContext, Slot, TildeOps,
};
use crate::spectral::{
    fractional_derivative, k_dirac, flat_hilbert, MultiplierSymbol, QuaternionField,
};
use crate::wavepacket::{assemble, packet_a, packet_b, AssembleOptions};
use num_complex::Complex64;

const JJ: Complex64 = Complex64::new(0.0, 1.0);

// ---------------------------------------------------------------------------
// Low-order residuals
// ---------------------------------------------------------------------------

/// Carrier-time derivative alone (multiplication by n j omega per phase).
fn dt_fast(g: &Graded) -> Graded {
    let om = g.ctx.params.omega;
    let mut out = Graded::zero(g.ctx);
    for (&(p, n), slot) in &g.slots {
        if n != 0 {
            let mut s = Slot::zeros(g.ctx.slow, slot.jet_len());
            for m in 0..slot.jet_len() {
                s.u[m] = slot.u[m].scale(JJ * n as f64 * om);
                s.v[m] = slot.v[m].scale(JJ * n as f64 * om);
            }
            out.slots.insert((p, n), s);
        }
    }
    out
}

/// L2 norm of P^(0) (I - H^(0)) z^(1) k with the slow variables frozen;
/// zero exactly when omega^2 = k.
pub fn dispersion_residual(
    a: &CField,
    ctx: ScaleContext,
    eps: f64,
    n_fast: usize,
) -> Result<f64> {
    let ga = packet_a(ctx, a)?;
    let z1k = crate::wavepacket::build_z1(&ga).rmul_k();
    let f = z1k.sub(&z1k.h0_piece(0));
    // P^(0) = d_t0^2 - j d_a0 with slow variables frozen
    let p0 = dt_fast(&dt_fast(&f)).sub(&f.d_alpha_fast().lmul_j());
    let fast = fast_grid_for(ctx.slow, eps, n_fast, ctx.params.k)?;
    let s = realize_spectrum(&p0, eps, fast, 0)?;
    Ok(spectrum_norms(&s, 0.0).0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeFrame {
    /// A = A(X + omega' t1 ...): the secular forcing vanishes.
    Traveling,
    /// A_{t1} = 0: the forcing equals 2 omega omega' ||A_X||.
    Static,
}

/// Norm of the order-2 secular forcing 2 j omega (A_{t1} - omega' A_{a1}) e^{j phi} i.
pub fn group_velocity_residual(
    a: &CField,
    ctx: ScaleContext,
    frame: TimeFrame,
    eps: f64,
    n_fast: usize,
) -> Result<f64> {
    let omp = ctx.params.omega_prime;
    let ax = a.deriv_x();
    let at1 = match frame {
        TimeFrame::Traveling => ax.scale(Complex64::new(omp, 0.0)),
        TimeFrame::Static => CField::zeros(ctx.slow),
    };
    let mut diff = at1;
    diff.add_assign_scaled(&ax, Complex64::new(-omp, 0.0));
    let mut slot = Slot::zeros(ctx.slow, 1);
    slot.u[0] = diff.scale(2.0 * JJ * ctx.params.omega);
    let forcing = Graded::from_slot(ctx, 2, 1, slot).rmul_i();
    let fast = fast_grid_for(ctx.slow, eps, n_fast, ctx.params.k)?;
    let s = realize_spectrum(&forcing, eps, fast, 0)?;
    Ok(spectrum_norms(&s, 0.0).0)
}

// ---------------------------------------------------------------------------
// Third-order forcing terms
// ---------------------------------------------------------------------------

pub struct ForcingTerms {
    /// The nonzero terms by index (1, 2, 3, 4, 5, 6, 9, 12).
    pub terms: Vec<(usize, Graded)>,
    pub combined: Graded,
    pub simplified: Graded,
}

/// The displayed third-order forcing terms, each per its closed form, with
/// the T-derivative of A supplied explicitly (the envelope-equation
/// substitution by default).  M^(2) is passed in so either the canonical
/// choice or a custom field can be used.
pub fn epsilon3_forcing(
    a: &CField,
    b: &CField,
    a_t: &CField,
    m2: &CField,
    ctx: ScaleContext,
) -> Result<ForcingTerms> {
    let k = ctx.params.k;
    let om = ctx.params.omega;
    let wpp = ctx.params.omega_double_prime;
    let ga = packet_a(ctx, a)?;
    let gb = packet_b(ctx, b, None, None)?;
    let gbar = ga.conj();

    let packet3 = |f: &CField, phase: i32| -> Graded {
        let mut slot = Slot::zeros(ctx.slow, 1);
        slot.u[0] = f.clone();
        Graded::from_slot(ctx, 3, phase, slot)
    };
    let scalar2 = |f: &CField| -> Graded {
        let mut slot = Slot::zeros(ctx.slow, 1);
        slot.u[0] = f.clone();
        Graded::from_slot(ctx, 2, 0, slot)
    };
    let abs_d = |g: &Graded| -> Graded {
        g.slow_multiplier(&MultiplierSymbol::fractional(1.0).expect("valid order"))
            .power_shift(1)
    };

    // I1 = conj(B)_Y e^{-j phi}
    let i1 = gb.conj().dy_slow();
    // I2 = -(1/2k) conj(A)_YY e^{-j phi} i - (1/k) conj(A)_XY e^{-j phi} j
    let i2 = gbar
        .dy_slow()
        .dy_slow()
        .rmul_i()
        .scale(-0.5 / k)
        .add(&gbar.dx_slow().dy_slow().scale_complex(-JJ / k));
    // I3 = -conj(B)_Y e^{-j phi} - (I - H0) |D| (M2 k)
    let m2k = scalar2(m2).rmul_k();
    let dm2 = abs_d(&m2k);
    let i3 = i1
        .scale(-1.0)
        .sub(&dm2.sub(&dm2.h0_piece(0)));
    // I4 = -(1/2k) A_YY e i + (1/2k) conj(A)_YY e^- i + (1/k) j conj(A)_XY e^-
    //      + (k/2)(I - H0) |D| (|A|^2 k)
    let mod_a2 = ga.mul(&gbar);
    let da2 = abs_d(&mod_a2.rmul_k());
    let i4 = ga
        .dy_slow()
        .dy_slow()
        .rmul_i()
        .scale(-0.5 / k)
        .add(&gbar.dy_slow().dy_slow().rmul_i().scale(0.5 / k))
        .add(&gbar.dx_slow().dy_slow().scale_complex(JJ / k))
        .add(&da2.sub(&da2.h0_piece(0)).scale(0.5 * k));
    // I5 = omega (2 j A_T - w'' A_XX + 2 k^2 omega A |A|^2) e i
    let cubic = ga.mul(&ga.mul(&gbar));
    let i5 = packet3(a_t, 1)
        .scale_complex(2.0 * JJ)
        .sub(&ga.dx_slow().dx_slow().scale(wpp))
        .add(&cubic.scale(2.0 * k * k * om))
        .scale(om)
        .rmul_i();
    // I6 = (k/2)(I - H0)(A conj(A)_Y j);  I9 = -I6
    let aay = ga.mul(&gbar.dy_slow()).scale_complex(JJ);
    let i6 = aay.sub(&aay.h0_piece(0)).scale(0.5 * k);
    let i9 = i6.scale(-1.0);
    // I12 = -k^3 A|A|^2 e i
    let i12 = cubic.rmul_i().scale(-k * k * k);

    let combined = i1
        .add(&i2)
        .add(&i3)
        .add(&i4)
        .add(&i5)
        .add(&i6)
        .add(&i9)
        .add(&i12);

    // simplified total:
    // (I - H0)(-|D| M2 k + (k/2)|D|(|A|^2 k))
    //   + omega (2 j A_T - w'' A_XX + 2 w'' A_YY + k^2 omega A|A|^2) e i
    let block = dm2.scale(-1.0).add(&da2.scale(0.5 * k));
    let first = block.sub(&block.h0_piece(0));
    let second = packet3(a_t, 1)
        .scale_complex(2.0 * JJ)
        .sub(&ga.dx_slow().dx_slow().scale(wpp))
        .add(&ga.dy_slow().dy_slow().scale(2.0 * wpp))
        .add(&cubic.scale(k * k * om))
        .scale(om)
        .rmul_i();
    let simplified = first.add(&second);

    Ok(ForcingTerms {
        terms: vec![
            (1, i1),
            (2, i2),
            (3, i3),
            (4, i4),
            (5, i5),
            (6, i6),
            (9, i9),
            (12, i12),
        ],
        combined,
        simplified,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum M2Choice {
    /// M^(2) = (k/2)|A|^2: the secular-suppressing choice.
    Canonical,
    /// Caller-supplied field (negative tests).
    Custom,
}

/// Norm of the combined third-order forcing with the canonical (or custom)
/// M^(2) and the supplied A_T; with the canonical choice and A_T solving the
/// envelope equation this is bounded by the solver defect.
pub fn hnls_closure_residual(
    a: &CField,
    a_t: &CField,
    m2_custom: Option<&CField>,
    ctx: ScaleContext,
    eps: f64,
    n_fast: usize,
) -> Result<f64> {
    let k = ctx.params.k;
    let m2 = match m2_custom {
        Some(f) => f.clone(),
        None => {
            let mut m = a.clone();
            for (z, w) in m.data.iter_mut().zip(&a.data) {
                *z = Complex64::new(0.5 * k * w.norm_sqr(), 0.0);
            }
            m
        }
    };
    let zero_b = CField::zeros(ctx.slow);
    let terms = epsilon3_forcing(a, &zero_b, a_t, &m2, ctx)?;
    let fast = fast_grid_for(ctx.slow, eps, n_fast, k)?;
    let s = realize_spectrum(&terms.simplified, eps, fast, 0)?;
    Ok(spectrum_norms(&s, 0.0).0)
}

// ---------------------------------------------------------------------------
// The residual sweep
// ---------------------------------------------------------------------------

fn fast_grid_for(slow: Grid2, eps: f64, n_fast: usize, k: f64) -> Result<Grid2> {
    let g = Grid2::new(
        n_fast,
        n_fast,
        slow.len_alpha / eps,
        slow.len_beta / eps,
    )?;
    g.carrier_index(k)?;
    Ok(g)
}

pub struct ResidualOptions<'a> {
    pub orders: usize,
    pub lambda2_y_sign: f64,
    pub b: Option<&'a CField>,
    pub sobolev_s: f64,
    pub n_fast: usize,
}

impl Default for ResidualOptions<'_> {
    fn default() -> Self {
        ResidualOptions {
            orders: 3,
            lambda2_y_sign: 1.0,
            b: None,
            sobolev_s: 2.0,
            n_fast: 256,
        }
    }
}

pub struct GradedResidual {
    pub residual: Graded,
    /// Value-sup of each power slot at or below the assembled order.
    pub low_order_sups: Vec<(i32, f64)>,
}

/// Collect the full graded residual of the evolution equation for the
/// correctors assembled from `a` (and optionally `b`).
pub fn assemble_residual(
    ctx: ScaleContext,
    a: &CField,
    opts: &ResidualOptions,
) -> Result<GradedResidual> {
    let sol = assemble(
        ctx,
        a,
        &AssembleOptions {
            orders: opts.orders,
            b: opts.b,
            m3: None,
            b3: None,
            lambda2_y_sign: opts.lambda2_y_sign,
        },
    )?;
    let ops = TildeOps::new(ctx, &sol.lambda, &sol.b_tilde);
    let f = sol.z_k.sub(&ops.h_tilde(&sol.z_k));
    let lhs = ops.p_tilde(&f);
    let g2 = sol.b_tilde.add(&ops.d_t_tilde(&sol.lambda.dagger()));
    let hg2 = ops.h_tilde(&g2);
    let rhs1 = ops.d_t_tilde(&hg2).sub(&ops.h_tilde(&ops.d_t_tilde(&g2)));
    // the quadratic singular integrals at their multiscale order
    let ga = packet_a(ctx, a)?;
    let k = ctx.params.k;
    let rhs2 = ga.mul(&ga.mul(&ga.conj())).rmul_i().scale(-k * k * k);
    let mut residual = lhs.sub(&rhs1).sub(&rhs2);
    residual.prune(1e-13);

    let mut low = Vec::new();
    for p in 1..=3i32 {
        let slice = residual.power_slice(p);
        low.push((p, slice.sup_value()));
    }
    Ok(GradedResidual {
        residual,
        low_order_sups: low,
    })
}

#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub eps_list: Vec<f64>,
    pub l2_residual: Vec<f64>,
    pub hs_residual: Vec<f64>,
    pub projected_residual: Vec<f64>,
    pub slope_l2: f64,
    pub slope_hs: f64,
    pub slope_projected: f64,
    pub low_order_sups: Vec<(i32, f64)>,
    /// Value-sup of the collected order-3 slot with the + and - sign of the
    /// transverse-derivative term in the second-order corrector.
    pub lambda2_sign_study: (f64, f64),
    pub sobolev_s: f64,
    pub orders: usize,
    pub k: f64,
    pub n_fast: usize,
    pub n_slow: usize,
    /// Residual contributions this operator set does not evaluate.
    pub omitted: Vec<String>,
}

/// Least-squares slope of log(norm) against log(eps).
pub fn fit_slope(eps: &[f64], norms: &[f64]) -> f64 {
    let n = eps.len() as f64;
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = norms.iter().map(|v| v.max(1e-300).ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

/// The headline study: assemble the residual once (it is eps-independent in
/// the graded algebra), realize it at every eps in the list, and fit slopes
/// for the full series and the series with the identified eps^4 shapes
/// projected out (they are available in closed form, so projection is exact
/// subtraction of the power-4 slot).
pub fn residual_sweep(
    ctx: ScaleContext,
    a: &CField,
    eps_list: &[f64],
    opts: &ResidualOptions,
) -> Result<ConvergenceStudy> {
    if eps_list.len() < 2 {
        return Err(Error::invalid("eps_list", "need at least two scales"));
    }
    for w in eps_list.windows(2) {
        if w[1] >= w[0] {
            return Err(Error::invalid("eps_list", "must be strictly decreasing"));
        }
    }
    let gr = assemble_residual(ctx, a, opts)?;

    // sign study: the collected order-3 slot under the two corrector signs
    let sign_plus = gr
        .low_order_sups
        .iter()
        .find(|(p, _)| *p == 3)
        .map(|(_, s)| *s)
        .unwrap_or(0.0);
    let sign_minus = if opts.orders >= 2 {
        let alt = assemble_residual(
            ctx,
            a,
            &ResidualOptions {
                lambda2_y_sign: -opts.lambda2_y_sign,
                orders: opts.orders,
                b: opts.b,
                sobolev_s: opts.sobolev_s,
                n_fast: opts.n_fast,
            },
        )?;
        alt.low_order_sups
            .iter()
            .find(|(p, _)| *p == 3)
            .map(|(_, s)| *s)
            .unwrap_or(0.0)
    } else {
        sign_plus
    };

    let mut l2 = Vec::new();
    let mut hs = Vec::new();
    let mut projected = Vec::new();
    for &eps in eps_list {
        let fast = fast_grid_for(ctx.slow, eps, opts.n_fast, ctx.params.k)?;
        let s_full = realize_spectrum(&gr.residual, eps, fast, 0)?;
        let (n_l2, n_hs) = spectrum_norms(&s_full, opts.sobolev_s);
        l2.push(n_l2);
        hs.push(n_hs);
        let s_proj = realize_spectrum(&gr.residual, eps, fast, 5)?;
        let (_, p_hs) = spectrum_norms(&s_proj, opts.sobolev_s);
        projected.push(p_hs);
    }

    Ok(ConvergenceStudy {
        eps_list: eps_list.to_vec(),
        slope_l2: fit_slope(eps_list, &l2),
        slope_hs: fit_slope(eps_list, &hs),
        slope_projected: fit_slope(eps_list, &projected),
        l2_residual: l2,
        hs_residual: hs,
        projected_residual: projected,
        low_order_sups: gr.low_order_sups,
        lambda2_sign_study: (sign_plus, sign_minus),
        sobolev_s: opts.sobolev_s,
        orders: opts.orders,
        k: ctx.params.k,
        n_fast: opts.n_fast,
        n_slow: ctx.slow.n_alpha,
        omitted: vec![
            "third-homogeneity operator (kernel recorded structurally only)".into(),
            "eps^4 content of the quadratic singular integrals (kept at multiscale order)".into(),
            "third-order transport and acceleration corrections (no closed form)".into(),
            "fourth-order surface corrector (injectable, absent)".into(),
        ],
    })
}

// ---------------------------------------------------------------------------
// Flat energy
// ---------------------------------------------------------------------------

/// Flat-surface energy: E = ||theta_t||^2 - integral theta . (k x grad) theta,
/// the quadratic form equal to the homogeneous half-derivative norm squared
/// on the antiholomorphic subspace.
pub struct FlatEnergy {
    pub energy: f64,
    pub kinetic: f64,
    pub quadratic_form: f64,
    pub h_half_sq: f64,
}

pub fn flat_energy(theta: &QuaternionField, theta_t: &QuaternionField) -> Result<FlatEnergy> {
    theta.grid.same_as(&theta_t.grid)?;
    let kinetic = {
        let n = theta_t.l2_norm();
        n * n
    };
    // -(theta, k D theta): k D = j d_alpha - i d_beta
    let kd = k_dirac(theta);
    let quadratic_form = -theta.l2_inner(&kd)?;
    let half = fractional_derivative(theta, 0.5)?;
    let h_half_sq = {
        let n = half.l2_norm();
        n * n
    };
    Ok(FlatEnergy {
        energy: kinetic + quadratic_form,
        kinetic,
        quadratic_form,
        h_half_sq,
    })
}

/// Projection onto the -H0-invariant subspace, (I - H0)/2.
pub fn project_antiholomorphic(theta: &QuaternionField) -> QuaternionField {
    theta.sub(&flat_hilbert(theta)).expect("same grid").scale(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hnls::{hnls_rhs_coefficients, hnls_time_derivative, PacketParams};
    use crate::quat;
    use rand::{Rng, SeedableRng};

    fn ctx() -> ScaleContext {
        ScaleContext {
            slow: Grid2::square(64, 1.6).unwrap(),
            params: PacketParams::new(1.0, 0.1).unwrap(),
        }
    }

    fn gauss(c: &ScaleContext, amp: f64, sig: f64, imag: f64) -> CField {
        let g = c.slow;
        CField::from_fn(g, |x, y| {
            let dx = x - 0.5 * g.len_alpha;
            let dy = y - 0.5 * g.len_beta;
            let e = (-(dx * dx + dy * dy) / (2.0 * sig * sig)).exp();
            Complex64::new(amp * e, imag * (-(dx * dx + dy * dy) / (1.7 * sig * sig)).exp())
        })
    }

    #[test]
    fn dispersion_zero_on_shell_and_quadratic_off_shell() {
        let c = ctx();
        let a = gauss(&c, 0.7, 0.6, 0.1);
        let res = dispersion_residual(&a, c, 0.1, 256).unwrap();
        assert!(res <= 1e-10, "on-shell residual {res}");
        // zero envelope
        assert_eq!(
            dispersion_residual(&CField::zeros(c.slow), c, 0.1, 256).unwrap(),
            0.0
        );

        // omega = 1, k = 2, A constant: residual = |k - omega^2| ||(I-H)z1k||
        let c2 = ScaleContext {
            slow: Grid2::square(64, 1.6).unwrap(),
            params: PacketParams::new(2.0, 0.1).unwrap().with_omega(1.0),
        };
        let one = CField::constant(c2.slow, Complex64::new(1.0, 0.0));
        let res2 = dispersion_residual(&one, c2, 0.1, 256).unwrap();
        let ga = packet_a(c2, &one).unwrap();
        let z1k = crate::wavepacket::build_z1(&ga).rmul_k();
        let f = z1k.sub(&z1k.h0_piece(0));
        let fast = fast_grid_for(c2.slow, 0.1, 256, 2.0).unwrap();
        let base = spectrum_norms(&realize_spectrum(&f, 0.1, fast, 0).unwrap(), 0.0).0;
        let expect = (2.0 - 1.0f64).abs() * base;
        assert!(
            (res2 - expect).abs() < 1e-10 * expect,
            "detuned residual {res2} vs {expect}"
        );

        // quadratic in |k - omega^2| near the shell
        let mut rs = Vec::new();
        for d in [1e-2, 5e-3] {
            let cd = ScaleContext {
                slow: c.slow,
                params: PacketParams::new(1.0, 0.1)
                    .unwrap()
                    .with_omega((1.0 + d as f64).sqrt()),
            };
            rs.push(dispersion_residual(&a, cd, 0.1, 256).unwrap());
        }
        let ratio = rs[0] / rs[1];
        assert!(
            (1.9..=2.1).contains(&ratio),
            "linear-in-detuning ratio {ratio} (residual is linear in k - omega^2)"
        );
    }

    #[test]
    fn group_velocity_frames() {
        let c = ctx();
        let a = gauss(&c, 0.7, 0.6, 0.2);
        let trav = group_velocity_residual(&a, c, TimeFrame::Traveling, 0.1, 256).unwrap();
        assert!(trav <= 1e-11, "traveling-frame residual {trav}");
        assert_eq!(
            group_velocity_residual(
                &CField::constant(c.slow, Complex64::new(0.5, 0.0)),
                c,
                TimeFrame::Static,
                0.1,
                256
            )
            .unwrap(),
            0.0
        );
        let stat = group_velocity_residual(&a, c, TimeFrame::Static, 0.1, 256).unwrap();
        // norm = 2 omega omega' || realized A_X packet ||
        let mut slot = Slot::zeros(c.slow, 1);
        slot.u[0] = a.deriv_x();
        let ax = Graded::from_slot(c, 2, 1, slot).rmul_i();
        let fast = fast_grid_for(c.slow, 0.1, 256, 1.0).unwrap();
        let base = spectrum_norms(&realize_spectrum(&ax, 0.1, fast, 0).unwrap(), 0.0).0;
        let expect = 2.0 * c.params.omega * c.params.omega_prime * base;
        assert!((stat - expect).abs() < 1e-12 * expect, "{stat} vs {expect}");
    }

    #[test]
    fn forcing_terms_cases() {
        let c = ctx();
        let zero = CField::zeros(c.slow);
        let terms = epsilon3_forcing(&zero, &zero, &zero, &zero, c).unwrap();
        assert_eq!(terms.combined.sup(), 0.0);
        assert_eq!(terms.simplified.sup(), 0.0);

        // I6 + I9 = 0 exactly
        let a = gauss(&c, 0.8, 0.6, 0.15);
        let b = gauss(&c, 0.3, 0.8, 0.1);
        let at = gauss(&c, 0.2, 0.5, 0.4);
        let m2 = gauss(&c, 0.4, 0.7, 0.0).map(|z| Complex64::new(z.re, 0.0));
        let terms = epsilon3_forcing(&a, &b, &at, &m2, c).unwrap();
        let i6 = &terms.terms.iter().find(|(i, _)| *i == 6).unwrap().1;
        let i9 = &terms.terms.iter().find(|(i, _)| *i == 9).unwrap().1;
        assert!(i6.add(i9).sup() <= 1e-12 * i6.sup().max(1e-12));

        // transcription consistency: sum of displayed terms vs simplified
        // total, with an independent random A_T
        let d = terms.combined.sub(&terms.simplified);
        let scale = terms.simplified.sup_value().max(1.0);
        assert!(
            d.sup_value() <= 1e-9 * scale,
            "transcription defect {} vs scale {scale}",
            d.sup_value()
        );
    }

    #[test]
    fn closure_residual_plane_wave_and_canonical_m2() {
        // plane wave A = a0 e^{j(kappa X - nu T)} with nu = a kappa^2 - c a0^2
        // solves the envelope equation; the closure residual is tiny
        let c = ctx();
        let (ca, _, cc) = hnls_rhs_coefficients(&c.params);
        let kappa = 2.0 * std::f64::consts::PI / c.slow.len_alpha * 4.0;
        let a0 = 0.6;
        let nu = ca * kappa * kappa - cc * a0 * a0;
        let a = CField::from_fn(c.slow, |x, _| Complex64::from_polar(a0, kappa * x));
        let at = a.scale(-JJ * nu);
        let res = hnls_closure_residual(&a, &at, None, c, 0.1, 256).unwrap();
        assert!(res <= 1e-8, "plane-wave closure residual {res}");

        // zero envelope gives zero
        let z = CField::zeros(c.slow);
        assert_eq!(hnls_closure_residual(&z, &z, None, c, 0.1, 256).unwrap(), 0.0);

        // the equation substitution makes the forcing vanish identically
        let g = gauss(&c, 0.7, 0.6, 0.2);
        let gt = hnls_time_derivative(&g, &c.params);
        let res_g = hnls_closure_residual(&g, &gt, None, c, 0.1, 256).unwrap();
        assert!(res_g <= 1e-10, "substituted closure residual {res_g}");

        // a custom (wrong) M2 leaves an order-one defect
        let bad = hnls_closure_residual(&g, &gt, Some(&z), c, 0.1, 256).unwrap();
        assert!(bad > 1e-4, "custom-M2 residual should not vanish: {bad}");
    }

    #[test]
    fn residual_low_orders_cancel() {
        let c = ctx();
        let a = gauss(&c, 0.75, 0.6, 0.2);
        let gr = assemble_residual(ctx(), &a, &Default::default()).unwrap();
        let scale = gr.residual.sup_value().max(1.0);
        for (p, sup) in &gr.low_order_sups {
            assert!(
                *sup <= 1e-6 * scale,
                "order-{p} slot has sup {sup} (scale {scale})"
            );
        }
    }

    #[test]
    fn residual_sweep_slopes() {
        let c = ctx();
        let a = gauss(&c, 0.75, 0.6, 0.2);
        let eps = [0.2, 0.1, 0.05];
        let study = residual_sweep(c, &a, &eps, &Default::default()).unwrap();
        // norms strictly decreasing
        for w in study.hs_residual.windows(2) {
            assert!(w[1] < w[0], "{:?}", study.hs_residual);
        }
        assert!(
            study.slope_hs >= 3.0,
            "full-series H^s slope {} over {:?}",
            study.slope_hs,
            study.hs_residual
        );
        assert!(
            study.slope_projected >= 3.5,
            "projected slope {} over {:?}",
            study.slope_projected,
            study.projected_residual
        );

        // order-1 ablation loses the cancellation
        let ablate = residual_sweep(
            c,
            &a,
            &eps,
            &ResidualOptions {
                orders: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(
            ablate.slope_hs <= 2.5,
            "ablated slope {} should stay near 2",
            ablate.slope_hs
        );
    }

    #[test]
    fn flat_energy_identities() {
        let fast = Grid2::square(64, 2.0).unwrap();
        let zero = QuaternionField::zeros(fast);
        let e = flat_energy(&zero, &zero).unwrap();
        assert_eq!(e.energy, 0.0);

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for trial in 0..50 {
            let mut u = vec![Complex64::default(); fast.len()];
            let mut v = vec![Complex64::default(); fast.len()];
            for sa in -6i64..=6 {
                for sb in -6i64..=6 {
                    if sa == 0 && sb == 0 {
                        continue;
                    }
                    let ia = Grid2::storage_index(sa, fast.n_alpha);
                    let ib = Grid2::storage_index(sb, fast.n_beta);
                    let decay = 1.0 / (1.0 + (sa * sa + sb * sb) as f64);
                    u[fast.idx(ia, ib)] =
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * decay;
                    v[fast.idx(ia, ib)] =
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * decay;
                }
            }
            let theta_raw = crate::spectral::ifft(&crate::spectral::SpectralField {
                grid: fast,
                flavor: crate::spectral::Flavor::Left,
                u,
                v,
            });
            let theta = project_antiholomorphic(&theta_raw);
            let e = flat_energy(&theta, &zero).unwrap();
            assert!(
                (e.quadratic_form - e.h_half_sq).abs() <= 1e-11 * e.h_half_sq.max(1e-12),
                "trial {trial}: form {} vs half-norm {}",
                e.quadratic_form,
                e.h_half_sq
            );
            assert!(e.quadratic_form >= -1e-12);
        }
    }

    #[test]
    fn flat_energy_single_mode_value() {
        // theta with theta = -H0 theta built from one mode: the quadratic
        // form equals |xi| times the L2 mass
        let fast = Grid2::square(64, 1.0).unwrap();
        let raw = QuaternionField::from_fn(fast, |a, _| quat::exp_j(2.0 * a).scale(0.7));
        let theta = project_antiholomorphic(&raw);
        let e = flat_energy(&theta, &QuaternionField::zeros(fast)).unwrap();
        let l2 = theta.l2_norm();
        assert!(
            (e.quadratic_form - 2.0 * l2 * l2).abs() < 1e-11 * e.quadratic_form.abs().max(1e-12)
        );
    }

    #[test]
    fn fit_slope_recovers_power_law() {
        let eps = [0.2, 0.1, 0.05];
        let norms: Vec<f64> = eps.iter().map(|&e: &f64| 3.0 * e.powf(3.7)).collect();
        let s = fit_slope(&eps, &norms);
        assert!((s - 3.7).abs() < 1e-12);
    }
}
