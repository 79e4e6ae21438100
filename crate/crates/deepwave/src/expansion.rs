//! Multiscale expansion operators of the flat Hilbert transform acting on
//! wave packets, the closed-form first- and second-homogeneity operators on
//! the fast grid, and exact-multiplier oracle comparators.

use crate::cfield::CField;
use crate::error::{Error, Result};
use crate::grid::Grid2;
use crate::hnls::PacketParams;
use crate::multiscale::{realize_spectrum, Graded, ScaleContext, Slot};
use crate::spectral::{flat_hilbert, ifft, sobolev_norm, QuaternionField};
use num_complex::Complex64;

const JJ: Complex64 = Complex64::new(0.0, 1.0);

/// A wave packet f(alpha, beta) = F(eps alpha, eps beta) e^{j k alpha} with a
/// 1,j-valued slow envelope.
#[derive(Debug, Clone)]
pub struct Packet {
    pub envelope: CField,
    pub k: f64,
    pub eps: f64,
}

impl Packet {
    pub fn new(envelope: CField, k: f64, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::invalid("eps", "scale must lie in (0, 1)"));
        }
        Ok(Packet { envelope, k, eps })
    }

    /// Fast grid commensurate with the packet scale.
    pub fn fast_grid(&self, n: usize) -> Result<Grid2> {
        let slow = self.envelope.grid;
        let g = Grid2::new(
            n,
            n,
            slow.len_alpha / self.eps,
            slow.len_beta / self.eps,
        )?;
        if self.k != 0.0 {
            g.carrier_index(self.k)?;
        }
        Ok(g)
    }

    fn ctx(&self) -> Result<ScaleContext> {
        Ok(ScaleContext {
            slow: self.envelope.grid,
            params: PacketParams::new(self.k.abs().max(f64::MIN_POSITIVE), self.eps)?,
        })
    }

    /// Single-slot graded view at the stated power and the packet's carrier
    /// sign; the graded context always carries |k|, so a negative carrier is
    /// phase -1.
    pub fn as_graded(&self, power: i32) -> Result<Graded> {
        let ctx = self.ctx()?;
        let mut slot = Slot::zeros(ctx.slow, 1);
        slot.u[0] = self.envelope.clone();
        let phase = if self.k >= 0.0 { 1 } else { -1 };
        Ok(Graded::from_slot(ctx, power, phase, slot))
    }

    /// Realize on the fast grid by exact trigonometric resampling.
    pub fn realize(&self, fast: Grid2) -> Result<QuaternionField> {
        if self.k == 0.0 {
            let f = self.envelope.resample(fast)?;
            return Ok(QuaternionField::from_complex_field(&f));
        }
        let g = self.as_graded(0)?;
        Ok(ifft(&realize_spectrum(&g, self.eps, fast, 0)?))
    }
}

/// Evaluate the order-`order` expansion operator of the flat Hilbert
/// transform on the packet (slow-grid derivatives of the envelope, then
/// modulation).  Order 0 with k = 0 falls back to the dilation-invariant
/// exact transform with no correctors.
pub fn h0_expansion(pk: &Packet, order: usize, fast: Grid2) -> Result<QuaternionField> {
    if order > 3 {
        return Err(Error::invalid("order", "expansion order must be 0..=3"));
    }
    if pk.k == 0.0 {
        if order == 0 {
            let f = pk.realize(fast)?;
            return Ok(flat_hilbert(&f));
        }
        return Ok(QuaternionField::zeros(fast));
    }
    let g = pk.as_graded(0)?;
    let piece = g.h0_piece(order);
    Ok(ifft(&realize_spectrum(&piece, pk.eps, fast, i32::MIN + 1)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignConvention {
    /// H0 ~ H0^(0) + eps H0^(1) + eps^2 H0^(2) + eps^3 H0^(3); this is the
    /// convention the exact-multiplier oracle selects.
    AllPlus,
    /// The literal displayed combination H0^(0) - eps H0^(1) - eps^2 H0^(2)
    /// - eps^3 H0^(3), kept for the sign study.
    Alternating,
}

/// H^s norm of (exact H0 - truncated expansion) applied to the packet.
pub fn h0_truncation_error_with(
    pk: &Packet,
    s: f64,
    fast: Grid2,
    convention: SignConvention,
) -> Result<f64> {
    let f = pk.realize(fast)?;
    let exact = flat_hilbert(&f);
    let mut approx = QuaternionField::zeros(fast);
    for order in 0..=3usize {
        let piece = h0_expansion(pk, order, fast)?;
        let sign = match convention {
            SignConvention::AllPlus => 1.0,
            SignConvention::Alternating => {
                if order == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
        };
        approx = approx.add(&piece.scale(sign * pk.eps.powi(order as i32)))?;
    }
    let diff = exact.sub(&approx)?;
    sobolev_norm(&diff, s)
}

pub fn h0_truncation_error(pk: &Packet, s: f64, fast: Grid2) -> Result<f64> {
    h0_truncation_error_with(pk, s, fast, SignConvention::AllPlus)
}

// ---------------------------------------------------------------------------
// Full first- and second-homogeneity operators on the fast grid
// ---------------------------------------------------------------------------

/// Raw surface components on the fast grid and the combinations
/// p1 = x + j z, p2 = y - i z.
#[derive(Debug, Clone)]
pub struct SurfaceSlices {
    pub x: CField,
    pub y: CField,
    pub z: CField,
}

impl SurfaceSlices {
    pub fn new(x: CField, y: CField, z: CField) -> Result<Self> {
        x.grid.same_as(&y.grid)?;
        x.grid.same_as(&z.grid)?;
        Ok(SurfaceSlices { x, y, z })
    }

    pub fn zeros(grid: Grid2) -> Self {
        SurfaceSlices {
            x: CField::zeros(grid),
            y: CField::zeros(grid),
            z: CField::zeros(grid),
        }
    }

    pub fn p1(&self) -> QuaternionField {
        // x + j z: a 1,j-valued field
        let u = CField {
            grid: self.x.grid,
            data: self
                .x
                .data
                .iter()
                .zip(&self.z.data)
                .map(|(a, b)| Complex64::new(a.re, b.re))
                .collect(),
        };
        QuaternionField::from_complex_field(&u)
    }

    pub fn p2(&self) -> QuaternionField {
        // y - i z
        let u = self.y.map(|c| Complex64::new(c.re, 0.0));
        let v = self.z.map(|c| Complex64::new(-c.re, 0.0));
        QuaternionField::from_channels(&u, &v).expect("same grid")
    }

    /// lambda = x i + y j + z k.
    pub fn lambda(&self) -> QuaternionField {
        QuaternionField {
            grid: self.x.grid,
            data: (0..self.x.grid.len())
                .map(|i| {
                    crate::quat::Quaternion::new(
                        0.0,
                        self.x.data[i].re,
                        self.y.data[i].re,
                        self.z.data[i].re,
                    )
                })
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        let c = Complex64::new(s, 0.0);
        SurfaceSlices {
            x: self.x.scale(c),
            y: self.y.scale(c),
            z: self.z.scale(c),
        }
    }
}

fn deriv(f: &QuaternionField, axis: usize) -> QuaternionField {
    let (u, v) = f.channels();
    let (du, dv) = if axis == 0 {
        (u.deriv_x(), v.deriv_x())
    } else {
        (u.deriv_y(), v.deriv_y())
    };
    QuaternionField::from_channels(&du, &dv).expect("same grid")
}

/// [p, H0] g = p H0(g) - H0(p g), with a shared transform for both orders.
fn commutator_h0(p: &QuaternionField, g: &QuaternionField) -> Result<QuaternionField> {
    let hg = flat_hilbert(g);
    let phg = p.mul(&hg)?;
    let hpg = flat_hilbert(&p.mul(g)?);
    phg.sub(&hpg)
}

/// First-homogeneity operator H1 f = sum_i [p_i, H0] d_i f.
pub fn h1_full(f: &QuaternionField, s: &SurfaceSlices) -> Result<QuaternionField> {
    f.grid.same_as(&s.x.grid)?;
    let p1 = s.p1();
    let p2 = s.p2();
    let out = commutator_h0(&p1, &deriv(f, 0))?;
    out.add(&commutator_h0(&p2, &deriv(f, 1))?)
}

/// Second-homogeneity operator
/// H2 f = sum_ij ( -[p_i, H0]((d_i p_j)(d_j f)) + 1/2 [p_i, [p_j, H0]] d_i d_j f ).
pub fn h2_full(f: &QuaternionField, s: &SurfaceSlices) -> Result<QuaternionField> {
    f.grid.same_as(&s.x.grid)?;
    let ps = [s.p1(), s.p2()];
    let mut out = QuaternionField::zeros(f.grid);
    for (i, pi) in ps.iter().enumerate() {
        for (j, pj) in ps.iter().enumerate() {
            let dpj = deriv(pj, i);
            let arg = dpj.mul(&deriv(f, j))?;
            out = out.sub(&commutator_h0(pi, &arg)?)?;
            let ddf = deriv(&deriv(f, j), i);
            let inner = commutator_h0(pj, &ddf)?;
            let double = pi.mul(&inner)?.sub(&commutator_h0(pj, &pi.mul(&ddf)?)?)?;
            out = out.add(&double.scale(0.5))?;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Multiscale operators on packets
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultiscaleOp {
    H1o1,
    H1o2,
    H2o2,
}

fn q_combo(lambda_order: &Graded) -> Graded {
    // x^(j) + j z^(j)
    lambda_order
        .component(1)
        .add(&lambda_order.component(3).scale_complex(JJ))
}

fn p2_combo(lambda_order: &Graded) -> Graded {
    // y^(j) - i z^(j)
    lambda_order
        .component(2)
        .sub(&lambda_order.component(3).lmul_i())
}

fn comm(p: &Graded, h: impl Fn(&Graded) -> Graded, g: &Graded) -> Graded {
    p.mul(&h(g)).sub(&h(&p.mul(g)))
}

/// Evaluate the chosen multiscale operator on a graded field, given the
/// corrector orders lambda^(1), lambda^(2), ... (1-indexed slice).
pub fn h_multiscale(f: &Graded, lambda_orders: &[Graded], which: MultiscaleOp) -> Result<Graded> {
    let h0 = |g: &Graded| g.h0_piece(0);
    let need = match which {
        MultiscaleOp::H1o1 => 1,
        MultiscaleOp::H1o2 | MultiscaleOp::H2o2 => {
            if which == MultiscaleOp::H1o2 {
                2
            } else {
                1
            }
        }
    };
    if lambda_orders.len() < need {
        return Err(Error::MissingField(format!(
            "corrector order {need} required by {which:?}"
        )));
    }
    let q1 = q_combo(&lambda_orders[0]);
    Ok(match which {
        MultiscaleOp::H1o1 => comm(&q1, h0, &f.d_alpha_fast()),
        MultiscaleOp::H1o2 => {
            let q2 = q_combo(&lambda_orders[1]);
            let p21 = p2_combo(&lambda_orders[0]);
            let h1 = |g: &Graded| g.h0_piece(1).power_shift(1);
            comm(&q2, h0, &f.d_alpha_fast())
                .add(&comm(&q1, h1, &f.d_alpha_fast()))
                .add(&comm(&q1, h0, &f.dx_slow()))
                .add(&comm(&p21, h0, &f.dy_slow()))
        }
        MultiscaleOp::H2o2 => {
            let da_q1 = q1.d_alpha_fast();
            let arg = da_q1.mul(&f.d_alpha_fast());
            let first = comm(&q1, h0, &arg).scale(-1.0);
            let ddf = f.d_alpha_fast().d_alpha_fast();
            let inner = comm(&q1, h0, &ddf);
            let double = q1.mul(&inner).sub(&comm(&q1, h0, &q1.mul(&ddf)));
            first.add(&double.scale(0.5))
        }
    })
}

/// The closed forms for (H1^(2) + H2^(2)) acting on conj(F) e^{-j phi}
/// (sign = -1) and on F e^{+j phi} (sign = +1), with the correctors built
/// from the envelopes A and B.
pub fn h2_wavenumber_formulas(
    gf: &Graded,
    ga: &Graded,
    gb: &Graded,
    sign: i32,
) -> Result<Graded> {
    let k = ga.ctx.params.k;
    match sign {
        -1 => {
            let fbar = gf.conj();
            let term1 = ga.mul(&ga.mul(&fbar)).scale(-k * k);
            let block = ga
                .mul(&fbar.dx_slow())
                .add(&ga.conj().mul(&gf.dy_slow()).rmul_k().scale(0.5))
                .sub(&gb.mul(&fbar).scale_complex(Complex64::new(k, 0.0) * JJ));
            Ok(term1.add(&block.sub(&block.h0_piece(0))))
        }
        1 => {
            let fbar = gf.conj();
            let b1 = ga.mul(&fbar.dy_slow()).rmul_k().scale(0.5);
            let out1 = b1.sub(&b1.h0_piece(0)).scale(-1.0);
            let abar = ga.conj();
            let second = abar
                .mul(&fbar.dy_slow())
                .sub(&abar.dy_slow().mul(&fbar))
                .scale_complex(0.5 * JJ)
                .rmul_i();
            Ok(out1.add(&second))
        }
        _ => Err(Error::invalid("sign", "must be +1 or -1")),
    }
}
