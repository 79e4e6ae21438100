//! Closed-form wave-packet correctors through third order and the
//! total-order/total-phase term ledger.
//!
//! The leading packet is lambda^(1) = i A e^{j phi}; the second order adds
//! z^(2) = Im(B e^{j phi}) + (k/2)|A|^2 and
//! lambda^(2) = i B e^{j phi} + (k/2)|A|^2 k + (j/k) Im(A_Y e^{j phi}); the
//! third order is the full displayed formula for lambda^(3) (with the
//! externally injectable slow field M^(3), default absent).  All builders
//! return graded packet values so the residual harness can consume them
//! directly; realization at a given eps produces ordinary fields.

use crate::cfield::CField;
use crate::error::{Error, Result};
use crate::hnls::{hnls_second_time_derivative, hnls_time_derivative};
use crate::multiscale::{Graded, ScaleContext, Slot};
use num_complex::Complex64;

const JJ: Complex64 = Complex64::new(0.0, 1.0);

/// eps^1 A e^{j phi} with T-jets substituted from the envelope equation.
pub fn packet_a(ctx: ScaleContext, a: &CField) -> Result<Graded> {
    ctx.slow.same_as(&a.grid)?;
    let at = hnls_time_derivative(a, &ctx.params);
    let att = hnls_second_time_derivative(a, &ctx.params);
    let mut slot = Slot::zeros(ctx.slow, 3);
    slot.u[0] = a.clone();
    slot.u[1] = at;
    slot.u[2] = att;
    Ok(Graded::from_slot(ctx, 1, 1, slot))
}

/// eps^2 B e^{j phi}; the corrector equation's source has no closed form, so
/// the B jets are supplied by the caller (zero when absent).
pub fn packet_b(
    ctx: ScaleContext,
    b: &CField,
    bt: Option<&CField>,
    btt: Option<&CField>,
) -> Result<Graded> {
    ctx.slow.same_as(&b.grid)?;
    let mut slot = Slot::zeros(ctx.slow, 3);
    slot.u[0] = b.clone();
    if let Some(bt) = bt {
        slot.u[1] = bt.clone();
    }
    if let Some(btt) = btt {
        slot.u[2] = btt.clone();
    }
    Ok(Graded::from_slot(ctx, 2, 1, slot))
}

/// lambda^(1) = i A e^{j phi}.
pub fn build_lambda1(ga: &Graded) -> Graded {
    ga.lmul_i()
}

/// z^(1) = Im(A e^{j phi}).
pub fn build_z1(ga: &Graded) -> Graded {
    ga.im_part()
}

/// (z^(2), lambda^(2)).
pub fn build_order2(ga: &Graded, gb: &Graded) -> (Graded, Graded) {
    let k = ga.ctx.params.k;
    let mod_a_sq = ga.mul(&ga.conj());
    let z2 = gb.im_part().add(&mod_a_sq.scale(0.5 * k));
    let lambda2 = gb
        .lmul_i()
        .add(&mod_a_sq.scale(0.5 * k).rmul_k())
        .add(&ga.d_beta().im_part().scale_complex(JJ / k));
    (z2, lambda2)
}

/// lambda^(3), computed from the defining relation collected at third order:
/// the candidate (I + H~) z~ k is corrected so that its scalar part vanishes
/// and its k component equals z^(3) = M^(3) (the double-layer subtraction
/// removes exactly the scalar and excess-k content, as the second-order
/// update spells out).  The truncated multiscale transform is built from
/// lambda^(1) + lambda^(2); the A-only sector reproduces the displayed
/// third-order closed forms (checked in tests).  M^(3) has no closed form
/// and is injected externally (absent means zero).
pub fn build_lambda3(ga: &Graded, gb: &Graded, m3: Option<&Graded>) -> Result<Graded> {
    let ctx = ga.ctx;
    let lambda1 = build_lambda1(ga);
    let (z2, lambda2) = build_order2(ga, gb);
    let lambda12 = lambda1.add(&lambda2);
    let surf = crate::multiscale::SurfaceFields::from_lambda(&lambda12);

    let m3g = match m3 {
        Some(m3) => m3.clone(),
        None => Graded::zero(ctx),
    };
    let z = build_z1(ga).add(&z2).add(&m3g);
    let zk = z.rmul_k();
    let full = zk.add(&crate::multiscale::h_tilde(&zk, &surf)).power_slice(3);
    let out = full
        .sub(&full.re_part())
        .sub(&full.component(3).sub(&m3g).rmul_k());

    // the k component is pinned to z^(3) and the scalar part to zero
    let scalar = out.re_part();
    let scale = out.sup().max(1.0);
    if scalar.sup() > 1e-11 * scale {
        return Err(Error::NonFinite(format!(
            "lambda3 scalar part {} exceeds tolerance",
            scalar.sup()
        )));
    }
    Ok(out)
}

/// b~ through third order: b^(2) = -k omega |A|^2 i; b^(3) has no closed
/// form (hook accepts a caller-supplied graded value).
pub fn build_b_tilde(ga: &Graded, b3: Option<&Graded>) -> Graded {
    let p = ga.ctx.params;
    let b2 = ga.mul(&ga.conj()).rmul_i().scale(-p.k * p.omega);
    match b3 {
        Some(extra) => b2.add(extra),
        None => b2,
    }
}

/// A~ = 1 + eps^3 A^(3); A^(3) has no closed form (hook, default zero).
pub fn build_a_tilde(ctx: ScaleContext, a3: Option<&Graded>) -> Graded {
    let one = Graded::constant(ctx, Complex64::new(1.0, 0.0), 3);
    match a3 {
        Some(extra) => one.add(&extra.power_shift(3)),
        None => one,
    }
}

/// The assembled approximate solution through the requested order (1..=3).
pub struct ApproximateSolution {
    pub ctx: ScaleContext,
    pub orders: usize,
    /// lambda^(j) individually, 1-indexed.
    pub lambda_orders: Vec<Graded>,
    /// z^(j) individually, 1-indexed.
    pub z_orders: Vec<Graded>,
    pub lambda: Graded,
    /// z~ k as a graded value (the evolution unknown).
    pub z_k: Graded,
    pub b_tilde: Graded,
    pub a_tilde: Graded,
}

pub struct AssembleOptions<'a> {
    pub orders: usize,
    pub b: Option<&'a CField>,
    pub m3: Option<&'a Graded>,
    pub b3: Option<&'a Graded>,
    /// Sign of the (j/k) Im(A_Y e^{j phi}) term in lambda^(2): the two
    /// displayed second-order formulas disagree; the default follows the
    /// order-by-order update (+1) and the residual study reports both.
    pub lambda2_y_sign: f64,
}

impl Default for AssembleOptions<'_> {
    fn default() -> Self {
        AssembleOptions {
            orders: 3,
            b: None,
            m3: None,
            b3: None,
            lambda2_y_sign: 1.0,
        }
    }
}

pub fn assemble(
    ctx: ScaleContext,
    a: &CField,
    opts: &AssembleOptions,
) -> Result<ApproximateSolution> {
    if !(1..=3).contains(&opts.orders) {
        return Err(Error::invalid("orders", "must be 1, 2, or 3"));
    }
    let ga = packet_a(ctx, a)?;
    let zero = CField::zeros(ctx.slow);
    let gb = packet_b(ctx, opts.b.unwrap_or(&zero), None, None)?;

    let lambda1 = build_lambda1(&ga);
    let z1 = build_z1(&ga);
    let mut lambda_orders = vec![lambda1.clone()];
    let mut z_orders = vec![z1.clone()];
    let mut lambda = lambda1;
    let mut z = z1;

    if opts.orders >= 2 {
        let (z2, lambda2_plus) = build_order2(&ga, &gb);
        let lambda2 = if opts.lambda2_y_sign >= 0.0 {
            lambda2_plus
        } else {
            // flip only the (j/k) Im(A_Y e^{j phi}) term
            let y_term = ga.d_beta().im_part().scale_complex(JJ / ctx.params.k);
            lambda2_plus.sub(&y_term).sub(&y_term)
        };
        lambda = lambda.add(&lambda2);
        z = z.add(&z2);
        lambda_orders.push(lambda2);
        z_orders.push(z2);
    }
    if opts.orders >= 3 {
        let lambda3 = build_lambda3(&ga, &gb, opts.m3)?;
        let z3 = match opts.m3 {
            Some(m3) => m3.clone(),
            None => Graded::zero(ctx),
        };
        lambda = lambda.add(&lambda3);
        z = z.add(&z3);
        lambda_orders.push(lambda3);
        z_orders.push(z3);
    }

    Ok(ApproximateSolution {
        ctx,
        orders: opts.orders,
        lambda_orders,
        z_orders,
        lambda,
        z_k: z.rmul_k(),
        b_tilde: build_b_tilde(&ga, opts.b3),
        a_tilde: build_a_tilde(ctx, None),
    })
}

// ---------------------------------------------------------------------------
// Total order / total phase ledger
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    A,
    ABar,
    B,
    BBar,
    DX,
    DY,
    DT,
    R1,
    R2,
}

impl Generator {
    pub fn order(self) -> i32 {
        match self {
            Generator::R1 | Generator::R2 => 0,
            Generator::A | Generator::ABar | Generator::DX | Generator::DY => 1,
            Generator::B | Generator::BBar | Generator::DT => 2,
        }
    }

    pub fn phase(self) -> i32 {
        match self {
            Generator::A | Generator::B => 1,
            Generator::ABar | Generator::BBar => -1,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermSignature {
    pub factors: Vec<Generator>,
}

impl TermSignature {
    pub fn new(factors: Vec<Generator>) -> Self {
        TermSignature { factors }
    }
}

/// Total order: the monoid homomorphism summing per-generator orders.
pub fn term_order(t: &TermSignature) -> i32 {
    t.factors.iter().map(|g| g.order()).sum()
}

/// Total phase: the monoid homomorphism summing per-generator phases.
pub fn term_phase(t: &TermSignature) -> i32 {
    t.factors.iter().map(|g| g.phase()).sum()
}

#[derive(Debug, Clone)]
pub struct LedgerEntry {
    pub name: String,
    pub eps_power: i32,
    pub carrier_phase: i32,
    pub signature: TermSignature,
}

impl LedgerEntry {
    pub fn new(name: &str, eps_power: i32, carrier_phase: i32, factors: Vec<Generator>) -> Self {
        LedgerEntry {
            name: name.to_string(),
            eps_power,
            carrier_phase,
            signature: TermSignature::new(factors),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LedgerViolation {
    pub name: String,
    pub expected_order: i32,
    pub registered_power: i32,
    pub expected_phase: i32,
    pub registered_phase: i32,
}

#[derive(Debug, Clone, Default)]
pub struct LedgerReport {
    pub checked: usize,
    pub violations: Vec<LedgerViolation>,
}

impl LedgerReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// Plain-text table of the check.
    pub fn table(&self, entries: &[LedgerEntry]) -> String {
        let mut out = String::new();
        out.push_str("term                      power  phase  order(sig)  phase(sig)  status\n");
        for e in entries {
            let o = term_order(&e.signature);
            let p = term_phase(&e.signature);
            let ok = o == e.eps_power && p == e.carrier_phase;
            out.push_str(&format!(
                "{:<25} {:>5} {:>6} {:>11} {:>11}  {}\n",
                e.name,
                e.eps_power,
                e.carrier_phase,
                o,
                p,
                if ok { "ok" } else { "VIOLATION" }
            ));
        }
        out
    }
}

/// Verify that every registered term's eps power equals its total order and
/// its carrier multiple equals its total phase.
pub fn ledger_check(entries: &[LedgerEntry]) -> LedgerReport {
    let mut report = LedgerReport::default();
    for e in entries {
        report.checked += 1;
        let o = term_order(&e.signature);
        let p = term_phase(&e.signature);
        if o != e.eps_power || p != e.carrier_phase {
            report.violations.push(LedgerViolation {
                name: e.name.clone(),
                expected_order: o,
                registered_power: e.eps_power,
                expected_phase: p,
                registered_phase: e.carrier_phase,
            });
        }
    }
    report
}

/// The term registrations for the correctors this module builds.
pub fn standard_ledger() -> Vec<LedgerEntry> {
    use Generator::*;
    vec![
        LedgerEntry::new("lambda1", 1, 1, vec![A]),
        LedgerEntry::new("z1", 1, 1, vec![A]),
        LedgerEntry::new("z2-envelope", 2, 1, vec![B]),
        LedgerEntry::new("z2-mean", 2, 0, vec![A, ABar]),
        LedgerEntry::new("lambda2-envelope", 2, 1, vec![B]),
        LedgerEntry::new("lambda2-mean", 2, 0, vec![A, ABar]),
        LedgerEntry::new("lambda2-ay", 2, 1, vec![DY, A]),
        LedgerEntry::new("lambda3-by", 3, 1, vec![DY, B]),
        LedgerEntry::new("lambda3-abbar", 3, 0, vec![A, BBar]),
        LedgerEntry::new("lambda3-ayy", 3, 1, vec![DY, DY, A]),
        LedgerEntry::new("lambda3-axy", 3, 1, vec![DX, DY, A]),
        LedgerEntry::new("lambda3-cubic", 3, 1, vec![A, A, ABar]),
        LedgerEntry::new("lambda3-aax", 3, 0, vec![A, DX, ABar]),
        LedgerEntry::new("lambda3-aay", 3, 0, vec![A, DY, ABar]),
        LedgerEntry::new("lambda3-babar", 3, 0, vec![B, ABar]),
        LedgerEntry::new("btilde-2", 2, 0, vec![A, ABar]),
        LedgerEntry::new("m2", 2, 0, vec![A, ABar]),
    ]
}
