//! Command runners: each command produces a CSV table, a gnuplot script
//! referencing it, and a machine-readable summary (JSON lines).  Identical
//! (config, seed) pairs produce byte-identical CSV content.

use crate::cfield::CField;
use crate::config::{Command, RunConfig};
use crate::error::Result;
use crate::expansion::{h0_truncation_error_with, Packet, SignConvention};
use crate::grid::Grid2;
use crate::hnls::{evolve_a, hamiltonian, mass, Envelope, PacketParams};
use crate::multiscale::{realize_spectrum, spectrum_norms, ScaleContext};
use crate::normal_form::{
    apply_bilinear, denominator_inequalities, derivative_gain_check, is_resonant,
    random_frequency_pairs, KernelVariant, NormalFormKernel,
};
use crate::serialize::{field_to_binary, field_to_csv, Checkpoint};
use crate::spectral::ifft;
use crate::verify::{
    dispersion_residual, fit_slope, residual_sweep, ResidualOptions, TimeFrame,
};
use crate::wavepacket::{assemble, ledger_check, standard_ledger, AssembleOptions};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub check: String,
    pub value: f64,
    pub threshold: f64,
    /// "<=" or ">=" against the threshold.
    pub direction: String,
    pub pass: bool,
}

impl CheckResult {
    fn le(check: &str, value: f64, threshold: f64) -> Self {
        CheckResult {
            check: check.into(),
            value,
            threshold,
            direction: "<=".into(),
            pass: value <= threshold,
        }
    }

    fn ge(check: &str, value: f64, threshold: f64) -> Self {
        CheckResult {
            check: check.into(),
            value,
            threshold,
            direction: ">=".into(),
            pass: value >= threshold,
        }
    }
}

#[derive(Debug)]
pub struct RunArtifacts {
    pub command: Command,
    pub csv: String,
    pub plot: String,
    pub checks: Vec<CheckResult>,
    pub csv_path: Option<PathBuf>,
    pub extra_files: Vec<PathBuf>,
}

impl RunArtifacts {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn summary_jsonl(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&serde_json::to_string(c).expect("serializable"));
            out.push('\n');
        }
        out
    }
}

fn fmt_f(x: f64) -> String {
    format!("{x:.17e}")
}

fn gaussian_envelope(grid: Grid2, amplitude: f64, sigma: f64) -> CField {
    CField::from_fn(grid, |x, y| {
        let dx = x - 0.5 * grid.len_alpha;
        let dy = y - 0.5 * grid.len_beta;
        Complex64::new(
            amplitude * (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp(),
            0.0,
        )
    })
}

fn ctx_for(cfg: &RunConfig) -> Result<(ScaleContext, f64)> {
    let eps = *cfg.eps_list.first().expect("validated nonempty");
    let ctx = ScaleContext {
        slow: Grid2::square(cfg.n_slow, cfg.len_slow)?,
        params: PacketParams::new(cfg.k, eps)?,
    };
    Ok((ctx, eps))
}

/// Execute the configured command, returning the artifacts in memory; the
/// binary writes them to disk.
pub fn run(cfg: &RunConfig) -> Result<RunArtifacts> {
    cfg.validate()?;
    match cfg.command {
        Command::VerifyDispersion => run_verify_dispersion(cfg),
        Command::VerifyExpansion => run_verify_expansion(cfg),
        Command::VerifyNormalForm => run_verify_normal_form(cfg),
        Command::RunHnls => run_hnls_command(cfg),
        Command::BuildPacket => run_build_packet(cfg),
        Command::SweepResidual => run_sweep_residual(cfg),
        Command::CheckLedger => run_check_ledger(cfg),
    }
}

fn plot_script(csv_name: &str, title: &str, logscale: bool, cols: &[(usize, &str)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "set datafile separator ','");
    let _ = writeln!(out, "set key top left");
    let _ = writeln!(out, "set title '{title}'");
    if logscale {
        let _ = writeln!(out, "set logscale xy");
    }
    let mut plots = Vec::new();
    for (col, name) in cols {
        plots.push(format!(
            "'{csv_name}' using 1:{col} with linespoints title '{name}'"
        ));
    }
    let _ = writeln!(out, "plot {}", plots.join(", \\\n     "));
    out
}

fn run_verify_dispersion(cfg: &RunConfig) -> Result<RunArtifacts> {
    let (ctx, eps) = ctx_for(cfg)?;
    let a = gaussian_envelope(ctx.slow, cfg.amplitude, cfg.sigma);
    let res = dispersion_residual(&a, ctx, eps, cfg.n_fast)?;
    let trav = crate::verify::group_velocity_residual(
        &a,
        ctx,
        TimeFrame::Traveling,
        eps,
        cfg.n_fast,
    )?;
    let mut csv = String::from("check,eps,k,value,threshold\n");
    let _ = writeln!(
        csv,
        "dispersion-relation-residual,{},{},{},{}",
        fmt_f(eps),
        fmt_f(cfg.k),
        fmt_f(res),
        fmt_f(1e-10)
    );
    let _ = writeln!(
        csv,
        "group-velocity-frame-residual,{},{},{},{}",
        fmt_f(eps),
        fmt_f(cfg.k),
        fmt_f(trav),
        fmt_f(1e-11)
    );
    let checks = vec![
        CheckResult::le("dispersion-relation-residual", res, 1e-10),
        CheckResult::le("group-velocity-frame-residual", trav, 1e-11),
    ];
    Ok(RunArtifacts {
        command: cfg.command,
        plot: plot_script(
            &format!("{}.csv", cfg.command.name()),
            "dispersion residuals",
            false,
            &[(4, "residual")],
        ),
        csv,
        checks,
        csv_path: None,
        extra_files: Vec::new(),
    })
}

fn run_verify_expansion(cfg: &RunConfig) -> Result<RunArtifacts> {
    let slow = Grid2::square(cfg.n_slow, cfg.len_slow)?;
    let env = gaussian_envelope(slow, cfg.amplitude, cfg.sigma);
    let mut csv = String::from(
        "eps,truncation_error_plus,truncation_error_alternating\n",
    );
    let mut errs_plus = Vec::new();
    let mut errs_alt = Vec::new();
    for &eps in &cfg.eps_list {
        let pk = Packet::new(env.clone(), cfg.k, eps)?;
        let fast = pk.fast_grid(cfg.n_fast)?;
        let ep = h0_truncation_error_with(&pk, cfg.sobolev_s, fast, SignConvention::AllPlus)?;
        let ea = h0_truncation_error_with(&pk, cfg.sobolev_s, fast, SignConvention::Alternating)?;
        let _ = writeln!(csv, "{},{},{}", fmt_f(eps), fmt_f(ep), fmt_f(ea));
        errs_plus.push(ep);
        errs_alt.push(ea);
    }
    let slope_plus = fit_slope(&cfg.eps_list, &errs_plus);
    let slope_alt = fit_slope(&cfg.eps_list, &errs_alt);
    let _ = writeln!(csv, "# check=hilbert-expansion-truncation");
    let _ = writeln!(csv, "# sign_convention=all-plus");
    let _ = writeln!(csv, "# slope_plus={}", fmt_f(slope_plus));
    let _ = writeln!(csv, "# slope_alternating={}", fmt_f(slope_alt));
    let checks = vec![
        CheckResult::ge("hilbert-expansion-truncation-slope", slope_plus, 2.7),
        CheckResult::le(
            "hilbert-expansion-error-ratio",
            errs_plus[1] / errs_plus[0],
            0.5,
        ),
    ];
    Ok(RunArtifacts {
        command: cfg.command,
        plot: plot_script(
            &format!("{}.csv", cfg.command.name()),
            "expansion truncation error",
            true,
            &[(2, "all-plus"), (3, "alternating")],
        ),
        csv,
        checks,
        csv_path: None,
        extra_files: Vec::new(),
    })
}

fn run_verify_normal_form(cfg: &RunConfig) -> Result<RunArtifacts> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let samples = random_frequency_pairs(100_000, &mut rng);
    let ineq = denominator_inequalities(&samples);
    let gain = derivative_gain_check(cfg.k, 100_000, &mut rng);

    // back-substitution over admissible samples
    let kernel = NormalFormKernel::new(cfg.k, KernelVariant::Particular1)?;
    let kernel7 = NormalFormKernel::new(cfg.k, KernelVariant::Particular7 { l: 1 })?;
    let mut max_residual = 0f64;
    let mut checked = 0usize;
    while checked < 100_000 {
        let r = 10f64.powf(rng.gen_range(-1.0..2.5));
        let th = rng.gen_range(0.0..std::f64::consts::TAU);
        let xip = (r * th.cos(), r * th.sin());
        if is_resonant(cfg.k, xip) {
            continue;
        }
        max_residual = max_residual.max(kernel.back_substitution_residual(xip)?);
        if r >= 4.0 * cfg.k {
            max_residual = max_residual.max(kernel7.back_substitution_residual(xip)?);
        }
        checked += 1;
    }

    // bilinear eps slope with q = 0
    let slow = Grid2::square(32, cfg.len_slow)?;
    let s_env = gaussian_envelope(slow, 0.7, cfg.sigma.min(0.6));
    let mut norms = Vec::new();
    let eps_pair = [cfg.eps_list[0], cfg.eps_list[1.min(cfg.eps_list.len() - 1)]];
    for &eps in &eps_pair {
        let fast = Grid2::new(128, 128, slow.len_alpha / eps, slow.len_beta / eps)?;
        let mut theta = crate::spectral::QuaternionField::zeros(fast);
        let mut trng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
        for _ in 0..12 {
            let m1 = trng.gen_range(2..8) as f64 * fast.dxi1();
            let m2 = trng.gen_range(-6..6) as f64 * fast.dxi1();
            let amp = trng.gen_range(0.2..1.0);
            theta = theta
                .add(&crate::spectral::QuaternionField::from_fn(fast, |a, b| {
                    crate::quat::exp_j(m1 * a + m2 * b).scale(amp)
                }))
                .unwrap();
        }
        let theta = theta.scale(1.0 / theta.l2_norm());
        norms.push(apply_bilinear(&s_env, &theta, &kernel, eps)?.l2_norm());
    }
    let bilinear_slope = (norms[0] / norms[1]).ln() / (eps_pair[0] / eps_pair[1]).ln();

    let mut csv = String::from("check,value,threshold\n");
    let rows = [
        ("normal-form-back-substitution", max_residual, 1e-12),
        (
            "denominator-triangle-violations",
            ineq.violations_b as f64,
            0.0,
        ),
        (
            "denominator-three-term-violations",
            ineq.violations_c as f64,
            0.0,
        ),
        ("denominator-two-sided-constant", ineq.fitted_c0, 16.0),
        ("derivative-gain-violations", gain.violations as f64, 0.0),
        ("derivative-gain-max-ratio", gain.max_ratio, 1.0),
        ("bilinear-eps-slope", bilinear_slope, 0.9),
    ];
    for (name, value, thr) in rows {
        let _ = writeln!(csv, "{name},{},{}", fmt_f(value), fmt_f(thr));
    }
    let checks = vec![
        CheckResult::le("normal-form-back-substitution", max_residual, 1e-12),
        CheckResult::le(
            "denominator-triangle-violations",
            ineq.violations_b as f64,
            0.0,
        ),
        CheckResult::le(
            "denominator-three-term-violations",
            ineq.violations_c as f64,
            0.0,
        ),
        CheckResult::le("denominator-two-sided-constant", ineq.fitted_c0, 16.0),
        CheckResult::le("derivative-gain-violations", gain.violations as f64, 0.0),
        CheckResult::ge("bilinear-eps-slope", bilinear_slope, 0.9),
    ];
    Ok(RunArtifacts {
        command: cfg.command,
        plot: plot_script(
            &format!("{}.csv", cfg.command.name()),
            "normal-form checks",
            false,
            &[(2, "value")],
        ),
        csv,
        checks,
        csv_path: None,
        extra_files: Vec::new(),
    })
}

fn run_hnls_command(cfg: &RunConfig) -> Result<RunArtifacts> {
    let slow = Grid2::square(cfg.n_slow, cfg.len_slow)?;
    let p = PacketParams::new(cfg.k, cfg.eps_list[0])?;
    let a0 = Envelope::new(
        gaussian_envelope(slow, cfg.amplitude, cfg.sigma).band_limit(2.0 / 3.0),
    );
    let m0 = mass(&a0);
    let h0 = hamiltonian(&a0, &p);
    let mut csv = String::from("T,mass,hamiltonian,mass_drift,hamiltonian_drift\n");
    let _ = writeln!(csv, "{},{},{},{},{}", fmt_f(0.0), fmt_f(m0), fmt_f(h0), fmt_f(0.0), fmt_f(0.0));
    let snapshots = 4usize;
    let mut state = a0.clone();
    let mut max_mass_drift = 0f64;
    let mut max_h_drift = 0f64;
    for snap in 1..=snapshots {
        let t_target = cfg.t_final * snap as f64 / snapshots as f64;
        let step = t_target - state.time;
        state = evolve_a(&state, &p, step, cfg.dt)?;
        let m = mass(&state);
        let h = hamiltonian(&state, &p);
        let dm = ((m - m0) / m0).abs();
        let dh = ((h - h0) / h0.abs().max(1e-300)).abs();
        max_mass_drift = max_mass_drift.max(dm);
        max_h_drift = max_h_drift.max(dh);
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            fmt_f(state.time),
            fmt_f(m),
            fmt_f(h),
            fmt_f(dm),
            fmt_f(dh)
        );
    }
    let _ = writeln!(csv, "# check=envelope-conservation");
    let checks = vec![
        CheckResult::le("envelope-mass-drift", max_mass_drift, 1e-8),
        CheckResult::le("envelope-hamiltonian-drift", max_h_drift, 1e-6),
    ];
    Ok(RunArtifacts {
        command: cfg.command,
        plot: plot_script(
            &format!("{}.csv", cfg.command.name()),
            "envelope conservation",
            false,
            &[(4, "mass drift"), (5, "hamiltonian drift")],
        ),
        csv,
        checks,
        csv_path: None,
        extra_files: Vec::new(),
    })
}

fn run_build_packet(cfg: &RunConfig) -> Result<RunArtifacts> {
    let (ctx, eps) = ctx_for(cfg)?;
    let a = gaussian_envelope(ctx.slow, cfg.amplitude, cfg.sigma);
    let sol = assemble(
        ctx,
        &a,
        &AssembleOptions {
            orders: cfg.orders,
            ..Default::default()
        },
    )?;
    let fast = Grid2::new(
        cfg.n_fast,
        cfg.n_fast,
        ctx.slow.len_alpha / eps,
        ctx.slow.len_beta / eps,
    )?;
    let mut csv = String::from("field,eps,l2_norm,hs_norm\n");
    let mut scalar_sup = 0f64;
    for (j, lam) in sol.lambda_orders.iter().enumerate() {
        let s = realize_spectrum(lam, eps, fast, 0)?;
        let (l2, hs) = spectrum_norms(&s, cfg.sobolev_s);
        let _ = writeln!(csv, "lambda{},{},{},{}", j + 1, fmt_f(eps), fmt_f(l2), fmt_f(hs));
        scalar_sup = scalar_sup.max(lam.re_part().sup_value());
    }
    let sb = realize_spectrum(&sol.b_tilde, eps, fast, 0)?;
    let (bl2, bhs) = spectrum_norms(&sb, cfg.sobolev_s);
    let _ = writeln!(csv, "btilde,{},{},{}", fmt_f(eps), fmt_f(bl2), fmt_f(bhs));
    let _ = writeln!(csv, "# check=packet-assembly");
    let lambda_scale = {
        let s = realize_spectrum(&sol.lambda, eps, fast, 0)?;
        spectrum_norms(&s, 0.0).0
    };
    let checks = vec![CheckResult::le(
        "packet-scalar-part",
        scalar_sup,
        1e-11 * sol.lambda.sup_value().max(1.0),
    )];
    let _ = lambda_scale;
    // snapshot export of the realized packet
    let lam_field = ifft(&realize_spectrum(&sol.lambda, eps, fast, 0)?);
    let ck = Checkpoint {
        time: 0.0,
        field: lam_field.clone(),
        coefficients: vec![
            ("k".into(), cfg.k),
            ("eps".into(), eps),
            ("orders".into(), cfg.orders as f64),
        ],
    };
    let mut extra = Vec::new();
    let outdir = Path::new(&cfg.outdir);
    std::fs::create_dir_all(outdir)?;
    let ck_path = outdir.join("packet-snapshot.ckpt");
    std::fs::write(&ck_path, ck.encode())?;
    extra.push(ck_path);
    let bin_path = outdir.join("packet-surface.bin");
    std::fs::write(&bin_path, field_to_binary(&lam_field))?;
    extra.push(bin_path);
    let csv_field_path = outdir.join("packet-surface.csv");
    std::fs::write(&csv_field_path, field_to_csv(&lam_field))?;
    extra.push(csv_field_path);
    // ledger table
    let entries = standard_ledger();
    let report = ledger_check(&entries);
    let table_path = outdir.join("packet-ledger.txt");
    std::fs::write(&table_path, report.table(&entries))?;
    extra.push(table_path);

    Ok(RunArtifacts {
        command: cfg.command,
        plot: plot_script(
            &format!("{}.csv", cfg.command.name()),
            "corrector norms",
            false,
            &[(3, "L2"), (4, "Hs")],
        ),
        csv,
        checks,
        csv_path: None,
        extra_files: extra,
    })
}

fn run_sweep_residual(cfg: &RunConfig) -> Result<RunArtifacts> {
    let (ctx, _) = ctx_for(cfg)?;
    let a = gaussian_envelope(ctx.slow, cfg.amplitude, cfg.sigma);
    let opts = ResidualOptions {
        orders: cfg.orders,
        sobolev_s: cfg.sobolev_s,
        n_fast: cfg.n_fast,
        ..Default::default()
    };
    let study = residual_sweep(ctx, &a, &cfg.eps_list, &opts)?;
    let mut csv = String::from("eps,L2_residual,Hs_residual,projected_residual\n");
    for (i, &eps) in study.eps_list.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            fmt_f(eps),
            fmt_f(study.l2_residual[i]),
            fmt_f(study.hs_residual[i]),
            fmt_f(study.projected_residual[i])
        );
    }
    let _ = writeln!(csv, "# check=residual-convergence");
    let _ = writeln!(csv, "# orders={}", study.orders);
    let _ = writeln!(csv, "# slope_l2={}", fmt_f(study.slope_l2));
    let _ = writeln!(csv, "# slope_hs={}", fmt_f(study.slope_hs));
    let _ = writeln!(csv, "# slope_projected={}", fmt_f(study.slope_projected));
    for (p, sup) in &study.low_order_sups {
        let _ = writeln!(csv, "# order{p}_slot_sup={}", fmt_f(*sup));
    }
    let _ = writeln!(
        csv,
        "# lambda2_y_sign_study_plus={}",
        fmt_f(study.lambda2_sign_study.0)
    );
    let _ = writeln!(
        csv,
        "# lambda2_y_sign_study_minus={}",
        fmt_f(study.lambda2_sign_study.1)
    );
    for omitted in &study.omitted {
        let _ = writeln!(csv, "# omitted={omitted}");
    }
    let checks = if cfg.orders >= 3 {
        vec![
            CheckResult::ge("residual-slope-hs", study.slope_hs, 3.0),
            CheckResult::ge("residual-slope-projected", study.slope_projected, 3.5),
        ]
    } else {
        vec![CheckResult::le("residual-slope-hs-ablated", study.slope_hs, 2.5)]
    };
    Ok(RunArtifacts {
        command: cfg.command,
        plot: plot_script(
            &format!("{}.csv", cfg.command.name()),
            "residual convergence",
            true,
            &[(2, "L2"), (3, "Hs"), (4, "projected")],
        ),
        csv,
        checks,
        csv_path: None,
        extra_files: Vec::new(),
    })
}

fn run_check_ledger(cfg: &RunConfig) -> Result<RunArtifacts> {
    let entries = standard_ledger();
    let report = ledger_check(&entries);
    let mut csv = String::from("term,power,phase,order_sig,phase_sig,status\n");
    for e in &entries {
        let o = crate::wavepacket::term_order(&e.signature);
        let p = crate::wavepacket::term_phase(&e.signature);
        let ok = o == e.eps_power && p == e.carrier_phase;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            e.name,
            e.eps_power,
            e.carrier_phase,
            o,
            p,
            if ok { "ok" } else { "violation" }
        );
    }
    let _ = writeln!(csv, "# check=term-ledger");
    let checks = vec![CheckResult::le(
        "ledger-violations",
        report.violations.len() as f64,
        0.0,
    )];
    Ok(RunArtifacts {
        command: cfg.command,
        plot: plot_script(
            &format!("{}.csv", cfg.command.name()),
            "term ledger",
            false,
            &[(2, "power")],
        ),
        csv,
        checks,
        csv_path: None,
        extra_files: Vec::new(),
    })
}

/// Write the artifacts into `outdir` with a timestamped basename; returns
/// the CSV path.
pub fn write_artifacts(cfg: &RunConfig, artifacts: &mut RunArtifacts, timestamp: &str) -> Result<PathBuf> {
    let outdir = Path::new(&cfg.outdir);
    std::fs::create_dir_all(outdir)?;
    let base = format!("{}-{}", cfg.command.name(), timestamp);
    let csv_path = outdir.join(format!("{base}.csv"));
    std::fs::write(&csv_path, &artifacts.csv)?;
    let plt_path = outdir.join(format!("{base}.plt"));
    // the plot references the actual CSV name
    let plot = artifacts
        .plot
        .replace(&format!("{}.csv", cfg.command.name()), &format!("{base}.csv"));
    std::fs::write(&plt_path, plot)?;
    let summary_path = outdir.join("summary.jsonl");
    std::fs::write(&summary_path, artifacts.summary_jsonl())?;
    artifacts.csv_path = Some(csv_path.clone());
    Ok(csv_path)
}
