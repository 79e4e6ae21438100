//! Plain-text run configuration: `key = value` lines with optional
//! per-command `[section]` overrides.  Flags on the command line only
//! override config keys, never introduce new behavior.

use crate::error::{Error, Result};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    RunHnls,
    BuildPacket,
    VerifyDispersion,
    VerifyExpansion,
    VerifyNormalForm,
    SweepResidual,
    CheckLedger,
}

impl Command {
    pub fn parse(s: &str) -> Option<Command> {
        match s {
            "run-hnls" => Some(Command::RunHnls),
            "build-packet" => Some(Command::BuildPacket),
            "verify-dispersion" => Some(Command::VerifyDispersion),
            "verify-expansion" => Some(Command::VerifyExpansion),
            "verify-normal-form" => Some(Command::VerifyNormalForm),
            "sweep-residual" => Some(Command::SweepResidual),
            "check-ledger" => Some(Command::CheckLedger),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::RunHnls => "run-hnls",
            Command::BuildPacket => "build-packet",
            Command::VerifyDispersion => "verify-dispersion",
            Command::VerifyExpansion => "verify-expansion",
            Command::VerifyNormalForm => "verify-normal-form",
            Command::SweepResidual => "sweep-residual",
            Command::CheckLedger => "check-ledger",
        }
    }

    pub fn all() -> [Command; 7] {
        [
            Command::RunHnls,
            Command::BuildPacket,
            Command::VerifyDispersion,
            Command::VerifyExpansion,
            Command::VerifyNormalForm,
            Command::SweepResidual,
            Command::CheckLedger,
        ]
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub k: f64,
    pub eps_list: Vec<f64>,
    pub n_fast: usize,
    pub n_slow: usize,
    /// Slow domain length in units of 2*pi.
    pub len_slow: f64,
    pub sobolev_s: f64,
    pub dt: f64,
    pub t_final: f64,
    pub seed: u64,
    pub outdir: String,
    pub orders: usize,
    pub amplitude: f64,
    pub sigma: f64,
    pub delta: f64,
}

impl RunConfig {
    fn defaults(command: Command) -> Self {
        RunConfig {
            command,
            k: 1.0,
            eps_list: vec![0.2, 0.1, 0.05],
            n_fast: 256,
            n_slow: 64,
            len_slow: 1.6,
            sobolev_s: 2.0,
            dt: 1e-3,
            t_final: 1.0,
            seed: 1,
            outdir: "out".to_string(),
            orders: 3,
            amplitude: 0.75,
            sigma: 0.6,
            delta: 0.5,
        }
    }

    /// Fast domain length (units of 2*pi) at a given eps.
    pub fn len_fast(&self, eps: f64) -> f64 {
        self.len_slow / eps
    }

    /// Carrier/grid commensurability: k must sit on the fast frequency
    /// lattice derived from every eps in the list.
    pub fn validate(&self) -> Result<()> {
        if self.k <= 0.0 {
            return Err(Error::invalid("k", "must be positive"));
        }
        if self.eps_list.is_empty() {
            return Err(Error::MissingField("eps".into()));
        }
        for &eps in &self.eps_list {
            if !(0.0 < eps && eps < 1.0) {
                return Err(Error::invalid("eps", format!("{eps} outside (0, 1)")));
            }
            let idx = self.k * self.len_fast(eps);
            if (idx - idx.round()).abs() > 1e-9 * (1.0 + idx.abs()) {
                return Err(Error::Incommensurable(format!(
                    "k = {} is not a grid frequency at eps = {eps} (k * len_fast/2pi = {idx})",
                    self.k
                )));
            }
            // packet assembly needs the third carrier harmonic plus the slow
            // band inside the fast Nyquist range
            if matches!(self.command, Command::SweepResidual | Command::BuildPacket) {
                let need = 3 * idx.round() as i64 + (self.n_slow as i64) / 2;
                if need > (self.n_fast as i64) / 2 {
                    return Err(Error::Incommensurable(format!(
                        "fast grid too small at eps = {eps}: third harmonic band reaches index {need} but n_fast/2 = {}",
                        self.n_fast / 2
                    )));
                }
            }
        }
        for n in [self.n_fast, self.n_slow] {
            if !n.is_power_of_two() || n < 4 {
                return Err(Error::NotPowerOfTwo(n));
            }
        }
        if self.n_slow > self.n_fast {
            return Err(Error::Incommensurable(
                "slow grid larger than fast grid".into(),
            ));
        }
        if !(1..=3).contains(&self.orders) {
            return Err(Error::invalid("orders", "must be 1, 2, or 3"));
        }
        if self.dt <= 0.0 || self.t_final <= 0.0 {
            return Err(Error::invalid("dt", "time parameters must be positive"));
        }
        Ok(())
    }
}

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64> {
    value.trim().parse::<f64>().map_err(|e| Error::Parse {
        line,
        field: key.to_string(),
        message: e.to_string(),
    })
}

fn parse_usize(line: usize, key: &str, value: &str) -> Result<usize> {
    value.trim().parse::<usize>().map_err(|e| Error::Parse {
        line,
        field: key.to_string(),
        message: e.to_string(),
    })
}

const KNOWN_KEYS: &[&str] = &[
    "command", "k", "eps", "eps_list", "n_fast", "n_slow", "len_slow", "len_fast", "s", "dt",
    "t_final", "seed", "outdir", "orders", "amplitude", "sigma", "delta",
];

/// Parse the config text.  Keys outside a section apply to every command;
/// keys inside `[command-name]` apply only when that command runs.  The
/// command itself comes from the `command` key unless `force_command` is
/// given (the CLI positional argument).
pub fn parse_config_with(text: &str, force_command: Option<Command>) -> Result<RunConfig> {
    // first pass: collect (line, section, key, value)
    let mut entries: Vec<(usize, Option<String>, String, String)> = Vec::new();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or(Error::Parse {
                line: line_no,
                field: "section".into(),
                message: "unterminated section header".into(),
            })?;
            if Command::parse(name.trim()).is_none() {
                return Err(Error::Parse {
                    line: line_no,
                    field: "section".into(),
                    message: format!("unknown command section `{}`", name.trim()),
                });
            }
            section = Some(name.trim().to_string());
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(Error::Parse {
            line: line_no,
            field: "line".into(),
            message: "expected `key = value`".into(),
        })?;
        let key = key.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::Parse {
                line: line_no,
                field: key,
                message: "unknown key".into(),
            });
        }
        entries.push((line_no, section.clone(), key, value.trim().to_string()));
    }

    // resolve the command
    let mut command = force_command;
    for (line_no, sec, key, value) in &entries {
        if key == "command" && sec.is_none() {
            let c = Command::parse(value).ok_or(Error::Parse {
                line: *line_no,
                field: "command".into(),
                message: format!("unknown command `{value}`"),
            })?;
            if command.is_none() {
                command = Some(c);
            }
        }
    }
    let command = command.ok_or(Error::MissingField("command".into()))?;

    let mut cfg = RunConfig::defaults(command);
    let apply = |line_no: usize, key: &str, value: &str, cfg: &mut RunConfig| -> Result<()> {
        match key {
            "command" => {}
            "k" => cfg.k = parse_f64(line_no, key, value)?,
            "eps" => cfg.eps_list = vec![parse_f64(line_no, key, value)?],
            "eps_list" => {
                let mut list = Vec::new();
                for part in value.split(',') {
                    list.push(parse_f64(line_no, key, part)?);
                }
                cfg.eps_list = list;
            }
            "n_fast" => cfg.n_fast = parse_usize(line_no, key, value)?,
            "n_slow" => cfg.n_slow = parse_usize(line_no, key, value)?,
            "len_slow" => cfg.len_slow = parse_f64(line_no, key, value)?,
            "len_fast" => {
                // convenience: fixes the slow length through the first eps
                let lf = parse_f64(line_no, key, value)?;
                let eps = cfg.eps_list.first().copied().unwrap_or(0.1);
                cfg.len_slow = lf * eps;
            }
            "s" => cfg.sobolev_s = parse_f64(line_no, key, value)?,
            "dt" => cfg.dt = parse_f64(line_no, key, value)?,
            "t_final" => cfg.t_final = parse_f64(line_no, key, value)?,
            "seed" => {
                cfg.seed = value.parse::<u64>().map_err(|e| Error::Parse {
                    line: line_no,
                    field: "seed".into(),
                    message: e.to_string(),
                })?
            }
            "outdir" => cfg.outdir = value.to_string(),
            "orders" => cfg.orders = parse_usize(line_no, key, value)?,
            "amplitude" => cfg.amplitude = parse_f64(line_no, key, value)?,
            "sigma" => cfg.sigma = parse_f64(line_no, key, value)?,
            "delta" => cfg.delta = parse_f64(line_no, key, value)?,
            _ => unreachable!("key filtered above"),
        }
        Ok(())
    };

    // global keys first, then the matching section
    for (line_no, sec, key, value) in &entries {
        if sec.is_none() {
            apply(*line_no, key, value, &mut cfg)?;
        }
    }
    for (line_no, sec, key, value) in &entries {
        if sec.as_deref() == Some(command.name()) {
            apply(*line_no, key, value, &mut cfg)?;
        }
    }
    Ok(cfg)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, None)
}

/// Apply `--set key=value` overrides after parsing.
pub fn apply_overrides(cfg: &mut RunConfig, overrides: &[String]) -> Result<()> {
    let joined: String = overrides
        .iter()
        .map(|s| s.replace('=', " = "))
        .collect::<Vec<_>>()
        .join("\n");
    let text = format!("command = {}\n{}", cfg.command.name(), joined);
    let parsed = parse_config(&text)?;
    let mut merged = parsed;
    // keys not mentioned keep their current values: re-apply by diffing
    // against defaults
    let defaults = RunConfig::defaults(cfg.command);
    macro_rules! keep {
        ($field:ident) => {
            if merged.$field == defaults.$field {
                merged.$field = cfg.$field.clone();
            }
        };
    }
    keep!(k);
    keep!(eps_list);
    keep!(n_fast);
    keep!(n_slow);
    keep!(len_slow);
    keep!(sobolev_s);
    keep!(dt);
    keep!(t_final);
    keep!(seed);
    keep!(outdir);
    keep!(orders);
    keep!(amplitude);
    keep!(sigma);
    keep!(delta);
    *cfg = merged;
    Ok(())
}

/// Known keys, for help text.
pub fn known_keys() -> &'static [&'static str] {
    KNOWN_KEYS
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfigSummary;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_requires_command() {
        match parse_config("") {
            Err(Error::MissingField(f)) => assert_eq!(f, "command"),
            other => panic!("expected missing command, got {other:?}"),
        }
    }

    #[test]
    fn defaults_and_grid_frequency_check() {
        let cfg = parse_config("command = verify-dispersion\n").unwrap();
        assert_eq!(cfg.k, 1.0);
        assert_eq!(cfg.n_fast, 256);
        assert_eq!(cfg.n_slow, 64);
        assert_eq!(cfg.eps_list, vec![0.2, 0.1, 0.05]);
        assert!((cfg.sobolev_s - 2.0).abs() < 1e-15);
        cfg.validate().unwrap();

        // k = 0.5 with len_fast = 64 (x 2 pi): 0.5 * 64 = 32 on the lattice
        let cfg2 = parse_config("command = verify-dispersion\neps = 0.1\nlen_fast = 64\nk = 0.5\n")
            .unwrap();
        cfg2.validate().unwrap();
        assert!((cfg2.len_slow - 6.4).abs() < 1e-12);

        // eps = 0.3 with defaults: 1.6/0.3 not an integer
        let cfg3 = parse_config("command = verify-dispersion\neps = 0.3\n").unwrap();
        assert!(matches!(cfg3.validate(), Err(Error::Incommensurable(_))));
    }

    #[test]
    fn line_precise_errors() {
        let err = parse_config("command = run-hnls\nbogus = 3\n").unwrap_err();
        match err {
            Error::Parse { line, field, .. } => {
                assert_eq!(line, 2);
                assert_eq!(field, "bogus");
            }
            other => panic!("unexpected {other:?}"),
        }
        let err2 = parse_config("command = run-hnls\nk 3\n").unwrap_err();
        assert!(matches!(err2, Error::Parse { line: 2, .. }));
        let err3 = parse_config("command = run-hnls\nk = abc\n").unwrap_err();
        assert!(matches!(err3, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn sections_apply_per_command() {
        let text = "command = sweep-residual\nk = 1\n[sweep-residual]\norders = 1\n[run-hnls]\ndt = 0.5\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.orders, 1);
        assert!((cfg.dt - 1e-3).abs() < 1e-15, "other sections ignored");

        let err = parse_config("command = run-hnls\n[nonsense]\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn overrides_change_only_named_keys() {
        let mut cfg = parse_config("command = sweep-residual\nsigma = 0.7\n").unwrap();
        apply_overrides(&mut cfg, &["k=2".to_string(), "orders=2".to_string()]).unwrap();
        assert_eq!(cfg.k, 2.0);
        assert_eq!(cfg.orders, 2);
        assert!((cfg.sigma - 0.7).abs() < 1e-15);
    }

    #[test]
    fn comments_and_whitespace() {
        let cfg = parse_config("# a comment\n  command = check-ledger  # trailing\n\n").unwrap();
        assert_eq!(cfg.command, Command::CheckLedger);
    }
}
