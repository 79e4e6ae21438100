use deepwave::cli::{run, write_artifacts};
use deepwave::config::{apply_overrides, parse_config_with, Command};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

fn usage() -> String {
    let cmds: Vec<&str> = Command::all().iter().map(|c| c.name()).collect();
    format!(
        "usage: deepwave <command> [--config <path>] [--set key=value ...]\n\
         commands: {}\n\
         config keys: {}\n",
        cmds.join(", "),
        deepwave::config::known_keys().join(", ")
    )
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--help" || a == "-h") || args.is_empty() {
        print!("{}", usage());
        return if args.is_empty() {
            ExitCode::FAILURE
        } else {
            ExitCode::SUCCESS
        };
    }

    let mut command = None;
    let mut config_path = None;
    let mut overrides = Vec::new();
    let mut i = 0;
    while i < args.len() {
        match args[i].as_str() {
            "--config" => {
                if i + 1 >= args.len() {
                    eprintln!("--config requires a path");
                    return ExitCode::FAILURE;
                }
                config_path = Some(args[i + 1].clone());
                i += 2;
            }
            "--set" => {
                if i + 1 >= args.len() {
                    eprintln!("--set requires key=value");
                    return ExitCode::FAILURE;
                }
                overrides.push(args[i + 1].clone());
                i += 2;
            }
            other => {
                match Command::parse(other) {
                    Some(c) if command.is_none() => command = Some(c),
                    Some(_) => {
                        eprintln!("multiple commands given");
                        return ExitCode::FAILURE;
                    }
                    None => {
                        eprintln!("unknown argument `{other}`\n{}", usage());
                        return ExitCode::FAILURE;
                    }
                }
                i += 1;
            }
        }
    }

    let text = match &config_path {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("cannot read config `{p}`: {e}");
                return ExitCode::FAILURE;
            }
        },
        None => String::new(),
    };

    let mut cfg = match parse_config_with(&text, command) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::FAILURE;
        }
    };
    if let Err(e) = apply_overrides(&mut cfg, &overrides) {
        eprintln!("override error: {e}");
        return ExitCode::FAILURE;
    }

    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let timestamp = format!("{started}");

    match run(&cfg) {
        Ok(mut artifacts) => {
            match write_artifacts(&cfg, &mut artifacts, &timestamp) {
                Ok(csv_path) => println!("wrote {}", csv_path.display()),
                Err(e) => {
                    eprintln!("cannot write artifacts: {e}");
                    return ExitCode::FAILURE;
                }
            }
            for c in &artifacts.checks {
                println!(
                    "{} {} value={:.6e} {} {:.6e}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.check,
                    c.value,
                    c.direction,
                    c.threshold
                );
            }
            if artifacts.all_passed() {
                ExitCode::SUCCESS
            } else {
                // machine-readable failure summary on stderr
                for c in artifacts.checks.iter().filter(|c| !c.pass) {
                    eprintln!("{}", serde_json::to_string(c).expect("serializable"));
                }
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::json!({"error": e.to_string(), "command": cfg.command.name()})
            );
            ExitCode::FAILURE
        }
    }
}
