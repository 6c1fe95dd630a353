//! Flat key/value config files and their resolution against CLI flags.
//!
//! The file format is deliberately minimal: one `key = value` pair per
//! line, `#` comments, blank lines ignored. Unknown keys are rejected so
//! that typos fail loudly instead of silently falling back to defaults.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use qsdc_core::protocol::{bits_from_hex, bits_to_hex, EveModel, InterceptPolicy};
use qsdc_core::SessionConfig64;
use sha2::{Digest, Sha256};

/// Keys accepted in a config file, in canonical (hash) order.
const KNOWN_KEYS: [&str; 10] = [
    "alpha",
    "chsh_threshold",
    "chsh_z",
    "eve",
    "eve_q",
    "message_hex",
    "n_rounds",
    "security_fraction",
    "seed",
    "two_s",
];

/// Eavesdropper choice as spelled on the command line / config file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EveArg {
    None,
    InterceptX,
    InterceptXz,
    Depolarize,
}

impl EveArg {
    fn parse_key(value: &str) -> Result<Self, String> {
        match value {
            "none" => Ok(Self::None),
            "intercept-x" => Ok(Self::InterceptX),
            "intercept-xz" => Ok(Self::InterceptXz),
            "depolarize" => Ok(Self::Depolarize),
            other => Err(format!(
                "eve must be one of none|intercept-x|intercept-xz|depolarize, got `{other}`"
            )),
        }
    }

    fn into_model(self, eve_q: Option<f64>) -> Result<EveModel<f64>, String> {
        match self {
            Self::None => Ok(EveModel::None),
            Self::InterceptX => Ok(EveModel::InterceptResend {
                policy: InterceptPolicy::FixedX,
            }),
            Self::InterceptXz => Ok(EveModel::InterceptResend {
                policy: InterceptPolicy::RandomXz,
            }),
            Self::Depolarize => {
                let q = eve_q.ok_or("eve = depolarize requires eve_q")?;
                Ok(EveModel::Depolarize { q })
            }
        }
    }
}

/// Flag values that may override the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub two_s: Option<u32>,
    pub rounds: Option<usize>,
    pub seed: Option<u64>,
    pub eve: Option<EveArg>,
    pub eve_q: Option<f64>,
    pub message_hex: Option<String>,
}

/// Parses a config file body into its raw key/value pairs.
pub fn parse_file(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut pairs = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`, got `{line}`", lineno + 1))?;
        let key = key.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(format!("line {}: unknown key `{key}`", lineno + 1));
        }
        if pairs.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(format!("line {}: duplicate key `{key}`", lineno + 1));
        }
    }
    Ok(pairs)
}

fn parse_value<T: std::str::FromStr>(pairs: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, String> {
    match pairs.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse()
            .map(Some)
            .map_err(|_| format!("key `{key}`: cannot parse `{raw}`")),
    }
}

/// Builds the effective session config: defaults, overlaid by the config
/// file (if any), overlaid by command-line flags.
pub fn resolve(path: Option<&Path>, flags: &Overrides) -> Result<SessionConfig64, String> {
    let pairs = match path {
        None => BTreeMap::new(),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| format!("cannot read config {}: {e}", p.display()))?;
            parse_file(&text)?
        }
    };

    let mut config = SessionConfig64::default();
    if let Some(v) = parse_value(&pairs, "two_s")? {
        config.two_s = v;
    }
    if let Some(v) = parse_value(&pairs, "alpha")? {
        config.alpha = v;
    }
    if let Some(v) = parse_value(&pairs, "n_rounds")? {
        config.n_rounds = v;
    }
    if let Some(v) = parse_value(&pairs, "security_fraction")? {
        config.security_fraction = v;
    }
    if let Some(v) = parse_value(&pairs, "chsh_threshold")? {
        config.chsh_threshold = v;
    }
    if let Some(v) = parse_value(&pairs, "chsh_z")? {
        config.chsh_z = v;
    }
    if let Some(v) = parse_value(&pairs, "seed")? {
        config.seed = v;
    }
    let file_eve = pairs
        .get("eve")
        .map(|raw| EveArg::parse_key(raw))
        .transpose()?;
    let file_eve_q = parse_value(&pairs, "eve_q")?;
    let file_message = pairs.get("message_hex").cloned();

    // Flags win over file values key by key.
    if let Some(v) = flags.two_s {
        config.two_s = v;
    }
    if let Some(v) = flags.alpha {
        config.alpha = v;
    }
    if let Some(v) = flags.rounds {
        config.n_rounds = v;
    }
    if let Some(v) = flags.seed {
        config.seed = v;
    }
    let eve = flags.eve.or(file_eve).unwrap_or(EveArg::None);
    let eve_q = flags.eve_q.or(file_eve_q);
    config.eve = eve.into_model(eve_q)?;
    if let Some(hex_str) = flags.message_hex.as_ref().or(file_message.as_ref()) {
        config.message = bits_from_hex(hex_str).map_err(|e| e.to_string())?;
    }

    // `--rounds 0` is meaningful for analysis subcommands (exact-only
    // paths), so the round-count minimum is enforced by `run_session`, not
    // here; every other invariant is checked on a clamped probe.
    let mut probe = config.clone();
    probe.n_rounds = probe.n_rounds.max(10_000);
    probe.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

/// SHA-256 over the resolved config rendered as sorted `key=value` lines;
/// stable under key reordering in the source file by construction.
pub fn config_hash(config: &SessionConfig64) -> String {
    let (eve, eve_q) = match config.eve {
        EveModel::None => ("none", 0.0),
        EveModel::InterceptResend {
            policy: InterceptPolicy::FixedX,
        } => ("intercept-x", 0.0),
        EveModel::InterceptResend {
            policy: InterceptPolicy::RandomXz,
        } => ("intercept-xz", 0.0),
        EveModel::Depolarize { q } => ("depolarize", q),
    };
    let mut canonical = String::new();
    let _ = writeln!(canonical, "alpha={}", config.alpha);
    let _ = writeln!(canonical, "chsh_threshold={}", config.chsh_threshold);
    let _ = writeln!(canonical, "chsh_z={}", config.chsh_z);
    let _ = writeln!(canonical, "eve={eve}");
    let _ = writeln!(canonical, "eve_q={eve_q}");
    let _ = writeln!(canonical, "message_hex={}", bits_to_hex(&config.message));
    let _ = writeln!(canonical, "n_rounds={}", config.n_rounds);
    let _ = writeln!(canonical, "security_fraction={}", config.security_fraction);
    let _ = writeln!(canonical, "seed={}", config.seed);
    let _ = writeln!(canonical, "two_s={}", config.two_s);
    hex::encode(Sha256::digest(canonical.as_bytes()))
}
