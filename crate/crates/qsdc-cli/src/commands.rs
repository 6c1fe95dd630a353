//! The five analysis/protocol subcommands. Each returns its JSON results
//! payload plus an optional CSV rendering of its main table.

use std::fmt::Write as _;

use qsdc_core::chsh::{
    chsh_exact, chsh_estimate, security_decision, ChshEstimate, ChshLabelPairs, ChshSettings,
};
use qsdc_core::equivalence::{q_bipartite_grid, sphere_grid};
use qsdc_core::measurement::{joint_distribution, sample_round, RoundOutcome, Setting, SettingLabel};
use qsdc_core::protocol::{bits_to_hex, key_rate, run_session, EveModel, InterceptPolicy, RoundRole};
use qsdc_core::states::{alpha_range, min_eigenvalue, partial_transpose, werner_2x2, werner_equivalent};
use qsdc_core::SessionConfig64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// Result of one subcommand: the JSON payload and, when the subcommand has
/// a natural table, its CSV rendering.
pub struct CommandOutput {
    pub results: Value,
    pub csv: Option<String>,
}

const EQUIVALENCE_GRID_NODES: usize = 200;
const EQUIVALENCE_TOL: f64 = 1e-10;
const PPT_TOL: f64 = 1e-10;
const SCAN_STEP: f64 = 0.01;

fn label_name(label: SettingLabel) -> &'static str {
    match label {
        SettingLabel::X => "x",
        SettingLabel::Xz => "xz",
        SettingLabel::Z => "z",
        SettingLabel::XMinusZ => "x-z",
    }
}

/// Q-distance certification between the 2×2 Werner state and its
/// 2×(2S+1) equivalent at the configured α.
pub fn equivalence(config: &SessionConfig64) -> Result<CommandOutput, String> {
    let rho_small = werner_2x2(config.alpha).map_err(|e| e.to_string())?;
    let rho_large = werner_equivalent(config.alpha, config.two_s).map_err(|e| e.to_string())?;
    let grid = sphere_grid::<f64>(EQUIVALENCE_GRID_NODES).map_err(|e| e.to_string())?;
    let q_small = q_bipartite_grid(&rho_small, &grid).map_err(|e| e.to_string())?;
    let q_large = q_bipartite_grid(&rho_large, &grid).map_err(|e| e.to_string())?;

    let mut distance = 0.0f64;
    let mut csv = String::from("theta_a,phi_a,theta_b,phi_b,q_small,q_large,abs_diff\n");
    for (i, na) in grid.nodes().iter().enumerate() {
        for (j, nb) in grid.nodes().iter().enumerate() {
            let diff = (q_small[i][j] - q_large[i][j]).abs();
            distance = distance.max(diff);
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                na.theta(),
                na.phi(),
                nb.theta(),
                nb.phi(),
                q_small[i][j],
                q_large[i][j],
                diff
            );
        }
    }

    Ok(CommandOutput {
        results: json!({
            "alpha": config.alpha,
            "two_s": config.two_s,
            "grid_nodes": EQUIVALENCE_GRID_NODES,
            "distance": distance,
            "tolerance": EQUIVALENCE_TOL,
            "equivalent": distance < EQUIVALENCE_TOL,
        }),
        csv: Some(csv),
    })
}

/// PPT sweep over the valid α range at the configured spin, locating the
/// separable/entangled crossover.
pub fn entanglement_scan(config: &SessionConfig64) -> Result<CommandOutput, String> {
    let (lo, _) = alpha_range(config.two_s);
    let spin = config.two_s as f64 / 2.0;
    let expected_crossover = spin / (spin + 1.0);

    let mut rows = Vec::new();
    let mut csv = String::from("alpha,min_pt_eigenvalue,entangled\n");
    let mut first_entangled: Option<f64> = None;
    let k_lo = (lo / SCAN_STEP).ceil() as i64;
    let k_hi = (1.0 / SCAN_STEP).round() as i64;
    for k in k_lo..=k_hi {
        let alpha = k as f64 * SCAN_STEP;
        let rho = werner_equivalent(alpha, config.two_s).map_err(|e| e.to_string())?;
        let pt = partial_transpose(&rho, 1).map_err(|e| e.to_string())?;
        let min_eig = min_eigenvalue(&pt).map_err(|e| e.to_string())?;
        let entangled = min_eig < -PPT_TOL;
        if entangled && first_entangled.is_none() {
            first_entangled = Some(alpha);
        }
        let _ = writeln!(csv, "{alpha},{min_eig},{entangled}");
        rows.push(json!({
            "alpha": alpha,
            "min_pt_eigenvalue": min_eig,
            "entangled": entangled,
        }));
    }

    Ok(CommandOutput {
        results: json!({
            "two_s": config.two_s,
            "step": SCAN_STEP,
            "expected_crossover": expected_crossover,
            "first_entangled_alpha": first_entangled,
            "rows": rows,
        }),
        csv: Some(csv),
    })
}

/// Samples security-style rounds over the four CHSH settings pairs of the
/// configured state; the estimator is fed exactly as in a live session.
fn sampled_estimate(config: &SessionConfig64) -> Result<ChshEstimate<f64>, String> {
    let rho = werner_equivalent(config.alpha, config.two_s).map_err(|e| e.to_string())?;
    let pairs = ChshLabelPairs::default();
    let pair_labels = [
        (pairs.a1, pairs.b1),
        (pairs.a1, pairs.b2),
        (pairs.a2, pairs.b1),
        (pairs.a2, pairs.b2),
    ];
    let mut dists = Vec::with_capacity(4);
    for (la, lb) in pair_labels {
        let sa = Setting::alice(la).map_err(|e| e.to_string())?;
        let sb = Setting::bob(lb).map_err(|e| e.to_string())?;
        dists.push(joint_distribution(&rho, &sa, &sb).map_err(|e| e.to_string())?);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut records: Vec<(SettingLabel, SettingLabel, RoundOutcome)> =
        Vec::with_capacity(config.n_rounds);
    for _ in 0..config.n_rounds {
        let which = rng.gen_range(0..4usize);
        let outcome = sample_round(&dists[which], &mut rng).map_err(|e| e.to_string())?;
        let (la, lb) = pair_labels[which];
        records.push((la, lb, outcome));
    }
    chsh_estimate(records.iter(), config.two_s, &pairs).map_err(|e| e.to_string())
}

fn counts_csv(estimate: &ChshEstimate<f64>) -> String {
    let pairs = ChshLabelPairs::default();
    let pair_labels = [
        (pairs.a1, pairs.b1),
        (pairs.a1, pairs.b2),
        (pairs.a2, pairs.b1),
        (pairs.a2, pairs.b2),
    ];
    let mut csv = String::from("pair,setting_a,setting_b,count\n");
    for (i, (la, lb)) in pair_labels.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            i + 1,
            label_name(*la),
            label_name(*lb),
            estimate.counts[i]
        );
    }
    csv
}

/// Exact CHSH statistic at the optimal settings, the violation crossover,
/// and (for `n_rounds > 0`) a seeded finite-sample estimate with its
/// security decision.
pub fn chsh(config: &SessionConfig64) -> Result<CommandOutput, String> {
    let rho = werner_equivalent(config.alpha, config.two_s).map_err(|e| e.to_string())?;
    let exact = chsh_exact(&rho, &ChshSettings::optimal()).map_err(|e| e.to_string())?;
    let crossover = qsdc_core::chsh::violation_crossover_alpha(config.two_s, 1e-9)
        .map_err(|e| e.to_string())?;

    let (estimate_json, decision_json, csv) = if config.n_rounds == 0 {
        (Value::Null, Value::Null, None)
    } else {
        let estimate = sampled_estimate(config)?;
        let decision = security_decision(&estimate, config.chsh_threshold, config.chsh_z);
        let csv = counts_csv(&estimate);
        (
            serde_json::to_value(&estimate).map_err(|e| e.to_string())?,
            serde_json::to_value(&decision).map_err(|e| e.to_string())?,
            Some(csv),
        )
    };

    Ok(CommandOutput {
        results: json!({
            "alpha": config.alpha,
            "two_s": config.two_s,
            "exact": exact,
            "violation_crossover_alpha": crossover,
            "rounds": config.n_rounds,
            "estimate": estimate_json,
            "decision": decision_json,
        }),
        csv,
    })
}

fn eve_json(eve: &EveModel<f64>) -> Value {
    match eve {
        EveModel::None => json!({"kind": "none"}),
        EveModel::InterceptResend {
            policy: InterceptPolicy::FixedX,
        } => json!({"kind": "intercept_resend", "policy": "fixed_x"}),
        EveModel::InterceptResend {
            policy: InterceptPolicy::RandomXz,
        } => json!({"kind": "intercept_resend", "policy": "random_xz"}),
        EveModel::Depolarize { q } => json!({"kind": "depolarize", "q": q}),
    }
}

fn bits_digest(bits: &[bool]) -> String {
    hex::encode(Sha256::digest(bits_to_hex(bits).as_bytes()))
}

/// Runs the full protocol session and summarizes the transcript. Key bits
/// appear only as digests so reports stay small and log-safe; the decoded
/// message is included in full.
pub fn session(config: &SessionConfig64) -> Result<CommandOutput, String> {
    let transcript = run_session(config).map_err(|e| e.to_string())?;

    let mut roles = (0usize, 0usize, 0usize);
    for r in &transcript.rounds {
        match r.role {
            RoundRole::Security => roles.0 += 1,
            RoundRole::Key => roles.1 += 1,
            RoundRole::Discarded => roles.2 += 1,
        }
    }

    let results = json!({
        "config": {
            "two_s": config.two_s,
            "alpha": config.alpha,
            "n_rounds": config.n_rounds,
            "security_fraction": config.security_fraction,
            "chsh_threshold": config.chsh_threshold,
            "chsh_z": config.chsh_z,
            "eve": eve_json(&config.eve),
            "seed": config.seed,
            "message_hex": bits_to_hex(&config.message),
        },
        "chsh": serde_json::to_value(&transcript.chsh).map_err(|e| e.to_string())?,
        "decision": serde_json::to_value(&transcript.decision).map_err(|e| e.to_string())?,
        "aborted": transcript.aborted,
        "round_counts": {
            "security": roles.0,
            "key": roles.1,
            "discarded": roles.2,
        },
        "key_bits": transcript.alice_key.len(),
        "alice_key_sha256": bits_digest(&transcript.alice_key),
        "bob_key_sha256": bits_digest(&transcript.bob_key),
        "transmitted_hex": bits_to_hex(&transcript.transmitted),
        "decoded_hex": bits_to_hex(&transcript.decoded),
        "qber": transcript.qber,
        "key_rate_formula": transcript.key_rate_formula,
        "mutual_info_empirical": transcript.mutual_info_empirical,
    });

    Ok(CommandOutput {
        results,
        csv: Some(counts_csv(&transcript.chsh)),
    })
}

/// The formula key-rate curve over α ∈ [0, 1] plus the value at the
/// configured α.
pub fn keyrate(config: &SessionConfig64) -> Result<CommandOutput, String> {
    let at_alpha = key_rate(config.alpha).map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    let mut csv = String::from("alpha,key_rate\n");
    for k in 0..=100 {
        let alpha = k as f64 * SCAN_STEP;
        let rate = key_rate(alpha).map_err(|e| e.to_string())?;
        let _ = writeln!(csv, "{alpha},{rate}");
        rows.push(json!({"alpha": alpha, "key_rate": rate}));
    }
    Ok(CommandOutput {
        results: json!({
            "alpha": config.alpha,
            "key_rate": at_alpha,
            "curve": rows,
        }),
        csv: Some(csv),
    })
}
