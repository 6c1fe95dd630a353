//! The full QSDC session as a deterministic state machine: round
//! generation, the CHSH security gate, sifting, message encoding and
//! decoding, eavesdropper channels, and rate accounting.
//!
//! Every random draw flows from the session seed. Each round uses its own
//! counter-based ChaCha substream (`set_stream(round index)`), so round
//! outcomes are independent of evaluation order; a dedicated substream
//! pre-commits the security-round subset before any outcome is drawn.

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chsh::{
    chsh_estimate, security_decision, ChshEstimate, ChshLabelPairs, SecurityDecision,
};
use crate::measurement::{
    alice_settings, bob_settings, eigensystem, joint_distribution, sample_round, RoundOutcome,
    SettingLabel,
};
use crate::states::{alpha_range, pauli_matrices, tensor, werner_equivalent, DensityMatrix};
use crate::su2::Direction;
use crate::{real, Error, Real, Result};

/// Substream index reserved for the security-subset draw. Round indices
/// occupy streams `0..n_rounds`.
const SECURITY_SELECTION_STREAM: u64 = u64::MAX;

/// Eavesdropper model applied to the shared state before any round is
/// measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EveModel<T: Real> {
    None,
    InterceptResend { policy: InterceptPolicy },
    Depolarize { q: T },
}

/// Basis policy of the intercept-resend attack on Alice's qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterceptPolicy {
    /// Eve always measures σ·x̂.
    FixedX,
    /// Eve picks σ·x̂ or σ·ẑ with equal probability (channel average).
    RandomXz,
}

/// Free parameters of a protocol session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig<T: Real> {
    pub two_s: u32,
    pub alpha: T,
    pub n_rounds: usize,
    /// Fraction of rounds pre-committed to the security check, in (0, 1).
    pub security_fraction: T,
    pub chsh_threshold: T,
    pub chsh_z: T,
    pub eve: EveModel<T>,
    pub seed: u64,
    /// Message bits to transmit once the security gate passes.
    pub message: Vec<bool>,
}

impl<T: Real> Default for SessionConfig<T> {
    fn default() -> Self {
        Self {
            two_s: 6,
            alpha: real::<T>(0.73),
            // The 3σ security gate needs the CHSH standard error well below
            // the 0.065 exact margin at α = 0.73; 10⁶ security rounds give
            // SE ≈ 0.008, making the default session pass with ~5σ to spare.
            n_rounds: 2_000_000,
            security_fraction: real::<T>(0.5),
            chsh_threshold: real::<T>(2.0),
            chsh_z: real::<T>(3.0),
            eve: EveModel::None,
            seed: 0,
            message: Vec::new(),
        }
    }
}

impl<T: Real> SessionConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = alpha_range(self.two_s);
        if self.alpha < real::<T>(lo) - real::<T>(1e-12)
            || self.alpha > real::<T>(hi) + real::<T>(1e-12)
        {
            return Err(Error::InvalidParameter(format!(
                "alpha = {} outside the valid range [{}, {}] for two_s = {}",
                self.alpha.to_f64().unwrap_or(f64::NAN),
                lo,
                hi,
                self.two_s
            )));
        }
        if self.n_rounds < 4 {
            return Err(Error::InvalidParameter(format!(
                "n_rounds must be at least 4, got {}",
                self.n_rounds
            )));
        }
        if self.security_fraction <= T::zero() || self.security_fraction >= T::one() {
            return Err(Error::InvalidParameter(format!(
                "security_fraction must lie in (0, 1), got {}",
                self.security_fraction.to_f64().unwrap_or(f64::NAN)
            )));
        }
        if self.security_round_count() < 4 {
            return Err(Error::InvalidParameter(format!(
                "security_fraction·n_rounds must be at least 4, got {}",
                self.security_round_count()
            )));
        }
        if let EveModel::Depolarize { q } = self.eve {
            if q < T::zero() || q > T::one() {
                return Err(Error::InvalidParameter(format!(
                    "depolarizing strength q must lie in [0, 1], got {}",
                    q.to_f64().unwrap_or(f64::NAN)
                )));
            }
        }
        Ok(())
    }

    fn security_round_count(&self) -> usize {
        let n = self.security_fraction.to_f64().unwrap_or(0.0) * self.n_rounds as f64;
        (n.round() as usize).min(self.n_rounds)
    }
}

/// A round's place in the protocol after post-processing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundRole {
    Security,
    Key,
    Discarded,
}

/// One protocol round: party settings, raw outcomes, sift status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub index: usize,
    pub setting_a: SettingLabel,
    pub setting_b: SettingLabel,
    pub outcome: RoundOutcome,
    pub role: RoundRole,
}

/// Full reproducible record of a protocol run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTranscript<T: Real> {
    pub config: SessionConfig<T>,
    pub rounds: Vec<RoundRecord>,
    pub chsh: ChshEstimate<T>,
    pub decision: SecurityDecision<T>,
    /// True when the security gate failed; no key material is produced.
    pub aborted: bool,
    pub alice_key: Vec<bool>,
    pub bob_key: Vec<bool>,
    /// Round indices that contributed key bits, in round order.
    pub kept_indices: Vec<usize>,
    pub transmitted: Vec<bool>,
    pub decoded: Vec<bool>,
    /// Disagreement fraction between the sifted keys; absent when no key
    /// bits exist.
    pub qber: Option<T>,
    /// Formula key rate `1 − h₂((1+α)/2)`; absent for α < 0 where the
    /// formula does not apply.
    pub key_rate_formula: Option<T>,
    /// Plug-in mutual information of the sifted keys; absent when empty.
    pub mutual_info_empirical: Option<T>,
}

/// Intercept-resend channel on the A subsystem:
/// `ρ → Σ_e (Πe ⊗ I) ρ (Πe ⊗ I)` with projectors of σ·x̂, or the equal
/// mixture of the σ·x̂ and σ·ẑ channels.
pub fn eve_intercept_resend<T: Real>(
    rho: &DensityMatrix<T>,
    policy: InterceptPolicy,
) -> Result<DensityMatrix<T>> {
    let db = match rho.dims() {
        [2, db] => *db,
        dims => {
            return Err(Error::DimensionMismatch(format!(
                "intercept-resend needs a 2×(2S+1) state, got dims {dims:?}"
            )))
        }
    };
    let apply_axis = |rho: &DensityMatrix<T>, dir: &Direction<T>| -> Result<DMatrix<Complex<T>>> {
        let pauli = pauli_matrices::<T>();
        let v = dir.cartesian();
        let sigma = &pauli[0] * Complex::new(v.x, T::zero())
            + &pauli[1] * Complex::new(v.y, T::zero())
            + &pauli[2] * Complex::new(v.z, T::zero());
        let id_b = DMatrix::<Complex<T>>::identity(db, db);
        let mut out = DMatrix::<Complex<T>>::zeros(2 * db, 2 * db);
        for (_, proj) in eigensystem(&sigma, real::<T>(1e-8))? {
            let k = tensor(&proj, &id_b);
            out += &k * rho.data() * &k;
        }
        Ok(out)
    };
    let data = match policy {
        InterceptPolicy::FixedX => apply_axis(rho, &Direction::x_axis())?,
        InterceptPolicy::RandomXz => {
            let half = Complex::new(real::<T>(0.5), T::zero());
            (apply_axis(rho, &Direction::x_axis())? + apply_axis(rho, &Direction::z_axis())?)
                * half
        }
    };
    DensityMatrix::new(rho.dims().to_vec(), data)
}

/// Depolarizing channel `ρ → (1−q)·ρ + q·I/D`.
pub fn eve_depolarize<T: Real>(rho: &DensityMatrix<T>, q: T) -> Result<DensityMatrix<T>> {
    if q < T::zero() || q > T::one() {
        return Err(Error::InvalidParameter(format!(
            "depolarizing strength q must lie in [0, 1], got {}",
            q.to_f64().unwrap_or(f64::NAN)
        )));
    }
    let d = rho.dim();
    let mixed = DMatrix::<Complex<T>>::identity(d, d)
        * Complex::new(T::one() / real::<T>(d as f64), T::zero());
    let data = rho.data() * Complex::new(T::one() - q, T::zero()) + mixed * Complex::new(q, T::zero());
    DensityMatrix::new(rho.dims().to_vec(), data)
}

/// Sifts measured rounds into correlated bit strings: keeps rounds with
/// matched settings pairs `(X, X)` or `(XZ, XZ)` and extremal Bob outcome
/// `|m| = S`. Alice's bit is `(1−a)/2`; Bob's bit is `(1+sign(m))/2`, so the
/// bits agree with probability `(1+α)/2`.
pub fn sift<'a>(
    records: impl IntoIterator<Item = &'a RoundRecord>,
    two_s: u32,
) -> (Vec<bool>, Vec<bool>, Vec<usize>) {
    let mut alice = Vec::new();
    let mut bob = Vec::new();
    let mut kept = Vec::new();
    for rec in records {
        let matched = matches!(
            (rec.setting_a, rec.setting_b),
            (SettingLabel::X, SettingLabel::X) | (SettingLabel::Xz, SettingLabel::Xz)
        );
        if matched && rec.outcome.two_m.unsigned_abs() == two_s {
            alice.push(rec.outcome.a < 0);
            bob.push(rec.outcome.two_m > 0);
            kept.push(rec.index);
        }
    }
    (alice, bob, kept)
}

/// XOR-masks the message with Alice's key bits (identity ↔ 0, X ↔ 1).
pub fn encode_message(message: &[bool], alice_bits: &[bool]) -> Result<Vec<bool>> {
    if message.len() > alice_bits.len() {
        return Err(Error::KeyShortfall {
            needed: message.len(),
            achievable: alice_bits.len(),
        });
    }
    Ok(message
        .iter()
        .zip(alice_bits)
        .map(|(m, k)| m ^ k)
        .collect())
}

/// Unmasks transmitted bits with Bob's key bits.
pub fn decode_message(transmitted: &[bool], bob_bits: &[bool]) -> Result<Vec<bool>> {
    if transmitted.len() != bob_bits.len() {
        return Err(Error::LengthMismatch(format!(
            "transmitted {} bits but the key slice holds {}",
            transmitted.len(),
            bob_bits.len()
        )));
    }
    Ok(transmitted
        .iter()
        .zip(bob_bits)
        .map(|(t, k)| t ^ k)
        .collect())
}

/// Sifted key rate in bits per transmission:
/// `(1+α)/2·log₂(1+α) + (1−α)/2·log₂(1−α) = 1 − h₂((1+α)/2)`.
pub fn key_rate<T: Real>(alpha: T) -> Result<T> {
    let slack = real::<T>(1e-12);
    if alpha < -slack || alpha > T::one() + slack {
        return Err(Error::InvalidParameter(format!(
            "key rate is defined for alpha in [0, 1], got {}",
            alpha.to_f64().unwrap_or(f64::NAN)
        )));
    }
    let term = |x: T| -> T {
        // x·log₂(x) with the 0·log0 = 0 limit, for x = 1±α
        if x <= T::zero() {
            T::zero()
        } else {
            x / real::<T>(2.0) * x.log2()
        }
    };
    Ok(term(T::one() + alpha) + term(T::one() - alpha))
}

/// Plug-in mutual information (bits per symbol) of two equal-length bit
/// strings, from the 2×2 joint frequency table.
pub fn empirical_mutual_information<T: Real>(alice: &[bool], bob: &[bool]) -> Result<T> {
    if alice.is_empty() {
        return Err(Error::EmptyInput("mutual information needs bits".into()));
    }
    if alice.len() != bob.len() {
        return Err(Error::LengthMismatch(format!(
            "alice has {} bits, bob has {}",
            alice.len(),
            bob.len()
        )));
    }
    let mut joint = [[0.0f64; 2]; 2];
    for (&a, &b) in alice.iter().zip(bob) {
        joint[a as usize][b as usize] += 1.0;
    }
    let n = alice.len() as f64;
    let pa = [
        (joint[0][0] + joint[0][1]) / n,
        (joint[1][0] + joint[1][1]) / n,
    ];
    let pb = [
        (joint[0][0] + joint[1][0]) / n,
        (joint[0][1] + joint[1][1]) / n,
    ];
    let mut mi = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            let p = joint[a][b] / n;
            if p > 0.0 {
                mi += p * (p / (pa[a] * pb[b])).log2();
            }
        }
    }
    Ok(real::<T>(mi))
}

/// Runs the full protocol. Fully reproducible from the config seed:
/// identical configs give identical transcripts.
pub fn run_session<T: Real>(config: &SessionConfig<T>) -> Result<SessionTranscript<T>> {
    config.validate()?;

    let mut rho = werner_equivalent(config.alpha, config.two_s)?;
    match config.eve {
        EveModel::None => {}
        EveModel::InterceptResend { policy } => rho = eve_intercept_resend(&rho, policy)?,
        EveModel::Depolarize { q } => rho = eve_depolarize(&rho, q)?,
    }

    let settings_a = alice_settings::<T>();
    let settings_b = bob_settings::<T>();
    let mut dists = Vec::with_capacity(9);
    for sa in &settings_a {
        for sb in &settings_b {
            dists.push(joint_distribution(&rho, sa, sb)?);
        }
    }

    // Pre-commit the security subset before any outcome is drawn.
    let base_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n_security = config.security_round_count();
    let mut is_security = vec![false; config.n_rounds];
    {
        let mut rng = base_rng.clone();
        rng.set_stream(SECURITY_SELECTION_STREAM);
        for idx in rand::seq::index::sample(&mut rng, config.n_rounds, n_security) {
            is_security[idx] = true;
        }
    }

    let mut rounds = Vec::with_capacity(config.n_rounds);
    for index in 0..config.n_rounds {
        let mut rng = base_rng.clone();
        rng.set_stream(index as u64);
        let ia = rng.gen_range(0..3usize);
        let ib = rng.gen_range(0..3usize);
        let outcome = sample_round(&dists[ia * 3 + ib], &mut rng)?;
        rounds.push(RoundRecord {
            index,
            setting_a: settings_a[ia].label(),
            setting_b: settings_b[ib].label(),
            outcome,
            role: if is_security[index] {
                RoundRole::Security
            } else {
                RoundRole::Discarded
            },
        });
    }

    let security_rounds: Vec<(SettingLabel, SettingLabel, RoundOutcome)> = rounds
        .iter()
        .filter(|r| r.role == RoundRole::Security)
        .map(|r| (r.setting_a, r.setting_b, r.outcome))
        .collect();
    let chsh = chsh_estimate::<T>(&security_rounds, config.two_s, &ChshLabelPairs::default())?;
    let decision = security_decision(&chsh, config.chsh_threshold, config.chsh_z);

    let key_rate_formula = if config.alpha >= T::zero() {
        Some(key_rate(config.alpha)?)
    } else {
        None
    };

    if !decision.pass {
        return Ok(SessionTranscript {
            config: config.clone(),
            rounds,
            chsh,
            decision,
            aborted: true,
            alice_key: Vec::new(),
            bob_key: Vec::new(),
            kept_indices: Vec::new(),
            transmitted: Vec::new(),
            decoded: Vec::new(),
            qber: None,
            key_rate_formula,
            mutual_info_empirical: None,
        });
    }

    let candidates: Vec<RoundRecord> = rounds
        .iter()
        .filter(|r| r.role != RoundRole::Security)
        .copied()
        .collect();
    let (alice_key, bob_key, kept_indices) = sift(&candidates, config.two_s);
    let kept: std::collections::HashSet<usize> = kept_indices.iter().copied().collect();
    for rec in rounds.iter_mut() {
        if rec.role != RoundRole::Security && kept.contains(&rec.index) {
            rec.role = RoundRole::Key;
        }
    }

    let qber = if alice_key.is_empty() {
        None
    } else {
        let errors = alice_key
            .iter()
            .zip(&bob_key)
            .filter(|(a, b)| a != b)
            .count();
        Some(real::<T>(errors as f64 / alice_key.len() as f64))
    };
    let mutual_info_empirical = if alice_key.is_empty() {
        None
    } else {
        Some(empirical_mutual_information(&alice_key, &bob_key)?)
    };

    let transmitted = encode_message(&config.message, &alice_key)?;
    let decoded = decode_message(&transmitted, &bob_key[..transmitted.len()])?;

    Ok(SessionTranscript {
        config: config.clone(),
        rounds,
        chsh,
        decision,
        aborted: false,
        alice_key,
        bob_key,
        kept_indices,
        transmitted,
        decoded,
        qber,
        key_rate_formula,
        mutual_info_empirical,
    })
}

/// Parses a hex string into message bits, most significant bit of each
/// byte first.
pub fn bits_from_hex(hex_str: &str) -> Result<Vec<bool>> {
    let s = hex_str.trim();
    if s.len() % 2 != 0 {
        return Err(Error::InvalidParameter(
            "message hex must have an even number of digits".into(),
        ));
    }
    let mut bits = Vec::with_capacity(s.len() * 4);
    for i in (0..s.len()).step_by(2) {
        let byte = u8::from_str_radix(&s[i..i + 2], 16).map_err(|_| {
            Error::InvalidParameter(format!("invalid hex byte {:?}", &s[i..i + 2]))
        })?;
        for bit in (0..8).rev() {
            bits.push(byte >> bit & 1 == 1);
        }
    }
    Ok(bits)
}

/// Packs message bits back into hex (inverse of [`bits_from_hex`] for
/// whole bytes; a trailing partial byte is zero-padded).
pub fn bits_to_hex(bits: &[bool]) -> String {
    let mut out = String::with_capacity(bits.len().div_ceil(8) * 2);
    for chunk in bits.chunks(8) {
        let mut byte = 0u8;
        for (i, &b) in chunk.iter().enumerate() {
            if b {
                byte |= 1 << (7 - i);
            }
        }
        out.push_str(&format!("{byte:02x}"));
    }
    out
}
