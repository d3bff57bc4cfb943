//! Pauli-frame Monte Carlo sampler of the purified parity projection,
//! validating the analytic pumping, walk and channel results.
//!
//! The sampler draws from exactly the dressed circuits the analytic path
//! propagates ([`circuit::pump_round`], [`circuit::pp_application`]) and uses
//! the same expected-wait storage-noise rates, so the two paths compute the
//! same model and must agree statistically.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::budget::{effective_pp_noise, memory_channel, BudgetError, EffectivePp, ProtocolParams};
use crate::circuit::{self, uniform_f64, CircuitSampler};
use crate::pauli::{Pauli, PauliOperator};
use crate::purify::BellDiagonalState;

#[derive(Debug, Clone)]
pub struct SampleConfig {
    pub params: ProtocolParams,
    pub n_samples: usize,
    pub seed: u64,
}

impl SampleConfig {
    pub fn new(params: ProtocolParams, n_samples: usize, seed: u64) -> Self {
        assert!(n_samples >= 1);
        SampleConfig { params, n_samples, seed }
    }
}

/// Below this sample count the z-comparisons are skipped (standard errors
/// are still reported).
pub const MIN_SAMPLES_FOR_CHECKS: usize = 100;
/// A frequency bin is only z-tested when this many hits are expected.
pub const MIN_EXPECTED_COUNT: f64 = 10.0;

/// One sampled purified parity projection on a client pair.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub success: bool,
    /// Majority-vote parity disagreed with the reference (walk-start) parity.
    pub wrong_parity: bool,
    /// Pauli frame deposited on the two clients (includes the misapplied
    /// byproduct when the vote was wrong).
    pub client_frame: PauliOperator,
    pub effective_pps: usize,
    pub raw_pairs: u64,
    pub eo_attempts: u64,
}

struct WalkSamplers {
    pump: CircuitSampler,
    pp: CircuitSampler,
    raw_cum: [f64; 4],
    transfer_cum: Vec<(f64, PauliOperator)>,
    stored_wait_cum: Vec<(f64, PauliOperator)>,
    client_mem_cum: Vec<(f64, PauliOperator)>,
}

fn one_qubit_cumulative(chan: &crate::pauli::PauliChannel) -> Vec<(f64, PauliOperator)> {
    let mut acc = 0.0;
    chan.terms()
        .map(|(op, p)| {
            acc += p;
            (acc, *op)
        })
        .collect()
}

impl WalkSamplers {
    fn new(params: &ProtocolParams, eff: &EffectivePp) -> Self {
        let raw = params.raw_state().expect("validated params");
        let transfer =
            crate::pauli::depolarizing1(circuit::transfer_marginal_rate(params.p_local))
                .expect("valid rate");
        let stored_wait = memory_channel(params.attempts_per_raw_pair(), params.p_mem);
        let client_mem = memory_channel(eff.cost.client_idle_steps, params.p_mem);
        WalkSamplers {
            pump: CircuitSampler::new(circuit::pump_round(params.p_local)),
            pp: CircuitSampler::new(circuit::pp_application(params.p_local)),
            raw_cum: {
                let BellDiagonalState { a, b, c, d } = raw;
                [a, a + b, a + b + c, a + b + c + d]
            },
            transfer_cum: one_qubit_cumulative(&transfer),
            stored_wait_cum: one_qubit_cumulative(&stored_wait),
            client_mem_cum: one_qubit_cumulative(&client_mem),
        }
    }

    /// Raw network pair error class in (I, Z, X, Y) order, plus the heralded
    /// retries it cost.
    fn draw_raw(&self, rng: &mut ChaCha8Rng, f_herald: f64, attempts: &mut u64) -> Pauli {
        loop {
            *attempts += 1;
            if uniform_f64(rng) >= f_herald {
                break;
            }
        }
        let u = uniform_f64(rng);
        if u < self.raw_cum[0] {
            Pauli::I
        } else if u < self.raw_cum[1] {
            Pauli::Z
        } else if u < self.raw_cum[2] {
            Pauli::X
        } else {
            Pauli::Y
        }
    }
}

/// Bell class of the stored pair tracked as a one-sided Pauli: multiplying
/// one-sided representatives matches the Bell-diagonal composition rule.
fn one_sided(p: Pauli, side: usize) -> PauliOperator {
    PauliOperator::single(4, side, p)
}

/// Samples one purified parity projection, mirroring the analytic model:
/// pump rejections restart the schedule with fresh raw pairs, and the walk
/// counts recorded parities against the fixed reference.
pub fn sample_pp_walk(params: &ProtocolParams, rng: &mut ChaCha8Rng) -> TrialRecord {
    let eff_free = params.clone();
    // the samplers depend only on rates, not on walk truncation; build cheap
    // tables per call when used standalone (validate() reuses them)
    let eff = effective_pp_noise(&eff_free).expect("caller validates params");
    let samplers = WalkSamplers::new(params, &eff);
    sample_with(params, &samplers, rng)
}

fn sample_with(
    params: &ProtocolParams,
    s: &WalkSamplers,
    rng: &mut ChaCha8Rng,
) -> TrialRecord {
    let mut raw_pairs = 0u64;
    let mut eo_attempts = 0u64;
    let mut client_frame = PauliOperator::identity(2);
    let mut count_ref = 0usize; // recorded parities agreeing with the reference
    let mut count_flip = 0usize;
    let mut effective_pps = 0usize;
    let (success, wrong) = loop {
        // ---- pump schedule with restarts ----
        let stored = 'schedule: loop {
            // transfer a fresh raw pair onto the stored slot
            let raw = s.draw_raw(rng, params.f_herald, &mut eo_attempts);
            raw_pairs += 1;
            let mut stored = one_sided(raw, 0);
            for side in [0usize, 1] {
                let noise = circuit::draw(&s.transfer_cum, rng);
                stored = stored.product(&noise.embed_on(4, &[side]));
            }
            for _ in 0..params.n_rounds {
                // storage noise while the round's raw pair is generated
                for side in [0usize, 1] {
                    let noise = circuit::draw(&s.stored_wait_cum, rng);
                    stored = stored.product(&noise.embed_on(4, &[side]));
                }
                let raw = s.draw_raw(rng, params.f_herald, &mut eo_attempts);
                raw_pairs += 1;
                let frame = stored.product(&one_sided(raw, 2));
                let out = s.pump.sample(frame, rng);
                if s.pump.circuit().flips_parity(&out) {
                    continue 'schedule; // rejected: discard and restart
                }
                let kept = s.pump.circuit().residual(&out);
                // collapse the two-sided residual back to the one-sided class
                stored = one_sided(bell_class(&kept), 0);
            }
            break stored;
        };

        // ---- one effective parity projection on the clients ----
        // the stored error acts on either side with equal probability
        let side = (uniform_f64(rng) < 0.5) as usize;
        let class = bell_class(&stored.restrict(&[0, 1]));
        let initial = one_sided(class, side);
        let out = s.pp.sample(initial, rng);
        let flip = s.pp.circuit().flips_parity(&out);
        let deposit = s.pp.circuit().residual(&out);
        client_frame = client_frame.product(&deposit);
        for q in [0usize, 1] {
            let mem = circuit::draw(&s.client_mem_cum, rng);
            client_frame = client_frame.product(&mem.embed_on(2, &[q]));
        }
        effective_pps += 1;
        if flip {
            count_flip += 1;
        } else {
            count_ref += 1;
        }
        let m = count_ref.abs_diff(count_flip);
        if m >= params.m_target {
            break (true, count_flip > count_ref);
        }
        if effective_pps >= params.h_max {
            break (false, count_flip > count_ref);
        }
    };

    if success && wrong {
        // misrecorded parity: the byproduct is misapplied on the pair
        client_frame =
            client_frame.product(&PauliOperator::from_paulis(&[Pauli::Z, Pauli::Z]));
    }

    TrialRecord {
        success,
        wrong_parity: wrong,
        client_frame,
        effective_pps,
        raw_pairs,
        eo_attempts,
    }
}

/// Bell class of a two-qubit Pauli relative to the target Bell state, as a
/// one-sided representative.
fn bell_class(two: &PauliOperator) -> Pauli {
    let bit = (two.x_mask() & 1) ^ (two.x_mask() >> 1 & 1) == 1;
    let phase = (two.z_mask() & 1) ^ (two.z_mask() >> 1 & 1) == 1;
    Pauli::from_bits(bit, phase)
}

/// One compared observable.
#[derive(Debug, Clone)]
pub struct Observable {
    pub name: String,
    pub analytic: f64,
    pub empirical: f64,
    pub std_error: f64,
    /// |z| when the comparison ran; None when skipped by the guards.
    pub z: Option<f64>,
}

impl Observable {
    pub fn passes(&self, z_limit: f64) -> bool {
        self.z.map(|z| z <= z_limit).unwrap_or(true)
    }
}

/// Aggregated empirical statistics with per-observable comparisons.
#[derive(Debug, Clone)]
pub struct EmpiricalReport {
    pub n_samples: usize,
    pub seed: u64,
    pub success_prob: f64,
    pub wrong_parity_given_success: f64,
    pub mean_attempts_per_raw_pair: f64,
    pub mean_effective_pps: f64,
    /// Success-conditioned client Pauli frequencies in term order of the
    /// analytic walk channel.
    pub client_frequencies: Vec<(PauliOperator, f64)>,
    pub observables: Vec<Observable>,
}

impl EmpiricalReport {
    pub fn all_pass(&self, z_limit: f64) -> bool {
        self.observables.iter().all(|o| o.passes(z_limit))
    }

    /// Plain-text `key = value` report; stable for a fixed seed.
    pub fn report_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n_samples = {}", self.n_samples);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "success_prob = {:.6e}", self.success_prob);
        let _ = writeln!(
            out,
            "wrong_parity_given_success = {:.6e}",
            self.wrong_parity_given_success
        );
        let _ = writeln!(
            out,
            "mean_attempts_per_raw_pair = {:.6e}",
            self.mean_attempts_per_raw_pair
        );
        let _ = writeln!(out, "mean_effective_pps = {:.6e}", self.mean_effective_pps);
        for o in &self.observables {
            let z = o
                .z
                .map(|z| format!("{z:.3}"))
                .unwrap_or_else(|| String::from("skipped"));
            let _ = writeln!(
                out,
                "{} = {:.6e} (analytic {:.6e}, se {:.3e}, z {})",
                o.name, o.empirical, o.analytic, o.std_error, z
            );
        }
        let _ = writeln!(out, "pass = {}", self.all_pass(3.0));
        out
    }
}

/// Prepared sampler state shared by all trials; trial index selects the
/// generator stream, so results are independent of execution order and a
/// driver may partition the index range over threads freely.
pub struct TrialRunner {
    config: SampleConfig,
    eff: EffectivePp,
    samplers: WalkSamplers,
}

impl TrialRunner {
    pub fn new(config: SampleConfig) -> Result<Self, BudgetError> {
        let eff = effective_pp_noise(&config.params)?;
        let samplers = WalkSamplers::new(&config.params, &eff);
        Ok(TrialRunner { config, eff, samplers })
    }

    pub fn config(&self) -> &SampleConfig {
        &self.config
    }

    pub fn effective(&self) -> &EffectivePp {
        &self.eff
    }

    pub fn run_trial(&self, index: usize) -> TrialRecord {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(index as u64);
        sample_with(&self.config.params, &self.samplers, &mut rng)
    }

    /// Builds the report from aggregates collected by any partition of the
    /// trial indices (merging is associative and commutative).
    pub fn report(&self, aggregates: Vec<Aggregate>) -> EmpiricalReport {
        let mut agg = Aggregate::default();
        for a in aggregates {
            agg.merge(a);
        }
        build_report(&self.config, &self.eff, &agg)
    }
}

/// Runs the sampler and compares every analytic observable against the
/// empirical frequencies at the three-sigma level. Deterministic for a fixed
/// seed.
pub fn validate(config: &SampleConfig) -> Result<EmpiricalReport, BudgetError> {
    let runner = TrialRunner::new(config.clone())?;
    let mut agg = Aggregate::default();
    for i in 0..config.n_samples {
        agg.push(&runner.run_trial(i));
    }
    Ok(runner.report(alloc::vec![agg]))
}

/// Order-independent integer aggregation of trial records.
#[doc(hidden)]
#[derive(Default)]
pub struct Aggregate {
    n: u64,
    successes: u64,
    wrong: u64,
    attempts: u64,
    raw_pairs: u64,
    pp_sum: u64,
    pp_sumsq: u128,
    client_counts: alloc::collections::BTreeMap<PauliOperator, u64>,
}

impl Aggregate {
    pub fn push(&mut self, r: &TrialRecord) {
        self.n += 1;
        self.attempts += r.eo_attempts;
        self.raw_pairs += r.raw_pairs;
        self.pp_sum += r.effective_pps as u64;
        self.pp_sumsq += (r.effective_pps as u128) * (r.effective_pps as u128);
        if r.success {
            self.successes += 1;
            if r.wrong_parity {
                self.wrong += 1;
            }
            *self.client_counts.entry(r.client_frame).or_insert(0) += 1;
        }
    }

    pub fn merge(&mut self, other: Aggregate) {
        self.n += other.n;
        self.successes += other.successes;
        self.wrong += other.wrong;
        self.attempts += other.attempts;
        self.raw_pairs += other.raw_pairs;
        self.pp_sum += other.pp_sum;
        self.pp_sumsq += other.pp_sumsq;
        for (k, v) in other.client_counts {
            *self.client_counts.entry(k).or_insert(0) += v;
        }
    }
}

fn build_report(config: &SampleConfig, eff: &EffectivePp, agg: &Aggregate) -> EmpiricalReport {
    let n = agg.n as f64;
    let checks_on = config.n_samples >= MIN_SAMPLES_FOR_CHECKS;
    let mut observables = Vec::new();

    let prop_obs = |name: &str, count: u64, total: f64, analytic: f64, on: bool| {
        let p = if total > 0.0 { count as f64 / total } else { 0.0 };
        let se = if total > 0.0 {
            libm::sqrt((p * (1.0 - p)).max(1.0 / total) / total)
        } else {
            0.0
        };
        let z = (on && total > 0.0).then(|| (p - analytic).abs() / se);
        Observable {
            name: String::from(name),
            analytic,
            empirical: p,
            std_error: se,
            z,
        }
    };

    observables.push(prop_obs(
        "success_prob",
        agg.successes,
        n,
        eff.walk.success_prob,
        checks_on,
    ));
    observables.push(prop_obs(
        "wrong_parity_given_success",
        agg.wrong,
        agg.successes as f64,
        eff.walk.residual_wrong_parity,
        checks_on && agg.successes > 0
            && eff.walk.residual_wrong_parity * agg.successes as f64 >= MIN_EXPECTED_COUNT,
    ));

    // client Pauli table, success-conditioned, against the walk channel
    let mut client_frequencies = Vec::new();
    for (op, analytic) in eff.walk_channel.terms() {
        let count = agg.client_counts.get(op).copied().unwrap_or(0);
        let on = checks_on
            && agg.successes > 0
            && analytic * agg.successes as f64 >= MIN_EXPECTED_COUNT;
        let obs = prop_obs(
            &format!("client[{op}]"),
            count,
            agg.successes as f64,
            analytic,
            on,
        );
        client_frequencies.push((*op, obs.empirical));
        observables.push(obs);
    }

    // attempts per raw pair: geometric with success rate 1 - f
    let mean_attempts = if agg.raw_pairs > 0 {
        agg.attempts as f64 / agg.raw_pairs as f64
    } else {
        0.0
    };
    let f = config.params.f_herald;
    let se_attempts = if agg.raw_pairs > 0 {
        libm::sqrt(f.max(1e-30)) / (1.0 - f) / libm::sqrt(agg.raw_pairs as f64)
    } else {
        0.0
    };
    observables.push(Observable {
        name: String::from("attempts_per_raw_pair"),
        analytic: config.params.attempts_per_raw_pair(),
        empirical: mean_attempts,
        std_error: se_attempts,
        z: (checks_on && f > 0.0 && agg.raw_pairs > 0)
            .then(|| (mean_attempts - config.params.attempts_per_raw_pair()).abs() / se_attempts),
    });

    // effective projections consumed per walk
    let mean_pp = agg.pp_sum as f64 / n;
    let var_pp = (agg.pp_sumsq as f64 / n - mean_pp * mean_pp).max(0.0);
    let se_pp = libm::sqrt(var_pp / n);
    observables.push(Observable {
        name: String::from("effective_pps"),
        analytic: eff.walk.expected_pp_count,
        empirical: mean_pp,
        std_error: se_pp,
        z: (checks_on && se_pp > 0.0)
            .then(|| (mean_pp - eff.walk.expected_pp_count).abs() / se_pp),
    });

    EmpiricalReport {
        n_samples: config.n_samples,
        seed: config.seed,
        success_prob: agg.successes as f64 / n,
        wrong_parity_given_success: if agg.successes > 0 {
            agg.wrong as f64 / agg.successes as f64
        } else {
            0.0
        },
        mean_attempts_per_raw_pair: mean_attempts,
        mean_effective_pps: mean_pp,
        client_frequencies,
        observables,
    }
}
