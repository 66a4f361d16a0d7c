//! Property suites behind `verify`. Each suite returns one record per check;
//! output carries no timings, so a fixed seed reproduces it byte for byte.

use num_traits::ToPrimitive;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

use crate::experiment::ExperimentRecord;
use crate::hard::{basecase_bit_exact, build_pairing, basecase_bit_distribution, median_locality_check, sample_instance, ModeParams};
use crate::info::chain::information_chain_check;
use crate::info::corr::{correlated_sample, RngStream};
use crate::info::elim::{delta_for, eliminate_first_message, EliminationOptions};
use crate::info::protocol::{build_f_power_k, indexed_protocol, FTable, MessageFn, PairDistribution, ToyProtocol};
use crate::info::{pinsker_check, statistical_distance, Distribution};
use crate::median::{build_median_nbp, median_nbp_node_count, median_oracle};
use crate::partition::{binomial_ratio_bound, binomial_row, j_distribution_from_row, niceness_failure_exact, random_pair_partition, rational_to_f64};
use crate::reduction::{embed_instance, find_assignment, oblivious_median_program, protocol_from_bp, random_query_sequence, segment_split};
use crate::select::{multipass_bound, oracle_select, run_select, sampling_bound, synthetic_input, Algo, StreamReader};
use crate::Party;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Quick,
    Full,
}

impl Scale {
    fn pick<T>(self, quick: T, full: T) -> T {
        match self {
            Scale::Quick => quick,
            Scale::Full => full,
        }
    }
}

pub const SUITES: [&str; 13] = [
    "nbp", "nbp-size", "locality", "basecase", "niceness", "assignment", "protocol", "ratio", "pinsker", "chain",
    "corr", "roundelim", "select",
];

/// Runs one suite, or every suite for `"all"`.
pub fn run_suite(name: &str, seed: u64, scale: Scale) -> anyhow::Result<Vec<ExperimentRecord>> {
    if name == "all" {
        let mut out = Vec::new();
        for s in SUITES {
            out.extend(run_suite(s, seed, scale)?);
        }
        return Ok(out);
    }
    let stream = SUITES.iter().position(|&s| s == name).ok_or_else(|| anyhow::anyhow!("unknown suite {name}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64 + 1);
    let out = match name {
        "nbp" => nbp(seed, scale, &mut rng)?,
        "nbp-size" => nbp_size(seed)?,
        "locality" => locality(seed, scale, &mut rng)?,
        "basecase" => basecase(seed, &mut rng)?,
        "niceness" => niceness(seed, scale, &mut rng)?,
        "assignment" => assignment(seed, scale, &mut rng)?,
        "protocol" => protocol(seed, scale, &mut rng)?,
        "ratio" => ratio(seed, scale)?,
        "pinsker" => pinsker(seed, scale, &mut rng)?,
        "chain" => chain(seed, scale, &mut rng)?,
        "corr" => corr(seed, scale, &mut rng)?,
        "roundelim" => roundelim(seed, scale)?,
        "select" => select(seed, scale)?,
        _ => unreachable!(),
    };
    Ok(out)
}

/// All inputs of `n` distinct values from `[2n]`.
pub fn distinct_inputs(n: usize) -> Vec<Vec<u32>> {
    fn rec(n: usize, cur: &mut Vec<u32>, used: &mut Vec<bool>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for v in 1..=2 * n as u32 {
            if !used[v as usize] {
                used[v as usize] = true;
                cur.push(v);
                rec(n, cur, used, out);
                cur.pop();
                used[v as usize] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(n, &mut Vec::new(), &mut vec![false; 2 * n + 1], &mut out);
    out
}

pub fn random_distinct_input<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<u32> {
    sample(rng, 2 * n, n).into_iter().map(|v| v as u32 + 1).collect()
}

fn nbp(seed: u64, scale: Scale, rng: &mut ChaCha8Rng) -> anyhow::Result<Vec<ExperimentRecord>> {
    let mut out = Vec::new();
    for n in [2usize, 4] {
        let bp = build_median_nbp(n)?;
        let inputs = distinct_inputs(n);
        let wrong = inputs
            .iter()
            .filter(|x| bp.evaluate_nondeterministic(x).ok() != Some(median_oracle(x).expect("valid") as u64))
            .count();
        out.push(
            ExperimentRecord::new("nbp", seed)
                .param("n", n)
                .param("mode", "exhaustive")
                .measure("inputs", inputs.len() as f64)
                .measure("wrong", wrong as f64)
                .with_pass(wrong == 0),
        );
    }
    let samples = scale.pick(2_000, 100_000);
    let bp = build_median_nbp(6)?;
    let mut wrong = 0;
    for _ in 0..samples {
        let x = random_distinct_input(6, rng);
        if bp.evaluate_nondeterministic(&x).ok() != Some(median_oracle(&x)? as u64) {
            wrong += 1;
        }
    }
    out.push(
        ExperimentRecord::new("nbp", seed)
            .param("n", 6)
            .param("mode", "random")
            .measure("inputs", samples as f64)
            .measure("wrong", wrong as f64)
            .with_pass(wrong == 0),
    );
    Ok(out)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    num / den
}

fn nbp_size(seed: u64) -> anyhow::Result<Vec<ExperimentRecord>> {
    let ns = [4usize, 8, 16, 32, 64];
    let mut pts = Vec::new();
    let mut out = Vec::new();
    for n in ns {
        let count = median_nbp_node_count(n)?;
        let built = if n <= 16 { Some(build_median_nbp(n)?.len() as u64) } else { None };
        pts.push((n as f64, count as f64));
        let mut r = ExperimentRecord::new("nbp-size", seed).param("n", n).measure("nodes", count as f64);
        if let Some(b) = built {
            r = r.measure("built", b as f64).with_pass(b == count);
        }
        out.push(r);
    }
    let slope = loglog_slope(&pts);
    out.push(
        ExperimentRecord::new("nbp-size", seed).param("n", "4..64").measure("slope", slope).with_pass(slope <= 4.2),
    );
    Ok(out)
}

/// Toy schedules used by the locality suite: `(n, [(gamma, k), ...])`.
pub fn locality_settings() -> Vec<(usize, Vec<(usize, usize)>)> {
    vec![
        (8, vec![(4, 2)]),
        (16, vec![(8, 2)]),
        (24, vec![(12, 3)]),
        (64, vec![(16, 4)]),
        (32, vec![(16, 2), (4, 2)]),
        (128, vec![(32, 2), (8, 2), (2, 1)]),
    ]
}

fn schedule_label(s: &[(usize, usize)]) -> String {
    s.iter().map(|(g, k)| format!("{g}/{k}")).collect::<Vec<_>>().join(" ")
}

fn locality(seed: u64, scale: Scale, rng: &mut ChaCha8Rng) -> anyhow::Result<Vec<ExperimentRecord>> {
    let per = scale.pick(200, 2_000);
    let mut out = Vec::new();
    for (n, schedule) in locality_settings() {
        let params = ModeParams::Toy { schedule: schedule.clone() };
        let tree = build_pairing(&params, n)?;
        let failures = (0..per).filter(|_| !median_locality_check(&sample_instance(&tree, rng)).holds).count();
        out.push(
            ExperimentRecord::new("locality", seed)
                .param("n", n)
                .param("schedule", schedule_label(&schedule))
                .measure("samples", per as f64)
                .measure("failures", failures as f64)
                .with_pass(failures == 0),
        );
    }
    Ok(out)
}

fn basecase(seed: u64, rng: &mut ChaCha8Rng) -> anyhow::Result<Vec<ExperimentRecord>> {
    let leaf = build_pairing(&ModeParams::Toy { schedule: vec![] }, 4)?;
    let trials = 100_000;
    let freq = basecase_bit_distribution(&leaf, rng, trials)?;
    let (ones, total) = basecase_bit_exact(&leaf)?;
    Ok(vec![ExperimentRecord::new("basecase", seed)
        .param("pairs", 4)
        .measure("trials", trials as f64)
        .measure("frequency", freq)
        .measure("exact", ones as f64 / total as f64)
        .with_pass((freq - 0.5).abs() <= 0.01)])
}

fn niceness(seed: u64, scale: Scale, rng: &mut ChaCha8Rng) -> anyhow::Result<Vec<ExperimentRecord>> {
    let trials = scale.pick(2_000, 10_000);
    let mut out = Vec::new();
    // Single-level toy trees: shell = n - gamma with gamma = shell, k = 1.
    for shell in (2..=20).step_by(2) {
        let n = 2 * shell;
        let tree = build_pairing(&ModeParams::Toy { schedule: vec![(shell, 1)] }, n)?;
        let mut fails = 0;
        for _ in 0..trials {
            let inst = sample_instance(&tree, rng);
            if !random_pair_partition(inst, rng)?.nice {
                fails += 1;
            }
        }
        let p = rational_to_f64(&niceness_failure_exact(n as u64, shell as u64)?);
        let mc = fails as f64 / trials as f64;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        out.push(
            ExperimentRecord::new("niceness", seed)
                .param("shell", shell)
                .param("n", n)
                .measure("exact", p)
                .measure("monte_carlo", mc)
                .measure("sigma", sigma)
                .with_pass((mc - p).abs() <= 3.0 * sigma),
        );
    }
    Ok(out)
}

fn assignment(seed: u64, scale: Scale, rng: &mut ChaCha8Rng) -> anyhow::Result<Vec<ExperimentRecord>> {
    let per = scale.pick(10, 100);
    let mut out = Vec::new();
    for (k, n) in [(1usize, 24usize), (2, 48), (3, 72)] {
        let mut ok = 0;
        let mut min_a = usize::MAX;
        let mut min_b = usize::MAX;
        for _ in 0..per {
            let seq = random_query_sequence(n, k, rng);
            let segs = segment_split(&seq, n, k)?;
            let a = find_assignment(&segs, n, k, rng)?;
            min_a = min_a.min(a.n_a);
            min_b = min_b.min(a.n_b);
            ok += usize::from(a.alice_bound_met() && a.bob_bound_met());
        }
        out.push(
            ExperimentRecord::new("assignment", seed)
                .param("k", k)
                .param("n", n)
                .measure("sequences", per as f64)
                .measure("met", ok as f64)
                .measure("min_n_a", min_a as f64)
                .measure("min_n_b", min_b as f64)
                .with_pass(ok == per),
        );
    }
    Ok(out)
}

fn protocol(seed: u64, scale: Scale, rng: &mut ChaCha8Rng) -> anyhow::Result<Vec<ExperimentRecord>> {
    let programs = scale.pick(4, 20);
    let per = scale.pick(25, 50);
    let n = 8;
    let mut out = Vec::new();
    for k in [1usize, 2] {
        let (mut runs, mut bad_output, mut bad_shape) = (0, 0, 0);
        let mut max_messages = 0;
        for _ in 0..programs {
            let seq = random_query_sequence(n, k, rng);
            let bp = oblivious_median_program(&seq, n)?;
            let segs = segment_split(&seq, n, k)?;
            let a = find_assignment(&segs, n, k, rng)?;
            let max_small = 2 * a.n_a.min(a.n_b).min(n / 2);
            let space = bp.space().ceil() as u32;
            for _ in 0..per {
                let n_small = 2 * rng.gen_range(1..=max_small / 2);
                let emb = a.embedding(n_small)?;
                let small = random_distinct_input(n_small, rng);
                let (full, c) = embed_instance(&small, &emb)?;
                let run = protocol_from_bp(&bp, &a, &emb, &small[..n_small / 2], &small[n_small / 2..])?;
                let direct = (bp.evaluate_deterministic(&full)? & 1) as u8 ^ c;
                runs += 1;
                bad_output += usize::from(run.output != direct);
                let body = run.message_count() - 1;
                max_messages = max_messages.max(body);
                bad_shape += usize::from(body > 4 * k || run.max_message_bits() > space);
            }
        }
        out.push(
            ExperimentRecord::new("protocol", seed)
                .param("k", k)
                .param("n", n)
                .measure("runs", runs as f64)
                .measure("output_mismatches", bad_output as f64)
                .measure("shape_violations", bad_shape as f64)
                .measure("max_messages", max_messages as f64)
                .with_pass(bad_output == 0 && bad_shape == 0),
        );
    }
    Ok(out)
}

fn ratio(seed: u64, scale: Scale) -> anyhow::Result<Vec<ExperimentRecord>> {
    let ns: Vec<u64> = scale.pick(vec![64, 128, 256], vec![64, 128, 256, 512, 1024, 2048, 4096]);
    let mut out = Vec::new();
    for &n in &ns {
        let (points, fails, worst) = ratio_grid(n)?;
        out.push(
            ExperimentRecord::new("ratio", seed)
                .param("n", n)
                .param("check", "binomial")
                .measure("points", points as f64)
                .measure("failures", fails as f64)
                .measure("worst_log_excess", worst)
                .with_pass(fails == 0),
        );
        let (points, fails) = j_ratio_grid(n)?;
        out.push(
            ExperimentRecord::new("ratio", seed)
                .param("n", n)
                .param("check", "j_distribution")
                .measure("points", points as f64)
                .measure("failures", fails as f64)
                .with_pass(fails == 0),
        );
    }
    Ok(out)
}

/// Grid `0 <= delta <= sqrt(n)`, `0 <= gamma <= n/16`: (points, failures,
/// largest `ln(ratio / bound)`).
pub fn ratio_grid(n: u64) -> anyhow::Result<(usize, usize, f64)> {
    let root = (n as f64).sqrt().floor() as u64;
    let (mut points, mut fails, mut worst) = (0, 0, f64::NEG_INFINITY);
    for delta in 0..=root {
        for gamma in 0..=n / 16 {
            if delta + gamma > n / 8 {
                continue;
            }
            let r = binomial_ratio_bound(n, delta, gamma)?;
            points += 1;
            fails += usize::from(!r.holds);
            let excess = log_ratio(&r.ratio) - log_ratio(&r.bound);
            worst = worst.max(excess);
        }
    }
    Ok((points, fails, worst))
}

fn log_ratio(r: &num_rational::BigRational) -> f64 {
    let (num, den) = (r.numer(), r.denom());
    let ln = |b: &num_bigint::BigInt| {
        let bits = b.bits();
        let shift = bits.saturating_sub(60);
        (b >> shift).to_f64().expect("fits").ln() + shift as f64 * std::f64::consts::LN_2
    };
    ln(num) - ln(den)
}

/// j-distribution max/min ratio against the same bound, on the grid where the
/// binomial arguments stay at or below the centre: `ys = n/4`, top argument
/// `ys/2 - delta`, spread `gamma - gamma/k`.
pub fn j_ratio_grid(n: u64) -> anyhow::Result<(usize, usize)> {
    let ys = n / 4;
    let root = (n as f64).sqrt().floor() as u64;
    let row = binomial_row(ys);
    let (mut points, mut fails) = (0, 0);
    for k in [2u64, 4] {
        for gamma in (2 * k..=n / 16).step_by(2 * k as usize) {
            for delta in 0..=root {
                if delta + gamma > n / 8 {
                    continue;
                }
                let step = gamma / k;
                let d = j_distribution_from_row(&row, delta, gamma, k, ys + step)?;
                let Some(r) = d.max_min_ratio() else { continue };
                let bound = binomial_ratio_bound(n, delta, gamma)?.bound;
                points += 1;
                fails += usize::from(r > bound);
            }
        }
    }
    Ok((points, fails))
}

/// Random joint table with `rows x cols` cells.
pub fn random_joint<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let w: Vec<Vec<f64>> = (0..rows).map(|_| (0..cols).map(|_| rng.gen::<f64>()).collect()).collect();
    let total: f64 = w.iter().flatten().sum();
    w.into_iter().map(|r| r.into_iter().map(|x| x / total).collect()).collect()
}

fn pinsker(seed: u64, scale: Scale, rng: &mut ChaCha8Rng) -> anyhow::Result<Vec<ExperimentRecord>> {
    let tables = scale.pick(1_000, 10_000);
    let mut fails = 0;
    let mut min_gap = f64::INFINITY;
    for _ in 0..tables {
        let joint = random_joint(rng.gen_range(1..=8), rng.gen_range(1..=8), rng);
        let c = pinsker_check(&joint)?;
        fails += usize::from(!c.holds);
        min_gap = min_gap.min(c.rhs - c.lhs);
    }
    Ok(vec![ExperimentRecord::new("pinsker", seed)
        .measure("tables", tables as f64)
        .measure("failures", fails as f64)
        .measure("min_slack", min_gap)
        .with_pass(fails == 0)])
}

/// Alice-first protocol whose first message is a random `m1`-bit function of
/// her input, followed by a constant output message.
pub fn random_first_message<R: Rng + ?Sized>(inputs: usize, m1: u32, rng: &mut R) -> ToyProtocol {
    let table: Vec<u64> = (0..inputs).map(|_| rng.gen_range(0..1u64 << m1)).collect();
    let first: MessageFn = Arc::new(move |x, _| table[x]);
    let out: MessageFn = Arc::new(|_, _| 0);
    ToyProtocol::new(Party::Alice, vec![m1, 1], vec![first, out]).expect("valid shape")
}

fn chain(seed: u64, scale: Scale, rng: &mut ChaCha8Rng) -> anyhow::Result<Vec<ExperimentRecord>> {
    let count = scale.pick(50, 1_000);
    let mut fails = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let k = rng.gen_range(1..=3);
        let m1 = rng.gen_range(1..=2);
        let d = PairDistribution::new(random_joint(2, 2, rng))?;
        let problem = build_f_power_k(FTable::xor(), d, k)?;
        let proto = random_first_message(problem.alice_inputs(), m1, rng);
        let report = information_chain_check(&proto, &problem)?;
        fails += usize::from(!report.holds);
        for s in &report.steps {
            let slack = if s.inequality { s.rhs - s.lhs } else { (s.lhs - s.rhs).abs() };
            worst = worst.max(slack);
        }
    }
    Ok(vec![ExperimentRecord::new("chain", seed)
        .measure("protocols", count as f64)
        .measure("failures", fails as f64)
        .measure("worst_violation", worst)
        .with_pass(fails == 0)])
}

/// Random distribution over `outcomes` points; roughly a quarter of the mass
/// points are zeroed.
pub fn random_distribution<R: Rng + ?Sized>(outcomes: usize, rng: &mut R) -> Distribution {
    loop {
        let w: Vec<f64> = (0..outcomes).map(|_| if rng.gen_bool(0.25) { 0.0 } else { rng.gen() }).collect();
        if w.iter().any(|&x| x > 0.0) {
            return Distribution::from_weights(&w).expect("positive mass");
        }
    }
}

fn corr(seed: u64, scale: Scale, rng: &mut ChaCha8Rng) -> anyhow::Result<Vec<ExperimentRecord>> {
    let pairs = scale.pick(20, 100);
    let trials = scale.pick(2_000, 10_000);
    let mut out = Vec::new();
    let (mut bad_disagree, mut bad_marginal, mut cells) = (0, 0, 0);
    let mut stream = RngStream(ChaCha8Rng::seed_from_u64(rng.gen()));
    for _ in 0..pairs {
        let outcomes = rng.gen_range(2..=16);
        let p = random_distribution(outcomes, rng);
        let q = random_distribution(outcomes, rng);
        let d = statistical_distance(&p, &q)?;
        let (mut differ, mut hp, mut hq) = (0usize, vec![0usize; outcomes], vec![0usize; outcomes]);
        for _ in 0..trials {
            let (a, b) = correlated_sample(&p, &q, &mut stream)?;
            differ += usize::from(a != b);
            hp[a] += 1;
            hq[b] += 1;
        }
        let t = trials as f64;
        let bound = (2.0 * d).min(1.0);
        let sd = (bound * (1.0 - bound) / t).sqrt();
        bad_disagree += usize::from(differ as f64 / t > 2.0 * d + 3.0 * sd);
        for (dist, hits) in [(&p, &hp), (&q, &hq)] {
            for u in 0..outcomes {
                let pu = dist.get(u);
                let sd = (pu * (1.0 - pu) / t).sqrt();
                cells += 1;
                bad_marginal += usize::from((hits[u] as f64 / t - pu).abs() > 3.0 * sd);
            }
        }
    }
    out.push(
        ExperimentRecord::new("corr", seed)
            .param("check", "disagreement")
            .measure("pairs", pairs as f64)
            .measure("trials", trials as f64)
            .measure("failures", bad_disagree as f64)
            .with_pass(bad_disagree == 0),
    );
    out.push(
        ExperimentRecord::new("corr", seed)
            .param("check", "marginals")
            .measure("cells", cells as f64)
            .measure("failures", bad_marginal as f64)
            .with_pass(bad_marginal == 0),
    );
    Ok(out)
}

fn roundelim(seed: u64, scale: Scale) -> anyhow::Result<Vec<ExperimentRecord>> {
    let k = 8;
    let m1 = 1;
    let problem = build_f_power_k(FTable::xor(), PairDistribution::uniform(2, 2), k)?;
    let proto = indexed_protocol(&problem, m1)?;
    let delta = delta_for(m1, k);
    let opts = EliminationOptions { candidates: scale.pick(32, 256), seed, ..Default::default() };
    let e = eliminate_first_message(&proto, &problem, delta, &opts)?;
    Ok(vec![ExperimentRecord::new("roundelim", seed)
        .param("f", "xor")
        .param("k", k)
        .param("m1", m1)
        .measure("epsilon", e.epsilon)
        .measure("delta", e.delta)
        .measure("expected_error", e.expected_error)
        .measure("epsilon_prime", e.fixed_error)
        .with_pass(e.fixed_error <= e.epsilon + e.delta + 0.05)])
}

fn select(seed: u64, scale: Scale) -> anyhow::Result<Vec<ExperimentRecord>> {
    let ns: Vec<u64> = scale.pick(vec![10_000, 100_000], vec![10_000, 100_000, 1_000_000, 10_000_000]);
    let seeds = scale.pick(5, 100);
    let ss = [16usize, 256, 4096];
    let mut out = Vec::new();
    for &n in &ns {
        let rank = n.div_ceil(2);
        // (max multipass passes, total sampling passes, wrong answers) per s.
        let mut acc = vec![(0usize, 0usize, 0usize); ss.len()];
        for t in 0..seeds {
            let run_seed = seed.wrapping_mul(1000).wrapping_add(t);
            let input = Arc::new(synthetic_input(n, run_seed));
            let truth = oracle_select(&input, rank);
            for (i, &s) in ss.iter().enumerate() {
                let a = run_select(Algo::Multipass, &mut StreamReader::from_shared(input.clone()), s, rank, run_seed)?;
                let b = run_select(Algo::Sampling, &mut StreamReader::from_shared(input.clone()), s, rank, run_seed)?;
                acc[i].0 = acc[i].0.max(a.passes);
                acc[i].1 += b.passes;
                acc[i].2 += usize::from(a.value != truth) + usize::from(b.value != truth);
            }
        }
        for (i, &s) in ss.iter().enumerate() {
            let (mp, sp, wrong) = acc[i];
            let mean = sp as f64 / seeds as f64;
            out.push(
                ExperimentRecord::new("select", seed)
                    .param("algo", "multipass")
                    .param("n", n)
                    .param("s", s)
                    .measure("max_passes", mp as f64)
                    .measure("bound", multipass_bound(n, s) as f64)
                    .measure("wrong", wrong as f64)
                    .with_pass(mp <= multipass_bound(n, s) && wrong == 0),
            );
            out.push(
                ExperimentRecord::new("select", seed)
                    .param("algo", "sampling")
                    .param("n", n)
                    .param("s", s)
                    .measure("mean_passes", mean)
                    .measure("bound", sampling_bound(n, s) as f64)
                    .measure("wrong", wrong as f64)
                    .with_pass(mean <= sampling_bound(n, s) as f64 && wrong == 0),
            );
        }
    }
    Ok(out)
}
