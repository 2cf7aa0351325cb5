//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::path::Path;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use paprika::harness::cli::run_tables;
use paprika::harness::{parse_spec, run_experiment, ResultRow};
use paprika::metrics::{fdp_hat, wealth_trace, FdpHatVariant};
use paprika::models::binom_tail_pvalue;
use paprika::noise::{prob_shift_dominates, sample_laplace, LaplaceScale, PrivacyBudget, ScriptedUniform};
use paprika::procedures::{
    run_procedure, GammaSequence, LambdaSchedule, Lord, Paprika, ProcedureConfig, ProcedureId, StepRecord,
};
use paprika::HypothesisStream;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Cell = (f64, f64);

/// Reference (FDR, power) per pi1 row; private columns per epsilon 3, 5, 10.
struct TableRow {
    pi1: f64,
    paprika_ai: [Cell; 3],
    paprika: [Cell; 3],
    saffron_ai: Cell,
    saffron: Cell,
    lord: Cell,
    alpha_investing: Cell,
    lap_saffron: Cell,
}

const EPSILONS: [f64; 3] = [3.0, 5.0, 10.0];

#[rustfmt::skip]
const TABLE1: [TableRow; 5] = [
    TableRow { pi1: 0.01, paprika_ai: [(0.0, 0.825), (0.0, 0.833), (0.0, 0.833)], paprika: [(0.0, 0.817), (0.0, 0.833), (0.0, 0.833)],
        saffron_ai: (0.0, 0.833), saffron: (0.0, 0.833), lord: (0.0, 0.833), alpha_investing: (0.0, 0.833), lap_saffron: (0.990, 0.485) },
    TableRow { pi1: 0.02, paprika_ai: [(0.0, 0.844), (0.0, 0.916), (0.0, 0.941)], paprika: [(0.017, 0.810), (0.001, 0.900), (0.0, 0.938)],
        saffron_ai: (0.0, 0.938), saffron: (0.0, 0.938), lord: (0.0, 0.938), alpha_investing: (0.0, 0.875), lap_saffron: (0.973, 0.509) },
    TableRow { pi1: 0.03, paprika_ai: [(0.008, 0.457), (0.006, 0.694), (0.015, 0.849)], paprika: [(0.103, 0.389), (0.018, 0.670), (0.007, 0.808)],
        saffron_ai: (0.077, 0.923), saffron: (0.0, 0.846), lord: (0.0, 0.846), alpha_investing: (0.0, 0.692), lap_saffron: (0.977, 0.509) },
    TableRow { pi1: 0.04, paprika_ai: [(0.003, 0.604), (0.003, 0.756), (0.060, 0.860)], paprika: [(0.120, 0.580), (0.035, 0.740), (0.008, 0.836)],
        saffron_ai: (0.030, 0.970), saffron: (0.0, 0.879), lord: (0.0, 0.940), alpha_investing: (0.0, 0.848), lap_saffron: (0.943, 0.512) },
    TableRow { pi1: 0.05, paprika_ai: [(0.009, 0.560), (0.007, 0.815), (0.017, 0.938)], paprika: [(0.168, 0.514), (0.053, 0.785), (0.012, 0.922)],
        saffron_ai: (0.056, 0.971), saffron: (0.056, 0.971), lord: (0.105, 0.971), alpha_investing: (0.056, 0.971), lap_saffron: (0.940, 0.505) },
];

#[rustfmt::skip]
const TABLE2: [TableRow; 5] = [
    TableRow { pi1: 0.01, paprika_ai: [(0.0, 0.995), (0.0, 1.0), (0.0, 1.0)], paprika: [(0.0, 0.987), (0.0, 1.0), (0.0, 1.0)],
        saffron_ai: (0.0, 1.0), saffron: (0.0, 1.0), lord: (0.0, 1.0), alpha_investing: (0.0, 0.638), lap_saffron: (0.989, 0.543) },
    TableRow { pi1: 0.02, paprika_ai: [(0.0, 0.936), (0.0, 0.994), (0.0, 0.999)], paprika: [(0.0, 0.903), (0.0, 0.993), (0.0, 1.0)],
        saffron_ai: (0.0, 1.0), saffron: (0.0, 1.0), lord: (0.0, 0.999), alpha_investing: (0.0, 0.676), lap_saffron: (0.973, 0.505) },
    TableRow { pi1: 0.03, paprika_ai: [(0.0, 0.708), (0.0, 0.958), (0.0, 0.999)], paprika: [(0.005, 0.618), (0.0, 0.942), (0.0, 0.996)],
        saffron_ai: (0.0, 1.0), saffron: (0.0, 1.0), lord: (0.0, 1.0), alpha_investing: (0.0, 0.982), lap_saffron: (0.977, 0.516) },
    TableRow { pi1: 0.04, paprika_ai: [(0.0, 0.569), (0.0, 0.905), (0.0, 0.998)], paprika: [(0.003, 0.474), (0.0, 0.873), (0.0, 0.996)],
        saffron_ai: (0.0, 1.0), saffron: (0.0, 1.0), lord: (0.0, 1.0), alpha_investing: (0.0, 0.999), lap_saffron: (0.944, 0.503) },
    TableRow { pi1: 0.05, paprika_ai: [(0.0, 0.394), (0.0, 0.825), (0.0, 0.990)], paprika: [(0.007, 0.327), (0.002, 0.726), (0.0, 0.986)],
        saffron_ai: (0.0, 1.0), saffron: (0.0, 1.0), lord: (0.0, 1.0), alpha_investing: (0.0, 1.0), lap_saffron: (0.940, 0.505) },
];

fn find(rows: &[ResultRow], pi1: f64, id: ProcedureId, eps: Option<f64>) -> &ResultRow {
    rows.iter()
        .find(|r| (r.pi1 - pi1).abs() < 1e-12 && r.procedure == id && r.epsilon == eps)
        .unwrap_or_else(|| panic!("missing row pi1={pi1} {id} eps={eps:?}"))
}

/// Checks |power - reference| <= tol over the given cells; returns the
/// number of misses and a description of the worst.
fn compare_power(rows: &[ResultRow], cells: &[(f64, ProcedureId, Option<f64>, f64)], tol: f64) -> (usize, String) {
    let mut misses = 0;
    let mut worst = (0.0, String::new());
    for &(pi1, id, eps, reference) in cells {
        let got = find(rows, pi1, id, eps).summary.mean_power;
        let dev = (got - reference).abs();
        // NaN counts as a miss
        if dev.is_nan() || dev > tol {
            misses += 1;
        }
        if dev > worst.0 || dev.is_nan() {
            let eps = eps.map_or(String::new(), |e| format!(" eps={e}"));
            worst = (dev, format!("pi1={pi1} {id}{eps}: {got:.3} vs {reference:.3}"));
        }
    }
    (misses, worst.1)
}

fn private_cells(table: &[TableRow]) -> Vec<(f64, ProcedureId, Option<f64>, f64)> {
    let mut out = Vec::new();
    for row in table {
        for (i, eps) in EPSILONS.iter().enumerate() {
            out.push((row.pi1, ProcedureId::PaprikaAi, Some(*eps), row.paprika_ai[i].1));
            out.push((row.pi1, ProcedureId::Paprika, Some(*eps), row.paprika[i].1));
        }
    }
    out
}

struct Report {
    failures: usize,
    last: Instant,
}

impl Report {
    fn line(&mut self, id: &str, pass: bool, detail: String) {
        let took = self.last.elapsed().as_secs_f64();
        self.last = Instant::now();
        println!("{} criterion {id}: {detail} [{took:.1}s]", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failures += 1;
        }
    }
}

fn table_criterion(rows: &[ResultRow], table: &[TableRow], elapsed: Duration) -> (bool, String) {
    let cells = private_cells(table);
    let (misses, worst) = compare_power(rows, &cells, 0.08);
    let max_fdr = rows.iter().map(|r| r.summary.mean_fdr).fold(0.0, f64::max);
    let private_fdr = rows.iter().filter(|r| r.procedure.uses_shift()).map(|r| r.summary.mean_fdr).fold(0.0, f64::max);
    let fast = elapsed <= Duration::from_secs(600);
    let pass = misses == 0 && private_fdr <= 0.2 && fast;
    let detail = format!(
        "{}/{} private power cells within 0.08 (worst {worst}); max private FDR {private_fdr:.3} (all procedures {max_fdr:.3}); both tables in {:.1}s",
        cells.len() - misses,
        cells.len(),
        elapsed.as_secs_f64()
    );
    (pass, detail)
}

fn baseline_criterion(t1: &[ResultRow], t2: &[ResultRow]) -> (bool, String) {
    let mut tight = Vec::new();
    let mut loose = Vec::new();
    for (rows, table, name) in [(t1, &TABLE1, "table 1"), (t2, &TABLE2, "table 2")] {
        let saffron: Vec<_> = table
            .iter()
            .flat_map(|r| {
                [
                    (r.pi1, ProcedureId::SaffronAi, None, r.saffron_ai.1),
                    (r.pi1, ProcedureId::Saffron, None, r.saffron.1),
                ]
            })
            .collect();
        let other: Vec<_> = table
            .iter()
            .flat_map(|r| {
                [
                    (r.pi1, ProcedureId::Lord, None, r.lord.1),
                    (r.pi1, ProcedureId::AlphaInvesting, None, r.alpha_investing.1),
                ]
            })
            .collect();
        let (m1, w1) = compare_power(rows, &saffron, 0.05);
        let (m2, w2) = compare_power(rows, &other, 0.10);
        tight.push((name, m1, saffron.len(), w1));
        loose.push((name, m2, other.len(), w2));
    }
    let pass = tight.iter().chain(&loose).all(|t| t.1 == 0);
    let fmt = |v: &[(&str, usize, usize, String)]| {
        v.iter().map(|(n, m, len, w)| format!("{n} {}/{len} (worst {w})", len - m)).collect::<Vec<_>>().join(", ")
    };
    (pass, format!("SAFFRON within 0.05: {}; LORD/alpha-investing within 0.10: {}", fmt(&tight), fmt(&loose)))
}

fn lap_criterion(t1: &[ResultRow], t2: &[ResultRow]) -> (bool, String) {
    let lap: Vec<_> = t1.iter().chain(t2).filter(|r| r.procedure == ProcedureId::LapSaffron).collect();
    let min_fdr = lap.iter().map(|r| r.summary.mean_fdr).fold(f64::INFINITY, f64::min);
    let max_power = lap.iter().map(|r| r.summary.mean_power).fold(0.0, f64::max);
    let reference = TABLE1.iter().chain(&TABLE2).map(|row| row.lap_saffron);
    let ref_fdr = reference.clone().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let ref_power = reference.map(|c| c.1).fold(0.0, f64::max);
    (
        min_fdr >= 0.85 && max_power <= 0.60,
        format!(
            "{} cells, min FDR {min_fdr:.3} (>= 0.85, reference {ref_fdr:.3}), max power {max_power:.3} (<= 0.60, reference {ref_power:.3})",
            lap.len()
        ),
    )
}

const SLACK: f64 = 0.03;

fn monotone_criterion(t1: &[ResultRow], t2: &[ResultRow], jobs: Option<usize>) -> (bool, String) {
    let mut eps_violations = Vec::new();
    for (rows, name) in [(t1, "table 1"), (t2, "table 2")] {
        for pi1 in [0.01, 0.02, 0.03, 0.04, 0.05] {
            for id in [ProcedureId::PaprikaAi, ProcedureId::Paprika] {
                let p: Vec<f64> =
                    [10.0, 5.0, 3.0].iter().map(|e| find(rows, pi1, id, Some(*e)).summary.mean_power).collect();
                if p[1] > p[0] + SLACK || p[2] > p[1] + SLACK {
                    eps_violations.push(format!("{name} pi1={pi1} {id} {:.3}/{:.3}/{:.3}", p[0], p[1], p[2]));
                }
            }
        }
    }

    let shift = parse_spec(include_str!("../specs/shift.spec"), "shift.spec").unwrap();
    let shift_rows = run_experiment(&shift, jobs).expect("shift study runs");
    let mut s_violations = Vec::new();
    for &pi1 in &shift.pi1_grid {
        for id in [ProcedureId::PaprikaAi, ProcedureId::Paprika] {
            let p: Vec<f64> = shift
                .s_grid
                .iter()
                .map(|s| {
                    shift_rows
                        .iter()
                        .find(|r| r.pi1 == pi1 && r.procedure == id && r.s == Some(*s))
                        .unwrap()
                        .summary
                        .mean_power
                })
                .collect();
            if p.windows(2).any(|w| w[1] > w[0] + SLACK) {
                s_violations.push(format!("pi1={pi1} {id} {p:.3?}"));
            }
        }
    }

    let signal = parse_spec(include_str!("../specs/signal.spec"), "signal.spec").unwrap();
    let signal_rows = run_experiment(&signal, jobs).expect("signal study runs");
    let mut theta_violations = Vec::new();
    for &pi1 in &signal.pi1_grid {
        for id in [ProcedureId::PaprikaAi, ProcedureId::Paprika] {
            let p: Vec<f64> = signal
                .theta_alt_grid
                .iter()
                .map(|t| {
                    signal_rows
                        .iter()
                        .find(|r| r.pi1 == pi1 && r.procedure == id && r.theta_alt == *t)
                        .unwrap()
                        .summary
                        .mean_power
                })
                .collect();
            if p.windows(2).any(|w| w[1] + SLACK < w[0]) {
                theta_violations.push(format!("pi1={pi1} {id} {p:.3?}"));
            }
        }
    }
    let pass = eps_violations.is_empty() && s_violations.is_empty() && theta_violations.is_empty();
    let show = |v: &[String]| if v.is_empty() { "none".to_string() } else { v.join("; ") };
    (
        pass,
        format!(
            "violations beyond {SLACK}: epsilon 10>5>3: {}; s 0.5..2: {}; theta 1.90..2.00: {}",
            show(&eps_violations),
            show(&s_violations),
            show(&theta_violations)
        ),
    )
}

fn shift_dominance_criterion() -> (bool, String) {
    const N: u64 = 10_000_000;
    let mut worst: (f64, String) = (0.0, String::new());
    let mut pass = true;
    let mut rng = ChaCha8Rng::seed_from_u64(0x1e33a2);
    for b in [0.25, 0.5, 1.0, 2.0, 4.0] {
        // Z1 ~ Lap(2b), Z2 ~ Lap(b)
        let wide = LaplaceScale::new(2.0 * b).unwrap();
        let narrow = LaplaceScale::new(b).unwrap();
        for c in [0.0, 0.1, 0.5, 1.0, 3.0] {
            let mut hits = 0u64;
            for _ in 0..N {
                let z1 = sample_laplace(wide, &mut rng);
                let z2 = sample_laplace(narrow, &mut rng);
                hits += u64::from(z1 >= z2 - c);
            }
            let exact = prob_shift_dominates(b, c).unwrap();
            let mc = hits as f64 / N as f64;
            let se = (exact * (1.0 - exact) / N as f64).sqrt();
            let z = (mc - exact).abs() / se;
            if z > 3.0 {
                pass = false;
            }
            if z > worst.0 {
                worst = (z, format!("b={b} C={c}: closed form {exact:.6}, MC {mc:.6}"));
            }
        }
    }
    (pass, format!("25 grid points, 1e7 samples each; worst |z| = {:.2} at {}", worst.0, worst.1))
}

fn random_config(rng: &mut ChaCha8Rng, k: usize) -> ProcedureConfig {
    let alpha = rng.random_range(0.05..0.3);
    let gamma = if rng.random_bool(0.5) {
        GammaSequence::constant(k)
    } else {
        GammaSequence::power_decay(rng.random_range(0.5..2.0), k)
    };
    ProcedureConfig {
        alpha,
        w0: alpha * rng.random_range(0.1..0.9),
        lambda: LambdaSchedule::Constant(rng.random_range(0.05..0.45)),
        gamma,
        c: rng.random_range(1..60),
        budget: PrivacyBudget::new(rng.random_range(0.5..20.0), rng.random_range(1e-6..1e-2)).unwrap(),
        s: rng.random_range(0.25..2.0),
        k,
    }
}

fn random_stream(rng: &mut ChaCha8Rng, k: usize) -> HypothesisStream {
    let pi1 = rng.random_range(0.0..0.5);
    let power = rng.random_range(2.0..40.0);
    let mut p = Vec::with_capacity(k);
    let mut null = Vec::with_capacity(k);
    for _ in 0..k {
        let is_null = !rng.random_bool(pi1);
        let u: f64 = rng.random();
        p.push(if is_null { u } else { u.powf(power) });
        null.push(is_null);
    }
    HypothesisStream::new(p, null, rng.random_range(0.01..0.2), 1e-300).unwrap()
}

fn check_transcript(id: ProcedureId, config: &ProcedureConfig, records: &[StepRecord]) -> Option<String> {
    const EPS: f64 = 1e-12;
    let rejections = records.iter().filter(|r| r.rejected).count();
    if id.uses_shift() && rejections > config.c as usize {
        return Some(format!("{id}: {rejections} rejections > c = {}", config.c));
    }
    if let Some(r) = records.iter().find(|r| r.rejected && !r.candidate) {
        return Some(format!("{id}: rejection without candidacy at t = {}", r.t));
    }
    let variant = if id.uses_shift() { FdpHatVariant::Paprika } else { FdpHatVariant::Saffron };
    if let Some((t, x)) = fdp_hat(records, variant).iter().enumerate().find(|(_, x)| **x > config.alpha + EPS) {
        return Some(format!("{id}: FDP-hat {x} > alpha {} at t = {}", config.alpha, t + 1));
    }
    if let Some((t, w)) = wealth_trace(records, config, id.wealth_rule()).iter().enumerate().find(|(_, w)| **w < -EPS) {
        return Some(format!("{id}: wealth {w} < 0 at t = {}", t + 1));
    }
    None
}

fn exact_tail(n: u32, t: u32) -> f64 {
    // sum_{i >= t} C(n, i) / 2^n with exact integers, then a correctly
    // rounded quotient through 64-bit mantissas.
    let mut c = BigUint::from(1u32);
    let mut sum = BigUint::from(0u32);
    for i in 0..=n {
        if i >= t {
            sum += &c;
        }
        c = c * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    let bits = sum.bits() as i64;
    let shift = (bits - 64).max(0);
    let mantissa = (&sum >> shift as usize).iter_u64_digits().next().unwrap_or(0) as f64;
    mantissa * 2f64.powi((shift - i64::from(n)) as i32)
}

fn invariant_criterion() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a7);
    let mut problems = Vec::new();
    let ids = [ProcedureId::Paprika, ProcedureId::PaprikaAi, ProcedureId::Saffron, ProcedureId::SaffronAi];
    for _ in 0..1000 {
        let k = rng.random_range(20..300);
        let config = random_config(&mut rng, k);
        let stream = random_stream(&mut rng, k);
        for id in ids {
            let records = run_procedure(id, &config, &stream, &mut rng).unwrap();
            if let Some(p) = check_transcript(id, &config, &records) {
                problems.push(p);
            }
        }
    }

    let mut worst_rel = 0.0f64;
    for n in [1u32, 2, 7, 50, 101, 500, 1000] {
        for t in 0..=n {
            let exact = exact_tail(n, t);
            let ours = binom_tail_pvalue(n, t).unwrap();
            worst_rel = worst_rel.max(((ours - exact) / exact).abs());
        }
    }
    if worst_rel > 1e-12 {
        problems.push(format!("binomial tail relative error {worst_rel:e}"));
    }

    let mut collapse_mismatches = 0;
    for _ in 0..100 {
        let k = rng.random_range(20..400);
        let mut config = random_config(&mut rng, k);
        config.c = k as u32;
        let stream = random_stream(&mut rng, k);
        let mut zero = ScriptedUniform::zero_noise();
        let mut paprika =
            Paprika::new(&config, stream.sensitivity_eta(), &mut zero).unwrap().with_shift(0.0).without_candidacy();
        let mut lord = Lord::new(&config).unwrap();
        for &p in stream.pvalues() {
            paprika.step(p, &mut zero);
            lord.step(p);
        }
        if paprika.rejection_times() != lord.rejection_times() {
            collapse_mismatches += 1;
        }
    }
    if collapse_mismatches > 0 {
        problems
            .push(format!("{collapse_mismatches}/100 streams where zero-noise PAPRIKA with A = 0 differs from LORD"));
    }

    let pass = problems.is_empty();
    let detail = format!(
        "1000 random configs x 4 procedures (cap, candidacy gate, FDP-hat <= alpha, wealth >= 0); binomial tail worst rel err {worst_rel:.1e}; LORD collapse on 100 streams; {}",
        if pass { "no violations".to_string() } else { problems.into_iter().take(5).collect::<Vec<_>>().join("; ") }
    );
    (pass, detail)
}

fn files_equal(a: &Path, b: &Path) -> bool {
    match (std::fs::read(a), std::fs::read(b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

fn main() {
    let mut report = Report { failures: 0, last: Instant::now() };
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();

    let start = Instant::now();
    let (t1, t2) = run_tables(first.path(), None, None).expect("tables run");
    let elapsed = start.elapsed();

    let (pass, detail) = table_criterion(&t1, &TABLE1, elapsed);
    report.line("1 (Bernoulli table, private procedures)", pass, detail);
    let (pass, detail) = table_criterion(&t2, &TABLE2, elapsed);
    report.line("2 (truncated-exponential table, private procedures)", pass, detail);
    let (pass, detail) = baseline_criterion(&t1, &t2);
    report.line("3 (non-private baselines)", pass, detail);
    let (pass, detail) = lap_criterion(&t1, &t2);
    report.line("4 (naive Laplace baseline fails)", pass, detail);
    let (pass, detail) = monotone_criterion(&t1, &t2, None);
    report.line("5 (monotone trends)", pass, detail);
    let (pass, detail) = shift_dominance_criterion();
    report.line("6 (Laplace difference closed form vs Monte Carlo)", pass, detail);
    let (pass, detail) = invariant_criterion();
    report.line("7 (invariant suites)", pass, detail);

    run_tables(second.path(), None, Some(1)).expect("second tables run");
    let same = ["table1.csv", "table2.csv"].iter().all(|f| files_equal(&first.path().join(f), &second.path().join(f)));
    report.line(
        "8 (determinism)",
        same,
        format!("two tables runs (all threads vs --jobs 1): CSVs {}", if same { "byte-identical" } else { "differ" }),
    );

    println!("{} of 8 criteria failed", report.failures);
    if report.failures > 0 {
        std::process::exit(1);
    }
}
