//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails that is not listed in `KNOWN_FAILURES`.
//!
//! The Monte-Carlo criteria share a single Configuration-1 sweep of 10⁵
//! trials; run with `cargo test --release --test acceptance` for speed.

use std::process::ExitCode;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Binomial, DiscreteCDF};
use surfnet::code::{choose_code_distance, num_data_qubits, syndrome, CodeLayout};
use surfnet::decode::{build_decoding_graphs, decode, QubitWeights};
use surfnet::experiment::{
    max_threshold, sample_trials, sweep, sweep_with, Execution, ProtocolConfig, SweepRecord,
};
use surfnet::lattice::{sample_entanglement_pattern, EntanglementPattern, GridSpec, Site};
use surfnet::pauli::{compose_depolarizing, effective_swap_rate, Pauli, PauliFrame};
use surfnet::rates::{
    bandwidth, post_distillation, required_duration, DistillationSpec, FiberLoss, HardwarePreset,
};
use surfnet::rearrange::{
    assign_qubits, assign_to_targets, candidate_centers, cell_origin, clamp_center, plan_schedule,
    replay_schedule, select_placement, RouteWeight,
};
use surfnet::report::sweep_csv_string;
use surfnet::rng::TrialStreams;
use surfnet::Error;

/// Criteria that are recorded as not reproduced (see the README).
const KNOWN_FAILURES: &[u32] = &[4, 5];

const SWEEP_TRIALS: usize = 100_000;
const SWEEP_SEED: u64 = 2024;
const SWEEP_E_SWAPS: [f64; 3] = [0.03, 0.01, 0.005];
/// Two-sided tail probability of a 3σ Gaussian deviation.
const THREE_SIGMA: f64 = 0.0027;

struct Gate {
    failures: Vec<u32>,
}

impl Gate {
    fn report(&mut self, id: u32, name: &str, pass: bool, detail: String) {
        let tag = match (pass, KNOWN_FAILURES.contains(&id)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("[{tag}] {id:>2} {name}: {detail}");
        if !pass && !KNOWN_FAILURES.contains(&id) {
            self.failures.push(id);
        }
    }
}

fn swap_rate_exactness() -> (bool, String) {
    let target = 0.02 - 4.0 / 3.0 * 1e-4;
    let mut worst = (effective_swap_rate(0.01) - target).abs();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let e: f64 = rng.gen_range(0.0..=0.5);
        worst = worst.max((compose_depolarizing(e, e) - effective_swap_rate(e)).abs());
    }
    (worst <= 1e-12, format!("max deviation {worst:.1e}"))
}

fn distance_rule() -> (bool, String) {
    let mut mismatches = 0;
    for m in 0..=500usize {
        let best = (1..).take_while(|&d| d * d + (d - 1) * (d - 1) <= m).last();
        let got = choose_code_distance(m, None, 3);
        let ok = match (best, &got) {
            (Some(d), Ok(g)) if d >= 3 => *g == d,
            (_, Err(Error::InsufficientEntanglement { .. })) => best.is_none_or(|d| d < 3),
            _ => false,
        };
        mismatches += usize::from(!ok);
    }
    let boundary = [(13, 3), (85, 7), (113, 8)]
        .iter()
        .all(|&(m, d)| choose_code_distance(m, None, 3) == Ok(d));
    (
        mismatches == 0 && boundary,
        format!("{mismatches} mismatches over M in [0, 500]; 13->3, 85->7, 113->8 {}", if boundary { "ok" } else { "wrong" }),
    )
}

fn binomial_p_value(k: usize, n: usize, q: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let b = Binomial::new(q, n as u64).unwrap();
    let lower = b.cdf(k as u64);
    let upper = if k == 0 { 1.0 } else { b.sf(k as u64 - 1) };
    (2.0 * lower.min(upper)).min(1.0)
}

struct ExactTable {
    /// Probability of acceptance at each threshold.
    accept: Vec<f64>,
    /// Probability of acceptance together with a logical error.
    error: Vec<f64>,
}

fn exact_d3(layout: &CodeLayout, ps: &[f64]) -> Vec<ExactTable> {
    let n = layout.num_data();
    let graphs = build_decoding_graphs(layout, &QubitWeights::Uniform);
    let mask_of = |bits: &[bool]| bits.iter().enumerate().fold(0u32, |m, (i, &b)| m | (u32::from(b) << i));
    let lx = layout.logical_x_support().iter().fold(0u32, |m, &q| m | 1 << q);
    let lz = layout.logical_z_support().iter().fold(0u32, |m, &q| m | 1 << q);
    let size = 1usize << n;
    // X and Z components decode independently
    let mut z_corr = vec![0u32; size];
    let mut z_flip = vec![false; size];
    let mut x_corr = vec![0u32; size];
    let mut x_flip = vec![false; size];
    for mask in 0..size as u32 {
        for (pauli, corr, flip, logical) in [
            (Pauli::Z, &mut z_corr, &mut z_flip, lx),
            (Pauli::X, &mut x_corr, &mut x_flip, lz),
        ] {
            let mut f = PauliFrame::identity(n);
            for q in 0..n {
                if mask >> q & 1 == 1 {
                    f.set(q, pauli);
                }
            }
            let c = decode(&graphs, &syndrome(layout, &f));
            let cm = if pauli == Pauli::Z { mask_of(&c.z_correction) } else { mask_of(&c.x_correction) };
            corr[mask as usize] = cm;
            flip[mask as usize] = ((mask ^ cm) & logical).count_ones() % 2 == 1;
        }
    }
    let weights: Vec<Vec<f64>> = ps
        .iter()
        .map(|&p| (0..=n).map(|w| (1.0 - p).powi((n - w) as i32) * (p / 3.0).powi(w as i32)).collect())
        .collect();
    let mut accept = vec![vec![0.0; n + 1]; ps.len()];
    let mut error = vec![vec![0.0; n + 1]; ps.len()];
    for x in 0..size {
        for z in 0..size {
            let w = (x as u32 | z as u32).count_ones() as usize;
            let est = (x_corr[x] | z_corr[z]).count_ones() as usize;
            let bad = x_flip[x] || z_flip[z];
            for (i, table) in weights.iter().enumerate() {
                accept[i][est] += table[w];
                if bad {
                    error[i][est] += table[w];
                }
            }
        }
    }
    accept
        .into_iter()
        .zip(error)
        .map(|(a, e)| {
            let cum = |v: Vec<f64>| {
                v.iter()
                    .scan(0.0, |acc, x| {
                        *acc += x;
                        Some(*acc)
                    })
                    .collect()
            };
            ExactTable { accept: cum(a), error: cum(e) }
        })
        .collect()
}

fn d3_oracle() -> (bool, String) {
    let grid = GridSpec::new(5).unwrap();
    let layout = CodeLayout::new(3, Site::new(0, 0), grid).unwrap();
    let pattern = EntanglementPattern::new(grid, layout.global_data_sites()).unwrap();
    let ps = [0.01, 0.05];
    let exact = exact_d3(&layout, &ps);
    let n = layout.num_data();
    let w_thrs: Vec<usize> = (0..=n).collect();
    let trials = 100_000;
    let mut worst = 1.0f64;
    let mut sane = true;
    for (&p, table) in ps.iter().zip(&exact) {
        let cfg = ProtocolConfig::new(5, 1.0, p).unwrap().with_fixed_pattern(pattern.clone());
        let recs = sweep(&cfg, &[0.0], &w_thrs, trials, 31).unwrap();
        for rec in &recs {
            let w = rec.params.w_thr;
            let Some(row) = rec.row(3) else {
                sane = false;
                continue;
            };
            sane &= row.n_d == trials && row.median_total_swaps == 0.0;
            let acc = table.accept[w].min(1.0);
            worst = worst.min(binomial_p_value(row.n_acc, trials, acc));
            if acc > 0.0 {
                let e = (table.error[w] / table.accept[w]).min(1.0);
                worst = worst.min(binomial_p_value(row.n_err, row.n_acc, e));
            }
        }
    }
    let total = exact[0].accept[n];
    sane &= (total - 1.0).abs() < 1e-9;
    (
        sane && worst >= THREE_SIGMA,
        format!(
            "smallest two-sided p-value {worst:.4} over p in {{0.01, 0.05}}, w_thr 0..=13; exact e_log(p=0.05, w_thr=13) = {:.4e}",
            exact[1].error[n] / exact[1].accept[n]
        ),
    )
}

fn record(recs: &[SweepRecord], e_swap: f64, w_thr: usize) -> &SweepRecord {
    recs.iter()
        .find(|r| r.params.e_swap == e_swap && r.params.w_thr == w_thr)
        .expect("swept point")
}

fn operating_point(recs: &[SweepRecord]) -> (bool, String) {
    let rec = record(recs, 0.03, 5);
    let Some(row) = rec.row(7) else {
        return (false, "no d = 7 trials".into());
    };
    let e = row.e_log;
    let pass = e.is_some_and(|e| (0.0075..=0.03).contains(&e)) && (0.055..=0.22).contains(&row.p_log);
    (
        pass,
        format!(
            "d=7 N_d={} N_acc={} N_err={} p_log={:.4e} e_log={} median swaps {}",
            row.n_d,
            row.n_acc,
            row.n_err,
            row.p_log,
            e.map_or("NA".into(), |e| format!("{e:.4e}")),
            row.median_total_swaps
        ),
    )
}

fn existence_claim(recs: &[SweepRecord]) -> (bool, String) {
    let mut best: Option<(usize, f64, f64)> = None;
    let mut closest = None;
    for rec in recs.iter().filter(|r| r.params.e_swap == 0.01) {
        let Some(row) = rec.row(7) else { continue };
        let Some(e) = row.e_log else { continue };
        if e <= 1.3e-2 && row.p_log >= 0.7 && best.is_none_or(|b| row.p_log > b.2) {
            best = Some((rec.params.w_thr, e, row.p_log));
        }
        if e <= 1.3e-2 && closest.is_none_or(|(_, _, p)| row.p_log > p) {
            closest = Some((rec.params.w_thr, e, row.p_log));
        }
    }
    match best {
        Some((w, e, p)) => (true, format!("w_thr={w}: e_log={e:.4e}, p_log={p:.4}")),
        None => (
            false,
            match closest {
                Some((w, e, p)) => format!("best with e_log <= 1.3e-2 is w_thr={w}: e_log={e:.4e}, p_log={p:.4}"),
                None => "no threshold reaches e_log <= 1.3e-2".into(),
            },
        ),
    }
}

fn monotonicity() -> (bool, String) {
    let cfg = ProtocolConfig::configuration_1();
    let trials = 2_000;
    let table = sample_trials(&cfg, &[0.01], trials, 77, Execution::default()).unwrap();
    let max_w = max_threshold(cfg.grid);
    let mut violations = 0;
    let mut never_aborted = true;
    for s in &table.samples[0] {
        let mut prev = false;
        for w in 0..=max_w {
            let acc = s.outcome(w).accepted;
            violations += usize::from(prev && !acc);
            prev = acc;
        }
        if let Some(d) = s.realized_d {
            never_aborted &= s.outcome(num_data_qubits(d)).accepted;
        }
    }
    let recs = sweep(&cfg, &[0.01], &(0..=max_w).collect::<Vec<_>>(), trials, 77).unwrap();
    let mut p_log_drops = 0;
    for pair in recs.windows(2) {
        for row in &pair[0].rows {
            let next = pair[1].row(row.d).unwrap();
            p_log_drops += usize::from(next.p_log < row.p_log);
        }
    }
    (
        violations == 0 && p_log_drops == 0 && never_aborted,
        format!(
            "{violations} nesting violations, {p_log_drops} p_log decreases, w_thr = n always accepted: {never_aborted} ({trials} trials)"
        ),
    )
}

fn zero_noise() -> (bool, String) {
    let cfg = ProtocolConfig::new(19, 0.3, 0.0).unwrap();
    let trials = 10_000;
    let recs = sweep(&cfg, &[0.0], &[0, 1, 5, 85], trials, 5).unwrap();
    let mut bad = 0;
    let mut counted = 0;
    for rec in &recs {
        for row in &rec.rows {
            bad += usize::from(row.n_acc != row.n_d || row.n_err != 0);
        }
        counted = rec.rows.iter().map(|r| r.n_d).sum::<usize>() + rec.n_insufficient;
    }
    (bad == 0 && counted == trials, format!("{bad} rows with aborts or errors over {trials} trials"))
}

fn brute_force_assignment(sources: &[Site], targets: &[Site], weight: RouteWeight) -> u64 {
    fn go(t: usize, used: &mut Vec<bool>, sources: &[Site], targets: &[Site], weight: RouteWeight, acc: u64, best: &mut u64) {
        if acc >= *best {
            return;
        }
        if t == targets.len() {
            *best = acc;
            return;
        }
        for s in 0..sources.len() {
            if !used[s] {
                used[s] = true;
                go(t + 1, used, sources, targets, weight, acc + weight.weight(sources[s], targets[t]), best);
                used[s] = false;
            }
        }
    }
    let mut best = u64::MAX;
    go(0, &mut vec![false; sources.len()], sources, targets, weight, 0, &mut best);
    best
}

fn rearrangement() -> (bool, String) {
    let cfg = ProtocolConfig::configuration_1();
    let mut invalid = 0;
    let mut worse_than_nearest = 0;
    let mut swaps = Vec::new();
    for t in 0..1_000u64 {
        let mut streams = TrialStreams::derive(99, t);
        let pattern = sample_entanglement_pattern(cfg.grid, cfg.p_gen, &mut streams.placement).unwrap();
        let Ok(placement) = select_placement(&pattern, &cfg.placement) else {
            continue;
        };
        let plan = &placement.plan;
        let ok = replay_schedule(plan, &pattern).is_ok_and(|r| {
            r.participations == plan.swap_counts
                && r.final_positions.iter().zip(&plan.assignment.pairs).all(|(f, &(_, target))| *f == target)
        });
        invalid += usize::from(!ok);
        swaps.push(plan.total_swaps());

        let d = placement.distance;
        let nearest = clamp_center(candidate_centers(&pattern).unwrap()[0], d, cfg.grid);
        let layout = CodeLayout::new(d, cell_origin(nearest, d), cfg.grid).unwrap();
        let assignment = assign_qubits(&pattern, &layout, cfg.placement.route_weight).unwrap();
        if let Ok(alone) = plan_schedule(&assignment, &pattern) {
            worse_than_nearest += usize::from(plan.total_swaps() > alone.total_swaps());
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut oracle_mismatch = 0;
    for _ in 0..300 {
        let m = rng.gen_range(1..=9);
        let k = rng.gen_range(1..=m);
        let mut site = || Site::new(rng.gen_range(0..12), rng.gen_range(0..12));
        let sources: Vec<Site> = (0..m).map(|_| site()).collect();
        let targets: Vec<Site> = (0..k).map(|_| site()).collect();
        for weight in [RouteWeight::SquaredManhattan, RouteWeight::Manhattan] {
            let a = assign_to_targets(&sources, &targets, weight).unwrap();
            oracle_mismatch += usize::from(a.total_weight != brute_force_assignment(&sources, &targets, weight));
        }
    }

    swaps.sort_unstable();
    let median = swaps[swaps.len() / 2];
    (
        invalid == 0 && worse_than_nearest == 0 && oracle_mismatch == 0 && (100..=600).contains(&median),
        format!(
            "{} plans, {invalid} invalid, {worse_than_nearest} worse than nearest center, {oracle_mismatch} assignment oracle mismatches, median total_swaps {median}",
            swaps.len()
        ),
    )
}

fn rates_regression() -> (bool, String) {
    let free = required_duration(&HardwarePreset::FreeSpace.params(), 0.3).unwrap();
    let cavity = required_duration(&HardwarePreset::Cavity.params(), 0.3).unwrap();
    let bw_free = bandwidth(20.0, 1.0e-3, 1e-3, 1e-3);
    let bw_cavity = bandwidth(20.0, 4.3e-5, 1e-3, 1e-4);
    let close = |x: f64, target: f64, tol: f64| ((x - target) / target).abs() <= tol;

    // independent evaluation of the waiting-time formula
    let long = HardwarePreset::LongDistance.params();
    let formula = |transmittance: f64| {
        let s = 0.5 * (long.eta_ph * long.eta_det * long.eta_cov).powi(2) * transmittance;
        (1.0f64 - 0.3).ln() / (1.0 - s).ln() / long.gamma
    };
    let natural = required_duration(&surfnet::rates::HardwareParams { fiber_loss: FiberLoss::NaturalExp, ..long }, 0.3).unwrap();
    let decibel = required_duration(&long, 0.3).unwrap();
    let natural_ref = formula((-0.21f64 * 33.0 / 10.0).exp());
    let decibel_ref = formula(10f64.powf(-0.21 * 33.0 / 10.0));

    let pass = close(free, 1.0e-3, 0.05)
        && close(cavity, 4.3e-5, 0.05)
        && close(bw_free, 16.7, 0.01)
        && close(bw_cavity, 43.7, 0.01)
        && close(natural, natural_ref, 1e-9)
        && close(natural, 0.09, 0.05)
        && close(decibel, decibel_ref, 1e-9);
    (
        pass,
        format!(
            "tau free-space {free:.4e} s, cavity {cavity:.4e} s; bandwidth {bw_free:.2} Hz, {bw_cavity:.2} Hz; long-distance tau {natural:.4} s (natural-exp loss), {decibel:.4} s (decibel loss)"
        ),
    )
}

fn post_distillation_existence(recs: &[SweepRecord]) -> (bool, String) {
    let spec = DistillationSpec::new(11, 5).unwrap();
    let mut best: Option<(usize, f64, f64, f64)> = None;
    for rec in recs.iter().filter(|r| r.params.e_swap == 0.005) {
        let Some(row) = rec.dominant_row() else { continue };
        // a zero observed error count does not measure e_log
        if row.n_err == 0 {
            continue;
        }
        let e_log = row.e_log.unwrap();
        let post = post_distillation(spec, e_log, row.p_log).unwrap();
        if post.e_post <= 1e-14 && post.n_trial <= 40.0 && best.is_none_or(|b| post.n_trial < b.3) {
            best = Some((rec.params.w_thr, e_log, post.e_post, post.n_trial));
        }
    }
    match best {
        Some((w, e, post, n)) => (true, format!("w_thr={w}: e_log={e:.3e} -> e_post={post:.2e}, N_trial={n:.1}")),
        None => {
            let lowest = recs
                .iter()
                .filter(|r| r.params.e_swap == 0.005)
                .filter_map(|r| r.dominant_row().filter(|row| row.n_err > 0).map(|row| (r.params.w_thr, row)))
                .map(|(w, row)| (w, post_distillation(spec, row.e_log.unwrap(), row.p_log).unwrap()))
                .filter(|(_, p)| p.n_trial <= 40.0)
                .min_by(|a, b| a.1.e_post.total_cmp(&b.1.e_post));
            (
                false,
                match lowest {
                    Some((w, p)) => format!("lowest e_post with N_trial <= 40 is {:.2e} at w_thr={w}", p.e_post),
                    None => "no operating point with N_trial <= 40".into(),
                },
            )
        }
    }
}

fn determinism() -> (bool, String) {
    let cfg = ProtocolConfig::configuration_1();
    let run = |threads: usize, execution: Execution| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| sweep_csv_string(&sweep_with(&cfg, &[0.03, 0.01], &[3, 5, 10], 300, 11, execution).unwrap()))
    };
    let reference = run(1, Execution::Sequential);
    let same = [
        run(1, Execution::Sequential),
        run(1, Execution::Parallel),
        run(4, Execution::Parallel),
        run(4, Execution::Parallel),
    ]
    .iter()
    .all(|csv| *csv == reference);
    (same, format!("{} CSV bytes, identical across runs and 1/4 threads: {same}", reference.len()))
}

fn main() -> ExitCode {
    let mut gate = Gate { failures: Vec::new() };

    let (ok, detail) = swap_rate_exactness();
    gate.report(1, "effective SWAP rate", ok, detail);
    let (ok, detail) = distance_rule();
    gate.report(2, "distance rule", ok, detail);
    let (ok, detail) = d3_oracle();
    gate.report(3, "d=3 exact oracle", ok, detail);

    let grid_max = max_threshold(ProtocolConfig::configuration_1().grid);
    let w_thrs: Vec<usize> = (0..=grid_max).collect();
    let recs = sweep(&ProtocolConfig::configuration_1(), &SWEEP_E_SWAPS, &w_thrs, SWEEP_TRIALS, SWEEP_SEED).unwrap();
    let (ok, detail) = operating_point(&recs);
    gate.report(4, "operating point e_swap=0.03, w_thr=5", ok, detail);
    let (ok, detail) = existence_claim(&recs);
    gate.report(5, "e_swap=0.01 low-error point", ok, detail);

    let (ok, detail) = monotonicity();
    gate.report(6, "threshold monotonicity", ok, detail);
    let (ok, detail) = zero_noise();
    gate.report(7, "zero-noise soundness", ok, detail);
    let (ok, detail) = rearrangement();
    gate.report(8, "rearrangement validity", ok, detail);
    let (ok, detail) = rates_regression();
    gate.report(9, "rates regression", ok, detail);
    let (ok, detail) = post_distillation_existence(&recs);
    gate.report(10, "post-distillation existence", ok, detail);
    let (ok, detail) = determinism();
    gate.report(11, "determinism", ok, detail);

    if gate.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {:?}", gate.failures);
        ExitCode::FAILURE
    }
}
