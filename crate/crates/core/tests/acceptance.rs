//! Acceptance suite. Each criterion is checked against an oracle computed
//! here (closed forms, brute-force enumeration) rather than against library
//! helpers, and prints one PASS/FAIL line.

#![allow(clippy::needless_range_loop)]

use std::process::ExitCode;
use std::time::{Duration, Instant};

use dlmc::dynamics::{
    conductance_flow, default_dt, dmala_row, euler_row, full_rate_matrix, first_jump, integrate_dwgf,
    interpolated_row, matrix_exponential, Adjacency, RateRow, SquareMatrix, WeightFunction,
};
use dlmc::harness::{ordering_config, run_with_model};
use dlmc::model::{generate_params, Bernoulli, IsingPotts, LocalRatios, ShapeConfig};
use dlmc::samplers::{proposal_rows, run_chain, tune, ChainState, MoveLaw, SamplerConfig, SamplerKind, TuneStatus};
use dlmc::{DenseDistribution, EnergyModel, Model, RatioSource, State};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Check = Result<String, String>;

const REFERENCE_THREADS: usize = 4;

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn g_value(g: WeightFunction, t: f64) -> f64 {
    match g {
        WeightFunction::Sqrt => t.sqrt(),
        WeightFunction::Barker => t / (1.0 + t),
    }
}

fn brute_pi<M: EnergyModel + ?Sized>(model: &M) -> Vec<f64> {
    let (n, c) = (model.dim(), model.n_categories());
    let size = c.pow(n as u32);
    let e: Vec<f64> = (0..size)
        .map(|i| model.energy_of(State::from_index(i, n, c).values()))
        .collect();
    let min = e.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = e.iter().map(|v| (min - v).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|v| v / z).collect()
}

fn tv(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| a * (a / b).ln())
        .sum()
}

fn uniforms(rng: &mut ChaCha8Rng, n: usize, s: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-s..s)).collect()
}

fn local(lr: &[f64]) -> LocalRatios {
    LocalRatios {
        site: 0,
        log_ratios: lr.to_vec(),
    }
}

fn random_log_ratios(rng: &mut ChaCha8Rng, c: usize, current: usize, spread: f64) -> Vec<f64> {
    (0..c)
        .map(|j| if j == current { 0.0 } else { rng.random_range(-spread..=spread) })
        .collect()
}

fn c2_exactness() -> Check {
    let grid: Vec<f64> = (0..7).map(|i| 10f64.powi(i - 3)).collect();
    let (mut worst_row, mut worst_expm): (f64, f64) = (0.0, 0.0);
    for &a in &grid {
        for &b in &grid {
            for &h in &grid {
                // Two-state chain: P_01 = a/(a+b) (1 − e^{−(a+b)h}).
                let s = a + b;
                let m = -(-s * h).exp_m1();
                let closed = [[1.0 - a / s * m, a / s * m], [b / s * m, 1.0 - b / s * m]];
                let q = SquareMatrix::from_rows(&[vec![-a, a], vec![b, -b]]).unwrap();
                let p = matrix_exponential(&q, h).unwrap();
                let rows = [
                    interpolated_row(&RateRow::from_rates(0, 0, &[0.0, a]).unwrap(), &local(&[0.0, (a / b).ln()]), 0, h),
                    interpolated_row(&RateRow::from_rates(0, 1, &[b, 0.0]).unwrap(), &local(&[(b / a).ln(), 0.0]), 1, h),
                ];
                for i in 0..2 {
                    for j in 0..2 {
                        worst_row = worst_row.max((rows[i].probs[j] - p.get(i, j)).abs());
                        worst_expm = worst_expm.max((p.get(i, j) - closed[i][j]).abs());
                    }
                }
            }
        }
    }
    ensure(
        worst_row < 1e-10 && worst_expm < 1e-10,
        format!("max |interpolated − expm| {worst_row:.2e}, max |expm − closed form| {worst_expm:.2e} (tol 1e-10)"),
    )
}

fn boundary_conditions() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut one_hot_misses, mut worst_inf, mut worst_fd) = (0, 0f64, 0f64);
    for c in [2usize, 4, 8] {
        for k in 0..100 {
            let current = rng.random_range(0..c);
            let lr = random_log_ratios(&mut rng, c, current, 2.0);
            let g = if k % 2 == 0 { WeightFunction::Sqrt } else { WeightFunction::Barker };
            let rate = RateRow::from_log_ratios(0, current, &lr, g);
            let mut q: Vec<f64> = lr.iter().map(|l| g_value(g, l.exp())).collect();
            q[current] = 0.0;
            q[current] = -q.iter().sum::<f64>();
            let z: f64 = lr.iter().map(|l| l.exp()).sum();
            let nu: Vec<f64> = lr.iter().map(|l| l.exp() / z).collect();

            let p0 = interpolated_row(&rate, &local(&lr), current, 0.0);
            if (0..c).any(|j| p0.probs[j] != if j == current { 1.0 } else { 0.0 }) {
                one_hot_misses += 1;
            }
            let pinf = interpolated_row(&rate, &local(&lr), current, 1e9);
            worst_inf = worst_inf.max((0..c).map(|j| (pinf.probs[j] - nu[j]).abs()).fold(0.0, f64::max));
            let h = 1e-6;
            let ph = interpolated_row(&rate, &local(&lr), current, h);
            for j in 0..c {
                let fd = (ph.probs[j] - p0.probs[j]) / h;
                worst_fd = worst_fd.max((fd - q[j]).abs() / q[j].abs());
            }
        }
    }
    ensure(
        one_hot_misses == 0 && worst_inf < 1e-9 && worst_fd < 1e-4,
        format!("h=0 misses {one_hot_misses}, |P(1e9) − ν| {worst_inf:.2e}, FD rel err {worst_fd:.2e}"),
    )
}

fn exactness_models() -> Vec<(&'static str, Model)> {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    vec![
        ("bernoulli N=6", Bernoulli::new(6, 2, uniforms(&mut rng, 12, 1.0)).unwrap().into()),
        ("ising 2x3", IsingPotts::new(2, 3, 2, uniforms(&mut rng, 12, 0.8), 0.4).unwrap().into()),
        ("potts N=4 C=3", IsingPotts::new(2, 2, 3, uniforms(&mut rng, 12, 0.8), 0.4).unwrap().into()),
    ]
}

fn chain_exactness() -> Check {
    let models = exactness_models();
    let samplers = [
        SamplerConfig::new(SamplerKind::Rwm).with_flips(1),
        SamplerConfig::new(SamplerKind::BlockGibbs).with_block_size(2),
        SamplerConfig::new(SamplerKind::HammingBall).with_block_size(3),
        SamplerConfig::new(SamplerKind::Gwg),
        SamplerConfig::new(SamplerKind::Pas).with_flips(3),
        SamplerConfig::new(SamplerKind::Dmala).with_step(1.0),
        SamplerConfig::new(SamplerKind::Dlmcf).with_step(0.5),
        SamplerConfig::new(SamplerKind::Dlmc).with_step(1.0),
    ];
    let pis: Vec<Vec<f64>> = models.iter().map(|(_, m)| brute_pi(m)).collect();
    let jobs: Vec<(usize, usize, u64)> = (0..models.len())
        .flat_map(|m| (0..samplers.len()).flat_map(move |s| (0..3).map(move |seed| (m, s, seed))))
        .collect();
    let steps = 200_000;
    let results: Vec<(usize, usize, f64)> = jobs
        .par_iter()
        .map(|&(m, s, seed)| {
            let model = &models[m].1;
            let mut chain = ChainState::random(model, 7_000 + seed).unwrap();
            run_chain(&mut chain, model, &samplers[s], 2_000, |_| {}).unwrap();
            let mut counts = vec![0.0; pis[m].len()];
            run_chain(&mut chain, model, &samplers[s], steps, |x| counts[x.index()] += 1.0 / steps as f64).unwrap();
            (m, s, tv(&counts, &pis[m]))
        })
        .collect();
    let &(m, s, worst) = results.iter().max_by(|a, b| a.2.total_cmp(&b.2)).unwrap();
    ensure(
        worst < 0.02,
        format!("worst TV {worst:.4} ({} on {}) over 8 kinds × 3 models × 3 seeds", samplers[s].label(), models[m].0),
    )
}

fn tiny_models(seed: u64) -> Vec<Model> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        IsingPotts::new(2, 2, 2, uniforms(&mut rng, 8, 1.0), 0.5).unwrap().into(),
        IsingPotts::new(2, 2, 3, uniforms(&mut rng, 12, 1.0), -0.4).unwrap().into(),
        Bernoulli::new(3, 3, uniforms(&mut rng, 9, 1.5)).unwrap().into(),
        IsingPotts::new(1, 4, 2, uniforms(&mut rng, 8, 1.0), 0.3).unwrap().into(),
        Bernoulli::new(5, 2, uniforms(&mut rng, 10, 1.0)).unwrap().into(),
    ]
}

fn dwgf_descent() -> Check {
    let (mut worst_rise, mut worst_final) = (f64::NEG_INFINITY, 0f64);
    for (i, model) in tiny_models(104).iter().enumerate() {
        let g = if i % 2 == 0 { WeightFunction::Sqrt } else { WeightFunction::Barker };
        let pi = brute_pi(model);
        let full = full_rate_matrix(model, g).unwrap();
        let start = (0..pi.len()).min_by(|&a, &b| pi[a].total_cmp(&pi[b])).unwrap();
        let rho0 = DenseDistribution::point_mass(pi.len(), start).unwrap();
        let path = integrate_dwgf(&full, &rho0, 50.0, default_dt(&full)).map_err(|e| e.to_string())?;
        let kls: Vec<f64> = path.iter().map(|p| kl(&p.rho, &pi)).collect();
        for w in kls.windows(2) {
            worst_rise = worst_rise.max(w[1] - w[0]);
        }
        worst_final = worst_final.max(*kls.last().unwrap());
    }
    ensure(
        worst_rise <= 1e-12 && worst_final < 1e-8,
        format!("largest per-step KL change {worst_rise:.2e}, final KL {worst_final:.2e}"),
    )
}

fn conductance_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let adj = Adjacency::hamming(3, 2);
    let mut worst: f64 = 0.0;
    let simplex = |rng: &mut ChaCha8Rng| {
        let w: Vec<f64> = (0..8).map(|_| rng.random_range(0.05..1.0)).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|v| v / z).collect::<Vec<f64>>()
    };
    for k in 0..100 {
        let rho = simplex(&mut rng);
        let pi = simplex(&mut rng);
        let energies: Vec<f64> = pi.iter().map(|p| -p.ln()).collect();
        let g = if k % 2 == 0 { WeightFunction::Sqrt } else { WeightFunction::Barker };
        let got = conductance_flow(&rho, &pi, &energies, &adj, g).unwrap();
        // Master equation on the 3-cube: neighbors differ in one bit.
        let want: Vec<f64> = (0..8)
            .map(|j| {
                (0..3)
                    .map(|b| {
                        let i = j ^ (1 << b);
                        rho[i] * g_value(g, pi[j] / pi[i]) - rho[j] * g_value(g, pi[i] / pi[j])
                    })
                    .sum()
            })
            .collect();
        let scale = want.iter().fold(0f64, |m, v| m.max(v.abs()));
        let err = got.iter().zip(&want).fold(0f64, |m, (a, b)| m.max((a - b).abs()));
        worst = worst.max(err / scale);
    }
    ensure(worst < 1e-10, format!("max relative error {worst:.2e} over 100 pairs"))
}

fn first_jump_law() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let g = WeightFunction::Sqrt;
    let (mut worst_law, mut worst_tv): (f64, f64) = (0.0, 0.0);
    for model in tiny_models(107).into_iter().take(3) {
        let (n, c) = (model.dim(), model.n_categories());
        let x = State::random(n, c, &mut rng);
        let fx = model.energy_of(x.values());
        let mut oracle = vec![0.0; n * c];
        for site in 0..n {
            for v in (0..c).filter(|&v| v != x.get(site)) {
                let fy = model.energy_of(x.with_site(site, v).values());
                oracle[site * c + v] = g_value(g, (fx - fy).exp());
            }
        }
        let z: f64 = oracle.iter().sum();
        oracle.iter_mut().for_each(|p| *p /= z);

        let table = dlmc::model::grad_log_ratios(&model, &x).unwrap();
        let law = MoveLaw::new(&x, &table, g).probs();
        worst_law = worst_law.max(oracle.iter().zip(&law).fold(0.0, |m, (a, b)| m.max((a - b).abs())));

        let paths = 100_000;
        let mut counts = vec![0.0; n * c];
        for _ in 0..paths {
            let j = first_jump(&model, &x, g, &mut rng).unwrap().unwrap();
            counts[j.site * c + j.value] += 1.0 / paths as f64;
        }
        worst_tv = worst_tv.max(tv(&counts, &law));
    }
    ensure(
        worst_tv < 0.02 && worst_law < 1e-12,
        format!("TV(first jump, GWG law) {worst_tv:.4} at 1e5 paths; |GWG law − brute rates| {worst_law:.1e}"),
    )
}

fn lb_identity() -> Check {
    let mut worst: f64 = 0.0;
    let mut worst_closed: f64 = 0.0;
    for g in [WeightFunction::Sqrt, WeightFunction::Barker] {
        for k in 0..=3600 {
            let l = -18.0 + 0.01 * k as f64;
            worst = worst.max((g.log_g(l) - (l + g.log_g(-l))).abs());
            let closed = g_value(g, l.exp()).ln();
            worst_closed = worst_closed.max((g.log_g(l) - closed).abs());
        }
    }
    ensure(
        worst < 1e-12 && worst_closed < 1e-12,
        format!("max identity residual {worst:.1e}, max deviation from ln g(e^l) {worst_closed:.1e}"),
    )
}

fn ising_high() -> Model {
    let shape = ShapeConfig::desk_preset("ising-high").unwrap();
    let model = generate_params(&shape, 0).unwrap();
    assert_eq!(model.dim(), 256);
    model
}

fn tuner_targets() -> Check {
    let model = ising_high();
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let mut lines = Vec::new();
    let mut ok = true;
    for (kind, target) in [(SamplerKind::Dlmc, 0.574), (SamplerKind::Rwm, 0.234)] {
        let r = tune(&SamplerConfig::new(kind), &model, target, 2000, &mut rng).map_err(|e| e.to_string())?;
        ok &= (r.trailing_acceptance - target).abs() <= 0.05 && r.status == TuneStatus::Converged;
        lines.push(format!("{} {:.3} (target {target})", kind.name(), r.trailing_acceptance));
    }
    ensure(ok, lines.join(", "))
}

fn efficiency_ordering() -> (Check, Option<(String, String)>) {
    let config = ordering_config();
    let model = config.model.build().unwrap();
    let result = match run_with_model(&config, &model, REFERENCE_THREADS) {
        Ok(r) => r,
        Err(e) => return (Err(e.to_string()), None),
    };
    let med = |kind: SamplerKind| {
        result
            .samplers
            .iter()
            .find(|s| config.samplers[s.sampler].kind == kind)
            .map(|s| s.median_ess_per_eval)
            .unwrap()
    };
    let (dlmc, dlmcf, dmala, rwm) = (
        med(SamplerKind::Dlmc),
        med(SamplerKind::Dlmcf),
        med(SamplerKind::Dmala),
        med(SamplerKind::Rwm),
    );
    let check = ensure(
        dlmc >= dmala && dmala >= rwm && dlmcf >= dmala,
        format!("median ess/eval dlmc {dlmc:.3e}, dlmcf {dlmcf:.3e}, dmala {dmala:.3e}, rwm {rwm:.3e}"),
    );
    let bytes = result.csv().ok().zip(result.summary_json().ok());
    (check, bytes)
}

fn factorized_degeneration() -> Check {
    let (mut worst_acc, mut worst_row) = (1f64, 0f64);
    for name in ["bernoulli-high", "bernoulli-low", "bernoulli-c4", "bernoulli-c8"] {
        let model = generate_params(&ShapeConfig::desk_preset(name).unwrap(), 1).unwrap();
        let config = SamplerConfig::new(SamplerKind::Dlmc)
            .with_step(1e9)
            .with_ratio_source(RatioSource::Gradient);
        let mut chain = ChainState::random(&model, 3).unwrap();
        run_chain(&mut chain, &model, &config, 200, |_| {}).unwrap();
        worst_acc = worst_acc.min(chain.record.acceptance_rate());
        let x = chain.x().clone();
        let c = model.n_categories();
        for (n, row) in proposal_rows(&model, &x, &config).unwrap().iter().enumerate() {
            // Independent sites: the conditional at n is the marginal.
            let e: Vec<f64> = (0..c).map(|v| model.energy_of(x.with_site(n, v).values())).collect();
            let min = e.iter().copied().fold(f64::INFINITY, f64::min);
            let z: f64 = e.iter().map(|v| (min - v).exp()).sum();
            for v in 0..c {
                worst_row = worst_row.max((row.probs[v] - (min - e[v]).exp() / z).abs());
            }
        }
    }
    ensure(
        worst_acc >= 0.999 && worst_row < 1e-8,
        format!("min acceptance {worst_acc:.4}, max row error {worst_row:.1e}"),
    )
}

fn dlmcf_dmala_structure() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    let (mut worst_prop, mut worst_formula, mut self_violations) = (0f64, 0f64, 0);
    for _ in 0..1000 {
        let c = rng.random_range(2..=8);
        let current = rng.random_range(0..c);
        let lr = random_log_ratios(&mut rng, c, current, 3.0);
        let alpha: f64 = rng.random_range(0.05..3.0);
        let h = (-1.0 / (2.0 * alpha)).exp();
        let e = euler_row(&RateRow::from_log_ratios(0, current, &lr, WeightFunction::Sqrt), current, h).row;
        let d = dmala_row(&local(&lr), current, alpha);

        let off: Vec<usize> = (0..c).filter(|&j| j != current).collect();
        let w: Vec<f64> = (0..c)
            .map(|j| if j == current { 1.0 } else { (0.5 * lr[j] - 1.0 / (2.0 * alpha)).exp() })
            .collect();
        let zd: f64 = w.iter().sum();
        let rates: Vec<f64> = (0..c).map(|j| if j == current { 0.0 } else { (0.5 * lr[j]).exp() }).collect();
        let exit: f64 = rates.iter().sum();
        let euler: Vec<f64> = if h * exit <= 1.0 {
            (0..c).map(|j| if j == current { 1.0 - h * exit } else { h * rates[j] }).collect()
        } else {
            rates.iter().map(|r| r / exit).collect()
        };
        for j in 0..c {
            worst_formula = worst_formula
                .max((d.probs[j] - w[j] / zd).abs())
                .max((e.probs[j] - euler[j]).abs());
        }
        let k0 = e.probs[off[0]] / d.probs[off[0]];
        for &j in &off[1..] {
            worst_prop = worst_prop.max((e.probs[j] / d.probs[j] / k0 - 1.0).abs());
        }
        if e.probs[current] > d.probs[current] {
            self_violations += 1;
        }
    }
    ensure(
        worst_prop < 1e-12 && worst_formula < 1e-12 && self_violations == 0,
        format!(
            "off-diagonal proportionality {worst_prop:.1e}, row formula error {worst_formula:.1e}, self-mass violations {self_violations}"
        ),
    )
}

fn determinism(first: Option<(String, String)>) -> Check {
    let Some((csv, json)) = first else {
        return Err("reference run did not complete".into());
    };
    let config = ordering_config();
    let model = config.model.build().unwrap();
    let again = run_with_model(&config, &model, 1).map_err(|e| e.to_string())?;
    let same_csv = again.csv().map_err(|e| e.to_string())? == csv;
    let same_json = again.summary_json().map_err(|e| e.to_string())? == json;
    ensure(
        same_csv && same_json,
        format!(
            "re-run on 1 thread vs {REFERENCE_THREADS}: csv identical {same_csv}, summary identical {same_json}"
        ),
    )
}

struct Outcome {
    id: usize,
    name: &'static str,
    check: Check,
    elapsed: Duration,
    budget: Duration,
}

fn timed(id: usize, name: &'static str, budget_secs: u64, f: impl FnOnce() -> Check) -> Outcome {
    let start = Instant::now();
    let check = f();
    Outcome {
        id,
        name,
        check,
        elapsed: start.elapsed(),
        budget: Duration::from_secs(budget_secs),
    }
}

fn report(o: &Outcome) -> bool {
    let in_budget = o.elapsed <= o.budget;
    let ok = o.check.is_ok() && in_budget;
    let msg = match &o.check {
        Ok(m) | Err(m) => m,
    };
    let budget = if in_budget { String::new() } else { format!(" [over {}s budget]", o.budget.as_secs()) };
    println!(
        "{} {:>2} {:<26} {:>7.2}s  {msg}{budget}",
        if ok { "PASS" } else { "FAIL" },
        o.id,
        o.name,
        o.elapsed.as_secs_f64()
    );
    ok
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut all = true;
    let mut run = |o: Outcome| all &= report(&o);
    run(timed(1, "c2 exactness", 5, c2_exactness));
    run(timed(2, "boundary conditions", 5, boundary_conditions));
    run(timed(3, "chain exactness", 300, chain_exactness));
    run(timed(4, "dwgf descent", 30, dwgf_descent));
    run(timed(5, "conductance equivalence", 5, conductance_equivalence));
    run(timed(6, "first-jump law", 30, first_jump_law));
    run(timed(7, "lb identity", 1, lb_identity));
    run(timed(8, "tuner targets", 120, tuner_targets));
    let mut reference = None;
    run(timed(9, "efficiency ordering", 600, || {
        let (check, bytes) = efficiency_ordering();
        reference = bytes;
        check
    }));
    run(timed(10, "factorized degeneration", 30, factorized_degeneration));
    run(timed(11, "dlmcf/dmala structure", 5, dlmcf_dmala_structure));
    run(timed(12, "determinism", 600, || determinism(reference.take())));
    if all {
        println!("acceptance: all 12 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    }
}
