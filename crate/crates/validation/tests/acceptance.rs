//! Acceptance criteria, one pass/fail line each. Runs without the libtest
//! harness so every criterion reports even when an earlier one fails.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use rand::distr::weighted::WeightedIndex;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use tradeoff_core::analysis::{
    bootstrap_ci, fit_logistic, log_likelihood, poststratify, raw_preference_share, score, BootstrapOptions,
    CellTable, Column, DesignMatrix, FitOptions, FittedModel, ModelKind, PoststratFrame, RespondentFilter,
    ShareSelector, Stratum, Subgroup,
};
use tradeoff_core::elicitation::{
    enumerate_pairs, modal_preference, win_rates, Ballot, Cell, Gender, Party, Race,
};
use tradeoff_core::frontier::{build_frontier, interpolate, parity_point, ArmId, TradeoffArm};
use tradeoff_core::simulator::{
    build_schedule, cost_per_conversion, estimate_endpoints, simulate, Language, SimulationConfig,
    MAXIMIZE_CONVERSIONS_CPC_RATIO,
};
use tradeoff_platform::config::StudyConfig;
use tradeoff_platform::export::{read_export, respondents_from_records, write_export, ExportFormat};
use tradeoff_platform::pipeline::{run_pipeline, PipelineOptions};
use tradeoff_platform::service::{export_log, SurveyService};
use tradeoff_platform::synth::{population_cell_weights, synthesize, CohortPlan, Mix, RespondentType};

type Outcome = Result<String, String>;

struct Criterion {
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn frontier_arithmetic() -> Outcome {
    let p = interpolate(&TradeoffArm::high().endpoints, 0.2).map_err(|e| e.to_string())?;
    let (e, s) = (p.expected.english, p.expected.spanish);
    let exact = (e - 30.2).abs() < 1e-12 && (s - 5.0).abs() < 1e-12;
    let shown = p.expected.rounded();
    check(exact && shown == (30, 5), format!("({e}, {s}) shown as {shown:?}"))
}

fn efficiency_and_parity() -> Outcome {
    let arm = TradeoffArm::high();
    let f = build_frontier(&arm).map_err(|e| e.to_string())?;
    let eff = &f.points[f.efficiency_index().map_err(|e| e.to_string())?];
    let par = parity_point(&f, arm.parity_share).map_err(|e| e.to_string())?;
    let eff_ok = (eff.spanish_share - 3.0 / 39.0).abs() < 1e-12 && eff.spanish_budget_share == 0.0;
    let par_ok = (par.spanish_budget_share - 0.4).abs() < 1e-12 && (par.spanish_share - 0.23).abs() <= 0.01;
    check(
        eff_ok && par_ok,
        format!(
            "efficiency share {:.4} at lambda {}; parity share {:.4} at lambda {}",
            eff.spanish_share, eff.spanish_budget_share, par.spanish_share, par.spanish_budget_share
        ),
    )
}

fn scheduler() -> Outcome {
    let start = NaiveDate::from_ymd_opt(2020, 9, 28).expect("valid date");
    let plan = build_schedule(start, 28, 20201028).map_err(|e| e.to_string())?;
    let mut problems = Vec::new();
    if plan.len() != 28 {
        problems.push(format!("{} days", plan.len()));
    }
    for day in &plan {
        let blocks = |l| {
            let mut v: Vec<u8> = day.blocks(l).iter().map(|b| b.index()).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let (en, es) = (blocks(Language::English), blocks(Language::Spanish));
        if en.len() != 3 || es.len() != 3 || en.iter().any(|b| es.contains(b)) || !day.is_partition() {
            problems.push(format!("{} blocks {en:?}/{es:?}", day.date));
        }
    }
    for w in plan.windows(2) {
        let set = |d: &tradeoff_core::simulator::DaySchedule, l| {
            let mut v: Vec<u8> = d.blocks(l).iter().map(|b| b.index()).collect();
            v.sort_unstable();
            v
        };
        if set(&w[1], Language::English) != set(&w[0], Language::Spanish) {
            problems.push(format!("{} does not alternate", w[1].date));
        }
    }
    check(problems.is_empty(), if problems.is_empty() { "28 days checked".into() } else { problems.join("; ") })
}

fn ballot_set(rng: &mut ChaCha8Rng) -> Vec<Ballot> {
    let mut pairs = enumerate_pairs(6).expect("six options");
    pairs.shuffle(rng);
    pairs
        .into_iter()
        .enumerate()
        .map(|(order, pair)| Ballot {
            respondent_id: "r".into(),
            arm: ArmId::High,
            pair,
            choice: if rng.random::<bool>() { pair.a() } else { pair.b() },
            order,
        })
        .collect()
}

fn win_rate_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let rates = win_rates(&ballot_set(&mut rng), 6).map_err(|e| e.to_string())?;
        let sum: f64 = rates.iter().map(|r| r.ok_or("option never shown")).sum::<Result<f64, _>>()?;
        worst = worst.max((sum / 6.0 - 0.5).abs());
    }
    check(worst <= 1e-12, format!("max deviation {worst:e} over 1000 ballot sets"))
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for (i, &head) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

fn ballots_from(beats: impl Fn(usize, usize) -> bool) -> Vec<Ballot> {
    enumerate_pairs(6)
        .expect("six options")
        .into_iter()
        .enumerate()
        .map(|(order, pair)| Ballot {
            respondent_id: "r".into(),
            arm: ArmId::High,
            pair,
            choice: if beats(pair.a(), pair.b()) { pair.a() } else { pair.b() },
            order,
        })
        .collect()
}

fn modal_oracle() -> Outcome {
    let f = build_frontier(&TradeoffArm::high()).map_err(|e| e.to_string())?;
    let orders = permutations(&[0, 1, 2, 3, 4, 5]);
    let mut wrong = 0;
    for order in &orders {
        let rank = |o: usize| order.iter().position(|&x| x == o).expect("complete order");
        let b = ballots_from(|a, b| rank(a) < rank(b));
        if modal_preference(&b, &f).map_err(|e| e.to_string())? != order[0] {
            wrong += 1;
        }
    }
    // 5 beats 3, 3 beats 1, 1 beats 5; each beats every other option.
    let cycle = [1usize, 3, 5];
    let beats = |a: usize, b: usize| match (cycle.contains(&a), cycle.contains(&b)) {
        (true, true) => matches!((a, b), (5, 3) | (3, 1) | (1, 5)),
        (true, false) => true,
        (false, true) => false,
        (false, false) => a < b,
    };
    let tie = modal_preference(&ballots_from(beats), &f).map_err(|e| e.to_string())?;
    check(
        orders.len() == 720 && wrong == 0 && tie == 1,
        format!("{} orders, {wrong} wrong; cycle {{1,3,5}} resolves to {tie}", orders.len()),
    )
}

/// Intercept plus covariates alternating Bernoulli(0.5) and N(0, 1).
fn synthetic_design(n: usize, beta: &[f64], seed: u64) -> DesignMatrix {
    let mut cols = vec![Column::Intercept];
    cols.extend(Column::demographic().into_iter().take(beta.len() - 1));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = DesignMatrix::new(cols);
    let mut row = vec![0.0; beta.len()];
    for i in 0..n {
        row[0] = 1.0;
        for (j, x) in row.iter_mut().enumerate().skip(1) {
            *x = if j % 2 == 1 {
                f64::from(u8::from(rng.random::<bool>()))
            } else {
                StandardNormal.sample(&mut rng)
            };
        }
        let eta: f64 = row.iter().zip(beta).map(|(x, b)| x * b).sum();
        let y = f64::from(u8::from(rng.random::<f64>() < sigmoid(eta)));
        d.push_encoded(&i.to_string(), &row, y, 1.0);
    }
    d
}

fn logistic_recovery() -> Outcome {
    let beta = [-0.5, 1.0, -1.0, 0.5, 0.0, -0.5, 1.0, 0.0];
    let design = synthetic_design(20_000, &beta, 17);
    let m = fit_logistic(&design, &FitOptions::default()).map_err(|e| e.to_string())?;
    let max_dev = m.coefficients.iter().zip(beta).fold(0.0f64, |a, (b, t)| a.max((b - t).abs()));

    let small = synthetic_design(2_000, &beta, 31);
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let at: Vec<f64> = (0..beta.len()).map(|_| rng.random_range(-1.5..1.5)).collect();
        let g = score(&small, &at, 0.0);
        let h = 1e-5;
        let mut err = 0.0f64;
        for j in 0..at.len() {
            let (mut up, mut down) = (at.clone(), at.clone());
            up[j] += h;
            down[j] -= h;
            let fd = (log_likelihood(&small, &up, 0.0) - log_likelihood(&small, &down, 0.0)) / (2.0 * h);
            err = err.max((g[j] - fd).abs());
        }
        let scale = g.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        worst = worst.max(err / scale);
    }
    check(
        m.converged && max_dev <= 0.1 && worst < 1e-6,
        format!("max coefficient error {max_dev:.4}; max gradient relative error {worst:.2e}"),
    )
}

fn poststratification() -> Outcome {
    let cells = Cell::all();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let raw: Vec<f64> = cells.iter().map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let table = CellTable::new(cells.iter().copied().zip(raw.iter().map(|w| w / total)).collect())
        .map_err(|e| e.to_string())?;
    let truth = |c: &Cell| {
        let d = c.representative();
        let rep = f64::from(u8::from(c.party == Party::Republican));
        let not_male = f64::from(u8::from(c.gender == Gender::NotMale));
        sigmoid(
            -1.2 + 0.9 * rep - 0.4 * not_male + 0.02 * (d.age_value - 45.0) + 0.3 * rep * not_male
                + 0.15 * (d.income_value.ln() - 10.8),
        )
    };
    let mut design = DesignMatrix::new(ModelKind::Observed.columns(&[ArmId::High]));
    for (i, c) in cells.iter().enumerate() {
        design
            .push_row(&i.to_string(), ArmId::High, &c.representative(), 50.0 * truth(c), 50.0)
            .map_err(|e| e.to_string())?;
    }
    let m = fit_logistic(&design, &FitOptions::default()).map_err(|e| e.to_string())?;
    let est = poststratify(&m, &table, Subgroup::All, ArmId::High).map_err(|e| e.to_string())?;
    let direct: f64 = table.entries().iter().map(|(c, w)| w * truth(c)).sum();

    let constant = FittedModel::constant(m.columns.clone(), 0.37);
    let flat = poststratify(&constant, &table, Subgroup::Party(Party::Democrat), ArmId::High)
        .map_err(|e| e.to_string())?;
    let p_const = sigmoid((0.37f64 / 0.63).ln());
    check(
        cells.len() == 3840 && (est - direct).abs() < 0.01 && (flat - p_const).abs() <= 1e-12,
        format!(
            "{} cells; estimate {est:.5} vs brute force {direct:.5}; constant model {flat} vs {p_const}",
            cells.len()
        ),
    )
}

/// Poststratified bootstrap study on a party, gender and race model whose
/// respondents aggregate into at most 20 binomial rows.
struct CoverageStudy {
    columns: Vec<Column>,
    beta: Vec<f64>,
    population: CellTable,
    frame: PoststratFrame,
    sampler: WeightedIndex<f64>,
    cells: Vec<Cell>,
}

fn group_of(c: &Cell) -> usize {
    let race = Race::ALL.iter().position(|r| *r == c.race).expect("known race");
    let party = usize::from(c.party == Party::Republican);
    let gender = usize::from(c.gender == Gender::NotMale);
    (party * 2 + gender) * Race::ALL.len() + race
}

impl CoverageStudy {
    fn new() -> Result<Self, String> {
        let mut columns = vec![Column::Intercept, Column::Republican, Column::NotMale];
        columns.extend(Race::ALL[1..].iter().map(|&r| Column::Race(r)));
        let beta = vec![-0.8, 0.9, -0.4, 0.5, 0.3, -0.3, 0.2];
        let population = population_cell_weights();
        let frame = PoststratFrame::new(columns.clone(), ArmId::High, &population, Subgroup::All)
            .map_err(|e| e.to_string())?;
        let cells: Vec<Cell> = population.entries().iter().map(|(c, _)| *c).collect();
        let sampler = WeightedIndex::new(population.entries().iter().map(|(_, w)| *w)).map_err(|e| e.to_string())?;
        Ok(Self {
            columns,
            beta,
            population,
            frame,
            sampler,
            cells,
        })
    }

    fn truth(&self) -> Result<f64, String> {
        let mut m = FittedModel::constant(self.columns.clone(), 0.5);
        m.coefficients = self.beta.clone();
        self.frame.estimate(&m).map_err(|e| e.to_string())
    }

    /// Group index and outcome of each of `n` respondents.
    fn sample(&self, n: usize, seed: u64) -> Vec<(usize, bool)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut row = vec![0.0; self.columns.len()];
        (0..n)
            .map(|_| {
                let c = &self.cells[self.sampler.sample(&mut rng)];
                let d = c.representative();
                for (x, col) in row.iter_mut().zip(&self.columns) {
                    *x = col.value(ArmId::High, &d);
                }
                let eta: f64 = row.iter().zip(&self.beta).map(|(x, b)| x * b).sum();
                (group_of(c), rng.random::<f64>() < sigmoid(eta))
            })
            .collect()
    }

    fn estimate(&self, data: &[(usize, bool)], idx: &[usize], initial: Option<Vec<f64>>) -> Result<(f64, Vec<f64>), String> {
        let n_groups = 4 * Race::ALL.len();
        let (mut successes, mut trials) = (vec![0.0; n_groups], vec![0.0; n_groups]);
        for &i in idx {
            let (g, y) = data[i];
            trials[g] += 1.0;
            successes[g] += f64::from(u8::from(y));
        }
        let mut design = DesignMatrix::new(self.columns.clone());
        let mut row = vec![0.0; self.columns.len()];
        for g in (0..n_groups).filter(|&g| trials[g] > 0.0) {
            let race = Race::ALL[g % Race::ALL.len()];
            let republican = (g / Race::ALL.len()) / 2 == 1;
            let not_male = (g / Race::ALL.len()) % 2 == 1;
            row.fill(0.0);
            row[0] = 1.0;
            row[1] = f64::from(u8::from(republican));
            row[2] = f64::from(u8::from(not_male));
            if let Some(k) = Race::ALL[1..].iter().position(|r| *r == race) {
                row[3 + k] = 1.0;
            }
            design.push_encoded(&g.to_string(), &row, successes[g], trials[g]);
        }
        let opts = FitOptions {
            initial,
            ..FitOptions::default()
        };
        let m = fit_logistic(&design, &opts).map_err(|e| e.to_string())?;
        let est = self.frame.estimate(&m).map_err(|e| e.to_string())?;
        Ok((est, m.coefficients))
    }
}

fn bootstrap() -> Outcome {
    let study = CoverageStudy::new()?;
    if study.population.len() != 3840 {
        return Err(format!("population has {} cells", study.population.len()));
    }
    let truth = study.truth()?;
    let n = 1500;
    let (reps, b) = (200u64, 1000);
    let run = |data: &[(usize, bool)], seed: u64| {
        let all: Vec<usize> = (0..data.len()).collect();
        let (_, start) = study.estimate(data, &all, None)?;
        let opts = BootstrapOptions {
            replicates: b,
            seed,
            ..BootstrapOptions::default()
        };
        bootstrap_ci(
            data.len(),
            |idx| {
                study
                    .estimate(data, idx, Some(start.clone()))
                    .map(|(e, _)| e)
                    .map_err(tradeoff_core::analysis::AnalysisError::InvalidOptions)
            },
            &opts,
        )
        .map_err(|e| e.to_string())
    };

    let first = study.sample(n, 1_000);
    let (a, a2) = (run(&first, 7)?, run(&first, 7)?);
    let deterministic = a == a2 && a.n_bootstrap == b;

    let mut covered = 0;
    let mut width = 0.0;
    for r in 0..reps {
        let data = study.sample(n, 1_000 + r);
        let est = run(&data, 5_000 + r)?;
        if est.ci_low <= truth && truth <= est.ci_high {
            covered += 1;
        }
        width += est.ci_high - est.ci_low;
    }
    let coverage = f64::from(covered) / reps as f64;
    check(
        deterministic && (0.93..=0.97).contains(&coverage),
        format!(
            "B={b} repeat identical: {deterministic}; coverage {covered}/{reps} = {coverage:.3} of truth {truth:.4} \
             (mean width {:.4})",
            width / reps as f64
        ),
    )
}

fn shipped_config() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../config/study.toml")
}

fn end_to_end() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut config = StudyConfig::load(&shipped_config()).map_err(|e| e.to_string())?;
    config.event_log = dir.path().join("events.jsonl");
    config.output_dir = dir.path().join("output");
    let cells = config.cells().map_err(|e| e.to_string())?;
    let mix: Mix = "0.4-efficiency/0.6-parity".parse().map_err(|e: String| e)?;
    let plan = CohortPlan::new(300, mix, config.seed);
    let planted = {
        let service = SurveyService::open(config.clone()).map_err(|e| e.to_string())?;
        synthesize(&service, &plan, &cells).map_err(|e| e.to_string())?
    };

    let records = export_log(&config, false).map_err(|e| e.to_string())?;
    let export_dir = dir.path().join("export");
    write_export(&records, &export_dir, ExportFormat::Jsonl).map_err(|e| e.to_string())?;
    let read = read_export(&export_dir).map_err(|e| e.to_string())?;
    let frontiers = config.frontiers();
    let respondents = respondents_from_records(&read, &frontiers).map_err(|e| e.to_string())?;
    let opts = PipelineOptions {
        bootstrap: 1000,
        ..PipelineOptions::from_config(&config)
    };
    let report = run_pipeline(&config, &respondents, &opts).map_err(|e| e.to_string())?;

    let mut ok = respondents.len() == 300;
    let mut detail = vec![format!("{} respondents", respondents.len())];
    for party in Party::ALL.iter().copied() {
        let filter = RespondentFilter {
            arms: None,
            party: Some(party),
        };
        let got = raw_preference_share(&respondents, &filter, ShareSelector::PairwiseEfficient, &frontiers)
            .map_err(|e| e.to_string())?;
        let want = planted.planted_share(RespondentType::Efficiency, Some(party), None);
        ok &= (got - want).abs() <= 0.03;
        detail.push(format!("{}: recovered {got:.3} planted {want:.3}", party.as_str()));
    }

    let mut curves: BTreeMap<(ArmId, String), Vec<(f64, f64)>> = BTreeMap::new();
    for row in report.win_rates.iter().filter(|r| r.stratum == Stratum::PrefersEfficient && r.poststratified) {
        curves.entry((row.arm, row.subgroup.to_string())).or_default().push((row.spanish_share, row.win_rate));
    }
    let mut bad = Vec::new();
    for ((arm, subgroup), curve) in &mut curves {
        curve.sort_by(|a, b| a.0.total_cmp(&b.0));
        if curve.len() != 6 || curve.windows(2).any(|w| w[1].1 > w[0].1) {
            bad.push(format!("{arm}/{subgroup}"));
        }
    }
    ok &= curves.len() == 6 && bad.is_empty();
    detail.push(format!("{} efficiency-stratum curves, non-monotone: {bad:?}", curves.len()));
    check(ok, detail.join("; "))
}

fn simulator_calibration() -> Outcome {
    let config = SimulationConfig {
        days: 10_000,
        ..SimulationConfig::high_arm()
    };
    let logs = simulate(&config).map_err(|e| e.to_string())?;
    let est = estimate_endpoints(&logs, config.full_daily_budget).map_err(|e| e.to_string())?;
    let target = TradeoffArm::high().endpoints;
    let rel = |got: f64, want: f64| (got - want).abs() / want;
    let devs = [
        rel(est.full_english.english, target.full_english.english),
        rel(est.full_english.spanish, target.full_english.spanish),
        rel(est.full_spanish.english, target.full_spanish.english),
        rel(est.full_spanish.spanish, target.full_spanish.spanish),
    ];
    let worst = devs.iter().copied().fold(0.0, f64::max);
    let ratio = cost_per_conversion(&logs, Language::Spanish).map_err(|e| e.to_string())?
        / cost_per_conversion(&logs, Language::English).map_err(|e| e.to_string())?;
    let ratio_dev = rel(ratio, MAXIMIZE_CONVERSIONS_CPC_RATIO);
    let endpoints_ok = worst <= 0.01;
    let ratio_ok = ratio_dev <= 0.05;
    check(
        endpoints_ok && ratio_ok,
        format!(
            "endpoints ({:.2}, {:.2})/({:.2}, {:.2}) max relative error {:.1}% [{}]; \
             cost ratio {ratio:.3} vs {MAXIMIZE_CONVERSIONS_CPC_RATIO} error {:.1}% [{}]",
            est.full_english.english,
            est.full_english.spanish,
            est.full_spanish.english,
            est.full_spanish.spanish,
            100.0 * worst,
            if endpoints_ok { "pass" } else { "fail" },
            100.0 * ratio_dev,
            if ratio_ok { "pass" } else { "fail" },
        ),
    )
}

fn main() -> ExitCode {
    let ms = Duration::from_millis;
    let criteria = [
        Criterion {
            name: "frontier arithmetic",
            limit: ms(1),
            run: frontier_arithmetic,
        },
        Criterion {
            name: "efficiency and parity points",
            limit: ms(1),
            run: efficiency_and_parity,
        },
        Criterion {
            name: "scheduler",
            limit: ms(10),
            run: scheduler,
        },
        Criterion {
            name: "win-rate identity",
            limit: ms(1_000),
            run: win_rate_identity,
        },
        Criterion {
            name: "modal-preference oracle",
            limit: ms(1_000),
            run: modal_oracle,
        },
        Criterion {
            name: "logistic recovery",
            limit: ms(10_000),
            run: logistic_recovery,
        },
        Criterion {
            name: "poststratification",
            limit: ms(5_000),
            run: poststratification,
        },
        Criterion {
            name: "bootstrap",
            limit: ms(300_000),
            run: bootstrap,
        },
        Criterion {
            name: "end-to-end",
            limit: ms(60_000),
            run: end_to_end,
        },
        Criterion {
            name: "simulator calibration",
            limit: ms(30_000),
            run: simulator_calibration,
        },
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for c in &criteria {
        if !filter.is_empty() && !filter.iter().any(|f| c.name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.limit;
        let (passed, detail) = match outcome {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        if !passed {
            failed += 1;
        }
        println!(
            "{} {}: {} ({:.3} s, limit {} s{})",
            if passed { "PASS" } else { "FAIL" },
            c.name,
            detail,
            elapsed.as_secs_f64(),
            c.limit.as_secs_f64(),
            if in_time { "" } else { ", over time" }
        );
    }
    println!("{} of {ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
