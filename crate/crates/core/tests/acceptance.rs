//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! `cargo test --test acceptance -- 3 5` runs only criteria 3 and 5. The
//! process exits 0 regardless of outcome unless ACCEPTANCE_STRICT is set;
//! the printed lines are the report.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use penroute::batch::{best_of_two, run_batch, BatchConfig, BatchJob, Choice, MergePolicy};
use penroute::candidates::held_karp_ascent;
use penroute::extract::{build_model, select_hierarchy, write_route, ExtractConfig, TrainingRoute};
use penroute::instance::{atsp_to_tsp, Cost, RoutingInstance, TravelTransform};
use penroute::oracle::brute_force_optimum;
use penroute::penalty::{evaluate_pen, visit_positions, ConstraintSet, PenaltyModel};
use penroute::search::{kick::kick, objective, solve, solve_prepared, MoveType, Prepared, SearchConfig, Searcher};
use penroute::synth::{generate_synthetic, Corpus, SynthConfig, WindowConfig};
use penroute::tour::{read_tour, Tour};
use penroute::tsplib::write_instance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{forced_alpha, naive_lateness, naive_penalty, random_constrained_case, random_stops, zone_order};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_matrix_instance(n: usize, rng: &mut ChaCha8Rng) -> RoutingInstance {
    let m = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 0 } else { rng.random_range(1..1000) }).collect())
        .collect();
    RoutingInstance::new("random", m, vec![]).unwrap()
}

fn timed(secs: f64) -> SearchConfig {
    SearchConfig {
        time_limit: Some(Duration::from_secs_f64(secs)),
        ..Default::default()
    }
}

fn corpus(routes: usize, seed: u64, split_rate: f64, windows: Option<WindowConfig>) -> Corpus {
    generate_synthetic(&SynthConfig {
        routes,
        seed,
        split_rate,
        windows,
        ..Default::default()
    })
}

fn is_tour(inst: &RoutingInstance, stops: &[usize]) -> bool {
    let mut s = stops.to_vec();
    s.sort_unstable();
    stops.first() == Some(&inst.depot()) && s == (0..inst.n()).collect::<Vec<_>>()
}

fn c1_small_optimum() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let cs = ConstraintSet::default();
    let started = Instant::now();
    let (mut exact, mut worst) = (0, 0.0f64);
    for _ in 0..100 {
        let inst = random_matrix_instance(8, &mut rng);
        let opt = brute_force_optimum(&inst, &cs).unwrap();
        let sol = solve(&inst, &cs, &timed(1.0)).unwrap();
        if sol.length == opt.length {
            exact += 1;
        }
        worst = worst.max(sol.length as f64 / opt.length as f64 - 1.0);
    }
    let secs = started.elapsed().as_secs_f64();
    outcome(
        exact >= 95 && worst <= 0.02 && secs <= 180.0,
        format!("{exact}/100 optimal, worst gap {:.2}%, {secs:.0} s", 100.0 * worst),
    )
}

fn c2_transformation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let cs = ConstraintSet::default();
    let mut mismatches = 0;
    let mut broken = Vec::new();
    let mut accepted = 0usize;
    const MOVES: usize = 100_000;
    for k in 0..50 {
        let n = rng.random_range(5..=12);
        let inst = random_matrix_instance(n, &mut rng);
        let t = atsp_to_tsp(&inst);
        for _ in 0..20 {
            let stops = random_stops(&inst, &mut rng);
            let tour = Tour::from_stops(&t, &stops).unwrap();
            if tour.length() != inst.tour_length(&stops) || tour.recompute_length(&t) != tour.length() {
                mismatches += 1;
            }
        }
        let sol = solve(&inst, &cs, &SearchConfig::default()).unwrap();
        if sol.length != sol.working_length || sol.length != inst.tour_length(&sol.stops) {
            mismatches += 1;
        }

        // local search with kicks, checking the tour after every accepted move
        let model = PenaltyModel::new(&inst, &cs).unwrap();
        let (_, cand) = penroute::candidates::generate(&t, 50, 6);
        let mut searcher = Searcher::new(&t, &cand, &model, k % 2 == 0);
        let mut tour = Tour::random_with(&t, &mut rng);
        let quota = MOVES.div_ceil(50);
        let mut here = 0;
        let mut rounds = 0;
        while here < quota && rounds < 50 * quota {
            rounds += 1;
            let mut found = false;
            for t1 in 0..t.size() {
                if searcher.try_move(&mut tour, t1, 0).is_some() {
                    here += 1;
                    found = true;
                    if let Err(e) = tour.validate(&t) {
                        broken.push(e);
                    }
                    if tour.length() != inst.tour_length(&tour.stops(inst.depot())) {
                        mismatches += 1;
                    }
                }
            }
            if !found {
                kick(&mut tour, &t, &cand, &mut rng);
                if let Err(e) = tour.validate(&t) {
                    broken.push(e);
                }
            }
        }
        accepted += here;
    }
    outcome(
        mismatches == 0 && broken.is_empty() && accepted >= MOVES,
        format!(
            "{mismatches} length mismatches, {} invariant breaks over {accepted} accepted moves{}",
            broken.len(),
            broken.first().map(|e| format!(" (first: {e})")).unwrap_or_default()
        ),
    )
}

fn c3_penalty_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let started = Instant::now();
    let (mut agree, mut nonzero) = (0, 0);
    for _ in 0..250 {
        let (inst, cs) = random_constrained_case(&mut rng);
        let t = atsp_to_tsp(&inst);
        for _ in 0..4 {
            let stops = random_stops(&inst, &mut rng);
            let want = naive_penalty(&inst, &cs, &stops);
            let got = evaluate_pen(&Tour::from_stops(&t, &stops).unwrap(), &cs, &inst).unwrap();
            agree += (got == want) as usize;
            nonzero += (want.total() > 0) as usize;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    outcome(
        agree == 1000 && secs <= 30.0,
        format!("{agree}/1000 agree ({nonzero} with nonzero penalty), {secs:.1} s"),
    )
}

fn c4_clustering() -> Outcome {
    let c = corpus(100, 404, 0.05, None);
    let big_m = ConstraintSet {
        transforms: vec![TravelTransform::Cluster],
        ..Default::default()
    };
    let soft = ConstraintSet {
        cluster_penalty: Some(1000),
        ..Default::default()
    };
    let (mut clustered, mut free) = (0, 0);
    for r in &c.routes {
        let inst = &r.instance;
        let z = inst.zones().len();
        let sol = solve(inst, &big_m, &timed(1.0)).unwrap();
        let (_, crossing) = visit_positions(inst, &sol.stops).unwrap();
        // the independent block count has to agree
        if crossing == z && zone_order(inst, &sol.stops).len() == z {
            clustered += 1;
        }
        let sol = solve(inst, &soft, &timed(2.0)).unwrap();
        if sol.penalty.total() == 0 && naive_penalty(inst, &soft, &sol.stops).total() == 0 {
            free += 1;
        }
    }
    outcome(
        clustered == 100 && free >= 95,
        format!("big M: {clustered}/100 with crossing = z; rho = 1000: {free}/100 penalty-free"),
    )
}

fn c5_alpha() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let (mut checked, mut wrong) = (0, 0);
    for k in 0..60 {
        let n = rng.random_range(3..=8);
        let inst = random_matrix_instance(n, &mut rng);
        let t = atsp_to_tsp(&inst);
        let tree = held_karp_ascent(&t, [0, 3, 30, 1000][k % 4]);
        for v in 0..t.size() {
            for (w, a) in tree.alpha_row(&t, v) {
                checked += 1;
                if a != forced_alpha(&t, &tree.pi, tree.special(), v, w) {
                    wrong += 1;
                }
            }
        }
    }
    outcome(wrong == 0, format!("{}/{checked} alpha values match the forced-edge oracle", checked - wrong))
}

fn c6_extraction() -> Outcome {
    let c = corpus(200, 606, 0.0, None);
    let training: Vec<TrainingRoute> = c.routes.iter().map(|r| r.route.clone()).collect();
    let chain = select_hierarchy(&training, [1, 1, 1]) == c.hierarchy;
    let (mut order_ok, mut planted_free) = (0, 0);
    for r in &c.routes {
        let inst = &r.instance;
        let m = build_model(inst, &training, &c.hierarchy, &ExtractConfig::default()).unwrap();
        let cs = &m.constraints;
        if naive_penalty(inst, cs, &r.route.sequence).total() == 0 {
            planted_free += 1;
        }
        let sol = solve(inst, cs, &timed(1.0)).unwrap();
        if zone_order(inst, &sol.stops) == zone_order(inst, &r.route.sequence) {
            order_ok += 1;
        }
    }
    let share = order_ok as f64 / 2.0;
    outcome(
        chain && share >= 90.0 && planted_free == 200,
        format!(
            "(a) chain {}; (b) zone order {order_ok}/200 = {share:.1}%; (c) planted pen 0 on {planted_free}/200",
            if chain { "recovered" } else { "missed" }
        ),
    )
}

fn c7_ablation() -> Outcome {
    // full constraint model with the planted route as the oracle; the
    // penalised objective is reported alongside
    let c = corpus(20, 707, 0.0, None);
    let training: Vec<TrainingRoute> = c.routes.iter().map(|r| r.route.clone()).collect();
    // (move type, trials per run, single run)
    let configs = [
        ("3+4opt ILS multi", MoveType::ThreeFourOpt, None, None),
        ("3opt ILS multi", MoveType::ThreeOpt, None, None),
        ("3opt 1-trial multi", MoveType::ThreeOpt, Some(1), None),
        ("3opt ILS 1-run", MoveType::ThreeOpt, None, Some(1)),
        ("3opt 1-trial 1-run", MoveType::ThreeOpt, Some(1), Some(1)),
    ];
    let mut ratio = [0.0f64; 5];
    let mut penalised = [0.0f64; 5];
    for r in &c.routes {
        let inst = &r.instance;
        let cs = build_model(inst, &training, &c.hierarchy, &ExtractConfig::default()).unwrap().constraints;
        let prep = Prepared::new(inst, &cs, &SearchConfig::default()).unwrap();
        let planted = inst.tour_length(&r.route.sequence) as f64;
        for (k, &(_, move_type, max_trials, runs)) in configs.iter().enumerate() {
            let cfg = SearchConfig {
                move_type,
                max_trials,
                runs,
                ..timed(1.0)
            };
            let sol = solve_prepared(&prep, &cfg, Instant::now());
            let v = objective(sol.penalty.total(), sol.length, cfg.penalty_multiplier) as f64;
            ratio[k] += sol.length as f64 / planted / c.routes.len() as f64;
            penalised[k] += v / planted / c.routes.len() as f64;
        }
    }
    let ordered = ratio.windows(2).all(|w| w[0] <= w[1]);
    let (first, last) = (ratio[0] - 1.0, ratio[4] - 1.0);
    let detail = configs
        .iter()
        .zip(ratio.iter().zip(penalised))
        .map(|(c, (r, v))| format!("{} {r:.4} (v {v:.2})", c.0))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(ordered && last >= 2.0 * first, detail)
}

fn c8_time_windows() -> Outcome {
    let c = corpus(100, 808, 0.05, Some(WindowConfig::default()));
    let on = ConstraintSet {
        time_windows: true,
        ..Default::default()
    };
    let off = ConstraintSet::default();
    let (mut punctual, mut late_without, mut feasible) = (0, 0, 0);
    for r in &c.routes {
        let inst = &r.instance;
        feasible += (naive_lateness(inst, &r.route.sequence) == 0) as usize;
        let sol = solve(inst, &on, &timed(1.0)).unwrap();
        punctual += (naive_lateness(inst, &sol.stops) == 0) as usize;
        let sol = solve(inst, &off, &timed(1.0)).unwrap();
        late_without += (naive_lateness(inst, &sol.stops) > 0) as usize;
    }
    outcome(
        punctual == 100 && late_without >= 50,
        format!("windows feasible on {feasible}/100; enabled: {punctual}/100 on time; disabled: {late_without}/100 late"),
    )
}

fn c9_best_of_two() -> Outcome {
    use Choice::{Alternate as A, Full as F};
    // (full length, alternate length, expected choice)
    let table: [(Cost, Cost, Choice); 20] = [
        (1000, 1000, F),
        (1010, 1000, F),
        (1011, 1000, A),
        (1009, 1000, F),
        (1100, 1000, A),
        (900, 1000, F),
        (2000, 1000, A),
        (10100, 10000, F),
        (10101, 10000, A),
        (0, 0, F),
        (1, 0, A),
        (101, 100, F),
        (102, 100, A),
        (5050, 5000, F),
        (5051, 5000, A),
        (303, 300, F),
        (304, 300, A),
        (123456, 122234, F),
        (123457, 122234, A),
        (1, 1000, F),
    ];
    let policy = MergePolicy::default();
    let wrong: Vec<_> = table.iter().filter(|&&(f, a, want)| best_of_two(f, a, policy) != want).collect();
    outcome(wrong.is_empty(), format!("{}/20 cases as expected {wrong:?}", 20 - wrong.len()))
}

fn c10_batch() -> Outcome {
    let c = generate_synthetic(&SynthConfig {
        routes: 100,
        seed: 1010,
        min_stops: 150,
        mode_stops: 150,
        max_stops: 150,
        ..Default::default()
    });
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::create_dir_all(dir.join("routes")).unwrap();
    let mut jobs = Vec::new();
    for r in &c.routes {
        let name = &r.route.name;
        let inst_path = dir.join(format!("{name}.atsp"));
        std::fs::write(&inst_path, write_instance(&r.instance, &ConstraintSet::default())).unwrap();
        std::fs::write(dir.join(format!("routes/{name}.route")), write_route(&r.route)).unwrap();
        jobs.push(BatchJob {
            name: Some(name.clone()),
            instance: inst_path,
            training: Some(dir.join("routes")),
            full_seconds: 0.5,
            alternate_seconds: 0.5,
            seed: 1,
            runs: None,
            output: dir.join(format!("tours/{name}.tour")),
        });
    }
    let started = Instant::now();
    let report = run_batch(
        &jobs,
        &BatchConfig {
            workers: 8,
            ..Default::default()
        },
    );
    let wall = started.elapsed().as_secs_f64();
    let valid = c
        .routes
        .iter()
        .zip(&report.jobs)
        .filter(|(r, j)| {
            j.ok && std::fs::read_to_string(&j.output)
                .ok()
                .and_then(|t| read_tour(&t).ok())
                .is_some_and(|s| is_tour(&r.instance, &s) && r.instance.tour_length(&s) == j.length)
        })
        .count();
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    outcome(
        valid == 100 && wall <= 25.0,
        format!("{valid}/100 valid outputs, {wall:.1} s wall on {cores} core(s)"),
    )
}

type Criterion = (usize, &'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "small instances reach the optimum", c1_small_optimum),
        (2, "ATSP transformation and orientation invariant", c2_transformation),
        (3, "penalty evaluator against a naive checker", c3_penalty_oracle),
        (4, "zone clustering", c4_clustering),
        (5, "alpha values", c5_alpha),
        (6, "constraint extraction on planted routes", c6_extraction),
        (7, "search ablation ordering", c7_ablation),
        (8, "time windows", c8_time_windows),
        (9, "best-of-two selection", c9_best_of_two),
        (10, "parallel batch throughput", c10_batch),
    ];
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, f) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let o = f();
        failed += !o.pass as usize;
        println!(
            "{} criterion {id:>2}: {name}: {} [{:.1} s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {failed} criteria failed");
    if failed > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
