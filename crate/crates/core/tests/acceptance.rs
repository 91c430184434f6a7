//! Acceptance criteria, one `[PASS]`/`[FAIL]` line each. Exits non-zero if
//! any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nlbd::analysis::formulas::{
    adaptive_parity_correlated_value, allcock_value, bs_value, depth3_value, input_independent_bound,
    nonadaptive_bound, parity_value,
};
use nlbd::analysis::fourier::{fourier_transform, q_ab, q_ab_spectral, sign_function};
use nlbd::analysis::region::{distillable_region, min_distillable_delta, Grid};
use nlbd::cli::{round4, table_one, table_two};
use nlbd::evaluator::{distill, distilled_value, evaluate_nonadaptive, NonAdaptiveKernel};
use nlbd::protocols::*;
use nlbd::search::{builtin_registry, search_nonadaptive, search_nonadaptive_input_independent};
use nlbd::{BoxParams, LocalStrategy, NamedProtocol, NoSignalingBox, Protocol, TruthTable};

struct Outcome {
    pass: bool,
    detail: String,
    notes: Vec<String>,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into(), notes: Vec::new() }
}

type Check = fn() -> Outcome;

fn main() {
    let criteria: [(&str, Check, Option<Duration>); 8] = [
        ("1 depth-2 comparison table", table_one_matches, Some(Duration::from_secs(1))),
        ("2 mixed-depth comparison table", table_two_matches, Some(Duration::from_secs(5))),
        ("3 closed forms vs enumeration", closed_forms, Some(Duration::from_secs(30))),
        ("4 non-adaptive optimum at n=2", nonadaptive_optimum, Some(Duration::from_secs(60))),
        ("5 Fourier identities", fourier_identities, None),
        ("6 distillable-region landmarks", region_landmarks, Some(Duration::from_secs(60))),
        ("7 no-signalling preservation", no_signalling_preserved, None),
        ("8 adaptive parity convergence", adaptive_parity_convergence, None),
    ];
    let mut failed = 0;
    for (name, check, limit) in criteria {
        let start = Instant::now();
        let mut o = check();
        let elapsed = start.elapsed();
        if let Some(limit) = limit {
            if elapsed > limit {
                o.pass = false;
                o.detail += &format!("; exceeded {limit:?}");
            }
        }
        failed += usize::from(!o.pass);
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {name}: {} ({:.2}s)", o.detail, elapsed.as_secs_f64());
        for note in &o.notes {
            println!("       {note}");
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}

fn near(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Compares every cell to the reference to 4 decimals and the row maxima.
fn compare_table(
    table: &nlbd::cli::Table,
    reference: &[&[(&str, f64)]],
    best: &[&[&str]],
) -> (Vec<String>, usize) {
    let mut mismatches = Vec::new();
    let mut cells = 0;
    for (i, (row, expected)) in table.rows.iter().zip(reference).enumerate() {
        for (name, value) in expected.iter() {
            cells += 1;
            let got = row.cell(name).unwrap();
            if !near(got, *value, 5e-5) || round4(got) != *value {
                mismatches.push(format!("row {} {name}: computed {got:.6}, reference {value}", i + 1));
            }
        }
        if row.best() != best[i] {
            mismatches.push(format!("row {} maxima {:?}, reference {:?}", i + 1, row.best(), best[i]));
        }
    }
    (mismatches, cells)
}

fn table_one_matches() -> Outcome {
    let t = table_one().unwrap();
    let reference: [&[(&str, f64)]; 4] = [
        &[("P", 2.98), ("P_parity", 2.4908), ("P_BS", 2.9639), ("P_A", 2.9867), ("P_perm", 2.9867)],
        &[("P", 2.52), ("P_parity", 2.4912), ("P_BS", 2.5692), ("P_A", 2.5932), ("P_perm", 2.4600)],
        &[("P", 2.52), ("P_parity", 2.4912), ("P_BS", 2.5692), ("P_A", 2.4600), ("P_perm", 2.5932)],
        &[("P", 2.28), ("P_parity", 2.4048), ("P_BS", 2.3328), ("P_A", 2.3364), ("P_perm", 2.3364)],
    ];
    let best: [&[&str]; 4] = [&["P_A", "P_perm"], &["P_A"], &["P_perm"], &["P_parity"]];
    let (mismatches, cells) = compare_table(&t, &reference, &best);
    let mut o = outcome(mismatches.is_empty(), format!("{cells} cells, {} mismatches", mismatches.len()));
    o.notes = mismatches;
    o
}

fn table_two_matches() -> Outcome {
    let t = table_two().unwrap();
    let reference: [&[(&str, f64)]; 3] = [
        &[("P", 3.36), ("P_parity", 3.3600), ("P_A", 3.4272), ("P_3", 3.4399), ("P_6", 3.3375), ("P_new", 3.4907)],
        &[("P", 2.28), ("P_parity", 2.4382), ("P_A", 2.3364), ("P_3", 2.3786), ("P_6", 2.4394), ("P_new", 2.3864)],
        &[("P", 2.98), ("P_parity", 2.4908), ("P_A", 2.9867), ("P_3", 2.9490), ("P_6", 2.7308), ("P_new", 2.9842)],
    ];
    let best: [&[&str]; 3] = [&["P_new"], &["P_6"], &["P_A"]];
    let (mismatches, cells) = compare_table(&t, &reference, &best);
    let mut o = outcome(mismatches.is_empty(), format!("{cells} cells, {} mismatches", mismatches.len()));
    o.notes = mismatches;
    for (i, r) in t.rows.iter().enumerate() {
        o.notes.push(format!("row {} optimal parity depth k = {}", i + 1, r.parity_depth.unwrap()));
    }
    o
}

#[derive(Clone, Copy)]
enum Wiring {
    /// Later boxes get `input · running parity`.
    AdaptiveParity,
    /// Alice feeds `x ⊕ parity`, Bob `y · (1 ⊕ parity)`.
    Generalized,
}

/// Independent value of a parity-output wiring whose later inputs depend
/// only on each party's running parity: a Markov chain on the joint parity
/// pair, with symmetric-box rows `p(ab|uv) = (1 + (−1)^{a⊕b} d_uv)/4`.
fn markov_value(wiring: Wiring, d: f64, e: f64, depth: usize) -> f64 {
    let bias = |u: usize, v: usize| if u & v == 1 { e } else { d };
    let mut v_total = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            let mut dist = [[0.0f64; 2]; 2];
            dist[0][0] = 1.0;
            for step in 0..depth {
                let mut next = [[0.0f64; 2]; 2];
                for pa in 0..2 {
                    for pb in 0..2 {
                        let w = dist[pa][pb];
                        if w == 0.0 {
                            continue;
                        }
                        let (u, v) = match (step, wiring) {
                            (0, _) => (x, y),
                            (_, Wiring::AdaptiveParity) => (x & pa, y & pb),
                            (_, Wiring::Generalized) => (x ^ pa, y & (1 ^ pb)),
                        };
                        for a in 0..2 {
                            for b in 0..2 {
                                let s = if a == b { 1.0 } else { -1.0 };
                                next[pa ^ a][pb ^ b] += w * (1.0 + s * bias(u, v)) / 4.0;
                            }
                        }
                    }
                }
                dist = next;
            }
            let corr = dist[0][0] + dist[1][1] - dist[0][1] - dist[1][0];
            v_total += if x & y == 1 { -corr } else { corr };
        }
    }
    v_total
}

fn closed_forms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let parity: Vec<_> = (1..=6).map(|n| parity_protocol(n).unwrap()).collect();
    let bs: Vec<_> = (1..=6).map(|k| adaptive_parity_protocol(k).unwrap()).collect();
    let gen: Vec<_> = (2..=6).map(|k| allcock_generalized_protocol(k).unwrap()).collect();
    let (a2, n3) = (allcock2_protocol(), new_depth3_protocol());
    let mut worst = 0.0f64;
    let mut checks = 0;
    let mut track = |got: f64, want: f64| {
        worst = worst.max((got - want).abs());
        checks += 1;
    };
    for _ in 0..1000 {
        let (d, e) = (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
        let params = BoxParams::symmetric(d, e).unwrap();
        let bx = NoSignalingBox::symmetric(d, e).unwrap();
        for (i, p) in parity.iter().enumerate() {
            let v = evaluate_nonadaptive(p, &bx).unwrap().chsh_value();
            track(v, parity_value(&params, i as u32 + 1).unwrap());
            track(distilled_value(&embed_nonadaptive(p), &bx).unwrap(), v);
        }
        for (i, p) in bs.iter().enumerate() {
            let k = i + 1;
            let v = distilled_value(p, &bx).unwrap();
            track(v, markov_value(Wiring::AdaptiveParity, d, e, k));
            if k == 2 {
                track(v, bs_value(d, e));
            }
        }
        for (i, p) in gen.iter().enumerate() {
            let v = distilled_value(p, &bx).unwrap();
            track(v, markov_value(Wiring::Generalized, d, e, i + 2));
        }
        track(distilled_value(&a2, &bx).unwrap(), allcock_value(d, e));
        track(distilled_value(&gen[0], &bx).unwrap(), allcock_value(d, e));
        track(distilled_value(&n3, &bx).unwrap(), depth3_value(d, e));
        // Correlated slice of the same boxes: the depth-k adaptive parity formula.
        let corr = NoSignalingBox::general(BoxParams::correlated(e).unwrap()).unwrap();
        for (i, p) in bs.iter().enumerate() {
            let k = i as u32 + 1;
            track(distilled_value(p, &corr).unwrap(), adaptive_parity_correlated_value(e, k).unwrap());
        }
    }
    outcome(worst <= 1e-12, format!("{checks} comparisons on 1000 boxes, max deviation {worst:.2e}"))
}

/// Output tables (per input) computing the parity of the outcomes selected
/// by `subset`, at depth `n`.
fn subset_parity_mask(n: usize, subset: usize) -> u64 {
    (0..1u64 << n).filter(|h| (h & subset as u64).count_ones() % 2 == 1).fold(0, |m, h| m | (1 << h))
}

fn nonadaptive_optimum() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 2;
    let (mut exceeded, mut missed, mut worst_excess) = (0, 0, 0.0f64);
    let mut first_violation = None;
    let mut companion_ok = 0;
    for _ in 0..50 {
        let mut r = || rng.gen_range(-1.0..=1.0);
        let params = BoxParams::new(r(), r(), r(), r()).unwrap();
        let bx = NoSignalingBox::general(params).unwrap();
        let report = search_nonadaptive(&bx, n).unwrap();
        let bound = nonadaptive_bound(&params, n as u32).unwrap().value;
        let kernel = NonAdaptiveKernel::new(&bx, n).unwrap();
        // Best parity-of-subset wiring, with either output sign for Bob.
        let parity_best = (1..1usize << n)
            .flat_map(|s| {
                let m = subset_parity_mask(n, s);
                let flip = m ^ 0xf;
                [kernel.value([m, m], [m, m]), kernel.value([m, m], [flip, flip])]
            })
            .fold(f64::NEG_INFINITY, f64::max);
        if report.best_value > bound + 1e-12 {
            exceeded += 1;
            worst_excess = worst_excess.max(report.best_value - bound);
            first_violation.get_or_insert((params, report.best_value, bound));
        }
        if !near(parity_best, bound, 1e-12) {
            missed += 1;
        }
        let shared = search_nonadaptive_input_independent(&bx, n).unwrap();
        let shared_bound = input_independent_bound(&params, n as u32).unwrap().value;
        if near(shared.best_value, shared_bound, 1e-12) {
            companion_ok += 1;
        }
    }
    let mut o = outcome(
        exceeded == 0 && missed == 0,
        format!("50 boxes: search exceeded the bound on {exceeded} (max excess {worst_excess:.4}), parity tables missed it on {missed}"),
    );
    if let Some((p, v, b)) = first_violation {
        o.notes.push(format!(
            "e.g. biases ({:.4}, {:.4}, {:.4}, {:.4}): exhaustive {v:.6} > bound {b:.6}",
            p.delta1, p.delta2, p.delta3, p.epsilon
        ));
        o.notes.push("per-input output tables allow constant outputs (value 2) and per-input relabelling".into());
    }
    o.notes.push(format!(
        "input-independent tables: exhaustive optimum equals max over k in 0..=2 on {companion_ok}/50 boxes"
    ));
    o
}

fn random_set(rng: &mut ChaCha8Rng, n: u32) -> Vec<bool> {
    (0..1usize << n).map(|_| rng.gen::<bool>()).collect()
}

fn fourier_identities() -> Outcome {
    let mut worst = 0.0f64;
    let mut pairs = 0u64;
    let set = |n: u32, mask: usize| -> Vec<bool> { (0..1usize << n).map(|s| (mask >> s) & 1 == 1).collect() };
    for n in [2u32, 3] {
        let delta = 0.83;
        let count = 1usize << (1 << n);
        for a in 0..count {
            let sa = set(n, a);
            for b in 0..count {
                let sb = set(n, b);
                worst = worst.max((q_ab(&sa, &sb, delta).unwrap() - q_ab_spectral(&sa, &sb, delta).unwrap()).abs());
                pairs += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..10_000 {
        let n = 3 + (i % 2);
        let (sa, sb) = (random_set(&mut rng, n), random_set(&mut rng, n));
        let delta = rng.gen_range(-1.0..=1.0);
        worst = worst.max((q_ab(&sa, &sb, delta).unwrap() - q_ab_spectral(&sa, &sb, delta).unwrap()).abs());
        pairs += 1;
    }
    let mut parseval = 0.0f64;
    for i in 0..10_000 {
        let n = 1 + (i % 6) as u32;
        let f = sign_function(&random_set(&mut rng, n));
        parseval = parseval.max((fourier_transform(&f).unwrap().parseval_sum() - 1.0).abs());
    }
    outcome(
        worst <= 1e-12 && parseval <= 1e-12,
        format!("{pairs} set pairs max deviation {worst:.2e}; Parseval on 10000 functions max deviation {parseval:.2e}"),
    )
}

fn region_landmarks() -> Outcome {
    let mut failures = Vec::new();
    let mut notes = Vec::new();

    // (a) crossing point
    let (d, e) = (35.0 / 37.0, -21.0 / 37.0);
    let bx = NoSignalingBox::symmetric(d, e).unwrap();
    let target = 126.0 / 37.0;
    let values = [
        allcock_value(d, e),
        depth3_value(d, e),
        bx.chsh_value(),
        distilled_value(&allcock2_protocol(), &bx).unwrap(),
        distilled_value(&new_depth3_protocol(), &bx).unwrap(),
    ];
    if values.iter().any(|v| !near(*v, target, 1e-9)) {
        failures.push(format!("(a) values {values:?} vs {target}"));
    }

    // (b) left edge of the Allcock region among nonlocal boxes
    let deltas = Grid::new(0.0, 1.0, 1e-3).unwrap().points();
    let epsilons = Grid::new(-1.0, 1.0, 1e-3).unwrap().points();
    let recs = distillable_region(&[NamedProtocol::Allcock2], &deltas, &epsilons).unwrap();
    let nonlocal: Vec<_> = recs.into_iter().filter(|r| r.v_in > 2.0 + 1e-12).collect();
    let edge = (3.0 + 6f64.sqrt()) / 6.0;
    match min_distillable_delta(&nonlocal, "allcock2") {
        Some(m) if near(m, edge, 2e-3) => notes.push(format!("(b) minimal delta {m} vs {edge:.6}")),
        other => failures.push(format!("(b) minimal delta {other:?} vs {edge:.6}")),
    }

    // (c) only the new depth-3 wiring distills
    let registry = builtin_registry(6);
    let rec = &distillable_region(&registry, &[0.95], &[-0.607]).unwrap()[0];
    let distilling: Vec<&str> = rec.outcomes.iter().filter(|o| o.distills).map(|o| o.name.as_str()).collect();
    if distilling != ["new3"] {
        failures.push(format!("(c) distilling protocols {distilling:?}"));
    } else {
        notes.push(format!("(c) {} protocols checked, only new3 distills", registry.len()));
    }

    // (d) quantum boundary on the ε = 0.5 row
    let step = 1e-3;
    let row = distillable_region(&[], &deltas, &[0.5]).unwrap();
    let crossing = row.windows(2).find(|w| w[0].quantum && !w[1].quantum).map(|w| w[1].delta);
    let anchor = (PI / 9.0).cos();
    match crossing {
        Some(c) if (c - anchor).abs() <= step + 1e-12 => notes.push(format!("(d) quantum flag turns off at {c} vs {anchor:.6}")),
        other => failures.push(format!("(d) quantum flag turns off at {other:?} vs {anchor:.6}")),
    }

    let mut o = outcome(failures.is_empty(), if failures.is_empty() { "all four landmarks hold".into() } else { failures.join("; ") });
    o.notes = notes;
    o
}

fn random_box(rng: &mut ChaCha8Rng) -> NoSignalingBox {
    // Convex mixture of deterministic local boxes and the eight relabelled
    // perfect boxes, which covers biased marginals.
    let mut rows = [[0.0f64; 4]; 4];
    let mut total = 0.0;
    for extremal in 0..24 {
        let w: f64 = rng.gen::<f64>().powi(4);
        total += w;
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        let p = if extremal < 16 {
                            let (a0, a1, b0, b1) = (extremal & 1, (extremal >> 1) & 1, (extremal >> 2) & 1, (extremal >> 3) & 1);
                            let (fa, fb) = (if x == 0 { a0 } else { a1 }, if y == 0 { b0 } else { b1 });
                            f64::from(u8::from(a == fa && b == fb))
                        } else {
                            let k = extremal - 16;
                            let target = (x & y) ^ (k & 1) ^ (x & (k >> 1)) ^ (y & (k >> 2));
                            if a ^ b == target { 0.5 } else { 0.0 }
                        };
                        rows[2 * x + y][2 * a + b] += w * p;
                    }
                }
            }
        }
    }
    rows.iter_mut().flatten().for_each(|p| *p /= total);
    NoSignalingBox::from_rows(rows).unwrap()
}

fn random_protocol(rng: &mut ChaCha8Rng) -> Protocol {
    let depth = rng.gen_range(1..=4usize);
    let mut strategy = || {
        let steps = (1..=depth).map(|i| TruthTable::from_mask(i as u32, rng.gen())).collect();
        LocalStrategy::new(steps, TruthTable::from_mask(depth as u32 + 1, rng.gen())).unwrap()
    };
    let alice = strategy();
    Protocol::new(alice, strategy()).unwrap()
}

/// Box invariants checked from the raw rows.
fn invariant_violation(rows: &[[f64; 4]; 4]) -> f64 {
    let mut worst = 0.0f64;
    for row in rows {
        for &p in row {
            worst = worst.max(-p).max(p - 1.0);
        }
        worst = worst.max((row.iter().sum::<f64>() - 1.0).abs());
    }
    for x in 0..2 {
        for a in 0..2 {
            let alice = |y: usize| rows[2 * x + y][2 * a] + rows[2 * x + y][2 * a + 1];
            worst = worst.max((alice(0) - alice(1)).abs());
        }
    }
    for y in 0..2 {
        for b in 0..2 {
            let bob = |x: usize| rows[2 * x + y][b] + rows[2 * x + y][2 + b];
            worst = worst.max((bob(0) - bob(1)).abs());
        }
    }
    worst
}

fn no_signalling_preserved() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut rejected = 0;
    for i in 0..10_000 {
        let bx = if i % 2 == 0 {
            let mut r = || rng.gen_range(-1.0..=1.0);
            NoSignalingBox::general(BoxParams::new(r(), r(), r(), r()).unwrap()).unwrap()
        } else {
            random_box(&mut rng)
        };
        let proto = random_protocol(&mut rng);
        match distill(&proto, &bx) {
            Ok(out) => worst = worst.max(invariant_violation(out.rows())),
            Err(_) => rejected += 1,
        }
    }
    outcome(
        worst <= 1e-12 && rejected == 0,
        format!("10000 pairs, {rejected} rejected, max invariant violation {worst:.2e}"),
    )
}

fn adaptive_parity_convergence() -> Outcome {
    let mut worst = 0.0f64;
    let mut monotone = true;
    for e in [-0.9, 0.0, 0.9] {
        let bx = NoSignalingBox::general(BoxParams::correlated(e).unwrap()).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for k in 1..=6 {
            let v = distilled_value(&adaptive_parity_protocol(k).unwrap(), &bx).unwrap();
            worst = worst.max((v - adaptive_parity_correlated_value(e, k as u32).unwrap()).abs());
            monotone &= v > prev;
            prev = v;
        }
    }
    outcome(
        worst <= 1e-12 && monotone,
        format!("k = 1..6 at eps in {{-0.9, 0, 0.9}}: max deviation {worst:.2e}, strictly increasing: {monotone}"),
    )
}
