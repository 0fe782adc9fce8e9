//! Acceptance suite. Runs without the libtest harness so that each criterion
//! prints exactly one PASS/FAIL line; exits non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wick_core::perturbation::{
    extract_self_energy, greens, linked_cluster_reduce, order_contribution, GreensRequest, InteractionSpec, Particles,
};
use wick_core::{
    build_matrix, det_elimination, det_expansion, det_leibniz, expand_along_row, label, laplace_expand,
    oracle_expectation, perm_naive, perm_ryser, ContractionMatrix, ExactScalar, MatrixScalar, PairProduct, PointLabel,
    Ring, Statistics, SymbolicPropagator, SymbolicSum, TablePropagator,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn q(rng: &mut ChaCha8Rng) -> ExactScalar {
    ExactScalar::new(rng.gen_range(-9i64..=9), rng.gen_range(1i64..=9))
}

fn rows_of(n: usize) -> Vec<PointLabel> {
    (1..=n).map(|i| label(&format!("r{i}"))).collect()
}

fn cols_of(n: usize) -> Vec<PointLabel> {
    (1..=n).map(|i| label(&format!("c{i}"))).collect()
}

fn random_table(rng: &mut ChaCha8Rng, n: usize) -> TablePropagator {
    let mut t = TablePropagator::new();
    for r in rows_of(n) {
        for c in cols_of(n) {
            t.insert(r.clone(), c, q(rng));
        }
    }
    t
}

fn product(statistics: Statistics, n: usize, perm: &[usize]) -> PairProduct {
    let (rows, cols) = (rows_of(n), cols_of(n));
    PairProduct::new(statistics, (0..n).map(|a| (rows[a].clone(), cols[perm[a]].clone())).collect())
}

fn random_matrix(rng: &mut ChaCha8Rng, statistics: Statistics, n: usize) -> ContractionMatrix<ExactScalar> {
    ContractionMatrix::from_rows(statistics, (0..n).map(|_| (0..n).map(|_| q(rng)).collect()).collect())
}

fn symbolic_matrix(statistics: Statistics, n: usize) -> ContractionMatrix<SymbolicSum> {
    build_matrix(&product(statistics, n, &(0..n).collect::<Vec<_>>()), &SymbolicPropagator).unwrap()
}

/// Average (det or perm) equals the pairing sum, exhaustively over pair
/// divisions for n ≤ 4 and on 100 random tables for n = 5, 6, 7.
fn theorem_vs_oracle(statistics: Statistics, seed: u64) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = 0;
    for n in 0..=4 {
        let table = random_table(&mut rng, n);
        for perm in (0..n).permutations(n) {
            let p = product(statistics, n, &perm);
            let sym = SymbolicSum::average(&build_matrix(&p, &SymbolicPropagator).unwrap());
            let sym_oracle = oracle_expectation(&p, &SymbolicPropagator, 8).unwrap();
            check(sym == sym_oracle, || format!("symbolic n={n} perm={perm:?}"))?;
            let exact = ExactScalar::average(&build_matrix(&p, &table).unwrap());
            check(exact == oracle_expectation(&p, &table, 8).unwrap(), || format!("table n={n} perm={perm:?}"))?;
            cases += 2;
        }
    }
    for n in 5..=7 {
        for _ in 0..100 {
            let table = random_table(&mut rng, n);
            let perm: Vec<usize> = (0..n).collect();
            let p = product(statistics, n, &perm);
            let exact = ExactScalar::average(&build_matrix(&p, &table).unwrap());
            check(exact == oracle_expectation(&p, &table, 8).unwrap(), || format!("random n={n}"))?;
            cases += 1;
        }
    }
    Ok(cases)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let cases = theorem_vs_oracle(Statistics::Fermi, 101)?;
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("{cases} cases, det = pairing sum exactly, {:.2}s", elapsed.as_secs_f64()))
}

fn criterion_2() -> Outcome {
    let cases = theorem_vs_oracle(Statistics::Bose, 102)?;
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for n in 0..=8 {
        for _ in 0..5 {
            let m = random_matrix(&mut rng, Statistics::Bose, n);
            check(perm_ryser(&m) == perm_naive(&m), || format!("ryser != naive at n={n}"))?;
        }
    }
    let mut worst = 0.0f64;
    for n in 1..=12 {
        for _ in 0..3 {
            let m = random_matrix(&mut rng, Statistics::Bose, n);
            let exact = perm_ryser(&m).to_f64();
            let float = perm_ryser(&m.map(ExactScalar::to_f64));
            let rel = (float - exact).abs() / exact.abs().max(f64::MIN_POSITIVE);
            worst = worst.max(rel);
            check(rel <= 1e-10, || format!("float n={n} relative error {rel:e}"))?;
        }
    }
    Ok(format!("{cases} oracle cases; ryser = naive for n <= 8; float worst rel err {worst:.1e} for n <= 12"))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut checks = 0;
    for n in 1..=6 {
        for statistics in [Statistics::Fermi, Statistics::Bose] {
            let m = random_matrix(&mut rng, statistics, n);
            let reference = match statistics {
                Statistics::Fermi => det_leibniz(&m),
                Statistics::Bose => perm_naive(&m),
            };
            let s = symbolic_matrix(statistics, n);
            let s_reference = match statistics {
                Statistics::Fermi => det_leibniz(&s),
                Statistics::Bose => perm_naive(&s),
            };
            for row in 0..n {
                let e = expand_along_row(&m, row).map_err(|e| e.to_string())?;
                check(e.total == reference && e.summands.len() == n, || format!("n={n} row={row} {statistics:?}"))?;
                let es = expand_along_row(&s, row).map_err(|e| e.to_string())?;
                check(es.total == s_reference, || format!("symbolic n={n} row={row}"))?;
                checks += 2;
            }
        }
    }
    Ok(format!("{checks} row expansions equal the reference value (n <= 6)"))
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut checks = 0;
    for n in 2..=6 {
        let m = random_matrix(&mut rng, Statistics::Fermi, n);
        let det = det_leibniz(&m);
        for k in 1..n {
            for rows in (0..n).combinations(k) {
                let e = laplace_expand(&m, &rows).map_err(|e| e.to_string())?;
                check(e.terms.len() == binomial(n, k), || format!("n={n} rows={rows:?}: {} terms", e.terms.len()))?;
                check(e.total == det, || format!("n={n} rows={rows:?}: total differs"))?;
                checks += 1;
            }
        }
    }
    let s = symbolic_matrix(Statistics::Fermi, 4);
    let spot = laplace_expand(&s, &[0, 1]).map_err(|e| e.to_string())?;
    check(spot.terms.len() == 6 && spot.total == det_expansion(&s), || "4x4 rows {1,2} spot check".into())?;
    Ok(format!("{checks} row subsets, counts n!/m!(n-m)!, totals = det; 4x4 rows {{1,2}} -> 6 terms"))
}

fn criterion_5() -> Outcome {
    let mut checks = 0;
    for n in 2..=4 {
        for perm in (0..n).permutations(n) {
            let p = product(Statistics::Fermi, n, &perm);
            let det = SymbolicSum::average(&build_matrix(&p, &SymbolicPropagator).unwrap());
            let oracle = oracle_expectation(&p, &SymbolicPropagator, 8).unwrap();
            for (i, j) in (0..n).tuple_combinations() {
                let mut bar_swapped = p.clone();
                let (ci, cj) = (bar_swapped.pairs[i].1.clone(), bar_swapped.pairs[j].1.clone());
                bar_swapped.pairs[i].1 = cj;
                bar_swapped.pairs[j].1 = ci;
                let d = SymbolicSum::average(&build_matrix(&bar_swapped, &SymbolicPropagator).unwrap());
                let o = oracle_expectation(&bar_swapped, &SymbolicPropagator, 8).unwrap();
                check(d == det.neg() && o == oracle.neg(), || format!("label swap n={n} ({i},{j})"))?;

                let mut pair_swapped = p.clone();
                pair_swapped.pairs.swap(i, j);
                let d = SymbolicSum::average(&build_matrix(&pair_swapped, &SymbolicPropagator).unwrap());
                let o = oracle_expectation(&pair_swapped, &SymbolicPropagator, 8).unwrap();
                check(d == det && o == oracle, || format!("pair swap n={n} ({i},{j})"))?;
                checks += 2;
            }
        }
    }
    Ok(format!("{checks} swaps: label swap negates both sides, pair swap changes neither"))
}

fn golden(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display())).trim_end().to_string()
}

fn wick(args: &[&str], threads: Option<&str>) -> (i32, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_wick"));
    cmd.args(args);
    if let Some(t) = threads {
        cmd.env("RAYON_NUM_THREADS", t);
    }
    let out = cmd.output().expect("wick binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).expect("utf-8 output"))
}

fn criterion_6() -> Outcome {
    let spec = InteractionSpec::default();
    let g0 = greens(&GreensRequest::new(Particles::One, 0), &spec).map_err(|e| e.to_string())?;
    check(g0.to_json() == golden("greens_one_particle_order0.json"), || format!("order 0: {}", g0.expression))?;
    let g1 = greens(&GreensRequest::new(Particles::One, 1), &spec).map_err(|e| e.to_string())?;
    check(g1.to_json() == golden("greens_one_particle_order1.json"), || format!("order 1: {}", g1.expression))?;
    let sigma = extract_self_energy(&g1).map_err(|e| e.to_string())?;
    check(sigma.to_json() == golden("self_energy.json"), || format!("sigma: {}", sigma.expression))?;
    let (code, out) = wick(&["greens", "--particles", "1", "--order", "1", "--self-energy"], None);
    check(code == 0 && out.trim_end() == golden("self_energy.json"), || format!("cli exit {code}: {out}"))?;
    Ok(format!("G0(x1,x2) at order 0; Σ = {} ({} terms) matches golden", sigma.expression, sigma.expression.len()))
}

fn criterion_7() -> Outcome {
    let spec = InteractionSpec::default();
    let req = GreensRequest::new(Particles::Two, 1);
    let g = greens(&req, &spec).map_err(|e| e.to_string())?;
    check(g.to_json() == golden("greens_two_particle_order1.json"), || format!("G_II: {}", g.expression))?;
    let (code, out) = wick(&["greens", "--particles", "2", "--order", "1"], None);
    check(code == 0 && out.trim_end() == golden("greens_two_particle_order1.json"), || format!("cli exit {code}"))?;

    let x: Vec<PointLabel> = ["x1", "x2", "x4", "x3"].iter().map(|s| label(s)).collect();
    let swapped = greens(&GreensRequest::with_points(Particles::Two, 1, x), &spec).map_err(|e| e.to_string())?;
    check(swapped.expression == g.expression.neg(), || "not antisymmetric under x3 <-> x4".into())?;

    let zeroth = order_contribution(&GreensRequest::new(Particles::Two, 0), &spec, true).map_err(|e| e.to_string())?;
    let first = order_contribution(&req, &spec, true).map_err(|e| e.to_string())?;
    Ok(format!(
        "golden match, antisymmetric in x3 <-> x4; {} monomials after dummy merge ({} zeroth + {} first order before merge)",
        g.expression.len(),
        zeroth.len(),
        first.len()
    ))
}

fn criterion_8() -> Outcome {
    let spec = InteractionSpec::default();
    for particles in [Particles::One, Particles::Two] {
        let req = GreensRequest::new(particles, 1);
        let externals: BTreeSet<PointLabel> = req.external_points.iter().cloned().collect();
        let before = order_contribution(&req, &spec, true).map_err(|e| e.to_string())?;
        let full = order_contribution(&req, &spec, false).map_err(|e| e.to_string())?;
        let after = linked_cluster_reduce(&full, &externals);
        check(before == after, || format!("{particles:?}: {before} vs {after}"))?;
    }
    Ok("zero block before expansion = reduction after expansion, one- and two-particle".into())
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed())
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let m = random_matrix(&mut rng, Statistics::Fermi, 200);
    let (det, t_det) = timed(|| det_elimination(&m));
    check(!det.is_zero() && t_det < Duration::from_secs(10), || format!("det n=200 took {t_det:?}"))?;

    let f = ContractionMatrix::from_rows(
        Statistics::Bose,
        (0..20).map(|_| (0..20).map(|_| rng.gen::<f64>()).collect()).collect(),
    );
    let (perm, t_perm) = timed(|| perm_ryser(&f));
    check(perm.is_finite() && perm > 0.0 && t_perm < Duration::from_secs(30), || format!("perm n=20 took {t_perm:?}"))?;

    let table = random_table(&mut rng, 8);
    let p = product(Statistics::Fermi, 8, &(0..8).collect::<Vec<_>>());
    let (oracle, t_oracle) = timed(|| oracle_expectation(&p, &table, 8));
    let oracle = oracle.map_err(|e| e.to_string())?;
    check(oracle == det_elimination(&build_matrix(&p, &table).unwrap()), || "oracle n=8 value".into())?;
    check(t_oracle < Duration::from_secs(5), || format!("oracle n=8 took {t_oracle:?}"))?;
    Ok(format!(
        "det n=200 {:.2}s (<10), float perm n=20 {:.2}s (<30), oracle n=8 {:.2}s (<5)",
        t_det.as_secs_f64(),
        t_perm.as_secs_f64(),
        t_oracle.as_secs_f64()
    ))
}

fn write_problems(dir: &Path) -> Vec<PathBuf> {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let table = random_table(&mut rng, 5);
    let entries: Vec<serde_json::Value> =
        table.iter().map(|((l, r), v)| serde_json::json!({"left": l, "right": r, "value": v})).collect();
    let fermi = |n: usize| product(Statistics::Fermi, n, &(0..n).rev().collect::<Vec<_>>());
    let problems = [
        serde_json::json!({"pair_products": [fermi(3)]}),
        serde_json::json!({"pair_products": [fermi(5)], "provider": {"mode": "table", "entries": entries}}),
        serde_json::json!({"operators": [
            {"kind": "psibar", "point": "c1"}, {"kind": "phi-plus", "point": "r2"}, {"kind": "psi", "point": "r1"},
            {"kind": "phi-minus", "point": "c2"}, {"kind": "psi", "point": "r3"}, {"kind": "psibar", "point": "c3"}
        ]}),
    ];
    problems
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let path = dir.join(format!("problem{i}.json"));
            std::fs::write(&path, serde_json::to_string(p).unwrap()).unwrap();
            path
        })
        .collect()
}

/// Drops the timing column from bench CSV output.
fn without_timings(csv: &str) -> String {
    csv.lines().map(|line| line.split(',').enumerate().filter(|(i, _)| *i != 3).map(|(_, f)| f).join(",")).join("\n")
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let problems = write_problems(dir.path());
    let mut invocations: Vec<Vec<String>> = Vec::new();
    for p in &problems {
        let input = p.to_string_lossy().to_string();
        for cmd in
            [&["evaluate"][..], &["oracle-check"], &["laplace", "--rows", "1,3"], &["evaluate", "--format", "pretty"]]
        {
            let mut args: Vec<String> = cmd.iter().map(|s| s.to_string()).collect();
            args.extend(["--input".to_string(), input.clone()]);
            invocations.push(args);
        }
    }
    for g in [
        &["--particles", "1", "--order", "0"][..],
        &["--particles", "1", "--order", "1", "--self-energy"],
        &["--particles", "2", "--order", "1"],
    ] {
        invocations.push(std::iter::once("greens").chain(g.iter().copied()).map(String::from).collect());
    }
    invocations.push(["bench", "--mode", "det", "--sizes", "8,40,120", "--seed", "7"].map(String::from).to_vec());
    invocations
        .push(["bench", "--mode", "perm", "--float", "--sizes", "8,14", "--seed", "7"].map(String::from).to_vec());

    let mut runs = 0;
    for args in &invocations {
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        let is_bench = argv[0] == "bench";
        let mut outputs = Vec::new();
        for threads in [None, None, None, Some("1"), Some("4")] {
            let (code, out) = wick(&argv, threads);
            let out = if is_bench { without_timings(&out) } else { out };
            outputs.push((code, out));
            runs += 1;
        }
        check(outputs.windows(2).all(|w| w[0] == w[1]), || format!("`wick {}` output varies", args.join(" ")))?;
    }
    Ok(format!(
        "{} invocations x 5 runs (3 default, RAYON_NUM_THREADS=1, =4) byte-identical; {runs} runs",
        invocations.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("theorem equivalence (det)", criterion_1),
        ("boson analogue (perm)", criterion_2),
        ("row expansion", criterion_3),
        ("Laplace expansion", criterion_4),
        ("sign invariance", criterion_5),
        ("one-particle Green's function and self-energy", criterion_6),
        ("two-particle Green's function", criterion_7),
        ("linked-cluster commutation", criterion_8),
        ("performance floor", criterion_9),
        ("determinism", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS  criterion {:>2}: {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {:>2}: {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
