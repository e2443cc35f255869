//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run with `cargo test -p totient-forest --test acceptance`.

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::time::Instant;

use totient_forest::arboreal::{
    candidate_roots, fruit, grow_forest, grow_forest_with_roots, synthesize_case_equation, Caps, CaseEquation,
    ForestReport, TreeStatus,
};
use totient_forest::arith::{euler_phi, DivisorOrder};
use totient_forest::bounds::{validate_bound_empirically, BoundProvider};
use totient_forest::fiber::{totient_fiber, totient_fiber_ordered};
use totient_forest::scoreboard::{scoreboard_sequence, scoreboard_value};
use totient_forest::sequence::IncrementSequence;
use totient_forest::stats::{value_frequencies, FrequencyTable};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn naturals_equation() -> CaseEquation {
    CaseEquation::Closed {
        cases: BTreeMap::from([(1, vec![1, 2]), (2, vec![3, 4])]),
        otherwise: 4,
    }
}

const SQUARES_22: [u64; 18] = [9, 14, 15, 17, 24, 26, 30, 31, 32, 33, 34, 35, 38, 40, 47, 53, 59, 69];

fn squares_equation() -> CaseEquation {
    CaseEquation::Closed {
        cases: BTreeMap::from([
            (1, vec![1]),
            (2, vec![2]),
            (4, vec![3]),
            (6, vec![4, 5, 6]),
            (22, SQUARES_22.to_vec()),
        ]),
        otherwise: 16,
    }
}

/// Squares forest shared by the squares and property criteria.
fn squares_forest() -> Result<ForestReport, String> {
    let seq = IncrementSequence::squares();
    let caps = Caps::with_height(200);
    grow_forest(&seq, &BoundProvider::squares(), &caps).map_err(|e| e.to_string())
}

fn naturals_case_equation() -> Outcome {
    let seq = IncrementSequence::naturals();
    let values = scoreboard_sequence(&seq, 10_000).map_err(|e| e.to_string())?;
    let expected = naturals_equation();
    for (i, &v) in values.iter().enumerate() {
        let n = i as u64 + 1;
        check(expected.value_at(n) == Some(v), || format!("A({n}) = {v}"))?;
    }
    let caps = Caps::with_height(1000);
    let forest = grow_forest(&seq, &BoundProvider::naturals(), &caps).map_err(|e| e.to_string())?;
    let roots: Vec<u64> = forest.trees.iter().map(|t| t.root).collect();
    check(roots == [1, 2, 4, 6], || format!("roots {roots:?}"))?;
    let six = forest.tree(6).unwrap();
    check(
        six.fruit_heights.is_empty() && matches!(six.status, TreeStatus::Died { .. }),
        || format!("tree 6: {} with fruit {:?}", six.status, six.fruit_heights),
    )?;
    let eq = synthesize_case_equation(&forest, &seq).map_err(|e| e.to_string())?;
    check(eq == expected, || format!("synthesized {eq:?}"))?;
    Ok("direct n <= 10^4 and forest synthesis agree".into())
}

fn squares_case_equation(forest: &ForestReport) -> Outcome {
    let seq = IncrementSequence::squares();
    let expected = squares_equation();
    let values = scoreboard_sequence(&seq, 500).map_err(|e| e.to_string())?;
    for (i, &v) in values.iter().enumerate() {
        let n = i as u64 + 1;
        check(expected.value_at(n) == Some(v), || format!("A({n}) = {v}"))?;
    }
    let roots: Vec<u64> = forest.trees.iter().map(|t| t.root).collect();
    let expected_roots: Vec<u64> = std::iter::once(1).chain((2..=57).step_by(2)).collect();
    check(roots == expected_roots, || format!("roots {roots:?}"))?;
    let t22 = forest.tree(22).unwrap();
    let died_at = match t22.status {
        TreeStatus::Died { max_height } => max_height,
        s => return Err(format!("tree 22: {s}")),
    };
    check(died_at > 100, || format!("tree 22 died at {died_at}"))?;
    check(t22.fruit_heights == SQUARES_22, || {
        format!("tree 22 fruit {:?}", t22.fruit_heights)
    })?;
    let eq = synthesize_case_equation(forest, &seq).map_err(|e| e.to_string())?;
    check(eq == expected, || format!("synthesized {eq:?}"))?;
    Ok(format!(
        "direct n <= 500 and forest synthesis agree; tree 22 died at height {died_at} with 18 fruit"
    ))
}

const CUBE_VALUES: [u64; 13] = [1, 4, 12, 36, 40, 48, 72, 88, 96, 110, 112, 116, 156];

/// Reference shares in percent; `None` stands for "below 1%".
const CUBE_SHARES: [(u64, Option<f64>); 7] = [
    (88, Some(35.0)),
    (72, Some(23.0)),
    (116, Some(23.0)),
    (48, Some(14.0)),
    (96, Some(3.0)),
    (112, Some(2.0)),
    (36, None),
];

fn cube_rows(values: &[u64]) -> Result<(), String> {
    let seen: BTreeSet<u64> = values[..2000].iter().copied().collect();
    check(seen.iter().all(|v| CUBE_VALUES.contains(v)), || {
        format!("values {seen:?}")
    })?;
    let table = FrequencyTable::from_values(1, values).map_err(|e| e.to_string())?;
    let rows: [(u64, &[u64]); 6] = [
        (1, &[1]),
        (4, &[2]),
        (12, &[3, 4]),
        (40, &[6]),
        (110, &[13]),
        (156, &[9]),
    ];
    for (v, ns) in rows {
        check(table.n_list(v) == ns, || format!("value {v} at {:?}", table.n_list(v)))?;
    }
    Ok(())
}

fn cube_shares(values: &[u64], tolerance: f64) -> Outcome {
    let table = FrequencyTable::from_values(1, values).map_err(|e| e.to_string())?;
    let mut report = Vec::new();
    for (v, expected) in CUBE_SHARES {
        let pct = 100.0 * table.share(v);
        let ok = match expected {
            Some(e) => (pct - e).abs() <= tolerance,
            None => pct < 1.0 + tolerance,
        };
        check(ok, || format!("value {v}: {pct:.2}% vs {expected:?}"))?;
        report.push(format!("{v}:{pct:.1}%"));
    }
    Ok(report.join(" "))
}

fn cube_survivors() -> Outcome {
    let seq = IncrementSequence::cubes();
    let bound = BoundProvider::auto_for(&seq);
    check(bound.parity_polynomials().is_some(), || {
        format!("no derived bound: {bound}")
    })?;
    let caps = Caps::with_height(1000).node_cap(1_000_000).witness_window(2000);
    let forest = grow_forest(&seq, &bound, &caps).map_err(|e| e.to_string())?;
    let survived: Vec<u64> = forest
        .trees
        .iter()
        .filter(|t| t.status == TreeStatus::Survived { height_cap: 1000 })
        .map(|t| t.root)
        .collect();
    check(survived == [36, 48, 72, 88, 96, 112, 116], || {
        format!("survivors {survived:?}")
    })?;
    let undecided: Vec<u64> = forest
        .trees
        .iter()
        .filter(|t| !matches!(t.status, TreeStatus::Died { .. } | TreeStatus::Survived { .. }))
        .map(|t| t.root)
        .collect();
    check(undecided.is_empty(), || format!("undecided trees {undecided:?}"))?;
    Ok(format!(
        "bound {bound}; {} candidate roots, 7 survive, the rest die",
        forest.trees.len()
    ))
}

/// Totients of `0..=limit` by the additive sieve, independent of the library.
fn oracle_phi(limit: usize) -> Vec<u64> {
    let mut phi: Vec<u64> = (0..=limit as u64).collect();
    for p in 2..=limit {
        if phi[p] == p as u64 {
            for j in (p..=limit).step_by(p) {
                phi[j] -= phi[j] / p as u64;
            }
        }
    }
    phi
}

fn fiber_oracle() -> Outcome {
    const M: u64 = 2000;
    let limit = 2 * M * M;
    let phi = oracle_phi(limit as usize);
    let mut buckets: Vec<Vec<u64>> = vec![Vec::new(); M as usize + 1];
    for n in 1..=limit {
        let v = phi[n as usize];
        if v <= M {
            buckets[v as usize].push(n);
        }
    }
    for m in 1..=M {
        let fast = totient_fiber(m).map_err(|e| e.to_string())?;
        check(fast.members == buckets[m as usize], || {
            format!("fiber of {m}: {:?}", fast.members)
        })?;
        let asc = totient_fiber_ordered(m, DivisorOrder::Ascending).map_err(|e| e.to_string())?;
        check(asc == fast, || format!("orders disagree at {m}"))?;
    }
    let f = |m| totient_fiber(m).unwrap().members;
    check(f(24) == [35, 39, 45, 52, 56, 70, 72, 78, 84, 90], || {
        format!("fiber 24 {:?}", f(24))
    })?;
    check(f(14).is_empty(), || "fiber 14 nonempty".into())?;
    check(f(1) == [1, 2], || format!("fiber 1 {:?}", f(1)))?;
    Ok(format!("m <= {M} against a sieve to {limit}"))
}

fn bound_conformance() -> Outcome {
    let nat = IncrementSequence::naturals();
    let v = validate_bound_empirically(&nat, &BoundProvider::naturals(), 10_000).map_err(|e| e.to_string())?;
    check(v.is_empty(), || {
        format!("naturals violations {:?}", &v[..v.len().min(3)])
    })?;
    let sq = IncrementSequence::squares();
    let v = validate_bound_empirically(&sq, &BoundProvider::squares(), 2000).map_err(|e| e.to_string())?;
    check(v.is_empty(), || {
        format!("squares violations {:?}", &v[..v.len().min(3)])
    })?;
    let image = value_frequencies(&nat, 1..=10_000).map_err(|e| e.to_string())?;
    let values: Vec<u64> = image.values().collect();
    check(values.iter().all(|v| [1, 2, 4].contains(v)), || {
        format!("image {values:?}")
    })?;
    Ok("no violations; naturals image within {1,2,4}".into())
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn phi_properties() -> Result<(), String> {
    let phi = |n| euler_phi(n).unwrap();
    for n in 1..=5000u64 {
        let p = phi(n);
        check(p == 1 || p % 2 == 0, || format!("phi({n}) = {p} is odd"))?;
        let half = phi(2 * n);
        check(half <= n, || format!("phi(2*{n}) = {half}"))?;
        check((half == n) == n.is_power_of_two(), || {
            format!("phi(2*{n}) = {n} equality case")
        })?;
    }
    for a in 1..=150u64 {
        for b in 1..=150u64 {
            if gcd(a, b) == 1 {
                check(phi(a * b) == phi(a) * phi(b), || format!("phi({a}*{b})"))?;
            }
        }
    }
    Ok(())
}

fn fruit_agreement(forest: &ForestReport, seq: &IncrementSequence) -> Result<(), String> {
    let mut owner = BTreeMap::new();
    for tree in &forest.trees {
        for &h in &tree.fruit_heights {
            let direct = scoreboard_value(seq, h).map_err(|e| e.to_string())?;
            check(direct == tree.root, || {
                format!("{seq}: fruit {h} in tree {} but A = {direct}", tree.root)
            })?;
            owner.insert(h, tree.root);
        }
    }
    for n in 1..=200u64 {
        let direct = scoreboard_value(seq, n).map_err(|e| e.to_string())?;
        check(owner.get(&n) == Some(&direct), || {
            format!("{seq}: n = {n} owned by {:?}", owner.get(&n))
        })?;
    }
    Ok(())
}

fn memo_agreement(seq: &IncrementSequence, bound: &BoundProvider) -> Result<(), String> {
    let caps = Caps::with_height(60);
    for root in candidate_roots(bound, &caps).map_err(|e| e.to_string())? {
        let with = fruit(root, 0, seq, bound, &caps, true).map_err(|e| e.to_string())?;
        let without = fruit(root, 0, seq, bound, &caps, false).map_err(|e| e.to_string())?;
        check(with == without, || format!("{seq}: tree {root} memo disagreement"))?;
    }
    Ok(())
}

fn property_suites(squares: &ForestReport) -> Outcome {
    phi_properties()?;
    let nat = IncrementSequence::naturals();
    let nat_forest = grow_forest_with_roots(&nat, &BoundProvider::naturals(), &Caps::with_height(200), &[1, 2, 4, 6])
        .map_err(|e| e.to_string())?;
    fruit_agreement(&nat_forest, &nat)?;
    check(squares.trees.iter().all(|t| t.is_complete()), || {
        "squares forest incomplete".into()
    })?;
    fruit_agreement(squares, &IncrementSequence::squares())?;
    memo_agreement(&nat, &BoundProvider::naturals())?;
    memo_agreement(&IncrementSequence::squares(), &BoundProvider::squares())?;
    Ok("phi identities, fruit/direct agreement n <= 200, memo agreement to height 60".into())
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: &str, name: &str, start: Instant, outcome: Outcome| {
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id} PASS [{secs:.1}s] {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {id} FAIL [{secs:.1}s] {name}: {why}");
            }
        }
    };

    let t = Instant::now();
    report("1", "naturals case equation", t, naturals_case_equation());

    let t = Instant::now();
    let squares = squares_forest();
    let outcome = squares.as_ref().map_err(Clone::clone).and_then(squares_case_equation);
    report("2", "squares case equation", t, outcome);

    let t = Instant::now();
    let cubes = scoreboard_sequence(&IncrementSequence::cubes(), 6000).map_err(|e| e.to_string());
    let rows = cubes.as_ref().map_err(Clone::clone).and_then(|v| cube_rows(v));
    let outcome = rows
        .clone()
        .and_then(|_| cube_shares(&cubes.as_ref().unwrap()[..2000], 5.0));
    report("3a", "cube values and shares, n <= 2000, +-5 points", t, outcome);
    let t = Instant::now();
    let outcome = rows.and_then(|_| cube_shares(cubes.as_ref().unwrap(), 2.0));
    report("3b", "cube shares, n <= 6000, +-2 points", t, outcome);

    let t = Instant::now();
    report("4", "cube survivors at height 1000", t, cube_survivors());

    let t = Instant::now();
    report("5", "inverse totient oracle", t, fiber_oracle());

    let t = Instant::now();
    report("6", "bound conformance", t, bound_conformance());

    let t = Instant::now();
    let outcome = squares.as_ref().map_err(Clone::clone).and_then(property_suites);
    report("7", "property suites", t, outcome);

    if failed == 0 {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
