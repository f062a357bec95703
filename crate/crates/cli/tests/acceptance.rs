//! End-to-end acceptance checks. Each criterion prints one PASS or FAIL line;
//! the process exits non-zero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::Instant;

use asd::factor::{
    binary_product_reduce, extract_index_partition, factor_binary_audited, factor_perfect,
};
use asd::graph::{clique_via_reduction, gi_via_equivalence, Graph};
use asd::invariants::{capacity, perfectness_index, state_complexity, PerfectnessIndex};
use asd::minimize::{is_partition_minimal, is_state_minimal, minimize};
use asd::reduction::{
    decide_equivalence, find_reduction, ip_nonequiv_sim, random_equivalent, verify_reduction,
};
use asd::{Device, Partition, Reduction, SolverConfig};
use common::{lin, prod};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Outcome = Result<String, String>;

const EPS: f64 = 1e-12;

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

fn check(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn index(d: &Device) -> Option<usize> {
    match perfectness_index(d) {
        PerfectnessIndex::Finite(k) => Some(k),
        PerfectnessIndex::Infinite => None,
    }
}

// ---- running the binary ---------------------------------------------------

struct Cli {
    dir: PathBuf,
}

impl Cli {
    fn new() -> Self {
        let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
        fs::create_dir_all(&dir).unwrap();
        Self { dir }
    }

    fn save(&self, name: &str, d: &Device) -> String {
        let path = self.dir.join(format!("{name}.json"));
        fs::write(&path, d.to_json()).unwrap();
        path.to_str().unwrap().to_owned()
    }

    /// Exit code and parsed stdout.
    fn run(&self, args: &[&str]) -> (i32, Value) {
        let out = Command::new(env!("CARGO_BIN_EXE_asd")).args(args).output().unwrap();
        let text = String::from_utf8(out.stdout).unwrap();
        let value = serde_json::from_str(&text).unwrap_or(Value::Null);
        (out.status.code().unwrap_or(-1), value)
    }
}

// ---- criteria -------------------------------------------------------------

fn capacity_separation(cli: &Cli) -> Outcome {
    let l2_cubed = prod(&[lin(2), lin(2), lin(2)]);
    let l3_squared = prod(&[lin(3), lin(3)]);
    let (a, b) = (capacity(&l2_cubed), capacity(&l3_squared));
    check(a == 3.0 && common::capacity(&l2_cubed) == 3.0, || format!("C(L_2^3) = {a}"))?;
    check(b == 2.0 && common::capacity(&l3_squared) == 2.0, || format!("C(L_3^2) = {b}"))?;
    let (code, out) = cli.run(&["reduce", &cli.save("l2_cubed", &l2_cubed), &cli.save("l3_squared", &l3_squared)]);
    check(code == 1, || format!("reduce exited {code}"))?;
    check(out["fail"]["invariant"] == "capacity", || format!("reduce printed {out}"))?;
    Ok("C(L_2^3) = 3, C(L_3^2) = 2, reduce exits 1 on capacity".into())
}

fn perfectness_separation(cli: &Cli) -> Outcome {
    let l42 = prod(&[lin(4), lin(2)]);
    let l33 = prod(&[lin(3), lin(3)]);
    for (d, want, name) in [(&l42, 4, "L_4 x L_2"), (&l33, 3, "L_3 x L_3")] {
        let (lib, oracle) = (index(d), common::perfectness_index(d));
        check(lib == Some(want) && oracle == Some(want), || {
            format!("i({name}): library {lib:?}, enumeration {oracle:?}, expected {want}")
        })?;
    }
    let (code, out) = cli.run(&["reduce", &cli.save("l33", &l33), &cli.save("l42", &l42)]);
    check(code == 1, || format!("reduce exited {code}: {out}"))?;
    Ok(format!("i(L_4 x L_2) = 4, i(L_3 x L_3) = 3, reduce exits 1 ({})", out["fail"]["invariant"]))
}

fn product_separations(cli: &Cli) -> Outcome {
    let l33 = cli.save("l33", &prod(&[lin(3), lin(3)]));
    let l222 = cli.save("l222", &prod(&[lin(2), lin(2), lin(2)]));
    let (code, refuted) = cli.run(&["reduce", &l33, &l222]);
    check(code == 1, || format!("reduce(L_3^2, L_2^3) exited {code}: {refuted}"))?;
    // Second route: a reduction between these products needs a set of L_2
    // factors for each L_3 whose state counts multiply to 8, and no subset
    // of {4, 4, 4} does.
    let subset_products: Vec<usize> = (1u32..8).map(|mask| 4usize.pow(mask.count_ones())).collect();
    check(!subset_products.contains(&8), || "a grouping exists".into())?;

    let a = cli.save("l433", &prod(&[lin(4), lin(3), lin(3)]));
    let b = cli.save("l442", &prod(&[lin(4), lin(4), lin(2)]));
    let (code, out) = cli.run(&["equiv", &a, &b]);
    check(code == 1, || format!("equiv exited {code}"))?;
    let cert = &out["certificate"];
    check(cert["depth"] == 2 && cert["left"] != cert["right"], || format!("certificate {cert}"))?;
    Ok(format!(
        "L_3^2 </= L_2^3 ({}), L_4xL_3xL_3 not equiv L_4xL_4xL_2 ({}; depth-2 certificate over {} polynomials: {} vs {})",
        refuted["method"].as_str().unwrap_or("?"),
        out["not_equivalent"]["reason"],
        cert["polynomials"].as_array().map(|p| p.len()).unwrap_or(0),
        cert["left"],
        cert["right"]
    ))
}

fn linear_indices(_: &Cli) -> Outcome {
    for n in 1..=4 {
        let d = lin(n);
        let (lib, oracle) = (index(&d), common::perfectness_index(&d));
        check(lib == Some(n) && oracle == Some(n), || {
            format!("i(L_{n}): library {lib:?}, enumeration {oracle:?}")
        })?;
    }
    Ok("i(L_n) = n for n = 1..4".into())
}

fn sigma_bound(_: &Cli) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut violations = 0;
    let mut finite = 0;
    for _ in 0..500 {
        let d = common::random_device(&mut rng, 8, 6);
        let c = common::capacity(&d);
        check((capacity(&d) - c).abs() < EPS, || "capacity disagrees with direct count".into())?;
        check(index(&d) == common::perfectness_index(&d), || "perfectness index disagrees".into())?;
        if let Some(i) = common::perfectness_index(&d) {
            finite += 1;
            if common::sigma(&d) > i as f64 * c + EPS {
                violations += 1;
            }
        }
    }
    check(violations == 0, || format!("{violations} violations"))?;
    Ok(format!("500 devices ({finite} state-minimal), 0 violations"))
}

fn minimization(_: &Cli) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for trial in 0..500 {
        let d = common::random_device(&mut rng, 8, 6);
        let m = minimize(&d);
        let fail = |what: &str| format!("device {trial}: {what}");
        check(verify_reduction(&d, &m.device, &m.to_min).map_err(|e| e.to_string())?, || fail("to_min rejected"))?;
        check(verify_reduction(&m.device, &d, &m.from_min).map_err(|e| e.to_string())?, || fail("from_min rejected"))?;
        check(common::verify(&d, &m.device, &m.to_min), || fail("to_min fails direct check"))?;
        check(common::verify(&m.device, &d, &m.from_min), || fail("from_min fails direct check"))?;
        check(m.device.num_states() == common::meet_blocks(d.partitions()), || fail("state count"))?;
        check((state_complexity(&d) - common::sigma(&d)).abs() < EPS, || fail("state complexity"))?;
        check(is_state_minimal(&m.device) && is_partition_minimal(&m.device), || fail("not minimal"))?;
        check(minimize(&m.device).device.to_json() == m.device.to_json(), || fail("not idempotent"))?;
    }
    Ok("500 devices: witnesses verify, |S(Dmin)| = |meet|, minimal, idempotent".into())
}

fn solver_oracle(_: &Cli) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let corpus: Vec<Device> = (0..24).map(|_| common::random_device(&mut rng, 4, 3)).collect();
    let (mut pairs, mut yes, mut disagreements) = (0, 0, 0);
    for d in &corpus {
        for e in &corpus {
            pairs += 1;
            let expected = common::reduces(d, e);
            let found = find_reduction(d, e, &cfg()).map_err(|x| x.to_string())?.into_witness();
            yes += usize::from(expected.is_some());
            if found.is_some() != expected.is_some() {
                disagreements += 1;
            }
            if let Some(r) = &found {
                check(common::verify(d, e, r), || "witness fails direct check".into())?;
            }
        }
    }
    check(disagreements == 0, || format!("{disagreements} disagreements over {pairs} pairs"))?;
    Ok(format!("{pairs} pairs ({yes} reducible), 0 disagreements"))
}

fn clique_encoding(_: &Cli) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut checks, mut found, mut disagreements) = (0, 0, 0);
    for g_index in 0..120 {
        let n = 4 + g_index % 4;
        let density = [0.3, 0.5, 0.7, 0.9][g_index / 4 % 4];
        let g = common::random_connected_graph(&mut rng, n, density);
        for k in [4, 5] {
            checks += 1;
            let expected = common::has_clique(&g, k);
            let got = clique_via_reduction(&g, k, &cfg()).map_err(|e| e.to_string())?;
            if got.is_some() != expected {
                disagreements += 1;
            }
            if let Some(vs) = got {
                found += 1;
                check(common::is_clique(&g, &vs) && vs.len() == k, || format!("bad clique {vs:?}"))?;
            }
        }
    }
    check(disagreements == 0, || format!("{disagreements} disagreements"))?;
    Ok(format!("120 graphs, {checks} checks ({found} cliques found and re-verified), 0 disagreements"))
}

fn relabel(rng: &mut ChaCha8Rng, g: &Graph) -> Graph {
    let n = g.num_vertices();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    g.relabeled(&perm, (0..n).map(|i| format!("w{i}")).collect()).unwrap()
}

fn isomorphism_encoding(_: &Cli) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let n = rng.gen_range(4..=7);
        let g = common::random_connected_graph(&mut rng, n, 0.4);
        let h = relabel(&mut rng, &g);
        let phi = gi_via_equivalence(&g, &h, &cfg()).map_err(|e| e.to_string())?;
        check(phi.as_ref().is_some_and(|p| common::is_isomorphism(&g, &h, p)), || {
            format!("relabeled pair not matched: {phi:?}")
        })?;
    }
    let mut negatives = 0;
    while negatives < 50 {
        let n = rng.gen_range(4..=7);
        let g = common::random_connected_graph(&mut rng, n, 0.4);
        let h = common::random_connected_graph(&mut rng, n, 0.4);
        if common::degree_sequence(&g) == common::degree_sequence(&h) {
            continue;
        }
        negatives += 1;
        let phi = gi_via_equivalence(&g, &h, &cfg()).map_err(|e| e.to_string())?;
        check(phi.is_none(), || "non-isomorphic pair reported equivalent".into())?;
    }
    Ok("50 relabeled pairs equivalent with valid maps, 50 non-isomorphic pairs rejected".into())
}

/// Source and target binary factor lists with equal state counts.
fn binary_instance(rng: &mut ChaCha8Rng) -> (Vec<Device>, Vec<Device>) {
    let count = rng.gen_range(1..=3);
    let sizes: Vec<usize> = (0..count).map(|_| rng.gen_range(3..=4)).collect();
    let ds: Vec<Device> = sizes.iter().map(|&s| common::random_binary_factor(rng, s)).collect();
    let es = if rng.gen_bool(0.5) {
        let mut es: Vec<Device> = ds.iter().map(|d| common::shuffled(rng, d)).collect();
        es.shuffle(rng);
        es
    } else {
        let mut sizes = sizes;
        sizes.shuffle(rng);
        sizes.iter().map(|&s| common::random_binary_factor(rng, s)).collect()
    };
    (ds, es)
}

fn grouping_lemma(_: &Cli) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut yes, mut extracted) = (0, 0);
    for trial in 0..100 {
        let (ds, es) = binary_instance(&mut rng);
        let (d, e) = (prod(&ds), prod(&es));
        let grouped = binary_product_reduce(&ds, &es, &cfg()).map_err(|x| x.to_string())?;
        let generic = find_reduction(&d, &e, &SolverConfig::generic()).map_err(|x| x.to_string())?.into_witness();
        check(grouped.is_some() == generic.is_some(), || format!("instance {trial}: grouping and generic search disagree"))?;
        if let Some(g) = &grouped {
            yes += 1;
            for (i, group) in g.groups.groups().iter().enumerate() {
                let target = prod(&group.iter().map(|&j| es[j].clone()).collect::<Vec<_>>());
                check(common::verify(&ds[i], &target, &g.reductions[i]), || {
                    format!("instance {trial}: factor reduction {i} fails")
                })?;
            }
        }
        if let Some(r) = generic {
            let tau = extract_index_partition(&r, &ds, &es).map_err(|x| x.to_string())?;
            extracted += 1;
            for (i, group) in tau.groups().iter().enumerate() {
                let target = prod(&group.iter().map(|&j| es[j].clone()).collect::<Vec<_>>());
                check(common::reduces(&ds[i], &target).is_some(), || {
                    format!("instance {trial}: extracted group {i} does not reduce")
                })?;
            }
        }
    }
    Ok(format!("100 instances ({yes} reducible), groupings verify, {extracted} extracted groupings verify"))
}

fn same_up_to_order(a: &[Device], b: &[Device]) -> bool {
    let mut order: Vec<usize> = (0..b.len()).collect();
    let eq = |x: &Device, y: &Device| decide_equivalence(x, y, &cfg()).unwrap().is_equivalent();
    fn permutations(v: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
        if k == v.len() {
            out.push(v.clone());
        }
        for i in k..v.len() {
            v.swap(k, i);
            permutations(v, k + 1, out);
            v.swap(k, i);
        }
    }
    let mut all = Vec::new();
    permutations(&mut order, 0, &mut all);
    a.len() == b.len() && all.iter().any(|p| p.iter().enumerate().all(|(i, &j)| eq(&a[i], &b[j])))
}

fn factor_round_trip(_: &Cli) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut found = 0;
    for trial in 0..50 {
        let count = rng.gen_range(1..=3);
        let originals: Vec<Device> = (0..count)
            .map(|_| match rng.gen_range(2..=4) {
                2 => Device::perfect(2).unwrap(),
                s => common::random_binary_factor(&mut rng, s),
            })
            .collect();
        let d = prod(&originals);
        let (factors, audit) = factor_binary_audited(&d, 4, &cfg())
            .map_err(|e| e.to_string())?
            .ok_or_else(|| format!("product {trial} did not factor"))?;
        check(same_up_to_order(&factors, &originals), || format!("product {trial}: factors differ"))?;
        check(audit.complete && audit.unique, || format!("product {trial}: audit {audit:?}"))?;
        found += audit.factorizations_found;
    }
    Ok(format!("50 products recovered; audit found {found} factorizations, all matching"))
}

fn product_laws(_: &Cli) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for trial in 0..1000 {
        let (n, n2) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        let (g, h) = (common::ground(n), common::ground(n2));
        let p = common::partition(&g, &common::random_keys(&mut rng, n));
        let r = common::partition(&g, &common::random_keys(&mut rng, n));
        let p2 = common::partition(&h, &common::random_keys(&mut rng, n2));
        let r2 = common::partition(&h, &common::random_keys(&mut rng, n2));
        let x = |a: &Partition, b: &Partition| a.product(b).unwrap();
        let (pp, rr) = (x(&p, &p2), x(&r, &r2));
        let fail = |what: &str| format!("quadruple {trial}: {what}");
        check(pp.meet(&rr).unwrap() == x(&p.meet(&r).unwrap(), &p2.meet(&r2).unwrap()), || fail("meet"))?;
        check(pp.join(&rr).unwrap() == x(&p.join(&r).unwrap(), &p2.join(&r2).unwrap()), || fail("join"))?;
        let componentwise = p.refines(&r).unwrap() && p2.refines(&r2).unwrap();
        check(pp.refines(&rr).unwrap() == componentwise, || fail("refinement"))?;
    }
    Ok("1000 quadruples satisfy the meet, join and refinement identities".into())
}

fn interactive_proof(_: &Cli) -> Outcome {
    let a = common::device(4, &[vec![0, 0, 1, 1], vec![0, 1, 0, 1]]);
    let b = common::device(4, &[vec![0, 1, 1, 1], vec![0, 0, 1, 2]]);
    let apart = ip_nonequiv_sim(&a, &b, 100, 13, &cfg()).map_err(|e| e.to_string())?;
    check(apart.accept_rate == 1.0, || format!("non-equivalent accept rate {}", apart.accept_rate))?;
    let d = lin(3);
    let (twin, _) = random_equivalent(&d, 13);
    let same = ip_nonequiv_sim(&d, &twin, 200, 13, &cfg()).map_err(|e| e.to_string())?;
    check((0.38..=0.62).contains(&same.accept_rate), || format!("equivalent accept rate {}", same.accept_rate))?;
    Ok(format!(
        "non-equivalent: {} over 100; L_3 vs relabeling: {} over 200 (band [0.38, 0.62])",
        apart.accept_rate, same.accept_rate
    ))
}

fn perfect_factorization(_: &Cli) -> Outcome {
    let f = factor_perfect(12, &cfg()).map_err(|e| e.to_string())?;
    check(f.factors == vec![(2, 2), (3, 1)], || format!("factors {:?}", f.factors))?;
    check(f.certified == Some(true), || format!("certified {:?}", f.certified))?;
    // Direct witnesses: both devices have the identity read, so any
    // bijection of states with the identity read mapped to itself works.
    let c12 = Device::perfect(12).unwrap();
    let parts: Vec<Device> = [2, 2, 3].iter().map(|&m| Device::perfect(m).unwrap()).collect();
    let p = prod(&parts);
    let bij: Vec<usize> = (0..12).collect();
    let there = Reduction { phi: bij.clone(), alpha: vec![0] };
    let back = Reduction { phi: bij, alpha: vec![0] };
    check(common::verify(&c12, &p, &there) && common::verify(&p, &c12, &back), || "direct witnesses fail".into())?;
    Ok("factor_perfect(12) = [(2,2),(3,1)], C_12 equiv C_2 x C_2 x C_3 certified".into())
}

fn main() -> ExitCode {
    let cli = Cli::new();
    let criteria: [(&str, fn(&Cli) -> Outcome); 14] = [
        ("capacity separation", capacity_separation),
        ("perfectness-index separation", perfectness_separation),
        ("product separations", product_separations),
        ("perfectness index of L_n", linear_indices),
        ("sigma <= i * C on random devices", sigma_bound),
        ("minimization soundness", minimization),
        ("solver agrees with enumeration", solver_oracle),
        ("clique encoding", clique_encoding),
        ("isomorphism encoding", isomorphism_encoding),
        ("binary product grouping", grouping_lemma),
        ("binary factorization round trip", factor_round_trip),
        ("product lattice laws", product_laws),
        ("interactive proof simulation", interactive_proof),
        ("perfect factorization", perfect_factorization),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| run(&cli)))
            .unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.2}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        criteria.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
