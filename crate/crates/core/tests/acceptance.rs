//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion does.
//!
//! Run with `cargo test -p czc-core --test acceptance -- --nocapture`.

use std::sync::OnceLock;
use std::time::Instant;

use czc_core::catalog::{self, CrossRow};
use czc_core::census::{self, CensusConfig, CensusReport, OrbitDataset, Verdict};
use czc_core::index::{ell_zero, reciprocal_mean_sum};
use czc_core::jump::{find_jump, lemma52_check, verify_jump, JumpCertificate, JumpParams, JumpRequest, Side, Sides};
use czc_core::{ExactReal, OrbitModel, PrequantSpec, RadicalSum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Reports = Vec<(String, PrequantSpec, Result<CensusReport, String>)>;
type Criterion = (&'static str, fn() -> Outcome);

fn axes(list: &[&str]) -> Vec<ExactReal> {
    list.iter().map(|s| s.parse().unwrap()).collect()
}

/// Ellipsoids with n <= 3 used throughout.
fn ellipsoid_axes() -> Vec<Vec<ExactReal>> {
    vec![
        axes(&["1", "sqrt2"]),
        axes(&["1", "sqrt3"]),
        axes(&["1", "sqrt2", "sqrt3"]),
        axes(&["sqrt2", "sqrt3", "sqrt5"]),
        axes(&["1", "sqrt2", "sqrt3", "sqrt5"]),
    ]
}

/// Every (spec, dataset) in the catalog exercised here: ellipsoids and lens quotients.
fn catalog_datasets() -> Vec<(String, PrequantSpec, OrbitDataset)> {
    let mut out = Vec::new();
    for a in ellipsoid_axes() {
        let (spec, data) = catalog::ellipsoid(&a).unwrap();
        out.push((format!("E{a:?}"), spec, data));
    }
    for p in 2..=7u64 {
        for a in [axes(&["1", "sqrt2"]), axes(&["1", "sqrt2", "sqrt3"])] {
            let weights = vec![1; a.len()];
            let (spec, data) = catalog::lens(p, &weights, &a).unwrap();
            out.push((format!("L{p}(n={})", data.n), spec, data));
        }
    }
    out
}

fn config() -> CensusConfig {
    CensusConfig::default()
}

/// Independent `betti_M`: direct sum over base degrees.
fn betti_m_oracle(spec: &PrequantSpec, k: i64) -> u64 {
    let step = 2 * spec.c_b as i64;
    spec.betti
        .iter()
        .enumerate()
        .filter(|(j, _)| {
            let diff = k + spec.n as i64 - *j as i64;
            diff > 0 && diff % step == 0
        })
        .map(|(_, b)| *b)
        .sum()
}

fn criterion_1() -> Outcome {
    let want: Vec<CrossRow> = [
        ("S^{2n+1}", "n+1", "n+1"),
        ("S*S^2 or S*RP^2", "2", "2"),
        ("S*S^m or S*RP^m with m>2 even", "m", "m-1"),
        ("S*S^m or S*RP^m with m odd", "m+1", "m-1"),
        ("S*CP^m", "m(m+1)", "m"),
        ("S*HP^m", "2m(m+1)", "2m+1"),
        ("S*CaP^2", "24", "11"),
    ]
    .iter()
    .map(|(n, r, c)| CrossRow { name: n.to_string(), r_b: r.to_string(), c_b: c.to_string() })
    .collect();
    let got = catalog::cross_table();
    let got_json = serde_json::to_string(&got).unwrap();
    let want_json = serde_json::to_string(&want).unwrap();
    let matched = got.iter().zip(&want).filter(|(g, w)| g == w).count();
    if got.len() == 7 && got_json == want_json {
        Ok(format!("{matched}/7 rows byte-identical"))
    } else {
        Err(format!("{matched}/7 rows match; got {got_json}"))
    }
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let (spec, data) = catalog::ellipsoid(&axes(&["1", "sqrt2"])).unwrap();
    let table = census::chain_match(&data, &spec, 101).unwrap();
    let elapsed = start.elapsed();
    for row in &table.rows {
        let expect = u64::from(row.k >= 3 && row.k % 2 == 1);
        if row.c != expect || row.b != expect || betti_m_oracle(&spec, row.k) != expect {
            return Err(format!("S^3 degree {}: c = {}, b = {}, expected {expect}", row.k, row.c, row.b));
        }
    }
    if table.rows.last().map(|r| r.k) != Some(101) {
        return Err("S^3 table does not reach degree 101".into());
    }
    if elapsed.as_secs_f64() >= 1.0 {
        return Err(format!("S^3 chain took {elapsed:?}"));
    }
    let (spec, data) = catalog::ellipsoid(&axes(&["1", "sqrt2", "sqrt3"])).unwrap();
    let table = census::chain_match(&data, &spec, 200).unwrap();
    let rows: Vec<_> = table.rows.iter().filter(|r| (4..=200).contains(&r.k)).collect();
    if rows.len() != 197 {
        return Err(format!("S^5 table covers {} of 197 degrees", rows.len()));
    }
    if let Some(bad) = rows.iter().find(|r| r.c != r.b || r.b != betti_m_oracle(&spec, r.k)) {
        return Err(format!("S^5 degree {}: c = {}, b = {}", bad.k, bad.c, bad.b));
    }
    Ok(format!("S^3 odd k in [3,101] all 1 in {elapsed:?}; S^5 c_k = b_k on [4,200]"))
}

/// Random surd axes with pairwise irrational ratios, all in quadratic fields.
fn random_axes(rng: &mut ChaCha8Rng, count: usize) -> Vec<ExactReal> {
    const ROOTS: [i128; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    loop {
        let list: Vec<ExactReal> = if rng.gen_bool(0.5) {
            // q_i sqrt(p_i) with distinct square-free p_i (p = 1 allowed once).
            let mut roots: Vec<i128> = std::iter::once(1).chain(ROOTS).collect();
            let mut list = Vec::new();
            for _ in 0..count {
                let r = roots.remove(rng.gen_range(0..roots.len()));
                let q = ExactReal::rational(rng.gen_range(1..6), rng.gen_range(1..6)).unwrap();
                let base = if r == 1 { ExactReal::integer(1) } else { ExactReal::sqrt(r).unwrap() };
                list.push(base.mul_rational(q.as_rational().unwrap().0, q.as_rational().unwrap().1).unwrap());
            }
            list
        } else {
            // a + b sqrt(r) in one field.
            let r = ROOTS[rng.gen_range(0..ROOTS.len())];
            (0..count)
                .map(|_| ExactReal::surd(rng.gen_range(1..20), rng.gen_range(1..10), r, rng.gen_range(1..5)).unwrap())
                .collect()
        };
        if catalog::ellipsoid(&list).is_ok() {
            return list;
        }
    }
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    for i in 0..50 {
        let n = 1 + i % 3;
        let a = random_axes(&mut rng, n + 1);
        let (spec, data) = catalog::ellipsoid(&a).map_err(|e| e.to_string())?;
        let sign: i128 = if n % 2 == 0 { 1 } else { -1 };
        let target = RadicalSum::from(&ExactReal::rational(sign, 2).unwrap());
        let sum = census::resonance_sum(&data).map_err(|e| e.to_string())?;
        let euler = spec.mean_euler().map_err(|e| e.to_string())?;
        let closed = ExactReal::rational(sign * spec.r_b() as i128, 2 * spec.c_b as i128).unwrap();
        if sum != target || RadicalSum::from(&euler) != target || euler != closed {
            return Err(format!("axes {a:?}: sum {sum}, mean_euler {euler}"));
        }
        checked += 1;
    }
    Ok(format!("{checked}/50 ellipsoids (n = 1, 2, 3) give (-1)^n/2 exactly"))
}

fn random_profile(rng: &mut ChaCha8Rng) -> PrequantSpec {
    let n = rng.gen_range(0..=6usize);
    let c = rng.gen_range(1..=5u64);
    let mut betti = vec![0u64; 2 * n + 1];
    for i in 0..=n / 2 {
        let v = rng.gen_range(0..4u64) + u64::from(i == 0);
        betti[2 * i] = v;
        betti[2 * n - 2 * i] = v;
    }
    PrequantSpec::lacunary(n, c, betti).unwrap()
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checked = 0;
    while checked < 1000 {
        let spec = random_profile(&mut rng);
        // Valid s: 2 s c_B > 2n and s <= 20.
        let s_min = spec.n as u64 / spec.c_b + 1;
        if s_min > 20 {
            continue;
        }
        let s = rng.gen_range(s_min..=20);
        let lemma = spec.lemma_sum_identity(s).map_err(|e| e.to_string())?;
        let k_min = 2 * spec.c_b as i64 - spec.n as i64;
        let d = 2 * s as i64 * spec.c_b as i64;
        let brute: u64 = (k_min..=d).map(|k| betti_m_oracle(&spec, k)).sum();
        if !lemma.holds || lemma.lhs != 2 * brute as i64 || lemma.rhs != lemma.lhs {
            return Err(format!("profile {:?} c_B {} s {s}: {lemma:?}, brute {brute}", spec.betti, spec.c_b));
        }
        checked += 1;
    }
    Ok(format!("{checked}/1000 profiles hold, matching the brute-force sum"))
}

/// Largest `2^-j <= 1` with `eta * sum 1/mu_hat < 1`.
fn eta_for(orbits: &[OrbitModel]) -> ExactReal {
    let sum = reciprocal_mean_sum(orbits).unwrap();
    let mut eta = ExactReal::integer(1);
    while RadicalSum::from(&eta).mul(&sum) >= RadicalSum::from_integer(1) {
        eta = eta.mul_rational(1, 2).unwrap();
    }
    eta
}

/// Corruptions of a valid pair; every one must be rejected.
fn mutations(plus: &JumpCertificate, minus: &JumpCertificate, modulus: i64) -> Vec<(String, JumpCertificate, JumpCertificate)> {
    let mut out = Vec::new();
    for (tag, delta) in [("+N", modulus), ("-N", -modulus)] {
        let mut p = plus.clone();
        p.d += delta;
        out.push((format!("plus.d{tag}"), p, minus.clone()));
        let mut m = minus.clone();
        m.d += delta;
        out.push((format!("minus.d{tag}"), plus.clone(), m));
        for i in 0..plus.k.len() {
            let mut p = plus.clone();
            p.k[i] += delta;
            out.push((format!("plus.k{i}{tag}"), p, minus.clone()));
            let mut m = minus.clone();
            m.k[i] += delta;
            out.push((format!("minus.k{i}{tag}"), plus.clone(), m));
        }
    }
    let mut p = plus.clone();
    p.d += 1;
    out.push(("plus.d+1".into(), p, minus.clone()));
    let mut p = plus.clone();
    p.k.pop();
    out.push(("plus.drop".into(), p, minus.clone()));
    let mut p = plus.clone();
    p.side = Side::Minus;
    out.push(("plus.label".into(), p, minus.clone()));
    out
}

fn criterion_5() -> Outcome {
    let mut datasets = 0;
    let mut flagged = 0;
    let mut total = 0;
    for (name, spec, data) in catalog_datasets() {
        let orbits = data.collapsed().unwrap();
        let ell0 = ell_zero(&orbits, spec.n).unwrap();
        let modulus = 2 * spec.c_b;
        let params = JumpParams { eta: eta_for(&orbits), ell0, modulus, n_ambient: spec.n };
        let mut req = JumpRequest::new(orbits.clone(), params.clone(), Sides::Both, 100_000_000);
        req.min_k = ell0 as i64 + 2;
        req.min_d_exclusive = 2 * spec.n as i64;
        let (plus, minus) = match find_jump(&req) {
            Ok((Some(p), Some(m))) => (p, m),
            other => return Err(format!("{name}: search returned {other:?}")),
        };
        let report = verify_jump(&orbits, &plus, &minus, &params).map_err(|e| e.to_string())?;
        if !report.passed() {
            return Err(format!("{name}: verifier rejects {plus:?} {minus:?}: {:?}", report.violations));
        }
        for cert in [&plus, &minus] {
            let l = lemma52_check(cert, &spec).map_err(|e| format!("{name}: {e}"))?;
            if !l.holds || cert.d != 2 * l.s * spec.c_b as i64 || l.sum_k != l.s * spec.r_b() as i64 {
                return Err(format!("{name}: lemma fails on {cert:?}: {l:?}"));
            }
        }
        for (tag, p, m) in mutations(&plus, &minus, modulus as i64) {
            total += 1;
            match verify_jump(&orbits, &p, &m, &params) {
                Ok(r) if r.passed() => return Err(format!("{name}: mutation {tag} not flagged")),
                _ => flagged += 1,
            }
        }
        datasets += 1;
    }
    Ok(format!("{datasets} datasets certified and verified; {flagged}/{total} mutations flagged"))
}

fn census_of(spec: &PrequantSpec, data: &OrbitDataset) -> Result<CensusReport, String> {
    census::run_census(data, spec, &config()).map_err(|e| e.to_string())
}

/// Census of every catalog dataset, computed once and shared between criteria.
fn catalog_reports() -> &'static Reports {
    static REPORTS: OnceLock<Reports> = OnceLock::new();
    REPORTS.get_or_init(|| {
        catalog_datasets()
            .into_iter()
            .map(|(name, spec, data)| {
                let report = census_of(&spec, &data);
                (name, spec, report)
            })
            .collect()
    })
}

fn criterion_6() -> Outcome {
    let mut certified = Vec::new();
    for (name, spec, report) in catalog_reports() {
        let report = report.clone()?;
        if report.verdict != Verdict::Certified {
            return Err(format!("{name}: {:?}", report.verdict));
        }
        let expect = spec.n as i64 + 1;
        if report.r != report.r_b || report.r_b != expect {
            return Err(format!("{name}: r = {}, r_B = {}, expected {expect}", report.r, report.r_b));
        }
        certified.push(name);
    }
    Ok(format!("{} datasets certified with r = r_B = n+1", certified.len()))
}

fn criterion_7() -> Outcome {
    let mut deletions = 0;
    let mut parity = 0;
    for (name, spec, data) in catalog_datasets() {
        for i in 0..data.orbits.len() {
            let mut short = data.clone();
            short.orbits.remove(i);
            let report = census_of(&spec, &short)?;
            match &report.verdict {
                Verdict::Refuted { check, degree, .. } if !check.is_empty() => {
                    if check.starts_with("chain") && degree.is_none() {
                        return Err(format!("{name} minus orbit {i}: chain failure without a degree"));
                    }
                }
                other => return Err(format!("{name} minus orbit {i}: {other:?}")),
            }
            deletions += 1;
        }
        // Trading an elliptic block for an even hyperbolic one flips the parity of
        // every contractible iterate, whatever the torsion order.
        let mut extra = data.orbits[0].clone();
        extra.name = "intruder".into();
        extra.rotations.pop();
        extra.linear_even += 2;
        let mut bad = data.clone();
        bad.orbits.push(extra);
        let lac = census::check_lacunary(&bad).map_err(|e| e.to_string())?;
        let witnessed = lac.witness.as_ref().is_some_and(|w| (w.mu - w.other_mu).rem_euclid(2) == 1);
        if lac.pass || !witnessed {
            return Err(format!("{name}: parity breaker not caught: {lac:?}"));
        }
        let report = census_of(&spec, &bad)?;
        if !matches!(&report.verdict, Verdict::Refuted { check, .. } if check == "lacunary") {
            return Err(format!("{name}: census with parity breaker gives {:?}", report.verdict));
        }
        parity += 1;
    }
    Ok(format!("{deletions} deletions refuted; {parity} parity breakers caught with witnesses"))
}

fn criterion_8() -> Outcome {
    for n in 1..=8 {
        let b = PrequantSpec::sphere(n).finiteness_bound().map_err(|e| e.to_string())?;
        if b != n as u64 + 1 {
            return Err(format!("sphere n = {n}: bound {b}"));
        }
    }
    for m in [4u64, 6, 8, 10] {
        // Unit cosphere bundle of S^m, m even: the quadric of odd complex dimension m - 1.
        let n = (m - 1) as usize;
        let betti: Vec<u64> = (0..=2 * n).map(|k| u64::from(k % 2 == 0)).collect();
        let spec = PrequantSpec::lacunary(n, m - 1, betti).unwrap();
        let b = spec.finiteness_bound().map_err(|e| e.to_string())?;
        if (spec.r_b(), spec.c_b) != (m, m - 1) || b != m + 2 {
            return Err(format!("S*S^{m}: r_B {}, bound {b}", spec.r_b()));
        }
    }
    for m in [3u64, 5, 7, 9] {
        let spec = catalog::cross_spec(&format!("S*S^{m}")).map_err(|e| e.to_string())?;
        let b = spec.finiteness_bound().map_err(|e| e.to_string())?;
        if b != m + 3 {
            return Err(format!("S*S^{m}: bound {b}"));
        }
    }
    let mut certified = 0;
    for (name, spec, report) in catalog_reports() {
        let report = report.clone()?;
        let b = spec.finiteness_bound().unwrap() as i64;
        if report.verdict == Verdict::Certified {
            if report.r > b {
                return Err(format!("{name}: r = {} exceeds {b}", report.r));
            }
            certified += 1;
        }
    }
    Ok(format!("spheres n+1, S*S^m m+2 / m+3; r <= b on {certified} certified datasets"))
}

fn random_orbit(rng: &mut ChaCha8Rng) -> OrbitModel {
    const ROOTS: [i128; 6] = [2, 3, 5, 7, 11, 13];
    let rank = rng.gen_range(0..=3);
    let rotations = (0..rank)
        .map(|_| {
            let r = ROOTS[rng.gen_range(0..ROOTS.len())];
            let x = ExactReal::surd(rng.gen_range(-10..10), rng.gen_range(1..8), r, rng.gen_range(1..9)).unwrap();
            x.add_int(1 - x.floor()).unwrap()
        })
        .collect();
    let odd = (0..rng.gen_range(0..=2)).map(|_| 2 * rng.gen_range(-2..3) + 1).collect();
    OrbitModel::new("x", rotations, 2 * rng.gen_range(-2..4), odd, rng.gen_range(1..4)).unwrap()
}

fn criterion_9() -> Outcome {
    const CASES: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut counts = [0usize; 4];

    for _ in 0..CASES {
        let o = random_orbit(&mut rng);
        let k = rng.gen_range(1..100_000i64);
        // Parity law: mu(gamma^k) has the parity of mu(gamma) exactly when gamma^k is good.
        let same = (o.cz_index(k).unwrap() - o.cz_index(1).unwrap()).rem_euclid(2) == 0;
        if same != o.is_good(k).unwrap() {
            return Err(format!("parity law fails for {o:?} at k = {k}"));
        }
        counts[0] += 1;

        // |mu - k mu_hat| < e, with equality mu = k mu_hat when e = 0.
        let gap = RadicalSum::from_integer(o.cz_index(k).unwrap() as i128).sub(&o.mean_index(k));
        let e = RadicalSum::from_integer(o.elliptic_rank() as i128);
        let ok = if o.elliptic_rank() == 0 { gap.is_zero() } else { gap < e && gap > e.neg() };
        if !ok {
            return Err(format!("mean-index bound fails for {o:?} at k = {k}: gap {gap}"));
        }
        counts[1] += 1;

        // Floor quasi-additivity, per rotation and summed into the index.
        let (j, l) = (rng.gen_range(1..50_000i64), rng.gen_range(1..50_000i64));
        for r in &o.rotations {
            let g = r.floor_mul((j + l) as i128) - r.floor_mul(j as i128) - r.floor_mul(l as i128);
            if g != 0 && g != 1 {
                return Err(format!("floor gap {g} for {r} at {j}, {l}"));
            }
        }
        let g = o.cz_index(j + l).unwrap() - o.cz_index(j).unwrap() - o.cz_index(l).unwrap();
        let rank = o.elliptic_rank() as i64;
        if g.abs() > rank || (g - rank).rem_euclid(2) != 0 {
            return Err(format!("index gap {g} for {o:?} at {j}, {l}"));
        }
        counts[2] += 1;

        // betti_M(k + 2 c_B) = betti_M(k) + betti_B(k + n).
        let spec = random_profile(&mut rng);
        let k = rng.gen_range(-40..400i64);
        let step = 2 * spec.c_b as i64;
        let base = usize::try_from(k + spec.n as i64).ok().and_then(|i| spec.betti.get(i)).copied().unwrap_or(0);
        if spec.betti_m(k + step) != spec.betti_m(k) + base || spec.betti_m(k) != betti_m_oracle(&spec, k) {
            return Err(format!("recurrence fails for {:?} c_B {} at {k}", spec.betti, spec.c_b));
        }
        counts[3] += 1;
    }
    Ok(format!(
        "parity {} / mean bound {} / quasi-additivity {} / recurrence {} cases",
        counts[0], counts[1], counts[2], counts[3]
    ))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("table reproduction", criterion_1),
        ("ellipsoid chain match", criterion_2),
        ("resonance identity", criterion_3),
        ("truncated-sum lemma", criterion_4),
        ("jump certificates", criterion_5),
        ("census certifies", criterion_6),
        ("mutation refutation", criterion_7),
        ("finiteness bounds", criterion_8),
        ("index-model invariants", criterion_9),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} ({name}): PASS [{secs:.2}s] {detail}", i + 1),
            Err(detail) => {
                println!("criterion {} ({name}): FAIL [{secs:.2}s] {detail}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
