//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use exotic_core::canon::{canonical_form, is_isomorphic, symmetry_coefficient};
use exotic_core::duality::{is_aroma_extension, pairing, pairing_matrix, pairing_theta_free};
use exotic_core::elementary::{elementary_differential, sampled_rank};
use exotic_core::enumerate::{compositions_of_order, enumerate_aromas_by_order, enumerate_by_composition, enumerate_by_order, enumerate_up_to_order};
use exotic_core::equivariance::{classification_matrix, CheckConfig};
use exotic_core::gradient::{check_gradient_agreement, equivalence_class, exotic_normal_form, gradient_classes};
use exotic_core::notation::parse_tree;
use exotic_core::poly::{q, Poly, Q};
use exotic_core::{ExoticAromaticTree, PolyVectorField};
use num::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One catalog row: κ, κ′, τ, σ and the index form, as printed in the
/// reference tables.
struct Row {
    kappa: &'static [u32],
    kappa_prime: &'static [u32],
    tau: &'static [u32],
    sigma: &'static str,
    index: &'static str,
}

const fn row(kappa: &'static [u32], kappa_prime: &'static [u32], tau: &'static [u32], sigma: &'static str, index: &'static str) -> Row {
    Row { kappa, kappa_prime, tau, sigma, index }
}

const ORDER_1_2: &[Row] = &[
    row(&[1], &[0], &[], r"(\Circled{0},1)", r"f^i\partial_i"),
    row(&[0, 0, 1], &[0, 0, 2], &[1, 1], r"(\Circled{0},1)(\Circled{1},\Circled{2})", r"f_{jj}^i\partial_i"),
    row(&[0, 0, 1], &[0, 0, 2], &[1, 1], r"(\Circled{0},\Circled{1})(\Circled{2},1)", r"f^j_{ij}\partial_i"),
    row(&[1, 1], &[0, 1], &[1], r"(\Circled{0},1)(\Circled{1},2)", r"f^i_j f^j \partial_i"),
    row(&[1, 1], &[0, 1], &[1], r"(\Circled{0},2)(\Circled{1},1)", r"f^j_j f^i \partial_i"),
    row(&[1, 1], &[0, 1], &[1], r"(\Circled{0},\Circled{1})(1,2)", r"f^j f^j_i \partial_i"),
    row(&[3], &[0], &[], r"(\Circled{0},1)(2,3)", r"f^i f^j f^j \partial_i"),
];

const ORDER_3: &[Row] = &[
    row(&[0, 0, 0, 0, 1], &[0, 0, 0, 0, 4], &[1, 1, 1, 1], r"(\Circled{0},1)(\Circled{1},\Circled{2})(\Circled{3},\Circled{4})", r"f_{jjkk}^i\partial_i"),
    row(&[0, 0, 0, 0, 1], &[0, 0, 0, 0, 4], &[1, 1, 1, 1], r"(\Circled{0},\Circled{1})(\Circled{2},1)(\Circled{3},\Circled{4})", r"f^j_{ijkk}\partial_i"),
    row(&[0, 1, 1], &[0, 1, 2], &[1, 1, 2], r"(\Circled{0},2)(\Circled{1},\Circled{2})(\Circled{3},1)", r"f^i_j f^j_{kk} \partial_i"),
    row(&[0, 1, 1], &[0, 1, 2], &[1, 1, 2], r"(\Circled{0},2)(\Circled{1},1)(\Circled{2},\Circled{3})", r"f^i_j f^k_{jk} \partial_i"),
    row(&[0, 1, 1], &[0, 1, 2], &[1, 1, 2], r"(\Circled{0},\Circled{3})(1,2)(\Circled{1},\Circled{2})", r"f^j_i f^j_{kk} \partial_i"),
    row(&[0, 1, 1], &[0, 1, 2], &[1, 1, 2], r"(\Circled{0},\Circled{3})(\Circled{1},1)(\Circled{2},2)", r"f^j_i f^k_{jk} \partial_i"),
    row(&[0, 1, 1], &[0, 1, 2], &[1, 1, 2], r"(\Circled{0},1)(\Circled{1},2)(\Circled{2},\Circled{3})", r"f^i_{jk} f^j_k \partial_i"),
    row(&[0, 1, 1], &[0, 1, 2], &[1, 1, 2], r"(\Circled{0},\Circled{1})(\Circled{3},1)(\Circled{2},2)", r"f^k_{ij} f^j_k \partial_i"),
    row(&[0, 1, 1], &[0, 1, 2], &[1, 1, 2], r"(\Circled{0},\Circled{1})(1,2)(\Circled{2},\Circled{3})", r"f^j_{ik} f^j_k \partial_i"),
    row(&[0, 1, 1], &[0, 1, 2], &[1, 1, 2], r"(\Circled{0},1)(\Circled{1},\Circled{2})(\Circled{3},2)", r"f^i_{jj} f^k_k \partial_i"),
    row(&[0, 1, 1], &[0, 1, 2], &[1, 1, 2], r"(\Circled{0},\Circled{1})(\Circled{2},1)(\Circled{3},2)", r"f^j_{ij} f^k_k \partial_i"),
    row(&[1, 0, 0, 1], &[0, 0, 0, 3], &[1, 1, 1], r"(\Circled{0},1)(\Circled{1},2)(\Circled{2},\Circled{3})", r"f^i_{jkk} f^j \partial_i"),
    row(&[1, 0, 0, 1], &[0, 0, 0, 3], &[1, 1, 1], r"(\Circled{0},\Circled{1})(\Circled{2},1)(\Circled{3},2)", r"f^j_{ijk} f^k \partial_i"),
    row(&[1, 0, 0, 1], &[0, 0, 0, 3], &[1, 1, 1], r"(\Circled{0},\Circled{1})(\Circled{2},\Circled{3})(1,2)", r"f^j_{ikk} f^j \partial_i"),
    row(&[1, 0, 0, 1], &[0, 0, 0, 3], &[1, 1, 1], r"(\Circled{0},2)(\Circled{1},1)(\Circled{2},\Circled{3})", r"f^i  f^j_{jkk} \partial_i"),
    row(&[1, 2], &[0, 2], &[1, 2], r"(\Circled{0},1)(\Circled{1},2)(\Circled{2},3)", r"f^i_j f^j_k f^k \partial_i"),
    row(&[1, 2], &[0, 2], &[1, 2], r"(\Circled{0},1)(\Circled{1},\Circled{2})(2,3)", r"f^i_j f^k_j f^k \partial_i"),
    row(&[1, 2], &[0, 2], &[1, 2], r"(\Circled{0},\Circled{1})(1,2)(\Circled{2},3)", r"f^j_i f^j_k f^k \partial_i"),
    row(&[1, 2], &[0, 2], &[1, 2], r"(\Circled{0},\Circled{1})(\Circled{2},1)(2,3)", r"f^j_i f^k_j f^k \partial_i"),
    row(&[1, 2], &[0, 2], &[1, 2], r"(\Circled{0},1)(\Circled{1},3)(\Circled{2},2)", r"f^i_j f^j f^k_k \partial_i"),
    row(&[1, 2], &[0, 2], &[1, 2], r"(\Circled{0},\Circled{2})(\Circled{1},1)(2,3)", r"f^j_i f^j f^k_k \partial_i"),
    row(&[1, 2], &[0, 2], &[1, 2], r"(\Circled{0},3)(\Circled{1},2)(\Circled{2},1)", r"f^i f^j_k f^k_j \partial_i"),
    row(&[1, 2], &[0, 2], &[1, 2], r"(\Circled{0},3)(\Circled{1},\Circled{2})(1,2)", r"f^i f^j_k f^j_k \partial_i"),
    row(&[1, 2], &[0, 2], &[1, 2], r"(\Circled{0},3)(\Circled{1},1)(\Circled{2},2)", r"f^i f^j_j f^k_k \partial_i"),
    row(&[2, 0, 1], &[0, 0, 2], &[1, 1], r"(\Circled{0},1)(\Circled{1},2)(\Circled{2},3)", r"f^i_{jj} f^j f^j \partial_i"),
    row(&[2, 0, 1], &[0, 0, 2], &[1, 1], r"(\Circled{0},\Circled{1})(\Circled{2},2)(1,3)", r"f^j_{ik} f^j f^k \partial_i"),
    row(&[2, 0, 1], &[0, 0, 2], &[1, 1], r"(\Circled{0},1)(\Circled{1},\Circled{2})(2,3)", r"f^i_{jj} f^k f^k \partial_i"),
    row(&[2, 0, 1], &[0, 0, 2], &[1, 1], r"(\Circled{0},\Circled{1})(\Circled{2},1)(2,3)", r"f^j_{ij} f^k f^k \partial_i"),
    row(&[2, 0, 1], &[0, 0, 2], &[1, 1], r"(\Circled{0},2)(\Circled{1},1)(\Circled{2},3)", r"f^i f^j_{jk} f^k \partial_i"),
    row(&[2, 0, 1], &[0, 0, 2], &[1, 1], r"(\Circled{0},3)(\Circled{1},\Circled{2})(1,2)", r"f^i f^j f^j_{kk} \partial_i"),
    row(&[3, 1], &[0, 1], &[1], r"(\Circled{0},1)(\Circled{1},2)(3,4)", r"f^i_j f^j f^k f^k \partial_i"),
    row(&[3, 1], &[0, 1], &[1], r"(\Circled{0},4)(1,2)(\Circled{1},3)", r"f^i f^j f^j_k f^k \partial_i"),
    row(&[3, 1], &[0, 1], &[1], r"(\Circled{0},\Circled{1})(1,2)(3,4)", r"f^j_i f^j f^k f^k \partial_i"),
    row(&[3, 1], &[0, 1], &[1], r"(\Circled{0},2)(\Circled{1},1)(3,4)", r"f^i f^j f^j f^k_k \partial_i"),
    row(&[5], &[0], &[], r"(\Circled{0},1)(2,3)(4,5)", r"f^i f^j f^j f^k f^k \partial_i"),
];

/// Index forms in the table that are not well formed (an index used four
/// times), with the reading consistent with the row's σ and τ.
const INDEX_CORRECTIONS: &[(&str, &str)] = &[(r"f^i_{jj} f^j f^j \partial_i", r"f^i_{jk} f^j f^k \partial_i")];

fn sigma_notation(s: &str) -> String {
    let mut out = s.to_string();
    for k in 0..10 {
        out = out.replace(&format!(r"\Circled{{{k}}}"), &format!("a{k}"));
    }
    out
}

fn row_tree(r: &Row) -> ExoticAromaticTree {
    let nv = r.kappa.iter().sum::<u32>() as usize;
    ExoticAromaticTree::from_notation(nv, r.tau, &sigma_notation(r.sigma)).expect("table row is a valid tree")
}

fn trimmed(v: &[u32]) -> Vec<u32> {
    let mut v = v.to_vec();
    while v.last() == Some(&0) {
        v.pop();
    }
    v
}

/// Matches the enumerated trees of one order against table rows: a
/// bijection up to isomorphism with equal κ, κ′ and index form.
fn match_catalog(order: u32, rows: &[&Row]) -> Result<(), String> {
    let trees = enumerate_by_order(order);
    if trees.len() != rows.len() {
        return Err(format!("order {order}: {} trees, {} rows", trees.len(), rows.len()));
    }
    let mut used = vec![false; rows.len()];
    for t in &trees {
        let hit = rows.iter().position(|r| is_isomorphic(&row_tree(r), t));
        let Some(i) = hit else {
            return Err(format!("order {order}: no row for {t}"));
        };
        if used[i] {
            return Err(format!("order {order}: row {i} matched twice"));
        }
        used[i] = true;
        let r = rows[i];
        if trimmed(t.composition().counts()) != trimmed(r.kappa) || trimmed(&t.composition().derived()) != trimmed(r.kappa_prime) {
            return Err(format!("order {order}: κ/κ′ mismatch on row {i}"));
        }
        let index = match INDEX_CORRECTIONS.iter().find(|(bad, _)| *bad == r.index) {
            Some((bad, good)) => {
                if parse_tree(bad).is_ok() {
                    return Err(format!("correction listed for a well-formed entry {bad}"));
                }
                *good
            }
            None => r.index,
        };
        let parsed = parse_tree(index).map_err(|e| format!("row {i} `{index}`: {e}"))?;
        if !is_isomorphic(&parsed, t) {
            return Err(format!("order {order}: index form `{index}` does not match σ/τ of row {i}"));
        }
    }
    Ok(())
}

fn criterion_1() -> Result<String, String> {
    let start = Instant::now();
    let counts: Vec<usize> = (1..=3).map(|n| enumerate_by_order(n).len()).collect();
    if counts != [1, 6, 35] {
        return Err(format!("counts {counts:?}"));
    }
    let order1: Vec<&Row> = ORDER_1_2[..1].iter().collect();
    let order2: Vec<&Row> = ORDER_1_2[1..].iter().collect();
    let order3: Vec<&Row> = ORDER_3.iter().collect();
    match_catalog(1, &order1)?;
    match_catalog(2, &order2)?;
    match_catalog(3, &order3)?;
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(5) {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("1/6/35 trees, all rows matched, {} index correction, {elapsed:.2?}", INDEX_CORRECTIONS.len()))
}

fn criterion_2() -> Result<String, String> {
    let start = Instant::now();
    let trees = enumerate_up_to_order(4);
    for t in &trees {
        let k = t.composition();
        if k.size() + k.derived_size() + 1 != 2 * t.order() as u32 {
            return Err(format!("identity fails for {t}"));
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(60) {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("{} trees through order 4, {elapsed:.2?}", trees.len()))
}

fn laplacian(p: &Poly<Q>, d: usize) -> Poly<Q> {
    (0..d).fold(Poly::zero(), |acc, k| &acc + &p.derivative(k).derivative(k))
}

fn criterion_3() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let example = parse_tree(r"f^i f^j f^j_{kk} \partial_i").map_err(|e| e.to_string())?;
    for _ in 0..10 {
        let f = PolyVectorField::random(3, 3, 0.5, &mut rng);
        let x: Vec<Q> = (0..3).map(|i| exotic_core::poly::qr(i as i64 - 1, 2)).collect();
        let inner = (0..3).fold(Poly::zero(), |acc, j| &acc + &(f.component(j) * &laplacian(f.component(j), 3)));
        let expected: Vec<Q> = (0..3).map(|i| (&inner * f.component(i)).eval(&x)).collect();
        let got = elementary_differential(&example, &f, &x).map_err(|e| e.to_string())?;
        if got != expected {
            return Err(format!("(f,Δf)f mismatch on {f}"));
        }
    }
    let trees = enumerate_up_to_order(3);
    for _ in 0..5 {
        let f = PolyVectorField::random(1, 6, 0.8, &mut rng);
        let x = [exotic_core::poly::qr(2, 3)];
        for t in &trees {
            let mut expected = Q::one();
            for (j, &c) in t.composition().counts().iter().enumerate() {
                let mut p = f.component(0).clone();
                for _ in 0..j {
                    p = p.derivative(0);
                }
                for _ in 0..c {
                    expected = &expected * &p.eval(&x);
                }
            }
            let got = elementary_differential(t, &f, &x).map_err(|e| e.to_string())?;
            if got != [expected] {
                return Err(format!("d = 1 collapse fails for {t}"));
            }
        }
    }
    Ok(format!("10 fields in d = 3, {} trees × 5 fields in d = 1", trees.len()))
}

fn criterion_4() -> Result<String, String> {
    let mut connected: Vec<ExoticAromaticTree> = enumerate_up_to_order(3).into_iter().filter(|t| t.is_connected()).collect();
    let rooted = connected.len();
    for n in 1..=3 {
        connected.extend(enumerate_aromas_by_order(n).into_iter().filter(|t| t.is_connected()));
    }
    let m = pairing_matrix(&connected);
    let mut off = 0;
    let mut outside = 0;
    for (i, a) in connected.iter().enumerate() {
        if m[i][i] != q(symmetry_coefficient(a) as i64) {
            return Err(format!("diagonal {} ≠ σ for {a}", m[i][i]));
        }
        for (j, b) in connected.iter().enumerate() {
            // a rooted γ against an aroma γ̂ has no root coordinate to land on
            if a.is_rooted() && !b.is_rooted() {
                outside += 1;
                continue;
            }
            if i != j && !is_aroma_extension(a, b) {
                off += 1;
                if !m[i][j].is_zero() {
                    return Err(format!("pairing({a}, {b}) = {}", m[i][j]));
                }
            }
        }
    }
    let example = row_tree(&ORDER_3[4]);
    if pairing(&example, &example) != q(2) {
        return Err(format!("worked example pairing {}", pairing(&example, &example)));
    }
    // stolon-liana aroma against the two-node chain
    let aroma = ExoticAromaticTree::aroma_from_notation(2, &[1, 2], "(1,2)(a1,a2)").map_err(|e| e.to_string())?;
    let chain = parse_tree(r"f^i_j f^j \partial_i").map_err(|e| e.to_string())?;
    let (with, without) = (pairing(&aroma, &chain), pairing_theta_free(&aroma, &chain));
    if !with.is_zero() || without != q(1) {
        return Err(format!("first counterexample gives {with} / {without}"));
    }
    // two-node cycle aroma against the single loop
    let cycle = ExoticAromaticTree::aroma_from_notation(2, &[1, 2], "(a1,2)(a2,1)").map_err(|e| e.to_string())?;
    let single_loop = ExoticAromaticTree::aroma_from_notation(1, &[1], "(a1,1)").map_err(|e| e.to_string())?;
    let (with, without) = (pairing(&cycle, &single_loop), pairing_theta_free(&cycle, &single_loop));
    if !with.is_zero() || without != q(1) {
        return Err(format!("second counterexample gives {with} / {without}"));
    }
    Ok(format!(
        "{rooted} trees + {} aromas: diagonal = σ, {off} off-diagonal zeros ({outside} tree/aroma pairs out of scope), example = 2, θ-free values 1 and 1",
        connected.len() - rooted
    ))
}

fn criterion_5() -> Result<String, String> {
    let start = Instant::now();
    let table = classification_matrix(3, &CheckConfig::new(6, 4, 2024)).map_err(|e| e.to_string())?;
    if table.rows.len() != 42 {
        return Err(format!("{} rows", table.rows.len()));
    }
    if !table.witnesses_valid() {
        return Err("a negative verdict lacks a valid exact witness".into());
    }
    let negatives: usize = table.rows.iter().map(|r| r.reports.iter().filter(|x| !x.holds()).count()).sum();
    let worst = table
        .rows
        .iter()
        .flat_map(|r| &r.reports)
        .filter_map(|r| r.float_max_residual)
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(600) {
        return Err(format!("took {elapsed:?}"));
    }
    let summary: Vec<String> = table
        .summary()
        .iter()
        .map(|(p, in_class, passing, _)| format!("{}:{passing}/{in_class}", p.name()))
        .collect();
    Ok(format!(
        "42 × 6 agree, {negatives} witnesses re-verified, [{}], float residual {worst:.1e}, {elapsed:.1?}",
        summary.join(" ")
    ))
}

fn criterion_6() -> Result<String, String> {
    let mut pairs = 0;
    let classes = gradient_classes(3);
    let mut connected_classes = 0;
    for class in &classes {
        if !class[0].is_connected() {
            continue;
        }
        connected_classes += 1;
        let exotic = class.iter().filter(|t| t.classify().is_exotic_tree).count();
        if exotic != 1 {
            return Err(format!("class of {} has {exotic} exotic trees", class[0]));
        }
        for (i, a) in class.iter().enumerate() {
            for b in &class[i + 1..] {
                pairs += 1;
                let r = check_gradient_agreement(a, b, 5, pairs as u64);
                if !r.all_agree() {
                    return Err(format!("{a} and {b} differ on a gradient field"));
                }
            }
        }
    }
    let chains: [&[usize]; 3] = [&[26, 25], &[19, 17, 16], &[14, 13, 12]];
    for chain in chains {
        let trees: Vec<ExoticAromaticTree> = chain.iter().map(|&i| row_tree(&ORDER_3[i - 1])).collect();
        let class = equivalence_class(&trees[0]);
        if !trees.iter().all(|t| class.iter().any(|m| is_isomorphic(m, t))) {
            return Err(format!("chain from {} not closed", trees[0]));
        }
        let last = trees.last().expect("non-empty");
        let nf = exotic_normal_form(&trees[0]).map_err(|e| e.to_string())?;
        if !last.classify().is_exotic_tree || !is_isomorphic(&nf, last) {
            return Err(format!("chain from {} does not end at its normal form", trees[0]));
        }
    }
    // adjacent-line grouping among connected order-3 rows
    let connected_rows: Vec<ExoticAromaticTree> = ORDER_3.iter().map(row_tree).filter(|t| t.is_connected()).collect();
    for class in classes.iter().filter(|c| c[0].is_connected() && c[0].order() == 3) {
        let forms: Vec<_> = class.iter().map(canonical_form).collect();
        let idx: Vec<usize> = (0..connected_rows.len())
            .filter(|&i| forms.contains(&canonical_form(&connected_rows[i])))
            .collect();
        if idx.len() != class.len() || idx.windows(2).any(|w| w[1] != w[0] + 1) {
            return Err(format!("class of {} is not on adjacent lines: {idx:?}", class[0]));
        }
    }
    Ok(format!("{connected_classes} connected classes, 3 chains, {pairs} pairs × 5 gradient fields, grouping matches"))
}

fn criterion_7() -> Result<String, String> {
    let mut checked = 0;
    let mut deficient = 0;
    for n in 1..=3 {
        for kappa in compositions_of_order(n) {
            let trees = enumerate_by_composition(&kappa).map_err(|e| e.to_string())?;
            let needed = kappa.size() + kappa.derived_size() + 1;
            let d = needed.div_ceil(2) as usize;
            let samples = 2 * trees.len() + 2;
            let rank = sampled_rank(&trees, d, samples, 7 + n as u64);
            if rank != trees.len() {
                return Err(format!("κ = {kappa}: rank {rank} < {} at d = {d}", trees.len()));
            }
            checked += 1;
            if trees.len() >= 2 {
                let r1 = sampled_rank(&trees, 1, samples, 11);
                if r1 >= trees.len() {
                    return Err(format!("κ = {kappa}: full rank at d = 1"));
                }
                deficient += 1;
            }
        }
    }
    Ok(format!("{checked} compositions at full rank, {deficient} deficient at d = 1"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<String, String>); 7] = [
        ("catalog reproduction", criterion_1),
        ("order identity", criterion_2),
        ("worked example and d = 1 collapse", criterion_3),
        ("duality", criterion_4),
        ("classification matrix", criterion_5),
        ("gradient degeneracy", criterion_6),
        ("injectivity threshold", criterion_7),
    ];
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = format!("criterion {}", i + 1);
        if let Some(f) = &filter {
            if !id.contains(f.as_str()) && !name.contains(f.as_str()) {
                continue;
            }
        }
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panic: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("{id} {name}: PASS ({detail})"),
            Err(detail) => {
                failed += 1;
                println!("{id} {name}: FAIL ({detail})");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
