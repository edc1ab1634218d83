//! Acceptance gate: one test per criterion, each printing a single
//! pass/fail line (run with `--nocapture` to see the lines; a failing
//! criterion fails its test). Criteria with stated runtime limits assert
//! them.

// Bounds are spelled in the form they are stated (`x + 1 <= y`).
#![allow(clippy::int_plus_one)]

use std::time::{Duration, Instant};

use substoch::completion::{minimal_completion, verify_completion_structure};
use substoch::decompose::{
    decompose_substochastic, direct_sum_lift, scale_decomposition, verify_combination,
    ConvexCombination, Subpermutation,
};
use substoch::matrices::{frac, rat, Matrix, Rational, SubstochasticMatrix};
use substoch::oracle::{
    fully_indecomposable_bruteforce, minimal_term_count, total_support_bruteforce, OracleBudget,
};
use substoch::structure::{
    face_dimension, face_dimension_via_rank, fully_indecomposable_components, has_total_support,
    SupportPattern,
};
use substoch_cli::{parse_matrix_file, random_substochastic};

fn pass(criterion: usize, name: &str, started: Instant) {
    println!(
        "criterion {criterion} ({name}): pass in {} ms",
        started.elapsed().as_millis()
    );
}

fn reference_matrix() -> SubstochasticMatrix {
    SubstochasticMatrix::new(Matrix::from_text("7/12 0; 1/6 1/2").unwrap()).unwrap()
}

/// The reference four-term expansion of the 2×2 example matrix.
fn reference_combination() -> ConvexCombination {
    let term = |pairs: &[(usize, usize)]| {
        Subpermutation::from_pairs(2, pairs.iter().copied()).unwrap()
    };
    ConvexCombination::new(
        2,
        vec![
            (frac(1, 6), term(&[(1, 0)])),
            (frac(1, 4), Subpermutation::identity(2)),
            (frac(1, 4), term(&[(1, 1)])),
            (frac(1, 3), term(&[(0, 0)])),
        ],
    )
}

#[test]
fn criterion_1_golden_completion() {
    let started = Instant::now();

    let ingested = parse_matrix_file(
        "0.1 0 0.2 0.1\n0 0.2 0.1 0\n0.2 0 0 0.1\n0.1 0.2 0.3 0.2\n",
        "inline",
    )
    .unwrap();
    let d = SubstochasticMatrix::new(ingested).unwrap();
    assert_eq!(d.sub_defect(), 3);

    let blocks = minimal_completion(&d);
    let expected = Matrix::from_text(
        "0.1 0 0.2 0.1 0.6 0 0; \
         0 0.2 0.1 0 0.4 0.3 0; \
         0.2 0 0 0.1 0 0.7 0; \
         0.1 0.2 0.3 0.2 0 0 0.2; \
         0.6 0.4 0 0 0 0 0; \
         0 0.2 0.4 0.4 0 0 0; \
         0 0 0 0.2 0 0 0.8",
    )
    .unwrap();
    assert_eq!(blocks.full(), &expected, "completion differs from the worked 7x7");
    // Spot-check exactness: 0.6 really is the rational 3/5.
    assert_eq!(blocks.full().at(0, 4), &frac(3, 5));

    assert!(started.elapsed() < Duration::from_secs(1), "criterion 1 exceeded 1 s");
    pass(1, "golden completion", started);
}

#[test]
fn criterion_2_golden_reference_decomposition() {
    let started = Instant::now();

    let a = reference_matrix();
    assert_eq!(a.sub_defect(), 1);

    let blocks = minimal_completion(&a);
    assert_eq!(
        blocks.full(),
        &Matrix::from_text("7/12 0 5/12; 1/6 1/2 1/3; 1/4 1/2 1/4").unwrap()
    );

    let report = decompose_substochastic(&a).unwrap();
    assert_eq!(report.bound, 4);
    assert!(report.term_count <= 4);

    let support = SupportPattern::from_matrix(blocks.full()).unwrap();
    assert_eq!(face_dimension(&support).unwrap(), 3);

    // The reference weights form a valid decomposition of the input.
    assert_eq!(
        verify_combination(a.matrix(), &reference_combination()),
        Ok(())
    );

    // Exhaustive search confirms four terms are necessary: the bound is tight.
    let minimal = minimal_term_count(&a, &OracleBudget::default()).unwrap();
    assert_eq!(minimal, 4);
    assert_eq!(minimal, report.bound);

    assert!(started.elapsed() < Duration::from_secs(5), "criterion 2 exceeded 5 s");
    pass(2, "golden reference decomposition", started);
}

#[test]
fn criterion_3_decomposition_property_sweep() {
    let started = Instant::now();

    let densities = [frac(1, 4), frac(1, 2), frac(3, 4)];
    let mut checked = 0usize;
    for i in 0..500u64 {
        let side = 2 + (i as usize) % 7; // 2..=8
        let density = &densities[(i as usize) % densities.len()];
        let b = random_substochastic(side, density, 1000 + i);

        let report = decompose_substochastic(&b)
            .unwrap_or_else(|e| panic!("instance {i} failed to decompose: {e}"));
        assert_eq!(
            verify_combination(b.matrix(), &report.combination),
            Ok(()),
            "instance {i}: reconstruction failed"
        );
        let nnz = b.matrix().nnz();
        let t = report.component_count;
        assert!(report.term_count <= nnz + t, "instance {i}: bound violated");
        assert!(
            report.reduced_count <= report.face_dim + 1,
            "instance {i}: reduction overshot the face dimension"
        );
        assert!(
            report.face_dim + 1 <= nnz + t,
            "instance {i}: chained inequality violated"
        );
        let structure = verify_completion_structure(&report.completion);
        assert!(structure.all_ok(), "instance {i}: structure report failed:\n{structure}");
        checked += 1;
    }
    assert_eq!(checked, 500);

    assert!(
        started.elapsed() < Duration::from_secs(120),
        "criterion 3 exceeded 2 min"
    );
    pass(3, "500-instance property sweep", started);
}

#[test]
fn criterion_4_oracle_equivalences() {
    let started = Instant::now();

    let densities = [frac(1, 4), frac(1, 2), frac(3, 4)];
    let mut seed = 5000u64;
    for side in 1..=5usize {
        let mut patterns = 0usize;
        for rep in 0..110usize {
            let density = &densities[rep % densities.len()];
            let b = random_substochastic(side, density, seed);
            seed += 1;

            // Raw support of the random matrix.
            let pattern = SupportPattern::from_matrix(b.matrix()).unwrap();
            let fast = has_total_support(&pattern);
            let brute = total_support_bruteforce(&pattern).unwrap();
            assert_eq!(fast, brute, "total-support disagreement on side {side}");
            if fast && !pattern.is_empty() {
                let decomposition = fully_indecomposable_components(&pattern).unwrap();
                for block in decomposition.diagonal_blocks(&pattern) {
                    assert!(
                        fully_indecomposable_bruteforce(&block).unwrap(),
                        "a diagonal block is decomposable on side {side}"
                    );
                }
                assert_eq!(
                    face_dimension(&pattern).unwrap(),
                    face_dimension_via_rank(&pattern).unwrap(),
                    "face-dimension disagreement on side {side}"
                );
            }

            // The completion's support always has total support and its
            // blocks must also agree with the brute-force checkers.
            let completion = SupportPattern::from_matrix(minimal_completion(&b).full()).unwrap();
            assert!(has_total_support(&completion));
            if completion.side() <= 6 {
                assert!(total_support_bruteforce(&completion).unwrap());
            }
            assert_eq!(
                face_dimension(&completion).unwrap(),
                face_dimension_via_rank(&completion).unwrap()
            );
            let decomposition = fully_indecomposable_components(&completion).unwrap();
            for block in decomposition.diagonal_blocks(&completion) {
                if block.side() <= 6 {
                    assert!(fully_indecomposable_bruteforce(&block).unwrap());
                }
            }
            patterns += 1;
        }
        assert!(patterns >= 100, "need at least 100 patterns per side");
    }

    pass(4, "oracle equivalences", started);
}

#[test]
fn criterion_5_polytope_dimension() {
    let started = Instant::now();

    for n in 2..=5usize {
        let full = SupportPattern::full(n);
        let expected = (n - 1) * (n - 1);
        assert_eq!(face_dimension(&full).unwrap(), expected);
        assert_eq!(face_dimension_via_rank(&full).unwrap(), expected);
    }

    pass(5, "polytope dimension (n-1)^2", started);
}

#[test]
fn criterion_6_scaling_and_direct_sum_laws() {
    let started = Instant::now();

    let densities = [frac(1, 3), frac(1, 2), frac(2, 3)];
    let scales = [rat(0), frac(1, 2), frac(2, 3), rat(1), frac(1, 7)];
    for i in 0..50u64 {
        let side = 1 + (i as usize) % 4;
        let density = &densities[(i as usize) % densities.len()];
        let b = random_substochastic(side, density, 9000 + i);
        let report = decompose_substochastic(&b).unwrap();

        // Scaling: c·B decomposes with at most one extra term.
        let c = &scales[(i as usize) % scales.len()];
        let scaled = scale_decomposition(report.combination.clone(), c).unwrap();
        assert_eq!(
            verify_combination(&b.matrix().scale(c), &scaled),
            Ok(()),
            "instance {i}: scaled combination failed"
        );
        assert!(
            scaled.term_count() <= report.term_count + 1,
            "instance {i}: scaling added more than one term"
        );

        // Direct sum: I_k ⊕ B decomposes with the same term count.
        let k = (i as usize) % 3;
        let lifted = direct_sum_lift(report.combination.clone(), k);
        assert_eq!(lifted.term_count(), report.term_count);
        let mut expected = Matrix::zeros(side + k, side + k);
        for d in 0..k {
            *expected.at_mut(d, d) = rat(1);
        }
        for r in 0..side {
            for col in 0..side {
                *expected.at_mut(k + r, k + col) = b.matrix().at(r, col).clone();
            }
        }
        assert_eq!(
            verify_combination(&expected, &lifted),
            Ok(()),
            "instance {i}: lifted combination failed"
        );
    }

    // The reference 4×4 expansion: lifting the reference combination by
    // k = 2 reproduces all four displayed terms exactly.
    let lifted = direct_sum_lift(reference_combination(), 2);
    let term = |pairs: &[(usize, usize)]| {
        Subpermutation::from_pairs(4, pairs.iter().copied()).unwrap()
    };
    let expected = vec![
        (frac(1, 6), term(&[(0, 0), (1, 1), (3, 2)])),
        (frac(1, 4), Subpermutation::identity(4)),
        (frac(1, 4), term(&[(0, 0), (1, 1), (3, 3)])),
        (frac(1, 3), term(&[(0, 0), (1, 1), (2, 2)])),
    ];
    assert_eq!(lifted.terms(), expected.as_slice());

    pass(6, "scaling and direct-sum laws", started);
}

#[test]
fn criterion_7_minimality_gap_report() {
    let started = Instant::now();

    // Every rational in [0, 1] with denominator at most 6.
    let mut values: Vec<Rational> = Vec::new();
    for den in 1i64..=6 {
        for num in 0..=den {
            let v = frac(num, den);
            if !values.contains(&v) {
                values.push(v);
            }
        }
    }
    values.sort();
    assert_eq!(values.len(), 13);

    let one = rat(1);
    let budget = OracleBudget::default();
    let mut instances = 0usize;
    let mut pipeline_gap = std::collections::BTreeMap::<usize, usize>::new();
    let mut bound_gap = std::collections::BTreeMap::<usize, usize>::new();
    for a in &values {
        for bb in &values {
            if a + bb > one {
                continue;
            }
            for c in &values {
                if a + c > one {
                    continue;
                }
                for d in &values {
                    if c + d > one || bb + d > one {
                        continue;
                    }
                    let m = Matrix::new(
                        2,
                        2,
                        vec![a.clone(), bb.clone(), c.clone(), d.clone()],
                    )
                    .unwrap();
                    let input = SubstochasticMatrix::new(m).unwrap();
                    let report = decompose_substochastic(&input).unwrap();
                    let minimal = minimal_term_count(&input, &budget).unwrap();
                    assert!(
                        minimal <= report.term_count,
                        "oracle beat the pipeline on {:?}",
                        input.matrix().to_string()
                    );
                    assert!(
                        report.term_count <= report.bound,
                        "pipeline exceeded its bound on {:?}",
                        input.matrix().to_string()
                    );
                    *pipeline_gap.entry(report.term_count - minimal).or_default() += 1;
                    *bound_gap.entry(report.bound - minimal).or_default() += 1;
                    instances += 1;
                }
            }
        }
    }

    println!("criterion 7 distribution over {instances} matrices:");
    for (gap, count) in &pipeline_gap {
        println!("  term_count - minimal = {gap}: {count}");
    }
    for (gap, count) in &bound_gap {
        println!("  bound - minimal = {gap}: {count}");
    }

    pass(7, "minimality gap report", started);
}
