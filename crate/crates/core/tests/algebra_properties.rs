use mtorus::{
    decompose, enumerate_finite_order, IntMatrix, MappingTorus, MatrixOrder, SearchConfig,
    TorusAutomorphism,
};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

fn matrix(entries: &[i64], k: usize) -> IntMatrix {
    IntMatrix::from_i64_rows(&entries.chunks(k).collect::<Vec<_>>()).unwrap()
}

fn unimodular_2x2() -> impl Strategy<Value = IntMatrix> {
    prop::collection::vec(-3i64..=3, 4)
        .prop_filter("unimodular", |e| (e[0] * e[3] - e[1] * e[2]).abs() == 1)
        .prop_map(|e| matrix(&e, 2))
}

fn any_square(max_k: usize, bound: i64) -> impl Strategy<Value = IntMatrix> {
    (1..=max_k).prop_flat_map(move |k| {
        prop::collection::vec(-bound..=bound, k * k).prop_map(move |e| matrix(&e, k))
    })
}

/// All `size x size` minors by brute-force cofactor expansion.
fn minors(a: &IntMatrix, size: usize) -> Vec<BigInt> {
    fn subsets(n: usize, r: usize) -> Vec<Vec<usize>> {
        if r == 0 {
            return vec![vec![]];
        }
        (0..n)
            .flat_map(|first| {
                subsets(n, r - 1)
                    .into_iter()
                    .filter(move |rest| rest.first().is_none_or(|&x| x > first))
                    .map(move |mut rest| {
                        rest.insert(0, first);
                        rest
                    })
            })
            .collect()
    }
    fn cofactor_det(rows: &[Vec<BigInt>]) -> BigInt {
        let n = rows.len();
        if n == 1 {
            return rows[0][0].clone();
        }
        (0..n)
            .map(|j| {
                let sub: Vec<Vec<BigInt>> = rows[1..]
                    .iter()
                    .map(|r| {
                        r.iter()
                            .enumerate()
                            .filter(|&(c, _)| c != j)
                            .map(|(_, v)| v.clone())
                            .collect()
                    })
                    .collect();
                let term = &rows[0][j] * cofactor_det(&sub);
                if j % 2 == 0 {
                    term
                } else {
                    -term
                }
            })
            .sum()
    }
    let k = a.dim();
    let mut out = Vec::new();
    for rs in subsets(k, size) {
        for cs in subsets(k, size) {
            let sub: Vec<Vec<BigInt>> = rs
                .iter()
                .map(|&i| cs.iter().map(|&j| a[(i, j)].clone()).collect())
                .collect();
            out.push(cofactor_det(&sub));
        }
    }
    out
}

/// Invariant factors as ratios of determinantal divisors `D_j = gcd(j x j minors)`.
fn invariant_factors_by_minors(a: &IntMatrix) -> Vec<BigInt> {
    let k = a.dim();
    let mut out = Vec::new();
    let mut prev = BigInt::from(1);
    for size in 1..=k {
        let d = minors(a, size)
            .into_iter()
            .fold(BigInt::zero(), |g, m| g.gcd(&m));
        if d.is_zero() {
            out.extend(std::iter::repeat_n(BigInt::zero(), k - size + 1));
            break;
        }
        out.push(&d / &prev);
        prev = d;
    }
    out
}

proptest! {
    #[test]
    fn power_is_additive(a in unimodular_2x2(), e1 in -8i64..=8, e2 in -8i64..=8) {
        let lhs = a.power(e1 + e2).unwrap();
        let rhs = a.power(e1).unwrap().mul(&a.power(e2).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn finite_order_is_minimal(a in unimodular_2x2()) {
        if let MatrixOrder::Finite(m) = a.order(24).unwrap() {
            prop_assert!(a.power(m as i64).unwrap().is_identity());
            for j in 1..m {
                prop_assert!(!a.power(j as i64).unwrap().is_identity());
            }
        } else {
            for j in 1..=24 {
                prop_assert!(!a.power(j).unwrap().is_identity());
            }
        }
    }

    #[test]
    fn smith_transforms_diagonalize(a in unimodular_2x2()) {
        check_snf(&a)?;
    }

    #[test]
    fn smith_transforms_diagonalize_general(a in any_square(4, 6)) {
        check_snf(&a)?;
    }

    #[test]
    fn smith_matches_determinantal_divisors(a in any_square(3, 5)) {
        prop_assert_eq!(a.smith_normal_form().diagonal, invariant_factors_by_minors(&a));
    }

    #[test]
    fn det_matches_cofactor_expansion(a in any_square(4, 9)) {
        prop_assert_eq!(a.det(), minors(&a, a.dim()).remove(0));
    }

    #[test]
    fn charpoly_at_zero_is_signed_det(a in any_square(4, 5)) {
        let k = a.dim();
        let c0 = a.charpoly()[0].clone();
        let expected = if k % 2 == 0 { a.det() } else { -a.det() };
        prop_assert_eq!(c0, expected);
    }

    #[test]
    fn abelianization_is_a_conjugacy_invariant(a in unimodular_2x2(), u in unimodular_2x2()) {
        let conj = u.mul(&a).unwrap().mul(&u.inverse().unwrap()).unwrap();
        let h1 = MappingTorus::from_matrix(a).unwrap().abelianization();
        let h2 = MappingTorus::from_matrix(conj).unwrap().abelianization();
        prop_assert_eq!(h1, h2);
    }

    #[test]
    fn rank_bounds_and_orientation(a in unimodular_2x2()) {
        let det_negative = a.det().is_negative();
        let m = MappingTorus::from_matrix(a.clone()).unwrap();
        let r = m.rank().value;
        prop_assert!(r <= m.total_dim());
        prop_assert_eq!(r == m.total_dim(), m.is_torus());
        prop_assert!(m.is_orientable() ^ det_negative);
        prop_assert_eq!(m.pi1().abelian, a.is_identity());
    }

    #[test]
    fn abelianization_bookkeeping(a in unimodular_2x2()) {
        let snf = a.minus_identity().smith_normal_form();
        let nonzero = snf.diagonal.iter().filter(|d| !d.is_zero()).count();
        let h1 = MappingTorus::from_matrix(a).unwrap().abelianization();
        prop_assert_eq!(h1.free_rank - 1 + nonzero, 2);
        prop_assert!(h1.torsion.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(h1.torsion.iter().all(|t| *t > BigInt::from(1)));
    }
}

fn check_snf(a: &IntMatrix) -> Result<(), TestCaseError> {
    let snf = a.smith_normal_form();
    let lad = snf.left.mul(a).unwrap().mul(&snf.right).unwrap();
    prop_assert_eq!(lad, snf.diagonal_matrix());
    prop_assert!(snf.left.is_unimodular());
    prop_assert!(snf.right.is_unimodular());
    prop_assert!(snf.diagonal.iter().all(|d| !d.is_negative()));
    for w in snf.diagonal.windows(2) {
        if !w[0].is_zero() {
            prop_assert!(w[1].is_multiple_of(&w[0]));
        } else {
            prop_assert!(w[1].is_zero());
        }
    }
    Ok(())
}

fn finite_order_pool() -> Vec<TorusAutomorphism> {
    let mut pool = Vec::new();
    for dim in 1..=2 {
        let cfg = SearchConfig {
            dim,
            entry_bound: 2,
            ..SearchConfig::default()
        };
        for e in enumerate_finite_order(&cfg).unwrap() {
            pool.push(TorusAutomorphism::new(e.matrix).unwrap());
        }
    }
    pool
}

#[test]
fn decomposition_invariants_over_all_small_pairs() {
    let pool = finite_order_pool();
    let mut checked = 0;
    for a in &pool {
        for b in &pool {
            let (m, n) = (a.order().period().unwrap(), b.order().period().unwrap());
            if m.gcd(&n) != 1 {
                assert!(decompose(a, b).is_err());
                continue;
            }
            let dec = decompose(a, b).unwrap();
            assert!(dec.checks().all());
            assert_eq!(dec.h_power_m_minus_n().unwrap(), dec.target_of_h_power());
            assert_eq!(dec.basis.determinant(), 1);
            let h_order = dec.h.order().period().unwrap();
            assert_eq!((m * n) % h_order, 0);
            let gap = dec.rank_gap().gap;
            assert_eq!(gap == 1, !a.is_trivial() && !b.is_trivial());
            assert!(gap == 0 || gap == 1);
            assert_eq!(decompose(b, a).unwrap().rank_gap().gap, gap);
            checked += 1;
        }
    }
    assert!(checked >= 400, "only {checked} pairs");
}

#[test]
fn crystallographic_restriction() {
    let cfg = SearchConfig {
        dim: 2,
        entry_bound: 3,
        ..SearchConfig::default()
    };
    let found = enumerate_finite_order(&cfg).unwrap();
    let periods: std::collections::BTreeSet<u64> = found.iter().map(|e| e.period).collect();
    assert_eq!(periods.into_iter().collect::<Vec<_>>(), vec![1, 2, 3, 4, 6]);
}

#[test]
fn enumeration_is_closed_under_inverse_and_transpose() {
    let cfg = SearchConfig {
        dim: 2,
        entry_bound: 3,
        ..SearchConfig::default()
    };
    let found = enumerate_finite_order(&cfg).unwrap();
    let set: std::collections::HashSet<&IntMatrix> = found.iter().map(|e| &e.matrix).collect();
    for e in &found {
        assert!(
            set.contains(&e.matrix.inverse().unwrap()),
            "inverse of {}",
            e.matrix
        );
        assert!(
            set.contains(&e.matrix.transpose()),
            "transpose of {}",
            e.matrix
        );
        assert_eq!(
            e.matrix.inverse().unwrap().order(24).unwrap(),
            MatrixOrder::Finite(e.period)
        );
    }
    assert_eq!(found, enumerate_finite_order(&cfg).unwrap());
}
