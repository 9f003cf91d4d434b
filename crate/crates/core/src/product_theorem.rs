//! Products of mapping tori with coprime periodic monodromies.
//!
//! If `A` has order `m`, `B` has order `n`, and `mc + nd = 1`, then
//! `M(A) x M(B)` is the mapping torus of
//! `H = diag(1, A^{-d}, B^c)` acting on `T^{1+k+r}`. The proof rebases the
//! `Z^2` deck action on `R^2 x T^k x T^r` to the basis `lambda = (m, n)`,
//! `mu = (-d, c)`; `lambda` acts trivially on the fiber because
//! `A^m = I` and `B^n = I`. Everything below checks that at the level of
//! integer matrices.

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intmat::{IntMatrix, MatrixOrder};
use crate::torus_bundle::{MappingTorus, TorusAutomorphism};

/// Coprime periods `m, n` with `m*c + n*d = 1`, normalized to `0 <= d < m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BezoutPair {
    pub m: u64,
    pub n: u64,
    pub c: i64,
    pub d: i64,
}

impl BezoutPair {
    pub fn holds(&self) -> bool {
        self.m as i128 * self.c as i128 + self.n as i128 * self.d as i128 == 1
    }
}

/// Extended Euclid, with the representative `0 <= d < m`.
pub fn bezout(m: u64, n: u64) -> Result<BezoutPair> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "periods must be positive, got ({m}, {n})"
        )));
    }
    let (mi, ni) = (m as i128, n as i128);
    let eg = mi.extended_gcd(&ni);
    if eg.gcd != 1 {
        return Err(Error::NotCoprime { m, n });
    }
    // m*x + n*y = 1; shift along (n, -m) until 0 <= d < m
    let d = eg.y.mod_floor(&mi);
    let c = (1 - ni * d) / mi;
    let pair = BezoutPair {
        m,
        n,
        c: c as i64,
        d: d as i64,
    };
    debug_assert!(pair.holds());
    Ok(pair)
}

/// The new basis `{lambda, mu}` of `Z^2` (and `R^2`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisChange {
    pub lambda: (i64, i64),
    pub mu: (i64, i64),
}

impl BasisChange {
    /// `det [[m, n], [-d, c]] = mc + nd`.
    pub fn determinant(&self) -> i128 {
        self.lambda.0 as i128 * self.mu.1 as i128 - self.lambda.1 as i128 * self.mu.0 as i128
    }

    pub fn is_unimodular(&self) -> bool {
        self.determinant().abs() == 1
    }

    /// Fiber actions `(A^{z_1}, B^{z_2})` of the two new generators under
    /// `beta(z)(u, x, y) = (u + z, A^{z_1} x, B^{z_2} y)`.
    pub fn fiber_actions(
        &self,
        a: &IntMatrix,
        b: &IntMatrix,
    ) -> Result<(FiberAction, FiberAction)> {
        Ok((
            FiberAction::of(a, b, self.lambda)?,
            FiberAction::of(a, b, self.mu)?,
        ))
    }
}

/// A pair of fiber maps `(A^p, B^q)` for some lattice vector `(p, q)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiberAction {
    pub on_x: IntMatrix,
    pub on_y: IntMatrix,
}

impl FiberAction {
    fn of(a: &IntMatrix, b: &IntMatrix, z: (i64, i64)) -> Result<Self> {
        Ok(FiberAction {
            on_x: a.power(z.0)?,
            on_y: b.power(z.1)?,
        })
    }

    pub fn is_trivial(&self) -> bool {
        self.on_x.is_identity() && self.on_y.is_identity()
    }
}

pub fn rebase_action(pair: &BezoutPair) -> BasisChange {
    BasisChange {
        lambda: (pair.m as i64, pair.n as i64),
        mu: (-pair.d, pair.c),
    }
}

/// `M(A) x M(B) = M(H)` with `H = diag(1, A^{-d}, B^c)`, coordinates `(theta, x, y)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductDecomposition {
    pub a: TorusAutomorphism,
    pub b: TorusAutomorphism,
    pub bezout: BezoutPair,
    pub basis: BasisChange,
    pub h: TorusAutomorphism,
}

/// Exact identities that back a decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionChecks {
    pub bezout: bool,
    pub h_power: bool,
    pub basis_unimodular: bool,
}

impl DecompositionChecks {
    pub fn all(&self) -> bool {
        self.bezout && self.h_power && self.basis_unimodular
    }
}

impl ProductDecomposition {
    /// `H^{m-n}`, which must equal `diag(1, A, B)`.
    pub fn h_power_m_minus_n(&self) -> Result<IntMatrix> {
        let e = self.bezout.m as i64 - self.bezout.n as i64;
        self.h.matrix().power(e)
    }

    pub fn target_of_h_power(&self) -> IntMatrix {
        IntMatrix::block_diag(&[&IntMatrix::identity(1), self.a.matrix(), self.b.matrix()])
    }

    /// Recomputes every exact identity from scratch.
    pub fn checks(&self) -> DecompositionChecks {
        let h_power = self
            .h_power_m_minus_n()
            .map(|p| p == self.target_of_h_power())
            .unwrap_or(false);
        DecompositionChecks {
            bezout: self.bezout.holds(),
            h_power,
            basis_unimodular: self.basis.determinant() == 1,
        }
    }

    /// Checks that the rebased `Z^2` action agrees with the original one:
    /// for every `(s, r)` in the window, `beta(s*lambda + r*mu)` acts on the
    /// fiber as `(A^{-d r}, B^{c r})`, i.e. as `h^r`.
    pub fn rebased_action_agrees(&self, window: i64) -> Result<bool> {
        let (a, b) = (self.a.matrix(), self.b.matrix());
        let lam = self.basis.lambda;
        let mu = self.basis.mu;
        let phi = a.power(-self.bezout.d)?;
        let gam = b.power(self.bezout.c)?;
        for s in -window..=window {
            for r in -window..=window {
                let z = (s * lam.0 + r * mu.0, s * lam.1 + r * mu.1);
                let direct = FiberAction::of(a, b, z)?;
                if direct.on_x != phi.power(r)? || direct.on_y != gam.power(r)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    pub fn product(&self) -> MappingTorus {
        MappingTorus::new(self.h.clone())
    }
}

fn period(t: &TorusAutomorphism) -> Result<u64> {
    match t.order() {
        MatrixOrder::Finite(m) => Ok(m),
        MatrixOrder::Infinite => Err(Error::InfiniteOrder),
    }
}

pub fn decompose(a: &TorusAutomorphism, b: &TorusAutomorphism) -> Result<ProductDecomposition> {
    let m = period(a)?;
    let n = period(b)?;
    let pair = match bezout(m, n) {
        Ok(p) => p,
        Err(Error::NotCoprime { m, n }) => return Err(Error::PeriodsNotCoprime { m, n }),
        Err(e) => return Err(e),
    };
    let basis = rebase_action(&pair);

    let (on_lambda, _) = basis.fiber_actions(a.matrix(), b.matrix())?;
    if !on_lambda.is_trivial() {
        return Err(Error::CheckFailed(
            "first rebased generator acts nontrivially on the fiber".into(),
        ));
    }

    let h_matrix = IntMatrix::block_diag(&[
        &IntMatrix::identity(1),
        &a.matrix().power(-pair.d)?,
        &b.matrix().power(pair.c)?,
    ]);
    // order(H) divides m*n
    let h = TorusAutomorphism::with_order_cap(h_matrix, m * n)?;

    let dec = ProductDecomposition {
        a: a.clone(),
        b: b.clone(),
        bezout: pair,
        basis,
        h,
    };
    let checks = dec.checks();
    if !checks.all() {
        return Err(Error::CheckFailed(format!(
            "decomposition identities: {checks:?}"
        )));
    }
    if (!a.is_trivial() || !b.is_trivial()) && dec.h.is_trivial() {
        return Err(Error::CheckFailed(
            "H is trivial for nontrivial input".into(),
        ));
    }
    if !dec.rebased_action_agrees(2)? {
        return Err(Error::CheckFailed("rebased Z^2 action disagrees".into()));
    }
    Ok(dec)
}

/// Ranks of `M(H)`, `M(A)`, `M(B)` and the excess of the first over the sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankGap {
    pub rank_product: usize,
    pub rank_a: usize,
    pub rank_b: usize,
    pub gap: i64,
}

impl ProductDecomposition {
    pub fn rank_gap(&self) -> RankGap {
        let rank_product = self.product().rank().value;
        let rank_a = MappingTorus::new(self.a.clone()).rank().value;
        let rank_b = MappingTorus::new(self.b.clone()).rank().value;
        RankGap {
            rank_product,
            rank_a,
            rank_b,
            gap: rank_product as i64 - rank_a as i64 - rank_b as i64,
        }
    }

    pub fn certificate(&self) -> Certificate {
        let gap = self.rank_gap();
        Certificate {
            a: self.a.matrix().clone(),
            b: self.b.matrix().clone(),
            m: self.bezout.m,
            n: self.bezout.n,
            c: self.bezout.c,
            d: self.bezout.d,
            h: self.h.matrix().clone(),
            rank_product: gap.rank_product,
            rank_a: gap.rank_a,
            rank_b: gap.rank_b,
            gap: gap.gap,
            checks: self.checks(),
        }
    }
}

pub fn rank_gap(a: &TorusAutomorphism, b: &TorusAutomorphism) -> Result<RankGap> {
    decompose(a, b).map(|d| d.rank_gap())
}

/// Serializable record of one decomposition and its rank gap.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    #[serde(rename = "A")]
    pub a: IntMatrix,
    #[serde(rename = "B")]
    pub b: IntMatrix,
    pub m: u64,
    pub n: u64,
    pub c: i64,
    pub d: i64,
    #[serde(rename = "H")]
    pub h: IntMatrix,
    pub rank_product: usize,
    #[serde(rename = "rank_A")]
    pub rank_a: usize,
    #[serde(rename = "rank_B")]
    pub rank_b: usize,
    pub gap: i64,
    pub checks: DecompositionChecks,
}

impl Certificate {
    /// Re-derives the decomposition from `A` and `B` and compares every field.
    pub fn reverify(&self) -> Result<bool> {
        let a = TorusAutomorphism::new(self.a.clone())?;
        let b = TorusAutomorphism::new(self.b.clone())?;
        let fresh = decompose(&a, &b)?.certificate();
        Ok(fresh == *self && self.checks.all())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn aut(rows: &[&[i64]]) -> TorusAutomorphism {
        TorusAutomorphism::new(IntMatrix::from_i64_rows(rows).unwrap()).unwrap()
    }

    fn minus_identity() -> TorusAutomorphism {
        aut(&[&[-1, 0], &[0, -1]])
    }

    fn order_three() -> TorusAutomorphism {
        aut(&[&[0, 1], &[-1, -1]])
    }

    #[test]
    fn bezout_examples() {
        assert_eq!(
            bezout(2, 3).unwrap(),
            BezoutPair {
                m: 2,
                n: 3,
                c: -1,
                d: 1
            }
        );
        assert_eq!(
            bezout(1, 1).unwrap(),
            BezoutPair {
                m: 1,
                n: 1,
                c: 1,
                d: 0
            }
        );
        assert_eq!(
            bezout(3, 4).unwrap(),
            BezoutPair {
                m: 3,
                n: 4,
                c: -1,
                d: 1
            }
        );
        assert_eq!(
            bezout(3, 2).unwrap(),
            BezoutPair {
                m: 3,
                n: 2,
                c: -1,
                d: 2
            }
        );
        assert!(matches!(
            bezout(2, 4),
            Err(Error::NotCoprime { m: 2, n: 4 })
        ));
        assert!(bezout(0, 1).is_err());
    }

    #[test]
    fn bezout_canonical_range() {
        for m in 1..40u64 {
            for n in 1..40u64 {
                match bezout(m, n) {
                    Ok(p) => {
                        assert!(p.holds());
                        assert!(0 <= p.d && (p.d as u64) < m);
                        assert_eq!(m.gcd(&n), 1);
                    }
                    Err(_) => assert_ne!(m.gcd(&n), 1),
                }
            }
        }
    }

    #[test]
    fn rebased_basis() {
        let basis = rebase_action(&bezout(2, 3).unwrap());
        assert_eq!(basis.lambda, (2, 3));
        assert_eq!(basis.mu, (-1, -1));
        assert_eq!(basis.determinant(), 1);
        let (on_lambda, on_mu) = basis
            .fiber_actions(minus_identity().matrix(), order_three().matrix())
            .unwrap();
        assert!(on_lambda.is_trivial());
        assert_eq!(on_mu.on_x, minus_identity().matrix().power(-1).unwrap());
        assert_eq!(on_mu.on_y, order_three().matrix().power(-1).unwrap());

        let basis = rebase_action(&bezout(1, 1).unwrap());
        assert_eq!(basis.lambda, (1, 1));
        assert_eq!(basis.mu, (0, 1));
    }

    #[test]
    fn orientable_pair_decomposes() {
        let dec = decompose(&minus_identity(), &order_three()).unwrap();
        let expected = IntMatrix::from_i64_rows(&[
            [1, 0, 0, 0, 0],
            [0, -1, 0, 0, 0],
            [0, 0, -1, 0, 0],
            [0, 0, 0, -1, -1],
            [0, 0, 0, 1, 0],
        ])
        .unwrap();
        assert_eq!(dec.h.matrix(), &expected);
        assert_eq!(dec.h_power_m_minus_n().unwrap(), dec.target_of_h_power());
        assert_eq!(dec.h.matrix().power(-1).unwrap(), dec.target_of_h_power());
        assert_eq!(dec.h.order(), MatrixOrder::Finite(6));
        assert!(dec.checks().all());
        assert_eq!(
            dec.rank_gap(),
            RankGap {
                rank_product: 5,
                rank_a: 2,
                rank_b: 2,
                gap: 1
            }
        );
    }

    #[test]
    fn klein_bottle_pair() {
        let dec = decompose(&aut(&[&[-1]]), &order_three()).unwrap();
        assert_eq!(dec.h.dim(), 4);
        assert!(!dec.h.is_trivial());
        assert_eq!(
            dec.rank_gap(),
            RankGap {
                rank_product: 4,
                rank_a: 1,
                rank_b: 2,
                gap: 1
            }
        );
    }

    #[test]
    fn trivial_factor_degenerates() {
        let dec = decompose(&TorusAutomorphism::identity(2), &order_three()).unwrap();
        assert_eq!(
            dec.bezout,
            BezoutPair {
                m: 1,
                n: 3,
                c: 1,
                d: 0
            }
        );
        let expected = IntMatrix::block_diag(&[
            &IntMatrix::identity(1),
            &IntMatrix::identity(2),
            order_three().matrix(),
        ]);
        assert_eq!(dec.h.matrix(), &expected);
        assert_eq!(
            dec.rank_gap(),
            RankGap {
                rank_product: 5,
                rank_a: 3,
                rank_b: 2,
                gap: 0
            }
        );

        let both = decompose(
            &TorusAutomorphism::identity(1),
            &TorusAutomorphism::identity(1),
        )
        .unwrap();
        assert!(both.h.is_trivial());
        assert_eq!(both.rank_gap().gap, 0);
    }

    #[test]
    fn refuses_infinite_order_and_shared_periods() {
        let shear = aut(&[&[1, 1], &[0, 1]]);
        assert!(matches!(
            decompose(&shear, &order_three()),
            Err(Error::InfiniteOrder)
        ));
        assert!(matches!(
            decompose(&order_three(), &shear),
            Err(Error::InfiniteOrder)
        ));
        let four = aut(&[&[0, 1], &[-1, 0]]);
        assert!(matches!(
            decompose(&minus_identity(), &four),
            Err(Error::PeriodsNotCoprime { m: 2, n: 4 })
        ));
    }

    #[test]
    fn certificate_json_layout() {
        let cert = decompose(&minus_identity(), &order_three()).unwrap().certificate();
        let v = serde_json::to_value(&cert).unwrap();
        assert_eq!(
            v,
            serde_json::json!({
                "A": [[-1, 0], [0, -1]],
                "B": [[0, 1], [-1, -1]],
                "m": 2, "n": 3, "c": -1, "d": 1,
                "H": [[1,0,0,0,0],[0,-1,0,0,0],[0,0,-1,0,0],[0,0,0,-1,-1],[0,0,0,1,0]],
                "rank_product": 5, "rank_A": 2, "rank_B": 2, "gap": 1,
                "checks": {"bezout": true, "h_power": true, "basis_unimodular": true}
            })
        );
        let back: Certificate = serde_json::from_value(v).unwrap();
        assert!(back.reverify().unwrap());
    }

    #[test]
    fn tampered_certificate_fails_reverification() {
        let mut cert = decompose(&minus_identity(), &order_three()).unwrap().certificate();
        cert.d = 3;
        assert!(!cert.reverify().unwrap());
    }
}
