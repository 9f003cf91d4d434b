//! Brute-force search for finite-order integer matrices and coprime pairs.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intmat::{IntMatrix, MatrixOrder, DEFAULT_ORDER_CAP};
use crate::product_theorem::{decompose, Certificate};
use crate::torus_bundle::TorusAutomorphism;

/// Largest grid [`enumerate_finite_order`] will walk.
pub const MAX_SCAN: u64 = 50_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub dim: usize,
    /// Dimension of the second factor; defaults to `dim`.
    pub partner_dim: Option<usize>,
    pub entry_bound: i64,
    pub order_cap: u64,
    pub require_orientable: bool,
    /// Only emit pairs with exactly these periods.
    pub periods: Option<(u64, u64)>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            dim: 2,
            partner_dim: None,
            entry_bound: 3,
            order_cap: DEFAULT_ORDER_CAP,
            require_orientable: false,
            periods: None,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.partner_dim == Some(0) {
            return Err(Error::InvalidArgument("dimensions must be positive".into()));
        }
        if self.entry_bound < 1 {
            return Err(Error::InvalidArgument(format!(
                "entry bound must be at least 1, got {}",
                self.entry_bound
            )));
        }
        if self.order_cap < 6 {
            return Err(Error::InvalidArgument(format!(
                "order cap must be at least 6, got {}",
                self.order_cap
            )));
        }
        Ok(())
    }

    fn with_dim(&self, dim: usize) -> SearchConfig {
        SearchConfig {
            dim,
            partner_dim: None,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteOrderElement {
    pub matrix: IntMatrix,
    pub period: u64,
}

/// Every unimodular matrix of size `cfg.dim` with entries in
/// `[-B, B]` and finite order at most `cfg.order_cap`, in lexicographic
/// order of the row-major entries.
pub fn enumerate_finite_order(cfg: &SearchConfig) -> Result<Vec<FiniteOrderElement>> {
    cfg.validate()?;
    let k = cfg.dim;
    let b = cfg.entry_bound;
    let width = (2 * b + 1) as u64;
    let cells = (k * k) as u32;
    let total = width
        .checked_pow(cells)
        .filter(|&n| n <= MAX_SCAN)
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "{width}^{cells} matrices is too many to scan (limit {MAX_SCAN})"
            ))
        })?;

    let mut out = Vec::new();
    let mut digits = vec![-b; k * k];
    for _ in 0..total {
        let m = IntMatrix::from_rows(
            digits
                .chunks(k)
                .map(|r| r.iter().map(|&v| v.into()).collect())
                .collect(),
        )
        .expect("square by construction");
        if m.det().magnitude().is_one() {
            if let MatrixOrder::Finite(period) = m.order(cfg.order_cap)? {
                out.push(FiniteOrderElement { matrix: m, period });
            }
        }
        // odometer, last entry fastest, so output is lexicographic
        for slot in (0..digits.len()).rev() {
            if digits[slot] < b {
                digits[slot] += 1;
                break;
            }
            digits[slot] = -b;
        }
    }
    Ok(out)
}

pub fn group_by_period(elements: &[FiniteOrderElement]) -> BTreeMap<u64, Vec<IntMatrix>> {
    let mut groups: BTreeMap<u64, Vec<IntMatrix>> = BTreeMap::new();
    for e in elements {
        groups.entry(e.period).or_default().push(e.matrix.clone());
    }
    groups
}

/// A verified instance of `rank(M(A) x M(B)) > rank M(A) + rank M(B)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterexampleCertificate {
    #[serde(flatten)]
    pub certificate: Certificate,
    #[serde(rename = "orientable_A")]
    pub orientable_a: bool,
    #[serde(rename = "orientable_B")]
    pub orientable_b: bool,
}

impl CounterexampleCertificate {
    /// Builds the certificate for `(A, B)`, or `None` if the pair has no rank gap.
    pub fn for_pair(a: &TorusAutomorphism, b: &TorusAutomorphism) -> Result<Option<Self>> {
        let certificate = decompose(a, b)?.certificate();
        if certificate.gap != 1 || !certificate.checks.all() {
            return Ok(None);
        }
        Ok(Some(CounterexampleCertificate {
            certificate,
            orientable_a: a.preserves_orientation(),
            orientable_b: b.preserves_orientation(),
        }))
    }

    pub fn reverify(&self) -> Result<bool> {
        let a = TorusAutomorphism::new(self.certificate.a.clone())?;
        let b = TorusAutomorphism::new(self.certificate.b.clone())?;
        Ok(self.certificate.gap == 1
            && self.certificate.reverify()?
            && self.orientable_a == a.preserves_orientation()
            && self.orientable_b == b.preserves_orientation())
    }
}

/// Pairs finite-order elements with coprime periods `m, n > 1` and emits up
/// to `limit` re-verified certificates, in lexicographic order of `(A, B)`.
pub fn find_counterexamples(
    cfg: &SearchConfig,
    limit: usize,
) -> Result<Vec<CounterexampleCertificate>> {
    cfg.validate()?;
    let left = enumerate_finite_order(&cfg.with_dim(cfg.dim))?;
    let right = match cfg.partner_dim {
        Some(r) if r != cfg.dim => enumerate_finite_order(&cfg.with_dim(r))?,
        _ => left.clone(),
    };
    let keep = |e: &&FiniteOrderElement| {
        e.period > 1 && (!cfg.require_orientable || e.matrix.det().is_one())
    };
    let left: Vec<_> = left.iter().filter(keep).collect();
    let right: Vec<_> = right.iter().filter(keep).collect();

    let mut out = Vec::new();
    for a in &left {
        for b in &right {
            if out.len() >= limit {
                return Ok(out);
            }
            if a.period.gcd(&b.period) != 1 {
                continue;
            }
            if let Some(p) = cfg.periods {
                if p != (a.period, b.period) {
                    continue;
                }
            }
            let ta = TorusAutomorphism::with_order_cap(a.matrix.clone(), cfg.order_cap)?;
            let tb = TorusAutomorphism::with_order_cap(b.matrix.clone(), cfg.order_cap)?;
            if let Some(cert) = CounterexampleCertificate::for_pair(&ta, &tb)? {
                if !cert.reverify()? {
                    return Err(Error::CheckFailed(format!(
                        "certificate for {} x {} failed re-verification",
                        a.matrix, b.matrix
                    )));
                }
                out.push(cert);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn m(rows: &[&[i64]]) -> IntMatrix {
        IntMatrix::from_i64_rows(rows).unwrap()
    }

    fn cfg(dim: usize, bound: i64) -> SearchConfig {
        SearchConfig {
            dim,
            entry_bound: bound,
            ..SearchConfig::default()
        }
    }

    #[test]
    fn gl1() {
        let found = enumerate_finite_order(&cfg(1, 1)).unwrap();
        assert_eq!(
            found,
            vec![
                FiniteOrderElement {
                    matrix: m(&[&[-1]]),
                    period: 2
                },
                FiniteOrderElement {
                    matrix: m(&[&[1]]),
                    period: 1
                },
            ]
        );
    }

    #[test]
    fn small_bound_contains_the_displayed_matrices() {
        let found = enumerate_finite_order(&cfg(2, 1)).unwrap();
        assert!(found.contains(&FiniteOrderElement {
            matrix: m(&[&[-1, 0], &[0, -1]]),
            period: 2
        }));
        assert!(found.contains(&FiniteOrderElement {
            matrix: m(&[&[0, 1], &[-1, -1]]),
            period: 3
        }));
        assert!(found.contains(&FiniteOrderElement {
            matrix: m(&[&[0, 1], &[-1, 0]]),
            period: 4
        }));
    }

    #[test]
    fn no_period_five_at_bound_two() {
        let groups = group_by_period(&enumerate_finite_order(&cfg(2, 2)).unwrap());
        assert!(!groups.contains_key(&5));
        let periods: BTreeSet<u64> = groups.keys().copied().collect();
        assert_eq!(periods, BTreeSet::from([1, 2, 3, 4, 6]));
    }

    #[test]
    fn lexicographic_order() {
        let found = enumerate_finite_order(&cfg(2, 2)).unwrap();
        let keys: Vec<Vec<i64>> = found
            .iter()
            .map(|e| e.matrix.to_i64_rows().unwrap().concat())
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn config_validation() {
        assert!(enumerate_finite_order(&SearchConfig {
            entry_bound: 0,
            ..cfg(2, 1)
        })
        .is_err());
        assert!(enumerate_finite_order(&SearchConfig {
            order_cap: 5,
            ..cfg(2, 1)
        })
        .is_err());
        assert!(enumerate_finite_order(&cfg(4, 3)).is_err());
    }

    #[test]
    fn period_four_and_three() {
        let found = find_counterexamples(
            &SearchConfig {
                periods: Some((4, 3)),
                ..cfg(2, 1)
            },
            usize::MAX,
        )
        .unwrap();
        assert!(!found.is_empty());
        assert!(found
            .iter()
            .all(|c| (c.certificate.m, c.certificate.n) == (4, 3)));
        assert!(found
            .iter()
            .any(|c| c.certificate.a == m(&[&[0, 1], &[-1, 0]])
                && c.certificate.b == m(&[&[0, 1], &[-1, -1]])));
    }

    #[test]
    fn klein_bottle_pair_in_mixed_search() {
        let found = find_counterexamples(
            &SearchConfig {
                partner_dim: Some(2),
                ..cfg(1, 1)
            },
            usize::MAX,
        )
        .unwrap();
        let kb = found
            .iter()
            .find(|c| c.certificate.a == m(&[&[-1]]) && c.certificate.b == m(&[&[0, 1], &[-1, -1]]))
            .expect("Klein bottle pair");
        assert!(!kb.orientable_a);
        assert!(kb.orientable_b);
        assert_eq!(kb.certificate.rank_product, 4);
    }

    #[test]
    fn limit_is_respected() {
        let found = find_counterexamples(&cfg(2, 1), 3).unwrap();
        assert_eq!(found.len(), 3);
        assert!(find_counterexamples(&cfg(2, 1), 0).unwrap().is_empty());
    }
}
