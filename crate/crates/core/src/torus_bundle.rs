//! Mapping tori `M(f)` of linear torus automorphisms.
//!
//! For `f: T^k -> T^k` induced by `A` in `GL(k, Z)`, the mapping torus is a
//! `T^k`-bundle over the circle with `pi_1 = Z^k x|_A Z`. Everything here
//! is computed from the monodromy matrix alone.

use num_bigint::BigInt;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intmat::{IntMatrix, MatrixOrder, DEFAULT_ORDER_CAP};

/// An element of `GL(k, Z)`, viewed as a diffeomorphism of `T^k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TorusAutomorphism {
    matrix: IntMatrix,
    det: BigInt,
    order: MatrixOrder,
}

impl TorusAutomorphism {
    pub fn new(matrix: IntMatrix) -> Result<Self> {
        Self::with_order_cap(matrix, DEFAULT_ORDER_CAP)
    }

    pub fn with_order_cap(matrix: IntMatrix, order_cap: u64) -> Result<Self> {
        let det = matrix.det();
        if !det.clone().magnitude().is_one() {
            return Err(Error::NotUnimodular { det });
        }
        let order = matrix.order(order_cap)?;
        Ok(TorusAutomorphism { matrix, det, order })
    }

    pub fn identity(dim: usize) -> Self {
        TorusAutomorphism {
            matrix: IntMatrix::identity(dim),
            det: BigInt::one(),
            order: MatrixOrder::Finite(1),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }

    pub fn det(&self) -> &BigInt {
        &self.det
    }

    pub fn order(&self) -> MatrixOrder {
        self.order
    }

    pub fn is_trivial(&self) -> bool {
        self.matrix.is_identity()
    }

    pub fn preserves_orientation(&self) -> bool {
        self.det.is_one()
    }
}

/// The mapping torus of a torus automorphism, of dimension `k + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MappingTorus {
    fiber: TorusAutomorphism,
}

/// `H_1(M(f)) = Z + coker(A - I)`, as free rank plus torsion coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Abelianization {
    pub free_rank: usize,
    /// Ascending, with trivial factors dropped.
    #[serde(
        serialize_with = "crate::intmat::serialize_bigints",
        deserialize_with = "crate::intmat::deserialize_bigints"
    )]
    pub torsion: Vec<BigInt>,
}

/// Fundamental group data of `M(f)`: the semidirect product `Z^k x|_A Z`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Pi1Data {
    pub fiber_rank: usize,
    pub monodromy: IntMatrix,
    pub abelian: bool,
    pub abelianization: Abelianization,
}

/// How a rank value was established.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RankJustification {
    /// Lower bound `k` from extending the coordinate frame of the fiber
    /// across the gluing; upper bound `k` because a closed `n`-manifold of
    /// rank `n` is a torus and `pi_1` is non-abelian.
    Bounds {
        lower: LowerBound,
        upper: UpperBound,
    },
    Exact {
        exact: ExactRank,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerBound {
    GluedCoordinateFrame,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpperBound {
    FullRankForcesTorus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactRank {
    IsTorus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Rank {
    pub value: usize,
    pub justification: RankJustification,
}

impl MappingTorus {
    pub fn new(fiber: TorusAutomorphism) -> Self {
        MappingTorus { fiber }
    }

    pub fn from_matrix(matrix: IntMatrix) -> Result<Self> {
        TorusAutomorphism::new(matrix).map(Self::new)
    }

    pub fn fiber(&self) -> &TorusAutomorphism {
        &self.fiber
    }

    pub fn monodromy(&self) -> &IntMatrix {
        self.fiber.matrix()
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber.dim()
    }

    pub fn total_dim(&self) -> usize {
        self.fiber.dim() + 1
    }

    pub fn pi1(&self) -> Pi1Data {
        Pi1Data {
            fiber_rank: self.fiber_dim(),
            monodromy: self.monodromy().clone(),
            abelian: self.fiber.is_trivial(),
            abelianization: self.abelianization(),
        }
    }

    pub fn abelianization(&self) -> Abelianization {
        let snf = self.monodromy().minus_identity().smith_normal_form();
        let mut torsion = snf.torsion();
        torsion.sort();
        Abelianization {
            free_rank: 1 + snf.free_rank(),
            torsion,
        }
    }

    /// `M(id) = T^{k+1}`; any other monodromy gives a non-abelian `pi_1`.
    pub fn is_torus(&self) -> bool {
        self.fiber.is_trivial()
    }

    pub fn is_orientable(&self) -> bool {
        self.fiber.preserves_orientation()
    }

    pub fn rank(&self) -> Rank {
        let k = self.fiber_dim();
        if self.is_torus() {
            Rank {
                value: k + 1,
                justification: RankJustification::Exact {
                    exact: ExactRank::IsTorus,
                },
            }
        } else {
            Rank {
                value: k,
                justification: RankJustification::Bounds {
                    lower: LowerBound::GluedCoordinateFrame,
                    upper: UpperBound::FullRankForcesTorus,
                },
            }
        }
    }
}

/// Wire form `{"k": int, "A": [[...]]}`.
#[derive(Serialize, Deserialize)]
struct DescriptorWire {
    k: usize,
    #[serde(rename = "A")]
    a: IntMatrix,
}

impl Serialize for MappingTorus {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        DescriptorWire {
            k: self.fiber_dim(),
            a: self.monodromy().clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MappingTorus {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let wire = DescriptorWire::deserialize(deserializer)?;
        if wire.k != wire.a.dim() {
            return Err(D::Error::custom(format!(
                "k = {} does not match matrix dimension {}",
                wire.k,
                wire.a.dim()
            )));
        }
        MappingTorus::from_matrix(wire.a).map_err(D::Error::custom)
    }
}
