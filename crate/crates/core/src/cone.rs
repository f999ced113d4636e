//! Closed convex cones, the induced preorder and dual-cone machinery.
//!
//! A convex cone `K` induces the preorder `x ⪯ y  ⟺  y − x ∈ K` and, when `K`
//! has nonempty interior, the strict relation `x ≪ y  ⟺  y − x ∈ int K`.
//! Two representations are supported:
//!
//! - **Orthant** cones, described by a sign pattern `s ∈ {±1}^n`:
//!   `K = {x : s_j x_j ≥ 0 for all j}`. Normals, generators and dual generators
//!   are all the signed unit vectors and are derived automatically.
//! - **Polyhedral** cones, described by user-supplied halfspace normals `a_i`
//!   (`K = {x : ⟨a_i, x⟩ ≥ 0}`) together with generators spanning the cone by
//!   nonnegative combinations. Dual generators, when needed, must also be
//!   supplied; the library validates them instead of computing them.
//!
//! All operations are pure functions over immutable values.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::{dot, norm2, sub};

/// Default tolerance for algebraic membership tests.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeKind {
    Orthant,
    Polyhedral,
}

/// Declarative cone description, as it appears in experiment config files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeSpec {
    /// Sign pattern, one entry in {-1, +1} per coordinate.
    Orthant(Vec<i32>),
    Polyhedral {
        normals: Vec<Vec<f64>>,
        generators: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dual_generators: Option<Vec<Vec<f64>>>,
    },
}

impl ConeSpec {
    pub fn build(&self) -> Result<ConvexCone> {
        match self {
            ConeSpec::Orthant(signs) => ConvexCone::orthant(signs),
            ConeSpec::Polyhedral { normals, generators, dual_generators } => {
                ConvexCone::polyhedral(normals.clone(), generators.clone(), dual_generators.clone())
            }
        }
    }
}

/// A closed convex cone together with its membership tolerance.
#[derive(Debug, Clone)]
pub struct ConvexCone {
    kind: ConeKind,
    dim: usize,
    /// Orthant kind only; entries are ±1.
    signs: Vec<f64>,
    /// `K = {x : ⟨a_i, x⟩ ≥ 0}`; derived signed unit vectors for orthants.
    normals: Vec<Vec<f64>>,
    /// Nonnegative combinations of these span the cone.
    generators: Vec<Vec<f64>>,
    /// Finite generating set for the dual cone; user-supplied for polyhedral cones.
    dual_gens: Option<Vec<Vec<f64>>>,
    tol: f64,
}

fn unit(dim: usize, j: usize, sign: f64) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    e[j] = sign;
    e
}

impl ConvexCone {
    /// Orthant cone from a sign pattern (entries must be +1 or -1).
    pub fn orthant(signs: &[i32]) -> Result<Self> {
        if signs.is_empty() {
            return Err(Error::InvalidCone("empty sign pattern".into()));
        }
        if let Some(bad) = signs.iter().find(|s| s.abs() != 1) {
            return Err(Error::InvalidCone(format!("sign entries must be ±1, got {bad}")));
        }
        let dim = signs.len();
        let signs: Vec<f64> = signs.iter().map(|&s| s as f64).collect();
        let axes: Vec<Vec<f64>> = signs.iter().enumerate().map(|(j, &s)| unit(dim, j, s)).collect();
        Ok(ConvexCone {
            kind: ConeKind::Orthant,
            dim,
            signs,
            normals: axes.clone(),
            generators: axes.clone(),
            dual_gens: Some(axes),
            tol: DEFAULT_TOL,
        })
    }

    /// The nonnegative orthant of `R^n`.
    pub fn positive_orthant(n: usize) -> Self {
        ConvexCone::orthant(&vec![1; n]).expect("positive orthant is always valid")
    }

    /// Polyhedral cone from halfspace normals and generators.
    ///
    /// Every generator must satisfy all normal inequalities within tolerance
    /// (the two descriptions must name the same cone). Dual generators are
    /// optional; when supplied they are validated against the generators. An
    /// empty generator list denotes the trivial cone `{0}`.
    pub fn polyhedral(
        normals: Vec<Vec<f64>>,
        generators: Vec<Vec<f64>>,
        dual_generators: Option<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let dim = normals
            .first()
            .map(|v| v.len())
            .or_else(|| generators.first().map(|v| v.len()))
            .ok_or_else(|| Error::InvalidCone("polyhedral cone needs normals or generators".into()))?;
        for v in normals.iter().chain(generators.iter()) {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
            }
        }
        let tol = DEFAULT_TOL;
        for (gi, g) in generators.iter().enumerate() {
            for (ai, a) in normals.iter().enumerate() {
                if dot(a, g) < -tol {
                    return Err(Error::InvalidCone(format!(
                        "generator {gi} violates normal {ai}: ⟨a,g⟩ = {:.3e}",
                        dot(a, g)
                    )));
                }
            }
        }
        if let Some(duals) = &dual_generators {
            for y in duals {
                if y.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: y.len() });
                }
                for g in &generators {
                    if dot(y, g) < -tol {
                        return Err(Error::InvalidCone(format!(
                            "claimed dual generator pairs negatively with a cone generator: {:.3e}",
                            dot(y, g)
                        )));
                    }
                }
            }
        }
        Ok(ConvexCone {
            kind: ConeKind::Polyhedral,
            dim,
            signs: Vec::new(),
            normals,
            generators,
            dual_gens: dual_generators,
            tol,
        })
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        assert!(tol >= 0.0, "tolerance must be nonnegative");
        self.tol = tol;
        self
    }

    pub fn kind(&self) -> ConeKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Orthant sign pattern; empty for polyhedral cones.
    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn normals(&self) -> &[Vec<f64>] {
        &self.normals
    }

    pub fn generators(&self) -> &[Vec<f64>] {
        &self.generators
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(())
    }

    /// Membership `x ∈ K`, i.e. `⟨a_i, x⟩ ≥ −tol` for every normal.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        self.check_dim(x)?;
        Ok(match self.kind {
            ConeKind::Orthant => self.signs.iter().zip(x).all(|(s, v)| s * v >= -self.tol),
            ConeKind::Polyhedral => self.normals.iter().all(|a| dot(a, x) >= -self.tol),
        })
    }

    /// The conic preorder: `x ⪯ y ⟺ y − x ∈ K`.
    pub fn leq(&self, x: &[f64], y: &[f64]) -> Result<bool> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        self.contains(&sub(y, x))
    }

    /// The strict relation: `x ≪ y ⟺ y − x ∈ int K`, tested as
    /// `⟨a_i, y − x⟩ > tol` for every normal. Errors when `K` has empty interior.
    pub fn strictly_less(&self, x: &[f64], y: &[f64]) -> Result<bool> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        if !self.has_nonempty_interior() {
            return Err(Error::EmptyInterior);
        }
        let d = sub(y, x);
        Ok(self.normals.iter().all(|a| dot(a, &d) > self.tol))
    }

    /// True when an interior witness exists. Orthants always qualify; for
    /// polyhedral cones a witness is searched among nonnegative generator
    /// combinations (the sum of generators plus a few deterministic mixes).
    pub fn has_nonempty_interior(&self) -> bool {
        match self.kind {
            ConeKind::Orthant => true,
            ConeKind::Polyhedral => self.interior_witness().is_some(),
        }
    }

    fn interior_witness(&self) -> Option<Vec<f64>> {
        if self.generators.is_empty() {
            return None;
        }
        let strict = |w: &[f64]| self.normals.iter().all(|a| dot(a, w) > self.tol);
        let mut sum = vec![0.0; self.dim];
        for g in &self.generators {
            for (s, v) in sum.iter_mut().zip(g) {
                *s += v;
            }
        }
        if strict(&sum) {
            return Some(sum);
        }
        // Deterministic pseudo-random mixes, in case the plain sum sits on a face.
        let mut state = 0x9e3779b97f4a7c15u64;
        for _ in 0..32 {
            let mut w = vec![0.0; self.dim];
            for g in &self.generators {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let c = (state >> 11) as f64 / (1u64 << 53) as f64;
                for (wv, gv) in w.iter_mut().zip(g) {
                    *wv += c * gv;
                }
            }
            if strict(&w) {
                return Some(w);
            }
        }
        None
    }

    /// A finite generating set for the dual cone `K* = {y : ⟨x,y⟩ ≥ 0 ∀x ∈ K}`.
    ///
    /// Orthants are self-dual up to coordinate reflection: the set is
    /// `{s_j e_j}`. Polyhedral cones return the user-supplied set or
    /// [`Error::DualUnavailable`].
    pub fn dual_generators(&self) -> Result<&[Vec<f64>]> {
        self.dual_gens.as_deref().ok_or(Error::DualUnavailable)
    }

    /// Membership of `d` in the face `K ∩ {y}⊥` for a dual vector `y`:
    /// `d ∈ K` and `|⟨d, y⟩| ≤ tol`. `y ∈ K*` is checked against the generators.
    pub fn in_face(&self, y: &[f64], d: &[f64]) -> Result<bool> {
        self.check_dim(y)?;
        self.check_dim(d)?;
        let worst = self
            .generators
            .iter()
            .map(|g| dot(g, y))
            .fold(f64::INFINITY, f64::min);
        if worst < -self.tol {
            return Err(Error::NotInDualCone { violation: worst });
        }
        Ok(self.contains(d)? && dot(d, y).abs() <= self.tol)
    }

    /// Generators of the face `K ∩ {y}⊥`: the cone generators orthogonal to `y`.
    pub fn face_generators(&self, y: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_dim(y)?;
        Ok(self
            .generators
            .iter()
            .filter(|g| dot(g, y).abs() <= self.tol * (1.0 + norm2(g) * norm2(y)))
            .cloned()
            .collect())
    }

    /// Polyhedral surrogate for the distance of `x` into the complement of `K`:
    /// `max_y max(0, −⟨x,y⟩)/‖y‖` over the dual generators. Zero iff `x ∈ K`
    /// up to tolerance.
    pub fn defect(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let duals = self.dual_generators()?;
        Ok(duals
            .iter()
            .map(|y| (-dot(x, y) / norm2(y)).max(0.0))
            .fold(0.0, f64::max))
    }

    /// Random members of `K`: nonnegative combinations of the generators with
    /// coefficients uniform in `[0, scale)`.
    pub fn sample_members<R: Rng>(&self, rng: &mut R, count: usize, scale: f64) -> Vec<Vec<f64>> {
        (0..count)
            .map(|_| {
                let mut x = vec![0.0; self.dim];
                for g in &self.generators {
                    let c = rng.gen_range(0.0..scale);
                    for (xv, gv) in x.iter_mut().zip(g) {
                        *xv += c * gv;
                    }
                }
                x
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn wolbachia_cone() -> ConvexCone {
        ConvexCone::orthant(&[-1, -1, 1, 1]).unwrap()
    }

    /// Half-line generated by (1,1): x₁ = x₂ ≥ 0.
    fn half_line() -> ConvexCone {
        ConvexCone::polyhedral(
            vec![vec![1.0, -1.0], vec![-1.0, 1.0], vec![1.0, 1.0]],
            vec![vec![1.0, 1.0]],
            Some(vec![vec![1.0, -1.0], vec![-1.0, 1.0], vec![1.0, 1.0]]),
        )
        .unwrap()
    }

    #[test]
    fn orthant_contains_sign_pattern() {
        let k = wolbachia_cone();
        assert!(k.contains(&[-1.0, -1.0, 3.0, 4.0]).unwrap());
        assert!(k.contains(&[0.0, 0.0, 0.0, 0.0]).unwrap());
        assert!(!k.contains(&[1.0, 0.0, 0.0, 0.0]).unwrap());
    }

    #[test]
    fn contains_rejects_dimension_mismatch() {
        let k = ConvexCone::positive_orthant(2);
        assert!(matches!(
            k.contains(&[1.0, 2.0, 3.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn leq_examples() {
        let k = wolbachia_cone();
        assert!(k.leq(&[2.0, 2.0, 0.0, 0.0], &[1.0, 1.0, 3.0, 4.0]).unwrap());
        assert!(k.leq(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 4.0]).unwrap());
        let pos = ConvexCone::positive_orthant(2);
        assert!(!pos.leq(&[0.0, 1.0], &[1.0, 0.0]).unwrap());
    }

    #[test]
    fn strictly_less_examples() {
        let pos = ConvexCone::positive_orthant(2);
        assert!(pos.strictly_less(&[0.0, 0.0], &[1.0, 1.0]).unwrap());
        assert!(!pos.strictly_less(&[0.0, 0.0], &[1.0, 0.0]).unwrap());
        let k = wolbachia_cone();
        assert!(k.strictly_less(&[1.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 1.0]).unwrap());
    }

    #[test]
    fn strictly_less_errors_on_empty_interior() {
        let k = half_line();
        // Three independent normals in R² leave no interior.
        assert!(matches!(k.strictly_less(&[0.0, 0.0], &[1.0, 1.0]), Err(Error::EmptyInterior)));
    }

    #[test]
    fn dual_generators_orthants() {
        let pos = ConvexCone::positive_orthant(2);
        assert_eq!(pos.dual_generators().unwrap(), &[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let k = wolbachia_cone();
        let duals = k.dual_generators().unwrap();
        assert_eq!(duals.len(), 4);
        assert_eq!(duals[0], vec![-1.0, 0.0, 0.0, 0.0]);
        assert_eq!(duals[2], vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn dual_generators_half_line_brute_force() {
        // Oracle: every claimed dual generator must pair nonnegatively with
        // sampled cone members, and every sampled dual member must decompose
        // into a nonnegative combination of the claimed set.
        let k = half_line();
        let duals = k.dual_generators().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for x in k.sample_members(&mut rng, 500, 10.0) {
            for y in duals {
                assert!(dot(&x, y) >= -1e-12, "dual generator pairs negatively");
            }
        }
        // Dual of the ray is the halfplane y₁+y₂ ≥ 0; decompose samples over
        // {(1,-1),(-1,1),(1,1)} constructively.
        for _ in 0..500 {
            let y1: f64 = rng.gen_range(-5.0..5.0);
            let y2 = rng.gen_range(-5.0..5.0);
            if y1 + y2 < 0.0 {
                continue;
            }
            let c = (y1 + y2) / 2.0;
            let t = (y1 - y2) / 2.0;
            let (a, b) = (t.max(0.0), (-t).max(0.0));
            let rebuilt = [a - b + c, b - a + c];
            assert!((rebuilt[0] - y1).abs() < 1e-12 && (rebuilt[1] - y2).abs() < 1e-12);
            assert!(a >= 0.0 && b >= 0.0 && c >= 0.0);
        }
    }

    #[test]
    fn in_face_examples() {
        let pos = ConvexCone::positive_orthant(2);
        assert!(pos.in_face(&[1.0, 0.0], &[0.0, 1.0]).unwrap());
        assert!(!pos.in_face(&[1.0, 0.0], &[1.0, 0.0]).unwrap());
        let k = wolbachia_cone();
        assert!(!k.in_face(&[0.0, 0.0, 1.0, 0.0], &[-1.0, 0.0, 1.0, 0.0]).unwrap());
        assert!(k.in_face(&[0.0, 0.0, 1.0, 0.0], &[-1.0, 0.0, 0.0, 2.0]).unwrap());
    }

    #[test]
    fn in_face_rejects_non_dual_vector() {
        let pos = ConvexCone::positive_orthant(2);
        assert!(matches!(
            pos.in_face(&[-1.0, 0.0], &[0.0, 1.0]),
            Err(Error::NotInDualCone { .. })
        ));
    }

    #[test]
    fn face_generators_orthant() {
        let k = wolbachia_cone();
        let face = k.face_generators(&[-1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(face.len(), 3);
        assert!(face.iter().all(|g| g[0] == 0.0));
    }

    #[test]
    fn defect_measures_worst_normal_violation() {
        let pos = ConvexCone::positive_orthant(2);
        assert_eq!(pos.defect(&[1.0, 2.0]).unwrap(), 0.0);
        assert!((pos.defect(&[-0.5, 2.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!((pos.defect(&[-0.5, -3.0]).unwrap() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn polyhedral_rejects_inconsistent_generator() {
        let r = ConvexCone::polyhedral(
            vec![vec![1.0, 0.0]],
            vec![vec![-1.0, 0.0]],
            None,
        );
        assert!(matches!(r, Err(Error::InvalidCone(_))));
    }

    #[test]
    fn trivial_cone_contains_only_origin() {
        let zero = ConvexCone::polyhedral(
            vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]],
            vec![],
            None,
        )
        .unwrap();
        assert!(zero.contains(&[0.0, 0.0]).unwrap());
        assert!(!zero.contains(&[1e-6, 0.0]).unwrap());
        assert!(!zero.has_nonempty_interior());
    }

    #[test]
    fn members_stay_members_under_scaling_and_addition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for cone in [wolbachia_cone(), ConvexCone::positive_orthant(3), half_line()] {
            let members = cone.sample_members(&mut rng, 200, 5.0);
            for x in &members {
                assert!(cone.contains(x).unwrap());
                let doubled: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
                assert!(cone.contains(&doubled).unwrap());
            }
            for pair in members.chunks(2) {
                if let [a, b] = pair {
                    let s: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                    assert!(cone.contains(&s).unwrap());
                }
            }
        }
    }

    proptest! {
        #[test]
        fn preorder_is_reflexive(xs in proptest::collection::vec(-1e6f64..1e6, 1..6)) {
            let k = ConvexCone::positive_orthant(xs.len());
            prop_assert!(k.leq(&xs, &xs).unwrap());
        }

        #[test]
        fn preorder_is_transitive_on_chained_members(
            x in proptest::collection::vec(-10.0f64..10.0, 4),
            k1 in proptest::collection::vec(0.0f64..10.0, 4),
            k2 in proptest::collection::vec(0.0f64..10.0, 4),
            signs in proptest::collection::vec(prop_oneof![Just(1), Just(-1)], 4),
        ) {
            let cone = ConvexCone::orthant(&signs).unwrap().with_tol(0.0);
            let step1: Vec<f64> = x.iter().zip(&k1).zip(&signs)
                .map(|((xv, kv), s)| xv + kv * (*s as f64)).collect();
            let step2: Vec<f64> = step1.iter().zip(&k2).zip(&signs)
                .map(|((xv, kv), s)| xv + kv * (*s as f64)).collect();
            prop_assert!(cone.leq(&x, &step1).unwrap());
            prop_assert!(cone.leq(&step1, &step2).unwrap());
            prop_assert!(cone.leq(&x, &step2).unwrap());
        }

        #[test]
        fn strict_implies_weak(
            x in proptest::collection::vec(-10.0f64..10.0, 3),
            y in proptest::collection::vec(-10.0f64..10.0, 3),
            signs in proptest::collection::vec(prop_oneof![Just(1), Just(-1)], 3),
        ) {
            let cone = ConvexCone::orthant(&signs).unwrap();
            if cone.strictly_less(&x, &y).unwrap() {
                prop_assert!(cone.leq(&x, &y).unwrap());
            }
        }

        #[test]
        fn orthant_contains_matches_per_coordinate_check(
            x in proptest::collection::vec(-10.0f64..10.0, 5),
            signs in proptest::collection::vec(prop_oneof![Just(1), Just(-1)], 5),
        ) {
            let cone = ConvexCone::orthant(&signs).unwrap();
            let brute = x.iter().zip(&signs).all(|(v, s)| (*s as f64) * v >= -cone.tol());
            prop_assert_eq!(cone.contains(&x).unwrap(), brute);
        }
    }
}
