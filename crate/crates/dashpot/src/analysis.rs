//! Exact controllability/observability decisions.
//!
//! For a single-input single-output chain, complete reachability and
//! complete observability hold together exactly when the characteristic
//! polynomial and the adjoint polynomial have no common root. Both
//! polynomials are exact here, so the decision is a decision, not a
//! numerical claim. An independent Kalman rank oracle (its own
//! elimination kernel, no code shared with the polynomial route)
//! cross-checks every verdict.
//!
//! The module also builds the two instructive `N = 3` families: chains
//! with a deliberately engineered common root (not controllable, not
//! observable as a pair), and non-proportional chains that are still
//! controllable and observable.

use crate::chain::{ChainError, ChainSpec, StateSpaceModel};
use crate::chain_poly::{
    adjoint_poly_closed_form, char_poly_recursive, OracleError, DEFAULT_ORACLE_CAP,
};
use crate::poly::RationalPoly;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeSet;
use thiserror::Error;

/// Errors from the counterexample constructors.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    /// The requested parameters admit no physical counterexample: the
    /// stiffness forced by the common-root equation is not positive.
    #[error("derived stiffness k2 = {value} is not positive; adjust m, k1, c1 or c2")]
    DerivedStiffnessNonPositive { value: String },
    /// Bounded enumeration found no qualifying pair, which indicates a
    /// bug: almost every stiffness pair qualifies.
    #[error("search exhausted without finding a controllable non-proportional pair")]
    SearchExhausted,
    #[error(transparent)]
    Invalid(#[from] ChainError),
}

/// The outcome of the exact decision procedure, with the evidence that
/// produced it.
///
/// For these systems complete reachability, controllability,
/// observability and reconstructibility coincide pairwise, so a single
/// boolean carries all four.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    /// True iff the gcd below is a nonzero constant.
    pub controllable_observable: bool,
    /// `P_N(z) = det(zI - F)`.
    pub char_poly: RationalPoly,
    /// Expanded `h adj(zI - F) g`.
    pub adjoint_poly: RationalPoly,
    /// Monic gcd of the two polynomials.
    pub gcd: RationalPoly,
    /// Distinct common roots, ascending. Always a subset of the adjoint
    /// roots `-k_i/c_i`, hence exact rationals.
    pub common_roots: Vec<BigRational>,
    /// Whether all ratios `c_i / k_i` agree (zero damping counts as the
    /// ratio zero).
    pub proportionality_holds: bool,
    /// Exact rank of `[g, Fg, ..., F^{2N-1} g]`.
    pub kalman_control_rank: usize,
    /// Exact rank of `[h; hF; ...; hF^{2N-1}]`.
    pub kalman_observe_rank: usize,
}

/// Decides complete controllability/observability for a chain.
pub fn decide(spec: &ChainSpec) -> Verdict {
    let char_poly = char_poly_recursive(spec);
    let factorization = adjoint_poly_closed_form(spec);
    let adjoint_poly = factorization.expand();
    let gcd = RationalPoly::gcd(&char_poly, &adjoint_poly)
        .expect("characteristic polynomial is monic, never zero");

    let common_roots: Vec<BigRational> = factorization
        .roots()
        .into_iter()
        .filter(|z| char_poly.eval(z).is_zero())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let model = spec.to_state_space();
    Verdict {
        controllable_observable: gcd.degree() == Some(0),
        char_poly,
        adjoint_poly,
        gcd,
        common_roots,
        proportionality_holds: proportionality_check(spec),
        kalman_control_rank: controllability_rank_uncapped(&model),
        kalman_observe_rank: observability_rank_uncapped(&model),
    }
}

/// True iff `c_1/k_1 = c_2/k_2 = ... = c_{N-1}/k_{N-1}` as exact
/// rationals. All-zero damping counts as proportional with ratio zero.
pub fn proportionality_check(spec: &ChainSpec) -> bool {
    let k = spec.stiffness();
    let c = spec.damping();
    // cross-multiplied comparison, safe for c_i = 0
    (1..k.len()).all(|i| &c[0] * &k[i] == &c[i] * &k[0])
}

/// Exact rank of the controllability matrix `[g, Fg, ..., F^{2N-1} g]`
/// over the rationals, under the default dimension cap.
pub fn kalman_controllability_rank(model: &StateSpaceModel) -> Result<usize, OracleError> {
    kalman_controllability_rank_with_cap(model, DEFAULT_ORACLE_CAP)
}

/// As [`kalman_controllability_rank`] with an explicit cap.
pub fn kalman_controllability_rank_with_cap(
    model: &StateSpaceModel,
    cap: usize,
) -> Result<usize, OracleError> {
    if model.dim() > cap {
        return Err(OracleError::DimensionExceeded {
            dim: model.dim(),
            cap,
        });
    }
    Ok(controllability_rank_uncapped(model))
}

/// Exact rank of the observability matrix `[h; hF; ...; hF^{2N-1}]`
/// over the rationals, under the default dimension cap.
pub fn kalman_observability_rank(model: &StateSpaceModel) -> Result<usize, OracleError> {
    kalman_observability_rank_with_cap(model, DEFAULT_ORACLE_CAP)
}

/// As [`kalman_observability_rank`] with an explicit cap.
pub fn kalman_observability_rank_with_cap(
    model: &StateSpaceModel,
    cap: usize,
) -> Result<usize, OracleError> {
    if model.dim() > cap {
        return Err(OracleError::DimensionExceeded {
            dim: model.dim(),
            cap,
        });
    }
    Ok(observability_rank_uncapped(model))
}

fn controllability_rank_uncapped(model: &StateSpaceModel) -> usize {
    let dim = model.dim();
    let mut krylov = Vec::with_capacity(dim);
    let mut v = model.g_vector().to_vec();
    for _ in 0..dim {
        krylov.push(v.clone());
        v = model.f_matrix().mul_vec(&v);
    }
    exact_rank(krylov)
}

fn observability_rank_uncapped(model: &StateSpaceModel) -> usize {
    let dim = model.dim();
    // row Krylov sequence h, hF, ...: iterate with F^T acting on h
    let mut krylov = Vec::with_capacity(dim);
    let mut v = model.h_vector().to_vec();
    for _ in 0..dim {
        krylov.push(v.clone());
        let next = (0..dim)
            .map(|j| {
                (0..dim)
                    .map(|i| &v[i] * model.f_matrix().at(i, j))
                    .sum::<BigRational>()
            })
            .collect();
        v = next;
    }
    exact_rank(krylov)
}

/// Exact rank by fraction-free elimination: rows are cleared of
/// denominators, then reduced over the integers Bareiss-style. Kept
/// deliberately separate from the polynomial elimination in
/// [`crate::chain_poly`] so rank and determinant routes stay independent.
fn exact_rank(rows: Vec<Vec<BigRational>>) -> usize {
    let mut m: Vec<Vec<BigInt>> = rows
        .into_iter()
        .map(|row| {
            let lcm = row
                .iter()
                .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
            row.into_iter()
                .map(|x| x.numer() * (&lcm / x.denom()))
                .collect()
        })
        .collect();

    let nrows = m.len();
    let ncols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    let mut prev_pivot = BigInt::one();
    for col in 0..ncols {
        let Some(pivot_row) = (rank..nrows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot_row);
        let pivot = m[rank][col].clone();
        for r in rank + 1..nrows {
            for c in col + 1..ncols {
                let num = &pivot * &m[r][c] - &m[r][col] * &m[rank][c];
                let (quot, rem) = num.div_rem(&prev_pivot);
                debug_assert!(rem.is_zero(), "fraction-free step must divide exactly");
                m[r][c] = quot;
            }
            m[r][col] = BigInt::zero();
        }
        prev_pivot = pivot;
        rank += 1;
        if rank == nrows {
            break;
        }
    }
    rank
}

/// A chain with an engineered common root: the unique `k_2` making the
/// adjoint root `z_1 = -k_1/c_1` also a characteristic root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterexampleN3 {
    spec: ChainSpec,
    common_root: BigRational,
    h_sum: BigRational,
}

impl CounterexampleN3 {
    pub fn spec(&self) -> &ChainSpec {
        &self.spec
    }

    /// The shared root `z_1 = -k_1 / c_1`.
    pub fn common_root(&self) -> &BigRational {
        &self.common_root
    }

    /// `H = 1/m_2 + 1/m_3` from the root condition.
    pub fn h_sum(&self) -> &BigRational {
        &self.h_sum
    }
}

/// Builds the three-mass chain on which the coprimality test fails:
/// given masses, `k_1 > 0`, `c_1 > 0` and `c_2 >= 0`, the stiffness
///
/// ```text
/// k_2 = (k_1/c_1) c_2 - k_1^2 / (c_1^2 H),   H = 1/m_2 + 1/m_3
/// ```
///
/// is the unique value for which `z_1 = -k_1/c_1` is a root of both
/// polynomials. Errors when that `k_2` is not positive, i.e. the chosen
/// parameters admit no physical counterexample.
pub fn make_counterexample_n3(
    masses: &[BigRational; 3],
    k1: &BigRational,
    c1: &BigRational,
    c2: &BigRational,
) -> Result<CounterexampleN3, AnalysisError> {
    for (i, m) in masses.iter().enumerate() {
        if !m.is_positive() {
            return Err(ChainError::NonPositiveMass { index: i }.into());
        }
    }
    if !k1.is_positive() {
        return Err(ChainError::NonPositiveStiffness { index: 0 }.into());
    }
    if !c1.is_positive() {
        // z_1 = -k_1/c_1 needs damping on the first coupling
        return Err(ChainError::NegativeDamping { index: 0 }.into());
    }
    if c2.is_negative() {
        return Err(ChainError::NegativeDamping { index: 1 }.into());
    }

    let h_sum = masses[1].recip() + masses[2].recip();
    let ratio = k1 / c1;
    let k2 = &ratio * c2 - k1 * &ratio / (c1 * &h_sum);
    if !k2.is_positive() {
        return Err(AnalysisError::DerivedStiffnessNonPositive {
            value: crate::rational::format_rational(&k2),
        });
    }

    let spec = ChainSpec::new(
        masses.to_vec(),
        vec![k1.clone(), k2],
        vec![c1.clone(), c2.clone()],
    )?;
    let common_root = -ratio;
    debug_assert!(char_poly_recursive(&spec).eval(&common_root).is_zero());
    Ok(CounterexampleN3 {
        spec,
        common_root,
        h_sum,
    })
}

/// Finds a non-proportional three-mass chain that is nevertheless
/// controllable and observable: enumerates small integer stiffness pairs
/// and keeps the first whose characteristic polynomial vanishes at
/// neither adjoint root, verified by exact evaluation.
pub fn make_controllable_nonproportional_n3(
    masses: &[BigRational; 3],
    c1: &BigRational,
    c2: &BigRational,
) -> Result<ChainSpec, AnalysisError> {
    for (i, m) in masses.iter().enumerate() {
        if !m.is_positive() {
            return Err(ChainError::NonPositiveMass { index: i }.into());
        }
    }
    for (i, c) in [c1, c2].into_iter().enumerate() {
        if !c.is_positive() {
            // both adjoint roots must exist for the construction to say anything
            return Err(ChainError::NegativeDamping { index: i }.into());
        }
    }

    for k1_int in 1i64..=12 {
        for k2_int in 1i64..=12 {
            let k1 = BigRational::from_integer(BigInt::from(k1_int));
            let k2 = BigRational::from_integer(BigInt::from(k2_int));
            if c1 * &k2 == c2 * &k1 {
                continue; // proportional pair, out of scope here
            }
            let spec = ChainSpec::new(
                masses.to_vec(),
                vec![k1.clone(), k2.clone()],
                vec![c1.clone(), c2.clone()],
            )?;
            let p = char_poly_recursive(&spec);
            let z1 = -(&k1 / c1);
            let z2 = -(&k2 / c2);
            if !p.eval(&z1).is_zero() && !p.eval(&z2).is_zero() {
                return Ok(spec);
            }
        }
    }
    Err(AnalysisError::SearchExhausted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn ones3() -> [BigRational; 3] {
        [rat(1, 1), rat(1, 1), rat(1, 1)]
    }

    #[test]
    fn proportionality_cases() {
        let yes = ChainSpec::from_ints(&[1, 1, 1, 1], &[1, 2, 4], &[3, 6, 12]).unwrap();
        assert!(proportionality_check(&yes));
        let no = ChainSpec::from_ints(&[1, 1, 1], &[1, 1], &[1, 2]).unwrap();
        assert!(!proportionality_check(&no));
        let undamped = ChainSpec::from_ints(&[1, 1, 1], &[1, 1], &[0, 0]).unwrap();
        assert!(proportionality_check(&undamped));
        let mixed = ChainSpec::from_ints(&[1, 1, 1], &[1, 1], &[0, 1]).unwrap();
        assert!(!proportionality_check(&mixed));
    }

    #[test]
    fn n2_is_always_controllable_observable() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let spec = ChainSpec::random(&mut rng, 2);
            let verdict = decide(&spec);
            assert!(verdict.controllable_observable, "spec: {spec:?}");
            assert_eq!(verdict.kalman_control_rank, 4);
            assert_eq!(verdict.kalman_observe_rank, 4);
            assert!(verdict.common_roots.is_empty());
        }
    }

    #[test]
    fn undamped_n2_has_full_ranks() {
        let spec = ChainSpec::from_ints(&[1, 1], &[1], &[0]).unwrap();
        let model = spec.to_state_space();
        assert_eq!(kalman_controllability_rank(&model).unwrap(), 4);
        assert_eq!(kalman_observability_rank(&model).unwrap(), 4);
    }

    #[test]
    fn proportional_chains_are_controllable_observable() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 2..=6 {
            for lambda in [rat(0, 1), rat(1, 3), rat(1, 1), rat(7, 2)] {
                let spec = ChainSpec::random_proportional(&mut rng, n, &lambda);
                let verdict = decide(&spec);
                assert!(verdict.controllable_observable, "n={n}, lambda={lambda}");
                assert!(verdict.proportionality_holds);
                assert_eq!(verdict.kalman_control_rank, 2 * n);
                assert_eq!(verdict.kalman_observe_rank, 2 * n);
            }
        }

        // five masses with c = 2k and mixed masses
        let spec = ChainSpec::from_ints(&[3, 1, 4, 1, 5], &[2, 7, 1, 8], &[4, 14, 2, 16]).unwrap();
        assert!(decide(&spec).controllable_observable);
    }

    #[test]
    fn decide_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let spec = ChainSpec::random(&mut rng, 4);
        assert_eq!(decide(&spec), decide(&spec));
    }

    #[test]
    fn counterexample_golden_instance() {
        // m=[1,1,1], k1=1, c1=1, c2=1: H=2, k2 = 1 - 1/2 = 1/2, root -1
        let ce = make_counterexample_n3(&ones3(), &rat(1, 1), &rat(1, 1), &rat(1, 1)).unwrap();
        assert_eq!(ce.spec().stiffness()[1], rat(1, 2));
        assert_eq!(ce.common_root(), &rat(-1, 1));
        assert_eq!(ce.h_sum(), &rat(2, 1));

        let verdict = decide(ce.spec());
        assert!(!verdict.controllable_observable);
        assert!(!verdict.proportionality_holds);
        assert!(verdict.gcd.degree().unwrap() >= 1);
        assert!(verdict.gcd.eval(&rat(-1, 1)).is_zero());
        assert_eq!(verdict.common_roots, vec![rat(-1, 1)]);
        assert!(verdict.adjoint_poly.eval(&rat(-1, 1)).is_zero());

        // The engineered root sits on the input-side coupling, so it is
        // the controllability rank that drops; the observability matrix
        // stays full for this instance.
        assert_eq!(verdict.kalman_control_rank, 5);
        assert_eq!(verdict.kalman_observe_rank, 6);
    }

    #[test]
    fn reversed_counterexample_loses_observability_instead() {
        let ce = make_counterexample_n3(&ones3(), &rat(1, 1), &rat(1, 1), &rat(1, 1)).unwrap();
        let mirrored = ce.spec().reversed();
        let verdict = decide(&mirrored);
        assert!(!verdict.controllable_observable);
        assert_eq!(verdict.kalman_control_rank, 6);
        assert_eq!(verdict.kalman_observe_rank, 5);
    }

    #[test]
    fn counterexample_sign_check() {
        // c2 = 1/4 gives k2 = 1/4 - 1/2 = -1/4 < 0
        let err =
            make_counterexample_n3(&ones3(), &rat(1, 1), &rat(1, 1), &rat(1, 4)).unwrap_err();
        assert_eq!(
            err,
            AnalysisError::DerivedStiffnessNonPositive {
                value: "-1/4".into()
            }
        );
    }

    #[test]
    fn counterexample_outputs_are_never_proportional() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut produced = 0;
        while produced < 20 {
            let masses = [
                rat(rng.gen_range(1..=6), 1),
                rat(rng.gen_range(1..=6), 1),
                rat(rng.gen_range(1..=6), 1),
            ];
            let k1 = rat(rng.gen_range(1..=6), 1);
            let c1 = rat(rng.gen_range(1..=6), 1);
            let c2 = rat(rng.gen_range(0..=6), 1);
            let Ok(ce) = make_counterexample_n3(&masses, &k1, &c1, &c2) else {
                continue;
            };
            produced += 1;
            assert!(!proportionality_check(ce.spec()));
            let verdict = decide(ce.spec());
            assert!(!verdict.controllable_observable);
            assert!(verdict.kalman_control_rank < 6);
            assert!(verdict.char_poly.eval(ce.common_root()).is_zero());
        }
    }

    #[test]
    fn nonproportional_controllable_family() {
        let spec =
            make_controllable_nonproportional_n3(&ones3(), &rat(1, 1), &rat(1, 1)).unwrap();
        assert_eq!(spec.stiffness(), &[rat(1, 1), rat(2, 1)]);
        let verdict = decide(&spec);
        assert!(verdict.controllable_observable);
        assert!(!verdict.proportionality_holds);
        assert_eq!(verdict.gcd, RationalPoly::one());
        assert_eq!(verdict.kalman_control_rank, 6);
        assert_eq!(verdict.kalman_observe_rank, 6);
    }

    #[test]
    fn rank_oracle_enforces_cap() {
        let spec = ChainSpec::from_ints(&[1; 9], &[1; 8], &[1; 8]).unwrap();
        let model = spec.to_state_space();
        assert_eq!(
            kalman_controllability_rank(&model),
            Err(OracleError::DimensionExceeded { dim: 18, cap: 16 })
        );
    }

    #[test]
    fn exact_rank_basics() {
        let rows = vec![
            vec![rat(1, 2), rat(1, 3)],
            vec![rat(3, 2), rat(1, 1)],
            vec![rat(2, 1), rat(4, 3)],
        ];
        // every row is a multiple of (1/2, 1/3)
        assert_eq!(exact_rank(rows), 1);
        let rows = vec![vec![rat(0, 1), rat(1, 1)], vec![rat(1, 1), rat(0, 1)]];
        assert_eq!(exact_rank(rows), 2);
        let rows = vec![vec![rat(0, 1), rat(0, 1)], vec![rat(0, 1), rat(0, 1)]];
        assert_eq!(exact_rank(rows), 0);
    }
}
