//! The two polynomials attached to a chain, plus independent oracles.
//!
//! The characteristic polynomial `P_N(z) = det(zI - F_N)` is produced by a
//! three-term recursion in the chain length; the adjoint polynomial
//! `hadj(zI - F)g` (the transfer-function numerator) has the closed form
//!
//! ```text
//! (k_1 + z c_1)(k_2 + z c_2) ... (k_{N-1} + z c_{N-1}) / (m_1 m_2 ... m_N)
//! ```
//!
//! Both have independent cross-checks in this module: a fraction-free
//! determinant of `zI - F` over the polynomial ring, a signed-minor
//! cofactor computation for the adjoint, and a combinatorial coefficient
//! expansion for small chains. The checks share no code path with the
//! constructions they verify.

use crate::chain::{ChainSpec, StateSpaceModel};
use crate::poly::RationalPoly;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;
use thiserror::Error;

/// Largest state dimension the determinant and rank oracles accept by
/// default (`2N`, so chains up to `N = 8`).
pub const DEFAULT_ORACLE_CAP: usize = 16;

/// Errors from the exact cross-check oracles.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("dimension {dim} exceeds the oracle cap {cap}")]
    DimensionExceeded { dim: usize, cap: usize },
}

/// One step of the characteristic-polynomial recursion: at level `N` it
/// holds `P_N` together with the auxiliary determinant `D_{N-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecursionState {
    p: RationalPoly,
    d_prev: RationalPoly,
    level: usize,
}

impl RecursionState {
    /// Level 1: `P_1 = z^2`, `D_0 = 1`.
    pub fn initial() -> Self {
        Self {
            p: RationalPoly::monomial(BigRational::one(), 2),
            d_prev: RationalPoly::one(),
            level: 1,
        }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// `P_N` for the current level.
    pub fn char_poly(&self) -> &RationalPoly {
        &self.p
    }

    /// `D_{N-1}` for the current level.
    pub fn previous_determinant(&self) -> &RationalPoly {
        &self.d_prev
    }

    /// Advances from level `N` to `N + 1` using spring `N` of `spec`:
    ///
    /// ```text
    /// b_N     = k_N + z c_N
    /// D_N     = P_N + (b_N / m_N) D_{N-1}
    /// P_{N+1} = (z^2 + b_N / m_{N+1}) P_N + z^2 (b_N / m_N) D_{N-1}
    /// ```
    pub fn advance(&mut self, spec: &ChainSpec) {
        let j = self.level;
        assert!(j < spec.n_masses(), "recursion already at full length");
        let b = RationalPoly::from_coeffs(vec![
            spec.stiffness()[j - 1].clone(),
            spec.damping()[j - 1].clone(),
        ]);
        let m_j = &spec.masses()[j - 1];
        let m_next = &spec.masses()[j];

        let b_over_mj = b.scaled(&m_j.recip());
        let b_over_mnext = b.scaled(&m_next.recip());
        let bd = &b_over_mj * &self.d_prev;

        let p_next = &(&self.p.shifted(2) + &(&b_over_mnext * &self.p)) + &bd.shifted(2);
        let d_next = &self.p + &bd;

        self.p = p_next;
        self.d_prev = d_next;
        self.level = j + 1;
    }
}

/// Characteristic polynomial `P_N(z) = det(zI - F_N)` via the three-term
/// recursion. Monic of degree `2N` with `z^2` dividing it (the free-free
/// chain has a double eigenvalue at zero).
pub fn char_poly_recursive(spec: &ChainSpec) -> RationalPoly {
    let mut state = RecursionState::initial();
    while state.level() < spec.n_masses() {
        state.advance(spec);
    }
    state.p
}

/// The adjoint polynomial in factored form: a rational scale
/// `1/(m_1 ... m_N)` times the linear factors `(k_i + z c_i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjointFactorization {
    scale: BigRational,
    factors: Vec<(BigRational, BigRational)>,
}

impl AdjointFactorization {
    /// `1 / (m_1 m_2 ... m_N)`.
    pub fn scale(&self) -> &BigRational {
        &self.scale
    }

    /// The `(k_i, c_i)` pairs of the linear factors `k_i + z c_i`.
    pub fn factors(&self) -> &[(BigRational, BigRational)] {
        &self.factors
    }

    /// Roots `-k_i / c_i` for every factor with `c_i > 0`, kept with
    /// multiplicity. Factors with `c_i = 0` are nonzero constants and
    /// contribute no root.
    pub fn roots(&self) -> Vec<BigRational> {
        self.factors
            .iter()
            .filter(|(_, c)| c.is_positive())
            .map(|(k, c)| -(k / c))
            .collect()
    }

    /// Degree of the expanded polynomial: the number of strictly positive
    /// dashpot constants.
    pub fn degree(&self) -> usize {
        self.factors.iter().filter(|(_, c)| c.is_positive()).count()
    }

    /// Multiplies the factorization out into a single polynomial.
    pub fn expand(&self) -> RationalPoly {
        let mut p = RationalPoly::constant(self.scale.clone());
        for (k, c) in &self.factors {
            let factor = RationalPoly::from_coeffs(vec![k.clone(), c.clone()]);
            p = &p * &factor;
        }
        p
    }
}

/// `1/2 * (5 z + 3) * (z + 1)` style factored form.
impl fmt::Display for AdjointFactorization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::rational::format_rational(&self.scale))?;
        for (k, c) in &self.factors {
            let factor = RationalPoly::from_coeffs(vec![k.clone(), c.clone()]);
            write!(f, " * ({factor})")?;
        }
        Ok(())
    }
}

/// The adjoint polynomial `h adj(zI - F) g` in closed form.
pub fn adjoint_poly_closed_form(spec: &ChainSpec) -> AdjointFactorization {
    let mass_product: BigRational = spec.masses().iter().product();
    AdjointFactorization {
        scale: mass_product.recip(),
        factors: spec
            .stiffness()
            .iter()
            .cloned()
            .zip(spec.damping().iter().cloned())
            .collect(),
    }
}

/// Characteristic polynomial by fraction-free elimination on `zI - F`
/// over the polynomial ring, with the default dimension cap.
pub fn char_poly_det_oracle(model: &StateSpaceModel) -> Result<RationalPoly, OracleError> {
    char_poly_det_oracle_with_cap(model, DEFAULT_ORACLE_CAP)
}

/// As [`char_poly_det_oracle`] with an explicit cap.
pub fn char_poly_det_oracle_with_cap(
    model: &StateSpaceModel,
    cap: usize,
) -> Result<RationalPoly, OracleError> {
    let dim = model.dim();
    if dim > cap {
        return Err(OracleError::DimensionExceeded { dim, cap });
    }
    let a = char_matrix(model);
    Ok(scaled_determinant(a))
}

/// Adjoint polynomial via the signed `(N+1, N)` minor of `zI - F`:
/// `h adj(zI - F) g = -det(A_{N+1,N}) / m_1`, with the minor determinant
/// computed by fraction-free elimination. Default dimension cap.
pub fn adjoint_cofactor_oracle(model: &StateSpaceModel) -> Result<RationalPoly, OracleError> {
    adjoint_cofactor_oracle_with_cap(model, DEFAULT_ORACLE_CAP)
}

/// As [`adjoint_cofactor_oracle`] with an explicit cap.
pub fn adjoint_cofactor_oracle_with_cap(
    model: &StateSpaceModel,
    cap: usize,
) -> Result<RationalPoly, OracleError> {
    let dim = model.dim();
    if dim > cap {
        return Err(OracleError::DimensionExceeded { dim, cap });
    }
    let n = model.n_masses();
    let a = char_matrix(model);
    // delete row N+1 and column N (1-based): indices n and n-1
    let minor: Vec<Vec<RationalPoly>> = (0..dim)
        .filter(|&i| i != n)
        .map(|i| {
            (0..dim)
                .filter(|&j| j != n - 1)
                .map(|j| a[i][j].clone())
                .collect()
        })
        .collect();
    let det = scaled_determinant(minor);
    let m1 = &model.spec().masses()[0];
    Ok((-&det).scaled(&m1.recip()))
}

/// Entries of `a_N = zI - F` as degree <= 1 polynomials.
fn char_matrix(model: &StateSpaceModel) -> Vec<Vec<RationalPoly>> {
    let dim = model.dim();
    (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| {
                    let mut coeffs = vec![-model.f_matrix().at(i, j).clone()];
                    if i == j {
                        coeffs.push(BigRational::one());
                    }
                    RationalPoly::from_coeffs(coeffs)
                })
                .collect()
        })
        .collect()
}

// ---------------------------------------------------------------------
// Fraction-free determinant over integer polynomials.
//
// Rows are first scaled by the lcm of their coefficient denominators so
// the elimination runs in Z[z], where the Bareiss divisions are exact;
// the accumulated row factors are divided back out at the end.
// ---------------------------------------------------------------------

type IntPoly = Vec<BigInt>;

fn scaled_determinant(matrix: Vec<Vec<RationalPoly>>) -> RationalPoly {
    let mut divisor = BigInt::one();
    let int_matrix: Vec<Vec<IntPoly>> = matrix
        .into_iter()
        .map(|row| {
            let mut lcm = BigInt::one();
            for entry in &row {
                for c in entry.coeffs() {
                    lcm = lcm.lcm(c.denom());
                }
            }
            divisor *= &lcm;
            row.into_iter()
                .map(|entry| {
                    entry
                        .coeffs()
                        .iter()
                        .map(|c| c.numer() * (&lcm / c.denom()))
                        .collect()
                })
                .collect()
        })
        .collect();

    let det = bareiss_determinant(int_matrix);
    let inv = BigRational::new(BigInt::one(), divisor);
    RationalPoly::from_coeffs(
        det.into_iter()
            .map(|c| BigRational::from_integer(c) * &inv)
            .collect(),
    )
}

// indexed loops: the update reads row k while rewriting row i
#[allow(clippy::needless_range_loop)]
fn bareiss_determinant(mut m: Vec<Vec<IntPoly>>) -> IntPoly {
    let n = m.len();
    if n == 0 {
        return vec![BigInt::one()];
    }
    let mut negate = false;
    let mut prev_pivot: IntPoly = vec![BigInt::one()];
    for k in 0..n - 1 {
        if m[k][k].is_empty() {
            match (k + 1..n).find(|&i| !m[i][k].is_empty()) {
                Some(swap) => {
                    m.swap(k, swap);
                    negate = !negate;
                }
                None => return Vec::new(),
            }
        }
        let pivot = m[k][k].clone();
        for i in k + 1..n {
            let lower = std::mem::take(&mut m[i][k]);
            for j in k + 1..n {
                let num = ip_sub(&ip_mul(&pivot, &m[i][j]), &ip_mul(&lower, &m[k][j]));
                m[i][j] = ip_div_exact(&num, &prev_pivot);
            }
        }
        prev_pivot = pivot;
    }
    let mut det = std::mem::take(&mut m[n - 1][n - 1]);
    if negate {
        for c in &mut det {
            *c = -std::mem::take(c);
        }
    }
    det
}

fn ip_mul(a: &[BigInt], b: &[BigInt]) -> IntPoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    ip_trim(out)
}

fn ip_sub(a: &[BigInt], b: &[BigInt]) -> IntPoly {
    let n = a.len().max(b.len());
    let zero = BigInt::zero();
    let out = (0..n)
        .map(|i| a.get(i).unwrap_or(&zero) - b.get(i).unwrap_or(&zero))
        .collect();
    ip_trim(out)
}

/// Exact division in Z[z]; the Bareiss recurrence guarantees the quotient
/// is again an integer polynomial.
fn ip_div_exact(num: &[BigInt], den: &[BigInt]) -> IntPoly {
    assert!(!den.is_empty(), "division by the zero polynomial");
    if num.is_empty() {
        return Vec::new();
    }
    if den.len() == 1 && den[0].is_one() {
        return num.to_vec();
    }
    let mut rem = num.to_vec();
    let dlead = den.last().unwrap();
    let ddeg = den.len() - 1;
    assert!(rem.len() >= den.len(), "inexact polynomial division");
    let qlen = rem.len() - ddeg;
    let mut quot = vec![BigInt::zero(); qlen];
    for k in (0..qlen).rev() {
        let (q, r) = rem[k + ddeg].div_rem(dlead);
        debug_assert!(r.is_zero(), "inexact coefficient division in Bareiss step");
        if !q.is_zero() {
            for (j, d) in den.iter().enumerate() {
                let prod = &q * d;
                rem[k + j] -= prod;
            }
        }
        quot[k] = q;
    }
    debug_assert!(rem.iter().all(Zero::is_zero), "inexact polynomial division");
    ip_trim(quot)
}

fn ip_trim(mut v: Vec<BigInt>) -> IntPoly {
    while v.last().is_some_and(Zero::is_zero) {
        v.pop();
    }
    v
}

// ---------------------------------------------------------------------
// Combinatorial coefficient expansion.
// ---------------------------------------------------------------------

/// Rebuilds `P_N` as a combinatorial sum over index families and checks a
/// third, recursion-free route for small chains (`N <= 4`).
///
/// The coefficient of `z^{2N - rho}` collects, over all disjoint spring
/// subsets `r` (stiffness picks, `M` of them) and `s` (damping picks, `R`
/// of them) with `2M + R = rho`, the products
/// `k_{r_1}...k_{r_M} c_{s_1}...c_{s_R} / (m_{t_1}...m_{t_{M+R}})`,
/// where the mass subsets `t` range over the transversals of the chosen
/// springs: each maximal run of consecutive chosen springs touches one
/// more mass than it has springs, and the run contributes every way of
/// dropping a single mass from that range.
pub fn coefficient_expansion_check(spec: &ChainSpec) -> Result<RationalPoly, OracleError> {
    let n = spec.n_masses();
    if n > 4 {
        return Err(OracleError::DimensionExceeded {
            dim: 2 * n,
            cap: 8,
        });
    }
    let springs = n - 1;
    let mut coeffs = vec![BigRational::zero(); 2 * n + 1];
    for r_mask in 0u32..1 << springs {
        for s_mask in 0u32..1 << springs {
            if r_mask & s_mask != 0 {
                continue;
            }
            let rho = (2 * r_mask.count_ones() + s_mask.count_ones()) as usize;
            let mut product = BigRational::one();
            for i in 0..springs {
                if r_mask >> i & 1 == 1 {
                    product *= &spec.stiffness()[i];
                }
                if s_mask >> i & 1 == 1 {
                    product *= &spec.damping()[i];
                }
            }
            if product.is_zero() {
                continue;
            }
            coeffs[2 * n - rho] += product * transversal_mass_sum(r_mask | s_mask, spec.masses());
        }
    }
    Ok(RationalPoly::from_coeffs(coeffs))
}

/// For a set of chosen springs, the sum over admissible mass subsets of
/// the reciprocal mass products. Independent runs multiply.
fn transversal_mass_sum(mut mask: u32, masses: &[BigRational]) -> BigRational {
    let mut total = BigRational::one();
    let mut start = 0usize;
    while mask != 0 {
        let offset = mask.trailing_zeros() as usize;
        let run_start = start + offset;
        mask >>= offset;
        let mut run_len = 0usize;
        while mask & 1 == 1 {
            run_len += 1;
            mask >>= 1;
        }
        start = run_start + run_len;

        // run of springs run_start..run_start+run_len touches masses
        // run_start..=run_start+run_len; drop exactly one of them
        let touched = &masses[run_start..=run_start + run_len];
        let full_product: BigRational = touched.iter().product();
        let run_sum: BigRational = touched.iter().map(|m| m / &full_product).sum();
        total *= run_sum;
    }
    total
}
