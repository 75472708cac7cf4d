//! Chain parameters and their exact state-space realization.
//!
//! A chain of `N >= 2` point masses is linked by `N - 1` springs and
//! `N - 1` dashpots, with no attachment to a wall at either end. The
//! control force acts on the first mass and the observed output is the
//! position of the last mass. Everything here is exact rational
//! arithmetic; floats only appear at the simulation boundary in
//! [`crate::dynamics`].

use crate::rational::{format_rational, parse_rational, rational_from_f64};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use std::path::Path;
use thiserror::Error;

/// Validation errors for chain parameters.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("a chain needs at least 2 masses, got {0}")]
    TooFewMasses(usize),
    #[error("expected {expected} {what}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("mass {index} is not positive")]
    NonPositiveMass { index: usize },
    #[error("stiffness {index} is not positive")]
    NonPositiveStiffness { index: usize },
    #[error("damping {index} is negative")]
    NegativeDamping { index: usize },
}

/// Errors while reading a chain spec file.
#[derive(Debug, Error)]
pub enum SpecFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse spec file: {0}")]
    Format(String),
    #[error(transparent)]
    Invalid(#[from] ChainError),
}

/// Physical parameters of a dashpot-spring-mass chain: `N` masses,
/// `N - 1` spring constants `k_i > 0` and `N - 1` dashpot constants
/// `c_i >= 0`, all exact rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainSpec {
    masses: Vec<BigRational>,
    stiffness: Vec<BigRational>,
    damping: Vec<BigRational>,
}

impl ChainSpec {
    /// Validates and builds a chain spec.
    pub fn new(
        masses: Vec<BigRational>,
        stiffness: Vec<BigRational>,
        damping: Vec<BigRational>,
    ) -> Result<Self, ChainError> {
        let n = masses.len();
        if n < 2 {
            return Err(ChainError::TooFewMasses(n));
        }
        if stiffness.len() != n - 1 {
            return Err(ChainError::LengthMismatch {
                what: "stiffness values",
                expected: n - 1,
                got: stiffness.len(),
            });
        }
        if damping.len() != n - 1 {
            return Err(ChainError::LengthMismatch {
                what: "damping values",
                expected: n - 1,
                got: damping.len(),
            });
        }
        for (i, m) in masses.iter().enumerate() {
            if !m.is_positive() {
                return Err(ChainError::NonPositiveMass { index: i });
            }
        }
        for (i, k) in stiffness.iter().enumerate() {
            if !k.is_positive() {
                return Err(ChainError::NonPositiveStiffness { index: i });
            }
        }
        for (i, c) in damping.iter().enumerate() {
            if c.is_negative() {
                return Err(ChainError::NegativeDamping { index: i });
            }
        }
        Ok(Self {
            masses,
            stiffness,
            damping,
        })
    }

    /// Convenience constructor from small integers.
    pub fn from_ints(masses: &[i64], stiffness: &[i64], damping: &[i64]) -> Result<Self, ChainError> {
        let conv = |xs: &[i64]| xs.iter().map(|&x| BigRational::from_integer(x.into())).collect();
        Self::new(conv(masses), conv(stiffness), conv(damping))
    }

    pub fn n_masses(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[BigRational] {
        &self.masses
    }

    pub fn stiffness(&self) -> &[BigRational] {
        &self.stiffness
    }

    pub fn damping(&self) -> &[BigRational] {
        &self.damping
    }

    /// The chain traversed from the other end: masses and couplings
    /// reversed. Swaps the roles of the input (first mass) and output
    /// (last mass) ends.
    pub fn reversed(&self) -> ChainSpec {
        let rev = |xs: &[BigRational]| xs.iter().rev().cloned().collect();
        ChainSpec {
            masses: rev(&self.masses),
            stiffness: rev(&self.stiffness),
            damping: rev(&self.damping),
        }
    }

    /// A random spec with numerators and denominators drawn uniformly
    /// from 1..=12, for property sweeps. Damping is allowed to be zero.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n_masses: usize) -> ChainSpec {
        let mut draw = |allow_zero: bool| {
            let lo = if allow_zero { 0 } else { 1 };
            BigRational::new(
                BigInt::from(rng.gen_range(lo..=12i64)),
                BigInt::from(rng.gen_range(1..=12i64)),
            )
        };
        let masses = (0..n_masses).map(|_| draw(false)).collect();
        let stiffness: Vec<_> = (0..n_masses - 1).map(|_| draw(false)).collect();
        let damping = (0..n_masses - 1).map(|_| draw(true)).collect();
        ChainSpec {
            masses,
            stiffness,
            damping,
        }
    }

    /// A random spec whose damping is exactly `lambda` times its
    /// stiffness, i.e. a proportional chain.
    pub fn random_proportional<R: Rng + ?Sized>(
        rng: &mut R,
        n_masses: usize,
        lambda: &BigRational,
    ) -> ChainSpec {
        let base = Self::random(rng, n_masses);
        let damping = base.stiffness.iter().map(|k| k * lambda).collect();
        ChainSpec { damping, ..base }
    }

    /// Assembles the exact 2N-dimensional state-space realization.
    pub fn to_state_space(&self) -> StateSpaceModel {
        StateSpaceModel::assemble(self)
    }

    /// Serializes to the JSON spec-file format understood by [`ChainSpec::load`].
    pub fn to_spec_json(&self) -> String {
        let arr = |xs: &[BigRational]| {
            serde_json::Value::Array(
                xs.iter()
                    .map(|x| serde_json::Value::String(format_rational(x)))
                    .collect(),
            )
        };
        let mut map = serde_json::Map::new();
        map.insert("masses".into(), arr(&self.masses));
        map.insert("stiffness".into(), arr(&self.stiffness));
        map.insert("damping".into(), arr(&self.damping));
        serde_json::to_string_pretty(&serde_json::Value::Object(map)).expect("static structure")
    }

    /// Reads a chain spec from a JSON or TOML file (dispatch on the
    /// extension, falling back to trying both). Returns the spec together
    /// with any warnings, e.g. for an ignored `natural_lengths` key.
    pub fn load(path: &Path) -> Result<(ChainSpec, Vec<String>), SpecFileError> {
        let text = std::fs::read_to_string(path).map_err(|source| SpecFileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(&text),
            Some("toml") => Self::from_toml_str(&text),
            _ => Self::from_json_str(&text).or_else(|_| Self::from_toml_str(&text)),
        }
    }

    /// Parses the JSON spec-file format. Numeric literals are read as
    /// exact decimal fractions, strings as `p/q` or decimals.
    pub fn from_json_str(text: &str) -> Result<(ChainSpec, Vec<String>), SpecFileError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| SpecFileError::Format(e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| SpecFileError::Format("top level must be an object".into()))?;

        let field = |key: &str| -> Result<Vec<BigRational>, SpecFileError> {
            let arr = obj
                .get(key)
                .ok_or_else(|| SpecFileError::Format(format!("missing key {key:?}")))?
                .as_array()
                .ok_or_else(|| SpecFileError::Format(format!("{key:?} must be an array")))?;
            arr.iter().map(json_rational).collect()
        };

        let spec = ChainSpec::new(field("masses")?, field("stiffness")?, field("damping")?)?;
        let mut warnings = Vec::new();
        if obj.contains_key("natural_lengths") {
            warnings.push(NATURAL_LENGTHS_WARNING.to_string());
        }
        Ok((spec, warnings))
    }

    /// Parses the TOML spec-file format. Integer literals are exact;
    /// float literals are read as the exact decimal fraction of their
    /// shortest round-trip form; strings as `p/q` or decimals.
    pub fn from_toml_str(text: &str) -> Result<(ChainSpec, Vec<String>), SpecFileError> {
        let value: toml::Value =
            toml::from_str(text).map_err(|e| SpecFileError::Format(e.to_string()))?;
        let table = value
            .as_table()
            .ok_or_else(|| SpecFileError::Format("top level must be a table".into()))?;

        let field = |key: &str| -> Result<Vec<BigRational>, SpecFileError> {
            let arr = table
                .get(key)
                .ok_or_else(|| SpecFileError::Format(format!("missing key {key:?}")))?
                .as_array()
                .ok_or_else(|| SpecFileError::Format(format!("{key:?} must be an array")))?;
            arr.iter().map(toml_rational).collect()
        };

        let spec = ChainSpec::new(field("masses")?, field("stiffness")?, field("damping")?)?;
        let mut warnings = Vec::new();
        if table.contains_key("natural_lengths") {
            warnings.push(NATURAL_LENGTHS_WARNING.to_string());
        }
        Ok((spec, warnings))
    }
}

const NATURAL_LENGTHS_WARNING: &str =
    "natural_lengths is ignored: coordinates are displacements from equilibrium";

fn json_rational(v: &serde_json::Value) -> Result<BigRational, SpecFileError> {
    match v {
        // With arbitrary_precision the literal digits survive, so 0.1
        // really is 1/10 here.
        serde_json::Value::Number(n) => {
            parse_rational(&n.to_string()).map_err(|e| SpecFileError::Format(e.to_string()))
        }
        serde_json::Value::String(s) => {
            parse_rational(s).map_err(|e| SpecFileError::Format(e.to_string()))
        }
        other => Err(SpecFileError::Format(format!(
            "expected number or string, got {other}"
        ))),
    }
}

fn toml_rational(v: &toml::Value) -> Result<BigRational, SpecFileError> {
    match v {
        toml::Value::Integer(i) => Ok(BigRational::from_integer((*i).into())),
        toml::Value::Float(f) => {
            rational_from_f64(*f).map_err(|e| SpecFileError::Format(e.to_string()))
        }
        toml::Value::String(s) => {
            parse_rational(s).map_err(|e| SpecFileError::Format(e.to_string()))
        }
        other => Err(SpecFileError::Format(format!(
            "expected number or string, got {other}"
        ))),
    }
}

/// A dense matrix of exact rationals, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalMatrix {
    rows: Vec<Vec<BigRational>>,
    ncols: usize,
}

impl RationalMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            rows: vec![vec![BigRational::zero(); ncols]; nrows],
            ncols,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.rows[i][i] = BigRational::one();
        }
        m
    }

    /// Builds from rows, which must all have equal length.
    pub fn from_rows(rows: Vec<Vec<BigRational>>) -> Self {
        let ncols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged rows");
        Self { rows, ncols }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn at(&self, row: usize, col: usize) -> &BigRational {
        &self.rows[row][col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: BigRational) {
        self.rows[row][col] = value;
    }

    pub fn row(&self, row: usize) -> &[BigRational] {
        &self.rows[row]
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[BigRational]) -> Vec<BigRational> {
        assert_eq!(v.len(), self.ncols);
        self.rows
            .iter()
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// The tridiagonal mass-scaled coupling template. Row `i` carries the
/// couplings of mass `i` to its neighbours, divided by `m_i`; evaluated
/// at the spring constants it yields `K_N`, at the dashpot constants
/// `C_N`. Every row sums to zero because the chain has no wall springs.
pub fn build_coupling_matrix(
    values: &[BigRational],
    masses: &[BigRational],
) -> Result<RationalMatrix, ChainError> {
    let n = masses.len();
    if n < 2 {
        return Err(ChainError::TooFewMasses(n));
    }
    if values.len() != n - 1 {
        return Err(ChainError::LengthMismatch {
            what: "coupling values",
            expected: n - 1,
            got: values.len(),
        });
    }
    let mut x = RationalMatrix::zeros(n, n);
    x.set(0, 0, &values[0] / &masses[0]);
    x.set(0, 1, -(&values[0] / &masses[0]));
    for i in 1..n - 1 {
        x.set(i, i - 1, -(&values[i - 1] / &masses[i]));
        x.set(i, i, (&values[i - 1] + &values[i]) / &masses[i]);
        x.set(i, i + 1, -(&values[i] / &masses[i]));
    }
    x.set(n - 1, n - 2, -(&values[n - 2] / &masses[n - 1]));
    x.set(n - 1, n - 1, &values[n - 2] / &masses[n - 1]);
    Ok(x)
}

/// The exact state-space realization of a chain: state vector
/// `(z_1..z_N, v_1..v_N)` of dimension `2N`, with
///
/// ```text
/// F = | 0   I |      g = e_{N+1} / m_1      h = e_N^T
///     | -K  -C|
/// ```
///
/// so the input force acts on the first mass and the output is the
/// position of the last mass. The direct-transmission term is zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpaceModel {
    spec: ChainSpec,
    f: RationalMatrix,
    g: Vec<BigRational>,
    h: Vec<BigRational>,
}

impl StateSpaceModel {
    fn assemble(spec: &ChainSpec) -> Self {
        let n = spec.n_masses();
        let k = build_coupling_matrix(spec.stiffness(), spec.masses()).expect("validated spec");
        let c = build_coupling_matrix(spec.damping(), spec.masses()).expect("validated spec");

        let mut f = RationalMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            f.set(i, n + i, BigRational::one());
            for j in 0..n {
                f.set(n + i, j, -k.at(i, j).clone());
                f.set(n + i, n + j, -c.at(i, j).clone());
            }
        }

        let mut g = vec![BigRational::zero(); 2 * n];
        g[n] = spec.masses()[0].recip();
        let mut h = vec![BigRational::zero(); 2 * n];
        h[n - 1] = BigRational::one();

        Self {
            spec: spec.clone(),
            f,
            g,
            h,
        }
    }

    /// State dimension `2N`.
    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn n_masses(&self) -> usize {
        self.spec.n_masses()
    }

    pub fn f_matrix(&self) -> &RationalMatrix {
        &self.f
    }

    pub fn g_vector(&self) -> &[BigRational] {
        &self.g
    }

    pub fn h_vector(&self) -> &[BigRational] {
        &self.h
    }

    /// The chain this model was assembled from.
    pub fn spec(&self) -> &ChainSpec {
        &self.spec
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn minimal_legal_spec() {
        assert!(ChainSpec::from_ints(&[1, 1], &[1], &[1]).is_ok());
    }

    #[test]
    fn sign_violations_are_rejected() {
        assert_eq!(
            ChainSpec::from_ints(&[1, -1], &[1], &[0]).unwrap_err(),
            ChainError::NonPositiveMass { index: 1 }
        );
        assert_eq!(
            ChainSpec::from_ints(&[1, 1], &[0], &[0]).unwrap_err(),
            ChainError::NonPositiveStiffness { index: 0 }
        );
        assert_eq!(
            ChainSpec::from_ints(&[1, 1], &[1], &[-1]).unwrap_err(),
            ChainError::NegativeDamping { index: 0 }
        );
    }

    #[test]
    fn length_mismatch_and_too_few() {
        assert_eq!(
            ChainSpec::from_ints(&[1, 1, 1], &[1], &[1, 1]).unwrap_err(),
            ChainError::LengthMismatch {
                what: "stiffness values",
                expected: 2,
                got: 1
            }
        );
        assert_eq!(
            ChainSpec::from_ints(&[1], &[], &[]).unwrap_err(),
            ChainError::TooFewMasses(1)
        );
    }

    #[test]
    fn coupling_matrix_n2_template() {
        // values=[k1], masses=[m1,m2] -> [[k1/m1, -k1/m1], [-k1/m2, k1/m2]]
        let x = build_coupling_matrix(&[rat(1, 1)], &[rat(1, 1), rat(1, 1)]).unwrap();
        assert_eq!(x.at(0, 0), &rat(1, 1));
        assert_eq!(x.at(0, 1), &rat(-1, 1));
        assert_eq!(x.at(1, 0), &rat(-1, 1));
        assert_eq!(x.at(1, 1), &rat(1, 1));
    }

    #[test]
    fn coupling_matrix_n3_golden() {
        // values=[1,1], masses=[1,2,4] -> [[1,-1,0],[-1/2,1,-1/2],[0,-1/4,1/4]]
        let x = build_coupling_matrix(
            &[rat(1, 1), rat(1, 1)],
            &[rat(1, 1), rat(2, 1), rat(4, 1)],
        )
        .unwrap();
        let expected = [
            [rat(1, 1), rat(-1, 1), rat(0, 1)],
            [rat(-1, 2), rat(1, 1), rat(-1, 2)],
            [rat(0, 1), rat(-1, 4), rat(1, 4)],
        ];
        for (i, row) in expected.iter().enumerate() {
            for (j, want) in row.iter().enumerate() {
                assert_eq!(x.at(i, j), want, "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn zero_couplings_give_zero_matrix() {
        let x = build_coupling_matrix(
            &[rat(0, 1), rat(0, 1)],
            &[rat(1, 1), rat(2, 1), rat(3, 1)],
        )
        .unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!(x.at(i, j).is_zero());
            }
        }
    }

    #[test]
    fn state_space_n2_golden() {
        // N=2, m=[1,1], k=[1], c=[1]:
        // F = [[0,0,1,0],[0,0,0,1],[-1,1,-1,1],[1,-1,1,-1]], g=(0,0,1,0), h=(0,1,0,0)
        let spec = ChainSpec::from_ints(&[1, 1], &[1], &[1]).unwrap();
        let model = spec.to_state_space();
        let expected: [[i64; 4]; 4] = [
            [0, 0, 1, 0],
            [0, 0, 0, 1],
            [-1, 1, -1, 1],
            [1, -1, 1, -1],
        ];
        for (i, row) in expected.iter().enumerate() {
            for (j, want) in row.iter().enumerate() {
                assert_eq!(model.f_matrix().at(i, j), &rat(*want, 1));
            }
        }
        let g: Vec<_> = (0..4).map(|i| rat(i64::from(i == 2), 1)).collect();
        let h: Vec<_> = (0..4).map(|i| rat(i64::from(i == 1), 1)).collect();
        assert_eq!(model.g_vector(), &g[..]);
        assert_eq!(model.h_vector(), &h[..]);

        // uniform displacement at rest is an equilibrium
        let eq = vec![rat(1, 1), rat(1, 1), rat(0, 1), rat(0, 1)];
        assert!(model.f_matrix().mul_vec(&eq).iter().all(Zero::is_zero));
    }

    #[test]
    fn spec_file_json() {
        let (spec, warnings) = ChainSpec::from_json_str(
            r#"{"masses": ["3/2", 1, 0.5], "stiffness": [1, "1/3"], "damping": [0, 0.1],
                "natural_lengths": [1, 1]}"#,
        )
        .unwrap();
        assert_eq!(spec.masses(), &[rat(3, 2), rat(1, 1), rat(1, 2)]);
        assert_eq!(spec.stiffness(), &[rat(1, 1), rat(1, 3)]);
        assert_eq!(spec.damping(), &[rat(0, 1), rat(1, 10)]);
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn spec_file_toml() {
        let (spec, warnings) = ChainSpec::from_toml_str(
            "masses = [\"3/2\", 1, 0.5]\nstiffness = [1, \"1/3\"]\ndamping = [0, 0.1]\n",
        )
        .unwrap();
        assert_eq!(spec.masses(), &[rat(3, 2), rat(1, 1), rat(1, 2)]);
        assert_eq!(spec.damping(), &[rat(0, 1), rat(1, 10)]);
        assert!(warnings.is_empty());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = ChainSpec::new(
            vec![rat(1, 1), rat(2, 3), rat(5, 1)],
            vec![rat(7, 2), rat(1, 1)],
            vec![rat(0, 1), rat(3, 4)],
        )
        .unwrap();
        let (back, _) = ChainSpec::from_json_str(&spec.to_spec_json()).unwrap();
        assert_eq!(back, spec);
    }

    proptest! {
        // h and g have disjoint supports, so h . g = 0; uniform
        // displacement is an equilibrium; the momentum identity holds.
        #[test]
        fn structural_invariants(seed in 0u64..500, n in 2usize..7) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = ChainSpec::random(&mut rng, n);
            let model = spec.to_state_space();

            let hg: BigRational = model
                .h_vector()
                .iter()
                .zip(model.g_vector())
                .map(|(a, b)| a * b)
                .sum();
            prop_assert!(hg.is_zero());

            let mut uniform = vec![BigRational::one(); n];
            uniform.extend(vec![BigRational::zero(); n]);
            prop_assert!(model.f_matrix().mul_vec(&uniform).iter().all(Zero::is_zero));

            // sum_i m_i (F z)_{N+i} = 0 for any state: internal forces cancel
            let mut state = Vec::new();
            for i in 0..2 * n {
                state.push(rat((seed as i64 % 7) + i as i64 - 3, 1 + i as i64));
            }
            let fz = model.f_matrix().mul_vec(&state);
            let momentum_rate: BigRational = spec
                .masses()
                .iter()
                .zip(&fz[n..])
                .map(|(m, a)| m * a)
                .sum();
            prop_assert!(momentum_rate.is_zero());

            // rows of the K and C blocks sum to zero
            for i in n..2 * n {
                let row = model.f_matrix().row(i);
                let pos_sum: BigRational = row[..n].iter().sum();
                let vel_sum: BigRational = row[n..].iter().sum();
                prop_assert!(pos_sum.is_zero());
                prop_assert!(vel_sum.is_zero());
            }
        }

        #[test]
        fn assembly_is_deterministic(seed in 0u64..100) {
            let mut rng_a = ChaCha8Rng::seed_from_u64(seed);
            let mut rng_b = ChaCha8Rng::seed_from_u64(seed);
            let a = ChainSpec::random(&mut rng_a, 4);
            let b = ChainSpec::random(&mut rng_b, 4);
            prop_assert_eq!(a.to_state_space(), b.to_state_space());
        }
    }
}
