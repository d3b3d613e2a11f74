//! Deterministic Sobol low-discrepancy sequences.
//!
//! Points are generated with 32-bit Gray-code updates (Antonov–Saleev), so
//! producing point `i+1` from point `i` costs one XOR per dimension and the
//! stream is bit-exact across runs and platforms. Direction numbers come
//! from a table in the standard whitespace-delimited text format
//! (`d s a m_1 ... m_s` per line, one header line); a copy of the published
//! Joe–Kuo `new-joe-kuo-6` table covering dimensions 2..=64 is compiled in.
//! Dimension 1 is the van der Corput sequence and needs no table entry.

use std::sync::OnceLock;

use crate::error::{Error, Result};

const BITS: usize = 32;
const SCALE: f64 = 4294967296.0; // 2^32

/// Number of leading points dropped by default when drawing a candidate set.
/// Point #0 is the all-zeros corner, which is never a useful candidate.
pub const DEFAULT_SKIP: usize = 1;

const DEFAULT_TABLE_TEXT: &str = include_str!("../data/new-joe-kuo-6.64.txt");

/// One `d s a m_1 ... m_s` record: primitive-polynomial degree `s`,
/// middle coefficients packed in `a`, and the first `s` direction seeds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectionRecord {
    pub dim_index: usize,
    pub degree: usize,
    pub poly_coeff: u32,
    pub initial: Vec<u32>,
}

/// Parsed direction-number table. Records are contiguous from dimension 2;
/// dimension 1 is implicit (van der Corput, all m_i = 1).
#[derive(Debug, Clone, Default)]
pub struct DirectionTable {
    records: Vec<DirectionRecord>,
}

impl DirectionTable {
    /// Highest dimension an engine built from this table can have.
    pub fn max_dim(&self) -> usize {
        self.records.last().map_or(1, |r| r.dim_index)
    }

    pub fn records(&self) -> &[DirectionRecord] {
        &self.records
    }
}

/// The compiled-in Joe–Kuo table (dimensions 2..=64), parsed once.
pub fn default_table() -> &'static DirectionTable {
    static TABLE: OnceLock<DirectionTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        parse_direction_file(DEFAULT_TABLE_TEXT).expect("bundled direction table is valid")
    })
}

/// Parse a direction-number file: one header line (ignored) followed by
/// `d s a m_1 ... m_s` lines separated by arbitrary whitespace. Blank lines
/// are skipped. Records must be sorted and contiguous from dimension 2.
pub fn parse_direction_file(text: &str) -> Result<DirectionTable> {
    let parse_err = |line: usize, msg: String| Error::DirectionParse { line, msg };
    let valid_err = |line: usize, msg: String| Error::DirectionValidation { line, msg };

    let mut records: Vec<DirectionRecord> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if idx == 0 || raw.trim().is_empty() {
            continue; // header or blank
        }
        let mut tokens = raw.split_whitespace();
        let mut next_int = |name: &str| -> Result<u64> {
            let tok = tokens
                .next()
                .ok_or_else(|| parse_err(line_no, format!("missing field `{name}`")))?;
            tok.parse::<u64>()
                .map_err(|_| parse_err(line_no, format!("field `{name}` is not an integer: `{tok}`")))
        };

        let dim_index = next_int("d")? as usize;
        let degree = next_int("s")? as usize;
        let poly_coeff = next_int("a")?;
        let mut initial = Vec::with_capacity(degree);
        for i in 1..=degree {
            initial.push(next_int(&format!("m_{i}"))?);
        }
        if let Some(extra) = tokens.next() {
            return Err(parse_err(line_no, format!("unexpected trailing token `{extra}`")));
        }

        if dim_index < 2 {
            return Err(valid_err(line_no, format!("dimension index {dim_index} must be >= 2")));
        }
        let expected = records.last().map_or(2, |r| r.dim_index + 1);
        if dim_index != expected {
            return Err(valid_err(
                line_no,
                format!("dimension index {dim_index} out of order: expected {expected}"),
            ));
        }
        if degree == 0 || degree > BITS {
            return Err(valid_err(line_no, format!("polynomial degree {degree} out of range")));
        }
        // a packs the s-1 middle coefficients of the primitive polynomial
        let max_coeff = 1u64 << (degree - 1);
        if poly_coeff >= max_coeff {
            return Err(valid_err(
                line_no,
                format!("polynomial coefficient {poly_coeff} too large for degree {degree}"),
            ));
        }
        for (i, &m) in initial.iter().enumerate() {
            if m % 2 == 0 {
                return Err(valid_err(line_no, format!("m_{} = {m} is even", i + 1)));
            }
            if m >= 1 << (i + 1) {
                return Err(valid_err(line_no, format!("m_{} = {m} must be < 2^{}", i + 1, i + 1)));
            }
        }

        records.push(DirectionRecord {
            dim_index,
            degree,
            poly_coeff: poly_coeff as u32,
            initial: initial.into_iter().map(|m| m as u32).collect(),
        });
    }
    Ok(DirectionTable { records })
}

/// Expand a record's `m` seeds into all 32 direction numbers via the
/// primitive-polynomial recurrence (Joe & Kuo's construction).
fn expand_directions(rec: &DirectionRecord) -> [u32; BITS] {
    let s = rec.degree;
    let mut v = [0u32; BITS];
    for (i, (vi, &m)) in v.iter_mut().zip(&rec.initial).enumerate() {
        // m_i < 2^i guarantees the shift does not overflow
        *vi = m << (BITS - 1 - i);
    }
    for i in s..BITS {
        v[i] = v[i - s] ^ (v[i - s] >> s);
        for k in 1..s {
            if (rec.poly_coeff >> (s - 1 - k)) & 1 == 1 {
                v[i] ^= v[i - k];
            }
        }
    }
    v
}

fn van_der_corput_directions() -> [u32; BITS] {
    let mut v = [0u32; BITS];
    for (i, vi) in v.iter_mut().enumerate() {
        *vi = 1 << (BITS - 1 - i);
    }
    v
}

/// Stateful Sobol generator for a fixed dimension.
///
/// `next_point` emits point #`index` (point #0 is the origin) and advances.
/// Two engines of equal dimension emit identical streams.
pub struct SobolEngine {
    dim: usize,
    directions: Vec<[u32; BITS]>,
    state: Vec<u32>,
    index: u64,
}

impl SobolEngine {
    pub fn new(dim: usize) -> Result<Self> {
        Self::with_table(dim, default_table())
    }

    pub fn with_table(dim: usize, table: &DirectionTable) -> Result<Self> {
        if dim == 0 || dim > table.max_dim() {
            return Err(Error::SobolDimension { requested: dim, max: table.max_dim() });
        }
        let mut directions = Vec::with_capacity(dim);
        directions.push(van_der_corput_directions());
        for d in 2..=dim {
            directions.push(expand_directions(&table.records()[d - 2]));
        }
        Ok(Self { dim, directions, state: vec![0; dim], index: 0 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Index of the point the next `next_point` call will emit.
    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn next_point(&mut self) -> Result<Vec<f64>> {
        if self.index > u32::MAX as u64 {
            return Err(Error::SobolIndexOverflow);
        }
        let point = self.state.iter().map(|&x| x as f64 / SCALE).collect();
        // Gray-code increment: flip the direction number of the lowest zero
        // bit of the current index. At index 2^32-1 there is no next point.
        let c = (self.index as u32).trailing_ones() as usize;
        if c < BITS {
            for (x, v) in self.state.iter_mut().zip(&self.directions) {
                *x ^= v[c];
            }
        }
        self.index += 1;
        Ok(point)
    }
}

/// Points `skip .. skip+count-1` of the sequence, from the compiled-in table.
pub fn generate(dim: usize, count: usize, skip: usize) -> Result<Vec<Vec<f64>>> {
    generate_with_table(dim, count, skip, default_table())
}

pub fn generate_with_table(
    dim: usize,
    count: usize,
    skip: usize,
    table: &DirectionTable,
) -> Result<Vec<Vec<f64>>> {
    let mut engine = SobolEngine::with_table(dim, table)?;
    for _ in 0..skip {
        engine.next_point()?;
    }
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        points.push(engine.next_point()?);
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_single_record() {
        let table = parse_direction_file("d s a m_i\n2 1 0 1\n").unwrap();
        assert_eq!(
            table.records(),
            &[DirectionRecord { dim_index: 2, degree: 1, poly_coeff: 0, initial: vec![1] }]
        );
        assert_eq!(table.max_dim(), 2);
    }

    #[test]
    fn parse_header_only_supports_dim_one() {
        let table = parse_direction_file("d s a m_i\n").unwrap();
        assert_eq!(table.max_dim(), 1);
        assert!(SobolEngine::with_table(1, &table).is_ok());
        assert!(matches!(
            SobolEngine::with_table(2, &table),
            Err(Error::SobolDimension { requested: 2, max: 1 })
        ));
    }

    #[test]
    fn parse_rejects_even_m() {
        let err = parse_direction_file("header\n2 1 0 1\n3 2 1 1 2\n").unwrap_err();
        match err {
            Error::DirectionValidation { line, msg } => {
                assert_eq!(line, 3);
                assert!(msg.contains("even"), "{msg}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_dimension_gap() {
        let err = parse_direction_file("header\n2 1 0 1\n4 3 1 1 3 1\n").unwrap_err();
        assert!(matches!(err, Error::DirectionValidation { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn parse_reports_malformed_line_number() {
        let err = parse_direction_file("header\n2 1 0 1\n3 2 1 1\n").unwrap_err();
        assert!(matches!(err, Error::DirectionParse { line: 3, .. }), "{err:?}");
        let err = parse_direction_file("header\n2 1 zero 1\n").unwrap_err();
        assert!(matches!(err, Error::DirectionParse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn dim_one_is_gray_code_van_der_corput() {
        let mut e = SobolEngine::new(1).unwrap();
        let got: Vec<f64> = (0..8).map(|_| e.next_point().unwrap()[0]).collect();
        assert_eq!(got, vec![0.0, 0.5, 0.75, 0.25, 0.375, 0.875, 0.625, 0.125]);
    }

    // First eight points of the unscrambled Joe-Kuo sequence, cross-checked
    // against an independent implementation.
    #[test]
    fn reference_points_dims_two_and_three() {
        let two = generate(2, 8, 0).unwrap();
        let expect2 = [
            [0.0, 0.0],
            [0.5, 0.5],
            [0.75, 0.25],
            [0.25, 0.75],
            [0.375, 0.375],
            [0.875, 0.875],
            [0.625, 0.125],
            [0.125, 0.625],
        ];
        for (p, e) in two.iter().zip(expect2.iter()) {
            assert_eq!(p.as_slice(), e.as_slice());
        }
        let three = generate(3, 8, 0).unwrap();
        let expect3 = [
            [0.0, 0.0, 0.0],
            [0.5, 0.5, 0.5],
            [0.75, 0.25, 0.25],
            [0.25, 0.75, 0.75],
            [0.375, 0.375, 0.625],
            [0.875, 0.875, 0.125],
            [0.625, 0.125, 0.875],
            [0.125, 0.625, 0.375],
        ];
        for (p, e) in three.iter().zip(expect3.iter()) {
            assert_eq!(p.as_slice(), e.as_slice());
        }
    }

    #[test]
    fn point_zero_is_origin_in_any_dim() {
        for dim in [1, 2, 5, 13, 64] {
            let mut e = SobolEngine::new(dim).unwrap();
            assert_eq!(e.next_point().unwrap(), vec![0.0; dim]);
        }
    }

    #[test]
    fn generate_count_zero_is_empty() {
        assert!(generate(2, 0, 0).unwrap().is_empty());
    }

    #[test]
    fn generate_is_deterministic_and_in_unit_cube() {
        // M = 10 * T * B with T = 60, B = 10
        let a = generate(6, 6000, DEFAULT_SKIP).unwrap();
        let b = generate(6, 6000, DEFAULT_SKIP).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 6000);
        for p in &a {
            assert!(p.iter().all(|&x| (0.0..1.0).contains(&x)));
        }
    }

    #[test]
    fn index_overflow_errors() {
        let mut e = SobolEngine::new(1).unwrap();
        e.index = u32::MAX as u64; // jump to the last valid point
        e.next_point().unwrap();
        assert!(matches!(e.next_point(), Err(Error::SobolIndexOverflow)));
    }

    /// Balance: the first 2^k points of dimension 1 put exactly one point in
    /// each dyadic interval [j/2^k, (j+1)/2^k).
    #[test]
    fn dyadic_balance_dim_one() {
        for k in 0..=10u32 {
            let n = 1usize << k;
            let pts = generate(1, n, 0).unwrap();
            let mut hits = vec![0usize; n];
            for p in &pts {
                hits[(p[0] * n as f64) as usize] += 1;
            }
            assert!(hits.iter().all(|&h| h == 1), "k={k}");
        }
    }

    /// The first 64 Sobol points in d=2 are better spread (larger minimum
    /// pairwise distance) than the median of 20 seeded uniform-random sets.
    #[test]
    fn min_pairwise_distance_beats_random_median() {
        use rand::{Rng, SeedableRng};

        fn min_pairwise_sq(points: &[Vec<f64>]) -> f64 {
            let mut best = f64::INFINITY;
            for i in 0..points.len() {
                for j in (i + 1)..points.len() {
                    let d: f64 = points[i]
                        .iter()
                        .zip(&points[j])
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    best = best.min(d);
                }
            }
            best
        }

        let sobol = generate(2, 64, DEFAULT_SKIP).unwrap();
        let sobol_min = min_pairwise_sq(&sobol);

        let mut mins: Vec<f64> = (0..20u64)
            .map(|seed| {
                let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
                let pts: Vec<Vec<f64>> =
                    (0..64).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect();
                min_pairwise_sq(&pts)
            })
            .collect();
        mins.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = 0.5 * (mins[9] + mins[10]);
        assert!(sobol_min > median, "sobol {sobol_min} vs random median {median}");
    }
}
