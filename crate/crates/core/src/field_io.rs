//! Column-oriented text format for sampled fields.
//!
//! ```text
//! matweight-field matrix
//! n 1
//! L 4e0
//! N 256
//! d 2
//! <one row per grid point, in flat index order>
//! ```
//!
//! The first line names the kind: `matrix` rows hold the `d²` entries of
//! `W(x)` in row-major order, `vector` rows the `d` components of `f(x)`,
//! both as real and imaginary parts interleaved; `scalar`, `density` and
//! `exponent` rows hold one real number and have `d 1`. `L` is the
//! half-width of the box `[-L, L]^n`. Numbers are written with the shortest
//! exponent form that parses back to the same value, so a write/read cycle
//! is bit-exact. Blank lines and lines starting with `#` are skipped.
//!
//! Reading goes through the ordinary constructors, so a weight file with a
//! negative eigenvalue surfaces as [`Error::NotPsd`].

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::matrix::{CMatrix, HermitianMatrix};
use crate::scalar::{Scalar, C};
use crate::spaces::{ExponentField, SampledVectorField};
use crate::weights::{MatrixWeightField, MeasureDensity, ScalarWeightField};

const MAGIC: &str = "matweight-field";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Matrix,
    Vector,
    Scalar,
    Density,
    Exponent,
}

impl FieldKind {
    pub fn name(self) -> &'static str {
        match self {
            FieldKind::Matrix => "matrix",
            FieldKind::Vector => "vector",
            FieldKind::Scalar => "scalar",
            FieldKind::Density => "density",
            FieldKind::Exponent => "exponent",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [FieldKind::Matrix, FieldKind::Vector, FieldKind::Scalar, FieldKind::Density, FieldKind::Exponent].into_iter().find(|k| k.name() == s)
    }

    /// Real numbers per row for component dimension `d`.
    fn row_len(self, d: usize) -> usize {
        match self {
            FieldKind::Matrix => 2 * d * d,
            FieldKind::Vector => 2 * d,
            _ => 1,
        }
    }
}

/// Header of a field file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldHeader<T> {
    pub kind: FieldKind,
    pub grid: Grid<T>,
    pub d: usize,
}

/// A field that has a file representation.
pub trait FieldFile<T: Scalar>: Sized {
    const KIND: FieldKind;
    fn header(&self) -> FieldHeader<T>;
    /// Appends the numbers of row `i`.
    fn row(&self, i: usize, out: &mut Vec<T>);
    fn from_rows(header: &FieldHeader<T>, rows: Vec<T>) -> Result<Self>;
}

fn complex_rows<T: Scalar>(rows: &[T]) -> Vec<C<T>> {
    rows.chunks_exact(2).map(|c| C::new(c[0], c[1])).collect()
}

impl<T: Scalar> FieldFile<T> for MatrixWeightField<T> {
    const KIND: FieldKind = FieldKind::Matrix;

    fn header(&self) -> FieldHeader<T> {
        FieldHeader { kind: Self::KIND, grid: *self.grid(), d: self.dim() }
    }

    fn row(&self, i: usize, out: &mut Vec<T>) {
        out.extend(self.value(i).matrix().as_slice().iter().flat_map(|z| [z.re, z.im]));
    }

    fn from_rows(header: &FieldHeader<T>, rows: Vec<T>) -> Result<Self> {
        let d = header.d;
        let entries = complex_rows(&rows);
        let values = entries.chunks_exact(d * d).map(|m| HermitianMatrix::new(CMatrix::from_row_major(d, m.to_vec()))).collect::<Result<Vec<_>>>()?;
        MatrixWeightField::new(header.grid, values)
    }
}

impl<T: Scalar> FieldFile<T> for SampledVectorField<T> {
    const KIND: FieldKind = FieldKind::Vector;

    fn header(&self) -> FieldHeader<T> {
        FieldHeader { kind: Self::KIND, grid: *self.grid(), d: self.dim() }
    }

    fn row(&self, i: usize, out: &mut Vec<T>) {
        out.extend(self.point(i).iter().flat_map(|z| [z.re, z.im]));
    }

    fn from_rows(header: &FieldHeader<T>, rows: Vec<T>) -> Result<Self> {
        SampledVectorField::new(header.grid, header.d, complex_rows(&rows))
    }
}

macro_rules! real_field {
    ($ty:ident, $kind:expr) => {
        impl<T: Scalar> FieldFile<T> for $ty<T> {
            const KIND: FieldKind = $kind;

            fn header(&self) -> FieldHeader<T> {
                FieldHeader { kind: Self::KIND, grid: *self.grid(), d: 1 }
            }

            fn row(&self, i: usize, out: &mut Vec<T>) {
                out.push(self.values()[i]);
            }

            fn from_rows(header: &FieldHeader<T>, rows: Vec<T>) -> Result<Self> {
                $ty::new(header.grid, rows)
            }
        }
    };
}

real_field!(ScalarWeightField, FieldKind::Scalar);
real_field!(MeasureDensity, FieldKind::Density);
real_field!(ExponentField, FieldKind::Exponent);

pub fn write_field<T: Scalar, F: FieldFile<T>>(out: &mut impl Write, field: &F) -> Result<()> {
    let h = field.header();
    let mut text = format!("{MAGIC} {}\nn {}\nL {:e}\nN {}\nd {}\n", h.kind.name(), h.grid.n(), h.grid.half_width(), h.grid.points_per_axis(), h.d);
    let mut row = Vec::with_capacity(h.kind.row_len(h.d));
    for i in 0..h.grid.len() {
        row.clear();
        field.row(i, &mut row);
        for (k, x) in row.iter().enumerate() {
            let sep = if k == 0 { "" } else { " " };
            write!(text, "{sep}{x:e}").expect("writing to a String");
        }
        text.push('\n');
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn header_value<T: Scalar>(lines: &mut impl Iterator<Item = (usize, String)>, key: &str) -> Result<(usize, T)> {
    let (no, line) = lines.next().ok_or_else(|| parse_err(0, format!("missing header line `{key}`")))?;
    let mut parts = line.split_whitespace();
    match (parts.next(), parts.next(), parts.next()) {
        (Some(k), Some(v), None) if k == key => v.parse::<T>().map(|x| (no, x)).map_err(|_| parse_err(no, format!("bad value for `{key}`: {v}"))),
        _ => Err(parse_err(no, format!("expected `{key} <value>`"))),
    }
}

fn header_count(lines: &mut impl Iterator<Item = (usize, String)>, key: &str) -> Result<usize> {
    let (no, line) = lines.next().ok_or_else(|| parse_err(0, format!("missing header line `{key}`")))?;
    let mut parts = line.split_whitespace();
    match (parts.next(), parts.next(), parts.next()) {
        (Some(k), Some(v), None) if k == key => v.parse::<usize>().map_err(|_| parse_err(no, format!("bad value for `{key}`: {v}"))),
        _ => Err(parse_err(no, format!("expected `{key} <value>`"))),
    }
}

/// Parses a header and all rows without interpreting them.
pub fn read_raw<T: Scalar>(input: impl BufRead) -> Result<(FieldHeader<T>, Vec<T>)> {
    let mut lines = input
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i + 1, l)))
        .filter(|l| l.as_ref().map_or(true, |(_, s)| !s.trim().is_empty() && !s.trim_start().starts_with('#')));
    let mut next = || lines.next().transpose().map_err(Error::from);
    let mut buffered = Vec::new();
    // The header has five lines; collect them so the helpers can consume an iterator.
    for _ in 0..5 {
        match next()? {
            Some(l) => buffered.push(l),
            None => return Err(parse_err(0, "truncated header")),
        }
    }
    let (no, first) = buffered[0].clone();
    let kind = match first.split_whitespace().collect::<Vec<_>>().as_slice() {
        [m, k] if *m == MAGIC => FieldKind::parse(k).ok_or_else(|| parse_err(no, format!("unknown field kind `{k}`")))?,
        _ => return Err(parse_err(no, format!("expected `{MAGIC} <kind>`"))),
    };
    let mut it = buffered.into_iter().skip(1);
    let n = header_count(&mut it, "n")?;
    let (_, half_width) = header_value::<T>(&mut it, "L")?;
    let points = header_count(&mut it, "N")?;
    let d = header_count(&mut it, "d")?;
    let grid = Grid::new(n, half_width, points)?;
    if kind.row_len(d) == 1 && d != 1 {
        return Err(parse_err(5, format!("a {} field has d = 1", kind.name())));
    }
    let width = kind.row_len(d);
    let mut rows = Vec::with_capacity(grid.len() * width);
    let mut count = 0;
    while let Some((no, line)) = next()? {
        if count == grid.len() {
            return Err(parse_err(no, format!("more than {} rows", grid.len())));
        }
        let before = rows.len();
        for tok in line.split_whitespace() {
            rows.push(tok.parse::<T>().map_err(|_| parse_err(no, format!("not a number: {tok}")))?);
        }
        if rows.len() - before != width {
            return Err(parse_err(no, format!("expected {width} numbers, found {}", rows.len() - before)));
        }
        count += 1;
    }
    if count != grid.len() {
        return Err(parse_err(0, format!("expected {} rows, found {count}", grid.len())));
    }
    Ok((FieldHeader { kind, grid, d }, rows))
}

pub fn read_field<T: Scalar, F: FieldFile<T>>(input: impl BufRead) -> Result<F> {
    let (header, rows) = read_raw::<T>(input)?;
    if header.kind != F::KIND {
        return Err(parse_err(1, format!("expected a {} field, found {}", F::KIND.name(), header.kind.name())));
    }
    F::from_rows(&header, rows)
}

pub fn save_field<T: Scalar, F: FieldFile<T>>(path: impl AsRef<Path>, field: &F) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_field(&mut file, field)?;
    file.flush()?;
    Ok(())
}

pub fn load_field<T: Scalar, F: FieldFile<T>>(path: impl AsRef<Path>) -> Result<F> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_field(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::herm;
    use crate::weights::{make_power_weight, Rotation};

    fn round_trip<F: FieldFile<f64>>(f: &F) -> (String, F) {
        let mut buf = Vec::new();
        write_field(&mut buf, f).unwrap();
        let back = read_field::<f64, F>(buf.as_slice()).unwrap();
        (String::from_utf8(buf).unwrap(), back)
    }

    #[test]
    fn matrix_field_is_bit_exact() {
        let g = Grid::<f64>::new(2, 1.5, 8).unwrap();
        let w = make_power_weight(g, &[0.5, -1.0 / 3.0], Some(Rotation::Plane { rate: 0.7 })).unwrap();
        let (text, back) = round_trip(&w);
        assert!(text.starts_with("matweight-field matrix\nn 2\nL 1.5e0\nN 8\nd 2\n"));
        assert_eq!(text.lines().count(), 5 + 64);
        for i in 0..g.len() {
            let (a, b) = (w.value(i).matrix().as_slice(), back.value(i).matrix().as_slice());
            assert!(a.iter().zip(b).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
        }
        let (again, _) = round_trip(&back);
        assert_eq!(text, again);
    }

    #[test]
    fn vector_and_real_fields_are_bit_exact() {
        let g = Grid::<f64>::new(1, 3.0, 32).unwrap();
        let f = SampledVectorField::from_fn(g, 3, |x, v| {
            for (k, z) in v.iter_mut().enumerate() {
                *z = C::new((x[0] * (k as f64 + 1.0)).sin() / 3.0, std::f64::consts::PI * x[0].cos() * 1e-300);
            }
        })
        .unwrap();
        assert_eq!(round_trip(&f).1, f);
        let u = MeasureDensity::from_fn(g, |x| 1.0 + x[0] * x[0] / 7.0).unwrap();
        assert_eq!(round_trip(&u).1.values(), u.values());
        let p = ExponentField::from_fn(g, |x| 1.5 + 0.1 * x[0].sin()).unwrap();
        assert_eq!(round_trip(&p).1, p);
        let s = ScalarWeightField::power_law(g, 0.3).unwrap();
        assert_eq!(round_trip(&s).1.values(), s.values());
    }

    #[test]
    fn f32_round_trip() {
        let g = Grid::<f32>::new(1, 2.0, 16).unwrap();
        let f = ExponentField::from_fn(g, |x| 1.1 + x[0] * x[0] / 3.0).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        assert_eq!(read_field::<f32, ExponentField<f32>>(buf.as_slice()).unwrap(), f);
    }

    #[test]
    fn negative_eigenvalue_is_not_psd() {
        let g = Grid::<f64>::new(1, 1.0, 8).unwrap();
        let w = MatrixWeightField::constant(g, herm(&[&[2.0, 1.0], &[1.0, 2.0]])).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &w).unwrap();
        let text = String::from_utf8(buf).unwrap();
        // eigenvalues of [[2, 3], [3, 2]] are 5 and -1
        let bad = text.replacen("2e0 0e0 1e0 0e0 1e0 0e0 2e0 0e0", "2e0 0e0 3e0 0e0 3e0 0e0 2e0 0e0", 1);
        assert_ne!(bad, text);
        assert!(matches!(read_field::<f64, MatrixWeightField<f64>>(bad.as_bytes()), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn malformed_files_report_the_line() {
        let g = Grid::<f64>::new(1, 1.0, 8).unwrap();
        let u = MeasureDensity::lebesgue(g);
        let mut buf = Vec::new();
        write_field(&mut buf, &u).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let short: String = text.lines().take(9).map(|l| format!("{l}\n")).collect();
        assert!(matches!(read_field::<f64, MeasureDensity<f64>>(short.as_bytes()), Err(Error::Parse { .. })));
        let garbled = text.replacen("d 1\n1e0\n", "d 1\none\n", 1);
        assert_eq!(read_field::<f64, MeasureDensity<f64>>(garbled.as_bytes()).unwrap_err(), Error::Parse { line: 6, message: "not a number: one".into() });
        assert!(matches!(read_field::<f64, ExponentField<f64>>(text.as_bytes()), Err(Error::Parse { line: 1, .. })));
        let commented = format!("# made by hand\n\n{text}");
        assert_eq!(read_field::<f64, MeasureDensity<f64>>(commented.as_bytes()).unwrap().values(), u.values());
    }
}
