//! Datasets, least-squares fits on column subsets and prediction.
//!
//! Every fit includes an unpenalised intercept. It is handled by centring: the design
//! columns and the response are centred once when the dataset is built, and a subset fit
//! is a least-squares problem on the centred columns.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::format;
use crate::scalar::{dot, Scalar};
use crate::subset::ModelSubset;

/// RSS values below this fraction of the centred total sum of squares are floored.
pub const RSS_FLOOR_FRACTION: f64 = 1e-12;

/// Dense column-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    nrows: usize,
    ncols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![T::zero(); nrows * ncols],
        }
    }

    pub fn from_columns(nrows: usize, columns: Vec<Vec<T>>) -> Result<Self> {
        let ncols = columns.len();
        let mut data = Vec::with_capacity(nrows * ncols);
        for (j, c) in columns.into_iter().enumerate() {
            if c.len() != nrows {
                return Err(Error::Dimension(format!(
                    "column {} has {} entries, expected {nrows}",
                    j + 1,
                    c.len()
                )));
            }
            data.extend(c);
        }
        Ok(Self { nrows, ncols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(nrows, ncols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != ncols {
                return Err(Error::Dimension(format!(
                    "row {} has {} entries, expected {ncols}",
                    i + 1,
                    r.len()
                )));
            }
            for (j, v) in r.iter().enumerate() {
                m.set(i, j, *v);
            }
        }
        Ok(m)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[j * self.nrows + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[j * self.nrows + i] = v;
    }

    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.nrows..(j + 1) * self.nrows]
    }
}

/// Regression data: `n` observations of `p` covariates and a response.
#[derive(Debug, Clone)]
pub struct Dataset<T> {
    x: Matrix<T>,
    y: Vec<T>,
    names: Vec<String>,
    response_name: String,
    col_means: Vec<T>,
    centered: Matrix<T>,
    y_mean: T,
    y_centered: Vec<T>,
    tss: T,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(x: Matrix<T>, y: Vec<T>, names: Vec<String>, response_name: &str) -> Result<Self> {
        let n = x.nrows();
        let p = x.ncols();
        if y.len() != n {
            return Err(Error::Dimension(format!(
                "response has {} entries, design has {n} rows",
                y.len()
            )));
        }
        if n < 3 {
            return Err(Error::TooFewRows(n));
        }
        if p == 0 {
            return Err(Error::NoCovariates);
        }
        if names.len() != p {
            return Err(Error::Dimension(format!(
                "{} names for {p} covariates",
                names.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in names.iter().chain(std::iter::once(&response_name.to_string())) {
            if !seen.insert(name.clone()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        for j in 0..p {
            if let Some(i) = x.col(j).iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { row: i + 1, col: j + 1 });
            }
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i + 1, col: 0 });
        }

        let nf = T::of_usize(n);
        let mut col_means = Vec::with_capacity(p);
        let mut centered = Matrix::zeros(n, p);
        for j in 0..p {
            let mean = x.col(j).iter().copied().sum::<T>() / nf;
            col_means.push(mean);
            for (c, v) in centered.col_mut(j).iter_mut().zip(x.col(j)) {
                *c = *v - mean;
            }
        }
        let y_mean = y.iter().copied().sum::<T>() / nf;
        let y_centered: Vec<T> = y.iter().map(|v| *v - y_mean).collect();
        let tss = dot(&y_centered, &y_centered);
        Ok(Self {
            x,
            y,
            names,
            response_name: response_name.to_string(),
            col_means,
            centered,
            y_mean,
            y_centered,
            tss,
        })
    }

    /// Dataset with default names `x1..xp` and response `y`.
    pub fn from_parts(x: Matrix<T>, y: Vec<T>) -> Result<Self> {
        let names = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
        Self::new(x, y, names, "y")
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &Matrix<T> {
        &self.x
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn response_name(&self) -> &str {
        &self.response_name
    }

    /// Centred total sum of squares `Σ (yᵢ − ȳ)²`.
    pub fn tss(&self) -> T {
        self.tss
    }

    pub(crate) fn centered_col(&self, j: usize) -> &[T] {
        self.centered.col(j)
    }

    pub(crate) fn y_centered(&self) -> &[T] {
        &self.y_centered
    }

    pub(crate) fn rss_floor(&self) -> T {
        rss_floor(self.tss)
    }

    /// Same data with every response value multiplied by `c`.
    pub fn with_scaled_response(&self, c: T) -> Result<Self> {
        let y = self.y.iter().map(|v| *v * c).collect();
        Self::new(self.x.clone(), y, self.names.clone(), &self.response_name)
    }

    /// Writes the response followed by the covariates, one header row.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let mut header = vec![self.response_name.clone()];
        header.extend(self.names.iter().cloned());
        let io = |e| Error::io(path, e);
        writeln!(w, "{}", header.join(",")).map_err(io)?;
        let mut line = String::new();
        for i in 0..self.n() {
            line.clear();
            line.push_str(&format::real(self.y[i].as_f64()));
            for j in 0..self.p() {
                line.push(',');
                line.push_str(&format::real(self.x.get(i, j).as_f64()));
            }
            writeln!(w, "{line}").map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

pub(crate) fn rss_floor<T: Scalar>(tss: T) -> T {
    let base = if tss > T::zero() { tss } else { T::one() };
    base * T::of(RSS_FLOOR_FRACTION)
}

/// Reads a CSV file with one header row; `response_column` becomes `y`, every other column
/// (in file order) a covariate.
pub fn load_dataset<T: Scalar>(path: impl AsRef<Path>, response_column: &str) -> Result<Dataset<T>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file, response_column)
}

pub fn read_dataset<T: Scalar, R: std::io::Read>(reader: R, response_column: &str) -> Result<Dataset<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::MissingHeader);
    }
    let mut seen = HashSet::new();
    for h in &header {
        if h.is_empty() {
            return Err(Error::MissingHeader);
        }
        if !seen.insert(h.as_str()) {
            return Err(Error::DuplicateColumn(h.clone()));
        }
    }
    let resp = header
        .iter()
        .position(|h| h == response_column)
        .ok_or_else(|| Error::MissingResponse(response_column.to_string()))?;
    let width = header.len();
    let mut columns: Vec<Vec<T>> = vec![Vec::new(); width];
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        if record.len() != width {
            return Err(Error::RaggedRow {
                row,
                found: record.len(),
                expected: width,
            });
        }
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::NonNumeric {
                row,
                col: c + 1,
                value: field.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite { row, col: c + 1 });
            }
            columns[c].push(T::of(v));
        }
    }
    let n = columns[0].len();
    if n < 3 {
        return Err(Error::TooFewRows(n));
    }
    let y = columns.remove(resp);
    let mut names = header;
    let response_name = names.remove(resp);
    let x = Matrix::from_columns(n, columns)?;
    Dataset::new(x, y, names, &response_name)
}

/// Least-squares fit of the response on an intercept plus a column subset.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<T> {
    pub rss: T,
    pub tss: T,
    pub intercept: T,
    /// Aligned with the subset's indices.
    pub coefficients: Vec<T>,
    pub subset_size: usize,
    pub n_covariates: usize,
    /// `[1, X_S]` lacked full column rank; coefficients are the minimum-norm solution.
    pub rank_deficient: bool,
    /// `rss` fell below [`RSS_FLOOR_FRACTION`] × TSS.
    pub clamped: bool,
}

impl<T: Scalar> FitResult<T> {
    /// RSS with the numerical floor applied, the value every criterion takes the log of.
    pub fn floored_rss(&self) -> T {
        self.rss.max(rss_floor(self.tss))
    }
}

/// Ordinary least squares of `y` on `[1, X_S]` through a column-pivoted Householder QR of
/// the centred design.
pub fn fit_subset<T: Scalar>(data: &Dataset<T>, s: &ModelSubset) -> Result<FitResult<T>> {
    s.check(data.n(), data.p())?;
    let n = data.n();
    let k = s.len();
    if k == 0 {
        return Ok(FitResult {
            rss: data.tss,
            tss: data.tss,
            intercept: data.y_mean,
            coefficients: Vec::new(),
            subset_size: 0,
            n_covariates: data.p(),
            rank_deficient: false,
            clamped: data.tss < data.rss_floor(),
        });
    }

    let mut a = Vec::with_capacity(n * k);
    for &j in s.indices() {
        a.extend_from_slice(data.centered_col(j));
    }
    let qr = Qr::factor(a, n, k, true);
    let mut qtb = data.y_centered.clone();
    qr.apply_qt(&mut qtb);
    let rank = qr.rank();
    let rss: T = qtb[rank..].iter().map(|v| *v * *v).sum();

    let permuted = if rank == k {
        qr.back_substitute(&qtb[..k])
    } else {
        qr.min_norm_solution(&qtb[..rank])
    };
    let mut coefficients = vec![T::zero(); k];
    for (pos, &col) in qr.perm.iter().enumerate() {
        coefficients[col] = permuted[pos];
    }
    let intercept = s
        .indices()
        .iter()
        .zip(&coefficients)
        .fold(data.y_mean, |acc, (&j, b)| acc - data.col_means[j] * *b);

    Ok(FitResult {
        rss,
        tss: data.tss,
        intercept,
        coefficients,
        subset_size: k,
        n_covariates: data.p(),
        rank_deficient: rank < k,
        clamped: rss < data.rss_floor(),
    })
}

/// `intercept + X_new[:, S] · coefficients`.
pub fn predict<T: Scalar>(fit: &FitResult<T>, s: &ModelSubset, x_new: &Matrix<T>) -> Result<Vec<T>> {
    if x_new.ncols() != fit.n_covariates {
        return Err(Error::Dimension(format!(
            "x_new has {} columns, the fit was trained on {}",
            x_new.ncols(),
            fit.n_covariates
        )));
    }
    if s.len() != fit.coefficients.len() {
        return Err(Error::Dimension(format!(
            "subset has {} indices, fit has {} coefficients",
            s.len(),
            fit.coefficients.len()
        )));
    }
    let mut out = vec![fit.intercept; x_new.nrows()];
    for (&j, &b) in s.indices().iter().zip(&fit.coefficients) {
        for (o, v) in out.iter_mut().zip(x_new.col(j)) {
            *o = *o + *v * b;
        }
    }
    Ok(out)
}

/// Householder QR, optionally with column pivoting. Reflector `i` is stored below the
/// diagonal of column `i` with its leading entry in `head`.
struct Qr<T> {
    m: usize,
    k: usize,
    a: Vec<T>,
    head: Vec<T>,
    beta: Vec<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Qr<T> {
    fn factor(mut a: Vec<T>, m: usize, k: usize, pivot: bool) -> Self {
        let steps = m.min(k);
        let mut head = vec![T::zero(); steps];
        let mut beta = vec![T::zero(); steps];
        let mut perm: Vec<usize> = (0..k).collect();
        for i in 0..steps {
            if pivot {
                let norm_sq = |a: &[T], c: usize| -> T {
                    a[c * m + i..(c + 1) * m].iter().map(|v| *v * *v).sum()
                };
                let mut best = i;
                let mut best_norm = norm_sq(&a, i);
                for c in i + 1..k {
                    let nc = norm_sq(&a, c);
                    if nc > best_norm {
                        best = c;
                        best_norm = nc;
                    }
                }
                if best != i {
                    for r in 0..m {
                        a.swap(i * m + r, best * m + r);
                    }
                    perm.swap(i, best);
                }
            }
            let col = &a[i * m + i..(i + 1) * m];
            let norm = col.iter().map(|v| *v * *v).sum::<T>().sqrt();
            if norm == T::zero() {
                continue;
            }
            let x0 = col[0];
            let alpha = if x0 >= T::zero() { -norm } else { norm };
            let v0 = x0 - alpha;
            let tail_sq: T = col[1..].iter().map(|v| *v * *v).sum();
            let vv = v0 * v0 + tail_sq;
            let b = if vv > T::zero() { T::of(2.0) / vv } else { T::zero() };
            head[i] = v0;
            beta[i] = b;
            for c in i + 1..k {
                let (left, right) = a.split_at_mut(c * m);
                let v = &left[i * m + i..(i + 1) * m];
                let target = &mut right[i..m];
                let s = v0 * target[0] + dot(&v[1..], &target[1..]);
                let f = b * s;
                target[0] = target[0] - f * v0;
                for (t, vr) in target[1..].iter_mut().zip(&v[1..]) {
                    *t = *t - f * *vr;
                }
            }
            a[i * m + i] = alpha;
        }
        Self {
            m,
            k,
            a,
            head,
            beta,
            perm,
        }
    }

    fn r(&self, i: usize, j: usize) -> T {
        self.a[j * self.m + i]
    }

    fn rank(&self) -> usize {
        let steps = self.m.min(self.k);
        if steps == 0 {
            return 0;
        }
        let r00 = self.r(0, 0).abs();
        if r00 == T::zero() {
            return 0;
        }
        let tol = T::epsilon() * T::of_usize(self.m.max(self.k)) * r00;
        (0..steps).take_while(|&i| self.r(i, i).abs() > tol).count()
    }

    fn reflect(&self, i: usize, b: &mut [T]) {
        if self.beta[i] == T::zero() {
            return;
        }
        let v = &self.a[i * self.m + i + 1..(i + 1) * self.m];
        let s = self.head[i] * b[i] + dot(v, &b[i + 1..]);
        let f = self.beta[i] * s;
        b[i] = b[i] - f * self.head[i];
        for (t, vr) in b[i + 1..].iter_mut().zip(v) {
            *t = *t - f * *vr;
        }
    }

    fn apply_qt(&self, b: &mut [T]) {
        for i in 0..self.head.len() {
            self.reflect(i, b);
        }
    }

    fn apply_q(&self, b: &mut [T]) {
        for i in (0..self.head.len()).rev() {
            self.reflect(i, b);
        }
    }

    fn back_substitute(&self, c: &[T]) -> Vec<T> {
        let k = c.len();
        let mut x = c.to_vec();
        for i in (0..k).rev() {
            let mut s = x[i];
            for j in i + 1..k {
                s = s - self.r(i, j) * x[j];
            }
            x[i] = s / self.r(i, i);
        }
        x
    }

    /// Minimum-norm solution of `R[..r, ..k] x = c` via a QR of the transposed top rows.
    fn min_norm_solution(&self, c: &[T]) -> Vec<T> {
        let r = c.len();
        let k = self.k;
        if r == 0 {
            return vec![T::zero(); k];
        }
        let mut rt = vec![T::zero(); k * r];
        for i in 0..r {
            for j in i..k {
                rt[i * k + j] = self.r(i, j);
            }
        }
        let second = Qr::factor(rt, k, r, false);
        let mut w = vec![T::zero(); k];
        for i in 0..r {
            let mut s = c[i];
            for (j, wj) in w.iter().enumerate().take(i) {
                s = s - second.r(j, i) * *wj;
            }
            w[i] = s / second.r(i, i);
        }
        second.apply_q(&mut w);
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn toy() -> Dataset<f64> {
        let csv = "y,x1,x2\n1,0,2\n3,1,1\n2,2,5\n6,3,3\n";
        read_dataset(csv.as_bytes(), "y").unwrap()
    }

    #[test]
    fn parses_header_and_shape() {
        let d = toy();
        assert_eq!(d.n(), 4);
        assert_eq!(d.p(), 2);
        assert_eq!(d.names(), &["x1".to_string(), "x2".to_string()]);
        assert_eq!(d.y(), &[1.0, 3.0, 2.0, 6.0]);
    }

    #[test]
    fn response_can_be_any_column() {
        let d: Dataset<f64> = read_dataset("a,y,b\n1,2,3\n4,5,6\n7,8,10\n".as_bytes(), "y").unwrap();
        assert_eq!(d.names(), &["a".to_string(), "b".to_string()]);
        assert_eq!(d.x().col(1), &[3.0, 6.0, 10.0]);
    }

    #[test]
    fn rejects_nan_with_position() {
        let err = read_dataset::<f64, _>("y,x1\n1,2\n2,NaN\n3,4\n".as_bytes(), "y").unwrap_err();
        assert_eq!(err.to_string(), "non-finite value at row 2, column 2");
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            read_dataset::<f64, _>("y,x1\n1,2\n2,abc\n3,4\n".as_bytes(), "y"),
            Err(Error::NonNumeric { row: 2, col: 2, .. })
        ));
        assert!(matches!(
            read_dataset::<f64, _>("y,x1\n1,2\n2,3\n".as_bytes(), "y"),
            Err(Error::TooFewRows(2))
        ));
        assert!(matches!(
            read_dataset::<f64, _>("y,x1,x1\n1,2,3\n2,3,4\n3,4,6\n".as_bytes(), "y"),
            Err(Error::DuplicateColumn(_))
        ));
        assert!(matches!(
            read_dataset::<f64, _>("y,x1\n1,2\n2,3\n3,4\n".as_bytes(), "z"),
            Err(Error::MissingResponse(_))
        ));
        assert!(matches!(
            read_dataset::<f64, _>("".as_bytes(), "y"),
            Err(Error::MissingHeader)
        ));
        assert!(matches!(
            load_dataset::<f64>("/nonexistent/data.csv", "y"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn empty_subset_is_intercept_only() {
        let d = toy();
        let fit = fit_subset(&d, &ModelSubset::empty()).unwrap();
        assert_eq!(fit.intercept, 3.0);
        assert_eq!(fit.rss, 4.0 + 0.0 + 1.0 + 9.0);
        assert!(!fit.rank_deficient);
    }

    #[test]
    fn exact_linear_relation() {
        let x = Matrix::from_columns(5, vec![vec![1.0f64, 2.0, 3.0, 4.0, 5.0]]).unwrap();
        let d = Dataset::from_parts(x, vec![2.0, 4.0, 6.0, 8.0, 10.0]).unwrap();
        let s = ModelSubset::new(vec![0]).unwrap();
        let fit = fit_subset(&d, &s).unwrap();
        assert!(fit.rss.abs() < 1e-20);
        assert_relative_eq!(fit.coefficients[0], 2.0, epsilon = 1e-12);
        assert!(fit.intercept.abs() < 1e-12);
        assert!(fit.clamped);
        assert!(fit.floored_rss() > 0.0);

        let row = Matrix::from_rows(&[vec![3.0]]).unwrap();
        let pred = predict(&fit, &s, &row).unwrap();
        assert_relative_eq!(pred[0], 6.0, epsilon = 1e-12);
    }

    #[test]
    fn duplicated_column_gives_min_norm_solution() {
        let c = vec![1.0, 2.0, 4.0, 3.0, 7.0];
        let x = Matrix::from_columns(5, vec![c.clone(), c]).unwrap();
        let y = vec![1.0, 2.5, 3.9, 3.2, 7.4];
        let d = Dataset::from_parts(x, y).unwrap();
        let both = fit_subset(&d, &ModelSubset::new(vec![0, 1]).unwrap()).unwrap();
        let one = fit_subset(&d, &ModelSubset::new(vec![0]).unwrap()).unwrap();
        assert!(both.rank_deficient);
        assert_relative_eq!(both.rss, one.rss, max_relative = 1e-10);
        // the minimum-norm solution splits the slope evenly across identical columns
        assert_relative_eq!(both.coefficients[0], one.coefficients[0] / 2.0, max_relative = 1e-10);
        assert_relative_eq!(both.coefficients[1], one.coefficients[0] / 2.0, max_relative = 1e-10);
        assert_relative_eq!(both.intercept, one.intercept, max_relative = 1e-10);
    }

    #[test]
    fn constant_column_is_rank_deficient() {
        let x = Matrix::from_columns(4, vec![vec![5.0; 4], vec![1.0, 2.0, 0.0, 3.0]]).unwrap();
        let d = Dataset::from_parts(x, vec![1.0, 2.0, 0.5, 3.5]).unwrap();
        let fit = fit_subset(&d, &ModelSubset::new(vec![0]).unwrap()).unwrap();
        assert!(fit.rank_deficient);
        assert_eq!(fit.coefficients, vec![0.0]);
        assert_eq!(fit.rss, d.tss());
    }

    #[test]
    fn predict_checks_columns() {
        let d = toy();
        let s = ModelSubset::new(vec![1]).unwrap();
        let fit = fit_subset(&d, &s).unwrap();
        let wrong = Matrix::<f64>::zeros(2, 3);
        assert!(predict(&fit, &s, &wrong).is_err());
        let empty_fit = fit_subset(&d, &ModelSubset::empty()).unwrap();
        let pred = predict(&empty_fit, &ModelSubset::empty(), &Matrix::zeros(3, 2)).unwrap();
        assert_eq!(pred, vec![3.0; 3]);
    }

    #[test]
    fn rejects_subset_outside_model_space() {
        let d = toy();
        assert!(fit_subset(&d, &ModelSubset::new(vec![0, 1]).unwrap()).is_err());
        assert!(fit_subset(&d, &ModelSubset::new(vec![5]).unwrap()).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let x = Matrix::from_columns(5, vec![vec![1.0f32, 2.0, 3.0, 4.0, 5.0]]).unwrap();
        let d = Dataset::from_parts(x, vec![2.1f32, 3.9, 6.2, 7.8, 10.1]).unwrap();
        let fit = fit_subset(&d, &ModelSubset::new(vec![0]).unwrap()).unwrap();
        assert!((fit.coefficients[0] - 1.99).abs() < 1e-4);
    }
}
