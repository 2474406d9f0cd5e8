//! Standard-form conic programs and their builder.
//!
//! The standard form is
//!
//! ```text
//! minimize cᵀx  subject to  A x + s = b,  s ∈ K
//! ```
//!
//! where `K` is the product of the listed cones in row order.

use nalgebra::{DMatrix, DVector};
use std::fmt::Write as _;
use std::time::Duration;

use crate::cone::Cone;
use crate::expr::AffineExpr;
use crate::lmi::{probe_value, BlockLmi, Sense};
use crate::sparse::SparseMatrix;
use crate::svec::{svec_len, svec_unchecked};
use crate::SdpError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarShape {
    /// `n × n` symmetric; coordinates are the upper triangle in svec order.
    Symmetric(usize),
    /// `r × c` rectangular; coordinates are column-major.
    Rect(usize, usize),
    Scalar,
}

impl VarShape {
    pub fn dims(&self) -> (usize, usize) {
        match *self {
            VarShape::Symmetric(n) => (n, n),
            VarShape::Rect(r, c) => (r, c),
            VarShape::Scalar => (1, 1),
        }
    }

    pub fn len(&self) -> usize {
        match *self {
            VarShape::Symmetric(n) => svec_len(n),
            VarShape::Rect(r, c) => r * c,
            VarShape::Scalar => 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(i, j)` with `i ≤ j` for coordinate `k` of a symmetric block.
    pub(crate) fn sym_pair(&self, k: usize) -> (usize, usize) {
        let mut j = 0;
        while svec_len(j + 1) <= k {
            j += 1;
        }
        (k - svec_len(j), j)
    }

    /// Assembles a block value from its coordinates.
    pub fn from_coords(&self, v: &[f64]) -> DMatrix<f64> {
        let (r, c) = self.dims();
        match *self {
            VarShape::Symmetric(n) => {
                let mut m = DMatrix::zeros(n, n);
                for k in 0..v.len() {
                    let (i, j) = self.sym_pair(k);
                    m[(i, j)] = v[k];
                    m[(j, i)] = v[k];
                }
                m
            }
            _ => DMatrix::from_column_slice(r, c, v),
        }
    }
}

/// Handle to a named decision block: its shape and where it lives in `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VarId {
    pub index: usize,
    pub offset: usize,
    pub shape: VarShape,
}

impl VarId {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.shape.len()
    }

    /// Reads this block out of a full decision vector.
    pub fn value_in(&self, x: &[f64]) -> DMatrix<f64> {
        self.shape.from_coords(&x[self.range()])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarBlock {
    pub name: String,
    pub id: VarId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
    MaxIter,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::NumericalFailure => "numerical_failure",
            SolveStatus::MaxIter => "max_iter",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub tol_feas: f64,
    pub tol_gap: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { tol_feas: 1e-8, tol_gap: 1e-8, max_iter: 200 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicProgram {
    /// Objective of the standard form (always a minimization).
    pub c: DVector<f64>,
    pub a: SparseMatrix,
    pub b: DVector<f64>,
    pub cones: Vec<Cone>,
    pub blocks: Vec<VarBlock>,
    /// Constant term of the user objective.
    pub objective_offset: f64,
    /// True when the user asked to maximize; `c` then holds the negated objective.
    pub maximize: bool,
    /// Strictness margin used when building the program, kept as metadata.
    pub margin: f64,
}

impl ConicProgram {
    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    pub fn block(&self, name: &str) -> Result<VarId, SdpError> {
        self.blocks
            .iter()
            .find(|b| b.name == name)
            .map(|b| b.id)
            .ok_or_else(|| SdpError::UnknownBlock(name.to_string()))
    }

    /// The user-facing objective at `x`.
    pub fn objective_at(&self, x: &DVector<f64>) -> f64 {
        let v = self.c.dot(x);
        if self.maximize {
            -v + self.objective_offset
        } else {
            v + self.objective_offset
        }
    }

    /// Checks cone bookkeeping and block coverage.
    pub fn validate(&self) -> Result<(), SdpError> {
        let rows: usize = self.cones.iter().map(Cone::dim).sum();
        if rows != self.b.len() || self.a.nrows != rows {
            return Err(SdpError::Shape(format!(
                "cones cover {rows} rows, b has {}, A has {}",
                self.b.len(),
                self.a.nrows
            )));
        }
        if self.a.ncols != self.c.len() {
            return Err(SdpError::Shape(format!(
                "A has {} columns but c has {} entries",
                self.a.ncols,
                self.c.len()
            )));
        }
        let mut next = 0;
        for blk in &self.blocks {
            if blk.id.offset != next {
                return Err(SdpError::Shape(format!("block `{}` is not contiguous", blk.name)));
            }
            next += blk.id.shape.len();
        }
        if next != self.c.len() {
            return Err(SdpError::Shape(format!(
                "blocks cover {next} coordinates, program has {}",
                self.c.len()
            )));
        }
        Ok(())
    }

    /// Writes the program in the sparse-triplet text format.
    ///
    /// ```text
    /// ddlqr-conic 1
    /// dims <vars> <rows>
    /// sense min|max
    /// offset <f64>
    /// margin <f64>
    /// cone zero|nonneg|psd <size>        one line per cone, in row order
    /// block <name> sym <n> | rect <r> <c> | scalar
    /// c <col> <value>                    nonzeros only
    /// a <row> <col> <value>
    /// b <row> <value>
    /// ```
    ///
    /// Indices are zero-based; values use Rust's shortest round-trip formatting.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "ddlqr-conic 1");
        let _ = writeln!(out, "dims {} {}", self.num_vars(), self.num_rows());
        let _ = writeln!(out, "sense {}", if self.maximize { "max" } else { "min" });
        let _ = writeln!(out, "offset {:?}", self.objective_offset);
        let _ = writeln!(out, "margin {:?}", self.margin);
        for cone in &self.cones {
            let _ = match cone {
                Cone::Zero(d) => writeln!(out, "cone zero {d}"),
                Cone::Nonneg(d) => writeln!(out, "cone nonneg {d}"),
                Cone::Psd(s) => writeln!(out, "cone psd {s}"),
            };
        }
        for blk in &self.blocks {
            let _ = match blk.id.shape {
                VarShape::Symmetric(n) => writeln!(out, "block {} sym {n}", blk.name),
                VarShape::Rect(r, c) => writeln!(out, "block {} rect {r} {c}", blk.name),
                VarShape::Scalar => writeln!(out, "block {} scalar", blk.name),
            };
        }
        for (i, v) in self.c.iter().enumerate() {
            if *v != 0.0 {
                let _ = writeln!(out, "c {i} {v:?}");
            }
        }
        let mut a = self.a.clone();
        a.compress();
        for (i, j, v) in &a.entries {
            let _ = writeln!(out, "a {i} {j} {v:?}");
        }
        for (i, v) in self.b.iter().enumerate() {
            if *v != 0.0 {
                let _ = writeln!(out, "b {i} {v:?}");
            }
        }
        out
    }

    /// Parses the format written by [`ConicProgram::dump`].
    pub fn parse(text: &str) -> Result<Self, SdpError> {
        let err = |line: usize, msg: &str| SdpError::Parse { line: line + 1, msg: msg.to_string() };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, l)) if l.trim() == "ddlqr-conic 1" => {}
            Some((i, _)) => return Err(err(i, "missing `ddlqr-conic 1` header")),
            None => return Err(err(0, "empty input")),
        }
        let mut dims: Option<(usize, usize)> = None;
        let mut p = ConicProgram {
            c: DVector::zeros(0),
            a: SparseMatrix::new(0, 0),
            b: DVector::zeros(0),
            cones: Vec::new(),
            blocks: Vec::new(),
            objective_offset: 0.0,
            maximize: false,
            margin: 0.0,
        };
        let mut offset = 0;
        for (ln, line) in lines {
            let tok: Vec<&str> = line.split_whitespace().collect();
            let num = |k: usize| -> Result<usize, SdpError> {
                tok.get(k)
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err(ln, "expected an unsigned integer"))
            };
            let real = |k: usize| -> Result<f64, SdpError> {
                tok.get(k)
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err(ln, "expected a number"))
            };
            let need_dims = || dims.ok_or_else(|| err(ln, "`dims` must come first"));
            match tok[0] {
                "dims" => {
                    let (n, m) = (num(1)?, num(2)?);
                    dims = Some((n, m));
                    p.c = DVector::zeros(n);
                    p.b = DVector::zeros(m);
                    p.a = SparseMatrix::new(m, n);
                }
                "sense" => {
                    p.maximize = match tok.get(1) {
                        Some(&"max") => true,
                        Some(&"min") => false,
                        _ => return Err(err(ln, "sense must be min or max")),
                    }
                }
                "offset" => p.objective_offset = real(1)?,
                "margin" => p.margin = real(1)?,
                "cone" => {
                    let size = num(2)?;
                    p.cones.push(match tok.get(1) {
                        Some(&"zero") => Cone::Zero(size),
                        Some(&"nonneg") => Cone::Nonneg(size),
                        Some(&"psd") => Cone::Psd(size),
                        _ => return Err(err(ln, "unknown cone kind")),
                    });
                }
                "block" => {
                    let name = tok.get(1).ok_or_else(|| err(ln, "block needs a name"))?;
                    let shape = match tok.get(2) {
                        Some(&"sym") => VarShape::Symmetric(num(3)?),
                        Some(&"rect") => VarShape::Rect(num(3)?, num(4)?),
                        Some(&"scalar") => VarShape::Scalar,
                        _ => return Err(err(ln, "unknown block shape")),
                    };
                    let id = VarId { index: p.blocks.len(), offset, shape };
                    offset += shape.len();
                    p.blocks.push(VarBlock { name: name.to_string(), id });
                }
                "c" => {
                    let (n, _) = need_dims()?;
                    let i = num(1)?;
                    if i >= n {
                        return Err(err(ln, "column index out of range"));
                    }
                    p.c[i] = real(2)?;
                }
                "a" => {
                    let (n, m) = need_dims()?;
                    let (i, j) = (num(1)?, num(2)?);
                    if i >= m || j >= n {
                        return Err(err(ln, "triplet index out of range"));
                    }
                    p.a.push(i, j, real(3)?);
                }
                "b" => {
                    let (_, m) = need_dims()?;
                    let i = num(1)?;
                    if i >= m {
                        return Err(err(ln, "row index out of range"));
                    }
                    p.b[i] = real(2)?;
                }
                _ => return Err(err(ln, "unknown record")),
            }
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicSolution {
    pub status: SolveStatus,
    pub x: DVector<f64>,
    /// User-facing objective (sign and offset restored).
    pub objective: f64,
    pub solve_time: Duration,
    pub solver_id: String,
    pub iterations: usize,
    /// `‖Ax + s − b‖∞ / max(1, ‖b‖∞)` at the returned point.
    pub primal_residual: f64,
    /// Relative duality gap at termination.
    pub gap: f64,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn value(&self, var: VarId) -> DMatrix<f64> {
        var.value_in(self.x.as_slice())
    }

    pub fn scalar(&self, var: VarId) -> f64 {
        self.x[var.offset]
    }
}

/// Collects decision blocks, constraints and an objective into a [`ConicProgram`].
#[derive(Debug, Clone, Default)]
pub struct ProgramBuilder {
    blocks: Vec<VarBlock>,
    num_vars: usize,
    eq_rows: Vec<(DVector<f64>, Vec<(usize, DVector<f64>)>)>,
    nonneg_rows: Vec<(DVector<f64>, Vec<(usize, DVector<f64>)>)>,
    psd_rows: Vec<(usize, DVector<f64>, Vec<(usize, DVector<f64>)>)>,
    objective: Option<(AffineExpr, bool)>,
    margin: f64,
}

impl ProgramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn add_block(&mut self, name: &str, shape: VarShape) -> VarId {
        let id = VarId { index: self.blocks.len(), offset: self.num_vars, shape };
        self.num_vars += shape.len();
        self.blocks.push(VarBlock { name: name.to_string(), id });
        id
    }

    pub fn symmetric(&mut self, name: &str, n: usize) -> VarId {
        self.add_block(name, VarShape::Symmetric(n))
    }

    pub fn rect(&mut self, name: &str, rows: usize, cols: usize) -> VarId {
        self.add_block(name, VarShape::Rect(rows, cols))
    }

    pub fn scalar(&mut self, name: &str) -> VarId {
        self.add_block(name, VarShape::Scalar)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Records the strictness margin the caller used (metadata only).
    pub fn set_margin(&mut self, eps: f64) {
        self.margin = eps;
    }

    pub fn minimize(&mut self, obj: AffineExpr) {
        assert_eq!((obj.nrows(), obj.ncols()), (1, 1), "objective must be 1×1");
        self.objective = Some((obj, false));
    }

    pub fn maximize(&mut self, obj: AffineExpr) {
        assert_eq!((obj.nrows(), obj.ncols()), (1, 1), "objective must be 1×1");
        self.objective = Some((obj, true));
    }

    /// `expr = 0` entrywise.
    pub fn equal_zero(&mut self, expr: &AffineExpr) {
        let vec = |m: &DMatrix<f64>| DVector::from_column_slice(m.as_slice());
        let cols = expr.coefficients().iter().map(|(k, m)| (*k, vec(m))).collect();
        self.eq_rows.push((-vec(&expr.constant), cols));
    }

    /// `expr ≥ 0` entrywise.
    pub fn nonneg(&mut self, expr: &AffineExpr) {
        let vec = |m: &DMatrix<f64>| DVector::from_column_slice(m.as_slice());
        let cols = expr.coefficients().iter().map(|(k, m)| (*k, -vec(m))).collect();
        self.nonneg_rows.push((vec(&expr.constant), cols));
    }

    /// `expr ⪯ 0` or `expr ⪰ 0` for a square, symmetric-valued expression.
    pub fn lmi(&mut self, expr: &AffineExpr, sense: Sense) -> Result<(), SdpError> {
        if expr.nrows() != expr.ncols() {
            return Err(SdpError::Shape(format!(
                "LMI must be square, got {}×{}",
                expr.nrows(),
                expr.ncols()
            )));
        }
        for probe in 0..2 {
            let v = expr.eval(&|var| probe_value(var, probe));
            let asym = (&v - v.transpose()).amax();
            if asym > 1e-9 * v.amax().max(1.0) {
                return Err(SdpError::NotSymmetric { asymmetry: asym });
            }
        }
        let sign = match sense {
            Sense::Nsd => 1.0,
            Sense::Psd => -1.0,
        };
        let cols = expr
            .coefficients()
            .iter()
            .map(|(k, m)| (*k, svec_unchecked(m) * sign))
            .collect();
        self.psd_rows.push((expr.nrows(), svec_unchecked(&expr.constant) * -sign, cols));
        Ok(())
    }

    pub fn block_lmi(&mut self, lmi: &BlockLmi, sense: Sense) -> Result<(), SdpError> {
        let expr = lmi.assemble()?;
        self.lmi(&expr, sense)
    }

    pub fn build(self) -> ConicProgram {
        let n = self.num_vars;
        let eq_dim: usize = self.eq_rows.iter().map(|r| r.0.len()).sum();
        let nn_dim: usize = self.nonneg_rows.iter().map(|r| r.0.len()).sum();
        let psd_dim: usize = self.psd_rows.iter().map(|r| r.1.len()).sum();
        let m = eq_dim + nn_dim + psd_dim;
        let mut a = SparseMatrix::new(m, n);
        let mut b = DVector::zeros(m);
        let mut cones = Vec::new();
        let mut row = 0;
        let mut emit = |rhs: &DVector<f64>, cols: &[(usize, DVector<f64>)], row: &mut usize| {
            b.rows_mut(*row, rhs.len()).copy_from(rhs);
            for (k, col) in cols {
                for (i, v) in col.iter().enumerate() {
                    a.push(*row + i, *k, *v);
                }
            }
            *row += rhs.len();
        };
        for (rhs, cols) in &self.eq_rows {
            emit(rhs, cols, &mut row);
        }
        if eq_dim > 0 {
            cones.push(Cone::Zero(eq_dim));
        }
        for (rhs, cols) in &self.nonneg_rows {
            emit(rhs, cols, &mut row);
        }
        if nn_dim > 0 {
            cones.push(Cone::Nonneg(nn_dim));
        }
        for (side, rhs, cols) in &self.psd_rows {
            emit(rhs, cols, &mut row);
            cones.push(Cone::Psd(*side));
        }
        let mut c = DVector::zeros(n);
        let (mut offset, mut maximize) = (0.0, false);
        if let Some((obj, max)) = &self.objective {
            let sign = if *max { -1.0 } else { 1.0 };
            for (k, m) in obj.coefficients() {
                c[k] = sign * m[(0, 0)];
            }
            offset = obj.constant[(0, 0)];
            maximize = *max;
        }
        a.compress();
        ConicProgram {
            c,
            a,
            b,
            cones,
            blocks: self.blocks,
            objective_offset: offset,
            maximize,
            margin: self.margin,
        }
    }
}
