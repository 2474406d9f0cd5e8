//! Affine matrix expressions in the decision blocks of a program.

use nalgebra::DMatrix;
use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use crate::program::{VarId, VarShape};

/// One linear term of an [`AffineExpr`].
#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    /// `left · op(V) · right`, where `op` is the identity or the transpose.
    Product {
        var: VarId,
        left: DMatrix<f64>,
        right: DMatrix<f64>,
        transpose: bool,
    },
    /// `Tr(weight · V) · coef`.
    Trace {
        var: VarId,
        weight: DMatrix<f64>,
        coef: DMatrix<f64>,
    },
}

impl Term {
    pub fn var(&self) -> VarId {
        match self {
            Term::Product { var, .. } | Term::Trace { var, .. } => *var,
        }
    }

    fn transpose(&self) -> Term {
        match self {
            Term::Product { var, left, right, transpose } => Term::Product {
                var: *var,
                left: right.transpose(),
                right: left.transpose(),
                transpose: !transpose,
            },
            Term::Trace { var, weight, coef } => Term::Trace {
                var: *var,
                weight: weight.clone(),
                coef: coef.transpose(),
            },
        }
    }

    fn left_mul(&self, m: &DMatrix<f64>) -> Term {
        match self {
            Term::Product { var, left, right, transpose } => Term::Product {
                var: *var,
                left: m * left,
                right: right.clone(),
                transpose: *transpose,
            },
            Term::Trace { var, weight, coef } => Term::Trace {
                var: *var,
                weight: weight.clone(),
                coef: m * coef,
            },
        }
    }

    fn right_mul(&self, m: &DMatrix<f64>) -> Term {
        match self {
            Term::Product { var, left, right, transpose } => Term::Product {
                var: *var,
                left: left.clone(),
                right: right * m,
                transpose: *transpose,
            },
            Term::Trace { var, weight, coef } => Term::Trace {
                var: *var,
                weight: weight.clone(),
                coef: coef * m,
            },
        }
    }

    fn scale(&self, a: f64) -> Term {
        match self {
            Term::Product { var, left, right, transpose } => Term::Product {
                var: *var,
                left: left * a,
                right: right.clone(),
                transpose: *transpose,
            },
            Term::Trace { var, weight, coef } => Term::Trace {
                var: *var,
                weight: weight.clone(),
                coef: coef * a,
            },
        }
    }

    fn eval(&self, value: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Term::Product { left, right, transpose, .. } => {
                if *transpose {
                    left * value.transpose() * right
                } else {
                    left * value * right
                }
            }
            Term::Trace { weight, coef, .. } => coef * (weight * value).trace(),
        }
    }

    /// Coefficient matrix of local coordinate `k` of the term's variable.
    fn coefficient(&self, k: usize) -> DMatrix<f64> {
        let shape = self.var().shape;
        match self {
            Term::Product { left, right, transpose, .. } => {
                let outer = |i: usize, j: usize| {
                    let (i, j) = if *transpose { (j, i) } else { (i, j) };
                    left.column(i) * right.row(j)
                };
                match shape {
                    VarShape::Scalar => left * right,
                    VarShape::Rect(r, _) => outer(k % r, k / r),
                    VarShape::Symmetric(_) => {
                        let (i, j) = shape.sym_pair(k);
                        if i == j {
                            outer(i, i)
                        } else {
                            outer(i, j) + outer(j, i)
                        }
                    }
                }
            }
            Term::Trace { weight, coef, .. } => {
                let w = match shape {
                    VarShape::Scalar => weight[(0, 0)],
                    VarShape::Rect(r, _) => weight[(k / r, k % r)],
                    VarShape::Symmetric(_) => {
                        let (i, j) = shape.sym_pair(k);
                        if i == j {
                            weight[(i, i)]
                        } else {
                            weight[(i, j)] + weight[(j, i)]
                        }
                    }
                };
                coef * w
            }
        }
    }
}

/// `constant + Σ terms`, a matrix-valued affine function of the decision blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineExpr {
    pub constant: DMatrix<f64>,
    pub terms: Vec<Term>,
}

impl AffineExpr {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::constant(DMatrix::zeros(rows, cols))
    }

    pub fn constant(m: DMatrix<f64>) -> Self {
        Self { constant: m, terms: Vec::new() }
    }

    pub fn scalar_constant(v: f64) -> Self {
        Self::constant(DMatrix::from_element(1, 1, v))
    }

    /// The block itself.
    pub fn var(var: VarId) -> Self {
        let (r, c) = var.shape.dims();
        Self::product(&DMatrix::identity(r, r), var, &DMatrix::identity(c, c))
    }

    /// `left · V · right`.
    pub fn product(left: &DMatrix<f64>, var: VarId, right: &DMatrix<f64>) -> Self {
        let (r, c) = var.shape.dims();
        assert_eq!(left.ncols(), r, "left factor does not match block rows");
        assert_eq!(right.nrows(), c, "right factor does not match block cols");
        Self {
            constant: DMatrix::zeros(left.nrows(), right.ncols()),
            terms: vec![Term::Product {
                var,
                left: left.clone(),
                right: right.clone(),
                transpose: false,
            }],
        }
    }

    /// `left · Vᵀ · right`.
    pub fn product_t(left: &DMatrix<f64>, var: VarId, right: &DMatrix<f64>) -> Self {
        let (r, c) = var.shape.dims();
        assert_eq!(left.ncols(), c, "left factor does not match block cols");
        assert_eq!(right.nrows(), r, "right factor does not match block rows");
        Self {
            constant: DMatrix::zeros(left.nrows(), right.ncols()),
            terms: vec![Term::Product {
                var,
                left: left.clone(),
                right: right.clone(),
                transpose: true,
            }],
        }
    }

    /// `v · coef` for a scalar block `v`.
    pub fn scaled(var: VarId, coef: &DMatrix<f64>) -> Self {
        assert_eq!(var.shape, VarShape::Scalar, "scaled() needs a scalar block");
        Self {
            constant: DMatrix::zeros(coef.nrows(), coef.ncols()),
            terms: vec![Term::Trace {
                var,
                weight: DMatrix::from_element(1, 1, 1.0),
                coef: coef.clone(),
            }],
        }
    }

    /// The 1×1 expression `Tr(weight · V)`.
    pub fn trace(weight: &DMatrix<f64>, var: VarId) -> Self {
        let (r, c) = var.shape.dims();
        assert_eq!((weight.nrows(), weight.ncols()), (c, r), "trace weight shape");
        Self {
            constant: DMatrix::zeros(1, 1),
            terms: vec![Term::Trace {
                var,
                weight: weight.clone(),
                coef: DMatrix::from_element(1, 1, 1.0),
            }],
        }
    }

    pub fn nrows(&self) -> usize {
        self.constant.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.constant.ncols()
    }

    pub fn transpose(&self) -> Self {
        Self {
            constant: self.constant.transpose(),
            terms: self.terms.iter().map(Term::transpose).collect(),
        }
    }

    /// `m · self`.
    pub fn left_mul(&self, m: &DMatrix<f64>) -> Self {
        assert_eq!(m.ncols(), self.nrows(), "left_mul shape mismatch");
        Self {
            constant: m * &self.constant,
            terms: self.terms.iter().map(|t| t.left_mul(m)).collect(),
        }
    }

    /// `self · m`.
    pub fn right_mul(&self, m: &DMatrix<f64>) -> Self {
        assert_eq!(self.ncols(), m.nrows(), "right_mul shape mismatch");
        Self {
            constant: &self.constant * m,
            terms: self.terms.iter().map(|t| t.right_mul(m)).collect(),
        }
    }

    /// Evaluates the expression given a value for every referenced block.
    pub fn eval(&self, value: &impl Fn(VarId) -> DMatrix<f64>) -> DMatrix<f64> {
        let mut out = self.constant.clone();
        for t in &self.terms {
            out += t.eval(&value(t.var()));
        }
        out
    }

    /// Coefficient matrix of every global coordinate the expression touches.
    pub fn coefficients(&self) -> BTreeMap<usize, DMatrix<f64>> {
        let mut map: BTreeMap<usize, DMatrix<f64>> = BTreeMap::new();
        for t in &self.terms {
            let var = t.var();
            for k in 0..var.shape.len() {
                let m = t.coefficient(k);
                map.entry(var.offset + k)
                    .and_modify(|acc| *acc += &m)
                    .or_insert(m);
            }
        }
        map
    }
}

impl Add for AffineExpr {
    type Output = AffineExpr;
    fn add(mut self, rhs: AffineExpr) -> AffineExpr {
        assert_eq!(
            (self.nrows(), self.ncols()),
            (rhs.nrows(), rhs.ncols()),
            "adding expressions of different shapes"
        );
        self.constant += rhs.constant;
        self.terms.extend(rhs.terms);
        self
    }
}

impl Neg for AffineExpr {
    type Output = AffineExpr;
    fn neg(self) -> AffineExpr {
        self * -1.0
    }
}

impl Sub for AffineExpr {
    type Output = AffineExpr;
    fn sub(self, rhs: AffineExpr) -> AffineExpr {
        self + (-rhs)
    }
}

impl Mul<f64> for AffineExpr {
    type Output = AffineExpr;
    fn mul(self, a: f64) -> AffineExpr {
        AffineExpr {
            constant: self.constant * a,
            terms: self.terms.iter().map(|t| t.scale(a)).collect(),
        }
    }
}

impl Add<DMatrix<f64>> for AffineExpr {
    type Output = AffineExpr;
    fn add(self, rhs: DMatrix<f64>) -> AffineExpr {
        self + AffineExpr::constant(rhs)
    }
}

impl Sub<DMatrix<f64>> for AffineExpr {
    type Output = AffineExpr;
    fn sub(self, rhs: DMatrix<f64>) -> AffineExpr {
        self + AffineExpr::constant(-rhs)
    }
}
