//! Block-structured linear matrix inequalities.

use nalgebra::DMatrix;

use crate::expr::AffineExpr;
use crate::program::{VarId, VarShape};
use crate::SdpError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    /// `expr ⪯ 0`
    Nsd,
    /// `expr ⪰ 0`
    Psd,
}

/// Deterministic, irregular test value for a block, used to check structure.
pub(crate) fn probe_value(var: VarId, probe: usize) -> DMatrix<f64> {
    let coords: Vec<f64> = var
        .range()
        .map(|k| {
            let t = (k as f64 + 1.0) * 0.618_033_988_75 + probe as f64 * 1.414_213_562_37;
            (t * 7.0).sin() + 0.5 * (t * 3.0).cos()
        })
        .collect();
    match var.shape {
        VarShape::Scalar => DMatrix::from_element(1, 1, coords[0]),
        shape => shape.from_coords(&coords),
    }
}

/// A symmetric grid of affine blocks. Unset blocks are zero.
#[derive(Debug, Clone)]
pub struct BlockLmi {
    sizes: Vec<usize>,
    grid: Vec<Vec<Option<AffineExpr>>>,
}

impl BlockLmi {
    pub fn new(sizes: &[usize]) -> Self {
        let k = sizes.len();
        Self { sizes: sizes.to_vec(), grid: vec![vec![None; k]; k] }
    }

    pub fn side(&self) -> usize {
        self.sizes.iter().sum()
    }

    fn check_shape(&self, i: usize, j: usize, e: &AffineExpr) {
        assert_eq!(
            (e.nrows(), e.ncols()),
            (self.sizes[i], self.sizes[j]),
            "block ({i}, {j}) has the wrong shape"
        );
    }

    /// Sets block `(i, j)` and, when off-diagonal, its mirror `(j, i)` to the transpose.
    pub fn set(&mut self, i: usize, j: usize, e: AffineExpr) {
        self.check_shape(i, j, &e);
        if i != j {
            self.grid[j][i] = Some(e.transpose());
        }
        self.grid[i][j] = Some(e);
    }

    /// Sets block `(i, j)` alone. The grid is checked for symmetry at assembly.
    pub fn set_raw(&mut self, i: usize, j: usize, e: AffineExpr) {
        self.check_shape(i, j, &e);
        self.grid[i][j] = Some(e);
    }

    /// Expands the grid into a single square expression.
    pub fn assemble(&self) -> Result<AffineExpr, SdpError> {
        let k = self.sizes.len();
        for i in 0..k {
            for j in i..k {
                if !self.mirror_ok(i, j) {
                    return Err(SdpError::AsymmetricStructure { row: j, col: i });
                }
            }
        }
        let side = self.side();
        let starts: Vec<usize> = self
            .sizes
            .iter()
            .scan(0, |acc, s| {
                let start = *acc;
                *acc += s;
                Some(start)
            })
            .collect();
        let embed = |i: usize| {
            let mut p = DMatrix::zeros(side, self.sizes[i]);
            for r in 0..self.sizes[i] {
                p[(starts[i] + r, r)] = 1.0;
            }
            p
        };
        let mut out = AffineExpr::zeros(side, side);
        for i in 0..k {
            for j in 0..k {
                if let Some(e) = &self.grid[i][j] {
                    out = out + e.left_mul(&embed(i)).right_mul(&embed(j).transpose());
                }
            }
        }
        Ok(out)
    }

    fn mirror_ok(&self, i: usize, j: usize) -> bool {
        match (&self.grid[i][j], &self.grid[j][i]) {
            (None, None) => true,
            (Some(a), Some(b)) => (0..2).all(|probe| {
                let va = a.eval(&|v| probe_value(v, probe));
                let vb = b.eval(&|v| probe_value(v, probe));
                (va.transpose() - &vb).amax() <= 1e-9 * va.amax().max(1.0)
            }),
            (Some(a), None) | (None, Some(a)) => {
                (0..2).all(|probe| a.eval(&|v| probe_value(v, probe)).amax() == 0.0)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Cone, ProgramBuilder};

    #[test]
    fn four_block_scalar_instance() {
        // 1-state, 1-input discounted LQR inequality, every block 1×1.
        let (a, b, q, r, gamma) = (0.9, 1.0, 1.0, 1.0, 0.95);
        let mut pb = ProgramBuilder::new();
        let y = pb.symmetric("Y", 1);
        let m = pb.rect("M", 1, 1);
        let one = DMatrix::from_element(1, 1, 1.0);
        let mut lmi = BlockLmi::new(&[1, 1, 1, 1]);
        lmi.set(0, 0, -AffineExpr::var(y));
        lmi.set(0, 1, AffineExpr::var(y));
        lmi.set(0, 2, AffineExpr::var(m).transpose());
        lmi.set(
            0,
            3,
            AffineExpr::product(&(&one * a), y, &one) + AffineExpr::product(&(&one * b), m, &one),
        );
        lmi.set(1, 1, AffineExpr::constant(&one * (-1.0 / q)));
        lmi.set(2, 2, AffineExpr::constant(&one * (-1.0 / r)));
        lmi.set(3, 3, AffineExpr::var(y) * (-1.0 / gamma));
        assert_eq!(lmi.side(), 4);
        pb.block_lmi(&lmi, Sense::Nsd).unwrap();
        assert_eq!(pb.build().cones, vec![Cone::Psd(4)]);
    }

    #[test]
    fn set_raw_mismatch_is_rejected() {
        let mut pb = ProgramBuilder::new();
        let y = pb.symmetric("Y", 2);
        let f = pb.rect("F", 2, 2);
        let mut lmi = BlockLmi::new(&[2, 2]);
        lmi.set_raw(0, 0, AffineExpr::var(y));
        lmi.set_raw(0, 1, AffineExpr::var(f));
        lmi.set_raw(1, 0, AffineExpr::var(f));
        assert!(matches!(lmi.assemble(), Err(SdpError::AsymmetricStructure { .. })));
        lmi.set_raw(1, 0, AffineExpr::var(f).transpose());
        assert!(lmi.assemble().is_ok());
    }

    #[test]
    fn missing_mirror_is_rejected() {
        let mut pb = ProgramBuilder::new();
        let f = pb.rect("F", 1, 1);
        let mut lmi = BlockLmi::new(&[1, 1]);
        lmi.set_raw(0, 1, AffineExpr::var(f));
        assert!(lmi.assemble().is_err());
    }
}
