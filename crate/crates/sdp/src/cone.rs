use crate::svec::svec_len;

/// One factor of the product cone, in row order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    /// `s = 0` (equality rows).
    Zero(usize),
    /// `s ≥ 0` componentwise.
    Nonneg(usize),
    /// `smat(s) ⪰ 0` for a `side × side` matrix; occupies `side(side+1)/2` rows.
    Psd(usize),
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Zero(d) | Cone::Nonneg(d) => d,
            Cone::Psd(side) => svec_len(side),
        }
    }
}
