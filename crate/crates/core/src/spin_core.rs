//! Collective spin basis for the maximal sector `S = N/2`, the `S_z` and
//! `S_x^2` operators, and the Lipkin-Meshkov-Glick Hamiltonians acting on it.
//!
//! Operators use angular-momentum normalization: `S_z` has eigenvalues
//! `-N/2 ..= N/2`. Every Hamiltonian here has the form
//!
//! ```text
//! H = exchange * S_x^2 + field * S_z + shift * I,   exchange = -4(1 - alpha)/N
//! ```
//!
//! and conserves the parity `(-1)^(S+m)`. Inside a parity block the basis
//! steps `m` by two, so `S_x^2` is tridiagonal there.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tridiagonal::SymTridiagonal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockTag {
    Full,
    Even,
    Odd,
}

impl From<Parity> for BlockTag {
    fn from(p: Parity) -> Self {
        match p {
            Parity::Even => BlockTag::Even,
            Parity::Odd => BlockTag::Odd,
        }
    }
}

/// Which qubit state the environment evolves under: `|0>` leaves the field
/// at `alpha`, `|1>` shifts it to `alpha + lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Unperturbed,
    Coupled,
}

/// Constant energy offset convention for the coupled branch.
///
/// `Critical` adds `(alpha + lambda) N / 2` so the mean-field separatrix of
/// the quenched Hamiltonian sits at zero energy. `Interaction` omits it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Frame {
    Interaction,
    #[default]
    Critical,
}

impl std::str::FromStr for Frame {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "critical" => Ok(Frame::Critical),
            "interaction" => Ok(Frame::Interaction),
            other => Err(format!("unknown frame `{other}` (expected critical|interaction)")),
        }
    }
}

impl std::fmt::Display for Frame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Frame::Critical => "critical",
            Frame::Interaction => "interaction",
        })
    }
}

/// `|S = N/2, m>` states ordered by ascending `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinBasis {
    n: usize,
    m_values: Vec<i64>,
}

impl SpinBasis {
    pub fn new(n: usize) -> Result<Self> {
        validate_size(n)?;
        let s = (n / 2) as i64;
        Ok(SpinBasis {
            n,
            m_values: (-s..=s).collect(),
        })
    }

    /// Environment size `N`.
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn spin(&self) -> f64 {
        self.n as f64 / 2.0
    }

    pub fn dim(&self) -> usize {
        self.m_values.len()
    }

    pub fn m_values(&self) -> &[i64] {
        &self.m_values
    }

    pub fn parity(&self, index: usize) -> Parity {
        // S + m == index for the ascending ordering
        if index.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    /// Indices (into the full basis) of the states with the given parity.
    pub fn block_indices(&self, parity: Parity) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.parity(i) == parity).collect()
    }

    pub fn block_dim(&self, parity: Parity) -> usize {
        match parity {
            Parity::Even => self.n / 2 + 1,
            Parity::Odd => self.n / 2,
        }
    }

    /// `m` values of the states in a block, ascending.
    pub fn block(&self, block: BlockTag) -> Vec<i64> {
        self.indices(block).into_iter().map(|i| self.m_values[i]).collect()
    }

    fn indices(&self, block: BlockTag) -> Vec<usize> {
        match block {
            BlockTag::Full => (0..self.dim()).collect(),
            BlockTag::Even => self.block_indices(Parity::Even),
            BlockTag::Odd => self.block_indices(Parity::Odd),
        }
    }
}

pub fn build_basis(n: usize) -> Result<SpinBasis> {
    SpinBasis::new(n)
}

pub fn validate_size(n: usize) -> Result<()> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::invalid(
            "N",
            format!("environment size must be even and at least 2, got {n}"),
        ));
    }
    Ok(())
}

pub fn validate_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(
            "alpha",
            format!("control parameter must lie in [0, 1], got {alpha}"),
        ));
    }
    Ok(())
}

pub fn validate_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::invalid(
            "lambda",
            format!("coupling must be finite and non-negative, got {lambda}"),
        ));
    }
    Ok(())
}

/// Dense real symmetric matrix on the full space or one parity block.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    block: BlockTag,
    entries: DMatrix<f64>,
}

impl OperatorMatrix {
    /// Wraps `entries`, rejecting non-square or non-symmetric input.
    pub fn new(block: BlockTag, entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::invalid("matrix", "operator matrix must be square"));
        }
        let m = OperatorMatrix { block, entries };
        if !m.is_exactly_symmetric() {
            return Err(Error::invalid("matrix", "operator matrix must be symmetric"));
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn block(&self) -> BlockTag {
        self.block
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn is_exactly_symmetric(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..i).all(|j| self.entries[(i, j)] == self.entries[(j, i)]))
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    /// Restricts a full-space operator to one parity block.
    pub fn restrict(&self, basis: &SpinBasis, parity: Parity) -> Result<OperatorMatrix> {
        if self.block != BlockTag::Full || self.dim() != basis.dim() {
            return Err(Error::invalid(
                "matrix",
                "only full-space operators matching the basis can be restricted",
            ));
        }
        let idx = basis.block_indices(parity);
        let entries = DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.entries[(idx[i], idx[j])]);
        Ok(OperatorMatrix {
            block: parity.into(),
            entries,
        })
    }
}

/// `<m+1| S_x |m> = 1/2 sqrt(S(S+1) - m(m+1))`.
fn ladder(s: f64, m: f64) -> f64 {
    0.5 * (s * (s + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
}

/// `<m| S_x^2 |m>` assembled from the two intermediate states `m +- 1`.
fn sx_sq_diagonal(s: f64, m: f64) -> f64 {
    let up = ladder(s, m);
    let down = ladder(s, m - 1.0);
    up * up + down * down
}

/// `<m+2| S_x^2 |m>`.
fn sx_sq_step(s: f64, m: f64) -> f64 {
    ladder(s, m + 1.0) * ladder(s, m)
}

/// `S_x` on the full space.
pub fn build_sx(basis: &SpinBasis) -> OperatorMatrix {
    let s = basis.spin();
    let d = basis.dim();
    let mut entries = DMatrix::zeros(d, d);
    for (i, &m) in basis.m_values().iter().enumerate().take(d - 1) {
        let v = ladder(s, m as f64);
        entries[(i + 1, i)] = v;
        entries[(i, i + 1)] = v;
    }
    OperatorMatrix {
        block: BlockTag::Full,
        entries,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveOperators {
    pub sz: OperatorMatrix,
    pub sx_sq: OperatorMatrix,
}

pub fn build_collective_operators(basis: &SpinBasis) -> CollectiveOperators {
    let s = basis.spin();
    let d = basis.dim();
    let m = basis.m_values();
    let sz = DMatrix::from_fn(d, d, |i, j| if i == j { m[i] as f64 } else { 0.0 });
    let mut sx_sq = DMatrix::zeros(d, d);
    for i in 0..d {
        sx_sq[(i, i)] = sx_sq_diagonal(s, m[i] as f64);
        if i + 2 < d {
            let v = sx_sq_step(s, m[i] as f64);
            sx_sq[(i + 2, i)] = v;
            sx_sq[(i, i + 2)] = v;
        }
    }
    CollectiveOperators {
        sz: OperatorMatrix {
            block: BlockTag::Full,
            entries: sz,
        },
        sx_sq: OperatorMatrix {
            block: BlockTag::Full,
            entries: sx_sq,
        },
    }
}

/// Coefficients of `exchange * S_x^2 + field * S_z + shift * I` at size `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectiveHamiltonian {
    n: usize,
    pub exchange: f64,
    pub field: f64,
    pub shift: f64,
}

impl CollectiveHamiltonian {
    /// The bath Hamiltonian `-(4(1-alpha)/N) S_x^2 + alpha (S_z + N/2)`.
    pub fn lmg(n: usize, alpha: f64) -> Result<Self> {
        validate_size(n)?;
        validate_alpha(alpha)?;
        Ok(CollectiveHamiltonian {
            n,
            exchange: exchange(n, alpha),
            field: alpha,
            shift: alpha * n as f64 / 2.0,
        })
    }

    /// Effective bath Hamiltonian conditioned on the qubit state.
    ///
    /// The frame only affects the coupled branch.
    pub fn effective(
        n: usize,
        alpha: f64,
        lambda: f64,
        branch: Branch,
        frame: Frame,
    ) -> Result<Self> {
        validate_size(n)?;
        validate_alpha(alpha)?;
        validate_lambda(lambda)?;
        let (field, shift) = match (branch, frame) {
            (Branch::Unperturbed, _) => (alpha, 0.0),
            (Branch::Coupled, Frame::Interaction) => (alpha + lambda, 0.0),
            (Branch::Coupled, Frame::Critical) => (alpha + lambda, (alpha + lambda) * n as f64 / 2.0),
        };
        Ok(CollectiveHamiltonian {
            n,
            exchange: exchange(n, alpha),
            field,
            shift,
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Dense matrix on the requested block.
    pub fn matrix(&self, basis: &SpinBasis, block: BlockTag) -> Result<OperatorMatrix> {
        if basis.size() != self.n {
            return Err(Error::invalid("N", "basis size does not match Hamiltonian"));
        }
        let ops = build_collective_operators(basis);
        let d = basis.dim();
        let full = DMatrix::from_fn(d, d, |i, j| {
            let mut v = self.exchange * ops.sx_sq.entries[(i, j)] + self.field * ops.sz.entries[(i, j)];
            if i == j {
                v += self.shift;
            }
            v
        });
        let full = OperatorMatrix {
            block: BlockTag::Full,
            entries: full,
        };
        match block {
            BlockTag::Full => Ok(full),
            BlockTag::Even => full.restrict(basis, Parity::Even),
            BlockTag::Odd => full.restrict(basis, Parity::Odd),
        }
    }

    /// The parity block as a symmetric tridiagonal matrix, built directly
    /// from the closed-form elements without assembling the dense matrix.
    pub fn block_tridiagonal(&self, parity: Parity) -> SymTridiagonal {
        let s = self.n as f64 / 2.0;
        let first = match parity {
            Parity::Even => -s,
            Parity::Odd => -s + 1.0,
        };
        let dim = match parity {
            Parity::Even => self.n / 2 + 1,
            Parity::Odd => self.n / 2,
        };
        let ms: Vec<f64> = (0..dim).map(|k| first + 2.0 * k as f64).collect();
        let diag = ms
            .iter()
            .map(|&m| self.exchange * sx_sq_diagonal(s, m) + self.field * m + self.shift)
            .collect();
        let off = ms
            .iter()
            .take(dim.saturating_sub(1))
            .map(|&m| self.exchange * sx_sq_step(s, m))
            .collect();
        SymTridiagonal::from_parts(diag, off)
    }

    /// `S_z` restricted to a parity block, as the diagonal `m` values.
    pub fn block_sz(&self, parity: Parity) -> Vec<f64> {
        block_m_values(self.n, parity)
    }
}

pub(crate) fn block_m_values(n: usize, parity: Parity) -> Vec<f64> {
    let s = n as f64 / 2.0;
    let (first, dim) = match parity {
        Parity::Even => (-s, n / 2 + 1),
        Parity::Odd => (-s + 1.0, n / 2),
    };
    (0..dim).map(|k| first + 2.0 * k as f64).collect()
}

fn exchange(n: usize, alpha: f64) -> f64 {
    -4.0 * (1.0 - alpha) / n as f64
}

/// Full-space bath Hamiltonian.
pub fn build_lmg(basis: &SpinBasis, alpha: f64) -> Result<OperatorMatrix> {
    CollectiveHamiltonian::lmg(basis.size(), alpha)?.matrix(basis, BlockTag::Full)
}

/// Full-space effective Hamiltonian of one qubit branch.
pub fn build_effective(
    basis: &SpinBasis,
    alpha: f64,
    lambda: f64,
    branch: Branch,
    frame: Frame,
) -> Result<OperatorMatrix> {
    CollectiveHamiltonian::effective(basis.size(), alpha, lambda, branch, frame)?
        .matrix(basis, BlockTag::Full)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_sq(a: &OperatorMatrix) -> DMatrix<f64> {
        a.entries() * a.entries()
    }

    #[test]
    fn basis_n2_labels() {
        let b = build_basis(2).unwrap();
        assert_eq!(b.dim(), 3);
        assert_eq!(b.m_values(), &[-1, 0, 1]);
        let p: Vec<_> = (0..3).map(|i| b.parity(i)).collect();
        assert_eq!(p, vec![Parity::Even, Parity::Odd, Parity::Even]);
    }

    #[test]
    fn basis_block_dims() {
        let b = build_basis(40).unwrap();
        assert_eq!(b.block_dim(Parity::Even), 21);
        assert_eq!(b.block_dim(Parity::Odd), 20);
        assert_eq!(b.block_indices(Parity::Even).len(), 21);
        let b = build_basis(1000).unwrap();
        assert_eq!(b.block_indices(Parity::Even).len(), 501);
    }

    #[test]
    fn basis_rejects_odd_or_zero() {
        assert!(build_basis(41).is_err());
        assert!(build_basis(0).is_err());
        assert!(build_basis(1).is_err());
    }

    #[test]
    fn collective_n2() {
        let b = build_basis(2).unwrap();
        let ops = build_collective_operators(&b);
        assert_eq!(
            ops.sz.entries(),
            &DMatrix::from_row_slice(3, 3, &[-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0])
        );
        let even = ops.sx_sq.restrict(&b, Parity::Even).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        assert!((even.entries() - want).amax() < 1e-15);
    }

    #[test]
    fn sx_sq_matches_explicit_product() {
        for n in (2..=12).step_by(2) {
            let b = build_basis(n).unwrap();
            let ops = build_collective_operators(&b);
            let brute = dense_sq(&build_sx(&b));
            assert!((ops.sx_sq.entries() - brute).amax() < 1e-12, "N={n}");
            assert!(ops.sx_sq.is_exactly_symmetric());
        }
    }

    #[test]
    fn sx_sq_trace_isotropy() {
        // tr S_x^2 = tr S^2 / 3 = S(S+1)(2S+1)/3
        for n in [2usize, 4, 6, 10, 40, 100] {
            let b = build_basis(n).unwrap();
            let ops = build_collective_operators(&b);
            let s = b.spin();
            let want = s * (s + 1.0) * (n as f64 + 1.0) / 3.0;
            assert!((ops.sx_sq.trace() - want).abs() < 1e-9 * want, "N={n}");
        }
    }

    #[test]
    fn lmg_field_only_limit() {
        let b = build_basis(2).unwrap();
        let h = build_lmg(&b, 1.0).unwrap();
        let want = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0]);
        assert!((h.entries() - want).amax() < 1e-15);
    }

    #[test]
    fn lmg_even_block_n2() {
        let b = build_basis(2).unwrap();
        let h = build_lmg(&b, 0.4).unwrap().restrict(&b, Parity::Even).unwrap();
        // alpha (S_z + 1) contributes diag(0, 0.8)
        let want = DMatrix::from_row_slice(2, 2, &[-0.6, -0.6, -0.6, 0.2]);
        assert!((h.entries() - want).amax() < 1e-14);
    }

    #[test]
    fn lmg_rejects_alpha_out_of_range() {
        let b = build_basis(4).unwrap();
        assert!(build_lmg(&b, -0.1).is_err());
        assert!(build_lmg(&b, 1.1).is_err());
        assert!(build_lmg(&b, f64::NAN).is_err());
    }

    #[test]
    fn effective_n2_interaction() {
        let b = build_basis(2).unwrap();
        let h = build_effective(&b, 0.4, 1.0, Branch::Coupled, Frame::Interaction)
            .unwrap()
            .restrict(&b, Parity::Even)
            .unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[-2.0, -0.6, -0.6, 0.8]);
        assert!((h.entries() - want).amax() < 1e-14);
    }

    #[test]
    fn effective_branches_differ_by_lambda_sz() {
        let b = build_basis(8).unwrap();
        let ops = build_collective_operators(&b);
        for &(alpha, lambda) in &[(0.3, 0.0), (0.4, 1.0), (0.7, 2.5)] {
            let h0 = build_effective(&b, alpha, lambda, Branch::Unperturbed, Frame::Critical).unwrap();
            let h1 = build_effective(&b, alpha, lambda, Branch::Coupled, Frame::Interaction).unwrap();
            let diff = h1.entries() - h0.entries() - ops.sz.entries() * lambda;
            assert!(diff.amax() < 1e-12);
            if lambda == 0.0 {
                assert_eq!(h0, h1);
            }
        }
    }

    #[test]
    fn parity_blocks_decouple() {
        let b = build_basis(10).unwrap();
        let h = build_effective(&b, 0.35, 0.8, Branch::Coupled, Frame::Critical).unwrap();
        for i in 0..b.dim() {
            for j in 0..b.dim() {
                if b.parity(i) != b.parity(j) {
                    assert_eq!(h.get(i, j), 0.0);
                }
            }
        }
        assert!(h.is_exactly_symmetric());
    }

    #[test]
    fn tridiagonal_block_matches_dense_block() {
        for n in [2usize, 4, 10, 24] {
            let b = build_basis(n).unwrap();
            let ham = CollectiveHamiltonian::effective(n, 0.45, 0.7, Branch::Coupled, Frame::Critical).unwrap();
            for parity in [Parity::Even, Parity::Odd] {
                let dense = ham.matrix(&b, parity.into()).unwrap();
                let tri = ham.block_tridiagonal(parity).to_dense();
                assert!((dense.entries() - tri).amax() < 1e-12, "N={n} {parity:?}");
            }
        }
    }

    #[test]
    fn block_sz_values() {
        let ham = CollectiveHamiltonian::lmg(6, 0.2).unwrap();
        assert_eq!(ham.block_sz(Parity::Even), vec![-3.0, -1.0, 1.0, 3.0]);
        assert_eq!(ham.block_sz(Parity::Odd), vec![-2.0, 0.0, 2.0]);
        let b = build_basis(6).unwrap();
        assert_eq!(b.block(BlockTag::Odd), vec![-2, 0, 2]);
    }

    #[test]
    fn operator_matrix_rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0000001, 1.0]);
        assert!(OperatorMatrix::new(BlockTag::Full, m).is_err());
    }
}
