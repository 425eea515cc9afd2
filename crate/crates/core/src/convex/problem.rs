//! Problem container for dense Hermitian-block conic programs.
//!
//! Variables are a list of Hermitian PSD blocks plus nonnegative scalars.
//! The objective and every constraint are real linear functionals built from
//! trace pairings `tr(M X)` with Hermitian `M`, and plain scalar coefficients.

use std::io::Write;

use crate::convex::hermitian::{frob_inner, HermitianMatrix};
use crate::error::{Error, Result};
use crate::scalar::{CMat, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// `Σ_b tr(M_b X_b) + Σ_s c_s x_s`.
#[derive(Debug, Clone)]
pub struct LinearForm<T: Real> {
    pub blocks: Vec<(usize, CMat<T>)>,
    pub scalars: Vec<(usize, T)>,
}

impl<T: Real> Default for LinearForm<T> {
    fn default() -> Self {
        LinearForm {
            blocks: Vec::new(),
            scalars: Vec::new(),
        }
    }
}

impl<T: Real> LinearForm<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `tr(M X_block)`; the matrix is symmetrized and merged with any
    /// existing term for the same block.
    pub fn add_block(&mut self, block: usize, m: CMat<T>) -> &mut Self {
        let m = HermitianMatrix::new(m).into_inner();
        match self.blocks.iter_mut().find(|(b, _)| *b == block) {
            Some((_, existing)) => *existing += m,
            None => self.blocks.push((block, m)),
        }
        self
    }

    pub fn add_scalar(&mut self, index: usize, coeff: T) -> &mut Self {
        match self.scalars.iter_mut().find(|(s, _)| *s == index) {
            Some((_, existing)) => *existing += coeff,
            None => self.scalars.push((index, coeff)),
        }
        self
    }

    pub fn block(mut self, block: usize, m: CMat<T>) -> Self {
        self.add_block(block, m);
        self
    }

    pub fn scalar(mut self, index: usize, coeff: T) -> Self {
        self.add_scalar(index, coeff);
        self
    }

    pub fn block_matrix(&self, block: usize) -> Option<&CMat<T>> {
        self.blocks.iter().find(|(b, _)| *b == block).map(|(_, m)| m)
    }

    pub fn scalar_coeff(&self, index: usize) -> T {
        self.scalars
            .iter()
            .find(|(s, _)| *s == index)
            .map(|(_, c)| *c)
            .unwrap_or_else(T::zero)
    }

    pub fn eval(&self, blocks: &[HermitianMatrix<T>], scalars: &[T]) -> T {
        let mut acc = T::zero();
        for (b, m) in &self.blocks {
            acc += frob_inner(m, blocks[*b].as_matrix());
        }
        for (s, c) in &self.scalars {
            acc += *c * scalars[*s];
        }
        acc
    }
}

#[derive(Debug, Clone)]
pub struct Constraint<T: Real> {
    pub form: LinearForm<T>,
    pub sense: Sense,
    pub rhs: T,
}

/// Minimize a linear objective over PSD blocks and nonnegative scalars.
#[derive(Debug, Clone)]
pub struct ConicProblem<T: Real> {
    pub psd_blocks: Vec<usize>,
    pub scalar_vars: usize,
    pub objective: LinearForm<T>,
    pub constraints: Vec<Constraint<T>>,
}

impl<T: Real> ConicProblem<T> {
    pub fn new(psd_blocks: Vec<usize>, scalar_vars: usize) -> Self {
        ConicProblem {
            psd_blocks,
            scalar_vars,
            objective: LinearForm::new(),
            constraints: Vec::new(),
        }
    }

    pub fn minimize(&mut self, objective: LinearForm<T>) {
        self.objective = objective;
    }

    pub fn add_constraint(&mut self, form: LinearForm<T>, sense: Sense, rhs: T) -> usize {
        self.constraints.push(Constraint { form, sense, rhs });
        self.constraints.len() - 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.psd_blocks.is_empty() && self.scalar_vars == 0 {
            return Err(Error::Domain("conic problem has no variables".into()));
        }
        if self.psd_blocks.iter().any(|&n| n == 0) {
            return Err(Error::Domain("zero-dimensional PSD block".into()));
        }
        let forms = std::iter::once(&self.objective).chain(self.constraints.iter().map(|c| &c.form));
        for f in forms {
            for (b, m) in &f.blocks {
                let n = *self
                    .psd_blocks
                    .get(*b)
                    .ok_or_else(|| Error::Domain(format!("block index {b} out of range")))?;
                if m.nrows() != n || m.ncols() != n {
                    return Err(Error::Domain(format!("pairing matrix for block {b} has wrong shape")));
                }
            }
            if let Some((s, _)) = f.scalars.iter().find(|(s, _)| *s >= self.scalar_vars) {
                return Err(Error::Domain(format!("scalar index {s} out of range")));
            }
        }
        if self.constraints.iter().any(|c| !c.rhs.is_finite()) {
            return Err(Error::Domain("non-finite right-hand side".into()));
        }
        Ok(())
    }

    /// Signed violation of each constraint at a point (positive = violated).
    pub fn violations(&self, blocks: &[HermitianMatrix<T>], scalars: &[T]) -> Vec<T> {
        self.constraints
            .iter()
            .map(|c| {
                let lhs = c.form.eval(blocks, scalars);
                match c.sense {
                    Sense::Le => lhs - c.rhs,
                    Sense::Ge => c.rhs - lhs,
                    Sense::Eq => (lhs - c.rhs).abs(),
                }
            })
            .collect()
    }

    /// Debug dump as a sparse triplet list.
    ///
    /// Line format: `obj|con <index> block <b> <i> <j> <re> <im>` for
    /// upper-triangle pairing entries, `obj|con <index> scalar <s> <coeff>`,
    /// and `rhs <index> <le|ge|eq> <value>`.
    pub fn write_triplets<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "# blocks {:?} scalars {} constraints {}",
            self.psd_blocks,
            self.scalar_vars,
            self.constraints.len()
        )?;
        let dump = |tag: &str, idx: usize, f: &LinearForm<T>, out: &mut W| -> std::io::Result<()> {
            for (b, m) in &f.blocks {
                for i in 0..m.nrows() {
                    for j in i..m.ncols() {
                        let z = m[(i, j)];
                        if z.re != T::zero() || z.im != T::zero() {
                            writeln!(out, "{tag} {idx} block {b} {i} {j} {:e} {:e}", z.re.as_f64(), z.im.as_f64())?;
                        }
                    }
                }
            }
            for (s, c) in &f.scalars {
                writeln!(out, "{tag} {idx} scalar {s} {:e}", c.as_f64())?;
            }
            Ok(())
        };
        dump("obj", 0, &self.objective, &mut out)?;
        for (k, c) in self.constraints.iter().enumerate() {
            dump("con", k, &c.form, &mut out)?;
            let sense = match c.sense {
                Sense::Le => "le",
                Sense::Ge => "ge",
                Sense::Eq => "eq",
            };
            writeln!(out, "rhs {k} {sense} {:e}", c.rhs.as_f64())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct ConicSolution<T: Real> {
    pub status: SolveStatus,
    pub blocks: Vec<HermitianMatrix<T>>,
    pub scalars: Vec<T>,
    /// Multipliers of the constraints, in problem order.
    pub duals: Vec<T>,
    pub objective: T,
    pub dual_objective: T,
    pub gap: T,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub tol_gap: f64,
    pub tol_feas: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol_gap: 1e-7,
            tol_feas: 1e-8,
            max_iter: 100,
        }
    }
}
