//! Small dense semidefinite programs over Hermitian matrix variables.
//!
//! ```text
//! minimize    sum_v Re tr(C_v X_v)
//! subject to  sum_v A_cv(X_v) + B_c  is PSD   for every constraint c
//! ```
//!
//! Each variable is parametrized by real coordinates in a Hermitian basis;
//! complex constraint blocks are embedded as `[[S, -K], [K, S]]` and the
//! whole problem is handed to the homogeneous self-dual solver in [`hsd`].

pub mod dense;
pub mod hsd;

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{ComplexMatrix, C64, ONE};
use dense::RMat;
use hsd::{Entry, RealBlock, RealSdp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Field {
    Real,
    Complex,
}

/// Hermiticity-preserving linear map given by its action.
pub type LinearMap = Arc<dyn Fn(&ComplexMatrix) -> ComplexMatrix + Send + Sync>;

pub fn identity_map() -> LinearMap {
    Arc::new(|x: &ComplexMatrix| x.clone())
}

pub fn scaled_identity_map(c: f64) -> LinearMap {
    Arc::new(move |x: &ComplexMatrix| x.scale_real(c))
}

/// `X -> [tr X]` as a 1x1 matrix.
pub fn trace_map() -> LinearMap {
    Arc::new(|x: &ComplexMatrix| ComplexMatrix::diag(&[C64::new(x.trace().re, 0.0)]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VarId(pub usize);

#[derive(Debug, Clone)]
struct Variable {
    name: String,
    dim: usize,
    field: Field,
}

#[derive(Clone)]
struct Constraint {
    name: String,
    dim: usize,
    terms: Vec<(VarId, LinearMap)>,
    constant: ComplexMatrix,
}

#[derive(Clone, Default)]
pub struct SdpProblem {
    variables: Vec<Variable>,
    objective: Vec<Option<ComplexMatrix>>,
    constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iterations: usize,
    pub feas_tol: f64,
    pub gap_tol: f64,
    /// Infeasibility is declared once `tau / kappa` drops below this.
    pub infeasibility_ratio: f64,
    /// Iterative-refinement passes on each Newton system.
    pub refinement_steps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            feas_tol: 1e-8,
            gap_tol: 1e-7,
            infeasibility_ratio: 1e-9,
            refinement_steps: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverStatus {
    Optimal,
    Infeasible,
    /// Dual infeasible: the objective is unbounded below.
    Unbounded,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SolverStatus,
    pub primal_value: f64,
    pub dual_value: f64,
    pub values: Vec<ComplexMatrix>,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub options: SolverOptions,
}

impl SdpSolution {
    pub fn value(&self, v: VarId) -> &ComplexMatrix {
        &self.values[v.0]
    }

    /// Turn any non-optimal status into [`Error::Solver`].
    /// Residuals and gap within the tolerances of `opts`.
    pub fn meets(&self, opts: &SolverOptions) -> bool {
        self.primal_residual <= opts.feas_tol
            && self.dual_residual <= opts.feas_tol
            && self.gap <= opts.gap_tol
    }

    pub fn require_optimal(self) -> Result<Self> {
        if self.status == SolverStatus::Optimal {
            Ok(self)
        } else {
            Err(Error::Solver {
                status: self.status,
                iterations: self.iterations,
                gap: self.gap,
                primal_residual: self.primal_residual,
                dual_residual: self.dual_residual,
            })
        }
    }
}

/// Real coordinates of a Hermitian (or real symmetric) `n x n` variable:
/// `E_pp`, `E_pq + E_qp`, and for complex variables `i E_pq - i E_qp`.
fn hermitian_basis(n: usize, field: Field) -> Vec<ComplexMatrix> {
    let mut out = Vec::new();
    for p in 0..n {
        let mut e = ComplexMatrix::zeros(n, n);
        e[(p, p)] = ONE;
        out.push(e);
    }
    for p in 0..n {
        for q in (p + 1)..n {
            let mut e = ComplexMatrix::zeros(n, n);
            e[(p, q)] = ONE;
            e[(q, p)] = ONE;
            out.push(e);
            if field == Field::Complex {
                let mut f = ComplexMatrix::zeros(n, n);
                f[(p, q)] = C64::new(0.0, 1.0);
                f[(q, p)] = C64::new(0.0, -1.0);
                out.push(f);
            }
        }
    }
    out
}

fn embed(m: &ComplexMatrix, field: Field) -> RMat {
    let n = m.rows();
    match field {
        Field::Real => RMat::from_fn(n, |i, j| m[(i, j)].re),
        Field::Complex => RMat::from_fn(2 * n, |i, j| {
            let z = m[(i % n, j % n)];
            match (i < n, j < n) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
        }),
    }
}

/// Upper-triangle entries of `c * embed(m)` for Hermitian `m`.
fn embed_entries(m: &ComplexMatrix, field: Field, c: f64) -> Vec<Entry> {
    let n = m.rows();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i..n {
            let re = c * m[(i, j)].re;
            if re != 0.0 {
                out.push((i as u32, j as u32, re));
                if field == Field::Complex {
                    out.push(((i + n) as u32, (j + n) as u32, re));
                }
            }
        }
    }
    if field == Field::Complex {
        for i in 0..n {
            for j in 0..n {
                let im = -c * m[(i, j)].im;
                if im != 0.0 {
                    out.push((i as u32, (j + n) as u32, im));
                }
            }
        }
    }
    out
}

impl SdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(&mut self, name: impl Into<String>, dim: usize, field: Field) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            dim,
            field,
        });
        self.objective.push(None);
        VarId(self.variables.len() - 1)
    }

    /// Objective contribution `Re tr(C X_v)`.
    pub fn set_objective(&mut self, v: VarId, c: ComplexMatrix) -> Result<()> {
        let dim = self.var(v)?.dim;
        if c.rows() != dim || c.cols() != dim {
            return Err(crate::error::shape_err(
                format!("{dim}x{dim} objective"),
                format!("{}x{}", c.rows(), c.cols()),
            ));
        }
        self.objective[v.0] = Some(c);
        Ok(())
    }

    /// `sum_t map_t(X_{var_t}) + constant` PSD.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, LinearMap)>,
        constant: ComplexMatrix,
    ) -> Result<()> {
        if !constant.is_square() {
            return Err(Error::InvalidArgument("constraint constant must be square".into()));
        }
        for (v, _) in &terms {
            self.var(*v)?;
        }
        self.constraints.push(Constraint {
            name: name.into(),
            dim: constant.rows(),
            terms,
            constant,
        });
        Ok(())
    }

    /// `X_v` PSD.
    pub fn add_psd(&mut self, v: VarId) -> Result<()> {
        let dim = self.var(v)?.dim;
        let name = format!("{} psd", self.variables[v.0].name);
        self.add_constraint(name, vec![(v, identity_map())], ComplexMatrix::zeros(dim, dim))
    }

    fn var(&self, v: VarId) -> Result<&Variable> {
        self.variables
            .get(v.0)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown variable {}", v.0)))
    }

    pub fn num_real_coordinates(&self) -> usize {
        self.variables
            .iter()
            .map(|v| match v.field {
                Field::Real => v.dim * (v.dim + 1) / 2,
                Field::Complex => v.dim * v.dim,
            })
            .sum()
    }

    fn to_real(&self) -> Result<(RealSdp, Vec<Vec<ComplexMatrix>>)> {
        if self.constraints.is_empty() {
            return Err(Error::InvalidArgument("problem has no constraints".into()));
        }
        let bases: Vec<Vec<ComplexMatrix>> = self
            .variables
            .iter()
            .map(|v| hermitian_basis(v.dim, v.field))
            .collect();
        let offsets: Vec<usize> = bases
            .iter()
            .scan(0, |acc, b| {
                let o = *acc;
                *acc += b.len();
                Some(o)
            })
            .collect();
        let nvars: usize = bases.iter().map(Vec::len).sum();

        let mut c = vec![0.0; nvars];
        for (vi, obj) in self.objective.iter().enumerate() {
            if let Some(cm) = obj {
                for (k, b) in bases[vi].iter().enumerate() {
                    c[offsets[vi] + k] = cm.matmul(b).trace().re;
                }
            }
        }

        let mut blocks = Vec::with_capacity(self.constraints.len());
        for con in &self.constraints {
            let mut images: Vec<(usize, ComplexMatrix)> = Vec::new();
            for (v, map) in &con.terms {
                for (k, b) in bases[v.0].iter().enumerate() {
                    let img = map(b);
                    if img.rows() != con.dim || img.cols() != con.dim {
                        return Err(crate::error::shape_err(
                            format!("{0}x{0} image in constraint '{1}'", con.dim, con.name),
                            format!("{}x{}", img.rows(), img.cols()),
                        ));
                    }
                    let dev = img.hermiticity_deviation();
                    if dev > 1e-10 * img.max_abs().max(1.0) {
                        return Err(Error::InvalidArgument(format!(
                            "map in constraint '{}' is not Hermiticity preserving",
                            con.name
                        )));
                    }
                    images.push((offsets[v.0] + k, img.hermitian_part()));
                }
            }
            let dev = con.constant.hermiticity_deviation();
            if dev > 1e-10 * con.constant.max_abs().max(1.0) {
                return Err(Error::NotHermitian { deviation: dev });
            }
            let constant = con.constant.hermitian_part();
            let has_imag = std::iter::once(&constant)
                .chain(images.iter().map(|(_, m)| m))
                .any(|m| m.as_slice().iter().any(|z| z.im != 0.0));
            let field = if has_imag { Field::Complex } else { Field::Real };
            let mut cols = vec![Vec::new(); nvars];
            for (k, img) in &images {
                cols[*k] = embed_entries(img, field, -1.0);
            }
            let h = embed(&constant, field);
            blocks.push(RealBlock {
                size: h.n(),
                h,
                cols,
            });
        }
        Ok((RealSdp { c, blocks }, bases))
    }

    pub fn solve(&self, opts: &SolverOptions) -> Result<SdpSolution> {
        self.solve_logged(opts, None)
    }

    /// As [`solve`](Self::solve), writing one line per iteration to `log`.
    pub fn solve_logged(
        &self,
        opts: &SolverOptions,
        log: Option<&mut dyn Write>,
    ) -> Result<SdpSolution> {
        let (real, bases) = self.to_real()?;
        let sol = hsd::solve_real(&real, opts, log).map_err(Error::InvalidArgument)?;
        let mut values = Vec::with_capacity(self.variables.len());
        let mut offset = 0;
        for (v, basis) in self.variables.iter().zip(&bases) {
            let mut m = ComplexMatrix::zeros(v.dim, v.dim);
            for (k, b) in basis.iter().enumerate() {
                m = &m + &b.scale_real(sol.x[offset + k]);
            }
            offset += basis.len();
            values.push(m);
        }
        Ok(SdpSolution {
            status: sol.status,
            primal_value: sol.primal_value,
            dual_value: sol.dual_value,
            values,
            gap: sol.gap,
            primal_residual: sol.primal_residual,
            dual_residual: sol.dual_residual,
            iterations: sol.iterations,
            options: *opts,
        })
    }
}

pub fn solve(p: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    p.solve(opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn min_trace_above(a: &ComplexMatrix, field: Field) -> SdpSolution {
        let n = a.rows();
        let mut p = SdpProblem::new();
        let x = p.add_variable("X", n, field);
        p.set_objective(x, ComplexMatrix::identity(n)).unwrap();
        p.add_psd(x).unwrap();
        p.add_constraint("X - A", vec![(x, identity_map())], a.scale_real(-1.0))
            .unwrap();
        p.solve(&SolverOptions::default()).unwrap()
    }

    #[test]
    fn commuting_example() {
        let sol = min_trace_above(&ComplexMatrix::diag_real(&[-1.0, 2.0]), Field::Real);
        assert_eq!(sol.status, SolverStatus::Optimal);
        assert!((sol.primal_value - 2.0).abs() < 1e-7, "{}", sol.primal_value);
        let x = &sol.values[0];
        assert!(x.max_abs_diff(&ComplexMatrix::diag_real(&[0.0, 2.0])) < 1e-5);
    }

    #[test]
    fn psd_constant_is_optimal_point() {
        let v = [C64::new(1.0, 0.0), C64::new(0.3, -0.4), C64::new(0.0, 0.5)];
        let a = ComplexMatrix::outer(&v);
        let sol = min_trace_above(&a, Field::Complex);
        assert_eq!(sol.status, SolverStatus::Optimal);
        assert!((sol.primal_value - a.trace().re).abs() < 1e-7);
    }

    #[test]
    fn infeasible_problem_detected() {
        // X PSD and -X - I PSD cannot both hold.
        let mut p = SdpProblem::new();
        let x = p.add_variable("X", 2, Field::Real);
        p.set_objective(x, ComplexMatrix::identity(2)).unwrap();
        p.add_psd(x).unwrap();
        p.add_constraint(
            "-X - I",
            vec![(x, scaled_identity_map(-1.0))],
            ComplexMatrix::identity(2).scale_real(-1.0),
        )
        .unwrap();
        let sol = p.solve(&SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SolverStatus::Infeasible);
    }

    #[test]
    fn unbounded_problem_detected() {
        // minimize -tr X subject to X PSD.
        let mut p = SdpProblem::new();
        let x = p.add_variable("X", 2, Field::Real);
        p.set_objective(x, ComplexMatrix::identity(2).scale_real(-1.0))
            .unwrap();
        p.add_psd(x).unwrap();
        let sol = p.solve(&SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SolverStatus::Unbounded);
    }

    #[test]
    fn trace_log_is_written() {
        let mut p = SdpProblem::new();
        let x = p.add_variable("X", 2, Field::Real);
        p.set_objective(x, ComplexMatrix::identity(2)).unwrap();
        p.add_psd(x).unwrap();
        p.add_constraint("tr X >= 1", vec![(x, trace_map())], ComplexMatrix::diag_real(&[-1.0]))
            .unwrap();
        let mut buf: Vec<u8> = Vec::new();
        let sol = p
            .solve_logged(&SolverOptions::default(), Some(&mut buf))
            .unwrap();
        assert_eq!(sol.status, SolverStatus::Optimal);
        assert!((sol.primal_value - 1.0).abs() < 1e-7);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().count() >= 2);
        assert!(text.starts_with("iter   0"));
    }
}
