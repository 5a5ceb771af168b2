//! Classical process-based life-cycle inventory.
//!
//! `Y = A·X` gives the scaling vector `X` for a demand `Y`, and `E = B·X` the
//! environmental aspects. `A` is square, one primary product per process,
//! with consumption entries negative. Results keep their signs: extraction
//! shows up as a negative aspect.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::ProblemFile;
use crate::linalg::{DenseMatrix, LuFactorization};
use crate::model::{CapabilitySet, Place, SystemModel};
use crate::scalar::{max_abs, Scalar};

/// Relative residual bound for `‖AX − Y‖_∞ / max(‖Y‖_∞, 1)`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;
/// Above this 1-norm condition estimate results are flagged unreliable.
pub const CONDITION_WARNING: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LcaError {
    #[error("technology matrix is {rows}x{cols}; the number of products and processes must match")]
    NonSquare { rows: usize, cols: usize },
    #[error("process {process:?} has no assigned primary product")]
    MissingProduct { process: String },
    #[error("product {product:?} is assigned to more than one process")]
    DuplicateProduct { product: String },
    #[error("process {process:?} has {count} capabilities; classical assembly needs exactly one")]
    NotOneToOne { process: String, count: usize },
    #[error("column {column} ({process:?}) of the technology matrix has no positive entry")]
    NoPrimaryProduct { column: usize, process: String },
    #[error("flow of {place:?} is neither a product nor an environmental aspect")]
    UnclassifiedFlow { place: String },
    #[error("label count mismatch for {what}: expected {expected}, found {found}")]
    LabelMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("dimension mismatch: {what} has length {found}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("technology matrix is singular: pivot {pivot_index} has magnitude {pivot_magnitude:e} (condition estimate {condition_estimate:e})")]
    Singular {
        pivot_index: usize,
        pivot_magnitude: f64,
        condition_estimate: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LcaProblem<T> {
    pub technology: DenseMatrix<T>,
    pub environmental: DenseMatrix<T>,
    pub demand: Vec<T>,
    pub product_labels: Vec<String>,
    pub process_labels: Vec<String>,
    pub aspect_labels: Vec<String>,
}

impl<T: Scalar> LcaProblem<T> {
    /// Checks shapes, labels, and that each column of `A` has a positive entry.
    pub fn new(
        technology: DenseMatrix<T>,
        environmental: DenseMatrix<T>,
        demand: Vec<T>,
        product_labels: Vec<String>,
        process_labels: Vec<String>,
        aspect_labels: Vec<String>,
    ) -> Result<Self, LcaError> {
        let n = technology.ncols();
        if !technology.is_square() {
            return Err(LcaError::NonSquare {
                rows: technology.nrows(),
                cols: n,
            });
        }
        let check = |what, expected: usize, found: usize| {
            if expected == found {
                Ok(())
            } else {
                Err(LcaError::LabelMismatch {
                    what,
                    expected,
                    found,
                })
            }
        };
        check("products", n, product_labels.len())?;
        check("processes", n, process_labels.len())?;
        check("aspects", environmental.nrows(), aspect_labels.len())?;
        if environmental.nrows() > 0 && environmental.ncols() != n {
            return Err(LcaError::DimensionMismatch {
                what: "environmental matrix columns",
                expected: n,
                found: environmental.ncols(),
            });
        }
        if demand.len() != n {
            return Err(LcaError::DimensionMismatch {
                what: "demand",
                expected: n,
                found: demand.len(),
            });
        }
        for c in 0..n {
            if !(0..n).any(|r| technology[(r, c)] > T::zero()) {
                return Err(LcaError::NoPrimaryProduct {
                    column: c,
                    process: process_labels[c].clone(),
                });
            }
        }
        let environmental = if environmental.nrows() == 0 {
            DenseMatrix::zeros(0, n)
        } else {
            environmental
        };
        Ok(Self {
            technology,
            environmental,
            demand,
            product_labels,
            process_labels,
            aspect_labels,
        })
    }

    pub fn from_file(file: &ProblemFile) -> Result<Self, LcaError> {
        let to_dense = |rows: &[Vec<f64>], what| {
            let converted: Vec<Vec<T>> = rows
                .iter()
                .map(|r| r.iter().map(|&v| T::from_f64_lossy(v)).collect())
                .collect();
            DenseMatrix::from_rows(&converted).ok_or(LcaError::DimensionMismatch {
                what,
                expected: rows.first().map_or(0, Vec::len),
                found: rows.iter().map(Vec::len).find(|&l| l != rows[0].len()).unwrap_or(0),
            })
        };
        Self::new(
            to_dense(&file.technology, "technology row")?,
            to_dense(&file.environmental, "environmental row")?,
            file.demand.iter().map(|&v| T::from_f64_lossy(v)).collect(),
            file.product_labels.clone(),
            file.process_labels.clone(),
            file.aspect_labels.clone(),
        )
    }

    pub fn with_demand(mut self, demand: Vec<T>) -> Result<Self, LcaError> {
        if demand.len() != self.demand.len() {
            return Err(LcaError::DimensionMismatch {
                what: "demand",
                expected: self.demand.len(),
                found: demand.len(),
            });
        }
        self.demand = demand;
        Ok(self)
    }
}

/// Primary product of each process, by process index: the place at which the
/// process delivers its primary output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductAssignment {
    pub products: Vec<Place>,
}

impl ProductAssignment {
    /// Uses each process's declared primary output, at the buffer where its
    /// (single) capability injects it.
    pub fn from_primary_outputs<T: Scalar>(
        model: &SystemModel<T>,
        capabilities: &CapabilitySet<T>,
    ) -> Result<Self, LcaError> {
        let mut products = Vec::with_capacity(model.processes.len());
        for (p, process) in model.processes.iter().enumerate() {
            let caps = capabilities.of_process(p);
            if caps.len() != 1 {
                return Err(LcaError::NotOneToOne {
                    process: process.id.clone(),
                    count: caps.len(),
                });
            }
            let place = capabilities
                .get(caps[0])
                .injects
                .iter()
                .find(|f| f.operand == process.primary_output)
                .map(|f| f.place())
                .ok_or_else(|| LcaError::MissingProduct {
                    process: process.id.clone(),
                })?;
            products.push(place);
        }
        Ok(Self { products })
    }

    pub fn position(&self, place: Place) -> Option<usize> {
        self.products.iter().position(|&p| p == place)
    }

    fn check_bijection<T: Scalar>(&self, model: &SystemModel<T>) -> Result<(), LcaError> {
        if self.products.len() != model.processes.len() {
            let missing = model.processes.get(self.products.len()).map(|p| p.id.clone());
            return match missing {
                Some(process) => Err(LcaError::MissingProduct { process }),
                None => Err(LcaError::NonSquare {
                    rows: self.products.len(),
                    cols: model.processes.len(),
                }),
            };
        }
        for (i, p) in self.products.iter().enumerate() {
            if self.products[..i].contains(p) {
                return Err(LcaError::DuplicateProduct {
                    product: model.place_id(*p),
                });
            }
        }
        Ok(())
    }
}

/// Aspect places touched by any capability, in row-major (operand, buffer)
/// order.
pub fn aspect_places<T: Scalar>(
    model: &SystemModel<T>,
    capabilities: &CapabilitySet<T>,
    aspects: &[usize],
) -> Vec<Place> {
    let mut places: Vec<Place> = capabilities
        .iter()
        .flat_map(|c| c.pulls.iter().chain(&c.injects))
        .filter(|f| aspects.contains(&f.operand))
        .map(|f| f.place())
        .collect();
    places.sort_by_key(|&p| model.flat_index(p));
    places.dedup();
    places
}

/// Assembles `A` and `B` directly from the capabilities. Column `j` is the
/// single capability of process `j`; row `i` of `A` is the product of
/// process `i`. Several flows of one operand at one place are summed.
pub fn assemble_lca<T: Scalar>(
    model: &SystemModel<T>,
    capabilities: &CapabilitySet<T>,
    aspects: &[usize],
    products: &ProductAssignment,
) -> Result<LcaProblem<T>, LcaError> {
    products.check_bijection(model)?;
    let n = model.processes.len();
    let aspect_rows = aspect_places(model, capabilities, aspects);
    let mut a = DenseMatrix::zeros(n, n);
    let mut b = DenseMatrix::zeros(aspect_rows.len(), n);

    for (j, process) in model.processes.iter().enumerate() {
        let caps = capabilities.of_process(j);
        if caps.len() != 1 {
            return Err(LcaError::NotOneToOne {
                process: process.id.clone(),
                count: caps.len(),
            });
        }
        let cap = capabilities.get(caps[0]);
        let mut places: Vec<Place> = cap.pulls.iter().chain(&cap.injects).map(|f| f.place()).collect();
        places.sort();
        places.dedup();
        for place in places {
            let injected = cap
                .injects
                .iter()
                .filter(|f| f.place() == place)
                .fold(T::zero(), |acc, f| acc + f.weight);
            let pulled = cap
                .pulls
                .iter()
                .filter(|f| f.place() == place)
                .fold(T::zero(), |acc, f| acc + f.weight);
            let net = injected - pulled;
            if let Some(i) = products.position(place) {
                a[(i, j)] = net;
            } else if let Some(k) = aspect_rows.iter().position(|&p| p == place) {
                b[(k, j)] = net;
            } else if !net.is_zero() {
                return Err(LcaError::UnclassifiedFlow {
                    place: model.place_id(place),
                });
            }
        }
    }

    // aspect places whose flows cancel in every column carry no row
    let kept: Vec<usize> = (0..aspect_rows.len())
        .filter(|&k| b.row(k).iter().any(|v| !v.is_zero()))
        .collect();
    let b = DenseMatrix::from_rows(&kept.iter().map(|&k| b.row(k).to_vec()).collect::<Vec<_>>())
        .expect("rows share a width");
    let b = if kept.is_empty() { DenseMatrix::zeros(0, n) } else { b };

    LcaProblem::new(
        a,
        b,
        vec![T::zero(); n],
        products.products.iter().map(|&p| model.place_name(p)).collect(),
        model.processes.iter().map(|p| p.name.clone()).collect(),
        kept.iter().map(|&k| model.place_name(aspect_rows[k])).collect(),
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub residual_tolerance: f64,
    pub condition_warning: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            residual_tolerance: RESIDUAL_TOLERANCE,
            condition_warning: CONDITION_WARNING,
        }
    }
}

/// Scaling vector with its solve diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct Scaling<T> {
    pub x: Vec<T>,
    /// `‖AX − Y‖_∞`
    pub residual: f64,
    /// `‖A‖_1 · ‖A⁻¹‖_1`
    pub condition_estimate: f64,
}

fn residual_inf<T: Scalar>(a: &DenseMatrix<T>, x: &[T], y: &[T]) -> (Vec<T>, f64) {
    let r: Vec<T> = a.mul_vec(x).iter().zip(y).map(|(&ax, &yi)| yi - ax).collect();
    let norm = max_abs(&r);
    (r, norm)
}

/// Solves `A·X = Y` by LU with partial pivoting and one round of iterative
/// refinement.
pub fn solve_scaling<T: Scalar>(a: &DenseMatrix<T>, y: &[T]) -> Result<Scaling<T>, LcaError> {
    if !a.is_square() {
        return Err(LcaError::NonSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if y.len() != a.nrows() {
        return Err(LcaError::DimensionMismatch {
            what: "demand",
            expected: a.nrows(),
            found: y.len(),
        });
    }
    let lu = LuFactorization::new(a).map_err(|p| LcaError::Singular {
        pivot_index: p.index,
        pivot_magnitude: p.magnitude,
        condition_estimate: f64::INFINITY,
    })?;
    let condition_estimate = lu.condition_one(a);
    let mut x = lu.solve(y);
    let (r, mut residual) = residual_inf(a, &x, y);
    if residual > 0.0 && !T::is_exact() {
        let dx = lu.solve(&r);
        let refined: Vec<T> = x.iter().zip(&dx).map(|(&xi, &di)| xi + di).collect();
        let (_, refined_residual) = residual_inf(a, &refined, y);
        if refined_residual < residual {
            x = refined;
            residual = refined_residual;
        }
    }
    Ok(Scaling {
        x,
        residual,
        condition_estimate,
    })
}

/// `E = B·X`.
pub fn compute_aspects<T: Scalar>(b: &DenseMatrix<T>, x: &[T]) -> Result<Vec<T>, LcaError> {
    if b.ncols() != x.len() {
        return Err(LcaError::DimensionMismatch {
            what: "scaling vector",
            expected: b.ncols(),
            found: x.len(),
        });
    }
    Ok(b.mul_vec(x))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LcaResult<T> {
    pub scaling: Vec<T>,
    pub aspects: Vec<T>,
    pub residual: f64,
    pub condition_estimate: f64,
    /// False when the residual or conditioning is outside tolerance.
    pub reliable: bool,
    pub warnings: Vec<String>,
}

/// `E = B·A⁻¹·Y`.
pub fn solve_lca<T: Scalar>(
    problem: &LcaProblem<T>,
    options: SolveOptions,
) -> Result<LcaResult<T>, LcaError> {
    let scaling = solve_scaling(&problem.technology, &problem.demand)?;
    let aspects = compute_aspects(&problem.environmental, &scaling.x)?;
    let mut warnings = Vec::new();
    let bound = options.residual_tolerance * max_abs(&problem.demand).max(1.0);
    if scaling.residual > bound {
        warnings.push(format!(
            "residual {:e} exceeds tolerance {:e}",
            scaling.residual, bound
        ));
    }
    if scaling.condition_estimate > options.condition_warning {
        warnings.push(format!(
            "technology matrix condition estimate {:e} exceeds {:e}",
            scaling.condition_estimate, options.condition_warning
        ));
    }
    Ok(LcaResult {
        scaling: scaling.x,
        aspects,
        residual: scaling.residual,
        condition_estimate: scaling.condition_estimate,
        reliable: warnings.is_empty(),
        warnings,
    })
}

/// Whether an aspect quantity is released or drawn down.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Emitted,
    Consumed,
    None,
}

impl Direction {
    pub fn of(value: f64) -> Self {
        if value > 0.0 {
            Direction::Emitted
        } else if value < 0.0 {
            Direction::Consumed
        } else {
            Direction::None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    fn reference_a() -> DenseMatrix<f64> {
        DenseMatrix::from_rows(&[
            vec![1.0, -61.9, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, -3.816, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, -53.3, 1.0],
        ])
        .unwrap()
    }

    /// Back substitution for upper triangular systems, independent of LU.
    fn back_substitute(a: &DenseMatrix<f64>, y: &[f64]) -> Vec<f64> {
        let n = y.len();
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| a[(i, j)] * x[j]).sum();
            x[i] = (y[i] - s) / a[(i, i)];
        }
        x
    }

    #[test]
    fn ev_scaling_by_hand() {
        // x3 = 500, x2 = 3.816·500, x1 = 61.9·x2
        let s = solve_scaling(&reference_a(), &[0.0, 0.0, 500.0, 0.0, 0.0]).unwrap();
        let expected = [118105.2, 1908.0, 500.0, 0.0, 0.0];
        for (got, want) in s.x.iter().zip(expected) {
            assert!((got - want).abs() <= 1e-9 * want.max(1.0), "{got} vs {want}");
        }
        assert!(s.residual <= RESIDUAL_TOLERANCE * 500.0);
    }

    #[test]
    fn icv_scaling_by_hand() {
        // x4 = 500, x5 = 53.3·500
        let s = solve_scaling(&reference_a(), &[0.0, 0.0, 0.0, 500.0, 0.0]).unwrap();
        let expected = [0.0, 0.0, 0.0, 500.0, 26650.0];
        for (got, want) in s.x.iter().zip(expected) {
            assert!((got - want).abs() <= 1e-9 * want.max(1.0), "{got} vs {want}");
        }
    }

    #[test]
    fn identity_returns_demand() {
        let a = DenseMatrix::<f64>::identity(3);
        let s = solve_scaling(&a, &[1.5, -2.0, 7.0]).unwrap();
        assert_eq!(s.x, vec![1.5, -2.0, 7.0]);
        assert_eq!(s.condition_estimate, 1.0);
    }

    #[test]
    fn triangular_solve_matches_back_substitution() {
        let a = reference_a().map(|v| v);
        // make it upper triangular: drop the lower entry
        let mut upper = a.clone();
        upper[(4, 3)] = 0.0;
        let y = [3.0, -1.0, 2.5, 4.0, 9.0];
        let got = solve_scaling(&upper, &y).unwrap().x;
        let want = back_substitute(&upper, &y);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-12 * w.abs().max(1.0));
        }
    }

    #[test]
    fn singular_reports_pivot() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        match solve_scaling(&a, &[1.0, 1.0]).unwrap_err() {
            LcaError::Singular { pivot_index, .. } => assert_eq!(pivot_index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn aspects_dimension_checked() {
        let b = DenseMatrix::<f64>::zeros(2, 3);
        assert!(matches!(
            compute_aspects(&b, &[1.0, 2.0]),
            Err(LcaError::DimensionMismatch { .. })
        ));
        assert_eq!(compute_aspects(&b, &[0.0; 3]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn non_square_problem_rejected() {
        let a = DenseMatrix::<f64>::zeros(2, 3);
        let err = LcaProblem::new(
            a,
            DenseMatrix::zeros(0, 3),
            vec![0.0; 3],
            vec!["a".into(), "b".into()],
            vec!["p".into(), "q".into(), "r".into()],
            vec![],
        )
        .unwrap_err();
        assert_eq!(err, LcaError::NonSquare { rows: 2, cols: 3 });
    }

    #[test]
    fn column_without_positive_entry_rejected() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        let err = LcaProblem::new(
            a,
            DenseMatrix::zeros(0, 2),
            vec![0.0; 2],
            vec!["a".into(), "b".into()],
            vec!["p".into(), "q".into()],
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, LcaError::NoPrimaryProduct { column: 1, .. }));
    }

    #[test]
    fn zero_demand_gives_zero_result() {
        let b = DenseMatrix::from_rows(&[vec![1.0, 2.0, 0.0, 0.0, 1.0]]).unwrap();
        let problem = LcaProblem::new(
            reference_a(),
            b,
            vec![0.0; 5],
            (0..5).map(|i| format!("y{i}")).collect(),
            (0..5).map(|i| format!("p{i}")).collect(),
            vec!["e".into()],
        )
        .unwrap();
        let result = solve_lca(&problem, SolveOptions::default()).unwrap();
        assert!(result.scaling.iter().all(|&v| v == 0.0));
        assert_eq!(result.aspects, vec![0.0]);
        assert!(result.reliable);
    }

    #[test]
    fn exact_rational_solve_has_zero_residual() {
        let r = |v: f64| Rational64::from_f64_lossy(v);
        let a = reference_a().map(r);
        let y = vec![r(0.0), r(0.0), r(500.0), r(0.0), r(0.0)];
        let s = solve_scaling(&a, &y).unwrap();
        assert_eq!(s.residual, 0.0);
        assert_eq!(s.x[2], r(500.0));
    }

    #[test]
    fn direction_tags() {
        assert_eq!(Direction::of(1.0), Direction::Emitted);
        assert_eq!(Direction::of(-3.0), Direction::Consumed);
        assert_eq!(Direction::of(0.0), Direction::None);
    }
}
