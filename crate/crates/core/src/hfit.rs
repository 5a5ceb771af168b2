//! Hetero-functional incidence tensors and their matricized forms.
//!
//! The binary tensors record *which* capability pulls or injects *which*
//! operand at *which* buffer. Stoichiometric weights are kept alongside as a
//! separate assignment and applied when the tensors are matricized into
//! `M⁻`, `M⁺` and `M = M⁺ − M⁻`.
//!
//! Rows are flattened row-major over (operand, buffer): the place
//! (`i`, `y`) lives at row `i · |B_S| + y`.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::{CapabilitySet, FlowSide, Place, SystemModel};
use crate::scalar::Scalar;
use crate::sparse::SparseMatrix;

/// Third-order 0/1 tensor over (operand, buffer, capability), stored as the
/// set of coordinates holding a one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryTensor {
    shape: (usize, usize, usize),
    ones: BTreeSet<(usize, usize, usize)>,
}

impl BinaryTensor {
    pub fn shape(&self) -> (usize, usize, usize) {
        self.shape
    }

    pub fn get(&self, operand: usize, buffer: usize, capability: usize) -> u8 {
        u8::from(self.ones.contains(&(operand, buffer, capability)))
    }

    pub fn count_ones(&self) -> usize {
        self.ones.len()
    }

    pub fn ones(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.ones.iter().copied()
    }

    /// Mode-3 matricization: `|L|·|B_S| × |ℰ_S|` with entries in {0, 1}.
    pub fn matricize<T: Scalar>(&self) -> SparseMatrix<T> {
        let (nl, nb, ne) = self.shape;
        SparseMatrix::from_triplets(
            nl * nb,
            ne,
            self.ones.iter().map(|&(i, y, c)| (i * nb + y, c, T::one())),
        )
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IncidenceError {
    #[error("capability {capability:?} lists {side} of {operand:?} at {buffer:?} more than once")]
    DuplicateEntry {
        capability: String,
        operand: String,
        buffer: String,
        side: FlowSide,
    },
}

/// Human-readable labels for one matrix row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowLabel {
    pub place: Place,
    /// `operand@buffer`
    pub id: String,
    /// "Operand at Buffer"
    pub name: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IncidenceStructure<T> {
    pub binary_neg: BinaryTensor,
    pub binary_pos: BinaryTensor,
    pub weighted_neg: SparseMatrix<T>,
    pub weighted_pos: SparseMatrix<T>,
    /// `M = M⁺ − M⁻`
    pub net: SparseMatrix<T>,
    pub row_labels: Vec<RowLabel>,
    pub col_labels: Vec<String>,
    pub col_names: Vec<String>,
    pub n_buffers: usize,
}

impl<T: Scalar> IncidenceStructure<T> {
    pub fn n_places(&self) -> usize {
        self.net.nrows()
    }

    pub fn n_capabilities(&self) -> usize {
        self.net.ncols()
    }

    pub fn flat_index(&self, place: Place) -> usize {
        place.operand * self.n_buffers + place.buffer
    }

    /// `M` restricted to rows with at least one nonzero entry. The structure
    /// itself is left untouched.
    pub fn eliminate_zero_rows(&self) -> ReducedIncidence<T> {
        let retained = self.net.nonzero_rows();
        ReducedIncidence {
            matrix: self.net.select_rows(&retained),
            row_labels: retained.iter().map(|&r| self.row_labels[r].clone()).collect(),
            col_labels: self.col_labels.clone(),
            retained,
        }
    }
}

/// The zero-row-eliminated incidence matrix with its retained row map.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedIncidence<T> {
    pub matrix: SparseMatrix<T>,
    /// Flat row index (into the full matrix) of each retained row.
    pub retained: Vec<usize>,
    pub row_labels: Vec<RowLabel>,
    pub col_labels: Vec<String>,
}

impl<T: Scalar> ReducedIncidence<T> {
    pub fn len(&self) -> usize {
        self.retained.len()
    }

    pub fn is_empty(&self) -> bool {
        self.retained.is_empty()
    }

    /// Position of a flat row among the retained rows.
    pub fn position(&self, flat: usize) -> Option<usize> {
        self.retained.binary_search(&flat).ok()
    }
}

/// Builds the binary tensors and weighted matrices for a capability set.
pub fn build_incidence<T: Scalar>(
    capabilities: &CapabilitySet<T>,
    model: &SystemModel<T>,
) -> Result<IncidenceStructure<T>, IncidenceError> {
    let nl = model.operands.len();
    let nb = model.buffers.len();
    let ne = capabilities.len();
    let mut neg_ones = BTreeSet::new();
    let mut pos_ones = BTreeSet::new();
    let mut neg_triplets = Vec::new();
    let mut pos_triplets = Vec::new();

    for cap in capabilities.iter() {
        let sides = [
            (FlowSide::Pull, &cap.pulls, &mut neg_ones, &mut neg_triplets),
            (FlowSide::Inject, &cap.injects, &mut pos_ones, &mut pos_triplets),
        ];
        for (side, flows, ones, triplets) in sides {
            for flow in flows {
                if !ones.insert((flow.operand, flow.buffer, cap.index)) {
                    return Err(IncidenceError::DuplicateEntry {
                        capability: capabilities.labels()[cap.index].clone(),
                        operand: model.operands[flow.operand].id.clone(),
                        buffer: model.buffer_resource(flow.buffer).id.clone(),
                        side,
                    });
                }
                triplets.push((flow.operand * nb + flow.buffer, cap.index, flow.weight));
            }
        }
    }

    let weighted_neg = SparseMatrix::from_triplets(nl * nb, ne, neg_triplets);
    let weighted_pos = SparseMatrix::from_triplets(nl * nb, ne, pos_triplets);
    let net = weighted_pos.sub(&weighted_neg);
    let row_labels = (0..nl * nb)
        .map(|flat| {
            let place = model.place_of_flat(flat);
            RowLabel {
                place,
                id: model.place_id(place),
                name: model.place_name(place),
            }
        })
        .collect();

    Ok(IncidenceStructure {
        binary_neg: BinaryTensor {
            shape: (nl, nb, ne),
            ones: neg_ones,
        },
        binary_pos: BinaryTensor {
            shape: (nl, nb, ne),
            ones: pos_ones,
        },
        weighted_neg,
        weighted_pos,
        net,
        row_labels,
        col_labels: capabilities.labels().to_vec(),
        col_names: capabilities.names().to_vec(),
        n_buffers: nb,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_model_str;
    use crate::model::{enumerate_capabilities, validate_model, EnumerationOptions};
    use std::path::Path;

    fn transfer_model() -> SystemModel<f64> {
        let raw = parse_model_str(
            Path::new("t.json"),
            r#"{
                "schema_version": "1",
                "operands": [{"id": "l1", "name": "Load", "unit": "kg"}],
                "resources": [
                    {"id": "b1", "name": "Origin", "kind": "independent-buffer"},
                    {"id": "b2", "name": "Destination", "kind": "independent-buffer"},
                    {"id": "h", "name": "Carrier", "kind": "transportation"}
                ],
                "processes": [{"id": "move", "name": "Move load", "kind": "transportation",
                               "inputs": [{"operand": "l1", "quantity": 1}],
                               "outputs": [{"operand": "l1", "quantity": 1}],
                               "primary_output": "l1"}],
                "allocations": [{"process": "move", "resource": "h"}],
                "buffer_overrides": [
                    {"process": "move", "resource": "h", "operand": "l1", "side": "pull", "buffer": "b1"},
                    {"process": "move", "resource": "h", "operand": "l1", "side": "inject", "buffer": "b2"}
                ]
            }"#,
        )
        .unwrap();
        validate_model(&raw).unwrap()
    }

    #[test]
    fn pure_transport_column_conserves() {
        let model = transfer_model();
        let caps = enumerate_capabilities(&model, EnumerationOptions::default()).unwrap();
        let inc = build_incidence(&caps, &model).unwrap();
        assert_eq!(inc.net.nrows(), 2);
        assert_eq!(inc.net.get(0, 0), -1.0);
        assert_eq!(inc.net.get(1, 0), 1.0);
        let (_, vals) = inc.net.column(0);
        assert_eq!(vals.iter().sum::<f64>(), 0.0);
        assert_eq!(inc.binary_neg.get(0, 0, 0), 1);
        assert_eq!(inc.binary_pos.get(0, 1, 0), 1);
        assert_eq!(inc.binary_pos.get(0, 0, 0), 0);
    }

    #[test]
    fn binary_matricization_matches_weighted_support() {
        let model = transfer_model();
        let caps = enumerate_capabilities(&model, EnumerationOptions::default()).unwrap();
        let inc = build_incidence(&caps, &model).unwrap();
        let pattern: SparseMatrix<f64> = inc.binary_neg.matricize();
        let support: Vec<_> = inc.weighted_neg.triplets().map(|(r, c, _)| (r, c)).collect();
        let ones: Vec<_> = pattern.triplets().map(|(r, c, _)| (r, c)).collect();
        assert_eq!(support, ones);
    }

    #[test]
    fn all_zero_matrix_reduces_to_empty() {
        let inc: IncidenceStructure<f64> = IncidenceStructure {
            binary_neg: BinaryTensor {
                shape: (2, 2, 1),
                ones: BTreeSet::new(),
            },
            binary_pos: BinaryTensor {
                shape: (2, 2, 1),
                ones: BTreeSet::new(),
            },
            weighted_neg: SparseMatrix::zeros(4, 1),
            weighted_pos: SparseMatrix::zeros(4, 1),
            net: SparseMatrix::zeros(4, 1),
            row_labels: Vec::new(),
            col_labels: vec!["c".into()],
            col_names: vec!["c".into()],
            n_buffers: 2,
        };
        let reduced = inc.eliminate_zero_rows();
        assert!(reduced.is_empty());
        assert_eq!(reduced.matrix.nrows(), 0);
    }
}
