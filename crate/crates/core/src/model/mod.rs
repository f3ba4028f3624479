//! The parametric articulated body template: rest shape, shape blendshapes,
//! kinematic chain, skinning weights, and the pose/shape parameter vector.

mod rotation;
mod skin;
mod toy;

pub use rotation::{
    matrix_to_rot6d, rodrigues, rot6d_to_matrix, RotationMatrix, ROT6D_EPS, ROT6D_IDENTITY,
};
pub(crate) use rotation::{rodrigues_partials, rot6d_partials};
pub use skin::{skin, SkinnedPose};
pub(crate) use skin::{skin_backward, skin_forward, SkinCache, VertexGrad};
pub use toy::make_toy_humanoid;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A joint whose rotation about one axis is penalized in one direction
/// (elbows and knees). `sign` is +1 or -1 and selects the penalized side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HingeJoint {
    pub joint: usize,
    pub axis: usize,
    pub sign: f64,
}

/// An LBS rig. Immutable after construction; all invariants are checked by
/// [`TemplateModel::new`].
#[derive(Debug, Clone)]
pub struct TemplateModel {
    rest_vertices: Vec<Point3<f64>>,
    /// Per-vertex displacement per shape coefficient, indexed `[m * S + s]`.
    shape_basis: Vec<Vector3<f64>>,
    num_shapes: usize,
    /// Sparse rows: for joint j, the (vertex, weight) pairs. Rows sum to 1.
    joint_regressor: Vec<Vec<(usize, f64)>>,
    /// Parent of each joint; exactly one root with `None`.
    parents: Vec<Option<usize>>,
    /// Sparse rows: for vertex m, the (joint, weight) pairs. Nonnegative,
    /// rows sum to 1.
    skin_weights: Vec<Vec<(usize, f64)>>,
    hinge_joints: Vec<HingeJoint>,
    /// Joint evaluation order with parents before children.
    topo_order: Vec<usize>,
}

const ROW_SUM_TOL: f64 = 1e-9;

impl TemplateModel {
    pub fn new(
        rest_vertices: Vec<Point3<f64>>,
        shape_basis: Vec<Vector3<f64>>,
        num_shapes: usize,
        joint_regressor: Vec<Vec<(usize, f64)>>,
        parents: Vec<Option<usize>>,
        skin_weights: Vec<Vec<(usize, f64)>>,
        hinge_joints: Vec<HingeJoint>,
    ) -> Result<Self> {
        let m = rest_vertices.len();
        let j = parents.len();
        if m == 0 {
            return Err(Error::EmptyModel);
        }
        if j == 0 {
            return Err(Error::InvalidModel("model has no joints".into()));
        }
        if shape_basis.len() != m * num_shapes {
            return Err(Error::DimensionMismatch(format!(
                "shape basis has {} entries, expected M*S = {}",
                shape_basis.len(),
                m * num_shapes
            )));
        }
        if joint_regressor.len() != j {
            return Err(Error::DimensionMismatch(format!(
                "joint regressor has {} rows, expected J = {j}",
                joint_regressor.len()
            )));
        }
        if skin_weights.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "skin weights have {} rows, expected M = {m}",
                skin_weights.len()
            )));
        }
        for (ji, row) in joint_regressor.iter().enumerate() {
            let mut sum = 0.0;
            for &(v, w) in row {
                if v >= m {
                    return Err(Error::InvalidModel(format!(
                        "joint regressor row {ji} references vertex {v} >= M = {m}"
                    )));
                }
                sum += w;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidModel(format!(
                    "joint regressor row {ji} sums to {sum}, expected 1"
                )));
            }
        }
        for (vi, row) in skin_weights.iter().enumerate() {
            let mut sum = 0.0;
            for &(jj, w) in row {
                if jj >= j {
                    return Err(Error::InvalidModel(format!(
                        "skin weight row {vi} references joint {jj} >= J = {j}"
                    )));
                }
                if w < 0.0 {
                    return Err(Error::InvalidModel(format!(
                        "skin weight row {vi} has negative weight {w}"
                    )));
                }
                sum += w;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidModel(format!(
                    "skin weight row {vi} sums to {sum}, expected 1"
                )));
            }
        }
        for h in &hinge_joints {
            if h.joint >= j || h.axis >= 3 || h.sign.abs() != 1.0 {
                return Err(Error::InvalidModel(format!(
                    "invalid hinge joint {h:?} (J = {j})"
                )));
            }
        }
        let topo_order = topological_order(&parents)?;
        Ok(Self {
            rest_vertices,
            shape_basis,
            num_shapes,
            joint_regressor,
            parents,
            skin_weights,
            hinge_joints,
            topo_order,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.rest_vertices.len()
    }

    pub fn num_joints(&self) -> usize {
        self.parents.len()
    }

    pub fn num_shapes(&self) -> usize {
        self.num_shapes
    }

    pub fn rest_vertices(&self) -> &[Point3<f64>] {
        &self.rest_vertices
    }

    /// Displacement of vertex `m` per unit of shape coefficient `s`.
    pub fn shape_displacement(&self, m: usize, s: usize) -> Vector3<f64> {
        self.shape_basis[m * self.num_shapes + s]
    }

    pub fn joint_regressor(&self) -> &[Vec<(usize, f64)>] {
        &self.joint_regressor
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parents
    }

    pub fn skin_weights(&self) -> &[Vec<(usize, f64)>] {
        &self.skin_weights
    }

    pub fn hinge_joints(&self) -> &[HingeJoint] {
        &self.hinge_joints
    }

    pub(crate) fn topo_order(&self) -> &[usize] {
        &self.topo_order
    }

    /// Parent-child joint pairs, one per non-root joint.
    pub fn bones(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parents
            .iter()
            .enumerate()
            .filter_map(|(c, p)| p.map(|p| (p, c)))
    }
}

/// Validates the kinematic tree (single root, acyclic, in-range parents) and
/// returns an order that visits parents before children.
fn topological_order(parents: &[Option<usize>]) -> Result<Vec<usize>> {
    let j = parents.len();
    let mut roots = 0;
    for (i, p) in parents.iter().enumerate() {
        match p {
            None => roots += 1,
            Some(p) => {
                if *p >= j {
                    return Err(Error::InvalidModel(format!(
                        "joint {i} has parent {p} >= J = {j}"
                    )));
                }
                if *p == i {
                    return Err(Error::InvalidModel(format!("joint {i} is its own parent")));
                }
            }
        }
    }
    if roots != 1 {
        return Err(Error::InvalidModel(format!(
            "kinematic tree has {roots} roots, expected exactly 1"
        )));
    }
    let mut order = Vec::with_capacity(j);
    let mut placed = vec![false; j];
    // Repeatedly emit joints whose parent is already placed; if a full pass
    // places nothing, a cycle exists.
    while order.len() < j {
        let before = order.len();
        for i in 0..j {
            if placed[i] {
                continue;
            }
            let ready = match parents[i] {
                None => true,
                Some(p) => placed[p],
            };
            if ready {
                placed[i] = true;
                order.push(i);
            }
        }
        if order.len() == before {
            return Err(Error::InvalidModel("kinematic tree contains a cycle".into()));
        }
    }
    Ok(order)
}

/// The fit parameters Theta: shape, per-joint axis-angle pose, 6D global
/// rotation, and translation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub beta: Vec<f64>,
    pub theta: Vec<Vector3<f64>>,
    pub rot6d: [f64; 6],
    pub trans: Vector3<f64>,
}

impl ModelParams {
    /// Neutral parameters for a model with `num_shapes` and `num_joints`.
    pub fn neutral(num_shapes: usize, num_joints: usize) -> Self {
        Self {
            beta: vec![0.0; num_shapes],
            theta: vec![Vector3::zeros(); num_joints],
            rot6d: ROT6D_IDENTITY,
            trans: Vector3::zeros(),
        }
    }

    pub fn neutral_for(model: &TemplateModel) -> Self {
        Self::neutral(model.num_shapes(), model.num_joints())
    }

    pub fn validate(&self, model: &TemplateModel) -> Result<()> {
        if self.beta.len() != model.num_shapes() {
            return Err(Error::DimensionMismatch(format!(
                "beta has {} coefficients, model has S = {}",
                self.beta.len(),
                model.num_shapes()
            )));
        }
        if self.theta.len() != model.num_joints() {
            return Err(Error::DimensionMismatch(format!(
                "theta has {} joints, model has J = {}",
                self.theta.len(),
                model.num_joints()
            )));
        }
        let finite = self.beta.iter().all(|v| v.is_finite())
            && self.theta.iter().all(|t| t.iter().all(|v| v.is_finite()))
            && self.rot6d.iter().all(|v| v.is_finite())
            && self.trans.iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("model parameters".into()));
        }
        // Surfaces the DegenerateRotation error early.
        rot6d_to_matrix(&self.rot6d)?;
        Ok(())
    }

    /// Number of scalar degrees of freedom.
    pub fn dof(&self) -> usize {
        self.beta.len() + 3 * self.theta.len() + 6 + 3
    }

    /// Flattens to a single vector ordered (beta, theta, rot6d, trans).
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dof());
        out.extend_from_slice(&self.beta);
        for t in &self.theta {
            out.extend_from_slice(t.as_slice());
        }
        out.extend_from_slice(&self.rot6d);
        out.extend_from_slice(self.trans.as_slice());
        out
    }

    /// Inverse of [`Self::to_flat`] given matching dimensions.
    pub fn from_flat(flat: &[f64], num_shapes: usize, num_joints: usize) -> Result<Self> {
        let expect = num_shapes + 3 * num_joints + 9;
        if flat.len() != expect {
            return Err(Error::DimensionMismatch(format!(
                "flat parameter vector has {} entries, expected {expect}",
                flat.len()
            )));
        }
        let beta = flat[..num_shapes].to_vec();
        let mut theta = Vec::with_capacity(num_joints);
        for j in 0..num_joints {
            let o = num_shapes + 3 * j;
            theta.push(Vector3::new(flat[o], flat[o + 1], flat[o + 2]));
        }
        let o = num_shapes + 3 * num_joints;
        let rot6d: [f64; 6] = flat[o..o + 6].try_into().unwrap();
        let trans = Vector3::new(flat[o + 6], flat[o + 7], flat[o + 8]);
        Ok(Self {
            beta,
            theta,
            rot6d,
            trans,
        })
    }
}
