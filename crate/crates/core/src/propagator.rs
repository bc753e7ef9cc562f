use nalgebra::{Matrix3, Matrix4, Matrix5, Vector4, Vector5};
use serde::{Deserialize, Serialize};

use crate::medium::{FieldPoint, ObservableState};

/// Affine map on `(E, L, C, D, 1)`; the last row is always `(0, 0, 0, 0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffinePropagator {
    matrix: Matrix5<f64>,
}

impl AffinePropagator {
    pub fn identity() -> Self {
        Self {
            matrix: Matrix5::identity(),
        }
    }

    /// Builds from the linear 4x4 block and the affine column.
    pub fn from_parts(linear: Matrix4<f64>, offset: Vector4<f64>) -> Self {
        let mut matrix = Matrix5::identity();
        matrix.fixed_view_mut::<4, 4>(0, 0).copy_from(&linear);
        matrix.fixed_view_mut::<4, 1>(0, 4).copy_from(&offset);
        Self { matrix }
    }

    /// Adiabat-type map: a 3x3 block on `(E, L, C)`, a scalar on `D`, no offset.
    pub fn from_adiabat(elc: Matrix3<f64>, d_scale: f64) -> Self {
        let mut linear = Matrix4::zeros();
        linear.fixed_view_mut::<3, 3>(0, 0).copy_from(&elc);
        linear[(3, 3)] = d_scale;
        Self::from_parts(linear, Vector4::zeros())
    }

    pub fn matrix(&self) -> &Matrix5<f64> {
        &self.matrix
    }

    pub fn linear(&self) -> Matrix4<f64> {
        self.matrix.fixed_view::<4, 4>(0, 0).into_owned()
    }

    pub fn offset(&self) -> Vector4<f64> {
        self.matrix.fixed_view::<4, 1>(0, 4).into_owned()
    }

    pub fn elc_block(&self) -> Matrix3<f64> {
        self.matrix.fixed_view::<3, 3>(0, 0).into_owned()
    }

    /// `self` applied after `first`.
    pub fn after(&self, first: &AffinePropagator) -> AffinePropagator {
        AffinePropagator {
            matrix: self.matrix * first.matrix,
        }
    }

    pub fn apply_vector(&self, x: &Vector4<f64>) -> Vector4<f64> {
        let ext = Vector5::new(x[0], x[1], x[2], x[3], 1.0);
        (self.matrix * ext).fixed_rows::<4>(0).into_owned()
    }

    /// Maps a state; the result is labeled with the segment's final field.
    pub fn apply(&self, state: &ObservableState, end: FieldPoint) -> ObservableState {
        let x = Vector4::from(state.as_array());
        let y = self.apply_vector(&x);
        ObservableState::new(y[0], y[1], y[2], y[3], end)
    }

    /// Element `(row, col)` with 1-based indices as in the matrix literature.
    pub fn element(&self, row: usize, col: usize) -> f64 {
        self.matrix[(row - 1, col - 1)]
    }

    pub fn max_abs_diff(&self, other: &AffinePropagator) -> f64 {
        (self.matrix - other.matrix).amax()
    }
}

impl Default for AffinePropagator {
    fn default() -> Self {
        Self::identity()
    }
}
