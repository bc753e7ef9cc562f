//! Two coupled spins in an external field.
//!
//! The Hamiltonian `omega * B1 + J * B2` has levels `(-Omega, 0, 0, Omega)` with
//! `Omega = sqrt(omega^2 + J^2)`. The state is carried as the four expectation
//! values `(E, L, C, D)`; the `V` component is pinned to zero. Matrices below
//! are written in the instantaneous energy basis ordered as the levels above.

use nalgebra::{Complex, Matrix4};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_non_negative, require_positive, Error, Result};

pub type Complex64 = Complex<f64>;

/// Most negative eigenvalue tolerated in a reconstructed density matrix.
pub const PSD_TOLERANCE: f64 = -1e-10;

/// Working-medium constants: the coupling `J` (the uncontrollable gap) and
/// the bath dephasing coefficient used on the isochores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumParams {
    j: f64,
    gamma_b: f64,
}

impl MediumParams {
    pub fn new(j: f64, gamma_b: f64) -> Result<Self> {
        require_positive("J", j)?;
        require_non_negative("gamma_b", gamma_b)?;
        Ok(Self { j, gamma_b })
    }

    pub fn with_coupling(j: f64) -> Result<Self> {
        Self::new(j, 0.0)
    }

    pub fn j(&self) -> f64 {
        self.j
    }

    pub fn gamma_b(&self) -> f64 {
        self.gamma_b
    }

    pub fn field(&self, omega: f64) -> Result<FieldPoint> {
        effective_gap(omega, self)
    }
}

/// External field together with the gap it produces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldPoint {
    omega: f64,
    gap: f64,
}

impl FieldPoint {
    /// Caller guarantees `gap = hypot(omega, J)` with `omega >= 0`.
    pub(crate) fn from_parts(omega: f64, gap: f64) -> Self {
        Self { omega, gap }
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// `Omega = sqrt(omega^2 + J^2)`.
    pub fn gap(&self) -> f64 {
        self.gap
    }

    /// `omega / Omega`, the sine of the field angle.
    pub fn ratio(&self) -> f64 {
        self.omega / self.gap
    }
}

pub fn effective_gap(omega: f64, medium: &MediumParams) -> Result<FieldPoint> {
    require_non_negative("omega", omega)?;
    Ok(FieldPoint {
        omega,
        gap: omega.hypot(medium.j),
    })
}

/// Heat bath: temperature and conductance `Gamma = kappa_plus + kappa_minus`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bath {
    temperature: f64,
    conductance: f64,
}

impl Bath {
    pub fn new(temperature: f64, conductance: f64) -> Result<Self> {
        require_positive("T", temperature)?;
        require_positive("Gamma", conductance)?;
        Ok(Self {
            temperature,
            conductance,
        })
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn conductance(&self) -> f64 {
        self.conductance
    }

    /// `(kappa_plus, kappa_minus)` from detailed balance at gap `Omega`.
    pub fn rates(&self, field: &FieldPoint) -> (f64, f64) {
        let boltzmann = (-field.gap / self.temperature).exp();
        let kappa_minus = self.conductance / (1.0 + boltzmann);
        (self.conductance - kappa_minus, kappa_minus)
    }
}

/// Thermal energy `Omega (exp(-2 Omega/T) - 1) / Z`, evaluated as
/// `-Omega tanh(Omega / 2T)` so that `Omega/T -> inf` gives `-Omega`.
pub fn equilibrium_energy(field: &FieldPoint, temperature: f64) -> f64 {
    -field.gap * (field.gap / (2.0 * temperature)).tanh()
}

/// Thermal value of `D`, equal to `E_eq^2 / Omega`.
pub fn equilibrium_d(field: &FieldPoint, temperature: f64) -> f64 {
    let e = equilibrium_energy(field, temperature);
    e * e / field.gap
}

/// Expectation values `(E, L, C, D)` at a field point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservableState {
    pub e: f64,
    pub l: f64,
    pub c: f64,
    pub d: f64,
    pub at: FieldPoint,
}

impl ObservableState {
    pub fn new(e: f64, l: f64, c: f64, d: f64, at: FieldPoint) -> Self {
        Self { e, l, c, d, at }
    }

    pub fn thermal(at: FieldPoint, temperature: f64) -> Self {
        Self::new(
            equilibrium_energy(&at, temperature),
            0.0,
            0.0,
            equilibrium_d(&at, temperature),
            at,
        )
    }

    pub fn maximally_mixed(at: FieldPoint) -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0, at)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.e, self.l, self.c, self.d]
    }

    pub fn from_array(v: [f64; 4], at: FieldPoint) -> Self {
        Self::new(v[0], v[1], v[2], v[3], at)
    }

    /// Magnitude of the coherences, `sqrt(L^2 + C^2)`.
    pub fn coherence(&self) -> f64 {
        self.l.hypot(self.c)
    }
}

/// Observable operators in the energy basis at gap `Omega`:
/// `(H, L, C, D)`.
pub fn energy_basis_operators(gap: f64) -> [Matrix4<Complex64>; 4] {
    let z = Complex64::new(0.0, 0.0);
    let re = |x: f64| Complex64::new(x, 0.0);
    let im = |x: f64| Complex64::new(0.0, x);

    let mut h = Matrix4::from_element(z);
    h[(0, 0)] = re(-gap);
    h[(3, 3)] = re(gap);

    let mut l = Matrix4::from_element(z);
    l[(0, 3)] = re(gap);
    l[(3, 0)] = re(gap);

    let mut c = Matrix4::from_element(z);
    c[(0, 3)] = im(gap);
    c[(3, 0)] = im(-gap);

    let mut d = Matrix4::from_element(z);
    d[(0, 0)] = re(gap);
    d[(1, 1)] = re(-gap);
    d[(2, 2)] = re(-gap);
    d[(3, 3)] = re(gap);

    [h, l, c, d]
}

/// Density matrix `I/4 + sum_O <O> O / tr(O^2)` in the energy basis.
///
/// `tr(H^2) = tr(L^2) = tr(C^2) = 2 Omega^2` and `tr(D^2) = 4 Omega^2`, so the
/// sparsity is the outer 2x2 block plus the diagonal.
pub fn reconstruct_rho(state: &ObservableState) -> Result<Matrix4<Complex64>> {
    let rho = density_matrix(state)?;
    let min = min_eigenvalue(&rho);
    if min < PSD_TOLERANCE {
        return Err(Error::PhysicalityViolation {
            min_eigenvalue: min,
        });
    }
    Ok(rho)
}

fn density_matrix(state: &ObservableState) -> Result<Matrix4<Complex64>> {
    let values = state.as_array();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(invalid("state", "expectation values must be finite"));
    }
    let gap = state.at.gap;
    let ops = energy_basis_operators(gap);
    let norms = [2.0, 2.0, 2.0, 4.0].map(|k| k * gap * gap);
    let mut rho = Matrix4::identity() * Complex64::new(0.25, 0.0);
    for ((op, value), norm) in ops.iter().zip(values).zip(norms) {
        rho += op * Complex64::new(value / norm, 0.0);
    }
    Ok(rho)
}

fn eigenvalues(rho: &Matrix4<Complex64>) -> [f64; 4] {
    let eig = rho.symmetric_eigenvalues();
    [eig[0], eig[1], eig[2], eig[3]]
}

fn min_eigenvalue(rho: &Matrix4<Complex64>) -> f64 {
    eigenvalues(rho).into_iter().fold(f64::INFINITY, f64::min)
}

/// Recovers `(E, L, C, D)` from a density matrix as `tr(rho O)`.
pub fn extract_observables(rho: &Matrix4<Complex64>, at: FieldPoint) -> ObservableState {
    let ops = energy_basis_operators(at.gap);
    let v = ops.map(|op| (rho * op).trace().re);
    ObservableState::from_array(v, at)
}

fn shannon(p: impl IntoIterator<Item = f64>) -> f64 {
    p.into_iter()
        .filter(|&x| x > 0.0)
        .map(|x| -x * x.ln())
        .sum()
}

/// Von Neumann and energy entropies `(S_vn, S_E)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entropies {
    pub von_neumann: f64,
    pub energy: f64,
}

pub fn entropies(state: &ObservableState) -> Result<Entropies> {
    let rho = reconstruct_rho(state)?;
    let von_neumann = shannon(eigenvalues(&rho));
    let energy = shannon((0..4).map(|k| rho[(k, k)].re));
    Ok(Entropies {
        von_neumann,
        energy,
    })
}
