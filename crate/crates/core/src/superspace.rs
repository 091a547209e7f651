//! The lifted periodic operator on the 2-torus.
//!
//! Finite differences use the diagonal stencil along `(1, theta)` on an
//! `nx x ny` mesh. Every hop advances both indices, so the mesh splits into
//! `gcd(nx, ny)` closed chains of length `lcm(nx, ny)`; each chain is a Bloch
//! chain whose phase is the product of the wrap phases met along it. The
//! plane-wave discretisation gives a banded pencil solved by slicing.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    cholesky_reduce, eigenvalues_in_range_tol, generalized_hermitian_eigenvalues, hermitian_eigenvalues,
    BandedHermitian, CyclicTridiagonal, HermitianMatrix, Inertia, SpectrumSample, Window,
};
use crate::potentials::{ProblemKind, QuasiperiodicProblem, Surface};
use crate::supercell::{Gap, GapSet};

pub const MIN_MESH: usize = 8;
pub const DEFAULT_H: f64 = 0.02;
pub const DEFAULT_N_PW: usize = 50;

fn check_phase(name: &str, v: f64) -> Result<()> {
    if !(0.0..=TAU).contains(&v) {
        return Err(Error::InvalidParameter(format!("{name} = {v} outside [0, 2 pi]")));
    }
    Ok(())
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Finite-difference discretisation of the lifted operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedProblem {
    pub problem: QuasiperiodicProblem,
    pub alpha: f64,
    pub beta: f64,
    pub h: f64,
}

impl LiftedProblem {
    pub fn new(problem: QuasiperiodicProblem, h: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidParameter(format!("mesh spacing {h} must be positive")));
        }
        if problem.kind == ProblemKind::WaveSpeed {
            return Err(Error::InvalidParameter(
                "wave-speed coefficients are laminates, not torus fields".into(),
            ));
        }
        check_phase("alpha", alpha)?;
        check_phase("beta", beta)?;
        let p = Self {
            problem,
            alpha,
            beta,
            h,
        };
        let (nx, ny) = p.mesh();
        if nx < MIN_MESH || ny < MIN_MESH {
            return Err(Error::MeshTooCoarse { nx, ny });
        }
        Ok(p)
    }

    pub fn with_phases(&self, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(self.problem.clone(), self.h, alpha, beta)
    }

    /// `(round(1/h), round(1/(theta h)))`.
    pub fn mesh(&self) -> (usize, usize) {
        let theta = self.problem.field.theta;
        (
            (1.0 / self.h).round() as usize,
            (1.0 / (theta * self.h)).round() as usize,
        )
    }

    /// Slope actually resolved by the snapped mesh, `nx / ny`.
    pub fn theta_mesh(&self) -> f64 {
        let (nx, ny) = self.mesh();
        nx as f64 / ny as f64
    }

    pub fn dim(&self) -> usize {
        let (nx, ny) = self.mesh();
        nx * ny
    }

    fn node_value(&self, i: usize, j: usize) -> (f64, f64) {
        let (nx, ny) = self.mesh();
        let f = &self.problem.field;
        let v = f
            .surface
            .eval(i as f64 / nx as f64 + f.offset.0, j as f64 / ny as f64 + f.offset.1);
        self.problem.split(v)
    }

    /// Phase picked up by the hop `(i, j) -> (i + 1, j + 1)`.
    fn hop_phase(&self, i: usize, j: usize) -> Complex64 {
        let (nx, ny) = self.mesh();
        let mut p = Complex64::new(1.0, 0.0);
        if i + 1 == nx {
            p *= Complex64::from_polar(1.0, self.alpha);
        }
        if j + 1 == ny {
            p *= Complex64::from_polar(1.0, self.beta);
        }
        p
    }

    /// The closed diagonal chains of the mesh.
    pub fn chains(&self) -> Vec<Chain> {
        let (nx, ny) = self.mesh();
        let g = gcd(nx, ny);
        let len = nx / g * ny;
        let inv_h2 = (nx * nx) as f64;
        (0..g)
            .map(|c| {
                let mut nodes = Vec::with_capacity(len);
                let mut gauge = Vec::with_capacity(len);
                let mut diag = Vec::with_capacity(len);
                let mut weight = Vec::with_capacity(len);
                let mut d = Complex64::new(1.0, 0.0);
                for k in 0..len {
                    let (i, j) = (k % nx, (c + k) % ny);
                    let (v, w) = self.node_value(i, j);
                    nodes.push((i, j));
                    gauge.push(d);
                    diag.push(2.0 * inv_h2 + v);
                    weight.push(w);
                    d *= self.hop_phase(i, j).conj();
                }
                let mut off = vec![Complex64::new(-inv_h2, 0.0); len];
                // d has accumulated the conjugate of the loop phase
                off[len - 1] = -d.conj() * inv_h2;
                let stiffness = CyclicTridiagonal::new(diag, off).expect("chains have length >= 8");
                let operator = if self.problem.kind.has_weight() {
                    stiffness.scaled_by_weights(&weight).expect("positive weight")
                } else {
                    stiffness
                };
                Chain {
                    nodes,
                    gauge,
                    weight: self.problem.kind.has_weight().then_some(weight),
                    operator,
                }
            })
            .collect()
    }
}

/// One closed chain of mesh nodes in a gauge where all hops are real except
/// the closing one.
#[derive(Debug, Clone)]
pub struct Chain {
    pub nodes: Vec<(usize, usize)>,
    /// `u = gauge * v` maps chain vectors back to mesh values.
    pub gauge: Vec<Complex64>,
    pub weight: Option<Vec<f64>>,
    pub operator: CyclicTridiagonal,
}

/// Dense `(nx ny) x (nx ny)` matrix of the lifted stencil plus potential,
/// node `(i, j)` at index `i ny + j`. The weight is not applied.
pub fn assemble_lifted_fd(p: &LiftedProblem) -> Result<HermitianMatrix> {
    let (nx, ny) = p.mesh();
    if nx < MIN_MESH || ny < MIN_MESH {
        return Err(Error::MeshTooCoarse { nx, ny });
    }
    let inv_h2 = (nx * nx) as f64;
    let mut m = HermitianMatrix::zeros(nx * ny);
    for i in 0..nx {
        for j in 0..ny {
            let k = i * ny + j;
            let (v, _) = p.node_value(i, j);
            m.add_hermitian(k, k, Complex64::new(2.0 * inv_h2 + v, 0.0));
            let k2 = ((i + 1) % nx) * ny + (j + 1) % ny;
            m.add_hermitian(k, k2, -p.hop_phase(i, j) * inv_h2);
        }
    }
    m.check()?;
    Ok(m)
}

/// Weight samples in the node order of [`assemble_lifted_fd`].
pub fn lifted_weight(p: &LiftedProblem) -> Option<Vec<f64>> {
    let (nx, ny) = p.mesh();
    p.problem
        .kind
        .has_weight()
        .then(|| (0..nx * ny).map(|k| p.node_value(k / ny, k % ny).1).collect())
}

/// The `n_eigs` lowest eigenvalues of the lifted finite-difference operator.
pub fn superspace_spectrum_fd(p: &LiftedProblem, n_eigs: usize) -> Result<SpectrumSample> {
    let mut all: Vec<f64> = p
        .chains()
        .par_iter()
        .flat_map_iter(|c| c.operator.lowest(n_eigs))
        .collect();
    all.sort_by(f64::total_cmp);
    all.truncate(n_eigs);
    Ok(SpectrumSample::new(all))
}

/// All eigenvalues of the lifted finite-difference operator in `[lo, hi)`.
pub fn superspace_spectrum_fd_in(p: &LiftedProblem, window: Window) -> Result<SpectrumSample> {
    let all: Vec<f64> = p
        .chains()
        .par_iter()
        .flat_map_iter(|c| c.operator.eigenvalues_in(window.lo, window.hi))
        .collect();
    Ok(SpectrumSample::new(all))
}

/// Full spectrum through the dense matrix; a cross-check for small meshes.
pub fn superspace_spectrum_fd_dense(p: &LiftedProblem) -> Result<SpectrumSample> {
    let a = assemble_lifted_fd(p)?;
    match lifted_weight(p) {
        Some(w) => generalized_hermitian_eigenvalues(&a, &w),
        None => hermitian_eigenvalues(&a),
    }
}

/// Windowed spectra at several `alpha` with fixed `beta`.
pub fn fd_alpha_sweep(p: &LiftedProblem, alphas: &[f64], window: Window) -> Result<Vec<SpectrumSample>> {
    alphas
        .par_iter()
        .map(|&a| superspace_spectrum_fd_in(&p.with_phases(a, p.beta)?, window))
        .collect()
}

/// A mesh eigenfunction of the lifted operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperspaceMode {
    pub eigenvalue: f64,
    pub nx: usize,
    pub ny: usize,
    /// Values at node `(i, j)`, index `i ny + j`, unit Euclidean norm.
    pub values: Vec<Complex64>,
}

impl SuperspaceMode {
    /// `(x, y, u)` over the mesh, `x` outer.
    pub fn grid(&self) -> impl Iterator<Item = (f64, f64, Complex64)> + '_ {
        self.values.iter().enumerate().map(|(k, &u)| {
            let (i, j) = (k / self.ny, k % self.ny);
            (i as f64 / self.nx as f64, j as f64 / self.ny as f64, u)
        })
    }

    /// Nearest-node samples along `(x, theta x)` for `x` in `[0, length)`
    /// at the mesh step in `x`.
    pub fn slice_trace(&self, theta: f64, length: f64) -> Vec<(f64, Complex64)> {
        let steps = (length * self.nx as f64).floor() as usize;
        (0..steps)
            .map(|s| {
                let x = s as f64 / self.nx as f64;
                let i = s % self.nx;
                let j = ((theta * x).rem_euclid(1.0) * self.ny as f64).round() as usize % self.ny;
                (x, self.values[i * self.ny + j])
            })
            .collect()
    }
}

/// Eigenfunction for the eigenvalue nearest `lambda`, by inverse iteration on
/// the chain that carries it.
pub fn superspace_mode(p: &LiftedProblem, lambda: f64) -> Result<SuperspaceMode> {
    let (nx, ny) = p.mesh();
    let chains = p.chains();
    let pad = 1.0 + 1e-3 * lambda.abs();
    let (chain, eig) = chains
        .iter()
        .flat_map(|c| {
            c.operator
                .eigenvalues_in(lambda - pad, lambda + pad)
                .into_iter()
                .map(move |e| (c, e))
        })
        .min_by(|a, b| (a.1 - lambda).abs().total_cmp(&(b.1 - lambda).abs()))
        .ok_or(Error::NotInGap { lambda })?;
    let v = chain.operator.eigenvector(eig, &[]);
    let mut values = vec![Complex64::new(0.0, 0.0); nx * ny];
    for (k, &(i, j)) in chain.nodes.iter().enumerate() {
        let scale = chain.weight.as_ref().map_or(1.0, |w| 1.0 / w[k].sqrt());
        values[i * ny + j] = chain.gauge[k] * v[k] * scale;
    }
    let norm = values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    values.iter_mut().for_each(|z| *z /= norm);
    Ok(SuperspaceMode {
        eigenvalue: eig,
        nx,
        ny,
        values,
    })
}

/// Plane-wave discretisation of the lifted operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneWaveProblem {
    pub problem: QuasiperiodicProblem,
    pub alpha: f64,
    pub beta: f64,
    pub n_pw: usize,
}

impl PlaneWaveProblem {
    pub fn new(problem: QuasiperiodicProblem, n_pw: usize, alpha: f64, beta: f64) -> Result<Self> {
        if n_pw < 2 {
            return Err(Error::TruncationTooSmall { n_pw });
        }
        if problem.kind == ProblemKind::WaveSpeed {
            return Err(Error::InvalidParameter(
                "wave-speed coefficients have no finite Fourier series".into(),
            ));
        }
        check_phase("alpha", alpha)?;
        check_phase("beta", beta)?;
        Ok(Self {
            problem,
            alpha,
            beta,
            n_pw,
        })
    }

    pub fn with_phases(&self, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(self.problem.clone(), self.n_pw, alpha, beta)
    }

    /// Modes per direction, `2 N + 1`.
    pub fn side(&self) -> usize {
        2 * self.n_pw + 1
    }

    pub fn dim(&self) -> usize {
        self.side() * self.side()
    }

    /// `(m, n)` of basis index `k`.
    pub fn mode(&self, k: usize) -> (i64, i64) {
        let s = self.side();
        let n = self.n_pw as i64;
        ((k / s) as i64 - n, (k % s) as i64 - n)
    }

    /// `((2 pi m + alpha) + theta (2 pi n + beta))^2`.
    pub fn kinetic(&self, m: i64, n: i64) -> f64 {
        let theta = self.problem.field.theta;
        let kx = TAU * m as f64 + self.alpha;
        let ky = TAU * n as f64 + self.beta;
        (kx + theta * ky).powi(2)
    }
}

fn shifted_coefficient(s: &Surface, offset: (f64, f64), dm: i64, dn: i64) -> Complex64 {
    let (Ok(dm32), Ok(dn32)) = (i32::try_from(dm), i32::try_from(dn)) else {
        return Complex64::new(0.0, 0.0);
    };
    let c = s.coefficient(dm32, dn32);
    if c.norm() == 0.0 {
        return c;
    }
    c * Complex64::from_polar(1.0, TAU * (dm as f64 * offset.0 + dn as f64 * offset.1))
}

/// Stiffness in the plane-wave basis `e^{i((2 pi m + alpha) x + (2 pi n + beta) y)}`
/// as a band matrix: the kinetic diagonal plus, for Schrodinger problems, the
/// convolution by the potential's coefficients. Weighted problems carry the
/// weight convolution as the right-hand side and fail with `IndefiniteWeight`
/// if it is not positive definite.
pub fn assemble_plane_wave(p: &PlaneWaveProblem) -> Result<BandedHermitian> {
    let surface = &p.problem.field.surface;
    let offset = p.problem.field.offset;
    let (rm, rn) = surface.support_radius();
    let s = p.side();
    let bw = (rm as usize * s + rn as usize).min(p.dim() - 1);
    let weighted = p.problem.kind.has_weight();
    let conv = |i: usize, j: usize| {
        let (mi, ni) = p.mode(i);
        let (mj, nj) = p.mode(j);
        shifted_coefficient(surface, offset, mi - mj, ni - nj)
    };
    let a = BandedHermitian::from_fn(p.dim(), bw, |i, j| {
        let (m, n) = p.mode(i);
        let kin = if i == j { p.kinetic(m, n) } else { 0.0 };
        let v = if weighted { Complex64::new(0.0, 0.0) } else { conv(i, j) };
        Complex64::new(kin, 0.0) + v
    })?;
    if !weighted {
        return Ok(a);
    }
    let a = a.with_weight(conv)?;
    if !a.weight_is_positive_definite() {
        return Err(Error::IndefiniteWeight);
    }
    Ok(a)
}

/// Plane-wave eigenvalues in `window`, each resolved to `tol`.
pub fn pwe_spectrum_in(p: &PlaneWaveProblem, window: Window, tol: f64) -> Result<SpectrumSample> {
    let a = assemble_plane_wave(p)?;
    Ok(SpectrumSample::new(eigenvalues_in_range_tol(
        &a, window.lo, window.hi, tol,
    )))
}

/// Full plane-wave spectrum by dense reduction; for small truncations.
pub fn pwe_spectrum_dense(p: &PlaneWaveProblem) -> Result<SpectrumSample> {
    let a = assemble_plane_wave(p)?;
    let k = a.to_dense();
    match a.weight_dense() {
        Some(w) => hermitian_eigenvalues(&cholesky_reduce(&k, &w)?),
        None => hermitian_eigenvalues(&k),
    }
}

/// Plane-wave spectra at several `alpha`, restricted to `windows`.
pub fn pwe_alpha_sweep(
    p: &PlaneWaveProblem,
    alphas: &[f64],
    windows: &[Window],
    tol: f64,
) -> Result<Vec<SpectrumSample>> {
    alphas
        .par_iter()
        .map(|&a| {
            let q = p.with_phases(a, p.beta)?;
            let m = assemble_plane_wave(&q)?;
            let mut ev = Vec::new();
            for w in windows {
                ev.extend(eigenvalues_in_range_tol(&m, w.lo, w.hi, tol));
            }
            Ok(SpectrumSample::new(ev))
        })
        .collect()
}

/// Eigenvalue counts deeper than the margin inside one gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapPollution {
    pub gap: Gap,
    pub fd: usize,
    pub pwe: usize,
}

/// Per gap, how many eigenvalues of each spectrum lie more than `margin`
/// inside it.
pub fn pollution_report(fd: &SpectrumSample, pwe: &SpectrumSample, gaps: &GapSet, margin: f64) -> Vec<GapPollution> {
    let deep = |s: &SpectrumSample, g: &Gap| s.eigenvalues.iter().filter(|&&e| g.depth(e) > margin).count();
    gaps.gaps
        .iter()
        .map(|g| GapPollution {
            gap: *g,
            fd: deep(fd, g),
            pwe: deep(pwe, g),
        })
        .collect()
}

/// Per gap, plane-wave eigenvalues deeper than `margin` inside it, summed
/// over `alphas`. Uses two inertia counts per gap instead of the spectrum.
pub fn pwe_gap_counts(p: &PlaneWaveProblem, alphas: &[f64], gaps: &GapSet, margin: f64) -> Result<Vec<usize>> {
    let per_alpha = alphas
        .par_iter()
        .map(|&a| {
            let m = assemble_plane_wave(&p.with_phases(a, p.beta)?)?;
            Ok(gaps
                .gaps
                .iter()
                .map(|g| {
                    let (lo, hi) = (g.lo + margin, g.hi - margin);
                    if lo < hi {
                        m.count_below(hi) - m.count_below(lo).min(m.count_below(hi))
                    } else {
                        0
                    }
                })
                .collect::<Vec<usize>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((0..gaps.gaps.len())
        .map(|k| per_alpha.iter().map(|c| c[k]).sum())
        .collect())
}

/// [`pollution_report`] with the plane-wave side from [`pwe_gap_counts`].
pub fn pollution_report_counts(
    fd: &SpectrumSample,
    pw: &PlaneWaveProblem,
    alphas: &[f64],
    gaps: &GapSet,
    margin: f64,
) -> Result<Vec<GapPollution>> {
    let counts = pwe_gap_counts(pw, alphas, gaps, margin)?;
    let empty = SpectrumSample::new(Vec::new());
    Ok(pollution_report(fd, &empty, gaps, margin)
        .into_iter()
        .zip(counts)
        .map(|(r, pwe)| GapPollution { pwe, ..r })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::CoefficientField;

    fn golden() -> f64 {
        crate::contfrac::GOLDEN
    }

    fn problem(surface: Surface) -> QuasiperiodicProblem {
        QuasiperiodicProblem::new(ProblemKind::Schrodinger, CoefficientField::new(surface, golden())).unwrap()
    }

    #[test]
    fn mesh_snapping() {
        let p = LiftedProblem::new(problem(Surface::sin2d()), 0.02, 0.0, 0.0).unwrap();
        assert_eq!(p.mesh(), (50, 31));
        assert!((p.theta_mesh() - golden()).abs() / golden() < 0.02);
        let err = LiftedProblem::new(problem(Surface::sin2d()), 0.2, 0.0, 0.0).unwrap_err();
        assert_eq!(err, Error::MeshTooCoarse { nx: 5, ny: 3 });
    }

    #[test]
    fn chains_match_dense_assembly() {
        for (alpha, beta) in [(0.0, 0.0), (1.1, 0.0), (0.4, 2.3)] {
            let p = LiftedProblem::new(problem(Surface::sin2d()), 1.0 / 13.0, alpha, beta).unwrap();
            let (nx, ny) = p.mesh();
            assert_eq!((nx, ny), (13, 8));
            let dense = superspace_spectrum_fd_dense(&p).unwrap();
            let sliced = superspace_spectrum_fd(&p, nx * ny).unwrap();
            for (a, b) in dense.eigenvalues.iter().zip(&sliced.eigenvalues) {
                assert!((a - b).abs() < 1e-7 * a.abs().max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn non_coprime_mesh_has_several_chains() {
        // theta = 1, h = 1/10: nx = ny = 10, ten chains of length 10
        let q =
            QuasiperiodicProblem::new(ProblemKind::Schrodinger, CoefficientField::new(Surface::sin2d(), 1.0)).unwrap();
        let p = LiftedProblem::new(q, 0.1, 0.7, 1.9).unwrap();
        assert_eq!(p.chains().len(), 10);
        let dense = superspace_spectrum_fd_dense(&p).unwrap();
        let sliced = superspace_spectrum_fd(&p, 100).unwrap();
        for (a, b) in dense.eigenvalues.iter().zip(&sliced.eigenvalues) {
            assert!((a - b).abs() < 1e-7 * a.abs().max(1.0));
        }
    }

    #[test]
    fn free_and_shifted_lifted_spectra() {
        let p = LiftedProblem::new(problem(Surface::zero()), 0.05, 0.0, 0.0).unwrap();
        let s = superspace_spectrum_fd(&p, 5).unwrap();
        assert!(s.eigenvalues[0].abs() < 1e-8);
        assert!(s.eigenvalues.iter().all(|&e| e > -1e-8));
        let shifted = LiftedProblem::new(problem(Surface::constant(2.5)), 0.05, 0.0, 0.0).unwrap();
        let t = superspace_spectrum_fd(&shifted, 5).unwrap();
        for (a, b) in s.eigenvalues.iter().zip(&t.eigenvalues) {
            assert!((b - a - 2.5).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_mode_of_free_operator() {
        // 21 x 13 mesh: a single chain, so the zero mode is simple
        let p = LiftedProblem::new(problem(Surface::zero()), 1.0 / 21.0, 0.0, 0.0).unwrap();
        assert_eq!(p.chains().len(), 1);
        let m = superspace_mode(&p, 0.0).unwrap();
        let first = m.values[0];
        assert!(m.values.iter().all(|z| (z - first).norm() < 1e-6));
        assert_eq!(m.slice_trace(golden(), 2.0).len(), 42);
    }

    #[test]
    fn mode_is_an_eigenvector_of_the_dense_matrix() {
        let p = LiftedProblem::new(problem(Surface::sin2d()), 1.0 / 13.0, 0.9, 0.3).unwrap();
        let a = assemble_lifted_fd(&p).unwrap();
        let m = superspace_mode(&p, 40.0).unwrap();
        let av = a.mul_vec(&m.values);
        let res: f64 = av
            .iter()
            .zip(&m.values)
            .map(|(x, v)| (x - v * m.eigenvalue).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(res < 1e-6 * m.eigenvalue.abs().max(1.0), "residual {res}");
    }

    #[test]
    fn plane_wave_structure() {
        let p = PlaneWaveProblem::new(problem(Surface::sin2d()), 3, 0.2, 0.5).unwrap();
        let a = assemble_plane_wave(&p).unwrap();
        assert_eq!(a.bandwidth(), 8);
        let (m, n) = p.mode(0);
        assert_eq!((m, n), (-3, -3));
        // coupling to (m - 1, n) carries c(1, 0) = -i/2
        let i = 7 * 4 + 3;
        let j = 7 * 3 + 3;
        assert!((a.get(i, j) - Complex64::new(0.0, -0.5)).norm() < 1e-15);
        assert!(PlaneWaveProblem::new(problem(Surface::sin2d()), 1, 0.0, 0.0).is_err());
    }

    #[test]
    fn plane_wave_free_spectrum_is_exact() {
        let p = PlaneWaveProblem::new(problem(Surface::zero()), 4, 0.3, 0.8).unwrap();
        let s = pwe_spectrum_dense(&p).unwrap();
        let mut exact: Vec<f64> = (0..p.dim())
            .map(|k| {
                let (m, n) = p.mode(k);
                p.kinetic(m, n)
            })
            .collect();
        exact.sort_by(f64::total_cmp);
        for (a, b) in s.eigenvalues.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-9 * b.max(1.0));
        }
    }

    #[test]
    fn windowed_plane_wave_matches_dense() {
        let p = PlaneWaveProblem::new(problem(Surface::sin2d()), 5, 0.4, 0.0).unwrap();
        let dense = pwe_spectrum_dense(&p).unwrap();
        let w = Window::new(0.0, 60.0).unwrap();
        let win = pwe_spectrum_in(&p, w, 1e-9).unwrap();
        let expect: Vec<f64> = dense.eigenvalues.iter().copied().filter(|&e| w.contains(e)).collect();
        assert_eq!(win.len(), expect.len());
        for (a, b) in win.eigenvalues.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn generalized_plane_wave_pencil() {
        let q = QuasiperiodicProblem::sin2d_generalized(golden());
        let p = PlaneWaveProblem::new(q, 4, 0.5, 0.0).unwrap();
        let s = pwe_spectrum_dense(&p).unwrap();
        let w = Window::new(0.0, 30.0).unwrap();
        let win = pwe_spectrum_in(&p, w, 1e-10).unwrap();
        let expect: Vec<f64> = s.eigenvalues.iter().copied().filter(|&e| w.contains(e)).collect();
        assert_eq!(win.len(), expect.len());
        for (a, b) in win.eigenvalues.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-7 * b.max(1.0));
        }
    }

    #[test]
    fn indefinite_weight_is_rejected() {
        let mut q = QuasiperiodicProblem::sin2d_generalized(golden());
        // strong oscillation makes the truncated weight indefinite
        q.field.surface = Surface::sin2d_plus(0.05);
        let p = PlaneWaveProblem::new(q, 3, 0.0, 0.0).unwrap();
        assert!(matches!(assemble_plane_wave(&p), Err(Error::IndefiniteWeight)));
    }

    #[test]
    fn pollution_counts() {
        let gaps = GapSet {
            window: Window::new(0.0, 10.0).unwrap(),
            gaps: vec![Gap { lo: 1.0, hi: 2.0 }],
        };
        let fd = SpectrumSample::new(vec![0.5, 1.0005, 2.5]);
        let pwe = SpectrumSample::new(vec![1.5, 1.7, 1.9995]);
        let r = pollution_report(&fd, &pwe, &gaps, 1e-3);
        assert_eq!((r[0].fd, r[0].pwe), (0, 2));
        let empty = GapSet {
            window: gaps.window,
            gaps: vec![],
        };
        assert!(pollution_report(&fd, &pwe, &empty, 1e-3).is_empty());
    }

    #[test]
    fn gap_counts_match_spectrum() {
        let p = PlaneWaveProblem::new(problem(Surface::sin2d()), 5, 0.0, 0.0).unwrap();
        let gaps = GapSet {
            window: Window::new(0.0, 40.0).unwrap(),
            gaps: vec![Gap { lo: 2.0, hi: 9.0 }, Gap { lo: 12.0, hi: 30.0 }],
        };
        let alphas = [0.3, 2.0];
        let spectra: Vec<SpectrumSample> = alphas
            .iter()
            .map(|&a| pwe_spectrum_dense(&p.with_phases(a, 0.0).unwrap()).unwrap())
            .collect();
        let all = SpectrumSample::union(&spectra);
        let direct = pollution_report(&all, &all, &gaps, 1e-3);
        let counted = pollution_report_counts(&all, &p, &alphas, &gaps, 1e-3).unwrap();
        assert_eq!(direct, counted);
        assert!(counted.iter().any(|r| r.pwe > 0));
    }
}
