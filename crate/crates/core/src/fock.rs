//! Truncated bosonic Fock space for the no-pair factorization theorem.
//!
//! A charged scalar field on a small momentum grid interacts with a fixed
//! external potential through three quadratic kernels: a particle block `A`,
//! an antiparticle block `B`, and a pair block `C` that creates or
//! annihilates particle-antiparticle pairs. The Schroedinger-picture
//! Hamiltonian is
//!
//! `H = dGamma_a(Omega + A) + dGamma_b(Omega + B) + sum C[p][q] a+_p b+_q + h.c.`
//!
//! With `C = 0` the dynamics conserves particle number mode by mode, and a
//! Hartree state `A+(F)^N |0>` evolves into the Hartree state of the
//! one-particle propagated orbital: that is the factorization theorem this
//! module checks numerically, with the dense matrix exponential on the
//! truncated occupation basis as the independent oracle. With `C` retained
//! the same machinery demonstrates the converse: pair production and a
//! nonzero entanglement entropy across the particle/antiparticle split.
//!
//! Everything here works in natural units (`c = hbar = 1`) and dense
//! `nalgebra` matrices; the basis is capped at six modes per species and six
//! total quanta, where exact diagonalization is cheap.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::C64;

/// Mode cap per species. Dense Fock matrices grow combinatorially; this cap
/// keeps every supported basis comfortably below ~2 * 10^4 states.
pub const MAX_MODES: usize = 6;

/// Cap on total quanta in the truncated basis.
pub const MAX_QUANTA: usize = 6;

const TWO_PI_CUBED: f64 = 248.05021344239853;

/// One-dimensional momentum grid with relativistic dispersion.
#[derive(Clone, Debug)]
pub struct ModeGrid {
    pub momenta: Vec<f64>,
    pub energies: Vec<f64>,
    pub mass: f64,
}

impl ModeGrid {
    /// Builds the grid and its energies `E_d = sqrt(p_d^2 + m^2)`.
    /// Momenta must be finite and pairwise distinct, the mass positive.
    pub fn new(momenta: Vec<f64>, mass: f64) -> Result<Self> {
        if momenta.is_empty() || momenta.len() > MAX_MODES {
            return Err(Error::Validation {
                field: "momenta",
                message: format!(
                    "need between 1 and {MAX_MODES} modes, got {}",
                    momenta.len()
                ),
            });
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::Validation {
                field: "mass",
                message: format!("mass must be positive and finite, got {mass}"),
            });
        }
        if momenta.iter().any(|p| !p.is_finite()) {
            return Err(Error::Validation {
                field: "momenta",
                message: "momenta must be finite".into(),
            });
        }
        for i in 0..momenta.len() {
            for j in (i + 1)..momenta.len() {
                if momenta[i] == momenta[j] {
                    return Err(Error::Validation {
                        field: "momenta",
                        message: format!("duplicate momentum {}", momenta[i]),
                    });
                }
            }
        }
        let energies = momenta.iter().map(|p| p.hypot(mass)).collect();
        Ok(Self {
            momenta,
            energies,
            mass,
        })
    }

    pub fn dim(&self) -> usize {
        self.momenta.len()
    }
}

/// Quadratic Hamiltonian data: free dispersion plus the three interaction
/// kernels. `e0` is the normal-ordering constant; it only contributes a
/// global phase, so the builder leaves it at zero by convention.
#[derive(Clone, Debug)]
pub struct QuadHamiltonian {
    /// Free dispersion `Omega`, one energy per mode.
    pub energies: Vec<f64>,
    /// Particle interaction kernel, Hermitian.
    pub a: DMatrix<C64>,
    /// Antiparticle interaction kernel, equal to `A` transposed (and to
    /// `A` conjugated) for a real potential.
    pub b: DMatrix<C64>,
    /// Pair-creation kernel; zero for number-conserving dynamics.
    pub c: DMatrix<C64>,
    /// Normal-ordering constant, kept at zero (phase-only).
    pub e0: f64,
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn check_hermitian(m: &DMatrix<C64>, name: &str) -> Result<()> {
    let scale = max_abs(m).max(1.0);
    let dev = max_abs(&(m - m.adjoint()));
    if dev > 1e-12 * scale {
        return Err(Error::InputConsistency(format!(
            "{name} kernel deviates from Hermitian by {dev:.3e} (scale {scale:.3e})"
        )));
    }
    Ok(())
}

impl QuadHamiltonian {
    /// Assembles a Hamiltonian from explicit blocks, for synthetic tests and
    /// randomized suites. `a` and `b` must be Hermitian within 1e-12; `c` is
    /// unconstrained (the conjugate term is added during second
    /// quantization).
    pub fn bare(
        energies: Vec<f64>,
        a: DMatrix<C64>,
        b: DMatrix<C64>,
        c: DMatrix<C64>,
    ) -> Result<Self> {
        let d = energies.len();
        for (m, name) in [(&a, "A"), (&b, "B"), (&c, "C")] {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::Usage(format!(
                    "{name} kernel is {}x{}, expected {d}x{d}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        check_hermitian(&a, "A")?;
        check_hermitian(&b, "B")?;
        Ok(Self {
            energies,
            a,
            b,
            c,
            e0: 0.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// One-particle block `Omega + A` driving the particle species.
    pub fn h_particle(&self) -> DMatrix<C64> {
        let mut h = self.a.clone();
        for (i, &e) in self.energies.iter().enumerate() {
            h[(i, i)] += C64::new(e, 0.0);
        }
        h
    }

    /// One-particle block `Omega + B` driving the antiparticle species.
    pub fn h_antiparticle(&self) -> DMatrix<C64> {
        let mut h = self.b.clone();
        for (i, &e) in self.energies.iter().enumerate() {
            h[(i, i)] += C64::new(e, 0.0);
        }
        h
    }

    pub fn has_pair_term(&self) -> bool {
        self.c.iter().any(|z| z.norm() > 0.0)
    }
}

/// Builds the three kernels from a potential profile in momentum space.
///
/// `phi_hat` is the Fourier transform of the real potential, evaluated at
/// the scalar momentum transfer; reality demands
/// `phi_hat(-k) = conj(phi_hat(k))`, which is verified at every transfer the
/// grid actually uses. The kernels are
///
/// `A(p,q) =  phi_hat(p - q) (2 E_p E_q - m^2) / ((2 pi)^3 sqrt(E_p E_q))`
/// `B(p,q) =  phi_hat(q - p) (2 E_p E_q - m^2) / ((2 pi)^3 sqrt(E_p E_q))`
/// `C(p,q) = -phi_hat(p + q) (2 E_p E_q + m^2) / ((2 pi)^3 sqrt(E_p E_q))`
///
/// so `A` is Hermitian and `B = A^T = conj(A)`; for a real even profile all
/// of these collapse to `B = A+ = A`. `with_pair` toggles whether `C` is
/// populated or zeroed.
pub fn build_kernels<F>(grid: &ModeGrid, phi_hat: F, with_pair: bool) -> Result<QuadHamiltonian>
where
    F: Fn(f64) -> C64,
{
    let d = grid.dim();
    let check_reality = |k: f64| -> Result<C64> {
        let v = phi_hat(k);
        let w = phi_hat(-k);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite {
                location: "phi_hat".into(),
                detail: format!("phi_hat({k}) = {v}"),
            });
        }
        let scale = v.norm().max(1.0);
        if (w - v.conj()).norm() > 1e-12 * scale {
            return Err(Error::InputConsistency(format!(
                "phi_hat violates the reality condition at k = {k}: \
                 phi_hat(-k) = {w}, conj(phi_hat(k)) = {}",
                v.conj()
            )));
        }
        Ok(v)
    };

    let mut a = DMatrix::zeros(d, d);
    let mut b = DMatrix::zeros(d, d);
    let mut c = DMatrix::zeros(d, d);
    for p in 0..d {
        for q in 0..d {
            let (ep, eq) = (grid.energies[p], grid.energies[q]);
            let root = (ep * eq).sqrt();
            let m2 = grid.mass * grid.mass;
            let minus = (2.0 * ep * eq - m2) / (TWO_PI_CUBED * root);
            let transfer = grid.momenta[p] - grid.momenta[q];
            a[(p, q)] = check_reality(transfer)? * minus;
            b[(p, q)] = check_reality(-transfer)? * minus;
            if with_pair {
                let plus = (2.0 * ep * eq + m2) / (TWO_PI_CUBED * root);
                c[(p, q)] = -check_reality(grid.momenta[p] + grid.momenta[q])? * plus;
            }
        }
    }
    check_hermitian(&a, "A").map_err(|_| {
        Error::InputConsistency("A kernel came out non-Hermitian; phi_hat is inconsistent".into())
    })?;
    let dev = max_abs(&(&b - a.transpose()));
    if dev > 1e-12 * max_abs(&a).max(1.0) {
        return Err(Error::InputConsistency(format!(
            "B deviates from A^T by {dev:.3e}; phi_hat is inconsistent"
        )));
    }
    Ok(QuadHamiltonian {
        energies: grid.energies.clone(),
        a,
        b,
        c,
        e0: 0.0,
    })
}

/// Occupation-number basis for `d` particle modes plus `d` antiparticle
/// modes, truncated at `n_max` total quanta and enumerated in lexicographic
/// order of the occupation vector `(n_1 .. n_d, nbar_1 .. nbar_d)`.
#[derive(Clone, Debug)]
pub struct FockBasis {
    pub d: usize,
    pub n_max: usize,
    pub states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
}

fn enumerate_occupations(modes: usize, n_max: usize) -> Vec<Vec<u8>> {
    fn rec(states: &mut Vec<Vec<u8>>, current: &mut Vec<u8>, pos: usize, budget: usize) {
        if pos == current.len() {
            states.push(current.clone());
            return;
        }
        for n in 0..=budget {
            current[pos] = n as u8;
            rec(states, current, pos + 1, budget - n);
        }
        current[pos] = 0;
    }
    let mut states = Vec::new();
    rec(&mut states, &mut vec![0u8; modes], 0, n_max);
    states
}

impl FockBasis {
    pub fn new(d: usize, n_max: usize) -> Result<Self> {
        if d == 0 || d > MAX_MODES {
            return Err(Error::Validation {
                field: "d",
                message: format!("need between 1 and {MAX_MODES} modes per species, got {d}"),
            });
        }
        if n_max > MAX_QUANTA {
            return Err(Error::Validation {
                field: "n_max",
                message: format!("truncation cap is {MAX_QUANTA} quanta, got {n_max}"),
            });
        }
        let states = enumerate_occupations(2 * d, n_max);
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Ok(Self {
            d,
            n_max,
            states,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, occ: &[u8]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    /// Total quanta in a basis state (particles plus antiparticles).
    pub fn total(&self, state: usize) -> usize {
        self.states[state].iter().map(|&n| n as usize).sum()
    }

    /// Particle number minus antiparticle number.
    pub fn charge(&self, state: usize) -> isize {
        let occ = &self.states[state];
        let pa: isize = occ[..self.d].iter().map(|&n| n as isize).sum();
        let pb: isize = occ[self.d..].iter().map(|&n| n as isize).sum();
        pa - pb
    }
}

/// Complex coefficients over a `FockBasis`, in basis order.
#[derive(Clone, Debug)]
pub struct FockStateVector {
    pub amplitudes: DVector<C64>,
}

impl FockStateVector {
    pub fn vacuum(basis: &FockBasis) -> Self {
        let mut amplitudes = DVector::zeros(basis.len());
        let zero = vec![0u8; 2 * basis.d];
        amplitudes[basis.index_of(&zero).expect("vacuum is always in the basis")] =
            C64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Inner product, conjugate-linear in `self`.
    pub fn overlap(&self, other: &Self) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn expectation(&self, diag: impl Fn(usize) -> f64) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, z)| diag(i) * z.norm_sqr())
            .sum()
    }
}

/// Diagonal of the total number operator in basis order.
pub fn number_diagonal(basis: &FockBasis) -> Vec<f64> {
    (0..basis.len()).map(|i| basis.total(i) as f64).collect()
}

/// Diagonal of the charge operator (particles minus antiparticles).
pub fn charge_diagonal(basis: &FockBasis) -> Vec<f64> {
    (0..basis.len()).map(|i| basis.charge(i) as f64).collect()
}

/// Assembles the dense Fock-space Hamiltonian
/// `dGamma_a(Omega + A) + dGamma_b(Omega + B) + (pair + pair+)`.
///
/// Pair terms that would leave the truncated basis are projected away on
/// both sides, so the assembled matrix stays exactly Hermitian. With an
/// active pair kernel the basis must at least hold one pair above the
/// vacuum.
pub fn second_quantize(h: &QuadHamiltonian, basis: &FockBasis) -> Result<DMatrix<C64>> {
    if h.dim() != basis.d {
        return Err(Error::Usage(format!(
            "Hamiltonian has {} modes but the basis has {}",
            h.dim(),
            basis.d
        )));
    }
    if h.has_pair_term() && basis.n_max < 2 {
        return Err(Error::Truncation(
            "pair kernel is active but the basis cannot hold a single pair; raise n_max to 2+"
                .into(),
        ));
    }
    let d = basis.d;
    let blocks = [h.h_particle(), h.h_antiparticle()];
    let zero = C64::new(0.0, 0.0);
    let mut m = DMatrix::zeros(basis.len(), basis.len());
    for (s, occ) in basis.states.iter().enumerate() {
        if h.e0 != 0.0 {
            m[(s, s)] += C64::new(h.e0, 0.0);
        }
        for (species, block) in blocks.iter().enumerate() {
            let off = species * d;
            for q in 0..d {
                let nq = occ[off + q] as f64;
                if nq == 0.0 {
                    continue;
                }
                for p in 0..d {
                    let elem = block[(p, q)];
                    if elem == zero {
                        continue;
                    }
                    if p == q {
                        m[(s, s)] += elem * nq;
                    } else {
                        let mut target = occ.clone();
                        target[off + q] -= 1;
                        target[off + p] += 1;
                        let t = basis
                            .index_of(&target)
                            .expect("one-body moves preserve the total");
                        let amp = (nq * (occ[off + p] as f64 + 1.0)).sqrt();
                        m[(t, s)] += elem * amp;
                    }
                }
            }
        }
        if h.has_pair_term() && basis.total(s) + 2 <= basis.n_max {
            for p in 0..d {
                for q in 0..d {
                    let elem = h.c[(p, q)];
                    if elem == zero {
                        continue;
                    }
                    let mut target = occ.clone();
                    target[p] += 1;
                    target[d + q] += 1;
                    let t = basis
                        .index_of(&target)
                        .expect("pair creation stays within the checked budget");
                    let amp = ((occ[p] as f64 + 1.0) * (occ[d + q] as f64 + 1.0)).sqrt();
                    let v = elem * amp;
                    m[(t, s)] += v;
                    m[(s, t)] += v.conj();
                }
            }
        }
    }
    Ok(m)
}

fn hermitian_phases(h: &DMatrix<C64>, duration: f64, context: &str) -> Result<(DMatrix<C64>, Vec<C64>)> {
    let scale = h.norm().max(1.0);
    let dev = (h - h.adjoint()).norm();
    if dev > 1e-10 * scale {
        return Err(Error::InputConsistency(format!(
            "{context}: matrix deviates from Hermitian by {dev:.3e} (scale {scale:.3e})"
        )));
    }
    let eig = nalgebra::SymmetricEigen::new(h.clone());
    let phases = eig
        .eigenvalues
        .iter()
        .map(|&e| C64::from_polar(1.0, -e * duration))
        .collect();
    Ok((eig.eigenvectors, phases))
}

/// Exact dense propagation `exp(-i H t)` applied to a state, via the
/// Hermitian eigendecomposition. Errors if the input is non-Hermitian or if
/// the numerically propagated norm drifts by more than 1e-6.
pub fn evolve_full(
    h_fock: &DMatrix<C64>,
    state: &FockStateVector,
    duration: f64,
) -> Result<FockStateVector> {
    if h_fock.nrows() != state.amplitudes.len() {
        return Err(Error::Usage(format!(
            "Hamiltonian dimension {} does not match state dimension {}",
            h_fock.nrows(),
            state.amplitudes.len()
        )));
    }
    let (q, phases) = hermitian_phases(h_fock, duration, "Fock evolution")?;
    let mut y = q.adjoint() * &state.amplitudes;
    for (z, ph) in y.iter_mut().zip(&phases) {
        *z *= ph;
    }
    let out = q * y;
    let drift = (out.norm() - state.norm()).abs();
    if drift > 1e-6 {
        return Err(Error::Evolution(format!(
            "norm drifted by {drift:.3e} during propagation"
        )));
    }
    Ok(FockStateVector { amplitudes: out })
}

/// One-particle propagator `exp(-i h t)` for a Hermitian block.
pub fn one_particle_propagator(h: &DMatrix<C64>, duration: f64) -> Result<DMatrix<C64>> {
    let (q, phases) = hermitian_phases(h, duration, "one-particle propagator")?;
    let mut scaled = q.clone();
    for (mut col, ph) in scaled.column_iter_mut().zip(&phases) {
        for z in col.iter_mut() {
            *z *= ph;
        }
    }
    Ok(scaled * q.adjoint())
}

/// Applies the smeared creation operator `A+(F) = sum_p F_p a+_p` for the
/// particle species. Components that would exceed the truncation are
/// dropped; callers that need exactness keep the total below `n_max`.
pub fn apply_particle_creation(
    basis: &FockBasis,
    state: &FockStateVector,
    f: &DVector<C64>,
) -> Result<FockStateVector> {
    if f.len() != basis.d {
        return Err(Error::Usage(format!(
            "orbital has {} components but the basis has {} modes",
            f.len(),
            basis.d
        )));
    }
    let mut out = DVector::zeros(basis.len());
    for (s, occ) in basis.states.iter().enumerate() {
        let z = state.amplitudes[s];
        if z == C64::new(0.0, 0.0) {
            continue;
        }
        if basis.total(s) + 1 > basis.n_max {
            continue;
        }
        for p in 0..basis.d {
            if f[p] == C64::new(0.0, 0.0) {
                continue;
            }
            let mut target = occ.clone();
            target[p] += 1;
            let t = basis
                .index_of(&target)
                .expect("raising within the budget stays in the basis");
            out[t] += f[p] * (occ[p] as f64 + 1.0).sqrt() * z;
        }
    }
    Ok(FockStateVector { amplitudes: out })
}

/// Normalized Hartree state `A+(F)^N |0> / norm`. Exact on the truncated
/// basis as long as `N <= n_max`.
pub fn hartree_state(basis: &FockBasis, f: &DVector<C64>, n: usize) -> Result<FockStateVector> {
    product_state(basis, &vec![f.clone(); n])
}

/// Normalized symmetrized product state `A+(F_1) .. A+(F_N) |0> / norm`,
/// generalizing the Hartree construction to distinct orbitals.
pub fn product_state(basis: &FockBasis, fs: &[DVector<C64>]) -> Result<FockStateVector> {
    if fs.len() > basis.n_max {
        return Err(Error::Truncation(format!(
            "{} quanta requested but the basis holds at most {}",
            fs.len(),
            basis.n_max
        )));
    }
    let mut state = FockStateVector::vacuum(basis);
    for f in fs {
        state = apply_particle_creation(basis, &state, f)?;
    }
    let norm = state.norm();
    if norm == 0.0 {
        return Err(Error::DegenerateState(
            "product state has zero norm; an orbital must be nonzero".into(),
        ));
    }
    state.amplitudes /= C64::new(norm, 0.0);
    Ok(state)
}

/// Factorization-theorem fidelity for a Hartree initial state.
///
/// Requires `C = 0`. Evolves `A+(F)^N |0>` with the full Fock propagator,
/// independently propagates the orbital with the one-particle block
/// `Omega + A`, and returns `|<A+(F_t)^N 0 | psi_t>|`, which the theorem
/// predicts to be exactly 1.
pub fn theorem_check(
    h: &QuadHamiltonian,
    basis: &FockBasis,
    f: &DVector<C64>,
    n: usize,
    duration: f64,
) -> Result<f64> {
    theorem_check_product(h, basis, &vec![f.clone(); n], duration)
}

/// Factorization-theorem fidelity for a general symmetrized product of
/// distinct orbitals, same contract as [`theorem_check`].
pub fn theorem_check_product(
    h: &QuadHamiltonian,
    basis: &FockBasis,
    fs: &[DVector<C64>],
    duration: f64,
) -> Result<f64> {
    if h.has_pair_term() {
        return Err(Error::Usage(
            "factorization theorem requires the pair kernel C to vanish".into(),
        ));
    }
    let initial = product_state(basis, fs)?;
    let h_fock = second_quantize(h, basis)?;
    let evolved = evolve_full(&h_fock, &initial, duration)?;
    let u1 = one_particle_propagator(&h.h_particle(), duration)?;
    let propagated: Vec<DVector<C64>> = fs.iter().map(|f| &u1 * f).collect();
    let reference = product_state(basis, &propagated)?;
    Ok(reference.overlap(&evolved).norm())
}

/// Summary of a pair-production run.
#[derive(Clone, Copy, Debug)]
pub struct PairDemo {
    /// `<N>` after evolution (particles plus antiparticles).
    pub mean_total_number: f64,
    /// Largest squared Schmidt coefficient across the
    /// particle/antiparticle split: the best product-state fidelity.
    pub product_fidelity: f64,
    /// Entanglement entropy of the reduced particle-sector state.
    pub sector_entropy: f64,
    /// `|<Q>_t - <Q>_0|`; charge is conserved for any pair kernel.
    pub charge_drift: f64,
    /// Probability mass in the highest truncation sector after evolution.
    pub top_sector_mass: f64,
}

/// Evolves a state under the full Hamiltonian and reports pair-production
/// diagnostics across the particle/antiparticle bipartition.
///
/// With an active pair kernel the truncation must leave at least four
/// quanta of headroom above the initial sector, and the run fails if more
/// than 1e-6 of the final probability mass reaches the top sector, since
/// the projected dynamics is no longer trustworthy there.
pub fn pair_demo(
    h: &QuadHamiltonian,
    basis: &FockBasis,
    initial: &FockStateVector,
    duration: f64,
) -> Result<PairDemo> {
    if h.has_pair_term() {
        let occupied = (0..basis.len())
            .filter(|&i| initial.amplitudes[i].norm() > 1e-12 * initial.norm())
            .map(|i| basis.total(i))
            .max()
            .unwrap_or(0);
        if basis.n_max < occupied + 4 {
            return Err(Error::Truncation(format!(
                "initial sector {occupied} needs n_max >= {} for a trustworthy pair run, got {}",
                occupied + 4,
                basis.n_max
            )));
        }
    }
    let h_fock = second_quantize(h, basis)?;
    let evolved = evolve_full(&h_fock, initial, duration)?;
    let number = number_diagonal(basis);
    let charge = charge_diagonal(basis);
    let mean_total_number = evolved.expectation(|i| number[i]);
    let charge_drift =
        (evolved.expectation(|i| charge[i]) - initial.expectation(|i| charge[i])).abs();
    let top_sector_mass = (0..basis.len())
        .filter(|&i| basis.total(i) == basis.n_max)
        .map(|i| evolved.amplitudes[i].norm_sqr())
        .sum::<f64>();
    if h.has_pair_term() && top_sector_mass > 1e-6 {
        return Err(Error::Truncation(format!(
            "top truncation sector holds {top_sector_mass:.3e} probability; raise n_max"
        )));
    }

    // Schmidt spectrum across the particle/antiparticle split: reshape the
    // state into a (particle occupations) x (antiparticle occupations)
    // matrix and read off its singular values.
    let side = enumerate_occupations(basis.d, basis.n_max);
    let side_index: HashMap<&[u8], usize> = side
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_slice(), i))
        .collect();
    let mut reshaped = DMatrix::zeros(side.len(), side.len());
    for (s, occ) in basis.states.iter().enumerate() {
        let row = side_index[&occ[..basis.d]];
        let col = side_index[&occ[basis.d..]];
        reshaped[(row, col)] = evolved.amplitudes[s];
    }
    let singular = reshaped.singular_values();
    let product_fidelity = singular.iter().map(|s| s * s).fold(0.0, f64::max);
    let sector_entropy = -singular
        .iter()
        .map(|s| s * s)
        .filter(|&w| w > 1e-15)
        .map(|w| w * w.ln())
        .sum::<f64>();
    Ok(PairDemo {
        mean_total_number,
        product_fidelity,
        sector_entropy,
        charge_drift,
        top_sector_mass,
    })
}
