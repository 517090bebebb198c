//! Operators on a truncated harmonic-oscillator Fock space.

use std::ops::{Add, Mul, Sub};

use ndarray::{s, Array1};
use num_complex::Complex64 as C64;

use crate::error::{check_positive, Error, Result};
use crate::linalg::{self, CMat, Op, I, ONE};

/// Relative tolerance for the Hermitian tag.
const HERMITIAN_RTOL: f64 = 1e-12;

/// Dense operator on the first `dim` Fock levels.
#[derive(Clone, Debug)]
pub struct FockOperator {
    entries: CMat,
    hermitian: bool,
}

impl FockOperator {
    /// Wraps a square matrix, detecting Hermiticity from the entries.
    pub fn new(entries: CMat) -> Result<Self> {
        let (r, c) = entries.dim();
        if r == 0 {
            return Err(Error::InvalidDimension { dim: 0, min: 1 });
        }
        if r != c {
            return Err(Error::ShapeMismatch { expected: r, found: c });
        }
        let scale = linalg::max_abs(&entries.view());
        let residual = linalg::hermiticity_residual(&entries.view());
        let hermitian = residual <= HERMITIAN_RTOL * scale;
        Ok(Self { entries, hermitian })
    }

    /// Wraps a matrix that must be Hermitian; the stored entries are exactly
    /// symmetrized after the check.
    pub fn hermitian(mut entries: CMat) -> Result<Self> {
        let op = Self::new(entries.clone())?;
        if !op.hermitian {
            return Err(Error::NotHermitian {
                residual: linalg::hermiticity_residual(&entries.view()),
            });
        }
        linalg::symmetrize_in_place(&mut entries);
        Ok(Self {
            entries,
            hermitian: true,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: linalg::identity(dim),
            hermitian: true,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: CMat::zeros((dim, dim)),
            hermitian: true,
        }
    }

    pub fn diagonal(values: &Array1<f64>) -> Self {
        Self {
            entries: CMat::from_diag(&values.mapv(C64::from)),
            hermitian: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn into_entries(self) -> CMat {
        self.entries
    }

    pub fn adjoint(&self) -> Self {
        if self.hermitian {
            return self.clone();
        }
        Self {
            entries: linalg::adjoint(&self.entries),
            hermitian: false,
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        let entries = self.entries.mapv(|z| z * factor);
        let hermitian = self.hermitian && factor.im == 0.0;
        Self { entries, hermitian }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        check_same(self.dim(), other.dim());
        Self::new(linalg::matmul(&self.entries, &other.entries)).expect("square product")
    }

    /// `self^dagger * other`
    pub fn adjoint_matmul(&self, other: &Self) -> Self {
        check_same(self.dim(), other.dim());
        let out = linalg::gemm(&self.entries, Op::Adjoint, &other.entries, Op::None);
        Self::new(out).expect("square product")
    }

    pub fn commutator(&self, other: &Self) -> Self {
        let ab = linalg::matmul(&self.entries, &other.entries);
        let ba = linalg::matmul(&other.entries, &self.entries);
        Self::new(ab - ba).expect("square product")
    }

    /// `tr(self * rho)` for a density matrix or any square matrix.
    pub fn expectation(&self, rho: &CMat) -> C64 {
        linalg::trace_product(&self.entries, rho)
    }

    /// `<psi| self |psi>`
    pub fn expectation_pure(&self, psi: &Array1<C64>) -> C64 {
        linalg::inner(psi, &self.entries.dot(psi))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        linalg::max_abs_diff(&self.entries.view(), &other.entries.view())
    }

    pub fn hermiticity_residual(&self) -> f64 {
        linalg::hermiticity_residual(&self.entries.view())
    }
}

fn check_same(a: usize, b: usize) {
    assert_eq!(a, b, "operator dimensions differ");
}

fn checked_same(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::ShapeMismatch { expected: a, found: b })
    }
}

impl<'a> Mul<&'a FockOperator> for &'a FockOperator {
    type Output = FockOperator;
    fn mul(self, rhs: &'a FockOperator) -> FockOperator {
        self.matmul(rhs)
    }
}

impl<'a> Add<&'a FockOperator> for &'a FockOperator {
    type Output = FockOperator;
    fn add(self, rhs: &'a FockOperator) -> FockOperator {
        check_same(self.dim(), rhs.dim());
        let entries = &self.entries + &rhs.entries;
        if self.hermitian && rhs.hermitian {
            FockOperator {
                entries,
                hermitian: true,
            }
        } else {
            FockOperator::new(entries).expect("square sum")
        }
    }
}

impl<'a> Sub<&'a FockOperator> for &'a FockOperator {
    type Output = FockOperator;
    fn sub(self, rhs: &'a FockOperator) -> FockOperator {
        check_same(self.dim(), rhs.dim());
        let entries = &self.entries - &rhs.entries;
        if self.hermitian && rhs.hermitian {
            FockOperator {
                entries,
                hermitian: true,
            }
        } else {
            FockOperator::new(entries).expect("square difference")
        }
    }
}

/// Restriction to the lowest `cutoff` Fock levels, used to keep truncation
/// edge artifacts out of identity checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InteriorProjector {
    dim: usize,
    cutoff: usize,
}

impl InteriorProjector {
    pub fn new(dim: usize, cutoff: usize) -> Result<Self> {
        if cutoff == 0 || cutoff >= dim {
            return Err(Error::InvalidRequest(format!(
                "interior cutoff {cutoff} must lie strictly between 0 and dim {dim}"
            )));
        }
        Ok(Self { dim, cutoff })
    }

    /// Cutoff at a fraction of the truncation, clamped into the valid range.
    pub fn with_fraction(dim: usize, fraction: f64) -> Result<Self> {
        let cutoff = ((dim as f64) * fraction).floor() as usize;
        Self::new(dim, cutoff.clamp(1, dim.saturating_sub(1).max(1)))
    }

    /// Default cutoff `0.8 * dim`.
    pub fn default_for(dim: usize) -> Result<Self> {
        Self::with_fraction(dim, 0.8)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// `P A P` as a `cutoff x cutoff` matrix.
    pub fn restrict(&self, a: &CMat) -> CMat {
        assert_eq!(a.nrows(), self.dim, "projector dimension mismatch");
        a.slice(s![..self.cutoff, ..self.cutoff]).to_owned()
    }

    /// Largest entrywise deviation between two operators on the interior block.
    pub fn max_abs_diff(&self, a: &CMat, b: &CMat) -> f64 {
        let n = self.cutoff;
        linalg::max_abs_diff(&a.slice(s![..n, ..n]), &b.slice(s![..n, ..n]))
    }

    pub fn max_abs(&self, a: &CMat) -> f64 {
        let n = self.cutoff;
        linalg::max_abs(&a.slice(s![..n, ..n]))
    }

    /// Largest eigenvalue of the Hermitian interior block.
    pub fn max_eigenvalue(&self, a: &FockOperator) -> Result<f64> {
        if !a.is_hermitian() {
            return Err(Error::NotHermitian {
                residual: a.hermiticity_residual(),
            });
        }
        let block = self.restrict(a.entries());
        let values = linalg::eigvalsh(&block)?;
        Ok(values[values.len() - 1])
    }
}

/// Eigendecomposition `op = U diag(values) U^dagger` of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Array1<f64>,
    pub vectors: CMat,
}

impl Spectrum {
    pub fn of(op: &FockOperator) -> Result<Self> {
        if !op.is_hermitian() {
            return Err(Error::NotHermitian {
                residual: op.hermiticity_residual(),
            });
        }
        let (values, vectors) = linalg::eigh(op.entries())?;
        Ok(Self { values, vectors })
    }

    /// `U f(values) U^dagger` for a real function; tagged Hermitian.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> FockOperator {
        let fv = self.values.mapv(|x| C64::from(f(x)));
        let mut entries = linalg::reconstruct(&self.vectors, &fv);
        linalg::symmetrize_in_place(&mut entries);
        FockOperator {
            entries,
            hermitian: true,
        }
    }

    /// `U f(values) U^dagger` for a complex function; the tag is detected.
    pub fn apply_complex(&self, f: impl Fn(f64) -> C64) -> FockOperator {
        let fv = self.values.mapv(f);
        FockOperator::new(linalg::reconstruct(&self.vectors, &fv)).expect("square reconstruction")
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Real spectral function of a Hermitian operator.
pub fn spectral_function(op: &FockOperator, f: impl Fn(f64) -> f64) -> Result<FockOperator> {
    Ok(Spectrum::of(op)?.apply(f))
}

/// Complex spectral function of a Hermitian operator.
pub fn spectral_function_complex(
    op: &FockOperator,
    f: impl Fn(f64) -> C64,
) -> Result<FockOperator> {
    Ok(Spectrum::of(op)?.apply_complex(f))
}

/// Annihilation operator, `a|n> = sqrt(n)|n-1>`.
pub fn build_ladder(dim: usize) -> Result<FockOperator> {
    if dim == 0 {
        return Err(Error::InvalidDimension { dim, min: 1 });
    }
    let mut a = CMat::zeros((dim, dim));
    for n in 1..dim {
        a[[n - 1, n]] = C64::from((n as f64).sqrt());
    }
    FockOperator::new(a)
}

pub fn build_number(dim: usize) -> Result<FockOperator> {
    if dim == 0 {
        return Err(Error::InvalidDimension { dim, min: 1 });
    }
    Ok(FockOperator::diagonal(&Array1::from_iter(
        (0..dim).map(|n| n as f64),
    )))
}

/// Position and momentum, `q = (a + a^dagger)/sqrt2`, `p = (a - a^dagger)/(i sqrt2)`.
pub fn build_quadratures(dim: usize) -> Result<(FockOperator, FockOperator)> {
    if dim < 2 {
        return Err(Error::InvalidDimension { dim, min: 2 });
    }
    let a = build_ladder(dim)?;
    let ad = a.adjoint();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let q = FockOperator::hermitian((a.entries() + ad.entries()).mapv(|z| z * r))?;
    let p = FockOperator::hermitian((a.entries() - ad.entries()).mapv(|z| z * C64::new(0.0, -r)))?;
    Ok((q, p))
}

/// Fock-space quarter rotation `exp(i pi N / 2) = diag(i^n)`, which maps
/// `q -> p` and `p -> -q` under conjugation.
pub fn quarter_rotation(dim: usize) -> FockOperator {
    let phases = Array1::from_iter((0..dim).map(|n| match n % 4 {
        0 => ONE,
        1 => I,
        2 => -ONE,
        _ => -I,
    }));
    FockOperator::new(CMat::from_diag(&phases)).expect("diagonal")
}

/// Ladder and quadrature operators together with the eigendecompositions
/// of `q` and `p`, shared by every periodic function built on them.
#[derive(Clone, Debug)]
pub struct Oscillator {
    pub a: FockOperator,
    pub q: FockOperator,
    pub p: FockOperator,
    pub number: FockOperator,
    pub q_spectrum: Spectrum,
    pub p_spectrum: Spectrum,
}

impl Oscillator {
    pub fn new(dim: usize) -> Result<Self> {
        let a = build_ladder(dim)?;
        let (q, p) = build_quadratures(dim)?;
        let number = build_number(dim)?;
        let q_spectrum = Spectrum::of(&q)?;
        // p = R q R^dagger with R diagonal, so its eigenvectors are R U_q.
        let r = quarter_rotation(dim);
        let p_spectrum = Spectrum {
            values: q_spectrum.values.clone(),
            vectors: linalg::matmul(r.entries(), &q_spectrum.vectors),
        };
        Ok(Self {
            a,
            q,
            p,
            number,
            q_spectrum,
            p_spectrum,
        })
    }

    pub fn dim(&self) -> usize {
        self.q.dim()
    }

    pub fn f_q(&self, f: impl Fn(f64) -> f64) -> FockOperator {
        self.q_spectrum.apply(f)
    }

    pub fn f_p(&self, f: impl Fn(f64) -> f64) -> FockOperator {
        self.p_spectrum.apply(f)
    }

    /// `sin(eta q) + i eps cos(eta q) p` and `sin(eta p) - i eps cos(eta p) q`.
    pub fn two_dissipators(&self, eta: f64, epsilon: f64) -> Result<(FockOperator, FockOperator)> {
        check_positive("eta", eta)?;
        check_positive("epsilon", epsilon)?;
        let m1 = trig_pair(self, eta, epsilon, Quadrature::Q, Trig::Sin);
        let m2 = trig_pair(self, eta, epsilon, Quadrature::P, Trig::Sin);
        Ok((m1, m2))
    }

    /// The four stabilizer-inspired dissipators at lattice constant `eta_square`.
    pub fn four_dissipators(&self, eta_square: f64, epsilon: f64) -> Result<[FockOperator; 4]> {
        check_positive("eta_square", eta_square)?;
        check_positive("epsilon", epsilon)?;
        let shift = FockOperator::identity(self.dim()).scale(C64::from((epsilon * eta_square / 2.0).exp()));
        let l1 = trig_pair(self, eta_square, epsilon, Quadrature::Q, Trig::Sin);
        let l2 = trig_pair(self, eta_square, epsilon, Quadrature::P, Trig::Sin);
        let l3 = &trig_pair(self, eta_square, epsilon, Quadrature::Q, Trig::Cos) - &shift;
        let l4 = &trig_pair(self, eta_square, epsilon, Quadrature::P, Trig::Cos) - &shift;
        Ok([l1, l2, l3, l4])
    }
}

#[derive(Clone, Copy)]
enum Quadrature {
    Q,
    P,
}

#[derive(Clone, Copy)]
enum Trig {
    Sin,
    Cos,
}

/// `f(eta x) + c i eps g(eta x) y` with the trig factor on the left, where
/// `(x, y)` is `(q, p)` or `(p, q)`, `g` is the derivative partner of `f` up
/// to sign, and the sign `c` follows the quarter rotation `q -> p -> -q`.
fn trig_pair(osc: &Oscillator, eta: f64, epsilon: f64, quad: Quadrature, trig: Trig) -> FockOperator {
    let (spectrum, other) = match quad {
        Quadrature::Q => (&osc.q_spectrum, &osc.p),
        Quadrature::P => (&osc.p_spectrum, &osc.q),
    };
    let (lead, partner, sign) = match trig {
        Trig::Sin => (
            spectrum.apply(|x| (eta * x).sin()),
            spectrum.apply(|x| (eta * x).cos()),
            1.0,
        ),
        Trig::Cos => (
            spectrum.apply(|x| (eta * x).cos()),
            spectrum.apply(|x| (eta * x).sin()),
            -1.0,
        ),
    };
    let sign = match quad {
        Quadrature::Q => sign,
        Quadrature::P => -sign,
    };
    let mut entries = lead.into_entries();
    linalg::gemm_into(
        C64::new(0.0, sign * epsilon),
        partner.entries(),
        Op::None,
        other.entries(),
        Op::None,
        ONE,
        &mut entries,
    );
    FockOperator::new(entries).expect("square operator")
}

/// `M1`, `M2` of the two-dissipator scheme.
pub fn build_two_dissipators(dim: usize, eta: f64, epsilon: f64) -> Result<(FockOperator, FockOperator)> {
    check_positive("eta", eta)?;
    check_positive("epsilon", epsilon)?;
    Oscillator::new(dim)?.two_dissipators(eta, epsilon)
}

/// `L1..L4` of the four-dissipator baseline.
pub fn build_four_dissipators(dim: usize, eta_square: f64, epsilon: f64) -> Result<[FockOperator; 4]> {
    check_positive("eta_square", eta_square)?;
    check_positive("epsilon", epsilon)?;
    Oscillator::new(dim)?.four_dissipators(eta_square, epsilon)
}

/// Heisenberg-picture action of one dissipator,
/// `M^dagger O M - (M^dagger M O + O M^dagger M)/2`.
pub fn channel_adjoint_term(m: &FockOperator, o: &FockOperator) -> Result<FockOperator> {
    checked_same(m.dim(), o.dim())?;
    if !o.is_hermitian() {
        return Err(Error::NotHermitian {
            residual: o.hermiticity_residual(),
        });
    }
    let mut out = CMat::zeros((m.dim(), m.dim()));
    accumulate_adjoint_term(1.0, m.entries(), o.entries(), &mut out);
    linalg::symmetrize_in_place(&mut out);
    Ok(FockOperator {
        entries: out,
        hermitian: true,
    })
}

/// `out += rate * (M^dagger O M - Re(M^dagger M O))` where the last term is
/// accumulated as `-(K O)` and later symmetrized by the caller.
pub(crate) fn accumulate_adjoint_term(rate: f64, m: &CMat, o: &CMat, out: &mut CMat) {
    let mh_o = linalg::gemm(m, Op::Adjoint, o, Op::None);
    linalg::gemm_into(C64::from(rate), &mh_o, Op::None, m, Op::None, ONE, out);
    let k = linalg::gemm(m, Op::Adjoint, m, Op::None);
    // -(1/2)(K O + O K); O K = (K O)^dagger for Hermitian O and K, so after
    // symmetrization -K O contributes exactly -(1/2){K, O}.
    linalg::gemm_into(C64::from(-rate), &k, Op::None, o, Op::None, ONE, out);
}
