//! Single-input single-output agent models and the dense linear-algebra
//! kernels behind controller synthesis: minimality and origin-zero checks,
//! regulator equations, Ackermann pole placement, observer duals, and the
//! continuous-time Lyapunov solve.

use nalgebra::{Complex, DMatrix, DVector, RowDVector};

use crate::error::{Error, Result};

/// Singular values below this fraction of the largest count as zero.
const RANK_TOL: f64 = 1e-9;

/// Minimal SISO state-space triple (A, b, c).
#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: RowDVector<f64>,
}

/// Outcome of the standing admissibility checks.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub controllable: bool,
    pub observable: bool,
    pub no_origin_zero: bool,
    pub messages: Vec<String>,
}

impl ValidationReport {
    pub fn is_admissible(&self) -> bool {
        self.controllable && self.observable && self.no_origin_zero
    }
}

impl Plant {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: RowDVector<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "A must be square and nonempty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.len() != n || c.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "b and c must have length {n}, got {} and {}",
                b.len(),
                c.len()
            )));
        }
        if a.iter()
            .chain(b.iter())
            .chain(c.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::DimensionMismatch(
                "plant matrices must be finite".into(),
            ));
        }
        Ok(Self { a, b, c })
    }

    /// State dimension.
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn c(&self) -> &RowDVector<f64> {
        &self.c
    }

    /// Output `y = c x`.
    pub fn output(&self, x: &DVector<f64>) -> f64 {
        self.c.iter().zip(x.iter()).map(|(ci, xi)| ci * xi).sum()
    }

    /// Controllability and observability by rank of the Kalman matrices.
    pub fn check_minimal(&self) -> (bool, bool) {
        let n = self.dim();
        let ctrb = controllability_matrix(&self.a, &self.b);
        let mut obsv = DMatrix::zeros(n, n);
        let mut row = self.c.clone();
        for i in 0..n {
            obsv.set_row(i, &row);
            row = &row * &self.a;
        }
        (rank(&ctrb) == n, rank(&obsv) == n)
    }

    /// Rosenbrock matrix at the origin, `[[A, b], [c, 0]]`.
    pub fn origin_rosenbrock(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n + 1, n + 1);
        m.view_mut((0, 0), (n, n)).copy_from(&self.a);
        m.view_mut((0, n), (n, 1)).copy_from(&self.b);
        m.view_mut((n, 0), (1, n)).copy_from(&self.c);
        m
    }

    /// True iff the plant has no transmission zero at the origin.
    pub fn check_no_origin_zero(&self) -> bool {
        rank(&self.origin_rosenbrock()) == self.dim() + 1
    }

    /// Runs all standing checks and collects human-readable diagnostics.
    pub fn validate(&self) -> ValidationReport {
        let (controllable, observable) = self.check_minimal();
        let no_origin_zero = self.check_no_origin_zero();
        let mut messages = Vec::new();
        if !controllable {
            messages.push("pair (A, b) is not controllable".to_string());
        }
        if !observable {
            messages.push("pair (c, A) is not observable".to_string());
        }
        if !no_origin_zero {
            messages.push(
                "check_no_origin_zero failed: [[A, b], [c, 0]] is rank-deficient \
                 (transmission zero at the origin)"
                    .to_string(),
            );
        }
        ValidationReport {
            controllable,
            observable,
            no_origin_zero,
            messages,
        }
    }

    /// Solves the regulator equations `AX + bU = 0, cX = 1`.
    pub fn solve_regulator(&self) -> Result<(DVector<f64>, f64)> {
        let n = self.dim();
        if !self.check_no_origin_zero() {
            return Err(Error::SingularSystem);
        }
        let m = self.origin_rosenbrock();
        let mut rhs = DVector::zeros(n + 1);
        rhs[n] = 1.0;
        let sol = m.lu().solve(&rhs).ok_or(Error::SingularSystem)?;
        let x_map = DVector::from_iterator(n, sol.iter().take(n).copied());
        let u_ff = sol[n];
        Ok((x_map, u_ff))
    }
}

/// `[b, Ab, ..., A^(n-1) b]`.
pub fn controllability_matrix(a: &DMatrix<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut ctrb = DMatrix::zeros(n, n);
    let mut col = b.clone();
    for j in 0..n {
        ctrb.set_column(j, &col);
        col = a * &col;
    }
    ctrb
}

/// Numerical rank via singular values with a relative cutoff.
pub fn rank(m: &DMatrix<f64>) -> usize {
    let svals = m.singular_values();
    let largest = svals.max();
    if largest <= 0.0 {
        return 0;
    }
    svals.iter().filter(|&&s| s > RANK_TOL * largest).count()
}

/// Largest real part over the spectrum.
pub fn max_real_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|e| e.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn is_hurwitz(m: &DMatrix<f64>) -> bool {
    max_real_eigenvalue(m) < 0.0
}

/// Real monic polynomial coefficients from a conjugation-closed root set,
/// Evaluates `prod_i (A - p_i I)` in real arithmetic, folding every complex
/// root into its conjugate-pair quadratic. Factored evaluation sidesteps the
/// cancellation that expanding into monomial coefficients would cause.
fn char_matrix_from_roots(a: &DMatrix<f64>, roots: &[Complex<f64>]) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut value = DMatrix::identity(n, n);
    let mut pending: Vec<Complex<f64>> = Vec::new();
    for r in roots {
        let tol = 1e-9 * (1.0 + r.norm());
        if r.im == 0.0 {
            value = value * (a - DMatrix::identity(n, n) * r.re);
        } else if let Some(pos) = pending
            .iter()
            .position(|q| (q.re - r.re).abs() <= tol && (q.im + r.im).abs() <= tol)
        {
            let q = pending.swap_remove(pos);
            let pair = Complex::new((r.re + q.re) * 0.5, (r.im - q.im) * 0.5);
            let quadratic = a * a - a * (2.0 * pair.re) + DMatrix::identity(n, n) * pair.norm_sqr();
            value = value * quadratic;
        } else {
            pending.push(*r);
        }
    }
    if !pending.is_empty() {
        return Err(Error::InvalidPoles(
            "pole list is not closed under complex conjugation".into(),
        ));
    }
    Ok(value)
}

/// Single-input pole placement via Ackermann coefficient matching.
///
/// Returns `k` such that `A + b k` has the requested spectrum (the feedback
/// enters with a plus sign, so `k` already carries the stabilizing sign).
pub fn place_poles(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    poles: &[Complex<f64>],
) -> Result<RowDVector<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "expected square A with matching b, got {}x{} and {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    if poles.len() != n {
        return Err(Error::InvalidPoles(format!(
            "need {n} poles, got {}",
            poles.len()
        )));
    }
    if poles.iter().any(|p| p.re >= 0.0) {
        return Err(Error::InvalidPoles(
            "all poles must have negative real part".into(),
        ));
    }
    let ctrb = controllability_matrix(a, b);
    if rank(&ctrb) != n {
        return Err(Error::Uncontrollable);
    }
    let char_at_a = char_matrix_from_roots(a, poles)?;
    // k = -e_n^T C^{-1} p(A): solve C^T w = e_n, then k = -w^T p(A).
    let mut e_last = DVector::zeros(n);
    e_last[n - 1] = 1.0;
    let w = ctrb
        .transpose()
        .lu()
        .solve(&e_last)
        .ok_or(Error::Uncontrollable)?;
    Ok(-(w.transpose() * char_at_a))
}

/// Observer gain by duality: `l = place_poles(A^T, c^T, poles)^T`, giving
/// `A + l c` the requested spectrum.
pub fn observer_gain(
    a: &DMatrix<f64>,
    c: &RowDVector<f64>,
    poles: &[Complex<f64>],
) -> Result<DVector<f64>> {
    let dual = place_poles(&a.transpose(), &c.transpose(), poles).map_err(|e| match e {
        Error::Uncontrollable => Error::Unobservable,
        other => other,
    })?;
    Ok(dual.transpose())
}

/// Solves `A_cl^T P + P A_cl = -I` for symmetric positive definite `P` via
/// the Kronecker-vectorized linear system.
pub fn solve_lyapunov(a_cl: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a_cl.nrows();
    if a_cl.ncols() != n {
        return Err(Error::DimensionMismatch(
            "Lyapunov solve needs a square matrix".into(),
        ));
    }
    let max_re = max_real_eigenvalue(a_cl);
    if max_re >= 0.0 {
        return Err(Error::NotHurwitz(max_re));
    }
    let at = a_cl.transpose();
    let eye = DMatrix::<f64>::identity(n, n);
    let system = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = DVector::from_iterator(n * n, (-eye).iter().copied());
    let vec_p = system.lu().solve(&rhs).ok_or(Error::NotHurwitz(max_re))?;
    let p = DMatrix::from_column_slice(n, n, vec_p.as_slice());
    // exact solution is symmetric; fold away rounding
    Ok((&p + p.transpose()) * 0.5)
}
