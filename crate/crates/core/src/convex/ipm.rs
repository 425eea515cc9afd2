//! Primal-dual path-following interior-point solver.
//!
//! The user problem is rewritten in standard form
//! `min <c,x>  s.t.  A x = b,  x ∈ K` where `K` is a product of complex
//! Hermitian PSD cones and a nonnegative orthant (user scalars followed by
//! one slack per inequality). The homogeneous self-dual embedding
//!
//! ```text
//!  A x − b τ = 0,   A'y + z − c τ = 0,   c'x − b'y + κ = 0
//! ```
//!
//! is followed from the identity point with Nesterov–Todd scaling and a
//! Mehrotra predictor-corrector step. `τ → 0, κ > 0` yields an infeasibility
//! or unboundedness certificate.

use nalgebra::Cholesky;

use crate::convex::hermitian::{frob_inner, HermitianMatrix};
use crate::convex::problem::{ConicProblem, ConicSolution, Sense, SolveStatus, SolverSettings};
use crate::error::Result;
use crate::scalar::{creal, CMat, Real, RMat, RVec};

#[derive(Debug, Clone)]
struct ConeVec<T: Real> {
    blocks: Vec<CMat<T>>,
    lin: RVec<T>,
}

impl<T: Real> ConeVec<T> {
    fn zeros(dims: &[usize], nlin: usize) -> Self {
        ConeVec {
            blocks: dims.iter().map(|&n| CMat::zeros(n, n)).collect(),
            lin: RVec::zeros(nlin),
        }
    }

    fn identity(dims: &[usize], nlin: usize) -> Self {
        ConeVec {
            blocks: dims.iter().map(|&n| CMat::identity(n, n)).collect(),
            lin: RVec::from_element(nlin, T::one()),
        }
    }

    fn dot(&self, o: &Self) -> T {
        let mut acc = self.lin.dot(&o.lin);
        for (a, b) in self.blocks.iter().zip(&o.blocks) {
            acc += frob_inner(a, b);
        }
        acc
    }

    fn axpy(&mut self, a: T, o: &Self) {
        let ca = creal(a);
        for (x, y) in self.blocks.iter_mut().zip(&o.blocks) {
            x.zip_apply(y, |xi, yi| *xi += yi * ca);
        }
        self.lin.axpy(a, &o.lin, T::one());
    }

    fn scaled(&self, a: T) -> Self {
        let mut out = self.clone();
        for b in out.blocks.iter_mut() {
            b.apply(|z| *z = z.scale(a));
        }
        out.lin *= a;
        out
    }

    fn norm_inf(&self) -> T {
        let mut m = self.lin.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
        for b in &self.blocks {
            for z in b.iter() {
                m = m.max(z.re.abs()).max(z.im.abs());
            }
        }
        m
    }

    fn norm2(&self) -> T {
        self.dot(self).sqrt()
    }

    fn symmetrize(&mut self) {
        for b in self.blocks.iter_mut() {
            *b = HermitianMatrix::new(std::mem::replace(b, CMat::zeros(0, 0))).into_inner();
        }
    }
}

/// Standard-form data with equilibrated rows.
struct StdForm<T: Real> {
    dims: Vec<usize>,
    nlin: usize,
    nscalar: usize,
    rows: Vec<ConeVec<T>>,
    b: RVec<T>,
    c: ConeVec<T>,
    /// Original row = scaled row / `row_scale`.
    row_scale: Vec<T>,
    b_orig: Vec<T>,
}

impl<T: Real> StdForm<T> {
    fn build(p: &ConicProblem<T>) -> Self {
        let dims = p.psd_blocks.clone();
        let nscalar = p.scalar_vars;
        let nslack = p.constraints.iter().filter(|c| c.sense != Sense::Eq).count();
        let nlin = nscalar + nslack;
        let mut rows = Vec::with_capacity(p.constraints.len());
        let mut b = RVec::zeros(p.constraints.len());
        let mut row_scale = Vec::with_capacity(p.constraints.len());
        let mut slack = nscalar;
        for (i, con) in p.constraints.iter().enumerate() {
            let mut row = ConeVec::zeros(&dims, nlin);
            for (blk, m) in &con.form.blocks {
                row.blocks[*blk] += m;
            }
            for (s, coef) in &con.form.scalars {
                row.lin[*s] += *coef;
            }
            let norm = row.norm2();
            let s = if norm > T::zero() { T::one() / norm } else { T::one() };
            let mut row = row.scaled(s);
            match con.sense {
                Sense::Le => {
                    row.lin[slack] = T::one();
                    slack += 1;
                }
                Sense::Ge => {
                    row.lin[slack] = -T::one();
                    slack += 1;
                }
                Sense::Eq => {}
            }
            b[i] = con.rhs * s;
            row_scale.push(s);
            rows.push(row);
        }
        let mut c = ConeVec::zeros(&dims, nlin);
        for (blk, m) in &p.objective.blocks {
            c.blocks[*blk] += m;
        }
        for (s, coef) in &p.objective.scalars {
            c.lin[*s] += *coef;
        }
        StdForm {
            dims,
            nlin,
            nscalar,
            rows,
            b,
            c,
            row_scale,
            b_orig: p.constraints.iter().map(|c| c.rhs).collect(),
        }
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    fn apply(&self, x: &ConeVec<T>) -> RVec<T> {
        RVec::from_iterator(self.m(), self.rows.iter().map(|r| r.dot(x)))
    }

    fn apply_t(&self, y: &RVec<T>) -> ConeVec<T> {
        let mut out = ConeVec::zeros(&self.dims, self.nlin);
        for (r, &yi) in self.rows.iter().zip(y.iter()) {
            out.axpy(yi, r);
        }
        out
    }
}

struct BlockScaling<T: Real> {
    r: CMat<T>,
    rinv: CMat<T>,
    w: CMat<T>,
    lambda: Vec<T>,
}

struct Scaling<T: Real> {
    blocks: Vec<BlockScaling<T>>,
    d: RVec<T>,
    lam_lin: RVec<T>,
}

impl<T: Real> Scaling<T> {
    fn compute(x: &ConeVec<T>, z: &ConeVec<T>) -> Option<Self> {
        let mut blocks = Vec::with_capacity(x.blocks.len());
        for (xb, zb) in x.blocks.iter().zip(&z.blocks) {
            let l1 = Cholesky::new(xb.clone())?.unpack();
            let l2 = Cholesky::new(zb.clone())?.unpack();
            let m = l2.adjoint() * &l1;
            let svd = m.svd(true, true);
            let u = svd.u?;
            let v = svd.v_t?.adjoint();
            let s: Vec<T> = svd.singular_values.iter().copied().collect();
            if s.iter().any(|&v| !(v > T::zero()) || !v.is_finite()) {
                return None;
            }
            let n = s.len();
            let mut r = &l1 * v;
            let mut rinv = u.adjoint() * l2.adjoint();
            for k in 0..n {
                let f = T::one() / s[k].sqrt();
                for i in 0..n {
                    r[(i, k)] = r[(i, k)].scale(f);
                    rinv[(k, i)] = rinv[(k, i)].scale(f);
                }
            }
            let w = &r * r.adjoint();
            blocks.push(BlockScaling { r, rinv, w, lambda: s });
        }
        if x.lin.iter().chain(z.lin.iter()).any(|&v| !(v > T::zero())) {
            return None;
        }
        let d = x.lin.zip_map(&z.lin, |a, b| (a / b).sqrt());
        let lam_lin = x.lin.zip_map(&z.lin, |a, b| (a * b).sqrt());
        Some(Scaling { blocks, d, lam_lin })
    }

    fn scale_x(&self, v: &ConeVec<T>) -> ConeVec<T> {
        ConeVec {
            blocks: self
                .blocks
                .iter()
                .zip(&v.blocks)
                .map(|(s, b)| &s.rinv * b * s.rinv.adjoint())
                .collect(),
            lin: v.lin.component_div(&self.d),
        }
    }

    fn scale_z(&self, v: &ConeVec<T>) -> ConeVec<T> {
        ConeVec {
            blocks: self
                .blocks
                .iter()
                .zip(&v.blocks)
                .map(|(s, b)| s.r.adjoint() * b * &s.r)
                .collect(),
            lin: v.lin.component_mul(&self.d),
        }
    }

    fn unscale_x(&self, v: &ConeVec<T>) -> ConeVec<T> {
        ConeVec {
            blocks: self
                .blocks
                .iter()
                .zip(&v.blocks)
                .map(|(s, b)| &s.r * b * s.r.adjoint())
                .collect(),
            lin: v.lin.component_mul(&self.d),
        }
    }

    /// `W v W` blockwise, `d² v` on the orthant.
    fn w_op(&self, v: &ConeVec<T>) -> ConeVec<T> {
        ConeVec {
            blocks: self
                .blocks
                .iter()
                .zip(&v.blocks)
                .map(|(s, b)| &s.w * b * &s.w)
                .collect(),
            lin: v.lin.component_mul(&self.d).component_mul(&self.d),
        }
    }

    /// The scaled point `λ` as a cone vector (diagonal blocks).
    fn lambda(&self) -> ConeVec<T> {
        ConeVec {
            blocks: self
                .blocks
                .iter()
                .map(|s| {
                    let mut m = CMat::zeros(s.lambda.len(), s.lambda.len());
                    for (i, &l) in s.lambda.iter().enumerate() {
                        m[(i, i)] = creal(l);
                    }
                    m
                })
                .collect(),
            lin: self.lam_lin.clone(),
        }
    }

    /// Solves `λ ∘ Y = ρ` for `Y`.
    fn lambda_solve(&self, rho: &ConeVec<T>) -> ConeVec<T> {
        let two = T::lit(2.0);
        ConeVec {
            blocks: self
                .blocks
                .iter()
                .zip(&rho.blocks)
                .map(|(s, r)| {
                    let n = s.lambda.len();
                    CMat::from_fn(n, n, |i, j| r[(i, j)].scale(two / (s.lambda[i] + s.lambda[j])))
                })
                .collect(),
            lin: rho.lin.component_div(&self.lam_lin),
        }
    }

    /// Largest `α` with `λ + α v` in the cone.
    fn max_step(&self, v: &ConeVec<T>) -> T {
        let mut alpha = T::max_value().unwrap_or_else(|| T::lit(1e300));
        for (s, b) in self.blocks.iter().zip(&v.blocks) {
            let n = s.lambda.len();
            let inv: Vec<T> = s.lambda.iter().map(|&l| T::one() / l.sqrt()).collect();
            let m = CMat::from_fn(n, n, |i, j| b[(i, j)].scale(inv[i] * inv[j]));
            let m = HermitianMatrix::new(m).into_inner();
            let ev = m.symmetric_eigenvalues();
            let min = ev.iter().copied().fold(T::max_value().unwrap(), |a, b| a.min(b));
            if min < T::zero() {
                alpha = alpha.min(-T::one() / min);
            }
        }
        for (l, d) in self.lam_lin.iter().zip(v.lin.iter()) {
            if *d < T::zero() {
                alpha = alpha.min(-*l / *d);
            }
        }
        alpha
    }
}

fn jordan<T: Real>(a: &ConeVec<T>, b: &ConeVec<T>) -> ConeVec<T> {
    let half = creal(T::lit(0.5));
    ConeVec {
        blocks: a
            .blocks
            .iter()
            .zip(&b.blocks)
            .map(|(x, y)| (x * y + y * x) * half)
            .collect(),
        lin: a.lin.component_mul(&b.lin),
    }
}

struct Direction<T: Real> {
    dx: ConeVec<T>,
    dy: RVec<T>,
    dz: ConeVec<T>,
    dtau: T,
    dkappa: T,
}

struct Kkt<'a, T: Real> {
    sf: &'a StdForm<T>,
    sc: Scaling<T>,
    chol: Cholesky<T, nalgebra::Dyn>,
    /// `A 𝒲 c`.
    awc: RVec<T>,
    /// `M⁻¹ (A 𝒲 c + b)`.
    dy1: RVec<T>,
    /// `<c, 𝒲 c>`.
    cwc: T,
}

impl<'a, T: Real> Kkt<'a, T> {
    fn factor(sf: &'a StdForm<T>, sc: Scaling<T>) -> Option<Self> {
        let m = sf.m();
        let wrows: Vec<ConeVec<T>> = sf.rows.iter().map(|r| sc.w_op(r)).collect();
        let mut mm = RMat::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let v = sf.rows[i].dot(&wrows[j]);
                mm[(i, j)] = v;
                mm[(j, i)] = v;
            }
        }
        let chol = factor_spd(mm)?;
        let wc = sc.w_op(&sf.c);
        let awc = sf.apply(&wc);
        let cwc = sf.c.dot(&wc);
        let dy1 = chol.solve(&(&awc + &sf.b));
        Some(Kkt {
            sf,
            sc,
            chol,
            awc,
            dy1,
            cwc,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn solve(
        &self,
        eta: T,
        rp: &RVec<T>,
        rd: &ConeVec<T>,
        rg: T,
        rho: &ConeVec<T>,
        r_tk: T,
        tau: T,
        kappa: T,
    ) -> Direction<T> {
        let sf = self.sf;
        let s4 = self.sc.unscale_x(&self.sc.lambda_solve(rho));
        let t1 = self.sc.w_op(rd);
        let rhs0 = -(rp * eta) - sf.apply(&s4) - sf.apply(&t1) * eta;
        let dy0 = self.chol.solve(&rhs0);
        let num = -eta * rg - sf.c.dot(&s4) - eta * sf.c.dot(&t1) - self.awc.dot(&dy0) + sf.b.dot(&dy0)
            - r_tk / tau;
        let den = self.awc.dot(&self.dy1) - self.cwc - sf.b.dot(&self.dy1) - kappa / tau;
        let dtau = num / den;
        let dy = &dy0 + &self.dy1 * dtau;
        let mut dz = rd.scaled(-eta);
        dz.axpy(-T::one(), &sf.apply_t(&dy));
        dz.axpy(dtau, &sf.c);
        let mut dx = s4;
        dx.axpy(-T::one(), &self.sc.w_op(&dz));
        let dkappa = (r_tk - kappa * dtau) / tau;
        Direction {
            dx,
            dy,
            dz,
            dtau,
            dkappa,
        }
    }

    fn step_length(&self, d: &Direction<T>, tau: T, kappa: T) -> (T, ConeVec<T>, ConeVec<T>) {
        let sdx = self.sc.scale_x(&d.dx);
        let sdz = self.sc.scale_z(&d.dz);
        let mut a = self.sc.max_step(&sdx).min(self.sc.max_step(&sdz));
        if d.dtau < T::zero() {
            a = a.min(-tau / d.dtau);
        }
        if d.dkappa < T::zero() {
            a = a.min(-kappa / d.dkappa);
        }
        (a, sdx, sdz)
    }
}

fn factor_spd<T: Real>(m: RMat<T>) -> Option<Cholesky<T, nalgebra::Dyn>> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Some(c);
    }
    let n = m.nrows();
    let scale = (0..n).fold(T::zero(), |a, i| a.max(m[(i, i)].abs())).max(T::lit(1e-300));
    let mut reg = scale * T::lit(T::UNIT_ROUNDOFF * 1e2);
    for _ in 0..8 {
        let mut mr = m.clone();
        for i in 0..n {
            mr[(i, i)] += reg;
        }
        if let Some(c) = Cholesky::new(mr) {
            return Some(c);
        }
        reg *= T::lit(100.0);
    }
    None
}

/// Solves a [`ConicProblem`] to the requested accuracy.
///
/// `Infeasible` is returned only with a Farkas-type dual certificate and
/// `Unbounded` only with a primal improving ray, both normalized to the
/// certificate tolerance `tol_feas`.
pub fn solve_conic<T: Real>(p: &ConicProblem<T>, settings: &SolverSettings) -> Result<ConicSolution<T>> {
    p.validate()?;
    let sf = StdForm::build(p);
    let m = sf.m();
    let tol_feas = T::lit(settings.tol_feas);
    let tol_gap = T::lit(settings.tol_gap);
    let mut x = ConeVec::identity(&sf.dims, sf.nlin);
    let mut z = ConeVec::identity(&sf.dims, sf.nlin);
    let mut y = RVec::zeros(m);
    let mut tau = T::one();
    let mut kappa = T::one();
    let nu = T::from_usize(sf.dims.iter().sum::<usize>() + sf.nlin + 1).unwrap();
    let cnorm = sf.c.norm_inf();

    let mut status = SolveStatus::MaxIter;
    let mut iterations = 0;
    for it in 0..=settings.max_iter {
        iterations = it;
        let ax = sf.apply(&x);
        let rp = &ax - &sf.b * tau;
        let aty = sf.apply_t(&y);
        let mut rd = aty.clone();
        rd.axpy(T::one(), &z);
        rd.axpy(-tau, &sf.c);
        let cx = sf.c.dot(&x);
        let by = sf.b.dot(&y);
        let rg = cx - by + kappa;
        let xz = x.dot(&z);
        let mu = (xz + tau * kappa) / nu;

        // Rows have unit norm, so this is a residual relative to the row scale.
        let pres_ok = rp
            .iter()
            .zip(sf.b.iter())
            .all(|(r, b)| (*r / tau).abs() <= tol_feas * (T::one() + b.abs()));
        let dres_ok = rd.norm_inf() / tau <= tol_feas * (T::one() + cnorm);
        let pcost = cx / tau;
        let dcost = by / tau;
        let gap = xz / (tau * tau);
        let gap_ok = gap <= tol_gap * (T::one() + pcost.abs())
            && (pcost - dcost).abs() <= tol_gap * (T::one() + pcost.abs());
        log::trace!(
            "it {it}: pres {:.2e} dres {:.2e} gap {:.2e} pcost {:.6e} tau {:.2e} kappa {:.2e}",
            rp.amax().as_f64() / tau.as_f64(),
            rd.norm_inf().as_f64() / tau.as_f64(),
            gap.as_f64(),
            pcost.as_f64(),
            tau.as_f64(),
            kappa.as_f64()
        );
        if pres_ok && dres_ok && gap_ok {
            status = SolveStatus::Optimal;
            break;
        }
        if by > T::zero() {
            let mut cert = aty.clone();
            cert.axpy(T::one(), &z);
            if cert.norm_inf() / by <= tol_feas {
                status = SolveStatus::Infeasible;
                break;
            }
        }
        if cx < T::zero() && (ax.amax() / -cx) <= tol_feas {
            status = SolveStatus::Unbounded;
            break;
        }
        if it == settings.max_iter {
            break;
        }

        let Some(sc) = Scaling::compute(&x, &z) else {
            log::debug!("NT scaling failed at iteration {it}");
            break;
        };
        let lam = sc.lambda();
        let Some(kkt) = Kkt::factor(&sf, sc) else {
            log::debug!("normal equations singular at iteration {it}");
            break;
        };

        // Predictor.
        let lam2 = jordan(&lam, &lam);
        let rho_aff = lam2.scaled(-T::one());
        let aff = kkt.solve(T::one(), &rp, &rd, rg, &rho_aff, -tau * kappa, tau, kappa);
        let (alpha_aff, sdx_a, sdz_a) = kkt.step_length(&aff, tau, kappa);
        let alpha_aff = alpha_aff.min(T::one());
        let sigma = {
            let s = T::one() - alpha_aff;
            (s * s * s).max(T::zero()).min(T::one())
        };

        // Corrector.
        let mut rho = rho_aff.clone();
        rho.axpy(sigma * mu, &ConeVec::identity(&sf.dims, sf.nlin));
        rho.axpy(-T::one(), &jordan(&sdx_a, &sdz_a));
        let r_tk = -tau * kappa + sigma * mu - aff.dtau * aff.dkappa;
        let dir = kkt.solve(T::one() - sigma, &rp, &rd, rg, &rho, r_tk, tau, kappa);
        let (alpha_max, _, _) = kkt.step_length(&dir, tau, kappa);
        let mut alpha = (alpha_max * T::lit(0.99)).min(T::one());

        let mut accepted = false;
        for _ in 0..20 {
            let mut xn = x.clone();
            xn.axpy(alpha, &dir.dx);
            xn.symmetrize();
            let mut zn = z.clone();
            zn.axpy(alpha, &dir.dz);
            zn.symmetrize();
            let tn = tau + alpha * dir.dtau;
            let kn = kappa + alpha * dir.dkappa;
            if tn > T::zero() && kn > T::zero() && Scaling::compute(&xn, &zn).is_some() {
                x = xn;
                z = zn;
                y += &dir.dy * alpha;
                tau = tn;
                kappa = kn;
                accepted = true;
                break;
            }
            alpha *= T::lit(0.5);
        }
        if !accepted {
            log::debug!("no acceptable step at iteration {it}");
            break;
        }
    }

    Ok(extract(p, &sf, status, &x, &y, &z, tau, iterations))
}

#[allow(clippy::too_many_arguments)]
fn extract<T: Real>(
    p: &ConicProblem<T>,
    sf: &StdForm<T>,
    status: SolveStatus,
    x: &ConeVec<T>,
    y: &RVec<T>,
    z: &ConeVec<T>,
    tau: T,
    iterations: usize,
) -> ConicSolution<T> {
    let (scale, dual_scale) = match status {
        SolveStatus::Optimal | SolveStatus::MaxIter => (T::one() / tau, T::one() / tau),
        // Certificates are reported unnormalized by τ.
        SolveStatus::Infeasible => (T::zero(), T::one() / sf.b.dot(y)),
        SolveStatus::Unbounded => (T::one() / (-sf.c.dot(x)), T::zero()),
    };
    let blocks: Vec<HermitianMatrix<T>> = x
        .blocks
        .iter()
        .map(|b| HermitianMatrix::new(b.map(|v| v.scale(scale))))
        .collect();
    let scalars: Vec<T> = (0..sf.nscalar).map(|i| x.lin[i] * scale).collect();
    let duals: Vec<T> = y
        .iter()
        .zip(&sf.row_scale)
        .map(|(v, s)| *v * *s * dual_scale)
        .collect();
    let objective = p.objective.eval(&blocks, &scalars);
    let dual_objective = duals.iter().zip(&sf.b_orig).fold(T::zero(), |a, (y, b)| a + *y * *b);
    let gap = x.dot(z) * scale * dual_scale;
    ConicSolution {
        status,
        blocks,
        scalars,
        duals,
        objective,
        dual_objective,
        gap,
        iterations,
    }
}
