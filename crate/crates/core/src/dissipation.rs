//! Rate-independent dissipation potentials: convex, positively 1-homogeneous
//! densities `R1` with `c1 |z| <= R1(z) <= c2 |z|`, their stability sets
//! `S = dR1(0)`, and the smooth regularization used by the viscous solver.
//!
//! The regularization composes a `C^2` integrated-smoothstep ramp (dead zone
//! of width `delta'`, unit slope beyond `2 delta'`) with a slightly shrunken
//! gauge.  The shrink factor `1 + eta` keeps the gradient saturation strictly
//! below the friction threshold, which is what lets the regularized dynamics
//! select sliding motion at exactly-marginal forces; `eta` is recorded so a
//! run's metadata pins the choice.

use serde::{Deserialize, Serialize};

use crate::grid::{Field, SpatialGrid};
use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error)]
pub enum DissipationError {
    #[error("invalid dissipation config: {0}")]
    Config(String),
    #[error("regularization width must be positive, got {0}")]
    NonpositiveDelta(f64),
}

/// Ratio between the gauge shrink `eta` and `delta / c2`; fixes the sample
/// range on which the regularization keeps the documented lower bound.
const FATTEN_SCALE: f64 = 16.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DissipationKind<S = f64> {
    /// `R1(z) = sum_i alpha_i |z_i|`, all weights positive.
    WeightedL1 { alpha: Vec<S> },
    /// Scalar potential with direction-dependent friction:
    /// `alpha [z]^+ + beta [z]^-`.
    AsymmetricScalar { alpha: S, beta: S },
    /// Gauge of the ellipsoid `{ z : z^T Q z <= 1 }`, `Q` SPD row-major.
    GaugeEllipsoid { q: Vec<S> },
    /// Gauge of a convex polygon (m = 2) with 0 in its interior,
    /// counter-clockwise vertex list.
    GaugePolygon { vertices: Vec<[S; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipationPotential<S = f64> {
    pub kind: DissipationKind<S>,
    pub m: usize,
    /// Lower gauge-equivalence constant `c1`.
    pub c_lower: S,
    /// Upper gauge-equivalence constant `c2`.
    pub c_upper: S,
    /// Half-plane description of the polygon kind: unit outward normals and
    /// supports, precomputed at construction.
    #[serde(skip)]
    facets: Vec<([S; 2], S)>,
}

impl<S: Scalar> DissipationPotential<S> {
    pub fn weighted_l1(alpha: Vec<S>) -> Result<Self, DissipationError> {
        if alpha.is_empty() || alpha.iter().any(|a| *a <= S::zero()) {
            return Err(DissipationError::Config("weights must be positive".into()));
        }
        let m = alpha.len();
        let c_lower = alpha.iter().cloned().fold(S::infinity(), S::min);
        let c_upper = alpha.iter().fold(S::zero(), |s, a| s + *a * *a).sqrt();
        Ok(DissipationPotential {
            kind: DissipationKind::WeightedL1 { alpha },
            m,
            c_lower,
            c_upper,
            facets: Vec::new(),
        })
    }

    pub fn absolute_value() -> Self {
        Self::weighted_l1(vec![S::one()]).unwrap()
    }

    pub fn asymmetric(alpha: S, beta: S) -> Result<Self, DissipationError> {
        if alpha <= S::zero() || beta <= S::zero() {
            return Err(DissipationError::Config("frictions must be positive".into()));
        }
        Ok(DissipationPotential {
            kind: DissipationKind::AsymmetricScalar { alpha, beta },
            m: 1,
            c_lower: alpha.min(beta),
            c_upper: alpha.max(beta),
            facets: Vec::new(),
        })
    }

    pub fn euclidean(m: usize) -> Self {
        let mut q = vec![S::zero(); m * m];
        for i in 0..m {
            q[i * m + i] = S::one();
        }
        Self::ellipsoid(m, q).unwrap()
    }

    pub fn ellipsoid(m: usize, q: Vec<S>) -> Result<Self, DissipationError> {
        if q.len() != m * m {
            return Err(DissipationError::Config("ellipsoid matrix has wrong size".into()));
        }
        for i in 0..m {
            for j in 0..m {
                if (q[i * m + j] - q[j * m + i]).abs() > S::of(1e-12) {
                    return Err(DissipationError::Config("ellipsoid matrix must be symmetric".into()));
                }
            }
        }
        let (emin, emax) = sym_eig_range(m, &q);
        if emin <= S::zero() {
            return Err(DissipationError::Config(
                "ellipsoid matrix must be positive definite (0 must be interior to K)".into(),
            ));
        }
        Ok(DissipationPotential {
            kind: DissipationKind::GaugeEllipsoid { q },
            m,
            c_lower: emin.sqrt(),
            c_upper: emax.sqrt(),
            facets: Vec::new(),
        })
    }

    pub fn polygon(vertices: Vec<[S; 2]>) -> Result<Self, DissipationError> {
        if vertices.len() < 3 {
            return Err(DissipationError::Config("polygon needs at least 3 vertices".into()));
        }
        let n = vertices.len();
        let mut facets = Vec::with_capacity(n);
        let mut r_out = S::zero();
        let mut r_in = S::infinity();
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let e = [b[0] - a[0], b[1] - a[1]];
            // outward normal for a counter-clockwise polygon
            let mut nrm = [e[1], -e[0]];
            let len = (nrm[0] * nrm[0] + nrm[1] * nrm[1]).sqrt();
            if len == S::zero() {
                return Err(DissipationError::Config("degenerate polygon edge".into()));
            }
            nrm = [nrm[0] / len, nrm[1] / len];
            let h = nrm[0] * a[0] + nrm[1] * a[1];
            if h <= S::zero() {
                return Err(DissipationError::Config(
                    "0 must be an interior point of the polygon (is it counter-clockwise?)".into(),
                ));
            }
            r_in = r_in.min(h);
            r_out = r_out.max((a[0] * a[0] + a[1] * a[1]).sqrt());
            facets.push((nrm, h));
        }
        // convexity: every vertex on the inner side of every facet
        for &(nrm, h) in &facets {
            for v in &vertices {
                if nrm[0] * v[0] + nrm[1] * v[1] > h + S::of(1e-9) {
                    return Err(DissipationError::Config("polygon is not convex".into()));
                }
            }
        }
        Ok(DissipationPotential {
            kind: DissipationKind::GaugePolygon { vertices },
            m: 2,
            c_lower: S::one() / r_out,
            c_upper: S::one() / r_in,
            facets,
        })
    }

    /// Rebuild the derived facet data after deserialization.
    pub fn rehydrate(self) -> Self {
        match &self.kind {
            DissipationKind::GaugePolygon { vertices } => Self::polygon(vertices.clone()).unwrap(),
            _ => self,
        }
    }

    /// Pointwise value `R1(z)`.
    pub fn eval(&self, z: &[S]) -> S {
        debug_assert_eq!(z.len(), self.m);
        match &self.kind {
            DissipationKind::WeightedL1 { alpha } => {
                z.iter().zip(alpha).fold(S::zero(), |s, (x, a)| s + *a * x.abs())
            }
            DissipationKind::AsymmetricScalar { alpha, beta } => {
                let x = z[0];
                if x >= S::zero() {
                    *alpha * x
                } else {
                    -*beta * x
                }
            }
            DissipationKind::GaugeEllipsoid { q } => quad_form(self.m, q, z).sqrt(),
            DissipationKind::GaugePolygon { .. } => {
                // gauge of an intersection of half-planes: max_i <n_i, z> / h_i
                let mut g = S::zero();
                for &(nrm, h) in &self.facets {
                    g = g.max((nrm[0] * z[0] + nrm[1] * z[1]) / h);
                }
                g
            }
        }
    }

    /// Quadrature total `\int R1(v)` over a field.
    pub fn total(&self, grid: &SpatialGrid<S>, v: &Field<S>) -> S {
        let mut s = S::zero();
        for i in 0..grid.n_nodes {
            s = s + self.eval(v.node(i, grid.m));
        }
        s * grid.weight()
    }

    /// `max { <sigma, z> - R1(z) : |z| = 1 }`; nonpositive exactly on the
    /// stability set `dR1(0)`.
    pub fn stability_slack(&self, sigma: &[S]) -> S {
        match &self.kind {
            DissipationKind::WeightedL1 { alpha } => {
                let mut any_pos = false;
                let mut sq = S::zero();
                let mut best = S::neg_infinity();
                for (s, a) in sigma.iter().zip(alpha) {
                    let e = s.abs() - *a;
                    best = best.max(e);
                    if e > S::zero() {
                        any_pos = true;
                        sq = sq + e * e;
                    }
                }
                if any_pos {
                    sq.sqrt()
                } else {
                    best
                }
            }
            DissipationKind::AsymmetricScalar { alpha, beta } => {
                (sigma[0] - *alpha).max(-sigma[0] - *beta)
            }
            _ => self.slack_by_search(sigma),
        }
    }

    /// Direction scan plus local refinement for the gauge kinds.
    fn slack_by_search(&self, sigma: &[S]) -> S {
        let obj = |z: &[S]| {
            let mut ip = S::zero();
            for (a, b) in sigma.iter().zip(z) {
                ip = ip + *a * *b;
            }
            ip - self.eval(z)
        };
        if self.m == 1 {
            return obj(&[S::one()]).max(obj(&[-S::one()]));
        }
        if self.m == 2 {
            // 2^10 quasi-uniform directions, then golden-section refinement
            // around the best bracket.
            let n = 1024usize;
            let two_pi = S::of(std::f64::consts::TAU);
            let step = two_pi / S::from_usize(n).unwrap();
            let eval_angle = |t: S| obj(&[t.cos(), t.sin()]);
            let mut best_i = 0usize;
            let mut best = S::neg_infinity();
            for i in 0..n {
                let v = eval_angle(step * S::from_usize(i).unwrap());
                if v > best {
                    best = v;
                    best_i = i;
                }
            }
            let mut lo = step * S::from_usize(best_i.wrapping_sub(1).min(n - 1)).unwrap();
            if best_i == 0 {
                lo = -step;
            }
            let mut hi = lo + step + step;
            let gr = S::of(0.618_033_988_749_894_9);
            let mut x1 = hi - gr * (hi - lo);
            let mut x2 = lo + gr * (hi - lo);
            let mut f1 = eval_angle(x1);
            let mut f2 = eval_angle(x2);
            for _ in 0..80 {
                if f1 > f2 {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - gr * (hi - lo);
                    f1 = eval_angle(x1);
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + gr * (hi - lo);
                    f2 = eval_angle(x2);
                }
            }
            return best.max(f1).max(f2);
        }
        // quasi-random sphere sample with projected-gradient polish
        let mut best_z = vec![S::zero(); self.m];
        let mut best = S::neg_infinity();
        for i in 0..2048 {
            let z = halton_sphere::<S>(i, self.m);
            let v = obj(&z);
            if v > best {
                best = v;
                best_z = z;
            }
        }
        let mut z = best_z;
        let mut step = S::of(0.1);
        for _ in 0..200 {
            let g = self.slack_gradient(sigma, &z);
            let mut cand: Vec<S> = z.iter().zip(&g).map(|(a, b)| *a + step * *b).collect();
            let nrm = cand.iter().fold(S::zero(), |s, x| s + *x * *x).sqrt();
            for c in cand.iter_mut() {
                *c = *c / nrm;
            }
            let v = obj(&cand);
            if v > best {
                best = v;
                z = cand;
            } else {
                step = step * S::of(0.5);
            }
        }
        best
    }

    fn slack_gradient(&self, sigma: &[S], z: &[S]) -> Vec<S> {
        let h = S::of(1e-6);
        let mut g = vec![S::zero(); self.m];
        let obj = |z: &[S]| {
            let mut ip = S::zero();
            for (a, b) in sigma.iter().zip(z) {
                ip = ip + *a * *b;
            }
            ip - self.eval(z)
        };
        let mut zp = z.to_vec();
        for i in 0..self.m {
            let orig = zp[i];
            zp[i] = orig + h;
            let fp = obj(&zp);
            zp[i] = orig - h;
            let fm = obj(&zp);
            zp[i] = orig;
            g[i] = (fp - fm) / (h + h);
        }
        g
    }

    /// Membership in `S = dR1(0)` up to `tol`.
    pub fn is_stable(&self, sigma: &[S], tol: S) -> bool {
        self.stability_slack(sigma) <= tol
    }

    /// Build the smooth regularization of width `delta > 0`.
    pub fn regularize(&self, delta: S) -> Result<RegularizedDissipation<S>, DissipationError> {
        if delta <= S::zero() {
            return Err(DissipationError::NonpositiveDelta(delta.to_f64().unwrap_or(f64::NAN)));
        }
        let eta = delta / (S::of(FATTEN_SCALE) * self.c_upper);
        let ramp_delta = match self.kind {
            DissipationKind::WeightedL1 { .. } => {
                delta / (S::of(2.0) * S::from_usize(self.m).unwrap())
            }
            _ => delta / S::of(2.0),
        };
        Ok(RegularizedDissipation { base: self.clone(), delta, ramp_delta, eta })
    }
}

/// Stability set `S = dR1(0)` as a queryable object.
#[derive(Debug, Clone)]
pub struct StabilitySet<S = f64> {
    pub potential: DissipationPotential<S>,
}

impl<S: Scalar> StabilitySet<S> {
    pub fn new(potential: DissipationPotential<S>) -> Self {
        StabilitySet { potential }
    }

    pub fn slack(&self, sigma: &[S]) -> S {
        self.potential.stability_slack(sigma)
    }

    pub fn contains(&self, sigma: &[S], tol: S) -> bool {
        self.potential.is_stable(sigma, tol)
    }
}

/// `C^1` (piecewise `C^2`) regularization `R1^delta` of a dissipation
/// potential, with analytic gradient.
#[derive(Debug, Clone)]
pub struct RegularizedDissipation<S = f64> {
    pub base: DissipationPotential<S>,
    pub delta: S,
    /// Dead-zone half-width of the integrated-smoothstep ramp.
    pub ramp_delta: S,
    /// Relative gauge shrink (gradient saturation gap), recorded in run
    /// metadata.
    pub eta: S,
}

impl<S: Scalar> RegularizedDissipation<S> {
    #[inline]
    fn shrink(&self) -> S {
        S::one() + self.eta
    }

    pub fn eval(&self, z: &[S]) -> S {
        match &self.base.kind {
            DissipationKind::WeightedL1 { alpha } => {
                let mut s = S::zero();
                for (x, a) in z.iter().zip(alpha) {
                    s = s + ramp(self.ramp_delta, *a * x.abs() / self.shrink());
                }
                s
            }
            _ => ramp(self.ramp_delta, self.base.eval(z) / self.shrink()),
        }
    }

    pub fn gradient(&self, z: &[S]) -> Vec<S> {
        match &self.base.kind {
            DissipationKind::WeightedL1 { alpha } => z
                .iter()
                .zip(alpha)
                .map(|(x, a)| {
                    let d = ramp_d1(self.ramp_delta, *a * x.abs() / self.shrink());
                    d * *a * x.signum() / self.shrink()
                })
                .collect(),
            DissipationKind::AsymmetricScalar { alpha, beta } => {
                let x = z[0];
                let slope = if x >= S::zero() { *alpha } else { -*beta };
                let d = ramp_d1(self.ramp_delta, self.base.eval(z) / self.shrink());
                vec![d * slope / self.shrink()]
            }
            DissipationKind::GaugeEllipsoid { q } => {
                let g = self.base.eval(z);
                if g == S::zero() {
                    return vec![S::zero(); self.base.m];
                }
                let d = ramp_d1(self.ramp_delta, g / self.shrink());
                let m = self.base.m;
                let mut grad = vec![S::zero(); m];
                for i in 0..m {
                    let mut s = S::zero();
                    for j in 0..m {
                        s = s + q[i * m + j] * z[j];
                    }
                    grad[i] = d * s / (g * self.shrink());
                }
                grad
            }
            DissipationKind::GaugePolygon { .. } => {
                // subgradient of max_i <n_i, z>/h_i: averaged over active
                // facets so the value is well-defined on edges of the fan
                let g = self.base.eval(z);
                let d = ramp_d1(self.ramp_delta, g / self.shrink());
                let mut grad = [S::zero(); 2];
                let mut active = S::zero();
                for &(nrm, h) in &self.base.facets {
                    let v = (nrm[0] * z[0] + nrm[1] * z[1]) / h;
                    if v >= g - S::of(1e-12) * (S::one() + g.abs()) {
                        grad[0] = grad[0] + nrm[0] / h;
                        grad[1] = grad[1] + nrm[1] / h;
                        active = active + S::one();
                    }
                }
                if active > S::zero() {
                    vec![
                        d * grad[0] / (active * self.shrink()),
                        d * grad[1] / (active * self.shrink()),
                    ]
                } else {
                    vec![S::zero(); 2]
                }
            }
        }
    }

    /// Hessian contribution for Newton; exact for the coordinate kinds and
    /// the ellipsoid, Gauss-Newton (outer-product) for the polygon.
    pub fn hessian(&self, z: &[S], out: &mut [S]) {
        let m = self.base.m;
        for v in out.iter_mut() {
            *v = S::zero();
        }
        match &self.base.kind {
            DissipationKind::WeightedL1 { alpha } => {
                for (i, (x, a)) in z.iter().zip(alpha).enumerate() {
                    let d2 = ramp_d2(self.ramp_delta, *a * x.abs() / self.shrink());
                    out[i * m + i] = d2 * *a * *a / (self.shrink() * self.shrink());
                }
            }
            DissipationKind::AsymmetricScalar { alpha, beta } => {
                let x = z[0];
                let slope = if x >= S::zero() { *alpha } else { *beta };
                let d2 = ramp_d2(self.ramp_delta, self.base.eval(z) / self.shrink());
                out[0] = d2 * slope * slope / (self.shrink() * self.shrink());
            }
            DissipationKind::GaugeEllipsoid { q } => {
                let g = self.base.eval(z);
                if g == S::zero() {
                    return;
                }
                let sh = self.shrink();
                let d1 = ramp_d1(self.ramp_delta, g / sh);
                let d2 = ramp_d2(self.ramp_delta, g / sh);
                let mut qz = vec![S::zero(); m];
                for i in 0..m {
                    for j in 0..m {
                        qz[i] = qz[i] + q[i * m + j] * z[j];
                    }
                }
                for i in 0..m {
                    for j in 0..m {
                        let dg_i = qz[i] / g;
                        let dg_j = qz[j] / g;
                        let d2g = (q[i * m + j] - dg_i * dg_j) / g;
                        out[i * m + j] = (d2 * dg_i * dg_j / sh + d1 * d2g) / sh;
                    }
                }
            }
            DissipationKind::GaugePolygon { .. } => {
                let g = self.base.eval(z);
                let sh = self.shrink();
                let d2 = ramp_d2(self.ramp_delta, g / sh);
                let grad = self.gradient(z);
                let d1 = ramp_d1(self.ramp_delta, g / sh);
                if d1 > S::zero() {
                    for i in 0..m {
                        for j in 0..m {
                            out[i * m + j] = d2 / (d1 * d1) * grad[i] * grad[j];
                        }
                    }
                }
            }
        }
    }

    pub fn total(&self, grid: &SpatialGrid<S>, v: &Field<S>) -> S {
        let mut s = S::zero();
        for i in 0..grid.n_nodes {
            s = s + self.eval(v.node(i, grid.m));
        }
        s * grid.weight()
    }

    /// Pointwise inverse of the rate map `s -> lambda s + DR^delta(s)`:
    /// the play-operator kernel of one implicit step.  Strictly monotone, so
    /// the scalar reductions below are solved by safeguarded
    /// bisection-Newton; non-separable gauges fall back to damped Newton.
    pub fn invert_rate(&self, lambda: S, g: &[S], out: &mut [S]) {
        match &self.base.kind {
            DissipationKind::WeightedL1 { alpha } => {
                for ((o, gi), a) in out.iter_mut().zip(g).zip(alpha) {
                    let sh = self.shrink();
                    let rd = self.ramp_delta;
                    let mag = solve_scalar_rate(lambda, gi.abs(), |s| {
                        ramp_d1(rd, *a * s / sh) * *a / sh
                    });
                    *o = mag * gi.signum();
                }
            }
            DissipationKind::AsymmetricScalar { alpha, beta } => {
                let sh = self.shrink();
                let rd = self.ramp_delta;
                let slope = if g[0] >= S::zero() { *alpha } else { *beta };
                let mag = solve_scalar_rate(lambda, g[0].abs(), |s| {
                    ramp_d1(rd, slope * s / sh) * slope / sh
                });
                out[0] = mag * g[0].signum();
            }
            DissipationKind::GaugeEllipsoid { q } if is_isotropic(self.base.m, q) => {
                // radial: solve along the force direction
                let m = self.base.m;
                let c = q[0].sqrt();
                let gn = g.iter().fold(S::zero(), |s, x| s + *x * *x).sqrt();
                if gn == S::zero() {
                    for o in out.iter_mut() {
                        *o = S::zero();
                    }
                    return;
                }
                let sh = self.shrink();
                let rd = self.ramp_delta;
                let rho = solve_scalar_rate(lambda, gn, |s| ramp_d1(rd, c * s / sh) * c / sh);
                for i in 0..m {
                    out[i] = rho * g[i] / gn;
                }
            }
            _ => {
                let s = self.invert_rate_newton(lambda, g);
                out.copy_from_slice(&s);
            }
        }
    }

    fn invert_rate_newton(&self, lambda: S, g: &[S]) -> Vec<S> {
        let m = self.base.m;
        let mut s = vec![S::zero(); m];
        let res = |s: &[S]| -> Vec<S> {
            let dr = self.gradient(s);
            (0..m).map(|i| lambda * s[i] + dr[i] - g[i]).collect()
        };
        let norm = |v: &[S]| v.iter().fold(S::zero(), |a, x| a + *x * *x).sqrt();
        let mut r = res(&s);
        let mut rn = norm(&r);
        let mut hess = vec![S::zero(); m * m];
        for _ in 0..300 {
            if rn <= S::of(1e-14) * (S::one() + norm(&s) * lambda) + S::of(1e-15) {
                break;
            }
            self.hessian(&s, &mut hess);
            // solve (lambda I + H) d = -r by small Gaussian elimination
            let mut a = hess.clone();
            for i in 0..m {
                a[i * m + i] = a[i * m + i] + lambda;
            }
            let mut d: Vec<S> = r.iter().map(|x| -*x).collect();
            small_solve(m, &mut a, &mut d);
            let mut alpha = S::one();
            let mut ok = false;
            for _ in 0..70 {
                let cand: Vec<S> = (0..m).map(|i| s[i] + alpha * d[i]).collect();
                let rc = res(&cand);
                let rcn = norm(&rc);
                if rcn < rn {
                    s = cand;
                    r = rc;
                    rn = rcn;
                    ok = true;
                    break;
                }
                alpha = alpha * S::of(0.5);
            }
            if !ok {
                break;
            }
        }
        s
    }
}

/// Safeguarded solve of `lambda s + dr(s) = g` for `g >= 0` with `dr`
/// nondecreasing and `dr(0) = 0`: bisection with guaranteed bracket
/// contraction, Newton-style proposals as accelerators only.
fn solve_scalar_rate<S: Scalar>(lambda: S, g: S, dr: impl Fn(S) -> S) -> S {
    if g <= S::zero() {
        return S::zero();
    }
    let residual = |s: S| lambda * s + dr(s) - g;
    // dead zone: the friction gradient vanishes up to its activation width
    let direct = g / lambda;
    let sat = dr(direct);
    if sat == S::zero() {
        return direct;
    }
    // saturated shoulder: constant gradient beyond the ramp
    let shoulder = (g - sat) / lambda;
    if shoulder > S::zero() && dr(shoulder) == sat {
        return shoulder;
    }
    let mut lo = S::zero();
    let mut hi = direct; // residual(hi) = dr(hi) >= 0, residual(lo) = -g < 0
    for _ in 0..120 {
        let width = hi - lo;
        if width <= S::of(1e-16) * (S::one() + hi) {
            break;
        }
        // secant proposal from the bracket midpoint, clipped well inside
        let mid = lo + width / S::of(2.0);
        let h_mid = residual(mid);
        if h_mid.abs() <= S::of(1e-17) * (S::one() + g) {
            return mid;
        }
        if h_mid > S::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
        // local slope at the surviving bracket for a Newton refinement
        let eps = (hi - lo) * S::of(1e-3);
        if eps > S::zero() {
            let base = if h_mid > S::zero() { lo } else { hi };
            let h_base = residual(base);
            let slope = lambda
                + (dr((base + eps).min(hi)) - dr((base - eps).max(lo)))
                    / ((base + eps).min(hi) - (base - eps).max(lo)).max(S::of(1e-300));
            let cand = base - h_base / slope;
            if cand > lo && cand < hi && cand.is_finite() {
                let h_cand = residual(cand);
                if h_cand.abs() <= S::of(1e-17) * (S::one() + g) {
                    return cand;
                }
                if h_cand > S::zero() {
                    hi = cand;
                } else {
                    lo = cand;
                }
            }
        }
    }
    lo + (hi - lo) / S::of(2.0)
}

fn is_isotropic<S: Scalar>(m: usize, q: &[S]) -> bool {
    let d = q[0];
    for i in 0..m {
        for j in 0..m {
            let want = if i == j { d } else { S::zero() };
            if (q[i * m + j] - want).abs() > S::of(1e-14) * (S::one() + d.abs()) {
                return false;
            }
        }
    }
    true
}

fn small_solve<S: Scalar>(m: usize, a: &mut [S], b: &mut [S]) {
    for col in 0..m {
        let mut piv = col;
        for r in (col + 1)..m {
            if a[r * m + col].abs() > a[piv * m + col].abs() {
                piv = r;
            }
        }
        if piv != col {
            for c in 0..m {
                a.swap(col * m + c, piv * m + c);
            }
            b.swap(col, piv);
        }
        let d = a[col * m + col];
        for r in (col + 1)..m {
            let f = a[r * m + col] / d;
            if f != S::zero() {
                for c in col..m {
                    a[r * m + c] = a[r * m + c] - f * a[col * m + c];
                }
                b[r] = b[r] - f * b[col];
            }
        }
    }
    for col in (0..m).rev() {
        let mut s = b[col];
        for c in (col + 1)..m {
            s = s - a[col * m + c] * b[c];
        }
        b[col] = s / a[col * m + col];
    }
}

/// Integrated quintic smoothstep: zero on `[0, d]`, slope one beyond `2 d`,
/// `[s - 2d]^+ <= ramp(s) <= [s - d]^+` everywhere.
pub fn ramp<S: Scalar>(d: S, s: S) -> S {
    if s <= d {
        S::zero()
    } else if s >= d + d {
        s - S::of(1.5) * d
    } else {
        let x = (s - d) / d;
        let x2 = x * x;
        // antiderivative of 10x^3 - 15x^4 + 6x^5
        d * x2 * x2 * (S::of(2.5) - S::of(3.0) * x + x2)
    }
}

pub fn ramp_d1<S: Scalar>(d: S, s: S) -> S {
    if s <= d {
        S::zero()
    } else if s >= d + d {
        S::one()
    } else {
        let x = (s - d) / d;
        let x2 = x * x;
        x2 * x * (S::of(10.0) - S::of(15.0) * x + S::of(6.0) * x2)
    }
}

pub fn ramp_d2<S: Scalar>(d: S, s: S) -> S {
    if s <= d || s >= d + d {
        S::zero()
    } else {
        let x = (s - d) / d;
        let y = x * (S::one() - x);
        S::of(30.0) * y * y / d
    }
}

/// Quasi-random point on the unit sphere in `R^m` (Halton + Box-Muller-free
/// radial map); deterministic.
fn halton_sphere<S: Scalar>(index: usize, m: usize) -> Vec<S> {
    const PRIMES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    let mut z = Vec::with_capacity(m);
    for c in 0..m {
        let u = halton(index + 1, PRIMES[c % PRIMES.len()]);
        // inverse-normal through a logit surrogate is enough for directions
        let v = (u - 0.5) * 2.0;
        z.push(S::of(v + 0.1 * (7.0 * v).sin()));
    }
    let n = z.iter().fold(S::zero(), |s, x| s + *x * *x).sqrt();
    if n == S::zero() {
        z[0] = S::one();
        return z;
    }
    z.iter().map(|x| *x / n).collect()
}

pub(crate) fn halton(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

fn quad_form<S: Scalar>(m: usize, q: &[S], z: &[S]) -> S {
    let mut s = S::zero();
    for i in 0..m {
        for j in 0..m {
            s = s + z[i] * q[i * m + j] * z[j];
        }
    }
    s
}

/// Eigenvalue range of a small symmetric matrix by Jacobi rotations.
fn sym_eig_range<S: Scalar>(m: usize, q: &[S]) -> (S, S) {
    let mut a = q.to_vec();
    for _ in 0..100 {
        // largest off-diagonal element
        let (mut p, mut r, mut off) = (0, 1, S::zero());
        for i in 0..m {
            for j in (i + 1)..m {
                if a[i * m + j].abs() > off {
                    off = a[i * m + j].abs();
                    p = i;
                    r = j;
                }
            }
        }
        if off < S::of(1e-14) {
            break;
        }
        let app = a[p * m + p];
        let arr = a[r * m + r];
        let apr = a[p * m + r];
        let theta = (arr - app) / (S::of(2.0) * apr);
        let t = theta.signum() / (theta.abs() + (theta * theta + S::one()).sqrt());
        let c = S::one() / (t * t + S::one()).sqrt();
        let s = t * c;
        for k in 0..m {
            let akp = a[k * m + p];
            let akr = a[k * m + r];
            a[k * m + p] = c * akp - s * akr;
            a[k * m + r] = s * akp + c * akr;
        }
        for k in 0..m {
            let apk = a[p * m + k];
            let ark = a[r * m + k];
            a[p * m + k] = c * apk - s * ark;
            a[r * m + k] = s * apk + c * ark;
        }
    }
    let mut lo = S::infinity();
    let mut hi = S::neg_infinity();
    for i in 0..m {
        lo = lo.min(a[i * m + i]);
        hi = hi.max(a[i * m + i]);
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn l1() -> DissipationPotential {
        DissipationPotential::weighted_l1(vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn weighted_l1_value() {
        assert_eq!(l1().eval(&[1.0, -2.0]), 3.0);
    }

    #[test]
    fn asymmetric_value() {
        let p = DissipationPotential::asymmetric(2.0, 1.0).unwrap();
        assert_eq!(p.eval(&[1.0]), 2.0);
        assert_eq!(p.eval(&[-1.0]), 1.0);
    }

    #[test]
    fn ball_gauge_is_norm() {
        let p = DissipationPotential::<f64>::euclidean(2);
        assert!((p.eval(&[3.0, 4.0]) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn polygon_gauge_matches_linf_ball() {
        // square [-1,1]^2 has gauge = max(|x|, |y|)
        let p = DissipationPotential::<f64>::polygon(vec![[1.0, -1.0], [1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0]])
            .unwrap();
        assert!((p.eval(&[0.5, -0.2]) - 0.5).abs() < 1e-12);
        assert!((p.eval(&[-2.0, 1.0]) - 2.0).abs() < 1e-12);
        assert!(p.c_lower <= 1.0 / 2.0_f64.sqrt() + 1e-12 && p.c_upper >= 1.0 - 1e-12);
    }

    #[test]
    fn polygon_rejects_zero_outside() {
        let r = DissipationPotential::polygon(vec![[1.0, 1.0], [2.0, 1.0], [1.5, 2.0]]);
        assert!(r.is_err());
    }

    #[test]
    fn slack_examples() {
        let p = l1();
        assert!(p.stability_slack(&[0.5, -1.0]) <= 0.0);
        let s = p.stability_slack(&[1.2, 0.0]);
        assert!((s - 0.2).abs() < 1e-12, "slack {s}");
        // Example with the unit square as stability set: origin force of the
        // two-component path potential is a member.
        assert!(p.is_stable(&[1.0, 1.0], 1e-12));
        assert!(!p.is_stable(&[1.0 + 1e-6, 1.0], 1e-9));
    }

    #[test]
    fn slack_search_matches_closed_form_on_ball() {
        let p = DissipationPotential::<f64>::euclidean(2);
        for sigma in [[0.3f64, -0.4], [1.5, 0.0], [0.6, 0.8]] {
            let want = (sigma[0] * sigma[0] + sigma[1] * sigma[1]).sqrt() - 1.0;
            let got = p.stability_slack(&sigma);
            assert!((got - want).abs() < 1e-6, "sigma {sigma:?}: {got} vs {want}");
        }
    }

    #[test]
    fn regularized_vanishes_at_origin() {
        for p in [l1(), DissipationPotential::euclidean(2)] {
            let r = p.regularize(0.05).unwrap();
            assert_eq!(r.eval(&[0.0, 0.0]), 0.0);
            assert!(r.gradient(&[0.0, 0.0]).iter().all(|&g| g == 0.0));
        }
    }

    #[test]
    fn regularize_rejects_nonpositive_delta() {
        assert!(l1().regularize(0.0).is_err());
    }

    /// The two displayed bounds of the regularization, sampled.
    #[test]
    fn regularized_display_bounds() {
        let delta = 0.1f64;
        for p in [
            DissipationPotential::weighted_l1(vec![1.0]).unwrap(),
            DissipationPotential::euclidean(1),
        ] {
            let r = p.regularize(delta).unwrap();
            for i in 0..1000 {
                let z = [(halton(i + 1, 2) - 0.5) * 8.0];
                let v = r.eval(&z);
                let lo = (p.c_lower * z[0].abs() - 2.0 * delta).max(0.0);
                let hi = p.c_upper * z[0].abs();
                assert!(lo - 1e-12 <= v && v <= hi + 1e-12, "z {} v {v} in [{lo},{hi}]", z[0]);
                let g = r.gradient(&z);
                let homo = (g[0] * z[0] - v).abs();
                assert!(homo <= 2.0 * delta + 1e-12, "homogeneity defect {homo}");
            }
        }
    }

    #[test]
    fn regularized_gradient_matches_fd() {
        let p = DissipationPotential::weighted_l1(vec![1.0, 2.0]).unwrap();
        let r = p.regularize(0.03).unwrap();
        let h = 1e-6;
        for i in 0..200 {
            let z = [(halton(i + 1, 2) - 0.5) * 4.0, (halton(i + 1, 3) - 0.5) * 4.0];
            let g = r.gradient(&z);
            for c in 0..2 {
                let mut zp = z;
                zp[c] += h;
                let mut zm = z;
                zm[c] -= h;
                let fd = (r.eval(&zp) - r.eval(&zm)) / (2.0 * h);
                assert!((fd - g[c]).abs() < 1e-6 * (1.0 + g[c].abs()), "fd {fd} vs {}", g[c]);
            }
        }
    }

    #[test]
    fn regularized_gradient_bounded_by_c2() {
        for p in [l1(), DissipationPotential::euclidean(2)] {
            let r = p.regularize(0.07).unwrap();
            for i in 0..500 {
                let z = [(halton(i + 1, 2) - 0.5) * 10.0, (halton(i + 1, 3) - 0.5) * 10.0];
                let g = r.gradient(&z);
                let n = (g[0] * g[0] + g[1] * g[1]).sqrt();
                assert!(n <= p.c_upper + 1e-9);
            }
        }
    }

    #[test]
    fn regularized_stays_in_stability_set() {
        // the saturation gap keeps DR^delta strictly inside dR1(0)
        let p = l1();
        let r = p.regularize(0.05).unwrap();
        for i in 0..200 {
            let z = [(halton(i + 1, 2) - 0.5) * 6.0, (halton(i + 1, 3) - 0.5) * 6.0];
            let g = r.gradient(&z);
            assert!(p.stability_slack(&g) <= 0.0, "z {z:?} grad {g:?}");
        }
    }

    #[test]
    fn convergence_as_delta_shrinks() {
        let p = DissipationPotential::euclidean(2);
        let mut prev_sup = f64::INFINITY;
        for delta in [0.2, 0.1, 0.05, 0.025] {
            let r = p.regularize(delta).unwrap();
            let mut sup: f64 = 0.0;
            for i in 0..400 {
                let z = [(halton(i + 1, 2) - 0.5) * 6.0, (halton(i + 1, 3) - 0.5) * 6.0];
                sup = sup.max((r.eval(&z) - p.eval(&z)).abs());
            }
            assert!(sup <= 2.0 * delta + 1e-12);
            assert!(sup <= prev_sup + 1e-12);
            prev_sup = sup;
        }
    }

    #[test]
    fn ramp_bounds() {
        let d = 0.05f64;
        for i in 0..500 {
            let s = i as f64 * 0.002;
            let v = ramp(d, s);
            assert!((s - 2.0 * d).max(0.0) - 1e-15 <= v && v <= (s - d).max(0.0) + 1e-15);
            let d1 = ramp_d1(d, s);
            assert!((-1e-15..=1.0 + 1e-15).contains(&d1));
        }
    }

    proptest! {
        #[test]
        fn homogeneity(zx in -5.0f64..5.0, zy in -5.0f64..5.0, a in 0.0f64..10.0) {
            for p in [l1(), DissipationPotential::euclidean(2),
                      DissipationPotential::polygon(vec![[1.0, -1.0], [1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0]]).unwrap()] {
                let z = [zx, zy];
                let az = [a * zx, a * zy];
                let lhs = p.eval(&az);
                let rhs = a * p.eval(&z);
                prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
            }
        }

        #[test]
        fn subadditivity(ax in -4.0f64..4.0, ay in -4.0f64..4.0, bx in -4.0f64..4.0, by in -4.0f64..4.0) {
            for p in [l1(), DissipationPotential::euclidean(2)] {
                let sum = p.eval(&[ax + bx, ay + by]);
                prop_assert!(sum <= p.eval(&[ax, ay]) + p.eval(&[bx, by]) + 1e-12);
            }
        }

        #[test]
        fn gauge_sandwich(zx in -5.0f64..5.0, zy in -5.0f64..5.0) {
            for p in [l1(), DissipationPotential::euclidean(2),
                      DissipationPotential::polygon(vec![[2.0, 0.0], [0.0, 1.0], [-2.0, 0.0], [0.0, -1.0]]).unwrap()] {
                let z = [zx, zy];
                let n = (zx * zx + zy * zy).sqrt();
                let v = p.eval(&z);
                prop_assert!(p.c_lower * n - 1e-10 <= v && v <= p.c_upper * n + 1e-10);
                if n > 1e-9 { prop_assert!(v > 0.0); }
            }
        }

        #[test]
        fn duality(zx in -3.0f64..3.0, zy in -3.0f64..3.0, sx in -2.0f64..2.0, sy in -2.0f64..2.0) {
            // any stable sigma satisfies <sigma, z> <= R1(z)
            let p = l1();
            let sigma = [sx, sy];
            if p.stability_slack(&sigma) <= 0.0 {
                prop_assert!(sx * zx + sy * zy <= p.eval(&[zx, zy]) + 1e-10);
            }
        }

        #[test]
        fn regularized_convex_on_segments(zx in -3.0f64..3.0, zy in -3.0f64..3.0,
                                          wx in -3.0f64..3.0, wy in -3.0f64..3.0,
                                          t in 0.0f64..1.0) {
            for p in [l1(), DissipationPotential::euclidean(2)] {
                let r = p.regularize(0.08).unwrap();
                let mid = [t * zx + (1.0 - t) * wx, t * zy + (1.0 - t) * wy];
                let lhs = r.eval(&mid);
                let rhs = t * r.eval(&[zx, zy]) + (1.0 - t) * r.eval(&[wx, wy]);
                prop_assert!(lhs <= rhs + 1e-10);
            }
        }
    }
}
