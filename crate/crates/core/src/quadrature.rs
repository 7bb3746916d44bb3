//! Gauss–Jacobi rules and product rules on the unit sphere.

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, to_f64, Scalar};

/// Gauss–Jacobi rule for `int_{-1}^{1} f(x) (1 - x)^alpha (1 + x)^beta dx`.
#[derive(Clone, Debug)]
pub struct JacobiRule<T> {
    alpha: T,
    beta: T,
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> JacobiRule<T> {
    pub fn legendre(order: usize) -> Result<Self> {
        Self::new(order, T::zero(), T::zero())
    }

    /// Nodes and weights by the Golub–Welsch eigenvalue method.
    pub fn new(order: usize, alpha: T, beta: T) -> Result<Self> {
        if order == 0 {
            return Err(Error::Config("quadrature order must be positive".into()));
        }
        let neg_one = -T::one();
        if !(alpha > neg_one) || !(beta > neg_one) {
            return Err(Error::domain("Jacobi exponents must exceed -1", to_f64(alpha.min(beta))));
        }
        let one = T::one();
        let two = lit::<T>(2.0);
        let four = lit::<T>(4.0);
        let ab = alpha + beta;
        let mut diag = Vec::with_capacity(order);
        let mut off = vec![T::zero(); order];
        for k in 0..order {
            let kf: T = from_usize(k);
            let a_k = if k == 0 {
                (beta - alpha) / (ab + two)
            } else {
                let s = two * kf + ab;
                (beta * beta - alpha * alpha) / (s * (s + two))
            };
            diag.push(a_k);
            if k + 1 < order {
                let j: T = from_usize(k + 1);
                let s = two * j + ab;
                let b = four * j * (j + alpha) * (j + beta) * (j + ab) / (s * s * (s + one) * (s - one));
                off[k] = b.sqrt();
            }
        }
        let mut first = vec![T::zero(); order];
        first[0] = one;
        implicit_ql(&mut diag, &mut off, &mut first)?;

        let a = to_f64(alpha);
        let b = to_f64(beta);
        let log_mu0 = (a + b + 1.0) * std::f64::consts::LN_2 + libm::lgamma(a + 1.0) + libm::lgamma(b + 1.0)
            - libm::lgamma(a + b + 2.0);
        let mu0: T = lit(log_mu0.exp());

        let mut pairs: Vec<(T, T)> = diag.into_iter().zip(first).map(|(x, z)| (x, mu0 * z * z)).collect();
        pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap_or(std::cmp::Ordering::Equal));
        let (nodes, weights) = pairs.into_iter().unzip();
        Ok(Self {
            alpha,
            beta,
            nodes,
            weights,
        })
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }
    pub fn beta(&self) -> T {
        self.beta
    }
    pub fn order(&self) -> usize {
        self.nodes.len()
    }
    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn integrate<F: FnMut(T) -> T>(&self, mut f: F) -> T {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Implicit QL iteration on a symmetric tridiagonal matrix. On return `diag`
/// holds the eigenvalues and `first` the first components of the normalized
/// eigenvectors.
fn implicit_ql<T: Scalar>(diag: &mut [T], off: &mut [T], first: &mut [T]) -> Result<()> {
    let n = diag.len();
    let two = lit::<T>(2.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Quadrature {
                    estimate: to_f64(off[l].abs()),
                    tolerance: to_f64(T::epsilon()),
                });
            }
            let mut g = (diag[l + 1] - diag[l]) / (two * off[l]);
            let mut r = g.hypot(T::one());
            g = diag[m] - diag[l] + off[l] / (g + if g >= T::zero() { r.abs() } else { -r.abs() });
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == T::zero() {
                    diag[i + 1] = diag[i + 1] - p;
                    off[m] = T::zero();
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + two * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
                let z = first[i + 1];
                first[i + 1] = s * first[i] + c * z;
                first[i] = c * first[i] - s * z;
            }
            if deflated {
                continue;
            }
            diag[l] = diag[l] - p;
            off[l] = g;
            off[m] = T::zero();
        }
    }
    Ok(())
}

/// Quadrature rule on the unit sphere `S^{n-1}` for `n` in {2, 3}.
#[derive(Clone, Debug)]
pub struct SphereRule<T> {
    n_dim: usize,
    points: Vec<[T; 3]>,
    weights: Vec<T>,
}

impl<T: Scalar> SphereRule<T> {
    /// `n = 2`: `order` equispaced points on the circle (trapezoid rule).
    /// `n = 3`: Gauss–Legendre in the polar cosine with `order` nodes times
    /// `2 order` equispaced azimuths.
    pub fn new(n_dim: usize, order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::Config("sphere rule order must be positive".into()));
        }
        let two_pi = T::PI() + T::PI();
        match n_dim {
            2 => {
                let w = two_pi / from_usize(order);
                let points = (0..order)
                    .map(|k| {
                        let phi = w * from_usize(k);
                        [phi.cos(), phi.sin(), T::zero()]
                    })
                    .collect();
                Ok(Self {
                    n_dim,
                    points,
                    weights: vec![w; order],
                })
            }
            3 => {
                let gl = JacobiRule::<T>::legendre(order)?;
                let n_phi = 2 * order;
                let dphi = two_pi / from_usize(n_phi);
                let mut points = Vec::with_capacity(order * n_phi);
                let mut weights = Vec::with_capacity(order * n_phi);
                for (&mu, &wmu) in gl.nodes().iter().zip(gl.weights()) {
                    let sin = (T::one() - mu * mu).max(T::zero()).sqrt();
                    for k in 0..n_phi {
                        let phi = dphi * from_usize(k);
                        points.push([sin * phi.cos(), sin * phi.sin(), mu]);
                        weights.push(wmu * dphi);
                    }
                }
                Ok(Self {
                    n_dim,
                    points,
                    weights,
                })
            }
            _ => Err(Error::Unsupported(format!("sphere quadrature in dimension {n_dim}"))),
        }
    }

    pub fn n_dim(&self) -> usize {
        self.n_dim
    }
    /// Unit vectors; unused trailing components are zero.
    pub fn points(&self) -> &[[T; 3]] {
        &self.points
    }
    pub fn weights(&self) -> &[T] {
        &self.weights
    }
    pub fn len(&self) -> usize {
        self.points.len()
    }
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate<F: FnMut(&[T; 3]) -> T>(&self, mut f: F) -> T {
        self.points.iter().zip(&self.weights).map(|(y, &w)| w * f(y)).sum()
    }
}

/// Surface measure `|S^{n-1}| = 2 pi^{n/2} / Gamma(n/2)`.
pub fn sphere_area(n_dim: usize) -> f64 {
    let h = n_dim as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(h) / libm::tgamma(h)
}
