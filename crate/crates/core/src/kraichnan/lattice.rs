//! Fast evaluation of a conductivity realization on a uniform lattice.
//!
//! Each mode factors as `exp(i phi) exp(i 2pi k1 x) exp(i 2pi k2 y)`. The x
//! and y factors are advanced by complex rotation and re-seeded from exact
//! trigonometric values every [`RESYNC`] steps, so the cost per lattice
//! point and mode is one complex product.

use std::f64::consts::TAU;

use rayon::prelude::*;

use super::KField;

const RESYNC: usize = 64;

/// Conductivity (and optionally its gradient) sampled on `nx * ny` points,
/// stored row-major with `x` fastest.
#[derive(Debug, Clone)]
pub struct LatticeSamples {
    pub nx: usize,
    pub ny: usize,
    pub k: Vec<f64>,
    pub dk_dx: Vec<f64>,
    pub dk_dy: Vec<f64>,
}

impl LatticeSamples {
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.k[iy * self.nx + ix]
    }
}

#[derive(Clone, Copy, Default)]
struct C64 {
    re: f64,
    im: f64,
}

impl C64 {
    #[inline]
    fn cis(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        C64 { re: c, im: s }
    }

    #[inline]
    fn mul(self, o: C64) -> C64 {
        C64 {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }
}

/// Fills `out[j] = exp(i (phase + 2pi k (x0 + (start + j) dx)))`.
fn rotating_factors(out: &mut [C64], k: f64, x0: f64, dx: f64, start: usize, phase: f64) {
    let step = C64::cis(TAU * k * dx);
    let mut cur = C64::default();
    for (j, slot) in out.iter_mut().enumerate() {
        if j % RESYNC == 0 {
            let x = x0 + (start + j) as f64 * dx;
            cur = C64::cis(phase + TAU * k * x);
        } else {
            cur = cur.mul(step);
        }
        *slot = cur;
    }
}

impl KField<'_> {
    /// Samples `K` at `(x0 + i dx, y0 + j dy)` for `i < nx`, `j < ny`.
    ///
    /// With `with_gradient = false` the derivative vectors are left empty.
    pub fn sample_lattice(
        &self,
        x0: f64,
        dx: f64,
        nx: usize,
        y0: f64,
        dy: f64,
        ny: usize,
        with_gradient: bool,
    ) -> LatticeSamples {
        let total = nx * ny;
        let mut k = vec![0.0; total];
        let mut dk_dx = if with_gradient { vec![0.0; total] } else { Vec::new() };
        let mut dk_dy = if with_gradient { vec![0.0; total] } else { Vec::new() };
        if total == 0 {
            return LatticeSamples { nx, ny, k, dk_dx, dk_dy };
        }
        if self.amplitude == 0.0 {
            k.fill(self.kg);
            return LatticeSamples { nx, ny, k, dk_dx, dk_dy };
        }

        // Partial sums per x-chunk: cos sum, k1-weighted sin sum, k2-weighted sin sum.
        // Chunk starts are multiples of RESYNC, so every value is produced by
        // the same rotation sequence whatever the thread count.
        let per_thread = nx.div_ceil(4 * rayon::current_num_threads());
        let chunk = per_thread.div_ceil(RESYNC).clamp(1, 8) * RESYNC;
        let chunks: Vec<(usize, usize)> = (0..nx)
            .step_by(chunk)
            .map(|s| (s, (s + chunk).min(nx)))
            .collect();
        let (k1, k2, phi) = self.modes();
        let partial: Vec<(usize, usize, Vec<f64>, Vec<f64>, Vec<f64>)> = chunks
            .par_iter()
            .map(|&(s, e)| {
                let w = e - s;
                let mut cs = vec![0.0; w * ny];
                let mut sx = if with_gradient { vec![0.0; w * ny] } else { Vec::new() };
                let mut sy = if with_gradient { vec![0.0; w * ny] } else { Vec::new() };
                let mut ex = vec![C64::default(); w];
                let mut ey = vec![C64::default(); ny];
                for m in 0..k1.len() {
                    rotating_factors(&mut ex, k1[m], x0, dx, s, phi[m]);
                    rotating_factors(&mut ey, k2[m], y0, dy, 0, 0.0);
                    for (j, fy) in ey.iter().enumerate() {
                        let row = j * w;
                        if with_gradient {
                            for (i, fx) in ex.iter().enumerate() {
                                let z = fx.mul(*fy);
                                cs[row + i] += z.re;
                                sx[row + i] += k1[m] * z.im;
                                sy[row + i] += k2[m] * z.im;
                            }
                        } else {
                            for (i, fx) in ex.iter().enumerate() {
                                cs[row + i] += fx.re * fy.re - fx.im * fy.im;
                            }
                        }
                    }
                }
                (s, e, cs, sx, sy)
            })
            .collect();

        let a = self.amplitude;
        for (s, e, cs, sx, sy) in partial {
            let w = e - s;
            for j in 0..ny {
                for i in 0..w {
                    let idx = j * nx + s + i;
                    let kk = self.kg * (a * cs[j * w + i]).exp();
                    k[idx] = kk;
                    if with_gradient {
                        dk_dx[idx] = -TAU * a * sx[j * w + i] * kk;
                        dk_dy[idx] = -TAU * a * sy[j * w + i] * kk;
                    }
                }
            }
        }
        LatticeSamples { nx, ny, k, dk_dx, dk_dy }
    }

    /// 1D field (`y = 1`) at `x0 + i dx`, returning `(K, dK/dx)` vectors.
    pub fn sample_line(&self, x0: f64, dx: f64, nx: usize, with_derivative: bool) -> (Vec<f64>, Vec<f64>) {
        let s = self.sample_lattice(x0, dx, nx, 1.0, 0.0, 1, with_derivative);
        (s.k, s.dk_dx)
    }
}
