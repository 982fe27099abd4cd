//! Gaussian individual constraint as a single cone row:
//! `‖z Σ^{1/2}(b + Dx)‖ ≤ e − bᵀμ − (a + Dᵀμ)ᵀx` with `z = Φ⁻¹(1 − ε)`.
//! At `ε = 1/2` the norm vanishes and the row is linear.

use crate::model::{symmetric_sqrt, CcProgram, GaussianCc, GeneratorSpec, LinearFrame};
use crate::program::{AffineExpr, DeterministicProgram, Method, Provenance};
use crate::special::normal_quantile;

use super::{frame_program, ReformError};

pub fn gaussian_socp(frame: &LinearFrame, gcc: &GaussianCc) -> Result<DeterministicProgram, ReformError> {
    gcc.validate().map_err(|e| ReformError::Gaussian(e.to_string()))?;
    let n = gcc.a.len();
    if frame.n() != n {
        return Err(ReformError::Gaussian(format!(
            "frame has {} variables, constraint has {n}",
            frame.n()
        )));
    }
    frame.validate()?;
    let mut dp = frame_program(
        frame,
        Provenance::new(Method::Gaussian, format!("eps={}", gcc.epsilon), None),
    );
    append_gaussian_row(&mut dp, gcc, "gauss");
    Ok(dp)
}

/// Reads a one-row program under a Gaussian generator and reformulates it.
pub fn gaussian_program(prog: &CcProgram, gen: &GeneratorSpec) -> Result<DeterministicProgram, ReformError> {
    let gcc = GaussianCc::from_program(prog, gen).map_err(|e| ReformError::Gaussian(e.to_string()))?;
    gaussian_socp(prog.frame(), &gcc)
}

fn append_gaussian_row(dp: &mut DeterministicProgram, gcc: &GaussianCc, name: &str) {
    let d = gcc.b.len();
    let n = gcc.a.len();
    let z = normal_quantile(1.0 - gcc.epsilon);
    let root = symmetric_sqrt(&gcc.sigma);
    let mut lhs = Vec::with_capacity(d);
    for rk in &root {
        // z · Σ^{1/2}_k · (b + Dx)
        let mut coefs = vec![0.0; n];
        let mut constant = 0.0;
        for (l, &s) in rk.iter().enumerate() {
            if s == 0.0 {
                continue;
            }
            constant += z * s * gcc.b[l];
            for (c, &dl) in coefs.iter_mut().zip(&gcc.d_matrix[l]) {
                *c += z * s * dl;
            }
        }
        lhs.push(AffineExpr::dense(0, &coefs, constant));
    }
    let mean_b: f64 = gcc.b.iter().zip(&gcc.mu).map(|(b, m)| b * m).sum();
    let mut coefs = vec![0.0; n];
    for (j, c) in coefs.iter_mut().enumerate() {
        let dtmu: f64 = (0..d).map(|l| gcc.d_matrix[l][j] * gcc.mu[l]).sum();
        *c = -(gcc.a[j] + dtmu);
    }
    let rhs = AffineExpr::dense(0, &coefs, gcc.e - mean_b);
    dp.add_soc(name, lhs, rhs);
}
