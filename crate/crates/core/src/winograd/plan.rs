use crate::error::{Error, Result};
use crate::tensor::{Mat, Scalar};

/// Transform triple for F(m x m, r x r).
///
/// `at` is `m x n`, `bt` is `n x n` and `g` is `n x r`, with `n = m + r - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WinogradPlan {
    m: usize,
    r: usize,
    at: Mat,
    bt: Mat,
    g: Mat,
}

impl WinogradPlan {
    /// Builds a plan from explicit matrices after checking their shapes.
    ///
    /// No algebraic check happens here; see [`WinogradPlan::max_identity_error`].
    pub fn from_matrices(m: usize, r: usize, at: Mat, bt: Mat, g: Mat) -> Result<Self> {
        if m == 0 || r == 0 {
            return Err(Error::dim("plan needs m >= 1 and r >= 1"));
        }
        let n = m + r - 1;
        let check = |name: &str, mat: &Mat, rows: usize, cols: usize| {
            if mat.shape() != (rows, cols) {
                Err(Error::dim(format!(
                    "{name} is {}x{}, expected {rows}x{cols} for F({m}, {r})",
                    mat.rows(),
                    mat.cols()
                )))
            } else if !mat.is_finite() {
                Err(Error::domain(format!("{name} has non-finite entries")))
            } else {
                Ok(())
            }
        };
        check("A^T", &at, m, n)?;
        check("B^T", &bt, n, n)?;
        check("G", &g, n, r)?;
        Ok(WinogradPlan { m, r, at, bt, g })
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn r(&self) -> usize {
        self.r
    }

    /// Input tile edge, `m + r - 1`.
    #[inline]
    pub fn n(&self) -> usize {
        self.m + self.r - 1
    }

    pub fn at(&self) -> &Mat {
        &self.at
    }

    pub fn bt(&self) -> &Mat {
        &self.bt
    }

    pub fn g(&self) -> &Mat {
        &self.g
    }

    /// Scalar multiplies per tile and channel in the element-wise stage.
    pub fn ewmm_multiplies(&self) -> usize {
        self.n() * self.n()
    }

    /// Scalar multiplies for the same m x m output tile by direct convolution.
    pub fn direct_multiplies(&self) -> usize {
        self.m * self.m * self.r * self.r
    }

    /// Evaluates `At * ((G w) . (Bt d))` for 1D inputs.
    pub fn apply_1d(&self, w: &[f64], d: &[f64]) -> Result<Vec<f64>> {
        if w.len() != self.r || d.len() != self.n() {
            return Err(Error::dim(format!(
                "1D F({}, {}) needs |w| = {} and |d| = {}",
                self.m,
                self.r,
                self.r,
                self.n()
            )));
        }
        let gw = self.g.matmul(&Mat::from_vec(self.r, 1, w.to_vec())?)?;
        let bd = self.bt.matmul(&Mat::from_vec(self.n(), 1, d.to_vec())?)?;
        let prod = Mat::from_vec(
            self.n(),
            1,
            gw.as_slice()
                .iter()
                .zip(bd.as_slice())
                .map(|(a, b)| a * b)
                .collect(),
        )?;
        Ok(self.at.matmul(&prod)?.as_slice().to_vec())
    }

    /// Largest deviation of the 1D transform from valid correlation over
    /// `trials` random draws in `[-1, 1]`.
    pub fn max_identity_error(&self, trials: usize, seed: u64) -> f64 {
        use rand::Rng;
        let mut rng = crate::seed::rng(seed);
        let mut worst = 0.0f64;
        for _ in 0..trials {
            let w: Vec<f64> = (0..self.r).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let d: Vec<f64> = (0..self.n()).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let y = self.apply_1d(&w, &d).expect("shapes come from the plan");
            for (i, yi) in y.iter().enumerate() {
                let direct: f64 = (0..self.r).map(|k| d[i + k] * w[k]).sum();
                worst = worst.max((yi - direct).abs());
            }
        }
        worst
    }

    pub(crate) fn cast<T: Scalar>(&self) -> PlanMats<T> {
        PlanMats {
            at: self.at.cast(),
            a: self.at.transpose().cast(),
            bt: self.bt.cast(),
            b: self.bt.transpose().cast(),
            g: self.g.cast(),
            gt: self.g.transpose().cast(),
        }
    }
}

/// Plan matrices converted to the working precision, transposes included.
#[derive(Debug, Clone)]
pub(crate) struct PlanMats<T: Scalar> {
    pub at: Mat<T>,
    pub a: Mat<T>,
    pub bt: Mat<T>,
    pub b: Mat<T>,
    pub g: Mat<T>,
    pub gt: Mat<T>,
}

fn mat(rows: &[&[f64]]) -> Mat {
    Mat::from_rows(rows).expect("hard-coded transform rows are rectangular")
}

/// Returns the hard-coded plan for F(2x2, 3x3) or F(4x4, 3x3).
pub fn make_plan(m: usize, r: usize) -> Result<WinogradPlan> {
    match (m, r) {
        (2, 3) => WinogradPlan::from_matrices(
            2,
            3,
            mat(&[&[1.0, 1.0, 1.0, 0.0], &[0.0, 1.0, -1.0, -1.0]]),
            mat(&[
                &[1.0, 0.0, -1.0, 0.0],
                &[0.0, 1.0, 1.0, 0.0],
                &[0.0, -1.0, 1.0, 0.0],
                &[0.0, 1.0, 0.0, -1.0],
            ]),
            mat(&[
                &[1.0, 0.0, 0.0],
                &[0.5, 0.5, 0.5],
                &[0.5, -0.5, 0.5],
                &[0.0, 0.0, 1.0],
            ]),
        ),
        (4, 3) => WinogradPlan::from_matrices(
            4,
            3,
            mat(&[
                &[1.0, 1.0, 1.0, 1.0, 1.0, 0.0],
                &[0.0, 1.0, -1.0, 2.0, -2.0, 0.0],
                &[0.0, 1.0, 1.0, 4.0, 4.0, 0.0],
                &[0.0, 1.0, -1.0, 8.0, -8.0, 1.0],
            ]),
            mat(&[
                &[4.0, 0.0, -5.0, 0.0, 1.0, 0.0],
                &[0.0, -4.0, -4.0, 1.0, 1.0, 0.0],
                &[0.0, 4.0, -4.0, -1.0, 1.0, 0.0],
                &[0.0, -2.0, -1.0, 2.0, 1.0, 0.0],
                &[0.0, 2.0, -1.0, -2.0, 1.0, 0.0],
                &[0.0, 4.0, 0.0, -5.0, 0.0, 1.0],
            ]),
            mat(&[
                &[1.0 / 4.0, 0.0, 0.0],
                &[-1.0 / 6.0, -1.0 / 6.0, -1.0 / 6.0],
                &[-1.0 / 6.0, 1.0 / 6.0, -1.0 / 6.0],
                &[1.0 / 24.0, 1.0 / 12.0, 1.0 / 6.0],
                &[1.0 / 24.0, -1.0 / 12.0, 1.0 / 6.0],
                &[0.0, 0.0, 1.0],
            ]),
        ),
        _ => Err(Error::UnsupportedPlan { m, r }),
    }
}

/// F(4x4, 3x3) matrices carrying two transcription faults: the last row of
/// A^T ends in 0 instead of 1, and the B^T row
/// `[0, 2, -1, -2, 1, 0]` is missing (zero-filled here to keep the shape).
///
/// Only useful as a regression fixture for the oracle checks.
pub fn misprinted_f4x3() -> WinogradPlan {
    let good = make_plan(4, 3).expect("F(4,3) is supported");
    let mut at = good.at.clone();
    at.set(3, 5, 0.0);
    let mut bt = good.bt.clone();
    for c in 0..6 {
        bt.set(4, c, 0.0);
    }
    WinogradPlan::from_matrices(4, 3, at, bt, good.g.clone()).expect("shapes unchanged")
}

/// The five printed B^T rows of the misprinted F(4x4, 3x3) form.
pub fn misprinted_f4x3_bt_rows() -> Mat {
    mat(&[
        &[4.0, 0.0, -5.0, 0.0, 1.0, 0.0],
        &[0.0, -4.0, -4.0, 1.0, 1.0, 0.0],
        &[0.0, 4.0, -4.0, -1.0, 1.0, 0.0],
        &[0.0, -2.0, -1.0, 2.0, 1.0, 0.0],
        &[0.0, 4.0, 0.0, -5.0, 0.0, 1.0],
    ])
}
