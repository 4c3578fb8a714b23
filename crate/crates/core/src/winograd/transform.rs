use crate::error::{Error, Result};
use crate::tensor::Mat;

use super::plan::WinogradPlan;

fn expect_shape(what: &str, m: &Mat, rows: usize, cols: usize) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(Error::dim(format!(
            "{what} is {}x{}, expected {rows}x{cols}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

/// `U = G g G^T`, an `n x n` tile from an `r x r` kernel.
pub fn transform_filter(plan: &WinogradPlan, g: &Mat) -> Result<Mat> {
    expect_shape("filter", g, plan.r(), plan.r())?;
    plan.g().matmul(g)?.matmul(&plan.g().transpose())
}

/// `V = B^T d B` for an `n x n` input tile.
pub fn transform_input(plan: &WinogradPlan, d: &Mat) -> Result<Mat> {
    expect_shape("input tile", d, plan.n(), plan.n())?;
    plan.bt().matmul(d)?.matmul(&plan.bt().transpose())
}

/// Element-wise (Hadamard) product.
pub fn ewmm(u: &Mat, v: &Mat) -> Result<Mat> {
    if u.shape() != v.shape() {
        return Err(Error::dim(format!(
            "element-wise product of {}x{} and {}x{}",
            u.rows(),
            u.cols(),
            v.rows(),
            v.cols()
        )));
    }
    let data = u
        .as_slice()
        .iter()
        .zip(v.as_slice())
        .map(|(a, b)| a * b)
        .collect();
    Mat::from_vec(u.rows(), u.cols(), data)
}

/// `Y = A^T M A`, the `m x m` output tile.
pub fn inverse_transform(plan: &WinogradPlan, m: &Mat) -> Result<Mat> {
    expect_shape("Winograd-domain tile", m, plan.n(), plan.n())?;
    plan.at().matmul(m)?.matmul(&plan.at().transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::winograd::make_plan;
    use rand::Rng;

    fn random(rows: usize, cols: usize, rng: &mut impl Rng) -> Mat {
        Mat::from_vec(
            rows,
            cols,
            (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    }

    /// Valid 2D correlation, written out independently of the transforms.
    fn correlate(d: &Mat, g: &Mat) -> Mat {
        let (oh, ow) = (d.rows() - g.rows() + 1, d.cols() - g.cols() + 1);
        let mut y = Mat::zeros(oh, ow);
        for p in 0..oh {
            for q in 0..ow {
                let mut acc = 0.0;
                for i in 0..g.rows() {
                    for j in 0..g.cols() {
                        acc += d.get(p + i, q + j) * g.get(i, j);
                    }
                }
                y.set(p, q, acc);
            }
        }
        y
    }

    #[test]
    fn filter_transform_examples() {
        let plan = make_plan(2, 3).unwrap();
        let z = transform_filter(&plan, &Mat::zeros(3, 3)).unwrap();
        assert_eq!(z, Mat::zeros(4, 4));

        let mut unit = Mat::zeros(3, 3);
        unit.set(0, 0, 1.0);
        let u = transform_filter(&plan, &unit).unwrap();
        let col0 = [1.0, 0.5, 0.5, 0.0];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(u.get(i, j), col0[i] * col0[j]);
            }
        }

        let u = transform_filter(&plan, &Mat::filled(3, 3, 1.0)).unwrap();
        assert_eq!(u.get(1, 1), 9.0 / 4.0);

        assert!(transform_filter(&plan, &Mat::zeros(4, 4)).is_err());
    }

    #[test]
    fn input_transform_examples() {
        let plan = make_plan(2, 3).unwrap();
        // 1D sanity: B^T [1,2,3,4]
        let col = Mat::from_vec(4, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let v = plan.bt().matmul(&col).unwrap();
        assert_eq!(v.as_slice(), &[-2.0, 5.0, 1.0, -2.0]);

        assert_eq!(
            transform_input(&plan, &Mat::zeros(4, 4)).unwrap(),
            Mat::zeros(4, 4)
        );

        let mut e0 = Mat::zeros(4, 4);
        e0.set(0, 0, 1.0);
        assert_eq!(transform_input(&plan, &e0).unwrap(), e0);

        assert!(transform_input(&plan, &Mat::zeros(3, 4)).is_err());
    }

    #[test]
    fn ewmm_examples() {
        let mut rng = crate::seed::rng(3);
        let v = random(4, 4, &mut rng);
        assert_eq!(ewmm(&Mat::filled(4, 4, 1.0), &v).unwrap(), v);
        assert_eq!(
            ewmm(&Mat::filled(4, 4, 2.0), &Mat::filled(4, 4, 2.0)).unwrap(),
            Mat::filled(4, 4, 4.0)
        );
        let u = random(6, 6, &mut rng);
        let w = random(6, 6, &mut rng);
        let p = ewmm(&u, &w).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(p.get(i, j), u.get(i, j) * w.get(i, j));
            }
        }
        assert!(ewmm(&u, &Mat::zeros(4, 4)).is_err());
    }

    #[test]
    fn inverse_transform_examples() {
        let plan = make_plan(2, 3).unwrap();
        let m = Mat::from_vec(4, 1, vec![-2.0, 7.5, 0.5, -2.0]).unwrap();
        let y = plan.at().matmul(&m).unwrap();
        assert_eq!(y.as_slice(), &[6.0, 9.0]);

        assert_eq!(
            inverse_transform(&plan, &Mat::zeros(4, 4)).unwrap(),
            Mat::zeros(2, 2)
        );
        assert!(inverse_transform(&plan, &Mat::zeros(2, 2)).is_err());
    }

    #[test]
    fn full_tile_pipeline_matches_correlation() {
        let mut rng = crate::seed::rng(11);
        for (m, r) in [(2, 3), (4, 3)] {
            let plan = make_plan(m, r).unwrap();
            for _ in 0..200 {
                let d = random(plan.n(), plan.n(), &mut rng);
                let g = random(r, r, &mut rng);
                let u = transform_filter(&plan, &g).unwrap();
                let v = transform_input(&plan, &d).unwrap();
                let y = inverse_transform(&plan, &ewmm(&u, &v).unwrap()).unwrap();
                assert!(y.max_abs_diff(&correlate(&d, &g)) < 1e-10);
            }
        }
    }
}
