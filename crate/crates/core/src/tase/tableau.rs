use crate::error::{Error, Result};

/// Explicit Runge-Kutta coefficients `(alpha, b, c)` with `c_i = sum_j alpha_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitTableau {
    pub name: String,
    alpha: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl ExplicitTableau {
    pub fn new(name: &str, alpha: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        let s = b.len();
        if s == 0 || alpha.len() != s || alpha.iter().any(|row| row.len() != s) {
            return Err(Error::InvalidInput(format!(
                "tableau '{name}' has inconsistent sizes"
            )));
        }
        for (i, row) in alpha.iter().enumerate() {
            if row[i..].iter().any(|v| *v != 0.0) {
                return Err(Error::InvalidInput(format!(
                    "tableau '{name}' is not strictly lower triangular"
                )));
            }
        }
        let total: f64 = b.iter().sum();
        if (total - 1.0).abs() > 1e-14 {
            return Err(Error::InvalidInput(format!(
                "weights of '{name}' sum to {total}"
            )));
        }
        let c = alpha.iter().map(|row| row.iter().sum()).collect();
        Ok(Self {
            name: name.to_string(),
            alpha,
            b,
            c,
        })
    }

    pub fn heun() -> Self {
        Self::new("heun", vec![vec![0.0, 0.0], vec![1.0, 0.0]], vec![0.5, 0.5])
            .expect("valid tableau")
    }

    pub fn kutta3() -> Self {
        Self::new(
            "kutta3",
            vec![
                vec![0.0, 0.0, 0.0],
                vec![0.5, 0.0, 0.0],
                vec![-1.0, 2.0, 0.0],
            ],
            vec![1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
        )
        .expect("valid tableau")
    }

    pub fn rk4() -> Self {
        Self::new(
            "rk4",
            vec![
                vec![0.0, 0.0, 0.0, 0.0],
                vec![0.5, 0.0, 0.0, 0.0],
                vec![0.0, 0.5, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0],
            ],
            vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
        )
        .expect("valid tableau")
    }

    /// Forward Euler, only useful with a first-order operator.
    pub fn euler() -> Self {
        Self::new("euler", vec![vec![0.0]], vec![1.0]).expect("valid tableau")
    }

    /// The shipped tableau with `s = p`.
    pub fn for_order(p: usize) -> Result<Self> {
        match p {
            1 => Ok(Self::euler()),
            2 => Ok(Self::heun()),
            3 => Ok(Self::kutta3()),
            4 => Ok(Self::rk4()),
            _ => Err(Error::UnsupportedOrder(p)),
        }
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    pub fn alpha(&self, i: usize, j: usize) -> f64 {
        self.alpha[i][j]
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// Residuals of the rooted-tree order conditions up to order 4.
    ///
    /// Returns the largest violation among the conditions of order `<= p`.
    pub fn order_defect(&self, p: usize) -> f64 {
        let s = self.stages();
        let b = &self.b;
        let c = &self.c;
        let a = &self.alpha;
        let ac: Vec<f64> = (0..s)
            .map(|i| (0..s).map(|j| a[i][j] * c[j]).sum())
            .collect();
        let ac2: Vec<f64> = (0..s)
            .map(|i| (0..s).map(|j| a[i][j] * c[j] * c[j]).sum())
            .collect();
        let aac: Vec<f64> = (0..s)
            .map(|i| (0..s).map(|j| a[i][j] * ac[j]).sum())
            .collect();
        let dot = |u: &[f64]| -> f64 { b.iter().zip(u).map(|(x, y)| x * y).sum() };
        let ones = vec![1.0; s];
        let c2: Vec<f64> = c.iter().map(|v| v * v).collect();
        let c3: Vec<f64> = c.iter().map(|v| v * v * v).collect();
        let c_ac: Vec<f64> = c.iter().zip(&ac).map(|(x, y)| x * y).collect();
        let mut conds = vec![(1, dot(&ones) - 1.0)];
        conds.push((2, dot(c) - 0.5));
        conds.push((3, dot(&c2) - 1.0 / 3.0));
        conds.push((3, dot(&ac) - 1.0 / 6.0));
        conds.push((4, dot(&c3) - 0.25));
        conds.push((4, dot(&c_ac) - 1.0 / 8.0));
        conds.push((4, dot(&ac2) - 1.0 / 12.0));
        conds.push((4, dot(&aac) - 1.0 / 24.0));
        conds
            .into_iter()
            .filter(|(o, _)| *o <= p)
            .fold(0.0_f64, |m, (_, r)| m.max(r.abs()))
    }
}
