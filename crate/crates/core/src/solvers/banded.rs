//! Banded LU factorization with partial pivoting.

/// Square band matrix with `kl` sub- and `ku` superdiagonals.
///
/// Row `i` stores columns `i − kl ..= i + ku + kl`; the extra `kl`
/// superdiagonals hold fill-in created by row exchanges.
#[derive(Clone, Debug)]
pub(crate) struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub(crate) fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    fn index(&self, row: usize, col: usize) -> usize {
        debug_assert!(col + self.kl >= row && col <= row + self.ku + self.kl);
        row * self.width + (col + self.kl - row)
    }

    /// Sets entry `(row, col)`, which must lie inside the declared band.
    pub(crate) fn set(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(col + self.kl >= row && col <= row + self.ku);
        let k = self.index(row, col);
        self.data[k] = value;
    }

    fn get(&self, row: usize, col: usize) -> f64 {
        self.data[self.index(row, col)]
    }

    /// Solves `M x = b` in place, consuming the matrix. Returns `None` when
    /// a pivot vanishes.
    pub(crate) fn solve(mut self, b: &mut [f64]) -> Option<()> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for i in 0..n {
            let last_row = (i + kl).min(n - 1);
            let last_col = (i + ku + kl).min(n - 1);
            let mut piv = i;
            let mut best = self.get(i, i).abs();
            for j in i + 1..=last_row {
                let v = self.get(j, i).abs();
                if v > best {
                    best = v;
                    piv = j;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return None;
            }
            if piv != i {
                for c in i..=last_col {
                    let a = self.index(i, c);
                    let bidx = self.index(piv, c);
                    self.data.swap(a, bidx);
                }
                b.swap(i, piv);
            }
            let d = self.get(i, i);
            for j in i + 1..=last_row {
                let f = self.get(j, i) / d;
                if f == 0.0 {
                    continue;
                }
                let k = self.index(j, i);
                self.data[k] = 0.0;
                for c in i + 1..=last_col {
                    let u = self.get(i, c);
                    if u != 0.0 {
                        let k = self.index(j, c);
                        self.data[k] -= f * u;
                    }
                }
                b[j] -= f * b[i];
            }
        }
        for i in (0..n).rev() {
            let last_col = (i + ku + kl).min(n - 1);
            let mut s = b[i];
            for c in i + 1..=last_col {
                s -= self.get(i, c) * b[c];
            }
            b[i] = s / self.get(i, i);
        }
        Some(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_a_pentadiagonal_system_needing_pivots() {
        let n = 9;
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i.saturating_sub(2)..(i + 3).min(n) {
                dense[i][j] = ((i * 7 + j * 3) % 5) as f64 - 1.5;
            }
            dense[i][i] = if i % 3 == 0 { 0.0 } else { 1.0 };
        }
        let mut m = BandMatrix::zeros(n, 2, 2);
        for i in 0..n {
            for j in i.saturating_sub(2)..(i + 3).min(n) {
                m.set(i, j, dense[i][j]);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| i as f64 * 0.5 - 1.0).collect();
        let mut b: Vec<f64> = (0..n).map(|i| (0..n).map(|j| dense[i][j] * x[j]).sum()).collect();
        m.solve(&mut b).unwrap();
        for i in 0..n {
            assert!((b[i] - x[i]).abs() < 1e-10, "{i}: {} vs {}", b[i], x[i]);
        }
    }
}
