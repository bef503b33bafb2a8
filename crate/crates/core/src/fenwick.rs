/// Binary indexed tree over `0..n` holding small non-negative counts.
#[derive(Debug, Clone)]
pub(crate) struct Fenwick {
    data: Vec<u32>,
}

impl Fenwick {
    pub fn new(n: usize) -> Self {
        Self {
            data: vec![0; n + 1],
        }
    }

    pub fn add(&mut self, i: usize, delta: i32) {
        let mut i = i + 1;
        while i < self.data.len() {
            self.data[i] = self.data[i].wrapping_add_signed(delta);
            i += i & i.wrapping_neg();
        }
    }

    /// Sum over `[0, i)`.
    pub fn prefix(&self, i: usize) -> u64 {
        let mut i = i;
        let mut s = 0u64;
        while i > 0 {
            s += u64::from(self.data[i]);
            i &= i - 1;
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_sums() {
        let mut f = Fenwick::new(10);
        let mut plain = [0i64; 10];
        for (i, d) in [(3, 1), (7, 1), (0, 1), (3, -1), (9, 1), (5, 1)] {
            f.add(i, d);
            plain[i] += i64::from(d);
            for k in 0..=10 {
                assert_eq!(f.prefix(k) as i64, plain[..k].iter().sum::<i64>());
            }
        }
    }
}
