//! Dense vectors over the two-element field and rank by elimination.

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct BitVector {
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn unit(len: usize, index: usize) -> Self {
        let mut v = Self::zeros(len);
        v.flip(index);
        v
    }

    pub fn flip(&mut self, index: usize) {
        self.words[index / 64] ^= 1 << (index % 64);
    }

    fn xor_assign(&mut self, other: &BitVector) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    fn leading_bit(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .rev()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i * 64 + 63 - w.leading_zeros() as usize)
    }

    fn get(&self, index: usize) -> bool {
        self.words[index / 64] >> (index % 64) & 1 == 1
    }
}

/// Rank of the span of `vectors`.
pub(crate) fn rank<'a, I>(vectors: I) -> usize
where
    I: IntoIterator<Item = &'a BitVector>,
{
    // basis[pivot] holds a reduced vector whose leading bit is `pivot`
    let mut basis: Vec<(usize, BitVector)> = Vec::new();
    for v in vectors {
        let mut v = v.clone();
        while let Some(lead) = v.leading_bit() {
            match basis.iter().find(|(p, _)| *p == lead) {
                Some((_, b)) => v.xor_assign(b),
                None => {
                    basis.push((lead, v));
                    break;
                }
            }
        }
    }
    debug_assert!(basis.iter().all(|(p, b)| b.get(*p)));
    basis.len()
}
