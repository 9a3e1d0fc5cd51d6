use std::fmt;

/// A finite word over the alphabet `{0, …, N-1}`.
///
/// The empty word stands for the unit on either side of a term
/// `S_J S_K*`. Ordering is the derived lexicographic order on letters.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<u8>);

impl MultiIndex {
    pub fn new(letters: Vec<u8>) -> Self {
        MultiIndex(letters)
    }

    pub fn empty() -> Self {
        MultiIndex(Vec::new())
    }

    pub fn letter(a: u8) -> Self {
        MultiIndex(vec![a])
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn into_letters(self) -> Vec<u8> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True if every letter is below `n`.
    pub fn fits(&self, n: usize) -> bool {
        self.0.iter().all(|&a| (a as usize) < n)
    }

    pub fn concat(&self, tail: &[u8]) -> MultiIndex {
        let mut v = Vec::with_capacity(self.0.len() + tail.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(tail);
        MultiIndex(v)
    }

    pub fn prefix(&self, len: usize) -> MultiIndex {
        MultiIndex(self.0[..len].to_vec())
    }

    /// If `self = prefix · T`, returns `T`.
    pub fn strip_prefix(&self, prefix: &MultiIndex) -> Option<&[u8]> {
        self.0.strip_prefix(prefix.letters())
    }

    /// Position of this word in the lexicographic enumeration of words of
    /// the same length, leftmost letter most significant.
    pub fn index(&self, n: usize) -> usize {
        self.0.iter().fold(0, |acc, &a| acc * n + a as usize)
    }

    /// Inverse of [`MultiIndex::index`].
    pub fn from_index(n: usize, len: usize, mut idx: usize) -> MultiIndex {
        let mut v = vec![0u8; len];
        for slot in v.iter_mut().rev() {
            *slot = (idx % n) as u8;
            idx /= n;
        }
        MultiIndex(v)
    }

    /// All `n^len` words of length `len` in lexicographic order.
    pub fn all(n: usize, len: usize) -> impl Iterator<Item = MultiIndex> {
        let count = n.pow(len as u32);
        (0..count).map(move |i| MultiIndex::from_index(n, len, i))
    }
}

impl From<Vec<u8>> for MultiIndex {
    fn from(v: Vec<u8>) -> Self {
        MultiIndex(v)
    }
}

impl From<&[u8]> for MultiIndex {
    fn from(v: &[u8]) -> Self {
        MultiIndex(v.to_vec())
    }
}

impl std::ops::Deref for MultiIndex {
    type Target = [u8];

    fn deref(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip_is_lexicographic() {
        let words: Vec<_> = MultiIndex::all(3, 2).collect();
        assert_eq!(words.len(), 9);
        assert_eq!(words[0].letters(), &[0, 0]);
        assert_eq!(words[1].letters(), &[0, 1]);
        assert_eq!(words[3].letters(), &[1, 0]);
        for (i, w) in words.iter().enumerate() {
            assert_eq!(w.index(3), i);
        }
    }

    #[test]
    fn empty_word_has_one_enumeration() {
        let words: Vec<_> = MultiIndex::all(4, 0).collect();
        assert_eq!(words, vec![MultiIndex::empty()]);
        assert_eq!(MultiIndex::empty().index(4), 0);
    }

    #[test]
    fn strip_prefix_matches_cuntz_rule() {
        let k = MultiIndex::new(vec![1, 0]);
        let a = MultiIndex::new(vec![1, 0, 1]);
        assert_eq!(a.strip_prefix(&k), Some(&[1u8][..]));
        assert_eq!(k.strip_prefix(&a), None);
    }
}
