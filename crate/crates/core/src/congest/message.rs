//! Messages as sequences of width-tagged machine words.

use arrayvec::ArrayVec;

/// Bits needed to name one of `n` nodes, `ceil(log2 n)` (at least 1).
pub fn id_bits(n: usize) -> u32 {
    (n.max(2) as u64).next_power_of_two().trailing_zeros()
}

const MAX_WORDS: usize = 4;

/// A single CONGEST message: up to a handful of payload words, each tagged
/// with its declared bit width. The executor rejects messages whose total
/// declared width exceeds the per-edge bandwidth, which keeps every program's
/// message schema honest.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Message {
    words: ArrayVec<(u64, u8), MAX_WORDS>,
}

impl Message {
    pub fn new() -> Message {
        Message::default()
    }

    /// Appends a word; the value must fit its declared width.
    pub fn push(&mut self, value: u64, bits: u32) -> &mut Message {
        assert!((1..=64).contains(&bits), "word width out of range");
        assert!(
            bits == 64 || value < (1u64 << bits),
            "value {value} does not fit {bits} bits"
        );
        self.words.push((value, bits as u8));
        self
    }

    pub fn word(&self, i: usize) -> u64 {
        self.words[i].0
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn total_bits(&self) -> u32 {
        self.words.iter().map(|&(_, b)| b as u32).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn id_bits_matches_ceil_log2() {
        assert_eq!(id_bits(2), 1);
        assert_eq!(id_bits(3), 2);
        assert_eq!(id_bits(6), 3);
        assert_eq!(id_bits(100), 7);
        assert_eq!(id_bits(1000), 10);
        assert_eq!(id_bits(1024), 10);
        assert_eq!(id_bits(1025), 11);
        // Degenerate sizes still get one addressable bit.
        assert_eq!(id_bits(1), 1);
    }

    #[test]
    fn total_bits_sums_declared_widths() {
        let mut m = Message::new();
        m.push(5, 3).push(1, 1).push(1023, 10);
        assert_eq!(m.total_bits(), 14);
        assert_eq!(m.word(2), 1023);
    }

    #[test]
    #[should_panic(expected = "does not fit")]
    fn oversized_value_panics() {
        Message::new().push(8, 3);
    }
}
