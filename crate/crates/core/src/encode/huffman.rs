use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::bitstream::{BitReader, BitStream};
use super::bytes::{put_varint, ByteReader};
use crate::error::{Error, Result};

/// Longest code the encoder emits. Code lengths past this are rare
/// (Fibonacci-like frequency tails) and trigger frequency flattening.
pub const MAX_CODE_LEN: u8 = 32;

/// Symbols are dense table indices; quantization codes never exceed this.
pub const MAX_SYMBOL: u32 = 1 << 24;

const LOOKUP_BITS: u32 = 12;

/// Canonical prefix code. Codes are assigned in `(length, symbol)` order,
/// so the table is fully described by its code lengths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HuffmanTable {
    /// `(symbol, length)` sorted by `(length, symbol)`.
    entries: Vec<(u32, u8)>,
    /// Per-symbol `(code, length)`; length 0 marks absence.
    encode: Vec<(u32, u8)>,
    /// Per-length first canonical code, count and offset into `entries`.
    first_code: [u32; MAX_CODE_LEN as usize + 1],
    count: [u32; MAX_CODE_LEN as usize + 1],
    offset: [u32; MAX_CODE_LEN as usize + 1],
    max_len: u8,
    /// Short-code lookup: `(symbol, length)`, length 0 means "slow path".
    lookup: Vec<(u32, u8)>,
}

/// Builds an optimal prefix code for the nonzero counts in `frequencies`.
pub fn huffman_build(frequencies: impl IntoIterator<Item = (u32, u64)>) -> Result<HuffmanTable> {
    let mut freqs: Vec<(u32, u64)> = frequencies.into_iter().filter(|&(_, c)| c > 0).collect();
    if freqs.is_empty() {
        return Err(Error::EmptyAlphabet);
    }
    freqs.sort_unstable_by_key(|&(s, _)| s);
    if let Some(w) = freqs.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::Corrupt(format!("duplicate symbol {}", w[0].0)));
    }
    if let Some(&(s, _)) = freqs.iter().find(|&&(s, _)| s >= MAX_SYMBOL) {
        return Err(Error::UnknownSymbol(s));
    }
    let mut weights: Vec<u64> = freqs.iter().map(|&(_, c)| c).collect();
    loop {
        let lengths = code_lengths(&weights);
        if lengths.iter().all(|&l| l <= MAX_CODE_LEN as u32) {
            let pairs = freqs
                .iter()
                .zip(&lengths)
                .map(|(&(s, _), &l)| (s, l as u8))
                .collect();
            return HuffmanTable::from_lengths(pairs);
        }
        for w in &mut weights {
            *w = (*w).div_ceil(2);
        }
    }
}

/// Huffman code lengths for `weights` (all positive). Ties are broken by
/// creation order, which makes the result deterministic.
fn code_lengths(weights: &[u64]) -> Vec<u32> {
    let n = weights.len();
    if n == 1 {
        return vec![1];
    }
    let mut parent = vec![usize::MAX; 2 * n - 1];
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| Reverse((w, i)))
        .collect();
    let mut next = n;
    while heap.len() > 1 {
        let Reverse((wa, a)) = heap.pop().unwrap();
        let Reverse((wb, b)) = heap.pop().unwrap();
        parent[a] = next;
        parent[b] = next;
        heap.push(Reverse((wa + wb, next)));
        next += 1;
    }
    // Internal nodes are created after their children, so depths resolve
    // walking down from the root.
    let mut depth = vec![0u32; 2 * n - 1];
    for node in (0..2 * n - 2).rev() {
        depth[node] = depth[parent[node]] + 1;
    }
    depth.truncate(n);
    depth
}

impl HuffmanTable {
    /// Builds the canonical table from `(symbol, length)` pairs, validating
    /// the Kraft inequality.
    pub fn from_lengths(mut pairs: Vec<(u32, u8)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyAlphabet);
        }
        pairs.sort_unstable_by_key(|&(s, l)| (l, s));
        let mut count = [0u32; MAX_CODE_LEN as usize + 1];
        let mut max_symbol = 0;
        for &(s, l) in &pairs {
            if l == 0 || l > MAX_CODE_LEN {
                return Err(Error::Corrupt(format!("code length {l} for symbol {s}")));
            }
            if s >= MAX_SYMBOL {
                return Err(Error::UnknownSymbol(s));
            }
            count[l as usize] += 1;
            max_symbol = max_symbol.max(s);
        }
        let kraft: u128 = (1..=MAX_CODE_LEN as usize)
            .map(|l| (count[l] as u128) << (MAX_CODE_LEN as usize - l))
            .sum();
        if kraft > 1u128 << MAX_CODE_LEN {
            return Err(Error::Corrupt(
                "code lengths violate the Kraft inequality".into(),
            ));
        }

        let mut first_code = [0u32; MAX_CODE_LEN as usize + 1];
        let mut offset = [0u32; MAX_CODE_LEN as usize + 1];
        let mut code = 0u64;
        let mut seen = 0u32;
        for l in 1..=MAX_CODE_LEN as usize {
            code <<= 1;
            first_code[l] = code as u32;
            offset[l] = seen;
            code += count[l] as u64;
            seen += count[l];
        }

        let mut encode = vec![(0u32, 0u8); max_symbol as usize + 1];
        let mut lookup = vec![(0u32, 0u8); 1 << LOOKUP_BITS];
        let mut next = first_code;
        for &(s, l) in &pairs {
            if encode[s as usize].1 != 0 {
                return Err(Error::Corrupt(format!("duplicate symbol {s}")));
            }
            let c = next[l as usize];
            next[l as usize] += 1;
            encode[s as usize] = (c, l);
            if l as u32 <= LOOKUP_BITS {
                let pad = LOOKUP_BITS - l as u32;
                let start = (c as usize) << pad;
                lookup[start..start + (1 << pad)].fill((s, l));
            }
        }
        let max_len = pairs.last().map(|&(_, l)| l).unwrap_or(0);
        Ok(HuffmanTable {
            entries: pairs,
            encode,
            first_code,
            count,
            offset,
            max_len,
            lookup,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Code length of `symbol`, or `None` if absent.
    pub fn code_len(&self, symbol: u32) -> Option<u8> {
        match self.encode.get(symbol as usize) {
            Some(&(_, l)) if l > 0 => Some(l),
            _ => None,
        }
    }

    /// `(code, length)` of `symbol`.
    pub fn code(&self, symbol: u32) -> Option<(u32, u8)> {
        match self.encode.get(symbol as usize) {
            Some(&(c, l)) if l > 0 => Some((c, l)),
            _ => None,
        }
    }

    /// `(symbol, length)` pairs in canonical order.
    pub fn lengths(&self) -> &[(u32, u8)] {
        &self.entries
    }

    /// Sum over symbols of `2^-len`, scaled by `2^MAX_CODE_LEN`.
    pub fn kraft_sum(&self) -> u64 {
        self.entries
            .iter()
            .map(|&(_, l)| 1u64 << (MAX_CODE_LEN - l))
            .sum()
    }

    /// Appends the table: symbol count (u32 LE), ascending symbols as varint
    /// deltas, then one length byte per symbol in the same order.
    pub fn write_to(&self, out: &mut Vec<u8>) {
        let mut by_symbol = self.entries.clone();
        by_symbol.sort_unstable_by_key(|&(s, _)| s);
        out.extend_from_slice(&(by_symbol.len() as u32).to_le_bytes());
        let mut prev = 0u32;
        for &(s, _) in &by_symbol {
            put_varint(out, (s - prev) as u64);
            prev = s;
        }
        out.extend(by_symbol.iter().map(|&(_, l)| l));
    }

    pub(crate) fn read_from(r: &mut ByteReader<'_>) -> Result<Self> {
        let n = r.u32()? as usize;
        if n == 0 || n > MAX_SYMBOL as usize {
            return Err(r.error(format!("bad Huffman symbol count {n}")));
        }
        let mut symbols = Vec::with_capacity(n.min(1 << 16));
        let mut prev = 0u64;
        for i in 0..n {
            let d = r.varint()?;
            if i > 0 && d == 0 {
                return Err(r.error("Huffman symbols not strictly increasing"));
            }
            prev += d;
            if prev >= MAX_SYMBOL as u64 {
                return Err(r.error(format!("Huffman symbol {prev} out of range")));
            }
            symbols.push(prev as u32);
        }
        let lengths = r.take(n)?;
        let pairs = symbols.into_iter().zip(lengths.iter().copied()).collect();
        HuffmanTable::from_lengths(pairs).map_err(|e| r.error(e.to_string()))
    }

    #[inline]
    pub(crate) fn get(&self, r: &mut BitReader<'_>) -> Result<u32> {
        let (s, l) = self.lookup[r.peek(LOOKUP_BITS) as usize];
        if l > 0 {
            r.skip(l as u32)?;
            return Ok(s);
        }
        for l in LOOKUP_BITS as usize + 1..=self.max_len as usize {
            let c = r.peek(l as u32) as u32;
            let k = c.wrapping_sub(self.first_code[l]);
            if c >= self.first_code[l] && k < self.count[l] {
                r.skip(l as u32)?;
                return Ok(self.entries[(self.offset[l] + k) as usize].0);
            }
        }
        // A prefix that matches no code: either garbage or a truncated tail.
        if r.remaining() < self.max_len as u64 {
            return Err(Error::Truncated {
                offset: r.position(),
                needed: self.max_len as u64 - r.remaining(),
            });
        }
        Err(Error::Corrupt(format!(
            "no Huffman code matches at bit {}",
            r.position()
        )))
    }
}

pub fn huffman_encode(symbols: &[u32], table: &HuffmanTable) -> Result<BitStream> {
    let mut bytes = Vec::with_capacity(symbols.len() / 2 + 8);
    let bit_length = huffman_encode_into(symbols, table, &mut bytes)?;
    Ok(BitStream { bytes, bit_length })
}

/// Appends the coded symbols to `bytes` (zero-padded to a whole byte) and
/// returns the bit length.
pub fn huffman_encode_into(
    symbols: &[u32],
    table: &HuffmanTable,
    bytes: &mut Vec<u8>,
) -> Result<u64> {
    // Hot loop of every SZ codec, so it keeps its accumulator in locals
    // rather than going through `BitWriter`. Codes are at most 32 bits and
    // fewer than 32 bits stay pending, so the accumulator never overflows;
    // bits above the pending ones are stale and get truncated on flush.
    let start = bytes.len();
    let mut acc = 0u64;
    let mut filled = 0u32;
    for &s in symbols {
        let (code, len) = match table.encode.get(s as usize) {
            Some(&(c, l)) if l > 0 => (c as u64, l as u32),
            _ => return Err(Error::UnknownSymbol(s)),
        };
        acc = (acc << len) | code;
        filled += len;
        if filled >= 32 {
            filled -= 32;
            bytes.extend_from_slice(&((acc >> filled) as u32).to_be_bytes());
        }
    }
    let bit_length = (bytes.len() - start) as u64 * 8 + filled as u64;
    if filled > 0 {
        let tail = ((acc << (32 - filled)) as u32).to_be_bytes();
        bytes.extend_from_slice(&tail[..filled.div_ceil(8) as usize]);
    }
    Ok(bit_length)
}

pub fn huffman_decode(stream: &BitStream, table: &HuffmanTable, n: usize) -> Result<Vec<u32>> {
    let mut r = stream.reader();
    (0..n).map(|_| table.get(&mut r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn weighted_bits(table: &HuffmanTable, freqs: &[(u32, u64)]) -> u64 {
        freqs
            .iter()
            .map(|&(s, c)| c * table.code_len(s).unwrap() as u64)
            .sum()
    }

    /// Minimum weighted path length over every full binary tree with the
    /// given leaves, by exhaustive merging.
    fn brute_force_min_cost(weights: &[u64]) -> u64 {
        if weights.len() <= 1 {
            return 0;
        }
        let mut best = u64::MAX;
        for i in 0..weights.len() {
            for j in i + 1..weights.len() {
                let merged = weights[i] + weights[j];
                let mut rest: Vec<u64> = weights
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != i && k != j)
                    .map(|(_, &w)| w)
                    .collect();
                rest.push(merged);
                best = best.min(merged + brute_force_min_cost(&rest));
            }
        }
        best
    }

    #[test]
    fn single_symbol_gets_one_bit() {
        let t = huffman_build([(7, 1)]).unwrap();
        assert_eq!(t.code_len(7), Some(1));
        let s = huffman_encode(&[7, 7, 7, 7], &t).unwrap();
        assert_eq!(s.bit_length, 4);
        assert_eq!(huffman_decode(&s, &t, 4).unwrap(), vec![7, 7, 7, 7]);
    }

    #[test]
    fn symmetric_pair() {
        let t = huffman_build([(0, 5), (1, 5)]).unwrap();
        assert_eq!(t.code_len(0), Some(1));
        assert_eq!(t.code_len(1), Some(1));
    }

    #[test]
    fn four_symbol_cost_matches_exhaustive_search() {
        let freqs = [(0, 5), (1, 2), (2, 1), (3, 1)];
        let t = huffman_build(freqs).unwrap();
        let oracle = brute_force_min_cost(&[5, 2, 1, 1]);
        assert_eq!(oracle, 15);
        assert_eq!(weighted_bits(&t, &freqs), oracle);
    }

    #[test]
    fn empty_alphabet_is_error() {
        assert!(matches!(huffman_build([]), Err(Error::EmptyAlphabet)));
        assert!(matches!(huffman_build([(3, 0)]), Err(Error::EmptyAlphabet)));
    }

    #[test]
    fn empty_input_roundtrip() {
        let t = huffman_build([(1, 1)]).unwrap();
        let s = huffman_encode(&[], &t).unwrap();
        assert_eq!(s.bit_length, 0);
        assert!(huffman_decode(&s, &t, 0).unwrap().is_empty());
    }

    #[test]
    fn unknown_symbol_and_truncation() {
        let t = huffman_build([(1, 3), (2, 1), (3, 1)]).unwrap();
        assert!(matches!(
            huffman_encode(&[4], &t),
            Err(Error::UnknownSymbol(4))
        ));
        let s = huffman_encode(&[1, 2, 3], &t).unwrap();
        assert!(huffman_decode(&s, &t, 4).is_err());
    }

    #[test]
    fn long_codes_are_limited() {
        // Fibonacci weights force a degenerate tree deeper than 32.
        let mut fib = vec![1u64, 1];
        while fib.len() < 45 {
            let k = fib.len();
            fib.push(fib[k - 1] + fib[k - 2]);
        }
        let freqs: Vec<(u32, u64)> = fib
            .iter()
            .enumerate()
            .map(|(i, &c)| (i as u32, c))
            .collect();
        let t = huffman_build(freqs.iter().copied()).unwrap();
        assert!(t.lengths().iter().all(|&(_, l)| l <= MAX_CODE_LEN));
        assert!(t.kraft_sum() <= 1 << MAX_CODE_LEN);
        let symbols: Vec<u32> = (0..45).chain(0..45).collect();
        let s = huffman_encode(&symbols, &t).unwrap();
        assert_eq!(huffman_decode(&s, &t, symbols.len()).unwrap(), symbols);
    }

    #[test]
    fn table_serialization_roundtrip() {
        let t = huffman_build([(3, 10), (700, 4), (65536, 1), (12, 1)]).unwrap();
        let mut out = Vec::new();
        t.write_to(&mut out);
        let mut r = ByteReader::new(&out, "t");
        assert_eq!(HuffmanTable::read_from(&mut r).unwrap(), t);
        assert!(r.is_empty());
    }

    proptest! {
        #[test]
        fn optimal_on_small_alphabets(weights in prop::collection::vec(1u64..50, 1..7)) {
            let freqs: Vec<(u32, u64)> = weights.iter().enumerate().map(|(i, &w)| (i as u32, w)).collect();
            let t = huffman_build(freqs.iter().copied()).unwrap();
            let expected = if weights.len() == 1 { weights[0] } else { brute_force_min_cost(&weights) };
            prop_assert_eq!(weighted_bits(&t, &freqs), expected);
        }

        #[test]
        fn roundtrip_and_kraft(symbols in prop::collection::vec(0u32..300, 1..2000)) {
            let mut hist = std::collections::BTreeMap::new();
            for &s in &symbols {
                *hist.entry(s).or_insert(0u64) += 1;
            }
            let t = huffman_build(hist.iter().map(|(&s, &c)| (s, c))).unwrap();
            prop_assert!(t.kraft_sum() <= 1 << MAX_CODE_LEN);
            let s = huffman_encode(&symbols, &t).unwrap();
            prop_assert_eq!(huffman_decode(&s, &t, symbols.len()).unwrap(), symbols.clone());

            // Never worse than fixed width over the alphabet, and within one
            // bit per symbol of the entropy.
            let k = hist.len() as f64;
            let n = symbols.len() as f64;
            prop_assert!(s.bit_length as f64 <= n * k.log2().ceil().max(1.0));
            let entropy: f64 = hist.values().map(|&c| { let p = c as f64 / n; -p * p.log2() }).sum();
            prop_assert!(s.bit_length as f64 >= n * entropy - 1e-6);
            prop_assert!(s.bit_length as f64 <= n * (entropy + 1.0) + 1e-6);
        }
    }
}
