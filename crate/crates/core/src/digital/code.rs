//! Linear codes for one-way syndrome reconciliation.
//!
//! Bob sends the syndrome of his bits; Alice searches for the word with that
//! syndrome closest to her noisy copy.

use rand::Rng;

use crate::rng::{stream, Role};

pub trait SyndromeCode {
    /// Block length in bits.
    fn len(&self) -> usize;

    /// Bits a party must send so the syndrome is fully known; an upper bound
    /// on what the syndrome reveals.
    fn disclosed_bits(&self) -> usize;

    fn syndrome(&self, word: &[u8]) -> Vec<u8>;

    /// The word with the given syndrome that best explains `noisy` under
    /// a BSC with crossover `p`, or `None` if decoding does not converge.
    fn decode(&self, noisy: &[u8], syndrome: &[u8], p: f64) -> Option<Vec<u8>>;
}

/// Sparse parity-check code with column weight 3, decoded by sum-product
/// belief propagation.
#[derive(Debug, Clone)]
pub struct LdpcCode {
    n: usize,
    /// For each check, the variables it touches (edge order).
    check_ptr: Vec<usize>,
    check_vars: Vec<usize>,
    /// For each variable, indices into `check_vars` of its edges.
    var_edges: Vec<Vec<usize>>,
    max_iters: usize,
}

const VAR_DEGREE: usize = 3;
const LLR_CLAMP: f64 = 40.0;

impl LdpcCode {
    /// Random construction with `n_checks` checks, near-equal check degrees,
    /// and greedy avoidance of length-4 cycles.
    pub fn new(n: usize, n_checks: usize, seed: u64) -> Self {
        assert!(n_checks >= VAR_DEGREE && n_checks <= n, "need 3 <= checks <= n");
        let mut rng = stream(seed, Role::CodeConstruction);
        let edges = n * VAR_DEGREE;
        let base = edges / n_checks;
        let extra = edges % n_checks;
        let mut capacity: Vec<usize> = (0..n_checks).map(|c| base + usize::from(c < extra)).collect();
        let mut open: Vec<usize> = (0..n_checks).collect();
        let mut check_adj: Vec<Vec<usize>> = vec![Vec::with_capacity(base + 1); n_checks];
        let mut var_checks: Vec<[usize; VAR_DEGREE]> = Vec::with_capacity(n);

        for v in 0..n {
            let mut chosen: Vec<usize> = Vec::with_capacity(VAR_DEGREE);
            for _ in 0..VAR_DEGREE {
                let pick = pick_check(&mut rng, &open, &chosen, &check_adj, n_checks);
                chosen.push(pick);
                check_adj[pick].push(v);
                if capacity[pick] > 0 {
                    capacity[pick] -= 1;
                    if capacity[pick] == 0 {
                        let pos = open.iter().position(|&c| c == pick).expect("open check");
                        open.swap_remove(pos);
                    }
                }
            }
            var_checks.push([chosen[0], chosen[1], chosen[2]]);
        }

        let mut check_ptr = Vec::with_capacity(n_checks + 1);
        let mut check_vars = Vec::with_capacity(edges);
        let mut var_edges = vec![Vec::with_capacity(VAR_DEGREE); n];
        check_ptr.push(0);
        for adj in &check_adj {
            for &v in adj {
                var_edges[v].push(check_vars.len());
                check_vars.push(v);
            }
            check_ptr.push(check_vars.len());
        }
        LdpcCode {
            n,
            check_ptr,
            check_vars,
            var_edges,
            max_iters: 150,
        }
    }

    pub fn with_max_iters(mut self, iters: usize) -> Self {
        self.max_iters = iters;
        self
    }

    pub fn n_checks(&self) -> usize {
        self.check_ptr.len() - 1
    }

    fn check_range(&self, c: usize) -> std::ops::Range<usize> {
        self.check_ptr[c]..self.check_ptr[c + 1]
    }

    /// Number of variable pairs sharing two or more checks.
    pub fn four_cycles(&self) -> usize {
        let mut seen = std::collections::HashMap::new();
        for c in 0..self.n_checks() {
            let vars = &self.check_vars[self.check_range(c)];
            for (i, &a) in vars.iter().enumerate() {
                for &b in &vars[i + 1..] {
                    *seen.entry((a.min(b), a.max(b))).or_insert(0usize) += 1;
                }
            }
        }
        seen.values().filter(|&&k| k > 1).count()
    }
}

fn pick_check<R: Rng>(rng: &mut R, open: &[usize], chosen: &[usize], adj: &[Vec<usize>], n_checks: usize) -> usize {
    let creates_cycle = |c: usize| {
        chosen
            .iter()
            .any(|&prev| adj[c].iter().any(|v| adj[prev].contains(v)))
    };
    if !open.is_empty() {
        for _ in 0..64 {
            let c = open[rng.random_range(0..open.len())];
            if !chosen.contains(&c) && !creates_cycle(c) {
                return c;
            }
        }
        if let Some(&c) = open.iter().find(|c| !chosen.contains(c)) {
            return c;
        }
    }
    // Every open check is already used by this variable: overfill another.
    loop {
        let c = rng.random_range(0..n_checks);
        if !chosen.contains(&c) {
            return c;
        }
    }
}

impl SyndromeCode for LdpcCode {
    fn len(&self) -> usize {
        self.n
    }

    fn disclosed_bits(&self) -> usize {
        self.n_checks()
    }

    fn syndrome(&self, word: &[u8]) -> Vec<u8> {
        (0..self.n_checks())
            .map(|c| self.check_vars[self.check_range(c)].iter().fold(0u8, |acc, &v| acc ^ word[v]))
            .collect()
    }

    fn decode(&self, noisy: &[u8], syndrome: &[u8], p: f64) -> Option<Vec<u8>> {
        // Decode the error pattern e = word ^ noisy, whose syndrome is known.
        let mut target = self.syndrome(noisy);
        target.iter_mut().zip(syndrome).for_each(|(t, s)| *t ^= s);
        let prior = ((1.0 - p) / p).ln().clamp(-LLR_CLAMP, LLR_CLAMP);
        let n_edges = self.check_vars.len();
        let mut to_check = vec![prior; n_edges];
        let mut to_var = vec![0.0f64; n_edges];
        let mut err = vec![0u8; self.n];
        let mut tanh_buf = Vec::new();

        for _ in 0..self.max_iters {
            for c in 0..self.n_checks() {
                let range = self.check_range(c);
                tanh_buf.clear();
                tanh_buf.extend(to_check[range.clone()].iter().map(|m| (m / 2.0).tanh()));
                let sign = if target[c] == 1 { -1.0 } else { 1.0 };
                for (k, e) in range.enumerate() {
                    let prod: f64 = tanh_buf
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != k)
                        .map(|(_, t)| t)
                        .product();
                    let prod = prod.clamp(-1.0 + 1e-15, 1.0 - 1e-15);
                    to_var[e] = (sign * 2.0 * prod.atanh()).clamp(-LLR_CLAMP, LLR_CLAMP);
                }
            }
            for v in 0..self.n {
                let edges = &self.var_edges[v];
                let total: f64 = prior + edges.iter().map(|&e| to_var[e]).sum::<f64>();
                err[v] = u8::from(total < 0.0);
                for &e in edges {
                    to_check[e] = (total - to_var[e]).clamp(-LLR_CLAMP, LLR_CLAMP);
                }
            }
            if self.syndrome(&err) == target {
                return Some(noisy.iter().zip(&err).map(|(a, b)| a ^ b).collect());
            }
        }
        None
    }
}

/// Extended Hamming code [2^r, 2^r - r - 1, 4].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct ExtHamming {
    r: u32,
}

impl ExtHamming {
    fn n(self) -> usize {
        1 << self.r
    }

    fn k(self) -> usize {
        self.n() - self.r as usize - 1
    }

    /// Syndrome: r position bits (XOR of indices of ones) plus overall parity.
    fn syndrome(self, word: impl Iterator<Item = u8>) -> (usize, u8) {
        word.enumerate()
            .filter(|&(_, b)| b == 1)
            .fold((0, 0), |(pos, par), (i, _)| (pos ^ i, par ^ 1))
    }

    /// Single-error correction from an error syndrome: the flipped position,
    /// or `None` when no correction is indicated (clean or double error).
    fn locate(self, syn: (usize, u8)) -> Option<usize> {
        match syn {
            (pos, 1) => Some(pos),
            _ => None,
        }
    }
}

/// Product of two extended Hamming codes, applied blockwise over the input
/// (zero-padded to a whole number of `n1 x n2` blocks) and decoded by
/// alternating row and column single-error correction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HammingProductCode {
    len: usize,
    row: ExtHamming,
    col: ExtHamming,
    passes: usize,
}

impl HammingProductCode {
    /// `r` picks the component code length 2^r (both dimensions).
    pub fn new(len: usize, r: u32) -> Self {
        assert!((2..=10).contains(&r), "component code length must be 4..=1024");
        let c = ExtHamming { r };
        HammingProductCode {
            len,
            row: c,
            col: c,
            passes: 8,
        }
    }

    fn block_size(&self) -> usize {
        self.row.n() * self.col.n()
    }

    fn blocks(&self) -> usize {
        self.len.div_ceil(self.block_size())
    }

    fn padded(&self, word: &[u8]) -> Vec<u8> {
        let mut v = word.to_vec();
        v.resize(self.blocks() * self.block_size(), 0);
        v
    }

    /// Row syndromes then column syndromes of one block, each packed as
    /// r position bits plus parity.
    fn block_syndrome(&self, block: &[u8]) -> Vec<u8> {
        let (n1, n2) = (self.row.n(), self.col.n());
        let mut out = Vec::new();
        let mut push = |(pos, par): (usize, u8), r: u32| {
            for b in 0..r {
                out.push(((pos >> b) & 1) as u8);
            }
            out.push(par);
        };
        for i in 0..n2 {
            push(self.row.syndrome(block[i * n1..(i + 1) * n1].iter().copied()), self.row.r);
        }
        for j in 0..n1 {
            push(self.col.syndrome((0..n2).map(|i| block[i * n1 + j])), self.col.r);
        }
        out
    }

    fn unpack_syn(bits: &[u8], r: u32) -> (usize, u8) {
        let pos = (0..r as usize).fold(0, |acc, b| acc | ((bits[b] as usize) << b));
        (pos, bits[r as usize])
    }
}

impl SyndromeCode for HammingProductCode {
    fn len(&self) -> usize {
        self.len
    }

    /// Rank of the product parity checks: n1 n2 - k1 k2 per block.
    fn disclosed_bits(&self) -> usize {
        self.blocks() * (self.block_size() - self.row.k() * self.col.k())
    }

    fn syndrome(&self, word: &[u8]) -> Vec<u8> {
        self.padded(word)
            .chunks(self.block_size())
            .flat_map(|b| self.block_syndrome(b))
            .collect()
    }

    fn decode(&self, noisy: &[u8], syndrome: &[u8], _p: f64) -> Option<Vec<u8>> {
        let (n1, n2) = (self.row.n(), self.col.n());
        let (s1, s2) = (self.row.r as usize + 1, self.col.r as usize + 1);
        let per_block = n2 * s1 + n1 * s2;
        let mut word = self.padded(noisy);
        for (b, block) in word.chunks_mut(self.block_size()).enumerate() {
            let want = &syndrome[b * per_block..(b + 1) * per_block];
            for _ in 0..self.passes {
                let mut have = self.block_syndrome(block);
                have.iter_mut().zip(want).for_each(|(h, w)| *h ^= w);
                if have.iter().all(|&x| x == 0) {
                    break;
                }
                for i in 0..n2 {
                    let syn = Self::unpack_syn(&have[i * s1..(i + 1) * s1], self.row.r);
                    if let Some(pos) = self.row.locate(syn) {
                        block[i * n1 + pos] ^= 1;
                    }
                }
                let mut have = self.block_syndrome(block);
                have.iter_mut().zip(want).for_each(|(h, w)| *h ^= w);
                for j in 0..n1 {
                    let off = n2 * s1 + j * s2;
                    let syn = Self::unpack_syn(&have[off..off + s2], self.col.r);
                    if let Some(pos) = self.col.locate(syn) {
                        block[pos * n1 + j] ^= 1;
                    }
                }
            }
        }
        word.truncate(self.len);
        (self.syndrome(&word) == syndrome).then_some(word)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digital::bits::Bits;

    fn noisy_copy(word: &Bits, p: f64, seed: u64) -> Vec<u8> {
        word.xor(&Bits::flips(&mut stream(seed, Role::BobFlips), word.len(), p).unwrap())
            .into_vec()
    }

    #[test]
    fn ldpc_structure() {
        let code = LdpcCode::new(2000, 1000, 1);
        assert_eq!(code.check_vars.len(), 6000);
        assert!(code.var_edges.iter().all(|e| e.len() == 3));
        let degs: Vec<usize> = (0..1000).map(|c| code.check_range(c).len()).collect();
        assert!(degs.iter().all(|&d| (5..=8).contains(&d)), "{:?}", degs.iter().max());
        assert!(code.four_cycles() < 20, "{}", code.four_cycles());
    }

    #[test]
    fn ldpc_syndrome_is_linear() {
        let code = LdpcCode::new(500, 300, 2);
        let a = Bits::random(&mut stream(1, Role::SecretBits), 500);
        let b = Bits::random(&mut stream(2, Role::SecretBits), 500);
        let sa = code.syndrome(a.as_slice());
        let sb = code.syndrome(b.as_slice());
        let sab = code.syndrome(a.xor(&b).as_slice());
        assert_eq!(sab, sa.iter().zip(&sb).map(|(x, y)| x ^ y).collect::<Vec<_>>());
    }

    #[test]
    fn ldpc_corrects_moderate_noise() {
        let n = 4000;
        let code = LdpcCode::new(n, 2400, 3);
        let mut ok = 0;
        for seed in 0..10 {
            let word = Bits::random(&mut stream(seed, Role::SecretBits), n);
            let noisy = noisy_copy(&word, 0.05, seed);
            if code.decode(&noisy, &code.syndrome(word.as_slice()), 0.05).as_deref() == Some(word.as_slice()) {
                ok += 1;
            }
        }
        assert_eq!(ok, 10);
    }

    #[test]
    fn ldpc_reports_failure_on_hopeless_noise() {
        let n = 1000;
        let code = LdpcCode::new(n, 300, 4).with_max_iters(20);
        let word = Bits::random(&mut stream(9, Role::SecretBits), n);
        let noisy = noisy_copy(&word, 0.3, 9);
        assert!(code.decode(&noisy, &code.syndrome(word.as_slice()), 0.3).is_none());
    }

    #[test]
    fn hamming_component_corrects_single_errors() {
        let c = ExtHamming { r: 4 };
        assert_eq!((c.n(), c.k()), (16, 11));
        for pos in 0..16 {
            let mut e = vec![0u8; 16];
            e[pos] = 1;
            assert_eq!(c.locate(c.syndrome(e.iter().copied())), Some(pos));
        }
        let mut e = vec![0u8; 16];
        e[3] = 1;
        e[7] = 1;
        assert_eq!(c.locate(c.syndrome(e.iter().copied())), None);
    }

    #[test]
    fn hamming_product_corrects_sparse_errors() {
        let len = 1000; // pads to 4 blocks of 256
        let code = HammingProductCode::new(len, 4);
        assert_eq!(code.disclosed_bits(), 4 * (256 - 121));
        let word = Bits::random(&mut stream(5, Role::SecretBits), len);
        let syn = code.syndrome(word.as_slice());
        let mut noisy = word.clone().into_vec();
        for &i in &[0, 17, 300, 301, 999] {
            noisy[i] ^= 1;
        }
        assert_eq!(code.decode(&noisy, &syn, 0.01).unwrap(), word.into_vec());
    }

    #[test]
    fn hamming_product_at_low_noise() {
        let len = 4096;
        let code = HammingProductCode::new(len, 5);
        let mut ok = 0;
        for seed in 0..20 {
            let word = Bits::random(&mut stream(seed, Role::SecretBits), len);
            let noisy = noisy_copy(&word, 0.002, seed);
            if code.decode(&noisy, &code.syndrome(word.as_slice()), 0.002).as_deref() == Some(word.as_slice()) {
                ok += 1;
            }
        }
        assert!(ok >= 19, "{ok}");
    }
}
