//! Bitset domains for all search variables in one flat word vector, so a
//! search node is copied with a single allocation.

use std::sync::Arc;

#[derive(Debug)]
pub(crate) struct Layout {
    offset: Vec<i64>,
    start: Vec<usize>,
    nwords: Vec<usize>,
    total: usize,
}

impl Layout {
    /// `bounds[x] = (lo, hi)` inclusive.
    pub fn new(bounds: &[(i64, i64)]) -> Self {
        let mut offset = Vec::with_capacity(bounds.len());
        let mut start = Vec::with_capacity(bounds.len());
        let mut nwords = Vec::with_capacity(bounds.len());
        let mut total = 0;
        for &(lo, hi) in bounds {
            let size = (hi - lo + 1).max(0) as usize;
            let words = size.div_ceil(64).max(1);
            offset.push(lo);
            start.push(total);
            nwords.push(words);
            total += words;
        }
        Layout {
            offset,
            start,
            nwords,
            total,
        }
    }

    pub fn len(&self) -> usize {
        self.offset.len()
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Domains {
    layout: Arc<Layout>,
    words: Vec<u64>,
}

impl Domains {
    pub fn full(layout: Arc<Layout>, bounds: &[(i64, i64)]) -> Self {
        let mut words = vec![0u64; layout.total];
        for (x, &(lo, hi)) in bounds.iter().enumerate() {
            let size = (hi - lo + 1).max(0) as usize;
            let start = layout.start[x];
            for i in 0..size {
                words[start + i / 64] |= 1 << (i % 64);
            }
        }
        Domains { layout, words }
    }

    fn slice(&self, x: usize) -> &[u64] {
        let s = self.layout.start[x];
        &self.words[s..s + self.layout.nwords[x]]
    }

    pub fn size(&self, x: usize) -> usize {
        self.slice(x).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self, x: usize) -> bool {
        self.slice(x).iter().all(|&w| w == 0)
    }

    pub fn is_fixed(&self, x: usize) -> bool {
        self.size(x) == 1
    }

    #[cfg(test)]
    pub fn contains(&self, x: usize, value: i64) -> bool {
        let i = value - self.layout.offset[x];
        if i < 0 {
            return false;
        }
        let i = i as usize;
        match self.slice(x).get(i / 64) {
            Some(w) => w & (1 << (i % 64)) != 0,
            None => false,
        }
    }

    pub fn min(&self, x: usize) -> Option<i64> {
        let off = self.layout.offset[x];
        for (wi, &w) in self.slice(x).iter().enumerate() {
            if w != 0 {
                return Some(off + (wi * 64 + w.trailing_zeros() as usize) as i64);
            }
        }
        None
    }

    pub fn value(&self, x: usize) -> Option<i64> {
        if self.is_fixed(x) {
            self.min(x)
        } else {
            None
        }
    }

    pub fn values(&self, x: usize) -> Vec<i64> {
        let off = self.layout.offset[x];
        let mut out = Vec::new();
        for (wi, &w) in self.slice(x).iter().enumerate() {
            let mut w = w;
            while w != 0 {
                let b = w.trailing_zeros() as usize;
                out.push(off + (wi * 64 + b) as i64);
                w &= w - 1;
            }
        }
        out
    }

    /// Returns true when the value was present.
    pub fn remove(&mut self, x: usize, value: i64) -> bool {
        let i = value - self.layout.offset[x];
        if i < 0 {
            return false;
        }
        let i = i as usize;
        if i / 64 >= self.layout.nwords[x] {
            return false;
        }
        let w = &mut self.words[self.layout.start[x] + i / 64];
        let bit = 1 << (i % 64);
        let had = *w & bit != 0;
        *w &= !bit;
        had
    }

    pub fn fix(&mut self, x: usize, value: i64) {
        let s = self.layout.start[x];
        for w in &mut self.words[s..s + self.layout.nwords[x]] {
            *w = 0;
        }
        let i = (value - self.layout.offset[x]) as usize;
        self.words[s + i / 64] |= 1 << (i % 64);
    }

    /// Raw words of `x`; vars sharing a domain share word alignment.
    pub fn words(&self, x: usize) -> &[u64] {
        self.slice(x)
    }

    /// Clears every bit of `x` that is set in `mask`. Returns true on change.
    pub fn remove_mask(&mut self, x: usize, mask: &[u64]) -> bool {
        let s = self.layout.start[x];
        let mut changed = false;
        for (w, m) in self.words[s..s + self.layout.nwords[x]].iter_mut().zip(mask) {
            let next = *w & !m;
            changed |= next != *w;
            *w = next;
        }
        changed
    }

    pub fn var_count(&self) -> usize {
        self.layout.len()
    }
}
