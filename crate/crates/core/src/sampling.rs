//! Bootstrap sampling by index.
//!
//! Instead of materialising `k` resampled copies of the training data, the
//! forest keeps a `k × N` Data-Sampling-Index table: row `i` lists the `N`
//! record indexes drawn with replacement for tree `i`. Every feature subset
//! is read through the same table, so the data volume does not grow with `k`.
//!
//! Row `i` is drawn from `ChaCha8Rng` seeded with
//! `seed::derive(seed, "dsi", i)` using `Rng::gen_range(0..N)`.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::seed;

const DSI_MAGIC: &[u8; 8] = b"PRFDSI01";

/// Index storage: 32-bit cells while `N` fits, 64-bit otherwise.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Cells {
    Narrow(Vec<u32>),
    Wide(Vec<u64>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DsiTable {
    k: usize,
    n: usize,
    seed: u64,
    cells: Cells,
}

impl DsiTable {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of stored index cells (`k · N`).
    pub fn cell_count(&self) -> u64 {
        self.k as u64 * self.n as u64
    }

    /// The bootstrap sample of tree `tree` as row indexes (a multiset).
    pub fn row(&self, tree: usize) -> Vec<usize> {
        let range = tree * self.n..(tree + 1) * self.n;
        match &self.cells {
            Cells::Narrow(v) => v[range].iter().map(|&i| i as usize).collect(),
            Cells::Wide(v) => v[range].iter().map(|&i| i as usize).collect(),
        }
    }

    /// Per-row draw counts for tree `tree`.
    pub fn multiplicities(&self, tree: usize) -> Vec<u32> {
        let mut counts = vec![0u32; self.n];
        for i in self.row(tree) {
            counts[i] += 1;
        }
        counts
    }

    /// Writes magic, `k`, `N`, seed and the row-major indexes, all
    /// little-endian, indexes as u64.
    pub fn write_to<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        out.write_all(DSI_MAGIC)?;
        out.write_all(&(self.k as u64).to_le_bytes())?;
        out.write_all(&(self.n as u64).to_le_bytes())?;
        out.write_all(&self.seed.to_le_bytes())?;
        match &self.cells {
            Cells::Narrow(v) => {
                for &i in v {
                    out.write_all(&u64::from(i).to_le_bytes())?;
                }
            }
            Cells::Wide(v) => {
                for &i in v {
                    out.write_all(&i.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(32 + 8 * self.cell_count() as usize);
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn read_from<R: Read>(input: &mut R) -> Result<Self> {
        let bad = |what: &str| Error::InvalidArgument(format!("DSI file: {what}"));
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
        if &magic != DSI_MAGIC {
            return Err(bad("bad magic"));
        }
        let mut word = [0u8; 8];
        let mut next = |input: &mut R| -> Result<u64> {
            input.read_exact(&mut word).map_err(|_| bad("truncated"))?;
            Ok(u64::from_le_bytes(word))
        };
        let k = next(input)? as usize;
        let n = next(input)? as usize;
        let seed = next(input)?;
        let mut cells = Vec::with_capacity(k.saturating_mul(n));
        for _ in 0..k * n {
            let i = next(input)?;
            if i >= n as u64 {
                return Err(bad("index out of range"));
            }
            cells.push(i);
        }
        Ok(DsiTable {
            k,
            n,
            seed,
            cells: compact(n, cells),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(&mut bytes.as_slice())
    }

    /// Hex SHA-256 of the serialized table.
    pub fn digest(&self) -> String {
        seed::digest_hex(&self.to_bytes())
    }

    /// Builds a table from explicit rows; used for hand-made samples.
    pub fn from_rows(n: usize, rows: &[Vec<usize>], seed: u64) -> Result<Self> {
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("every DSI row needs N entries".into()));
        }
        if rows.iter().flatten().any(|&i| i >= n) {
            return Err(Error::InvalidArgument("DSI index out of range".into()));
        }
        let cells = rows.iter().flatten().map(|&i| i as u64).collect();
        Ok(DsiTable {
            k: rows.len(),
            n,
            seed,
            cells: compact(n, cells),
        })
    }
}

fn compact(n: usize, cells: Vec<u64>) -> Cells {
    if n as u64 <= u64::from(u32::MAX) {
        Cells::Narrow(cells.into_iter().map(|i| i as u32).collect())
    } else {
        Cells::Wide(cells)
    }
}

/// Draws `k` bootstrap samples of size `n`.
pub fn build_dsi(n: usize, k: usize, seed: u64) -> Result<DsiTable> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidArgument(format!(
            "DSI table needs N >= 1 and k >= 1 (got N={n}, k={k})"
        )));
    }
    let narrow = n as u64 <= u64::from(u32::MAX);
    let cells = if narrow {
        let mut v = Vec::with_capacity(k * n);
        for tree in 0..k {
            let mut rng = seed::rng(seed, seed::DSI_STREAM, tree as u64);
            v.extend((0..n).map(|_| rng.gen_range(0..n as u64) as u32));
        }
        Cells::Narrow(v)
    } else {
        let mut v = Vec::with_capacity(k * n);
        for tree in 0..k {
            let mut rng = seed::rng(seed, seed::DSI_STREAM, tree as u64);
            v.extend((0..n).map(|_| rng.gen_range(0..n as u64)));
        }
        Cells::Wide(v)
    };
    Ok(DsiTable { k, n, seed, cells })
}

/// Rows never drawn into one tree's bootstrap sample.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OobSet {
    pub tree_index: usize,
    pub row_indexes: Vec<usize>,
}

impl OobSet {
    pub fn len(&self) -> usize {
        self.row_indexes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.row_indexes.is_empty()
    }

    pub fn contains(&self, row: usize) -> bool {
        self.row_indexes.binary_search(&row).is_ok()
    }
}

pub fn oob_indices(t: &DsiTable, tree: usize) -> Result<OobSet> {
    if tree >= t.k() {
        return Err(Error::InvalidArgument(format!(
            "tree index {tree} out of range for k = {}",
            t.k()
        )));
    }
    let counts = t.multiplicities(tree);
    let row_indexes = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c == 0)
        .map(|(i, _)| i)
        .collect();
    Ok(OobSet {
        tree_index: tree,
        row_indexes,
    })
}
