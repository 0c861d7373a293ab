//! Target-state constructors (GHZ, Dicke, W, Haar-random) and JSON
//! persistence.
//!
//! Amplitude indexing is party-1-major: the flat index of the computational
//! string `(j_1, ..., j_n)` is `sum_k j_k * prod_{l>k} d_l`, so the first
//! party owns the most significant digit.
//!
//! Haar-random sampling draws from `ChaCha12` with the stream id set to the
//! caller-supplied index, and converts uniform variates to standard normals
//! with the Box-Muller transform. Both choices are fixed so that sweeps are
//! byte-reproducible across machines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::{C64, QsvError, Result};

const NORM_TOL: f64 = 1e-10;

/// Normalized pure state over a qudit register with per-party dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    dims: Vec<usize>,
    amps: Vec<C64>,
}

impl PureState {
    /// Build a state, checking length consistency and normalization.
    pub fn new(dims: Vec<usize>, amps: Vec<C64>) -> Result<Self> {
        let total: usize = dims.iter().product();
        if dims.is_empty() || dims.iter().any(|&d| d < 2) {
            return Err(QsvError::InvalidArgument(
                "every party dimension must be at least 2".into(),
            ));
        }
        if amps.len() != total {
            return Err(QsvError::DimensionMismatch(format!(
                "{} amplitudes for dims {:?} (expected {total})",
                amps.len(),
                dims
            )));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(QsvError::NotNormalized((norm - 1.0).abs()));
        }
        Ok(Self { dims, amps })
    }

    /// Normalize a raw amplitude vector. The caller guarantees the vector is
    /// not (numerically) zero.
    pub(crate) fn normalized(dims: Vec<usize>, mut amps: Vec<C64>) -> Self {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        Self { dims, amps }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn num_parties(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.amps.len()
    }

    /// Stride of party `k` in the flat index.
    pub fn stride(&self, party: usize) -> usize {
        self.dims[party + 1..].iter().product()
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// Fidelity `|<self|other>|^2`.
    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Reorder parties so that new party `k` is old party `perm[k]`.
    pub fn permute_parties(&self, perm: &[usize]) -> PureState {
        assert_eq!(perm.len(), self.dims.len());
        let new_dims: Vec<usize> = perm.iter().map(|&p| self.dims[p]).collect();
        let n = perm.len();
        let old_strides: Vec<usize> = (0..n).map(|p| self.stride(p)).collect();
        let mut new_amps = vec![C64::new(0.0, 0.0); self.amps.len()];
        let mut digits = vec![0usize; n];
        for (new_idx, amp) in new_amps.iter_mut().enumerate() {
            // Decompose the new flat index into digits of the permuted register.
            let mut rem = new_idx;
            for k in (0..n).rev() {
                digits[k] = rem % new_dims[k];
                rem /= new_dims[k];
            }
            let old_idx: usize =
                (0..n).map(|k| digits[k] * old_strides[perm[k]]).sum();
            *amp = self.amps[old_idx];
        }
        PureState { dims: new_dims, amps: new_amps }
    }
}

/// GHZ state `(1/sqrt d) sum_i |i>^{(x) n}`.
pub fn ghz(d: usize, n: usize) -> Result<PureState> {
    if d < 2 || n < 2 {
        return Err(QsvError::InvalidArgument(format!("ghz requires d >= 2, n >= 2 (got {d}, {n})")));
    }
    let total = d.pow(n as u32);
    let mut amps = vec![C64::new(0.0, 0.0); total];
    let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    for i in 0..d {
        // |i...i> has flat index i * (d^n - 1)/(d - 1).
        let idx: usize = (0..n).map(|k| i * d.pow((n - 1 - k) as u32)).sum();
        amps[idx] = amp;
    }
    PureState::new(vec![d; n], amps)
}

/// Label of a qudit Dicke state: a nonincreasing positive partition of `n`
/// together with the local dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DickeLabel {
    pub partition: Vec<usize>,
    pub local_dim: usize,
}

impl DickeLabel {
    pub fn new(partition: Vec<usize>, local_dim: usize) -> Result<Self> {
        let n: usize = partition.iter().sum();
        let parts = partition.len();
        if parts < 2
            || partition.iter().any(|&p| p == 0)
            || partition.windows(2).any(|w| w[0] < w[1])
        {
            return Err(QsvError::InvalidArgument(format!(
                "partition {partition:?} must be nonincreasing, positive, with at least 2 parts"
            )));
        }
        if parts > local_dim || parts > n {
            return Err(QsvError::InvalidArgument(format!(
                "partition {partition:?} needs {parts} symbols but d = {local_dim}, n = {n}"
            )));
        }
        Ok(Self { partition, local_dim })
    }

    pub fn num_parties(&self) -> usize {
        self.partition.iter().sum()
    }
}

/// Dicke state: equal superposition over all strings with `partition[i]`
/// symbols equal to `i`.
pub fn dicke(label: &DickeLabel) -> Result<PureState> {
    let n = label.num_parties();
    let d = label.local_dim;
    let strings = multiset_strings(&label.partition);
    let amp = C64::new(1.0 / (strings.len() as f64).sqrt(), 0.0);
    let mut amps = vec![C64::new(0.0, 0.0); d.pow(n as u32)];
    for s in &strings {
        let idx: usize = s.iter().fold(0, |acc, &sym| acc * d + sym);
        amps[idx] = amp;
    }
    PureState::new(vec![d; n], amps)
}

/// All distinct strings with `partition[i]` symbols equal to `i`.
fn multiset_strings(partition: &[usize]) -> Vec<Vec<usize>> {
    let n: usize = partition.iter().sum();
    let mut out = Vec::new();
    let mut counts = partition.to_vec();
    let mut current = Vec::with_capacity(n);
    fn rec(counts: &mut [usize], current: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if current.len() == n {
            out.push(current.clone());
            return;
        }
        for sym in 0..counts.len() {
            if counts[sym] > 0 {
                counts[sym] -= 1;
                current.push(sym);
                rec(counts, current, n, out);
                current.pop();
                counts[sym] += 1;
            }
        }
    }
    rec(&mut counts, &mut current, n, &mut out);
    out
}

/// Every valid Dicke label for the given `(d, n)`, in descending
/// lexicographic order of the partition.
pub fn enumerate_dicke_labels(d: usize, n: usize) -> Vec<DickeLabel> {
    let max_parts = d.min(n);
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn rec(
        remaining: usize,
        max_part: usize,
        max_parts: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if remaining == 0 {
            if current.len() >= 2 {
                out.push(current.clone());
            }
            return;
        }
        if current.len() == max_parts {
            return;
        }
        for part in (1..=max_part.min(remaining)).rev() {
            current.push(part);
            rec(remaining - part, part, max_parts, current, out);
            current.pop();
        }
    }
    let mut partitions = Vec::new();
    rec(n, n, max_parts, &mut current, &mut partitions);
    for p in partitions {
        out.push(DickeLabel::new(p, d).expect("enumerated partition is valid"));
    }
    out
}

/// The n-qubit W state `(1/sqrt n) sum` over Hamming-weight-1 strings.
pub fn w_state(n: usize) -> Result<PureState> {
    if n < 2 {
        return Err(QsvError::InvalidArgument(format!("w_state requires n >= 2 (got {n})")));
    }
    let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
    let amp = C64::new(1.0 / (n as f64).sqrt(), 0.0);
    for k in 0..n {
        amps[1 << (n - 1 - k)] = amp;
    }
    PureState::new(vec![2; n], amps)
}

/// Standard complex Gaussian via Box-Muller: `(g1 + i g2)/sqrt 2`.
fn complex_gaussian(rng: &mut ChaCha12Rng) -> C64 {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // in (0, 1]
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = 2.0 * std::f64::consts::PI * u2;
    C64::new(r * theta.cos(), r * theta.sin()) / 2.0f64.sqrt()
}

/// Haar-random pure state: a normalized vector of i.i.d. standard complex
/// Gaussians, drawn from the `(seed, stream)` ChaCha12 stream.
pub fn haar_random(dims: &[usize], seed: u64) -> Result<PureState> {
    haar_random_stream(dims, seed, 0)
}

/// Same as [`haar_random`] but with an explicit stream index, used to derive
/// independent reproducible samples in parallel sweeps.
pub fn haar_random_stream(dims: &[usize], seed: u64, stream: u64) -> Result<PureState> {
    let total: usize = dims.iter().product();
    if total < 2 || dims.iter().any(|&d| d < 2) {
        return Err(QsvError::InvalidArgument(format!("invalid dims {dims:?}")));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let amps: Vec<C64> = (0..total).map(|_| complex_gaussian(&mut rng)).collect();
    Ok(PureState::normalized(dims.to_vec(), amps))
}

#[derive(Serialize, Deserialize)]
struct StateFile {
    dims: Vec<usize>,
    re: Vec<f64>,
    im: Vec<f64>,
}

/// Serialize to the JSON state format `{"dims": [...], "re": [...], "im": [...]}`.
pub fn state_to_json(state: &PureState) -> String {
    let file = StateFile {
        dims: state.dims.clone(),
        re: state.amps.iter().map(|a| a.re).collect(),
        im: state.amps.iter().map(|a| a.im).collect(),
    };
    serde_json::to_string(&file).expect("state serialization cannot fail")
}

/// Parse the JSON state format, enforcing dimension consistency, finiteness,
/// and normalization within `1e-8`.
pub fn state_from_json(json: &str) -> Result<PureState> {
    let file: StateFile =
        serde_json::from_str(json).map_err(|e| QsvError::MalformedState(e.to_string()))?;
    let total: usize = file.dims.iter().product();
    if file.dims.is_empty() || file.dims.iter().any(|&d| d < 2) {
        return Err(QsvError::MalformedState(format!("invalid dims {:?}", file.dims)));
    }
    if file.re.len() != total || file.im.len() != total {
        return Err(QsvError::MalformedState(format!(
            "expected {total} amplitudes for dims {:?}, got {} re / {} im",
            file.dims,
            file.re.len(),
            file.im.len()
        )));
    }
    if file.re.iter().chain(&file.im).any(|x| !x.is_finite()) {
        return Err(QsvError::MalformedState("non-finite amplitude".into()));
    }
    let amps: Vec<C64> =
        file.re.iter().zip(&file.im).map(|(&re, &im)| C64::new(re, im)).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(QsvError::MalformedState(format!("norm {norm} violates normalization")));
    }
    Ok(PureState { dims: file.dims, amps })
}

pub fn save_state(state: &PureState, path: &std::path::Path) -> Result<()> {
    std::fs::write(path, state_to_json(state))?;
    Ok(())
}

pub fn load_state(path: &std::path::Path) -> Result<PureState> {
    let json = std::fs::read_to_string(path)?;
    state_from_json(&json)
}
